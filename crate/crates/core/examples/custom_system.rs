//! Checking a system that is only reachable through `reset` and `step`.
//!
//! The system here is a lossy channel simulated in plain code: each `send`
//! is delivered with probability 0.9, and after two losses in a row it
//! jams for good.

use probcheck::blackbox::Sut;
use probcheck::ltl::parse;
use probcheck::orchestrator::{run, NullSink, RunConfig};
use probcheck::{Alphabet, InputId, OutputId, OutputSymbol};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Channel {
    alphabet: Alphabet,
    losses: u8,
    rng: ChaCha8Rng,
    steps: u64,
}

const IDLE: OutputId = 0;
const DELIVERED: OutputId = 1;
const LOST: OutputId = 2;
const JAMMED: OutputId = 3;

impl Channel {
    fn new(seed: u64) -> Self {
        let outputs = ["idle", "delivered", "lost", "jammed"].map(OutputSymbol::named).to_vec();
        Channel {
            alphabet: Alphabet {
                inputs: vec!["send".into(), "wait".into()],
                outputs,
            },
            losses: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            steps: 0,
        }
    }
}

impl Sut for Channel {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn reset(&mut self) -> OutputId {
        self.steps += 1;
        self.losses = 0;
        IDLE
    }

    fn step(&mut self, input: InputId) -> OutputId {
        self.steps += 1;
        if self.losses >= 2 {
            return JAMMED;
        }
        if input == 1 {
            return IDLE;
        }
        if self.rng.gen_bool(0.9) {
            self.losses = 0;
            DELIVERED
        } else {
            self.losses += 1;
            if self.losses >= 2 {
                JAMMED
            } else {
                LOST
            }
        }
    }

    fn steps_taken(&self) -> u64 {
        self.steps
    }
}

fn main() {
    let formula = parse("F[0,6) jammed").unwrap();
    let mut sut = Channel::new(11);
    let cfg = RunConfig {
        budget: 300_000,
        ..RunConfig::default()
    };
    let report = run(&mut sut, &formula, &cfg, &mut NullSink).unwrap();
    // always sending is optimal: no two consecutive losses in five sends
    let mut clear = [1.0, 0.0];
    for _ in 0..5 {
        clear = [0.9 * (clear[0] + clear[1]), 0.1 * clear[0]];
    }
    let truth = 1.0 - clear[0] - clear[1];
    println!(
        "{:?} after {} steps: {} states, estimate {:?}",
        report.termination,
        report.steps_taken,
        report.hypothesis.mdp.num_states(),
        report.final_estimate
    );
    println!("hypothesis value {:.4}, exact {truth:.4}", report.hypothesis_value);
}
