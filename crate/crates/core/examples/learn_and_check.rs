//! The whole loop on the two-state reference system: learn, synthesize,
//! validate, and report the estimated maximum probability of `F[0,3) q`.

use probcheck::blackbox::wrap_whitebox;
use probcheck::ltl::parse;
use probcheck::mdp::two_state_example;
use probcheck::model_file::write_mdp;
use probcheck::orchestrator::{run, NullSink, RunConfig};

fn main() {
    let formula = parse("F[0,3) q").unwrap();
    let mut sut = wrap_whitebox(two_state_example(), 7);
    let cfg = RunConfig {
        budget: 200_000,
        seed: 7,
        ..RunConfig::default()
    };
    let report = run(&mut sut, &formula, &cfg, &mut NullSink).unwrap();

    println!("termination:   {:?}", report.termination);
    println!("estimate:      {:?}", report.final_estimate);
    println!("model value:   {:.4}", report.hypothesis_value);
    println!("steps on SUT:  {}", report.steps_taken);
    println!("learned model:\n{}", write_mdp(&report.hypothesis.mdp));
}
