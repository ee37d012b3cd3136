//! The outer loop: learn a hypothesis, synthesize a strategy on it, validate
//! against the system, and feed counterexamples back until the hypothesis
//! survives validation or the step budget runs out.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blackbox::Sut;
use crate::learner::{Hypothesis, LearnerConfig, LearnerError, ObservationTable, Stabilization};
use crate::ltl::{Formula, LtlError, Monitor};
use crate::mdp::{FiniteMemoryStrategy, Trace};
use crate::pmc::{self, PmcError};
use crate::validator::{
    compare_with_strategy, construct_witness, equivalence_test_random, CompareParams, DeltaMode,
    EqOutcome, EqTestParams, LengthPolicy, ValidationVerdict,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Formula(#[from] PmcError),
    #[error(transparent)]
    Monitor(#[from] LtlError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("system and formula disagree: {0}")]
    Alphabet(String),
}

impl RunError {
    pub fn is_unsupported_formula(&self) -> bool {
        matches!(self, RunError::Formula(PmcError::UnsupportedFormula { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Traces per strategy-guided comparison.
    pub n: usize,
    /// Comparison threshold; a t-test significance by default.
    pub tdelta: f64,
    pub delta_mode: DeltaMode,
    /// Confidence parameter of the witness bound.
    pub wdelta: f64,
    /// Significance of the row compatibility test.
    pub alpha: f64,
    pub n_min: u64,
    pub refine_attempts: usize,
    /// Total SUT steps (resets included) the run may spend.
    pub budget: u64,
    pub seed: u64,
    pub eq: EqTestParams,
    pub check_every: usize,
    pub lengths: LengthPolicy,
    /// Consecutive clean rounds needed to stop before the budget.
    pub conv_rounds: usize,
    /// When false, only the budget ends a run.
    pub stop_on_convergence: bool,
    /// Steps between curve points recorded independently of validation.
    pub curve_every: u64,
    pub pmc_tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let learner = LearnerConfig::default();
        RunConfig {
            n: 5000,
            tdelta: 0.025,
            delta_mode: DeltaMode::Significance,
            wdelta: 0.025,
            alpha: learner.alpha,
            n_min: learner.n_min,
            refine_attempts: learner.refine_attempts,
            budget: 1_000_000,
            seed: 0,
            eq: EqTestParams::default(),
            check_every: 500,
            lengths: LengthPolicy::default(),
            conv_rounds: 3,
            stop_on_convergence: true,
            curve_every: 50_000,
            pmc_tolerance: pmc::DEFAULT_TOLERANCE,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(RunError::Config(format!("{name} = {v} is outside (0, 1)")))
            }
        };
        unit("tdelta", self.tdelta)?;
        unit("wdelta", self.wdelta)?;
        unit("alpha", self.alpha)?;
        if self.n < 2 {
            return Err(RunError::Config(format!("N = {} is below 2", self.n)));
        }
        if self.budget < 1 {
            return Err(RunError::Config("budget must be at least 1".into()));
        }
        if self.conv_rounds < 1 {
            return Err(RunError::Config("conv_rounds must be at least 1".into()));
        }
        if !self.eq.is_valid() {
            return Err(RunError::Config(format!(
                "equivalence test parameters {:?} need 0 < floor <= p_stop <= 1 and decay in (0, 1)",
                self.eq
            )));
        }
        if self.pmc_tolerance.is_nan() || self.pmc_tolerance <= 0.0 {
            return Err(RunError::Config("pmc_tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            alpha: self.alpha,
            n_min: self.n_min,
            refine_attempts: self.refine_attempts,
        }
    }

    fn compare(&self) -> CompareParams {
        CompareParams {
            n: self.n,
            significance: self.tdelta,
            delta_mode: self.delta_mode,
            check_every: self.check_every,
            lengths: self.lengths,
            budget: self.budget,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `conv_rounds` consecutive rounds found no counterexample.
    Converged,
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub steps: u64,
    pub best_estimate: f64,
}

/// Steps spent and entries into each phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub learning_steps: u64,
    pub validation_steps: u64,
    pub equivalence_steps: u64,
    pub learning_rounds: u64,
    pub model_checks: u64,
    pub validations: u64,
    pub witness_searches: u64,
    pub equivalence_rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub formula: String,
    pub termination: Termination,
    /// Mean satisfaction of the last validated strategy on the system.
    pub final_estimate: Option<f64>,
    /// Largest estimate seen during the run.
    pub best_estimate: f64,
    /// Model-checking value of the final strategy on the final hypothesis.
    pub hypothesis_value: f64,
    pub strategy: FiniteMemoryStrategy,
    pub hypothesis: Hypothesis,
    pub curve: Vec<CurvePoint>,
    pub phases: PhaseStats,
    pub counterexamples: u64,
    pub steps_taken: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Hypothesis { steps: u64, states: usize, stable: bool },
    ModelCheck { steps: u64, value: f64 },
    Validation { steps: u64, verdict: ValidationVerdict },
    Equivalence { steps: u64, outcome: EqOutcome, p_stop: f64 },
    Counterexample { steps: u64, source: String, trace: String },
    Done { steps: u64, termination: Termination },
}

pub trait EventSink {
    fn emit(&mut self, event: &Event);
}

/// Discards every event.
pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&mut self, _: &Event) {}
}

impl EventSink for Vec<Event> {
    fn emit(&mut self, event: &Event) {
        self.push(event.clone());
    }
}

/// One JSON object per line. Write errors are ignored; the log is advisory.
pub struct JsonLines<W: Write>(pub W);

impl<W: Write> EventSink for JsonLines<W> {
    fn emit(&mut self, event: &Event) {
        if let Ok(line) = serde_json::to_string(event) {
            let _ = writeln!(self.0, "{line}");
        }
    }
}

struct Curve {
    points: Vec<CurvePoint>,
    best: f64,
    every: u64,
}

impl Curve {
    fn observe(&mut self, estimate: f64) {
        self.best = self.best.max(estimate);
    }

    fn point(&mut self, steps: u64) {
        let p = CurvePoint {
            steps,
            best_estimate: self.best,
        };
        match self.points.last_mut() {
            Some(last) if last.steps >= steps => last.best_estimate = self.best,
            _ => self.points.push(p),
        }
    }

    /// Adds a point when a cadence boundary was crossed since the last one.
    fn tick(&mut self, steps: u64) {
        let last = self.points.last().map_or(0, |p| p.steps);
        if self.every > 0 && steps / self.every > last / self.every {
            self.point(steps);
        }
    }
}

/// Runs the learn, check and validate loop on `sut` for `formula`.
pub fn run<S, E>(
    sut: &mut S,
    formula: &Formula,
    cfg: &RunConfig,
    events: &mut E,
) -> Result<Report, RunError>
where
    S: Sut + ?Sized,
    E: EventSink + ?Sized,
{
    cfg.validate()?;
    pmc::classify(formula)?;
    let monitor = Monitor::new(formula)?;
    let alphabet = sut.alphabet().clone();
    if alphabet.inputs.is_empty() {
        return Err(RunError::Alphabet("the system has no inputs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut compare = cfg.compare();
    let mut eq = cfg.eq;

    let start = sut.steps_taken();
    let root = sut.reset();
    let mut table = ObservationTable::new(alphabet, root, cfg.learner());
    let mut curve = Curve {
        points: Vec::new(),
        best: 0.0,
        every: cfg.curve_every,
    };
    let mut phases = PhaseStats::default();
    let mut counterexamples = 0u64;
    let mut clean_rounds = 0usize;
    let mut final_estimate = None;
    let mut last: (Hypothesis, pmc::PmcResult);
    let steps = |sut: &S| sut.steps_taken() - start;
    let budget = start.saturating_add(cfg.budget);
    compare.budget = budget;

    let feed = |table: &mut ObservationTable, trace: &Trace, source: &str, sut: &S, events: &mut E| {
        let mass = table.samples().total_count();
        let added = table.process_counterexample(trace);
        // the trace was recorded when sampled, so the counts changed too
        debug_assert!(added > 0 || table.samples().count(trace) > 0 && mass > 0);
        events.emit(&Event::Counterexample {
            steps: sut.steps_taken() - start,
            source: source.into(),
            trace: trace.display(table.alphabet()).to_string(),
        });
    };

    let termination = loop {
        // learning
        let before = sut.steps_taken();
        let stab = table.close_and_consistentize(sut, budget);
        phases.learning_steps += sut.steps_taken() - before;
        phases.learning_rounds += 1;
        let hyp = table.build_hypothesis()?;
        events.emit(&Event::Hypothesis {
            steps: steps(sut),
            states: hyp.mdp.num_states(),
            stable: stab == Stabilization::Stable,
        });

        // synthesis
        let res = pmc::check_with_tolerance(&hyp.mdp, formula, cfg.pmc_tolerance)?;
        phases.model_checks += 1;
        events.emit(&Event::ModelCheck {
            steps: steps(sut),
            value: res.value,
        });
        let hyp_mdp = hyp.mdp.clone();
        let strategy = res.strategy.clone();
        let p_hat = res.value;
        last = (hyp, res);
        curve.tick(steps(sut));
        if stab == Stabilization::BudgetExhausted {
            break Termination::Budget;
        }

        // strategy-guided comparison
        let before = sut.steps_taken();
        let verdict = compare_with_strategy(&hyp_mdp, sut, &strategy, p_hat, &monitor, &compare, &mut table);
        phases.validation_steps += sut.steps_taken() - before;
        phases.validations += 1;
        events.emit(&Event::Validation {
            steps: steps(sut),
            verdict: verdict.clone(),
        });
        match &verdict {
            ValidationVerdict::EquivalentSoFar { p_bar } | ValidationVerdict::Rejected { p_bar, .. } => {
                final_estimate = Some(*p_bar);
                curve.observe(*p_bar);
                curve.point(steps(sut));
            }
            _ => curve.tick(steps(sut)),
        }
        match verdict {
            ValidationVerdict::BudgetExhausted => break Termination::Budget,
            ValidationVerdict::OffModel { trace } | ValidationVerdict::Witness { trace } => {
                feed(&mut table, &trace, "validation", sut, events);
                counterexamples += 1;
                clean_rounds = 0;
                continue;
            }
            ValidationVerdict::TableBroken { .. } => {
                clean_rounds = 0;
                continue;
            }
            ValidationVerdict::Rejected { .. } => {
                phases.witness_searches += 1;
                if let Some(trace) = construct_witness(&hyp_mdp, table.samples(), cfg.wdelta) {
                    feed(&mut table, &trace, "witness", sut, events);
                    counterexamples += 1;
                    clean_rounds = 0;
                    continue;
                }
            }
            ValidationVerdict::EquivalentSoFar { .. } => {}
        }

        // random equivalence testing
        let before = sut.steps_taken();
        let outcome = equivalence_test_random(&hyp_mdp, sut, &mut eq, &mut table, cfg.wdelta, budget, &mut rng);
        phases.equivalence_steps += sut.steps_taken() - before;
        phases.equivalence_rounds += 1;
        events.emit(&Event::Equivalence {
            steps: steps(sut),
            outcome: outcome.clone(),
            p_stop: eq.p_stop,
        });
        curve.tick(steps(sut));
        match outcome {
            EqOutcome::OffModel { trace } | EqOutcome::Witness { trace } => {
                feed(&mut table, &trace, "equivalence", sut, events);
                counterexamples += 1;
                clean_rounds = 0;
            }
            EqOutcome::BudgetExhausted => break Termination::Budget,
            EqOutcome::Clean => {
                clean_rounds += 1;
                if cfg.stop_on_convergence && clean_rounds >= cfg.conv_rounds {
                    break Termination::Converged;
                }
            }
        }
        if sut.steps_taken() >= budget {
            break Termination::Budget;
        }
    };

    curve.point(steps(sut));
    events.emit(&Event::Done {
        steps: steps(sut),
        termination,
    });
    let (hypothesis, res) = last;
    Ok(Report {
        config: cfg.clone(),
        formula: formula.to_string(),
        termination,
        final_estimate,
        best_estimate: curve.best,
        hypothesis_value: res.value,
        strategy: res.strategy,
        hypothesis,
        curve: curve.points,
        phases,
        counterexamples,
        steps_taken: steps(sut),
    })
}

/// The curve as CSV with header `steps,best_estimate`.
pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("steps,best_estimate\n");
    for p in curve {
        out.push_str(&format!("{},{}\n", p.steps, p.best_estimate));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::wrap_whitebox;
    use crate::ltl::parse;
    use crate::mdp::{two_state_example, MdpBuilder};

    #[test]
    fn unsupported_formula_costs_no_steps() {
        let mut sut = wrap_whitebox(two_state_example(), 0);
        let err = run(&mut sut, &parse("X (p U q)").unwrap(), &RunConfig::default(), &mut NullSink).unwrap_err();
        assert!(err.is_unsupported_formula());
        assert_eq!(sut.steps_taken(), 0);
    }

    #[test]
    fn single_state_converges_to_one() {
        let mut b = MdpBuilder::new();
        let s = b.state("s", "p");
        b.initial(s).trans(s, "a", s, 1.0).trans(s, "b", s, 1.0);
        let mut sut = wrap_whitebox(b.build().unwrap(), 3);
        let cfg = RunConfig {
            budget: 1_000_000,
            ..RunConfig::default()
        };
        let report = run(&mut sut, &parse("F[0,2) p").unwrap(), &cfg, &mut NullSink).unwrap();
        assert_eq!(report.termination, Termination::Converged);
        assert_eq!(report.final_estimate, Some(1.0));
        assert_eq!(report.hypothesis.mdp.num_states(), 1);
    }

    #[test]
    fn tiny_budget_stops_with_a_curve() {
        let mut sut = wrap_whitebox(two_state_example(), 1);
        let cfg = RunConfig {
            budget: 1,
            ..RunConfig::default()
        };
        let report = run(&mut sut, &parse("F[0,3) q").unwrap(), &cfg, &mut NullSink).unwrap();
        assert_eq!(report.termination, Termination::Budget);
        assert!(!report.curve.is_empty());
        assert!(report.steps_taken <= 1 + 3);
    }

    #[test]
    fn budget_bounds_steps() {
        let mut sut = wrap_whitebox(two_state_example(), 2);
        let cfg = RunConfig {
            budget: 30_000,
            ..RunConfig::default()
        };
        let mut events = Vec::new();
        let report = run(&mut sut, &parse("F[0,3) q").unwrap(), &cfg, &mut events).unwrap();
        // budget plus one trace in flight
        assert!(report.steps_taken <= 30_000 + 3, "{}", report.steps_taken);
        assert!(matches!(events.last(), Some(Event::Done { .. })));
        for w in report.curve.windows(2) {
            assert!(w[0].steps < w[1].steps);
            assert!(w[0].best_estimate <= w[1].best_estimate);
        }
    }

    #[test]
    fn curve_csv_header() {
        let csv = curve_csv(&[CurvePoint {
            steps: 10,
            best_estimate: 0.5,
        }]);
        assert_eq!(csv, "steps,best_estimate\n10,0.5\n");
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = RunConfig {
            seed: 9,
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
        assert!(RunConfig { tdelta: 1.5, ..cfg.clone() }.validate().is_err());
        assert!(RunConfig { n: 1, ..cfg }.validate().is_err());
    }
}
