//! Validation of a hypothesis against the system: strategy-guided
//! comparison, witness search over the sample multiset, and random
//! equivalence testing.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blackbox::{sample_scaffolded_until, SampleMultiset, Sut};
use crate::learner::{ObservationTable, TableDefect};
use crate::ltl::{Monitor, Verdict};
use crate::mdp::{FiniteMemoryStrategy, Mdp, StateId, Trace};
use crate::stats::{bernoulli_mean_std, t_test_one_sample, witness_bound, TestOutcome};

/// Deviations below this are float noise when every sample agrees.
const ZERO_STD_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ValidationVerdict {
    /// The t-test found no evidence against the model-checking estimate.
    EquivalentSoFar { p_bar: f64 },
    /// The t-test rejected; no witness was looked for yet.
    Rejected { p_bar: f64, test: TestOutcome },
    /// A trace whose observed frequency contradicts the hypothesis.
    Witness { trace: Trace },
    /// A sampled trace left the hypothesis.
    OffModel { trace: Trace },
    TableBroken { reason: TableDefect },
    /// The step budget ran out before `N` traces were sampled.
    BudgetExhausted,
}

/// Where sampled traces go, and whether the table built from them still
/// holds.
pub trait Evidence {
    fn samples_mut(&mut self) -> &mut SampleMultiset;
    fn samples(&self) -> &SampleMultiset;
    fn check(&self) -> Result<(), TableDefect> {
        Ok(())
    }
}

impl Evidence for SampleMultiset {
    fn samples_mut(&mut self) -> &mut SampleMultiset {
        self
    }

    fn samples(&self) -> &SampleMultiset {
        self
    }
}

impl Evidence for ObservationTable {
    fn samples_mut(&mut self) -> &mut SampleMultiset {
        ObservationTable::samples_mut(self)
    }

    fn samples(&self) -> &SampleMultiset {
        ObservationTable::samples(self)
    }

    fn check(&self) -> Result<(), TableDefect> {
        ObservationTable::check(self)
    }
}

/// Trace lengths, counted in outputs including the reset output. Bounded
/// properties use their horizon. Others are sampled until the monitor
/// decides, but at most `max(per_state · |states|, min)` outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthPolicy {
    pub per_state: usize,
    pub min: usize,
}

impl Default for LengthPolicy {
    fn default() -> Self {
        LengthPolicy {
            per_state: 20,
            min: 200,
        }
    }
}

impl LengthPolicy {
    /// Outputs to sample for `monitor` on a hypothesis with `states` states.
    pub fn max_len(&self, monitor: &Monitor, states: usize) -> usize {
        match monitor.horizon() {
            Some(h) => h,
            None => (self.per_state * states).max(self.min),
        }
    }
}

/// How the comparison threshold is read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    /// Reject when the t-test p-value falls below the threshold.
    #[default]
    Significance,
    /// Reject when `|p_bar - p_hat|` exceeds the threshold.
    AbsoluteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareParams {
    pub n: usize,
    /// Comparison threshold, read according to `delta_mode`.
    pub significance: f64,
    pub delta_mode: DeltaMode,
    /// Table check period, in traces.
    pub check_every: usize,
    pub lengths: LengthPolicy,
    /// Absolute step count at which sampling stops.
    pub budget: u64,
}

impl Default for CompareParams {
    fn default() -> Self {
        CompareParams {
            n: 5000,
            significance: 0.025,
            delta_mode: DeltaMode::Significance,
            check_every: 500,
            lengths: LengthPolicy::default(),
            budget: u64::MAX,
        }
    }
}

/// Trace lengths at which an undecided run is re-evaluated. Every length
/// while short, then every sixteenth of the current length, so deciding a
/// run stays near linear in its length. Verdicts, once decided, survive
/// extension, so checking late only costs a few extra steps.
fn checkpoint(len: usize) -> bool {
    len <= 32 || len.is_multiple_of(len / 16)
}

/// Verdict of `monitor` on the outputs of `trace`.
pub fn trace_verdict(mdp: &Mdp, monitor: &Monitor, trace: &Trace) -> Verdict {
    let outputs = &mdp.alphabet().outputs;
    let word: Vec<&BTreeSet<String>> = trace.outputs().iter().map(|&o| &outputs[o].props).collect();
    monitor
        .evaluate(&word)
        .expect("a trace has at least one letter")
}

/// Samples `params.n` scaffolded runs of `strategy`, records them, and
/// t-tests their satisfaction rate against `p_hat`. Inconclusive verdicts
/// count as violations.
pub fn compare_with_strategy<S, E>(
    hypothesis: &Mdp,
    sut: &mut S,
    strategy: &FiniteMemoryStrategy,
    p_hat: f64,
    monitor: &Monitor,
    params: &CompareParams,
    evidence: &mut E,
) -> ValidationVerdict
where
    S: Sut + ?Sized,
    E: Evidence + ?Sized,
{
    let max_len = params.lengths.max_len(monitor, hypothesis.num_states());
    let bounded = monitor.horizon().is_some();
    let mut hits = 0;
    for i in 0..params.n {
        if sut.steps_taken() >= params.budget {
            return ValidationVerdict::BudgetExhausted;
        }
        let out = sample_scaffolded_until(sut, hypothesis, strategy, max_len, |t| {
            !bounded && checkpoint(t.len()) && trace_verdict(hypothesis, monitor, t) != Verdict::Inconclusive
        });
        evidence
            .samples_mut()
            .record(&out.trace)
            .expect("the reset output is fixed");
        if !out.on_model {
            return ValidationVerdict::OffModel { trace: out.trace };
        }
        if trace_verdict(hypothesis, monitor, &out.trace) == Verdict::True {
            hits += 1;
        }
        if params.check_every > 0 && (i + 1) % params.check_every == 0 {
            if let Err(reason) = evidence.check() {
                return ValidationVerdict::TableBroken { reason };
            }
        }
    }
    let (p_bar, std) = bernoulli_mean_std(hits, params.n);
    let p_ref = if std == 0.0 && (p_bar - p_hat).abs() <= ZERO_STD_SLACK {
        p_bar
    } else {
        p_hat
    };
    let mut test = t_test_one_sample(p_ref, p_bar, std, params.n, params.significance)
        .expect("validated parameters");
    if params.delta_mode == DeltaMode::AbsoluteDifference {
        test.reject = (p_bar - p_hat).abs() > params.significance;
    }
    if test.reject {
        ValidationVerdict::Rejected { p_bar, test }
    } else {
        ValidationVerdict::EquivalentSoFar { p_bar }
    }
}

/// Shortest recorded trace `σ⁻·a·o` whose observed frequency of `o` among
/// the `n` recorded `a`-extensions of `σ⁻` differs from the hypothesis
/// probability of `o` by more than `witness_bound(delta, n)`. Prefixes the
/// hypothesis cannot resolve and parents with `n < 2` are skipped.
pub fn construct_witness(hypothesis: &Mdp, samples: &SampleMultiset, delta: f64) -> Option<Trace> {
    let root = samples.node(&Trace::new(samples.root_output()))?;
    if samples.root_output() != hypothesis.label(hypothesis.initial()) {
        return None;
    }
    let mut queue: VecDeque<(Trace, usize, StateId)> = VecDeque::new();
    queue.push_back((Trace::new(samples.root_output()), root, hypothesis.initial()));
    while let Some((trace, node, state)) = queue.pop_front() {
        for a in 0..hypothesis.num_inputs() {
            let n = samples.extensions_at(node, a);
            if n < 2 {
                continue;
            }
            let bound = witness_bound(delta, n).expect("n is positive");
            for ((input, o), child) in samples.children(node) {
                if input != a {
                    continue;
                }
                let p_s = samples.node_count(child) as f64 / n as f64;
                let p_m = hypothesis.successor(state, a, o).map_or(0.0, |(_, p)| p);
                if (p_m - p_s).abs() > bound {
                    return Some(trace.extended(a, o));
                }
            }
        }
        for ((a, o), child) in samples.children(node) {
            if let Some((next, _)) = hypothesis.successor(state, a, o) {
                queue.push_back((trace.extended(a, o), child, next));
            }
        }
    }
    None
}

/// Random-walk testing with a per-step stop probability that decays after
/// every clean round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqTestParams {
    pub p_stop: f64,
    pub decay: f64,
    pub floor: f64,
    pub traces_per_round: usize,
}

impl Default for EqTestParams {
    fn default() -> Self {
        EqTestParams {
            p_stop: 0.25,
            decay: 0.9,
            floor: 0.01,
            traces_per_round: 1000,
        }
    }
}

impl EqTestParams {
    pub fn is_valid(&self) -> bool {
        0.0 < self.floor
            && self.floor <= self.p_stop
            && self.p_stop <= 1.0
            && 0.0 < self.decay
            && self.decay < 1.0
    }

    fn decay_once(&mut self) {
        self.p_stop = (self.p_stop * self.decay).max(self.floor);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum EqOutcome {
    /// An observation the hypothesis gives probability 0.
    OffModel { trace: Trace },
    /// A frequency witness found in the enlarged sample set.
    Witness { trace: Trace },
    Clean,
    BudgetExhausted,
}

/// One round of uniform random testing. Every walk is recorded; a clean
/// round ends with a witness search and then decays `params.p_stop`.
#[allow(clippy::too_many_arguments)]
pub fn equivalence_test_random<S, E, R>(
    hypothesis: &Mdp,
    sut: &mut S,
    params: &mut EqTestParams,
    evidence: &mut E,
    delta: f64,
    budget: u64,
    rng: &mut R,
) -> EqOutcome
where
    S: Sut + ?Sized,
    E: Evidence + ?Sized,
    R: Rng + ?Sized,
{
    let k = hypothesis.num_inputs();
    for _ in 0..params.traces_per_round {
        if sut.steps_taken() >= budget {
            return EqOutcome::BudgetExhausted;
        }
        let head = sut.reset();
        let mut trace = Trace::new(head);
        let mut state = (head == hypothesis.label(hypothesis.initial())).then(|| hypothesis.initial());
        while state.is_some() {
            let a = rng.gen_range(0..k);
            let o = sut.step(a);
            trace.push(a, o);
            state = state.and_then(|s| hypothesis.successor(s, a, o)).map(|(t, _)| t);
            if rng.gen::<f64>() < params.p_stop {
                break;
            }
        }
        evidence
            .samples_mut()
            .record(&trace)
            .expect("the reset output is fixed");
        if state.is_none() {
            return EqOutcome::OffModel { trace };
        }
    }
    if params.traces_per_round == 0 {
        return EqOutcome::Clean;
    }
    if let Some(trace) = construct_witness(hypothesis, evidence.samples(), delta) {
        return EqOutcome::Witness { trace };
    }
    params.decay_once();
    EqOutcome::Clean
}

/// Closedness, consistency and class stability of `table` on its current
/// samples.
pub fn periodic_table_check(table: &ObservationTable) -> Result<(), TableDefect> {
    table.check()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::wrap_whitebox;
    use crate::learner::LearnerConfig;
    use crate::ltl::parse;
    use crate::mdp::{two_state_example, OutputId};
    use crate::pmc;
    use crate::stats::chernoff_sample_size;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn monitor(text: &str) -> Monitor {
        Monitor::new(&parse(text).unwrap()).unwrap()
    }

    #[test]
    fn identical_hypothesis_estimate_is_accurate() {
        let m = two_state_example();
        let f = parse("F[0,3) q").unwrap();
        let res = pmc::check(&m, &f).unwrap();
        let truth = pmc::strategy_value(&m, &res.strategy, &f, 1e-12).unwrap();
        let eps = 0.01;
        let params = CompareParams {
            n: chernoff_sample_size(eps, 0.01).unwrap(),
            ..CompareParams::default()
        };
        let mon = Monitor::new(&f).unwrap();
        let mut accepted = 0;
        for seed in 0..20 {
            let mut sut = wrap_whitebox(m.clone(), seed);
            let mut s = SampleMultiset::new(m.label(m.initial()));
            let v = compare_with_strategy(&m, &mut sut, &res.strategy, res.value, &mon, &params, &mut s);
            let p_bar = match v {
                ValidationVerdict::EquivalentSoFar { p_bar } => {
                    accepted += 1;
                    p_bar
                }
                ValidationVerdict::Rejected { p_bar, .. } => p_bar,
                other => panic!("{other:?}"),
            };
            assert!((p_bar - truth).abs() < eps, "seed {seed}: {p_bar}");
        }
        // false rejections happen at the test's significance, 2.5%
        assert!(accepted >= 18, "{accepted}");
    }

    #[test]
    fn large_effect_is_rejected() {
        // always playing a: q at step 1 with probability 0.5
        let m = two_state_example();
        let strat = FiniteMemoryStrategy::constant(2, 0);
        let mon = monitor("F[1,2) q");
        let params = CompareParams::default();
        let mut rejected = 0;
        for seed in 0..100 {
            let mut sut = wrap_whitebox(m.clone(), seed);
            let mut s = SampleMultiset::new(0);
            if let ValidationVerdict::Rejected { .. } =
                compare_with_strategy(&m, &mut sut, &strat, 0.9, &mon, &params, &mut s)
            {
                rejected += 1;
            }
        }
        assert!(rejected >= 99, "{rejected}");
    }

    #[test]
    fn absolute_threshold_mode() {
        let m = two_state_example();
        let strat = FiniteMemoryStrategy::constant(2, 0);
        let mon = monitor("F[1,2) q");
        let params = CompareParams {
            delta_mode: DeltaMode::AbsoluteDifference,
            significance: 0.05,
            ..CompareParams::default()
        };
        let mut sut = wrap_whitebox(m.clone(), 6);
        let mut s = SampleMultiset::new(0);
        let v = compare_with_strategy(&m, &mut sut, &strat, 0.53, &mon, &params, &mut s);
        assert!(matches!(v, ValidationVerdict::EquivalentSoFar { .. }), "{v:?}");
        let v = compare_with_strategy(&m, &mut sut, &strat, 0.6, &mon, &params, &mut s);
        assert!(matches!(v, ValidationVerdict::Rejected { .. }), "{v:?}");
    }

    #[test]
    fn records_exactly_the_sampled_steps() {
        let m = two_state_example();
        let strat = FiniteMemoryStrategy::constant(2, 0);
        let mon = monitor("F[0,4) q");
        let params = CompareParams {
            n: 200,
            ..CompareParams::default()
        };
        let mut sut = wrap_whitebox(m.clone(), 1);
        let mut s = SampleMultiset::new(0);
        compare_with_strategy(&m, &mut sut, &strat, 0.875, &mon, &params, &mut s);
        assert_eq!(s.traces(), 200);
        // four outputs per trace, the reset output included
        assert_eq!(s.total_count(), 200 * 4);
    }

    #[test]
    fn missing_edge_goes_off_model() {
        let m = two_state_example();
        let mut hyp = m.clone();
        // hypothesis believes p -a-> p surely
        let mut b = crate::mdp::MdpBuilder::new();
        let p = b.state("p", "p");
        let q = b.state("q", "q");
        b.initial(p)
            .trans(p, "a", p, 1.0)
            .trans(p, "b", p, 1.0)
            .trans(q, "a", p, 0.4)
            .trans(q, "a", q, 0.6)
            .trans(q, "b", p, 0.4)
            .trans(q, "b", q, 0.6);
        hyp = b.build().unwrap_or(hyp);
        let strat = FiniteMemoryStrategy::constant(2, 0);
        let mon = monitor("F[0,5) q");
        let mut sut = wrap_whitebox(m, 2);
        let mut s = SampleMultiset::new(0);
        let v = compare_with_strategy(&hyp, &mut sut, &strat, 0.0, &mon, &CompareParams::default(), &mut s);
        match v {
            ValidationVerdict::OffModel { trace } => {
                assert_eq!(trace.last_output(), 1);
                assert_eq!(s.count(&trace), 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_traces_stop_once_decided() {
        let m = two_state_example();
        let strat = FiniteMemoryStrategy::constant(2, 0);
        let mon = monitor("true U q");
        let params = CompareParams {
            n: 500,
            ..CompareParams::default()
        };
        let mut sut = wrap_whitebox(m.clone(), 3);
        let mut s = SampleMultiset::new(0);
        let v = compare_with_strategy(&m, &mut sut, &strat, 1.0, &mon, &params, &mut s);
        assert_eq!(v, ValidationVerdict::EquivalentSoFar { p_bar: 1.0 });
        // the reset output plus a geometric number of steps with mean two
        let mean = s.total_count() as f64 / 500.0;
        assert!((mean - 3.0).abs() < 0.25, "{mean}");
        assert!(s.breadth_first().all(|(t, _)| t.len() <= 3 || t.tail[..t.len() - 2].iter().all(|&(_, o)| o == 0)));
    }

    /// `n` draws at prefix `p·a` with `q` having probability `prob`.
    fn synthetic(prob: f64, n: usize, seed: u64) -> SampleMultiset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = SampleMultiset::new(0);
        for _ in 0..n {
            let o: OutputId = if rng.gen::<f64>() < prob { 1 } else { 0 };
            s.record(&Trace::from_steps(0, [(0, o)])).unwrap();
        }
        s
    }

    #[test]
    fn witness_power_and_soundness() {
        let hyp = two_state_example();
        let fired = (0..100)
            .filter(|&seed| construct_witness(&hyp, &synthetic(0.8, 2000, seed), 0.025).is_some())
            .count();
        assert!(fired >= 95, "{fired}");
        let false_alarms = (0..100)
            .filter(|&seed| construct_witness(&hyp, &synthetic(0.5, 2000, seed), 0.025).is_some())
            .count();
        assert!(false_alarms <= 5, "{false_alarms}");
    }

    #[test]
    fn witness_satisfies_its_inequality() {
        let hyp = two_state_example();
        let s = synthetic(0.8, 2000, 11);
        let w = construct_witness(&hyp, &s, 0.025).unwrap();
        let parent = w.prefix(w.len() - 1);
        let (a, o) = *w.tail.last().unwrap();
        let n = s.count(&parent.extended(a, 0)) + s.count(&parent.extended(a, 1));
        let p_s = s.count(&w) as f64 / n as f64;
        let state = hyp.resolve_path(&parent).unwrap().last_state();
        let p_m = hyp.successor(state, a, o).map_or(0.0, |(_, p)| p);
        assert!((p_m - p_s).abs() > witness_bound(0.025, n).unwrap());
    }

    #[test]
    fn single_observation_never_selected() {
        let hyp = two_state_example();
        let mut s = SampleMultiset::new(0);
        s.record(&Trace::from_steps(0, [(0, 1), (1, 1)])).unwrap();
        assert!(witness_bound(0.025, 1).unwrap() > 1.0);
        assert_eq!(construct_witness(&hyp, &s, 0.025), None);
    }

    #[test]
    fn equivalence_on_identical_model_is_clean() {
        let m = two_state_example();
        for seed in 0..20 {
            let mut sut = wrap_whitebox(m.clone(), seed);
            let mut s = SampleMultiset::new(0);
            let mut params = EqTestParams::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = equivalence_test_random(&m, &mut sut, &mut params, &mut s, 0.025, u64::MAX, &mut rng);
            assert!(!matches!(out, EqOutcome::OffModel { .. }));
            if out == EqOutcome::Clean {
                assert!((params.p_stop - 0.225).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equivalence_finds_deep_state() {
        // truth: b·b leads to a fresh output; hypothesis never leaves p under b
        let mut b = crate::mdp::MdpBuilder::new();
        let p = b.state("p", "p");
        let p2 = b.state("p2", "p");
        let r = b.state("r", "r");
        b.initial(p)
            .trans(p, "a", p, 1.0)
            .trans(p, "b", p2, 1.0)
            .trans(p2, "a", p, 1.0)
            .trans(p2, "b", r, 1.0)
            .trans(r, "a", r, 1.0)
            .trans(r, "b", r, 1.0);
        b.output(crate::mdp::OutputSymbol::named("r"));
        let truth = b.build().unwrap();
        let mut hb = crate::mdp::MdpBuilder::new();
        let hp = hb.state("p", "p");
        hb.initial(hp).trans(hp, "a", hp, 1.0).trans(hp, "b", hp, 1.0);
        hb.output(crate::mdp::OutputSymbol::named("r"));
        let hyp = hb.build().unwrap();
        assert_eq!(hyp.alphabet(), truth.alphabet());
        let mut sut = wrap_whitebox(truth, 0);
        let mut s = SampleMultiset::new(0);
        let mut params = EqTestParams {
            traces_per_round: 10,
            p_stop: 0.9,
            ..EqTestParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut found = None;
        for _ in 0..100 {
            match equivalence_test_random(&hyp, &mut sut, &mut params, &mut s, 0.025, u64::MAX, &mut rng) {
                EqOutcome::OffModel { trace } => {
                    found = Some(trace);
                    break;
                }
                EqOutcome::Clean => {}
                other => panic!("{other:?}"),
            }
        }
        let trace = found.expect("deep state reached");
        assert_eq!(hyp.alphabet().output_name(trace.last_output()), "r");
        assert!(trace.len() >= 2);
    }

    #[test]
    fn empty_round_is_clean() {
        let m = two_state_example();
        let mut sut = wrap_whitebox(m.clone(), 0);
        let mut s = SampleMultiset::new(0);
        let mut params = EqTestParams {
            traces_per_round: 0,
            ..EqTestParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = equivalence_test_random(&m, &mut sut, &mut params, &mut s, 0.025, u64::MAX, &mut rng);
        assert_eq!(out, EqOutcome::Clean);
        assert_eq!(sut.steps_taken(), 0);
    }

    #[test]
    fn table_check_detects_flipped_compatibility() {
        let m = two_state_example();
        let mut sut = wrap_whitebox(m.clone(), 8);
        let root = sut.reset();
        let mut t = ObservationTable::new(m.alphabet().clone(), root, LearnerConfig::default());
        t.close_and_consistentize(&mut sut, 200_000);
        t.build_hypothesis().unwrap();
        assert_eq!(periodic_table_check(&t), Ok(()));
        assert_eq!(periodic_table_check(&t), Ok(()));
        // p·b suddenly yields q half the time: rows p and p·b·p drift apart
        for _ in 0..400 {
            t.samples_mut().record(&Trace::from_steps(0, [(1, 0), (1, 1)])).unwrap();
            t.samples_mut().record(&Trace::from_steps(0, [(1, 0), (1, 0)])).unwrap();
        }
        assert!(periodic_table_check(&t).is_err());
    }
}
