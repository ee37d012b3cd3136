//! The system-under-test boundary, the shared trace multiset and
//! hypothesis-guided execution.

use std::collections::{BTreeMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ltl::Verdict;
use crate::mdp::{Alphabet, FiniteMemoryStrategy, InputId, Mdp, OutputId, StateId, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlackboxError {
    #[error("trace starts with output {got}, multiset root is {root}")]
    HeadMismatch { root: OutputId, got: OutputId },
}

/// An executable system whose state is hidden.
///
/// Both alphabets are known up front. Every `reset` and every `step` adds
/// one to `steps_taken`.
pub trait Sut {
    fn alphabet(&self) -> &Alphabet;
    fn reset(&mut self) -> OutputId;
    fn step(&mut self, input: InputId) -> OutputId;
    fn steps_taken(&self) -> u64;
}

impl<T: Sut + ?Sized> Sut for &mut T {
    fn alphabet(&self) -> &Alphabet {
        (**self).alphabet()
    }

    fn reset(&mut self) -> OutputId {
        (**self).reset()
    }

    fn step(&mut self, input: InputId) -> OutputId {
        (**self).step(input)
    }

    fn steps_taken(&self) -> u64 {
        (**self).steps_taken()
    }
}

/// A known MDP executed as a black box.
#[derive(Debug, Clone)]
pub struct WhiteboxSut {
    mdp: Mdp,
    rng: ChaCha8Rng,
    state: StateId,
    steps: u64,
}

impl WhiteboxSut {
    pub fn new(mdp: Mdp, seed: u64) -> Self {
        let state = mdp.initial();
        WhiteboxSut {
            mdp,
            rng: ChaCha8Rng::seed_from_u64(seed),
            state,
            steps: 0,
        }
    }

    /// The wrapped model, for oracles in tests and reports.
    pub fn model(&self) -> &Mdp {
        &self.mdp
    }
}

pub fn wrap_whitebox(mdp: Mdp, seed: u64) -> WhiteboxSut {
    WhiteboxSut::new(mdp, seed)
}

impl Sut for WhiteboxSut {
    fn alphabet(&self) -> &Alphabet {
        self.mdp.alphabet()
    }

    fn reset(&mut self) -> OutputId {
        self.steps += 1;
        self.state = self.mdp.initial();
        self.mdp.label(self.state)
    }

    fn step(&mut self, input: InputId) -> OutputId {
        self.steps += 1;
        self.state = self.mdp.dist(self.state, input).sample(&mut self.rng);
        self.mdp.label(self.state)
    }

    fn steps_taken(&self) -> u64 {
        self.steps
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Node {
    count: u64,
    children: BTreeMap<(InputId, OutputId), NodeId>,
}

/// Prefix-closed multiset of traces stored as a trie.
///
/// Node counts record how many recorded traces have that node's trace as a
/// prefix, so `count(σ) >= Σ count(σ·a·o)` holds by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMultiset {
    root_output: OutputId,
    nodes: Vec<Node>,
    traces: u64,
    mass: u64,
}

impl SampleMultiset {
    pub fn new(root_output: OutputId) -> Self {
        SampleMultiset {
            root_output,
            nodes: vec![Node::default()],
            traces: 0,
            mass: 0,
        }
    }

    pub fn root_output(&self) -> OutputId {
        self.root_output
    }

    /// Number of recorded traces.
    pub fn traces(&self) -> u64 {
        self.traces
    }

    /// Sum of node counts, i.e. the total length of recorded traces.
    pub fn total_count(&self) -> u64 {
        self.mass
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Increments the count of every prefix of `trace`.
    pub fn record(&mut self, trace: &Trace) -> Result<(), BlackboxError> {
        if trace.head != self.root_output {
            return Err(BlackboxError::HeadMismatch {
                root: self.root_output,
                got: trace.head,
            });
        }
        let mut cur = 0;
        self.nodes[0].count += 1;
        for &step in &trace.tail {
            let next = match self.nodes[cur].children.get(&step) {
                Some(&n) => n,
                None => {
                    self.nodes.push(Node::default());
                    let n = self.nodes.len() - 1;
                    self.nodes[cur].children.insert(step, n);
                    n
                }
            };
            self.nodes[next].count += 1;
            cur = next;
        }
        self.traces += 1;
        self.mass += trace.len() as u64;
        Ok(())
    }

    pub fn node(&self, trace: &Trace) -> Option<NodeId> {
        if trace.head != self.root_output {
            return None;
        }
        let mut cur = 0;
        for step in &trace.tail {
            cur = *self.nodes[cur].children.get(step)?;
        }
        Some(cur)
    }

    pub fn count(&self, trace: &Trace) -> u64 {
        self.node(trace).map_or(0, |n| self.nodes[n].count)
    }

    pub fn node_count(&self, node: NodeId) -> u64 {
        self.nodes[node].count
    }

    pub fn child(&self, node: NodeId, input: InputId, output: OutputId) -> Option<NodeId> {
        self.nodes[node].children.get(&(input, output)).copied()
    }

    /// Children of `node` in `(input, output)` order.
    pub fn children(&self, node: NodeId) -> impl Iterator<Item = ((InputId, OutputId), NodeId)> + '_ {
        self.nodes[node].children.iter().map(|(&k, &v)| (k, v))
    }

    /// `o ↦ S(σ·a·o)` for every observed `o`.
    pub fn out_freq(&self, trace: &Trace, input: InputId) -> BTreeMap<OutputId, u64> {
        self.node(trace)
            .map(|n| self.out_freq_at(n, input))
            .unwrap_or_default()
    }

    pub fn out_freq_at(&self, node: NodeId, input: InputId) -> BTreeMap<OutputId, u64> {
        self.nodes[node]
            .children
            .range((input, 0)..=(input, OutputId::MAX))
            .map(|(&(_, o), &c)| (o, self.nodes[c].count))
            .collect()
    }

    /// Number of recorded continuations of `node` via `input`.
    pub fn extensions_at(&self, node: NodeId, input: InputId) -> u64 {
        self.nodes[node]
            .children
            .range((input, 0)..=(input, OutputId::MAX))
            .map(|(_, &c)| self.nodes[c].count)
            .sum()
    }

    /// Distinct recorded traces with counts, shortest first, siblings in
    /// `(input, output)` order.
    pub fn breadth_first(&self) -> impl Iterator<Item = (Trace, NodeId)> + '_ {
        let mut queue = VecDeque::from([(Trace::new(self.root_output), 0usize)]);
        std::iter::from_fn(move || {
            let (trace, node) = queue.pop_front()?;
            for (&(a, o), &c) in &self.nodes[node].children {
                queue.push_back((trace.extended(a, o), c));
            }
            Some((trace, node))
        })
    }

    /// Checks the trie invariant on every node.
    pub fn is_prefix_closed(&self) -> bool {
        self.nodes.iter().all(|n| {
            let below: u64 = n.children.values().map(|&c| self.nodes[c].count).sum();
            n.count >= below
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaffoldOutcome {
    pub trace: Trace,
    /// False iff some observed step has probability 0 in the hypothesis.
    pub on_model: bool,
    /// Property verdict, filled in by the caller.
    pub verdict: Option<Verdict>,
}

/// Runs `strategy` on the SUT, choosing inputs from the hypothesis path
/// that matches the observed trace. Stops early when the SUT leaves the
/// hypothesis, and otherwise once `stop(trace)` holds or `max_len` outputs
/// have been observed.
pub fn sample_scaffolded_until<S, F>(
    sut: &mut S,
    hypothesis: &Mdp,
    strategy: &FiniteMemoryStrategy,
    max_len: usize,
    mut stop: F,
) -> ScaffoldOutcome
where
    S: Sut + ?Sized,
    F: FnMut(&Trace) -> bool,
{
    let head = sut.reset();
    let mut trace = Trace::new(head);
    if head != hypothesis.label(hypothesis.initial()) {
        return ScaffoldOutcome {
            trace,
            on_model: false,
            verdict: None,
        };
    }
    let mut state = hypothesis.initial();
    let mut mode = strategy.initial_mode();
    while trace.len() < max_len.max(1) && !stop(&trace) {
        let a = strategy.choose(mode, state);
        let o = sut.step(a);
        trace.push(a, o);
        match hypothesis.successor(state, a, o) {
            Some((next, _)) => {
                mode = strategy.advance(mode, state, a);
                state = next;
            }
            None => {
                return ScaffoldOutcome {
                    trace,
                    on_model: false,
                    verdict: None,
                }
            }
        }
    }
    ScaffoldOutcome {
        trace,
        on_model: true,
        verdict: None,
    }
}

/// Scaffolded run of exactly `length` outputs unless the SUT leaves the
/// hypothesis first.
pub fn sample_scaffolded<S: Sut + ?Sized>(
    sut: &mut S,
    hypothesis: &Mdp,
    strategy: &FiniteMemoryStrategy,
    length: usize,
) -> ScaffoldOutcome {
    sample_scaffolded_until(sut, hypothesis, strategy, length, |_| false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{two_state_example, MdpBuilder};
    use proptest::prelude::*;

    #[test]
    fn whitebox_reset_and_step() {
        let m = two_state_example();
        let p = m.alphabet().output_index("p").unwrap();
        let q = m.alphabet().output_index("q").unwrap();
        let a = m.alphabet().input_index("a").unwrap();
        let b = m.alphabet().input_index("b").unwrap();
        let mut sut = wrap_whitebox(m, 3);
        assert_eq!(sut.reset(), p);
        for _ in 0..100 {
            sut.reset();
            assert_eq!(sut.step(b), p);
        }
        let mut hits = 0;
        for _ in 0..100_000 {
            sut.reset();
            if sut.step(a) == q {
                hits += 1;
            }
        }
        assert!((hits as f64 / 1e5 - 0.5).abs() < 0.01);
        assert_eq!(sut.steps_taken(), 1 + 200 + 200_000);
    }

    #[test]
    fn record_and_out_freq() {
        let (p, q, a) = (0, 1, 0);
        let mut s = SampleMultiset::new(p);
        let paq = Trace::from_steps(p, [(a, q)]);
        let pap = Trace::from_steps(p, [(a, p)]);
        s.record(&paq).unwrap();
        s.record(&paq).unwrap();
        assert_eq!(s.count(&Trace::new(p)), 2);
        assert_eq!(s.count(&paq), 2);
        let mut s = SampleMultiset::new(p);
        s.record(&paq).unwrap();
        s.record(&pap).unwrap();
        assert_eq!(s.count(&Trace::new(p)), 2);
        assert_eq!((s.count(&paq), s.count(&pap)), (1, 1));
        assert_eq!(s.out_freq(&Trace::new(p), a), BTreeMap::from([(p, 1), (q, 1)]));
        assert!(s.out_freq(&paq, a).is_empty());
        assert!(s.record(&Trace::new(q)).is_err());
    }

    #[test]
    fn scaffold_identical_hypothesis() {
        let m = two_state_example();
        let a = m.alphabet().input_index("a").unwrap();
        let q = m.alphabet().output_index("q").unwrap();
        let strat = FiniteMemoryStrategy::constant(2, a);
        let mut sut = wrap_whitebox(m.clone(), 11);
        let mut hits = 0;
        for _ in 0..100_000 {
            let out = sample_scaffolded(&mut sut, &m, &strat, 3);
            assert!(out.on_model);
            assert_eq!(out.trace.len(), 3);
            if out.trace.outputs().contains(&q) {
                hits += 1;
            }
        }
        assert!((hits as f64 / 1e5 - 0.75).abs() < 0.01);
    }

    #[test]
    fn scaffold_detects_missing_edge() {
        let truth = two_state_example();
        // hypothesis without q -a-> p
        let mut b = MdpBuilder::new();
        let p = b.state("p", "p");
        let q = b.state("q", "q");
        b.initial(p)
            .trans(p, "a", p, 0.5)
            .trans(p, "a", q, 0.5)
            .trans(p, "b", p, 1.0)
            .trans(q, "a", q, 1.0)
            .trans(q, "b", p, 0.4)
            .trans(q, "b", q, 0.6);
        let hyp = b.build().unwrap();
        let strat = FiniteMemoryStrategy::constant(2, 0);
        let mut sut = wrap_whitebox(truth, 5);
        let runs = 50_000;
        let off = (0..runs)
            .filter(|_| !sample_scaffolded(&mut sut, &hyp, &strat, 3).on_model)
            .count();
        // the missing edge can only fire on the second step, after p -a-> q
        let expect = 0.5 * 0.4;
        assert!((off as f64 / runs as f64 - expect).abs() < 0.01);
    }

    #[test]
    fn length_one_and_budget_accounting() {
        let m = two_state_example();
        let strat = FiniteMemoryStrategy::constant(2, 0);
        let mut sut = wrap_whitebox(m.clone(), 1);
        let out = sample_scaffolded(&mut sut, &m, &strat, 1);
        assert!(out.on_model);
        assert_eq!(out.trace, Trace::new(m.label(m.initial())));
        assert_eq!(sut.steps_taken(), 1);
        let out = sample_scaffolded(&mut sut, &m, &strat, 4);
        assert_eq!(sut.steps_taken(), 1 + out.trace.len() as u64);
    }

    proptest! {
        #[test]
        fn trie_stays_prefix_closed(traces in prop::collection::vec(
            prop::collection::vec((0usize..2, 0usize..3), 0..6), 1..30)) {
            let mut s = SampleMultiset::new(0);
            let mut total = 0;
            for t in &traces {
                let tr = Trace::from_steps(0, t.iter().copied());
                s.record(&tr).unwrap();
                total += tr.len() as u64;
                prop_assert!(s.is_prefix_closed());
            }
            prop_assert_eq!(s.total_count(), total);
            for (trace, node) in s.breadth_first() {
                for a in 0..2 {
                    let f = s.out_freq(&trace, a);
                    prop_assert_eq!(f.values().sum::<u64>(), s.extensions_at(node, a));
                }
            }
        }
    }
}
