//! Markov decision processes, traces, paths and finite-memory strategies.
//!
//! States, inputs and outputs are dense indices. Display names live in side
//! tables on [`Mdp`] and [`Alphabet`] so hot loops only touch arrays.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type StateId = usize;
pub type InputId = usize;
pub type OutputId = usize;

/// Tolerance used for every probability-sum check.
pub const PROB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdpError {
    #[error("state {state} input {input}: probabilities sum to {sum}")]
    BadSum {
        state: String,
        input: String,
        sum: f64,
    },
    #[error("state {state} input {input}: probability {prob} outside [0, 1]")]
    BadProbability {
        state: String,
        input: String,
        prob: f64,
    },
    #[error("state {state} input {input}: successors {} and {} share output {label}", successors.0, successors.1)]
    NotDeterministic {
        state: String,
        input: String,
        successors: Box<(String, String)>,
        label: String,
    },
    #[error("state {state} has no distribution for input {input}")]
    MissingTransition { state: String, input: String },
    #[error("index out of range: {0}")]
    BadIndex(String),
    #[error("MDP has no states")]
    Empty,
    #[error("invalid path: {0}")]
    InvalidPath(String),
}

/// An output symbol: an opaque label plus the atomic propositions holding
/// while it is observed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputSymbol {
    pub name: String,
    pub props: BTreeSet<String>,
}

impl OutputSymbol {
    /// Output whose only proposition is its own name.
    pub fn named(name: impl Into<String>) -> Self {
        let name = name.into();
        let props = BTreeSet::from([name.clone()]);
        Self { name, props }
    }

    pub fn with_props<I, S>(name: impl Into<String>, props: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            name: name.into(),
            props: props.into_iter().map(Into::into).collect(),
        }
    }
}

/// Input and output alphabets shared between a system and its models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    pub inputs: Vec<String>,
    pub outputs: Vec<OutputSymbol>,
}

impl Alphabet {
    pub fn input_index(&self, name: &str) -> Option<InputId> {
        self.inputs.iter().position(|i| i == name)
    }

    pub fn output_index(&self, name: &str) -> Option<OutputId> {
        self.outputs.iter().position(|o| o.name == name)
    }

    pub fn input_name(&self, input: InputId) -> &str {
        &self.inputs[input]
    }

    pub fn output_name(&self, output: OutputId) -> &str {
        &self.outputs[output].name
    }
}

/// Finite-support distribution over states, sorted by state id with no zero
/// entries.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Distribution {
    support: Vec<(StateId, f64)>,
}

impl Distribution {
    /// Builds a distribution from weights, merging duplicates and dropping
    /// zeros. The sum is not checked here; [`Mdp::validate`] does that.
    pub fn new(entries: impl IntoIterator<Item = (StateId, f64)>) -> Self {
        let mut support: Vec<(StateId, f64)> = Vec::new();
        for (s, p) in entries {
            if p == 0.0 {
                continue;
            }
            match support.iter_mut().find(|(t, _)| *t == s) {
                Some(entry) => entry.1 += p,
                None => support.push((s, p)),
            }
        }
        support.sort_by_key(|(s, _)| *s);
        Self { support }
    }

    pub fn dirac(state: StateId) -> Self {
        Self {
            support: vec![(state, 1.0)],
        }
    }

    pub fn support(&self) -> &[(StateId, f64)] {
        &self.support
    }

    pub fn prob(&self, state: StateId) -> f64 {
        self.support
            .iter()
            .find(|(s, _)| *s == state)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.support.iter().map(|(_, p)| p).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StateId {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(s, p) in &self.support {
            acc += p;
            if u < acc {
                return s;
            }
        }
        // rounding slack lands on the last entry
        self.support.last().map(|(s, _)| *s).expect("empty distribution")
    }

    /// Expected value of `values` under this distribution.
    pub fn expect(&self, values: &[f64]) -> f64 {
        self.support.iter().map(|&(s, p)| p * values[s]).sum()
    }
}

/// A trace `b0 a1 b1 ... an bn`: outputs alternating with inputs, output first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Trace {
    pub head: OutputId,
    pub tail: Vec<(InputId, OutputId)>,
}

impl Trace {
    pub fn new(head: OutputId) -> Self {
        Self {
            head,
            tail: Vec::new(),
        }
    }

    pub fn from_steps(head: OutputId, tail: impl IntoIterator<Item = (InputId, OutputId)>) -> Self {
        Self {
            head,
            tail: tail.into_iter().collect(),
        }
    }

    /// Number of outputs.
    pub fn len(&self) -> usize {
        self.tail.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn push(&mut self, input: InputId, output: OutputId) {
        self.tail.push((input, output));
    }

    pub fn extended(&self, input: InputId, output: OutputId) -> Self {
        let mut t = self.clone();
        t.push(input, output);
        t
    }

    pub fn last_output(&self) -> OutputId {
        self.tail.last().map_or(self.head, |(_, o)| *o)
    }

    /// The output sequence `b0 b1 ... bn`.
    pub fn outputs(&self) -> Vec<OutputId> {
        std::iter::once(self.head)
            .chain(self.tail.iter().map(|(_, o)| *o))
            .collect()
    }

    pub fn inputs(&self) -> impl Iterator<Item = InputId> + '_ {
        self.tail.iter().map(|(i, _)| *i)
    }

    /// Prefix with `n` outputs; `n` is clamped to `1..=len`.
    pub fn prefix(&self, n: usize) -> Self {
        let keep = n.clamp(1, self.len()) - 1;
        Self {
            head: self.head,
            tail: self.tail[..keep].to_vec(),
        }
    }

    /// All prefixes, shortest first, including the trace itself.
    pub fn prefixes(&self) -> impl Iterator<Item = Trace> + '_ {
        (1..=self.len()).map(move |n| self.prefix(n))
    }

    pub fn is_prefix_of(&self, other: &Trace) -> bool {
        self.head == other.head
            && self.tail.len() <= other.tail.len()
            && other.tail[..self.tail.len()] == self.tail[..]
    }

    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> TraceDisplay<'a> {
        TraceDisplay {
            trace: self,
            alphabet,
        }
    }
}

pub struct TraceDisplay<'a> {
    trace: &'a Trace,
    alphabet: &'a Alphabet,
}

impl fmt::Display for TraceDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.alphabet.output_name(self.trace.head))?;
        for &(i, o) in &self.trace.tail {
            write!(
                f,
                " {} {}",
                self.alphabet.input_name(i),
                self.alphabet.output_name(o)
            )?;
        }
        Ok(())
    }
}

/// State-level counterpart of a [`Trace`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    pub head: StateId,
    pub tail: Vec<(InputId, StateId)>,
}

impl Path {
    pub fn new(head: StateId) -> Self {
        Self {
            head,
            tail: Vec::new(),
        }
    }

    pub fn last_state(&self) -> StateId {
        self.tail.last().map_or(self.head, |(_, s)| *s)
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        std::iter::once(self.head).chain(self.tail.iter().map(|(_, s)| *s))
    }
}

/// How a strategy's memory mode evolves after each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeUpdate {
    /// Memoryless: the mode never changes.
    Constant,
    /// Step counter: mode `m` moves to `min(m + 1, modes - 1)`.
    Counter,
    /// Explicit table indexed `[mode][state][input]`.
    Table { next: Vec<Vec<Vec<usize>>> },
}

/// Deterministic finite-memory strategy encoded as a Mealy machine over
/// `modes x states`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMemoryStrategy {
    initial_mode: usize,
    /// `choice[mode][state]`
    choice: Vec<Vec<InputId>>,
    update: ModeUpdate,
}

impl FiniteMemoryStrategy {
    pub fn new(
        initial_mode: usize,
        choice: Vec<Vec<InputId>>,
        update: ModeUpdate,
    ) -> Result<Self, MdpError> {
        if choice.is_empty() || initial_mode >= choice.len() {
            return Err(MdpError::BadIndex("strategy initial mode".into()));
        }
        let states = choice[0].len();
        if choice.iter().any(|row| row.len() != states) {
            return Err(MdpError::BadIndex("strategy rows differ in width".into()));
        }
        if let ModeUpdate::Table { next } = &update {
            let ok = next.len() == choice.len()
                && next.iter().all(|row| {
                    row.len() == states
                        && row.iter().all(|by_input| by_input.iter().all(|&m| m < choice.len()))
                });
            if !ok {
                return Err(MdpError::BadIndex("strategy mode table".into()));
            }
        }
        Ok(Self {
            initial_mode,
            choice,
            update,
        })
    }

    /// Strategy that always plays `input`.
    pub fn constant(states: usize, input: InputId) -> Self {
        Self {
            initial_mode: 0,
            choice: vec![vec![input; states]],
            update: ModeUpdate::Constant,
        }
    }

    pub fn memoryless(choice: Vec<InputId>) -> Self {
        Self {
            initial_mode: 0,
            choice: vec![choice],
            update: ModeUpdate::Constant,
        }
    }

    /// Step-indexed strategy; `choice[t][state]` is played at step `t`, and
    /// the last row is reused once the counter saturates.
    pub fn step_indexed(choice: Vec<Vec<InputId>>) -> Self {
        Self {
            initial_mode: 0,
            choice,
            update: ModeUpdate::Counter,
        }
    }

    pub fn initial_mode(&self) -> usize {
        self.initial_mode
    }

    pub fn modes(&self) -> usize {
        self.choice.len()
    }

    pub fn states(&self) -> usize {
        self.choice[0].len()
    }

    pub fn choose(&self, mode: usize, state: StateId) -> InputId {
        self.choice[mode][state]
    }

    pub fn advance(&self, mode: usize, state: StateId, input: InputId) -> usize {
        match &self.update {
            ModeUpdate::Constant => mode,
            ModeUpdate::Counter => (mode + 1).min(self.choice.len() - 1),
            ModeUpdate::Table { next } => next[mode][state][input],
        }
    }

    pub fn update(&self) -> &ModeUpdate {
        &self.update
    }

    /// Checks the strategy is total for `mdp`.
    pub fn check_against(&self, mdp: &Mdp) -> Result<(), MdpError> {
        if self.states() != mdp.num_states() {
            return Err(MdpError::BadIndex(format!(
                "strategy covers {} states, MDP has {}",
                self.states(),
                mdp.num_states()
            )));
        }
        if self
            .choice
            .iter()
            .flatten()
            .any(|&a| a >= mdp.alphabet().inputs.len())
        {
            return Err(MdpError::BadIndex("strategy input".into()));
        }
        Ok(())
    }
}

/// A labelled MDP. The same type represents the system under test and
/// learned hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mdp {
    alphabet: Alphabet,
    state_names: Vec<String>,
    labels: Vec<OutputId>,
    initial: StateId,
    /// `trans[state][input]`
    trans: Vec<Vec<Distribution>>,
}

impl Mdp {
    /// Assembles an MDP checking only shapes and index ranges. Use
    /// [`Mdp::validate`] for the probabilistic invariants.
    pub fn from_parts(
        alphabet: Alphabet,
        state_names: Vec<String>,
        labels: Vec<OutputId>,
        initial: StateId,
        trans: Vec<Vec<Distribution>>,
    ) -> Result<Self, MdpError> {
        let n = state_names.len();
        if n == 0 {
            return Err(MdpError::Empty);
        }
        if labels.len() != n || trans.len() != n {
            return Err(MdpError::BadIndex("per-state tables differ in length".into()));
        }
        if initial >= n {
            return Err(MdpError::BadIndex(format!("initial state {initial}")));
        }
        if let Some(&o) = labels.iter().find(|&&o| o >= alphabet.outputs.len()) {
            return Err(MdpError::BadIndex(format!("output {o}")));
        }
        for (s, row) in trans.iter().enumerate() {
            if row.len() != alphabet.inputs.len() {
                let input = alphabet
                    .inputs
                    .get(row.len())
                    .cloned()
                    .unwrap_or_else(|| format!("#{}", row.len()));
                return Err(MdpError::MissingTransition {
                    state: state_names[s].clone(),
                    input,
                });
            }
            for d in row {
                if let Some(&(t, _)) = d.support().iter().find(|(t, _)| *t >= n) {
                    return Err(MdpError::BadIndex(format!("successor state {t}")));
                }
            }
        }
        Ok(Self {
            alphabet,
            state_names,
            labels,
            initial,
            trans,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.alphabet.inputs.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn label(&self, state: StateId) -> OutputId {
        self.labels[state]
    }

    pub fn labels(&self) -> &[OutputId] {
        &self.labels
    }

    pub fn state_name(&self, state: StateId) -> &str {
        &self.state_names[state]
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn state_index(&self, name: &str) -> Option<StateId> {
        self.state_names.iter().position(|s| s == name)
    }

    pub fn props(&self, state: StateId) -> &BTreeSet<String> {
        &self.alphabet.outputs[self.labels[state]].props
    }

    pub fn dist(&self, state: StateId, input: InputId) -> &Distribution {
        &self.trans[state][input]
    }

    /// Successor of `state` under `input` that emits `output`, if any.
    /// Unique when the MDP is deterministic.
    pub fn successor(&self, state: StateId, input: InputId, output: OutputId) -> Option<(StateId, f64)> {
        self.trans[state][input]
            .support()
            .iter()
            .copied()
            .find(|&(t, _)| self.labels[t] == output)
    }

    /// Checks distributions sum to one and, if asked, the deterministic
    /// labelling condition.
    pub fn validate(&self, require_deterministic: bool) -> Result<(), MdpError> {
        for s in 0..self.num_states() {
            for a in 0..self.num_inputs() {
                let d = &self.trans[s][a];
                for &(_, p) in d.support() {
                    if !(0.0..=1.0 + PROB_TOLERANCE).contains(&p) || p.is_nan() {
                        return Err(MdpError::BadProbability {
                            state: self.state_names[s].clone(),
                            input: self.alphabet.inputs[a].clone(),
                            prob: p,
                        });
                    }
                }
                let sum = d.total();
                if (sum - 1.0).abs() > PROB_TOLERANCE {
                    return Err(MdpError::BadSum {
                        state: self.state_names[s].clone(),
                        input: self.alphabet.inputs[a].clone(),
                        sum,
                    });
                }
                if require_deterministic {
                    let sup = d.support();
                    for (i, &(t1, _)) in sup.iter().enumerate() {
                        for &(t2, _) in &sup[i + 1..] {
                            if self.labels[t1] == self.labels[t2] {
                                return Err(MdpError::NotDeterministic {
                                    state: self.state_names[s].clone(),
                                    input: self.alphabet.inputs[a].clone(),
                                    successors: Box::new((
                                        self.state_names[t1].clone(),
                                        self.state_names[t2].clone(),
                                    )),
                                    label: self.alphabet.outputs[self.labels[t1]].name.clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Rescales distributions whose sum drifts from one by more than
    /// rounding noise. Fails if any sum is off by more than
    /// [`PROB_TOLERANCE`].
    pub fn renormalize(&mut self) -> Result<(), MdpError> {
        self.validate(false)?;
        for row in &mut self.trans {
            for d in row.iter_mut() {
                let total = d.total();
                if (total - 1.0).abs() <= 1e-12 {
                    continue;
                }
                for entry in &mut d.support {
                    entry.1 /= total;
                }
            }
        }
        Ok(())
    }

    /// The unique positive-probability path inducing `trace`, or `None`.
    pub fn resolve_path(&self, trace: &Trace) -> Option<Path> {
        if self.labels[self.initial] != trace.head {
            return None;
        }
        let mut path = Path::new(self.initial);
        let mut cur = self.initial;
        for &(a, o) in &trace.tail {
            if a >= self.num_inputs() {
                return None;
            }
            let (next, _) = self.successor(cur, a, o)?;
            path.tail.push((a, next));
            cur = next;
        }
        Some(path)
    }

    /// Probability of observing `trace` when its inputs are fed in order.
    pub fn trace_probability(&self, trace: &Trace) -> f64 {
        if self.labels[self.initial] != trace.head {
            return 0.0;
        }
        let mut cur = self.initial;
        let mut prob = 1.0;
        for &(a, o) in &trace.tail {
            match self.successor(cur, a, o) {
                Some((next, p)) => {
                    prob *= p;
                    cur = next;
                }
                None => return 0.0,
            }
        }
        prob
    }

    pub fn trace_of_path(&self, path: &Path) -> Result<Trace, MdpError> {
        if path.head != self.initial {
            return Err(MdpError::InvalidPath(format!(
                "path starts at {} instead of the initial state",
                path.head
            )));
        }
        let mut cur = path.head;
        let mut trace = Trace::new(self.labels[cur]);
        for &(a, s) in &path.tail {
            if a >= self.num_inputs() || s >= self.num_states() {
                return Err(MdpError::InvalidPath("index out of range".into()));
            }
            if self.trans[cur][a].prob(s) <= 0.0 {
                return Err(MdpError::InvalidPath(format!(
                    "{} -{}-> {} has probability 0",
                    self.state_names[cur], self.alphabet.inputs[a], self.state_names[s]
                )));
            }
            trace.push(a, self.labels[s]);
            cur = s;
        }
        Ok(trace)
    }

    /// Samples a trace of exactly `length` outputs from the chain obtained by
    /// fixing `strategy` on this MDP.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        strategy: &FiniteMemoryStrategy,
        length: usize,
        rng: &mut R,
    ) -> Trace {
        let mut state = self.initial;
        let mut mode = strategy.initial_mode();
        let mut trace = Trace::new(self.labels[state]);
        for _ in 1..length.max(1) {
            let a = strategy.choose(mode, state);
            let next = self.trans[state][a].sample(rng);
            mode = strategy.advance(mode, state, a);
            trace.push(a, self.labels[next]);
            state = next;
        }
        trace
    }

    /// Reachability mask from the initial state.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut stack = vec![self.initial];
        seen[self.initial] = true;
        while let Some(s) = stack.pop() {
            for d in &self.trans[s] {
                for &(t, _) in d.support() {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
        }
        seen
    }
}

/// Incremental construction by name, used by generators and tests.
#[derive(Debug, Default, Clone)]
pub struct MdpBuilder {
    inputs: Vec<String>,
    outputs: Vec<OutputSymbol>,
    states: Vec<String>,
    labels: Vec<OutputId>,
    initial: Option<StateId>,
    trans: Vec<(StateId, InputId, StateId, f64)>,
}

impl MdpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&mut self, name: &str) -> InputId {
        match self.inputs.iter().position(|i| i == name) {
            Some(i) => i,
            None => {
                self.inputs.push(name.to_string());
                self.inputs.len() - 1
            }
        }
    }

    pub fn output(&mut self, symbol: OutputSymbol) -> OutputId {
        match self.outputs.iter().position(|o| o.name == symbol.name) {
            Some(i) => {
                self.outputs[i] = symbol;
                i
            }
            None => {
                self.outputs.push(symbol);
                self.outputs.len() - 1
            }
        }
    }

    fn output_by_name(&mut self, name: &str) -> OutputId {
        match self.outputs.iter().position(|o| o.name == name) {
            Some(i) => i,
            None => self.output(OutputSymbol::named(name)),
        }
    }

    /// Adds a state labelled `label` (created with singleton props if new).
    pub fn state(&mut self, name: &str, label: &str) -> StateId {
        let o = self.output_by_name(label);
        self.states.push(name.to_string());
        self.labels.push(o);
        self.states.len() - 1
    }

    pub fn initial(&mut self, state: StateId) -> &mut Self {
        self.initial = Some(state);
        self
    }

    pub fn trans(&mut self, src: StateId, input: &str, dst: StateId, prob: f64) -> &mut Self {
        let a = self.input(input);
        self.trans.push((src, a, dst, prob));
        self
    }

    /// Builds without checking probability sums.
    pub fn build_unchecked(&self) -> Result<Mdp, MdpError> {
        let n = self.states.len();
        let k = self.inputs.len();
        let mut entries: Vec<Vec<Vec<(StateId, f64)>>> = vec![vec![Vec::new(); k]; n];
        for &(s, a, t, p) in &self.trans {
            if s >= n || t >= n {
                return Err(MdpError::BadIndex(format!("transition {s} -> {t}")));
            }
            entries[s][a].push((t, p));
        }
        for (s, row) in entries.iter().enumerate() {
            for (a, e) in row.iter().enumerate() {
                if e.is_empty() {
                    return Err(MdpError::MissingTransition {
                        state: self.states[s].clone(),
                        input: self.inputs[a].clone(),
                    });
                }
            }
        }
        let trans = entries
            .into_iter()
            .map(|row| row.into_iter().map(Distribution::new).collect())
            .collect();
        Mdp::from_parts(
            Alphabet {
                inputs: self.inputs.clone(),
                outputs: self.outputs.clone(),
            },
            self.states.clone(),
            self.labels.clone(),
            self.initial.unwrap_or(0),
            trans,
        )
    }

    pub fn build(&self) -> Result<Mdp, MdpError> {
        let mdp = self.build_unchecked()?;
        mdp.validate(false)?;
        Ok(mdp)
    }
}

/// Two-state reference MDP over inputs `a, b` and outputs `p, q`:
/// `p -a-> {p: .5, q: .5}`, `p -b-> p`, `q -a/b-> {p: .4, q: .6}`.
pub fn two_state_example() -> Mdp {
    let mut b = MdpBuilder::new();
    let p = b.state("p", "p");
    let q = b.state("q", "q");
    b.initial(p)
        .trans(p, "a", p, 0.5)
        .trans(p, "a", q, 0.5)
        .trans(p, "b", p, 1.0)
        .trans(q, "a", p, 0.4)
        .trans(q, "a", q, 0.6)
        .trans(q, "b", p, 0.4)
        .trans(q, "b", q, 0.6);
    b.build().expect("reference MDP is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(m: &Mdp, outs: &[&str], ins: &[&str]) -> Trace {
        let al = m.alphabet();
        let mut t = Trace::new(al.output_index(outs[0]).unwrap());
        for (i, o) in ins.iter().zip(&outs[1..]) {
            t.push(al.input_index(i).unwrap(), al.output_index(o).unwrap());
        }
        t
    }

    #[test]
    fn reference_mdp_is_deterministic() {
        let m = two_state_example();
        m.validate(true).unwrap();
    }

    #[test]
    fn bad_sum_is_reported() {
        let mut b = MdpBuilder::new();
        let p = b.state("p", "p");
        let q = b.state("q", "q");
        b.trans(p, "a", p, 0.6)
            .trans(p, "a", q, 0.5)
            .trans(p, "b", p, 1.0)
            .trans(q, "a", p, 0.4)
            .trans(q, "a", q, 0.6)
            .trans(q, "b", p, 0.4)
            .trans(q, "b", q, 0.6);
        let m = b.build_unchecked().unwrap();
        match m.validate(false) {
            Err(MdpError::BadSum { state, input, sum }) => {
                assert_eq!(state, "p");
                assert_eq!(input, "a");
                assert!((sum - 1.1).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(b.build().is_err());
    }

    #[test]
    fn shared_successor_label_breaks_determinism() {
        let mut b = MdpBuilder::new();
        let p = b.state("p", "x");
        let q = b.state("q", "y");
        let r = b.state("r", "y");
        b.trans(p, "a", q, 0.5).trans(p, "a", r, 0.5);
        for s in [q, r] {
            b.trans(s, "a", s, 1.0);
        }
        let m = b.build().unwrap();
        m.validate(false).unwrap();
        assert!(matches!(
            m.validate(true),
            Err(MdpError::NotDeterministic { .. })
        ));
    }

    #[test]
    fn resolve_and_trace_of_path() {
        let m = two_state_example();
        let t = tr(&m, &["p", "q", "p"], &["a", "a"]);
        let path = m.resolve_path(&t).unwrap();
        assert_eq!(path.states().collect::<Vec<_>>(), vec![0, 1, 0]);
        assert_eq!(m.trace_of_path(&path).unwrap(), t);

        let impossible = tr(&m, &["p", "q"], &["b"]);
        assert!(m.resolve_path(&impossible).is_none());
        assert_eq!(m.trace_probability(&impossible), 0.0);

        let single = Trace::new(m.label(m.initial()));
        assert_eq!(m.resolve_path(&single).unwrap(), Path::new(0));
        assert_eq!(m.trace_of_path(&Path::new(0)).unwrap().len(), 1);

        let wrong_head = Trace::new(m.label(1));
        assert!(m.resolve_path(&wrong_head).is_none());
    }

    #[test]
    fn invalid_path_rejected() {
        let m = two_state_example();
        let bad = Path {
            head: 0,
            tail: vec![(1, 1)],
        };
        assert!(m.trace_of_path(&bad).is_err());
    }

    #[test]
    fn simulate_length_one_is_initial_label() {
        let m = two_state_example();
        let s = FiniteMemoryStrategy::constant(2, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(m.simulate(&s, 1, &mut rng), Trace::new(m.label(0)));
    }

    #[test]
    fn simulate_frequency_of_reaching_q() {
        // paths under "always a": q missed only via p,p,p  =>  1 - 0.5 * 0.5
        let m = two_state_example();
        let s = FiniteMemoryStrategy::constant(2, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let q = m.alphabet().output_index("q").unwrap();
        let runs = 100_000;
        let hits = (0..runs)
            .filter(|_| m.simulate(&s, 3, &mut rng).outputs().contains(&q))
            .count();
        let freq = hits as f64 / runs as f64;
        assert!((freq - 0.75).abs() < 0.01, "{freq}");
    }

    #[test]
    fn simulate_is_reproducible() {
        let m = two_state_example();
        let s = FiniteMemoryStrategy::constant(2, 0);
        let a: Vec<Trace> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| m.simulate(&s, 6, &mut rng)).collect()
        };
        let b: Vec<Trace> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| m.simulate(&s, 6, &mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn renormalize_within_tolerance_only() {
        let mut b = MdpBuilder::new();
        let p = b.state("p", "p");
        b.trans(p, "a", p, 1.0 + 5e-10);
        let mut m = b.build_unchecked().unwrap();
        m.renormalize().unwrap();
        assert_eq!(m.dist(0, 0).total(), 1.0);

        let mut far = MdpBuilder::new();
        let p = far.state("p", "p");
        far.trans(p, "a", p, 0.99);
        assert!(far.build_unchecked().unwrap().renormalize().is_err());
    }

    #[test]
    fn strategy_counter_saturates() {
        let s = FiniteMemoryStrategy::step_indexed(vec![vec![0], vec![1], vec![0]]);
        assert_eq!(s.advance(0, 0, 0), 1);
        assert_eq!(s.advance(2, 0, 0), 2);
        assert_eq!(s.choose(1, 0), 1);
    }
}
