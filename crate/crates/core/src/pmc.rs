//! Maximum satisfaction probabilities for the until fragment, with strategy
//! extraction.
//!
//! Supported shapes after desugaring: a propositional formula, `φ U[lo,hi) ψ`
//! and `¬(φ U[lo,hi) ψ)` with propositional `φ`, `ψ`. The negated form is
//! solved as `1 - min P(φ U ψ)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::Formula;
use crate::mdp::{FiniteMemoryStrategy, InputId, Mdp, StateId};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 1_000_000;

/// Ties below this are broken towards the lowest input index.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PmcError {
    #[error("unsupported formula: `{subterm}` ({reason})")]
    UnsupportedFormula { subterm: String, reason: String },
    #[error("invalid bound: {0}")]
    Bounds(String),
    #[error("value iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmcResult {
    /// Optimal probability at the initial state.
    pub value: f64,
    pub strategy: FiniteMemoryStrategy,
    /// `per_state_values[t][state]` is the optimum from `state` with `t`
    /// outputs already consumed. The last row also covers every later step.
    pub per_state_values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

impl Sense {
    fn better(self, candidate: f64, best: f64) -> bool {
        match self {
            Sense::Max => candidate > best + TIE_EPS,
            Sense::Min => candidate < best - TIE_EPS,
        }
    }
}

/// States of `mdp` whose label satisfies the propositional formula `f`.
pub fn sat_vector(mdp: &Mdp, f: &Formula) -> Vec<bool> {
    (0..mdp.num_states())
        .map(|s| f.holds_now(mdp.props(s)))
        .collect()
}

fn require_propositional(f: &Formula) -> Result<(), PmcError> {
    if f.is_propositional() {
        Ok(())
    } else {
        Err(PmcError::UnsupportedFormula {
            subterm: f.to_string(),
            reason: "until arguments must be propositional".into(),
        })
    }
}

fn expect_row(mdp: &Mdp, s: StateId, a: InputId, row: &[f64]) -> f64 {
    mdp.dist(s, a).expect(row)
}

/// One backward step: values at step `t` from those at `t + 1`.
fn backward_step(
    mdp: &Mdp,
    phi: &[bool],
    psi: &[bool],
    in_window: bool,
    next: &[f64],
    sense: Sense,
) -> (Vec<f64>, Vec<InputId>) {
    let n = mdp.num_states();
    let mut vals = vec![0.0; n];
    let mut choice = vec![0; n];
    for s in 0..n {
        if in_window && psi[s] {
            vals[s] = 1.0;
            continue;
        }
        if !phi[s] {
            continue;
        }
        let mut best = expect_row(mdp, s, 0, next);
        for a in 1..mdp.num_inputs() {
            let v = expect_row(mdp, s, a, next);
            if sense.better(v, best) {
                best = v;
                choice[s] = a;
            }
        }
        vals[s] = best.clamp(0.0, 1.0);
    }
    (vals, choice)
}

fn optimize_bounded(
    mdp: &Mdp,
    phi: &[bool],
    psi: &[bool],
    lo: usize,
    hi: usize,
    sense: Sense,
) -> (Vec<Vec<f64>>, FiniteMemoryStrategy) {
    let n = mdp.num_states();
    let mut rows = vec![vec![0.0; n]; hi + 1];
    let mut choice = vec![vec![0; n]; hi.max(1)];
    for t in (0..hi).rev() {
        let (vals, ch) = backward_step(mdp, phi, psi, t >= lo, &rows[t + 1], sense);
        rows[t] = vals;
        choice[t] = ch;
    }
    (rows, FiniteMemoryStrategy::step_indexed(choice))
}

/// Maximum probability of `φ U[lo,hi) ψ` by backward induction.
pub fn max_prob_bounded_until(
    mdp: &Mdp,
    phi: &Formula,
    psi: &Formula,
    lo: u32,
    hi: u32,
) -> Result<PmcResult, PmcError> {
    bounded_until(mdp, phi, psi, lo, hi, Sense::Max)
}

pub fn bounded_until(
    mdp: &Mdp,
    phi: &Formula,
    psi: &Formula,
    lo: u32,
    hi: u32,
    sense: Sense,
) -> Result<PmcResult, PmcError> {
    require_propositional(phi)?;
    require_propositional(psi)?;
    if lo >= hi {
        return Err(PmcError::Bounds(format!("need lo < hi, got [{lo},{hi})")));
    }
    let (rows, strategy) = optimize_bounded(
        mdp,
        &sat_vector(mdp, phi),
        &sat_vector(mdp, psi),
        lo as usize,
        hi as usize,
        sense,
    );
    Ok(PmcResult {
        value: rows[0][mdp.initial()],
        strategy,
        per_state_values: rows,
    })
}

/// States from which `ψ` is reachable along `φ`-states under some
/// strategy (`Max`) or under every strategy (`Min`).
fn positive_set(mdp: &Mdp, phi: &[bool], psi: &[bool], sense: Sense) -> Vec<bool> {
    let n = mdp.num_states();
    let mut r = psi.to_vec();
    loop {
        let mut changed = false;
        for s in 0..n {
            if r[s] || !phi[s] {
                continue;
            }
            let hits = |a: InputId| mdp.dist(s, a).support().iter().any(|&(t, _)| r[t]);
            let add = match sense {
                Sense::Max => (0..mdp.num_inputs()).any(hits),
                Sense::Min => (0..mdp.num_inputs()).all(hits),
            };
            if add {
                r[s] = true;
                changed = true;
            }
        }
        if !changed {
            return r;
        }
    }
}

fn optimize_unbounded(
    mdp: &Mdp,
    phi: &[bool],
    psi: &[bool],
    tol: f64,
    sense: Sense,
) -> Result<(Vec<f64>, Vec<InputId>), PmcError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(PmcError::Tolerance(tol));
    }
    let n = mdp.num_states();
    let k = mdp.num_inputs();
    let positive = positive_set(mdp, phi, psi, sense);
    let undecided: Vec<StateId> = (0..n).filter(|&s| positive[s] && !psi[s]).collect();
    let mut x: Vec<f64> = (0..n).map(|s| if psi[s] { 1.0 } else { 0.0 }).collect();

    let mut sweeps = 0;
    loop {
        let mut delta: f64 = 0.0;
        for &s in &undecided {
            let mut best = expect_row(mdp, s, 0, &x);
            for a in 1..k {
                let v = expect_row(mdp, s, a, &x);
                if sense.better(v, best) {
                    best = v;
                }
            }
            let best = best.clamp(0.0, 1.0);
            delta = delta.max((best - x[s]).abs());
            x[s] = best;
        }
        sweeps += 1;
        if delta < tol {
            break;
        }
        if sweeps >= MAX_ITERATIONS {
            return Err(PmcError::NoConvergence(sweeps));
        }
    }

    let choice = match sense {
        Sense::Max => max_strategy(mdp, phi, psi, &positive, &x, tol),
        Sense::Min => min_strategy(mdp, psi, &positive, &x, tol),
    };
    Ok((x, choice))
}

/// Discount of the tie-breaking value in [`max_strategy`].
const TIE_DISCOUNT: f64 = 0.95;

/// Among near-optimal inputs, picks the one maximizing a discounted
/// reachability value computed over near-optimal inputs only. Plain argmax
/// can loop forever inside an end component whose inputs all look optimal,
/// and attractor order alone may leak towards `ψ` arbitrarily slowly. A
/// greedy choice on the discounted value leaves no `ψ`-free end component
/// among states that can reach `ψ`, and prefers short routes.
fn max_strategy(
    mdp: &Mdp,
    phi: &[bool],
    psi: &[bool],
    positive: &[bool],
    x: &[f64],
    tol: f64,
) -> Vec<InputId> {
    let n = mdp.num_states();
    let k = mdp.num_inputs();
    let slack = (10.0 * tol).max(1e-6);
    let pending: Vec<bool> = (0..n).map(|s| !psi[s] && phi[s] && positive[s]).collect();
    let candidates: Vec<Vec<InputId>> = (0..n)
        .map(|s| {
            if !pending[s] {
                return Vec::new();
            }
            let q: Vec<f64> = (0..k).map(|a| expect_row(mdp, s, a, x)).collect();
            let best = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (0..k).filter(|&a| q[a] >= best - slack).collect()
        })
        .collect();
    let mut v = vec![0.0; n];
    let q = |v: &[f64], s: StateId, a: InputId| -> f64 {
        TIE_DISCOUNT
            * mdp
                .dist(s, a)
                .support()
                .iter()
                .map(|&(t, p)| p * if psi[t] { 1.0 } else if pending[t] { v[t] } else { 0.0 })
                .sum::<f64>()
    };
    for _ in 0..MAX_ITERATIONS {
        let mut delta = 0f64;
        for s in (0..n).filter(|&s| pending[s]) {
            let best = candidates[s].iter().map(|&a| q(&v, s, a)).fold(0.0, f64::max);
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta < 1e-14 {
            break;
        }
    }
    (0..n)
        .map(|s| {
            let mut best: Option<(InputId, f64)> = None;
            for &a in &candidates[s] {
                let val = q(&v, s, a);
                if best.is_none_or(|(_, b)| Sense::Max.better(val, b)) {
                    best = Some((a, val));
                }
            }
            best.map_or(0, |(a, _)| a)
        })
        .collect()
}

fn min_strategy(
    mdp: &Mdp,
    psi: &[bool],
    positive: &[bool],
    x: &[f64],
    tol: f64,
) -> Vec<InputId> {
    let n = mdp.num_states();
    let k = mdp.num_inputs();
    let slack = (10.0 * tol).max(1e-6);
    (0..n)
        .map(|s| {
            if psi[s] {
                return 0;
            }
            if !positive[s] {
                // stay clear of states that can be forced towards ψ
                return (0..k)
                    .find(|&a| mdp.dist(s, a).support().iter().all(|&(t, _)| !positive[t]))
                    .unwrap_or(0);
            }
            let q: Vec<f64> = (0..k).map(|a| expect_row(mdp, s, a, x)).collect();
            let best = q.iter().cloned().fold(f64::INFINITY, f64::min);
            (0..k).find(|&a| q[a] <= best + slack).unwrap_or(0)
        })
        .collect()
}

/// Maximum probability of `φ U ψ` by qualitative precomputation and
/// Gauss-Seidel value iteration.
pub fn max_prob_unbounded_until(
    mdp: &Mdp,
    phi: &Formula,
    psi: &Formula,
    tol: f64,
) -> Result<PmcResult, PmcError> {
    unbounded_until(mdp, phi, psi, 0, tol, Sense::Max)
}

/// `φ U[lo,inf) ψ`: an unbounded solve followed by `lo` backward steps.
pub fn unbounded_until(
    mdp: &Mdp,
    phi: &Formula,
    psi: &Formula,
    lo: u32,
    tol: f64,
    sense: Sense,
) -> Result<PmcResult, PmcError> {
    require_propositional(phi)?;
    require_propositional(psi)?;
    let phi_s = sat_vector(mdp, phi);
    let psi_s = sat_vector(mdp, psi);
    let (x, tail_choice) = optimize_unbounded(mdp, &phi_s, &psi_s, tol, sense)?;
    let lo = lo as usize;
    let n = mdp.num_states();
    let mut rows = vec![vec![0.0; n]; lo + 1];
    rows[lo] = x;
    let mut choice = vec![Vec::new(); lo + 1];
    choice[lo] = tail_choice;
    for t in (0..lo).rev() {
        let (vals, ch) = backward_step(mdp, &phi_s, &psi_s, false, &rows[t + 1], sense);
        rows[t] = vals;
        choice[t] = ch;
    }
    let strategy = if lo == 0 {
        FiniteMemoryStrategy::memoryless(choice.pop().unwrap())
    } else {
        FiniteMemoryStrategy::step_indexed(choice)
    };
    Ok(PmcResult {
        value: rows[0][mdp.initial()],
        strategy,
        per_state_values: rows,
    })
}

/// Shape of a formula inside the supported fragment.
#[derive(Debug, Clone, PartialEq)]
pub struct UntilQuery {
    pub negated: bool,
    pub lo: u32,
    pub hi: Option<u32>,
    pub left: Formula,
    pub right: Formula,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    /// Decided at the initial state.
    Propositional(Formula),
    Until(UntilQuery),
}

fn strip_double_negation(f: &Formula) -> &Formula {
    match f {
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Not(g) => strip_double_negation(g),
            _ => f,
        },
        _ => f,
    }
}

fn unsupported(f: &Formula, reason: &str) -> PmcError {
    PmcError::UnsupportedFormula {
        subterm: f.to_string(),
        reason: reason.into(),
    }
}

/// The first subterm of `f` (in the user's syntax) outside the fragment.
fn offending(f: &Formula) -> PmcError {
    match f {
        Formula::Not(g) => match g.as_ref() {
            Formula::Not(h) => offending(h),
            g if g.is_propositional() => unsupported(f, "unexpected"),
            Formula::Until { left, right, .. } => {
                if !left.is_propositional() {
                    offending_arg(left)
                } else {
                    offending_arg(right)
                }
            }
            Formula::Eventually { inner, .. } | Formula::Globally { inner, .. } => {
                offending_arg(inner)
            }
            _ => unsupported(f, "only a single negated until is supported"),
        },
        Formula::Until { left, right, .. } => {
            if !left.is_propositional() {
                offending_arg(left)
            } else {
                offending_arg(right)
            }
        }
        Formula::Eventually { inner, .. } | Formula::Globally { inner, .. } => offending_arg(inner),
        Formula::Next(_) => unsupported(f, "next is outside the supported fragment"),
        _ => unsupported(f, "boolean combinations of temporal formulas are not supported"),
    }
}

fn offending_arg(arg: &Formula) -> PmcError {
    match arg {
        Formula::Next(_) => unsupported(arg, "next is outside the supported fragment"),
        _ => unsupported(arg, "until arguments must be propositional"),
    }
}

/// Classifies `f` into the supported fragment.
pub fn classify(f: &Formula) -> Result<Query, PmcError> {
    if f.is_propositional() {
        return Ok(Query::Propositional(f.clone()));
    }
    let d = f.desugar();
    let core = strip_double_negation(&d);
    let (negated, body) = match core {
        Formula::Not(inner) => (true, strip_double_negation(inner)),
        other => (false, other),
    };
    // `!!x` under a top-level `!` was folded above; a remaining `Not` means
    // the body is not an until
    if let Formula::Until { lo, hi, left, right } = body {
        if left.is_propositional() && right.is_propositional() {
            return Ok(Query::Until(UntilQuery {
                negated,
                lo: *lo,
                hi: *hi,
                left: (**left).clone(),
                right: (**right).clone(),
            }));
        }
    }
    Err(offending(f))
}

/// Maximum satisfaction probability of `f` on `mdp` within the fragment.
pub fn check(mdp: &Mdp, f: &Formula) -> Result<PmcResult, PmcError> {
    check_with_tolerance(mdp, f, DEFAULT_TOLERANCE)
}

pub fn check_with_tolerance(mdp: &Mdp, f: &Formula, tol: f64) -> Result<PmcResult, PmcError> {
    match classify(f)? {
        Query::Propositional(g) => {
            let sat = sat_vector(mdp, &g);
            let row: Vec<f64> = sat.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            Ok(PmcResult {
                value: row[mdp.initial()],
                strategy: FiniteMemoryStrategy::constant(mdp.num_states(), 0),
                per_state_values: vec![row],
            })
        }
        Query::Until(q) => {
            let sense = if q.negated { Sense::Min } else { Sense::Max };
            let mut res = match q.hi {
                Some(hi) if hi <= q.lo => {
                    // empty window: the until can never hold
                    let n = mdp.num_states();
                    PmcResult {
                        value: 0.0,
                        strategy: FiniteMemoryStrategy::constant(n, 0),
                        per_state_values: vec![vec![0.0; n]],
                    }
                }
                Some(hi) => bounded_until(mdp, &q.left, &q.right, q.lo, hi, sense)?,
                None => unbounded_until(mdp, &q.left, &q.right, q.lo, tol, sense)?,
            };
            if q.negated {
                res.value = 1.0 - res.value;
                for row in &mut res.per_state_values {
                    for v in row.iter_mut() {
                        *v = 1.0 - *v;
                    }
                }
            }
            Ok(res)
        }
    }
}

/// Exact satisfaction probability of `f` on the chain obtained by fixing
/// `strategy` on `mdp`. Unbounded queries are solved iteratively to `tol`.
pub fn strategy_value(
    mdp: &Mdp,
    strategy: &FiniteMemoryStrategy,
    f: &Formula,
    tol: f64,
) -> Result<f64, PmcError> {
    let q = match classify(f)? {
        Query::Propositional(g) => {
            return Ok(if g.holds_now(mdp.props(mdp.initial())) {
                1.0
            } else {
                0.0
            })
        }
        Query::Until(q) => q,
    };
    let phi = sat_vector(mdp, &q.left);
    let psi = sat_vector(mdp, &q.right);
    let n = mdp.num_states();
    let modes = strategy.modes();
    let idx = |s: StateId, m: usize| s * modes + m;
    let lo = q.lo as usize;

    let step = |next: &[f64], in_window: bool| -> Vec<f64> {
        let mut out = vec![0.0; n * modes];
        for s in 0..n {
            for m in 0..modes {
                out[idx(s, m)] = if in_window && psi[s] {
                    1.0
                } else if !phi[s] {
                    0.0
                } else {
                    let a = strategy.choose(m, s);
                    let m2 = strategy.advance(m, s, a);
                    mdp.dist(s, a)
                        .support()
                        .iter()
                        .map(|&(t, p)| p * next[idx(t, m2)])
                        .sum()
                };
            }
        }
        out
    };

    let first = match q.hi {
        Some(hi) if hi <= q.lo => vec![0.0; n * modes],
        Some(hi) => {
            let mut row = vec![0.0; n * modes];
            for t in (0..hi as usize).rev() {
                row = step(&row, t >= lo);
            }
            row
        }
        None => {
            let mut x = vec![0.0; n * modes];
            let mut sweeps = 0;
            loop {
                let next = step(&x, true);
                let delta = next
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                x = next;
                sweeps += 1;
                if delta < tol {
                    break;
                }
                if sweeps >= MAX_ITERATIONS {
                    return Err(PmcError::NoConvergence(sweeps));
                }
            }
            for _ in 0..lo {
                x = step(&x, false);
            }
            x
        }
    };
    let v = first[idx(mdp.initial(), strategy.initial_mode())];
    Ok(if q.negated { 1.0 - v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse;
    use crate::mdp::{two_state_example, MdpBuilder};

    fn atom(s: &str) -> Formula {
        Formula::atom(s)
    }

    #[test]
    fn reference_mdp_bounded() {
        let m = two_state_example();
        let r = max_prob_bounded_until(&m, &Formula::True, &atom("q"), 0, 3).unwrap();
        assert!((r.value - 0.75).abs() < 1e-12);
        let a = m.alphabet().input_index("a").unwrap();
        let p = m.state_index("p").unwrap();
        assert_eq!(r.strategy.choose(0, p), a);
        assert_eq!(r.strategy.choose(1, p), a);
        assert_eq!(r.per_state_values[0][p], r.value);
    }

    #[test]
    fn trivial_bounded_cases() {
        let m = two_state_example();
        let r = max_prob_bounded_until(&m, &Formula::True, &atom("p"), 0, 4).unwrap();
        assert_eq!(r.value, 1.0);
        let r = max_prob_bounded_until(&m, &Formula::True, &atom("q"), 0, 1).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(max_prob_bounded_until(&m, &Formula::True, &atom("q"), 3, 3).is_err());
    }

    #[test]
    fn unbounded_trivial_cases() {
        let m = two_state_example();
        let r = max_prob_unbounded_until(&m, &Formula::True, &atom("p"), 1e-9).unwrap();
        assert_eq!(r.value, 1.0);
        let r = max_prob_unbounded_until(&m, &Formula::False, &atom("q"), 1e-9).unwrap();
        assert_eq!(r.value, 0.0);
        let r = max_prob_unbounded_until(&m, &Formula::True, &atom("q"), 1e-9).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn end_component_does_not_trap_strategy() {
        // s0 -stay-> s0 (looks optimal), s0 -go-> goal w.p. 1
        let mut b = MdpBuilder::new();
        let s0 = b.state("s0", "start");
        let g = b.state("g", "goal");
        b.initial(s0)
            .trans(s0, "stay", s0, 1.0)
            .trans(s0, "go", g, 1.0)
            .trans(g, "stay", g, 1.0)
            .trans(g, "go", g, 1.0);
        let m = b.build().unwrap();
        let f = parse("true U goal").unwrap();
        let r = check(&m, &f).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert_eq!(r.strategy.choose(0, s0), m.alphabet().input_index("go").unwrap());
        let v = strategy_value(&m, &r.strategy, &f, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dispatch_and_unsupported() {
        let m = two_state_example();
        assert!(matches!(
            classify(&parse("F[0,10) goal").unwrap()).unwrap(),
            Query::Until(UntilQuery { hi: Some(10), .. })
        ));
        assert!(matches!(
            classify(&parse("(!hole) U goal").unwrap()).unwrap(),
            Query::Until(UntilQuery { hi: None, negated: false, .. })
        ));
        match check(&m, &parse("X (p U q)").unwrap()) {
            Err(PmcError::UnsupportedFormula { subterm, .. }) => assert!(subterm.contains("X"), "{subterm}"),
            other => panic!("{other:?}"),
        }
        match check(&m, &parse("(X p) U q").unwrap()) {
            Err(PmcError::UnsupportedFormula { subterm, .. }) => assert_eq!(subterm, "X (p)"),
            other => panic!("{other:?}"),
        }
        assert!(check(&m, &parse("F p & F q").unwrap()).is_err());
        assert_eq!(check(&m, &parse("p").unwrap()).unwrap().value, 1.0);
        assert_eq!(check(&m, &parse("q").unwrap()).unwrap().value, 0.0);
    }

    #[test]
    fn negated_until_uses_minimum() {
        let m = two_state_example();
        // best way to avoid q for 3 steps: play b at p forever
        let r = check(&m, &parse("G[0,3) !q").unwrap()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let b = m.alphabet().input_index("b").unwrap();
        assert_eq!(r.strategy.choose(0, 0), b);
        let r = check(&m, &parse("G !q").unwrap()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        let v = strategy_value(&m, &r.strategy, &parse("G !q").unwrap(), 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        let r = check(&m, &parse("!G !q").unwrap()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lower_bound_with_unbounded_upper() {
        let m = two_state_example();
        // reach q at step >= 2: from p always play a
        let r = check(&m, &parse("true U[2,inf) q").unwrap()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        let r = check(&m, &parse("p U[2,inf) q").unwrap()).unwrap();
        // p at steps 0,1 then q at step >= 2 with all intermediate p's
        let v = strategy_value(&m, &r.strategy, &parse("p U[2,inf) q").unwrap(), 1e-12).unwrap();
        assert!((v - r.value).abs() < 1e-9);
        // b keeps p for the first step, then a until q
        assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
        assert_eq!(r.strategy.choose(0, 0), m.alphabet().input_index("b").unwrap());
    }

    #[test]
    fn bounded_monotone_in_hi_and_replays() {
        let m = two_state_example();
        let mut last = 0.0;
        for hi in 1..8 {
            let f = Formula::eventually(0, Some(hi), atom("q"));
            let r = check(&m, &f).unwrap();
            assert!(r.value + 1e-12 >= last);
            last = r.value;
            let v = strategy_value(&m, &r.strategy, &f, 1e-12).unwrap();
            assert!((v - r.value).abs() < 1e-9);
        }
    }

    #[test]
    fn fixpoint_property() {
        let m = crate::bench::random_grid_world(4, 3).unwrap();
        let f = parse("(!hole) U goal").unwrap();
        let r = check(&m, &f).unwrap();
        let x = &r.per_state_values[0];
        let phi = sat_vector(&m, &parse("!hole").unwrap());
        let psi = sat_vector(&m, &atom("goal"));
        for s in 0..m.num_states() {
            if psi[s] || !phi[s] {
                continue;
            }
            let best = (0..m.num_inputs())
                .map(|a| m.dist(s, a).expect(x))
                .fold(0.0, f64::max);
            assert!((best - x[s]).abs() < 1e-9);
        }
    }
}
