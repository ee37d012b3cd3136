//! Observation-table learning of deterministic MDPs from sampled traces.
//!
//! Rows are access traces, columns are continuations ending in an input,
//! and a cell is the output-frequency map observed after the row followed
//! by the column. Cells are read from the shared [`SampleMultiset`] on every
//! query, so they always reflect the current samples.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blackbox::{NodeId, SampleMultiset, Sut};
use crate::mdp::{Alphabet, Distribution, InputId, Mdp, MdpError, OutputId, StateId, Trace};

pub type Freq = BTreeMap<OutputId, u64>;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("table is not closed: row {0} matches no representative")]
    NotClosed(String),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Significance of the Hoeffding compatibility test.
    pub alpha: f64,
    /// Observations per representative cell before it counts as complete.
    pub n_min: u64,
    /// Replay attempts per under-sampled cell and round.
    pub refine_attempts: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            alpha: 0.05,
            n_min: 10,
            refine_attempts: 20,
        }
    }
}

/// Hoeffding two-sample test: frequencies are compatible unless some output
/// differs in relative frequency by more than
/// `(1/√n1 + 1/√n2) · √(½ ln(2/alpha))`. No evidence is always compatible.
pub fn compatible(f1: &Freq, f2: &Freq, alpha: f64) -> bool {
    let n1: u64 = f1.values().sum();
    let n2: u64 = f2.values().sum();
    if n1 == 0 || n2 == 0 {
        return true;
    }
    let (n1, n2) = (n1 as f64, n2 as f64);
    let bound = (1.0 / n1.sqrt() + 1.0 / n2.sqrt()) * (0.5 * (2.0 / alpha).ln()).sqrt();
    f1.keys().chain(f2.keys()).all(|o| {
        let a = f1.get(o).copied().unwrap_or(0) as f64 / n1;
        let b = f2.get(o).copied().unwrap_or(0) as f64 / n2;
        (a - b).abs() <= bound
    })
}

/// A column `a1·o1·…·a(k-1)·o(k-1)·ak`: the cell of row `r` is the output
/// frequency after `r·a1·o1·…` when `ak` is applied.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Column {
    pub steps: Vec<(InputId, OutputId)>,
    pub last: InputId,
}

impl Column {
    pub fn single(input: InputId) -> Self {
        Column {
            steps: Vec::new(),
            last: input,
        }
    }

    fn prepended(&self, input: InputId, output: OutputId) -> Self {
        let mut steps = vec![(input, output)];
        steps.extend_from_slice(&self.steps);
        Column {
            steps,
            last: self.last,
        }
    }

    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> impl fmt::Display + 'a {
        ColumnDisplay {
            column: self,
            alphabet,
        }
    }
}

struct ColumnDisplay<'a> {
    column: &'a Column,
    alphabet: &'a Alphabet,
}

impl fmt::Display for ColumnDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &(a, o) in &self.column.steps {
            write!(
                f,
                "{}·{}·",
                self.alphabet.input_name(a),
                self.alphabet.output_name(o)
            )?;
        }
        write!(f, "{}", self.alphabet.input_name(self.column.last))
    }
}

/// Greedy compatibility classes over the rows of `P`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    /// Indices into `P` of class representatives, in class order.
    pub reps: Vec<usize>,
    /// Class of every row of `P`.
    pub class_of: Vec<usize>,
}

/// Why a table is not ready for hypothesis construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TableDefect {
    Unclosed { row: String },
    Inconsistent { rows: (String, String), column: String },
    PartitionChanged,
}

impl fmt::Display for TableDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableDefect::Unclosed { row } => write!(f, "not closed: {row}"),
            TableDefect::Inconsistent { rows, column } => {
                write!(f, "not consistent: {} / {} differ on {column}", rows.0, rows.1)
            }
            TableDefect::PartitionChanged => write!(f, "row classes changed"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stabilization {
    /// Closed, consistent and every reachable cell complete or exhausted.
    Stable,
    /// Closed and consistent, but sampling stopped at the budget.
    BudgetExhausted,
}

/// A learned hypothesis with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub mdp: Mdp,
    /// Access trace of each state, rendered with the alphabet.
    pub representatives: Vec<String>,
    /// `(state, input)` pairs without observations; modelled as self-loops.
    pub incomplete: Vec<(StateId, InputId)>,
}

#[derive(Debug, Clone)]
pub struct ObservationTable {
    alphabet: Alphabet,
    config: LearnerConfig,
    samples: SampleMultiset,
    rows: Vec<Trace>,
    row_set: HashSet<Trace>,
    columns: Vec<Column>,
    column_set: HashSet<Column>,
    built_partition: Option<Vec<Trace>>,
}

type Signature = Vec<Freq>;

impl ObservationTable {
    pub fn new(alphabet: Alphabet, root_output: OutputId, config: LearnerConfig) -> Self {
        let root = Trace::new(root_output);
        let columns: Vec<Column> = (0..alphabet.inputs.len()).map(Column::single).collect();
        ObservationTable {
            alphabet,
            config,
            samples: SampleMultiset::new(root_output),
            row_set: HashSet::from([root.clone()]),
            rows: vec![root],
            column_set: columns.iter().cloned().collect(),
            columns,
            built_partition: None,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn samples(&self) -> &SampleMultiset {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut SampleMultiset {
        &mut self.samples
    }

    pub fn rows(&self) -> &[Trace] {
        &self.rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn add_row(&mut self, row: Trace) -> bool {
        if self.row_set.insert(row.clone()) {
            self.rows.push(row);
            true
        } else {
            false
        }
    }

    pub fn add_column(&mut self, column: Column) -> bool {
        if self.column_set.insert(column.clone()) {
            self.columns.push(column);
            true
        } else {
            false
        }
    }

    fn cell_at(&self, row_node: Option<NodeId>, column: &Column) -> Freq {
        let Some(mut node) = row_node else {
            return Freq::new();
        };
        for &(a, o) in &column.steps {
            match self.samples.child(node, a, o) {
                Some(n) => node = n,
                None => return Freq::new(),
            }
        }
        self.samples.out_freq_at(node, column.last)
    }

    pub fn cell(&self, row: &Trace, column: &Column) -> Freq {
        self.cell_at(self.samples.node(row), column)
    }

    fn signature(&self, row: &Trace) -> Signature {
        let node = self.samples.node(row);
        self.columns.iter().map(|c| self.cell_at(node, c)).collect()
    }

    fn sig_compatible(&self, a: &(OutputId, Signature), b: &(OutputId, Signature)) -> bool {
        a.0 == b.0
            && a.1
                .iter()
                .zip(&b.1)
                .all(|(x, y)| compatible(x, y, self.config.alpha))
    }

    pub fn row_compatible(&self, r1: &Trace, r2: &Trace) -> bool {
        self.sig_compatible(
            &(r1.last_output(), self.signature(r1)),
            &(r2.last_output(), self.signature(r2)),
        )
    }

    fn p_signatures(&self) -> Vec<(OutputId, Signature)> {
        self.rows
            .iter()
            .map(|r| (r.last_output(), self.signature(r)))
            .collect()
    }

    fn partition_from(&self, sigs: &[(OutputId, Signature)]) -> Partition {
        let mut reps: Vec<usize> = Vec::new();
        let mut class_of = Vec::with_capacity(sigs.len());
        for (i, sig) in sigs.iter().enumerate() {
            match reps.iter().position(|&r| self.sig_compatible(&sigs[r], sig)) {
                Some(c) => class_of.push(c),
                None => {
                    class_of.push(reps.len());
                    reps.push(i);
                }
            }
        }
        Partition { reps, class_of }
    }

    pub fn partition(&self) -> Partition {
        self.partition_from(&self.p_signatures())
    }

    /// Observed one-step extensions of `row` that are not rows themselves.
    fn extensions(&self, row: &Trace) -> Vec<Trace> {
        let Some(node) = self.samples.node(row) else {
            return Vec::new();
        };
        self.samples
            .children(node)
            .map(|((a, o), _)| row.extended(a, o))
            .filter(|t| !self.row_set.contains(t))
            .collect()
    }

    fn class_for(
        &self,
        sig: &(OutputId, Signature),
        sigs: &[(OutputId, Signature)],
        part: &Partition,
    ) -> Option<usize> {
        part.reps
            .iter()
            .position(|&r| self.sig_compatible(&sigs[r], sig))
    }

    fn find_unclosed(&self, sigs: &[(OutputId, Signature)], part: &Partition) -> Option<Trace> {
        for row in &self.rows {
            for ext in self.extensions(row) {
                let sig = (ext.last_output(), self.signature(&ext));
                if self.class_for(&sig, sigs, part).is_none() {
                    return Some(ext);
                }
            }
        }
        None
    }

    /// A class member and its representative whose common one-step
    /// extensions disagree; returns the separating column.
    fn find_inconsistency(&self, part: &Partition) -> Option<(Trace, Trace, Column)> {
        for (i, row) in self.rows.iter().enumerate() {
            let rep_idx = part.reps[part.class_of[i]];
            if rep_idx == i {
                continue;
            }
            let rep = &self.rows[rep_idx];
            let (Some(n_rep), Some(n_row)) = (self.samples.node(rep), self.samples.node(row)) else {
                continue;
            };
            for ((a, o), c_rep) in self.samples.children(n_rep) {
                let Some(c_row) = self.samples.child(n_row, a, o) else {
                    continue;
                };
                for col in &self.columns {
                    let f1 = self.cell_at(Some(c_rep), col);
                    let f2 = self.cell_at(Some(c_row), col);
                    if !compatible(&f1, &f2, self.config.alpha) {
                        let new = col.prepended(a, o);
                        if !self.column_set.contains(&new) {
                            return Some((rep.clone(), row.clone(), new));
                        }
                    }
                }
            }
        }
        None
    }

    /// One closedness or consistency repair; false when there is none.
    fn repair_once(&mut self) -> bool {
        let sigs = self.p_signatures();
        let part = self.partition_from(&sigs);
        if let Some(row) = self.find_unclosed(&sigs, &part) {
            self.add_row(row);
            return true;
        }
        if let Some((_, _, col)) = self.find_inconsistency(&part) {
            self.add_column(col);
            return true;
        }
        false
    }

    /// Recomputes closedness, consistency and the row classes from the
    /// live samples.
    pub fn check(&self) -> Result<(), TableDefect> {
        let sigs = self.p_signatures();
        let part = self.partition_from(&sigs);
        if let Some(row) = self.find_unclosed(&sigs, &part) {
            return Err(TableDefect::Unclosed {
                row: row.display(&self.alphabet).to_string(),
            });
        }
        if let Some((a, b, col)) = self.find_inconsistency(&part) {
            return Err(TableDefect::Inconsistent {
                rows: (
                    a.display(&self.alphabet).to_string(),
                    b.display(&self.alphabet).to_string(),
                ),
                column: col.display(&self.alphabet).to_string(),
            });
        }
        if let Some(built) = &self.built_partition {
            let reps: Vec<&Trace> = part.reps.iter().map(|&r| &self.rows[r]).collect();
            if reps.len() != built.len() || reps.iter().zip(built).any(|(a, b)| *a != b) {
                return Err(TableDefect::PartitionChanged);
            }
        }
        Ok(())
    }

    /// Under-sampled `(row, input)` cells of representatives and their
    /// observed extensions, least observed first.
    fn refine_targets(&self, part: &Partition) -> Vec<(Trace, InputId, u64)> {
        let mut seen = HashSet::new();
        let mut targets = Vec::new();
        let k = self.alphabet.inputs.len();
        for &r in &part.reps {
            let rep = &self.rows[r];
            let mut rows = vec![rep.clone()];
            if let Some(node) = self.samples.node(rep) {
                rows.extend(self.samples.children(node).map(|((a, o), _)| rep.extended(a, o)));
            }
            for row in rows {
                if !seen.insert(row.clone()) {
                    continue;
                }
                let node = self.samples.node(&row);
                for a in 0..k {
                    let have = node.map_or(0, |n| self.samples.extensions_at(n, a));
                    if have < self.config.n_min {
                        targets.push((row.clone(), a, have));
                    }
                }
            }
        }
        // stable sort keeps discovery order among equal counts
        targets.sort_by_key(|&(_, _, have)| have);
        targets
    }

    /// Replays `row` from reset and applies `input`; returns whether the
    /// replay reached the row. The sampled trace is recorded either way.
    fn replay<S: Sut + ?Sized>(&mut self, sut: &mut S, row: &Trace, input: InputId) -> bool {
        let head = sut.reset();
        let mut t = Trace::new(head);
        let mut reached = head == row.head;
        if reached {
            for &(a, o) in &row.tail {
                let got = sut.step(a);
                t.push(a, got);
                if got != o {
                    reached = false;
                    break;
                }
            }
            if reached {
                let o = sut.step(input);
                t.push(input, o);
            }
        }
        // the root output is fixed, so the head always matches
        let _ = self.samples.record(&t);
        reached
    }

    /// Repairs closedness and consistency and samples under-observed cells
    /// until nothing changes or `sut.steps_taken()` reaches `budget`. Each
    /// cell gets at most `refine_attempts` replays per call.
    pub fn close_and_consistentize<S: Sut + ?Sized>(
        &mut self,
        sut: &mut S,
        budget: u64,
    ) -> Stabilization {
        let mut spent: HashMap<(Trace, InputId), usize> = HashMap::new();
        loop {
            while self.repair_once() {}
            let part = self.partition();
            let mut attempted = false;
            for (row, a, have) in self.refine_targets(&part) {
                let used = spent.entry((row.clone(), a)).or_insert(0);
                let need = self.config.n_min - have;
                let mut got = 0;
                while *used < self.config.refine_attempts && got < need {
                    if sut.steps_taken() >= budget {
                        while self.repair_once() {}
                        return Stabilization::BudgetExhausted;
                    }
                    *used += 1;
                    attempted = true;
                    if self.replay(sut, &row, a) {
                        got += 1;
                    }
                }
            }
            if !attempted {
                return Stabilization::Stable;
            }
        }
    }

    /// Adds every prefix of `cex` to the rows; returns how many were new.
    pub fn process_counterexample(&mut self, cex: &Trace) -> usize {
        cex.prefixes().filter(|p| self.add_row(p.clone())).count()
    }

    /// One state per class; transitions estimated from the cells of all rows
    /// in the class. Remembers the partition for later [`ObservationTable::check`]s.
    pub fn build_hypothesis(&mut self) -> Result<Hypothesis, LearnerError> {
        let sigs = self.p_signatures();
        let part = self.partition_from(&sigs);
        let n = part.reps.len();
        let k = self.alphabet.inputs.len();
        let reps: Vec<Trace> = part.reps.iter().map(|&r| self.rows[r].clone()).collect();
        let index_of: HashMap<&Trace, usize> =
            self.rows.iter().enumerate().map(|(i, r)| (r, i)).collect();

        let mut members: Vec<Vec<&Trace>> = vec![Vec::new(); n];
        for (i, row) in self.rows.iter().enumerate() {
            members[part.class_of[i]].push(row);
        }
        // representatives first, so they win ties
        for (c, list) in members.iter_mut().enumerate() {
            list.sort_by_key(|r| *r != &reps[c]);
        }

        let mut trans = Vec::with_capacity(n);
        let mut incomplete = Vec::new();
        for (c, rows) in members.iter().enumerate() {
            let mut row = Vec::with_capacity(k);
            for a in 0..k {
                // the best-observed member: a row is one concrete state, so its
                // estimate never mixes states that were merged on thin evidence
                let mut best: Option<(&Trace, Freq, u64)> = None;
                for &r in rows {
                    let cell = self.cell(r, &Column::single(a));
                    let total: u64 = cell.values().sum();
                    if best.as_ref().map_or(total > 0, |b| total > b.2) {
                        best = Some((r, cell, total));
                    }
                }
                let Some((source, freq, total)) = best else {
                    incomplete.push((c, a));
                    row.push(Distribution::dirac(c));
                    continue;
                };
                let mut entries = Vec::with_capacity(freq.len());
                for (&o, &f) in &freq {
                    let succ = source.extended(a, o);
                    let known = index_of
                        .get(&succ)
                        .or_else(|| index_of.get(&reps[c].extended(a, o)));
                    let class = match known {
                        Some(&i) => part.class_of[i],
                        None => {
                            let sig = (o, self.signature(&succ));
                            self.class_for(&sig, &sigs, &part).ok_or_else(|| {
                                LearnerError::NotClosed(succ.display(&self.alphabet).to_string())
                            })?
                        }
                    };
                    entries.push((class, f as f64 / total as f64));
                }
                row.push(Distribution::new(entries));
            }
            trans.push(row);
        }
        let labels = reps.iter().map(Trace::last_output).collect();
        let names = (0..n).map(|i| format!("h{i}")).collect();
        let mdp = Mdp::from_parts(self.alphabet.clone(), names, labels, 0, trans)?;
        mdp.validate(true)?;
        self.built_partition = Some(reps.clone());
        Ok(Hypothesis {
            mdp,
            representatives: reps
                .iter()
                .map(|r| r.display(&self.alphabet).to_string())
                .collect(),
            incomplete,
        })
    }
}
