//! Benchmark systems: slippery grid worlds, a slot machine and a few small
//! reference models.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{two_state_example, Mdp, MdpBuilder, MdpError, OutputSymbol};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Terrain {
    Concrete,
    Grass,
    Wall,
    Mud,
    Pavement,
    Gravel,
    Sand,
}

impl Terrain {
    pub const ALL: [Terrain; 7] = [
        Terrain::Concrete,
        Terrain::Grass,
        Terrain::Wall,
        Terrain::Mud,
        Terrain::Pavement,
        Terrain::Gravel,
        Terrain::Sand,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Terrain::Concrete => "concrete",
            Terrain::Grass => "grass",
            Terrain::Wall => "wall",
            Terrain::Mud => "mud",
            Terrain::Pavement => "pavement",
            Terrain::Gravel => "gravel",
            Terrain::Sand => "sand",
        }
    }

    /// Lateral deviation probability used by the random generator.
    pub fn default_slip(self) -> f64 {
        match self {
            Terrain::Concrete | Terrain::Wall => 0.0,
            Terrain::Pavement => 0.05,
            Terrain::Gravel => 0.1,
            Terrain::Grass => 0.15,
            Terrain::Sand => 0.2,
            Terrain::Mud => 0.25,
        }
    }
}

pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    East,
    South,
    West,
    North,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::East, Move::South, Move::West, Move::North];

    fn delta(self) -> (isize, isize) {
        match self {
            Move::East => (1, 0),
            Move::South => (0, 1),
            Move::West => (-1, 0),
            Move::North => (0, -1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Move::East => "East",
            Move::South => "South",
            Move::West => "West",
            Move::North => "North",
        }
    }
}

/// Grid layout. Cells are indexed `y * width + x`; `North` decreases `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub terrain: Vec<Terrain>,
    pub goals: Vec<Cell>,
    pub holes: Vec<Cell>,
    pub slip: BTreeMap<Terrain, f64>,
    pub start: Cell,
}

impl GridSpec {
    /// A grid of one terrain, slip `slip` everywhere, goal in the far corner.
    pub fn uniform(width: usize, height: usize, terrain: Terrain, slip: f64) -> Self {
        GridSpec {
            width,
            height,
            terrain: vec![terrain; width * height],
            goals: vec![(width.saturating_sub(1), height.saturating_sub(1))],
            holes: Vec::new(),
            slip: Terrain::ALL.iter().map(|&t| (t, slip)).collect(),
            start: (0, 0),
        }
    }

    pub fn terrain_at(&self, (x, y): Cell) -> Terrain {
        self.terrain[y * self.width + x]
    }

    fn slip_of(&self, t: Terrain) -> f64 {
        self.slip.get(&t).copied().unwrap_or(0.0)
    }

    fn in_grid(&self, (x, y): (isize, isize)) -> Option<Cell> {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            Some((x as usize, y as usize))
        } else {
            None
        }
    }

    fn open(&self, c: Cell) -> bool {
        self.terrain_at(c) != Terrain::Wall
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Spec(m));
        if self.width < 2 || self.height < 2 {
            return bad(format!("grid {}x{} is smaller than 2x2", self.width, self.height));
        }
        if self.terrain.len() != self.width * self.height {
            return bad("terrain map does not match the dimensions".into());
        }
        let inside = |c: &Cell| c.0 < self.width && c.1 < self.height;
        if !inside(&self.start) {
            return bad("start cell outside the grid".into());
        }
        if !self.open(self.start) {
            return bad("start cell is a wall".into());
        }
        if let Some(c) = self.goals.iter().chain(&self.holes).find(|c| !inside(c)) {
            return bad(format!("cell {c:?} outside the grid"));
        }
        if let Some((t, s)) = self.slip.iter().find(|(_, s)| !(0.0..=0.5).contains(*s)) {
            return bad(format!("slip {s} for {t:?} outside [0, 0.5]"));
        }
        Ok(())
    }

    /// Landing distribution of `mv` from `c`, before labelling.
    fn landing(&self, c: Cell, mv: Move) -> Vec<(Cell, f64)> {
        let (dx, dy) = mv.delta();
        let (x, y) = (c.0 as isize, c.1 as isize);
        let straight = self
            .in_grid((x + dx, y + dy))
            .filter(|&t| self.open(t))
            .unwrap_or(c);
        let slip = self.slip_of(self.terrain_at(c));
        // the two diagonals ahead of the move
        let (l, r) = if dx != 0 { ((dx, -1), (dx, 1)) } else { ((-1, dy), (1, dy)) };
        let mut out: Vec<(Cell, f64)> = vec![(straight, 1.0 - 2.0 * slip)];
        for (ddx, ddy) in [l, r] {
            match self.in_grid((x + ddx, y + ddy)).filter(|&t| self.open(t)) {
                Some(t) => out.push((t, slip)),
                None => out[0].1 += slip,
            }
        }
        out.retain(|&(_, p)| p > 0.0);
        out
    }
}

/// Builds the grid MDP; every cell is a state, goal and hole cells absorb.
pub fn grid_world(spec: &GridSpec) -> Result<Mdp, BenchError> {
    spec.validate()?;
    let w = spec.width;
    let cells: Vec<Cell> = (0..spec.height)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .collect();
    let goals: BTreeSet<Cell> = spec.goals.iter().copied().collect();
    let holes: BTreeSet<Cell> = spec.holes.iter().copied().collect();
    let base = |c: Cell| -> &'static str {
        if goals.contains(&c) {
            "goal"
        } else if holes.contains(&c) {
            "hole"
        } else {
            spec.terrain_at(c).name()
        }
    };
    let absorbing = |c: Cell| goals.contains(&c) || holes.contains(&c) || !spec.open(c);

    let mut landings: HashMap<(Cell, usize), Vec<(Cell, f64)>> = HashMap::new();
    for &c in &cells {
        for (i, &mv) in Move::ALL.iter().enumerate() {
            let l = if absorbing(c) {
                vec![(c, 1.0)]
            } else {
                spec.landing(c, mv)
            };
            landings.insert((c, i), l);
        }
    }
    // cells that share their base label with another landing cell of some move
    let mut tagged: BTreeSet<Cell> = BTreeSet::new();
    for l in landings.values() {
        for (i, (a, _)) in l.iter().enumerate() {
            for (b, _) in &l[i + 1..] {
                if a != b && base(*a) == base(*b) {
                    tagged.insert(*a);
                    tagged.insert(*b);
                }
            }
        }
    }

    let mut b = MdpBuilder::new();
    for mv in Move::ALL {
        b.input(mv.name());
    }
    let mut ids = HashMap::new();
    for &c in &cells {
        let label = if tagged.contains(&c) {
            let name = format!("{}_{}_{}", base(c), c.0, c.1);
            b.output(OutputSymbol::with_props(name.clone(), [base(c)]));
            name
        } else {
            base(c).to_string()
        };
        ids.insert(c, b.state(&format!("c{}_{}", c.0, c.1), &label));
    }
    b.initial(ids[&spec.start]);
    for &c in &cells {
        for (i, mv) in Move::ALL.iter().enumerate() {
            for &(t, p) in &landings[&(c, i)] {
                b.trans(ids[&c], mv.name(), ids[&t], p);
            }
        }
    }
    let mdp = b.build()?;
    mdp.validate(true)?;
    Ok(mdp)
}

/// Terrains used by the random generator (walls are placed separately).
const RANDOM_TERRAINS: [Terrain; 6] = [
    Terrain::Concrete,
    Terrain::Pavement,
    Terrain::Gravel,
    Terrain::Grass,
    Terrain::Sand,
    Terrain::Mud,
];

fn hole_free_path(spec: &GridSpec) -> bool {
    let goals: BTreeSet<Cell> = spec.goals.iter().copied().collect();
    let holes: BTreeSet<Cell> = spec.holes.iter().copied().collect();
    let mut seen = BTreeSet::from([spec.start]);
    let mut queue = VecDeque::from([spec.start]);
    while let Some(c) = queue.pop_front() {
        if goals.contains(&c) {
            return true;
        }
        for mv in Move::ALL {
            let (dx, dy) = mv.delta();
            if let Some(t) = spec.in_grid((c.0 as isize + dx, c.1 as isize + dy)) {
                if spec.open(t) && !holes.contains(&t) && seen.insert(t) {
                    queue.push_back(t);
                }
            }
        }
    }
    false
}

/// Random layout: start at the top-left corner, one goal, `size²/8` holes
/// and a few walls, re-drawn until a hole-free path to the goal exists.
pub fn random_grid_spec(width: usize, height: usize, seed: u64) -> Result<GridSpec, BenchError> {
    if width < 2 || height < 2 {
        return Err(BenchError::Spec(format!("grid {width}x{height} is smaller than 2x2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = width * height;
    let start = (0, 0);
    let free: Vec<Cell> = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .filter(|&c| c != start)
        .collect();
    loop {
        let mut terrain: Vec<Terrain> = (0..n)
            .map(|_| *RANDOM_TERRAINS.choose(&mut rng).unwrap())
            .collect();
        terrain[0] = Terrain::Concrete;
        let mut cells = free.clone();
        cells.shuffle(&mut rng);
        let goal = cells[0];
        let holes: Vec<Cell> = cells[1..].iter().copied().take(n / 8).collect();
        let walls = n / 16;
        for &(x, y) in cells[1 + holes.len()..].iter().take(walls) {
            if rng.gen_bool(0.5) {
                terrain[y * width + x] = Terrain::Wall;
            }
        }
        terrain[goal.1 * width + goal.0] = Terrain::Concrete;
        let spec = GridSpec {
            width,
            height,
            terrain,
            goals: vec![goal],
            holes,
            slip: Terrain::ALL.iter().map(|&t| (t, t.default_slip())).collect(),
            start,
        };
        if hole_free_path(&spec) {
            return Ok(spec);
        }
    }
}

/// A `size x size` random grid world; a pure function of `(size, seed)`.
pub fn random_grid_world(size: usize, seed: u64) -> Result<Mdp, BenchError> {
    grid_world(&random_grid_spec(size, size, seed)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observability {
    Full,
    /// Only reels showing a bar are visible.
    Limited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSpec {
    pub initial_spins: usize,
    pub max_spins: usize,
    pub extra_spins: usize,
    pub extra_probability: f64,
    /// Bar probability of the `k`-th spin, `k = 0, 1, ...`.
    pub bar_schedule: Vec<f64>,
    pub observability: Observability,
}

impl Default for SlotSpec {
    fn default() -> Self {
        SlotSpec {
            initial_spins: 3,
            max_spins: 5,
            extra_spins: 2,
            extra_probability: 0.5,
            bar_schedule: vec![0.5, 0.4, 0.3, 0.2, 0.1],
            observability: Observability::Full,
        }
    }
}

impl SlotSpec {
    pub fn limited() -> Self {
        SlotSpec {
            observability: Observability::Limited,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::Spec(m.to_string()));
        if self.initial_spins == 0 || self.initial_spins > self.max_spins {
            return bad("initial spins must be in 1..=max_spins");
        }
        if self.bar_schedule.len() < self.max_spins {
            return bad("bar schedule shorter than the spin cap");
        }
        if self.bar_schedule.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return bad("bar probabilities must lie in (0, 1]");
        }
        if self.bar_schedule.windows(2).any(|w| w[1] > w[0]) {
            return bad("bar schedule must be non-increasing");
        }
        if !(0.0..=1.0).contains(&self.extra_probability) {
            return bad("extra-spin probability outside [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Reel {
    Blank,
    Apple,
    Bar,
}

impl Reel {
    fn name(self) -> &'static str {
        match self {
            Reel::Blank => "blank",
            Reel::Apple => "apple",
            Reel::Bar => "bar",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum SlotState {
    Playing {
        reels: [Reel; 3],
        used: usize,
        allowed: usize,
    },
    Won,
    Lost,
}

impl SlotState {
    fn label(&self, obs: Observability) -> String {
        match self {
            SlotState::Won => "BAR3".into(),
            SlotState::Lost => "end".into(),
            SlotState::Playing { reels, .. } => match obs {
                Observability::Full => reels.map(Reel::name).join("-"),
                Observability::Limited => {
                    let bars: String = (0..3)
                        .filter(|&i| reels[i] == Reel::Bar)
                        .map(|i| char::from(b'1' + i as u8))
                        .collect();
                    if bars.is_empty() {
                        "bars_none".into()
                    } else {
                        format!("bars_{bars}")
                    }
                }
            },
        }
    }

    fn name(&self) -> String {
        match self {
            SlotState::Won => "won".into(),
            SlotState::Lost => "lost".into(),
            SlotState::Playing {
                reels,
                used,
                allowed,
            } => format!(
                "{}_u{used}_a{allowed}",
                reels.map(|r| &r.name()[..2]).concat()
            ),
        }
    }
}

const SLOT_INPUTS: [&str; 4] = ["reel1", "reel2", "reel3", "stop"];

fn prize(reels: [Reel; 3]) -> SlotState {
    if reels.iter().all(|&r| r == Reel::Bar) {
        SlotState::Won
    } else {
        SlotState::Lost
    }
}

fn slot_successors(spec: &SlotSpec, s: SlotState, input: usize) -> Vec<(SlotState, f64)> {
    let SlotState::Playing {
        reels,
        used,
        allowed,
    } = s
    else {
        return vec![(s, 1.0)];
    };
    if input == 3 {
        let more = SlotState::Playing {
            reels,
            used,
            allowed: (allowed + spec.extra_spins).min(spec.max_spins),
        };
        return vec![
            (more, spec.extra_probability),
            (prize(reels), 1.0 - spec.extra_probability),
        ];
    }
    let bar = spec.bar_schedule[used];
    let used = used + 1;
    [(Reel::Bar, bar), (Reel::Apple, 1.0 - bar)]
        .into_iter()
        .map(|(sym, p)| {
            let mut r = reels;
            r[input] = sym;
            let next = if used >= allowed {
                prize(r)
            } else {
                SlotState::Playing {
                    reels: r,
                    used,
                    allowed,
                }
            };
            (next, p)
        })
        .collect()
}

/// Slot machine with reels `reel1..reel3` and a `stop` input. Only states
/// reachable from the all-blank start are generated.
pub fn slot_machine(spec: &SlotSpec) -> Result<Mdp, BenchError> {
    spec.validate()?;
    let start = SlotState::Playing {
        reels: [Reel::Blank; 3],
        used: 0,
        allowed: spec.initial_spins,
    };
    let mut order = vec![start];
    let mut index: HashMap<SlotState, usize> = HashMap::from([(start, 0)]);
    let mut edges = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let s = order[i];
        for a in 0..SLOT_INPUTS.len() {
            for (t, p) in slot_successors(spec, s, a) {
                let next = index.len();
                let id = *index.entry(t).or_insert_with(|| {
                    order.push(t);
                    next
                });
                edges.push((i, a, id, p));
            }
        }
        i += 1;
    }
    let mut b = MdpBuilder::new();
    for name in SLOT_INPUTS {
        b.input(name);
    }
    // prize outputs carry the proposition of the same name
    for s in &order {
        b.state(&s.name(), &s.label(spec.observability));
    }
    b.initial(0);
    for (s, a, t, p) in edges {
        b.trans(s, SLOT_INPUTS[a], t, p);
    }
    let mdp = b.build()?;
    mdp.validate(true)?;
    Ok(mdp)
}

/// Three-state model that crashes with probability `rate` per step:
/// `ok -send-> {ok: 1 - rate, crash: rate}`, `crash` absorbs.
pub fn crash_model(rate: f64) -> Result<Mdp, BenchError> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(BenchError::Spec(format!("crash rate {rate} outside [0, 1]")));
    }
    let mut b = MdpBuilder::new();
    let init = b.state("init", "init");
    let ok = b.state("ok", "ok");
    let crash = b.state("crash", "crash");
    b.initial(init)
        .trans(init, "send", ok, 1.0 - rate)
        .trans(init, "send", crash, rate)
        .trans(ok, "send", ok, 1.0 - rate)
        .trans(ok, "send", crash, rate)
        .trans(crash, "send", crash, 1.0);
    Ok(b.build()?)
}

/// Generator spec strings accepted on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// `grid:WxH:seed=S`
    RandomGrid { width: usize, height: usize, seed: u64 },
    /// `slot`, `slot:full`, `slot:limited`
    Slot(Observability),
    /// `candidate`: the two-state reference MDP
    Candidate,
    /// `crash:RATE`
    Crash(f64),
}

impl Generator {
    pub fn build(&self) -> Result<Mdp, BenchError> {
        match self {
            Generator::RandomGrid {
                width,
                height,
                seed,
            } => grid_world(&random_grid_spec(*width, *height, *seed)?),
            Generator::Slot(obs) => slot_machine(&SlotSpec {
                observability: *obs,
                ..SlotSpec::default()
            }),
            Generator::Candidate => Ok(two_state_example()),
            Generator::Crash(rate) => crash_model(*rate),
        }
    }
}

impl FromStr for Generator {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BenchError::Spec(format!("unrecognized generator `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["candidate"] => Ok(Generator::Candidate),
            ["slot"] | ["slot", "full"] => Ok(Generator::Slot(Observability::Full)),
            ["slot", "limited"] => Ok(Generator::Slot(Observability::Limited)),
            ["crash", rate] => rate.parse().map(Generator::Crash).map_err(|_| bad()),
            ["grid", dims, rest @ ..] => {
                let (w, h) = dims.split_once('x').ok_or_else(bad)?;
                let width = w.parse().map_err(|_| bad())?;
                let height = h.parse().map_err(|_| bad())?;
                let mut seed = 0;
                for opt in rest {
                    match opt.split_once('=') {
                        Some(("seed", v)) => seed = v.parse().map_err(|_| bad())?,
                        _ => return Err(bad()),
                    }
                }
                Ok(Generator::RandomGrid {
                    width,
                    height,
                    seed,
                })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::RandomGrid {
                width,
                height,
                seed,
            } => write!(f, "grid:{width}x{height}:seed={seed}"),
            Generator::Slot(Observability::Full) => write!(f, "slot:full"),
            Generator::Slot(Observability::Limited) => write!(f, "slot:limited"),
            Generator::Candidate => write!(f, "candidate"),
            Generator::Crash(r) => write!(f, "crash:{r}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse;
    use crate::model_file::write_mdp;
    use crate::pmc::check;

    #[test]
    fn slip_free_grid_reaches_goal() {
        let spec = GridSpec::uniform(4, 4, Terrain::Concrete, 0.0);
        let m = grid_world(&spec).unwrap();
        for s in 0..m.num_states() {
            for a in 0..m.num_inputs() {
                assert_eq!(m.dist(s, a).support().len(), 1);
            }
        }
        let r = check(&m, &parse("(!hole) U goal").unwrap()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mass_folds_into_straight_move() {
        let spec = GridSpec::uniform(3, 3, Terrain::Grass, 0.1);
        let m = grid_world(&spec).unwrap();
        let corner = m.state_index("c0_0").unwrap();
        let east = m.alphabet().input_index("East").unwrap();
        let d = m.dist(corner, east);
        // north-east is off grid
        assert!((d.prob(m.state_index("c1_0").unwrap()) - 0.9).abs() < 1e-12);
        assert!((d.prob(m.state_index("c1_1").unwrap()) - 0.1).abs() < 1e-12);
        let north = m.alphabet().input_index("North").unwrap();
        assert_eq!(m.dist(corner, north).prob(corner), 1.0);
        for s in 0..m.num_states() {
            for a in 0..m.num_inputs() {
                assert!((m.dist(s, a).total() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shared_terrain_gets_coordinates() {
        let spec = GridSpec::uniform(3, 3, Terrain::Sand, 0.2);
        let m = grid_world(&spec).unwrap();
        m.validate(true).unwrap();
        let s = m.state_index("c1_1").unwrap();
        let name = m.alphabet().output_name(m.label(s));
        assert_eq!(name, "sand_1_1");
        assert!(m.props(s).contains("sand"));
    }

    #[test]
    fn random_grid_is_reproducible() {
        let a = random_grid_world(4, 1).unwrap();
        let b = random_grid_world(4, 1).unwrap();
        assert_eq!(write_mdp(&a), write_mdp(&b));
        assert_eq!(a.num_states(), 16);
        let r = check(&a, &parse("(!hole) U goal").unwrap()).unwrap();
        assert!(r.value > 0.0);
        assert_eq!(random_grid_world(14, 3).unwrap().num_states(), 196);
        assert_ne!(write_mdp(&a), write_mdp(&random_grid_world(4, 2).unwrap()));
    }

    #[test]
    fn slot_limited_coarsens_full() {
        let full = slot_machine(&SlotSpec::default()).unwrap();
        let lim = slot_machine(&SlotSpec::limited()).unwrap();
        assert_eq!(full.num_states(), lim.num_states());
        for s in 0..full.num_states() {
            assert_eq!(full.state_name(s), lim.state_name(s));
            for a in 0..full.num_inputs() {
                assert_eq!(full.dist(s, a), lim.dist(s, a));
            }
        }
        let find = |m: &Mdp, label: &str| {
            (0..m.num_states()).find(|&s| m.alphabet().output_name(m.label(s)) == label)
        };
        let x = find(&full, "bar-blank-apple").unwrap();
        let y = find(&full, "bar-apple-blank").unwrap();
        assert_ne!(full.label(x), full.label(y));
        assert_eq!(lim.label(x), lim.label(y));
        assert!(lim.alphabet().outputs.len() < full.alphabet().outputs.len());
    }

    #[test]
    fn slot_certain_bars() {
        let spec = SlotSpec {
            bar_schedule: vec![1.0; 5],
            ..SlotSpec::default()
        };
        let m = slot_machine(&spec).unwrap();
        let r = check(&m, &parse("F[0,5) BAR3").unwrap()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let strat = crate::mdp::FiniteMemoryStrategy::step_indexed(
            (0..3).map(|i| vec![i; m.num_states()]).collect(),
        );
        let v = crate::pmc::strategy_value(&m, &strat, &parse("F[0,5) BAR3").unwrap(), 1e-12)
            .unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slot_value_increases_with_horizon() {
        let m = slot_machine(&SlotSpec::default()).unwrap();
        let values: Vec<f64> = (1..14)
            .map(|n| {
                check(&m, &Formula::eventually(0, Some(n), Formula::atom("BAR3")))
                    .unwrap()
                    .value
            })
            .collect();
        // a win needs three spins; wins after a stop need at least six outputs
        assert_eq!(values[..3], [0.0; 3]);
        assert!((values[3] - 0.5 * 0.4 * 0.3).abs() < 1e-12);
        for w in values.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in values[5..].windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    use crate::ltl::Formula;

    #[test]
    fn crash_closed_form() {
        let m = crash_model(0.1).unwrap();
        let v = check(&m, &parse("F[0,5) crash").unwrap()).unwrap().value;
        assert!((v - (1.0 - 0.9f64.powi(4))).abs() < 1e-12);
    }

    #[test]
    fn generator_strings() {
        for s in ["grid:4x4:seed=1", "slot:full", "slot:limited", "candidate", "crash:0.1"] {
            let g: Generator = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
            g.build().unwrap();
        }
        assert!("grid:4by4".parse::<Generator>().is_err());
        assert!("mqtt".parse::<Generator>().is_err());
    }
}
