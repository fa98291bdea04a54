//! Grid data model, case ingestion and the study-system composer.
//!
//! Every quantity stored in a [`GridCase`] is per-unit on `base_mva`; voltage
//! limits are stored squared (`v2_min`, `v2_max`) because the radial models work
//! with squared magnitudes.

mod benchmark;
mod matpower;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use benchmark::{
    builtin_benchmark, compose_benchmark, BENCHMARK_DSO_COST, BENCHMARK_JSON, CASE15_M, CASE9_M,
    INTERFACE_RATING,
};

/// Squared-magnitude band used when a source case carries no voltage limits.
pub const DEFAULT_V2_MIN: f64 = 0.81;
pub const DEFAULT_V2_MAX: f64 = 1.21;

/// Anything above this in p.u. is almost certainly a unit mix-up.
const PER_UNIT_GUARD: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Slack,
    Generator,
    Load,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Meshed,
    Radial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    pub p_load: f64,
    pub q_load: f64,
    #[serde(default = "default_v2_min")]
    pub v2_min: f64,
    #[serde(default = "default_v2_max")]
    pub v2_max: f64,
}

fn default_v2_min() -> f64 {
    DEFAULT_V2_MIN
}

fn default_v2_max() -> f64 {
    DEFAULT_V2_MAX
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Apparent power limit; 0 means unlimited.
    pub s_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub cost_a2: f64,
    pub cost_a1: f64,
    pub cost_a0: f64,
}

impl Generator {
    pub fn cost(&self, p: f64) -> f64 {
        self.cost_a2 * p * p + self.cost_a1 * p + self.cost_a0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCase {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub gens: Vec<Generator>,
    pub topology_kind: TopologyKind,
}

/// Where DSO `dso_index` hangs off the transmission grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interconnection {
    pub dso_index: usize,
    pub tso_bus: usize,
    pub dso_root_bus: usize,
    /// Interface rating (p.u.); bounds the TSO-side reactive exchange.
    #[serde(default = "default_interface_rating")]
    pub s_max: f64,
}

fn default_interface_rating() -> f64 {
    INTERFACE_RATING
}

/// One transmission grid (the root of the tree) and its distribution feeders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub tso: GridCase,
    pub dsos: Vec<GridCase>,
    pub links: Vec<Interconnection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseFormat {
    MatpowerM,
    NativeJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    NoSlack,
    MultipleSlack { buses: Vec<usize> },
    DuplicateBus { bus: usize },
    BadVoltageBand { bus: usize },
    UnknownBus { element: String, bus: usize },
    SelfLoop { line: usize },
    NonPositiveReactance { line: usize },
    NegativeResistance { line: usize },
    NegativeRating { line: usize },
    EmptyRange { gen: usize, what: String },
    NonConvexCost { gen: usize },
    NonFinite { element: String },
    NotPerUnit { element: String, value: f64 },
    Disconnected { buses: Vec<usize> },
    NotRadial { cycle: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoSlack => write!(f, "no slack bus"),
            Violation::MultipleSlack { buses } => write!(f, "multiple slack buses {buses:?}"),
            Violation::DuplicateBus { bus } => write!(f, "duplicate bus id {bus}"),
            Violation::BadVoltageBand { bus } => write!(f, "bus {bus}: invalid voltage band"),
            Violation::UnknownBus { element, bus } => {
                write!(f, "{element} references unknown bus {bus}")
            }
            Violation::SelfLoop { line } => write!(f, "line {line} connects a bus to itself"),
            Violation::NonPositiveReactance { line } => {
                write!(f, "line {line} has non-positive reactance")
            }
            Violation::NegativeResistance { line } => write!(f, "line {line} has negative resistance"),
            Violation::NegativeRating { line } => write!(f, "line {line} has negative rating"),
            Violation::EmptyRange { gen, what } => write!(f, "generator {gen}: empty {what} range"),
            Violation::NonConvexCost { gen } => write!(f, "generator {gen}: negative quadratic cost"),
            Violation::NonFinite { element } => write!(f, "{element}: non-finite value"),
            Violation::NotPerUnit { element, value } => {
                write!(f, "{element}: magnitude {value} is not plausible in p.u.")
            }
            Violation::Disconnected { buses } => write!(f, "buses {buses:?} are disconnected"),
            Violation::NotRadial { cycle } => write!(f, "radial case contains cycle {cycle:?}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid case: {}", join_violations(.0))]
    Validation(Vec<Violation>),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Parse and validate a case. MATPOWER input is converted to per-unit.
pub fn load_case(source: &[u8], format: CaseFormat) -> Result<GridCase, GridError> {
    let case = match format {
        CaseFormat::NativeJson => serde_json::from_slice::<GridCase>(source)?,
        CaseFormat::MatpowerM => {
            let text = std::str::from_utf8(source).map_err(|e| GridError::Parse {
                line: 0,
                msg: e.to_string(),
            })?;
            matpower::parse(text)?
        }
    };
    let violations = validate(&case);
    if violations.is_empty() {
        Ok(case)
    } else {
        Err(GridError::Validation(violations))
    }
}

pub fn to_native_json(case: &GridCase) -> String {
    serde_json::to_string_pretty(case).expect("GridCase serializes")
}

impl GridCase {
    pub fn bus(&self, id: usize) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack_bus(&self) -> Option<usize> {
        self.buses.iter().find(|b| b.kind == BusKind::Slack).map(|b| b.id)
    }

    pub fn total_load(&self) -> (f64, f64) {
        self.buses
            .iter()
            .fold((0.0, 0.0), |(p, q), b| (p + b.p_load, q + b.q_load))
    }

    /// Radial orientation rooted at the slack bus: for every line, the
    /// (parent, child) bus indices. `None` if the line graph is not a tree.
    pub fn radial_orientation(&self) -> Option<Vec<(usize, usize)>> {
        let root = self.bus_index(self.slack_bus()?)?;
        let n = self.buses.len();
        if self.lines.len() + 1 != n {
            return None;
        }
        let adj = self.adjacency()?;
        let mut parent_line = vec![None; n];
        let mut seen = vec![false; n];
        let mut orient = vec![(usize::MAX, usize::MAX); self.lines.len()];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(k) = queue.pop_front() {
            for &(l, line) in &adj[k] {
                if parent_line[k] == Some(line) {
                    continue;
                }
                if seen[l] {
                    return None;
                }
                seen[l] = true;
                parent_line[l] = Some(line);
                orient[line] = (k, l);
                queue.push_back(l);
            }
        }
        seen.iter().all(|&s| s).then_some(orient)
    }

    /// Per bus index: (neighbour index, line index).
    fn adjacency(&self) -> Option<Vec<Vec<(usize, usize)>>> {
        let mut adj = vec![Vec::new(); self.buses.len()];
        for (li, line) in self.lines.iter().enumerate() {
            let a = self.bus_index(line.from)?;
            let b = self.bus_index(line.to)?;
            adj[a].push((b, li));
            adj[b].push((a, li));
        }
        Some(adj)
    }
}

/// Check every [`GridCase`] invariant. Empty result means the case is valid.
pub fn validate(case: &GridCase) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for b in &case.buses {
        if !ids.insert(b.id) {
            out.push(Violation::DuplicateBus { bus: b.id });
        }
        if ![b.p_load, b.q_load, b.v2_min, b.v2_max].iter().all(|v| v.is_finite()) {
            out.push(Violation::NonFinite { element: format!("bus {}", b.id) });
            continue;
        }
        if b.v2_min <= 0.0 || b.v2_min > b.v2_max {
            out.push(Violation::BadVoltageBand { bus: b.id });
        }
        for v in [b.p_load, b.q_load, b.v2_max] {
            if v.abs() > PER_UNIT_GUARD {
                out.push(Violation::NotPerUnit { element: format!("bus {}", b.id), value: v });
            }
        }
    }
    let slacks: Vec<usize> = case
        .buses
        .iter()
        .filter(|b| b.kind == BusKind::Slack)
        .map(|b| b.id)
        .collect();
    match slacks.len() {
        0 => out.push(Violation::NoSlack),
        1 => {}
        _ => out.push(Violation::MultipleSlack { buses: slacks }),
    }

    let mut lines_ok = true;
    for (i, l) in case.lines.iter().enumerate() {
        for end in [l.from, l.to] {
            if !ids.contains(&end) {
                out.push(Violation::UnknownBus { element: format!("line {i}"), bus: end });
                lines_ok = false;
            }
        }
        if ![l.r, l.x, l.s_max].iter().all(|v| v.is_finite()) {
            out.push(Violation::NonFinite { element: format!("line {i}") });
            continue;
        }
        if l.from == l.to {
            out.push(Violation::SelfLoop { line: i });
        }
        if l.x <= 0.0 {
            out.push(Violation::NonPositiveReactance { line: i });
        }
        if l.r < 0.0 {
            out.push(Violation::NegativeResistance { line: i });
        }
        if l.s_max < 0.0 {
            out.push(Violation::NegativeRating { line: i });
        }
    }

    for (i, g) in case.gens.iter().enumerate() {
        if !ids.contains(&g.bus) {
            out.push(Violation::UnknownBus { element: format!("generator {i}"), bus: g.bus });
        }
        let vals = [g.p_min, g.p_max, g.q_min, g.q_max, g.cost_a2, g.cost_a1, g.cost_a0];
        if !vals.iter().all(|v| v.is_finite()) {
            out.push(Violation::NonFinite { element: format!("generator {i}") });
            continue;
        }
        if g.p_min > g.p_max {
            out.push(Violation::EmptyRange { gen: i, what: "p".into() });
        }
        if g.q_min > g.q_max {
            out.push(Violation::EmptyRange { gen: i, what: "q".into() });
        }
        if g.cost_a2 < 0.0 {
            out.push(Violation::NonConvexCost { gen: i });
        }
        for v in [g.p_min, g.p_max, g.q_min, g.q_max] {
            if v.abs() > PER_UNIT_GUARD {
                out.push(Violation::NotPerUnit { element: format!("generator {i}"), value: v });
            }
        }
    }

    if lines_ok && !case.buses.is_empty() {
        let unreached = unreachable_buses(case);
        if !unreached.is_empty() {
            out.push(Violation::Disconnected { buses: unreached });
        } else if case.topology_kind == TopologyKind::Radial {
            if let Some(cycle) = find_cycle(case) {
                out.push(Violation::NotRadial { cycle });
            }
        }
    }
    out
}

/// Buses outside the largest connected component (ties broken by bus order).
fn unreachable_buses(case: &GridCase) -> Vec<usize> {
    let Some(adj) = case.adjacency() else {
        return Vec::new();
    };
    let n = case.buses.len();
    let mut comp = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        comp[start] = id;
        let mut size = 1;
        let mut queue = VecDeque::from([start]);
        while let Some(k) = queue.pop_front() {
            for &(l, _) in &adj[k] {
                if comp[l] == usize::MAX {
                    comp[l] = id;
                    size += 1;
                    queue.push_back(l);
                }
            }
        }
        sizes.push(size);
    }
    let main = (0..sizes.len()).fold(0, |best, c| if sizes[c] > sizes[best] { c } else { best });
    case.buses
        .iter()
        .zip(&comp)
        .filter(|(_, &c)| c != main)
        .map(|(b, _)| b.id)
        .collect()
}

/// Bus ids along some cycle of the line graph (parallel lines count).
fn find_cycle(case: &GridCase) -> Option<Vec<usize>> {
    // spanning forest; the first non-tree edge closes a cycle
    let n = case.buses.len();
    let mut tree: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut uf: Vec<usize> = (0..n).collect();
    fn root(uf: &mut [usize], mut i: usize) -> usize {
        while uf[i] != i {
            uf[i] = uf[uf[i]];
            i = uf[i];
        }
        i
    }
    for line in &case.lines {
        let a = case.bus_index(line.from)?;
        let b = case.bus_index(line.to)?;
        let (ra, rb) = (root(&mut uf, a), root(&mut uf, b));
        if ra == rb {
            // path a -> b in the tree
            let mut prev = vec![usize::MAX; n];
            let mut queue = VecDeque::from([a]);
            prev[a] = a;
            while let Some(k) = queue.pop_front() {
                if k == b {
                    break;
                }
                for &l in tree.get(&k).into_iter().flatten() {
                    if prev[l] == usize::MAX {
                        prev[l] = k;
                        queue.push_back(l);
                    }
                }
            }
            let mut cycle = vec![case.buses[b].id];
            let mut k = b;
            while k != a {
                k = prev[k];
                cycle.push(case.buses[k].id);
            }
            return Some(cycle);
        }
        uf[ra] = rb;
        tree.entry(a).or_default().push(b);
        tree.entry(b).or_default().push(a);
    }
    None
}
