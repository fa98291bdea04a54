//! The study system: a 9-bus transmission grid with two modified 15-bus feeders.

use super::{
    load_case, Bus, BusKind, CaseFormat, Generator, GridCase, GridError, Interconnection,
    Partition, Violation,
};

pub const CASE9_M: &str = include_str!("../../data/case9.m");
pub const CASE15_M: &str = include_str!("../../data/case15.m");
/// Native-JSON fixture of the composed study system (see [`builtin_benchmark`]).
pub const BENCHMARK_JSON: &str = include_str!("../../data/benchmark.json");

/// Rating of every TSO-DSO interface, p.u.
pub const INTERFACE_RATING: f64 = 0.5;

/// (a2, a1, a0) of every generator placed inside a feeder, p.u. terms.
pub const BENCHMARK_DSO_COST: (f64, f64, f64) = (0.5, 5.0, 0.0);

/// TSO bus each feeder attaches to, in feeder order.
const ATTACH_BUS: [usize; 2] = [8, 6];
/// First global bus number of each feeder; TSO buses are 1..=9.
const FEEDER_OFFSET: [usize; 2] = [9, 24];
/// Study-system bus numbers whose loads become generators.
const DSO1_GEN_BUSES: [usize; 3] = [17, 18, 22];
const DSO2_GEN_BUSES: [usize; 2] = [29, 38];

fn missing(element: &str, bus: usize) -> GridError {
    GridError::Validation(vec![Violation::UnknownBus { element: element.into(), bus }])
}

/// Replace the loads at `buses` (feeder-local ids) by generators of
/// `capacity_factor` times the original active load.
fn loads_to_generators(
    feeder: &GridCase,
    buses: &[usize],
    capacity_factor: f64,
) -> Result<GridCase, GridError> {
    let mut case = feeder.clone();
    let root = case.slack_bus().ok_or_else(|| GridError::Validation(vec![Violation::NoSlack]))?;
    // the interconnection takes over the substation
    case.gens.retain(|g| g.bus != root);
    let (a2, a1, a0) = BENCHMARK_DSO_COST;
    for &id in buses {
        let bus: &mut Bus = case
            .buses
            .iter_mut()
            .find(|b| b.id == id)
            .ok_or_else(|| missing("benchmark generator", id))?;
        let p_max = capacity_factor * bus.p_load;
        let q_max = 0.5 * p_max;
        bus.p_load = 0.0;
        bus.q_load = 0.0;
        bus.kind = BusKind::Generator;
        case.gens.push(Generator {
            bus: id,
            p_min: 0.0,
            p_max,
            q_min: -q_max,
            q_max,
            cost_a2: a2,
            cost_a1: a1,
            cost_a0: a0,
        });
    }
    Ok(case)
}

/// Build the study partition from the 9-bus transmission case and the 15-bus
/// feeder: transmission generator capacities tripled, feeder 1 attached at bus 8
/// with three loads turned into generators of doubled capacity, feeder 2 attached
/// at bus 6 with two loads turned into generators of equal capacity.
///
/// Feeder bus numbers are global study-system numbers (feeder 1 = 10..24,
/// feeder 2 = 25..39) mapped back to local ids by offset.
pub fn compose_benchmark(tso_case: &GridCase, feeder_case: &GridCase) -> Result<Partition, GridError> {
    for bus in ATTACH_BUS {
        if tso_case.bus(bus).is_none() {
            return Err(missing("interconnection", bus));
        }
    }
    let root = feeder_case
        .slack_bus()
        .ok_or_else(|| GridError::Validation(vec![Violation::NoSlack]))?;

    let mut tso = tso_case.clone();
    for g in &mut tso.gens {
        g.p_max *= 3.0;
    }

    let local = |global: &[usize], offset: usize| -> Vec<usize> {
        global.iter().map(|b| b - offset).collect()
    };
    let dso1 = loads_to_generators(feeder_case, &local(&DSO1_GEN_BUSES, FEEDER_OFFSET[0]), 2.0)?;
    let dso2 = loads_to_generators(feeder_case, &local(&DSO2_GEN_BUSES, FEEDER_OFFSET[1]), 1.0)?;

    let links = ATTACH_BUS
        .iter()
        .enumerate()
        .map(|(k, &tso_bus)| Interconnection {
            dso_index: k + 1,
            tso_bus,
            dso_root_bus: root,
            s_max: INTERFACE_RATING,
        })
        .collect();
    Ok(Partition { tso, dsos: vec![dso1, dso2], links })
}

/// The shipped study system: [`compose_benchmark`] on the bundled cases, with
/// the 9-bus cost polynomials applied per p.u. (quadratic and linear
/// coefficients as printed, constant term dropped).
pub fn builtin_benchmark() -> Result<Partition, GridError> {
    let tso = load_case(CASE9_M.as_bytes(), CaseFormat::MatpowerM)?;
    let feeder = load_case(CASE15_M.as_bytes(), CaseFormat::MatpowerM)?;
    let mut part = compose_benchmark(&tso, &feeder)?;
    let base = part.tso.base_mva;
    for g in &mut part.tso.gens {
        g.cost_a2 /= base * base;
        g.cost_a1 /= base;
        g.cost_a0 = 0.0;
    }
    Ok(part)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cases() -> (GridCase, GridCase) {
        (
            load_case(CASE9_M.as_bytes(), CaseFormat::MatpowerM).unwrap(),
            load_case(CASE15_M.as_bytes(), CaseFormat::MatpowerM).unwrap(),
        )
    }

    #[test]
    fn links_attach_at_buses_8_and_6() {
        let (t, f) = cases();
        let part = compose_benchmark(&t, &f).unwrap();
        let l: Vec<_> = part.links.iter().map(|l| (l.dso_index, l.tso_bus)).collect();
        assert_eq!(l, vec![(1, 8), (2, 6)]);
    }

    #[test]
    fn tso_capacity_tripled() {
        let (t, f) = cases();
        let part = compose_benchmark(&t, &f).unwrap();
        assert_eq!(t.gens[0].p_max, 2.5);
        assert_eq!(part.tso.gens[0].p_max, 7.5);
    }

    #[test]
    fn replaced_loads_become_generators() {
        let (t, f) = cases();
        let part = compose_benchmark(&t, &f).unwrap();
        // study bus 29 is feeder-local bus 5
        let orig = f.bus(5).unwrap().p_load;
        let g = part.dsos[1].gens.iter().find(|g| g.bus == 5).unwrap();
        assert_eq!(g.p_max, orig);
        assert_eq!(g.q_max, 0.5 * orig);
        assert_eq!(g.q_min, -0.5 * orig);
        assert_eq!(part.dsos[1].bus(5).unwrap().p_load, 0.0);
        // study bus 17 is feeder-local bus 8, doubled capacity
        let g = part.dsos[0].gens.iter().find(|g| g.bus == 8).unwrap();
        assert_eq!(g.p_max, 2.0 * f.bus(8).unwrap().p_load);
        assert_eq!(part.dsos[0].gens.len(), 3);
        assert_eq!(part.dsos[1].gens.len(), 2);
        for d in &part.dsos {
            assert!(super::super::validate(d).is_empty());
        }
    }

    #[test]
    fn composition_is_deterministic() {
        let (t, f) = cases();
        assert_eq!(compose_benchmark(&t, &f).unwrap(), compose_benchmark(&t, &f).unwrap());
    }

    #[test]
    fn missing_attach_bus_is_an_error() {
        let (mut t, f) = cases();
        t.buses.retain(|b| b.id != 6);
        assert!(matches!(compose_benchmark(&t, &f), Err(GridError::Validation(_))));
    }

    #[test]
    fn shipped_fixture_matches_composition() {
        let shipped: Partition = serde_json::from_str(BENCHMARK_JSON).unwrap();
        assert_eq!(shipped, builtin_benchmark().unwrap());
    }
}
