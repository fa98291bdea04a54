//! Reader for the matrix subset of MATPOWER `.m` case files.
//!
//! Only `mpc.baseMVA`, `mpc.bus`, `mpc.gen`, `mpc.branch` and `mpc.gencost`
//! are interpreted; every other statement is skipped.

use std::collections::HashMap;

use super::{
    Bus, BusKind, Generator, GridCase, GridError, Line, TopologyKind, DEFAULT_V2_MAX,
    DEFAULT_V2_MIN,
};

// column indices (0-based) of the MATPOWER case format
const BUS_I: usize = 0;
const BUS_TYPE: usize = 1;
const PD: usize = 2;
const QD: usize = 3;
const VMAX: usize = 11;
const VMIN: usize = 12;

const GEN_BUS: usize = 0;
const QMAX: usize = 3;
const QMIN: usize = 4;
const GEN_STATUS: usize = 7;
const PMAX: usize = 8;
const PMIN: usize = 9;

const F_BUS: usize = 0;
const T_BUS: usize = 1;
const BR_R: usize = 2;
const BR_X: usize = 3;
const RATE_A: usize = 5;
const BR_STATUS: usize = 10;

const MODEL: usize = 0;
const NCOST: usize = 3;
const COST: usize = 4;

struct Matrix {
    rows: Vec<Vec<f64>>,
    /// Source line of each row, for error messages.
    lines: Vec<usize>,
}

fn parse_error(line: usize, msg: impl Into<String>) -> GridError {
    GridError::Parse { line, msg: msg.into() }
}

/// Collect `mpc.<name> = value;` assignments, keyed by name.
fn scan(text: &str) -> Result<(HashMap<String, Matrix>, Option<f64>), GridError> {
    // strip comments, keep line structure
    let clean: Vec<&str> = text.lines().map(|l| l.split('%').next().unwrap_or("")).collect();
    let mut matrices = HashMap::new();
    let mut base_mva = None;

    let mut i = 0;
    while i < clean.len() {
        let line = clean[i].trim();
        let Some(rest) = line.strip_prefix("mpc.") else {
            i += 1;
            continue;
        };
        let Some((name, value)) = rest.split_once('=') else {
            i += 1;
            continue;
        };
        let name = name.trim().to_string();
        let value = value.trim();
        if let Some(body) = value.strip_prefix('[') {
            let start = i + 1;
            let mut chunks: Vec<(usize, String)> = Vec::new();
            let mut current = body.to_string();
            let mut at = i;
            loop {
                if let Some(end) = current.find(']') {
                    chunks.push((at, current[..end].to_string()));
                    break;
                }
                chunks.push((at, current.clone()));
                at += 1;
                if at >= clean.len() {
                    return Err(parse_error(start, format!("unterminated matrix mpc.{name}")));
                }
                current = clean[at].to_string();
            }
            i = at + 1;
            if matches!(name.as_str(), "bus" | "gen" | "branch" | "gencost") {
                matrices.insert(name, parse_rows(&chunks)?);
            }
        } else {
            if name == "baseMVA" {
                let v = value.trim_end_matches(';').trim();
                base_mva = Some(
                    v.parse::<f64>()
                        .map_err(|_| parse_error(i + 1, format!("bad baseMVA '{v}'")))?,
                );
            }
            i += 1;
        }
    }
    Ok((matrices, base_mva))
}

fn parse_rows(chunks: &[(usize, String)]) -> Result<Matrix, GridError> {
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for (line, chunk) in chunks {
        for row in chunk.split(';') {
            let fields: Vec<&str> = row
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if fields.is_empty() {
                continue;
            }
            let vals = fields
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| parse_error(line + 1, format!("non-numeric entry '{f}'")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(vals);
            lines.push(line + 1);
        }
    }
    Ok(Matrix { rows, lines })
}

fn require<'a>(m: &'a HashMap<String, Matrix>, name: &str) -> Result<&'a Matrix, GridError> {
    m.get(name)
        .ok_or_else(|| parse_error(0, format!("missing matrix mpc.{name}")))
}

fn check_width(m: &Matrix, width: usize, what: &str) -> Result<(), GridError> {
    for (row, line) in m.rows.iter().zip(&m.lines) {
        if row.len() < width {
            return Err(parse_error(
                *line,
                format!("{what} row has {} columns, need {width}", row.len()),
            ));
        }
    }
    Ok(())
}

fn squared_limit(v: f64, default: f64) -> f64 {
    if v > 0.0 {
        v * v
    } else {
        default
    }
}

pub(super) fn parse(text: &str) -> Result<GridCase, GridError> {
    let (m, base_mva) = scan(text)?;
    let base = base_mva.ok_or_else(|| parse_error(0, "missing mpc.baseMVA"))?;
    if base <= 0.0 {
        return Err(parse_error(0, "baseMVA must be positive"));
    }
    let bus_m = require(&m, "bus")?;
    let gen_m = require(&m, "gen")?;
    let branch_m = require(&m, "branch")?;
    check_width(bus_m, VMIN + 1, "bus")?;
    check_width(gen_m, PMIN + 1, "gen")?;
    check_width(branch_m, BR_STATUS + 1, "branch")?;

    let mut buses = Vec::with_capacity(bus_m.rows.len());
    for (row, line) in bus_m.rows.iter().zip(&bus_m.lines) {
        let kind = match row[BUS_TYPE] as i64 {
            1 => BusKind::Load,
            2 => BusKind::Generator,
            3 => BusKind::Slack,
            t => return Err(parse_error(*line, format!("unsupported bus type {t}"))),
        };
        buses.push(Bus {
            id: row[BUS_I] as usize,
            kind,
            p_load: row[PD] / base,
            q_load: row[QD] / base,
            v2_min: squared_limit(row[VMIN], DEFAULT_V2_MIN),
            v2_max: squared_limit(row[VMAX], DEFAULT_V2_MAX),
        });
    }

    let lines: Vec<Line> = branch_m
        .rows
        .iter()
        .filter(|row| row[BR_STATUS] != 0.0)
        .map(|row| Line {
            from: row[F_BUS] as usize,
            to: row[T_BUS] as usize,
            r: row[BR_R],
            x: row[BR_X],
            s_max: row[RATE_A] / base,
        })
        .collect();

    let costs = match m.get("gencost") {
        Some(c) => Some(parse_costs(c, base)?),
        None => None,
    };
    if let Some(c) = &costs {
        if c.len() < gen_m.rows.len() {
            return Err(parse_error(0, "fewer gencost rows than generators"));
        }
    }
    let mut gens = Vec::new();
    for (k, row) in gen_m.rows.iter().enumerate() {
        if row[GEN_STATUS] == 0.0 {
            continue;
        }
        let (a2, a1, a0) = costs.as_ref().map_or((0.0, 0.0, 0.0), |c| c[k]);
        gens.push(Generator {
            bus: row[GEN_BUS] as usize,
            p_min: row[PMIN] / base,
            p_max: row[PMAX] / base,
            q_min: row[QMIN] / base,
            q_max: row[QMAX] / base,
            cost_a2: a2,
            cost_a1: a1,
            cost_a0: a0,
        });
    }

    let mut case = GridCase {
        base_mva: base,
        buses,
        lines,
        gens,
        topology_kind: TopologyKind::Meshed,
    };
    if case.radial_orientation().is_some() {
        case.topology_kind = TopologyKind::Radial;
    }
    Ok(case)
}

/// Polynomial costs in $/MW^k converted to per-unit coefficients.
fn parse_costs(m: &Matrix, base: f64) -> Result<Vec<(f64, f64, f64)>, GridError> {
    let mut out = Vec::with_capacity(m.rows.len());
    for (row, line) in m.rows.iter().zip(&m.lines) {
        if row.len() <= NCOST || row[MODEL] as i64 != 2 {
            return Err(parse_error(*line, "only polynomial (model 2) gencost rows are supported"));
        }
        let n = row[NCOST] as usize;
        if n > 3 || row.len() < COST + n {
            return Err(parse_error(*line, format!("unsupported polynomial of {n} coefficients")));
        }
        let mut coef = [0.0; 3];
        for (j, c) in row[COST..COST + n].iter().enumerate() {
            coef[3 - n + j] = *c;
        }
        out.push((coef[0] * base * base, coef[1] * base, coef[2]));
    }
    Ok(out)
}
