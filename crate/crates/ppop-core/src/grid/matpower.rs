//! MATPOWER case ingestion (subset: function header, baseMVA, bus, gen,
//! branch and gencost tables with columns per the MATPOWER 7 manual).
//!
//! Everything is converted to per-unit. Out-of-service branches are dropped,
//! parallel branches are merged, and the slack bus absorbs any residual
//! between generator setpoints and load so the base injection balances.

use super::{GridError, GridModel};
use std::collections::BTreeMap;
use std::path::Path;

/// Tripping factor applied to every line unless overridden later.
pub const DEFAULT_GAMMA: f64 = 1.2;

pub fn load_matpower(path: impl AsRef<Path>) -> Result<GridModel, GridError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| GridError::Parse(format!("{}: {e}", path.as_ref().display())))?;
    parse_matpower(&text, DEFAULT_GAMMA)
}

#[derive(Default)]
struct RawCase {
    base_mva: f64,
    bus: Vec<Vec<f64>>,
    gen: Vec<Vec<f64>>,
    branch: Vec<Vec<f64>>,
    gencost: Vec<Vec<f64>>,
}

pub fn parse_matpower(text: &str, gamma: f64) -> Result<GridModel, GridError> {
    let raw = scan_tables(text)?;
    build(raw, gamma)
}

fn scan_tables(text: &str) -> Result<RawCase, GridError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Bus,
        Gen,
        Branch,
        GenCost,
    }
    let mut raw = RawCase {
        base_mva: 100.0,
        ..Default::default()
    };
    let mut section = Section::None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') || line.starts_with("function") {
            continue;
        }
        if let Some(eq) = line.strip_prefix("mpc.baseMVA") {
            let val = eq.trim_start_matches([' ', '=']).trim_end_matches(';').trim();
            raw.base_mva = val
                .parse()
                .map_err(|_| GridError::Parse(format!("bad baseMVA `{val}`")))?;
            continue;
        }
        if line.starts_with("mpc.bus_name") || line.starts_with("mpc.version") {
            section = Section::None;
            continue;
        }
        if line.starts_with("mpc.bus") {
            section = Section::Bus;
            continue;
        }
        if line.starts_with("mpc.gencost") {
            section = Section::GenCost;
            continue;
        }
        if line.starts_with("mpc.gen") {
            section = Section::Gen;
            continue;
        }
        if line.starts_with("mpc.branch") {
            section = Section::Branch;
            continue;
        }
        if line.starts_with(']') || line.contains("];") && data_row(line).is_empty() {
            section = Section::None;
            continue;
        }
        let row = data_row(line);
        if row.is_empty() {
            continue;
        }
        match section {
            Section::Bus => raw.bus.push(row),
            Section::Gen => raw.gen.push(row),
            Section::Branch => raw.branch.push(row),
            Section::GenCost => raw.gencost.push(row),
            Section::None => {}
        }
        if line.contains("];") {
            section = Section::None;
        }
    }
    if raw.bus.is_empty() {
        return Err(GridError::Parse("no bus table".into()));
    }
    if raw.branch.is_empty() {
        return Err(GridError::Parse("no branch table".into()));
    }
    Ok(raw)
}

fn data_row(line: &str) -> Vec<f64> {
    let body = line.split('%').next().unwrap_or("");
    body.trim()
        .trim_start_matches('[')
        .trim_end_matches(';')
        .trim_end_matches(']')
        .split_whitespace()
        .filter_map(|tok| tok.trim_end_matches(';').parse::<f64>().ok())
        .collect()
}

fn build(raw: RawCase, gamma: f64) -> Result<GridModel, GridError> {
    let base = raw.base_mva;
    if base <= 0.0 {
        return Err(GridError::Parse("baseMVA must be positive".into()));
    }
    let mut bus_ids = Vec::with_capacity(raw.bus.len());
    let mut pd = BTreeMap::new();
    let mut slack_id = None;
    for row in &raw.bus {
        if row.len() < 3 {
            return Err(GridError::Parse("bus row too short".into()));
        }
        let id = row[0] as u32;
        bus_ids.push(id);
        pd.insert(id, row[2]);
        if row[1] as u32 == 3 && slack_id.is_none() {
            slack_id = Some(id);
        }
    }
    let slack_id = slack_id.ok_or(GridError::MissingSlack)?;

    // Aggregate in-service units per bus: setpoints, bounds, and a
    // capacity-weighted linear cost when gencost rows are present.
    struct BusGen {
        pg: f64,
        pmin: f64,
        pmax: f64,
        cost_num: f64,
        cost_den: f64,
        has_cost: bool,
    }
    let mut per_bus: BTreeMap<u32, BusGen> = BTreeMap::new();
    for (i, row) in raw.gen.iter().enumerate() {
        if row.len() < 10 {
            return Err(GridError::Parse("gen row too short".into()));
        }
        if row[7] <= 0.0 {
            continue;
        }
        let entry = per_bus.entry(row[0] as u32).or_insert(BusGen {
            pg: 0.0,
            pmin: 0.0,
            pmax: 0.0,
            cost_num: 0.0,
            cost_den: 0.0,
            has_cost: false,
        });
        entry.pg += row[1];
        entry.pmax += row[8];
        entry.pmin += row[9];
        if let Some(c) = raw.gencost.get(i).and_then(|c| linear_cost(c)) {
            let w = row[8].max(1e-9);
            entry.cost_num += c * w;
            entry.cost_den += w;
            entry.has_cost = true;
        }
    }
    if per_bus.is_empty() {
        return Err(GridError::Parse("no in-service generators".into()));
    }

    let mut p0: Vec<f64> = bus_ids
        .iter()
        .map(|id| {
            let g = per_bus.get(id).map_or(0.0, |e| e.pg);
            (g - pd[id]) / base
        })
        .collect();
    // Residual between setpoints and load goes to the slack.
    let residual: f64 = p0.iter().sum();
    let slack_pos = bus_ids.iter().position(|&id| id == slack_id).unwrap();
    p0[slack_pos] -= residual;

    let gens: Vec<(u32, f64, f64, Option<f64>)> = per_bus
        .iter()
        .map(|(&id, e)| {
            let load = pd[&id];
            let cost = e.has_cost.then(|| e.cost_num / e.cost_den.max(1e-12));
            (id, (e.pmin - load) / base, (e.pmax - load) / base, cost)
        })
        .collect();

    let mut lines = Vec::new();
    for (rowno, row) in raw.branch.iter().enumerate() {
        if row.len() < 11 {
            return Err(GridError::Parse(format!("branch row {} too short", rowno + 1)));
        }
        if row[10] <= 0.0 {
            continue; // out of service
        }
        let (f, t) = (row[0] as u32, row[1] as u32);
        let x = row[3];
        let tap = if row.len() > 8 && row[8] != 0.0 { row[8] } else { 1.0 };
        let rate_a = row[5];
        if x <= 0.0 {
            return Err(GridError::BadData(format!(
                "branch {f}-{t}: non-positive reactance"
            )));
        }
        if rate_a <= 0.0 {
            return Err(GridError::BadData(format!(
                "branch {f}-{t}: missing thermal rating (rateA <= 0)"
            )));
        }
        lines.push((f, t, x * tap, rate_a / base, gamma));
    }

    GridModel::new(bus_ids, lines, gens, p0, slack_id)
}

fn linear_cost(row: &[f64]) -> Option<f64> {
    // model startup shutdown n c(n-1) ... c0
    if row.len() < 4 {
        return None;
    }
    let model = row[0] as u32;
    let n = row[3] as usize;
    let coeffs = &row[4..];
    match model {
        2 if n >= 2 && coeffs.len() >= n => Some(coeffs[n - 2]),
        1 if n >= 2 && coeffs.len() >= 2 * n => {
            // piecewise linear: slope between the first and last point
            let (x0, y0) = (coeffs[0], coeffs[1]);
            let (x1, y1) = (coeffs[2 * n - 2], coeffs[2 * n - 1]);
            (x1 != x0).then(|| (y1 - y0) / (x1 - x0))
        }
        _ => None,
    }
}
