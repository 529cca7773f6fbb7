//! Serializable run configuration and reports (UTF-8 JSON, schema-versioned).

use crate::attack::{AttackOutcome, LoadBox, ScedMode};
use crate::grid::{CascadeReport, GridModel};
use crate::placement::PlacementTrace;
use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA: &str = "ppop-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Aong,
    Aodc,
    Heuristic,
    GreedyDegree,
    FullObservability,
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aong" => Ok(Algorithm::Aong),
            "aodc" => Ok(Algorithm::Aodc),
            "heuristic" => Ok(Algorithm::Heuristic),
            "greedy-degree" | "greedy" => Ok(Algorithm::GreedyDegree),
            "full-observability" | "full-obs" => Ok(Algorithm::FullObservability),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

/// Scalar load-range specification: each entry scales the nominal profile
/// into a box [kappa_lo * p0, kappa_hi * p0].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadRangeSpec {
    pub boxes: Vec<(f64, f64)>,
}

impl LoadRangeSpec {
    pub fn to_boxes(&self, grid: &GridModel) -> Vec<LoadBox> {
        self.boxes
            .iter()
            .map(|&(lo, hi)| {
                let scale = |k: f64| grid.p0().iter().map(|&p| k * p).collect::<Vec<_>>();
                let (a, b) = (scale(lo), scale(hi));
                LoadBox {
                    lo: a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect(),
                    hi: a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Bundled case name (`ieee30`, ...) or a MATPOWER file path.
    pub case: String,
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub xi_p: usize,
    pub xi_c: Option<usize>,
    /// Uniform tripping factor, plus per-line overrides keyed by the case
    /// file's 1-based branch row.
    pub gamma: f64,
    #[serde(default)]
    pub gamma_overrides: Vec<(usize, f64)>,
    pub sced: ScedMode,
    pub kc: usize,
    pub ka: usize,
    pub kl: usize,
    #[serde(default)]
    pub load_range: Option<LoadRangeSpec>,
    /// Bus ids the placement must stay inside (staged rollout).
    #[serde(default)]
    pub placement_mask: Option<Vec<u32>>,
    pub budget_s: f64,
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: "ieee30".into(),
            algorithm: Algorithm::Aodc,
            alpha: 0.25,
            xi_p: 2,
            xi_c: None,
            gamma: 1.2,
            gamma_overrides: Vec::new(),
            sced: ScedMode::Relaxed,
            kc: 10,
            ka: 10,
            kl: 10,
            load_range: None,
            placement_mask: None,
            budget_s: 1800.0,
            seed: 0,
            out: None,
        }
    }
}

/// Witness serialization: indices are the case file's 1-based branch rows
/// and original bus ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessReport {
    pub ap_rows: Vec<usize>,
    pub target_rows: Vec<usize>,
    pub tripped: usize,
    pub meters_touched: usize,
    pub f3: Vec<f64>,
    pub theta2: Vec<f64>,
    pub theta2_tilde: Vec<f64>,
    pub theta3_tilde: Vec<f64>,
}

impl WitnessReport {
    pub fn from_outcome(grid: &GridModel, w: &AttackOutcome) -> WitnessReport {
        let row = |e: usize| grid.line(e).source_rows[0];
        WitnessReport {
            ap_rows: w.ap.iter().map(|&e| row(e)).collect(),
            target_rows: w.targets.iter().map(|&e| row(e)).collect(),
            tripped: w.objective,
            meters_touched: w.meters_touched,
            f3: w.f3.clone(),
            theta2: w.theta2.clone(),
            theta2_tilde: w.theta2_tilde.clone(),
            theta3_tilde: w.theta3_tilde.clone(),
        }
    }
}

/// One expected-vs-observed line of the benchmark table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub id: String,
    pub expected: String,
    pub observed: String,
    /// None when the row was skipped (soft tier, missing data, budget).
    pub pass: Option<bool>,
    /// Hard rows fail the run; soft rows only report.
    pub hard: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub config: RunConfig,
    pub placement_bus_ids: Option<Vec<u32>>,
    pub pmu_count: Option<usize>,
    /// Verification verdict for every placement-producing run.
    pub verified: Option<bool>,
    pub optimal: Option<bool>,
    pub psi_a: Option<usize>,
    pub witness: Option<WitnessReport>,
    pub cascade: Option<CascadeReport>,
    pub trace: Option<PlacementTrace>,
    pub bench: Vec<BenchRow>,
    pub wall_s: f64,
    pub error: Option<String>,
}

impl Report {
    pub fn new(config: RunConfig) -> Report {
        Report {
            schema: REPORT_SCHEMA,
            config,
            placement_bus_ids: None,
            pmu_count: None,
            verified: None,
            optimal: None,
            psi_a: None,
            witness: None,
            cascade: None,
            trace: None,
            bench: Vec::new(),
            wall_s: 0.0,
            error: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// Placement file format: newline-separated bus ids with `#` comments.
pub fn parse_placement_file(text: &str) -> Result<Vec<u32>, String> {
    let mut ids = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        for tok in body.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
            ids.push(
                tok.parse::<u32>()
                    .map_err(|_| format!("line {}: bad bus id `{tok}`", lineno + 1))?,
            );
        }
    }
    Ok(ids)
}

pub fn format_placement_file(ids: &[u32]) -> String {
    let mut s = String::from("# PMU placement: one bus id per line\n");
    for id in ids {
        s.push_str(&format!("{id}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placement_file_round_trip() {
        let ids = vec![15, 23, 7];
        let text = format_placement_file(&ids);
        assert_eq!(parse_placement_file(&text).unwrap(), ids);
        let messy = "# comment\n 15 , 23\n\n7 # trailing\n";
        assert_eq!(parse_placement_file(messy).unwrap(), ids);
        assert!(parse_placement_file("1\nx\n").is_err());
    }

    #[test]
    fn report_schema_is_stable() {
        // Golden skeleton of the serialized report: field names are the
        // public contract of the JSON output.
        let report = Report::new(RunConfig::default());
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        for key in [
            "schema",
            "config",
            "placement_bus_ids",
            "pmu_count",
            "verified",
            "optimal",
            "psi_a",
            "witness",
            "cascade",
            "trace",
            "bench",
            "wall_s",
            "error",
        ] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
        assert_eq!(json["schema"], "ppop-report/1");
        for key in ["case", "algorithm", "alpha", "xi_p", "gamma", "seed"] {
            assert!(json["config"].get(key).is_some(), "missing config.{key}");
        }
    }

    #[test]
    fn load_range_spec_orients_boxes() {
        let g = crate::cases::triangle3();
        let spec = LoadRangeSpec {
            boxes: vec![(0.5, 1.5)],
        };
        let boxes = spec.to_boxes(&g);
        // Bus 3 has p0 = -1: lo/hi must be ordered after scaling.
        assert!(boxes[0].lo[2] <= boxes[0].hi[2]);
        assert_eq!(boxes[0].lo[2], -1.5);
        assert_eq!(boxes[0].hi[2], -0.5);
    }
}
