//! Monte-Carlo sweeps over (ψ factor, capacity) cells, result files and
//! plot-ready tables.
//!
//! Seeds: replicate `k` of the cell (ψ factor `f`, capacity `q`) under master
//! seed `m` uses
//!
//! ```text
//! mix(mix(mix(mix(m) ^ f.to_bits()) ^ q) ^ k)
//! ```
//!
//! where `mix` is the splitmix64 finalizer. Seeds depend on cell values, not
//! on their position in the sweep, so cells can be added, removed or
//! reordered without changing any other cell's pools.
//!
//! Output files in the result directory:
//!
//! * `ratios.csv`: `psi_factor,q_c,algorithm,metric,avg_ratio,worst_ratio,n_instances,zero_opt_instances`
//! * `instances.csv`: one row per (instance, algorithm) with the signature,
//!   p1/p2/p3 and min/max percentile of the selection
//! * `manifest.json`: sweep configuration, per-cell seeds and actual ψ, tool
//!   version and a creation timestamp (the only non-reproducible field)

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{Algorithm, Outcome};
use crate::datagen::{gen_instance, ConfigError, SatGenConfig};
use crate::metrics::{evaluate, ratios, Metric, MetricValues, MetricsError, RatioReport};
use crate::model::Instance;

pub const RATIOS_FILE: &str = "ratios.csv";
pub const INSTANCES_FILE: &str = "instances.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("missing results: {0}")]
    MissingResults(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Generator(#[from] ConfigError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub n_students: usize,
    pub capacities: Vec<usize>,
    pub psi_factors: Vec<f64>,
    pub seeds_per_cell: usize,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
}

impl ExperimentSpec {
    /// ψ = 0.65·q_c, n = 100, q_c = 10..=90 step 10, 100 pools per cell.
    pub fn sat_sweep() -> Self {
        ExperimentSpec {
            n_students: 100,
            capacities: (1..=9).map(|i| i * 10).collect(),
            psi_factors: vec![1.0],
            seeds_per_cell: 100,
            algorithms: Algorithm::ALL.to_vec(),
            master_seed: 2024,
        }
    }

    /// ψ ∈ {1.3, 1.5, 1.7}·q_c, q_c ∈ {20, 40, 60, 80}.
    pub fn scaled_sweep() -> Self {
        ExperimentSpec {
            capacities: vec![20, 40, 60, 80],
            psi_factors: vec![
                crate::datagen::PSI_1_3,
                crate::datagen::PSI_1_5,
                crate::datagen::PSI_1_7,
            ],
            ..Self::sat_sweep()
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidSpec(m));
        if self.n_students == 0 {
            return bad("n_students must be at least 1".into());
        }
        if self.capacities.is_empty() {
            return bad("no capacities given".into());
        }
        if let Some(q) = self
            .capacities
            .iter()
            .find(|&&q| q == 0 || q > self.n_students)
        {
            return bad(format!("capacity {q} outside [1, {}]", self.n_students));
        }
        if self.psi_factors.is_empty() {
            return bad("no psi factors given".into());
        }
        if let Some(f) = self
            .psi_factors
            .iter()
            .find(|f| !(f.is_finite() && **f > 0.0))
        {
            return bad(format!("psi factor {f} must be positive"));
        }
        if self.seeds_per_cell == 0 {
            return bad("seeds per cell must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms given".into());
        }
        Ok(())
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator seed of one replicate in one cell.
pub fn cell_seed(master: u64, psi_factor: f64, capacity: usize, replicate: usize) -> u64 {
    mix(mix(mix(mix(master) ^ psi_factor.to_bits()) ^ capacity as u64) ^ replicate as u64)
}

#[derive(Debug, Clone)]
pub struct InstanceRun {
    pub replicate: usize,
    pub seed: u64,
    pub instance: Instance,
    /// One per entry of `ExperimentSpec::algorithms`, same order.
    pub outcomes: Vec<Outcome>,
    pub metrics: Vec<MetricValues>,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub psi_factor: f64,
    pub capacity: usize,
    pub runs: Vec<InstanceRun>,
    pub report: RatioReport,
}

#[derive(Debug, Clone)]
pub struct SweepResults {
    pub spec: ExperimentSpec,
    pub cells: Vec<CellResult>,
}

impl SweepResults {
    pub fn cell(&self, psi_factor: f64, capacity: usize) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.psi_factor == psi_factor && c.capacity == capacity)
    }
}

fn run_one(
    spec: &ExperimentSpec,
    psi_factor: f64,
    capacity: usize,
    replicate: usize,
) -> Result<InstanceRun, ExperimentError> {
    let seed = cell_seed(spec.master_seed, psi_factor, capacity, replicate);
    let instance = gen_instance(&SatGenConfig::new(
        spec.n_students,
        capacity,
        seed,
        psi_factor,
    ))?;
    let outcomes: Vec<Outcome> = spec.algorithms.iter().map(|a| a.run(&instance)).collect();
    let metrics = outcomes
        .iter()
        .map(|o| evaluate(&instance, o))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(InstanceRun {
        replicate,
        seed,
        instance,
        outcomes,
        metrics,
    })
}

/// Runs every cell in memory. Replicates within a cell run in parallel;
/// results are collected in replicate order, so the output does not depend
/// on scheduling. `progress` is called after each finished cell.
pub fn run_sweep(
    spec: &ExperimentSpec,
    mut progress: impl FnMut(&CellResult),
) -> Result<SweepResults, ExperimentError> {
    spec.validate()?;
    let mut cells = Vec::new();
    for &psi_factor in &spec.psi_factors {
        for &capacity in &spec.capacities {
            let runs = (0..spec.seeds_per_cell)
                .into_par_iter()
                .map(|k| run_one(spec, psi_factor, capacity, k))
                .collect::<Result<Vec<_>, _>>()?;
            let values: Vec<Vec<MetricValues>> = runs.iter().map(|r| r.metrics.clone()).collect();
            let report = ratios(&spec.algorithms, &values)?;
            let cell = CellResult {
                psi_factor,
                capacity,
                runs,
                report,
            };
            progress(&cell);
            cells.push(cell);
        }
    }
    Ok(SweepResults {
        spec: spec.clone(),
        cells,
    })
}

#[derive(Debug, Serialize)]
struct ManifestCell {
    psi_factor: f64,
    q_c: usize,
    seeds: Vec<u64>,
    psi_actual: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    created_unix: u64,
    seed_scheme: &'static str,
    spec: &'a ExperimentSpec,
    cells: Vec<ManifestCell>,
}

fn ratio(x: f64) -> String {
    format!("{x:.6}")
}

/// Writes `ratios.csv`, `instances.csv` and `manifest.json` into `dir`.
pub fn write_results(results: &SweepResults, dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_path(dir.join(RATIOS_FILE))?;
    w.write_record([
        "psi_factor",
        "q_c",
        "algorithm",
        "metric",
        "avg_ratio",
        "worst_ratio",
        "n_instances",
        "zero_opt_instances",
    ])?;
    for cell in &results.cells {
        for (a, alg) in cell.report.algorithms.iter().enumerate() {
            for metric in Metric::ALL {
                let s = &cell.report.stats[a][metric as usize];
                w.write_record([
                    cell.psi_factor.to_string(),
                    cell.capacity.to_string(),
                    alg.tag().to_string(),
                    metric.tag().to_string(),
                    ratio(s.avg_ratio),
                    ratio(s.worst_ratio),
                    s.n_instances.to_string(),
                    s.zero_opt.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join(INSTANCES_FILE))?;
    w.write_record([
        "psi_factor",
        "q_c",
        "replicate",
        "seed",
        "psi_actual",
        "algorithm",
        "n1",
        "n2",
        "n3",
        "p1",
        "p2",
        "p3",
        "min_percentile",
        "max_percentile",
    ])?;
    for cell in &results.cells {
        for run in &cell.runs {
            for (o, m) in run.outcomes.iter().zip(&run.metrics) {
                let sig = o.signature();
                w.write_record([
                    cell.psi_factor.to_string(),
                    cell.capacity.to_string(),
                    run.replicate.to_string(),
                    run.seed.to_string(),
                    run.instance.total_reserves().to_string(),
                    o.algorithm.tag().to_string(),
                    sig.first.to_string(),
                    sig.second.to_string(),
                    sig.third.to_string(),
                    m.p1.to_string(),
                    m.p2.to_string(),
                    format!("{:.6}", m.p3),
                    format!("{:.6}", m.min_percentile),
                    format!("{:.6}", m.max_percentile),
                ])?;
            }
        }
    }
    w.flush()?;

    let manifest = Manifest {
        tool: "divsel",
        version: env!("CARGO_PKG_VERSION"),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seed_scheme:
            "mix(mix(mix(mix(master) ^ psi_factor.to_bits()) ^ q_c) ^ replicate), mix = splitmix64",
        spec: &results.spec,
        cells: results
            .cells
            .iter()
            .map(|c| ManifestCell {
                psi_factor: c.psi_factor,
                q_c: c.capacity,
                seeds: c.runs.iter().map(|r| r.seed).collect(),
                psi_actual: c.runs.iter().map(|r| r.instance.total_reserves()).collect(),
            })
            .collect(),
    };
    fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

/// Generates, runs, aggregates and persists a sweep.
pub fn run_experiment(
    spec: &ExperimentSpec,
    dir: &Path,
    progress: impl FnMut(&CellResult),
) -> Result<SweepResults, ExperimentError> {
    let results = run_sweep(spec, progress)?;
    write_results(&results, dir)?;
    Ok(results)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    Avg,
    Worst,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Avg => "avg",
            Case::Worst => "worst",
        })
    }
}

impl FromStr for Case {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "avg" | "average" => Ok(Case::Avg),
            "worst" | "min" => Ok(Case::Worst),
            _ => Err(format!("unknown case `{s}` (expected avg or worst)")),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RatioRow {
    psi_factor: f64,
    q_c: usize,
    algorithm: String,
    metric: String,
    avg_ratio: f64,
    worst_ratio: f64,
}

/// Wide table for one plot: rows are capacities, columns algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTable {
    pub psi_factor: f64,
    pub metric: Metric,
    pub case: Case,
    pub algorithms: Vec<String>,
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl PlotTable {
    pub fn column(&self, algorithm: &str) -> Option<Vec<f64>> {
        let i = self.algorithms.iter().position(|a| a == algorithm)?;
        Some(self.rows.iter().map(|(_, v)| v[i]).collect())
    }

    pub fn file_name(&self) -> String {
        format!(
            "plot_{}_{}_psi{}.csv",
            self.metric, self.case, self.psi_factor
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("q_c");
        for a in &self.algorithms {
            out.push(',');
            out.push_str(Algorithm::from_str(a).map(|x| x.label()).unwrap_or(a));
        }
        out.push('\n');
        for (q, vals) in &self.rows {
            out.push_str(&q.to_string());
            for v in vals {
                out.push(',');
                out.push_str(&ratio(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Reads `ratios.csv` from `dir` and pivots it into one table per ψ factor
/// (or just `psi_factor` when given).
pub fn load_plot_tables(
    dir: &Path,
    metric: Metric,
    case: Case,
    psi_factor: Option<f64>,
) -> Result<Vec<PlotTable>, ExperimentError> {
    let path = dir.join(RATIOS_FILE);
    if !path.exists() {
        return Err(ExperimentError::MissingResults(format!(
            "{} not found",
            path.display()
        )));
    }
    let mut reader = csv::Reader::from_path(&path)?;
    // psi bits -> q_c -> algorithm -> value
    let mut grid: BTreeMap<u64, BTreeMap<usize, Vec<(String, f64)>>> = BTreeMap::new();
    let mut algorithms: Vec<String> = Vec::new();
    for row in reader.deserialize() {
        let row: RatioRow = row?;
        if row.metric != metric.tag()
            || psi_factor.is_some_and(|f| (f - row.psi_factor).abs() > 1e-9)
        {
            continue;
        }
        if !algorithms.contains(&row.algorithm) {
            algorithms.push(row.algorithm.clone());
        }
        let value = match case {
            Case::Avg => row.avg_ratio,
            Case::Worst => row.worst_ratio,
        };
        grid.entry(row.psi_factor.to_bits())
            .or_default()
            .entry(row.q_c)
            .or_default()
            .push((row.algorithm, value));
    }
    if grid.is_empty() {
        return Err(ExperimentError::MissingResults(format!(
            "no {metric} rows{} in {}",
            psi_factor
                .map(|f| format!(" for psi factor {f}"))
                .unwrap_or_default(),
            path.display()
        )));
    }
    let mut tables: Vec<PlotTable> = grid
        .into_iter()
        .map(|(bits, by_q)| PlotTable {
            psi_factor: f64::from_bits(bits),
            metric,
            case,
            algorithms: algorithms.clone(),
            rows: by_q
                .into_iter()
                .map(|(q, vals)| {
                    let row = algorithms
                        .iter()
                        .map(|a| {
                            vals.iter()
                                .find(|(x, _)| x == a)
                                .map_or(f64::NAN, |(_, v)| *v)
                        })
                        .collect();
                    (q, row)
                })
                .collect(),
        })
        .collect();
    tables.sort_by(|a, b| a.psi_factor.total_cmp(&b.psi_factor));
    Ok(tables)
}

/// Writes the plot tables next to the results; returns the written paths.
pub fn emit_plot_data(
    dir: &Path,
    metric: Metric,
    case: Case,
    psi_factor: Option<f64>,
) -> Result<Vec<PathBuf>, ExperimentError> {
    let tables = load_plot_tables(dir, metric, case, psi_factor)?;
    let mut paths = Vec::new();
    for t in tables {
        let p = dir.join(t.file_name());
        fs::write(&p, t.to_csv())?;
        paths.push(p);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentSpec {
        ExperimentSpec {
            n_students: 30,
            capacities: vec![10],
            psi_factors: vec![1.0],
            seeds_per_cell: 1,
            algorithms: Algorithm::ALL.to_vec(),
            master_seed: 1,
        }
    }

    #[test]
    fn seeds_depend_on_values_only() {
        let a = cell_seed(7, 1.0, 20, 3);
        assert_eq!(a, cell_seed(7, 1.0, 20, 3));
        assert_ne!(a, cell_seed(7, 1.0, 20, 4));
        assert_ne!(a, cell_seed(7, 2.0, 20, 3));
        assert_ne!(a, cell_seed(8, 1.0, 20, 3));
    }

    #[test]
    fn spec_validation() {
        assert!(tiny().validate().is_ok());
        let mut s = tiny();
        s.capacities = vec![31];
        assert!(s.validate().is_err());
        let mut s = tiny();
        s.seeds_per_cell = 0;
        assert!(s.validate().is_err());
        let mut s = tiny();
        s.psi_factors = vec![-1.0];
        assert!(s.validate().is_err());
        let mut s = tiny();
        s.algorithms.clear();
        assert!(s.validate().is_err());
    }

    #[test]
    fn single_cell_smoke() {
        let mut seen = 0;
        let res = run_sweep(&tiny(), |_| seen += 1).unwrap();
        assert_eq!(seen, 1);
        let cell = res.cell(1.0, 10).unwrap();
        assert_eq!(cell.runs.len(), 1);
        assert_eq!(cell.runs[0].outcomes.len(), 6);
        assert!(cell.runs[0].outcomes.iter().all(|o| o.selected.len() == 10));
    }

    #[test]
    fn case_parse() {
        assert_eq!("avg".parse::<Case>(), Ok(Case::Avg));
        assert_eq!("Worst".parse::<Case>(), Ok(Case::Worst));
        assert!("best".parse::<Case>().is_err());
    }
}
