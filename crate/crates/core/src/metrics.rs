//! Diversity and merit metrics per outcome, and suite-relative performance
//! ratios over instance sets.
//!
//! * `p1`: rank-1 reserves filled
//! * `p2`: rank-1 plus rank-2 reserves filled
//! * `p3`: mean percentile of the selected students, where the student at
//!   1-based priority position `pos` out of `n` sits at `100·(n − pos + 1)/n`
//!
//! For each instance and metric the optimum is the best value reached by any
//! algorithm in the suite. An algorithm's ratio on that instance is its value
//! over the optimum, or 1 when the optimum is 0. [`ratios_against`] takes
//! per-instance optima instead, e.g. the true ones from [`true_optimum`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{Algorithm, Outcome};
use crate::engine::{build_graph, RankMaximalSolver};
use crate::model::{Instance, Rank};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    P1,
    P2,
    P3,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::P1, Metric::P2, Metric::P3];

    pub fn tag(self) -> &'static str {
        match self {
            Metric::P1 => "p1",
            Metric::P2 => "p2",
            Metric::P3 => "p3",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown metric `{s}` (expected p1, p2 or p3)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub p1: usize,
    pub p2: usize,
    pub p3: f64,
    /// Lowest and highest percentile among the selected; 0 when nobody is.
    pub min_percentile: f64,
    pub max_percentile: f64,
}

impl MetricValues {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::P1 => self.p1 as f64,
            Metric::P2 => self.p2 as f64,
            Metric::P3 => self.p3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("outcome references {0}, which the instance does not have")]
    UnknownStudent(String),
    #[error("outcome references seat {0}, which the instance does not have")]
    UnknownSeat(String),
    #[error("no instances to aggregate")]
    EmptyInstanceSet,
    #[error("instance {instance} has {found} outcomes, expected {expected}")]
    Ragged {
        instance: usize,
        found: usize,
        expected: usize,
    },
}

/// Percentile of the student at 0-based priority position `position`.
pub fn percentile(position: usize, n: usize) -> f64 {
    100.0 * (n - position) as f64 / n as f64
}

pub fn evaluate(instance: &Instance, outcome: &Outcome) -> Result<MetricValues, MetricsError> {
    let n = instance.num_students();
    let mut p1 = 0;
    let mut p2 = 0;
    for (s, seat) in outcome.matching.pairs() {
        if s.0 >= n {
            return Err(MetricsError::UnknownStudent(s.to_string()));
        }
        let exists = match seat.rank {
            Rank::Third => seat.ty.is_universal() && seat.index < instance.capacity(),
            r => !seat.ty.is_universal() && seat.index < instance.quotas().get(r, seat.ty),
        };
        if !exists {
            return Err(MetricsError::UnknownSeat(seat.to_string()));
        }
        match seat.rank {
            Rank::First => {
                p1 += 1;
                p2 += 1;
            }
            Rank::Second => p2 += 1,
            Rank::Third => {}
        }
    }
    let mut pcts = Vec::with_capacity(outcome.selected.len());
    for s in &outcome.selected {
        if s.0 >= n {
            return Err(MetricsError::UnknownStudent(s.to_string()));
        }
        pcts.push(percentile(instance.position(*s), n));
    }
    let (p3, min_percentile, max_percentile) = if pcts.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        (
            pcts.iter().sum::<f64>() / pcts.len() as f64,
            pcts.iter().copied().fold(f64::INFINITY, f64::min),
            pcts.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    Ok(MetricValues {
        p1,
        p2,
        p3,
        min_percentile,
        max_percentile,
    })
}

/// Average and worst ratio of one algorithm on one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub avg_ratio: f64,
    pub worst_ratio: f64,
    pub n_instances: usize,
    /// Instances where the suite optimum was 0 (ratio taken as 1).
    pub zero_opt: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub algorithms: Vec<Algorithm>,
    /// `stats[a][m]` for algorithm index `a` and metric index `m` (P1, P2, P3).
    pub stats: Vec<[RatioStats; 3]>,
}

impl RatioReport {
    pub fn get(&self, algorithm: Algorithm, metric: Metric) -> Option<&RatioStats> {
        let a = self.algorithms.iter().position(|&x| x == algorithm)?;
        Some(&self.stats[a][metric as usize])
    }
}

/// Per-instance ratio of each algorithm to the suite optimum.
/// `values[a]` is algorithm `a`'s metrics on one instance.
pub fn instance_ratios(values: &[MetricValues], metric: Metric) -> Vec<f64> {
    let opt = values.iter().map(|v| v.get(metric)).fold(0.0, f64::max);
    ratios_to(values, metric, opt)
}

fn ratios_to(values: &[MetricValues], metric: Metric, opt: f64) -> Vec<f64> {
    values
        .iter()
        .map(|v| if opt == 0.0 { 1.0 } else { v.get(metric) / opt })
        .collect()
}

/// Best attainable value of each metric on `instance`, independent of any
/// algorithm suite: most rank-1 seats, most reserved seats (rank 1 and 2
/// pooled), and the mean percentile of the top-`q_c` prefix. The percentile
/// fields hold that prefix's extremes.
pub fn true_optimum(instance: &Instance) -> MetricValues {
    let pool = instance.acceptable();
    let first = {
        let g = build_graph(instance, &pool);
        RankMaximalSolver::new(&g).best_signature().first
    };
    let reserved = {
        let merged = instance.with_quotas(instance.quotas().merged());
        let g = build_graph(&merged, &pool);
        RankMaximalSolver::new(&g).best_signature().first
    };
    let n = instance.num_students();
    let top: Vec<f64> = pool
        .iter()
        .take(instance.capacity())
        .map(|&s| percentile(instance.position(s), n))
        .collect();
    let (p3, min_percentile, max_percentile) = match (top.first(), top.last()) {
        (Some(&hi), Some(&lo)) => (top.iter().sum::<f64>() / top.len() as f64, lo, hi),
        _ => (0.0, 0.0, 0.0),
    };
    MetricValues {
        p1: first,
        p2: reserved,
        p3,
        min_percentile,
        max_percentile,
    }
}

/// Aggregates `values[i][a]` (instance `i`, algorithm `algorithms[a]`)
/// against the suite-relative optimum.
pub fn ratios(
    algorithms: &[Algorithm],
    values: &[Vec<MetricValues>],
) -> Result<RatioReport, MetricsError> {
    aggregate(algorithms, values, None)
}

/// Like [`ratios`], but against externally supplied optima (one per
/// instance, e.g. from [`true_optimum`]).
pub fn ratios_against(
    algorithms: &[Algorithm],
    values: &[Vec<MetricValues>],
    optima: &[MetricValues],
) -> Result<RatioReport, MetricsError> {
    if optima.len() != values.len() {
        return Err(MetricsError::Ragged {
            instance: optima.len().min(values.len()),
            found: optima.len(),
            expected: values.len(),
        });
    }
    aggregate(algorithms, values, Some(optima))
}

fn aggregate(
    algorithms: &[Algorithm],
    values: &[Vec<MetricValues>],
    optima: Option<&[MetricValues]>,
) -> Result<RatioReport, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInstanceSet);
    }
    let k = algorithms.len();
    for (i, row) in values.iter().enumerate() {
        if row.len() != k {
            return Err(MetricsError::Ragged {
                instance: i,
                found: row.len(),
                expected: k,
            });
        }
    }
    let n = values.len();
    let mut sums = vec![[0.0f64; 3]; k];
    let mut worst = vec![[f64::INFINITY; 3]; k];
    let mut zero = [0usize; 3];
    for (i, row) in values.iter().enumerate() {
        for metric in Metric::ALL {
            let m = metric as usize;
            let opt = match optima {
                Some(o) => o[i].get(metric),
                None => row.iter().map(|v| v.get(metric)).fold(0.0, f64::max),
            };
            if opt == 0.0 {
                zero[m] += 1;
            }
            for (a, x) in ratios_to(row, metric, opt).into_iter().enumerate() {
                sums[a][m] += x;
                worst[a][m] = worst[a][m].min(x);
            }
        }
    }
    let stats = (0..k)
        .map(|a| {
            [0, 1, 2].map(|m| RatioStats {
                avg_ratio: sums[a][m] / n as f64,
                worst_ratio: worst[a][m],
                n_instances: n,
                zero_opt: zero[m],
            })
        })
        .collect();
    Ok(RatioReport {
        algorithms: algorithms.to_vec(),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{a_s_select, pog_select};
    use crate::engine::{Matching, Seat};
    use crate::model::{worked_example, QuotaTable, StudentId, TypeId};
    use std::collections::BTreeSet;

    #[test]
    fn worked_example_values() {
        let ex = worked_example();
        let v = evaluate(&ex, &a_s_select(&ex)).unwrap();
        assert_eq!((v.p1, v.p2), (2, 3));
        let v = evaluate(&ex, &pog_select(&ex)).unwrap();
        assert!((v.p3 - 100.0 * 15.0 / 18.0).abs() < 1e-12);
        assert_eq!(v.max_percentile, 100.0);
        assert!((v.min_percentile - 400.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn single_student_without_reserves() {
        let inst = Instance::in_priority_order(
            vec!["a".into()],
            vec![BTreeSet::new()],
            1,
            QuotaTable::zeros(1),
        );
        let out = Algorithm::As.run(&inst);
        let v = evaluate(&inst, &out).unwrap();
        assert_eq!((v.p1, v.p2, v.p3), (0, 0, 100.0));
    }

    #[test]
    fn unknown_seat_is_an_error() {
        let ex = worked_example();
        let mut out = a_s_select(&ex);
        out.matching = Matching::new(vec![(StudentId(0), Seat::new(TypeId(1), Rank::First, 5))]);
        assert!(matches!(
            evaluate(&ex, &out),
            Err(MetricsError::UnknownSeat(_))
        ));
        out.matching = Matching::default();
        out.selected = vec![StudentId(40)];
        assert!(matches!(
            evaluate(&ex, &out),
            Err(MetricsError::UnknownStudent(_))
        ));
    }

    #[test]
    fn worked_example_ratios() {
        let ex = worked_example();
        let row: Vec<_> = Algorithm::ALL
            .iter()
            .map(|a| evaluate(&ex, &a.run(&ex)).unwrap())
            .collect();
        let report = ratios(&Algorithm::ALL, &[row]).unwrap();
        assert_eq!(
            report.get(Algorithm::As, Metric::P1).unwrap().avg_ratio,
            1.0
        );
        assert_eq!(
            report.get(Algorithm::Pog, Metric::P1).unwrap().avg_ratio,
            0.0
        );
        assert_eq!(
            report.get(Algorithm::Pog, Metric::P3).unwrap().worst_ratio,
            1.0
        );
    }

    #[test]
    fn self_normalised_suite() {
        let ex = worked_example();
        let row = vec![evaluate(&ex, &pog_select(&ex)).unwrap()];
        let report = ratios(&[Algorithm::Pog], &[row.clone(), row]).unwrap();
        for m in Metric::ALL {
            let s = report.get(Algorithm::Pog, m).unwrap();
            assert_eq!((s.avg_ratio, s.worst_ratio, s.n_instances), (1.0, 1.0, 2));
        }
        // p1 is zero for POG alone: counted as a zero-optimum instance
        assert_eq!(report.get(Algorithm::Pog, Metric::P1).unwrap().zero_opt, 2);
    }

    #[test]
    fn duplicate_algorithms_get_identical_stats() {
        let ex = worked_example();
        let a = evaluate(&ex, &a_s_select(&ex)).unwrap();
        let p = evaluate(&ex, &pog_select(&ex)).unwrap();
        let report = ratios(
            &[Algorithm::As, Algorithm::As, Algorithm::Pog],
            &[vec![a, a, p]],
        )
        .unwrap();
        assert_eq!(report.stats[0], report.stats[1]);
    }

    #[test]
    fn true_optimum_bounds_the_suite() {
        let ex = worked_example();
        let opt = true_optimum(&ex);
        assert_eq!((opt.p1, opt.p2), (2, 3));
        assert!((opt.p3 - 100.0 * 15.0 / 18.0).abs() < 1e-12);
        let row: Vec<_> = Algorithm::ALL
            .iter()
            .map(|a| evaluate(&ex, &a.run(&ex)).unwrap())
            .collect();
        let report = ratios_against(&Algorithm::ALL, &[row.clone()], &[opt]).unwrap();
        // here the suite reaches every optimum, so both normalisations agree
        assert_eq!(report, ratios(&Algorithm::ALL, &[row.clone()]).unwrap());
        assert!(ratios_against(&Algorithm::ALL, &[row], &[]).is_err());
    }

    #[test]
    fn empty_set_rejected() {
        assert_eq!(
            ratios(&Algorithm::ALL, &[]),
            Err(MetricsError::EmptyInstanceSet)
        );
    }
}
