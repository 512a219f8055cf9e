//! Text formats for instances and outcomes (TOML documents).
//!
//! Instance document:
//!
//! ```toml
//! capacity = 3
//! types = ["t1", "t2", "t3", "t4"]
//! # one entry per student, highest priority first; entries are 1-based
//! # type numbers (type k is the k-th name above, 0 is the universal type)
//! students = [[], [4], [3], [1, 2, 3], [1], [2, 3]]
//! # optional: only the first `acceptable` students may be selected
//! # acceptable = 6
//! # optional: one score per student, same order as `students`
//! # scores = [1500.0, 1400.0, 1300.0, 1200.0, 1100.0, 1000.0]
//!
//! [quotas]
//! rank1 = [1, 1, 0, 0]   # per type, same order as `types`
//! rank2 = [0, 0, 1, 1]
//! ```
//!
//! Student `k` of the array is `s{k}` (1-based) everywhere in output. Parsing
//! yields an instance whose ids follow the array order; writing an instance
//! lists students in priority order, so `write(parse(doc))` is the identity on
//! canonical documents and `parse(write(i))` equals `i.canonicalized()`.
//!
//! Outcome record:
//!
//! ```toml
//! algorithm = "as"
//! selected = [2, 4, 5]                               # students, priority order
//! pairs = [[2, 4, 2, 1], [4, 2, 1, 1], [5, 1, 1, 1]] # student, type, rank, seat index
//! signature = [2, 1, 0]
//!
//! [metrics]   # optional
//! p1 = 2
//! p2 = 3
//! p3 = 55.55555555555556
//! ```

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{Algorithm, Outcome};
use crate::engine::{Matching, Seat};
use crate::metrics::MetricValues;
use crate::model::{Instance, QuotaTable, Rank, StudentId, TypeId, Violation};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed document: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("cannot serialize: {0}")]
    Write(#[from] toml::ser::Error),
    #[error("{0}")]
    Shape(String),
    #[error("invalid instance: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct QuotaDoc {
    rank1: Vec<usize>,
    rank2: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    capacity: usize,
    types: Vec<String>,
    students: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    acceptable: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scores: Option<Vec<f64>>,
    quotas: QuotaDoc,
}

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let doc: InstanceDoc = toml::from_str(text)?;
    let k = doc.types.len();
    if doc.quotas.rank1.len() != k || doc.quotas.rank2.len() != k {
        return Err(FormatError::Shape(format!(
            "quota arrays must have one entry per type ({k}), got {} and {}",
            doc.quotas.rank1.len(),
            doc.quotas.rank2.len()
        )));
    }
    let types: Vec<BTreeSet<TypeId>> = doc
        .students
        .iter()
        .map(|ts| ts.iter().map(|&t| TypeId(t)).collect())
        .collect();
    let instance = Instance::in_priority_order(
        doc.types,
        types,
        doc.capacity,
        QuotaTable::from_type_counts(&doc.quotas.rank1, &doc.quotas.rank2),
    )
    .with_acceptable_cutoff(doc.acceptable)
    .with_scores(doc.scores);
    instance.validate().map_err(FormatError::Invalid)?;
    Ok(instance)
}

pub fn write_instance(instance: &Instance) -> Result<String, FormatError> {
    let canon = instance.canonicalized();
    let doc = InstanceDoc {
        capacity: canon.capacity(),
        types: canon.type_names().to_vec(),
        students: canon
            .students()
            .iter()
            .map(|s| s.types.iter().map(|t| t.0).collect())
            .collect(),
        acceptable: canon.acceptable_cutoff(),
        scores: canon.scores().map(|s| s.to_vec()),
        quotas: QuotaDoc {
            rank1: pad(canon.quotas().type_counts(Rank::First), canon.num_types()),
            rank2: pad(canon.quotas().type_counts(Rank::Second), canon.num_types()),
        },
    };
    Ok(toml::to_string(&doc)?)
}

fn pad(counts: &[usize], len: usize) -> Vec<usize> {
    let mut v = counts.to_vec();
    v.resize(len, 0);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MetricsDoc {
    p1: usize,
    p2: usize,
    p3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeDoc {
    algorithm: String,
    selected: Vec<usize>,
    pairs: Vec<[usize; 4]>,
    signature: [usize; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metrics: Option<MetricsDoc>,
}

pub fn write_outcome(
    outcome: &Outcome,
    metrics: Option<&MetricValues>,
) -> Result<String, FormatError> {
    let sig = outcome.signature();
    let doc = OutcomeDoc {
        algorithm: outcome.algorithm.tag().to_string(),
        selected: outcome.selected.iter().map(|s| s.0 + 1).collect(),
        pairs: outcome
            .matching
            .pairs()
            .iter()
            .map(|(s, seat)| {
                [
                    s.0 + 1,
                    seat.ty.0,
                    seat.rank.number() as usize,
                    seat.index + 1,
                ]
            })
            .collect(),
        signature: [sig.first, sig.second, sig.third],
        metrics: metrics.map(|m| MetricsDoc {
            p1: m.p1,
            p2: m.p2,
            p3: m.p3,
        }),
    };
    Ok(toml::to_string(&doc)?)
}

/// Reads an outcome record back; the stored signature must agree with the pairs.
pub fn parse_outcome(text: &str) -> Result<Outcome, FormatError> {
    let doc: OutcomeDoc = toml::from_str(text)?;
    let algorithm: Algorithm = doc
        .algorithm
        .parse()
        .map_err(|e: crate::algorithms::UnknownAlgorithm| FormatError::Shape(e.to_string()))?;
    let one_based = |x: usize, what: &str| {
        x.checked_sub(1)
            .ok_or_else(|| FormatError::Shape(format!("{what} numbers are 1-based, got 0")))
    };
    let mut pairs = Vec::with_capacity(doc.pairs.len());
    for [s, t, r, i] in doc.pairs {
        let rank = u8::try_from(r)
            .ok()
            .and_then(Rank::from_number)
            .ok_or_else(|| FormatError::Shape(format!("rank must be 1, 2 or 3, got {r}")))?;
        pairs.push((
            StudentId(one_based(s, "student")?),
            Seat::new(TypeId(t), rank, one_based(i, "seat")?),
        ));
    }
    let selected = doc
        .selected
        .into_iter()
        .map(|s| one_based(s, "student").map(StudentId))
        .collect::<Result<Vec<_>, _>>()?;
    let outcome = Outcome {
        algorithm,
        selected,
        matching: Matching::new(pairs),
    };
    let sig = outcome.signature();
    if [sig.first, sig.second, sig.third] != doc.signature {
        return Err(FormatError::Shape(format!(
            "signature {:?} disagrees with the pairs ({sig})",
            doc.signature
        )));
    }
    Ok(outcome)
}
