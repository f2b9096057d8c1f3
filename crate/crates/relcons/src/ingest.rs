//! Parse bundle-structured prediction files and reduce them to per-stratum
//! (accuracy, consistency) counts.
//!
//! Input is JSON lines, one object per instance:
//!
//! ```text
//! {"bundle_id": "q12", "instance_id": "q12-orig", "correct": true}
//! {"bundle_id": "q12", "instance_id": "q12-contrast", "gold": "Brabejum", "prediction": "brabejum"}
//! ```
//!
//! Required fields are `bundle_id` and `instance_id`. Correctness comes from
//! exactly one source per record: an explicit `correct` boolean, or a
//! `gold`/`prediction` string pair judged by normalized equality (trim always,
//! case folding optional). A file must stick to one source kind throughout.
//! Unknown fields are ignored.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consistency::{self, BundleSpec, ScorePoint};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: invalid record: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error(
        "line {line}: record needs exactly one correctness source: \
         either \"correct\" or both \"gold\" and \"prediction\""
    )]
    AmbiguousCorrectness { line: usize },
    #[error(
        "line {line}: file mixes explicit \"correct\" records with \
         gold/prediction records; use one correctness source per file"
    )]
    MixedSchema { line: usize },
    #[error("line {line}: duplicate instance {instance_id:?} in bundle {bundle_id:?}")]
    DuplicateInstance {
        line: usize,
        bundle_id: String,
        instance_id: String,
    },
    #[error("no records in input")]
    NoRecords,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Normalization applied to gold/prediction strings before comparison.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestOptions {
    /// Compare case-insensitively (Unicode lowercasing) in addition to the
    /// always-on whitespace trim.
    pub fold_case: bool,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    bundle_id: String,
    instance_id: String,
    #[serde(default)]
    correct: Option<bool>,
    #[serde(default)]
    gold: Option<String>,
    #[serde(default)]
    prediction: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CorrectnessSource {
    Explicit,
    GoldPrediction,
}

/// One bundle with the per-instance correctness outcomes, in input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub id: String,
    pub outcomes: Vec<bool>,
}

impl Bundle {
    pub fn size(&self) -> u64 {
        self.outcomes.len() as u64
    }

    pub fn correct_instances(&self) -> u64 {
        self.outcomes.iter().filter(|&&hit| hit).count() as u64
    }

    pub fn is_fully_correct(&self) -> bool {
        self.outcomes.iter().all(|&hit| hit)
    }
}

/// Bundles grouped by size; each stratum is scored independently.
#[derive(Debug, Clone, Default)]
pub struct BundleSet {
    strata: BTreeMap<u64, Vec<Bundle>>,
}

impl BundleSet {
    /// Strata in increasing bundle-size order; bundles sorted by id.
    pub fn strata(&self) -> impl Iterator<Item = (u64, &[Bundle])> {
        self.strata.iter().map(|(&size, bundles)| (size, bundles.as_slice()))
    }

    pub fn bundle_count(&self) -> usize {
        self.strata.values().map(Vec::len).sum()
    }
}

/// Integer counts for one bundle-size stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StratumCounts {
    /// Instances per bundle in this stratum.
    pub bundle_size: u64,
    /// Bundles in this stratum.
    pub bundles: u64,
    /// Correct instances across the stratum.
    pub correct: u64,
    /// Fully correct bundles.
    pub consistent: u64,
}

impl StratumCounts {
    /// Singleton strata carry accuracy only; consistency over them is
    /// accuracy, so they are excluded from relative consistency.
    pub fn is_singleton(&self) -> bool {
        self.bundle_size == 1
    }

    pub fn spec(&self) -> Result<BundleSpec, consistency::ConsistencyError> {
        BundleSpec::new(self.bundles, self.bundle_size)
    }

    pub fn point(&self) -> ScorePoint {
        ScorePoint::new(self.correct, self.consistent)
    }
}

fn normalize(text: &str, options: IngestOptions) -> String {
    let trimmed = text.trim();
    if options.fold_case {
        trimmed.to_lowercase()
    } else {
        trimmed.to_string()
    }
}

/// Read JSONL records, judge correctness, and group bundles into size strata.
pub fn load_predictions<R: BufRead>(
    reader: R,
    options: IngestOptions,
) -> Result<BundleSet, IngestError> {
    let mut bundles: BTreeMap<String, Vec<(String, bool)>> = BTreeMap::new();
    let mut schema: Option<CorrectnessSource> = None;
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let record: RawRecord =
            serde_json::from_str(&text).map_err(|source| IngestError::Parse {
                line: line_no,
                source,
            })?;
        let (source, outcome) = match (record.correct, record.gold, record.prediction) {
            (Some(flag), None, None) => (CorrectnessSource::Explicit, flag),
            (None, Some(gold), Some(prediction)) => (
                CorrectnessSource::GoldPrediction,
                normalize(&gold, options) == normalize(&prediction, options),
            ),
            _ => return Err(IngestError::AmbiguousCorrectness { line: line_no }),
        };
        match schema {
            None => schema = Some(source),
            Some(kind) if kind != source => {
                return Err(IngestError::MixedSchema { line: line_no })
            }
            Some(_) => {}
        }
        let instances = bundles.entry(record.bundle_id.clone()).or_default();
        if instances.iter().any(|(id, _)| *id == record.instance_id) {
            return Err(IngestError::DuplicateInstance {
                line: line_no,
                bundle_id: record.bundle_id,
                instance_id: record.instance_id,
            });
        }
        instances.push((record.instance_id, outcome));
    }
    if bundles.is_empty() {
        return Err(IngestError::NoRecords);
    }
    let mut strata: BTreeMap<u64, Vec<Bundle>> = BTreeMap::new();
    for (id, instances) in bundles {
        let bundle = Bundle {
            id,
            outcomes: instances.into_iter().map(|(_, outcome)| outcome).collect(),
        };
        match strata.entry(bundle.size()) {
            Entry::Vacant(slot) => {
                slot.insert(vec![bundle]);
            }
            Entry::Occupied(mut slot) => slot.get_mut().push(bundle),
        }
    }
    Ok(BundleSet { strata })
}

/// Reduce each stratum to its (accuracy, consistency) counts.
pub fn score_bundles(set: &BundleSet) -> Vec<StratumCounts> {
    set.strata()
        .map(|(size, bundles)| StratumCounts {
            bundle_size: size,
            bundles: bundles.len() as u64,
            correct: bundles.iter().map(Bundle::correct_instances).sum(),
            consistent: bundles.iter().filter(|b| b.is_fully_correct()).count() as u64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn load(text: &str, options: IngestOptions) -> Result<BundleSet, IngestError> {
        load_predictions(Cursor::new(text), options)
    }

    fn score(text: &str, options: IngestOptions) -> Vec<StratumCounts> {
        score_bundles(&load(text, options).unwrap())
    }

    #[test]
    fn single_fully_correct_bundle() {
        let counts = score(
            r#"{"bundle_id": "b1", "instance_id": "i1", "correct": true}
{"bundle_id": "b1", "instance_id": "i2", "correct": true}"#,
            IngestOptions::default(),
        );
        assert_eq!(
            counts,
            vec![StratumCounts {
                bundle_size: 2,
                bundles: 1,
                correct: 2,
                consistent: 1
            }]
        );
    }

    #[test]
    fn gold_prediction_judged_with_case_folding() {
        let text = r#"{"bundle_id": "b1", "instance_id": "i1", "gold": "Marsilea", "prediction": "marsilea"}
{"bundle_id": "b1", "instance_id": "i2", "gold": "Brabejum", "prediction": "Brabejum"}"#;
        let folded = score(text, IngestOptions { fold_case: true });
        assert_eq!(folded[0].correct, 2);
        assert_eq!(folded[0].consistent, 1);
        let strict = score(text, IngestOptions::default());
        assert_eq!(strict[0].correct, 1);
        assert_eq!(strict[0].consistent, 0);
    }

    #[test]
    fn whitespace_is_always_trimmed() {
        let counts = score(
            r#"{"bundle_id": "b1", "instance_id": "i1", "gold": " Marsilea ", "prediction": "Marsilea"}
{"bundle_id": "b1", "instance_id": "i2", "gold": "x", "prediction": "y"}"#,
            IngestOptions::default(),
        );
        assert_eq!(counts[0].correct, 1);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            load("", IngestOptions::default()),
            Err(IngestError::NoRecords)
        ));
        assert!(matches!(
            load("\n  \n", IngestOptions::default()),
            Err(IngestError::NoRecords)
        ));
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let err = load(
            "{\"bundle_id\": \"b\", \"instance_id\": \"i\", \"correct\": true}\nnot json",
            IngestOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn duplicate_instances_are_rejected_not_deduplicated() {
        let err = load(
            r#"{"bundle_id": "b", "instance_id": "i", "correct": true}
{"bundle_id": "b", "instance_id": "i", "correct": true}"#,
            IngestOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::DuplicateInstance { line: 2, .. }));
    }

    #[test]
    fn exactly_one_correctness_source_per_record() {
        for bad in [
            r#"{"bundle_id": "b", "instance_id": "i"}"#,
            r#"{"bundle_id": "b", "instance_id": "i", "gold": "x"}"#,
            r#"{"bundle_id": "b", "instance_id": "i", "correct": true, "gold": "x", "prediction": "x"}"#,
            r#"{"bundle_id": "b", "instance_id": "i", "correct": true, "gold": "x"}"#,
        ] {
            let err = load(bad, IngestOptions::default()).unwrap_err();
            assert!(
                matches!(err, IngestError::AmbiguousCorrectness { line: 1 }),
                "{bad}: {err}"
            );
        }
    }

    #[test]
    fn mixed_schemas_are_refused() {
        let err = load(
            r#"{"bundle_id": "b", "instance_id": "i1", "correct": true}
{"bundle_id": "b", "instance_id": "i2", "gold": "x", "prediction": "x"}"#,
            IngestOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::MixedSchema { line: 2 }));
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let counts = score(
            r#"{"bundle_id": "b", "instance_id": "i1", "correct": true, "question": "?", "split": "dev"}
{"bundle_id": "b", "instance_id": "i2", "correct": false}"#,
            IngestOptions::default(),
        );
        assert_eq!(counts[0].correct, 1);
    }

    #[test]
    fn toy_layout_three_full_one_single() {
        // Five pair bundles: three fully correct, one singly correct, one wrong.
        let mut lines = String::new();
        let flags = [(true, true), (true, true), (true, true), (true, false), (false, false)];
        for (i, (first, second)) in flags.iter().enumerate() {
            lines.push_str(&format!(
                "{{\"bundle_id\": \"b{i}\", \"instance_id\": \"orig\", \"correct\": {first}}}\n"
            ));
            lines.push_str(&format!(
                "{{\"bundle_id\": \"b{i}\", \"instance_id\": \"contrast\", \"correct\": {second}}}\n"
            ));
        }
        let counts = score(&lines, IngestOptions::default());
        assert_eq!(
            counts,
            vec![StratumCounts {
                bundle_size: 2,
                bundles: 5,
                correct: 7,
                consistent: 3
            }]
        );
    }

    #[test]
    fn all_wrong_scores_zero() {
        let counts = score(
            r#"{"bundle_id": "b", "instance_id": "i1", "correct": false}
{"bundle_id": "b", "instance_id": "i2", "correct": false}"#,
            IngestOptions::default(),
        );
        assert_eq!(counts[0].correct, 0);
        assert_eq!(counts[0].consistent, 0);
    }

    #[test]
    fn mixed_sizes_split_into_strata() {
        let counts = score(
            r#"{"bundle_id": "pair", "instance_id": "i1", "correct": true}
{"bundle_id": "pair", "instance_id": "i2", "correct": true}
{"bundle_id": "triple", "instance_id": "i1", "correct": true}
{"bundle_id": "triple", "instance_id": "i2", "correct": false}
{"bundle_id": "triple", "instance_id": "i3", "correct": true}
{"bundle_id": "lone", "instance_id": "i1", "correct": true}"#,
            IngestOptions::default(),
        );
        assert_eq!(counts.len(), 3);
        assert_eq!(counts[0].bundle_size, 1);
        assert!(counts[0].is_singleton());
        assert_eq!(counts[1].bundle_size, 2);
        assert_eq!(counts[2].bundle_size, 3);
        assert_eq!(counts[2].correct, 2);
        assert_eq!(counts[2].consistent, 0);
    }

    #[test]
    fn scoring_is_idempotent() {
        let set = load(
            r#"{"bundle_id": "b", "instance_id": "i1", "correct": true}
{"bundle_id": "b", "instance_id": "i2", "correct": false}"#,
            IngestOptions::default(),
        )
        .unwrap();
        assert_eq!(score_bundles(&set), score_bundles(&set));
    }

    proptest! {
        /// Whatever the input layout, emitted counts are always feasible.
        #[test]
        fn emitted_counts_are_always_feasible(layout in proptest::collection::vec(
            (1usize..=4, proptest::collection::vec(proptest::bool::ANY, 4)),
            1..12,
        )) {
            let mut text = String::new();
            for (i, (size, outcomes)) in layout.iter().enumerate() {
                for j in 0..*size {
                    text.push_str(&format!(
                        "{{\"bundle_id\": \"b{i}\", \"instance_id\": \"i{j}\", \"correct\": {}}}\n",
                        outcomes[j]
                    ));
                }
            }
            let counts = score(&text, IngestOptions::default());
            for stratum in counts {
                let correct_max = stratum.bundles * stratum.bundle_size;
                prop_assert!(stratum.correct <= correct_max);
                prop_assert!(stratum.consistent <= stratum.correct / stratum.bundle_size);
                prop_assert!(
                    stratum.consistent
                        >= stratum.correct.saturating_sub(stratum.bundles * (stratum.bundle_size - 1))
                );
            }
        }
    }
}
