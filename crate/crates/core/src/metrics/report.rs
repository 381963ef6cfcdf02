//! Corpus-level scoring of a decoded split against its references.

use super::bleu::bleu_corpus;
use super::cider::{cider_d, TfIdfIndex};
use super::meteor::meteor_lite;
use super::ngram::validate_metric_input;
use super::rouge::rouge_l;
use crate::error::Result;
use serde::{Deserialize, Serialize};

/// Corpus metrics: BLEU-4 from aggregated counts (unsmoothed), the rest
/// averaged over sentences. CIDEr-D uses an index built over the
/// evaluation references themselves.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricReport {
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu4: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meteor_lite: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cider_d: Option<f64>,
}

/// Metric selection for a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricSelection {
    pub bleu4: bool,
    pub rouge_l: bool,
    pub meteor_lite: bool,
    pub cider_d: bool,
}

impl Default for MetricSelection {
    fn default() -> Self {
        MetricSelection {
            bleu4: true,
            rouge_l: true,
            meteor_lite: true,
            cider_d: true,
        }
    }
}

impl MetricSelection {
    pub fn parse(list: &str) -> Option<Self> {
        let mut sel = MetricSelection {
            bleu4: false,
            rouge_l: false,
            meteor_lite: false,
            cider_d: false,
        };
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "bleu4" => sel.bleu4 = true,
                "rougeL" => sel.rouge_l = true,
                "meteorlite" => sel.meteor_lite = true,
                "ciderD" => sel.cider_d = true,
                _ => return None,
            }
        }
        Some(sel)
    }
}

/// Scores candidate/reference pairs. Pairs with an empty candidate (for
/// example an all-special decode) contribute zero instead of erroring.
pub fn score_corpus(
    pairs: &[(Vec<String>, Vec<Vec<String>>)],
    selection: MetricSelection,
) -> Result<MetricReport> {
    for (c, refs) in pairs {
        validate_metric_input(c)?;
        for r in refs {
            validate_metric_input(r)?;
        }
    }
    let scored: Vec<&(Vec<String>, Vec<Vec<String>>)> =
        pairs.iter().filter(|(c, _)| !c.is_empty()).collect();
    let n = pairs.len();
    type SentenceMetric<'a> = &'a dyn Fn(&[String], &[Vec<String>]) -> Result<f64>;
    let mean = |f: SentenceMetric| -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (c, refs) in &scored {
            total += f(c, refs)?;
        }
        Ok(total / n as f64)
    };

    let bleu4 = if selection.bleu4 {
        let non_empty: Vec<(Vec<String>, Vec<Vec<String>>)> =
            scored.iter().map(|p| (*p).clone()).collect();
        Some(if non_empty.is_empty() {
            0.0
        } else {
            bleu_corpus(&non_empty, 4)?
        })
    } else {
        None
    };
    let rouge = if selection.rouge_l {
        Some(mean(&|c, r| rouge_l(c, r))?)
    } else {
        None
    };
    let meteor = if selection.meteor_lite {
        Some(mean(&|c, r| meteor_lite(c, r))?)
    } else {
        None
    };
    let cider = if selection.cider_d {
        let index = TfIdfIndex::build(pairs.iter().map(|(_, refs)| refs));
        Some(mean(&|c, r| cider_d(c, r, &index))?)
    } else {
        None
    };

    Ok(MetricReport {
        count: n,
        bleu4,
        rouge_l: rouge,
        meteor_lite: meteor,
        cider_d: cider,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ngram::tokenize;

    #[test]
    fn ground_truth_as_candidate_maxes_out() {
        let pairs: Vec<(Vec<String>, Vec<Vec<String>>)> = vec![
            (
                tokenize("a red circle above a blue square"),
                vec![tokenize("a red circle above a blue square")],
            ),
            (
                tokenize("a small star holding a big ring"),
                vec![tokenize("a small star holding a big ring")],
            ),
        ];
        let report = score_corpus(&pairs, MetricSelection::default()).unwrap();
        assert!((report.bleu4.unwrap() - 1.0).abs() < 1e-9);
        assert!((report.rouge_l.unwrap() - 1.0).abs() < 1e-12);
        assert!((report.cider_d.unwrap() - 10.0).abs() < 1e-6);
    }

    #[test]
    fn empty_corpus_gives_empty_report() {
        let report = score_corpus(&[], MetricSelection::default()).unwrap();
        assert_eq!(report.count, 0);
        assert_eq!(report.bleu4, Some(0.0));
    }

    #[test]
    fn selection_filters_fields() {
        let sel = MetricSelection::parse("bleu4,ciderD").unwrap();
        assert!(sel.bleu4 && sel.cider_d && !sel.rouge_l && !sel.meteor_lite);
        assert!(MetricSelection::parse("nope").is_none());
    }
}
