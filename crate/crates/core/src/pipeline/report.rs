use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{NormalizationOrder, PipelineError};
use crate::wer::werr;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    /// Candidates judged by the miner.
    pub mined: usize,
    /// Pairs that made it into the map or table.
    pub accepted: usize,
    /// Token rewrites performed on reference plus hypothesis.
    pub applied: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub locale: String,
    pub utterances: usize,
    pub order: NormalizationOrder,
    pub base_wer: f64,
    pub spell_wer: Option<f64>,
    pub seg_wer: Option<f64>,
    pub cascade_wer: Option<f64>,
    pub spell_werr: Option<f64>,
    pub seg_werr: Option<f64>,
    pub cascade_werr: Option<f64>,
    pub spell_pairs: Option<PairCounts>,
    pub seg_pairs: Option<PairCounts>,
    /// Spell mining re-run on the segmentation-normalized corpus.
    pub cascade_spell_pairs: Option<PairCounts>,
}

impl EvaluationReport {
    pub fn new(locale: &str, utterances: usize, order: NormalizationOrder, base_wer: f64) -> Self {
        Self {
            locale: locale.to_owned(),
            utterances,
            order,
            base_wer,
            spell_wer: None,
            seg_wer: None,
            cascade_wer: None,
            spell_werr: None,
            seg_werr: None,
            cascade_werr: None,
            spell_pairs: None,
            seg_pairs: None,
            cascade_spell_pairs: None,
        }
    }

    /// Recomputes every WERR from the stored WERs. A zero base WER leaves
    /// WERR undefined.
    pub fn fill_werr(&mut self) {
        let base = self.base_wer;
        let rel = |stage: Option<f64>| stage.and_then(|w| werr(base, w).ok());
        self.spell_werr = rel(self.spell_wer);
        self.seg_werr = rel(self.seg_wer);
        self.cascade_werr = rel(self.cascade_wer);
    }

    /// True when each stored WERR equals `werr(base_wer, stage_wer)` bit
    /// for bit.
    pub fn is_consistent(&self) -> bool {
        let check = |stage: Option<f64>, stored: Option<f64>| {
            let expect = stage.and_then(|w| werr(self.base_wer, w).ok());
            match (expect, stored) {
                (Some(a), Some(b)) => a.to_bits() == b.to_bits(),
                (None, None) => true,
                _ => false,
            }
        };
        check(self.spell_wer, self.spell_werr)
            && check(self.seg_wer, self.seg_werr)
            && check(self.cascade_wer, self.cascade_werr)
    }

    /// Cascade WERR, or the single stage that ran.
    pub fn final_werr(&self) -> Option<f64> {
        match self.order {
            NormalizationOrder::SegThenSpell => self.cascade_werr,
            NormalizationOrder::SpellOnly => self.spell_werr,
            NormalizationOrder::SegOnly => self.seg_werr,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub languages: Vec<String>,
    pub werrs: Vec<f64>,
    /// Unweighted mean over reports.
    pub mean_werr: f64,
}

/// Averages the final-stage WERR of each report.
pub fn summarize(reports: &[EvaluationReport]) -> Result<Summary, PipelineError> {
    let werrs = reports
        .iter()
        .map(|r| {
            r.final_werr().ok_or_else(|| {
                PipelineError::Config(format!("report for {} has no defined WERR", r.locale))
            })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    summarize_werrs(&werrs).map(|mean| Summary {
        languages: reports.iter().map(|r| r.locale.clone()).collect(),
        werrs,
        mean_werr: mean,
    })
}

pub fn summarize_werrs(werrs: &[f64]) -> Result<f64, PipelineError> {
    if werrs.is_empty() {
        return Err(PipelineError::Config("nothing to summarize".into()));
    }
    Ok(werrs.iter().sum::<f64>() / werrs.len() as f64)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.1}")).unwrap_or_else(|| "-".into())
}

const COLUMNS: [&str; 9] = [
    "Lang",
    "Utt",
    "Base WER",
    "Spell WER",
    "Spell WERR",
    "Seg WER",
    "Seg WERR",
    "Cascade WER",
    "Cascade WERR",
];

fn row(r: &EvaluationReport) -> [String; 9] {
    [
        r.locale.clone(),
        r.utterances.to_string(),
        cell(Some(r.base_wer)),
        cell(r.spell_wer),
        cell(r.spell_werr),
        cell(r.seg_wer),
        cell(r.seg_werr),
        cell(r.cascade_wer),
        cell(r.cascade_werr),
    ]
}

/// Aligned-column text table, one row per report, values to one decimal.
pub fn render_table(reports: &[EvaluationReport]) -> String {
    let rows: Vec<[String; 9]> = reports.iter().map(row).collect();
    let mut widths = COLUMNS.map(|c| c.chars().count());
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| {
                let pad = w - c.chars().count();
                if i == 0 {
                    format!("{c}{}", " ".repeat(pad))
                } else {
                    format!("{}{c}", " ".repeat(pad))
                }
            })
            .collect();
        let _ = writeln!(out, "{}", padded.join(" | ").trim_end());
    };
    line(COLUMNS.to_vec(), &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("-+-"));
    for r in &rows {
        line(r.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

pub fn render_summary(reports: &[EvaluationReport], summary: &Summary) -> String {
    let mut out = render_table(reports);
    let _ = writeln!(
        out,
        "\nAverage WERR over {} languages: {:.2}",
        summary.werrs.len(),
        summary.mean_werr
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(locale: &str, base: f64, cascade: f64) -> EvaluationReport {
        let mut r = EvaluationReport::new(locale, 10, NormalizationOrder::SegThenSpell, base);
        r.cascade_wer = Some(cascade);
        r.fill_werr();
        r
    }

    #[test]
    fn average_of_four_cascade_werrs() {
        let mean = summarize_werrs(&[13.71, 15.58, 6.23, 17.53]).unwrap();
        assert!((mean - 13.2625).abs() < 1e-9);
        assert_eq!(summarize_werrs(&[7.5]).unwrap(), 7.5);
        assert_eq!(summarize_werrs(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(summarize_werrs(&[]).is_err());
    }

    #[test]
    fn summarize_reports() {
        let reports = vec![report("hi", 10.0, 8.0), report("mr", 20.0, 19.0)];
        let s = summarize(&reports).unwrap();
        assert_eq!(s.languages, vec!["hi", "mr"]);
        assert!((s.mean_werr - 12.5).abs() < 1e-9);
    }

    #[test]
    fn werr_recorded_consistently() {
        let mut r = report("hi", 12.1, 10.5);
        assert!(r.is_consistent());
        r.cascade_werr = Some(12.8);
        assert!(!r.is_consistent());

        let zero = report("te", 0.0, 0.0);
        assert_eq!(zero.cascade_werr, None);
        assert!(zero.is_consistent());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = report("gu", 19.3, 18.6);
        let back = EvaluationReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(back.is_consistent());
    }

    #[test]
    fn table_layout() {
        let t = render_table(&[report("Hin", 12.1, 10.5)]);
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[0].starts_with("Lang | Utt | Base WER"));
        assert!(lines[2].contains("12.1"));
        assert!(lines[2].contains("13.2"));
        assert_eq!(lines[2].matches(" - ").count(), 4);
    }
}
