//! Text and CSV views of reports.

use std::fmt::Write as _;

use super::{EvalReport, LanguageTable, Metrics, SweepReport};
use crate::error::{Error, Result};

fn pct(x: f64) -> String {
    format!("{:.1}", x * 100.0)
}

fn sr(m: &Metrics) -> String {
    m.success_rate.map_or_else(|| "-".to_string(), |s| format!("{s:.2}"))
}

/// Aligns whitespace-separated cells into columns.
fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, cell)| {
                let pad = widths[i] - cell.chars().count();
                if i == 0 {
                    format!("{cell}{}", " ".repeat(pad))
                } else {
                    format!("{}{cell}", " ".repeat(pad))
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

/// One row per report: accuracy, macro F1, label-0 P/R/F1, label-1 P/R/F1,
/// SR. Percentages except SR.
pub fn render_report_table(reports: &[EvalReport]) -> String {
    let mut rows = vec![
        ["scorer", "acc", "macroF1", "P0", "R0", "F1_0", "P1", "R1", "F1_1", "SR"]
            .map(String::from)
            .to_vec(),
    ];
    for r in reports {
        let m = &r.metrics;
        rows.push(vec![
            r.scorer.clone(),
            pct(m.accuracy),
            pct(m.macro_f1),
            pct(m.label0.precision),
            pct(m.label0.recall),
            pct(m.label0.f1),
            pct(m.label1.precision),
            pct(m.label1.recall),
            pct(m.label1.f1),
            sr(m),
        ]);
    }
    align(&rows)
}

/// Per-language rows (questions, IAA, accuracy, F1 per label, macro, SR)
/// followed by the average row.
pub fn render_language_table(table: &LanguageTable) -> String {
    let mut rows = vec![["lang", "#qs", "IAA", "acc", "F1_0", "F1_1", "macro", "SR"]
        .map(String::from)
        .to_vec()];
    let line = |name: String, qs: String, iaa: String, m: &Metrics| {
        vec![
            name,
            qs,
            iaa,
            pct(m.accuracy),
            pct(m.label0.f1),
            pct(m.label1.f1),
            pct(m.macro_f1),
            sr(m),
        ]
    };
    for (lang, r) in &table.rows {
        let iaa = table
            .iaa
            .get(lang)
            .map_or_else(|| "-".to_string(), |k| format!("{k:.2}"));
        rows.push(line(lang.clone(), r.questions.to_string(), iaa, &r.metrics));
    }
    let label = match table.average_kind {
        super::AverageKind::Unweighted => "average",
        super::AverageKind::QuestionWeighted => "weighted",
    };
    let total: usize = table.rows.values().map(|r| r.questions).sum();
    rows.push(line(label.into(), total.to_string(), String::new(), &table.average));
    align(&rows)
}

/// `threshold,accuracy,macroF1,label1F1,SR` rows for plotting.
pub fn render_sweep_csv(sweep: &SweepReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    w.write_record(["threshold", "accuracy", "macroF1", "label1F1", "SR"])
        .map_err(csv_err)?;
    for p in &sweep.points {
        let m = &p.report.metrics;
        w.write_record([
            p.threshold.to_string(),
            m.accuracy.to_string(),
            m.macro_f1.to_string(),
            m.label1.f1.to_string(),
            m.success_rate.map_or_else(String::new, |s| s.to_string()),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::invalid(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::scorers::{ScoreRange, ScoreRecord};

    fn recs(scores: &[f64]) -> Vec<ScoreRecord> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &s)| ScoreRecord {
                qa_id: "q".into(),
                paragraph_index: i,
                score: s,
                scorer: "zeros".into(),
                score_range: ScoreRange::UNIT,
            })
            .collect()
    }

    #[test]
    fn report_table_columns() {
        let r = evaluate(&recs(&[0.0, 0.0, 0.0, 0.0]), &[1, 0, 0, 0], None).unwrap();
        let text = render_report_table(&[r]);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("scorer"));
        let cells: Vec<&str> = lines[1].split_whitespace().collect();
        assert_eq!(cells, ["zeros", "75.0", "42.9", "75.0", "100.0", "85.7", "0.0", "0.0", "0.0", "0.00"]);
    }

    #[test]
    fn sweep_csv_header_and_rows() {
        let s = threshold_sweep(&recs(&[0.2, 0.8]), &[0, 1], &[0.5, 1.0]).unwrap();
        let csv = render_sweep_csv(&s).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "threshold,accuracy,macroF1,label1F1,SR");
        assert_eq!(lines[1], "0.5,1,1,1,1");
        assert_eq!(lines[2], "1,0.5,0.3333333333333333,0,0");
    }

    #[test]
    fn language_table_has_average_row() {
        let g = LanguageScores { language: "hi".into(), records: recs(&[0.9, 0.1]), labels: vec![1, 0] };
        let mut t = per_language_report(&[g], &Default::default(), AverageKind::Unweighted).unwrap();
        t.iaa.insert("hi".into(), 0.26);
        let text = render_language_table(&t);
        assert!(text.lines().nth(1).unwrap().contains("0.26"));
        assert!(text.lines().last().unwrap().starts_with("average"));
    }
}
