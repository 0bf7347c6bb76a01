//! Summary tables and SVG figures built from an evaluation report.

use std::fmt::Write as _;

use srr_core::eval::{EvaluationReport, ModelReport};
use srr_core::models::ModelKind;
use srr_core::plot;

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "--".to_string(), |x| format!("{x:.3}"))
}

fn rate(v: Option<f64>) -> String {
    v.map_or_else(|| "N/A".to_string(), |x| format!("{x:.3}"))
}

/// Markdown table of the headline metrics, one row per model.
pub fn metrics_table(report: &EvaluationReport, crisis: &str) -> String {
    let mut s = String::from("| Crisis | Model | AUROC | Precision | Recall | Accuracy |\n");
    s.push_str("|---|---|---|---|---|---|\n");
    for m in &report.models {
        let x = m.metrics.as_ref();
        let _ = writeln!(
            s,
            "| {crisis} | {} | {} | {} | {} | {} |",
            m.name,
            cell(x.and_then(|x| x.auroc)),
            cell(x.and_then(|x| x.precision)),
            cell(x.and_then(|x| x.recall)),
            cell(x.and_then(|x| x.accuracy)),
        );
    }
    s
}

pub fn confusion_table(report: &EvaluationReport) -> String {
    let mut s = String::from("| Model | TN | FP | FN | TP | FPR | FNR |\n|---|---|---|---|---|---|---|\n");
    for m in &report.models {
        match &m.metrics {
            Some(x) => {
                let c = x.confusion;
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    m.name,
                    c.tn,
                    c.fp,
                    c.fn_,
                    c.tp,
                    rate(x.fpr),
                    rate(x.fnr)
                );
            }
            None => {
                let _ = writeln!(s, "| {} | -- | -- | -- | -- | N/A | N/A |", m.name);
            }
        }
    }
    s
}

fn lead_model(report: &EvaluationReport) -> Option<&ModelReport> {
    [ModelKind::TemporalGcn, ModelKind::SnapshotGcn, ModelKind::Logistic, ModelKind::RandomForest]
        .iter()
        .find_map(|k| report.models.iter().find(|m| m.kind == *k))
}

fn stamp(svg: String, hash: &str, seed: u64) -> String {
    // metadata right after the opening <svg ...> tag
    match svg.find('>') {
        Some(i) => format!("{}<desc>config {hash} seed {seed}</desc>{}", &svg[..=i], &svg[i + 1..]),
        None => svg,
    }
}

/// Every report file as `(relative path, contents)`, in a fixed order.
pub fn write_report(report: &EvaluationReport, crisis: &str, config_hash: &str) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let mut notes = report.notes.clone();
    let seed = report.seed;

    let roc: Vec<(String, Vec<(f64, f64)>)> = report
        .models
        .iter()
        .filter_map(|m| m.roc.clone().map(|c| (m.name.clone(), c)))
        .collect();
    let pr: Vec<(String, Vec<(f64, f64)>)> = report
        .models
        .iter()
        .filter_map(|m| m.pr.clone().map(|c| (m.name.clone(), c)))
        .collect();
    if roc.is_empty() {
        notes.push("ROC and PR plots omitted: the test labels contain a single class.".into());
    } else {
        files.push(("roc.svg".to_string(), plot::roc_svg(&roc)));
        files.push(("pr.svg".to_string(), plot::pr_svg(&pr)));
    }

    let series: Vec<(String, Vec<(f64, f64)>)> = report
        .models
        .iter()
        .map(|m| (m.name.clone(), m.timeline.iter().map(|p| (p.day as f64, p.score)).collect()))
        .collect();
    let windows: Vec<(f64, f64)> = report
        .crash_windows
        .iter()
        .map(|w| (w.start_day as f64, w.end_day as f64))
        .collect();
    let mut x_labels = Vec::new();
    if let Some(tl) = report.models.first().map(|m| &m.timeline).filter(|t| !t.is_empty()) {
        let step = (tl.len() / 4).max(1);
        for p in tl.iter().step_by(step) {
            x_labels.push((p.day as f64, p.date.clone()));
        }
    }
    files.push((
        "timeline.svg".to_string(),
        plot::timeline_svg(
            &format!("{crisis}: warning scores"),
            "Score",
            &series,
            &windows,
            Some(report.threshold),
            &x_labels,
            (0.0, 1.0),
        ),
    ));

    if let Some(m) = lead_model(report) {
        files.push((
            "lead_times.svg".to_string(),
            plot::histogram_svg(
                &format!("{}: warning lead times", m.name),
                "Trading days before onset",
                &m.lead_times.days,
                10,
            ),
        ));
    }

    match report.models.iter().find_map(|m| m.importance.as_ref()) {
        Some(imp) => {
            let items: Vec<(String, f64)> = imp.iter().map(|(k, v)| (k.clone(), *v)).collect();
            files.push((
                "feature_importance.svg".to_string(),
                plot::bar_chart_svg("Random forest feature importance", "Mean impurity decrease", &items),
            ));
        }
        None => notes.push("Feature importance omitted: no random forest in this run.".into()),
    }

    let mut md = format!("# {crisis} results\n\n");
    let _ = writeln!(md, "Config hash `{config_hash}`, seed {seed}, threshold {}.", report.threshold);
    let _ = writeln!(md, "Test period {} to {}.\n", report.test_period.0, report.test_period.1);
    md.push_str(&metrics_table(report, crisis));
    md.push_str("\n## Confusion counts\n\n");
    md.push_str(&confusion_table(report));
    md.push_str("\n## Lead times\n\n| Model | Matched warnings | Median lead (days) | In window | Unmatched |\n|---|---|---|---|---|\n");
    for m in &report.models {
        let lt = &m.lead_times;
        let median = if lt.days.is_empty() {
            "--".to_string()
        } else {
            let mut d = lt.days.clone();
            d.sort_unstable();
            let k = d.len();
            let med = if k % 2 == 1 { d[k / 2] as f64 } else { (d[k / 2 - 1] + d[k / 2]) as f64 / 2.0 };
            format!("{med:.1}")
        };
        let _ = writeln!(md, "| {} | {} | {median} | {} | {} |", m.name, lt.days.len(), lt.in_window, lt.unmatched);
    }
    md.push_str("\n## Models\n\n| Model | Parameters | Training samples |\n|---|---|---|\n");
    for m in &report.models {
        let _ = writeln!(md, "| {} | {} | {} |", m.name, m.parameter_count, m.n_train);
    }
    if !notes.is_empty() {
        md.push_str("\n## Notes\n\n");
        for n in &notes {
            let _ = writeln!(md, "- {n}");
        }
    }

    let mut out: Vec<(String, String)> = files
        .into_iter()
        .map(|(name, svg)| (name, stamp(svg, config_hash, seed)))
        .collect();
    out.insert(0, ("summary.md".to_string(), md));
    out
}
