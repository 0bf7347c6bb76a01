use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn at_threshold(scores: &[f64], labels: &[bool], threshold: f64) -> Self {
        let mut c = Confusion::default();
        for (&s, &y) in scores.iter().zip(labels) {
            match (s > threshold, y) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Threshold and ranking metrics. Optional fields are `None` exactly when
/// their denominator is zero (or, for the curve areas, one class is absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub threshold: f64,
    pub confusion: Confusion,
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
}

impl Metrics {
    /// Count-based metrics only; curve areas are left empty.
    pub fn from_confusion(c: Confusion, threshold: f64) -> Self {
        Metrics {
            n: c.total(),
            threshold,
            confusion: c,
            auroc: None,
            auprc: None,
            precision: ratio(c.tp, c.tp + c.fp),
            recall: ratio(c.tp, c.tp + c.fn_),
            accuracy: ratio(c.tp + c.tn, c.total()),
            fpr: ratio(c.fp, c.fp + c.tn),
            fnr: ratio(c.fn_, c.fn_ + c.tp),
        }
    }
}

fn check(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Shape {
            op: "metrics",
            left: (scores.len(), 1),
            right: (labels.len(), 1),
        });
    }
    if scores.is_empty() {
        return Err(Error::InvalidArgument("metrics need at least one sample".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("metric scores"));
    }
    Ok(())
}

pub fn compute_metrics(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Metrics> {
    check(scores, labels)?;
    let mut m = Metrics::from_confusion(Confusion::at_threshold(scores, labels, threshold), threshold);
    m.auroc = auroc(scores, labels);
    m.auprc = auprc(scores, labels);
    Ok(m)
}

/// Indices sorted by descending score, grouped into runs of equal scores.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Mann-Whitney statistic with midranks for ties.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 || scores.len() != labels.len() {
        return None;
    }
    // ascending ranks: walk the descending groups from the back
    let groups = tie_groups(scores);
    let mut rank_sum_pos = 0.0;
    let mut below = 0usize;
    for g in groups.iter().rev() {
        let mid = below as f64 + (g.len() as f64 + 1.0) / 2.0;
        rank_sum_pos += mid * g.iter().filter(|&&i| labels[i]).count() as f64;
        below += g.len();
    }
    let np = n_pos as f64;
    Some((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Brute force over all positive/negative pairs; ties count one half.
pub fn auroc_oracle(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check(scores, labels)?;
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &y)| y).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &y)| !y).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidArgument("AUROC needs both classes".into()));
    }
    let mut twice = 0u64;
    for p in &pos {
        for q in &neg {
            twice += if p > q {
                2
            } else if p == q {
                1
            } else {
                0
            };
        }
    }
    Ok(twice as f64 / 2.0 / (pos.len() * neg.len()) as f64)
}

/// Average precision: sum of recall increments times the precision reached
/// after each group of tied scores.
pub fn auprc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 || n_pos == labels.len() || scores.len() != labels.len() {
        return None;
    }
    let (mut tp, mut seen, mut area) = (0usize, 0usize, 0.0);
    for g in tie_groups(scores) {
        let gp = g.iter().filter(|&&i| labels[i]).count();
        tp += gp;
        seen += g.len();
        if gp > 0 {
            area += gp as f64 / n_pos as f64 * (tp as f64 / seen as f64);
        }
    }
    Some(area)
}

/// `(fpr, tpr)` vertices from `(0, 0)` to `(1, 1)`.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Option<Vec<(f64, f64)>> {
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0, 0);
    for g in tie_groups(scores) {
        let gp = g.iter().filter(|&&i| labels[i]).count();
        tp += gp;
        fp += g.len() - gp;
        pts.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    Some(pts)
}

/// `(recall, precision)` after each tie group.
pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Option<Vec<(f64, f64)>> {
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 || n_pos == labels.len() {
        return None;
    }
    let (mut tp, mut seen) = (0, 0);
    Some(
        tie_groups(scores)
            .into_iter()
            .map(|g| {
                tp += g.iter().filter(|&&i| labels[i]).count();
                seen += g.len();
                (tp as f64 / n_pos as f64, tp as f64 / seen as f64)
            })
            .collect(),
    )
}
