//! Node features, forward-drawdown labels and train-range standardisation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::market_data::{PricePanel, ReturnPanel};
use crate::{Error, Result};

pub const N_BASE_FEATURES: usize = 7;

/// Rolling window lengths, in trading days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub vol_short: usize,
    pub vol_long: usize,
    pub dd_short: usize,
    pub dd_long: usize,
    pub mom_short: usize,
    pub mom_long: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            vol_short: 20,
            vol_long: 60,
            dd_short: 20,
            dd_long: 60,
            mom_short: 10,
            mom_long: 30,
        }
    }
}

impl FeatureConfig {
    pub fn names(&self) -> Vec<String> {
        vec![
            "ret_1d".to_string(),
            format!("vol_{}", self.vol_short),
            format!("vol_{}", self.vol_long),
            format!("dd_{}", self.dd_short),
            format!("dd_{}", self.dd_long),
            format!("mom_{}", self.mom_short),
            format!("mom_{}", self.mom_long),
        ]
    }

    /// Index of the first price date at which every feature is defined.
    pub fn warmup(&self) -> usize {
        [
            1,
            self.vol_short,
            self.vol_long,
            self.dd_short.saturating_sub(1),
            self.dd_long.saturating_sub(1),
            self.mom_short,
            self.mom_long,
        ]
        .into_iter()
        .max()
        .unwrap_or(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vol_short < 2 || self.vol_long < 2 {
            return Err(Error::InvalidArgument("volatility windows must be >= 2".into()));
        }
        if self.dd_short < 1 || self.dd_long < 1 || self.mom_short < 1 || self.mom_long < 1 {
            return Err(Error::InvalidArgument("feature windows must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    /// Drawdown fraction, e.g. 0.10 for a 10% decline.
    pub threshold: f64,
    /// Look-ahead horizon in trading days.
    pub horizon: usize,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            threshold: 0.10,
            horizon: 60,
        }
    }
}

/// Graph-level context appended to every node's feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroOverlay {
    pub names: Vec<String>,
    /// `values[t][m]`, aligned with the feature panel's dates.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub train_start: String,
    pub train_end: String,
    pub warnings: Vec<String>,
}

impl StandardizationStats {
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("stats serialize");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("standardization stats: {e}")))
    }

    pub fn apply(&self, f: usize, value: f64) -> f64 {
        (value - self.mean[f]) / self.std[f]
    }
}

/// Per-node-per-day features and labels over the feature-valid calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePanel {
    pub tickers: Vec<String>,
    pub dates: Vec<String>,
    pub names: Vec<String>,
    /// Flat `[node][date][feature]` storage.
    values: Vec<f64>,
    pub macro_overlay: Option<MacroOverlay>,
    pub node_labels: Vec<Vec<Option<bool>>>,
    pub graph_labels: Vec<Option<bool>>,
    pub standardization: Option<StandardizationStats>,
}

impl FeaturePanel {
    pub fn n_nodes(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_base_features(&self) -> usize {
        self.names.len()
    }

    /// Width of the node feature vector fed to models (base + macro).
    pub fn width(&self) -> usize {
        self.names.len() + self.macro_overlay.as_ref().map_or(0, |m| m.names.len())
    }

    pub fn all_names(&self) -> Vec<String> {
        let mut n = self.names.clone();
        if let Some(m) = &self.macro_overlay {
            n.extend(m.names.iter().cloned());
        }
        n
    }

    #[inline]
    pub fn get(&self, node: usize, t: usize, f: usize) -> f64 {
        self.values[(node * self.dates.len() + t) * self.names.len() + f]
    }

    fn set(&mut self, node: usize, t: usize, f: usize, v: f64) {
        let idx = (node * self.dates.len() + t) * self.names.len() + f;
        self.values[idx] = v;
    }

    pub fn date_index(&self, date: &str) -> Option<usize> {
        self.dates.binary_search_by(|d| d.as_str().cmp(date)).ok()
    }

    /// `N × width` rows for one date, macro values appended to each node.
    pub fn node_rows(&self, t: usize) -> Vec<Vec<f64>> {
        (0..self.n_nodes())
            .map(|i| {
                let mut row: Vec<f64> = (0..self.names.len()).map(|f| self.get(i, t, f)).collect();
                if let Some(m) = &self.macro_overlay {
                    row.extend_from_slice(&m.values[t]);
                }
                row
            })
            .collect()
    }

    pub fn with_macro(mut self, overlay: MacroOverlay) -> Result<Self> {
        if overlay.values.len() != self.dates.len() || overlay.values.iter().any(|r| r.len() != overlay.names.len()) {
            return Err(Error::Data("macro overlay does not match the feature calendar".into()));
        }
        self.macro_overlay = Some(overlay);
        Ok(self)
    }

    /// Attaches labels computed over the full price calendar.
    pub fn with_labels(mut self, labels: &Labels, prices: &PricePanel) -> Result<Self> {
        let mut node = vec![Vec::with_capacity(self.n_dates()); self.n_nodes()];
        let mut graph = Vec::with_capacity(self.n_dates());
        for date in &self.dates {
            let t = prices
                .dates()
                .binary_search(date)
                .map_err(|_| Error::Data(format!("feature date {date} not in price panel")))?;
            for (i, row) in node.iter_mut().enumerate() {
                row.push(labels.node[i][t]);
            }
            graph.push(labels.graph[t]);
        }
        self.node_labels = node;
        self.graph_labels = graph;
        Ok(self)
    }

    /// Date indices that carry a graph label.
    pub fn labeled_dates(&self) -> Vec<usize> {
        (0..self.n_dates()).filter(|&t| self.graph_labels[t].is_some()).collect()
    }

    pub fn features_csv(&self) -> String {
        let mut out = String::from("date,ticker");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push_str(",node_label\n");
        for t in 0..self.n_dates() {
            for i in 0..self.n_nodes() {
                let _ = write!(out, "{},{}", self.dates[t], self.tickers[i]);
                for f in 0..self.names.len() {
                    let _ = write!(out, ",{}", self.get(i, t, f));
                }
                match self.node_labels.get(i).and_then(|r| r[t]) {
                    Some(l) => {
                        let _ = writeln!(out, ",{}", l as u8);
                    }
                    None => out.push_str(",\n"),
                }
            }
        }
        out
    }

    pub fn graph_labels_csv(&self) -> String {
        let mut out = String::from("date,graph_label\n");
        for (d, l) in self.dates.iter().zip(&self.graph_labels) {
            match l {
                Some(l) => {
                    let _ = writeln!(out, "{d},{}", *l as u8);
                }
                None => {
                    let _ = writeln!(out, "{d},");
                }
            }
        }
        out
    }

    pub fn macro_csv(&self) -> Option<String> {
        let m = self.macro_overlay.as_ref()?;
        let mut out = format!("date,{}\n", m.names.join(","));
        for (d, row) in self.dates.iter().zip(&m.values) {
            out.push_str(d);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        Some(out)
    }

    /// Inverse of [`features_csv`](Self::features_csv) +
    /// [`graph_labels_csv`](Self::graph_labels_csv).
    pub fn from_csv(features: &str, graph_labels: &str) -> Result<Self> {
        let fmt = |line: usize, msg: &str| Error::Format(format!("features csv line {line}: {msg}"));
        let mut lines = features.lines();
        let header: Vec<&str> = lines.next().ok_or_else(|| fmt(1, "empty"))?.split(',').collect();
        if header.len() < 4 || header[0] != "date" || header[1] != "ticker" || header[header.len() - 1] != "node_label" {
            return Err(fmt(1, "unexpected header"));
        }
        let names: Vec<String> = header[2..header.len() - 1].iter().map(|s| s.to_string()).collect();
        let mut dates: Vec<String> = Vec::new();
        let mut tickers: Vec<String> = Vec::new();
        let mut rows: Vec<(Vec<f64>, Option<bool>)> = Vec::new();
        for (k, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != header.len() {
                return Err(fmt(k + 2, "wrong field count"));
            }
            if dates.last().map(String::as_str) != Some(cols[0]) {
                dates.push(cols[0].to_string());
            }
            if dates.len() == 1 {
                tickers.push(cols[1].to_string());
            } else if tickers.get(rows.len() % tickers.len().max(1)).map(String::as_str) != Some(cols[1]) {
                return Err(fmt(k + 2, "ticker order differs between dates"));
            }
            let vals = cols[2..cols.len() - 1]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| fmt(k + 2, "bad number")))
                .collect::<Result<Vec<f64>>>()?;
            let label = match *cols.last().unwrap() {
                "" => None,
                "0" => Some(false),
                "1" => Some(true),
                _ => return Err(fmt(k + 2, "bad label")),
            };
            rows.push((vals, label));
        }
        let (n, tf, f) = (tickers.len(), dates.len(), names.len());
        if n == 0 || rows.len() != n * tf {
            return Err(fmt(0, "panel is not rectangular"));
        }
        let mut panel = FeaturePanel {
            tickers,
            dates,
            names,
            values: vec![0.0; n * tf * f],
            macro_overlay: None,
            node_labels: vec![vec![None; tf]; n],
            graph_labels: vec![None; tf],
            standardization: None,
        };
        for (k, (vals, label)) in rows.into_iter().enumerate() {
            let (t, i) = (k / n, k % n);
            for (j, v) in vals.into_iter().enumerate() {
                panel.set(i, t, j, v);
            }
            panel.node_labels[i][t] = label;
        }
        let mut g = graph_labels.lines();
        if g.next() != Some("date,graph_label") {
            return Err(Error::Format("graph labels csv: unexpected header".into()));
        }
        for (t, line) in g.enumerate() {
            let (d, l) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("graph labels csv line {}", t + 2)))?;
            if panel.dates.get(t).map(String::as_str) != Some(d) {
                return Err(Error::Format(format!("graph labels csv: date {d} out of step")));
            }
            panel.graph_labels[t] = match l {
                "" => None,
                "0" => Some(false),
                "1" => Some(true),
                _ => return Err(Error::Format(format!("graph labels csv: bad label {l:?}"))),
            };
        }
        Ok(panel)
    }
}

/// Parses a `date,<name>...` macro file and aligns it to `dates`.
pub fn read_macro_csv(text: &str, dates: &[String]) -> Result<MacroOverlay> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Format("macro csv is empty".into()))?
        .split(',')
        .collect();
    if header.first() != Some(&"date") || header.len() < 2 {
        return Err(Error::Format("macro csv header must start with date".into()));
    }
    let mut by_date: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (k, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != header.len() {
            return Err(Error::Format(format!("macro csv line {}: wrong field count", k + 2)));
        }
        let vals = cols[1..]
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|_| Error::Format(format!("macro csv line {}: bad number", k + 2)))?;
        by_date.insert(cols[0], vals);
    }
    let values = dates
        .iter()
        .map(|d| {
            by_date
                .get(d.as_str())
                .cloned()
                .ok_or_else(|| Error::Data(format!("macro csv has no row for {d}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MacroOverlay {
        names: header[1..].iter().map(|s| s.to_string()).collect(),
        values,
    })
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Seven rolling features for every node on every feature-valid date.
/// Features at `t` read prices at dates `<= t` only.
pub fn compute_features(returns: &ReturnPanel, prices: &PricePanel, cfg: &FeatureConfig) -> Result<FeaturePanel> {
    cfg.validate()?;
    let warmup = cfg.warmup();
    let t_total = prices.n_dates();
    if t_total <= warmup {
        return Err(Error::Data(format!(
            "features need at least {} price dates, panel has {t_total}",
            warmup + 1
        )));
    }
    if returns.tickers != prices.tickers() || returns.dates.len() + 1 != t_total {
        return Err(Error::Data("return panel does not match price panel".into()));
    }
    let n = prices.n_tickers();
    let tf = t_total - warmup;
    let names = cfg.names();
    let mut panel = FeaturePanel {
        tickers: prices.tickers().to_vec(),
        dates: prices.dates()[warmup..].to_vec(),
        names,
        values: vec![0.0; n * tf * N_BASE_FEATURES],
        macro_overlay: None,
        node_labels: vec![vec![None; tf]; n],
        graph_labels: vec![None; tf],
        standardization: None,
    };
    for i in 0..n {
        let p = prices.series(i);
        // r[t-1] is the return into price date t
        let r = &returns.returns[i];
        for (k, t) in (warmup..t_total).enumerate() {
            let rolling_max = |w: usize| p[t + 1 - w..=t].iter().copied().fold(f64::MIN, f64::max);
            let vals = [
                r[t - 1],
                sample_std(&r[t - cfg.vol_short..t]),
                sample_std(&r[t - cfg.vol_long..t]),
                p[t] / rolling_max(cfg.dd_short) - 1.0,
                p[t] / rolling_max(cfg.dd_long) - 1.0,
                p[t] / p[t - cfg.mom_short] - 1.0,
                p[t] / p[t - cfg.mom_long] - 1.0,
            ];
            for (f, v) in vals.into_iter().enumerate() {
                panel.set(i, k, f, v);
            }
        }
    }
    Ok(panel)
}

/// Forward-drawdown labels over the full price calendar. `None` marks dates
/// with fewer than `horizon` future observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Labels {
    pub node: Vec<Vec<Option<bool>>>,
    pub graph: Vec<Option<bool>>,
}

/// Label at `t` is 1 iff the price ratio to `p[t]` falls to `1 - threshold`
/// or below at some `t + h`, `h` in `1..=horizon`.
pub fn compute_labels(prices: &PricePanel, cfg: &LabelConfig) -> Result<Labels> {
    if cfg.horizon < 1 {
        return Err(Error::InvalidArgument("label horizon must be >= 1".into()));
    }
    if !(cfg.threshold > 0.0 && cfg.threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "label threshold must lie in (0, 1), got {}",
            cfg.threshold
        )));
    }
    let t_total = prices.n_dates();
    if t_total <= cfg.horizon {
        return Err(Error::Data(format!(
            "horizon {} leaves no labeled dates in a {t_total}-date panel",
            cfg.horizon
        )));
    }
    let floor = 1.0 - cfg.threshold;
    let n = prices.n_tickers();
    let last_labeled = t_total - 1 - cfg.horizon;
    let node = (0..n)
        .map(|i| {
            let p = prices.series(i);
            (0..t_total)
                .map(|t| {
                    (t <= last_labeled).then(|| {
                        let worst = p[t + 1..=t + cfg.horizon].iter().copied().fold(f64::MAX, f64::min);
                        worst / p[t] <= floor
                    })
                })
                .collect()
        })
        .collect();
    let graph = (0..t_total)
        .map(|t| {
            (t <= last_labeled).then(|| {
                (t + 1..=t + cfg.horizon).any(|s| {
                    let v: f64 = (0..n).map(|i| prices.series(i)[s] / prices.series(i)[t]).sum::<f64>() / n as f64;
                    v <= floor
                })
            })
        })
        .collect();
    Ok(Labels { node, graph })
}

/// Z-scores every feature column using (node, date) cells in `train` only.
/// Zero-variance columns are left unchanged and reported as warnings.
pub fn standardize(panel: &FeaturePanel, train: Range<usize>) -> Result<FeaturePanel> {
    if train.is_empty() || train.end > panel.n_dates() {
        return Err(Error::InvalidArgument(format!(
            "training range {train:?} is empty or outside the {}-date panel",
            panel.n_dates()
        )));
    }
    let names = panel.all_names();
    let nb = panel.n_base_features();
    let mut mean = vec![0.0; names.len()];
    let mut std = vec![1.0; names.len()];
    let mut warnings = Vec::new();
    for (f, name) in names.iter().enumerate() {
        let cells: Vec<f64> = if f < nb {
            (0..panel.n_nodes())
                .flat_map(|i| train.clone().map(move |t| (i, t)))
                .map(|(i, t)| panel.get(i, t, f))
                .collect()
        } else {
            let m = panel.macro_overlay.as_ref().expect("macro column implies overlay");
            train.clone().map(|t| m.values[t][f - nb]).collect()
        };
        let mu = cells.iter().sum::<f64>() / cells.len() as f64;
        let var = cells.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / cells.len() as f64;
        let sd = var.sqrt();
        if sd > 1e-12 {
            mean[f] = mu;
            std[f] = sd;
        } else {
            warnings.push(format!("feature {name} has zero variance on the training range; left unscaled"));
        }
    }
    let stats = StandardizationStats {
        names,
        mean,
        std,
        train_start: panel.dates[train.start].clone(),
        train_end: panel.dates[train.end - 1].clone(),
        warnings,
    };
    apply_standardization(panel, stats)
}

/// Applies previously fitted statistics (e.g. loaded from disk).
pub fn apply_standardization(panel: &FeaturePanel, stats: StandardizationStats) -> Result<FeaturePanel> {
    if stats.names != panel.all_names() {
        return Err(Error::Data("standardization stats do not match panel features".into()));
    }
    let mut out = panel.clone();
    let nb = panel.n_base_features();
    for i in 0..panel.n_nodes() {
        for t in 0..panel.n_dates() {
            for f in 0..nb {
                out.set(i, t, f, stats.apply(f, panel.get(i, t, f)));
            }
        }
    }
    if let Some(m) = out.macro_overlay.as_mut() {
        for row in &mut m.values {
            for (j, v) in row.iter_mut().enumerate() {
                *v = stats.apply(nb + j, *v);
            }
        }
    }
    out.standardization = Some(stats);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::log_returns;
    use proptest::prelude::*;

    fn dates(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i:05}")).collect()
    }

    fn panel(series: Vec<Vec<f64>>) -> PricePanel {
        let t = series[0].len();
        let tickers = (0..series.len()).map(|i| format!("T{i}")).collect();
        PricePanel::new(tickers, dates(t), series).unwrap()
    }

    fn features_of(p: &PricePanel) -> FeaturePanel {
        compute_features(&log_returns(p).unwrap(), p, &FeatureConfig::default()).unwrap()
    }

    #[test]
    fn warmup_is_sixty_days() {
        let p = panel(vec![(0..61).map(|t| 100.0 + t as f64).collect()]);
        let f = features_of(&p);
        assert_eq!(f.n_dates(), 1);
        assert_eq!(f.dates[0], "d00060");
        let short = panel(vec![vec![100.0; 60]]);
        assert!(compute_features(&log_returns(&short).unwrap(), &short, &FeatureConfig::default()).is_err());
    }

    #[test]
    fn increasing_prices_have_no_drawdown() {
        let p = panel(vec![(0..120).map(|t| 50.0 * 1.01f64.powi(t)).collect()]);
        let f = features_of(&p);
        for t in 0..f.n_dates() {
            assert_eq!(f.get(0, t, 3), 0.0);
            assert_eq!(f.get(0, t, 4), 0.0);
        }
    }

    #[test]
    fn constant_prices_are_degenerate() {
        let p = panel(vec![vec![42.0; 90]]);
        let f = features_of(&p);
        for t in 0..f.n_dates() {
            for feat in [1, 2, 5, 6] {
                assert_eq!(f.get(0, t, feat), 0.0);
            }
        }
    }

    #[test]
    fn drawdown_from_peak_inside_window() {
        let mut s = vec![80.0; 70];
        s[60] = 100.0;
        s[69] = 90.0;
        let p = panel(vec![s.clone()]);
        let f = features_of(&p);
        let t = f.date_index("d00069").unwrap();
        // brute-force rolling max
        for (feat, w) in [(3usize, 20usize), (4, 60)] {
            let peak = s[69 + 1 - w..=69].iter().copied().fold(f64::MIN, f64::max);
            assert_eq!(peak, 100.0);
            assert!((f.get(0, t, feat) - (-0.10)).abs() < 1e-12);
        }
    }

    #[test]
    fn volatility_and_momentum_definitions() {
        let s: Vec<f64> = (0..80).map(|t| 100.0 + ((t * 7) % 5) as f64).collect();
        let p = panel(vec![s.clone()]);
        let f = features_of(&p);
        let t = 79;
        let k = f.date_index("d00079").unwrap();
        let rets: Vec<f64> = (t - 19..=t).map(|u| (s[u] / s[u - 1]).ln()).collect();
        let m = rets.iter().sum::<f64>() / 20.0;
        let sd = (rets.iter().map(|r| (r - m).powi(2)).sum::<f64>() / 19.0).sqrt();
        assert!((f.get(0, k, 1) - sd).abs() < 1e-15);
        assert_eq!(f.get(0, k, 5), s[t] / s[t - 10] - 1.0);
        assert_eq!(f.get(0, k, 0), (s[t] / s[t - 1]).ln());
    }

    #[test]
    fn label_examples() {
        let cfg = LabelConfig { threshold: 0.10, horizon: 60 };
        let up = panel(vec![(0..100).map(|t| 100.0 + t as f64).collect()]);
        let l = compute_labels(&up, &cfg).unwrap();
        assert_eq!(l.node[0][0], Some(false));
        assert_eq!(l.graph[0], Some(false));
        assert_eq!(l.node[0][39], Some(false));
        assert_eq!(l.node[0][40], None);

        let mut s = vec![100.0; 70];
        s[1] = 85.0;
        let l = compute_labels(&panel(vec![s]), &cfg).unwrap();
        assert_eq!(l.node[0][0], Some(true));

        assert!(compute_labels(&panel(vec![vec![1.0; 60]]), &cfg).is_err());
        assert!(compute_labels(&up, &LabelConfig { threshold: 0.0, horizon: 5 }).is_err());
        assert!(compute_labels(&up, &LabelConfig { threshold: 0.1, horizon: 0 }).is_err());
    }

    #[test]
    fn label_boundary_is_inclusive() {
        let mut s = vec![100.0; 61];
        s[60] = 90.0;
        let p = panel(vec![s.clone()]);
        let cfg = LabelConfig { threshold: 0.10, horizon: 60 };
        let l = compute_labels(&p, &cfg).unwrap();
        // exhaustive scan oracle
        let hit = (1..=60).any(|h| s[h] / s[0] <= 1.0 - 0.10);
        assert!(hit);
        assert_eq!(l.node[0][0], Some(true));
        assert_eq!(l.graph[0], Some(true));
        let l59 = compute_labels(&p, &LabelConfig { threshold: 0.10, horizon: 59 }).unwrap();
        assert_eq!(l59.node[0][0], Some(false));
    }

    #[test]
    fn graph_label_uses_equal_weight_portfolio() {
        // one name crashes 30%, the other rises 20%: portfolio -5%
        let a: Vec<f64> = (0..10).map(|t| if t >= 5 { 70.0 } else { 100.0 }).collect();
        let b: Vec<f64> = (0..10).map(|t| if t >= 5 { 120.0 } else { 100.0 }).collect();
        let l = compute_labels(&panel(vec![a, b]), &LabelConfig { threshold: 0.10, horizon: 5 }).unwrap();
        assert_eq!(l.node[0][0], Some(true));
        assert_eq!(l.node[1][0], Some(false));
        assert_eq!(l.graph[0], Some(false));
    }

    fn tiny_panel(values: &[f64]) -> FeaturePanel {
        FeaturePanel {
            tickers: vec!["A".into()],
            dates: dates(values.len()),
            names: vec!["x".into()],
            values: values.to_vec(),
            macro_overlay: None,
            node_labels: vec![vec![None; values.len()]],
            graph_labels: vec![None; values.len()],
            standardization: None,
        }
    }

    #[test]
    fn standardize_examples() {
        let p = tiny_panel(&[0.0, 2.0, 1.0, 5.0]);
        let s = standardize(&p, 0..2).unwrap();
        assert_eq!(s.get(0, 0, 0), -1.0);
        assert_eq!(s.get(0, 1, 0), 1.0);
        // test cell at the training mean
        assert_eq!(s.get(0, 2, 0), 0.0);
        assert_eq!(s.get(0, 3, 0), 4.0);

        let c = tiny_panel(&[3.0, 3.0, 3.0]);
        let s = standardize(&c, 0..3).unwrap();
        assert_eq!(s.get(0, 1, 0), 3.0);
        assert_eq!(s.standardization.unwrap().warnings.len(), 1);

        assert!(standardize(&c, 1..1).is_err());
    }

    #[test]
    fn standardized_training_cells_are_unit_scaled() {
        let mut rng = crate::tensor::SeededRng::new(9);
        let n = 5;
        let series: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut p = vec![100.0];
                for _ in 0..150 {
                    let last = *p.last().unwrap();
                    p.push(last * (0.02 * rng.normal()).exp());
                }
                p
            })
            .collect();
        let f = features_of(&panel(series));
        let s = standardize(&f, 0..60).unwrap();
        for feat in 0..7 {
            let cells: Vec<f64> = (0..n).flat_map(|i| (0..60).map(move |t| (i, t))).map(|(i, t)| s.get(i, t, feat)).collect();
            let mu = cells.iter().sum::<f64>() / cells.len() as f64;
            let sd = (cells.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / cells.len() as f64).sqrt();
            assert!(mu.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut rng = crate::tensor::SeededRng::new(4);
        let series: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..140).map(|_| 50.0 + rng.uniform(0.0, 10.0)).collect())
            .collect();
        let p = panel(series);
        let f = features_of(&p)
            .with_labels(&compute_labels(&p, &LabelConfig { threshold: 0.1, horizon: 20 }).unwrap(), &p)
            .unwrap();
        let back = FeaturePanel::from_csv(&f.features_csv(), &f.graph_labels_csv()).unwrap();
        assert_eq!(back, f);
    }

    fn random_walk(seed: u64, n: usize, t: usize) -> Vec<Vec<f64>> {
        let mut rng = crate::tensor::SeededRng::new(seed);
        (0..n)
            .map(|_| {
                let mut p = vec![100.0];
                for _ in 1..t {
                    let last = *p.last().unwrap();
                    p.push(last * (0.03 * rng.normal()).exp());
                }
                p
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn features_ignore_the_future(seed in 0u64..1000, cut in 61usize..150) {
            let p = panel(random_walk(seed, 3, 150));
            let full = features_of(&p);
            let trunc = features_of(&p.truncate(cut));
            for t in 0..trunc.n_dates() {
                for i in 0..3 {
                    for f in 0..7 {
                        prop_assert_eq!(full.get(i, t, f).to_bits(), trunc.get(i, t, f).to_bits());
                    }
                }
            }
        }

        #[test]
        fn feature_ranges(seed in 0u64..1000) {
            let f = features_of(&panel(random_walk(seed, 2, 120)));
            for i in 0..2 {
                for t in 0..f.n_dates() {
                    prop_assert!(f.get(i, t, 1) >= 0.0 && f.get(i, t, 2) >= 0.0);
                    for d in [3, 4] {
                        let v = f.get(i, t, d);
                        prop_assert!((-1.0..=0.0).contains(&v));
                    }
                }
            }
        }

        #[test]
        fn labels_ignore_past_and_far_future(seed in 0u64..1000, t in 5usize..40, scale in 0.5f64..2.0) {
            let horizon = 20;
            let base = random_walk(seed, 2, 100);
            let cfg = LabelConfig { threshold: 0.1, horizon };
            let l0 = compute_labels(&panel(base.clone()), &cfg).unwrap();
            let mut perturbed = base.clone();
            for row in &mut perturbed {
                for (s, v) in row.iter_mut().enumerate() {
                    if s < t || s > t + horizon {
                        *v *= scale;
                    }
                }
            }
            let l1 = compute_labels(&panel(perturbed), &cfg).unwrap();
            prop_assert_eq!(l0.node[0][t], l1.node[0][t]);
            prop_assert_eq!(l0.node[1][t], l1.node[1][t]);
        }

        #[test]
        fn raising_threshold_never_adds_labels(seed in 0u64..1000, lo in 0.02f64..0.2, bump in 0.0f64..0.2) {
            let p = panel(random_walk(seed, 3, 90));
            let a = compute_labels(&p, &LabelConfig { threshold: lo, horizon: 15 }).unwrap();
            let b = compute_labels(&p, &LabelConfig { threshold: lo + bump, horizon: 15 }).unwrap();
            for t in 0..90 {
                if a.graph[t] == Some(false) {
                    prop_assert_eq!(b.graph[t], Some(false));
                }
                for i in 0..3 {
                    if a.node[i][t] == Some(false) {
                        prop_assert_eq!(b.node[i][t], Some(false));
                    }
                }
            }
        }
    }
}
