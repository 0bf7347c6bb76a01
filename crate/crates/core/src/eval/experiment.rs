//! End-to-end wiring shared by the CLI stages and the in-memory runner.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::lead_time::{crash_windows, lead_times, CrashWindow, LeadTimes, TimelinePoint};
use super::metrics::{compute_metrics, pr_curve, roc_curve, Metrics};
use super::split::{chronological_split, SplitPlan};
use super::train::{train_graph_model, GraphSample, TrainLog};
use crate::features::{compute_features, compute_labels, standardize, FeatureConfig, FeaturePanel, LabelConfig, MacroOverlay};
use crate::graph::{build_all_snapshots, sequence_positions, GraphConfig, GraphSnapshot};
use crate::hash::sha256_hex;
use crate::market_data::{log_returns, PricePanel};
use crate::models::{
    baseline_day_features, baseline_feature_names, baseline_feature_sources, forest_fit, logistic_fit, Model, ModelHyper,
    ModelKind, ModelState, PreparedGraph,
};
use crate::{Error, Result};

pub const REPORT_FORMAT: &str = "srr-report-v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub features: FeatureConfig,
    pub labels: LabelConfig,
    pub graph: GraphConfig,
    pub model: ModelHyper,
    pub split_ratio: f64,
    /// Warning / decision threshold γ.
    pub threshold: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            features: FeatureConfig::default(),
            labels: LabelConfig::default(),
            graph: GraphConfig::default(),
            model: ModelHyper::default(),
            split_ratio: 0.8,
            threshold: 0.5,
            seed: 42,
        }
    }
}

/// Splits the full price calendar, then re-indexes onto the feature panel
/// (which starts after the warm-up).
pub fn feature_split(n_price_dates: usize, cfg: &ExperimentConfig) -> Result<SplitPlan> {
    chronological_split(n_price_dates, cfg.split_ratio, cfg.labels.horizon)?.shifted(cfg.features.warmup())
}

/// Raw (unstandardized) labelled features for a price panel.
pub fn build_features(prices: &PricePanel, cfg: &ExperimentConfig, macro_overlay: Option<MacroOverlay>) -> Result<FeaturePanel> {
    let returns = log_returns(prices)?;
    let labels = compute_labels(prices, &cfg.labels)?;
    let mut panel = compute_features(&returns, prices, &cfg.features)?.with_labels(&labels, prices)?;
    if let Some(m) = macro_overlay {
        panel = panel.with_macro(m)?;
    }
    Ok(panel)
}

/// Standardized panel, its graphs and the split, ready for training.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub panel: FeaturePanel,
    pub snapshots: Vec<GraphSnapshot>,
    pub graphs: Vec<PreparedGraph>,
    pub plan: SplitPlan,
    pub graph_config: GraphConfig,
}

impl Dataset {
    pub fn new(panel: FeaturePanel, snapshots: Vec<GraphSnapshot>, plan: SplitPlan, graph_config: GraphConfig) -> Result<Self> {
        if panel.standardization.is_none() {
            return Err(Error::InvalidArgument("dataset panel must be standardized".into()));
        }
        if snapshots.len() != panel.n_dates() {
            return Err(Error::Data(format!(
                "{} graph snapshots for {} feature dates",
                snapshots.len(),
                panel.n_dates()
            )));
        }
        if plan.test.end > panel.n_dates() {
            return Err(Error::Data("split plan exceeds the feature panel".into()));
        }
        let use_sector = graph_config.sector_layer;
        let graphs = snapshots
            .iter()
            .map(|s| PreparedGraph::from_snapshot(s, use_sector, graph_config.weighted))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            panel,
            snapshots,
            graphs,
            plan,
            graph_config,
        })
    }

    /// Whole pipeline in memory: features, train-fitted standardization,
    /// graphs.
    pub fn from_prices(
        prices: &PricePanel,
        cfg: &ExperimentConfig,
        macro_overlay: Option<MacroOverlay>,
        sector_map: Option<&BTreeMap<String, String>>,
    ) -> Result<Self> {
        let raw = build_features(prices, cfg, macro_overlay)?;
        let plan = feature_split(prices.n_dates(), cfg)?;
        let panel = standardize(&raw, plan.train.clone())?;
        let returns = log_returns(prices)?;
        let sectors = if cfg.graph.sector_layer { sector_map } else { None };
        if cfg.graph.sector_layer && sectors.is_none() {
            return Err(Error::InvalidArgument("sector layer enabled without a universe sector map".into()));
        }
        let snapshots = build_all_snapshots(&returns, &panel, &cfg.graph, sectors)?;
        Dataset::new(panel, snapshots, plan, cfg.graph)
    }

    pub fn standardization_ref(&self) -> Option<String> {
        self.panel.standardization.as_ref().map(|s| sha256_hex(s.to_text().as_bytes()))
    }

    /// Sequences of `k` sampled graphs whose last date lies in `range`.
    /// `(end date index, sample)`; unlabelled ends get target `NaN` and are
    /// kept only when `labelled_only` is false.
    pub fn graph_samples(&self, range: Range<usize>, k: usize, labelled_only: bool) -> Result<Vec<(usize, GraphSample)>> {
        Ok(sequence_positions(range, k, self.graph_config.stride)?
            .into_iter()
            .filter_map(|pos| {
                let end = *pos.last().expect("k >= 1");
                let target = match self.panel.graph_labels[end] {
                    Some(y) => y as u8 as f64,
                    None if labelled_only => return None,
                    None => f64::NAN,
                };
                Some((end, GraphSample { graphs: pos, target }))
            })
            .collect())
    }

    /// Day-level baseline rows for every date in `range`.
    pub fn day_samples(&self, range: Range<usize>, labelled_only: bool) -> Result<Vec<(usize, Vec<f64>, Option<bool>)>> {
        range
            .filter(|&t| !labelled_only || self.panel.graph_labels[t].is_some())
            .map(|t| Ok((t, baseline_day_features(&self.panel, t)?, self.panel.graph_labels[t])))
            .collect()
    }

    pub fn crash_windows(&self, range: Range<usize>) -> Vec<CrashWindow> {
        let days: Vec<(usize, String, Option<bool>)> = range
            .map(|t| (t, self.panel.dates[t].clone(), self.panel.graph_labels[t]))
            .collect();
        crash_windows(&days)
    }

    fn seq_len(&self, kind: ModelKind, hyper: &ModelHyper) -> usize {
        if kind == ModelKind::TemporalGcn {
            hyper.seq_len
        } else {
            1
        }
    }
}

/// Fits one model family on the training range.
pub fn train_kind(kind: ModelKind, data: &Dataset, cfg: &ExperimentConfig) -> Result<(ModelState, TrainLog)> {
    let hyper = cfg.model;
    let (model, log, feature_names) = if kind.is_graph() {
        let samples: Vec<GraphSample> = data
            .graph_samples(data.plan.train.clone(), data.seq_len(kind, &hyper), true)?
            .into_iter()
            .map(|(_, s)| s)
            .collect();
        let init = Model::init(kind, data.panel.width(), &hyper, cfg.seed);
        let (model, log) = match init {
            Model::Snapshot(m) => {
                let (m, log) = train_graph_model(m, &data.graphs, &samples, &hyper, cfg.seed)?;
                (Model::Snapshot(m), log)
            }
            Model::Temporal(m) => {
                let (m, log) = train_graph_model(m, &data.graphs, &samples, &hyper, cfg.seed)?;
                (Model::Temporal(m), log)
            }
            _ => unreachable!("graph kinds only"),
        };
        (model, log, data.panel.all_names())
    } else {
        let rows = data.day_samples(data.plan.train.clone(), true)?;
        let xs: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.2.expect("labelled") as u8 as f64).collect();
        let (model, log) = match kind {
            ModelKind::Logistic => {
                let (m, losses) = logistic_fit(&xs, &y, &hyper.logistic)?;
                let best_epoch = losses.len() - 1;
                (
                    Model::Logistic(m),
                    TrainLog {
                        epoch_losses: losses,
                        best_epoch,
                    },
                )
            }
            _ => (Model::Forest(forest_fit(&xs, &y, &hyper.forest, cfg.seed)?), TrainLog::default()),
        };
        (model, log, baseline_feature_names(&data.panel))
    };
    Ok((
        ModelState {
            model,
            seed: cfg.seed,
            hyper,
            feature_names,
            standardization_ref: data.standardization_ref(),
        },
        log,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub kind: ModelKind,
    pub name: String,
    pub parameter_count: usize,
    pub seed: u64,
    pub n_train: usize,
    /// Metrics over labelled test points; `None` if there are none.
    pub metrics: Option<Metrics>,
    pub timeline: Vec<TimelinePoint>,
    pub lead_times: LeadTimes,
    pub roc: Option<Vec<(f64, f64)>>,
    pub pr: Option<Vec<(f64, f64)>>,
    /// Forest only: normalised impurity decrease per base feature.
    pub importance: Option<BTreeMap<String, f64>>,
    pub train_log: Option<TrainLog>,
}

/// Scores the test range and assembles metrics, curves and lead times.
pub fn evaluate_state(state: &ModelState, data: &Dataset, cfg: &ExperimentConfig) -> Result<ModelReport> {
    let kind = state.kind();
    let test = data.plan.test.clone();
    let expected_width = if kind.is_graph() {
        data.panel.width()
    } else {
        baseline_feature_names(&data.panel).len()
    };
    if state.feature_names.len() != expected_width {
        return Err(Error::Data(format!(
            "{kind} model expects {} inputs, data provides {expected_width}",
            state.feature_names.len()
        )));
    }
    let (n_train, timeline) = if kind.is_graph() {
        let k = data.seq_len(kind, &state.hyper);
        let n_train = data.graph_samples(data.plan.train.clone(), k, true)?.len();
        let mut tl = Vec::new();
        for (end, s) in data.graph_samples(test.clone(), k, false)? {
            let gs: Vec<&PreparedGraph> = s.graphs.iter().map(|&i| &data.graphs[i]).collect();
            tl.push(TimelinePoint {
                day: end,
                date: data.panel.dates[end].clone(),
                score: state.model.predict_graphs(&gs)?,
                label: data.panel.graph_labels[end],
            });
        }
        (n_train, tl)
    } else {
        let n_train = data.day_samples(data.plan.train.clone(), true)?.len();
        let rows = data.day_samples(test.clone(), false)?;
        let xs: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
        let scores = state.model.predict_vectors(&xs)?;
        let tl = rows
            .iter()
            .zip(scores)
            .map(|((t, _, label), score)| TimelinePoint {
                day: *t,
                date: data.panel.dates[*t].clone(),
                score,
                label: *label,
            })
            .collect();
        (n_train, tl)
    };
    if timeline.iter().any(|p| !p.score.is_finite()) {
        return Err(Error::Numerical(format!("{kind} produced a non-finite score")));
    }
    let (scores, labels): (Vec<f64>, Vec<bool>) = timeline
        .iter()
        .filter_map(|p| p.label.map(|y| (p.score, y)))
        .unzip();
    let metrics = if scores.is_empty() {
        None
    } else {
        Some(compute_metrics(&scores, &labels, cfg.threshold)?)
    };
    let windows = data.crash_windows(test);
    let importance = match &state.model {
        Model::Forest(f) => {
            let mut agg = BTreeMap::new();
            for (src, v) in baseline_feature_sources(&data.panel).into_iter().zip(&f.importance) {
                *agg.entry(src).or_insert(0.0) += v;
            }
            Some(agg)
        }
        _ => None,
    };
    Ok(ModelReport {
        kind,
        name: kind.display_name().to_string(),
        parameter_count: state.parameter_count(),
        seed: state.seed,
        n_train,
        lead_times: lead_times(&timeline, cfg.threshold, &windows),
        roc: roc_curve(&scores, &labels),
        pr: pr_curve(&scores, &labels),
        metrics,
        timeline,
        importance,
        train_log: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format: String,
    pub seed: u64,
    pub threshold: f64,
    pub config: ExperimentConfig,
    /// First and last test dates.
    pub test_period: (String, String),
    pub crash_windows: Vec<CrashWindow>,
    pub models: Vec<ModelReport>,
    pub notes: Vec<String>,
}

impl EvaluationReport {
    pub fn new(data: &Dataset, cfg: &ExperimentConfig, models: Vec<ModelReport>) -> Self {
        let test = data.plan.test.clone();
        let mut notes = Vec::new();
        let labels: Vec<bool> = test.clone().filter_map(|t| data.panel.graph_labels[t]).collect();
        if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
            notes.push(
                "test period contains a single class: AUROC, AUPRC and the ROC/PR curves are undefined".to_string(),
            );
        }
        let unlabelled = test.clone().filter(|&t| data.panel.graph_labels[t].is_none()).count();
        if unlabelled > 0 {
            notes.push(format!(
                "{unlabelled} test dates at the end of the sample lack a full label horizon; they are scored but not evaluated"
            ));
        }
        if let Some(s) = &data.panel.standardization {
            notes.extend(s.warnings.iter().cloned());
        }
        EvaluationReport {
            format: REPORT_FORMAT.into(),
            seed: cfg.seed,
            threshold: cfg.threshold,
            config: *cfg,
            test_period: (data.panel.dates[test.start].clone(), data.panel.dates[test.end - 1].clone()),
            crash_windows: data.crash_windows(test),
            models,
            notes,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: EvaluationReport = serde_json::from_str(text).map_err(|e| Error::Format(format!("report: {e}")))?;
        if r.format != REPORT_FORMAT {
            return Err(Error::Format(format!("report format '{}' is not {REPORT_FORMAT}", r.format)));
        }
        Ok(r)
    }
}

/// `date,score,label` with an empty label for unlabelled dates.
pub fn timeline_csv(timeline: &[TimelinePoint]) -> String {
    let mut out = String::from("date,score,label\n");
    for p in timeline {
        let label = match p.label {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        out.push_str(&format!("{},{},{}\n", p.date, p.score, label));
    }
    out
}

/// Trains and evaluates the requested families in memory.
pub fn run_experiment(data: &Dataset, cfg: &ExperimentConfig, kinds: &[ModelKind]) -> Result<(EvaluationReport, Vec<ModelState>)> {
    let mut reports = Vec::new();
    let mut states = Vec::new();
    for &kind in kinds {
        let (state, log) = train_kind(kind, data, cfg)?;
        let mut report = evaluate_state(&state, data, cfg)?;
        report.train_log = Some(log);
        reports.push(report);
        states.push(state);
    }
    Ok((EvaluationReport::new(data, cfg, reports), states))
}
