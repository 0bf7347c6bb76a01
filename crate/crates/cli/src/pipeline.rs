//! Pipeline stages. Each stage reads its upstream artifacts from the run
//! directory, checks them against the upstream stage manifest and writes its
//! own artifacts plus `stage_<name>.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use srr_core::eval::{
    build_features, evaluate_state, feature_split, timeline_csv, train_kind, Dataset, EvaluationReport, SplitPlan,
};
use srr_core::features::{apply_standardization, read_macro_csv, standardize, FeaturePanel, StandardizationStats};
use srr_core::graph::{build_all_snapshots, read_graph_file, write_graph_file};
use srr_core::hash::sha256_hex;
use srr_core::market_data::{ingest_bytes, log_returns, read_universe, IngestConfig, PricePanel, ProvenanceManifest};
use srr_core::models::ModelState;
use srr_core::synthetic::generate;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::write_report;

pub const STAGE_FORMAT: &str = "srr-stage-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Features,
    Graphs,
    Train,
    Evaluate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Features,
        Stage::Graphs,
        Stage::Train,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Features => "features",
            Stage::Graphs => "graphs",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }
}

/// `stage_<name>.json`: hashes of everything a stage read and wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub format: String,
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

/// A run directory bound to one configuration.
pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    pub dir: PathBuf,
    pub config_hash: String,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl<'a> Run<'a> {
    pub fn new(cfg: &'a RunConfig) -> CliResult<Self> {
        cfg.validate()?;
        Ok(Run {
            cfg,
            dir: cfg.out_dir(),
            config_hash: cfg.hash(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.outputs.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn manifest(&self, stage: Stage) -> CliResult<StageManifest> {
        let rel = format!("stage_{}.json", stage.name());
        let path = self.path(&rel);
        let text = std::fs::read_to_string(&path).map_err(|_| {
            CliError::Data(format!(
                "missing stage manifest {rel} in {}; run `srr {}` first",
                self.dir.display(),
                stage.name()
            ))
        })?;
        let m: StageManifest =
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{rel} is malformed ({e}); rerun `srr {}`", stage.name())))?;
        if m.format != STAGE_FORMAT {
            return Err(CliError::Data(format!(
                "{rel} has format {:?}, expected {STAGE_FORMAT}; rerun `srr {}`",
                m.format,
                stage.name()
            )));
        }
        if m.config_hash != self.config_hash {
            return Err(CliError::Data(format!(
                "the {} artifacts were produced with a different configuration; rerun `srr {}`",
                stage.name(),
                stage.name()
            )));
        }
        Ok(m)
    }

    /// Reads an upstream artifact after checking it against the manifest of
    /// the stage that produced it.
    fn read(&mut self, stage: Stage, rel: &str) -> CliResult<Vec<u8>> {
        let path = self.path(rel);
        let bytes = std::fs::read(&path).map_err(|_| {
            CliError::Data(format!(
                "missing artifact {rel} (produced by `srr {}`); run that stage first",
                stage.name()
            ))
        })?;
        let m = self.manifest(stage)?;
        let hash = sha256_hex(&bytes);
        match m.outputs.get(rel) {
            Some(h) if *h == hash => {}
            Some(_) => {
                return Err(CliError::Data(format!(
                    "{rel} changed since `srr {}` wrote it; rerun that stage",
                    stage.name()
                )))
            }
            None => {
                return Err(CliError::Data(format!(
                    "{rel} is not listed by stage_{}.json; rerun `srr {}`",
                    stage.name(),
                    stage.name()
                )))
            }
        }
        self.inputs.insert(rel.to_string(), hash);
        Ok(bytes)
    }

    fn read_text(&mut self, stage: Stage, rel: &str) -> CliResult<String> {
        String::from_utf8(self.read(stage, rel)?).map_err(|_| CliError::Data(format!("{rel} is not UTF-8")))
    }

    fn has_output(&self, stage: Stage, rel: &str) -> CliResult<bool> {
        Ok(self.manifest(stage)?.outputs.contains_key(rel))
    }

    fn finish(&mut self, stage: Stage) -> CliResult<()> {
        let m = StageManifest {
            format: STAGE_FORMAT.into(),
            stage: stage.name().into(),
            config_hash: self.config_hash.clone(),
            seed: self.cfg.seed,
            inputs: std::mem::take(&mut self.inputs),
            outputs: std::mem::take(&mut self.outputs),
        };
        let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        text.push('\n');
        let path = self.path(&format!("stage_{}.json", stage.name()));
        std::fs::create_dir_all(&self.dir).map_err(|e| io_err(&self.dir, e))?;
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))
    }

    pub fn run_stage(&mut self, stage: Stage) -> CliResult<()> {
        self.inputs.clear();
        self.outputs.clear();
        match stage {
            Stage::Ingest => self.ingest(),
            Stage::Features => self.features(),
            Stage::Graphs => self.graphs(),
            Stage::Train => self.train(),
            Stage::Evaluate => self.evaluate(),
            Stage::Report => self.report(),
        }?;
        self.finish(stage)
    }

    pub fn run_all(&mut self) -> CliResult<()> {
        for s in Stage::ALL {
            self.run_stage(s)?;
        }
        Ok(())
    }

    fn ingest(&mut self) -> CliResult<()> {
        let (start, end) = self.cfg.date_range()?;
        let filter = IngestConfig {
            tickers: self.cfg.data.tickers.clone(),
            start,
            end,
        };
        let (prices, provenance, universe) = match &self.cfg.data.synthetic {
            Some(s) => {
                let market = generate(s)?;
                let csv = market.prices.to_csv_string();
                let source = format!("synthetic(seed={})", s.seed);
                let (panel, manifest) = ingest_bytes(csv.as_bytes(), &source, &filter)?;
                let universe: BTreeMap<String, String> = market
                    .sectors
                    .into_iter()
                    .filter(|(t, _)| panel.tickers().contains(t))
                    .collect();
                (panel, manifest, Some(universe))
            }
            None => {
                let path = self.cfg.data.prices.as_ref().expect("validated");
                let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
                let source = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
                let (panel, manifest) = ingest_bytes(&bytes, &source, &filter)?;
                let universe = match &self.cfg.data.universe {
                    Some(u) => {
                        let all = read_universe(u)?;
                        let mut kept = BTreeMap::new();
                        for t in panel.tickers() {
                            let sector = all.get(t).ok_or_else(|| {
                                CliError::Data(format!("ticker {t} has no row in the universe file {}", u.display()))
                            })?;
                            kept.insert(t.clone(), sector.clone());
                        }
                        Some(kept)
                    }
                    None => None,
                };
                (panel, manifest, universe)
            }
        };
        self.write("prices.csv", prices.to_csv_string().as_bytes())?;
        if let Some(u) = universe {
            let mut s = String::from("ticker,sector\n");
            for (t, sec) in &u {
                s.push_str(&format!("{t},{sec}\n"));
            }
            self.write("universe.csv", s.as_bytes())?;
        }
        self.write("provenance.json", provenance.to_text().as_bytes())
    }

    fn load_prices(&mut self) -> CliResult<PricePanel> {
        let provenance: ProvenanceManifest = serde_json::from_slice(&self.read(Stage::Ingest, "provenance.json")?)
            .map_err(|e| CliError::Data(format!("provenance.json: {e}; rerun `srr ingest`")))?;
        let bytes = self.read(Stage::Ingest, "prices.csv")?;
        let filter = IngestConfig {
            tickers: Some(provenance.tickers),
            ..Default::default()
        };
        Ok(ingest_bytes(&bytes, "prices.csv", &filter)?.0)
    }

    fn features(&mut self) -> CliResult<()> {
        let prices = self.load_prices()?;
        let exp = self.cfg.experiment();
        let overlay = match &self.cfg.data.macro_path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
                let dates = prices.dates().get(exp.features.warmup()..).unwrap_or(&[]);
                Some(read_macro_csv(&text, dates)?)
            }
            None => None,
        };
        let raw = build_features(&prices, &exp, overlay)?;
        let plan = feature_split(prices.n_dates(), &exp)?;
        let standardized = standardize(&raw, plan.train.clone())?;
        let stats = standardized.standardization.as_ref().expect("standardize sets stats");
        self.write("features.csv", raw.features_csv().as_bytes())?;
        self.write("graph_labels.csv", raw.graph_labels_csv().as_bytes())?;
        if let Some(m) = raw.macro_csv() {
            self.write("macro_features.csv", m.as_bytes())?;
        }
        self.write("standardization.json", stats.to_text().as_bytes())?;
        let mut split = serde_json::to_string_pretty(&plan).expect("plan serializes");
        split.push('\n');
        self.write("split.json", split.as_bytes())
    }

    /// Standardized feature panel and split plan from the features stage.
    fn load_panel(&mut self) -> CliResult<(FeaturePanel, SplitPlan)> {
        let features = self.read_text(Stage::Features, "features.csv")?;
        let labels = self.read_text(Stage::Features, "graph_labels.csv")?;
        let mut raw = FeaturePanel::from_csv(&features, &labels)?;
        if self.has_output(Stage::Features, "macro_features.csv")? {
            let text = self.read_text(Stage::Features, "macro_features.csv")?;
            let overlay = read_macro_csv(&text, &raw.dates)?;
            raw = raw.with_macro(overlay)?;
        }
        let stats = StandardizationStats::from_text(&self.read_text(Stage::Features, "standardization.json")?)?;
        let plan: SplitPlan = serde_json::from_slice(&self.read(Stage::Features, "split.json")?)
            .map_err(|e| CliError::Data(format!("split.json: {e}; rerun `srr features`")))?;
        if plan.test.end > raw.n_dates() {
            return Err(CliError::Data("split.json does not fit features.csv; rerun `srr features`".into()));
        }
        Ok((apply_standardization(&raw, stats)?, plan))
    }

    fn graphs(&mut self) -> CliResult<()> {
        let prices = self.load_prices()?;
        let (panel, _) = self.load_panel()?;
        let sectors = if self.cfg.graph.sector_layer {
            let text = self.read_text(Stage::Ingest, "universe.csv")?;
            Some(parse_universe(&text)?)
        } else {
            None
        };
        let returns = log_returns(&prices)?;
        let snaps = build_all_snapshots(&returns, &panel, &self.cfg.graph, sectors.as_ref())?;
        let features_ref = self.inputs["features.csv"].clone();
        let text = write_graph_file(&snaps, &self.cfg.graph, &features_ref)?;
        self.write("graphs.jsonl", text.as_bytes())
    }

    fn load_dataset(&mut self) -> CliResult<Dataset> {
        let (panel, plan) = self.load_panel()?;
        let text = self.read_text(Stage::Graphs, "graphs.jsonl")?;
        let (info, snaps) = read_graph_file(&text, &panel)?;
        let g = &self.cfg.graph;
        if info.window != g.window || info.tau != g.tau {
            return Err(CliError::Data(format!(
                "graphs.jsonl was built with window {} and tau {}, config asks for {} and {}; rerun `srr graphs`",
                info.window, info.tau, g.window, g.tau
            )));
        }
        if Some(&info.features) != self.inputs.get("features.csv") {
            return Err(CliError::Data("graphs.jsonl refers to other features; rerun `srr graphs`".into()));
        }
        Ok(Dataset::new(panel, snaps, plan, self.cfg.graph)?)
    }

    fn train(&mut self) -> CliResult<()> {
        let data = self.load_dataset()?;
        let exp = self.cfg.experiment();
        for &kind in &self.cfg.models {
            let (state, log) = train_kind(kind, &data, &exp)?;
            self.write(&model_path(kind.name()), &state.to_bytes())?;
            let mut text = serde_json::to_string_pretty(&log).expect("log serializes");
            text.push('\n');
            self.write(&format!("models/{}.log.json", kind.name()), text.as_bytes())?;
        }
        Ok(())
    }

    fn evaluate(&mut self) -> CliResult<()> {
        let data = self.load_dataset()?;
        let exp = self.cfg.experiment();
        let mut reports = Vec::new();
        for &kind in &self.cfg.models {
            let rel = model_path(kind.name());
            let bytes = self.read(Stage::Train, &rel)?;
            let state = ModelState::from_bytes(&bytes)?;
            if state.kind() != kind {
                return Err(CliError::Data(format!("{rel} holds a {} model; rerun `srr train`", state.kind())));
            }
            if state.standardization_ref != data.standardization_ref() {
                return Err(CliError::Data(format!(
                    "{rel} was trained on other standardization statistics; rerun `srr train`"
                )));
            }
            let mut report = evaluate_state(&state, &data, &exp)?;
            let log_rel = format!("models/{}.log.json", kind.name());
            report.train_log = Some(
                serde_json::from_slice(&self.read(Stage::Train, &log_rel)?)
                    .map_err(|e| CliError::Data(format!("{log_rel}: {e}; rerun `srr train`")))?,
            );
            self.write(&format!("timelines/{}.csv", kind.name()), timeline_csv(&report.timeline).as_bytes())?;
            reports.push(report);
        }
        let report = EvaluationReport::new(&data, &exp, reports);
        self.write("report.json", report.to_json().as_bytes())
    }

    fn report(&mut self) -> CliResult<()> {
        let report = EvaluationReport::from_json(&self.read_text(Stage::Evaluate, "report.json")?)?;
        let files = write_report(&report, &self.cfg.crisis_label(), &self.config_hash);
        for (rel, text) in files {
            self.write(&format!("report/{rel}"), text.as_bytes())?;
        }
        Ok(())
    }
}

pub fn model_path(kind: &str) -> String {
    format!("models/{kind}.srrm")
}

fn parse_universe(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for line in text.lines().skip(1) {
        let (t, s) = line
            .split_once(',')
            .ok_or_else(|| CliError::Data(format!("universe.csv: bad row {line:?}; rerun `srr ingest`")))?;
        out.insert(t.to_string(), s.to_string());
    }
    Ok(out)
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}
