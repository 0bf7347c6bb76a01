//! Run configuration (TOML). Every field has a default; see
//! `configs/default.toml` for the annotated schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use srr_core::eval::ExperimentConfig;
use srr_core::features::{FeatureConfig, LabelConfig};
use srr_core::graph::GraphConfig;
use srr_core::hash::sha256_hex;
use srr_core::market_data::parse_date;
use srr_core::models::{ModelHyper, ModelKind};
use srr_core::synthetic::SyntheticConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrisisPreset {
    pub name: &'static str,
    pub label: &'static str,
    pub start: &'static str,
    pub end: &'static str,
}

const PRESETS: [CrisisPreset; 3] = [
    CrisisPreset {
        name: "dotcom",
        label: "Dot-com",
        start: "1998-01-01",
        end: "2003-12-31",
    },
    CrisisPreset {
        name: "gfc",
        label: "GFC",
        start: "2006-01-01",
        end: "2011-12-31",
    },
    CrisisPreset {
        name: "covid",
        label: "COVID-19",
        start: "2018-01-01",
        end: "2021-12-31",
    },
];

pub fn crisis_presets() -> &'static [CrisisPreset] {
    &PRESETS
}

pub fn preset(name: &str) -> CliResult<&'static CrisisPreset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        CliError::Config(format!("unknown preset '{name}'; valid presets: {}", names.join(", ")))
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Long-format `date,ticker,adj_close` CSV.
    pub prices: Option<PathBuf>,
    /// `ticker,sector` CSV; required for the sector layer.
    pub universe: Option<PathBuf>,
    /// `date,<indicator>...` CSV appended to node features.
    #[serde(rename = "macro")]
    pub macro_path: Option<PathBuf>,
    pub tickers: Option<Vec<String>>,
    /// Named crisis period; mutually exclusive with `start`/`end`.
    pub preset: Option<String>,
    pub start: Option<String>,
    pub end: Option<String>,
    /// Generate prices with the planted-regime generator instead of reading
    /// `prices`.
    pub synthetic: Option<SyntheticConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Run directory; not part of the config hash.
    pub out: Option<PathBuf>,
    pub models: Vec<ModelKind>,
    pub split_ratio: f64,
    /// Decision and warning threshold γ.
    pub threshold: f64,
    pub data: DataConfig,
    pub features: FeatureConfig,
    pub labels: LabelConfig,
    pub graph: GraphConfig,
    pub model: ModelHyper,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        RunConfig {
            seed: e.seed,
            out: None,
            models: ModelKind::ALL.to_vec(),
            split_ratio: e.split_ratio,
            threshold: e.threshold,
            data: DataConfig::default(),
            features: e.features,
            labels: e.labels,
            graph: e.graph,
            model: e.model,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Reads a config file; relative data paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.data.prices, &mut cfg.data.universe, &mut cfg.data.macro_path]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = &o.preset {
            self.data.preset = Some(p.clone());
            self.data.start = None;
            self.data.end = None;
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split_ratio {} must lie in (0, 1)", self.split_ratio));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad(format!("threshold {} must lie in [0, 1]", self.threshold));
        }
        if self.models.is_empty() {
            return bad("models must list at least one model kind".into());
        }
        let mut seen = self.models.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.models.len() {
            return bad("models lists a kind twice".into());
        }
        if self.graph.seq_len != self.model.seq_len {
            return bad(format!(
                "graph.seq_len ({}) and model.seq_len ({}) must agree",
                self.graph.seq_len, self.model.seq_len
            ));
        }
        if !(0.0..=1.0).contains(&self.graph.tau) {
            return bad(format!("graph.tau {} must lie in [0, 1]", self.graph.tau));
        }
        if self.graph.window < 2 || self.graph.stride == 0 || self.graph.seq_len == 0 {
            return bad("graph.window must be >= 2; stride and seq_len >= 1".into());
        }
        if !(self.labels.threshold > 0.0 && self.labels.threshold < 1.0) || self.labels.horizon == 0 {
            return bad("labels.threshold must lie in (0, 1) and labels.horizon be >= 1".into());
        }
        if self.model.epochs > 0 && (self.model.batch_size == 0 || !(self.model.lr > 0.0)) {
            return bad("model.batch_size and model.lr must be positive".into());
        }
        self.features.validate().map_err(|e| CliError::Config(e.to_string()))?;
        match (&self.data.prices, &self.data.synthetic) {
            (Some(_), Some(_)) => return bad("set either data.prices or data.synthetic, not both".into()),
            (None, None) => return bad("no data source: set data.prices or data.synthetic".into()),
            _ => {}
        }
        if self.data.preset.is_some() && (self.data.start.is_some() || self.data.end.is_some()) {
            return bad("data.preset and data.start/end are mutually exclusive".into());
        }
        if let Some(p) = &self.data.preset {
            preset(p)?;
        }
        for d in [&self.data.start, &self.data.end].into_iter().flatten() {
            if parse_date(d).is_none() {
                return bad(format!("date '{d}' is not YYYY-MM-DD"));
            }
        }
        if self.graph.sector_layer && self.data.universe.is_none() && self.data.synthetic.is_none() {
            return bad("graph.sector_layer needs data.universe".into());
        }
        Ok(())
    }

    /// Effective `(start, end)` filter, from the preset or explicit dates.
    pub fn date_range(&self) -> CliResult<(Option<String>, Option<String>)> {
        match &self.data.preset {
            Some(p) => {
                let p = preset(p)?;
                Ok((Some(p.start.to_string()), Some(p.end.to_string())))
            }
            None => Ok((self.data.start.clone(), self.data.end.clone())),
        }
    }

    /// Row label for report tables.
    pub fn crisis_label(&self) -> String {
        if let Some(p) = self.data.preset.as_deref().and_then(|p| preset(p).ok()) {
            return p.label.to_string();
        }
        if self.data.synthetic.is_some() {
            return "Synthetic".into();
        }
        match (&self.data.start, &self.data.end) {
            (Some(s), Some(e)) => format!("{s}..{e}"),
            _ => "Custom".into(),
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            features: self.features,
            labels: self.labels,
            graph: self.graph,
            model: self.model,
            split_ratio: self.split_ratio,
            threshold: self.threshold,
            seed: self.seed,
        }
    }

    /// Canonical TOML of everything that influences results (the output
    /// directory is excluded).
    pub fn canonical_toml(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        toml::to_string(&c).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.canonical_toml().as_bytes())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("runs/srr"))
    }
}
