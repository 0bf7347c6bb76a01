//! WebAssembly bindings for the static demo page in `www/`. Everything runs
//! on the built-in synthetic market, so the page needs no data files.

use srr_core::eval::{auroc, crash_windows, ExperimentConfig};
use srr_core::eval::build_features;
use srr_core::features::FeaturePanel;
use srr_core::graph::{build_snapshot, GraphConfig, GraphSnapshot};
use srr_core::market_data::{log_returns, ReturnPanel};
use srr_core::plot;
use srr_core::synthetic::{generate, SyntheticConfig, SyntheticMarket};
use wasm_bindgen::prelude::*;

/// Label horizon used by the demo (matches the fixture run config).
pub const DEMO_HORIZON: usize = 20;

pub struct Demo {
    pub market: SyntheticMarket,
    pub returns: ReturnPanel,
    pub panel: FeaturePanel,
}

impl Demo {
    pub fn new(seed: u64) -> Result<Demo, String> {
        let market = generate(&SyntheticConfig {
            seed,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let mut cfg = ExperimentConfig::default();
        cfg.labels.horizon = DEMO_HORIZON;
        let panel = build_features(&market.prices, &cfg, None).map_err(|e| e.to_string())?;
        let returns = log_returns(&market.prices).map_err(|e| e.to_string())?;
        Ok(Demo { market, returns, panel })
    }

    pub fn snapshot(&self, day: usize, window: usize, tau: f64) -> Result<GraphSnapshot, String> {
        let cfg = GraphConfig {
            window,
            tau,
            ..Default::default()
        };
        let t = day.min(self.panel.n_dates() - 1);
        build_snapshot(&self.returns, &self.panel, t, &cfg, None).map_err(|e| e.to_string())
    }

    pub fn densities(&self, window: usize, tau: f64) -> Result<Vec<f64>, String> {
        (0..self.panel.n_dates())
            .map(|t| self.snapshot(t, window, tau).map(|s| s.edge_density()))
            .collect()
    }
}

pub fn network_svg_impl(seed: u64, day: usize, window: usize, tau: f64) -> Result<String, String> {
    let demo = Demo::new(seed)?;
    let s = demo.snapshot(day, window, tau)?;
    let groups: Vec<usize> = s
        .node_ids
        .iter()
        .map(|t| {
            let sec = &demo.market.sectors[t];
            sec.trim_start_matches('S').parse().unwrap_or(0)
        })
        .collect();
    let edges: Vec<(usize, usize)> = s.correlation_edges().iter().map(|e| (e.i, e.j)).collect();
    let label = match s.graph_label {
        Some(true) => "crash ahead",
        Some(false) => "no crash ahead",
        None => "unlabelled",
    };
    let title = format!("{}: density {:.2}, {label}", s.date, s.edge_density());
    Ok(plot::network_svg(&title, &s.node_ids, &groups, &edges))
}

pub fn timeline_svg_impl(seed: u64, window: usize, tau: f64) -> Result<String, String> {
    let demo = Demo::new(seed)?;
    let dens = demo.densities(window, tau)?;
    let series = vec![(
        "edge density".to_string(),
        dens.iter().enumerate().map(|(t, d)| (t as f64, *d)).collect(),
    )];
    let days: Vec<(usize, String, Option<bool>)> = (0..demo.panel.n_dates())
        .map(|t| (t, demo.panel.dates[t].clone(), demo.panel.graph_labels[t]))
        .collect();
    let windows: Vec<(f64, f64)> = crash_windows(&days)
        .iter()
        .map(|w| (w.start_day as f64, w.end_day as f64))
        .collect();
    let step = (days.len() / 4).max(1);
    let x_labels: Vec<(f64, String)> = days.iter().step_by(step).map(|d| (d.0 as f64, d.1.clone())).collect();
    Ok(plot::timeline_svg(
        "Correlation-network density",
        "Density",
        &series,
        &windows,
        None,
        &x_labels,
        (0.0, 1.0),
    ))
}

/// AUROC of raw edge density as a crash score over labelled days; `None`
/// when one class is absent.
pub fn density_auroc_impl(seed: u64, window: usize, tau: f64) -> Result<Option<f64>, String> {
    let demo = Demo::new(seed)?;
    let dens = demo.densities(window, tau)?;
    let (scores, labels): (Vec<f64>, Vec<bool>) = dens
        .iter()
        .zip(&demo.panel.graph_labels)
        .filter_map(|(d, l)| l.map(|l| (*d, l)))
        .unzip();
    Ok(auroc(&scores, &labels))
}

fn js(e: String) -> JsValue {
    JsValue::from_str(&e)
}

/// Number of days the demo can show.
#[wasm_bindgen]
pub fn demo_days(seed: u32) -> Result<usize, JsValue> {
    Ok(Demo::new(seed as u64).map_err(js)?.panel.n_dates())
}

#[wasm_bindgen]
pub fn network_svg(seed: u32, day: usize, window: usize, tau: f64) -> Result<String, JsValue> {
    network_svg_impl(seed as u64, day, window, tau).map_err(js)
}

#[wasm_bindgen]
pub fn timeline_svg(seed: u32, window: usize, tau: f64) -> Result<String, JsValue> {
    timeline_svg_impl(seed as u64, window, tau).map_err(js)
}

/// `NaN` when undefined.
#[wasm_bindgen]
pub fn density_auroc(seed: u32, window: usize, tau: f64) -> Result<f64, JsValue> {
    Ok(density_auroc_impl(seed as u64, window, tau).map_err(js)?.unwrap_or(f64::NAN))
}
