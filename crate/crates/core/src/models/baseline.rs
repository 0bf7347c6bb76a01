use crate::features::FeaturePanel;
use crate::{Error, Result};

/// Day-level baseline inputs: cross-sectional mean then sample standard
/// deviation of each base node feature, followed by the macro overlay.
pub fn baseline_day_features(panel: &FeaturePanel, t: usize) -> Result<Vec<f64>> {
    if t >= panel.n_dates() {
        return Err(Error::InvalidArgument(format!(
            "date index {t} outside the {}-date feature panel",
            panel.n_dates()
        )));
    }
    let n = panel.n_nodes() as f64;
    let nb = panel.n_base_features();
    let mut means = Vec::with_capacity(nb);
    let mut stds = Vec::with_capacity(nb);
    for f in 0..nb {
        let vals: Vec<f64> = (0..panel.n_nodes()).map(|i| panel.get(i, t, f)).collect();
        // shifted by the first value so identical inputs give exactly zero spread
        let shift = vals[0];
        let mean = shift + vals.iter().map(|v| v - shift).sum::<f64>() / n;
        let sd = if vals.len() < 2 {
            0.0
        } else {
            (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        means.push(mean);
        stds.push(sd);
    }
    means.extend(stds);
    if let Some(m) = &panel.macro_overlay {
        means.extend_from_slice(&m.values[t]);
    }
    Ok(means)
}

pub fn baseline_feature_names(panel: &FeaturePanel) -> Vec<String> {
    let mut names: Vec<String> = panel.names.iter().map(|n| format!("mean_{n}")).collect();
    names.extend(panel.names.iter().map(|n| format!("std_{n}")));
    if let Some(m) = &panel.macro_overlay {
        names.extend(m.names.iter().cloned());
    }
    names
}

/// Which base feature (or macro column) each baseline input derives from.
pub fn baseline_feature_sources(panel: &FeaturePanel) -> Vec<String> {
    let mut src = panel.names.clone();
    src.extend(panel.names.iter().cloned());
    if let Some(m) = &panel.macro_overlay {
        src.extend(m.names.iter().cloned());
    }
    src
}
