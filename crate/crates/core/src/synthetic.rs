//! Planted-regime market generator used as the bundled fixture.
//!
//! Each episode is a fragile stretch in which a common factor dominates
//! returns (cross-sectional correlation spikes while single-name volatility
//! barely moves), followed by a multi-day sell-off in the common factor and
//! an idiosyncratic recovery. Outside episodes returns are mostly
//! idiosyncratic with a weak sector factor.

use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::market_data::{parse_date, PricePanel};
use crate::tensor::SeededRng;
use crate::{Error, Result};

/// Weekdays in `start..=end` (holidays are not modelled).
pub fn weekday_calendar(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

/// The first `n` weekdays on or after `start`.
pub fn weekdays_from(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Calm,
    Fragile,
    Crash,
    Recovery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_tickers: usize,
    pub n_days: usize,
    pub n_sectors: usize,
    pub start: String,
    /// First crash day of each episode; `None` spreads `n_episodes` evenly
    /// (with seeded jitter) so that the last one falls late in the sample.
    pub crash_days: Option<Vec<usize>>,
    pub n_episodes: usize,
    pub fragile_len: usize,
    pub crash_len: usize,
    /// Total common-factor decline over the crash, as a fraction.
    pub crash_depth: f64,
    pub recovery_len: usize,
    /// Daily common-factor volatility in the fragile regime (single names
    /// get noticeably more volatile as well as more correlated).
    pub fragile_factor_vol: f64,
    /// Daily idiosyncratic volatility outside the fragile regime.
    pub idio_vol: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_tickers: 20,
            n_days: 600,
            n_sectors: 4,
            start: "2015-01-01".into(),
            crash_days: None,
            n_episodes: 5,
            fragile_len: 25,
            crash_len: 10,
            crash_depth: 0.25,
            recovery_len: 15,
            fragile_factor_vol: 0.02,
            idio_vol: 0.008,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn crash_schedule(&self) -> Vec<usize> {
        match &self.crash_days {
            Some(days) => days.clone(),
            None => {
                let mut rng = SeededRng::derive(self.seed, 1);
                let k = self.n_episodes;
                let (first, last) = (0.2, 0.88);
                let gap = if k > 1 { (last - first) / (k - 1) as f64 } else { 0.0 };
                (0..k)
                    .map(|e| {
                        let f = if k == 1 { last } else { first + gap * e as f64 };
                        // the final episode must stay inside the test period
                        let j = if e + 1 == k { 0.01 } else { 0.2 * gap };
                        ((f + rng.uniform(-j, j)) * self.n_days as f64).round() as usize
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub prices: PricePanel,
    pub sectors: BTreeMap<String, String>,
    /// Regime that generated the return into each date (date 0 is `Calm`).
    pub regimes: Vec<Regime>,
}

impl SyntheticMarket {
    pub fn universe_csv(&self) -> String {
        let mut s = String::from("ticker,sector\n");
        for (t, sec) in &self.sectors {
            s.push_str(&format!("{t},{sec}\n"));
        }
        s
    }
}

pub fn regime_schedule(cfg: &SyntheticConfig) -> Vec<Regime> {
    let mut r = vec![Regime::Calm; cfg.n_days];
    for c in cfg.crash_schedule() {
        let set = |r: &mut Vec<Regime>, range: std::ops::Range<usize>, g: Regime| {
            for d in range.filter(|&d| d < cfg.n_days) {
                r[d] = g;
            }
        };
        set(&mut r, c.saturating_sub(cfg.fragile_len)..c, Regime::Fragile);
        set(&mut r, c..c + cfg.crash_len, Regime::Crash);
        set(&mut r, c + cfg.crash_len..c + cfg.crash_len + cfg.recovery_len, Regime::Recovery);
    }
    r[0] = Regime::Calm;
    r
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticMarket> {
    if cfg.n_tickers < 2 || cfg.n_days < 2 || cfg.n_sectors == 0 {
        return Err(Error::InvalidArgument("synthetic market needs >= 2 tickers, >= 2 days and a sector".into()));
    }
    if !(0.0..1.0).contains(&cfg.crash_depth) || cfg.crash_len == 0 {
        return Err(Error::InvalidArgument("crash depth must lie in [0, 1) and crash length be positive".into()));
    }
    let start = parse_date(&cfg.start).ok_or_else(|| Error::InvalidArgument(format!("bad start date '{}'", cfg.start)))?;
    let dates: Vec<String> = weekdays_from(start, cfg.n_days).iter().map(|d| d.to_string()).collect();
    let tickers: Vec<String> = (0..cfg.n_tickers).map(|i| format!("SYN{i:02}")).collect();
    let sector_of = |i: usize| format!("S{}", i % cfg.n_sectors);
    let regimes = regime_schedule(cfg);
    let mut rng = SeededRng::new(cfg.seed);
    // heterogeneous exposure to the common factor
    let beta: Vec<f64> = (0..cfg.n_tickers).map(|_| rng.uniform(0.8, 1.2)).collect();
    let crash_drift = (1.0 - cfg.crash_depth).ln() / cfg.crash_len as f64;
    let mut logp: Vec<f64> = (0..cfg.n_tickers).map(|_| rng.uniform(3.0, 5.0)).collect();
    let mut prices = vec![Vec::with_capacity(cfg.n_days); cfg.n_tickers];
    for (i, row) in prices.iter_mut().enumerate() {
        row.push(logp[i].exp());
    }
    for &regime in &regimes[1..] {
        let (f_mu, f_sd, s_sd, idio, drift) = match regime {
            Regime::Calm => (0.0, 0.0015, 0.002, cfg.idio_vol, 0.0003),
            Regime::Fragile => (0.0, cfg.fragile_factor_vol, 0.0, 0.3 * cfg.idio_vol, 0.0),
            Regime::Crash => (crash_drift, 0.6 * cfg.fragile_factor_vol, 0.0, 0.4 * cfg.idio_vol, 0.0),
            Regime::Recovery => (0.0, 0.0015, 0.002, cfg.idio_vol, -0.6 * crash_drift / 3.0),
        };
        let f = f_mu + f_sd * rng.normal();
        let sector_shock: Vec<f64> = (0..cfg.n_sectors).map(|_| s_sd * rng.normal()).collect();
        for i in 0..cfg.n_tickers {
            let r = drift + beta[i] * f + sector_shock[i % cfg.n_sectors] + idio * rng.normal();
            logp[i] += r;
            prices[i].push(logp[i].exp());
        }
    }
    let sectors = tickers.iter().enumerate().map(|(i, t)| (t.clone(), sector_of(i))).collect();
    Ok(SyntheticMarket {
        prices: PricePanel::new(tickers, dates, prices)?,
        sectors,
        regimes,
    })
}
