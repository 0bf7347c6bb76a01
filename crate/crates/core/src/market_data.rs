//! Price ingestion, calendar alignment and log returns.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::hash::sha256_hex;
use crate::{Error, Result};

/// Aligned adjusted-close prices, `prices[i][t]` for ticker `i` on `dates[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    tickers: Vec<String>,
    dates: Vec<String>,
    prices: Vec<Vec<f64>>,
    universe_meta: Option<BTreeMap<String, String>>,
}

impl PricePanel {
    pub fn new(tickers: Vec<String>, dates: Vec<String>, prices: Vec<Vec<f64>>) -> Result<Self> {
        if tickers.is_empty() {
            return Err(Error::Data("price panel has no tickers".into()));
        }
        if prices.len() != tickers.len() {
            return Err(Error::Data(format!(
                "{} price rows for {} tickers",
                prices.len(),
                tickers.len()
            )));
        }
        let unique: BTreeSet<&String> = tickers.iter().collect();
        if unique.len() != tickers.len() {
            return Err(Error::Data("duplicate ticker in panel".into()));
        }
        for w in dates.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Data(format!(
                    "dates not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        for (ticker, row) in tickers.iter().zip(&prices) {
            if row.len() != dates.len() {
                return Err(Error::Data(format!(
                    "ticker {ticker} has {} prices for {} dates",
                    row.len(),
                    dates.len()
                )));
            }
            if let Some((t, p)) = row.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
                return Err(Error::Data(format!(
                    "ticker {ticker} has invalid price {p} on {}",
                    dates[t]
                )));
            }
        }
        Ok(PricePanel {
            tickers,
            dates,
            prices,
            universe_meta: None,
        })
    }

    pub fn with_universe_meta(mut self, meta: BTreeMap<String, String>) -> Self {
        self.universe_meta = Some(meta);
        self
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn prices(&self) -> &[Vec<f64>] {
        &self.prices
    }

    pub fn series(&self, i: usize) -> &[f64] {
        &self.prices[i]
    }

    pub fn universe_meta(&self) -> Option<&BTreeMap<String, String>> {
        self.universe_meta.as_ref()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    /// Panel restricted to the first `len` dates.
    pub fn truncate(&self, len: usize) -> PricePanel {
        let len = len.min(self.dates.len());
        PricePanel {
            tickers: self.tickers.clone(),
            dates: self.dates[..len].to_vec(),
            prices: self.prices.iter().map(|r| r[..len].to_vec()).collect(),
            universe_meta: self.universe_meta.clone(),
        }
    }

    /// Long-format CSV (`date,ticker,adj_close`), dates ascending, tickers in
    /// panel order.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("date,ticker,adj_close\n");
        for (t, date) in self.dates.iter().enumerate() {
            for (i, ticker) in self.tickers.iter().enumerate() {
                out.push_str(&format!("{date},{ticker},{}\n", self.prices[i][t]));
            }
        }
        out
    }
}

/// Daily log returns; `dates[t]` is the later date of each pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub tickers: Vec<String>,
    pub dates: Vec<String>,
    pub returns: Vec<Vec<f64>>,
}

pub fn log_returns(panel: &PricePanel) -> Result<ReturnPanel> {
    if panel.n_dates() < 2 {
        return Err(Error::Data(format!(
            "log returns need at least 2 dates, panel has {}",
            panel.n_dates()
        )));
    }
    let returns = panel
        .prices
        .iter()
        .map(|row| row.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
        .collect();
    Ok(ReturnPanel {
        tickers: panel.tickers.clone(),
        dates: panel.dates[1..].to_vec(),
        returns,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Tickers to keep, in output order. `None` keeps every ticker in the
    /// file, sorted.
    pub tickers: Option<Vec<String>>,
    /// Inclusive ISO dates.
    pub start: Option<String>,
    pub end: Option<String>,
}

/// Provenance record written next to every ingested panel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceManifest {
    pub source: String,
    pub sha256: String,
    pub rows_read: usize,
    pub rows_kept: usize,
    pub dates_dropped: usize,
    pub tickers: Vec<String>,
}

impl ProvenanceManifest {
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let d = NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()?;
    // reject non-canonical forms such as "2020-1-5"
    (d.format("%Y-%m-%d").to_string() == s).then_some(d)
}

pub fn ingest_csv(path: &Path, config: &IngestConfig) -> Result<(PricePanel, ProvenanceManifest)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    ingest_bytes(&bytes, &path.display().to_string(), config)
}

/// Ingests `date,ticker,adj_close` rows with inner-join calendar alignment.
pub fn ingest_bytes(
    bytes: &[u8],
    source: &str,
    config: &IngestConfig,
) -> Result<(PricePanel, ProvenanceManifest)> {
    let row_err = |line: u64, message: String| Error::Row {
        source_name: source.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| row_err(1, format!("unreadable header: {e}")))?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    if names != ["date", "ticker", "adj_close"] {
        return Err(row_err(1, format!("expected header date,ticker,adj_close, got {}", names.join(","))));
    }

    let start = match &config.start {
        Some(s) => Some(parse_date(s).ok_or_else(|| Error::InvalidArgument(format!("bad start date {s}")))?),
        None => None,
    };
    let end = match &config.end {
        Some(s) => Some(parse_date(s).ok_or_else(|| Error::InvalidArgument(format!("bad end date {s}")))?),
        None => None,
    };
    let wanted: Option<BTreeSet<&str>> = config
        .tickers
        .as_ref()
        .map(|v| v.iter().map(String::as_str).collect());

    let mut rows_read = 0usize;
    let mut series: HashMap<String, BTreeMap<String, f64>> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            row_err(line, format!("malformed row: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        rows_read += 1;
        if record.len() != 3 {
            return Err(row_err(line, format!("expected 3 fields, got {}", record.len())));
        }
        let (date_s, ticker, price_s) = (&record[0], &record[1], &record[2]);
        let date = parse_date(date_s).ok_or_else(|| row_err(line, format!("bad date {date_s:?}")))?;
        if ticker.is_empty() {
            return Err(row_err(line, "empty ticker".into()));
        }
        let price: f64 = price_s
            .parse()
            .map_err(|_| row_err(line, format!("bad price {price_s:?}")))?;
        if !(price.is_finite() && price > 0.0) {
            return Err(row_err(line, format!("non-positive or non-finite price {price_s}")));
        }
        let entry = series.entry(ticker.to_string()).or_default();
        if entry.insert(date_s.to_string(), price).is_some() {
            return Err(row_err(line, format!("duplicate row for ({ticker}, {date_s})")));
        }
        // range/selection filters are applied after duplicate detection so
        // the whole file is validated
        if start.is_some_and(|s| date < s) || end.is_some_and(|e| date > e) {
            entry.remove(date_s);
        }
        if wanted.as_ref().is_some_and(|w| !w.contains(ticker)) {
            entry.remove(date_s);
        }
    }

    let tickers: Vec<String> = match &config.tickers {
        Some(t) => t.clone(),
        None => {
            let mut t: Vec<String> = series.keys().cloned().collect();
            t.sort();
            t
        }
    };
    if tickers.is_empty() {
        return Err(Error::Data(format!("{source}: no tickers")));
    }
    let mut union: BTreeSet<&String> = BTreeSet::new();
    let mut common: Option<BTreeSet<&String>> = None;
    for t in &tickers {
        let dates = series
            .get(t)
            .filter(|m| !m.is_empty())
            .ok_or_else(|| Error::Data(format!("{source}: ticker {t} has no rows in range")))?;
        let set: BTreeSet<&String> = dates.keys().collect();
        union.extend(set.iter().copied());
        common = Some(match common {
            None => set,
            Some(c) => c.intersection(&set).copied().collect(),
        });
    }
    let common = common.unwrap_or_default();
    if common.is_empty() {
        return Err(Error::Data(format!(
            "{source}: calendars of the requested tickers do not intersect"
        )));
    }
    let dates: Vec<String> = common.iter().map(|d| (*d).clone()).collect();
    let prices: Vec<Vec<f64>> = tickers
        .iter()
        .map(|t| {
            let m = &series[t];
            dates.iter().map(|d| m[d]).collect()
        })
        .collect();
    let manifest = ProvenanceManifest {
        source: source.to_string(),
        sha256: sha256_hex(bytes),
        rows_read,
        rows_kept: dates.len() * tickers.len(),
        dates_dropped: union.len() - dates.len(),
        tickers: tickers.clone(),
    };
    Ok((PricePanel::new(tickers, dates, prices)?, manifest))
}

/// Reads a `ticker,sector` universe file.
pub fn read_universe(path: &Path) -> Result<BTreeMap<String, String>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let source = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(&bytes[..]);
    let mut out = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Row {
            source_name: source.clone(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < 2 || record[0].is_empty() {
            return Err(Error::Row {
                source_name: source.clone(),
                line,
                message: "expected ticker,sector".into(),
            });
        }
        out.insert(record[0].to_string(), record[1].to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIXTURE: &str = "date,ticker,adj_close
2020-01-02,AAA,10
2020-01-02,BBB,20
2020-01-02,CCC,30
2020-01-03,AAA,11
2020-01-03,BBB,21
2020-01-03,CCC,31
2020-01-06,AAA,12
2020-01-06,CCC,32
2020-01-07,AAA,13
2020-01-07,BBB,23
2020-01-07,CCC,33
2020-01-08,AAA,14
2020-01-08,BBB,24
2020-01-08,CCC,34
";

    #[test]
    fn inner_join_drops_partial_dates() {
        let (panel, manifest) = ingest_bytes(FIXTURE.as_bytes(), "fixture", &IngestConfig::default()).unwrap();
        assert_eq!(panel.n_dates(), 4);
        assert_eq!(panel.tickers(), ["AAA", "BBB", "CCC"]);
        assert!(!panel.dates().contains(&"2020-01-06".to_string()));
        assert_eq!(manifest.dates_dropped, 1);
        assert_eq!(manifest.rows_read, 14);
        assert_eq!(manifest.rows_kept, 12);
    }

    #[test]
    fn zero_price_names_the_row() {
        let csv = "date,ticker,adj_close\n2020-01-02,AAA,10\n2020-01-03,AAA,0.0\n";
        match ingest_bytes(csv.as_bytes(), "f.csv", &IngestConfig::default()) {
            Err(Error::Row { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("0.0"));
            }
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_malformed_rows_fail() {
        let dup = "date,ticker,adj_close\n2020-01-02,AAA,10\n2020-01-02,AAA,11\n";
        assert!(matches!(
            ingest_bytes(dup.as_bytes(), "f", &IngestConfig::default()),
            Err(Error::Row { line: 3, .. })
        ));
        let bad = "date,ticker,adj_close\n2020-13-02,AAA,10\n";
        assert!(matches!(
            ingest_bytes(bad.as_bytes(), "f", &IngestConfig::default()),
            Err(Error::Row { line: 2, .. })
        ));
        let short = "date,ticker,adj_close\n2020-01-02,AAA\n";
        assert!(ingest_bytes(short.as_bytes(), "f", &IngestConfig::default()).is_err());
        let header = "day,ticker,close\n";
        assert!(matches!(
            ingest_bytes(header.as_bytes(), "f", &IngestConfig::default()),
            Err(Error::Row { line: 1, .. })
        ));
    }

    #[test]
    fn disjoint_calendars_fail() {
        let csv = "date,ticker,adj_close\n2020-01-02,AAA,10\n2020-01-03,BBB,11\n";
        assert!(matches!(
            ingest_bytes(csv.as_bytes(), "f", &IngestConfig::default()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn ticker_selection_and_range() {
        let cfg = IngestConfig {
            tickers: Some(vec!["CCC".into(), "AAA".into()]),
            start: Some("2020-01-03".into()),
            end: Some("2020-01-07".into()),
        };
        let (panel, manifest) = ingest_bytes(FIXTURE.as_bytes(), "f", &cfg).unwrap();
        assert_eq!(panel.tickers(), ["CCC", "AAA"]);
        assert_eq!(panel.dates(), ["2020-01-03", "2020-01-06", "2020-01-07"]);
        assert_eq!(manifest.dates_dropped, 0);
        assert_eq!(panel.series(0), &[31.0, 32.0, 33.0]);
    }

    #[test]
    fn adding_a_ticker_never_adds_dates() {
        let two = IngestConfig {
            tickers: Some(vec!["AAA".into(), "CCC".into()]),
            ..Default::default()
        };
        let (p2, _) = ingest_bytes(FIXTURE.as_bytes(), "f", &two).unwrap();
        let (p3, _) = ingest_bytes(FIXTURE.as_bytes(), "f", &IngestConfig::default()).unwrap();
        assert!(p3.dates().iter().all(|d| p2.dates().contains(d)));
        assert!(p3.n_dates() <= p2.n_dates());
    }

    #[test]
    fn ingestion_is_deterministic() {
        let a = ingest_bytes(FIXTURE.as_bytes(), "f", &IngestConfig::default()).unwrap();
        let b = ingest_bytes(FIXTURE.as_bytes(), "f", &IngestConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.to_text(), b.1.to_text());
    }

    #[test]
    fn csv_export_reingests_identically() {
        let (panel, _) = ingest_bytes(FIXTURE.as_bytes(), "f", &IngestConfig::default()).unwrap();
        let text = panel.to_csv_string();
        let (again, _) = ingest_bytes(text.as_bytes(), "g", &IngestConfig::default()).unwrap();
        assert_eq!(panel, again);
    }

    fn panel_of(series: Vec<f64>) -> PricePanel {
        let dates = (0..series.len()).map(|i| format!("t{:05}", i)).collect();
        PricePanel::new(vec!["X".into()], dates, vec![series]).unwrap()
    }

    #[test]
    fn log_return_examples() {
        let r = log_returns(&panel_of(vec![100.0, 100.0])).unwrap();
        assert_eq!(r.returns[0], vec![0.0]);
        let r = log_returns(&panel_of(vec![100.0, 110.0])).unwrap();
        assert!((r.returns[0][0] - 0.09531).abs() < 1e-5);
        assert_eq!(r.returns[0][0], (110.0f64 / 100.0).ln());
        let r = log_returns(&panel_of(vec![100.0, 50.0])).unwrap();
        assert!((r.returns[0][0] + std::f64::consts::LN_2).abs() < 1e-15);
        assert!(log_returns(&panel_of(vec![100.0])).is_err());
    }

    #[test]
    fn panel_invariants_enforced() {
        let d = vec!["2020-01-02".to_string(), "2020-01-01".to_string()];
        assert!(PricePanel::new(vec!["X".into()], d, vec![vec![1.0, 1.0]]).is_err());
        let d = vec!["2020-01-01".to_string()];
        assert!(PricePanel::new(vec!["X".into()], d, vec![vec![-1.0]]).is_err());
    }

    proptest! {
        #[test]
        fn cumulative_returns_reproduce_prices(
            steps in proptest::collection::vec(-0.2f64..0.2, 1..200),
            p0 in 1.0f64..1000.0,
        ) {
            let mut prices = vec![p0];
            for s in &steps {
                let last = *prices.last().unwrap();
                prices.push(last * s.exp());
            }
            let r = log_returns(&panel_of(prices.clone())).unwrap();
            let mut acc = 0.0;
            for (t, ret) in r.returns[0].iter().enumerate() {
                acc += ret;
                let rebuilt = p0 * acc.exp();
                prop_assert!(((rebuilt - prices[t + 1]) / prices[t + 1]).abs() < 1e-12);
            }
        }
    }
}
