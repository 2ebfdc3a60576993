//! Price panels and centered bivariate pairs.
//!
//! A panel is a wide CSV table: the first column holds opaque row labels,
//! every other column is a numeric price series. One column is designated
//! the market proxy. Columns with too many missing cells are dropped, the
//! remaining gaps are handled by complete-case row deletion.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Default fraction of missing cells above which a column is dropped.
pub const DEFAULT_DROP_THRESHOLD: f64 = 0.05;

/// Minimum number of complete rows a loaded panel must keep.
pub const MIN_PANEL_ROWS: usize = 3;

/// Minimum number of observations in a [`BivariatePairs`].
pub const MIN_PAIRS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

/// A column removed by the missing-data rule.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedColumn {
    pub name: String,
    pub missing_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    labels: Vec<String>,
    columns: Vec<Series>,
    market: usize,
    dropped: Vec<DroppedColumn>,
    rows_removed: usize,
}

impl PricePanel {
    /// Builds a panel from already-clean columns.
    pub fn new(labels: Vec<String>, columns: Vec<Series>, market_name: &str) -> Result<Self> {
        let market = columns
            .iter()
            .position(|c| c.name == market_name)
            .ok_or_else(|| Error::MissingColumn(market_name.to_string()))?;
        for c in &columns {
            if c.values.len() != labels.len() {
                return Err(Error::LengthMismatch(c.values.len(), labels.len()));
            }
            if c.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self {
            labels,
            columns,
            market,
            dropped: Vec::new(),
            rows_removed: 0,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// All retained columns in input header order, market included.
    pub fn columns(&self) -> &[Series] {
        &self.columns
    }

    pub fn market(&self) -> &Series {
        &self.columns[self.market]
    }

    pub fn market_name(&self) -> &str {
        &self.columns[self.market].name
    }

    /// Non-market columns in header order.
    pub fn assets(&self) -> impl Iterator<Item = &Series> {
        let market = self.market;
        self.columns
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i != market)
            .map(|(_, c)| c)
    }

    pub fn column(&self, name: &str) -> Option<&Series> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn dropped(&self) -> &[DroppedColumn] {
        &self.dropped
    }

    /// Rows deleted by the complete-case rule.
    pub fn rows_removed(&self) -> usize {
        self.rows_removed
    }
}

/// Loads a wide price panel from a CSV file.
pub fn load_panel(path: impl AsRef<Path>, market: &str, drop_threshold: f64) -> Result<PricePanel> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_panel(text.as_bytes(), market, drop_threshold)
}

/// Parses panel CSV from any reader. See [`load_panel`].
pub fn parse_panel(input: impl Read, market: &str, drop_threshold: f64) -> Result<PricePanel> {
    if !(0.0..=1.0).contains(&drop_threshold) {
        return Err(Error::InvalidArgument(format!(
            "drop threshold {drop_threshold} outside [0, 1]"
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let header = reader.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::MissingHeader);
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if !names.iter().any(|n| n == market) {
        return Err(Error::MissingColumn(market.to_string()));
    }

    let mut labels = Vec::new();
    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        labels.push(record.get(0).unwrap_or_default().to_string());
        for (j, col) in cells.iter_mut().enumerate() {
            let v = record
                .get(j + 1)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite());
            col.push(v);
        }
    }

    let total = labels.len();
    let mut dropped = Vec::new();
    let mut kept = Vec::new();
    for (name, col) in names.into_iter().zip(cells) {
        let missing = col.iter().filter(|v| v.is_none()).count();
        let fraction = if total == 0 {
            0.0
        } else {
            missing as f64 / total as f64
        };
        if fraction > drop_threshold {
            if name == market {
                return Err(Error::MarketDropped {
                    name,
                    missing_pct: fraction * 100.0,
                });
            }
            dropped.push(DroppedColumn {
                name,
                missing_fraction: fraction,
            });
        } else {
            kept.push((name, col));
        }
    }

    let complete: Vec<usize> = (0..total)
        .filter(|&i| kept.iter().all(|(_, col)| col[i].is_some()))
        .collect();
    if complete.len() < MIN_PANEL_ROWS {
        return Err(Error::TooFewObservations {
            required: MIN_PANEL_ROWS,
            found: complete.len(),
        });
    }

    let columns = kept
        .into_iter()
        .map(|(name, col)| Series {
            name,
            values: complete.iter().map(|&i| col[i].unwrap()).collect(),
        })
        .collect();
    let labels = complete.iter().map(|&i| labels[i].clone()).collect();

    let mut panel = PricePanel::new(labels, columns, market)?;
    panel.dropped = dropped;
    panel.rows_removed = total - complete.len();
    Ok(panel)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transform {
    #[default]
    Levels,
    LogReturns,
}

impl Transform {
    pub fn apply(self, series: &Series) -> Result<Vec<f64>> {
        match self {
            Transform::Levels => Ok(series.values.clone()),
            Transform::LogReturns => {
                if let Some((row, &value)) =
                    series.values.iter().enumerate().find(|(_, v)| **v <= 0.0)
                {
                    return Err(Error::NonPositivePrice {
                        column: series.name.clone(),
                        row,
                        value,
                    });
                }
                Ok(series
                    .values
                    .windows(2)
                    .map(|w| (w[1] / w[0]).ln())
                    .collect())
            }
        }
    }
}

/// Mean-centered market (`x`) and asset (`y`) observations.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariatePairs {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub asset_name: String,
    pub market_name: String,
}

impl BivariatePairs {
    /// Centers both series and pairs them.
    pub fn centered(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(x.len(), y.len()));
        }
        if x.len() < MIN_PAIRS {
            return Err(Error::TooFewObservations {
                required: MIN_PAIRS,
                found: x.len(),
            });
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            x: center(x),
            y: center(y),
            asset_name: "y".to_string(),
            market_name: "x".to_string(),
        })
    }

    pub fn with_names(mut self, asset: impl Into<String>, market: impl Into<String>) -> Self {
        self.asset_name = asset.into();
        self.market_name = market.into();
        self
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Same pairs with the roles of market and asset exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
            asset_name: self.market_name.clone(),
            market_name: self.asset_name.clone(),
        }
    }
}

/// Mean computed around the first element, so constant input yields exact zeros.
pub(crate) fn shifted_mean(values: &[f64]) -> f64 {
    let pivot = values[0];
    pivot + values.iter().map(|v| v - pivot).sum::<f64>() / values.len() as f64
}

fn center(values: &[f64]) -> Vec<f64> {
    let mean = shifted_mean(values);
    values.iter().map(|v| v - mean).collect()
}

pub fn make_pairs(panel: &PricePanel, asset: &str, transform: Transform) -> Result<BivariatePairs> {
    if asset == panel.market_name() {
        return Err(Error::AssetIsMarket(asset.to_string()));
    }
    let series = panel
        .column(asset)
        .ok_or_else(|| Error::MissingColumn(asset.to_string()))?;
    let x = transform.apply(panel.market())?;
    let y = transform.apply(series)?;
    Ok(BivariatePairs::centered(&x, &y)?.with_names(asset, panel.market_name()))
}
