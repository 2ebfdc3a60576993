//! Batch systematic-risk analysis of a price panel against its market column.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moments::{comoment_report, compute_moments, summary_stats, CoMomentReport, SummaryStats};
use crate::sample::{make_pairs, BivariatePairs, PricePanel, Transform};
use crate::solver::{fit_lq_with_data, fit_ls, fit_theil_sen, SolverPath};

/// Relative size below which `b_LS` is treated as zero in [`delta_pct`].
pub const DELTA_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AnalysisOptions {
    pub transform: Transform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowFlag {
    Degenerate,
    SysRatioUndefined,
    ThreeRoots,
}

impl RowFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RowFlag::Degenerate => "degenerate",
            RowFlag::SysRatioUndefined => "sys_ratio_undefined",
            RowFlag::ThreeRoots => "three_roots",
        }
    }
}

/// One asset's co-moment and slope summary.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetRow {
    pub asset_name: String,
    pub n: usize,
    pub corr: f64,
    pub lambda12: f64,
    pub lambda21: f64,
    pub lambda13: f64,
    pub lambda22: f64,
    pub lambda31: f64,
    pub b_ls: f64,
    pub b_lq: f64,
    pub b_ts: f64,
    /// `(b_lq − b_ls)/b_ls × 100`; zero when `delta_defined` is false.
    pub delta_pct: f64,
    pub delta_defined: bool,
    pub n_real_roots: usize,
    pub solver_path: SolverPath,
    pub flags: Vec<RowFlag>,
    pub comoments: CoMomentReport,
}

impl AssetRow {
    pub fn slope(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Ls => self.b_ls,
            Criterion::Lq => self.b_lq,
            Criterion::Ts => self.b_ts,
        }
    }
}

/// An asset whose analysis failed; kept in place of its row.
#[derive(Debug)]
pub struct AssetError {
    pub asset_name: String,
    pub flags: Vec<RowFlag>,
    pub error: Error,
}

pub type AssetResult = std::result::Result<AssetRow, AssetError>;

/// Signed percentage gap of the LQ slope over the LS slope.
///
/// `None` when `b_ls` is zero relative to the magnitude of the two slopes.
pub fn delta_pct(b_ls: f64, b_lq: f64) -> Option<f64> {
    let scale = b_ls.abs().max(b_lq.abs());
    if !b_ls.is_finite() || !b_lq.is_finite() || b_ls.abs() <= DELTA_EPS * scale {
        return None;
    }
    Some((b_lq - b_ls) / b_ls * 100.0)
}

pub fn analyze_pairs(pairs: &BivariatePairs) -> AssetResult {
    let fail = |flags: Vec<RowFlag>, error: Error| AssetError {
        asset_name: pairs.asset_name.clone(),
        flags,
        error,
    };
    let ms = compute_moments(pairs);
    if ms.is_degenerate() {
        return Err(fail(vec![RowFlag::Degenerate], Error::Degenerate("zero standard deviation")));
    }
    let report = comoment_report(&ms).map_err(|e| fail(vec![RowFlag::Degenerate], e))?;
    let b_ls = fit_ls(&ms).map_err(|e| fail(vec![RowFlag::Degenerate], e))?;
    let fit = fit_lq_with_data(&ms, pairs).map_err(|e| fail(vec![RowFlag::Degenerate], e))?;
    let b_ts = fit_theil_sen(pairs).map_err(|e| fail(vec![RowFlag::Degenerate], e))?;
    let delta = delta_pct(b_ls, fit.b_lq);

    let mut flags = Vec::new();
    if !report.sys_coskew_defined || !report.sys_cokurt_defined {
        flags.push(RowFlag::SysRatioUndefined);
    }
    if fit.n_real_roots == 3 {
        flags.push(RowFlag::ThreeRoots);
    }
    Ok(AssetRow {
        asset_name: pairs.asset_name.clone(),
        n: ms.n,
        corr: report.rho,
        lambda12: report.lambda12,
        lambda21: report.lambda21,
        lambda13: report.lambda13,
        lambda22: report.lambda22,
        lambda31: report.lambda31,
        b_ls,
        b_lq: fit.b_lq,
        b_ts,
        delta_pct: delta.unwrap_or(0.0),
        delta_defined: delta.is_some(),
        n_real_roots: fit.n_real_roots,
        solver_path: fit.solver_path,
        flags,
        comoments: report,
    })
}

pub fn analyze_asset(panel: &PricePanel, asset: &str, options: &AnalysisOptions) -> AssetResult {
    let pairs = make_pairs(panel, asset, options.transform).map_err(|error| AssetError {
        asset_name: asset.to_string(),
        flags: Vec::new(),
        error,
    })?;
    analyze_pairs(&pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Criterion {
    Ls,
    #[default]
    Lq,
    Ts,
}

impl Criterion {
    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Ls => "ls",
            Criterion::Lq => "lq",
            Criterion::Ts => "ts",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingEntry {
    pub rank: usize,
    pub asset_name: String,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable {
    pub criterion: Criterion,
    pub entries: Vec<RankingEntry>,
}

/// Top `top_n` assets by slope, descending; equal slopes in name order.
pub fn rank_assets<'a>(
    rows: impl IntoIterator<Item = &'a AssetRow>,
    criterion: Criterion,
    top_n: usize,
) -> Result<RankingTable> {
    let mut scored: Vec<(f64, &str)> = rows
        .into_iter()
        .map(|r| (r.slope(criterion), r.asset_name.as_str()))
        .collect();
    if scored.is_empty() {
        return Err(Error::NoValidRows);
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let entries = scored
        .into_iter()
        .take(top_n)
        .enumerate()
        .map(|(i, (slope, name))| RankingEntry {
            rank: i + 1,
            asset_name: name.to_string(),
            slope,
        })
        .collect();
    Ok(RankingTable { criterion, entries })
}

#[derive(Debug)]
pub struct SeriesSummary {
    pub name: String,
    pub stats: Result<SummaryStats>,
}

/// Summary statistics for every series plus one analysis row per asset.
#[derive(Debug)]
pub struct Report {
    pub market: SeriesSummary,
    /// Non-market series, panel column order.
    pub assets: Vec<SeriesSummary>,
    /// Panel column order, failures kept in place.
    pub rows: Vec<AssetResult>,
}

impl Report {
    pub fn valid_rows(&self) -> impl Iterator<Item = &AssetRow> {
        self.rows.iter().filter_map(|r| r.as_ref().ok())
    }

    pub fn ranking(&self, criterion: Criterion, top_n: usize) -> Result<RankingTable> {
        rank_assets(self.valid_rows(), criterion, top_n)
    }
}

fn summarize(panel: &PricePanel, name: &str, transform: Transform) -> SeriesSummary {
    let series = panel.column(name).expect("panel column");
    SeriesSummary {
        name: name.to_string(),
        stats: transform.apply(series).and_then(|v| summary_stats(&v)),
    }
}

/// Analyzes every non-market column; assets are processed in parallel and
/// reassembled in panel order.
pub fn build_report(panel: &PricePanel, options: &AnalysisOptions) -> Report {
    let names: Vec<&str> = panel.assets().map(|s| s.name.as_str()).collect();
    let rows = names
        .par_iter()
        .map(|name| analyze_asset(panel, name, options))
        .collect();
    Report {
        market: summarize(panel, panel.market_name(), options.transform),
        assets: names
            .iter()
            .map(|name| summarize(panel, name, options.transform))
            .collect(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Series;

    fn panel(cols: Vec<(&str, Vec<f64>)>) -> PricePanel {
        let n = cols[0].1.len();
        PricePanel::new(
            (0..n).map(|i| i.to_string()).collect(),
            cols.into_iter()
                .map(|(name, values)| Series {
                    name: name.to_string(),
                    values,
                })
                .collect(),
            "M",
        )
        .unwrap()
    }

    fn market() -> Vec<f64> {
        vec![10.0, 12.0, 9.0, 14.0, 11.0, 13.0, 8.0, 15.0]
    }

    #[test]
    fn delta_from_published_slopes() {
        assert!((delta_pct(1.625, 1.051).unwrap() - -35.3231).abs() < 1e-3);
        assert!((delta_pct(14.936, 15.568).unwrap() - 4.2314).abs() < 1e-3);
        assert_eq!(delta_pct(0.7, 0.7), Some(0.0));
        assert_eq!(delta_pct(0.0, 0.4), None);
        assert_eq!(delta_pct(0.0, 0.0), None);
    }

    #[test]
    fn near_exact_line() {
        let m = market();
        let wiggle = [1e-4, -2e-4, 0.0, 1e-4, -1e-4, 2e-4, 0.0, -1e-4];
        let a: Vec<f64> = m.iter().zip(wiggle).map(|(v, e)| 2.0 * v + 3.0 + e).collect();
        let row = analyze_asset(&panel(vec![("M", m), ("A", a)]), "A", &AnalysisOptions::default()).unwrap();
        assert!(row.corr > 0.999999);
        assert!((row.b_ls - 2.0).abs() < 1e-3);
        assert!((row.b_lq - 2.0).abs() < 1e-3);
        assert!(row.delta_defined && row.delta_pct.abs() <= 1.0);
    }

    #[test]
    fn market_copy_has_unit_slopes() {
        let m = market();
        let row = analyze_asset(&panel(vec![("M", m.clone()), ("A", m)]), "A", &AnalysisOptions::default()).unwrap();
        assert!((row.corr - 1.0).abs() < 1e-15);
        assert!((row.b_ls - 1.0).abs() < 1e-15);
        assert!((row.b_lq - 1.0).abs() < 1e-12);
        assert!(row.delta_pct.abs() < 1e-9);
        assert!(row.flags.contains(&RowFlag::ThreeRoots));
    }

    #[test]
    fn constant_asset_is_an_error_row() {
        let err = analyze_asset(
            &panel(vec![("M", market()), ("A", vec![5.0; 8])]),
            "A",
            &AnalysisOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err.flags, vec![RowFlag::Degenerate]);
        assert_eq!(err.asset_name, "A");
    }

    fn row(name: &str, b_lq: f64) -> AssetRow {
        let mut r = analyze_asset(
            &panel(vec![("M", market()), ("A", market())]),
            "A",
            &AnalysisOptions::default(),
        )
        .unwrap();
        r.asset_name = name.to_string();
        r.b_lq = b_lq;
        r
    }

    #[test]
    fn ranking_rules() {
        let rows = vec![row("a", 3.0), row("b", 1.0), row("c", 2.0)];
        let t = rank_assets(&rows, Criterion::Lq, 2).unwrap();
        let names: Vec<_> = t.entries.iter().map(|e| e.asset_name.as_str()).collect();
        assert_eq!(names, ["a", "c"]);
        assert_eq!(t.entries[0].rank, 1);
        assert_eq!(t.entries[1].rank, 2);

        assert_eq!(rank_assets(&rows, Criterion::Lq, 10).unwrap().entries.len(), 3);

        let tied = vec![row("zeta", 2.0), row("alpha", 2.0), row("mid", 1.0)];
        let t = rank_assets(&tied, Criterion::Lq, 3).unwrap();
        assert_eq!(t.entries[0].asset_name, "alpha");
        assert_eq!(t.entries[1].asset_name, "zeta");

        assert!(matches!(rank_assets(&[], Criterion::Ls, 3), Err(Error::NoValidRows)));
    }

    #[test]
    fn report_keeps_order_and_isolates_failures() {
        let m = market();
        let a: Vec<f64> = m.iter().map(|v| 0.5 * v + 1.0).collect();
        let c: Vec<f64> = m.iter().rev().cloned().collect();
        let p = panel(vec![("A", a), ("M", m), ("B", vec![2.0; 8]), ("C", c)]);
        let report = build_report(&p, &AnalysisOptions::default());
        let names: Vec<_> = report
            .rows
            .iter()
            .map(|r| match r {
                Ok(row) => row.asset_name.clone(),
                Err(e) => e.asset_name.clone(),
            })
            .collect();
        assert_eq!(names, ["A", "B", "C"]);
        assert!(report.rows[1].is_err());
        assert_eq!(report.valid_rows().count(), 2);
        assert_eq!(report.market.name, "M");
        assert!(report.assets[1].stats.is_err());
    }
}
