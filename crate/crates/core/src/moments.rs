//! Bivariate central moments up to total order four, standardized
//! co-moments, and univariate summary statistics.
//!
//! Every moment uses the averaged convention `(1/n) Σ x^r y^s` over
//! centered data. Raw sums differ only by the factor `n`, which cancels in
//! every ratio and in the first-order condition of the quartic loss.

use crate::error::{Error, Result};
use crate::sample::{shifted_mean, BivariatePairs};

/// Relative threshold below which `μ30` / `μ40` are treated as zero when
/// forming the systematic ratios.
pub const SYS_RATIO_EPS: f64 = 1e-12;

/// Averaged central moments `μ_{r,s}` with `r + s ≤ 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub n: usize,
    pub mu20: f64,
    pub mu02: f64,
    pub mu11: f64,
    pub mu30: f64,
    pub mu03: f64,
    pub mu21: f64,
    pub mu12: f64,
    pub mu40: f64,
    pub mu04: f64,
    pub mu31: f64,
    pub mu13: f64,
    pub mu22: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl MomentSet {
    /// Population moments of a bivariate normal with the given scales and
    /// correlation.
    pub fn gaussian(sigma_x: f64, sigma_y: f64, rho: f64) -> Self {
        let (sx2, sy2) = (sigma_x * sigma_x, sigma_y * sigma_y);
        Self {
            n: 0,
            mu20: sx2,
            mu02: sy2,
            mu11: rho * sigma_x * sigma_y,
            mu30: 0.0,
            mu03: 0.0,
            mu21: 0.0,
            mu12: 0.0,
            mu40: 3.0 * sx2 * sx2,
            mu04: 3.0 * sy2 * sy2,
            mu31: 3.0 * rho * sx2 * sigma_x * sigma_y,
            mu13: 3.0 * rho * sigma_x * sy2 * sigma_y,
            mu22: sx2 * sy2 * (1.0 + 2.0 * rho * rho),
            sigma_x,
            sigma_y,
        }
    }

    /// Either marginal has zero spread.
    pub fn is_degenerate(&self) -> bool {
        !(self.sigma_x > 0.0 && self.sigma_y > 0.0)
    }

    /// Moments of `(y, x)`.
    pub fn swapped(&self) -> Self {
        Self {
            n: self.n,
            mu20: self.mu02,
            mu02: self.mu20,
            mu11: self.mu11,
            mu30: self.mu03,
            mu03: self.mu30,
            mu21: self.mu12,
            mu12: self.mu21,
            mu40: self.mu04,
            mu04: self.mu40,
            mu31: self.mu13,
            mu13: self.mu31,
            mu22: self.mu22,
            sigma_x: self.sigma_y,
            sigma_y: self.sigma_x,
        }
    }

    /// Moments of `(a·x, c·y)`.
    pub fn scaled(&self, a: f64, c: f64) -> Self {
        let m = |v: f64, r: i32, s: i32| v * a.powi(r) * c.powi(s);
        Self {
            n: self.n,
            mu20: m(self.mu20, 2, 0),
            mu02: m(self.mu02, 0, 2),
            mu11: m(self.mu11, 1, 1),
            mu30: m(self.mu30, 3, 0),
            mu03: m(self.mu03, 0, 3),
            mu21: m(self.mu21, 2, 1),
            mu12: m(self.mu12, 1, 2),
            mu40: m(self.mu40, 4, 0),
            mu04: m(self.mu04, 0, 4),
            mu31: m(self.mu31, 3, 1),
            mu13: m(self.mu13, 1, 3),
            mu22: m(self.mu22, 2, 2),
            sigma_x: self.sigma_x * a.abs(),
            sigma_y: self.sigma_y * c.abs(),
        }
    }
}

/// Computes all averaged central moments in one pass over centered pairs.
///
/// Degenerate input (a constant series) is not an error here; check
/// [`MomentSet::is_degenerate`].
pub fn compute_moments(pairs: &BivariatePairs) -> MomentSet {
    let mut s = [0.0f64; 12];
    for (&x, &y) in pairs.x.iter().zip(&pairs.y) {
        let (x2, y2) = (x * x, y * y);
        s[0] += x2;
        s[1] += y2;
        s[2] += x * y;
        s[3] += x2 * x;
        s[4] += y2 * y;
        s[5] += x2 * y;
        s[6] += x * y2;
        s[7] += x2 * x2;
        s[8] += y2 * y2;
        s[9] += x2 * x * y;
        s[10] += x * y2 * y;
        s[11] += x2 * y2;
    }
    let n = pairs.n();
    let inv = 1.0 / n as f64;
    let [mu20, mu02, mu11, mu30, mu03, mu21, mu12, mu40, mu04, mu31, mu13, mu22] = s.map(|v| v * inv);
    MomentSet {
        n,
        mu20,
        mu02,
        mu11,
        mu30,
        mu03,
        mu21,
        mu12,
        mu40,
        mu04,
        mu31,
        mu13,
        mu22,
        sigma_x: mu20.sqrt(),
        sigma_y: mu02.sqrt(),
    }
}

/// Standardized co-moments, systematic ratios and excesses over the
/// bivariate-normal values at the same `(σx, σy, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoMomentReport {
    pub rho: f64,
    pub lambda21: f64,
    pub lambda12: f64,
    pub lambda31: f64,
    pub lambda13: f64,
    pub lambda22: f64,
    /// `μ21 / μ30`; zero when undefined.
    pub sys_coskew: f64,
    /// `μ31 / μ40`; zero when undefined.
    pub sys_cokurt: f64,
    pub kappa13: f64,
    pub kappa31: f64,
    pub kappa22: f64,
    pub sys_coskew_defined: bool,
    pub sys_cokurt_defined: bool,
}

pub fn comoment_report(ms: &MomentSet) -> Result<CoMomentReport> {
    if ms.is_degenerate() {
        return Err(Error::Degenerate("zero standard deviation"));
    }
    let (sx, sy) = (ms.sigma_x, ms.sigma_y);
    let rho = (ms.mu11 / (sx * sy)).clamp(-1.0, 1.0);
    let lambda = |mu: f64, r: i32, s: i32| mu / (sx.powi(r) * sy.powi(s));

    let sys_coskew_defined = ms.mu30.abs() >= SYS_RATIO_EPS * sx.powi(3);
    let sys_cokurt_defined = ms.mu40.abs() >= SYS_RATIO_EPS * sx.powi(4);

    Ok(CoMomentReport {
        rho,
        lambda21: lambda(ms.mu21, 2, 1),
        lambda12: lambda(ms.mu12, 1, 2),
        lambda31: lambda(ms.mu31, 3, 1),
        lambda13: lambda(ms.mu13, 1, 3),
        lambda22: lambda(ms.mu22, 2, 2),
        sys_coskew: if sys_coskew_defined { ms.mu21 / ms.mu30 } else { 0.0 },
        sys_cokurt: if sys_cokurt_defined { ms.mu31 / ms.mu40 } else { 0.0 },
        kappa13: ms.mu13 - 3.0 * rho * sx * sy.powi(3),
        kappa31: ms.mu31 - 3.0 * rho * sx.powi(3) * sy,
        kappa22: ms.mu22 - sx * sx * sy * sy * (1.0 + 2.0 * rho * rho),
        sys_coskew_defined,
        sys_cokurt_defined,
    })
}

/// Univariate summary of one series (population convention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub st_dev: f64,
    /// `st_dev / |mean|`; `None` for a zero mean.
    pub cv: Option<f64>,
    /// The mean was negative, so `cv` is reported as an absolute value.
    pub negative_mean: bool,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub z_skew: f64,
    pub z_kurt: f64,
}

pub fn summary_stats(values: &[f64]) -> Result<SummaryStats> {
    let n = values.len();
    if n < crate::sample::MIN_PAIRS {
        return Err(Error::TooFewObservations {
            required: crate::sample::MIN_PAIRS,
            found: n,
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mean = shifted_mean(values);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let nf = n as f64;
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    if m2 <= 0.0 {
        return Err(Error::Degenerate("zero variance"));
    }
    let st_dev = m2.sqrt();
    let skewness = m3 / (m2 * st_dev);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    Ok(SummaryStats {
        n,
        mean,
        variance: m2,
        st_dev,
        cv: (mean != 0.0).then(|| st_dev / mean.abs()),
        negative_mean: mean < 0.0,
        skewness,
        excess_kurtosis,
        z_skew: skewness / (6.0 / nf).sqrt(),
        z_kurt: excess_kurtosis / (24.0 / nf).sqrt(),
    })
}
