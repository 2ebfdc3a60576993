//! Seeded synthetic bivariate samples and a brute-force minimization oracle.
//!
//! Random source: ChaCha8 (`rand_chacha`) seeded through
//! `SeedableRng::seed_from_u64`. Uniforms take the top 53 bits of each
//! `u64`; normals come from the Box–Muller transform, both variates of a
//! pair being used. Each call to [`generate`] owns its own stream, so the
//! output is a pure function of the spec.
//!
//! Every non-normal kind is a location mixture: a dominant
//! `N(0, Σ(σx, σy, ρ))` component plus tail components with the same
//! covariance, translated by `t = TAIL_OFFSET` standard deviations:
//!
//! | kind                | tail means (weights)              | signed feature |
//! |---------------------|-----------------------------------|----------------|
//! | `coskew_left_pos`   | `(−tσx, +tσy)` (c)                | λ21 > 0, λ12 < 0 |
//! | `coskew_right_pos`  | `(+tσx, +tσy)` (c)                | λ21 > 0, λ12 > 0 |
//! | `coskew_neg`        | `(−tσx, −tσy)` (c)                | λ21 < 0 |
//! | `cokurt_lepto_pos`  | `±(tσx, tσy)` (c/2 each), c < 1/3 | κ22 > 0, κ31 > 0 |
//! | `cokurt_platy_pos`  | `±(tσx, tσy)` (c/2 each), c > 1/3 | κ22 < 0 |
//! | `cokurt_neg`        | `±(tσx, −tσy)` (c/2 each), c < 1/3| κ31 < 0, κ13 < 0 |
//!
//! The mixture is `Z + B·v` with `B` independent of the Gaussian `Z`, so the
//! joint cumulants of order three and four are those of `B·v` alone:
//! `κ3(Bernoulli(c)) = c(1−c)(1−2c)` fixes the co-skewness signs, and for the
//! symmetric three-point `B`, `κ4 = c − 3c²` fixes the co-kurtosis signs.
//! `outlier_contaminated` instead adds a gross error `N(0, (10σy)²)` to `y`
//! with probability `c`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::moments::MomentSet;
use crate::sample::{BivariatePairs, PricePanel, Series};
use crate::solver::quartic_loss;

/// Tail component offset, in marginal standard deviations.
pub const TAIL_OFFSET: f64 = 3.0;

/// Gross-error scale for `outlier_contaminated`, in units of `σy`.
pub const OUTLIER_SCALE: f64 = 10.0;

/// Bracket width at which [`oracle_grid_min`] stops refining.
pub const ORACLE_BRACKET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    BivariateNormal,
    CoskewLeftPos,
    CoskewRightPos,
    CoskewNeg,
    CokurtLeptoPos,
    CokurtPlatyPos,
    CokurtNeg,
    OutlierContaminated,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 8] = [
        GeneratorKind::BivariateNormal,
        GeneratorKind::CoskewLeftPos,
        GeneratorKind::CoskewRightPos,
        GeneratorKind::CoskewNeg,
        GeneratorKind::CokurtLeptoPos,
        GeneratorKind::CokurtPlatyPos,
        GeneratorKind::CokurtNeg,
        GeneratorKind::OutlierContaminated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorKind::BivariateNormal => "bivariate_normal",
            GeneratorKind::CoskewLeftPos => "coskew_left_pos",
            GeneratorKind::CoskewRightPos => "coskew_right_pos",
            GeneratorKind::CoskewNeg => "coskew_neg",
            GeneratorKind::CokurtLeptoPos => "cokurt_lepto_pos",
            GeneratorKind::CokurtPlatyPos => "cokurt_platy_pos",
            GeneratorKind::CokurtNeg => "cokurt_neg",
            GeneratorKind::OutlierContaminated => "outlier_contaminated",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == name)
    }

    /// Contamination used when none is given.
    pub fn default_contamination(self) -> f64 {
        match self {
            GeneratorKind::BivariateNormal => 0.0,
            GeneratorKind::CokurtPlatyPos => 0.5,
            _ => 0.05,
        }
    }
}

impl std::fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub rho: f64,
    pub contamination: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    /// Unit scales, `ρ = 0.5`, and the kind's default contamination.
    pub fn new(kind: GeneratorKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            sigma_x: 1.0,
            sigma_y: 1.0,
            rho: 0.5,
            contamination: kind.default_contamination(),
            seed,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_sigmas(mut self, sigma_x: f64, sigma_y: f64) -> Self {
        self.sigma_x = sigma_x;
        self.sigma_y = sigma_y;
        self
    }

    pub fn with_contamination(mut self, contamination: f64) -> Self {
        self.contamination = contamination;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n < crate::sample::MIN_PAIRS {
            return invalid(format!("n = {} is too small", self.n));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return invalid(format!("rho = {} outside (-1, 1)", self.rho));
        }
        if !(self.sigma_x > 0.0 && self.sigma_x.is_finite() && self.sigma_y > 0.0 && self.sigma_y.is_finite()) {
            return invalid("standard deviations must be positive and finite".into());
        }
        let c = self.contamination;
        if !(0.0..=0.5).contains(&c) {
            return invalid(format!("contamination = {c} outside [0, 0.5]"));
        }
        match self.kind {
            GeneratorKind::CokurtLeptoPos | GeneratorKind::CokurtNeg if c >= 1.0 / 3.0 => {
                invalid(format!("{} needs contamination below 1/3, got {c}", self.kind))
            }
            GeneratorKind::CokurtPlatyPos if c <= 1.0 / 3.0 => {
                invalid(format!("{} needs contamination above 1/3, got {c}", self.kind))
            }
            _ => Ok(()),
        }
    }
}

/// Uniforms and normals from a ChaCha8 stream.
pub struct Stream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Two independent standard normals.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        (r * theta.cos(), r * theta.sin())
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = self.normal_pair();
        self.spare = Some(b);
        a
    }
}

/// Uncentered draws; see the module docs for the constructions.
pub fn generate_raw(spec: &GeneratorSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    let mut stream = Stream::new(spec.seed);
    let (sx, sy, rho, c) = (spec.sigma_x, spec.sigma_y, spec.rho, spec.contamination);
    let rho_c = (1.0 - rho * rho).sqrt();
    let (tx, ty) = (TAIL_OFFSET * sx, TAIL_OFFSET * sy);

    let mut xs = Vec::with_capacity(spec.n);
    let mut ys = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let u = stream.uniform();
        let (z1, z2) = stream.normal_pair();
        let mut x = sx * z1;
        let mut y = sy * (rho * z1 + rho_c * z2);
        let hit = u < c;
        // lower/upper half of the tail mass for the symmetric kinds
        let sign = if u < c / 2.0 { 1.0 } else { -1.0 };
        match spec.kind {
            GeneratorKind::BivariateNormal => {}
            GeneratorKind::CoskewLeftPos if hit => {
                x -= tx;
                y += ty;
            }
            GeneratorKind::CoskewRightPos if hit => {
                x += tx;
                y += ty;
            }
            GeneratorKind::CoskewNeg if hit => {
                x -= tx;
                y -= ty;
            }
            GeneratorKind::CokurtLeptoPos | GeneratorKind::CokurtPlatyPos if hit => {
                x += sign * tx;
                y += sign * ty;
            }
            GeneratorKind::CokurtNeg if hit => {
                x += sign * tx;
                y -= sign * ty;
            }
            GeneratorKind::OutlierContaminated if hit => {
                y += OUTLIER_SCALE * sy * stream.normal_pair().0;
            }
            _ => {}
        }
        xs.push(x);
        ys.push(y);
    }
    Ok((xs, ys))
}

/// Draws a centered sample.
pub fn generate(spec: &GeneratorSpec) -> Result<BivariatePairs> {
    let (x, y) = generate_raw(spec)?;
    BivariatePairs::centered(&x, &y)
}

/// A synthetic price panel: `market` plus one column per slope.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelSpec {
    pub n_obs: usize,
    pub slopes: Vec<f64>,
    /// Idiosyncratic noise standard deviation, relative to the market's.
    pub noise: f64,
    pub seed: u64,
}

/// Builds a panel whose asset `k` is `level_k + slope_k·(market − level) + noise`.
///
/// The market level is `1000 + 100·z`; asset levels sit far enough above
/// zero that every price stays positive for the default magnitudes.
pub fn synthetic_panel(spec: &PanelSpec) -> Result<PricePanel> {
    if spec.n_obs < crate::sample::MIN_PANEL_ROWS {
        return Err(Error::InvalidSpec(format!("n_obs = {} is too small", spec.n_obs)));
    }
    let mut stream = Stream::new(spec.seed);
    let deviations: Vec<f64> = (0..spec.n_obs).map(|_| 100.0 * stream.normal()).collect();
    let mut columns = vec![Series {
        name: "market".to_string(),
        values: deviations.iter().map(|d| 1000.0 + d).collect(),
    }];
    for (k, &slope) in spec.slopes.iter().enumerate() {
        let level = 1000.0 * (1.0 + slope.abs()) + 10.0 * k as f64;
        let values = deviations
            .iter()
            .map(|d| level + slope * d + spec.noise * 100.0 * stream.normal())
            .collect();
        columns.push(Series {
            name: format!("asset{:02}", k + 1),
            values,
        });
    }
    let labels = (0..spec.n_obs).map(|i| format!("t{i:04}")).collect();
    PricePanel::new(labels, columns, "market")
}

/// Brute-force minimizer of the quartic loss.
///
/// Scans `[center − half_width, center + half_width]` at `coarse_step`, then
/// ternary-sections the two cells around the best grid point down to a
/// bracket of [`ORACLE_BRACKET`]. The section compares loss values exactly
/// (the moments and the probe points are dyadic rationals), so a flat
/// quartic minimum is located as precisely as a sharp one.
pub fn oracle_grid_min(ms: &MomentSet, center: f64, half_width: f64, coarse_step: f64) -> f64 {
    assert!(half_width > 0.0 && coarse_step > 0.0, "grid must be non-empty");
    let lo = center - half_width;
    let steps = (2.0 * half_width / coarse_step).ceil() as usize;
    let at = |i: usize| (lo + i as f64 * coarse_step).min(center + half_width);

    let mut best = 0;
    let mut best_loss = f64::INFINITY;
    for i in 0..=steps {
        let l = quartic_loss(ms, at(i));
        if l < best_loss {
            best_loss = l;
            best = i;
        }
    }

    let loss = exact::Quartic::new(ms);
    let mut a = at(best.saturating_sub(1));
    let mut b = at((best + 1).min(steps));
    for _ in 0..200 {
        if b - a <= ORACLE_BRACKET {
            break;
        }
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if m1 <= a || m2 >= b {
            break;
        }
        if loss.less(m1, m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    (a + b) / 2.0
}

/// Exact evaluation of the quartic loss at `f64` arguments.
mod exact {
    use num_bigint::BigInt;
    use std::cmp::Ordering;

    use crate::moments::MomentSet;

    /// `mant · 2^exp`
    #[derive(Clone, Debug)]
    struct Dyadic {
        mant: BigInt,
        exp: i64,
    }

    impl Dyadic {
        fn from_f64(v: f64) -> Self {
            assert!(v.is_finite(), "exact evaluation needs finite input");
            if v == 0.0 {
                return Dyadic { mant: BigInt::from(0), exp: 0 };
            }
            let bits = v.to_bits();
            let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
            let raw_exp = ((bits >> 52) & 0x7ff) as i64;
            let frac = bits & ((1u64 << 52) - 1);
            let (m, e) = if raw_exp == 0 {
                (frac, -1074)
            } else {
                (frac | (1u64 << 52), raw_exp - 1075)
            };
            Dyadic { mant: BigInt::from(m) * sign, exp: e }
        }

        fn mul(&self, other: &Dyadic) -> Dyadic {
            Dyadic { mant: &self.mant * &other.mant, exp: self.exp + other.exp }
        }

        fn scale(&self, k: i64) -> Dyadic {
            Dyadic { mant: &self.mant * k, exp: self.exp }
        }

        fn add(&self, other: &Dyadic) -> Dyadic {
            let exp = self.exp.min(other.exp);
            let align = |d: &Dyadic| &d.mant << ((d.exp - exp) as usize);
            Dyadic { mant: align(self) + align(other), exp }
        }

        fn cmp(&self, other: &Dyadic) -> Ordering {
            let neg = Dyadic { mant: -&other.mant, exp: other.exp };
            self.add(&neg).mant.sign().cmp(&num_bigint::Sign::NoSign)
        }
    }

    pub struct Quartic {
        coeffs: [Dyadic; 5],
    }

    impl Quartic {
        pub fn new(ms: &MomentSet) -> Self {
            let d = Dyadic::from_f64;
            Quartic {
                coeffs: [
                    d(ms.mu04),
                    d(ms.mu13).scale(-4),
                    d(ms.mu22).scale(6),
                    d(ms.mu31).scale(-4),
                    d(ms.mu40),
                ],
            }
        }

        fn eval(&self, b: f64) -> Dyadic {
            let b = Dyadic::from_f64(b);
            let mut acc = self.coeffs[4].clone();
            for c in self.coeffs[..4].iter().rev() {
                acc = acc.mul(&b).add(c);
            }
            acc
        }

        /// `l(u) < l(v)`, decided exactly.
        pub fn less(&self, u: f64, v: f64) -> bool {
            self.eval(u).cmp(&self.eval(v)) == Ordering::Less
        }
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{comoment_report, compute_moments};

    #[test]
    fn same_spec_same_sample() {
        let spec = GeneratorSpec::new(GeneratorKind::CokurtNeg, 500, 7);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert!(a.x.iter().zip(&b.x).all(|(p, q)| p.to_bits() == q.to_bits()));
        assert!(a.y.iter().zip(&b.y).all(|(p, q)| p.to_bits() == q.to_bits()));
        let c = generate(&GeneratorSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn uniform_is_in_unit_interval() {
        let mut s = Stream::new(1);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let base = GeneratorSpec::new(GeneratorKind::BivariateNormal, 100, 1);
        assert!(generate(&base.with_rho(1.0)).is_err());
        assert!(generate(&base.with_rho(-1.5)).is_err());
        assert!(generate(&base.with_contamination(0.6)).is_err());
        assert!(generate(&base.with_sigmas(0.0, 1.0)).is_err());
        let lepto = GeneratorSpec::new(GeneratorKind::CokurtLeptoPos, 100, 1);
        assert!(generate(&lepto.with_contamination(0.4)).is_err());
        let platy = GeneratorSpec::new(GeneratorKind::CokurtPlatyPos, 100, 1);
        assert!(generate(&platy.with_contamination(0.2)).is_err());
        assert!(generate(&platy).is_ok());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in GeneratorKind::ALL {
            assert_eq!(GeneratorKind::parse(k.as_str()), Some(k));
        }
        assert_eq!(GeneratorKind::parse("gaussian"), None);
    }

    #[test]
    fn normal_sample_correlation() {
        let spec = GeneratorSpec::new(GeneratorKind::BivariateNormal, 200_000, 11).with_rho(0.6);
        let r = comoment_report(&compute_moments(&generate(&spec).unwrap())).unwrap();
        assert!((0.58..=0.62).contains(&r.rho), "{}", r.rho);
    }

    #[test]
    fn left_coskew_sign() {
        let spec = GeneratorSpec::new(GeneratorKind::CoskewLeftPos, 50_000, 3);
        let r = comoment_report(&compute_moments(&generate(&spec).unwrap())).unwrap();
        assert!(r.lambda21 > 0.05, "{r:?}");
    }

    #[test]
    fn lepto_cokurt_sign() {
        let spec = GeneratorSpec::new(GeneratorKind::CokurtLeptoPos, 50_000, 3);
        let r = comoment_report(&compute_moments(&generate(&spec).unwrap())).unwrap();
        assert!(r.kappa22 > 0.0, "{r:?}");
    }

    #[test]
    fn oracle_examples() {
        let ms = compute_moments(&BivariatePairs::centered(&[-2.0, -1.0, 1.0, 2.0], &[-4.0, -2.0, 2.0, 4.0]).unwrap());
        assert!((oracle_grid_min(&ms, 2.0, 10.0, 1e-3) - 2.0).abs() <= 1e-9);
        assert!((oracle_grid_min(&ms, 0.3, 10.0, 1e-3) - 2.0).abs() <= 1e-9);

        let ms = compute_moments(&BivariatePairs::centered(&[-1.0, 0.0, 1.0], &[-1.0, 1.0, 0.0]).unwrap());
        assert!((oracle_grid_min(&ms, 0.5, 10.0, 1e-3) - 0.5).abs() <= 1e-9);

        let ms = MomentSet::gaussian(1.0, 2.0, 0.5);
        assert!((oracle_grid_min(&ms, 1.0, 10.0, 1e-3) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn synthetic_panel_shape() {
        let panel = synthetic_panel(&PanelSpec {
            n_obs: 50,
            slopes: vec![0.5, 2.0, -1.0],
            noise: 0.1,
            seed: 1,
        })
        .unwrap();
        assert_eq!(panel.columns().len(), 4);
        assert_eq!(panel.len(), 50);
        assert!(panel.columns().iter().all(|c| c.values.iter().all(|v| *v > 0.0)));
    }
}
