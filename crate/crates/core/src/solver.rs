//! Least-quartic slope estimation.
//!
//! On centered data the quartic loss `l(b) = (1/n) Σ (y_i − b·x_i)⁴` expands
//! into a polynomial whose coefficients are the fourth-order moments. Its
//! critical points are the real roots of the cubic
//! `μ40·b³ − 3μ31·b² + 3μ22·b − μ13`, and since `μ40 > 0` the loss is
//! coercive, so the global minimum is attained at one of them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moments::{compute_moments, MomentSet};
use crate::sample::BivariatePairs;

/// Relative size of the depressed-cubic invariants below which roots are
/// merged into a multiple root.
pub const MULTIPLE_ROOT_TOL: f64 = 1e-12;

/// Relative loss difference under which two critical points count as tied.
pub const LOSS_TIE_TOL: f64 = 1e-12;

/// `c3·b³ + c2·b² + c1·b + c0`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl CubicCoeffs {
    pub fn new(c3: f64, c2: f64, c1: f64, c0: f64) -> Self {
        Self { c3, c2, c1, c0 }
    }

    pub fn eval(&self, b: f64) -> f64 {
        ((self.c3 * b + self.c2) * b + self.c1) * b + self.c0
    }

    pub fn derivative(&self, b: f64) -> f64 {
        (3.0 * self.c3 * b + 2.0 * self.c2) * b + self.c1
    }

    pub fn max_abs(&self) -> f64 {
        self.c3
            .abs()
            .max(self.c2.abs())
            .max(self.c1.abs())
            .max(self.c0.abs())
    }

    /// `|cubic(b)|` relative to the coefficient and argument magnitudes.
    pub fn scaled_residual(&self, b: f64) -> f64 {
        let scale = self.max_abs() * b.abs().max(1.0).powi(3);
        if scale == 0.0 {
            0.0
        } else {
            self.eval(b).abs() / scale
        }
    }
}

/// A distinct real root and its multiplicity (1, 2 or 3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicRoot {
    pub value: f64,
    pub multiplicity: u8,
}

/// Distinct real roots in increasing order.
pub fn solve_cubic(c: &CubicCoeffs) -> Result<Vec<f64>> {
    Ok(cubic_roots(c)?.into_iter().map(|r| r.value).collect())
}

/// Real roots with multiplicities, in increasing order.
///
/// The cubic is made monic and depressed, with all quantities expressed in
/// units of a root-magnitude bound so that the invariants `p`, `q` are of
/// order one. One real root uses Cardano's formula with a sign-aware real
/// cube root; three real roots use the trigonometric form. Multiple roots
/// are recognised when the invariants (triple) or the discriminant (double)
/// vanish within [`MULTIPLE_ROOT_TOL`]. Every root is then polished: simple
/// roots by Newton on the cubic, double roots by Newton on its derivative,
/// triple roots by the inflection point.
pub fn cubic_roots(c: &CubicCoeffs) -> Result<Vec<CubicRoot>> {
    if c.c3 == 0.0 || !c.c3.is_finite() {
        return Err(Error::NotCubic);
    }
    if ![c.c2, c.c1, c.c0].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite cubic coefficient".into()));
    }
    let a = c.c2 / c.c3;
    let b = c.c1 / c.c3;
    let d = c.c0 / c.c3;
    let inflection = -a / 3.0;

    let scale = (a.abs() / 3.0).max(b.abs().sqrt()).max(d.abs().cbrt());
    if scale == 0.0 {
        return Ok(vec![CubicRoot {
            value: 0.0,
            multiplicity: 3,
        }]);
    }
    let (an, bn, dn) = (a / scale, b / scale / scale, d / scale / scale / scale);
    let p = bn - an * an / 3.0;
    let q = 2.0 * an * an * an / 27.0 - an * bn / 3.0 + dn;

    if p.abs() <= MULTIPLE_ROOT_TOL && q.abs() <= MULTIPLE_ROOT_TOL {
        return Ok(vec![CubicRoot {
            value: polish_triple(c),
            multiplicity: 3,
        }]);
    }

    let half_q2 = (q / 2.0) * (q / 2.0);
    let third_p3 = (p / 3.0).powi(3);
    let disc = half_q2 + third_p3;
    let to_x = |u: f64| scale * u + inflection;

    let mut roots = if disc.abs() <= MULTIPLE_ROOT_TOL * (half_q2 + third_p3.abs()) {
        let double = to_x(-1.5 * q / p);
        let simple = to_x(3.0 * q / p);
        vec![
            CubicRoot {
                value: polish_double(c, double),
                multiplicity: 2,
            },
            CubicRoot {
                value: polish_simple(c, simple),
                multiplicity: 1,
            },
        ]
    } else if disc > 0.0 {
        let big = -q.signum() * (q.abs() / 2.0 + disc.sqrt()).cbrt();
        let small = if big == 0.0 { 0.0 } else { -p / (3.0 * big) };
        vec![CubicRoot {
            value: polish_simple(c, to_x(big + small)),
            multiplicity: 1,
        }]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let cos3 = (1.5 * q / p * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let theta = cos3.acos() / 3.0;
        (0..3)
            .map(|k| {
                let u = r * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
                CubicRoot {
                    value: polish_simple(c, to_x(u)),
                    multiplicity: 1,
                }
            })
            .collect()
    };
    roots.sort_by(|l, r| l.value.total_cmp(&r.value));
    roots.dedup_by(|later, earlier| {
        if later.value == earlier.value {
            earlier.multiplicity += later.multiplicity;
            true
        } else {
            false
        }
    });
    Ok(roots)
}

fn newton(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mut x: f64) -> f64 {
    let mut fx = f(x);
    for _ in 0..4 {
        let slope = df(x);
        if fx == 0.0 || slope == 0.0 || !slope.is_finite() {
            break;
        }
        let next = x - fx / slope;
        let f_next = f(next);
        if !(f_next.abs() < fx.abs()) {
            break;
        }
        x = next;
        fx = f_next;
    }
    x
}

fn polish_simple(c: &CubicCoeffs, x: f64) -> f64 {
    newton(|b| c.eval(b), |b| c.derivative(b), x)
}

fn polish_double(c: &CubicCoeffs, x: f64) -> f64 {
    newton(|b| c.derivative(b), |b| 6.0 * c.c3 * b + 2.0 * c.c2, x)
}

fn polish_triple(c: &CubicCoeffs) -> f64 {
    -c.c2 / (3.0 * c.c3)
}

/// Quartic loss from the moments:
/// `μ40·b⁴ − 4μ31·b³ + 6μ22·b² − 4μ13·b + μ04`.
///
/// Accepts any coefficients, including ones no real data could produce.
pub fn quartic_loss(ms: &MomentSet, b: f64) -> f64 {
    (((ms.mu40 * b - 4.0 * ms.mu31) * b + 6.0 * ms.mu22) * b - 4.0 * ms.mu13) * b + ms.mu04
}

/// Loss evaluated directly from the residuals `y_i − b·x_i`.
pub fn quartic_loss_data(pairs: &BivariatePairs, b: f64) -> f64 {
    let sum: f64 = pairs
        .x
        .iter()
        .zip(&pairs.y)
        .map(|(x, y)| {
            let e = y - b * x;
            let e2 = e * e;
            e2 * e2
        })
        .sum();
    sum / pairs.n() as f64
}

/// First-order condition; `l'(b) = 4·cubic(b)`.
pub fn foc_cubic(ms: &MomentSet) -> Result<CubicCoeffs> {
    if !(ms.mu40 > 0.0) {
        return Err(Error::Degenerate("fourth moment of the market is zero"));
    }
    Ok(CubicCoeffs::new(
        ms.mu40,
        -3.0 * ms.mu31,
        3.0 * ms.mu22,
        -ms.mu13,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    ClosedFormSingleRoot,
    ThreeRootsArgmin,
}

impl SolverPath {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverPath::ClosedFormSingleRoot => "closed_form_single_root",
            SolverPath::ThreeRootsArgmin => "three_roots_argmin",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub b: f64,
    /// `3μ40·b² − 6μ31·b + 3μ22`, i.e. `l''(b)/4`. Positive at a local minimum.
    pub second_derivative: f64,
    pub loss: f64,
    pub multiplicity: u8,
}

impl CriticalPoint {
    pub fn is_local_min(&self) -> bool {
        match self.multiplicity {
            // l' does not change sign through a double root
            2 => false,
            // through a triple root it does, from negative to positive
            3 => true,
            _ => self.second_derivative > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuarticFit {
    pub b_lq: f64,
    pub loss_at_min: f64,
    /// Distinct critical points in increasing order of `b`.
    pub critical_points: Vec<CriticalPoint>,
    /// Real roots of the first-order cubic counted with multiplicity: 1 or 3.
    pub n_real_roots: usize,
    pub solver_path: SolverPath,
    /// `|cubic(b_lq)|` relative to the largest coefficient and `max(1,|b_lq|)³`.
    pub residual_foc: f64,
}

impl QuarticFit {
    pub fn minimum(&self) -> &CriticalPoint {
        self.critical_points
            .iter()
            .find(|p| p.b == self.b_lq)
            .expect("minimizer is a critical point")
    }

    /// The minimizer is a triple root of the first-order cubic.
    pub fn is_triple_root(&self) -> bool {
        self.critical_points.len() == 1 && self.critical_points[0].multiplicity == 3
    }
}

/// Least-quartic slope from the moment set.
pub fn fit_lq(ms: &MomentSet) -> Result<QuarticFit> {
    fit_with_loss(ms, |b| quartic_loss(ms, b))
}

/// Least-quartic slope for centered pairs; candidate losses come straight
/// from the residuals, which stays accurate when the fit is nearly exact.
pub fn fit_lq_pairs(pairs: &BivariatePairs) -> Result<QuarticFit> {
    fit_lq_with_data(&compute_moments(pairs), pairs)
}

/// [`fit_lq_pairs`] with the moments already computed from `pairs`.
pub fn fit_lq_with_data(ms: &MomentSet, pairs: &BivariatePairs) -> Result<QuarticFit> {
    fit_with_loss(ms, |b| quartic_loss_data(pairs, b))
}

fn fit_with_loss(ms: &MomentSet, loss: impl Fn(f64) -> f64) -> Result<QuarticFit> {
    let cubic = foc_cubic(ms)?;
    let roots = cubic_roots(&cubic)?;
    let critical_points: Vec<CriticalPoint> = roots
        .iter()
        .map(|r| CriticalPoint {
            b: r.value,
            second_derivative: cubic.derivative(r.value),
            loss: loss(r.value),
            multiplicity: r.multiplicity,
        })
        .collect();

    let best = critical_points
        .iter()
        .copied()
        .reduce(|best, cand| if preferred(&cand, &best) { cand } else { best })
        .expect("a real cubic has a real root");

    let n_real_roots = roots.iter().map(|r| r.multiplicity as usize).sum();
    Ok(QuarticFit {
        b_lq: best.b,
        loss_at_min: best.loss.max(0.0),
        n_real_roots,
        solver_path: if n_real_roots == 1 {
            SolverPath::ClosedFormSingleRoot
        } else {
            SolverPath::ThreeRootsArgmin
        },
        residual_foc: cubic.scaled_residual(best.b),
        critical_points,
    })
}

/// Lower loss wins; near-ties go to the smaller `|b|`, then the smaller `b`.
fn preferred(cand: &CriticalPoint, best: &CriticalPoint) -> bool {
    let tol = LOSS_TIE_TOL * cand.loss.abs().max(best.loss.abs());
    if (cand.loss - best.loss).abs() <= tol {
        match cand.b.abs().total_cmp(&best.b.abs()) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => cand.b < best.b,
        }
    } else {
        cand.loss < best.loss
    }
}

/// Ordinary least-squares slope through the origin of centered data.
pub fn fit_ls(ms: &MomentSet) -> Result<f64> {
    if !(ms.mu20 > 0.0) {
        return Err(Error::Degenerate("zero market variance"));
    }
    Ok(ms.mu11 / ms.mu20)
}

/// Median of all pairwise slopes over pairs with distinct `x`.
pub fn fit_theil_sen(pairs: &BivariatePairs) -> Result<f64> {
    let (x, y) = (&pairs.x, &pairs.y);
    let n = x.len();
    let mut slopes = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[j] - x[i];
            if dx != 0.0 {
                slopes.push((y[j] - y[i]) / dx);
            }
        }
    }
    if slopes.is_empty() {
        return Err(Error::Degenerate("all market values identical"));
    }
    let count = slopes.len();
    let mid = count / 2;
    let (lower, &mut upper, _) = slopes.select_nth_unstable_by(mid, f64::total_cmp);
    if count % 2 == 1 {
        Ok(upper)
    } else {
        let below = lower.iter().copied().max_by(f64::total_cmp).unwrap();
        Ok((below + upper) / 2.0)
    }
}

/// Which form of the radical numerator to use in the closed-form root.
///
/// The printed formula pairs `μ22` with `μ04` in one numerator term and
/// with `μ40` everywhere else; only the `μ40` reading is a root of the
/// first-order cubic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormReading {
    Mu40Consistent,
    AsPrinted,
}

/// Cardano-style radical expression for the real root of the first-order
/// cubic, evaluated with complex intermediates.
///
/// The principal square and cube roots are tried first; if that branch gives
/// a non-real value the other two cube-root branches are tried. Returns
/// `None` when no branch is real to within `1e-8` relative.
pub fn closed_form_root(ms: &MomentSet, reading: ClosedFormReading) -> Option<f64> {
    if !(ms.mu40 > 0.0) {
        return None;
    }
    // the root is invariant to a common factor on all moments
    let m40 = 1.0;
    let m31 = ms.mu31 / ms.mu40;
    let m22 = ms.mu22 / ms.mu40;
    let m13 = ms.mu13 / ms.mu40;
    let m04 = ms.mu04 / ms.mu40;

    let d0 = 9.0 * (m22 * m40 - m31 * m31);
    let d0_num = match reading {
        ClosedFormReading::Mu40Consistent => d0,
        ClosedFormReading::AsPrinted => 9.0 * (m22 * m04 - m31 * m31),
    };
    let d1 = 54.0 * m31.powi(3) - 81.0 * m22 * m31 * m40 + 27.0 * m13 * m40 * m40;
    let root_disc = Complex64::new(4.0 * d0.powi(3) + d1 * d1, 0.0).sqrt();
    let mut rad = d1 + root_disc;
    if rad.norm() < 1e-8 * d1.abs().max(root_disc.norm()) {
        rad = d1 - root_disc;
    }
    if rad.norm() == 0.0 {
        return Some(m31 / m40);
    }

    let cbrt2 = 2f64.cbrt();
    let principal = rad.powf(1.0 / 3.0);
    let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let branch = |r: Complex64| -> Complex64 {
        m31 / m40 - cbrt2 * d0_num / (3.0 * m40 * r) + r / (3.0 * cbrt2 * m40)
    };
    [principal, principal * omega, principal * omega * omega]
        .into_iter()
        .map(branch)
        .find(|z| z.im.abs() <= 1e-8 * z.re.abs().max(1.0))
        .map(|z| z.re)
}

/// Both readings of the closed form, and whether they disagree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormCheck {
    pub consistent: Option<f64>,
    pub as_printed: Option<f64>,
    pub readings_disagree: bool,
}

pub fn closed_form_check(ms: &MomentSet, tol: f64) -> ClosedFormCheck {
    let consistent = closed_form_root(ms, ClosedFormReading::Mu40Consistent);
    let as_printed = closed_form_root(ms, ClosedFormReading::AsPrinted);
    let readings_disagree = match (consistent, as_printed) {
        (Some(a), Some(b)) => (a - b).abs() > tol * a.abs().max(1.0),
        (None, None) => false,
        _ => true,
    };
    ClosedFormCheck {
        consistent,
        as_printed,
        readings_disagree,
    }
}
