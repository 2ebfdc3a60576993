//! Least-quartic regression slopes and bivariate co-moment analysis.
//!
//! The least-quartic (LQ) slope minimizes the mean fourth power of the
//! residuals of `y = b·x + ε` on centered data. Because that loss is a
//! quartic polynomial in `b` whose coefficients are the joint fourth
//! moments of `(x, y)`, the estimator is a closed-form function of the
//! co-kurtosis structure and reduces to the least-squares slope when the
//! pair is bivariate normal.
//!
//! Modules:
//! - [`sample`]: price panels from CSV and centered `(x, y)` pairs
//! - [`moments`]: joint moments, standardized co-moments, summary statistics
//! - [`solver`]: quartic loss, cubic root solving, LQ/LS/Theil–Sen slopes
//! - [`capm`]: per-asset systematic-risk rows and rankings
//! - [`synth`]: seeded generators and a brute-force minimization oracle
//! - [`cli`]: the `lqreg` command-line frontend

pub mod capm;
pub mod cli;
pub mod error;
pub mod moments;
pub mod sample;
pub mod solver;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
pub use moments::{comoment_report, compute_moments, summary_stats, CoMomentReport, MomentSet, SummaryStats};
pub use sample::{load_panel, make_pairs, BivariatePairs, PricePanel, Transform};
pub use solver::{fit_lq, fit_lq_pairs, fit_ls, fit_theil_sen, foc_cubic, quartic_loss, solve_cubic, CubicCoeffs, QuarticFit};
