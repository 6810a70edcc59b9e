//! Evidence suites: each check returns [`VerdictRecord`]s with worst margins.

pub mod bessel;
pub mod boundary;
pub mod domains;
pub mod polynomials;
pub mod profile;
pub mod spectrum;

pub use boundary::{sigma_shape_scan, small_a_sign_scan};
pub use polynomials::{polynomial_ledger, regime_bounds, RegimeBounds};

use serde::{Deserialize, Serialize};

use crate::boundary_operators::{sigma_extremes, PlateParams, SIGMA_GUARD};
use crate::error::{Error, Result};
use crate::verdict::{params, VerdictRecord};

/// Which Poisson ratios a scan visits for each dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SigmaSet {
    /// Both guarded ends of the window and zero.
    Extremes,
    Explicit(Vec<f64>),
}

impl SigmaSet {
    pub fn values(&self, d: u32) -> Vec<f64> {
        match self {
            SigmaSet::Extremes => {
                let (lo, hi) = sigma_extremes(d);
                vec![lo, 0.0, hi]
            }
            SigmaSet::Explicit(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub dims: Vec<u32>,
    pub tau_grid: Vec<f64>,
    pub sigma_set: SigmaSet,
    pub l_max: u32,
    pub points_per_axis: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 3, 4, 10, 100],
            tau_grid: log_space(1e-3, 1e3, 7),
            sigma_set: SigmaSet::Extremes,
            l_max: 5,
            points_per_axis: 50,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidParams(format!("dims {:?} must be nonempty and >= 2", self.dims)));
        }
        if self.tau_grid.is_empty()
            || self.tau_grid.iter().any(|&t| !(t > 0.0) || !t.is_finite())
            || self.tau_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidParams(
                "tau grid must be positive and strictly increasing".into(),
            ));
        }
        if self.l_max < 2 {
            return Err(Error::InvalidParams(format!("l_max = {} must be >= 2", self.l_max)));
        }
        if self.points_per_axis < 2 {
            return Err(Error::InvalidParams("points_per_axis must be >= 2".into()));
        }
        if let SigmaSet::Explicit(v) = &self.sigma_set {
            for &d in &self.dims {
                let (lo, hi) = sigma_extremes(d);
                if v.iter().any(|&s| s < lo - SIGMA_GUARD || s > hi + SIGMA_GUARD) {
                    return Err(Error::InvalidParams(format!("sigma set {v:?} leaves the window for d = {d}")));
                }
            }
        }
        Ok(())
    }
}

/// `n` log-spaced points from `lo` to `hi`, both ends exact.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| match k {
            0 => lo,
            k if k + 1 == n => hi,
            k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// `(d, tau, sigma)` as a verdict parameter list.
pub fn params_of(p: &PlateParams) -> Vec<(String, f64)> {
    params(&[("d", p.d as f64), ("tau", p.tau), ("sigma", p.sigma)])
}

/// Named groups of checks, as selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    All,
    Bessel,
    Boundary,
    Spectrum,
    Profile,
    Polynomials,
    Monotonicity,
    Rearrangement,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "bessel" => Suite::Bessel,
            "boundary" => Suite::Boundary,
            "spectrum" => Suite::Spectrum,
            "profile" => Suite::Profile,
            "polynomials" => Suite::Polynomials,
            "monotonicity" => Suite::Monotonicity,
            "rearrangement" => Suite::Rearrangement,
            other => return Err(Error::InvalidParams(format!("unknown suite '{other}'"))),
        })
    }
}

/// Tensions for the monotonicity suite when points are given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TauChoice {
    /// The built-in branch coverage.
    Branches,
    /// Tensions below `tau_max(a^2)` at the solved point.
    Small,
    /// Tensions at or above `tau_max(a^2)`.
    Large,
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub dims: Vec<u32>,
    /// Suite-specific grid size; `None` uses each suite's default.
    pub resolution: Option<usize>,
    /// Explicit Poisson ratios for the monotonicity suite.
    pub sigmas: Option<Vec<f64>>,
    pub tau: TauChoice,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { dims: vec![2, 3, 4, 10, 100], resolution: None, sigmas: None, tau: TauChoice::Branches }
    }
}

const SMALL_TAUS: [f64; 6] = [0.05, 0.1, 0.2, 0.5, 1.0, 2.0];
const LARGE_TAUS: [f64; 4] = [5.0, 10.0, 20.0, 50.0];

/// Monotonicity points for explicit `sigma`/`tau` requests. Small and large
/// tension are judged against `tau_max(a^2)` at the solved point, so
/// candidates on the wrong side are dropped; `sigma >= 0` has no such split
/// and keeps every candidate.
pub fn monotonicity_points(dims: &[u32], sigmas: &[f64], tau: &TauChoice) -> Result<Vec<PlateParams>> {
    let mut out = Vec::new();
    for &d in dims {
        for &s in sigmas {
            let cands: Vec<f64> = match tau {
                TauChoice::Branches | TauChoice::Small => SMALL_TAUS.to_vec(),
                TauChoice::Large => LARGE_TAUS.to_vec(),
                TauChoice::Values(v) => v.clone(),
            };
            for t in cands {
                let p = PlateParams::new(d, t, s)?;
                let keep = match tau {
                    TauChoice::Small | TauChoice::Large if s < 0.0 => {
                        let a = crate::ball_spectrum::fundamental_tone(&p)?.a;
                        let large = t >= regime_bounds(d, s)?.tau_max(a * a);
                        large == matches!(tau, TauChoice::Large)
                    }
                    _ => true,
                };
                if keep {
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}

/// Runs one suite (or all of them) and returns every verdict in a fixed order.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<VerdictRecord>> {
    let dims = &opts.dims;
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidParams(format!("dims {dims:?} must be nonempty and >= 2")));
    }
    let small: Vec<u32> = dims.iter().copied().filter(|&d| d <= 3).collect();
    Ok(match suite {
        Suite::All => {
            let mut out = Vec::new();
            for s in [
                Suite::Bessel,
                Suite::Boundary,
                Suite::Spectrum,
                Suite::Profile,
                Suite::Polynomials,
                Suite::Monotonicity,
                Suite::Rearrangement,
            ] {
                out.extend(run_suite(s, opts)?);
            }
            out
        }
        Suite::Bessel => bessel::run(dims, opts.resolution.unwrap_or(200))?,
        Suite::Boundary => {
            let cfg = ScanConfig {
                dims: dims.clone(),
                points_per_axis: opts.resolution.unwrap_or(50),
                ..ScanConfig::default()
            };
            boundary::run(&cfg)?
        }
        Suite::Spectrum => spectrum::run(dims)?,
        Suite::Profile => profile::sign_suite(&spectrum::solve_grid(&spectrum::sandwich_grid(dims)?)?)?,
        Suite::Polynomials => {
            let mut out = Vec::new();
            for &d in dims {
                for mut r in polynomial_ledger(d, opts.resolution.unwrap_or(400))? {
                    if !r.params.iter().any(|(k, _)| k == "d") {
                        r.params.insert(0, ("d".into(), d as f64));
                    }
                    out.push(r);
                }
            }
            out
        }
        Suite::Monotonicity => {
            let grid = opts.resolution.unwrap_or(2000);
            let branches = match (&opts.sigmas, &opts.tau) {
                (None, TauChoice::Branches) => profile::theorem_branches()
                    .into_iter()
                    .map(|mut b| {
                        b.points.retain(|p| dims.contains(&p.d) || (p.d >= 4 && dims.iter().any(|&d| d >= 4)));
                        b
                    })
                    .filter(|b| !b.points.is_empty())
                    .collect(),
                (sig, tau) => {
                    let sig = sig.clone().unwrap_or_else(|| vec![0.0]);
                    vec![profile::Branch { name: "requested".into(), points: monotonicity_points(dims, &sig, tau)? }]
                }
            };
            profile::monotonicity_suite(&branches, grid)?
        }
        Suite::Rearrangement => {
            if small.is_empty() {
                return Err(Error::UnsupportedDomain("rearrangement needs d = 2 or 3".into()));
            }
            domains::rearrangement_suite(&domains::rearrangement_points(&small))?
        }
    })
}
