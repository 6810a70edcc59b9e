//! Fundamental tone of the unit ball and first roots of the characteristic
//! functions `W_l`.

use serde::{Deserialize, Serialize};

use crate::boundary_operators::{BoundaryState, PlateParams};
use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, DEFAULT_NODES};
use crate::roots::brent;
use crate::special_functions::{j_jet, p11, ScaledValue, Z_MAX};

/// Absolute tolerance on the root `a`.
pub const ROOT_TOL: f64 = 1e-13;
/// Default number of uniform scan points in [`first_root`].
pub const SCAN_POINTS: usize = 2000;
const LOG_SCAN_POINTS: usize = 240;
const MAX_REFINEMENTS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub d: u32,
    pub tau: f64,
    pub sigma: f64,
    pub radius: f64,
    pub l: u32,
    pub a: f64,
    pub b: f64,
    /// Mode coefficient; underflows for very large tension, where
    /// `gamma_scaled` is the usable form.
    pub gamma: f64,
    pub gamma_scaled: ScaledValue,
    pub omega: f64,
    pub residual_m: f64,
    pub residual_v: f64,
}

impl SpectralPoint {
    pub fn params(&self) -> PlateParams {
        PlateParams {
            d: self.d,
            tau: self.tau,
            sigma: self.sigma,
        }
    }
}

/// Signed characteristic value in a form that is continuous in `a` and
/// has the sign of `W_l(a)`.
fn w_mantissa(l: u32, a: f64, params: &PlateParams) -> Result<f64> {
    Ok(BoundaryState::new(l, a, params)?.w().mantissa)
}

/// Solves for the root `a` of `W_l` and assembles the mode record.
pub fn spectral_point(l: u32, a: f64, params: &PlateParams) -> Result<SpectralPoint> {
    let st = BoundaryState::new(l, a, params)?;
    let g = st.gamma()?;
    Ok(SpectralPoint {
        d: params.d,
        tau: params.tau,
        sigma: params.sigma,
        radius: 1.0,
        l,
        a,
        b: st.point.b,
        gamma: g.value(),
        gamma_scaled: g,
        omega: a * a * (a * a + params.tau),
        residual_m: st.m_residual()?,
        residual_v: st.v_residual()?,
    })
}

/// Lower end of the `a` window implied by `omega >= tau * p11^2`.
pub fn a_lower_bound(d: u32, tau: f64) -> Result<f64> {
    let mu = membrane_tone(d)?;
    // a^2 = (-tau + sqrt(tau^2 + 4 tau mu)) / 2, written without cancellation
    Ok((2.0 * tau * mu / (tau + (tau * tau + 4.0 * tau * mu).sqrt())).sqrt())
}

/// Smallest root of `W_1` in `(0, p11)`, the fundamental tone of the unit ball.
pub fn fundamental_tone(params: &PlateParams) -> Result<SpectralPoint> {
    let d = params.d;
    let hi = p11(d)?;
    let mut lo = (0.5 * a_lower_bound(d, params.tau)?).min(0.5 * hi);
    let mut trace = Vec::new();
    let mut f_lo = w_mantissa(1, lo, params)?;
    trace.push((lo, f_lo));
    while f_lo >= 0.0 && lo > 1e-10 * hi {
        lo *= 0.1;
        f_lo = w_mantissa(1, lo, params)?;
        trace.push((lo, f_lo));
    }
    let f_hi = w_mantissa(1, hi, params)?;
    let ratio = (hi / lo).ln();
    let mut prev = (lo, f_lo);
    for k in 1..=LOG_SCAN_POINTS {
        let a = if k == LOG_SCAN_POINTS {
            hi
        } else {
            lo * (ratio * k as f64 / LOG_SCAN_POINTS as f64).exp()
        };
        let fa = if k == LOG_SCAN_POINTS { f_hi } else { w_mantissa(1, a, params)? };
        trace.push((a, fa));
        if prev.1 < 0.0 && fa >= 0.0 {
            let root = if fa == 0.0 {
                a
            } else {
                brent(|x| w_mantissa(1, x, params).unwrap_or(f64::NAN), prev.0, a, ROOT_TOL)?
            };
            return spectral_point(1, root, params);
        }
        prev = (a, fa);
    }
    Err(Error::NoSignChange {
        context: format!(
            "W_1 on ({lo}, {hi}) for d = {d}, tau = {}, sigma = {}",
            params.tau, params.sigma
        ),
        trace,
    })
}

/// Smallest sign change of `W_l` on `(0, a_max]` from a uniform scan of
/// `n` points with bisection refinement; `None` when the scan finds none.
///
/// The grid is doubled (up to three times) when `|W_l|` shows an isolated
/// dip far below its neighbours, which is the footprint of a close pair of
/// roots straddling no grid point.
pub fn first_root_with(l: u32, params: &PlateParams, a_max: f64, n: usize) -> Result<Option<f64>> {
    if !(a_max > 0.0) {
        return Err(Error::Domain(format!("a_max = {a_max} must be positive")));
    }
    if a_max > Z_MAX {
        return Err(Error::ArgumentCap { z: a_max, cap: Z_MAX });
    }
    let mut n = n.max(16);
    for round in 0..=MAX_REFINEMENTS {
        let grid: Vec<f64> = (1..=n).map(|k| a_max * k as f64 / n as f64).collect();
        let vals: Vec<ScaledValue> = grid
            .iter()
            .map(|&a| BoundaryState::new(l, a, params).map(|s| s.w()))
            .collect::<Result<_>>()?;
        for k in 1..n {
            let (s0, s1) = (vals[k - 1].signum(), vals[k].signum());
            if s0 == 0.0 {
                return Ok(Some(grid[k - 1]));
            }
            if s1 != 0.0 && s0 != s1 {
                let root = brent(
                    |x| w_mantissa(l, x, params).unwrap_or(f64::NAN),
                    grid[k - 1],
                    grid[k],
                    ROOT_TOL,
                )?;
                return Ok(Some(root));
            }
            if s1 == 0.0 {
                return Ok(Some(grid[k]));
            }
        }
        if round == MAX_REFINEMENTS || !has_suspicious_dip(&vals) {
            break;
        }
        n *= 2;
    }
    Ok(None)
}

pub fn first_root(l: u32, params: &PlateParams, a_max: f64) -> Result<Option<f64>> {
    first_root_with(l, params, a_max, SCAN_POINTS)
}

/// Interior local minimum of `ln|W|` more than `ln 1e3` below both neighbours
/// and below the running median.
fn has_suspicious_dip(vals: &[ScaledValue]) -> bool {
    let logs: Vec<f64> = vals.iter().map(|v| v.ln_abs()).collect();
    let mut sorted: Vec<f64> = logs.iter().copied().filter(|x| x.is_finite()).collect();
    if sorted.len() < 3 {
        return false;
    }
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let drop = 1e3f64.ln();
    logs.windows(3).any(|w| {
        w[1] < w[0] - drop && w[1] < w[2] - drop && w[1] < median - drop
    })
}

/// Fundamental tone of the ball of radius `radius` via the scaling law
/// `omega(tau, R) = R^-4 omega(R^2 tau, 1)`.
pub fn tone_for_radius(params: &PlateParams, radius: f64) -> Result<SpectralPoint> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Domain(format!("radius = {radius} must be positive")));
    }
    let unit = PlateParams::new(params.d, radius * radius * params.tau, params.sigma)?;
    let mut sp = fundamental_tone(&unit)?;
    sp.tau = params.tau;
    sp.radius = radius;
    sp.a /= radius;
    sp.b /= radius;
    sp.omega /= radius.powi(4);
    Ok(sp)
}

/// `p11^2`, the first nonzero free-membrane tone of the unit ball.
pub fn membrane_tone(d: u32) -> Result<f64> {
    let p = p11(d)?;
    Ok(p * p)
}

/// Bending quotient of the membrane mode `j_1(p11 r)` on the unit ball.
pub fn membrane_mode_constant(params: &PlateParams) -> Result<f64> {
    membrane_mode_constant_with(params, DEFAULT_NODES)
}

pub fn membrane_mode_constant_with(params: &PlateParams, nodes: usize) -> Result<f64> {
    let d = params.d;
    let p = p11(d)?;
    let s = params.sigma;
    let dm1 = d as f64 - 1.0;
    let gl = GaussLegendre::new(nodes);
    let (mut num, mut den) = (0.0, 0.0);
    for (r, w) in gl.mapped(0.0, 1.0) {
        let z = p * r;
        let j1 = j_jet(d, 1, z)?;
        let j2 = j_jet(d, 2, z)?.derivative(0);
        let rho = j1.derivative(0);
        let rho2 = p * p * j1.derivative(2);
        // (rho - r rho') / r^2 = p j_2(p r) / r
        let q = p * j2 / r;
        let lap = -p * p * rho;
        let weight = w * r.powi(d as i32 - 1);
        num += weight * ((1.0 - s) * (rho2 * rho2 + 3.0 * dm1 * q * q) + s * lap * lap);
        den += weight * rho * rho;
    }
    Ok(num / den)
}

/// `(tau p11^2, tau (d+2))`, the sandwich for the fundamental tone.
pub fn omega_bounds(d: u32, tau: f64) -> Result<(f64, f64)> {
    Ok((tau * membrane_tone(d)?, tau * (d as f64 + 2.0)))
}
