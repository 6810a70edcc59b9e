//! Natural boundary operators of the free plate under tension, applied to
//! separated modes `j_l(ar) Y_l` and `i_l(br) Y_l` on the unit sphere.
//!
//! With `K = l(l+d-2)` and `b^2 = a^2 + tau`:
//!
//! ```text
//! M j = (1-s) a^2 j''(a) - s a^2 j(a)
//! M i = (1-s) b^2 i''(b) + s b^2 i(b)
//! V j =  a b^2 j'(a) + (1-s) K (a j'(a) - j(a))
//! V i = -a^2 b i'(b) + (1-s) K (b i'(b) - i(b))
//! W   = M j * V i - M i * V j
//! ```
//!
//! `W` and `gamma` are returned in logarithmic scale: both factor as a
//! positive prefactor times a ratio of moderate numbers, which keeps the sign
//! exact when the factors are far outside the `f64` range (tiny `a`, huge `b`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special_functions::{i_jet, j_jet, Jet, ScaledValue};

/// Distance kept from the closed ends of the Poisson-ratio window.
pub const SIGMA_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateParams {
    pub d: u32,
    pub tau: f64,
    pub sigma: f64,
}

impl PlateParams {
    /// Parameters in the open window `-1/(d-1) < sigma < 1`, `tau > 0`.
    pub fn new(d: u32, tau: f64, sigma: f64) -> Result<Self> {
        let p = Self::closed(d, tau, sigma)?;
        if sigma <= sigma_floor(d) || sigma >= 1.0 {
            return Err(Error::InvalidParams(format!(
                "sigma = {sigma} outside ({}, 1) for d = {d}",
                sigma_floor(d)
            )));
        }
        Ok(p)
    }

    /// Parameters on the closed window `[-1/(d-1), 1]`; the endpoints are
    /// only meaningful for the boundary algebra, not for solving.
    pub fn closed(d: u32, tau: f64, sigma: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParams(format!("dimension d = {d} < 2")));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParams(format!("tension tau = {tau} must be positive")));
        }
        if !sigma.is_finite() || sigma < sigma_floor(d) || sigma > 1.0 {
            return Err(Error::InvalidParams(format!(
                "sigma = {sigma} outside [{}, 1] for d = {d}",
                sigma_floor(d)
            )));
        }
        Ok(Self { d, tau, sigma })
    }

    pub fn alpha(&self) -> f64 {
        self.sigma.abs()
    }

    /// Eigenvalue `l(l+d-2)` of minus the spherical Laplacian.
    pub fn k_l(&self, l: u32) -> f64 {
        angular_eigenvalue(self.d, l)
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::closed(self.d, self.tau, sigma)
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::closed(self.d, tau, self.sigma)
    }
}

pub fn angular_eigenvalue(d: u32, l: u32) -> f64 {
    (l as f64) * (l as f64 + d as f64 - 2.0)
}

/// Lower end `-1/(d-1)` of the Poisson-ratio window.
pub fn sigma_floor(d: u32) -> f64 {
    -1.0 / (d as f64 - 1.0)
}

/// The two ends of the window pulled inward by [`SIGMA_GUARD`].
pub fn sigma_extremes(d: u32) -> (f64, f64) {
    (sigma_floor(d) + SIGMA_GUARD, 1.0 - SIGMA_GUARD)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePoint {
    pub l: u32,
    pub a: f64,
    pub b: f64,
    pub k_l: f64,
}

impl ModePoint {
    pub fn new(l: u32, a: f64, params: &PlateParams) -> Self {
        Self {
            l,
            a,
            b: (a * a + params.tau).sqrt(),
            k_l: params.k_l(l),
        }
    }
}

/// All four boundary quantities at one mode point, each divided by the
/// positive prefactor of its Bessel branch.
///
/// The oscillatory branch carries `exp(ln_j)` and the modified branch
/// `exp(ln_i)`; for instance `M j = exp(ln_j) * mj`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryState {
    pub point: ModePoint,
    pub sigma: f64,
    pub mj: f64,
    pub vj: f64,
    pub mi: f64,
    pub vi: f64,
    pub ln_j: f64,
    pub ln_i: f64,
    pub j: Jet,
    pub i: Jet,
}

impl BoundaryState {
    pub fn new(l: u32, a: f64, params: &PlateParams) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Domain(format!("mode parameter a = {a} must be positive")));
        }
        let point = ModePoint::new(l, a, params);
        let b = point.b;
        let s = params.sigma;
        let k = point.k_l;
        let j = j_jet(params.d, l, a)?;
        let i = i_jet(params.d, l, b)?;
        let (a2, b2) = (a * a, b * b);
        let [j0, j1, j2, ..] = j.terms;
        let [i0, i1, i2, ..] = i.terms;
        // z^m f^{(m)}(z) = prefactor * terms[m]
        let mj = (1.0 - s) * j2 - s * a2 * j0;
        let vj = b2 * j1 + (1.0 - s) * k * (j1 - j0);
        let mi = (1.0 - s) * i2 + s * b2 * i0;
        let vi = -a2 * i1 + (1.0 - s) * k * (i1 - i0);
        Ok(Self {
            point,
            sigma: s,
            mj,
            vj,
            mi,
            vi,
            ln_j: j.ln_prefactor(),
            ln_i: i.ln_prefactor(),
            j,
            i,
        })
    }

    pub fn w(&self) -> ScaledValue {
        ScaledValue::new(self.mj * self.vi - self.mi * self.vj, self.ln_j + self.ln_i)
    }

    pub fn gamma(&self) -> Result<ScaledValue> {
        if self.mi == 0.0 || !self.mi.is_finite() {
            return Err(Error::SingularDenominator(format!(
                "l = {}, a = {}, b = {}, sigma = {}",
                self.point.l, self.point.a, self.point.b, self.sigma
            )));
        }
        Ok(ScaledValue::new(-self.mj / self.mi, self.ln_j - self.ln_i))
    }

    /// `gamma * exp(ln_i - ln_j)`, the mixing coefficient in units where both
    /// branches carry the same prefactor.
    pub fn gamma_normalized(&self) -> Result<f64> {
        Ok(self.gamma()?.mantissa)
    }

    /// `V` of the mixed mode `j + gamma i` at the boundary, relative to its
    /// largest constituent term.
    pub fn v_residual(&self) -> Result<f64> {
        let g = self.gamma_normalized()?;
        let (a, b) = (self.point.a, self.point.b);
        let (s, k) = (self.sigma, self.point.k_l);
        let [j0, j1, ..] = self.j.terms;
        let [i0, i1, ..] = self.i.terms;
        let terms = [
            b * b * j1,
            (1.0 - s) * k * (j1 - j0),
            -g * a * a * i1,
            g * (1.0 - s) * k * (i1 - i0),
        ];
        let total: f64 = terms.iter().sum();
        let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        Ok(if scale == 0.0 { 0.0 } else { total.abs() / scale })
    }

    /// `M` of the mixed mode relative to its larger term.
    pub fn m_residual(&self) -> Result<f64> {
        let g = self.gamma_normalized()?;
        let total = self.mj + g * self.mi;
        let scale = self.mj.abs().max((g * self.mi).abs());
        Ok(if scale == 0.0 { 0.0 } else { total.abs() / scale })
    }
}

/// `(1-s) a^2 j_l''(a) - s a^2 j_l(a)`.
pub fn m_of_j(l: u32, a: f64, params: &PlateParams) -> Result<f64> {
    let j = j_jet(params.d, l, a)?;
    let s = params.sigma;
    Ok(a * a * ((1.0 - s) * j.derivative(2) - s * j.derivative(0)))
}

/// `(1-s) b^2 i_l''(b) + s b^2 i_l(b)` at scale `b`.
pub fn m_of_i(l: u32, b: f64, params: &PlateParams) -> Result<ScaledValue> {
    let i = i_jet(params.d, l, b)?;
    let s = params.sigma;
    let mant = b * b * ((1.0 - s) * i.scaled(2).mantissa + s * i.scaled(0).mantissa);
    Ok(ScaledValue::new(mant, b))
}

/// `a b^2 j_l'(a) + (1-s) K_l (a j_l'(a) - j_l(a))`.
pub fn v_of_j(l: u32, a: f64, params: &PlateParams) -> Result<f64> {
    let j = j_jet(params.d, l, a)?;
    let b2 = a * a + params.tau;
    let (j0, j1) = (j.derivative(0), j.derivative(1));
    Ok(a * b2 * j1 + (1.0 - params.sigma) * params.k_l(l) * (a * j1 - j0))
}

/// `-a^2 b i_l'(b) + (1-s) K_l (b i_l'(b) - i_l(b))` at scale `b`.
pub fn v_of_i(l: u32, a: f64, params: &PlateParams) -> Result<ScaledValue> {
    let b = (a * a + params.tau).sqrt();
    let i = i_jet(params.d, l, b)?;
    let (i0, i1) = (i.scaled(0).mantissa, i.scaled(1).mantissa);
    let mant = -a * a * b * i1 + (1.0 - params.sigma) * params.k_l(l) * (b * i1 - i0);
    Ok(ScaledValue::new(mant, b))
}

/// Characteristic function `W_l(a)`; its sign is exact even when its
/// magnitude is outside the `f64` range.
pub fn w(l: u32, a: f64, params: &PlateParams) -> Result<ScaledValue> {
    Ok(BoundaryState::new(l, a, params)?.w())
}

/// Mode coefficient `gamma = -M j / M i`.
pub fn gamma(l: u32, a: f64, params: &PlateParams) -> Result<f64> {
    Ok(BoundaryState::new(l, a, params)?.gamma()?.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::{eval_i, eval_j, p11, BesselQuery};

    fn jv(d: u32, l: u32, m: u32, z: f64) -> f64 {
        eval_j(BesselQuery::new(d, l, m, z)).unwrap()
    }

    fn iv(d: u32, l: u32, m: u32, z: f64) -> f64 {
        eval_i(BesselQuery::new(d, l, m, z)).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn bending_operator_against_finite_differences() {
        // independent route: second derivative from a five-point stencil
        let (a, s, h) = (1.0, 0.3, 1e-3);
        let f = |z: f64| jv(3, 1, 0, z);
        let d2 = (-f(a + 2.0 * h) + 16.0 * f(a + h) - 30.0 * f(a) + 16.0 * f(a - h)
            - f(a - 2.0 * h))
            / (12.0 * h * h);
        let expected = (1.0 - s) * a * a * d2 - s * a * a * f(a);
        let p = PlateParams::new(3, 1.0, s).unwrap();
        assert!((m_of_j(1, a, &p).unwrap() - expected).abs() < 1e-8);
    }

    #[test]
    fn window_validation() {
        assert!(PlateParams::new(3, 1.0, 0.3).is_ok());
        assert!(PlateParams::new(3, 1.0, -0.5).is_err());
        assert!(PlateParams::new(3, 1.0, 1.0).is_err());
        assert!(PlateParams::new(2, 1.0, 1.5).is_err());
        assert!(PlateParams::new(3, 0.0, 0.0).is_err());
        assert!(PlateParams::new(1, 1.0, 0.0).is_err());
        assert!(PlateParams::closed(3, 1.0, -0.5).is_ok());
        assert!(PlateParams::closed(3, 1.0, 1.0).is_ok());
        let (lo, hi) = sigma_extremes(2);
        assert!(PlateParams::new(2, 1.0, lo).is_ok());
        assert!(PlateParams::new(2, 1.0, hi).is_ok());
    }

    #[test]
    fn bending_operator_special_cases() {
        let p = PlateParams::closed(3, 2.0, 1.0).unwrap();
        let a = 1.3;
        assert!(rel(m_of_j(1, a, &p).unwrap(), -a * a * jv(3, 1, 0, a)) < 1e-14);
        let b = (a * a + 2.0f64).sqrt();
        let mi = m_of_i(1, b, &p).unwrap();
        assert!(rel(mi.value(), b * b * iv(3, 1, 0, b)) < 1e-13);

        let p = PlateParams::new(3, 1.0, 0.3).unwrap();
        let expected = 0.7 * jv(3, 1, 2, 1.0) - 0.3 * jv(3, 1, 0, 1.0);
        assert!(rel(m_of_j(1, 1.0, &p).unwrap(), expected) < 1e-14);

        let p = PlateParams::closed(3, 1.0, -0.5).unwrap();
        let b = 1.7;
        let expected = (3.0 * b * b * iv(3, 1, 2, b) - b * b * iv(3, 1, 0, b)) / 2.0;
        assert!(rel(m_of_i(1, b, &p).unwrap().value(), expected) < 1e-13);

        let p = PlateParams::new(3, 1.0, 0.0).unwrap();
        assert!(m_of_i(1, b, &p).unwrap().mantissa > 0.0);
    }

    #[test]
    fn shear_operator_special_cases() {
        let d = 4;
        let p11 = p11(d).unwrap();
        let p = PlateParams::new(d, 3.0, 0.2).unwrap();
        let v = v_of_j(1, p11, &p).unwrap();
        let expected = -(1.0 - 0.2) * (d as f64 - 1.0) * jv(d, 1, 0, p11);
        assert!((v - expected).abs() < 1e-12 * expected.abs());

        let p = PlateParams::closed(d, 3.0, 1.0).unwrap();
        let a = 0.9;
        let expected = a * (a * a + 3.0) * jv(d, 1, 1, a);
        assert!(rel(v_of_j(1, a, &p).unwrap(), expected) < 1e-14);

        // l = 0: j_0' = -j_1, so V j = -a b^2 j_1(a).
        let p = PlateParams::new(d, 3.0, 0.2).unwrap();
        let expected = -a * (a * a + 3.0) * jv(d, 1, 0, a);
        assert!(rel(v_of_j(0, a, &p).unwrap(), expected) < 1e-13);
    }

    #[test]
    fn normalized_state_matches_direct_operators() {
        let p = PlateParams::new(3, 4.0, 0.25).unwrap();
        for l in 0..4 {
            for a in [0.3, 1.1, 2.0] {
                let st = BoundaryState::new(l, a, &p).unwrap();
                let b = st.point.b;
                let direct_w = m_of_j(l, a, &p).unwrap() * v_of_i(l, a, &p).unwrap().value()
                    - m_of_i(l, b, &p).unwrap().value() * v_of_j(l, a, &p).unwrap();
                assert!(rel(st.w().value(), direct_w) < 1e-11, "l={l} a={a}");
                let direct_g = -m_of_j(l, a, &p).unwrap() / m_of_i(l, b, &p).unwrap().value();
                assert!(rel(gamma(l, a, &p).unwrap(), direct_g) < 1e-12);
            }
        }
    }

    #[test]
    fn fundamental_characteristic_positive_at_p11() {
        for d in [2, 3, 4, 10, 100] {
            let p11 = p11(d).unwrap();
            for tau in [1e-3, 1.0, 1e3] {
                let (lo, hi) = sigma_extremes(d);
                for s in [lo, 0.0, 0.4, hi] {
                    let p = PlateParams::new(d, tau, s).unwrap();
                    assert!(w(1, p11, &p).unwrap().mantissa > 0.0, "d={d} tau={tau} s={s}");
                    assert!(w(1, 1e-4 * p11, &p).unwrap().mantissa < 0.0);
                }
            }
        }
    }

    #[test]
    fn radially_symmetric_mode_has_no_root() {
        let p = PlateParams::new(3, 1.0, 0.3).unwrap();
        assert!(w(0, 1.0, &p).unwrap().mantissa > 0.0);
    }

    #[test]
    fn gamma_at_window_ends() {
        let d = 3;
        let (a, tau) = (1.2f64, 2.0);
        let b = (a * a + tau).sqrt();
        let p = PlateParams::closed(d, tau, 1.0).unwrap();
        let expected = a * a * jv(d, 1, 0, a) / (b * b * iv(d, 1, 0, b));
        assert!(rel(gamma(1, a, &p).unwrap(), expected) < 1e-13);

        let p = PlateParams::new(d, tau, 0.0).unwrap();
        let expected = -a * a * jv(d, 1, 2, a) / (b * b * iv(d, 1, 2, b));
        assert!(expected > 0.0);
        assert!(rel(gamma(1, a, &p).unwrap(), expected) < 1e-13);

        let p = PlateParams::closed(d, tau, sigma_floor(d)).unwrap();
        let expected = a * a * jv(d, 2, 1, a) / (b * b * iv(d, 2, 1, b));
        assert!(rel(gamma(1, a, &p).unwrap(), expected) < 1e-12);
    }

    #[test]
    fn extreme_scales_keep_sign() {
        let p = PlateParams::new(100, 1e-10, sigma_extremes(100).0).unwrap();
        let v = w(5, 1e-20, &p).unwrap();
        assert!(v.mantissa < 0.0 && v.ln_abs() < -700.0);
        let p = PlateParams::new(2, 1e9, 0.3).unwrap();
        let v = w(1, 1.0, &p).unwrap();
        assert!(v.mantissa.is_finite());
        assert!(v.scale > 700.0);
    }
}
