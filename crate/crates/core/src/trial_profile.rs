//! The radial trial profile built from the fundamental mode of the ball,
//! extended linearly past the unit sphere, and the pieces of the Rayleigh
//! numerator it generates.
//!
//! Notation: `q = (rho - r rho') / r^2` and `lap = rho'' - (d-1) q`, the
//! radial part of the Laplacian acting on `x_k rho(r) / r`. On `(0, 1]` both
//! are evaluated from Bessel closed forms, so nothing is divided by a small
//! difference near the origin.

use serde::{Deserialize, Serialize};

use crate::ball_spectrum::SpectralPoint;
use crate::boundary_operators::PlateParams;
use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, DEFAULT_NODES};
use crate::roots::bisect;
use crate::special_functions::{i_jet, j_jet, Jet, ScaledValue};
use crate::verdict::{params, VerdictRecord, Worst};

/// Profile values at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalValues {
    pub r: f64,
    pub rho: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// `(rho - r rho') / r^2`.
    pub q: f64,
    /// `q / r`.
    pub q_over_r: f64,
    pub lap: f64,
    pub lap1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumeratorDensity {
    pub n: f64,
    pub h: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub params: PlateParams,
    pub a: f64,
    pub b: f64,
    pub gamma: ScaledValue,
    /// Start of the convex part of `rho` on `(0, 1]`.
    pub r_star: f64,
    edge: LocalValues,
}

impl RadialProfile {
    pub fn from_point(sp: &SpectralPoint) -> Result<Self> {
        Self::new(sp.params(), sp.a, sp.gamma_scaled)
    }

    /// Profile `j_1(a r) + gamma i_1(b r)` for an arbitrary coefficient.
    pub fn new(params: PlateParams, a: f64, gamma: ScaledValue) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Domain(format!("profile needs a > 0, got {a}")));
        }
        let b = (a * a + params.tau).sqrt();
        let mut p = Self {
            params,
            a,
            b,
            gamma,
            r_star: 1.0,
            edge: LocalValues {
                r: 1.0,
                rho: 0.0,
                rho1: 0.0,
                rho2: 0.0,
                q: 0.0,
                q_over_r: 0.0,
                lap: 0.0,
                lap1: 0.0,
            },
        };
        p.edge = p.inner(1.0)?;
        p.r_star = p.locate_r_star()?;
        Ok(p)
    }

    /// `gamma * i^{(m)}(w) / w^k` for the modified branch at `w = b r`, where
    /// `k` counts extra powers of `w` to divide out.
    fn gi(&self, jet: &Jet, m: u32, k: i32) -> f64 {
        let t = jet.terms[m as usize];
        if t == 0.0 || self.gamma.mantissa == 0.0 {
            return 0.0;
        }
        let ln = self.gamma.scale + jet.ln_prefactor() - (m as i32 + k) as f64 * jet.z.ln();
        self.gamma.mantissa * t * ln.exp()
    }

    /// `f(z) / z^k` for the oscillatory branch.
    fn jk(jet: &Jet, k: i32) -> f64 {
        let t = jet.terms[0];
        if t == 0.0 {
            return 0.0;
        }
        t.signum() * (t.abs().ln() + jet.ln_prefactor() - k as f64 * jet.z.ln()).exp()
    }

    fn inner(&self, r: f64) -> Result<LocalValues> {
        let d = self.params.d;
        let (a, b) = (self.a, self.b);
        if r == 0.0 {
            return self.origin();
        }
        let (z, w) = (a * r, b * r);
        let j1 = j_jet(d, 1, z)?;
        let j2 = j_jet(d, 2, z)?;
        let i1 = i_jet(d, 1, w)?;
        let i2 = i_jet(d, 2, w)?;
        let (a2, b2) = (a * a, b * b);
        let rho = j1.derivative(0) + self.gi(&i1, 0, 0);
        let rho1 = a * j1.derivative(1) + b * self.gi(&i1, 1, 0);
        let rho2 = a2 * j1.derivative(2) + b2 * self.gi(&i1, 2, 0);
        // j_1 - z j_1' = z j_2 and i_1 - w i_1' = -w i_2
        let q = a2 * Self::jk(&j2, 1) - b2 * self.gi(&i2, 0, 1);
        let q_over_r = a2 * a * Self::jk(&j2, 2) - b2 * b * self.gi(&i2, 0, 2);
        // radial Laplacian acts as -a^2 on j_1(a r) and +b^2 on i_1(b r)
        let lap = -a2 * j1.derivative(0) + b2 * self.gi(&i1, 0, 0);
        let lap1 = -a2 * a * j1.derivative(1) + b2 * b * self.gi(&i1, 1, 0);
        Ok(LocalValues {
            r,
            rho,
            rho1,
            rho2,
            q,
            q_over_r,
            lap,
            lap1,
        })
    }

    fn origin(&self) -> Result<LocalValues> {
        let d = self.params.d;
        let (a, b) = (self.a, self.b);
        // j_l and i_l share the leading coefficient c_{l,0}
        let c1 = j_jet(d, 1, 0.0)?.derivative(1);
        let c2 = 0.5 * j_jet(d, 2, 0.0)?.derivative(2);
        let g = |p: i32| self.gamma.mantissa * (self.gamma.scale + p as f64 * b.ln()).exp();
        Ok(LocalValues {
            r: 0.0,
            rho: 0.0,
            rho1: c1 * (a + g(1)),
            rho2: 0.0,
            q: 0.0,
            q_over_r: c2 * (a * a * a - g(3)),
            lap: 0.0,
            lap1: c1 * (-a * a * a + g(3)),
        })
    }

    /// Linear extension `rho(1) + (r - 1) rho'(1)`, valid for `r >= 1`.
    pub fn outer(&self, r: f64) -> LocalValues {
        let e = &self.edge;
        let dm1 = self.params.d as f64 - 1.0;
        let rho = e.rho + (r - 1.0) * e.rho1;
        let q = (e.rho - e.rho1) / (r * r);
        LocalValues {
            r,
            rho,
            rho1: e.rho1,
            rho2: 0.0,
            q,
            q_over_r: q / r,
            lap: -dm1 * q,
            lap1: 2.0 * dm1 * q / r,
        }
    }

    /// Values at `r`, using the Bessel form on `[0, 1]` and the extension beyond.
    pub fn local(&self, r: f64) -> Result<LocalValues> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("radius r = {r} must be finite and >= 0")));
        }
        if r <= 1.0 {
            self.inner(r)
        } else {
            Ok(self.outer(r))
        }
    }

    pub fn rho_eval(&self, r: f64, m: u32) -> Result<f64> {
        let v = self.local(r)?;
        match m {
            0 => Ok(v.rho),
            1 => Ok(v.rho1),
            2 => Ok(v.rho2),
            _ => Err(Error::Domain(format!("derivative order {m} > 2"))),
        }
    }

    /// `Delta_r rho` (order 0) or its radial derivative (order 1).
    /// The origin is excluded; see [`Self::radial_laplacian_origin_limit`].
    pub fn radial_laplacian(&self, r: f64, order: u32) -> Result<f64> {
        if r == 0.0 {
            return Err(Error::Domain(
                "radial Laplacian at r = 0; use the origin limit".into(),
            ));
        }
        let v = self.local(r)?;
        match order {
            0 => Ok(v.lap),
            1 => Ok(v.lap1),
            _ => Err(Error::Domain(format!("order {order} > 1"))),
        }
    }

    pub fn radial_laplacian_origin_limit(&self, order: u32) -> Result<f64> {
        let v = self.origin()?;
        match order {
            0 => Ok(v.lap),
            1 => Ok(v.lap1),
            _ => Err(Error::Domain(format!("order {order} > 1"))),
        }
    }

    /// Values at `r = 1` from the Bessel side.
    pub fn edge(&self) -> LocalValues {
        self.edge
    }

    fn locate_r_star(&self) -> Result<f64> {
        if self.edge.rho2 <= 0.0 {
            return Ok(1.0);
        }
        let n = 2048;
        let mut lo = None;
        for k in (1..n).rev() {
            let r = k as f64 / n as f64;
            if self.inner(r)?.rho2 < 0.0 {
                lo = Some(r);
                break;
            }
        }
        let Some(lo) = lo else {
            return Ok(f64::MIN_POSITIVE);
        };
        let hi = lo + 1.0 / n as f64;
        bisect(|r| self.inner(r).map(|v| v.rho2).unwrap_or(f64::NAN), lo, hi, 1e-14)
    }

    pub fn numerator_density(&self, r: f64) -> Result<NumeratorDensity> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("numerator density needs r > 0, got {r}")));
        }
        Ok(self.density_of(&self.local(r)?))
    }

    /// The density assembled from given local values; used for one-sided
    /// limits at `r = 1`.
    pub fn density_of(&self, v: &LocalValues) -> NumeratorDensity {
        let PlateParams { d, tau, sigma } = self.params;
        let dm1 = d as f64 - 1.0;
        let grad = tau * (v.rho1 * v.rho1 + dm1 * (v.rho / v.r).powi(2));
        let shear = 3.0 * dm1 * v.q * v.q;
        let n = (1.0 - sigma) * (v.rho2 * v.rho2 + shear) + sigma * v.lap * v.lap + grad;
        NumeratorDensity {
            n,
            h: shear + grad,
            g: v.lap * v.lap + grad,
        }
    }

    /// `N` in the grouping matched to the sign of `sigma`: `(1-s) rho''^2 +
    /// (1-s) h + s g` for `s >= 0`, and with `alpha = -s` the form
    /// `(1+alpha)(rho''^2 + 3(d-1) q^2) - alpha lap^2 + tension terms` otherwise.
    pub fn numerator_grouped(&self, v: &LocalValues) -> f64 {
        let PlateParams { d, tau, sigma } = self.params;
        let dm1 = d as f64 - 1.0;
        if sigma >= 0.0 {
            let nd = self.density_of(v);
            (1.0 - sigma) * v.rho2 * v.rho2 + (1.0 - sigma) * nd.h + sigma * nd.g
        } else {
            let al = -sigma;
            (1.0 + al) * (v.rho2 * v.rho2 + 3.0 * dm1 * v.q * v.q) - al * v.lap * v.lap
                + tau * v.rho1 * v.rho1
                + tau * dm1 * (v.rho / v.r).powi(2)
        }
    }

    /// `(l(r), l~(r))` for auxetic plates.
    pub fn auxetic_terms(&self, r: f64) -> Result<(f64, f64)> {
        let PlateParams { tau, sigma, .. } = self.params;
        if sigma >= 0.0 {
            return Err(Error::InvalidRegime(format!(
                "auxiliary terms need sigma < 0, got {sigma}"
            )));
        }
        let al = -sigma;
        let v = self.local(r)?;
        Ok(auxetic_pair(&v, tau, al))
    }

    /// `h'(r)` in closed form.
    pub fn h_prime(&self, r: f64) -> Result<f64> {
        let v = self.local(r)?;
        let PlateParams { d, tau, .. } = self.params;
        let dm1 = d as f64 - 1.0;
        Ok(-2.0 * dm1 * v.q_over_r * (3.0 * v.rho2 + 6.0 * v.q + tau * v.rho)
            + 2.0 * tau * v.rho1 * v.rho2)
    }

    /// `g'(r)` in closed form.
    pub fn g_prime(&self, r: f64) -> Result<f64> {
        let v = self.local(r)?;
        let PlateParams { d, tau, .. } = self.params;
        let dm1 = d as f64 - 1.0;
        Ok(2.0 * v.lap * (v.lap1 + tau * v.rho1) - 2.0 * tau * dm1 * v.r * v.q * v.q)
    }

    /// Residuals of the two natural boundary conditions at `r = 1`, relative
    /// to the largest single-branch term.
    pub fn boundary_residuals(&self) -> Result<(f64, f64)> {
        let mut j_only = self.clone();
        j_only.gamma = ScaledValue::new(0.0, 0.0);
        let ej = j_only.inner(1.0)?;
        let e = &self.edge;
        let PlateParams { d, tau, sigma } = self.params;
        let k = d as f64 - 1.0;
        let m = |v: &LocalValues| [(1.0 - sigma) * v.rho2, sigma * v.lap];
        let vv = |v: &LocalValues| {
            [
                tau * v.rho1,
                -v.lap1,
                (1.0 - sigma) * k * v.rho1,
                -(1.0 - sigma) * k * v.rho,
            ]
        };
        // each term split into its oscillatory part and the remainder
        let relative = |total: &[f64], j_part: &[f64]| {
            let sum: f64 = total.iter().sum();
            let scale = total.iter().zip(j_part).fold(0.0f64, |acc, (t, j)| {
                acc.max(j.abs()).max((t - j).abs())
            });
            if scale == 0.0 {
                0.0
            } else {
                sum.abs() / scale
            }
        };
        Ok((relative(&m(e), &m(&ej)), relative(&vv(e), &vv(&ej))))
    }

    /// Rayleigh quotient over the unit ball.
    pub fn rayleigh_quotient_ball(&self) -> Result<f64> {
        self.rayleigh_quotient_with(DEFAULT_NODES)
    }

    pub fn rayleigh_quotient_with(&self, nodes: usize) -> Result<f64> {
        let gl = GaussLegendre::new(nodes);
        let d = self.params.d as i32;
        let (mut num, mut den) = (0.0, 0.0);
        for (r, w) in gl.mapped(0.0, 1.0) {
            let v = self.inner(r)?;
            let wt = w * r.powi(d - 1);
            num += wt * self.density_of(&v).n;
            den += wt * v.rho * v.rho;
        }
        Ok(num / den)
    }

    /// Sample radii: `grid_size` uniform points on `(0, 1]` plus 64 points
    /// clustered geometrically toward each end.
    pub fn sample_radii(grid_size: usize) -> Vec<f64> {
        let n = grid_size as f64;
        let mut rs: Vec<f64> = (1..=grid_size).map(|k| k as f64 / n).collect();
        for k in 0..64 {
            let t = (1.0 / n) * 10f64.powf(-8.0 * k as f64 / 63.0);
            rs.push(t);
            rs.push(1.0 - t);
        }
        rs.sort_by(f64::total_cmp);
        rs.dedup();
        rs
    }

    /// Sign verdicts for the profile on `(0, 1]`, each with relative margins.
    pub fn sign_structure_report(&self, grid_size: usize) -> Result<Vec<VerdictRecord>> {
        if grid_size < 100 {
            return Err(Error::Domain(format!("grid_size = {grid_size} < 100")));
        }
        let rs = Self::sample_radii(grid_size);
        let vals: Vec<LocalValues> = rs.iter().map(|&r| self.inner(r)).collect::<Result<_>>()?;
        let tau = self.params.tau;
        let pv = params(&[
            ("d", self.params.d as f64),
            ("tau", tau),
            ("sigma", self.params.sigma),
        ]);
        let tol = 1e-12;
        let mut out = Vec::new();

        let mut check = |id: &str, f: &dyn Fn(&LocalValues) -> f64| {
            let scale = vals.iter().fold(0.0f64, |m, v| m.max(f(v).abs())).max(f64::MIN_POSITIVE);
            let mut worst = Worst::default();
            for v in &vals {
                worst.update(f(v) / scale, v.r);
            }
            out.push(VerdictRecord::new(
                id,
                pv.clone(),
                worst.margin,
                tol,
                format!("r={}", worst.at),
            ));
        };
        check("profile.rho_prime_positive", &|v| v.rho1);
        check("profile.rho_minus_r_rho_prime", &|v| v.q);
        check("profile.laplacian_nonpositive", &|v| -v.lap);
        check("profile.tension_dominates_laplacian_slope", &|v| tau * v.rho1 - v.lap1);

        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.rho2.abs()));
        let mut changes = 0;
        let mut last = 0.0;
        for v in &vals {
            if v.rho2.abs() <= 1e-12 * scale {
                continue;
            }
            let s = v.rho2.signum();
            if last != 0.0 && s != last {
                changes += 1;
            }
            last = s;
        }
        out.push(VerdictRecord::new(
            "profile.rho_second_single_sign_change",
            pv.clone(),
            if changes <= 1 { 0.0 } else { -(changes as f64 - 1.0) },
            0.0,
            format!("r_star={}", self.r_star),
        ));
        let (rm, rv) = self.boundary_residuals()?;
        out.push(VerdictRecord::new(
            "profile.boundary_moment",
            pv.clone(),
            -rm,
            1e-10,
            "r=1",
        ));
        out.push(VerdictRecord::new("profile.boundary_shear", pv, -rv, 1e-8, "r=1"));
        Ok(out)
    }
}

/// `l` and `l~` from local values with `alpha = -sigma`.
pub fn auxetic_pair(v: &LocalValues, tau: f64, alpha: f64) -> (f64, f64) {
    let common = 6.0 * (1.0 + alpha) * v.q + 3.0 * (1.0 + alpha) * v.rho2 + tau * v.rho;
    (
        common - alpha * tau * v.r * v.rho1,
        common - alpha * v.r * v.lap1,
    )
}
