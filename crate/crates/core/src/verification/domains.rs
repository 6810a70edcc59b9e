//! Integrals of radial functions over non-ball domains of the ball's
//! volume, and the Rayleigh-quotient comparison they feed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::params_of;
use crate::ball_spectrum::fundamental_tone;
use crate::boundary_operators::PlateParams;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::special_functions::ln_gamma;
use crate::trial_profile::RadialProfile;
use crate::verdict::{params, VerdictRecord};

pub const RADIAL_NODES: usize = 64;
pub const CIRCLE_NODES: usize = 512;
pub const POLAR_NODES: usize = 48;
pub const AZIMUTH_NODES: usize = 96;
/// Chebyshev points per side of the unit sphere for the cumulative integral.
pub const CHEB_NODES: usize = 33;
pub const QUOTIENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DomainKind {
    Ball,
    /// Shell between `inner * R` and `R`; `inner` is a ratio in `(0, 1)`.
    Annulus { inner: f64 },
    /// Axis-aligned, centred; one semi-axis per dimension.
    Ellipsoid { axes: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Rescale to the volume of the unit ball.
    pub normalized: bool,
}

impl DomainSpec {
    pub fn ball() -> Self {
        Self { kind: DomainKind::Ball, normalized: true }
    }

    pub fn annulus(inner: f64) -> Self {
        Self { kind: DomainKind::Annulus { inner }, normalized: true }
    }

    pub fn ellipsoid(axes: &[f64]) -> Self {
        Self { kind: DomainKind::Ellipsoid { axes: axes.to_vec() }, normalized: true }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            DomainKind::Ball => "ball".into(),
            DomainKind::Annulus { inner } => format!("annulus(inner={inner})"),
            DomainKind::Ellipsoid { axes } => format!(
                "ellipsoid({})",
                axes.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
            ),
        }
    }

    fn validate(&self, d: u32) -> Result<()> {
        match &self.kind {
            DomainKind::Ball => Ok(()),
            _ if !(d == 2 || d == 3) => Err(Error::UnsupportedDomain(format!(
                "{} needs d = 2 or 3, got d = {d}",
                self.label()
            ))),
            DomainKind::Annulus { inner } if !(*inner > 0.0 && *inner < 1.0) => {
                Err(Error::UnsupportedDomain(format!("annulus ratio {inner} outside (0, 1)")))
            }
            DomainKind::Ellipsoid { axes }
                if axes.len() != d as usize || axes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) =>
            {
                Err(Error::UnsupportedDomain(format!(
                    "ellipsoid needs {d} positive semi-axes, got {axes:?}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Radial extent `(inner, outer)` for shells, after normalization.
    fn shell(&self, d: u32) -> (f64, f64) {
        match &self.kind {
            DomainKind::Annulus { inner } => {
                let outer = if self.normalized { (1.0 - inner.powi(d as i32)).powf(-1.0 / d as f64) } else { 1.0 };
                (inner * outer, outer)
            }
            _ => (0.0, 1.0),
        }
    }

    fn axes(&self, d: u32) -> Vec<f64> {
        match &self.kind {
            DomainKind::Ellipsoid { axes } if self.normalized => {
                let prod: f64 = axes.iter().product();
                let s = prod.powf(-1.0 / d as f64);
                axes.iter().map(|a| a * s).collect()
            }
            DomainKind::Ellipsoid { axes } => axes.clone(),
            _ => vec![1.0; d as usize],
        }
    }

    pub fn volume(&self, d: u32) -> Result<f64> {
        self.validate(d)?;
        let vb = unit_ball_volume(d);
        Ok(match &self.kind {
            DomainKind::Ball => vb,
            DomainKind::Annulus { .. } => {
                let (ri, ro) = self.shell(d);
                vb * (ro.powi(d as i32) - ri.powi(d as i32))
            }
            DomainKind::Ellipsoid { .. } => vb * self.axes(d).iter().product::<f64>(),
        })
    }
}

pub fn unit_ball_volume(d: u32) -> f64 {
    let h = d as f64 / 2.0;
    (h * PI.ln() - ln_gamma(h + 1.0)).exp()
}

/// Resolution of [`domain_integral_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    pub radial: usize,
    pub circle: usize,
    pub polar: usize,
    pub azimuth: usize,
    pub cheb: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            radial: RADIAL_NODES,
            circle: CIRCLE_NODES,
            polar: POLAR_NODES,
            azimuth: AZIMUTH_NODES,
            cheb: CHEB_NODES,
        }
    }
}

impl Resolution {
    pub fn doubled(&self) -> Self {
        Self {
            radial: 2 * self.radial,
            circle: 2 * self.circle,
            polar: 2 * self.polar,
            azimuth: 2 * self.azimuth,
            cheb: 2 * self.cheb - 1,
        }
    }
}

/// `int_lo^hi F(r) r^(d-1) dr`, split at the unit sphere where the
/// integrands of interest lose smoothness.
fn radial_integral(f: &(dyn Fn(f64) -> Result<f64> + Sync), d: u32, lo: f64, hi: f64, gl: &GaussLegendre) -> Result<f64> {
    let mut pieces = vec![(lo, hi)];
    if lo < 1.0 && hi > 1.0 {
        pieces = vec![(lo, 1.0), (1.0, hi)];
    }
    let mut sum = 0.0;
    for (a, b) in pieces {
        for (r, w) in gl.mapped(a, b) {
            sum += w * f(r)? * r.powi(d as i32 - 1);
        }
    }
    Ok(sum)
}

/// Barycentric interpolant through Chebyshev points of the second kind.
struct Chebyshev {
    nodes: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl Chebyshev {
    fn fit(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let nodes: Vec<f64> = (0..n).map(|k| mid + half * (PI * k as f64 / (n - 1) as f64).cos()).collect();
        let values = nodes.iter().map(|&x| f(x)).collect::<Result<_>>()?;
        let weights = (0..n)
            .map(|k| {
                let w = if k % 2 == 0 { 1.0 } else { -1.0 };
                if k == 0 || k + 1 == n { 0.5 * w } else { w }
            })
            .collect();
        Ok(Self { nodes, values, weights })
    }

    fn eval(&self, x: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for ((&xk, &fk), &wk) in self.nodes.iter().zip(&self.values).zip(&self.weights) {
            if x == xk {
                return fk;
            }
            let t = wk / (x - xk);
            num += t * fk;
            den += t;
        }
        num / den
    }
}

/// `R -> int_0^R F(r) r^(d-1) dr` on `[lo, hi]`, interpolated separately on
/// each side of the unit sphere.
fn cumulative(
    f: &(dyn Fn(f64) -> Result<f64> + Sync),
    d: u32,
    lo: f64,
    hi: f64,
    gl: &GaussLegendre,
    n: usize,
) -> Result<impl Fn(f64) -> f64> {
    let g = |x: f64| radial_integral(f, d, 0.0, x, gl);
    let below = if lo < 1.0 { Some(Chebyshev::fit(lo, hi.min(1.0), n, g)?) } else { None };
    let above = if hi > 1.0 { Some(Chebyshev::fit(lo.max(1.0), hi, n, g)?) } else { None };
    Ok(move |x: f64| match (&below, &above) {
        (Some(b), _) if x <= 1.0 => b.eval(x),
        (_, Some(a)) => a.eval(x),
        (Some(b), None) => b.eval(x),
        (None, None) => unreachable!("empty radial range"),
    })
}

pub fn domain_integral(f: &(dyn Fn(f64) -> Result<f64> + Sync), domain: &DomainSpec, d: u32) -> Result<f64> {
    domain_integral_with(f, domain, d, Resolution::default())
}

/// `int_Omega F(|x|) dx` by angular-radial product quadrature.
pub fn domain_integral_with(
    f: &(dyn Fn(f64) -> Result<f64> + Sync),
    domain: &DomainSpec,
    d: u32,
    res: Resolution,
) -> Result<f64> {
    domain.validate(d)?;
    let gl = GaussLegendre::new(res.radial);
    let sphere = d as f64 * unit_ball_volume(d);
    match &domain.kind {
        DomainKind::Ball | DomainKind::Annulus { .. } => {
            let (lo, hi) = domain.shell(d);
            Ok(sphere * radial_integral(f, d, lo, hi, &gl)?)
        }
        DomainKind::Ellipsoid { .. } => {
            let ax = domain.axes(d);
            // boundary radius along a unit direction u: 1 / sqrt(sum u_i^2 / A_i^2)
            let radius = |u: &[f64]| 1.0 / u.iter().zip(&ax).map(|(x, a)| (x / a).powi(2)).sum::<f64>().sqrt();
            let rmin = ax.iter().copied().fold(f64::INFINITY, f64::min);
            let rmax = ax.iter().copied().fold(0.0, f64::max);
            if rmax - rmin <= 1e-15 * rmax {
                return Ok(sphere * radial_integral(f, d, 0.0, rmax, &gl)?);
            }
            let g = cumulative(f, d, rmin, rmax, &gl, res.cheb)?;
            // keep interpolation inside the fitted range despite rounding
            let gr = |u: &[f64]| g(radius(u).clamp(rmin, rmax));
            if d == 2 {
                let n = res.circle;
                let total: f64 = (0..n)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / n as f64;
                        gr(&[t.cos(), t.sin()])
                    })
                    .sum();
                Ok(total * 2.0 * PI / n as f64)
            } else {
                let polar = GaussLegendre::new(res.polar);
                let m = res.azimuth;
                let mut total = 0.0;
                for (c, w) in polar.mapped(-1.0, 1.0) {
                    let s = (1.0 - c * c).sqrt();
                    let mut acc = 0.0;
                    for k in 0..m {
                        let p = 2.0 * PI * k as f64 / m as f64;
                        acc += gr(&[s * p.cos(), s * p.sin(), c]);
                    }
                    total += w * acc;
                }
                Ok(total * 2.0 * PI / m as f64)
            }
        }
    }
}

/// Quotient of the ball's extended fundamental mode over a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub domain: String,
    pub d: u32,
    pub tau: f64,
    pub sigma: f64,
    pub quotient: f64,
    pub omega_star: f64,
    /// `omega_star - quotient`.
    pub margin: f64,
    pub numerator: f64,
    pub denominator: f64,
}

pub fn quotient_report(params: &PlateParams, domain: &DomainSpec) -> Result<QuotientReport> {
    quotient_report_with(params, domain, Resolution::default())
}

pub fn quotient_report_with(params: &PlateParams, domain: &DomainSpec, res: Resolution) -> Result<QuotientReport> {
    let d = params.d;
    domain.validate(d)?;
    let sp = fundamental_tone(params)?;
    let p = RadialProfile::from_point(&sp)?;
    let num = domain_integral_with(&|r| Ok(p.numerator_density(r)?.n), domain, d, res)?;
    let den = domain_integral_with(&|r| Ok(p.rho_eval(r, 0)?.powi(2)), domain, d, res)?;
    let q = num / den;
    Ok(QuotientReport {
        domain: domain.label(),
        d,
        tau: params.tau,
        sigma: params.sigma,
        quotient: q,
        omega_star: sp.omega,
        margin: sp.omega - q,
        numerator: num,
        denominator: den,
    })
}

/// Passes iff the quotient does not exceed the ball tone; for the ball
/// itself the two must agree.
pub fn isoperimetric_quotient_check(params: &PlateParams, domain: &DomainSpec) -> Result<VerdictRecord> {
    let r = quotient_report(params, domain)?;
    Ok(quotient_verdict(params, domain, &r))
}

pub fn quotient_verdict(params: &PlateParams, domain: &DomainSpec, r: &QuotientReport) -> VerdictRecord {
    let rel = r.margin / r.omega_star;
    let (id, margin) = match domain.kind {
        DomainKind::Ball => ("quotient.ball_equality", QUOTIENT_TOL - rel.abs()),
        _ => ("quotient.below_ball_tone", rel),
    };
    let mut pv = params_of(params);
    pv.push(("quotient".into(), r.quotient));
    pv.push(("omega_star".into(), r.omega_star));
    VerdictRecord::new(
        id,
        pv,
        margin,
        if matches!(domain.kind, DomainKind::Ball) { 0.0 } else { QUOTIENT_TOL },
        r.domain.clone(),
    )
}

/// Non-ball test domains for dimension `d`.
pub fn test_domains(d: u32) -> Vec<DomainSpec> {
    match d {
        2 => vec![DomainSpec::ellipsoid(&[1.3, 1.0 / 1.3]), DomainSpec::ellipsoid(&[1.2, 1.0 / 1.2]), DomainSpec::annulus(0.4)],
        3 => vec![DomainSpec::ellipsoid(&[1.2, 1.0, 1.0 / 1.2]), DomainSpec::ellipsoid(&[1.5, 0.9, 0.8]), DomainSpec::annulus(0.4)],
        _ => vec![],
    }
}

/// Volume normalization, and the two integral orderings: an increasing
/// `rho^2` gains mass off the ball while the density `N` loses it.
pub fn rearrangement_suite(points: &[PlateParams]) -> Result<Vec<VerdictRecord>> {
    let mut out = Vec::new();
    for p in points {
        let d = p.d;
        let sp = fundamental_tone(p)?;
        let prof = RadialProfile::from_point(&sp)?;
        let rho2 = |r: f64| Ok(prof.rho_eval(r, 0)?.powi(2));
        let dens = |r: f64| Ok(prof.numerator_density(r)?.n);
        let ball = DomainSpec::ball();
        let (b_rho, b_n) = (domain_integral(&rho2, &ball, d)?, domain_integral(&dens, &ball, d)?);
        for dom in test_domains(d) {
            let mut pv = params_of(p);
            pv.push(("d_volume".into(), unit_ball_volume(d)));
            let vol = domain_integral(&|_| Ok(1.0), &dom, d)?;
            let vb = unit_ball_volume(d);
            out.push(VerdictRecord::new(
                "rearrangement.volume",
                pv.clone(),
                1e-10 - ((vol - vb) / vb).abs(),
                0.0,
                dom.label(),
            ));
            let r = domain_integral(&rho2, &dom, d)?;
            out.push(VerdictRecord::new(
                "rearrangement.denominator_grows",
                pv.clone(),
                (r - b_rho) / b_rho,
                QUOTIENT_TOL,
                dom.label(),
            ));
            let n = domain_integral(&dens, &dom, d)?;
            out.push(VerdictRecord::new(
                "rearrangement.numerator_shrinks",
                pv.clone(),
                (b_n - n) / b_n,
                QUOTIENT_TOL,
                dom.label(),
            ));
            out.push(isoperimetric_quotient_check(p, &dom)?);
        }
        out.push(isoperimetric_quotient_check(p, &DomainSpec::ball())?);
    }
    Ok(out)
}

/// Default parameter points for [`rearrangement_suite`].
pub fn rearrangement_points(dims: &[u32]) -> Vec<PlateParams> {
    let mut out = Vec::new();
    for &d in dims {
        let pts: &[(f64, f64)] = match d {
            2 => &[(5.0, 0.3), (1.0, -0.4), (5.0, 0.0)],
            3 => &[(2.0, 0.2), (10.0, 0.0), (0.5, -0.3)],
            _ => &[],
        };
        for &(t, s) in pts {
            out.push(PlateParams::new(d, t, s).expect("default point in window"));
        }
    }
    out
}

/// The default `params` list shape for a domain verdict; exposed for the CLI.
pub fn domain_params(p: &PlateParams, dom: &DomainSpec) -> Vec<(String, f64)> {
    let mut pv = params_of(p);
    if let DomainKind::Annulus { inner } = dom.kind {
        pv.extend(params(&[("inner", inner)]));
    }
    pv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn normalized_volumes() {
        for d in [2, 3] {
            for dom in test_domains(d) {
                let v = dom.volume(d).unwrap();
                assert!((v - unit_ball_volume(d)).abs() < 1e-12 * v, "{dom:?}");
            }
        }
    }

    #[test]
    fn chebyshev_reproduces_smooth_function() {
        let c = Chebyshev::fit(0.7, 1.0, 33, |x| Ok(x.exp())).unwrap();
        for x in [0.7, 0.75, 0.913, 1.0] {
            assert!((c.eval(x) - x.exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn ellipse_area_of_quadratic() {
        // int_E |x|^2 dx = pi A B (A^2 + B^2) / 4
        let (a, b) = (1.3, 1.0 / 1.3);
        let dom = DomainSpec::ellipsoid(&[a, b]);
        let v = domain_integral(&|r| Ok(r * r), &dom, 2).unwrap();
        let exact = PI * a * b * (a * a + b * b) / 4.0;
        assert!((v - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn unsupported_dimension() {
        let e = domain_integral(&|_| Ok(1.0), &DomainSpec::annulus(0.4), 4);
        assert!(matches!(e, Err(Error::UnsupportedDomain(_))));
        assert!(domain_integral(&|_| Ok(1.0), &DomainSpec::ball(), 4).is_ok());
    }
}
