//! Sign structure of the trial profile over a solved grid, and the
//! monotonicity evidence for the numerator density.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params_of;
use super::polynomials::regime_bounds;
use crate::ball_spectrum::{fundamental_tone, SpectralPoint};
use crate::boundary_operators::PlateParams;
use crate::error::Result;
use crate::trial_profile::RadialProfile;
use crate::verdict::{params, VerdictRecord, Worst};

pub const SIGN_TOL: f64 = 1e-9;
pub const R_STAR_TOL: f64 = 1e-6;
pub const DERIVATIVE_TOL: f64 = 1e-9;
pub const MONOTONE_TOL: f64 = 1e-10;
/// Inner one-sided sample of the density just below the unit sphere.
pub const INNER_EDGE: f64 = 1.0 - 1e-8;
const SIGN_GRID: usize = 2048;

fn worst_of(records: &[(VerdictRecord, String)], id: &str, tol: f64) -> VerdictRecord {
    let mut worst = Worst::default();
    let mut loc = String::new();
    for (r, here) in records.iter().filter(|(r, _)| r.check_id == id) {
        let before = worst.margin;
        worst.update(r.worst_margin, 0.0);
        if worst.margin != before {
            loc = format!("{here},{}", r.location);
        }
    }
    let n = records.iter().filter(|(r, _)| r.check_id == id).count();
    VerdictRecord::new(id, params(&[("points", n as f64)]), worst.margin, tol, loc)
}

/// Sign facts of the profile at every solved point: `rho' > 0`, a unique
/// inflection radius, `rho - r rho' >= 0`, `Delta_r rho <= 0`,
/// `tau rho' - (Delta_r rho)_r >= 0`, and `r* = 1` when `sigma <= 0`.
pub fn sign_suite(points: &[SpectralPoint]) -> Result<Vec<VerdictRecord>> {
    let per_point: Vec<Vec<(VerdictRecord, String)>> = points
        .par_iter()
        .map(|sp| {
            let p = RadialProfile::from_point(sp)?;
            let here = format!("d={},tau={},sigma={}", sp.d, sp.tau, sp.sigma);
            let mut v: Vec<(VerdictRecord, String)> =
                p.sign_structure_report(SIGN_GRID)?.into_iter().map(|r| (r, here.clone())).collect();
            if sp.sigma <= 0.0 {
                let m = R_STAR_TOL - (p.r_star - 1.0).abs();
                let rec = VerdictRecord::new("profile.r_star_at_edge", params_of(&sp.params()), m, 0.0, format!("r_star={}", p.r_star));
                v.push((rec, here));
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let all: Vec<(VerdictRecord, String)> = per_point.into_iter().flatten().collect();
    let mut tols: BTreeMap<String, f64> = BTreeMap::new();
    for (r, _) in &all {
        // the five sign facts are judged at the suite tolerance
        let tol = if r.check_id.starts_with("profile.rho_")
            && r.check_id != "profile.rho_second_single_sign_change"
            || r.check_id == "profile.laplacian_nonpositive"
            || r.check_id == "profile.tension_dominates_laplacian_slope"
        {
            SIGN_TOL
        } else {
            r.tolerance
        };
        tols.entry(r.check_id.clone()).or_insert(tol);
    }
    Ok(tols.iter().map(|(id, &tol)| worst_of(&all, id, tol)).collect())
}

/// One hypothesis branch of the main inequality with sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub name: String,
    pub points: Vec<PlateParams>,
}

/// Whether `(d, tau, sigma)` lies in one of the covered branches.
pub fn in_theorem_regime(p: &PlateParams) -> bool {
    let (d, tau, s) = (p.d, p.tau, p.sigma);
    match d {
        2 => s > -51.0 / 97.0 || tau >= 3.0 * (1.0 - s) / (1.0 + s),
        3 => true,
        _ => s <= 0.0 || tau >= (d as f64 + 2.0) / 2.0,
    }
}

/// The default branch coverage, at least three points each.
pub fn theorem_branches() -> Vec<Branch> {
    let mk = |name: &str, pts: &[(u32, f64, f64)]| Branch {
        name: name.to_string(),
        points: pts
            .iter()
            .map(|&(d, t, s)| PlateParams::new(d, t, s).expect("branch point in window"))
            .collect(),
    };
    vec![
        mk("d2_sigma_above", &[(2, 5.0, 0.3), (2, 1.0, -0.4), (2, 0.5, 0.0), (2, 0.2, -0.5)]),
        mk("d2_large_tension", &[(2, 15.0, -0.6), (2, 20.0, -0.7), (2, 30.0, -0.8)]),
        mk("d3", &[(3, 2.0, 0.2), (3, 10.0, 0.0), (3, 0.5, -0.3), (3, 0.1, -0.45)]),
        mk("d4plus_nonpositive_sigma", &[(4, 1.0, -0.2), (5, 0.3, -0.1), (10, 2.0, 0.0)]),
        mk("d4plus_large_tension", &[(4, 3.0, 0.3), (6, 5.0, 0.5), (10, 7.0, 0.2)]),
    ]
}

/// Which derivative checks apply at a point, as `(id, values on the grid)`.
fn derivative_checks(p: &RadialProfile, rs: &[f64]) -> Result<Vec<(&'static str, Vec<f64>)>> {
    let PlateParams { d, tau, sigma } = p.params;
    let a2 = p.a * p.a;
    let mut out = Vec::new();
    if sigma >= 0.0 {
        let hp = rs.iter().map(|&r| p.h_prime(r).map(|v| -v)).collect::<Result<_>>()?;
        out.push(("monotonicity.h_prime_nonpositive", hp));
        if sigma > 0.0 && (d <= 3 || tau >= a2) {
            let gp = rs.iter().map(|&r| p.g_prime(r).map(|v| -v)).collect::<Result<_>>()?;
            out.push(("monotonicity.g_prime_nonpositive", gp));
        }
    } else {
        let large = tau >= regime_bounds(d, sigma)?.tau_max(a2);
        let terms: Vec<(f64, f64)> = rs.iter().map(|&r| p.auxetic_terms(r)).collect::<Result<_>>()?;
        if large || d >= 4 {
            out.push(("monotonicity.l_nonnegative", terms.iter().map(|t| t.0).collect()));
        } else {
            out.push(("monotonicity.l_tilde_nonnegative", terms.iter().map(|t| t.1).collect()));
        }
    }
    Ok(out)
}

/// `(min of N on the open unit interval, max of N on (1, 3])`, both
/// including the one-sided values at the unit sphere.
pub fn density_extremes(p: &RadialProfile, grid: usize) -> Result<(f64, f64, f64)> {
    let mut inner: Vec<f64> = RadialProfile::sample_radii(grid)
        .into_iter()
        .filter(|&r| r > 0.0 && r < 1.0)
        .collect();
    inner.push(INNER_EDGE);
    let mut lo = f64::INFINITY;
    let mut scale = 0.0f64;
    for r in inner {
        let n = p.numerator_density(r)?.n;
        lo = lo.min(n);
        scale = scale.max(n.abs());
    }
    let n_in = p.density_of(&p.edge()).n;
    lo = lo.min(n_in);
    let mut hi = p.density_of(&p.outer(1.0)).n;
    for k in 1..=grid {
        let n = p.numerator_density(1.0 + 2.0 * k as f64 / grid as f64)?.n;
        hi = hi.max(n);
    }
    scale = scale.max(hi.abs()).max(n_in.abs());
    Ok((lo, hi, scale))
}

/// All monotonicity verdicts at one parameter point.
pub fn monotonicity_at(params: &PlateParams, grid: usize) -> Result<Vec<VerdictRecord>> {
    let sp = fundamental_tone(params)?;
    let p = RadialProfile::from_point(&sp)?;
    let pv = params_of(params);
    let rs: Vec<f64> = RadialProfile::sample_radii(grid).into_iter().filter(|&r| r > 0.0).collect();
    let mut out = Vec::new();
    for (id, vals) in derivative_checks(&p, &rs)? {
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = Worst::default();
        for (&r, v) in rs.iter().zip(&vals) {
            worst.update(v / scale, r);
        }
        let loc = format!("r={}", worst.at);
        out.push(VerdictRecord::new(id, pv.clone(), worst.margin, DERIVATIVE_TOL, loc));
    }
    let (lo, hi, scale) = density_extremes(&p, grid)?;
    out.push(VerdictRecord::new(
        "monotonicity.partial",
        pv.clone(),
        (lo - hi) / scale,
        MONOTONE_TOL,
        format!("min_inside={lo},max_outside={hi}"),
    ));
    // the jump of N across the sphere has a closed form; confirm it
    let e = p.edge();
    let dm1 = params.d as f64 - 1.0;
    let jump = p.density_of(&p.outer(1.0)).n - p.density_of(&e).n;
    let predicted = (params.sigma * dm1 * e.q).powi(2);
    let err = (jump - predicted).abs() / scale;
    out.push(VerdictRecord::new(
        "monotonicity.edge_jump_closed_form",
        pv,
        1e-10 - err,
        0.0,
        format!("jump={jump},predicted={predicted}"),
    ));
    Ok(out)
}

pub fn monotonicity_suite(branches: &[Branch], grid: usize) -> Result<Vec<VerdictRecord>> {
    let jobs: Vec<(String, PlateParams)> = branches
        .iter()
        .flat_map(|b| b.points.iter().map(move |p| (b.name.clone(), *p)))
        .collect();
    let per: Vec<Vec<VerdictRecord>> = jobs
        .par_iter()
        .map(|(name, p)| {
            let mut v = monotonicity_at(p, grid)?;
            for r in &mut v {
                r.check_id = format!("{}.{name}", r.check_id);
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_points_are_in_regime() {
        for b in theorem_branches() {
            assert!(b.points.len() >= 3);
            for p in &b.points {
                assert!(in_theorem_regime(p), "{p:?}");
            }
        }
        assert!(!in_theorem_regime(&PlateParams::new(2, 0.1, -0.8).unwrap()));
        assert!(!in_theorem_regime(&PlateParams::new(5, 1.0, 0.3).unwrap()));
    }
}
