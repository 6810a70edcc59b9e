//! Recurrences, dominations, tail bounds and sign facts of `j_l` and `i_l`.

use rayon::prelude::*;

use crate::error::Result;
use crate::special_functions::{
    bound_constants, coeff_c, coeff_d, coeff_n, eval_i, eval_j, p11, BesselQuery,
};
use crate::verdict::{params, VerdictRecord, Worst};

use super::log_space;

pub const IDENTITY_TOL: f64 = 1e-10;
pub const BOUND_TOL: f64 = 1e-12;

fn j(d: u32, l: u32, m: u32, z: f64) -> Result<f64> {
    eval_j(BesselQuery::new(d, l, m, z))
}

fn i(d: u32, l: u32, m: u32, z: f64) -> Result<f64> {
    eval_i(BesselQuery::new(d, l, m, z))
}

/// `|sum terms| / max |term|`.
fn residual(terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale == 0.0 {
        0.0
    } else {
        terms.iter().sum::<f64>().abs() / scale
    }
}

/// Residuals of the eight recurrences at one point; identities that need
/// `j_{l-1}` are skipped (`None`) for `l = 0`.
pub fn identity_residuals(d: u32, l: u32, z: f64) -> Result<[Option<f64>; 8]> {
    let df = d as f64;
    let lf = l as f64;
    let (jl, jl1, jp, jpp) = (j(d, l, 0, z)?, j(d, l + 1, 0, z)?, j(d, l, 1, z)?, j(d, l, 2, z)?);
    let (il, il1, ip, ipp) = (i(d, l, 0, z)?, i(d, l + 1, 0, z)?, i(d, l, 1, z)?, i(d, l, 2, z)?);
    let (jm, im) = if l > 0 {
        (Some(j(d, l - 1, 0, z)?), Some(i(d, l - 1, 0, z)?))
    } else {
        (None, None)
    };
    let c = (df - 2.0 + 2.0 * lf) / z;
    Ok([
        jm.map(|jm| residual(&[c * jl, -jm, -jl1])),
        Some(residual(&[jp, -lf / z * jl, jl1])),
        jm.map(|jm| residual(&[jp, -jm, (lf + df - 2.0) / z * jl])),
        im.map(|im| residual(&[c * il, -im, il1])),
        Some(residual(&[ip, -lf / z * il, -il1])),
        im.map(|im| residual(&[ip, -im, (lf + df - 2.0) / z * il])),
        Some(residual(&[jpp, -(lf * lf - lf) / (z * z) * jl, jl, -(df - 1.0) / z * jl1])),
        Some(residual(&[ipp, -(lf * lf - lf) / (z * z) * il, -il, (df - 1.0) / z * il1])),
    ])
}

/// One verdict per recurrence over `dims x (l = 0..=5) x points`
/// log-spaced `z` in `[1e-6, 30]`.
pub fn identity_suite(dims: &[u32], points: usize) -> Result<Vec<VerdictRecord>> {
    let zs = log_space(1e-6, 30.0, points);
    let mut cases = Vec::new();
    for &d in dims {
        for l in 0..=5 {
            for &z in &zs {
                cases.push((d, l, z));
            }
        }
    }
    let res: Vec<[Option<f64>; 8]> = cases
        .par_iter()
        .map(|&(d, l, z)| identity_residuals(d, l, z))
        .collect::<Result<_>>()?;
    let mut worst = [Worst::default(); 8];
    let mut at = [(0u32, 0u32); 8];
    for (case, r) in cases.iter().zip(&res) {
        for (k, v) in r.iter().enumerate() {
            if let Some(v) = v {
                let before = worst[k].margin;
                worst[k].update(-v, case.2);
                if worst[k].margin != before {
                    at[k] = (case.0, case.1);
                }
            }
        }
    }
    let pv = params(&[("points", points as f64)]);
    Ok((0..8)
        .map(|k| {
            VerdictRecord::new(
                format!("bessel.identity_{}", k + 1),
                pv.clone(),
                worst[k].margin,
                IDENTITY_TOL,
                format!("d={},l={},z={}", at[k].0, at[k].1, worst[k].at),
            )
        })
        .collect())
}

/// `|j_l^{(m)}| <= i_l^{(m)}` with equality only at the origin.
pub fn domination_suite(dims: &[u32], points: usize) -> Result<VerdictRecord> {
    let zs = log_space(1e-6, 30.0, points);
    let mut worst = Worst::default();
    let mut loc = String::new();
    for &d in dims {
        for l in 0..=5 {
            for m in 0..=4 {
                for &z in &zs {
                    let (jv, iv) = (j(d, l, m, z)?, i(d, l, m, z)?);
                    let margin = (iv - jv.abs()) / iv.abs().max(f64::MIN_POSITIVE);
                    // strictness is checked by requiring a positive gap, up to rounding
                    let before = worst.margin;
                    worst.update(margin, z);
                    if worst.margin != before {
                        loc = format!("d={d},l={l},m={m},z={z}");
                    }
                }
            }
        }
    }
    Ok(VerdictRecord::new(
        "bessel.domination",
        params(&[("points", points as f64)]),
        worst.margin,
        BOUND_TOL,
        loc,
    ))
}

fn uniform(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
}

/// The six polynomial bounds, each on its interval; `ms` lists the values of
/// `M` for the `i`-side bounds.
pub fn bound_suite(dims: &[u32], points: usize, ms: &[f64]) -> Result<Vec<VerdictRecord>> {
    let names = [
        "bessel.bound_j1",
        "bessel.bound_i1",
        "bessel.bound_j1pp",
        "bessel.bound_i1pp",
        "bessel.bound_j2p",
        "bessel.bound_i2p",
    ];
    let mut worst = [Worst::default(); 6];
    let mut loc: [String; 6] = Default::default();
    let rel = |hi: f64, lo: f64| (hi - lo) / hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE);
    let mut record = |k: usize, margin: f64, at: f64, what: String, worst: &mut [Worst; 6]| {
        let before = worst[k].margin;
        worst[k].update(margin, at);
        if worst[k].margin != before {
            loc[k] = what;
        }
    };
    for &d in dims {
        let (c0, c1) = (coeff_c(1, 0, d)?, coeff_c(1, 1, d)?);
        let (d1, d2) = (coeff_d(1, d)?, coeff_d(2, d)?);
        let (n0, n1) = (coeff_n(0, d)?, coeff_n(1, d)?);
        let zmax = (d as f64 + 2.0).sqrt();
        for z in uniform(0.0, zmax, points) {
            let (z3, at) = (z.powi(3), format!("d={d},z={z}"));
            let j1 = j(d, 1, 0, z)?;
            let m = rel(c0 * z, j1).min(rel(j1, c0 * z - c1 * z3));
            record(0, m, z, at.clone(), &mut worst);
            record(2, rel(-d1 * z + d2 * z3, j(d, 1, 2, z)?), z, at.clone(), &mut worst);
            record(4, rel(j(d, 2, 1, z)?, n0 * z - n1 * z3), z, at, &mut worst);
        }
        for z in uniform(0.0, 30.0, points) {
            let at = format!("d={d},z={z}");
            record(1, rel(i(d, 1, 0, z)?, c0 * z + c1 * z.powi(3)), z, at, &mut worst);
        }
        for &mm in ms {
            let k = bound_constants(mm);
            for z in uniform(0.0, mm.sqrt(), points) {
                let (z3, at) = (z.powi(3), format!("d={d},M={mm},z={z}"));
                record(3, rel(d1 * z + k.k_d * d2 * z3, i(d, 1, 2, z)?), z, at.clone(), &mut worst);
                record(5, rel(n0 * z + n1 * k.k_n * z3, i(d, 2, 1, z)?), z, at, &mut worst);
            }
        }
    }
    let pv = params(&[("points", points as f64)]);
    Ok((0..6)
        .map(|k| {
            VerdictRecord::new(names[k], pv.clone(), worst[k].margin, BOUND_TOL, loc[k].clone())
        })
        .collect())
}

/// Sign facts on `(0, p11]`.
pub fn sign_suite(dims: &[u32], points: usize) -> Result<Vec<VerdictRecord>> {
    type Fact = (&'static str, u32, u32, f64, bool);
    // (id, l, m, sign, closed at p11)
    let facts: Vec<Fact> = vec![
        ("bessel.sign_j1", 1, 0, 1.0, true),
        ("bessel.sign_j2", 2, 0, 1.0, true),
        ("bessel.sign_j3", 3, 0, 1.0, true),
        ("bessel.sign_j4", 4, 0, 1.0, true),
        ("bessel.sign_j5", 5, 0, 1.0, true),
        ("bessel.sign_j1p", 1, 1, 1.0, false),
        ("bessel.sign_j2p", 2, 1, 1.0, true),
        ("bessel.sign_j1pp", 1, 2, -1.0, true),
        ("bessel.sign_j1pppp", 1, 4, 1.0, true),
    ];
    let mut out = Vec::new();
    for (id, l, m, s, closed) in facts {
        let mut worst = Worst::default();
        let mut loc = String::new();
        for &d in dims {
            let p = p11(d)?;
            let top = if closed { p } else { p * (1.0 - 1e-9) };
            let vals: Vec<(f64, f64)> = (1..=points)
                .map(|k| {
                    let z = top * k as f64 / points as f64;
                    j(d, l, m, z).map(|v| (z, s * v))
                })
                .collect::<Result<_>>()?;
            let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.1.abs()));
            for (z, v) in vals {
                let before = worst.margin;
                // strict sign: a zero counts as a violation
                let margin = if v > 0.0 { v / scale } else { -1.0 - v.abs() / scale };
                worst.update(margin, z);
                if worst.margin != before {
                    loc = format!("d={d},z={z}");
                }
            }
        }
        out.push(VerdictRecord::new(
            id,
            params(&[("points", points as f64)]),
            worst.margin,
            0.0,
            loc,
        ));
    }
    Ok(out)
}

/// For `z^2 <= d+2` the ratio of successive `j_2'` series terms is at most
/// `(d+2) / (4 (k+1)^2)` and decreases in `k`.
pub fn alternating_ratio_suite(dims: &[u32], terms: u32) -> Result<VerdictRecord> {
    let mut worst = Worst::default();
    let mut loc = String::new();
    for &d in dims {
        let z2 = d as f64 + 2.0;
        let mut prev = f64::INFINITY;
        for k in 0..terms {
            let ratio = coeff_n(k + 1, d)? * z2 / coeff_n(k, d)?;
            let bound = z2 / (4.0 * (k as f64 + 1.0).powi(2));
            let margin = ((bound - ratio) / bound).min(if ratio <= prev { 0.0 } else { -1.0 });
            let before = worst.margin;
            worst.update(margin, k as f64);
            if worst.margin != before {
                loc = format!("d={d},k={k}");
            }
            prev = ratio;
        }
    }
    Ok(VerdictRecord::new(
        "bessel.j2p_term_ratio",
        params(&[("terms", terms as f64)]),
        worst.margin,
        BOUND_TOL,
        loc,
    ))
}

/// `d < p11(d)^2 < d + 2` for every listed dimension.
pub fn p11_bracket_suite(dims: &[u32]) -> Result<VerdictRecord> {
    let mut worst = Worst::default();
    for &d in dims {
        let p2 = p11(d)?.powi(2);
        let df = d as f64;
        worst.update((p2 - df).min(df + 2.0 - p2), df);
    }
    // strict inequality
    let margin = if worst.margin > 0.0 { worst.margin } else { worst.margin - 1.0 };
    Ok(VerdictRecord::new(
        "bessel.p11_bracket",
        params(&[("dims", dims.len() as f64)]),
        margin,
        0.0,
        format!("d={}", worst.at),
    ))
}

/// Everything in this module at its default resolution.
pub fn run(dims: &[u32], points: usize) -> Result<Vec<VerdictRecord>> {
    let mut out = identity_suite(dims, points)?;
    out.push(domination_suite(dims, points)?);
    let mut ms: Vec<f64> = vec![1.0, 3.5, 6.0];
    ms.extend(dims.iter().map(|&d| d as f64 + 2.0).filter(|&m| m <= 200.0));
    out.extend(bound_suite(dims, 500, &ms)?);
    out.extend(sign_suite(dims, 500)?);
    out.push(alternating_ratio_suite(dims, 30)?);
    let all: Vec<u32> = (2..=100).collect();
    out.push(p11_bracket_suite(&all)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_at_a_point() {
        let r = identity_residuals(3, 2, 1.7).unwrap();
        for v in r.into_iter().flatten() {
            assert!(v < 1e-13);
        }
        let r = identity_residuals(3, 0, 1.7).unwrap();
        assert!(r[0].is_none() && r[1].is_some());
    }
}
