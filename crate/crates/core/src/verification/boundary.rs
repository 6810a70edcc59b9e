//! Shape of `W_l` in the Poisson ratio, its sign near `a = 0`, and the
//! bounds on the mode coefficient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ScanConfig;
use crate::boundary_operators::{sigma_extremes, sigma_floor, BoundaryState, PlateParams};
use crate::error::Result;
use crate::special_functions::{i_jet, j_jet, p11, ScaledValue};
use crate::verdict::{params, VerdictRecord, Worst};

/// Step of the second central difference in `sigma`.
pub const SIGMA_STEP: f64 = 1e-3;
pub const LINEAR_TOL: f64 = 1e-8;
pub const CONVEX_TOL: f64 = 1e-10;
pub const GAMMA_TOL: f64 = 1e-12;
pub const TRACE_SEED: u64 = 0x5eed_7ace;

/// Sampled `(second difference, scale)` of `sigma -> W_l(a)`.
///
/// The three evaluations share one exponent scale, which depends on `a`
/// only, so the mantissas are directly comparable. `scale` is the largest
/// product term in any of them, so cancellation near a root of `W_l` does
/// not shrink the tolerance.
pub fn sigma_second_difference(l: u32, a: f64, base: &PlateParams, h: f64) -> Result<(f64, f64)> {
    let mut m = [0.0; 3];
    let mut scale = 0.0f64;
    let floor = sigma_floor(base.d);
    for (k, s) in [(base.sigma - h).max(floor), base.sigma, (base.sigma + h).min(1.0)].into_iter().enumerate() {
        let st = BoundaryState::new(l, a, &base.with_sigma(s)?)?;
        m[k] = st.w().mantissa;
        scale = scale.max((st.mj * st.vi).abs() + (st.mi * st.vj).abs());
    }
    Ok((m[0] - 2.0 * m[1] + m[2], scale))
}

/// Difference centres: the configured ratios pulled inside the closed window
/// far enough that both neighbours stay in it.
fn centres(cfg: &ScanConfig, d: u32) -> Vec<f64> {
    let (lo, hi) = (sigma_floor(d) + SIGMA_STEP, 1.0 - SIGMA_STEP);
    let mut v: Vec<f64> = cfg.sigma_set.values(d).into_iter().map(|s| s.clamp(lo, hi)).collect();
    v.dedup();
    v
}

fn a_points(d: u32, n: usize) -> Vec<f64> {
    let top = (d as f64 + 2.0).sqrt();
    (1..=n).map(|k| top * k as f64 / n as f64).collect()
}

/// Linearity in `sigma` for `l = 0, 1` and convexity for `l >= 2`, one
/// verdict per `(d, l)`.
pub fn sigma_shape_scan(cfg: &ScanConfig) -> Result<Vec<VerdictRecord>> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &d in &cfg.dims {
        for l in 0..=cfg.l_max {
            jobs.push((d, l));
        }
    }
    jobs.par_iter()
        .map(|&(d, l)| {
            let mut worst = Worst::default();
            let mut loc = String::new();
            for &tau in &cfg.tau_grid {
                for s in centres(cfg, d) {
                    let base = PlateParams::closed(d, tau, s)?;
                    for a in a_points(d, cfg.points_per_axis) {
                        let (dd, scale) = sigma_second_difference(l, a, &base, SIGMA_STEP)?;
                        let margin = if scale == 0.0 {
                            0.0
                        } else if l <= 1 {
                            LINEAR_TOL - dd.abs() / scale
                        } else {
                            dd / scale
                        };
                        let before = worst.margin;
                        worst.update(margin, a);
                        if worst.margin != before {
                            loc = format!("tau={tau},sigma={s},a={a}");
                        }
                    }
                }
            }
            let (id, tol) = if l <= 1 {
                (format!("boundary.sigma_linear.l{l}"), 0.0)
            } else {
                (format!("boundary.sigma_convex.l{l}"), CONVEX_TOL)
            };
            Ok(VerdictRecord::new(
                id,
                params(&[("d", d as f64), ("l", l as f64), ("step", SIGMA_STEP)]),
                worst.margin,
                tol,
                loc,
            ))
        })
        .collect()
}

/// `W_l(a) < 0` at `a = 1e-4 sqrt(d+2)` for `l >= 1`, every tension and both
/// guarded ends of the window; one verdict per `(d, l)`.
pub fn small_a_sign_scan(cfg: &ScanConfig) -> Result<Vec<VerdictRecord>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &d in &cfg.dims {
        let a = 1e-4 * (d as f64 + 2.0).sqrt();
        let (lo, hi) = sigma_extremes(d);
        for l in 1..=cfg.l_max {
            let mut worst = Worst::default();
            let mut loc = String::new();
            for &tau in &cfg.tau_grid {
                for s in [lo, hi] {
                    let st = BoundaryState::new(l, a, &PlateParams::closed(d, tau, s)?)?;
                    let wv = st.w();
                    // strict: a vanishing W fails
                    let margin = if wv.mantissa < 0.0 { 1.0 } else { -1.0 };
                    let before = worst.margin;
                    worst.update(margin, tau);
                    if worst.margin != before {
                        loc = format!("tau={tau},sigma={s}");
                    }
                }
            }
            out.push(VerdictRecord::new(
                format!("boundary.small_a_negative.l{l}"),
                params(&[("d", d as f64), ("l", l as f64), ("a", a)]),
                worst.margin,
                0.0,
                loc,
            ));
        }
    }
    Ok(out)
}

/// `a^2 j_2'(a) / (b^2 i_2'(b))` as a scaled value.
pub fn gamma_lower_bound(d: u32, a: f64, tau: f64) -> Result<ScaledValue> {
    let b = (a * a + tau).sqrt();
    let jp = j_jet(d, 2, a)?.scaled(1);
    let ip = i_jet(d, 2, b)?.scaled(1);
    Ok(ScaledValue::new(a * a * jp.mantissa / (b * b * ip.mantissa), jp.scale - ip.scale))
}

/// The mode coefficient for `l = 1` on `(0, p11)` obeys
/// `0 <= lower <= gamma <= a^3/b^3 < 1` and increases with `sigma`.
///
/// Ratios are compared in logarithms so the margin is relative.
pub fn gamma_suite(cfg: &ScanConfig) -> Result<Vec<VerdictRecord>> {
    cfg.validate()?;
    let n = cfg.points_per_axis;
    let results: Vec<[(f64, String); 2]> = cfg
        .dims
        .par_iter()
        .map(|&d| -> Result<[(f64, String); 2]> {
            let p = p11(d)?;
            let floor = sigma_floor(d);
            let sig: Vec<f64> = (0..=20).map(|k| floor + (1.0 - floor) * k as f64 / 20.0).collect();
            let (mut wb, mut wm) = (Worst::default(), Worst::default());
            let (mut lb, mut lm) = (String::new(), String::new());
            for &tau in &cfg.tau_grid {
                for k in 1..n {
                    let a = p * k as f64 / n as f64;
                    let lower = gamma_lower_bound(d, a, tau)?;
                    let b = (a * a + tau).sqrt();
                    let upper = 3.0 * (a / b).ln();
                    for &s in &sig {
                        let g = BoundaryState::new(1, a, &PlateParams::closed(d, tau, s)?)?.gamma()?;
                        let gl = g.ln_abs();
                        let m = if g.mantissa < 0.0 || lower.mantissa < 0.0 {
                            -1.0
                        } else {
                            (gl - lower.ln_abs()).min(upper - gl).min(-upper)
                        };
                        let before = wb.margin;
                        wb.update(m, a);
                        if wb.margin != before {
                            lb = format!("tau={tau},sigma={s},a={a}");
                        }
                        if s + SIGMA_STEP <= 1.0 {
                            let up = PlateParams::closed(d, tau, s + SIGMA_STEP)?;
                            let g2 = BoundaryState::new(1, a, &up)?.gamma()?;
                            let m = (g2.value() - g.value()) / g.value().abs().max(f64::MIN_POSITIVE);
                            let before = wm.margin;
                            wm.update(m, a);
                            if wm.margin != before {
                                lm = format!("tau={tau},sigma={s},a={a}");
                            }
                        }
                    }
                }
            }
            Ok([(wb.margin, lb), (wm.margin, lm)])
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (&d, [(mb, lb), (mm, lm)]) in cfg.dims.iter().zip(results) {
        out.push(VerdictRecord::new(
            "boundary.gamma_bounds",
            params(&[("d", d as f64)]),
            mb,
            GAMMA_TOL,
            lb,
        ));
        out.push(VerdictRecord::new(
            "boundary.gamma_monotone",
            params(&[("d", d as f64), ("step", SIGMA_STEP)]),
            mm,
            GAMMA_TOL,
            lm,
        ));
    }
    Ok(out)
}

/// Moving a positive factor between mantissa and exponent of the modified
/// branch changes neither the sign of `W` nor the value of `gamma`.
pub fn scaling_immunity(cfg: &ScanConfig) -> Result<VerdictRecord> {
    cfg.validate()?;
    let mut worst = Worst::default();
    let mut loc = String::new();
    for &d in &cfg.dims {
        for &tau in &cfg.tau_grid {
            for s in cfg.sigma_set.values(d) {
                let prm = PlateParams::closed(d, tau, s)?;
                for a in a_points(d, 10) {
                    let st = BoundaryState::new(1, a, &prm)?;
                    let (w0, g0) = (st.w(), st.gamma()?);
                    for c in [1e-200, 1e-3, 7.0, 1e150] {
                        let (mi, vi) = (st.mi * c, st.vi * c);
                        let ln_i = st.ln_i - c.ln();
                        let w1 = ScaledValue::new(st.mj * vi - mi * st.vj, st.ln_j + ln_i);
                        let g1 = ScaledValue::new(-st.mj / mi, st.ln_j - ln_i);
                        let sign_ok = w0.signum() == w1.signum();
                        let rel = if g0.mantissa == 0.0 {
                            if g1.mantissa == 0.0 { 0.0 } else { 1.0 }
                        } else {
                            (g1.ln_abs() - g0.ln_abs()).abs()
                        };
                        let m = if sign_ok && g0.signum() == g1.signum() { -rel } else { -1.0 };
                        let before = worst.margin;
                        worst.update(m, a);
                        if worst.margin != before {
                            loc = format!("d={d},tau={tau},sigma={s},a={a},c={c}");
                        }
                    }
                }
            }
        }
    }
    Ok(VerdictRecord::new(
        "boundary.scaling_immunity",
        params(&[]),
        worst.margin,
        GAMMA_TOL,
        loc,
    ))
}

/// `(tr H)^2 <= d |H|^2` for seeded random symmetric matrices, with
/// equality at the identity.
pub fn trace_inequality(dims: &[u32], samples: usize, seed: u64) -> VerdictRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = Worst::default();
    let mut loc = String::new();
    for &d in dims {
        let n = d as usize;
        for k in 0..samples {
            let mut h = vec![0.0; n * n];
            for r in 0..n {
                for c in r..n {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    h[r * n + c] = v;
                    h[c * n + r] = v;
                }
            }
            let tr: f64 = (0..n).map(|r| h[r * n + r]).sum();
            let frob: f64 = h.iter().map(|x| x * x).sum();
            let m = (d as f64 * frob - tr * tr) / (d as f64 * frob);
            let before = worst.margin;
            worst.update(m, k as f64);
            if worst.margin != before {
                loc = format!("d={d},sample={k}");
            }
        }
        // the identity attains equality exactly
        let id: Vec<f64> = (0..n * n).map(|k| if k % (n + 1) == 0 { 1.0 } else { 0.0 }).collect();
        let tr: f64 = (0..n).map(|r| id[r * n + r]).sum();
        let frob: f64 = id.iter().map(|x| x * x).sum();
        if d as f64 * frob - tr * tr != 0.0 {
            worst.update(-1.0, f64::NAN);
            loc = format!("d={d},identity");
        }
    }
    VerdictRecord::new(
        "boundary.trace_inequality",
        params(&[("samples", samples as f64), ("seed", seed as f64)]),
        worst.margin,
        GAMMA_TOL,
        loc,
    )
}

pub fn run(cfg: &ScanConfig) -> Result<Vec<VerdictRecord>> {
    let mut out = sigma_shape_scan(cfg)?;
    out.extend(small_a_sign_scan(cfg)?);
    out.extend(gamma_suite(cfg)?);
    out.push(scaling_immunity(cfg)?);
    out.push(trace_inequality(&cfg.dims, 1000, TRACE_SEED));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_and_convex_examples() {
        let p = PlateParams::new(3, 1.0, 0.2).unwrap();
        let (dd, sc) = sigma_second_difference(1, 1.0, &p, SIGMA_STEP).unwrap();
        assert!(dd.abs() <= LINEAR_TOL * sc);
        let p = PlateParams::new(2, 1.0, 0.2).unwrap();
        let (dd, _) = sigma_second_difference(2, 1.0, &p, SIGMA_STEP).unwrap();
        assert!(dd > 0.0);
    }

    #[test]
    fn gamma_at_window_floor_is_lower_bound() {
        let (d, a, tau) = (3, 1.2, 2.0);
        let p = PlateParams::closed(d, tau, sigma_floor(d)).unwrap();
        let g = BoundaryState::new(1, a, &p).unwrap().gamma().unwrap().value();
        let lo = gamma_lower_bound(d, a, tau).unwrap().value();
        assert!((g - lo).abs() < 1e-12 * lo);
    }

    #[test]
    fn trace_identity_equality() {
        let v = trace_inequality(&[2, 3], 50, 1);
        assert!(v.pass && v.worst_margin > 0.0);
    }
}
