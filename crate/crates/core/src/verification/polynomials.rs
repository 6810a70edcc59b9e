//! Certificate polynomials used by the monotonicity arguments, the regime
//! thresholds that bound their boxes, and a grid ledger over those boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special_functions::bound_constants;
use crate::verdict::{params, VerdictRecord};

/// Largest `alpha = -sigma` covered by the two-dimensional small-tension argument.
pub const ALPHA_D2: f64 = 51.0 / 97.0;
/// Tail multiplier used for `i_2'` in the small-tension argument for `d = 2, 3`.
pub const K_SMALL_TAU: f64 = 1.3;

const GRID_TOL: f64 = 1e-9;
const REPLAY_TOL: f64 = 1e-12;

/// Thresholds separating the small- and large-tension regimes of an auxetic
/// plate, as functions of `x = a^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeBounds {
    pub d: u32,
    pub alpha: f64,
    /// `tau_max(x) = tau_max_slope * x`.
    pub tau_max_slope: f64,
    pub x_max: f64,
    pub b_max2: f64,
    pub x_mid: f64,
    pub b_mid2: f64,
}

impl RegimeBounds {
    pub fn tau_max(&self, x: f64) -> f64 {
        self.tau_max_slope * x
    }

    pub fn tau_mid(&self, x: f64) -> f64 {
        let (d, al) = (self.d as f64, self.alpha);
        (3.0 - al * (d - 1.0) + al * x) * x / (d + 2.0)
    }
}

pub fn regime_bounds(d: u32, sigma: f64) -> Result<RegimeBounds> {
    if sigma >= 0.0 {
        return Err(Error::InvalidRegime(format!(
            "regime thresholds need sigma < 0, got {sigma}"
        )));
    }
    regime_bounds_alpha(d, -sigma)
}

/// Same as [`regime_bounds`] parametrized by `alpha`, which may be 0 (the
/// limit of the formulas).
pub fn regime_bounds_alpha(d: u32, alpha: f64) -> Result<RegimeBounds> {
    let df = d as f64;
    if d < 2 || !(0.0..1.0).contains(&alpha) || alpha > 1.0 / (df - 1.0) {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} outside [0, 1/(d-1)] for d = {d}"
        )));
    }
    let al = alpha;
    let x_max = 3.0 * (1.0 + al) * (df + 2.0) / (df + 5.0 - al * (df - 1.0));
    let s = ((df + 5.0).powi(2) - 2.0 * al * (2.0 * df * df + 5.0 * df - 7.0) + 9.0 * al * al).sqrt();
    let a = df + 5.0 - (2.0 * df + 1.0) * al;
    // (s - a) / (2 alpha) with the cancellation removed
    let x_mid = (12.0 * (df + 2.0) + al * (9.0 - (2.0 * df + 1.0).powi(2))) / (2.0 * (s + a));
    let mut rb = RegimeBounds {
        d,
        alpha,
        tau_max_slope: 3.0 * (1.0 + al) / ((df + 2.0) * (1.0 - al)),
        x_max,
        b_max2: 3.0 * (1.0 + al) / (1.0 - al),
        x_mid,
        b_mid2: 0.0,
    };
    rb.b_mid2 = rb.tau_mid(x_mid) + x_mid;
    Ok(rb)
}

/// Lower end of the admissible tension for `x = a^2`.
pub fn tau_min(d: u32, x: f64) -> f64 {
    x * x / (d as f64 + 2.0 - x)
}

/// Tail constant `K_d(d+2)` used in the `g'` argument.
pub fn gdec_k(d: u32) -> f64 {
    bound_constants(d as f64 + 2.0).k_d
}

pub fn gdec_f(d: u32, k: f64, x: f64, t: f64) -> f64 {
    let c = 6.0 * (d as f64 + 4.0);
    5.0 * k * t.powi(3) + (c + 5.0 * k * x) * t * t + (2.0 * c - 5.0 * x * (k + 2.0)) * x * t
        - 5.0 * (1.0 + k) * x.powi(3)
}

pub fn smalltd4_p(d: u32, x: f64, t: f64) -> f64 {
    let df = d as f64;
    let e = df * df - 4.0;
    5.0 / 3.0 * e * t.powi(3)
        + (5.0 * (2.0 * df * df - 3.0 * df - 8.0) * x + 3.0 * e * (df + 4.0)) / 3.0 * t * t
        + ((2.0 * df * df - 39.0 * df - 8.0) * x + 6.0 * e * (df + 4.0)) / 3.0 * x * t
        - 8.0 * df * x.powi(3)
}

/// Cofactor of `p` on `tau = tau_min(x)`, with leading coefficient `-3(d-2)`.
pub fn smalltd4_m(d: u32, x: f64) -> f64 {
    let df = d as f64;
    -3.0 * (df - 2.0) * x.powi(3) + 3.0 * (3.0 * df * df - df - 16.0) * x * x
        - (df + 2.0) * (7.0 * df * df - 15.0 * df - 64.0) * x
        + 6.0 * (df + 2.0).powi(3) * (df - 4.0)
}

pub fn smallt23_p(d: u32, al: f64, x: f64, t: f64) -> f64 {
    let df = d as f64;
    13.0 * (df + 2.0) / 10.0 * t.powi(3)
        + (-3.0 * al * x * x + (13.0 * (2.0 * df + 1.0) + al * (3.0 * df - 53.0)) * x
            + 10.0 * (df + 2.0) * (df + 4.0))
            / 10.0
            * t
            * t
        + x / 10.0
            * (-6.0 * al * x * x - 3.0 * (34.0 - df + 2.0 * al * (26.0 - df)) * x
                + 20.0 * (df + 2.0) * (df + 4.0))
            * t
        - x.powi(3) / 10.0 * (3.0 * x * al + 69.0 + 103.0 * al - 3.0 * df * al)
}

pub fn smallt23_m2(al: f64, x: f64) -> f64 {
    -(4.0 - x) * (194.0 - 19.0 * x) * al - 5.0 * x.powi(3) + 55.0 * x * x - 138.0 * x + 408.0
}

/// Cofactor of the `d = 3` polynomial on `tau = tau_min(x)`.
pub fn smallt23_m3(al: f64, x: f64) -> f64 {
    -(5.0 - x) * (94.0 - 7.0 * x) * al - 2.0 * x.powi(3) + 28.0 * x * x - 96.0 * x + 355.0
}

/// Lower bound for `4B` at `alpha = 51/97` as displayed, with constant
/// term `x(80 - 17x)/97`.
pub fn b2_displayed(x: f64, t: f64) -> f64 {
    (-51.0 * t * t + (628.0 - 102.0 * x) * t + x * (80.0 - 17.0 * x)) / 97.0
}

/// Lower bound for `4B` at `alpha = 51/97` with constant term `x(240 - 51x)/97`.
pub fn b2_exact(x: f64, t: f64) -> f64 {
    (-51.0 * t * t + (628.0 - 102.0 * x) * t + x * (240.0 - 51.0 * x)) / 97.0
}

pub fn b3(x: f64, t: f64) -> f64 {
    (-t * t + 2.0 * (7.0 - x) * t + 4.0 * x - x * x) / 10.0
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
}

/// Minimum of `f` over the sampled points, relative to the largest magnitude.
struct GridMin {
    min: f64,
    scale: f64,
    at: String,
}

impl GridMin {
    fn new() -> Self {
        Self {
            min: f64::INFINITY,
            scale: 0.0,
            at: String::new(),
        }
    }

    fn push(&mut self, v: f64, at: impl FnOnce() -> String) {
        self.scale = self.scale.max(v.abs());
        if v < self.min || v.is_nan() {
            self.min = v;
            self.at = at();
        }
    }

    fn verdict(self, id: &str, pv: Vec<(String, f64)>) -> VerdictRecord {
        let margin = if self.scale > 0.0 { self.min / self.scale } else { self.min };
        VerdictRecord::new(id, pv, margin, GRID_TOL, self.at)
    }
}

/// Largest relative mismatch between two evaluations of the same closed form.
fn replay(
    id: &str,
    pv: Vec<(String, f64)>,
    xs: impl Iterator<Item = f64>,
    lhs: impl Fn(f64) -> f64,
    rhs: impl Fn(f64) -> f64,
) -> VerdictRecord {
    let mut worst = 0.0f64;
    let mut at = 0.0;
    for x in xs {
        let (l, r) = (lhs(x), rhs(x));
        let err = (l - r).abs() / l.abs().max(r.abs()).max(1.0);
        if err > worst || err.is_nan() {
            worst = err;
            at = x;
        }
    }
    VerdictRecord::new(id, pv, -worst, REPLAY_TOL, format!("x={at}"))
}

/// Grid certificates of every polynomial used for dimension `d`, together
/// with replays of the closed-form restrictions to `tau = tau_min(x)`.
pub fn polynomial_ledger(d: u32, resolution: usize) -> Result<Vec<VerdictRecord>> {
    if d < 2 {
        return Err(Error::InvalidParams(format!("dimension d = {d} < 2")));
    }
    let n = resolution.max(8);
    let df = d as f64;
    let pv = || params(&[("d", df)]);
    let mut out = Vec::new();
    if d <= 3 {
        // g' certificate: 0 <= tau_min(x) <= tau <= x <= (d+2)/2
        let k = gdec_k(d);
        let mut g = GridMin::new();
        for x in linspace(0.0, (df + 2.0) / 2.0, n) {
            for t in linspace(tau_min(d, x).min(x), x, n) {
                g.push(gdec_f(d, k, x, t), || format!("x={x},tau={t}"));
            }
        }
        out.push(g.verdict("poly.f", pv()));
        let (k_round, closed): (f64, fn(f64) -> f64) = if d == 2 {
            (2.09, |x| x.powi(3) / (5.0 * (4.0 - x).powi(3)) * (816.0 - 88.0 * x + 280.0 * x * x - 25.0 * x.powi(3)))
        } else {
            (2.2, |x| x.powi(3) / (5.0 - x).powi(3) * (100.0 + 45.0 * x + 67.0 * x * x - 5.0 * x.powi(3)))
        };
        out.push(replay(
            "poly.f.tau_min_path",
            pv(),
            linspace(0.0, (df + 2.0) / 2.0, n),
            |x| gdec_f(d, k_round, x, tau_min(d, x)),
            closed,
        ));
        if d == 2 {
            out.push(replay(
                "poly.f.value_at_2",
                pv(),
                [2.0].into_iter(),
                |x| gdec_f(2, k, x, tau_min(2, x)),
                |_| 312.0,
            ));
        }

        let al_max = if d == 2 { ALPHA_D2 } else { 0.5 };
        let mut g = GridMin::new();
        for al in linspace(0.0, al_max, n / 4 + 2) {
            let rb = regime_bounds_alpha(d, al)?;
            for x in linspace(0.0, rb.x_max.min(rb.x_mid), n) {
                let hi = rb.tau_mid(x).min(rb.tau_max(x));
                let lo = tau_min(d, x);
                if lo > hi {
                    continue;
                }
                for t in linspace(lo, hi, n) {
                    g.push(smallt23_p(d, al, x, t), || format!("alpha={al},x={x},tau={t}"));
                }
            }
        }
        out.push(g.verdict("poly.p23", pv()));

        let (x_hi, m, factor): (f64, fn(f64, f64) -> f64, fn(f64) -> f64) = if d == 2 {
            (1.86, smallt23_m2, |x| 4.0 * x.powi(3) / (5.0 * (4.0 - x).powi(3)))
        } else {
            (45.0 / 14.0, smallt23_m3, |x| 5.0 * x.powi(3) / (2.0 * (5.0 - x).powi(3)))
        };
        let id = if d == 2 { "poly.m2" } else { "poly.m3" };
        let mut g = GridMin::new();
        for al in linspace(0.0, al_max, n / 4 + 2) {
            for x in linspace(0.0, x_hi, n) {
                g.push(m(al, x), || format!("alpha={al},x={x}"));
            }
        }
        out.push(g.verdict(id, pv()));
        for al in [0.0, 0.5 * al_max, al_max] {
            out.push(replay(
                &format!("{id}.tau_min_factorization"),
                params(&[("d", df), ("alpha", al)]),
                linspace(0.0, x_hi, n),
                |x| smallt23_p(d, al, x, tau_min(d, x)),
                |x| factor(x) * m(al, x),
            ));
        }
        if d == 2 {
            out.push(replay(
                "poly.m2.alpha_extreme",
                pv(),
                linspace(0.0, x_hi, n),
                |x| smallt23_m2(ALPHA_D2, x),
                |x| x / 97.0 * (-485.0 * x * x + 4366.0 * x + 384.0),
            ));
            let rb = regime_bounds_alpha(2, ALPHA_D2)?;
            for (id, b) in [
                ("poly.B2.displayed", b2_displayed as fn(f64, f64) -> f64),
                ("poly.B2.exact", b2_exact),
            ] {
                let mut g = GridMin::new();
                for x in linspace(0.0, rb.x_max, n) {
                    let lo = tau_min(2, x).min(rb.tau_max(x));
                    for t in linspace(lo, rb.tau_max(x), n) {
                        g.push(b(x, t), || format!("x={x},tau={t}"));
                    }
                }
                out.push(g.verdict(id, pv()));
            }
        } else {
            out.push(replay(
                "poly.m3.alpha_extreme",
                pv(),
                linspace(0.0, x_hi, n),
                |x| smallt23_m3(0.5, x),
                |x| -2.0 * x.powi(3) + 24.5 * x * x - 31.5 * x + 120.0,
            ));
            let mut g = GridMin::new();
            for x in linspace(0.0, 45.0 / 14.0, n) {
                let hi = 9.0 * x / 5.0;
                for t in linspace(tau_min(3, x).min(hi), hi, n) {
                    g.push(b3(x, t), || format!("x={x},tau={t}"));
                }
            }
            out.push(g.verdict("poly.B3", pv()));
            out.push(replay(
                "poly.B3.tau_max",
                pv(),
                linspace(0.0, 45.0 / 14.0, n),
                |x| b3(x, 9.0 * x / 5.0),
                |x| x * (365.0 - 98.0 * x) / 125.0,
            ));
        }
    } else {
        let x_hi = 3.0 * df * (df + 2.0) / ((df + 4.0) * (df - 1.0));
        let slope = 3.0 * df / ((df + 2.0) * (df - 2.0));
        let mut g = GridMin::new();
        for x in linspace(0.0, x_hi, n) {
            let hi = slope * x;
            for t in linspace(tau_min(d, x).min(hi), hi, n) {
                g.push(smalltd4_p(d, x, t), || format!("x={x},tau={t}"));
            }
        }
        out.push(g.verdict("poly.p", pv()));
        out.push(replay(
            "poly.p.tau_min_factorization",
            pv(),
            linspace(0.0, x_hi, n),
            |x| smalltd4_p(d, x, tau_min(d, x)),
            |x| (df + 2.0) * x.powi(3) / (3.0 * (df + 2.0 - x).powi(3)) * smalltd4_m(d, x),
        ));
        let mut g = GridMin::new();
        for x in linspace(0.0, x_hi, n) {
            g.push(smalltd4_m(d, x), || format!("x={x}"));
        }
        out.push(g.verdict("poly.m", pv()));
        if d == 4 {
            out.push(replay(
                "poly.m.d4",
                pv(),
                linspace(0.0, 3.0, n),
                |x| smalltd4_m(4, x),
                |x| 6.0 * x * (-x * x + 14.0 * x + 12.0),
            ));
        }
    }
    Ok(out)
}
