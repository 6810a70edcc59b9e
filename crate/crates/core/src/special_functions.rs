//! Ultraspherical Bessel functions of the first kind.
//!
//! For dimension `d` and order `l` these are
//! `j_l(z) = z^{-(d-2)/2} J_{l+d/2-1}(z)` and `i_l(z) = z^{-(d-2)/2} I_{l+d/2-1}(z)`,
//! evaluated together with their first four derivatives from the power series
//!
//! ```text
//! j_l(z) = sum_k (-1)^k c_{l,k} z^{2k+l},   i_l(z) = sum_k c_{l,k} z^{2k+l},
//! c_{l,k} = 2^{1-d/2-2k-l} / (k! Gamma(k+d/2+l)).
//! ```
//!
//! The series is summed in double-double arithmetic, which keeps the
//! oscillatory `j_l` accurate up to [`Z_MAX`]. The modified functions grow like
//! `e^z` and are carried with a separate binary exponent, so they never
//! overflow internally.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Largest argument accepted for the oscillatory functions.
pub const Z_MAX: f64 = 50.0;

/// Highest derivative order carried by a [`Jet`].
pub const MAX_DERIVATIVE: u32 = 4;

const MIN_TERMS: usize = 8;
const TRUNCATION: f64 = 1e-16;
// Relative resolution of a double-double sum against its absolute terms.
const CANCELLATION_FLOOR: f64 = 1e-32;
const RESCALE_AT: f64 = 4.149515568880993e180; // 2^600
const RESCALE_BY: f64 = 2.409919865102884e-181; // 2^-600
const RESCALE_BITS: i32 = 600;

// ln 2 split so that n * LN2_HI is exact for |n| < 2^20.
const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-01;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BesselKind {
    /// Oscillatory `j_l`.
    J,
    /// Modified `i_l`.
    I,
}

/// One evaluation request: derivative `m` of the order-`l` function in
/// dimension `d` at `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselQuery {
    pub d: u32,
    pub l: u32,
    pub m: u32,
    pub z: f64,
}

impl BesselQuery {
    pub fn new(d: u32, l: u32, m: u32, z: f64) -> Self {
        Self { d, l, m, z }
    }

    pub fn validate(&self) -> Result<()> {
        check_dimension(self.d)?;
        if self.m > MAX_DERIVATIVE {
            return Err(Error::Domain(format!(
                "derivative order {} exceeds {}",
                self.m, MAX_DERIVATIVE
            )));
        }
        check_argument(self.z)
    }
}

/// A real number stored as `mantissa * e^scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledValue {
    pub mantissa: f64,
    pub scale: f64,
}

impl ScaledValue {
    pub fn new(mantissa: f64, scale: f64) -> Self {
        Self { mantissa, scale }
    }

    /// The represented value; overflows to infinity or underflows to zero
    /// when outside the `f64` range.
    pub fn value(&self) -> f64 {
        if self.mantissa == 0.0 {
            return 0.0;
        }
        let ln = self.mantissa.abs().ln() + self.scale;
        if ln.abs() < 700.0 && self.scale.abs() < 700.0 {
            self.mantissa * self.scale.exp()
        } else {
            self.mantissa.signum() * ln.exp()
        }
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.abs().ln() + self.scale
    }

    pub fn signum(&self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa.signum()
        }
    }

    /// Re-expresses the value at another scale.
    pub fn rescaled(&self, scale: f64) -> f64 {
        ScaledValue::new(self.mantissa, self.scale - scale).value()
    }
}

/// Bound multipliers for the tails of the `i_1''` and `i_2'` series on `z^2 <= M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub k_d: f64,
    pub k_n: f64,
}

fn check_dimension(d: u32) -> Result<()> {
    if d < 2 {
        Err(Error::Domain(format!("dimension must be at least 2, got {d}")))
    } else {
        Ok(())
    }
}

fn check_argument(z: f64) -> Result<()> {
    if !(z >= 0.0) || !z.is_finite() {
        Err(Error::Domain(format!(
            "argument must be finite and nonnegative, got {z}"
        )))
    } else {
        Ok(())
    }
}

/// Bessel order `nu = l + d/2 - 1`.
pub fn bessel_order(d: u32, l: u32) -> f64 {
    l as f64 + d as f64 / 2.0 - 1.0
}

/// Exact `2^e` for any `e` in the normal or subnormal range; saturates outside.
pub fn pow2(e: i32) -> f64 {
    if e > 1023 {
        f64::INFINITY
    } else if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else if e >= -1074 {
        f64::from_bits(1u64 << (e + 1074))
    } else {
        0.0
    }
}

/// `x * 2^e` without intermediate overflow for moderate `x`.
pub fn ldexp(mut x: f64, mut e: i32) -> f64 {
    while e > 1000 {
        x *= pow2(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= pow2(-1000);
        e += 1000;
    }
    x * pow2(e)
}

// Mantissa with a binary exponent, for long products of moderate factors.
#[derive(Debug, Clone, Copy)]
struct Wide {
    mant: f64,
    exp2: i32,
}

impl Wide {
    fn one() -> Self {
        Wide { mant: 1.0, exp2: 0 }
    }

    fn mul(mut self, x: f64) -> Self {
        self.mant *= x;
        if self.mant.abs() > RESCALE_AT {
            self.mant *= RESCALE_BY;
            self.exp2 += RESCALE_BITS;
        } else if self.mant.abs() < RESCALE_BY {
            self.mant *= RESCALE_AT;
            self.exp2 -= RESCALE_BITS;
        }
        self
    }

    fn ln(self) -> f64 {
        self.mant.ln() + self.exp2 as f64 * LN_2
    }

    fn to_f64(self) -> f64 {
        ldexp(self.mant, self.exp2)
    }
}

// Gamma(x) for x a positive integer or half-integer, by the recurrence.
fn gamma_half_lattice(x: f64) -> Wide {
    let mut acc = Wide::one();
    let mut y = x;
    while y > 1.0 {
        y -= 1.0;
        acc = acc.mul(y);
    }
    if y == 0.5 {
        acc = acc.mul(PI.sqrt());
    }
    acc
}

// 1 / (2^nu Gamma(nu + 1)) as a wide number.
fn leading_coefficient(d: u32, l: u32) -> Wide {
    let nu = bessel_order(d, l);
    let g = gamma_half_lattice(nu + 1.0);
    let whole = nu.floor() as i32;
    let mut inv = Wide {
        mant: 1.0 / g.mant,
        exp2: -g.exp2 - whole,
    };
    if nu.fract() != 0.0 {
        inv = inv.mul(std::f64::consts::FRAC_1_SQRT_2);
    }
    inv
}

/// Ratio `c_{l,k+1} / c_{l,k} = 1 / (4 (k+1)(k+nu+1))`.
pub fn coefficient_ratio(l: u32, k: u32, d: u32) -> f64 {
    let nu = bessel_order(d, l);
    1.0 / (4.0 * (k as f64 + 1.0) * (k as f64 + nu + 1.0))
}

fn coeff_c_wide(l: u32, k: u32, d: u32) -> Wide {
    let nu = bessel_order(d, l);
    let mut acc = leading_coefficient(d, l);
    for i in 0..k {
        let i = i as f64;
        acc = acc.mul(1.0 / (4.0 * (i + 1.0) * (i + nu + 1.0)));
    }
    acc
}

/// Series coefficient `c_{l,k}` shared by `j_l` and `i_l`.
pub fn coeff_c(l: u32, k: u32, d: u32) -> Result<f64> {
    check_dimension(d)?;
    Ok(coeff_c_wide(l, k, d).to_f64())
}

/// Natural log of `c_{l,k}`, usable where the coefficient itself underflows.
pub fn ln_coeff_c(l: u32, k: u32, d: u32) -> Result<f64> {
    check_dimension(d)?;
    Ok(coeff_c_wide(l, k, d).ln())
}

/// Coefficient of `z^{2k-1}` in `i_1''` (`k >= 1`).
pub fn coeff_d(k: u32, d: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("d_k is defined for k >= 1".into()));
    }
    let kk = k as f64;
    Ok(coeff_c(1, k, d)? * (2.0 * kk + 1.0) * 2.0 * kk)
}

/// Coefficient of `z^{2k+1}` in `i_2'`.
pub fn coeff_n(k: u32, d: u32) -> Result<f64> {
    Ok(coeff_c(2, k, d)? * (2.0 * k as f64 + 2.0))
}

/// The tail multipliers `K_d(M)` and `K_n(M)`; `M = 0` returns the limits.
pub fn bound_constants(m: f64) -> BoundConstants {
    let ratio = if m == 0.0 {
        0.25
    } else {
        (m / 4.0).exp_m1() / m
    };
    BoundConstants {
        k_d: 7.0 / 5.0 + 8.0 / 5.0 * ratio,
        k_n: 0.5 + 2.0 * ratio,
    }
}

// Lanczos approximation in rational form (g = 6.0246800407767295...,
// 13 terms), accurate to a few ulps on the positive axis.
const LANCZOS_G: f64 = 6.024_680_040_776_729_583_740_234_375;
const LANCZOS_G_MINUS_HALF: f64 = 5.524_680_040_776_729_583_740_234_375;
const LANCZOS_NUM: [f64; 13] = [
    23_531_376_880.410_759_688_572_007_674_451_636_754_734_846_804_940,
    42_919_803_642.649_098_768_957_899_047_001_988_850_926_355_848_959,
    35_711_959_237.355_668_049_440_185_451_547_166_705_960_488_635_843,
    17_921_034_426.037_209_699_919_755_754_458_931_112_671_403_265_390,
    6_039_542_586.352_028_005_064_291_644_307_297_921_069_938_842_070_8,
    1_439_720_407.311_721_673_663_223_072_794_912_393_971_548_578_677_2,
    248_874_557.862_054_156_511_460_386_413_229_423_216_321_251_278_01,
    31_426_415.585_400_194_380_614_231_628_318_205_362_874_684_987_640,
    2_876_370.628_935_372_441_225_409_051_620_849_613_599_114_537_876_8,
    186_056.265_395_223_495_040_294_989_716_045_699_282_207_842_363_28,
    8_071.672_002_365_816_210_638_002_902_272_250_613_821_851_632_502_4,
    210.824_277_751_579_345_872_509_733_920_713_362_711_669_695_802_91,
    2.506_628_274_631_000_270_164_908_177_133_837_338_626_431_079_340_8,
];
const LANCZOS_DEN: [f64; 13] = [
    0.0,
    39_916_800.0,
    120_543_840.0,
    150_917_976.0,
    105_258_076.0,
    45_995_730.0,
    13_339_535.0,
    2_637_558.0,
    357_423.0,
    32_670.0,
    1_925.0,
    66.0,
    1.0,
];

fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    (PI * r).sin()
}

fn lanczos_sum(x: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    if x < 5.0 {
        for i in (0..13).rev() {
            num = num * x + LANCZOS_NUM[i];
            den = den * x + LANCZOS_DEN[i];
        }
    } else {
        for i in 0..13 {
            num = num / x + LANCZOS_NUM[i];
            den = den / x + LANCZOS_DEN[i];
        }
    }
    num / den
}

/// Gamma function by the Lanczos approximation with reflection.
pub fn gamma(x: f64) -> f64 {
    if x.is_nan() || (x <= 0.0 && x.fract() == 0.0) {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax < 1e-20 {
        return 1.0 / x;
    }
    let y = ax + LANCZOS_G_MINUS_HALF;
    // Correction for the rounding of y.
    let z = if ax > LANCZOS_G_MINUS_HALF {
        (y - ax) - LANCZOS_G_MINUS_HALF
    } else {
        (y - LANCZOS_G_MINUS_HALF) - ax
    };
    let z = z * LANCZOS_G / y;
    let power = |r: f64, mul: bool| -> f64 {
        if ax < 140.0 {
            let p = y.powf(ax - 0.5);
            if mul { r * p } else { r / p }
        } else {
            let p = y.powf(ax / 2.0 - 0.25);
            if mul { r * p * p } else { r / p / p }
        }
    };
    if x < 0.0 {
        let mut r = -PI / sin_pi(ax) / ax * y.exp() / lanczos_sum(ax);
        r -= z * r;
        power(r, false)
    } else {
        let mut r = lanczos_sum(ax) / y.exp();
        r += z * r;
        power(r, true)
    }
}

/// `ln |Gamma(x)|`.
pub fn ln_gamma(x: f64) -> f64 {
    if x.is_nan() || (x <= 0.0 && x.fract() == 0.0) {
        return f64::INFINITY;
    }
    let ax = x.abs();
    if ax < 1e-20 {
        return -ax.ln();
    }
    let mut r = lanczos_sum(ax).ln() - LANCZOS_G;
    r += (ax - 0.5) * ((ax + LANCZOS_G - 0.5).ln() - 1.0);
    if x < 0.0 {
        r = PI.ln() - sin_pi(ax).abs().ln() - ax.ln() - r;
    }
    r
}

/// Falling factorial `n (n-1) ... (n-m+1)`.
fn falling(n: f64, m: u32) -> f64 {
    (0..m).fold(1.0, |acc, i| acc * (n - i as f64))
}

/// Values and derivatives of `j_l` or `i_l` at one argument.
///
/// For `z > 0` the `m`th derivative equals
/// `c_{l,0} z^{l-m} 2^{exp2} terms[m]`; `terms` is what the boundary
/// operators consume, since it stays representable when `z` is tiny or huge.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub kind: BesselKind,
    pub d: u32,
    pub l: u32,
    pub z: f64,
    pub terms: [f64; 5],
    pub exp2: i32,
    c0: f64,
    ln_c0: f64,
}

impl Jet {
    pub fn new(kind: BesselKind, d: u32, l: u32, z: f64) -> Result<Self> {
        check_dimension(d)?;
        check_argument(z)?;
        if kind == BesselKind::J && z > Z_MAX {
            return Err(Error::ArgumentCap { z, cap: Z_MAX });
        }
        let c0w = leading_coefficient(d, l);
        let (terms, exp2) = sum_series(kind, bessel_order(d, l), l, z);
        Ok(Jet {
            kind,
            d,
            l,
            z,
            terms,
            exp2,
            c0: c0w.to_f64(),
            ln_c0: c0w.ln(),
        })
    }

    /// `c_{l,0}`.
    pub fn leading_coefficient(&self) -> f64 {
        self.c0
    }

    /// `ln(c_{l,0} z^l 2^exp2)`, the common factor of `z^m f^{(m)}(z)`.
    pub fn ln_prefactor(&self) -> f64 {
        self.ln_c0 + self.l as f64 * self.z.ln() + self.exp2 as f64 * LN_2
    }

    /// `z^m f^{(m)}(z)` divided by `exp(ln_prefactor())`.
    pub fn normalized(&self, m: u32) -> f64 {
        self.terms[m as usize]
    }

    /// The `m`th derivative at `z`.
    pub fn derivative(&self, m: u32) -> f64 {
        if self.z == 0.0 {
            return self.derivative_at_zero(m);
        }
        let t = self.terms[m as usize];
        if t == 0.0 {
            return 0.0;
        }
        let p = self.l as i32 - m as i32;
        let ln_mag = t.abs().ln() + self.ln_c0 + p as f64 * self.z.ln() + self.exp2 as f64 * LN_2;
        if ln_mag.abs() < 650.0 && self.z.ln().abs() * (p.abs() as f64) < 650.0 {
            ldexp(t * self.c0 * self.z.powi(p), self.exp2)
        } else {
            t.signum() * ln_mag.exp()
        }
    }

    /// The `m`th derivative as `mantissa * e^z` for `i_l`; scale 0 for `j_l`.
    pub fn scaled(&self, m: u32) -> ScaledValue {
        match self.kind {
            BesselKind::J => ScaledValue::new(self.derivative(m), 0.0),
            BesselKind::I => {
                let z = self.z;
                if self.exp2 == 0 && z < 600.0 {
                    return ScaledValue::new(self.derivative(m) * (-z).exp(), z);
                }
                let t = self.terms[m as usize];
                let p = self.l as i32 - m as i32;
                let e = self.exp2 as f64;
                let ln_factor =
                    (e * LN2_HI - z) + e * LN2_LO + self.ln_c0 + p as f64 * z.ln();
                ScaledValue::new(t * ln_factor.exp(), z)
            }
        }
    }

    fn derivative_at_zero(&self, m: u32) -> f64 {
        // Only the term with 2k + l = m survives.
        if m < self.l || !(m - self.l).is_multiple_of(2) {
            return 0.0;
        }
        let k = (m - self.l) / 2;
        let sign = if self.kind == BesselKind::J && k % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        let c = coeff_c_wide(self.l, k, self.d).to_f64();
        sign * c * falling(m as f64, m)
    }
}

// Sums the normalized series for derivatives 0..=4.
fn sum_series(kind: BesselKind, nu: f64, l: u32, z: f64) -> ([f64; 5], i32) {
    let mut terms = [0.0; 5];
    if z == 0.0 {
        for (m, t) in terms.iter_mut().enumerate() {
            *t = falling(l as f64, m as u32);
        }
        return (terms, 0);
    }
    let w = Dd::square_of(z);
    let mut sums = [Dd::ZERO; 5];
    let mut mags = [0.0f64; 5];
    let mut u = Dd::ONE;
    let mut exp2 = 0i32;
    let mut k = 0usize;
    let max_terms = 64 + (4.0 * z) as usize;
    let alternating = kind == BesselKind::J;

    let add_term = |k: usize, u: Dd, sums: &mut [Dd; 5], mags: &mut [f64; 5]| {
        let n = (2 * k) as f64 + l as f64;
        let negative = alternating && k % 2 == 1;
        for m in 0..5 {
            let f = falling(n, m as u32);
            if f != 0.0 {
                let mut term = u.mul_f64(f);
                if negative {
                    term = -term;
                }
                sums[m] = sums[m] + term;
                mags[m] += term.abs_hi();
            }
        }
    };

    loop {
        add_term(k, u, &mut sums, &mut mags);
        let kf = k as f64;
        let ratio = w.hi / (4.0 * (kf + 1.0) * (kf + nu + 1.0));
        let next = w.mul(u).div_f64(4.0 * (kf + 1.0) * (kf + nu + 1.0));
        k += 1;
        let mut next = next;
        if next.hi > RESCALE_AT {
            next = next.scale2(RESCALE_BY);
            for s in sums.iter_mut() {
                *s = s.scale2(RESCALE_BY);
            }
            for g in mags.iter_mut() {
                *g *= RESCALE_BY;
            }
            exp2 += RESCALE_BITS;
        }
        u = next;
        if u.hi == 0.0 {
            break;
        }
        if k >= MIN_TERMS && ratio < 0.5 {
            let n = (2 * k) as f64 + l as f64;
            let negligible = (0..5).all(|m| {
                let t = (u.hi * falling(n, m as u32)).abs();
                t < TRUNCATION * sums[m].abs_hi() || t < CANCELLATION_FLOOR * mags[m]
            });
            if negligible {
                add_term(k, u, &mut sums, &mut mags);
                break;
            }
        }
        if k > max_terms {
            break;
        }
    }
    for m in 0..5 {
        terms[m] = sums[m].to_f64();
    }
    (terms, exp2)
}

/// Jet of `j_l` at `z`.
pub fn j_jet(d: u32, l: u32, z: f64) -> Result<Jet> {
    Jet::new(BesselKind::J, d, l, z)
}

/// Jet of `i_l` at `z`.
pub fn i_jet(d: u32, l: u32, z: f64) -> Result<Jet> {
    Jet::new(BesselKind::I, d, l, z)
}

/// The `m`th derivative of `j_l`.
pub fn eval_j(q: BesselQuery) -> Result<f64> {
    q.validate()?;
    Ok(j_jet(q.d, q.l, q.z)?.derivative(q.m))
}

/// The `m`th derivative of `i_l` as a value scaled by `e^{-z}`.
pub fn eval_i_scaled(q: BesselQuery) -> Result<ScaledValue> {
    q.validate()?;
    Ok(i_jet(q.d, q.l, q.z)?.scaled(q.m))
}

/// The `m`th derivative of `i_l`, unscaled.
pub fn eval_i(q: BesselQuery) -> Result<f64> {
    q.validate()?;
    Ok(i_jet(q.d, q.l, q.z)?.derivative(q.m))
}

const P11_TOL: f64 = 1e-13;

fn p11_cache() -> &'static RwLock<HashMap<u32, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<u32, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// First positive zero of `j_1'`, by bisection on `(sqrt(d), sqrt(d+2))`.
pub fn p11(d: u32) -> Result<f64> {
    check_dimension(d)?;
    if let Some(v) = p11_cache().read().ok().and_then(|c| c.get(&d).copied()) {
        return Ok(v);
    }
    let v = p11_uncached(d)?;
    if let Ok(mut c) = p11_cache().write() {
        c.insert(d, v);
    }
    Ok(v)
}

fn p11_uncached(d: u32) -> Result<f64> {
    // j_1' has the sign of the normalized first-derivative term.
    let slope = |z: f64| -> Result<f64> { Ok(j_jet(d, 1, z)?.normalized(1)) };
    let mut lo = (d as f64).sqrt();
    let mut hi = (d as f64 + 2.0).sqrt();
    let (flo, fhi) = (slope(lo)?, slope(hi)?);
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::NoSignChange {
            context: format!("j_1' on (sqrt({d}), sqrt({}))", d + 2),
            trace: vec![(lo, flo), (hi, fhi)],
        });
    }
    while hi - lo > P11_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
