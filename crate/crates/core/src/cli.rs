//! Command-line front end. Data goes to stdout (or `--output`), diagnostics
//! to stderr.
//!
//! Exit codes: 0 success, 1 a verdict failed, 2 invalid input or
//! unsupported request, 3 no bracketing sign change.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::ball_spectrum::{fundamental_tone, omega_bounds};
use crate::boundary_operators::{sigma_extremes, PlateParams};
use crate::error::{Error, Result};
use crate::special_functions::ScaledValue;
use crate::verdict::VerdictRecord;
use crate::verification::domains::{quotient_report, quotient_verdict, DomainSpec};
use crate::verification::spectrum::{
    neg_wl_rows, neg_wl_sigma, neg_wl_verdict, root_curves, root_ordering_verdicts, RootCurvePoint,
};
use crate::verification::{log_space, run_suite, ScanConfig, SigmaSet, Suite, TauChoice, VerifyOptions};

pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BRACKET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "freeplate", version, about = "Free plate under tension on the unit ball")]
pub struct Cli {
    /// Worker threads for parameter scans (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Write data here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fundamental tone of the unit ball.
    Solve(SolveArgs),
    /// Data behind the two figures.
    Figure(FigureArgs),
    /// Run verification suites; exits 1 if any check fails.
    Verify(VerifyArgs),
    /// Rayleigh quotient of the ball mode over another domain.
    Quotient(QuotientArgs),
    /// First roots of W_l over a tension grid, with the ordering verdict.
    ScanRoots(ScanArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub dim: u32,
    #[arg(long)]
    pub tau: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: f64,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// `neg-wl` or `w-roots`.
    #[arg(long)]
    pub id: String,
    #[arg(long)]
    pub dim: u32,
    /// Single tension (neg-wl).
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Tension grid (w-roots): `log:lo:hi:n`, `lin:lo:hi:n` or a comma list.
    #[arg(long, default_value = "log:1e-6:1e3:50")]
    pub tau_grid: String,
    /// Poisson ratio for neg-wl (default: just above the window floor).
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Number of `a` samples (neg-wl).
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Highest order for w-roots.
    #[arg(long, default_value_t = 4)]
    pub l_max: u32,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// all, bessel, boundary, spectrum, profile, polynomials, monotonicity, rearrangement.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,10,100")]
    pub dims: Vec<u32>,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Monotonicity points: comma list or `extremes`.
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<String>,
    /// Monotonicity tensions: `small`, `large` or a comma list.
    #[arg(long)]
    pub tau: Option<String>,
}

#[derive(Debug, Args)]
pub struct QuotientArgs {
    /// ball, annulus or ellipsoid.
    #[arg(long)]
    pub domain: String,
    #[arg(long, value_delimiter = ',')]
    pub axes: Option<Vec<f64>>,
    /// Inner-to-outer radius ratio of an annulus.
    #[arg(long)]
    pub inner: Option<f64>,
    /// Use the given size as is instead of rescaling to the unit-ball volume.
    #[arg(long)]
    pub raw: bool,
    #[arg(long)]
    pub dim: u32,
    #[arg(long)]
    pub tau: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: f64,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3,10,100")]
    pub dims: Vec<u32>,
    #[arg(long, default_value = "log:1e-6:1e3:50")]
    pub tau_grid: String,
    #[arg(long, default_value_t = 5)]
    pub l_max: u32,
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (1e-4..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Decimal form of a scaled value; falls back to an explicit power of ten
/// when the value is outside the `f64` range.
pub fn fmt_scaled(v: &ScaledValue) -> String {
    let x = v.value();
    if v.mantissa == 0.0 || (x.is_finite() && x.abs() >= f64::MIN_POSITIVE) {
        return fmt_num(x);
    }
    let l10 = v.ln_abs() / std::f64::consts::LN_10;
    // a log of size L only pins about 15 - log10(L) digits
    let prec = (15.0 - v.ln_abs().abs().max(1.0).log10().ceil()).clamp(6.0, 14.0) as usize;
    let e = l10.floor();
    let mut m = 10f64.powf(l10 - e);
    let mut e = e as i64;
    if format!("{m:.prec$}").starts_with("10") {
        m /= 10.0;
        e += 1;
    }
    let digits = format!("{m:.prec$}");
    let digits = digits.trim_end_matches('0').trim_end_matches('.');
    format!("{}{digits}e{e}", if v.mantissa < 0.0 { "-" } else { "" })
}

/// `log10 |v|`, finite for any nonzero scaled value.
pub fn log10_abs(v: &ScaledValue) -> f64 {
    v.ln_abs() / std::f64::consts::LN_10
}

/// Parses `log:lo:hi:n`, `lin:lo:hi:n` or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParams(format!("cannot parse grid '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        [kind @ ("log" | "lin"), lo, hi, n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            if n == 0 || !(lo.is_finite() && hi.is_finite()) || hi < lo {
                return Err(bad());
            }
            if *kind == "log" {
                if !(lo > 0.0) {
                    return Err(bad());
                }
                Ok(log_space(lo, hi, n))
            } else if n == 1 {
                Ok(vec![lo])
            } else {
                let step = (hi - lo) / (n - 1) as f64;
                Ok((0..n).map(|k| if k + 1 == n { hi } else { lo + step * k as f64 }).collect())
            }
        }
        [one] => one.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoSignChange { .. } => EXIT_BRACKET,
        _ => EXIT_INVALID,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(&cli) {
        Ok((text, code)) => match emit(&cli, &text) {
            Ok(()) => code,
            Err(msg) => {
                eprintln!("error: {msg}");
                EXIT_INVALID
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(cli: &Cli, text: &str) -> std::result::Result<(), String> {
    match &cli.output {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| e.to_string())
        }
    }
}

fn execute(cli: &Cli) -> Result<(String, i32)> {
    match &cli.command {
        Command::Solve(a) => solve(a, cli.format.unwrap_or(Format::Json)),
        Command::Figure(a) => figure(a, cli.format.unwrap_or(Format::Csv)),
        Command::Verify(a) => verify(a, cli.format.unwrap_or(Format::Json)),
        Command::Quotient(a) => quotient(a, cli.format.unwrap_or(Format::Json)),
        Command::ScanRoots(a) => scan_roots(a, cli.format.unwrap_or(Format::Csv)),
    }
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn solve(a: &SolveArgs, fmt: Format) -> Result<(String, i32)> {
    let p = PlateParams::new(a.dim, a.tau, a.sigma)?;
    let sp = fundamental_tone(&p)?;
    let (lo, hi) = omega_bounds(p.d, p.tau)?;
    let text = match fmt {
        Format::Json => to_json(&json!({
            "d": sp.d,
            "tau": sp.tau,
            "sigma": sp.sigma,
            "l": sp.l,
            "a": sp.a,
            "b": sp.b,
            "gamma": sp.gamma,
            "gamma_log10": log10_abs(&sp.gamma_scaled) * sp.gamma_scaled.signum(),
            "omega": sp.omega,
            "residual_M": sp.residual_m,
            "residual_V": sp.residual_v,
            "bounds": {"lower": lo, "upper": hi},
        })),
        Format::Csv => {
            let h = ["d", "tau", "sigma", "l", "a", "b", "gamma", "omega", "residual_M", "residual_V", "lower", "upper"];
            let row = vec![
                sp.d.to_string(),
                fmt_num(sp.tau),
                fmt_num(sp.sigma),
                sp.l.to_string(),
                fmt_num(sp.a),
                fmt_num(sp.b),
                fmt_scaled(&sp.gamma_scaled),
                fmt_num(sp.omega),
                fmt_num(sp.residual_m),
                fmt_num(sp.residual_v),
                fmt_num(lo),
                fmt_num(hi),
            ];
            csv(&h.map(String::from), &[row])
        }
    };
    Ok((text, 0))
}

fn figure(a: &FigureArgs, fmt: Format) -> Result<(String, i32)> {
    if fmt == Format::Json {
        return Err(Error::InvalidParams("figures are emitted as CSV only".into()));
    }
    match a.id.as_str() {
        "neg-wl" => {
            let sigma = a.sigma.unwrap_or_else(|| neg_wl_sigma(a.dim));
            let p = PlateParams::new(a.dim, a.tau, sigma)?;
            let rows = neg_wl_rows(&p, a.points.max(2))?;
            let v = neg_wl_verdict(&p, &rows);
            report_to_stderr(std::slice::from_ref(&v));
            let mut header = vec!["a".to_string()];
            header.extend((2..=5).map(|l| format!("neg_w{l}")));
            header.extend((2..=5).map(|l| format!("log10_neg_w{l}")));
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut row = vec![fmt_num(r.a)];
                    row.extend(r.neg_w.iter().map(fmt_scaled));
                    row.extend(r.neg_w.iter().map(|v| {
                        if v.mantissa > 0.0 { fmt_num(log10_abs(v)) } else { "nan".into() }
                    }));
                    row
                })
                .collect();
            Ok((csv(&header, &body), 0))
        }
        "w-roots" => {
            let cfg = ScanConfig {
                dims: vec![a.dim],
                tau_grid: parse_grid(&a.tau_grid)?,
                sigma_set: SigmaSet::Extremes,
                l_max: a.l_max,
                points_per_axis: 50,
            };
            let curves = root_curves(&cfg)?;
            report_to_stderr(&root_ordering_verdicts(&curves));
            Ok((root_csv(&curves, a.l_max, false), 0))
        }
        other => Err(Error::InvalidParams(format!("unknown figure id '{other}' (neg-wl, w-roots)"))),
    }
}

/// Root curves as CSV. The figure layout puts `l >= 2` at the upper end of
/// the window first and appends the lower-end curves.
fn root_csv(curves: &[RootCurvePoint], l_max: u32, with_dim: bool) -> String {
    let mut header: Vec<String> = Vec::new();
    if with_dim {
        header.push("d".into());
    }
    header.extend(["tau", "a1_sigma_low", "a1_sigma_high"].map(String::from));
    header.extend((2..=l_max).map(|l| format!("a{l}_sigma_high")));
    header.extend((2..=l_max).map(|l| format!("a{l}_sigma_low")));
    let opt = |r: Option<f64>| r.map(fmt_num).unwrap_or_else(|| "inf".into());
    let rows: Vec<Vec<String>> = curves
        .iter()
        .map(|c| {
            let mut row = Vec::new();
            if with_dim {
                row.push(c.d.to_string());
            }
            row.extend([fmt_num(c.tau), fmt_num(c.a1_low), fmt_num(c.a1_high)]);
            row.extend(c.higher.iter().map(|h| opt(h.2)));
            row.extend(c.higher.iter().map(|h| opt(h.1)));
            row
        })
        .collect();
    csv(&header, &rows)
}

fn report_to_stderr(v: &[VerdictRecord]) {
    for r in v {
        let p: Vec<String> = r.params.iter().map(|(k, x)| format!("{k}={}", fmt_num(*x))).collect();
        eprintln!(
            "{} {} [{}] margin={} tol={} at {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.check_id,
            p.join(","),
            fmt_num(r.worst_margin),
            fmt_num(r.tolerance),
            r.location
        );
    }
}

fn verdict_json(r: &VerdictRecord) -> Value {
    let mut params = Map::new();
    for (k, v) in &r.params {
        params.insert(k.clone(), json!(v));
    }
    json!({
        "check_id": r.check_id,
        "params": params,
        "pass": r.pass,
        "worst_margin": r.worst_margin,
        "tolerance": r.tolerance,
        "location": r.location,
    })
}

fn verdicts_out(label: &str, v: &[VerdictRecord], fmt: Format, extra: Option<Value>) -> String {
    let pass = v.iter().all(|r| r.pass);
    match fmt {
        Format::Json => {
            let mut obj = json!({
                "command": label,
                "pass": pass,
                "failed": v.iter().filter(|r| !r.pass).count(),
                "checks": v.iter().map(verdict_json).collect::<Vec<_>>(),
            });
            if let (Some(Value::Object(m)), Value::Object(o)) = (extra, &mut obj) {
                o.extend(m);
            }
            to_json(&obj)
        }
        Format::Csv => {
            let header = ["check_id", "pass", "worst_margin", "tolerance", "location", "params"].map(String::from);
            let rows: Vec<Vec<String>> = v
                .iter()
                .map(|r| {
                    let mut p = String::new();
                    for (k, x) in &r.params {
                        let _ = write!(p, "{}{k}={}", if p.is_empty() { "" } else { ";" }, fmt_num(*x));
                    }
                    vec![
                        r.check_id.clone(),
                        r.pass.to_string(),
                        fmt_num(r.worst_margin),
                        fmt_num(r.tolerance),
                        format!("\"{}\"", r.location.replace('"', "'")),
                        format!("\"{p}\""),
                    ]
                })
                .collect();
            csv(&header, &rows)
        }
    }
}

fn parse_sigmas(s: &str, dims: &[u32]) -> Result<Vec<f64>> {
    if s == "extremes" {
        let mut v = Vec::new();
        for &d in dims {
            let (lo, hi) = sigma_extremes(d);
            v.extend([lo, hi]);
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        // keep only ratios valid in every requested dimension
        v.retain(|&s| dims.iter().all(|&d| s >= sigma_extremes(d).0));
        Ok(v)
    } else {
        parse_grid(s)
    }
}

fn verify(a: &VerifyArgs, fmt: Format) -> Result<(String, i32)> {
    let suite: Suite = a.suite.parse()?;
    let tau = match a.tau.as_deref() {
        None => TauChoice::Branches,
        Some("small") => TauChoice::Small,
        Some("large") => TauChoice::Large,
        Some(list) => TauChoice::Values(parse_grid(list)?),
    };
    let sigmas = a.sigma.as_deref().map(|s| parse_sigmas(s, &a.dims)).transpose()?;
    if (sigmas.is_some() || tau != TauChoice::Branches) && suite != Suite::Monotonicity {
        return Err(Error::InvalidParams("--sigma/--tau apply to the monotonicity suite only".into()));
    }
    let opts = VerifyOptions { dims: a.dims.clone(), resolution: a.resolution, sigmas, tau };
    let v = run_suite(suite, &opts)?;
    report_to_stderr(&v);
    let code = if v.iter().all(|r| r.pass) { 0 } else { EXIT_FAILED };
    Ok((verdicts_out(&format!("verify:{}", a.suite), &v, fmt, None), code))
}

fn quotient(a: &QuotientArgs, fmt: Format) -> Result<(String, i32)> {
    let mut dom = match a.domain.as_str() {
        "ball" => DomainSpec::ball(),
        "annulus" => DomainSpec::annulus(a.inner.ok_or_else(|| {
            Error::UnsupportedDomain("annulus needs --inner".into())
        })?),
        "ellipsoid" => DomainSpec::ellipsoid(a.axes.as_deref().ok_or_else(|| {
            Error::UnsupportedDomain("ellipsoid needs --axes".into())
        })?),
        other => return Err(Error::UnsupportedDomain(format!("unknown domain '{other}'"))),
    };
    dom.normalized = !a.raw;
    let p = PlateParams::new(a.dim, a.tau, a.sigma)?;
    let r = quotient_report(&p, &dom)?;
    let v = quotient_verdict(&p, &dom, &r);
    report_to_stderr(std::slice::from_ref(&v));
    let code = if v.pass { 0 } else { EXIT_FAILED };
    let extra = json!({
        "domain": r.domain,
        "d": r.d,
        "tau": r.tau,
        "sigma": r.sigma,
        "quotient": r.quotient,
        "omega_star": r.omega_star,
        "margin": r.margin,
        "relative_margin": r.margin / r.omega_star,
    });
    Ok((verdicts_out("quotient", &[v], fmt, Some(extra)), code))
}

fn scan_roots(a: &ScanArgs, fmt: Format) -> Result<(String, i32)> {
    let cfg = ScanConfig {
        dims: a.dims.clone(),
        tau_grid: parse_grid(&a.tau_grid)?,
        sigma_set: SigmaSet::Extremes,
        l_max: a.l_max,
        points_per_axis: 50,
    };
    let curves = root_curves(&cfg)?;
    let v = root_ordering_verdicts(&curves);
    report_to_stderr(&v);
    let code = if v.iter().all(|r| r.pass) { 0 } else { EXIT_FAILED };
    let text = match fmt {
        Format::Csv => root_csv(&curves, a.l_max, true),
        Format::Json => verdicts_out("scan-roots", &v, fmt, Some(json!({ "curves": curves }))),
    };
    Ok((text, code))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [1.5935955647768076, 1e-20, 3e300, 0.0, -2.5e-7, 123456.0, 1e16] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn scaled_format_beyond_range() {
        let v = ScaledValue::new(2.0, 1000.0 * std::f64::consts::LN_10);
        assert_eq!(fmt_scaled(&v), "2e1000");
        let v = ScaledValue::new(-3.0, -2000.0 * std::f64::consts::LN_10);
        assert_eq!(fmt_scaled(&v), "-3e-2000");
        assert_eq!(fmt_scaled(&ScaledValue::new(1.5, 0.0)), "1.5");
    }

    #[test]
    fn exit_codes() {
        let e = Error::NoSignChange { context: "W_1".into(), trace: vec![] };
        assert_eq!(exit_code(&e), EXIT_BRACKET);
        assert_eq!(exit_code(&Error::UnsupportedDomain("x".into())), EXIT_INVALID);
        assert_eq!(exit_code(&Error::ArgumentCap { z: 60.0, cap: 50.0 }), EXIT_INVALID);
    }

    #[test]
    fn grids() {
        let g = parse_grid("log:1e-6:1e3:10").unwrap();
        assert_eq!((g.len(), g[0], g[9]), (10, 1e-6, 1e3));
        assert_eq!(parse_grid("lin:0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("lin:0.1:0.7:7").unwrap()[6], 0.7);
        assert_eq!(parse_grid("1,2.5").unwrap(), vec![1.0, 2.5]);
        assert!(parse_grid("log:0:1:3").is_err());
        assert!(parse_grid("log:1:2").is_err());
    }
}
