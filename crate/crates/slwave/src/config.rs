//! Run configuration: `[section]` headers and `key = value` lines.
//!
//! ```text
//! # comment
//! [problem]
//! nu = H(x - 0.5)
//! u0 = sin:1
//!
//! [numerics]
//! modes = 8
//! ```
//!
//! Sections are `problem`, `numerics`, `vws` and `output`. Every key has a
//! default, unknown keys are rejected and errors carry the line number. A
//! file whose first non-blank character is `{` is read as the JSON form
//! written to `config.json` by every run.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use slwave_core::MollifierSpec;

use crate::expr::{self, XFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: String,
    pub nu: String,
    pub u0: String,
    pub u1: String,
    /// Source `f(t, x)`; used by `solve-forced` and the forced estimates.
    pub f: String,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            p: "zero".into(),
            nu: "zero".into(),
            u0: "zero".into(),
            u1: "zero".into(),
            f: "zero".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    pub modes: usize,
    /// Grid intervals `m`.
    pub grid: usize,
    pub tol: f64,
    pub t_end: f64,
    /// Equispaced samples of `[0, T]` for sup-in-time quantities.
    pub t_samples: usize,
    /// Field dump times; empty means `0, T/2, T`.
    pub snapshots: Vec<f64>,
    /// Mesh width of the finite-difference reference.
    pub fd_h: f64,
    /// Estimate ids, or `all`.
    pub estimates: Vec<String>,
    /// Order `k` for est5 and es-nh5.
    pub estimate_k: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            modes: 16,
            grid: 4096,
            tol: 1e-10,
            t_end: 1.0,
            t_samples: 33,
            snapshots: Vec::new(),
            fd_h: 1e-3,
            estimates: vec!["all".into()],
            estimate_k: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VwsConfig {
    pub k_min: u32,
    pub k_max: u32,
    pub kernel: String,
    /// Second kernel for `vws-unique`.
    pub kernel_b: String,
    /// Negligibility order `M` of the constructed perturbation.
    pub order: f64,
    pub regularize_coefficients: bool,
    pub regularize_data: bool,
}

impl Default for VwsConfig {
    fn default() -> Self {
        VwsConfig {
            k_min: 2,
            k_max: 8,
            kernel: "bump".into(),
            kernel_b: "bump".into(),
            order: 6.0,
            regularize_coefficients: true,
            regularize_data: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    /// Subset of `csv`, `json`.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub numerics: NumericsConfig,
    pub vws: VwsConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub msg: String,
}

impl ConfigError {
    fn at(line: usize, msg: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            msg: msg.into(),
        }
    }

    fn plain(msg: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            msg: msg.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.msg),
            None => f.write_str(&self.msg),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Expands a preset (`zero`, `const:a`, `sin:k`, `bump`, `heaviside:x0:h`,
/// `kink`) to its expression; anything else is returned unchanged.
pub fn expand_preset(value: &str) -> Result<String, String> {
    let parts: Vec<&str> = value.trim().split(':').map(str::trim).collect();
    let number = |s: &str| -> Result<f64, String> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("preset '{value}': '{s}' is not a number"))
    };
    let arity = |n: usize| -> Result<(), String> {
        if parts.len() == n + 1 {
            Ok(())
        } else {
            Err(format!("preset '{}' takes {n} parameter(s)", parts[0]))
        }
    };
    match parts[0] {
        "zero" => arity(0).map(|_| "0".into()),
        "const" => {
            arity(1)?;
            Ok(format!("{:?}", number(parts[1])?))
        }
        "sin" => {
            arity(1)?;
            Ok(format!("sin({:?} * pi * x)", number(parts[1])?))
        }
        "bump" => arity(0).map(|_| "H(x - 0.25) * H(0.75 - x) * exp(1 - 1 / (1 - (4 * x - 2)^2))".into()),
        "heaviside" => {
            arity(2)?;
            let (x0, h) = (number(parts[1])?, number(parts[2])?);
            Ok(format!("{h:?} * H(x - {x0:?})"))
        }
        "kink" => arity(0).map(|_| "x + (1 - 2 * x) * H(x - 0.5)".into()),
        _ if parts.len() > 1 => Err(format!("unknown preset '{}'", parts[0])),
        _ => Ok(value.trim().to_string()),
    }
}

/// A function of `x` from a preset or expression.
pub fn x_function(value: &str) -> Result<XFunction, String> {
    XFunction::parse(&expand_preset(value)?)
}

/// A function of `(t, x)` from a preset or expression.
pub fn tx_function(value: &str) -> Result<expr::Expr, String> {
    let e = expr::parse(&expand_preset(value)?).map_err(|e| e.to_string())?;
    XFunction::new(with_t_zero(&e)).map_err(|m| format!("at t = 0: {m}"))?;
    Ok(e)
}

fn with_t_zero(e: &expr::Expr) -> expr::Expr {
    use expr::Expr::*;
    let b = |a: &expr::Expr| Box::new(with_t_zero(a));
    match e {
        T => Num(0.0),
        Num(v) => Num(*v),
        X => X,
        Neg(a) => Neg(b(a)),
        Add(a, c) => Add(b(a), b(c)),
        Sub(a, c) => Sub(b(a), b(c)),
        Mul(a, c) => Mul(b(a), b(c)),
        Div(a, c) => Div(b(a), b(c)),
        Pow(a, c) => Pow(b(a), b(c)),
        Sin(a) => Sin(b(a)),
        Cos(a) => Cos(b(a)),
        Exp(a) => Exp(b(a)),
        Log(a) => Log(b(a)),
        Sqrt(a) => Sqrt(b(a)),
        Step(i, a) => Step(*i, b(a)),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| ConfigError::at(line, format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::at(line, format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn parse_list(v: &str) -> Vec<String> {
    v.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Line on which each key was set, for validation messages.
#[derive(Default)]
struct Lines(Vec<(String, usize)>);

impl Lines {
    fn of(&self, key: &str) -> Option<usize> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, l)| *l)
    }
}

/// Parses the line-oriented format and validates the result.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut section: Option<String> = None;
    let mut lines = Lines::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line, "unterminated section header"))?
                .trim();
            if !["problem", "numerics", "vws", "output"].contains(&name) {
                return Err(ConfigError::at(line, format!("unknown section '{name}'")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, format!("expected key = value, got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section
            .as_deref()
            .ok_or_else(|| ConfigError::at(line, format!("key '{key}' outside a section")))?;
        let full = format!("{sec}.{key}");
        if lines.of(&full).is_some() {
            return Err(ConfigError::at(line, format!("duplicate key '{full}'")));
        }
        lines.0.push((full.clone(), line));
        let (p, n, w, o) = (&mut cfg.problem, &mut cfg.numerics, &mut cfg.vws, &mut cfg.output);
        match (sec, key) {
            ("problem", "p") => p.p = value.into(),
            ("problem", "nu") => p.nu = value.into(),
            ("problem", "u0") => p.u0 = value.into(),
            ("problem", "u1") => p.u1 = value.into(),
            ("problem", "f") => p.f = value.into(),
            ("numerics", "modes") => n.modes = parse_num(line, key, value)?,
            ("numerics", "grid") => n.grid = parse_num(line, key, value)?,
            ("numerics", "tol") => n.tol = parse_num(line, key, value)?,
            ("numerics", "t_end") => n.t_end = parse_num(line, key, value)?,
            ("numerics", "t_samples") => n.t_samples = parse_num(line, key, value)?,
            ("numerics", "snapshots") => {
                n.snapshots = parse_list(value)
                    .iter()
                    .map(|s| parse_num(line, key, s))
                    .collect::<Result<_, _>>()?
            }
            ("numerics", "fd_h") => n.fd_h = parse_num(line, key, value)?,
            ("numerics", "estimates") => n.estimates = parse_list(value),
            ("numerics", "estimate_k") => n.estimate_k = parse_num(line, key, value)?,
            ("vws", "k_min") => w.k_min = parse_num(line, key, value)?,
            ("vws", "k_max") => w.k_max = parse_num(line, key, value)?,
            ("vws", "ladder") => {
                let (a, b) = parse_ladder(value).map_err(|m| ConfigError::at(line, m))?;
                w.k_min = a;
                w.k_max = b;
            }
            ("vws", "kernel") => w.kernel = value.into(),
            ("vws", "kernel_b") => w.kernel_b = value.into(),
            ("vws", "order") => w.order = parse_num(line, key, value)?,
            ("vws", "regularize_coefficients") => w.regularize_coefficients = parse_bool(line, key, value)?,
            ("vws", "regularize_data") => w.regularize_data = parse_bool(line, key, value)?,
            ("output", "dir") => o.dir = value.into(),
            ("output", "formats") => o.formats = parse_list(value),
            _ => return Err(ConfigError::at(line, format!("unknown key '{full}'"))),
        }
    }
    cfg.validate().map_err(|(key, msg)| ConfigError {
        line: key.and_then(|k| {
            lines
                .of(k)
                .or_else(|| k.starts_with("vws.k_").then(|| lines.of("vws.ladder")).flatten())
        }),
        msg,
    })?;
    Ok(cfg)
}

/// `KMIN:KMAX`.
pub fn parse_ladder(v: &str) -> Result<(u32, u32), String> {
    let (a, b) = v
        .split_once(':')
        .ok_or_else(|| format!("ladder '{v}' must look like KMIN:KMAX"))?;
    let a = a.trim().parse().map_err(|_| format!("ladder '{v}': bad k_min"))?;
    let b = b.trim().parse().map_err(|_| format!("ladder '{v}': bad k_max"))?;
    Ok((a, b))
}

/// Reads either form from disk.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::plain(format!("cannot read {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| ConfigError::at(e.line(), e.to_string()))?;
        cfg.validate().map_err(|(_, m)| ConfigError::plain(m))?;
        Ok(cfg)
    } else {
        parse_config(&text)
    }
}

type Invalid = (Option<&'static str>, String);

fn check(ok: bool, key: &'static str, msg: impl FnOnce() -> String) -> Result<(), Invalid> {
    if ok {
        Ok(())
    } else {
        Err((Some(key), format!("{key}: {}", msg())))
    }
}

impl RunConfig {
    /// Checks ranges and that every function parses.
    pub fn validate(&self) -> Result<(), Invalid> {
        let pr = &self.problem;
        for (key, v) in [
            ("problem.p", &pr.p),
            ("problem.nu", &pr.nu),
            ("problem.u0", &pr.u0),
            ("problem.u1", &pr.u1),
        ] {
            x_function(v).map_err(|m| (Some(key), format!("{key}: {m}")))?;
        }
        tx_function(&pr.f).map_err(|m| (Some("problem.f"), format!("problem.f: {m}")))?;

        let n = &self.numerics;
        check((1..=512).contains(&n.modes), "numerics.modes", || {
            format!("{} is outside 1..=512", n.modes)
        })?;
        check(
            n.grid >= 16 && n.grid % 2 == 0 && n.grid <= 1 << 20,
            "numerics.grid",
            || format!("{} must be even and within 16..=1048576", n.grid),
        )?;
        check(n.tol > 0.0 && n.tol <= 1e-4, "numerics.tol", || {
            format!("{} is outside (0, 1e-4]", n.tol)
        })?;
        check(n.t_end > 0.0 && n.t_end <= 1e3, "numerics.t_end", || {
            format!("{} is outside (0, 1000]", n.t_end)
        })?;
        check((2..=100_000).contains(&n.t_samples), "numerics.t_samples", || {
            format!("{} is outside 2..=100000", n.t_samples)
        })?;
        for &s in &n.snapshots {
            check((0.0..=n.t_end).contains(&s), "numerics.snapshots", || {
                format!("{s} is outside [0, t_end]")
            })?;
        }
        check(n.fd_h > 0.0 && n.fd_h <= 0.1, "numerics.fd_h", || {
            format!("{} is outside (0, 0.1]", n.fd_h)
        })?;
        check(!n.estimates.is_empty(), "numerics.estimates", || "empty list".into())?;
        for id in &n.estimates {
            if id != "all" {
                slwave_core::estimates::EstimateId::parse(id)
                    .map_err(|e| (Some("numerics.estimates"), format!("numerics.estimates: {e}")))?;
            }
        }
        check(n.estimate_k.is_finite() && n.estimate_k.abs() <= 4.0, "numerics.estimate_k", || {
            format!("{} is outside [-4, 4]", n.estimate_k)
        })?;

        let w = &self.vws;
        check(w.k_min >= 1, "vws.k_min", || "must be at least 1".into())?;
        check(w.k_max <= 16, "vws.k_max", || format!("{} exceeds 16", w.k_max))?;
        if w.k_min > w.k_max {
            return Err((
                Some("vws.k_max"),
                format!("vws: ladder k_min = {} exceeds k_max = {}", w.k_min, w.k_max),
            ));
        }
        for (key, id) in [("vws.kernel", &w.kernel), ("vws.kernel_b", &w.kernel_b)] {
            MollifierSpec::from_id(id).map_err(|e| (Some(key), format!("{key}: {e}")))?;
        }
        check(w.order > 0.0 && w.order <= 20.0, "vws.order", || {
            format!("{} is outside (0, 20]", w.order)
        })?;

        let o = &self.output;
        check(!o.dir.is_empty(), "output.dir", || "empty".into())?;
        for f in &o.formats {
            check(f == "csv" || f == "json", "output.formats", || format!("unknown format '{f}'"))?;
        }
        Ok(())
    }

    /// Field dump times.
    pub fn snapshot_times(&self) -> Vec<f64> {
        if self.numerics.snapshots.is_empty() {
            let t = self.numerics.t_end;
            vec![0.0, 0.5 * t, t]
        } else {
            self.numerics.snapshots.clone()
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = parse_config("[problem]\nu0 = sin:1\n").unwrap();
        assert_eq!(c.numerics.modes, 16);
        assert_eq!(c.numerics.grid, 4096);
        assert_eq!(c.numerics.tol, 1e-10);
        assert_eq!(c.numerics.t_end, 1.0);
        assert_eq!(c.problem.p, "zero");
    }

    #[test]
    fn unknown_key_is_named_with_line() {
        let e = parse_config("[problem]\nu0 = 0\n\n[numerics]\nmodez = 3\n").unwrap_err();
        assert_eq!(e.line, Some(5));
        assert!(e.msg.contains("modez"), "{e}");
    }

    #[test]
    fn validation_errors_point_at_the_line() {
        let e = parse_config("[vws]\nk_min = 6\nk_max = 3\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.msg.contains("k_min"));
        let e = parse_config("[problem]\nnu = sin(\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_config("[numerics]\ngrid = 4095\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(parse_config("modes = 3\n").is_err());
        assert!(parse_config("[extra]\n").is_err());
        assert!(parse_config("[numerics]\nmodes = 3\nmodes = 4\n").is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(expand_preset("zero").unwrap(), "0");
        assert_eq!(expand_preset("const:2.5").unwrap(), "2.5");
        assert!(expand_preset("const").is_err());
        assert!(expand_preset("wobble:3").is_err());
        let h = x_function("heaviside:0.5:2").unwrap();
        assert_eq!(h.breakpoints(), &[0.5]);
        assert_eq!(h.value(0.7), 2.0);
        let s = x_function("sin:2").unwrap();
        assert!((s.value(0.25) - 1.0).abs() < 1e-15);
        let k = x_function("kink").unwrap();
        assert_eq!(k.value(0.75), 0.25);
        let b = x_function("bump").unwrap();
        assert_eq!(b.value(0.5), 1.0);
        assert_eq!(b.value(0.1), 0.0);
    }

    #[test]
    fn forcing_may_use_t_but_coefficients_may_not() {
        assert!(parse_config("[problem]\nf = sin(t) * x\n").is_ok());
        assert!(parse_config("[problem]\np = t\n").is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = parse_config("[problem]\nnu = 0.3*cos(2*pi*x)\n[numerics]\ntol = 1e-9\nsnapshots = 0.1, 0.7\n[vws]\nladder = 3:6\n")
            .unwrap();
        let back: RunConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }
}
