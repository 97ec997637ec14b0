//! Experiment files and CSV reports.
//!
//! An experiment is a flat JSON object; see the README for the key list.
//! SNRs are given in dB here and converted to linear values before reaching
//! the analytic and Monte Carlo code.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::analytic::{alpha, AnalyticModel, ZetaSet};
use crate::channel::{derive_impairments, ImpairmentState, SystemConfig};
use crate::error::SpecError;
use crate::mc::{empirical_majority_cdf, run_outage_mc, McSettings, MIN_CDF_SAMPLES};
use crate::selection::Scheme;
use crate::{db_to_linear, stats};

pub const SWEEP_HEADER: &str = "snr_db,user,scheme,kind,value,stderr,seed,trials";
pub const COMPARE_HEADER: &str = "user,op_level,scheme,reference,snr_db,reference_snr_db,gain_db,status";
pub const CDF_HEADER: &str = "kind,user,x,value";
pub const FLOOR_HEADER: &str = "user,alpha,floor,floor_upper,ideal";

const MAX_GRID_POINTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutputKind {
    Mc,
    Exact,
    Upper,
    Asymptotic,
    Floor,
    Cdf,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::Mc => "mc",
            OutputKind::Exact => "exact",
            OutputKind::Upper => "upper",
            OutputKind::Asymptotic => "asymptotic",
            OutputKind::Floor => "floor",
            OutputKind::Cdf => "cdf",
        }
    }

    pub fn is_analytic(self) -> bool {
        !matches!(self, OutputKind::Mc)
    }
}

impl FromStr for OutputKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "mc" => OutputKind::Mc,
            "exact" => OutputKind::Exact,
            "upper" => OutputKind::Upper,
            "asymptotic" => OutputKind::Asymptotic,
            "floor" => OutputKind::Floor,
            "cdf" => OutputKind::Cdf,
            other => return Err(format!("unknown output `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrRange {
    /// Points `start, start + step, ...` not exceeding `stop`.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub system: SystemConfig,
    pub sigma2_cee: f64,
    pub fd_tau: f64,
    pub snr_db: SnrRange,
    pub schemes: Vec<Scheme>,
    pub outputs: Vec<OutputKind>,
    pub trials: u64,
    pub seed: u64,
    /// Worker threads for Monte Carlo runs; zero uses every core. Does not
    /// affect any output value.
    pub workers: usize,
    pub output: Option<PathBuf>,
    pub coefficients: ZetaSet,
}

const KEYS: &[&str] = &[
    "m",
    "omega",
    "n_t",
    "n_r",
    "powers",
    "thresholds",
    "sigma2_cee",
    "fd_tau",
    "snr_db_start",
    "snr_db_stop",
    "snr_db_step",
    "schemes",
    "outputs",
    "trials",
    "seed",
    "workers",
    "output",
    "coefficients",
];

struct Reader<'a> {
    map: &'a Map<String, Value>,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn get(&mut self, key: &str, required: bool) -> Option<&Value> {
        let v = self.map.get(key);
        if v.is_none() && required {
            self.errors.push(format!("missing key `{key}`"));
        }
        v
    }

    fn number(&mut self, key: &str, default: Option<f64>) -> f64 {
        match self.get(key, default.is_none()).cloned() {
            None => default.unwrap_or(f64::NAN),
            Some(v) => v.as_f64().unwrap_or_else(|| {
                self.errors.push(format!("`{key}` must be a number, got {v}"));
                f64::NAN
            }),
        }
    }

    fn count(&mut self, key: &str, default: Option<u64>) -> u64 {
        match self.get(key, default.is_none()).cloned() {
            None => default.unwrap_or(0),
            Some(v) => v.as_u64().unwrap_or_else(|| {
                self.errors.push(format!("`{key}` must be a non-negative integer, got {v}"));
                0
            }),
        }
    }

    fn numbers(&mut self, key: &str) -> Vec<f64> {
        let Some(v) = self.get(key, true).cloned() else {
            return Vec::new();
        };
        match v.as_array().map(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>()) {
            Some(Some(xs)) => xs,
            _ => {
                self.errors.push(format!("`{key}` must be an array of numbers, got {v}"));
                Vec::new()
            }
        }
    }

    fn parsed<T: FromStr<Err = String>>(&mut self, key: &str) -> Vec<T> {
        let Some(v) = self.get(key, true).cloned() else {
            return Vec::new();
        };
        let Some(items) = v.as_array() else {
            self.errors.push(format!("`{key}` must be an array of strings, got {v}"));
            return Vec::new();
        };
        let mut out = Vec::new();
        for item in items {
            match item.as_str().map(str::parse::<T>) {
                Some(Ok(x)) => out.push(x),
                Some(Err(e)) => self.errors.push(format!("`{key}`: {e}")),
                None => self.errors.push(format!("`{key}` entries must be strings, got {item}")),
            }
        }
        out
    }
}

/// Parses and validates an experiment, reporting every problem found.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec, SpecError> {
    let value: Value = serde_json::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))?;
    let Value::Object(map) = value else {
        return Err(SpecError::Parse("top level must be an object".into()));
    };
    let mut r = Reader { map: &map, errors: Vec::new() };
    for key in map.keys() {
        if !KEYS.contains(&key.as_str()) {
            r.errors.push(format!("unknown key `{key}`"));
        }
    }
    let m = r.number("m", None);
    let omega = r.number("omega", Some(1.0));
    let n_t = r.count("n_t", None) as usize;
    let n_r = r.count("n_r", None) as usize;
    let powers = r.numbers("powers");
    let thresholds = r.numbers("thresholds");
    let sigma2_cee = r.number("sigma2_cee", Some(0.0));
    let fd_tau = r.number("fd_tau", Some(0.0));
    let snr_db = SnrRange {
        start: r.number("snr_db_start", None),
        stop: r.number("snr_db_stop", None),
        step: r.number("snr_db_step", None),
    };
    let schemes: Vec<Scheme> = r.parsed("schemes");
    let outputs: Vec<OutputKind> = r.parsed("outputs");
    let trials = r.count("trials", Some(1_000_000));
    let seed = r.count("seed", Some(1));
    let workers = r.count("workers", Some(0)) as usize;
    let output = match r.get("output", false).cloned() {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(v) => {
            r.errors.push(format!("`output` must be a path string, got {v}"));
            None
        }
    };
    let coefficients = match r.get("coefficients", false).cloned() {
        None => ZetaSet::Published,
        Some(v) => match v.as_str().map(str::parse::<ZetaSet>) {
            Some(Ok(set)) => set,
            Some(Err(e)) => {
                r.errors.push(e);
                ZetaSet::Published
            }
            None => {
                r.errors.push(format!("`coefficients` must be a string, got {v}"));
                ZetaSet::Published
            }
        },
    };
    let mut errors = r.errors;
    let spec = ExperimentSpec {
        system: SystemConfig { m, omega, n_t, n_r, powers, thresholds },
        sigma2_cee,
        fd_tau,
        snr_db,
        schemes: dedup(schemes),
        outputs: dedup(outputs),
        trials,
        seed,
        workers,
        output,
        coefficients,
    };
    if errors.is_empty() {
        errors.extend(spec.problems());
    }
    if errors.is_empty() {
        Ok(spec)
    } else {
        Err(SpecError::Invalid(errors))
    }
}

fn dedup<T: Ord + Copy>(mut xs: Vec<T>) -> Vec<T> {
    xs.sort();
    xs.dedup();
    xs
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec, SpecError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| SpecError::Io { path: path.display().to_string(), source })?;
    parse_spec(&text)
}

impl ExperimentSpec {
    /// Constraint violations across every field.
    pub fn problems(&self) -> Vec<String> {
        let mut out = self.system.problems();
        let cfg_ok = out.is_empty();
        if cfg_ok {
            if let Err(e) = derive_impairments(&self.system, self.sigma2_cee, self.fd_tau) {
                out.push(e.to_string());
            }
        }
        let r = &self.snr_db;
        if !(r.start.is_finite() && r.stop.is_finite() && r.step.is_finite()) {
            out.push("SNR range must be finite".into());
        } else if r.step <= 0.0 {
            out.push(format!("snr_db_step must be > 0, got {}", r.step));
        } else if r.stop < r.start {
            out.push(format!("snr_db_stop {} is below snr_db_start {}", r.stop, r.start));
        } else if (r.stop - r.start) / r.step >= MAX_GRID_POINTS as f64 {
            out.push(format!("SNR grid exceeds {MAX_GRID_POINTS} points"));
        }
        if self.schemes.is_empty() {
            out.push("at least one scheme is required".into());
        }
        if self.outputs.is_empty() {
            out.push("at least one output is required".into());
        }
        if self.trials == 0 {
            out.push("trials must be at least 1".into());
        }
        let analytic = self.outputs.iter().any(|o| o.is_analytic());
        if analytic {
            if cfg_ok && self.system.integer_shape().is_none() {
                out.push(format!(
                    "analytic outputs need an integer m * n_r, got {}",
                    self.system.m * self.system.n_r as f64
                ));
            }
            if self.system.n_t != 2 {
                out.push(format!("analytic outputs need n_t = 2, got {}", self.system.n_t));
            }
            if self.system.powers.len() != 3 {
                out.push(format!("analytic outputs need 3 users, got {}", self.system.powers.len()));
            }
            if !self.schemes.contains(&Scheme::Majority) {
                out.push("analytic outputs describe the majority scheme, which is not listed".into());
            }
        }
        if self.outputs.contains(&OutputKind::Asymptotic) && (self.sigma2_cee != 0.0 || self.fd_tau != 0.0) {
            out.push("the asymptotic output needs an ideal channel (sigma2_cee = fd_tau = 0)".into());
        }
        if self.outputs.contains(&OutputKind::Cdf) && self.trials < MIN_CDF_SAMPLES {
            out.push(format!("the cdf output needs at least {MIN_CDF_SAMPLES} trials"));
        }
        out
    }

    pub fn impairments(&self) -> Result<ImpairmentState, SpecError> {
        derive_impairments(&self.system, self.sigma2_cee, self.fd_tau).map_err(|e| SpecError::model("impairments", e))
    }

    fn analytic_model(&self) -> Result<AnalyticModel, SpecError> {
        AnalyticModel::new(&self.system, &self.impairments()?, self.coefficients)
            .map_err(|e| SpecError::model("analytic model", e))
    }

    fn mc_settings(&self) -> McSettings {
        McSettings::new(self.trials, self.seed).with_workers(self.workers)
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }
}

/// `%.9g`-style formatting.
pub fn format_value(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (8 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    /// One-based.
    pub user: usize,
    pub scheme: Scheme,
    pub kind: &'static str,
    pub value: f64,
    /// Monte Carlo rows only.
    pub mc: Option<McInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McInfo {
    pub stderr: f64,
    pub seed: u64,
    pub trials: u64,
}

impl SweepRow {
    fn csv(&self) -> String {
        let (se, seed, trials) = match &self.mc {
            Some(i) => (format_value(i.stderr), i.seed.to_string(), i.trials.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{se},{seed},{trials}",
            format_value(self.snr_db),
            self.user,
            self.scheme,
            self.kind,
            format_value(self.value)
        )
    }
}

/// Every sweep row, sorted by SNR, user, scheme name and kind.
pub fn sweep_rows(spec: &ExperimentSpec) -> Result<Vec<SweepRow>, SpecError> {
    let imp = spec.impairments()?;
    let snrs = spec.snr_db.points();
    let gammas: Vec<f64> = snrs.iter().map(|&db| db_to_linear(db)).collect();
    let users = spec.system.num_users();
    let mut rows = Vec::new();

    if spec.wants(OutputKind::Mc) {
        for &scheme in &spec.schemes {
            let run = run_outage_mc(&spec.system, &imp, scheme, &gammas, spec.mc_settings())
                .map_err(|e| SpecError::model(format!("{scheme} simulation"), e))?;
            for (p, &db) in snrs.iter().enumerate() {
                for u in 0..users {
                    rows.push(SweepRow {
                        snr_db: db,
                        user: u + 1,
                        scheme,
                        kind: "mc",
                        value: run.frequency(p, u),
                        mc: Some(McInfo { stderr: run.std_error(p, u), seed: run.seed, trials: run.trials }),
                    });
                }
            }
        }
    }

    let analytic: Vec<OutputKind> = spec
        .outputs
        .iter()
        .copied()
        .filter(|k| matches!(k, OutputKind::Exact | OutputKind::Upper | OutputKind::Asymptotic | OutputKind::Floor))
        .collect();
    if !analytic.is_empty() {
        let model = spec.analytic_model()?;
        let ctx = |what: &str, db: f64| format!("{what} at {db} dB");
        for (&db, &gamma) in snrs.iter().zip(&gammas) {
            for u in 0..users {
                let mut push = |kind: &'static str, value: f64| {
                    rows.push(SweepRow { snr_db: db, user: u + 1, scheme: Scheme::Majority, kind, value, mc: None })
                };
                for kind in &analytic {
                    match kind {
                        OutputKind::Exact => push(
                            "exact",
                            model.outage_exact(u, gamma).map_err(|e| SpecError::model(ctx("exact outage", db), e))?,
                        ),
                        OutputKind::Upper => push(
                            "upper",
                            model.outage_upper(u, gamma).map_err(|e| SpecError::model(ctx("upper bound", db), e))?,
                        ),
                        OutputKind::Asymptotic => push(
                            "asymptotic",
                            model
                                .outage_asymptotic(u, gamma)
                                .map_err(|e| SpecError::model(ctx("asymptotic outage", db), e))?,
                        ),
                        OutputKind::Floor => {
                            let f = model.error_floor(u).map_err(|e| SpecError::model("error floor", e))?;
                            push("floor", f.exact);
                            push("floor_upper", f.upper);
                        }
                        _ => {}
                    }
                }
            }
        }
    }

    rows.sort_by(|a, b| {
        a.snr_db
            .total_cmp(&b.snr_db)
            .then(a.user.cmp(&b.user))
            .then(a.scheme.name().cmp(b.scheme.name()))
            .then(a.kind.cmp(b.kind))
    });
    Ok(rows)
}

fn render(header: &str, lines: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Sweep CSV document.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<String, SpecError> {
    Ok(render(SWEEP_HEADER, sweep_rows(spec)?.iter().map(SweepRow::csv)))
}

/// SNR (dB) at which a curve first falls to `level`, interpolating
/// `log10(op)` linearly in dB between the bracketing points. Points with
/// zero outage are ignored.
pub fn crossing_snr_db(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve.iter().copied().filter(|&(_, p)| p > 0.0).collect();
    let target = level.log10();
    for w in pts.windows(2) {
        let ((x0, p0), (x1, p1)) = (w[0], w[1]);
        if p0 >= level && p1 < level {
            let (l0, l1) = (p0.log10(), p1.log10());
            return Some(x0 + (target - l0) * (x1 - x0) / (l1 - l0));
        }
    }
    pts.first().filter(|&&(_, p)| p == level).map(|&(x, _)| x)
}

/// SNR advantage of `curve` over `reference` at `level`, in dB. Positive
/// means `curve` reaches the level at a lower SNR.
pub fn snr_gain_db(curve: &[(f64, f64)], reference: &[(f64, f64)], level: f64) -> Option<f64> {
    Some(crossing_snr_db(reference, level)? - crossing_snr_db(curve, level)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub user: usize,
    pub op_level: f64,
    pub scheme: Scheme,
    pub reference: Scheme,
    pub snr_db: Option<f64>,
    pub reference_snr_db: Option<f64>,
}

impl CompareRow {
    pub fn gain_db(&self) -> Option<f64> {
        Some(self.reference_snr_db? - self.snr_db?)
    }

    fn csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(format_value).unwrap_or_default();
        let status = if self.gain_db().is_some() { "ok" } else { "unreachable" };
        format!(
            "{},{},{},{},{},{},{},{status}",
            self.user,
            format_value(self.op_level),
            self.scheme,
            self.reference,
            opt(self.snr_db),
            opt(self.reference_snr_db),
            opt(self.gain_db())
        )
    }
}

/// Per scheme, one `(snr_db, op)` curve per user.
pub type SchemeCurves = BTreeMap<Scheme, Vec<Vec<(f64, f64)>>>;

/// Outage curves keyed by scheme, then user. Uses Monte Carlo curves for
/// every scheme.
pub fn scheme_curves(spec: &ExperimentSpec) -> Result<SchemeCurves, SpecError> {
    let imp = spec.impairments()?;
    let snrs = spec.snr_db.points();
    let gammas: Vec<f64> = snrs.iter().map(|&db| db_to_linear(db)).collect();
    let mut out = BTreeMap::new();
    for &scheme in &spec.schemes {
        let run = run_outage_mc(&spec.system, &imp, scheme, &gammas, spec.mc_settings())
            .map_err(|e| SpecError::model(format!("{scheme} simulation"), e))?;
        let curves = (0..spec.system.num_users())
            .map(|u| snrs.iter().enumerate().map(|(p, &db)| (db, run.frequency(p, u))).collect())
            .collect();
        out.insert(scheme, curves);
    }
    Ok(out)
}

/// Pairwise SNR differences between schemes at each target outage level.
pub fn compare_rows(spec: &ExperimentSpec, op_levels: &[f64]) -> Result<Vec<CompareRow>, SpecError> {
    let mut problems = Vec::new();
    if spec.schemes.len() < 2 {
        problems.push("comparison needs at least two schemes".to_string());
    }
    if !spec.wants(OutputKind::Mc) {
        problems.push("comparison needs the mc output (closed forms exist for the majority scheme only)".into());
    }
    if op_levels.is_empty() {
        problems.push("at least one outage level is required".into());
    }
    if let Some(l) = op_levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        problems.push(format!("outage levels must lie in (0, 1), got {l}"));
    }
    if !problems.is_empty() {
        return Err(SpecError::Invalid(problems));
    }
    let curves = scheme_curves(spec)?;
    let mut rows = Vec::new();
    for user in 0..spec.system.num_users() {
        for &level in op_levels {
            for (&scheme, mine) in &curves {
                for (&reference, theirs) in &curves {
                    if scheme == reference {
                        continue;
                    }
                    rows.push(CompareRow {
                        user: user + 1,
                        op_level: level,
                        scheme,
                        reference,
                        snr_db: crossing_snr_db(&mine[user], level),
                        reference_snr_db: crossing_snr_db(&theirs[user], level),
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn compare_report(spec: &ExperimentSpec, op_levels: &[f64]) -> Result<String, SpecError> {
    Ok(render(COMPARE_HEADER, compare_rows(spec, op_levels)?.iter().map(CompareRow::csv)))
}

/// Empirical against analytic selected-gain CDFs, plus the KS distance per
/// user and the unanimous-vote frequency.
pub fn cdf_check(spec: &ExperimentSpec) -> Result<String, SpecError> {
    let model = spec.analytic_model()?;
    let imp = spec.impairments()?;
    let emp = empirical_majority_cdf(&spec.system, &imp, spec.trials, spec.seed, spec.workers)
        .map_err(|e| SpecError::model("empirical CDF", e))?;
    let grid = emp.grid();
    let mut lines = Vec::new();
    for user in 0..emp.users() {
        for &x in &grid {
            lines.push(format!("empirical,{},{},{}", user + 1, format_value(x), format_value(emp.cdf_at(user, x))));
        }
        for &x in &grid {
            let v = model.majority_cdf(x, user).map_err(|e| SpecError::model("analytic CDF", e))?;
            lines.push(format!("analytic,{},{},{}", user + 1, format_value(x), format_value(v)));
        }
    }
    for user in 0..emp.users() {
        let ks = emp.ks_distance(user, |x| model.majority_cdf(x, user).unwrap_or(f64::NAN));
        lines.push(format!("ks,{},,{}", user + 1, format_value(ks)));
    }
    lines.push(format!("p_s0,,,{}", format_value(emp.p_unanimous())));
    Ok(render(CDF_HEADER, lines))
}

/// Error floor of every user; SNR-independent.
pub fn floor_report(spec: &ExperimentSpec) -> Result<String, SpecError> {
    let model = spec.analytic_model()?;
    let mut lines = Vec::new();
    for user in 0..spec.system.num_users() {
        let f = model.error_floor(user).map_err(|e| SpecError::model("error floor", e))?;
        let a = alpha(user, &spec.system).value().map(format_value).unwrap_or_else(|| "inf".into());
        lines.push(format!("{},{a},{},{},{}", user + 1, format_value(f.exact), format_value(f.upper), f.ideal));
    }
    Ok(render(FLOOR_HEADER, lines))
}

/// Standard error for comparing a Monte Carlo frequency against a reference
/// probability: the plug-in value, or the reference's own binomial error
/// when the plug-in value degenerates at zero or one.
pub fn comparison_std_error(p_hat: f64, p_ref: f64, trials: u64) -> f64 {
    let plug_in = stats::binomial_std_error(p_hat, trials);
    if plug_in > 0.0 {
        plug_in
    } else {
        stats::binomial_std_error(p_ref, trials)
    }
}
