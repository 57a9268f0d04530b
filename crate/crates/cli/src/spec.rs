//! Flat `key = value` experiment specifications.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use uplink_core::{ReceiverKind, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    RateSweep,
    Optimize,
    JointOptimize,
    MonteCarlo,
    Asymptotic,
    EnergyEfficiency,
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "rate-sweep" => Self::RateSweep,
            "optimize" => Self::Optimize,
            "joint-optimize" => Self::JointOptimize,
            "montecarlo" => Self::MonteCarlo,
            "asymptotic" => Self::Asymptotic,
            "energy-efficiency" => Self::EnergyEfficiency,
            _ => {
                return Err(format!(
                    "unknown kind '{s}' (expected rate-sweep, optimize, joint-optimize, montecarlo, asymptotic or energy-efficiency)"
                ))
            }
        })
    }
}

/// Power allocation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Same power in both phases, `T_tau = K`.
    EqualPower,
    /// Optimal split at `T_d = T - K`, average constraint only.
    AvgOnly,
    /// Split (and duration) optimized under average and peak constraints.
    AvgAndPeak,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::EqualPower => "equal-power",
            Scheme::AvgOnly => "avg-only",
            Scheme::AvgAndPeak => "avg-and-peak",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "equal-power" => Ok(Scheme::EqualPower),
            "avg-only" => Ok(Scheme::AvgOnly),
            "avg-and-peak" => Ok(Scheme::AvgAndPeak),
            _ => Err(format!("unknown scheme '{s}' (expected equal-power, avg-only or avg-and-peak)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Rho,
    RhoMaxRatio,
    Antennas,
    Users,
    Coherence,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::Rho => "rho",
            SweepVar::RhoMaxRatio => "rho_max_ratio",
            SweepVar::Antennas => "M",
            SweepVar::Users => "K",
            SweepVar::Coherence => "T",
        }
    }

    fn is_integral(self) -> bool {
        matches!(self, SweepVar::Antennas | SweepVar::Users | SweepVar::Coherence)
    }
}

impl FromStr for SweepVar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rho" => Ok(SweepVar::Rho),
            "rho_max_ratio" => Ok(SweepVar::RhoMaxRatio),
            "M" => Ok(SweepVar::Antennas),
            "K" => Ok(SweepVar::Users),
            "T" => Ok(SweepVar::Coherence),
            _ => Err(format!("unknown sweep variable '{s}' (expected rho, rho_max_ratio, M, K or T)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Db,
    Linear,
}

/// The swept variable and its points.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    /// Values as written in the spec; reported in the output.
    pub written: Vec<f64>,
    /// Values in linear scale, ready for the library.
    pub linear: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Base parameters; `rho` is the large-array `rho_u` for asymptotic runs.
    pub base: SystemParams,
    pub rho_max_ratio: Option<f64>,
    pub units: Units,
    pub sweep: Sweep,
    pub receivers: Vec<ReceiverKind>,
    pub schemes: Vec<Scheme>,
    pub n_blocks: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

/// One problem found while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// All problems found in a spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecErrors(pub Vec<SpecError>);

impl fmt::Display for SpecErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for SpecErrors {}

const KEYS: &[&str] = &[
    "kind",
    "M",
    "K",
    "T",
    "rho",
    "rho_db",
    "rho_max_ratio",
    "units",
    "sweep.var",
    "sweep.values",
    "sweep.range",
    "receivers",
    "schemes",
    "n_blocks",
    "seed",
    "out",
];

struct Entries {
    map: HashMap<String, (usize, String)>,
    errors: Vec<SpecError>,
}

impl Entries {
    fn error(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.errors.push(SpecError {
            line,
            message: message.into(),
        });
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|(l, _)| *l)
    }

    fn get<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let (line, raw) = self.map.get(key).cloned()?;
        match parse(&raw) {
            Ok(v) => Some(v),
            Err(msg) => {
                self.error(Some(line), format!("{key}: {msg}"));
                None
            }
        }
    }

    fn required<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        if !self.map.contains_key(key) {
            self.error(None, format!("missing required key '{key}'"));
            return None;
        }
        self.get(key, parse)
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("expected a number, got '{s}'"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite number, got '{s}'"))
    }
}

fn parse_count(s: &str) -> Result<usize, String> {
    s.parse().map_err(|_| format!("expected a nonnegative integer, got '{s}'"))
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.parse().map_err(|_| format!("expected a nonnegative integer, got '{s}'"))
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(item)
        .collect()
}

fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let [start, stop, step] = parts[..] else {
        return Err(format!("expected start:stop:step, got '{s}'"));
    };
    let (start, stop, step) = (parse_f64(start)?, parse_f64(stop)?, parse_f64(step)?);
    if step == 0.0 || (stop - start) * step < 0.0 {
        return Err(format!("step {step} never reaches {stop} from {start}"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(format!("range has {count} points, more than 1000000"));
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Parses and validates a spec, reporting every problem found.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec, SpecErrors> {
    let mut entries = Entries {
        map: HashMap::new(),
        errors: Vec::new(),
    };
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            entries.error(Some(line_no), format!("expected 'key = value', got '{line}'"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            entries.error(Some(line_no), format!("unknown key '{key}'"));
            continue;
        }
        if let Some((first, _)) = entries.map.get(key) {
            let first = *first;
            entries.error(
                Some(line_no),
                format!("duplicate key '{key}' (first on line {first}, again on line {line_no})"),
            );
            continue;
        }
        entries.map.insert(key.to_string(), (line_no, value.to_string()));
    }

    let kind = entries.required("kind", |s| s.parse::<ExperimentKind>());
    let sweep_var = entries.required("sweep.var", |s| s.parse::<SweepVar>());
    // A swept dimension needs no base value; the first sweep point stands in.
    let mut dimension = |key: &str, var: SweepVar| {
        if sweep_var == Some(var) && !entries.map.contains_key(key) {
            Some(0)
        } else {
            entries.required(key, parse_count)
        }
    };
    let m = dimension("M", SweepVar::Antennas);
    let k = dimension("K", SweepVar::Users);
    let t = dimension("T", SweepVar::Coherence);
    let units = entries
        .get("units", |s| match s {
            "db" | "dB" => Ok(Units::Db),
            "linear" => Ok(Units::Linear),
            _ => Err(format!("expected db or linear, got '{s}'")),
        })
        .unwrap_or(Units::Linear);

    let rho = match (entries.map.contains_key("rho"), entries.map.contains_key("rho_db")) {
        (true, true) => {
            let line = entries.line_of("rho_db");
            entries.error(line, "give either rho or rho_db, not both");
            None
        }
        (true, false) => entries
            .get("rho", parse_f64)
            .map(|v| if units == Units::Db { db_to_linear(v) } else { v }),
        (false, true) => entries.get("rho_db", parse_f64).map(db_to_linear),
        (false, false) => {
            if sweep_var != Some(SweepVar::Rho) {
                entries.error(None, "missing required key 'rho' (or 'rho_db')");
            }
            None
        }
    };
    let rho_max_ratio = entries.get("rho_max_ratio", parse_f64);

    let written = match (entries.map.contains_key("sweep.values"), entries.map.contains_key("sweep.range")) {
        (true, true) => {
            let line = entries.line_of("sweep.range");
            entries.error(line, "give either sweep.values or sweep.range, not both");
            None
        }
        (true, false) => entries.get("sweep.values", |s| parse_list(s, parse_f64)),
        (false, true) => entries.get("sweep.range", parse_range),
        (false, false) => {
            entries.error(None, "missing sweep points: set sweep.values or sweep.range");
            None
        }
    };

    let receivers = entries
        .get("receivers", |s| parse_list(s, |r| r.parse::<ReceiverKind>().map_err(|e| e.to_string())))
        .unwrap_or_else(|| vec![ReceiverKind::Mrc, ReceiverKind::Zf]);
    let schemes = entries
        .get("schemes", |s| parse_list(s, |r| r.parse::<Scheme>()))
        .unwrap_or_else(|| vec![Scheme::AvgOnly]);
    let n_blocks = entries.get("n_blocks", parse_u64).unwrap_or(2000);
    let seed = entries.get("seed", parse_u64).unwrap_or(0);
    let out = entries.get("out", |s| Ok(PathBuf::from(s)));

    // Cross-field constraints.
    let swept = |var: SweepVar| sweep_var == Some(var);
    if let (Some(k), Some(t)) = (k, t) {
        if k == 0 && !swept(SweepVar::Users) {
            entries.error(entries.line_of("K"), "K must be positive");
        } else if k >= t && !swept(SweepVar::Coherence) && !swept(SweepVar::Users) {
            entries.error(entries.line_of("K"), format!("need K < T, got K = {k}, T = {t}"));
        }
    }
    if m == Some(0) && !swept(SweepVar::Antennas) {
        entries.error(entries.line_of("M"), "M must be positive");
    }
    if let Some(r) = rho {
        if r < 0.0 {
            entries.error(entries.line_of("rho"), format!("rho must be nonnegative, got {r}"));
        }
    }
    if let Some(r) = rho_max_ratio {
        if r < 1.0 {
            entries.error(entries.line_of("rho_max_ratio"), format!("rho_max_ratio must be at least 1, got {r}"));
        }
    }
    if receivers.is_empty() {
        entries.error(entries.line_of("receivers"), "receivers list is empty");
    }
    if schemes.is_empty() {
        entries.error(entries.line_of("schemes"), "schemes list is empty");
    }
    if schemes.contains(&Scheme::AvgAndPeak) && rho_max_ratio.is_none() && sweep_var != Some(SweepVar::RhoMaxRatio) {
        entries.error(entries.line_of("schemes"), "scheme avg-and-peak requires rho_max_ratio");
    }
    if schemes.contains(&Scheme::AvgAndPeak)
        && receivers.contains(&ReceiverKind::Mmse)
        && kind.is_some_and(|k| k != ExperimentKind::Optimize)
    {
        entries.error(
            entries.line_of("receivers"),
            "joint optimization is defined for MRC and ZF; use kind = optimize for MMSE with avg-and-peak",
        );
    }
    if kind == Some(ExperimentKind::MonteCarlo) && n_blocks == 0 {
        entries.error(entries.line_of("n_blocks"), "n_blocks must be at least 1");
    }

    let sweep = match (sweep_var, written) {
        (Some(var), Some(written)) => {
            let mut bad = false;
            for &v in &written {
                let invalid = match var {
                    _ if var.is_integral() => v < 1.0 || v.fract() != 0.0,
                    SweepVar::RhoMaxRatio => v < 1.0,
                    SweepVar::Rho => units == Units::Linear && v < 0.0,
                    _ => false,
                };
                if invalid && !bad {
                    bad = true;
                    let line = entries.line_of("sweep.values").or(entries.line_of("sweep.range"));
                    entries.error(line, format!("sweep value {v} is not valid for {}", var.as_str()));
                }
            }
            let linear = written
                .iter()
                .map(|&v| if var == SweepVar::Rho && units == Units::Db { db_to_linear(v) } else { v })
                .collect();
            Some(Sweep { var, written, linear })
        }
        _ => None,
    };

    if !entries.errors.is_empty() {
        entries.errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        return Err(SpecErrors(entries.errors));
    }
    let (kind, m, k, t, sweep) = (kind.unwrap(), m.unwrap(), k.unwrap(), t.unwrap(), sweep.unwrap());
    let rho = rho.unwrap_or_else(|| sweep.linear.first().copied().unwrap_or(0.0));
    let first = sweep.linear.first().map_or(1, |&v| v as usize);
    let or_first = |value: usize, var: SweepVar| if sweep.var == var && value == 0 { first } else { value };
    let base = SystemParams {
        antennas: or_first(m, SweepVar::Antennas),
        users: or_first(k, SweepVar::Users),
        coherence: or_first(t, SweepVar::Coherence),
        rho,
        rho_max: rho_max_ratio.map(|r| r * rho),
    };
    Ok(ExperimentSpec {
        kind,
        base,
        rho_max_ratio,
        units,
        sweep,
        receivers,
        schemes,
        n_blocks,
        seed,
        out,
    })
}
