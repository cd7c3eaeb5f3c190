//! Plain-text `key = value` configuration. `#` starts a comment; blank lines are ignored.
//!
//! | key | value | default |
//! |-----|-------|---------|
//! | `n_sites` | integer | required |
//! | `delta`, `lambda`, `j_hop` | template chain parameters | `1`, `0.4`, `0.01` |
//! | `r_b`, `r_r`, `r_p` | template bath rates | `1e-7`, `1e-9`, `1e-10` |
//! | `solver` | `secular`, `partial`, `full` or `kinetic` | required |
//! | `truncation` | `per_mode[,total]` | `10,4` |
//! | `axis1`, `axis2` | `delta`, `R`, `lambda` or `j_hop` | `delta`, none |
//! | `axis1_grid`, `axis2_grid` | `start:stop:step` or `a,b,c` | Δ: `0.005:2:0.005` |
//! | `outputs` | list of `site_populations`, `rho`, `msd`, `p_ex`, `spectrum`, `crossings`, `eigenstates` | `rho` |
//! | `n_levels` | tracked levels for spectra | `12` |
//! | `miniband_threshold` | level spacing grouped into one band (partial solver) | `10 × max rate` |
//! | `jump_length`, `f`, `g` | kinetic model: `k_nn = r_b f`, `k_j = r_b g` | `0`, `0`, `0` |
//! | `r_grid` | bath scales for `validate-secular` | none |
//!
//! Sweeping `R` varies `r_b = R r_r` at fixed `r_r` and `r_p`. In `validate-secular`
//! each grid value `r` sets `r_b = r` and keeps the template ratios `r_r / r_b`, `r_p / r_b`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use holstein_core::fockspace::BosonTruncation;
use holstein_core::holstein::{ChainParams, MAX_DENSE_DIM};
use holstein_core::lindblad::{BathRates, DEFAULT_DENSE_CAP};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Axis {
    Delta,
    Ratio,
    Lambda,
    JHop,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Delta => "delta",
            Self::Ratio => "R",
            Self::Lambda => "lambda",
            Self::JHop => "j_hop",
        }
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "delta" => Ok(Self::Delta),
            "R" => Ok(Self::Ratio),
            "lambda" => Ok(Self::Lambda),
            "j_hop" => Ok(Self::JHop),
            _ => Err(format!(
                "unknown axis `{s}` (expected delta, R, lambda or j_hop)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Grid {
    Range { start: f64, stop: f64, step: f64 },
    List(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::Range { start, stop, step } => {
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|k| start + k as f64 * step).collect()
            }
            Self::List(v) => v.clone(),
        }
    }

    fn check(&self) -> Result<(), String> {
        if let Self::Range { start, stop, step } = self {
            if !(step > &0.0) || !(stop >= start) || !(start.is_finite() && stop.is_finite()) {
                return Err("range needs start <= stop and a positive step".into());
            }
        }
        let v = self.values();
        if v.is_empty() {
            return Err("grid is empty".into());
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err("grid must be strictly increasing".into());
        }
        Ok(())
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Range { start, stop, step } => write!(f, "{start}:{stop}:{step}"),
            Self::List(v) => write!(
                f,
                "{}",
                v.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        }
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let g = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("range `{s}` must read start:stop:step"));
            }
            Self::Range {
                start: number(parts[0])?,
                stop: number(parts[1])?,
                step: number(parts[2])?,
            }
        } else {
            Self::List(s.split(',').map(number).collect::<Result<_, _>>()?)
        };
        g.check()?;
        Ok(g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Solver {
    Secular,
    Partial,
    Full,
    Kinetic,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Self::Secular => "secular",
            Self::Partial => "partial",
            Self::Full => "full",
            Self::Kinetic => "kinetic",
        }
    }
}

impl FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "secular" => Ok(Self::Secular),
            "partial" => Ok(Self::Partial),
            "full" => Ok(Self::Full),
            "kinetic" => Ok(Self::Kinetic),
            _ => Err(format!(
                "unknown solver `{s}` (expected secular, partial, full or kinetic)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Output {
    SitePopulations,
    Rho,
    Msd,
    PEx,
    Spectrum,
    Crossings,
    Eigenstates,
}

impl Output {
    pub fn name(self) -> &'static str {
        match self {
            Self::SitePopulations => "site_populations",
            Self::Rho => "rho",
            Self::Msd => "msd",
            Self::PEx => "p_ex",
            Self::Spectrum => "spectrum",
            Self::Crossings => "crossings",
            Self::Eigenstates => "eigenstates",
        }
    }
}

impl FromStr for Output {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            Self::SitePopulations,
            Self::Rho,
            Self::Msd,
            Self::PEx,
            Self::Spectrum,
            Self::Crossings,
            Self::Eigenstates,
        ]
        .into_iter()
        .find(|o| o.name() == s)
        .ok_or_else(|| format!("unknown output `{s}`"))
    }
}

pub fn parse_truncation(s: &str) -> Result<BosonTruncation, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let int = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| format!("`{t}` is not a non-negative integer"))
    };
    match parts.as_slice() {
        [p] => Ok(BosonTruncation::per_mode(int(p)?)),
        [p, t] => Ok(BosonTruncation::with_total(int(p)?, int(t)?)),
        _ => Err(format!("truncation `{s}` must read per_mode[,total]")),
    }
}

fn truncation_string(t: &BosonTruncation) -> String {
    match t.total_max {
        Some(tot) => format!("{},{tot}", t.per_mode_max),
        None => t.per_mode_max.to_string(),
    }
}

fn number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a finite number")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxisSpec {
    pub axis: Axis,
    pub grid: Grid,
}

/// A fully validated run description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub chain: ChainParams,
    pub rates: BathRates,
    pub axis1: AxisSpec,
    pub axis2: Option<AxisSpec>,
    pub solver: Solver,
    pub truncation: BosonTruncation,
    pub outputs: Vec<Output>,
    pub n_levels: usize,
    pub miniband_threshold: Option<f64>,
    pub jump_length: usize,
    pub f: f64,
    pub g: f64,
    pub r_grid: Option<Grid>,
}

pub const DEFAULT_DELTA_GRID: Grid = Grid::Range {
    start: 0.005,
    stop: 2.0,
    step: 0.005,
};

const KEYS: &[&str] = &[
    "n_sites",
    "delta",
    "lambda",
    "j_hop",
    "r_b",
    "r_r",
    "r_p",
    "solver",
    "truncation",
    "axis1",
    "axis1_grid",
    "axis2",
    "axis2_grid",
    "outputs",
    "n_levels",
    "miniband_threshold",
    "jump_length",
    "f",
    "g",
    "r_grid",
];

struct Entry {
    line: usize,
    value: String,
}

/// Parses configuration text. Errors carry the offending line where one exists.
pub fn parse_config_str(text: &str) -> CliResult<SweepSpec> {
    let mut entries: Vec<(String, Entry)> = Vec::new();
    let mut seen = HashSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            CliError::at(line, format!("expected `key = value`, found `{content}`"))
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::at(line, format!("unknown key `{key}`")));
        }
        if !seen.insert(key.to_string()) {
            return Err(CliError::at(line, format!("duplicate key `{key}`")));
        }
        entries.push((
            key.to_string(),
            Entry {
                line,
                value: value.trim().to_string(),
            },
        ));
    }
    let get = |key: &str| entries.iter().find(|(k, _)| k == key).map(|(_, e)| e);
    let line_of = |key: &str| get(key).map(|e| e.line);
    fn parse<T>(e: Option<&Entry>, f: impl Fn(&str) -> Result<T, String>) -> CliResult<Option<T>> {
        e.map(|e| f(&e.value).map_err(|m| CliError::at(e.line, m)))
            .transpose()
    }
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("`{s}` is not a non-negative integer"))
    };

    let n_sites = parse(get("n_sites"), int)?
        .ok_or_else(|| CliError::config("missing required key `n_sites`"))?;
    let solver = parse(get("solver"), Solver::from_str)?
        .ok_or_else(|| CliError::config("missing required key `solver`"))?;
    let chain = ChainParams::new(
        n_sites,
        parse(get("delta"), number)?.unwrap_or(1.0),
        parse(get("lambda"), number)?.unwrap_or(0.4),
        parse(get("j_hop"), number)?.unwrap_or(0.01),
    );
    let rates = BathRates::new(
        parse(get("r_b"), number)?.unwrap_or(1e-7),
        parse(get("r_r"), number)?.unwrap_or(1e-9),
        parse(get("r_p"), number)?.unwrap_or(1e-10),
    );
    let truncation =
        parse(get("truncation"), parse_truncation)?.unwrap_or(BosonTruncation::with_total(10, 4));
    let axis_of = |name: &str, grid_key: &str| -> CliResult<Option<AxisSpec>> {
        let axis = parse(get(name), Axis::from_str)?;
        let grid = parse(get(grid_key), Grid::from_str)?;
        match (axis, grid) {
            (Some(axis), Some(grid)) => Ok(Some(AxisSpec { axis, grid })),
            (Some(Axis::Delta), None) => Ok(Some(AxisSpec {
                axis: Axis::Delta,
                grid: DEFAULT_DELTA_GRID,
            })),
            (Some(a), None) => Err(CliError::at(
                line_of(name).unwrap_or(0),
                format!("axis `{}` needs `{grid_key}`", a.name()),
            )),
            (None, Some(_)) => Err(CliError::at(
                line_of(grid_key).unwrap_or(0),
                format!("`{grid_key}` given without `{name}`"),
            )),
            (None, None) => Ok(None),
        }
    };
    let axis1 = axis_of("axis1", "axis1_grid")?.unwrap_or(AxisSpec {
        axis: Axis::Delta,
        grid: DEFAULT_DELTA_GRID,
    });
    let axis2 = axis_of("axis2", "axis2_grid")?;
    let outputs = parse(get("outputs"), |s| {
        let mut v = Vec::new();
        for t in s.split(',').map(str::trim) {
            let o = Output::from_str(t)?;
            if v.contains(&o) {
                return Err(format!("output `{t}` listed twice"));
            }
            v.push(o);
        }
        Ok(v)
    })?
    .unwrap_or_else(|| vec![Output::Rho]);

    let spec = SweepSpec {
        chain,
        rates,
        axis1,
        axis2,
        solver,
        truncation,
        outputs,
        n_levels: parse(get("n_levels"), int)?.unwrap_or(12),
        miniband_threshold: parse(get("miniband_threshold"), number)?,
        jump_length: parse(get("jump_length"), int)?.unwrap_or(0),
        f: parse(get("f"), number)?.unwrap_or(0.0),
        g: parse(get("g"), number)?.unwrap_or(0.0),
        r_grid: parse(get("r_grid"), Grid::from_str)?,
    };
    validate(&spec, &line_of)?;
    Ok(spec)
}

pub fn parse_config(path: &std::path::Path) -> CliResult<SweepSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

fn validate(spec: &SweepSpec, line_of: &dyn Fn(&str) -> Option<usize>) -> CliResult<()> {
    let err = |key: &str, msg: String| match line_of(key) {
        Some(l) => CliError::at(l, msg),
        None => CliError::config(msg),
    };
    spec.chain
        .validate()
        .map_err(|e| err("n_sites", e.to_string()))?;
    spec.rates
        .validate()
        .map_err(|e| err("r_b", e.to_string()))?;
    spec.truncation
        .validate(spec.chain.n_sites)
        .map_err(|e| err("truncation", e.to_string()))?;
    if spec.n_levels == 0 {
        return Err(err("n_levels", "n_levels must be positive".into()));
    }
    if spec.miniband_threshold.is_some_and(|t| !(t >= 0.0)) {
        return Err(err(
            "miniband_threshold",
            "miniband_threshold must be non-negative".into(),
        ));
    }
    for (key, a) in [("axis1", Some(&spec.axis1)), ("axis2", spec.axis2.as_ref())] {
        let Some(a) = a else { continue };
        let strict = matches!(a.axis, Axis::Delta | Axis::Ratio);
        if a.grid
            .values()
            .iter()
            .any(|&x| if strict { !(x > 0.0) } else { x < 0.0 })
        {
            let kind = if strict { "positive" } else { "non-negative" };
            return Err(err(
                key,
                format!("{} grid values must be {kind}", a.axis.name()),
            ));
        }
        if spec.solver == Solver::Kinetic && a.axis != Axis::Ratio {
            return Err(err(
                key,
                "the kinetic solver sweeps only R; its f and g do not follow the chain parameters"
                    .into(),
            ));
        }
    }
    if spec
        .axis2
        .as_ref()
        .is_some_and(|a| a.axis == spec.axis1.axis)
    {
        return Err(err("axis2", "axis2 must differ from axis1".into()));
    }
    let sweeps_ratio = spec.axis1.axis == Axis::Ratio
        || spec.axis2.as_ref().is_some_and(|a| a.axis == Axis::Ratio);
    if sweeps_ratio && !(spec.rates.r_r > 0.0) {
        return Err(err("r_r", "sweeping R needs r_r > 0".into()));
    }
    if let Some(g) = &spec.r_grid {
        if g.values().iter().any(|&r| !(r > 0.0)) {
            return Err(err(
                "r_grid",
                "r = 0 leaves a closed system without a unique steady state".into(),
            ));
        }
        if !(spec.rates.r_b > 0.0) {
            return Err(err(
                "r_b",
                "r_grid scales the template rates, which need r_b > 0".into(),
            ));
        }
    }
    if spec.solver == Solver::Kinetic {
        if spec.jump_length == 0 && spec.g != 0.0 {
            return Err(err("g", "g must vanish without a jump length".into()));
        }
        if !(spec.f >= 0.0 && spec.g >= 0.0) {
            return Err(err("f", "f and g must be non-negative".into()));
        }
        if !(spec.rates.r_r > 0.0 && spec.rates.r_p > 0.0) {
            return Err(err(
                "r_r",
                "the kinetic model needs r_r > 0 and r_p > 0".into(),
            ));
        }
        return Ok(());
    }
    let d = 1 + spec.chain.n_sites * spec.truncation.count_occupations(spec.chain.n_sites);
    if spec.solver == Solver::Full {
        let entries = (d as f64).powi(4);
        if entries > DEFAULT_DENSE_CAP as f64 {
            return Err(err(
                "solver",
                format!(
                    "full solver at basis dimension {d} needs {entries:.3e} superoperator entries, above the dimension cap of {DEFAULT_DENSE_CAP}"
                ),
            ));
        }
    }
    if d > MAX_DENSE_DIM {
        return Err(err(
            "truncation",
            format!("basis dimension {d} exceeds the eigensolver limit {MAX_DENSE_DIM}"),
        ));
    }
    Ok(())
}

impl SweepSpec {
    /// Every key, in a fixed order, so that parsing the result gives back `self`.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("n_sites", self.chain.n_sites.to_string());
        kv("delta", self.chain.delta.to_string());
        kv("lambda", self.chain.lambda.to_string());
        kv("j_hop", self.chain.j_hop.to_string());
        kv("r_b", self.rates.r_b.to_string());
        kv("r_r", self.rates.r_r.to_string());
        kv("r_p", self.rates.r_p.to_string());
        kv("solver", self.solver.name().into());
        kv("truncation", truncation_string(&self.truncation));
        kv("axis1", self.axis1.axis.name().into());
        kv("axis1_grid", self.axis1.grid.to_string());
        if let Some(a) = &self.axis2 {
            kv("axis2", a.axis.name().into());
            kv("axis2_grid", a.grid.to_string());
        }
        kv(
            "outputs",
            self.outputs
                .iter()
                .map(|o| o.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("n_levels", self.n_levels.to_string());
        if let Some(t) = self.miniband_threshold {
            kv("miniband_threshold", t.to_string());
        }
        kv("jump_length", self.jump_length.to_string());
        kv("f", self.f.to_string());
        kv("g", self.g.to_string());
        if let Some(g) = &self.r_grid {
            kv("r_grid", g.to_string());
        }
        out
    }

    pub fn with_truncation(mut self, t: BosonTruncation) -> CliResult<Self> {
        self.truncation = t;
        self.revalidate()
    }

    pub fn with_solver(mut self, s: Solver) -> CliResult<Self> {
        self.solver = s;
        self.revalidate()
    }

    fn revalidate(self) -> CliResult<Self> {
        validate(&self, &|_| None)?;
        Ok(self)
    }

    pub fn has_output(&self, o: Output) -> bool {
        self.outputs.contains(&o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let s = parse_config_str("n_sites = 3\nsolver = secular\n").unwrap();
        assert_eq!(s.truncation, BosonTruncation::with_total(10, 4));
        assert_eq!(s.axis1.axis, Axis::Delta);
        let v = s.axis1.grid.values();
        assert_eq!(v.len(), 400);
        assert!((v[1] - v[0] - 0.005).abs() < 1e-15);
        assert_eq!(s.outputs, vec![Output::Rho]);
    }

    #[test]
    fn round_trip() {
        let text = "n_sites = 4\nsolver = secular\naxis1 = delta\naxis1_grid = 0.1:2.0:0.01 # Δ\naxis2 = lambda\naxis2_grid = 0.4,0.5\noutputs = rho,msd\n";
        let s = parse_config_str(text).unwrap();
        assert_eq!(s.axis1.grid.values().len(), 191);
        let again = parse_config_str(&s.to_config_string()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.to_config_string(), again.to_config_string());
    }

    #[test]
    fn line_numbered_errors() {
        let e = parse_config_str("n_sites = 3\n\nsolver = secular\ncolour = blue\n").unwrap_err();
        assert!(
            e.to_string().contains("line 4") && e.to_string().contains("colour"),
            "{e}"
        );
        let e = parse_config_str("n_sites = 3\nsolver = secular\ndelta = 0.5x\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        let e = parse_config_str(
            "n_sites = 3\nsolver = secular\naxis1 = delta\naxis1_grid = 0.3,0.2\n",
        )
        .unwrap_err();
        assert!(e.to_string().contains("line 4"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn full_solver_feasibility() {
        let e = parse_config_str("n_sites = 5\nsolver = full\ntruncation = 10\n").unwrap_err();
        let msg = e.to_string();
        assert!(
            msg.contains("line 2") && msg.contains("dimension cap") && msg.contains("805256"),
            "{msg}"
        );
        assert_eq!(e.exit_code(), 2);
        let e = parse_config_str("n_sites = 3\nsolver = full\ntruncation = 10,4\n").unwrap_err();
        assert!(e.to_string().contains("dimension cap"), "{e}");
        assert!(parse_config_str("n_sites = 3\nsolver = full\ntruncation = 2,2\n").is_ok());
    }

    #[test]
    fn zero_rate_rejected() {
        let e = parse_config_str("n_sites = 3\nsolver = full\ntruncation = 2,2\nr_grid = 0,1e-4\n")
            .unwrap_err();
        assert!(e.to_string().contains("line 4"), "{e}");
    }
}
