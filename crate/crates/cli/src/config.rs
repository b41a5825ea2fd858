//! Run configuration: one JSON document per run.

use std::fmt;
use std::path::{Path, PathBuf};

use inflap::analytic::CatalogEntry;
use inflap::mv::Initialization;
use serde::Deserialize;

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolveMv,
    SolveP,
    SweepP,
    Sandwich,
    Extend,
    Verify,
    TugOfWar,
    Residual,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::SolveMv => "solve-mv",
            Command::SolveP => "solve-p",
            Command::SweepP => "sweep-p",
            Command::Sandwich => "sandwich",
            Command::Extend => "extend",
            Command::Verify => "verify",
            Command::TugOfWar => "tug-of-war",
            Command::Residual => "residual",
        })
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub command: Command,
    pub domain: DomainSpec,
    #[serde(default)]
    pub boundary: Option<BoundarySource>,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub game: Option<GameParams>,
    #[serde(default)]
    pub checks: Vec<CheckEntry>,
    /// Field file consumed by `verify` and `residual`.
    #[serde(default)]
    pub input: Option<PathBuf>,
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub h: f64,
    #[serde(default)]
    pub shape: ShapeSpec,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeSpec {
    #[default]
    Rectangle,
    Annulus {
        r1: f64,
        r2: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    LShape,
    /// 0/1 text grid, first line is the lowest row.
    Mask {
        file: PathBuf,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundarySource {
    Catalog(CatalogEntry),
    /// CSV with one row per boundary node.
    Table(PathBuf),
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeSideSpec {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum VariantSpec {
    Plain,
    Upper,
    Lower,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    pub eps: Option<f64>,
    pub tolerance: Option<f64>,
    /// Sweep cap for the mean-value solver, pass cap for the p-solver.
    pub max_iterations: Option<usize>,
    pub initialization: Option<Initialization>,
    pub variant: Option<VariantSpec>,
    pub delta: Option<f64>,
    /// Constant right-hand side `F` of the Poisson variant.
    pub rhs: Option<f64>,
    pub p: Option<f64>,
    pub ps: Option<Vec<f64>>,
    pub relaxation: Option<f64>,
    pub warm_start: Option<bool>,
    pub side: Option<EnvelopeSideSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameParams {
    pub start: Vec<f64>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_strategy")]
    pub max_strategy: String,
    #[serde(default = "default_strategy")]
    pub min_strategy: String,
    pub max_plies: Option<u64>,
    /// Also write one CSV row per run.
    #[serde(default)]
    pub transcript: bool,
}

fn default_runs() -> usize {
    10_000
}

fn default_strategy() -> String {
    "greedy".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

/// A check given by name (default parameters) or as a full object.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum CheckEntry {
    Name(CheckName),
    Full(CheckSpec),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    MaxPrinciple,
    ConeComparison,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum HarnackFormSpec {
    Factor3,
    Exponential,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileModeSpec {
    Max,
    Min,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckSpec {
    /// Over the whole grid unless a ball is given.
    MaxPrinciple {
        ball: Option<BallSpec>,
        #[serde(default)]
        c: f64,
    },
    /// Randomized suite of cones against random discs.
    ConeComparison {
        #[serde(default = "default_cones")]
        cones: usize,
        #[serde(default = "default_subdomains")]
        subdomains: usize,
        #[serde(default = "one")]
        c: f64,
    },
    Harnack {
        x0: Vec<f64>,
        r: f64,
        #[serde(rename = "R")]
        big_r: f64,
        form: HarnackFormSpec,
        #[serde(default = "one")]
        c: f64,
    },
    SphereProfile {
        x0: Vec<f64>,
        radii: Vec<f64>,
        #[serde(default = "profile_max")]
        mode: ProfileModeSpec,
        #[serde(default = "one")]
        c: f64,
    },
    Amle {
        ball: BallSpec,
        #[serde(default = "default_competitors")]
        competitors: usize,
        #[serde(default = "three")]
        c: f64,
    },
}

impl CheckEntry {
    pub fn spec(&self) -> CheckSpec {
        match self {
            CheckEntry::Full(s) => s.clone(),
            CheckEntry::Name(CheckName::MaxPrinciple) => {
                CheckSpec::MaxPrinciple { ball: None, c: 0.0 }
            }
            CheckEntry::Name(CheckName::ConeComparison) => CheckSpec::ConeComparison {
                cones: default_cones(),
                subdomains: default_subdomains(),
                c: 1.0,
            },
        }
    }
}

fn default_cones() -> usize {
    100
}

fn default_subdomains() -> usize {
    10
}

fn default_competitors() -> usize {
    20
}

fn one() -> f64 {
    1.0
}

fn three() -> f64 {
    3.0
}

fn profile_max() -> ProfileModeSpec {
    ProfileModeSpec::Max
}

/// Parsed configuration plus the directory relative paths resolve against.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl LoadedConfig {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base.join(path)
        }
    }
}

/// Parses a config; errors carry the JSON path of the offending key.
pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let key = if path.is_empty() || path == "." {
            "<root>".to_string()
        } else {
            path
        };
        CliError::Validation(format!("config key `{key}`: {inner}"))
    })
}

fn invalid(key: &str, reason: impl fmt::Display) -> CliError {
    CliError::Validation(format!("config key `{key}`: {reason}"))
}

fn positive(key: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(invalid(
            key,
            format!("must be positive and finite, got {x}"),
        )),
        _ => Ok(()),
    }
}

fn existing(loaded: &LoadedConfig, key: &str, path: &Path) -> Result<(), CliError> {
    let full = loaded.resolve(path);
    if full.is_file() {
        Ok(())
    } else {
        Err(invalid(
            key,
            format!("file {} does not exist", full.display()),
        ))
    }
}

/// Range and presence checks that do not need the grid.
pub fn validate(loaded: &LoadedConfig) -> Result<(), CliError> {
    let c = &loaded.config;
    if c.format_version != FORMAT_VERSION {
        return Err(invalid(
            "format_version",
            format!(
                "unsupported version {} (expected {FORMAT_VERSION})",
                c.format_version
            ),
        ));
    }
    let d = &c.domain;
    if d.lo.len() != d.hi.len() || !(1..=2).contains(&d.lo.len()) {
        return Err(invalid(
            "domain.lo",
            "lo and hi must both have 1 or 2 coordinates",
        ));
    }
    if d.lo
        .iter()
        .zip(&d.hi)
        .any(|(a, b)| a.is_nan() || b.is_nan() || a >= b)
    {
        return Err(invalid(
            "domain.hi",
            "every coordinate of hi must exceed lo",
        ));
    }
    positive("domain.h", Some(d.h))?;
    if let ShapeSpec::Mask { file } = &d.shape {
        existing(loaded, "domain.shape.file", file)?;
    }
    if let ShapeSpec::Annulus { r1, r2, .. } = d.shape {
        if !(r1 > 0.0 && r2 > r1) {
            return Err(invalid(
                "domain.shape",
                format!("annulus needs 0 < r1 < r2, got r1 = {r1}, r2 = {r2}"),
            ));
        }
    }

    let s = &c.solver;
    positive("solver.eps", s.eps)?;
    positive("solver.tolerance", s.tolerance)?;
    if let Some(f) = s.rhs.filter(|f| !f.is_finite()) {
        return Err(invalid("solver.rhs", format!("must be finite, got {f}")));
    }
    if let Some(eps) = s.eps {
        // the grid is only built later; the spacing is already known
        if eps < d.h * (1.0 - 1e-12) {
            return Err(invalid(
                "solver.eps",
                format!(
                    "eps = {eps} is below the grid spacing h = {}; the scheme requires eps >= h",
                    d.h
                ),
            ));
        }
    }
    if let Some(delta) = s.delta {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(invalid(
                "solver.delta",
                format!("must be nonnegative, got {delta}"),
            ));
        }
    }
    if let Some(p) = s.p {
        check_p("solver.p", p)?;
    }
    if let Some(ps) = &s.ps {
        if ps.is_empty() {
            return Err(invalid("solver.ps", "need at least one exponent"));
        }
        for &p in ps {
            check_p("solver.ps", p)?;
        }
        if ps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("solver.ps", "exponents must be strictly ascending"));
        }
    }
    if let Some(w) = s.relaxation {
        if !(1.0..2.0).contains(&w) {
            return Err(invalid(
                "solver.relaxation",
                format!("must lie in [1, 2), got {w}"),
            ));
        }
    }
    if s.max_iterations == Some(0) {
        return Err(invalid("solver.max_iterations", "must be at least 1"));
    }

    match &c.boundary {
        Some(BoundarySource::Table(path)) => existing(loaded, "boundary.table", path)?,
        Some(BoundarySource::Catalog(_)) => {}
        None => {
            if !matches!(c.command, Command::Verify | Command::Residual) {
                return Err(invalid(
                    "boundary",
                    format!("`{}` needs a boundary source", c.command),
                ));
            }
        }
    }

    let needs_eps = matches!(
        c.command,
        Command::SolveMv
            | Command::Sandwich
            | Command::SweepP
            | Command::TugOfWar
            | Command::Residual
    );
    if needs_eps && s.eps.is_none() {
        return Err(invalid(
            "solver.eps",
            format!("`{}` needs the ball radius eps", c.command),
        ));
    }
    match c.command {
        Command::SolveP if s.p.is_none() => {
            return Err(invalid("solver.p", "`solve-p` needs an exponent"))
        }
        Command::SweepP if s.ps.is_none() => {
            return Err(invalid("solver.ps", "`sweep-p` needs a list of exponents"))
        }
        Command::Sandwich if s.delta.is_none() => {
            return Err(invalid("solver.delta", "`sandwich` needs delta"))
        }
        Command::Verify if c.checks.is_empty() => {
            return Err(invalid("checks", "`verify` needs at least one check"))
        }
        _ => {}
    }
    if let Some(v @ (VariantSpec::Upper | VariantSpec::Lower)) = s.variant {
        if s.delta.is_none() {
            return Err(invalid(
                "solver.delta",
                format!("variant {v:?} needs delta"),
            ));
        }
    }
    if s.variant.is_some() && s.rhs.is_some() {
        return Err(invalid(
            "solver.rhs",
            "rhs selects the Poisson variant and cannot be combined with `variant`",
        ));
    }
    if matches!(c.command, Command::Verify | Command::Residual) {
        match &c.input {
            Some(path) => existing(loaded, "input", path)?,
            None => {
                return Err(invalid(
                    "input",
                    format!("`{}` needs an input field file", c.command),
                ))
            }
        }
    }
    if c.command == Command::TugOfWar {
        let game = c
            .game
            .as_ref()
            .ok_or_else(|| invalid("game", "`tug-of-war` needs a game section"))?;
        validate_game(loaded, game, d.lo.len())?;
    }
    for (k, entry) in c.checks.iter().enumerate() {
        validate_check(&entry.spec(), k, d.lo.len())?;
    }
    Ok(())
}

fn check_p(key: &str, p: f64) -> Result<(), CliError> {
    if !(2.0..=inflap::plaplace::MAX_EXPONENT).contains(&p) {
        return Err(invalid(
            key,
            format!("exponent {p} outside the supported range 2 <= p <= 64 (use solve-mv for the limit)"),
        ));
    }
    Ok(())
}

pub fn validate_game(loaded: &LoadedConfig, game: &GameParams, dim: usize) -> Result<(), CliError> {
    if game.start.len() != dim {
        return Err(invalid(
            "game.start",
            format!("expected {dim} coordinates, got {}", game.start.len()),
        ));
    }
    if game.runs < 30 {
        return Err(invalid(
            "game.runs",
            format!("need at least 30 runs, got {}", game.runs),
        ));
    }
    if game.max_plies == Some(0) {
        return Err(invalid("game.max_plies", "must be at least 1"));
    }
    for (key, s) in [
        ("game.max_strategy", &game.max_strategy),
        ("game.min_strategy", &game.min_strategy),
    ] {
        match s.as_str() {
            "greedy" | "random" => {}
            other => match other.strip_prefix("dpp:") {
                Some(file) if !file.is_empty() => existing(loaded, key, Path::new(file))?,
                _ => {
                    return Err(invalid(
                        key,
                        format!(
                        "unknown strategy {other:?} (expected greedy, random or dpp:<field.csv>)"
                    ),
                    ))
                }
            },
        }
    }
    Ok(())
}

fn validate_check(spec: &CheckSpec, k: usize, dim: usize) -> Result<(), CliError> {
    let key = |field: &str| format!("checks[{k}].{field}");
    let ball = |b: &BallSpec| -> Result<(), CliError> {
        if b.center.len() != dim {
            return Err(invalid(
                &key("ball.center"),
                format!("expected {dim} coordinates"),
            ));
        }
        positive(&key("ball.radius"), Some(b.radius))
    };
    match spec {
        CheckSpec::MaxPrinciple { ball: Some(b), .. } | CheckSpec::Amle { ball: b, .. } => ball(b)?,
        CheckSpec::MaxPrinciple { .. } => {}
        CheckSpec::ConeComparison {
            cones, subdomains, ..
        } => {
            if *cones == 0 || *subdomains == 0 {
                return Err(invalid(
                    &key("cones"),
                    "need at least one cone and one subdomain",
                ));
            }
        }
        CheckSpec::Harnack { x0, r, big_r, .. } => {
            if x0.len() != dim {
                return Err(invalid(&key("x0"), format!("expected {dim} coordinates")));
            }
            positive(&key("r"), Some(*r))?;
            positive(&key("R"), Some(*big_r))?;
        }
        CheckSpec::SphereProfile { x0, radii, .. } => {
            if x0.len() != dim {
                return Err(invalid(&key("x0"), format!("expected {dim} coordinates")));
            }
            if radii.len() < 3 {
                return Err(invalid(&key("radii"), "need at least three radii"));
            }
        }
    }
    Ok(())
}
