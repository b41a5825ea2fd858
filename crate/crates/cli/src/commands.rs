//! One function per command. Each writes its artifacts under the output
//! directory and returns the one-line summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use inflap::analytic::CatalogEntry;
use inflap::grid::{BoundaryData, Grid, NodeKind, ScalarField, Shape};
use inflap::lipschitz::{
    check_amle, check_cone_comparison, check_harnack, check_max_principle, lipschitz_constant,
    mcshane_whitney, nodes_in_ball, sphere_profile, AmleOptions, ComparisonReport, ConeSide,
    HarnackForm, ProfileMode, Side,
};
use inflap::mv::{
    residual_field, solve_mv, solve_sandwich, Initialization, MvConfig, RightHandSide,
    SchemeVariant,
};
use inflap::plaplace::{p_sweep, solve_p, PSolveConfig};
use inflap::tug::{
    dpp_strategy, estimate_value, play_game, run_seed, GameConfig, Greedy, RandomMove, Role,
    Strategy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    BallSpec, BoundarySource, CheckSpec, Command, EnvelopeSideSpec, HarnackFormSpec, LoadedConfig,
    ProfileModeSpec, ShapeSpec, VariantSpec, FORMAT_VERSION,
};
use crate::io::{read_boundary_table, read_field, write_field, write_json};
use crate::CliError;

/// What a successful run produced.
#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    /// False when an iteration cap was hit; artifacts are still written.
    pub converged: bool,
    pub artifacts: Vec<PathBuf>,
}

struct Run<'a> {
    loaded: &'a LoadedConfig,
    grid: Grid,
    out: PathBuf,
    artifacts: Vec<PathBuf>,
}

#[derive(Serialize)]
struct GridInfo {
    dim: usize,
    h: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: String,
    nodes: usize,
    interior: usize,
    boundary: usize,
}

pub fn build_grid(loaded: &LoadedConfig) -> Result<Grid, CliError> {
    let d = &loaded.config.domain;
    let shape = match &d.shape {
        ShapeSpec::Rectangle => Shape::Rectangle,
        ShapeSpec::Annulus { r1, r2, center } => Shape::Annulus {
            r1: *r1,
            r2: *r2,
            center: *center,
        },
        ShapeSpec::LShape => Shape::LShape,
        ShapeSpec::Mask { file } => {
            let path = loaded.resolve(file);
            let text = fs::read_to_string(&path).map_err(|e| {
                CliError::Validation(format!(
                    "config key `domain.shape.file`: {}: {e}",
                    path.display()
                ))
            })?;
            Shape::mask_from_text(&text)
                .map_err(|e| CliError::Validation(format!("config key `domain.shape.file`: {e}")))?
        }
    };
    Grid::build(&d.lo, &d.hi, d.h, shape)
        .map_err(|e| CliError::Validation(format!("config key `domain`: {e}")))
}

pub fn boundary_data(loaded: &LoadedConfig, grid: &Grid) -> Result<BoundaryData, CliError> {
    match &loaded.config.boundary {
        Some(BoundarySource::Table(path)) => read_boundary_table(&loaded.resolve(path), grid),
        Some(BoundarySource::Catalog(entry)) => catalog_trace(entry, grid),
        None => Err(CliError::Validation(
            "config key `boundary`: no boundary source".into(),
        )),
    }
}

fn catalog_trace(entry: &CatalogEntry, grid: &Grid) -> Result<BoundaryData, CliError> {
    let bad =
        |reason: String| CliError::Validation(format!("config key `boundary.catalog`: {reason}"));
    if let Some(dim) = entry.dim() {
        if dim != grid.dim() {
            return Err(bad(format!(
                "`{}` is {dim}-dimensional but the domain is {}-dimensional",
                entry.id(),
                grid.dim()
            )));
        }
    }
    let values = grid
        .boundary()
        .iter()
        .map(|&n| entry.eval(grid.coord(n)).map_err(|e| bad(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BoundaryData::from_values(grid, values)?)
}

impl<'a> Run<'a> {
    fn new(loaded: &'a LoadedConfig) -> Result<Self, CliError> {
        let grid = build_grid(loaded)?;
        let out = loaded.resolve(&loaded.config.output.dir);
        fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
        Ok(Run {
            loaded,
            grid,
            out,
            artifacts: Vec::new(),
        })
    }

    fn field(&mut self, name: &str, u: &ScalarField) -> Result<(), CliError> {
        let path = self.out.join(name);
        write_field(&path, &self.grid, u)?;
        self.artifacts.push(path);
        Ok(())
    }

    fn report(&mut self, body: Value) -> Result<(), CliError> {
        let (lo, hi) = self.grid.bounds();
        let dim = self.grid.dim();
        let mut doc = json!({
            "format_version": FORMAT_VERSION,
            "command": self.loaded.config.command.to_string(),
            "grid": GridInfo {
                dim,
                h: self.grid.h(),
                lo: lo[..dim].to_vec(),
                hi: hi[..dim].to_vec(),
                shape: self.grid.shape().name(),
                nodes: self.grid.len(),
                interior: self.grid.interior().len(),
                boundary: self.grid.boundary().len(),
            },
        });
        if let (Value::Object(doc), Value::Object(body)) = (&mut doc, body) {
            doc.extend(body);
        }
        let path = self.out.join("report.json");
        write_json(&path, &doc)?;
        self.artifacts.push(path);
        Ok(())
    }

    fn eps(&self) -> f64 {
        self.loaded.config.solver.eps.unwrap_or(2.0 * self.grid.h())
    }

    fn mv_config(&self) -> MvConfig {
        let s = &self.loaded.config.solver;
        let mut cfg = MvConfig::new(self.eps());
        if let Some(t) = s.tolerance {
            cfg = cfg.with_tolerance(t);
        }
        if let Some(m) = s.max_iterations {
            cfg = cfg.with_max_sweeps(m);
        }
        if let Some(i) = s.initialization {
            cfg = cfg.with_initialization(i);
        }
        let delta = s.delta.unwrap_or(0.0);
        let variant = match (s.variant, s.rhs) {
            (_, Some(f)) => SchemeVariant::Poisson(RightHandSide::constant(f)),
            (Some(VariantSpec::Upper), _) => SchemeVariant::Upper { delta },
            (Some(VariantSpec::Lower), _) => SchemeVariant::Lower { delta },
            _ => SchemeVariant::Plain,
        };
        cfg.with_variant(variant)
    }

    fn p_config(&self, p: f64) -> PSolveConfig {
        let s = &self.loaded.config.solver;
        let mut cfg = PSolveConfig::new(p);
        if let Some(t) = s.tolerance {
            cfg = cfg.with_tolerance(t);
        }
        if let Some(m) = s.max_iterations {
            cfg = cfg.with_max_passes(m);
        }
        if let Some(w) = s.relaxation {
            cfg = cfg.with_relaxation(w);
        }
        cfg
    }

    fn finish(self, summary: String, converged: bool) -> Outcome {
        let summary = if converged {
            summary
        } else {
            format!("{summary} [NOT CONVERGED]")
        };
        Outcome {
            summary,
            converged,
            artifacts: self.artifacts,
        }
    }
}

/// `rhs` is the constant right-hand side from the config, if any.
fn mv_solver_json(cfg: &MvConfig, rhs: Option<f64>) -> Value {
    let init = match cfg.initialization {
        Initialization::MwUpper => "mw_upper",
        Initialization::MwLower => "mw_lower",
        Initialization::BoundaryMean => "boundary_mean",
    };
    let mut out = json!({
        "eps": cfg.eps,
        "tolerance": cfg.tolerance,
        "max_sweeps": cfg.max_sweeps,
        "initialization": init,
        "variant": cfg.variant.name(),
    });
    match &cfg.variant {
        SchemeVariant::Upper { delta } | SchemeVariant::Lower { delta } => {
            out["delta"] = json!(delta)
        }
        SchemeVariant::Poisson(_) => out["rhs"] = json!(rhs),
        SchemeVariant::Plain => {}
    }
    out
}

pub fn run(loaded: &LoadedConfig) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let mut run = Run::new(loaded)?;
    let (summary, converged) = match loaded.config.command {
        Command::SolveMv => solve_mv_cmd(&mut run)?,
        Command::SolveP => solve_p_cmd(&mut run)?,
        Command::SweepP => sweep_p_cmd(&mut run)?,
        Command::Sandwich => sandwich_cmd(&mut run)?,
        Command::Extend => extend_cmd(&mut run)?,
        Command::Verify => verify_cmd(&mut run)?,
        Command::TugOfWar => tug_cmd(&mut run)?,
        Command::Residual => residual_cmd(&mut run)?,
    };
    let summary = format!(
        "{}: {summary} ({} nodes, {:.2}s)",
        loaded.config.command,
        run.grid.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(run.finish(summary, converged))
}

fn solve_mv_cmd(run: &mut Run) -> Result<(String, bool), CliError> {
    let g = boundary_data(run.loaded, &run.grid)?;
    let cfg = run.mv_config();
    let (u, report) = solve_mv(&run.grid, &g, &cfg)?;
    run.field("field.csv", &u)?;
    run.report(json!({
        "solver": mv_solver_json(&cfg, run.loaded.config.solver.rhs),
        "converged": !report.truncated,
        "solve": report,
    }))?;
    Ok((
        format!(
            "{} sweeps, final update {:.3e}, error estimate {:.3e}, range [{:.6}, {:.6}]",
            report.sweeps, report.final_update, report.error_estimate, report.min, report.max
        ),
        !report.truncated,
    ))
}

fn solve_p_cmd(run: &mut Run) -> Result<(String, bool), CliError> {
    let g = boundary_data(run.loaded, &run.grid)?;
    let cfg = run.p_config(run.loaded.config.solver.p.unwrap_or(2.0));
    let (u, report) = solve_p(&run.grid, &g, &cfg)?;
    run.field("field.csv", &u)?;
    let summary = format!(
        "p = {}, {} passes, energy {:.9e}, last update {:.3e}",
        report.p, report.passes, report.energy, report.last_max_update
    );
    let converged = report.converged;
    run.report(json!({
        "solver": {"p": cfg.p, "tolerance": cfg.tolerance, "max_passes": cfg.max_passes, "relaxation": cfg.relaxation},
        "converged": converged,
        "solve": report,
    }))?;
    Ok((summary, converged))
}

fn sweep_p_cmd(run: &mut Run) -> Result<(String, bool), CliError> {
    let g = boundary_data(run.loaded, &run.grid)?;
    let s = &run.loaded.config.solver;
    let ps = s.ps.clone().unwrap_or_default();
    let warm = s.warm_start.unwrap_or(true);
    let cfg = run.p_config(ps[0]);
    let mv_cfg = run.mv_config();
    let (entries, mv) = p_sweep(&run.grid, &g, &ps, &cfg, &mv_cfg, warm)?;
    run.field("field_mv.csv", &mv)?;
    let table = run.out.join("sweep.csv");
    let mut w = csv::Writer::from_path(&table).map_err(|e| CliError::Io(e.to_string()))?;
    let mut head = vec!["p".to_string(), "energy".into(), "distance_to_mv".into()];
    for &(s, _) in &entries[0].gradient_norms {
        head.push(format!("grad_L{s}"));
    }
    head.extend(["passes".into(), "converged".into()]);
    w.write_record(&head)
        .map_err(|e| CliError::Io(e.to_string()))?;
    for e in &entries {
        let mut row = vec![
            format!("{}", e.p),
            format!("{:.16e}", e.report.energy),
            format!("{:.16e}", e.distance_to_mv),
        ];
        row.extend(e.gradient_norms.iter().map(|(_, v)| format!("{v:.16e}")));
        row.push(e.report.passes.to_string());
        row.push(e.report.converged.to_string());
        w.write_record(&row)
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    run.artifacts.push(table);
    for e in &entries {
        run.field(&format!("field_p{}.csv", e.p), &e.field)?;
    }
    let converged = entries.iter().all(|e| e.report.converged);
    let distances: Vec<String> = entries
        .iter()
        .map(|e| format!("{}:{:.4}", e.p, e.distance_to_mv))
        .collect();
    run.report(json!({
        "solver": {"ps": ps, "warm_start": warm, "mv": mv_solver_json(&mv_cfg, run.loaded.config.solver.rhs)},
        "converged": converged,
        "entries": entries,
    }))?;
    Ok((
        format!("distance to mv by p {}", distances.join(" ")),
        converged,
    ))
}

fn sandwich_cmd(run: &mut Run) -> Result<(String, bool), CliError> {
    let g = boundary_data(run.loaded, &run.grid)?;
    let s = &run.loaded.config.solver;
    let delta = s.delta.unwrap_or(0.0);
    let cfg = run.mv_config();
    let sw = solve_sandwich(&run.grid, &g, cfg.eps, delta, cfg.tolerance, cfg.max_sweeps)?;
    run.field("lower.csv", &sw.lower)?;
    run.field("field.csv", &sw.plain)?;
    run.field("upper.csv", &sw.upper)?;
    let converged = sw.reports.iter().all(|r| !r.truncated);
    let ordered = sw.lower.le(&sw.plain) && sw.plain.le(&sw.upper);
    run.report(json!({
        "solver": {"eps": cfg.eps, "delta": delta, "tolerance": cfg.tolerance, "max_sweeps": cfg.max_sweeps},
        "converged": converged,
        "ordered": ordered,
        "gap": sw.gap,
        "gap_constant": sw.constant,
        "solves": sw.reports,
    }))?;
    Ok((
        format!("delta = {delta}, gap {:.6e}, ordered {ordered}", sw.gap),
        converged,
    ))
}

fn extend_cmd(run: &mut Run) -> Result<(String, bool), CliError> {
    let g = boundary_data(run.loaded, &run.grid)?;
    let side = run
        .loaded
        .config
        .solver
        .side
        .unwrap_or(EnvelopeSideSpec::Upper);
    let u = mcshane_whitney(
        &run.grid,
        &g,
        if side == EnvelopeSideSpec::Upper {
            Side::Upper
        } else {
            Side::Lower
        },
    );
    run.field("field.csv", &u)?;
    let all: Vec<usize> = (0..run.grid.len()).collect();
    let l = lipschitz_constant(&u, &run.grid, &all)?.value;
    run.report(json!({
        "side": if side == EnvelopeSideSpec::Upper { "upper" } else { "lower" },
        "boundary_lipschitz": g.lipschitz(),
        "extension_lipschitz": l,
    }))?;
    Ok((
        format!(
            "boundary Lipschitz {:.6}, extension Lipschitz {l:.6}",
            g.lipschitz()
        ),
        true,
    ))
}

fn ball_interior(grid: &Grid, ball: &BallSpec) -> Vec<usize> {
    nodes_in_ball(grid, &ball.center, ball.radius)
        .into_iter()
        .filter(|&n| grid.kind(n) == NodeKind::Interior)
        .collect()
}

fn nonempty(nodes: Vec<usize>, key: &str) -> Result<Vec<usize>, CliError> {
    if nodes.is_empty() {
        Err(CliError::Validation(format!(
            "config key `{key}`: the ball contains no interior node"
        )))
    } else {
        Ok(nodes)
    }
}

/// Randomized cone suite: random interior discs, cones with apex outside
/// each disc, both sides. Aggregated into one report.
fn cone_suite(
    u: &ScalarField,
    grid: &Grid,
    cones: usize,
    subdomains: usize,
    c: f64,
    seed: u64,
) -> Result<ComparisonReport, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = grid.bounds();
    let dim = grid.dim();
    let h = grid.h();
    let width = (0..dim).map(|d| hi[d] - lo[d]).fold(0.0, f64::max);
    let slope = (u.max() - u.min()) / width.max(h);
    let interior = grid.interior();
    let mut worst: Option<ComparisonReport> = None;
    let (mut checks, mut failures) = (0usize, 0usize);
    let mut made = 0;
    let mut attempts = 0;
    while made < subdomains {
        attempts += 1;
        if attempts > 100 * subdomains {
            return Err(CliError::Validation(
                "cone-comparison: the domain is too small for random discs".into(),
            ));
        }
        let center = grid
            .coord(interior[rng.gen_range(0..interior.len())])
            .to_vec();
        let radius = rng.gen_range(2.0 * h..(0.25 * width).max(2.5 * h));
        let disc = ball_interior(
            grid,
            &BallSpec {
                center: center.clone(),
                radius,
            },
        );
        if disc.len() < 2 {
            continue;
        }
        made += 1;
        let mut placed = 0;
        while placed < cones {
            let apex: Vec<f64> = (0..dim)
                .map(|d| rng.gen_range(lo[d] - width..hi[d] + width))
                .collect();
            if inflap::grid::distance(&apex, &center) <= radius + h {
                continue;
            }
            placed += 1;
            let b = rng.gen_range(-4.0..4.0) * slope;
            for side in [ConeSide::Above, ConeSide::Below] {
                let r = check_cone_comparison(u, grid, &disc, &apex, b, side, c)?;
                checks += 1;
                if !r.passed {
                    failures += 1;
                }
                if worst.as_ref().is_none_or(|w| r.violation > w.violation) {
                    worst = Some(r);
                }
            }
        }
    }
    let mut report = worst.expect("at least one check ran");
    report.property = "cone_comparison".into();
    report.passed = failures == 0;
    report.parameters = BTreeMap::from([
        ("cones".to_string(), cones as f64),
        ("subdomains".to_string(), subdomains as f64),
        ("checks".to_string(), checks as f64),
        ("failures".to_string(), failures as f64),
        ("c".to_string(), c),
    ]);
    Ok(report)
}

fn verify_cmd(run: &mut Run) -> Result<(String, bool), CliError> {
    let cfg = &run.loaded.config;
    let input = run
        .loaded
        .resolve(cfg.input.as_deref().unwrap_or(Path::new("")));
    let u = read_field(&input, &run.grid)?;
    let grid = &run.grid;
    let mut reports = Vec::new();
    for (k, entry) in cfg.checks.iter().enumerate() {
        let key = format!("checks[{k}].ball");
        let r = match entry.spec() {
            CheckSpec::MaxPrinciple { ball, c } => {
                let nodes = match ball {
                    Some(b) => nonempty(ball_interior(grid, &b), &key)?,
                    None => (0..grid.len()).collect(),
                };
                check_max_principle(&u, grid, &nodes, c)?
            }
            CheckSpec::ConeComparison {
                cones,
                subdomains,
                c,
            } => cone_suite(&u, grid, cones, subdomains, c, run_seed(cfg.seed, k as u64))?,
            CheckSpec::Harnack {
                x0,
                r,
                big_r,
                form,
                c,
            } => {
                let form = match form {
                    HarnackFormSpec::Factor3 => HarnackForm::Factor3,
                    HarnackFormSpec::Exponential => HarnackForm::Exponential,
                };
                check_harnack(&u, grid, &x0, r, big_r, form, c)?
            }
            CheckSpec::SphereProfile { x0, radii, mode, c } => {
                let mode = if mode == ProfileModeSpec::Max {
                    ProfileMode::Max
                } else {
                    ProfileMode::Min
                };
                let profile = sphere_profile(&u, grid, &x0, &radii, mode, c)?;
                let mut r = profile.report;
                r.parameters.extend(
                    profile
                        .values
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (format!("profile_{i:02}"), *v)),
                );
                r
            }
            CheckSpec::Amle {
                ball,
                competitors,
                c,
            } => {
                let nodes = nonempty(ball_interior(grid, &ball), &key)?;
                let options = AmleOptions {
                    competitors,
                    seed: run_seed(cfg.seed, k as u64),
                    c,
                };
                check_amle(&u, grid, &nodes, &MvConfig::new(run.eps()), &options)?
            }
        };
        reports.push(r);
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    let names: Vec<String> = reports
        .iter()
        .map(|r| format!("{}={}", r.property, if r.passed { "pass" } else { "FAIL" }))
        .collect();
    let total = reports.len();
    run.report(json!({
        "passed": passed == total,
        "checks": reports,
    }))?;
    Ok((
        format!("{passed}/{total} checks passed ({})", names.join(", ")),
        true,
    ))
}

fn strategy(
    loaded: &LoadedConfig,
    grid: &Grid,
    payoff: &BoundaryData,
    spec: &str,
    eps: f64,
    role: Role,
) -> Result<Box<dyn Strategy>, CliError> {
    Ok(match spec {
        "greedy" => Box::new(Greedy::new(grid, payoff, role)),
        "random" => Box::new(RandomMove),
        other => {
            let file = other.strip_prefix("dpp:").unwrap_or(other);
            let u = read_field(&loaded.resolve(Path::new(file)), grid)?;
            Box::new(dpp_strategy(&u, grid, eps, role)?)
        }
    })
}

fn tug_cmd(run: &mut Run) -> Result<(String, bool), CliError> {
    let cfg = &run.loaded.config;
    let game = cfg.game.as_ref().expect("validated");
    let payoff = boundary_data(run.loaded, &run.grid)?;
    let eps = run.eps();
    let max = strategy(
        run.loaded,
        &run.grid,
        &payoff,
        &game.max_strategy,
        eps,
        Role::Max,
    )?;
    let min = strategy(
        run.loaded,
        &run.grid,
        &payoff,
        &game.min_strategy,
        eps,
        Role::Min,
    )?;
    let mut config = GameConfig::new(&run.grid, eps, &payoff)
        .with_seed(cfg.seed)
        .with_runs(game.runs);
    if let Some(m) = game.max_plies {
        config = config.with_max_plies(m);
    }
    let stats = estimate_value(&config, &game.start, max.as_ref(), min.as_ref())?;
    if game.transcript {
        let path = run.out.join("transcript.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(e.to_string()))?;
        let mut head = vec!["run", "seed", "exit_x"];
        if run.grid.dim() == 2 {
            head.push("exit_y");
        }
        head.extend(["payoff", "plies", "truncated"]);
        w.write_record(&head)
            .map_err(|e| CliError::Io(e.to_string()))?;
        for k in 0..game.runs {
            let seed = run_seed(cfg.seed, k as u64);
            let o = play_game(&config, &game.start, max.as_ref(), min.as_ref(), seed)?;
            let mut row = vec![k.to_string(), seed.to_string()];
            match &o.exit_point {
                Some(x) => row.extend(x.iter().map(|c| format!("{c:.16e}"))),
                None => row.extend((0..run.grid.dim()).map(|_| String::new())),
            }
            row.extend([
                format!("{:.16e}", o.payoff),
                o.plies.to_string(),
                o.truncated.to_string(),
            ]);
            w.write_record(&row)
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        run.artifacts.push(path);
    }
    let summary = format!(
        "{} runs, mean {:.6} ± {:.6}, mean plies {:.1}, truncated {}",
        stats.runs, stats.mean, stats.half_width, stats.mean_plies, stats.truncations
    );
    let warning = stats.truncation_warning;
    run.report(json!({
        "game": {
            "start": game.start,
            "eps": eps,
            "runs": game.runs,
            "seed": cfg.seed,
            "max_strategy": max.name(),
            "min_strategy": min.name(),
            "max_plies": config.max_plies,
        },
        "stats": stats,
    }))?;
    Ok((
        if warning {
            format!("{summary}; WARNING: more than 5% of runs truncated")
        } else {
            summary
        },
        true,
    ))
}

fn residual_cmd(run: &mut Run) -> Result<(String, bool), CliError> {
    let cfg = &run.loaded.config;
    let input = run
        .loaded
        .resolve(cfg.input.as_deref().unwrap_or(Path::new("")));
    let u = read_field(&input, &run.grid)?;
    let eps = run.eps();
    let r = residual_field(&u, &run.grid, eps)?;
    let worst = (0..run.grid.len())
        .max_by(|&a, &b| r.get(a).abs().total_cmp(&r.get(b).abs()))
        .unwrap_or(0);
    run.field("field.csv", &r)?;
    let sup = r.sup_norm();
    run.report(json!({
        "eps": eps,
        "sup_norm": sup,
        "worst_location": run.grid.coord(worst),
    }))?;
    Ok((format!("eps = {eps}, sup residual {sup:.3e}"), true))
}
