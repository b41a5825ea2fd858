//! eps-step tug-of-war on the lattice.
//!
//! At every ply a fair coin picks the player who moves; the mover shifts the
//! token by a lattice vector of length at most `eps` (the same closed-ball
//! stencil the mean-value scheme uses). The game stops when the token
//! reaches a boundary node, and the maximizing player receives the payoff
//! there. With both players following the argmax/argmin of the discrete
//! mean-value solution the payoff is a martingale, so Monte Carlo means
//! estimate that solution.
//!
//! Randomness: every run owns a ChaCha8 generator seeded with
//! [`run_seed`]`(master, index)`; the coin uses one `bool` draw per ply.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{BoundaryData, Grid, NodeKind, ScalarField, StencilTable};

pub const DEFAULT_MAX_PLIES: u64 = 1_000_000;
/// Fraction of truncated runs above which the mean leaves them out and
/// the stats carry a warning.
pub const TRUNCATION_WARNING: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Max,
    Min,
}

pub struct GameConfig<'a> {
    pub grid: &'a Grid,
    pub eps: f64,
    pub payoff: &'a BoundaryData,
    pub max_plies: u64,
    pub seed: u64,
    pub runs: usize,
}

impl<'a> GameConfig<'a> {
    pub fn new(grid: &'a Grid, eps: f64, payoff: &'a BoundaryData) -> Self {
        GameConfig {
            grid,
            eps,
            payoff,
            max_plies: DEFAULT_MAX_PLIES,
            seed: 0,
            runs: 10_000,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_runs(mut self, runs: usize) -> Self {
        self.runs = runs;
        self
    }

    pub fn with_max_plies(mut self, max_plies: u64) -> Self {
        self.max_plies = max_plies;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::invalid(
                "eps",
                format!("must be positive, got {}", self.eps),
            ));
        }
        if self.max_plies < 1 {
            return Err(Error::invalid("max_plies", "must be at least 1"));
        }
        if self.runs < 1 {
            return Err(Error::invalid("runs", "must be at least 1"));
        }
        if self.payoff.values().len() != self.grid.boundary().len() {
            return Err(Error::invalid(
                "payoff",
                "payoff does not match the grid boundary",
            ));
        }
        Ok(())
    }
}

/// What a strategy sees when asked to move.
pub struct GameState<'a> {
    pub grid: &'a Grid,
    pub stencil: &'a StencilTable,
    pub node: usize,
    pub eps: f64,
}

impl GameState<'_> {
    /// Admissible destinations: the closed eps-ball stencil of the token.
    pub fn reachable(&self) -> impl Iterator<Item = usize> + '_ {
        self.stencil
            .of_slot(self.grid.slot(self.node))
            .iter()
            .map(|&m| m as usize)
    }

    pub fn offset_to(&self, target: usize) -> Vec<f64> {
        let from = self.grid.coord(self.node);
        self.grid
            .coord(target)
            .iter()
            .zip(from)
            .map(|(a, b)| a - b)
            .collect()
    }
}

pub trait Strategy: Sync {
    fn name(&self) -> String;

    /// Move vector of length at most `eps`, snapped to the lattice by the
    /// game.
    fn choose(&self, state: &GameState<'_>, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
}

/// Heads for the boundary node with the best payoff for its role (largest
/// for max, smallest for min; ties to the smallest node index), taking the
/// stencil move that lands closest to it.
pub struct Greedy {
    role: Role,
    target: Vec<f64>,
}

impl Greedy {
    pub fn new(grid: &Grid, payoff: &BoundaryData, role: Role) -> Self {
        let mut best = 0;
        for k in 1..payoff.values().len() {
            let better = match role {
                Role::Max => payoff.value(k) > payoff.value(best),
                Role::Min => payoff.value(k) < payoff.value(best),
            };
            if better {
                best = k;
            }
        }
        Greedy {
            role,
            target: grid.coord(grid.boundary()[best]).to_vec(),
        }
    }
}

impl Strategy for Greedy {
    fn name(&self) -> String {
        format!("greedy-{}", role_name(self.role))
    }

    fn choose(&self, state: &GameState<'_>, _rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let target = &self.target;
        let best = state
            .reachable()
            .map(|m| (crate::grid::distance(state.grid.coord(m), target), m))
            .reduce(|a, x| if x.0 < a.0 { x } else { a })
            .map(|(_, m)| m)
            .unwrap_or(state.node);
        Ok(state.offset_to(best))
    }
}

/// Uniformly random stencil node.
pub struct RandomMove;

impl Strategy for RandomMove {
    fn name(&self) -> String {
        "random".into()
    }

    fn choose(&self, state: &GameState<'_>, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let options = state.stencil.of_slot(state.grid.slot(state.node));
        let pick = options[rng.gen_range(0..options.len())] as usize;
        Ok(state.offset_to(pick))
    }
}

/// Moves to the argmax (max role) or argmin (min role) of a field over the
/// eps-stencil; ties go to the smallest node index.
pub struct DppStrategy {
    field: ScalarField,
    role: Role,
    eps: f64,
}

pub fn dpp_strategy(u: &ScalarField, grid: &Grid, eps: f64, role: Role) -> Result<DppStrategy> {
    if u.len() != grid.len() {
        return Err(Error::invalid("field", "field does not match the grid"));
    }
    if eps < grid.h() * (1.0 - 1e-12) {
        return Err(Error::StencilTooSmall { eps, h: grid.h() });
    }
    Ok(DppStrategy {
        field: u.clone(),
        role,
        eps,
    })
}

impl DppStrategy {
    /// Destination node from an interior node, for stencils built with this
    /// strategy's eps.
    pub fn target(&self, grid: &Grid, stencil: &StencilTable, node: usize) -> Result<usize> {
        if node >= grid.len() || !grid.is_interior(node) {
            return Err(Error::NotInterior { node });
        }
        let mut best = None::<(f64, usize)>;
        for &m in stencil.of_slot(grid.slot(node)) {
            let m = m as usize;
            let v = self.field.get(m);
            let better = match (best, self.role) {
                (None, _) => true,
                (Some((b, _)), Role::Max) => v > b,
                (Some((b, _)), Role::Min) => v < b,
            };
            if better {
                best = Some((v, m));
            }
        }
        Ok(best.map(|(_, m)| m).unwrap_or(node))
    }
}

impl Strategy for DppStrategy {
    fn name(&self) -> String {
        format!("dpp-{}", role_name(self.role))
    }

    fn choose(&self, state: &GameState<'_>, _rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        if (state.eps - self.eps).abs() > 1e-12 * self.eps {
            return Err(Error::Precondition(format!(
                "dpp strategy built for eps = {} but the game uses eps = {}",
                self.eps, state.eps
            )));
        }
        Ok(state.offset_to(self.target(state.grid, state.stencil, state.node)?))
    }
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::Max => "max",
        Role::Min => "min",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ply {
    pub ply: u64,
    /// Coin outcome: true when the maximizer moved.
    pub max_moved: bool,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameOutcome {
    /// Boundary node where the game ended, `None` when truncated.
    pub exit_node: Option<usize>,
    pub exit_point: Option<Vec<f64>>,
    pub payoff: f64,
    pub plies: u64,
    pub truncated: bool,
    pub transcript: Vec<Ply>,
}

/// Seed of run `index` under `master` (SplitMix64 finalizer of the pair).
pub fn run_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(master ^ mix(index))
}

struct Arena<'a> {
    config: &'a GameConfig<'a>,
    stencil: StencilTable,
}

impl<'a> Arena<'a> {
    fn new(config: &'a GameConfig<'a>) -> Result<Self> {
        config.validate()?;
        Ok(Arena {
            config,
            stencil: StencilTable::new(config.grid, config.eps)?,
        })
    }

    fn start_node(&self, start: &[f64]) -> Result<usize> {
        let grid = self.config.grid;
        if start.len() != grid.dim() {
            return Err(Error::invalid(
                "start",
                "start point dimension does not match the grid",
            ));
        }
        let node = grid
            .nearest_node(start)
            .ok_or_else(|| Error::invalid("start", "grid has no nodes"))?;
        if !grid.is_interior(node) {
            return Err(Error::Precondition(format!(
                "start {start:?} is not at an interior node"
            )));
        }
        Ok(node)
    }

    /// Lattice node reached by `mv` from `from`; crossings out of the closed
    /// domain stop at the first boundary node along the segment.
    fn land(&self, from: usize, mv: &[f64], strategy: &dyn Strategy) -> Result<usize> {
        let grid = self.config.grid;
        let eps = self.config.eps;
        let length = crate::grid::norm(mv);
        if mv.len() != grid.dim() || !length.is_finite() || length > eps * (1.0 + 1e-12) {
            return Err(Error::IllegalMove {
                strategy: strategy.name(),
                length,
                eps,
            });
        }
        let h = grid.h();
        let [i0, j0] = grid.lattice_position(from);
        let at = |t: f64| -> (isize, isize) {
            let di = (t * mv[0] / h).round() as isize;
            let dj = if grid.dim() == 2 {
                (t * mv[1] / h).round() as isize
            } else {
                0
            };
            (i0 as isize + di, j0 as isize + dj)
        };
        let (i, j) = at(1.0);
        if grid.lattice_kind(i, j) != NodeKind::Exterior {
            return Ok(grid.node_at(i, j).unwrap());
        }
        let steps = (4.0 * length / h).ceil().max(1.0) as usize;
        for k in 1..=steps {
            let (i, j) = at(k as f64 / steps as f64);
            match grid.lattice_kind(i, j) {
                NodeKind::Boundary => return Ok(grid.node_at(i, j).unwrap()),
                NodeKind::Exterior => break,
                NodeKind::Interior => {}
            }
        }
        // segment jumped over the boundary layer: nearest boundary node in the stencil
        let end: Vec<f64> = grid
            .coord(from)
            .iter()
            .zip(mv)
            .map(|(a, b)| a + b)
            .collect();
        self.stencil
            .of_slot(grid.slot(from))
            .iter()
            .map(|&m| m as usize)
            .filter(|&m| !grid.is_interior(m))
            .map(|m| (crate::grid::distance(grid.coord(m), &end), m))
            .reduce(|a, x| if x.0 < a.0 { x } else { a })
            .map(|(_, m)| m)
            .ok_or_else(|| Error::IllegalMove {
                strategy: strategy.name(),
                length,
                eps,
            })
    }

    fn play(
        &self,
        start: usize,
        max_strategy: &dyn Strategy,
        min_strategy: &dyn Strategy,
        seed: u64,
        record: bool,
    ) -> Result<GameOutcome> {
        let grid = self.config.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut node = start;
        let mut transcript = Vec::new();
        let mut plies = 0;
        while plies < self.config.max_plies {
            plies += 1;
            let max_moved: bool = rng.gen();
            let mover = if max_moved {
                max_strategy
            } else {
                min_strategy
            };
            let state = GameState {
                grid,
                stencil: &self.stencil,
                node,
                eps: self.config.eps,
            };
            let mv = mover.choose(&state, &mut rng)?;
            let next = self.land(node, &mv, mover)?;
            if record {
                transcript.push(Ply {
                    ply: plies,
                    max_moved,
                    from: node,
                    to: next,
                });
            }
            node = next;
            if !grid.is_interior(node) {
                return Ok(GameOutcome {
                    exit_node: Some(node),
                    exit_point: Some(grid.coord(node).to_vec()),
                    payoff: self.config.payoff.value(grid.slot(node)),
                    plies,
                    truncated: false,
                    transcript,
                });
            }
        }
        Ok(GameOutcome {
            exit_node: None,
            exit_point: None,
            payoff: 0.0,
            plies,
            truncated: true,
            transcript,
        })
    }
}

/// Plays one game from the interior node nearest to `start`, recording the
/// transcript.
pub fn play_game(
    config: &GameConfig<'_>,
    start: &[f64],
    max_strategy: &dyn Strategy,
    min_strategy: &dyn Strategy,
    seed: u64,
) -> Result<GameOutcome> {
    let arena = Arena::new(config)?;
    let node = arena.start_node(start)?;
    arena.play(node, max_strategy, min_strategy, seed, true)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameStats {
    pub runs: usize,
    pub mean: f64,
    pub variance: f64,
    /// `1.96 sqrt(variance / runs)` over the runs entering the mean.
    pub half_width: f64,
    pub mean_plies: f64,
    pub truncations: usize,
    /// More than 5% of the runs were truncated; the mean then uses the
    /// completed runs only and is biased.
    pub truncation_warning: bool,
    pub min_payoff: f64,
    pub max_payoff: f64,
}

/// Runs `config.runs` independent games (in parallel) and summarizes the
/// payoffs. The result does not depend on the thread schedule.
pub fn estimate_value(
    config: &GameConfig<'_>,
    start: &[f64],
    max_strategy: &dyn Strategy,
    min_strategy: &dyn Strategy,
) -> Result<GameStats> {
    if config.runs < 30 {
        return Err(Error::invalid(
            "runs",
            format!("need at least 30 runs, got {}", config.runs),
        ));
    }
    let arena = Arena::new(config)?;
    let node = arena.start_node(start)?;
    let outcomes = (0..config.runs)
        .into_par_iter()
        .map(|k| {
            arena
                .play(
                    node,
                    max_strategy,
                    min_strategy,
                    run_seed(config.seed, k as u64),
                    false,
                )
                .map(|o| (o.payoff, o.plies, o.truncated))
        })
        .collect::<Result<Vec<_>>>()?;
    let truncations = outcomes.iter().filter(|o| o.2).count();
    let warning = truncations as f64 > TRUNCATION_WARNING * config.runs as f64;
    let payoffs: Vec<f64> = outcomes
        .iter()
        .filter(|o| !(warning && o.2))
        .map(|o| o.0)
        .collect();
    let plies: Vec<f64> = outcomes.iter().map(|o| o.1 as f64).collect();
    let (mean, variance) = mean_and_variance(&payoffs);
    let n = payoffs.len().max(1) as f64;
    Ok(GameStats {
        runs: config.runs,
        mean,
        variance,
        half_width: 1.96 * (variance / n).sqrt(),
        mean_plies: pairwise_sum(&plies) / plies.len() as f64,
        truncations,
        truncation_warning: warning,
        min_payoff: payoffs.iter().copied().fold(f64::INFINITY, f64::min),
        max_payoff: payoffs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Mean and unbiased sample variance (two-pass, pairwise sums).
fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, pairwise_sum(&sq) / (n - 1.0))
}

/// Values of the symmetric walk on states `0..n` absorbed at both ends:
/// `v(i) = (v(i-1) + v(i+1)) / 2`, solved directly as a tridiagonal system.
pub fn exact_value_1d(n_states: usize, payoff_left: f64, payoff_right: f64) -> Result<Vec<f64>> {
    if n_states < 3 {
        return Err(Error::invalid(
            "n_states",
            format!("need at least 3 states, got {n_states}"),
        ));
    }
    let m = n_states - 2;
    // -v(i-1) + 2 v(i) - v(i+1) = 0, Thomas algorithm
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    for i in 0..m {
        let mut rhs = 0.0;
        if i == 0 {
            rhs += payoff_left;
        }
        if i == m - 1 {
            rhs += payoff_right;
        }
        let denom = if i == 0 { 2.0 } else { 2.0 + c[i - 1] };
        c[i] = -1.0 / denom;
        d[i] = if i == 0 {
            rhs / denom
        } else {
            (rhs + d[i - 1]) / denom
        };
    }
    let mut v = vec![0.0; n_states];
    v[0] = payoff_left;
    v[n_states - 1] = payoff_right;
    for i in (0..m).rev() {
        v[i + 1] = d[i] - if i + 1 < m { c[i] * v[i + 2] } else { 0.0 };
    }
    Ok(v)
}
