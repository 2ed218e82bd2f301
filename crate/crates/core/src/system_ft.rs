//! Wave-front tracking for systems, driven by the exact Riemann solver.
//!
//! Each jump is replaced by its Riemann fan. Shocks and contacts become single
//! fronts; rarefactions are split into fronts of strength at most `δ_r`
//! travelling at `λ_j` of their right state. When a rarefaction front takes
//! part in an interaction, the outgoing rarefaction of the same family is kept
//! as one front instead of being split again, which keeps the front count
//! finite.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{State, SystemModel};
use crate::piecewise::PiecewiseConstantFn;
use crate::system_riemann::RiemannSolver;
use crate::tracking::{self, DiagnosticSample, Emitted, EventRecord, FrontKind, Incoming, Tracked, TrackerLimits, WaveSolver};

pub const DEFAULT_FRONT_CAP: usize = 200_000;
pub const DEFAULT_DELTA0: f64 = 0.3;
pub const DEFAULT_TV_FACTOR: f64 = 2.0;
pub const DEFAULT_WAVE_FLOOR: f64 = 1e-12;

/// Tracking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FtParams {
    /// Rarefaction splitting threshold `δ_r`.
    pub delta_r: f64,
    pub front_cap: usize,
    /// Largest admissible initial total variation `δ₀`.
    pub delta0: f64,
    /// TV monitor factor `C₀`: the run fails if `TV(t) > C₀ TV(0)`.
    pub tv_factor: f64,
    /// Waves weaker than this are not emitted.
    pub wave_floor: f64,
    /// Small-amplitude radius of the Riemann solver; the default `C₀ δ₀`
    /// covers every jump the TV monitor lets through.
    pub riemann_delta: f64,
}

impl Default for FtParams {
    fn default() -> Self {
        Self {
            delta_r: 1e-2,
            front_cap: DEFAULT_FRONT_CAP,
            delta0: DEFAULT_DELTA0,
            tv_factor: DEFAULT_TV_FACTOR,
            wave_floor: DEFAULT_WAVE_FLOOR,
            riemann_delta: DEFAULT_TV_FACTOR * DEFAULT_DELTA0,
        }
    }
}

impl FtParams {
    /// Couples the splitting threshold to the scalar grid: `δ_r = ε 2^{-ν}`.
    pub fn coupled(eps: f64, nu: u32) -> Self {
        Self { delta_r: eps / crate::piecewise::grid_scale(nu), ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta_r > 0.0 && self.delta0 > 0.0 && self.tv_factor >= 1.0 && self.wave_floor >= 0.0 && self.riemann_delta > 0.0) {
            return Err(Error::Config(format!("invalid front tracking parameters {self:?}")));
        }
        Ok(())
    }
}

/// A live front of the system solution.
#[derive(Debug, Clone, Serialize)]
pub struct SystemFront {
    pub position: f64,
    pub speed: f64,
    pub family: usize,
    pub kind: FrontKind,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub strength: f64,
}

struct SystemSolver {
    rs: RiemannSolver,
    delta_r: f64,
    wave_floor: f64,
}

impl WaveSolver for SystemSolver {
    type State = State;

    fn solve(&self, left: &State, right: &State, incoming: &[Incoming]) -> Result<Vec<Emitted<State>>> {
        if left == right {
            return Ok(Vec::new());
        }
        let model = self.rs.model();
        let fan = self.rs.riemann_solve(left, right)?;
        let mut out: Vec<Emitted<State>> = Vec::new();
        for w in &fan.waves {
            if w.strengths.iter().all(|b| b.abs() <= self.wave_floor) {
                continue;
            }
            match w.kind {
                FrontKind::Shock | FrontKind::Contact => out.push(Emitted {
                    speed: w.speed_left,
                    right: w.right.clone(),
                    family: w.family,
                    kind: w.kind,
                    strength: w.strength(),
                }),
                FrontKind::Rarefaction => {
                    let beta = w.strengths[0];
                    let keep_whole = incoming.iter().any(|f| f.kind == FrontKind::Rarefaction && f.family == w.family);
                    let pieces = if keep_whole { 1 } else { (beta / self.delta_r).ceil().max(1.0) as usize };
                    let piece = beta / pieces as f64;
                    let mut state = w.left.clone();
                    for k in 0..pieces {
                        state = if k + 1 == pieces { w.right.clone() } else { self.rs.lax_curve_point(&state, w.family, piece)? };
                        out.push(Emitted {
                            speed: model.eigenvalue(&state, w.family)?,
                            right: state.clone(),
                            family: w.family,
                            kind: FrontKind::Rarefaction,
                            strength: piece,
                        });
                    }
                }
            }
        }
        // the outermost state is the exact input, whatever was dropped
        if let Some(last) = out.last_mut() {
            last.right = right.clone();
            if last.kind == FrontKind::Rarefaction {
                last.speed = model.eigenvalue(right, last.family)?;
            }
        }
        Ok(out)
    }

    fn jump(&self, a: &State, b: &State) -> f64 {
        (a - b).lp_norm(1)
    }

    fn to_values(&self, s: &State) -> Vec<f64> {
        s.as_slice().to_vec()
    }

    fn rh_defect(&self, left: &State, right: &State, speed: f64) -> f64 {
        let m = self.rs.model();
        match (m.flux(left), m.flux(right)) {
            (Ok(fl), Ok(fr)) => (fr - fl - (right - left) * speed).lp_norm(1),
            _ => f64::INFINITY,
        }
    }
}

/// Result of [`ft_evolve`].
pub struct SystemTrajectory {
    solver: SystemSolver,
    tracked: Tracked<State>,
    initial: PiecewiseConstantFn,
    params: FtParams,
}

impl std::fmt::Debug for SystemTrajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SystemTrajectory")
            .field("model", &self.solver.rs.model().id())
            .field("t_final", &self.tracked.t_final)
            .field("interactions", &self.tracked.interactions)
            .finish()
    }
}

fn states_of(model: &dyn SystemModel, f: &PiecewiseConstantFn) -> Result<(State, Vec<(f64, State)>)> {
    if f.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: f.dim() });
    }
    let far_left = State::from_column_slice(f.left_end());
    model.check(&far_left)?;
    let mut init = Vec::with_capacity(f.jump_count());
    for (i, &x) in f.breakpoints().iter().enumerate() {
        let s = State::from_column_slice(f.value(i + 1));
        model.check(&s)?;
        init.push((x, s));
    }
    Ok((far_left, init))
}

/// Front tracking solution of the system with initial data `init` on `[0, t_final]`.
pub fn ft_evolve(model: Arc<dyn SystemModel>, init: &PiecewiseConstantFn, t_final: f64, params: &FtParams) -> Result<SystemTrajectory> {
    params.validate()?;
    let (far_left, jumps) = states_of(model.as_ref(), init)?;
    let tv0 = init.total_variation();
    if tv0 > params.delta0 {
        return Err(Error::InitialTvTooLarge { tv: tv0, delta0: params.delta0 });
    }
    let solver = SystemSolver {
        rs: RiemannSolver::new(model).with_delta(params.riemann_delta),
        delta_r: params.delta_r,
        wave_floor: params.wave_floor,
    };
    // allow a sliver above C₀ TV(0) for round-off on tiny data
    let limits = TrackerLimits { front_cap: params.front_cap, tv_bound: Some(params.tv_factor * tv0 + 1e-12) };
    let tracked = tracking::track(&solver, &jumps, far_left, t_final, limits)?;
    Ok(SystemTrajectory { solver, tracked, initial: init.clone(), params: *params })
}

impl SystemTrajectory {
    pub fn t_final(&self) -> f64 {
        self.tracked.t_final
    }

    pub fn initial(&self) -> &PiecewiseConstantFn {
        &self.initial
    }

    pub fn params(&self) -> &FtParams {
        &self.params
    }

    pub fn model(&self) -> &dyn SystemModel {
        self.solver.rs.model()
    }

    pub fn snapshot(&self, t: f64) -> Result<PiecewiseConstantFn> {
        self.tracked.snapshot(&self.solver, t)
    }

    pub fn fronts_at(&self, t: f64) -> Result<Vec<SystemFront>> {
        self.tracked.check_time(t)?;
        let mut left = self.tracked.far_left.clone();
        let mut out = Vec::new();
        for f in self.tracked.alive_fronts(t) {
            out.push(SystemFront {
                position: f.position(t),
                speed: f.speed,
                family: f.family,
                kind: f.kind,
                left: left.as_slice().to_vec(),
                right: f.right.as_slice().to_vec(),
                strength: f.strength,
            });
            left = f.right.clone();
        }
        Ok(out)
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.tracked.events
    }

    pub fn event_times(&self) -> Vec<f64> {
        self.tracked.events.iter().map(|e| e.t).collect()
    }

    pub fn diagnostics(&self) -> &[DiagnosticSample] {
        &self.tracked.diagnostics
    }

    pub fn interaction_count(&self) -> usize {
        self.tracked.interactions
    }

    pub fn max_front_count(&self) -> usize {
        self.tracked.max_front_count
    }

    pub fn total_fronts(&self) -> usize {
        self.tracked.total_fronts()
    }

    /// Bound on `|∫(U(t) - U(0))|` from the Rankine–Hugoniot defects of
    /// rarefaction fronts.
    pub fn conservation_bound(&self) -> f64 {
        self.tracked.conservation_bound
    }

    pub fn events_csv(&self) -> String {
        tracking::events_csv(&self.tracked.events)
    }

    pub fn diagnostics_csv(&self) -> String {
        tracking::diagnostics_csv(&self.tracked.diagnostics)
    }
}

/// `S_h w` for a short time `h` during which no fronts of `w` interact.
pub fn apply_semigroup(model: Arc<dyn SystemModel>, w: &PiecewiseConstantFn, h: f64, params: &FtParams) -> Result<PiecewiseConstantFn> {
    let traj = ft_evolve(model, w, h, params)?;
    if let Some(first) = traj.events().first() {
        return Err(Error::InteractionWithinH { h, t: first.t });
    }
    traj.snapshot(h)
}

/// `(‖S_t ū − S_t v̄‖_{L¹}, ‖ū − v̄‖_{L¹})`.
pub fn l1_stability_probe(model: Arc<dyn SystemModel>, u_bar: &PiecewiseConstantFn, v_bar: &PiecewiseConstantFn, t: f64, params: &FtParams) -> Result<(f64, f64)> {
    let rhs = u_bar.l1_distance(v_bar, None)?;
    let a = ft_evolve(model.clone(), u_bar, t, params)?.snapshot(t)?;
    let b = ft_evolve(model, v_bar, t, params)?.snapshot(t)?;
    Ok((a.l1_distance(&b, None)?, rhs))
}
