//! Front tracking for scalar conservation laws `u_t + f(u)_x = 0` with a convex
//! flux replaced by its piecewise-affine interpolant on the grid `2^-ν ℤ`.
//!
//! States are stored as integer grid indices, so every value at every time is
//! exactly on the grid. A decreasing jump is a single shock with the secant
//! speed; an increasing jump splits into one front per grid cell.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::piecewise::{grid_scale, PiecewiseConstantFn};
use crate::tracking::{self, DiagnosticSample, Emitted, EventRecord, FrontKind, Incoming, TrackerLimits, Tracked, WaveSolver};

pub const DEFAULT_FRONT_CAP: usize = 200_000;

/// Piecewise-affine interpolant of a convex flux on the nodes `2^-ν j`.
#[derive(Clone)]
pub struct AffineFlux {
    nu: u32,
    j_min: i64,
    node_values: Arc<Vec<f64>>,
}

impl std::fmt::Debug for AffineFlux {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AffineFlux").field("nu", &self.nu).field("range", &self.range()).finish()
    }
}

impl AffineFlux {
    /// Samples `flux` on every grid node of `[lo, hi]`. Both endpoints must be
    /// grid points.
    pub fn new(flux: impl Fn(f64) -> f64, nu: u32, lo: f64, hi: f64) -> Result<Self> {
        let scale = grid_scale(nu);
        let (jl, jh) = (lo * scale, hi * scale);
        if !(jl.fract() == 0.0 && jh.fract() == 0.0 && jl <= jh && jh - jl < 1e8) {
            return Err(Error::RangeNotOnGrid { lo, hi, nu });
        }
        let (j_min, j_max) = (jl as i64, jh as i64);
        let node_values: Vec<f64> = (j_min..=j_max).map(|j| flux(j as f64 / scale)).collect();
        if node_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ValueOffGrid(lo));
        }
        let out = Self { nu, j_min, node_values: Arc::new(node_values) };
        for j in j_min + 1..j_max {
            if out.cell_slope(j) < out.cell_slope(j - 1) {
                return Err(Error::Config(format!("flux is not convex on the grid near u = {}", j as f64 / scale)));
            }
        }
        Ok(out)
    }

    /// `f(u) = u²/2`.
    pub fn burgers(nu: u32, lo: f64, hi: f64) -> Result<Self> {
        Self::new(|u| 0.5 * u * u, nu, lo, hi)
    }

    /// Burgers flux covering `[-bound - 2^-ν, bound + 2^-ν]` rounded out to the grid.
    pub fn burgers_covering(nu: u32, bound: f64) -> Result<Self> {
        let h = 1.0 / grid_scale(nu);
        let b = ((bound / h).ceil() + 1.0) * h;
        Self::burgers(nu, -b, b)
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn cell(&self) -> f64 {
        1.0 / grid_scale(self.nu)
    }

    pub fn range(&self) -> (f64, f64) {
        let h = self.cell();
        (self.j_min as f64 * h, (self.j_min + self.node_values.len() as i64 - 1) as f64 * h)
    }

    pub fn index_range(&self) -> (i64, i64) {
        (self.j_min, self.j_min + self.node_values.len() as i64 - 1)
    }

    fn node(&self, j: i64) -> Result<f64> {
        let k = j - self.j_min;
        if k < 0 || k as usize >= self.node_values.len() {
            return Err(Error::ValueOffGrid(j as f64 * self.cell()));
        }
        Ok(self.node_values[k as usize])
    }

    /// Slope of the cell `[2^-ν j, 2^-ν (j+1)]`.
    pub fn cell_slope(&self, j: i64) -> f64 {
        let k = (j - self.j_min) as usize;
        (self.node_values[k + 1] - self.node_values[k]) / self.cell()
    }

    /// Secant slope between two grid indices.
    pub fn secant(&self, a: i64, b: i64) -> Result<f64> {
        if a == b {
            return Ok(self.cell_slope(a.min(self.index_range().1 - 1)));
        }
        Ok((self.node(a)? - self.node(b)?) / ((a - b) as f64 * self.cell()))
    }

    /// Evaluates the interpolant at any point of the range.
    pub fn eval(&self, u: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&u) {
            return Err(Error::ValueOffGrid(u));
        }
        let s = u / self.cell();
        let j = (s.floor() as i64).min(self.index_range().1 - 1).max(self.j_min);
        let frac = s - j as f64;
        if frac == 0.0 {
            return self.node(j);
        }
        Ok(self.node(j)? + frac * (self.node(j + 1)? - self.node(j)?))
    }

    /// Grid index of a value, or an error if the value is off the grid.
    pub fn index_of(&self, u: f64) -> Result<i64> {
        let s = u * grid_scale(self.nu);
        if s.fract() != 0.0 {
            return Err(Error::ValueOffGrid(u));
        }
        let j = s as i64;
        self.node(j)?;
        Ok(j)
    }

    /// Largest `|secant slope|` over the range of grid indices `[a, b]`.
    pub fn max_abs_slope(&self, a: i64, b: i64) -> f64 {
        let (lo, hi) = self.index_range();
        let (a, b) = (a.max(lo), b.min(hi));
        if a >= b {
            return self.cell_slope(a.min(hi - 1).max(lo)).abs();
        }
        // convexity: extreme slopes sit at the two end cells
        self.cell_slope(a).abs().max(self.cell_slope(b - 1).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarFront {
    pub position: f64,
    pub speed: f64,
    pub left_value: f64,
    pub right_value: f64,
    pub kind: FrontKind,
}

/// Entropy solution of the Riemann problem for the piecewise-affine flux.
pub fn scalar_riemann(u_minus: f64, u_plus: f64, flux: &AffineFlux) -> Result<Vec<ScalarFront>> {
    let a = flux.index_of(u_minus)?;
    let b = flux.index_of(u_plus)?;
    let h = flux.cell();
    Ok(riemann_indices(flux, a, b)?
        .into_iter()
        .scan(a, |left, e| {
            let f = ScalarFront { position: 0.0, speed: e.speed, left_value: *left as f64 * h, right_value: e.right as f64 * h, kind: e.kind };
            *left = e.right;
            Some(f)
        })
        .collect())
}

fn riemann_indices(flux: &AffineFlux, a: i64, b: i64) -> Result<Vec<Emitted<i64>>> {
    let h = flux.cell();
    if a == b {
        return Ok(Vec::new());
    }
    if a > b {
        let speed = flux.secant(a, b)?;
        return Ok(vec![Emitted { speed, right: b, family: 0, kind: FrontKind::Shock, strength: (b - a) as f64 * h }]);
    }
    flux.node(a)?;
    flux.node(b)?;
    Ok((a..b)
        .map(|j| Emitted { speed: flux.cell_slope(j), right: j + 1, family: 0, kind: FrontKind::Rarefaction, strength: h })
        .collect())
}

struct ScalarSolver<'a> {
    flux: &'a AffineFlux,
}

impl WaveSolver for ScalarSolver<'_> {
    type State = i64;

    fn solve(&self, left: &i64, right: &i64, _incoming: &[Incoming]) -> Result<Vec<Emitted<i64>>> {
        riemann_indices(self.flux, *left, *right)
    }

    fn jump(&self, a: &i64, b: &i64) -> f64 {
        (a - b).abs() as f64 * self.flux.cell()
    }

    fn to_values(&self, s: &i64) -> Vec<f64> {
        vec![*s as f64 * self.flux.cell()]
    }
}

/// Piecewise-constant scalar solution on `[0, t_final]`.
#[derive(Debug, Clone)]
pub struct ScalarTrajectory {
    flux: AffineFlux,
    tracked: Tracked<i64>,
    init: PiecewiseConstantFn,
    /// Total variation in grid units (exact integer arithmetic).
    tv_units: Vec<(f64, u64)>,
}

/// Evolves grid-valued initial data until `t_final`.
pub fn scalar_evolve(init: &PiecewiseConstantFn, flux: &AffineFlux, t_final: f64) -> Result<ScalarTrajectory> {
    scalar_evolve_capped(init, flux, t_final, DEFAULT_FRONT_CAP)
}

pub fn scalar_evolve_capped(init: &PiecewiseConstantFn, flux: &AffineFlux, t_final: f64, front_cap: usize) -> Result<ScalarTrajectory> {
    if init.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: init.dim() });
    }
    let far_left = flux.index_of(init.left_end()[0])?;
    let jumps: Vec<(f64, i64)> = init
        .breakpoints()
        .iter()
        .enumerate()
        .map(|(i, &x)| flux.index_of(init.value(i + 1)[0]).map(|j| (x, j)))
        .collect::<Result<_>>()?;
    let solver = ScalarSolver { flux };
    let tracked = tracking::track(&solver, &jumps, far_left, t_final, TrackerLimits { front_cap, tv_bound: None })?;
    let traj = ScalarTrajectory { flux: flux.clone(), tracked, init: init.clone(), tv_units: Vec::new() };
    let tv_units = traj.exact_tv_history();
    Ok(ScalarTrajectory { tv_units, ..traj })
}

impl ScalarTrajectory {
    pub fn flux(&self) -> &AffineFlux {
        &self.flux
    }

    pub fn t_final(&self) -> f64 {
        self.tracked.t_final
    }

    pub fn initial(&self) -> &PiecewiseConstantFn {
        &self.init
    }

    pub fn snapshot(&self, t: f64) -> Result<PiecewiseConstantFn> {
        self.tracked.snapshot(&ScalarSolver { flux: &self.flux }, t)
    }

    /// Live fronts at time `t`, left to right.
    pub fn fronts_at(&self, t: f64) -> Result<Vec<ScalarFront>> {
        self.tracked.check_time(t)?;
        let h = self.flux.cell();
        let mut left = self.tracked.far_left;
        Ok(self
            .tracked
            .alive_fronts(t)
            .into_iter()
            .map(|f| {
                let out = ScalarFront { position: f.position(t), speed: f.speed, left_value: left as f64 * h, right_value: f.right as f64 * h, kind: f.kind };
                left = f.right;
                out
            })
            .collect())
    }

    /// Interaction times in order.
    pub fn event_times(&self) -> Vec<f64> {
        self.tracked.events.iter().map(|e| e.t).collect()
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.tracked.events
    }

    pub fn diagnostics(&self) -> &[DiagnosticSample] {
        &self.tracked.diagnostics
    }

    pub fn interaction_count(&self) -> usize {
        self.tracked.interactions
    }

    /// Total variation after each event, in units of `2^-ν`.
    pub fn tv_history_units(&self) -> &[(f64, u64)] {
        &self.tv_units
    }

    fn exact_tv_history(&self) -> Vec<(f64, u64)> {
        let mut times = vec![0.0];
        times.extend(self.event_times());
        times
            .into_iter()
            .map(|t| {
                let mut left = self.tracked.far_left;
                let tv = self
                    .tracked
                    .alive_fronts(t)
                    .into_iter()
                    .map(|f| {
                        let d = (f.right - left).unsigned_abs();
                        left = f.right;
                        d
                    })
                    .sum();
                (t, tv)
            })
            .collect()
    }

    /// Largest `|f'|` over the values taken by the initial data.
    pub fn lipschitz_constant(&self) -> f64 {
        let s = grid_scale(self.flux.nu);
        let (lo, hi) = self.init.values_flat().iter().fold((i64::MAX, i64::MIN), |(lo, hi), v| {
            let j = (v * s) as i64;
            (lo.min(j), hi.max(j))
        });
        self.flux.max_abs_slope(lo, hi)
    }

    /// `‖u(t) - u(t')‖_{L¹}` between two snapshots.
    pub fn lipschitz_time_bound(&self, t: f64, t2: f64) -> Result<f64> {
        let a = self.snapshot(t)?;
        let b = self.snapshot(t2)?;
        a.l1_distance(&b, None)
    }
}
