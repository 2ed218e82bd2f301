use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit_slope;
use crate::error::{Error, Result};
use crate::geo_optics::{assemble_auxiliary, assemble_expansion, build_correction_compact, build_correction_noncompact, evolve_profiles, project_initial, separation_time};
use crate::models::SystemModel;
use crate::piecewise::PiecewiseConstantFn;
use crate::system_ft::{ft_evolve, FtParams};

/// What the solution is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// The first order expansion `U_w`.
    Plain,
    /// The expansion with quadratic terms and compact corrections after `T₀`.
    Auxiliary,
    /// The expansion with the noncompact correction `E(t, ·)`.
    Noncompact,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Auxiliary => "auxiliary",
            Variant::Noncompact => "noncompact",
        }
    }
}

/// Last sampled time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum Horizon {
    /// `c T₀`.
    SeparationMultiple(f64),
    /// `c T₀ / ε`.
    OverEps(f64),
}

/// How the rarefaction splitting threshold follows ε and ν.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "rule", content = "value")]
pub enum SplitRule {
    /// `δ_r = ε 2^-ν`.
    Coupled,
    /// `δ_r = c ε`.
    Relative(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSettings {
    pub variant: Variant,
    /// Fixed ν; when absent the smallest ν with `2^-ν ≤ ε² TV(U¹)` is used.
    pub nu: Option<u32>,
    /// Time unit when `T₀` cannot be computed or is zero.
    pub t0: Option<f64>,
    /// Sampling times as multiples of `T₀`.
    pub t_multiples: Vec<f64>,
    /// Ratio of the geometric tail beyond the last multiple.
    pub tail_ratio: f64,
    /// Defaults to `10 T₀` for plain and auxiliary, `T₀/ε` for noncompact.
    pub horizon: Option<Horizon>,
    pub split: SplitRule,
    pub ft: FtParams,
    /// Wall-clock budget in seconds for the whole sweep.
    pub budget_secs: Option<f64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            variant: Variant::Plain,
            nu: None,
            t0: None,
            t_multiples: vec![0.5, 1.0, 2.0, 3.0, 5.0],
            tail_ratio: std::f64::consts::SQRT_2,
            horizon: None,
            split: SplitRule::Coupled,
            ft: FtParams::default(),
            budget_secs: None,
        }
    }
}

/// One ε of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct EpsRun {
    pub eps: f64,
    pub nu: u32,
    pub t0: f64,
    pub delta_r: f64,
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    pub sup_err: f64,
    pub interactions: usize,
    pub max_fronts: usize,
    pub runtime_secs: f64,
}

impl EpsRun {
    /// Largest error at `t ≥ 3T₀` over the error at `T₀`.
    pub fn uniformity(&self) -> Option<f64> {
        let at = self.times.iter().position(|&t| t == self.t0)?;
        let base = self.errors[at];
        let late = self.times.iter().zip(&self.errors).filter(|(t, _)| **t >= 3.0 * self.t0).map(|(_, e)| *e).fold(f64::NAN, f64::max);
        (base > 0.0 && late.is_finite()).then(|| late / base)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRecord {
    pub model: String,
    pub variant: Variant,
    pub runs: Vec<EpsRun>,
    /// Least-squares slope of `sup_err` against ε.
    pub slope: Option<f64>,
    /// Slope over each consecutive halving.
    pub halving_slopes: Vec<f64>,
}

impl ConvergenceRecord {
    pub fn eps(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.eps).collect()
    }

    pub fn sup_errors(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.sup_err).collect()
    }

    /// Whether `E(ε)` is nonincreasing along the chain.
    pub fn monotone(&self) -> bool {
        self.runs.windows(2).all(|w| w[1].sup_err <= w[0].sup_err)
    }
}

/// Smallest ν with `2^-ν ≤ ε² tv`, or 10 for zero data.
pub fn coupled_nu(eps: f64, tv: f64) -> u32 {
    let target = eps * eps * tv;
    if target <= 0.0 {
        return 10;
    }
    (-target.log2()).ceil().max(0.0) as u32
}

/// Sampling times: `multiples · T₀` below the horizon, then a geometric tail
/// from the last multiple up to and including the horizon.
pub fn time_grid(t0: f64, multiples: &[f64], ratio: f64, horizon: f64) -> Vec<f64> {
    let mut ts: Vec<f64> = multiples.iter().map(|m| m * t0).filter(|&t| t > 0.0 && t <= horizon).collect();
    let mut t = ts.last().copied().unwrap_or(horizon);
    if ratio > 1.0 {
        while t * ratio < horizon {
            t *= ratio;
            ts.push(t);
        }
    }
    ts.push(horizon);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

fn run_one(model: Arc<dyn SystemModel>, u1: &PiecewiseConstantFn, eps: f64, s: &SweepSettings) -> Result<EpsRun> {
    let start = Instant::now();
    let nu = s.nu.unwrap_or_else(|| coupled_nu(eps, u1.total_variation()));
    let profiles = project_initial(model.clone(), u1, nu, eps)?;
    let t0 = match (s.t0, separation_time(&profiles)) {
        (Some(t), _) => t,
        (None, Ok(t)) if t > 0.0 => t,
        (None, Ok(_)) => 1.0,
        (None, Err(e)) => return Err(e),
    };
    let rule = s.horizon.unwrap_or(match s.variant {
        Variant::Noncompact => Horizon::OverEps(1.0),
        _ => Horizon::SeparationMultiple(10.0),
    });
    let horizon = match rule {
        Horizon::SeparationMultiple(c) => c * t0,
        Horizon::OverEps(c) => c * t0 / eps,
    };
    let times = time_grid(t0, &s.t_multiples, s.tail_ratio, horizon);
    let profiles = evolve_profiles(&profiles, eps * horizon)?;
    let delta_r = match s.split {
        SplitRule::Coupled => FtParams::coupled(eps, nu).delta_r,
        SplitRule::Relative(c) => c * eps,
        SplitRule::Fixed(d) => d,
    };
    let params = FtParams { delta_r, ..s.ft };
    let init = PiecewiseConstantFn::constant(profiles.u0.as_slice()).add(&u1.scale(eps))?;
    let traj = ft_evolve(model, &init, horizon, &params)?;
    let compact = match s.variant {
        Variant::Auxiliary => build_correction_compact(&profiles, t0)?,
        _ => Vec::new(),
    };
    let mut errors = Vec::with_capacity(times.len());
    for &t in &times {
        let approx = match s.variant {
            Variant::Plain => assemble_expansion(&profiles, t)?,
            Variant::Auxiliary if t >= t0 => assemble_auxiliary(&profiles, t, &compact)?,
            Variant::Auxiliary => assemble_auxiliary(&profiles, t, &[])?,
            Variant::Noncompact => assemble_auxiliary(&profiles, t, &[build_correction_noncompact(&profiles, t)?])?,
        };
        let snap = traj.snapshot(t)?;
        // the noncompact correction keeps a constant tail while families overlap,
        // so that variant is measured on the solution's own extent
        let window = match (s.variant, snap.breakpoints().first(), snap.breakpoints().last()) {
            (Variant::Noncompact, Some(&a), Some(&b)) => Some((a - 1.0, b + 1.0)),
            _ => None,
        };
        errors.push(snap.l1_distance(&approx, window)?);
    }
    let sup_err = errors.iter().copied().fold(0.0, f64::max);
    Ok(EpsRun {
        eps,
        nu,
        t0,
        delta_r,
        times,
        errors,
        sup_err,
        interactions: traj.interaction_count(),
        max_fronts: traj.max_front_count(),
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Measures `sup_t ‖U^ε(t) − approximation(t)‖_L¹` for every ε and fits how it
/// scales. Runs for different ε are independent and execute in parallel.
pub fn convergence_sweep(model: Arc<dyn SystemModel>, u1: &PiecewiseConstantFn, eps_list: &[f64], settings: &SweepSettings) -> Result<ConvergenceRecord> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| w[1] >= w[0]) || eps_list.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::Config(format!("ε list must be strictly decreasing inside (0, 1), got {eps_list:?}")));
    }
    let start = Instant::now();
    let over_budget = || settings.budget_secs.is_some_and(|b| start.elapsed().as_secs_f64() > b);
    let runs: Vec<EpsRun> = eps_list
        .par_iter()
        .map(|&e| {
            if over_budget() {
                return Err(Error::SweepBudgetExceeded(start.elapsed().as_secs_f64()));
            }
            run_one(model.clone(), u1, e, settings)
        })
        .collect::<Result<_>>()?;
    if over_budget() {
        return Err(Error::SweepBudgetExceeded(start.elapsed().as_secs_f64()));
    }
    let pts: Vec<(f64, f64)> = runs.iter().map(|r| (r.eps, r.sup_err)).collect();
    let slope = if pts.len() >= 2 { fit_slope(&pts).ok() } else { None };
    let halving_slopes = pts.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).collect();
    Ok(ConvergenceRecord { model: model.id().to_string(), variant: settings.variant, runs, slope, halving_slopes })
}
