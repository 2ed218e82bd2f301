//! Experiments comparing front-tracking solutions with the geometric optics
//! expansion, plus the reference solver and fitting helpers they use.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::piecewise::PiecewiseConstantFn;
use crate::scalar_ft::{scalar_evolve, AffineFlux};

mod godunov;
mod probes;
mod sweep;

pub use godunov::godunov_reference;
pub use probes::{default_lambda_hat, local_estimate_probe, strength_expansion_probe, ProbeKind, ProbeRecord, StrengthProbe, StrengthSetup};
pub use sweep::{convergence_sweep, coupled_nu, time_grid, ConvergenceRecord, EpsRun, Horizon, SplitRule, SweepSettings, Variant};

/// Least-squares slope of `ln value` against `ln x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    if let Some(&(x, v)) = points.iter().find(|(x, v)| !(*v > 0.0 && *x > 0.0)) {
        return Err(Error::NonPositiveValue(if x > 0.0 { v } else { x }));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0.ln()).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, v) in points {
        let dx = x.ln() - mx;
        sxy += dx * (v.ln() - my);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        return Err(Error::TooFewPoints(1));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct TvDecayRecord {
    pub nu: u32,
    pub times: Vec<f64>,
    pub tv: Vec<f64>,
    /// First interaction time of the run.
    pub first_interaction: Option<f64>,
    /// Slope of `ln TV` against `ln t` over the times after the first interaction.
    pub exponent: Option<f64>,
}

/// Total variation of the Burgers front-tracking solution at each time.
pub fn tv_decay_probe(init: &PiecewiseConstantFn, nu: u32, times: &[f64]) -> Result<TvDecayRecord> {
    if init.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: init.dim() });
    }
    if init.left_end() != init.right_end() {
        return Err(Error::Config("decay probe needs data that is constant outside a bounded set".into()));
    }
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) || times[0] <= 0.0 {
        return Err(Error::Config("times must be positive and increasing".into()));
    }
    let data = init.quantize_to_grid(nu)?;
    let bound = data.sup_norm();
    let flux = AffineFlux::burgers_covering(nu, bound)?;
    let traj = scalar_evolve(&data, &flux, *times.last().expect("nonempty"))?;
    let tv: Vec<f64> = times.iter().map(|&t| traj.snapshot(t).map(|s| s.total_variation())).collect::<Result<_>>()?;
    let first = traj.event_times().first().copied();
    let pts: Vec<(f64, f64)> = times.iter().copied().zip(tv.iter().copied()).filter(|(t, _)| first.is_some_and(|f| *t > f)).collect();
    let exponent = fit_slope(&pts).ok();
    Ok(TvDecayRecord { nu, times: times.to_vec(), tv, first_interaction: first, exponent })
}

fn g(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per sampled time: `variant,model,eps,nu,t,l1_error,err_over_eps2,sup_err,slope`.
pub fn sweep_csv(rec: &ConvergenceRecord) -> String {
    let mut out = String::from("variant,model,eps,nu,t,l1_error,err_over_eps2,sup_err,slope\n");
    let slope = rec.slope.map(g).unwrap_or_default();
    for run in &rec.runs {
        for (t, e) in run.times.iter().zip(&run.errors) {
            let _ = writeln!(out, "{},{},{},{},{},{},{},{},{}", rec.variant.as_str(), rec.model, g(run.eps), run.nu, g(*t), g(*e), g(e / (run.eps * run.eps)), g(run.sup_err), slope);
        }
    }
    out
}

/// `kind,eps,h,sigma,measured,ratio`.
pub fn probes_csv(records: &[ProbeRecord]) -> String {
    let mut out = String::from("kind,eps,h,sigma,measured,ratio\n");
    for r in records {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.kind.as_str(), g(r.eps), g(r.h), g(r.sigma), g(r.measured), g(r.ratio));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes_of_power_laws() {
        let eps = [0.2, 0.1, 0.05, 0.025];
        let sq: Vec<(f64, f64)> = eps.iter().map(|&e| (e, 3.0 * e * e)).collect();
        assert!((fit_slope(&sq).unwrap() - 2.0).abs() < 1e-12);
        let lin: Vec<(f64, f64)> = eps.iter().map(|&e| (e, 0.5 * e)).collect();
        assert!((fit_slope(&lin).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(fit_slope(&[(0.1, 1.0), (0.2, 0.0)]), Err(Error::NonPositiveValue(_))));
        assert!(matches!(fit_slope(&[(0.1, 1.0)]), Err(Error::TooFewPoints(1))));
    }

    #[test]
    fn alternating_noise_stays_near_two() {
        let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025].iter().enumerate().map(|(i, &e)| (e, e * e * if i % 2 == 0 { 1.1 } else { 0.9 })).collect();
        // oracle: the closed-form least-squares slope of this chain
        let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let mx = lx.iter().sum::<f64>() / 4.0;
        let my = ly.iter().sum::<f64>() / 4.0;
        let want = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        let s = fit_slope(&pts).unwrap();
        assert!((s - want).abs() < 1e-12);
        assert!((s - 2.0).abs() <= 0.15, "{s}");
    }

    #[test]
    fn grid_contains_multiples_and_horizon() {
        let ts = time_grid(2.0, &[0.5, 1.0, 2.0, 3.0, 5.0], std::f64::consts::SQRT_2, 20.0);
        assert_eq!(&ts[..5], &[1.0, 2.0, 4.0, 6.0, 10.0]);
        assert_eq!(*ts.last().unwrap(), 20.0);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn nu_coupling() {
        assert_eq!(coupled_nu(0.1, 0.4), 8); // 2^-8 = 3.90625e-3 ≤ 4e-3 < 2^-7
        assert_eq!(coupled_nu(0.1, 0.0), 10);
    }
}
