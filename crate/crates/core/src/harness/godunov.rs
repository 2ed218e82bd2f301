use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::{State, SystemModel};
use crate::piecewise::PiecewiseConstantFn;
use crate::system_riemann::RiemannSolver;

/// First order Godunov scheme on a uniform grid, used as an independent check
/// of front tracking. Interface fluxes are `F` of the exact Riemann fan at
/// `x/t = 0`. The grid covers the data's breakpoints padded by the distance a
/// wave can travel, so the boundary cells never change.
pub fn godunov_reference(model: Arc<dyn SystemModel>, init: &PiecewiseConstantFn, t_final: f64, dx: f64, cfl: f64) -> Result<PiecewiseConstantFn> {
    let n = model.dim();
    if init.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: init.dim() });
    }
    if !(dx > 0.0 && cfl > 0.0 && cfl < 0.5 && t_final >= 0.0) {
        return Err(Error::Config(format!("need dx > 0, 0 < cfl < 0.5, t >= 0 (dx = {dx}, cfl = {cfl}, t = {t_final})")));
    }
    let (Some(&a), Some(&b)) = (init.breakpoints().first(), init.breakpoints().last()) else {
        return Ok(init.clone());
    };
    let mut lam: f64 = 1e-12;
    for i in 0..init.interval_count() {
        for l in model.eigenvalues(&State::from_row_slice(init.value(i)))? {
            lam = lam.max(l.abs());
        }
    }
    let pad = lam * t_final * 1.5 + 4.0 * dx;
    let lo = ((a - pad) / dx).floor() * dx;
    let cells = (((b + pad) - lo) / dx).ceil() as usize;
    let mut u: Vec<State> = (0..cells)
        .map(|i| {
            let x0 = lo + i as f64 * dx;
            State::from_vec(init.integral(x0, x0 + dx)) / dx
        })
        .collect();
    for ui in &u {
        model.check(ui)?;
    }
    let rs = RiemannSolver::new(model.clone()).with_delta(1.0);
    let mut flux_cell: Vec<State> = u.iter().map(|s| model.flux(s)).collect::<Result<_>>()?;
    let mut iface = vec![State::zeros(n); cells + 1];
    let mut t = 0.0;
    while t < t_final {
        let mut smax: f64 = 1e-12;
        for ui in &u {
            for l in model.eigenvalues(ui)? {
                smax = smax.max(l.abs());
            }
        }
        let dt = (cfl * dx / smax).min(t_final - t);
        iface[0] = flux_cell[0].clone();
        iface[cells] = flux_cell[cells - 1].clone();
        for i in 1..cells {
            iface[i] = if u[i - 1] == u[i] {
                flux_cell[i].clone()
            } else {
                let fan = rs.riemann_solve(&u[i - 1], &u[i])?;
                model.flux(&rs.sample_fan(&fan, 0.0)?)?
            };
        }
        let r = dt / dx;
        for i in 0..cells {
            let du = (&iface[i + 1] - &iface[i]) * r;
            if du.iter().any(|v| *v != 0.0) {
                u[i] -= du;
                model.check(&u[i])?;
                flux_cell[i] = model.flux(&u[i])?;
            }
        }
        t += dt;
    }
    let breakpoints: Vec<f64> = (0..=cells).map(|i| lo + i as f64 * dx).collect();
    let mut rows = Vec::with_capacity(cells + 2);
    rows.push(init.left_end().to_vec());
    rows.extend(u.iter().map(|s| s.as_slice().to_vec()));
    rows.push(init.right_end().to_vec());
    PiecewiseConstantFn::from_rows(n, breakpoints, rows)
}
