//! Exact small-amplitude Riemann solver built from Lax wave curves.
//!
//! Wave curves are parameterized so that `λ_j` changes by exactly `β` along a
//! genuinely nonlinear curve: the rarefaction branch integrates `U' = r_j(U)`
//! with `∇λ_j·r_j = 1`, and the shock branch solves the Rankine–Hugoniot
//! relations with the constraint `λ_j(U) - λ_j(U⁻) = β`. Both branches share
//! their first two derivatives at `β = 0`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::models::{eigenvalue_gradient, FieldKind, State, SystemModel};
use crate::tracking::FrontKind;

pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_CURVE_RADIUS: f64 = 0.5;
pub const NEWTON_TOL: f64 = 1e-11;
const NEWTON_MAX_ITER: usize = 50;
const RK_STEPS: usize = 32;
/// Below this strength the shock branch is replaced by the integral curve,
/// which agrees with it to `O(β³)`.
const TINY_SHOCK: f64 = 1e-5;
/// Waves weaker than this are left out of the fan.
pub const FAN_FLOOR: f64 = 1e-12;

fn ser_state<S: Serializer>(v: &State, s: S) -> std::result::Result<S::Ok, S::Error> {
    v.as_slice().serialize(s)
}

fn ser_states<S: Serializer>(v: &[State], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|x| x.as_slice()).collect::<Vec<_>>().serialize(s)
}

/// One elementary wave of a Riemann fan: a single GNL family or a whole
/// multiplicity group.
#[derive(Debug, Clone, Serialize)]
pub struct Wave {
    /// Lowest family index of the wave's group.
    pub family: usize,
    pub group: usize,
    pub kind: FrontKind,
    /// Strengths of every family in the group, in ascending family order.
    pub strengths: Vec<f64>,
    #[serde(serialize_with = "ser_state")]
    pub left: State,
    #[serde(serialize_with = "ser_state")]
    pub right: State,
    /// Shock or contact speed; for rarefactions the left edge `λ_j(left)`.
    pub speed_left: f64,
    /// Equal to `speed_left` except for rarefactions, where it is `λ_j(right)`.
    pub speed_right: f64,
}

impl Wave {
    pub fn strength(&self) -> f64 {
        if self.strengths.len() == 1 {
            self.strengths[0]
        } else {
            self.strengths.iter().map(|b| b * b).sum::<f64>().sqrt()
        }
    }
}

/// Self-similar solution of a Riemann problem.
#[derive(Debug, Clone, Serialize)]
pub struct WaveFan {
    /// Constant states separated by the groups' waves: `states[0]` is the left
    /// input, `states[g]` the state right of group `g - 1`.
    #[serde(serialize_with = "ser_states")]
    pub states: Vec<State>,
    pub betas: Vec<f64>,
    /// Nonzero waves in increasing speed order.
    pub waves: Vec<Wave>,
    pub residual: f64,
}

impl WaveFan {
    pub fn left(&self) -> &State {
        &self.states[0]
    }

    pub fn right(&self) -> &State {
        self.states.last().expect("fan has states")
    }

    pub fn is_trivial(&self) -> bool {
        self.waves.is_empty()
    }
}

/// Riemann solver for one model with a configured small-amplitude radius.
#[derive(Debug, Clone)]
pub struct RiemannSolver {
    model: Arc<dyn SystemModel>,
    /// Largest admissible `|U⁺ - U⁻|₁`.
    pub delta: f64,
    /// Largest admissible `|β|` on a single wave curve.
    pub curve_radius: f64,
}

impl RiemannSolver {
    pub fn new(model: Arc<dyn SystemModel>) -> Self {
        Self { model, delta: DEFAULT_DELTA, curve_radius: DEFAULT_CURVE_RADIUS }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self.curve_radius = self.curve_radius.max(10.0 * delta);
        self
    }

    pub fn model(&self) -> &dyn SystemModel {
        self.model.as_ref()
    }

    pub fn model_arc(&self) -> Arc<dyn SystemModel> {
        self.model.clone()
    }

    /// RK4 integration of `U' = r_j(U)` over a parameter length `beta`.
    fn integral_curve(&self, u: &State, j: usize, beta: f64) -> Result<State> {
        let m = self.model();
        let h = beta / RK_STEPS as f64;
        let mut x = u.clone();
        for _ in 0..RK_STEPS {
            let k1 = m.right_eigenvector(&x, j)?;
            let k2 = m.right_eigenvector(&(&x + &k1 * (0.5 * h)), j)?;
            let k3 = m.right_eigenvector(&(&x + &k2 * (0.5 * h)), j)?;
            let k4 = m.right_eigenvector(&(&x + &k3 * h), j)?;
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        m.check(&x)?;
        Ok(x)
    }

    /// Point of the `j`-shock curve with `λ_j(U) - λ_j(U⁻) = β < 0`, and the
    /// shock speed.
    fn hugoniot_point(&self, u: &State, j: usize, beta: f64) -> Result<(State, f64)> {
        let m = self.model();
        let n = m.dim();
        let f0 = m.flux(u)?;
        let lam0 = m.eigenvalue(u, j)?;
        let mut w = m.right_eigenvector(u, j)?;
        let mut s = lam0 + 0.5 * beta;
        let residual = |w: &State, s: f64| -> Result<(DVector<f64>, State)> {
            let x = u + w * beta;
            let mut g = DVector::zeros(n + 1);
            let df = (m.flux(&x)? - &f0) / beta - w * s;
            g.rows_mut(0, n).copy_from(&df);
            g[n] = (m.eigenvalue(&x, j)? - lam0) / beta - 1.0;
            Ok((g, x))
        };
        // residuals are divided by β; compare them on the unscaled level
        let scale = |g: &DVector<f64>| g.amax() * beta.abs();
        for _ in 0..NEWTON_MAX_ITER {
            let (g, x) = residual(&w, s)?;
            let mut jac = DMatrix::zeros(n + 1, n + 1);
            let a = m.jacobian(&x)?;
            jac.view_mut((0, 0), (n, n)).copy_from(&(a - DMatrix::identity(n, n) * s));
            jac.view_mut((0, n), (n, 1)).copy_from(&(-&w));
            let grad = eigenvalue_gradient(m, &x, j, 1e-6)?;
            jac.view_mut((n, 0), (1, n)).copy_from(&grad.transpose());
            let step = jac
                .lu()
                .solve(&g)
                .ok_or(Error::NewtonDivergence { context: "hugoniot", residual: scale(&g) })?;
            w -= step.rows(0, n);
            s -= step[n];
            if step.amax() <= 1e-13 * (1.0 + w.amax()) {
                break;
            }
        }
        let (g, x) = residual(&w, s)?;
        if scale(&g) <= 1e-13 * (1.0 + f0.amax()) {
            m.check(&x)?;
            return Ok((x, s));
        }
        Err(Error::NewtonDivergence { context: "hugoniot", residual: scale(&g) })
    }

    fn check_radius(&self, beta: f64) -> Result<()> {
        if beta.abs() > self.curve_radius || !beta.is_finite() {
            return Err(Error::CurveRadiusExceeded { beta, radius: self.curve_radius });
        }
        Ok(())
    }

    /// `ψ_j(U; β)`: the state joined to `U` by a `j`-wave of strength `β`.
    pub fn lax_curve_point(&self, u: &State, j: usize, beta: f64) -> Result<State> {
        Ok(self.lax_curve_point_with_speed(u, j, beta)?.0)
    }

    /// As [`Self::lax_curve_point`], also returning the shock speed for
    /// GNL shocks and `λ_j(U)` otherwise.
    pub fn lax_curve_point_with_speed(&self, u: &State, j: usize, beta: f64) -> Result<(State, f64)> {
        let m = self.model();
        m.check(u)?;
        if j >= m.dim() {
            return Err(Error::NoSuchWave(j));
        }
        self.check_radius(beta)?;
        if beta == 0.0 {
            return Ok((u.clone(), m.eigenvalue(u, j)?));
        }
        let gnl = m.field_kinds()[j] == FieldKind::GenuinelyNonlinear;
        if gnl && beta < -TINY_SHOCK {
            return self.hugoniot_point(u, j, beta);
        }
        let x = self.integral_curve(u, j, beta)?;
        let speed = if gnl && beta < 0.0 { m.eigenvalue(u, j)? + 0.5 * beta } else { m.eigenvalue(u, j)? };
        Ok((x, speed))
    }

    /// Composite group map: integrates each member's field in ascending order.
    pub fn group_curve_point(&self, u: &State, group: usize, betas: &[f64]) -> Result<State> {
        let g = self.model().groups()[group].clone();
        if betas.len() != g.len() {
            return Err(Error::DimensionMismatch { expected: g.len(), got: betas.len() });
        }
        if g.len() == 1 {
            return self.lax_curve_point(u, g.start, betas[0]);
        }
        let mut x = u.clone();
        for (j, b) in g.zip(betas) {
            self.check_radius(*b)?;
            if *b != 0.0 {
                x = self.integral_curve(&x, j, *b)?;
            }
        }
        Ok(x)
    }

    /// `Ψ(U; β)`, together with the intermediate group states.
    pub fn psi_states(&self, u: &State, betas: &[f64]) -> Result<Vec<State>> {
        let m = self.model();
        if betas.len() != m.dim() {
            return Err(Error::DimensionMismatch { expected: m.dim(), got: betas.len() });
        }
        let mut states = Vec::with_capacity(m.dim() + 1);
        states.push(u.clone());
        for (gi, g) in m.groups().into_iter().enumerate() {
            let next = self.group_curve_point(states.last().unwrap(), gi, &betas[g])?;
            states.push(next);
        }
        Ok(states)
    }

    pub fn psi(&self, u: &State, betas: &[f64]) -> Result<State> {
        Ok(self.psi_states(u, betas)?.pop().unwrap())
    }

    /// Strength vector `β` with `Ψ(U⁻; β) = U⁺`.
    pub fn strength_decompose(&self, um: &State, up: &State) -> Result<Vec<f64>> {
        let m = self.model();
        m.check(um)?;
        m.check(up)?;
        let jump = (up - um).lp_norm(1);
        if jump > self.delta {
            return Err(Error::OutsideSmallAmplitude { jump, radius: self.delta });
        }
        let n = m.dim();
        if jump == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let l = m.left_eigenvectors(um)?;
        let mut beta = &l * (up - um);
        let res_of = |b: &DVector<f64>| -> Result<State> { Ok(self.psi(um, b.as_slice())? - up) };
        let mut res = res_of(&beta)?;
        // Chord iterations with the exact derivative at β = 0, ∂Ψ/∂β = R(U⁻),
        // continued past the tolerance while they still contract.
        let floor = 1e-15 * (1.0 + up.lp_norm(1));
        let mut prev = res.lp_norm(1);
        let mut iters = 0;
        while prev > floor && iters < NEWTON_MAX_ITER {
            iters += 1;
            let trial = &beta - &l * &res;
            let trial_res = res_of(&trial)?;
            let norm = trial_res.lp_norm(1);
            if !(norm < 0.5 * prev) {
                break;
            }
            beta = trial;
            res = trial_res;
            prev = norm;
        }
        // Newton with a forward-difference Jacobian when the chord stalls.
        while prev > NEWTON_TOL && iters < NEWTON_MAX_ITER {
            iters += 1;
            let mut jac = DMatrix::zeros(n, n);
            for k in 0..n {
                let h = 1e-7 * (1.0 + beta[k].abs());
                let mut b = beta.clone();
                b[k] += h;
                jac.set_column(k, &((res_of(&b)? - &res) / h));
            }
            let step = jac.lu().solve(&res).ok_or(Error::NewtonDivergence { context: "riemann", residual: prev })?;
            let trial = &beta - step;
            let trial_res = res_of(&trial)?;
            if trial_res.lp_norm(1) >= prev {
                break;
            }
            beta = trial;
            res = trial_res;
            prev = res.lp_norm(1);
        }
        if prev > NEWTON_TOL {
            return Err(Error::NewtonDivergence { context: "riemann", residual: prev });
        }
        Ok(beta.as_slice().to_vec())
    }

    /// Builds the fan from a strength vector.
    pub fn fan_from_strengths(&self, um: &State, betas: &[f64], target: Option<&State>) -> Result<WaveFan> {
        let m = self.model();
        let kinds = m.field_kinds();
        let mut states = vec![um.clone()];
        let mut waves = Vec::new();
        for (gi, g) in m.groups().into_iter().enumerate() {
            let left = states.last().unwrap().clone();
            let bs = betas[g.clone()].to_vec();
            if bs.iter().all(|b| b.abs() <= FAN_FLOOR) {
                states.push(left);
                continue;
            }
            let j = g.start;
            let (right, kind, s_l, s_r) = if g.len() == 1 && kinds[j] == FieldKind::GenuinelyNonlinear {
                let (right, s) = self.lax_curve_point_with_speed(&left, j, bs[0])?;
                if bs[0] < 0.0 {
                    (right, FrontKind::Shock, s, s)
                } else {
                    let (l0, l1) = (m.eigenvalue(&left, j)?, m.eigenvalue(&right, j)?);
                    (right, FrontKind::Rarefaction, l0, l1)
                }
            } else {
                let right = self.group_curve_point(&left, gi, &bs)?;
                let s = m.eigenvalue(&left, j)?;
                (right, FrontKind::Contact, s, s)
            };
            waves.push(Wave { family: j, group: gi, kind, strengths: bs, left, right: right.clone(), speed_left: s_l, speed_right: s_r });
            states.push(right);
        }
        let residual = match target {
            Some(t) => (states.last().unwrap() - t).lp_norm(1),
            None => 0.0,
        };
        Ok(WaveFan { states, betas: betas.to_vec(), waves, residual })
    }

    pub fn riemann_solve(&self, um: &State, up: &State) -> Result<WaveFan> {
        let betas = self.strength_decompose(um, up)?;
        self.fan_from_strengths(um, &betas, Some(up))
    }

    /// State inside rarefaction wave `wave` at `ξ = x/t`.
    pub fn rarefaction_sample(&self, fan: &WaveFan, wave: usize, xi: f64) -> Result<State> {
        let w = fan.waves.get(wave).ok_or(Error::NoSuchWave(wave))?;
        if w.kind != FrontKind::Rarefaction {
            return Err(Error::NoSuchWave(wave));
        }
        let slack = 1e-12 * (1.0 + xi.abs());
        if xi < w.speed_left - slack || xi > w.speed_right + slack {
            return Err(Error::XiOutsideFan { xi, lo: w.speed_left, hi: w.speed_right });
        }
        if xi <= w.speed_left {
            return Ok(w.left.clone());
        }
        if xi >= w.speed_right {
            return Ok(w.right.clone());
        }
        let m = self.model();
        let total = w.strengths[0];
        let mut b = (xi - w.speed_left).clamp(0.0, total);
        let mut x = self.integral_curve(&w.left, w.family, b)?;
        for _ in 0..4 {
            let err = m.eigenvalue(&x, w.family)? - xi;
            if err.abs() <= 1e-13 {
                break;
            }
            b = (b - err).clamp(0.0, total);
            x = self.integral_curve(&w.left, w.family, b)?;
        }
        Ok(x)
    }

    /// Self-similar value of the fan at `ξ = x/t` (right-continuous).
    pub fn sample_fan(&self, fan: &WaveFan, xi: f64) -> Result<State> {
        let mut state = fan.left().clone();
        for (i, w) in fan.waves.iter().enumerate() {
            if xi < w.speed_left {
                return Ok(state);
            }
            if w.kind == FrontKind::Rarefaction && xi < w.speed_right {
                return self.rarefaction_sample(fan, i, xi);
            }
            state = w.right.clone();
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Euler1d, PSystem};

    fn psystem() -> RiemannSolver {
        RiemannSolver::new(Arc::new(PSystem::new(2.0, 1.0).unwrap()))
    }

    fn st(v: &[f64]) -> State {
        State::from_vec(v.to_vec())
    }

    #[test]
    fn zero_strength_is_identity() {
        let rs = psystem();
        let u = st(&[1.0, 0.0]);
        assert_eq!(rs.lax_curve_point(&u, 0, 0.0).unwrap(), u);
        let fan = rs.riemann_solve(&u, &u).unwrap();
        assert!(fan.is_trivial());
        assert_eq!(fan.betas, vec![0.0, 0.0]);
    }

    #[test]
    fn euler_contact_keeps_velocity_and_pressure() {
        let m = Euler1d::new(1.4).unwrap();
        let rs = RiemannSolver::new(Arc::new(m));
        let u = m.conserved(1.0, 0.0, 1.0);
        let x = rs.lax_curve_point(&u, 1, 0.03).unwrap();
        let (rho, vel, p) = m.primitive(&x);
        assert!(rho > 1.0 && vel.abs() < 1e-14 && (p - 1.0).abs() < 1e-13);
    }

    #[test]
    fn euler_pure_contact() {
        let m = Euler1d::new(1.4).unwrap();
        let rs = RiemannSolver::new(Arc::new(m)).with_delta(1.0);
        let fan = rs.riemann_solve(&m.conserved(1.0, 0.0, 1.0), &m.conserved(0.5, 0.0, 1.0)).unwrap();
        assert_eq!(fan.waves.len(), 1);
        assert_eq!(fan.waves[0].kind, FrontKind::Contact);
        assert!(fan.waves[0].speed_left.abs() < 1e-12);
        assert!(fan.betas[0].abs() < 1e-10 && fan.betas[2].abs() < 1e-10);
    }

    #[test]
    fn outside_small_amplitude() {
        let rs = psystem();
        let e = rs.riemann_solve(&st(&[1.0, 0.0]), &st(&[1.5, 0.0])).unwrap_err();
        assert!(matches!(e, Error::OutsideSmallAmplitude { .. }));
    }

    #[test]
    fn rarefaction_edges_and_midpoint() {
        let rs = psystem();
        let u = st(&[1.0, 0.0]);
        let up = rs.lax_curve_point(&u, 0, 0.1).unwrap();
        let fan = rs.fan_from_strengths(&u, &[0.1, 0.0], Some(&up)).unwrap();
        let w = &fan.waves[0];
        assert_eq!(rs.rarefaction_sample(&fan, 0, w.speed_left).unwrap(), w.left);
        assert_eq!(rs.rarefaction_sample(&fan, 0, w.speed_right).unwrap(), w.right);
        let mid = 0.5 * (w.speed_left + w.speed_right);
        let x = rs.rarefaction_sample(&fan, 0, mid).unwrap();
        assert!((rs.model().eigenvalue(&x, 0).unwrap() - mid).abs() < 1e-9);
        assert!(matches!(rs.rarefaction_sample(&fan, 0, mid + 1.0), Err(Error::XiOutsideFan { .. })));
    }

    #[test]
    fn curve_radius_enforced() {
        let rs = psystem();
        assert!(matches!(rs.lax_curve_point(&st(&[1.0, 0.0]), 0, 2.0), Err(Error::CurveRadiusExceeded { .. })));
    }
}
