use nalgebra::DMatrix;
use rand::{Rng, RngCore};

use super::{FieldKind, State, SystemModel};
use crate::error::{Error, Result};

/// Isentropic gas dynamics in Lagrangian coordinates,
/// `v_t - u_x = 0`, `u_t + p(v)_x = 0` with `p(v) = k v^-γ`.
///
/// State `(v, u)`: specific volume and velocity. Both fields are genuinely
/// nonlinear with `λ = ∓ c(v)`, `c = sqrt(-p'(v))`.
#[derive(Debug, Clone, Copy)]
pub struct PSystem {
    gamma: f64,
    k: f64,
}

impl PSystem {
    pub fn new(gamma: f64, k: f64) -> Result<Self> {
        if !(gamma > 0.0 && k > 0.0) {
            return Err(Error::Config(format!("p-system needs gamma > 0 and k > 0 (got {gamma}, {k})")));
        }
        Ok(Self { gamma, k })
    }

    pub fn pressure(&self, v: f64) -> f64 {
        self.k * v.powf(-self.gamma)
    }

    fn sound_speed(&self, v: f64) -> f64 {
        (self.k * self.gamma * v.powf(-self.gamma - 1.0)).sqrt()
    }

    /// `2v / ((γ+1) c)`: the factor that makes `∇λ·r = 1`.
    fn scale(&self, v: f64) -> f64 {
        2.0 * v / ((self.gamma + 1.0) * self.sound_speed(v))
    }
}

impl SystemModel for PSystem {
    fn id(&self) -> &'static str {
        "psystem"
    }

    fn dim(&self) -> usize {
        2
    }

    fn field_kinds(&self) -> Vec<FieldKind> {
        vec![FieldKind::GenuinelyNonlinear; 2]
    }

    fn background(&self) -> State {
        State::from_vec(vec![1.0, 0.0])
    }

    fn is_admissible(&self, u: &State) -> bool {
        u.len() == 2 && u[0] > 0.0 && u[0].is_finite() && u[1].is_finite()
    }

    fn flux(&self, u: &State) -> Result<State> {
        self.check(u)?;
        Ok(State::from_vec(vec![-u[1], self.pressure(u[0])]))
    }

    fn jacobian(&self, u: &State) -> Result<DMatrix<f64>> {
        self.check(u)?;
        let dp = -self.k * self.gamma * u[0].powf(-self.gamma - 1.0);
        Ok(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, dp, 0.0]))
    }

    fn eigenvalues(&self, u: &State) -> Result<Vec<f64>> {
        self.check(u)?;
        let c = self.sound_speed(u[0]);
        Ok(vec![-c, c])
    }

    fn right_eigenvector(&self, u: &State, j: usize) -> Result<State> {
        self.check(u)?;
        let c = self.sound_speed(u[0]);
        let a = self.scale(u[0]);
        Ok(match j {
            0 => State::from_vec(vec![a, a * c]),
            _ => State::from_vec(vec![-a, a * c]),
        })
    }

    fn left_eigenvectors(&self, u: &State) -> Result<DMatrix<f64>> {
        self.check(u)?;
        let c = self.sound_speed(u[0]);
        let a = self.scale(u[0]);
        Ok(DMatrix::from_row_slice(2, 2, &[0.5 / a, 0.5 / (a * c), -0.5 / a, 0.5 / (a * c)]))
    }

    fn sample_admissible(&self, rng: &mut dyn RngCore) -> State {
        State::from_vec(vec![rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0)])
    }
}
