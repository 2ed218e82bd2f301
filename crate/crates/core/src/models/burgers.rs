use nalgebra::DMatrix;
use rand::{Rng, RngCore};

use super::{FieldKind, State, SystemModel};
use crate::error::Result;

/// Inviscid Burgers equation `u_t + (u²/2)_x = 0` as a 1×1 system.
#[derive(Debug, Clone, Copy, Default)]
pub struct Burgers;

impl SystemModel for Burgers {
    fn id(&self) -> &'static str {
        "burgers"
    }

    fn dim(&self) -> usize {
        1
    }

    fn field_kinds(&self) -> Vec<FieldKind> {
        vec![FieldKind::GenuinelyNonlinear]
    }

    fn background(&self) -> State {
        State::from_element(1, 0.0)
    }

    fn is_admissible(&self, u: &State) -> bool {
        u.len() == 1 && u[0].is_finite()
    }

    fn flux(&self, u: &State) -> Result<State> {
        self.check(u)?;
        Ok(State::from_element(1, 0.5 * u[0] * u[0]))
    }

    fn jacobian(&self, u: &State) -> Result<DMatrix<f64>> {
        self.check(u)?;
        Ok(DMatrix::from_element(1, 1, u[0]))
    }

    fn eigenvalues(&self, u: &State) -> Result<Vec<f64>> {
        self.check(u)?;
        Ok(vec![u[0]])
    }

    fn right_eigenvector(&self, u: &State, _j: usize) -> Result<State> {
        self.check(u)?;
        Ok(State::from_element(1, 1.0))
    }

    fn left_eigenvectors(&self, u: &State) -> Result<DMatrix<f64>> {
        self.check(u)?;
        Ok(DMatrix::from_element(1, 1, 1.0))
    }

    fn sample_admissible(&self, rng: &mut dyn RngCore) -> State {
        State::from_element(1, rng.gen_range(-2.0..2.0))
    }

    fn r_derivative(&self, _u: &State, _j: usize, _k: usize) -> Result<State> {
        Ok(State::zeros(1))
    }
}
