use nalgebra::DMatrix;
use rand::{Rng, RngCore};

use super::{unit_positive, FieldKind, State, SystemModel};
use crate::error::{Error, Result};

/// One-dimensional compressible Euler equations for a polytropic gas.
///
/// Conserved state `(ρ, ρu, E)` with `p = (γ-1)(E - ρu²/2)`. Fields: `u - c`
/// (GNL), `u` (LD contact), `u + c` (GNL).
#[derive(Debug, Clone, Copy)]
pub struct Euler1d {
    gamma: f64,
}

impl Euler1d {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::Config(format!("Euler needs gamma > 1 (got {gamma})")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn conserved(&self, rho: f64, u: f64, p: f64) -> State {
        State::from_vec(vec![rho, rho * u, 0.5 * rho * u * u + p / (self.gamma - 1.0)])
    }

    /// `(ρ, u, p)` of a conserved state.
    pub fn primitive(&self, s: &State) -> (f64, f64, f64) {
        let rho = s[0];
        let u = s[1] / rho;
        let p = (self.gamma - 1.0) * (s[2] - 0.5 * rho * u * u);
        (rho, u, p)
    }

    /// Maps a primitive-variable direction `(dρ, du, dp)` to conserved variables.
    fn to_conserved_direction(&self, rho: f64, u: f64, w: [f64; 3]) -> State {
        State::from_vec(vec![w[0], u * w[0] + rho * w[1], 0.5 * u * u * w[0] + rho * u * w[1] + w[2] / (self.gamma - 1.0)])
    }
}

impl SystemModel for Euler1d {
    fn id(&self) -> &'static str {
        "euler1d"
    }

    fn dim(&self) -> usize {
        3
    }

    fn field_kinds(&self) -> Vec<FieldKind> {
        vec![FieldKind::GenuinelyNonlinear, FieldKind::LinearlyDegenerate, FieldKind::GenuinelyNonlinear]
    }

    fn background(&self) -> State {
        self.conserved(1.0, 0.0, 1.0)
    }

    fn is_admissible(&self, s: &State) -> bool {
        if s.len() != 3 || s.iter().any(|v| !v.is_finite()) || s[0] <= 0.0 {
            return false;
        }
        self.primitive(s).2 > 0.0
    }

    fn flux(&self, s: &State) -> Result<State> {
        self.check(s)?;
        let (rho, u, p) = self.primitive(s);
        Ok(State::from_vec(vec![rho * u, rho * u * u + p, (s[2] + p) * u]))
    }

    fn jacobian(&self, s: &State) -> Result<DMatrix<f64>> {
        self.check(s)?;
        let g = self.gamma;
        let (rho, u, p) = self.primitive(s);
        let h = (s[2] + p) / rho;
        Ok(DMatrix::from_row_slice(
            3,
            3,
            &[
                0.0,
                1.0,
                0.0,
                0.5 * (g - 3.0) * u * u,
                (3.0 - g) * u,
                g - 1.0,
                u * (0.5 * (g - 1.0) * u * u - h),
                h - (g - 1.0) * u * u,
                g * u,
            ],
        ))
    }

    fn eigenvalues(&self, s: &State) -> Result<Vec<f64>> {
        self.check(s)?;
        let (rho, u, p) = self.primitive(s);
        let c = (self.gamma * p / rho).sqrt();
        Ok(vec![u - c, u, u + c])
    }

    fn right_eigenvector(&self, s: &State, j: usize) -> Result<State> {
        self.check(s)?;
        let (rho, u, p) = self.primitive(s);
        let c = (self.gamma * p / rho).sqrt();
        // dλ along (ρ, ±c, ρc²) is ±c(γ+1)/2
        let k = 2.0 / ((self.gamma + 1.0) * c);
        Ok(match j {
            0 => self.to_conserved_direction(rho, u, [-k * rho, k * c, -k * rho * c * c]),
            1 => unit_positive(self.to_conserved_direction(rho, u, [1.0, 0.0, 0.0])),
            _ => self.to_conserved_direction(rho, u, [k * rho, k * c, k * rho * c * c]),
        })
    }

    fn sample_admissible(&self, rng: &mut dyn RngCore) -> State {
        self.conserved(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0))
    }
}
