use std::ops::Range;

use nalgebra::{DMatrix, Matrix4};
use rand::{Rng, RngCore};

use super::dual::{Dual, Real};
use super::{unit_positive, FieldKind, State, SystemModel};
use crate::error::{Error, Result};

/// Steady supersonic 2D Euler flow written as an evolution system in `x₁`.
///
/// Conserved vector `U = (ρv₁, ρv₁² + p, ρv₁v₂, ρv₁H)` with flux
/// `F = (ρv₂, ρv₁v₂, ρv₂² + p, ρv₂H)`, where `H = |v|²/2 + γp/((γ-1)ρ)`.
/// Families in order: `λ₋`, `λ₀`, `λ₀`, `λ₊`; the repeated field `λ₀ = v₂/v₁`
/// is linearly degenerate. Admissible states have `v₁ > c`.
#[derive(Debug, Clone, Copy)]
pub struct SteadyEuler2d {
    gamma: f64,
}

/// Primitive variables `(ρ, v₁, v₂, p)`.
type Prim = [f64; 4];

fn acoustic<T: Real>(gamma: f64, w: [T; 4], sign: f64) -> T {
    let [rho, v1, v2, p] = w;
    let c2 = T::lift(gamma) * p / rho;
    let q2 = v1 * v1 + v2 * v2;
    (v1 * v2 + T::lift(sign) * (c2 * (q2 - c2)).sqrt()) / (v1 * v1 - c2)
}

impl SteadyEuler2d {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::Config(format!("Euler needs gamma > 1 (got {gamma})")));
        }
        Ok(Self { gamma })
    }

    pub fn conserved(&self, rho: f64, v1: f64, v2: f64, p: f64) -> State {
        let h = 0.5 * (v1 * v1 + v2 * v2) + self.gamma * p / ((self.gamma - 1.0) * rho);
        let m = rho * v1;
        State::from_vec(vec![m, m * v1 + p, m * v2, m * h])
    }

    /// Recovers `(ρ, v₁, v₂, p)` on the supersonic branch, if it exists.
    pub fn primitive(&self, u: &State) -> Option<Prim> {
        if u.len() != 4 || u.iter().any(|x| !x.is_finite()) || u[0] <= 0.0 || u[1] <= 0.0 {
            return None;
        }
        let g = self.gamma / (self.gamma - 1.0);
        let m = u[0];
        let v2 = u[2] / m;
        let h = u[3] / m;
        // (γ+1)/(2(γ-1)) v₁² - g (P/m) v₁ + (H - v₂²/2) = 0, larger root is supersonic
        let a = (self.gamma + 1.0) / (2.0 * (self.gamma - 1.0));
        let b = g * u[1] / m;
        let c = h - 0.5 * v2 * v2;
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let v1 = (b + disc.sqrt()) / (2.0 * a);
        let p = u[1] - m * v1;
        let rho = m / v1;
        if !(v1 > 0.0 && p > 0.0 && rho > 0.0) {
            return None;
        }
        Some([rho, v1, v2, p])
    }

    fn prim(&self, u: &State) -> Result<Prim> {
        if u.len() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, got: u.len() });
        }
        match self.primitive(u) {
            Some(w) if w[1] * w[1] > self.gamma * w[3] / w[0] => Ok(w),
            _ => Err(Error::InadmissibleState(u.as_slice().to_vec())),
        }
    }

    fn sound_speed(&self, w: &Prim) -> f64 {
        (self.gamma * w[3] / w[0]).sqrt()
    }

    fn enthalpy(&self, w: &Prim) -> f64 {
        0.5 * (w[1] * w[1] + w[2] * w[2]) + self.gamma * w[3] / ((self.gamma - 1.0) * w[0])
    }

    /// `∂U/∂W`.
    fn du_dw(&self, w: &Prim) -> Matrix4<f64> {
        let [rho, v1, v2, _] = *w;
        let g = self.gamma / (self.gamma - 1.0);
        let h = self.enthalpy(w);
        let q2 = v1 * v1 + v2 * v2;
        Matrix4::new(
            v1, rho, 0.0, 0.0, //
            v1 * v1, 2.0 * rho * v1, 0.0, 1.0, //
            v1 * v2, rho * v2, rho * v1, 0.0, //
            0.5 * v1 * q2, rho * h + rho * v1 * v1, rho * v1 * v2, g * v1,
        )
    }

    /// `∂F/∂W`.
    fn df_dw(&self, w: &Prim) -> Matrix4<f64> {
        let [rho, v1, v2, _] = *w;
        let g = self.gamma / (self.gamma - 1.0);
        let h = self.enthalpy(w);
        let q2 = v1 * v1 + v2 * v2;
        Matrix4::new(
            v2, 0.0, rho, 0.0, //
            v1 * v2, rho * v2, rho * v1, 0.0, //
            v2 * v2, 0.0, 2.0 * rho * v2, 1.0, //
            0.5 * v2 * q2, rho * v1 * v2, rho * h + rho * v2 * v2, g * v2,
        )
    }

    /// Acoustic eigenvector in primitive variables, normalized so `∇_W λ · r = 1`.
    fn acoustic_vector(&self, w: &Prim, sign: f64) -> [f64; 4] {
        let [rho, v1, v2, _] = *w;
        let c = self.sound_speed(w);
        let lam = acoustic(self.gamma, *w, sign);
        let mu = v2 - lam * v1;
        let r = [1.0 / (c * c), lam / (rho * mu), -1.0 / (rho * mu), 1.0];
        let wd = [0, 1, 2, 3].map(|i| Dual::new(w[i], r[i]));
        let kappa = acoustic(self.gamma, wd, sign).d;
        r.map(|x| x / kappa)
    }
}

impl SystemModel for SteadyEuler2d {
    fn id(&self) -> &'static str {
        "steady-euler2d"
    }

    fn dim(&self) -> usize {
        4
    }

    fn field_kinds(&self) -> Vec<FieldKind> {
        use FieldKind::*;
        vec![GenuinelyNonlinear, LinearlyDegenerate, LinearlyDegenerate, GenuinelyNonlinear]
    }

    fn groups(&self) -> Vec<Range<usize>> {
        vec![0..1, 1..3, 3..4]
    }

    fn background(&self) -> State {
        let c = self.gamma.sqrt();
        self.conserved(1.0, 2.0 * c, 0.0, 1.0)
    }

    fn is_admissible(&self, u: &State) -> bool {
        self.prim(u).is_ok()
    }

    fn flux(&self, u: &State) -> Result<State> {
        let w = self.prim(u)?;
        let [rho, v1, v2, p] = w;
        let h = self.enthalpy(&w);
        let n = rho * v2;
        Ok(State::from_vec(vec![n, n * v1, n * v2 + p, n * h]))
    }

    fn jacobian(&self, u: &State) -> Result<DMatrix<f64>> {
        let w = self.prim(u)?;
        let inv = self.du_dw(&w).try_inverse().ok_or_else(|| Error::InadmissibleState(u.as_slice().to_vec()))?;
        let a = self.df_dw(&w) * inv;
        Ok(DMatrix::from_iterator(4, 4, a.iter().copied()))
    }

    fn eigenvalues(&self, u: &State) -> Result<Vec<f64>> {
        let w = self.prim(u)?;
        let l0 = w[2] / w[1];
        Ok(vec![acoustic(self.gamma, w, -1.0), l0, l0, acoustic(self.gamma, w, 1.0)])
    }

    fn right_eigenvector(&self, u: &State, j: usize) -> Result<State> {
        let w = self.prim(u)?;
        let uw = self.du_dw(&w);
        let rw = match j {
            0 => self.acoustic_vector(&w, -1.0),
            1 => [1.0, 0.0, 0.0, 0.0],
            2 => [0.0, 1.0, w[2] / w[1], 0.0],
            _ => self.acoustic_vector(&w, 1.0),
        };
        let r = uw * nalgebra::Vector4::from(rw);
        let r = State::from_iterator(4, r.iter().copied());
        Ok(if j == 1 || j == 2 { unit_positive(r) } else { r })
    }

    fn sample_admissible(&self, rng: &mut dyn RngCore) -> State {
        let rho = rng.gen_range(0.5..2.0);
        let p = rng.gen_range(0.5..2.0);
        let mach: f64 = rng.gen_range(1.5..3.0);
        let angle: f64 = rng.gen_range(-0.5..0.5);
        let q = mach * (self.gamma * p / rho).sqrt();
        self.conserved(rho, q * angle.cos(), q * angle.sin(), p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_round_trip() {
        let m = SteadyEuler2d::new(1.4).unwrap();
        let u = m.conserved(1.3, 2.2, -0.3, 0.8);
        let w = m.primitive(&u).unwrap();
        for (a, b) in w.iter().zip([1.3, 2.2, -0.3, 0.8]) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
