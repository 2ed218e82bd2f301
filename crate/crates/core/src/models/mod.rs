//! Conservation-law models with closed-form eigenstructure.
//!
//! Every model orders its eigenvalues increasingly and groups repeated
//! eigenvalues into multiplicity groups. Right eigenvectors of genuinely
//! nonlinear fields are scaled so that `∇λ_j · r_j = 1`; eigenvectors of
//! linearly degenerate fields have unit Euclidean norm with the first nonzero
//! component positive. Left eigenvectors are the rows of `R⁻¹`.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod burgers;
mod dual;
mod euler1d;
mod lint;
mod psystem;
mod steady_euler;

pub use burgers::Burgers;
pub use dual::Dual;
pub use euler1d::Euler1d;
pub use lint::{model_lint, LintReport};
pub use psystem::PSystem;
pub use steady_euler::SteadyEuler2d;

pub type State = DVector<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    #[serde(rename = "GNL")]
    GenuinelyNonlinear,
    #[serde(rename = "LD")]
    LinearlyDegenerate,
}

pub trait SystemModel: Send + Sync + std::fmt::Debug {
    fn id(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn field_kinds(&self) -> Vec<FieldKind>;

    /// Families sharing one eigenvalue, in increasing order.
    fn groups(&self) -> Vec<Range<usize>> {
        (0..self.dim()).map(|j| j..j + 1).collect()
    }

    fn background(&self) -> State;

    fn is_admissible(&self, u: &State) -> bool;

    fn flux(&self, u: &State) -> Result<State>;

    fn jacobian(&self, u: &State) -> Result<DMatrix<f64>>;

    /// Eigenvalues in increasing order (repeated inside a multiplicity group).
    fn eigenvalues(&self, u: &State) -> Result<Vec<f64>>;

    fn eigenvalue(&self, u: &State, j: usize) -> Result<f64> {
        Ok(self.eigenvalues(u)?[j])
    }

    fn right_eigenvector(&self, u: &State, j: usize) -> Result<State>;

    /// Right eigenvectors as columns.
    fn right_eigenvectors(&self, u: &State) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut r = DMatrix::zeros(n, n);
        for j in 0..n {
            r.set_column(j, &self.right_eigenvector(u, j)?);
        }
        Ok(r)
    }

    /// Left eigenvectors as rows, normalized by `l_j · r_k = δ_jk`.
    fn left_eigenvectors(&self, u: &State) -> Result<DMatrix<f64>> {
        self.right_eigenvectors(u)?.try_inverse().ok_or_else(|| Error::InadmissibleState(u.as_slice().to_vec()))
    }

    /// Pseudo-random admissible state from the model's sampling box.
    fn sample_admissible(&self, rng: &mut dyn RngCore) -> State;

    /// Minimal separation between distinct eigenvalues on the sampling box.
    fn gap(&self) -> f64 {
        1e-3
    }

    /// Directional derivative `(r_j · ∇) r_k` by central differences.
    fn r_derivative(&self, u: &State, j: usize, k: usize) -> Result<State> {
        let h = 1e-5 * (1.0 + u.amax());
        let rj = self.right_eigenvector(u, j)?;
        let plus = self.right_eigenvector(&(u + &rj * h), k)?;
        let minus = self.right_eigenvector(&(u - &rj * h), k)?;
        Ok((plus - minus) / (2.0 * h))
    }

    fn check(&self, u: &State) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: u.len() });
        }
        if !self.is_admissible(u) {
            return Err(Error::InadmissibleState(u.as_slice().to_vec()));
        }
        Ok(())
    }
}

/// Index of the multiplicity group that contains family `j`.
pub fn group_of(model: &dyn SystemModel, j: usize) -> usize {
    model.groups().iter().position(|g| g.contains(&j)).expect("family inside some group")
}

/// `∇λ_j(u)` by central differences.
pub fn eigenvalue_gradient(model: &dyn SystemModel, u: &State, j: usize, h: f64) -> Result<State> {
    let n = model.dim();
    let mut g = State::zeros(n);
    for i in 0..n {
        let step = h * (1.0 + u[i].abs());
        let mut up = u.clone();
        up[i] += step;
        let mut dn = u.clone();
        dn[i] -= step;
        g[i] = (model.eigenvalue(&up, j)? - model.eigenvalue(&dn, j)?) / (2.0 * step);
    }
    Ok(g)
}

/// Largest `|λ|` seen over `samples` states of the sampling box.
pub fn speed_bound(model: &dyn SystemModel, samples: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    for _ in 0..samples {
        let u = model.sample_admissible(&mut rng);
        if let Ok(l) = model.eigenvalues(&u) {
            best = l.iter().fold(best, |m, v| m.max(v.abs()));
        }
    }
    if let Ok(l) = model.eigenvalues(&model.background()) {
        best = l.iter().fold(best, |m, v| m.max(v.abs()));
    }
    best
}

/// Model identifiers accepted by [`build_model`].
pub const MODEL_IDS: [&str; 4] = ["burgers", "psystem", "euler1d", "steady-euler2d"];

/// Model parameters: `gamma` (adiabatic exponent) and `k` (p-system pressure scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_k")]
    pub k: f64,
}

fn default_gamma() -> f64 {
    1.4
}

fn default_k() -> f64 {
    1.0
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { gamma: default_gamma(), k: default_k() }
    }
}

pub fn build_model(id: &str, params: ModelParams) -> Result<Arc<dyn SystemModel>> {
    Ok(match id {
        "burgers" => Arc::new(Burgers),
        "psystem" => Arc::new(PSystem::new(params.gamma, params.k)?),
        "euler1d" => Arc::new(Euler1d::new(params.gamma)?),
        "steady-euler2d" => Arc::new(SteadyEuler2d::new(params.gamma)?),
        other => return Err(Error::UnknownModel(other.to_string())),
    })
}

/// Scales `v` to unit Euclidean norm with its first nonzero component positive.
pub(crate) fn unit_positive(mut v: State) -> State {
    let norm = v.norm();
    v /= norm;
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-14) {
        if *first < 0.0 {
            v = -v;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_builds_every_model() {
        for id in MODEL_IDS {
            let m = build_model(id, ModelParams::default()).unwrap();
            assert_eq!(m.id(), id);
            assert!(m.is_admissible(&m.background()));
        }
        assert!(matches!(build_model("shallow-water", ModelParams::default()), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn psystem_eigenvalues() {
        let m = PSystem::new(2.0, 1.0).unwrap();
        let l = m.eigenvalues(&State::from_vec(vec![1.0, 0.0])).unwrap();
        assert!((l[0] + 2f64.sqrt()).abs() < 1e-15 && (l[1] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn euler_eigenvalues() {
        let m = Euler1d::new(1.4).unwrap();
        let u = m.conserved(1.0, 0.0, 1.0);
        let l = m.eigenvalues(&u).unwrap();
        let c = 1.4f64.sqrt();
        assert!((l[0] + c).abs() < 1e-14 && l[1].abs() < 1e-14 && (l[2] - c).abs() < 1e-14);
        assert!(matches!(m.eigenvalues(&State::from_vec(vec![-1.0, 0.0, 1.0])), Err(Error::InadmissibleState(_))));
    }

    #[test]
    fn steady_euler_eigenvalues() {
        let m = SteadyEuler2d::new(1.4).unwrap();
        let (rho, v1, v2, p) = (1.2, 2.5, 0.4, 0.9);
        let u = m.conserved(rho, v1, v2, p);
        let l = m.eigenvalues(&u).unwrap();
        let c2: f64 = 1.4 * p / rho;
        let q2 = v1 * v1 + v2 * v2;
        let lm = (v1 * v2 - c2.sqrt() * (q2 - c2).sqrt()) / (v1 * v1 - c2);
        let lp = (v1 * v2 + c2.sqrt() * (q2 - c2).sqrt()) / (v1 * v1 - c2);
        assert!((l[0] - lm).abs() < 1e-12);
        assert!((l[1] - v2 / v1).abs() < 1e-12 && l[1] == l[2]);
        assert!((l[3] - lp).abs() < 1e-12);
        // a subsonic state maps onto its supersonic partner with the same U
        let sub = m.conserved(1.0, 0.5, 0.0, 1.0);
        let w = m.primitive(&sub).unwrap();
        assert!(w[1] * w[1] > 1.4 * w[3] / w[0]);
        let reversed = State::from_vec(vec![-1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(m.eigenvalues(&reversed), Err(Error::InadmissibleState(_))));
    }
}
