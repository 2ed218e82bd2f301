use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{FieldKind, State, SystemModel};
use crate::error::{Error, Result};

pub const BIORTHOGONALITY_TOL: f64 = 1e-9;
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;
pub const NORMALIZATION_TOL: f64 = 1e-8;
pub const JACOBIAN_TOL: f64 = 1e-6;

/// Worst violations of the eigenstructure invariants over a sample batch.
#[derive(Debug, Clone, Serialize)]
pub struct LintReport {
    pub model: String,
    pub samples: usize,
    pub seed: u64,
    pub max_biorthogonality: f64,
    pub max_eigen_residual: f64,
    pub max_gnl_normalization: f64,
    pub max_ld_derivative: f64,
    pub max_jacobian_error: f64,
    pub min_gap: f64,
    pub ordering_ok: bool,
    pub pass: bool,
}

/// `∇λ_j · r` by Richardson-extrapolated central differences.
fn directional(model: &dyn SystemModel, u: &State, r: &State, j: usize) -> Result<f64> {
    let central = |h: f64| -> Result<f64> {
        let up = model.eigenvalue(&(u + r * h), j)?;
        let dn = model.eigenvalue(&(u - r * h), j)?;
        Ok((up - dn) / (2.0 * h))
    };
    let h = 1e-4 * (1.0 + u.amax()) / r.amax();
    Ok((4.0 * central(0.5 * h)? - central(h)?) / 3.0)
}

fn jacobian_error(model: &dyn SystemModel, u: &State) -> Result<f64> {
    let a = model.jacobian(u)?;
    let n = model.dim();
    let mut worst = 0.0_f64;
    for i in 0..n {
        let h = 1e-6 * (1.0 + u[i].abs());
        let mut up = u.clone();
        up[i] += h;
        let mut dn = u.clone();
        dn[i] -= h;
        let col = (model.flux(&up)? - model.flux(&dn)?) / (2.0 * h);
        worst = worst.max((col - a.column(i)).amax());
    }
    Ok(worst / (1.0 + a.amax()))
}

/// Checks biorthonormality, eigen-pair residuals, field normalization,
/// Jacobian consistency and eigenvalue ordering at `samples` seeded states.
pub fn model_lint(model: &dyn SystemModel, samples: usize, seed: u64) -> Result<LintReport> {
    if samples == 0 {
        return Err(Error::NoAdmissibleSamples(model.id().to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = model.field_kinds();
    let groups = model.groups();
    let n = model.dim();
    let mut rep = LintReport {
        model: model.id().to_string(),
        samples: 0,
        seed,
        max_biorthogonality: 0.0,
        max_eigen_residual: 0.0,
        max_gnl_normalization: 0.0,
        max_ld_derivative: 0.0,
        max_jacobian_error: 0.0,
        min_gap: f64::INFINITY,
        ordering_ok: true,
        pass: false,
    };
    let mut attempts = 0;
    while rep.samples < samples {
        attempts += 1;
        if attempts > 20 * samples {
            return Err(Error::NoAdmissibleSamples(model.id().to_string()));
        }
        let u = model.sample_admissible(&mut rng);
        if !model.is_admissible(&u) {
            continue;
        }
        rep.samples += 1;
        let lam = model.eigenvalues(&u)?;
        let r = model.right_eigenvectors(&u)?;
        let l = model.left_eigenvectors(&u)?;
        let a = model.jacobian(&u)?;
        let id = &l * &r - nalgebra::DMatrix::<f64>::identity(n, n);
        rep.max_biorthogonality = rep.max_biorthogonality.max(id.amax());
        let a_norm = (0..n).map(|c| a.column(c).lp_norm(1)).fold(0.0, f64::max);
        for k in 0..n {
            let rk: State = r.column(k).into();
            let res = (&a * &rk - &rk * lam[k]).lp_norm(1) / (1.0 + a_norm);
            rep.max_eigen_residual = rep.max_eigen_residual.max(res);
            let d = directional(model, &u, &rk, k)?;
            match kinds[k] {
                FieldKind::GenuinelyNonlinear => rep.max_gnl_normalization = rep.max_gnl_normalization.max((d - 1.0).abs()),
                FieldKind::LinearlyDegenerate => rep.max_ld_derivative = rep.max_ld_derivative.max(d.abs()),
            }
        }
        rep.max_jacobian_error = rep.max_jacobian_error.max(jacobian_error(model, &u)?);
        for g in &groups {
            if lam[g.clone()].iter().any(|x| *x != lam[g.start]) {
                rep.ordering_ok = false;
            }
        }
        for w in groups.windows(2) {
            let gap = lam[w[1].start] - lam[w[0].start];
            rep.min_gap = rep.min_gap.min(gap);
            if gap < model.gap() {
                rep.ordering_ok = false;
            }
        }
    }
    rep.pass = rep.max_biorthogonality <= BIORTHOGONALITY_TOL
        && rep.max_eigen_residual <= EIGEN_RESIDUAL_TOL
        && rep.max_gnl_normalization <= NORMALIZATION_TOL
        && rep.max_ld_derivative <= NORMALIZATION_TOL
        && rep.max_jacobian_error <= JACOBIAN_TOL
        && rep.ordering_ok;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, ModelParams, MODEL_IDS};

    #[test]
    fn builtin_models_pass() {
        for id in MODEL_IDS {
            let m = build_model(id, ModelParams::default()).unwrap();
            let rep = model_lint(m.as_ref(), 200, 7).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn zero_samples_rejected() {
        let m = build_model("burgers", ModelParams::default()).unwrap();
        assert!(matches!(model_lint(m.as_ref(), 0, 1), Err(Error::NoAdmissibleSamples(_))));
    }
}
