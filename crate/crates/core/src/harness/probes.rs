use std::sync::Arc;

use serde::Serialize;

use super::fit_slope;
use crate::error::{Error, Result};
use crate::geo_optics::{assemble_expansion, ExpansionProfiles};
use crate::models::{speed_bound, FieldKind, State, SystemModel};
use crate::piecewise::PiecewiseConstantFn;
use crate::system_ft::{apply_semigroup, FtParams};
use crate::system_riemann::RiemannSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    /// Local estimate at a genuinely nonlinear jump.
    Prop31,
    /// Local estimate at a linearly degenerate jump.
    Prop32,
    /// Strengths across a genuinely nonlinear jump of the first order states.
    Lemma32,
    /// Strengths across a linearly degenerate jump of the first order states.
    Lemma34,
    /// Strengths across a jump of the quadratically corrected states.
    Lemma51,
    /// Strengths across a jump of the `E`-corrected states.
    Lemma61,
    LocalSemigroup,
}

impl ProbeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeKind::Prop31 => "prop31",
            ProbeKind::Prop32 => "prop32",
            ProbeKind::Lemma32 => "lemma32",
            ProbeKind::Lemma34 => "lemma34",
            ProbeKind::Lemma51 => "lemma51",
            ProbeKind::Lemma61 => "lemma61",
            ProbeKind::LocalSemigroup => "localsemigroup",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRecord {
    pub kind: ProbeKind,
    pub eps: f64,
    pub h: f64,
    pub sigma: f64,
    /// `max_j |σ_j|` left of the jump.
    pub sigma_left: f64,
    pub measured: f64,
    pub ratio: f64,
}

/// Default `λ̂ = 2 max|λ| + 1` over the model's sampling box.
pub fn default_lambda_hat(model: &dyn SystemModel) -> f64 {
    2.0 * speed_bound(model, 256, 11) + 1.0
}

/// `f` on `[a, b]`, extended by its boundary values outside.
fn restrict(f: &PiecewiseConstantFn, a: f64, b: f64) -> Result<PiecewiseConstantFn> {
    let inside: Vec<f64> = f.breakpoints().iter().copied().filter(|&x| x > a && x < b).collect();
    let mut rows = vec![f.eval(a).to_vec()];
    for &x in &inside {
        rows.push(f.eval(x).to_vec());
    }
    PiecewiseConstantFn::from_rows(f.dim(), inside, rows)
}

/// Compares one front-tracking step of length `h` started from the expansion
/// at `t0` with the expansion at `t0 + h`, in L¹ on `[x0 − λ̂h, x0 + λ̂h]`.
/// `family` names the profile that jumps at `x0`. The data is cut down to
/// `[x0 − 2λ̂h, x0 + 2λ̂h]` first, which must contain that jump only; by finite
/// propagation the cut does not change the solution on the window.
pub fn local_estimate_probe(profiles: &ExpansionProfiles, family: usize, x0: f64, t0: f64, h: f64, lambda_hat: f64, params: &FtParams) -> Result<ProbeRecord> {
    let model = profiles.model();
    let w0 = assemble_expansion(profiles, t0)?;
    let w1 = assemble_expansion(profiles, t0 + h)?;
    let (a, b) = (x0 - 2.0 * lambda_hat * h, x0 + 2.0 * lambda_hat * h);
    let inside = w0.breakpoints().iter().filter(|&&x| x >= a && x <= b).count();
    if inside > 1 {
        return Err(Error::MultipleJumpsInWindow(inside));
    }
    let parts = profiles.physical_profiles(t0)?;
    let sigma = (parts[family].eval(x0)[0] - parts[family].eval_left(x0)[0]).abs();
    let sigma_left = parts.iter().map(|p| p.eval_left(x0)[0].abs()).fold(0.0, f64::max);
    let local = restrict(&w0, a, b)?;
    let moved = apply_semigroup(profiles.model_arc(), &local, h, params)?;
    let d = moved.l1_distance(&w1, Some((x0 - lambda_hat * h, x0 + lambda_hat * h)))?;
    let denom = sigma * (sigma + sigma_left) * h * profiles.eps * profiles.eps;
    let kind = match model.field_kinds()[family] {
        FieldKind::GenuinelyNonlinear => ProbeKind::Prop31,
        FieldKind::LinearlyDegenerate => ProbeKind::Prop32,
    };
    Ok(ProbeRecord { kind, eps: profiles.eps, h, sigma, sigma_left, measured: d, ratio: if denom > 0.0 { d / denom } else { 0.0 } })
}

/// Which states the strength probe builds on either side of the jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrengthSetup {
    /// `U± = U⁰ + ε Σ σ_j± r_j⁰`.
    FirstOrder,
    /// Family `k` alone, with `(ε²/2) σ² (r_k⁰·∇) r_k⁰` added on both sides.
    Quadratic,
    /// `V± = U⁰ + ε Σ σ_j± r_j⁰ + ε² E±` with the jump of `E` prescribed by
    /// the jumps of the profiles.
    Corrected,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrengthProbe {
    pub records: Vec<ProbeRecord>,
    /// Slope of `|β_k − σε|` against ε.
    pub slope_own: Option<f64>,
    /// Slope of `Σ_{j≠k} |β_j|` against ε.
    pub slope_off: Option<f64>,
    /// Slope of `Σ_j |β_j − δ_jk σε|` against ε.
    pub slope_total: Option<f64>,
}

fn slope_of(eps: &[f64], vals: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = eps.iter().copied().zip(vals.iter().copied()).collect();
    fit_slope(&pts).ok()
}

/// Decomposes the jump of family `k` by `σ` (profiles left of the jump given
/// by `sigma_left`) into wave strengths for each ε and fits how the defect
/// from `σε e_k` scales.
pub fn strength_expansion_probe(model: Arc<dyn SystemModel>, k: usize, setup: StrengthSetup, sigma_left: &[f64], sigma: f64, eps_list: &[f64]) -> Result<StrengthProbe> {
    let n = model.dim();
    if sigma_left.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: sigma_left.len() });
    }
    if eps_list.len() < 3 {
        return Err(Error::TooFewPoints(eps_list.len()));
    }
    let u0 = model.background();
    let r = model.right_eigenvectors(&u0)?;
    let col = |j: usize| -> State { r.column(j).into() };
    let kind = match (setup, model.field_kinds()[k]) {
        (StrengthSetup::FirstOrder, FieldKind::GenuinelyNonlinear) => ProbeKind::Lemma32,
        (StrengthSetup::FirstOrder, FieldKind::LinearlyDegenerate) => ProbeKind::Lemma34,
        (StrengthSetup::Quadratic, _) => ProbeKind::Lemma51,
        (StrengthSetup::Corrected, _) => ProbeKind::Lemma61,
    };
    let d: Vec<State> = (0..n).map(|j| model.r_derivative(&u0, j, k)).collect::<Result<_>>()?;
    let solver = RiemannSolver::new(model.clone()).with_delta(0.5);
    let mut records = Vec::new();
    let (mut own, mut off, mut total) = (Vec::new(), Vec::new(), Vec::new());
    for &eps in eps_list {
        let (um, up) = match setup {
            StrengthSetup::FirstOrder => {
                let mut um = u0.clone();
                for (j, s) in sigma_left.iter().enumerate() {
                    um += col(j) * (eps * s);
                }
                let up = &um + col(k) * (eps * sigma);
                (um, up)
            }
            StrengthSetup::Quadratic => {
                let (sm, sp) = (sigma_left[k], sigma_left[k] + sigma);
                let um = &u0 + col(k) * (eps * sm) + &d[k] * (0.5 * eps * eps * sm * sm);
                let up = &u0 + col(k) * (eps * sp) + &d[k] * (0.5 * eps * eps * sp * sp);
                (um, up)
            }
            StrengthSetup::Corrected => {
                let mut um = u0.clone();
                for (j, s) in sigma_left.iter().enumerate() {
                    um += col(j) * (eps * s);
                }
                let (sm, sp) = (sigma_left[k], sigma_left[k] + sigma);
                let mut de = &d[k] * (0.5 * (sp * sp - sm * sm));
                for (j, s) in sigma_left.iter().enumerate() {
                    if j != k {
                        de += &d[j] * (s * sigma);
                    }
                }
                let up = &um + col(k) * (eps * sigma) + de * (eps * eps);
                (um, up)
            }
        };
        let betas = solver.strength_decompose(&um, &up)?;
        let o = (betas[k] - sigma * eps).abs();
        let f: f64 = betas.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, b)| b.abs()).sum();
        own.push(o);
        off.push(f);
        total.push(o + f);
        let sl = sigma_left.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
        let order = if setup == StrengthSetup::FirstOrder { 2 } else { 3 };
        records.push(ProbeRecord { kind, eps, h: 0.0, sigma, sigma_left: sl, measured: o + f, ratio: (o + f) / eps.powi(order) });
    }
    Ok(StrengthProbe { records, slope_own: slope_of(eps_list, &own), slope_off: slope_of(eps_list, &off), slope_total: slope_of(eps_list, &total) })
}
