//! Weakly nonlinear geometric optics: profile projection and evolution, the
//! first order expansion `U⁰ + ε Σ σ_j(εt, x − λ_j⁰ t) r_j⁰`, its second order
//! refinement, and the correction fields that make the refinement an exact
//! front-tracking approximation across linearly degenerate jumps.
//!
//! Profiles live in the slow variables `τ = εt`, `y = x − λ_j⁰ t`. Genuinely
//! nonlinear profiles solve Burgers' equation `σ_τ + (σ²/2)_y = 0`, linearly
//! degenerate ones are constant in `τ`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{FieldKind, State, SystemModel};
use crate::piecewise::PiecewiseConstantFn;
use crate::scalar_ft::{scalar_evolve, AffineFlux, ScalarTrajectory};
use crate::system_riemann::RiemannSolver;

/// Largest jump (1-norm) the correction builder hands to the Riemann solver.
const CORRECTION_DELTA: f64 = 0.5;

/// One family's profile and the eigenstructure it is attached to.
#[derive(Debug, Clone)]
pub struct FamilyProfile {
    pub family: usize,
    pub group: usize,
    pub kind: FieldKind,
    pub lambda0: f64,
    pub r0: State,
    pub l0: State,
    /// Quantized profile at `τ = 0`.
    pub initial: PiecewiseConstantFn,
    evolved: Option<ScalarTrajectory>,
}

impl FamilyProfile {
    /// `σ_j(τ, ·)` in the slow variable `y`.
    pub fn at(&self, tau: f64) -> Result<PiecewiseConstantFn> {
        match (self.kind, &self.evolved) {
            (FieldKind::LinearlyDegenerate, _) => Ok(self.initial.clone()),
            _ if tau == 0.0 => Ok(self.initial.clone()),
            (FieldKind::GenuinelyNonlinear, Some(traj)) => {
                if tau > traj.t_final() {
                    return Err(Error::SpanExceeded { t: tau, span: traj.t_final() });
                }
                traj.snapshot(tau)
            }
            (FieldKind::GenuinelyNonlinear, None) => Err(Error::SpanExceeded { t: tau, span: 0.0 }),
        }
    }

    /// `σ_j(εt, x − λ_j⁰ t)` as a function of `x`.
    pub fn in_physical(&self, eps: f64, t: f64) -> Result<PiecewiseConstantFn> {
        Ok(self.at(eps * t)?.shift(self.lambda0 * t))
    }

    pub fn trajectory(&self) -> Option<&ScalarTrajectory> {
        self.evolved.as_ref()
    }
}

/// All profiles of one expansion.
#[derive(Debug, Clone)]
pub struct ExpansionProfiles {
    model: Arc<dyn SystemModel>,
    pub u0: State,
    pub eps: f64,
    pub nu: u32,
    pub families: Vec<FamilyProfile>,
    tau_span: f64,
}

impl ExpansionProfiles {
    pub fn model(&self) -> &dyn SystemModel {
        self.model.as_ref()
    }

    pub fn model_arc(&self) -> Arc<dyn SystemModel> {
        self.model.clone()
    }

    /// Slow time up to which every profile is available.
    pub fn tau_span(&self) -> f64 {
        self.tau_span
    }

    /// Physical time up to which the expansion can be assembled.
    pub fn t_span(&self) -> f64 {
        if self.eps == 0.0 {
            f64::INFINITY
        } else {
            self.tau_span / self.eps
        }
    }

    pub fn profile(&self, j: usize) -> &FamilyProfile {
        &self.families[j]
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if t < 0.0 || self.eps * t > self.tau_span {
            return Err(Error::SpanExceeded { t, span: self.t_span() });
        }
        Ok(())
    }

    /// Shifted profiles `σ_j(εt, x − λ_j⁰ t)`, one per family.
    pub fn physical_profiles(&self, t: f64) -> Result<Vec<PiecewiseConstantFn>> {
        self.check_t(t)?;
        self.families.iter().map(|f| f.in_physical(self.eps, t)).collect()
    }
}

/// `σ_j(0) = quantize(l_j⁰ · U¹, ν)` for every family.
pub fn project_initial(model: Arc<dyn SystemModel>, u1: &PiecewiseConstantFn, nu: u32, eps: f64) -> Result<ExpansionProfiles> {
    let n = model.dim();
    if u1.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u1.dim() });
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("amplitude must be a nonnegative number, got {eps}")));
    }
    let u0 = model.background();
    model.check(&u0)?;
    let lam = model.eigenvalues(&u0)?;
    let r = model.right_eigenvectors(&u0)?;
    let l = model.left_eigenvectors(&u0)?;
    let kinds = model.field_kinds();
    let groups = model.groups();
    let mut families = Vec::with_capacity(n);
    for j in 0..n {
        let lj: State = l.row(j).transpose();
        let raw = u1.map_values(1, |v, out| out[0] = v.iter().zip(lj.iter()).map(|(a, b)| a * b).sum());
        families.push(FamilyProfile {
            family: j,
            group: groups.iter().position(|g| g.contains(&j)).expect("family inside some group"),
            kind: kinds[j],
            lambda0: lam[j],
            r0: r.column(j).into(),
            l0: lj,
            initial: raw.quantize_to_grid(nu)?,
            evolved: None,
        });
    }
    Ok(ExpansionProfiles { model, u0, eps, nu, families, tau_span: 0.0 })
}

/// Evolves the genuinely nonlinear profiles under Burgers' equation up to slow
/// time `tau_final`; linearly degenerate profiles stay frozen.
pub fn evolve_profiles(profiles: &ExpansionProfiles, tau_final: f64) -> Result<ExpansionProfiles> {
    let mut out = profiles.clone();
    for f in out.families.iter_mut() {
        if f.kind == FieldKind::GenuinelyNonlinear && tau_final > 0.0 {
            let flux = AffineFlux::burgers_covering(profiles.nu, f.initial.sup_norm())?;
            f.evolved = Some(scalar_evolve(&f.initial, &flux, tau_final)?);
        }
    }
    out.tau_span = tau_final;
    Ok(out)
}

/// `U⁰ + ε Σ_j σ_j(εt, x − λ_j⁰ t) r_j⁰`, exact on the merged breakpoints.
pub fn assemble_expansion(profiles: &ExpansionProfiles, t: f64) -> Result<PiecewiseConstantFn> {
    let shifted = profiles.physical_profiles(t)?;
    Ok(superpose(profiles, &shifted, |_, _| {}))
}

/// Sums `U⁰ + ε Σ σ_j r_j⁰` and lets `extra` add further terms from the
/// current profile values.
fn superpose(profiles: &ExpansionProfiles, shifted: &[PiecewiseConstantFn], mut extra: impl FnMut(&[&[f64]], &mut [f64])) -> PiecewiseConstantFn {
    let n = profiles.u0.len();
    let refs: Vec<&PiecewiseConstantFn> = shifted.iter().collect();
    let eps = profiles.eps;
    PiecewiseConstantFn::combine(&refs, n, |vals, out| {
        out.copy_from_slice(profiles.u0.as_slice());
        for (f, v) in profiles.families.iter().zip(vals) {
            let s = eps * v[0];
            for (o, r) in out.iter_mut().zip(f.r0.iter()) {
                *o += s * r;
            }
        }
        extra(vals, out);
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CorrectionKind {
    /// Per-group field anchored at a separation time, transported with `λ_j⁰`.
    Compact,
    /// Field built at a single time from the jumps of every profile.
    Noncompact,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrectionField {
    pub kind: CorrectionKind,
    /// The field `E` in physical `x` at `anchor_time`.
    pub field: PiecewiseConstantFn,
    pub anchor_time: f64,
    /// Multiplicity group (compact kind only).
    pub group: Option<usize>,
    /// Transport speed of the field (compact kind only).
    pub speed: f64,
    /// The reconstructed states `W` (compact kind only).
    pub states: Option<PiecewiseConstantFn>,
    /// `E(+∞)`; zero up to accumulation error for integrable profiles.
    pub tail: f64,
}

impl CorrectionField {
    pub fn sup_norm(&self) -> f64 {
        self.field.sup_norm()
    }

    /// `E` at time `t` in physical `x`.
    pub fn at(&self, t: f64) -> Result<PiecewiseConstantFn> {
        match self.kind {
            CorrectionKind::Compact => {
                if t < self.anchor_time {
                    return Err(Error::KindMismatch(format!("correction anchored at t = {} queried at t = {t}", self.anchor_time)));
                }
                Ok(self.field.shift(self.speed * (t - self.anchor_time)))
            }
            CorrectionKind::Noncompact => {
                if t != self.anchor_time {
                    return Err(Error::KindMismatch(format!("correction built at t = {} queried at t = {t}", self.anchor_time)));
                }
                Ok(self.field.clone())
            }
        }
    }
}

/// Second order approximation. Without corrections it adds
/// `(ε²/2) Σ_GNL σ_j² (r_j⁰·∇) r_j⁰`; with compact corrections it also adds
/// `ε² E^{(j)}(x − λ_j⁰(t − T₀))`; with one noncompact correction it is
/// `U⁰ + ε Σ σ_j r_j⁰ + ε² E(t, x)` instead.
pub fn assemble_auxiliary(profiles: &ExpansionProfiles, t: f64, corrections: &[CorrectionField]) -> Result<PiecewiseConstantFn> {
    let shifted = profiles.physical_profiles(t)?;
    let eps2 = profiles.eps * profiles.eps;
    let noncompact = corrections.iter().filter(|c| c.kind == CorrectionKind::Noncompact).count();
    if noncompact > 0 {
        if noncompact != corrections.len() || noncompact > 1 {
            return Err(Error::KindMismatch("a noncompact correction must be used alone".into()));
        }
        let base = superpose(profiles, &shifted, |_, _| {});
        return base.add(&corrections[0].at(t)?.scale(eps2));
    }
    let model = profiles.model();
    let quad: Vec<Option<State>> = profiles
        .families
        .iter()
        .map(|f| match f.kind {
            FieldKind::GenuinelyNonlinear => model.r_derivative(&profiles.u0, f.family, f.family).map(Some),
            FieldKind::LinearlyDegenerate => Ok(None),
        })
        .collect::<Result<_>>()?;
    let mut out = superpose(profiles, &shifted, |vals, out| {
        for (q, v) in quad.iter().zip(vals) {
            if let Some(q) = q {
                let s = 0.5 * eps2 * v[0] * v[0];
                for (o, d) in out.iter_mut().zip(q.iter()) {
                    *o += s * d;
                }
            }
        }
    });
    for c in corrections {
        out = out.add(&c.at(t)?.scale(eps2))?;
    }
    Ok(out)
}

fn group_support(parts: &[PiecewiseConstantFn]) -> Option<(f64, f64)> {
    parts.iter().filter_map(|p| p.support()).reduce(|(a, b), (c, d)| (a.min(c), b.max(d)))
}

/// Builds `E^{(j)} = (W − U⁰ − ε Σ_i σ_{j_i} r_{j_i}⁰) / ε²` at `t0` for every
/// linearly degenerate group. `W` starts from `U⁰`, crosses each jump of the
/// group's profiles by the group components of its wave decomposition only,
/// and is pinned back to `U⁰` right of the group's support.
pub fn build_correction_compact(profiles: &ExpansionProfiles, t0: f64) -> Result<Vec<CorrectionField>> {
    let needed = separation_time(profiles)?;
    if t0 < needed * (1.0 - 1e-12) {
        return Err(Error::SupportsNotSeparated { t0, needed });
    }
    if profiles.eps == 0.0 {
        return Err(Error::Config("corrections need a positive amplitude".into()));
    }
    let shifted = profiles.physical_profiles(t0)?;
    let model = profiles.model();
    let solver = RiemannSolver::new(profiles.model_arc()).with_delta(CORRECTION_DELTA);
    let eps = profiles.eps;
    let n = model.dim();
    let mut out = Vec::new();
    for (g, range) in model.groups().into_iter().enumerate() {
        if range.clone().any(|j| profiles.families[j].kind != FieldKind::LinearlyDegenerate) {
            continue;
        }
        let members: Vec<usize> = range.clone().collect();
        let parts: Vec<PiecewiseConstantFn> = members.iter().map(|&j| shifted[j].clone()).collect();
        let lambda0 = profiles.families[members[0]].lambda0;
        let Some((a, b)) = group_support(&parts) else {
            let zero = PiecewiseConstantFn::constant(&vec![0.0; n]);
            out.push(CorrectionField {
                kind: CorrectionKind::Compact,
                field: zero,
                anchor_time: t0,
                group: Some(g),
                speed: lambda0,
                states: Some(PiecewiseConstantFn::constant(profiles.u0.as_slice())),
                tail: 0.0,
            });
            continue;
        };
        let mut xs: Vec<f64> = parts.iter().flat_map(|p| p.breakpoints().iter().copied()).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut w = profiles.u0.clone();
        let mut rows_w: Vec<Vec<f64>> = vec![w.as_slice().to_vec()];
        let mut rows_e: Vec<Vec<f64>> = vec![vec![0.0; n]];
        for &x in &xs {
            let mut jump = State::zeros(n);
            let mut first = profiles.u0.clone();
            for (&j, p) in members.iter().zip(&parts) {
                let r = &profiles.families[j].r0;
                jump += r * (eps * (p.eval(x)[0] - p.eval_left(x)[0]));
                first += r * (eps * p.eval(x)[0]);
            }
            let betas = solver.strength_decompose(&w, &(&w + &jump))?;
            let mut kept = vec![0.0; n];
            for &j in &members {
                kept[j] = betas[j];
            }
            w = if x >= b { profiles.u0.clone() } else { solver.psi(&w, &kept)? };
            let e = (&w - &first) / (eps * eps);
            rows_w.push(w.as_slice().to_vec());
            rows_e.push(e.as_slice().to_vec());
        }
        debug_assert!(xs.first().is_some_and(|&x| x == a));
        let states = PiecewiseConstantFn::from_rows(n, xs.clone(), rows_w)?;
        let field = PiecewiseConstantFn::from_rows(n, xs, rows_e)?;
        out.push(CorrectionField {
            kind: CorrectionKind::Compact,
            field,
            anchor_time: t0,
            group: Some(g),
            speed: lambda0,
            states: Some(states),
            tail: 0.0,
        });
    }
    Ok(out)
}

/// Builds `E(t, ·)` from its jumps: at a jump of `σ_k` by `Δσ`,
/// `ΔE = Σ_{j≠k} σ_j Δσ (r_j⁰·∇) r_k⁰ + ½ Δ(σ_k²) (r_k⁰·∇) r_k⁰`, accumulated
/// left to right from `E(−∞) = 0`. Jumps of several families at the same `x`
/// are applied in increasing family order, each seeing the others' values
/// already updated.
pub fn build_correction_noncompact(profiles: &ExpansionProfiles, t: f64) -> Result<CorrectionField> {
    let shifted = profiles.physical_profiles(t)?;
    let model = profiles.model();
    let n = model.dim();
    let mut d = vec![vec![State::zeros(n); n]; n];
    for (j, row) in d.iter_mut().enumerate() {
        for (k, slot) in row.iter_mut().enumerate() {
            *slot = model.r_derivative(&profiles.u0, j, k)?;
        }
    }
    let mut jumps: Vec<(f64, usize)> = shifted.iter().enumerate().flat_map(|(k, p)| p.breakpoints().iter().map(move |&x| (x, k))).collect();
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut cur: Vec<f64> = shifted.iter().map(|p| p.left_end()[0]).collect();
    let mut e = State::zeros(n);
    let mut xs: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<f64>> = vec![vec![0.0; n]];
    for (x, k) in jumps {
        let plus = shifted[k].eval(x)[0];
        let minus = cur[k];
        let ds = plus - minus;
        for (j, &sj) in cur.iter().enumerate() {
            if j != k {
                e += &d[j][k] * (sj * ds);
            }
        }
        e += &d[k][k] * (0.5 * (plus * plus - minus * minus));
        cur[k] = plus;
        if xs.last() == Some(&x) {
            *rows.last_mut().expect("row exists") = e.as_slice().to_vec();
        } else {
            xs.push(x);
            rows.push(e.as_slice().to_vec());
        }
    }
    let field = PiecewiseConstantFn::from_rows(n, xs, rows)?;
    let tail = field.right_end().iter().map(|v| v.abs()).sum();
    Ok(CorrectionField {
        kind: CorrectionKind::Noncompact,
        field,
        anchor_time: t,
        group: None,
        speed: 0.0,
        states: None,
        tail,
    })
}

/// Speed in the `(t, x)` plane of a profile front: `λ⁰ + εσ₋ + εΔσ/2` for a
/// genuinely nonlinear family, `λ⁰` for a linearly degenerate one.
pub fn front_slope_xt(lambda0: f64, eps: f64, sigma_left: f64, sigma_jump: f64, kind: FieldKind) -> f64 {
    match kind {
        FieldKind::GenuinelyNonlinear => lambda0 + eps * sigma_left + 0.5 * eps * sigma_jump,
        FieldKind::LinearlyDegenerate => lambda0,
    }
}

/// Earliest time after which the enclosures
/// `[λ_j⁰t + a_j − s_j εt, λ_j⁰t + b_j + s_j εt]` of profiles from distinct
/// groups stay pairwise disjoint, with `s_j = ‖σ_j(0)‖_∞` for genuinely
/// nonlinear families and `0` otherwise.
pub fn separation_time(profiles: &ExpansionProfiles) -> Result<f64> {
    let mut encl = Vec::new();
    for f in &profiles.families {
        if f.initial.left_end()[0] != 0.0 || f.initial.right_end()[0] != 0.0 {
            return Err(Error::NoSeparation(format!("profile of family {} is not compactly supported", f.family)));
        }
        if let Some((a, b)) = f.initial.support() {
            let s = if f.kind == FieldKind::GenuinelyNonlinear { f.initial.sup_norm() } else { 0.0 };
            encl.push((f.group, f.lambda0, a, b, s));
        }
    }
    let mut t0: f64 = 0.0;
    for (i, &(gi, li, ai, bi, si)) in encl.iter().enumerate() {
        for &(gk, lk, ak, bk, sk) in &encl[i + 1..] {
            if gi == gk {
                continue;
            }
            let ((lj, bj, sj), (lk, ak, sk)) = if li < lk { ((li, bi, si), (lk, ak, sk)) } else { ((lk, bk, sk), (li, ai, si)) };
            let rate = lk - lj - profiles.eps * (sj + sk);
            if rate <= 0.0 {
                return Err(Error::NoSeparation(format!("enclosures moving at {lj} and {lk} never part")));
            }
            t0 = t0.max((bj - ak) / rate);
        }
    }
    Ok(t0)
}

/// `b_j = ½ l_j · ∇²F(u)(r_j, r_j)` by a second central difference along `r_j`.
pub fn b_coefficient(model: &dyn SystemModel, u: &State, j: usize) -> Result<f64> {
    let h = 1e-4;
    let r = model.right_eigenvector(u, j)?;
    let l: State = model.left_eigenvectors(u)?.row(j).transpose();
    let d2 = (model.flux(&(u + &r * h))? - model.flux(u)? * 2.0 + model.flux(&(u - &r * h))?) / (h * h);
    Ok(0.5 * l.dot(&d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, Euler1d, ModelParams, PSystem};

    fn psys() -> Arc<dyn SystemModel> {
        Arc::new(PSystem::new(2.0, 1.0).unwrap())
    }

    #[test]
    fn front_slopes() {
        let s = front_slope_xt(1.0, 0.1, 0.5, -0.2, FieldKind::GenuinelyNonlinear);
        assert!((s - 1.04).abs() < 1e-15);
        assert_eq!(front_slope_xt(0.3, 0.1, 0.5, -0.2, FieldKind::LinearlyDegenerate), 0.3);
        assert_eq!(front_slope_xt(0.3, 0.0, 0.5, -0.2, FieldKind::GenuinelyNonlinear), 0.3);
    }

    #[test]
    fn projection_along_one_eigenvector() {
        let m = psys();
        let r1 = m.right_eigenvector(&m.background(), 0).unwrap();
        let u1 = PiecewiseConstantFn::indicator(0.0, 1.0, &[0.0, 0.0], (&r1 * 0.25).as_slice()).unwrap();
        let p = project_initial(m, &u1, 10, 0.1).unwrap();
        assert_eq!(p.families[0].initial, PiecewiseConstantFn::indicator(0.0, 1.0, &[0.0], &[0.25]).unwrap());
        assert!(p.families[1].initial.is_constant() && p.families[1].initial.sup_norm() == 0.0);
    }

    #[test]
    fn euler_projection() {
        let m = Euler1d::new(1.4).unwrap();
        let arc: Arc<dyn SystemModel> = Arc::new(m);
        let u0 = m.background();
        let r = arc.right_eigenvectors(&u0).unwrap();
        let dir: State = (r.column(0) + r.column(2)) * 0.2;
        let u1 = PiecewiseConstantFn::indicator(0.0, 1.0, &[0.0; 3], dir.as_slice()).unwrap();
        let p = project_initial(arc, &u1, 12, 0.1).unwrap();
        let expect = PiecewiseConstantFn::indicator(0.0, 1.0, &[0.0], &[0.2]).unwrap().quantize_to_grid(12).unwrap();
        assert_eq!(p.families[0].initial, expect);
        assert_eq!(p.families[2].initial, expect);
        assert_eq!(p.families[1].initial.sup_norm(), 0.0);
    }

    #[test]
    fn separation_example() {
        let m = psys();
        // λ⁰ = ∓√2; build supports [0,1] for both families with sup 0.2
        let u1 = PiecewiseConstantFn::indicator(0.0, 1.0, &[0.0, 0.0], &[0.2, 0.0]).unwrap();
        let mut p = project_initial(m, &u1, 10, 0.1).unwrap();
        p.families[0].lambda0 = 0.0;
        p.families[1].lambda0 = 1.0;
        let bump = PiecewiseConstantFn::indicator(0.0, 1.0, &[0.0], &[0.2]).unwrap();
        p.families[0].initial = bump.quantize_to_grid(10).unwrap();
        p.families[1].initial = bump.quantize_to_grid(10).unwrap();
        let s = p.families[0].initial.sup_norm();
        let t0 = separation_time(&p).unwrap();
        assert!((t0 - 1.0 / (1.0 - 0.2 * s)).abs() < 1e-12, "{t0}");
        p.families[1].lambda0 = 0.0;
        assert!(matches!(separation_time(&p), Err(Error::NoSeparation(_))));
    }

    #[test]
    fn b_coefficients() {
        for id in ["psystem", "euler1d", "steady-euler2d"] {
            let m = build_model(id, ModelParams::default()).unwrap();
            let u0 = m.background();
            for (j, k) in m.field_kinds().into_iter().enumerate() {
                let b = b_coefficient(m.as_ref(), &u0, j).unwrap();
                let want = if k == FieldKind::GenuinelyNonlinear { 0.5 } else { 0.0 };
                assert!((b - want).abs() <= 1e-6, "{id} family {j}: {b}");
            }
        }
    }
}
