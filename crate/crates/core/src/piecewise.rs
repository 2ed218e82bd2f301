//! Piecewise-constant functions on the real line.
//!
//! A [`PiecewiseConstantFn`] with breakpoints `x_1 < ... < x_m` carries `m + 1`
//! values of dimension `d`: `values[0]` on `(-inf, x_1)`, `values[i]` on
//! `[x_i, x_{i+1})`, `values[m]` on `[x_m, +inf)`. Functions are kept in
//! canonical form: adjacent values always differ in at least one component
//! (bit-exact comparison).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantFn {
    dim: usize,
    breakpoints: Vec<f64>,
    /// Row-major, `(breakpoints.len() + 1) * dim` entries.
    values: Vec<f64>,
}

/// Wire format: `{"dim": d, "breakpoints": [...], "values": [[...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PiecewiseJson {
    dim: usize,
    breakpoints: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl Serialize for PiecewiseConstantFn {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PiecewiseJson {
            dim: self.dim,
            breakpoints: self.breakpoints.clone(),
            values: self.values.chunks(self.dim).map(|c| c.to_vec()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PiecewiseConstantFn {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = PiecewiseJson::deserialize(deserializer)?;
        PiecewiseConstantFn::from_rows(raw.dim, raw.breakpoints, raw.values).map_err(serde::de::Error::custom)
    }
}

impl PiecewiseConstantFn {
    /// Builds a function from flat row-major values and canonicalizes it.
    pub fn new(dim: usize, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPiecewise("dimension must be positive".into()));
        }
        if values.len() != (breakpoints.len() + 1) * dim {
            return Err(Error::InvalidPiecewise(format!(
                "{} breakpoints need {} values of dim {}, got {} entries",
                breakpoints.len(),
                breakpoints.len() + 1,
                dim,
                values.len()
            )));
        }
        if breakpoints.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPiecewise("non-finite position or value".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPiecewise("breakpoints must be strictly increasing".into()));
        }
        Ok(Self::canonical(dim, breakpoints, values))
    }

    pub fn from_rows(dim: usize, breakpoints: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Self::new(dim, breakpoints, rows.concat())
    }

    /// Scalar function from breakpoints and values.
    pub fn scalar(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(1, breakpoints, values)
    }

    pub fn constant(value: &[f64]) -> Self {
        assert!(!value.is_empty() && value.iter().all(|v| v.is_finite()));
        Self { dim: value.len(), breakpoints: Vec::new(), values: value.to_vec() }
    }

    /// `base` everywhere except `base + height` on `[a, b)`.
    pub fn indicator(a: f64, b: f64, base: &[f64], height: &[f64]) -> Result<Self> {
        if base.len() != height.len() {
            return Err(Error::DimensionMismatch { expected: base.len(), got: height.len() });
        }
        let inner: Vec<f64> = base.iter().zip(height).map(|(x, h)| x + h).collect();
        Self::new(base.len(), vec![a, b], [base, &inner[..], base].concat())
    }

    /// Builds from a possibly non-canonical sequence where breakpoints may repeat
    /// (zero-length intervals are dropped, the later value wins).
    pub fn from_sorted_segments(dim: usize, breakpoints: &[f64], values: &[f64]) -> Result<Self> {
        if values.len() != (breakpoints.len() + 1) * dim {
            return Err(Error::InvalidPiecewise("segment count mismatch".into()));
        }
        let mut bps: Vec<f64> = Vec::with_capacity(breakpoints.len());
        let mut vals: Vec<f64> = values[..dim].to_vec();
        for (i, &x) in breakpoints.iter().enumerate() {
            let v = &values[(i + 1) * dim..(i + 2) * dim];
            if let Some(&last) = bps.last() {
                if x < last {
                    return Err(Error::InvalidPiecewise("segments out of order".into()));
                }
                if x == last {
                    let n = vals.len();
                    vals[n - dim..].copy_from_slice(v);
                    continue;
                }
            }
            bps.push(x);
            vals.extend_from_slice(v);
        }
        Self::new(dim, bps, vals)
    }

    fn canonical(dim: usize, breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        let needs_merge = (0..breakpoints.len()).any(|i| values[i * dim..(i + 1) * dim] == values[(i + 1) * dim..(i + 2) * dim]);
        if !needs_merge {
            return Self { dim, breakpoints, values };
        }
        let mut bps = Vec::with_capacity(breakpoints.len());
        let mut vals = values[..dim].to_vec();
        for (i, &x) in breakpoints.iter().enumerate() {
            let next = &values[(i + 1) * dim..(i + 2) * dim];
            if &vals[vals.len() - dim..] != next {
                bps.push(x);
                vals.extend_from_slice(next);
            }
        }
        Self { dim, breakpoints: bps, values: vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn jump_count(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn interval_count(&self) -> usize {
        self.breakpoints.len() + 1
    }

    /// Value on interval `i` (0 is the left unbounded interval).
    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn left_end(&self) -> &[f64] {
        self.value(0)
    }

    pub fn right_end(&self) -> &[f64] {
        self.value(self.breakpoints.len())
    }

    /// Right-continuous point evaluation.
    pub fn eval(&self, x: f64) -> &[f64] {
        let i = self.breakpoints.partition_point(|&b| b <= x);
        self.value(i)
    }

    /// Value immediately to the left of `x`.
    pub fn eval_left(&self, x: f64) -> &[f64] {
        let i = self.breakpoints.partition_point(|&b| b < x);
        self.value(i)
    }

    /// Scalar convenience accessor; panics unless `dim == 1`.
    pub fn eval_scalar(&self, x: f64) -> f64 {
        assert_eq!(self.dim, 1);
        self.eval(x)[0]
    }

    pub fn is_constant(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// Smallest closed interval outside of which the function equals its end
    /// values, or `None` if it is constant.
    pub fn support(&self) -> Option<(f64, f64)> {
        Some((*self.breakpoints.first()?, *self.breakpoints.last()?))
    }

    pub fn total_variation(&self) -> f64 {
        (0..self.breakpoints.len()).map(|i| l1_norm_diff(self.value(i), self.value(i + 1))).sum()
    }

    /// Largest absolute component over all intervals.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Sup-norm of the difference (componentwise max over intervals).
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        let mut best = 0.0_f64;
        sweep2(self, other, |_, _, a, b| {
            for (x, y) in a.iter().zip(b) {
                best = best.max((x - y).abs());
            }
        });
        Ok(best)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }

    /// Exact `∫|f - g|_1` over the whole line or over `window = [a, b]`.
    pub fn l1_distance(&self, other: &Self, window: Option<(f64, f64)>) -> Result<f64> {
        self.check_dim(other)?;
        let (lo, hi) = match window {
            Some((a, b)) => (a, b),
            None => {
                if self.left_end() != other.left_end() || self.right_end() != other.right_end() {
                    return Err(Error::NonIntegrableDifference);
                }
                (f64::NEG_INFINITY, f64::INFINITY)
            }
        };
        if hi <= lo {
            return Ok(0.0);
        }
        let mut total = 0.0;
        sweep2(self, other, |x0, x1, a, b| {
            let (s, e) = (x0.max(lo), x1.min(hi));
            if e > s {
                let d = l1_norm_diff(a, b);
                if d > 0.0 {
                    total += d * (e - s);
                }
            }
        });
        Ok(total)
    }

    /// `∫ f` componentwise over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        if b <= a {
            return out;
        }
        let mut x0 = f64::NEG_INFINITY;
        for i in 0..self.interval_count() {
            let x1 = self.breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
            let (s, e) = (x0.max(a), x1.min(b));
            if e > s {
                for (o, v) in out.iter_mut().zip(self.value(i)) {
                    *o += v * (e - s);
                }
            }
            x0 = x1;
        }
        out
    }

    /// Rounds each value to the nearest multiple of `2^-nu`, ties away from zero.
    pub fn quantize_to_grid(&self, nu: u32) -> Result<Self> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.dim });
        }
        let scale = grid_scale(nu);
        let values = self.values.iter().map(|v| (v * scale).round() / scale).collect();
        Self::new(1, self.breakpoints.clone(), values)
    }

    pub fn shift(&self, dx: f64) -> Self {
        if dx == 0.0 {
            return self.clone();
        }
        let bps: Vec<f64> = self.breakpoints.iter().map(|b| b + dx).collect();
        if bps.windows(2).all(|w| w[0] < w[1]) {
            Self { dim: self.dim, breakpoints: bps, values: self.values.clone() }
        } else {
            // rounding collapsed two breakpoints
            Self::from_sorted_segments(self.dim, &bps, &self.values).expect("shift keeps order")
        }
    }

    pub fn map_values(&self, out_dim: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let mut vals = vec![0.0; self.interval_count() * out_dim];
        for i in 0..self.interval_count() {
            f(self.value(i), &mut vals[i * out_dim..(i + 1) * out_dim]);
        }
        Self::new(out_dim, self.breakpoints.clone(), vals).expect("map_values produced non-finite value")
    }

    /// Pointwise combination of several functions on their merged breakpoints.
    /// `f` receives the current value of every input and writes the output value.
    pub fn combine(inputs: &[&Self], out_dim: usize, mut f: impl FnMut(&[&[f64]], &mut [f64])) -> Self {
        assert!(!inputs.is_empty());
        let mut merged: Vec<f64> = inputs.iter().flat_map(|p| p.breakpoints.iter().copied()).collect();
        merged.sort_by(f64::total_cmp);
        merged.dedup();
        let mut idx = vec![0usize; inputs.len()];
        let mut current: Vec<&[f64]> = inputs.iter().map(|p| p.value(0)).collect();
        let mut vals = vec![0.0; (merged.len() + 1) * out_dim];
        f(&current, &mut vals[..out_dim]);
        for (k, &x) in merged.iter().enumerate() {
            for (j, p) in inputs.iter().enumerate() {
                while idx[j] < p.breakpoints.len() && p.breakpoints[idx[j]] <= x {
                    idx[j] += 1;
                }
                current[j] = p.value(idx[j]);
            }
            f(&current, &mut vals[(k + 1) * out_dim..(k + 2) * out_dim]);
        }
        Self::new(out_dim, merged, vals).expect("combine produced non-finite value")
    }

    /// `self + other` (same dimension).
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::combine(&[self, other], self.dim, |v, out| {
            for (o, (a, b)) in out.iter_mut().zip(v[0].iter().zip(v[1])) {
                *o = a + b;
            }
        }))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_values(self.dim, |v, out| {
            for (o, x) in out.iter_mut().zip(v) {
                *o = c * x;
            }
        })
    }

    /// Component `k` as a scalar function.
    pub fn component(&self, k: usize) -> Self {
        self.map_values(1, |v, out| out[0] = v[k])
    }
}

fn l1_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `2^nu` as a float.
pub fn grid_scale(nu: u32) -> f64 {
    2.0_f64.powi(nu as i32)
}

/// Visits the common refinement of two functions, interval by interval.
fn sweep2(f: &PiecewiseConstantFn, g: &PiecewiseConstantFn, mut visit: impl FnMut(f64, f64, &[f64], &[f64])) {
    let (mut i, mut j) = (0usize, 0usize);
    let mut x0 = f64::NEG_INFINITY;
    loop {
        let xf = f.breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
        let xg = g.breakpoints.get(j).copied().unwrap_or(f64::INFINITY);
        let x1 = xf.min(xg);
        visit(x0, x1, f.value(i), g.value(j));
        if x1 == f64::INFINITY {
            break;
        }
        if xf == x1 {
            i += 1;
        }
        if xg == x1 {
            j += 1;
        }
        x0 = x1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn box_fn(a: f64, b: f64, h: f64) -> PiecewiseConstantFn {
        PiecewiseConstantFn::indicator(a, b, &[0.0], &[h]).unwrap()
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(box_fn(0.0, 1.0, -0.7).total_variation(), 1.4);
        assert_eq!(PiecewiseConstantFn::constant(&[3.0]).total_variation(), 0.0);
        let stairs = PiecewiseConstantFn::scalar(vec![0.0, 1.0], vec![0.0, 0.25, 0.5]).unwrap();
        assert_eq!(stairs.total_variation(), 0.5);
    }

    #[test]
    fn l1_distance_examples() {
        let f = box_fn(0.0, 1.0, 1.0);
        let zero = PiecewiseConstantFn::constant(&[0.0]);
        assert_eq!(f.l1_distance(&f, None).unwrap(), 0.0);
        assert_eq!(f.l1_distance(&zero, None).unwrap(), 1.0);
        assert_eq!(f.l1_distance(&box_fn(0.5, 1.5, 1.0), None).unwrap(), 1.0);
        assert_eq!(f.l1_distance(&zero, Some((0.25, 0.5))).unwrap(), 0.25);
    }

    #[test]
    fn l1_requires_compact_difference() {
        let a = PiecewiseConstantFn::scalar(vec![0.0], vec![0.0, 1.0]).unwrap();
        let b = PiecewiseConstantFn::constant(&[0.0]);
        assert_eq!(a.l1_distance(&b, None), Err(Error::NonIntegrableDifference));
        assert_eq!(a.l1_distance(&b, Some((-1.0, 2.0))).unwrap(), 2.0);
    }

    #[test]
    fn quantization_examples() {
        let q = |v: f64, nu| PiecewiseConstantFn::scalar(vec![0.0], vec![0.0, v]).unwrap().quantize_to_grid(nu).unwrap().value(1)[0];
        assert_eq!(q(0.3, 2), 0.25);
        assert_eq!(q(0.125, 2), 0.25);
        assert_eq!(q(-0.125, 2), -0.25);
        assert_eq!(q(0.75, 2), 0.75);
    }

    #[test]
    fn canonical_merges_equal_neighbours() {
        let f = PiecewiseConstantFn::scalar(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.breakpoints(), &[0.0, 2.0]);
        assert_eq!(f.eval_scalar(1.5), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PiecewiseConstantFn::scalar(vec![1.0, 0.0], vec![0.0, 1.0, 2.0]).is_err());
        assert!(PiecewiseConstantFn::scalar(vec![0.0], vec![f64::NAN, 1.0]).is_err());
        assert!(PiecewiseConstantFn::scalar(vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = PiecewiseConstantFn::from_rows(2, vec![0.0, 1.5], vec![vec![1.0, 0.0], vec![1.2, 0.1], vec![1.0, 0.0]]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"dim\":2"));
        let back: PiecewiseConstantFn = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn eval_is_right_continuous() {
        let f = box_fn(0.0, 1.0, 2.0);
        assert_eq!(f.eval_scalar(0.0), 2.0);
        assert_eq!(f.eval_scalar(1.0), 0.0);
        assert_eq!(f.eval_left(0.0)[0], 0.0);
    }

    #[test]
    fn combine_superposes() {
        let f = box_fn(0.0, 2.0, 1.0);
        let g = box_fn(1.0, 3.0, 0.5);
        let s = f.add(&g).unwrap();
        assert_eq!(s.breakpoints(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(s.eval_scalar(1.5), 1.5);
        assert_eq!(s.integral(-10.0, 10.0)[0], 3.0);
    }

    /// Dyadic data keeps every sum exact, so the metric axioms can be checked
    /// without a tolerance.
    fn dyadic_fn() -> impl Strategy<Value = PiecewiseConstantFn> {
        (proptest::collection::vec((-64i32..64, -16i32..16), 0..8), -16i32..16).prop_map(|(pts, end)| {
            let mut xs: Vec<i32> = pts.iter().map(|p| p.0).collect();
            xs.sort();
            xs.dedup();
            let bps: Vec<f64> = xs.iter().map(|&x| x as f64 / 8.0).collect();
            let mut vals: Vec<f64> = vec![end as f64 / 4.0];
            vals.extend(pts.iter().take(bps.len()).map(|p| p.1 as f64 / 4.0));
            vals.truncate(bps.len());
            vals.push(end as f64 / 4.0);
            PiecewiseConstantFn::scalar(bps, vals).unwrap()
        })
    }

    proptest! {
        #[test]
        fn triangle_inequality(f in dyadic_fn(), g in dyadic_fn(), h in dyadic_fn()) {
            let w = Some((-10.0, 10.0));
            let fh = f.l1_distance(&h, w).unwrap();
            let fg = f.l1_distance(&g, w).unwrap();
            let gh = g.l1_distance(&h, w).unwrap();
            prop_assert!(fh <= fg + gh);
            prop_assert_eq!(f.l1_distance(&g, w).unwrap(), g.l1_distance(&f, w).unwrap());
        }

        #[test]
        fn canonicalization_idempotent(f in dyadic_fn()) {
            let again = PiecewiseConstantFn::new(1, f.breakpoints().to_vec(), f.values_flat().to_vec()).unwrap();
            prop_assert_eq!(again, f);
        }

        #[test]
        fn quantization_bounds(vals in proptest::collection::vec(-2.0f64..2.0, 1..10), nu in 1u32..10) {
            let bps: Vec<f64> = (0..vals.len() - 1).map(|i| i as f64).collect();
            let f = PiecewiseConstantFn::scalar(bps, vals).unwrap();
            let q = f.quantize_to_grid(nu).unwrap();
            let slack = 2.0f64.powi(1 - nu as i32) * f.jump_count() as f64;
            prop_assert!(q.total_variation() <= f.total_variation() + slack + 1e-12);
            prop_assert!(q.sup_distance(&f).unwrap() <= 2.0f64.powi(-(nu as i32) - 1) + 1e-15);
        }
    }
}
