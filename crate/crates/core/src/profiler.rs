//! Variation profiles `f̊(x,r) = sup_{|y−x|≤r} |f(y) − f(x)|`, their dual
//! level distances `f̄(x,ℓ)`, and the flatness preorder between points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FlatError, Result};
use crate::funcmodel::{Objective, Smoothness};
use crate::linalg::{axpy, dist, dot, norm, sub};
use crate::sphere::{refine, sphere_directions, AscentOptions};

/// Default number of sphere starts per radius.
pub const DEFAULT_BUDGET: usize = 32;

/// Ray samples per direction in the interior pass for nonsmooth handles.
const RAY_SAMPLES: usize = 32;

/// Result of a ball search. `value == |f(witness) − f(x)|` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct BallMax {
    pub value: f64,
    pub witness: Vec<f64>,
}

struct BallProblem<'a> {
    f: &'a Objective,
    x: &'a [f64],
    f0: f64,
    r: f64,
}

impl BallProblem<'_> {
    fn point(&self, s: &[f64]) -> Vec<f64> {
        axpy(self.r, s, self.x)
    }

    fn variation(&self, s: &[f64]) -> f64 {
        let v = (self.f.eval(&self.point(s)) - self.f0).abs();
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    }

    fn variation_grad(&self, s: &[f64]) -> Vec<f64> {
        let y = self.point(s);
        let sign = if self.f.eval(&y) >= self.f0 { 1.0 } else { -1.0 };
        self.f
            .gradient(&y)
            .into_iter()
            .map(|g| sign * self.r * g)
            .collect()
    }

    /// Refined sphere value of one start, followed by a ray scan for
    /// nonsmooth handles. Returns a scaled direction with `|s| ≤ 1`.
    fn search_from(&self, v0: &[f64], opts: &AscentOptions) -> (f64, Vec<f64>) {
        let value = |s: &[f64]| self.variation(s);
        let grad = |s: &[f64]| self.variation_grad(s);
        let (mut best, mut s_best) = refine(v0, &value, Some(&grad), opts);
        if self.f.smoothness() != Smoothness::Smooth {
            for ray in [v0.to_vec(), s_best.clone()] {
                for j in 1..RAY_SAMPLES {
                    let t = j as f64 / RAY_SAMPLES as f64;
                    let s: Vec<f64> = ray.iter().map(|a| t * a).collect();
                    let v = self.variation(&s);
                    if v > best {
                        best = v;
                        s_best = s;
                    }
                }
            }
        }
        (best, s_best)
    }
}

fn check_point(f: &Objective, x: &[f64]) -> Result<()> {
    if x.len() != f.dim() {
        return Err(FlatError::DimensionMismatch {
            expected: f.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|a| !a.is_finite()) {
        return Err(FlatError::InvalidArgument {
            field: "x",
            reason: "point has non-finite coordinates".into(),
        });
    }
    Ok(())
}

fn ball_search(f: &Objective, x: &[f64], r: f64, starts: &[Vec<f64>]) -> BallMax {
    let f0 = f.eval(x);
    if r == 0.0 {
        return BallMax {
            value: 0.0,
            witness: x.to_vec(),
        };
    }
    let prob = BallProblem { f, x, f0, r };
    let opts = AscentOptions::default();
    let results: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .map(|v0| prob.search_from(v0, &opts))
        .collect();
    let mut best = 0;
    for (i, res) in results.iter().enumerate() {
        if res.0 > results[best].0 {
            best = i;
        }
    }
    let witness = prob.point(&results[best].1);
    let value = (f.eval(&witness) - f0).abs();
    if value.is_finite() {
        BallMax { value, witness }
    } else {
        BallMax {
            value: 0.0,
            witness: x.to_vec(),
        }
    }
}

/// Best found `|f(y) − f(x)|` over the closed ball `B̄_r(x)` with its witness.
/// The value is a lower bound on the supremum and never decreases when the
/// budget grows.
pub fn ball_max_variation(
    f: &Objective,
    x: &[f64],
    r: f64,
    budget: usize,
    seed: u64,
) -> Result<BallMax> {
    check_point(f, x)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(FlatError::InvalidArgument {
            field: "r",
            reason: format!("radius must be finite and nonnegative, got {r}"),
        });
    }
    if budget == 0 {
        return Err(FlatError::InvalidArgument {
            field: "budget",
            reason: "budget must be at least 1".into(),
        });
    }
    let starts = sphere_directions(f.dim(), budget, seed);
    Ok(ball_search(f, x, r, &starts))
}

/// Geometric grid of `m` points from `r_min` to `r_max`, endpoints exact.
pub fn geometric_grid(r_min: f64, r_max: f64, m: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0) || !r_min.is_finite() {
        return Err(FlatError::InvalidArgument {
            field: "r_min",
            reason: format!("must be positive, got {r_min}"),
        });
    }
    if !(r_max > r_min) || !r_max.is_finite() {
        return Err(FlatError::InvalidArgument {
            field: "r_max",
            reason: format!("must exceed r_min = {r_min}, got {r_max}"),
        });
    }
    if m < 2 {
        return Err(FlatError::InvalidArgument {
            field: "m",
            reason: format!("grid needs at least 2 points, got {m}"),
        });
    }
    let ratio = (r_max / r_min).ln();
    let mut grid: Vec<f64> = (0..m)
        .map(|i| r_min * (ratio * i as f64 / (m - 1) as f64).exp())
        .collect();
    grid[0] = r_min;
    grid[m - 1] = r_max;
    Ok(grid)
}

/// Paired primal and dual grids around a base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessProfile {
    pub base: Vec<f64>,
    pub base_value: f64,
    pub radii: Vec<f64>,
    /// Search results before the cumulative max.
    pub raw_values: Vec<f64>,
    pub raw_witnesses: Vec<Vec<f64>>,
    /// Nondecreasing values; `witnesses[i]` realizes `values[i]`.
    pub values: Vec<f64>,
    pub witnesses: Vec<Vec<f64>>,
    /// Strictly increasing positive levels.
    pub dual_levels: Vec<f64>,
    /// `f̄(x,ℓ)` per level; `+∞` when the profile vanishes identically.
    pub dual_values: Vec<f64>,
}

/// Dual value at an arbitrary level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualValue {
    Finite(f64),
    /// The level is never reached on the grid: `f̄ ≥ r_max`.
    AtLeast(f64),
    Infinite,
}

impl FlatnessProfile {
    pub fn r_max(&self) -> f64 {
        *self.radii.last().expect("profile grid is nonempty")
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.max_value() <= 0.0
    }

    /// Piecewise-linear `f̊(x,·)` through `(0,0)` and the grid; `None` past `r_max`.
    pub fn fcirc_at(&self, r: f64) -> Option<f64> {
        if r < 0.0 || r > self.r_max() {
            return None;
        }
        let (mut r0, mut v0) = (0.0, 0.0);
        for (&ri, &vi) in self.radii.iter().zip(&self.values) {
            if r <= ri {
                return Some(v0 + (vi - v0) * (r - r0) / (ri - r0));
            }
            r0 = ri;
            v0 = vi;
        }
        Some(v0)
    }

    /// `f̄(x,ℓ) = inf{r ≥ 0 : f̊(x,r) ≥ ℓ}` for the interpolated profile.
    pub fn fbar_at(&self, ell: f64) -> DualValue {
        if ell <= 0.0 {
            return DualValue::Finite(0.0);
        }
        if self.is_constant() {
            return DualValue::Infinite;
        }
        let (mut r0, mut v0) = (0.0, 0.0);
        for (&ri, &vi) in self.radii.iter().zip(&self.values) {
            if vi >= ell {
                return DualValue::Finite(r0 + (ri - r0) * (ell - v0) / (vi - v0));
            }
            r0 = ri;
            v0 = vi;
        }
        DualValue::AtLeast(self.r_max())
    }
}

fn dual_grid(radii: &[f64], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut levels: Vec<f64> = Vec::new();
    for &v in values {
        if v > 0.0 && levels.last().is_none_or(|&l| v > l) {
            levels.push(v);
        }
    }
    if levels.is_empty() {
        // A single probe level records f̄ = ∞ for a vanishing profile.
        return (vec![f64::MIN_POSITIVE], vec![f64::INFINITY]);
    }
    let tmp = FlatnessProfile {
        base: vec![],
        base_value: 0.0,
        radii: radii.to_vec(),
        raw_values: vec![],
        raw_witnesses: vec![],
        values: values.to_vec(),
        witnesses: vec![],
        dual_levels: vec![],
        dual_values: vec![],
    };
    let duals = levels
        .iter()
        .map(|&l| match tmp.fbar_at(l) {
            DualValue::Finite(r) => r,
            DualValue::AtLeast(r) => r,
            DualValue::Infinite => f64::INFINITY,
        })
        .collect();
    (levels, duals)
}

/// Searches every radius of `radii`, warm-starting each radius from the
/// previous witness direction, then applies the cumulative max.
pub fn profile_on_grid(
    f: &Objective,
    x: &[f64],
    radii: &[f64],
    budget: usize,
    seed: u64,
) -> Result<FlatnessProfile> {
    check_point(f, x)?;
    if radii.is_empty() {
        return Err(FlatError::InvalidArgument {
            field: "radii",
            reason: "radius grid is empty".into(),
        });
    }
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FlatError::InvalidArgument {
            field: "radii",
            reason: "radii must be positive and strictly increasing".into(),
        });
    }
    if budget == 0 {
        return Err(FlatError::InvalidArgument {
            field: "budget",
            reason: "budget must be at least 1".into(),
        });
    }
    let base_value = f.eval(x);
    let mut starts = sphere_directions(f.dim(), budget, seed);
    let mut raw_values = Vec::with_capacity(radii.len());
    let mut raw_witnesses = Vec::with_capacity(radii.len());
    for &r in radii {
        let b = ball_search(f, x, r, &starts);
        if let Some(v) = crate::linalg::normalized(&sub(&b.witness, x)) {
            starts.truncate(budget);
            starts.push(v);
        }
        raw_values.push(b.value);
        raw_witnesses.push(b.witness);
    }
    let mut values = Vec::with_capacity(radii.len());
    let mut witnesses = Vec::with_capacity(radii.len());
    let mut best = 0;
    for i in 0..radii.len() {
        if raw_values[i] > raw_values[best] {
            best = i;
        }
        values.push(raw_values[best]);
        witnesses.push(raw_witnesses[best].clone());
    }
    let (dual_levels, dual_values) = dual_grid(radii, &values);
    Ok(FlatnessProfile {
        base: x.to_vec(),
        base_value,
        radii: radii.to_vec(),
        raw_values,
        raw_witnesses,
        values,
        witnesses,
        dual_levels,
        dual_values,
    })
}

/// Profile on a geometric grid of `m` radii in `[r_min, r_max]`.
pub fn profile(
    f: &Objective,
    x: &[f64],
    r_min: f64,
    r_max: f64,
    m: usize,
    budget: usize,
    seed: u64,
) -> Result<FlatnessProfile> {
    let radii = geometric_grid(r_min, r_max, m)?;
    profile_on_grid(f, x, &radii, budget, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub skipped: bool,
    /// `max |f̄(f̊(r)) − r|` over grid radii and midpoints.
    pub primal_residual: f64,
    /// `max |f̊(f̄(ℓ)) − ℓ|` over levels and midpoints.
    pub dual_residual: f64,
    pub r_scale: f64,
    pub ell_scale: f64,
    /// Indices `i` with `values[i+1] ≤ values[i]`, a sign of a critical level.
    pub non_strict: Vec<usize>,
    pub passed: bool,
}

/// Compares the interpolated profile with its interpolated inverse.
pub fn duality_check(p: &FlatnessProfile) -> DualityReport {
    let r_scale = p.r_max();
    let ell_scale = p.max_value();
    if p.is_constant() {
        return DualityReport {
            skipped: true,
            primal_residual: 0.0,
            dual_residual: 0.0,
            r_scale,
            ell_scale,
            non_strict: vec![],
            passed: true,
        };
    }
    let non_strict: Vec<usize> = p
        .values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] <= w[0])
        .map(|(i, _)| i)
        .collect();

    let mut rs: Vec<f64> = Vec::new();
    let mut prev = 0.0;
    for &r in &p.radii {
        rs.push(0.5 * (prev + r));
        rs.push(r);
        prev = r;
    }
    let mut primal: f64 = 0.0;
    for r in rs {
        let v = p.fcirc_at(r).expect("sample inside grid");
        if let DualValue::Finite(back) = p.fbar_at(v) {
            primal = primal.max((back - r).abs());
        }
    }

    let mut ls: Vec<f64> = Vec::new();
    let mut prev = 0.0;
    for &l in &p.dual_levels {
        ls.push(0.5 * (prev + l));
        ls.push(l);
        prev = l;
    }
    let mut dual: f64 = 0.0;
    for l in ls {
        if let DualValue::Finite(r) = p.fbar_at(l) {
            if let Some(back) = p.fcirc_at(r) {
                dual = dual.max((back - l).abs());
            }
        }
    }
    DualityReport {
        skipped: false,
        primal_residual: primal,
        dual_residual: dual,
        r_scale,
        ell_scale,
        non_strict,
        passed: primal <= 1e-3 * r_scale && dual <= 1e-3 * ell_scale,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// `x` is flatter than `y`.
    Flatter,
    /// `x` is sharper than `y`.
    Sharper,
    Equivalent,
    Crossing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreorderVerdict {
    pub relation: Relation,
    /// Largest grid radius up to which the comparison seen at the smallest
    /// radii holds.
    pub threshold: f64,
    /// Smallest radius where the difference changes sign beyond `tau`.
    pub crossing_radius: Option<f64>,
    /// `max` and `min` of `f̊(y,r) − f̊(x,r)` over the grid.
    pub margin_max: f64,
    pub margin_min: f64,
    pub tau: f64,
    /// `f(x)` and `f(y)` differ by more than `1e-9`.
    pub cross_level: bool,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
}

/// Decides the preorder from two profile value sequences on a shared grid.
pub fn verdict_from_values(radii: &[f64], fx: &[f64], fy: &[f64], cross_level: bool) -> PreorderVerdict {
    assert_eq!(radii.len(), fx.len());
    assert_eq!(radii.len(), fy.len());
    let scale = fx.iter().chain(fy).fold(0.0f64, |a, &b| a.max(b));
    let tau = 1e-9 + 1e-6 * scale;
    let diffs: Vec<f64> = fx.iter().zip(fy).map(|(a, b)| b - a).collect();
    let margin_max = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let margin_min = diffs.iter().copied().fold(f64::INFINITY, f64::min);
    let r_max = *radii.last().expect("nonempty grid");

    let first = diffs.iter().position(|d| d.abs() > tau);
    let (relation, threshold, crossing_radius) = match first {
        None => (Relation::Equivalent, r_max, None),
        Some(i) => {
            let s = diffs[i].signum();
            match diffs.iter().position(|d| s * d < -tau) {
                None => (
                    if s > 0.0 { Relation::Flatter } else { Relation::Sharper },
                    r_max,
                    None,
                ),
                Some(j) => (
                    Relation::Crossing,
                    if j == 0 { 0.0 } else { radii[j - 1] },
                    Some(radii[j]),
                ),
            }
        }
    };
    PreorderVerdict {
        relation,
        threshold,
        crossing_radius,
        margin_max,
        margin_min,
        tau,
        cross_level,
        fx: fx.to_vec(),
        fy: fy.to_vec(),
    }
}

/// Compares `f̊(x,·)` with `f̊(y,·)` on a shared radius grid.
pub fn compare(
    f: &Objective,
    x: &[f64],
    y: &[f64],
    radii: &[f64],
    budget: usize,
    seed: u64,
) -> Result<PreorderVerdict> {
    let px = profile_on_grid(f, x, radii, budget, seed)?;
    let py = profile_on_grid(f, y, radii, budget, seed)?;
    let cross = (px.base_value - py.base_value).abs() > 1e-9;
    Ok(verdict_from_values(radii, &px.values, &py.values, cross))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveCheckRow {
    pub r: f64,
    /// `||w − x| − r| / r`
    pub sphere_error: f64,
    /// `|cos∠(∇f(w), w − x)|`
    pub colinearity: f64,
    /// `r/λ(r)` with `λ(r) = |w − x| / |∇f(w)|`
    pub predicted_slope: f64,
    /// Finite-difference slope of the profile; `None` at the grid ends.
    pub observed_slope: Option<f64>,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub rows: Vec<CurveCheckRow>,
    pub on_sphere: bool,
    pub colinear: bool,
    pub slope_matches: bool,
    /// Radii whose witness gradient fell below `1e-12`.
    pub critical_contamination: Vec<f64>,
}

impl CurveReport {
    pub fn passed(&self) -> bool {
        self.on_sphere && self.colinear && self.slope_matches && self.critical_contamination.is_empty()
    }
}

/// Checks that each raw witness lies on the sphere, that the gradient there
/// points along `w − x`, and that the profile slope equals `r/λ(r)`.
pub fn curve_checks(f: &Objective, x: &[f64], p: &FlatnessProfile) -> Result<CurveReport> {
    check_point(f, x)?;
    if p.is_constant() {
        return Err(FlatError::LocallyConstant);
    }
    let m = p.radii.len();
    let mut rows = Vec::with_capacity(m);
    let mut contamination = Vec::new();
    for i in 0..m {
        let r = p.radii[i];
        let w = &p.raw_witnesses[i];
        let d = sub(w, x);
        let dn = norm(&d);
        let g = f.gradient(w);
        let gn = norm(&g);
        if gn < 1e-12 {
            contamination.push(r);
        }
        let colinearity = if gn > 0.0 && dn > 0.0 {
            dot(&g, &d).abs() / (gn * dn)
        } else {
            0.0
        };
        let predicted_slope = if dn > 0.0 { r * gn / dn } else { f64::INFINITY };
        let observed_slope = if i > 0 && i + 1 < m {
            let (v0, v1, v2) = (p.raw_values[i - 1], p.raw_values[i], p.raw_values[i + 1]);
            if v0 > 0.0 && v2 > 0.0 {
                let dlog = (v2.ln() - v0.ln()) / (p.radii[i + 1].ln() - p.radii[i - 1].ln());
                Some(v1 * dlog / r)
            } else {
                None
            }
        } else {
            None
        };
        rows.push(CurveCheckRow {
            r,
            sphere_error: (dist(w, x) - r).abs() / r,
            colinearity,
            predicted_slope,
            observed_slope,
            grad_norm: gn,
        });
    }
    let on_sphere = rows.iter().all(|row| row.sphere_error <= 1e-6);
    let colinear = rows.iter().all(|row| row.colinearity >= 1.0 - 1e-4);
    let slope_matches = rows.iter().all(|row| match row.observed_slope {
        Some(s) => (s - row.predicted_slope).abs() <= 0.05 * row.predicted_slope.abs(),
        None => true,
    });
    Ok(CurveReport {
        rows,
        on_sphere,
        colinear,
        slope_matches,
        critical_contamination: contamination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::build_catalog_objective;
    use std::sync::Arc;

    fn x2_squared() -> Objective {
        Objective::from_fn("x2sq", 2, |x: &[f64]| x[1] * x[1])
            .with_grad(Arc::new(|x: &[f64]| vec![0.0, 2.0 * x[1]]))
    }

    #[test]
    fn flat_not_strict_profile_is_r_squared() {
        let f = build_catalog_objective("flat_not_strict", &[]).unwrap();
        for x3 in [0.0, 1.0, 2.0] {
            let r = 0.05 / (1.0 + x3 * x3);
            let b = ball_max_variation(&f, &[0.0, 0.0, x3], r, 16, 0).unwrap();
            assert!((b.value - r * r).abs() < 1e-12, "{x3}: {}", b.value);
        }
    }

    #[test]
    fn constant_function_has_zero_profile() {
        let f = Objective::from_fn("c", 2, |_x: &[f64]| 1.5);
        let b = ball_max_variation(&f, &[0.3, 0.1], 0.5, 8, 0).unwrap();
        assert_eq!(b.value, 0.0);
        let p = profile(&f, &[0.0, 0.0], 0.01, 0.1, 4, 4, 0).unwrap();
        assert!(duality_check(&p).skipped);
        assert_eq!(p.dual_values, vec![f64::INFINITY]);
        assert!(matches!(curve_checks(&f, &[0.0, 0.0], &p), Err(FlatError::LocallyConstant)));
    }

    #[test]
    fn negative_radius_is_rejected() {
        let f = x2_squared();
        assert!(matches!(
            ball_max_variation(&f, &[0.0, 0.0], -1.0, 4, 0),
            Err(FlatError::InvalidArgument { field: "r", .. })
        ));
    }

    #[test]
    fn abs_dual_value() {
        let f = Objective::new("abs", 1, Arc::new(|x: &[f64]| x[0].abs()));
        let p = profile(&f, &[0.0], 0.01, 1.0, 12, 4, 0).unwrap();
        match p.fbar_at(0.3) {
            DualValue::Finite(r) => assert!((r - 0.3).abs() < 1e-12, "{r}"),
            other => panic!("{other:?}"),
        }
        assert_eq!(p.fbar_at(2.0), DualValue::AtLeast(1.0));
    }

    #[test]
    fn square_profile_duality_and_curves() {
        let f = x2_squared();
        let p = profile(&f, &[0.0, 0.0], 1e-3, 1e-1, 12, 8, 0).unwrap();
        for (r, v) in p.radii.iter().zip(&p.values) {
            assert!((v - r * r).abs() <= 1e-15, "{r} {v}");
        }
        let d = duality_check(&p);
        assert!(d.passed && d.primal_residual <= 1e-9 && d.dual_residual <= 1e-9, "{d:?}");
        let c = curve_checks(&f, &[0.0, 0.0], &p).unwrap();
        assert!(c.passed(), "{c:?}");
        assert!((c.rows[3].predicted_slope - 2.0 * p.radii[3]).abs() < 1e-12);
    }

    #[test]
    fn reflexive_comparison_is_equivalent() {
        let f = build_catalog_objective("mf4", &[]).unwrap();
        let radii = geometric_grid(0.01, 0.1, 4).unwrap();
        let v = compare(&f, &[1.0, 1.0], &[1.0, 1.0], &radii, 8, 0).unwrap();
        assert_eq!(v.relation, Relation::Equivalent);
        assert!(!v.cross_level);
    }

    #[test]
    fn verdict_logic() {
        let r = [0.1, 0.2, 0.3];
        assert_eq!(verdict_from_values(&r, &[1.0, 2.0, 3.0], &[1.5, 2.5, 3.5], false).relation, Relation::Flatter);
        assert_eq!(verdict_from_values(&r, &[1.5, 2.5, 3.5], &[1.0, 2.0, 3.0], false).relation, Relation::Sharper);
        let c = verdict_from_values(&r, &[1.0, 2.0, 3.0], &[1.5, 2.0, 2.5], false);
        assert_eq!(c.relation, Relation::Crossing);
        assert_eq!(c.crossing_radius, Some(0.3));
        assert_eq!(c.threshold, 0.2);
    }

    #[test]
    fn grid_validation() {
        assert!(geometric_grid(0.1, 0.1, 4).is_err());
        assert!(geometric_grid(0.0, 0.1, 4).is_err());
        assert!(geometric_grid(0.01, 0.1, 1).is_err());
        let g = geometric_grid(1e-3, 1e-1, 3).unwrap();
        assert!((g[1] - 1e-2).abs() < 1e-15);
    }
}
