//! First, second and k-th order flatness coefficients and the level-set
//! certificates built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FlatError, Result};
use crate::funcmodel::{Objective, OuterKind};
use crate::linalg::{axpy, dist, dot, norm, normalized, scaled};
use crate::profiler::FlatnessProfile;
use crate::sphere::{maximize_on_sphere, sphere_directions, AscentOptions};

/// Largest output dimension for exact sign-vector enumeration.
pub const MAX_ENUMERATED_OUTPUTS: usize = 20;

/// Gradient norm below `1e-6·(1+scale)` counts as a critical point.
pub const NEAR_CRITICAL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMethod {
    CompositeClosedForm,
    /// Norm of an analytic gradient.
    AnalyticGradient,
    PowerIteration,
    SphereSearch,
    FiniteDifference,
    /// Ratio sampling in shrinking balls.
    Sampling,
}

/// A flatness coefficient of order `k` at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessCoefficient {
    pub order: usize,
    pub value: f64,
    /// Unit direction realizing the value.
    pub direction: Vec<f64>,
    pub method: CoefficientMethod,
    /// The value is a heuristic lower estimate.
    pub estimate: bool,
    /// Set by [`hessian_lambda1`] away from critical points, where the value
    /// is the spectral radius rather than `λ₁`.
    pub not_critical: bool,
    pub converged: bool,
    /// A lower-order derivative did not vanish.
    pub lower_order_nonzero: bool,
    pub iterations: usize,
}

impl FlatnessCoefficient {
    fn new(order: usize, value: f64, direction: Vec<f64>, method: CoefficientMethod) -> Self {
        FlatnessCoefficient {
            order,
            value,
            direction,
            method,
            estimate: false,
            not_critical: false,
            converged: true,
            lower_order_nonzero: false,
            iterations: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LipMethod {
    /// Closed form when available, otherwise gradient norm or sampling.
    Auto,
    ClosedForm,
    Sampling,
}

/// `max_{λ∈{±1}^m} |Jᵀλ|`, the `(∞,2)` norm of `Jᵀ`, with its maximizer.
/// Exact for `m ≤ 20`; beyond that a single-flip ascent from the row signs.
pub fn infinity_two_norm(j: &crate::linalg::Mat) -> (f64, Vec<f64>, bool) {
    let (m, n) = j.shape();
    let image = |lam: &[f64]| -> Vec<f64> { j.tmatvec(lam) };
    if m == 0 {
        return (0.0, vec![0.0; n], true);
    }
    if m <= MAX_ENUMERATED_OUTPUTS {
        let mut best = (-1.0, vec![0.0; n]);
        // λ and −λ give the same norm, so fix λ₀ = 1.
        for mask in 0u32..(1u32 << (m - 1)) {
            let lam: Vec<f64> = (0..m)
                .map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            let w = image(&lam);
            let v = norm(&w);
            if v > best.0 {
                best = (v, w);
            }
        }
        return (best.0, best.1, true);
    }
    let mut lam = vec![1.0; m];
    let mut val = norm(&image(&lam));
    loop {
        let mut improved = false;
        for i in 0..m {
            lam[i] = -lam[i];
            let v = norm(&image(&lam));
            if v > val {
                val = v;
                improved = true;
            } else {
                lam[i] = -lam[i];
            }
        }
        if !improved {
            break;
        }
    }
    (val, image(&lam), false)
}

fn ball_sample(rng: &mut ChaCha8Rng, x: &[f64], rho: f64) -> Vec<f64> {
    let n = x.len();
    let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let u = normalized(&z).unwrap_or_else(|| vec![1.0 / (n as f64).sqrt(); n]);
    let t = rng.random::<f64>().powf(1.0 / n as f64);
    axpy(rho * t, &u, x)
}

fn sampled_lipschitz(f: &Objective, x: &[f64], seed: u64) -> (f64, Vec<f64>) {
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (0.0f64, {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        e
    });
    let scale = 1.0 + norm(x);
    for k in 0..8 {
        let rho = 1e-3 * scale * 0.5f64.powi(k);
        for _ in 0..256 {
            let y = ball_sample(&mut rng, x, rho);
            let z = if rng.random::<f64>() < 0.25 {
                x.to_vec()
            } else {
                ball_sample(&mut rng, x, rho)
            };
            let d = dist(&y, &z);
            if d == 0.0 {
                continue;
            }
            let q = (f.eval(&y) - f.eval(&z)).abs() / d;
            if q > best.0 {
                let diff: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a - b).collect();
                best = (q, normalized(&diff).expect("distinct points"));
            }
        }
    }
    best
}

/// Lipschitz modulus `lip f(x)`.
///
/// For `f = s·Σ|Fᵢ|` at a zero of `F` this is `s·max_λ |F′(x)ᵀλ|`.
pub fn lipschitz_modulus(f: &Objective, x: &[f64]) -> Result<FlatnessCoefficient> {
    lipschitz_modulus_with(f, x, LipMethod::Auto, 0)
}

pub fn lipschitz_modulus_with(
    f: &Objective,
    x: &[f64],
    method: LipMethod,
    seed: u64,
) -> Result<FlatnessCoefficient> {
    if x.len() != f.dim() {
        return Err(FlatError::DimensionMismatch {
            expected: f.dim(),
            got: x.len(),
        });
    }
    let closed = f
        .composite()
        .filter(|c| c.outer == OuterKind::AbsSum)
        .map(|c| (c, (c.inner)(x)));
    if method != LipMethod::Sampling {
        match closed {
            Some((c, z)) if z.iter().all(|a| a.abs() <= 1e-9) => {
                let (v, w, exact) = infinity_two_norm(&(c.jacobian)(x));
                let dir = normalized(&w).unwrap_or_else(|| {
                    let mut e = vec![0.0; x.len()];
                    e[0] = 1.0;
                    e
                });
                let mut coef = FlatnessCoefficient::new(1, c.scale.abs() * v, dir, CoefficientMethod::CompositeClosedForm);
                coef.estimate = !exact;
                return Ok(coef);
            }
            Some((_, z)) if method == LipMethod::ClosedForm => {
                let worst = z.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                return Err(FlatError::ClosedFormUnavailable(format!(
                    "inner map is not zero at x (|F(x)|∞ = {worst:e})"
                )));
            }
            None if method == LipMethod::ClosedForm => {
                return Err(FlatError::ClosedFormUnavailable(
                    "objective has no abs_sum composite structure".into(),
                ));
            }
            _ => {}
        }
        if method == LipMethod::Auto && f.smoothness() == crate::funcmodel::Smoothness::Smooth {
            if let Some(g) = f.grad(x) {
                let v = norm(&g);
                let dir = normalized(&g).unwrap_or_else(|| {
                    let mut e = vec![0.0; x.len()];
                    e[0] = 1.0;
                    e
                });
                return Ok(FlatnessCoefficient::new(1, v, dir, CoefficientMethod::AnalyticGradient));
            }
        }
    }
    let (v, dir) = sampled_lipschitz(f, x, seed);
    let mut coef = FlatnessCoefficient::new(1, v, dir, CoefficientMethod::Sampling);
    coef.estimate = true;
    Ok(coef)
}

fn seeded_start(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = 1.0 / (n as f64).sqrt();
    let v: Vec<f64> = (0..n)
        .map(|_| base + 1e-2 * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    normalized(&v).expect("perturbed ones vector is nonzero")
}

struct PowerResult {
    value: f64,
    vector: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn power_iterate(
    op: &dyn Fn(&[f64]) -> Vec<f64>,
    start: &[f64],
    shift: f64,
    tol: f64,
    max_iter: usize,
) -> PowerResult {
    let mut v = start.to_vec();
    let mut rho = f64::NAN;
    for it in 1..=max_iter {
        let mut w = op(&v);
        if shift != 0.0 {
            w = axpy(shift, &v, &w);
        }
        let next = dot(&v, &w);
        let Some(u) = normalized(&w) else {
            return PowerResult {
                value: 0.0,
                vector: v,
                iterations: it,
                converged: true,
            };
        };
        let done = (next - rho).abs() <= tol * (1.0 + next.abs());
        rho = next;
        v = u;
        if done {
            return PowerResult {
                value: rho - shift,
                vector: v,
                iterations: it,
                converged: true,
            };
        }
    }
    match ritz_refine(op, &v, shift) {
        Some((theta, u, residual)) if theta.abs() >= rho.abs() => PowerResult {
            value: theta - shift,
            vector: u,
            iterations: max_iter,
            converged: residual <= 1e-8 * (1.0 + theta.abs()),
        },
        _ => PowerResult {
            value: rho - shift,
            vector: v,
            iterations: max_iter,
            converged: false,
        },
    }
}

/// Largest dimension of the Krylov space used by [`ritz_refine`].
const RITZ_DIM: usize = 24;

/// Rayleigh–Ritz on the Krylov space of `op + shift` started at the last
/// power iterate. Returns the Ritz pair of largest magnitude and its residual.
/// Ritz values lie inside the spectrum, so this only sharpens a stalled power
/// sequence (small relative gap between the two largest eigenvalues).
fn ritz_refine(op: &dyn Fn(&[f64]) -> Vec<f64>, v: &[f64], shift: f64) -> Option<(f64, Vec<f64>, f64)> {
    let apply = |u: &[f64]| {
        let w = op(u);
        if shift != 0.0 {
            axpy(shift, u, &w)
        } else {
            w
        }
    };
    let k_max = RITZ_DIM.min(v.len());
    let mut basis: Vec<Vec<f64>> = vec![normalized(v)?];
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(k_max);
    while images.len() < basis.len() {
        let w = apply(basis.last().expect("nonempty basis"));
        images.push(w.clone());
        if basis.len() == k_max {
            break;
        }
        let mut r = w;
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&r, q);
                r = axpy(-c, q, &r);
            }
        }
        let scale = norm(images.last().expect("image just pushed"));
        match normalized(&r) {
            Some(q) if norm(&r) > 1e-12 * scale.max(f64::MIN_POSITIVE) => basis.push(q),
            _ => break,
        }
    }
    let k = basis.len();
    let mut t = crate::linalg::Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            t[(i, j)] = dot(&basis[i], &images[j]);
        }
    }
    let eig = crate::linalg::jacobi_symmetric_eigen(&t.symmetrized()).ok()?;
    let (idx, theta) = eig
        .values
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
    let y = eig.vectors.col(idx);
    let mut u = vec![0.0; v.len()];
    let mut au = vec![0.0; v.len()];
    for (c, (q, aq)) in y.iter().zip(basis.iter().zip(&images)) {
        u = axpy(*c, q, &u);
        au = axpy(*c, aq, &au);
    }
    let u_norm = norm(&u);
    if !(u_norm > 0.0) {
        return None;
    }
    let u = scaled(&u, 1.0 / u_norm);
    let au = scaled(&au, 1.0 / u_norm);
    let residual = norm(&axpy(-theta, &u, &au));
    Some((theta, u, residual))
}

/// Largest Hessian eigenvalue by power iteration on `hess_vec`.
///
/// At near-critical points the value is `λ₁(∇²f(x))`, which equals `‖f″(x)‖`
/// at a local minimum. Elsewhere the spectral radius is returned and
/// `not_critical` is set.
pub fn hessian_lambda1(f: &Objective, x: &[f64], tol: f64, max_iter: usize) -> Result<FlatnessCoefficient> {
    hessian_lambda1_seeded(f, x, tol, max_iter, 0)
}

pub fn hessian_lambda1_seeded(
    f: &Objective,
    x: &[f64],
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<FlatnessCoefficient> {
    if x.len() != f.dim() {
        return Err(FlatError::DimensionMismatch {
            expected: f.dim(),
            got: x.len(),
        });
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(FlatError::InvalidArgument {
            field: "tol",
            reason: "tolerance must be positive and max_iter at least 1".into(),
        });
    }
    let op = |v: &[f64]| f.hess_vec_or_fd(x, v);
    let start = seeded_start(x.len(), seed);
    let dominant = power_iterate(&op, &start, 0.0, tol, max_iter);
    let g = f.gradient(x);
    let scale = f.eval(x).abs();
    let critical = norm(&g) <= NEAR_CRITICAL * (1.0 + scale);
    let (top, bottom) = if dominant.value >= 0.0 {
        if critical {
            let low = PowerResult {
                value: 0.0,
                vector: dominant.vector.clone(),
                iterations: 0,
                converged: true,
            };
            (dominant, low)
        } else {
            // λ_min is dominant for the operator shifted by −λ_max
            let low = power_iterate(&op, &start, -dominant.value, tol, max_iter);
            (dominant, low)
        }
    } else {
        let high = power_iterate(&op, &start, -dominant.value, tol, max_iter);
        (high, dominant)
    };
    let iterations = top.iterations + bottom.iterations;
    let converged = top.converged && bottom.converged;
    let mut coef = if critical || top.value.abs() >= bottom.value.abs() {
        FlatnessCoefficient::new(2, top.value, top.vector, CoefficientMethod::PowerIteration)
    } else {
        FlatnessCoefficient::new(2, bottom.value.abs(), bottom.vector, CoefficientMethod::PowerIteration)
    };
    if !critical {
        coef.value = coef.value.abs();
    }
    coef.not_critical = !critical;
    coef.converged = converged;
    coef.iterations = iterations;
    if f.hess_vec(x, &coef.direction).is_none() {
        coef.method = CoefficientMethod::FiniteDifference;
    }
    Ok(coef)
}

/// `‖f⁽ᵏ⁾(x)‖ = max_{|v|=1} |f⁽ᵏ⁾(x)vᵏ|` by multi-start sphere search.
pub fn kth_derivative_norm(
    f: &Objective,
    x: &[f64],
    k: usize,
    budget: usize,
    seed: u64,
) -> Result<FlatnessCoefficient> {
    if x.len() != f.dim() {
        return Err(FlatError::DimensionMismatch {
            expected: f.dim(),
            got: x.len(),
        });
    }
    if !(1..=4).contains(&k) {
        return Err(FlatError::InvalidArgument {
            field: "k",
            reason: format!("derivative order must be in 1..=4, got {k}"),
        });
    }
    if budget == 0 {
        return Err(FlatError::InvalidArgument {
            field: "budget",
            reason: "budget must be at least 1".into(),
        });
    }
    let starts = sphere_directions(x.len(), budget, seed);
    let lower_tol = if f.has_dir_deriv() { 1e-6 } else { 1e-4 };
    let lower_order_nonzero = (1..k).any(|i| {
        starts
            .iter()
            .any(|v| f.dir_deriv_or_fd(x, v, i).abs() > lower_tol * (1.0 + f.eval(x).abs()))
    });
    let value = |v: &[f64]| f.dir_deriv_or_fd(x, v, k).abs();
    let best = maximize_on_sphere(&starts, &value, None, &AscentOptions::default());
    let method = if f.has_dir_deriv() {
        CoefficientMethod::SphereSearch
    } else {
        CoefficientMethod::FiniteDifference
    };
    let mut coef = FlatnessCoefficient::new(k, best.value, best.direction, method);
    coef.lower_order_nonzero = lower_order_nonzero;
    coef.estimate = !f.has_dir_deriv();
    Ok(coef)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: f64,
    pub coefficient: f64,
    /// Number of smallest radii used.
    pub window: usize,
}

/// Least-squares fit of `log f̊` against `log r` over the smallest third of
/// the grid: `f̊ ≈ coefficient·r^order`.
pub fn asymptotic_order_fit(p: &FlatnessProfile) -> Result<OrderFit> {
    let m = p.radii.len();
    if m < 8 {
        return Err(FlatError::Precondition(format!(
            "order fit needs at least 8 grid points, got {m}"
        )));
    }
    let window = m.div_ceil(3).max(2);
    let vals = &p.values[..window];
    if vals.iter().any(|v| *v <= 0.0) {
        return Err(FlatError::LocallyConstant);
    }
    let xs: Vec<f64> = p.radii[..window].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    Ok(OrderFit {
        order: slope,
        coefficient: intercept.exp(),
        window,
    })
}

/// Slope and intercept of the least-squares line through `(xs, ys)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = xs.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Order-`k` coefficient used by certificates: lip for `k = 1`, `λ₁` for
/// `k = 2`, the sphere-searched derivative norm otherwise.
pub fn flatness_coefficient(f: &Objective, x: &[f64], k: usize, budget: usize, seed: u64) -> Result<FlatnessCoefficient> {
    match k {
        1 => lipschitz_modulus_with(f, x, LipMethod::Auto, seed),
        2 => hessian_lambda1_seeded(f, x, 1e-13, 20_000, seed),
        _ => kth_derivative_norm(f, x, k, budget, seed),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    CertifiedFlat,
    CertifiedNotFlat,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub point: Vec<f64>,
    pub coefficient: f64,
    pub status: CertificateStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub order: usize,
    pub entries: Vec<CertificateEntry>,
    pub min_coefficient: f64,
}

impl CertificateReport {
    pub fn flat_points(&self) -> Vec<&[f64]> {
        self.entries
            .iter()
            .filter(|e| e.status == CertificateStatus::CertifiedFlat)
            .map(|e| e.point.as_slice())
            .collect()
    }
}

/// Relative tie tolerance between coefficients.
pub const CERTIFICATE_MARGIN: f64 = 1e-6;

/// Decides flatness among same-level candidates from their order-`k`
/// coefficients. Candidates tied at the minimum are certified flat when
/// something else is strictly larger; a full tie is undecided.
pub fn flatness_certificate(
    f: &Objective,
    candidates: &[Vec<f64>],
    k: usize,
    budget: usize,
    seed: u64,
) -> Result<CertificateReport> {
    if candidates.is_empty() {
        return Err(FlatError::InvalidArgument {
            field: "candidates",
            reason: "no candidate points".into(),
        });
    }
    let levels: Vec<f64> = candidates.iter().map(|c| f.eval(c)).collect();
    let (lo, hi) = levels
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo > 1e-9 {
        return Err(FlatError::InvalidArgument {
            field: "candidates",
            reason: format!("candidates span levels [{lo:e}, {hi:e}]"),
        });
    }
    let coefs = candidates
        .iter()
        .map(|c| flatness_coefficient(f, c, k, budget, seed).map(|r| r.value))
        .collect::<Result<Vec<f64>>>()?;
    Ok(certificate_from_coefficients(candidates, &coefs, k))
}

pub fn certificate_from_coefficients(candidates: &[Vec<f64>], coefs: &[f64], k: usize) -> CertificateReport {
    let min = coefs.iter().copied().fold(f64::INFINITY, f64::min);
    let cut = min + CERTIFICATE_MARGIN * min.abs().max(1e-300);
    let tied = coefs.iter().filter(|&&c| c <= cut).count();
    let entries = candidates
        .iter()
        .zip(coefs)
        .map(|(p, &c)| CertificateEntry {
            point: p.clone(),
            coefficient: c,
            status: if tied == coefs.len() {
                CertificateStatus::Undecided
            } else if c <= cut {
                CertificateStatus::CertifiedFlat
            } else {
                CertificateStatus::CertifiedNotFlat
            },
        })
        .collect();
    CertificateReport {
        order: k,
        entries,
        min_coefficient: min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::{build_catalog_objective, Composite};
    use crate::linalg::Mat;
    use std::sync::Arc;

    #[test]
    fn lip_of_mf1_ab_and_abs_product() {
        let f = build_catalog_objective("mf1_ab", &[1.0, 1.0]).unwrap();
        let c = lipschitz_modulus(&f, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(c.method, CoefficientMethod::CompositeClosedForm);
        assert!((c.value - 6f64.sqrt()).abs() < 1e-14);
        let g = build_catalog_objective("abs_product", &[]).unwrap();
        assert!((lipschitz_modulus(&g, &[1.0, 1.0]).unwrap().value - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            lipschitz_modulus_with(&g, &[2.0, 1.0], LipMethod::ClosedForm, 0),
            Err(FlatError::ClosedFormUnavailable(_))
        ));
    }

    #[test]
    fn lip_of_l1_norm_is_sqrt_n() {
        let f = Objective::new("l1", 3, Arc::new(|x: &[f64]| x.iter().map(|a| a.abs()).sum()))
            .with_composite(Composite {
                outer: OuterKind::AbsSum,
                scale: 1.0,
                out_dim: 3,
                inner: Arc::new(|x: &[f64]| x.to_vec()),
                jacobian: Arc::new(|_x: &[f64]| Mat::identity(3)),
            });
        let c = lipschitz_modulus(&f, &[0.0; 3]).unwrap();
        assert!((c.value - 3f64.sqrt()).abs() < 1e-15);
        let s = lipschitz_modulus_with(&f, &[0.0; 3], LipMethod::Sampling, 1).unwrap();
        assert!(s.estimate && s.value <= c.value + 1e-12 && s.value > 0.9 * c.value, "{}", s.value);
    }

    #[test]
    fn lambda1_examples() {
        let f = build_catalog_objective("4th", &[]).unwrap();
        for x1 in [-2.0, 0.0, 0.5, 3.0] {
            let c = hessian_lambda1(&f, &[x1, 0.0], 1e-10, 1000).unwrap();
            assert!((c.value - 2.0).abs() < 1e-10 && !c.not_critical, "{x1}: {c:?}");
        }
        let q = Objective::quadratic(Mat::from_diag(&[3.0, 1.0]));
        assert!((hessian_lambda1(&q, &[0.0, 0.0], 1e-12, 1000).unwrap().value - 3.0).abs() < 1e-10);
        let neg = Objective::quadratic(Mat::from_diag(&[-5.0, 1.0]));
        let c = hessian_lambda1(&neg, &[0.0, 0.0], 1e-12, 1000).unwrap();
        assert!((c.value - 1.0).abs() < 1e-9, "{c:?}");
        let c = hessian_lambda1(&neg, &[1.0, 0.0], 1e-12, 1000).unwrap();
        assert!(c.not_critical && (c.value - 5.0).abs() < 1e-9, "{c:?}");
    }

    #[test]
    fn kth_norms() {
        let f = build_catalog_objective("mf4", &[]).unwrap();
        let c = kth_derivative_norm(&f, &[1.0, 1.0], 4, 16, 0).unwrap();
        assert!((c.value - 96.0).abs() < 1e-9, "{c:?}");
        assert!((c.direction[0].abs() - 0.5f64.sqrt()).abs() < 1e-5);
        assert!(!c.lower_order_nonzero);
        let g = build_catalog_objective("4th", &[]).unwrap();
        let c = kth_derivative_norm(&g, &[2.0, 0.0], 4, 16, 0).unwrap();
        assert!((c.value - 96.0).abs() < 1e-9, "{c:?}");
        assert!(c.lower_order_nonzero);
        let sq = Objective::from_fn("x2sq", 2, |x: &[f64]| x[1] * x[1]);
        let c = kth_derivative_norm(&sq, &[0.7, 0.0], 3, 8, 0).unwrap();
        assert!(c.value < 1e-3, "{c:?}");
    }

    #[test]
    fn certificates() {
        let f = build_catalog_objective("orthogonal", &[1.0, 2.0]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let cands = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, s],
            vec![(0.5f64).sqrt(), 0.5],
        ];
        let rep = flatness_certificate(&f, &cands, 2, 8, 0).unwrap();
        let st: Vec<_> = rep.entries.iter().map(|e| e.status).collect();
        assert_eq!(
            st,
            vec![
                CertificateStatus::CertifiedFlat,
                CertificateStatus::CertifiedFlat,
                CertificateStatus::CertifiedNotFlat,
                CertificateStatus::CertifiedNotFlat
            ]
        );
        let orbit = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let rep = flatness_certificate(&f, &orbit, 2, 8, 0).unwrap();
        assert!(rep.entries.iter().all(|e| e.status == CertificateStatus::Undecided));
        assert!(flatness_certificate(&f, &[vec![1.0, 0.0], vec![0.0, 0.0]], 2, 8, 0).is_err());
    }

    #[test]
    fn mf4_certificate_order_four() {
        let f = build_catalog_objective("mf4", &[]).unwrap();
        let cands: Vec<Vec<f64>> = [0.5, 1.0, 2.0].iter().map(|&t| vec![t, 1.0 / t]).collect();
        let rep = flatness_certificate(&f, &cands, 4, 16, 0).unwrap();
        assert_eq!(rep.flat_points(), vec![&[1.0, 1.0][..]]);
    }

    #[test]
    fn least_squares_line() {
        let (s, i) = least_squares(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-15 && (i - 1.0).abs() < 1e-15);
    }
}
