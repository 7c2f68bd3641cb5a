//! Named example objectives with analytic oracles.

use std::sync::Arc;

use super::{Composite, Objective, OuterKind, Smoothness, SmoothBody};
use crate::error::{FlatError, Result};
use crate::jet::Scalar;
use crate::linalg::Mat;

/// Catalog metadata. Names and parameter layouts are part of the CLI contract.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    /// Human-readable parameter layout.
    pub params: &'static str,
    /// A valid parameter vector, used by sweeps over the whole catalog.
    pub default_params: Vec<f64>,
    pub known_flat_minima: Option<&'static str>,
}

impl CatalogEntry {
    pub fn build(&self, params: &[f64]) -> Result<Objective> {
        build_catalog_objective(self.name, params)
    }

    pub fn build_default(&self) -> Objective {
        self.build(&self.default_params)
            .expect("default catalog parameters are valid")
    }
}

pub fn catalog_entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "4th",
            params: "none; f = x2^2 + x1^2 x2^4",
            default_params: vec![],
            known_flat_minima: Some("(0,0) only"),
        },
        CatalogEntry {
            name: "mf4",
            params: "none; f = (x1 x2 - 1)^4",
            default_params: vec![],
            known_flat_minima: Some("±(1,1)"),
        },
        CatalogEntry {
            name: "abs_product",
            params: "none; f = |x1 x2 - 1|",
            default_params: vec![],
            known_flat_minima: Some("±(1,1)"),
        },
        CatalogEntry {
            name: "nn",
            params: "none; f = (x2 relu(x1) + x3 - 1)^2",
            default_params: vec![],
            known_flat_minima: Some("x3 = 1 and (x1 < 0 or x1 = x2 = 0)"),
        },
        CatalogEntry {
            name: "orthogonal",
            params: "a_1..a_n; f = (a_1 x_1^2 + ... + a_n x_n^2 - 1)^2",
            default_params: vec![1.0, 2.0],
            known_flat_minima: Some("zeros with a_i x_i = 0 for i outside argmin{a_i : a_i > 0}"),
        },
        CatalogEntry {
            name: "mf1_ab",
            params: "a, b; f = |x1 x3 - a| + |x2 x3 - b|",
            default_params: vec![1.0, 1.0],
            known_flat_minima: Some("±(a s, b s, 1/s), s = sqrt(sqrt2/(|a|+|b|)); origin if a = b = 0"),
        },
        CatalogEntry {
            name: "monomial",
            params: "positive integer exponents u_1..u_n; f = (x^u - 1)^2",
            default_params: vec![1.0, 1.0],
            known_flat_minima: Some("|x_i| = sqrt(u_i) / (prod u_j^u_j)^(1/(2|u|_1)) with x^u = 1"),
        },
        CatalogEntry {
            name: "flat_not_strict",
            params: "none; f = x1^2 + x2^4 (1 + x3^2)",
            default_params: vec![],
            known_flat_minima: Some("every (0,0,x3)"),
        },
        CatalogEntry {
            name: "strict_not_flat",
            params: "none; f = x1^2 + x2^4 (1 + x3^2) + x1^6 (1 + (x3-1)^2)",
            default_params: vec![],
            known_flat_minima: Some("(0,0,1) only"),
        },
        CatalogEntry {
            name: "quadratic",
            params: "row-major symmetric n×n matrix D; f = <x, D x>/2",
            default_params: vec![3.0, 0.0, 0.0, 1.0],
            known_flat_minima: None,
        },
        CatalogEntry {
            name: "mf_frobenius",
            params: "m, n, r, then M row-major; f = |XY - M|_F^2 / 2 over (vec X, vec Y)",
            default_params: vec![2.0, 2.0, 2.0, 2.0, 0.0, 0.0, 1.0],
            known_flat_minima: Some("XY = M with |X|_2 = |Y|_2 = sqrt(|M|_2)"),
        },
        CatalogEntry {
            name: "mf_l1",
            params: "m, n, r, then M row-major; f = sum |XY - M| over (vec X, vec Y)",
            default_params: vec![2.0, 2.0, 2.0, 2.0, 0.0, 0.0, 1.0],
            known_flat_minima: None,
        },
    ]
}

fn bad(name: &str, reason: impl Into<String>) -> FlatError {
    FlatError::BadParams {
        name: name.to_string(),
        reason: reason.into(),
    }
}

fn expect_arity(name: &str, params: &[f64], n: usize) -> Result<()> {
    if params.len() != n {
        return Err(bad(name, format!("expected {n} parameters, got {}", params.len())));
    }
    Ok(())
}

fn positive_int(name: &str, v: f64) -> Result<usize> {
    if v.fract() != 0.0 || v < 1.0 || !v.is_finite() {
        return Err(bad(name, format!("expected a positive integer, got {v}")));
    }
    Ok(v as usize)
}

/// Builds a catalog objective by name.
pub fn build_catalog_objective(name: &str, params: &[f64]) -> Result<Objective> {
    if params.iter().any(|p| !p.is_finite()) {
        return Err(bad(name, "parameters must be finite"));
    }
    match name {
        "4th" => {
            expect_arity(name, params, 0)?;
            Ok(Objective::from_body(name, 2, Fourth))
        }
        "mf4" => {
            expect_arity(name, params, 0)?;
            Ok(Objective::from_body(name, 2, BilinearPow(4)).with_composite(Composite {
                outer: OuterKind::PowKOverK(4),
                scale: 4.0,
                out_dim: 1,
                inner: Arc::new(|x: &[f64]| vec![x[0] * x[1] - 1.0]),
                jacobian: Arc::new(|x: &[f64]| Mat::from_vec(1, 2, vec![x[1], x[0]])),
            }))
        }
        "abs_product" => {
            expect_arity(name, params, 0)?;
            Ok(Objective::new(name, 2, Arc::new(|x: &[f64]| (x[0] * x[1] - 1.0).abs()))
                .with_composite(Composite {
                    outer: OuterKind::AbsSum,
                    scale: 1.0,
                    out_dim: 1,
                    inner: Arc::new(|x: &[f64]| vec![x[0] * x[1] - 1.0]),
                    jacobian: Arc::new(|x: &[f64]| Mat::from_vec(1, 2, vec![x[1], x[0]])),
                })
                .with_kinks(Arc::new(|x: &[f64]| x[0] * x[1] == 1.0))
                .with_smoothness(Smoothness::Lipschitz))
        }
        "nn" => {
            expect_arity(name, params, 0)?;
            Ok(Objective::from_body(name, 3, ReluNet)
                .with_kinks(Arc::new(|x: &[f64]| x[0] == 0.0))
                .with_smoothness(Smoothness::PiecewiseSmooth))
        }
        "orthogonal" => {
            if params.is_empty() {
                return Err(bad(name, "expected at least one coefficient"));
            }
            let a = params.to_vec();
            let (a1, a2) = (a.clone(), a.clone());
            Ok(
                Objective::from_body(name, a.len(), Ellipse(a)).with_composite(Composite {
                    outer: OuterKind::SqFrobenius,
                    scale: 2.0,
                    out_dim: 1,
                    inner: Arc::new(move |x: &[f64]| {
                        vec![a1.iter().zip(x).map(|(ai, xi)| ai * xi * xi).sum::<f64>() - 1.0]
                    }),
                    jacobian: Arc::new(move |x: &[f64]| {
                        Mat::from_vec(1, x.len(), a2.iter().zip(x).map(|(ai, xi)| 2.0 * ai * xi).collect())
                    }),
                }),
            )
        }
        "mf1_ab" => {
            expect_arity(name, params, 2)?;
            let (a, b) = (params[0], params[1]);
            Ok(Objective::new(
                name,
                3,
                Arc::new(move |x: &[f64]| (x[0] * x[2] - a).abs() + (x[1] * x[2] - b).abs()),
            )
            .with_composite(Composite {
                outer: OuterKind::AbsSum,
                scale: 1.0,
                out_dim: 2,
                inner: Arc::new(move |x: &[f64]| vec![x[0] * x[2] - a, x[1] * x[2] - b]),
                jacobian: Arc::new(|x: &[f64]| {
                    Mat::from_vec(2, 3, vec![x[2], 0.0, x[0], 0.0, x[2], x[1]])
                }),
            })
            .with_kinks(Arc::new(move |x: &[f64]| x[0] * x[2] == a || x[1] * x[2] == b))
            .with_smoothness(Smoothness::Lipschitz))
        }
        "monomial" => {
            if params.is_empty() {
                return Err(bad(name, "expected at least one exponent"));
            }
            let exps = params
                .iter()
                .map(|&p| positive_int(name, p).map(|e| e as u32))
                .collect::<Result<Vec<u32>>>()?;
            let (e1, e2) = (exps.clone(), exps.clone());
            Ok(
                Objective::from_body(name, exps.len(), Monomial(exps)).with_composite(Composite {
                    outer: OuterKind::SqFrobenius,
                    scale: 2.0,
                    out_dim: 1,
                    inner: Arc::new(move |x: &[f64]| vec![monomial_value(&e1, x) - 1.0]),
                    jacobian: Arc::new(move |x: &[f64]| {
                        Mat::from_vec(1, x.len(), monomial_gradient(&e2, x))
                    }),
                }),
            )
        }
        "flat_not_strict" => {
            expect_arity(name, params, 0)?;
            Ok(Objective::from_body(name, 3, FlatNotStrict { sextic: false }))
        }
        "strict_not_flat" => {
            expect_arity(name, params, 0)?;
            Ok(Objective::from_body(name, 3, FlatNotStrict { sextic: true }))
        }
        "quadratic" => {
            let n = (params.len() as f64).sqrt().round() as usize;
            if n == 0 || n * n != params.len() {
                return Err(bad(name, format!("expected n² entries, got {}", params.len())));
            }
            let d = Mat::from_vec(n, n, params.to_vec());
            let asym = d.asymmetry().unwrap_or(0.0);
            if asym > 1e-12 * (1.0 + d.max_abs()) {
                return Err(bad(name, "matrix must be symmetric"));
            }
            Ok(Objective::quadratic(d))
        }
        "mf_frobenius" | "mf_l1" => {
            if params.len() < 3 {
                return Err(bad(name, "expected m, n, r followed by M"));
            }
            let m = positive_int(name, params[0])?;
            let n = positive_int(name, params[1])?;
            let r = positive_int(name, params[2])?;
            if params.len() != 3 + m * n {
                return Err(bad(
                    name,
                    format!("expected {} entries of M, got {}", m * n, params.len() - 3),
                ));
            }
            let target = Mat::from_vec(m, n, params[3..].to_vec());
            Ok(if name == "mf_frobenius" {
                matfac_frobenius(target, r)
            } else {
                matfac_l1(target, r)
            })
        }
        other => Err(FlatError::UnknownObjective(other.to_string())),
    }
}

struct Fourth;
impl SmoothBody for Fourth {
    fn value<T: Scalar>(&self, x: &[T]) -> T {
        x[1] * x[1] + x[0] * x[0] * x[1].powi(4)
    }
}

/// `(x₁x₂ − 1)ᵏ`
struct BilinearPow(u32);
impl SmoothBody for BilinearPow {
    fn value<T: Scalar>(&self, x: &[T]) -> T {
        (x[0] * x[1] - T::cst(1.0)).powi(self.0)
    }
}

struct ReluNet;
impl SmoothBody for ReluNet {
    fn value<T: Scalar>(&self, x: &[T]) -> T {
        let z = x[1] * x[0].relu() + x[2] - T::cst(1.0);
        z * z
    }
}

struct Ellipse(Vec<f64>);
impl SmoothBody for Ellipse {
    fn value<T: Scalar>(&self, x: &[T]) -> T {
        let mut s = T::cst(-1.0);
        for (&a, &xi) in self.0.iter().zip(x) {
            s = s + (xi * xi).scale(a);
        }
        s * s
    }
}

struct Monomial(Vec<u32>);
impl SmoothBody for Monomial {
    fn value<T: Scalar>(&self, x: &[T]) -> T {
        let mut p = T::cst(1.0);
        for (&e, &xi) in self.0.iter().zip(x) {
            p = p * xi.powi(e);
        }
        let z = p - T::cst(1.0);
        z * z
    }
}

struct FlatNotStrict {
    sextic: bool,
}
impl SmoothBody for FlatNotStrict {
    fn value<T: Scalar>(&self, x: &[T]) -> T {
        let one = T::cst(1.0);
        let mut v = x[0] * x[0] + x[1].powi(4) * (one + x[2] * x[2]);
        if self.sextic {
            let s = x[2] - one;
            v = v + x[0].powi(6) * (one + s * s);
        }
        v
    }
}

fn monomial_value(exps: &[u32], x: &[f64]) -> f64 {
    exps.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product()
}

fn monomial_gradient(exps: &[u32], x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = exps[i] as f64 * x[i].powi(exps[i] as i32 - 1);
            for (j, (&e, &xj)) in exps.iter().zip(x).enumerate() {
                if j != i {
                    p *= xj.powi(e as i32);
                }
            }
            p
        })
        .collect()
}

/// Packs `(X, Y)` as `(vec X, vec Y)`, both row-major.
pub fn pack_factors(x: &Mat, y: &Mat) -> Vec<f64> {
    let mut z = x.as_slice().to_vec();
    z.extend_from_slice(y.as_slice());
    z
}

/// Inverse of [`pack_factors`] for `X ∈ ℝ^{m×r}`, `Y ∈ ℝ^{r×n}`.
pub fn unpack_factors(z: &[f64], m: usize, n: usize, r: usize) -> (Mat, Mat) {
    assert_eq!(z.len(), m * r + r * n, "packed factor length");
    (
        Mat::from_vec(m, r, z[..m * r].to_vec()),
        Mat::from_vec(r, n, z[m * r..].to_vec()),
    )
}

struct FactorResidual {
    target: Mat,
    r: usize,
}

impl FactorResidual {
    fn entries<T: Scalar>(&self, z: &[T]) -> Vec<T> {
        let (m, n, r) = (self.target.rows(), self.target.cols(), self.r);
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                let mut s = T::cst(-self.target[(i, j)]);
                for k in 0..r {
                    s = s + z[i * r + k] * z[m * r + k * n + j];
                }
                out.push(s);
            }
        }
        out
    }
}

impl SmoothBody for FactorResidual {
    fn value<T: Scalar>(&self, z: &[T]) -> T {
        let mut acc = T::cst(0.0);
        for e in self.entries(z) {
            acc = acc + e * e;
        }
        acc.scale(0.5)
    }
}

fn factor_jacobian(m: usize, n: usize, r: usize, z: &[f64]) -> Mat {
    let (x, y) = unpack_factors(z, m, n, r);
    let mut j = Mat::zeros(m * n, m * r + r * n);
    for i in 0..m {
        for c in 0..n {
            let row = i * n + c;
            for k in 0..r {
                j[(row, i * r + k)] = y[(k, c)];
                j[(row, m * r + k * n + c)] = x[(i, k)];
            }
        }
    }
    j
}

/// `½‖XY − M‖²_F` with the matrix-free gradient and Hessian-vector product.
fn matfac_frobenius(target: Mat, r: usize) -> Objective {
    let (m, n) = target.shape();
    let dim = m * r + r * n;
    let t = Arc::new(target.clone());
    let (t1, t2, t3) = (t.clone(), t.clone(), t);
    let body_dd = FactorResidual { target, r };
    let body = Arc::new(body_dd);
    let b_dd = body.clone();
    Objective::new(
        "mf_frobenius",
        dim,
        Arc::new(move |z: &[f64]| body.value(z)),
    )
    .with_grad(Arc::new(move |z: &[f64]| {
        let (x, y) = unpack_factors(z, m, n, r);
        let res = x.matmul(&y).sub(&t1);
        pack_factors(&res.matmul(&y.transpose()), &x.transpose().matmul(&res))
    }))
    .with_hess_vec(Arc::new(move |z: &[f64], v: &[f64]| {
        let (x, y) = unpack_factors(z, m, n, r);
        let (h, k) = unpack_factors(v, m, n, r);
        let res = x.matmul(&y).sub(&t2);
        let w = h.matmul(&y).add(&x.matmul(&k));
        let gh = w.matmul(&y.transpose()).add(&res.matmul(&k.transpose()));
        let gk = x.transpose().matmul(&w).add(&h.transpose().matmul(&res));
        pack_factors(&gh, &gk)
    }))
    .with_dir_deriv(Arc::new(move |z: &[f64], v: &[f64], k: usize| {
        b_dd.value(&crate::jet::line(z, v)).derivative(k)
    }))
    .with_composite(Composite {
        outer: OuterKind::SqFrobenius,
        scale: 1.0,
        out_dim: m * n,
        inner: Arc::new(move |z: &[f64]| {
            let (x, y) = unpack_factors(z, m, n, r);
            x.matmul(&y).sub(&t3).into_vec()
        }),
        jacobian: Arc::new(move |z: &[f64]| factor_jacobian(m, n, r, z)),
    })
    .with_smoothness(Smoothness::Smooth)
}

/// Entrywise `‖XY − M‖₁`.
fn matfac_l1(target: Mat, r: usize) -> Objective {
    let (m, n) = target.shape();
    let dim = m * r + r * n;
    let t = Arc::new(target);
    let (t1, t2) = (t.clone(), t);
    Objective::new(
        "mf_l1",
        dim,
        Arc::new(move |z: &[f64]| {
            let (x, y) = unpack_factors(z, m, n, r);
            x.matmul(&y).sub(&t1).as_slice().iter().map(|a| a.abs()).sum()
        }),
    )
    .with_composite(Composite {
        outer: OuterKind::AbsSum,
        scale: 1.0,
        out_dim: m * n,
        inner: Arc::new(move |z: &[f64]| {
            let (x, y) = unpack_factors(z, m, n, r);
            x.matmul(&y).sub(&t2).into_vec()
        }),
        jacobian: Arc::new(move |z: &[f64]| factor_jacobian(m, n, r, z)),
    })
    .with_smoothness(Smoothness::Lipschitz)
}

/// The positive-sign flat global minimum of `(x^υ − 1)²`:
/// `|xᵢ| = √υᵢ / (∏υⱼ^υⱼ)^{1/(2|υ|₁)}`.
pub fn monomial_flat_point(exps: &[u32]) -> Vec<f64> {
    let total: f64 = exps.iter().map(|&e| e as f64).sum();
    let log_prod: f64 = exps.iter().map(|&e| e as f64 * (e as f64).ln()).sum();
    let denom = (log_prod / (2.0 * total)).exp();
    exps.iter().map(|&e| (e as f64).sqrt() / denom).collect()
}

/// Flat global minima of `|x₁x₃ − a| + |x₂x₃ − b|`.
pub fn mf1_ab_flat_points(a: f64, b: f64) -> Vec<[f64; 3]> {
    if a == 0.0 && b == 0.0 {
        return vec![[0.0, 0.0, 0.0]];
    }
    let s = (std::f64::consts::SQRT_2 / (a.abs() + b.abs())).sqrt();
    let p = [a * s, b * s, 1.0 / s];
    vec![p, p.map(|c| -c)]
}

/// Membership in the flat set of the ReLU example exactly as the literature
/// states it: `x₃ = 1 ∧ (x₁ < 0 ∨ (x₁ = 0 ∧ |x₂| ≤ 1))`.
pub fn nn_in_stated_flat_set(x: &[f64], tol: f64) -> bool {
    (x[2] - 1.0).abs() <= tol && (x[0] < -tol || (x[0].abs() <= tol && x[1].abs() <= 1.0 + tol))
}

/// Flat set of the ReLU example obtained from the profile itself:
/// `x₃ = 1 ∧ (x₁ < 0 ∨ x₁ = x₂ = 0)`. At `(0, x₂, 1)` the profile is
/// `(1 + x₂²) r²`, which only matches the minimal profile `r²` for `x₂ = 0`.
pub fn nn_in_flat_set(x: &[f64], tol: f64) -> bool {
    (x[2] - 1.0).abs() <= tol && (x[0] < -tol || (x[0].abs() <= tol && x[1].abs() <= tol))
}
