//! Objective functions with value, gradient, Hessian-vector and directional
//! derivative oracles.
//!
//! An [`Objective`] is immutable once built and all of its oracles are pure,
//! so it can be shared freely between worker threads. Missing oracles fall
//! back to central finite differences through the `*_or_fd` accessors.

mod catalog;
mod fd;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::jet::{line, Jet, Scalar};
use crate::linalg::{norm, Mat};

pub use catalog::{
    build_catalog_objective, catalog_entries, mf1_ab_flat_points, monomial_flat_point, nn_in_flat_set,
    nn_in_stated_flat_set, pack_factors, unpack_factors, CatalogEntry,
};
pub use fd::{fd_gradient, fd_gradient_with_step, fd_hess_vec, fd_step, finite_difference_dir_deriv};

pub type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type HessVecFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type DirDerivFn = Arc<dyn Fn(&[f64], &[f64], usize) -> f64 + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> Mat + Send + Sync>;
pub type PredicateFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Smooth,
    PiecewiseSmooth,
    Lipschitz,
}

/// Outer function `g` of a composite `f = scale·g∘F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterKind {
    /// `Σ|zᵢ|`
    AbsSum,
    /// `Σ|zᵢ|ᵏ/k`
    PowKOverK(u32),
    /// `½Σzᵢ²`
    SqFrobenius,
}

impl OuterKind {
    pub fn apply(&self, z: &[f64]) -> f64 {
        match *self {
            OuterKind::AbsSum => z.iter().map(|a| a.abs()).sum(),
            OuterKind::PowKOverK(k) => {
                z.iter().map(|a| a.abs().powi(k as i32)).sum::<f64>() / k as f64
            }
            OuterKind::SqFrobenius => 0.5 * z.iter().map(|a| a * a).sum::<f64>(),
        }
    }
}

/// Composite structure `f(x) = scale·g(F(x))` with the Jacobian of `F`.
#[derive(Clone)]
pub struct Composite {
    pub outer: OuterKind,
    pub scale: f64,
    pub out_dim: usize,
    pub inner: VectorFn,
    pub jacobian: JacobianFn,
}

impl Composite {
    pub fn outer_value(&self, x: &[f64]) -> f64 {
        self.scale * self.outer.apply(&(self.inner)(x))
    }
}

impl fmt::Debug for Composite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Composite")
            .field("outer", &self.outer)
            .field("scale", &self.scale)
            .field("out_dim", &self.out_dim)
            .finish_non_exhaustive()
    }
}

/// An objective `f: ℝⁿ → ℝ` with optional analytic oracles.
#[derive(Clone)]
pub struct Objective {
    name: String,
    dim: usize,
    eval: EvalFn,
    grad: Option<VectorFn>,
    hess_vec: Option<HessVecFn>,
    dir_deriv: Option<DirDerivFn>,
    composite: Option<Composite>,
    kink: Option<PredicateFn>,
    smoothness: Smoothness,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("grad", &self.grad.is_some())
            .field("hess_vec", &self.hess_vec.is_some())
            .field("dir_deriv", &self.dir_deriv.is_some())
            .field("composite", &self.composite)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

/// Polynomial-style body evaluated on plain floats and on Taylor jets.
pub(crate) trait SmoothBody: Send + Sync + 'static {
    fn value<T: Scalar>(&self, x: &[T]) -> T;
}

impl Objective {
    /// A bare objective with only a value oracle, tagged Lipschitz.
    pub fn new(name: impl Into<String>, dim: usize, eval: EvalFn) -> Self {
        assert!(dim > 0, "objective dimension must be positive");
        Objective {
            name: name.into(),
            dim,
            eval,
            grad: None,
            hess_vec: None,
            dir_deriv: None,
            composite: None,
            kink: None,
            smoothness: Smoothness::Lipschitz,
        }
    }

    /// Smooth objective from a closure; derivatives come from finite differences.
    pub fn from_fn<F>(name: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Objective::new(name, dim, Arc::new(f)).with_smoothness(Smoothness::Smooth)
    }

    /// `½⟨x, D x⟩` for a symmetric `D`.
    pub fn quadratic(d: Mat) -> Self {
        assert_eq!(d.rows(), d.cols(), "quadratic form must be square");
        let n = d.rows();
        let d = Arc::new(d.symmetrized());
        let (d1, d2, d3) = (d.clone(), d.clone(), d.clone());
        Objective::new(
            "quadratic",
            n,
            Arc::new(move |x: &[f64]| 0.5 * crate::linalg::dot(x, &d1.matvec(x))),
        )
        .with_grad(Arc::new(move |x: &[f64]| d2.matvec(x)))
        .with_hess_vec(Arc::new(move |_x: &[f64], v: &[f64]| d3.matvec(v)))
        .with_dir_deriv(Arc::new(move |x: &[f64], v: &[f64], k: usize| {
            let dv = d.matvec(v);
            match k {
                1 => crate::linalg::dot(x, &dv),
                2 => crate::linalg::dot(v, &dv),
                _ => 0.0,
            }
        }))
        .with_smoothness(Smoothness::Smooth)
    }

    /// Builds all oracles from a jet-evaluable body.
    pub(crate) fn from_body<B: SmoothBody>(name: &str, dim: usize, body: B) -> Self {
        let body = Arc::new(body);
        let (b0, b1, b2, b3) = (body.clone(), body.clone(), body.clone(), body);
        Objective::new(name, dim, Arc::new(move |x: &[f64]| b0.value(x)))
            .with_grad(Arc::new(move |x: &[f64]| jet_gradient(&*b1, x)))
            .with_hess_vec(Arc::new(move |x: &[f64], v: &[f64]| jet_hess_vec(&*b2, x, v)))
            .with_dir_deriv(Arc::new(move |x: &[f64], v: &[f64], k: usize| {
                b3.value(&line(x, v)).derivative(k)
            }))
            .with_smoothness(Smoothness::Smooth)
    }

    pub fn with_grad(mut self, g: VectorFn) -> Self {
        self.grad = Some(g);
        self
    }

    pub fn with_hess_vec(mut self, h: HessVecFn) -> Self {
        self.hess_vec = Some(h);
        self
    }

    pub fn with_dir_deriv(mut self, d: DirDerivFn) -> Self {
        self.dir_deriv = Some(d);
        self
    }

    pub fn with_composite(mut self, c: Composite) -> Self {
        self.composite = Some(c);
        self
    }

    pub fn with_kinks(mut self, k: PredicateFn) -> Self {
        self.kink = Some(k);
        self
    }

    pub fn with_smoothness(mut self, s: Smoothness) -> Self {
        self.smoothness = s;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// `s·f`, with every oracle and the composite scale multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Objective {
        let eval = self.eval.clone();
        let mut out = Objective::new(
            format!("{}*{}", s, self.name),
            self.dim,
            Arc::new(move |x: &[f64]| s * eval(x)),
        )
        .with_smoothness(self.smoothness);
        if let Some(g) = self.grad.clone() {
            out.grad = Some(Arc::new(move |x: &[f64]| {
                g(x).into_iter().map(|a| s * a).collect()
            }));
        }
        if let Some(h) = self.hess_vec.clone() {
            out.hess_vec = Some(Arc::new(move |x: &[f64], v: &[f64]| {
                h(x, v).into_iter().map(|a| s * a).collect()
            }));
        }
        if let Some(d) = self.dir_deriv.clone() {
            out.dir_deriv = Some(Arc::new(move |x: &[f64], v: &[f64], k: usize| s * d(x, v, k)));
        }
        if let Some(c) = &self.composite {
            let mut c = c.clone();
            c.scale *= s;
            out.composite = Some(c);
        }
        out.kink = self.kink.clone();
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn composite(&self) -> Option<&Composite> {
        self.composite.as_ref()
    }

    pub fn has_grad(&self) -> bool {
        self.grad.is_some()
    }

    pub fn has_dir_deriv(&self) -> bool {
        self.dir_deriv.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }

    /// Analytic gradient, if available. At kink points this is the
    /// one-sided value; see [`Objective::is_kink`].
    pub fn grad(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(x))
    }

    /// Analytic gradient or a central finite difference.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.grad {
            Some(g) => g(x),
            None => fd_gradient(self, x),
        }
    }

    pub fn hess_vec(&self, x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        self.hess_vec.as_ref().map(|h| h(x, v))
    }

    pub fn hess_vec_or_fd(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        match &self.hess_vec {
            Some(h) => h(x, v),
            None => fd_hess_vec(self, x, v),
        }
    }

    /// `f⁽ᵏ⁾(x)vᵏ` from the analytic oracle, `k ∈ 1..=4`.
    pub fn dir_deriv(&self, x: &[f64], v: &[f64], k: usize) -> Option<f64> {
        self.dir_deriv.as_ref().map(|d| d(x, v, k))
    }

    pub fn dir_deriv_or_fd(&self, x: &[f64], v: &[f64], k: usize) -> f64 {
        match &self.dir_deriv {
            Some(d) => d(x, v, k),
            None => {
                // The stencil assumes a unit direction.
                let nv = norm(v);
                if nv == 0.0 {
                    return 0.0;
                }
                let u: Vec<f64> = v.iter().map(|a| a / nv).collect();
                finite_difference_dir_deriv(self, x, &u, k) * nv.powi(k as i32)
            }
        }
    }

    /// True when `x` sits on a stored kink, where derivative oracles return
    /// one-sided values.
    pub fn is_kink(&self, x: &[f64]) -> bool {
        self.kink.as_ref().is_some_and(|k| k(x))
    }
}

fn jet_gradient<B: SmoothBody + ?Sized>(b: &B, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut e = vec![0.0; n];
    (0..n)
        .map(|i| {
            e[i] = 1.0;
            let d = b.value(&line(x, &e)).0[1];
            e[i] = 0.0;
            d
        })
        .collect()
}

/// `(Hv)ᵢ = [D²f(v+eᵢ) − D²f(v−eᵢ)]/4` by polarization of the quadratic form.
fn jet_hess_vec<B: SmoothBody + ?Sized>(b: &B, x: &[f64], v: &[f64]) -> Vec<f64> {
    let n = x.len();
    let second = |d: &[f64]| -> f64 {
        let j: Jet = b.value(&line(x, d));
        2.0 * j.0[2]
    };
    let mut w = v.to_vec();
    (0..n)
        .map(|i| {
            w[i] = v[i] + 1.0;
            let p = second(&w);
            w[i] = v[i] - 1.0;
            let m = second(&w);
            w[i] = v[i];
            (p - m) / 4.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_oracles() {
        let f = Objective::quadratic(Mat::from_diag(&[3.0, 1.0]));
        assert_eq!(f.eval(&[1.0, 2.0]), 0.5 * (3.0 + 4.0));
        assert_eq!(f.grad(&[1.0, 2.0]).unwrap(), vec![3.0, 2.0]);
        assert_eq!(f.hess_vec(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), vec![3.0, 0.0]);
    }

    #[test]
    fn fd_fallbacks_match() {
        let f = Objective::from_fn("cubic", 2, |x: &[f64]| x[0].powi(3) + x[0] * x[1]);
        let g = f.gradient(&[1.0, 2.0]);
        assert!((g[0] - 5.0).abs() < 1e-8 && (g[1] - 1.0).abs() < 1e-8);
        let hv = f.hess_vec_or_fd(&[1.0, 2.0], &[1.0, 0.0]);
        assert!((hv[0] - 6.0).abs() < 1e-5 && (hv[1] - 1.0).abs() < 1e-5, "{hv:?}");
        let d3 = f.dir_deriv_or_fd(&[1.0, 2.0], &[1.0, 0.0], 3);
        assert!((d3 - 6.0).abs() < 1e-3, "{d3}");
    }

    #[test]
    fn scaling_multiplies_oracles() {
        let f = Objective::quadratic(Mat::from_diag(&[3.0, 1.0])).scaled(2.0);
        assert_eq!(f.eval(&[1.0, 0.0]), 3.0);
        assert_eq!(f.hess_vec(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), vec![6.0, 0.0]);
    }
}
