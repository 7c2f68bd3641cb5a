//! Conserved quantities of linear symmetries and the flows they drive.
//!
//! For a Lie algebra `𝔤` of `n×n` matrices, `C(x)` is the projection of `xxᵀ`
//! onto the span of the symmetrized generators. With an orthonormal basis
//! `{B_j}` of that span, `q_j(x) = xᵀB_j x` and
//! `c(x) = ¼Σ(q_j(x) − q_j(x̄))²`, `∇c(x) = Σ(q_j(x) − q_j(x̄))B_j x`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::{flatness_coefficient, least_squares};
use crate::error::{FlatError, Result};
use crate::funcmodel::{Objective, VectorFn};
use crate::linalg::{axpy, dot, norm, Mat};

/// Pivot threshold of the Frobenius Gram–Schmidt.
pub const GS_PIVOT: f64 = 1e-10;

/// Generators of a matrix Lie algebra with an orthonormal basis of their
/// symmetric parts.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    pub n: usize,
    pub generators: Vec<Mat>,
    pub sym_basis: Vec<Mat>,
}

/// Frobenius Gram–Schmidt; returns the accepted orthonormal matrices.
fn frobenius_gram_schmidt(mats: &[Mat]) -> Vec<Mat> {
    let mut basis: Vec<Mat> = Vec::new();
    for a in mats {
        let scale = a.frobenius_norm();
        if scale == 0.0 {
            continue;
        }
        let mut w = a.scale(1.0 / scale);
        for _ in 0..2 {
            for b in &basis {
                w = w.sub(&b.scale(w.frob_dot(b)));
            }
        }
        let wn = w.frobenius_norm();
        if wn > GS_PIVOT {
            basis.push(w.scale(1.0 / wn));
        }
    }
    basis
}

impl GeneratorSet {
    /// Validates the generators and orthonormalizes their symmetric parts.
    /// A skew-symmetric algebra yields an empty basis and `C ≡ 0`.
    pub fn new(generators: Vec<Mat>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(FlatError::InvalidArgument {
                field: "generators",
                reason: "at least one generator is required".into(),
            });
        };
        let n = first.rows();
        for g in &generators {
            if g.shape() != (n, n) {
                return Err(FlatError::DimensionMismatch {
                    expected: n,
                    got: if g.rows() != n { g.rows() } else { g.cols() },
                });
            }
            if g.frobenius_norm() == 0.0 || !g.is_finite() {
                return Err(FlatError::InvalidArgument {
                    field: "generators",
                    reason: "generators must be finite and nonzero".into(),
                });
            }
        }
        let rank = frobenius_gram_schmidt(&generators).len();
        if rank < generators.len() {
            return Err(FlatError::RankDeficient {
                rank,
                count: generators.len(),
            });
        }
        let sym: Vec<Mat> = generators.iter().map(|g| g.symmetrized()).collect();
        let sym_basis = frobenius_gram_schmidt(&sym);
        Ok(GeneratorSet {
            n,
            generators,
            sym_basis,
        })
    }

    /// Coefficients `q_j(x) = xᵀB_j x` of `C(x)` in the orthonormal basis.
    pub fn coefficients(&self, x: &[f64]) -> Vec<f64> {
        self.sym_basis.iter().map(|b| dot(x, &b.matvec(x))).collect()
    }

    /// `C(x)` as a symmetric matrix.
    pub fn projection(&self, x: &[f64]) -> Mat {
        let mut c = Mat::zeros(self.n, self.n);
        for (b, q) in self.sym_basis.iter().zip(self.coefficients(x)) {
            c = c.add(&b.scale(q));
        }
        c
    }
}

/// `diag(d)` as a single generator.
pub fn diagonal_generator(d: &[f64]) -> Mat {
    Mat::from_diag(d)
}

/// Generators `diag(υₙeᵢ − υᵢeₙ)`, `i < n`, of the symmetry of `(x^υ − 1)²`.
pub fn monomial_generators(exps: &[u32]) -> Result<GeneratorSet> {
    let n = exps.len();
    if n < 2 {
        return Err(FlatError::InvalidArgument {
            field: "exponents",
            reason: "the monomial symmetry needs at least two variables".into(),
        });
    }
    let gens = (0..n - 1)
        .map(|i| {
            let mut d = vec![0.0; n];
            d[i] = exps[n - 1] as f64;
            d[n - 1] = -(exps[i] as f64);
            Mat::from_diag(&d)
        })
        .collect();
    GeneratorSet::new(gens)
}

/// Skew-symmetric `e_ieⱼᵀ − e_jeᵢᵀ`, `i < j`; their symmetric parts vanish.
pub fn skew_generators(n: usize) -> Result<GeneratorSet> {
    let mut gens = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut a = Mat::zeros(n, n);
            a[(i, j)] = 1.0;
            a[(j, i)] = -1.0;
            gens.push(a);
        }
    }
    GeneratorSet::new(gens)
}

/// Generators of `(X, Y) ↦ (XG, G⁻¹Y)` on `(vec X, vec Y)`, both row-major:
/// `(X, Y) ↦ (XE, −EY)` for every `E = e_a e_bᵀ`. The induced quadratic
/// forms are the entries of `XᵀX − YYᵀ`.
pub fn matfac_generators(m: usize, n: usize, r: usize) -> Result<GeneratorSet> {
    let dim = m * r + r * n;
    let mut gens = Vec::with_capacity(r * r);
    for a in 0..r {
        for b in 0..r {
            let mut g = Mat::zeros(dim, dim);
            for i in 0..m {
                g[(i * r + b, i * r + a)] += 1.0;
            }
            for j in 0..n {
                g[(m * r + a * n + j, m * r + b * n + j)] -= 1.0;
            }
            gens.push(g);
        }
    }
    GeneratorSet::new(gens)
}

/// `C`, `c` and `∇c` for a generator set, anchored at `x̄` when given.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedQuantity {
    pub gen: GeneratorSet,
    pub anchor: Option<Vec<f64>>,
    anchor_coeffs: Vec<f64>,
}

impl ConservedQuantity {
    pub fn new(gen: GeneratorSet, anchor: Option<Vec<f64>>) -> Result<Self> {
        let anchor_coeffs = match &anchor {
            Some(a) => {
                if a.len() != gen.n {
                    return Err(FlatError::DimensionMismatch {
                        expected: gen.n,
                        got: a.len(),
                    });
                }
                gen.coefficients(a)
            }
            None => vec![0.0; gen.sym_basis.len()],
        };
        Ok(ConservedQuantity {
            gen,
            anchor,
            anchor_coeffs,
        })
    }

    pub fn dim(&self) -> usize {
        self.gen.n
    }

    /// `C(x)` coefficients in the orthonormal basis.
    pub fn coefficients(&self, x: &[f64]) -> Vec<f64> {
        self.gen.coefficients(x)
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.coefficients(x)
            .iter()
            .zip(&self.anchor_coeffs)
            .map(|(q, a)| q - a)
            .collect()
    }

    /// `c(x) = ¼‖C(x) − C(x̄)‖²_F`
    pub fn c(&self, x: &[f64]) -> f64 {
        0.25 * self.residual(x).iter().map(|d| d * d).sum::<f64>()
    }

    /// `∇c(x) = Σ_j (q_j(x) − q_j(x̄))·B_j x`
    pub fn grad_c(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (b, d) in self.gen.sym_basis.iter().zip(self.residual(x)) {
            if d != 0.0 {
                g = axpy(d, &b.matvec(x), &g);
            }
        }
        g
    }

    /// `⟨C(x) − C(x̄), C(v)⟩_F`, the second variation of `c` along
    /// directions `v` with `xᵀB_j v = 0` for all `j`.
    pub fn second_variation(&self, x: &[f64], v: &[f64]) -> f64 {
        dot(&self.residual(x), &self.coefficients(v))
    }
}

/// Vector field driving [`flow_integrate`].
#[derive(Clone)]
pub enum Field {
    /// `ẋ = ∇c(x)`
    GradC,
    /// `ẋ = −∇c(x)`
    NegGradC,
    /// `ẋ = −∇f(x)`
    NegGradF,
    /// `ẋᵢ = −υₙxᵢ(υₙxᵢ² − υᵢxₙ²)` for `i < n`,
    /// `ẋₙ = Σᵢ υᵢxₙ(υₙxᵢ² − υᵢxₙ²)`.
    Monomial(Vec<u32>),
    Custom(VectorFn),
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::GradC => write!(f, "GradC"),
            Field::NegGradC => write!(f, "NegGradC"),
            Field::NegGradF => write!(f, "NegGradF"),
            Field::Monomial(e) => write!(f, "Monomial({e:?})"),
            Field::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// The verbatim monomial flattening field.
pub fn monomial_field(exps: &[u32], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let un = exps[n - 1] as f64;
    let xn = x[n - 1];
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let ui = exps[i] as f64;
        let w = un * x[i] * x[i] - ui * xn * xn;
        out[i] = -un * x[i] * w;
        out[n - 1] += ui * xn * w;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TimeLimit,
    GradientSmall,
    Diverged,
}

/// States, values and diagnostics along an integrated flow or an iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub f_values: Vec<f64>,
    /// `c(x(t))`; `NaN` when no conserved quantity was supplied.
    pub c_values: Vec<f64>,
    pub coeff_values: Option<Vec<f64>>,
    pub step_size: f64,
    pub termination: Termination,
    /// Largest number of step halvings used in any macro step.
    pub max_halvings: u32,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory is nonempty")
    }
}

/// Per-step acceptance threshold between one full and two half RK4 steps.
pub const STEP_TOLERANCE: f64 = 1e-8;
pub const MAX_HALVINGS: u32 = 20;
/// State norm beyond which a flow counts as diverged.
pub const DIVERGENCE_NORM: f64 = 1e8;
/// Driving field norm below which a flow stops.
pub const STATIONARY_NORM: f64 = 1e-12;

fn rk4_step(field: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<f64> {
    let k1 = field(x);
    let k2 = field(&axpy(0.5 * h, &k1, x));
    let k3 = field(&axpy(0.5 * h, &k2, x));
    let k4 = field(&axpy(h, &k3, x));
    x.iter()
        .enumerate()
        .map(|(i, xi)| xi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Integrates `ẋ = field(x)` by RK4 on the fixed grid `t_k = k·dt`.
///
/// Each macro step compares one full step with two half steps and halves the
/// substep until they agree to [`STEP_TOLERANCE`] (at most [`MAX_HALVINGS`]
/// times). A state that leaves the ball of radius [`DIVERGENCE_NORM`] or turns
/// non-finite ends the record with [`Termination::Diverged`].
pub fn flow_integrate(
    field: &Field,
    f: &Objective,
    cq: Option<&ConservedQuantity>,
    x0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<TrajectoryRecord> {
    if x0.len() != f.dim() {
        return Err(FlatError::DimensionMismatch {
            expected: f.dim(),
            got: x0.len(),
        });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(FlatError::InvalidArgument {
            field: "dt",
            reason: format!("time step must be positive, got {dt}"),
        });
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(FlatError::InvalidArgument {
            field: "t_end",
            reason: format!("end time must be nonnegative, got {t_end}"),
        });
    }
    if let Some(q) = cq {
        if q.dim() != f.dim() {
            return Err(FlatError::DimensionMismatch {
                expected: f.dim(),
                got: q.dim(),
            });
        }
    }
    let needs_cq = matches!(field, Field::GradC | Field::NegGradC);
    let cq_ref = match (needs_cq, cq) {
        (true, None) => {
            return Err(FlatError::InvalidArgument {
                field: "cq",
                reason: "the c-gradient fields need a conserved quantity".into(),
            })
        }
        (_, q) => q,
    };
    if let Field::Monomial(e) = field {
        if e.len() != x0.len() || e.len() < 2 {
            return Err(FlatError::InvalidArgument {
                field: "exponents",
                reason: "exponent count must match the dimension and be at least 2".into(),
            });
        }
    }
    let vf = |x: &[f64]| -> Vec<f64> {
        match field {
            Field::GradC => cq_ref.expect("checked").grad_c(x),
            Field::NegGradC => cq_ref.expect("checked").grad_c(x).into_iter().map(|a| -a).collect(),
            Field::NegGradF => f.gradient(x).into_iter().map(|a| -a).collect(),
            Field::Monomial(e) => monomial_field(e, x),
            Field::Custom(g) => g(x),
        }
    };
    let c_of = |x: &[f64]| cq.map_or(f64::NAN, |q| q.c(x));

    let steps = (t_end / dt).round() as usize;
    let mut rec = TrajectoryRecord {
        times: vec![0.0],
        states: vec![x0.to_vec()],
        f_values: vec![f.eval(x0)],
        c_values: vec![c_of(x0)],
        coeff_values: None,
        step_size: dt,
        termination: Termination::TimeLimit,
        max_halvings: 0,
    };
    let mut x = x0.to_vec();
    for k in 1..=steps {
        if norm(&vf(&x)) < STATIONARY_NORM {
            rec.termination = Termination::GradientSmall;
            break;
        }
        let mut remaining = dt;
        let mut h = dt;
        let mut halvings = 0u32;
        while remaining > 0.0 {
            let step = h.min(remaining);
            let full = rk4_step(&vf, &x, step);
            let half = rk4_step(&vf, &rk4_step(&vf, &x, 0.5 * step), 0.5 * step);
            let err = max_abs_diff(&full, &half);
            if err <= STEP_TOLERANCE || halvings >= MAX_HALVINGS || !err.is_finite() {
                x = half;
                remaining -= step;
                if remaining <= 1e-15 * dt {
                    remaining = 0.0;
                }
                if x.iter().any(|a| !a.is_finite()) {
                    break;
                }
            } else {
                h = 0.5 * step;
                halvings += 1;
            }
        }
        rec.max_halvings = rec.max_halvings.max(halvings);
        if x.iter().any(|a| !a.is_finite()) || norm(&x) > DIVERGENCE_NORM {
            rec.termination = Termination::Diverged;
            break;
        }
        rec.times.push(k as f64 * dt);
        rec.f_values.push(f.eval(&x));
        rec.c_values.push(c_of(&x));
        rec.states.push(x.clone());
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conserved {
    FConserved,
    CConserved,
}

/// `max_t |value(t) − value(0)|` for `f` or `c` along the record.
pub fn conservation_check(tr: &TrajectoryRecord, which: Conserved) -> f64 {
    let v = match which {
        Conserved::FConserved => &tr.f_values,
        Conserved::CConserved => &tr.c_values,
    };
    let Some(&v0) = v.first() else { return 0.0 };
    v.iter().fold(0.0f64, |m, a| m.max((a - v0).abs()))
}

/// `max_t ‖C(x(t)) − C(x(0))‖` along the record.
pub fn coefficient_drift(tr: &TrajectoryRecord, cq: &ConservedQuantity) -> f64 {
    let Some(x0) = tr.states.first() else { return 0.0 };
    let q0 = cq.coefficients(x0);
    tr.states
        .iter()
        .map(|x| {
            let q = cq.coefficients(x);
            q.iter().zip(&q0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatteningReport {
    pub order: usize,
    pub coefficients: Vec<f64>,
    /// Nonincreasing up to `1e-9`.
    pub monotone: bool,
    /// `min_i (coeff_i − coeff_{i+1})`; positive means strictly decreasing.
    pub min_decrease: f64,
    /// Slope of `log coeff` against `t`.
    pub fitted_rate: f64,
}

/// Tracks the order-`k` coefficient along a flow.
pub fn flattening_check(tr: &TrajectoryRecord, f: &Objective, k: usize) -> Result<FlatteningReport> {
    if tr.is_empty() {
        return Err(FlatError::InvalidArgument {
            field: "trajectory",
            reason: "trajectory is empty".into(),
        });
    }
    let coefficients = tr
        .states
        .iter()
        .enumerate()
        .map(|(i, x)| {
            flatness_coefficient(f, x, k, 16, 0)
                .map(|c| c.value)
                .map_err(|e| FlatError::Precondition(format!("coefficient failed at record {i}: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let min_decrease = coefficients
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min);
    let monotone = coefficients.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let fitted_rate = if coefficients.len() >= 2 && coefficients.iter().all(|c| *c > 0.0) {
        let logs: Vec<f64> = coefficients.iter().map(|c| c.ln()).collect();
        least_squares(&tr.times, &logs).0
    } else {
        0.0
    };
    Ok(FlatteningReport {
        order: k,
        coefficients,
        monotone,
        min_decrease,
        fitted_rate,
    })
}

/// Step-size schedule of [`gradient_descent`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepRule {
    /// `x_{k+1} = x_k − h∇f(x_k)`
    Constant { h: f64 },
    /// `x_{k+1} = x_k − scale·(k+1)^{−exponent}·∇f(x_k)`
    PowerDecay { scale: f64, exponent: f64 },
    /// Steps of length `scale·(k+1)^{−exponent}` along `−∇f/|∇f|`.
    Normalized { scale: f64, exponent: f64 },
}

impl StepRule {
    pub fn step(&self, k: usize) -> f64 {
        match *self {
            StepRule::Constant { h } => h,
            StepRule::PowerDecay { scale, exponent } | StepRule::Normalized { scale, exponent } => {
                scale * ((k + 1) as f64).powf(-exponent)
            }
        }
    }
}

/// `x_{k+1} = x_k − h_k·∇f(x_k)` (or the normalized variant), recording every
/// iterate with `t = k`.
pub fn gradient_descent(f: &Objective, x0: &[f64], rule: StepRule, iters: usize) -> Result<TrajectoryRecord> {
    if x0.len() != f.dim() {
        return Err(FlatError::DimensionMismatch {
            expected: f.dim(),
            got: x0.len(),
        });
    }
    if iters == 0 {
        return Err(FlatError::InvalidArgument {
            field: "iters",
            reason: "at least one iteration is required".into(),
        });
    }
    let mut x = x0.to_vec();
    let mut rec = TrajectoryRecord {
        times: vec![0.0],
        states: vec![x.clone()],
        f_values: vec![f.eval(&x)],
        c_values: vec![f64::NAN],
        coeff_values: None,
        step_size: rule.step(0),
        termination: Termination::TimeLimit,
        max_halvings: 0,
    };
    for k in 0..iters {
        let g = f.gradient(&x);
        let h = rule.step(k);
        let scale = match rule {
            StepRule::Normalized { .. } => {
                let gn = norm(&g);
                if gn == 0.0 {
                    0.0
                } else {
                    h / gn
                }
            }
            _ => h,
        };
        x = axpy(-scale, &g, &x);
        let fx = f.eval(&x);
        if x.iter().any(|a| !a.is_finite()) || !fx.is_finite() {
            return Err(FlatError::NonFinite { step: k + 1 });
        }
        rec.times.push((k + 1) as f64);
        rec.states.push(x.clone());
        rec.f_values.push(fx);
        rec.c_values.push(f64::NAN);
    }
    Ok(rec)
}

/// Wraps a closure as a [`Field::Custom`].
pub fn custom_field<F>(g: F) -> Field
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
{
    Field::Custom(Arc::new(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::build_catalog_objective;

    #[test]
    fn mf1_ab_symmetry() {
        let g = GeneratorSet::new(vec![diagonal_generator(&[1.0, 1.0, -1.0])]).unwrap();
        let q = g.coefficients(&[1.0, 2.0, 3.0]);
        assert!((q[0] - (1.0 + 4.0 - 9.0) / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn monomial_coefficients_are_proportional() {
        let g = monomial_generators(&[1, 2, 3]).unwrap();
        assert_eq!(g.sym_basis.len(), 2);
        for (i, b) in g.sym_basis.iter().enumerate() {
            for (j, c) in g.sym_basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((b.frob_dot(c) - want).abs() < 1e-12);
            }
        }
        // q lies in span{3x₁² − x₃², 3x₂² − 2x₃²}
        let cq = ConservedQuantity::new(g, None).unwrap();
        let x = [(1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt(), 1.0];
        assert!(cq.c(&x) < 1e-28);
    }

    #[test]
    fn skew_algebra_has_zero_c() {
        let g = skew_generators(2).unwrap();
        assert!(g.sym_basis.is_empty());
        let cq = ConservedQuantity::new(g, None).unwrap();
        assert_eq!(cq.c(&[1.0, 2.0]), 0.0);
        assert_eq!(cq.grad_c(&[1.0, 2.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn dependent_generators_are_rejected() {
        let a = diagonal_generator(&[1.0, -1.0]);
        let err = GeneratorSet::new(vec![a.clone(), a.scale(2.0)]).unwrap_err();
        assert_eq!(err, FlatError::RankDeficient { rank: 1, count: 2 });
    }

    #[test]
    fn matfac_forms_match_balance() {
        let g = matfac_generators(2, 3, 2).unwrap();
        assert_eq!(g.sym_basis.len(), 3);
        let x = Mat::from_vec(2, 2, vec![1.0, 2.0, -0.5, 0.3]);
        let y = Mat::from_vec(2, 3, vec![0.2, 1.0, -1.0, 0.7, 0.1, 0.4]);
        let z = crate::funcmodel::pack_factors(&x, &y);
        let bal = x.transpose().matmul(&x).sub(&y.matmul(&y.transpose()));
        // xᵀ sym(A_ab) x = (XᵀX − YYᵀ)_ab for every generator
        for (gi, a) in g.generators.iter().enumerate() {
            let (ra, rb) = (gi / 2, gi % 2);
            assert!((dot(&z, &a.matvec(&z)) - bal[(ra, rb)]).abs() < 1e-12);
        }
    }

    #[test]
    fn anchored_c_vanishes_at_anchor() {
        let g = monomial_generators(&[1, 1]).unwrap();
        let cq = ConservedQuantity::new(g, Some(vec![2.0, 0.5])).unwrap();
        assert_eq!(cq.c(&[2.0, 0.5]), 0.0);
        assert!(norm(&cq.grad_c(&[2.0, 0.5])) == 0.0);
    }

    #[test]
    fn monomial_flow_converges() {
        let f = build_catalog_objective("monomial", &[1.0, 1.0]).unwrap();
        let cq = ConservedQuantity::new(monomial_generators(&[1, 1]).unwrap(), None).unwrap();
        let tr = flow_integrate(&Field::NegGradC, &f, Some(&cq), &[2.0, 0.5], 10.0, 1e-2).unwrap();
        let end = tr.last_state();
        assert!((end[0] - 1.0).abs() < 1e-6 && (end[1] - 1.0).abs() < 1e-6, "{end:?}");
        assert!(tr.f_values.iter().all(|v| *v <= 1e-10));
        let verb = flow_integrate(&Field::Monomial(vec![1, 1]), &f, Some(&cq), &[2.0, 0.5], 10.0, 1e-2).unwrap();
        let end = verb.last_state();
        assert!((end[0] - 1.0).abs() < 1e-6 && (end[1] - 1.0).abs() < 1e-6, "{end:?}");
    }

    #[test]
    fn stationary_flow() {
        let f = build_catalog_objective("monomial", &[1.0, 1.0]).unwrap();
        let cq = ConservedQuantity::new(monomial_generators(&[1, 1]).unwrap(), None).unwrap();
        let tr = flow_integrate(&Field::NegGradC, &f, Some(&cq), &[1.0, 1.0], 1.0, 0.1).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.termination, Termination::GradientSmall);
        assert_eq!(conservation_check(&tr, Conserved::CConserved), 0.0);
    }

    #[test]
    fn quadratic_descent_is_geometric() {
        let f = Objective::quadratic(Mat::identity(2));
        let tr = gradient_descent(&f, &[1.0, 0.0], StepRule::Constant { h: 0.1 }, 100).unwrap();
        assert_eq!(tr.len(), 101);
        assert!((tr.last_state()[0] - 0.9f64.powi(100)).abs() < 1e-15);
    }

    #[test]
    fn c_fields_need_a_quantity() {
        let f = Objective::quadratic(Mat::identity(2));
        assert!(matches!(
            flow_integrate(&Field::NegGradC, &f, None, &[1.0, 0.0], 1.0, 0.1),
            Err(FlatError::InvalidArgument { field: "cq", .. })
        ));
    }
}
