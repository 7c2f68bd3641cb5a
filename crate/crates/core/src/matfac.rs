//! Flat minima of two-factor matrix factorization `f(X,Y) = ½‖XY − M‖²_F`
//! and of its entrywise-ℓ1 counterpart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{hessian_lambda1_seeded, lipschitz_modulus};
use crate::error::{FlatError, Result};
use crate::funcmodel::{build_catalog_objective, mf1_ab_flat_points, pack_factors, unpack_factors, Objective};
use crate::linalg::{inverse, svd, Mat, Svd};
use crate::sphere::{maximize_on_sphere, sphere_directions, AscentOptions};

/// Singular values below `RANK_CUTOFF·σ₁` count as zero.
pub const RANK_CUTOFF: f64 = 1e-10;
/// Relative gap below which singular values are counted as equal.
pub const MULTIPLICITY_GAP: f64 = 1e-8;
/// Largest admissible condition number of the gauge matrix `A`.
pub const MAX_CONDITION: f64 = 1e12;

/// A factorization point `(X, Y)` for the target `M` with cached spectra.
#[derive(Debug, Clone)]
pub struct FactorPair {
    pub target: Mat,
    pub x: Mat,
    pub y: Mat,
    /// `‖XY − M‖_F`
    pub residual: f64,
    pub svd_x: Svd,
    pub svd_y: Svd,
    pub svd_m: Svd,
    /// `XᵀX − YYᵀ`
    pub balance: Mat,
}

impl FactorPair {
    pub fn new(target: Mat, x: Mat, y: Mat) -> Result<Self> {
        let (m, n) = target.shape();
        if x.rows() != m {
            return Err(FlatError::DimensionMismatch {
                expected: m,
                got: x.rows(),
            });
        }
        if y.cols() != n {
            return Err(FlatError::DimensionMismatch {
                expected: n,
                got: y.cols(),
            });
        }
        if x.cols() != y.rows() {
            return Err(FlatError::DimensionMismatch {
                expected: x.cols(),
                got: y.rows(),
            });
        }
        let residual = x.matmul(&y).sub(&target).frobenius_norm();
        let balance = x.transpose().matmul(&x).sub(&y.matmul(&y.transpose()));
        Ok(FactorPair {
            svd_x: svd(&x),
            svd_y: svd(&y),
            svd_m: svd(&target),
            target,
            x,
            y,
            residual,
            balance,
        })
    }

    pub fn from_packed(target: Mat, z: &[f64], r: usize) -> Result<Self> {
        let (m, n) = target.shape();
        if z.len() != m * r + r * n {
            return Err(FlatError::DimensionMismatch {
                expected: m * r + r * n,
                got: z.len(),
            });
        }
        let (x, y) = unpack_factors(z, m, n, r);
        FactorPair::new(target, x, y)
    }

    pub fn inner_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn packed(&self) -> Vec<f64> {
        pack_factors(&self.x, &self.y)
    }

    pub fn norm_x(&self) -> f64 {
        self.svd_x.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn norm_y(&self) -> f64 {
        self.svd_y.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn norm_m(&self) -> f64 {
        self.svd_m.sigma.first().copied().unwrap_or(0.0)
    }

    fn scale(&self) -> f64 {
        1.0 + self.target.frobenius_norm()
    }

    pub fn is_global_minimum(&self) -> bool {
        self.residual <= 1e-8 * self.scale()
    }

    fn require_global_minimum(&self) -> Result<()> {
        if self.is_global_minimum() {
            Ok(())
        } else {
            Err(FlatError::NotGlobalMinimum(self.residual))
        }
    }

    /// `½‖XY − M‖²_F` over `(vec X, vec Y)` with the matrix-free Hessian.
    pub fn objective(&self) -> Objective {
        let (m, n) = self.target.shape();
        let mut params = vec![m as f64, n as f64, self.inner_dim() as f64];
        params.extend_from_slice(self.target.as_slice());
        build_catalog_objective("mf_frobenius", &params).expect("factor pair shapes are consistent")
    }

    /// `∇²f(X,Y)(H,K) = ((HY+XK)Yᵀ + RKᵀ, Xᵀ(HY+XK) + HᵀR)`, `R = XY − M`.
    pub fn hess_vec(&self, h: &Mat, k: &Mat) -> (Mat, Mat) {
        let res = self.x.matmul(&self.y).sub(&self.target);
        let w = h.matmul(&self.y).add(&self.x.matmul(k));
        (
            w.matmul(&self.y.transpose()).add(&res.matmul(&k.transpose())),
            self.x.transpose().matmul(&w).add(&h.transpose().matmul(&res)),
        )
    }
}

/// `(X, Y) = (UΣ^{1/2}A, A⁻¹Σ^{1/2}Vᵀ)` from the thin SVD of `M` at its
/// numerical rank.
pub fn exact_factorizations(target: &Mat, a: &Mat) -> Result<FactorPair> {
    let d = svd(target);
    let r = d.rank(RANK_CUTOFF);
    if a.shape() != (r, r) {
        return Err(FlatError::DimensionMismatch {
            expected: r,
            got: a.rows(),
        });
    }
    let a_inv = inverse(a, MAX_CONDITION)?;
    let (u_r, sqrt_s, v_r) = thin_factors(&d, r);
    let x = u_r.matmul(&sqrt_s).matmul(a);
    let y = a_inv.matmul(&sqrt_s).matmul(&v_r.transpose());
    FactorPair::new(target.clone(), x, y)
}

/// `(U_r, Σ_r^{1/2}, V_r)`
fn thin_factors(d: &Svd, r: usize) -> (Mat, Mat, Mat) {
    let u_r = d.u.block(0, d.u.rows(), 0, r);
    let v_r = d.v.block(0, d.v.rows(), 0, r);
    let sqrt_s = Mat::from_diag(&d.sigma[..r].iter().map(|s| s.sqrt()).collect::<Vec<_>>());
    (u_r, sqrt_s, v_r)
}

/// The balanced factorization `(UΣ^{1/2}, Σ^{1/2}Vᵀ)`.
pub fn balanced_factorization(target: &Mat) -> Result<FactorPair> {
    let r = svd(target).rank(RANK_CUTOFF);
    exact_factorizations(target, &Mat::identity(r))
}

/// Recovers `A = Σ^{-1/2}U_rᵀX` and returns it with
/// `‖Y − A⁻¹Σ^{1/2}V_rᵀ‖_F`.
pub fn recover_gauge(p: &FactorPair) -> Result<(Mat, f64)> {
    p.require_global_minimum()?;
    let r = p.svd_m.rank(RANK_CUTOFF);
    if r != p.inner_dim() {
        return Err(FlatError::Precondition(format!(
            "inner dimension {} differs from rank(M) = {r}",
            p.inner_dim()
        )));
    }
    let (u_r, sqrt_s, v_r) = thin_factors(&p.svd_m, r);
    let inv_sqrt = Mat::from_diag(&p.svd_m.sigma[..r].iter().map(|s| 1.0 / s.sqrt()).collect::<Vec<_>>());
    let a = inv_sqrt.matmul(&u_r.transpose()).matmul(&p.x);
    let y = inverse(&a, MAX_CONDITION)?.matmul(&sqrt_s).matmul(&v_r.transpose());
    let err = y.sub(&p.y).frobenius_norm();
    Ok((a, err))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrobeniusVerdict {
    pub is_flat: bool,
    pub norm_x: f64,
    pub norm_y: f64,
    /// `√‖M‖₂`
    pub target_norm: f64,
    /// `‖X‖₂² + ‖Y‖₂²`
    pub lambda1: f64,
    /// `‖X‖₂² + ‖Y‖₂² − 2‖M‖₂ ≥ 0`
    pub spectral_gap: f64,
    /// `‖X‖₂‖Y‖₂ − ‖XY‖₂ ≥ 0`
    pub product_tightness: f64,
}

/// Flatness of a global minimum: `‖X‖₂ = ‖Y‖₂ = √‖M‖₂`.
pub fn flat_check_frobenius(p: &FactorPair) -> Result<FrobeniusVerdict> {
    p.require_global_minimum()?;
    let (nx, ny, nm) = (p.norm_x(), p.norm_y(), p.norm_m());
    let target = nm.sqrt();
    let close = |a: f64| (a - target).abs() <= 1e-8 * target.max(f64::MIN_POSITIVE);
    let nxy = p.x.matmul(&p.y).spectral_norm();
    Ok(FrobeniusVerdict {
        is_flat: close(nx) && close(ny),
        norm_x: nx,
        norm_y: ny,
        target_norm: target,
        lambda1: nx * nx + ny * ny,
        spectral_gap: nx * nx + ny * ny - 2.0 * nm,
        product_tightness: nx * ny - nxy,
    })
}

/// `λ₁(∇²f(X,Y))` by power iteration on the matrix-free Hessian.
pub fn power_lambda1(p: &FactorPair, seed: u64) -> Result<f64> {
    let f = p.objective();
    let c = hessian_lambda1_seeded(&f, &p.packed(), 1e-15, 200_000, seed)?;
    Ok(c.value)
}

/// An element `(H, K)` of the top Hessian eigenspace at a global minimum:
/// `H = U_X[A 0; 0 0]U_Yᵀ`, `K = V_X[B 0; 0 0]V_Yᵀ`, `‖X‖₂A = ‖Y‖₂B`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenspaceElement {
    pub h: Mat,
    pub k: Mat,
    pub a: Mat,
    pub b: Mat,
    pub rayleigh: f64,
}

impl EigenspaceElement {
    /// `‖HᵀH − KKᵀ‖_F`
    pub fn balance_residual(&self) -> f64 {
        self.h
            .transpose()
            .matmul(&self.h)
            .sub(&self.k.matmul(&self.k.transpose()))
            .frobenius_norm()
    }
}

/// Top multiplicities `(d_X, d_Y)` of the singular values of `X` and `Y`.
pub fn top_multiplicities(p: &FactorPair) -> (usize, usize) {
    let count = |s: &Svd| {
        let r = s.rank(RANK_CUTOFF);
        s.top_multiplicity(MULTIPLICITY_GAP).min(r.max(1))
    };
    (count(&p.svd_x), count(&p.svd_y))
}

/// Builds the eigenspace element for the block `A ∈ ℝ^{d_X×d_Y}`.
pub fn eigenspace_element(p: &FactorPair, a: &Mat) -> Result<EigenspaceElement> {
    let (dx, dy) = top_multiplicities(p);
    if a.shape() != (dx, dy) {
        return Err(FlatError::DimensionMismatch {
            expected: dx * dy,
            got: a.rows() * a.cols(),
        });
    }
    let (m, n, r) = (p.x.rows(), p.y.cols(), p.inner_dim());
    let (nx, ny) = (p.norm_x(), p.norm_y());
    if ny == 0.0 {
        return Err(FlatError::Precondition("Y vanishes".into()));
    }
    let b = a.scale(nx / ny);
    let mut a_pad = Mat::zeros(m, r);
    let mut b_pad = Mat::zeros(r, n);
    for i in 0..dx {
        for j in 0..dy {
            a_pad[(i, j)] = a[(i, j)];
            b_pad[(i, j)] = b[(i, j)];
        }
    }
    let h = p.svd_x.u.matmul(&a_pad).matmul(&p.svd_y.u.transpose());
    let k = p.svd_x.v.matmul(&b_pad).matmul(&p.svd_y.v.transpose());
    let (hh, kk) = p.hess_vec(&h, &k);
    let num = hh.frob_dot(&h) + kk.frob_dot(&k);
    let den = h.frob_dot(&h) + k.frob_dot(&k);
    Ok(EigenspaceElement {
        h,
        k,
        a: a.clone(),
        b,
        rayleigh: if den > 0.0 { num / den } else { 0.0 },
    })
}

/// Minimizes `‖HᵀH − KKᵀ‖_F` over unit eigenspace elements at a flat
/// global minimum with `‖X‖₂ = ‖Y‖₂`.
pub fn balanced_eigvec_residual(p: &FactorPair, budget: usize, seed: u64) -> Result<(f64, EigenspaceElement)> {
    p.require_global_minimum()?;
    let (nx, ny) = (p.norm_x(), p.norm_y());
    if (nx - ny).abs() > 1e-8 * nx.max(ny) {
        return Err(FlatError::Precondition(format!(
            "‖X‖₂ = {nx} and ‖Y‖₂ = {ny} differ"
        )));
    }
    if budget == 0 {
        return Err(FlatError::InvalidArgument {
            field: "budget",
            reason: "budget must be at least 1".into(),
        });
    }
    let (dx, dy) = top_multiplicities(p);
    let s = nx / ny;
    // ‖H‖² + ‖K‖² = (1 + s²)‖A‖² = 1 on the unit sphere of `a`.
    let c = 1.0 / (1.0 + s * s).sqrt();
    let to_a = |v: &[f64]| Mat::from_vec(dx, dy, v.iter().map(|t| c * t).collect());
    let ux_t = p.svd_x.u.transpose();
    let vx_t = p.svd_x.v.transpose();
    let uy = p.svd_y.u.clone();
    let vy = p.svd_y.v.clone();

    let sq = |v: &[f64]| -> f64 {
        match eigenspace_element(p, &to_a(v)) {
            Ok(e) => {
                let r = e.balance_residual();
                -(r * r)
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };
    // dφ = 4⟨HD, dH⟩ − 4⟨DK, dK⟩ for φ = ‖D‖², D = HᵀH − KKᵀ.
    let grad = |v: &[f64]| -> Vec<f64> {
        let e = eigenspace_element(p, &to_a(v)).expect("shape fixed");
        let d = e.h.transpose().matmul(&e.h).sub(&e.k.matmul(&e.k.transpose()));
        let gh = ux_t.matmul(&e.h.matmul(&d).scale(4.0)).matmul(&uy);
        let gk = vx_t.matmul(&d.matmul(&e.k).scale(4.0)).matmul(&vy);
        let mut out = Vec::with_capacity(dx * dy);
        for i in 0..dx {
            for j in 0..dy {
                out.push(-c * (gh[(i, j)] - s * gk[(i, j)]));
            }
        }
        out
    };
    let starts = sphere_directions(dx * dy, budget, seed);
    let best = maximize_on_sphere(&starts, &sq, Some(&grad), &AscentOptions::default());
    let e = eigenspace_element(p, &to_a(&best.direction))?;
    Ok((e.balance_residual(), e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearReport {
    /// `‖X‖_F² + ‖Y‖_F² − 2‖M‖_*`
    pub gap: f64,
    /// `‖XᵀX − YYᵀ‖_F`
    pub balance: f64,
    pub scale: f64,
    pub frobenius_optimal: bool,
}

pub fn nuclear_balance_check(p: &FactorPair) -> Result<NuclearReport> {
    p.require_global_minimum()?;
    let fx = p.x.frobenius_norm();
    let fy = p.y.frobenius_norm();
    let nuc: f64 = p.svd_m.sigma.iter().sum();
    let gap = fx * fx + fy * fy - 2.0 * nuc;
    let balance = p.balance.frobenius_norm();
    let scale = 1.0 + nuc;
    Ok(NuclearReport {
        gap,
        balance,
        scale,
        frobenius_optimal: gap <= 1e-8 * scale && balance <= 1e-8 * scale,
    })
}

/// Random `r×r` gauge with entries in `[−1, 1]` plus `I`, rejected until
/// its condition number is below `1e6`.
pub fn random_gauge(r: usize, rng: &mut ChaCha8Rng) -> Mat {
    loop {
        let data: Vec<f64> = (0..r * r).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let a = Mat::from_vec(r, r, data).add(&Mat::identity(r));
        if inverse(&a, 1e6).is_ok() {
            return a;
        }
    }
}

/// Seeded sequence of random gauges.
pub fn random_gauges(r: usize, count: usize, seed: u64) -> Vec<Mat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_gauge(r, &mut rng)).collect()
}

/// Flat range `√(b/a) ≤ t ≤ √(a/b)` of the gauges `diag(1, t)` over
/// `M = diag(a, b)` with `a ≥ b > 0`.
pub fn unbalanced_flat_range(a: f64, b: f64) -> (f64, f64) {
    ((b / a).sqrt(), (a / b).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Check {
    pub t: f64,
    pub closed_form: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Analysis {
    pub a: f64,
    pub b: f64,
    pub flat_points: Vec<[f64; 3]>,
    /// Minimizer of `t ↦ lip²`; `None` when `a = b = 0`.
    pub t_star: Option<f64>,
    pub lip_sq_at_t_star: Option<f64>,
    pub checks: Vec<L1Check>,
    /// Minimizer of the numerically computed `lip²` along `x_t`.
    pub numeric_t_star: Option<f64>,
}

/// `lip²(x_t) = 2/t² + (|a| + |b|)²t²` along `x_t = (at, bt, 1/t)`.
pub fn l1_lip_squared(a: f64, b: f64, t: f64) -> f64 {
    let s = a.abs() + b.abs();
    2.0 / (t * t) + s * s * t * t
}

fn numeric_lip_sq(f: &Objective, a: f64, b: f64, t: f64) -> Result<f64> {
    let c = lipschitz_modulus(f, &[a * t, b * t, 1.0 / t])?;
    Ok(c.value * c.value)
}

/// Closed-form flat minima of `|x₁x₃ − a| + |x₂x₃ − b|` checked against the
/// composite Lipschitz modulus at each `t` in `ts`.
pub fn l1_flat_analysis(a: f64, b: f64, ts: &[f64]) -> Result<L1Analysis> {
    let f = build_catalog_objective("mf1_ab", &[a, b])?;
    let checks = ts
        .iter()
        .map(|&t| {
            Ok(L1Check {
                t,
                closed_form: l1_lip_squared(a, b, t),
                numeric: numeric_lip_sq(&f, a, b, t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let s = a.abs() + b.abs();
    let (t_star, lip_star, numeric_t_star) = if s == 0.0 {
        (None, None, None)
    } else {
        let t = (std::f64::consts::SQRT_2 / s).sqrt();
        // golden-section search on the numerically evaluated lip² in log t
        let g = |u: f64| numeric_lip_sq(&f, a, b, u.exp()).unwrap_or(f64::INFINITY);
        let (mut lo, mut hi) = ((t / 10.0).ln(), (t * 10.0).ln());
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c1 = hi - phi * (hi - lo);
        let mut c2 = lo + phi * (hi - lo);
        let (mut g1, mut g2) = (g(c1), g(c2));
        for _ in 0..200 {
            if g1 <= g2 {
                hi = c2;
                c2 = c1;
                g2 = g1;
                c1 = hi - phi * (hi - lo);
                g1 = g(c1);
            } else {
                lo = c1;
                c1 = c2;
                g1 = g2;
                c2 = lo + phi * (hi - lo);
                g2 = g(c2);
            }
        }
        (Some(t), Some(l1_lip_squared(a, b, t)), Some((0.5 * (lo + hi)).exp()))
    };
    Ok(L1Analysis {
        a,
        b,
        flat_points: mf1_ab_flat_points(a, b),
        t_star,
        lip_sq_at_t_star: lip_star,
        checks,
        numeric_t_star,
    })
}

/// `‖DP − PD‖_F`
pub fn commutation_residual(d: &Mat, p: &Mat) -> f64 {
    d.matmul(p).sub(&p.matmul(d)).frobenius_norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m21() -> Mat {
        Mat::from_diag(&[2.0, 1.0])
    }

    #[test]
    fn identity_gauge() {
        let p = exact_factorizations(&m21(), &Mat::identity(2)).unwrap();
        let s2 = 2f64.sqrt();
        assert!(p.x.sub(&Mat::from_diag(&[s2, 1.0])).max_abs() < 1e-14);
        assert!(p.y.sub(&Mat::from_diag(&[s2, 1.0])).max_abs() < 1e-14);
        let v = flat_check_frobenius(&p).unwrap();
        assert!(v.is_flat && v.spectral_gap.abs() < 1e-12);
        let nuc = nuclear_balance_check(&p).unwrap();
        assert!(nuc.frobenius_optimal && nuc.gap.abs() < 1e-12);
    }

    #[test]
    fn unbalanced_example() {
        let s2 = 2f64.sqrt();
        let p = exact_factorizations(&m21(), &Mat::from_diag(&[1.0, s2])).unwrap();
        assert!(p.balance.sub(&Mat::from_diag(&[0.0, 1.5])).max_abs() < 1e-14);
        assert!(flat_check_frobenius(&p).unwrap().is_flat);
        let nuc = nuclear_balance_check(&p).unwrap();
        assert!((nuc.gap - 0.5).abs() < 1e-12 && !nuc.frobenius_optimal);
        let (res, e) = balanced_eigvec_residual(&p, 8, 0).unwrap();
        assert!(res <= 1e-8, "{res}");
        assert!((e.rayleigh - 4.0).abs() < 1e-10);
    }

    #[test]
    fn sharp_gauge_is_not_flat() {
        let p = exact_factorizations(&m21(), &Mat::from_diag(&[3.0, 1.0])).unwrap();
        let v = flat_check_frobenius(&p).unwrap();
        assert!(!v.is_flat && (v.norm_x - 3.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(balanced_eigvec_residual(&p, 4, 0), Err(FlatError::Precondition(_))));
    }

    #[test]
    fn singular_gauge_rejected() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(exact_factorizations(&m21(), &a), Err(FlatError::Singular(_))));
    }

    #[test]
    fn hessian_eigenspace_membership() {
        let p = balanced_factorization(&m21()).unwrap();
        let e = eigenspace_element(&p, &Mat::from_vec(1, 1, vec![0.5f64.sqrt()])).unwrap();
        let (hh, kk) = p.hess_vec(&e.h, &e.k);
        assert!(hh.sub(&e.h.scale(4.0)).max_abs() < 1e-12);
        assert!(kk.sub(&e.k.scale(4.0)).max_abs() < 1e-12);
        assert!((power_lambda1(&p, 0).unwrap() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn gauge_recovery() {
        let a = Mat::from_rows(&[vec![1.0, 0.3], vec![-0.4, 2.0]]);
        let p = exact_factorizations(&m21(), &a).unwrap();
        let (rec, err) = recover_gauge(&p).unwrap();
        assert!(rec.sub(&a).max_abs() < 1e-10 && err < 1e-10);
    }

    #[test]
    fn l1_closed_forms() {
        let an = l1_flat_analysis(1.0, 1.0, &[0.5, 1.0, 2.0]).unwrap();
        for c in &an.checks {
            assert!((c.closed_form - c.numeric).abs() <= 1e-9 * c.closed_form);
        }
        let t = an.t_star.unwrap();
        assert!((t - 2f64.powf(-0.25)).abs() < 1e-15);
        assert!((an.lip_sq_at_t_star.unwrap() - 4.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((an.numeric_t_star.unwrap() - t).abs() < 1e-6);
        let zero = l1_flat_analysis(0.0, 0.0, &[1.0]).unwrap();
        assert_eq!(zero.flat_points, vec![[0.0; 3]]);
        assert!(zero.t_star.is_none());
    }

    #[test]
    fn commuting_blocks() {
        let d = Mat::from_diag(&[2.0, 2.0, 1.0]);
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let p = Mat::from_rows(&[vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, -1.0]]);
        assert!(commutation_residual(&d, &p) <= 1e-12);
    }
}
