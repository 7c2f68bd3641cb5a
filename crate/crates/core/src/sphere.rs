//! Multi-start maximization over the unit sphere.
//!
//! Starts are quasirandom directions; each start is refined independently by
//! Riemannian gradient ascent and a compass polish, so the result for start
//! `i` does not depend on how many other starts there are. Together with the
//! prefix property of [`sphere_directions`] this makes the reduced maximum
//! monotone in the budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::linalg::{dot, normalized};

/// Root of `x^{d+1} = x + 1`, the generalized golden ratio of dimension `d`.
fn harmonious(d: usize) -> f64 {
    let mut x = 2.0f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}

/// Unit directions in `ℝⁿ`: `±e₁, …, ±eₙ` first, then a seeded additive
/// recurrence mapped through Box–Muller. Direction `k` depends only on
/// `(n, k, seed)`.
pub fn sphere_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(n > 0, "sphere dimension must be positive");
    let d = n + (n % 2);
    let phi = harmonious(d);
    let alpha: Vec<f64> = (1..=d).map(|j| phi.powi(-(j as i32)).fract()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();

    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        if k < 2 * n {
            let mut e = vec![0.0; n];
            e[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
            out.push(e);
            continue;
        }
        let j = (k - 2 * n + 1) as f64;
        let u: Vec<f64> = (0..d).map(|i| (offset[i] + j * alpha[i]).fract()).collect();
        let mut z = Vec::with_capacity(d);
        for p in u.chunks(2) {
            let rad = (-2.0 * p[0].max(1e-300).ln()).sqrt();
            let ang = std::f64::consts::TAU * p[1];
            z.push(rad * ang.cos());
            z.push(rad * ang.sin());
        }
        z.truncate(n);
        out.push(normalized(&z).unwrap_or_else(|| {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            e
        }));
    }
    out
}

/// Orthonormal basis of the tangent space `v^⊥` (`n − 1` vectors).
pub(crate) fn tangent_basis(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let mut basis: Vec<Vec<f64>> = vec![v.to_vec()];
    for i in 0..n {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        if let Some(u) = normalized(&w) {
            if dot(&w, &w) > 1e-16 {
                basis.push(u);
            }
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

fn rotate(v: &[f64], u: &[f64], theta: f64) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    let w: Vec<f64> = v.iter().zip(u).map(|(a, b)| c * a + s * b).collect();
    normalized(&w).expect("rotation of a unit vector stays on the sphere")
}

/// Tunables of the per-start refinement.
#[derive(Debug, Clone, Copy)]
pub struct AscentOptions {
    pub max_ascent_iters: usize,
    pub initial_angle: f64,
    pub min_angle: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            max_ascent_iters: 200,
            initial_angle: 0.1,
            min_angle: 1e-12,
        }
    }
}

/// Best point found by [`maximize_on_sphere`].
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMax {
    pub value: f64,
    pub direction: Vec<f64>,
    /// Index of the winning start.
    pub start: usize,
}

pub type SphereValue<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);
pub type SphereGrad<'a> = &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync);

/// Refines a single start. Values are compared with `>` so a refinement never
/// lowers the value of its start.
pub(crate) fn refine(
    v0: &[f64],
    value: SphereValue<'_>,
    grad: Option<SphereGrad<'_>>,
    opts: &AscentOptions,
) -> (f64, Vec<f64>) {
    let mut v = v0.to_vec();
    let mut best = value(&v);
    if !best.is_finite() {
        best = f64::NEG_INFINITY;
    }
    if v.len() == 1 {
        return (best, v);
    }

    if let Some(g) = grad {
        let mut theta = opts.initial_angle;
        for _ in 0..opts.max_ascent_iters {
            let gv = g(&v);
            let radial = dot(&gv, &v);
            let tang: Vec<f64> = gv.iter().zip(&v).map(|(a, b)| a - radial * b).collect();
            let Some(dir) = normalized(&tang) else { break };
            if dot(&tang, &tang).sqrt() <= 1e-300 {
                break;
            }
            let mut moved = false;
            while theta >= opts.min_angle {
                let cand = rotate(&v, &dir, theta);
                let cv = value(&cand);
                if cv > best {
                    best = cv;
                    v = cand;
                    theta = (theta * 1.5).min(1.0);
                    moved = true;
                    break;
                }
                theta *= 0.5;
            }
            if !moved {
                break;
            }
        }
    }

    // Compass polish along the tangent axes of the current point.
    let mut delta = opts.initial_angle;
    while delta >= opts.min_angle {
        let mut improved = false;
        for u in tangent_basis(&v) {
            for s in [delta, -delta] {
                let cand = rotate(&v, &u, s);
                let cv = value(&cand);
                if cv > best {
                    best = cv;
                    v = cand;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    (best, v)
}

/// Maximizes `value` over the unit sphere from the given starts. Starts are
/// refined in parallel; ties go to the lowest start index.
pub fn maximize_on_sphere(
    starts: &[Vec<f64>],
    value: SphereValue<'_>,
    grad: Option<SphereGrad<'_>>,
    opts: &AscentOptions,
) -> SphereMax {
    assert!(!starts.is_empty(), "at least one start is required");
    let results: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .map(|v0| refine(v0, value, grad, opts))
        .collect();
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.0 > results[best].0 {
            best = i;
        }
    }
    let (value, direction) = results[best].clone();
    SphereMax {
        value,
        direction,
        start: best,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    #[test]
    fn directions_are_unit_and_prefix_stable() {
        let a = sphere_directions(3, 20, 5);
        let b = sphere_directions(3, 40, 5);
        assert_eq!(&b[..20], &a[..]);
        assert_eq!(a[0], vec![1.0, 0.0, 0.0]);
        assert_eq!(a[5], vec![0.0, 0.0, -1.0]);
        for d in &b {
            assert!((norm(d) - 1.0).abs() < 1e-14);
        }
        assert_ne!(sphere_directions(3, 8, 6)[7], b[7]);
    }

    #[test]
    fn finds_top_eigenvector() {
        // max of vᵀDv on the sphere is the largest diagonal entry
        let d = [1.0, 5.0, 2.0];
        let val = |v: &[f64]| v.iter().zip(&d).map(|(a, b)| b * a * a).sum::<f64>();
        let grad = |v: &[f64]| v.iter().zip(&d).map(|(a, b)| 2.0 * b * a).collect::<Vec<_>>();
        let starts = sphere_directions(3, 12, 1)[6..].to_vec();
        let m = maximize_on_sphere(&starts, &val, Some(&grad), &AscentOptions::default());
        assert!((m.value - 5.0).abs() < 1e-12, "{}", m.value);
        let m2 = maximize_on_sphere(&starts, &val, None, &AscentOptions::default());
        assert!((m2.value - 5.0).abs() < 1e-12, "{}", m2.value);
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let v = normalized(&[1.0, 2.0, -0.5, 0.3]).unwrap();
        let t = tangent_basis(&v);
        assert_eq!(t.len(), 3);
        for (i, a) in t.iter().enumerate() {
            assert!(dot(a, &v).abs() < 1e-14);
            for b in &t[i + 1..] {
                assert!(dot(a, b).abs() < 1e-14);
            }
        }
    }
}
