//! Central finite differences used as fallback oracles.

use super::Objective;
use crate::linalg::{axpy, norm};

/// Central stencil weights on offsets `-k..=k` for the `k`-th derivative.
pub(crate) fn central_weights(k: usize) -> &'static [f64] {
    const W1: [f64; 3] = [-0.5, 0.0, 0.5];
    const W2: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0];
    const W3: [f64; 7] = [0.125, -1.0, 1.625, 0.0, -1.625, 1.0, -0.125];
    const W4: [f64; 9] = [
        7.0 / 240.0,
        -0.4,
        169.0 / 60.0,
        -122.0 / 15.0,
        91.0 / 8.0,
        -122.0 / 15.0,
        169.0 / 60.0,
        -0.4,
        7.0 / 240.0,
    ];
    match k {
        1 => &W1,
        2 => &W2,
        3 => &W3,
        4 => &W4,
        _ => panic!("finite-difference order {k} not supported (1..=4)"),
    }
}

/// Step `h = ε^{1/(k+2)}·(1+|x|)`.
pub fn fd_step(x: &[f64], k: usize) -> f64 {
    f64::EPSILON.powf(1.0 / (k as f64 + 2.0)) * (1.0 + norm(x))
}

/// Central-difference estimate of `dᵏ/dtᵏ f(x+tv)` at `t = 0` with a
/// `2k+1`-point stencil. `v` should be a unit vector and `k ∈ 1..=4`.
pub fn finite_difference_dir_deriv(f: &Objective, x: &[f64], v: &[f64], k: usize) -> f64 {
    let h = fd_step(x, k);
    let w = central_weights(k);
    let half = k as isize;
    let mut acc = 0.0;
    for (idx, &wj) in w.iter().enumerate() {
        if wj == 0.0 {
            continue;
        }
        let j = idx as isize - half;
        let p = axpy(j as f64 * h, v, x);
        acc += wj * f.eval(&p);
    }
    acc / h.powi(k as i32)
}

/// Central-difference gradient, step `ε^{1/3}·(1+|x|)`.
pub fn fd_gradient(f: &Objective, x: &[f64]) -> Vec<f64> {
    fd_gradient_with_step(f, x, fd_step(x, 1))
}

pub fn fd_gradient_with_step(f: &Objective, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = p[i];
            p[i] = xi + h;
            let up = f.eval(&p);
            p[i] = xi - h;
            let dn = f.eval(&p);
            p[i] = xi;
            (up - dn) / (2.0 * h)
        })
        .collect()
}

/// Directional difference of the gradient: `(∇f(x+hv) − ∇f(x−hv))/(2h)`.
pub fn fd_hess_vec(f: &Objective, x: &[f64], v: &[f64]) -> Vec<f64> {
    let nv = norm(v);
    if nv == 0.0 {
        return vec![0.0; x.len()];
    }
    let h = fd_step(x, 1) / nv;
    let gp = f.gradient(&axpy(h, v, x));
    let gm = f.gradient(&axpy(-h, v, x));
    gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::Smoothness;
    use std::sync::Arc;

    #[test]
    fn stencil_moments() {
        // Σ wⱼ jᵖ = k!·δ_{pk} for p = 0..=2k is the defining property.
        for k in 1..=4 {
            let w = central_weights(k);
            let fact: f64 = (1..=k).map(|i| i as f64).product();
            for p in 0..=(2 * k) {
                let terms: Vec<f64> = w
                    .iter()
                    .enumerate()
                    .map(|(idx, wj)| wj * ((idx as f64) - k as f64).powi(p as i32))
                    .collect();
                let m: f64 = terms.iter().sum();
                let scale: f64 = terms.iter().map(|t| t.abs()).sum::<f64>().max(1.0);
                let want = if p == k { fact } else { 0.0 };
                assert!((m - want).abs() < 1e-12 * scale, "k={k} p={p}: {m}");
            }
        }
    }

    #[test]
    fn second_derivative_of_square() {
        let f = Objective::new("x2sq", 2, Arc::new(|x: &[f64]| x[1] * x[1]))
            .with_smoothness(Smoothness::Smooth);
        let d = finite_difference_dir_deriv(&f, &[0.0, 0.0], &[0.0, 1.0], 2);
        assert!((d - 2.0).abs() < 1e-6, "{d}");
    }
}
