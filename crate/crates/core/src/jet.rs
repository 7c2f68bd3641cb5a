//! Truncated Taylor polynomials in one variable, used to evaluate exact
//! directional derivatives of the polynomial catalog objectives.

use std::ops::{Add, Mul, Neg, Sub};

/// Highest derivative order carried by a [`Jet`].
pub const JET_ORDER: usize = 4;

/// Scalar type the catalog bodies are written against.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn cst(c: f64) -> Self;
    fn value(&self) -> f64;
    /// `max(0, t)`; at `t = 0` a jet follows the `t > 0` branch.
    fn relu(self) -> Self;

    fn powi(self, k: u32) -> Self {
        let mut acc = Self::cst(1.0);
        for _ in 0..k {
            acc = acc * self;
        }
        acc
    }

    fn scale(self, s: f64) -> Self {
        self * Self::cst(s)
    }
}

impl Scalar for f64 {
    fn cst(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn relu(self) -> Self {
        self.max(0.0)
    }
    fn powi(self, k: u32) -> Self {
        f64::powi(self, k as i32)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Taylor coefficients `c₀ + c₁t + … + c₄t⁴` of `t ↦ g(x + t v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [f64; JET_ORDER + 1]);

impl Jet {
    pub fn variable(x: f64, v: f64) -> Self {
        let mut c = [0.0; JET_ORDER + 1];
        c[0] = x;
        c[1] = v;
        Jet(c)
    }

    /// `dᵏ/dtᵏ` at `t = 0`, i.e. `k!·cₖ`.
    pub fn derivative(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        fact * self.0[k]
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(o.0) {
            *a += b;
        }
        Jet(c)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(o.0) {
            *a -= b;
        }
        Jet(c)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet(self.0.map(|a| -a))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; JET_ORDER + 1];
        for i in 0..=JET_ORDER {
            if self.0[i] == 0.0 {
                continue;
            }
            for j in 0..=(JET_ORDER - i) {
                c[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(c)
    }
}

impl Scalar for Jet {
    fn cst(c: f64) -> Self {
        let mut a = [0.0; JET_ORDER + 1];
        a[0] = c;
        Jet(a)
    }
    fn value(&self) -> f64 {
        self.0[0]
    }
    fn relu(self) -> Self {
        if self.0[0] >= 0.0 {
            self
        } else {
            Jet::cst(0.0)
        }
    }
    fn scale(self, s: f64) -> Self {
        Jet(self.0.map(|a| a * s))
    }
}

/// Seeds `x + t v` coordinate-wise.
pub fn line(x: &[f64], v: &[f64]) -> Vec<Jet> {
    x.iter().zip(v).map(|(&a, &b)| Jet::variable(a, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        // g(t) = (1 + 2t)^4 = 1 + 8t + 24t² + 32t³ + 16t⁴
        let x = Jet::variable(1.0, 2.0);
        let g = x.powi(4);
        assert_eq!(g.0, [1.0, 8.0, 24.0, 32.0, 16.0]);
        assert_eq!(g.derivative(4), 384.0);
        assert_eq!(g.derivative(2), 48.0);
    }

    #[test]
    fn relu_takes_positive_branch_at_kink() {
        let z = Jet::variable(0.0, -1.0).relu();
        assert_eq!(z.0[1], -1.0);
        assert_eq!(Jet::variable(-0.5, 1.0).relu(), Jet::cst(0.0));
    }
}
