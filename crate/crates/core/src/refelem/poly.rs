//! Dense bivariate polynomials in the monomial basis.

use std::ops::{Add, Mul, Sub};

/// Polynomial in `(x, y)` stored as coefficients of `x^a y^b`, `a + b <= deg`,
/// ordered by total degree and then by the power of `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    deg: usize,
    coef: Vec<f64>,
}

#[inline]
fn index(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

fn n_terms(deg: usize) -> usize {
    (deg + 1) * (deg + 2) / 2
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Exact integral of `x^a y^b` over the reference triangle conv{(0,0),(1,0),(0,1)}.
pub fn monomial_integral(a: usize, b: usize) -> f64 {
    factorial(a) * factorial(b) / factorial(a + b + 2)
}

impl Poly {
    pub fn zero(deg: usize) -> Self {
        Poly { deg, coef: vec![0.0; n_terms(deg)] }
    }

    pub fn constant(c: f64) -> Self {
        Poly { deg: 0, coef: vec![c] }
    }

    pub fn monomial(a: usize, b: usize) -> Self {
        let mut p = Poly::zero(a + b);
        p.coef[index(a, b)] = 1.0;
        p
    }

    /// `x` and `y` as polynomials.
    pub fn x() -> Self {
        Poly::monomial(1, 0)
    }

    pub fn y() -> Self {
        Poly::monomial(0, 1)
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    /// Exponents `(a, b)` of all monomials up to total degree `deg`, in
    /// storage order.
    pub fn exponents(deg: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..=deg).flat_map(|d| (0..=d).map(move |b| (d - b, b)))
    }

    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        if a + b > self.deg {
            0.0
        } else {
            self.coef[index(a, b)]
        }
    }

    fn widened(&self, deg: usize) -> Self {
        let mut p = Poly::zero(deg.max(self.deg));
        p.coef[..self.coef.len()].copy_from_slice(&self.coef);
        p
    }

    pub fn scale(&self, s: f64) -> Self {
        Poly { deg: self.deg, coef: self.coef.iter().map(|c| c * s).collect() }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        let mut xp = vec![1.0; self.deg + 1];
        let mut yp = vec![1.0; self.deg + 1];
        for i in 1..=self.deg {
            xp[i] = xp[i - 1] * x;
            yp[i] = yp[i - 1] * y;
        }
        for (a, b) in Poly::exponents(self.deg) {
            acc += self.coef[index(a, b)] * xp[a] * yp[b];
        }
        acc
    }

    pub fn dx(&self) -> Self {
        let mut p = Poly::zero(self.deg.saturating_sub(1));
        for (a, b) in Poly::exponents(self.deg) {
            if a > 0 {
                p.coef[index(a - 1, b)] += a as f64 * self.coef[index(a, b)];
            }
        }
        p
    }

    pub fn dy(&self) -> Self {
        let mut p = Poly::zero(self.deg.saturating_sub(1));
        for (a, b) in Poly::exponents(self.deg) {
            if b > 0 {
                p.coef[index(a, b - 1)] += b as f64 * self.coef[index(a, b)];
            }
        }
        p
    }

    /// Exact integral over the reference triangle.
    pub fn integrate_ref(&self) -> f64 {
        Poly::exponents(self.deg)
            .map(|(a, b)| self.coef[index(a, b)] * monomial_integral(a, b))
            .sum()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.coef.iter().all(|c| c.abs() <= tol)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut p = self.widened(rhs.deg);
        for (i, c) in rhs.coef.iter().enumerate() {
            p.coef[i] += c;
        }
        p
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut p = Poly::zero(self.deg + rhs.deg);
        for (a, b) in Poly::exponents(self.deg) {
            let c = self.coef[index(a, b)];
            if c == 0.0 {
                continue;
            }
            for (e, f) in Poly::exponents(rhs.deg) {
                p.coef[index(a + e, b + f)] += c * rhs.coef[index(e, f)];
            }
        }
        p
    }
}

/// Vector field with polynomial components.
pub type VecPoly = [Poly; 2];

pub fn div(v: &VecPoly) -> Poly {
    &v[0].dx() + &v[1].dy()
}

/// Rotated gradient `(d/dy, -d/dx)`.
pub fn curl(p: &Poly) -> VecPoly {
    [p.dy(), p.dx().scale(-1.0)]
}

pub fn grad(p: &Poly) -> VecPoly {
    [p.dx(), p.dy()]
}

pub fn dot(u: &VecPoly, v: &VecPoly) -> Poly {
    &(&u[0] * &v[0]) + &(&u[1] * &v[1])
}

/// Legendre polynomial `P_n(t)` on `[-1, 1]`.
pub fn legendre(n: usize, t: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => t,
        _ => {
            let (mut p0, mut p1) = (1.0, t);
            for k in 1..n {
                let p2 = ((2 * k + 1) as f64 * t * p1 - k as f64 * p0) / (k + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_integrals() {
        assert!((monomial_integral(0, 0) - 0.5).abs() < 1e-16);
        assert!((monomial_integral(2, 1) - 1.0 / 60.0).abs() < 1e-16);
    }

    #[test]
    fn arithmetic_and_derivatives() {
        let p = &(&Poly::x() * &Poly::x()) + &Poly::y().scale(3.0);
        assert_eq!(p.eval(2.0, 1.0), 7.0);
        assert_eq!(p.dx().eval(2.0, 5.0), 4.0);
        assert_eq!(p.dy().eval(2.0, 5.0), 3.0);
        let q = &p * &Poly::y();
        assert_eq!(q.coeff(2, 1), 1.0);
        assert_eq!(q.coeff(0, 2), 3.0);
        assert!((q.integrate_ref() - (1.0 / 60.0 + 3.0 / 12.0)).abs() < 1e-15);
        let v = curl(&q);
        assert!(div(&v).is_zero(1e-15));
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre(2, 0.5), -0.125);
        assert!((legendre(3, -1.0) + 1.0).abs() < 1e-15);
    }
}
