//! Quadrature on the reference triangle and on [0, 1].

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 10;

/// Quadrature rule on the reference triangle, weights summing to 1/2.
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub degree: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p[0], p[1])).sum()
    }
}

// Fully symmetric orbits in barycentric coordinates, weights normalized to
// total 1 (scaled by the reference area on construction).
enum Orbit {
    Centroid(f64),
    /// (a, b, b) and its 3 permutations
    Three(f64, f64),
    /// (a, b, 1-a-b) and its 6 permutations
    Six(f64, f64, f64),
}

const DEG4: &[Orbit] = &[
    Orbit::Three(0.223381589678011, 0.445948490915965),
    Orbit::Three(0.109951743655322, 0.091576213509771),
];

const DEG5: &[Orbit] = &[
    Orbit::Centroid(0.225),
    Orbit::Three(0.132394152788506, 0.470142064105115),
    Orbit::Three(0.125939180544827, 0.101286507323456),
];

const DEG6: &[Orbit] = &[
    Orbit::Three(0.116786275726379, 0.249286745170910),
    Orbit::Three(0.050844906370207, 0.063089014491502),
    Orbit::Six(0.082851075618374, 0.310352451033784, 0.636502499121399),
];

fn from_orbits(degree: usize, orbits: &[Orbit]) -> QuadRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut push = |w: f64, l: [f64; 3]| {
        // barycentric (l0, l1, l2) -> x = l1, y = l2
        points.push([l[1], l[2]]);
        weights.push(0.5 * w);
    };
    for o in orbits {
        match *o {
            Orbit::Centroid(w) => push(w, [1.0 / 3.0; 3]),
            Orbit::Three(w, b) => {
                let a = 1.0 - 2.0 * b;
                push(w, [a, b, b]);
                push(w, [b, a, b]);
                push(w, [b, b, a]);
            }
            Orbit::Six(w, a, b) => {
                let c = 1.0 - a - b;
                for l in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                    push(w, l);
                }
            }
        }
    }
    QuadRule { degree, points, weights }
}

/// Collapsed Gauss product rule averaged over the six symmetries of the
/// triangle, which keeps exactness and yields a symmetric rule.
fn symmetrized_collapsed(degree: usize) -> QuadRule {
    let n = (degree + 3) / 2;
    let (gx, gw) = gauss_legendre_01(n);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (u, v) = (gx[i], gx[j]);
            let x = u * (1.0 - v);
            let y = v;
            let w = gw[i] * gw[j] * (1.0 - v) / 6.0;
            let l = [1.0 - x - y, x, y];
            for p in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                points.push([l[p[1]], l[p[2]]]);
                weights.push(w);
            }
        }
    }
    QuadRule { degree, points, weights }
}

/// Symmetric rule with positive weights, exact for polynomials up to `degree`.
pub fn quadrature_rule(degree: usize) -> Result<QuadRule> {
    let rule = match degree {
        0 | 1 => QuadRule { degree, points: vec![[1.0 / 3.0, 1.0 / 3.0]], weights: vec![0.5] },
        2 => QuadRule {
            degree,
            points: vec![[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]],
            weights: vec![1.0 / 6.0; 3],
        },
        3 | 4 => from_orbits(degree, DEG4),
        5 => from_orbits(degree, DEG5),
        6 => from_orbits(degree, DEG6),
        7..=MAX_DEGREE => symmetrized_collapsed(degree),
        _ => return Err(Error::UnsupportedQuadrature(degree)),
    };
    Ok(rule)
}

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Newton on P_n starting from the Chebyshev-like guess.
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 1..n {
                let p2 = ((2 * k + 1) as f64 * t * p1 - k as f64 * p0) / (k + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (t * pn - pm) / (t * t - 1.0);
            let dt = pn / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[n - 1 - i] = 0.5 * (t + 1.0);
        w[n - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}
