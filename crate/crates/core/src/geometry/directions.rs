use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{param, Result};

/// Seed for the pseudo-random node sets used when `d >= 4`.
const HIGH_DIM_SEED: u64 = 0x5EED_D1EC;

/// Quadrature rule for the normalized angular average
/// `|S^{d-1}|^{-1} ∫ f(ω) dω`.
///
/// Nodes are unit vectors, weights are positive and sum to one, and the node
/// set is closed under `ω ↦ -ω` with equal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    dim: usize,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DirectionSet {
    /// Builds a rule with roughly `n` nodes in dimension `d`.
    ///
    /// * `d = 2`: `n` equispaced angles (`n` rounded up to even), exact for
    ///   trigonometric polynomials of degree `< n`.
    /// * `d = 3`: Gauss–Legendre in `cos θ` times equispaced `φ`.
    /// * `d >= 4`: `n/2` seeded Gaussian directions plus their antipodes, equal weights.
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d < 2 {
            return Err(param(format!("direction sets need d >= 2, got {d}")));
        }
        if n < 2 {
            return Err(param(format!("direction sets need n >= 2, got {n}")));
        }
        let (nodes, weights) = match d {
            2 => {
                let n = n + n % 2;
                let nodes = (0..n)
                    .map(|k| {
                        let a = 2.0 * PI * k as f64 / n as f64;
                        vec![a.cos(), a.sin()]
                    })
                    .collect();
                (nodes, vec![1.0 / n as f64; n])
            }
            3 => {
                let n_theta = ((n as f64 / 2.0).sqrt().round() as usize).max(1);
                let n_phi = 2 * n_theta;
                let (mu, w) = gauss_legendre(n_theta);
                let mut nodes = Vec::with_capacity(n_theta * n_phi);
                let mut weights = Vec::with_capacity(n_theta * n_phi);
                for (m, wm) in mu.iter().zip(&w) {
                    let s = (1.0 - m * m).max(0.0).sqrt();
                    for k in 0..n_phi {
                        let phi = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
                        nodes.push(vec![s * phi.cos(), s * phi.sin(), *m]);
                        weights.push(0.5 * wm / n_phi as f64);
                    }
                }
                (nodes, weights)
            }
            _ => {
                let half = n.div_ceil(2);
                let mut rng = ChaCha8Rng::seed_from_u64(HIGH_DIM_SEED ^ d as u64);
                let mut nodes = Vec::with_capacity(2 * half);
                while nodes.len() < 2 * half {
                    let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm < 1e-8 {
                        continue;
                    }
                    let v: Vec<f64> = v.iter().map(|x| x / norm).collect();
                    nodes.push(v.iter().map(|x| -x).collect());
                    nodes.push(v);
                }
                let w = 1.0 / nodes.len() as f64;
                let count = nodes.len();
                (nodes, vec![w; count])
            }
        };
        Ok(Self { dim: d, nodes, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.nodes.iter().map(|v| v.as_slice()).zip(self.weights.iter().copied())
    }

    /// Weighted average `Σ w_i f(ω_i)`.
    pub fn average(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.iter().map(|(w, wt)| wt * f(w)).sum()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_invariants(set: &DirectionSet) {
        let total: f64 = set.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (i, v) in set.nodes().iter().enumerate() {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            let found = set.nodes().iter().enumerate().any(|(j, u)| {
                u.iter().zip(v).all(|(a, b)| (a + b).abs() < 1e-12)
                    && (set.weights()[i] - set.weights()[j]).abs() < 1e-15
            });
            assert!(found, "node {i} has no antipode");
        }
    }

    #[test]
    fn planar_four_nodes() {
        let s = DirectionSet::new(2, 4).unwrap();
        assert_eq!(s.len(), 4);
        let expected = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (v, e) in s.nodes().iter().zip(expected) {
            assert!((v[0] - e[0]).abs() < 1e-15 && (v[1] - e[1]).abs() < 1e-15);
        }
        assert!(s.weights().iter().all(|w| *w == 0.25));
    }

    #[test]
    fn invariants_all_dims() {
        for (d, n) in [(2, 7), (2, 64), (3, 50), (3, 200), (4, 40), (5, 31)] {
            check_invariants(&DirectionSet::new(d, n).unwrap());
        }
    }

    #[test]
    fn second_moments() {
        for n in [4, 6, 10, 100] {
            let s = DirectionSet::new(2, n).unwrap();
            assert!((s.average(|w| w[0] * w[0]) - 0.5).abs() < 1e-12);
        }
        let s = DirectionSet::new(3, 72).unwrap();
        assert!((s.average(|w| w[2] * w[2]) - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.average(|w| w[0] * w[0]) - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.average(|w| w[2].powi(4)) - 0.2).abs() < 1e-12);
        assert!((s.average(|_| 3.5) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DirectionSet::new(1, 4).is_err());
        assert!(DirectionSet::new(2, 1).is_err());
    }
}
