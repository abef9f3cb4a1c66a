//! Heisenberg group algebra.
//!
//! Elements of `H^n` are stored in canonical coordinates `(x, y, t)` with
//! `x, y ∈ R^n` and `t` the central coordinate. The product is
//!
//! ```text
//! (x, y, t) ∘ (x', y', t') = (x + x', y + y', t + t' + ½(x·y' − x'·y))
//! ```
//!
//! and the dilations `δ_r(x, y, t) = (r x, r y, r² t)` are automorphisms,
//! so the homogeneous dimension is `Q = 2n + 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
}

impl GroupElement {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(Self { x, y, t })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            y: vec![0.0; n],
            t: 0.0,
        }
    }

    /// Convenience constructor for `H^1`.
    pub fn h1(x: f64, y: f64, t: f64) -> Self {
        Self {
            x: vec![x],
            y: vec![y],
            t,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn inverse(&self) -> Self {
        Self {
            x: self.x.iter().map(|v| -v).collect(),
            y: self.y.iter().map(|v| -v).collect(),
            t: -self.t,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .chain(self.y.iter().zip(&other.y))
            .map(|(a, b)| (a - b).abs())
            .fold((self.t - other.t).abs(), f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

pub fn group_multiply(g1: &GroupElement, g2: &GroupElement) -> Result<GroupElement> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch {
            expected: g1.dim(),
            got: g2.dim(),
        });
    }
    let symplectic = dot(&g1.x, &g2.y) - dot(&g2.x, &g1.y);
    Ok(GroupElement {
        x: g1.x.iter().zip(&g2.x).map(|(a, b)| a + b).collect(),
        y: g1.y.iter().zip(&g2.y).map(|(a, b)| a + b).collect(),
        t: g1.t + g2.t + 0.5 * symplectic,
    })
}

pub fn dilate(g: &GroupElement, r: f64) -> Result<GroupElement> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveDilation(r));
    }
    Ok(GroupElement {
        x: g.x.iter().map(|v| r * v).collect(),
        y: g.y.iter().map(|v| r * v).collect(),
        t: r * r * g.t,
    })
}

/// Homogeneous dimension `Q = 2n + 2` of `H^n`.
pub fn homogeneous_dimension(n: usize) -> usize {
    2 * n + 2
}

/// Jacobian determinant of `δ_r` as a map of `R^{2n+1}`.
pub fn dilation_jacobian(n: usize, r: f64) -> f64 {
    r.powi(homogeneous_dimension(n) as i32)
}

/// Index of a tensor-product Hermite function on `R^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Eigenvalue `Σ_j (2k_j + 1)` of the harmonic oscillator `-Δ_w + |w|²`.
pub fn oscillator_eigenvalue(k: &MultiIndex) -> f64 {
    k.0.iter().map(|&kj| 2.0 * kj as f64 + 1.0).sum()
}

/// All multi-indices in `n` variables with `μ_k ≤ mu_max`, graded
/// lexicographically so the eigenvalues come out nondecreasing.
pub fn enumerate_multi_indices(n: usize, mu_max: f64) -> Vec<MultiIndex> {
    if n == 0 {
        return Vec::new();
    }
    // μ_k = 2|k| + n ≤ mu_max
    let max_degree = ((mu_max - n as f64) / 2.0).floor();
    if max_degree < 0.0 {
        return Vec::new();
    }
    let max_degree = max_degree as u32;
    let mut out = Vec::new();
    for degree in 0..=max_degree {
        let mut current = vec![0u32; n];
        compositions(degree, 0, &mut current, &mut out);
    }
    out
}

// Lexicographic enumeration of k with |k| = remaining spread over slots [pos, n).
fn compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    let n = current.len();
    if pos == n - 1 {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for v in 0..=remaining {
        current[pos] = v;
        compositions(remaining - v, pos + 1, current, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_element(rng: &mut impl Rng, n: usize) -> GroupElement {
        GroupElement {
            x: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            y: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            t: rng.gen_range(-2.0..2.0),
        }
    }

    #[test]
    fn product_with_identity() {
        let g = GroupElement::h1(0.3, -1.2, 2.5);
        let e = GroupElement::identity(1);
        assert_eq!(group_multiply(&e, &g).unwrap(), g);
        assert_eq!(group_multiply(&g, &e).unwrap(), g);
    }

    #[test]
    fn inverse_by_negation() {
        let g = GroupElement::h1(0.3, -1.2, 2.5);
        let p = group_multiply(&g, &g.inverse()).unwrap();
        assert!(p.max_abs_diff(&GroupElement::identity(1)) == 0.0);
    }

    #[test]
    fn noncommuting_pair() {
        let p = group_multiply(&GroupElement::h1(1.0, 0.0, 0.0), &GroupElement::h1(0.0, 1.0, 0.0))
            .unwrap();
        assert_eq!(p, GroupElement::h1(1.0, 1.0, 0.5));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = GroupElement::identity(1);
        let b = GroupElement::identity(2);
        assert!(matches!(
            group_multiply(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(GroupElement::new(vec![0.0], vec![], 0.0).is_err());
    }

    #[test]
    fn dilation_examples() {
        let g = GroupElement::h1(1.0, 1.0, 1.0);
        assert_eq!(dilate(&g, 1.0).unwrap(), g);
        assert_eq!(dilate(&g, 2.0).unwrap(), GroupElement::h1(2.0, 2.0, 4.0));
        assert!(dilate(&g, 0.0).is_err());
        assert!(dilate(&g, -1.0).is_err());
        let back = dilate(&dilate(&g, 3.0).unwrap(), 1.0 / 3.0).unwrap();
        assert!(back.max_abs_diff(&g) < 1e-15);
    }

    #[test]
    fn dilation_jacobian_is_r_to_q() {
        // product of per-coordinate factors r (2n times) and r² (once)
        for n in 1..4 {
            let r = 1.7_f64;
            let by_coordinates = r.powi(2 * n as i32) * r * r;
            assert!((dilation_jacobian(n, r) - by_coordinates).abs() < 1e-12 * by_coordinates);
        }
    }

    #[test]
    fn group_law_properties_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..10_000 {
            let n = 1 + i % 3;
            let (a, b, c) = (
                random_element(&mut rng, n),
                random_element(&mut rng, n),
                random_element(&mut rng, n),
            );
            let left = group_multiply(&group_multiply(&a, &b).unwrap(), &c).unwrap();
            let right = group_multiply(&a, &group_multiply(&b, &c).unwrap()).unwrap();
            assert!(left.max_abs_diff(&right) < 1e-12);

            let id = group_multiply(&a, &a.inverse()).unwrap();
            assert!(id.max_abs_diff(&GroupElement::identity(n)) < 1e-12);

            let r = rng.gen_range(0.1..3.0);
            let lhs = dilate(&group_multiply(&a, &b).unwrap(), r).unwrap();
            let rhs =
                group_multiply(&dilate(&a, r).unwrap(), &dilate(&b, r).unwrap()).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }

    #[test]
    fn oscillator_eigenvalues() {
        assert_eq!(oscillator_eigenvalue(&MultiIndex(vec![0])), 1.0);
        assert_eq!(oscillator_eigenvalue(&MultiIndex(vec![1, 2])), 8.0);
        assert_eq!(oscillator_eigenvalue(&MultiIndex(vec![5])), 11.0);
    }

    #[test]
    fn enumeration_is_graded_and_bounded() {
        let one = enumerate_multi_indices(1, 31.0);
        assert_eq!(one.len(), 16);
        let two = enumerate_multi_indices(2, 7.0);
        // |k| ≤ 2 in two variables: 1 + 2 + 3
        assert_eq!(two.len(), 6);
        assert_eq!(two[1], MultiIndex(vec![0, 1]));
        assert_eq!(two[2], MultiIndex(vec![1, 0]));
        let mus: Vec<f64> = two.iter().map(oscillator_eigenvalue).collect();
        assert!(mus.windows(2).all(|w| w[0] <= w[1]));
        assert!(mus.iter().all(|&m| m <= 7.0 && m >= 2.0));
        assert!(enumerate_multi_indices(3, 2.0).is_empty());
    }
}
