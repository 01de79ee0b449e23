//! Polynomial monomial bases over the action space.
//!
//! A state is scored against many candidate actions at once by one matrix
//! product between predicted basis coefficients and the action feature matrix
//! produced by [`phi`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix2D;

/// All monomials of total degree <= `rank` over `action_dim` variables.
///
/// Ordering is canonical so that coefficient vectors are portable across
/// runs and checkpoints: ascending total degree, and within a degree the
/// exponent tuples are listed with earlier components taking larger values
/// first (for d = 2, r = 2: `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)`).
/// The first element is always the constant term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialBasis {
    action_dim: usize,
    rank: u32,
    exponents: Vec<Vec<u32>>,
}

/// Binomial coefficient C(n, k) over u64, exact for the small arguments used
/// here.
pub fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    let mut num: u64 = 1;
    let mut den: u64 = 1;
    for i in 0..k {
        num *= n - i;
        den *= i + 1;
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    num / den
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Enumerates the monomial basis for `action_dim` variables up to total
/// degree `rank`. The basis size is C(rank + action_dim, action_dim).
pub fn enumerate_monomials(action_dim: usize, rank: u32) -> Result<MonomialBasis> {
    if action_dim == 0 {
        return Err(Error::domain("action_dim must be at least 1".to_string()));
    }
    let mut exponents = Vec::new();
    let mut scratch = vec![0u32; action_dim];
    for degree in 0..=rank {
        push_degree(&mut exponents, &mut scratch, 0, degree);
    }
    Ok(MonomialBasis {
        action_dim,
        rank,
        exponents,
    })
}

/// Appends all tuples of the given total degree, first component descending.
fn push_degree(out: &mut Vec<Vec<u32>>, scratch: &mut [u32], dim: usize, remaining: u32) {
    if dim == scratch.len() - 1 {
        scratch[dim] = remaining;
        out.push(scratch.to_vec());
        return;
    }
    for e in (0..=remaining).rev() {
        scratch[dim] = e;
        push_degree(out, scratch, dim + 1, remaining - e);
    }
}

impl MonomialBasis {
    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    /// Number of monomials, i.e. the coefficient count a network must output.
    pub fn size(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }
}

/// Action representation map. `actions` holds one action per row (`k x d`);
/// the result is `m x k` with entry `(j, i)` the j-th monomial evaluated at
/// action i. Row 0 is all ones (constant monomial, with the 0^0 = 1
/// convention).
pub fn phi(basis: &MonomialBasis, actions: &Matrix2D) -> Result<Matrix2D> {
    if actions.cols() != basis.action_dim {
        return Err(Error::shape(format!(
            "actions have {} components, basis expects {}",
            actions.cols(),
            basis.action_dim
        )));
    }
    for i in 0..actions.rows() {
        for &a in actions.row(i) {
            if !(-1.0..=1.0).contains(&a) {
                return Err(Error::domain(format!(
                    "action component {a} outside [-1, 1]"
                )));
            }
        }
    }
    let k = actions.rows();
    let mut out = Matrix2D::zeros(basis.size(), k);
    for (j, exps) in basis.exponents.iter().enumerate() {
        let row = out.row_mut(j);
        for (i, slot) in row.iter_mut().enumerate() {
            let mut v = 1.0;
            for (dim, &e) in exps.iter().enumerate() {
                if e > 0 {
                    v *= actions.get(i, dim).powi(e as i32);
                }
            }
            *slot = v;
        }
    }
    Ok(out)
}

/// Q-values of every candidate action in every state: plain matrix product
/// of per-state coefficients (`b x m`) with action features (`m x k`).
pub fn q_from_coefficients(coeffs: &Matrix2D, features: &Matrix2D) -> Result<Matrix2D> {
    if coeffs.cols() != features.rows() {
        return Err(Error::shape(format!(
            "coefficients are {}x{}, features {}x{}",
            coeffs.rows(),
            coeffs.cols(),
            features.rows(),
            features.cols()
        )));
    }
    Ok(coeffs.matmul(features))
}

/// Q-value of each row's own action: `q[j] = coeffs.row(j) . features.col(j)`.
/// Used when batch element j pairs state j with the action actually taken
/// at state j, so only the diagonal of the full product is needed.
pub fn q_per_row(coeffs: &Matrix2D, features: &Matrix2D) -> Result<Vec<f64>> {
    if coeffs.cols() != features.rows() || coeffs.rows() != features.cols() {
        return Err(Error::shape(format!(
            "q_per_row needs b x m against m x b, got {}x{} and {}x{}",
            coeffs.rows(),
            coeffs.cols(),
            features.rows(),
            features.cols()
        )));
    }
    let m = coeffs.cols();
    Ok((0..coeffs.rows())
        .map(|j| {
            let row = coeffs.row(j);
            (0..m).map(|l| row[l] * features.get(l, j)).sum()
        })
        .collect())
}
