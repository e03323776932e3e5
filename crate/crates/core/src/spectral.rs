//! Eigenvectors, growth rates and limit bookkeeping for each block.

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::matrix::{Block, BlockStructure, ReplacementMatrix};
use crate::rational::{self, format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectralError {
    #[error("zero denominator at color {} of block {}: diagonal equals the leading eigenvalue", .color + 1, .block + 1)]
    ZeroDenominator { block: usize, color: usize },
    #[error("block {} has nu = {nu}; the right eigenvector needs nu = 0", .block + 1)]
    NotApplicable { block: usize, nu: usize },
    #[error("Euler product parameter {0} is a negative integer")]
    NegativeIntegerParameter(String),
    #[error("colors are not in increasing order (violations at {violations:?})")]
    NotIncreasingOrder { violations: Vec<usize> },
    #[error("blocks {} and {} share a leading diagonal without a link", .block + 1, .block + 2)]
    AssumptionFailure { block: usize },
}

/// Growth rate `n^exponent (log n)^log_power`, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ColorRate {
    #[serde(with = "rational::serde_pq")]
    pub exponent: Rational,
    pub log_power: u32,
}

impl ColorRate {
    pub fn new(exponent: Rational, log_power: u32) -> Self {
        ColorRate { exponent, log_power }
    }

    /// `n^s (ln n)^d` in floating point.
    pub fn scale(&self, n: f64) -> f64 {
        let s = rational::to_f64(&self.exponent);
        let base = n.powf(s);
        if self.log_power == 0 {
            base
        } else {
            base * n.ln().powi(self.log_power as i32)
        }
    }
}

/// Left eigenvector of the block sub-matrix for its leading diagonal,
/// normalized to first entry 1, by forward substitution.
pub fn block_left_eigenvector(block: &Block, block_index: usize) -> Result<Vec<Rational>, SpectralError> {
    let sub = &block.sub_matrix;
    let lambda = &block.lambda;
    let mut pi: Vec<Rational> = Vec::with_capacity(block.len());
    pi.push(Rational::one());
    for k in 1..block.len() {
        let denom = lambda - &sub[k][k];
        if denom.is_zero() {
            return Err(SpectralError::ZeroDenominator { block: block_index, color: block.start + k });
        }
        let numer: Rational = (0..k).map(|m| &pi[m] * &sub[m][k]).sum();
        pi.push(numer / denom);
    }
    Ok(pi)
}

/// Right eigenvector of the full matrix for the block's leading diagonal with
/// entry 1 at the leading color and zeros after it. Only defined when no
/// earlier diagonal equals the leading one.
pub fn right_eigenvector_zeta(
    matrix: &ReplacementMatrix,
    structure: &BlockStructure,
    block_index: usize,
) -> Result<Vec<Rational>, SpectralError> {
    let block = &structure.blocks[block_index];
    if block.nu > 0 {
        return Err(SpectralError::NotApplicable { block: block_index, nu: block.nu });
    }
    let lead = block.start;
    let lambda = &block.lambda;
    let mut zeta = vec![Rational::zero(); matrix.dim()];
    zeta[lead] = Rational::one();
    for k in (0..lead).rev() {
        let denom = lambda - matrix.diagonal(k);
        if denom.is_zero() {
            return Err(SpectralError::ZeroDenominator { block: block_index, color: k });
        }
        let numer: Rational = (k + 1..=lead).map(|m| matrix.entry(k, m) * &zeta[m]).sum();
        zeta[k] = numer / denom;
    }
    Ok(zeta)
}

/// `prod_{i=0}^{n-1} (1 + s/(i+1))`, exactly.
pub fn euler_product(n: u64, s: &Rational) -> Result<Rational, SpectralError> {
    if s.is_integer() && s.is_negative() {
        return Err(SpectralError::NegativeIntegerParameter(format_rational(s)));
    }
    let mut acc = Rational::one();
    for i in 0..n {
        acc *= Rational::one() + s / Rational::from_integer((i + 1).into());
    }
    Ok(acc)
}

/// Floating-point Euler product, accumulated in log space for large `n`.
pub fn euler_product_f64(n: u64, s: f64) -> Result<f64, SpectralError> {
    if s < 0.0 && s.fract() == 0.0 {
        return Err(SpectralError::NegativeIntegerParameter(s.to_string()));
    }
    let mut log_sum = 0.0;
    let mut sign = 1.0;
    for i in 0..n {
        let f = 1.0 + s / (i + 1) as f64;
        if f < 0.0 {
            sign = -sign;
        }
        log_sum += f.abs().ln();
    }
    Ok(sign * log_sum.exp())
}

/// Large-`n` equivalent `n^s / Gamma(s + 1)` of the Euler product.
pub fn euler_asymptotic(n: u64, s: f64) -> f64 {
    (n as f64).powf(s) / gamma(s + 1.0)
}

/// Rates without rearrangement: each color takes the fastest rate among the
/// colors feeding it, bumped by one log power on a tie with its own diagonal,
/// or its own diagonal power when that is larger or nothing feeds it.
pub fn per_color_rates(matrix: &ReplacementMatrix) -> Vec<ColorRate> {
    let mut rates: Vec<ColorRate> = Vec::with_capacity(matrix.dim());
    for k in 0..matrix.dim() {
        let own = matrix.diagonal(k).clone();
        let donor = (0..k)
            .filter(|&j| matrix.entry(j, k).is_positive())
            .map(|j| &rates[j])
            .max()
            .cloned();
        let rate = match donor {
            None => ColorRate::new(own, 0),
            Some(d) => {
                if own < d.exponent {
                    d
                } else if own == d.exponent {
                    ColorRate::new(d.exponent, d.log_power + 1)
                } else {
                    ColorRate::new(own, 0)
                }
            }
        };
        rates.push(rate);
    }
    rates
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitKind {
    /// Last block: the scaled leading count tends to 1.
    DeterministicOne,
    /// First block with zero diagonal: the leading count never changes.
    DeterministicInitial {
        #[serde(with = "rational::serde_pq")]
        value: Rational,
    },
    /// A non-degenerate random limit.
    Nondegenerate,
    /// The limit is `coefficient` times the limit of block `block`.
    ChainedTo {
        block: usize,
        #[serde(with = "rational::serde_pq")]
        coefficient: Rational,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockProfile {
    pub start: usize,
    pub end: usize,
    #[serde(with = "rational::serde_pq")]
    pub lambda: Rational,
    pub nu: usize,
    #[serde(with = "rational::serde_pq_vec")]
    pub pi: Vec<Rational>,
    #[serde(with = "rational::serde_pq_opt_vec")]
    pub zeta: Option<Vec<Rational>>,
    #[serde(with = "rational::serde_pq_opt")]
    pub chain_coeff: Option<Rational>,
    pub limit: LimitKind,
}

impl BlockProfile {
    pub fn rate(&self) -> ColorRate {
        ColorRate::new(self.lambda.clone(), self.nu as u32)
    }
}

/// Per-block limit description for a matrix in increasing order satisfying
/// the unique-arrangement condition: block `j` scaled by
/// `N^lambda_j (log N)^nu_j` tends to `pi_j V_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LimitProfile {
    pub blocks: Vec<BlockProfile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColorLimit {
    pub color: usize,
    pub block: usize,
    pub rate: ColorRate,
    /// Multiplier of the block's limit variable (the eigenvector entry).
    #[serde(with = "rational::serde_pq")]
    pub coefficient: Rational,
}

impl LimitProfile {
    pub fn color_limits(&self) -> Vec<ColorLimit> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(j, b)| {
                (b.start..b.end).map(move |color| ColorLimit {
                    color,
                    block: j,
                    rate: b.rate(),
                    coefficient: b.pi[color - b.start].clone(),
                })
            })
            .collect()
    }

    pub fn color_rates(&self) -> Vec<ColorRate> {
        self.color_limits().into_iter().map(|c| c.rate).collect()
    }
}

/// Builds the limit profile. Requires increasing order and linked equal-diagonal
/// blocks.
pub fn theorem_rates(matrix: &ReplacementMatrix) -> Result<LimitProfile, SpectralError> {
    let violations = matrix.check_increasing_order();
    if !violations.is_empty() {
        return Err(SpectralError::NotIncreasingOrder { violations });
    }
    if let Some(&block) = matrix.unique_arrangement_failures().first() {
        return Err(SpectralError::AssumptionFailure { block });
    }
    let structure = matrix.block_structure();
    let last = structure.blocks.len() - 1;
    let mut blocks: Vec<BlockProfile> = Vec::with_capacity(structure.blocks.len());
    for (j, block) in structure.blocks.iter().enumerate() {
        let pi = block_left_eigenvector(block, j)?;
        let zeta = if block.nu == 0 {
            Some(right_eigenvector_zeta(matrix, &structure, j)?)
        } else {
            None
        };
        let chain_coeff = if block.nu > 0 {
            let prev = &structure.blocks[j - 1];
            let rho = prev.rho.as_ref().expect("non-last block has rho");
            let dot: Rational = blocks[j - 1].pi.iter().zip(rho).map(|(p, r)| p * r).sum();
            Some(dot / Rational::from_integer(block.nu.into()))
        } else {
            None
        };
        let limit = if j == last {
            LimitKind::DeterministicOne
        } else if j == 0 && block.lambda.is_zero() {
            LimitKind::DeterministicInitial { value: matrix.initial()[0].clone() }
        } else if let Some(c) = &chain_coeff {
            LimitKind::ChainedTo { block: j - 1, coefficient: c.clone() }
        } else {
            LimitKind::Nondegenerate
        };
        blocks.push(BlockProfile {
            start: block.start,
            end: block.end,
            lambda: block.lambda.clone(),
            nu: block.nu,
            pi,
            zeta,
            chain_coeff,
            limit,
        });
    }
    Ok(LimitProfile { blocks })
}
