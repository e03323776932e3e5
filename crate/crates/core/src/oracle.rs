//! Exact small-depth ground truth: the mean recursion, the full law of `C_N`
//! by enumeration, and exact checks of the martingale identities.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::matrix::ReplacementMatrix;
use crate::rational::{self, Rational};
use crate::spectral::{euler_product, right_eigenvector_zeta, SpectralError};

/// Largest number of states an enumeration may visit.
pub const STATE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("enumeration would need up to {states} states at depth {depth} (limit {limit})")]
    TooLarge { states: String, depth: u64, limit: u64 },
    #[error("block {} has nu = {nu}; its martingale needs nu = 0", .block + 1)]
    NotApplicable { block: usize, nu: usize },
    #[error("index {} out of range", .0 + 1)]
    OutOfRange(usize),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// `E[C_N]` from `E[C_{n+1}] = E[C_n] (I + R/(n+1))`.
pub fn exact_mean(matrix: &ReplacementMatrix, steps: u64) -> Vec<Rational> {
    let dim = matrix.dim();
    let mut mean = matrix.initial().to_vec();
    for n in 0..steps {
        let scale = Rational::from_integer((n + 1).into());
        let added: Vec<Rational> = (0..dim)
            .map(|j| (0..=j).map(|i| &mean[i] * matrix.entry(i, j)).sum::<Rational>() / &scale)
            .collect();
        for (m, a) in mean.iter_mut().zip(added) {
            *m += a;
        }
    }
    mean
}

/// Upper bound on distinct compositions at depth `n`: at most `(K+1)^n`
/// histories and at most `C(n+K, K)` draw-count vectors.
fn state_bound(dim: usize, depth: u64) -> f64 {
    let histories = (dim as f64).powf(depth as f64);
    let mut multisets = 1.0_f64;
    for i in 1..dim as u64 {
        multisets *= (depth + i) as f64 / i as f64;
    }
    histories.min(multisets)
}

fn guard(bound: f64, depth: u64) -> Result<(), OracleError> {
    if bound > STATE_LIMIT as f64 {
        return Err(OracleError::TooLarge { states: format!("{bound:.3e}"), depth, limit: STATE_LIMIT });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Atom {
    #[serde(rename = "c", with = "rational::serde_pq_vec")]
    pub composition: Vec<Rational>,
    #[serde(rename = "p", with = "rational::serde_pq")]
    pub probability: Rational,
}

/// Law of `C_n` for every `n <= depth`, with equal compositions merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleTree {
    pub depth: u64,
    /// `levels[n]` is the law of `C_n`, sorted by composition.
    pub levels: Vec<Vec<Atom>>,
}

impl OracleTree {
    pub fn leaves(&self) -> &[Atom] {
        self.levels.last().expect("level 0 always exists")
    }

    pub fn mean(&self, level: usize) -> Vec<Rational> {
        let atoms = &self.levels[level];
        let dim = atoms[0].composition.len();
        (0..dim)
            .map(|k| atoms.iter().map(|a| &a.probability * &a.composition[k]).sum())
            .collect()
    }

    pub fn total_probability(&self, level: usize) -> Rational {
        self.levels[level].iter().map(|a| a.probability.clone()).sum()
    }
}

/// Children of a composition after one draw: `(probability, composition)`.
fn children<'a>(
    matrix: &'a ReplacementMatrix,
    composition: &'a [Rational],
    total: &'a Rational,
) -> impl Iterator<Item = (Rational, Vec<Rational>)> + 'a {
    (0..matrix.dim()).filter(|&i| composition[i].is_positive()).map(move |i| {
        let p = &composition[i] / total;
        let next: Vec<Rational> = composition.iter().zip(matrix.row(i)).map(|(c, r)| c + r).collect();
        (p, next)
    })
}

pub fn enumerate_distribution(matrix: &ReplacementMatrix, depth: u64) -> Result<OracleTree, OracleError> {
    guard(state_bound(matrix.dim(), depth), depth)?;
    let mut levels = vec![vec![Atom { composition: matrix.initial().to_vec(), probability: Rational::one() }]];
    for n in 0..depth {
        let total = Rational::from_integer((n + 1).into());
        let mut next: BTreeMap<Vec<Rational>, Rational> = BTreeMap::new();
        for atom in levels.last().expect("nonempty") {
            for (p, child) in children(matrix, &atom.composition, &total) {
                *next.entry(child).or_insert_with(Rational::zero) += p * &atom.probability;
            }
        }
        levels.push(
            next.into_iter()
                .map(|(composition, probability)| Atom { composition, probability })
                .collect(),
        );
    }
    Ok(OracleTree { depth, levels })
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest `|E[U_{n+1} | C_n] - U_n|` over all reachable `C_n`, `n < depth`,
/// for `U_n = C_n zeta / Pi_n(lambda)` of block `block` (which needs `nu = 0`).
pub fn verify_martingale_u(matrix: &ReplacementMatrix, block: usize, depth: u64) -> Result<Rational, OracleError> {
    let structure = matrix.block_structure();
    let b = structure.blocks.get(block).ok_or(OracleError::OutOfRange(block))?;
    if b.nu > 0 {
        return Err(OracleError::NotApplicable { block, nu: b.nu });
    }
    let zeta = right_eigenvector_zeta(matrix, &structure, block)?;
    let lambda = b.lambda.clone();
    let tree = enumerate_distribution(matrix, depth)?;
    let mut worst = Rational::zero();
    for n in 0..depth {
        let total = Rational::from_integer((n + 1).into());
        let pi_n = euler_product(n, &lambda)?;
        let pi_next = euler_product(n + 1, &lambda)?;
        for atom in &tree.levels[n as usize] {
            let current = dot(&atom.composition, &zeta) / &pi_n;
            let expected: Rational = children(matrix, &atom.composition, &total)
                .map(|(p, child)| p * dot(&child, &zeta))
                .sum::<Rational>()
                / &pi_next;
            worst = worst.max((expected - current).abs());
        }
    }
    Ok(worst)
}

/// Largest conditional-expectation discrepancy of the compensated martingale
/// `M_n = C_{n,l}/Pi_n(r_l) - sum_{m<l} sum_{k<n} r_{ml}/(k+1+r_l) C_{k,m}/Pi_k(r_l)`.
/// The compensator depends on the path, so states are keyed by the pair
/// (composition, compensator), which is itself Markov.
pub fn verify_martingale_m(matrix: &ReplacementMatrix, color: usize, depth: u64) -> Result<Rational, OracleError> {
    let dim = matrix.dim();
    if color >= dim {
        return Err(OracleError::OutOfRange(color));
    }
    guard((dim as f64).powf(depth as f64), depth)?;
    let own = matrix.diagonal(color).clone();
    let one = Rational::one();
    let mut level: BTreeMap<(Vec<Rational>, Rational), Rational> = BTreeMap::new();
    level.insert((matrix.initial().to_vec(), Rational::zero()), one.clone());
    let mut worst = Rational::zero();
    for n in 0..depth {
        let total = Rational::from_integer((n + 1).into());
        let pi_n = euler_product(n, &own)?;
        let pi_next = euler_product(n + 1, &own)?;
        let weight = (&total + &own) * &pi_n;
        let mut next = BTreeMap::new();
        for ((composition, compensator), prob) in &level {
            let inflow: Rational = (0..color).map(|m| matrix.entry(m, color) * &composition[m]).sum();
            let next_compensator = compensator + inflow / &weight;
            let current = &composition[color] / &pi_n - compensator;
            let mut expected = Rational::zero();
            for (p, child) in children(matrix, composition, &total) {
                expected += &p * (&child[color] / &pi_next - &next_compensator);
                *next
                    .entry((child, next_compensator.clone()))
                    .or_insert_with(Rational::zero) += p * prob;
            }
            worst = worst.max((expected - current).abs());
        }
        level = next;
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MartingaleKind {
    U,
    M,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MartingaleCheck {
    pub kind: MartingaleKind,
    /// 1-based block (for `U`) or color (for `M`).
    pub index: usize,
    #[serde(with = "rational::serde_pq")]
    pub max_discrepancy: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Mean,
    Enumerate,
    Martingale,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    #[serde(with = "rational::serde_pq_vec")]
    pub mean: Vec<Rational>,
    pub atoms: Vec<Atom>,
    pub martingale_checks: Vec<MartingaleCheck>,
}

impl OracleReport {
    pub fn all_exact(&self) -> bool {
        self.martingale_checks.iter().all(|c| c.max_discrepancy.is_zero())
    }
}

/// Martingale checks for every `nu = 0` block and every color.
pub fn martingale_checks(matrix: &ReplacementMatrix, depth: u64) -> Result<Vec<MartingaleCheck>, OracleError> {
    let structure = matrix.block_structure();
    let mut checks = Vec::new();
    for (j, b) in structure.blocks.iter().enumerate() {
        if b.nu == 0 {
            checks.push(MartingaleCheck {
                kind: MartingaleKind::U,
                index: j + 1,
                max_discrepancy: verify_martingale_u(matrix, j, depth)?,
            });
        }
    }
    for l in 0..matrix.dim() {
        checks.push(MartingaleCheck {
            kind: MartingaleKind::M,
            index: l + 1,
            max_discrepancy: verify_martingale_m(matrix, l, depth)?,
        });
    }
    Ok(checks)
}

pub fn oracle_report(matrix: &ReplacementMatrix, depth: u64, mode: OracleMode) -> Result<OracleReport, OracleError> {
    let mean = exact_mean(matrix, depth);
    let atoms = match mode {
        OracleMode::Enumerate => enumerate_distribution(matrix, depth)?.leaves().to_vec(),
        _ => Vec::new(),
    };
    let martingale_checks = match mode {
        OracleMode::Martingale => martingale_checks(matrix, depth)?,
        _ => Vec::new(),
    };
    Ok(OracleReport { mean, atoms, martingale_checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn model(rows: &[&[&str]], init: &[&str]) -> ReplacementMatrix {
        ReplacementMatrix::from_strs(rows, init).unwrap()
    }

    fn two_color() -> ReplacementMatrix {
        model(&[&["0.5", "0.5"], &["0", "1"]], &["0.5", "0.5"])
    }

    #[test]
    fn mean_examples() {
        assert_eq!(exact_mean(&two_color(), 1), vec![ratio(3, 4), ratio(5, 4)]);
        assert_eq!(exact_mean(&two_color(), 0), vec![ratio(1, 2), ratio(1, 2)]);
        let absorbing = model(&[&["0", "1"], &["0", "1"]], &["0.3", "0.7"]);
        for n in 0..10 {
            assert_eq!(exact_mean(&absorbing, n)[0], ratio(3, 10));
        }
    }

    #[test]
    fn one_step_enumeration() {
        let tree = enumerate_distribution(&two_color(), 1).unwrap();
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 2);
        assert!(leaves.contains(&Atom { composition: vec![int(1), int(1)], probability: ratio(1, 2) }));
        assert!(leaves.contains(&Atom { composition: vec![ratio(1, 2), ratio(3, 2)], probability: ratio(1, 2) }));
    }

    #[test]
    fn single_color_is_deterministic() {
        let tree = enumerate_distribution(&model(&[&["1"]], &["1"]), 6).unwrap();
        assert_eq!(tree.leaves(), &[Atom { composition: vec![int(7)], probability: int(1) }]);
    }

    #[test]
    fn enumeration_matches_mean_recursion() {
        let m = model(&[&["0.3", "0.2", "0.5"], &["0", "0.6", "0.4"], &["0", "0", "1"]], &["0.2", "0.3", "0.5"]);
        let tree = enumerate_distribution(&m, 6).unwrap();
        for n in 0..=6 {
            assert_eq!(tree.total_probability(n), int(1));
            assert_eq!(tree.mean(n), exact_mean(&m, n as u64));
            for a in &tree.levels[n] {
                assert_eq!(a.composition.iter().sum::<Rational>(), int(n as i64 + 1));
            }
        }
    }

    #[test]
    fn martingale_examples() {
        assert!(verify_martingale_u(&two_color(), 0, 4).unwrap().is_zero());
        assert!(verify_martingale_u(&two_color(), 1, 4).unwrap().is_zero());
        assert!(verify_martingale_m(&two_color(), 1, 4).unwrap().is_zero());
        assert!(verify_martingale_m(&two_color(), 0, 4).unwrap().is_zero());
        let m = model(&[&["0.3", "0.2", "0.5"], &["0", "0.6", "0.4"], &["0", "0", "1"]], &["0.2", "0.3", "0.5"]);
        assert!(verify_martingale_m(&m, 1, 3).unwrap().is_zero());
        assert!(verify_martingale_u(&model(&[&["1"]], &["1"]), 0, 5).unwrap().is_zero());
    }

    #[test]
    fn wrong_compensator_is_detected() {
        // C_{n,2}/Pi_n(r_2) alone is not a martingale when color 1 feeds color 2
        let m = two_color();
        let tree = enumerate_distribution(&m, 1).unwrap();
        let own = m.diagonal(1).clone();
        let expected: Rational = tree.leaves().iter().map(|a| &a.probability * &a.composition[1]).sum::<Rational>()
            / euler_product(1, &own).unwrap();
        assert_ne!(expected, m.initial()[1].clone());
    }

    #[test]
    fn not_applicable_and_too_large() {
        let tied = model(&[&["0.5", "0.2", "0.3"], &["0", "0.5", "0.5"], &["0", "0", "1"]], &["0.2", "0.3", "0.5"]);
        assert_eq!(verify_martingale_u(&tied, 1, 3).unwrap_err(), OracleError::NotApplicable { block: 1, nu: 1 });
        assert!(matches!(enumerate_distribution(&tied, 10_000), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn report_shape() {
        let report = oracle_report(&two_color(), 2, OracleMode::Martingale).unwrap();
        assert!(report.all_exact());
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["mean"][0], "15/16");
        assert_eq!(json["martingale_checks"][0]["kind"], "U");
        assert_eq!(json["martingale_checks"][0]["max_discrepancy"], "0/1");
        let report = oracle_report(&two_color(), 1, OracleMode::Enumerate).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["atoms"].as_array().unwrap().len(), 2);
        assert!(json["atoms"][0]["c"].is_array());
        assert!(json["atoms"][0]["p"].is_string());
    }
}
