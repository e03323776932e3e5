//! Reordering of colors into increasing order.
//!
//! Blocks are built backwards from the last color. For each block the leading
//! color is the rightmost maximizer of the diagonal among the colors not yet
//! placed; the block then grows forward, and any color that receives nothing
//! from the colors already in the block is rotated in front of the block. The
//! rotated color's column is zero on exactly the rows it moves past, so the
//! matrix stays upper triangular.

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::matrix::ReplacementMatrix;
use crate::rational::{self, Rational};

/// How the leading color is chosen when several earlier colors share the
/// maximal diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    RightmostMaximizer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    /// Increasing-order violations of the rearranged matrix; always empty.
    pub violations: Vec<usize>,
    pub tie_break: TieBreak,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rearrangement {
    /// `perm[old] = new`.
    pub perm: Vec<usize>,
    pub rearranged: ReplacementMatrix,
    pub certificate: Certificate,
}

impl Rearrangement {
    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// `order[new] = old`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (old, &new) in self.perm.iter().enumerate() {
            inv[new] = old;
        }
        inv
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RearrangeError {
    /// Two consecutive blocks share a leading diagonal but the earlier block
    /// feeds nothing into the later block's leading color.
    #[error("blocks {} and {} share leading diagonal {} but block {} sends nothing to color {}", .block + 1, .block + 2, rational::format_rational(.lambda), .block + 1, .next_leading + 1)]
    AssumptionFailure {
        block: usize,
        next_leading: usize,
        lambda: Rational,
        rearrangement: Box<Rearrangement>,
    },
}

pub fn rearrange_to_increasing(matrix: &ReplacementMatrix) -> Rearrangement {
    let dim = matrix.dim();
    // order[position] = original color
    let mut order: Vec<usize> = (0..dim).collect();
    let r = |a: usize, b: usize| matrix.entry(a, b);

    let mut next_leading = dim - 1;
    while next_leading > 0 {
        // max_by_key returns the last maximum, i.e. the rightmost maximizer
        let mut lead = (0..next_leading)
            .max_by_key(|&p| r(order[p], order[p]))
            .expect("nonempty range");
        let mut size = 1;
        while lead + size < next_leading {
            let candidate = order[lead + size];
            let inflow: Rational = (lead..lead + size).map(|m| r(order[m], candidate)).sum();
            if inflow.is_zero() {
                order[lead..=lead + size].rotate_right(1);
                lead += 1;
            } else {
                size += 1;
            }
        }
        next_leading = lead;
    }

    let mut perm = vec![0; dim];
    for (new, &old) in order.iter().enumerate() {
        perm[old] = new;
    }
    let rearranged = matrix
        .apply_permutation(&perm)
        .expect("rearrangement preserves triangularity");
    let violations = rearranged.check_increasing_order();
    debug_assert!(violations.is_empty());
    Rearrangement {
        perm,
        rearranged,
        certificate: Certificate { violations, tie_break: TieBreak::RightmostMaximizer },
    }
}

/// Rearranges into increasing order and checks that the arrangement is the
/// unique one, i.e. every pair of consecutive blocks with equal leading
/// diagonals is linked through the later block's leading column.
pub fn canonicalize(matrix: &ReplacementMatrix) -> Result<Rearrangement, RearrangeError> {
    let rearrangement = rearrange_to_increasing(matrix);
    let failures = rearrangement.rearranged.unique_arrangement_failures();
    match failures.first() {
        None => Ok(rearrangement),
        Some(&block) => {
            let structure = rearrangement.rearranged.block_structure();
            Err(RearrangeError::AssumptionFailure {
                block,
                next_leading: structure.blocks[block + 1].start,
                lambda: structure.blocks[block].lambda.clone(),
                rearrangement: Box::new(rearrangement),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::random_model;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[&str]]) -> ReplacementMatrix {
        let n = rows.len();
        let init: Vec<String> = (0..n).map(|_| format!("1/{n}")).collect();
        let init: Vec<&str> = init.iter().map(String::as_str).collect();
        ReplacementMatrix::from_strs(rows, &init).unwrap()
    }

    #[test]
    fn already_increasing_is_identity() {
        let r = rearrange_to_increasing(&m(&[&["0.3", "0", "0.7"], &["0", "0.5", "0.5"], &["0", "0", "1"]]));
        assert!(r.is_identity());
        assert!(r.certificate.violations.is_empty());
        assert!(rearrange_to_increasing(&m(&[&["1"]])).is_identity());
    }

    #[test]
    fn reshuffles_zero_inflow_color() {
        let r = rearrange_to_increasing(&m(&[&["0.5", "0", "0.5"], &["0", "0.3", "0.7"], &["0", "0", "1"]]));
        assert_eq!(r.perm, vec![1, 0, 2]);
        assert_eq!(
            r.rearranged.rows(),
            m(&[&["0.3", "0", "0.7"], &["0", "0.5", "0.5"], &["0", "0", "1"]]).rows()
        );
    }

    #[test]
    fn rotation_moves_color_ahead_of_block() {
        // block {1,2} is fed, color 3 gets nothing from it and must rotate in front
        let model = m(&[
            &["0.6", "0.2", "0", "0.2"],
            &["0", "0.3", "0", "0.7"],
            &["0", "0", "0.1", "0.9"],
            &["0", "0", "0", "1"],
        ]);
        let r = rearrange_to_increasing(&model);
        assert_eq!(r.perm, vec![1, 2, 0, 3]);
        assert!(r.rearranged.check_increasing_order().is_empty());
        assert_eq!(r.inverse(), vec![2, 0, 1, 3]);
    }

    #[test]
    fn ties_pick_rightmost_maximizer() {
        let model = m(&[&["0.5", "0.2", "0.3"], &["0", "0.5", "0.5"], &["0", "0", "1"]]);
        let r = rearrange_to_increasing(&model);
        assert!(r.is_identity());
        assert_eq!(r.rearranged.block_structure().blocks.len(), 3);
    }

    #[test]
    fn canonicalize_examples() {
        let ok = canonicalize(&m(&[&["0.5", "0.2", "0.3"], &["0", "0.5", "0.5"], &["0", "0", "1"]])).unwrap();
        assert!(ok.is_identity());
        let err = canonicalize(&m(&[&["0.5", "0", "0.5"], &["0", "0.5", "0.5"], &["0", "0", "1"]])).unwrap_err();
        let RearrangeError::AssumptionFailure { block, lambda, .. } = err;
        assert_eq!(block, 0);
        assert_eq!(lambda, rational::ratio(1, 2));
        assert!(canonicalize(&m(&[&["0.2", "0.8"], &["0", "1"]])).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn rearrangement_is_sound(seed in any::<u64>()) {
            let model = random_model(&mut ChaCha8Rng::seed_from_u64(seed), 1..=8);
            let r = rearrange_to_increasing(&model);
            let mut sorted = r.perm.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..model.dim()).collect::<Vec<_>>());
            prop_assert!(r.rearranged.check_increasing_order().is_empty());
            let mut before = model.diagonals();
            let mut after = r.rearranged.diagonals();
            before.sort();
            after.sort();
            prop_assert_eq!(before, after);
            prop_assert!(rearrange_to_increasing(&r.rearranged).is_identity());
        }
    }
}
