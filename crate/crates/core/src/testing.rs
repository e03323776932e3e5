//! Random model generators shared by unit, property and acceptance tests.

use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::matrix::ReplacementMatrix;
use crate::rational::{int, ratio, Rational};

const DENOMINATORS: [i64; 7] = [2, 3, 4, 5, 6, 8, 10];

/// A random balanced upper triangular matrix with small denominators. Each
/// off-last entry on or above the diagonal is planted as zero with probability
/// one half, so equal diagonals and zero columns are common.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, dims: RangeInclusive<usize>) -> ReplacementMatrix {
    let dim = rng.gen_range(dims);
    let denom = *DENOMINATORS.choose(rng).expect("nonempty");
    let mut rows = vec![vec![int(0); dim]; dim];
    for (i, row) in rows.iter_mut().enumerate() {
        let mut active: Vec<usize> = (i..dim).filter(|_| rng.gen_bool(0.5)).collect();
        if active.is_empty() {
            active.push(rng.gen_range(i..dim));
        }
        let mut units = vec![0i64; dim];
        for _ in 0..denom {
            units[*active.choose(rng).expect("nonempty")] += 1;
        }
        for (j, u) in units.into_iter().enumerate() {
            row[j] = ratio(u, denom);
        }
    }
    let weights: Vec<i64> = (0..dim).map(|_| rng.gen_range(1..=5)).collect();
    let total: i64 = weights.iter().sum();
    let initial: Vec<Rational> = weights.iter().map(|&w| ratio(w, total)).collect();
    ReplacementMatrix::new(rows, initial).expect("generator produces valid models")
}

/// A random three-color model `[[a, b, 1-a-b], [0, c, 1-c], [0, 0, 1]]` with
/// entries on the grid `k/denom`.
pub fn random_three_color<R: Rng + ?Sized>(rng: &mut R, denom: i64) -> ReplacementMatrix {
    let a = rng.gen_range(0..=denom);
    let b = rng.gen_range(0..=denom - a);
    let c = rng.gen_range(0..=denom);
    let rows = vec![
        vec![ratio(a, denom), ratio(b, denom), ratio(denom - a - b, denom)],
        vec![int(0), ratio(c, denom), ratio(denom - c, denom)],
        vec![int(0), int(0), int(1)],
    ];
    ReplacementMatrix::new(rows, vec![ratio(1, 3); 3]).expect("valid three-color model")
}
