//! Balanced triangular replacement matrices: validation, running maxima of the
//! diagonal, block decomposition and the ordering conditions on blocks.
//!
//! Colors are indexed from 0 throughout the API. Error and warning messages
//! print 1-based color numbers.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rational::{self, format_rational, rational_from_json, ParseRationalError, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("replacement matrix is empty")]
    Empty,
    #[error("matrix is not square: row {} has {len} entries, expected {dim}", .row + 1)]
    NonSquare { row: usize, len: usize, dim: usize },
    #[error("initial composition has {found} entries, expected {expected}")]
    InitialLength { expected: usize, found: usize },
    #[error("negative entry r[{},{}]", .row + 1, .col + 1)]
    NegativeEntry { row: usize, col: usize },
    #[error("matrix is not upper triangular: r[{},{}] is nonzero", .row + 1, .col + 1)]
    NotTriangular { row: usize, col: usize },
    #[error("row {} sums to {}, expected 1", .row + 1, format_rational(.sum))]
    RowSumNotOne { row: usize, sum: Rational },
    #[error("initial count of color {} is not positive", .color + 1)]
    NonPositiveInitial { color: usize },
    #[error("initial composition sums to {}, expected 1 (use normalize to rescale)", format_rational(.sum))]
    InitialSumNotOne { sum: Rational },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("{found} labels supplied for {expected} colors")]
    LabelCount { expected: usize, found: usize },
    #[error("bad entry at {location}: {source}")]
    Parse {
        location: String,
        #[source]
        source: ParseRationalError,
    },
    #[error("malformed model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelWarning {
    /// The initial composition was rescaled to total one.
    InitialNormalized {
        #[serde(with = "rational::serde_pq")]
        original_sum: Rational,
    },
    /// A color other than the last has diagonal entry 1; the unique-arrangement
    /// condition cannot hold for such a matrix.
    Diag1Interior { color: usize },
}

impl fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelWarning::InitialNormalized { original_sum } => write!(
                f,
                "initial composition summed to {} and was rescaled to 1",
                format_rational(original_sum)
            ),
            ModelWarning::Diag1Interior { color } => write!(
                f,
                "color {} is not the last color but has diagonal entry 1",
                color + 1
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    pub normalize: bool,
}

/// A validated balanced, upper triangular replacement matrix with its initial
/// composition. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplacementMatrix {
    entries: Vec<Vec<Rational>>,
    initial: Vec<Rational>,
    labels: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct Validated {
    pub matrix: ReplacementMatrix,
    pub warnings: Vec<ModelWarning>,
}

impl ReplacementMatrix {
    /// Checks every structural invariant and returns the model together with
    /// any warnings.
    pub fn validate(
        raw: Vec<Vec<Rational>>,
        initial: Vec<Rational>,
        options: ValidateOptions,
    ) -> Result<Validated, ModelError> {
        let dim = raw.len();
        if dim == 0 {
            return Err(ModelError::Empty);
        }
        for (row, r) in raw.iter().enumerate() {
            if r.len() != dim {
                return Err(ModelError::NonSquare { row, len: r.len(), dim });
            }
        }
        if initial.len() != dim {
            return Err(ModelError::InitialLength { expected: dim, found: initial.len() });
        }
        for (row, r) in raw.iter().enumerate() {
            for (col, x) in r.iter().enumerate() {
                if x.is_negative() {
                    return Err(ModelError::NegativeEntry { row, col });
                }
            }
        }
        for (row, r) in raw.iter().enumerate() {
            for (col, x) in r.iter().enumerate().take(row) {
                if !x.is_zero() {
                    return Err(ModelError::NotTriangular { row, col });
                }
            }
        }
        for (row, r) in raw.iter().enumerate() {
            let sum: Rational = r.iter().sum();
            if !sum.is_one() {
                return Err(ModelError::RowSumNotOne { row, sum });
            }
        }
        for (color, c) in initial.iter().enumerate() {
            if !c.is_positive() {
                return Err(ModelError::NonPositiveInitial { color });
            }
        }
        let mut warnings = Vec::new();
        let total: Rational = initial.iter().sum();
        let initial = if total.is_one() {
            initial
        } else if options.normalize {
            warnings.push(ModelWarning::InitialNormalized { original_sum: total.clone() });
            initial.into_iter().map(|c| c / &total).collect()
        } else {
            return Err(ModelError::InitialSumNotOne { sum: total });
        };
        for (color, row) in raw.iter().enumerate().take(dim - 1) {
            if row[color].is_one() {
                warnings.push(ModelWarning::Diag1Interior { color });
            }
        }
        Ok(Validated {
            matrix: ReplacementMatrix { entries: raw, initial, labels: None },
            warnings,
        })
    }

    /// Shorthand for tests and generated models: validates without normalization
    /// and discards warnings.
    pub fn new(raw: Vec<Vec<Rational>>, initial: Vec<Rational>) -> Result<Self, ModelError> {
        Self::validate(raw, initial, ValidateOptions::default()).map(|v| v.matrix)
    }

    /// Builds a model from decimal strings, e.g. `&[&["0.5", "0.5"], &["0", "1"]]`.
    pub fn from_strs(rows: &[&[&str]], initial: &[&str]) -> Result<Self, ModelError> {
        let parse = |s: &str, location: String| {
            rational::parse_rational(s).map_err(|source| ModelError::Parse { location, source })
        };
        let raw = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .map(|(j, s)| parse(s, format!("R[{}][{}]", i + 1, j + 1)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let init = initial
            .iter()
            .enumerate()
            .map(|(i, s)| parse(s, format!("C0[{}]", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(raw, init)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, ModelError> {
        if labels.len() != self.dim() {
            return Err(ModelError::LabelCount { expected: self.dim(), found: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> &Rational {
        &self.entries[row][col]
    }

    pub fn row(&self, row: usize) -> &[Rational] {
        &self.entries[row]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    pub fn diagonal(&self, color: usize) -> &Rational {
        &self.entries[color][color]
    }

    pub fn diagonals(&self) -> Vec<Rational> {
        (0..self.dim()).map(|k| self.diagonal(k).clone()).collect()
    }

    pub fn initial(&self) -> &[Rational] {
        &self.initial
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, color: usize) -> String {
        match &self.labels {
            Some(l) => l[color].clone(),
            None => format!("{}", color + 1),
        }
    }

    /// Returns `P R P^T` where `perm[old] = new`, with the initial composition
    /// and labels moved the same way.
    pub fn apply_permutation(&self, perm: &[usize]) -> Result<ReplacementMatrix, ModelError> {
        let dim = self.dim();
        if perm.len() != dim {
            return Err(ModelError::InvalidPermutation(format!(
                "length {} for {} colors",
                perm.len(),
                dim
            )));
        }
        let mut seen = vec![false; dim];
        for &p in perm {
            if p >= dim || seen[p] {
                return Err(ModelError::InvalidPermutation(format!("{perm:?} is not a bijection")));
            }
            seen[p] = true;
        }
        let mut entries = vec![vec![Rational::zero(); dim]; dim];
        let mut initial = vec![Rational::zero(); dim];
        for (old_i, &new_i) in perm.iter().enumerate() {
            initial[new_i] = self.initial[old_i].clone();
            for (old_j, &new_j) in perm.iter().enumerate() {
                entries[new_i][new_j] = self.entries[old_i][old_j].clone();
            }
        }
        let mut out = ReplacementMatrix::validate(entries, initial, ValidateOptions::default())?.matrix;
        if let Some(labels) = &self.labels {
            let mut moved = vec![String::new(); dim];
            for (old, &new) in perm.iter().enumerate() {
                moved[new] = labels[old].clone();
            }
            out.labels = Some(moved);
        }
        Ok(out)
    }

    /// Indices of the running maxima of the diagonal: starts at 0, each next
    /// index is the first later color whose diagonal is at least the current one.
    pub fn running_maxima(&self) -> Vec<usize> {
        let mut leading = vec![0];
        let mut current = 0;
        for k in 1..self.dim() {
            if self.diagonal(k) >= self.diagonal(current) {
                leading.push(k);
                current = k;
            }
        }
        leading
    }

    pub fn block_structure(&self) -> BlockStructure {
        BlockStructure::of(self)
    }

    /// Non-leading colors whose column, restricted to the earlier rows of their
    /// block, is identically zero. Empty iff the colors are in increasing order.
    pub fn check_increasing_order(&self) -> Vec<usize> {
        let structure = self.block_structure();
        let mut violations = Vec::new();
        for block in &structure.blocks {
            for k in block.start + 1..block.end {
                let inflow: Rational = (block.start..k).map(|m| self.entry(m, k)).sum();
                if inflow.is_zero() {
                    violations.push(k);
                }
            }
        }
        violations
    }

    /// Blocks `j` whose successor has the same leading diagonal but receives
    /// nothing from block `j` in its leading column.
    pub fn unique_arrangement_failures(&self) -> Vec<usize> {
        let structure = self.block_structure();
        structure
            .blocks
            .windows(2)
            .enumerate()
            .filter(|(_, pair)| pair[0].lambda == pair[1].lambda)
            .filter(|(_, pair)| pair[0].rho.as_ref().is_none_or(|rho| rho.iter().all(Zero::is_zero)))
            .map(|(j, _)| j)
            .collect()
    }

    pub fn check_unique_arrangement(&self) -> bool {
        self.unique_arrangement_failures().is_empty()
    }

    /// Model-file JSON with rationals as `"p/q"` strings.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Vec<String>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(format_rational).collect())
            .collect();
        let c0: Vec<String> = self.initial.iter().map(format_rational).collect();
        let mut v = json!({ "R": rows, "C0": c0 });
        if let Some(labels) = &self.labels {
            v["labels"] = json!(labels);
        }
        v
    }

    /// SHA-256 of the canonical model-file serialization, hex encoded.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(&self.to_json()).expect("model json serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .map(|r| r.iter().map(rational::to_f64).collect())
            .collect()
    }

    pub fn initial_f64(&self) -> Vec<f64> {
        self.initial.iter().map(rational::to_f64).collect()
    }
}

/// Parses a model file: `{"R": [[..]], "C0": [..], "labels": [..]}` where entries
/// are numbers or numeric strings.
pub fn parse_model_json(text: &str, options: ValidateOptions) -> Result<Validated, ModelError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
    model_from_value(&value, options)
}

pub fn model_from_value(value: &Value, options: ValidateOptions) -> Result<Validated, ModelError> {
    let obj = value
        .as_object()
        .ok_or_else(|| ModelError::Format("top level must be an object".into()))?;
    let rows = obj
        .get("R")
        .and_then(Value::as_array)
        .ok_or_else(|| ModelError::Format("missing array \"R\"".into()))?;
    let mut raw = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| ModelError::Format(format!("R[{}] is not an array", i + 1)))?;
        let parsed = row
            .iter()
            .enumerate()
            .map(|(j, x)| {
                rational_from_json(x).map_err(|source| ModelError::Parse {
                    location: format!("R[{}][{}]", i + 1, j + 1),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        raw.push(parsed);
    }
    let c0 = obj
        .get("C0")
        .and_then(Value::as_array)
        .ok_or_else(|| ModelError::Format("missing array \"C0\"".into()))?;
    let initial = c0
        .iter()
        .enumerate()
        .map(|(i, x)| {
            rational_from_json(x).map_err(|source| ModelError::Parse {
                location: format!("C0[{}]", i + 1),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let labels = match obj.get("labels") {
        None | Some(Value::Null) => None,
        Some(Value::Array(items)) => Some(
            items
                .iter()
                .map(|l| {
                    l.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| ModelError::Format("labels must be strings".into()))
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
        Some(_) => return Err(ModelError::Format("\"labels\" must be an array".into())),
    };
    let mut validated = ReplacementMatrix::validate(raw, initial, options)?;
    if let Some(labels) = labels {
        validated.matrix = validated.matrix.with_labels(labels)?;
    }
    Ok(validated)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    /// First color of the block (its leading color).
    pub start: usize,
    /// One past the last color of the block.
    pub end: usize,
    #[serde(with = "rational::serde_pq")]
    pub lambda: Rational,
    /// Number of earlier colors whose diagonal equals `lambda`.
    pub nu: usize,
    #[serde(skip)]
    pub sub_matrix: Vec<Vec<Rational>>,
    /// Rows of this block in the leading column of the next block.
    #[serde(skip)]
    pub rho: Option<Vec<Rational>>,
}

impl Block {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn colors(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockStructure {
    pub leading_indices: Vec<usize>,
    pub blocks: Vec<Block>,
}

impl BlockStructure {
    pub fn of(matrix: &ReplacementMatrix) -> Self {
        let leading = matrix.running_maxima();
        let dim = matrix.dim();
        let mut blocks = Vec::with_capacity(leading.len());
        for (j, &start) in leading.iter().enumerate() {
            let end = leading.get(j + 1).copied().unwrap_or(dim);
            let lambda = matrix.diagonal(start).clone();
            let nu = (0..start).filter(|&m| *matrix.diagonal(m) == lambda).count();
            let sub_matrix = (start..end)
                .map(|r| matrix.row(r)[start..end].to_vec())
                .collect();
            let rho = leading
                .get(j + 1)
                .map(|&next| (start..end).map(|r| matrix.entry(r, next).clone()).collect());
            blocks.push(Block { start, end, lambda, nu, sub_matrix, rho });
        }
        BlockStructure { leading_indices: leading, blocks }
    }

    pub fn block_of(&self, color: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.colors().contains(&color))
            .expect("color within matrix")
    }

    pub fn last(&self) -> &Block {
        self.blocks.last().expect("at least one block")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn diag_model(diag: &[&str]) -> ReplacementMatrix {
        // Each row puts the diagonal mass on itself and the rest on the last color.
        let n = diag.len();
        let mut raw = vec![vec![int(0); n]; n];
        for (i, d) in diag.iter().enumerate() {
            let d = rational::parse_rational(d).unwrap();
            raw[i][n - 1] += int(1) - &d;
            raw[i][i] += d;
        }
        let init = vec![ratio(1, n as i64); n];
        ReplacementMatrix::new(raw, init).unwrap()
    }

    #[test]
    fn validates_identity_and_two_color() {
        let one = ReplacementMatrix::from_strs(&[&["1"]], &["1"]).unwrap();
        assert_eq!(one.dim(), 1);
        let two = ReplacementMatrix::from_strs(&[&["0.5", "0.5"], &["0", "1"]], &["0.5", "0.5"]).unwrap();
        assert_eq!(two.entry(0, 1), &ratio(1, 2));
    }

    #[test]
    fn rejects_bad_row_sum() {
        let err = ReplacementMatrix::from_strs(&[&["0.5", "0.4"], &["0", "1"]], &["0.5", "0.5"]).unwrap_err();
        assert!(matches!(err, ModelError::RowSumNotOne { row: 0, .. }));
        assert_eq!(err.to_string(), "row 1 sums to 9/10, expected 1");
    }

    #[test]
    fn rejects_each_structural_error() {
        let e = ReplacementMatrix::from_strs(&[&["0.5", "0.5"], &["1"]], &["0.5", "0.5"]).unwrap_err();
        assert!(matches!(e, ModelError::NonSquare { row: 1, .. }));
        let e = ReplacementMatrix::from_strs(&[&["1.5", "-0.5"], &["0", "1"]], &["0.5", "0.5"]).unwrap_err();
        assert!(matches!(e, ModelError::NegativeEntry { row: 0, col: 1 }));
        let e = ReplacementMatrix::from_strs(&[&["0.5", "0.5"], &["0.5", "0.5"]], &["0.5", "0.5"]).unwrap_err();
        assert!(matches!(e, ModelError::NotTriangular { row: 1, col: 0 }));
        let e = ReplacementMatrix::from_strs(&[&["0.5", "0.5"], &["0", "1"]], &["0", "1"]).unwrap_err();
        assert!(matches!(e, ModelError::NonPositiveInitial { color: 0 }));
        let e = ReplacementMatrix::from_strs(&[&["0.5", "0.5"], &["0", "1"]], &["1", "1"]).unwrap_err();
        assert!(matches!(e, ModelError::InitialSumNotOne { .. }));
        let e = ReplacementMatrix::from_strs(&[&["0.5", "0.5"], &["0", "1"]], &["1"]).unwrap_err();
        assert!(matches!(e, ModelError::InitialLength { expected: 2, found: 1 }));
        assert_eq!(ReplacementMatrix::new(vec![], vec![]).unwrap_err(), ModelError::Empty);
    }

    #[test]
    fn normalize_rescales_and_warns() {
        let raw = vec![vec![ratio(1, 2), ratio(1, 2)], vec![int(0), int(1)]];
        let v = ReplacementMatrix::validate(raw, vec![int(3), int(1)], ValidateOptions { normalize: true }).unwrap();
        assert_eq!(v.matrix.initial(), &[ratio(3, 4), ratio(1, 4)]);
        assert_eq!(v.warnings, vec![ModelWarning::InitialNormalized { original_sum: int(4) }]);
    }

    #[test]
    fn interior_unit_diagonal_warns() {
        let raw = vec![
            vec![int(1), int(0), int(0)],
            vec![int(0), ratio(1, 2), ratio(1, 2)],
            vec![int(0), int(0), int(1)],
        ];
        let v = ReplacementMatrix::validate(raw, vec![ratio(1, 3); 3], ValidateOptions::default()).unwrap();
        assert_eq!(v.warnings, vec![ModelWarning::Diag1Interior { color: 0 }]);
    }

    #[test]
    fn running_maxima_examples() {
        assert_eq!(diag_model(&["0.2", "0.5", "0.3", "0.5", "1"]).running_maxima(), vec![0, 1, 3, 4]);
        assert_eq!(diag_model(&["1"]).running_maxima(), vec![0]);
        assert_eq!(diag_model(&["0.5", "0.3", "1"]).running_maxima(), vec![0, 2]);
    }

    #[test]
    fn block_structure_examples() {
        let s = diag_model(&["0.2", "0.5", "0.3", "0.5", "1"]).block_structure();
        assert_eq!(s.blocks.iter().map(|b| b.nu).collect::<Vec<_>>(), vec![0, 0, 1, 0]);
        assert_eq!(s.blocks[1].colors(), 1..3);
        assert_eq!(s.blocks[1].rho.as_ref().unwrap().len(), 2);
        assert!(s.last().rho.is_none());

        let s = diag_model(&["0", "0", "0", "1"]).block_structure();
        assert_eq!(s.blocks.len(), 4);
        assert_eq!(s.blocks.iter().map(|b| b.nu).collect::<Vec<_>>(), vec![0, 1, 2, 0]);

        let s = diag_model(&["0.3", "0.5", "1"]).block_structure();
        assert_eq!(s.blocks.len(), 3);
        assert!(s.blocks.iter().all(|b| b.nu == 0 && b.len() == 1));
    }

    #[test]
    fn increasing_order_examples() {
        let m = ReplacementMatrix::from_strs(
            &[&["0.5", "0", "0.5"], &["0", "0.3", "0.7"], &["0", "0", "1"]],
            &["0.2", "0.3", "0.5"],
        )
        .unwrap();
        assert_eq!(m.check_increasing_order(), vec![1]);
        let m = ReplacementMatrix::from_strs(
            &[&["0.5", "0.2", "0.3"], &["0", "0.3", "0.7"], &["0", "0", "1"]],
            &["0.2", "0.3", "0.5"],
        )
        .unwrap();
        assert!(m.check_increasing_order().is_empty());
        assert!(diag_model(&["0.1", "0.2", "0.7", "1"]).check_increasing_order().is_empty());
    }

    #[test]
    fn unique_arrangement_examples() {
        let m = ReplacementMatrix::from_strs(
            &[&["0.5", "0", "0.5"], &["0", "0.5", "0.5"], &["0", "0", "1"]],
            &["0.2", "0.3", "0.5"],
        )
        .unwrap();
        assert!(!m.check_unique_arrangement());
        assert_eq!(m.unique_arrangement_failures(), vec![0]);
        let m = ReplacementMatrix::from_strs(
            &[&["0.5", "0.2", "0.3"], &["0", "0.5", "0.5"], &["0", "0", "1"]],
            &["0.2", "0.3", "0.5"],
        )
        .unwrap();
        assert!(m.check_unique_arrangement());
        assert!(diag_model(&["0.1", "0.4", "1"]).check_unique_arrangement());
    }

    #[test]
    fn permutation_conjugates() {
        let m = ReplacementMatrix::from_strs(
            &[&["0.5", "0", "0.5"], &["0", "0.3", "0.7"], &["0", "0", "1"]],
            &["0.2", "0.3", "0.5"],
        )
        .unwrap();
        assert_eq!(m.apply_permutation(&[0, 1, 2]).unwrap(), m);
        let swapped = m.apply_permutation(&[1, 0, 2]).unwrap();
        let expected = ReplacementMatrix::from_strs(
            &[&["0.3", "0", "0.7"], &["0", "0.5", "0.5"], &["0", "0", "1"]],
            &["0.3", "0.2", "0.5"],
        )
        .unwrap();
        assert_eq!(swapped, expected);
        assert_eq!(swapped.apply_permutation(&[1, 0, 2]).unwrap(), m);
        assert!(matches!(m.apply_permutation(&[0, 0, 2]), Err(ModelError::InvalidPermutation(_))));
        assert!(matches!(m.apply_permutation(&[0, 1]), Err(ModelError::InvalidPermutation(_))));
        // moving the absorbing color first breaks triangularity
        assert!(matches!(m.apply_permutation(&[1, 2, 0]), Err(ModelError::NotTriangular { .. })));
    }

    #[test]
    fn model_file_round_trip() {
        let text = r#"{"R": [["0.5", 0.5], [0, "1"]], "C0": ["1/4", 0.75], "labels": ["red", "blue"]}"#;
        let v = parse_model_json(text, ValidateOptions::default()).unwrap();
        assert_eq!(v.matrix.label(1), "blue");
        let again = model_from_value(&v.matrix.to_json(), ValidateOptions::default()).unwrap();
        assert_eq!(again.matrix, v.matrix);
        assert_eq!(again.matrix.fingerprint(), v.matrix.fingerprint());
        assert!(parse_model_json(r#"{"R": [[1]]}"#, ValidateOptions::default()).is_err());
        let bad = parse_model_json(r#"{"R": [["x"]], "C0": [1]}"#, ValidateOptions::default()).unwrap_err();
        assert!(matches!(bad, ModelError::Parse { .. }));
    }
}
