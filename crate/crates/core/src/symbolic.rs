//! Alphabets, words, cylinder indices and finite-memory costs.
//!
//! Words over `{0, .., d-1}` are encoded little-endian in base `d`, so the
//! first symbol `y0` is the least significant digit. Dropping the first
//! symbol of a word is then an integer division by `d`, and the block of the
//! first `L` symbols is the index modulo `d^L`.

use crate::error::{Error, Result};

/// `d^len`, the number of words of length `len`.
pub fn word_count(d: usize, len: usize) -> usize {
    d.pow(len as u32)
}

/// Canonical index of a word (little-endian base `d`).
pub fn encode(symbols: &[usize], d: usize) -> usize {
    symbols.iter().rev().fold(0, |acc, &s| acc * d + s)
}

/// Inverse of [`encode`] for words of length `len`.
pub fn decode(mut index: usize, len: usize, d: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(index % d);
        index /= d;
    }
    out
}

/// A finite word `y0 y1 ... y_{n-1}` over the alphabet `{0, .., d-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    symbols: Vec<usize>,
}

impl Word {
    pub fn new(symbols: Vec<usize>, d: usize) -> Result<Self> {
        for (position, &symbol) in symbols.iter().enumerate() {
            if symbol >= d {
                return Err(Error::SymbolOutOfRange {
                    position,
                    symbol,
                    size: d,
                });
            }
        }
        Ok(Word { symbols })
    }

    pub fn from_index(index: usize, len: usize, d: usize) -> Self {
        Word {
            symbols: decode(index, len, d),
        }
    }

    pub fn index(&self, d: usize) -> usize {
        encode(&self.symbols, d)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The word with its first symbol removed (the shift).
    pub fn shift(&self) -> Word {
        Word {
            symbols: self.symbols.iter().skip(1).copied().collect(),
        }
    }
}

/// A cost `c(x, y0 .. y_{m-1})` depending on finitely many coordinates,
/// stored in log scale (the weights are `exp(c)`).
///
/// Values are laid out as `values[x * d^m + w]` with `w` the canonical word
/// index.
#[derive(Clone, Debug, PartialEq)]
pub struct CostTensor {
    num_x: usize,
    alphabet_size: usize,
    depth: usize,
    values: Vec<f64>,
}

impl CostTensor {
    pub fn new(num_x: usize, alphabet_size: usize, depth: usize, values: Vec<f64>) -> Result<Self> {
        check_positive("num_x", num_x)?;
        check_positive("alphabet_size", alphabet_size)?;
        check_positive("depth", depth)?;
        let expected = num_x * word_count(alphabet_size, depth);
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                field: "cost",
                expected,
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCost { index });
        }
        Ok(CostTensor {
            num_x,
            alphabet_size,
            depth,
            values,
        })
    }

    /// Builds a cost by evaluating `f(x, word)` on every cylinder of length `depth`.
    pub fn from_fn(
        num_x: usize,
        alphabet_size: usize,
        depth: usize,
        mut f: impl FnMut(usize, &[usize]) -> f64,
    ) -> Result<Self> {
        let words = word_count(alphabet_size, depth);
        let mut values = Vec::with_capacity(num_x * words);
        for x in 0..num_x {
            for w in 0..words {
                values.push(f(x, &decode(w, depth, alphabet_size)));
            }
        }
        Self::new(num_x, alphabet_size, depth, values)
    }

    pub fn constant(num_x: usize, alphabet_size: usize, depth: usize, value: f64) -> Result<Self> {
        Self::from_fn(num_x, alphabet_size, depth, |_, _| value)
    }

    /// Builds a depth-2 cost from per-x matrices of weights `A^x[r][s] = exp(c(x, r s))`,
    /// the form used for two-symbol costs on small alphabets.
    pub fn from_weight_matrices(weights: &[Vec<Vec<f64>>]) -> Result<Self> {
        let num_x = weights.len();
        let d = weights.first().map_or(0, |m| m.len());
        Self::from_fn(num_x, d, 2, |x, w| weights[x][w[0]][w[1]].ln())
    }

    pub fn num_x(&self) -> usize {
        self.num_x
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn words(&self) -> usize {
        word_count(self.alphabet_size, self.depth)
    }

    /// `c(x, w)` for a canonical word index `w` of length `depth`.
    pub fn get(&self, x: usize, w: usize) -> f64 {
        self.values[x * self.words() + w]
    }

    /// Evaluates the cost on a word of length at least `depth`; extra symbols are ignored.
    pub fn eval(&self, x: usize, symbols: &[usize]) -> f64 {
        assert!(symbols.len() >= self.depth, "word shorter than cost depth");
        self.get(x, encode(&symbols[..self.depth], self.alphabet_size))
    }

    /// Re-expresses the cost as a function of `target` coordinates.
    pub fn lift_depth(&self, target: usize) -> Result<CostTensor> {
        if target < self.depth {
            return Err(Error::DepthDecrease {
                from: self.depth,
                to: target,
            });
        }
        let inner = self.words();
        let words = word_count(self.alphabet_size, target);
        let mut values = Vec::with_capacity(self.num_x * words);
        for x in 0..self.num_x {
            for w in 0..words {
                values.push(self.get(x, w % inner));
            }
        }
        Ok(CostTensor {
            num_x: self.num_x,
            alphabet_size: self.alphabet_size,
            depth: target,
            values,
        })
    }

    /// Depth used by the block chain: costs of depth 1 run as depth 2.
    pub fn block_depth(&self) -> usize {
        self.depth.max(2)
    }

    pub(crate) fn lifted_for_blocks(&self) -> CostTensor {
        self.lift_depth(self.block_depth())
            .expect("block depth is never below the cost depth")
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> CostTensor {
        CostTensor {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// `beta * c`.
    pub fn scaled(&self, beta: f64) -> CostTensor {
        self.map(|v| beta * v)
    }

    /// `c + k` for a constant `k`.
    pub fn shifted(&self, k: f64) -> CostTensor {
        self.map(|v| v + k)
    }

    /// `(c + phi)(x, w) = c(x, w) + phi(x)`.
    pub fn add_x(&self, phi: &[f64]) -> CostTensor {
        assert_eq!(phi.len(), self.num_x, "phi must have one entry per x");
        let words = self.words();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| v + phi[i / words])
            .collect();
        CostTensor {
            values,
            ..self.clone()
        }
    }

    /// Convex combination `t c + (1 - t) other` (after lifting both to a common depth).
    pub fn interpolate(&self, other: &CostTensor, t: f64) -> CostTensor {
        let depth = self.depth.max(other.depth);
        let a = self.lift_depth(depth).expect("lift");
        let b = other.lift_depth(depth).expect("lift");
        let values = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(u, v)| t * u + (1.0 - t) * v)
            .collect();
        CostTensor { values, ..a }
    }

    /// Supremum distance, after lifting both costs to a common depth.
    pub fn sup_distance(&self, other: &CostTensor) -> f64 {
        let depth = self.depth.max(other.depth);
        let a = self.lift_depth(depth).expect("lift");
        let b = other.lift_depth(depth).expect("lift");
        a.values
            .iter()
            .zip(&b.values)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_positive(field: &'static str, value: usize) -> Result<()> {
    if value == 0 {
        Err(Error::InvalidDimension { field, value })
    } else {
        Ok(())
    }
}

/// A probability on `X` with full support.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginal {
    weights: Vec<f64>,
}

impl Marginal {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDimension {
                field: "mu",
                value: 0,
            });
        }
        for (index, &value) in weights.iter().enumerate() {
            if value == 0.0 {
                return Err(Error::ZeroMarginal { index });
            }
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidMarginal { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::MarginalSum { sum });
        }
        Ok(Marginal { weights })
    }

    /// Uniform probability on `n` points.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    /// Normalizes positive weights to a probability.
    pub fn from_unnormalized(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        let mut w: Vec<f64> = weights.iter().map(|v| v / sum).collect();
        // absorb the last rounding ulp so the sum check is exact
        let drift: f64 = 1.0 - w.iter().sum::<f64>();
        if let Some(last) = w.last_mut() {
            *last += drift;
        }
        Self::new(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Shannon entropy `-sum mu log mu`.
    pub fn entropy(&self) -> f64 {
        -self.weights.iter().map(|&p| p * p.ln()).sum::<f64>()
    }

    /// `sum_x mu(x) f(x)`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(p, v)| p * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_is_little_endian() {
        assert_eq!(encode(&[1, 0], 2), 1);
        assert_eq!(encode(&[0, 1], 2), 2);
        assert_eq!(encode(&[2, 1, 0], 3), 2 + 3);
        assert_eq!(decode(5, 3, 3), vec![2, 1, 0]);
    }

    #[test]
    fn shifting_is_integer_division() {
        let w = Word::new(vec![1, 0, 2, 2], 3).unwrap();
        assert_eq!(w.shift().index(3), w.index(3) / 3);
    }

    #[test]
    fn word_rejects_out_of_range_symbol() {
        let err = Word::new(vec![0, 3], 3).unwrap_err();
        assert!(matches!(err, Error::SymbolOutOfRange { position: 1, .. }));
    }

    #[test]
    fn lift_depth_one_pads_with_free_symbol() {
        let c = CostTensor::new(2, 2, 1, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let lifted = c.lift_depth(2).unwrap();
        for x in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    assert_eq!(lifted.eval(x, &[a, b]), c.eval(x, &[a]));
                }
            }
        }
    }

    #[test]
    fn lift_to_same_depth_is_identity() {
        let c = CostTensor::new(1, 3, 2, (0..9).map(|i| i as f64 * 0.1).collect()).unwrap();
        assert_eq!(c.lift_depth(2).unwrap(), c);
    }

    #[test]
    fn lift_to_smaller_depth_fails() {
        let c = CostTensor::constant(1, 2, 3, 0.0).unwrap();
        assert!(matches!(c.lift_depth(2), Err(Error::DepthDecrease { .. })));
    }

    #[test]
    fn cost_rejects_non_finite_entries() {
        let err = CostTensor::new(1, 2, 1, vec![0.0, f64::INFINITY]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteCost { index: 1 }));
    }

    #[test]
    fn cost_checks_dimensions() {
        let err = CostTensor::new(2, 2, 2, vec![0.0; 7]).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 8,
                found: 7,
                ..
            }
        ));
    }

    #[test]
    fn marginal_requires_full_support() {
        let err = Marginal::new(vec![1.0, 0.0]).unwrap_err();
        assert_eq!(
            err.to_string(),
            "mu[1] is zero; marginals need full support"
        );
    }

    #[test]
    fn marginal_requires_unit_mass() {
        assert!(matches!(
            Marginal::new(vec![0.5, 0.6]),
            Err(Error::MarginalSum { .. })
        ));
    }

    #[test]
    fn add_x_only_depends_on_x() {
        let c = CostTensor::constant(2, 2, 2, 1.0).unwrap();
        let shifted = c.add_x(&[0.5, -1.0]);
        assert_eq!(shifted.eval(0, &[1, 1]), 1.5);
        assert_eq!(shifted.eval(1, &[0, 1]), 0.0);
    }
}
