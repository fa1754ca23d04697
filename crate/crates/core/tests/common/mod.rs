//! Independent oracles and random instance generators shared by the
//! integration tests. Nothing here calls the solvers it is used to check.

#![allow(dead_code)]

use ergodic_transport::plan::FiniteMemoryPlan;
use ergodic_transport::symbolic::{CostTensor, Marginal};
use ergodic_transport::transfer::MarkovMeasure;
use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn example_one() -> CostTensor {
    let ln2 = 2f64.ln();
    CostTensor::new(2, 2, 2, vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, ln2]).unwrap()
}

pub fn random_cost(
    r: &mut impl Rng,
    num_x: usize,
    d: usize,
    depth: usize,
    scale: f64,
) -> CostTensor {
    let n = num_x * d.pow(depth as u32);
    CostTensor::new(
        num_x,
        d,
        depth,
        (0..n).map(|_| r.gen_range(-scale..scale)).collect(),
    )
    .unwrap()
}

/// `#X` in 1..=3, `d` in 1..=3 (at least 2 when `#X = 1`), depth in 1..=max_depth.
pub fn random_shape(r: &mut impl Rng, max_depth: usize) -> (usize, usize, usize) {
    let num_x = r.gen_range(1..=3);
    let d = if num_x == 1 {
        r.gen_range(2..=3)
    } else {
        r.gen_range(1..=3)
    };
    (num_x, d, r.gen_range(1..=max_depth))
}

pub fn random_marginal(r: &mut impl Rng, n: usize) -> Marginal {
    let w: Vec<f64> = (0..n).map(|_| r.gen_range(0.05..1.0)).collect();
    Marginal::from_unnormalized(&w).unwrap()
}

fn digits(mut index: usize, len: usize, d: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(index % d);
        index /= d;
    }
    out
}

fn number(symbols: &[usize], d: usize) -> usize {
    symbols.iter().rev().fold(0, |acc, &s| acc * d + s)
}

/// Transfer matrix by direct summation over `(x, a)` for every block,
/// evaluating the cost on explicit symbol sequences.
pub fn naive_transfer(c: &CostTensor) -> DMatrix<f64> {
    let d = c.alphabet_size();
    let block = c.depth().max(2) - 1;
    let states = d.pow(block as u32);
    let mut m = DMatrix::zeros(states, states);
    for b in 0..states {
        let tail = digits(b, block, d);
        for a in 0..d {
            let mut word = vec![a];
            word.extend(&tail);
            let next = number(&word[..block], d);
            for x in 0..c.num_x() {
                let value = c.values()[x * d.pow(c.depth() as u32) + number(&word[..c.depth()], d)];
                m[(next, b)] += value.exp();
            }
        }
    }
    m
}

/// Dominant eigenvalue from the full complex spectrum.
pub fn dense_lambda(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Positive vector spanning the null space of `M^T - lambda I`, via SVD,
/// scaled to `min = 1`.
pub fn dense_eigenfunction(m: &DMatrix<f64>, lambda: f64) -> Vec<f64> {
    let n = m.nrows();
    let a = m.transpose() - DMatrix::identity(n, n) * lambda;
    let svd = a.svd(false, true);
    let vt = svd.v_t.unwrap();
    let (k, _) =
        svd.singular_values
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) },
            );
    let mut h: Vec<f64> = vt.row(k).iter().copied().collect();
    if h.iter().sum::<f64>() < 0.0 {
        h.iter_mut().for_each(|v| *v = -*v);
    }
    let low = h.iter().cloned().fold(f64::INFINITY, f64::min);
    h.iter().map(|v| v / low).collect()
}

pub fn naive_pressure(c: &CostTensor) -> f64 {
    dense_lambda(&naive_transfer(c)).ln()
}

/// Stationary vector by iterating the lazy chain `(I + Q) / 2`.
pub fn power_stationary(q: &DMatrix<f64>) -> Vec<f64> {
    let n = q.nrows();
    let lazy = (q + DMatrix::identity(n, n)) * 0.5;
    let mut p = nalgebra::DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..200_000 {
        let next = &lazy * &p;
        let diff = (&next - &p).amax();
        p = next;
        if diff < 1e-17 {
            break;
        }
    }
    let s = p.sum();
    p.iter().map(|v| v / s).collect()
}

/// Best mean over all simple cycles of a digraph given as a dense weight
/// matrix `w[from][to]` (`-inf` for missing edges), compared in exact
/// rational arithmetic and rounded once at the end.
pub fn best_cycle_mean(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    let mut best: Option<BigRational> = None;
    // each simple cycle is found once, from its smallest node
    fn extend(
        w: &[Vec<f64>],
        start: usize,
        node: usize,
        on_path: &mut Vec<bool>,
        len: usize,
        total: BigRational,
        best: &mut Option<BigRational>,
    ) {
        for next in start..w.len() {
            let e = w[node][next];
            if e == f64::NEG_INFINITY {
                continue;
            }
            let sum = total.clone() + BigRational::from_float(e).unwrap();
            if next == start {
                let mean = sum / BigRational::from_integer((len as i64 + 1).into());
                if best.as_ref().map_or(true, |b| mean > *b) {
                    *best = Some(mean);
                }
            } else if !on_path[next] {
                on_path[next] = true;
                extend(w, start, next, on_path, len + 1, sum, best);
                on_path[next] = false;
            }
        }
    }
    for s in 0..n {
        let mut on_path = vec![false; n];
        on_path[s] = true;
        extend(w, s, s, &mut on_path, 0, BigRational::zero(), &mut best);
    }
    best.and_then(|b| b.to_f64()).unwrap_or(f64::NEG_INFINITY)
}

/// `nu([t])` from explicit chain products, for any non-empty word.
pub fn naive_nu(nu: &MarkovMeasure, t: &[usize]) -> f64 {
    let (d, l) = (nu.alphabet_size(), nu.block_len());
    if t.len() < l {
        let extra = l - t.len();
        return (0..d.pow(extra as u32))
            .map(|z| {
                let mut full = t.to_vec();
                full.extend(digits(z, extra, d));
                naive_nu(nu, &full)
            })
            .sum();
    }
    let mut mass = nu.stationary()[number(&t[t.len() - l..], d)];
    for i in (0..t.len() - l).rev() {
        let tail = number(&t[i + 1..i + 1 + l], d);
        mass *= nu.transition()[t[i] + d * tail];
    }
    mass
}

/// `pi([x, word])` from the Jacobian and explicit chain products.
pub fn naive_cylinder(plan: &FiniteMemoryPlan, x: usize, word: &[usize]) -> f64 {
    let (d, l) = (plan.alphabet_size(), plan.block_len());
    if word.len() - 1 < l {
        let extra = l + 1 - word.len();
        return (0..d.pow(extra as u32))
            .map(|z| {
                let mut full = word.to_vec();
                full.extend(digits(z, extra, d));
                naive_cylinder(plan, x, &full)
            })
            .sum();
    }
    let b = number(&word[1..1 + l], d);
    plan.jacobian(x, word[0], b) * naive_nu(plan.nu(), &word[1..])
}

pub fn all_words(len: usize, d: usize) -> Vec<Vec<usize>> {
    (0..d.pow(len as u32)).map(|i| digits(i, len, d)).collect()
}

/// A random block-Markov measure with positive transitions.
pub fn random_markov(r: &mut impl Rng, d: usize, block_len: usize) -> MarkovMeasure {
    let states = d.pow(block_len as u32);
    let mut trans = vec![0.0; d * states];
    for b in 0..states {
        let w: Vec<f64> = (0..d).map(|_| r.gen_range(0.05..1.0)).collect();
        let s: f64 = w.iter().sum();
        for a in 0..d {
            trans[a + d * b] = w[a] / s;
        }
    }
    MarkovMeasure::from_transition(d, block_len, trans).unwrap()
}

/// A random plan over a random chain; with `sparse`, some Jacobian entries
/// are zero (each column keeps at least one `x`).
pub fn random_plan(
    r: &mut impl Rng,
    num_x: usize,
    d: usize,
    block_len: usize,
    sparse: bool,
) -> FiniteMemoryPlan {
    let nu = random_markov(r, d, block_len);
    let words = d * nu.states();
    let mut jac = vec![0.0; num_x * words];
    for w in 0..words {
        let mut split: Vec<f64> = (0..num_x)
            .map(|_| {
                if sparse && r.gen_bool(0.4) {
                    0.0
                } else {
                    r.gen_range(0.05..1.0)
                }
            })
            .collect();
        if split.iter().all(|&v| v == 0.0) {
            split[r.gen_range(0..num_x)] = 1.0;
        }
        let s: f64 = split.iter().sum();
        for x in 0..num_x {
            jac[x * words + w] = nu.transition()[w] * split[x] / s;
        }
    }
    FiniteMemoryPlan::new(num_x, jac, nu).unwrap()
}

/// Shannon entropy of a probability vector.
pub fn shannon(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v * v.ln())
        .sum::<f64>()
}

/// Minimizes a one-dimensional function on `[lo, hi]`: a uniform grid, then
/// golden-section refinement around the best grid point.
pub fn grid_then_golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> f64 {
    let step = (hi - lo) / (points - 1) as f64;
    let best = (0..points)
        .map(|i| lo + step * i as f64)
        .map(|t| (t, f(t)))
        .fold(
            (lo, f64::INFINITY),
            |acc, (t, v)| if v < acc.1 { (t, v) } else { acc },
        );
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        if b - a < 1e-13 {
            break;
        }
    }
    0.5 * (a + b)
}
