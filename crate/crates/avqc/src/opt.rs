//! Optimization utilities over probability simplices: Euclidean simplex
//! projection, exhaustive simplex grids, Nelder-Mead, and the grid +
//! multistart search used for prior and jammer-mixture optimization.
//!
//! All searches are deterministic for a fixed seed: random starts are
//! drawn up front from a seeded generator, candidate evaluations are
//! collected in index order, and ties are broken by the first index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::random;

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    assert!(n >= 1);
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
        }
    }
    v.iter().map(|&x| (x - threshold).max(0.0)).collect()
}

/// All sequences in `{0, …, base−1}^n`, lexicographic.
pub fn index_sequences(base: usize, n: usize) -> Vec<Vec<usize>> {
    assert!(base >= 1);
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::with_capacity(base.pow(n as u32));
    let mut current = vec![0usize; n];
    loop {
        out.push(current.clone());
        let mut pos = n;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            current[pos] += 1;
            if current[pos] < base {
                break;
            }
            current[pos] = 0;
        }
    }
}

/// All points `k/resolution` of the simplex grid on `dim` coordinates,
/// lexicographic in the integer compositions.
pub fn simplex_grid(dim: usize, resolution: usize) -> Vec<Vec<f64>> {
    assert!(dim >= 1 && resolution >= 1);
    let mut out = Vec::new();
    let mut partial = Vec::with_capacity(dim);
    fill_grid(dim, resolution, &mut partial, &mut out);
    out
}

fn fill_grid(dim: usize, remaining: usize, partial: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
    if partial.len() + 1 == dim {
        partial.push(remaining);
        let total: usize = partial.iter().sum();
        out.push(
            partial
                .iter()
                .map(|&k| k as f64 / total.max(1) as f64)
                .collect(),
        );
        partial.pop();
        return;
    }
    for k in 0..=remaining {
        partial.push(k);
        fill_grid(dim, remaining - k, partial, out);
        partial.pop();
    }
}

/// Nelder-Mead minimization on ℝ^k. Returns the best vertex and value.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    step: f64,
    max_iters: usize,
) -> (Vec<f64>, f64) {
    let k = x0.len();
    assert!(k >= 1);
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..k {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();

    for _ in 0..max_iters {
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let best = order[0];
        let second_worst = order[k - 1];
        let worst = order[k];
        if values[worst] - values[best] <= 1e-12 * (1.0 + values[best].abs()) {
            break;
        }

        let mut centroid = vec![0.0; k];
        for &i in &order[..k] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / k as f64;
            }
        }
        let blend = |a: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(&c, &w)| c + a * (c - w))
                .collect()
        };

        let reflected = blend(1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = blend(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        let contracted = if fr < values[worst] {
            blend(0.5)
        } else {
            blend(-0.5)
        };
        let fc = f(&contracted);
        if fc < values[worst].min(fr) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        for &i in &order[1..] {
            let shrunk: Vec<f64> = simplex[best]
                .iter()
                .zip(&simplex[i])
                .map(|(&b, &x)| b + 0.5 * (x - b))
                .collect();
            simplex[i] = shrunk;
            values[i] = f(&simplex[i]);
        }
    }

    let mut best = 0;
    for i in 1..values.len() {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex.swap_remove(best), values[best])
}

/// Configuration for simplex searches.
#[derive(Debug, Clone)]
pub struct SimplexSearch {
    /// Grid resolution used when the simplex dimension is at most 3.
    pub grid_resolution: usize,
    /// Multistart count used when the dimension is 4 or more.
    pub starts: usize,
    /// Nelder-Mead iteration cap per start.
    pub nm_max_iters: usize,
    /// Seed for the random multistart points.
    pub seed: u64,
}

impl Default for SimplexSearch {
    fn default() -> Self {
        SimplexSearch {
            grid_resolution: 64,
            starts: 16,
            nm_max_iters: 2000,
            seed: 0,
        }
    }
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let top = x.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = x.iter().map(|&v| (v - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / total).collect()
}

fn logits(p: &[f64]) -> Vec<f64> {
    p.iter().map(|&v| v.max(1e-12).ln()).collect()
}

fn normalized(p: &[f64]) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    p.iter().map(|&v| v / total).collect()
}

/// Maximizes `f` over the probability simplex of the given dimension.
///
/// Dimension ≤ 3 uses an exhaustive grid followed by Nelder-Mead
/// refinement in softmax coordinates; higher dimensions use multistart
/// Nelder-Mead with the uniform distribution as the first start. The
/// reported value is `f` re-evaluated at the reported (renormalized)
/// argument, so reports are reproducible from their arguments.
pub fn maximize_over_simplex<F>(dim: usize, f: F, cfg: &SimplexSearch) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(dim >= 1);
    if dim == 1 {
        let q = vec![1.0];
        let v = f(&q);
        return (q, v);
    }

    let refine = |start: &[f64]| -> (Vec<f64>, f64) {
        let (x, neg) = nelder_mead(|x| -f(&softmax(x)), &logits(start), 0.5, cfg.nm_max_iters);
        (softmax(&x), -neg)
    };

    let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new();
    if dim <= 3 {
        let grid = simplex_grid(dim, cfg.grid_resolution);
        let scored: Vec<f64> = grid.par_iter().map(|q| f(q)).collect();
        let mut best = 0;
        for i in 1..grid.len() {
            if scored[i] > scored[best] {
                best = i;
            }
        }
        candidates.push((grid[best].clone(), scored[best]));
        candidates.push(refine(&grid[best]));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut starts = vec![vec![1.0 / dim as f64; dim]];
        for _ in 1..cfg.starts.max(1) {
            starts.push(random::distribution(&mut rng, dim));
        }
        candidates = starts.par_iter().map(|s| refine(s)).collect();
    }

    let mut best = 0;
    for i in 1..candidates.len() {
        if candidates[i].1 > candidates[best].1 {
            best = i;
        }
    }
    let q = normalized(&candidates[best].0);
    let v = f(&q);
    (q, v)
}

/// Minimizes `f` over the probability simplex; see `maximize_over_simplex`.
pub fn minimize_over_simplex<F>(dim: usize, f: F, cfg: &SimplexSearch) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let (q, v) = maximize_over_simplex(dim, |x| -f(x), cfg);
    (q, -v)
}
