//! Ready-made pair models used by tests, experiments and the CLI.

use rand::Rng;

use crate::model::{ModelSpec, PairModel};
use crate::rng::replica_rng;

fn build(x: usize, y: usize, order: usize, kernel: Vec<Vec<f64>>) -> PairModel {
    PairModel::build(ModelSpec {
        x_alphabet: x,
        y_alphabet: y,
        order,
        kernel,
        names: None,
    })
    .expect("preset models are valid")
}

/// Memoryless doubly symmetric binary source: Y ~ Bern(1/2), X = Y xor N with
/// N ~ Bern(p).
pub fn dsc_memoryless(p: f64) -> PairModel {
    // column index = x * |Y| + y
    build(2, 2, 0, vec![vec![0.5 * (1.0 - p), 0.5 * p, 0.5 * p, 0.5 * (1.0 - p)]])
}

/// Y a symmetric binary Markov chain with the given flip probability,
/// X = Y xor N with N ~ Bern(p) i.i.d.
pub fn dsc_markov(flip: f64, p: f64) -> PairModel {
    let mut kernel = Vec::new();
    for h in 0..4 {
        let y_prev = h % 2;
        let mut row = vec![0.0; 4];
        for (s, slot) in row.iter_mut().enumerate() {
            let (x, y) = (s / 2, s % 2);
            let py = if y == y_prev { 1.0 - flip } else { flip };
            let px = if x == y { 1.0 - p } else { p };
            *slot = py * px;
        }
        kernel.push(row);
    }
    build(2, 2, 1, kernel)
}

/// Memoryless uniform law on `|X| x |Y|`.
pub fn uniform_pair(x: usize, y: usize) -> PairModel {
    build(x, y, 0, vec![vec![1.0 / (x * y) as f64; x * y]])
}

/// X i.i.d. uniform on {0,1}, independent of a symmetric binary Markov Y.
pub fn independent_uniform_x(flip: f64) -> PairModel {
    let mut kernel = Vec::new();
    for h in 0..4 {
        let y_prev = h % 2;
        kernel.push(
            (0..4)
                .map(|s| 0.5 * if s % 2 == y_prev { 1.0 - flip } else { flip })
                .collect(),
        );
    }
    build(2, 2, 1, kernel)
}

/// Y ~ Bern(1/2) i.i.d. and X = Y.
pub fn copy_model() -> PairModel {
    build(2, 2, 0, vec![vec![0.5, 0.0, 0.0, 0.5]])
}

/// Memoryless model whose conditional law of X given Y = y is uniform on a
/// two-element subset of {0,1,2}; P(Y = 0) = 1/4. Every probability is
/// dyadic, so densities are computed exactly.
pub fn uniform_conditional_memoryless() -> PairModel {
    // X_0 = {0, 1}, X_1 = {1, 2}
    let mut row = vec![0.0; 6];
    for (x, y, p) in [(0, 0, 0.125), (1, 0, 0.125), (1, 1, 0.375), (2, 1, 0.375)] {
        row[x * 2 + y] = p;
    }
    build(3, 2, 0, vec![row])
}

/// Order-1 model with Y a binary Markov chain (stay w.p. 3/4) and X on
/// {0,1,2,3} moving to one of `{x, x + 1 + y'}` (mod 4) with equal
/// probability. P(x|y) is 1/4 for the first symbol and 1/2 afterwards, so
/// the conditional density is deterministic.
pub fn uniform_conditional_markov() -> PairModel {
    let mut kernel = Vec::new();
    for h in 0..8 {
        let (x_prev, y_prev) = (h / 2, h % 2);
        let mut row = vec![0.0; 8];
        for y in 0..2 {
            let py = if y == y_prev { 0.75 } else { 0.25 };
            for x in [x_prev, (x_prev + 1 + y) % 4] {
                row[x * 2 + y] += 0.5 * py;
            }
        }
        kernel.push(row);
    }
    build(4, 2, 1, kernel)
}

/// All-positive binary order-1 model in which the previous X influences the
/// next Y, so the side information is a hidden-Markov process.
pub fn feedback_order1() -> PairModel {
    build(
        2,
        2,
        1,
        vec![
            vec![0.50, 0.10, 0.15, 0.25],
            vec![0.10, 0.45, 0.30, 0.15],
            vec![0.30, 0.20, 0.10, 0.40],
            vec![0.05, 0.25, 0.15, 0.55],
        ],
    )
}

/// Random all-positive model; entries are drawn from [0.05, 1) and
/// normalized per row.
pub fn random_positive(x: usize, y: usize, order: usize, seed: u64) -> PairModel {
    let mut rng = replica_rng(seed, 0);
    let pairs = x * y;
    let rows = pairs.pow(order as u32);
    let kernel = (0..rows)
        .map(|_| {
            let raw: Vec<f64> = (0..pairs).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|v| v / total).collect()
        })
        .collect();
    build(x, y, order, kernel)
}

/// Names accepted by [`by_name`].
pub const NAMES: &[&str] = &[
    "dsc",
    "dsc-markov",
    "uniform",
    "independent-x",
    "copy",
    "uniform-conditional",
    "uniform-conditional-markov",
    "feedback",
];

pub fn by_name(name: &str) -> Option<PairModel> {
    Some(match name {
        "dsc" => dsc_memoryless(0.11),
        "dsc-markov" => dsc_markov(0.2, 0.11),
        "uniform" => uniform_pair(2, 2),
        "independent-x" => independent_uniform_x(0.2),
        "copy" => copy_model(),
        "uniform-conditional" => uniform_conditional_memoryless(),
        "uniform-conditional-markov" => uniform_conditional_markov(),
        "feedback" => feedback_order1(),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_named_preset_builds() {
        for name in NAMES {
            assert!(by_name(name).is_some(), "{name}");
        }
        assert!(by_name("nope").is_none());
    }

    #[test]
    fn random_models_are_positive_and_normalized() {
        let m = random_positive(2, 3, 1, 11);
        assert!(m.check_validity().all_positive);
        for h in 0..m.states() {
            assert!((m.row(h).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
