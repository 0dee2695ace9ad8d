//! Brute-force reference computations shared by the integration tests.
//! Nothing here goes through the filter or the enumeration module.

#![allow(dead_code)]

use sideinfo_core::presets;
use sideinfo_core::PairModel;

/// Stationary law of the history chain by plain power iteration on the
/// kernel rows, with the shift written out by hand.
pub fn stationary(model: &PairModel) -> Vec<f64> {
    let p = model.pairs();
    let k = model.order();
    let states = p.pow(k as u32);
    let keep = if k == 0 { 1 } else { p.pow(k as u32 - 1) };
    let mut pi = vec![1.0 / states as f64; states];
    for _ in 0..20_000 {
        let mut next = vec![0.0; states];
        for (h, w) in pi.iter().enumerate() {
            for s in 0..p {
                let to = if k == 0 { 0 } else { (h % keep) * p + s };
                next[to] += w * model.row(h)[s];
            }
        }
        let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if diff < 1e-15 {
            break;
        }
    }
    pi
}

/// `P(x_1^n, y_1^n)` as a sum over the starting history of products of
/// kernel entries.
pub fn joint(model: &PairModel, pi: &[f64], x: &[u32], y: &[u32]) -> f64 {
    let p = model.pairs();
    let k = model.order();
    let keep = if k == 0 { 1 } else { p.pow(k as u32 - 1) };
    let ys = model.y_size();
    let mut total = 0.0;
    for (h0, w) in pi.iter().enumerate() {
        let mut prob = *w;
        let mut h = h0;
        for (&a, &b) in x.iter().zip(y) {
            let s = a as usize * ys + b as usize;
            prob *= model.row(h)[s];
            if k > 0 {
                h = (h % keep) * p + s;
            }
        }
        total += prob;
    }
    total
}

/// Every string of length `n` over an alphabet of size `size`, last
/// symbol varying fastest.
pub fn all_strings(size: usize, n: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..size as u32).map(move |c| {
                    let mut t = s.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
    }
    out
}

/// Small models covering memoryless and Markov kernels, positive ones and
/// ones with zeros, with `|X| |Y| <= 6`.
pub fn small_models() -> Vec<(String, PairModel)> {
    let mut v: Vec<(String, PairModel)> = vec![
        ("dsc".into(), presets::dsc_memoryless(0.11)),
        ("dsc-markov".into(), presets::dsc_markov(0.2, 0.11)),
        ("feedback".into(), presets::feedback_order1()),
        ("independent-x".into(), presets::independent_uniform_x(0.2)),
        ("copy".into(), presets::copy_model()),
        ("uniform-conditional".into(), presets::uniform_conditional_memoryless()),
    ];
    for (i, (x, y, k)) in [
        (2, 3, 0),
        (3, 2, 0),
        (2, 2, 1),
        (2, 3, 1),
        (3, 2, 1),
        (1, 3, 1),
        (3, 1, 1),
        (2, 2, 2),
    ]
    .into_iter()
    .enumerate()
    {
        v.push((
            format!("random-{x}x{y}-k{k}"),
            presets::random_positive(x, y, k, 100 + i as u64),
        ));
    }
    v
}

pub fn binary_entropy(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}
