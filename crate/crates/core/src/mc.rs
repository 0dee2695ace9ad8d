//! Replica-parallel Monte Carlo helpers.

use rayon::prelude::*;

use crate::density::DensityTracker;
use crate::error::Result;
use crate::model::PairModel;
use crate::rng::replica_rng;
use crate::sample::PairStream;

/// Evaluate `f(replica)` for `replica = 0..count` in parallel; results come
/// back in replica order.
pub fn replicate<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..count as u64).into_par_iter().map(f).collect()
}

/// Draw a stationary pair path of length `n` on stream `replica` and
/// return its X and Y coordinates.
pub fn stationary_strings(model: &PairModel, n: usize, seed: u64, replica: u64) -> (Vec<u32>, Vec<u32>) {
    let mut rng = replica_rng(seed, replica);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for s in PairStream::new(model, &mut rng).take(n) {
        let (x, y) = model.split_pair(s);
        xs.push(x);
        ys.push(y);
    }
    (xs, ys)
}

/// `d_n` for `samples` independent stationary strings of length `n`.
pub fn sample_densities(model: &PairModel, n: usize, samples: usize, seed: u64) -> Result<Vec<f64>> {
    replicate(samples, |r| {
        let mut rng = replica_rng(seed, r);
        let mut tracker = DensityTracker::new(model);
        for s in PairStream::new(model, &mut rng).take(n) {
            let (x, y) = model.split_pair(s);
            tracker.push(x, y)?;
        }
        Ok(tracker.density())
    })
}
