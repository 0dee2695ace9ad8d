//! Fixtures shared by the criterion benches in `benches/`.

use sideinfo_core::mc::stationary_strings;
use sideinfo_core::{presets, PairModel};

/// Models the benches run on: the memoryless DSC and the order-1 feedback
/// channel.
pub fn models() -> Vec<(&'static str, PairModel)> {
    vec![
        ("dsc", presets::dsc_memoryless(0.11)),
        ("feedback", presets::feedback_order1()),
    ]
}

/// A stationary `(x, y)` pair of length `n` on a fixed seed.
pub fn strings(model: &PairModel, n: usize) -> (Vec<u32>, Vec<u32>) {
    stationary_strings(model, n, 0xbe_4c4, 0)
}
