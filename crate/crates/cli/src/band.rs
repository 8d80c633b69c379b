//! The default quartile set for sweeps: all Qt₁ quartiles in a box of
//! scales, spatial window, and low-frequency band. The box is closed under
//! Fefferman intermediates, so it is convex by construction.

use std::collections::BTreeSet;

use quartile_core::dyadic::DyadicInterval;
use quartile_core::plane::Quartile;

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct BandConfig {
    /// Lowest (finest) even spatial scale exponent.
    pub min_scale: i32,
    /// Number of Qt₁ scale classes, stepping by 2 from `min_scale`.
    pub scale_classes: u32,
    /// Frequency positions 0..freq_band at every scale.
    pub freq_band: u64,
    /// Quartiles must have spatial interval intersecting [0, 2^window).
    pub window: i32,
}

impl BandConfig {
    pub fn for_depth(depth: u32, scale_classes: u32, freq_band: u64) -> BandConfig {
        // finest class sits two classes above the input grid so every
        // frequency grandchild packet is resolvable on it
        BandConfig {
            min_scale: -(depth as i32) + 2,
            scale_classes,
            freq_band,
            window: 0,
        }
    }

    /// All quartiles of the band whose spatial interval meets [0, 2^window).
    pub fn quartiles(&self) -> BTreeSet<Quartile> {
        let mut out = BTreeSet::new();
        for c in 0..self.scale_classes {
            let k = self.min_scale + 2 * c as i32;
            debug_assert!(k & 1 == 0, "band scales must be even");
            let positions: u64 = if k >= self.window {
                1
            } else {
                1u64 << ((self.window - k) as u32)
            };
            for pos in 0..positions {
                for freq in 0..self.freq_band {
                    out.insert(
                        Quartile::new(
                            DyadicInterval::new(k, pos),
                            DyadicInterval::new(2 - k, freq),
                        )
                        .expect("band quartiles satisfy the area invariant"),
                    );
                }
            }
        }
        out
    }
}
