//! Seeded random fixtures shared by the property suites, the acceptance
//! tests, and the CLI.
//!
//! Trees are generated by descending one Qt₁ class at a time: a step from a
//! quartile picks one of its four spatial grandchild intervals, while the
//! frequency interval of the child is forced (the two-level dyadic ancestor).
//! Every member therefore carries its full chain back to the top, and all
//! Fefferman intermediates between members are chain elements, so the
//! generated sets are convex by construction. A pure j-tree needs the top
//! frequency position to repeat the base-4 digit j−1 down to the deepest
//! level.

use std::collections::BTreeSet;

use num_rational::BigRational;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyadic::{DyadicInterval, StepFunction};
use crate::plane::{Quartile, Tile};
use crate::scalar::ExactScalar;
use crate::tree::Tree;

/// The deterministic RNG used everywhere; reports embed the seed.
pub type FixtureRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Splitting helper so independent fixture streams stay reproducible when
/// trial counts change.
pub fn subseeded(seed: u64, stream: u64) -> FixtureRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

// rand::rngs::StdRng is only referenced so the ChaCha choice stays explicit
#[allow(dead_code)]
fn _pin_rng_choice(_: Option<StdRng>) {}

/// A random exact value: dyadic-denominator rational, occasionally with a
/// √2 component, occasionally negative or zero.
pub fn gen_value(rng: &mut impl Rng) -> ExactScalar {
    let num = rng.gen_range(-8i64..=8);
    let den = 1i64 << rng.gen_range(0..=3u32);
    let mut v = ExactScalar::from_ratio(num, den);
    if rng.gen_bool(0.3) {
        let bn = rng.gen_range(-4i64..=4);
        v += ExactScalar::sqrt2().scale(&BigRational::new(bn.into(), den.into()));
    }
    v
}

/// A random step function with cells inside [0, 2^window_scale).
pub fn gen_step(rng: &mut impl Rng, cell_scale: i32, window_scale: i32, max_cells: usize) -> StepFunction {
    let span = (window_scale - cell_scale).clamp(0, 20) as u32;
    let limit = 1u64 << span;
    let n = rng.gen_range(1..=max_cells);
    let cells = (0..n).map(|_| (rng.gen_range(0..limit), gen_value(rng)));
    StepFunction::from_cells(cell_scale, cells)
}

/// A nonzero random step function.
pub fn gen_nonzero_step(
    rng: &mut impl Rng,
    cell_scale: i32,
    window_scale: i32,
    max_cells: usize,
) -> StepFunction {
    loop {
        let f = gen_step(rng, cell_scale, window_scale, max_cells);
        if !f.is_zero() {
            return f;
        }
    }
}

/// A random tile with spatial scale in [-span/2, span/2].
pub fn gen_tile(rng: &mut impl Rng, half_span: i32) -> Tile {
    let k = rng.gen_range(-half_span..=half_span);
    let pos = rng.gen_range(0..16u64);
    let freq = rng.gen_range(0..16u64);
    Tile::new(DyadicInterval::new(k, pos), DyadicInterval::new(-k, freq))
        .expect("area invariant by construction")
}

/// A pair of disjoint tiles; resamples until the rectangles are disjoint.
pub fn gen_disjoint_tile_pair(rng: &mut impl Rng, half_span: i32) -> (Tile, Tile) {
    loop {
        let a = gen_tile(rng, half_span);
        let b = gen_tile(rng, half_span);
        if a.is_disjoint(&b) {
            return (a, b);
        }
    }
}

/// A random Qt₁ quartile with even spatial scale in [-half, half]·2.
pub fn gen_quartile(rng: &mut impl Rng, half_classes: i32) -> Quartile {
    let k = 2 * rng.gen_range(-half_classes..=half_classes);
    let pos = rng.gen_range(0..8u64);
    let freq = rng.gen_range(0..8u64);
    Quartile::new(DyadicInterval::new(k, pos), DyadicInterval::new(2 - k, freq))
        .expect("area invariant by construction")
}

/// The quartile one Qt₁ class below `q` sitting over the given spatial
/// grandchild; the frequency side is forced.
pub fn descend(q: &Quartile, gc: usize) -> Quartile {
    Quartile::new(
        q.space.grandchildren()[gc],
        DyadicInterval::new(q.freq.scale + 2, q.freq.pos >> 2),
    )
    .expect("area invariant preserved by a class step")
}

/// Top frequency position whose base-4 digits repeat j−1 for `depth`
/// levels, shifted by random higher digits.
fn j_tree_top_freq(rng: &mut impl Rng, j: u8, depth: u32) -> u64 {
    let digit = (j - 1) as u64;
    let mut n = 0u64;
    for _ in 0..depth {
        n = (n << 2) | digit;
    }
    n | (rng.gen_range(0..4u64) << (2 * depth))
}

/// A random convex j-tree with at most `max_quartiles` members, the top
/// included. Members descend at most `depth` Qt₁ classes.
pub fn gen_convex_jtree(
    rng: &mut impl Rng,
    j: u8,
    max_quartiles: usize,
    depth: u32,
) -> Tree {
    let top_scale = 2 * depth as i32;
    let top = Quartile::new(
        DyadicInterval::new(top_scale, rng.gen_range(0..4u64)),
        DyadicInterval::new(2 - top_scale, j_tree_top_freq(rng, j, depth)),
    )
    .expect("area invariant");
    grow_tree(rng, top, max_quartiles, depth)
}

/// A random convex tree with unconstrained branch digits; usually mixed.
pub fn gen_convex_tree(rng: &mut impl Rng, max_quartiles: usize, depth: u32) -> Tree {
    let top_scale = 2 * depth as i32;
    let top = Quartile::new(
        DyadicInterval::new(top_scale, rng.gen_range(0..4u64)),
        DyadicInterval::new(2 - top_scale, rng.gen_range(0..(4u64 << (2 * depth)))),
    )
    .expect("area invariant");
    grow_tree(rng, top, max_quartiles, depth)
}

fn grow_tree(rng: &mut impl Rng, top: Quartile, max_quartiles: usize, depth: u32) -> Tree {
    let floor_scale = top.space.scale - 2 * depth as i32;
    let mut members: Vec<Quartile> = vec![top];
    let budget = max_quartiles.max(1) - 1;
    for _ in 0..(2 * budget) {
        if members.len() > budget {
            break;
        }
        let parent = members[rng.gen_range(0..members.len())];
        if parent.space.scale <= floor_scale {
            continue;
        }
        let child = descend(&parent, rng.gen_range(0..4));
        if !members.contains(&child) {
            members.push(child);
        }
    }
    Tree::new(top, members).expect("descent steps stay below the top")
}

/// The full tree of all Qt₁ quartiles below a top, `depth` classes deep:
/// 4^d spatial grandchildren per level with the forced frequency interval.
pub fn full_tree_below(top: Quartile, depth: u32) -> Tree {
    let mut members = vec![top];
    let mut level = vec![top];
    for _ in 0..depth {
        let mut next = Vec::new();
        for q in &level {
            for gc in 0..4 {
                next.push(descend(q, gc));
            }
        }
        members.extend_from_slice(&next);
        level = next;
    }
    Tree::new(top, members).expect("descent steps stay below the top")
}

/// A random convex set: a union of convex trees whose spatial extents are
/// pairwise disjoint, so no Fefferman relation crosses the components.
pub fn gen_convex_set(rng: &mut impl Rng, max_quartiles: usize) -> BTreeSet<Quartile> {
    let components = rng.gen_range(1..=3usize);
    let mut out = BTreeSet::new();
    for c in 0..components {
        let depth = rng.gen_range(1..=3u32);
        let tree = gen_convex_tree(rng, (max_quartiles / components).max(1), depth);
        // translate the component by c·2^8, which every scale in use divides
        let delta = (c as u64) << 8;
        for q in tree.members() {
            let k = q.space.scale;
            debug_assert!((0..=8).contains(&k));
            let shifted = DyadicInterval::new(k, q.space.pos + (delta >> k as u32));
            out.insert(Quartile::new(shifted, q.freq).expect("translation keeps the area"));
        }
    }
    out
}

/// A step function tuned to interact with a tree: supported on the top
/// interval at a scale matching the deepest members.
pub fn gen_step_on_tree(rng: &mut impl Rng, tree: &Tree, max_cells: usize) -> StepFunction {
    let floor = tree.members().iter().map(|q| q.space.scale).min().unwrap_or(0) - 2;
    let top = tree.top_interval();
    let span = (top.scale - floor).clamp(0, 16) as u32;
    let base = top.pos << span;
    let n = rng.gen_range(1..=max_cells);
    let cells = (0..n).map(|_| (base + rng.gen_range(0..(1u64 << span)), gen_value(rng)));
    StepFunction::from_cells(floor, cells)
}

/// Dyadic truncation of the power profile x^{-1/p} on [2^{-depth}, 1): the
/// value on the block [2^{-j-1}, 2^{-j}) is the dyadic rational closest to
/// 2^{j/p} at resolution 2^{-20}. The profile is the canonical stress input
/// for weak-type constants near p = 1.
pub fn power_profile(p: f64, depth: u32) -> StepFunction {
    let scale = -(depth as i32);
    let mut cells = Vec::new();
    for j in 0..depth {
        let value = 2f64.powf(j as f64 / p);
        let approx = (value * (1u64 << 20) as f64).round() as i64;
        let v = ExactScalar::from_rational(BigRational::new(
            approx.into(),
            (1i64 << 20).into(),
        ));
        // block [2^{-j-1}, 2^{-j}) at cell scale 2^{-depth}
        let lo = 1u64 << (depth - j - 1);
        let hi = 1u64 << (depth - j);
        for pos in lo..hi {
            cells.push((pos, v.clone()));
        }
    }
    // the leftover cell [0, 2^{-depth}) gets the deepest value
    let value = 2f64.powf((depth - 1) as f64 / p);
    let approx = (value * (1u64 << 20) as f64).round() as i64;
    cells.push((
        0,
        ExactScalar::from_rational(BigRational::new(approx.into(), (1i64 << 20).into())),
    ));
    StepFunction::from_cells(scale, cells)
}

/// A random ±1 sign pattern on the cells of [0,1) at the given depth.
pub fn sign_packet(rng: &mut impl Rng, depth: u32) -> StepFunction {
    let cells = (0..(1u64 << depth)).map(|pos| {
        let v = if rng.gen_bool(0.5) { 1 } else { -1 };
        (pos, ExactScalar::from_int(v))
    });
    StepFunction::from_cells(-(depth as i32), cells)
}
