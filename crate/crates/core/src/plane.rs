//! Tiles, quartiles, the Fefferman order, convexity, and shadows.
//!
//! A tile is a dyadic rectangle of area 1 in the time-frequency plane; a
//! quartile has |ω| = 4/|I|. The scale-separated class Qt₁ is fixed as the
//! quartiles with even spatial scale exponent, which gives the ratio-4
//! property between distinct spatial scales.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicInterval, DyadicUnion};
use crate::error::{Error, Result};

/// A dyadic rectangle I × ω with |I|·|ω| = 1.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Tile {
    pub space: DyadicInterval,
    pub freq: DyadicInterval,
}

impl Tile {
    pub fn new(space: DyadicInterval, freq: DyadicInterval) -> Result<Self> {
        if space.scale + freq.scale != 0 {
            return Err(Error::BadRectangle { expected: 1 });
        }
        Ok(Tile { space, freq })
    }

    pub fn intersects(&self, other: &Tile) -> bool {
        self.space.intersects(&other.space) && self.freq.intersects(&other.freq)
    }

    pub fn is_disjoint(&self, other: &Tile) -> bool {
        !self.intersects(other)
    }
}

/// A dyadic rectangle I × ω with |ω| = 4·|I|^{-1}.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quartile {
    pub space: DyadicInterval,
    pub freq: DyadicInterval,
}

impl fmt::Debug for Quartile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Qt({}*2^{} x {}*2^{})",
            self.space.pos, self.space.scale, self.freq.pos, self.freq.scale
        )
    }
}

/// The kind of grandchild subdivision of a quartile.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GrandchildKind {
    Frequency,
    Spatial,
}

impl Quartile {
    pub fn new(space: DyadicInterval, freq: DyadicInterval) -> Result<Self> {
        if space.scale + freq.scale != 2 {
            return Err(Error::BadRectangle { expected: 4 });
        }
        Ok(Quartile { space, freq })
    }

    pub fn intersects(&self, other: &Quartile) -> bool {
        self.space.intersects(&other.space) && self.freq.intersects(&other.freq)
    }

    pub fn is_disjoint(&self, other: &Quartile) -> bool {
        !self.intersects(other)
    }

    /// The frequency grandchildren s₁..s₄: I_s × (grandchildren of ω_s), in
    /// increasing frequency order. Each is a tile.
    pub fn freq_grandchildren(&self) -> [Tile; 4] {
        self.freq
            .grandchildren()
            .map(|w| Tile::new(self.space, w).expect("area invariant"))
    }

    /// The spatial grandchildren s¹..s⁴: (grandchildren of I_s) × ω_s, in
    /// increasing spatial order. Each is a tile.
    pub fn spatial_grandchildren(&self) -> [Tile; 4] {
        self.space
            .grandchildren()
            .map(|i| Tile::new(i, self.freq).expect("area invariant"))
    }

    pub fn grandchildren(&self, kind: GrandchildKind) -> [Tile; 4] {
        match kind {
            GrandchildKind::Frequency => self.freq_grandchildren(),
            GrandchildKind::Spatial => self.spatial_grandchildren(),
        }
    }

    /// The j-th frequency grandchild, 1-based as in s_j.
    pub fn freq_grandchild(&self, j: u8) -> Tile {
        debug_assert!((1..=4).contains(&j));
        self.freq_grandchildren()[(j - 1) as usize]
    }

    /// All eight grandchild tiles S★★ of this quartile.
    pub fn all_grandchildren(&self) -> Vec<Tile> {
        let mut v = self.freq_grandchildren().to_vec();
        v.extend_from_slice(&self.spatial_grandchildren());
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// The Fefferman order: s ≪ t iff I_s ⊆ I_t and ω_s ⊇ ω_t.
pub fn fefferman_le(s: &Quartile, t: &Quartile) -> bool {
    t.space.contains(&s.space) && s.freq.contains(&t.freq)
}

/// Membership in the scale-separated class Qt₁ (even spatial scales).
pub fn in_qt1(s: &Quartile) -> bool {
    s.space.scale & 1 == 0
}

/// The unique quartile strictly between `s` and `t` at even spatial scale
/// `scale`, when s ≪ t. Both the spatial ancestor of I_s and the frequency
/// ancestor of ω_t at the matching scales are forced.
pub fn intermediate_at(s: &Quartile, t: &Quartile, scale: i32) -> Quartile {
    debug_assert!(fefferman_le(s, t));
    debug_assert!(scale >= s.space.scale && scale <= t.space.scale);
    let space = s.space.ancestor_at(scale).expect("scale checked");
    let freq = t.freq.ancestor_at(2 - scale).expect("scale checked");
    Quartile { space, freq }
}

/// Convexity within Qt₁: for every pair s ≪ s'' of members, all intermediate
/// quartiles must be members. The intermediate at each even scale is unique,
/// so the scan is O(#pairs · scale span).
pub fn is_convex(set: &BTreeSet<Quartile>) -> bool {
    for s in set {
        for t in set {
            if s == t || !fefferman_le(s, t) {
                continue;
            }
            let mut k = s.space.scale + 2;
            while k < t.space.scale {
                if !set.contains(&intermediate_at(s, t, k)) {
                    return false;
                }
                k += 2;
            }
        }
    }
    true
}

/// Closes a set of Qt₁ quartiles under Fefferman intermediates.
pub fn convex_closure(set: &BTreeSet<Quartile>) -> BTreeSet<Quartile> {
    let mut out = set.clone();
    for s in set {
        for t in set {
            if s == t || !fefferman_le(s, t) {
                continue;
            }
            let mut k = s.space.scale + 2;
            while k < t.space.scale {
                out.insert(intermediate_at(s, t, k));
                k += 2;
            }
        }
    }
    out
}

// ---- Shadows ----------------------------------------------------------------

/// A region of the phase plane given as a finite union of dyadic rectangles,
/// canonicalized as the set of maximal dyadic rectangles contained in it.
/// Equality of regions is equality of the canonical lists.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Region {
    rects: Vec<(DyadicInterval, DyadicInterval)>,
    area: BigRational,
}

/// Internal: spatial strips on which the frequency section is constant,
/// with integer ranges at a common base scale for fast coverage queries.
struct Strips {
    base: i32,
    /// (lo, hi, section) with [lo, hi) scaled to the base; sorted, disjoint.
    strips: Vec<(u128, u128, DyadicUnion)>,
}

impl Strips {
    fn build(rects: &[(DyadicInterval, DyadicInterval)]) -> Strips {
        let base = rects.iter().map(|(i, _)| i.scale).min().unwrap();
        let mut cuts: Vec<u128> = Vec::new();
        for (i, _) in rects {
            let f = (i.scale - base) as u32;
            assert!(f < 64, "spatial scale span too large for shadow");
            cuts.push((i.pos as u128) << f);
            cuts.push(((i.pos as u128) + 1) << f);
        }
        cuts.sort_unstable();
        cuts.dedup();
        let mut strips = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let active: Vec<DyadicInterval> = rects
                .iter()
                .filter(|(i, _)| {
                    let f = (i.scale - base) as u32;
                    let a = (i.pos as u128) << f;
                    a <= lo && hi <= a + (1u128 << f)
                })
                .map(|(_, w)| *w)
                .collect();
            if active.is_empty() {
                continue;
            }
            strips.push((lo, hi, DyadicUnion::from_intervals(&active)));
        }
        Strips { base, strips }
    }

    fn scaled(&self, i: &DyadicInterval) -> (u128, u128) {
        let f = (i.scale - self.base) as u32;
        let lo = (i.pos as u128) << f;
        (lo, lo + (1u128 << f))
    }

    /// The dyadic tiles of the strip pieces, at their maximal scales.
    fn dyadic_atoms(&self) -> Vec<DyadicInterval> {
        let mut out = Vec::new();
        for (lo, hi, _) in &self.strips {
            let mut a = *lo;
            while a < *hi {
                let align = if a == 0 { 127 } else { a.trailing_zeros() };
                let fit = 127 - (hi - a).leading_zeros();
                let g = align.min(fit);
                out.push(DyadicInterval::new(self.base + g as i32, (a >> g) as u64));
                a += 1u128 << g;
            }
        }
        out
    }

    /// True iff I is covered by the strip ranges.
    fn covers(&self, i: &DyadicInterval) -> bool {
        if i.scale < self.base {
            return false;
        }
        let (lo, hi) = self.scaled(i);
        let mut at = lo;
        for (slo, shi, _) in &self.strips {
            if *shi <= at {
                continue;
            }
            if *slo > at {
                return false;
            }
            at = *shi;
            if at >= hi {
                return true;
            }
        }
        false
    }

    /// Intersection of the sections of all strips meeting I (assumes
    /// covered, so every meeting strip is inside I or contains it).
    fn common_section(&self, i: &DyadicInterval) -> DyadicUnion {
        let (lo, hi) = self.scaled(i);
        let mut acc: Option<DyadicUnion> = None;
        for (slo, shi, sec) in &self.strips {
            if *shi <= lo || *slo >= hi {
                continue;
            }
            acc = Some(match acc {
                None => sec.clone(),
                Some(a) => a.intersect(sec),
            });
        }
        acc.unwrap_or_default()
    }

    fn area(&self) -> BigRational {
        let cell = crate::scalar::ExactScalar::two_pow(self.base);
        self.strips
            .iter()
            .map(|(lo, hi, sec)| {
                BigRational::from_integer(num_bigint::BigInt::from(hi - lo))
                    * &cell
                    * sec.measure()
            })
            .sum()
    }
}

impl Region {
    pub fn from_rects(rects: &[(DyadicInterval, DyadicInterval)]) -> Region {
        if rects.is_empty() {
            return Region::default();
        }
        let strips = Strips::build(rects);
        let area = strips.area();

        // candidate spatial sides: ancestors of strip atoms that stay covered
        let mut candidates: BTreeSet<DyadicInterval> = BTreeSet::new();
        for s in strips.dyadic_atoms() {
            let mut a = s;
            loop {
                if !strips.covers(&a) {
                    break;
                }
                if !candidates.insert(a) {
                    break;
                }
                a = a.parent();
            }
        }

        let mut out: BTreeSet<(DyadicInterval, DyadicInterval)> = BTreeSet::new();
        for a in &candidates {
            let common = strips.common_section(a);
            if common.is_empty() {
                continue;
            }
            let parent = a.parent();
            let parent_common = if strips.covers(&parent) {
                Some(strips.common_section(&parent))
            } else {
                None
            };
            for w in common.parts() {
                // spatially maximal unless the parent extension also works
                if let Some(pc) = &parent_common {
                    if pc.covers(w) {
                        continue;
                    }
                }
                out.insert((*a, *w));
            }
        }
        Region { rects: out.into_iter().collect(), area }
    }

    pub fn from_quartiles<'a>(qs: impl IntoIterator<Item = &'a Quartile>) -> Region {
        let rects: Vec<_> = qs.into_iter().map(|q| (q.space, q.freq)).collect();
        Region::from_rects(&rects)
    }

    pub fn from_tiles<'a>(ts: impl IntoIterator<Item = &'a Tile>) -> Region {
        let rects: Vec<_> = ts.into_iter().map(|t| (t.space, t.freq)).collect();
        Region::from_rects(&rects)
    }

    pub fn area(&self) -> &BigRational {
        &self.area
    }

    /// The canonical maximal rectangles.
    pub fn maximal_rects(&self) -> &[(DyadicInterval, DyadicInterval)] {
        &self.rects
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }
}

/// The shadow of a set of quartiles.
pub fn shadow<'a>(qs: impl IntoIterator<Item = &'a Quartile>) -> Region {
    Region::from_quartiles(qs)
}

/// The shadow of a set of tiles.
pub fn shadow_tiles<'a>(ts: impl IntoIterator<Item = &'a Tile>) -> Region {
    Region::from_tiles(ts)
}

// ---- Serialization ----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct QuartileRepr {
    space: (i32, u64),
    freq: (i32, u64),
}

impl Serialize for Quartile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QuartileRepr {
            space: (self.space.scale, self.space.pos),
            freq: (self.freq.scale, self.freq.pos),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Quartile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let r = QuartileRepr::deserialize(d)?;
        Quartile::new(
            DyadicInterval::new(r.space.0, r.space.1),
            DyadicInterval::new(r.freq.0, r.freq.1),
        )
        .map_err(|e| DeError::custom(format!("{e}")))
    }
}
