//! Trees of quartiles, the disjointified tile family of a convex j-tree,
//! and phase-space projections.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicInterval, StepFunction};
use crate::error::{Error, Result};
use crate::plane::{fefferman_le, is_convex, Quartile, Tile};
use crate::scalar::ExactScalar;
use crate::walsh::{packet_coeff, wave_packet};

/// A tree: a set of quartiles all below a top quartile in the Fefferman
/// order. The top is carried explicitly and may or may not be a member.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Tree {
    top: Quartile,
    members: BTreeSet<Quartile>,
}

/// Classification of a tree by the frequency grandchild its members sit in.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum JTreeTag {
    /// No member besides the top: vacuously a j-tree for every j.
    All,
    /// All non-top members sit in the j-th frequency grandchild.
    Single(u8),
    Mixed,
}

impl Tree {
    pub fn new(top: Quartile, members: impl IntoIterator<Item = Quartile>) -> Result<Self> {
        let members: BTreeSet<Quartile> = members.into_iter().collect();
        for m in &members {
            if !fefferman_le(m, &top) {
                return Err(Error::NotBelowTop);
            }
        }
        Ok(Tree { top, members })
    }

    pub fn singleton(q: Quartile) -> Self {
        Tree { top: q, members: [q].into_iter().collect() }
    }

    pub fn top(&self) -> &Quartile {
        &self.top
    }

    pub fn top_interval(&self) -> DyadicInterval {
        self.top.space
    }

    pub fn members(&self) -> &BTreeSet<Quartile> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_convex(&self) -> bool {
        is_convex(&self.members)
    }

    /// The frequency grandchild of s whose interval contains ω_T; `None`
    /// for the top itself (its grandchildren are strictly inside ω_T).
    pub fn branch_of(&self, s: &Quartile) -> Option<u8> {
        if s.freq.scale <= self.top.freq.scale {
            // |ω_s| ≤ |ω_T|: only possible for s = top
            return None;
        }
        let gc = self.top.freq.ancestor_at(s.freq.scale - 2)?;
        Some((gc.pos - 4 * s.freq.pos) as u8 + 1)
    }

    pub fn classify(&self) -> JTreeTag {
        let mut tag: Option<u8> = None;
        for s in &self.members {
            let Some(j) = self.branch_of(s) else { continue };
            match tag {
                None => tag = Some(j),
                Some(t) if t == j => {}
                Some(_) => return JTreeTag::Mixed,
            }
        }
        match tag {
            None => JTreeTag::All,
            Some(j) => JTreeTag::Single(j),
        }
    }

    pub fn is_j_tree(&self, j: u8) -> bool {
        matches!(self.classify(), JTreeTag::All) || self.classify() == JTreeTag::Single(j)
    }

    /// The sub-tree T_j = {s ∈ T : ω_{s_j} ⊇ ω_T}, with the same top. The
    /// top itself never qualifies, so the four sub-trees together with the
    /// top partition the tree.
    pub fn subtree(&self, j: u8) -> Tree {
        let members = self
            .members
            .iter()
            .filter(|s| self.branch_of(s) == Some(j))
            .copied()
            .collect();
        Tree { top: self.top, members }
    }

    fn sorted_members(&self) -> Vec<Quartile> {
        let mut v: Vec<Quartile> = self.members.iter().copied().collect();
        v.sort_unstable_by_key(|q| (q.space.scale, q.space.pos, q.freq.pos));
        v
    }

    fn require_convex_j_tree(&self, j: u8) -> Result<()> {
        if !self.is_convex() {
            return Err(Error::NotConvex);
        }
        if !self.is_j_tree(j) {
            return Err(Error::NotJTree(j));
        }
        Ok(())
    }

    /// The disjointified tile family T′ ⊆ T★★ of a convex j-tree: pairwise
    /// disjoint tiles with sh(T′) = sh(T), built by peeling Fefferman-minimal
    /// quartiles. Two tiles of T′ with intersecting spatial intervals are
    /// frequency grandchildren of a single quartile of T.
    ///
    /// Ties among minimal quartiles break by (smaller |I|, smaller spatial
    /// position, smaller frequency position), so the output is deterministic.
    pub fn disjointify(&self, j: u8) -> Result<BTreeSet<Tile>> {
        self.require_convex_j_tree(j)?;
        let sorted = self.sorted_members();
        let mut tiles: BTreeSet<Tile> = BTreeSet::new();
        // rebuild in reverse removal order: the last element is the base case
        for (i, s) in sorted.iter().enumerate().rev() {
            if tiles.is_empty() {
                tiles.extend(s.freq_grandchildren());
                continue;
            }
            // the unique interval among current tiles strictly containing I_s
            let mut containing: Option<DyadicInterval> = None;
            for t in &tiles {
                if t.space.strictly_contains(&s.space) {
                    match containing {
                        None => containing = Some(t.space),
                        Some(i0) if i0 == t.space => {}
                        Some(i0) => {
                            return Err(Error::SizeBound(format!(
                                "disjointify: two containing intervals {i0:?} and {:?}",
                                t.space
                            )))
                        }
                    }
                }
            }
            match containing {
                None => {
                    // spatially unmatched: its frequency grandchildren join
                    // the family directly (duplicates are absorbed)
                    tiles.extend(s.freq_grandchildren());
                }
                Some(interval) => {
                    let sigma = sorted[i + 1..]
                        .iter()
                        .find(|q| q.space == interval)
                        .ok_or_else(|| {
                            Error::SizeBound(
                                "disjointify: containing interval has no quartile".into(),
                            )
                        })?;
                    if sigma.space.scale != s.space.scale + 2 {
                        return Err(Error::SizeBound(
                            "disjointify: containing quartile is not one class up".into(),
                        ));
                    }
                    for t in sigma.freq_grandchildren() {
                        tiles.remove(&t);
                    }
                    tiles.extend(sigma.spatial_grandchildren());
                    tiles.extend(s.freq_grandchildren());
                }
            }
        }
        Ok(tiles)
    }

    /// The phase-space projection Π_T f = Σ_{s ∈ T′} ⟨f, w_s⟩ w_s of a
    /// convex j-tree, exact.
    pub fn project(&self, j: u8, f: &StepFunction) -> Result<StepFunction> {
        let tiles = self.disjointify(j)?;
        let mut out = StepFunction::zero(f.cell_scale());
        for t in &tiles {
            let c = packet_coeff(f, t);
            if !c.is_zero() {
                out = out.add(&wave_packet(t).scale_by(&c));
            }
        }
        Ok(out)
    }
}

/// The four frequency-grandchild coefficients ⟨f, w_{s_j}⟩ of a quartile.
pub fn quartile_coeffs(s: &Quartile, f: &StepFunction) -> [ExactScalar; 4] {
    s.freq_grandchildren().map(|t| packet_coeff(f, &t))
}

/// Π_s f = Σ_j ⟨f, w_{s_j}⟩ w_{s_j}: the orthogonal projection onto the
/// span of the four frequency-grandchild wave packets.
pub fn project_quartile(s: &Quartile, f: &StepFunction) -> StepFunction {
    let mut out = StepFunction::zero(f.cell_scale());
    for t in s.freq_grandchildren() {
        let c = packet_coeff(f, &t);
        if !c.is_zero() {
            out = out.add(&wave_packet(&t).scale_by(&c));
        }
    }
    out
}

/// ‖Π_s f‖₂² = Σ_j ⟨f, w_{s_j}⟩², exact; the packets are orthonormal.
pub fn quartile_projection_norm_sq(s: &Quartile, f: &StepFunction) -> ExactScalar {
    let mut acc = ExactScalar::zero();
    for c in quartile_coeffs(s, f) {
        acc += c.square();
    }
    acc
}

// ---- Serialization ----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    top: Quartile,
    members: Vec<Quartile>,
}

impl Serialize for Tree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TreeRepr { top: self.top, members: self.members.iter().copied().collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let r = TreeRepr::deserialize(d)?;
        Tree::new(r.top, r.members).map_err(|e| DeError::custom(format!("{e}")))
    }
}
