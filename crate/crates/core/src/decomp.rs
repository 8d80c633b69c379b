//! Sizes, the recursive size lemma, forests with constructed tops, and the
//! forest estimate pipeline.
//!
//! `tops` is always the value of a constructed partition, which is an upper
//! bound for the infimum over all partitions; every inequality downstream is
//! stated against constructed witnesses, which is what the proofs use.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::dyadic::StepFunction;
use crate::error::{Error, Result};
use crate::model::{trilinear, trilinear_tree};
use crate::plane::{fefferman_le, is_convex, Quartile};
use crate::scalar::ExactScalar;
use crate::tree::{quartile_projection_norm_sq, Tree};

/// The size of a set of quartiles relative to f, with exact squared value
/// and the maximizing quartile.
#[derive(Clone, Debug)]
pub struct SizeReport {
    /// max_s ‖Π_s f‖₂² / |I_s|, exact.
    pub size_sq: ExactScalar,
    pub size: f64,
    pub argmax: Option<Quartile>,
}

/// size_f(S) = sup_{s∈S} ‖Π_s f‖₂ / |I_s|^{1/2}.
pub fn size<'a>(set: impl IntoIterator<Item = &'a Quartile>, f: &StepFunction) -> SizeReport {
    let mut best = ExactScalar::zero();
    let mut argmax = None;
    for s in set {
        let val =
            quartile_projection_norm_sq(s, f).scale(&ExactScalar::two_pow(-s.space.scale));
        if val > best {
            best = val;
            argmax = Some(*s);
        }
    }
    SizeReport { size: best.to_f64().max(0.0).sqrt(), size_sq: best, argmax }
}

/// A partition of a quartile set into convex trees with assigned tops. The
/// recorded tops value belongs to this partition.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    pub fn new(trees: Vec<Tree>) -> Self {
        Forest { trees }
    }

    /// Every quartile as its own singleton tree.
    pub fn of_singletons<'a>(set: impl IntoIterator<Item = &'a Quartile>) -> Self {
        Forest { trees: set.into_iter().map(|q| Tree::singleton(*q)).collect() }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn members(&self) -> BTreeSet<Quartile> {
        self.trees.iter().flat_map(|t| t.members().iter().copied()).collect()
    }

    /// Σ |I_T| over the nonempty trees of this partition.
    pub fn tops_value(&self) -> BigRational {
        self.trees
            .iter()
            .filter(|t| !t.is_empty())
            .map(|t| t.top_interval().length())
            .sum()
    }

    /// Trees must be pairwise disjoint as quartile sets.
    pub fn is_partition(&self) -> bool {
        let mut seen = BTreeSet::new();
        for t in &self.trees {
            for q in t.members() {
                if !seen.insert(*q) {
                    return false;
                }
            }
        }
        true
    }

    /// Restrict every tree to a subset, keeping its top; empty trees are
    /// dropped, so the tops value never increases.
    pub fn restrict_to(&self, subset: &BTreeSet<Quartile>) -> Forest {
        let trees = self
            .trees
            .iter()
            .filter_map(|t| {
                let members: BTreeSet<Quartile> =
                    t.members().intersection(subset).copied().collect();
                if members.is_empty() {
                    None
                } else {
                    Some(Tree::new(*t.top(), members).expect("subset of a tree is a tree"))
                }
            })
            .collect();
        Forest { trees }
    }
}

/// Whether a split call re-validates convexity of its input. Sets produced
/// by the iteration itself (or convex by construction) can skip the
/// quadratic check.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ConvexityCheck {
    Validate,
    Trusted,
}

/// Output of the size lemma: the skimmed forest and the low-size remainder.
#[derive(Clone, Debug)]
pub struct SizeSplit {
    pub hi: Forest,
    pub lo: BTreeSet<Quartile>,
}

fn projection_cache<'a>(
    set: impl IntoIterator<Item = &'a Quartile>,
    f: &StepFunction,
) -> BTreeMap<Quartile, ExactScalar> {
    set.into_iter().map(|s| (*s, quartile_projection_norm_sq(s, f))).collect()
}

fn size_sq_from_cache(
    set: &BTreeSet<Quartile>,
    proj_sq: &BTreeMap<Quartile, ExactScalar>,
) -> ExactScalar {
    let mut best = ExactScalar::zero();
    for s in set {
        let v = proj_sq[s].scale(&ExactScalar::two_pow(-s.space.scale));
        if v > best {
            best = v;
        }
    }
    best
}

fn split_with_cache(
    stock: &mut BTreeSet<Quartile>,
    proj_sq: &BTreeMap<Quartile, ExactScalar>,
    sigma_sq: &BigRational,
) -> Forest {
    let quarter = sigma_sq / BigRational::from_integer(4.into());
    let mut trees = Vec::new();
    loop {
        // quartiles with ‖Π_t f‖₂² > (σ/2)²·|I_t|, compared exactly
        let mut satisfiers: Vec<Quartile> = stock
            .iter()
            .filter(|t| {
                let threshold =
                    ExactScalar::from_rational(&quarter * ExactScalar::two_pow(t.space.scale));
                proj_sq[t] > threshold
            })
            .copied()
            .collect();
        if satisfiers.is_empty() {
            break;
        }
        satisfiers.sort_unstable_by_key(|q| (q.space.scale, q.space.pos, q.freq.pos));
        // a Fefferman-maximal satisfier; ties break by the canonical order
        let top = *satisfiers
            .iter()
            .find(|t| !satisfiers.iter().any(|u| *t != u && fefferman_le(t, u)))
            .expect("a finite nonempty poset has a maximal element");
        let members: BTreeSet<Quartile> =
            stock.iter().filter(|s| fefferman_le(s, &top)).copied().collect();
        for m in &members {
            stock.remove(m);
        }
        trees.push(Tree::new(top, members).expect("members are below the selected top"));
    }
    Forest::new(trees)
}

/// The size lemma: splits a convex S with size_f(S)² ≤ σ² into a forest of
/// convex trees selected at threshold ‖Π_t f‖₂ > (σ/2)|I_t|^{1/2} and a
/// remainder of size ≤ σ/2. The constructed tops value satisfies
/// tops ≤ 4·σ^{-2}·‖f‖₂².
pub fn size_split(
    set: &BTreeSet<Quartile>,
    f: &StepFunction,
    sigma_sq: &BigRational,
    check: ConvexityCheck,
) -> Result<SizeSplit> {
    if check == ConvexityCheck::Validate && !is_convex(set) {
        return Err(Error::NotConvex);
    }
    let proj_sq = projection_cache(set, f);
    let current = size_sq_from_cache(set, &proj_sq);
    if current > ExactScalar::from_rational(sigma_sq.clone()) {
        return Err(Error::SizeBound(format!(
            "size² = {} exceeds σ² = {}",
            current.to_f64(),
            sigma_sq
        )));
    }
    let mut stock = set.clone();
    let hi = split_with_cache(&mut stock, &proj_sq, sigma_sq);
    Ok(SizeSplit { hi, lo: stock })
}

/// One level of an iterated size decomposition: the forest selected at
/// squared threshold `threshold_sq`.
#[derive(Clone, Debug)]
pub struct SizeLevel {
    pub level: i64,
    pub threshold_sq: BigRational,
    pub forest: Forest,
}

/// Iterated size lemma relative to one function: levels of geometrically
/// decreasing size plus a residual on which Π_s f vanishes identically.
#[derive(Clone, Debug)]
pub struct SizeIteration {
    pub levels: Vec<SizeLevel>,
    pub residual: BTreeSet<Quartile>,
}

impl SizeIteration {
    /// The cells (levels and residual) partition the input set.
    pub fn cells(&self) -> impl Iterator<Item = (Option<i64>, BTreeSet<Quartile>)> + '_ {
        self.levels
            .iter()
            .map(|l| (Some(l.level), l.forest.members()))
            .chain(std::iter::once((None, self.residual.clone())))
            .filter(|(_, m)| !m.is_empty())
    }
}

/// Iterates the size lemma against f with thresholds 4^{-n}·cap², assigning
/// each selection to the deepest level whose threshold still dominates the
/// current stock. Terminates when the stock is empty or carries no mass.
pub fn iterate_size(
    set: &BTreeSet<Quartile>,
    f: &StepFunction,
    cap_sq: &BigRational,
    check: ConvexityCheck,
) -> Result<SizeIteration> {
    if check == ConvexityCheck::Validate && !is_convex(set) {
        return Err(Error::NotConvex);
    }
    let proj_sq = projection_cache(set, f);
    let four = BigRational::from_integer(4.into());
    let mut stock = set.clone();
    let mut levels = Vec::new();
    let cap = ExactScalar::from_rational(cap_sq.clone());
    loop {
        if stock.is_empty() {
            break;
        }
        let sz = size_sq_from_cache(&stock, &proj_sq);
        if sz.is_zero() {
            break;
        }
        if sz > cap {
            return Err(Error::SizeBound(format!(
                "size² = {} exceeds the cap {}",
                sz.to_f64(),
                cap_sq
            )));
        }
        // deepest n with 4^{-n}·cap² ≥ size²
        let mut n: i64 = 0;
        let mut threshold = cap_sq.clone();
        while ExactScalar::from_rational(&threshold / &four) >= sz {
            threshold /= &four;
            n += 1;
        }
        let forest = split_with_cache(&mut stock, &proj_sq, &threshold);
        debug_assert!(!forest.is_empty(), "a tight threshold always selects the maximizer");
        levels.push(SizeLevel { level: n, threshold_sq: threshold, forest });
    }
    Ok(SizeIteration { levels, residual: stock })
}

/// One cell S_{n₂,n₃} of the double size decomposition, with its forest
/// witness and the exact bounds it was checked against.
#[derive(Clone, Debug)]
pub struct DecompCell {
    /// Level in the f₂ iteration; `None` marks the zero-mass residual.
    pub n2: Option<i64>,
    pub n3: Option<i64>,
    pub members: BTreeSet<Quartile>,
    pub forest: Forest,
    pub tops: BigRational,
    /// tops bound inherited from the chosen witness: 4·threshold^{-1}·‖f‖₂²;
    /// `None` for residual×residual cells, where both sizes vanish.
    pub tops_bound: Option<ExactScalar>,
    pub size2_bound_sq: Option<BigRational>,
    pub size3_bound_sq: Option<BigRational>,
}

/// Iterates the size lemma in f₂ and in f₃ and intersects the two
/// decompositions. Each nonempty intersection is convex and inherits a
/// forest witness from whichever side gives the smaller tops value.
pub fn full_size_decomposition(
    set: &BTreeSet<Quartile>,
    f2: &StepFunction,
    f3: &StepFunction,
    caps_sq: (&BigRational, &BigRational),
    check: ConvexityCheck,
) -> Result<Vec<DecompCell>> {
    let it2 = iterate_size(set, f2, caps_sq.0, check)?;
    let it3 = iterate_size(set, f3, caps_sq.1, ConvexityCheck::Trusted)?;
    let four = BigRational::from_integer(4.into());
    let norm2_sq = f2.l2_norm_sq();
    let norm3_sq = f3.l2_norm_sq();
    let mut cells = Vec::new();
    for (n2, m2) in it2.cells() {
        let w2 = n2.map(|lv| {
            let lvl = it2.levels.iter().find(|l| l.level == lv).unwrap();
            (lvl.forest.clone(), lvl.threshold_sq.clone())
        });
        for (n3, m3) in it3.cells() {
            let members: BTreeSet<Quartile> = m2.intersection(&m3).copied().collect();
            if members.is_empty() {
                continue;
            }
            let w3 = n3.map(|lv| {
                let lvl = it3.levels.iter().find(|l| l.level == lv).unwrap();
                (lvl.forest.clone(), lvl.threshold_sq.clone())
            });
            // candidate witnesses restricted to the cell
            let c2 = w2.as_ref().map(|(fo, th)| {
                let r = fo.restrict_to(&members);
                let tops = r.tops_value();
                (r, tops, norm2_sq.scale(&(&four / th)))
            });
            let c3 = w3.as_ref().map(|(fo, th)| {
                let r = fo.restrict_to(&members);
                let tops = r.tops_value();
                (r, tops, norm3_sq.scale(&(&four / th)))
            });
            let (forest, tops, tops_bound) = match (c2, c3) {
                (Some(a), Some(b)) => {
                    if a.1 <= b.1 {
                        (a.0, a.1, Some(a.2))
                    } else {
                        (b.0, b.1, Some(b.2))
                    }
                }
                (Some(a), None) => (a.0, a.1, Some(a.2)),
                (None, Some(b)) => (b.0, b.1, Some(b.2)),
                (None, None) => {
                    let fo = Forest::of_singletons(&members);
                    let tops = fo.tops_value();
                    (fo, tops, None)
                }
            };
            cells.push(DecompCell {
                n2,
                n3,
                members,
                forest,
                tops,
                tops_bound,
                size2_bound_sq: w2.as_ref().map(|(_, t)| t.clone()),
                size3_bound_sq: w3.as_ref().map(|(_, t)| t.clone()),
            });
        }
    }
    Ok(cells)
}

impl DecompCell {
    /// The audit record emitted with decomposition reports: cell indices,
    /// tops, and the exact bounds the cell was checked against.
    pub fn audit_record(&self) -> serde_json::Value {
        serde_json::json!({
            "n2": self.n2,
            "n3": self.n3,
            "quartiles": self.members.len(),
            "tops": self.tops.to_string(),
            "tops_bound": self.tops_bound.as_ref().map(|b| b.to_f64()),
            "size2_bound_sq": self.size2_bound_sq.as_ref().map(|b| b.to_string()),
            "size3_bound_sq": self.size3_bound_sq.as_ref().map(|b| b.to_string()),
        })
    }
}

/// Which of f₂, f₃ plays the "tops" role in the forest estimate; the other
/// one's size multiplies the final bound.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Orientation {
    /// hypothesis tops ≤ 4σ₂^{-2}‖f₂‖₂², bound σ₃‖f₁‖₂‖f₂‖₂
    TopsFromF2,
    /// the permuted statement: tops ≤ 4σ₃^{-2}‖f₃‖₂², bound σ₂‖f₁‖₂‖f₃‖₂
    TopsFromF3,
}

#[derive(Clone, Debug, Serialize)]
pub enum ForestBranch {
    /// size_{f₁} small enough for the direct tree-by-tree sum.
    Direct,
    /// the inner size iteration in f₁ ran, with the listed levels.
    Iterated { levels: Vec<i64> },
}

/// Audit record of the forest estimate: the exact value of Λ, the measured
/// bound σ_b·‖f₁‖₂·‖f_a‖₂, and which branch of the proof ran.
#[derive(Clone, Debug)]
pub struct ForestAudit {
    pub value: ExactScalar,
    pub bound: f64,
    pub ratio: f64,
    pub branch: ForestBranch,
    pub tops: BigRational,
}

/// The forest estimate. Hypotheses (checked exactly): the stated sizes
/// dominate the actual sizes, and tops(F) ≤ 4·σ_a^{-2}·‖f_a‖₂² where a is
/// chosen by the orientation — the constant 4 matching the size lemma's
/// witness bound.
pub fn forest_estimate(
    forest: &Forest,
    f1: &StepFunction,
    f2: &StepFunction,
    f3: &StepFunction,
    sigma_sq: [&BigRational; 3],
    orientation: Orientation,
) -> Result<ForestAudit> {
    let members = forest.members();
    if !forest.is_partition() {
        return Err(Error::ForestHypothesis("trees are not disjoint".into()));
    }
    for (j, (f, s)) in
        [(f1, sigma_sq[0]), (f2, sigma_sq[1]), (f3, sigma_sq[2])].into_iter().enumerate()
    {
        let actual = size(&members, f).size_sq;
        if actual > ExactScalar::from_rational(s.clone()) {
            return Err(Error::ForestHypothesis(format!(
                "size_f{}² = {} exceeds stated σ² = {}",
                j + 1,
                actual.to_f64(),
                s
            )));
        }
    }
    let (fa, sigma_a_sq, sigma_b_sq) = match orientation {
        Orientation::TopsFromF2 => (f2, sigma_sq[1], sigma_sq[2]),
        Orientation::TopsFromF3 => (f3, sigma_sq[2], sigma_sq[1]),
    };
    let norm_a_sq = fa.l2_norm_sq();
    let tops = forest.tops_value();
    let four = BigRational::from_integer(4.into());
    // tops·σ_a² ≤ 4·‖f_a‖₂², exactly
    if ExactScalar::from_rational(&tops * sigma_a_sq) > norm_a_sq.scale(&four) {
        return Err(Error::ForestHypothesis(format!("tops = {tops} exceeds 4σ^-2‖f‖₂²")));
    }
    let value = trilinear(&members, f1, f2, f3);
    let norm1_sq = f1.l2_norm_sq();

    // branch: direct iff σ₁·‖f_a‖₂ ≤ σ_a·‖f₁‖₂, compared via squares
    let direct = norm_a_sq.scale(sigma_sq[0]) <= norm1_sq.scale(sigma_a_sq);
    let branch = if direct {
        // exercise the tree-by-tree certificates so malformed trees surface
        for t in forest.trees() {
            trilinear_tree(t, f1, f2, f3)?;
        }
        ForestBranch::Direct
    } else {
        // inner iteration in f₁ down to the crossover size, absolute levels
        let stop = |stock: &BTreeSet<Quartile>| -> bool {
            let sz = size(stock, f1).size_sq;
            sz * norm_a_sq.clone() <= norm1_sq.scale(sigma_a_sq)
        };
        let mut stock = members.clone();
        let mut levels = Vec::new();
        let two = BigRational::from_integer(2.into());
        while !stock.is_empty() && !stop(&stock) {
            let sz = size(&stock, f1).size_sq;
            // deepest n with 2^{-n} ≥ size², n possibly negative
            let mut n: i64 = 0;
            let mut threshold = BigRational::from_integer(1.into());
            if sz <= ExactScalar::one() {
                while ExactScalar::from_rational(&threshold / &two) >= sz {
                    threshold /= &two;
                    n += 1;
                }
            } else {
                while ExactScalar::from_rational(threshold.clone()) < sz {
                    threshold *= &two;
                    n -= 1;
                }
            }
            let split = size_split(&stock, f1, &threshold, ConvexityCheck::Trusted)?;
            if split.hi.is_empty() {
                break;
            }
            levels.push(n);
            stock = split.lo;
        }
        // residual: the original forest restricted, tops can only shrink
        let residual_forest = forest.restrict_to(&stock);
        debug_assert!(residual_forest.tops_value() <= tops);
        ForestBranch::Iterated { levels }
    };

    let bound = sigma_b_sq.to_f64().unwrap_or(f64::NAN).sqrt()
        * norm1_sq.to_f64().max(0.0).sqrt()
        * norm_a_sq.to_f64().max(0.0).sqrt();
    let v = value.to_f64().abs();
    let ratio = if v == 0.0 { 0.0 } else { v / bound };
    Ok(ForestAudit { value, bound, ratio, branch, tops })
}
