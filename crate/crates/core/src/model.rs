//! The quartile operator V_S, its trilinear form Λ_S, and the single-tree
//! estimate with its proof-constant certificate.
//!
//! V_S(f₁,f₂) = Σ_{s∈S} |I_s|^{-1/2} ⟨f₁, w_{s₁}⟩ ⟨f₂, w_{s₂}⟩ w_{s₃} and
//! Λ_S(f₁,f₂,f₃) = ⟨V_S(f₁,f₂), f₃⟩. The trilinear form is evaluated as the
//! coefficient triple sum without materializing V_S; both paths are exact
//! and agree exactly.

use rayon::prelude::*;

use crate::decomp::size;
use crate::dyadic::{DyadicInterval, StepFunction};
use crate::error::Result;
use crate::plane::Quartile;
use crate::scalar::ExactScalar;
use crate::tree::Tree;
use crate::walsh::{packet_coeff, wave_packet};

/// One output term of the quartile sum: the coefficient
/// |I_s|^{-1/2}·⟨f₁,w_{s₁}⟩·⟨f₂,w_{s₂}⟩ attached to w_{s₃}.
fn output_coefficient(s: &Quartile, f1: &StepFunction, f2: &StepFunction) -> ExactScalar {
    let c1 = packet_coeff(f1, &s.freq_grandchild(1));
    if c1.is_zero() {
        return ExactScalar::zero();
    }
    let c2 = packet_coeff(f2, &s.freq_grandchild(2));
    if c2.is_zero() {
        return ExactScalar::zero();
    }
    let norm = ExactScalar::two_pow_half(-(s.space.scale as i64));
    norm * c1 * c2
}

fn sorted_quartiles<'a>(set: impl IntoIterator<Item = &'a Quartile>) -> Vec<Quartile> {
    let mut v: Vec<Quartile> = set.into_iter().copied().collect();
    v.sort_unstable();
    v
}

/// V_S(f₁,f₂) materialized as a step function. Terms are computed in
/// parallel and reduced left-to-right over the canonical quartile order, so
/// the result is bit-identical across runs.
pub fn apply<'a>(
    set: impl IntoIterator<Item = &'a Quartile>,
    f1: &StepFunction,
    f2: &StepFunction,
) -> StepFunction {
    let quartiles = sorted_quartiles(set);
    let terms: Vec<StepFunction> = quartiles
        .par_iter()
        .map(|s| {
            let c = output_coefficient(s, f1, f2);
            if c.is_zero() {
                StepFunction::zero(f1.cell_scale())
            } else {
                wave_packet(&s.freq_grandchild(3)).scale_by(&c)
            }
        })
        .collect();
    let mut out = StepFunction::zero(f1.cell_scale().min(f2.cell_scale()));
    for t in terms {
        if !t.is_zero() {
            out = out.add(&t);
        }
    }
    out
}

/// V_S(f₁,f₂) as a list of constant contributions (cell, value). The output
/// step function is their pointwise sum; the contribution list avoids
/// materializing a common fine grid when tiles span many scales.
pub fn apply_contributions<'a>(
    set: impl IntoIterator<Item = &'a Quartile>,
    f1: &StepFunction,
    f2: &StepFunction,
) -> Vec<(DyadicInterval, ExactScalar)> {
    let quartiles = sorted_quartiles(set);
    let per: Vec<Vec<(DyadicInterval, ExactScalar)>> = quartiles
        .par_iter()
        .map(|s| {
            let c = output_coefficient(s, f1, f2);
            if c.is_zero() {
                return Vec::new();
            }
            let w = wave_packet(&s.freq_grandchild(3));
            let scale = w.cell_scale();
            w.cells()
                .map(|(pos, v)| (DyadicInterval::new(scale, *pos), &c * v))
                .collect()
        })
        .collect();
    per.into_iter().flatten().collect()
}

/// Λ_S(f₁,f₂,f₃) = Σ_s |I_s|^{-1/2} Π_j ⟨f_j, w_{s_j}⟩, exact. Additive over
/// disjoint unions of S by construction.
pub fn trilinear<'a>(
    set: impl IntoIterator<Item = &'a Quartile>,
    f1: &StepFunction,
    f2: &StepFunction,
    f3: &StepFunction,
) -> ExactScalar {
    let quartiles = sorted_quartiles(set);
    let terms: Vec<ExactScalar> = quartiles
        .par_iter()
        .map(|s| {
            let c = output_coefficient(s, f1, f2);
            if c.is_zero() {
                return ExactScalar::zero();
            }
            c * packet_coeff(f3, &s.freq_grandchild(3))
        })
        .collect();
    let mut acc = ExactScalar::zero();
    for t in terms {
        acc += t;
    }
    acc
}

/// The audit certificate of the single-tree estimate: the exact value of
/// Λ_T together with |I_T| and the three sizes. The estimate bounds |Λ_T|
/// by C·|I_T|·Π sizes; the constant 65 comes from 16 per frequency-branch
/// chain (one supremum factor times two John-Nirenberg L² factors of
/// 4·|I_T|^{1/2}·size each), four chains, plus a top term of at most
/// |I_T|·Π sizes.
#[derive(Clone, Debug)]
pub struct TreeCertificate {
    pub value: ExactScalar,
    pub top_length: num_rational::BigRational,
    /// Squared sizes of f₁, f₂, f₃ over the tree, exact.
    pub size_sq: [ExactScalar; 3],
    /// Values per branch: Λ_{T_1}..Λ_{T_4} and the top-quartile term.
    pub branch_values: [ExactScalar; 5],
}

/// The audited proof constant of the single-tree estimate.
pub const TREE_ESTIMATE_CONSTANT: i64 = 65;

impl TreeCertificate {
    /// Exact check of |Λ_T|² ≤ C²·|I_T|²·Π size², all in Q(√2).
    pub fn holds_with(&self, constant: i64) -> bool {
        let lhs = self.value.square();
        let c = ExactScalar::from_int(constant * constant);
        let len_sq = ExactScalar::from_rational(&self.top_length * &self.top_length);
        let mut rhs = c * len_sq;
        for s in &self.size_sq {
            rhs *= s.clone();
        }
        lhs <= rhs
    }
}

/// Λ_T on a convex tree together with the audit tuple of the single-tree
/// estimate. The internal branch split requires the T_j sub-trees to be
/// convex j-trees, as in the estimate's proof.
pub fn trilinear_tree(
    tree: &Tree,
    f1: &StepFunction,
    f2: &StepFunction,
    f3: &StepFunction,
) -> Result<TreeCertificate> {
    let value = trilinear(tree.members(), f1, f2, f3);
    let mut branch_values = std::array::from_fn::<ExactScalar, 5, _>(|_| ExactScalar::zero());
    for j in 1..=4u8 {
        let sub = tree.subtree(j);
        // validated here so a malformed split surfaces as an error, not a
        // silently wrong certificate
        sub.disjointify(j)?;
        branch_values[(j - 1) as usize] = trilinear(sub.members(), f1, f2, f3);
    }
    if tree.members().contains(tree.top()) {
        branch_values[4] = trilinear([*tree.top()].iter(), f1, f2, f3);
    }
    let size_sq = [
        size(tree.members(), f1).size_sq,
        size(tree.members(), f2).size_sq,
        size(tree.members(), f3).size_sq,
    ];
    Ok(TreeCertificate {
        value,
        top_length: tree.top_interval().length(),
        size_sq,
        branch_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicInterval;
    use crate::walsh::walsh_step;
    use std::collections::BTreeSet;

    fn qt(ks: i32, np: u64, nf: u64) -> Quartile {
        Quartile::new(DyadicInterval::new(ks, np), DyadicInterval::new(2 - ks, nf)).unwrap()
    }

    #[test]
    fn empty_set_gives_zero() {
        let f = StepFunction::indicator(&DyadicInterval::unit());
        let empty: BTreeSet<Quartile> = BTreeSet::new();
        assert!(apply(&empty, &f, &f).is_zero());
        assert!(trilinear(&empty, &f, &f, &f).is_zero());
    }

    #[test]
    fn single_quartile_w2_example() {
        // s = [0,1) × [0,4), f₁ = 1_{[0,1)}, f₂ = W₁ → V = W₂
        let s = qt(0, 0, 0);
        let f1 = StepFunction::indicator(&DyadicInterval::unit());
        let f2 = walsh_step(1, 2).unwrap();
        let v = apply([s].iter(), &f1, &f2);
        let w2 = walsh_step(2, 2).unwrap();
        assert_eq!(v, w2);
        // Λ with f₃ = W₂ is 1
        assert_eq!(trilinear([s].iter(), &f1, &f2, &w2), ExactScalar::one());
        // and matches ⟨V, f₃⟩ exactly
        assert_eq!(v.inner_product(&w2), ExactScalar::one());
    }

    #[test]
    fn vanishes_off_support() {
        let s = qt(0, 0, 0);
        let far = StepFunction::indicator(&DyadicInterval::new(0, 9));
        let f2 = StepFunction::indicator(&DyadicInterval::unit());
        assert!(apply([s].iter(), &far, &f2).is_zero());
    }

    #[test]
    fn additive_over_disjoint_sets() {
        let a = qt(0, 0, 0);
        let b = qt(0, 1, 2);
        let f1 = StepFunction::from_cells(
            -2,
            [(0, ExactScalar::from_ratio(1, 3)), (5, ExactScalar::sqrt2())],
        );
        let f2 =
            StepFunction::from_cells(-2, [(1, ExactScalar::from_int(2)), (6, ExactScalar::one())]);
        let f3 =
            StepFunction::from_cells(-2, [(2, ExactScalar::one()), (4, -ExactScalar::sqrt2())]);
        let whole = trilinear([a, b].iter(), &f1, &f2, &f3);
        let parts = trilinear([a].iter(), &f1, &f2, &f3) + trilinear([b].iter(), &f1, &f2, &f3);
        assert_eq!(whole, parts);
    }

    #[test]
    fn contributions_match_apply() {
        let set = [qt(0, 0, 0), qt(2, 0, 1), qt(0, 2, 3)];
        let f1 = StepFunction::from_cells(-2, [(0, ExactScalar::one()), (9, ExactScalar::sqrt2())]);
        let f2 = StepFunction::from_cells(-2, [(1, ExactScalar::from_int(3))]);
        let direct = apply(set.iter(), &f1, &f2);
        let mut rebuilt = StepFunction::zero(direct.cell_scale());
        for (cell, v) in apply_contributions(set.iter(), &f1, &f2) {
            rebuilt = rebuilt.add(&StepFunction::from_cells(cell.scale, [(cell.pos, v)]));
        }
        assert_eq!(direct, rebuilt);
    }

    #[test]
    fn singleton_tree_certificate() {
        let s = qt(0, 0, 0);
        let tree = Tree::singleton(s);
        let f1 = wave_packet(&s.freq_grandchild(1));
        let f2 = wave_packet(&s.freq_grandchild(2));
        let f3 = wave_packet(&s.freq_grandchild(3));
        let cert = trilinear_tree(&tree, &f1, &f2, &f3).unwrap();
        // |I_s| = 1: Λ = 1, sizes = 1
        assert_eq!(cert.value, ExactScalar::one());
        assert!(cert.holds_with(TREE_ESTIMATE_CONSTANT));
        // f₁ ⊥ the first-grandchild packet → zero
        let cert2 = trilinear_tree(&tree, &f3, &f2, &f3).unwrap();
        assert!(cert2.value.is_zero());
    }
}
