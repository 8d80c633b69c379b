//! Dyadic intervals on the half-line, finite unions of them, and step
//! functions with exact values.
//!
//! An interval is encoded as a scale exponent k and a position n and denotes
//! [n·2^k, (n+1)·2^k). Positions are nonnegative: the phase plane lives on
//! [0,∞) × [0,∞) and the experiments never need negative coordinates.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::ExactScalar;

/// The dyadic interval [n·2^k, (n+1)·2^k).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicInterval {
    /// Scale exponent; the interval has length 2^scale.
    pub scale: i32,
    /// Position index; the left endpoint is pos·2^scale.
    pub pos: u64,
}

fn shr_saturating(pos: u64, shift: u32) -> u64 {
    if shift >= 64 {
        0
    } else {
        pos >> shift
    }
}

impl DyadicInterval {
    pub fn new(scale: i32, pos: u64) -> Self {
        DyadicInterval { scale, pos }
    }

    /// The unit interval [0,1).
    pub fn unit() -> Self {
        DyadicInterval::new(0, 0)
    }

    pub fn length(&self) -> BigRational {
        ExactScalar::two_pow(self.scale)
    }

    pub fn left(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.pos)) * self.length()
    }

    pub fn right(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.pos) + 1) * self.length()
    }

    /// True iff `other` ⊆ `self`.
    pub fn contains(&self, other: &DyadicInterval) -> bool {
        other.scale <= self.scale
            && shr_saturating(other.pos, (self.scale - other.scale) as u32) == self.pos
    }

    pub fn strictly_contains(&self, other: &DyadicInterval) -> bool {
        self.contains(other) && self != other
    }

    /// Dyadic intervals are nested or disjoint.
    pub fn intersects(&self, other: &DyadicInterval) -> bool {
        self.contains(other) || other.contains(self)
    }

    pub fn is_disjoint(&self, other: &DyadicInterval) -> bool {
        !self.intersects(other)
    }

    pub fn parent(&self) -> DyadicInterval {
        DyadicInterval::new(self.scale + 1, self.pos >> 1)
    }

    /// The ancestor at the given scale; `None` if the scale is finer than ours.
    pub fn ancestor_at(&self, scale: i32) -> Option<DyadicInterval> {
        if scale < self.scale {
            return None;
        }
        Some(DyadicInterval::new(
            scale,
            shr_saturating(self.pos, (scale - self.scale) as u32),
        ))
    }

    pub fn child(&self, half: u64) -> DyadicInterval {
        debug_assert!(half < 2);
        DyadicInterval::new(self.scale - 1, self.pos * 2 + half)
    }

    pub fn children(&self) -> [DyadicInterval; 2] {
        [self.child(0), self.child(1)]
    }

    /// The four grandchildren in increasing endpoint order.
    pub fn grandchildren(&self) -> [DyadicInterval; 4] {
        let base = self.pos * 4;
        [0, 1, 2, 3].map(|i| DyadicInterval::new(self.scale - 2, base + i))
    }

    /// Cell positions of this interval at a finer scale.
    pub fn positions_at(&self, scale: i32) -> std::ops::Range<u64> {
        assert!(scale <= self.scale, "requested scale is coarser than the interval");
        let factor = (self.scale - scale) as u32;
        assert!(factor < 64, "scale gap too large");
        (self.pos << factor)..((self.pos + 1) << factor)
    }
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}*2^{}..+1)", self.pos, self.scale)
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.left(), self.right())
    }
}

/// A finite union of dyadic intervals in canonical form: the list of maximal
/// dyadic intervals contained in the union, sorted by left endpoint. Equality
/// of values is equality of sets.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct DyadicUnion {
    parts: Vec<DyadicInterval>,
}

impl DyadicUnion {
    pub fn empty() -> Self {
        DyadicUnion::default()
    }

    pub fn from_intervals(intervals: &[DyadicInterval]) -> Self {
        if intervals.is_empty() {
            return DyadicUnion::empty();
        }
        let base = intervals.iter().map(|i| i.scale).min().unwrap();
        // merge as half-open integer ranges at the common finest scale
        let mut ranges: Vec<(u128, u128)> = intervals
            .iter()
            .map(|i| {
                let f = (i.scale - base) as u32;
                assert!(f < 64, "scale span too large for union");
                let lo = (i.pos as u128) << f;
                (lo, lo + (1u128 << f))
            })
            .collect();
        ranges.sort_unstable();
        let mut merged: Vec<(u128, u128)> = Vec::new();
        for (lo, hi) in ranges {
            match merged.last_mut() {
                Some((_, mhi)) if lo <= *mhi => *mhi = (*mhi).max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        // greedy maximal dyadic tiling of each merged range
        let mut parts = Vec::new();
        for (mut lo, hi) in merged {
            while lo < hi {
                let align = if lo == 0 { 127 } else { lo.trailing_zeros() };
                let fit = 127 - (hi - lo).leading_zeros();
                let g = align.min(fit);
                parts.push(DyadicInterval::new(base + g as i32, (lo >> g) as u64));
                lo += 1u128 << g;
            }
        }
        parts.sort_unstable_by_key(|p| (p.left(), p.scale));
        DyadicUnion { parts }
    }

    pub fn from_cells(scale: i32, cells: impl IntoIterator<Item = u64>) -> Self {
        let v: Vec<DyadicInterval> =
            cells.into_iter().map(|p| DyadicInterval::new(scale, p)).collect();
        DyadicUnion::from_intervals(&v)
    }

    pub fn parts(&self) -> &[DyadicInterval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn measure(&self) -> BigRational {
        self.parts.iter().map(|p| p.length()).sum()
    }

    /// True iff I ⊆ union. Since the parts tile the union, either I sits
    /// inside one part or the parts inside I must cover it exactly.
    pub fn covers(&self, interval: &DyadicInterval) -> bool {
        let mut inside = BigRational::zero();
        for p in &self.parts {
            if p.contains(interval) {
                return true;
            }
            if interval.contains(p) {
                inside += p.length();
            }
        }
        inside == interval.length()
    }

    pub fn intersects_interval(&self, interval: &DyadicInterval) -> bool {
        self.parts.iter().any(|p| p.intersects(interval))
    }

    pub fn union(&self, other: &DyadicUnion) -> DyadicUnion {
        let mut v = self.parts.clone();
        v.extend_from_slice(&other.parts);
        DyadicUnion::from_intervals(&v)
    }

    pub fn intersect(&self, other: &DyadicUnion) -> DyadicUnion {
        let mut v = Vec::new();
        for p in &self.parts {
            for q in &other.parts {
                if p.contains(q) {
                    v.push(*q);
                } else if q.contains(p) {
                    v.push(*p);
                }
            }
        }
        DyadicUnion::from_intervals(&v)
    }

    /// The part of `within` not covered by this union.
    pub fn complement_within(&self, within: &DyadicInterval) -> DyadicUnion {
        let mut stack = vec![*within];
        let mut out = Vec::new();
        while let Some(i) = stack.pop() {
            if self.covers(&i) {
                continue;
            }
            if !self.intersects_interval(&i) {
                out.push(i);
                continue;
            }
            for c in i.children() {
                stack.push(c);
            }
        }
        DyadicUnion::from_intervals(&out)
    }
}

/// A norm exponent: a positive rational or ∞.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Exponent {
    Finite(Rational64),
    Infinity,
}

impl Exponent {
    pub fn finite(num: i64, den: i64) -> Self {
        Exponent::Finite(Rational64::new(num, den))
    }

    pub fn one() -> Self {
        Exponent::finite(1, 1)
    }

    pub fn two() -> Self {
        Exponent::finite(2, 1)
    }

    pub fn validate_positive(&self) -> Result<()> {
        match self {
            Exponent::Infinity => Ok(()),
            Exponent::Finite(r) if r.is_positive() => Ok(()),
            Exponent::Finite(r) => Err(Error::InvalidExponent(r.to_string())),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Exponent::Infinity => f64::INFINITY,
            Exponent::Finite(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// The conjugate exponent p' = p/(p−1); requires p > 1.
    pub fn conjugate(&self) -> Result<Exponent> {
        match self {
            Exponent::Infinity => Ok(Exponent::one()),
            Exponent::Finite(r) => {
                if *r <= Rational64::one() {
                    return Err(Error::InvalidExponent(format!("conjugate of {r}")));
                }
                Ok(Exponent::Finite(r / (r - Rational64::one())))
            }
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinity => write!(f, "inf"),
            Exponent::Finite(r) => write!(f, "{r}"),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "inf" || s == "∞" {
            return Ok(Exponent::Infinity);
        }
        let r: Rational64 = s
            .parse()
            .map_err(|e| Error::Parse(format!("bad exponent {s:?}: {e}")))?;
        let e = Exponent::Finite(r);
        e.validate_positive()?;
        Ok(e)
    }
}

/// A finitely supported step function whose cells all have length
/// 2^cell_scale. Absent positions carry the value 0; zero values are pruned
/// so the cell map is canonical at a fixed scale. Values are immutable:
/// every operation returns a new function.
#[derive(Clone, Debug)]
pub struct StepFunction {
    scale: i32,
    cells: BTreeMap<u64, ExactScalar>,
}

impl StepFunction {
    pub fn zero(scale: i32) -> Self {
        StepFunction { scale, cells: BTreeMap::new() }
    }

    pub fn from_cells(scale: i32, cells: impl IntoIterator<Item = (u64, ExactScalar)>) -> Self {
        let mut map = BTreeMap::new();
        for (pos, v) in cells {
            if !v.is_zero() {
                let entry = map.entry(pos).or_insert_with(ExactScalar::zero);
                *entry += v;
                if entry.is_zero() {
                    map.remove(&pos);
                }
            }
        }
        StepFunction { scale, cells: map }
    }

    /// The indicator of a dyadic interval, as a single cell.
    pub fn indicator(interval: &DyadicInterval) -> Self {
        StepFunction::from_cells(interval.scale, [(interval.pos, ExactScalar::one())])
    }

    pub fn indicator_of(union: &DyadicUnion) -> Self {
        if union.is_empty() {
            return StepFunction::zero(0);
        }
        let scale = union.parts().iter().map(|p| p.scale).min().unwrap();
        let mut cells = Vec::new();
        for p in union.parts() {
            for pos in p.positions_at(scale) {
                cells.push((pos, ExactScalar::one()));
            }
        }
        StepFunction::from_cells(scale, cells)
    }

    pub fn cell_scale(&self) -> i32 {
        self.scale
    }

    pub fn cells(&self) -> impl Iterator<Item = (&u64, &ExactScalar)> {
        self.cells.iter()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn is_zero(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_length(&self) -> BigRational {
        ExactScalar::two_pow(self.scale)
    }

    /// The same function represented on a finer grid.
    pub fn refine_to(&self, scale: i32) -> StepFunction {
        assert!(scale <= self.scale, "refinement must go to a finer scale");
        let f = (self.scale - scale) as u32;
        assert!(f < 40, "refinement factor too large");
        let mut cells = BTreeMap::new();
        for (pos, v) in &self.cells {
            let base = pos << f;
            for i in 0..(1u64 << f) {
                cells.insert(base + i, v.clone());
            }
        }
        StepFunction { scale, cells }
    }

    fn aligned(&self, other: &StepFunction) -> (StepFunction, StepFunction) {
        let s = self.scale.min(other.scale);
        (self.refine_to(s), other.refine_to(s))
    }

    pub fn add(&self, other: &StepFunction) -> StepFunction {
        let (a, b) = self.aligned(other);
        let mut cells = a.cells;
        for (pos, v) in b.cells {
            let entry = cells.entry(pos).or_insert_with(ExactScalar::zero);
            *entry += v;
            if entry.is_zero() {
                cells.remove(&pos);
            }
        }
        StepFunction { scale: a.scale, cells }
    }

    pub fn sub(&self, other: &StepFunction) -> StepFunction {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> StepFunction {
        StepFunction {
            scale: self.scale,
            cells: self.cells.iter().map(|(p, v)| (*p, -v.clone())).collect(),
        }
    }

    pub fn scale_by(&self, c: &ExactScalar) -> StepFunction {
        if c.is_zero() {
            return StepFunction::zero(self.scale);
        }
        StepFunction {
            scale: self.scale,
            cells: self.cells.iter().map(|(p, v)| (*p, c * v)).collect(),
        }
    }

    /// Pointwise product; the product of step functions is a step function.
    pub fn mul(&self, other: &StepFunction) -> StepFunction {
        let (a, b) = self.aligned(other);
        let mut cells = BTreeMap::new();
        for (pos, v) in &a.cells {
            if let Some(w) = b.cells.get(pos) {
                let prod = v * w;
                if !prod.is_zero() {
                    cells.insert(*pos, prod);
                }
            }
        }
        StepFunction { scale: a.scale, cells }
    }

    pub fn abs(&self) -> StepFunction {
        StepFunction {
            scale: self.scale,
            cells: self.cells.iter().map(|(p, v)| (*p, v.abs())).collect(),
        }
    }

    /// Restriction f·1_I, exact.
    pub fn restrict(&self, interval: &DyadicInterval) -> StepFunction {
        if interval.scale >= self.scale {
            let cells = self
                .cells
                .range(cell_range(interval, self.scale))
                .map(|(p, v)| (*p, v.clone()))
                .collect();
            StepFunction { scale: self.scale, cells }
        } else {
            // the interval is finer than the grid: split the one covering cell
            let fine = self.refine_to(interval.scale);
            fine.restrict(interval)
        }
    }

    pub fn restrict_union(&self, union: &DyadicUnion) -> StepFunction {
        let mut out = StepFunction::zero(self.scale);
        for p in union.parts() {
            out = out.add(&self.restrict(p));
        }
        out
    }

    pub fn translate(&self, shift_cells: i64) -> Result<StepFunction> {
        let mut cells = BTreeMap::new();
        for (pos, v) in &self.cells {
            let np = (*pos as i64).checked_add(shift_cells).ok_or(Error::NegativePosition)?;
            if np < 0 {
                return Err(Error::NegativePosition);
            }
            cells.insert(np as u64, v.clone());
        }
        Ok(StepFunction { scale: self.scale, cells })
    }

    /// L^p-normalized dilation by 2^scale_exp followed by translation by
    /// `shift_cells` target cells. The value factor 2^{-scale_exp/p} must be
    /// representable in Q(√2); this holds for p ∈ {1, 2, ∞} and in general
    /// whenever 2·scale_exp/p is an integer.
    pub fn dilate_translate(
        &self,
        scale_exp: i32,
        shift_cells: i64,
        normalization: &Exponent,
    ) -> Result<StepFunction> {
        normalization.validate_positive()?;
        let factor = match normalization {
            Exponent::Infinity => ExactScalar::one(),
            Exponent::Finite(p) => {
                // exponent of 2 is -scale_exp/p = -scale_exp*den/num
                let num = 2i64 * scale_exp as i64 * *p.denom();
                let den = *p.numer();
                if num % den != 0 {
                    return Err(Error::InexactNormalization { num, den });
                }
                ExactScalar::two_pow_half(-(num / den))
            }
        };
        let dilated = StepFunction {
            scale: self.scale + scale_exp,
            cells: self.cells.iter().map(|(p, v)| (*p, &factor * v)).collect(),
        };
        dilated.translate(shift_cells)
    }

    pub fn support(&self) -> DyadicUnion {
        DyadicUnion::from_cells(self.scale, self.cells.keys().copied())
    }

    /// The smallest dyadic interval containing the support.
    pub fn support_hull(&self) -> Option<DyadicInterval> {
        let lo = *self.cells.keys().next()?;
        let hi = *self.cells.keys().next_back()?;
        let mut i = DyadicInterval::new(self.scale, lo);
        let last = DyadicInterval::new(self.scale, hi);
        while !i.contains(&last) {
            i = i.parent();
        }
        Some(i)
    }

    pub fn value_at_cell(&self, pos: u64) -> ExactScalar {
        self.cells.get(&pos).cloned().unwrap_or_else(ExactScalar::zero)
    }

    /// ⟨f, g⟩ = Σ f·g·2^scale after refinement to the common scale. All
    /// values are real, so there is no conjugation.
    pub fn inner_product(&self, other: &StepFunction) -> ExactScalar {
        let (a, b) = self.aligned(other);
        let weight = ExactScalar::two_pow(a.scale);
        let mut acc = ExactScalar::zero();
        for (pos, v) in &a.cells {
            if let Some(w) = b.cells.get(pos) {
                acc += (v * w).scale(&weight);
            }
        }
        acc
    }

    /// The squared L² norm, exact in Q(√2).
    pub fn l2_norm_sq(&self) -> ExactScalar {
        let weight = ExactScalar::two_pow(self.scale);
        let mut acc = ExactScalar::zero();
        for v in self.cells.values() {
            acc += v.square().scale(&weight);
        }
        acc
    }

    /// Exact L¹ norm as an element of Q(√2).
    pub fn l1_norm_exact(&self) -> ExactScalar {
        let weight = ExactScalar::two_pow(self.scale);
        let mut acc = ExactScalar::zero();
        for v in self.cells.values() {
            acc += v.abs().scale(&weight);
        }
        acc
    }

    /// Exact L^∞ norm as an element of Q(√2).
    pub fn linf_norm_exact(&self) -> ExactScalar {
        self.cells.values().map(|v| v.abs()).max().unwrap_or_else(ExactScalar::zero)
    }

    /// ‖f‖_p. Exact arithmetic feeds the computation for p ∈ {1, 2, ∞}
    /// (with one final root); general rational p > 0 is evaluated in floats.
    pub fn lp_norm(&self, p: &Exponent) -> Result<f64> {
        p.validate_positive()?;
        match p {
            Exponent::Infinity => Ok(self.linf_norm_exact().to_f64()),
            Exponent::Finite(r) if *r == Rational64::one() => Ok(self.l1_norm_exact().to_f64()),
            Exponent::Finite(r) if *r == Rational64::from_integer(2) => {
                Ok(self.l2_norm_sq().to_f64().sqrt())
            }
            Exponent::Finite(r) => {
                let pf = r.to_f64().unwrap();
                let cell = self.cell_length().to_f64().unwrap();
                let sum: f64 =
                    self.cells.values().map(|v| v.to_f64().abs().powf(pf) * cell).sum();
                Ok(sum.powf(1.0 / pf))
            }
        }
    }

    /// The normalized local norm (|I|^{-1} ∫_I |f|^p)^{1/p}.
    pub fn local_lp_norm(&self, interval: &DyadicInterval, p: &Exponent) -> Result<f64> {
        p.validate_positive()?;
        let g = self.restrict(interval);
        match p {
            Exponent::Infinity => g.lp_norm(p),
            Exponent::Finite(r) => {
                let raw = g.lp_norm(p)?;
                let inv_len = ExactScalar::two_pow(-interval.scale).to_f64().unwrap();
                Ok(raw * inv_len.powf(1.0 / r.to_f64().unwrap()))
            }
        }
    }

    /// Exact ∫_I |f|, used by the dyadic maximal machinery.
    pub fn l1_mass_on(&self, interval: &DyadicInterval) -> ExactScalar {
        self.restrict(interval).l1_norm_exact()
    }

    pub(crate) fn cells_in(
        &self,
        interval: &DyadicInterval,
    ) -> impl Iterator<Item = (&u64, &ExactScalar)> {
        debug_assert!(interval.scale >= self.scale);
        self.cells.range(cell_range(interval, self.scale))
    }
}

fn cell_range(interval: &DyadicInterval, scale: i32) -> std::ops::Range<u64> {
    interval.positions_at(scale)
}

impl PartialEq for StepFunction {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = self.aligned(other);
        a.cells == b.cells
    }
}

impl Eq for StepFunction {}

// ---- JSON interchange -----------------------------------------------------
//
// {"cell_scale": k, "cells": [[pos, a_num, a_den, b_num, b_den], ...]}
// with the five entries of each cell encoded as decimal strings so that
// arbitrary-precision values survive the round trip.

#[derive(Serialize, Deserialize)]
struct StepFunctionRepr {
    cell_scale: i32,
    cells: Vec<[String; 5]>,
}

impl Serialize for StepFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let cells = self
            .cells
            .iter()
            .map(|(pos, v)| {
                [
                    pos.to_string(),
                    v.rational_part().numer().to_string(),
                    v.rational_part().denom().to_string(),
                    v.sqrt2_part().numer().to_string(),
                    v.sqrt2_part().denom().to_string(),
                ]
            })
            .collect();
        StepFunctionRepr { cell_scale: self.scale, cells }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let repr = StepFunctionRepr::deserialize(d)?;
        let mut cells = Vec::with_capacity(repr.cells.len());
        for [pos, an, ad, bn, bd] in &repr.cells {
            let pos: u64 = pos.parse().map_err(DeError::custom)?;
            let parse_int =
                |s: &String| s.parse::<BigInt>().map_err(|e| DeError::custom(format!("{e}")));
            let a = BigRational::new(parse_int(an)?, parse_int(ad)?);
            let b = BigRational::new(parse_int(bn)?, parse_int(bd)?);
            cells.push((pos, ExactScalar::new(a, b)));
        }
        Ok(StepFunction::from_cells(repr.cell_scale, cells))
    }
}
