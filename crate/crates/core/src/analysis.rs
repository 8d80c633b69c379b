//! Decreasing rearrangements, Lorentz quasi-norms, weak-type constants, and
//! the layer-cake decomposition.
//!
//! The rearrangement of a step function is piecewise constant with exact
//! breakpoints, so distribution functions and weak-type suprema are computed
//! from exact data; floats enter only at the final power stage.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::dyadic::{DyadicInterval, DyadicUnion, Exponent, StepFunction};
use crate::error::{Error, Result};
use crate::scalar::ExactScalar;

/// The decreasing rearrangement f*: a right-continuous decreasing step
/// profile on (0, ∞), stored as pieces (value, width) with |value| sorted
/// descending and widths exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rearrangement {
    /// (|value|, width), values strictly decreasing, widths positive.
    pieces: Vec<(ExactScalar, BigRational)>,
}

impl Rearrangement {
    pub fn from_step(f: &StepFunction) -> Rearrangement {
        let cell = f.cell_length();
        // widths are all one cell; group by absolute value, ties merge
        let mut groups: BTreeMap<ExactScalar, BigRational> = BTreeMap::new();
        for (_, v) in f.cells() {
            let key = v.abs();
            if key.is_zero() {
                continue;
            }
            *groups.entry(key).or_insert_with(BigRational::zero) += &cell;
        }
        let mut pieces: Vec<(ExactScalar, BigRational)> = groups.into_iter().collect();
        pieces.reverse();
        Rearrangement { pieces }
    }

    /// Rearrangement of a sum of constant contributions on dyadic cells;
    /// overlapping contributions add. Avoids materializing a common grid.
    pub fn from_contributions(contribs: &[(DyadicInterval, ExactScalar)]) -> Rearrangement {
        if contribs.is_empty() {
            return Rearrangement { pieces: Vec::new() };
        }
        let base = contribs.iter().map(|(i, _)| i.scale).min().unwrap();
        // sweep events at integer coordinates of the base scale
        let mut events: BTreeMap<u128, Vec<(bool, ExactScalar)>> = BTreeMap::new();
        for (i, v) in contribs {
            let f = (i.scale - base) as u32;
            assert!(f < 64, "contribution scale span too large");
            let lo = (i.pos as u128) << f;
            let hi = lo + (1u128 << f);
            events.entry(lo).or_default().push((true, v.clone()));
            events.entry(hi).or_default().push((false, v.clone()));
        }
        let cell = ExactScalar::two_pow(base);
        let mut groups: BTreeMap<ExactScalar, BigRational> = BTreeMap::new();
        let mut current = ExactScalar::zero();
        let mut prev: Option<u128> = None;
        for (x, evs) in events {
            if let Some(p) = prev {
                if x > p && !current.is_zero() {
                    let width =
                        BigRational::from_integer(num_bigint::BigInt::from(x - p)) * &cell;
                    let key = current.abs();
                    *groups.entry(key).or_insert_with(BigRational::zero) += width;
                }
            }
            for (enter, v) in evs {
                if enter {
                    current += &v;
                } else {
                    current -= v;
                }
            }
            prev = Some(x);
        }
        let mut pieces: Vec<(ExactScalar, BigRational)> = groups.into_iter().collect();
        pieces.reverse();
        Rearrangement { pieces }
    }

    /// (|value|, width) pieces in decreasing value order.
    pub fn pieces(&self) -> &[(ExactScalar, BigRational)] {
        &self.pieces
    }

    /// Cumulative breakpoints t₁ < t₂ < … of the constancy intervals.
    pub fn breakpoints(&self) -> Vec<BigRational> {
        let mut acc = BigRational::zero();
        self.pieces
            .iter()
            .map(|(_, w)| {
                acc += w;
                acc.clone()
            })
            .collect()
    }

    pub fn total_mass_support(&self) -> BigRational {
        self.pieces.iter().map(|(_, w)| w.clone()).sum()
    }

    /// |{ |f| > λ }|, exact.
    pub fn distribution(&self, lambda: &ExactScalar) -> BigRational {
        let mut acc = BigRational::zero();
        for (v, w) in &self.pieces {
            if v > lambda {
                acc += w;
            } else {
                break;
            }
        }
        acc
    }

    /// ‖f‖_{p,q} = ‖ t^{1/p} f*(t) ‖_{L^q(dt/t)}: closed form per piece for
    /// finite q, supremum over right breakpoints for q = ∞.
    pub fn lorentz_quasinorm(&self, p: &Exponent, q: &Exponent) -> Result<f64> {
        p.validate_positive()?;
        q.validate_positive()?;
        let pf = match p {
            Exponent::Infinity => {
                return Err(Error::InvalidExponent("p = ∞ Lorentz scale".into()))
            }
            Exponent::Finite(r) => r.to_f64().unwrap(),
        };
        match q {
            Exponent::Infinity => {
                // t^{1/p} increases, so the sup over a constancy interval is
                // attained at its right endpoint
                let mut best: f64 = 0.0;
                let mut t = 0.0;
                for (v, w) in &self.pieces {
                    t += w.to_f64().unwrap();
                    best = best.max(t.powf(1.0 / pf) * v.to_f64());
                }
                Ok(best)
            }
            Exponent::Finite(qr) => {
                let qf = qr.to_f64().unwrap();
                // ∫_a^b t^{q/p - 1} dt = (p/q)(b^{q/p} − a^{q/p})
                let e = qf / pf;
                let mut acc = 0.0;
                let mut a = 0.0f64;
                for (v, w) in &self.pieces {
                    let b = a + w.to_f64().unwrap();
                    acc += v.to_f64().powf(qf) * (b.powf(e) - a.powf(e)) / e;
                    a = b;
                }
                Ok(acc.powf(1.0 / qf))
            }
        }
    }

    /// The weak-type functional sup_λ λ·|{|f|>λ}|^{1/r} = sup_t t^{1/r} f*(t⁻),
    /// evaluated over the right endpoints of the constancy intervals. Equals
    /// the (r, ∞) Lorentz quasi-norm by the same formula.
    pub fn weak_constant(&self, r: &Exponent) -> Result<f64> {
        self.lorentz_quasinorm(r, &Exponent::Infinity)
    }
}

/// Convenience wrappers on step functions.
pub fn rearrange(f: &StepFunction) -> Rearrangement {
    Rearrangement::from_step(f)
}

pub fn lorentz_quasinorm(f: &StepFunction, p: &Exponent, q: &Exponent) -> Result<f64> {
    rearrange(f).lorentz_quasinorm(p, q)
}

pub fn weak_constant(f: &StepFunction, r: &Exponent) -> Result<f64> {
    rearrange(f).weak_constant(r)
}

/// One layer of the dyadic layer-cake decomposition: f = Σ_k 2^{k+1} g_k
/// with |g_k| ≤ 1_{G_k} and G_k = {2^k < |f| ≤ 2^{k+1}}.
#[derive(Clone, Debug)]
pub struct Layer {
    pub k: i64,
    /// g_k = f·1_{G_k}·2^{-(k+1)}, a subindicator function.
    pub g: StepFunction,
    pub support: DyadicUnion,
    pub support_measure: BigRational,
}

/// The layer decomposition together with its aggregate audit.
#[derive(Clone, Debug)]
pub struct LayerDecomposition {
    pub layers: Vec<Layer>,
    /// ‖{2^k |G_k|^{1/p₂}}‖_{ℓ^{2/3}}.
    pub aggregate: f64,
    /// ‖f‖_{p₂,2/3} with the unnormalized quasi-norm convention.
    pub lorentz: f64,
    /// aggregate / lorentz.
    pub ratio: f64,
    /// aggregate / (κ·lorentz) with κ = (q/p)^{1/q} the indicator
    /// normalization, under which 1_{[0,m)} has quasi-norm exactly m^{1/p}.
    pub normalized_ratio: f64,
}

/// Finds the dyadic layer index: the k with 2^k < |v| ≤ 2^{k+1}.
fn layer_index(v: &ExactScalar) -> i64 {
    debug_assert!(!v.is_zero());
    let a = v.abs();
    let guess = a.to_f64().log2();
    let mut k = if guess.is_finite() { guess.floor() as i64 } else { 0 };
    k = k.clamp(-512, 512);
    // correct float drift by exact comparison
    loop {
        let lo = ExactScalar::two_pow_half(2 * k);
        let hi = ExactScalar::two_pow_half(2 * (k + 1));
        if a <= lo {
            k -= 1;
        } else if a > hi {
            k += 1;
        } else {
            return k;
        }
    }
}

/// Splits f into dyadic layers. Reconstruction Σ 2^{k+1} g_k = f is exact;
/// the audit compares ‖{2^k|G_k|^{1/p₂}}‖_{ℓ^{2/3}} with the Lorentz
/// quasi-norm ‖f‖_{p₂,2/3}.
pub fn layer_decompose(f: &StepFunction, p2: &Exponent) -> Result<LayerDecomposition> {
    p2.validate_positive()?;
    let mut by_layer: BTreeMap<i64, Vec<(u64, ExactScalar)>> = BTreeMap::new();
    for (pos, v) in f.cells() {
        by_layer.entry(layer_index(v)).or_default().push((*pos, v.clone()));
    }
    let pf = p2.as_f64();
    let mut layers = Vec::new();
    let mut aggregate_q = 0.0f64;
    for (k, cells) in by_layer.into_iter().rev() {
        let scale_factor = ExactScalar::two_pow_half(-2 * (k + 1));
        let g = StepFunction::from_cells(
            f.cell_scale(),
            cells.iter().map(|(p, v)| (*p, v * &scale_factor)),
        );
        let support = DyadicUnion::from_cells(f.cell_scale(), cells.iter().map(|(p, _)| *p));
        let support_measure = support.measure();
        let weight = 2f64.powi(k as i32) * support_measure.to_f64().unwrap().powf(1.0 / pf);
        aggregate_q += weight.powf(2.0 / 3.0);
        layers.push(Layer { k, g, support, support_measure });
    }
    let aggregate = aggregate_q.powf(1.5);
    let q23 = Exponent::finite(2, 3);
    let lorentz = lorentz_quasinorm(f, p2, &q23)?;
    let ratio = if lorentz == 0.0 { 0.0 } else { aggregate / lorentz };
    // κ = (q/p)^{1/q} with q = 2/3
    let kappa = (2.0 / (3.0 * pf)).powf(1.5);
    let normalized_ratio = if lorentz == 0.0 { 0.0 } else { aggregate / (kappa * lorentz) };
    Ok(LayerDecomposition { layers, aggregate, lorentz, ratio, normalized_ratio })
}

/// Exact reconstruction Σ 2^{k+1}·g_k from a layer decomposition.
pub fn reconstruct(layers: &[Layer], scale: i32) -> StepFunction {
    let mut acc = StepFunction::zero(scale);
    for l in layers {
        acc = acc.add(&l.g.scale_by(&ExactScalar::two_pow_half(2 * (l.k + 1))));
    }
    acc
}
