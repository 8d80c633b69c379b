//! Endpoint-constant sweeps: the weak-type constant of the quartile
//! operator against the subindicator bound (constant ≲ (p₁)′) and the L²
//! variant with 1/p + 1/2 = 1/r.

use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive};

use quartile_core::analysis::Rearrangement;
use quartile_core::dyadic::{DyadicInterval, DyadicUnion, Exponent, StepFunction};
use quartile_core::fixtures::{power_profile, sign_packet, subseeded};
use quartile_core::model::apply_contributions;
use quartile_core::plane::Quartile;

use crate::band::BandConfig;
use crate::report::{EndpointReport, EndpointRow};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Variant {
    /// f₂ = 1_{F₂}, measured in L^{2/3,∞} against (p₁)′·‖f₁‖_{p₁}·|F₂|^{1/p₂}.
    Indicator,
    /// f₂ a random L²-normalized sign packet, measured in L^{r,∞} with
    /// 1/r = 1/p + 1/2 against p′·‖f₁‖_p·‖f₂‖₂.
    Sign,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum F2Shape {
    /// F₂ = [0,1).
    Unit,
    /// F₂ = ∪_j [2^{-2j-1}, 2^{-2j}), lacunary around the profile's spike.
    Lacunary,
}

pub struct EndpointConfig {
    pub p1_list: Vec<Rational64>,
    pub depth: u32,
    pub scale_classes: u32,
    pub freq_band: u64,
    pub variant: Variant,
    pub f2_shape: F2Shape,
    pub dilate: i32,
    pub seed: u64,
    pub max_spread: f64,
    /// Finest spatial scale of the band; `None` picks the variant default:
    /// two classes above the profile grid for the indicator variant, the
    /// unit scale for the sign variant, whose fine-scale couplings against
    /// a random packet are cancellation noise rather than signal.
    pub min_scale: Option<i32>,
}

impl EndpointConfig {
    pub fn effective_min_scale(&self) -> i32 {
        match self.min_scale {
            Some(m) => m,
            None => match self.variant {
                Variant::Indicator => -(self.depth as i32) + 2,
                Variant::Sign => 0,
            },
        }
    }
}

fn lacunary_support(depth: u32) -> DyadicUnion {
    let blocks: Vec<DyadicInterval> = (0..(depth / 2).max(1))
        .map(|j| DyadicInterval::new(-(2 * j as i32) - 1, 1))
        .collect();
    DyadicUnion::from_intervals(&blocks)
}

fn dilate_quartiles(set: &std::collections::BTreeSet<Quartile>, j: i32) -> std::collections::BTreeSet<Quartile> {
    set.iter()
        .map(|q| {
            Quartile::new(
                DyadicInterval::new(q.space.scale - 2 * j, q.space.pos),
                DyadicInterval::new(q.freq.scale + 2 * j, q.freq.pos),
            )
            .expect("dilation preserves the area invariant")
        })
        .collect()
}

pub fn run_endpoint(cfg: &EndpointConfig) -> EndpointReport {
    let band = BandConfig {
        min_scale: cfg.effective_min_scale(),
        scale_classes: cfg.scale_classes,
        freq_band: cfg.freq_band,
        window: 0,
    };
    let mut set = band.quartiles();
    let mut rng = subseeded(cfg.seed, 11);
    let (f2_shape, f2, f2_measure): (String, StepFunction, BigRational) = match cfg.variant {
        Variant::Indicator => match cfg.f2_shape {
            F2Shape::Unit => {
                let u = DyadicUnion::from_intervals(&[DyadicInterval::unit()]);
                ("unit".into(), StepFunction::indicator_of(&u), u.measure())
            }
            F2Shape::Lacunary => {
                let u = lacunary_support(cfg.depth);
                ("lacunary".into(), StepFunction::indicator_of(&u), u.measure())
            }
        },
        Variant::Sign => {
            // oscillation down to the profile grid, so fine quartiles couple
            let f2 = sign_packet(&mut rng, cfg.depth);
            let m = f2.l2_norm_sq();
            ("sign".into(), f2, m.rational_part().clone())
        }
    };
    let mut f2 = f2;
    if cfg.dilate != 0 {
        set = dilate_quartiles(&set, cfg.dilate);
        f2 = f2
            .dilate_translate(-2 * cfg.dilate, 0, &Exponent::Infinity)
            .expect("geometric dilation is unnormalized");
    }

    let mut rows = Vec::new();
    for p1 in &cfg.p1_list {
        let p1f = p1.to_f64().unwrap();
        let q = p1f / (p1f - 1.0);
        let mut f1 = power_profile(p1f, cfg.depth);
        if cfg.dilate != 0 {
            f1 = f1
                .dilate_translate(-2 * cfg.dilate, 0, &Exponent::Infinity)
                .expect("geometric dilation is unnormalized");
        }
        let f1_norm = f1
            .lp_norm(&Exponent::Finite(*p1))
            .expect("p₁ > 1 is a valid exponent");
        let (r, f2_factor) = match cfg.variant {
            Variant::Indicator => {
                // 1/p₂ = 3/2 − 1/p₁; the measured bound carries |F₂|^{1/p₂}
                let inv_p2 = 1.5 - 1.0 / p1f;
                (
                    Exponent::finite(2, 3),
                    f2_measure.to_f64().unwrap().powf(inv_p2),
                )
            }
            Variant::Sign => {
                // 1/r = 1/p + 1/2 ⟹ r = 2p/(2+p)
                let r = Rational64::from_integer(2) * p1
                    / (Rational64::from_integer(2) + p1);
                (
                    Exponent::Finite(r),
                    f2_measure.to_f64().unwrap().sqrt(),
                )
            }
        };
        let contribs = apply_contributions(&set, &f1, &f2);
        let weak = Rearrangement::from_contributions(&contribs)
            .weak_constant(&r)
            .expect("r > 0");
        let k = if f1_norm > 0.0 && f2_factor > 0.0 { weak / (f1_norm * f2_factor) } else { 0.0 };
        rows.push(EndpointRow {
            p1: p1.to_string(),
            q,
            r: r.as_f64(),
            f1_norm,
            f2_factor,
            weak_norm: weak,
            k,
            k_over_q: k / q,
        });
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for row in &rows {
        lo = lo.min(row.k_over_q);
        hi = hi.max(row.k_over_q);
    }
    let spread = if rows.is_empty() || lo <= 0.0 { f64::NAN } else { hi / lo };
    EndpointReport {
        command: "endpoint",
        version: quartile_core::VERSION,
        seed: cfg.seed,
        variant: match cfg.variant {
            Variant::Indicator => "indicator".into(),
            Variant::Sign => "sign".into(),
        },
        depth: cfg.depth,
        scale_classes: cfg.scale_classes,
        min_scale: band.min_scale,
        freq_band: cfg.freq_band,
        f2_shape,
        dilate: cfg.dilate,
        quartiles: set.len(),
        rows,
        spread,
        max_spread: cfg.max_spread,
        pass: spread.is_finite() && spread <= cfg.max_spread,
    }
}

/// Validation helper shared with the parser: exponents must lie in (1, 2).
pub fn validate_p1(p1: &Rational64) -> Result<(), String> {
    let one = Rational64::one();
    let two = Rational64::from_integer(2);
    if *p1 <= one || *p1 >= two || !p1.is_positive() {
        return Err(format!("p₁ must lie strictly between 1 and 2, got {p1}"));
    }
    Ok(())
}
