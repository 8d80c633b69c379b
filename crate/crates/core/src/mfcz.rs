//! Dyadic maximal functions, exceptional sets, good-tile restriction, and
//! the multi-frequency Calderon-Zygmund decomposition.
//!
//! The decomposition replaces f₁ by a function g₁ agreeing with it on every
//! wave-packet coefficient the quartile sum can see, while obeying an L²
//! bound that scales like A^{1-2/q} in the tops budget A². On each interval
//! of the exceptional family the replacement is the orthonormal expansion
//! over the local tile collection, so the coefficient identity is exact.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::decomp::Forest;
use crate::dyadic::{DyadicInterval, DyadicUnion, Exponent, StepFunction};
use crate::error::{Error, Result};
use crate::plane::{Quartile, Tile};
use crate::scalar::ExactScalar;
use crate::walsh::{packet_coeff, wave_packet};

/// Default number of extra ancestor levels above the support hull scanned
/// by the pointwise maximal functions.
pub const DEFAULT_MARGIN: u32 = 2;

fn grid_extent(f: &StepFunction, margin: u32) -> Option<DyadicInterval> {
    let hull = f.support_hull()?;
    let mut c = hull;
    for _ in 0..margin {
        c = c.parent();
    }
    Some(c)
}

/// The exact dyadic maximal function M₁f on the grid of f, evaluated over
/// the extent of the support hull widened by `margin` ancestor levels.
/// Values are exact elements of Q(√2).
pub fn maximal_m1(f: &StepFunction, margin: u32) -> StepFunction {
    maximal_exact(&f.abs(), margin)
}

/// (M₂f)² on the grid of f, exact; thresholds compare via squares.
pub fn maximal_m2_sq(f: &StepFunction, margin: u32) -> StepFunction {
    maximal_exact(&f.mul(f), margin)
}

/// sup over ancestors of the mean of a nonnegative step function, computed
/// from bottom-up mass tables so each grid cell costs one lookup per level.
fn maximal_exact(g: &StepFunction, margin: u32) -> StepFunction {
    let Some(extent) = grid_extent(g, margin) else {
        return StepFunction::zero(g.cell_scale());
    };
    let scale = g.cell_scale();
    let levels = (extent.scale - scale) as usize;
    // masses ∫ over every dyadic interval with nonzero intersection
    let mut tables: Vec<std::collections::BTreeMap<u64, ExactScalar>> = Vec::with_capacity(levels + 1);
    let cell_len = ExactScalar::two_pow(scale);
    tables.push(g.cells().map(|(p, v)| (*p, v.scale(&cell_len))).collect());
    for l in 0..levels {
        let mut next: std::collections::BTreeMap<u64, ExactScalar> = Default::default();
        for (p, m) in &tables[l] {
            *next.entry(p >> 1).or_insert_with(ExactScalar::zero) += m;
        }
        tables.push(next);
    }
    let mut cells = Vec::new();
    for pos in extent.positions_at(scale) {
        let mut best = ExactScalar::zero();
        for (l, table) in tables.iter().enumerate() {
            if let Some(mass) = table.get(&(pos >> l)) {
                let mean = mass.scale(&ExactScalar::two_pow(-(scale + l as i32)));
                if mean > best {
                    best = mean;
                }
            }
        }
        cells.push((pos, best));
    }
    StepFunction::from_cells(scale, cells)
}

/// M_p f on the grid of f in floating point, for general p ≥ 1.
pub fn maximal_float(f: &StepFunction, p: &Exponent, margin: u32) -> Result<Vec<(u64, f64)>> {
    let pf = match p {
        Exponent::Finite(r) if r.to_f64().unwrap() >= 1.0 => r.to_f64().unwrap(),
        _ => {
            return Err(Error::InvalidExponent(format!(
                "maximal function needs a finite p ≥ 1, got {p}"
            )))
        }
    };
    let Some(extent) = grid_extent(f, margin) else {
        return Ok(Vec::new());
    };
    let scale = f.cell_scale();
    let levels = (extent.scale - scale) as usize;
    let cell_len = f.cell_length().to_f64().unwrap();
    // masses ∫ |f|^p per dyadic interval, bottom up
    let mut tables: Vec<std::collections::BTreeMap<u64, f64>> = Vec::with_capacity(levels + 1);
    tables.push(
        f.cells().map(|(pos, v)| (*pos, v.to_f64().abs().powf(pf) * cell_len)).collect(),
    );
    for l in 0..levels {
        let mut next: std::collections::BTreeMap<u64, f64> = Default::default();
        for (pos, m) in &tables[l] {
            *next.entry(pos >> 1).or_insert(0.0) += m;
        }
        tables.push(next);
    }
    let mut out = Vec::new();
    for pos in extent.positions_at(scale) {
        let mut best = 0.0f64;
        for (l, table) in tables.iter().enumerate() {
            if let Some(mass) = table.get(&(pos >> l)) {
                let len = cell_len * 2f64.powi(l as i32);
                best = best.max((mass / len).powf(1.0 / pf));
            }
        }
        out.push((pos, best));
    }
    Ok(out)
}

/// The super-level set {M₁f ≥ c} as a union of maximal dyadic intervals,
/// computed exactly by the stopping-time descent from a root dominating the
/// support.
pub fn superlevel_m1(f: &StepFunction, c: &BigRational) -> DyadicUnion {
    superlevel_mean(&f.abs(), &ExactScalar::from_rational(c.clone()))
}

/// {M₂f ≥ c} = {M₁(f²) ≥ c²}, exact.
pub fn superlevel_m2(f: &StepFunction, c: &BigRational) -> DyadicUnion {
    superlevel_mean(&f.mul(f), &ExactScalar::from_rational(c * c))
}

/// {M_p f ≥ c} for general p, float comparisons.
pub fn superlevel_float(f: &StepFunction, p: &Exponent, c: f64) -> Result<DyadicUnion> {
    let pf = p.as_f64();
    let g = {
        let cell = f.cell_length().to_f64().unwrap();
        let cells: Vec<(u64, f64)> = f
            .cells()
            .map(|(pos, v)| (*pos, v.to_f64().abs().powf(pf) * cell))
            .collect();
        (cells, f.cell_scale(), cell)
    };
    // stopping-time descent on the float mass
    let Some(root) = root_above(f, &|mass, len| mass / len >= c.powf(pf)) else {
        return Ok(DyadicUnion::empty());
    };
    let mut out = Vec::new();
    let mut stack = vec![root];
    while let Some(i) = stack.pop() {
        let mass: f64 = g.0.iter().filter(|(p, _)| i.contains(&DyadicInterval::new(g.1, *p))).map(|(_, m)| m).sum();
        if mass == 0.0 {
            continue;
        }
        let len = i.length().to_f64().unwrap();
        if mass / len >= c.powf(pf) {
            out.push(i);
        } else if i.scale > g.1 {
            stack.extend(i.children());
        }
    }
    Ok(DyadicUnion::from_intervals(&out))
}

fn root_above(f: &StepFunction, keep_lifting: &dyn Fn(f64, f64) -> bool) -> Option<DyadicInterval> {
    let hull = f.support_hull()?;
    let mass = f.l1_norm_exact().to_f64();
    let mut root = hull;
    // lift until the mean at the root falls below the threshold, so no
    // ancestor of the root can be a super-level interval
    for _ in 0..128 {
        if !keep_lifting(mass, root.length().to_f64().unwrap_or(f64::INFINITY)) {
            break;
        }
        root = root.parent();
    }
    Some(root)
}

/// Exact stopping-time super-level set of the mean of a nonnegative g.
fn superlevel_mean(g: &StepFunction, threshold: &ExactScalar) -> DyadicUnion {
    if threshold.is_zero() || g.is_zero() {
        // every dyadic interval qualifies when the threshold is ≤ 0; callers
        // use positive thresholds, and a zero function has empty levels
        return DyadicUnion::empty();
    }
    let Some(hull) = g.support_hull() else { return DyadicUnion::empty() };
    let total = g.l1_norm_exact();
    let mut root = hull;
    while &total.scale(&ExactScalar::two_pow(-root.scale)) >= threshold {
        root = root.parent();
    }
    let mut out = Vec::new();
    let mut stack = vec![root];
    while let Some(i) = stack.pop() {
        let mass = g.l1_mass_on(&i);
        if mass.is_zero() {
            continue;
        }
        if &mass.scale(&ExactScalar::two_pow(-i.scale)) >= threshold {
            out.push(i);
        } else if i.scale > g.cell_scale() {
            stack.extend(i.children());
        }
    }
    DyadicUnion::from_intervals(&out)
}

/// The pair of exceptional sets with the threshold constant that produced
/// them.
#[derive(Clone, Debug)]
pub struct ExceptionalSets {
    pub e1: DyadicUnion,
    pub e2: DyadicUnion,
    /// threshold constant c: E₁ = {M_{p₁}f₁ ≥ c}, E₂ = {M₁1_{F₂} ≥ c|F₂|}
    pub c: BigRational,
}

impl ExceptionalSets {
    pub fn union(&self) -> DyadicUnion {
        self.e1.union(&self.e2)
    }
}

fn e1_at(f1: &StepFunction, p1: &Exponent, c: &BigRational) -> Result<DyadicUnion> {
    match p1 {
        Exponent::Finite(r) if *r == num_rational::Rational64::one() => Ok(superlevel_m1(f1, c)),
        Exponent::Finite(r) if *r == num_rational::Rational64::from_integer(2) => {
            Ok(superlevel_m2(f1, c))
        }
        Exponent::Infinity => Err(Error::InvalidExponent("p₁ = ∞".into())),
        _ => superlevel_float(f1, p1, c.to_f64().unwrap()),
    }
}

/// Builds the exceptional sets for a fixed constant c.
pub fn exceptional_sets_with_c(
    f1: &StepFunction,
    f2_support: &DyadicUnion,
    p1: &Exponent,
    c: &BigRational,
) -> Result<ExceptionalSets> {
    p1.validate_positive()?;
    let e1 = e1_at(f1, p1, c)?;
    let ind = StepFunction::indicator_of(f2_support);
    let e2 = superlevel_m1(&ind, &(c * f2_support.measure()));
    Ok(ExceptionalSets { e1, e2, c: c.clone() })
}

/// Doubling search for a constant making both exceptional sets small:
/// |E₁| ≤ 1/4 and |E₂| ≤ 1/4. Starts at c = 1, doubles while either bound
/// fails, then halves back while both bounds still hold so the recorded c is
/// the smallest power of two that works (bounded below by 2^{-16}).
pub fn exceptional_sets(
    f1: &StepFunction,
    f2_support: &DyadicUnion,
    p1: &Exponent,
) -> Result<ExceptionalSets> {
    let quarter = BigRational::new(1.into(), 4.into());
    let two = BigRational::from_integer(2.into());
    let ok = |s: &ExceptionalSets| s.e1.measure() <= quarter && s.e2.measure() <= quarter;
    let mut c = BigRational::one();
    let mut out = exceptional_sets_with_c(f1, f2_support, p1, &c)?;
    if !ok(&out) {
        while !ok(&out) {
            c *= &two;
            out = exceptional_sets_with_c(f1, f2_support, p1, &c)?;
        }
        return Ok(out);
    }
    let floor = ExactScalar::two_pow(-16);
    loop {
        let candidate = &c / &two;
        if candidate < floor {
            break;
        }
        let trial = exceptional_sets_with_c(f1, f2_support, p1, &candidate)?;
        if ok(&trial) {
            c = candidate;
            out = trial;
        } else {
            break;
        }
    }
    Ok(out)
}

/// The good-tile restriction: quartiles whose spatial interval is not
/// swallowed by the exceptional region. Λ is unchanged by the restriction
/// whenever f₃ vanishes on the region, since w_{s₃} lives on I_s.
pub fn good_quartiles(set: &BTreeSet<Quartile>, exceptional: &DyadicUnion) -> BTreeSet<Quartile> {
    set.iter().filter(|s| !exceptional.covers(&s.space)).copied().collect()
}

/// Per-interval record of the decomposition.
#[derive(Clone, Debug)]
pub struct CzInterval {
    pub interval: DyadicInterval,
    /// Value of the counting function on the interval.
    pub n_value: u64,
    /// The local tile collection S_I.
    pub tiles: Vec<Tile>,
    /// g_I: the orthonormal expansion of f₁·1_I over the S_I packets.
    pub g: StepFunction,
    /// ‖g_I‖₂² (global normalization), exact.
    pub norm_sq: ExactScalar,
}

/// JSON audit of the decomposition norms.
#[derive(Clone, Debug, Serialize)]
pub struct CzAudit {
    pub alpha: f64,
    pub a: f64,
    /// ‖g₁·1_{E₁^c}‖₂², exact value reported as float.
    pub off_e1_norm_sq: f64,
    /// ‖g₁·1_{E₁}‖₂² = Σ_I ‖g_I‖₂².
    pub on_e1_norm_sq: f64,
    /// Σ_I N_I^α |I|.
    pub counting_bound: f64,
    /// ‖N‖₁^α · |∪I|^{1-α}.
    pub holder_bound: f64,
    /// A^{2α}.
    pub a_bound: f64,
    pub identity_check: String,
}

/// The multi-frequency Calderon-Zygmund output.
#[derive(Clone, Debug)]
pub struct CzOutput {
    pub g1: StepFunction,
    pub intervals: Vec<CzInterval>,
    pub counting: StepFunction,
    pub audit: CzAudit,
}

#[derive(Serialize)]
struct CzIntervalAudit {
    interval: (i32, u64),
    n: u64,
    tiles: usize,
    norm_sq: f64,
}

#[derive(Serialize)]
struct CzAuditDoc<'a> {
    intervals: Vec<CzIntervalAudit>,
    #[serde(flatten)]
    audit: &'a CzAudit,
}

impl CzOutput {
    /// The interchange audit document: interval family with counting values
    /// and per-interval squared norms, plus the total norm bounds.
    pub fn audit_json(&self) -> String {
        let doc = CzAuditDoc {
            intervals: self
                .intervals
                .iter()
                .map(|iv| CzIntervalAudit {
                    interval: (iv.interval.scale, iv.interval.pos),
                    n: iv.n_value,
                    tiles: iv.tiles.len(),
                    norm_sq: iv.norm_sq.to_f64(),
                })
                .collect(),
            audit: &self.audit,
        };
        serde_json::to_string_pretty(&doc).expect("audit serializes")
    }
}

/// The counting function N = Σ_T 1_{I_T} of a forest, with integer values.
pub fn counting_function(forest: &Forest) -> StepFunction {
    let tops: Vec<DyadicInterval> =
        forest.trees().iter().filter(|t| !t.is_empty()).map(|t| t.top_interval()).collect();
    if tops.is_empty() {
        return StepFunction::zero(0);
    }
    let scale = tops.iter().map(|i| i.scale).min().unwrap();
    let mut out = StepFunction::zero(scale);
    for t in &tops {
        out = out.add(&StepFunction::indicator(t));
    }
    out
}

/// The interval family: the children of the maximal dyadic intervals of the
/// exceptional set.
pub fn interval_family(e1: &DyadicUnion) -> Vec<DyadicInterval> {
    let mut out = Vec::new();
    for m in e1.parts() {
        out.extend(m.children());
    }
    out
}

/// The local tile collection S_I: tiles with spatial interval I sitting
/// below some frequency grandchild of a quartile of S. The frequency side
/// is the forced dyadic ancestor at the matching scale.
pub fn local_tiles(set: &BTreeSet<Quartile>, interval: &DyadicInterval) -> Vec<Tile> {
    let mut tiles = BTreeSet::new();
    for s in set {
        if !s.space.contains(interval) || s.space == *interval {
            continue;
        }
        for j in 1..=4u8 {
            let gc = s.freq_grandchild(j);
            if let Some(freq) = gc.freq.ancestor_at(-interval.scale) {
                tiles.insert(Tile::new(*interval, freq).expect("area 1 by construction"));
            }
        }
    }
    tiles.into_iter().collect()
}

/// Runs the decomposition for a forest-structured S with tops(S) ≤ A² and
/// a precomputed exceptional set E₁ for f₁.
///
/// q is the dual exponent (p₁)' ≥ 2 and only enters the audit through
/// α = 1 − 2/q. The construction itself is exact: the returned g₁ has
/// exactly the same coefficients ⟨·, w_{s_j}⟩ as f₁ for every s ∈ S.
pub fn cz_decompose(
    forest: &Forest,
    f1: &StepFunction,
    e1: &DyadicUnion,
    q: &Exponent,
    a: &BigRational,
) -> Result<CzOutput> {
    if a < &BigRational::one() {
        return Err(Error::CzInput(format!("A = {a} < 1")));
    }
    let tops = forest.tops_value();
    if tops > a * a {
        return Err(Error::CzInput(format!("tops = {tops} exceeds A² = {}", a * a)));
    }
    let alpha = match q {
        Exponent::Infinity => 1.0,
        Exponent::Finite(r) => {
            let qf = r.to_f64().unwrap();
            if qf < 2.0 {
                return Err(Error::CzInput(format!("q = {r} < 2")));
            }
            1.0 - 2.0 / qf
        }
    };
    let set = forest.members();
    let counting = counting_function(forest);
    let family = interval_family(e1);

    // scale-gap sanity: every quartile meeting an exceptional interval must
    // strictly contain its parent, otherwise S was not good-filtered
    for i in &family {
        let parent = i.parent();
        for s in &set {
            if s.space.intersects(i) && !s.space.strictly_contains(&parent) {
                return Err(Error::CzInput(format!(
                    "quartile interval {:?} meets {:?} without swallowing its parent",
                    s.space, i
                )));
            }
        }
    }

    let mut intervals = Vec::new();
    let mut g1 = f1.clone();
    let mut on_e1_norm_sq = ExactScalar::zero();
    let mut counting_bound = 0.0;
    for i in family {
        // N is constant on I; verify rather than assume
        let n_value = match constant_value_on(&counting, &i) {
            Some(v) => rational_to_u64(&v),
            None => {
                return Err(Error::CzInput(format!("counting function is not constant on {i:?}")))
            }
        };
        let tiles = local_tiles(&set, &i);
        if tiles.len() as u64 > n_value {
            return Err(Error::CzInput(format!(
                "#S_I = {} exceeds N_I = {} on {:?}",
                tiles.len(),
                n_value,
                i
            )));
        }
        let local = f1.restrict(&i);
        let mut g = StepFunction::zero(f1.cell_scale());
        for t in &tiles {
            let c = packet_coeff(&local, t);
            if !c.is_zero() {
                g = g.add(&wave_packet(t).scale_by(&c));
            }
        }
        let norm_sq = g.l2_norm_sq();
        on_e1_norm_sq += &norm_sq;
        counting_bound +=
            (n_value as f64).powf(alpha) * i.length().to_f64().unwrap();
        // g₁ = f₁ − Σ_I (f₁·1_I − g_I)
        g1 = g1.sub(&local).add(&g);
        intervals.push(CzInterval { interval: i, n_value, tiles, g, norm_sq });
    }

    let off_e1 = {
        // ∪𝐈 = E₁, so off the exceptional set g₁ agrees with f₁
        match f1.support_hull() {
            None => ExactScalar::zero(),
            Some(hull) => {
                let mut h = hull;
                for p in e1.parts() {
                    while !h.contains(p) && !p.contains(&h) {
                        h = h.parent();
                    }
                }
                let comp = e1.complement_within(&h);
                f1.restrict_union(&comp).l2_norm_sq()
            }
        }
    };

    let n_l1 = counting.l1_norm_exact().to_f64();
    let e1_measure = e1.measure().to_f64().unwrap();
    let audit = CzAudit {
        alpha,
        a: a.to_f64().unwrap(),
        off_e1_norm_sq: off_e1.to_f64(),
        on_e1_norm_sq: on_e1_norm_sq.to_f64(),
        counting_bound,
        holder_bound: n_l1.powf(alpha) * e1_measure.powf(1.0 - alpha),
        a_bound: a.to_f64().unwrap().powf(2.0 * alpha),
        identity_check: "exact".into(),
    };
    Ok(CzOutput { g1, intervals, counting, audit })
}

fn rational_to_u64(x: &ExactScalar) -> u64 {
    x.rational_part().to_integer().to_u64().unwrap_or(0)
}

/// The single value a step function takes on an interval, or `None` if it
/// is not constant there. Absent cells count as zero.
fn constant_value_on(f: &StepFunction, i: &DyadicInterval) -> Option<ExactScalar> {
    let r = f.restrict(i);
    if r.is_zero() {
        return Some(ExactScalar::zero());
    }
    let gap = (i.scale - r.cell_scale()) as u32;
    if gap >= 64 || (r.num_cells() as u64) < (1u64 << gap) {
        return None;
    }
    let mut vals = r.cells().map(|(_, v)| v);
    let first = vals.next()?.clone();
    if vals.all(|v| *v == first) {
        Some(first)
    } else {
        None
    }
}

/// Exact verification of the coefficient identity ⟨f₁, w_{s_j}⟩ = ⟨g₁, w_{s_j}⟩
/// for every s ∈ S and j = 1..4.
pub fn verify_coefficient_identity(
    out: &CzOutput,
    set: &BTreeSet<Quartile>,
    f1: &StepFunction,
) -> bool {
    for s in set {
        for j in 1..=4u8 {
            let t = s.freq_grandchild(j);
            if packet_coeff(f1, &t) != packet_coeff(&out.g1, &t) {
                return false;
            }
        }
    }
    true
}
