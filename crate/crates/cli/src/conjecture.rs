//! Exploratory probe of the symmetric endpoint: random and structured
//! inputs f with unit-measure support, tracking the running maximum of
//! ‖V(f,f)‖_{2/3,∞} / ‖f‖_{4/3}². No pass/fail; the report is a search log.

use rand::Rng;

use quartile_core::analysis::Rearrangement;
use quartile_core::dyadic::{Exponent, StepFunction};
use quartile_core::fixtures::{power_profile, subseeded};
use quartile_core::model::apply_contributions;
use quartile_core::scalar::ExactScalar;
use quartile_core::walsh::wave_packet;

use crate::band::BandConfig;
use crate::report::{ConjectureReport, ConjectureTrial};

pub struct ConjectureConfig {
    pub trials: usize,
    pub seed: u64,
    pub depth: u32,
    pub scale_classes: u32,
}

fn ratio_for(set: &std::collections::BTreeSet<quartile_core::plane::Quartile>, f: &StepFunction) -> f64 {
    let p43 = Exponent::finite(4, 3);
    let norm = f.lp_norm(&p43).expect("4/3 is valid");
    if norm == 0.0 {
        return 0.0;
    }
    let contribs = apply_contributions(set, f, f);
    let weak = Rearrangement::from_contributions(&contribs)
        .weak_constant(&Exponent::finite(2, 3))
        .expect("2/3 is valid");
    weak / (norm * norm)
}

/// A random function with |supp f| = 1 and dyadic-rational values in [−1,1].
fn random_subindicator(rng: &mut impl Rng, depth: u32) -> StepFunction {
    let cells = (0..(1u64 << depth)).map(|pos| {
        let num = rng.gen_range(-16i64..=16);
        (pos, ExactScalar::from_ratio(num, 16))
    });
    StepFunction::from_cells(-(depth as i32), cells)
}

pub fn run_conjecture(cfg: &ConjectureConfig) -> ConjectureReport {
    let band = BandConfig::for_depth(cfg.depth, cfg.scale_classes, 1);
    let set = band.quartiles();
    let mut rng = subseeded(cfg.seed, 13);

    let mut history = Vec::new();
    let push = |label: String, f: &StepFunction, history: &mut Vec<ConjectureTrial>| {
        let ratio = ratio_for(&set, f);
        history.push(ConjectureTrial { index: history.len(), label, ratio });
    };

    // structured candidates first: a matched packet pair on the unit
    // quartile, and the near-extremal power profile
    let unit = quartile_core::plane::Quartile::new(
        quartile_core::dyadic::DyadicInterval::unit(),
        quartile_core::dyadic::DyadicInterval::new(2, 0),
    )
    .unwrap();
    let matched = wave_packet(&unit.freq_grandchild(1)).add(&wave_packet(&unit.freq_grandchild(2)));
    push("structured:matched-packets".into(), &matched, &mut history);
    let profile = power_profile(4.0 / 3.0, cfg.depth.min(10));
    push("structured:power-profile".into(), &profile, &mut history);

    let random_budget = cfg.trials.saturating_sub(history.len());
    for t in 0..random_budget {
        let depth = rng.gen_range(3..=6u32);
        let f = random_subindicator(&mut rng, depth);
        push(format!("random:{t}"), &f, &mut history);
    }

    let best = history
        .iter()
        .max_by(|a, b| a.ratio.partial_cmp(&b.ratio).expect("ratios are finite"));
    let best_ratio = best.map(|b| b.ratio).unwrap_or(0.0);
    let best_trial = best.map(|b| ConjectureTrial {
        index: b.index,
        label: b.label.clone(),
        ratio: b.ratio,
    });
    ConjectureReport {
        command: "conjecture",
        version: quartile_core::VERSION,
        seed: cfg.seed,
        trials: history.len(),
        depth: cfg.depth,
        scale_classes: cfg.scale_classes,
        best_ratio,
        best_trial,
        history,
    }
}
