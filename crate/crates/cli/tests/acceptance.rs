//! Acceptance suite: every numbered criterion as its own test, each
//! printing one pass/fail line (run with --nocapture to see them). All
//! structural identities are asserted exactly in Q(√2); measured-constant
//! criteria pin their thresholds here.

use std::collections::BTreeSet;
use std::time::Instant;

use num_rational::BigRational;
use rand::Rng;

use quartile_cli::endpoint::{run_endpoint, EndpointConfig, F2Shape, Variant};
use quartile_cli::report::to_json;
use quartile_cli::{build_verify_report, VerifyArgs};
use quartile_core::analysis::{layer_decompose, lorentz_quasinorm, rearrange, reconstruct};
use quartile_core::decomp::{size, size_split, ConvexityCheck, Forest};
use quartile_core::dyadic::{DyadicInterval, DyadicUnion, Exponent, StepFunction};
use quartile_core::fixtures::{
    gen_convex_jtree, gen_convex_set, gen_disjoint_tile_pair, gen_nonzero_step, gen_step_on_tree,
    subseeded,
};
use quartile_core::mfcz::{cz_decompose, exceptional_sets, good_quartiles, verify_coefficient_identity};
use quartile_core::model::{trilinear, trilinear_tree, TREE_ESTIMATE_CONSTANT};
use quartile_core::plane::{is_convex, shadow, shadow_tiles, Quartile};
use quartile_core::scalar::ExactScalar;
use quartile_core::tree::Tree;
use quartile_core::walsh::{packet_coeff, wave_packet};

const SEED: u64 = 20260810;

fn conclude(id: u32, what: &str, pass: bool, started: Instant) {
    let secs = started.elapsed().as_secs_f64();
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} [{tag}] {what} ({secs:.2}s)");
    assert!(pass, "criterion {id} failed: {what}");
}

#[test]
fn criterion_01_exact_orthogonality() {
    let t0 = Instant::now();
    let mut rng = subseeded(SEED, 101);
    let mut ok = true;
    for _ in 0..1000 {
        let (a, b) = gen_disjoint_tile_pair(&mut rng, 4);
        if !wave_packet(&a).inner_product(&wave_packet(&b)).is_zero() {
            ok = false;
        }
    }
    conclude(1, "1000 disjoint tile pairs pair to exactly zero", ok, t0);
}

#[test]
fn criterion_02_disjointification() {
    let t0 = Instant::now();
    let mut rng = subseeded(SEED, 102);
    let mut ok = true;
    for j in 1..=4u8 {
        for _ in 0..50 {
            let depth = rng.gen_range(1..=3);
            let tree = gen_convex_jtree(&mut rng, j, 16, depth);
            let tiles = match tree.disjointify(j) {
                Ok(t) => t,
                Err(_) => {
                    ok = false;
                    continue;
                }
            };
            let v: Vec<_> = tiles.iter().collect();
            for a in 0..v.len() {
                for b in (a + 1)..v.len() {
                    if !v[a].is_disjoint(v[b]) {
                        ok = false;
                    }
                }
            }
            if shadow_tiles(tiles.iter()) != shadow(tree.members().iter()) {
                ok = false;
            }
            for a in &tiles {
                for b in &tiles {
                    if a != b && a.space.intersects(&b.space) {
                        let hosted = tree.members().iter().any(|q| {
                            let g = q.freq_grandchildren();
                            g.contains(a) && g.contains(b)
                        });
                        if !hosted {
                            ok = false;
                        }
                    }
                }
            }
        }
    }
    conclude(2, "200 convex j-trees: disjoint tiles, equal shadows, grandchild overlaps", ok, t0);
}

/// The shared fixture family for criteria 3, 4, and 5.
fn projection_fixtures() -> Vec<(Tree, u8, StepFunction, StepFunction, StepFunction)> {
    let mut rng = subseeded(SEED, 103);
    (0..200)
        .map(|_| {
            let j = rng.gen_range(1..=4u8);
            let depth = rng.gen_range(1..=3);
            let tree = gen_convex_jtree(&mut rng, j, 16, depth);
            let f1 = gen_step_on_tree(&mut rng, &tree, 12);
            let f2 = gen_step_on_tree(&mut rng, &tree, 12);
            let f3 = gen_step_on_tree(&mut rng, &tree, 12);
            (tree, j, f1, f2, f3)
        })
        .collect()
}

#[test]
fn criterion_03_projection_identity() {
    let t0 = Instant::now();
    let mut ok = true;
    for (tree, j, f, _, _) in &projection_fixtures() {
        let pf = tree.project(*j, f).expect("fixture trees are convex j-trees");
        for s in tree.members() {
            for tile in s.all_grandchildren() {
                if packet_coeff(f, &tile) != packet_coeff(&pf, &tile) {
                    ok = false;
                }
            }
        }
    }
    conclude(3, "200 trees: ⟨f, w_s⟩ = ⟨Π_T f, w_s⟩ exactly on T★★", ok, t0);
}

#[test]
fn criterion_04_john_nirenberg() {
    let t0 = Instant::now();
    let mut ok = true;
    let sixteen = BigRational::from_integer(16.into());
    for (tree, _, f, _, _) in &projection_fixtures() {
        let size_sq = size(tree.members(), f).size_sq;
        for jj in 1..=4u8 {
            let sub = tree.subtree(jj);
            if sub.is_empty() {
                continue;
            }
            let p = sub.project(jj, f).expect("sub-trees project");
            if p.linf_norm_exact().square() > size_sq.scale(&sixteen) {
                ok = false;
            }
        }
    }
    conclude(4, "‖Π_{T_j}f‖_∞ ≤ 4·size_f(T), exact via squares, zero violations", ok, t0);
}

#[test]
fn criterion_05_single_tree_estimate() {
    let t0 = Instant::now();
    let mut ok = true;
    for (tree, _, f1, f2, f3) in &projection_fixtures() {
        match trilinear_tree(tree, f1, f2, f3) {
            Ok(cert) => {
                if !cert.holds_with(TREE_ESTIMATE_CONSTANT) {
                    ok = false;
                }
            }
            Err(_) => ok = false,
        }
    }
    conclude(5, "|Λ_T| ≤ 65·|I_T|·Π sizes on all criterion-3 fixtures", ok, t0);
}

#[test]
fn criterion_06_size_lemma() {
    let t0 = Instant::now();
    let mut rng = subseeded(SEED, 106);
    let mut ok = true;
    for _ in 0..200 {
        let set = gen_convex_set(&mut rng, 64);
        let f = gen_nonzero_step(&mut rng, -4, 8, 24);
        let sz = size(&set, &f).size_sq;
        let mut sigma_sq = BigRational::from_integer(1.into());
        while ExactScalar::from_rational(sigma_sq.clone()) < sz {
            sigma_sq *= BigRational::from_integer(2.into());
        }
        let out = match size_split(&set, &f, &sigma_sq, ConvexityCheck::Validate) {
            Ok(o) => o,
            Err(_) => {
                ok = false;
                continue;
            }
        };
        let quarter = &sigma_sq / BigRational::from_integer(4.into());
        if size(&out.lo, &f).size_sq > ExactScalar::from_rational(quarter) {
            ok = false;
        }
        let bound = f.l2_norm_sq().scale(&(BigRational::from_integer(4.into()) / &sigma_sq));
        if ExactScalar::from_rational(out.hi.tops_value()) > bound {
            ok = false;
        }
        if !is_convex(&out.lo) || !is_convex(&out.hi.members()) || !out.hi.is_partition() {
            ok = false;
        }
    }
    conclude(6, "200 convex sets: size(S_lo)² ≤ σ²/4, tops ≤ 4σ⁻²‖f‖₂², convex outputs", ok, t0);
}

#[test]
fn criterion_07_cz_identity_and_growth() {
    let t0 = Instant::now();
    let mut rng = subseeded(SEED, 107);
    let mut ok = true;

    // part one: the coefficient identity on 100 fixtures with nonempty E₁
    let mut ran = 0;
    let mut attempts = 0;
    while ran < 100 && attempts < 2000 {
        attempts += 1;
        let mut f1 = gen_nonzero_step(&mut rng, -5, 0, 12);
        f1 = f1.add(&StepFunction::from_cells(
            -5,
            [(rng.gen_range(0..32u64), ExactScalar::from_int(64))],
        ));
        let f2_support = DyadicUnion::from_intervals(&[DyadicInterval::unit()]);
        let exc = exceptional_sets(&f1, &f2_support, &Exponent::two()).expect("doubling search");
        if exc.e1.is_empty() {
            continue;
        }
        ran += 1;
        let set = gen_convex_set(&mut rng, 16);
        let good = good_quartiles(&set, &exc.union());
        let forest = Forest::of_singletons(&good);
        let tops = forest.tops_value();
        let mut a = BigRational::from_integer(1.into());
        while &a * &a < tops {
            a *= BigRational::from_integer(2.into());
        }
        let out = match cz_decompose(&forest, &f1, &exc.e1, &Exponent::finite(3, 1), &a) {
            Ok(o) => o,
            Err(_) => {
                ok = false;
                continue;
            }
        };
        if !verify_coefficient_identity(&out, &good, &f1) {
            ok = false;
        }
        let f2 = gen_nonzero_step(&mut rng, -4, 4, 8);
        let f3 = gen_nonzero_step(&mut rng, -4, 4, 8);
        if trilinear(&good, &f1, &f2, &f3) != trilinear(&good, &out.g1, &f2, &f3) {
            ok = false;
        }
    }
    if ran < 100 {
        ok = false;
    }

    // part two: the norm audit must not grow with the tops budget. The
    // stacked-frequency family has tops(S_A) = A² over one unit interval.
    let f1 = {
        let mut cells = vec![(0u64, ExactScalar::from_int(16))];
        cells.extend((1..256u64).map(|p| (p, ExactScalar::one())));
        StepFunction::from_cells(-8, cells)
    };
    let f2_support = DyadicUnion::from_intervals(&[DyadicInterval::unit()]);
    let exc = exceptional_sets(&f1, &f2_support, &Exponent::two()).expect("doubling search");
    assert!(!exc.e1.is_empty(), "the spike must produce a nonempty exceptional set");
    let ratios = |q: &Exponent| -> Vec<f64> {
        [1u64, 2, 4, 8, 16]
            .iter()
            .map(|a| {
                let set: BTreeSet<Quartile> = (0..a * a)
                    .map(|i| {
                        Quartile::new(DyadicInterval::unit(), DyadicInterval::new(2, i))
                            .expect("unit quartile")
                    })
                    .collect();
                let good = good_quartiles(&set, &exc.union());
                assert_eq!(good.len(), set.len(), "unit intervals are never swallowed");
                let forest = Forest::of_singletons(&good);
                let a_r = BigRational::from_integer((*a).into());
                let out = cz_decompose(&forest, &f1, &exc.e1, q, &a_r)
                    .expect("stacked family satisfies the hypotheses");
                if !verify_coefficient_identity(&out, &good, &f1) {
                    panic!("identity must hold on the stacked family");
                }
                let alpha = out.audit.alpha;
                out.g1.l2_norm_sq().to_f64() / (*a as f64).powf(2.0 * alpha)
            })
            .collect()
    };
    for q in [Exponent::two(), Exponent::finite(4, 1)] {
        let r = ratios(&q);
        for (i, v) in r.iter().enumerate() {
            if *v > 4.0 * r[0] {
                println!("  growth violation at A=2^{i} for q={q}: {v} vs base {}", r[0]);
                ok = false;
            }
        }
    }
    conclude(7, "CZ identity exact on 100 fixtures; ‖g₁‖₂²/A^{2α} flat in A", ok, t0);
}

#[test]
fn criterion_08_endpoint_growth() {
    let t0 = Instant::now();
    let cfg = EndpointConfig {
        p1_list: vec![
            "17/16".parse().unwrap(),
            "9/8".parse().unwrap(),
            "5/4".parse().unwrap(),
            "3/2".parse().unwrap(),
            "7/4".parse().unwrap(),
        ],
        depth: 14,
        scale_classes: 12,
        freq_band: 1,
        variant: Variant::Indicator,
        f2_shape: F2Shape::Lacunary,
        dilate: 0,
        seed: 1,
        max_spread: 8.0,
        min_scale: None,
    };
    let report = run_endpoint(&cfg);
    for row in &report.rows {
        println!("  p1={} K={:.5} K/q={:.5}", row.p1, row.k, row.k_over_q);
    }
    conclude(
        8,
        &format!("endpoint sweep spread {:.3} ≤ 8 over the p₁ grid", report.spread),
        report.pass,
        t0,
    );
}

#[test]
fn criterion_09_l2_variant_growth() {
    let t0 = Instant::now();
    let cfg = EndpointConfig {
        p1_list: vec![
            "17/16".parse().unwrap(),
            "9/8".parse().unwrap(),
            "5/4".parse().unwrap(),
            "3/2".parse().unwrap(),
            "7/4".parse().unwrap(),
        ],
        depth: 14,
        scale_classes: 12,
        freq_band: 1,
        variant: Variant::Sign,
        f2_shape: F2Shape::Unit,
        dilate: 0,
        seed: 3,
        max_spread: 8.0,
        min_scale: None,
    };
    let report = run_endpoint(&cfg);
    for row in &report.rows {
        println!("  p={} r={:.4} K={:.6} K/p'={:.6}", row.p1, row.r, row.k, row.k_over_q);
    }
    conclude(
        9,
        &format!("L² variant spread {:.3} ≤ 8 over the p grid", report.spread),
        report.pass,
        t0,
    );
}

#[test]
fn criterion_10_layer_cake() {
    let t0 = Instant::now();
    let mut rng = subseeded(SEED, 110);
    let mut ok = true;
    for _ in 0..100 {
        let f = gen_nonzero_step(&mut rng, -5, 3, 24);
        let d = layer_decompose(&f, &Exponent::two()).expect("p₂ = 2 is valid");
        if reconstruct(&d.layers, f.cell_scale()) != f {
            ok = false;
        }
        for l in &d.layers {
            if l.g.linf_norm_exact() > ExactScalar::one() {
                ok = false;
            }
        }
        // factor-4 comparability against the indicator-normalized Lorentz
        // functional (q/p)^{1/q}·‖f‖_{p₂,2/3}; the unnormalized functional
        // differs from the aggregate by the fixed factor 3^{3/2} already on
        // a single indicator, which the normalization absorbs
        if !(0.25..=4.0).contains(&d.normalized_ratio) {
            println!("  layer aggregate ratio {} outside [1/4, 4]", d.normalized_ratio);
            ok = false;
        }
    }
    conclude(10, "100 layer decompositions: exact reconstruction, aggregate within 4×", ok, t0);
}

#[test]
fn criterion_11_lorentz_machinery() {
    let t0 = Instant::now();
    let mut rng = subseeded(SEED, 111);
    let mut ok = true;
    for _ in 0..100 {
        let f = gen_nonzero_step(&mut rng, -5, 3, 24);
        for p in [Exponent::one(), Exponent::finite(4, 3), Exponent::two()] {
            let a = lorentz_quasinorm(&f, &p, &p).expect("valid p");
            let b = f.lp_norm(&p).expect("valid p");
            if (a - b).abs() > 1e-9 * b.abs() {
                ok = false;
            }
        }
        // the weak functional and the (r, ∞) quasi-norm share breakpoints
        let re = rearrange(&f);
        for r in [Exponent::finite(2, 3), Exponent::one(), Exponent::finite(3, 2)] {
            let w = re.weak_constant(&r).expect("valid r");
            let l = re.lorentz_quasinorm(&r, &Exponent::Infinity).expect("valid r");
            if w != l {
                ok = false;
            }
        }
    }
    conclude(11, "Lorentz (p,p) matches L^p to 1e-9; weak constant equals (r,∞)", ok, t0);
}

#[test]
fn criterion_12_determinism() {
    let t0 = Instant::now();
    let args = VerifyArgs {
        suite: "all".into(),
        seed: 42,
        trials: 25,
        out: std::path::PathBuf::from("/dev/null"),
    };
    let a = to_json(&build_verify_report(&args).expect("suite exists"));
    let b = to_json(&build_verify_report(&args).expect("suite exists"));
    let mut ok = a == b;
    let cfg = EndpointConfig {
        p1_list: vec!["5/4".parse().unwrap(), "3/2".parse().unwrap()],
        depth: 8,
        scale_classes: 4,
        freq_band: 1,
        variant: Variant::Sign,
        f2_shape: F2Shape::Unit,
        dilate: 0,
        seed: 7,
        max_spread: 1e9,
        min_scale: None,
    };
    let e1 = to_json(&run_endpoint(&cfg));
    let e2 = to_json(&run_endpoint(&cfg));
    ok &= e1 == e2;
    conclude(12, "reports are byte-identical under seed replay", ok, t0);
}
