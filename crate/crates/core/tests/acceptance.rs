//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use fibercz::czd::root_saturation_level;
use fibercz::filters::certify_regularity;
use fibercz::generate::{random_dense, random_fiber, random_tensor};
use fibercz::harness::{run_verify, Experiment, ExperimentConfig, Suite, CONDITIONAL_NOTE};
use fibercz::{
    cz_decompose_1d, dual_t1, dual_t2, fiberwise_decompose, hl_maximal_axis, paraproduct_t, paraproduct_t_fiberwise,
    Axis, Grid1D, MotherFilter, ParaproductConfig, ScaleLadder,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sum_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn cz_invariants() -> Outcome {
    let start = Instant::now();
    let grid = Grid1D::spanning(0.0, 1.0, 1024).unwrap();
    let h = grid.step();
    let mut worst = [0.0_f64; 5];
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_fiber(&mut rng, &grid);
        let (lo, hi) = (root_saturation_level(&f), f.sup_norm());
        let f_l1 = h * sum_abs(f.values());
        for k in 0..8 {
            let gamma = lo * (hi / lo).powf(k as f64 / 7.0);
            let d = cz_decompose_1d(&f, gamma).map_err(|e| e.to_string())?;
            let mut rebuilt = d.good().values().to_vec();
            let mut cover = 0.0;
            for a in d.atoms() {
                let range = grid.interval_indices(a.interval());
                cover += range.len() as f64 * h;
                let (sum, scale) = range.clone().zip(a.values()).fold((0.0, 0.0), |(s, m), (i, v)| {
                    rebuilt[i] += v;
                    (s + v, m + f.values()[i].abs().max(v.abs()))
                });
                worst[4] = worst[4].max(sum.abs() / scale.max(f64::MIN_POSITIVE));
            }
            let err = f.values().iter().zip(&rebuilt).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            worst[0] = worst[0].max(err / hi);
            worst[1] = worst[1].max(max_abs(d.good().values()) / gamma);
            worst[2] = worst[2].max(h * sum_abs(d.good().values()) / f_l1);
            worst[3] = worst[3].max(gamma * cover / f_l1);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!(
        "reconstruction {:.2e}, sup(b)/γ {:.6}, |b|₁/|f|₁ {:.6}, γΣ|Q|/|f|₁ {:.4}, atom mean {:.2e}, {elapsed:.2}s",
        worst[0], worst[1], worst[2], worst[3], worst[4]
    );
    ensure(
        worst[0] <= 1e-12
            && worst[1] <= 2.0 * (1.0 + 1e-12)
            && worst[2] <= 1.0 + 1e-12
            && worst[3] <= 1.0
            && worst[4] <= 1e-10
            && elapsed <= 10.0,
        detail,
    )
}

fn fiber_consistency() -> Outcome {
    let grid = Grid1D::spanning(0.0, 1.0, 64).unwrap();
    let cfg = ParaproductConfig::standard(ScaleLadder::for_grid(&grid).unwrap());
    let mut row_mismatches = 0;
    let mut t_err = 0.0_f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let f = random_tensor(&mut rng, &grid, &grid);
        let gamma = f.terms().iter().map(|t| root_saturation_level(t.fiber())).fold(0.0, f64::max) * 2.0;
        let d = fiberwise_decompose(&f, gamma).map_err(|e| e.to_string())?;
        let good = d.good_part().materialize();
        for n in 0..64 {
            let expected = match f.fiber_at(n) {
                Some(fiber) => cz_decompose_1d(fiber, gamma).map_err(|e| e.to_string())?.good().values().to_vec(),
                None => vec![0.0; 64],
            };
            if good.row(n) != &expected[..] {
                row_mismatches += 1;
            }
        }
        let g = random_dense(&mut rng, &grid, &grid);
        let fast = paraproduct_t_fiberwise(&f, &g, &cfg).map_err(|e| e.to_string())?;
        let dense = paraproduct_t(&f.materialize(), &g, &cfg).map_err(|e| e.to_string())?;
        t_err = t_err.max(fast.max_abs_diff(&dense).unwrap());
    }
    ensure(
        row_mismatches == 0 && t_err <= 1e-12,
        format!("row mismatches {row_mismatches}, fiber-wise vs dense T {t_err:.2e}"),
    )
}

fn adjointness() -> Outcome {
    let grid = Grid1D::spanning(0.0, 1.0, 32).unwrap();
    let cfg = ParaproductConfig::standard(ScaleLadder::for_grid(&grid).unwrap());
    let mut worst = 0.0_f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let f = random_dense(&mut rng, &grid, &grid);
        let g = random_dense(&mut rng, &grid, &grid);
        let h = random_dense(&mut rng, &grid, &grid);
        let t = paraproduct_t(&f, &g, &cfg).and_then(|t| t.inner(&h)).map_err(|e| e.to_string())?;
        let t1 = dual_t1(&h, &g, &cfg).and_then(|d| f.inner(&d)).map_err(|e| e.to_string())?;
        let t2 = dual_t2(&f, &h, &cfg).and_then(|d| g.inner(&d)).map_err(|e| e.to_string())?;
        for other in [t1, t2] {
            worst = worst.max((t - other).abs() / t.abs().max(other.abs()));
        }
    }
    ensure(worst <= 1e-10, format!("max relative error {worst:.2e}"))
}

fn brute_maximal(g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0_f64; g.len()];
    for l in 0..g.len() {
        for r in l..g.len() {
            let mut sum = 0.0;
            for v in &g[l..=r] {
                sum += v.abs();
            }
            let avg = sum / (r - l + 1) as f64;
            for o in &mut out[l..=r] {
                *o = o.max(avg);
            }
        }
    }
    out
}

fn maximal_oracle() -> Outcome {
    let mut mismatches = 0;
    let mut slices = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let long = 1usize << rng.random_range(0..=8);
        let short = 1usize << rng.random_range(0..=2);
        let (nx, ny) = if seed % 2 == 0 { (long, short) } else { (short, long) };
        let gx = Grid1D::spanning(0.0, 1.0, nx).unwrap();
        let gy = Grid1D::spanning(0.0, 1.0, ny).unwrap();
        let g = random_dense(&mut rng, &gx, &gy);
        let mx = hl_maximal_axis(&g, Axis::X);
        let my = hl_maximal_axis(&g, Axis::Y);
        for n in 0..ny {
            slices += 1;
            mismatches += usize::from(mx.row(n) != &brute_maximal(g.row(n))[..]);
        }
        for m in 0..nx {
            slices += 1;
            mismatches += usize::from(my.column(m) != brute_maximal(&g.column(m)));
        }
    }
    ensure(mismatches == 0, format!("{slices} slices, {mismatches} mismatches"))
}

fn run(experiment: Experiment, seed: u64) -> Result<fibercz::harness::ExperimentReport, String> {
    let cfg = ExperimentConfig {
        seed,
        ..ExperimentConfig::default()
    };
    experiment.run(&cfg).map_err(|e| e.to_string())
}

fn failed_checks(report: &fibercz::harness::ExperimentReport) -> Vec<String> {
    report.checks.iter().filter(|c| !c.passed).map(|c| format!("{}={}", c.name, c.value)).collect()
}

fn good_part_bound() -> Outcome {
    let r = run(Experiment::GoodPart, 0)?;
    let fit = r.fit.as_ref().ok_or("no fit")?;
    let variation = r.checks.iter().find(|c| c.name == "constant_variation").map(|c| c.value).unwrap_or(f64::NAN);
    ensure(
        r.points.len() == 8 && (fit.slope - 0.5).abs() <= 0.1 && variation <= 2.0 && r.passed,
        format!("slope {:.4}, constant variation {variation:.3}, {} points", fit.slope, r.points.len()),
    )
}

fn bad_set_and_majorant() -> Outcome {
    let bad = run(Experiment::BadSet, 0)?;
    let maj = run(Experiment::HL1, 0)?;
    let bad_max = bad.points.iter().fold(0.0_f64, |m, p| m.max(p.constant));
    let maj_max = maj.points.iter().fold(0.0_f64, |m, p| m.max(p.constant));
    let slopes = [&bad, &maj].map(|r| r.fit.as_ref().map_or(f64::NAN, |f| f.slope));
    ensure(
        bad_max <= 4.0 && maj_max <= 2.0 * 1.1 && slopes.iter().all(|s| *s >= -1.1) && bad.passed && maj.passed,
        format!(
            "bad-set constant {bad_max:.3} (slope {:.3}), majorant constant {maj_max:.3} (slope {:.3}) {:?}",
            slopes[0],
            slopes[1],
            [failed_checks(&bad), failed_checks(&maj)].concat()
        ),
    )
}

fn kernel_regularity() -> Outcome {
    let (psi, _) = MotherFilter::standard_pair();
    let grid = Grid1D::spanning(0.0, 1.0, 1024).unwrap();
    let ladder = ScaleLadder::for_grid(&grid).unwrap();
    let cert = certify_regularity(&psi, &ladder, &grid, 2).map_err(|e| e.to_string())?;
    let atom = run(Experiment::AtomDecay, 0)?;
    let shape = (atom.config.grid_x.count(), atom.config.grid_y.count());
    ensure(
        cert.variation <= 2.0 && atom.passed && shape == (128, 16),
        format!(
            "regularity variation {:.3} (certified C {:.3}), atom decay {:?} on {}x{} {:?}",
            cert.variation,
            cert.certified,
            atom.checks.iter().find(|c| c.name == "max_domination_ratio").map(|c| c.value),
            shape.0,
            shape.1,
            failed_checks(&atom)
        ),
    )
}

fn weak_type_tail() -> Outcome {
    let mut slopes = Vec::new();
    let mut all = true;
    for seed in 0..10 {
        let r = run(Experiment::WeakType, seed)?;
        let s = r.constants.get("s").copied().unwrap_or(f64::NAN);
        all &= (s - 2.0 / 3.0).abs() < 1e-12 && r.header.contains(CONDITIONAL_NOTE) && r.passed;
        slopes.push(r.fit.as_ref().map_or(f64::NAN, |f| f.slope));
    }
    let worst = slopes.iter().cloned().fold(f64::MIN, f64::max);
    ensure(
        all && worst <= -2.0 / 3.0 + 0.2,
        format!("max tail slope {worst:.3} over 10 pairs (limit {:.3}); conditional note in header", -2.0 / 3.0 + 0.2),
    )
}

fn outputs() -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for seed in [0, 7] {
        out.push(run_verify(Suite::All, seed).and_then(|r| r.to_json()).map_err(|e| e.to_string())?);
    }
    for e in Experiment::ALL {
        out.push(run(e, 1)?.to_json().map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(outputs)?;
    let four = pool(4).install(outputs)?;
    let again = pool(4).install(outputs)?;
    ensure(
        one == four && four == again,
        format!("{} verify/sweep documents identical across 1 and 4 threads and repeats", one.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("CZ invariant suite", cz_invariants),
        ("fiber-wise consistency", fiber_consistency),
        ("adjointness", adjointness),
        ("maximal-function oracle", maximal_oracle),
        ("good-part bound", good_part_bound),
        ("bad-set and majorant bounds", bad_set_and_majorant),
        ("kernel regularity and atom decay", kernel_regularity),
        ("weak-type tail consistency", weak_type_tail),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {} {name}: {detail}", i + 1);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
