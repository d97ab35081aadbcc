//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits nonzero if any failed.
//!
//! Run with `cargo test -p eigenbound-cli --test acceptance`.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::Instant;

use eigenbound::bounds::{
    baseline_bounds, bessel_first_zero, polyharmonic_bounds, sweep_bounds, sweep_heisenberg, BaselineInputs, BoundId,
    BoundReport, Problem,
};
use eigenbound::eigensolver::{
    extrapolated_eigenvalue, richardson, robin_reference_box, smallest_eigenvalue, GridOperator, OperatorKind,
    SolverOptions,
};
use eigenbound::geometry::{
    ball_fraction, sup_ball_fraction, Budget, DirectionSet, Domain, FractionEstimate, Inradius, SupConfig,
};
use eigenbound::heisenberg::{hyperplane_ball_fraction, HDomain, HPoint};
use eigenbound::lemma::{oracle_suite, owen_constant_exact, pointwise_check, polyharmonic_constant, LemmaParams, OracleConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// first zero of J_0, from tables
const J01: f64 = 2.404_825_557_695_773;

const TOL_SQUARE: f64 = 5e-3;
const TOL_DISK: f64 = 1e-2;
const TOL_ROBIN: f64 = 1e-2;
const SAFETY: f64 = 0.02;
const SAFETY_HEISENBERG: f64 = 0.05;
const TOL_RATIO_APPENDIX: f64 = 0.02;
const TOL_EXACT: f64 = 1e-9;
const TOL_RATIO_LIEB: f64 = 1e-6;
const TOL_PLATE: f64 = 0.02;
const TOL_ORACLE: f64 = 1e-12;
const TOL_CONSTANTS: f64 = 1e-12;
const TOL_BESSEL: f64 = 1e-10;
const TOL_ENCLOSURE: f64 = 0.05;
const TOL_POINTWISE: f64 = 1e-2;
const RADII: [f64; 4] = [0.6, 0.8, 1.0, 1.5];
const SIGMAS: [f64; 3] = [0.5, 1.0, 2.0];

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn square() -> Domain {
    Domain::cube(2, 1.0).unwrap()
}

fn certified(h: f64) -> SupConfig {
    SupConfig::enclosure(h)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn value_of(reports: &[BoundReport], id: BoundId, r: f64) -> f64 {
    reports.iter().find(|b| b.bound_id == id && b.inputs.r == Some(r)).map(|b| b.value).unwrap()
}

fn c1_analytic() -> Outcome {
    let t = Instant::now();
    let e = extrapolated_eigenvalue(&square(), OperatorKind::DirichletLaplace, 1.0 / 128.0, &SolverOptions::default())
        .map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let x = e.extrapolated.unwrap();
    ensure(rel(x, 2.0 * PI * PI) <= TOL_SQUARE, format!("square {x} vs {}", 2.0 * PI * PI))?;
    ensure(secs < 60.0, format!("square took {secs:.1} s"))?;
    let disk = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
    let op = GridOperator::dirichlet(&disk, 1.0 / 256.0).map_err(|e| e.to_string())?;
    let dv = smallest_eigenvalue(&op, &SolverOptions::default()).map_err(|e| e.to_string())?.value;
    ensure(rel(dv, J01 * J01) <= TOL_DISK, format!("disk {dv} vs {}", J01 * J01))?;
    Ok(format!("square {x:.6} in {secs:.1} s, disk {dv:.5}"))
}

fn robin_fd(sigma: f64) -> Result<f64, String> {
    let op = GridOperator::robin(&square(), sigma, 1.0 / 256.0).map_err(|e| e.to_string())?;
    Ok(smallest_eigenvalue(&op, &SolverOptions::default()).map_err(|e| e.to_string())?.value)
}

fn c2_robin(fd: &[f64]) -> Outcome {
    let mut msg = Vec::new();
    for (&sigma, &v) in SIGMAS.iter().zip(fd) {
        let exact = robin_reference_box(&[1.0, 1.0], sigma).map_err(|e| e.to_string())?;
        ensure(rel(v, exact) <= TOL_ROBIN, format!("sigma {sigma}: {v} vs {exact}"))?;
        msg.push(format!("σ={sigma}: {v:.5}/{exact:.5}"));
    }
    let one = robin_reference_box(&[1.0, 1.0], 1.0).unwrap();
    ensure(rel(one, 3.4138) < 1e-3, format!("reference at sigma 1 is {one}"))?;
    Ok(msg.join(", "))
}

fn c3_robin_bounds(fd: &[f64]) -> Outcome {
    let mut worst = 0.0f64;
    for (&sigma, &lambda) in SIGMAS.iter().zip(fd) {
        let reps = sweep_bounds(&square(), Problem::Robin { sigma }, &RADII, &certified(0.05)).map_err(|e| e.to_string())?;
        for b in &reps {
            ensure(b.valid, format!("{} at r={:?} is not certified", b.bound_id, b.inputs.r))?;
            ensure(
                b.value <= lambda * (1.0 + SAFETY),
                format!("sigma {sigma} r {:?}: {} > {lambda}", b.inputs.r, b.value),
            )?;
            worst = worst.max(b.value / lambda);
        }
    }
    let inp = BaselineInputs {
        d: 2,
        volume: Some((1.0, true)),
        inradius: Some(Inradius::exact(1.0)),
        convex: true,
        mean_convex: false,
        sigma: Some(100.0),
    };
    let base = baseline_bounds(&inp).map_err(|e| e.to_string())?;
    let get = |id| base.iter().find(|b| b.bound_id == id).unwrap().value;
    let ratio = get(BoundId::AppendixConvex) / get(BoundId::Kovarik);
    ensure(rel(ratio, 2.0) <= TOL_RATIO_APPENDIX, format!("appendix_convex/kovarik = {ratio}"))?;
    Ok(format!("max bound/λ = {worst:.4}, ratio at σR=100 = {ratio:.5}"))
}

fn c4_polyharmonic() -> Outcome {
    let lambda = 2.0 * PI * PI;
    let reps = sweep_bounds(&square(), Problem::Dirichlet, &RADII, &certified(0.05)).map_err(|e| e.to_string())?;
    for b in &reps {
        ensure(b.valid && b.value <= lambda * (1.0 + SAFETY), format!("{} at {:?}: {}", b.bound_id, b.inputs.r, b.value))?;
    }
    for &r in &RADII {
        let ratio = value_of(&reps, BoundId::Lieb, r) / value_of(&reps, BoundId::DaviesLieb1, r);
        ensure(rel(ratio, J01 * J01 / 0.5) <= TOL_RATIO_LIEB, format!("Lieb/eq1 at r={r}: {ratio}"))?;
    }
    let exact = polyharmonic_bounds(2, 1, 1.0, &FractionEstimate::exact(1.0 / PI).unwrap()).map_err(|e| e.to_string())?;
    let eq1 = exact.iter().find(|b| b.bound_id == BoundId::DaviesLieb1).unwrap().value;
    let lieb = exact.iter().find(|b| b.bound_id == BoundId::Lieb).unwrap().value;
    ensure(rel(eq1, 0.5 * (PI - 1.0)) <= TOL_EXACT, format!("eq1 at r=1: {eq1}"))?;
    ensure(rel(lieb, J01 * J01 * (PI - 1.0)) <= TOL_EXACT, format!("lieb at r=1: {lieb}"))?;
    ensure(rel(lieb, 12.3855) < 5e-4, format!("lieb at r=1: {lieb}"))?;

    let plate = extrapolated_eigenvalue(&square(), OperatorKind::BilaplaceClamped, 1.0 / 32.0, &SolverOptions::default())
        .map_err(|e| e.to_string())?;
    let x = plate.extrapolated.unwrap();
    ensure(rel(x, 1295.0) <= TOL_PLATE, format!("plate {x}"))?;
    let reference = x.min(plate.value);
    let reps2 =
        sweep_bounds(&square(), Problem::Polyharmonic { m: 2 }, &RADII, &certified(0.05)).map_err(|e| e.to_string())?;
    for b in &reps2 {
        ensure(b.valid && b.value <= reference * (1.0 + SAFETY), format!("m=2 {} at {:?}: {}", b.bound_id, b.inputs.r, b.value))?;
    }
    Ok(format!("eq1(1) = {eq1:.5}, lieb(1) = {lieb:.4}, plate λ ≈ {x:.1}"))
}

fn c5_heisenberg() -> Outcome {
    let hd = HDomain::new(Domain::open_box(vec![-1.0; 3], vec![1.0; 3]).unwrap(), 1).unwrap();
    let opts = SolverOptions::default();
    let solve = |h: f64| {
        GridOperator::heisenberg(&hd, h).and_then(|op| smallest_eigenvalue(&op, &opts)).map_err(|e| e.to_string())
    };
    let fine = solve(2.0 / 32.0)?.value;
    let coarse = solve(2.0 / 16.0)?.value;
    let lambda = fine.min(richardson(coarse, fine));
    let mut sup = certified(0.1);
    sup.cell = 0.025;
    let reps = sweep_heisenberg(&hd, &[0.5, 1.0, 2.0], &sup).map_err(|e| e.to_string())?;
    for b in &reps {
        ensure(b.valid && b.value <= lambda * (1.0 + SAFETY_HEISENBERG), format!("{} at {:?}: {} vs {lambda}", b.bound_id, b.inputs.r, b.value))?;
    }
    // at z = 0 the hyperplane is the horizontal slice t = const
    let slice = Domain::open_box(vec![-1.0; 2], vec![1.0; 2]).unwrap();
    for r in [1.2, 1.5] {
        for t in [0.0, 0.5] {
            let p = HPoint::new(vec![0.0, 0.0], t).unwrap();
            let mc = hyperplane_ball_fraction(&hd, &p, r, Budget::samples(40_000)).map_err(|e| e.to_string())?;
            let ex = ball_fraction(&slice, &[0.0, 0.0], r, Budget::Cells { spacing: 1e-3 }).map_err(|e| e.to_string())?;
            ensure(
                (mc.value - ex.value).abs() <= mc.error_radius + ex.error_radius,
                format!("slice r={r} t={t}: {} vs {}", mc.value, ex.value),
            )?;
        }
    }
    let top = reps.iter().map(|b| b.value).fold(0.0, f64::max);
    Ok(format!("λ ≈ {lambda:.4}, largest bound {top:.4}"))
}

fn c6_oracle() -> Outcome {
    let t = Instant::now();
    let out = oracle_suite(&OracleConfig::new(10_000, 20_240_601)).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let get = |name: &str| out.iter().find(|o| o.name == name).unwrap();
    for o in &out {
        ensure(o.passed(), format!("{}: {} failures", o.name, o.failures))?;
    }
    ensure(get("distribution").trials == 10_000, "distribution trial count")?;
    ensure(get("distribution").worst_margin >= -TOL_ORACLE, "distribution slack")?;
    ensure(get("bathtub_equality").worst_margin >= -TOL_ORACLE, "bathtub equality")?;
    ensure(get("elementary_tangency").worst_margin >= -TOL_ORACLE, "elementary tangency")?;
    ensure(get("elementary").trials >= 100_000, "elementary trial count")?;
    ensure(secs < 30.0, format!("took {secs:.1} s"))?;
    Ok(format!("{} checks in {secs:.2} s", out.iter().map(|o| o.trials).sum::<usize>()))
}

fn c7_pointwise() -> Outcome {
    let sq = square();
    let dirs = DirectionSet::new(2, 1440).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut count = 0;
    for _ in 0..100 {
        let x = [rng.random_range(0.005..0.995), rng.random_range(0.005..0.995)];
        for r in [0.6, 1.0] {
            for alpha in [2.0, 4.0] {
                let params = LemmaParams::new(alpha, 2, r, 0.5).unwrap();
                // a cell enclosure over-estimates ψ, which only lowers each right-hand side
                let c = pointwise_check(&sq, &x, &params, &dirs, Budget::Cells { spacing: 0.01 })
                    .map_err(|e| e.to_string())?;
                ensure(c.holds(TOL_POINTWISE * c.average), format!("x={x:?} r={r} α={alpha}: {c:?}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} cases"))
}

fn c8_constants() -> Outcome {
    for d in 2..=6usize {
        let (p, q) = owen_constant_exact(1, d).map_err(|e| e.to_string())?;
        ensure(4 * p == d as u128 * q, format!("C_1,{d} = {p}/{q}"))?;
    }
    ensure(owen_constant_exact(2, 2).unwrap() == (3, 2), "C_2,2")?;
    ensure(owen_constant_exact(2, 3).unwrap() == (45, 16), "C_2,3")?;
    let c12 = polyharmonic_constant(1, 2).unwrap();
    let c22 = polyharmonic_constant(2, 2).unwrap();
    ensure((c12 - 4.0).abs() <= TOL_CONSTANTS, format!("c_1,2 = {c12}"))?;
    ensure((c22 - 6.75).abs() <= TOL_CONSTANTS, format!("c_2,2 = {c22}"))?;
    let j = bessel_first_zero(0.5).map_err(|e| e.to_string())?;
    ensure((j - PI).abs() <= TOL_BESSEL, format!("j_1/2 = {j}"))?;
    Ok(format!("c_2,2 = {c22}, j_1/2 - π = {:.1e}", j - PI))
}

fn c9_enclosure() -> Outcome {
    let target = 1.0 / PI;
    let coarse = sup_ball_fraction(&square(), 1.0, &certified(0.2)).map_err(|e| e.to_string())?.value;
    let fine = sup_ball_fraction(&square(), 1.0, &certified(0.05)).map_err(|e| e.to_string())?.value;
    ensure(coarse >= target && fine >= target, format!("enclosures {coarse}, {fine} below 1/π"))?;
    ensure(fine <= target * (1.0 + TOL_ENCLOSURE), format!("fine enclosure {fine}"))?;
    Ok(format!("h=0.2: {coarse:.5}, h=0.05: {fine:.5}, 1/π = {target:.5}"))
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = dir.path().join("square.json");
    std::fs::write(&spec, r#"{"type": "box_union", "boxes": [{"lo": [0, 0], "hi": [1, 1]}], "convex": true}"#)
        .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_eigenbound"))
            .args(["validate", "--domain"])
            .arg(&spec)
            .args(["--r", "0.6,1.0,1.5", "--seed", "11", "--out"])
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), format!("validate exited with {status}"))?;
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], "reports differ")?;
    Ok(format!("{} identical bytes", outputs[0].len()))
}

fn main() -> ExitCode {
    let fd: Vec<f64> = SIGMAS.iter().map(|&s| robin_fd(s).unwrap_or(f64::NAN)).collect();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("analytic eigenvalues", Box::new(c1_analytic)),
        ("robin reference", Box::new(|| c2_robin(&fd))),
        ("robin bounds", Box::new(|| c3_robin_bounds(&fd))),
        ("polyharmonic bounds", Box::new(c4_polyharmonic)),
        ("heisenberg bounds", Box::new(c5_heisenberg)),
        ("lemma oracles", Box::new(c6_oracle)),
        ("pointwise lemma", Box::new(c7_pointwise)),
        ("constants", Box::new(c8_constants)),
        ("enclosure soundness", Box::new(c9_enclosure)),
        ("determinism", Box::new(c10_determinism)),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({why})", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
