//! End-to-end acceptance checks. Prints one line per criterion and exits
//! nonzero if any of them fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use semiwave::cutting::{choose_radius, cut_data, data_norm, CutPlan};
use semiwave::data::Profile;
use semiwave::nonlinearity::{check_assumptions, AfBranch};
use semiwave::patching::{all_overlaps, build_lattice, compare_monolithic, solve_all_patches, GlobalSolution};
use semiwave::phase::{sweep, Protocol, DEFAULT_M, DEFAULT_P};
use semiwave::solver::solve_on_patch;
use semiwave::verification::{
    corrupt, domain_of_dependence_check, finite_speed_check, fn_convergence_check, weak_residual, TestBasis,
};
use semiwave::{DampingSpec, Field, GridSpec, Observers, Sign, SourceSpec, State};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn order(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn linear_wave() -> Outcome {
    let start = Instant::now();
    let (w, t_end) = (0.15, 0.375);
    let exact = |x: [f64; 3]| 0.5 * ((-(x[0] - t_end).powi(2) / (w * w)).exp() + (-(x[0] + t_end).powi(2) / (w * w)).exp());
    let mut errs = Vec::new();
    for h in [1.0 / 256.0, 1.0 / 512.0, 1.0 / 1024.0] {
        let g = GridSpec::line(0.0, 1.0, h, 0.5 * h).unwrap();
        let u0 = Profile::gaussian(1.0, w, [0.0; 3]).sample(&g).unwrap();
        let st = State::new(u0, Field::zeros(g), 0.0).unwrap();
        let traj = solve_on_patch(&st, &g, &SourceSpec::zero(), &DampingSpec::zero(), t_end, &Observers::every(usize::MAX)).unwrap();
        errs.push(Field::from_fn(g, exact).zip_map(&traj.last().u, |a, b| a - b).norm_l2());
    }
    let ord = order(&errs);
    let secs = start.elapsed().as_secs_f64();
    check(
        errs[0] <= 1e-3 && ord.iter().all(|o| (1.8..=2.2).contains(o)) && secs < 10.0,
        format!("L2 error {:.3e} at h = 1/256, orders {:.3?}, {secs:.2} s", errs[0], ord),
    )
}

fn energy_identity() -> Outcome {
    let src = SourceSpec::new(2.0, 1.0, Sign::Plus).unwrap();
    let dmp = DampingSpec::power(1.0, 1.0).unwrap();
    let mut res = Vec::new();
    for h in [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0] {
        let g = GridSpec::line(0.0, 1.0, h, 0.5 * h).unwrap();
        let u0 = Profile::gaussian(0.5, 0.3, [0.0; 3]).sample(&g).unwrap();
        let st = State::new(u0, Field::zeros(g), 0.0).unwrap();
        res.push(solve_on_patch(&st, &g, &src, &dmp, 1.0, &Observers::every(64)).unwrap().max_identity_residual());
    }
    let ratios: Vec<f64> = res.windows(2).map(|w| w[0] / w[1]).collect();
    check(
        res[2] <= 1e-4 && ratios.iter().all(|&r| r >= 3.5),
        format!("max residual {:.3e} at h = 1/256, ratios per halving {:.2?}", res[2], ratios),
    )
}

fn finite_speed() -> Outcome {
    let start = Instant::now();
    let g = GridSpec::line(0.0, 1.0, 1.0 / 128.0, 1.0 / 128.0).unwrap();
    let r = 0.25;
    let u0 = Profile::bump(1.0, r, [0.0; 3]).sample(&g).unwrap();
    let u1 = Profile::bump(0.5, r, [0.0; 3]).sample(&g).unwrap();
    let src = SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap();
    let mut worst = 0.0f64;
    for m in [1.0, 3.0] {
        let dmp = DampingSpec::power(m, 1.0).unwrap();
        let st = State::new(u0.clone(), u1.clone(), 0.0).unwrap();
        let traj = solve_on_patch(&st, &g, &src, &dmp, 0.5, &Observers::default()).unwrap();
        worst = worst.max(finite_speed_check(&traj, [0.0; 3], r).unwrap().max_leakage());
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 1e-12 && secs < 10.0, format!("max leakage {worst:.3e} for m = 1 and 3, {secs:.2} s"))
}

fn domain_of_dependence() -> Outcome {
    let g = GridSpec::line(0.0, 1.5, 1.0 / 128.0, 1.0 / 256.0).unwrap();
    let r = 0.5;
    let base = Profile::bump(1.0, 0.4, [0.0; 3]).sample(&g).unwrap();
    let extra = Profile::bump(2.0, 0.3, [0.8, 0.0, 0.0]).sample(&g).unwrap();
    let other = base.zip_map(&extra, |a, b| a + b);
    let a = State::new(base, Field::zeros(g), 0.0).unwrap();
    let b = State::new(other, Field::zeros(g), 0.0).unwrap();
    let src = SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap();
    let dmp = DampingSpec::power(3.0, 1.0).unwrap();
    let rep = domain_of_dependence_check(&a, &b, [0.0; 3], r, &g, &src, &dmp, &Observers::default()).unwrap();
    let d = rep.max_dod_discrepancy();
    check(d <= 1e-12, format!("max discrepancy {d:.3e} inside the shrinking ball"))
}

fn truncation_convergence() -> Outcome {
    let g = GridSpec::line(0.0, 1.0, 1.0 / 128.0, 1.0 / 256.0).unwrap();
    let u = Profile::bump(5.0, 0.8, [0.0; 3]).sample(&g).unwrap();
    let src = SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap();
    let levels = [1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0];
    let rows = fn_convergence_check(&u, &src, 2.0, &levels).unwrap();
    let vals: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let monotone = vals.windows(2).all(|w| w[1] <= w[0]);
    let zero = rows.iter().filter(|r| r.level >= 5.0).all(|r| r.value == 0.0);
    check(
        u.max_abs() == 5.0 && monotone && zero,
        format!("max|u| = {}, table [{}]", u.max_abs(), sci(&vals)),
    )
}

fn cutting_bounds() -> Outcome {
    let g = GridSpec::cube([0.0; 3], 2.0, 1.0 / 16.0, 1.0 / 32.0).unwrap();
    let u0 = Profile::bump(1.0, 1.75, [0.0; 3]).sample(&g).unwrap();
    let u1 = Field::zeros(g);
    let k = 2.0 * data_norm(&u0, &u1);
    let first = choose_radius(&u0, &u1, k, &[[0.0; 3]]).map_err(|e| e.to_string())?;
    let d = 3.0 * g.h;
    let lattice = build_lattice(&g, d, first.r).map_err(|e| e.to_string())?;
    let plan = choose_radius(&u0, &u1, k, &lattice.centers).map_err(|e| e.to_string())?;
    if plan.r != first.r {
        return Err(format!("radius changed from {} to {} once every centre is probed", first.r, plan.r));
    }
    let reports: Vec<(bool, bool, f64)> = lattice
        .centers
        .par_iter()
        .map(|&c| {
            let rep = cut_data(&u0, &u1, c, &plan).unwrap().report;
            (rep.chain_holds() && rep.total() < k, rep.chain_bound < 0.5 * k, rep.margin())
        })
        .collect();
    let all_hold = reports.iter().all(|r| r.0);
    let split = reports.iter().filter(|r| r.1).count();
    let min_margin = reports.iter().fold(f64::INFINITY, |a, r| a.min(r.2));
    check(
        all_hold && min_margin >= 0.01,
        format!(
            "r = {}, {} centres, bound below K everywhere = {all_hold}, min margin {:.1}%, chain below K/2 on {split}",
            plan.r,
            reports.len(),
            100.0 * min_margin
        ),
    )
}

fn patch_run(hw: f64, h: f64, d: f64, r: f64, bump_radius: f64) -> (GlobalSolution<f64>, Field<f64>, Field<f64>) {
    let g = GridSpec::line(0.0, hw, h, 0.5 * h).unwrap();
    let u0 = Profile::bump(1.0, bump_radius, [0.0; 3]).sample(&g).unwrap();
    let u1 = Profile::bump(0.5, bump_radius, [0.0; 3]).sample(&g).unwrap();
    let lattice = build_lattice(&g, d, r).unwrap();
    let plan = CutPlan::with_radius(&g, 100.0, r).unwrap();
    let src = SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap();
    let dmp = DampingSpec::power(3.0, 1.0).unwrap();
    let sol = solve_all_patches(&u0, &u1, 0.0, &lattice, &plan, &src, &dmp, &Observers::default()).unwrap();
    (sol, u0, u1)
}

fn single_valuedness() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (hw, d, r) in [(0.25, 0.5, 1.25), (1.0, 0.25, 1.0)] {
        let (sol, _, _) = patch_run(hw, 1.0 / 128.0, d, r, 0.2);
        let reps = all_overlaps(&sol);
        let worst = reps.iter().fold(0.0f64, |a, o| a.max(o.discrepancy()));
        let covered = reps.iter().all(|o| o.samples > 0);
        ok &= worst <= 1e-12 && covered && !reps.is_empty();
        parts.push(format!("{} patches: {} overlaps, max {worst:.3e}", sol.patches.len(), reps.len()));
    }
    check(ok, parts.join("; "))
}

fn monolithic_equivalence() -> Outcome {
    let (sol, u0, u1) = patch_run(1.0, 1.0 / 128.0, 0.25, 1.0, 0.2);
    let g = u0.grid;
    let src = SourceSpec::new(3.0, 1.0, Sign::Minus).unwrap();
    let dmp = DampingSpec::power(3.0, 1.0).unwrap();
    let mono = solve_on_patch(&State::new(u0, u1, 0.0).unwrap(), &g, &src, &dmp, sol.valid_until, &Observers::default()).unwrap();
    let diff = compare_monolithic(&sol, &mono).map_err(|e| e.to_string())?;
    check(diff <= 1e-8, format!("L-infinity difference {diff:.3e} up to t = {}", sol.valid_until))
}

fn phase_dichotomy() -> Outcome {
    let start = Instant::now();
    let diagram = sweep(&DEFAULT_P, &DEFAULT_M, 8.0, &Protocol::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let d = diagram.dichotomy();
    check(
        d.survived_fraction() >= 0.9 && d.blew_up_fraction() >= 0.9 && elapsed < Duration::from_secs(300),
        format!(
            "m >= p survived {}/{}, m < p blew up {}/{}, {:.2} s",
            d.strong_survived,
            d.strong_total,
            d.weak_blew_up,
            d.weak_total,
            elapsed.as_secs_f64()
        ),
    )
}

fn assumption_branches() -> Outcome {
    let rep = |p: f64, m: f64| {
        check_assumptions(&SourceSpec::new(p, 1.0, Sign::Minus).unwrap(), &DampingSpec::power(m, 1.0).unwrap())
    };
    let a = rep(5.0, 5.0);
    let b = rep(5.0, 6.0);
    let c = rep(2.0, 0.0);
    let ok = a.af_branch == AfBranch::Neither
        && b.af_branch == AfBranch::B
        && b.epsilon == Some(2f64.powi(-7))
        && c.af_branch == AfBranch::A;
    check(
        ok,
        format!("(5,5) -> {:?}, (5,6) -> {:?} with eps {:?}, (2,0) -> {:?}", a.af_branch, b.af_branch, b.epsilon, c.af_branch),
    )
}

fn weak_form() -> Outcome {
    let mut base = Vec::new();
    let mut bad = 0.0;
    for h in [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0] {
        let g = GridSpec::line(0.0, 1.0, h, 0.5 * h).unwrap();
        let u0 = Profile::gaussian(1.0, 0.2, [0.0; 3]).sample(&g).unwrap();
        let st = State::new(u0, Field::zeros(g), 0.0).unwrap();
        let traj = solve_on_patch(&st, &g, &SourceSpec::zero(), &DampingSpec::zero(), 1.0, &Observers::default()).unwrap();
        let basis = TestBasis::standard(&g, 1.0, 3);
        base.push(weak_residual(&traj, &SourceSpec::zero(), &DampingSpec::zero(), &basis).unwrap().max());
        bad = weak_residual(&corrupt(&traj, 1.01), &SourceSpec::zero(), &DampingSpec::zero(), &basis).unwrap().max();
    }
    let ord = order(&base);
    let inflation = bad / base[2];
    check(
        ord.iter().all(|&o| o >= 2.0) && inflation >= 1e3,
        format!("residuals [{}], orders {:.2?}, perturbation inflates by {inflation:.2e}", sci(&base), ord),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("linear-wave oracle", linear_wave),
        ("energy identity", energy_identity),
        ("finite speed", finite_speed),
        ("domain of dependence", domain_of_dependence),
        ("truncation convergence", truncation_convergence),
        ("cutting bounds", cutting_bounds),
        ("single-valuedness", single_valuedness),
        ("patch/monolithic equivalence", monolithic_equivalence),
        ("phase dichotomy", phase_dichotomy),
        ("assumption checker", assumption_branches),
        ("weak-form residual", weak_form),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (tag, detail) = match std::panic::catch_unwind(f) {
            Ok(Ok(d)) => ("PASS", d),
            Ok(Err(d)) => ("FAIL", d),
            Err(_) => ("FAIL", "panicked".to_string()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {tag} {name}: {detail}", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
