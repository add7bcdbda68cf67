//! End-to-end acceptance gate: ten numbered criteria, one summary line
//! each. Tolerances are pinned here and nowhere else. Criteria known to
//! sit outside what this implementation reproduces stay in the suite and
//! fail loudly rather than being relaxed.

use std::process::Command;
use std::sync::Arc;

use superband::analysis::{
    analytic_special_momenta, asymptotic_shape_check, continuity_residual, flux_difference,
    gaussian_spread, interference_time, lobe_slope, critical_alpha, momentum_moments,
    position_moments,
};
use superband::bohmian::{
    asymptotic_velocities, equivariance_distance, gaussian_trajectory, integrate_trajectories,
    sample_initial_positions, velocity_spectrum_correlation, InitialMode, IntegrateOptions,
    DEFAULT_INTERVAL,
};
use superband::classical::{
    init_ensemble, is_ordered, ordering_time, showcase_preset, ConstraintMode,
};
use superband::grid::{MomentumSpectrum, SimGrid};
use superband::synthesis::{
    analytic_gaussian_density, chirped_gaussian_spectrum, momentum_distribution, SynthesisParams,
};

fn params(alpha: f64) -> SynthesisParams {
    SynthesisParams {
        alpha,
        ..SynthesisParams::default()
    }
}

fn default_grid() -> Arc<SimGrid> {
    Arc::new(SimGrid::new(-512.0, 512.0, 1 << 18).unwrap())
}

fn spectrum(alpha: f64) -> MomentumSpectrum {
    momentum_distribution(&params(alpha), &default_grid()).unwrap()
}

/// Collects named sub-check failures, prints the one-line verdict, and
/// panics with the full list when anything failed.
struct Criterion {
    id: u32,
    name: &'static str,
    failures: Vec<String>,
}

impl Criterion {
    fn new(id: u32, name: &'static str) -> Self {
        Self {
            id,
            name,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, label: &str, ok: bool, detail: String) {
        if !ok {
            self.failures.push(format!("{label}: {detail}"));
        }
    }

    fn finish(self) {
        let verdict = if self.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!("ACCEPTANCE {} ({}): {}", self.id, self.name, verdict);
        assert!(
            self.failures.is_empty(),
            "criterion {} ({}) failed:\n  {}",
            self.id,
            self.name,
            self.failures.join("\n  ")
        );
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_superband"))
}

// -------------------------------------------------------------------------

#[test]
fn criterion_01_normalization_and_unitarity() {
    let mut c = Criterion::new(1, "normalization and unitarity");
    for alpha in [0.0, 1.0, 1.8] {
        let spec = spectrum(alpha);
        let err = (spec.norm_sq() - 1.0).abs();
        c.check(
            &format!("spectrum norm alpha={alpha}"),
            err < 1e-10,
            format!("|norm - 1| = {err:.3e}"),
        );
    }
    let spec = spectrum(1.0);
    for t in [-50.0, -17.3, 0.0, 3.7, 50.0] {
        let drift = (spec.propagate(&params(1.0), t).unwrap().norm_sq() - 1.0).abs();
        c.check(
            &format!("norm drift t={t}"),
            drift < 1e-10,
            format!("|norm - 1| = {drift:.3e}"),
        );
    }
    c.finish();
}

#[test]
fn criterion_02_extremum_table_reproduction() {
    let mut c = Criterion::new(2, "extremum table reproduction");
    let out = tempdir("c02");
    let status = bin()
        .args(["--out", &out, "table1"])
        .status()
        .expect("binary runs");
    let diff: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(format!("{out}/table1_diff.json")).unwrap(),
    )
    .unwrap();
    let report = &diff["report"];
    for row in report["rows"].as_array().unwrap() {
        let (alpha, t) = (&row["alpha"], &row["t"]);
        for cell in row["cells"].as_array().unwrap() {
            c.check(
                &format!("alpha={alpha} t={t} {}", cell["cell"].as_str().unwrap()),
                cell["pass"].as_bool().unwrap(),
                format!(
                    "value {} vs reference {} (tol {})",
                    cell["value"], cell["reference"], cell["tolerance"]
                ),
            );
        }
    }
    let consistent = report["pass"].as_bool().unwrap() == (status.code() == Some(0));
    c.check(
        "exit code mirrors the diff verdict",
        consistent,
        format!("pass={} exit={:?}", report["pass"], status.code()),
    );
    c.finish();
}

#[test]
fn criterion_03_weight_ratio_anchors() {
    let mut c = Criterion::new(3, "weight-ratio anchors");
    let p = params(1.0);
    let r1 = analytic_special_momenta(&p, 1.0, 48.0, 65_537)
        .unwrap()
        .superosc
        .weight_ratio;
    let log = r1.log10();
    c.check(
        "t=1 ratio within a decade of 1e-60",
        (-61.0..=-59.0).contains(&log),
        format!("ratio = {r1:.3e} (log10 = {log:.2})"),
    );
    let r4 = analytic_special_momenta(&p, 4.0, 48.0, 65_537)
        .unwrap()
        .superosc
        .weight_ratio;
    c.check(
        "t=4 ratio within 30% of 7e-4",
        (r4 - 7e-4).abs() <= 0.30 * 7e-4,
        format!("ratio = {r4:.3e}"),
    );
    c.finish();
}

/// Flux planes for one alpha: the sub/super extremum positions at t = 3,
/// ordered left < right.
fn flux_planes(p: &SynthesisParams) -> (f64, f64) {
    let pair = analytic_special_momenta(p, 3.0, 48.0, 65_537).unwrap();
    let (a, b) = (pair.subosc.x_at, pair.superosc.x_at);
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[test]
fn criterion_04_flux_signs_hard_values_soft() {
    let mut c = Criterion::new(4, "flux signs (hard) and values (soft)");
    for (alpha, sign, targets) in [(1.0, -1.0, (0.0699, 0.0951)), (1.8, 1.0, (0.0571, 0.0484))] {
        let p = params(alpha);
        let spec = spectrum(alpha);
        let (xl, xr) = flux_planes(&p);
        let d = flux_difference(&spec, &p, xl, xr, 2.8, 3.2, 64).unwrap();
        c.check(
            &format!("delta sign alpha={alpha}"),
            d.delta * sign > 0.0,
            format!("delta = {:+.4e}, expected sign {sign:+}", d.delta),
        );
        // soft targets: reported, never failing
        for (side, flux, target) in [
            ("left", d.left.by_current, targets.0),
            ("right", d.right.by_current, targets.1),
        ] {
            if (flux - target).abs() > 0.15 * target {
                println!(
                    "  note: alpha={alpha} {side} flux {flux:.4} misses soft target \
                     {target} by more than 15% (plane placement is a reconstruction)"
                );
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_05_flux_route_identity_and_continuity() {
    let mut c = Criterion::new(5, "flux route identity and continuity");
    for alpha in [1.0, 1.8] {
        let p = params(alpha);
        let spec = spectrum(alpha);
        let (xl, xr) = flux_planes(&p);
        let d = flux_difference(&spec, &p, xl, xr, 2.8, 3.2, 64).unwrap();
        for (side, rep) in [("left", &d.left), ("right", &d.right)] {
            let gap = (rep.by_current - rep.by_probability).abs();
            c.check(
                &format!("route gap alpha={alpha} {side}"),
                gap < 1e-6,
                format!("gap = {gap:.3e}"),
            );
        }
    }
    let spec = spectrum(1.0);
    let r_coarse = continuity_residual(&spec, &params(1.0), 3.0, 1e-3).unwrap();
    let r_fine = continuity_residual(&spec, &params(1.0), 3.0, 5e-4).unwrap();
    c.check(
        "continuity residual below 1e-5",
        r_coarse < 1e-5,
        format!("residual = {r_coarse:.3e}"),
    );
    c.check(
        "second-order decay under halving",
        r_fine < r_coarse / 3.0,
        format!("coarse {r_coarse:.3e} vs fine {r_fine:.3e}"),
    );
    c.finish();
}

#[test]
fn criterion_06_gaussian_oracles() {
    let mut c = Criterion::new(6, "gaussian oracles");
    let p = params(0.0);
    let spec = spectrum(0.0);
    for t in [0.0, 1.0, 3.0] {
        let field = spec.propagate(&p, t).unwrap();
        let grid = field.grid();
        let worst = field
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(j, z)| (z.norm_sqr() - analytic_gaussian_density(&p, grid.x(j), t)).abs())
            .fold(0.0_f64, f64::max);
        c.check(
            &format!("pointwise density t={t}"),
            worst < 1e-8,
            format!("worst deviation = {worst:.3e}"),
        );
        let (_, dx) = position_moments(&field);
        let expected = gaussian_spread(1.0 / p.delta_kappa, t, p.mass, p.hbar);
        c.check(
            &format!("spread law t={t}"),
            (dx - expected).abs() < 1e-8,
            format!("measured {dx:.12} vs {expected:.12}"),
        );
    }
    for gamma in [1.0, 3.0] {
        let chirped = SynthesisParams {
            gamma: Some(gamma),
            ..p.clone()
        };
        let spec = chirped_gaussian_spectrum(&chirped, &default_grid()).unwrap();
        let (_, dkappa) = momentum_moments(&spec);
        let field = spec.propagate(&chirped, gamma).unwrap();
        let (_, dx) = position_moments(&field);
        let product = dx * chirped.hbar * dkappa;
        c.check(
            &format!("minimum uncertainty at t=gamma={gamma}"),
            (product - 0.5 * chirped.hbar).abs() < 1e-6,
            format!("dx dp = {product:.9}"),
        );
    }
    c.finish();
}

#[test]
fn criterion_07_ordering_reversal_and_critical_alpha() {
    let mut c = Criterion::new(7, "ordering reversal and critical alpha");
    for t in [1.0, 2.0, 3.0, 4.0] {
        let low = analytic_special_momenta(&params(1.0), t, 48.0, 65_537).unwrap();
        c.check(
            &format!("alpha=1 sub leads super t={t}"),
            low.subosc.x_at < low.superosc.x_at,
            format!("x_sub {:.3} vs x_super {:.3}", low.subosc.x_at, low.superosc.x_at),
        );
        let high = analytic_special_momenta(&params(1.8), t, 48.0, 65_537).unwrap();
        c.check(
            &format!("alpha=1.8 super leads sub t={t}"),
            high.superosc.x_at < high.subosc.x_at,
            format!("x_super {:.3} vs x_sub {:.3}", high.superosc.x_at, high.subosc.x_at),
        );
    }
    let alpha_c = critical_alpha(&params(1.0), 1.0).unwrap();
    c.check(
        "critical alpha bracketed",
        alpha_c > 1.0 && alpha_c < 1.8,
        format!("alpha_c = {alpha_c:.4}"),
    );
    let below = lobe_slope(&params(alpha_c - 0.05), 1.0).unwrap();
    let above = lobe_slope(&params(alpha_c + 0.05), 1.0).unwrap();
    c.check(
        "slope sign flips across alpha_c",
        below * above < 0.0,
        format!("slope({:.3}) = {below:.4e}, slope({:.3}) = {above:.4e}",
            alpha_c - 0.05, alpha_c + 0.05),
    );
    c.finish();
}

#[test]
fn criterion_08_bohmian_suite() {
    let mut c = Criterion::new(8, "bohmian trajectory suite");
    let opts = IntegrateOptions::default();

    // alpha = 0 closed form + non-crossing
    let p0 = params(0.0);
    let x0s: Vec<f64> = (0..20).map(|i| -5.0 + 0.5 * i as f64).collect();
    let times = [0.0, 1.0, 3.0, 5.0];
    let set = integrate_trajectories(&p0, &x0s, &times, InitialMode::UniformInterval, 7, &opts)
        .unwrap();
    c.check("gaussian run non-crossing", set.is_noncrossing(), String::new());
    let worst = set
        .positions()
        .iter()
        .zip(&x0s)
        .map(|(row, &x0)| (row[3] - gaussian_trajectory(&p0, x0, 5.0)).abs())
        .fold(0.0_f64, f64::max);
    c.check(
        "gaussian closed form at t=5",
        worst < 1e-6,
        format!("worst deviation = {worst:.3e}"),
    );

    // step-size self-convergence on the structured state
    let p1 = params(1.0);
    let probe: Vec<f64> = (0..20).map(|i| -4.0 + 0.4 * i as f64).collect();
    let full = integrate_trajectories(&p1, &probe, &times, InitialMode::UniformInterval, 7, &opts)
        .unwrap();
    let halved = IntegrateOptions {
        dt: opts.dt / 2.0,
        ..opts
    };
    let half = integrate_trajectories(&p1, &probe, &times, InitialMode::UniformInterval, 7, &halved)
        .unwrap();
    let conv = full
        .positions()
        .iter()
        .zip(half.positions())
        .map(|(a, b)| (a[3] - b[3]).abs())
        .fold(0.0_f64, f64::max);
    c.check(
        "self-convergence under dt halving",
        conv < 1e-6,
        format!("worst step-size sensitivity = {conv:.3e}"),
    );
    c.check("structured run non-crossing", full.is_noncrossing(), String::new());

    // equivariance at n = 1e4
    let born = sample_initial_positions(&p1, 10_000, InitialMode::BornSampled, DEFAULT_INTERVAL, 7)
        .unwrap();
    let eq_set =
        integrate_trajectories(&p1, &born, &times, InitialMode::BornSampled, 7, &opts).unwrap();
    c.check("equivariance run non-crossing", eq_set.is_noncrossing(), String::new());
    for (k, t) in [(1, 1.0), (2, 3.0), (3, 5.0)] {
        let ks = equivariance_distance(&eq_set, k).unwrap();
        c.check(
            &format!("equivariance KS at t={t}"),
            ks < 0.05,
            format!("KS = {ks:.4}"),
        );
    }

    // asymptotic velocity histogram at t = 50
    let late_starts =
        sample_initial_positions(&p1, 2_000, InitialMode::BornSampled, DEFAULT_INTERVAL, 11)
            .unwrap();
    let late = integrate_trajectories(
        &p1,
        &late_starts,
        &[0.0, 45.0, 50.0],
        InitialMode::BornSampled,
        11,
        &opts,
    )
    .unwrap();
    let (vels, asymptotic) = asymptotic_velocities(&late).unwrap();
    c.check("t=50 flagged asymptotic", asymptotic, String::new());
    let corr = velocity_spectrum_correlation(&p1, &vels, 41).unwrap();
    c.check(
        "velocity histogram tracks the spectrum",
        corr > 0.99,
        format!("correlation = {corr:.4}"),
    );
    c.finish();
}

#[test]
fn criterion_09_interference_time_suite() {
    let mut c = Criterion::new(9, "interference-time suite");

    // two particles: the crossing time is exactly m dx / dp
    for seed in [0, 1, 2, 3] {
        let pair = init_ensemble(2, (0.0, 1.0), (1.0, 2.0), 1.0, seed, ConstraintMode::ExtremalSwapped)
            .unwrap();
        let tl = ordering_time(&pair).unwrap();
        let dx = (pair.positions()[0] - pair.positions()[1]).abs();
        let dp = (pair.momenta()[0] - pair.momenta()[1]).abs();
        let expected = interference_time(dx, dp, pair.mass());
        c.check(
            &format!("two-particle crossing seed={seed}"),
            tl == expected,
            format!("ordering_time {tl} vs m dx/dp {expected}"),
        );
    }

    // showcase ensemble orders itself within one interference time
    let preset = showcase_preset();
    c.check("preset unordered at t=0.5", !is_ordered(&preset, 0.5), String::new());
    for t in [1.001, 2.0, 5.0, 50.0] {
        c.check(
            &format!("preset ordered at t={t}"),
            is_ordered(&preset, t),
            String::new(),
        );
    }

    // density takes the spectrum's shape at late times
    for alpha in [0.0, 1.0, 1.8] {
        let p = params(alpha);
        let spec = spectrum(alpha);
        let late = asymptotic_shape_check(&spec, &p, 50.0).unwrap();
        c.check(
            &format!("asymptotic flag alpha={alpha}"),
            late.asymptotic,
            String::new(),
        );
        c.check(
            &format!("shape correlation alpha={alpha} at t=50"),
            late.correlation > 0.999,
            format!("correlation = {:.5}", late.correlation),
        );
        let early = asymptotic_shape_check(&spec, &p, 1.0).unwrap();
        c.check(
            &format!("early-time check degraded alpha={alpha}"),
            !early.asymptotic && early.correlation < late.correlation,
            format!(
                "t=1 corr {:.4} flag {} vs t=50 corr {:.4}",
                early.correlation, early.asymptotic, late.correlation
            ),
        );
    }
    c.finish();
}

fn tempdir(tag: &str) -> String {
    let dir = std::env::temp_dir().join(format!("superband-acceptance-{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir.display().to_string()
}

#[test]
fn criterion_10_determinism_and_exit_codes() {
    let mut c = Criterion::new(10, "determinism and exit codes");

    for (cmd, extra, files) in [
        ("flux", vec![], vec!["flux.csv", "flux.json"]),
        ("evolve", vec!["--times", "2"], vec!["evolve_alpha1_t2.csv"]),
        ("sweep-alpha", vec![], vec!["sweep_alpha.csv", "sweep_alpha.json"]),
    ] {
        let (a, b) = (tempdir(&format!("{cmd}-a")), tempdir(&format!("{cmd}-b")));
        for out in [&a, &b] {
            let mut invocation = bin();
            invocation.args(["--out", out, "--seed", "7"]).args(&extra).arg(cmd);
            assert!(invocation.status().unwrap().success(), "{cmd} run failed");
        }
        for f in files {
            let left = std::fs::read(format!("{a}/{f}")).unwrap();
            let right = std::fs::read(format!("{b}/{f}")).unwrap();
            c.check(
                &format!("{f} byte-identical across reruns"),
                left == right,
                format!("{} vs {} bytes differ", left.len(), right.len()),
            );
        }
    }

    // the table diff exit code must track the tolerance verdict
    let out = tempdir("tol");
    let loose = bin()
        .args(["--out", &out, "table1", "--tol-scale", "1000"])
        .status()
        .unwrap();
    c.check(
        "generous tolerances exit 0",
        loose.code() == Some(0),
        format!("exit {:?}", loose.code()),
    );
    let tight = bin()
        .args(["--out", &out, "table1", "--tol-scale", "1e-6"])
        .status()
        .unwrap();
    c.check(
        "tightened tolerances exit 4",
        tight.code() == Some(4),
        format!("exit {:?}", tight.code()),
    );
    c.finish();
}
