//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Oracles are closed forms written out here, independent of the
//! library's own formulas.

use std::f64::consts::{FRAC_PI_8, SQRT_2};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use intraphoton::chsh::{chsh_s, horodecki_smax, optimize_angles, theta_scan, AnalyzerPair, ChshAngles};
use intraphoton::config::ExperimentConfig;
use intraphoton::counting::{
    correlation_from_counts, expected_s, measure_chsh, measure_setting, visibility, RateModel,
};
use intraphoton::optics::analyzer_chain;
use intraphoton::rng::{derive_seed, rng_from_seed, sample_poisson};
use intraphoton::scenario::{run_scenario, Cell, RunOptions, Scenario, ScenarioOutput};
use intraphoton::source::{compensation_delay, gvm, postselected_state, Delay, BBO_810NM, QUARTZ_810NM};
use intraphoton::state::{apply_visibility, concurrence, mixed_bell_state, purity, BellKind};
use intraphoton::Complex64;

type Check = Result<String, String>;

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn run(scenario: Scenario, cfg: &ExperimentConfig, noiseless: bool) -> Result<ScenarioOutput, String> {
    run_scenario(scenario, cfg, RunOptions { noiseless, seed: None }).map_err(|e| e.to_string())
}

fn column(out: &ScenarioOutput, name: &str) -> Result<Vec<f64>, String> {
    out.table.column(name).ok_or_else(|| format!("missing column {name}"))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn eps_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn c1_horodecki() -> Check {
    let mut worst_bound = 0.0f64;
    let mut worst_opt = 0.0f64;
    for eps in eps_grid() {
        let rho = mixed_bell_state(eps, BellKind::PsiPlus).map_err(|e| e.to_string())?;
        let oracle = 2.0 * (1.0 + eps * eps).sqrt();
        let bound = horodecki_smax(&rho);
        let (_, opt) = optimize_angles(&rho);
        worst_bound = worst_bound.max((bound - oracle).abs());
        worst_opt = worst_opt.max((opt - oracle).abs());
        ensure((bound - oracle).abs() <= 1e-9, || format!("eps={eps}: horodecki {bound} vs {oracle}"))?;
        ensure((opt - oracle).abs() <= 1e-6, || format!("eps={eps}: optimizer {opt} vs {oracle}"))?;
    }
    Ok(format!("max |Δ| horodecki {worst_bound:.1e}, optimizer {worst_opt:.1e}"))
}

fn c2_tsirelson() -> Check {
    let rho = mixed_bell_state(1.0, BellKind::PsiPlus).map_err(|e| e.to_string())?;
    let s = chsh_s(&rho, &ChshAngles::standard(FRAC_PI_8)).s_value;
    let err = (s - 2.0 * SQRT_2).abs();
    ensure(err <= 1e-10, || format!("S = {s}"))?;
    Ok(format!("S = {s:.12}, |Δ| {err:.1e}"))
}

fn pure_curve(theta: f64) -> f64 {
    3.0 * (2.0 * theta).cos() - (6.0 * theta).cos()
}

fn c3_pure_curve() -> Check {
    let rho = mixed_bell_state(1.0, BellKind::PsiPlus).map_err(|e| e.to_string())?;
    let thetas: Vec<f64> = (0..100).map(|i| (90.0 * i as f64 / 99.0).to_radians()).collect();
    let mut worst = 0.0f64;
    for (theta, s) in theta_scan(&rho, &thetas) {
        worst = worst.max((s - pure_curve(theta)).abs());
    }
    // Same curve through the scenario runner on the ideal config.
    let out = run(Scenario::ChshTheta, &config("ideal.toml"), true)?;
    let th = column(&out, "theta_deg")?;
    let s = column(&out, "s_theory")?;
    let sampled = column(&out, "s_sampled")?;
    ensure(th.len() == 100, || format!("{} rows", th.len()))?;
    for ((t, s), n) in th.iter().zip(&s).zip(&sampled) {
        worst = worst.max((s - pure_curve(t.to_radians())).abs());
        worst = worst.max((n - pure_curve(t.to_radians())).abs());
    }
    ensure(worst <= 1e-10, || format!("max |Δ| {worst:.2e}"))?;
    Ok(format!("100 points, max |Δ| {worst:.1e}"))
}

fn c4_headline() -> Check {
    let cfg = config("default.toml");
    ensure(cfg.visibility == 0.92, || format!("V = {}", cfg.visibility))?;
    let eps = cfg.dip_model.epsilon(Delay(cfg.headline.delay_fs));
    ensure(eps == 1.0, || format!("ε = {eps}"))?;
    ensure(cfg.headline.runs == 200, || format!("{} runs", cfg.headline.runs))?;
    let out = run(Scenario::Headline, &cfg, false)?;
    let s = column(&out, "s_sampled")?;
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let sd = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    ensure((2.58..=2.62).contains(&mean), || format!("mean S = {mean}"))?;
    ensure((0.02..=0.06).contains(&sd), || format!("std = {sd}"))?;
    Ok(format!("mean S = {mean:.4}, std = {sd:.4} over {} seeds", s.len()))
}

fn c5_purity_concurrence() -> Check {
    let mut worst = 0.0f64;
    for kind in BellKind::ALL {
        for eps in eps_grid() {
            let rho = mixed_bell_state(eps, kind).map_err(|e| e.to_string())?;
            let dp = (purity(&rho) - (1.0 + eps * eps) / 2.0).abs();
            let dc = (concurrence(&rho) - eps).abs();
            worst = worst.max(dp).max(dc);
            ensure(dp <= 1e-8 && dc <= 1e-8, || format!("{kind} ε={eps}: Δpurity {dp:.1e}, ΔC {dc:.1e}"))?;
        }
    }
    Ok(format!("44 states, max |Δ| {worst:.1e}"))
}

fn c6_gvm() -> Check {
    let bbo = gvm(&BBO_810NM).map_err(|e| e.to_string())?;
    let quartz = gvm(&QUARTZ_810NM).map_err(|e| e.to_string())?;
    ensure((bbo - 189.6).abs() <= 0.1, || format!("BBO {bbo}"))?;
    ensure((quartz + 31.8).abs() <= 0.1, || format!("quartz {quartz}"))?;
    let d = compensation_delay(189.6, 2.0).map_err(|e| e.to_string())?;
    ensure(d == 189.6, || format!("delay {d}"))?;
    Ok(format!("BBO {bbo:.2} fs/mm, quartz {quartz:.2} fs/mm, delay {d} fs"))
}

fn c7_delay_pipeline() -> Check {
    let expected = [(0.0, 1.0), (200.0, 0.8), (400.0, 0.32), (600.0, 0.03)];
    let ideal = config("ideal.toml");
    for (tau, c) in expected {
        let rho = postselected_state(Delay(tau), &ideal.dip_model, BellKind::PsiPlus).map_err(|e| e.to_string())?;
        let got = concurrence(&rho);
        ensure((got - c).abs() <= 1e-12, || format!("τ={tau}: C = {got}"))?;
    }
    let out = run(Scenario::ChshVsDelay, &ideal, true)?;
    let taus = column(&out, "tau_fs")?;
    let s = column(&out, "s_theory")?;
    ensure(taus == [0.0, 200.0, 400.0, 600.0], || format!("grid {taus:?}"))?;
    for ((tau, c), s) in expected.iter().zip(&s) {
        ensure((s - SQRT_2 * (1.0 + c)).abs() <= 1e-10, || format!("τ={tau}: S = {s}"))?;
    }
    let threshold = SQRT_2 - 1.0;
    let ideal_cross = out.summary.get("violation_lost_at_fs").copied().ok_or("no crossing (ideal)")?;
    let default = run(Scenario::ChshVsDelay, &config("default.toml"), true)?;
    let default_cross = default.summary.get("violation_lost_at_fs").copied().ok_or("no crossing (default)")?;
    for cross in [ideal_cross, default_cross] {
        ensure(cross > 200.0 && cross < 400.0, || format!("crossing at {cross} fs"))?;
    }
    Ok(format!(
        "C = 1/0.8/0.32/0.03, S = √2(1+ε), crossing {ideal_cross:.1} fs (V=1, ε*={threshold:.4}), {default_cross:.1} fs (V=0.92)"
    ))
}

fn c8_fringes() -> Check {
    let ideal = run(Scenario::Fringes, &config("ideal.toml"), true)?;
    let noisy = run(Scenario::Fringes, &config("default.toml"), true)?;
    let kind_idx = ideal.table.column_index("bell_kind").ok_or("no bell_kind")?;
    let mut report = Vec::new();
    for (label, out, target) in [("V=1", &ideal, 1.0), ("V=0.92", &noisy, 0.92)] {
        for beta1 in [0.0, 45.0] {
            let rows: Vec<_> = out
                .table
                .rows
                .iter()
                .filter(|r| r[kind_idx].to_string() == "psi-minus" && r[1].to_string() == format!("{beta1:?}"))
                .collect();
            ensure(!rows.is_empty(), || format!("no ψ⁻ rows at β1={beta1}"))?;
            let num = |r: &Vec<Cell>, i: usize| r[i].to_string().parse::<f64>().unwrap();
            let probs: Vec<f64> = rows.iter().map(|r| num(r, 3)).collect();
            if target == 1.0 {
                for r in &rows {
                    let b2 = num(r, 2);
                    let oracle = (beta1 - b2).to_radians().sin().powi(2);
                    let got = num(r, 4);
                    ensure((got - oracle).abs() <= 1e-10, || format!("β1={beta1} β2={b2}: {got} vs {oracle}"))?;
                }
            }
            let v = visibility(&probs).map_err(|e| e.to_string())?;
            ensure((v - target).abs() <= 1e-10, || format!("{label} β1={beta1}: visibility {v}"))?;
        }
        report.push(format!("{label}: visibility {target}"));
    }
    Ok(format!("ψ⁻ fringes follow sin²(β1−β2); {}", report.join(", ")))
}

fn c9_counting() -> Check {
    // Poisson sampler: rate 100/s for 10 s, 1000 repetitions.
    let mean = 1000.0;
    let reps = 1000usize;
    let mut rng = rng_from_seed(9);
    let xs: Vec<f64> = (0..reps).map(|_| sample_poisson(mean, &mut rng) as f64).collect();
    let m = xs.iter().sum::<f64>() / reps as f64;
    let dispersion = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / mean;
    let dof = (reps - 1) as f64;
    ensure((m - mean).abs() <= 3.0 * (mean / reps as f64).sqrt(), || format!("sample mean {m}"))?;
    ensure((dispersion - dof).abs() <= 3.0 * (2.0 * dof).sqrt(), || format!("dispersion χ² {dispersion}"))?;

    // Goodness of fit in the inversion branch, bins 0..=9 plus tail.
    let small = 3.0;
    let n = 20_000usize;
    let mut hist = [0usize; 11];
    let mut rng = rng_from_seed(10);
    for _ in 0..n {
        hist[(sample_poisson(small, &mut rng) as usize).min(10)] += 1;
    }
    let mut pk = (-small).exp();
    let mut probs = Vec::with_capacity(11);
    for k in 0..10 {
        probs.push(pk);
        pk *= small / (k + 1) as f64;
    }
    probs.push(1.0 - probs.iter().sum::<f64>());
    let gof: f64 = hist.iter().zip(&probs).map(|(&o, p)| (o as f64 - n as f64 * p).powi(2) / (n as f64 * p)).sum();
    // 10 degrees of freedom; 99.9th percentile is 29.6.
    ensure(gof < 29.6, || format!("goodness-of-fit χ² {gof}"))?;

    // std_dev of the S estimate scales as 1/√time over two decades.
    let rho = apply_visibility(&mixed_bell_state(1.0, BellKind::PsiPlus).map_err(|e| e.to_string())?, 0.92)
        .map_err(|e| e.to_string())?;
    let angles = ChshAngles::standard(FRAC_PI_8);
    let base = RateModel {
        pair_rate: 1500.0,
        accidental_rate: 0.0,
        integration_time: 1.0,
    };
    let reported = |factor: f64, seed: u64| -> Result<f64, String> {
        let model = base.with_time_scaled(factor);
        let runs = 50;
        let total: f64 = (0..runs)
            .map(|i| measure_chsh(&rho, &angles, &model, derive_seed(seed, i)).map(|r| r.1.std_dev))
            .sum::<Result<f64, _>>()
            .map_err(|e| e.to_string())?;
        Ok(total / runs as f64)
    };
    let s1 = reported(1.0, 1)?;
    let mut scaling = Vec::new();
    for factor in [10.0, 100.0] {
        let sf = reported(factor, factor as u64)?;
        let ratio = sf * factor.sqrt() / s1;
        scaling.push(ratio);
        ensure((ratio - 1.0).abs() <= 0.10, || format!("σ·√t ratio at ×{factor}: {ratio}"))?;
    }
    // Reported errors match the empirical scatter.
    let runs = 400;
    let vals: Vec<f64> = (0..runs)
        .map(|i| measure_chsh(&rho, &angles, &base, derive_seed(77, i)).map(|r| r.1.value))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let vm = vals.iter().sum::<f64>() / runs as f64;
    let vsd = (vals.iter().map(|v| (v - vm).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt();
    ensure((vsd / s1 - 1.0).abs() <= 0.15, || format!("empirical σ {vsd} vs reported {s1}"))?;

    // Convergence of correlators and S to their analytic values.
    let analytic_e = |pair: &AnalyzerPair| -> f64 {
        // Oracle for V·|Ψ+⟩⟨Ψ+| + (1−V)·I/4: E = V·cos 2(a−b).
        0.92 * (2.0 * (pair.a - pair.b)).cos()
    };
    let mut worst_pull = 0.0f64;
    for (k, factor) in [1.0, 100.0, 10_000.0].into_iter().enumerate() {
        let model = base.with_time_scaled(factor);
        for (j, pair) in angles.pairs().iter().enumerate() {
            let counts = measure_setting(&rho, pair, &model, derive_seed(500 + k as u64, j as u64))
                .map_err(|e| e.to_string())?;
            let est = correlation_from_counts(counts.pp.counts as f64, counts.mm.counts as f64, counts.pm.counts as f64, counts.mp.counts as f64)
                .map_err(|e| e.to_string())?;
            let pull = (est.value - analytic_e(pair)).abs() / est.std_dev;
            worst_pull = worst_pull.max(pull);
            ensure(pull <= 3.0, || format!("×{factor} setting {j}: E {} vs {}", est.value, analytic_e(pair)))?;
        }
        let (_, s) = measure_chsh(&rho, &angles, &model, derive_seed(600, k as u64)).map_err(|e| e.to_string())?;
        let s_exact = expected_s(&rho, &angles, &model).map_err(|e| e.to_string())?.value;
        let pull = (s.value - s_exact).abs() / s.std_dev;
        worst_pull = worst_pull.max(pull);
        ensure(pull <= 3.0, || format!("×{factor}: S {} vs {s_exact}", s.value))?;
    }
    Ok(format!(
        "mean {m:.1}, dispersion χ² {dispersion:.0}/{dof}, GOF χ² {gof:.1}, σ√t ratios {:.3}/{:.3}, empirical/reported σ {:.3}, max pull {worst_pull:.2}",
        scaling[0],
        scaling[1],
        vsd / s1
    ))
}

fn c10_analyzer() -> Check {
    let mut worst = 0.0f64;
    for i in 0..12 {
        let b = std::f64::consts::PI * i as f64 / 12.0;
        let response = analyzer_chain(b);
        // Oracle: |ψ⟩⟨ψ| with ψ = cos b|−1⟩ + sin b|+1⟩, written out by hand.
        let (c, s) = (b.cos(), b.sin());
        let oracle = [[c * c, c * s], [s * c, s * s]];
        let m = response.projector.matrix();
        for r in 0..2 {
            for k in 0..2 {
                worst = worst.max((m[(r, k)] - Complex64::new(oracle[r][k], 0.0)).norm());
            }
        }
        let scaled = response.effect / Complex64::new(response.efficiency, 0.0);
        worst = worst.max((scaled - m).norm());
    }
    ensure(worst <= 1e-10, || format!("max |Δ| {worst:.2e}"))?;
    Ok(format!("12 angles, max |Δ| {worst:.1e}, efficiency {:.6}", analyzer_chain(0.3).efficiency))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Check, Option<Duration>);
    let criteria: [Criterion; 10] = [
        ("Horodecki bound and optimizer", c1_horodecki, Some(Duration::from_secs(10))),
        ("Tsirelson point", c2_tsirelson, None),
        ("pure-state CHSH curve", c3_pure_curve, None),
        ("headline S", c4_headline, Some(Duration::from_secs(60))),
        ("purity and concurrence laws", c5_purity_concurrence, None),
        ("GVM arithmetic", c6_gvm, None),
        ("delay-to-entanglement pipeline", c7_delay_pipeline, None),
        ("fringe visibility", c8_fringes, None),
        ("count statistics", c9_counting, Some(Duration::from_secs(120))),
        ("analyzer chain", c10_analyzer, None),
    ];
    let mut failures = 0;
    for (i, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut result = check();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&result, limit) {
            if elapsed > limit {
                result = Err(format!("took {elapsed:.2?}, limit {limit:?}"));
            }
        }
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
