//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any fail.

use std::collections::HashMap;
use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use rgcrt::dynrange::{dynamic_range_coprime, verify_dynamic_range};
use rgcrt::gcrt2::quotient_family;
use rgcrt::harness::{emit_results, run_snr_sweep, run_tau_sweep, Estimator, ExperimentConfig};
use rgcrt::modmath::{circular_distance_int, common_remainder};
use rgcrt::robust::{decompose, split_index};
use rgcrt::{
    robust_reconstruct, solve_two_coprime, solve_two_gcd, ErroneousResidueFamily, Error, IntegerPair, ModulusSet,
    Rational, ResidueFamily,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ms(big_m: i64) -> ModulusSet {
    ModulusSet::new(big_m, vec![3, 5, 7]).unwrap()
}

fn cli(args: &[&str]) -> Result<Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_rgcrt"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "rgcrt {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

fn json_pair(v: &Value) -> (i64, i64) {
    let (a, b) = (v["N1"].as_i64().unwrap_or(-1), v["N2"].as_i64().unwrap_or(-1));
    (a.min(b), a.max(b))
}

/// Fastest of several runs, to keep scheduler noise out of small budgets.
fn best_time<T>(runs: usize, mut f: impl FnMut() -> T) -> Duration {
    (0..runs)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(f());
            t.elapsed()
        })
        .min()
        .unwrap()
}

fn criterion_1() -> Outcome {
    let residues = "69,195;95,169;69,395";
    let out = cli(&[
        "reconstruct",
        "--mode",
        "errorfree",
        "--M",
        "100",
        "--m",
        "3,5,7",
        "--residues",
        residues,
    ])?;
    ensure(json_pair(&out) == (1095, 2169), || format!("got {out}"))?;
    let fam = ResidueFamily::new(ms(100), vec![(69, 195), (95, 169), (69, 395)]).unwrap();
    let t = best_time(20, || solve_two_gcd(&fam));
    ensure(t < Duration::from_millis(1), || format!("solve took {t:?}"))?;
    Ok(format!("{{1095, 2169}}, solve {t:?}"))
}

fn criterion_2() -> Outcome {
    let out = cli(&[
        "reconstruct",
        "--mode",
        "errorfree",
        "--M",
        "100",
        "--m",
        "3,5,7",
        "--residues",
        "98,198;98,398;398,498",
    ])?;
    ensure(json_pair(&out) == (1098, 1898), || format!("got {out}"))?;
    let fam = ResidueFamily::new(ms(100), vec![(98, 198), (98, 398), (398, 498)]).unwrap();
    let q = quotient_family(&fam, 98).map_err(|e| e.to_string())?;
    ensure(q.canonical() == vec![(0, 1), (0, 3), (3, 4)], || {
        format!("quotients {:?}", q.canonical())
    })?;
    let big_q = solve_two_coprime(&q).map_err(|e| e.to_string())?;
    ensure(big_q == IntegerPair::new(10, 18), || format!("Q = {big_q:?}"))?;
    Ok("{1098, 1898}, quotients {0,1},{0,3},{3,4}, Q = {10, 18}".into())
}

fn criterion_3() -> Outcome {
    let out = cli(&[
        "reconstruct",
        "--mode",
        "robust",
        "--M",
        "100",
        "--m",
        "3,5,7",
        "--residues",
        "108,209;92,399;397,507",
    ])?;
    let expect = serde_json::json!({
        "k0": 3, "omega1": [92, 97, 99], "omega2": [7, 8, 9],
    });
    for key in ["k0", "omega1", "omega2"] {
        ensure(out["decomposition"][key] == expect[key], || {
            format!("{key}: {}", out["decomposition"][key])
        })?;
    }
    let strings = [
        ("omega_bar1", "-4"),
        ("omega_bar2", "8"),
        ("rc_hat1", "-2/3"),
        ("rc_hat2", "14/3"),
        ("nhat1", "3298/3"),
        ("nhat2", "5714/3"),
    ];
    for (key, want) in strings {
        ensure(out[key] == want, || format!("{key}: {}", out[key]))?;
    }
    ensure(
        out["quotient_pairs"] == serde_json::json!([[1, 2], [1, 4], [4, 5]]),
        || format!("q {}", out["quotient_pairs"]),
    )?;
    ensure(
        (out["qhat1"].as_i64(), out["qhat2"].as_i64()) == (Some(11), Some(19)),
        || "Q hat".into(),
    )?;
    ensure(json_pair(&out) == (1099, 1905), || format!("rounded {out}"))?;

    // Same pipeline through the library, compared as exact rationals.
    let fam = ErroneousResidueFamily::new(ms(100), vec![(108, 209), (92, 399), (397, 507)]).unwrap();
    let est = robust_reconstruct(&fam).map_err(|e| e.to_string())?;
    let r = Rational::new;
    ensure(
        (est.omega_bar1, est.omega_bar2) == (r(-4, 1), r(8, 1))
            && (est.rc_hat1, est.rc_hat2) == (Some(r(-2, 3)), Some(r(14, 3)))
            && (est.nhat1, est.nhat2) == (r(3298, 3), r(5714, 3)),
        || format!("{est:?}"),
    )?;
    Ok("k0 = 3, clusters, means, quotients, {11, 19}, N = (1099 1/3, 1904 2/3) -> {1099, 1905}".into())
}

fn criterion_4() -> Outcome {
    let rep = dynamic_range_coprime(&ms(100)).map_err(|e| e.to_string())?;
    ensure(rep.d == 22 && rep.md == 2200, || format!("{rep:?}"))?;
    for big_m in [1, 2] {
        let s = ms(big_m);
        let md = dynamic_range_coprime(&s).unwrap().md;
        let at = verify_dynamic_range(&s, md).map_err(|e| e.to_string())?;
        let above = verify_dynamic_range(&s, md + 1).map_err(|e| e.to_string())?;
        ensure(at && !above, || format!("M = {big_m}: at Md {at}, at Md+1 {above}"))?;
    }
    Ok("d = 22, Md = 2200; oracle passes at Md, fails at Md+1 for M = 1, 2".into())
}

fn criterion_5() -> Outcome {
    let cfg = ExperimentConfig {
        levels: vec![0.0, 3.0, 6.0, 9.0, 12.0, 15.0],
        trials: 2000,
        seed: 2024,
        estimators: vec![Estimator::Robust],
        ..ExperimentConfig::tau_preset()
    };
    let res = run_tau_sweep(&cfg).map_err(|e| e.to_string())?;
    let mut means = Vec::new();
    for tau in [0.0, 3.0, 6.0, 9.0, 12.0] {
        let row = res.row(tau, Estimator::Robust).unwrap();
        ensure(row.max_error <= tau && row.failures == 0, || {
            format!("tau {tau}: {row:?}")
        })?;
        means.push(row.mean_error);
    }
    ensure(means.windows(2).all(|w| w[0] <= w[1]), || {
        format!("means not increasing: {means:?}")
    })?;
    let last = res.row(15.0, Estimator::Robust).unwrap();
    Ok(format!(
        "max error <= tau for tau <= 12; E_N = {means:.3?}; tau = 15: max {:.3}, E_N {:.3}",
        last.max_error, last.mean_error
    ))
}

fn criterion_6() -> Outcome {
    let s2 = ms(2);
    let mut checked = 0;
    for a in 0..44 {
        for b in a..44 {
            let got = solve_two_gcd(&ResidueFamily::from_values(s2.clone(), a, b)).map_err(|e| e.to_string())?;
            ensure(got == IntegerPair::new(a, b), || format!("{{{a}, {b}}} -> {got:?}"))?;
            checked += 1;
        }
    }

    // Every residue family over (3, 5, 7), solved and compared with the
    // set of pairs in [0, 22) that produce it.
    let s1 = ms(1);
    let mut oracle: HashMap<Vec<(i64, i64)>, Vec<IntegerPair>> = HashMap::new();
    for a in 0..22 {
        for b in a..22 {
            let fam = ResidueFamily::from_values(s1.clone(), a, b);
            oracle.entry(fam.canonical()).or_default().push(IntegerPair::new(a, b));
        }
    }
    let options = |m: i64| -> Vec<(i64, i64)> { (0..m).flat_map(|x| (x..m).map(move |y| (x, y))).collect() };
    let mut families = 0;
    for p3 in options(3) {
        for p5 in options(5) {
            for p7 in options(7) {
                let fam = ResidueFamily::new(s1.clone(), vec![p3, p5, p7]).unwrap();
                let want = oracle.get(&fam.canonical()).cloned().unwrap_or_default();
                let got = solve_two_coprime(&fam);
                let agree = match (&got, want.as_slice()) {
                    (Ok(p), [only]) => p == only,
                    (Err(Error::InconsistentResidues(_)), []) => true,
                    _ => false,
                };
                ensure(agree, || format!("{:?}: solver {got:?}, oracle {want:?}", fam.pairs()))?;
                families += 1;
            }
        }
    }
    Ok(format!(
        "{checked} pairs round-trip at M = 2; {families} families match the oracle"
    ))
}

fn criterion_7() -> Outcome {
    let systems: [&[i64]; 6] = [
        &[3, 5, 7],
        &[2, 3, 5],
        &[4, 5, 9],
        &[3, 7, 11],
        &[5, 6, 7],
        &[3, 4, 5, 7],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..5000 {
        let big_m = rng.random_range(8..=400);
        let s = ModulusSet::new(big_m, systems[i % systems.len()].to_vec()).unwrap();
        let tau = rng.random_range(0..=(big_m - 1) / 8);
        let hi = big_m * s.gamma();
        let (n1, n2) = (rng.random_range(0..hi), rng.random_range(0..hi));
        let raw: Vec<(i64, i64)> = ResidueFamily::from_values(s.clone(), n1, n2)
            .pairs()
            .iter()
            .map(|&(a, b)| (a + rng.random_range(-tau..=tau), b + rng.random_range(-tau..=tau)))
            .collect();
        let fam = ErroneousResidueFamily::from_raw(s.clone(), &raw).unwrap();
        let ctx = || format!("instance {i}: M {big_m}, m {:?}, tau {tau}, N ({n1}, {n2})", s.moduli());

        let dec = decompose(&fam).map_err(|e| format!("{}: {e}", ctx()))?;
        let k = s.len();
        let wide: Vec<usize> = (0..k)
            .filter(|&j| 2 * (dec.gaps[j] + dec.gaps[j + k]) > big_m)
            .map(|j| j + 1)
            .collect();
        ensure(wide == vec![dec.k0], || {
            format!("{}: wide splits {wide:?}, k0 {}", ctx(), dec.k0)
        })?;
        ensure(split_index(&dec.gaps).unwrap() == dec.k0, ctx)?;
        ensure(dec.omega1_spread() <= 2 * tau && dec.omega2_spread() <= 2 * tau, || {
            format!("{}: spreads {} {}", ctx(), dec.omega1_spread(), dec.omega2_spread())
        })?;
        for &(a, b) in fam.pairs() {
            for r in [a, b] {
                let c = common_remainder(r, big_m);
                let hit = dec
                    .omega1
                    .iter()
                    .chain(&dec.omega2)
                    .any(|&w| circular_distance_int(c, w, big_m).unwrap() == 0);
                ensure(hit, || format!("{}: remainder {r} has no cluster match", ctx()))?;
            }
        }
    }
    Ok("5000 instances: unique wide split at k0, spreads <= 2 tau, every remainder matched".into())
}

/// Spearman rank correlation with average ranks; `None` when either side is constant.
fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut out = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &p in &idx[i..=j] {
                out[p] = avg;
            }
            i = j + 1;
        }
        out
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

fn criterion_8() -> Outcome {
    let levels: Vec<f64> = (0..=6).map(|i| 5.0 * i as f64).collect();
    let cfg = ExperimentConfig {
        levels: levels.clone(),
        trials: 500,
        seed: 2024,
        ..ExperimentConfig::snr_preset()
    };
    let res = run_snr_sweep(&cfg).map_err(|e| e.to_string())?;
    let ef = |est: Estimator| -> Vec<f64> { levels.iter().map(|&l| res.row(l, est).unwrap().mean_error).collect() };
    let (robust, search, naive) = (ef(Estimator::Robust), ef(Estimator::Search), ef(Estimator::Nonrobust));
    let summary = format!("E_f robust {robust:.4?}, search {search:.4?}, nonrobust {naive:.4?}");
    let mut problems = Vec::new();

    // (a) decreasing trend
    match spearman(&levels, &robust) {
        Some(rho) if rho < -0.8 => {}
        Some(rho) => problems.push(format!("(a) Spearman rho = {rho:.3}, not < -0.8")),
        None => problems.push("(a) Spearman rho undefined: robust E_f is constant across the sweep".into()),
    }
    // (b) error floor
    let (r30, n30) = (robust[6], naive[6]);
    let floor_seen = n30 > 5.0 * r30;
    if !floor_seen {
        problems.push(format!("(b) at 30 dB nonrobust {n30} is not > 5 x robust {r30}"));
    }
    // (c) accuracy and cost of the search
    if let Some(i) = (0..levels.len()).find(|&i| search[i] > robust[i]) {
        problems.push(format!(
            "(c) search {} > robust {} at {} dB",
            search[i], robust[i], levels[i]
        ));
    }
    let trials = (levels.len() * cfg.trials) as f64;
    let per_robust = res.elapsed(Estimator::Robust).as_secs_f64() / trials;
    let per_search = res.elapsed(Estimator::Search).as_secs_f64() / trials;
    let cheaper = per_search >= 10.0 * per_robust;
    if !cheaper {
        problems.push(format!(
            "(c) search {per_search:.2e} s/trial is not >= 10 x robust {per_robust:.2e} s/trial"
        ));
    }
    let timing = format!(
        "per trial: robust {:.1} us, search {:.1} us",
        per_robust * 1e6,
        per_search * 1e6
    );
    if problems.is_empty() {
        Ok(format!("{summary}; {timing}"))
    } else {
        Err(format!("{}; {summary}; {timing}", problems.join("; ")))
    }
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let tau = ExperimentConfig {
        levels: vec![3.0, 9.0, 15.0],
        trials: 300,
        seed: 99,
        estimators: Estimator::ALL.to_vec(),
        ..ExperimentConfig::tau_preset()
    };
    let snr = ExperimentConfig {
        levels: vec![-15.0, 0.0],
        trials: 100,
        seed: 99,
        ..ExperimentConfig::snr_preset()
    };
    let mut files = Vec::new();
    for run in 0..2 {
        let a = dir.path().join(format!("tau{run}.csv"));
        emit_results(&tau, &run_tau_sweep(&tau).map_err(|e| e.to_string())?.summary, &a).map_err(|e| e.to_string())?;
        let b = dir.path().join(format!("snr{run}.csv"));
        emit_results(&snr, &run_snr_sweep(&snr).map_err(|e| e.to_string())?.summary, &b).map_err(|e| e.to_string())?;
        let c = dir.path().join(format!("cli{run}.csv"));
        let path = c.to_str().unwrap();
        cli(&[
            "sweep-tau",
            "--trials",
            "200",
            "--seed",
            "5",
            "--estimators",
            "robust,nonrobust",
            "--out",
            path,
        ])?;
        files.push([a, b, c]);
    }
    for (a, b) in files[0].iter().zip(&files[1]) {
        ensure(fs::read(a).unwrap() == fs::read(b).unwrap(), || {
            format!("{} and {} differ", a.display(), b.display())
        })?;
    }
    Ok("tau sweep, SNR sweep and CLI sweep CSVs are byte-identical across runs".into())
}

fn main() -> ExitCode {
    let secs = |s: u64| Some(Duration::from_secs(s));
    let criteria: [Criterion; 9] = [
        ("1 golden errorfree example {2169, 1095}", criterion_1, None),
        ("2 golden errorfree example {1098, 1898}", criterion_2, None),
        ("3 golden robust example with intermediates", criterion_3, None),
        ("4 dynamic range and exhaustive verification", criterion_4, secs(10)),
        ("5 tau sweep hard error bound", criterion_5, secs(30)),
        ("6 exhaustive error-free roundtrip and oracle", criterion_6, secs(10)),
        ("7 cluster split and spread properties", criterion_7, None),
        ("8 SNR sweep trend, error floor, search cost", criterion_8, secs(300)),
        ("9 deterministic CSV output", criterion_9, None),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let mut outcome = run();
        let took = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, budget) {
            if took > limit {
                outcome = Err(format!("took {took:.2?}, budget {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("[PASS] {name} ({took:.2?}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name} ({took:.2?}): {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
