//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any failed.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use deceptive_risk::corpus::{batch_score, Corpus};
use deceptive_risk::fixtures;
use deceptive_risk::game::{
    builtin, estimate_adv, estimate_det, ChallengerPolicy, DecisionRule, Oracle, QueryDistribution, TrialPlan,
    WatchdogStrategy,
};
use deceptive_risk::model::{Band, DetectorProfile, Mode, WeightProfile};
use deceptive_risk::scoring::{classify_band, compute_risk};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type ReferenceScores = BTreeMap<(String, Mode), (f64, Band)>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn manifest_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

/// Scores of the four reference cases keyed by (case, mode).
fn reference_scores(profile: &WeightProfile, detector: &DetectorProfile) -> Result<ReferenceScores, String> {
    let corpus = fixtures::reference_corpus();
    let assessments = batch_score(&corpus, profile, detector, &Mode::BOTH).map_err(|e| e.to_string())?;
    Ok(assessments
        .into_iter()
        .map(|a| ((a.case_id, a.mode), (a.score, a.band)))
        .collect())
}

fn check_reference_bands(profile: &WeightProfile, detector: &DetectorProfile) -> Result<String, String> {
    use Band::*;
    use Mode::*;
    let s = reference_scores(profile, detector)?;
    let get = |id: &str, mode: Mode| s[&(id.to_string(), mode)];
    let expect_band = |id: &str, mode: Mode, band: Band| {
        let (score, got) = get(id, mode);
        ensure(got == band, || format!("{id} {mode}: expected {band}, got {got} ({score:.4})"))
    };
    expect_band("pz-01", WithChallenger, Low)?;
    expect_band("pz-01", BaselineChallenger, Low)?;
    let (pz_base, _) = get("pz-01", BaselineChallenger);
    ensure((2.5..=3.0).contains(&pz_base), || format!("pz-01 baseline {pz_base} not in [2.5, 3.0]"))?;
    expect_band("pr-01", WithChallenger, Medium)?;
    let (pr_with, _) = get("pr-01", WithChallenger);
    ensure(pr_with <= 4.0, || format!("pr-01 with {pr_with} > 4"))?;
    expect_band("pa-01", WithChallenger, Medium)?;
    expect_band("pa-01", BaselineChallenger, Low)?;
    let delta = get("pa-01", WithChallenger).0 - get("pa-01", BaselineChallenger).0;
    ensure(delta <= 1.0, || format!("pa-01 delta {delta} > 1"))?;
    expect_band("rm-01", WithChallenger, High)?;
    expect_band("rm-01", BaselineChallenger, Medium)?;
    Ok(format!(
        "pz {:.2}/{:.2}, pr {:.2}, pa {:.2}/{:.2}, rm {:.2}/{:.2}",
        get("pz-01", WithChallenger).0,
        pz_base,
        pr_with,
        get("pa-01", WithChallenger).0,
        get("pa-01", BaselineChallenger).0,
        get("rm-01", WithChallenger).0,
        get("rm-01", BaselineChallenger).0
    ))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let summary = check_reference_bands(&fixtures::default_profile(), &fixtures::default_detector())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;

    // hand-derived values for the shipped defaults
    let s = reference_scores(&fixtures::default_profile(), &fixtures::default_detector())?;
    let expected = [
        ("pz-01", Mode::WithChallenger, 4.0 * (0.7 / 3.0 + 0.2)),
        ("pz-01", Mode::BaselineChallenger, 0.7 * 1.6 * 2.5),
        ("pr-01", Mode::WithChallenger, (0.1 - 0.15 + 1.0) * 1.3 * 2.5),
        ("pa-01", Mode::WithChallenger, (1.9 / 3.0 - 0.6 + 1.0) * 1.3 * 2.5),
        ("pa-01", Mode::BaselineChallenger, 0.9 * 1.3 * 2.5),
        ("rm-01", Mode::WithChallenger, 1.75 * 2.0 * 2.5),
        ("rm-01", Mode::BaselineChallenger, 1.35 * 2.0 * 2.5),
    ];
    for (id, mode, value) in expected {
        let got = s[&(id.to_string(), mode)].0;
        ensure((got - value).abs() < 1e-4, || format!("{id} {mode}: {got} vs hand value {value}"))?;
    }
    Ok(format!("{summary} in {elapsed:?}"))
}

fn criterion_2() -> Outcome {
    let p = fixtures::default_profile();
    let top = compute_risk(1.0, 0.0, 1.0, &p).map_err(|e| e.to_string())?.final_score;
    ensure(top == 10.0, || format!("(1,0,1) -> {top}"))?;
    for imp in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let bottom = compute_risk(0.0, 1.0, imp, &p).map_err(|e| e.to_string())?.final_score;
        ensure(bottom == 0.0, || format!("(0,1,{imp}) -> {bottom}"))?;
    }
    let band = |x| classify_band(x, &p).map_err(|e| e.to_string());
    ensure(band(3.0)? == Band::Low, || "band(3) != low".into())?;
    ensure(band(7.0)? == Band::Medium, || "band(7) != medium".into())?;
    ensure(band(7.01)? == Band::High, || "band(7.01) != high".into())?;
    Ok("10.00 / 0.00 corners exact; 3 low, 7 medium, 7.01 high".into())
}

fn criterion_3() -> Outcome {
    let p = fixtures::default_profile();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let score = |a: f64, d: f64, i: f64| compute_risk(a, d, i, &p).unwrap().final_score;
    let mut violations = [0usize; 3];
    for _ in 0..1000 {
        let (a, d, i): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let a2 = rng.random_range(a..=1.0);
        let d2 = rng.random_range(0.0..=d);
        let i2 = rng.random_range(i..=1.0);
        let base = score(a, d, i);
        violations[0] += (score(a2, d, i) < base) as usize;
        violations[1] += (score(a, d2, i) < base) as usize;
        violations[2] += (score(a, d, i2) < base) as usize;
    }
    ensure(violations == [0, 0, 0], || format!("violations adv/det/imp: {violations:?}"))?;
    Ok("3 x 1000 random triples, 0 violations".into())
}

fn within_3se(estimate: f64, truth: f64, se: f64) -> bool {
    (estimate - truth).abs() <= 3.0 * se
}

fn criterion_4() -> Outcome {
    let s = builtin("one-divergent-input").map_err(|e| e.to_string())?;

    // exhaustive enumeration over all 8^4 query tuples
    let n = s.spec.domain_size(0);
    let diverges: Vec<bool> = (0..n).map(|q| s.implementation.respond(0, q) != s.spec.respond(0, q)).collect();
    let mut caught = 0u64;
    let total = (n as u64).pow(4);
    for t in 0..total {
        let mut x = t;
        let mut hit = false;
        for _ in 0..4 {
            hit |= diverges[(x % n as u64) as usize];
            x /= n as u64;
        }
        caught += hit as u64;
    }
    let enumerated = caught as f64 / total as f64;
    let closed = 1.0 - (7.0f64 / 8.0).powi(4);
    ensure((enumerated - closed).abs() < 1e-12, || format!("enumeration {enumerated} vs {closed}"))?;
    ensure((closed - 0.41382).abs() < 5e-6, || format!("closed form {closed}"))?;

    let start = Instant::now();
    let det = estimate_det(&WatchdogStrategy::uniform(4), &s.spec, &s.implementation, &TrialPlan::new(10_000, 42))
        .map_err(|e| e.to_string())?;
    let det_time = start.elapsed();
    ensure(within_3se(det.value, closed, det.std_error), || {
        format!("DET {} not within 3 x {} of {closed}", det.value, det.std_error)
    })?;
    ensure(det_time < Duration::from_secs(10), || format!("DET took {det_time:?}"))?;

    let b = builtin("binary-choice").map_err(|e| e.to_string())?;
    let start = Instant::now();
    let adv = estimate_adv(&ChallengerPolicy::RandomClick, &b.implementation, &TrialPlan::new(10_000, 7))
        .map_err(|e| e.to_string())?;
    let adv_time = start.elapsed();
    ensure(within_3se(adv.value, 0.5, adv.std_error), || {
        format!("ADV {} not within 3 x {} of 0.5", adv.value, adv.std_error)
    })?;
    ensure(adv_time < Duration::from_secs(10), || format!("ADV took {adv_time:?}"))?;
    Ok(format!(
        "DET {:.5} +/- {:.5} vs {closed:.5} ({det_time:?}); ADV {:.5} +/- {:.5} vs 0.5 ({adv_time:?})",
        det.value, det.std_error, adv.value, adv.std_error
    ))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let names = ["one-divergent-input", "forced-cookie-banner", "fullscreen-ad", "cancellation-trap"];
    for i in 0..10 {
        let s = builtin(names[i % names.len()]).map_err(|e| e.to_string())?;
        let q = rng.random_range(1..=8);
        let mut weights = BTreeMap::new();
        if i % 2 == 1 {
            for (f, func) in s.spec.functionalities().iter().enumerate() {
                let raw: Vec<f64> = (0..s.spec.domain_size(f)).map(|_| rng.random_range(0.1..1.0)).collect();
                let total: f64 = raw.iter().sum();
                let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
                let rest: f64 = w[1..].iter().sum();
                w[0] = 1.0 - rest;
                weights.insert(func.id.clone(), w);
            }
        }
        let strategy = WatchdogStrategy {
            queries_per_functionality: q,
            distribution: if weights.is_empty() {
                QueryDistribution::Uniform
            } else {
                QueryDistribution::Weighted(weights)
            },
            decision_rule: DecisionRule::AllMatch,
        };
        let seed: u64 = rng.random();
        let e = estimate_det(&strategy, &s.spec, &s.spec, &TrialPlan::new(2_000, seed)).map_err(|e| e.to_string())?;
        ensure(e.value == 0.0, || format!("{} q={q} seed={seed}: {}", s.name, e.value))?;
    }
    Ok("10 random strategies and seeds, all exactly 0".into())
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_deceptive-risk")
}

fn run_bin(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(bin())
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .map_err(|e| e.to_string())
}

fn criterion_6() -> Outcome {
    for name in ["one-divergent-input", "trap-chain", "cancellation-trap"] {
        let s = builtin(name).map_err(|e| e.to_string())?;
        let plan = TrialPlan::new(5_000, 99);
        let strategy = WatchdogStrategy::uniform(3);
        let det_serial = estimate_det(&strategy, &s.spec, &s.implementation, &plan.serial()).map_err(|e| e.to_string())?;
        let det_parallel =
            estimate_det(&strategy, &s.spec, &s.implementation, &plan.parallel()).map_err(|e| e.to_string())?;
        ensure(det_serial == det_parallel, || format!("{name}: DET {det_serial:?} vs {det_parallel:?}"))?;
        if s.has_interaction() {
            let policy = ChallengerPolicy::RandomClick;
            let a = estimate_adv(&policy, &s.implementation, &plan.serial()).map_err(|e| e.to_string())?;
            let b = estimate_adv(&policy, &s.implementation, &plan.parallel()).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("{name}: ADV {a:?} vs {b:?}"))?;
        }
    }
    let invocations: [&[&str]; 3] = [
        &["simulate", "--scenario", "builtin:one-divergent-input", "--trials", "10000", "--seed", "42"],
        &["simulate", "--scenario", "builtin:binary-choice", "--trials", "10000", "--seed", "7", "--format", "human"],
        &["score", "--corpus", "fixtures/reference-cases", "--mode", "both"],
    ];
    for args in invocations {
        let first = run_bin(args)?;
        let second = run_bin(args)?;
        ensure(first.status.success(), || format!("{args:?} failed"))?;
        ensure(first.stdout == second.stdout, || format!("{args:?} output differs between runs"))?;
    }
    let serial = run_bin(&["simulate", "--scenario", "builtin:trap-chain", "--seed", "5", "--serial"])?;
    let parallel = run_bin(&["simulate", "--scenario", "builtin:trap-chain", "--seed", "5"])?;
    ensure(serial.stdout == parallel.stdout, || "serial and parallel CLI reports differ".into())?;
    Ok("serial == parallel on 3 scenarios; repeated CLI runs byte-identical".into())
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let profile_path = dir.path().join("profile.json");
    let detector_path = dir.path().join("detector.json");
    let start = Instant::now();
    let out = run_bin(&[
        "calibrate",
        "--constraints",
        "fixtures/reference-bands.json",
        "--grid-step",
        "0.05",
        "--output-profile",
        profile_path.to_str().unwrap(),
        "--output-detector",
        detector_path.to_str().unwrap(),
    ])?;
    let elapsed = start.elapsed();
    ensure(out.status.code() == Some(0), || {
        format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    let profile = WeightProfile::load(&profile_path).map_err(|e| e.to_string())?;
    let detector = DetectorProfile::load(&detector_path).map_err(|e| e.to_string())?;
    let summary = check_reference_bands(&profile, &detector)?;
    Ok(format!("exit 0 in {elapsed:?}; emitted profile: {summary}"))
}

fn criterion_8() -> Outcome {
    let p = fixtures::default_profile();
    // R = (x + alpha)(1 + imp) beta is increasing in x = adv - det, so the
    // band boundary R = 3 sits at a single x
    let slope = (1.0 + 0.5) * p.beta;
    let x_star = p.band_low_max / slope - p.alpha;
    ensure((x_star + 0.2).abs() < 1e-12, || format!("boundary at x = {x_star}"))?;
    ensure(slope > 0.0, || "non-increasing".into())?;
    // share of a uniform x on [-1, 1] at or below the boundary
    let share = (x_star + 1.0) / 2.0;
    ensure((share - 0.4).abs() < 1e-12, || format!("percentile {share}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    while checked < 1000 {
        let (adv, det): (f64, f64) = (rng.random(), rng.random());
        let x = adv - det;
        if (x + 0.2).abs() < 1e-9 {
            continue;
        }
        let score = compute_risk(adv, det, 0.5, &p).map_err(|e| e.to_string())?.final_score;
        ensure((score <= 3.0) == (x <= -0.2), || format!("adv {adv} det {det}: score {score}"))?;
        checked += 1;
    }
    Ok("boundary x = -0.2 (40th percentile); 1000 random pairs agree".into())
}

fn criterion_9() -> Outcome {
    let path = manifest_path("fixtures/reference-cases.json");
    let original = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let corpus = Corpus::from_json(&original).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let copy = dir.path().join("copy.json");
    corpus.save(&copy).map_err(|e| e.to_string())?;
    let saved = std::fs::read_to_string(&copy).map_err(|e| e.to_string())?;
    ensure(saved == original, || "save is not byte-identical".into())?;
    let reloaded = deceptive_risk::load_corpus(&copy).map_err(|e| e.to_string())?;
    ensure(reloaded == corpus, || "reload differs".into())?;

    let value: serde_json::Value = serde_json::from_str(&original).unwrap();
    let mutate = |f: &dyn Fn(&mut serde_json::Value)| {
        let mut v = value.clone();
        f(&mut v);
        Corpus::from_json(&v.to_string()).map(|_| ()).map_err(|e| e.code())
    };
    let dup = mutate(&|v| {
        let first = v["cases"][0].clone();
        v["cases"].as_array_mut().unwrap().push(first);
    });
    let cat = mutate(&|v| v["cases"][0]["category"] = "confirmshaming-typo".into());
    let cons = mutate(&|v| v["cases"][0]["consequences"] = serde_json::json!(["mild_annoyance"]));
    let codes = [dup, cat, cons];
    let expected = [Err("duplicate_case_id"), Err("unknown_category"), Err("unknown_consequence")];
    ensure(codes == expected, || format!("codes {codes:?}"))?;
    Ok("save/load byte-identical; duplicate_case_id, unknown_category, unknown_consequence".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("reference-case bands under shipped defaults", criterion_1),
        ("risk formula corners and band edges", criterion_2),
        ("monotonicity in adv, det, imp", criterion_3),
        ("estimator consistency", criterion_4),
        ("honest implementation has zero DET", criterion_5),
        ("determinism", criterion_6),
        ("calibration closure", criterion_7),
        ("percentile anchor", criterion_8),
        ("corpus round trip and rejection", criterion_9),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
