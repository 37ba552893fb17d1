// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rotmap::checks::{self, CheckOutcome, Suite};
use rotmap::experiments::ExperimentReport;
use rotmap::mappings::MappingKind;

type Verdict = Result<(bool, String), Box<dyn std::error::Error>>;
type Criterion = fn() -> Verdict;

const SEEDS: usize = 5;

fn cli(args: &[&str]) -> Result<String, Box<dyn std::error::Error>> {
    let mut out = Vec::new();
    let mut argv = vec!["rotmap"];
    argv.extend_from_slice(args);
    let code = rotmap::cli::run(argv, &mut out);
    if code != 0 {
        return Err(format!("`{}` exited with {code}", args.join(" ")).into());
    }
    Ok(String::from_utf8(out)?)
}

fn failures(outcomes: &[CheckOutcome]) -> Vec<String> {
    outcomes.iter().filter(|o| !o.passed).map(|o| o.to_string()).collect()
}

fn require(outcomes: &[CheckOutcome], names: &[String]) -> Vec<String> {
    names
        .iter()
        .filter(|n| !outcomes.iter().any(|o| &o.name == *n))
        .map(|n| format!("missing {n}"))
        .collect()
}

fn gradient_suite() -> Verdict {
    let samples = Suite::Gradcheck.default_samples().max(200);
    let start = Instant::now();
    let outcomes = checks::gradcheck(&MappingKind::ALL, samples, 0)?;
    let elapsed = start.elapsed();
    let mut expected: Vec<String> = MappingKind::ALL.iter().map(|k| format!("gradcheck/{k}")).collect();
    expected.extend(MappingKind::ALL.iter().map(|k| format!("gradcheck/net-{k}")));
    expected.extend(["softmax", "loss-frobenius", "loss-quaternion", "loss-points"].map(|s| format!("gradcheck/{s}")));
    let mut bad = failures(&outcomes);
    bad.extend(require(&outcomes, &expected));
    let ok = bad.is_empty() && elapsed < Duration::from_secs(60);
    Ok((ok, format!("checks={} probes_each={samples} time={:.1}s {}", outcomes.len(), elapsed.as_secs_f64(), bad.join("; "))))
}

fn property_suite() -> Verdict {
    let mut outcomes = checks::rankcheck(Suite::Rankcheck.default_samples(), 0)?;
    outcomes.extend(checks::convexity(Suite::Convexity.default_samples(), 0)?);
    let mut expected: Vec<String> = MappingKind::ALL.iter().map(|k| format!("surjective/{k}")).collect();
    expected.extend(checks::FULL_RANK_KINDS.iter().map(|k| format!("rankcheck/full/{k}")));
    expected.extend(["rotvec", "euler-xyz"].map(|k| format!("rankcheck/deficient/{k}")));
    expected.extend(["procrustes", "6d", "symmatrix10"].map(|k| format!("convex-preimage/{k}")));
    expected.extend(["quaternion", "rotvec", "euler-xyz"].map(|k| format!("disconnected-preimage/{k}")));
    let mut bad = failures(&outcomes);
    bad.extend(require(&outcomes, &expected));
    Ok((bad.is_empty(), format!("checks={} {}", outcomes.len(), bad.join("; "))))
}

fn identity_suite() -> Verdict {
    let outcomes = checks::identities(10_000, 0)?;
    let expected = ["frobenius-angle", "quaternion-angle", "small-angle-ratio", "points-closed-form"].map(|s| format!("identity/{s}"));
    let mut bad = failures(&outcomes);
    bad.extend(require(&outcomes, &expected));
    Ok((bad.is_empty(), format!("pairs=10000 {}", bad.join("; "))))
}

fn gram_schmidt_limit() -> Verdict {
    let outcomes = checks::limit_gs(100, 0)?;
    let bad = failures(&outcomes);
    let detail = outcomes.iter().map(|o| o.detail.clone()).collect::<Vec<_>>().join("; ");
    Ok((bad.is_empty() && !outcomes.is_empty(), detail))
}

fn linearity() -> Verdict {
    let start = Instant::now();
    let csv = cli(&["linearity"])?;
    let elapsed = start.elapsed();
    let report = ExperimentReport::from_csv(&csv)?;
    let median = |mapping: &str, key: &str| report.values("linearity", mapping, key, "median").first().copied();
    let keys: Vec<String> = report
        .rows()
        .iter()
        .filter(|r| r.metric == "median" && r.mapping == "procrustes")
        .map(|r| r.key.clone())
        .collect();
    let restricted = MappingKind::RotVecRestricted { max_angle: std::f64::consts::FRAC_PI_2 }.to_string();
    let mut bad = Vec::new();
    let (mut worst_restricted, mut worst_plain): (f64, f64) = (0.0, 0.0);
    for k in &keys {
        let (Some(p), Some(s), Some(q), Some(rr), Some(rv)) = (
            median("procrustes", k),
            median("6d", k),
            median("quaternion", k),
            median(&restricted, k),
            median("rotvec", k),
        ) else {
            bad.push(format!("missing medians at eps={k}"));
            continue;
        };
        if !(p < s && p < q) {
            bad.push(format!("ordering at eps={k}: procrustes={p:.3e} 6d={s:.3e} quaternion={q:.3e}"));
        }
        worst_restricted = worst_restricted.max(rr / p).max(p / rr);
        worst_plain = worst_plain.max(rv / p).max(p / rv);
    }
    if worst_restricted > 2.0 {
        bad.push(format!("rotation-vector ratio {worst_restricted:.2}"));
    }
    let ok = keys.len() == 20 && bad.is_empty() && elapsed < Duration::from_secs(120);
    Ok((
        ok,
        format!(
            "eps_points={} rotvec<pi/2 ratio<= {worst_restricted:.2} (info: unrestricted rotvec ratio<= {worst_plain:.2}) time={:.1}s {}",
            keys.len(),
            elapsed.as_secs_f64(),
            bad.join("; ")
        ),
    ))
}

fn seed_mean(report: &ExperimentReport, experiment: &str, mapping: &str, key: &str, metric: &str) -> Result<f64, String> {
    let v = report.values(experiment, mapping, key, metric);
    if v.len() != SEEDS {
        return Err(format!("{experiment}/{mapping}: {} seeds at step {key}", v.len()));
    }
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

fn training_orderings() -> Verdict {
    let seeds = SEEDS.to_string();
    let start = Instant::now();
    let align = ExperimentReport::from_csv(&cli(&["align", "--num-seeds", &seeds])?)?;
    let align_time = start.elapsed();
    let ik = ExperimentReport::from_csv(&cli(&["ik", "--num-seeds", &seeds])?)?;
    let elapsed = start.elapsed();

    let last = |r: &ExperimentReport| r.rows().iter().filter_map(|row| row.key.parse::<usize>().ok()).max().unwrap_or(0).to_string();
    let mut bad = Vec::new();
    let mut detail = Vec::new();
    for (experiment, report, metric) in [("align", &align, "test_error_deg"), ("ik", &ik, "mean_joint_error")] {
        let key = last(report);
        let m = |name: &str| seed_mean(report, experiment, name, &key, metric);
        let (p, s, q, r) = (m("procrustes")?, m("6d")?, m("quaternion")?, m("rotvec")?);
        detail.push(format!("{experiment}: procrustes={p:.3} 6d={s:.3} quaternion={q:.3} rotvec={r:.3}"));
        if p.max(s) >= q.min(r) {
            bad.push(format!("{experiment} ordering"));
        }
        if experiment == "align" {
            let (mp, mg) = (m("matrix/procrustes")?, m("matrix/gram-schmidt")?);
            detail.push(format!("matrix/procrustes={mp:.3} matrix/gram-schmidt={mg:.3}"));
            if mp > mg {
                bad.push("matrix ablation".into());
            }
        }
    }
    let ok = bad.is_empty() && elapsed < Duration::from_secs(15 * 60);
    Ok((
        ok,
        format!(
            "{} time={:.0}s (align {:.0}s) {}",
            detail.join(" | "),
            elapsed.as_secs_f64(),
            align_time.as_secs_f64(),
            bad.join("; ")
        ),
    ))
}

fn determinism() -> Verdict {
    let commands: [&[&str]; 8] = [
        &["gradcheck", "--samples", "20", "--seed", "3"],
        &["rankcheck", "--samples", "50", "--seed", "3"],
        &["convexity", "--samples", "50", "--seed", "3"],
        &["identities", "--samples", "200", "--seed", "3"],
        &["linearity", "--samples", "500", "--eps", "1e-3:1:logspace5", "--seed", "3"],
        &["align", "--iterations", "100", "--eval-every", "50", "--test-size", "32", "--num-seeds", "2", "--seed", "3"],
        &["ik", "--iterations", "100", "--eval-every", "50", "--test-size", "32", "--num-seeds", "2", "--seed", "3"],
        &["probe-restricted", "--iterations", "100", "--eval-every", "50", "--test-size", "32", "--seed", "3"],
    ];
    let mut bad = Vec::new();
    for args in commands {
        let first = cli(args)?;
        let again = cli(args)?;
        let mut threaded: Vec<&str> = args.to_vec();
        threaded.extend(["--jobs", "3"]);
        let parallel = cli(&threaded)?;
        if first.is_empty() || first != again || first != parallel {
            bad.push(args[0].to_string());
        }
    }
    Ok((bad.is_empty(), format!("commands={} {}", commands.len(), bad.join(" "))))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 7] = [
        ("1 gradient-suite", gradient_suite),
        ("2 property-framework", property_suite),
        ("3 identities", identity_suite),
        ("4 gram-schmidt-limit", gram_schmidt_limit),
        ("5 linearity", linearity),
        ("6 training-orderings", training_orderings),
        ("7 determinism", determinism),
    ];
    let mut all = true;
    for (name, criterion) in criteria {
        let (ok, detail) = match criterion() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        all &= ok;
        println!("{} {name} {}", if ok { "PASS" } else { "FAIL" }, detail.trim_end());
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
