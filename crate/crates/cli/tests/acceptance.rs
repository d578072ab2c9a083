//! Acceptance criteria, one PASS/FAIL line each. Unmet criteria are reported, not
//! hidden; set ORBITLETS_STRICT=1 to turn any FAIL into a nonzero exit.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use orbitlets_cli::config::Config;
use orbitlets_cli::report::Report;
use orbitlets_cli::scenarios;

const GROUPS: [&str; 3] = ["dyadic1d", "similitude2d", "shearlet2d"];

#[derive(Default)]
struct Runs {
    cache: BTreeMap<String, Report>,
}

impl Runs {
    fn get(&mut self, scenario: &str, overrides: &[String]) -> Result<&Report, String> {
        let key = format!("{scenario} {}", overrides.join(" "));
        if !self.cache.contains_key(&key) {
            let mut cfg = Config::default();
            for o in overrides {
                cfg.apply_override(o).map_err(|e| e.to_string())?;
            }
            let t = Instant::now();
            let r = scenarios::run(scenario, cfg).map_err(|e| format!("{key}: {e:#}"))?;
            eprintln!("  ran {key} in {:.1} s", t.elapsed().as_secs_f64());
            self.cache.insert(key.clone(), r);
        }
        Ok(&self.cache[&key])
    }

    /// Checks the named assertions of one run; returns (all passed, details).
    fn check(&mut self, scenario: &str, overrides: &[String], names: &[&str]) -> (bool, Vec<String>) {
        let r = match self.get(scenario, overrides) {
            Ok(r) => r,
            Err(e) => return (false, vec![format!("error: {e}")]),
        };
        let mut ok = true;
        let mut notes = Vec::new();
        for n in names {
            match r.assertion(n) {
                Some(a) => {
                    ok &= a.passed;
                    notes.push(format!("{n}: {}", a.detail));
                }
                None => {
                    ok = false;
                    notes.push(format!("{n}: missing"));
                }
            }
        }
        (ok, notes)
    }
}

fn group(g: &str) -> String {
    format!("group=\"{g}\"")
}

fn main() -> ExitCode {
    let mut runs = Runs::default();
    let mut lines: Vec<(usize, bool, String)> = Vec::new();
    let mut record = |n: usize, what: &str, parts: Vec<(String, (bool, Vec<String>))>| {
        let ok = parts.iter().all(|p| p.1 .0);
        let detail: Vec<String> = parts.iter().map(|(label, (_, notes))| format!("[{label}] {}", notes.join("; "))).collect();
        let line = format!("{} criterion {n}: {what} | {}", if ok { "PASS" } else { "FAIL" }, detail.join(" "));
        println!("{line}");
        lines.push((n, ok, line));
    };

    let parts = ["similitude2d", "shearlet2d"]
        .iter()
        .map(|g| (g.to_string(), runs.check("parseval-check", &[group(g)], &["ratio_matches_calderon", "runtime"])))
        .collect();
    record(1, "Parseval ratio matches the Calderon constant", parts);

    let parts = GROUPS
        .iter()
        .map(|g| (g.to_string(), runs.check("bapu-check", &[group(g)], &["calderon_constant", "calderon_refines"])))
        .collect();
    record(2, "Calderon sum constant on orbit probes and refining", parts);

    let parts = GROUPS
        .iter()
        .map(|g| (g.to_string(), runs.check("bapu-check", &[group(g)], &["probe_count", "partition_of_unity"])))
        .collect();
    record(3, "partition of unity on safe probes", parts);

    let parts = GROUPS
        .iter()
        .map(|g| (g.to_string(), runs.check("bapu-check", &[group(g)], &["l1_bound", "l1_max_stable"])))
        .collect();
    record(4, "L1 bound for every index, stable under window doubling", parts);

    let parts = vec![
        ("similitude2d".to_string(), runs.check("covering-stats", &[group("similitude2d")], &["dyadic_annuli_cluster"])),
        ("translates".to_string(), runs.check("covering-stats", &[group("similitude2d")], &["translate_clusters_adjacent"])),
        ("shearlet2d".to_string(), runs.check("covering-stats", &[group("shearlet2d")], &["constants_stable_under_doubling"])),
    ];
    record(5, "cluster certificates", parts);

    let parts = ["dyadic1d", "similitude2d"]
        .iter()
        .map(|g| (g.to_string(), runs.check("localization-check", &[group(g)], &["deviation", "order"])))
        .collect();
    record(6, "localization identity", parts);

    let parts = vec![(
        "cauchy".to_string(),
        runs.check("decomp-norm", &[group("dyadic1d"), "cauchy.n=6".into()], &["matches_closed_form", "successive_ratio"]),
    )];
    record(7, "Cauchy example", parts);

    let parts = GROUPS
        .iter()
        .map(|g| (g.to_string(), runs.check("equivalence", &[group(g)], &["bracket", "dilates_constant"])))
        .collect();
    record(8, "decomposition and coorbit norms equivalent", parts);

    let parts = vec![(
        "shearlet2d".to_string(),
        runs.check("shear-rotation", &[], &["h2_log_linear", "conjugated_converges", "runtime"]),
    )];
    record(9, "shearlet quarter-turn experiment", parts);

    let mut parts = Vec::new();
    for (label, g) in [("identity", "[1.0, 0.0, 0.0, 1.0]"), ("rotation", "[0.0, -1.0, 1.0, 0.0]"), ("diag(2,1)", "[2.0, 0.0, 0.0, 1.0]")] {
        for c in ["similitude2d", "shearlet2d"] {
            parts.push((format!("{c} {label}"), runs.check("covariance-check", &[group(c), format!("g={g}")], &["deviation"])));
        }
    }
    record(10, "conjugation covariance", parts);

    let parts = vec![
        ("rotation".to_string(), runs.check("dilation-invariance", &["g=[0.0, -1.0, 1.0, 0.0]".into()], &["ratio_one"])),
        (
            "diag(2,1)".to_string(),
            runs.check("dilation-invariance", &["g=[2.0, 0.0, 0.0, 1.0]".into()], &["bracket_finite", "bracket_stable"]),
        ),
    ];
    record(11, "similitude dilation invariance", parts);

    let passed = lines.iter().filter(|l| l.1).count();
    let failed: Vec<String> = lines.iter().filter(|l| !l.1).map(|l| l.0.to_string()).collect();
    println!(
        "acceptance: {passed} of {} criteria pass{}",
        lines.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
    );
    let strict = std::env::var("ORBITLETS_STRICT").is_ok_and(|v| v == "1");
    if strict && !failed.is_empty() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
