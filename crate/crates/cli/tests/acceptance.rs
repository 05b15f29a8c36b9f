//! Acceptance criteria, one line each. Runs without the libtest harness so
//! every line is printed; exits non-zero when any criterion fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use quasinorm::bodies::GeneratingSet;
use quasinorm::cube::{l1_to_cube_operator, verify_operator_image};
use quasinorm::hulls::{delta_m_membership, DeltaMVerdict, DEFAULT_NODE_BUDGET};
use quasinorm::io::generating_set_json;
use quasinorm::linalg::dot;
use quasinorm::rng::rng;
use quasinorm_cli::suites::noisy_cube;
use rand::Rng;
use serde_json::Value;

struct Verdict {
    pass: bool,
    summary: String,
}

fn run(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_quasinorm"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code(), out.stdout)
}

/// `verify` report plus whether the exit code agreed with its pass flag.
fn verify(args: &[&str]) -> Value {
    let mut full = vec!["verify"];
    full.extend_from_slice(args);
    let (code, stdout) = run(&full);
    let v: Value = serde_json::from_slice(&stdout).unwrap_or_else(|e| panic!("verify {args:?}: {e}"));
    let pass = v["pass"].as_bool() == Some(true);
    assert_eq!(code, Some(if pass { 0 } else { 1 }), "exit code for verify {args:?}");
    v
}

fn failures(v: &Value) -> String {
    v["failures"]
        .as_array()
        .map(|f| f.iter().take(3).map(|x| x.as_str().unwrap_or("").to_string()).collect::<Vec<_>>().join("; "))
        .unwrap_or_default()
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn delta_exactness() -> Verdict {
    let mut worst_gap = 0.0f64;
    let mut bad = Vec::new();
    let mut cases = 0;
    for p in ["0.5", "0.75"] {
        for n in 2..=8 {
            let v = verify(&["delta", &format!("n={n}"), &format!("p={p}")]);
            cases += 1;
            let exact = (n as f64).powf(1.0 / p.parse::<f64>().unwrap() - 1.0);
            let closed = v["details"]["closed_form"]["value"].as_f64().unwrap();
            let search = v["details"]["search"]["value"].as_f64().unwrap();
            let gap = (exact - search) / exact;
            worst_gap = worst_gap.max(gap.abs());
            if !(v["pass"] == true && (closed - exact).abs() <= 1e-12 * exact && gap.abs() <= 1e-3) {
                bad.push(format!("n={n} p={p}: closed {closed} search {search}"));
            }
        }
    }
    Verdict {
        pass: bad.is_empty(),
        summary: format!("{cases} (n,p) cases, worst search gap {worst_gap:.2e} (limit 1e-3) {}", bad.join("; ")),
    }
}

fn pconv_monte_carlo() -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    let mut bad = Vec::new();
    for p in ["0.5", "0.75"] {
        let v = verify(&["pconv", &format!("p={p}"), "theta=0.5,0.9", "samples=10000"]);
        for r in v["details"]["reports"].as_array().unwrap() {
            let (ratio, bound) = (r["max_ratio"].as_f64().unwrap(), r["bound"].as_f64().unwrap());
            worst = worst.max(ratio - bound);
            if ratio > bound + 1e-6 || r["samples"] != 10000 {
                bad.push(format!("p={p} θ={}: {ratio} > {bound}", r["theta"]));
            }
        }
        if v["pass"] != true {
            bad.push(failures(&v));
        }
    }
    Verdict {
        pass: bad.is_empty(),
        summary: format!("4 (p,θ) pairs × 10⁴ samples, max(gauge − bound) = {worst:.4} {}", bad.join("; ")),
    }
}

fn approx2_transform() -> Verdict {
    let v = verify(&["approx2", "theta=0.75", "m=2,3,5", "samples=100"]);
    let scale = v["details"]["max_scale"].as_f64().unwrap();
    let err = v["details"]["max_reconstruction_error"].as_f64().unwrap();
    Verdict {
        pass: v["pass"] == true && scale <= 1.2 + 1e-12 && err <= 1e-10,
        summary: format!("100 inputs, max scale {scale:.6} ≤ 1.2, max reconstruction error {err:.1e} {}", failures(&v)),
    }
}

fn type1_pipeline() -> Verdict {
    let v = verify(&["type1", "points=64", "theta=0.5", "samples=100"]);
    let err = v["details"]["max_reconstruction_error"].as_f64().unwrap();
    let ratio = v["details"]["max_defect_over_greedy_bound"].as_f64().unwrap();
    Verdict {
        pass: v["pass"] == true && err <= 1e-6 && ratio <= 1.0 + 1e-12,
        summary: format!(
            "100 points, max error {err:.2e} ≤ 1e-6, max defect/(1/√(2N)) {ratio:.4}, {} halving steps {}",
            v["details"]["halving_steps"],
            failures(&v)
        ),
    }
}

fn alesker_certificates() -> Verdict {
    let v = verify(&["alesker", "n=10", "size=512", "epsilon=0.5", "instances=20"]);
    let runs = v["details"]["instances"].as_array().cloned().unwrap_or_default();
    let all_verified = runs.len() == 20
        && runs.iter().all(|r| {
            let sigma = r["sigma"].as_array().unwrap().len();
            r["verified"].as_u64() == Some(1 << sigma) && sigma >= 5
        });
    Verdict {
        pass: v["pass"] == true && all_verified,
        summary: format!(
            "{} instances, min |σ| = {} ≥ 5, all vertex certificates exact: {all_verified} {}",
            runs.len(),
            v["realized"],
            failures(&v)
        ),
    }
}

fn counting_bound() -> Verdict {
    let v = verify(&["counting", "nmax=10"]);
    Verdict {
        pass: v["pass"] == true,
        summary: format!(
            "{} families over n ≤ 10, worst margin above the bound {} {}",
            v["details"]["cases"],
            v["details"]["worst_margin"],
            failures(&v)
        ),
    }
}

fn cube_quotient_end_to_end() -> Verdict {
    let v = verify(&["main", "n=10", "extra=50", "d=2", "epsilon=0.5", "queries=200"]);
    let d = &v["details"];
    Verdict {
        pass: v["pass"] == true,
        summary: format!(
            "|σ| = {}, verified fraction {}, variance {} vs 4nd²/m = {} {}",
            d["sigma"].as_array().map_or(0, |s| s.len()),
            v["realized"],
            d["variance_monte_carlo"]["mean_square_deviation"],
            d["variance_monte_carlo"]["bound"],
            failures(&v)
        ),
    }
}

fn operator_image() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for k in [1usize, 2] {
        let m = 1 << (2 * k - 1);
        let matrix = l1_to_cube_operator(m, k).unwrap();
        let img = verify_operator_image(&matrix).unwrap();
        let ok = img.rows == 2 * k && img.equals_cube(1e-9);
        pass &= ok;
        parts.push(format!(
            "k={k}: {}×{m}, vertex gauges in [{:.12}, {:.12}]",
            img.rows, img.min_vertex_gauge, img.max_vertex_gauge
        ));
    }
    Verdict { pass, summary: parts.join("; ") }
}

fn dvoretzky_search() -> Verdict {
    let v = verify(&["dvoretzky", "n=40", "count=500", "k=3", "eta=0.2", "trials=200", "theta=0.5", "samples=100"]);
    let d = &v["details"];
    Verdict {
        pass: v["pass"] == true,
        summary: format!(
            "best ellipticity {} (target ≤ 1.2), represented {}/100, max contraction {} ≤ {} {}",
            d["ellipticity"],
            d["represented"],
            d["max_contraction"],
            v["constants"]["contraction_bound"],
            failures(&v)
        ),
    }
}

/// `x ∈ Σ μ_i [−s_i, s_i]` for planar generators, by the zonotope's facet
/// normals (perpendicular to each generator) plus the generators themselves
/// for the degenerate one-dimensional case.
fn zonotope_contains(gens: &[&[f64]], mu: &[u64], x: &[f64]) -> bool {
    let active: Vec<(&[f64], f64)> = gens.iter().zip(mu).filter(|(_, &m)| m > 0).map(|(g, &m)| (*g, m as f64)).collect();
    if active.is_empty() {
        return x.iter().all(|v| v.abs() <= 1e-9);
    }
    let mut normals = Vec::new();
    for (g, _) in &active {
        normals.push(vec![-g[1], g[0]]);
        normals.push(g.to_vec());
    }
    normals.iter().all(|nrm| {
        let h: f64 = active.iter().map(|(g, m)| m * dot(nrm, g).abs()).sum();
        dot(nrm, x).abs() <= h + 1e-9 * (1.0 + h)
    })
}

/// Brute force over every multiplicity vector with total at most `m`.
fn brute_force_member(s: &GeneratingSet, m: u64, x: &[f64]) -> bool {
    let gens: Vec<&[f64]> = (0..s.len()).map(|i| s.point(i)).collect();
    let mx: Vec<f64> = x.iter().map(|v| v * m as f64).collect();
    let k = gens.len();
    let mut mu = vec![0u64; k];
    loop {
        if mu.iter().sum::<u64>() <= m && zonotope_contains(&gens, &mu, &mx) {
            return true;
        }
        let mut i = 0;
        loop {
            if i == k {
                return false;
            }
            mu[i] += 1;
            if mu[i] <= m {
                break;
            }
            mu[i] = 0;
            i += 1;
        }
    }
}

fn oracle_equivalence() -> Verdict {
    let mut sets = vec![
        GeneratingSet::signed_basis(2),
        GeneratingSet::new(vec![vec![1.0, 0.0], vec![0.5, 1.0], vec![-0.5, 1.0]], "hexagon-ish").unwrap(),
        GeneratingSet::new(vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![0.5, 0.0], vec![0.0, 0.5]], "mixed").unwrap(),
    ];
    let mut r = rng(10);
    for count in 2..=4 {
        let pts = (0..count).map(|_| vec![r.random_range(-1.2..1.2), r.random_range(-1.2..1.2)]).collect();
        sets.push(GeneratingSet::new(pts, format!("random-{count}")).unwrap());
    }
    let mut checked = 0;
    let mut members = 0;
    let mut bad = Vec::new();
    for s in &sets {
        for m in 1..=4u64 {
            for i in 0..21 {
                for j in 0..21 {
                    let x = [-1.0 + 0.1 * i as f64, -1.0 + 0.1 * j as f64];
                    let fast = match delta_m_membership(s, m, &x, DEFAULT_NODE_BUDGET).unwrap() {
                        DeltaMVerdict::Member { certificate, .. } => certificate.verify(s, &x, 1e-9).is_ok().then_some(true),
                        DeltaMVerdict::NonMember { .. } => Some(false),
                        DeltaMVerdict::Undecided { .. } => None,
                    };
                    let slow = brute_force_member(s, m, &x);
                    checked += 1;
                    members += usize::from(slow);
                    if fast != Some(slow) {
                        bad.push(format!("{} m={m} x={x:?}: {fast:?} vs {slow}", s.label()));
                    }
                }
            }
        }
    }
    Verdict {
        pass: bad.is_empty(),
        summary: format!(
            "{} sets × m ≤ 4 × 21² grid: {checked} queries ({members} members), {} disagreements {}",
            sets.len(),
            bad.len(),
            bad.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
        ),
    }
}

fn reproducibility() -> Verdict {
    let noisy = scratch("noisy-cube.json");
    let set = noisy_cube(8, 20, 2.0, 5).unwrap();
    std::fs::write(&noisy, generating_set_json(&set, None)).unwrap();
    let config = scratch("repro.cfg");
    std::fs::write(&config, "seed = 17\nconst.c1 = 0.2\n").unwrap();
    let input = format!("input={}", noisy.display());
    let cfg = config.to_str().unwrap().to_string();
    let runs: Vec<Vec<&str>> = vec![
        vec!["run", "cube-quotient"],
        vec!["run", "cube-quotient", &input, "queries=50"],
        vec!["--config", &cfg, "run", "cube-quotient", &input, "queries=50"],
        vec!["--format", "csv", "run", "cube-quotient", &input, "queries=50"],
        vec!["run", "pnormed-quotient"],
        vec!["run", "cubic-from-delta", "k=1"],
        vec!["--seed", "9", "run", "dvoretzky-search", "trials=40"],
        vec!["--seed", "9", "calibrate", "fit=chain", "instances=5"],
    ];
    let mut bad = Vec::new();
    let mut bytes = 0;
    for args in &runs {
        let (c1, a) = run(args);
        let (c2, b) = run(args);
        bytes += a.len();
        if c1 != Some(0) || c2 != Some(0) || a.is_empty() || a != b {
            bad.push(format!("{args:?}"));
        }
    }
    Verdict {
        pass: bad.is_empty(),
        summary: format!("{} configurations run twice, {bytes} bytes compared {}", runs.len(), bad.join("; ")),
    }
}

fn main() {
    let criteria: Vec<(u32, &str, Option<u64>, fn() -> Verdict)> = vec![
        (1, "δ exactness for ℓ_p balls", Some(10), delta_exactness),
        (2, "p-convex contraction Monte-Carlo", Some(30), pconv_monte_carlo),
        (3, "Γ_θΔ_m re-indexing", Some(10), approx2_transform),
        (4, "halving pipeline on the circle", Some(60), type1_pipeline),
        (5, "exact chain certificates", Some(300), alesker_certificates),
        (6, "counting selection bound", Some(30), counting_bound),
        (7, "cube quotient end to end", Some(600), cube_quotient_end_to_end),
        (8, "ℓ₁-to-cube operator image", Some(5), operator_image),
        (9, "Dvoretzky search and ellipsoid expansion", Some(120), dvoretzky_search),
        (10, "Δ_m oracle against brute force", Some(60), oracle_equivalence),
        (11, "byte-identical reruns", None, reproducibility),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|s| elapsed < Duration::from_secs(s));
        let pass = v.pass && in_time;
        let budget = limit.map_or(String::new(), |s| format!(" < {s} s"));
        println!(
            "[{}] {id:>2} {name}: {} ({:.1} s{budget})",
            if pass { "PASS" } else { "FAIL" },
            v.summary.trim_end(),
            elapsed.as_secs_f64()
        );
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
