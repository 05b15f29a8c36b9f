//! `run` pipelines and `calibrate`.

use std::path::Path;

use quasinorm::calibration::Calibration;
use quasinorm::cube::{
    alesker_chain_with, cube_quotient_with, cubic_quotient_from_nonconvexity, pnormed_quotient, L1Subspace,
    PointCertificate, QuotientOptions, VertexSet,
};
use quasinorm::dvoretzky::dvoretzky_search;
use quasinorm::rng::derive_seed;
use quasinorm::{Error, Result};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{num, to_value, vector, Report, Table};
use crate::params::Params;
use crate::sources::{read_dataset, resolve};

pub const PIPELINES: [&str; 4] = ["cube-quotient", "pnormed-quotient", "cubic-from-delta", "dvoretzky-search"];

fn options(p: &Params, cfg: &RunConfig) -> Result<QuotientOptions> {
    let d = QuotientOptions::default();
    Ok(QuotientOptions {
        trials: p.get_or("trials", d.trials)?,
        queries: p.get_or("queries", d.queries)?,
        slot_factor: p.get_or("slot_factor", d.slot_factor)?,
        tolerance: cfg.tolerance(d.tolerance),
    })
}

fn certificate_table(certs: &[PointCertificate]) -> Table {
    let mut t = Table::new(&["query", "point", "reconstruction_error", "verified", "levels"]);
    for (i, c) in certs.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            vector(&c.point),
            num(c.reconstruction_error),
            c.verified.to_string(),
            c.splits.len().to_string(),
        ]);
    }
    t
}

fn envelope(pipeline: &str, cfg: &RunConfig, targets: Value, report: Value) -> Value {
    json!({
        "command": "run",
        "pipeline": pipeline,
        "seed": cfg.seed,
        "parameters": cfg.params.entries(),
        "calibration": cfg.calibration,
        "calibration_sources": cfg.calibration_sources,
        "targets": targets,
        "report": report,
    })
}

pub fn run_pipeline(pipeline: &str, cfg: &RunConfig) -> Result<Report> {
    let p = &cfg.params;
    let out = match pipeline {
        "cube-quotient" => {
            let data = resolve(p, cfg, "cube-vertices", &[("n", "8")])?;
            let eps = p.get_or("epsilon", 0.5)?;
            let opts = options(p, cfg)?;
            p.finish()?;
            let r = cube_quotient_with(&data.set, eps, &cfg.calibration, cfg.seed, &opts)?;
            let targets = json!({
                "sigma_at_least": (r.n as f64 * (1.0 - eps)).ceil(),
                "scale_target": r.scale_target,
                "theta_formula": r.theta_formula,
                "approx2_bound": quasinorm::hulls::approx2_bound(quasinorm::cube::ASSEMBLY_THETA),
            });
            Report {
                table: certificate_table(&r.certificates),
                json: envelope(pipeline, cfg, targets, to_value(&r)?),
            }
        }
        "pnormed-quotient" => {
            let data = resolve(p, cfg, "cube-vertices", &[("n", "8"), ("p", "0.5")])?;
            let body = data.body(p.get("p")?)?;
            let eps = p.get_or("epsilon", 0.5)?;
            let opts = options(p, cfg)?;
            p.finish()?;
            let r = pnormed_quotient(&body, eps, &cfg.calibration, cfg.seed, &opts)?;
            let targets = json!({
                "formula_value": r.formula_value,
                "scale_target": r.quotient.scale_target,
                "theta_formula": r.quotient.theta_formula,
            });
            Report {
                table: certificate_table(&r.quotient.certificates),
                json: envelope(pipeline, cfg, targets, to_value(&r)?),
            }
        }
        "cubic-from-delta" => {
            let data = resolve(p, cfg, "lp-ball", &[("n", "8"), ("p", "0.5")])?;
            let body = data.body(p.get("p")?)?;
            let subspace = match (p.list::<usize>("coordinates")?, p.raw("basis")) {
                (Some(_), Some(_)) => return Err(Error::input("give either coordinates= or basis=, not both")),
                (Some(c), None) => L1Subspace::Coordinates(c),
                (None, Some(path)) => L1Subspace::Basis(read_dataset(Path::new(path))?.set.points().to_vec()),
                (None, None) => L1Subspace::Coordinates((0..body.dimension()).collect()),
            };
            let k = p.get::<usize>("k")?;
            let opts = options(p, cfg)?;
            p.finish()?;
            let r = cubic_quotient_from_nonconvexity(&body, &subspace, k, &cfg.calibration, cfg.seed, &opts)?;
            let targets = json!({
                "dimension_bound": r.dimension_bound,
                "a_value": r.a_value,
                "formula_value": r.quotient.formula_value,
            });
            Report {
                table: certificate_table(&r.quotient.quotient.certificates),
                json: envelope(pipeline, cfg, targets, to_value(&r)?),
            }
        }
        "dvoretzky-search" => {
            let data = resolve(p, cfg, "sphere-sample", &[("n", "40"), ("count", "500")])?;
            let k = p.get_or("k", 3usize)?;
            let eta = p.get_or("eta", 0.2)?;
            let trials = p.get_or("trials", 200usize)?;
            p.finish()?;
            let r = dvoretzky_search(&data.set, k, eta, trials, cfg.seed)?;
            let mut t = Table::new(&["trial", "screened", "verified", "best"]);
            for (i, s) in r.screened.iter().enumerate() {
                t.push(vec![
                    i.to_string(),
                    num(*s),
                    r.verified_trials.contains(&i).to_string(),
                    (i == r.best.trial).to_string(),
                ]);
            }
            let targets = json!({ "ellipticity_at_most": 1.0 + eta });
            Report {
                table: t,
                json: envelope(pipeline, cfg, targets, to_value(&r)?),
            }
        }
        _ => {
            return Err(Error::input(format!(
                "unknown pipeline '{pipeline}' (known: {})",
                PIPELINES.join(", ")
            )))
        }
    };
    Ok(out)
}

/// The effective calibration record; with `fit=chain` also the smallest
/// `C` covering `a_s ≤ Cε⁻¹` and `b_s ≤ Cε⁻²` over random dense vertex sets.
pub fn calibrate(cfg: &RunConfig) -> Result<Report> {
    let p = &cfg.params;
    let fit = p.raw("fit").map(str::to_string);
    let mut t = Table::new(&["constant", "value", "default", "source"]);
    let defaults = Calibration::default();
    for (k, v) in cfg.calibration.entries() {
        t.push(vec![
            k.to_string(),
            num(v),
            num(defaults.get(k).expect("known key")),
            cfg.calibration_sources[k].clone(),
        ]);
    }
    let fitted = match fit.as_deref() {
        None => Value::Null,
        Some("chain") => {
            let n = p.get_or("n", 10usize)?;
            let eps = p.get_or("epsilon", 0.5)?;
            let instances = p.get_or("instances", 20usize)?;
            let size = match p.get::<usize>("size")? {
                Some(s) => s,
                None => VertexSet::density_size(n, cfg.calibration.c, eps),
            };
            let mut needed = 0.0f64;
            let mut failures = 0usize;
            let mut rows = Vec::new();
            for i in 0..instances {
                let v = VertexSet::random(n, size, derive_seed(cfg.seed, i as u64))?;
                match alesker_chain_with(&v, eps, cfg.calibration.c) {
                    Ok(chain) => {
                        let c = (chain.scale() as f64 * eps).max(chain.slots() as f64 * eps * eps);
                        needed = needed.max(c);
                        rows.push(json!({ "instance": i, "sigma": chain.final_sigma().len(), "scale": chain.scale(), "slots": chain.slots(), "C_needed": c }));
                    }
                    Err(e) => {
                        failures += 1;
                        rows.push(json!({ "instance": i, "error": e.to_string() }));
                    }
                }
            }
            json!({
                "kind": "chain", "n": n, "epsilon": eps, "size": size, "instances": instances,
                "chain_failures": failures, "C_needed": needed, "C_calibrated": cfg.calibration.big_c,
                "covered": needed <= cfg.calibration.big_c, "runs": rows,
            })
        }
        Some(other) => return Err(Error::input(format!("unknown fit '{other}' (known: chain)"))),
    };
    p.finish()?;
    Ok(Report {
        json: json!({
            "command": "calibrate",
            "seed": cfg.seed,
            "calibration": cfg.calibration,
            "calibration_sources": cfg.calibration_sources,
            "defaults": defaults,
            "fit": fitted,
        }),
        table: t,
    })
}
