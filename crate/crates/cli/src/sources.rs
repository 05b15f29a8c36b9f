//! Dataset generators and input resolution shared by every command.

use std::path::Path;

use quasinorm::bodies::{GeneratingSet, PBody};
use quasinorm::cube::VertexSet;
use quasinorm::io::{generating_set_csv, generating_set_json, read_generating_set};
use quasinorm::{Error, Result};

use crate::config::{Format, RunConfig};
use crate::output::Table;
use crate::params::Params;

pub const KINDS: [&str; 4] = ["lp-ball", "cube-vertices", "random-vertex-subset", "sphere-sample"];

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub set: GeneratingSet,
    /// Exponent of the body, when the source carries one.
    pub p: Option<f64>,
}

impl Dataset {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => generating_set_json(&self.set, self.p),
            Format::Csv => generating_set_csv(&self.set),
        }
    }

    /// The p-body on these generators; `lp-ball` sources keep their closed forms.
    pub fn body(&self, default_p: Option<f64>) -> Result<PBody> {
        let p = self
            .p
            .or(default_p)
            .ok_or_else(|| Error::input("the body needs an exponent p"))?;
        if self.set.label().starts_with("lp-ball") {
            return PBody::lp_ball(self.set.dimension(), p);
        }
        PBody::new(self.set.clone(), p)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["index", "point"]);
        for (i, pt) in self.set.points().iter().enumerate() {
            t.push(vec![i.to_string(), crate::output::vector(pt)]);
        }
        t
    }
}

fn require<T: std::str::FromStr>(params: &Params, key: &str, kind: &str) -> Result<T> {
    params
        .get(key)?
        .ok_or_else(|| Error::input(format!("{kind} needs {key}=...")))
}

/// Builds one of the named datasets from `params`.
pub fn generate(kind: &str, params: &Params, cfg: &RunConfig) -> Result<Dataset> {
    match kind {
        "lp-ball" => {
            let n: usize = require(params, "n", kind)?;
            let p: f64 = require(params, "p", kind)?;
            let body = PBody::lp_ball(n, p)?;
            Ok(Dataset {
                set: body.generators().clone().with_label(format!("lp-ball-{n}")),
                p: Some(p),
            })
        }
        "cube-vertices" => {
            let n: usize = require(params, "n", kind)?;
            Ok(Dataset {
                set: GeneratingSet::cube_vertices(n)?,
                p: params.get("p")?,
            })
        }
        "random-vertex-subset" => {
            let n: usize = require(params, "n", kind)?;
            let size = match params.get::<usize>("size")? {
                Some(s) => s,
                None => {
                    let eps: f64 = require(params, "epsilon", kind)?;
                    let c = params.get_or("c", cfg.calibration.c)?;
                    VertexSet::density_size(n, c, eps)
                }
            };
            let v = VertexSet::random(n, size, cfg.seed)?;
            Ok(Dataset {
                set: v.to_generating_set(&format!("random-vertex-subset-{n}-{size}"))?,
                p: params.get("p")?,
            })
        }
        "sphere-sample" => {
            let n: usize = require(params, "n", kind)?;
            let count = params.get_or("count", 500usize)?;
            Ok(Dataset {
                set: GeneratingSet::sphere_sample(count, n, cfg.seed)?,
                p: params.get("p")?,
            })
        }
        _ => Err(Error::input(format!("unknown dataset kind '{kind}' (known: {})", KINDS.join(", ")))),
    }
}

/// Reads a generating-set file; a file of `+`/`−` lines is read as vertices.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'));
    if first.is_some_and(|l| l.starts_with(['+', '-']) && l.chars().all(|c| c == '+' || c == '-')) {
        let v = VertexSet::parse_lines(&text)?;
        let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("vertices");
        return Ok(Dataset {
            set: v.to_generating_set(label)?,
            p: None,
        });
    }
    let loaded = read_generating_set(path)?;
    Ok(Dataset {
        set: loaded.set,
        p: loaded.p,
    })
}

/// `input=FILE`, else `set=KIND` with its generator parameters, else the
/// command's default kind (whose parameters may be defaulted by `defaults`).
pub fn resolve(params: &Params, cfg: &RunConfig, default_kind: &str, defaults: &[(&str, &str)]) -> Result<Dataset> {
    if let Some(path) = params.raw("input") {
        return read_dataset(Path::new(path));
    }
    let kind = params.raw("set").unwrap_or(default_kind).to_string();
    let mut merged = Params::new();
    for (k, v) in defaults {
        merged.set(k, v);
    }
    for k in ["n", "p", "count", "epsilon", "c", "size"] {
        if params.contains(k) {
            merged.set(k, params.raw(k).expect("present"));
        }
    }
    generate(&kind, &merged, cfg)
}
