//! Instance files: TOML `key = value` documents, one key per model input.
//!
//! ```toml
//! # dualsource instance v1
//! name = "example"
//! description = ""
//! provenance = ""
//!
//! n = 7
//! s_max = 8
//! demand_family = "negative_binomial"
//! mu_c = 0.01
//! var_c = 0.02
//! l_c = 8
//! c_c = 5000.0
//! k_c = 2000.0
//! mu_a = 0.02
//! var_a = 0.04
//! l_a = 2
//! c_a = 10000.0
//! k_a = 0.0
//! q_c = 5
//! m = 5000.0
//! h = 29.0
//! b = 5725.0
//! ```
//!
//! Unknown keys are rejected. `var_c` and `var_a` may be omitted for Poisson
//! demand, in which case they equal the means.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::params::{DemandFamily, InstanceParams, ModeParams};

use super::library;

pub const INSTANCE_HEADER: &str = "# dualsource instance v1";

/// An instance together with its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub name: String,
    pub description: String,
    pub provenance: String,
    pub params: InstanceParams,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    #[serde(default)]
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    provenance: String,
    n: u32,
    s_max: u32,
    demand_family: String,
    mu_c: f64,
    var_c: Option<f64>,
    l_c: usize,
    c_c: f64,
    k_c: f64,
    mu_a: f64,
    var_a: Option<f64>,
    l_a: usize,
    c_a: f64,
    k_a: f64,
    q_c: u32,
    m: f64,
    h: f64,
    b: f64,
}

/// Line number of the first line mentioning `key`, for diagnostics.
fn line_of(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| l.trim_start().starts_with(key))
        .map_or(0, |i| i + 1)
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: Raw = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            Error::parse(line, e.message().to_string())
        })?;
        let demand: DemandFamily = raw
            .demand_family
            .parse()
            .map_err(|e: Error| Error::parse(line_of(text, "demand_family"), e.to_string()))?;
        let var = |v: Option<f64>, mu: f64, key: &str| match (v, demand) {
            (Some(v), _) => Ok(v),
            (None, DemandFamily::Poisson) => Ok(mu),
            (None, DemandFamily::NegativeBinomial) => Err(Error::parse(
                0,
                format!("`{key}` is required for negative binomial demand"),
            )),
        };
        let params = InstanceParams {
            installed_base: raw.n,
            max_circulating: raw.s_max,
            cm: ModeParams {
                failure_mean: raw.mu_c,
                failure_var: var(raw.var_c, raw.mu_c, "var_c")?,
                lead_time: raw.l_c,
                unit_price: raw.c_c,
                order_cost: raw.k_c,
            },
            am: ModeParams {
                failure_mean: raw.mu_a,
                failure_var: var(raw.var_a, raw.mu_a, "var_a")?,
                lead_time: raw.l_a,
                unit_price: raw.c_a,
                order_cost: raw.k_a,
            },
            batch_size: raw.q_c,
            maintenance_cost: raw.m,
            holding_cost: raw.h,
            backorder_cost: raw.b,
            demand,
        };
        params.validate()?;
        Ok(InstanceFile {
            name: raw.name,
            description: raw.description,
            provenance: raw.provenance,
            params,
        })
    }

    /// Canonical text: fixed key order, floats in shortest round-trip form.
    pub fn to_canonical(&self) -> String {
        let p = &self.params;
        let s = |x: &str| toml::Value::String(x.to_string()).to_string();
        let f = |x: f64| format!("{x:?}");
        let lines = [
            INSTANCE_HEADER.to_string(),
            format!("name = {}", s(&self.name)),
            format!("description = {}", s(&self.description)),
            format!("provenance = {}", s(&self.provenance)),
            String::new(),
            format!("n = {}", p.installed_base),
            format!("s_max = {}", p.max_circulating),
            format!("demand_family = {}", s(p.demand.as_str())),
            format!("mu_c = {}", f(p.cm.failure_mean)),
            format!("var_c = {}", f(p.cm.failure_var)),
            format!("l_c = {}", p.cm.lead_time),
            format!("c_c = {}", f(p.cm.unit_price)),
            format!("k_c = {}", f(p.cm.order_cost)),
            format!("mu_a = {}", f(p.am.failure_mean)),
            format!("var_a = {}", f(p.am.failure_var)),
            format!("l_a = {}", p.am.lead_time),
            format!("c_a = {}", f(p.am.unit_price)),
            format!("k_a = {}", f(p.am.order_cost)),
            format!("q_c = {}", p.batch_size),
            format!("m = {}", f(p.maintenance_cost)),
            format!("h = {}", f(p.holding_cost)),
            format!("b = {}", f(p.backorder_cost)),
        ];
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical())?;
        Ok(())
    }
}

/// Resolves a bundled instance name or a path to an instance file.
///
/// Names are tried first; anything else is read from disk. When
/// `DUALSOURCE_LIBRARY` is set, `<dir>/<name>.toml` is also tried.
pub fn load_instance(name_or_path: &str) -> Result<InstanceFile> {
    if name_or_path == "energy-template" || name_or_path.starts_with("synthetic-") {
        let b = library::bundled(name_or_path)?;
        return Ok(InstanceFile {
            name: b.name,
            description: b.description,
            provenance: "bundled".into(),
            params: b.params,
        });
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        return InstanceFile::load(path);
    }
    if let Ok(dir) = std::env::var("DUALSOURCE_LIBRARY") {
        let candidate = Path::new(&dir).join(format!("{name_or_path}.toml"));
        if candidate.exists() {
            return InstanceFile::load(&candidate);
        }
    }
    Err(Error::InvalidArgument(format!(
        "`{name_or_path}` is neither a bundled instance nor a readable file"
    )))
}
