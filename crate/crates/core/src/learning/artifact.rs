//! Plain-text files for trained and heuristic policies.
//!
//! Each file opens with `# dualsource policy v1` and continues with one
//! `key values...` line per field. Floats are written in shortest
//! round-trip form, so a reloaded policy decides bit-identically.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::heuristics::DualIndexParams;
use crate::params::Source;
use crate::state::Decision;

use super::avi::LinearVfa;
use super::classifier::{Classifier, DecisionGrid};
use super::features::{FeatureSchema, ParamBounds};
use super::mlp::{Layer, Mlp};

const HEADER: &str = "# dualsource policy v1";

/// A policy in storable form.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyArtifact {
    BaseStock { source: Source, level: u32 },
    DualIndex(DualIndexParams),
    Classifier(Classifier),
    Vfa(LinearVfa),
}

impl PolicyArtifact {
    pub fn kind(&self) -> &'static str {
        match self {
            PolicyArtifact::BaseStock { .. } => "base_stock",
            PolicyArtifact::DualIndex(_) => "dual_index",
            PolicyArtifact::Classifier(_) => "classifier",
            PolicyArtifact::Vfa(_) => "vfa",
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\nkind {}\n", self.kind());
        match self {
            PolicyArtifact::BaseStock { source, level } => {
                let _ = writeln!(out, "source {source}\nlevel {level}");
            }
            PolicyArtifact::DualIndex(di) => {
                let _ = writeln!(out, "z_a {}\ndelta {}", di.z_a, di.delta);
            }
            PolicyArtifact::Classifier(c) => {
                write_schema(&mut out, &c.schema);
                let pairs: Vec<String> = c
                    .grid
                    .decisions
                    .iter()
                    .map(|d| format!("{},{}", d.cm_batches, d.am_items))
                    .collect();
                let _ = writeln!(out, "decisions {}", pairs.join(" "));
                let _ = writeln!(out, "layers {}", c.net.layers.len());
                for l in &c.net.layers {
                    let _ = writeln!(out, "shape {} {}", l.inputs, l.outputs);
                    let _ = writeln!(out, "weights {}", floats(&l.weights));
                    let _ = writeln!(out, "bias {}", floats(&l.bias));
                }
            }
            PolicyArtifact::Vfa(v) => {
                write_schema(&mut out, &v.schema);
                let _ = writeln!(out, "discount {:?}", v.discount);
                let _ = writeln!(out, "weights {}", floats(&v.weights));
            }
        }
        out
    }

    pub fn write(&self, out: &mut impl Write) -> Result<()> {
        out.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn read(input: impl BufRead) -> Result<Self> {
        let mut lines = Lines::new(input)?;
        let kind = lines.field("kind")?;
        match kind.as_str() {
            "base_stock" => Ok(PolicyArtifact::BaseStock {
                source: lines.field("source")?.parse()?,
                level: lines.parse_one("level")?,
            }),
            "dual_index" => Ok(PolicyArtifact::DualIndex(DualIndexParams {
                z_a: lines.parse_one("z_a")?,
                delta: lines.parse_one("delta")?,
            })),
            "classifier" => {
                let schema = read_schema(&mut lines)?;
                let text = lines.field("decisions")?;
                let decisions = text
                    .split_whitespace()
                    .map(|pair| {
                        let (c, a) = pair
                            .split_once(',')
                            .ok_or_else(|| lines.error(format!("bad decision `{pair}`")))?;
                        Ok(Decision::new(
                            c.parse().map_err(|_| lines.error(format!("bad decision `{pair}`")))?,
                            a.parse().map_err(|_| lines.error(format!("bad decision `{pair}`")))?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if decisions.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(lines.error("decisions are not strictly increasing"));
                }
                let count: usize = lines.parse_one("layers")?;
                let mut layers = Vec::with_capacity(count);
                for _ in 0..count {
                    let shape: Vec<usize> = lines.parse_all("shape")?;
                    if shape.len() != 2 {
                        return Err(lines.error("shape needs two entries"));
                    }
                    let weights: Vec<f64> = lines.parse_all("weights")?;
                    let bias: Vec<f64> = lines.parse_all("bias")?;
                    if weights.len() != shape[0] * shape[1] || bias.len() != shape[1] {
                        return Err(lines.error("layer sizes disagree with its shape"));
                    }
                    layers.push(Layer {
                        inputs: shape[0],
                        outputs: shape[1],
                        weights,
                        bias,
                    });
                }
                if layers.is_empty() || layers.windows(2).any(|w| w[0].outputs != w[1].inputs) {
                    return Err(lines.error("layer shapes do not chain"));
                }
                let classifier = Classifier::new(Mlp { layers }, schema, DecisionGrid { decisions })?;
                Ok(PolicyArtifact::Classifier(classifier))
            }
            "vfa" => {
                let schema = read_schema(&mut lines)?;
                let discount = lines.parse_one("discount")?;
                let weights: Vec<f64> = lines.parse_all("weights")?;
                if weights.len() != schema.len() + 1 {
                    return Err(lines.error(format!("expected {} weights", schema.len() + 1)));
                }
                Ok(PolicyArtifact::Vfa(LinearVfa {
                    schema,
                    weights,
                    discount,
                }))
            }
            other => Err(lines.error(format!("unknown policy kind `{other}`"))),
        }
    }
}

fn floats(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

fn write_schema(out: &mut String, s: &FeatureSchema) {
    let _ = writeln!(out, "slots {} {}", s.cm_slots, s.am_slots);
    match &s.epl {
        None => out.push_str("params none\n"),
        Some(b) => {
            let _ = writeln!(out, "params {}\nparams_lo {}\nparams_hi {}", b.lo.len(), floats(&b.lo), floats(&b.hi));
        }
    }
}

fn read_schema<R: BufRead>(lines: &mut Lines<R>) -> Result<FeatureSchema> {
    let slots: Vec<usize> = lines.parse_all("slots")?;
    if slots.len() != 2 {
        return Err(lines.error("slots needs two entries"));
    }
    let params = lines.field("params")?;
    let epl = if params == "none" {
        None
    } else {
        let n: usize = params.parse().map_err(|_| lines.error("bad parameter count"))?;
        let lo: Vec<f64> = lines.parse_all("params_lo")?;
        let hi: Vec<f64> = lines.parse_all("params_hi")?;
        if lo.len() != n || hi.len() != n {
            return Err(lines.error("parameter bounds have the wrong length"));
        }
        Some(ParamBounds { lo, hi })
    };
    Ok(FeatureSchema {
        cm_slots: slots[0],
        am_slots: slots[1],
        epl,
    })
}

struct Lines<R> {
    input: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(input: R) -> Result<Self> {
        let mut lines = Lines {
            input: input.lines(),
            line: 0,
        };
        let first = lines.next()?;
        if first.trim_end() != HEADER {
            return Err(Error::parse(1, format!("expected `{HEADER}`")));
        }
        Ok(lines)
    }

    fn next(&mut self) -> Result<String> {
        self.line += 1;
        match self.input.next() {
            Some(l) => Ok(l?),
            None => Err(Error::parse(self.line, "unexpected end of file")),
        }
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, msg)
    }

    /// The rest of the next line, which must start with `key`.
    fn field(&mut self, key: &str) -> Result<String> {
        let l = self.next()?;
        let (k, rest) = l.split_once(' ').unwrap_or((l.as_str(), ""));
        if k != key {
            return Err(self.error(format!("expected `{key}`, found `{k}`")));
        }
        Ok(rest.trim().to_string())
    }

    fn parse_one<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        v.parse().map_err(|_| self.error(format!("bad value `{v}` for `{key}`")))
    }

    fn parse_all<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let v = self.field(key)?;
        v.split_whitespace()
            .map(|x| x.parse().map_err(|_| self.error(format!("bad value `{x}` for `{key}`"))))
            .collect()
    }
}
