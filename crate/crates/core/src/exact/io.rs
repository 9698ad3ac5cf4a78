//! Line-oriented text format for tabular policies.
//!
//! ```text
//! # dualsource tabular policy v1
//! model = full
//! states = 3
//! reference = 0
//! g = 123.456
//! 0 0 0
//! 1 1 0
//! 2 0 2
//! ```
//!
//! The header is `key = value` lines; each body line is
//! `ordinal x_C x_A`, ordinals referring to the deterministic state
//! enumeration of the named model. Blank lines and `#` comments are ignored.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::state::Decision;

use super::TabularPolicy;

pub const POLICY_HEADER: &str = "# dualsource tabular policy v1";

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyFile {
    /// `full` or `simplified`.
    pub model: String,
    pub reference: usize,
    pub g: f64,
    pub policy: TabularPolicy,
}

pub fn write_policy(out: &mut impl Write, file: &PolicyFile) -> Result<()> {
    writeln!(out, "{POLICY_HEADER}")?;
    writeln!(out, "model = {}", file.model)?;
    writeln!(out, "states = {}", file.policy.decisions.len())?;
    writeln!(out, "reference = {}", file.reference)?;
    // `{:?}` prints the shortest representation that parses back exactly.
    writeln!(out, "g = {:?}", file.g)?;
    for (i, d) in file.policy.decisions.iter().enumerate() {
        writeln!(out, "{i} {} {}", d.cm_batches, d.am_items)?;
    }
    Ok(())
}

pub fn read_policy(input: impl BufRead) -> Result<PolicyFile> {
    let mut model = None;
    let mut states: Option<usize> = None;
    let mut reference = None;
    let mut g = None;
    let mut decisions = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            let value = value.trim();
            let bad = |e: &dyn std::fmt::Display| Error::parse(lineno, format!("{}: {e}", key.trim()));
            match key.trim() {
                "model" => model = Some(value.to_string()),
                "states" => states = Some(value.parse().map_err(|e| bad(&e))?),
                "reference" => reference = Some(value.parse().map_err(|e| bad(&e))?),
                "g" => g = Some(value.parse().map_err(|e| bad(&e))?),
                other => return Err(Error::parse(lineno, format!("unknown key `{other}`"))),
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [ordinal, cm, am] = fields[..] else {
            return Err(Error::parse(lineno, "expected `ordinal x_C x_A`"));
        };
        let num = |s: &str| s.parse::<u32>().map_err(|e| Error::parse(lineno, e.to_string()));
        if num(ordinal)? as usize != decisions.len() {
            return Err(Error::parse(lineno, format!("expected ordinal {}", decisions.len())));
        }
        decisions.push(Decision::new(num(cm)?, num(am)?));
    }
    let missing = |k: &str| Error::parse(0, format!("missing `{k}`"));
    let states = states.ok_or_else(|| missing("states"))?;
    if states != decisions.len() {
        return Err(Error::parse(0, format!("header says {states} states, body has {}", decisions.len())));
    }
    Ok(PolicyFile {
        model: model.ok_or_else(|| missing("model"))?,
        reference: reference.ok_or_else(|| missing("reference"))?,
        g: g.ok_or_else(|| missing("g"))?,
        policy: TabularPolicy { decisions },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let file = PolicyFile {
            model: "full".into(),
            reference: 1,
            g: 1234.567_890_123_4,
            policy: TabularPolicy {
                decisions: vec![Decision::NONE, Decision::new(1, 2), Decision::new(0, 3)],
            },
        };
        let mut buf = Vec::new();
        write_policy(&mut buf, &file).unwrap();
        let back = read_policy(buf.as_slice()).unwrap();
        assert_eq!(back, file);
        let mut again = Vec::new();
        write_policy(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn diagnostics_name_the_line() {
        let text = "model = full\nstates = 1\nreference = 0\ng = 1\n0 1\n";
        match read_policy(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }
}
