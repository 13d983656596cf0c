//! Parameter sweeps emitted as CSV.
//!
//! A sweep lists explicit x-vectors and/or families:
//!
//! ```toml
//! eta1 = 1
//! eta2 = 1
//! simulate = true
//!
//! [[config]]
//! x = [4, 6]
//!
//! [[family]]
//! kind = "uniform"   # x = (c, .., c) for c in lo..=hi
//! s = 3
//! lo = 2
//! hi = 5
//!
//! [[family]]
//! kind = "grid"      # every non-decreasing x-vector with entries in lo..=hi
//! s = 2
//! lo = 2
//! hi = 4
//! ```

use std::io::Write;

use itertools::Itertools;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::config::RunConfig;
use crate::design::DesignParams;
use crate::oracle::OracleGuard;
use crate::pipeline::{self, PipelineError};
use crate::rational::{fraction_string, to_decimal, Rational, DISPLAY_DIGITS};
use crate::shuffle::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Uniform,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub kind: FamilyKind,
    pub s: usize,
    pub lo: usize,
    pub hi: usize,
}

impl Family {
    pub fn expand(&self) -> Vec<Vec<usize>> {
        match self.kind {
            FamilyKind::Uniform => (self.lo..=self.hi).map(|c| vec![c; self.s]).collect(),
            FamilyKind::Grid => (self.lo..=self.hi).combinations_with_replacement(self.s).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub x: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub eta1: Option<usize>,
    #[serde(default)]
    pub eta2: Option<usize>,
    #[serde(default)]
    pub simulate: bool,
    #[serde(default)]
    pub strategy: Option<Strategy>,
    #[serde(default)]
    pub config: Vec<Entry>,
    #[serde(default)]
    pub family: Vec<Family>,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Raw x-vectors in listing order, explicit entries first.
    pub fn x_vectors(&self) -> Vec<Vec<usize>> {
        self.config
            .iter()
            .map(|e| e.x.clone())
            .chain(self.family.iter().flat_map(Family::expand))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub params: DesignParams,
    pub formula_load: Rational,
    pub simulated_load: Option<Rational>,
    /// Per-round bits in units of `T` for the sweep's strategy.
    pub round_units: Vec<Rational>,
}

/// Evaluates every valid configuration; invalid ones are logged and skipped.
pub fn run_sweep(spec: &SweepSpec, guard: OracleGuard) -> Result<Vec<SweepRow>, PipelineError> {
    let strategy = spec.strategy.unwrap_or_default();
    let mut rows = Vec::new();
    for x in spec.x_vectors() {
        let params = match DesignParams::new(x.clone(), spec.eta1.unwrap_or(1), spec.eta2.unwrap_or(1)) {
            Ok(p) => p,
            Err(e) => {
                warn!("skipping x = {x:?}: {e}");
                continue;
            }
        };
        let eval = analysis::evaluate(&params);
        let formula_load = match strategy {
            Strategy::Default => eval.communication_load,
            Strategy::AllB => eval.all_b_load,
        };
        let (simulated_load, round_units) = if spec.simulate {
            let sim = pipeline::run_simulation(&RunConfig::new(params.clone(), strategy), guard)?;
            if !sim.audit.passed() {
                warn!("x = {x:?}: delivery audit failed");
            }
            (Some(sim.ledger.normalized_load()), sim.ledger.per_round_units())
        } else {
            let units = match strategy {
                Strategy::Default => eval.default_round_bits(),
                Strategy::AllB => eval.per_round_b_bits.clone(),
            };
            (None, units)
        };
        rows.push(SweepRow {
            params,
            formula_load,
            simulated_load,
            round_units,
        });
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 12] = [
    "K",
    "s",
    "x",
    "X",
    "N",
    "Q",
    "formula_load",
    "formula_load_decimal",
    "simulated_load",
    "simulated_load_decimal",
    "match",
    "round_bits",
];

/// Writes the header and one row per configuration. Lists inside a cell are
/// `;`-separated; loads are exact fractions plus decimals.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let p = &r.params;
        let join = |v: Vec<String>| v.join(";");
        let (sim, sim_dec, matched) = match &r.simulated_load {
            Some(l) => (
                fraction_string(l),
                to_decimal(l, DISPLAY_DIGITS),
                (*l == r.formula_load).to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            p.num_nodes().to_string(),
            p.s().to_string(),
            join(p.x().iter().map(ToString::to_string).collect()),
            p.lattice_size().to_string(),
            p.num_files().to_string(),
            p.num_functions().to_string(),
            fraction_string(&r.formula_load),
            to_decimal(&r.formula_load, DISPLAY_DIGITS),
            sim,
            sim_dec,
            matched,
            join(r.round_units.iter().map(fraction_string).collect()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_expand() {
        let u = Family {
            kind: FamilyKind::Uniform,
            s: 3,
            lo: 2,
            hi: 5,
        };
        assert_eq!(u.expand().len(), 4);
        let g = Family {
            kind: FamilyKind::Grid,
            s: 2,
            lo: 2,
            hi: 4,
        };
        assert_eq!(
            g.expand(),
            vec![vec![2, 2], vec![2, 3], vec![2, 4], vec![3, 3], vec![3, 4], vec![4, 4]]
        );
    }

    #[test]
    fn empty_spec_is_header_only() {
        let rows = run_sweep(&SweepSpec::default(), OracleGuard::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_HEADER.join(","));
    }

    #[test]
    fn invalid_entries_are_skipped() {
        let spec = SweepSpec::parse("[[config]]\nx = [4, 1]\n[[config]]\nx = [4, 6]\n").unwrap();
        let rows = run_sweep(&spec, OracleGuard::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].formula_load, Rational::new(7, 12));
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("10,2,4;6,24,24,24,7/12,0.583333333333,,,,96;240"));
    }
}
