//! End-to-end runs: Map, Shuffle, audit, and the oracle comparison suite.

use serde::Serialize;
use thiserror::Error;

use crate::analysis;
use crate::config::RunConfig;
use crate::design::{Design, DesignError, DesignParams};
use crate::mapper::{self, MapError, MapOutput, NodeDigest};
use crate::oracle::{self, AuditReport, BruteForceJson, OracleError, OracleGuard};
use crate::rational::{Rational, RationalJson};
use crate::shuffle::{self, Delivered, LedgerSummary, ShuffleError, ShuffleLedger, Strategy};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Shuffle(#[from] ShuffleError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Everything a simulation produced.
#[derive(Debug)]
pub struct Simulation {
    pub config: RunConfig,
    pub design: Design,
    pub mapout: MapOutput,
    pub delivered: Delivered,
    pub ledger: ShuffleLedger,
    pub audit: AuditReport,
}

impl Simulation {
    /// Map computations normalized by `QN`.
    pub fn computation_load(&self) -> Rational {
        let qn = (self.design.num_files() * self.design.num_functions()) as i128;
        Rational::new(self.mapout.total_computed() as i128, qn)
    }

    pub fn report(&self) -> SimulationReport {
        let formula = analysis::communication_load_formula(&self.config.params);
        let measured = self.ledger.normalized_load();
        let matches_formula = match self.config.shuffle.strategy {
            Strategy::Default => Some(measured == formula),
            Strategy::AllB => None,
        };
        SimulationReport {
            params: self.config.params.clone(),
            strategy: self.config.shuffle.strategy,
            t_bits: self.config.t_bits,
            seed: self.config.seed,
            coeff_seed: self.config.shuffle.coeff_seed,
            computation_load: self.computation_load().into(),
            computed_values: self.mapout.total_computed(),
            measured_load: measured.into(),
            formula_load: formula.into(),
            all_b_formula_load: analysis::all_b_load(&self.config.params).into(),
            matches_formula,
            ledger: self.ledger.summary(),
            audit: AuditSummary::from(&self.audit),
            map_digests: self.mapout.digests(),
            passed: self.audit.passed() && matches_formula != Some(false),
        }
    }
}

pub fn run_simulation(config: &RunConfig, guard: OracleGuard) -> Result<Simulation, PipelineError> {
    let design = Design::build(config.params.clone())?;
    let mapout = mapper::run_map(&design, config.t_bits, config.seed, config.shuffle.strategy)?;
    let (delivered, ledger) = shuffle::run_shuffle(&design, &mapout, &config.shuffle)?;
    let audit = oracle::audit_delivery(&design, &mapout, &delivered, guard)?;
    Ok(Simulation {
        config: config.clone(),
        design,
        mapout,
        delivered,
        ledger,
        audit,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditSummary {
    pub checked: usize,
    pub local: usize,
    pub delivered: usize,
    pub missing: usize,
    pub corrupt: usize,
    pub passed: bool,
}

impl From<&AuditReport> for AuditSummary {
    fn from(a: &AuditReport) -> Self {
        Self {
            checked: a.checked,
            local: a.local,
            delivered: a.delivered,
            missing: a.missing.len(),
            corrupt: a.corrupt.len(),
            passed: a.passed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationReport {
    pub params: DesignParams,
    pub strategy: Strategy,
    pub t_bits: usize,
    pub seed: u64,
    pub coeff_seed: u64,
    pub computation_load: RationalJson,
    pub computed_values: usize,
    pub measured_load: RationalJson,
    pub formula_load: RationalJson,
    pub all_b_formula_load: RationalJson,
    /// `None` for strategies the closed form does not describe.
    pub matches_formula: Option<bool>,
    pub ledger: LedgerSummary,
    pub audit: AuditSummary,
    pub map_digests: Vec<NodeDigest>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub params: DesignParams,
    pub strategy: Strategy,
    pub requester_histogram: Vec<usize>,
    pub bruteforce: BruteForceJson,
    pub ledger_load: RationalJson,
    pub formula_load: RationalJson,
    pub audit: AuditReport,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Runs a simulation and compares it against the oracle and the closed form.
pub fn verify(config: &RunConfig, guard: OracleGuard) -> Result<VerificationReport, PipelineError> {
    let sim = run_simulation(config, guard)?;
    let design = &sim.design;
    let params = &config.params;
    let strategy = config.shuffle.strategy;
    let qn = design.num_files() * design.num_functions();

    let histogram = oracle::requester_histogram(design, guard)?;
    let mismatches = oracle::requester_mismatches(design, guard)?;
    let brute = oracle::count_load_bruteforce(design, strategy, guard)?;
    let formula = analysis::communication_load_formula(params);
    let ledger_load = sim.ledger.normalized_load();
    let expected_load = match strategy {
        Strategy::Default => formula,
        Strategy::AllB => analysis::all_b_load(params),
    };
    let ledger_tx: Vec<usize> = sim.ledger.rounds().iter().map(|r| r.transmissions).collect();

    let mut checks = vec![
        Check::new(
            "requesters_agree",
            mismatches.is_empty(),
            format!("{} mismatching pairs", mismatches.len()),
        ),
        Check::new(
            "histogram_partitions_pairs",
            histogram.iter().sum::<usize>() == qn,
            format!("{histogram:?} over {qn} pairs"),
        ),
        Check::new(
            "bruteforce_equals_ledger",
            brute.units == sim.ledger.per_round_units()
                && brute.transmissions == ledger_tx
                && brute.load == ledger_load,
            format!("oracle {} vs ledger {}", brute.load, ledger_load),
        ),
        Check::new(
            "ledger_equals_closed_form",
            ledger_load == expected_load,
            format!("ledger {ledger_load} vs closed form {expected_load}"),
        ),
        Check::new(
            "computation_load_equals_s",
            sim.computation_load() == Rational::from_integer(params.s() as i128),
            format!("{} computed values", sim.mapout.total_computed()),
        ),
        Check::new(
            "delivery_audit",
            sim.audit.passed(),
            format!(
                "{} missing, {} corrupt of {}",
                sim.audit.missing.len(),
                sim.audit.corrupt.len(),
                sim.audit.checked
            ),
        ),
    ];
    if strategy == Strategy::Default {
        checks.push(Check::new(
            "no_redundant_receptions",
            sim.ledger.redundant_receptions() == 0,
            format!("{} redundant", sim.ledger.redundant_receptions()),
        ));
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        params: params.clone(),
        strategy,
        requester_histogram: histogram,
        bruteforce: brute.to_json(),
        ledger_load: ledger_load.into(),
        formula_load: formula.into(),
        audit: sim.audit,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_small_instances() {
        for strategy in [Strategy::Default, Strategy::AllB] {
            for x in [vec![2, 2], vec![2, 3, 2]] {
                let cfg = RunConfig::new(DesignParams::new(x, 1, 2).unwrap(), strategy);
                let report = verify(&cfg, OracleGuard::default()).unwrap();
                assert!(report.passed, "{:?}", report.checks);
            }
        }
    }

    #[test]
    fn simulation_report_fields() {
        let cfg = RunConfig::new(DesignParams::new(vec![4, 6], 1, 1).unwrap(), Strategy::Default);
        let sim = run_simulation(&cfg, OracleGuard::default()).unwrap();
        let r = sim.report();
        assert_eq!(r.measured_load.numerator, "7");
        assert_eq!(r.measured_load.denominator, "12");
        assert_eq!(r.matches_formula, Some(true));
        assert_eq!(r.computation_load.numerator, "2");
        assert!(r.passed);
    }
}
