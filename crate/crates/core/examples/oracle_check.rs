//! Runs the verification suite on one configuration, then removes a single
//! transmission from the ledger, replays it and shows the audit pinpointing
//! the values that went missing.

use hetcdc::config::RunConfig;
use hetcdc::design::DesignParams;
use hetcdc::oracle::{self, OracleGuard};
use hetcdc::pipeline;
use hetcdc::shuffle::{self, Strategy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::new(DesignParams::new(vec![2, 3, 3], 1, 1)?, Strategy::Default);
    let report = pipeline::verify(&cfg, OracleGuard::default())?;
    for c in &report.checks {
        println!("{} {:<28} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }

    let mut sim = pipeline::run_simulation(&cfg, OracleGuard::default())?;
    let dropped = sim.ledger.take_record(5);
    println!(
        "\ndropped: round {} node {} -> {:?}",
        dropped.round, dropped.sender, dropped.receivers
    );
    let rep = shuffle::replay(&sim.design, &sim.mapout, sim.ledger.records())?;
    let audit = oracle::audit_delivery(&sim.design, &sim.mapout, &rep.delivered, OracleGuard::default())?;
    println!("audit passed: {}, missing: {}", audit.passed(), audit.missing.len());
    for issue in &audit.missing {
        let p = &issue.provenance;
        println!(
            "  node {} lacks v_{{{},{}}}: round {}, S' = {:?}, Y = {:?}",
            issue.node, issue.function, issue.file, p.round, p.s_prime, p.y
        );
    }
    Ok(())
}
