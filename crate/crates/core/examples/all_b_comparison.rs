//! Compares the default schedule (XOR pairs below round s) with running the
//! linear-combination method in every round. Each earlier round costs
//! 2g/(2g-1) times more under the latter.

use hetcdc::config::RunConfig;
use hetcdc::design::DesignParams;
use hetcdc::oracle::OracleGuard;
use hetcdc::pipeline;
use hetcdc::rational::fraction_string;
use hetcdc::shuffle::Strategy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for x in [vec![4, 6], vec![2, 2, 4], vec![3, 3, 3]] {
        let params = DesignParams::new(x.clone(), 1, 1)?;
        let default = pipeline::run_simulation(
            &RunConfig::new(params.clone(), Strategy::Default),
            OracleGuard::default(),
        )?;
        let all_b = pipeline::run_simulation(&RunConfig::new(params, Strategy::AllB), OracleGuard::default())?;
        println!("x = {x:?}");
        let d = default.ledger.per_round_units();
        let b = all_b.ledger.per_round_units();
        for g in 0..d.len() {
            println!(
                "  round {}: default {:>8} T, all-b {:>8} T, ratio {}",
                g + 1,
                fraction_string(&d[g]),
                fraction_string(&b[g]),
                fraction_string(&(b[g] / d[g]))
            );
        }
        println!(
            "  load: default {}, all-b {} (audits {} / {})",
            fraction_string(&default.ledger.normalized_load()),
            fraction_string(&all_b.ledger.normalized_load()),
            default.audit.passed(),
            all_b.audit.passed()
        );
    }
    Ok(())
}
