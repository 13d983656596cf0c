//! Runs Map and the two-round Shuffle on x = (4, 6) with real payloads, then
//! shows a few transmissions and the exact load.

use hetcdc::design::{Design, DesignParams};
use hetcdc::mapper;
use hetcdc::oracle::{self, OracleGuard};
use hetcdc::rational::{fraction_string, to_decimal};
use hetcdc::shuffle::{self, Coding, ShuffleOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = DesignParams::new(vec![4, 6], 1, 1)?;
    let design = Design::build(params.clone())?;
    let opts = ShuffleOptions::default();
    let t_bits = mapper::auto_t_bits(params.s(), opts.strategy);
    let mapout = mapper::run_map(&design, t_bits, 42, opts.strategy)?;
    println!("T = {t_bits} bits, {} values computed", mapout.total_computed());

    let (delivered, ledger) = shuffle::run_shuffle(&design, &mapout, &opts)?;

    for rec in ledger.records().iter().take(3) {
        if let Coding::Xor { left, right } = &rec.coding {
            let keys = |k: &[hetcdc::IvKey]| k.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
            println!(
                "round {} node {} -> {:?}: {} XOR {}  [{}]",
                rec.round,
                rec.sender,
                rec.receivers,
                keys(left),
                keys(right),
                hex::encode(&rec.payload)
            );
        }
    }

    println!();
    for r in ledger.rounds() {
        println!(
            "round {} (Method {}): {} transmissions, {} bits",
            r.round, r.method, r.transmissions, r.bits
        );
    }
    let load = ledger.normalized_load();
    println!("load = {} = {}", fraction_string(&load), to_decimal(&load, 12));

    let audit = oracle::audit_delivery(&design, &mapout, &delivered, OracleGuard::default())?;
    println!("audit: {} values checked, passed = {}", audit.checked, audit.passed());
    Ok(())
}
