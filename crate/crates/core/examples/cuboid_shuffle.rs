//! Three groups, x = (2, 2, 4). Rounds 1 and 2 use XOR pairs; round 3 uses
//! GF(256) linear combinations, which every node of the plan solves from its
//! own side information.

use hetcdc::design::{Design, DesignParams};
use hetcdc::mapper;
use hetcdc::rational::fraction_string;
use hetcdc::shuffle::{self, decode_b, encode_b, enumerate_b, ShuffleOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = DesignParams::new(vec![2, 2, 4], 1, 1)?;
    let design = Design::build(params.clone())?;
    let opts = ShuffleOptions::default();
    let t_bits = mapper::auto_t_bits(params.s(), opts.strategy);
    let mapout = mapper::run_map(&design, t_bits, 7, opts.strategy)?;

    // One round-3 plan in isolation.
    let plans = enumerate_b(&design, 3)?;
    let plan = &plans[0];
    println!(
        "round 3, S = {:?}: {} V-sets, {} packets each",
        plan.s,
        plan.vsets.len(),
        plan.num_packets
    );
    for v in &plan.vsets {
        println!(
            "  S' = {:?} -> requested by {:?}, {} values",
            v.s_prime,
            v.s_rest,
            v.ivs.len()
        );
    }
    let records = encode_b(plan, &mapout, opts.coeff_seed)?;
    println!("{} transmissions of {} bits", records.len(), records[0].bits);
    let node = plan.slots[0];
    let got = decode_b(plan, &records, node, &mapout)?;
    let ok = got
        .iter()
        .all(|iv| mapper::payload(iv.key.function, iv.key.file, t_bits, 7).unwrap() == iv.payload);
    println!("node {node} decoded {} values, all correct: {ok}", got.len());

    // The whole Shuffle.
    let (_, ledger) = shuffle::run_shuffle(&design, &mapout, &opts)?;
    println!();
    for (r, units) in ledger.rounds().iter().zip(ledger.per_round_units()) {
        println!(
            "round {} (Method {}): {} transmissions, {} T",
            r.round,
            r.method,
            r.transmissions,
            fraction_string(&units)
        );
    }
    println!("load = {}", fraction_string(&ledger.normalized_load()));
    Ok(())
}
