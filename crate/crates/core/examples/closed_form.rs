//! Exact closed-form loads for a handful of lattices, with per-round bits in
//! units of T. No simulation involved.

use hetcdc::analysis;
use hetcdc::design::DesignParams;
use hetcdc::rational::{fraction_string, to_decimal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let configs: [&[usize]; 6] = [&[2, 2], &[4, 6], &[3, 3, 3], &[2, 2, 4], &[2, 3, 4, 5], &[5, 5, 5, 5]];
    println!(
        "{:<14} {:>4} {:>14} {:>16}  per-round bits / T",
        "x", "r", "L", "L (decimal)"
    );
    for x in configs {
        let params = DesignParams::new(x.to_vec(), 1, 1)?;
        let eval = analysis::evaluate(&params);
        let rounds: Vec<String> = eval.default_round_bits().iter().map(fraction_string).collect();
        println!(
            "{:<14} {:>4} {:>14} {:>16}  {}",
            format!("{x:?}"),
            eval.computation_load,
            fraction_string(&eval.communication_load),
            to_decimal(&eval.communication_load, 12),
            rounds.join(" + ")
        );
    }
    Ok(())
}
