//! Builds the two-group placement with x = (4, 6), prints which files and
//! functions each node holds, and writes the JSON dump used for fixture diffs.
//!
//! `cargo run --example placement -- 4,6`

use hetcdc::config::parse_int_list;
use hetcdc::design::{Design, DesignParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = match std::env::args().nth(1) {
        Some(arg) => parse_int_list(&arg)?,
        None => vec![4, 6],
    };
    let design = Design::build(DesignParams::new(x, 1, 1)?)?;
    let p = design.params();
    println!(
        "K = {}, X = {}, N = {}, Q = {}",
        p.num_nodes(),
        p.lattice_size(),
        p.num_files(),
        p.num_functions()
    );

    for (m, group) in design.groups().iter().enumerate() {
        println!("group {}: nodes {:?}", m + 1, group);
    }
    println!();
    println!("{:>5} {:>6} {:>7}  files", "node", "group", "stores");
    for v in design.node_views() {
        println!(
            "{:>5} {:>6} {:>4}/{:<3} {:?}",
            v.node,
            v.group,
            v.files.len(),
            p.num_files(),
            v.files
        );
    }

    println!();
    for t in 1..=design.lattice_size().min(6) {
        println!("T_{t} = {:?} -> files {:?}", design.t_members(t)?, design.file_block(t));
    }

    // Who needs v_{1,2}: nodes assigned function 1 that do not store file 2.
    println!("v_{{1,2}} is requested by {:?}", design.requesters(1, 2)?);

    let dump = serde_json::to_string(&design.dump())?;
    println!("\nJSON dump: {} bytes", dump.len());
    Ok(())
}
