//! Sweeps x = (c, c, c) for c = 2..5 plus the (4, 6) lattice, simulating each
//! and printing the CSV.

use hetcdc::oracle::OracleGuard;
use hetcdc::sweep::{self, SweepSpec};

const SPEC: &str = r#"
simulate = true

[[config]]
x = [4, 6]

[[family]]
kind = "uniform"
s = 3
lo = 2
hi = 5
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SweepSpec::parse(SPEC)?;
    let rows = sweep::run_sweep(&spec, OracleGuard::default())?;
    sweep::write_csv(&rows, std::io::stdout().lock())?;
    Ok(())
}
