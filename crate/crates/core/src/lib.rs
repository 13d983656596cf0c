//! Cascaded coded distributed computing on heterogeneous networks.
//!
//! Nodes are split into `s` groups of sizes `x_1..x_s`. Every lattice cell
//! `(a_1, .., a_s)` names one node per group (a *T-set*); the nodes of a T-set
//! share one block of input files and one block of Reduce functions, so every
//! file and every function lives at exactly `s` nodes and a node in group `m`
//! stores `N / x_m` files.
//!
//! The crate builds that placement ([`design`]), runs a synthetic Map phase
//! ([`mapper`]), executes the `s`-round coded Shuffle with real payloads and
//! decodes them at every receiver ([`shuffle`]), evaluates the closed-form
//! loads exactly ([`analysis`]) and re-derives everything by brute force
//! ([`oracle`]).
//!
//! ```
//! use hetcdc::{analysis, design::{Design, DesignParams}, mapper, shuffle};
//!
//! let params = DesignParams::new(vec![4, 6], 1, 1).unwrap();
//! let design = Design::build(params.clone()).unwrap();
//! let opts = shuffle::ShuffleOptions::default();
//! let t_bits = mapper::auto_t_bits(params.s(), opts.strategy);
//! let mapout = mapper::run_map(&design, t_bits, 7, opts.strategy).unwrap();
//! let (_delivered, ledger) = shuffle::run_shuffle(&design, &mapout, &opts).unwrap();
//! assert_eq!(ledger.normalized_load(), analysis::communication_load_formula(&params));
//! ```

pub mod analysis;
pub mod cli;
pub mod config;
pub mod design;
pub mod gf256;
pub mod mapper;
pub mod oracle;
pub mod pipeline;
pub mod rational;
pub mod shuffle;
pub mod sweep;

/// Node identifier, `1..=K`.
pub type NodeId = usize;
/// Input file identifier, `1..=N`.
pub type FileId = usize;
/// Reduce function identifier, `1..=Q`.
pub type FunctionId = usize;
/// Lattice cell (T-set) index, `1..=X`.
pub type CellIndex = usize;

/// Identifies one intermediate value `v_{i,j}`: function `i` applied to file `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct IvKey {
    pub function: FunctionId,
    pub file: FileId,
}

impl IvKey {
    pub fn new(function: FunctionId, file: FileId) -> Self {
        Self { function, file }
    }
}

impl std::fmt::Display for IvKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v_{{{},{}}}", self.function, self.file)
    }
}
