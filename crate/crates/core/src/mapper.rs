//! Map phase: every node computes `v_{i,j}` for all functions `i` and every
//! locally stored file `j`.
//!
//! Payloads are synthetic. `v_{i,j}` is a ChaCha8 stream keyed by the global
//! seed and the pair `(i, j)`, so two nodes that both store `w_j` compute
//! byte-identical values.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::design::Design;
use crate::shuffle::Strategy;
use crate::{FileId, FunctionId, IvKey, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("t_bits must be a positive multiple of 8, got {0}")]
    NotByteAligned(usize),
    #[error(
        "t_bits = {t_bits} is not divisible by {divisor}, required so the {strategy} shuffle splits packets exactly"
    )]
    Indivisible {
        t_bits: usize,
        divisor: usize,
        strategy: Strategy,
    },
    #[error("invalid intermediate value id: function {function}, file {file}")]
    BadId { function: FunctionId, file: FileId },
}

/// One intermediate value and its `T / 8` payload bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntermediateValue {
    pub key: IvKey,
    pub payload: Vec<u8>,
}

/// Deterministic payload of `v_{function,file}`.
///
/// Each `(function, file)` pair selects its own ChaCha stream, so distinct
/// pairs never share keystream.
pub fn payload(function: FunctionId, file: FileId, t_bits: usize, seed: u64) -> Result<Vec<u8>, MapError> {
    if t_bits == 0 || !t_bits.is_multiple_of(8) {
        return Err(MapError::NotByteAligned(t_bits));
    }
    if function == 0 || file == 0 || function > u32::MAX as usize || file > u32::MAX as usize {
        return Err(MapError::BadId { function, file });
    }
    let mut out = vec![0u8; t_bits / 8];
    fill_payload(function, file, seed, &mut out);
    Ok(out)
}

fn fill_payload(function: FunctionId, file: FileId, seed: u64, out: &mut [u8]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((function as u64) << 32) | file as u64);
    rng.fill_bytes(out);
}

/// Divisor `T` must satisfy for `strategy` on an `s`-group design, including
/// the factor 8 for byte alignment.
pub fn required_divisor(s: usize, strategy: Strategy) -> usize {
    8 * strategy.method_b_rounds(s).map(|g| 2 * g - 1).fold(1, num_integer::lcm)
}

/// Smallest valid `T` for the strategy: `8 * lcm{2g - 1 : Method B rounds g}`.
pub fn auto_t_bits(s: usize, strategy: Strategy) -> usize {
    required_divisor(s, strategy)
}

pub fn check_t_bits(t_bits: usize, s: usize, strategy: Strategy) -> Result<(), MapError> {
    if t_bits == 0 || !t_bits.is_multiple_of(8) {
        return Err(MapError::NotByteAligned(t_bits));
    }
    let divisor = required_divisor(s, strategy);
    if !t_bits.is_multiple_of(divisor) {
        return Err(MapError::Indivisible {
            t_bits,
            divisor,
            strategy,
        });
    }
    Ok(())
}

/// Dense table of intermediate values for a fixed set of functions (rows)
/// and files (columns). Entries start absent.
#[derive(Debug, Clone)]
pub struct IvStore {
    functions: Vec<FunctionId>,
    files: Vec<FileId>,
    row_of: Vec<u32>,
    col_of: Vec<u32>,
    iv_bytes: usize,
    data: Vec<u8>,
    present: Vec<bool>,
}

const ABSENT: u32 = u32::MAX;

impl IvStore {
    /// `functions` and `files` must be ascending and bounded by `q` and `n`.
    pub fn new(functions: Vec<FunctionId>, files: Vec<FileId>, q: usize, n: usize, iv_bytes: usize) -> Self {
        let mut row_of = vec![ABSENT; q + 1];
        for (r, &i) in functions.iter().enumerate() {
            row_of[i] = r as u32;
        }
        let mut col_of = vec![ABSENT; n + 1];
        for (c, &j) in files.iter().enumerate() {
            col_of[j] = c as u32;
        }
        let cells = functions.len() * files.len();
        Self {
            functions,
            files,
            row_of,
            col_of,
            iv_bytes,
            data: vec![0; cells * iv_bytes],
            present: vec![false; cells],
        }
    }

    fn slot(&self, key: IvKey) -> Option<usize> {
        let r = *self.row_of.get(key.function)?;
        let c = *self.col_of.get(key.file)?;
        (r != ABSENT && c != ABSENT).then(|| r as usize * self.files.len() + c as usize)
    }

    /// Whether `key` falls inside this table's rows and columns.
    pub fn covers(&self, key: IvKey) -> bool {
        self.slot(key).is_some()
    }

    pub fn get(&self, key: IvKey) -> Option<&[u8]> {
        let s = self.slot(key)?;
        self.present[s].then(|| &self.data[s * self.iv_bytes..(s + 1) * self.iv_bytes])
    }

    pub fn contains(&self, key: IvKey) -> bool {
        self.get(key).is_some()
    }

    /// Stores `bytes`; returns `false` if `key` is outside the table.
    pub fn insert(&mut self, key: IvKey, bytes: &[u8]) -> bool {
        assert_eq!(bytes.len(), self.iv_bytes, "intermediate value size mismatch");
        let Some(s) = self.slot(key) else {
            return false;
        };
        self.data[s * self.iv_bytes..(s + 1) * self.iv_bytes].copy_from_slice(bytes);
        self.present[s] = true;
        true
    }

    /// Drops an entry, used by fault injection in tests and examples.
    pub fn remove(&mut self, key: IvKey) -> bool {
        match self.slot(key) {
            Some(s) if self.present[s] => {
                self.present[s] = false;
                true
            }
            _ => false,
        }
    }

    /// Mutable view of a present entry.
    pub fn get_mut(&mut self, key: IvKey) -> Option<&mut [u8]> {
        let s = self.slot(key)?;
        let b = self.iv_bytes;
        self.present[s].then(move || &mut self.data[s * b..(s + 1) * b])
    }

    pub fn len(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn functions(&self) -> &[FunctionId] {
        &self.functions
    }

    pub fn files(&self) -> &[FileId] {
        &self.files
    }

    pub fn iv_bytes(&self) -> usize {
        self.iv_bytes
    }

    /// Present entries in ascending `(function, file)` order.
    pub fn iter(&self) -> impl Iterator<Item = (IvKey, &[u8])> + '_ {
        let cols = self.files.len();
        self.present.iter().enumerate().filter(|(_, &p)| p).map(move |(s, _)| {
            let key = IvKey::new(self.functions[s / cols], self.files[s % cols]);
            (key, &self.data[s * self.iv_bytes..(s + 1) * self.iv_bytes])
        })
    }
}

/// Everything one node computed in the Map phase.
#[derive(Debug, Clone)]
pub struct NodeMapOutput {
    pub node: NodeId,
    pub store: IvStore,
}

/// Map-phase result for all nodes.
#[derive(Debug, Clone)]
pub struct MapOutput {
    t_bits: usize,
    seed: u64,
    nodes: Vec<NodeMapOutput>,
    total_computed: usize,
}

impl MapOutput {
    pub fn t_bits(&self) -> usize {
        self.t_bits
    }

    pub fn iv_bytes(&self) -> usize {
        self.t_bits / 8
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of intermediate values computed across all nodes (`s * N * Q`).
    pub fn total_computed(&self) -> usize {
        self.total_computed
    }

    pub fn node(&self, node: NodeId) -> &NodeMapOutput {
        &self.nodes[node - 1]
    }

    pub fn node_mut(&mut self, node: NodeId) -> &mut NodeMapOutput {
        &mut self.nodes[node - 1]
    }

    pub fn nodes(&self) -> &[NodeMapOutput] {
        &self.nodes
    }

    /// `v_{i,j}` as computed at `node`, if it computed it.
    pub fn get(&self, node: NodeId, key: IvKey) -> Option<&[u8]> {
        self.nodes.get(node.wrapping_sub(1))?.store.get(key)
    }

    /// SHA-256 over each node's values in canonical order, hex encoded.
    pub fn digests(&self) -> Vec<NodeDigest> {
        self.nodes
            .iter()
            .map(|n| {
                let mut h = Sha256::new();
                for (key, bytes) in n.store.iter() {
                    h.update((key.function as u64).to_le_bytes());
                    h.update((key.file as u64).to_le_bytes());
                    h.update(bytes);
                }
                NodeDigest {
                    node: n.node,
                    values: n.store.len(),
                    sha256: hex::encode(h.finalize()),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeDigest {
    pub node: NodeId,
    pub values: usize,
    pub sha256: String,
}

/// Runs the Map phase at every node. `t_bits` must meet the divisibility
/// contract of the shuffle `strategy` that will consume the output.
pub fn run_map(design: &Design, t_bits: usize, seed: u64, strategy: Strategy) -> Result<MapOutput, MapError> {
    check_t_bits(t_bits, design.s(), strategy)?;
    let q = design.num_functions();
    let n = design.num_files();
    let iv_bytes = t_bits / 8;
    let nodes: Vec<NodeMapOutput> = (1..=design.num_nodes())
        .into_par_iter()
        .map(|k| {
            let view = design.node_view(k).expect("node in range");
            let mut store = IvStore::new((1..=q).collect(), view.files.clone(), q, n, iv_bytes);
            let mut buf = vec![0u8; iv_bytes];
            for i in 1..=q {
                for &j in &view.files {
                    fill_payload(i, j, seed, &mut buf);
                    store.insert(IvKey::new(i, j), &buf);
                }
            }
            NodeMapOutput { node: k, store }
        })
        .collect();
    let total_computed = nodes.iter().map(|n| n.store.len()).sum();
    Ok(MapOutput {
        t_bits,
        seed,
        nodes,
        total_computed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignParams;

    fn design(x: Vec<usize>) -> Design {
        Design::build(DesignParams::new(x, 1, 1).unwrap()).unwrap()
    }

    #[test]
    fn payload_is_deterministic_and_keyed() {
        let a = payload(1, 1, 128, 9).unwrap();
        assert_eq!(a.len(), 16);
        assert_eq!(a, payload(1, 1, 128, 9).unwrap());
        assert_ne!(a, payload(1, 2, 128, 9).unwrap());
        assert_ne!(a, payload(2, 1, 128, 9).unwrap());
        assert_ne!(a, payload(1, 1, 128, 10).unwrap());
    }

    #[test]
    fn payload_rejects_bad_input() {
        assert_eq!(payload(1, 1, 12, 0), Err(MapError::NotByteAligned(12)));
        assert_eq!(payload(0, 1, 8, 0), Err(MapError::BadId { function: 0, file: 1 }));
    }

    #[test]
    fn auto_t_bits_values() {
        assert_eq!(auto_t_bits(2, Strategy::Default), 24);
        assert_eq!(auto_t_bits(3, Strategy::Default), 40);
        assert_eq!(auto_t_bits(3, Strategy::AllB), 8 * 15);
        assert_eq!(auto_t_bits(4, Strategy::AllB), 8 * 105);
    }

    #[test]
    fn divisibility_error_names_divisor() {
        let d = design(vec![2, 2, 4]);
        let err = run_map(&d, 48, 0, Strategy::Default).unwrap_err();
        assert_eq!(
            err,
            MapError::Indivisible {
                t_bits: 48,
                divisor: 40,
                strategy: Strategy::Default
            }
        );
        assert!(err.to_string().contains("40"));
    }

    #[test]
    fn total_computed_is_s_n_q() {
        let d2 = design(vec![4, 6]);
        let m = run_map(&d2, 24, 1, Strategy::Default).unwrap();
        assert_eq!(m.total_computed(), 2 * 24 * 24);
        assert_eq!(m.total_computed() / (24 * 24), 2);

        let d3 = design(vec![2, 2, 4]);
        let m = run_map(&d3, 40, 1, Strategy::Default).unwrap();
        assert_eq!(m.total_computed(), 3 * 16 * 16);
    }

    #[test]
    fn node_holds_exactly_local_files() {
        let d = design(vec![4, 6]);
        let m = run_map(&d, 24, 3, Strategy::Default).unwrap();
        for k in 1..=d.num_nodes() {
            for j in 1..=d.num_files() {
                let stored = d.stores(k, j).unwrap();
                for i in 1..=d.num_functions() {
                    assert_eq!(m.get(k, IvKey::new(i, j)).is_some(), stored);
                }
            }
        }
    }

    #[test]
    fn cross_node_consistency() {
        let d = design(vec![2, 3]);
        let m = run_map(&d, 24, 5, Strategy::Default).unwrap();
        for j in 1..=d.num_files() {
            let holders: Vec<_> = (1..=d.num_nodes()).filter(|&k| d.stores(k, j).unwrap()).collect();
            for i in 1..=d.num_functions() {
                let key = IvKey::new(i, j);
                let first = m.get(holders[0], key).unwrap();
                for &k in &holders[1..] {
                    assert_eq!(m.get(k, key).unwrap(), first);
                }
                assert_eq!(first, payload(i, j, 24, 5).unwrap().as_slice());
            }
        }
    }

    #[test]
    fn store_roundtrip() {
        let mut s = IvStore::new(vec![1, 3], vec![2, 5], 4, 6, 2);
        assert!(s.is_empty());
        assert!(s.insert(IvKey::new(3, 5), &[7, 8]));
        assert!(!s.insert(IvKey::new(2, 5), &[0, 0]));
        assert_eq!(s.get(IvKey::new(3, 5)), Some(&[7u8, 8][..]));
        assert_eq!(s.get(IvKey::new(1, 2)), None);
        assert!(s.covers(IvKey::new(1, 2)));
        assert_eq!(s.iter().count(), 1);
        assert!(s.remove(IvKey::new(3, 5)));
        assert!(!s.remove(IvKey::new(3, 5)));
    }

    #[test]
    fn digests_are_stable() {
        let d = design(vec![2, 2]);
        let a = run_map(&d, 24, 1, Strategy::Default).unwrap().digests();
        let b = run_map(&d, 24, 1, Strategy::Default).unwrap().digests();
        assert_eq!(a, b);
        assert_eq!(a[0].values, 2 * 4);
    }
}
