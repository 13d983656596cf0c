//! The `s`-round coded Shuffle.
//!
//! Round `g` delivers the intermediate values requested by exactly `g` nodes.
//! Two methods are available per round:
//!
//! * **Method A** (`1 <= g <= s-1`): a node outside the 2g-node target set
//!   multicasts the XOR of two intermediate-value sets; each receiver cancels
//!   the side it computed itself.
//! * **Method B** (`1 <= g <= s`): the 2g target nodes split each set into
//!   `2g - 1` packets and multicast GF(2^8) linear combinations of what they
//!   hold; each receiver solves a square system for its unknown packets.
//!
//! [`Strategy::Default`] uses Method A for rounds `1..s-1` and Method B for
//! round `s`. [`Strategy::AllB`] uses Method B everywhere.

use std::fmt;
use std::str::FromStr;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::Design;
use crate::mapper::{self, IntermediateValue, IvStore, MapError, MapOutput};
use crate::{IvKey, NodeId};

mod ledger;
mod method_a;
mod method_b;

pub use ledger::{LedgerSummary, RoundSummary, ShuffleLedger};
pub use method_a::{decode_a, encode_a, enumerate_a, DecodeAOutcome, RoundPlanA};
pub use method_b::{decode_b, decode_b_with, encode_b, encode_b_with, enumerate_b, MethodBCoder, RoundPlanB, VSet};

/// Default reseeding budget for the Method B rank check.
pub const DEFAULT_COEFF_ATTEMPTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Method A for rounds `1..s-1`, Method B for round `s`.
    #[default]
    Default,
    /// Method B in every round.
    AllB,
}

impl Strategy {
    pub fn method_for_round(self, gamma: usize, s: usize) -> Method {
        match self {
            Strategy::Default if gamma < s => Method::A,
            _ => Method::B,
        }
    }

    /// Rounds that run Method B.
    pub fn method_b_rounds(self, s: usize) -> impl Iterator<Item = usize> {
        (1..=s).filter(move |&g| self.method_for_round(g, s) == Method::B)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Default => "default",
            Strategy::AllB => "all-b",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "default" => Ok(Strategy::Default),
            "all-b" | "allb" => Ok(Strategy::AllB),
            other => Err(format!("unknown strategy '{other}' (expected default or all-b)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    A,
    B,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::A => "A",
            Method::B => "B",
        })
    }
}

/// Which node of `Y` sends a Method A transmission. Only per-node send
/// counts depend on this, never the load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SenderPolicy {
    #[default]
    LowestId,
    /// Rotate through `Y` by plan position within the round.
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleOptions {
    pub strategy: Strategy,
    pub coeff_seed: u64,
    pub sender_policy: SenderPolicy,
    pub coeff_attempts: usize,
}

impl Default for ShuffleOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Default,
            coeff_seed: 0,
            sender_policy: SenderPolicy::LowestId,
            coeff_attempts: DEFAULT_COEFF_ATTEMPTS,
        }
    }
}

impl ShuffleOptions {
    pub fn with_strategy(strategy: Strategy) -> Self {
        Self {
            strategy,
            ..Self::default()
        }
    }
}

/// Header that tells receivers how a payload was formed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coding {
    /// `payload = concat(left) XOR concat(right)`. `left` is requested by the
    /// nodes outside `S'`, `right` by the nodes of `S'`.
    Xor { left: Vec<IvKey>, right: Vec<IvKey> },
    /// Combination `combo` sent by slot `sender_slot` of Method B plan `plan`,
    /// with coefficients drawn from `seed`.
    Linear {
        plan: usize,
        sender_slot: usize,
        combo: usize,
        seed: u64,
    },
}

/// One multicast on the shared link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionRecord {
    pub round: usize,
    pub method: Method,
    pub sender: NodeId,
    pub receivers: Vec<NodeId>,
    pub bits: u64,
    pub payload: Vec<u8>,
    pub coding: Coding,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShuffleError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("round {gamma} is outside {min}..={max} for Method {method}")]
    GammaOutOfRange {
        gamma: usize,
        min: usize,
        max: usize,
        method: Method,
    },
    #[error("node {node} never computed {key} (placement violation)")]
    MissingIv { node: NodeId, key: IvKey },
    #[error("node {node} is not a receiver of this transmission")]
    NotReceiver { node: NodeId },
    #[error("node {node} holds neither side of the coded pair")]
    NoSideInformation { node: NodeId },
    #[error("transmission header does not match the decoder")]
    WrongCoding,
    #[error("{bytes} bytes cannot be split into {packets} equal packets")]
    PacketNotIntegral { bytes: usize, packets: usize },
    #[error("no full-rank coefficients for round {gamma} after trying seeds {seeds:?}")]
    RankExhausted { gamma: usize, seeds: Vec<u64> },
    #[error("linear system of slot {slot} in round {gamma} is singular")]
    Singular { gamma: usize, slot: usize },
    #[error("missing combination {combo} from slot {slot}")]
    MissingRecord { slot: usize, combo: usize },
    #[error("{key} delivered to node {node}, which neither needs nor may hold it")]
    Misrouted { node: NodeId, key: IvKey },
}

/// Intermediate values each node received during the Shuffle, restricted to
/// its assigned functions and the files it does not store.
#[derive(Debug, Clone)]
pub struct Delivered {
    nodes: Vec<IvStore>,
}

impl Delivered {
    pub fn empty(design: &Design, iv_bytes: usize) -> Self {
        let q = design.num_functions();
        let n = design.num_files();
        let nodes = design
            .node_views()
            .into_iter()
            .map(|v| {
                let missing: Vec<_> = (1..=n).filter(|j| v.files.binary_search(j).is_err()).collect();
                IvStore::new(v.functions, missing, q, n, iv_bytes)
            })
            .collect();
        Self { nodes }
    }

    pub fn get(&self, node: NodeId, key: IvKey) -> Option<&[u8]> {
        self.nodes.get(node.wrapping_sub(1))?.get(key)
    }

    pub fn node(&self, node: NodeId) -> &IvStore {
        &self.nodes[node - 1]
    }

    pub fn node_mut(&mut self, node: NodeId) -> &mut IvStore {
        &mut self.nodes[node - 1]
    }

    /// Total received values across nodes.
    pub fn total(&self) -> usize {
        self.nodes.iter().map(IvStore::len).sum()
    }

    /// Inserts; returns whether the value was new.
    fn deliver(&mut self, node: NodeId, iv: &IntermediateValue) -> Result<bool, ShuffleError> {
        let store = &mut self.nodes[node - 1];
        if !store.covers(iv.key) {
            return Err(ShuffleError::Misrouted { node, key: iv.key });
        }
        let fresh = !store.contains(iv.key);
        store.insert(iv.key, &iv.payload);
        Ok(fresh)
    }
}

/// Deliveries produced by one transmission group, kept in enumeration order.
type Batch = (Vec<TransmissionRecord>, Vec<(NodeId, Vec<IntermediateValue>)>, usize);

/// Runs all `s` rounds, decoding at every receiver.
///
/// Plans are encoded and decoded in parallel; records are merged in
/// enumeration order, so the ledger does not depend on the thread count.
pub fn run_shuffle(
    design: &Design,
    mapout: &MapOutput,
    options: &ShuffleOptions,
) -> Result<(Delivered, ShuffleLedger), ShuffleError> {
    let s = design.s();
    mapper::check_t_bits(mapout.t_bits(), s, options.strategy)?;
    let mut delivered = Delivered::empty(design, mapout.iv_bytes());
    let mut ledger = ShuffleLedger::new(design, mapout.t_bits());

    for gamma in 1..=s {
        let method = options.strategy.method_for_round(gamma, s);
        let batches: Vec<Batch> = match method {
            Method::A => {
                let plans = enumerate_a(design, gamma, options.sender_policy)?;
                plans
                    .par_iter()
                    .map(|plan| {
                        let rec = encode_a(plan, mapout)?;
                        let mut out = Vec::with_capacity(rec.receivers.len());
                        let mut redundant = 0;
                        for &r in &rec.receivers {
                            match decode_a(&rec, r, mapout)? {
                                DecodeAOutcome::Recovered(ivs) => out.push((r, ivs)),
                                DecodeAOutcome::Redundant => redundant += 1,
                            }
                        }
                        Ok((vec![rec], out, redundant))
                    })
                    .collect::<Result<_, ShuffleError>>()?
            }
            Method::B => {
                let coder = MethodBCoder::new(gamma, options.coeff_seed, options.coeff_attempts)?;
                let plans = enumerate_b(design, gamma)?;
                plans
                    .par_iter()
                    .enumerate()
                    .map(|(idx, plan)| {
                        let recs = encode_b_with(plan, idx, mapout, &coder)?;
                        let out = plan
                            .slots
                            .iter()
                            .map(|&r| Ok((r, decode_b_with(plan, &recs, r, mapout, &coder)?)))
                            .collect::<Result<Vec<_>, ShuffleError>>()?;
                        Ok((recs, out, 0))
                    })
                    .collect::<Result<_, ShuffleError>>()?
            }
        };

        ledger.open_round(gamma, method);
        for (recs, deliveries, redundant) in batches {
            ledger.add_redundant(redundant);
            for rec in recs {
                ledger.push(rec);
            }
            for (node, ivs) in deliveries {
                for iv in &ivs {
                    if !delivered.deliver(node, iv)? {
                        ledger.add_redundant(1);
                    }
                }
            }
        }
    }
    Ok((delivered, ledger))
}

/// Result of decoding a ledger from scratch.
#[derive(Debug, Clone)]
pub struct Replay {
    pub delivered: Delivered,
    /// `(round, plan, receiver)` for Method B receivers whose system lacked
    /// a row.
    pub undecodable: Vec<(usize, usize, NodeId)>,
}

/// Rebuilds every node's received values from `records` alone, as receivers
/// on the shared link would. Method B plans are re-derived from the design;
/// a receiver missing one of its rows decodes nothing from that plan.
pub fn replay(design: &Design, mapout: &MapOutput, records: &[TransmissionRecord]) -> Result<Replay, ShuffleError> {
    let mut delivered = Delivered::empty(design, mapout.iv_bytes());
    let mut undecodable = Vec::new();
    let mut linear: BTreeMap<(usize, usize), (u64, Vec<TransmissionRecord>)> = BTreeMap::new();
    for rec in records {
        match &rec.coding {
            Coding::Xor { .. } => {
                for &r in &rec.receivers {
                    if let DecodeAOutcome::Recovered(ivs) = decode_a(rec, r, mapout)? {
                        for iv in &ivs {
                            delivered.deliver(r, iv)?;
                        }
                    }
                }
            }
            Coding::Linear { plan, seed, .. } => {
                linear
                    .entry((rec.round, *plan))
                    .or_insert_with(|| (*seed, Vec::new()))
                    .1
                    .push(rec.clone());
            }
        }
    }
    let mut plans: BTreeMap<usize, (Vec<RoundPlanB>, MethodBCoder)> = BTreeMap::new();
    for ((round, index), (seed, recs)) in linear {
        let (round_plans, coder) = match plans.entry(round) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert((enumerate_b(design, round)?, MethodBCoder::with_exact_seed(round, seed)?)),
        };
        let plan = round_plans.get(index).ok_or(ShuffleError::WrongCoding)?;
        for &r in &plan.slots {
            match decode_b_with(plan, &recs, r, mapout, coder) {
                Ok(ivs) => {
                    for iv in &ivs {
                        delivered.deliver(r, iv)?;
                    }
                }
                Err(ShuffleError::MissingRecord { .. }) => undecodable.push((round, index, r)),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(Replay { delivered, undecodable })
}

/// Concatenated payloads of `keys` as computed at `node`.
pub(crate) fn gather(mapout: &MapOutput, node: NodeId, keys: &[IvKey]) -> Result<Vec<u8>, ShuffleError> {
    let mut buf = Vec::with_capacity(keys.len() * mapout.iv_bytes());
    for &key in keys {
        let bytes = mapout.get(node, key).ok_or(ShuffleError::MissingIv { node, key })?;
        buf.extend_from_slice(bytes);
    }
    Ok(buf)
}

/// Splits a concatenation back into intermediate values.
pub(crate) fn split_ivs(keys: &[IvKey], bytes: &[u8], iv_bytes: usize) -> Vec<IntermediateValue> {
    debug_assert_eq!(bytes.len(), keys.len() * iv_bytes);
    keys.iter()
        .zip(bytes.chunks_exact(iv_bytes))
        .map(|(&key, chunk)| IntermediateValue {
            key,
            payload: chunk.to_vec(),
        })
        .collect()
}
