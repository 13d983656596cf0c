//! Method A: XOR-coded pairs multicast by a node outside the target set.

use itertools::Itertools;

use super::{gather, split_ivs, Coding, Method, SenderPolicy, ShuffleError, TransmissionRecord};
use crate::design::Design;
use crate::mapper::{IntermediateValue, MapOutput};
use crate::{CellIndex, IvKey, NodeId};

/// One Method A transmission.
///
/// `S' ∪ Y` and `(S \ S') ∪ Y` are both T-sets. The sender, a member of `Y`,
/// stores both file blocks and XORs
/// `left  = V_{S' ∪ Y}^{S \ S'}` (functions of `(S \ S') ∪ Y`, files of `S' ∪ Y`)
/// with
/// `right = V_{(S \ S') ∪ Y}^{S'}` (functions of `S' ∪ Y`, files of `(S \ S') ∪ Y`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundPlanA {
    pub gamma: usize,
    /// `A`, 1-based group indices.
    pub groups: Vec<usize>,
    pub s: Vec<NodeId>,
    pub y: Vec<NodeId>,
    pub s_prime: Vec<NodeId>,
    pub s_rest: Vec<NodeId>,
    pub sender: NodeId,
    /// T-index of `S' ∪ Y`.
    pub cell_s_prime: CellIndex,
    /// T-index of `(S \ S') ∪ Y`.
    pub cell_s_rest: CellIndex,
    pub left: Vec<IvKey>,
    pub right: Vec<IvKey>,
}

fn block_keys(design: &Design, function_cell: CellIndex, file_cell: CellIndex) -> Vec<IvKey> {
    design
        .function_block(function_cell)
        .cartesian_product(design.file_block(file_cell))
        .map(|(i, j)| IvKey::new(i, j))
        .collect()
}

fn sorted(mut v: Vec<NodeId>) -> Vec<NodeId> {
    v.sort_unstable();
    v
}

/// All Method A transmissions of round `gamma`, ordered by `(A, S, S', Y)`.
///
/// Each unordered pair `{S', S \ S'}` appears once: `S'` always takes the
/// lower-coordinate node of the first group in `A`.
pub fn enumerate_a(design: &Design, gamma: usize, policy: SenderPolicy) -> Result<Vec<RoundPlanA>, ShuffleError> {
    let s = design.s();
    if gamma == 0 || gamma >= s {
        return Err(ShuffleError::GammaOutOfRange {
            gamma,
            min: 1,
            max: s - 1,
            method: Method::A,
        });
    }
    let x = design.params().x();
    let groups = design.groups();
    let mut plans = Vec::new();

    for a_set in (0..s).combinations(gamma) {
        let outside: Vec<usize> = (0..s).filter(|m| !a_set.contains(m)).collect();
        let pair_choices = a_set.iter().map(|&m| (0..x[m]).tuple_combinations::<(usize, usize)>());
        for pairs in pair_choices.multi_cartesian_product() {
            let s_nodes = sorted(
                pairs
                    .iter()
                    .zip(&a_set)
                    .flat_map(|(&(p, q), &m)| [groups[m][p], groups[m][q]])
                    .collect(),
            );
            for mask in 0..(1usize << (gamma - 1)) {
                // bit t set: S' takes the higher-coordinate node of A[t + 1]
                let pick = |t: usize, upper: bool| {
                    let (p, q) = pairs[t];
                    let take_high = if t == 0 { false } else { mask >> (t - 1) & 1 == 1 };
                    if take_high != upper {
                        q
                    } else {
                        p
                    }
                };
                let mut coords_prime = vec![0usize; s];
                let mut coords_rest = vec![0usize; s];
                for (t, &m) in a_set.iter().enumerate() {
                    coords_prime[m] = pick(t, false);
                    coords_rest[m] = pick(t, true);
                }
                let s_prime = sorted(a_set.iter().map(|&m| groups[m][coords_prime[m]]).collect());
                let s_rest = sorted(a_set.iter().map(|&m| groups[m][coords_rest[m]]).collect());

                let y_choices = outside.iter().map(|&m| 0..x[m]);
                let y_iter: Box<dyn Iterator<Item = Vec<usize>>> = if outside.is_empty() {
                    Box::new(std::iter::once(Vec::new()))
                } else {
                    Box::new(y_choices.multi_cartesian_product())
                };
                for y_coords in y_iter {
                    for (&m, &c) in outside.iter().zip(&y_coords) {
                        coords_prime[m] = c;
                        coords_rest[m] = c;
                    }
                    let y = sorted(outside.iter().zip(&y_coords).map(|(&m, &c)| groups[m][c]).collect());
                    let cell_s_prime = design.index_of_coords(&coords_prime);
                    let cell_s_rest = design.index_of_coords(&coords_rest);
                    let sender = match policy {
                        SenderPolicy::LowestId => y[0],
                        SenderPolicy::RoundRobin => y[plans.len() % y.len()],
                    };
                    plans.push(RoundPlanA {
                        gamma,
                        groups: a_set.iter().map(|m| m + 1).collect(),
                        s: s_nodes.clone(),
                        y,
                        s_prime: s_prime.clone(),
                        s_rest: s_rest.clone(),
                        sender,
                        cell_s_prime,
                        cell_s_rest,
                        left: block_keys(design, cell_s_rest, cell_s_prime),
                        right: block_keys(design, cell_s_prime, cell_s_rest),
                    });
                }
            }
        }
    }
    Ok(plans)
}

/// XORs the two sides at the sender.
pub fn encode_a(plan: &RoundPlanA, mapout: &MapOutput) -> Result<TransmissionRecord, ShuffleError> {
    let mut payload = gather(mapout, plan.sender, &plan.left)?;
    let right = gather(mapout, plan.sender, &plan.right)?;
    payload.iter_mut().zip(&right).for_each(|(a, b)| *a ^= b);
    Ok(TransmissionRecord {
        round: plan.gamma,
        method: Method::A,
        sender: plan.sender,
        receivers: plan.s.clone(),
        bits: (plan.left.len() * mapout.t_bits()) as u64,
        payload,
        coding: Coding::Xor {
            left: plan.left.clone(),
            right: plan.right.clone(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeAOutcome {
    Recovered(Vec<IntermediateValue>),
    /// The receiver already computed both sides; the transmission was wasted
    /// on it.
    Redundant,
}

/// Strips the side the receiver computed and returns the other side.
pub fn decode_a(
    record: &TransmissionRecord,
    receiver: NodeId,
    mapout: &MapOutput,
) -> Result<DecodeAOutcome, ShuffleError> {
    let Coding::Xor { left, right } = &record.coding else {
        return Err(ShuffleError::WrongCoding);
    };
    if !record.receivers.contains(&receiver) {
        return Err(ShuffleError::NotReceiver { node: receiver });
    }
    let holds = |keys: &[IvKey]| keys.iter().all(|&k| mapout.get(receiver, k).is_some());
    let (known, wanted) = match (holds(left), holds(right)) {
        (true, true) => return Ok(DecodeAOutcome::Redundant),
        (false, false) => return Err(ShuffleError::NoSideInformation { node: receiver }),
        (true, false) => (left, right),
        (false, true) => (right, left),
    };
    let mut bytes = gather(mapout, receiver, known)?;
    bytes.iter_mut().zip(&record.payload).for_each(|(a, b)| *a ^= b);
    Ok(DecodeAOutcome::Recovered(split_ivs(wanted, &bytes, mapout.iv_bytes())))
}
