//! Method B: linear combinations of split packets inside a 2g-node set.
//!
//! A plan fixes `A` (g groups) and `S` (two nodes from each group of `A`).
//! The nodes of `S` are laid out in *slots*: slot `2t` is the lower-coordinate
//! node of the `t`-th group of `A`, slot `2t + 1` the higher one. A V-set is
//! indexed by a mask whose bit `t` says which node of group `A[t]` is in `S'`.
//! Slot `2t + b` knows exactly the V-sets whose bit `t` equals `b`, and wants
//! the others.
//!
//! Because every plan of a round has this same shape, the coefficients and
//! each slot's inverse system are computed once per round by
//! [`MethodBCoder`] and reused for every plan.

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{gather, split_ivs, Coding, Method, ShuffleError, TransmissionRecord, DEFAULT_COEFF_ATTEMPTS};
use crate::design::Design;
use crate::gf256::{self, Matrix};
use crate::mapper::{IntermediateValue, MapOutput};
use crate::{IvKey, NodeId};

/// `V_{S'}^{S \ S'}`: values requested only by `S \ S'` and computed by `S'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VSet {
    pub s_prime: Vec<NodeId>,
    pub s_rest: Vec<NodeId>,
    /// Ascending `(function, file)`.
    pub ivs: Vec<IvKey>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundPlanB {
    pub gamma: usize,
    /// `A`, 1-based group indices.
    pub groups: Vec<usize>,
    /// `S` ascending.
    pub s: Vec<NodeId>,
    /// `S` in slot order.
    pub slots: Vec<NodeId>,
    /// `2^g` V-sets indexed by mask.
    pub vsets: Vec<VSet>,
    /// Packets per V-set, `2g - 1`.
    pub num_packets: usize,
}

impl RoundPlanB {
    pub fn slot_of(&self, node: NodeId) -> Option<usize> {
        self.slots.iter().position(|&k| k == node)
    }
}

fn slot_knows(slot: usize, mask: usize) -> bool {
    (mask >> (slot / 2)) & 1 == slot % 2
}

/// All Method B plans of round `gamma`, ordered by `(A, S)`.
pub fn enumerate_b(design: &Design, gamma: usize) -> Result<Vec<RoundPlanB>, ShuffleError> {
    let s = design.s();
    if gamma == 0 || gamma > s {
        return Err(ShuffleError::GammaOutOfRange {
            gamma,
            min: 1,
            max: s,
            method: Method::B,
        });
    }
    let x = design.params().x();
    let groups = design.groups();
    let mut plans = Vec::new();

    for a_set in (0..s).combinations(gamma) {
        let outside: Vec<usize> = (0..s).filter(|m| !a_set.contains(m)).collect();
        let commons: Vec<Vec<usize>> = if outside.is_empty() {
            vec![Vec::new()]
        } else {
            outside.iter().map(|&m| 0..x[m]).multi_cartesian_product().collect()
        };
        let pair_choices = a_set.iter().map(|&m| (0..x[m]).tuple_combinations::<(usize, usize)>());
        for pairs in pair_choices.multi_cartesian_product() {
            let slots: Vec<NodeId> = pairs
                .iter()
                .zip(&a_set)
                .flat_map(|(&(p, q), &m)| [groups[m][p], groups[m][q]])
                .collect();
            let vsets = (0..1usize << gamma)
                .map(|mask| {
                    let mut prime = vec![0usize; s];
                    let mut rest = vec![0usize; s];
                    let mut s_prime = Vec::with_capacity(gamma);
                    let mut s_rest = Vec::with_capacity(gamma);
                    for (t, &m) in a_set.iter().enumerate() {
                        let (p, q) = pairs[t];
                        let (kp, kr) = if mask >> t & 1 == 1 { (q, p) } else { (p, q) };
                        prime[m] = kp;
                        rest[m] = kr;
                        s_prime.push(groups[m][kp]);
                        s_rest.push(groups[m][kr]);
                    }
                    let mut ivs = Vec::new();
                    for common in &commons {
                        for (&m, &c) in outside.iter().zip(common) {
                            prime[m] = c;
                            rest[m] = c;
                        }
                        let ell = design.index_of_coords(&prime);
                        let alpha = design.index_of_coords(&rest);
                        for i in design.function_block(alpha) {
                            for j in design.file_block(ell) {
                                ivs.push(IvKey::new(i, j));
                            }
                        }
                    }
                    ivs.sort_unstable();
                    s_prime.sort_unstable();
                    s_rest.sort_unstable();
                    VSet { s_prime, s_rest, ivs }
                })
                .collect();
            let mut s_sorted = slots.clone();
            s_sorted.sort_unstable();
            plans.push(RoundPlanB {
                gamma,
                groups: a_set.iter().map(|m| m + 1).collect(),
                s: s_sorted,
                slots,
                vsets,
                num_packets: 2 * gamma - 1,
            });
        }
    }
    Ok(plans)
}

/// Per-slot decoding data: which rows it receives and how to turn them into
/// its unknown packets.
#[derive(Debug, Clone)]
struct SlotDecoder {
    /// Global packet indices the slot must solve for.
    unknown: Vec<usize>,
    /// Global packet indices the slot already holds.
    known: Vec<usize>,
    /// `(sender_slot, combo)` of every received row, in matrix row order.
    rows: Vec<(usize, usize)>,
    /// `unknown = inverse * received + side * known`.
    inverse: Matrix,
    side: Matrix,
}

/// Coefficients for one round plus every slot's precomputed solver.
#[derive(Debug, Clone)]
pub struct MethodBCoder {
    gamma: usize,
    seed: u64,
    /// `coefficients[slot][combo][k]` multiplies the slot's `k`-th known packet.
    coefficients: Vec<Vec<Vec<u8>>>,
    decoders: Vec<SlotDecoder>,
}

impl MethodBCoder {
    /// Draws coefficients from `seed`, `seed + 1`, ... until every slot's
    /// system is full rank, giving up after `attempts` seeds.
    pub fn new(gamma: usize, seed: u64, attempts: usize) -> Result<Self, ShuffleError> {
        let mut tried = Vec::new();
        for k in 0..attempts as u64 {
            let candidate = seed.wrapping_add(k);
            tried.push(candidate);
            if let Ok(coder) = Self::from_coefficients(gamma, candidate, Self::draw(gamma, candidate)) {
                return Ok(coder);
            }
        }
        Err(ShuffleError::RankExhausted { gamma, seeds: tried })
    }

    /// Rebuilds the coder for a seed that is already known to work.
    pub fn with_exact_seed(gamma: usize, seed: u64) -> Result<Self, ShuffleError> {
        Self::from_coefficients(gamma, seed, Self::draw(gamma, seed))
    }

    fn draw(gamma: usize, seed: u64) -> Vec<Vec<Vec<u8>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(gamma as u64);
        let combos = 1usize << (gamma - 1);
        let known = combos * (2 * gamma - 1);
        (0..2 * gamma)
            .map(|_| {
                (0..combos)
                    .map(|_| (0..known).map(|_| rng.gen_range(1..=255u8)).collect())
                    .collect()
            })
            .collect()
    }

    /// Builds a coder from explicit coefficients; fails if any slot's system
    /// is singular.
    pub fn from_coefficients(gamma: usize, seed: u64, coefficients: Vec<Vec<Vec<u8>>>) -> Result<Self, ShuffleError> {
        let packets = 2 * gamma - 1;
        let masks = 1usize << gamma;
        let combos = masks / 2;
        let known_of = |slot: usize| -> Vec<usize> {
            (0..masks)
                .filter(|&m| slot_knows(slot, m))
                .flat_map(|m| (0..packets).map(move |a| m * packets + a))
                .collect()
        };
        assert_eq!(coefficients.len(), 2 * gamma, "one coefficient block per slot");
        let known_lists: Vec<Vec<usize>> = (0..2 * gamma).map(known_of).collect();

        let mut decoders = Vec::with_capacity(2 * gamma);
        for slot in 0..2 * gamma {
            let known = known_lists[slot].clone();
            let unknown: Vec<usize> = (0..masks * packets)
                .filter(|p| known.binary_search(p).is_err())
                .collect();
            let rows: Vec<(usize, usize)> = (0..2 * gamma)
                .filter(|&t| t != slot)
                .flat_map(|t| (0..combos).map(move |c| (t, c)))
                .collect();
            let mut unk_mat = Matrix::zeros(rows.len(), unknown.len());
            let mut known_mat = Matrix::zeros(rows.len(), known.len());
            for (r, &(t, c)) in rows.iter().enumerate() {
                for (k, &p) in known_lists[t].iter().enumerate() {
                    let coeff = coefficients[t][c][k];
                    if let Ok(u) = unknown.binary_search(&p) {
                        unk_mat[(r, u)] = coeff;
                    } else {
                        let kk = known.binary_search(&p).expect("packet is known or unknown");
                        known_mat[(r, kk)] = coeff;
                    }
                }
            }
            let inverse = unk_mat.inverse().ok_or(ShuffleError::Singular { gamma, slot })?;
            let side = inverse.mul(&known_mat);
            decoders.push(SlotDecoder {
                unknown,
                known,
                rows,
                inverse,
                side,
            });
        }
        Ok(Self {
            gamma,
            seed,
            coefficients,
            decoders,
        })
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    /// Seed that produced the committed coefficients.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of unknown packets each receiver solves for.
    pub fn unknowns_per_receiver(&self) -> usize {
        self.decoders[0].unknown.len()
    }
}

fn check_gamma(plan: &RoundPlanB, coder: &MethodBCoder) -> Result<(), ShuffleError> {
    if plan.gamma != coder.gamma {
        return Err(ShuffleError::WrongCoding);
    }
    Ok(())
}

/// Packets a node of `S` holds, in the slot's known-packet order.
/// The packets a slot holds, concatenated, with the packet size.
fn known_packets(plan: &RoundPlanB, slot: usize, mapout: &MapOutput) -> Result<(Vec<u8>, usize), ShuffleError> {
    let node = plan.slots[slot];
    let mut out = Vec::new();
    let mut packet_bytes = 0;
    for (mask, vset) in plan.vsets.iter().enumerate() {
        if !slot_knows(slot, mask) {
            continue;
        }
        let bytes = gather(mapout, node, &vset.ivs)?;
        if bytes.len() % plan.num_packets != 0 {
            return Err(ShuffleError::PacketNotIntegral {
                bytes: bytes.len(),
                packets: plan.num_packets,
            });
        }
        packet_bytes = bytes.len() / plan.num_packets;
        out.extend_from_slice(&bytes);
    }
    Ok((out, packet_bytes))
}

/// Encodes one plan with a fixed seed, reseeding on rank failure.
pub fn encode_b(
    plan: &RoundPlanB,
    mapout: &MapOutput,
    coeff_seed: u64,
) -> Result<Vec<TransmissionRecord>, ShuffleError> {
    let coder = MethodBCoder::new(plan.gamma, coeff_seed, DEFAULT_COEFF_ATTEMPTS)?;
    encode_b_with(plan, 0, mapout, &coder)
}

/// `2^(g-1)` combinations from every node of `S`, slot-major. `plan_index`
/// is stamped into the headers.
pub fn encode_b_with(
    plan: &RoundPlanB,
    plan_index: usize,
    mapout: &MapOutput,
    coder: &MethodBCoder,
) -> Result<Vec<TransmissionRecord>, ShuffleError> {
    check_gamma(plan, coder)?;
    let combos = 1usize << (plan.gamma - 1);
    let mut records = Vec::with_capacity(plan.slots.len() * combos);
    for (slot, &sender) in plan.slots.iter().enumerate() {
        let (buf, packet_bytes) = known_packets(plan, slot, mapout)?;
        let packets: Vec<&[u8]> = buf.chunks_exact(packet_bytes).collect();
        let receivers: Vec<NodeId> = plan.s.iter().copied().filter(|&k| k != sender).collect();
        for combo in 0..combos {
            let mut payload = vec![0u8; packet_bytes];
            gf256::mul_add_many(&mut payload, &coder.coefficients[slot][combo], &packets);
            records.push(TransmissionRecord {
                round: plan.gamma,
                method: Method::B,
                sender,
                receivers: receivers.clone(),
                bits: (packet_bytes * 8) as u64,
                payload,
                coding: Coding::Linear {
                    plan: plan_index,
                    sender_slot: slot,
                    combo,
                    seed: coder.seed,
                },
            });
        }
    }
    Ok(records)
}

/// Decodes using the seed carried in the records' headers.
pub fn decode_b(
    plan: &RoundPlanB,
    records: &[TransmissionRecord],
    receiver: NodeId,
    mapout: &MapOutput,
) -> Result<Vec<IntermediateValue>, ShuffleError> {
    let seed = records
        .iter()
        .find_map(|r| match r.coding {
            Coding::Linear { seed, .. } => Some(seed),
            _ => None,
        })
        .ok_or(ShuffleError::WrongCoding)?;
    let coder = MethodBCoder::with_exact_seed(plan.gamma, seed)?;
    decode_b_with(plan, records, receiver, mapout, &coder)
}

/// Solves for every V-set the receiver requested in this plan.
pub fn decode_b_with(
    plan: &RoundPlanB,
    records: &[TransmissionRecord],
    receiver: NodeId,
    mapout: &MapOutput,
    coder: &MethodBCoder,
) -> Result<Vec<IntermediateValue>, ShuffleError> {
    check_gamma(plan, coder)?;
    let slot = plan
        .slot_of(receiver)
        .ok_or(ShuffleError::NotReceiver { node: receiver })?;
    let dec = &coder.decoders[slot];
    let (buf, packet_bytes) = known_packets(plan, slot, mapout)?;
    let known: Vec<&[u8]> = buf.chunks_exact(packet_bytes).collect();
    debug_assert_eq!(known.len(), dec.known.len());

    let combos = 1usize << (plan.gamma - 1);
    let is_row = |r: &TransmissionRecord, t: usize, c: usize| matches!(r.coding, Coding::Linear { sender_slot, combo, .. } if sender_slot == t && combo == c);
    let mut received: Vec<&[u8]> = Vec::with_capacity(dec.rows.len());
    for &(t, c) in &dec.rows {
        // Records are normally slot-major and complete; search otherwise.
        let rec = records
            .get(t * combos + c)
            .filter(|r| is_row(r, t, c))
            .or_else(|| records.iter().find(|r| is_row(r, t, c)))
            .ok_or(ShuffleError::MissingRecord { slot: t, combo: c })?;
        if rec.payload.len() != packet_bytes {
            return Err(ShuffleError::WrongCoding);
        }
        received.push(&rec.payload);
    }

    let mut solved = vec![vec![0u8; packet_bytes]; dec.unknown.len()];
    for (u, out) in solved.iter_mut().enumerate() {
        gf256::mul_add_many(out, dec.inverse.row(u), &received);
        gf256::mul_add_many(out, dec.side.row(u), &known);
    }

    // Unknown packets are ordered by mask then packet index, so each wanted
    // V-set is a run of `num_packets` consecutive entries.
    let iv_bytes = mapout.iv_bytes();
    let mut out = Vec::new();
    for (chunk, first) in solved
        .chunks(plan.num_packets)
        .zip(dec.unknown.chunks(plan.num_packets))
    {
        let mask = first[0] / plan.num_packets;
        let bytes = chunk.concat();
        out.extend(split_ivs(&plan.vsets[mask].ivs, &bytes, iv_bytes));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignParams;
    use crate::mapper::{self, payload};
    use crate::shuffle::Strategy;

    fn design(x: Vec<usize>) -> Design {
        Design::build(DesignParams::new(x, 1, 1).unwrap()).unwrap()
    }

    #[test]
    fn plan_counts() {
        assert_eq!(enumerate_b(&design(vec![2, 2, 4]), 3).unwrap().len(), 6);
        assert_eq!(enumerate_b(&design(vec![4, 6]), 2).unwrap().len(), 90);
        assert!(enumerate_b(&design(vec![2, 2]), 3).is_err());
        assert!(enumerate_b(&design(vec![2, 2]), 0).is_err());
    }

    #[test]
    fn vset_sizes() {
        let d = Design::build(DesignParams::new(vec![2, 3, 3], 2, 1).unwrap()).unwrap();
        for gamma in 1..=3 {
            for plan in enumerate_b(&d, gamma).unwrap() {
                assert_eq!(plan.vsets.len(), 1 << gamma);
                let outside: usize = (0..3)
                    .filter(|m| !plan.groups.contains(&(m + 1)))
                    .map(|m| d.params().x()[m])
                    .product();
                for v in &plan.vsets {
                    assert_eq!(v.ivs.len(), 2 * outside);
                    for key in &v.ivs {
                        assert_eq!(d.requesters(key.function, key.file).unwrap(), v.s_rest);
                    }
                }
            }
        }
    }

    #[test]
    fn cuboid_round_three_values() {
        let d = design(vec![2, 2, 4]);
        let plans = enumerate_b(&d, 3).unwrap();
        let plan = plans.iter().find(|p| p.s == vec![1, 2, 3, 4, 5, 6]).unwrap();
        let mut pairs: Vec<(Vec<NodeId>, Vec<NodeId>)> = Vec::new();
        for v in &plan.vsets {
            assert_eq!(v.ivs.len(), 1);
            let key = v.ivs[0];
            let alpha = d.t_members(d.cell_of_function(key.function).unwrap()).unwrap();
            let ell = d.t_members(d.cell_of_file(key.file).unwrap()).unwrap();
            pairs.push((alpha, ell));
        }
        pairs.sort();
        // complementary T-set pairs inside {1..6}, both directions
        let mut expect = vec![];
        for (a, b) in [
            ([1, 3, 5], [2, 4, 6]),
            ([1, 3, 6], [2, 4, 5]),
            ([1, 4, 5], [2, 3, 6]),
            ([1, 4, 6], [2, 3, 5]),
        ] {
            expect.push((a.to_vec(), b.to_vec()));
            expect.push((b.to_vec(), a.to_vec()));
        }
        expect.sort();
        assert_eq!(pairs, expect);
    }

    #[test]
    fn encode_counts_and_sizes() {
        let d = design(vec![2, 2, 4]);
        let t = mapper::auto_t_bits(3, Strategy::Default);
        let mapout = mapper::run_map(&d, t, 5, Strategy::Default).unwrap();
        let plan = &enumerate_b(&d, 3).unwrap()[0];
        let recs = encode_b(plan, &mapout, 0).unwrap();
        assert_eq!(recs.len(), 24);
        assert!(recs.iter().all(|r| r.bits as usize * 5 == t && r.receivers.len() == 5));

        let d2 = design(vec![4, 6]);
        let mapout2 = mapper::run_map(&d2, 24, 5, Strategy::Default).unwrap();
        let plan = &enumerate_b(&d2, 2).unwrap()[0];
        let recs = encode_b(plan, &mapout2, 0).unwrap();
        assert_eq!(recs.len(), 8);
        assert!(recs.iter().all(|r| r.bits == 8));
    }

    #[test]
    fn square_systems() {
        assert_eq!(MethodBCoder::new(2, 0, 16).unwrap().unknowns_per_receiver(), 6);
        assert_eq!(MethodBCoder::new(3, 0, 16).unwrap().unknowns_per_receiver(), 20);
        assert_eq!(MethodBCoder::new(4, 0, 16).unwrap().unknowns_per_receiver(), 56);
    }

    #[test]
    fn decode_is_bit_exact() {
        let d = design(vec![2, 2, 4]);
        let mapout = mapper::run_map(&d, 40, 8, Strategy::Default).unwrap();
        for plan in enumerate_b(&d, 3).unwrap() {
            let recs = encode_b(&plan, &mapout, 3).unwrap();
            for &r in &plan.s {
                let ivs = decode_b(&plan, &recs, r, &mapout).unwrap();
                assert_eq!(ivs.len(), 4);
                for iv in ivs {
                    assert!(mapout.get(r, iv.key).is_none());
                    assert_eq!(iv.payload, payload(iv.key.function, iv.key.file, 40, 8).unwrap());
                }
            }
        }
    }

    #[test]
    fn decode_in_lower_rounds() {
        let d = Design::build(DesignParams::new(vec![3, 2, 2], 1, 2).unwrap()).unwrap();
        let t = mapper::auto_t_bits(3, Strategy::AllB);
        let mapout = mapper::run_map(&d, t, 2, Strategy::AllB).unwrap();
        for gamma in 1..=2 {
            let coder = MethodBCoder::new(gamma, 9, 16).unwrap();
            for (idx, plan) in enumerate_b(&d, gamma).unwrap().iter().enumerate() {
                let recs = encode_b_with(plan, idx, &mapout, &coder).unwrap();
                for &r in &plan.s {
                    for iv in decode_b_with(plan, &recs, r, &mapout, &coder).unwrap() {
                        assert_eq!(iv.payload, payload(iv.key.function, iv.key.file, t, 2).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn singular_coefficients_are_rejected() {
        // identical combinations from each sender cannot be full rank
        let coeffs = vec![vec![vec![1u8; 6]; 2]; 4];
        assert!(matches!(
            MethodBCoder::from_coefficients(2, 0, coeffs),
            Err(ShuffleError::Singular { gamma: 2, .. })
        ));
        assert_eq!(
            MethodBCoder::new(2, 0, 0).unwrap_err(),
            ShuffleError::RankExhausted {
                gamma: 2,
                seeds: vec![]
            }
        );
    }

    #[test]
    fn missing_record_and_bad_receiver() {
        let d = design(vec![2, 2]);
        let mapout = mapper::run_map(&d, 24, 0, Strategy::Default).unwrap();
        let plan = &enumerate_b(&d, 2).unwrap()[0];
        let recs = encode_b(plan, &mapout, 0).unwrap();
        let short: Vec<_> = recs.iter().skip(2).cloned().collect();
        assert!(matches!(
            decode_b(plan, &short, plan.slots[3], &mapout),
            Err(ShuffleError::MissingRecord { slot: 0, .. })
        ));
        let plan1 = &enumerate_b(&d, 1).unwrap()[0];
        let outsider = (1..=4).find(|k| !plan1.s.contains(k)).unwrap();
        let recs1 = encode_b(plan1, &mapout_for_all_b(&d), 0).unwrap();
        assert!(matches!(
            decode_b(plan1, &recs1, outsider, &mapout_for_all_b(&d)),
            Err(ShuffleError::NotReceiver { .. })
        ));
    }

    fn mapout_for_all_b(d: &Design) -> MapOutput {
        mapper::run_map(d, mapper::auto_t_bits(d.s(), Strategy::AllB), 0, Strategy::AllB).unwrap()
    }

    #[test]
    fn packet_divisibility_is_enforced() {
        let d = design(vec![2, 2, 2]);
        // T = 40 works for round 3 but not for round 2 (needs a factor of 3)
        let mapout = mapper::run_map(&d, 40, 0, Strategy::Default).unwrap();
        let plan = &enumerate_b(&d, 2).unwrap()[0];
        // |V| = 2 values of 5 bytes = 10 bytes, not divisible by 3
        assert_eq!(
            encode_b(plan, &mapout, 0).unwrap_err(),
            ShuffleError::PacketNotIntegral { bytes: 10, packets: 3 }
        );
    }
}
