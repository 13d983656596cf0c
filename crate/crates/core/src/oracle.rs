//! Brute-force cross-checks that share no enumeration code with
//! [`crate::shuffle`] and never consult the closed forms.
//!
//! Everything here starts from raw membership: which nodes hold each file
//! and which nodes are assigned each function, read off the per-node views.
//! V-sets are recovered by grouping intermediate values on their
//! (holders, assignees) node sets.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::design::Design;
use crate::mapper::{self, MapOutput};
use crate::rational::{Rational, RationalJson};
use crate::shuffle::{Delivered, Method, Strategy};
use crate::{IvKey, NodeId};

/// Intermediate-value pairs (`Q * N`) the oracle accepts by default.
pub const DEFAULT_MAX_IV_PAIRS: usize = 4_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{pairs} intermediate values exceed the oracle limit of {limit}")]
    TooLarge { pairs: usize, limit: usize },
    #[error("oracle node sets are 128-bit masks; {0} nodes is too many")]
    TooManyNodes(usize),
    #[error("V-set grouping is inconsistent: {0}")]
    Inconsistent(String),
}

/// Size limit for the exhaustive passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleGuard {
    pub max_iv_pairs: usize,
}

impl Default for OracleGuard {
    fn default() -> Self {
        Self {
            max_iv_pairs: DEFAULT_MAX_IV_PAIRS,
        }
    }
}

type NodeMask = u128;

fn mask_nodes(mask: NodeMask) -> Vec<NodeId> {
    (0..128)
        .filter(|b| mask >> b & 1 == 1)
        .map(|b| b as NodeId + 1)
        .collect()
}

/// Holder and assignee masks for every file and function.
struct Membership {
    holders: Vec<NodeMask>,
    assignees: Vec<NodeMask>,
}

impl Membership {
    fn new(design: &Design, guard: OracleGuard) -> Result<Self, OracleError> {
        let k = design.num_nodes();
        if k > 128 {
            return Err(OracleError::TooManyNodes(k));
        }
        let pairs = design.num_files() * design.num_functions();
        if pairs > guard.max_iv_pairs {
            return Err(OracleError::TooLarge {
                pairs,
                limit: guard.max_iv_pairs,
            });
        }
        let mut holders = vec![0; design.num_files() + 1];
        let mut assignees = vec![0; design.num_functions() + 1];
        for view in design.node_views() {
            let bit = 1u128 << (view.node - 1);
            for &j in &view.files {
                holders[j] |= bit;
            }
            for &i in &view.functions {
                assignees[i] |= bit;
            }
        }
        Ok(Self { holders, assignees })
    }

    fn requesters(&self, key: IvKey) -> NodeMask {
        self.assignees[key.function] & !self.holders[key.file]
    }

    fn keys(&self) -> impl Iterator<Item = IvKey> + '_ {
        let n = self.holders.len() - 1;
        (1..self.assignees.len()).flat_map(move |i| (1..=n).map(move |j| IvKey::new(i, j)))
    }
}

/// Number of intermediate values requested by exactly `g` nodes, `g = 0..=s`.
pub fn requester_histogram(design: &Design, guard: OracleGuard) -> Result<Vec<usize>, OracleError> {
    let m = Membership::new(design, guard)?;
    let mut hist = vec![0usize; design.s() + 1];
    for key in m.keys() {
        let g = m.requesters(key).count_ones() as usize;
        if g >= hist.len() {
            return Err(OracleError::Inconsistent(format!("{key} has {g} requesters")));
        }
        hist[g] += 1;
    }
    Ok(hist)
}

/// Pairs where the membership-derived requesters differ from
/// [`Design::requesters`]. Empty when the two agree everywhere.
pub fn requester_mismatches(design: &Design, guard: OracleGuard) -> Result<Vec<IvKey>, OracleError> {
    let m = Membership::new(design, guard)?;
    Ok(m.keys()
        .filter(|&key| {
            let lattice = design.requesters(key.function, key.file).expect("ids in range");
            mask_nodes(m.requesters(key)) != lattice
        })
        .collect())
}

/// Totals from the brute-force transmission count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteForceCount {
    pub methods: Vec<Method>,
    pub transmissions: Vec<usize>,
    /// Bits per round in units of `T`.
    pub units: Vec<Rational>,
    pub load: Rational,
}

impl BruteForceCount {
    pub fn to_json(&self) -> BruteForceJson {
        BruteForceJson {
            methods: self.methods.clone(),
            transmissions: self.transmissions.clone(),
            units_of_t: self.units.iter().map(Into::into).collect(),
            load: self.load.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BruteForceJson {
    pub methods: Vec<Method>,
    pub transmissions: Vec<usize>,
    pub units_of_t: Vec<RationalJson>,
    pub load: RationalJson,
}

/// Recounts the Shuffle from definitions.
///
/// * Method A: one transmission per unordered pair of V-sets
///   `{(holders H, assignees F), (holders F, assignees H)}`, each of
///   `|V| * T` bits.
/// * Method B: V-sets grouped by `S = H xor F`; every node of `S` sends
///   `#S' / 2` combinations of `|V| * T / (|S| - 1)` bits.
pub fn count_load_bruteforce(
    design: &Design,
    strategy: Strategy,
    guard: OracleGuard,
) -> Result<BruteForceCount, OracleError> {
    let m = Membership::new(design, guard)?;
    let s = design.s();
    // (holders, assignees) -> number of values, bucketed by requester count
    let mut vsets: Vec<HashMap<(NodeMask, NodeMask), usize>> = vec![HashMap::new(); s + 1];
    for key in m.keys() {
        let h = m.holders[key.file];
        let f = m.assignees[key.function];
        let g = (f & !h).count_ones() as usize;
        if g > 0 {
            *vsets[g].entry((h, f)).or_default() += 1;
        }
    }

    let mut out = BruteForceCount {
        methods: Vec::new(),
        transmissions: Vec::new(),
        units: Vec::new(),
        load: Rational::from_integer(0),
    };
    for (g, groups) in vsets.iter().enumerate().skip(1) {
        let method = strategy.method_for_round(g, s);
        let (count, units) = match method {
            Method::A => count_pairs(groups)?,
            Method::B => count_groups(groups, g)?,
        };
        out.methods.push(method);
        out.transmissions.push(count);
        out.units.push(units);
    }
    let qn = (design.num_files() * design.num_functions()) as i128;
    out.load = out.units.iter().sum::<Rational>() / Rational::from_integer(qn);
    Ok(out)
}

fn count_pairs(groups: &HashMap<(NodeMask, NodeMask), usize>) -> Result<(usize, Rational), OracleError> {
    let mut count = 0;
    let mut units = 0i128;
    for (&(h, f), &size) in groups {
        let partner = groups
            .get(&(f, h))
            .ok_or_else(|| OracleError::Inconsistent("V-set without a coding partner".into()))?;
        if *partner != size {
            return Err(OracleError::Inconsistent("paired V-sets differ in size".into()));
        }
        // count each unordered pair once
        if h < f {
            count += 1;
            units += size as i128;
        }
    }
    Ok((count, Rational::from_integer(units)))
}

fn count_groups(groups: &HashMap<(NodeMask, NodeMask), usize>, g: usize) -> Result<(usize, Rational), OracleError> {
    // S -> (distinct S', total values)
    let mut by_s: HashMap<NodeMask, Vec<usize>> = HashMap::new();
    let mut per_prime: HashMap<(NodeMask, NodeMask), usize> = HashMap::new();
    for (&(h, f), &size) in groups {
        let s_set = h ^ f;
        *per_prime.entry((s_set, h & s_set)).or_default() += size;
    }
    for (&(s_set, _), &size) in &per_prime {
        by_s.entry(s_set).or_default().push(size);
    }
    let mut count = 0usize;
    let mut units = Rational::from_integer(0);
    for (s_set, sizes) in by_s {
        let nodes = s_set.count_ones() as usize;
        if nodes != 2 * g || sizes.iter().any(|&v| v != sizes[0]) || sizes.len() % 2 != 0 {
            return Err(OracleError::Inconsistent(format!(
                "irregular node set {:?}",
                mask_nodes(s_set)
            )));
        }
        let per_node = sizes.len() / 2;
        let tx = nodes * per_node;
        count += tx;
        units += Rational::new((tx * sizes[0]) as i128, (nodes - 1) as i128);
    }
    Ok((count, units))
}

/// Which transmission should have delivered a value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub round: usize,
    pub requesters: Vec<NodeId>,
    /// `S`, nodes assigned the function or holding the file but not both.
    pub target_set: Vec<NodeId>,
    /// `S'`, members of `S` that hold the file.
    pub s_prime: Vec<NodeId>,
    /// `Y`, nodes assigned the function that also hold the file.
    pub y: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditIssue {
    pub node: NodeId,
    pub function: usize,
    pub file: usize,
    /// Whether the value should have been computed locally.
    pub local: bool,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct AuditReport {
    pub checked: usize,
    pub local: usize,
    pub delivered: usize,
    pub missing: Vec<AuditIssue>,
    pub corrupt: Vec<AuditIssue>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.missing.is_empty() && self.corrupt.is_empty()
    }
}

/// Checks that every node holds every value its Reduce functions need,
/// byte-for-byte equal to a fresh [`mapper::payload`].
pub fn audit_delivery(
    design: &Design,
    mapout: &MapOutput,
    delivered: &Delivered,
    guard: OracleGuard,
) -> Result<AuditReport, OracleError> {
    let m = Membership::new(design, guard)?;
    let mut report = AuditReport::default();
    let n = design.num_files();
    for i in 1..=design.num_functions() {
        let assignees = mask_nodes(m.assignees[i]);
        for j in 1..=n {
            let key = IvKey::new(i, j);
            let expected = mapper::payload(i, j, mapout.t_bits(), mapout.seed()).expect("valid ids");
            for &k in &assignees {
                report.checked += 1;
                let local = m.holders[j] >> (k - 1) & 1 == 1;
                let got = if local {
                    report.local += 1;
                    mapout.get(k, key)
                } else {
                    report.delivered += 1;
                    delivered.get(k, key)
                };
                let issue = || AuditIssue {
                    node: k,
                    function: i,
                    file: j,
                    local,
                    provenance: provenance(&m, key),
                };
                match got {
                    None => report.missing.push(issue()),
                    Some(bytes) if bytes != expected.as_slice() => report.corrupt.push(issue()),
                    Some(_) => {}
                }
            }
        }
    }
    Ok(report)
}

fn provenance(m: &Membership, key: IvKey) -> Provenance {
    let h = m.holders[key.file];
    let f = m.assignees[key.function];
    let s_set = h ^ f;
    Provenance {
        round: (f & !h).count_ones() as usize,
        requesters: mask_nodes(f & !h),
        target_set: mask_nodes(s_set),
        s_prime: mask_nodes(h & s_set),
        y: mask_nodes(h & f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignParams;

    fn design(x: Vec<usize>, e1: usize, e2: usize) -> Design {
        Design::build(DesignParams::new(x, e1, e2).unwrap()).unwrap()
    }

    #[test]
    fn two_d_histogram_support() {
        let d = design(vec![4, 6], 1, 1);
        let h = requester_histogram(&d, OracleGuard::default()).unwrap();
        assert_eq!(h.len(), 3);
        assert!(h.iter().all(|&c| c > 0));
        assert_eq!(h.iter().sum::<usize>(), 24 * 24);
        assert_eq!(h[0], 24);
    }

    // histogram(g) = eta1 eta2 * #ordered T-set pairs with |T_a ∩ T_l| = s - g,
    // counted over explicit member lists
    #[test]
    fn histogram_matches_tset_pair_count() {
        for (x, e1, e2) in [(vec![2, 3, 2], 1, 2), (vec![3, 3], 2, 1), (vec![2, 2, 2, 3], 1, 1)] {
            let d = design(x, e1, e2);
            let s = d.s();
            let tsets: Vec<Vec<NodeId>> = (1..=d.lattice_size()).map(|t| d.t_members(t).unwrap()).collect();
            let mut expect = vec![0usize; s + 1];
            for a in &tsets {
                for b in &tsets {
                    let common = a.iter().filter(|k| b.contains(k)).count();
                    expect[s - common] += e1 * e2;
                }
            }
            assert_eq!(requester_histogram(&d, OracleGuard::default()).unwrap(), expect);
            assert!(requester_mismatches(&d, OracleGuard::default()).unwrap().is_empty());
        }
    }

    #[test]
    fn bruteforce_known_loads() {
        let cases = [
            (vec![4, 6], Rational::new(7, 12)),
            (vec![2, 2, 4], Rational::new(39, 80)),
            (vec![2, 2], Rational::new(5, 12)),
            (vec![2, 3], Rational::new(17, 36)),
        ];
        for (x, want) in cases {
            let d = design(x, 1, 1);
            let c = count_load_bruteforce(&d, Strategy::Default, OracleGuard::default()).unwrap();
            assert_eq!(c.load, want);
        }
        let c = count_load_bruteforce(&design(vec![2, 2, 4], 1, 1), Strategy::Default, OracleGuard::default()).unwrap();
        assert_eq!(c.transmissions, vec![40, 56, 144]);
        assert_eq!(c.units[2], Rational::new(144, 5));
    }

    #[test]
    fn guard_limits() {
        let d = design(vec![4, 6], 1, 1);
        let err = requester_histogram(&d, OracleGuard { max_iv_pairs: 100 }).unwrap_err();
        assert_eq!(err, OracleError::TooLarge { pairs: 576, limit: 100 });
    }
}
