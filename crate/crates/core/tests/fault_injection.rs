//! Removing transmissions from a ledger and replaying it must leave exactly
//! the values those transmissions carried undelivered.

use hetcdc::config::RunConfig;
use hetcdc::design::DesignParams;
use hetcdc::oracle::{self, OracleGuard};
use hetcdc::pipeline;
use hetcdc::shuffle::{self, Coding, Method, Strategy};
use hetcdc::IvKey;

fn sim(x: Vec<usize>, eta1: usize, eta2: usize) -> pipeline::Simulation {
    let cfg = RunConfig::new(DesignParams::new(x, eta1, eta2).unwrap(), Strategy::Default);
    pipeline::run_simulation(&cfg, OracleGuard::default()).unwrap()
}

#[test]
fn dropping_a_pair_loses_both_halves() {
    let mut s = sim(vec![4, 6], 1, 1);
    let rec = s.ledger.take_record(0);
    let Coding::Xor { left, right } = &rec.coding else {
        panic!("round 1 is XOR coded")
    };
    let rep = shuffle::replay(&s.design, &s.mapout, s.ledger.records()).unwrap();
    let audit = oracle::audit_delivery(&s.design, &s.mapout, &rep.delivered, OracleGuard::default()).unwrap();
    assert_eq!(audit.missing.len(), 2);
    assert!(audit.corrupt.is_empty());
    let mut lost: Vec<IvKey> = audit.missing.iter().map(|m| IvKey::new(m.function, m.file)).collect();
    lost.sort();
    let mut carried: Vec<IvKey> = left.iter().chain(right).copied().collect();
    carried.sort();
    assert_eq!(lost, carried);
    for m in &audit.missing {
        assert_eq!(m.provenance.round, 1);
        assert!(rec.receivers.contains(&m.node));
        assert!(m.provenance.y.contains(&rec.sender));
    }
}

#[test]
fn higher_round_pairs_lose_one_block_per_receiver() {
    // round 2 of three groups, eta1 = 2: 4 receivers, 2 values each
    let mut s = sim(vec![2, 3, 2], 2, 1);
    let idx = s.ledger.records().iter().position(|r| r.round == 2).unwrap();
    let rec = s.ledger.take_record(idx);
    assert_eq!(rec.method, Method::A);
    let rep = shuffle::replay(&s.design, &s.mapout, s.ledger.records()).unwrap();
    let audit = oracle::audit_delivery(&s.design, &s.mapout, &rep.delivered, OracleGuard::default()).unwrap();
    assert_eq!(audit.missing.len(), 2 * 2 * 2);
    let mut nodes: Vec<_> = audit.missing.iter().map(|m| m.node).collect();
    nodes.sort_unstable();
    nodes.dedup();
    assert_eq!(nodes, rec.receivers);
}

#[test]
fn dropping_a_combination_starves_the_plan() {
    let mut s = sim(vec![2, 2, 2], 1, 1);
    let idx = s.ledger.records().iter().position(|r| r.method == Method::B).unwrap();
    let rec = s.ledger.take_record(idx);
    let rep = shuffle::replay(&s.design, &s.mapout, s.ledger.records()).unwrap();
    assert_eq!(rep.undecodable.len(), rec.receivers.len());
    let audit = oracle::audit_delivery(&s.design, &s.mapout, &rep.delivered, OracleGuard::default()).unwrap();
    assert!(!audit.passed());
    assert!(audit
        .missing
        .iter()
        .all(|m| m.provenance.round == 3 && rec.receivers.contains(&m.node)));
}

#[test]
fn full_ledger_replays_cleanly() {
    let s = sim(vec![3, 2, 2], 1, 2);
    let rep = shuffle::replay(&s.design, &s.mapout, s.ledger.records()).unwrap();
    assert!(rep.undecodable.is_empty());
    let audit = oracle::audit_delivery(&s.design, &s.mapout, &rep.delivered, OracleGuard::default()).unwrap();
    assert!(audit.passed());
}

#[test]
fn tampered_payload_is_caught_as_corrupt() {
    let s = sim(vec![2, 2], 1, 1);
    let mut records = s.ledger.records().to_vec();
    records[0].payload[0] ^= 0x01;
    let rep = shuffle::replay(&s.design, &s.mapout, &records).unwrap();
    let audit = oracle::audit_delivery(&s.design, &s.mapout, &rep.delivered, OracleGuard::default()).unwrap();
    assert!(audit.missing.is_empty());
    assert_eq!(audit.corrupt.len(), 2);
}
