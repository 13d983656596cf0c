use proptest::prelude::*;

use hetcdc::analysis;
use hetcdc::design::{Design, DesignParams};
use hetcdc::mapper;
use hetcdc::oracle::{self, OracleGuard};
use hetcdc::shuffle::{self, ShuffleOptions, Strategy as Schedule};

fn small_params() -> impl Strategy<Value = DesignParams> {
    (proptest::collection::vec(2usize..5, 2..4), 1usize..3, 1usize..3)
        .prop_map(|(x, e1, e2)| DesignParams::new(x, e1, e2).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulated_load_matches_closed_form(p in small_params(), seed in any::<u64>(), coeff_seed in 0u64..1000) {
        let design = Design::build(p.clone()).unwrap();
        let opts = ShuffleOptions { coeff_seed, ..ShuffleOptions::default() };
        let t = mapper::auto_t_bits(p.s(), opts.strategy);
        let mapout = mapper::run_map(&design, t, seed, opts.strategy).unwrap();
        let (delivered, ledger) = shuffle::run_shuffle(&design, &mapout, &opts).unwrap();
        prop_assert_eq!(ledger.normalized_load(), analysis::communication_load_formula(&p));
        prop_assert_eq!(ledger.redundant_receptions(), 0);
        let audit = oracle::audit_delivery(&design, &mapout, &delivered, OracleGuard::default()).unwrap();
        prop_assert!(audit.passed());
    }

    #[test]
    fn every_value_has_s_computers(p in small_params()) {
        let design = Design::build(p.clone()).unwrap();
        let t = mapper::auto_t_bits(p.s(), Schedule::Default);
        let mapout = mapper::run_map(&design, t, 0, Schedule::Default).unwrap();
        prop_assert_eq!(mapout.total_computed(), p.s() * p.num_files() * p.num_functions());
        for j in 1..=p.num_files() {
            let holders = (1..=p.num_nodes()).filter(|&k| design.stores(k, j).unwrap()).count();
            prop_assert_eq!(holders, p.s());
        }
    }

    #[test]
    fn requester_count_equals_round(p in small_params(), i in 1usize..1000, j in 1usize..1000) {
        let design = Design::build(p.clone()).unwrap();
        let i = 1 + i % p.num_functions();
        let j = 1 + j % p.num_files();
        let req = design.requesters(i, j).unwrap();
        // shared coordinates of the two cells decide the requester count
        let a = design.tuple_of(design.cell_of_function(i).unwrap()).unwrap();
        let b = design.tuple_of(design.cell_of_file(j).unwrap()).unwrap();
        let differ = a.iter().zip(&b).filter(|(x, y)| x != y).count();
        prop_assert_eq!(req.len(), differ);
    }
}
