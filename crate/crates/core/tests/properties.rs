mod common;

use kms_core::entropy::{fiber_entropy, strong_entropy, system_entropy};
use kms_core::par::Exec;
use kms_core::simplex::{phase_diagram, Tolerances};
use kms_core::ColorSet;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_instance() -> impl Strategy<Value = kms_core::Instance> {
    any::<u64>().prop_map(|seed| common::random_instance(&mut ChaCha8Rng::seed_from_u64(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn equilibrium_structure_invariants(inst in arb_instance()) {
        let r = common::check_properties(&inst);
        prop_assert!(r.is_ok(), "{:?} on {:?}", r, inst.matrices());
    }

    #[test]
    fn fibre_entropy_is_monotone_in_f(inst in arb_instance()) {
        let n = inst.rank();
        for f in ColorSet::all(n).filter(|f| !f.is_empty()) {
            for g in ColorSet::all(n).filter(|g| f.is_subset(*g)) {
                prop_assert!(fiber_entropy(&inst, f).value() <= fiber_entropy(&inst, g).value());
            }
        }
        let hx = system_entropy(&inst).value;
        let hs = strong_entropy(&inst, inst.full()).value();
        prop_assert!(hx <= hs.max(0.0) + 1e-12);
    }

    #[test]
    fn scans_do_not_depend_on_the_policy(inst in arb_instance()) {
        let tol = Tolerances::default();
        let a = phase_diagram(&inst, 0.1, 2.5, 9, None, tol, Exec::Sequential).unwrap();
        let b = phase_diagram(&inst, 0.1, 2.5, 9, None, tol, Exec::Parallel).unwrap();
        prop_assert_eq!(a, b);
    }
}
