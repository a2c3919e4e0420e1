//! Trace-level outputs must not depend on which 2-path bijection is chosen.

mod common;

use kms_core::entropy::entropy_report;
use kms_core::equilibrium::{build_state, partition_value, wold_decompose, ComponentSpec};
use kms_core::fock::{build_fock, check_kms};
use kms_core::model::{load, FactorizationSource};
use kms_core::par::Exec;
use kms_core::simplex::{full_simplex, phase_diagram, Tolerances};
use kms_core::{Beta, ColorSet, Instance, MultiIndex};

/// E1 with `(a, b) ↦ (b + 1 mod 3, a)` in place of the flip.
fn twisted() -> Instance {
    let pairs: Vec<_> = (1..=2usize)
        .flat_map(|a| (1..=3usize).map(move |b| serde_json::json!([[a, b], [b % 3 + 1, a]])))
        .collect();
    let spec = serde_json::json!({
        "kind": "graph", "N": 2, "vertices": ["v"], "matrices": [[[2]], [[3]]],
        "factorizations": [{ "colors": [1, 2], "pairs": pairs }],
    });
    load(&spec.to_string()).unwrap()
}

#[test]
fn supplied_rule_is_used() {
    let t = twisted();
    let g = t.graph().unwrap();
    assert_eq!(g.pairs[&(0, 1)].1, FactorizationSource::Supplied);
    assert_eq!(common::instance("e1").graph().unwrap().pairs[&(0, 1)].1, FactorizationSource::Flip);
}

#[test]
fn trace_level_outputs_agree() {
    let (a, b) = (common::instance("e1"), twisted());
    let tol = Tolerances::default();
    let pa = phase_diagram(&a, 0.3, 2.5, 23, None, tol, Exec::Sequential).unwrap();
    let pb = phase_diagram(&b, 0.3, 2.5, 23, None, tol, Exec::Sequential).unwrap();
    assert_eq!(pa.rows, pb.rows);
    for beta in [Beta::log(3.0), Beta::log(4.0), Beta::new(2.2)] {
        let fa = full_simplex(&a, beta, None, tol, Exec::Sequential).unwrap();
        let fb = full_simplex(&b, beta, None, tol, Exec::Sequential).unwrap();
        assert_eq!(serde_json::to_value(&fa).unwrap(), serde_json::to_value(&fb).unwrap());
        for f in ColorSet::all(2) {
            assert_eq!(
                partition_value(&a, &[1.0], beta, f).unwrap(),
                partition_value(&b, &[1.0], beta, f).unwrap()
            );
        }
        assert_eq!(
            wold_decompose(&a, beta, &[1.0], None).ok(),
            wold_decompose(&b, beta, &[1.0], None).ok()
        );
    }
    let traces = [(vec![1.0], ColorSet::full(2)), (vec![1.0], ColorSet::singleton(1))];
    let ea = entropy_report(&a, &traces, 12, Exec::Sequential);
    let eb = entropy_report(&b, &traces, 12, Exec::Sequential);
    assert_eq!(format!("{ea:?}"), format!("{eb:?}"));
}

#[test]
fn both_rules_satisfy_the_identities_and_kms() {
    for inst in [common::instance("e1"), twisted()] {
        let r = build_fock(&inst, 2).unwrap().check_identities(Exec::Sequential).unwrap();
        assert!(r.all_pass, "{r:?}");
        let spec = ComponentSpec { f: ColorSet::singleton(0), tau: vec![1.0], weight: 1.0 };
        let h = build_state(&inst, Beta::log(3.0), &[spec], None).unwrap();
        let k = check_kms(&inst, &h, &MultiIndex(vec![1, 1])).unwrap();
        assert!(k.pass, "{k:?}");
    }
}
