//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::time::Instant;

use kms_core::entropy::{fiber_entropy, mfl_entropy, strong_entropy, system_entropy};
use kms_core::equilibrium::{
    build_state, build_state_unchecked, evaluate_state, ground_states, partition_value,
    wold_decompose, ComponentSpec, MonomialQuery,
};
use kms_core::fock::{build_fock, check_kms, StateOracle};
use kms_core::model::{Gen, IdealLattice};
use kms_core::par::Exec;
use kms_core::simplex::{avt_traces, f_trace_set, full_simplex, phase_diagram, Tolerances};
use kms_core::{Beta, ColorSet, Instance, MultiIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn vec_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| close(*x, *y, tol))
}

fn a1() -> Outcome {
    let inst = common::instance("e1");
    let ln3 = 3f64.ln();
    let hs = strong_entropy(&inst, inst.full()).value();
    let h1 = fiber_entropy(&inst, ColorSet::singleton(0)).value();
    ensure(close(hs, ln3, 1e-12), || format!("h^s = {hs}"))?;
    ensure(close(h1, 2f64.ln(), 1e-12), || format!("h^(x,{{1}}) = {h1}"))?;
    let hx = system_entropy(&inst).value;
    ensure(close(hx, ln3, 1e-12), || format!("h_X = {hx}"))?;
    let pd = phase_diagram(&inst, 0.5, 2.0, 61, None, Tolerances::default(), Exec::Parallel)
        .map_err(|e| e.to_string())?;
    let mut at_crit = 0;
    for row in &pd.rows {
        let b = row.beta;
        if row.exact_candidate && close(b, ln3, 1e-15) {
            at_crit += 1;
            ensure(row.nonempty.len() == 1, || format!("{} parts at log 3", row.nonempty.len()))?;
            let p = &row.nonempty[0];
            ensure(p.f == ColorSet::singleton(0) && p.extreme_points == vec![vec![1.0]], || {
                format!("part at log 3: {p:?}")
            })?;
        } else if b < ln3 {
            ensure(row.nonempty.is_empty(), || format!("nonempty below log 3 at {b}"))?;
        } else {
            ensure(
                row.nonempty.len() == 1
                    && row.nonempty[0].f == inst.full()
                    && row.nonempty[0].extreme_points.len() == 1,
                || format!("beta {b}: {:?}", row.nonempty),
            )?;
        }
    }
    ensure(at_crit == 1, || format!("log 3 appears {at_crit} times"))?;
    Ok(format!("h^s = h_X = log 3, h^(x,{{1}}) = log 2; {} scan rows", pd.rows.len()))
}

fn a2() -> Outcome {
    let inst = common::instance("pf_pair");
    let avt = avt_traces(&inst, Beta::log(2.0), Tolerances::default()).map_err(|e| e.to_string())?;
    ensure(avt.extreme_points.len() == 1, || format!("{} extreme points", avt.extreme_points.len()))?;
    let w = &avt.extreme_points[0];
    ensure(vec_close(w, &[0.5, 0.5], 1e-9), || format!("Avt point {w:?}"))?;
    for (i, b) in inst.matrices().iter().enumerate() {
        let r = b.apply(w);
        ensure(vec_close(&r, &[w[0] * 2.0, w[1] * 2.0], 1e-9), || format!("colour {} residual", i + 1))?;
    }
    for beta in [Beta::log(2.0 + 1e-6), Beta::new(0.75), Beta::new(1.3), Beta::log(5.0)] {
        let fs = full_simplex(&inst, beta, None, Tolerances::default(), Exec::Sequential)
            .map_err(|e| e.to_string())?;
        let ne = fs.nonempty();
        ensure(ne.len() == 1 && ne[0].f == inst.full(), || format!("beta {}: {} parts", beta.value(), ne.len()))?;
        let mut pts = ne[0].extreme_points.clone();
        pts.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ensure(pts == vec![vec![1.0, 0.0], vec![0.0, 1.0]], || format!("beta {}: {pts:?}", beta.value()))?;
    }
    Ok("Avt at log 2 is {(1/2, 1/2)}; fty-only full 1-simplex above".into())
}

fn a3() -> Outcome {
    let inst = common::instance("e4");
    let beta = Beta::log(3.0);
    let fs = full_simplex(&inst, beta, None, Tolerances::default(), Exec::Parallel).map_err(|e| e.to_string())?;
    let ne = fs.nonempty();
    ensure(ne.len() == 2, || format!("{} nonempty parts", ne.len()))?;
    let e = |f: ColorSet, pt: Vec<f64>| {
        ne.iter().any(|p| p.f == f && p.extreme_points == vec![pt.clone()])
    };
    ensure(e(ColorSet::singleton(0), vec![1.0, 0.0]) && e(ColorSet::singleton(1), vec![0.0, 1.0]), || {
        format!("{:?}", ne.iter().map(|p| (p.f, &p.extreme_points)).collect::<Vec<_>>())
    })?;
    for (tau, f) in [([1.0, 0.0], 0), ([0.0, 1.0], 1)] {
        let pv = partition_value(&inst, &tau, beta, ColorSet::singleton(f)).map_err(|e| e.to_string())?;
        let v = pv.value.unwrap_or(f64::INFINITY);
        ensure(close(v, 3.0, 1e-9), || format!("c = {v} for F = {{{}}}", f + 1))?;
    }
    let w = wold_decompose(&inst, beta, &[0.5, 0.5], None).map_err(|e| e.to_string())?;
    for (f, pt) in [(ColorSet::singleton(0), [1.0, 0.0]), (ColorSet::singleton(1), [0.0, 1.0])] {
        let p = w.part(f);
        ensure(close(p.mass, 0.5, 1e-9), || format!("mass {} for {f}", p.mass))?;
        ensure(p.tau.as_deref().is_some_and(|t| vec_close(t, &pt, 1e-9)), || format!("trace {:?} for {f}", p.tau))?;
    }
    let other: f64 = w.parts.iter().filter(|p| p.f.len() != 1).map(|p| p.mass.abs()).sum();
    ensure(other <= 1e-9, || format!("mass {other} outside the two parts"))?;
    Ok("two parts {1}:δ₁, {2}:δ₂; c = 3; Wold (0.5, 0.5)".into())
}

fn a4() -> Outcome {
    let mut sizes = Vec::new();
    for (name, k) in [("e1", 3), ("golden_mfl", 4)] {
        let inst = common::instance(name);
        let f = build_fock(&inst, k).map_err(|e| e.to_string())?;
        let r = f.check_identities(Exec::Parallel).map_err(|e| e.to_string())?;
        for c in &r.checks {
            ensure(c.pass && c.max_residual == 0.0, || {
                format!("{name}: {} residual {} on {} vectors", c.name, c.max_residual, c.interior)
            })?;
        }
        sizes.push(format!("{name} K={k}: {} checks on {} vectors", r.checks.len(), r.basis_size));
    }
    Ok(sizes.join("; "))
}

/// Paths of the single-vertex instance with degree at most `(a, b)`, colour 1 first.
fn e1_paths(a: usize, b: usize) -> Vec<Vec<Gen>> {
    fn words(color: usize, d: usize, len: usize) -> Vec<Vec<Gen>> {
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|w| (0..d).map(move |j| [w.clone(), vec![Gen::new(color, j)]].concat()))
                .collect();
        }
        out
    }
    let mut out = Vec::new();
    for i in 0..=a {
        for j in 0..=b {
            for x in words(0, 2, i) {
                for y in words(1, 3, j) {
                    out.push([x.clone(), y].concat());
                }
            }
        }
    }
    out
}

fn a5() -> Outcome {
    let inst = common::instance("e1");
    let beta = Beta::log(3.0);
    let spec = ComponentSpec { f: ColorSet::singleton(0), tau: vec![1.0], weight: 1.0 };
    let h = build_state(&inst, beta, &[spec.clone()], None).map_err(|e| e.to_string())?;
    let paths = e1_paths(2, 2);
    let oracle = StateOracle::new(&inst, &h, 12).map_err(|e| e.to_string())?;
    let deg = |p: &[Gen]| (p.iter().filter(|g| g.color == 0).count(), p.len());
    let mut worst: f64 = 0.0;
    let mut n = 0;
    let mut off_degree = 0;
    for mu in &paths {
        for nu in &paths {
            off_degree += usize::from(deg(mu) != deg(nu));
            let q = MonomialQuery::pair(mu.clone(), nu.clone());
            let exact = evaluate_state(&inst, &h, &q).map_err(|e| e.to_string())?;
            let o = oracle.eval(&q).map_err(|e| e.to_string())?;
            let tb = o.tail_bound.ok_or("oracle without certificate")?;
            ensure((o.value - exact).abs() <= tb + 1e-15, || {
                format!("{mu:?},{nu:?}: closed {exact}, oracle {} ± {tb}", o.value)
            })?;
            worst = worst.max((o.value - exact).abs());
            n += 1;
        }
    }
    let kms = check_kms(&inst, &h, &MultiIndex(vec![1, 1])).map_err(|e| e.to_string())?;
    ensure(kms.max_residual <= 1e-10 && kms.gauge_residual <= 1e-10, || format!("{kms:?}"))?;
    // break the eigen-condition by 5%
    let off = Beta::log(3.0 / 1.05);
    ensure(build_state(&inst, off, &[spec.clone()], None).is_err(), || "perturbed trace admitted".into())?;
    let bad = build_state_unchecked(&inst, off, &[spec]).map_err(|e| e.to_string())?;
    let neg = check_kms(&inst, &bad, &MultiIndex(vec![1, 1])).map_err(|e| e.to_string())?;
    ensure(neg.max_residual > 1e-3, || format!("negative control residual {}", neg.max_residual))?;
    Ok(format!(
        "{n} monomials ({off_degree} off-degree), max |closed - oracle| = {worst:.2e}; KMS residual {:.1e}; perturbed {:.3}",
        kms.max_residual, neg.max_residual
    ))
}

fn a6() -> Outcome {
    let inst = common::instance("golden_mfl");
    let lang = inst.language().ok_or("not a language instance")?;
    let m = mfl_entropy(lang, ColorSet::full(1), 20, 1e-2).map_err(|e| e.to_string())?;
    for k in 1..=20 {
        ensure(m.counts[k] == common::fib(k + 2), || format!("|B_{k}| = {} != {}", m.counts[k], common::fib(k + 2)))?;
    }
    // largest root of λ² = λ + 1
    let target = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let slope = m.table.last().map(|r| r.slope).ok_or("empty table")?;
    ensure(close(slope, target, 1e-2), || format!("k = 20 slope {slope}"))?;
    Ok(format!("Fibonacci counts to k = 20; slope {slope:.5} vs {target:.6}"))
}

fn a7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut traces = 0;
    let instances = 120;
    for k in 0..instances {
        let inst: Instance = common::random_instance(&mut rng);
        traces += common::check_properties(&inst).map_err(|e| format!("instance {k} {:?}: {e}", inst.matrices()))?;
    }
    Ok(format!("{instances} instances, {traces} extreme traces"))
}

fn a8() -> Outcome {
    let inst = common::instance("a8");
    let n = inst.dim();
    // vertices receiving an edge of every colour
    let receivers: Vec<usize> =
        (0..n).filter(|&v| (0..inst.rank()).all(|i| (0..n).any(|w| inst.b(i).get(v, w) > 0))).collect();
    let cnp = inst.compute_cnp_ideals();
    let i_full = cnp.get(inst.full()).to_vec();
    ensure(i_full == receivers && receivers == vec![1], || format!("I_(1,2) = {i_full:?}, oracle {receivers:?}"))?;
    let zero = IdealLattice::zero(inst.rank());
    let beta = Beta::log(2.0);
    let tol = Tolerances::default();
    let plain = f_trace_set(&inst, beta, inst.full(), Some(&zero), tol).map_err(|e| e.to_string())?;
    let cut = f_trace_set(&inst, beta, inst.full(), Some(&cnp), tol).map_err(|e| e.to_string())?;
    ensure(plain.extreme_points.len() == 2 && cut.extreme_points == vec![vec![1.0, 0.0]], || {
        format!("zero lattice {:?}, cnp {:?}", plain.extreme_points, cut.extreme_points)
    })?;
    let g = ground_states(&inst, Some(&cnp));
    ensure(g.filtered == i_full && g.extreme_points == vec![vec![1.0, 0.0]], || format!("{g:?}"))?;
    let g0 = ground_states(&inst, None);
    ensure(g0.extreme_points.len() == 2, || "unfiltered ground states".into())?;
    Ok("cnp lattice cuts Tr^(1,2) from dim 1 to dim 0; ground states filter {v}".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] =
        [("A1", a1), ("A2", a2), ("A3", a3), ("A4", a4), ("A5", a5), ("A6", a6), ("A7", a7), ("A8", a8)];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let r = run();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("{name} PASS ({secs:.2}s) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("{name} FAIL ({secs:.2}s) {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 8 acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 8 acceptance criteria pass");
}
