//! Shared fixtures: the named instances and a generator of commuting instances.
#![allow(dead_code)]

use kms_core::model::{load, validate, GraphSpec, InstanceSpec};
use kms_core::Instance;
use rand::Rng;

pub fn instance(name: &str) -> Instance {
    let path = format!("{}/../../instances/{name}.json", env!("CARGO_MANIFEST_DIR"));
    load(&std::fs::read_to_string(&path).expect("instance file")).expect("valid instance")
}

pub fn graph(mats: Vec<Vec<Vec<i64>>>) -> Instance {
    let dim = mats[0].len();
    validate(&InstanceSpec::Graph(GraphSpec {
        n: mats.len(),
        vertices: (0..dim).map(|v| format!("v{}", v + 1)).collect(),
        matrices: mats,
        factorizations: None,
    }))
    .expect("commuting instance")
}

pub type Mat = Vec<Vec<i64>>;

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    (0..n).map(|r| (0..n).map(|c| (0..n).map(|k| a[r][k] * b[k][c]).sum()).collect()).collect()
}

fn identity(n: usize) -> Mat {
    (0..n).map(|r| (0..n).map(|c| i64::from(r == c)).collect()).collect()
}

fn kron(a: &Mat, b: &Mat) -> Mat {
    let (p, q) = (a.len(), b.len());
    let mut out = vec![vec![0; p * q]; p * q];
    for i in 0..p {
        for j in 0..p {
            for k in 0..q {
                for l in 0..q {
                    out[i * q + k][j * q + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let (p, q) = (a.len(), b.len());
    let mut out = vec![vec![0; p + q]; p + q];
    for i in 0..p {
        out[i][..p].copy_from_slice(&a[i]);
    }
    for i in 0..q {
        out[p + i][p..].copy_from_slice(&b[i]);
    }
    out
}

fn random_mat<R: Rng>(rng: &mut R, n: usize, max: i64) -> Mat {
    (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..=max)).collect()).collect()
}

/// `c_0 I + c_1 A + c_2 A²` with nonnegative coefficients.
fn poly<R: Rng>(rng: &mut R, a: &Mat) -> Mat {
    let n = a.len();
    let a2 = mat_mul(a, a);
    let c: [i64; 3] = [rng.gen_range(0..=2), rng.gen_range(0..=2), rng.gen_range(0..=1)];
    (0..n)
        .map(|r| (0..n).map(|k| c[0] * identity(n)[r][k] + c[1] * a[r][k] + c[2] * a2[r][k]).collect())
        .collect()
}

/// Commuting nonnegative integer matrices from a common basis: simultaneous diagonals,
/// polynomials in one matrix, Kronecker products and block sums of these.
pub fn commuting_family<R: Rng>(rng: &mut R, n_colors: usize, depth: u32) -> Vec<Mat> {
    let kind = if depth == 0 { rng.gen_range(0..3) } else { rng.gen_range(0..4) };
    match kind {
        0 => {
            let dim = rng.gen_range(1..=3);
            (0..n_colors)
                .map(|_| {
                    let d: Vec<i64> = (0..dim).map(|_| rng.gen_range(0..=3)).collect();
                    (0..dim).map(|r| (0..dim).map(|c| if r == c { d[r] } else { 0 }).collect()).collect()
                })
                .collect()
        }
        1 => {
            let dim = rng.gen_range(2..=3);
            let a = random_mat(rng, dim, 1);
            (0..n_colors).map(|_| poly(rng, &a)).collect()
        }
        2 => {
            // even colours act on the first tensor factor, odd colours on the second
            let (p, q) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
            let (a, c) = (random_mat(rng, p, 1), random_mat(rng, q, 1));
            (0..n_colors)
                .map(|i| {
                    if i % 2 == 0 {
                        kron(&poly(rng, &a), &identity(q))
                    } else {
                        kron(&identity(p), &poly(rng, &c))
                    }
                })
                .collect()
        }
        _ => {
            let a = commuting_family(rng, n_colors, depth - 1);
            let b = commuting_family(rng, n_colors, depth - 1);
            a.iter().zip(&b).map(|(x, y)| block_diag(x, y)).collect()
        }
    }
}

pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let n = rng.gen_range(1..=3);
    graph(commuting_family(rng, n, 1))
}

/// Fibonacci numbers with `fib(1) = fib(2) = 1`.
pub fn fib(k: usize) -> u64 {
    let (mut a, mut b) = (0u64, 1u64);
    for _ in 0..k {
        (a, b) = (b, a + b);
    }
    a
}

use kms_core::entropy::{block_sum_log_norms, strong_entropy, tracial_entropy};
use kms_core::equilibrium::{build_state, wold_decompose, ComponentSpec};
use kms_core::par::Exec;
use kms_core::simplex::{critical_candidates, full_simplex, Tolerances};
use kms_core::{Beta, ColorSet};

pub const TOL: f64 = 1e-9;
/// Largest partition sum for which the decomposition is checked at `TOL`.
pub const WELL_CONDITIONED: f64 = 1e4;

/// Inverse temperatures worth probing: every critical candidate plus points between and
/// beyond them.
pub fn probe_betas(inst: &Instance) -> Vec<Beta> {
    let mut out: Vec<Beta> = critical_candidates(inst).into_iter().filter(|b| b.value() > 0.0).collect();
    let hs = strong_entropy(inst, inst.full()).nats().unwrap_or(0.0).max(0.0);
    out.push(Beta::new(hs + 0.37));
    out.push(Beta::new(hs + 1e-5));
    if hs > 0.2 {
        out.push(Beta::new(0.61 * hs));
    }
    out
}

fn eigen_residual(inst: &Instance, i: usize, tau: &[f64], beta: Beta) -> f64 {
    let b = inst.b(i);
    (0..tau.len())
        .map(|v| {
            let bt: f64 = (0..tau.len()).map(|w| b.get(v, w) as f64 * tau[w]).sum();
            (bt - beta.exp() * tau[v]).abs()
        })
        .fold(0.0, f64::max)
}

/// The properties every instance must satisfy; `Err` names the first violation.
pub fn check_properties(inst: &Instance) -> Result<usize, String> {
    let n = inst.rank();
    let full = inst.full();
    let hs = strong_entropy(inst, full).nats().unwrap_or(f64::NEG_INFINITY);
    let mut checked = 0;

    // block sums over the full cone are submultiplicative
    let logs = block_sum_log_norms(inst, full, 12);
    for k in 1..logs.len() {
        for l in 1..logs.len() - k {
            if logs[k + l] > logs[k] + logs[l] + TOL {
                return Err(format!("block sums: a_{} > a_{} a_{}", k + l, k, l));
            }
        }
    }

    for beta in probe_betas(inst) {
        let fs = full_simplex(inst, beta, None, Tolerances::default(), Exec::Sequential)
            .map_err(|e| format!("beta {}: {e}", beta.value()))?;
        if !fs.disjoint {
            return Err(format!("beta {}: parts overlap", beta.value()));
        }
        for part in fs.nonempty() {
            if beta.value() > hs + 1e-6 && part.f != full {
                return Err(format!("beta {} above h^s has a part F = {}", beta.value(), part.f));
            }
            for tau in &part.extreme_points {
                checked += 1;
                // the type of a trace is read off the eigen-conditions it satisfies
                let eigen: ColorSet =
                    ColorSet::from_indices((0..n).filter(|&i| eigen_residual(inst, i, tau, beta) <= TOL));
                if eigen != part.f.complement(n) {
                    return Err(format!(
                        "beta {}: trace {tau:?} of part {} satisfies the eigen-conditions of {}",
                        beta.value(),
                        part.f,
                        eigen
                    ));
                }
                let h_f = tracial_entropy(inst, tau, part.f).value();
                let h = tracial_entropy(inst, tau, full).value();
                if h_f > h + TOL || h > beta.value() + TOL {
                    return Err(format!("beta {}: entropies {h_f} {h} out of order", beta.value()));
                }
                let spec = ComponentSpec { f: part.f, tau: tau.clone(), weight: 1.0 };
                let state = build_state(inst, beta, &[spec], None)
                    .map_err(|e| format!("extreme trace rejected: {e}"))?;
                // recovering τ from σ/c loses about log10(c) digits, so the 1e-9 check is
                // only meaningful away from the critical point
                if state.components[0].c > WELL_CONDITIONED {
                    continue;
                }
                let w = wold_decompose(inst, beta, &state.pi_trace(), None)
                    .map_err(|e| format!("beta {}: wold: {e}", beta.value()))?;
                let support: Vec<_> = w.parts.iter().filter(|p| p.mass > TOL).collect();
                let pure = support.len() == 1
                    && support[0].f == part.f
                    && (support[0].mass - 1.0).abs() <= TOL
                    && support[0]
                        .tau
                        .as_ref()
                        .is_some_and(|t| t.iter().zip(tau).all(|(a, b)| (a - b).abs() <= TOL));
                if !pure {
                    return Err(format!(
                        "beta {}: extreme trace {tau:?} of {} decomposes as {:?}",
                        beta.value(),
                        part.f,
                        w.parts
                    ));
                }
            }
        }
    }
    Ok(checked)
}
