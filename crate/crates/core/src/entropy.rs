//! Entropies of the transfer dynamics and the system entropy `h_X`.
//!
//! For a commutative coefficient algebra the strong and fibre entropies coincide and
//! `h^{x,F} = max_{i∈F} log ρ(B_i)`. Tracial entropies use the spectral radius on the
//! part of the algebra reachable from the support of the trace.

use serde::{Serialize, Serializer};

use crate::colors::ColorSet;
use crate::error::Result;
use crate::linalg::{forward_closure, spectral_radius, spectral_radius_on, support};
use crate::model::{Instance, Language};
use crate::par::Exec;

/// Natural-log growth rate; `-∞` marks a direction with eventually vanishing sums.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Entropy(f64);

impl Entropy {
    pub const ZERO: Entropy = Entropy(0.0);

    pub fn from_rate(rho: f64) -> Self {
        if rho <= 0.0 {
            Entropy(f64::NEG_INFINITY)
        } else {
            Entropy(rho.ln())
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn nats(self) -> Option<f64> {
        self.0.is_finite().then_some(self.0)
    }

    pub fn is_vanishing(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn max(self, other: Entropy) -> Entropy {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }
}

impl Serialize for Entropy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.nats().serialize(s)
    }
}

/// `h^{x,i} = log ρ(B_i)`.
pub fn color_entropy(inst: &Instance, i: usize) -> Entropy {
    Entropy::from_rate(spectral_radius(inst.b(i)))
}

/// `h^{x,F} = max_{i∈F} h^{x,i}`, and `0` for `F = ∅`.
pub fn fiber_entropy(inst: &Instance, f: ColorSet) -> Entropy {
    if f.is_empty() {
        return Entropy::ZERO;
    }
    f.iter()
        .map(|i| color_entropy(inst, i))
        .fold(Entropy(f64::NEG_INFINITY), Entropy::max)
}

/// `h^{s,F}`; equal to the fibre entropy because the coefficient algebra is commutative.
pub fn strong_entropy(inst: &Instance, f: ColorSet) -> Entropy {
    fiber_entropy(inst, f)
}

/// Forward closure of `supp τ` under the colours of `F`.
pub fn reachable_support(inst: &Instance, tau: &[f64], f: ColorSet) -> Vec<usize> {
    let mats: Vec<_> = f.iter().map(|i| inst.b(i)).collect();
    forward_closure(&mats, &support(tau, 0.0), inst.dim())
}

/// `max_{i∈F} ρ(B_i)` on the closure of `supp τ` under `F`.
pub fn restricted_rate(inst: &Instance, tau: &[f64], f: ColorSet) -> f64 {
    let closure = reachable_support(inst, tau, f);
    f.iter().map(|i| spectral_radius_on(inst.b(i), &closure)).fold(0.0, f64::max)
}

/// `h^{τ,F}`: growth of `k ↦ Σ_{|n|=k, n∈F} τ(Φ_n(1))`.
pub fn tracial_entropy(inst: &Instance, tau: &[f64], f: ColorSet) -> Entropy {
    if f.is_empty() {
        return Entropy::ZERO;
    }
    Entropy::from_rate(restricted_rate(inst, tau, f))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemEntropy {
    pub value: f64,
    /// A trace attaining the infimum of the tracial entropies, present when `h_X > 0`.
    pub attained_by: Option<Vec<f64>>,
}

/// `h_X = max{0, inf_τ h^τ}`. The tracial entropy only depends on the support and is
/// the maximum over supported vertices, so the infimum is attained at a point mass.
pub fn system_entropy(inst: &Instance) -> SystemEntropy {
    let full = inst.full();
    let mut best = (f64::INFINITY, 0usize);
    for v in 0..inst.dim() {
        let h = tracial_entropy(inst, &delta(inst.dim(), v), full).value();
        if h < best.0 {
            best = (h, v);
        }
    }
    if best.0 > 0.0 {
        SystemEntropy { value: best.0, attained_by: Some(delta(inst.dim(), best.1)) }
    } else {
        SystemEntropy { value: 0.0, attained_by: None }
    }
}

pub fn delta(n: usize, v: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[v] = 1.0;
    x
}

/// Block sums `S_k = Σ_{|n|=k, n∈F} M_n(1)` for `k = 0..=k_max`, as functions on atoms.
///
/// Returned as `(log_scale_k, S_k / e^{log_scale_k})` so long scans cannot overflow.
pub fn block_sums(inst: &Instance, f: ColorSet, k_max: usize) -> Vec<(f64, Vec<f64>)> {
    let n = inst.dim();
    let colors: Vec<usize> = f.iter().collect();
    // v[c]: sum over n supported in the first c+1 colours, at the current level
    let mut prev: Vec<Vec<f64>> = vec![vec![1.0; n]; colors.len().max(1)];
    let mut out = vec![(0.0, vec![1.0; n])];
    if colors.is_empty() {
        for _ in 1..=k_max {
            out.push((f64::NEG_INFINITY, vec![0.0; n]));
        }
        return out;
    }
    let mut scale = 0.0;
    for _ in 1..=k_max {
        let mut cur: Vec<Vec<f64>> = Vec::with_capacity(colors.len());
        for (c, &i) in colors.iter().enumerate() {
            // M_i = B_iᵀ on functions
            let mut x = inst.b(i).apply_transpose(&prev[c]);
            if c > 0 {
                for (a, b) in x.iter_mut().zip(&cur[c - 1]) {
                    *a += b;
                }
            }
            cur.push(x);
        }
        let m = cur.last().unwrap().iter().cloned().fold(0.0, f64::max);
        if m > 0.0 {
            for x in cur.iter_mut() {
                x.iter_mut().for_each(|y| *y /= m);
            }
            scale += m.ln();
            out.push((scale, cur.last().unwrap().clone()));
        } else {
            out.push((f64::NEG_INFINITY, cur.last().unwrap().clone()));
        }
        prev = cur;
    }
    out
}

/// `log ‖S_k‖_∞` for every `k`; `-∞` once the sums vanish.
pub fn block_sum_log_norms(inst: &Instance, f: ColorSet, k_max: usize) -> Vec<f64> {
    block_sums(inst, f, k_max)
        .into_iter()
        .map(|(s, v)| {
            let m = v.iter().cloned().fold(0.0, f64::max);
            if m > 0.0 && s.is_finite() {
                s + m.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeRow {
    pub k: usize,
    /// `(1/k) log a_k`.
    pub slope: f64,
    /// `(log a_k − log a_{⌈k/2⌉}) / (k − ⌈k/2⌉)`, which removes the polynomial prefactor
    /// to first order.
    pub window_slope: f64,
}

/// Finite-`k` slope estimates of `log a_k` for a positive sequence.
pub fn slope_table(log_a: &[f64]) -> Vec<SlopeRow> {
    (1..log_a.len())
        .map(|k| {
            let h = k.div_ceil(2);
            let window = if k > h {
                (log_a[k] - log_a[h]) / (k - h) as f64
            } else {
                log_a[k]
            };
            SlopeRow { k, slope: log_a[k] / k as f64, window_slope: window }
        })
        .collect()
}

/// Finite-`k` cross-check of [`fiber_entropy`] from the block sums.
pub fn fiber_entropy_slope(inst: &Instance, f: ColorSet, k: usize) -> f64 {
    let logs = block_sum_log_norms(inst, f, k);
    slope_table(&logs).last().map(|r| r.window_slope).unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub per_color: Vec<Entropy>,
    /// `h^{x,F}` for every nonempty `F`, keyed `"{1,2}"`.
    pub per_subset: Vec<(String, Entropy)>,
    pub strong: Entropy,
    pub system: SystemEntropy,
    pub max_log_d: f64,
    pub tracial: Vec<TracialEntry>,
    pub method: String,
    /// Finite-`k` slopes of the full block sums.
    pub slope_check: Vec<SlopeRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracialEntry {
    pub tau: Vec<f64>,
    pub f: String,
    pub value: Entropy,
}

pub fn entropy_report(
    inst: &Instance,
    traces: &[(Vec<f64>, ColorSet)],
    slope_k: usize,
    exec: Exec,
) -> EntropyReport {
    let n = inst.rank();
    let colors: Vec<usize> = (0..n).collect();
    let per_color = exec.map(&colors, |&i| color_entropy(inst, i));
    let subsets: Vec<ColorSet> = ColorSet::all(n).filter(|f| !f.is_empty()).collect();
    let per_subset = subsets
        .iter()
        .map(|f| {
            let h = f.iter().map(|i| per_color[i]).fold(Entropy(f64::NEG_INFINITY), Entropy::max);
            (f.to_string(), h)
        })
        .collect();
    let strong = fiber_entropy(inst, inst.full());
    let tracial = exec.map(traces, |(tau, f)| TracialEntry {
        tau: tau.clone(),
        f: f.to_string(),
        value: tracial_entropy(inst, tau, *f),
    });
    // a dynamics fibre is A itself, spanned by the single unit 1
    let max_log_d = match inst.kind() {
        crate::model::InstanceKind::Dynamics => 0.0,
        _ => inst.unit_sizes().iter().map(|&d| (d as f64).ln()).fold(f64::NEG_INFINITY, f64::max),
    };
    let slope_check = if slope_k > 0 {
        slope_table(&block_sum_log_norms(inst, inst.full(), slope_k))
    } else {
        Vec::new()
    };
    EntropyReport {
        per_color,
        per_subset,
        strong,
        system: system_entropy(inst),
        max_log_d,
        tracial,
        method: "spectral".into(),
        slope_check,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MflEntropy {
    pub k_max: usize,
    pub estimate: f64,
    pub counts: Vec<u64>,
    pub table: Vec<SlopeRow>,
    /// Last two slopes agree within `tol`.
    pub converged: bool,
    pub tol: f64,
}

/// `(1/k) log |B_k^F(Λ*)|` up to `k_max` by exact enumeration.
pub fn mfl_entropy(lang: &Language, f: ColorSet, k_max: usize, tol: f64) -> Result<MflEntropy> {
    mfl_entropy_budget(lang, f, k_max, tol, crate::model::mfl::NODE_BUDGET)
}

pub fn mfl_entropy_budget(
    lang: &Language,
    f: ColorSet,
    k_max: usize,
    tol: f64,
    budget: u64,
) -> Result<MflEntropy> {
    let counts = lang.counts_by_length(k_max, f, budget)?;
    let logs: Vec<f64> =
        counts.iter().map(|&c| if c > 0 { (c as f64).ln() } else { f64::NEG_INFINITY }).collect();
    let table = slope_table(&logs);
    let estimate = table.last().map(|r| r.slope).unwrap_or(0.0);
    let converged = match table.len() {
        0 | 1 => false,
        l => (table[l - 1].slope - table[l - 2].slope).abs() <= tol,
    };
    Ok(MflEntropy { k_max, estimate, counts, table, converged, tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, GraphSpec, InstanceSpec, MflSpec, SymbolCounts};

    fn graph(mats: Vec<Vec<Vec<i64>>>) -> Instance {
        let dim = mats[0].len();
        validate(&InstanceSpec::Graph(GraphSpec {
            n: mats.len(),
            vertices: (0..dim).map(|v| format!("v{}", v + 1)).collect(),
            matrices: mats,
            factorizations: None,
        }))
        .unwrap()
    }

    #[test]
    fn scalar_instance() {
        let e1 = graph(vec![vec![vec![2]], vec![vec![3]]]);
        assert!((fiber_entropy(&e1, ColorSet::full(2)).value() - 3f64.ln()).abs() < 1e-12);
        assert!((fiber_entropy(&e1, ColorSet::singleton(0)).value() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(fiber_entropy(&e1, ColorSet::EMPTY).value(), 0.0);
        assert_eq!(tracial_entropy(&e1, &[1.0], ColorSet::EMPTY).value(), 0.0);
        let sys = system_entropy(&e1);
        assert!((sys.value - 3f64.ln()).abs() < 1e-12);
        assert_eq!(sys.attained_by, Some(vec![1.0]));
    }

    #[test]
    fn golden_and_diagonal() {
        let g = graph(vec![vec![vec![1, 1], vec![1, 0]]]);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((fiber_entropy(&g, ColorSet::full(1)).value() - phi.ln()).abs() < 1e-12);
        let d = graph(vec![vec![vec![2, 0], vec![0, 3]]]);
        let sys = system_entropy(&d);
        assert!((sys.value - 2f64.ln()).abs() < 1e-12);
        assert_eq!(sys.attained_by, Some(vec![1.0, 0.0]));
    }

    #[test]
    fn e4_tracial() {
        let e4 = graph(vec![vec![vec![2, 0], vec![0, 3]], vec![vec![3, 0], vec![0, 2]]]);
        let h = tracial_entropy(&e4, &[1.0, 0.0], ColorSet::full(2));
        assert!((h.value() - 3f64.ln()).abs() < 1e-12);
        assert!((strong_entropy(&e4, ColorSet::full(2)).value() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn nilpotent_direction_vanishes() {
        let nil = graph(vec![vec![vec![0, 0], vec![1, 0]]]);
        let h = fiber_entropy(&nil, ColorSet::full(1));
        assert!(h.is_vanishing());
        assert_eq!(h.nats(), None);
        assert_eq!(serde_json::to_string(&h).unwrap(), "null");
    }

    #[test]
    fn block_sums_match_direct_powers() {
        let p = graph(vec![vec![vec![1, 1], vec![1, 1]], vec![vec![0, 2], vec![2, 0]]]);
        let logs = block_sum_log_norms(&p, ColorSet::full(2), 6);
        // every vertex sees rate 2 in each colour: Σ_{|n|=k} 2^k = (k+1) 2^k
        for (k, l) in logs.iter().enumerate() {
            let want = ((k + 1) as f64 * 2f64.powi(k as i32)).ln();
            assert!((l - want).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn mfl_full_shift_and_trivial() {
        let full = Language::compile(&MflSpec {
            n: 1,
            symbols: SymbolCounts::Uniform(2),
            forbidden: vec![],
        })
        .unwrap();
        let e = mfl_entropy(&full, ColorSet::full(1), 10, 1e-2).unwrap();
        assert!(e.table.iter().all(|r| (r.slope - 2f64.ln()).abs() < 1e-12));
        let one = Language::compile(&MflSpec {
            n: 1,
            symbols: SymbolCounts::Uniform(2),
            forbidden: vec![vec![vec![2]]],
        })
        .unwrap();
        let e = mfl_entropy(&one, ColorSet::full(1), 10, 1e-2).unwrap();
        assert_eq!(e.estimate, 0.0);
    }
}
