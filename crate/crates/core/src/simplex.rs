//! Admissible trace polytopes for each pair `(β, F)` and the β-phase diagram.
//!
//! `Tr^F_β` consists of the traces `τ` with `B_i τ = e^β τ` for every `i ∉ F` whose
//! partition sum over `F` converges, restricted to traces vanishing on `fI_{F^c}` and,
//! when a lattice of ideals is given, on `I_F`. The polytope is returned by its extreme
//! points.

use num_rational::BigRational;
use serde::Serialize;

use crate::beta::Beta;
use crate::colors::ColorSet;
use crate::entropy::{delta, fiber_entropy, restricted_rate, system_entropy};
use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, real_eigenvalues, spectral_radius};
use crate::model::{IdealLattice, Instance};
use crate::par::Exec;
use crate::polytope::{affine_dim, polytope_vertices, rank, Approx, Field};

/// Coordinates above which vertex enumeration is refused.
pub const VERTEX_ENUM_CAP: usize = 32;
/// Required gap below one for the convergence certificate.
pub const CERT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// `e^β` matches `λ` when `|e^β − λ| ≤ snap · max(1, |λ|)`.
    pub snap: f64,
    /// Residual allowed in eigen-conditions and filters.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { snap: 1e-9, residual: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenCondition {
    /// 1-based colour.
    pub color: usize,
    pub eigenvalue: f64,
    /// Integer eigenvalue confirmed by exact arithmetic.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Filters {
    /// `fI_{F^c}`.
    pub fi: Vec<usize>,
    /// `I_F` from the supplied lattice.
    pub lattice: Vec<usize>,
    /// Vertices whose point mass has a divergent partition sum over `F`.
    pub divergent: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub eigen: Vec<EigenCondition>,
    /// Colour (1-based) whose eigen-condition has no matching eigenvalue.
    pub unmatched_color: Option<usize>,
    /// `exact`, `float` or `none` (no eigen-conditions).
    pub arithmetic: String,
    /// Vertices allowed in the support; every admissible support is a subset of it.
    pub admissible_vertices: Vec<usize>,
    /// The admissible set is a face of the simplex, hence convex.
    pub convex: bool,
    pub lattice_applied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSimplexResult {
    pub beta: f64,
    #[serde(rename = "F")]
    pub f: ColorSet,
    pub extreme_points: Vec<Vec<f64>>,
    /// Affine dimension, `None` when empty.
    #[serde(rename = "dim")]
    pub affine_dim: Option<usize>,
    pub empty: bool,
    pub filters: Filters,
    pub diagnostics: Diagnostics,
}

/// `max_{i∈F} ρ(B_i|_R) / e^β` on the closure `R` of `supp τ`; `0` for `F = ∅`.
pub fn convergence_ratio(inst: &Instance, tau: &[f64], beta: Beta, f: ColorSet) -> f64 {
    if f.is_empty() {
        return 0.0;
    }
    restricted_rate(inst, tau, f) / beta.exp()
}

pub fn certified(ratio: f64) -> bool {
    ratio < 1.0 - CERT_MARGIN
}

/// Vertices `v` with `c^F_{δ_v, β} = ∞`.
pub fn divergent_vertices(inst: &Instance, beta: Beta, f: ColorSet) -> Vec<usize> {
    (0..inst.dim())
        .filter(|&v| !certified(convergence_ratio(inst, &delta(inst.dim(), v), beta, f)))
        .collect()
}

/// Matches `e^β` to a real eigenvalue of `B_i`.
pub fn snap_eigenvalue(inst: &Instance, i: usize, beta: Beta, tol: f64) -> Result<Option<EigenCondition>> {
    let x = beta.exp();
    let near: Vec<f64> = real_eigenvalues(inst.b(i), 1e-9)
        .into_iter()
        .filter(|l| (x - l).abs() <= tol * l.abs().max(1.0))
        .collect();
    match near.len() {
        0 => Ok(None),
        1 => {
            let l = near[0];
            let r = l.round();
            if (l - r).abs() <= 1e-9 * r.abs().max(1.0) && singular_at(inst, i, r as i64) {
                Ok(Some(EigenCondition { color: i + 1, eigenvalue: r, exact: true }))
            } else {
                Ok(Some(EigenCondition { color: i + 1, eigenvalue: l, exact: false }))
            }
        }
        _ => Err(Error::EigenSnapAmbiguity { color: i + 1, exp_beta: x, candidates: near }),
    }
}

fn shifted_rows<T: Field>(inst: &Instance, i: usize, lambda: &T, cols: &[usize]) -> Vec<Vec<T>> {
    let b = inst.b(i);
    (0..inst.dim())
        .map(|r| {
            cols.iter()
                .map(|&c| {
                    let x = T::from_i64(b.get(r, c));
                    if r == c {
                        x.sub(lambda)
                    } else {
                        x
                    }
                })
                .collect()
        })
        .collect()
}

/// `det(B_i − λ) = 0` in exact arithmetic.
fn singular_at(inst: &Instance, i: usize, lambda: i64) -> bool {
    let cols: Vec<usize> = (0..inst.dim()).collect();
    let rows = shifted_rows::<BigRational>(inst, i, &BigRational::from_i64(lambda), &cols);
    rank(&rows, cols.len()) < cols.len()
}

fn union(sets: &[&[usize]], n: usize) -> Vec<usize> {
    let mut mark = vec![false; n];
    for s in sets {
        for &v in *s {
            mark[v] = true;
        }
    }
    (0..n).filter(|&v| mark[v]).collect()
}

/// `Tr^F_β` filtered by `fI_{F^c}` and, for nonempty `F`, by `I_F` of the lattice.
pub fn f_trace_set(
    inst: &Instance,
    beta: Beta,
    f: ColorSet,
    lattice: Option<&IdealLattice>,
    tol: Tolerances,
) -> Result<TraceSimplexResult> {
    let n = inst.dim();
    let fc = f.complement(inst.rank());
    let fi = inst.compute_fi(fc);
    let lat: Vec<usize> = match lattice {
        Some(l) if !f.is_empty() => l.get(f).to_vec(),
        _ => Vec::new(),
    };
    let divergent = divergent_vertices(inst, beta, f);
    let zero = union(&[&fi, &lat, &divergent], n);
    let free: Vec<usize> = (0..n).filter(|v| zero.binary_search(v).is_err()).collect();
    let mut diagnostics = Diagnostics {
        eigen: Vec::new(),
        unmatched_color: None,
        arithmetic: "none".into(),
        admissible_vertices: free.clone(),
        convex: true,
        lattice_applied: lattice.is_some() && !f.is_empty(),
    };
    let filters = Filters { fi, lattice: lat, divergent };
    let empty_result = |diagnostics: Diagnostics, filters: Filters| TraceSimplexResult {
        beta: beta.value(),
        f,
        extreme_points: Vec::new(),
        affine_dim: None,
        empty: true,
        filters,
        diagnostics,
    };
    for i in fc.iter() {
        match snap_eigenvalue(inst, i, beta, tol.snap)? {
            Some(c) => diagnostics.eigen.push(c),
            None => {
                diagnostics.unmatched_color = Some(i + 1);
                return Ok(empty_result(diagnostics, filters));
            }
        }
    }
    let points: Vec<Vec<f64>> = if fc.is_empty() {
        free.iter().map(|&v| delta(n, v)).collect()
    } else {
        if free.len() > VERTEX_ENUM_CAP {
            return Err(Error::DimensionCap(free.len(), VERTEX_ENUM_CAP));
        }
        let exact = diagnostics.eigen.iter().all(|c| c.exact);
        let local: Vec<Vec<f64>> = if exact {
            diagnostics.arithmetic = "exact".into();
            let mut rows = Vec::new();
            for c in &diagnostics.eigen {
                let l = BigRational::from_i64(c.eigenvalue as i64);
                rows.extend(shifted_rows(inst, c.color - 1, &l, &free));
            }
            polytope_vertices(&rows, free.len())
                .into_iter()
                .map(|p| p.iter().map(Field::to_f64).collect())
                .collect()
        } else {
            diagnostics.arithmetic = "float".into();
            let mut rows = Vec::new();
            for c in &diagnostics.eigen {
                rows.extend(shifted_rows(inst, c.color - 1, &Approx(c.eigenvalue), &free));
            }
            polytope_vertices(&rows, free.len())
                .into_iter()
                .map(|p| p.iter().map(|x| x.0.max(0.0)).collect())
                .collect()
        };
        local
            .into_iter()
            .map(|p| {
                let mut x = vec![0.0; n];
                for (k, &v) in free.iter().enumerate() {
                    x[v] = p[k];
                }
                let s: f64 = x.iter().sum();
                x.iter_mut().for_each(|y| *y /= s);
                x
            })
            .filter(|x| {
                diagnostics.eigen.iter().all(|c| {
                    let bx = inst.b(c.color - 1).apply(x);
                    let ex: Vec<f64> = x.iter().map(|y| y * beta.exp()).collect();
                    max_abs_diff(&bx, &ex) <= tol.residual * beta.exp().max(1.0)
                })
            })
            .collect()
    };
    if points.is_empty() {
        return Ok(empty_result(diagnostics, filters));
    }
    Ok(TraceSimplexResult {
        beta: beta.value(),
        f,
        affine_dim: Some(affine_dim(&points)),
        extreme_points: points,
        empty: false,
        filters,
        diagnostics,
    })
}

/// `Tr^fty_β`: the face of traces supported on vertices with convergent partition sums.
pub fn finite_trace_set(inst: &Instance, beta: Beta) -> Result<TraceSimplexResult> {
    f_trace_set(inst, beta, inst.full(), None, Tolerances::default())
}

/// `Avt_β`, filtered by `fI_{1..N}`. Lattices carry no ideal for the empty colour set,
/// so none is applied here.
pub fn avt_traces(inst: &Instance, beta: Beta, tol: Tolerances) -> Result<TraceSimplexResult> {
    f_trace_set(inst, beta, ColorSet::EMPTY, None, tol)
}

/// Membership of `τ` in the filtered `Tr^F_β`; `Err` carries the reason.
pub fn check_membership(
    inst: &Instance,
    tau: &[f64],
    beta: Beta,
    f: ColorSet,
    lattice: Option<&IdealLattice>,
    tol: f64,
) -> std::result::Result<(), String> {
    let n = inst.dim();
    if tau.len() != n {
        return Err(format!("trace has {} entries, expected {n}", tau.len()));
    }
    if tau.iter().any(|&x| x < -tol) || (tau.iter().sum::<f64>() - 1.0).abs() > tol {
        return Err("not a probability vector".into());
    }
    let fc = f.complement(inst.rank());
    for i in fc.iter() {
        let bx = inst.b(i).apply(tau);
        let ex: Vec<f64> = tau.iter().map(|y| y * beta.exp()).collect();
        let r = max_abs_diff(&bx, &ex);
        if r > tol * beta.exp().max(1.0) {
            return Err(format!("B_{} τ ≠ e^β τ (residual {r:.3e})", i + 1));
        }
    }
    let mut zero = inst.compute_fi(fc);
    if let (Some(l), false) = (lattice, f.is_empty()) {
        zero.extend_from_slice(l.get(f));
    }
    if let Some(&v) = zero.iter().find(|&&v| tau[v].abs() > tol) {
        return Err(format!("trace charges the filtered vertex {}", inst.labels()[v]));
    }
    let support: Vec<f64> = tau.iter().map(|&x| if x > tol { x } else { 0.0 }).collect();
    let ratio = convergence_ratio(inst, &support, beta, f);
    if !certified(ratio) {
        return Err(format!("partition sum diverges (spectral ratio {ratio:.6})"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullSimplex {
    pub beta: f64,
    /// One entry per colour subset, in bitmask order.
    pub parts: Vec<TraceSimplexResult>,
    /// No extreme point of one part passes the membership test of another.
    pub disjoint: bool,
}

impl FullSimplex {
    pub fn nonempty(&self) -> Vec<&TraceSimplexResult> {
        self.parts.iter().filter(|p| !p.empty).collect()
    }

    pub fn part(&self, f: ColorSet) -> &TraceSimplexResult {
        &self.parts[f.bits() as usize]
    }
}

pub fn full_simplex(
    inst: &Instance,
    beta: Beta,
    lattice: Option<&IdealLattice>,
    tol: Tolerances,
    exec: Exec,
) -> Result<FullSimplex> {
    let subsets: Vec<ColorSet> = ColorSet::all(inst.rank()).collect();
    let parts: Vec<TraceSimplexResult> = exec
        .map(&subsets, |&f| f_trace_set(inst, beta, f, lattice, tol))
        .into_iter()
        .collect::<Result<_>>()?;
    let mut disjoint = true;
    for a in parts.iter().filter(|p| !p.empty) {
        for b in parts.iter().filter(|p| !p.empty && p.f != a.f) {
            if a.extreme_points
                .iter()
                .any(|x| check_membership(inst, x, beta, b.f, lattice, tol.residual).is_ok())
            {
                disjoint = false;
            }
        }
    }
    Ok(FullSimplex { beta: beta.value(), parts, disjoint })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub beta: f64,
    /// Inserted exactly at a critical candidate rather than taken from the grid.
    pub exact_candidate: bool,
    pub label: String,
    pub nonempty: Vec<PartSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartSummary {
    #[serde(rename = "F")]
    pub f: ColorSet,
    pub dim: usize,
    pub extreme_points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoints {
    pub h_x: f64,
    pub h_s: f64,
    /// `log ρ(B_i)` per colour; `None` for nilpotent colours.
    pub color_log_rho: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub beta_min: f64,
    pub beta_max: f64,
    pub steps: usize,
    pub critical: CriticalPoints,
    pub rows: Vec<PhaseRow>,
}

impl PhaseDiagram {
    /// `beta,F_bitmask,dim` with `dim = -1` for empty parts, one line per `(β, F)`.
    pub fn to_csv(&self, n_colors: usize) -> String {
        let mut out = String::from("beta,F,dim\n");
        for row in &self.rows {
            for f in ColorSet::all(n_colors) {
                let dim = row
                    .nonempty
                    .iter()
                    .find(|p| p.f == f)
                    .map(|p| p.dim as i64)
                    .unwrap_or(-1);
                out.push_str(&format!("{},{},{}\n", row.beta, f.bits(), dim));
            }
        }
        out
    }
}

/// `β`-values where the structure can change: logs of positive real eigenvalues of each
/// `B_i`, which include `h_X` and `h^s`.
pub fn critical_candidates(inst: &Instance) -> Vec<Beta> {
    let mut out: Vec<Beta> = Vec::new();
    for i in 0..inst.rank() {
        for l in real_eigenvalues(inst.b(i), 1e-9) {
            if l <= 1e-12 {
                continue;
            }
            let r = l.round();
            let b = if (l - r).abs() <= 1e-9 * r.max(1.0) { Beta::log(r) } else { Beta::log(l) };
            if !out.iter().any(|c| (c.value() - b.value()).abs() <= 1e-12) {
                out.push(b);
            }
        }
    }
    out.sort_by(|a, b| a.value().total_cmp(&b.value()));
    out
}

fn label_row(full: ColorSet, parts: &[&TraceSimplexResult]) -> String {
    match parts {
        [] => "empty".into(),
        [p] if p.f == full => "fty".into(),
        [p] => format!("F={}", p.f),
        _ => "coexistence".into(),
    }
}

pub fn phase_diagram(
    inst: &Instance,
    beta_min: f64,
    beta_max: f64,
    steps: usize,
    lattice: Option<&IdealLattice>,
    tol: Tolerances,
    exec: Exec,
) -> Result<PhaseDiagram> {
    if !(beta_min > 0.0 && beta_min < beta_max) || steps < 2 {
        return Err(Error::InvalidInput("need 0 < beta_min < beta_max and steps >= 2".into()));
    }
    let mut grid: Vec<(Beta, bool)> = (0..steps)
        .map(|k| {
            let t = k as f64 / (steps - 1) as f64;
            (Beta::new(beta_min + t * (beta_max - beta_min)), false)
        })
        .collect();
    for c in critical_candidates(inst) {
        if c.value() < beta_min - 1e-12 || c.value() > beta_max + 1e-12 {
            continue;
        }
        match grid.iter_mut().find(|(b, _)| (b.value() - c.value()).abs() <= 1e-12) {
            Some(slot) => *slot = (c, true),
            None => grid.push((c, true)),
        }
    }
    grid.sort_by(|a, b| a.0.value().total_cmp(&b.0.value()));
    // each β is independent; inner subset loops stay sequential to avoid nested fan-out
    let results: Vec<Result<FullSimplex>> =
        exec.map(&grid, |(b, _)| full_simplex(inst, *b, lattice, tol, Exec::Sequential));
    let full = inst.full();
    let mut rows = Vec::with_capacity(grid.len());
    for ((b, exact), res) in grid.iter().zip(results) {
        let fs = res?;
        let nonempty = fs.nonempty();
        rows.push(PhaseRow {
            beta: b.value(),
            exact_candidate: *exact,
            label: label_row(full, &nonempty),
            nonempty: nonempty
                .iter()
                .map(|p| PartSummary {
                    f: p.f,
                    dim: p.affine_dim.unwrap_or(0),
                    extreme_points: p.extreme_points.clone(),
                })
                .collect(),
        });
    }
    let critical = CriticalPoints {
        h_x: system_entropy(inst).value,
        h_s: fiber_entropy(inst, full).value(),
        color_log_rho: (0..inst.rank())
            .map(|i| {
                let r = spectral_radius(inst.b(i));
                (r > 0.0).then(|| r.ln())
            })
            .collect(),
    };
    Ok(PhaseDiagram { beta_min, beta_max, steps, critical, rows })
}
