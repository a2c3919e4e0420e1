//! Equilibrium states: partition values, closed-form evaluation, Wold decomposition and
//! ground states.
//!
//! A gauge-invariant equilibrium state is stored as a convex combination of `F`-type
//! states, each given by its parametrizing trace. On monomials the `F`-type state is
//!
//! ```text
//! Φ^F_τ(t(x_μ) t(x_ν)*) = δ_{ℓ(μ),ℓ(ν)} e^{−|ℓ(μ)|β} ⟨⟨x_ν, x_μ⟩, N_F τ⟩ / c^F_τ,
//! ```
//!
//! with `N_F τ = Π_{i∈F} (I − e^{−β} B_i)^{−1} τ` and `c^F_τ` its total mass.

use serde::{Deserialize, Serialize};

use crate::beta::Beta;
use crate::colors::{ColorSet, MultiIndex};
use crate::entropy::reachable_support;
use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, neumann_solve, spectral_radius_on};
use crate::model::words::Gen;
use crate::model::{IdealLattice, Instance};
use crate::simplex::{certified, check_membership};

/// Terms used at most by partial sums of the Neumann series.
pub const MAX_SERIES_TERMS: usize = 100_000;
/// Increment below which a partial sum counts as converged.
pub const SERIES_TOL: f64 = 1e-12;
/// Absolute tolerance on masses, traces and reconstruction.
pub const STATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionValue {
    /// `None` when the sum diverges.
    pub value: Option<f64>,
    pub infinite: bool,
    /// `max_{i∈F} ρ(B_i|_R)` on the closure `R` of `supp τ`.
    pub spectral_radius: f64,
    /// `spectral_radius / e^β`; the sum converges iff this is below one.
    pub ratio: f64,
    /// Box partial sum of the series used to cross-check the closed form.
    pub partial_sum: Option<f64>,
    pub terms: usize,
}

fn check_trace(inst: &Instance, tau: &[f64]) -> Result<()> {
    if tau.len() != inst.dim() {
        return Err(Error::InvalidInput(format!(
            "trace has {} entries, the instance has {} atoms",
            tau.len(),
            inst.dim()
        )));
    }
    if tau.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("trace entries must be finite".into()));
    }
    Ok(())
}

/// `(I − e^{−β}B_i)^{−1}` over `i ∈ F` applied to `τ`, on the closure `R` of its support.
/// `None` when the certificate fails.
pub fn neumann_trace(inst: &Instance, tau: &[f64], beta: Beta, f: ColorSet) -> Option<Vec<f64>> {
    let r = reachable_support(inst, tau, f);
    let rho = f.iter().map(|i| spectral_radius_on(inst.b(i), &r)).fold(0.0, f64::max);
    if !certified(rho / beta.exp()) {
        return None;
    }
    let mut y = tau.to_vec();
    for i in f.iter() {
        y = neumann_solve(inst.b(i), beta.exp_neg(), &r, &y)?;
    }
    Some(y)
}

/// `Σ_{n ≤ K·1_F} e^{−|n|β} B^n τ`, with `K` grown per colour until the increment drops
/// below [`SERIES_TOL`] or [`MAX_SERIES_TERMS`] is reached. Returns the sum and the
/// largest number of terms used.
pub fn box_series(inst: &Instance, tau: &[f64], beta: Beta, f: ColorSet) -> (Vec<f64>, usize, bool) {
    let t = beta.exp_neg();
    let mut y = tau.to_vec();
    let mut terms = 0;
    let mut converged = true;
    for i in f.iter() {
        let mut acc = y.clone();
        let mut term = y;
        let mut k = 0;
        loop {
            term = inst.b(i).apply(&term).into_iter().map(|x| x * t).collect();
            k += 1;
            let size: f64 = term.iter().map(|x| x.abs()).sum();
            acc.iter_mut().zip(&term).for_each(|(a, b)| *a += b);
            let scale: f64 = acc.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
            if size <= SERIES_TOL * scale {
                break;
            }
            if k >= MAX_SERIES_TERMS || !size.is_finite() {
                converged = false;
                break;
            }
        }
        terms = terms.max(k);
        y = acc;
    }
    (y, terms, converged)
}

/// `c^F_{τ,β} = Σ_{n∈F} e^{−|n|β} τ(Φ_n(1))`.
pub fn partition_value(inst: &Instance, tau: &[f64], beta: Beta, f: ColorSet) -> Result<PartitionValue> {
    check_trace(inst, tau)?;
    let total: f64 = tau.iter().sum();
    if f.is_empty() {
        return Ok(PartitionValue {
            value: Some(total),
            infinite: false,
            spectral_radius: 0.0,
            ratio: 0.0,
            partial_sum: Some(total),
            terms: 0,
        });
    }
    let r = reachable_support(inst, tau, f);
    let rho = f.iter().map(|i| spectral_radius_on(inst.b(i), &r)).fold(0.0, f64::max);
    let ratio = rho / beta.exp();
    let closed = neumann_trace(inst, tau, beta, f);
    let Some(sigma) = closed else {
        return Ok(PartitionValue {
            value: None,
            infinite: true,
            spectral_radius: rho,
            ratio,
            partial_sum: None,
            terms: 0,
        });
    };
    let value: f64 = sigma.iter().sum();
    let (partial, terms, converged) = box_series(inst, tau, beta, f);
    let partial: f64 = partial.iter().sum();
    if converged && (partial - value).abs() > 1e-8 * value.abs().max(1.0) {
        return Err(Error::Convergence(format!(
            "closed form {value} disagrees with the partial sum {partial}"
        )));
    }
    Ok(PartitionValue {
        value: Some(value),
        infinite: false,
        spectral_radius: rho,
        ratio,
        partial_sum: converged.then_some(partial),
        terms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    #[serde(rename = "F")]
    pub f: ColorSet,
    pub tau: Vec<f64>,
    #[serde(rename = "w", default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// The handle JSON `{"beta": …, "components": [{"F": [1], "tau": […], "w": 1.0}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandleSpec {
    pub beta: Beta,
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    #[serde(rename = "F")]
    pub f: ColorSet,
    pub tau: Vec<f64>,
    pub weight: f64,
    /// `N_F τ`.
    pub sigma: Vec<f64>,
    /// `c^F_{τ,β}`.
    pub c: f64,
}

impl Component {
    /// Restriction of the normalized component to `π(A)`.
    pub fn pi_trace(&self) -> Vec<f64> {
        self.sigma.iter().map(|x| x / self.c).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumStateHandle {
    pub beta: Beta,
    pub components: Vec<Component>,
}

impl EquilibriumStateHandle {
    /// `φ|_{π(A)}` as a trace vector.
    pub fn pi_trace(&self) -> Vec<f64> {
        let n = self.components.first().map_or(0, |c| c.tau.len());
        let mut out = vec![0.0; n];
        for c in &self.components {
            for (o, s) in out.iter_mut().zip(c.pi_trace()) {
                *o += c.weight * s;
            }
        }
        out
    }

    pub fn component(&self, f: ColorSet) -> Option<&Component> {
        self.components.iter().find(|c| c.f == f)
    }
}

pub fn build_state(
    inst: &Instance,
    beta: Beta,
    components: &[ComponentSpec],
    lattice: Option<&IdealLattice>,
) -> Result<EquilibriumStateHandle> {
    assemble(inst, beta, components, |spec| {
        check_membership(inst, &spec.tau, beta, spec.f, lattice, STATE_TOL)
            .map_err(|why| Error::Membership(format!("F = {}: {why}", spec.f)))
    })
}

fn assemble(
    inst: &Instance,
    beta: Beta,
    components: &[ComponentSpec],
    admit: impl Fn(&ComponentSpec) -> Result<()>,
) -> Result<EquilibriumStateHandle> {
    if components.is_empty() {
        return Err(Error::InvalidInput("a state needs at least one component".into()));
    }
    let total: f64 = components.iter().map(|c| c.weight).sum();
    if components.iter().any(|c| !(c.weight >= 0.0)) || !(total > 0.0) {
        return Err(Error::InvalidInput("weights must be nonnegative with positive sum".into()));
    }
    let full = inst.full();
    let mut out = Vec::with_capacity(components.len());
    for spec in components {
        if !spec.f.is_subset(full) {
            return Err(Error::InvalidInput(format!("colour set {} exceeds the rank", spec.f)));
        }
        check_trace(inst, &spec.tau)?;
        admit(spec)?;
        let sigma = if spec.f.is_empty() {
            spec.tau.clone()
        } else {
            neumann_trace(inst, &spec.tau, beta, spec.f).ok_or_else(|| {
                Error::Convergence(format!("no certificate for F = {}", spec.f))
            })?
        };
        let c: f64 = sigma.iter().sum();
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Convergence(format!("c^F = {c} for F = {}", spec.f)));
        }
        out.push(Component { f: spec.f, tau: spec.tau.clone(), weight: spec.weight / total, sigma, c });
    }
    Ok(EquilibriumStateHandle { beta, components: out })
}

/// Builds a handle without the membership test, e.g. for negative controls. The partition
/// sums must still converge.
pub fn build_state_unchecked(
    inst: &Instance,
    beta: Beta,
    components: &[ComponentSpec],
) -> Result<EquilibriumStateHandle> {
    assemble(inst, beta, components, |_| Ok(()))
}

pub fn build_from_spec(
    inst: &Instance,
    spec: &HandleSpec,
    lattice: Option<&IdealLattice>,
) -> Result<EquilibriumStateHandle> {
    build_state(inst, spec.beta, &spec.components, lattice)
}

/// `π(a)` or `t(x_μ) t(x_ν)*`.
#[derive(Debug, Clone, PartialEq)]
pub enum Monomial {
    Diag(Vec<f64>),
    Pair { mu: Vec<Gen>, nu: Vec<Gen> },
}

/// A linear combination of monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialQuery {
    pub terms: Vec<(f64, Monomial)>,
}

impl MonomialQuery {
    pub fn diag(a: Vec<f64>) -> Self {
        MonomialQuery { terms: vec![(1.0, Monomial::Diag(a))] }
    }

    pub fn pair(mu: Vec<Gen>, nu: Vec<Gen>) -> Self {
        MonomialQuery { terms: vec![(1.0, Monomial::Pair { mu, nu })] }
    }

    /// Accepts a single term or `{"terms": [...]}`. Each term is `{"coef"?, "diag": [...]}`
    /// or `{"coef"?, "mu": [[colour, index], ...], "nu": [...]}` with 1-based labels.
    pub fn from_json(json: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Term {
            #[serde(default = "one")]
            coef: f64,
            diag: Option<Vec<f64>>,
            mu: Option<Vec<[usize; 2]>>,
            nu: Option<Vec<[usize; 2]>>,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Many { terms: Vec<Term> },
            One(Term),
        }
        let raw: Raw = serde_json::from_str(json)
            .map_err(|e| Error::InvalidInput(format!("query JSON: {e}")))?;
        let terms = match raw {
            Raw::Many { terms } => terms,
            Raw::One(t) => vec![t],
        };
        let gens = |v: Vec<[usize; 2]>| -> Result<Vec<Gen>> {
            v.into_iter()
                .map(|[c, j]| {
                    if c == 0 || j == 0 {
                        Err(Error::InvalidInput("generator labels are 1-based".into()))
                    } else {
                        Ok(Gen::new(c - 1, j - 1))
                    }
                })
                .collect()
        };
        let mut out = Vec::new();
        for t in terms {
            let m = match (t.diag, t.mu, t.nu) {
                (Some(a), None, None) => Monomial::Diag(a),
                (None, mu, nu) if mu.is_some() || nu.is_some() => Monomial::Pair {
                    mu: gens(mu.unwrap_or_default())?,
                    nu: gens(nu.unwrap_or_default())?,
                },
                _ => {
                    return Err(Error::InvalidInput(
                        "a term needs either diag or mu/nu".into(),
                    ))
                }
            };
            out.push((t.coef, m));
        }
        Ok(MonomialQuery { terms: out })
    }
}

/// Degree of a monomial word, checking its generators exist.
fn gen_degree(inst: &Instance, gens: &[Gen]) -> Result<MultiIndex> {
    inst.check_monomial(gens)?;
    let mut d = MultiIndex::zero(inst.rank());
    for g in gens {
        d.0[g.color] += 1;
    }
    Ok(d)
}

/// `⟨x_ν, x_μ⟩` as a function on atoms.
pub fn inner_product(inst: &Instance, mu: &[Gen], nu: &[Gen]) -> Result<Vec<f64>> {
    (0..inst.dim())
        .map(|a| {
            let z = inst.zeta(a);
            let x = inst.apply_monomial(mu, &z)?;
            let y = inst.apply_monomial(nu, &z)?;
            Ok(match (x, y) {
                (Some(x), Some(y)) if x == y => 1.0,
                _ => 0.0,
            })
        })
        .collect()
}

/// Value of a single component (normalized) on a monomial.
pub fn evaluate_component(inst: &Instance, beta: Beta, comp: &Component, m: &Monomial) -> Result<f64> {
    let pi = comp.pi_trace();
    match m {
        Monomial::Diag(a) => {
            if a.len() != inst.dim() {
                return Err(Error::InvalidInput(format!(
                    "diag query has {} entries, expected {}",
                    a.len(),
                    inst.dim()
                )));
            }
            Ok(a.iter().zip(&pi).map(|(x, y)| x * y).sum())
        }
        Monomial::Pair { mu, nu } => {
            let (dm, dn) = (gen_degree(inst, mu)?, gen_degree(inst, nu)?);
            if dm != dn {
                return Ok(0.0);
            }
            let ip = inner_product(inst, mu, nu)?;
            let v: f64 = ip.iter().zip(&pi).map(|(x, y)| x * y).sum();
            Ok(beta.weight(dm.total()) * v)
        }
    }
}

pub fn evaluate_state(inst: &Instance, handle: &EquilibriumStateHandle, q: &MonomialQuery) -> Result<f64> {
    let mut total = 0.0;
    for (coef, m) in &q.terms {
        for comp in &handle.components {
            total += coef * comp.weight * evaluate_component(inst, handle.beta, comp, m)?;
        }
    }
    Ok(total)
}

/// Contribution `w_F / c^F` of the `F`-component to the value on `Q_F`.
pub fn state_on_qf(handle: &EquilibriumStateHandle, f: ColorSet) -> Result<f64> {
    handle
        .component(f)
        .map(|c| c.weight / c.c)
        .ok_or_else(|| Error::InvalidInput(format!("the state has no component with F = {f}")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WoldPart {
    #[serde(rename = "F")]
    pub f: ColorSet,
    pub mass: f64,
    /// Parametrizing trace, `None` when the mass vanishes.
    pub tau: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WoldDecomposition {
    pub beta: f64,
    /// One entry per colour subset in bitmask order; `F = ∅` is the infinite part.
    pub parts: Vec<WoldPart>,
    /// Mass of the finite type part `F = {1..N}`.
    pub fty: f64,
    /// Mass of the infinite type part.
    pub inf: f64,
    pub reconstruction_residual: f64,
    pub diagnostics: Vec<String>,
}

impl WoldDecomposition {
    pub fn part(&self, f: ColorSet) -> &WoldPart {
        &self.parts[f.bits() as usize]
    }

    /// Parts with positive mass.
    pub fn support(&self) -> Vec<&WoldPart> {
        self.parts.iter().filter(|p| p.mass > 0.0).collect()
    }
}

/// `Σ_{n∈Z_+^C} e^{−|n|β} B^n q`: closed form when certified, partial sums otherwise.
fn series_on(inst: &Instance, q: &[f64], beta: Beta, c: ColorSet) -> Vec<f64> {
    if c.is_empty() {
        return q.to_vec();
    }
    let cleaned: Vec<f64> = q.iter().map(|&x| if x.abs() <= 1e-15 { 0.0 } else { x }).collect();
    if let Some(x) = neumann_trace(inst, &cleaned, beta, c) {
        return x;
    }
    box_series(inst, &cleaned, beta, c).0
}

/// Splits the gauge-invariant equilibrium state with `π`-restriction `τ_total` into its
/// `F`-parts.
pub fn wold_decompose(
    inst: &Instance,
    beta: Beta,
    tau_total: &[f64],
    lattice: Option<&IdealLattice>,
) -> Result<WoldDecomposition> {
    check_trace(inst, tau_total)?;
    if tau_total.iter().any(|&x| x < -STATE_TOL)
        || (tau_total.iter().sum::<f64>() - 1.0).abs() > STATE_TOL
    {
        return Err(Error::InvalidInput("τ_total must be a probability vector".into()));
    }
    let n = inst.rank();
    let t = beta.exp_neg();
    let subsets: Vec<ColorSet> = ColorSet::all(n).collect();
    // φ(π(·)Q_C) = Π_{i∈C}(I − e^{−β}B_i) τ, then φ_{0,C} sums it over Z_+^C
    let g: Vec<Vec<f64>> = subsets
        .iter()
        .map(|&c| {
            let mut q = tau_total.to_vec();
            for i in c.iter() {
                let bq = inst.b(i).apply(&q);
                q.iter_mut().zip(bq).for_each(|(x, y)| *x -= t * y);
            }
            series_on(inst, &q, beta, c)
        })
        .collect();
    let mut diagnostics = Vec::new();
    let mut parts = Vec::with_capacity(subsets.len());
    let mut rebuilt = vec![0.0; inst.dim()];
    for &f in &subsets {
        let mut phi = vec![0.0; inst.dim()];
        for c in f.supersets(n) {
            let sign = if (c.len() - f.len()) % 2 == 0 { 1.0 } else { -1.0 };
            phi.iter_mut().zip(&g[c.bits() as usize]).for_each(|(x, y)| *x += sign * y);
        }
        if let Some(&worst) = phi.iter().min_by(|a, b| a.total_cmp(b)) {
            if worst < -STATE_TOL {
                return Err(Error::NegativeMass { set: f.to_string(), mass: worst });
            }
        }
        let mut mass: f64 = phi.iter().sum();
        if mass < 0.0 {
            if mass < -STATE_TOL {
                return Err(Error::NegativeMass { set: f.to_string(), mass });
            }
            diagnostics.push(format!("mass {mass:.3e} of F = {f} clamped to 0"));
            mass = 0.0;
        }
        if mass <= STATE_TOL {
            if mass > 0.0 {
                diagnostics.push(format!("mass {mass:.3e} of F = {f} treated as 0"));
            }
            parts.push(WoldPart { f, mass: 0.0, tau: None });
            continue;
        }
        // φ_F|_{π(A)} = m_F N_F τ_F / c^F, so τ_F ∝ Π_{i∈F}(I − e^{−β}B_i) φ_F
        let mut tau = phi.clone();
        for i in f.iter() {
            let bt = inst.b(i).apply(&tau);
            tau.iter_mut().zip(bt).for_each(|(x, y)| *x -= t * y);
        }
        let s: f64 = tau.iter().sum();
        if !(s > 0.0) || tau.iter().any(|&x| x < -STATE_TOL * s.max(1.0)) {
            return Err(Error::NotKms(format!("F = {f} part has no positive parametrizing trace")));
        }
        let tau: Vec<f64> = tau.iter().map(|&x| (x / s).max(0.0)).collect();
        let s: f64 = tau.iter().sum();
        let tau: Vec<f64> = tau.iter().map(|x| x / s).collect();
        check_membership(inst, &tau, beta, f, lattice, 1e-8)
            .map_err(|why| Error::NotKms(format!("F = {f} part: {why}")))?;
        let sigma = if f.is_empty() {
            tau.clone()
        } else {
            neumann_trace(inst, &tau, beta, f)
                .ok_or_else(|| Error::NotKms(format!("F = {f} part has a divergent partition sum")))?
        };
        let c: f64 = sigma.iter().sum();
        rebuilt.iter_mut().zip(&sigma).for_each(|(r, x)| *r += mass * x / c);
        parts.push(WoldPart { f, mass, tau: Some(tau) });
    }
    let residual = max_abs_diff(&rebuilt, tau_total);
    let mass_sum: f64 = parts.iter().map(|p| p.mass).sum();
    if residual > STATE_TOL || (mass_sum - 1.0).abs() > STATE_TOL {
        return Err(Error::NotKms(format!(
            "reconstruction residual {residual:.3e}, total mass {mass_sum}"
        )));
    }
    Ok(WoldDecomposition {
        beta: beta.value(),
        fty: parts[inst.full().bits() as usize].mass,
        inf: parts[0].mass,
        parts,
        reconstruction_residual: residual,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundStateDescription {
    /// Every state of `A` restricts a ground state; here states are probability vectors.
    pub dim: usize,
    /// `I_{1..N}` from the lattice; ground states must annihilate it.
    pub filtered: Vec<usize>,
    pub admissible_vertices: Vec<usize>,
    pub extreme_points: Vec<Vec<f64>>,
    pub affine_dim: Option<usize>,
}

/// Ground states coincide with KMS∞ states because the coefficient algebra is commutative.
pub fn ground_states(inst: &Instance, lattice: Option<&IdealLattice>) -> GroundStateDescription {
    let n = inst.dim();
    let filtered: Vec<usize> = lattice.map(|l| l.get(inst.full()).to_vec()).unwrap_or_default();
    let admissible: Vec<usize> = (0..n).filter(|v| !filtered.contains(v)).collect();
    let extreme_points: Vec<Vec<f64>> =
        admissible.iter().map(|&v| crate::entropy::delta(n, v)).collect();
    GroundStateDescription {
        dim: n,
        affine_dim: admissible.len().checked_sub(1),
        filtered,
        admissible_vertices: admissible,
        extreme_points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, GraphSpec, InstanceSpec};

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

    fn e1() -> Instance {
        graph(vec![vec![vec![2]], vec![vec![3]]])
    }

    fn e4() -> Instance {
        graph(vec![vec![vec![2, 0], vec![0, 3]], vec![vec![3, 0], vec![0, 2]]])
    }

    fn comp(f: ColorSet, tau: Vec<f64>, w: f64) -> ComponentSpec {
        ComponentSpec { f, tau, weight: w }
    }

    #[test]
    fn partition_values() {
        let log3 = Beta::log(3.0);
        let p = partition_value(&e1(), &[1.0], log3, ColorSet::singleton(0)).unwrap();
        assert!((p.value.unwrap() - 3.0).abs() < 1e-12);
        assert!((p.partial_sum.unwrap() - 3.0).abs() < 1e-9);
        let p = partition_value(&e1(), &[1.0], log3, ColorSet::full(2)).unwrap();
        assert!(p.infinite);
        let p = partition_value(&e4(), &[0.3, 0.7], log3, ColorSet::EMPTY).unwrap();
        assert_eq!(p.value, Some(1.0));
    }

    #[test]
    fn closed_form_values() {
        let inst = e1();
        let h = build_state(&inst, Beta::log(3.0), &[comp(ColorSet::singleton(0), vec![1.0], 1.0)], None)
            .unwrap();
        assert!((evaluate_state(&inst, &h, &MonomialQuery::diag(vec![1.0])).unwrap() - 1.0).abs() < 1e-12);
        let x = vec![Gen::new(0, 0)];
        let v = evaluate_state(&inst, &h, &MonomialQuery::pair(x.clone(), x.clone())).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        let off = MonomialQuery::pair(x, vec![Gen::new(1, 0)]);
        assert_eq!(evaluate_state(&inst, &h, &off).unwrap(), 0.0);
        assert!((state_on_qf(&h, ColorSet::singleton(0)).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn membership_is_enforced() {
        let err = build_state(&e1(), Beta::log(2.0), &[comp(ColorSet::singleton(1), vec![1.0], 1.0)], None)
            .unwrap_err();
        assert!(matches!(err, Error::Membership(_)));
    }

    #[test]
    fn e4_mixture() {
        let inst = e4();
        let h = build_state(
            &inst,
            Beta::log(3.0),
            &[
                comp(ColorSet::singleton(0), vec![1.0, 0.0], 0.5),
                comp(ColorSet::singleton(1), vec![0.0, 1.0], 0.5),
            ],
            None,
        )
        .unwrap();
        assert!((state_on_qf(&h, ColorSet::singleton(0)).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        let w = wold_decompose(&inst, Beta::log(3.0), &h.pi_trace(), None).unwrap();
        assert!((w.part(ColorSet::singleton(0)).mass - 0.5).abs() < 1e-12);
        assert!((w.part(ColorSet::singleton(1)).mass - 0.5).abs() < 1e-12);
        assert_eq!(w.support().len(), 2);
    }

    #[test]
    fn wold_of_diag23() {
        let inst = graph(vec![vec![vec![2, 0], vec![0, 3]]]);
        let w = wold_decompose(&inst, Beta::log(3.0), &[0.3, 0.7], None).unwrap();
        assert!((w.fty - 0.3).abs() < 1e-12 && (w.inf - 0.7).abs() < 1e-12);
        assert_eq!(w.part(ColorSet::EMPTY).tau.as_deref(), Some(&[0.0, 1.0][..]));
        let w = wold_decompose(&e1(), Beta::new(2.0 * 3f64.ln()), &[1.0], None).unwrap();
        assert!((w.fty - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wold_rejects_non_kms_trace() {
        let inst = graph(vec![vec![vec![2, 0], vec![0, 3]]]);
        assert!(wold_decompose(&inst, Beta::new(1.0), &[0.3, 0.7], None).is_err());
    }

    #[test]
    fn ground_filter() {
        let inst = graph(vec![vec![vec![0, 0], vec![1, 1]], vec![vec![0, 0], vec![1, 1]]]);
        assert_eq!(ground_states(&inst, None).extreme_points.len(), 2);
        let lat = inst.compute_cnp_ideals();
        assert_eq!(ground_states(&inst, Some(&lat)).extreme_points, vec![vec![1.0, 0.0]]);
    }

    #[test]
    fn query_json() {
        let q = MonomialQuery::from_json(r#"{"terms":[{"diag":[1]},{"coef":2,"mu":[[1,1]],"nu":[[1,1]]}]}"#)
            .unwrap();
        assert_eq!(q.terms.len(), 2);
        assert!(MonomialQuery::from_json(r#"{"mu":[[0,1]]}"#).is_err());
    }
}
