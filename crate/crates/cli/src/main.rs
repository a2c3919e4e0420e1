//! `kms-phase`: equilibrium-state structure of finite product systems from the command line.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use kms_core::entropy::{
    block_sum_log_norms, entropy_report, mfl_entropy, slope_table, SlopeRow,
};
use kms_core::equilibrium::{
    build_from_spec, evaluate_state, ground_states, state_on_qf, wold_decompose, HandleSpec,
    MonomialQuery,
};
use kms_core::fock::{build_fock, check_kms, oracle_state_eval};
use kms_core::model::{load, IdealLattice, InstanceKind};
use kms_core::par::Exec;
use kms_core::simplex::{f_trace_set, full_simplex, phase_diagram, Tolerances};
use kms_core::{Beta, ColorSet, ErrorKind, Instance, MultiIndex};

use report::{Header, Report};

#[derive(Parser)]
#[command(name = "kms-phase", version, about = "KMS states of Toeplitz-Nica-Pimsner algebras")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Global {
    /// Ideal lattice JSON, or `cnp` for the Cuntz-Nica-Pimsner lattice.
    #[arg(long, global = true)]
    ideals: Option<String>,
    /// Residual tolerance for eigen-conditions and membership.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Relative tolerance when matching e^beta to an eigenvalue.
    #[arg(long = "snap-tol", global = true, default_value_t = 1e-9)]
    snap_tol: f64,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Report entropies in bits.
    #[arg(long, global = true)]
    log2: bool,
    /// Take decimal beta literally instead of snapping it to a critical value it rounds to.
    #[arg(long = "no-snap", global = true)]
    no_snap: bool,
    /// Accepted for script compatibility; nothing here is random.
    #[arg(long, global = true, hide = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Entropies, critical inverse temperatures and finite-k slope checks.
    Entropy {
        instance: PathBuf,
        /// Length of the slope table.
        #[arg(long = "k-max")]
        k_max: Option<usize>,
    },
    /// Trace simplices Tr^F at one beta.
    Simplex {
        instance: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        /// Colour set such as `1,2`; `all` (default) lists every subset, `{}` is F = ∅.
        #[arg(long = "F", default_value = "all")]
        f: String,
    },
    /// Scan beta and label each point by the nonempty F-parts.
    Phase {
        instance: PathBuf,
        #[arg(long = "beta-min")]
        beta_min: f64,
        #[arg(long = "beta-max")]
        beta_max: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Evaluate a state handle on a query.
    StateEval {
        instance: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        query: PathBuf,
        /// Cross-check with the truncated Fock sum at this K.
        #[arg(long)]
        oracle: Option<u32>,
    },
    /// Wold decomposition of the gauge-invariant state with the given pi-trace.
    Wold {
        instance: PathBuf,
        #[arg(long)]
        beta: String,
        /// Comma-separated trace vector.
        #[arg(long)]
        tau: String,
    },
    /// Operator identities on the truncated Fock space, optionally the KMS condition.
    Verify {
        instance: PathBuf,
        #[arg(long = "K")]
        k: u32,
        /// Write operator matrices as `row col value` triplets into this directory.
        #[arg(long = "dump-ops")]
        dump_ops: Option<PathBuf>,
        /// State handle for the KMS check.
        #[arg(long = "kms-state")]
        kms_state: Option<PathBuf>,
        /// Degree bound for the KMS check, e.g. `1,1`.
        #[arg(long = "kms-bound", default_value = "1")]
        kms_bound: String,
    },
    /// Ground and KMS-infinity states.
    Ground { instance: PathBuf },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Entropy { .. } => "entropy",
            Cmd::Simplex { .. } => "simplex",
            Cmd::Phase { .. } => "phase",
            Cmd::StateEval { .. } => "state-eval",
            Cmd::Wold { .. } => "wold",
            Cmd::Verify { .. } => "verify",
            Cmd::Ground { .. } => "ground",
        }
    }

    fn instance(&self) -> &Path {
        match self {
            Cmd::Entropy { instance, .. }
            | Cmd::Simplex { instance, .. }
            | Cmd::Phase { instance, .. }
            | Cmd::StateEval { instance, .. }
            | Cmd::Wold { instance, .. }
            | Cmd::Verify { instance, .. }
            | Cmd::Ground { instance } => instance,
        }
    }
}

struct Ctx {
    inst: Instance,
    lattice: Option<IdealLattice>,
    tol: Tolerances,
    exec: Exec,
    header: Header,
    global: Global,
}

impl Ctx {
    fn lattice(&self) -> Option<&IdealLattice> {
        self.lattice.as_ref()
    }

    fn format(&self, default: Format) -> Format {
        self.global.format.unwrap_or(default)
    }

    /// Symbolic forms are exact. A decimal with at least four places is replaced by the
    /// critical value it is a rounding of, unless `--no-snap` is given.
    fn beta(&mut self, s: &str) -> Result<Beta> {
        let b: Beta = s.parse()?;
        if b.value() <= 0.0 {
            bail!(kms_core::Error::InvalidInput(format!("beta must be positive, got {s}")));
        }
        self.header.set("beta_input", json!(s));
        let places = s.trim().split_once('.').map_or(0, |(_, frac)| frac.len());
        if self.global.no_snap || places < 4 || s.contains('(') {
            return Ok(b);
        }
        let half = 0.5 * 10f64.powi(-(places as i32));
        let near = kms_core::simplex::critical_candidates(&self.inst)
            .into_iter()
            .filter(|c| (c.value() - b.value()).abs() <= half)
            .min_by(|x, y| (x.value() - b.value()).abs().total_cmp(&(y.value() - b.value()).abs()));
        match near {
            Some(c) => {
                self.header.set("beta_snapped_to", json!(format!("log({})", c.exp())));
                Ok(c)
            }
            None => Ok(b),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| kms_core::Error::InvalidInput(format!("bad {what} entry {p:?}")).into())
        })
        .collect()
}

fn setup(global: &Global, cmd: &Cmd) -> Result<Ctx> {
    if !(global.tol > 0.0) || !(global.snap_tol > 0.0) {
        bail!(kms_core::Error::InvalidInput("tolerances must be positive".into()));
    }
    let exec = match global.jobs {
        Some(0) => bail!(kms_core::Error::InvalidInput("--jobs must be at least 1".into())),
        Some(1) => Exec::Sequential,
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("cannot start the worker pool")?;
            Exec::Parallel
        }
        None => Exec::Parallel,
    };
    let text = read(cmd.instance())?;
    let inst = load(&text)?;
    let mut header = Header::new(cmd.name(), &text);
    let lattice = match global.ideals.as_deref() {
        None => None,
        Some("cnp") => {
            header.set("ideals", json!("cnp"));
            Some(inst.compute_cnp_ideals())
        }
        Some(path) => {
            let raw = read(Path::new(path))?;
            header.set("ideals_sha256", json!(report::sha256(&raw)));
            Some(IdealLattice::from_json(&inst, &raw)?)
        }
    };
    let tol = Tolerances { snap: global.snap_tol, residual: global.tol };
    header.set("tolerances", json!({ "snap": tol.snap, "residual": tol.residual }));
    Ok(Ctx { inst, lattice, tol, exec, header, global: global.clone() })
}

fn slope_csv(rows: &[SlopeRow]) -> String {
    let mut out = String::from("k,slope,window_slope\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.k, r.slope, r.window_slope));
    }
    out
}

fn cmd_entropy(ctx: &mut Ctx, k_max: Option<usize>) -> Result<Report> {
    let inst = &ctx.inst;
    let unit = if ctx.global.log2 { std::f64::consts::LN_2 } else { 1.0 };
    let conv = |x: Option<f64>| x.map(|v| v / unit);
    let rep = entropy_report(inst, &[], 0, ctx.exec);
    let mut out = json!({
        "units": if ctx.global.log2 { "bits" } else { "nats" },
        "h_s": conv(rep.strong.nats()),
        "h_x": rep.system.value / unit,
        "h_x_attained_by": rep.system.attained_by,
        "per_color": rep.per_color.iter().map(|h| conv(h.nats())).collect::<Vec<_>>(),
        "per_subset": rep.per_subset.iter().map(|(f, h)| (f.clone(), json!(conv(h.nats())))).collect::<serde_json::Map<_, _>>(),
        "max_log_d": rep.max_log_d / unit,
        "method": rep.method,
    });
    let mut table = None;
    if let Some(k) = k_max {
        ctx.header.set("k_max", json!(k));
        let rows = if inst.kind() == InstanceKind::Mfl {
            let lang = inst.language().expect("m-FL instance carries its language");
            let m = mfl_entropy(lang, inst.full(), k, 1e-3)?;
            out["mfl_counts"] = json!(m.counts);
            out["mfl_converged"] = json!(m.converged);
            m.table
        } else {
            slope_table(&block_sum_log_norms(inst, inst.full(), k))
        };
        let rows: Vec<SlopeRow> = rows
            .into_iter()
            .map(|r| SlopeRow { k: r.k, slope: r.slope / unit, window_slope: r.window_slope / unit })
            .collect();
        out["slope_table"] = json!(rows);
        table = Some(rows);
    }
    Ok(match (ctx.format(Format::Json), table) {
        (Format::Csv, Some(rows)) => Report::Csv(slope_csv(&rows)),
        (Format::Csv, None) => bail!(kms_core::Error::InvalidInput("CSV output needs --k-max".into())),
        (Format::Json, _) => Report::Json(out),
    })
}

fn simplex_csv(parts: &[&kms_core::simplex::TraceSimplexResult]) -> String {
    let mut out = String::from("F,dim,point,coords\n");
    for p in parts {
        let dim = p.affine_dim.map_or(-1, |d| d as i64);
        if p.extreme_points.is_empty() {
            out.push_str(&format!("\"{}\",{},,\n", p.f, dim));
        }
        for (k, x) in p.extreme_points.iter().enumerate() {
            let coords: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("\"{}\",{},{},{}\n", p.f, dim, k, coords.join(" ")));
        }
    }
    out
}

fn cmd_simplex(ctx: &mut Ctx, beta: &str, f: &str) -> Result<Report> {
    let beta = ctx.beta(beta)?;
    let fmt = ctx.format(Format::Json);
    if f.trim() == "all" {
        let full = full_simplex(&ctx.inst, beta, ctx.lattice(), ctx.tol, ctx.exec)?;
        return Ok(match fmt {
            Format::Json => Report::Json(serde_json::to_value(&full)?),
            Format::Csv => Report::Csv(simplex_csv(&full.parts.iter().collect::<Vec<_>>())),
        });
    }
    let f = ColorSet::parse(f, ctx.inst.rank())?;
    let part = f_trace_set(&ctx.inst, beta, f, ctx.lattice(), ctx.tol)?;
    Ok(match fmt {
        Format::Json => Report::Json(serde_json::to_value(&part)?),
        Format::Csv => Report::Csv(simplex_csv(&[&part])),
    })
}

fn cmd_phase(ctx: &mut Ctx, beta_min: f64, beta_max: f64, steps: usize) -> Result<Report> {
    let diagram =
        phase_diagram(&ctx.inst, beta_min, beta_max, steps, ctx.lattice(), ctx.tol, ctx.exec)?;
    ctx.header.set("beta_range", json!([beta_min, beta_max, steps]));
    Ok(match ctx.format(Format::Csv) {
        Format::Csv => {
            let mut csv = String::from("beta,F,dim,label,exact_candidate\n");
            for row in &diagram.rows {
                for f in ColorSet::all(ctx.inst.rank()) {
                    let dim = row.nonempty.iter().find(|p| p.f == f).map_or(-1, |p| p.dim as i64);
                    csv.push_str(&format!(
                        "{},\"{}\",{},{},{}\n",
                        row.beta, f, dim, row.label, row.exact_candidate
                    ));
                }
            }
            Report::Csv(csv)
        }
        Format::Json => Report::Json(serde_json::to_value(&diagram)?),
    })
}

fn cmd_state_eval(ctx: &mut Ctx, state: &Path, query: &Path, oracle: Option<u32>) -> Result<Report> {
    let state_text = read(state)?;
    let spec: HandleSpec = serde_json::from_str(&state_text)
        .map_err(|e| kms_core::Error::InvalidInput(format!("state JSON: {e}")))?;
    let query_text = read(query)?;
    let q = MonomialQuery::from_json(&query_text)?;
    ctx.header.set("state_sha256", json!(report::sha256(&state_text)));
    ctx.header.set("query_sha256", json!(report::sha256(&query_text)));
    let handle = build_from_spec(&ctx.inst, &spec, ctx.lattice())?;
    let value = evaluate_state(&ctx.inst, &handle, &q)?;
    let q_f: serde_json::Map<String, Value> = handle
        .components
        .iter()
        .map(|c| Ok((c.f.to_string(), json!(state_on_qf(&handle, c.f)?))))
        .collect::<Result<_>>()?;
    let mut out = json!({
        "beta": handle.beta.value(),
        "value": value,
        "pi_trace": handle.pi_trace(),
        "partition_sums": handle.components.iter().map(|c| json!({"F": c.f, "c": c.c})).collect::<Vec<_>>(),
        "state_on_QF": q_f,
    });
    if let Some(k) = oracle {
        let o = oracle_state_eval(&ctx.inst, &handle, &q, k)?;
        out["oracle"] = json!({
            "K": k,
            "value": o.value,
            "tail_bound": o.tail_bound,
            "certified": o.certified,
            "abs_diff": (o.value - value).abs(),
            "agrees": o.tail_bound.map(|b| (o.value - value).abs() <= b + 1e-12),
            "terms": o.terms,
        });
    }
    Ok(Report::Json(out))
}

fn cmd_wold(ctx: &mut Ctx, beta: &str, tau: &str) -> Result<Report> {
    let beta = ctx.beta(beta)?;
    let tau: Vec<f64> = parse_list(tau, "trace")?;
    let w = wold_decompose(&ctx.inst, beta, &tau, ctx.lattice())?;
    Ok(Report::Json(serde_json::to_value(&w)?))
}

fn cmd_verify(
    ctx: &mut Ctx,
    k: u32,
    dump: Option<&Path>,
    kms_state: Option<&Path>,
    kms_bound: &str,
) -> Result<(Report, bool)> {
    let fock = build_fock(&ctx.inst, k)?;
    let rep = fock.check_identities(ctx.exec)?;
    let mut ok = rep.all_pass;
    let mut out = serde_json::to_value(&rep)?;
    if let Some(dir) = dump {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let mut names = Vec::new();
        for (name, triplets) in fock.dump_ops() {
            let file = format!("{name}.txt");
            fs::write(dir.join(&file), triplets)
                .with_context(|| format!("cannot write {}", dir.join(&file).display()))?;
            names.push(file);
        }
        out["dumped"] = json!(names);
    }
    if let Some(path) = kms_state {
        let text = read(path)?;
        let spec: HandleSpec = serde_json::from_str(&text)
            .map_err(|e| kms_core::Error::InvalidInput(format!("state JSON: {e}")))?;
        ctx.header.set("state_sha256", json!(report::sha256(&text)));
        let handle = build_from_spec(&ctx.inst, &spec, ctx.lattice())?;
        let mut bound: Vec<u32> = parse_list(kms_bound, "degree bound")?;
        if bound.len() == 1 {
            bound = vec![bound[0]; ctx.inst.rank()];
        }
        if bound.len() != ctx.inst.rank() {
            bail!(kms_core::Error::InvalidInput(format!(
                "degree bound needs {} entries",
                ctx.inst.rank()
            )));
        }
        let kms = check_kms(&ctx.inst, &handle, &MultiIndex(bound))?;
        ok &= kms.pass;
        out["kms"] = serde_json::to_value(&kms)?;
    }
    Ok((Report::Json(out), ok))
}

fn run(cli: Cli) -> Result<bool> {
    let mut ctx = setup(&cli.global, &cli.cmd)?;
    let mut ok = true;
    let report = match &cli.cmd {
        Cmd::Entropy { k_max, .. } => cmd_entropy(&mut ctx, *k_max)?,
        Cmd::Simplex { beta, f, .. } => cmd_simplex(&mut ctx, beta, f)?,
        Cmd::Phase { beta_min, beta_max, steps, .. } => {
            cmd_phase(&mut ctx, *beta_min, *beta_max, *steps)?
        }
        Cmd::StateEval { state, query, oracle, .. } => {
            cmd_state_eval(&mut ctx, state, query, *oracle)?
        }
        Cmd::Wold { beta, tau, .. } => cmd_wold(&mut ctx, beta, tau)?,
        Cmd::Verify { k, dump_ops, kms_state, kms_bound, .. } => {
            let (r, pass) =
                cmd_verify(&mut ctx, *k, dump_ops.as_deref(), kms_state.as_deref(), kms_bound)?;
            ok = pass;
            r
        }
        Cmd::Ground { .. } => {
            Report::Json(serde_json::to_value(ground_states(&ctx.inst, ctx.lattice()))?)
        }
    };
    print!("{}", report.render(&ctx.header)?);
    Ok(ok)
}

/// 2 for validation and I/O problems, 3 for membership or convergence, 4 for caps.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<kms_core::Error>().map(kms_core::Error::kind) {
        Some(ErrorKind::Membership) => 3,
        Some(ErrorKind::Cap) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
