//! Batch runner: reads a JSON job spec, dispatches to the solver, audit and
//! certificate suites, and writes reports.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure. Summaries
//! are reproducible byte for byte; timestamps go to `metadata.json` only.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::convex_bodies::{ConvexBody, StripSpec, Vec4};
use crate::convexity_audit::{alpha_probe, deformation_sweep, rank_map, strip_audit, SweepConfig, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::io::{artifact_stem, body_hash, fmt_f64, write_field, write_json, write_rank_csv, write_table, SCHEMA_VERSION};
use crate::ma_operator::identity_suite;
use crate::rank_certificates::{identity_3_40, run_rank2_suite, run_rank3_suite, sample_jets, SuiteResult, EXACT_TOL};
use crate::report::{CertificateReport, CheckEntry};
use crate::solver::{
    comparison_check, decay_probe, discretize, newton_solve, Grid4, GridField, SolveMode, SolveReport, SolverConfig,
};

#[derive(Debug, Parser)]
#[command(name = "powercvx", version, about = "Complex Monge–Ampère solves, power-transform audits and rank certificates")]
pub struct Args {
    /// JSON job spec
    #[arg(long)]
    pub spec: PathBuf,
    /// output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// overrides the job file's seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// worker threads (speed only; results do not depend on it)
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Audit,
    Certify,
    Deform,
    Identities,
}

/// Comparison barrier and decay probe on a body with 0 on its boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemarkSpec {
    pub a: f64,
    #[serde(default = "default_z")]
    pub z: Vec4,
    #[serde(default = "default_remark_alpha")]
    pub alpha: f64,
}

fn default_z() -> Vec4 {
    [0.0, 0.0, 0.0, 1.0]
}

fn default_remark_alpha() -> f64 {
    0.6
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SUITE_SIZE: usize = 1000;
pub const DEFAULT_X_PER_JET: usize = 10;
pub const DEFAULT_T_VALUES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub schema_version: u32,
    pub command: Command,
    #[serde(default)]
    pub body: Option<ConvexBody>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub psi: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_newton: Option<usize>,
    #[serde(default)]
    pub mode: Option<SolveMode>,
    #[serde(default)]
    pub rank_tol: Option<f64>,
    /// strip width; defaults to 4h
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub t_values: Option<Vec<f64>>,
    /// 2 or 3; both when absent
    #[serde(default)]
    pub rank: Option<u8>,
    #[serde(default)]
    pub suite_size: Option<usize>,
    #[serde(default)]
    pub x_per_jet: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub remark: Option<RemarkSpec>,
}

fn arg(msg: String) -> Error {
    Error::Argument(msg)
}

impl JobSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: JobSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn psi(&self) -> f64 {
        self.psi.unwrap_or(1.0)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn need_body(&self) -> Result<&ConvexBody> {
        self.body.as_ref().ok_or_else(|| arg(format!("field `body` is required for {:?}", self.command)))
    }

    fn need_h(&self) -> Result<f64> {
        self.h.ok_or_else(|| arg(format!("field `h` is required for {:?}", self.command)))
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut c = SolverConfig::default();
        c.tol = self.tol;
        if let Some(m) = self.max_newton {
            c.max_newton = m;
        }
        if let Some(m) = self.mode {
            c.mode = m;
        }
        c
    }

    /// Range checks against every module precondition used by the command.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(arg(format!("schema_version {} unsupported (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let positive = |name: &str, v: Option<f64>| -> Result<()> {
            match v {
                Some(x) if !(x > 0.0 && x.is_finite()) => Err(arg(format!("field `{name}` = {x} must be positive"))),
                _ => Ok(()),
            }
        };
        positive("h", self.h)?;
        positive("psi", self.psi)?;
        positive("tol", self.tol)?;
        positive("rank_tol", self.rank_tol)?;
        positive("epsilon", self.epsilon)?;
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(arg(format!("field `alpha` = {a} outside (0, 1)")));
            }
        }
        if let Some(ts) = &self.t_values {
            if ts.is_empty() {
                return Err(arg("field `t_values` is empty".into()));
            }
            if let Some(t) = ts.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                return Err(arg(format!("field `t_values` entry {t} outside [0, 1]")));
            }
        }
        if let Some(r) = self.rank {
            if r != 2 && r != 3 {
                return Err(arg(format!("field `rank` = {r} must be 2 or 3")));
            }
        }
        if self.suite_size == Some(0) {
            return Err(arg("field `suite_size` must be at least 1".into()));
        }
        if self.max_newton == Some(0) {
            return Err(arg("field `max_newton` must be at least 1".into()));
        }
        if let Some(b) = &self.body {
            b.validate()?;
        }
        if let Some(r) = &self.remark {
            if !(r.a > 0.0 && r.a < 1.0) {
                return Err(arg(format!("field `remark.a` = {} outside (0, 1)", r.a)));
            }
            if !(r.alpha > 0.0) {
                return Err(arg(format!("field `remark.alpha` = {} must be positive", r.alpha)));
            }
        }
        match self.command {
            Command::Solve | Command::Audit | Command::Deform => {
                self.need_body()?;
                self.need_h()?;
            }
            Command::Certify | Command::Identities => {}
        }
        Ok(())
    }
}

/// A failed check: name, value, tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Failure {
    fn from_entry(e: &CheckEntry) -> Self {
        Self { check: e.name.clone(), value: e.value, tolerance: e.tolerance }
    }
}

struct Ctx {
    out: PathBuf,
    verbose: bool,
}

impl Ctx {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[powercvx] {}", msg.as_ref());
        }
    }
}

/// Parses arguments, runs the job and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    run_args(&args)
}

pub fn run_args(args: &Args) -> i32 {
    let started = SystemTime::now();
    let clock = Instant::now();
    let text = match fs::read_to_string(&args.spec) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read spec {}: {e}", args.spec.display());
            return 1;
        }
    };
    let mut spec = match JobSpec::from_json(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: invalid spec {}: {e}", args.spec.display());
            return 1;
        }
    };
    if let Some(s) = args.seed {
        spec.seed = Some(s);
    }
    let ctx = Ctx { out: args.out.clone(), verbose: args.verbose };
    if let Err(e) = fs::create_dir_all(&ctx.out) {
        eprintln!("error: cannot create {}: {e}", ctx.out.display());
        return 1;
    }
    let threads = args.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return 1;
        }
    };
    let used_threads = pool.current_num_threads();
    ctx.log(format!("{:?} with {used_threads} threads", spec.command));
    let result = pool.install(|| dispatch(&spec, &ctx));

    let code = match &result {
        Ok(None) => 0,
        Ok(Some(f)) => {
            eprintln!("FAILED check `{}`: value {} (tolerance {})", f.check, fmt_f64(f.value), fmt_f64(f.tolerance));
            2
        }
        Err(e) => {
            let code = exit_code(e);
            if let Error::NonConvergence { report, .. } | Error::EllipticityLoss { report, .. } = e {
                let _ = write_json(&ctx.out.join("solve_report.json"), report);
                eprintln!("FAILED check `newton`: value {} (tolerance {})", fmt_f64(report.final_residual()), fmt_f64(report.tol));
            }
            eprintln!("error: {e}");
            code
        }
    };
    let unix = |t: SystemTime| t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let meta = json!({
        "command": spec.command,
        "started_unix_s": unix(started),
        "finished_unix_s": unix(SystemTime::now()),
        "wall_time_s": clock.elapsed().as_secs_f64(),
        "threads": used_threads,
        "exit_code": code,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let _ = write_json(&ctx.out.join("metadata.json"), &meta);
    code
}

/// 1 for invalid input, 2 for numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. }
        | Error::EllipticityLoss { .. }
        | Error::LinearSolve(_)
        | Error::SingularMinor { .. }
        | Error::ReductionUndefined(_)
        | Error::Stencil(_) => 2,
        _ => 1,
    }
}

fn dispatch(spec: &JobSpec, ctx: &Ctx) -> Result<Option<Failure>> {
    match spec.command {
        Command::Solve => cmd_solve(spec, ctx),
        Command::Audit => cmd_audit(spec, ctx),
        Command::Certify => cmd_certify(spec, ctx),
        Command::Deform => cmd_deform(spec, ctx),
        Command::Identities => cmd_identities(spec, ctx),
    }
}

fn first_failure(reports: &[&CertificateReport]) -> Option<Failure> {
    reports.iter().flat_map(|r| r.entries.iter()).find(|e| !e.passed).map(Failure::from_entry)
}

fn finish(ctx: &Ctx, mut summary: Value, checks: &[&CertificateReport]) -> Result<Option<Failure>> {
    let failure = first_failure(checks);
    summary["checks"] = serde_json::to_value(checks)?;
    summary["passed"] = json!(failure.is_none());
    summary["failure"] = serde_json::to_value(&failure)?;
    write_json(&ctx.out.join("summary.json"), &summary)?;
    Ok(failure)
}

fn solve_body(spec: &JobSpec, ctx: &Ctx) -> Result<(Grid4, GridField, SolveReport)> {
    let body = spec.need_body()?;
    let h = spec.need_h()?;
    let grid = discretize(body, h)?;
    ctx.log(format!("grid {:?}: {} unknowns", grid.dims, grid.n_unknowns()));
    let (u, rep) = newton_solve(&grid, spec.psi(), &spec.solver_config())?;
    ctx.log(format!("newton: {} steps, residual {:.3e}", rep.iterations, rep.final_residual()));
    let stem = artifact_stem("field", body, h, spec.psi(), None);
    write_field(&ctx.out, &stem, &grid, &u)?;
    write_json(&ctx.out.join("solve_report.json"), &rep)?;
    Ok((grid, u, rep))
}

fn cmd_solve(spec: &JobSpec, ctx: &Ctx) -> Result<Option<Failure>> {
    let (grid, u, rep) = solve_body(spec, ctx)?;
    let mut summary = json!({
        "command": "solve",
        "body_hash": body_hash(&grid.body),
        "h": grid.h,
        "psi": spec.psi(),
        "report": rep,
    });
    let mut checks = Vec::new();
    if let Some(r) = &spec.remark {
        let big_a = 1.0 / (2.0 * (1.0 - r.a * r.a)).sqrt();
        let cmp = comparison_check(&grid, &u, r.a, big_a);
        let probe = decay_probe(&grid, &u, &r.z, r.alpha)?;
        let mut decay = CertificateReport::new("decay");
        decay.push(CheckEntry::above("decay_exponent", probe.exponent, 1.8));
        decay.push(CheckEntry::verdict(
            "scaled_decreasing",
            probe.scaled_decreasing,
            format!("t^(-1/{}) |u(tz)| over t = 0.5..0.1", r.alpha),
        ));
        summary["remark"] = json!({ "a": r.a, "A": big_a, "probe": probe });
        write_json(&ctx.out.join("remark.json"), &json!({ "comparison": cmp, "decay": decay, "probe": probe }))?;
        checks.push(cmp);
        checks.push(decay);
    }
    let refs: Vec<&CertificateReport> = checks.iter().collect();
    finish(ctx, summary, &refs)
}

fn cmd_audit(spec: &JobSpec, ctx: &Ctx) -> Result<Option<Failure>> {
    let (grid, u, rep) = solve_body(spec, ctx)?;
    let eps = spec.epsilon.unwrap_or(4.0 * grid.h);
    let strip = StripSpec::for_body(eps, &grid.body)?;
    let map = rank_map(&grid, &u, spec.rank_tol.unwrap_or(DEFAULT_RANK_TOL), &strip);
    let stem = artifact_stem("rankmap", &grid.body, grid.h, spec.psi(), None);
    write_rank_csv(&ctx.out.join(format!("{stem}.csv")), &map)?;
    let mut checks = CertificateReport::new("audit");
    checks.push(CheckEntry::verdict("constant_rank", map.summary.constant_rank, format!("ranks {:?}", map.summary.rank_counts)));
    checks.push(CheckEntry::verdict("full_rank", map.summary.min_rank == 4, format!("min rank {}", map.summary.min_rank)));
    checks.push(CheckEntry::above("strip_min_eigenvalue", strip_audit(&map)?, 0.0));
    let mut summary = json!({
        "command": "audit",
        "body_hash": body_hash(&grid.body),
        "h": grid.h,
        "psi": spec.psi(),
        "report": rep,
        "rank_summary": map.summary,
    });
    if let Some(a) = spec.alpha {
        summary["alpha_probe"] = json!({ "alpha": a, "min_eigenvalue": alpha_probe(&grid, &u, a)? });
    }
    finish(ctx, summary, &[&checks])
}

fn suite_csv(ctx: &Ctx, name: &str, res: &SuiteResult) -> Result<()> {
    let mut header = vec!["index", "v", "g1", "g2", "g3", "g4", "v11", "v22", "v33", "v44"];
    header.extend(res.columns.iter().copied());
    header.extend(res.verdict_columns.iter().copied());
    let rows = res.rows.iter().map(|r| {
        let mut row = vec![r.index.to_string(), fmt_f64(r.v)];
        row.extend(r.grad.iter().map(|x| fmt_f64(*x)));
        row.extend(r.hess_diag.iter().map(|x| fmt_f64(*x)));
        row.extend(r.values.iter().map(|x| fmt_f64(*x)));
        row.extend(r.verdicts.iter().map(|b| (*b as u8).to_string()));
        row
    });
    write_table(&ctx.out.join(format!("{name}.csv")), &header, rows)
}

fn suite_checks(res: &SuiteResult) -> CertificateReport {
    let s = &res.summary;
    let mut rep = CertificateReport::new(format!("rank{}_suite", s.rank_level));
    for c in &res.columns {
        rep.push(CheckEntry::at_most(c, s.max_values[*c], s.tolerances[*c]));
    }
    for c in &res.verdict_columns {
        let n = s.verdict_failures[*c];
        rep.push(CheckEntry::at_most(&format!("{c}_failures"), n as f64, 0.0));
    }
    rep
}

fn cmd_certify(spec: &JobSpec, ctx: &Ctx) -> Result<Option<Failure>> {
    let n = spec.suite_size.unwrap_or(DEFAULT_SUITE_SIZE);
    let x = spec.x_per_jet.unwrap_or(DEFAULT_X_PER_JET);
    let seed = spec.seed();
    let mut summaries = Vec::new();
    let mut checks = Vec::new();
    for rank in [2u8, 3] {
        if spec.rank.is_some_and(|r| r != rank) {
            continue;
        }
        ctx.log(format!("rank-{rank} suite: {n} jets, seed {seed}"));
        let res = if rank == 2 { run_rank2_suite(n, seed, x)? } else { run_rank3_suite(n, seed, x)? };
        suite_csv(ctx, &format!("certify_rank{rank}"), &res)?;
        checks.push(suite_checks(&res));
        summaries.push(res.summary);
    }
    let summary = json!({ "command": "certify", "suites": summaries });
    let refs: Vec<&CertificateReport> = checks.iter().collect();
    finish(ctx, summary, &refs)
}

fn cmd_deform(spec: &JobSpec, ctx: &Ctx) -> Result<Option<Failure>> {
    let omega = spec.need_body()?;
    let h = spec.need_h()?;
    let ts = spec.t_values.clone().unwrap_or_else(|| DEFAULT_T_VALUES.to_vec());
    let mut cfg = SweepConfig { solver: spec.solver_config(), ..Default::default() };
    if let Some(r) = spec.rank_tol {
        cfg.rank_tol = r;
    }
    if let Some(e) = spec.epsilon {
        cfg.strip_factor = e / h;
    }
    let res = deformation_sweep(omega, &ts, h, spec.psi(), &cfg);
    let mut steps = Vec::new();
    let mut checks = CertificateReport::new("deformation");
    for s in &res.steps {
        ctx.log(format!("t = {}: {}", s.t, if s.ok() { "ok" } else { "failed" }));
        if let Some(m) = &s.rank_map {
            let stem = artifact_stem("rankmap", omega, h, spec.psi(), Some(s.t));
            write_rank_csv(&ctx.out.join(format!("{stem}.csv")), m)?;
        }
        steps.push(json!({
            "t": s.t,
            "body_kind": s.body_kind,
            "report": s.report,
            "rank_summary": s.rank_map.as_ref().map(|m| &m.summary),
            "min_strip_eigenvalue": s.min_strip_eigenvalue,
            "error": s.error,
        }));
        let name = format!("t={}", s.t);
        let entry = match (&s.error, &s.rank_map) {
            (Some(e), _) => CheckEntry::verdict(&name, false, e.clone()),
            (None, Some(m)) => CheckEntry::verdict(
                &name,
                s.ok(),
                format!("min rank {}, strip min {:?}", m.summary.min_rank, s.min_strip_eigenvalue),
            ),
            (None, None) => CheckEntry::verdict(&name, false, "no audit"),
        };
        checks.push(entry);
    }
    let summary = json!({
        "command": "deform",
        "omega_hash": body_hash(omega),
        "h": h,
        "psi": spec.psi(),
        "steps": steps,
        "sweep": res.summary,
    });
    finish(ctx, summary, &[&checks])
}

fn cmd_identities(spec: &JobSpec, ctx: &Ctx) -> Result<Option<Failure>> {
    use rand::SeedableRng;
    let n = spec.suite_size.unwrap_or(DEFAULT_SUITE_SIZE);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed());
    let mut rep = CertificateReport::new("identities");
    let mut per_rank = Vec::new();
    for rank in [2u8, 3] {
        let jets = sample_jets(rank, n, &mut rng);
        let mut worst: std::collections::BTreeMap<String, (f64, f64, usize)> = Default::default();
        for d in &jets {
            for e in identity_suite(&d.jet).entries {
                if e.kind == crate::report::CheckKind::Skipped {
                    continue;
                }
                let w = worst.entry(e.name.clone()).or_insert((0.0, e.tolerance, 0));
                w.0 = w.0.max(e.value);
                w.2 += 1;
            }
            if rank == 3 {
                let r = identity_3_40(d)?;
                let w = worst.entry("identity_3_40".into()).or_insert((0.0, EXACT_TOL, 0));
                w.0 = w.0.max(r);
                w.2 += 1;
            }
        }
        for (name, (v, tol, _)) in &worst {
            rep.push(CheckEntry::at_most(&format!("rank{rank}_{name}"), *v, *tol));
        }
        ctx.log(format!("rank {rank}: {} jets", jets.len()));
        per_rank.push(json!({ "rank_level": rank, "jets": jets.len(), "checks": worst.iter().map(|(k, v)| json!({"name": k, "max": v.0, "tolerance": v.1, "evaluated": v.2})).collect::<Vec<_>>() }));
    }
    let summary = json!({ "command": "identities", "seed": spec.seed(), "suites": per_rank });
    finish(ctx, summary, &[&rep])
}

/// Reads and validates a job file.
pub fn load_spec(path: &Path) -> Result<JobSpec> {
    JobSpec::from_json(&fs::read_to_string(path)?)
}
