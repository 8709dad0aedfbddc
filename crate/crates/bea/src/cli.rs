use std::path::PathBuf;

use anyhow::{bail, Result};
use bea_core::hamstruct::{check_vertical_lagrangian, hamiltonian_flow_check, legendre_first_order, omega_text, Pipeline};
use bea_core::jetcalc::LagrangianDensity;
use bea_core::modeq::{reduce_order, solve_for_second_derivative, HighOrderODE, ReducedODE};
use bea_core::noether::{is_conserved, poisson_bracket, rotation_invariant};
use bea_core::numlab::Trajectory;
use bea_core::ptrees::{fit_travelling_wave, labelled_trees};
use bea_core::stencil::{expand_discrete_lagrangian, expand_functional_equation};
use bea_core::symcore::print::{series_str, vector_str};
use bea_core::symcore::{Context, HSeries, Style};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::experiments::{preset, rotating_pipeline, Preset, PRESETS};
use crate::golden::run_golden;
use crate::problem::{parse_potential, potential_string, Case, Kind, ProblemFile};
use crate::report::{csv_escape, trajectory_csv, Format, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_GOLDEN: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "bea", version, about = "Backward error analysis for travelling and rotating waves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Directory for report files.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    /// TOML problem file; defaults to the rotating wave problem.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Truncation order N (overrides the problem file).
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Modified Lagrangian, high-order modified equation and reduced equation.
    Derive {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Modified Hamiltonian structure on the first jet.
    Hamiltonian {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Modified rotation invariant.
    Invariant {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        common: Common,
    },
    /// P-series coefficients of the modified Lagrangian for travelling waves.
    FitPseries {
        #[arg(long, default_value_t = 6)]
        order: usize,
        /// Dimension used to expand elementary differentials.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Numeric experiment from a preset.
    Simulate {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        preset: String,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        dx: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        /// `gaussian` or `poly:a0,a1,...`
        #[arg(long)]
        potential: Option<String>,
        /// Truncation of the integrated (or seeding) reduced flow.
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        span: Option<f64>,
        /// Fixed-point tolerance of the midpoint rule.
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Golden symbolic identities.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Failure {
        let numeric = error.chain().any(|e| matches!(e.downcast_ref::<bea_core::Error>(), Some(bea_core::Error::Numeric(_))));
        Failure { code: if numeric { EXIT_NUMERIC } else { EXIT_VALIDATION }, error }
    }
}

impl From<bea_core::Error> for Failure {
    fn from(e: bea_core::Error) -> Failure {
        anyhow::Error::from(e).into()
    }
}

fn fail(code: i32, msg: String) -> Failure {
    Failure { code, error: anyhow::anyhow!(msg) }
}

fn load_problem(a: &ProblemArgs) -> Result<ProblemFile> {
    let mut p = match &a.problem {
        Some(path) => ProblemFile::load(path)?,
        None => ProblemFile::rotating(2),
    };
    if let Some(n) = a.order {
        p.order = n;
    }
    Ok(p)
}

fn symbolic_format(common: &Common) -> Result<Format> {
    match common.format.unwrap_or(Format::Text) {
        Format::Csv => bail!("csv output is only available for fit-pseries and simulate"),
        f => Ok(f),
    }
}

fn style(f: Format) -> Style {
    if f == Format::Latex {
        Style::Latex
    } else {
        Style::Text
    }
}

fn series_block(ctx: &Context, name: &str, s: &[HSeries], f: Format) -> String {
    let mut out = String::new();
    for (j, c) in s.iter().enumerate() {
        let label = if s.len() == 1 { name.to_string() } else { format!("{name}[{}]", j + 1) };
        match f {
            Format::Latex => out.push_str(&format!("% {label}\n\\begin{{align*}}\n{}\n\\end{{align*}}\n", series_str(ctx, c, Style::Latex))),
            _ => out.push_str(&format!("{label} =\n{}\n\n", series_str(ctx, c, Style::Text))),
        }
    }
    out
}

fn series_json(ctx: &Context, s: &[HSeries]) -> serde_json::Value {
    json!(s
        .iter()
        .map(|c| json!({
            "trunc": c.trunc(),
            "terms": c.terms().map(|(k, e)| json!({"power": k, "text": bea_core::symcore::to_text(ctx, e)})).collect::<Vec<_>>(),
        }))
        .collect::<Vec<_>>())
}

fn settings_of(p: &ProblemFile) -> serde_json::Value {
    serde_json::to_value(p).unwrap_or(serde_json::Value::Null)
}

fn emit(report: &Report, common: &Common) -> Result<()> {
    for p in report.write(&common.out_dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

struct Derived {
    ctx: Context,
    lagrangian: LagrangianDensity,
    ode: HighOrderODE,
    reduced: ReducedODE,
}

fn derive_objects(p: &ProblemFile) -> Result<Derived> {
    let st = p.stencil()?;
    let lagrangian = expand_discrete_lagrangian(&st)?;
    let ode = solve_for_second_derivative(&expand_functional_equation(&st)?)?;
    let (reduced, _) = reduce_order(&ode, &st.ctx)?;
    Ok(Derived { ctx: st.ctx, lagrangian, ode, reduced })
}

fn derive(pa: &ProblemArgs, common: &Common) -> Result<()> {
    let p = load_problem(pa)?;
    let f = symbolic_format(common)?;
    let d = derive_objects(&p)?;
    let ctx = &d.ctx;
    let mut r = Report::new("derive", settings_of(&p), p.canonical());
    let leading = if d.reduced.dim() == 2 { Some(vector_str(ctx, &d.reduced.leading())) } else { None };
    if f == Format::Json {
        let v = json!({
            "lagrangian": series_json(ctx, std::slice::from_ref(&d.lagrangian.l)),
            "high_order_ode": series_json(ctx, &d.ode.rhs),
            "reduced_ode": series_json(ctx, &d.reduced.rhs),
            "reduced_leading": leading,
        });
        r.add("derive.json", serde_json::to_string_pretty(&v)? + "\n");
    } else {
        let ext = f.ext();
        r.add(format!("lagrangian.{ext}"), series_block(ctx, "L", std::slice::from_ref(&d.lagrangian.l), f));
        r.add(format!("high_order_ode.{ext}"), series_block(ctx, "d2phi", &d.ode.rhs, f));
        let mut red = String::new();
        if let Some(l) = &leading {
            red.push_str(&if f == Format::Latex { format!("% leading: d2phi = {l}\n") } else { format!("leading: d2phi = {l}\n\n") });
        }
        red.push_str(&series_block(ctx, "d2phi", &d.reduced.rhs, f));
        r.add(format!("reduced_ode.{ext}"), red);
    }
    if let Some(l) = &leading {
        println!("d2phi = {l} + O(h^2)");
    }
    emit(&r, common)
}

fn pipeline_for(p: &ProblemFile) -> Result<Pipeline> {
    Ok(Pipeline::run(&p.stencil()?)?)
}

fn hamiltonian(pa: &ProblemArgs, common: &Common) -> Result<()> {
    let p = load_problem(pa)?;
    let f = symbolic_format(common)?;
    let pipe = pipeline_for(&p)?;
    let ctx = pipe.ctx();
    let flow = hamiltonian_flow_check(&pipe.ham, &pipe.reduced, ctx)?;
    let flow_ok = flow.iter().all(|s| s.is_zero());
    let closed = pipe.ham.check_closed(ctx).is_ok();
    let (vertical, _) = check_vertical_lagrangian(&pipe.ham);
    let first_order = if p.case != Case::General {
        let base = ProblemFile { case: Case::General, ..p.clone() }.stencil()?;
        let (l, lp) = legendre_first_order(&base, p.case.legendre())?;
        Some(series_str(lp.ctx(), &l.l, style(f)))
    } else {
        None
    };
    let mut r = Report::new("hamiltonian", settings_of(&p), p.canonical());
    let orders: Vec<usize> = (0..=pipe.ham.h.trunc()).collect();
    if f == Format::Json {
        let omega: Vec<_> = orders.iter().map(|&k| json!({"power": k, "rows": omega_text(&pipe.ham, k, ctx).lines().collect::<Vec<_>>()})).collect();
        let v = json!({
            "hamiltonian": series_json(ctx, std::slice::from_ref(&pipe.ham.h)),
            "ostrogradsky_hamiltonian": series_json(ctx, std::slice::from_ref(&pipe.ostrogradsky.h)),
            "omega": omega,
            "skew": pipe.ham.is_skew(),
            "closed": closed,
            "flow_check": flow_ok,
            "vertical_lagrangian": vertical,
            "first_order_lagrangian": first_order,
        });
        r.add("hamiltonian.json", serde_json::to_string_pretty(&v)? + "\n");
    } else {
        let ext = f.ext();
        r.add(format!("hamiltonian.{ext}"), series_block(ctx, "H", std::slice::from_ref(&pipe.ham.h), f));
        r.add(format!("ostrogradsky.{ext}"), series_block(ctx, "H_jet", std::slice::from_ref(&pipe.ostrogradsky.h), f));
        let mut om = String::new();
        for &k in &orders {
            om.push_str(&format!("h^{k}:\n{}\n", omega_text(&pipe.ham, k, ctx)));
        }
        r.add("omega.txt", om);
        let mut checks = format!(
            "skew: {}\nclosed: {closed}\nflow check: {flow_ok}\nvertical fibres Lagrangian: {vertical}\n",
            pipe.ham.is_skew()
        );
        if let Some(l) = &first_order {
            checks.push_str(&format!("\nfirst-order Lagrangian:\n{l}\n"));
        }
        r.add("checks.txt", checks);
    }
    println!("flow check {}, closed {closed}, vertical fibres Lagrangian {vertical}", if flow_ok { "ok" } else { "FAILED" });
    emit(&r, common)
}

fn invariant(pa: &ProblemArgs, common: &Common) -> Result<()> {
    let p = load_problem(pa)?;
    if p.kind != Kind::Rotating {
        bail!("the rotation invariant needs a rotating problem");
    }
    let f = symbolic_format(common)?;
    let pipe = pipeline_for(&p)?;
    let ctx = pipe.ctx();
    let inv = rotation_invariant(&pipe)?;
    let conserved = is_conserved(&inv.reduced, &pipe.reduced, ctx)?;
    let commutes = poisson_bracket(&pipe.ham, &pipe.ham.h, &inv.reduced, ctx)?.is_zero();
    let mut r = Report::new("invariant", settings_of(&p), p.canonical());
    if f == Format::Json {
        let v = json!({
            "jet": series_json(ctx, std::slice::from_ref(&inv.jet)),
            "reduced": series_json(ctx, std::slice::from_ref(&inv.reduced)),
            "conserved": conserved,
            "commutes_with_hamiltonian": commutes,
        });
        r.add("invariant.json", serde_json::to_string_pretty(&v)? + "\n");
    } else {
        let ext = f.ext();
        r.add(format!("invariant_jet.{ext}"), series_block(ctx, "I_jet", std::slice::from_ref(&inv.jet), f));
        r.add(format!("invariant.{ext}"), series_block(ctx, "I_rot", std::slice::from_ref(&inv.reduced), f));
        r.add("checks.txt", format!("conserved: {conserved}\ncommutes with H: {commutes}\n"));
    }
    println!("conserved {conserved}, commutes with H {commutes}");
    emit(&r, common)
}

fn fit_pseries(order: usize, dim: usize, common: &Common) -> Result<()> {
    let f = common.format.unwrap_or(Format::Text);
    let (fit, _, problem) = fit_travelling_wave(dim, order)?;
    let ctx = &problem.ctx;
    let mut rows = Vec::new();
    for j in (2..=order).step_by(2) {
        for (i, t) in labelled_trees(j)?.iter().enumerate() {
            let a = fit.get(j, i + 1).cloned().unwrap_or_else(bea_core::symcore::RatFunc::zero);
            rows.push((j, i + 1, t.canonical().to_string(), bea_core::symcore::print::ratfunc_str(ctx, &a, style(f))));
        }
    }
    let settings = json!({"order": order, "dim": dim});
    let mut r = Report::new("fit-pseries", settings.clone(), settings.to_string());
    match f {
        Format::Json => {
            let v: Vec<_> = rows.iter().map(|(j, k, t, a)| json!({"order": j, "index": k, "tree": t, "coefficient": a})).collect();
            r.add("pseries.json", serde_json::to_string_pretty(&v)? + "\n");
        }
        Format::Csv => {
            let mut s = String::from("order,index,tree,coefficient\n");
            for (j, k, t, a) in &rows {
                s.push_str(&format!("{j},{k},{},{}\n", csv_escape(t), csv_escape(a)));
            }
            r.add("pseries.csv", s);
        }
        Format::Latex => {
            let mut s = String::from("\\begin{align*}\n");
            for (j, k, _, a) in &rows {
                s.push_str(&format!("a_{{{j},{k}}} &= {a} \\\\\n"));
            }
            s.push_str("\\end{align*}\n");
            r.add("pseries.tex", s);
        }
        Format::Text => {
            let mut s = String::new();
            for (j, k, t, a) in &rows {
                s.push_str(&format!("a_{{{j},{k}}}  {t}\n    {a}\n"));
            }
            r.add("pseries.txt", s);
        }
    }
    for (j, k, t, a) in &rows {
        println!("a_{{{j},{k}}} [{t}] = {a}");
    }
    emit(&r, common)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    name: &str,
    alpha: Option<f64>,
    c: Option<f64>,
    dt: Option<f64>,
    dx: Option<f64>,
    h: Option<f64>,
    potential: Option<&str>,
    order: Option<usize>,
    step: Option<f64>,
    span: Option<f64>,
    tol: Option<f64>,
    common: &Common,
) -> std::result::Result<(), Failure> {
    let f = common.format.unwrap_or(Format::Csv);
    if f != Format::Csv && f != Format::Json {
        return Err(fail(EXIT_USAGE, "simulate writes csv or json".into()));
    }
    let mut pr = preset(name)?;
    {
        let b = pr.binding_mut();
        b.alpha = alpha.unwrap_or(b.alpha);
        b.c = c.unwrap_or(b.c);
        b.dt = dt.unwrap_or(b.dt);
        b.dx = dx.unwrap_or(b.dx);
        b.h = h.unwrap_or(b.h);
        if let Some(p) = potential {
            b.potential = parse_potential(p)?;
        }
        if (b.c.abs() - 1.0).abs() < f64::EPSILON {
            return Err(fail(EXIT_VALIDATION, "|c| = 1 is excluded".into()));
        }
    }
    match &mut pr {
        Preset::Midpoint(s) => {
            s.trunc = order.unwrap_or(s.trunc);
            s.step = step.unwrap_or(s.step);
            s.span = span.unwrap_or(s.span);
            s.fp_tol = tol.unwrap_or(s.fp_tol);
        }
        Preset::Multistep(s) => {
            s.seed_trunc = order.unwrap_or(s.seed_trunc);
            s.span = span.unwrap_or(s.span);
            if step.is_some() || tol.is_some() {
                return Err(fail(EXIT_USAGE, "--step and --tol apply to midpoint presets".into()));
            }
        }
    }
    if pr.trunc() % 2 == 1 {
        return Err(fail(EXIT_VALIDATION, "truncation order must be even".into()));
    }
    let pipe = rotating_pipeline(pr.trunc())?;
    let (t, settings, extra) = run_preset(&pr, &pipe)?;
    let mut summary = json!({"preset": name, "settings": settings, "points": t.xi.len()});
    for ch in &t.channels {
        summary[format!("drift_{}", ch.name)] = json!(t.drift(&ch.name));
        summary[format!("amplitude_{}", ch.name)] = json!(t.amplitude(&ch.name));
    }
    if let Some(m) = extra {
        summary["max_relative_residual"] = json!(m);
    }
    let states = match pr {
        Preset::Midpoint(_) => ["q1", "q2", "p1", "p2"],
        Preset::Multistep(_) => ["phi1", "phi2", "dphi1", "dphi2"],
    };
    let mut r = Report::new("simulate", summary["settings"].clone(), summary["settings"].to_string());
    if f == Format::Csv {
        r.add(format!("{name}.csv"), trajectory_csv(&t, &states));
    }
    r.add(format!("{name}_summary.json"), serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)? + "\n");
    for ch in &t.channels {
        println!("{:>8}  drift {:.3e}  amplitude {:.3e}", ch.name, t.drift(&ch.name).unwrap_or(f64::NAN), t.amplitude(&ch.name).unwrap_or(f64::NAN));
    }
    if let Some(m) = extra {
        println!("max relative residual {m:.3e}");
    }
    emit(&r, common)?;
    let finite = t.states.iter().flatten().all(|x| x.is_finite()) && t.channels.iter().all(|c| c.values.iter().all(|x| x.is_finite()));
    if !finite {
        return Err(fail(EXIT_NUMERIC, format!("{name}: trajectory is not finite")));
    }
    Ok(())
}

fn run_preset(pr: &Preset, pipe: &Pipeline) -> Result<(Trajectory, serde_json::Value, Option<f64>)> {
    Ok(match pr {
        Preset::Midpoint(s) => {
            let b = &s.binding;
            let settings = json!({
                "method": "implicit midpoint (Darboux variables)",
                "alpha": b.alpha, "c": b.c, "dt": b.dt, "dx": b.dx, "h": b.h,
                "potential": potential_string(&b.potential),
                "order": s.trunc, "x0_phi_dphi": s.x0, "step": s.step, "span": s.span,
                "fp_tol": s.fp_tol, "fp_maxiter": s.fp_maxiter,
            });
            (crate::experiments::run_midpoint(s, pipe)?, settings, None)
        }
        Preset::Multistep(s) => {
            let b = &s.binding;
            let settings = json!({
                "method": "functional equation as multistep formula",
                "alpha": b.alpha, "c": b.c, "dt": b.dt, "dx": b.dx, "h": b.h,
                "potential": potential_string(&b.potential),
                "seed_order": s.seed_trunc, "x0_phi_dphi": s.x0, "span": s.span, "seed_substeps": s.seed_sub,
            });
            let (t, run) = crate::experiments::run_multistep(s, pipe)?;
            let worst = run.residuals.iter().cloned().fold(0.0, f64::max);
            (t, settings, Some(worst))
        }
    })
}

fn verify(common: &Common) -> std::result::Result<(), Failure> {
    let f = common.format.unwrap_or(Format::Text);
    let results = run_golden()?;
    let matched = results.iter().filter(|g| g.matched).count();
    let mut text = String::new();
    for g in &results {
        text.push_str(&format!("{} {}\n", if g.matched { "ok  " } else { "FAIL" }, g.name));
        if !g.matched {
            text.push_str(&format!("    computed:  {}\n    reference: {}\n", g.computed, g.reference));
        }
    }
    let line = format!("{matched}/{} golden identities matched", results.len());
    text.push_str(&line);
    text.push('\n');
    print!("{text}");
    let mut r = Report::new("verify", json!({}), String::new());
    match f {
        Format::Json => r.add("verify.json", serde_json::to_string_pretty(&results).map_err(anyhow::Error::from)? + "\n"),
        _ => r.add("verify.txt", text),
    }
    emit(&r, common)?;
    if matched != results.len() {
        return Err(fail(EXIT_GOLDEN, line));
    }
    Ok(())
}

pub fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Derive { problem, common } => derive(&problem, &common)?,
        Command::Hamiltonian { problem, common } => hamiltonian(&problem, &common)?,
        Command::Invariant { problem, common } => invariant(&problem, &common)?,
        Command::FitPseries { order, dim, common } => fit_pseries(order, dim, &common)?,
        Command::Simulate { preset, alpha, c, dt, dx, h, potential, order, step, span, tol, common } => {
            simulate(&preset, alpha, c, dt, dx, h, potential.as_deref(), order, step, span, tol, &common)?
        }
        Command::Verify { common } => verify(&common)?,
    }
    Ok(())
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}
