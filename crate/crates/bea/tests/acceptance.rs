//! Acceptance suite: one line per criterion.
//!
//! Criteria listed in `EXPECTED_FAIL` compare against reference forms that are known to disagree
//! with the computed objects; they print FAIL without failing the run. Any other failure, or an
//! unexpected pass of a listed criterion, makes the run exit nonzero.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, ensure, Result};
use bea::experiments::{multistep_order_study, preset, rotating_pipeline, run_midpoint, run_multistep, Preset};
use bea::golden::{coefficient_text, jet_coefficient, A6, B1, B2, B3, D1, D2, D3, D4, P1, P2, W2, Z_RANK_ONE, Z_SCALAR};
use bea_core::hamstruct::{hamiltonian_flow_check, legendre_first_order, legendre_round_trip, naive_lagrangian_substitution, LegendreCase, Pipeline};
use bea_core::jetcalc::{euler_expr, euler_vector};
use bea_core::noether::{is_conserved, poisson_bracket, rotation_invariant};
use bea_core::ptrees::{enumerate_trees, fit_travelling_wave};
use bea_core::stencil::{expand_discrete_lagrangian, expand_functional_equation, modified_pde, StencilProblem};
use bea_core::symcore::{parse, Atom, Context, Expr, RatFunc};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const EXPECTED_FAIL: &[&str] = &["1c", "1e"];

const SYMBOLIC_N2_BUDGET: Duration = Duration::from_secs(60);
const SYMBOLIC_N4_BUDGET: Duration = Duration::from_secs(15 * 60);
const FIG4_DRIFT_TOL: f64 = 1e-9;
const FIG4_BUDGET: Duration = Duration::from_secs(10);
const FIG5_MIN_RATIO: f64 = 10.0;
const FIG7_RESIDUAL_TOL: f64 = 1e-12;
const ORDER_TOL: f64 = 0.3;
const ORDER_HS: [f64; 3] = [1.0, 0.5, 0.25];
const ORDER_SPAN: f64 = 3.0;
const ORDER_FLOOR: f64 = 1e-14;
const ORDER_BUDGET: Duration = Duration::from_secs(120);
const RANDOM_DERIVATIVES: usize = 1000;
const RANDOM_SEED: u64 = 0x5eed_0b5e;

const NORM: &str = "(phi1^2+phi2^2)";
const NORM_D: &str = "(d1phi1^2+d1phi2^2)";

struct Line {
    id: &'static str,
    title: &'static str,
    result: Result<String>,
}

struct Pipes {
    p0: Pipeline,
    p2: Pipeline,
    p4: Pipeline,
    t2: Duration,
    t4: Duration,
}

fn p(s: &str, ctx: &Context) -> Result<Expr> {
    parse(s, ctx).map_err(|e| anyhow!("parsing `{s}`: {e}"))
}

fn jet(comp: usize, order: usize, e: u16) -> (Atom, u16) {
    (Atom::jet(comp, order), e)
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn reduced_leading(pipes: &Pipes) -> Result<String> {
    let ctx = pipes.p2.ctx();
    let lead = pipes.p2.reduced.leading();
    let want = [
        p("((alpha^2 + V1)*phi1 + 2*c*alpha*d1phi2)/(c^2-1)", ctx)?,
        p("((alpha^2 + V1)*phi2 - 2*c*alpha*d1phi1)/(c^2-1)", ctx)?,
    ];
    ensure!(lead[..] == want[..], "leading term differs");
    Ok("both components identical".into())
}

fn hamiltonian_coefficients(pipes: &Pipes) -> Result<String> {
    let ctx = pipes.p2.ctx();
    let h2 = pipes.p2.ham.h.coeff(2);
    let parts = [
        ("d1", jet_coefficient(&h2, &[jet(0, 0, 2)]), D1),
        ("d2", jet_coefficient(&h2, &[jet(0, 1, 2)]), D2),
        ("d3", jet_coefficient(&h2, &[jet(0, 1, 1), jet(1, 0, 1)]), D3),
        ("d4", jet_coefficient(&h2, &[jet(0, 0, 2), jet(0, 1, 2)]), D4),
    ];
    let bad: Vec<&str> = parts.iter().filter(|(_, got, want)| p(want, ctx).map(|w| &w != got).unwrap_or(true)).map(|t| t.0).collect();
    ensure!(bad.is_empty(), "mismatch in {}", bad.join(", "));
    let full = p(
        &format!("({D1})*{NORM} + ({D2})*{NORM_D} + ({D3})*(d1phi1*phi2 - d1phi2*phi1) + ({D4})*(phi1*d1phi1+phi2*d1phi2)^2"),
        ctx,
    )?;
    ensure!(full == h2, "h^2 coefficient has terms outside the invariant form");
    Ok("d1..d4 and the full h^2 coefficient identical".into())
}

/// Entry list of the printed matrices at h⁰ and h².
fn printed_omega(ctx: &Context) -> Result<Vec<(usize, usize, usize, Expr)>> {
    let lead = [
        ["0", "2*alpha*c", "1-c^2", "0"],
        ["-2*alpha*c", "0", "0", "1-c^2"],
        ["c^2-1", "0", "0", "0"],
        ["0", "c^2-1", "0", "0"],
    ];
    let mut out = Vec::new();
    for (a, row) in lead.iter().enumerate() {
        for (b, s) in row.iter().enumerate() {
            out.push((0, a, b, p(s, ctx)?));
        }
    }
    let w1 = p("alpha*c*(alpha*(dx^2-dt^2) + (dx^2-2*c^2*dt^2+c^4*dt^2)*(V1+(phi1^2+phi2^2)*V2))/(3*(c^2-1))", ctx)?;
    let w2 = p(W2, ctx)?;
    let zs = p(Z_SCALAR, ctx)?;
    let zk = p(Z_RANK_ONE, ctx)?;
    let phi = [Expr::jet(0, 0), Expr::jet(1, 0)];
    let mut m = vec![vec![Expr::zero(); 4]; 4];
    m[0][1] = w1.clone();
    m[1][0] = w1.neg();
    m[2][3] = w2.clone();
    m[3][2] = w2.neg();
    for i in 0..2 {
        for j in 0..2 {
            let mut z = zk.mul(&phi[i]).mul(&phi[j]);
            if i != j {
                z = z.add(&zs);
            }
            m[2 + i][j] = z.neg();
            m[i][2 + j] = z;
        }
    }
    for (a, row) in m.into_iter().enumerate() {
        for (b, e) in row.into_iter().enumerate() {
            out.push((2, a, b, e));
        }
    }
    Ok(out)
}

fn symplectic_blocks(pipes: &Pipes) -> Result<String> {
    let ctx = pipes.p2.ctx();
    let om = &pipes.p2.ham.omega;
    let mut bad = Vec::new();
    for (k, a, b, want) in printed_omega(ctx)? {
        if om[a][b].coeff(k) != want {
            bad.push(format!("h^{k}({},{})", a + 1, b + 1));
        }
    }
    ensure!(bad.is_empty(), "{} of 32 entries differ: {}", bad.len(), bad.join(" "));
    Ok("32 entries identical".into())
}

fn rotation_coefficients(pipes: &Pipes) -> Result<String> {
    let ctx = pipes.p2.ctx();
    let inv = rotation_invariant(&pipes.p2)?;
    let i2 = inv.reduced.coeff(2);
    let pre = "/(6*(c^2-1)^2)";
    let parts = [
        ("b1", jet_coefficient(&i2, &[jet(0, 0, 2)]), B1),
        ("b2", jet_coefficient(&i2, &[jet(0, 1, 2)]), B2),
        ("b3", jet_coefficient(&i2, &[jet(0, 0, 1), jet(1, 1, 1)]), B3),
    ];
    let mut bad = Vec::new();
    for (name, got, b) in &parts {
        if p(&format!("({b}){pre}"), ctx)? != *got {
            bad.push(*name);
        }
    }
    ensure!(bad.is_empty(), "mismatch in {}", bad.join(", "));
    let full = p(&format!("(({B1})*{NORM} + ({B2})*{NORM_D} + ({B3})*(d1phi2*phi1 - d1phi1*phi2)){pre}"), ctx)?;
    ensure!(full == i2, "h^2 coefficient has terms outside the invariant form");
    Ok("b1..b3 identical with prefactor h^2/(6(c^2-1)^2)".into())
}

fn pseries(_: &Pipes) -> Result<String> {
    let (fit, _, problem) = fit_travelling_wave(2, 6)?;
    let ctx = &problem.ctx;
    let printed_a2 = [(1, -1, "(c^4*dt^2-dx^2)/24"), (1, -1, "(c^4*dt^2-dx^2)/12")];
    let printed_a4 = [(1, -3, P1), (6, -4, P1), (1, -3, P2), (3, -5, P1)];
    let mut bad = Vec::new();
    let mut total = 0;
    for (order, table) in [(2usize, &printed_a2[..]), (4, &printed_a4[..]), (6, &A6[..])] {
        for (i, (m, e, poly)) in table.iter().enumerate() {
            total += 1;
            let want = p(&coefficient_text(*m, *e, poly), ctx)?.as_constant().ok_or_else(|| anyhow!("non-constant reference"))?;
            if fit.get(order, i + 1) != Some(&want) {
                bad.push(format!("a_{{{order},{}}}", i + 1));
            }
        }
    }
    ensure!(bad.is_empty(), "{} of {total} coefficients differ: {}", bad.len(), bad.join(" "));
    Ok(format!("{total} coefficients identical"))
}

fn tree_counts(_: &Pipes) -> Result<String> {
    let counts = [2, 4, 6].iter().map(|&o| enumerate_trees(o).map(|t| t.len())).collect::<Result<Vec<_>, _>>()?;
    ensure!(counts == [2, 4, 10], "counts {counts:?}");
    Ok("2/4/10".into())
}

fn modified_pde_terms(_: &Pipes) -> Result<String> {
    let ctx = Context::new(1)?;
    let m = modified_pde(2, 2)?;
    let rf = |s: &str| -> Result<RatFunc> { p(s, &ctx)?.as_constant().ok_or_else(|| anyhow!("`{s}` is not constant")) };
    let want = [(rf("1")?, 2, 0), (rf("dt^2/12")?, 4, 0), (rf("-1")?, 0, 2), (rf("-dx^2/12")?, 0, 4)];
    ensure!(m.terms.len() == want.len(), "{} terms", m.terms.len());
    for (c, a, b) in &want {
        ensure!(m.terms.iter().any(|t| &t.coeff == c && t.t_derivs == *a && t.x_derivs == *b), "missing term d_t^{a} d_x^{b}");
    }
    Ok(m.to_text(&ctx))
}

fn symmetric_criticality(_: &Pipes) -> Result<String> {
    for problem in [StencilProblem::rotating(4)?, StencilProblem::travelling(1, 4)?, StencilProblem::travelling(3, 4)?] {
        let el = euler_vector(&expand_discrete_lagrangian(&problem)?, &problem.ctx)?;
        ensure!(el == expand_functional_equation(&problem)?, "differs in dimension {}", problem.dim());
    }
    Ok("rotating and travelling (n = 1, 3) identical through h^4".into())
}

fn skew_closed(pipes: &Pipes) -> Result<String> {
    for (n, pipe) in [(0, &pipes.p0), (2, &pipes.p2), (4, &pipes.p4)] {
        ensure!(pipe.ham.is_skew(), "not skew at N = {n}");
        pipe.ham.check_closed(pipe.ctx()).map_err(|e| anyhow!("N = {n}: {e}"))?;
    }
    Ok("N = 0, 2, 4".into())
}

fn flow_check(pipes: &Pipes) -> Result<String> {
    for (n, pipe) in [(0, &pipes.p0), (2, &pipes.p2), (4, &pipes.p4)] {
        let r = hamiltonian_flow_check(&pipe.ham, &pipe.reduced, pipe.ctx())?;
        ensure!(r.iter().all(|s| s.is_zero()), "nonzero residual at N = {n}");
    }
    Ok("residual identically zero at N = 0, 2, 4".into())
}

fn conservation(pipes: &Pipes) -> Result<String> {
    for (n, pipe) in [(0, &pipes.p0), (2, &pipes.p2), (4, &pipes.p4)] {
        let ctx = pipe.ctx();
        let inv = rotation_invariant(pipe)?;
        ensure!(is_conserved(&pipe.ham.h, &pipe.reduced, ctx)?, "energy at N = {n}");
        ensure!(is_conserved(&inv.reduced, &pipe.reduced, ctx)?, "rotation invariant at N = {n}");
    }
    Ok("energy and rotation invariant at N = 0, 2, 4".into())
}

fn bracket(pipes: &Pipes) -> Result<String> {
    let pipe = &pipes.p2;
    let inv = rotation_invariant(pipe)?;
    let b = poisson_bracket(&pipe.ham, &pipe.ham.h, &inv.reduced, pipe.ctx())?;
    ensure!(b.is_zero(), "bracket is nonzero");
    Ok("{H, I_rot} = 0 at N = 2".into())
}

fn legendre(_: &Pipes) -> Result<String> {
    let base = StencilProblem::rotating(2)?;
    for case in [LegendreCase::Alpha0, LegendreCase::C0, LegendreCase::DxEqCDt] {
        let (l, pipe) = legendre_first_order(&base, case)?;
        let r = legendre_round_trip(&l, &pipe.reduced, pipe.ctx())?;
        ensure!(r.iter().all(|s| s.is_zero()), "round trip fails for {}", case.name());
    }
    Ok("alpha = 0, c = 0, dx = c dt".into())
}

fn random_expression(rng: &mut StdRng) -> String {
    const FACTORS: [&str; 10] = ["phi1", "phi2", "d1phi1", "d1phi2", "d2phi1", "d2phi2", "V0", "V1", "alpha", "c"];
    let terms = rng.random_range(1..=4);
    let mut parts = Vec::with_capacity(terms);
    for _ in 0..terms {
        let mut k: i64 = rng.random_range(-5..=4);
        if k >= 0 {
            k += 1;
        }
        let mut t = format!("({k})");
        for _ in 0..rng.random_range(1..=3) {
            t.push('*');
            t.push_str(FACTORS[rng.random_range(0..FACTORS.len())]);
        }
        parts.push(t);
    }
    parts.join(" + ")
}

fn null_lagrangians(_: &Pipes) -> Result<String> {
    let ctx = Context::new(2)?;
    let mut rng = StdRng::seed_from_u64(RANDOM_SEED);
    for i in 0..RANDOM_DERIVATIVES {
        let s = random_expression(&mut rng);
        let d = p(&s, &ctx)?.total_derivative(&ctx)?;
        let k = d.max_jet_order().unwrap_or(0);
        for j in 0..2 {
            ensure!(euler_expr(&d, j, k, &ctx)?.is_zero(), "sample {i}: E_{j}(D({s})) != 0");
        }
    }
    Ok(format!("{RANDOM_DERIVATIVES} samples, seed {RANDOM_SEED:#x}"))
}

fn fig4(pipes: &Pipes) -> Result<String> {
    let Preset::Midpoint(s) = preset("fig4")? else { unreachable!() };
    let start = Instant::now();
    let t = run_midpoint(&s, &pipes.p0)?;
    let elapsed = start.elapsed();
    let drift = t.drift("I_rot_0").ok_or_else(|| anyhow!("no rotation channel"))?;
    ensure!(drift < FIG4_DRIFT_TOL, "I_rot drift {drift:.2e} >= {FIG4_DRIFT_TOL:e}");
    ensure!(elapsed < FIG4_BUDGET, "took {}", secs(elapsed));
    Ok(format!("I_rot drift {drift:.2e} (< {FIG4_DRIFT_TOL:e}), {}", secs(elapsed)))
}

fn fig5(pipes: &Pipes) -> Result<String> {
    let Preset::Midpoint(s) = preset("fig5")? else { unreachable!() };
    let t = run_midpoint(&s, &pipes.p2)?;
    let d = |n: &str| t.drift(n).ok_or_else(|| anyhow!("no channel {n}"));
    let (h0, h2, r0, r2) = (d("H_0")?, d("H_2")?, d("I_rot_0")?, d("I_rot_2")?);
    let detail = format!("H drift {h0:.2e} vs {h2:.2e} (x{:.0}), I_rot drift {r0:.2e} vs {r2:.2e} (x{:.0})", h0 / h2, r0 / r2);
    ensure!(h0 >= FIG5_MIN_RATIO * h2 && r0 >= FIG5_MIN_RATIO * r2, "{detail}");
    Ok(detail)
}

fn fig7(pipes: &Pipes) -> Result<String> {
    let Preset::Multistep(s) = preset("fig7")? else { unreachable!() };
    let (t, run) = run_multistep(&s, &pipes.p4)?;
    let res = run.residuals.iter().fold(0.0f64, |m, r| m.max(*r));
    ensure!(res < FIG7_RESIDUAL_TOL, "residual {res:.2e}");
    let amp = |stem: &str| -> Result<Vec<f64>> {
        [0, 2, 4].iter().map(|k| t.amplitude(&format!("{stem}_{k}")).ok_or_else(|| anyhow!("no channel {stem}_{k}"))).collect()
    };
    let (h, r) = (amp("H")?, amp("I_rot")?);
    let detail = format!(
        "residual {res:.1e}, H amplitudes {:.1e}/{:.1e}/{:.1e}, I_rot amplitudes {:.1e}/{:.1e}/{:.1e}",
        h[0], h[1], h[2], r[0], r[1], r[2]
    );
    ensure!(h.windows(2).all(|w| w[1] < w[0]) && r.windows(2).all(|w| w[1] < w[0]), "not decreasing: {detail}");
    Ok(detail)
}

fn order_studies(pipes: &Pipes) -> Result<String> {
    let Preset::Multistep(s) = preset("fig7")? else { unreachable!() };
    let start = Instant::now();
    let mut slopes = Vec::new();
    for n in [0usize, 2, 4] {
        let table = multistep_order_study(&s, &pipes.p4, n, &ORDER_HS, ORDER_SPAN, ORDER_FLOOR)?;
        ensure!(!table.noise_floor, "N = {n} hit the noise floor");
        ensure!((table.slope - (n + 2) as f64).abs() <= ORDER_TOL, "N = {n}: observed order {:.3}", table.slope);
        slopes.push(format!("{:.2}", table.slope));
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < ORDER_BUDGET, "took {}", secs(elapsed));
    Ok(format!("observed orders {} (±{ORDER_TOL}), {}", slopes.join("/"), secs(elapsed)))
}

fn naive_substitution(_: &Pipes) -> Result<String> {
    let (naive, reduced) = naive_lagrangian_substitution(&StencilProblem::rotating(2)?)?;
    for (j, (a, b)) in naive.iter().zip(&reduced.rhs).enumerate() {
        ensure!(a.coeff(0) == b.coeff(0), "component {j} differs already at h^0");
    }
    ensure!(naive.iter().zip(&reduced.rhs).any(|(a, b)| a.coeff(2) != b.coeff(2)), "naive substitution matches at h^2");
    Ok("agrees at h^0, differs at h^2".into())
}

fn runtime(pipes: &Pipes) -> Result<String> {
    ensure!(pipes.t2 < SYMBOLIC_N2_BUDGET, "N = 2 pipeline took {}", secs(pipes.t2));
    ensure!(pipes.t4 < SYMBOLIC_N4_BUDGET, "N = 4 pipeline took {}", secs(pipes.t4));
    Ok(format!("N = 2 in {}, N = 4 in {}", secs(pipes.t2), secs(pipes.t4)))
}

type Check = fn(&Pipes) -> Result<String>;

const CHECKS: &[(&str, &str, Check)] = &[
    ("1a", "reduced equation leading term", reduced_leading),
    ("1b", "modified Hamiltonian d1..d4", hamiltonian_coefficients),
    ("1c", "symplectic matrix against printed blocks", symplectic_blocks),
    ("1d", "rotation invariant b1..b3", rotation_coefficients),
    ("1e", "P-series coefficients against printed table", pseries),
    ("1f", "bicoloured tree counts", tree_counts),
    ("1g", "modified PDE", modified_pde_terms),
    ("1h", "Euler operator of expanded Lagrangian vs functional equation", symmetric_criticality),
    ("1t", "symbolic runtime", runtime),
    ("2a", "omega skew and closed", skew_closed),
    ("2b", "Hamiltonian flow check", flow_check),
    ("2c", "invariants conserved on shell", conservation),
    ("2d", "energy and rotation invariant commute", bracket),
    ("2e", "Legendre round trip in special cases", legendre),
    ("2f", "Euler operator annihilates total derivatives", null_lagrangians),
    ("3a", "fig4 rotation invariant drift", fig4),
    ("3b", "fig5 modified invariants drift less", fig5),
    ("3c", "fig7 multistep residual and amplitudes", fig7),
    ("3d", "order studies", order_studies),
    ("4", "naive Lagrangian substitution differs", naive_substitution),
];

fn pipelines() -> Result<Pipes> {
    let p0 = rotating_pipeline(0)?;
    let start = Instant::now();
    let p2 = rotating_pipeline(2)?;
    let t2 = start.elapsed();
    let start = Instant::now();
    let p4 = rotating_pipeline(4)?;
    let t4 = start.elapsed();
    Ok(Pipes { p0, p2, p4, t2, t4 })
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        for (id, title, _) in CHECKS {
            println!("{id} {title}: test");
        }
        return ExitCode::SUCCESS;
    }
    let pipes = match pipelines() {
        Ok(p) => p,
        Err(e) => {
            println!("FAIL  symbolic pipelines: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let lines: Vec<Line> = CHECKS.iter().map(|(id, title, f)| Line { id, title, result: f(&pipes) }).collect();

    let mut unexpected = 0;
    let mut passed = 0;
    for l in &lines {
        let xfail = EXPECTED_FAIL.contains(&l.id);
        let (tag, detail) = match &l.result {
            Ok(d) => {
                passed += 1;
                if xfail {
                    unexpected += 1;
                    ("PASS", format!("{d} [listed as expected failure]"))
                } else {
                    ("PASS", d.clone())
                }
            }
            Err(e) => {
                if xfail {
                    ("FAIL", format!("{e:#} [expected]"))
                } else {
                    unexpected += 1;
                    ("FAIL", format!("{e:#}"))
                }
            }
        };
        println!("{tag}  {:<3} {}: {detail}", l.id, l.title);
    }
    println!("acceptance: {passed}/{} passed, {} expected failures, {unexpected} unexpected", lines.len(), EXPECTED_FAIL.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
