use bea_core::hamstruct::*;
use bea_core::jetcalc::total_derivative_series;
use bea_core::stencil::StencilProblem;
use bea_core::symcore::{parse, Atom, Context, Expr, HSeries};

fn p(s: &str, ctx: &Context) -> Expr {
    parse(s, ctx).unwrap()
}

fn rotating(n: usize) -> Pipeline {
    Pipeline::run(&StencilProblem::rotating(n).unwrap()).unwrap()
}

const NORM: &str = "(phi1^2+phi2^2)";
const NORM_D: &str = "(d1phi1^2+d1phi2^2)";

#[test]
fn hamiltonian_leading_term() {
    let pipe = rotating(2);
    let ctx = pipe.ctx();
    let want = p(&format!("(-alpha^2*{NORM} + (c^2-1)*{NORM_D} - V0)/2"), ctx);
    assert_eq!(pipe.ham.h.coeff(0), want);
    assert_eq!(pipe.ostrogradsky.h.coeff(0), want);
}

#[test]
fn ostrogradsky_second_order_term() {
    let pipe = rotating(2);
    let ctx = pipe.ctx();
    let want = p(
        "(alpha^4*dt^2*(phi1^2+phi2^2) - 6*alpha^2*c^2*dt^2*(d1phi1^2+d1phi2^2) \
         + 8*alpha*c^3*dt^2*(d1phi2*d2phi1 - d1phi1*d2phi2) \
         + 2*(c^4*dt^2-dx^2)*(d3phi1*d1phi1 + d3phi2*d1phi2) \
         + (dx^2-c^4*dt^2)*(d2phi1^2+d2phi2^2))/24",
        ctx,
    );
    assert_eq!(pipe.ostrogradsky.h.coeff(2), want);
    assert!(pipe.ostrogradsky.h.coeff(1).is_zero());
}

#[test]
fn modified_hamiltonian_coefficients() {
    let pipe = rotating(2);
    let ctx = pipe.ctx();
    let d1 = "(2*alpha^2*V1*(dx^2-c^4*dt^2) + V1^2*(dx^2-c^4*dt^2) + alpha^4*((1-2*c^2)*dt^2+dx^2))/(24*(c^2-1)^2)";
    let d2 = "(alpha^2*(-3*c^4*dt^2 + c^2*(5*dx^2-3*dt^2) + dx^2) + (c^2-1)*V1*(c^4*dt^2-dx^2))/(12*(c^2-1)^2)";
    let d3 = "alpha*c*(c^2*dt^2-dx^2)*(alpha^2+V1)/(3*(c^2-1)^2)";
    let d4 = "V2*(c^4*dt^2-dx^2)/(6*(c^2-1))";
    let want = p(
        &format!(
            "({d1})*{NORM} + ({d2})*{NORM_D} + ({d3})*(d1phi1*phi2 - d1phi2*phi1) + ({d4})*(phi1*d1phi1+phi2*d1phi2)^2"
        ),
        ctx,
    );
    assert_eq!(pipe.ham.h.coeff(2), want);
    assert!(pipe.ham.h.coeff(1).is_zero());
    assert!(pipe.ham.h.coeff(3).is_zero());
}

#[test]
fn symplectic_matrix_leading_block() {
    let pipe = rotating(2);
    let ctx = pipe.ctx();
    let rows = [
        ["0", "2*alpha*c", "1-c^2", "0"],
        ["-2*alpha*c", "0", "0", "1-c^2"],
        ["c^2-1", "0", "0", "0"],
        ["0", "c^2-1", "0", "0"],
    ];
    for (a, row) in rows.iter().enumerate() {
        for (b, s) in row.iter().enumerate() {
            assert_eq!(pipe.ham.omega[a][b].coeff(0), p(s, ctx), "entry ({a}, {b})");
        }
    }
}

fn second_order_blocks(ctx: &Context, w1: &str, w2: &str, z_scalar: &str, z_swap: bool) -> Vec<Vec<Expr>> {
    let zk = "-(c^4*dt^2-dx^2)*V2/(3*(c^2-1))";
    let phi = ["phi1", "phi2"];
    let mut m = vec![vec![Expr::zero(); 4]; 4];
    let w1 = p(w1, ctx);
    let w2 = p(w2, ctx);
    m[0][1] = w1.clone();
    m[1][0] = w1.neg();
    m[2][3] = w2.clone();
    m[3][2] = w2.neg();
    for i in 0..2 {
        for j in 0..2 {
            let on = if z_swap { i != j } else { i == j };
            let mut z = p(&format!("({zk})*{}*{}", phi[i], phi[j]), ctx);
            if on {
                z = z.add(&p(z_scalar, ctx));
            }
            m[i][2 + j] = z.clone();
            m[2 + i][j] = z.neg();
        }
    }
    m
}

const W2: &str = "alpha*c*(c^2*dt^2-dx^2)/(3*(c^2-1))";
const Z_SCALAR: &str = "-alpha^2*(c^2*((c^2-3)*dt^2+dx^2)+dx^2)/(6*(c^2-1)^2) + (c^2-1)*(dx^2-c^4*dt^2)*V1/(6*(c^2-1)^2)";

#[test]
fn symplectic_matrix_second_order_block() {
    let pipe = rotating(2);
    let ctx = pipe.ctx();
    let w1 = "alpha*c*(alpha^2*(dx^2-dt^2) + (dx^2-2*c^2*dt^2+c^4*dt^2)*(V1+(phi1^2+phi2^2)*V2))/(3*(c^2-1)^2)";
    let want = second_order_blocks(ctx, w1, W2, Z_SCALAR, false);
    for a in 0..4 {
        for b in 0..4 {
            assert_eq!(pipe.ham.omega[a][b].coeff(2), want[a][b], "entry ({a}, {b})");
        }
    }
}

/// The literal printed forms of w₁ and Z do not generate the reduced flow.
#[test]
fn printed_second_order_block_is_inconsistent() {
    let pipe = rotating(2);
    let ctx = pipe.ctx();
    let w1 = "alpha*c*(alpha*(dx^2-dt^2) + (dx^2-2*c^2*dt^2+c^4*dt^2)*(V1+(phi1^2+phi2^2)*V2))/(3*(c^2-1))";
    let printed = second_order_blocks(ctx, w1, W2, Z_SCALAR, true);
    let mut hs = pipe.ham.clone();
    for a in 0..4 {
        for b in 0..4 {
            let mut s = hs.omega[a][b].clone();
            s.set(2, printed[a][b].clone());
            hs.omega[a][b] = s;
        }
    }
    let r = hamiltonian_flow_check(&hs, &pipe.reduced, ctx).unwrap();
    assert!(r.iter().any(|s| !s.is_zero()));
}

#[test]
fn flow_check_vanishes() {
    for n in [0, 2, 4] {
        let pipe = rotating(n);
        let r = hamiltonian_flow_check(&pipe.ham, &pipe.reduced, pipe.ctx()).unwrap();
        assert!(r.iter().all(|s| s.is_zero()), "N = {n}");
        assert!(pipe.ham.is_skew());
        pipe.ham.check_closed(pipe.ctx()).unwrap();
    }
}

#[test]
fn leading_flow_is_continuous_equation() {
    let pipe = rotating(0);
    let ctx = pipe.ctx();
    let z = pipe.ham.vector_field(ctx).unwrap();
    assert_eq!(z[0].coeff(0), Expr::jet(0, 1));
    assert_eq!(z[2].coeff(0), p("((alpha^2 + V1)*phi1 + 2*c*alpha*d1phi2)/(c^2-1)", ctx));
}

fn on_shell_derivative(s: &HSeries, pipe: &Pipeline) -> HSeries {
    let ctx = pipe.ctx();
    let map = pipe.reduced.rhs.iter().enumerate().map(|(j, f)| (Atom::jet(j, 2), f.clone())).collect();
    total_derivative_series(s, 1, ctx).unwrap().substitute(&map)
}

#[test]
fn modified_hamiltonian_is_conserved() {
    for n in [2, 4] {
        let pipe = rotating(n);
        assert!(on_shell_derivative(&pipe.ham.h, &pipe).is_zero(), "N = {n}");
    }
}

#[test]
fn fourth_order_form_depends_on_velocity() {
    let pipe = rotating(4);
    let (vertical, block) = check_vertical_lagrangian(&pipe.ham);
    assert!(!vertical);
    let uses_velocity = pipe
        .ham
        .omega
        .iter()
        .flatten()
        .any(|s| s.coeff(4).contains_atom(|a| a.jet_order() == Some(1)));
    assert!(uses_velocity);
    assert!(pipe.ham.omega.iter().flatten().all(|s| !s.coeff(2).contains_atom(|a| a.jet_order() == Some(1))));
    assert_eq!(block.len(), 2);
}

#[test]
fn special_cases_are_vertically_lagrangian() {
    let base = StencilProblem::rotating(2).unwrap();
    for case in [LegendreCase::Alpha0, LegendreCase::C0, LegendreCase::DxEqCDt] {
        let q = special_case(&base, case).unwrap();
        let pipe = Pipeline::run(&q).unwrap();
        assert!(check_vertical_lagrangian(&pipe.ham).0, "{}", case.name());
    }
}

#[test]
fn legendre_round_trip_is_exact() {
    for n in [2, 4] {
        let base = StencilProblem::rotating(n).unwrap();
        for case in [LegendreCase::Alpha0, LegendreCase::C0, LegendreCase::DxEqCDt] {
            let (l, pipe) = legendre_first_order(&base, case).unwrap();
            let r = legendre_round_trip(&l, &pipe.reduced, pipe.ctx()).unwrap();
            assert!(r.iter().all(|s| s.is_zero()), "{} at N = {n}", case.name());
        }
    }
}

#[test]
fn legendre_leading_terms() {
    let base = StencilProblem::rotating(2).unwrap();
    let (l, pipe) = legendre_first_order(&base, LegendreCase::DxEqCDt).unwrap();
    let ctx = pipe.ctx();
    let l0 = p(&format!("(alpha^2*{NORM} + 2*alpha*c*(phi1*d1phi2 - phi2*d1phi1) + (c^2-1)*{NORM_D} + V0)/2"), ctx);
    assert_eq!(l.l.coeff(0), l0);

    let (l, pipe) = legendre_first_order(&base, LegendreCase::C0).unwrap();
    let ctx = pipe.ctx();
    // time differences at c = 0 act as the mass term kappa·φ
    assert_eq!(l.l.coeff(0), p(&format!("(kappa*{NORM} - {NORM_D} + V0)/2"), ctx));
}

#[test]
fn general_case_has_no_first_order_lagrangian() {
    let base = StencilProblem::rotating(2).unwrap();
    assert!(legendre_first_order(&base, LegendreCase::General).is_err());
    let pipe = Pipeline::run(&base).unwrap();
    assert!(first_order_lagrangian(&pipe.ham, LegendreCase::General, pipe.ctx()).is_err());
}

#[test]
fn primitive_has_canonical_leading_part() {
    let pipe = rotating(2);
    let ctx = pipe.ctx();
    let lambda = local_primitive(&pipe.ham, ctx).unwrap();
    // −𝔭 d𝔮 with 𝔭 = (c²−1)φ̇ − cαJφ
    assert_eq!(lambda[0].coeff(0), p("-((c^2-1)*d1phi1 - c*alpha*phi2)", ctx));
    assert_eq!(lambda[1].coeff(0), p("-((c^2-1)*d1phi2 + c*alpha*phi1)", ctx));
    assert!(lambda[2].coeff(0).is_zero() && lambda[3].coeff(0).is_zero());
}

#[test]
fn homotopy_recovers_exact_forms() {
    let ctx = Context::new(2).unwrap();
    let beta: Vec<HSeries> = ["phi1^2*d1phi2", "alpha*phi2*d1phi1^3", "phi1*phi2", "c*d1phi1*d1phi2 + dt*phi1^3"]
        .iter()
        .map(|s| HSeries::from_expr(p(s, &ctx), 0))
        .collect();
    let d = |s: &HSeries, a: usize| s.try_map(|e| e.pdiff_jet(a % 2, a / 2, &ctx)).unwrap();
    let omega: Vec<Vec<HSeries>> =
        (0..4).map(|a| (0..4).map(|b| d(&beta[a], b).sub(&d(&beta[b], a))).collect()).collect();
    let lambda = homotopy_primitive(&omega, 2, &ctx).unwrap();
    for a in 0..4 {
        for b in 0..4 {
            assert_eq!(d(&lambda[a], b).sub(&d(&lambda[b], a)), omega[a][b]);
        }
    }
}

#[test]
fn lagrangian_side_substitution_is_wrong() {
    let pr = StencilProblem::rotating(2).unwrap();
    let (naive, reduced) = naive_lagrangian_substitution(&pr).unwrap();
    assert_eq!(naive[0].coeff(0), reduced.rhs[0].coeff(0));
    assert_ne!(naive[0].coeff(2), reduced.rhs[0].coeff(2));
}
