use bea_core::jetcalc::euler_vector;
use bea_core::stencil::*;
use bea_core::symcore::{parse, Context, Expr, RatFunc, C};
use proptest::prelude::*;

fn p(s: &str, ctx: &Context) -> Expr {
    parse(s, ctx).unwrap()
}

#[test]
fn rotating_leading_terms() {
    let pr = StencilProblem::rotating(2).unwrap();
    let r = expand_functional_equation(&pr).unwrap();
    assert_eq!(r[0].coeff(0), p("(alpha^2 + V1)*phi1 + 2*c*alpha*d1phi2 - (c^2-1)*d2phi1", &pr.ctx));
    assert_eq!(r[1].coeff(0), p("(alpha^2 + V1)*phi2 - 2*c*alpha*d1phi1 - (c^2-1)*d2phi2", &pr.ctx));
    assert!(r.iter().all(|s| s.coeff(1).is_zero()));
}

#[test]
fn only_even_powers_appear() {
    let pr = StencilProblem::rotating(5).unwrap();
    for s in expand_functional_equation(&pr).unwrap() {
        assert!(s.coeff(1).is_zero() && s.coeff(3).is_zero() && s.coeff(5).is_zero());
        assert!(!s.coeff(4).is_zero());
    }
}

#[test]
fn three_point_stencil_correction() {
    let pr = StencilProblem::travelling(1, 4).unwrap().specialize(C, &RatFunc::zero()).unwrap();
    let r = expand_functional_equation(&pr).unwrap();
    // (φ(ξ+Δx) − 2φ + φ(ξ−Δx))/Δx² = Σ 2Δx^{2k−2}/(2k)! φ^{(2k)}
    assert_eq!(r[0].coeff(2), p("dx^2/12*d4phi1", &pr.ctx));
    assert_eq!(r[0].coeff(4), p("dx^4/360*d6phi1", &pr.ctx));
}

#[test]
fn symmetric_criticality_in_several_dimensions() {
    for pr in [StencilProblem::rotating(4).unwrap(), StencilProblem::travelling(1, 4).unwrap(), StencilProblem::travelling(2, 2).unwrap()] {
        let l = expand_discrete_lagrangian(&pr).unwrap();
        assert_eq!(euler_vector(&l, &pr.ctx).unwrap(), expand_functional_equation(&pr).unwrap());
    }
}

#[test]
fn dropping_null_terms_keeps_the_equations() {
    let pr = StencilProblem::rotating(2).unwrap();
    let raw = expand_discrete_lagrangian_raw(&pr).unwrap();
    let clean = expand_discrete_lagrangian(&pr).unwrap();
    assert_eq!(euler_vector(&raw, &pr.ctx).unwrap(), euler_vector(&clean, &pr.ctx).unwrap());
    assert!(clean.order() <= raw.order());
}

#[test]
fn modified_pde_terms() {
    let ctx = Context::new(1).unwrap();
    let m = modified_pde(2, 2).unwrap();
    assert_eq!(m.to_text(&ctx), "0 = u_tt + dt^2/12*u_tttt - u_xx - dx^2/12*u_xxxx - gradW(u)");
    let m0 = modified_pde(0, 0).unwrap();
    assert_eq!(m0.to_text(&ctx), "0 = u_tt - u_xx - gradW(u)");
    assert!(modified_pde(6, 2).is_err());
}

#[test]
fn rotation_needs_a_plane() {
    let e = StencilProblem::five_point(3, RatFunc::var(0), RatFunc::var(1), RatFunc::var(2), RatFunc::var(3), Potential::Radial, 2);
    assert!(e.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Lower truncations are prefixes of higher ones.
    #[test]
    fn truncations_are_prefixes(lo in 0usize..3, extra in 1usize..3) {
        let hi = lo + extra;
        let a = expand_functional_equation(&StencilProblem::rotating(lo).unwrap()).unwrap();
        let b = expand_functional_equation(&StencilProblem::rotating(hi).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for k in 0..=lo {
                prop_assert_eq!(x.coeff(k), y.coeff(k));
            }
        }
    }
}
