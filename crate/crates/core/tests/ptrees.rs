use bea_core::ptrees::{
    characteristic_functions, elementary_differential, enumerate_trees, fit_travelling_wave, labelled_trees,
    non_rotating_problem, BiTree, Colour,
};
use bea_core::stencil::expand_functional_equation;
use bea_core::symcore::{Expr, RatFunc, C, DT, DX};

fn poly(terms: &[(i64, u32, u32, u32)], den: i64) -> RatFunc {
    // (coefficient, power of dt, power of dx, power of c)
    let (dt, dx, c) = (RatFunc::var(DT), RatFunc::var(DX), RatFunc::var(C));
    terms
        .iter()
        .fold(RatFunc::zero(), |acc, &(k, a, b, e)| {
            acc.add(&RatFunc::int(k).mul(&dt.pow(a as i32)).mul(&dx.pow(b as i32)).mul(&c.pow(e as i32)))
        })
        .mul(&RatFunc::ratio(1, den))
}

#[test]
fn tree_counts() {
    for (order, n) in [(2, 2), (4, 4), (6, 10), (8, 27)] {
        let ts = enumerate_trees(order).unwrap();
        assert_eq!(ts.len(), n, "order {}", order);
        assert!(ts.iter().all(|t| t.order() == order));
    }
    assert!(enumerate_trees(3).is_err());
    assert!(enumerate_trees(0).is_err());
}

#[test]
fn labels_cover_enumeration() {
    for order in [2, 4, 6] {
        let mut a = labelled_trees(order).unwrap();
        a.sort();
        assert_eq!(a, enumerate_trees(order).unwrap());
    }
}

#[test]
fn canonical_form_ignores_labelling() {
    let a = BiTree::new(vec![Colour::White, Colour::Black, Colour::Black, Colour::White], vec![(0, 1), (1, 2), (2, 3)]).unwrap();
    let b = BiTree::from_black(&[(0, 1)], &[1, 1]).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.canonical(), "B(B(W),W)");
    assert!(BiTree::new(vec![Colour::White, Colour::White], vec![(0, 1)]).is_err());
    assert!(BiTree::new(vec![Colour::Black, Colour::White, Colour::White], vec![(0, 1), (1, 2)]).is_err());
    assert_eq!(a.to_ascii().lines().count(), 4);
}

#[test]
fn elementary_differentials_order_two() {
    let ts = labelled_trees(2).unwrap();
    let f1 = elementary_differential(&ts[0], 2).unwrap();
    let f2 = elementary_differential(&ts[1], 2).unwrap();
    let w1 = Expr::w(&[0]);
    let w2 = Expr::w(&[1]);
    assert_eq!(f1, w1.mul(&w1).add(&w2.mul(&w2)));
    let (p1, p2) = (Expr::jet(0, 1), Expr::jet(1, 1));
    let want = Expr::w(&[0, 0])
        .mul(&p1.mul(&p1))
        .add(&Expr::w(&[0, 1]).mul(&p1.mul(&p2)).scale_int(2))
        .add(&Expr::w(&[1, 1]).mul(&p2.mul(&p2)));
    assert_eq!(f2, want);
}

#[test]
fn fitted_coefficients() {
    let (fit, _, _) = fit_travelling_wave(2, 6).unwrap();
    let c = RatFunc::var(C);
    let k = c.mul(&c).sub(&RatFunc::one());
    let a22 = poly(&[(1, 2, 0, 4), (-1, 0, 2, 0)], 12).mul(&k.inv());
    assert_eq!(fit.get(2, 2).unwrap(), &a22);
    // 1-D hand reduction: a_2,1 = s/(2k²), a_2,2 = s/k with s = (c⁴Δt² − Δx²)/12
    assert_eq!(fit.get(2, 1).unwrap(), &a22.mul(&k.inv()).mul(&RatFunc::ratio(1, 2)));
    let b1 = poly(&[(-3, 4, 0, 8), (-2, 4, 0, 6), (10, 2, 2, 4), (-2, 0, 4, 2), (-3, 0, 4, 0)], 2160);
    let b2 = poly(&[(-2, 4, 0, 8), (-3, 4, 0, 6), (10, 2, 2, 4), (-3, 0, 4, 2), (-2, 0, 4, 0)], 720);
    let b3 = poly(
        &[
            (10, 6, 0, 12),
            (22, 6, 0, 10),
            (3, 6, 0, 8),
            (-77, 4, 2, 8),
            (28, 2, 4, 6),
            (-28, 4, 2, 6),
            (-3, 0, 6, 4),
            (77, 2, 4, 4),
            (-22, 0, 6, 2),
            (-10, 0, 6, 0),
        ],
        302400,
    );
    let b4 = poly(
        &[
            (72, 6, 0, 12),
            (94, 6, 0, 10),
            (9, 6, 0, 8),
            (-413, 4, 2, 8),
            (112, 2, 4, 6),
            (-112, 4, 2, 6),
            (-9, 0, 6, 4),
            (413, 2, 4, 4),
            (-94, 0, 6, 2),
            (-72, 0, 6, 0),
        ],
        120960,
    );
    let four = [(1, -2, &b1), (6, -3, &b1), (1, -3, &b2), (3, -4, &b1)];
    for (i, (m, e, b)) in four.iter().enumerate() {
        let want = RatFunc::int(*m).mul(&k.pow(*e)).mul(b);
        assert_eq!(fit.get(4, i + 1).unwrap(), &want, "a_4,{}", i + 1);
    }
    let six = [
        (1, -3, &b3),
        (60, -5, &b3),
        (10, -5, &b3),
        (1, -6, &b4),
        (2, -5, &b4),
        (45, -5, &b3),
        (20, -4, &b3),
        (1, -4, &b4),
        (15, -4, &b3),
        (15, -6, &b3),
    ];
    for (i, (m, e, b)) in six.iter().enumerate() {
        let want = RatFunc::int(*m).mul(&k.pow(*e)).mul(b);
        assert_eq!(fit.get(6, i + 1).unwrap(), &want, "a_6,{}", i + 1);
    }
}

/// Power series in h² over RatFunc, truncated after `n` terms.
fn ser_mul(a: &[RatFunc], b: &[RatFunc]) -> Vec<RatFunc> {
    let n = a.len();
    let mut out = vec![RatFunc::zero(); n];
    for i in 0..n {
        for j in 0..n - i {
            out[i + j] = out[i + j].add(&a[i].mul(&b[j]));
        }
    }
    out
}

fn ser_inv(a: &[RatFunc]) -> Vec<RatFunc> {
    let n = a.len();
    let mut out = vec![RatFunc::zero(); n];
    let i0 = a[0].inv();
    out[0] = i0.clone();
    for m in 1..n {
        let mut acc = RatFunc::zero();
        for j in 1..=m {
            acc = acc.add(&a[j].mul(&out[m - j]));
        }
        out[m] = acc.mul(&i0).neg();
    }
    out
}

// W = ½μφ² in one dimension: the stencil maps e^{λξ} to itself, so λ² solves
// c²(2cosh(λcΔt) − 2)/(cΔt)² − (2cosh(λΔx) − 2)/Δx² = μ exactly, while the
// modified Lagrangian ½Aφ̇² + ½Bφ² gives λ² = B/A.
#[test]
fn fit_matches_linear_dispersion() {
    let (fit, _, _) = fit_travelling_wave(2, 6).unwrap();
    let (c, dt, dx) = (RatFunc::var(C), RatFunc::var(DT), RatFunc::var(DX));
    let mu = RatFunc::var(4);
    let k = c.mul(&c).sub(&RatFunc::one());
    let n = 4;
    let cosh_part = |x: &[RatFunc], s: &RatFunc| -> Vec<RatFunc> {
        // Σ_m 2 x^m s^{2m−2} h^{2m−2}/(2m)!
        let mut out = vec![RatFunc::zero(); n];
        let mut xp = x.to_vec();
        let mut fact = RatFunc::int(2);
        for m in 1..=n {
            let f = RatFunc::int(2).mul(&s.pow(2 * m as i32 - 2)).mul(&fact.inv());
            for (i, xi) in xp.iter().enumerate() {
                if i + m - 1 < n {
                    out[i + m - 1] = out[i + m - 1].add(&xi.mul(&f));
                }
            }
            xp = ser_mul(&xp, x);
            fact = fact.mul(&RatFunc::int(((2 * m + 1) * (2 * m + 2)) as i64));
        }
        out
    };
    let mut x = vec![RatFunc::zero(); n];
    for m in 0..n {
        let a = cosh_part(&x, &c.mul(&dt));
        let b = cosh_part(&x, &dx);
        let mut res = c.mul(&c).mul(&a[m]).sub(&b[m]);
        if m == 0 {
            res = res.sub(&mu);
        }
        x[m] = x[m].sub(&res.mul(&k.inv()));
    }
    let g = |o: usize, i: usize| fit.get(o, i).unwrap().scale_int(2);
    let a = vec![k.clone(), g(2, 2).mul(&mu), g(4, 3).mul(&mu.pow(2)), g(6, 3).mul(&mu.pow(3))];
    let b = vec![mu.clone(), g(2, 1).mul(&mu.pow(2)), g(4, 4).mul(&mu.pow(3)), g(6, 4).mul(&mu.pow(4))];
    assert_eq!(ser_mul(&b, &ser_inv(&a)), x);
}

#[test]
fn fit_is_dimension_independent() {
    let (f2, _, _) = fit_travelling_wave(2, 4).unwrap();
    let (f3, _, _) = fit_travelling_wave(3, 4).unwrap();
    assert_eq!(f2.coeffs, f3.coeffs);
}

#[test]
fn fitted_leading_lagrangian() {
    let (fit, _, _) = fit_travelling_wave(2, 2).unwrap();
    let k = RatFunc::var(C).pow(2).sub(&RatFunc::one());
    let want = Expr::w(&[])
        .add(&Expr::jet(0, 1).pow(2).scale(&k.mul(&RatFunc::ratio(1, 2))))
        .add(&Expr::jet(1, 1).pow(2).scale(&k.mul(&RatFunc::ratio(1, 2))));
    assert_eq!(fit.lagrangian.coeff(0), want);
}

#[test]
fn characteristic_identity() {
    let p = non_rotating_problem(2, 4).unwrap();
    let pair = characteristic_functions(&p).unwrap();
    assert_eq!(pair.rho.len(), 5);
    assert!(pair.rho_at_one().is_zero());
    let lhs = pair.expand(&p, 4).unwrap();
    let res = expand_functional_equation(&p).unwrap();
    let f = RatFunc::var(C).pow(2).mul(&RatFunc::var(DT).pow(2)).scale_int(-4);
    for (a, r) in lhs.iter().zip(&res) {
        assert_eq!(a, &r.scale(&f));
    }
}

#[test]
fn three_point_support() {
    let p = non_rotating_problem(1, 2).unwrap();
    let q = p.specialize(DX, &RatFunc::var(C).mul(&RatFunc::var(DT))).unwrap();
    let pair = characteristic_functions(&q).unwrap();
    assert_eq!(pair.rho.len(), 3);
    let c2 = RatFunc::var(C).pow(2);
    assert_eq!(pair.rho[0].1, c2.scale_int(4).sub(&RatFunc::int(4)));
}

#[test]
fn elementary_differentials_in_one_dimension() {
    let ts = labelled_trees(4).unwrap();
    let f: Vec<Expr> = ts.iter().map(|t| elementary_differential(t, 1).unwrap()).collect();
    let (w1, w2, w3, w4) = (Expr::w(&[0]), Expr::w(&[0, 0]), Expr::w(&[0, 0, 0]), Expr::w(&[0, 0, 0, 0]));
    let p = Expr::jet(0, 1);
    assert_eq!(f[0], w4.mul(&p.pow(4)));
    assert_eq!(f[1], w1.mul(&w3).mul(&p.pow(2)));
    assert_eq!(f[2], w2.pow(2).mul(&p.pow(2)));
    assert_eq!(f[3], w1.pow(2).mul(&w2));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn canonical_form_survives_relabelling(order in prop::sample::select(vec![2usize, 4, 6]), seed in any::<u64>()) {
            for t in enumerate_trees(order).unwrap() {
                let n = t.nodes();
                let mut perm: Vec<usize> = (0..n).collect();
                let mut s = seed | 1;
                for i in (1..n).rev() {
                    s ^= s << 13;
                    s ^= s >> 7;
                    s ^= s << 17;
                    perm.swap(i, (s % (i as u64 + 1)) as usize);
                }
                let mut colours = vec![Colour::Black; n];
                for v in 0..n {
                    colours[perm[v]] = t.colours()[v];
                }
                let edges: Vec<(usize, usize)> = t.edges().iter().rev().map(|&(a, b)| (perm[b], perm[a])).collect();
                let u = BiTree::new(colours, edges).unwrap();
                prop_assert_eq!(u.canonical(), t.canonical());
                prop_assert_eq!(u.order(), order);
            }
        }
    }
}
