//! Multivariate polynomial gcd over the integers.
//!
//! Monomial factors are split off first, variables occurring in only one
//! operand are eliminated through contents, and the remaining case runs a
//! primitive polynomial remainder sequence in one variable with coefficients
//! in the others. Results are primitive with a positive leading coefficient.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::One;

use super::poly::{uni_scale, uni_trim, Poly, MAX_VARS};

/// Makes the integer content 1 and the leading coefficient positive.
pub fn normalize_primitive(p: &Poly) -> Poly {
    if p.is_zero() {
        return Poly::zero();
    }
    let mut c = p.content();
    if p.lead_coeff_sign() < 0 {
        c = -c;
    }
    if c.is_one() {
        p.clone()
    } else {
        p.div_int_exact(&c)
    }
}

pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return normalize_primitive(b);
    }
    if b.is_zero() {
        return normalize_primitive(a);
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    let ma = a.min_monom();
    let mb = b.min_monom();
    let m = ma.min(mb);
    let a1 = normalize_primitive(&a.div_monom(ma));
    let b1 = normalize_primitive(&b.div_monom(mb));
    let g = gcd_core(&a1, &b1);
    if m.is_one() {
        g
    } else {
        g.mul_term(m, &BigInt::one())
    }
}

fn first_var(mask: u8) -> Option<usize> {
    (0..MAX_VARS).find(|v| mask & (1 << v) != 0)
}

fn content_in(a: &Poly, v: usize) -> Poly {
    let u = a.to_univariate(v);
    uni_content(&u)
}

fn uni_content(u: &[Poly]) -> Poly {
    let mut g = Poly::zero();
    for c in u {
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, c);
        if g.is_one() {
            break;
        }
    }
    g
}

fn uni_div(u: &[Poly], c: &Poly) -> Vec<Poly> {
    if c.is_one() {
        return u.to_vec();
    }
    u.iter()
        .map(|p| p.div_exact(c).expect("content divides every coefficient"))
        .collect()
}

fn uni_primitive(u: &[Poly]) -> Vec<Poly> {
    let c = uni_content(u);
    uni_div(u, &c)
}

fn prem(p: &[Poly], q: &[Poly]) -> Vec<Poly> {
    let dq = q.len() - 1;
    let lc = &q[dq];
    let mut r = p.to_vec();
    uni_trim(&mut r);
    while !r.is_empty() && r.len() - 1 >= dq {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        r = uni_scale(&r, lc);
        for (i, qi) in q.iter().enumerate() {
            let k = i + dr - dq;
            r[k] = r[k].sub(&lr.mul(qi));
        }
        debug_assert!(r[dr].is_zero());
        uni_trim(&mut r);
    }
    r
}

fn gcd_core(a: &Poly, b: &Poly) -> Poly {
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.clone();
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if large.div_exact(small).is_some() {
        return small.clone();
    }
    let va = a.vars_mask();
    let vb = b.vars_mask();
    if let Some(v) = first_var(va & !vb) {
        return gcd(&content_in(a, v), b);
    }
    if let Some(v) = first_var(vb & !va) {
        return gcd(a, &content_in(b, v));
    }
    let v = (0..MAX_VARS)
        .filter(|v| va & (1 << v) != 0)
        .min_by_key(|&v| a.degree_in(v).max(b.degree_in(v)))
        .expect("non-constant polynomial has a variable");
    let ua = a.to_univariate(v);
    let ub = b.to_univariate(v);
    let ca = uni_content(&ua);
    let cb = uni_content(&ub);
    let c = gcd(&ca, &cb);
    let mut p = uni_div(&ua, &ca);
    let mut q = uni_div(&ub, &cb);
    if p.len() < q.len() {
        core::mem::swap(&mut p, &mut q);
    }
    loop {
        let r = prem(&p, &q);
        if r.is_empty() {
            break;
        }
        if r.len() == 1 {
            q = alloc::vec![Poly::one()];
            break;
        }
        p = q;
        q = uni_primitive(&r);
    }
    let g = normalize_primitive(&Poly::from_univariate(v, &q));
    let g = if c.is_one() { g } else { normalize_primitive(&g.mul(&c)) };
    g
}
