//! Sparse multivariate polynomials with big-integer coefficients.
//!
//! Exponents of up to eight variables are packed into one `u64`, one byte per
//! variable, variable 0 in the most significant byte. Terms are kept sorted in
//! decreasing graded-lexicographic order, so the first term is the leading one.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub const MAX_VARS: usize = 8;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Debug)]
pub struct Monom(u64);

const HIGH_BITS: u64 = 0x8080_8080_8080_8080;

impl Monom {
    pub const ONE: Monom = Monom(0);

    pub fn var(v: usize, e: u8) -> Monom {
        debug_assert!(v < MAX_VARS);
        Monom((e as u64) << (8 * (7 - v)))
    }

    #[inline]
    pub fn exp(self, v: usize) -> u8 {
        (self.0 >> (8 * (7 - v))) as u8
    }

    pub fn degree(self) -> u32 {
        self.0.to_be_bytes().iter().map(|&b| b as u32).sum()
    }

    pub fn is_one(self) -> bool {
        self.0 == 0
    }

    pub fn mul(self, o: Monom) -> Monom {
        if (self.0 | o.0) & HIGH_BITS == 0 {
            return Monom(self.0 + o.0);
        }
        let a = self.0.to_be_bytes();
        let b = o.0.to_be_bytes();
        let mut r = [0u8; 8];
        for i in 0..8 {
            r[i] = a[i].checked_add(b[i]).expect("exponent overflow in coefficient polynomial");
        }
        Monom(u64::from_be_bytes(r))
    }

    pub fn divides(self, o: Monom) -> bool {
        let a = self.0.to_be_bytes();
        let b = o.0.to_be_bytes();
        a.iter().zip(b.iter()).all(|(x, y)| x <= y)
    }

    /// `o / self`, assuming `self.divides(o)`.
    pub fn div_into(self, o: Monom) -> Monom {
        debug_assert!(self.divides(o));
        Monom(o.0 - self.0)
    }

    pub fn min(self, o: Monom) -> Monom {
        let a = self.0.to_be_bytes();
        let b = o.0.to_be_bytes();
        let mut r = [0u8; 8];
        for i in 0..8 {
            r[i] = a[i].min(b[i]);
        }
        Monom(u64::from_be_bytes(r))
    }

    pub fn with_exp(self, v: usize, e: u8) -> Monom {
        let shift = 8 * (7 - v);
        Monom((self.0 & !(0xffu64 << shift)) | ((e as u64) << shift))
    }

    pub fn vars_mask(self) -> u8 {
        let mut m = 0u8;
        for v in 0..MAX_VARS {
            if self.exp(v) != 0 {
                m |= 1 << v;
            }
        }
        m
    }
}

impl Ord for Monom {
    fn cmp(&self, o: &Self) -> Ordering {
        self.degree().cmp(&o.degree()).then(self.0.cmp(&o.0))
    }
}

impl PartialOrd for Monom {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Poly {
    terms: Vec<(Monom, BigInt)>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Poly {
        Poly::constant(BigInt::one())
    }

    pub fn constant(c: BigInt) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(Monom::ONE, c)] }
        }
    }

    pub fn var(v: usize) -> Poly {
        Poly { terms: vec![(Monom::var(v, 1), BigInt::one())] }
    }

    pub fn term(m: Monom, c: BigInt) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    /// Builds a polynomial from arbitrary (possibly repeated, unsorted) terms.
    pub fn from_terms(mut terms: Vec<(Monom, BigInt)>) -> Poly {
        terms.sort_by(|a, b| b.0.cmp(&a.0));
        let mut out: Vec<(Monom, BigInt)> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == m => last.1 += c,
                _ => {
                    if let Some(last) = out.last() {
                        if last.1.is_zero() {
                            out.pop();
                        }
                    }
                    out.push((m, c));
                }
            }
        }
        if let Some(last) = out.last() {
            if last.1.is_zero() {
                out.pop();
            }
        }
        Poly { terms: out }
    }

    pub fn terms(&self) -> &[(Monom, BigInt)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn constant_value(&self) -> Option<BigInt> {
        if self.terms.is_empty() {
            Some(BigInt::zero())
        } else if self.is_constant() {
            Some(self.terms[0].1.clone())
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn lead(&self) -> Option<&(Monom, BigInt)> {
        self.terms.first()
    }

    pub fn lead_coeff_sign(&self) -> i32 {
        match self.terms.first() {
            None => 0,
            Some((_, c)) if c.is_negative() => -1,
            _ => 1,
        }
    }

    pub fn vars_mask(&self) -> u8 {
        self.terms.iter().fold(0, |m, (mo, _)| m | mo.vars_mask())
    }

    pub fn degree_in(&self, v: usize) -> u8 {
        self.terms.iter().map(|(m, _)| m.exp(v)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    /// Componentwise minimum of the exponents over all terms.
    pub fn min_monom(&self) -> Monom {
        let mut it = self.terms.iter();
        match it.next() {
            None => Monom::ONE,
            Some((m0, _)) => it.fold(*m0, |acc, (m, _)| acc.min(*m)),
        }
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect() }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        self.merge(o, false)
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.merge(o, true)
    }

    fn merge(&self, o: &Poly, negate: bool) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + o.terms.len());
        let (mut i, mut j) = (0, 0);
        let a = &self.terms;
        let b = &o.terms;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push((b[j].0, if negate { -&b[j].1 } else { b[j].1.clone() }));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate { &a[i].1 - &b[j].1 } else { &a[i].1 + &b[j].1 };
                    if !c.is_zero() {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        for t in &b[j..] {
            out.push((t.0, if negate { -&t.1 } else { t.1.clone() }));
        }
        Poly { terms: out }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        if o.terms.len() == 1 {
            return self.mul_term(o.terms[0].0, &o.terms[0].1);
        }
        if self.terms.len() == 1 {
            return o.mul_term(self.terms[0].0, &self.terms[0].1);
        }
        let mut prods = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                prods.push((ma.mul(*mb), ca * cb));
            }
        }
        Poly::from_terms(prods)
    }

    pub fn mul_term(&self, m: Monom, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(mm, cc)| (mm.mul(m), cc * c)).collect() }
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        self.mul_term(Monom::ONE, c)
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Divides every coefficient by the integer `c`, which must divide them exactly.
    pub fn div_int_exact(&self, c: &BigInt) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, cc)| (*m, cc / c)).collect() }
    }

    /// Divides by a monomial dividing every term.
    pub fn div_monom(&self, m: Monom) -> Poly {
        Poly { terms: self.terms.iter().map(|(mm, c)| (m.div_into(*mm), c.clone())).collect() }
    }

    /// Exact division; `None` when `d` does not divide `self` in Z[x].
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        assert!(!d.is_zero(), "division by the zero polynomial");
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if d.terms.len() == 1 {
            let (dm, dc) = &d.terms[0];
            let mut out = Vec::with_capacity(self.terms.len());
            for (m, c) in &self.terms {
                if !dm.divides(*m) {
                    return None;
                }
                let (q, r) = c.div_rem(dc);
                if !r.is_zero() {
                    return None;
                }
                out.push((dm.div_into(*m), q));
            }
            return Some(Poly { terms: out });
        }
        let (dm, dc) = d.terms[0].clone();
        let mut q = Vec::new();
        let mut r = self.clone();
        while let Some((rm, rc)) = r.terms.first().cloned() {
            if !dm.divides(rm) {
                return None;
            }
            let (qc, rem) = rc.div_rem(&dc);
            if !rem.is_zero() {
                return None;
            }
            let qm = dm.div_into(rm);
            r = r.sub(&d.mul_term(qm, &qc));
            q.push((qm, qc));
        }
        Some(Poly { terms: q })
    }

    /// Gcd of the integer coefficients, non-negative.
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for (_, c) in &self.terms {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    pub fn derivative(&self, v: usize) -> Poly {
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e > 0 {
                out.push((m.with_exp(v, e - 1), c * BigInt::from(e)));
            }
        }
        Poly::from_terms(out)
    }

    /// Coefficients with respect to variable `v`, indexed by the power of `v`.
    pub fn to_univariate(&self, v: usize) -> Vec<Poly> {
        let deg = self.degree_in(v) as usize;
        let mut buckets: Vec<Vec<(Monom, BigInt)>> = vec![Vec::new(); deg + 1];
        for (m, c) in &self.terms {
            let e = m.exp(v) as usize;
            buckets[e].push((m.with_exp(v, 0), c.clone()));
        }
        buckets.into_iter().map(Poly::from_terms).collect()
    }

    pub fn from_univariate(v: usize, coeffs: &[Poly]) -> Poly {
        let mut out = Vec::new();
        for (e, p) in coeffs.iter().enumerate() {
            let ve = Monom::var(v, e as u8);
            for (m, c) in &p.terms {
                out.push((m.mul(ve), c.clone()));
            }
        }
        Poly::from_terms(out)
    }

    pub fn eval_f64(&self, vals: &[f64]) -> f64 {
        let mut s = 0.0;
        for (m, c) in &self.terms {
            let mut t = bigint_to_f64(c);
            for (v, &x) in vals.iter().enumerate().take(MAX_VARS) {
                let e = m.exp(v);
                if e > 0 {
                    t *= libm::pow(x, e as f64);
                }
            }
            s += t;
        }
        s
    }
}

pub fn bigint_to_f64(c: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    c.to_f64().unwrap_or(f64::NAN)
}

/// Multiplies a univariate polynomial (coefficients in the other variables) by a scalar polynomial.
pub(crate) fn uni_scale(a: &[Poly], s: &Poly) -> Vec<Poly> {
    a.iter().map(|p| p.mul(s)).collect()
}

pub(crate) fn uni_trim(a: &mut Vec<Poly>) {
    while let Some(last) = a.last() {
        if last.is_zero() {
            a.pop();
        } else {
            break;
        }
    }
}
