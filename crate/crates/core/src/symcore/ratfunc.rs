//! Rational functions over Q in the problem parameters.
//!
//! A value is `num / den` with `gcd(num, den) = 1` as polynomials, coprime
//! integer contents and a positive leading coefficient in `den`. This
//! representation is unique, so structural equality is value equality.

use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};

use super::gcd::gcd;
use super::poly::{Monom, Poly};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RatFunc({:?} / {:?})", self.num.terms(), self.den.terms())
    }
}

impl RatFunc {
    pub fn zero() -> RatFunc {
        RatFunc { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> RatFunc {
        RatFunc { num: Poly::one(), den: Poly::one() }
    }

    pub fn int(n: i64) -> RatFunc {
        RatFunc { num: Poly::constant(BigInt::from(n)), den: Poly::one() }
    }

    pub fn from_bigint(n: BigInt) -> RatFunc {
        RatFunc { num: Poly::constant(n), den: Poly::one() }
    }

    pub fn ratio(p: i64, q: i64) -> RatFunc {
        assert!(q != 0, "zero denominator");
        RatFunc::from_parts(Poly::constant(BigInt::from(p)), Poly::constant(BigInt::from(q)))
    }

    pub fn var(v: usize) -> RatFunc {
        RatFunc { num: Poly::var(v), den: Poly::one() }
    }

    pub fn from_poly(p: Poly) -> RatFunc {
        RatFunc { num: p, den: Poly::one() }
    }

    /// Reduces an arbitrary fraction; panics on a zero denominator.
    pub fn from_parts(num: Poly, den: Poly) -> RatFunc {
        assert!(!den.is_zero(), "zero denominator in rational function");
        if num.is_zero() {
            return RatFunc::zero();
        }
        let (num, den) = if den.is_constant() || num.is_constant() && num.len() == 1 {
            (num, den)
        } else {
            let g = gcd(&num, &den);
            if g.is_one() {
                (num, den)
            } else {
                (num.div_exact(&g).expect("gcd divides numerator"), den.div_exact(&g).expect("gcd divides denominator"))
            }
        };
        RatFunc::fix_contents(num, den)
    }

    fn fix_contents(num: Poly, den: Poly) -> RatFunc {
        let cn = num.content();
        let cd = den.content();
        let mut g = cn.gcd(&cd);
        if den.lead_coeff_sign() < 0 {
            g = -g;
        }
        if g.is_one() {
            RatFunc { num, den }
        } else {
            RatFunc { num: num.div_int_exact(&g), den: den.div_int_exact(&g) }
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    /// The value as p/q when it is a rational number.
    pub fn as_rational(&self) -> Option<(BigInt, BigInt)> {
        Some((self.num.constant_value()?, self.den.constant_value()?))
    }

    pub fn is_negative_constant(&self) -> bool {
        matches!(self.as_rational(), Some((n, _)) if n.is_negative())
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn add(&self, o: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            let n = self.num.add(&o.num);
            if self.den.is_one() {
                return RatFunc { num: n, den: self.den.clone() };
            }
            return RatFunc::from_parts(n, self.den.clone());
        }
        if self.den.is_constant() && o.den.is_constant() {
            let a = self.den.constant_value().unwrap();
            let b = o.den.constant_value().unwrap();
            let n = self.num.scale(&b).add(&o.num.scale(&a));
            return RatFunc::fix_contents(n, Poly::constant(a * b));
        }
        let g = gcd(&self.den, &o.den);
        let d1 = self.den.div_exact(&g).expect("gcd divides");
        let d2 = o.den.div_exact(&g).expect("gcd divides");
        let n = self.num.mul(&d2).add(&o.num.mul(&d1));
        if n.is_zero() {
            return RatFunc::zero();
        }
        let den = self.den.mul(&d2);
        if g.is_one() {
            return RatFunc::fix_contents(n, den);
        }
        let h = gcd(&n, &g);
        if h.is_one() {
            RatFunc::fix_contents(n, den)
        } else {
            RatFunc::fix_contents(n.div_exact(&h).unwrap(), den.div_exact(&h).unwrap())
        }
    }

    pub fn sub(&self, o: &RatFunc) -> RatFunc {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &RatFunc) -> RatFunc {
        if self.is_zero() || o.is_zero() {
            return RatFunc::zero();
        }
        if self.is_one() {
            return o.clone();
        }
        if o.is_one() {
            return self.clone();
        }
        if self.den.is_constant() && o.den.is_constant() {
            return RatFunc::fix_contents(self.num.mul(&o.num), self.den.mul(&o.den));
        }
        let (n1, d2) = cancel(&self.num, &o.den);
        let (n2, d1) = cancel(&o.num, &self.den);
        RatFunc::fix_contents(n1.mul(&n2), d1.mul(&d2))
    }

    pub fn inv(&self) -> RatFunc {
        assert!(!self.is_zero(), "inverse of zero in the coefficient field");
        RatFunc::fix_contents(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, o: &RatFunc) -> RatFunc {
        self.mul(&o.inv())
    }

    pub fn pow(&self, e: i32) -> RatFunc {
        if e < 0 {
            return self.inv().pow(-e);
        }
        RatFunc { num: self.num.pow(e as u32), den: self.den.pow(e as u32) }
    }

    pub fn scale_int(&self, k: i64) -> RatFunc {
        self.mul(&RatFunc::int(k))
    }

    pub fn derivative(&self, v: usize) -> RatFunc {
        let dn = self.num.derivative(v);
        let dd = self.den.derivative(v);
        if dd.is_zero() {
            return RatFunc::from_parts(dn, self.den.clone());
        }
        let n = dn.mul(&self.den).sub(&self.num.mul(&dd));
        RatFunc::from_parts(n, self.den.mul(&self.den))
    }

    pub fn vars_mask(&self) -> u8 {
        self.num.vars_mask() | self.den.vars_mask()
    }

    /// Replaces variable `v` by a rational function.
    pub fn substitute(&self, v: usize, r: &RatFunc) -> RatFunc {
        if self.vars_mask() & (1 << v) == 0 {
            return self.clone();
        }
        let a = subst_poly(&self.num, v, r);
        let b = subst_poly(&self.den, v, r);
        a.div(&b)
    }

    pub fn eval_f64(&self, vals: &[f64]) -> f64 {
        self.num.eval_f64(vals) / self.den.eval_f64(vals)
    }
}

fn cancel(n: &Poly, d: &Poly) -> (Poly, Poly) {
    if n.is_constant() || d.is_constant() {
        return (n.clone(), d.clone());
    }
    let g = gcd(n, d);
    if g.is_one() {
        (n.clone(), d.clone())
    } else {
        (n.div_exact(&g).unwrap(), d.div_exact(&g).unwrap())
    }
}

fn subst_poly(p: &Poly, v: usize, r: &RatFunc) -> RatFunc {
    let u = p.to_univariate(v);
    let mut acc = RatFunc::zero();
    for c in u.iter().rev() {
        acc = acc.mul(r).add(&RatFunc::from_poly(c.clone()));
    }
    acc
}

/// Builds a polynomial from (exponent vector, integer) pairs; used by parsers and tests.
pub fn poly_from_exps(terms: &[(&[(usize, u8)], i64)]) -> Poly {
    let mut out: Vec<(Monom, BigInt)> = Vec::new();
    for (exps, c) in terms {
        let mut m = Monom::ONE;
        for &(v, e) in exps.iter() {
            m = m.mul(Monom::var(v, e));
        }
        out.push((m, BigInt::from(*c)));
    }
    Poly::from_terms(out)
}
