//! Expressions in normal form: sparse polynomials over jet variables and
//! potential derivatives with rational-function coefficients.

use alloc::vec::Vec;
use core::cmp::Ordering;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use super::context::{Context, MAX_DIM};
use super::ratfunc::RatFunc;

/// An indeterminate of the expression ring.
///
/// `Jet` is φ_comp^(order) with a 0-based component. `V(k)` is the k-th
/// derivative of the radial potential evaluated at ⟨φ,φ⟩. `W(counts)` is the
/// partial derivative of a general potential W(φ) taking `counts[j]`
/// derivatives in direction j.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Atom {
    Jet { comp: u8, order: u8 },
    V(u8),
    W([u8; MAX_DIM]),
}

impl Atom {
    pub fn jet(comp: usize, order: usize) -> Atom {
        Atom::Jet { comp: comp as u8, order: order as u8 }
    }

    pub fn w_index(indices: &[usize]) -> Atom {
        let mut counts = [0u8; MAX_DIM];
        for &i in indices {
            counts[i] += 1;
        }
        Atom::W(counts)
    }

    pub fn is_jet(&self) -> bool {
        matches!(self, Atom::Jet { .. })
    }

    pub fn jet_order(&self) -> Option<usize> {
        match self {
            Atom::Jet { order, .. } => Some(*order as usize),
            _ => None,
        }
    }

    pub fn is_potential(&self) -> bool {
        !self.is_jet()
    }
}

pub fn w_order(counts: &[u8; MAX_DIM]) -> usize {
    counts.iter().map(|&c| c as usize).sum()
}

/// A power product of atoms, factors sorted by atom.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Mono(SmallVec<[(Atom, u16); 4]>);

impl Mono {
    pub fn one() -> Mono {
        Mono(SmallVec::new())
    }

    pub fn atom(a: Atom) -> Mono {
        let mut v = SmallVec::new();
        v.push((a, 1));
        Mono(v)
    }

    pub fn power(a: Atom, e: u16) -> Mono {
        if e == 0 {
            return Mono::one();
        }
        let mut v = SmallVec::new();
        v.push((a, e));
        Mono(v)
    }

    pub fn factors(&self) -> &[(Atom, u16)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn jet_degree(&self) -> u32 {
        self.0.iter().filter(|(a, _)| a.is_jet()).map(|(_, e)| *e as u32).sum()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| *e as u32).sum()
    }

    pub fn exponent(&self, a: Atom) -> u16 {
        self.0.iter().find(|(b, _)| *b == a).map(|(_, e)| *e).unwrap_or(0)
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        if o.is_one() {
            return self.clone();
        }
        if self.is_one() {
            return o.clone();
        }
        let mut out = SmallVec::with_capacity(self.0.len() + o.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < o.0.len() {
            match self.0[i].0.cmp(&o.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(o.0[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0, self.0[i].1 + o.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&o.0[j..]);
        Mono(out)
    }

    pub fn mul_atom(&self, a: Atom) -> Mono {
        self.mul(&Mono::atom(a))
    }

    /// Removes one power of the factor at position `idx`.
    pub fn reduce_at(&self, idx: usize) -> Mono {
        let mut out = self.0.clone();
        if out[idx].1 == 1 {
            out.remove(idx);
        } else {
            out[idx].1 -= 1;
        }
        Mono(out)
    }

    /// Removes the factor at position `idx` entirely.
    pub fn remove_at(&self, idx: usize) -> Mono {
        let mut out = self.0.clone();
        out.remove(idx);
        Mono(out)
    }

    pub fn from_factors(mut f: Vec<(Atom, u16)>) -> Mono {
        f.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: SmallVec<[(Atom, u16); 4]> = SmallVec::new();
        for (a, e) in f {
            if e == 0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.0 == a => last.1 += e,
                _ => out.push((a, e)),
            }
        }
        Mono(out)
    }
}

impl Ord for Mono {
    fn cmp(&self, o: &Self) -> Ordering {
        self.jet_degree()
            .cmp(&o.jet_degree())
            .then(self.degree().cmp(&o.degree()))
            .then_with(|| self.0.as_slice().cmp(o.0.as_slice()))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Normal-form expression: a sorted list of monomials with non-zero coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Expr {
    terms: Vec<(Mono, RatFunc)>,
}

impl Expr {
    pub fn zero() -> Expr {
        Expr { terms: Vec::new() }
    }

    pub fn one() -> Expr {
        Expr::constant(RatFunc::one())
    }

    pub fn constant(c: RatFunc) -> Expr {
        if c.is_zero() {
            Expr::zero()
        } else {
            Expr { terms: alloc::vec![(Mono::one(), c)] }
        }
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(RatFunc::int(n))
    }

    pub fn ratio(p: i64, q: i64) -> Expr {
        Expr::constant(RatFunc::ratio(p, q))
    }

    pub fn param(v: usize) -> Expr {
        Expr::constant(RatFunc::var(v))
    }

    pub fn atom(a: Atom) -> Expr {
        Expr { terms: alloc::vec![(Mono::atom(a), RatFunc::one())] }
    }

    /// φ_comp^(order), 0-based component.
    pub fn jet(comp: usize, order: usize) -> Expr {
        Expr::atom(Atom::jet(comp, order))
    }

    pub fn v(k: usize) -> Expr {
        Expr::atom(Atom::V(k as u8))
    }

    pub fn w(indices: &[usize]) -> Expr {
        Expr::atom(Atom::w_index(indices))
    }

    pub fn term(m: Mono, c: RatFunc) -> Expr {
        if c.is_zero() {
            Expr::zero()
        } else {
            Expr { terms: alloc::vec![(m, c)] }
        }
    }

    pub fn from_terms(mut terms: Vec<(Mono, RatFunc)>) -> Expr {
        if terms.len() <= 1 {
            terms.retain(|t| !t.1.is_zero());
            return Expr { terms };
        }
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Mono, RatFunc)> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == m => last.1 = last.1.add(&c),
                _ => {
                    if matches!(out.last(), Some(l) if l.1.is_zero()) {
                        out.pop();
                    }
                    out.push((m, c));
                }
            }
        }
        if matches!(out.last(), Some(l) if l.1.is_zero()) {
            out.pop();
        }
        Expr { terms: out }
    }

    pub fn terms(&self) -> &[(Mono, RatFunc)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The coefficient when the expression contains no atoms.
    pub fn as_constant(&self) -> Option<RatFunc> {
        match self.terms.len() {
            0 => Some(RatFunc::zero()),
            1 if self.terms[0].0.is_one() => Some(self.terms[0].1.clone()),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn neg(&self) -> Expr {
        Expr { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect() }
    }

    pub fn add(&self, o: &Expr) -> Expr {
        self.merge(o, false)
    }

    pub fn sub(&self, o: &Expr) -> Expr {
        self.merge(o, true)
    }

    fn merge(&self, o: &Expr, negate: bool) -> Expr {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return if negate { o.neg() } else { o.clone() };
        }
        let a = &self.terms;
        let b = &o.terms;
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((b[j].0.clone(), if negate { b[j].1.neg() } else { b[j].1.clone() }));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate { a[i].1.sub(&b[j].1) } else { a[i].1.add(&b[j].1) };
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        for t in &b[j..] {
            out.push((t.0.clone(), if negate { t.1.neg() } else { t.1.clone() }));
        }
        Expr { terms: out }
    }

    pub fn mul(&self, o: &Expr) -> Expr {
        if self.is_zero() || o.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = o.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return o.scale(&c);
        }
        let mut prods = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                prods.push((ma.mul(mb), ca.mul(cb)));
            }
        }
        Expr::from_terms(prods)
    }

    pub fn scale(&self, c: &RatFunc) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        Expr { terms: self.terms.iter().map(|(m, cc)| (m.clone(), cc.mul(c))).collect() }
    }

    pub fn scale_int(&self, k: i64) -> Expr {
        self.scale(&RatFunc::int(k))
    }

    pub fn mul_mono(&self, m: &Mono) -> Expr {
        Expr { terms: self.terms.iter().map(|(mm, c)| (mm.mul(m), c.clone())).collect() }.resorted()
    }

    fn resorted(mut self) -> Expr {
        self.terms.sort_by(|a, b| a.0.cmp(&b.0));
        self
    }

    pub fn div_coeff(&self, c: &RatFunc) -> Result<Expr> {
        if c.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.scale(&c.inv()))
    }

    pub fn pow(&self, e: u32) -> Expr {
        let mut acc = Expr::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn map_coeffs(&self, f: impl Fn(&RatFunc) -> RatFunc) -> Expr {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| (m.clone(), f(c)))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        Expr { terms }
    }

    /// Replaces the coefficient parameter `v` by `r`.
    pub fn substitute_param(&self, v: usize, r: &RatFunc) -> Expr {
        self.map_coeffs(|c| c.substitute(v, r))
    }

    pub fn pdiff_param(&self, v: usize) -> Expr {
        self.map_coeffs(|c| c.derivative(v))
    }

    /// Highest jet order present, `None` without jet variables.
    pub fn max_jet_order(&self) -> Option<usize> {
        self.terms
            .iter()
            .flat_map(|(m, _)| m.factors().iter().filter_map(|(a, _)| a.jet_order()))
            .max()
    }

    pub fn max_potential_order(&self) -> usize {
        let mut best = 0;
        for (m, _) in &self.terms {
            for (a, _) in m.factors() {
                match a {
                    Atom::V(k) => best = best.max(*k as usize),
                    Atom::W(c) => best = best.max(w_order(c)),
                    _ => {}
                }
            }
        }
        best
    }

    pub fn contains_atom(&self, pred: impl Fn(&Atom) -> bool) -> bool {
        self.terms.iter().any(|(m, _)| m.factors().iter().any(|(a, _)| pred(a)))
    }

    pub fn contains_jet_order_at_least(&self, k: usize) -> bool {
        self.contains_atom(|a| matches!(a.jet_order(), Some(o) if o >= k))
    }

    /// Sorted list of distinct atoms.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut v: Vec<Atom> = self.terms.iter().flat_map(|(m, _)| m.factors().iter().map(|(a, _)| *a)).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Partial derivative with respect to the jet coordinate φ_comp^(order).
    ///
    /// For order 0 the chain rule reaches through potential atoms:
    /// ∂V_k/∂φ_j = 2φ_j V_{k+1} and ∂W_a/∂φ_j = W_{a+e_j}.
    pub fn pdiff_jet(&self, comp: usize, order: usize, ctx: &Context) -> Result<Expr> {
        let target = Atom::jet(comp, order);
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            for (idx, (a, e)) in m.factors().iter().enumerate() {
                let e = *e as i64;
                match a {
                    _ if *a == target => {
                        out.push((m.reduce_at(idx), c.scale_int(e)));
                    }
                    Atom::V(k) if order == 0 => {
                        ctx.check_pot(*k as usize + 1)?;
                        let nm = m.reduce_at(idx).mul_atom(Atom::V(k + 1)).mul_atom(Atom::jet(comp, 0));
                        out.push((nm, c.scale_int(2 * e)));
                    }
                    Atom::W(cnt) if order == 0 => {
                        ctx.check_pot(w_order(cnt) + 1)?;
                        let mut n = *cnt;
                        n[comp] += 1;
                        out.push((m.reduce_at(idx).mul_atom(Atom::W(n)), c.scale_int(e)));
                    }
                    _ => {}
                }
            }
        }
        Ok(Expr::from_terms(out))
    }

    /// Partial derivative treating the atom `a` as an independent symbol.
    pub fn pdiff_atom_plain(&self, a: Atom) -> Expr {
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            for (idx, (b, e)) in m.factors().iter().enumerate() {
                if *b == a {
                    out.push((m.reduce_at(idx), c.scale_int(*e as i64)));
                }
            }
        }
        Expr::from_terms(out)
    }

    /// Total derivative d/dξ.
    pub fn total_derivative(&self, ctx: &Context) -> Result<Expr> {
        let n = ctx.dim();
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            for (idx, (a, e)) in m.factors().iter().enumerate() {
                let e = *e as i64;
                match a {
                    Atom::Jet { comp, order } => {
                        ctx.check_jet(*order as usize + 1)?;
                        let nm = m.reduce_at(idx).mul_atom(Atom::Jet { comp: *comp, order: order + 1 });
                        out.push((nm, c.scale_int(e)));
                    }
                    Atom::V(k) => {
                        ctx.check_pot(*k as usize + 1)?;
                        let base = m.reduce_at(idx).mul_atom(Atom::V(k + 1));
                        let cc = c.scale_int(2 * e);
                        for j in 0..n {
                            let nm = base.mul_atom(Atom::jet(j, 0)).mul_atom(Atom::jet(j, 1));
                            out.push((nm, cc.clone()));
                        }
                    }
                    Atom::W(cnt) => {
                        ctx.check_pot(w_order(cnt) + 1)?;
                        let base = m.reduce_at(idx);
                        let cc = c.scale_int(e);
                        for j in 0..n {
                            let mut nn = *cnt;
                            nn[j] += 1;
                            let nm = base.mul_atom(Atom::W(nn)).mul_atom(Atom::jet(j, 1));
                            out.push((nm, cc.clone()));
                        }
                    }
                }
            }
        }
        Ok(Expr::from_terms(out))
    }

    /// Replaces atoms for which `f` returns a value; other atoms are kept.
    pub fn substitute(&self, f: &dyn Fn(Atom) -> Option<Expr>) -> Expr {
        let mut acc: Vec<(Mono, RatFunc)> = Vec::new();
        let mut cache: alloc::collections::BTreeMap<Atom, Option<Expr>> = alloc::collections::BTreeMap::new();
        for (m, c) in &self.terms {
            let mut kept: Vec<(Atom, u16)> = Vec::new();
            let mut factor = Expr::constant(c.clone());
            let mut replaced = false;
            for (a, e) in m.factors() {
                let r = cache.entry(*a).or_insert_with(|| f(*a)).clone();
                match r {
                    Some(r) => {
                        replaced = true;
                        factor = factor.mul(&r.pow(*e as u32));
                    }
                    None => kept.push((*a, *e)),
                }
            }
            if !replaced {
                acc.push((m.clone(), c.clone()));
            } else {
                let km = Mono::from_factors(kept);
                for (fm, fc) in factor.terms {
                    acc.push((fm.mul(&km), fc));
                }
            }
        }
        Expr::from_terms(acc)
    }

    /// Interpreted evaluation.
    pub fn eval(&self, params: &[f64], atom: &mut dyn FnMut(Atom) -> f64) -> f64 {
        let mut s = 0.0;
        for (m, c) in &self.terms {
            let mut t = c.eval_f64(params);
            for (a, e) in m.factors() {
                t *= libm::pow(atom(*a), *e as f64);
            }
            s += t;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> Context {
        Context::new(2).unwrap()
    }

    #[test]
    fn cancellation_to_zero() {
        let p1 = Expr::jet(0, 0);
        let p2 = Expr::jet(1, 0);
        let s = p1.add(&p2);
        let e = s.mul(&s).sub(&p1.mul(&p1)).sub(&p1.mul(&p2).scale_int(2)).sub(&p2.mul(&p2));
        assert!(e.is_zero());
    }

    #[test]
    fn chain_rule_on_potential() {
        let d = Expr::v(0).pdiff_jet(0, 0, &ctx()).unwrap();
        assert_eq!(d, Expr::v(1).mul(&Expr::jet(0, 0)).scale_int(2));
    }

    #[test]
    fn total_derivative_of_potential() {
        let d = Expr::v(0).total_derivative(&ctx()).unwrap();
        let inner = Expr::jet(0, 0).mul(&Expr::jet(0, 1)).add(&Expr::jet(1, 0).mul(&Expr::jet(1, 1)));
        assert_eq!(d, Expr::v(1).mul(&inner).scale_int(2));
    }

    #[test]
    fn overflow_is_reported() {
        let c = Context::with_limits(2, 2, 1).unwrap();
        assert!(Expr::jet(0, 2).total_derivative(&c).is_err());
        assert!(Expr::v(1).pdiff_jet(0, 0, &c).is_err());
    }
}
