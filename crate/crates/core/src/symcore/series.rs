//! Truncated power series in the step parameter h with expression coefficients.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use super::expr::{Atom, Expr, Mono};
use super::ratfunc::RatFunc;

/// Σ_{k ≤ trunc} h^k · coeffs[k]; powers above `trunc` are unknown.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct HSeries {
    coeffs: Vec<Expr>,
    trunc: usize,
}

impl HSeries {
    pub fn zero(trunc: usize) -> HSeries {
        HSeries { coeffs: Vec::new(), trunc }
    }

    pub fn from_expr(e: Expr, trunc: usize) -> HSeries {
        HSeries::monomial(e, 0, trunc)
    }

    /// h^power · e.
    pub fn monomial(e: Expr, power: usize, trunc: usize) -> HSeries {
        let mut s = HSeries::zero(trunc);
        s.set(power, e);
        s
    }

    pub fn from_coeffs(coeffs: Vec<Expr>, trunc: usize) -> HSeries {
        let mut s = HSeries { coeffs, trunc };
        s.coeffs.truncate(trunc + 1);
        s.trim();
        s
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(e) if e.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn coeff(&self, k: usize) -> Expr {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn coeff_ref(&self, k: usize) -> Option<&Expr> {
        self.coeffs.get(k)
    }

    /// Stored non-zero terms as (power, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (usize, &Expr)> {
        self.coeffs.iter().enumerate().filter(|(_, e)| !e.is_zero())
    }

    pub fn set(&mut self, k: usize, e: Expr) {
        if k > self.trunc {
            return;
        }
        if self.coeffs.len() <= k {
            self.coeffs.resize(k + 1, Expr::zero());
        }
        self.coeffs[k] = e;
        self.trim();
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|e| e.is_zero())
    }

    pub fn truncate(&self, n: usize) -> HSeries {
        let n = n.min(self.trunc);
        HSeries::from_coeffs(self.coeffs.iter().take(n + 1).cloned().collect(), n)
    }

    pub fn add(&self, o: &HSeries) -> HSeries {
        let t = self.trunc.min(o.trunc);
        let n = self.coeffs.len().max(o.coeffs.len()).min(t + 1);
        HSeries::from_coeffs((0..n).map(|k| self.coeff(k).add(&o.coeff(k))).collect(), t)
    }

    pub fn sub(&self, o: &HSeries) -> HSeries {
        let t = self.trunc.min(o.trunc);
        let n = self.coeffs.len().max(o.coeffs.len()).min(t + 1);
        HSeries::from_coeffs((0..n).map(|k| self.coeff(k).sub(&o.coeff(k))).collect(), t)
    }

    pub fn neg(&self) -> HSeries {
        self.map(|e| e.neg())
    }

    /// Lowest power with a non-zero coefficient, or trunc + 1 for zero.
    pub fn valuation(&self) -> usize {
        self.coeffs.iter().position(|e| !e.is_zero()).unwrap_or(self.trunc + 1)
    }

    /// Product, known up to min(v(a) + t(b), v(b) + t(a)).
    pub fn mul(&self, o: &HSeries) -> HSeries {
        let t = (self.valuation() + o.trunc)
            .min(o.valuation() + self.trunc)
            .min(self.trunc.max(o.trunc));
        let mut out = alloc::vec![Expr::zero(); (self.coeffs.len() + o.coeffs.len()).min(t + 1)];
        for (i, a) in self.terms() {
            for (j, b) in o.terms() {
                if i + j <= t {
                    out[i + j] = out[i + j].add(&a.mul(b));
                }
            }
        }
        HSeries::from_coeffs(out, t)
    }

    pub fn mul_expr(&self, e: &Expr) -> HSeries {
        self.map(|x| x.mul(e))
    }

    pub fn scale(&self, c: &RatFunc) -> HSeries {
        self.map(|x| x.scale(c))
    }

    /// Multiplies by h^k, keeping the truncation order.
    pub fn shift_up(&self, k: usize) -> HSeries {
        let mut v = alloc::vec![Expr::zero(); k];
        v.extend(self.coeffs.iter().cloned());
        HSeries::from_coeffs(v, self.trunc)
    }

    /// Divides by h^k; the lowest k coefficients must vanish.
    pub fn shift_down(&self, k: usize) -> Result<HSeries> {
        for i in 0..k.min(self.coeffs.len()) {
            if !self.coeffs[i].is_zero() {
                return Err(Error::Truncation(format!("h^{} coefficient is not zero", i)));
            }
        }
        let v = self.coeffs.iter().skip(k).cloned().collect();
        Ok(HSeries::from_coeffs(v, self.trunc.saturating_sub(k)))
    }

    pub fn with_trunc(&self, t: usize) -> HSeries {
        HSeries::from_coeffs(self.coeffs.clone(), t)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> HSeries {
        HSeries::from_coeffs(self.coeffs.iter().map(f).collect(), self.trunc)
    }

    pub fn try_map(&self, f: impl Fn(&Expr) -> Result<Expr>) -> Result<HSeries> {
        let v: Result<Vec<Expr>> = self.coeffs.iter().map(f).collect();
        Ok(HSeries::from_coeffs(v?, self.trunc))
    }

    pub fn max_jet_order(&self) -> Option<usize> {
        self.coeffs.iter().filter_map(|e| e.max_jet_order()).max()
    }

    pub fn contains_jet_order_at_least(&self, k: usize) -> bool {
        self.coeffs.iter().any(|e| e.contains_jet_order_at_least(k))
    }

    /// Replaces atoms by series. The result is truncated where every
    /// substituted factor is still known: a term at h^p using a series
    /// truncated at t' is reliable up to h^(p+t').
    pub fn substitute(&self, map: &BTreeMap<Atom, HSeries>) -> HSeries {
        let mut t = self.trunc;
        for (p, e) in self.terms() {
            for (m, _) in e.terms() {
                for (a, _) in m.factors() {
                    if let Some(r) = map.get(a) {
                        t = t.min(p + r.trunc);
                    }
                }
            }
        }
        let mut pow_cache: BTreeMap<(Atom, u16), HSeries> = BTreeMap::new();
        let mut out: Vec<Vec<(Mono, RatFunc)>> = alloc::vec![Vec::new(); t + 1];
        for (p, e) in self.terms() {
            if p > t {
                break;
            }
            let room = t - p;
            for (m, c) in e.terms() {
                let mut kept: Vec<(Atom, u16)> = Vec::new();
                let mut factor: Option<HSeries> = None;
                for &(a, k) in m.factors() {
                    if let Some(r) = map.get(&a) {
                        let rp = pow_cache
                            .entry((a, k))
                            .or_insert_with(|| {
                                let mut acc = r.clone();
                                for _ in 1..k {
                                    acc = acc.mul(r);
                                }
                                acc
                            })
                            .truncate(room);
                        factor = Some(match factor {
                            None => rp,
                            Some(f) => f.truncate(room).mul(&rp),
                        });
                    } else {
                        kept.push((a, k));
                    }
                }
                match factor {
                    None => out[p].push((m.clone(), c.clone())),
                    Some(f) => {
                        let km = Mono::from_factors(kept);
                        for (q, fe) in f.terms() {
                            if p + q > t {
                                break;
                            }
                            for (fm, fc) in fe.terms() {
                                out[p + q].push((fm.mul(&km), fc.mul(c)));
                            }
                        }
                    }
                }
            }
        }
        HSeries::from_coeffs(out.into_iter().map(Expr::from_terms).collect(), t)
    }
}

/// Inverts a matrix whose pivots can be chosen among non-zero pure coefficients.
pub fn invert_matrix(a: &[Vec<Expr>]) -> Result<Vec<Vec<Expr>>> {
    let n = a.len();
    let mut m: Vec<Vec<Expr>> = a.to_vec();
    let mut inv: Vec<Vec<Expr>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| matches!(m[r][col].as_constant(), Some(c) if !c.is_zero()));
        let piv = match piv {
            Some(p) => p,
            None => {
                let msg = if (col..n).all(|r| m[r][col].is_zero()) {
                    format!("column {} has no non-zero pivot", col)
                } else {
                    format!("column {} has no pivot in the coefficient field", col)
                };
                return Err(Error::SingularLeading(msg));
            }
        };
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col].as_constant().unwrap().inv();
        for j in 0..n {
            m[col][j] = m[col][j].scale(&p);
            inv[col][j] = inv[col][j].scale(&p);
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for j in 0..n {
                let t = m[col][j].mul(&f);
                m[r][j] = m[r][j].sub(&t);
                let t = inv[col][j].mul(&f);
                inv[r][j] = inv[r][j].sub(&t);
            }
        }
    }
    Ok(inv)
}

pub fn mat_vec(a: &[Vec<Expr>], x: &[Expr]) -> Vec<Expr> {
    a.iter()
        .map(|row| row.iter().zip(x).fold(Expr::zero(), |s, (r, v)| s.add(&r.mul(v))))
        .collect()
}

/// Solves A·x = rhs order by order in h.
pub fn solve_linear_series(a: &[Vec<HSeries>], rhs: &[HSeries]) -> Result<Vec<HSeries>> {
    let n = rhs.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidProblem(format!("matrix shape does not match right-hand side of length {}", n)));
    }
    let t = a
        .iter()
        .flat_map(|r| r.iter().map(|s| s.trunc()))
        .chain(rhs.iter().map(|s| s.trunc()))
        .min()
        .unwrap_or(0);
    let a0: Vec<Vec<Expr>> = a.iter().map(|r| r.iter().map(|s| s.coeff(0)).collect()).collect();
    let inv = invert_matrix(&a0)?;
    let mut xs: Vec<Vec<Expr>> = Vec::with_capacity(t + 1);
    for k in 0..=t {
        let mut r: Vec<Expr> = rhs.iter().map(|s| s.coeff(k)).collect();
        for m in 1..=k {
            let am: Vec<Vec<Expr>> = a.iter().map(|row| row.iter().map(|s| s.coeff(m)).collect()).collect();
            if am.iter().all(|row| row.iter().all(|e| e.is_zero())) {
                continue;
            }
            let prod = mat_vec(&am, &xs[k - m]);
            for i in 0..n {
                r[i] = r[i].sub(&prod[i]);
            }
        }
        xs.push(mat_vec(&inv, &r));
    }
    Ok((0..n)
        .map(|i| HSeries::from_coeffs(xs.iter().map(|x| x[i].clone()).collect(), t))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telescoping_below_truncation() {
        let e = Expr::jet(0, 0);
        let a = HSeries::from_expr(Expr::one(), 3).add(&HSeries::monomial(e.clone(), 2, 3));
        let b = HSeries::from_expr(Expr::one(), 3).sub(&HSeries::monomial(e, 2, 3));
        assert_eq!(a.mul(&b), HSeries::from_expr(Expr::one(), 3));
    }

    #[test]
    fn neumann_series() {
        let e = Expr::jet(0, 1);
        let nn = Expr::param(1);
        let a = alloc::vec![alloc::vec![HSeries::from_expr(Expr::one(), 3).add(&HSeries::monomial(nn.clone(), 1, 3))]];
        let x = solve_linear_series(&a, &[HSeries::from_expr(e.clone(), 3)]).unwrap();
        for k in 0..=3 {
            let expect = e.mul(&nn.pow(k as u32)).scale_int(if k % 2 == 0 { 1 } else { -1 });
            assert_eq!(x[0].coeff(k), expect);
        }
    }

    #[test]
    fn singular_leading_matrix() {
        let a = alloc::vec![alloc::vec![HSeries::monomial(Expr::one(), 1, 2)]];
        assert!(matches!(
            solve_linear_series(&a, &[HSeries::from_expr(Expr::one(), 2)]),
            Err(Error::SingularLeading(_))
        ));
    }
}
