//! High-order modified equations and their reduction to second order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jetcalc::total_derivative_series;
use crate::symcore::{invert_matrix, mat_vec, Atom, Context, Expr, HSeries};

/// φ̈ = Σ h^k a_k, where a_k may involve derivatives up to order k+2.
#[derive(Clone, Debug, PartialEq)]
pub struct HighOrderODE {
    pub rhs: Vec<HSeries>,
    /// Highest derivative order at each power of h.
    pub max_order: Vec<usize>,
}

/// φ̈ = F(φ, φ̇; h) truncated at h^trunc.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedODE {
    pub rhs: Vec<HSeries>,
    pub trunc: usize,
}

/// The maps φ^(j) ↦ g_j(φ, φ̇) for 2 ≤ j ≤ max_order.
#[derive(Clone, Debug, PartialEq)]
pub struct JetSubstitution {
    g: Vec<Vec<HSeries>>,
    trunc: usize,
}

impl HighOrderODE {
    pub fn new(rhs: Vec<HSeries>) -> Result<HighOrderODE> {
        let n = rhs.len();
        let t = rhs.iter().map(|s| s.trunc()).min().unwrap_or(0);
        for s in &rhs {
            if s.coeff(0).contains_jet_order_at_least(2) {
                return Err(Error::InvalidProblem("h⁰ right-hand side must only involve φ and φ̇".into()));
            }
        }
        let max_order = (0..=t)
            .map(|k| rhs.iter().filter_map(|s| s.coeff(k).max_jet_order()).max().unwrap_or(0))
            .collect();
        let rhs = if n == 0 { rhs } else { rhs.iter().map(|s| s.with_trunc(t)).collect() };
        Ok(HighOrderODE { rhs, max_order })
    }

    pub fn trunc(&self) -> usize {
        self.rhs.first().map(|s| s.trunc()).unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn order(&self) -> usize {
        self.max_order.iter().copied().max().unwrap_or(0).max(2)
    }
}

impl ReducedODE {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Continuous part of the equation.
    pub fn leading(&self) -> Vec<Expr> {
        self.rhs.iter().map(|s| s.coeff(0)).collect()
    }

    pub fn truncate(&self, n: usize) -> ReducedODE {
        ReducedODE { rhs: self.rhs.iter().map(|s| s.truncate(n)).collect(), trunc: n.min(self.trunc) }
    }
}

impl JetSubstitution {
    /// Builds g_2 = F and g_{j+1} = D g_j with φ̈ ↦ F, for j up to `top`.
    pub fn build(f: &[HSeries], top: usize, ctx: &Context) -> Result<JetSubstitution> {
        JetSubstitution::build_graded(f, top, &|_| 0, ctx)
    }

    /// As `build`, but g_j is only kept up to h^(N − lag(j)); use when φ^(j)
    /// never occurs below h^lag(j) in the expressions to be reduced.
    pub fn build_graded(f: &[HSeries], top: usize, lag: &dyn Fn(usize) -> usize, ctx: &Context) -> Result<JetSubstitution> {
        let trunc = f.iter().map(|s| s.trunc()).min().unwrap_or(0);
        for s in f {
            if s.contains_jet_order_at_least(2) {
                return Err(Error::InvalidProblem("substitution source must only involve φ and φ̇".into()));
            }
        }
        let map = second_derivative_map(f);
        let mut g: Vec<Vec<HSeries>> = alloc::vec![f.iter().map(|s| s.with_trunc(trunc)).collect()];
        for j in 3..=top {
            let keep = trunc.saturating_sub(lag(j));
            let prev = g.last().unwrap();
            let next = prev
                .iter()
                .map(|s| Ok(total_derivative_series(&s.truncate(keep), 1, ctx)?.substitute(&map)))
                .collect::<Result<Vec<_>>>()?;
            g.push(next);
        }
        Ok(JetSubstitution { g, trunc })
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    /// Highest derivative order covered.
    pub fn top(&self) -> usize {
        self.g.len() + 1
    }

    pub fn get(&self, j: usize) -> Option<&[HSeries]> {
        if j < 2 {
            return None;
        }
        self.g.get(j - 2).map(|v| v.as_slice())
    }

    pub fn reduced(&self) -> ReducedODE {
        ReducedODE { rhs: self.g[0].clone(), trunc: self.trunc }
    }

    pub fn map(&self) -> BTreeMap<Atom, HSeries> {
        let mut m = BTreeMap::new();
        for (i, gj) in self.g.iter().enumerate() {
            for (comp, s) in gj.iter().enumerate() {
                m.insert(Atom::jet(comp, i + 2), s.clone());
            }
        }
        m
    }

    /// Eliminates every derivative of order ≥ 2.
    pub fn apply(&self, s: &HSeries) -> Result<HSeries> {
        if let Some(o) = s.max_jet_order() {
            if o > self.top() {
                return Err(Error::Truncation(format!("derivative of order {} exceeds substitution range {}", o, self.top())));
            }
        }
        let r = s.substitute(&self.map());
        if r.trunc() < s.trunc() {
            return Err(Error::Truncation(format!(
                "substitution only known to h^{}, expression needs h^{}",
                r.trunc(),
                s.trunc()
            )));
        }
        Ok(r)
    }

    /// Checks g_{j+1} = D g_j |_{φ̈ ↦ g_2} for every stored order.
    pub fn is_consistent(&self, ctx: &Context) -> Result<bool> {
        let map = second_derivative_map(&self.g[0]);
        for w in self.g.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                let d = total_derivative_series(&a.truncate(b.trunc()), 1, ctx)?.substitute(&map);
                if d.truncate(b.trunc()) != *b {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn second_derivative_map(f: &[HSeries]) -> BTreeMap<Atom, HSeries> {
    f.iter().enumerate().map(|(j, s)| (Atom::jet(j, 2), s.clone())).collect()
}

/// Solves residual = 0 for φ̈, treating higher derivatives as independent.
pub fn solve_for_second_derivative(residual: &[HSeries]) -> Result<HighOrderODE> {
    let n = residual.len();
    let r0: Vec<Expr> = residual.iter().map(|s| s.coeff(0)).collect();
    if r0.iter().any(|e| e.contains_jet_order_at_least(3)) {
        return Err(Error::SingularLeading("the h⁰ residual is not of second order".into()));
    }
    let a: Vec<Vec<Expr>> = r0
        .iter()
        .map(|e| (0..n).map(|i| e.pdiff_atom_plain(Atom::jet(i, 2))).collect())
        .collect();
    if a.iter().flatten().any(|e| !e.is_constant()) {
        return Err(Error::NotAffine);
    }
    let inv = invert_matrix(&a).map_err(|e| match e {
        Error::SingularLeading(m) => Error::SingularLeading(format!("not a regular Lagrangian: {}", m)),
        other => other,
    })?;
    let t = residual.iter().map(|s| s.trunc()).min().unwrap_or(0);
    let mut coeffs: Vec<Vec<Expr>> = alloc::vec![Vec::new(); n];
    for k in 0..=t {
        let b: Vec<Expr> = (0..n)
            .map(|j| {
                let e = residual[j].coeff(k);
                if k == 0 {
                    (0..n).fold(e, |acc, i| acc.sub(&a[j][i].mul(&Expr::jet(i, 2))))
                } else {
                    e
                }
            })
            .collect();
        for (j, x) in mat_vec(&inv, &b).into_iter().enumerate() {
            coeffs[j].push(x.neg());
        }
    }
    HighOrderODE::new(coeffs.into_iter().map(|c| HSeries::from_coeffs(c, t)).collect())
}

/// Iterated substitution of derivatives of order ≥ 2 until the right-hand side
/// only involves φ and φ̇.
pub fn reduce_order(ode: &HighOrderODE, ctx: &Context) -> Result<(ReducedODE, JetSubstitution)> {
    let t = ode.trunc();
    let top = ode.order();
    let mut f: Vec<HSeries> = ode.rhs.iter().map(|s| s.truncate(0).with_trunc(0)).collect();
    let guard = t + 2;
    for pass in 1..=guard {
        // pass p fixes the coefficient of h^p
        let p = pass.min(t);
        let lifted: Vec<HSeries> = f.iter().map(|s| s.with_trunc(p)).collect();
        let subs = JetSubstitution::build_graded(&lifted, top, &|j| j - 2, ctx)?;
        let next = ode.rhs.iter().map(|s| subs.apply(&s.truncate(p))).collect::<Result<Vec<_>>>()?;
        if p == t && next == f {
            let subs = if lifted == next { subs } else { JetSubstitution::build_graded(&next, top, &|j| j - 2, ctx)? };
            return Ok((ReducedODE { rhs: next, trunc: t }, subs));
        }
        f = next;
    }
    Err(Error::NoFixedPoint(guard))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::{expand_functional_equation, StencilProblem};
    use crate::symcore::parse;

    #[test]
    fn leading_second_derivative() {
        let p = StencilProblem::rotating(0).unwrap();
        let ode = solve_for_second_derivative(&expand_functional_equation(&p).unwrap()).unwrap();
        let want = parse("((alpha^2 + V1)*phi1 + 2*c*alpha*d1phi2)/(c^2-1)", &p.ctx).unwrap();
        assert_eq!(ode.rhs[0].coeff(0), want);
        let (r, _) = reduce_order(&ode, &p.ctx).unwrap();
        assert_eq!(r.rhs, ode.rhs);
    }

    #[test]
    fn reduction_is_consistent() {
        let p = StencilProblem::rotating(2).unwrap();
        let ode = solve_for_second_derivative(&expand_functional_equation(&p).unwrap()).unwrap();
        let (r, subs) = reduce_order(&ode, &p.ctx).unwrap();
        assert!(r.rhs.iter().all(|s| !s.contains_jet_order_at_least(2)));
        assert!(subs.is_consistent(&p.ctx).unwrap());
        for (a, b) in ode.rhs.iter().zip(&r.rhs) {
            assert_eq!(&subs.apply(a).unwrap(), b);
        }
        let ode2 = HighOrderODE::new(r.rhs.clone()).unwrap();
        assert_eq!(reduce_order(&ode2, &p.ctx).unwrap().0, r);
    }
}
