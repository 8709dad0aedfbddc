//! Total derivatives, Euler operators and Noether currents on jet expressions.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::symcore::{Context, Expr, HSeries};

/// A formal Lagrangian Σ h^i 𝓛^i over the jet of φ: R → R^n.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianDensity {
    pub l: HSeries,
    pub n: usize,
    /// Highest jet order occurring in each h-coefficient.
    pub max_jet: Vec<usize>,
}

impl LagrangianDensity {
    pub fn new(l: HSeries, n: usize) -> LagrangianDensity {
        let max_jet = (0..=l.trunc()).map(|k| l.coeff(k).max_jet_order().unwrap_or(0)).collect();
        LagrangianDensity { l, n, max_jet }
    }

    pub fn trunc(&self) -> usize {
        self.l.trunc()
    }

    pub fn order(&self) -> usize {
        self.max_jet.iter().copied().max().unwrap_or(0)
    }

    pub fn truncate(&self, n: usize) -> LagrangianDensity {
        LagrangianDensity::new(self.l.truncate(n), self.n)
    }
}

/// Infinitesimal point symmetry: a vector field on Q given by n expressions in φ.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryGenerator {
    pub g: Vec<Expr>,
}

impl SymmetryGenerator {
    pub fn new(g: Vec<Expr>) -> Result<SymmetryGenerator> {
        for e in &g {
            if e.contains_atom(|a| a.is_potential() || a.jet_order().unwrap_or(0) > 0) {
                return Err(Error::InvalidProblem("a point symmetry may only depend on φ".into()));
            }
        }
        Ok(SymmetryGenerator { g })
    }

    /// Generator of θ ↦ exp(θJᵀ)φ on R², i.e. g = Jᵀφ = (−φ₂, φ₁).
    pub fn rotation() -> SymmetryGenerator {
        SymmetryGenerator { g: alloc::vec![Expr::jet(1, 0).neg(), Expr::jet(0, 0)] }
    }

    pub fn zero(n: usize) -> SymmetryGenerator {
        SymmetryGenerator { g: alloc::vec![Expr::zero(); n] }
    }
}

pub fn total_derivative(e: &Expr, times: usize, ctx: &Context) -> Result<Expr> {
    let mut r = e.clone();
    for _ in 0..times {
        r = r.total_derivative(ctx)?;
    }
    Ok(r)
}

pub fn total_derivative_series(s: &HSeries, times: usize, ctx: &Context) -> Result<HSeries> {
    s.try_map(|e| total_derivative(e, times, ctx))
}

/// Σ_{i=0}^{K} (−1)^i D^i ∂e/∂φ_j^(i).
pub fn euler_expr(e: &Expr, j: usize, k: usize, ctx: &Context) -> Result<Expr> {
    let mut acc = Expr::zero();
    for i in (0..=k).rev() {
        // Horner form: acc = ∂_i e − D(acc)
        let d = e.pdiff_jet(j, i, ctx)?;
        acc = if acc.is_zero() { d } else { d.sub(&acc.total_derivative(ctx)?) };
    }
    Ok(acc)
}

pub fn euler_operator(l: &LagrangianDensity, j: usize, k: Option<usize>, ctx: &Context) -> Result<HSeries> {
    let k = k.unwrap_or_else(|| l.order());
    if k < l.order() {
        return Err(Error::InvalidProblem(format!("Euler operator order {} below Lagrangian order {}", k, l.order())));
    }
    l.l.try_map(|e| {
        let kk = e.max_jet_order().unwrap_or(0).min(k);
        euler_expr(e, j, kk, ctx)
    })
}

/// All components of the Euler–Lagrange expression.
pub fn euler_vector(l: &LagrangianDensity, ctx: &Context) -> Result<Vec<HSeries>> {
    (0..l.n).map(|j| euler_operator(l, j, None, ctx)).collect()
}

/// Lie derivative of the density along the prolonged generator.
pub fn prolonged_action(e: &Expr, g: &SymmetryGenerator, ctx: &Context) -> Result<Expr> {
    let m = e.max_jet_order().unwrap_or(0);
    let mut acc = Expr::zero();
    let mut dg: Vec<Expr> = g.g.clone();
    for order in 0..=m {
        for (j, gj) in dg.iter().enumerate() {
            let p = e.pdiff_jet(j, order, ctx)?;
            if !p.is_zero() {
                acc = acc.add(&p.mul(gj));
            }
        }
        if order < m {
            dg = dg.iter().map(|x| x.total_derivative(ctx)).collect::<Result<Vec<_>>>()?;
        }
    }
    Ok(acc)
}

/// Checks that g leaves every coefficient of 𝓛 invariant.
pub fn check_symmetry(l: &LagrangianDensity, g: &SymmetryGenerator, ctx: &Context) -> Result<()> {
    for (k, e) in l.l.terms() {
        let d = prolonged_action(e, g, ctx)?;
        if !d.is_zero() {
            let divergence = (0..l.n).all(|j| matches!(euler_expr(&d, j, d.max_jet_order().unwrap_or(0), ctx), Ok(x) if x.is_zero()));
            let what = if divergence { "a divergence symmetry" } else { "not a symmetry" };
            return Err(Error::NotSymmetry(format!("h^{} coefficient: generator is {}", k, what)));
        }
    }
    Ok(())
}

/// Σ_{m=1}^{M} Σ_{k=0}^{m−1} (−1)^k ⟨D^k ∇_{φ^(m)} 𝓛, D^{m−1−k} g⟩.
pub fn noether_current(l: &LagrangianDensity, g: &SymmetryGenerator, m: Option<usize>, ctx: &Context) -> Result<HSeries> {
    if g.g.len() != l.n {
        return Err(Error::InvalidProblem("generator dimension mismatch".into()));
    }
    check_symmetry(l, g, ctx)?;
    let mmax = m.unwrap_or_else(|| l.order());
    let mut dg: Vec<Vec<Expr>> = alloc::vec![g.g.clone()];
    for _ in 1..mmax.max(1) {
        let next = dg.last().unwrap().iter().map(|x| x.total_derivative(ctx)).collect::<Result<Vec<_>>>()?;
        dg.push(next);
    }
    l.l.try_map(|e| {
        let mut acc = Expr::zero();
        let top = e.max_jet_order().unwrap_or(0).min(mmax);
        for order in 1..=top {
            for j in 0..l.n {
                let mut p = e.pdiff_jet(j, order, ctx)?;
                if p.is_zero() {
                    continue;
                }
                for k in 0..order {
                    let term = p.mul(&dg[order - 1 - k][j]);
                    acc = if k % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
                    if k + 1 < order {
                        p = p.total_derivative(ctx)?;
                    }
                }
            }
        }
        Ok(acc)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse;

    #[test]
    fn divergences_are_null() {
        let ctx = Context::new(2).unwrap();
        let e = parse("phi1^2*d1phi2 + V1*d2phi1", &ctx).unwrap();
        let d = e.total_derivative(&ctx).unwrap();
        for j in 0..2 {
            assert!(euler_expr(&d, j, 4, &ctx).unwrap().is_zero());
        }
    }

    #[test]
    fn zero_generator_gives_zero_current() {
        let ctx = Context::new(2).unwrap();
        let l = LagrangianDensity::new(HSeries::from_expr(parse("d1phi1^2 + d1phi2^2 + V0", &ctx).unwrap(), 0), 2);
        let i = noether_current(&l, &SymmetryGenerator::zero(2), None, &ctx).unwrap();
        assert!(i.is_zero());
    }
}
