//! Discrete problem family and its step-size expansions.
//!
//! A stencil is a list of symmetric second differences
//! w·(R(−ρh)φ(ξ+σh) − 2φ(ξ) + R(ρh)φ(ξ−σh))/h² with R(τ) = exp(ταJ).
//! The functional equation is Σ (second differences) − ∇W(φ) = 0 and the
//! residual used throughout is its negative, whose h⁰ part is
//! (α²+V′)φ + 2cαJφ̇ − (c²−1)φ̈ for the rotating five-point stencil.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jetcalc::{euler_expr, LagrangianDensity};
use crate::symcore::context::{alpha, c, dt, dx};
use crate::symcore::{Context, Expr, HSeries, RatFunc};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Potential {
    /// W(φ) = ½V(⟨φ,φ⟩).
    Radial,
    /// Abstract W(φ).
    General,
}

/// One symmetric second difference: offset σ in ξ, rotation ρ, weight w.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilTerm {
    pub offset: RatFunc,
    pub rotation: RatFunc,
    pub weight: RatFunc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StencilProblem {
    pub ctx: Context,
    pub alpha: RatFunc,
    pub c: RatFunc,
    pub dt: RatFunc,
    pub dx: RatFunc,
    pub potential: Potential,
    pub trunc: usize,
    pub terms: Vec<StencilTerm>,
    /// Coefficient m of an extra term ½m‖φ‖² in the Lagrangian.
    pub mass: RatFunc,
}

/// Context limits that accommodate every object derived at truncation n.
pub fn limits_for(n: usize) -> (usize, usize) {
    ((2 * n + 4).max(8), (4 * n + 6).max(8))
}

impl StencilProblem {
    /// Five-point stencil of u_tt − u_xx = ∇W restricted to u(t,x) = R(t)φ(x − ct).
    pub fn five_point(
        dim: usize,
        alpha: RatFunc,
        c: RatFunc,
        dt: RatFunc,
        dx: RatFunc,
        potential: Potential,
        trunc: usize,
    ) -> Result<StencilProblem> {
        let terms = alloc::vec![
            StencilTerm { offset: c.mul(&dt), rotation: dt.clone(), weight: dt.pow(-2) },
            StencilTerm { offset: dx.clone(), rotation: RatFunc::zero(), weight: dx.pow(-2).neg() },
        ];
        StencilProblem::custom(dim, alpha, c, dt, dx, potential, trunc, terms)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        dim: usize,
        alpha: RatFunc,
        c: RatFunc,
        dt: RatFunc,
        dx: RatFunc,
        potential: Potential,
        trunc: usize,
        terms: Vec<StencilTerm>,
    ) -> Result<StencilProblem> {
        let (mj, mp) = limits_for(trunc);
        let ctx = Context::with_limits(dim, mj, mp)?;
        let p = StencilProblem { ctx, alpha, c, dt, dx, potential, trunc, terms, mass: RatFunc::zero() };
        p.validate()?;
        Ok(p)
    }

    /// Rotating travelling waves in R² with symbolic α, c, Δt, Δx and radial potential.
    pub fn rotating(trunc: usize) -> Result<StencilProblem> {
        StencilProblem::five_point(2, alpha(), c(), dt(), dx(), Potential::Radial, trunc)
    }

    /// Non-rotating travelling waves in R^d with an abstract potential W.
    pub fn travelling(dim: usize, trunc: usize) -> Result<StencilProblem> {
        StencilProblem::five_point(dim, RatFunc::zero(), c(), dt(), dx(), Potential::General, trunc)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.c.mul(&self.c).sub(&RatFunc::one());
        if k.is_zero() {
            return Err(Error::InvalidProblem("c² − 1 vanishes identically; the modified equation is singular".into()));
        }
        if self.dt.is_zero() || self.dx.is_zero() {
            return Err(Error::InvalidProblem("step sizes must be non-zero".into()));
        }
        let rotating = !self.alpha.is_zero() && self.terms.iter().any(|t| !t.rotation.is_zero());
        if rotating && self.ctx.dim() != 2 {
            return Err(Error::InvalidProblem("a rotation rate requires dimension 2".into()));
        }
        if self.terms.is_empty() {
            return Err(Error::InvalidProblem("empty stencil".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.ctx.dim()
    }

    fn is_rotating(&self) -> bool {
        !self.alpha.is_zero()
    }

    /// A copy with a parameter replaced, e.g. Δx ↦ cΔt or c ↦ 0.
    pub fn specialize(&self, var: usize, value: &RatFunc) -> Result<StencilProblem> {
        let s = |r: &RatFunc| r.substitute(var, value);
        let terms = self
            .terms
            .iter()
            .map(|t| StencilTerm { offset: s(&t.offset), rotation: s(&t.rotation), weight: s(&t.weight) })
            .collect();
        let p = StencilProblem {
            ctx: self.ctx.clone(),
            alpha: s(&self.alpha),
            c: s(&self.c),
            dt: s(&self.dt),
            dx: s(&self.dx),
            potential: self.potential,
            trunc: self.trunc,
            terms,
            mass: s(&self.mass),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_trunc(&self, trunc: usize) -> StencilProblem {
        let mut p = self.clone();
        p.trunc = trunc;
        let (mj, mp) = limits_for(trunc);
        p.ctx.set_limits(mj.max(self.ctx.max_jet()), mp.max(self.ctx.max_pot()));
        p
    }

    pub fn with_mass(mut self, mass: RatFunc) -> StencilProblem {
        self.mass = mass;
        self
    }

    /// ∇W as a vector of expressions, including the mass term.
    pub fn grad_potential(&self) -> Vec<Expr> {
        let n = self.dim();
        (0..n)
            .map(|j| {
                let g = match self.potential {
                    Potential::Radial => Expr::v(1).mul(&Expr::jet(j, 0)),
                    Potential::General => Expr::w(&[j]),
                };
                g.add(&Expr::jet(j, 0).scale(&self.mass))
            })
            .collect()
    }

    /// The potential term of the Lagrangian: ½V or W, plus ½m‖φ‖².
    pub fn potential_density(&self) -> Expr {
        let w = match self.potential {
            Potential::Radial => Expr::v(0).scale(&RatFunc::ratio(1, 2)),
            Potential::General => Expr::w(&[]),
        };
        let half = RatFunc::ratio(1, 2).mul(&self.mass);
        (0..self.dim()).fold(w, |acc, j| acc.add(&Expr::jet(j, 0).pow(2).scale(&half)))
    }
}

fn factorial(k: usize) -> i64 {
    (1..=k as i64).product()
}

fn apply_j(v: &[Expr]) -> Vec<Expr> {
    alloc::vec![v[1].clone(), v[0].neg()]
}

/// Taylor coefficients of R(−ρh)φ(ξ+σh) up to h^p; entry k is a vector of expressions.
fn shifted_rotated(p: &StencilProblem, t: &StencilTerm, sign: i64, upto: usize) -> Vec<Vec<Expr>> {
    let n = p.dim();
    let sigma = t.offset.scale_int(sign);
    let tau = t.rotation.scale_int(-sign).mul(&p.alpha);
    let rot = p.is_rotating() && !tau.is_zero();
    let mut out = alloc::vec![alloc::vec![Expr::zero(); n]; upto + 1];
    for (m, slot) in out.iter_mut().enumerate() {
        // shift part at order m combined with rotation part at order k
        let kmax = if rot { m } else { 0 };
        for k in 0..=kmax {
            let s = m - k;
            let coef = sigma.pow(s as i32).mul(&tau.pow(k as i32)).mul(&RatFunc::ratio(1, factorial(s) * factorial(k)));
            if coef.is_zero() {
                continue;
            }
            let mut v: Vec<Expr> = (0..n).map(|j| Expr::jet(j, s)).collect();
            for _ in 0..k {
                v = apply_j(&v);
            }
            for j in 0..n {
                slot[j] = slot[j].add(&v[j].scale(&coef));
            }
        }
    }
    out
}

/// Expansion of the functional-equation residual, one HSeries per component.
pub fn expand_functional_equation(p: &StencilProblem) -> Result<Vec<HSeries>> {
    let n = p.dim();
    let nn = p.trunc;
    p.ctx.check_jet(nn + 2)?;
    let mut acc: Vec<Vec<Expr>> = alloc::vec![alloc::vec![Expr::zero(); n]; nn + 3];
    for t in &p.terms {
        let plus = shifted_rotated(p, t, 1, nn + 2);
        let minus = shifted_rotated(p, t, -1, nn + 2);
        for k in 0..=nn + 2 {
            for j in 0..n {
                let mut e = plus[k][j].add(&minus[k][j]);
                if k == 0 {
                    e = e.sub(&Expr::jet(j, 0).scale_int(2));
                }
                acc[k][j] = acc[k][j].add(&e.scale(&t.weight));
            }
        }
    }
    for k in 0..2 {
        if acc[k].iter().any(|e| !e.is_zero()) {
            return Err(Error::InvalidProblem(format!("stencil is inconsistent: h^{} term of the differences does not vanish", k)));
        }
    }
    let grad = p.grad_potential();
    Ok((0..n)
        .map(|j| {
            let coeffs: Vec<Expr> = (0..=nn)
                .map(|k| {
                    let s = acc[k + 2][j].clone();
                    let s = if k == 0 { s.sub(&grad[j]) } else { s };
                    s.neg()
                })
                .collect();
            HSeries::from_coeffs(coeffs, nn)
        })
        .collect())
}

/// Raw expansion of Σ ½w‖R(−ρh)φ(ξ+σh) − φ‖²/h² + W, before dropping null terms.
pub fn expand_discrete_lagrangian_raw(p: &StencilProblem) -> Result<LagrangianDensity> {
    let n = p.dim();
    let nn = p.trunc;
    p.ctx.check_jet(nn + 1)?;
    let mut coeffs = alloc::vec![Expr::zero(); nn + 1];
    for t in &p.terms {
        let b = shifted_rotated(p, t, 1, nn + 1);
        let half_w = t.weight.mul(&RatFunc::ratio(1, 2));
        for (k, slot) in coeffs.iter_mut().enumerate() {
            // coefficient of h^{k+2} in ‖B‖², B_0 = 0 after subtracting φ
            let mut s = Expr::zero();
            for a in 1..=k + 1 {
                let bb = k + 2 - a;
                for j in 0..n {
                    s = s.add(&b[a][j].mul(&b[bb][j]));
                }
            }
            *slot = slot.add(&s.scale(&half_w));
        }
    }
    coeffs[0] = coeffs[0].add(&p.potential_density());
    Ok(LagrangianDensity::new(HSeries::from_coeffs(coeffs, nn), n))
}

/// Removes h-coefficients with vanishing Euler–Lagrange expression.
pub fn drop_null_terms(l: &LagrangianDensity, ctx: &Context) -> Result<LagrangianDensity> {
    let mut coeffs = Vec::new();
    for k in 0..=l.trunc() {
        let e = l.l.coeff(k);
        let order = e.max_jet_order().unwrap_or(0);
        let mut null = true;
        for j in 0..l.n {
            if !euler_expr(&e, j, order, ctx)?.is_zero() {
                null = false;
                break;
            }
        }
        coeffs.push(if null { Expr::zero() } else { e });
    }
    Ok(LagrangianDensity::new(HSeries::from_coeffs(coeffs, l.trunc()), l.n))
}

pub fn expand_discrete_lagrangian(p: &StencilProblem) -> Result<LagrangianDensity> {
    drop_null_terms(&expand_discrete_lagrangian_raw(p)?, &p.ctx)
}

/// A term c·∂_t^a ∂_x^b u of a modified PDE in one space dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct PdeTerm {
    pub coeff: RatFunc,
    pub t_derivs: usize,
    pub x_derivs: usize,
}

/// 0 = Σ terms − ∇W(u).
#[derive(Clone, Debug, PartialEq)]
pub struct ModifiedPde {
    pub terms: Vec<PdeTerm>,
}

/// Taylor expansion of the five-point stencil for u_tt − u_xx − ∇W(u) = 0,
/// keeping powers Δt^k, k ≤ t_order, and Δx^k, k ≤ x_order.
pub fn modified_pde(t_order: usize, x_order: usize) -> Result<ModifiedPde> {
    if t_order > 4 || x_order > 4 {
        return Err(Error::Unsupported("modified PDE orders above 4".into()));
    }
    // (u(t+Δ) − 2u + u(t−Δ))/Δ² = Σ_{k≥1} 2Δ^{2k−2}/(2k)! ∂^{2k} u
    let mut terms = Vec::new();
    for (order, step, sign, is_t) in [(t_order, dt(), 1i64, true), (x_order, dx(), -1i64, false)] {
        let mut k = 1;
        while 2 * k - 2 <= order {
            let coeff = step.pow(2 * k as i32 - 2).mul(&RatFunc::ratio(2 * sign, factorial(2 * k)));
            let (a, b) = if is_t { (2 * k, 0) } else { (0, 2 * k) };
            terms.push(PdeTerm { coeff, t_derivs: a, x_derivs: b });
            k += 1;
        }
    }
    Ok(ModifiedPde { terms })
}

impl ModifiedPde {
    pub fn to_text(&self, ctx: &Context) -> String {
        let mut s = String::from("0 =");
        for (i, t) in self.terms.iter().enumerate() {
            let mut d = String::from("u_");
            for _ in 0..t.t_derivs {
                d.push('t');
            }
            for _ in 0..t.x_derivs {
                d.push('x');
            }
            let c = crate::symcore::print::ratfunc_str(ctx, &t.coeff, crate::symcore::Style::Text);
            let (neg, body) = match c.strip_prefix('-') {
                Some(r) => (true, r.into()),
                None => (false, c),
            };
            let body: String = if body == "1" { d } else { format!("{}*{}", body, d) };
            s.push_str(match (neg, i) {
                (true, _) => " - ",
                (false, 0) => " ",
                (false, _) => " + ",
            });
            s.push_str(&body);
        }
        s.push_str(" - gradW(u)");
        s
    }

    /// Reduction to u(t,x) = φ(x − ct): ∂_t ↦ −cD, ∂_x ↦ D, for scalar φ.
    pub fn travelling_reduction(&self, speed: &RatFunc) -> Expr {
        let mut e = Expr::w(&[0]).neg();
        for t in &self.terms {
            let f = speed.neg().pow(t.t_derivs as i32).mul(&t.coeff);
            e = e.add(&Expr::jet(0, t.t_derivs + t.x_derivs).scale(&f));
        }
        e
    }
}
