//! Ostrogradsky Hamiltonians, the reduced symplectic structure and first-order
//! modified Lagrangians.
//!
//! Coordinates on the reduced phase space are z = (φ₁..φₙ, φ̇₁..φ̇ₙ). The form ω
//! is stored as the matrix Ω with Ω_ab = ω(∂_b, ∂_a), so that Hamilton's
//! equations read Ω ż = ∇𝓗.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jetcalc::{euler_vector, total_derivative_series, LagrangianDensity};
use crate::modeq::{reduce_order, solve_for_second_derivative, JetSubstitution, ReducedODE};
use crate::stencil::{expand_discrete_lagrangian, expand_functional_equation, StencilProblem};
use crate::symcore::{invert_matrix, solve_linear_series, Atom, Context, Expr, HSeries, RatFunc, ALPHA, C, DT, DX};

/// Ostrogradsky momenta and Hamiltonian of a higher-order Lagrangian.
#[derive(Clone, Debug, PartialEq)]
pub struct OstrogradskyData {
    pub n: usize,
    /// Number of coordinate blocks q¹..q^M = φ..φ^(M−1).
    pub m: usize,
    /// p[i][j] is the j-th component of p_{i+1}.
    pub p: Vec<Vec<HSeries>>,
    pub h: HSeries,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamStructure {
    pub n: usize,
    pub trunc: usize,
    pub omega: Vec<Vec<HSeries>>,
    pub h: HSeries,
    /// A primitive −Σ P dQ of ω, one coefficient per coordinate.
    pub lambda: Vec<HSeries>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LegendreCase {
    General,
    C0,
    DxEqCDt,
    Alpha0,
}

impl LegendreCase {
    pub fn name(&self) -> &'static str {
        match self {
            LegendreCase::General => "general",
            LegendreCase::C0 => "c0",
            LegendreCase::DxEqCDt => "dx_eq_c_dt",
            LegendreCase::Alpha0 => "alpha0",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderLagrangian {
    pub l: HSeries,
    pub case: LegendreCase,
}

fn series_pdiff(s: &HSeries, comp: usize, order: usize, ctx: &Context) -> Result<HSeries> {
    s.try_map(|e| e.pdiff_jet(comp, order, ctx))
}

/// ∂s/∂z_a for all 2n reduced coordinates.
pub fn gradient(s: &HSeries, n: usize, ctx: &Context) -> Result<Vec<HSeries>> {
    (0..2 * n).map(|a| series_pdiff(s, a % n, a / n, ctx)).collect()
}

pub fn ostrogradsky(l: &LagrangianDensity, ctx: &Context) -> Result<OstrogradskyData> {
    let n = l.n;
    let m = l.order().max(1);
    let l0 = l.l.coeff(0);
    if l0.contains_jet_order_at_least(2) {
        return Err(Error::SingularLeading("the h⁰ Lagrangian depends on φ̈".into()));
    }
    let hess: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            let d = l0.pdiff_atom_plain(Atom::jet(i, 1));
            (0..n).map(|j| d.pdiff_atom_plain(Atom::jet(j, 1))).collect()
        })
        .collect();
    if hess.iter().flatten().any(|e| !e.is_constant()) {
        return Err(Error::Unsupported("velocity Hessian depending on the state".into()));
    }
    invert_matrix(&hess).map_err(|e| Error::SingularLeading(format!("not a regular Lagrangian: {}", e)))?;
    let mut p: Vec<Vec<HSeries>> = alloc::vec![Vec::new(); m];
    for i in (1..=m).rev() {
        let row = (0..n)
            .map(|j| {
                let d = series_pdiff(&l.l, j, i, ctx)?;
                if i == m {
                    Ok(d)
                } else {
                    Ok(d.sub(&total_derivative_series(&p[i][j], 1, ctx)?))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        p[i - 1] = row;
    }
    let mut h = l.l.neg();
    for (i, row) in p.iter().enumerate() {
        for (j, pj) in row.iter().enumerate() {
            h = h.add(&pj.mul_expr(&Expr::jet(j, i + 1)));
        }
    }
    Ok(OstrogradskyData { n, m, p, h })
}

/// Q^i as series in (φ, φ̇): φ^(i−1) with higher derivatives substituted.
fn coordinate_series(n: usize, order: usize, subs: &JetSubstitution, trunc: usize) -> Result<Vec<HSeries>> {
    if order < 2 {
        return Ok((0..n).map(|j| HSeries::from_expr(Expr::jet(j, order), trunc)).collect());
    }
    subs.get(order)
        .map(|v| v.iter().map(|s| s.truncate(trunc)).collect())
        .ok_or_else(|| Error::Truncation(format!("no substitution for derivative order {}", order)))
}

pub fn onshell_reduce(o: &OstrogradskyData, subs: &JetSubstitution, ctx: &Context) -> Result<HamStructure> {
    let n = o.n;
    let trunc = subs.trunc().min(o.h.trunc());
    let h = subs.apply(&o.h.with_trunc(trunc))?;
    let mut omega = alloc::vec![alloc::vec![HSeries::zero(trunc); 2 * n]; 2 * n];
    let mut lambda = alloc::vec![HSeries::zero(trunc); 2 * n];
    for i in 0..o.m {
        let q = coordinate_series(n, i, subs, trunc)?;
        for j in 0..n {
            let pp = subs.apply(&o.p[i][j].with_trunc(trunc))?;
            if pp.is_zero() {
                continue;
            }
            let dq = gradient(&q[j], n, ctx)?;
            let dp = gradient(&pp, n, ctx)?;
            for a in 0..2 * n {
                lambda[a] = lambda[a].sub(&pp.mul(&dq[a]));
                for b in 0..2 * n {
                    let t = dp[a].mul(&dq[b]).sub(&dq[a].mul(&dp[b]));
                    omega[a][b] = omega[a][b].add(&t);
                }
            }
        }
    }
    Ok(HamStructure { n, trunc, omega, h, lambda })
}

impl HamStructure {
    pub fn is_skew(&self) -> bool {
        let m = 2 * self.n;
        (0..m).all(|a| (0..m).all(|b| self.omega[a][b] == self.omega[b][a].neg()))
    }

    /// Checks dω = 0 component by component.
    pub fn check_closed(&self, ctx: &Context) -> Result<()> {
        let n = self.n;
        let m = 2 * n;
        let d = |s: &HSeries, a: usize| series_pdiff(s, a % n, a / n, ctx);
        for a in 0..m {
            for b in a + 1..m {
                for c in b + 1..m {
                    let s = d(&self.omega[b][c], a)?.add(&d(&self.omega[c][a], b)?).add(&d(&self.omega[a][b], c)?);
                    if !s.is_zero() {
                        return Err(Error::NotClosed(format!("component ({}, {}, {})", a, b, c)));
                    }
                }
            }
        }
        Ok(())
    }

    /// The (φ̇, φ̇) block of Ω.
    pub fn vertical_block(&self) -> Vec<Vec<HSeries>> {
        let n = self.n;
        (n..2 * n).map(|a| (n..2 * n).map(|b| self.omega[a][b].clone()).collect()).collect()
    }

    /// Solves Ω ż = ∇𝓗.
    pub fn vector_field(&self, ctx: &Context) -> Result<Vec<HSeries>> {
        solve_linear_series(&self.omega, &gradient(&self.h, self.n, ctx)?)
    }

    pub fn truncate(&self, t: usize) -> HamStructure {
        let tr = |s: &HSeries| s.truncate(t);
        HamStructure {
            n: self.n,
            trunc: t.min(self.trunc),
            omega: self.omega.iter().map(|r| r.iter().map(tr).collect()).collect(),
            h: tr(&self.h),
            lambda: self.lambda.iter().map(tr).collect(),
        }
    }
}

/// Difference between the Hamiltonian vector field and (φ̇, F); zero when the flows agree.
pub fn hamiltonian_flow_check(hs: &HamStructure, r: &ReducedODE, ctx: &Context) -> Result<Vec<HSeries>> {
    let n = hs.n;
    if r.dim() != n {
        return Err(Error::InvalidProblem("dimension mismatch".into()));
    }
    let t = hs.trunc.min(r.trunc);
    let z = hs.truncate(t).vector_field(ctx)?;
    Ok((0..2 * n)
        .map(|a| {
            let want = if a < n { HSeries::from_expr(Expr::jet(a, 1), t) } else { r.rhs[a - n].with_trunc(t) };
            z[a].sub(&want)
        })
        .collect())
}

/// True when the (φ̇, φ̇) block vanishes; otherwise returns the block as witness.
pub fn check_vertical_lagrangian(hs: &HamStructure) -> (bool, Vec<Vec<HSeries>>) {
    let blk = hs.vertical_block();
    let ok = blk.iter().flatten().all(|s| s.is_zero());
    (ok, blk)
}

/// Scales each monomial by 1/(d + shift), d its degree in the selected jet orders.
fn homotopy_scale(e: &Expr, orders: &[usize], shift: i64) -> Expr {
    let terms = e
        .terms()
        .iter()
        .map(|(m, c)| {
            let d: i64 = m
                .factors()
                .iter()
                .filter(|(a, _)| a.jet_order().map_or(false, |o| orders.contains(&o)))
                .map(|&(_, k)| k as i64)
                .sum();
            (m.clone(), c.mul(&RatFunc::ratio(1, d + shift)))
        })
        .collect();
    Expr::from_terms(terms)
}

fn exterior_derivative(lambda: &[HSeries], n: usize, ctx: &Context) -> Result<Vec<Vec<HSeries>>> {
    let m = 2 * n;
    let t = lambda.iter().map(|s| s.trunc()).min().unwrap_or(0);
    let mut out = alloc::vec![alloc::vec![HSeries::zero(t); m]; m];
    for a in 0..m {
        for b in 0..m {
            out[a][b] = series_pdiff(&lambda[a], b % n, b / n, ctx)?.sub(&series_pdiff(&lambda[b], a % n, a / n, ctx)?);
        }
    }
    Ok(out)
}

/// Radial homotopy primitive of a closed 2-form with polynomial coefficients.
pub fn homotopy_primitive(omega: &[Vec<HSeries>], n: usize, ctx: &Context) -> Result<Vec<HSeries>> {
    let m = 2 * n;
    if omega.iter().flatten().any(|s| s.terms().any(|(_, e)| e.contains_atom(|a| a.is_potential()))) {
        return Err(Error::Unsupported("radial homotopy needs polynomial coefficients".into()));
    }
    let t = omega.iter().flatten().map(|s| s.trunc()).min().unwrap_or(0);
    let mut lambda = alloc::vec![HSeries::zero(t); m];
    for b in 0..m {
        let mut acc = HSeries::zero(t);
        for a in 0..m {
            let za = Expr::jet(a % n, a / n);
            acc = acc.sub(&omega[a][b].mul_expr(&za));
        }
        lambda[b] = acc.map(|e| homotopy_scale(e, &[0, 1], 1));
    }
    let check = exterior_derivative(&lambda, n, ctx)?;
    if (0..m).any(|a| (0..m).any(|b| check[a][b] != omega[a][b])) {
        return Err(Error::NotClosed("homotopy primitive does not reproduce the form".into()));
    }
    Ok(lambda)
}

/// A primitive λ of ω with h⁰ part −Σ𝔭 d𝔮; free of dφ̇ components whenever the
/// vertical block of ω vanishes.
pub fn local_primitive(hs: &HamStructure, ctx: &Context) -> Result<Vec<HSeries>> {
    hs.check_closed(ctx)?;
    let n = hs.n;
    let mut lambda = hs.lambda.clone();
    if check_vertical_lagrangian(hs).0 {
        // f = Σ φ̇_a ∫₀¹ λ_{φ̇_a}(φ, tφ̇) dt, then λ ← λ − df
        let mut f = HSeries::zero(hs.trunc);
        for a in 0..n {
            f = f.add(&lambda[n + a].mul_expr(&Expr::jet(a, 1)));
        }
        let f = f.map(|e| homotopy_scale(e, &[1], 0));
        let df = gradient(&f, n, ctx)?;
        for (l, d) in lambda.iter_mut().zip(&df) {
            *l = l.sub(d);
        }
    }
    let d = exterior_derivative(&lambda, n, ctx)?;
    for a in 0..2 * n {
        for b in 0..2 * n {
            if d[a][b] != hs.omega[a][b] {
                return Err(Error::NotClosed(format!("primitive fails at ({}, {})", a, b)));
            }
        }
    }
    Ok(lambda)
}

/// L̃ = −λ(ż) − 𝓗 for a primitive without dφ̇ components.
pub fn first_order_lagrangian(hs: &HamStructure, case: LegendreCase, ctx: &Context) -> Result<FirstOrderLagrangian> {
    let n = hs.n;
    let lambda = local_primitive(hs, ctx)?;
    if lambda[n..].iter().any(|s| !s.is_zero()) {
        return Err(Error::Unsupported("the symplectic form has a non-vanishing vertical block".into()));
    }
    let mut l = hs.h.neg();
    for (a, la) in lambda[..n].iter().enumerate() {
        l = l.sub(&la.mul_expr(&Expr::jet(a, 1)));
    }
    Ok(FirstOrderLagrangian { l, case })
}

/// Everything derived from one stencil problem at one truncation.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub problem: StencilProblem,
    pub lagrangian: LagrangianDensity,
    pub residual: Vec<HSeries>,
    pub reduced: ReducedODE,
    pub subs: JetSubstitution,
    pub ostrogradsky: OstrogradskyData,
    pub ham: HamStructure,
}

impl Pipeline {
    pub fn run(p: &StencilProblem) -> Result<Pipeline> {
        let ctx = &p.ctx;
        let lagrangian = expand_discrete_lagrangian(p)?;
        let residual = expand_functional_equation(p)?;
        let ode = solve_for_second_derivative(&residual)?;
        let o = ostrogradsky(&lagrangian, ctx)?;
        let top = (2 * o.m).saturating_sub(1).max(ode.order());
        let (reduced, _) = reduce_order(&ode, ctx)?;
        // φ^(j) enters momenta and H no earlier than h^⌈(j−1)/2⌉
        let subs = JetSubstitution::build_graded(&reduced.rhs, top, &|j| j / 2, ctx)?;
        let ham = onshell_reduce(&o, &subs, ctx)?;
        Ok(Pipeline { problem: p.clone(), lagrangian, residual, reduced, subs, ostrogradsky: o, ham })
    }

    pub fn ctx(&self) -> &Context {
        &self.problem.ctx
    }
}

/// Imposes the special-case conditions on a problem.
pub fn special_case(p: &StencilProblem, case: LegendreCase) -> Result<StencilProblem> {
    match case {
        LegendreCase::General => Ok(p.clone()),
        LegendreCase::Alpha0 => p.specialize(ALPHA, &RatFunc::zero()),
        LegendreCase::DxEqCDt => p.specialize(DX, &RatFunc::var(C).mul(&RatFunc::var(DT))),
        LegendreCase::C0 => {
            if p.dim() != 2 {
                return Err(Error::InvalidProblem("the c = 0 case needs the planar rotating problem".into()));
            }
            // at c = 0 the time difference is (R(−αΔt) − 2I + R(αΔt))φ/Δt² = −κφ
            let mut ctx = p.ctx.clone();
            let k = ctx.declare_param("kappa")?;
            let mass = p.mass.add(&RatFunc::var(k));
            let mut q = p.specialize(C, &RatFunc::zero())?.specialize(ALPHA, &RatFunc::zero())?.with_mass(mass);
            q.ctx = ctx;
            Ok(q)
        }
    }
}

/// First-order modified Lagrangian in one of the special cases.
pub fn legendre_first_order(p: &StencilProblem, case: LegendreCase) -> Result<(FirstOrderLagrangian, Pipeline)> {
    if case == LegendreCase::General {
        return Err(Error::Unsupported("no first-order Lagrangian is constructed in the general case".into()));
    }
    let q = special_case(p, case)?;
    let pipe = Pipeline::run(&q)?;
    let (vertical, _) = check_vertical_lagrangian(&pipe.ham);
    if !vertical {
        return Err(Error::InvalidProblem(format!("case {} does not give a vertically Lagrangian form", case.name())));
    }
    let l = first_order_lagrangian(&pipe.ham, case, pipe.ctx())?;
    Ok((l, pipe))
}

/// EL(L̃) with φ̈ ↦ F; zero exactly when L̃ generates the reduced equation.
pub fn legendre_round_trip(l: &FirstOrderLagrangian, r: &ReducedODE, ctx: &Context) -> Result<Vec<HSeries>> {
    let n = r.dim();
    let ld = LagrangianDensity::new(l.l.with_trunc(r.trunc), n);
    let el = euler_vector(&ld, ctx)?;
    let map = r.rhs.iter().enumerate().map(|(j, s)| (Atom::jet(j, 2), s.clone())).collect();
    Ok(el.iter().map(|s| s.substitute(&map)).collect())
}

/// Substitutes the reduced equation directly into 𝓛 and takes EL equations.
/// This is not a valid reduction; the result generally differs from F.
pub fn naive_lagrangian_substitution(p: &StencilProblem) -> Result<(Vec<HSeries>, ReducedODE)> {
    let ctx = &p.ctx;
    let l = expand_discrete_lagrangian(p)?;
    let ode = solve_for_second_derivative(&expand_functional_equation(p)?)?;
    let (r, _) = reduce_order(&ode, ctx)?;
    let subs = JetSubstitution::build(&r.rhs, l.order().max(2), ctx)?;
    let sub_l = LagrangianDensity::new(subs.apply(&l.l)?, l.n);
    let el = euler_vector(&sub_l, ctx)?;
    let el_ode = solve_for_second_derivative(&el)?;
    let (naive, _) = reduce_order(&el_ode, ctx)?;
    Ok((naive.rhs, r))
}

/// Readable dump of the matrix Ω at one power of h.
pub fn omega_text(hs: &HamStructure, k: usize, ctx: &Context) -> String {
    let mut s = String::new();
    for row in &hs.omega {
        let cells: Vec<String> = row.iter().map(|e| crate::symcore::to_text(ctx, &e.coeff(k))).collect();
        s.push_str(&cells.join(", "));
        s.push('\n');
    }
    s
}
