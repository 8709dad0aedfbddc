//! Conserved quantities of the modified equations.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hamstruct::{gradient, HamStructure, Pipeline};
use crate::jetcalc::{noether_current, total_derivative_series, SymmetryGenerator};
use crate::modeq::{JetSubstitution, ReducedODE};
use crate::symcore::{solve_linear_series, Atom, Context, HSeries};

/// Eliminates derivatives of order ≥ 2 from a quantity on the jet space.
pub fn reduce_invariant(i: &HSeries, subs: &JetSubstitution) -> Result<HSeries> {
    if !i.contains_jet_order_at_least(2) {
        return Ok(i.clone());
    }
    subs.apply(&i.with_trunc(i.trunc().min(subs.trunc())))
}

/// D f along φ̈ = F.
pub fn onshell_derivative(f: &HSeries, r: &ReducedODE, ctx: &Context) -> Result<HSeries> {
    if f.contains_jet_order_at_least(2) {
        return Err(Error::InvalidProblem("quantity must only involve φ and φ̇".into()));
    }
    let map = r.rhs.iter().enumerate().map(|(j, s)| (Atom::jet(j, 2), s.clone())).collect();
    Ok(total_derivative_series(&f.with_trunc(f.trunc().min(r.trunc)), 1, ctx)?.substitute(&map))
}

pub fn is_conserved(f: &HSeries, r: &ReducedODE, ctx: &Context) -> Result<bool> {
    Ok(onshell_derivative(f, r, ctx)?.is_zero())
}

/// {f, g} = ∇fᵀ Ω⁻¹ ∇g.
pub fn poisson_bracket(hs: &HamStructure, f: &HSeries, g: &HSeries, ctx: &Context) -> Result<HSeries> {
    let n = hs.n;
    let t = hs.trunc.min(f.trunc()).min(g.trunc());
    let hs = hs.truncate(t);
    let x = solve_linear_series(&hs.omega, &gradient(&g.with_trunc(t), n, ctx)?)?;
    let df = gradient(&f.with_trunc(t), n, ctx)?;
    Ok(df.iter().zip(&x).fold(HSeries::zero(t), |acc, (a, b)| acc.add(&a.mul(b))))
}

/// The Noether current of the discrete problem for the planar rotation and its
/// reduction to (φ, φ̇).
#[derive(Clone, Debug, PartialEq)]
pub struct RotationInvariant {
    pub jet: HSeries,
    pub reduced: HSeries,
}

pub fn rotation_invariant(pipe: &Pipeline) -> Result<RotationInvariant> {
    if pipe.problem.dim() != 2 {
        return Err(Error::InvalidProblem("rotation invariant needs dimension 2".into()));
    }
    let ctx = pipe.ctx();
    let jet = noether_current(&pipe.lagrangian, &SymmetryGenerator::rotation(), None, ctx)?;
    let reduced = reduce_invariant(&jet, &pipe.subs)?;
    Ok(RotationInvariant { jet, reduced })
}

/// Rank of the Jacobian of the given functions at a numeric point in (φ, φ̇).
pub fn numeric_rank(fs: &[HSeries], point: &[f64], params: &[f64], potential: &dyn Fn(usize, f64) -> f64, ctx: &Context) -> Result<usize> {
    let n = point.len() / 2;
    let s: f64 = point[..n].iter().map(|x| x * x).sum();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for f in fs {
        let g = gradient(f, n, ctx)?;
        let row = g
            .iter()
            .map(|gs| {
                let mut total = 0.0;
                for (_, e) in gs.terms() {
                    total += e.eval(params, &mut |a| match a {
                        Atom::Jet { comp, order } if order < 2 => point[order as usize * n + comp as usize],
                        Atom::V(k) => potential(k as usize, s),
                        _ => f64::NAN,
                    });
                }
                total
            })
            .collect();
        rows.push(row);
    }
    Ok(rank(rows, 1e-9))
}

fn rank(mut m: Vec<Vec<f64>>, tol: f64) -> usize {
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    let scale = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    let mut r = 0;
    for c in 0..cols {
        let piv = (r..m.len()).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()));
        let Some(p) = piv else { break };
        if m[p][c].abs() <= tol * scale {
            continue;
        }
        m.swap(r, p);
        for i in r + 1..m.len() {
            let f = m[i][c] / m[r][c];
            for j in c..cols {
                m[i][j] -= f * m[r][j];
            }
        }
        r += 1;
    }
    r
}
