//! Numeric backend: compiled evaluators, midpoint and RK4 integrators, the
//! functional equation stepped as a multistep recurrence, and order studies.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hamstruct::Pipeline;
use crate::noether::rotation_invariant;
use crate::stencil::{Potential, StencilProblem};
use crate::symcore::{Atom, Context, Expr, HSeries, Mono, RatFunc};

/// V as a function of a = ‖φ‖².
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialFn {
    /// V(a) = Σ p_i a^i.
    Polynomial(Vec<f64>),
    /// V(a) = −exp(−(a−1)²).
    GaussianWell,
}

impl PotentialFn {
    pub fn deriv(&self, k: usize, a: f64) -> f64 {
        match self {
            PotentialFn::Polynomial(p) => {
                let mut s = 0.0;
                for i in (k..p.len()).rev() {
                    let f: f64 = (i + 1 - k..=i).map(|j| j as f64).product();
                    s = s * a + p[i] * f;
                }
                s
            }
            PotentialFn::GaussianWell => {
                // d^k/da^k e^{−u²} = (−1)^k H_k(u) e^{−u²}, u = a − 1
                let u = a - 1.0;
                let (mut h0, mut h1) = (1.0, 2.0 * u);
                let hk = if k == 0 {
                    h0
                } else {
                    for n in 1..k {
                        let h2 = 2.0 * u * h1 - 2.0 * n as f64 * h0;
                        h0 = h1;
                        h1 = h2;
                    }
                    h1
                };
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                -sign * hk * libm::exp(-u * u)
            }
        }
    }
}

/// Concrete values for the problem parameters and the potential.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericBinding {
    pub alpha: f64,
    pub c: f64,
    pub dt: f64,
    pub dx: f64,
    pub h: f64,
    pub extra: Vec<(String, f64)>,
    pub potential: PotentialFn,
}

impl NumericBinding {
    pub fn new(alpha: f64, c: f64, dt: f64, dx: f64, potential: PotentialFn) -> Result<NumericBinding> {
        if libm::fabs(libm::fabs(c) - 1.0) < 1e-12 {
            return Err(Error::InvalidProblem("|c| = 1 is degenerate".into()));
        }
        Ok(NumericBinding { alpha, c, dt, dx, h: 1.0, extra: Vec::new(), potential })
    }

    pub fn with_h(mut self, h: f64) -> NumericBinding {
        self.h = h;
        self
    }

    pub fn with_param(mut self, name: &str, v: f64) -> NumericBinding {
        self.extra.retain(|(n, _)| n != name);
        self.extra.push((name.into(), v));
        self
    }

    /// Values in context order: α, c, Δt, Δx, then user parameters.
    pub fn param_values(&self, ctx: &Context) -> Result<Vec<f64>> {
        let mut v = alloc::vec![self.alpha, self.c, self.dt, self.dx];
        for name in &ctx.params()[4..] {
            let x = self
                .extra
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, x)| *x)
                .ok_or_else(|| Error::UnboundParam(name.clone()))?;
            v.push(x);
        }
        Ok(v)
    }

    pub fn eval(&self, r: &RatFunc, ctx: &Context) -> Result<f64> {
        Ok(r.eval_f64(&self.param_values(ctx)?))
    }
}

/// Straight-line evaluator for a list of expressions over a shared atom table.
#[derive(Clone, Debug)]
pub struct Evaluator {
    dim: usize,
    max_jet: usize,
    atoms: Vec<Atom>,
    outputs: Vec<Vec<(f64, Vec<(usize, u16)>)>>,
    potential: PotentialFn,
}

fn collect_terms(es: &[(Expr, f64)], vals: &[f64]) -> Vec<(Mono, f64)> {
    let mut acc: alloc::collections::BTreeMap<Mono, f64> = alloc::collections::BTreeMap::new();
    for (e, scale) in es {
        for (m, c) in e.terms() {
            *acc.entry(m.clone()).or_insert(0.0) += c.eval_f64(vals) * scale;
        }
    }
    acc.into_iter().collect()
}

impl Evaluator {
    fn build(outputs: Vec<Vec<(Mono, f64)>>, dim: usize, potential: PotentialFn) -> Result<Evaluator> {
        let mut atoms: Vec<Atom> = Vec::new();
        let mut max_jet = 0;
        let mut compiled = Vec::new();
        for terms in outputs {
            let mut out = Vec::new();
            for (m, c) in terms {
                let mut f = Vec::new();
                for &(a, e) in m.factors() {
                    match a {
                        Atom::W(_) => return Err(Error::Unsupported("numeric evaluation of an abstract W".into())),
                        Atom::Jet { comp, order } => {
                            if comp as usize >= dim {
                                return Err(Error::InvalidProblem("jet component out of range".into()));
                            }
                            max_jet = max_jet.max(order as usize);
                        }
                        Atom::V(_) => {}
                    }
                    let slot = match atoms.iter().position(|b| *b == a) {
                        Some(s) => s,
                        None => {
                            atoms.push(a);
                            atoms.len() - 1
                        }
                    };
                    f.push((slot, e));
                }
                out.push((c, f));
            }
            compiled.push(out);
        }
        Ok(Evaluator { dim, max_jet, atoms, outputs: compiled, potential })
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Highest jet order read; points must carry (max_jet + 1)·dim values.
    pub fn max_jet(&self) -> usize {
        self.max_jet
    }

    /// Evaluates at a jet point laid out as φ, φ̇, φ̈, … .
    pub fn eval(&self, point: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.dim;
        if point.len() < (self.max_jet + 1) * n || out.len() < self.outputs.len() {
            return Err(Error::Numeric("point or output buffer too short".into()));
        }
        let s: f64 = point[..n].iter().map(|x| x * x).sum();
        let mut vals = [0.0f64; 64];
        let mut heap = Vec::new();
        let vals: &mut [f64] = if self.atoms.len() <= 64 {
            &mut vals[..self.atoms.len()]
        } else {
            heap.resize(self.atoms.len(), 0.0);
            &mut heap
        };
        for (slot, a) in self.atoms.iter().enumerate() {
            vals[slot] = match *a {
                Atom::Jet { comp, order } => point[order as usize * n + comp as usize],
                Atom::V(k) => self.potential.deriv(k as usize, s),
                Atom::W(_) => unreachable!(),
            };
        }
        for (o, terms) in self.outputs.iter().enumerate() {
            let mut acc = 0.0;
            for (c, f) in terms {
                let mut t = *c;
                for &(slot, e) in f {
                    let x = vals[slot];
                    for _ in 0..e {
                        t *= x;
                    }
                }
                acc += t;
            }
            out[o] = acc;
        }
        Ok(())
    }

    pub fn eval1(&self, point: &[f64]) -> Result<f64> {
        let mut out = [0.0];
        self.eval(point, &mut out)?;
        Ok(out[0])
    }
}

pub fn compile(e: &Expr, dim: usize, ctx: &Context, b: &NumericBinding) -> Result<Evaluator> {
    compile_vec(core::slice::from_ref(e), dim, ctx, b)
}

pub fn compile_vec(es: &[Expr], dim: usize, ctx: &Context, b: &NumericBinding) -> Result<Evaluator> {
    let vals = b.param_values(ctx)?;
    let outs = es.iter().map(|e| collect_terms(&[(e.clone(), 1.0)], &vals)).collect();
    Evaluator::build(outs, dim, b.potential.clone())
}

/// Compiles Σ_{k≤upto} h^k s_k for each series, with h taken from the binding.
pub fn compile_series(ss: &[HSeries], upto: usize, dim: usize, ctx: &Context, b: &NumericBinding) -> Result<Evaluator> {
    let vals = b.param_values(ctx)?;
    let mut outs = Vec::new();
    for s in ss {
        if upto > s.trunc() {
            return Err(Error::Truncation(format!("series known to h^{} only", s.trunc())));
        }
        let mut hk = 1.0;
        let mut parts = Vec::new();
        for k in 0..=upto {
            parts.push((s.coeff(k), hk));
            hk *= b.h;
        }
        outs.push(collect_terms(&parts, &vals));
    }
    Evaluator::build(outs, dim, b.potential.clone())
}

/// Tree-walking evaluation of Σ h^k s_k, used to cross-check compiled code.
pub fn interpret_series(s: &HSeries, upto: usize, point: &[f64], dim: usize, ctx: &Context, b: &NumericBinding) -> Result<f64> {
    let vals = b.param_values(ctx)?;
    let a: f64 = point[..dim].iter().map(|x| x * x).sum();
    let mut total = 0.0;
    let mut hk = 1.0;
    for k in 0..=upto.min(s.trunc()) {
        total += hk
            * s.coeff(k).eval(&vals, &mut |at| match at {
                Atom::Jet { comp, order } => point[order as usize * dim + comp as usize],
                Atom::V(j) => b.potential.deriv(j as usize, a),
                Atom::W(_) => f64::NAN,
            });
        hk *= b.h;
    }
    Ok(total)
}

pub trait Flow {
    fn dim(&self) -> usize;
    fn rhs(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
}

/// φ̈ = F(φ, φ̇) as a first-order system in (φ, φ̇).
#[derive(Clone, Debug)]
pub struct ReducedFlow {
    n: usize,
    ev: Evaluator,
}

impl ReducedFlow {
    pub fn new(rhs: &[HSeries], upto: usize, ctx: &Context, b: &NumericBinding) -> Result<ReducedFlow> {
        let n = rhs.len();
        let ev = compile_series(rhs, upto, n, ctx, b)?;
        if ev.max_jet() > 1 {
            return Err(Error::InvalidProblem("reduced right-hand side depends on φ̈".into()));
        }
        Ok(ReducedFlow { n, ev })
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.ev
    }
}

impl Flow for ReducedFlow {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn rhs(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.n;
        out[..n].copy_from_slice(&x[n..2 * n]);
        self.ev.eval(x, &mut out[n..2 * n])
    }
}

/// J v with J = [[0, 1], [−1, 0]].
fn apply_j(v: &[f64]) -> [f64; 2] {
    [v[1], -v[0]]
}

/// Darboux coordinates 𝔮 = φ, 𝔭 = (c²−1)φ̇ − cαJφ of the continuous system.
pub fn to_canonical(x: &[f64], alpha: f64, c: f64) -> [f64; 4] {
    let k = c * c - 1.0;
    let jp = apply_j(&x[..2]);
    [x[0], x[1], k * x[2] - c * alpha * jp[0], k * x[3] - c * alpha * jp[1]]
}

pub fn from_canonical(y: &[f64], alpha: f64, c: f64) -> [f64; 4] {
    let k = c * c - 1.0;
    let jq = apply_j(&y[..2]);
    [y[0], y[1], (y[2] + c * alpha * jq[0]) / k, (y[3] + c * alpha * jq[1]) / k]
}

/// A planar flow in (φ, φ̇) written in the Darboux variables (𝔮, 𝔭).
pub struct CanonicalFlow<F: Flow> {
    pub inner: F,
    pub alpha: f64,
    pub c: f64,
}

impl<F: Flow> Flow for CanonicalFlow<F> {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        let x = from_canonical(y, self.alpha, self.c);
        let mut dx = [0.0; 4];
        self.inner.rhs(&x, &mut dx)?;
        let k = self.c * self.c - 1.0;
        let jv = apply_j(&dx[..2]);
        out[0] = dx[0];
        out[1] = dx[1];
        out[2] = k * dx[2] - self.c * self.alpha * jv[0];
        out[3] = k * dx[3] - self.c * self.alpha * jv[1];
        Ok(())
    }
}

pub struct FnFlow<G: Fn(&[f64], &mut [f64])> {
    pub dim: usize,
    pub f: G,
}

impl<G: Fn(&[f64], &mut [f64])> Flow for FnFlow<G> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(x, out);
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MidpointConfig {
    pub step: f64,
    pub fp_tol: f64,
    pub fp_maxiter: usize,
}

impl MidpointConfig {
    pub fn new(step: f64) -> MidpointConfig {
        MidpointConfig { step, fp_tol: 1e-14, fp_maxiter: 100 }
    }
}

/// One implicit midpoint step solved by fixed-point iteration; returns the iteration count.
pub fn midpoint_step(f: &dyn Flow, x: &[f64], cfg: &MidpointConfig, out: &mut [f64]) -> Result<usize> {
    let d = f.dim();
    let mut k = alloc::vec![0.0; d];
    let mut mid = alloc::vec![0.0; d];
    f.rhs(x, &mut k)?;
    for it in 1..=cfg.fp_maxiter {
        for i in 0..d {
            mid[i] = x[i] + 0.5 * cfg.step * k[i];
        }
        let mut k2 = alloc::vec![0.0; d];
        f.rhs(&mid, &mut k2)?;
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..d {
            diff = diff.max(libm::fabs(k2[i] - k[i]) * cfg.step);
            scale = scale.max(libm::fabs(x[i]));
        }
        k = k2;
        if diff <= cfg.fp_tol * scale.max(1.0) {
            for i in 0..d {
                out[i] = x[i] + cfg.step * k[i];
            }
            return Ok(it);
        }
    }
    Err(Error::Numeric(format!("fixed-point iteration did not converge in {} steps", cfg.fp_maxiter)))
}

pub fn rk4_step(f: &dyn Flow, x: &[f64], step: f64, out: &mut [f64]) -> Result<()> {
    let d = f.dim();
    let mut k1 = alloc::vec![0.0; d];
    let mut k2 = alloc::vec![0.0; d];
    let mut k3 = alloc::vec![0.0; d];
    let mut k4 = alloc::vec![0.0; d];
    let mut y = alloc::vec![0.0; d];
    f.rhs(x, &mut k1)?;
    for i in 0..d {
        y[i] = x[i] + 0.5 * step * k1[i];
    }
    f.rhs(&y, &mut k2)?;
    for i in 0..d {
        y[i] = x[i] + 0.5 * step * k2[i];
    }
    f.rhs(&y, &mut k3)?;
    for i in 0..d {
        y[i] = x[i] + step * k3[i];
    }
    f.rhs(&y, &mut k4)?;
    for i in 0..d {
        out[i] = x[i] + step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

/// Advances by `span` (either sign) with `n` RK4 steps.
pub fn rk4(f: &dyn Flow, x0: &[f64], span: f64, n: usize) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut y = x.clone();
    let s = span / n as f64;
    for _ in 0..n {
        rk4_step(f, &x, s, &mut y)?;
        core::mem::swap(&mut x, &mut y);
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Trajectory {
    pub xi: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub channels: Vec<Channel>,
}

impl Trajectory {
    pub fn push(&mut self, xi: f64, x: &[f64]) {
        self.xi.push(xi);
        self.states.push(x.to_vec());
    }

    pub fn add_channel(&mut self, name: &str, f: &dyn Fn(&[f64]) -> Result<f64>) -> Result<()> {
        let values = self.states.iter().map(|x| f(x)).collect::<Result<Vec<f64>>>()?;
        self.channels.retain(|c| c.name != name);
        self.channels.push(Channel { name: name.into(), values });
        Ok(())
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    /// max |X(ξ) − X(ξ₀)|.
    pub fn drift(&self, name: &str) -> Option<f64> {
        let v = self.channel(name)?;
        let x0 = *v.first()?;
        Some(v.iter().fold(0.0, |m, x| m.max(libm::fabs(x - x0))))
    }

    /// max X − min X.
    pub fn amplitude(&self, name: &str) -> Option<f64> {
        let v = self.channel(name)?;
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        Some(hi - lo)
    }

    pub fn is_valid(&self) -> bool {
        self.xi.windows(2).all(|w| w[1] > w[0])
            && self.states.len() == self.xi.len()
            && self.channels.iter().all(|c| c.values.len() == self.xi.len())
    }
}

/// Implicit midpoint from ξ₀ over `steps` steps, recording every `every`-th state.
pub fn integrate_midpoint(f: &dyn Flow, x0: &[f64], xi0: f64, steps: usize, every: usize, cfg: &MidpointConfig) -> Result<Trajectory> {
    let mut t = Trajectory::default();
    let mut x = x0.to_vec();
    let mut y = x.clone();
    t.push(xi0, &x);
    let every = every.max(1);
    for i in 1..=steps {
        midpoint_step(f, &x, cfg, &mut y)?;
        core::mem::swap(&mut x, &mut y);
        if i % every == 0 || i == steps {
            t.push(xi0 + i as f64 * cfg.step, &x);
        }
    }
    Ok(t)
}

/// The stencil on the lattice ξ + iδ.
#[derive(Clone, Debug, PartialEq)]
pub struct MultistepGrid {
    pub delta: f64,
    /// (offset in units of δ, weight / h², rotation angle of the + shift)
    pub shifts: Vec<(usize, f64, f64)>,
    /// Largest offset in units of δ.
    pub reach: usize,
    pub mass: f64,
    dim: usize,
}

fn rational_approx(x: f64, max_den: u64) -> Option<(u64, u64)> {
    for q in 1..=max_den {
        let p = libm::round(x * q as f64);
        if p >= 1.0 && libm::fabs(p / q as f64 - x) <= 1e-10 * x.max(1.0) {
            return Some((p as u64, q));
        }
    }
    None
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_u64(b, a % b)
    }
}

pub fn multistep_grid(p: &StencilProblem, b: &NumericBinding) -> Result<MultistepGrid> {
    if p.potential != Potential::Radial {
        return Err(Error::Unsupported("multistep stepping needs a radial potential".into()));
    }
    let ctx = &p.ctx;
    let offs: Vec<f64> = p.terms.iter().map(|t| b.eval(&t.offset, ctx).map(|o| libm::fabs(o) * b.h)).collect::<Result<_>>()?;
    let base = offs.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(base > 0.0) {
        return Err(Error::InvalidProblem("stencil offsets must be nonzero".into()));
    }
    let ratios: Vec<(u64, u64)> = offs
        .iter()
        .map(|o| rational_approx(o / base, 64).ok_or_else(|| Error::InvalidProblem("offsets are not rationally related".into())))
        .collect::<Result<_>>()?;
    let lcm = ratios.iter().fold(1u64, |l, &(_, q)| l / gcd_u64(l, q) * q);
    let units: Vec<u64> = ratios.iter().map(|&(pp, q)| pp * (lcm / q)).collect();
    let g = units.iter().fold(0u64, |g, &u| gcd_u64(g, u));
    let delta = base / lcm as f64 * g as f64;
    let mut shifts = Vec::new();
    for (t, u) in p.terms.iter().zip(&units) {
        let w = b.eval(&t.weight, ctx)? / (b.h * b.h);
        let rot = b.eval(&t.rotation, ctx)? * b.h * b.alpha;
        shifts.push(((u / g) as usize, w, -rot));
    }
    let reach = shifts.iter().map(|s| s.0).max().unwrap_or(0);
    Ok(MultistepGrid { delta, shifts, reach, mass: b.eval(&p.mass, ctx)?, dim: p.dim() })
}

fn rot(v: &[f64], theta: f64) -> [f64; 2] {
    // exp(θJ) v
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    [c * v[0] + s * v[1], -s * v[0] + c * v[1]]
}

impl MultistepGrid {
    fn grad(&self, phi: &[f64], b: &NumericBinding) -> [f64; 2] {
        let a = phi[0] * phi[0] + phi[1] * phi[1];
        let v1 = b.potential.deriv(1, a);
        [(v1 + self.mass) * phi[0], (v1 + self.mass) * phi[1]]
    }

    /// Functional-equation residual at the centre and a magnitude scale for it.
    pub fn residual(&self, values: &dyn Fn(i64) -> [f64; 2], b: &NumericBinding) -> ([f64; 2], f64) {
        let c = values(0);
        let g = self.grad(&c, b);
        let mut r = [-g[0], -g[1]];
        let mut scale = libm::fabs(g[0]) + libm::fabs(g[1]);
        for &(u, w, th) in &self.shifts {
            let p = rot(&values(u as i64), th);
            let m = rot(&values(-(u as i64)), -th);
            for j in 0..2 {
                let t = w * (p[j] - 2.0 * c[j] + m[j]);
                r[j] += t;
                scale += libm::fabs(w) * (libm::fabs(p[j]) + 2.0 * libm::fabs(c[j]) + libm::fabs(m[j]));
            }
        }
        (r, scale)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultistepRun {
    pub delta: f64,
    pub xi: Vec<f64>,
    pub phi: Vec<[f64; 2]>,
    /// Relative functional-equation residual at each centre that produced a new value.
    pub residuals: Vec<f64>,
}

impl MultistepRun {
    /// φ̇ at interior points by the eighth-order central difference; (ξ, φ, φ̇) triples.
    pub fn with_velocities(&self) -> Vec<(f64, [f64; 2], [f64; 2])> {
        const W: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
        let n = self.phi.len();
        let mut out = Vec::new();
        for i in 4..n.saturating_sub(4) {
            let mut d = [0.0; 2];
            for (k, w) in W.iter().enumerate() {
                for j in 0..2 {
                    d[j] += w * (self.phi[i + k + 1][j] - self.phi[i - k - 1][j]);
                }
            }
            out.push((self.xi[i], self.phi[i], [d[0] / self.delta, d[1] / self.delta]));
        }
        out
    }
}

/// Steps the functional equation as a recurrence for the newest lattice point.
/// `seed` holds φ at ξ = 0, δ, …, (2·reach − 1)δ.
pub fn multistep_functional(grid: &MultistepGrid, b: &NumericBinding, seed: &[[f64; 2]], steps: usize) -> Result<MultistepRun> {
    if grid.dim != 2 {
        return Err(Error::Unsupported("multistep stepping is implemented for planar φ".into()));
    }
    let m = grid.reach;
    if seed.len() < 2 * m {
        return Err(Error::InvalidProblem(format!("seed needs {} values, got {}", 2 * m, seed.len())));
    }
    let mut phi: Vec<[f64; 2]> = seed.to_vec();
    let mut residuals = Vec::new();
    for _ in 0..steps {
        let i = phi.len() - m; // centre
        // newest-point coefficient: Σ w R(θ) over shifts reaching m
        let mut a = [[0.0; 2]; 2];
        for &(u, w, th) in &grid.shifts {
            if u == m {
                let (s, c) = (libm::sin(th), libm::cos(th));
                a[0][0] += w * c;
                a[0][1] += w * s;
                a[1][0] -= w * s;
                a[1][1] += w * c;
            }
        }
        let known = |k: i64| -> [f64; 2] {
            if k == m as i64 {
                [0.0, 0.0]
            } else {
                phi[(i as i64 + k) as usize]
            }
        };
        let (r, _) = grid.residual(&known, b);
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if libm::fabs(det) < 1e-300 {
            return Err(Error::Numeric("newest-point coefficient is singular".into()));
        }
        let new = [(-r[0] * a[1][1] + r[1] * a[0][1]) / det, (r[0] * a[1][0] - r[1] * a[0][0]) / det];
        phi.push(new);
        let all = |k: i64| phi[(i as i64 + k) as usize];
        let (r2, scale) = grid.residual(&all, b);
        residuals.push(libm::sqrt(r2[0] * r2[0] + r2[1] * r2[1]) / scale.max(f64::MIN_POSITIVE));
    }
    let xi = (0..phi.len()).map(|k| k as f64 * grid.delta).collect();
    Ok(MultistepRun { delta: grid.delta, xi, phi, residuals })
}

/// φ at ξ = kδ, k = 0..count, along a flow in (φ, φ̇), by RK4 with `sub` steps per δ.
pub fn seed_from_flow(f: &dyn Flow, x0: &[f64], delta: f64, count: usize, sub: usize) -> Result<Vec<[f64; 2]>> {
    let mut x = x0.to_vec();
    let mut out = alloc::vec![[x[0], x[1]]];
    for _ in 1..count {
        x = rk4(f, &x, delta, sub)?;
        out.push([x[0], x[1]]);
    }
    Ok(out)
}

/// Relative functional-equation residual at ξ₀ of the flow through x0.
pub fn residual_on_flow(f: &dyn Flow, x0: &[f64], grid: &MultistepGrid, b: &NumericBinding, sub: usize) -> Result<f64> {
    let mut vals: Vec<(i64, [f64; 2])> = alloc::vec![(0, [x0[0], x0[1]])];
    for &(u, _, _) in &grid.shifts {
        for s in [1i64, -1] {
            let k = s * u as i64;
            if vals.iter().all(|(j, _)| *j != k) {
                let x = rk4(f, x0, k as f64 * grid.delta, sub * u.max(1))?;
                vals.push((k, [x[0], x[1]]));
            }
        }
    }
    let get = |k: i64| vals.iter().find(|(j, _)| *j == k).map(|(_, v)| *v).unwrap_or([f64::NAN; 2]);
    let (r, _) = grid.residual(&get, b);
    Ok(libm::sqrt(r[0] * r[0] + r[1] * r[1]))
}

/// Observed orders from errors at geometrically spaced h.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub hs: Vec<f64>,
    pub errors: Vec<f64>,
    pub pair_orders: Vec<f64>,
    pub slope: f64,
    /// Some error sits at the double-precision noise floor.
    pub noise_floor: bool,
}

pub fn order_study(hs: &[f64], errors: &[f64], floor: f64) -> Result<ConvergenceTable> {
    if hs.len() < 3 || hs.len() != errors.len() {
        return Err(Error::InvalidProblem("order study needs at least three step sizes".into()));
    }
    let lx: Vec<f64> = hs.iter().map(|h| libm::log(*h)).collect();
    let ly: Vec<f64> = errors.iter().map(|e| libm::log(e.max(f64::MIN_POSITIVE))).collect();
    let pair_orders = (1..hs.len()).map(|i| (ly[i] - ly[i - 1]) / (lx[i] - lx[i - 1])).collect();
    let n = hs.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(ConvergenceTable {
        hs: hs.to_vec(),
        errors: errors.to_vec(),
        pair_orders,
        slope: sxy / sxx,
        noise_floor: errors.iter().any(|e| *e <= floor),
    })
}

/// Numeric observables of a rotating pipeline: 𝓗 and I_rot^mod at each even truncation.
pub struct Observables {
    pub energy: Vec<(usize, Evaluator)>,
    pub rotation: Vec<(usize, Evaluator)>,
}

impl Observables {
    pub fn new(pipe: &Pipeline, b: &NumericBinding) -> Result<Observables> {
        let ctx = pipe.ctx();
        let n = pipe.problem.dim();
        let inv = rotation_invariant(pipe)?;
        let mut energy = Vec::new();
        let mut rotation = Vec::new();
        for k in (0..=pipe.reduced.trunc).step_by(2) {
            energy.push((k, compile_series(core::slice::from_ref(&pipe.ham.h), k, n, ctx, b)?));
            rotation.push((k, compile_series(core::slice::from_ref(&inv.reduced), k, n, ctx, b)?));
        }
        Ok(Observables { energy, rotation })
    }

    pub fn energy_at(&self, k: usize) -> Option<&Evaluator> {
        self.energy.iter().find(|(j, _)| *j == k).map(|(_, e)| e)
    }

    pub fn rotation_at(&self, k: usize) -> Option<&Evaluator> {
        self.rotation.iter().find(|(j, _)| *j == k).map(|(_, e)| e)
    }
}
