//! Numeric experiments on the rotating-wave problem.

use anyhow::{anyhow, bail, Context as _, Result};
use bea_core::hamstruct::Pipeline;
use bea_core::numlab::{
    from_canonical, integrate_midpoint, multistep_functional, multistep_grid, order_study, rk4, seed_from_flow,
    to_canonical, CanonicalFlow, ConvergenceTable, MidpointConfig, MultistepRun, NumericBinding, Observables,
    PotentialFn, ReducedFlow, Trajectory,
};
use bea_core::stencil::StencilProblem;

/// Implicit midpoint in the Darboux variables along an N-truncated reduced flow.
#[derive(Clone, Debug)]
pub struct MidpointSetup {
    pub binding: NumericBinding,
    pub trunc: usize,
    /// (φ, φ̇) at ξ = 0.
    pub x0: [f64; 4],
    pub step: f64,
    pub span: f64,
    pub every: usize,
    pub fp_tol: f64,
    pub fp_maxiter: usize,
}

/// The functional equation stepped as a multistep formula, seeded from a reduced flow.
#[derive(Clone, Debug)]
pub struct MultistepSetup {
    pub binding: NumericBinding,
    /// Truncation of the reduced flow used for the seed values.
    pub seed_trunc: usize,
    /// (φ, φ̇) at ξ = 0.
    pub x0: [f64; 4],
    pub span: f64,
    /// RK4 substeps per lattice step for the seed.
    pub seed_sub: usize,
}

#[derive(Clone, Debug)]
pub enum Preset {
    Midpoint(MidpointSetup),
    Multistep(MultistepSetup),
}

pub const PRESETS: [&str; 3] = ["fig4", "fig5", "fig7"];

fn binding(alpha: f64, c: f64, dt: f64, dx: f64, coeffs: &[f64]) -> NumericBinding {
    NumericBinding::new(alpha, c, dt, dx, PotentialFn::Polynomial(coeffs.to_vec())).expect("|c| != 1")
}

pub fn preset(name: &str) -> Result<Preset> {
    match name {
        // continuous system, V(a) = −½a − a²
        "fig4" => Ok(Preset::Midpoint(MidpointSetup {
            binding: binding(-1.0, 2.0, 0.0, 0.0, &[0.0, -0.5, -1.0]),
            trunc: 0,
            x0: [0.1, 0.1, 0.1, 0.1],
            step: 1e-2,
            span: 100.0,
            every: 10,
            fp_tol: 1e-14,
            fp_maxiter: 100,
        })),
        // V(s) = −0.1 s⁴ + s, initial point given in (𝔮, 𝔭)
        "fig5" => {
            let (alpha, c) = (0.3, 2.0);
            Ok(Preset::Midpoint(MidpointSetup {
                binding: binding(alpha, c, 0.15, 0.1, &[0.0, 1.0, 0.0, 0.0, -0.1]),
                trunc: 2,
                x0: from_canonical(&[-0.11, -0.01, -0.1, 0.1], alpha, c),
                step: 1e-2,
                span: 500.0,
                every: 10,
                fp_tol: 1e-14,
                fp_maxiter: 100,
            }))
        }
        // V(s) = s² with the sign of W in the discrete Lagrangian, h = 1, Δx = cΔt/2
        "fig7" => {
            let (c, dt) = (2.0, 0.15);
            Ok(Preset::Multistep(MultistepSetup {
                binding: binding(0.3, c, dt, c * dt / 2.0, &[0.0, 0.0, -1.0]),
                seed_trunc: 4,
                x0: [0.1, -0.05, 0.0, 0.1],
                span: 120.0,
                seed_sub: 64,
            }))
        }
        _ => bail!("unknown preset `{name}` (expected one of {})", PRESETS.join(", ")),
    }
}

impl Preset {
    pub fn binding_mut(&mut self) -> &mut NumericBinding {
        match self {
            Preset::Midpoint(s) => &mut s.binding,
            Preset::Multistep(s) => &mut s.binding,
        }
    }

    /// Truncation order the symbolic pipeline must reach.
    pub fn trunc(&self) -> usize {
        match self {
            Preset::Midpoint(s) => s.trunc,
            Preset::Multistep(s) => s.seed_trunc,
        }
    }

    pub fn run(&self, pipe: &Pipeline) -> Result<Trajectory> {
        match self {
            Preset::Midpoint(s) => run_midpoint(s, pipe),
            Preset::Multistep(s) => run_multistep(s, pipe).map(|(t, _)| t),
        }
    }
}

pub fn rotating_pipeline(trunc: usize) -> Result<Pipeline> {
    let p = StencilProblem::rotating(trunc)?;
    Pipeline::run(&p).with_context(|| format!("symbolic pipeline at N = {trunc}"))
}

pub fn energy_channel(k: usize) -> String {
    format!("H_{k}")
}

pub fn rotation_channel(k: usize) -> String {
    format!("I_rot_{k}")
}

/// Adds 𝓗 and I_rot^mod at every even truncation up to `upto`; `to_jet` maps a stored state to (φ, φ̇).
fn add_observables(t: &mut Trajectory, pipe: &Pipeline, b: &NumericBinding, upto: usize, to_jet: &dyn Fn(&[f64]) -> [f64; 4]) -> Result<()> {
    let obs = Observables::new(pipe, b)?;
    for k in (0..=upto).step_by(2) {
        let e = obs.energy_at(k).ok_or_else(|| anyhow!("no energy at order {k}"))?;
        t.add_channel(&energy_channel(k), &|x| e.eval1(&to_jet(x)))?;
        let r = obs.rotation_at(k).ok_or_else(|| anyhow!("no rotation invariant at order {k}"))?;
        t.add_channel(&rotation_channel(k), &|x| r.eval1(&to_jet(x)))?;
    }
    Ok(())
}

/// States are stored in (𝔮, 𝔭).
pub fn run_midpoint(s: &MidpointSetup, pipe: &Pipeline) -> Result<Trajectory> {
    let b = &s.binding;
    let flow = CanonicalFlow { inner: ReducedFlow::new(&pipe.reduced.rhs, s.trunc, pipe.ctx(), b)?, alpha: b.alpha, c: b.c };
    let cfg = MidpointConfig { step: s.step, fp_tol: s.fp_tol, fp_maxiter: s.fp_maxiter };
    let steps = (s.span / s.step).round() as usize;
    let y0 = to_canonical(&s.x0, b.alpha, b.c);
    let mut t = integrate_midpoint(&flow, &y0, 0.0, steps, s.every.max(1), &cfg)?;
    let (alpha, c) = (b.alpha, b.c);
    add_observables(&mut t, pipe, b, s.trunc, &|y| from_canonical(y, alpha, c))?;
    Ok(t)
}

/// States are (φ, φ̇) with φ̇ from lattice differences; the residual channel is per accepted step.
pub fn run_multistep(s: &MultistepSetup, pipe: &Pipeline) -> Result<(Trajectory, MultistepRun)> {
    let b = &s.binding;
    let grid = multistep_grid(&pipe.problem, b)?;
    let flow = ReducedFlow::new(&pipe.reduced.rhs, s.seed_trunc, pipe.ctx(), b)?;
    let seed = seed_from_flow(&flow, &s.x0, grid.delta, 2 * grid.reach, s.seed_sub)?;
    let total = (s.span / grid.delta).round() as usize + 1;
    let run = multistep_functional(&grid, b, &seed, total.saturating_sub(seed.len()))?;
    let mut t = Trajectory::default();
    for (xi, phi, dphi) in run.with_velocities() {
        t.push(xi, &[phi[0], phi[1], dphi[0], dphi[1]]);
    }
    add_observables(&mut t, pipe, b, s.seed_trunc, &|x| [x[0], x[1], x[2], x[3]])?;
    Ok((t, run))
}

/// Distance between the multistep trajectory and the N-truncated reduced flow over ξ ∈ [0, span]
/// for each scaling h of the step sizes.
pub fn multistep_order_study(base: &MultistepSetup, pipe: &Pipeline, n: usize, hs: &[f64], span: f64, floor: f64) -> Result<ConvergenceTable> {
    let mut errors = Vec::with_capacity(hs.len());
    for &h in hs {
        let b = base.binding.clone().with_h(h);
        let setup = MultistepSetup { binding: b.clone(), span, ..base.clone() };
        let grid = multistep_grid(&pipe.problem, &b)?;
        let flow = ReducedFlow::new(&pipe.reduced.rhs, n, pipe.ctx(), &b)?;
        let (_, run) = run_multistep(&setup, pipe)?;
        let mut x = base.x0.to_vec();
        let mut err: f64 = 0.0;
        for (i, phi) in run.phi.iter().enumerate() {
            if i > 0 {
                x = rk4(&flow, &x, grid.delta, base.seed_sub)?;
            }
            err = err.max((phi[0] - x[0]).hypot(phi[1] - x[1]));
        }
        errors.push(err);
    }
    Ok(order_study(hs, &errors, floor)?)
}
