//! Golden symbolic identities: exact comparisons of derived objects against reference forms.

use anyhow::{anyhow, Result};
use bea_core::hamstruct::Pipeline;
use bea_core::noether::rotation_invariant;
use bea_core::ptrees::fit_travelling_wave;
use bea_core::symcore::{parse, to_text, Atom, Context, Expr, Mono, RatFunc};
use serde::Serialize;

use crate::experiments::rotating_pipeline;

#[derive(Clone, Debug, Serialize)]
pub struct Golden {
    pub name: String,
    pub matched: bool,
    pub computed: String,
    pub reference: String,
}

/// Coefficient of a pure jet monomial: the sum of all terms whose jet factors are exactly `jets`,
/// with those factors removed.
pub fn jet_coefficient(e: &Expr, jets: &[(Atom, u16)]) -> Expr {
    let mut want: Vec<(Atom, u16)> = jets.to_vec();
    want.sort();
    let mut out = Vec::new();
    for (m, c) in e.terms() {
        let (mut j, rest): (Vec<(Atom, u16)>, Vec<(Atom, u16)>) = m.factors().iter().partition(|(a, _)| a.is_jet());
        j.sort();
        if j == want {
            out.push((Mono::from_factors(rest), c.clone()));
        }
    }
    Expr::from_terms(out)
}

fn jet(comp: usize, order: usize, e: u16) -> (Atom, u16) {
    (Atom::jet(comp, order), e)
}

struct Suite<'a> {
    ctx: &'a Context,
    out: Vec<Golden>,
}

impl Suite<'_> {
    fn expr(&mut self, name: &str, computed: &Expr, reference: &str) -> Result<()> {
        let r = parse(reference, self.ctx).map_err(|e| anyhow!("reference for {name}: {e}"))?;
        self.out.push(Golden {
            name: name.into(),
            matched: &r == computed,
            computed: to_text(self.ctx, computed),
            reference: to_text(self.ctx, &r),
        });
        Ok(())
    }

    fn scalar(&mut self, name: &str, computed: Option<&RatFunc>, reference: &str) -> Result<()> {
        let e = computed.map(|r| Expr::constant(r.clone())).unwrap_or_else(Expr::zero);
        self.expr(name, &e, reference)
    }
}

const NORM: &str = "(phi1^2+phi2^2)";
const NORM_D: &str = "(d1phi1^2+d1phi2^2)";

pub const D1: &str =
    "(2*alpha^2*V1*(dx^2-c^4*dt^2) + V1^2*(dx^2-c^4*dt^2) + alpha^4*((1-2*c^2)*dt^2+dx^2))/(24*(c^2-1)^2)";
pub const D2: &str =
    "(alpha^2*(-3*c^4*dt^2 + c^2*(5*dx^2-3*dt^2) + dx^2) + (c^2-1)*V1*(c^4*dt^2-dx^2))/(12*(c^2-1)^2)";
pub const D3: &str = "alpha*c*(c^2*dt^2-dx^2)*(alpha^2+V1)/(3*(c^2-1)^2)";
pub const D4: &str = "V2*(c^4*dt^2-dx^2)/(6*(c^2-1))";

pub const W1: &str =
    "alpha*c*(alpha^2*(dx^2-dt^2) + (dx^2-2*c^2*dt^2+c^4*dt^2)*(V1+(phi1^2+phi2^2)*V2))/(3*(c^2-1)^2)";
pub const W2: &str = "alpha*c*(c^2*dt^2-dx^2)/(3*(c^2-1))";
pub const Z_SCALAR: &str =
    "-alpha^2*(c^2*((c^2-3)*dt^2+dx^2)+dx^2)/(6*(c^2-1)^2) + (c^2-1)*(dx^2-c^4*dt^2)*V1/(6*(c^2-1)^2)";
pub const Z_RANK_ONE: &str = "-(c^4*dt^2-dx^2)*V2/(3*(c^2-1))";

pub const B1: &str = "alpha*c*(alpha^2*(dx^2-dt^2) + V1*(c^2*(c^2-2)*dt^2 + dx^2))";
pub const B2: &str = "alpha*c*(c^2-1)*(c^2*dt^2-dx^2)";
pub const B3: &str = "alpha^2*(c^4*dt^2 + c^2*(dx^2-3*dt^2) + dx^2) + (c^2-1)*V1*(c^4*dt^2-dx^2)";

pub const P1: &str = "(-3*dt^4*c^8 - 2*dt^4*c^6 + 10*dt^2*dx^2*c^4 - 2*dx^4*c^2 - 3*dx^4)/2160";
pub const P2: &str = "(-2*dt^4*c^8 - 3*dt^4*c^6 + 10*dt^2*dx^2*c^4 - 3*dx^4*c^2 - 2*dx^4)/720";
pub const P3: &str = "(10*dt^6*c^12 + 22*dt^6*c^10 + 3*dt^6*c^8 - 77*dt^4*dx^2*c^8 + 28*dt^2*dx^4*c^6 \
     - 28*dt^4*dx^2*c^6 - 3*dx^6*c^4 + 77*dt^2*dx^4*c^4 - 22*dx^6*c^2 - 10*dx^6)/302400";
pub const P4: &str = "(72*dt^6*c^12 + 94*dt^6*c^10 + 9*dt^6*c^8 - 413*dt^4*dx^2*c^8 + 112*dt^2*dx^4*c^6 \
     - 112*dt^4*dx^2*c^6 - 9*dx^6*c^4 + 413*dt^2*dx^4*c^4 - 94*dx^6*c^2 - 72*dx^6)/120960";

/// (multiplier, power of c²−1, polynomial) for the P-series coefficients a_{j,k}.
pub const A2: [(i64, i32, &str); 2] = [(1, -2, "(c^4*dt^2-dx^2)/24"), (1, -1, "(c^4*dt^2-dx^2)/12")];
pub const A4: [(i64, i32, &str); 4] = [(1, -2, P1), (6, -3, P1), (1, -3, P2), (3, -4, P1)];
pub const A6: [(i64, i32, &str); 10] = [
    (1, -3, P3),
    (60, -5, P3),
    (10, -5, P3),
    (1, -6, P4),
    (2, -5, P4),
    (45, -5, P3),
    (20, -4, P3),
    (1, -4, P4),
    (15, -4, P3),
    (15, -6, P3),
];

pub fn coefficient_text(m: i64, e: i32, p: &str) -> String {
    let pow = if e < 0 { format!("/(c^2-1)^{}", -e) } else { format!("*(c^2-1)^{e}") };
    format!("{m}*({p}){pow}")
}

fn rotating_identities(pipe: &Pipeline, s: &mut Suite) -> Result<()> {
    let lead = pipe.reduced.leading();
    s.expr("reduced leading term, component 1", &lead[0], "((alpha^2 + V1)*phi1 + 2*c*alpha*d1phi2)/(c^2-1)")?;

    let h2 = pipe.ham.h.coeff(2);
    s.expr("d1", &jet_coefficient(&h2, &[jet(0, 0, 2)]), D1)?;
    s.expr("d2", &jet_coefficient(&h2, &[jet(0, 1, 2)]), D2)?;
    s.expr("d3", &jet_coefficient(&h2, &[jet(0, 1, 1), jet(1, 0, 1)]), D3)?;
    s.expr("d4", &jet_coefficient(&h2, &[jet(0, 0, 2), jet(0, 1, 2)]), D4)?;
    s.expr(
        "modified Hamiltonian at h^2",
        &h2,
        &format!(
            "({D1})*{NORM} + ({D2})*{NORM_D} + ({D3})*(d1phi1*phi2 - d1phi2*phi1) + ({D4})*(phi1*d1phi1+phi2*d1phi2)^2"
        ),
    )?;

    let om = &pipe.ham.omega;
    let lead_rows = [
        ["0", "2*alpha*c", "1-c^2", "0"],
        ["-2*alpha*c", "0", "0", "1-c^2"],
        ["c^2-1", "0", "0", "0"],
        ["0", "c^2-1", "0", "0"],
    ];
    let mut ok = true;
    for (a, row) in lead_rows.iter().enumerate() {
        for (b, r) in row.iter().enumerate() {
            ok &= om[a][b].coeff(0) == parse(r, s.ctx)?;
        }
    }
    s.out.push(Golden {
        name: "symplectic form at h^0".into(),
        matched: ok,
        computed: bea_core::hamstruct::omega_text(&pipe.ham, 0, s.ctx).trim_end().replace('\n', "; "),
        reference: lead_rows.iter().map(|r| r.join(", ")).collect::<Vec<_>>().join("; "),
    });
    s.expr("w1", &om[0][1].coeff(2), W1)?;
    s.expr("w2", &om[2][3].coeff(2), W2)?;
    s.expr("Z", &om[0][2].coeff(2), &format!("({Z_RANK_ONE})*phi1^2 + {Z_SCALAR}"))?;

    let inv = rotation_invariant(pipe)?;
    let i2 = inv.reduced.coeff(2);
    let pre = "/(6*(c^2-1)^2)";
    s.expr("b1 (rotation invariant)", &jet_coefficient(&i2, &[jet(0, 0, 2)]), &format!("({B1}){pre}"))?;
    s.expr("b2 (rotation invariant)", &jet_coefficient(&i2, &[jet(0, 1, 2)]), &format!("({B2}){pre}"))?;
    s.expr("b3 (rotation invariant)", &jet_coefficient(&i2, &[jet(0, 0, 1), jet(1, 1, 1)]), &format!("({B3}){pre}"))?;
    Ok(())
}

fn pseries_identities(s: &mut Suite, fit: &bea_core::ptrees::PSeriesFit) -> Result<()> {
    for (order, table) in [(2usize, &A2[..]), (4, &A4[..]), (6, &A6[..])] {
        for (i, (m, e, p)) in table.iter().enumerate() {
            s.scalar(&format!("a_{{{order},{}}}", i + 1), fit.get(order, i + 1), &coefficient_text(*m, *e, p))?;
        }
    }
    let k = RatFunc::var(bea_core::symcore::C).pow(2).sub(&RatFunc::one());
    let strip = |order: usize, idx: usize, m: i64, e: i32| fit.get(order, idx).map(|a| a.mul(&k.pow(-e)).mul(&RatFunc::ratio(1, m)));
    s.scalar("b1 (P-series)", strip(4, 1, 1, -2).as_ref(), P1)?;
    s.scalar("b2 (P-series)", strip(4, 3, 1, -3).as_ref(), P2)?;
    s.scalar("b3 (P-series)", strip(6, 1, 1, -3).as_ref(), P3)?;
    s.scalar("b4 (P-series)", strip(6, 4, 1, -6).as_ref(), P4)?;
    Ok(())
}

/// Runs every golden identity.
pub fn run_golden() -> Result<Vec<Golden>> {
    let pipe = rotating_pipeline(2)?;
    let mut s = Suite { ctx: pipe.ctx(), out: Vec::new() };
    rotating_identities(&pipe, &mut s)?;
    let mut out = s.out;
    let (fit, _, problem) = fit_travelling_wave(2, 6)?;
    let mut s = Suite { ctx: &problem.ctx, out: Vec::new() };
    pseries_identities(&mut s, &fit)?;
    out.extend(s.out);
    Ok(out)
}
