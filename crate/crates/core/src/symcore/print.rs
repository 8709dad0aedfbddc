//! Canonical text and LaTeX printers. Both outputs are accepted by `parse`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use super::context::{Context, ALPHA, C, DT, DX};
use super::expr::{Atom, Expr, Mono};
use super::gcd::{gcd, normalize_primitive};
use super::poly::{Monom, Poly, MAX_VARS};
use super::ratfunc::RatFunc;
use super::series::HSeries;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Style {
    Text,
    Latex,
}

fn var_name(ctx: &Context, v: usize, style: Style) -> String {
    match style {
        Style::Text => ctx.param_name(v).to_string(),
        Style::Latex => match v {
            ALPHA => "\\alpha".to_string(),
            C => "c".to_string(),
            DT => "\\Delta t".to_string(),
            DX => "\\Delta x".to_string(),
            _ => format!("\\mathrm{{{}}}", ctx.param_name(v)),
        },
    }
}

fn pow_suffix(e: u32, style: Style) -> String {
    match (e, style) {
        (1, _) => String::new(),
        (_, Style::Text) => format!("^{}", e),
        (_, Style::Latex) => format!("^{{{}}}", e),
    }
}

fn sep(style: Style) -> &'static str {
    match style {
        Style::Text => "*",
        Style::Latex => " ",
    }
}

fn monom_str(ctx: &Context, m: Monom, style: Style) -> String {
    let mut parts = Vec::new();
    for v in 0..MAX_VARS {
        let e = m.exp(v);
        if e > 0 {
            parts.push(format!("{}{}", var_name(ctx, v, style), pow_suffix(e as u32, style)));
        }
    }
    parts.join(sep(style))
}

/// Prints a coefficient polynomial without spaces in text style.
pub fn poly_str(ctx: &Context, p: &Poly, style: Style) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut s = String::new();
    for (i, (m, c)) in p.terms().iter().enumerate() {
        let neg = c.is_negative();
        if i == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(match (neg, style) {
                (true, Style::Text) => "-",
                (false, Style::Text) => "+",
                (true, Style::Latex) => " - ",
                (false, Style::Latex) => " + ",
            });
        }
        let a = c.abs();
        let ms = monom_str(ctx, *m, style);
        if ms.is_empty() {
            s.push_str(&a.to_string());
        } else if a.is_one() {
            s.push_str(&ms);
        } else {
            s.push_str(&a.to_string());
            s.push_str(sep(style));
            s.push_str(&ms);
        }
    }
    s
}

fn is_bare_poly(p: &Poly) -> bool {
    if p.len() != 1 {
        return false;
    }
    let (m, c) = &p.terms()[0];
    if m.is_one() {
        return !c.is_negative();
    }
    c.is_one() && m.vars_mask().count_ones() == 1
}

pub fn ratfunc_str(ctx: &Context, r: &RatFunc, style: Style) -> String {
    let n = poly_str(ctx, r.num(), style);
    if r.den().is_one() {
        return n;
    }
    let d = poly_str(ctx, r.den(), style);
    match style {
        Style::Latex => format!("\\frac{{{}}}{{{}}}", n, d),
        Style::Text => {
            let n = if r.num().len() > 1 { format!("({})", n) } else { n };
            let d = if is_bare_poly(r.den()) { d } else { format!("({})", d) };
            format!("{}/{}", n, d)
        }
    }
}

pub fn atom_str(a: Atom, style: Style) -> String {
    match (a, style) {
        (Atom::Jet { comp, order }, Style::Text) => {
            if order == 0 {
                format!("phi{}", comp + 1)
            } else {
                format!("d{}phi{}", order, comp + 1)
            }
        }
        (Atom::Jet { comp, order }, Style::Latex) => match order {
            0 => format!("\\phi_{{{}}}", comp + 1),
            1 => format!("\\dot{{\\phi}}_{{{}}}", comp + 1),
            2 => format!("\\ddot{{\\phi}}_{{{}}}", comp + 1),
            k => format!("\\phi_{{{}}}^{{({})}}", comp + 1, k),
        },
        (Atom::V(k), Style::Text) => format!("V{}", k),
        (Atom::V(k), Style::Latex) => match k {
            0 => "V".to_string(),
            1 => "V'".to_string(),
            2 => "V''".to_string(),
            k => format!("V^{{({})}}", k),
        },
        (Atom::W(cnt), style) => {
            let mut idx = String::new();
            for (j, &c) in cnt.iter().enumerate() {
                for _ in 0..c {
                    idx.push_str(&(j + 1).to_string());
                }
            }
            match (idx.is_empty(), style) {
                (true, _) => "W".to_string(),
                (false, Style::Text) => format!("W_{}", idx),
                (false, Style::Latex) => format!("W_{{{}}}", idx),
            }
        }
    }
}

pub fn mono_str(m: &Mono, style: Style) -> String {
    let mut parts = Vec::new();
    for (a, e) in m.factors() {
        let s = atom_str(*a, style);
        let p = match (*e, style) {
            (1, _) => s,
            (e, Style::Text) => format!("{}^{}", s, e),
            (e, Style::Latex) => {
                let needs_wrap = !matches!(a, Atom::Jet { order, .. } if *order <= 2) && !matches!(a, Atom::V(0));
                if needs_wrap {
                    format!("\\left({}\\right)^{{{}}}", s, e)
                } else {
                    format!("{}^{{{}}}", s, e)
                }
            }
        };
        parts.push(p);
    }
    parts.join(sep(style))
}

/// One signed term; returns (is_negative, body).
fn term_str(ctx: &Context, m: &Mono, r: &RatFunc, style: Style) -> (bool, String) {
    let ms = mono_str(m, style);
    let num = r.num();
    let single = num.len() == 1;
    let neg = single && num.terms()[0].1.is_negative();
    let num_abs = if neg { num.neg() } else { num.clone() };
    let ns = if num_abs.is_one() && !ms.is_empty() {
        String::new()
    } else if single {
        poly_str(ctx, &num_abs, style)
    } else {
        match style {
            Style::Text => format!("({})", poly_str(ctx, &num_abs, style)),
            Style::Latex => format!("\\left({}\\right)", poly_str(ctx, &num_abs, style)),
        }
    };
    let body = match style {
        Style::Text => {
            let mut b = ns;
            if !ms.is_empty() {
                if !b.is_empty() {
                    b.push('*');
                }
                b.push_str(&ms);
            }
            if !r.den().is_one() {
                let d = poly_str(ctx, r.den(), style);
                b.push('/');
                if is_bare_poly(r.den()) {
                    b.push_str(&d);
                } else {
                    b.push('(');
                    b.push_str(&d);
                    b.push(')');
                }
            }
            b
        }
        Style::Latex => {
            if r.den().is_one() {
                match (ns.is_empty(), ms.is_empty()) {
                    (true, _) => ms,
                    (false, true) => ns,
                    (false, false) => format!("{} {}", ns, ms),
                }
            } else {
                let n = if single { poly_str(ctx, &num_abs, style) } else { poly_str(ctx, num, style) };
                let f = format!("\\frac{{{}}}{{{}}}", n, poly_str(ctx, r.den(), style));
                if ms.is_empty() {
                    f
                } else {
                    format!("{} {}", f, ms)
                }
            }
        }
    };
    (neg, body)
}

pub fn expr_str(ctx: &Context, e: &Expr, style: Style) -> String {
    if e.is_zero() {
        return "0".to_string();
    }
    let mut s = String::new();
    for (i, (m, r)) in e.terms().iter().enumerate() {
        let (neg, body) = term_str(ctx, m, r, style);
        if i == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        s.push_str(&body);
    }
    s
}

pub fn to_text(ctx: &Context, e: &Expr) -> String {
    expr_str(ctx, e, Style::Text)
}

pub fn to_latex(ctx: &Context, e: &Expr) -> String {
    expr_str(ctx, e, Style::Latex)
}

pub fn poly_lcm(a: &Poly, b: &Poly) -> Poly {
    let g = gcd(a, b);
    normalize_primitive(&a.mul(&b.div_exact(&g).expect("gcd divides")))
}

/// Splits e into (numerator expression, common denominator polynomial).
pub fn common_denominator(e: &Expr) -> (Expr, RatFunc) {
    let mut den = Poly::one();
    let mut den_int = BigInt::one();
    for (_, r) in e.terms() {
        let d = r.den();
        let c = d.content();
        let prim = d.div_int_exact(&c);
        den = poly_lcm(&den, &prim);
        den_int = num_integer::Integer::lcm(&den_int, &c);
    }
    let d = RatFunc::from_poly(den.scale(&den_int));
    (e.scale(&d), d)
}

/// Prints e as "(numerator)/(denominator)" with a single common denominator.
pub fn collected_scalar_str(ctx: &Context, e: &Expr, style: Style) -> (String, Option<String>) {
    let (n, d) = common_denominator(e);
    let ns = expr_str(ctx, &n, style);
    let ds = if d.is_one() { None } else { Some(poly_str(ctx, d.num(), style)) };
    (ns, ds)
}

/// For a 2-vector linear in the jets with coefficients of the form a·I + b·J,
/// returns the list (order, a, b) such that v = Σ a φ^(k) + b J φ^(k).
pub fn rotation_decompose(v: &[Expr]) -> Option<Vec<(usize, Expr, Expr)>> {
    if v.len() != 2 {
        return None;
    }
    let max = v.iter().filter_map(|e| e.max_jet_order()).max().unwrap_or(0);
    let mut rest0 = v[0].clone();
    let mut rest1 = v[1].clone();
    let mut out = Vec::new();
    for k in 0..=max {
        let a00 = v[0].pdiff_atom_plain(Atom::jet(0, k));
        let a01 = v[0].pdiff_atom_plain(Atom::jet(1, k));
        let a10 = v[1].pdiff_atom_plain(Atom::jet(0, k));
        let a11 = v[1].pdiff_atom_plain(Atom::jet(1, k));
        for x in [&a00, &a01, &a10, &a11] {
            if x.contains_atom(|a| a.is_jet()) {
                return None;
            }
        }
        if a00 != a11 || a01 != a10.neg() {
            return None;
        }
        rest0 = rest0.sub(&a00.mul(&Expr::jet(0, k))).sub(&a01.mul(&Expr::jet(1, k)));
        rest1 = rest1.sub(&a10.mul(&Expr::jet(0, k))).sub(&a11.mul(&Expr::jet(1, k)));
        if !a00.is_zero() || !a01.is_zero() {
            out.push((k, a00, a01));
        }
    }
    if !rest0.is_zero() || !rest1.is_zero() {
        return None;
    }
    Some(out)
}

/// Vector printer used in reports: collects a·φ^(k) + b·Jφ^(k) when possible,
/// component-wise otherwise.
pub fn vector_str(ctx: &Context, v: &[Expr]) -> String {
    if let Some(parts) = rotation_decompose(v) {
        if parts.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (k, a, b) in parts {
            let sym = if k == 0 { "phi".to_string() } else { format!("d{}phi", k) };
            for (coef, jsym) in [(a, sym.clone()), (b, format!("J*{}", sym))] {
                if coef.is_zero() {
                    continue;
                }
                let (n, d) = collected_scalar_str(ctx, &coef, Style::Text);
                let (neg, n) = match n.strip_prefix('-') {
                    Some(r) if !r.contains(" + ") && !r.contains(" - ") => (true, r.to_string()),
                    _ => (false, n),
                };
                let nterms = coef.len();
                let mut t = if n == "1" {
                    jsym.clone()
                } else if nterms > 1 {
                    format!("({})*{}", n, jsym)
                } else {
                    format!("{}*{}", n, jsym)
                };
                if let Some(d) = d {
                    t = format!("{}/({})", t, d);
                }
                if s.is_empty() {
                    if neg {
                        s.push('-');
                    }
                } else {
                    s.push_str(if neg { " - " } else { " + " });
                }
                s.push_str(&t);
            }
        }
        return s;
    }
    let comps: Vec<String> = v.iter().map(|e| to_text(ctx, e)).collect();
    format!("[{}]", comps.join(", "))
}

pub fn series_str(ctx: &Context, s: &HSeries, style: Style) -> String {
    let mut lines = Vec::new();
    for (k, e) in s.terms() {
        match style {
            Style::Text => lines.push(format!("h^{}: {}", k, expr_str(ctx, e, style))),
            Style::Latex => lines.push(format!("h^{{{}}}: & {} \\\\", k, expr_str(ctx, e, style))),
        }
    }
    if lines.is_empty() {
        lines.push("0".to_string());
    }
    lines.push(format!("O(h^{})", s.trunc() + 1));
    lines.join("\n")
}
