//! Bicoloured trees, their elementary differentials, the P-series fit of a
//! first-order modified Lagrangian and the characteristic functions of the
//! stencil read as a multistep formula.
//!
//! A tree has black nodes (partial derivatives of W) and white leaves (φ̇).
//! Each edge carries a summation index; a black node of degree k contributes
//! the k-th partial derivative of W in the indices of its edges.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jetcalc::{euler_vector, LagrangianDensity};
use crate::modeq::{reduce_order, solve_for_second_derivative, ReducedODE};
use crate::stencil::{Potential, StencilProblem};
use crate::symcore::Atom;
use crate::symcore::{Context, Expr, HSeries, Mono, RatFunc, C, DT, DX};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Colour {
    Black,
    White,
}

#[derive(Clone, Debug)]
pub struct BiTree {
    colours: Vec<Colour>,
    edges: Vec<(usize, usize)>,
    canonical: String,
}

impl PartialEq for BiTree {
    fn eq(&self, o: &BiTree) -> bool {
        self.canonical == o.canonical
    }
}

impl Eq for BiTree {}

impl PartialOrd for BiTree {
    fn partial_cmp(&self, o: &BiTree) -> Option<core::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for BiTree {
    fn cmp(&self, o: &BiTree) -> core::cmp::Ordering {
        self.canonical.cmp(&o.canonical)
    }
}

impl BiTree {
    pub fn new(colours: Vec<Colour>, edges: Vec<(usize, usize)>) -> Result<BiTree> {
        let n = colours.len();
        if n == 0 || edges.len() + 1 != n {
            return Err(Error::InvalidProblem("a tree on n nodes has n − 1 edges".into()));
        }
        if edges.iter().any(|&(a, b)| a >= n || b >= n || a == b) {
            return Err(Error::InvalidProblem("edge endpoint out of range".into()));
        }
        // connectivity by union–find
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut x = x;
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return Err(Error::InvalidProblem("edges contain a cycle".into()));
            }
            parent[ra] = rb;
        }
        let mut t = BiTree { colours, edges, canonical: String::new() };
        for v in 0..n {
            if t.colours[v] == Colour::White && t.degree(v) != 1 {
                return Err(Error::InvalidProblem("white nodes must be leaves".into()));
            }
        }
        if !t.colours.contains(&Colour::Black) {
            return Err(Error::InvalidProblem("a tree needs a black node".into()));
        }
        t.canonical = t.canonical_form();
        Ok(t)
    }

    pub fn nodes(&self) -> usize {
        self.colours.len()
    }

    pub fn colours(&self) -> &[Colour] {
        &self.colours
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    fn neighbours(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| if a == v { Some(b) } else if b == v { Some(a) } else { None })
            .collect()
    }

    /// Sum of the degrees of the black nodes.
    pub fn order(&self) -> usize {
        (0..self.nodes()).filter(|&v| self.colours[v] == Colour::Black).map(|v| self.degree(v)).sum()
    }

    pub fn black_count(&self) -> usize {
        self.colours.iter().filter(|&&c| c == Colour::Black).count()
    }

    pub fn white_count(&self) -> usize {
        self.nodes() - self.black_count()
    }

    fn encode(&self, v: usize, parent: Option<usize>) -> String {
        let mut kids: Vec<String> =
            self.neighbours(v).into_iter().filter(|&u| Some(u) != parent).map(|u| self.encode(u, Some(v))).collect();
        kids.sort();
        let c = if self.colours[v] == Colour::Black { 'B' } else { 'W' };
        if kids.is_empty() {
            format!("{}", c)
        } else {
            format!("{}({})", c, kids.join(","))
        }
    }

    fn canonical_form(&self) -> String {
        (0..self.nodes())
            .filter(|&v| self.colours[v] == Colour::Black)
            .map(|v| self.encode(v, None))
            .min()
            .unwrap_or_default()
    }

    /// Bracket form rooted at a black node, e.g. `B(W,W)`.
    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    /// Indented drawing rooted at the canonical root.
    pub fn to_ascii(&self) -> String {
        let root = (0..self.nodes())
            .filter(|&v| self.colours[v] == Colour::Black)
            .min_by_key(|&v| self.encode(v, None))
            .unwrap_or(0);
        let mut out = String::new();
        self.draw(root, None, "", true, true, &mut out);
        out
    }

    fn draw(&self, v: usize, parent: Option<usize>, prefix: &str, last: bool, root: bool, out: &mut String) {
        let mark = if self.colours[v] == Colour::Black { "●" } else { "○" };
        if root {
            out.push_str(mark);
        } else {
            out.push_str(prefix);
            out.push_str(if last { "└─" } else { "├─" });
            out.push_str(mark);
        }
        out.push('\n');
        let mut kids: Vec<usize> = self.neighbours(v).into_iter().filter(|&u| Some(u) != parent).collect();
        kids.sort_by_key(|&u| self.encode(u, Some(v)));
        let child_prefix = if root {
            String::new()
        } else {
            format!("{}{}", prefix, if last { "  " } else { "│ " })
        };
        let k = kids.len();
        for (i, u) in kids.into_iter().enumerate() {
            self.draw(u, Some(v), &child_prefix, i + 1 == k, false, out);
        }
    }

    /// A black tree on the given edges with `whites[v]` white leaves hung on node v.
    pub fn from_black(black_edges: &[(usize, usize)], whites: &[usize]) -> Result<BiTree> {
        let b = whites.len();
        let mut colours = alloc::vec![Colour::Black; b];
        let mut edges = black_edges.to_vec();
        for (v, &w) in whites.iter().enumerate() {
            for _ in 0..w {
                colours.push(Colour::White);
                edges.push((v, colours.len() - 1));
            }
        }
        BiTree::new(colours, edges)
    }
}

/// All free trees on black nodes only, with b nodes, as edge lists.
fn black_skeletons(b: usize) -> Vec<Vec<(usize, usize)>> {
    let mut seen: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    let mut frontier: Vec<Vec<(usize, usize)>> = alloc::vec![Vec::new()];
    for size in 1..b {
        let mut next = Vec::new();
        let mut keys = BTreeSet::new();
        for e in &frontier {
            for v in 0..size {
                let mut e2 = e.clone();
                e2.push((v, size));
                let t = BiTree::new(alloc::vec![Colour::Black; size + 1], e2.clone()).expect("valid skeleton");
                if keys.insert(t.canonical.clone()) {
                    next.push(e2);
                }
            }
        }
        frontier = next;
    }
    for e in frontier {
        let t = BiTree::new(alloc::vec![Colour::Black; b], e.clone()).expect("valid skeleton");
        seen.entry(t.canonical).or_insert(e);
    }
    seen.into_values().collect()
}

fn compositions(total: usize, parts: usize, out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>) {
    if cur.len() + 1 == parts {
        cur.push(total);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for k in 0..=total {
        cur.push(k);
        compositions(total - k, parts, out, cur);
        cur.pop();
    }
}

pub const MAX_TREE_ORDER: usize = 8;

/// Canonical, duplicate-free list of trees whose black degrees sum to `order`.
pub fn enumerate_trees(order: usize) -> Result<Vec<BiTree>> {
    if order == 0 || order % 2 == 1 || order > MAX_TREE_ORDER {
        return Err(Error::Unsupported(format!("tree order {}", order)));
    }
    let mut set = BTreeSet::new();
    // 2(b − 1) + w = order
    for b in 1..=order / 2 + 1 {
        let w = order - 2 * (b - 1);
        for skel in black_skeletons(b) {
            let mut comps = Vec::new();
            compositions(w, b, &mut comps, &mut Vec::new());
            for c in comps {
                set.insert(BiTree::from_black(&skel, &c)?);
            }
        }
    }
    Ok(set.into_iter().collect())
}

/// The trees of the given order in the listing order of the reference
/// coefficient table; position k − 1 holds F_{order,k}.
pub fn labelled_trees(order: usize) -> Result<Vec<BiTree>> {
    let path = |b: usize| -> Vec<(usize, usize)> { (1..b).map(|i| (i - 1, i)).collect() };
    let t = |edges: &[(usize, usize)], w: &[usize]| BiTree::from_black(edges, w);
    match order {
        2 => Ok(alloc::vec![t(&path(2), &[0, 0])?, t(&path(1), &[2])?]),
        4 => Ok(alloc::vec![
            t(&path(1), &[4])?,
            t(&path(2), &[0, 2])?,
            t(&path(2), &[1, 1])?,
            t(&path(3), &[0, 0, 0])?,
        ]),
        6 => Ok(alloc::vec![
            t(&path(1), &[6])?,
            t(&path(3), &[1, 1, 0])?,
            t(&path(3), &[1, 0, 1])?,
            t(&path(4), &[0, 0, 0, 0])?,
            t(&path(3), &[2, 0, 0])?,
            t(&path(3), &[0, 2, 0])?,
            t(&path(2), &[1, 3])?,
            t(&path(2), &[2, 2])?,
            t(&path(2), &[0, 4])?,
            t(&[(0, 1), (0, 2), (0, 3)], &[0, 0, 0, 0])?,
        ]),
        _ => Err(Error::Unsupported(format!("no reference labels at order {}", order))),
    }
}

/// Σ over edge indices of the product of W-partials at black nodes and φ̇ at white leaves.
pub fn elementary_differential(t: &BiTree, dim: usize) -> Result<Expr> {
    if dim == 0 || dim > crate::symcore::MAX_DIM {
        return Err(Error::InvalidProblem(format!("dimension {}", dim)));
    }
    let ne = t.edges.len();
    let incident: Vec<Vec<usize>> =
        (0..t.nodes()).map(|v| (0..ne).filter(|&e| t.edges[e].0 == v || t.edges[e].1 == v).collect()).collect();
    let mut idx = alloc::vec![0usize; ne];
    let mut acc: BTreeMap<Mono, i64> = BTreeMap::new();
    loop {
        let mut m = Mono::one();
        for v in 0..t.nodes() {
            let ix: Vec<usize> = incident[v].iter().map(|&e| idx[e]).collect();
            let a = match t.colours[v] {
                Colour::Black => Atom::w_index(&ix),
                Colour::White => Atom::jet(ix[0], 1),
            };
            m = m.mul_atom(a);
        }
        *acc.entry(m).or_insert(0) += 1;
        // odometer over d^E index tuples
        let mut k = 0;
        while k < ne {
            idx[k] += 1;
            if idx[k] < dim {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == ne {
            break;
        }
    }
    Ok(Expr::from_terms(acc.into_iter().map(|(m, c)| (m, RatFunc::int(c))).collect()))
}

/// Coefficients a_{order,k} of L = ½(c²−1)‖φ̇‖² + W + Σ h^order Σ_k a_{order,k} F_{order,k}.
#[derive(Clone, Debug, PartialEq)]
pub struct PSeriesFit {
    pub dim: usize,
    pub coeffs: BTreeMap<(usize, usize), RatFunc>,
    pub lagrangian: HSeries,
}

impl PSeriesFit {
    pub fn get(&self, order: usize, k: usize) -> Option<&RatFunc> {
        self.coeffs.get(&(order, k))
    }
}

fn leading_lagrangian(dim: usize, c: &RatFunc) -> Expr {
    let half = RatFunc::ratio(1, 2).mul(&c.mul(c).sub(&RatFunc::one()));
    (0..dim).fold(Expr::w(&[]), |acc, j| acc.add(&Expr::jet(j, 1).pow(2).scale(&half)))
}

/// Solves Σ_k a_k v_k = target by matching monomials; rows are over RatFunc.
fn solve_matching(vs: &[Vec<Expr>], target: &[Expr]) -> Result<Vec<RatFunc>> {
    let nk = vs.len();
    let mut rows: BTreeMap<(usize, Mono), Vec<RatFunc>> = BTreeMap::new();
    let add = |comp: usize, e: &Expr, col: usize, rows: &mut BTreeMap<(usize, Mono), Vec<RatFunc>>| {
        for (m, c) in e.terms() {
            let r = rows.entry((comp, m.clone())).or_insert_with(|| alloc::vec![RatFunc::zero(); nk + 1]);
            r[col] = r[col].add(c);
        }
    };
    for (k, v) in vs.iter().enumerate() {
        for (comp, e) in v.iter().enumerate() {
            add(comp, e, k, &mut rows);
        }
    }
    for (comp, e) in target.iter().enumerate() {
        add(comp, e, nk, &mut rows);
    }
    let mut m: Vec<Vec<RatFunc>> = rows.into_values().collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..nk {
        let Some(p) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][col].inv();
        for j in col..=nk {
            m[r][j] = m[r][j].mul(&inv);
        }
        for i in 0..m.len() {
            if i != r && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for j in col..=nk {
                    let t = m[r][j].mul(&f);
                    m[i][j] = m[i][j].sub(&t);
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if m[r..].iter().any(|row| !row[nk].is_zero()) {
        return Err(Error::Inconsistent);
    }
    if pivots.len() < nk {
        return Err(Error::Underdetermined(nk - pivots.len()));
    }
    Ok((0..nk).map(|i| m[i][nk].clone()).collect())
}

/// Fits the P-series ansatz to a reduced modified equation of a non-rotating
/// travelling wave with general potential in dimension `dim`.
pub fn fit_coefficients(r: &ReducedODE, dim: usize, max_order: usize, ctx: &Context) -> Result<PSeriesFit> {
    if r.dim() != dim {
        return Err(Error::InvalidProblem("dimension mismatch".into()));
    }
    if max_order > r.trunc {
        return Err(Error::Truncation(format!("fit to h^{} needs the reduced equation to that order", max_order)));
    }
    let c = RatFunc::var(C);
    let k = c.mul(&c).sub(&RatFunc::one());
    let kinv = k.inv();
    for (j, s) in r.rhs.iter().enumerate() {
        if s.coeff(0) != Expr::w(&[j]).scale(&kinv) {
            return Err(Error::InvalidProblem("fit expects φ̈ = ∇W/(c²−1) at leading order".into()));
        }
    }
    let mut coeffs = BTreeMap::new();
    let mut lag = HSeries::from_expr(leading_lagrangian(dim, &c), max_order);
    let lead: Vec<Expr> = r.rhs.iter().map(|s| s.coeff(0)).collect();
    for order in (1..=max_order).filter(|o| o % 2 == 0) {
        let trees = labelled_trees(order).or_else(|_| enumerate_trees(order))?;
        let known = LagrangianDensity::new(lag.truncate(order), dim);
        let ode = solve_for_second_derivative(&euler_vector(&known, ctx)?)?;
        let (base, _) = reduce_order(&ode, ctx)?;
        let target: Vec<Expr> = (0..dim).map(|j| r.rhs[j].coeff(order).sub(&base.rhs[j].coeff(order))).collect();
        let mut vs = Vec::new();
        let mut fs = Vec::new();
        for t in &trees {
            let f = elementary_differential(t, dim)?;
            let el = euler_vector(&LagrangianDensity::new(HSeries::from_expr(f.clone(), 0), dim), ctx)?;
            // leading order: φ̈ picks up E(F)/(c²−1) with φ̈ ↦ ∇W/(c²−1)
            let v: Vec<Expr> = el
                .iter()
                .map(|s| {
                    s.coeff(0)
                        .substitute(&|a| match a {
                            Atom::Jet { comp, order: 2 } => Some(lead[comp as usize].clone()),
                            _ => None,
                        })
                        .scale(&kinv)
                })
                .collect();
            vs.push(v);
            fs.push(f);
        }
        let a = solve_matching(&vs, &target)?;
        let mut term = Expr::zero();
        for (i, (ai, f)) in a.iter().zip(&fs).enumerate() {
            coeffs.insert((order, i + 1), ai.clone());
            term = term.add(&f.scale(ai));
        }
        lag = lag.add(&HSeries::monomial(term, order, max_order));
    }
    for odd in (1..=max_order).filter(|o| o % 2 == 1) {
        if r.rhs.iter().any(|s| !s.coeff(odd).is_zero()) {
            return Err(Error::Inconsistent);
        }
    }
    Ok(PSeriesFit { dim, coeffs, lagrangian: lag })
}

/// Builds the non-rotating problem, reduces it and fits the ansatz.
pub fn fit_travelling_wave(dim: usize, max_order: usize) -> Result<(PSeriesFit, ReducedODE, StencilProblem)> {
    let p = StencilProblem::travelling(dim, max_order)?;
    let ode = solve_for_second_derivative(&crate::stencil::expand_functional_equation(&p)?)?;
    let (r, _) = reduce_order(&ode, &p.ctx)?;
    let fit = fit_coefficients(&r, dim, max_order, &p.ctx)?;
    Ok((fit, r, p))
}

/// ρ and σ as finite sums of coefficient·τ^exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicPair {
    pub rho: Vec<(RatFunc, RatFunc)>,
    pub sigma: Vec<(RatFunc, RatFunc)>,
    /// Δs = 2cΔt.
    pub step: RatFunc,
}

fn push_merged(v: &mut Vec<(RatFunc, RatFunc)>, e: RatFunc, coef: RatFunc) {
    if let Some(slot) = v.iter_mut().find(|(x, _)| *x == e) {
        slot.1 = slot.1.add(&coef);
    } else {
        v.push((e, coef));
    }
}

pub fn characteristic_functions(p: &StencilProblem) -> Result<CharacteristicPair> {
    if !p.alpha.is_zero() {
        return Err(Error::InvalidProblem("characteristic functions need α = 0".into()));
    }
    if p.c.is_zero() {
        return Err(Error::InvalidProblem("characteristic functions need c ≠ 0".into()));
    }
    let half = RatFunc::ratio(1, 2);
    let r = p.dx.mul(&p.c.mul(&p.dt).scale_int(2).inv());
    let q = p.c.mul(&p.c).mul(&p.dt.mul(&p.dt)).mul(&p.dx.mul(&p.dx).inv());
    let four_c2 = p.c.mul(&p.c).scale_int(4);
    let mut rho = Vec::new();
    push_merged(&mut rho, RatFunc::zero(), four_c2.clone());
    push_merged(&mut rho, half.sub(&r), q.scale_int(-4));
    push_merged(&mut rho, half.clone(), q.sub(&p.c.mul(&p.c)).scale_int(8));
    push_merged(&mut rho, half.add(&r), q.scale_int(-4));
    push_merged(&mut rho, RatFunc::one(), four_c2);
    rho.retain(|(_, c)| !c.is_zero());
    Ok(CharacteristicPair { rho, sigma: alloc::vec![(half, RatFunc::one())], step: p.c.mul(&p.dt).scale_int(2) })
}

impl CharacteristicPair {
    /// ρ(1).
    pub fn rho_at_one(&self) -> RatFunc {
        self.rho.iter().fold(RatFunc::zero(), |a, (_, c)| a.add(c))
    }

    /// (ρ(e^{hD})φ − h²Δs²σ(e^{hD})∇W(φ))/h² around the midpoint, up to h^trunc;
    /// τ^e is the shift by (e − ½)Δs·h.
    pub fn expand(&self, p: &StencilProblem, trunc: usize) -> Result<Vec<HSeries>> {
        let n = p.dim();
        let half = RatFunc::ratio(1, 2);
        let grad = p.grad_potential();
        let mut fact = RatFunc::one();
        let mut out: Vec<Vec<Expr>> = alloc::vec![alloc::vec![Expr::zero(); trunc + 1]; n];
        for m in 0..=trunc + 2 {
            if m > 0 {
                fact = fact.mul(&RatFunc::int(m as i64));
            }
            let mut coef = RatFunc::zero();
            for (e, c) in &self.rho {
                let s = e.sub(&half).mul(&self.step);
                coef = coef.add(&c.mul(&s.pow(m as i32)));
            }
            let coef = coef.mul(&fact.inv());
            if coef.is_zero() {
                continue;
            }
            if m < 2 {
                return Err(Error::InvalidProblem(format!("ρ expansion has a non-zero h^{} term", m)));
            }
            for j in 0..n {
                out[j][m - 2] = out[j][m - 2].add(&Expr::jet(j, m).scale(&coef));
            }
        }
        for (e, c) in &self.sigma {
            let s = e.sub(&half).mul(&self.step);
            let mut fact = RatFunc::one();
            for m in 0..=trunc {
                if m > 0 {
                    fact = fact.mul(&RatFunc::int(m as i64));
                }
                let coef = c.mul(&s.pow(m as i32)).mul(&fact.inv()).mul(&self.step.pow(2)).neg();
                if coef.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let g = if m == 0 {
                        grad[j].clone()
                    } else {
                        return Err(Error::Unsupported("σ with shifted support".into()));
                    };
                    out[j][m] = out[j][m].add(&g.scale(&coef));
                }
            }
        }
        Ok(out.into_iter().map(|v| HSeries::from_coeffs(v, trunc)).collect())
    }
}

/// A problem of the kind the characteristic functions describe.
pub fn non_rotating_problem(dim: usize, trunc: usize) -> Result<StencilProblem> {
    StencilProblem::five_point(dim, RatFunc::zero(), RatFunc::var(C), RatFunc::var(DT), RatFunc::var(DX), Potential::General, trunc)
}
