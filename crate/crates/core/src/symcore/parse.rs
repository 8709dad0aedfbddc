//! Expression parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('+' | '-') unary | power
//! power   := primary ('^' exponent)?
//! exponent:= ['-'] integer | '(' ['-'] integer ')'
//! primary := integer | ident [call] | '(' expr ')'
//! ident   := phiJ | dKphiJ | V | VK | W | W_IJ.. | normsq | alpha | c | dt | dx | <declared param>
//! call    := '(' 'normsq' '(' 'phi' ')' ')'      (after VK, optional)
//!          | '(' 'phi' ')'                        (after normsq or W.., optional for W)
//! ```
//!
//! Division is only allowed by pure coefficients. The LaTeX printer output is
//! read through `parse_latex`, which lexes LaTeX into the same token stream
//! and treats juxtaposition as multiplication.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use super::context::Context;
use super::expr::{Atom, Expr};
use super::ratfunc::RatFunc;

/// Syntax tree before normalization.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Int(BigInt),
    Param(usize),
    Atom(Atom),
    NormSq,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>, usize),
    Pow(Box<Node>, i32, usize),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn syntax(pos: usize, msg: &str) -> Error {
    Error::Syntax { pos, msg: msg.to_string() }
}

fn lex_plain(s: &str) -> Result<Vec<(Tok, usize)>> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let ch = b[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let t = match ch {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => {
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                out.push((Tok::Num(s[start..i].parse().unwrap()), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(s[start..i].to_string()), start));
                continue;
            }
            _ => return Err(syntax(i, &format!("unexpected character `{}`", ch as char))),
        };
        out.push((t, start));
        i += 1;
    }
    Ok(out)
}

struct LatexLexer<'a> {
    s: &'a str,
    b: &'a [u8],
    i: usize,
    out: Vec<(Tok, usize)>,
}

impl<'a> LatexLexer<'a> {
    fn skip_ws(&mut self) {
        while self.i < self.b.len() && self.b[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.s[self.i..].starts_with(lit) {
            self.i += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<()> {
        self.skip_ws();
        if self.eat(lit) {
            Ok(())
        } else {
            Err(syntax(self.i, &format!("expected `{}`", lit)))
        }
    }

    fn digits(&mut self) -> Result<String> {
        let start = self.i;
        while self.i < self.b.len() && self.b[self.i].is_ascii_digit() {
            self.i += 1;
        }
        if start == self.i {
            return Err(syntax(self.i, "expected digits"));
        }
        Ok(self.s[start..self.i].to_string())
    }

    fn braced_digits(&mut self) -> Result<String> {
        self.expect("{")?;
        let d = self.digits()?;
        self.expect("}")?;
        Ok(d)
    }

    fn command(&mut self) -> Result<()> {
        let start = self.i;
        self.i += 1;
        let ns = self.i;
        while self.i < self.b.len() && self.b[self.i].is_ascii_alphabetic() {
            self.i += 1;
        }
        let name = &self.s[ns..self.i];
        match name {
            "frac" => {
                self.out.push((Tok::LParen, start));
                self.skip_ws();
                self.group()?;
                self.out.push((Tok::Slash, self.i));
                self.skip_ws();
                self.group()?;
                self.out.push((Tok::RParen, self.i));
            }
            "alpha" => self.out.push((Tok::Ident("alpha".to_string()), start)),
            "Delta" => {
                self.skip_ws();
                if self.eat("t") {
                    self.out.push((Tok::Ident("dt".to_string()), start));
                } else if self.eat("x") {
                    self.out.push((Tok::Ident("dx".to_string()), start));
                } else {
                    return Err(syntax(self.i, "expected `t` or `x` after \\Delta"));
                }
            }
            "phi" => {
                self.expect("_")?;
                let j = self.braced_digits()?;
                let save = self.i;
                self.skip_ws();
                if self.eat("^{(") {
                    let k = self.digits()?;
                    self.expect(")}")?;
                    self.out.push((Tok::Ident(format!("d{}phi{}", k, j)), start));
                } else {
                    self.i = save;
                    self.out.push((Tok::Ident(format!("phi{}", j)), start));
                }
            }
            "dot" | "ddot" => {
                let k = if name == "dot" { 1 } else { 2 };
                self.expect("{")?;
                self.expect("\\phi")?;
                self.expect("}")?;
                self.expect("_")?;
                let j = self.braced_digits()?;
                self.out.push((Tok::Ident(format!("d{}phi{}", k, j)), start));
            }
            "cdot" => self.out.push((Tok::Star, start)),
            "left" => {
                self.skip_ws();
                if self.eat("(") {
                    self.out.push((Tok::LParen, start));
                } else {
                    return Err(syntax(self.i, "expected `(` after \\left"));
                }
            }
            "right" => {
                self.skip_ws();
                if self.eat(")") {
                    self.out.push((Tok::RParen, start));
                } else {
                    return Err(syntax(self.i, "expected `)` after \\right"));
                }
            }
            "mathrm" => {
                self.expect("{")?;
                let ns = self.i;
                while self.i < self.b.len() && (self.b[self.i].is_ascii_alphanumeric() || self.b[self.i] == b'_') {
                    self.i += 1;
                }
                let id = self.s[ns..self.i].to_string();
                self.expect("}")?;
                self.out.push((Tok::Ident(id), start));
            }
            _ => return Err(syntax(start, &format!("unsupported LaTeX command `\\{}`", name))),
        }
        Ok(())
    }

    fn group(&mut self) -> Result<()> {
        if !self.eat("{") {
            return Err(syntax(self.i, "expected `{`"));
        }
        self.out.push((Tok::LParen, self.i - 1));
        loop {
            self.skip_ws();
            if self.i >= self.b.len() {
                return Err(syntax(self.i, "unbalanced `{`"));
            }
            if self.b[self.i] == b'}' {
                self.out.push((Tok::RParen, self.i));
                self.i += 1;
                return Ok(());
            }
            self.one()?;
        }
    }

    fn one(&mut self) -> Result<()> {
        let ch = self.b[self.i];
        let start = self.i;
        match ch {
            b'\\' => return self.command(),
            b'{' => return self.group(),
            b'+' => self.out.push((Tok::Plus, start)),
            b'-' => self.out.push((Tok::Minus, start)),
            b'*' => self.out.push((Tok::Star, start)),
            b'/' => self.out.push((Tok::Slash, start)),
            b'^' => self.out.push((Tok::Caret, start)),
            b'(' => self.out.push((Tok::LParen, start)),
            b')' => self.out.push((Tok::RParen, start)),
            b'0'..=b'9' => {
                let d = self.digits()?;
                self.out.push((Tok::Num(d.parse().unwrap()), start));
                return Ok(());
            }
            b'V' => {
                self.i += 1;
                let mut k = 0usize;
                while self.i < self.b.len() && self.b[self.i] == b'\'' {
                    k += 1;
                    self.i += 1;
                }
                if k == 0 && self.s[self.i..].starts_with("^{(") {
                    self.i += 3;
                    k = self.digits()?.parse().map_err(|_| syntax(self.i, "bad order"))?;
                    self.expect(")}")?;
                }
                self.out.push((Tok::Ident(format!("V{}", k)), start));
                return Ok(());
            }
            b'W' => {
                self.i += 1;
                if self.s[self.i..].starts_with("_") {
                    self.i += 1;
                    let d = self.braced_digits()?;
                    self.out.push((Tok::Ident(format!("W_{}", d)), start));
                } else {
                    self.out.push((Tok::Ident("W".to_string()), start));
                }
                return Ok(());
            }
            c if c.is_ascii_alphabetic() => {
                while self.i < self.b.len() && self.b[self.i].is_ascii_alphabetic() {
                    self.i += 1;
                }
                self.out.push((Tok::Ident(self.s[start..self.i].to_string()), start));
                return Ok(());
            }
            b'}' => return Err(syntax(start, "unbalanced `}`")),
            _ => return Err(syntax(start, &format!("unexpected character `{}`", ch as char))),
        }
        self.i += 1;
        Ok(())
    }
}

fn lex_latex(s: &str) -> Result<Vec<(Tok, usize)>> {
    let mut lx = LatexLexer { s, b: s.as_bytes(), i: 0, out: Vec::new() };
    loop {
        lx.skip_ws();
        if lx.i >= lx.b.len() {
            break;
        }
        lx.one()?;
    }
    let mut out: Vec<(Tok, usize)> = Vec::with_capacity(lx.out.len());
    for (t, p) in lx.out {
        let ends = matches!(out.last(), Some((Tok::Num(_) | Tok::Ident(_) | Tok::RParen, _)));
        let starts = matches!(t, Tok::Num(_) | Tok::Ident(_) | Tok::LParen);
        if ends && starts {
            out.push((Tok::Star, p));
        }
        out.push((t, p));
    }
    Ok(out)
}

struct Parser<'c> {
    toks: Vec<(Tok, usize)>,
    i: usize,
    end: usize,
    ctx: &'c Context,
}

impl<'c> Parser<'c> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.0)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map(|t| t.1).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.i).map(|t| t.0.clone());
        self.i += 1;
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.i += 1;
            Ok(())
        } else {
            Err(syntax(self.pos(), &format!("expected {}", what)))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.i += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.i += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.i += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    let p = self.pos();
                    self.i += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?), p);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.i += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Plus) => {
                self.i += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn exponent(&mut self) -> Result<i32> {
        let p = self.pos();
        let paren = self.peek() == Some(&Tok::LParen);
        if paren {
            self.i += 1;
        }
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.i += 1;
            true
        } else {
            false
        };
        let n = match self.bump() {
            Some(Tok::Num(n)) => n.to_i32().ok_or_else(|| syntax(p, "exponent too large"))?,
            _ => return Err(syntax(p, "expected integer exponent")),
        };
        if paren {
            self.expect(Tok::RParen, "`)`")?;
        }
        Ok(if neg { -n } else { n })
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            let p = self.pos();
            self.i += 1;
            let e = self.exponent()?;
            return Ok(Node::Pow(Box::new(base), e, p));
        }
        Ok(base)
    }

    fn optional_phi_call(&mut self) -> Result<()> {
        if self.peek() == Some(&Tok::LParen) && matches!(self.toks.get(self.i + 1), Some((Tok::Ident(s), _)) if s == "phi") {
            self.i += 2;
            self.expect(Tok::RParen, "`)`")?;
        }
        Ok(())
    }

    fn primary(&mut self) -> Result<Node> {
        let p = self.pos();
        match self.bump() {
            Some(Tok::Num(n)) => Ok(Node::Int(n)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => self.ident(&name, p),
            Some(_) => Err(syntax(p, "unexpected token")),
            None => Err(syntax(p, "unexpected end of input")),
        }
    }

    fn ident(&mut self, name: &str, p: usize) -> Result<Node> {
        let ctx = self.ctx;
        if let Some(v) = ctx.param_index(name) {
            return Ok(Node::Param(v));
        }
        if name == "normsq" {
            self.optional_phi_call()?;
            return Ok(Node::NormSq);
        }
        if let Some(rest) = name.strip_prefix("phi") {
            if let Ok(j) = rest.parse::<usize>() {
                return Ok(Node::Atom(jet_atom(ctx, j, 0, p)?));
            }
        }
        if let Some(rest) = name.strip_prefix('d') {
            if let Some(k) = rest.find("phi") {
                if let (Ok(order), Ok(j)) = (rest[..k].parse::<usize>(), rest[k + 3..].parse::<usize>()) {
                    return Ok(Node::Atom(jet_atom(ctx, j, order, p)?));
                }
            }
        }
        if let Some(rest) = name.strip_prefix('V') {
            let k = if rest.is_empty() { Some(0) } else { rest.parse::<usize>().ok() };
            if let Some(k) = k {
                ctx.check_pot(k)?;
                if self.peek() == Some(&Tok::LParen)
                    && matches!(self.toks.get(self.i + 1), Some((Tok::Ident(s), _)) if s == "normsq")
                {
                    self.i += 2;
                    self.optional_phi_call()?;
                    self.expect(Tok::RParen, "`)` closing the potential argument")?;
                }
                return Ok(Node::Atom(Atom::V(k as u8)));
            }
        }
        if name == "W" || name.starts_with("W_") {
            let digits = name.strip_prefix("W_").unwrap_or("");
            let mut idx = Vec::new();
            for ch in digits.chars() {
                let j = ch.to_digit(10).ok_or_else(|| syntax(p, "bad potential index"))? as usize;
                if j == 0 || j > ctx.dim() {
                    return Err(Error::Component { comp: j, dim: ctx.dim() });
                }
                idx.push(j - 1);
            }
            ctx.check_pot(idx.len())?;
            self.optional_phi_call()?;
            return Ok(Node::Atom(Atom::w_index(&idx)));
        }
        Err(Error::UnknownIdent { name: name.to_string(), pos: p })
    }
}

fn jet_atom(ctx: &Context, j: usize, order: usize, _p: usize) -> Result<Atom> {
    if j == 0 || j > ctx.dim() {
        return Err(Error::Component { comp: j, dim: ctx.dim() });
    }
    ctx.check_jet(order)?;
    Ok(Atom::jet(j - 1, order))
}

fn parse_tokens(toks: Vec<(Tok, usize)>, end: usize, ctx: &Context) -> Result<Node> {
    let mut p = Parser { toks, i: 0, end, ctx };
    let n = p.expr()?;
    if p.i < p.toks.len() {
        return Err(syntax(p.pos(), "unexpected trailing input"));
    }
    Ok(n)
}

pub fn parse_node(text: &str, ctx: &Context) -> Result<Node> {
    parse_tokens(lex_plain(text)?, text.len(), ctx)
}

pub fn parse(text: &str, ctx: &Context) -> Result<Expr> {
    normalize(&parse_node(text, ctx)?, ctx)
}

pub fn parse_latex(text: &str, ctx: &Context) -> Result<Expr> {
    normalize(&parse_tokens(lex_latex(text)?, text.len(), ctx)?, ctx)
}

/// Brings a syntax tree into normal form.
pub fn normalize(n: &Node, ctx: &Context) -> Result<Expr> {
    Ok(match n {
        Node::Int(k) => Expr::constant(RatFunc::from_bigint(k.clone())),
        Node::Param(v) => Expr::param(*v),
        Node::Atom(a) => Expr::atom(*a),
        Node::NormSq => (0..ctx.dim()).fold(Expr::zero(), |s, j| s.add(&Expr::jet(j, 0).pow(2))),
        Node::Neg(a) => normalize(a, ctx)?.neg(),
        Node::Add(a, b) => normalize(a, ctx)?.add(&normalize(b, ctx)?),
        Node::Sub(a, b) => normalize(a, ctx)?.sub(&normalize(b, ctx)?),
        Node::Mul(a, b) => normalize(a, ctx)?.mul(&normalize(b, ctx)?),
        Node::Div(a, b, p) => {
            let d = normalize(b, ctx)?;
            let c = d.as_constant().ok_or(Error::Syntax {
                pos: *p,
                msg: "division by an expression that is not a pure coefficient".to_string(),
            })?;
            if c.is_zero() {
                return Err(Error::DivisionByZero);
            }
            normalize(a, ctx)?.scale(&c.inv())
        }
        Node::Pow(a, e, p) => {
            let b = normalize(a, ctx)?;
            if *e >= 0 {
                b.pow(*e as u32)
            } else {
                let c = b.as_constant().ok_or(Error::Syntax {
                    pos: *p,
                    msg: "negative power of a non-coefficient".to_string(),
                })?;
                if c.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                Expr::constant(c.pow(*e))
            }
        }
    })
}
