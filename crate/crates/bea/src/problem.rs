//! TOML problem files.
//!
//! ```toml
//! kind = "rotating"        # or "travelling"
//! order = 2
//! dim = 2                  # travelling waves only
//! case = "general"         # alpha0 | c0 | dx-eq-cdt
//!
//! [numeric]
//! alpha = 0.3
//! c = 2.0
//! dt = 0.15
//! dx = 0.1
//! h = 1.0
//! potential = "poly:0,1,0,0,-0.1"
//! ```

use std::path::Path;

use anyhow::{bail, Context as _, Result};
use bea_core::hamstruct::{special_case, LegendreCase};
use bea_core::numlab::{NumericBinding, PotentialFn};
use bea_core::stencil::StencilProblem;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Rotating,
    Travelling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    #[default]
    General,
    Alpha0,
    C0,
    DxEqCdt,
}

impl Case {
    pub fn legendre(self) -> LegendreCase {
        match self {
            Case::General => LegendreCase::General,
            Case::Alpha0 => LegendreCase::Alpha0,
            Case::C0 => LegendreCase::C0,
            Case::DxEqCdt => LegendreCase::DxEqCDt,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numeric {
    pub alpha: f64,
    pub c: f64,
    pub dt: f64,
    pub dx: f64,
    #[serde(default = "one")]
    pub h: f64,
    pub potential: String,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub kind: Kind,
    #[serde(default = "two")]
    pub order: usize,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub case: Case,
    #[serde(default)]
    pub numeric: Option<Numeric>,
}

fn two() -> usize {
    2
}

/// "poly:a0,a1,..." for V(s) = Σ a_k s^k, or "gaussian" for V(s) = −exp(−(s−1)²).
pub fn parse_potential(s: &str) -> Result<PotentialFn> {
    let s = s.trim();
    if s == "gaussian" {
        return Ok(PotentialFn::GaussianWell);
    }
    let Some(list) = s.strip_prefix("poly:") else {
        bail!("potential `{s}`: expected `gaussian` or `poly:a0,a1,...`");
    };
    let coeffs = list
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("potential coefficient `{t}`")))
        .collect::<Result<Vec<_>>>()?;
    Ok(PotentialFn::Polynomial(coeffs))
}

pub fn potential_string(p: &PotentialFn) -> String {
    match p {
        PotentialFn::GaussianWell => "gaussian".into(),
        PotentialFn::Polynomial(cs) => {
            let parts: Vec<String> = cs.iter().map(|c| format!("{c}")).collect();
            format!("poly:{}", parts.join(","))
        }
    }
}

impl Numeric {
    pub fn binding(&self) -> Result<NumericBinding> {
        let b = NumericBinding::new(self.alpha, self.c, self.dt, self.dx, parse_potential(&self.potential)?)?;
        Ok(b.with_h(self.h))
    }
}

impl ProblemFile {
    pub fn from_str(text: &str) -> Result<ProblemFile> {
        let p: ProblemFile = toml::from_str(text).context("problem file")?;
        p.check()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<ProblemFile> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        ProblemFile::from_str(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn rotating(order: usize) -> ProblemFile {
        ProblemFile { kind: Kind::Rotating, order, dim: None, case: Case::General, numeric: None }
    }

    fn check(&self) -> Result<()> {
        match (self.kind, self.dim) {
            (Kind::Rotating, Some(d)) if d != 2 => bail!("rotating waves live in dimension 2, got dim = {d}"),
            (Kind::Travelling, None) => bail!("travelling problems need `dim`"),
            _ => {}
        }
        if self.kind == Kind::Travelling && self.case != Case::General {
            bail!("special cases apply to rotating problems only");
        }
        if self.order % 2 == 1 {
            bail!("truncation order must be even, got {}", self.order);
        }
        Ok(())
    }

    pub fn stencil(&self) -> Result<StencilProblem> {
        self.check()?;
        let p = match self.kind {
            Kind::Rotating => StencilProblem::rotating(self.order)?,
            Kind::Travelling => StencilProblem::travelling(self.dim.unwrap_or(1), self.order)?,
        };
        Ok(special_case(&p, self.case.legendre())?)
    }

    /// Canonical TOML; the content hash of a run is taken over this text.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("problem files serialise")
    }
}
