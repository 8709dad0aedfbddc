//! Exact symbolic kernel.

pub mod context;
pub mod expr;
pub mod gcd;
pub mod parse;
pub mod poly;
pub mod print;
pub mod ratfunc;
pub mod series;

pub use context::{Context, ALPHA, C, DT, DX, MAX_DIM};
pub use expr::{Atom, Expr, Mono};
pub use parse::{normalize, parse, parse_latex, parse_node, Node};
pub use print::{to_latex, to_text, Style};
pub use ratfunc::RatFunc;
pub use series::{invert_matrix, mat_vec, solve_linear_series, HSeries};
