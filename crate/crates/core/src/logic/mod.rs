//! Formula data model, parser and printer for the MTL and LTL fragments.

mod duration;
mod format;
mod fragment;
mod formula;
mod parser;

pub use duration::{gcd, Duration, DurationParseError};
pub use format::{format_ltl, format_mtl};
pub use fragment::{classify_mtl, FragmentError, SafetyPattern};
pub use formula::{Atom, AtomKind, InvalidAtomName, Literal, LtlFormula, MtlFormula};
pub use parser::{formula_lines, parse_ltl, parse_mtl, FormulaLine, ParseError};
