//! The `.kos` definition language, the signal line format, and text rendering.

pub mod ast;
pub mod diag;
pub mod lexer;
pub mod parser;
pub mod print;
pub mod signal;

pub use ast::ModuleAst;
pub use diag::{Diagnostic, Severity, Span};
pub use parser::{parse_defs, parse_term, parse_term_with};
pub use print::{print_module, print_report, print_term, print_term_in};
pub use signal::{parse_signal, parse_signals, RawSignal};
