// SPDX-License-Identifier: Apache-2.0

//! Concrete syntax: `.chad` files.

pub mod lexer;
pub mod parser;
pub mod pretty;

pub use parser::{parse_program, parse_term, parse_term_with, parse_type, ParseError, ParseOptions, Program};
pub use pretty::{pretty, pretty_program};
