//! Flipper: a toolkit for a small reversible language.
//!
//! Programs define flippables, bijections between algebraic data types
//! that can be run forward or backward from the same source text. The
//! crate provides the surface syntax ([`parser`], [`printer`]), the
//! static checks that make accepted definitions genuine bijections
//! ([`checker`]), a source-to-source reverser ([`reverser`]), a
//! bidirectional interpreter ([`interp`]), a streaming entropy coder
//! ([`ans`]), and their composition into a bits-back compressor
//! ([`bbans`]).

pub mod ans;
pub mod ast;
pub mod bbans;
pub mod checker;
pub mod generate;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod reverser;
pub mod stdlib;
pub mod value;
