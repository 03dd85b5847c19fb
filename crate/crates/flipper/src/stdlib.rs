//! The embedded standard library.
//!
//! Two source files ship inside the binary: a prelude of small plumbing
//! combinators (`idF`, `pairSwp`, `sumSwp`, `assocP`, `compose`,
//! `uncurryF` and the `Either` type) and the bits-back coder `bbAns`.
//! [`load_program`] parses user source with those definitions already in
//! scope, so `sumSwp` works out of the box and a user definition that
//! shadows a prelude name is reported as a duplicate.

use crate::ast::Program;
use crate::parser::{self, parse_program, ParseError};

pub const PRELUDE_SRC: &str = include_str!("../../../stdlib/prelude.flp");
pub const BBANS_SRC: &str = include_str!("../../../stdlib/bbans.flp");

/// Parses the embedded standard library on its own.
pub fn stdlib_program() -> Program {
    let mut p = parse_program(PRELUDE_SRC).expect("embedded prelude parses");
    let bb = parse_program(BBANS_SRC).expect("embedded bbans parses");
    p.extend_with(bb);
    p
}

/// Parses `src`, optionally prepending the standard library.
pub fn load_program(src: &str, with_stdlib: bool) -> Result<Program, ParseError> {
    let user = parse_program(src)?;
    if !with_stdlib {
        return Ok(user);
    }
    let mut prog = stdlib_program();
    prog.extend_with(user);
    parser::check_unique_names(&prog)?;
    Ok(prog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::check_program;

    #[test]
    fn stdlib_parses_and_checks() {
        let prog = stdlib_program();
        if let Err(errs) = check_program(&prog) {
            for e in &errs {
                eprintln!("{}", e);
            }
            panic!("stdlib failed its own checker");
        }
    }

    #[test]
    fn user_programs_see_the_prelude() {
        let prog = load_program(
            "flip useS : Either Int Int <-> Either Int Int = { s <-> s < sumSwp > t <-> t }\n",
            true,
        )
        .unwrap();
        assert!(check_program(&prog).is_ok());
    }

    #[test]
    fn name_collisions_with_the_prelude_are_rejected() {
        let err = load_program("flip pairSwp : a <-> a = { x <-> x }\n", true).unwrap_err();
        assert!(err.message.contains("duplicate top-level name 'pairSwp'"));
    }

    #[test]
    fn no_stdlib_leaves_prelude_names_unbound() {
        let prog = load_program(
            "flip useS : Either Int Int <-> Either Int Int = { s <-> s < sumSwp > t <-> t }\n",
            false,
        )
        .unwrap();
        assert!(check_program(&prog).is_err());
    }
}
