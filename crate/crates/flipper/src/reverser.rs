//! Source-to-source reverser.
//!
//! Reversing a definition swaps its domain and codomain, mirrors every
//! branch (left and right sides exchanged, steps walked in the opposite
//! order with their patterns swapped), and flips each step's flippable.
//! Double flips are simplified eagerly, so reversing is an involution on
//! the syntax tree, not just on the denoted bijection.

use crate::ast::*;

/// Suffix attached to a definition name the first time it is reversed.
pub const REVERSED_SUFFIX: &str = "_rev";

pub fn reverse_def(def: &FlipDef) -> FlipDef {
    let (name, origin) = match &def.origin {
        Some(mark) => (
            Ident::new(&mark.original, def.name.span),
            None,
        ),
        None => (
            Ident::new(&format!("{}{}", def.name.name, REVERSED_SUFFIX), def.name.span),
            Some(ReversedMark { original: def.name.name.clone() }),
        ),
    };
    FlipDef {
        name,
        params: def.params.clone(),
        domain: def.codomain.clone(),
        codomain: def.domain.clone(),
        branches: def.branches.iter().map(reverse_branch).collect(),
        origin,
    }
}

fn reverse_branch(b: &Branch) -> Branch {
    Branch {
        lhs: b.rhs.clone(),
        steps: b.steps.iter().rev().map(reverse_step).collect(),
        rhs: b.lhs.clone(),
        span: b.span,
    }
}

fn reverse_step(s: &Step) -> Step {
    Step {
        out: s.into.clone(),
        fexpr: flipped(&s.fexpr),
        into: s.out.clone(),
    }
}

/// Wraps in `flip`, cancelling an existing outer `flip` instead of
/// stacking a second one.
fn flipped(f: &FExpr) -> FExpr {
    match f {
        FExpr::Flip(inner) => (**inner).clone(),
        other => FExpr::flip(other.clone()),
    }
}
