//! Canonical rendering of syntax trees back to source text.
//!
//! The output normalizes whitespace and parentheses: rendering a parsed
//! program and parsing it again yields the same tree, and rendering is
//! idempotent on its own output.

use crate::ast::*;

pub fn render_program(p: &Program) -> String {
    let mut out = String::new();
    for d in &p.decls {
        match d {
            Decl::Data(dd) => out.push_str(&render_data(dd)),
            Decl::Extern(e) => out.push_str(&render_extern(e)),
            Decl::Flip(f) => out.push_str(&render_flip(f)),
        }
        out.push('\n');
    }
    out
}

pub fn render_data(d: &DataDecl) -> String {
    let mut s = format!("data {}", d.name.name);
    for p in &d.params {
        s.push(' ');
        s.push_str(&p.name);
    }
    s.push_str(" = ");
    let ctors: Vec<String> = d
        .ctors
        .iter()
        .map(|c| {
            let mut cs = c.name.name.clone();
            for a in &c.args {
                cs.push(' ');
                cs.push_str(&render_type_atom(a));
            }
            cs
        })
        .collect();
    s.push_str(&ctors.join(" | "));
    s
}

pub fn render_extern(e: &ExternDecl) -> String {
    format!(
        "extern {} : {} <-> {}",
        e.name.name,
        render_type(&e.domain),
        render_type(&e.codomain)
    )
}

pub fn render_flip(f: &FlipDef) -> String {
    let mut s = format!("flip {}", f.name.name);
    for p in &f.params {
        s.push_str(&format!(" ({} : {})", p.name.name, render_param_sig(&p.sig)));
    }
    s.push_str(&format!(
        " : {} <-> {} = ",
        render_type(&f.domain),
        render_type(&f.codomain)
    ));
    if f.branches.len() == 1 {
        s.push_str(&format!("{{ {} }}", render_branch(&f.branches[0])));
    } else {
        s.push_str("{\n");
        let body: Vec<String> = f
            .branches
            .iter()
            .map(|b| format!("  {}", render_branch(b)))
            .collect();
        s.push_str(&body.join(";\n"));
        s.push_str("\n}");
    }
    s
}

pub fn render_param_sig(sig: &ParamSig) -> String {
    match sig {
        ParamSig::Flippable(a, b) => format!("{} <-> {}", render_type(a), render_type(b)),
        ParamSig::Indexed(i, a, b) => {
            format!("{} -> {} <-> {}", render_type(i), render_type(a), render_type(b))
        }
    }
}

pub fn render_branch(b: &Branch) -> String {
    let mut s = format!("{} <-> ", render_pattern(&b.lhs));
    for st in &b.steps {
        s.push_str(&format!(
            "{} < {} > {} <-> ",
            render_pattern(&st.out),
            render_fexpr(&st.fexpr),
            render_pattern(&st.into)
        ));
    }
    s.push_str(&render_pattern(&b.rhs));
    s
}

pub fn render_pattern(p: &Pattern) -> String {
    match p {
        Pattern::Var(id) => id.name.clone(),
        Pattern::Ctor(id, args) => {
            let mut s = format!("({}", id.name);
            for a in args {
                s.push(' ');
                s.push_str(&render_pattern(a));
            }
            s.push(')');
            s
        }
        Pattern::Pair(a, b) => format!("({} , {})", render_pattern(a), render_pattern(b)),
    }
}

pub fn render_fexpr(f: &FExpr) -> String {
    match f {
        FExpr::Ref(id) => id.name.clone(),
        FExpr::App(head, arg) => {
            format!("{} {}", render_fexpr(head), render_fexpr_atom(arg))
        }
        FExpr::Flip(inner) => match &**inner {
            FExpr::Ref(id) => format!("flip {}", id.name),
            other => format!("flip ({})", render_fexpr(other)),
        },
    }
}

fn render_fexpr_atom(f: &FExpr) -> String {
    match f {
        FExpr::Ref(id) => id.name.clone(),
        other => format!("({})", render_fexpr(other)),
    }
}

pub fn render_type(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Var(id) => id.name.clone(),
        TypeExpr::Named(id, args) => {
            if args.is_empty() {
                id.name.clone()
            } else {
                let mut s = id.name.clone();
                for a in args {
                    s.push(' ');
                    s.push_str(&render_type_atom(a));
                }
                s
            }
        }
        TypeExpr::Pair(a, b) => format!("({} , {})", render_type(a), render_type(b)),
        TypeExpr::Msg => "Msg".to_string(),
        TypeExpr::Int => "Int".to_string(),
    }
}

fn render_type_atom(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Named(id, args) if !args.is_empty() => {
            format!("({})", render_type(t))
        }
        _ => render_type(t),
    }
}
