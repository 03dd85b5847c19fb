//! Syntax trees for the Flipper surface language.
//!
//! A flippable definition denotes a bijection between its domain and
//! codomain. Branch bodies are chains of rewrite steps; every construct
//! here is kept symmetric so that a definition can be read (and run) in
//! either direction.

use std::fmt;

/// Source position, 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Span {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: &str, span: Span) -> Ident {
        Ident { name: name.to_string(), span }
    }

    pub fn is_upper(&self) -> bool {
        self.name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeExpr {
    /// Lowercase identifier: a type variable, implicitly quantified per
    /// declaration.
    Var(Ident),
    /// Named type applied to zero or more arguments, e.g. `Either a b`.
    Named(Ident, Vec<TypeExpr>),
    Pair(Box<TypeExpr>, Box<TypeExpr>),
    /// Opaque message type used by the entropy coder.
    Msg,
    /// Opaque host integer.
    Int,
}

impl TypeExpr {
    pub fn pair(a: TypeExpr, b: TypeExpr) -> TypeExpr {
        TypeExpr::Pair(Box::new(a), Box::new(b))
    }

    pub fn span(&self) -> Span {
        match self {
            TypeExpr::Var(id) | TypeExpr::Named(id, _) => id.span,
            TypeExpr::Pair(a, _) => a.span(),
            TypeExpr::Msg | TypeExpr::Int => Span::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Var(Ident),
    /// Constructor pattern, always written parenthesized: `(Left x)`.
    Ctor(Ident, Vec<Pattern>),
    Pair(Box<Pattern>, Box<Pattern>),
}

impl Pattern {
    pub fn pair(a: Pattern, b: Pattern) -> Pattern {
        Pattern::Pair(Box::new(a), Box::new(b))
    }

    pub fn span(&self) -> Span {
        match self {
            Pattern::Var(id) | Pattern::Ctor(id, _) => id.span,
            Pattern::Pair(a, _) => a.span(),
        }
    }

    /// All variable occurrences, left to right.
    pub fn vars(&self) -> Vec<&Ident> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a Ident>) {
        match self {
            Pattern::Var(id) => out.push(id),
            Pattern::Ctor(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
            Pattern::Pair(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

/// Expression naming a flippable inside `< ... >` brackets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FExpr {
    Ref(Ident),
    App(Box<FExpr>, Box<FExpr>),
    Flip(Box<FExpr>),
}

impl FExpr {
    pub fn app(f: FExpr, a: FExpr) -> FExpr {
        FExpr::App(Box::new(f), Box::new(a))
    }

    pub fn flip(f: FExpr) -> FExpr {
        FExpr::Flip(Box::new(f))
    }

    pub fn span(&self) -> Span {
        match self {
            FExpr::Ref(id) => id.span,
            FExpr::App(f, _) => f.span(),
            FExpr::Flip(f) => f.span(),
        }
    }
}

/// One rewrite step `out < f > in` inside a branch chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub out: Pattern,
    pub fexpr: FExpr,
    pub into: Pattern,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub lhs: Pattern,
    pub steps: Vec<Step>,
    pub rhs: Pattern,
    pub span: Span,
}

/// Parameter signature: either a plain flippable or a value-indexed
/// family with exactly one index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamSig {
    Flippable(TypeExpr, TypeExpr),
    Indexed(TypeExpr, TypeExpr, TypeExpr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: Ident,
    pub sig: ParamSig,
}

/// Provenance note left on a definition produced by the reverser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReversedMark {
    pub original: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipDef {
    pub name: Ident,
    pub params: Vec<Param>,
    pub domain: TypeExpr,
    pub codomain: TypeExpr,
    pub branches: Vec<Branch>,
    /// Set when this definition is the output of the reverser; reversing
    /// again restores the original name and clears the mark.
    pub origin: Option<ReversedMark>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtorDecl {
    pub name: Ident,
    pub args: Vec<TypeExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataDecl {
    pub name: Ident,
    pub params: Vec<Ident>,
    pub ctors: Vec<CtorDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternDecl {
    pub name: Ident,
    pub domain: TypeExpr,
    pub codomain: TypeExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Data(DataDecl),
    Extern(ExternDecl),
    Flip(FlipDef),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub decls: Vec<Decl>,
}

impl Program {
    pub fn data_decls(&self) -> impl Iterator<Item = &DataDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Data(dd) => Some(dd),
            _ => None,
        })
    }

    pub fn extern_decls(&self) -> impl Iterator<Item = &ExternDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Extern(e) => Some(e),
            _ => None,
        })
    }

    pub fn flip_defs(&self) -> impl Iterator<Item = &FlipDef> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Flip(f) => Some(f),
            _ => None,
        })
    }

    pub fn flip_def(&self, name: &str) -> Option<&FlipDef> {
        self.flip_defs().find(|f| f.name.name == name)
    }

    /// Appends the declarations of `other`, keeping order.
    pub fn extend_with(&mut self, other: Program) {
        self.decls.extend(other.decls);
    }

    /// Copy with every span zeroed, for structural comparison of trees
    /// that went through render and re-parse.
    pub fn stripped(&self) -> Program {
        let mut p = self.clone();
        strip_program(&mut p);
        p
    }
}

fn strip_program(p: &mut Program) {
    for d in &mut p.decls {
        match d {
            Decl::Data(dd) => {
                dd.name.span = Span::default();
                for tp in &mut dd.params {
                    tp.span = Span::default();
                }
                for c in &mut dd.ctors {
                    c.name.span = Span::default();
                    for t in &mut c.args {
                        strip_type(t);
                    }
                }
            }
            Decl::Extern(e) => {
                e.name.span = Span::default();
                strip_type(&mut e.domain);
                strip_type(&mut e.codomain);
            }
            Decl::Flip(f) => strip_flip(f),
        }
    }
}

fn strip_flip(f: &mut FlipDef) {
    f.name.span = Span::default();
    for p in &mut f.params {
        p.name.span = Span::default();
        match &mut p.sig {
            ParamSig::Flippable(a, b) => {
                strip_type(a);
                strip_type(b);
            }
            ParamSig::Indexed(i, a, b) => {
                strip_type(i);
                strip_type(a);
                strip_type(b);
            }
        }
    }
    strip_type(&mut f.domain);
    strip_type(&mut f.codomain);
    for b in &mut f.branches {
        b.span = Span::default();
        strip_pattern(&mut b.lhs);
        strip_pattern(&mut b.rhs);
        for s in &mut b.steps {
            strip_pattern(&mut s.out);
            strip_pattern(&mut s.into);
            strip_fexpr(&mut s.fexpr);
        }
    }
}

fn strip_type(t: &mut TypeExpr) {
    match t {
        TypeExpr::Var(id) => id.span = Span::default(),
        TypeExpr::Named(id, args) => {
            id.span = Span::default();
            for a in args {
                strip_type(a);
            }
        }
        TypeExpr::Pair(a, b) => {
            strip_type(a);
            strip_type(b);
        }
        TypeExpr::Msg | TypeExpr::Int => {}
    }
}

fn strip_pattern(p: &mut Pattern) {
    match p {
        Pattern::Var(id) => id.span = Span::default(),
        Pattern::Ctor(id, args) => {
            id.span = Span::default();
            for a in args {
                strip_pattern(a);
            }
        }
        Pattern::Pair(a, b) => {
            strip_pattern(a);
            strip_pattern(b);
        }
    }
}

fn strip_fexpr(f: &mut FExpr) {
    match f {
        FExpr::Ref(id) => id.span = Span::default(),
        FExpr::App(g, a) => {
            strip_fexpr(g);
            strip_fexpr(a);
        }
        FExpr::Flip(g) => strip_fexpr(g),
    }
}
