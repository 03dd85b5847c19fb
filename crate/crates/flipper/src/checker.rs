//! Static checks that make every accepted definition denote a bijection.
//!
//! Four cooperating passes run over each definition:
//!
//! * type checking: unification against the declared signature, with the
//!   definition's own type variables held rigid and every callee
//!   signature instantiated fresh at its use site;
//! * linearity: each bound variable is consumed exactly once, where
//!   consumption means appearing in a later step's outgoing pattern or
//!   in the branch result;
//! * scope windows: a variable used as an argument inside `< ... >` must
//!   be bound strictly before and consumed strictly after that step;
//! * partitioning: branch patterns must be pairwise disjoint and jointly
//!   exhaustive on the input side and on the output side, and every
//!   step pattern must individually cover its type, since it is matched
//!   against a computed value when running in one of the two directions.
//!
//! All errors in a program are collected and reported together, ordered
//! by source position.

use crate::ast::*;
use crate::printer::render_type;
use std::collections::{HashMap, HashSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckErrorKind {
    NonlinearUse,
    UnusedVariable,
    OutOfWindowReference,
    OverlappingPatterns,
    NonExhaustivePatterns,
    RebindBeforeConsume,
    TypeMismatch,
    UnknownName,
    ArityMismatch,
}

pub const ALL_ERROR_KINDS: [CheckErrorKind; 9] = [
    CheckErrorKind::NonlinearUse,
    CheckErrorKind::UnusedVariable,
    CheckErrorKind::OutOfWindowReference,
    CheckErrorKind::OverlappingPatterns,
    CheckErrorKind::NonExhaustivePatterns,
    CheckErrorKind::RebindBeforeConsume,
    CheckErrorKind::TypeMismatch,
    CheckErrorKind::UnknownName,
    CheckErrorKind::ArityMismatch,
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckError {
    pub kind: CheckErrorKind,
    pub span: Span,
    pub detail: String,
}

impl CheckError {
    fn new(kind: CheckErrorKind, span: Span, detail: String) -> CheckError {
        CheckError { kind, span, detail }
    }
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}: {}", self.span, self.kind, self.detail)
    }
}

impl std::error::Error for CheckError {}

/// Which side of the branch patterns a partition check applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Input,
    Output,
}

/// Where a variable event happens inside a branch, in forward reading
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Lhs,
    StepOut(usize),
    StepIn(usize),
    Rhs,
}

impl Site {
    /// Forward ordering index: Lhs < StepOut(0) < StepIn(0) < ... < Rhs.
    fn order(&self) -> usize {
        match self {
            Site::Lhs => 0,
            Site::StepOut(i) => 1 + 2 * i,
            Site::StepIn(i) => 2 + 2 * i,
            Site::Rhs => usize::MAX,
        }
    }
}

/// One binding instance and its lifetime inside a branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarWindow {
    pub name: String,
    pub bind: Site,
    pub consume: Option<Site>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchUsage {
    pub windows: Vec<VarWindow>,
    /// Variable occurrences as arguments inside `< ... >`, by step index.
    pub reads: Vec<VarRead>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarRead {
    pub name: String,
    pub step: usize,
    pub span: Span,
}

/// Fully resolved flippable expression, the runtime-facing mirror of
/// `FExpr` with every identifier classified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RFexpr {
    Def(String),
    Extern(String),
    Param(usize),
    Var(String),
    App(Box<RFexpr>, Box<RFexpr>),
    Flip(Box<RFexpr>),
}

#[derive(Debug, Clone)]
pub struct CheckedBranch {
    pub fexprs: Vec<RFexpr>,
    pub usage: BranchUsage,
    /// Resolved domain and codomain of each step's flippable, as far as
    /// unification pinned them down.
    pub step_types: Vec<(TypeExpr, TypeExpr)>,
}

#[derive(Debug, Clone)]
pub struct CheckedDef {
    pub branches: Vec<CheckedBranch>,
}

/// A program that passed all checks, with the resolution results the
/// interpreter and the test generators need.
#[derive(Debug, Clone)]
pub struct CheckedProgram {
    pub program: Program,
    defs: HashMap<String, CheckedDef>,
}

impl CheckedProgram {
    pub fn def(&self, name: &str) -> Option<&CheckedDef> {
        self.defs.get(name)
    }

    pub fn flip(&self, name: &str) -> Option<&FlipDef> {
        self.program.flip_def(name)
    }
}

// ---- global name resolution ------------------------------------------

struct CtorInfo<'p> {
    data: &'p DataDecl,
    ctor: &'p CtorDecl,
}

struct Globals<'p> {
    datas: HashMap<&'p str, &'p DataDecl>,
    ctors: HashMap<&'p str, CtorInfo<'p>>,
    externs: HashMap<&'p str, &'p ExternDecl>,
    flips: HashMap<&'p str, &'p FlipDef>,
}

impl<'p> Globals<'p> {
    fn build(prog: &'p Program) -> Globals<'p> {
        let mut g = Globals {
            datas: HashMap::new(),
            ctors: HashMap::new(),
            externs: HashMap::new(),
            flips: HashMap::new(),
        };
        for d in prog.data_decls() {
            g.datas.insert(d.name.name.as_str(), d);
            for c in &d.ctors {
                g.ctors.insert(c.name.name.as_str(), CtorInfo { data: d, ctor: c });
            }
        }
        for e in prog.extern_decls() {
            g.externs.insert(e.name.name.as_str(), e);
        }
        for f in prog.flip_defs() {
            g.flips.insert(f.name.name.as_str(), f);
        }
        g
    }
}

// ---- type terms -------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Ty {
    Rigid(String),
    Uni(usize),
    Named(String, Vec<Ty>),
    Pair(Box<Ty>, Box<Ty>),
    Msg,
    Int,
}

impl Ty {
    fn pair(a: Ty, b: Ty) -> Ty {
        Ty::Pair(Box::new(a), Box::new(b))
    }
}

#[derive(Debug, Clone)]
enum PSigTy {
    Flippable(Ty, Ty),
    Indexed(Ty, Ty, Ty),
}

/// Result kind of a flippable expression during inference.
enum FK {
    Flip(Ty, Ty),
    Indexed(Ty, Ty, Ty),
    Partial { def: String, remaining: Vec<PSigTy>, result: (Ty, Ty) },
    Value(Ty),
}

struct Unifier {
    subst: Vec<Option<Ty>>,
}

impl Unifier {
    fn new() -> Unifier {
        Unifier { subst: Vec::new() }
    }

    fn fresh(&mut self) -> Ty {
        self.subst.push(None);
        Ty::Uni(self.subst.len() - 1)
    }

    fn shallow(&self, t: &Ty) -> Ty {
        let mut cur = t.clone();
        while let Ty::Uni(i) = cur {
            match &self.subst[i] {
                Some(next) => cur = next.clone(),
                None => break,
            }
        }
        cur
    }

    fn occurs(&self, var: usize, t: &Ty) -> bool {
        match self.shallow(t) {
            Ty::Uni(i) => i == var,
            Ty::Named(_, args) => args.iter().any(|a| self.occurs(var, a)),
            Ty::Pair(a, b) => self.occurs(var, &a) || self.occurs(var, &b),
            _ => false,
        }
    }

    /// Structural unification; returns false (without panicking) on
    /// mismatch so the caller can report it with context.
    fn unify(&mut self, a: &Ty, b: &Ty) -> bool {
        let ra = self.shallow(a);
        let rb = self.shallow(b);
        match (ra, rb) {
            (Ty::Uni(x), Ty::Uni(y)) if x == y => true,
            (Ty::Uni(x), t) | (t, Ty::Uni(x)) => {
                if self.occurs(x, &t) {
                    return false;
                }
                self.subst[x] = Some(t);
                true
            }
            (Ty::Rigid(m), Ty::Rigid(n)) => m == n,
            (Ty::Named(m, xs), Ty::Named(n, ys)) => {
                m == n
                    && xs.len() == ys.len()
                    && xs.iter().zip(&ys).all(|(x, y)| self.unify(x, y))
            }
            (Ty::Pair(a1, a2), Ty::Pair(b1, b2)) => {
                self.unify(&a1, &b1) && self.unify(&a2, &b2)
            }
            (Ty::Msg, Ty::Msg) | (Ty::Int, Ty::Int) => true,
            _ => false,
        }
    }

    fn zonk(&self, t: &Ty) -> Ty {
        match self.shallow(t) {
            Ty::Named(n, args) => Ty::Named(n, args.iter().map(|a| self.zonk(a)).collect()),
            Ty::Pair(a, b) => Ty::pair(self.zonk(&a), self.zonk(&b)),
            other => other,
        }
    }
}

fn ty_to_type_expr(t: &Ty) -> TypeExpr {
    match t {
        Ty::Rigid(n) => TypeExpr::Var(Ident::new(n, Span::default())),
        Ty::Uni(i) => TypeExpr::Var(Ident::new(&format!("_{}", i), Span::default())),
        Ty::Named(n, args) => TypeExpr::Named(
            Ident::new(n, Span::default()),
            args.iter().map(ty_to_type_expr).collect(),
        ),
        Ty::Pair(a, b) => TypeExpr::pair(ty_to_type_expr(a), ty_to_type_expr(b)),
        Ty::Msg => TypeExpr::Msg,
        Ty::Int => TypeExpr::Int,
    }
}

fn show_ty(uni: &Unifier, t: &Ty) -> String {
    render_type(&ty_to_type_expr(&uni.zonk(t)))
}

// ---- entry points ------------------------------------------------------

/// Runs every check over every definition, collecting all errors.
pub fn check_program(prog: &Program) -> Result<CheckedProgram, Vec<CheckError>> {
    let globals = Globals::build(prog);
    let mut errors = Vec::new();

    for d in prog.data_decls() {
        errors.extend(check_data_decl(&globals, d));
    }
    for e in prog.extern_decls() {
        errors.extend(validate_type(&globals, &e.domain));
        errors.extend(validate_type(&globals, &e.codomain));
    }

    let mut defs = HashMap::new();
    for f in prog.flip_defs() {
        match check_def_inner(&globals, f) {
            Ok(cd) => {
                defs.insert(f.name.name.clone(), cd);
            }
            Err(mut errs) => errors.append(&mut errs),
        }
    }

    if errors.is_empty() {
        Ok(CheckedProgram { program: prog.clone(), defs })
    } else {
        errors.sort_by_key(|e| (e.span.line, e.span.col, e.kind));
        Err(errors)
    }
}

/// Name resolution and typing only, without the bijection guarantees:
/// linearity, scope windows, and partitioning are all skipped. The
/// interpreter's runtime guards (no match, ambiguous match, consumed
/// binding) still apply, so this path exists to let deliberately broken
/// definitions run far enough to demonstrate those guards.
pub fn resolve_program(prog: &Program) -> Result<CheckedProgram, Vec<CheckError>> {
    let globals = Globals::build(prog);
    let mut errors = Vec::new();
    let mut defs = HashMap::new();
    for f in prog.flip_defs() {
        let typing = type_def(&globals, f);
        if !typing.errors.is_empty() {
            errors.extend(typing.errors);
            continue;
        }
        let usages = f.branches.iter().map(|b| branch_usage(b).0).collect();
        defs.insert(f.name.name.clone(), build_checked_def(&typing, usages));
    }
    if errors.is_empty() {
        Ok(CheckedProgram { program: prog.clone(), defs })
    } else {
        errors.sort_by_key(|e| (e.span.line, e.span.col, e.kind));
        Err(errors)
    }
}

/// Checks a single definition against the globals of `prog`. The
/// definition itself does not have to be a member of the program; this
/// is how reverser output is validated.
pub fn check_def(prog: &Program, def: &FlipDef) -> Vec<CheckError> {
    let globals = Globals::build(prog);
    match check_def_inner(&globals, def) {
        Ok(_) => Vec::new(),
        Err(mut errs) => {
            errs.sort_by_key(|e| (e.span.line, e.span.col, e.kind));
            errs
        }
    }
}

/// Linearity only: each binding consumed exactly once.
pub fn check_linearity(def: &FlipDef) -> Result<Vec<BranchUsage>, Vec<CheckError>> {
    let mut errors = Vec::new();
    let mut usages = Vec::new();
    for branch in &def.branches {
        let (usage, errs) = branch_usage(branch);
        errors.extend(errs);
        usages.push(usage);
    }
    if errors.is_empty() {
        Ok(usages)
    } else {
        Err(errors)
    }
}

/// Scope windows only: every `< ... >` argument occurrence of a variable
/// lies strictly between that variable's bind and consume sites.
pub fn check_scope_windows(def: &FlipDef) -> Result<(), Vec<CheckError>> {
    let mut errors = Vec::new();
    for branch in &def.branches {
        let (usage, _) = branch_usage(branch);
        errors.extend(window_errors(&usage));
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// Partition check for one side of the branch patterns.
pub fn check_partition(prog: &Program, def: &FlipDef, side: Side) -> Result<(), Vec<CheckError>> {
    let globals = Globals::build(prog);
    let typing = type_def(&globals, def);
    if !typing.errors.is_empty() {
        return Err(typing.errors);
    }
    let errs = partition_side(&globals, def, &typing, side);
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// Type checking only.
pub fn check_types(prog: &Program, def: &FlipDef) -> Result<(), Vec<CheckError>> {
    let globals = Globals::build(prog);
    let typing = type_def(&globals, def);
    if typing.errors.is_empty() {
        Ok(())
    } else {
        Err(typing.errors)
    }
}

fn check_def_inner(globals: &Globals, def: &FlipDef) -> Result<CheckedDef, Vec<CheckError>> {
    let mut errors = Vec::new();

    errors.extend(validate_type(globals, &def.domain));
    errors.extend(validate_type(globals, &def.codomain));
    for p in &def.params {
        match &p.sig {
            ParamSig::Flippable(a, b) => {
                errors.extend(validate_type(globals, a));
                errors.extend(validate_type(globals, b));
            }
            ParamSig::Indexed(i, a, b) => {
                errors.extend(validate_type(globals, i));
                errors.extend(validate_type(globals, a));
                errors.extend(validate_type(globals, b));
            }
        }
    }

    let typing = type_def(globals, def);
    let typing_clean = typing.errors.is_empty();
    errors.extend(typing.errors.iter().cloned());

    let mut usages = Vec::new();
    for branch in &def.branches {
        let (usage, errs) = branch_usage(branch);
        errors.extend(errs);
        errors.extend(window_errors(&usage));
        usages.push(usage);
    }

    if typing_clean {
        errors.extend(partition_side(globals, def, &typing, Side::Input));
        errors.extend(partition_side(globals, def, &typing, Side::Output));
        errors.extend(step_coverage(globals, def, &typing));
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(build_checked_def(&typing, usages))
}

fn build_checked_def(typing: &DefTyping, usages: Vec<BranchUsage>) -> CheckedDef {
    let branches = typing
        .branches
        .iter()
        .zip(usages)
        .map(|(bt, usage)| CheckedBranch {
            fexprs: bt.fexprs.clone(),
            usage,
            step_types: bt
                .step_types
                .iter()
                .map(|(s, t)| {
                    (
                        ty_to_type_expr(&typing.uni.zonk(s)),
                        ty_to_type_expr(&typing.uni.zonk(t)),
                    )
                })
                .collect(),
        })
        .collect();
    CheckedDef { branches }
}

// ---- declaration validation -------------------------------------------

fn check_data_decl(globals: &Globals, d: &DataDecl) -> Vec<CheckError> {
    let mut errors = Vec::new();
    let params: HashSet<&str> = d.params.iter().map(|p| p.name.as_str()).collect();
    for c in &d.ctors {
        for arg in &c.args {
            errors.extend(validate_type_with_vars(globals, arg, Some(&params)));
        }
    }
    errors
}

fn validate_type(globals: &Globals, t: &TypeExpr) -> Vec<CheckError> {
    validate_type_with_vars(globals, t, None)
}

fn validate_type_with_vars(
    globals: &Globals,
    t: &TypeExpr,
    allowed: Option<&HashSet<&str>>,
) -> Vec<CheckError> {
    let mut errors = Vec::new();
    walk_validate(globals, t, allowed, &mut errors);
    errors
}

fn walk_validate(
    globals: &Globals,
    t: &TypeExpr,
    allowed: Option<&HashSet<&str>>,
    errors: &mut Vec<CheckError>,
) {
    match t {
        TypeExpr::Var(id) => {
            if let Some(vars) = allowed {
                if !vars.contains(id.name.as_str()) {
                    errors.push(CheckError::new(
                        CheckErrorKind::UnknownName,
                        id.span,
                        format!("type variable '{}' is not declared", id.name),
                    ));
                }
            }
        }
        TypeExpr::Named(id, args) => {
            if id.is_upper() {
                match globals.datas.get(id.name.as_str()) {
                    Some(d) => {
                        if d.params.len() != args.len() {
                            errors.push(CheckError::new(
                                CheckErrorKind::ArityMismatch,
                                id.span,
                                format!(
                                    "type '{}' expects {} argument(s), found {}",
                                    id.name,
                                    d.params.len(),
                                    args.len()
                                ),
                            ));
                        }
                    }
                    None => errors.push(CheckError::new(
                        CheckErrorKind::UnknownName,
                        id.span,
                        format!("unknown type '{}'", id.name),
                    )),
                }
            } else {
                errors.push(CheckError::new(
                    CheckErrorKind::ArityMismatch,
                    id.span,
                    format!("type variable '{}' cannot take arguments", id.name),
                ));
            }
            for a in args {
                walk_validate(globals, a, allowed, errors);
            }
        }
        TypeExpr::Pair(a, b) => {
            walk_validate(globals, a, allowed, errors);
            walk_validate(globals, b, allowed, errors);
        }
        TypeExpr::Msg | TypeExpr::Int => {}
    }
}

// ---- type checking ------------------------------------------------------

struct BranchTyping {
    fexprs: Vec<RFexpr>,
    step_types: Vec<(Ty, Ty)>,
}

struct DefTyping {
    uni: Unifier,
    branches: Vec<BranchTyping>,
    errors: Vec<CheckError>,
}

struct TypeCk<'p, 'g> {
    globals: &'g Globals<'p>,
    uni: Unifier,
    errors: Vec<CheckError>,
    params: Vec<(String, PSigTy)>,
}

fn rigid_ty(t: &TypeExpr) -> Ty {
    match t {
        TypeExpr::Var(id) => Ty::Rigid(id.name.clone()),
        TypeExpr::Named(id, args) => {
            Ty::Named(id.name.clone(), args.iter().map(rigid_ty).collect())
        }
        TypeExpr::Pair(a, b) => Ty::pair(rigid_ty(a), rigid_ty(b)),
        TypeExpr::Msg => Ty::Msg,
        TypeExpr::Int => Ty::Int,
    }
}

fn type_def(globals: &Globals, def: &FlipDef) -> DefTyping {
    let mut ck = TypeCk {
        globals,
        uni: Unifier::new(),
        errors: Vec::new(),
        params: def
            .params
            .iter()
            .map(|p| {
                let sig = match &p.sig {
                    ParamSig::Flippable(a, b) => PSigTy::Flippable(rigid_ty(a), rigid_ty(b)),
                    ParamSig::Indexed(i, a, b) => {
                        PSigTy::Indexed(rigid_ty(i), rigid_ty(a), rigid_ty(b))
                    }
                };
                (p.name.name.clone(), sig)
            })
            .collect(),
    };

    let domain = rigid_ty(&def.domain);
    let codomain = rigid_ty(&def.codomain);
    let mut branches = Vec::new();
    for branch in &def.branches {
        branches.push(ck.type_branch(branch, &domain, &codomain));
    }
    DefTyping { uni: ck.uni, branches, errors: ck.errors }
}

impl<'p, 'g> TypeCk<'p, 'g> {
    fn error(&mut self, kind: CheckErrorKind, span: Span, detail: String) {
        self.errors.push(CheckError::new(kind, span, detail));
    }

    fn type_branch(&mut self, branch: &Branch, domain: &Ty, codomain: &Ty) -> BranchTyping {
        let bound = branch_bound_names(branch);
        let mut env: HashMap<String, Ty> = HashMap::new();
        self.bind_pattern(&branch.lhs, domain.clone(), &mut env);

        let mut fexprs = Vec::new();
        let mut step_types = Vec::new();
        for step in &branch.steps {
            let (kind, rf) = self.infer_fexpr(&step.fexpr, &env, &bound);
            let (src, dst) = match kind {
                Some(FK::Flip(s, t)) => (s, t),
                Some(FK::Indexed(..)) => {
                    self.error(
                        CheckErrorKind::ArityMismatch,
                        step.fexpr.span(),
                        "indexed family needs an index argument".to_string(),
                    );
                    (self.uni.fresh(), self.uni.fresh())
                }
                Some(FK::Partial { def, remaining, .. }) => {
                    self.error(
                        CheckErrorKind::ArityMismatch,
                        step.fexpr.span(),
                        format!("'{}' is missing {} argument(s)", def, remaining.len()),
                    );
                    (self.uni.fresh(), self.uni.fresh())
                }
                Some(FK::Value(_)) => {
                    self.error(
                        CheckErrorKind::TypeMismatch,
                        step.fexpr.span(),
                        "a value variable cannot be used as a flippable".to_string(),
                    );
                    (self.uni.fresh(), self.uni.fresh())
                }
                None => (self.uni.fresh(), self.uni.fresh()),
            };
            self.construct_pattern(&step.out, src.clone(), &env);
            self.bind_pattern(&step.into, dst.clone(), &mut env);
            fexprs.push(rf);
            step_types.push((src, dst));
        }

        self.construct_pattern(&branch.rhs, codomain.clone(), &env);
        BranchTyping { fexprs, step_types }
    }

    /// Pattern in binding position: introduces its variables at the
    /// component types of `ty`.
    fn bind_pattern(&mut self, pat: &Pattern, ty: Ty, env: &mut HashMap<String, Ty>) {
        match pat {
            Pattern::Var(id) => {
                env.insert(id.name.clone(), ty);
            }
            Pattern::Pair(a, b) => {
                let (ta, tb) = self.expect_pair(ty, pat.span());
                self.bind_pattern(a, ta, env);
                self.bind_pattern(b, tb, env);
            }
            Pattern::Ctor(id, args) => {
                if let Some(arg_tys) = self.ctor_arg_types(id, args.len(), ty) {
                    for (a, t) in args.iter().zip(arg_tys) {
                        self.bind_pattern(a, t, env);
                    }
                } else {
                    for a in args {
                        let t = self.uni.fresh();
                        self.bind_pattern(a, t, env);
                    }
                }
            }
        }
    }

    /// Pattern in constructing position: every variable must already be
    /// bound, at a type matching the component of `ty`.
    fn construct_pattern(&mut self, pat: &Pattern, ty: Ty, env: &HashMap<String, Ty>) {
        match pat {
            Pattern::Var(id) => match env.get(&id.name) {
                Some(t) => {
                    let t = t.clone();
                    self.unify_or_report(&t, &ty, id.span, &format!("variable '{}'", id.name));
                }
                None => self.error(
                    CheckErrorKind::UnknownName,
                    id.span,
                    format!("variable '{}' is not bound", id.name),
                ),
            },
            Pattern::Pair(a, b) => {
                let (ta, tb) = self.expect_pair(ty, pat.span());
                self.construct_pattern(a, ta, env);
                self.construct_pattern(b, tb, env);
            }
            Pattern::Ctor(id, args) => {
                if let Some(arg_tys) = self.ctor_arg_types(id, args.len(), ty) {
                    for (a, t) in args.iter().zip(arg_tys) {
                        self.construct_pattern(a, t, env);
                    }
                } else {
                    for a in args {
                        let t = self.uni.fresh();
                        self.construct_pattern(a, t, env);
                    }
                }
            }
        }
    }

    fn expect_pair(&mut self, ty: Ty, span: Span) -> (Ty, Ty) {
        let a = self.uni.fresh();
        let b = self.uni.fresh();
        let want = Ty::pair(a.clone(), b.clone());
        self.unify_or_report(&ty, &want, span, "pair pattern");
        (a, b)
    }

    /// Resolves a constructor pattern: unifies `ty` with the constructor's
    /// data type and returns the instantiated argument types.
    fn ctor_arg_types(&mut self, id: &Ident, arity: usize, ty: Ty) -> Option<Vec<Ty>> {
        let info = match self.globals.ctors.get(id.name.as_str()) {
            Some(i) => i,
            None => {
                self.error(
                    CheckErrorKind::UnknownName,
                    id.span,
                    format!("unknown constructor '{}'", id.name),
                );
                return None;
            }
        };
        if info.ctor.args.len() != arity {
            self.error(
                CheckErrorKind::ArityMismatch,
                id.span,
                format!(
                    "constructor '{}' expects {} argument(s), found {}",
                    id.name,
                    info.ctor.args.len(),
                    arity
                ),
            );
            return None;
        }
        let mut inst: HashMap<&str, Ty> = HashMap::new();
        for p in &info.data.params {
            inst.insert(p.name.as_str(), self.uni.fresh());
        }
        let data_ty = Ty::Named(
            info.data.name.name.clone(),
            info.data.params.iter().map(|p| inst[p.name.as_str()].clone()).collect(),
        );
        self.unify_or_report(&ty, &data_ty, id.span, &format!("constructor '{}'", id.name));
        Some(info.ctor.args.iter().map(|t| instantiate_with(t, &inst)).collect())
    }

    fn unify_or_report(&mut self, a: &Ty, b: &Ty, span: Span, what: &str) {
        if !self.uni.unify(a, b) {
            let detail = format!(
                "{}: expected {}, found {}",
                what,
                show_ty(&self.uni, b),
                show_ty(&self.uni, a)
            );
            self.error(CheckErrorKind::TypeMismatch, span, detail);
        }
    }

    fn infer_fexpr(
        &mut self,
        fe: &FExpr,
        env: &HashMap<String, Ty>,
        bound: &HashSet<String>,
    ) -> (Option<FK>, RFexpr) {
        match fe {
            FExpr::Ref(id) => self.infer_ref(id, env, bound),
            FExpr::Flip(inner) => {
                let (k, rf) = self.infer_fexpr(inner, env, bound);
                let flipped = RFexpr::Flip(Box::new(rf));
                match k {
                    Some(FK::Flip(s, t)) => (Some(FK::Flip(t, s)), flipped),
                    Some(_) => {
                        self.error(
                            CheckErrorKind::TypeMismatch,
                            inner.span(),
                            "only a fully applied flippable can be flipped".to_string(),
                        );
                        (None, flipped)
                    }
                    None => (None, flipped),
                }
            }
            FExpr::App(head, arg) => {
                let (hk, hrf) = self.infer_fexpr(head, env, bound);
                let (ak, arf) = self.infer_fexpr(arg, env, bound);
                let rf = RFexpr::App(Box::new(hrf), Box::new(arf));
                let hk = match hk {
                    Some(k) => k,
                    None => return (None, rf),
                };
                match hk {
                    FK::Indexed(i, s, t) => match ak {
                        Some(FK::Value(vt)) => {
                            self.unify_or_report(&vt, &i, arg.span(), "index argument");
                            (Some(FK::Flip(s, t)), rf)
                        }
                        Some(_) => {
                            self.error(
                                CheckErrorKind::TypeMismatch,
                                arg.span(),
                                "index argument must be an in-scope variable".to_string(),
                            );
                            (None, rf)
                        }
                        None => (None, rf),
                    },
                    FK::Partial { def, mut remaining, result } => {
                        let expected = remaining.remove(0);
                        let ok = match (&expected, &ak) {
                            (PSigTy::Flippable(s0, t0), Some(FK::Flip(s, t))) => {
                                self.unify_or_report(s, s0, arg.span(), "argument domain");
                                self.unify_or_report(t, t0, arg.span(), "argument codomain");
                                true
                            }
                            (PSigTy::Indexed(i0, s0, t0), Some(FK::Indexed(i, s, t))) => {
                                self.unify_or_report(i, i0, arg.span(), "argument index type");
                                self.unify_or_report(s, s0, arg.span(), "argument domain");
                                self.unify_or_report(t, t0, arg.span(), "argument codomain");
                                true
                            }
                            (_, None) => false,
                            (PSigTy::Flippable(..), Some(_)) => {
                                self.error(
                                    CheckErrorKind::TypeMismatch,
                                    arg.span(),
                                    format!("'{}' expects a flippable argument here", def),
                                );
                                false
                            }
                            (PSigTy::Indexed(..), Some(_)) => {
                                self.error(
                                    CheckErrorKind::TypeMismatch,
                                    arg.span(),
                                    format!("'{}' expects an indexed family argument here", def),
                                );
                                false
                            }
                        };
                        if !ok {
                            return (None, rf);
                        }
                        if remaining.is_empty() {
                            (Some(FK::Flip(result.0, result.1)), rf)
                        } else {
                            (Some(FK::Partial { def, remaining, result }), rf)
                        }
                    }
                    FK::Flip(..) => {
                        self.error(
                            CheckErrorKind::ArityMismatch,
                            arg.span(),
                            "too many arguments to a flippable".to_string(),
                        );
                        (None, rf)
                    }
                    FK::Value(_) => {
                        self.error(
                            CheckErrorKind::TypeMismatch,
                            head.span(),
                            "a value variable cannot be applied to arguments".to_string(),
                        );
                        (None, rf)
                    }
                }
            }
        }
    }

    fn infer_ref(
        &mut self,
        id: &Ident,
        env: &HashMap<String, Ty>,
        bound: &HashSet<String>,
    ) -> (Option<FK>, RFexpr) {
        // Branch-local variables shadow parameters and globals.
        if bound.contains(&id.name) {
            let rf = RFexpr::Var(id.name.clone());
            let ty = match env.get(&id.name) {
                Some(t) => t.clone(),
                // Bound later in the branch; the window check reports the
                // misuse, typing stays quiet.
                None => self.uni.fresh(),
            };
            return (Some(FK::Value(ty)), rf);
        }
        if let Some(idx) = self.params.iter().position(|(n, _)| n == &id.name) {
            let sig = self.params[idx].1.clone();
            let k = match sig {
                PSigTy::Flippable(a, b) => FK::Flip(a, b),
                PSigTy::Indexed(i, a, b) => FK::Indexed(i, a, b),
            };
            return (Some(k), RFexpr::Param(idx));
        }
        if let Some(def) = self.globals.flips.get(id.name.as_str()).copied() {
            let mut inst: HashMap<&str, Ty> = HashMap::new();
            let remaining: Vec<PSigTy> = def
                .params
                .iter()
                .map(|p| match &p.sig {
                    ParamSig::Flippable(a, b) => PSigTy::Flippable(
                        instantiate_type(a, &mut inst, &mut self.uni),
                        instantiate_type(b, &mut inst, &mut self.uni),
                    ),
                    ParamSig::Indexed(i, a, b) => PSigTy::Indexed(
                        instantiate_type(i, &mut inst, &mut self.uni),
                        instantiate_type(a, &mut inst, &mut self.uni),
                        instantiate_type(b, &mut inst, &mut self.uni),
                    ),
                })
                .collect();
            let dom = instantiate_type(&def.domain, &mut inst, &mut self.uni);
            let cod = instantiate_type(&def.codomain, &mut inst, &mut self.uni);
            let rf = RFexpr::Def(id.name.clone());
            if remaining.is_empty() {
                return (Some(FK::Flip(dom, cod)), rf);
            }
            return (
                Some(FK::Partial { def: id.name.clone(), remaining, result: (dom, cod) }),
                rf,
            );
        }
        if let Some(e) = self.globals.externs.get(id.name.as_str()).copied() {
            let mut inst: HashMap<&str, Ty> = HashMap::new();
            let dom = instantiate_type(&e.domain, &mut inst, &mut self.uni);
            let cod = instantiate_type(&e.codomain, &mut inst, &mut self.uni);
            return (Some(FK::Flip(dom, cod)), RFexpr::Extern(id.name.clone()));
        }
        self.error(
            CheckErrorKind::UnknownName,
            id.span,
            format!("unknown name '{}'", id.name),
        );
        (None, RFexpr::Var(id.name.clone()))
    }

}

/// Converts a callee signature type to a term, giving each of the
/// callee's type variables one fresh unification variable per use site.
fn instantiate_type<'a>(
    t: &'a TypeExpr,
    inst: &mut HashMap<&'a str, Ty>,
    uni: &mut Unifier,
) -> Ty {
    match t {
        TypeExpr::Var(id) => inst
            .entry(id.name.as_str())
            .or_insert_with(|| uni.fresh())
            .clone(),
        TypeExpr::Named(id, args) => Ty::Named(
            id.name.clone(),
            args.iter().map(|a| instantiate_type(a, inst, uni)).collect(),
        ),
        TypeExpr::Pair(a, b) => Ty::pair(
            instantiate_type(a, inst, uni),
            instantiate_type(b, inst, uni),
        ),
        TypeExpr::Msg => Ty::Msg,
        TypeExpr::Int => Ty::Int,
    }
}

/// Substitutes already-chosen type arguments into a constructor field
/// type (used after the data type's parameters are instantiated).
fn instantiate_with(t: &TypeExpr, inst: &HashMap<&str, Ty>) -> Ty {
    match t {
        TypeExpr::Var(id) => inst
            .get(id.name.as_str())
            .cloned()
            .unwrap_or_else(|| Ty::Rigid(id.name.clone())),
        TypeExpr::Named(id, args) => Ty::Named(
            id.name.clone(),
            args.iter().map(|a| instantiate_with(a, inst)).collect(),
        ),
        TypeExpr::Pair(a, b) => Ty::pair(instantiate_with(a, inst), instantiate_with(b, inst)),
        TypeExpr::Msg => Ty::Msg,
        TypeExpr::Int => Ty::Int,
    }
}

/// Names bound by the branch when read forward: left hand side variables
/// plus each step's incoming pattern.
fn branch_bound_names(branch: &Branch) -> HashSet<String> {
    let mut names = HashSet::new();
    for v in branch.lhs.vars() {
        names.insert(v.name.clone());
    }
    for s in &branch.steps {
        for v in s.into.vars() {
            names.insert(v.name.clone());
        }
    }
    names
}

// ---- linearity and scope windows ---------------------------------------

#[derive(Debug)]
struct Slot {
    window: VarWindow,
    orphaned_by_rebind: bool,
}

fn branch_usage(branch: &Branch) -> (BranchUsage, Vec<CheckError>) {
    let bound = branch_bound_names(branch);
    let mut errors = Vec::new();
    let mut live: HashMap<String, usize> = HashMap::new();
    let mut slots: Vec<Slot> = Vec::new();
    let mut reads: Vec<VarRead> = Vec::new();

    let bind = |name: &Ident, site: Site,
                live: &mut HashMap<String, usize>,
                slots: &mut Vec<Slot>,
                errors: &mut Vec<CheckError>| {
        if let Some(&i) = live.get(&name.name) {
            if slots[i].window.consume.is_none() {
                errors.push(CheckError::new(
                    CheckErrorKind::RebindBeforeConsume,
                    name.span,
                    format!("'{}' is rebound while the previous binding is still live", name.name),
                ));
                slots[i].orphaned_by_rebind = true;
            }
        }
        slots.push(Slot {
            window: VarWindow {
                name: name.name.clone(),
                bind: site,
                consume: None,
                span: name.span,
            },
            orphaned_by_rebind: false,
        });
        live.insert(name.name.clone(), slots.len() - 1);
    };

    let consume = |name: &Ident, site: Site,
                   live: &mut HashMap<String, usize>,
                   slots: &mut Vec<Slot>,
                   errors: &mut Vec<CheckError>| {
        // A name never bound in this branch is the type checker's
        // problem, nothing to track here.
        if let Some(&i) = live.get(&name.name) {
            if slots[i].window.consume.is_some() {
                errors.push(CheckError::new(
                    CheckErrorKind::NonlinearUse,
                    name.span,
                    format!("'{}' is used more than once", name.name),
                ));
            } else {
                slots[i].window.consume = Some(site);
            }
        }
    };

    for v in branch.lhs.vars() {
        bind(v, Site::Lhs, &mut live, &mut slots, &mut errors);
    }
    for (i, step) in branch.steps.iter().enumerate() {
        for v in step.out.vars() {
            consume(v, Site::StepOut(i), &mut live, &mut slots, &mut errors);
        }
        collect_reads(&step.fexpr, &bound, i, &mut reads);
        for v in step.into.vars() {
            bind(v, Site::StepIn(i), &mut live, &mut slots, &mut errors);
        }
    }
    for v in branch.rhs.vars() {
        consume(v, Site::Rhs, &mut live, &mut slots, &mut errors);
    }

    for slot in &slots {
        if slot.window.consume.is_none() && !slot.orphaned_by_rebind {
            errors.push(CheckError::new(
                CheckErrorKind::UnusedVariable,
                slot.window.span,
                format!("'{}' is bound but never used", slot.window.name),
            ));
        }
    }

    let usage = BranchUsage {
        windows: slots.into_iter().map(|s| s.window).collect(),
        reads,
    };
    (usage, errors)
}

/// Variable occurrences used as arguments inside a step's `< ... >`.
/// Only names bound somewhere in the branch count; anything else is a
/// reference to a parameter or top-level flippable.
fn collect_reads(fe: &FExpr, bound: &HashSet<String>, step: usize, out: &mut Vec<VarRead>) {
    match fe {
        FExpr::Ref(id) => {
            if bound.contains(&id.name) {
                out.push(VarRead { name: id.name.clone(), step, span: id.span });
            }
        }
        FExpr::App(h, a) => {
            collect_reads(h, bound, step, out);
            collect_reads(a, bound, step, out);
        }
        FExpr::Flip(inner) => collect_reads(inner, bound, step, out),
    }
}

fn window_errors(usage: &BranchUsage) -> Vec<CheckError> {
    let mut errors = Vec::new();
    for read in &usage.reads {
        let read_pos = Site::StepOut(read.step).order();
        let ok = usage.windows.iter().any(|w| {
            w.name == read.name
                && w.bind.order() <= read_pos
                && w.consume.is_some_and(|c| c.order() > read_pos)
        });
        if !ok {
            errors.push(CheckError::new(
                CheckErrorKind::OutOfWindowReference,
                read.span,
                format!(
                    "'{}' is referenced outside the window between its bind and use sites",
                    read.name
                ),
            ));
        }
    }
    errors
}

// ---- partitioning --------------------------------------------------------

/// Coverage witness: a pattern shape not matched by any branch.
#[derive(Debug, Clone)]
enum Witness {
    Any,
    Ctor(String, Vec<Witness>),
    Pair(Box<Witness>, Box<Witness>),
}

fn render_witness(w: &Witness) -> String {
    match w {
        Witness::Any => "_".to_string(),
        Witness::Ctor(name, args) => {
            let mut s = format!("({}", name);
            for a in args {
                s.push(' ');
                s.push_str(&render_witness(a));
            }
            s.push(')');
            s
        }
        Witness::Pair(a, b) => format!("({} , {})", render_witness(a), render_witness(b)),
    }
}

fn partition_side(
    globals: &Globals,
    def: &FlipDef,
    typing: &DefTyping,
    side: Side,
) -> Vec<CheckError> {
    let mut errors = Vec::new();
    let (ty, pats): (Ty, Vec<&Pattern>) = match side {
        Side::Input => (rigid_ty(&def.domain), def.branches.iter().map(|b| &b.lhs).collect()),
        Side::Output => (rigid_ty(&def.codomain), def.branches.iter().map(|b| &b.rhs).collect()),
    };
    let label = match side {
        Side::Input => "input",
        Side::Output => "output",
    };

    for i in 0..pats.len() {
        for j in i + 1..pats.len() {
            if let Some(meet) = pattern_meet(pats[i], pats[j]) {
                errors.push(CheckError::new(
                    CheckErrorKind::OverlappingPatterns,
                    pats[j].span(),
                    format!(
                        "{} patterns of branches {} and {} both match {}",
                        label,
                        i + 1,
                        j + 1,
                        render_witness(&meet)
                    ),
                ));
            }
        }
    }

    let rows: Vec<Vec<Cell>> = pats.iter().map(|p| vec![Cell::from_pattern(p)]).collect();
    if let Some(w) = find_uncovered(globals, &typing.uni, rows, &[ty]) {
        errors.push(CheckError::new(
            CheckErrorKind::NonExhaustivePatterns,
            def.name.span,
            format!("{} patterns do not cover {}", label, render_witness(&w[0])),
        ));
    }
    errors
}

/// Every step pattern is matched against a computed value in one of the
/// two run directions, so each must cover its type on its own.
fn step_coverage(globals: &Globals, def: &FlipDef, typing: &DefTyping) -> Vec<CheckError> {
    let mut errors = Vec::new();
    for (bi, branch) in def.branches.iter().enumerate() {
        for (si, step) in branch.steps.iter().enumerate() {
            let (src, dst) = &typing.branches[bi].step_types[si];
            for (pat, ty, role) in
                [(&step.out, src, "outgoing"), (&step.into, dst, "incoming")]
            {
                let rows = vec![vec![Cell::from_pattern(pat)]];
                if let Some(w) =
                    find_uncovered(globals, &typing.uni, rows, &[typing.uni.zonk(ty)])
                {
                    errors.push(CheckError::new(
                        CheckErrorKind::NonExhaustivePatterns,
                        pat.span(),
                        format!(
                            "{} step pattern does not cover {}",
                            role,
                            render_witness(&w[0])
                        ),
                    ));
                }
            }
        }
    }
    errors
}

/// Most specific common shape of two patterns, if any value matches both.
fn pattern_meet(p: &Pattern, q: &Pattern) -> Option<Witness> {
    match (p, q) {
        (Pattern::Var(_), Pattern::Var(_)) => Some(Witness::Any),
        (Pattern::Var(_), other) | (other, Pattern::Var(_)) => Some(witness_of(other)),
        (Pattern::Ctor(a, xs), Pattern::Ctor(b, ys)) => {
            if a.name != b.name || xs.len() != ys.len() {
                return None;
            }
            let args: Option<Vec<Witness>> =
                xs.iter().zip(ys).map(|(x, y)| pattern_meet(x, y)).collect();
            Some(Witness::Ctor(a.name.clone(), args?))
        }
        (Pattern::Pair(a1, a2), Pattern::Pair(b1, b2)) => Some(Witness::Pair(
            Box::new(pattern_meet(a1, b1)?),
            Box::new(pattern_meet(a2, b2)?),
        )),
        _ => None,
    }
}

fn witness_of(p: &Pattern) -> Witness {
    match p {
        Pattern::Var(_) => Witness::Any,
        Pattern::Ctor(id, args) => {
            Witness::Ctor(id.name.clone(), args.iter().map(witness_of).collect())
        }
        Pattern::Pair(a, b) => {
            Witness::Pair(Box::new(witness_of(a)), Box::new(witness_of(b)))
        }
    }
}

/// A coverage-matrix cell: `Wild` matches anything (a variable or an
/// expanded placeholder), `Pat` is a structured pattern.
#[derive(Clone)]
enum Cell<'a> {
    Wild,
    Pat(&'a Pattern),
}

impl<'a> Cell<'a> {
    fn from_pattern(p: &'a Pattern) -> Cell<'a> {
        match p {
            Pattern::Var(_) => Cell::Wild,
            other => Cell::Pat(other),
        }
    }
}

/// Usefulness-style coverage: returns a witness vector of value shapes
/// not matched by any row, or `None` when the rows cover everything.
fn find_uncovered(
    globals: &Globals,
    uni: &Unifier,
    rows: Vec<Vec<Cell>>,
    types: &[Ty],
) -> Option<Vec<Witness>> {
    if rows.is_empty() {
        return Some(types.iter().map(|_| Witness::Any).collect());
    }
    if types.is_empty() {
        return None;
    }

    let head_ty = uni.zonk(&types[0]);
    let rest_tys = &types[1..];

    let all_wild = rows.iter().all(|r| matches!(r[0], Cell::Wild));
    if all_wild {
        let tails: Vec<Vec<Cell>> = rows.into_iter().map(|mut r| r.split_off(1)).collect();
        let w = find_uncovered(globals, uni, tails, rest_tys)?;
        let mut out = vec![Witness::Any];
        out.extend(w);
        return Some(out);
    }

    match head_ty {
        Ty::Pair(ta, tb) => {
            let mut new_rows = Vec::new();
            for r in rows {
                let mut cells = match &r[0] {
                    Cell::Wild => vec![Cell::Wild, Cell::Wild],
                    Cell::Pat(Pattern::Pair(a, b)) => {
                        vec![Cell::from_pattern(a), Cell::from_pattern(b)]
                    }
                    // Other shapes at pair type are type errors already
                    // reported; skip the row defensively.
                    Cell::Pat(_) => continue,
                };
                cells.extend_from_slice(&r[1..]);
                new_rows.push(cells);
            }
            let mut tys = vec![(*ta).clone(), (*tb).clone()];
            tys.extend_from_slice(rest_tys);
            let w = find_uncovered(globals, uni, new_rows, &tys)?;
            let (head, tail) = w.split_at(2);
            let mut out = vec![Witness::Pair(
                Box::new(head[0].clone()),
                Box::new(head[1].clone()),
            )];
            out.extend_from_slice(tail);
            Some(out)
        }
        Ty::Named(dname, dargs) => {
            // An unknown type name was already reported by signature
            // validation.
            let data = globals.datas.get(dname.as_str())?;
            let inst: HashMap<&str, Ty> = data
                .params
                .iter()
                .zip(dargs.iter())
                .map(|(p, a)| (p.name.as_str(), a.clone()))
                .collect();
            for ctor in &data.ctors {
                let arg_tys: Vec<Ty> =
                    ctor.args.iter().map(|t| instantiate_with(t, &inst)).collect();
                let mut spec_rows = Vec::new();
                for r in &rows {
                    match &r[0] {
                        Cell::Wild => {
                            let mut cells = vec![Cell::Wild; arg_tys.len()];
                            cells.extend_from_slice(&r[1..]);
                            spec_rows.push(cells);
                        }
                        Cell::Pat(Pattern::Ctor(id, args)) if id.name == ctor.name.name => {
                            let mut cells: Vec<Cell> =
                                args.iter().map(Cell::from_pattern).collect();
                            cells.extend_from_slice(&r[1..]);
                            spec_rows.push(cells);
                        }
                        Cell::Pat(_) => {}
                    }
                }
                let mut tys = arg_tys.clone();
                tys.extend_from_slice(rest_tys);
                if let Some(w) = find_uncovered(globals, uni, spec_rows, &tys) {
                    let (head, tail) = w.split_at(arg_tys.len());
                    let mut out =
                        vec![Witness::Ctor(ctor.name.name.clone(), head.to_vec())];
                    out.extend_from_slice(tail);
                    return Some(out);
                }
            }
            None
        }
        // Opaque types and type variables admit only variable patterns;
        // since some row is structured here only if typing failed, treat
        // structured rows as matching nothing.
        _ => {
            let survivors: Vec<Vec<Cell>> = rows
                .into_iter()
                .filter(|r| matches!(r[0], Cell::Wild))
                .map(|mut r| r.split_off(1))
                .collect();
            let w = find_uncovered(globals, uni, survivors, rest_tys)?;
            let mut out = vec![Witness::Any];
            out.extend(w);
            Some(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn kinds_of(src: &str) -> Vec<CheckErrorKind> {
        let prog = parse_program(src).expect("fixture must parse");
        match check_program(&prog) {
            Ok(_) => Vec::new(),
            Err(errs) => errs.into_iter().map(|e| e.kind).collect(),
        }
    }

    fn assert_clean(src: &str) {
        let prog = parse_program(src).expect("fixture must parse");
        if let Err(errs) = check_program(&prog) {
            let msgs: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
            panic!("expected clean check, got: {:?}", msgs);
        }
    }

    #[test]
    fn accepts_identity_swap_and_compose() {
        assert_clean(
            "data Either a b = Left a | Right b\n\
             flip idF : a <-> a = { x <-> x }\n\
             flip pairSwp : (a , b) <-> (b , a) = { (x , y) <-> (y , x) }\n\
             flip sumSwp : Either a b <-> Either b a = { (Left x) <-> (Right x) ; (Right y) <-> (Left y) }\n\
             flip compose (f : a <-> b) (g : b <-> c) : a <-> c = { x <-> x < f > y <-> y < g > z <-> z }\n",
        );
    }

    #[test]
    fn accepts_recursive_polymorphic_map() {
        assert_clean(
            "data List a = Nil | Cons a (List a)\n\
             flip mapF (f : a <-> b) : List a <-> List b = {\n\
               (Nil) <-> (Nil);\n\
               (Cons x xs) <-> x < f > y <-> xs < mapF f > ys <-> (Cons y ys)\n\
             }\n",
        );
    }

    #[test]
    fn accepts_indexed_family_use() {
        assert_clean(
            "flip useIdx (f : Int -> Int <-> Int) : (Int , Int) <-> (Int , Int) = {\n\
               (i , x) <-> x < f i > y <-> (i , y)\n\
             }\n",
        );
    }

    #[test]
    fn nonlinear_use() {
        // A repeated variable inside one pattern is a parse error, so the
        // interesting case is one binding consumed at two different sites.
        let kinds = kinds_of(
            "flip idF : a <-> a = { x <-> x }\n\
             flip dupu : Int <-> (Int , Int) = { x <-> x < idF > y <-> (x , y) }\n",
        );
        assert_eq!(kinds, vec![CheckErrorKind::NonlinearUse]);
    }

    #[test]
    fn unused_variable() {
        let kinds = kinds_of("flip fst : (a , b) <-> a = { (x , y) <-> x }\n");
        assert_eq!(kinds, vec![CheckErrorKind::UnusedVariable]);
    }

    #[test]
    fn out_of_window_reference() {
        let kinds = kinds_of(
            "flip bad (f : Int -> Int <-> Int) : (Int , Int) <-> (Int , Int) = {\n\
               (i , x) <-> i < f i > y <-> (x , y)\n\
             }\n",
        );
        assert_eq!(kinds, vec![CheckErrorKind::OutOfWindowReference]);
    }

    #[test]
    fn overlapping_patterns() {
        let kinds = kinds_of(
            "data Two = A | B\n\
             flip over : Two <-> Two = { x <-> x ; (A) <-> (B) }\n",
        );
        assert!(!kinds.is_empty());
        assert!(kinds.iter().all(|k| *k == CheckErrorKind::OverlappingPatterns), "{:?}", kinds);
    }

    #[test]
    fn non_exhaustive_patterns() {
        let kinds = kinds_of(
            "data Two = A | B\n\
             flip part : Two <-> Two = { (A) <-> (B) }\n",
        );
        assert!(!kinds.is_empty());
        assert!(
            kinds.iter().all(|k| *k == CheckErrorKind::NonExhaustivePatterns),
            "{:?}",
            kinds
        );
    }

    #[test]
    fn exhaustiveness_witness_names_the_gap() {
        let prog = parse_program(
            "data Either a b = Left a | Right b\n\
             flip part : Either Int Int <-> Either Int Int = { (Left x) <-> (Left x) }\n",
        )
        .unwrap();
        let errs = check_program(&prog).unwrap_err();
        assert!(
            errs.iter().any(|e| e.detail.contains("(Right _)")),
            "wanted a (Right _) witness in {:?}",
            errs.iter().map(|e| e.to_string()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn rebind_before_consume() {
        let kinds = kinds_of(
            "flip idF : a <-> a = { x <-> x }\n\
             flip reb : (Int , Int) <-> Int = { (x , y) <-> y < idF > x <-> x }\n",
        );
        assert_eq!(kinds, vec![CheckErrorKind::RebindBeforeConsume]);
    }

    #[test]
    fn type_mismatch() {
        let kinds = kinds_of("flip tm : (Int , Msg) <-> (Msg , Int) = { (x , y) <-> (x , y) }\n");
        assert!(!kinds.is_empty());
        assert!(kinds.iter().all(|k| *k == CheckErrorKind::TypeMismatch), "{:?}", kinds);
    }

    #[test]
    fn unknown_name() {
        let kinds = kinds_of("flip un : Int <-> Int = { x <-> x < mystery > y <-> y }\n");
        assert_eq!(kinds, vec![CheckErrorKind::UnknownName]);
    }

    #[test]
    fn arity_mismatch() {
        let kinds = kinds_of(
            "flip idF : a <-> a = { x <-> x }\n\
             flip compose (f : a <-> b) (g : b <-> c) : a <-> c = { x <-> x < f > y <-> y < g > z <-> z }\n\
             flip am : Int <-> Int = { x <-> x < compose idF > y <-> y }\n",
        );
        assert_eq!(kinds, vec![CheckErrorKind::ArityMismatch]);
    }

    #[test]
    fn flipping_an_indexed_family_is_rejected() {
        let kinds = kinds_of(
            "flip f (g : Int -> Int <-> Int) : Int <-> Int = { x <-> x < flip g > y <-> y }\n",
        );
        assert!(kinds.contains(&CheckErrorKind::TypeMismatch), "{:?}", kinds);
    }

    #[test]
    fn index_argument_must_be_a_variable() {
        let kinds = kinds_of(
            "flip idF : a <-> a = { x <-> x }\n\
             flip f (g : Int -> Int <-> Int) : Int <-> Int = { x <-> x < g idF > y <-> y }\n",
        );
        assert!(kinds.contains(&CheckErrorKind::TypeMismatch), "{:?}", kinds);
    }

    #[test]
    fn step_patterns_must_cover_their_type() {
        let kinds = kinds_of(
            "data Two = A | B\n\
             flip idF : a <-> a = { x <-> x }\n\
             flip sc : Two <-> Two = { x <-> x < idF > (A) <-> (A) }\n",
        );
        assert!(!kinds.is_empty());
        assert!(
            kinds.iter().all(|k| *k == CheckErrorKind::NonExhaustivePatterns),
            "{:?}",
            kinds
        );
    }

    #[test]
    fn errors_are_ordered_by_position() {
        let prog = parse_program(
            "flip tm : (Int , Msg) <-> (Msg , Int) = { (x , y) <-> (x , y) }\n\
             flip fst : (a , b) <-> a = { (p , q) <-> p }\n",
        )
        .unwrap();
        let errs = check_program(&prog).unwrap_err();
        let positions: Vec<(u32, u32)> = errs.iter().map(|e| (e.span.line, e.span.col)).collect();
        let mut sorted = positions.clone();
        sorted.sort();
        assert_eq!(positions, sorted);
    }

    #[test]
    fn diagnostic_display_format() {
        let e = CheckError::new(
            CheckErrorKind::UnusedVariable,
            Span::new(3, 14),
            "'y' is bound but never used".to_string(),
        );
        assert_eq!(e.to_string(), "3:14: UnusedVariable: 'y' is bound but never used");
    }

    #[test]
    fn check_def_works_for_standalone_definitions() {
        let prog = parse_program("flip idF : a <-> a = { x <-> x }\n").unwrap();
        let standalone = parse_program(
            "flip viaId : Int <-> Int = { x <-> x < idF > y <-> y }\n",
        )
        .unwrap();
        let def = standalone.flip_def("viaId").unwrap().clone();
        // The definition is not a member of `prog` but resolves against it.
        assert!(check_def(&prog, &def).is_empty());
    }

    #[test]
    fn usage_windows_report_bind_and_consume_sites() {
        let prog = parse_program(
            "flip idF : a <-> a = { x <-> x }\n\
             flip two : Int <-> Int = { a <-> a < idF > b <-> b }\n",
        )
        .unwrap();
        let def = prog.flip_def("two").unwrap();
        let usages = check_linearity(def).unwrap();
        assert_eq!(usages.len(), 1);
        let w = &usages[0].windows;
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].bind, Site::Lhs);
        assert_eq!(w[0].consume, Some(Site::StepOut(0)));
        assert_eq!(w[1].bind, Site::StepIn(0));
        assert_eq!(w[1].consume, Some(Site::Rhs));
    }
}
