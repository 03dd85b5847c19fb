//! Bidirectional interpreter.
//!
//! A [`Flippable`] is a runnable bijection handle: a host-provided pair
//! of inverse functions, a named definition applied to its arguments, or
//! the flip of another flippable. Applying one forward or backward walks
//! the definition's branches; running backward walks the same branches
//! mirrored, so one definition serves as both directions.
//!
//! Two guards stay on in every build, because they are what turns a
//! subtly wrong program into a clean error instead of data corruption:
//! branch selection fails if the matched side would be ambiguous, and
//! reading a consumed binding faults.

use crate::ast::{Branch, FlipDef, Pattern};
use crate::checker::{CheckedProgram, RFexpr};
use crate::value::Value;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;
pub const DEFAULT_RECURSION_LIMIT: u64 = 65_536;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    /// No branch pattern matched the value (reported with the side that
    /// was being matched).
    NoMatch { def: String, value: String },
    /// More than one branch matched: the definition is not a bijection
    /// and this run would not be invertible.
    AmbiguousMatch { def: String, value: String },
    /// A variable was read after the step that consumed it.
    ConsumedBinding { def: String, name: String },
    /// An `extern` declaration was used without a registered host
    /// implementation.
    MissingExtern(String),
    UnknownDef(String),
    StepBudgetExhausted(u64),
    RecursionTooDeep(u64),
    /// Failure raised by a host bijection.
    Host(String),
    /// Broke an invariant the checker is supposed to guarantee; only
    /// reachable when running unchecked definitions.
    Internal(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::NoMatch { def, value } => {
                write!(f, "no branch of '{}' matches {}", def, value)
            }
            EvalError::AmbiguousMatch { def, value } => write!(
                f,
                "more than one branch of '{}' matches {}; the run is not invertible",
                def, value
            ),
            EvalError::ConsumedBinding { def, name } => {
                write!(f, "'{}' read after being consumed in '{}'", name, def)
            }
            EvalError::MissingExtern(name) => {
                write!(f, "extern '{}' has no registered implementation", name)
            }
            EvalError::UnknownDef(name) => write!(f, "unknown definition '{}'", name),
            EvalError::StepBudgetExhausted(n) => {
                write!(f, "step budget of {} exhausted", n)
            }
            EvalError::RecursionTooDeep(n) => {
                write!(f, "recursion exceeded {} nested calls", n)
            }
            EvalError::Host(msg) => write!(f, "{}", msg),
            EvalError::Internal(msg) => write!(f, "internal interpreter fault: {}", msg),
        }
    }
}

impl std::error::Error for EvalError {}

type ValueFn = dyn Fn(Value) -> Result<Value, EvalError> + Send + Sync;

/// A host bijection: two inverse closures over values.
pub struct Bijection {
    name: String,
    fwd: Box<ValueFn>,
    bwd: Box<ValueFn>,
}

impl Bijection {
    pub fn new(
        name: &str,
        fwd: impl Fn(Value) -> Result<Value, EvalError> + Send + Sync + 'static,
        bwd: impl Fn(Value) -> Result<Value, EvalError> + Send + Sync + 'static,
    ) -> Bijection {
        Bijection { name: name.to_string(), fwd: Box::new(fwd), bwd: Box::new(bwd) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, v: Value) -> Result<Value, EvalError> {
        (self.fwd)(v)
    }

    pub fn unapply(&self, v: Value) -> Result<Value, EvalError> {
        (self.bwd)(v)
    }
}

impl fmt::Debug for Bijection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bijection({})", self.name)
    }
}

type FamilyFn = dyn Fn(&Value) -> Result<Flippable, EvalError> + Send + Sync;

/// Argument supplied to a parameterised definition.
#[derive(Clone)]
pub enum FlipArg {
    Plain(Flippable),
    /// Value-indexed family: called with the index to produce the
    /// bijection for that fibre.
    Family(Arc<FamilyFn>),
}

impl FlipArg {
    pub fn plain(f: Flippable) -> FlipArg {
        FlipArg::Plain(f)
    }

    pub fn family(
        f: impl Fn(&Value) -> Result<Flippable, EvalError> + Send + Sync + 'static,
    ) -> FlipArg {
        FlipArg::Family(Arc::new(f))
    }
}

impl fmt::Debug for FlipArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlipArg::Plain(g) => write!(f, "{:?}", g),
            FlipArg::Family(_) => write!(f, "<family>"),
        }
    }
}

/// A runnable bijection handle.
#[derive(Clone, Debug)]
pub enum Flippable {
    Host(Arc<Bijection>),
    Def { name: String, args: Vec<FlipArg> },
    Flipped(Box<Flippable>),
}

impl Flippable {
    pub fn host(b: Bijection) -> Flippable {
        Flippable::Host(Arc::new(b))
    }

    pub fn def(name: &str) -> Flippable {
        Flippable::Def { name: name.to_string(), args: Vec::new() }
    }

    pub fn def_with(name: &str, args: Vec<FlipArg>) -> Flippable {
        Flippable::Def { name: name.to_string(), args }
    }

    /// Flip with eager double-flip cancellation.
    pub fn flipped(self) -> Flippable {
        match self {
            Flippable::Flipped(inner) => *inner,
            other => Flippable::Flipped(Box::new(other)),
        }
    }
}

/// Branch-local environment: a slot per binding, emptied on consumption.
#[derive(Debug, Default)]
struct Env {
    slots: HashMap<String, Option<Value>>,
}

impl Env {
    fn bind(&mut self, name: &str, v: Value) {
        self.slots.insert(name.to_string(), Some(v));
    }

    fn consume(&mut self, name: &str, def: &str) -> Result<Value, EvalError> {
        match self.slots.get_mut(name) {
            Some(slot) => slot.take().ok_or_else(|| EvalError::ConsumedBinding {
                def: def.to_string(),
                name: name.to_string(),
            }),
            None => Err(EvalError::Internal(format!(
                "variable '{}' has no binding in '{}'",
                name, def
            ))),
        }
    }

    /// Non-consuming read, used for family indices.
    fn read(&self, name: &str, def: &str) -> Result<Value, EvalError> {
        match self.slots.get(name) {
            Some(Some(v)) => Ok(v.clone()),
            Some(None) => Err(EvalError::ConsumedBinding {
                def: def.to_string(),
                name: name.to_string(),
            }),
            None => Err(EvalError::Internal(format!(
                "variable '{}' has no binding in '{}'",
                name, def
            ))),
        }
    }
}

/// Does the value match the pattern's shape?
pub fn matches(pat: &Pattern, v: &Value) -> bool {
    match (pat, v) {
        (Pattern::Var(_), _) => true,
        (Pattern::Ctor(id, args), Value::Ctor(name, vals)) => {
            id.name == *name
                && args.len() == vals.len()
                && args.iter().zip(vals).all(|(p, w)| matches(p, w))
        }
        (Pattern::Pair(a, b), Value::Pair(x, y)) => matches(a, x) && matches(b, y),
        _ => false,
    }
}

/// Interpreter over a resolved program plus registered host bijections.
pub struct Interp<'p> {
    checked: &'p CheckedProgram,
    externs: HashMap<String, Arc<Bijection>>,
    step_budget: u64,
    recursion_limit: u64,
}

impl<'p> Interp<'p> {
    pub fn new(checked: &'p CheckedProgram) -> Interp<'p> {
        Interp {
            checked,
            externs: HashMap::new(),
            step_budget: DEFAULT_STEP_BUDGET,
            recursion_limit: DEFAULT_RECURSION_LIMIT,
        }
    }

    pub fn with_step_budget(mut self, budget: u64) -> Interp<'p> {
        self.step_budget = budget;
        self
    }

    pub fn with_recursion_limit(mut self, limit: u64) -> Interp<'p> {
        self.recursion_limit = limit;
        self
    }

    pub fn register_extern(&mut self, name: &str, b: Bijection) {
        self.externs.insert(name.to_string(), Arc::new(b));
    }

    pub fn apply(&self, f: &Flippable, v: Value) -> Result<Value, EvalError> {
        let mut budget = self.step_budget;
        self.run(f, v, true, &mut budget, self.recursion_limit)
    }

    pub fn unapply(&self, f: &Flippable, v: Value) -> Result<Value, EvalError> {
        let mut budget = self.step_budget;
        self.run(f, v, false, &mut budget, self.recursion_limit)
    }

    fn run(
        &self,
        f: &Flippable,
        v: Value,
        forward: bool,
        budget: &mut u64,
        depth: u64,
    ) -> Result<Value, EvalError> {
        match f {
            Flippable::Host(b) => {
                if forward {
                    b.apply(v)
                } else {
                    b.unapply(v)
                }
            }
            Flippable::Flipped(g) => self.run(g, v, !forward, budget, depth),
            Flippable::Def { name, args } => self.run_def(name, args, v, forward, budget, depth),
        }
    }

    fn run_def(
        &self,
        name: &str,
        args: &[FlipArg],
        v: Value,
        forward: bool,
        budget: &mut u64,
        depth: u64,
    ) -> Result<Value, EvalError> {
        if depth == 0 {
            return Err(EvalError::RecursionTooDeep(self.recursion_limit));
        }
        // Each nested call burns a native stack frame, so grow the stack
        // in segments instead of trusting whatever the thread was given.
        stacker::maybe_grow(128 * 1024, 2 * 1024 * 1024, || {
            self.run_def_inner(name, args, v, forward, budget, depth - 1)
        })
    }

    fn run_def_inner(
        &self,
        name: &str,
        args: &[FlipArg],
        v: Value,
        forward: bool,
        budget: &mut u64,
        depth: u64,
    ) -> Result<Value, EvalError> {
        self.spend(budget)?;
        let def: &FlipDef = self
            .checked
            .flip(name)
            .ok_or_else(|| EvalError::UnknownDef(name.to_string()))?;
        let checked = self
            .checked
            .def(name)
            .ok_or_else(|| EvalError::UnknownDef(name.to_string()))?;
        if def.params.len() != args.len() {
            return Err(EvalError::Internal(format!(
                "'{}' expects {} argument(s), got {}",
                name,
                def.params.len(),
                args.len()
            )));
        }

        // Select the unique branch whose entry pattern matches. The
        // ambiguity fault keeps unchecked programs honest: a double
        // match here means the run could not be inverted.
        let mut chosen = None;
        for (i, b) in def.branches.iter().enumerate() {
            if matches(entry_pattern(b, forward), &v) {
                if chosen.is_some() {
                    return Err(EvalError::AmbiguousMatch {
                        def: name.to_string(),
                        value: v.to_string(),
                    });
                }
                chosen = Some(i);
            }
        }
        let bi = chosen.ok_or_else(|| EvalError::NoMatch {
            def: name.to_string(),
            value: v.to_string(),
        })?;
        let branch = &def.branches[bi];
        let rbranch = &checked.branches[bi];

        let mut env = Env::default();
        bind_pattern(entry_pattern(branch, forward), v, &mut env, name)?;

        if forward {
            for (si, step) in branch.steps.iter().enumerate() {
                self.spend(budget)?;
                let flippable = self.resolve(&rbranch.fexprs[si], args, &env, name)?;
                let arg = construct_pattern(&step.out, &mut env, name)?;
                let result = self.run(&flippable, arg, true, budget, depth)?;
                if !matches(&step.into, &result) {
                    return Err(EvalError::NoMatch {
                        def: name.to_string(),
                        value: result.to_string(),
                    });
                }
                bind_pattern(&step.into, result, &mut env, name)?;
            }
            construct_pattern(&branch.rhs, &mut env, name)
        } else {
            for (si, step) in branch.steps.iter().enumerate().rev() {
                self.spend(budget)?;
                let flippable = self.resolve(&rbranch.fexprs[si], args, &env, name)?;
                let arg = construct_pattern(&step.into, &mut env, name)?;
                let result = self.run(&flippable, arg, false, budget, depth)?;
                if !matches(&step.out, &result) {
                    return Err(EvalError::NoMatch {
                        def: name.to_string(),
                        value: result.to_string(),
                    });
                }
                bind_pattern(&step.out, result, &mut env, name)?;
            }
            construct_pattern(&branch.lhs, &mut env, name)
        }
    }

    fn spend(&self, budget: &mut u64) -> Result<(), EvalError> {
        if *budget == 0 {
            return Err(EvalError::StepBudgetExhausted(self.step_budget));
        }
        *budget -= 1;
        Ok(())
    }

    /// Evaluates a resolved flippable expression to a runnable handle.
    fn resolve(
        &self,
        rf: &RFexpr,
        args: &[FlipArg],
        env: &Env,
        def: &str,
    ) -> Result<Flippable, EvalError> {
        match self.resolve_inner(rf, args, env, def)? {
            Resolved::Full(f) => Ok(f),
            Resolved::Family(_) => Err(EvalError::Internal(format!(
                "family used without an index in '{}'",
                def
            ))),
            Resolved::Partial { name, got, want, .. } => Err(EvalError::Internal(format!(
                "'{}' applied to {} of {} argument(s) in '{}'",
                name, got, want, def
            ))),
        }
    }

    fn resolve_inner(
        &self,
        rf: &RFexpr,
        args: &[FlipArg],
        env: &Env,
        def: &str,
    ) -> Result<Resolved, EvalError> {
        match rf {
            RFexpr::Def(n) => {
                let callee = self
                    .checked
                    .flip(n)
                    .ok_or_else(|| EvalError::UnknownDef(n.to_string()))?;
                if callee.params.is_empty() {
                    Ok(Resolved::Full(Flippable::def(n)))
                } else {
                    Ok(Resolved::Partial {
                        name: n.to_string(),
                        got: 0,
                        want: callee.params.len(),
                        collected: Vec::new(),
                    })
                }
            }
            RFexpr::Extern(n) => match self.externs.get(n) {
                Some(b) => Ok(Resolved::Full(Flippable::Host(b.clone()))),
                None => Err(EvalError::MissingExtern(n.to_string())),
            },
            RFexpr::Param(i) => match &args[*i] {
                FlipArg::Plain(f) => Ok(Resolved::Full(f.clone())),
                FlipArg::Family(fam) => Ok(Resolved::Family(fam.clone())),
            },
            RFexpr::Var(name) => Err(EvalError::Internal(format!(
                "value variable '{}' used as a flippable in '{}'",
                name, def
            ))),
            RFexpr::Flip(inner) => match self.resolve_inner(inner, args, env, def)? {
                Resolved::Full(f) => Ok(Resolved::Full(f.flipped())),
                _ => Err(EvalError::Internal(format!(
                    "flip of a partial application in '{}'",
                    def
                ))),
            },
            RFexpr::App(head, arg) => {
                let h = self.resolve_inner(head, args, env, def)?;
                match h {
                    Resolved::Family(fam) => {
                        let index = match arg.as_ref() {
                            RFexpr::Var(name) => env.read(name, def)?,
                            _ => {
                                return Err(EvalError::Internal(format!(
                                    "family index must be a variable in '{}'",
                                    def
                                )))
                            }
                        };
                        Ok(Resolved::Full(fam(&index)?))
                    }
                    Resolved::Partial { name, got, want, mut collected } => {
                        let supplied = match arg.as_ref() {
                            RFexpr::Param(i) => args[*i].clone(),
                            other => match self.resolve_inner(other, args, env, def)? {
                                Resolved::Full(f) => FlipArg::Plain(f),
                                _ => {
                                    return Err(EvalError::Internal(format!(
                                        "unsaturated argument in '{}'",
                                        def
                                    )))
                                }
                            },
                        };
                        collected.push(supplied);
                        if got + 1 == want {
                            Ok(Resolved::Full(Flippable::def_with(&name, collected)))
                        } else {
                            Ok(Resolved::Partial { name, got: got + 1, want, collected })
                        }
                    }
                    Resolved::Full(_) => Err(EvalError::Internal(format!(
                        "argument applied to a saturated flippable in '{}'",
                        def
                    ))),
                }
            }
        }
    }
}

enum Resolved {
    Full(Flippable),
    Family(Arc<FamilyFn>),
    Partial { name: String, got: usize, want: usize, collected: Vec<FlipArg> },
}

fn entry_pattern(b: &Branch, forward: bool) -> &Pattern {
    if forward {
        &b.lhs
    } else {
        &b.rhs
    }
}

/// Destructures `v` along `pat`, moving the pieces into the environment.
/// The caller has already verified the match.
fn bind_pattern(pat: &Pattern, v: Value, env: &mut Env, def: &str) -> Result<(), EvalError> {
    match (pat, v) {
        (Pattern::Var(id), v) => {
            env.bind(&id.name, v);
            Ok(())
        }
        (Pattern::Ctor(id, pats), Value::Ctor(name, vals)) => {
            if id.name != name || pats.len() != vals.len() {
                return Err(EvalError::Internal(format!(
                    "pattern/value mismatch on '{}' in '{}'",
                    name, def
                )));
            }
            for (p, w) in pats.iter().zip(vals) {
                bind_pattern(p, w, env, def)?;
            }
            Ok(())
        }
        (Pattern::Pair(a, b), Value::Pair(x, y)) => {
            bind_pattern(a, *x, env, def)?;
            bind_pattern(b, *y, env, def)
        }
        (_, v) => Err(EvalError::Internal(format!(
            "pattern/value shape mismatch on {} in '{}'",
            v, def
        ))),
    }
}

/// Builds a value along `pat`, consuming environment bindings.
fn construct_pattern(pat: &Pattern, env: &mut Env, def: &str) -> Result<Value, EvalError> {
    match pat {
        Pattern::Var(id) => env.consume(&id.name, def),
        Pattern::Ctor(id, pats) => {
            let mut vals = Vec::with_capacity(pats.len());
            for p in pats {
                vals.push(construct_pattern(p, env, def)?);
            }
            Ok(Value::Ctor(id.name.clone(), vals))
        }
        Pattern::Pair(a, b) => {
            let x = construct_pattern(a, env, def)?;
            let y = construct_pattern(b, env, def)?;
            Ok(Value::pair(x, y))
        }
    }
}
