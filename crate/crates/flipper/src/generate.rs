//! Seeded random value generation.
//!
//! Round-trip testing wants arbitrary well-typed values: run a definition
//! forward, run it back, demand the input returns. [`ValueGen`] builds
//! values for any type in a program, steering constructor choice by a
//! precomputed minimum construction depth so recursive types terminate.
//! Type variables are filled from a small palette of closed types; for a
//! consistent instantiation across a whole signature, substitute first
//! with [`choose_instantiation`](ValueGen::choose_instantiation) and
//! [`substitute`].

use crate::ans;
use crate::ast::{CtorDecl, DataDecl, Program, TypeExpr};
use crate::value::Value;
use rand::Rng;
use std::collections::{BTreeSet, HashMap};

const UNBUILDABLE: usize = usize::MAX;

pub struct ValueGen<'p> {
    datas: HashMap<&'p str, &'p DataDecl>,
    min_depth: HashMap<&'p str, usize>,
    palette: Vec<TypeExpr>,
}

impl<'p> ValueGen<'p> {
    pub fn new(prog: &'p Program) -> ValueGen<'p> {
        let datas: HashMap<&str, &DataDecl> =
            prog.data_decls().map(|d| (d.name.name.as_str(), d)).collect();
        let mut min_depth: HashMap<&str, usize> =
            datas.keys().map(|&n| (n, UNBUILDABLE)).collect();
        loop {
            let mut changed = false;
            for (&name, &decl) in &datas {
                let best = decl
                    .ctors
                    .iter()
                    .map(|c| ctor_cost(c, &min_depth))
                    .min()
                    .unwrap_or(UNBUILDABLE);
                if best < min_depth[name] {
                    min_depth.insert(name, best);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut palette = vec![
            TypeExpr::Int,
            TypeExpr::pair(TypeExpr::Int, TypeExpr::Int),
        ];
        if let Some(e) = datas.get("Either") {
            if e.params.len() == 2 {
                palette.push(TypeExpr::Named(
                    e.name.clone(),
                    vec![TypeExpr::Int, TypeExpr::Int],
                ));
            }
        }
        ValueGen { datas, min_depth, palette }
    }

    /// Builds a value of `ty` within `depth` levels of nesting, or `None`
    /// when the budget cannot fit one (or the type has no finite values).
    pub fn value(&self, ty: &TypeExpr, depth: usize, rng: &mut impl Rng) -> Option<Value> {
        match ty {
            TypeExpr::Int => Some(Value::Int(rng.gen_range(-1000..=1000))),
            TypeExpr::Msg => Some(Value::Msg(ans::arbitrary_message(rng, 2))),
            TypeExpr::Var(_) => {
                let t = self.palette[rng.gen_range(0..self.palette.len())].clone();
                self.value(&t, depth, rng)
            }
            TypeExpr::Pair(a, b) => {
                if depth == 0 {
                    return None;
                }
                let va = self.value(a, depth - 1, rng)?;
                let vb = self.value(b, depth - 1, rng)?;
                Some(Value::pair(va, vb))
            }
            TypeExpr::Named(name, args) => {
                if depth == 0 {
                    return None;
                }
                let decl = self.datas.get(name.name.as_str())?;
                let subst: HashMap<String, TypeExpr> = decl
                    .params
                    .iter()
                    .map(|p| p.name.clone())
                    .zip(args.iter().cloned())
                    .collect();
                let viable: Vec<&CtorDecl> = decl
                    .ctors
                    .iter()
                    .filter(|c| {
                        c.args.iter().all(|a| self.type_cost(&substitute(a, &subst)) < depth)
                    })
                    .collect();
                if viable.is_empty() {
                    return None;
                }
                let c = viable[rng.gen_range(0..viable.len())];
                let mut vals = Vec::with_capacity(c.args.len());
                for a in &c.args {
                    let at = substitute(a, &subst);
                    vals.push(self.value(&at, depth - 1, rng)?);
                }
                Some(Value::Ctor(c.name.name.clone(), vals))
            }
        }
    }

    /// Picks one closed palette type per variable. `BTreeSet` keeps the
    /// draw order independent of hash seeding, so a fixed rng seed gives
    /// the same instantiation everywhere.
    pub fn choose_instantiation(
        &self,
        vars: &BTreeSet<String>,
        rng: &mut impl Rng,
    ) -> HashMap<String, TypeExpr> {
        vars.iter()
            .map(|v| {
                let t = self.palette[rng.gen_range(0..self.palette.len())].clone();
                (v.clone(), t)
            })
            .collect()
    }

    fn type_cost(&self, ty: &TypeExpr) -> usize {
        match ty {
            TypeExpr::Int | TypeExpr::Msg => 1,
            TypeExpr::Var(_) => 2,
            TypeExpr::Pair(a, b) => {
                1_usize.saturating_add(self.type_cost(a).max(self.type_cost(b)))
            }
            TypeExpr::Named(name, _) => self
                .min_depth
                .get(name.name.as_str())
                .copied()
                .unwrap_or(UNBUILDABLE),
        }
    }
}

fn ctor_cost(c: &CtorDecl, min_depth: &HashMap<&str, usize>) -> usize {
    let worst = c
        .args
        .iter()
        .map(|a| static_cost(a, min_depth))
        .max()
        .unwrap_or(0);
    1_usize.saturating_add(worst)
}

fn static_cost(ty: &TypeExpr, min_depth: &HashMap<&str, usize>) -> usize {
    match ty {
        TypeExpr::Int | TypeExpr::Msg => 1,
        TypeExpr::Var(_) => 2,
        TypeExpr::Pair(a, b) => {
            1_usize.saturating_add(static_cost(a, min_depth).max(static_cost(b, min_depth)))
        }
        TypeExpr::Named(name, _) => {
            min_depth.get(name.name.as_str()).copied().unwrap_or(UNBUILDABLE)
        }
    }
}

/// Collects the type variables of `ty`, in name order.
pub fn free_type_vars(ty: &TypeExpr, out: &mut BTreeSet<String>) {
    match ty {
        TypeExpr::Var(v) => {
            out.insert(v.name.clone());
        }
        TypeExpr::Named(_, args) => {
            for a in args {
                free_type_vars(a, out);
            }
        }
        TypeExpr::Pair(a, b) => {
            free_type_vars(a, out);
            free_type_vars(b, out);
        }
        TypeExpr::Int | TypeExpr::Msg => {}
    }
}

/// Replaces type variables by their mapped types; unmapped variables stay.
pub fn substitute(ty: &TypeExpr, map: &HashMap<String, TypeExpr>) -> TypeExpr {
    match ty {
        TypeExpr::Var(v) => map.get(&v.name).cloned().unwrap_or_else(|| ty.clone()),
        TypeExpr::Named(n, args) => {
            TypeExpr::Named(n.clone(), args.iter().map(|a| substitute(a, map)).collect())
        }
        TypeExpr::Pair(a, b) => TypeExpr::pair(substitute(a, map), substitute(b, map)),
        TypeExpr::Int | TypeExpr::Msg => ty.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn list_prog() -> Program {
        parse_program("data List a = Nil | Cons a (List a)\n").unwrap()
    }

    fn list_int(prog: &Program) -> TypeExpr {
        let d = prog.data_decls().next().unwrap();
        TypeExpr::Named(d.name.clone(), vec![TypeExpr::Int])
    }

    fn list_len(v: &Value) -> usize {
        match v {
            Value::Ctor(n, args) if n == "Cons" => 1 + list_len(&args[1]),
            _ => 0,
        }
    }

    #[test]
    fn same_seed_same_values() {
        let prog = list_prog();
        let gen = ValueGen::new(&prog);
        let ty = list_int(&prog);
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            assert_eq!(gen.value(&ty, 6, &mut a), gen.value(&ty, 6, &mut b));
        }
    }

    #[test]
    fn depth_budget_bounds_list_length() {
        let prog = list_prog();
        let gen = ValueGen::new(&prog);
        let ty = list_int(&prog);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let v = gen.value(&ty, 6, &mut rng).expect("depth 6 fits a list");
            assert!(list_len(&v) <= 6);
        }
        let v = gen.value(&ty, 1, &mut rng).expect("depth 1 fits Nil");
        assert_eq!(v, Value::nullary("Nil"));
    }

    #[test]
    fn type_variables_draw_from_the_palette() {
        let prog = parse_program(
            "data Either a b = Left a | Right b\n\
             data Wrap a = MkWrap a\n",
        )
        .unwrap();
        let gen = ValueGen::new(&prog);
        let var = TypeExpr::Var(crate::ast::Ident::new("a", Default::default()));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen_int = false;
        let mut seen_pair = false;
        let mut seen_either = false;
        for _ in 0..100 {
            match gen.value(&var, 6, &mut rng).unwrap() {
                Value::Int(_) => seen_int = true,
                Value::Pair(_, _) => seen_pair = true,
                Value::Ctor(_, _) => seen_either = true,
                Value::Msg(_) => {}
            }
        }
        assert!(seen_int && seen_pair && seen_either);
    }

    #[test]
    fn bottomless_types_give_none() {
        let prog = parse_program("data Inf = MkInf Inf\n").unwrap();
        let gen = ValueGen::new(&prog);
        let d = prog.data_decls().next().unwrap();
        let ty = TypeExpr::Named(d.name.clone(), vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(gen.value(&ty, 50, &mut rng), None);
    }

    #[test]
    fn instantiation_is_consistent_per_variable() {
        let prog = list_prog();
        let gen = ValueGen::new(&prog);
        let mut vars = BTreeSet::new();
        vars.insert("a".to_string());
        vars.insert("b".to_string());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inst = gen.choose_instantiation(&vars, &mut rng);
        assert_eq!(inst.len(), 2);
        let src = parse_program("data P a b = MkP a b a\n").unwrap();
        let d = src.data_decls().next().unwrap();
        let open = d.ctors[0].args[0].clone();
        let closed = substitute(&open, &inst);
        assert_eq!(closed, inst["a"]);
    }
}
