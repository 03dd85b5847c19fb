//! Built-in diagnostics: `flipkit selftest` exercises every layer of the
//! toolkit against itself and prints one line per suite.
//!
//! With `--mutate` it also plants a classic bug, a constructor swap that
//! makes two branches collide, and demonstrates the toolkit failing
//! closed: the checker rejects the definition, and running it anyway
//! (checks off) faults instead of guessing a branch.

use flipper::ans::{arbitrary_message, CategoricalTable, Message};
use flipper::ast::{Decl, FlipDef, Pattern, Program, TypeExpr};
use flipper::bbans::{self, LatentModel};
use flipper::checker::{check_program, resolve_program, CheckedProgram};
use flipper::generate::{free_type_vars, substitute, ValueGen};
use flipper::interp::{Bijection, EvalError, FlipArg, Flippable, Interp};
use flipper::parser::parse_program;
use flipper::printer::render_program;
use flipper::reverser::{reverse_def, REVERSED_SUFFIX};
use flipper::stdlib::stdlib_program;
use flipper::value::Value;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::sync::Arc;

pub struct Options {
    pub cases: u64,
    pub seed: u64,
    pub mutate: bool,
}

type SuiteResult = Result<String, String>;

pub fn run(opts: &Options) -> bool {
    let mut suites: Vec<(&str, SuiteResult)> = vec![
        ("render/parse round trip", render_parse_round_trip()),
        ("stdlib round trips", stdlib_round_trips(opts)),
        ("reversal agreement", reversal_agreement(opts)),
        ("entropy coder", entropy_coder(opts)),
        ("bits-back compressor", bits_back(opts)),
        ("host/surface agreement", host_dsl_agreement(opts)),
    ];
    if opts.mutate {
        suites.push(("mutation fails closed", mutant_fails_closed()));
    }
    let mut passed = 0;
    for (name, result) in &suites {
        match result {
            Ok(detail) => {
                passed += 1;
                println!("  {:<26} pass ({})", name, detail);
            }
            Err(detail) => println!("  {:<26} FAIL: {}", name, detail),
        }
    }
    println!("selftest: {}/{} suites passed", passed, suites.len());
    passed == suites.len()
}

fn checked_stdlib() -> Result<CheckedProgram, String> {
    check_program(&stdlib_program()).map_err(|errs| {
        format!("stdlib does not check: {}", errs[0])
    })
}

fn render_parse_round_trip() -> SuiteResult {
    let prog = stdlib_program();
    let rendered = render_program(&prog);
    let back = parse_program(&rendered)
        .map_err(|e| format!("rendered stdlib does not parse: {}", e))?;
    if back.stripped() != prog.stripped() {
        return Err("render/parse changed the tree".to_string());
    }
    Ok(format!("{} declarations", prog.decls.len()))
}

/// One entry per stdlib definition: how to build the runnable flippable
/// and how to make values on each side.
struct DefCase {
    name: &'static str,
    flippable: Flippable,
    domain: TypeGen,
    codomain: TypeGen,
}

enum TypeGen {
    /// Generate from the definition's declared (instantiated) type.
    Declared,
    /// A fixed closed type.
    Fixed(TypeExpr),
    /// A message together with a demo-model symbol.
    MsgSymbol,
    /// A bare message.
    MsgOnly,
}

fn add_family() -> FlipArg {
    FlipArg::family(|idx| {
        let i = match idx {
            Value::Int(i) => *i,
            other => {
                return Err(EvalError::Host(format!("index {} is not an integer", other)))
            }
        };
        Ok(Flippable::host(Bijection::new(
            "add",
            move |v| match v {
                Value::Int(x) => Ok(Value::Int(x + i)),
                other => Err(EvalError::Host(format!("{} is not an integer", other))),
            },
            move |v| match v {
                Value::Int(x) => Ok(Value::Int(x - i)),
                other => Err(EvalError::Host(format!("{} is not an integer", other))),
            },
        )))
    })
}

fn int_pair() -> TypeExpr {
    TypeExpr::pair(TypeExpr::Int, TypeExpr::Int)
}

fn def_cases(model: &Arc<LatentModel>) -> Vec<DefCase> {
    let pair_swap = || Flippable::def("pairSwp");
    vec![
        DefCase {
            name: "idF",
            flippable: Flippable::def("idF"),
            domain: TypeGen::Declared,
            codomain: TypeGen::Declared,
        },
        DefCase {
            name: "pairSwp",
            flippable: Flippable::def("pairSwp"),
            domain: TypeGen::Declared,
            codomain: TypeGen::Declared,
        },
        DefCase {
            name: "sumSwp",
            flippable: Flippable::def("sumSwp"),
            domain: TypeGen::Declared,
            codomain: TypeGen::Declared,
        },
        DefCase {
            name: "assocP",
            flippable: Flippable::def("assocP"),
            domain: TypeGen::Declared,
            codomain: TypeGen::Declared,
        },
        DefCase {
            name: "compose",
            flippable: Flippable::def_with(
                "compose",
                vec![FlipArg::plain(pair_swap()), FlipArg::plain(pair_swap())],
            ),
            domain: TypeGen::Fixed(int_pair()),
            codomain: TypeGen::Fixed(int_pair()),
        },
        DefCase {
            name: "uncurryF",
            flippable: Flippable::def_with("uncurryF", vec![add_family()]),
            domain: TypeGen::Fixed(int_pair()),
            codomain: TypeGen::Fixed(int_pair()),
        },
        DefCase {
            name: "bbAns",
            flippable: bbans::bb_ans_flippable(model),
            domain: TypeGen::MsgSymbol,
            codomain: TypeGen::MsgOnly,
        },
    ]
}

fn gen_side(
    kind: &TypeGen,
    declared: &TypeExpr,
    gen: &ValueGen,
    model: &LatentModel,
    rng: &mut ChaCha8Rng,
) -> Option<Value> {
    match kind {
        TypeGen::Declared => {
            let mut vars = BTreeSet::new();
            free_type_vars(declared, &mut vars);
            let inst = gen.choose_instantiation(&vars, rng);
            gen.value(&substitute(declared, &inst), 6, rng)
        }
        TypeGen::Fixed(t) => gen.value(t, 6, rng),
        TypeGen::MsgSymbol => Some(Value::pair(
            Value::Msg(arbitrary_message(rng, 3)),
            Value::Int(rng.gen_range(0..model.num_symbols()) as i64),
        )),
        TypeGen::MsgOnly => Some(Value::Msg(arbitrary_message(rng, 3))),
    }
}

fn stdlib_round_trips(opts: &Options) -> SuiteResult {
    let checked = checked_stdlib()?;
    let interp = Interp::new(&checked);
    let model = Arc::new(LatentModel::demo());
    let gen = ValueGen::new(&checked.program);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut total = 0u64;
    for case in def_cases(&model) {
        let def = checked
            .flip(case.name)
            .ok_or_else(|| format!("stdlib has no '{}'", case.name))?;
        for _ in 0..opts.cases {
            let Some(v) = gen_side(&case.domain, &def.domain, &gen, &model, &mut rng) else {
                continue;
            };
            let w = interp
                .apply(&case.flippable, v.clone())
                .map_err(|e| format!("{} forward: {}", case.name, e))?;
            let back = interp
                .unapply(&case.flippable, w)
                .map_err(|e| format!("{} backward: {}", case.name, e))?;
            if back != v {
                return Err(format!("{}: backward(forward({})) = {}", case.name, v, back));
            }
            let Some(w) = gen_side(&case.codomain, &def.codomain, &gen, &model, &mut rng)
            else {
                continue;
            };
            let v = interp
                .unapply(&case.flippable, w.clone())
                .map_err(|e| format!("{} backward: {}", case.name, e))?;
            let again = interp
                .apply(&case.flippable, v)
                .map_err(|e| format!("{} forward: {}", case.name, e))?;
            if again != w {
                return Err(format!("{}: forward(backward({})) = {}", case.name, w, again));
            }
            total += 2;
        }
    }
    Ok(format!("{} cases", total))
}

/// Stdlib program extended with the reversal of every definition.
fn with_reversals() -> Program {
    let mut prog = stdlib_program();
    let reversed: Vec<FlipDef> = prog.flip_defs().map(reverse_def).collect();
    for d in reversed {
        prog.decls.push(Decl::Flip(d));
    }
    prog
}

fn reversal_agreement(opts: &Options) -> SuiteResult {
    let prog = with_reversals();
    let checked = check_program(&prog)
        .map_err(|errs| format!("reversed stdlib does not check: {}", errs[0]))?;
    for d in stdlib_program().flip_defs() {
        if reverse_def(&reverse_def(d)) != *d {
            return Err(format!("reverse(reverse({})) is not the original", d.name.name));
        }
    }
    let interp = Interp::new(&checked);
    let model = Arc::new(LatentModel::demo());
    let gen = ValueGen::new(&checked.program);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let mut total = 0u64;
    for case in def_cases(&model) {
        let def = checked
            .flip(case.name)
            .ok_or_else(|| format!("stdlib has no '{}'", case.name))?;
        let rev_name = format!("{}{}", case.name, REVERSED_SUFFIX);
        let reversed = match &case.flippable {
            Flippable::Def { args, .. } => Flippable::def_with(&rev_name, args.clone()),
            other => return Err(format!("unexpected flippable shape {:?}", other)),
        };
        for _ in 0..opts.cases {
            let Some(w) = gen_side(&case.codomain, &def.codomain, &gen, &model, &mut rng)
            else {
                continue;
            };
            let via_reverse = interp
                .apply(&reversed, w.clone())
                .map_err(|e| format!("{} forward: {}", rev_name, e))?;
            let via_backward = interp
                .unapply(&case.flippable, w)
                .map_err(|e| format!("{} backward: {}", case.name, e))?;
            if via_reverse != via_backward {
                return Err(format!(
                    "{}: reversed gives {}, backward gives {}",
                    case.name, via_reverse, via_backward
                ));
            }
            total += 1;
        }
    }
    Ok(format!("{} cases", total))
}

fn random_table(rng: &mut ChaCha8Rng, precision: u32) -> CategoricalTable {
    let total = 1u32 << precision;
    let n = rng.gen_range(2..=total.min(9)) as usize;
    let mut freqs = vec![1u32; n];
    let mut left = total - n as u32;
    for f in freqs.iter_mut().take(n - 1) {
        let extra = rng.gen_range(0..=left);
        *f += extra;
        left -= extra;
    }
    freqs[n - 1] += left;
    CategoricalTable::new(precision, &freqs).expect("constructed to sum correctly")
}

fn entropy_coder(opts: &Options) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xa5);
    let mut total = 0u64;
    for precision in [1u32, 12, 16] {
        for _ in 0..opts.cases / 2 {
            let table = random_table(&mut rng, precision);
            let start = arbitrary_message(&mut rng, 4);
            let k = rng.gen_range(1..=12);
            let symbols: Vec<usize> =
                (0..k).map(|_| rng.gen_range(0..table.num_symbols())).collect();
            let mut m = start.clone();
            for &s in &symbols {
                m = table.encode(m, s);
            }
            let bytes = m.to_bytes();
            let mut m = Message::from_bytes(&bytes)
                .map_err(|e| format!("serialization broke: {}", e))?;
            for &s in symbols.iter().rev() {
                let (got, rest) = table.decode(m);
                if got != s {
                    return Err(format!("decoded {} where {} was encoded", got, s));
                }
                m = rest;
            }
            if m != start {
                return Err("message not restored after decoding".to_string());
            }
            total += 1;
        }
    }
    Ok(format!("{} sequences", total))
}

fn bits_back(opts: &Options) -> SuiteResult {
    let model = LatentModel::demo();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xbb);
    for n in [0usize, 1, 63, 2000] {
        let xs: Vec<usize> =
            (0..n).map(|_| sample_marginal(&model, &mut rng)).collect();
        let enc = bbans::encode_sequence(&model, Message::empty(), &xs)
            .map_err(|e| e.to_string())?;
        let (back, rest) = bbans::decode_sequence(&model, enc.clone(), n);
        if back != xs || rest != Message::empty() {
            return Err(format!("round trip failed at n = {}", n));
        }
        if n >= 2000 {
            let rate = (enc.bits() as f64 - Message::empty().bits() as f64) / n as f64;
            let predicted = bbans::negative_elbo(&model, &xs);
            if (rate - predicted).abs() > 0.1 {
                return Err(format!(
                    "rate {:.4} bits/symbol, predicted {:.4}",
                    rate, predicted
                ));
            }
        }
    }
    Ok("4 sequences".to_string())
}

/// Draws one symbol from the model's true marginal.
fn sample_marginal(model: &LatentModel, rng: &mut ChaCha8Rng) -> usize {
    let scale = 1u64 << model.precision();
    let total = scale * scale * model.num_latents() as u64;
    let mut ticket = rng.gen_range(0..total);
    for x in 0..model.num_symbols() {
        let mass: u64 = (0..model.num_latents())
            .map(|z| model.prior().freq(z) as u64 * model.likelihood(z).freq(x) as u64)
            .sum();
        if ticket < mass {
            return x;
        }
        ticket -= mass;
    }
    model.num_symbols() - 1
}

fn host_dsl_agreement(opts: &Options) -> SuiteResult {
    let checked = checked_stdlib()?;
    let interp = Interp::new(&checked);
    let model = Arc::new(LatentModel::demo());
    let f = bbans::bb_ans_flippable(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xd5);
    let cases = opts.cases.max(50);
    for _ in 0..cases {
        let msg = arbitrary_message(&mut rng, 3);
        let x = rng.gen_range(0..model.num_symbols());
        let host = bbans::bb_encode_symbol(&model, msg.clone(), x).map_err(|e| e.to_string())?;
        let dsl = interp
            .apply(&f, Value::pair(Value::Msg(msg), Value::Int(x as i64)))
            .map_err(|e| e.to_string())?;
        if dsl != Value::Msg(host.clone()) {
            return Err("surface and host encoders disagree".to_string());
        }
        let (hx, hm) = bbans::bb_decode_symbol(&model, host.clone());
        let back = interp.unapply(&f, Value::Msg(host)).map_err(|e| e.to_string())?;
        if back != Value::pair(Value::Msg(hm), Value::Int(hx as i64)) {
            return Err("surface and host decoders disagree".to_string());
        }
    }
    Ok(format!("{} cases", cases))
}

/// Swaps a constructor in the second branch of a sum swap so both
/// branches emit `Right`. The program stops denoting a bijection;
/// everything safe about the toolkit should now trip. The definition is
/// a monomorphic copy of sumSwp: the polymorphic one would turn the same
/// swap into a mere type error, which is a less interesting failure.
fn mutant_fails_closed() -> SuiteResult {
    let mut prog = flipper::stdlib::load_program(
        "flip swpI : Either Int Int <-> Either Int Int = {\n\
        \x20 (Left x) <-> (Right x);\n\
        \x20 (Right y) <-> (Left y)\n\
        }\n",
        true,
    )
    .expect("mutation host parses");
    let mut mutated = false;
    for d in &mut prog.decls {
        if let Decl::Flip(f) = d {
            if f.name.name == "swpI" {
                if let Pattern::Ctor(id, _) = &mut f.branches[1].rhs {
                    id.name = "Right".to_string();
                    mutated = true;
                }
            }
        }
    }
    if !mutated {
        return Err("could not plant the mutation".to_string());
    }
    println!("  planted: swpI branch 2 now reads (Right y) <-> (Right y)");

    let errors = match check_program(&prog) {
        Ok(_) => return Err("checker accepted the mutant".to_string()),
        Err(errs) => errs,
    };
    for e in &errors {
        println!("    checker: {}", e);
    }

    let resolved = resolve_program(&prog)
        .map_err(|errs| format!("mutant no longer resolves: {}", errs[0]))?;
    let interp = Interp::new(&resolved);
    let f = Flippable::def("swpI");
    let fwd = interp
        .apply(&f, Value::ctor("Left", vec![Value::Int(5)]))
        .map_err(|e| format!("mutant forward should still run: {}", e))?;
    println!("    running unchecked: forward (Left 5) -> {}", fwd);

    match interp.unapply(&f, Value::ctor("Right", vec![Value::Int(5)])) {
        Err(EvalError::AmbiguousMatch { value, .. }) => {
            println!("    running unchecked: backward (Right 5) -> fault, ambiguous on {}", value);
        }
        other => return Err(format!("expected an ambiguity fault, got {:?}", other)),
    }
    match interp.unapply(&f, Value::ctor("Left", vec![Value::Int(5)])) {
        Err(EvalError::NoMatch { value, .. }) => {
            println!("    running unchecked: backward (Left 5) -> fault, no branch for {}", value);
        }
        other => return Err(format!("expected a no-match fault, got {:?}", other)),
    }
    Ok(format!("{} check errors, runtime faults instead of guesses", errors.len()))
}
