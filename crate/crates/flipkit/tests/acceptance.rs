//! Acceptance gate. Eight criteria, each a test that prints exactly one
//! pass/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//! Tolerances and budgets are pinned here, not tuned at run time.

use flipper::ans::{arbitrary_message, CategoricalTable, Message};
use flipper::ast::{Decl, FlipDef, Program, TypeExpr};
use flipper::bbans::{self, LatentModel};
use flipper::checker::{check_program, CheckErrorKind, ALL_ERROR_KINDS};
use flipper::generate::{free_type_vars, substitute, ValueGen};
use flipper::interp::{Bijection, EvalError, FlipArg, Flippable, Interp};
use flipper::parser::parse_program;
use flipper::reverser::{reverse_def, REVERSED_SUFFIX};
use flipper::stdlib::stdlib_program;
use flipper::value::Value;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

const CASES_PER_DEF: usize = 1000;
const VALUE_DEPTH: usize = 6;
const SEED: u64 = 20260822;

fn gate(criterion: u32, name: &str, budget: Duration, body: impl FnOnce() -> Result<String, String>) {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    match outcome {
        Ok(detail) => {
            println!(
                "criterion {}: {} ... pass ({}, {} ms)",
                criterion,
                name,
                detail,
                elapsed.as_millis()
            );
            assert!(
                elapsed <= budget,
                "criterion {} overran its {} s budget: took {} ms",
                criterion,
                budget.as_secs(),
                elapsed.as_millis()
            );
        }
        Err(msg) => {
            println!("criterion {}: {} ... FAIL", criterion, name);
            panic!("criterion {} ({}): {}", criterion, name, msg);
        }
    }
}

/// How to build values for one stdlib definition under test.
struct DefCase {
    name: &'static str,
    flippable: Flippable,
    domain: Gen,
    codomain: Gen,
}

enum Gen {
    Declared,
    Fixed(TypeExpr),
    MsgSymbol,
    MsgOnly,
}

fn int_pair() -> TypeExpr {
    TypeExpr::pair(TypeExpr::Int, TypeExpr::Int)
}

fn add_family() -> FlipArg {
    FlipArg::family(|idx| {
        let i = match idx {
            Value::Int(i) => *i,
            other => return Err(EvalError::Host(format!("bad index {}", other))),
        };
        Ok(Flippable::host(Bijection::new(
            "add",
            move |v| match v {
                Value::Int(x) => Ok(Value::Int(x + i)),
                other => Err(EvalError::Host(format!("bad value {}", other))),
            },
            move |v| match v {
                Value::Int(x) => Ok(Value::Int(x - i)),
                other => Err(EvalError::Host(format!("bad value {}", other))),
            },
        )))
    })
}

fn def_cases(model: &Arc<LatentModel>) -> Vec<DefCase> {
    vec![
        DefCase {
            name: "idF",
            flippable: Flippable::def("idF"),
            domain: Gen::Declared,
            codomain: Gen::Declared,
        },
        DefCase {
            name: "pairSwp",
            flippable: Flippable::def("pairSwp"),
            domain: Gen::Declared,
            codomain: Gen::Declared,
        },
        DefCase {
            name: "sumSwp",
            flippable: Flippable::def("sumSwp"),
            domain: Gen::Declared,
            codomain: Gen::Declared,
        },
        DefCase {
            name: "assocP",
            flippable: Flippable::def("assocP"),
            domain: Gen::Declared,
            codomain: Gen::Declared,
        },
        DefCase {
            name: "compose",
            flippable: Flippable::def_with(
                "compose",
                vec![
                    FlipArg::plain(Flippable::def("pairSwp")),
                    FlipArg::plain(Flippable::def("pairSwp")),
                ],
            ),
            domain: Gen::Fixed(int_pair()),
            codomain: Gen::Fixed(int_pair()),
        },
        DefCase {
            name: "uncurryF",
            flippable: Flippable::def_with("uncurryF", vec![add_family()]),
            domain: Gen::Fixed(int_pair()),
            codomain: Gen::Fixed(int_pair()),
        },
        DefCase {
            name: "bbAns",
            flippable: bbans::bb_ans_flippable(model),
            domain: Gen::MsgSymbol,
            codomain: Gen::MsgOnly,
        },
    ]
}

fn gen_value(
    kind: &Gen,
    declared: &TypeExpr,
    gen: &ValueGen,
    model: &LatentModel,
    rng: &mut ChaCha8Rng,
) -> Value {
    for _ in 0..100 {
        let v = match kind {
            Gen::Declared => {
                let mut vars = BTreeSet::new();
                free_type_vars(declared, &mut vars);
                let inst = gen.choose_instantiation(&vars, rng);
                gen.value(&substitute(declared, &inst), VALUE_DEPTH, rng)
            }
            Gen::Fixed(t) => gen.value(t, VALUE_DEPTH, rng),
            Gen::MsgSymbol => Some(Value::pair(
                Value::Msg(arbitrary_message(rng, 3)),
                Value::Int(rng.gen_range(0..model.num_symbols()) as i64),
            )),
            Gen::MsgOnly => Some(Value::Msg(arbitrary_message(rng, 3))),
        };
        if let Some(v) = v {
            return v;
        }
    }
    panic!("value generation starved for a stdlib type");
}

#[test]
fn criterion_1_round_trip_identity() {
    gate(1, "round trips on every stdlib definition", Duration::from_secs(30), || {
        let checked = check_program(&stdlib_program()).map_err(|e| format!("{:?}", e))?;
        let interp = Interp::new(&checked);
        let model = Arc::new(LatentModel::demo());
        let gen = ValueGen::new(&checked.program);
        let cases = def_cases(&model);
        let covered: BTreeSet<&str> = cases.iter().map(|c| c.name).collect();
        for d in checked.program.flip_defs() {
            if !covered.contains(d.name.name.as_str()) {
                return Err(format!("stdlib definition '{}' has no test case", d.name.name));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut total = 0usize;
        for case in &cases {
            let def = checked.flip(case.name).expect("covered above");
            for _ in 0..CASES_PER_DEF {
                let v = gen_value(&case.domain, &def.domain, &gen, &model, &mut rng);
                let w = interp
                    .apply(&case.flippable, v.clone())
                    .map_err(|e| format!("{} forward: {}", case.name, e))?;
                let back = interp
                    .unapply(&case.flippable, w)
                    .map_err(|e| format!("{} backward: {}", case.name, e))?;
                if back != v {
                    return Err(format!("{}: backward(forward(v)) != v for v = {}", case.name, v));
                }
                let w = gen_value(&case.codomain, &def.codomain, &gen, &model, &mut rng);
                let v = interp
                    .unapply(&case.flippable, w.clone())
                    .map_err(|e| format!("{} backward: {}", case.name, e))?;
                let again = interp
                    .apply(&case.flippable, v)
                    .map_err(|e| format!("{} forward: {}", case.name, e))?;
                if again != w {
                    return Err(format!("{}: forward(backward(w)) != w for w = {}", case.name, w));
                }
                total += 2;
            }
        }
        Ok(format!("{} definitions, {} cases", cases.len(), total))
    });
}

const FIXTURE_DEFS: &str = "flip triple : ((a , b) , c) <-> (c , (b , a)) = {\n\
    \x20 ((x , y) , z) <-> (x , y) < pairSwp > (y , x) <-> (z , (y , x))\n\
    }\n\
    flip swpI : Either Int Int <-> Either Int Int = {\n\
    \x20 (Left x) <-> (Right x);\n\
    \x20 (Right y) <-> (Left y)\n\
    }\n";

#[test]
fn criterion_2_reverser_laws() {
    gate(2, "reverser involution and agreement", Duration::from_secs(30), || {
        let mut prog = stdlib_program();
        let fixtures = parse_program(FIXTURE_DEFS).map_err(|e| e.to_string())?;
        prog.extend_with(fixtures);
        let originals: Vec<FlipDef> = prog.flip_defs().cloned().collect();
        for d in &originals {
            if reverse_def(&reverse_def(d)) != *d {
                return Err(format!("reverse(reverse({})) differs structurally", d.name.name));
            }
        }
        for d in &originals {
            prog.decls.push(Decl::Flip(reverse_def(d)));
        }
        let checked = check_program(&prog)
            .map_err(|errs| format!("reversed program does not check: {}", errs[0]))?;
        let interp = Interp::new(&checked);
        let model = Arc::new(LatentModel::demo());
        let gen = ValueGen::new(&checked.program);
        let mut cases = def_cases(&model);
        cases.push(DefCase {
            name: "triple",
            flippable: Flippable::def("triple"),
            domain: Gen::Declared,
            codomain: Gen::Declared,
        });
        cases.push(DefCase {
            name: "swpI",
            flippable: Flippable::def("swpI"),
            domain: Gen::Declared,
            codomain: Gen::Declared,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x2);
        let mut total = 0usize;
        for case in &cases {
            let def = checked.flip(case.name).expect("present");
            let rev_name = format!("{}{}", case.name, REVERSED_SUFFIX);
            let reversed = match &case.flippable {
                Flippable::Def { args, .. } => Flippable::def_with(&rev_name, args.clone()),
                other => return Err(format!("unexpected flippable {:?}", other)),
            };
            for _ in 0..CASES_PER_DEF {
                let w = gen_value(&case.codomain, &def.codomain, &gen, &model, &mut rng);
                let via_rev = interp
                    .apply(&reversed, w.clone())
                    .map_err(|e| format!("{}: {}", rev_name, e))?;
                let via_bwd = interp
                    .unapply(&case.flippable, w)
                    .map_err(|e| format!("{}: {}", case.name, e))?;
                if via_rev != via_bwd {
                    return Err(format!(
                        "{}: forward of reversal gives {}, backward gives {}",
                        case.name, via_rev, via_bwd
                    ));
                }
                total += 1;
            }
        }
        Ok(format!("{} definitions, {} agreement cases", cases.len(), total))
    });
}

#[test]
fn criterion_3_checker_conformance() {
    gate(3, "checker error kinds and accepted sources", Duration::from_secs(10), || {
        let fixtures: [(CheckErrorKind, &str); 9] = [
            (
                CheckErrorKind::NonlinearUse,
                "flip idF : a <-> a = { x <-> x }\n\
                 flip dupu : Int <-> (Int , Int) = { x <-> x < idF > y <-> (x , y) }\n",
            ),
            (
                CheckErrorKind::UnusedVariable,
                "flip fst : (a , b) <-> a = { (x , y) <-> x }\n",
            ),
            (
                CheckErrorKind::OutOfWindowReference,
                "flip bad (f : Int -> Int <-> Int) : (Int , Int) <-> (Int , Int) = {\n\
                   (i , x) <-> i < f i > y <-> (x , y)\n\
                 }\n",
            ),
            (
                CheckErrorKind::OverlappingPatterns,
                "data Two = A | B\n\
                 flip over : Two <-> Two = { x <-> x ; (A) <-> (B) }\n",
            ),
            (
                CheckErrorKind::NonExhaustivePatterns,
                "data Two = A | B\n\
                 flip part : Two <-> Two = { (A) <-> (B) }\n",
            ),
            (
                CheckErrorKind::RebindBeforeConsume,
                "flip idF : a <-> a = { x <-> x }\n\
                 flip reb : (Int , Int) <-> Int = { (x , y) <-> y < idF > x <-> x }\n",
            ),
            (
                CheckErrorKind::TypeMismatch,
                "flip tm : (Int , Msg) <-> (Msg , Int) = { (x , y) <-> (x , y) }\n",
            ),
            (
                CheckErrorKind::UnknownName,
                "flip un : Int <-> Int = { x <-> x < mystery > y <-> y }\n",
            ),
            (
                CheckErrorKind::ArityMismatch,
                "flip idF : a <-> a = { x <-> x }\n\
                 flip compose (f : a <-> b) (g : b <-> c) : a <-> c = { x <-> x < f > y <-> y < g > z <-> z }\n\
                 flip am : Int <-> Int = { x <-> x < compose idF > y <-> y }\n",
            ),
        ];
        for kind in ALL_ERROR_KINDS {
            if !fixtures.iter().any(|(k, _)| *k == kind) {
                return Err(format!("no fixture for {:?}", kind));
            }
        }
        for (kind, src) in &fixtures {
            let prog = parse_program(src).map_err(|e| format!("{:?} fixture: {}", kind, e))?;
            match check_program(&prog) {
                Ok(_) => return Err(format!("{:?} fixture was accepted", kind)),
                Err(errors) => {
                    if !errors.iter().any(|e| e.kind == *kind) {
                        return Err(format!(
                            "{:?} fixture produced {:?} instead",
                            kind,
                            errors.iter().map(|e| e.kind).collect::<Vec<_>>()
                        ));
                    }
                }
            }
        }
        let accepted = "data Either a b = Left a | Right b\n\
            flip pairSwp : (a , b) <-> (b , a) = { (x , y) <-> (y , x) }\n\
            flip sumSwp : Either a b <-> Either b a = { (Left x) <-> (Right x); (Right y) <-> (Left y) }\n\
            flip compose (f : a <-> b) (g : b <-> c) : a <-> c = { x <-> x < f > y <-> y < g > z <-> z }\n\
            flip uncurryF (f : a -> b <-> c) : (a , b) <-> (a , c) = { (x , y) <-> y < f x > z <-> (x , z) }\n\
            flip bbAns (pz : (Msg , z) <-> Msg) (pxz : z -> (Msg , x) <-> Msg) (qzx : x -> (Msg , z) <-> Msg) : (Msg , x) <-> Msg = {\n\
            \x20 (c , xv) <-> c < flip (qzx xv) > (c , zv) <-> (c , xv) < pxz zv > c <-> (c , zv) < pz > c <-> c\n\
            }\n";
        let prog = parse_program(accepted).map_err(|e| format!("accepted sources: {}", e))?;
        if let Err(errors) = check_program(&prog) {
            return Err(format!("accepted sources rejected: {}", errors[0]));
        }
        Ok("9 error kinds, 5 accepted definitions".to_string())
    });
}

#[test]
fn criterion_4_rans_exhaustive() {
    gate(4, "exhaustive coder inverse on small heads", Duration::from_secs(5), || {
        let table = CategoricalTable::new(2, &[1, 3]).map_err(|e| e.to_string())?;
        let floor = 1u64 << 32;
        for head in floor..floor + 4096 {
            let m = Message::from_parts(head, Vec::new()).map_err(|e| e.to_string())?;
            for s in 0..2 {
                let (got, rest) = table.decode(table.encode(m.clone(), s));
                if got != s || rest != m {
                    return Err(format!("decode(encode(head {}, {})) diverged", head, s));
                }
            }
            let (s, rest) = table.decode(m.clone());
            if table.encode(rest, s) != m {
                return Err(format!("encode(decode(head {})) diverged", head));
            }
        }
        Ok("4096 heads, both symbols, both directions".to_string())
    });
}

#[test]
fn criterion_5_dyadic_rate() {
    gate(5, "dyadic source codes at entropy", Duration::from_secs(5), || {
        let table = CategoricalTable::new(12, &[2048, 1024, 512, 512]).map_err(|e| e.to_string())?;
        // Probabilities 1/2, 1/4, 1/8, 1/8: H = 1.75 bits. The corpus
        // realises those frequencies exactly, so the measured rate has no
        // sampling noise in it, only coder overhead.
        let n = 100_000usize;
        let entropy = 1.75f64;
        let mut corpus = Vec::with_capacity(n);
        corpus.extend(std::iter::repeat(0usize).take(n / 2));
        corpus.extend(std::iter::repeat(1usize).take(n / 4));
        corpus.extend(std::iter::repeat(2usize).take(n / 8));
        corpus.extend(std::iter::repeat(3usize).take(n / 8));
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x5);
        corpus.shuffle(&mut rng);

        let empty_bits = Message::empty().bits();
        let mut m = Message::empty();
        for &s in corpus.iter().rev() {
            m = table.encode(m, s);
        }
        let measured = (m.bits() - empty_bits) as f64 / n as f64;
        let band = entropy..=(entropy + 0.001 + 64.0 / n as f64);
        if !band.contains(&measured) {
            return Err(format!("measured {} bits/symbol outside {:?}", measured, band));
        }
        let mut m = m;
        for (i, &want) in corpus.iter().enumerate() {
            let (got, rest) = table.decode(m);
            if got != want {
                return Err(format!("decode diverged at position {}", i));
            }
            m = rest;
        }
        if m != Message::empty() {
            return Err("message not drained after decoding the corpus".to_string());
        }
        Ok(format!("N = {}, measured {:.5} bits/symbol", n, measured))
    });
}

/// Draws one symbol from the demo model's true marginal.
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

#[test]
fn criterion_6_bits_back_rate() {
    gate(6, "bits-back rate matches the bound", Duration::from_secs(60), || {
        let model = LatentModel::demo();
        let n = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x6);
        let xs: Vec<usize> = (0..n).map(|_| sample_marginal(&model, &mut rng)).collect();

        let enc = bbans::encode_sequence(&model, Message::empty(), &xs)
            .map_err(|e| e.to_string())?;
        let measured = (enc.bits() as f64 - Message::empty().bits() as f64) / n as f64;
        let bound = bbans::negative_elbo(&model, &xs);
        if (measured - bound).abs() > 0.05 {
            return Err(format!("measured {:.4}, bound {:.4}", measured, bound));
        }

        // Independent oracle: with the exact posterior the bound per
        // symbol must equal -log2 of the marginal, computed here straight
        // from the frequency tables.
        let scale = (1u64 << model.precision()) as f64;
        let k = model.num_latents();
        let cross_entropy: f64 = xs
            .iter()
            .map(|&x| {
                let marginal: f64 = (0..k)
                    .map(|z| {
                        (model.prior().freq(z) as f64 / scale)
                            * (model.likelihood(z).freq(x) as f64 / scale)
                    })
                    .sum();
                -marginal.log2()
            })
            .sum::<f64>()
            / n as f64;
        if (bound - cross_entropy).abs() > 1e-9 {
            return Err(format!(
                "bound {:.12} vs marginal cross-entropy {:.12}",
                bound, cross_entropy
            ));
        }

        let (back, rest) = bbans::decode_sequence(&model, enc, n);
        if back != xs || rest != Message::empty() {
            return Err("sequence did not decode back".to_string());
        }
        Ok(format!(
            "N = {}, measured {:.4}, bound {:.4}, oracle gap {:.1e}",
            n,
            measured,
            bound,
            (bound - cross_entropy).abs()
        ))
    });
}

#[test]
fn criterion_7_host_surface_agreement() {
    gate(7, "host and surface coders bit-identical", Duration::from_secs(30), || {
        let checked = check_program(&stdlib_program()).map_err(|e| format!("{:?}", e))?;
        let interp = Interp::new(&checked);
        let model = Arc::new(LatentModel::demo());
        let f = bbans::bb_ans_flippable(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x7);
        for i in 0..1000 {
            let msg = arbitrary_message(&mut rng, 4);
            let x = rng.gen_range(0..model.num_symbols());
            let host = bbans::bb_encode_symbol(&model, msg.clone(), x).map_err(|e| e.to_string())?;
            let dsl = interp
                .apply(&f, Value::pair(Value::Msg(msg.clone()), Value::Int(x as i64)))
                .map_err(|e| e.to_string())?;
            if dsl != Value::Msg(host.clone()) {
                return Err(format!("case {}: encoders disagree", i));
            }
            let (hx, hm) = bbans::bb_decode_symbol(&model, msg.clone());
            let back = interp.unapply(&f, Value::Msg(msg)).map_err(|e| e.to_string())?;
            if back != Value::pair(Value::Msg(hm), Value::Int(hx as i64)) {
                return Err(format!("case {}: decoders disagree", i));
            }
        }
        Ok("1000 cases, both directions".to_string())
    });
}

fn flipkit(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_flipkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn compress_roundtrip(dir: &Path, name: &str, symbols: &[usize]) -> Result<Vec<u8>, String> {
    let input = dir.join(format!("{}.txt", name));
    let text: String = symbols.iter().map(|s| format!("{}\n", s)).collect();
    fs::write(&input, text).map_err(|e| e.to_string())?;
    let packed = dir.join(format!("{}.flpc", name));
    let unpacked = dir.join(format!("{}.out", name));
    let c = flipkit(&["compress", input.to_str().unwrap(), "-o", packed.to_str().unwrap()]);
    if !c.status.success() {
        return Err(format!("compress {} failed: {}", name, String::from_utf8_lossy(&c.stderr)));
    }
    let d = flipkit(&["decompress", packed.to_str().unwrap(), "-o", unpacked.to_str().unwrap()]);
    if !d.status.success() {
        return Err(format!("decompress {} failed: {}", name, String::from_utf8_lossy(&d.stderr)));
    }
    let got: Vec<usize> = fs::read_to_string(&unpacked)
        .map_err(|e| e.to_string())?
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    if got != symbols {
        return Err(format!("corpus '{}' did not survive the round trip", name));
    }
    fs::read(&packed).map_err(|e| e.to_string())
}

#[test]
fn criterion_8_cli_end_to_end() {
    gate(8, "command line compress/decompress", Duration::from_secs(60), || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let model = LatentModel::demo();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x8);
        let big: Vec<usize> = (0..100_000).map(|_| sample_marginal(&model, &mut rng)).collect();

        compress_roundtrip(dir.path(), "empty", &[])?;
        compress_roundtrip(dir.path(), "one", &[3])?;
        let first = compress_roundtrip(dir.path(), "big", &big)?;
        let second = compress_roundtrip(dir.path(), "big-again", &big)?;
        if first != second {
            return Err("identical corpora produced different containers".to_string());
        }

        let other = dir.path().join("other.json");
        fs::write(
            &other,
            r#"{"precision": 1, "prior": [1, 1], "likelihood": [[1, 1], [1, 1]], "posterior": [[1, 1], [1, 1]]}"#,
        )
        .map_err(|e| e.to_string())?;
        let refused = flipkit(&[
            "decompress",
            dir.path().join("big.flpc").to_str().unwrap(),
            "--model",
            other.to_str().unwrap(),
            "-o",
            dir.path().join("refused.out").to_str().unwrap(),
        ]);
        if refused.status.code() != Some(1) {
            return Err("wrong model was not refused with exit 1".to_string());
        }
        if dir.path().join("refused.out").exists() {
            return Err("refused decompression still wrote output".to_string());
        }
        Ok(format!("3 corpora ({} symbols max), deterministic, hash refusal", big.len()))
    });
}
