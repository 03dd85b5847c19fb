//! Implementations behind the command line verbs.

use crate::container::{model_tag, Container};
use flipper::ans::Message;
use flipper::bbans::{self, LatentModel};
use flipper::checker::{check_program, CheckedProgram};
use flipper::interp::{Flippable, Interp};
use flipper::parser::parse_value_literal;
use flipper::printer::{render_flip, render_program};
use flipper::reverser::reverse_def;
use flipper::stdlib::load_program;
use std::fs;
use std::path::Path;

pub enum Failure {
    /// The input was understood but is wrong: check errors, run faults,
    /// corrupt or mismatched streams.
    Domain(String),
    /// Could not read or write something.
    Io(String),
}

pub struct Ctx {
    pub no_stdlib: bool,
    pub step_budget: Option<u64>,
    pub seed: u64,
    pub verbose: bool,
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("{}: {}", path.display(), e)))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {}", path.display(), e)))
}

/// Parses and checks a source file, printing diagnostics on failure.
fn load_checked(ctx: &Ctx, path: &Path) -> Result<CheckedProgram, Failure> {
    let src = read_text(path)?;
    let prog = load_program(&src, !ctx.no_stdlib)
        .map_err(|e| Failure::Domain(format!("{}:{}", path.display(), e)))?;
    match check_program(&prog) {
        Ok(checked) => Ok(checked),
        Err(errors) => {
            for e in &errors {
                println!("{}:{}", path.display(), e);
            }
            Err(Failure::Domain(format!(
                "{}: {} error(s)",
                path.display(),
                errors.len()
            )))
        }
    }
}

fn load_model(path: Option<&Path>) -> Result<LatentModel, Failure> {
    match path {
        None => Ok(LatentModel::demo()),
        Some(p) => {
            let src = read_text(p)?;
            LatentModel::from_json(&src)
                .map_err(|e| Failure::Domain(format!("{}: {}", p.display(), e)))
        }
    }
}

pub fn check(ctx: &Ctx, file: &Path) -> Result<(), Failure> {
    let checked = load_checked(ctx, file)?;
    let prog = &checked.program;
    if ctx.verbose {
        for d in prog.flip_defs() {
            println!(
                "  {} : {} <-> {}",
                d.name.name,
                flipper::printer::render_type(&d.domain),
                flipper::printer::render_type(&d.codomain)
            );
        }
    }
    println!(
        "ok: {} definitions, {} data types",
        prog.flip_defs().count(),
        prog.data_decls().count()
    );
    Ok(())
}

pub fn reverse(ctx: &Ctx, file: &Path, def: Option<&str>) -> Result<(), Failure> {
    let checked = load_checked(ctx, file)?;
    if let Some(name) = def {
        let d = checked
            .flip(name)
            .ok_or_else(|| Failure::Domain(format!("no definition named '{}'", name)))?;
        println!("{}", render_flip(&reverse_def(d)));
        return Ok(());
    }
    // Reversals of the user's own definitions, appended so the output
    // stays self-contained: the reversed bodies still refer to the
    // original names.
    let src = read_text(file)?;
    let user = load_program(&src, false)
        .map_err(|e| Failure::Domain(format!("{}:{}", file.display(), e)))?;
    let mut out = render_program(&user);
    for d in user.flip_defs() {
        out.push('\n');
        out.push_str(&render_flip(&reverse_def(d)));
        out.push('\n');
    }
    print!("{}", out);
    Ok(())
}

pub fn run(
    ctx: &Ctx,
    file: &Path,
    def: &str,
    literal: &str,
    backward: bool,
) -> Result<(), Failure> {
    let checked = load_checked(ctx, file)?;
    let d = checked
        .flip(def)
        .ok_or_else(|| Failure::Domain(format!("no definition named '{}'", def)))?;
    if !d.params.is_empty() {
        return Err(Failure::Domain(format!(
            "'{}' takes {} argument(s); only parameter-free definitions can be run directly",
            def,
            d.params.len()
        )));
    }
    let value = parse_value_literal(literal)
        .map_err(|e| Failure::Domain(format!("bad value literal: {}", e.message)))?;
    let mut interp = Interp::new(&checked);
    if let Some(b) = ctx.step_budget {
        interp = interp.with_step_budget(b);
    }
    let f = Flippable::def(def);
    let result = if backward {
        interp.unapply(&f, value)
    } else {
        interp.apply(&f, value)
    }
    .map_err(|e| Failure::Domain(e.to_string()))?;
    println!("{}", result);
    Ok(())
}

fn read_symbols(path: &Path, alphabet: usize) -> Result<Vec<usize>, Failure> {
    if alphabet == 256 {
        let bytes =
            fs::read(path).map_err(|e| Failure::Io(format!("{}: {}", path.display(), e)))?;
        return Ok(bytes.iter().map(|&b| b as usize).collect());
    }
    let text = read_text(path)?;
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .ok()
                .filter(|&s| s < alphabet)
                .ok_or_else(|| {
                    Failure::Domain(format!(
                        "bad symbol '{}': expected an integer in 0..{}",
                        tok, alphabet
                    ))
                })
        })
        .collect()
}

fn write_symbols(path: &Path, symbols: &[usize], alphabet: usize) -> Result<(), Failure> {
    if alphabet == 256 {
        let bytes: Vec<u8> = symbols.iter().map(|&s| s as u8).collect();
        return write_bytes(path, &bytes);
    }
    let mut text = String::new();
    for s in symbols {
        text.push_str(&s.to_string());
        text.push('\n');
    }
    write_bytes(path, text.as_bytes())
}

pub fn compress(
    ctx: &Ctx,
    input: &Path,
    model_path: Option<&Path>,
    output: &Path,
) -> Result<(), Failure> {
    let model = load_model(model_path)?;
    let symbols = read_symbols(input, model.num_symbols())?;
    let start = Message::empty();
    let start_bits = start.bits() as i64;
    let message = bbans::encode_sequence(&model, start, &symbols)
        .map_err(|e| Failure::Domain(e.to_string()))?;
    let container = Container {
        model_tag: model_tag(&model),
        count: symbols.len() as u64,
        message,
    };
    let bytes = container.to_bytes();
    write_bytes(output, &bytes)?;
    let payload = container.message.bits() as i64 - start_bits;
    println!("symbols: {}", symbols.len());
    if symbols.is_empty() {
        println!("payload: 0 bits");
    } else {
        let rate = payload as f64 / symbols.len() as f64;
        println!("payload: {} bits ({:.3} per symbol)", payload, rate);
        println!(
            "predicted: {:.3} bits per symbol",
            bbans::negative_elbo(&model, &symbols)
        );
    }
    if ctx.verbose {
        println!("container: {} bytes -> {}", bytes.len(), output.display());
    }
    Ok(())
}

pub fn decompress(
    ctx: &Ctx,
    input: &Path,
    model_path: Option<&Path>,
    output: &Path,
) -> Result<(), Failure> {
    let model = load_model(model_path)?;
    let bytes =
        fs::read(input).map_err(|e| Failure::Io(format!("{}: {}", input.display(), e)))?;
    let container = Container::from_bytes(&bytes)
        .map_err(|e| Failure::Domain(format!("{}: {}", input.display(), e)))?;
    if container.model_tag != model_tag(&model) {
        return Err(Failure::Domain(
            "model fingerprint mismatch: this stream was compressed with a different model"
                .to_string(),
        ));
    }
    let (symbols, rest) = bbans::decode_sequence(&model, container.message, container.count as usize);
    if rest != Message::empty() {
        return Err(Failure::Domain(
            "payload does not decode cleanly; the container is corrupt".to_string(),
        ));
    }
    write_symbols(output, &symbols, model.num_symbols())?;
    println!("symbols: {}", symbols.len());
    if ctx.verbose {
        println!("wrote {}", output.display());
    }
    Ok(())
}
