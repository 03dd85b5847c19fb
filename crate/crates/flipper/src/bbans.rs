//! Bits-back coding with a latent variable model.
//!
//! A [`LatentModel`] holds quantised tables for a prior P(z), a
//! likelihood P(x|z) and an approximate posterior Q(z|x), all sharing one
//! precision. Encoding a symbol first *decodes* a latent from the
//! message under Q(z|x), getting those bits back, then encodes x under
//! P(x|z) and z under P(z). The net cost per symbol approaches the
//! negative evidence lower bound, which [`negative_elbo`] computes for a
//! given sequence.
//!
//! [`bb_encode_symbol`] is the host-side composition. The same pipeline
//! exists in the surface language as `bbAns`; [`bb_ans_flippable`] wires
//! a model's tables into it so the two can be compared bit for bit.

use crate::ans::{CategoricalTable, CodecError, Message};
use crate::interp::{Bijection, EvalError, FlipArg, Flippable};
use crate::value::Value;
use serde::Deserialize;
use std::fmt;
use std::sync::Arc;

#[derive(Debug)]
pub enum ModelError {
    Json(String),
    Table(CodecError),
    Shape(String),
    Symbol { got: usize, alphabet: usize },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Json(m) => write!(f, "model is not valid JSON: {}", m),
            ModelError::Table(e) => write!(f, "bad frequency table: {}", e),
            ModelError::Shape(m) => write!(f, "{}", m),
            ModelError::Symbol { got, alphabet } => {
                write!(f, "symbol {} outside alphabet of {} symbols", got, alphabet)
            }
        }
    }
}

impl std::error::Error for ModelError {}

impl From<CodecError> for ModelError {
    fn from(e: CodecError) -> ModelError {
        ModelError::Table(e)
    }
}

#[derive(Deserialize)]
struct RawModel {
    precision: u32,
    prior: Vec<u32>,
    likelihood: Vec<Vec<u32>>,
    posterior: Vec<Vec<u32>>,
}

/// Prior, likelihood and posterior tables over one shared precision.
#[derive(Debug, Clone)]
pub struct LatentModel {
    precision: u32,
    prior: CategoricalTable,
    /// One table per latent class, over the symbol alphabet.
    likelihood: Vec<CategoricalTable>,
    /// One table per symbol, over the latent classes.
    posterior: Vec<CategoricalTable>,
}

impl LatentModel {
    pub fn from_json(src: &str) -> Result<LatentModel, ModelError> {
        let raw: RawModel =
            serde_json::from_str(src).map_err(|e| ModelError::Json(e.to_string()))?;
        let prior = CategoricalTable::new(raw.precision, &raw.prior)?;
        let k = prior.num_symbols();
        if raw.likelihood.len() != k {
            return Err(ModelError::Shape(format!(
                "likelihood has {} rows for {} latent classes",
                raw.likelihood.len(),
                k
            )));
        }
        let v = raw.likelihood[0].len();
        for (i, row) in raw.likelihood.iter().enumerate() {
            if row.len() != v {
                return Err(ModelError::Shape(format!(
                    "likelihood row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    v
                )));
            }
        }
        if raw.posterior.len() != v {
            return Err(ModelError::Shape(format!(
                "posterior has {} rows for an alphabet of {}",
                raw.posterior.len(),
                v
            )));
        }
        for (i, row) in raw.posterior.iter().enumerate() {
            if row.len() != k {
                return Err(ModelError::Shape(format!(
                    "posterior row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    k
                )));
            }
        }
        let likelihood = raw
            .likelihood
            .iter()
            .map(|row| CategoricalTable::new(raw.precision, row))
            .collect::<Result<Vec<_>, _>>()?;
        let posterior = raw
            .posterior
            .iter()
            .map(|row| CategoricalTable::new(raw.precision, row))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LatentModel { precision: raw.precision, prior, likelihood, posterior })
    }

    /// The model shipped with the toolkit: 4 latent classes over an
    /// 8-symbol alphabet at 12-bit precision, with the posterior exact.
    pub fn demo() -> LatentModel {
        LatentModel::from_json(include_str!("../../../models/demo-k4v8.json"))
            .expect("embedded demo model is valid")
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn num_latents(&self) -> usize {
        self.prior.num_symbols()
    }

    pub fn num_symbols(&self) -> usize {
        self.likelihood[0].num_symbols()
    }

    pub fn prior(&self) -> &CategoricalTable {
        &self.prior
    }

    pub fn likelihood(&self, z: usize) -> &CategoricalTable {
        &self.likelihood[z]
    }

    pub fn posterior(&self, x: usize) -> &CategoricalTable {
        &self.posterior[x]
    }

    /// Deterministic byte form of every table, used to fingerprint the
    /// model a stream was compressed with.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let k = self.num_latents();
        let v = self.num_symbols();
        let mut out = Vec::with_capacity(12 + 4 * (k + 2 * k * v));
        out.extend_from_slice(&self.precision.to_be_bytes());
        out.extend_from_slice(&(k as u32).to_be_bytes());
        out.extend_from_slice(&(v as u32).to_be_bytes());
        for z in 0..k {
            out.extend_from_slice(&self.prior.freq(z).to_be_bytes());
        }
        for z in 0..k {
            for x in 0..v {
                out.extend_from_slice(&self.likelihood[z].freq(x).to_be_bytes());
            }
        }
        for x in 0..v {
            for z in 0..k {
                out.extend_from_slice(&self.posterior[x].freq(z).to_be_bytes());
            }
        }
        out
    }
}

/// Pushes one symbol: get bits back for a posterior latent, then pay for
/// the symbol under that latent's likelihood and for the latent itself.
pub fn bb_encode_symbol(
    model: &LatentModel,
    m: Message,
    x: usize,
) -> Result<Message, ModelError> {
    if x >= model.num_symbols() {
        return Err(ModelError::Symbol { got: x, alphabet: model.num_symbols() });
    }
    let (z, m) = model.posterior[x].decode(m);
    let m = model.likelihood[z].encode(m, x);
    Ok(model.prior.encode(m, z))
}

/// Exact inverse of [`bb_encode_symbol`]; total on any message.
pub fn bb_decode_symbol(model: &LatentModel, m: Message) -> (usize, Message) {
    let (z, m) = model.prior.decode(m);
    let (x, m) = model.likelihood[z].decode(m);
    let m = model.posterior[x].encode(m, z);
    (x, m)
}

/// Encodes back to front, so decoding pops symbols in sequence order.
pub fn encode_sequence(
    model: &LatentModel,
    mut m: Message,
    xs: &[usize],
) -> Result<Message, ModelError> {
    for &x in xs.iter().rev() {
        m = bb_encode_symbol(model, m, x)?;
    }
    Ok(m)
}

pub fn decode_sequence(model: &LatentModel, mut m: Message, n: usize) -> (Vec<usize>, Message) {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, rest) = bb_decode_symbol(model, m);
        out.push(x);
        m = rest;
    }
    (out, m)
}

/// Mean bits per symbol the coder is expected to spend on `xs`:
/// E over Q(z|x) of log2 Q(z|x) - log2 P(z) - log2 P(x|z), averaged.
pub fn negative_elbo(model: &LatentModel, xs: &[usize]) -> f64 {
    let scale = f64::from(1u32 << model.precision);
    let mut total = 0.0;
    for &x in xs {
        let mut per = 0.0;
        for z in 0..model.num_latents() {
            let q = f64::from(model.posterior[x].freq(z)) / scale;
            let p = f64::from(model.prior.freq(z)) / scale;
            let l = f64::from(model.likelihood[z].freq(x)) / scale;
            per += q * (q.log2() - p.log2() - l.log2());
        }
        total += per;
    }
    total / xs.len() as f64
}

fn split_msg_pair(who: &str, v: Value) -> Result<(Message, Value), EvalError> {
    if let Value::Pair(m, x) = v {
        if let Value::Msg(m) = *m {
            return Ok((m, *x));
        }
        return Err(EvalError::Host(format!(
            "{}: expected a message on the left of the pair",
            who
        )));
    }
    Err(EvalError::Host(format!("{}: expected a (message , symbol) pair, got {}", who, v)))
}

fn int_index(who: &str, v: &Value, bound: usize) -> Result<usize, EvalError> {
    match v {
        Value::Int(i) if *i >= 0 && (*i as usize) < bound => Ok(*i as usize),
        other => Err(EvalError::Host(format!("{}: index {} outside 0..{}", who, other, bound))),
    }
}

/// Wraps a frequency table as a host bijection `(Msg , Int) <-> Msg`.
pub fn table_bijection(name: &str, table: CategoricalTable) -> Bijection {
    let enc = Arc::new(table);
    let dec = enc.clone();
    let enc_name = name.to_string();
    let dec_name = name.to_string();
    Bijection::new(
        name,
        move |v| {
            let (m, xv) = split_msg_pair(&enc_name, v)?;
            let s = int_index(&enc_name, &xv, enc.num_symbols())?;
            Ok(Value::Msg(enc.encode(m, s)))
        },
        move |v| match v {
            Value::Msg(m) => {
                let (s, rest) = dec.decode(m);
                Ok(Value::pair(Value::Msg(rest), Value::Int(s as i64)))
            }
            other => Err(EvalError::Host(format!("{}: expected a message, got {}", dec_name, other))),
        },
    )
}

pub fn prior_bijection(model: &LatentModel) -> Bijection {
    table_bijection("prior", model.prior.clone())
}

/// Likelihood as a latent-indexed family `z -> (Msg , Int) <-> Msg`.
pub fn likelihood_family(model: &Arc<LatentModel>) -> FlipArg {
    let m = Arc::clone(model);
    FlipArg::family(move |idx| {
        let z = int_index("likelihood", idx, m.num_latents())?;
        Ok(Flippable::host(table_bijection("likelihood", m.likelihood[z].clone())))
    })
}

/// Posterior as a symbol-indexed family `x -> (Msg , Int) <-> Msg`.
pub fn posterior_family(model: &Arc<LatentModel>) -> FlipArg {
    let m = Arc::clone(model);
    FlipArg::family(move |idx| {
        let x = int_index("posterior", idx, m.num_symbols())?;
        Ok(Flippable::host(table_bijection("posterior", m.posterior[x].clone())))
    })
}

/// The surface-language `bbAns` applied to this model's tables.
pub fn bb_ans_flippable(model: &Arc<LatentModel>) -> Flippable {
    Flippable::def_with(
        "bbAns",
        vec![
            FlipArg::plain(Flippable::host(prior_bijection(model))),
            likelihood_family(model),
            posterior_family(model),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ans::arbitrary_message;
    use crate::checker::check_program;
    use crate::interp::Interp;
    use crate::stdlib::stdlib_program;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_latent_model() -> LatentModel {
        LatentModel::from_json(
            r#"{
                "precision": 12,
                "prior": [2048, 2048],
                "likelihood": [[1024, 3072], [3072, 1024]],
                "posterior": [[1024, 3072], [3072, 1024]]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn demo_model_loads() {
        let m = LatentModel::demo();
        assert_eq!(m.precision(), 12);
        assert_eq!(m.num_latents(), 4);
        assert_eq!(m.num_symbols(), 8);
    }

    #[test]
    fn shape_and_table_problems_are_reported() {
        assert!(matches!(LatentModel::from_json("nope"), Err(ModelError::Json(_))));
        let short_row = r#"{"precision": 2, "prior": [2, 2], "likelihood": [[1, 3], [3]], "posterior": [[2, 2], [2, 2]]}"#;
        assert!(matches!(LatentModel::from_json(short_row), Err(ModelError::Shape(_))));
        let bad_sum = r#"{"precision": 2, "prior": [2, 1], "likelihood": [[1, 3], [3, 1]], "posterior": [[2, 2], [2, 2]]}"#;
        assert!(matches!(LatentModel::from_json(bad_sum), Err(ModelError::Table(_))));
    }

    #[test]
    fn exact_posterior_gives_marginal_cost() {
        // With Q(z|x) equal to the true posterior, the expected cost of a
        // symbol collapses to -log2 of its marginal probability. The demo
        // model's marginals are dyadic, so the numbers are crisp.
        let m = LatentModel::demo();
        let want = [2.0, 3.0, 3.0, 3.0, 3.0, 3.0, 4.0, 4.0];
        for (x, w) in want.iter().enumerate() {
            assert!((negative_elbo(&m, &[x]) - w).abs() < 1e-9, "symbol {}", x);
        }
        let balanced = [0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 7];
        assert!((negative_elbo(&m, &balanced) - 2.875).abs() < 1e-9);
    }

    #[test]
    fn sequences_round_trip() {
        let m = LatentModel::demo();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [0usize, 1, 2, 17, 400] {
            let xs: Vec<usize> = (0..n).map(|_| rng.gen_range(0..8)).collect();
            let enc = encode_sequence(&m, Message::empty(), &xs).unwrap();
            let (back, rest) = decode_sequence(&m, enc, n);
            assert_eq!(back, xs);
            assert_eq!(rest, Message::empty());
        }
    }

    #[test]
    fn net_rate_sits_at_the_source_entropy() {
        // Balanced marginal, exact posterior: one bit per symbol.
        let m = two_latent_model();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<usize> = (0..10_000).map(|_| rng.gen_range(0..2)).collect();
        let enc = encode_sequence(&m, Message::empty(), &xs).unwrap();
        let rate = (enc.bits() as f64 - Message::empty().bits() as f64) / xs.len() as f64;
        assert!((rate - 1.0).abs() < 0.02, "rate {}", rate);
        let (back, _) = decode_sequence(&m, enc, xs.len());
        assert_eq!(back, xs);
    }

    #[test]
    fn one_latent_class_reduces_to_the_likelihood_coder() {
        let m = LatentModel::from_json(
            r#"{
                "precision": 12,
                "prior": [4096],
                "likelihood": [[2048, 1024, 512, 512]],
                "posterior": [[4096], [4096], [4096], [4096]]
            }"#,
        )
        .unwrap();
        let plain = CategoricalTable::new(12, &[2048, 1024, 512, 512]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let msg = arbitrary_message(&mut rng, 3);
            let x = rng.gen_range(0..4);
            assert_eq!(
                bb_encode_symbol(&m, msg.clone(), x).unwrap(),
                plain.encode(msg.clone(), x)
            );
            let (sym, rest) = bb_decode_symbol(&m, msg.clone());
            let (psym, prest) = plain.decode(msg);
            assert_eq!((sym, rest), (psym, prest));
        }
    }

    #[test]
    fn surface_language_coder_matches_the_host_exactly() {
        let prog = stdlib_program();
        let checked = check_program(&prog).expect("stdlib checks");
        let interp = Interp::new(&checked);
        let model = Arc::new(LatentModel::demo());
        let f = bb_ans_flippable(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let msg = arbitrary_message(&mut rng, 3);
            let x = rng.gen_range(0..8);
            let host = bb_encode_symbol(&model, msg.clone(), x).unwrap();
            let dsl = interp
                .apply(&f, Value::pair(Value::Msg(msg.clone()), Value::Int(x as i64)))
                .unwrap();
            assert_eq!(dsl, Value::Msg(host.clone()));
            let (hx, hm) = bb_decode_symbol(&model, host.clone());
            let back = interp.unapply(&f, Value::Msg(host)).unwrap();
            assert_eq!(back, Value::pair(Value::Msg(hm), Value::Int(hx as i64)));
        }
    }

    #[test]
    fn canonical_bytes_fingerprint_the_tables() {
        let a = LatentModel::demo().canonical_bytes();
        let b = LatentModel::demo().canonical_bytes();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12 + 4 * (4 + 2 * 4 * 8));
        assert_ne!(a, two_latent_model().canonical_bytes());
    }
}
