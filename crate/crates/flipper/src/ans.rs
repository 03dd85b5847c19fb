//! Streaming asymmetric numeral system coder.
//!
//! A [`Message`] is a stack of bits: a 64-bit head plus a vector of
//! 32-bit tail words. Encoding a symbol pushes roughly `-log2 p` bits
//! onto the stack and decoding pops them back off, exactly, in reverse
//! order. Decoding is total: it is defined on every message, including
//! the freshly initialised one, which is what makes the bits-back
//! construction possible.
//!
//! The head is kept at or above `2^32` whenever tail words exist, so
//! `encode` after `decode` reproduces the original message bit for bit.

use std::fmt;

/// Renormalisation floor for the head.
const FLOOR: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodecError {
    BadTable(String),
    BadMagic,
    BadVersion(u8),
    Truncated,
    TrailingBytes(usize),
    HeadBelowFloor,
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::BadTable(why) => write!(f, "invalid frequency table: {}", why),
            CodecError::BadMagic => write!(f, "not a message: bad magic"),
            CodecError::BadVersion(v) => write!(f, "unsupported message version {}", v),
            CodecError::Truncated => write!(f, "message bytes are truncated"),
            CodecError::TrailingBytes(n) => {
                write!(f, "{} unexpected byte(s) after the message", n)
            }
            CodecError::HeadBelowFloor => {
                write!(f, "message head is below the renormalisation floor")
            }
        }
    }
}

impl std::error::Error for CodecError {}

/// A stack of bits, the state threaded through every coder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    head: u64,
    /// Bottom of the stack first; the last word is popped first.
    tail: Vec<u32>,
}

const MAGIC: &[u8; 4] = b"FLPM";
const VERSION: u8 = 1;

impl Message {
    /// The starting message: a single sentinel bit above 32 zero bits,
    /// 33 bits in total. Starting above the floor means the first few
    /// decodes have real bits to consume.
    pub fn empty() -> Message {
        Message { head: FLOOR, tail: Vec::new() }
    }

    /// Rebuilds a message from raw parts, enforcing the head invariant.
    pub fn from_parts(head: u64, tail: Vec<u32>) -> Result<Message, CodecError> {
        if !tail.is_empty() && head < FLOOR {
            return Err(CodecError::HeadBelowFloor);
        }
        Ok(Message { head, tail })
    }

    pub fn head(&self) -> u64 {
        self.head
    }

    pub fn tail(&self) -> &[u32] {
        self.tail.as_slice()
    }

    /// Exact length of the bit stack.
    pub fn bits(&self) -> u64 {
        32 * self.tail.len() as u64 + (64 - u64::from(self.head.leading_zeros()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 1 + 8 + 4 + 4 * self.tail.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.head.to_be_bytes());
        out.extend_from_slice(&(self.tail.len() as u32).to_be_bytes());
        for w in &self.tail {
            out.extend_from_slice(&w.to_be_bytes());
        }
        out
    }

    /// Strict inverse of [`to_bytes`](Message::to_bytes): the slice must
    /// contain exactly one serialised message.
    pub fn from_bytes(bytes: &[u8]) -> Result<Message, CodecError> {
        if bytes.len() < 4 {
            return Err(CodecError::Truncated);
        }
        if &bytes[..4] != MAGIC {
            return Err(CodecError::BadMagic);
        }
        let rest = &bytes[4..];
        if rest.is_empty() {
            return Err(CodecError::Truncated);
        }
        if rest[0] != VERSION {
            return Err(CodecError::BadVersion(rest[0]));
        }
        let rest = &rest[1..];
        if rest.len() < 12 {
            return Err(CodecError::Truncated);
        }
        let head = u64::from_be_bytes(rest[..8].try_into().unwrap());
        let len = u32::from_be_bytes(rest[8..12].try_into().unwrap()) as usize;
        let rest = &rest[12..];
        if rest.len() < 4 * len {
            return Err(CodecError::Truncated);
        }
        if rest.len() > 4 * len {
            return Err(CodecError::TrailingBytes(rest.len() - 4 * len));
        }
        let tail = rest
            .chunks_exact(4)
            .map(|c| u32::from_be_bytes(c.try_into().unwrap()))
            .collect();
        Message::from_parts(head, tail)
    }
}

/// Quantised categorical distribution: `precision`-bit frequencies that
/// sum to exactly `2^precision`, every symbol given at least one count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalTable {
    precision: u32,
    freqs: Vec<u32>,
    /// Exclusive prefix sums of `freqs`.
    cdf: Vec<u32>,
}

impl CategoricalTable {
    pub fn new(precision: u32, freqs: &[u32]) -> Result<CategoricalTable, CodecError> {
        if !(1..=16).contains(&precision) {
            return Err(CodecError::BadTable(format!(
                "precision {} outside 1..=16",
                precision
            )));
        }
        if freqs.is_empty() {
            return Err(CodecError::BadTable("no symbols".to_string()));
        }
        let mut cdf = Vec::with_capacity(freqs.len());
        let mut total: u64 = 0;
        for (i, &f) in freqs.iter().enumerate() {
            if f == 0 {
                return Err(CodecError::BadTable(format!("symbol {} has zero count", i)));
            }
            cdf.push(total as u32);
            total += u64::from(f);
        }
        if total != 1 << precision {
            return Err(CodecError::BadTable(format!(
                "counts sum to {}, expected {}",
                total,
                1u64 << precision
            )));
        }
        Ok(CategoricalTable { precision, freqs: freqs.to_vec(), cdf })
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn num_symbols(&self) -> usize {
        self.freqs.len()
    }

    pub fn freq(&self, symbol: usize) -> u32 {
        self.freqs[symbol]
    }

    /// Pushes `symbol` onto the message. Costs `precision - log2(freq)`
    /// bits on average, exactly in the dyadic case.
    pub fn encode(&self, mut m: Message, symbol: usize) -> Message {
        assert!(symbol < self.freqs.len(), "symbol {} out of range", symbol);
        let f = u64::from(self.freqs[symbol]);
        let r = self.precision;
        // The shift form of `head >= f << (64 - r)` cannot overflow.
        while m.head >> (64 - r) >= f {
            m.tail.push(m.head as u32);
            m.head >>= 32;
        }
        m.head = ((m.head / f) << r) + (m.head % f) + u64::from(self.cdf[symbol]);
        m
    }

    /// Pops one symbol off the message. Total: every message decodes.
    pub fn decode(&self, mut m: Message) -> (usize, Message) {
        let r = self.precision;
        let mask = (1u64 << r) - 1;
        let low = (m.head & mask) as u32;
        let mut symbol = self.freqs.len() - 1;
        for (i, &c) in self.cdf.iter().enumerate().skip(1) {
            if c > low {
                symbol = i - 1;
                break;
            }
        }
        let f = u64::from(self.freqs[symbol]);
        m.head = f * (m.head >> r) + u64::from(low) - u64::from(self.cdf[symbol]);
        while m.head < FLOOR {
            match m.tail.pop() {
                Some(w) => m.head = (m.head << 32) | u64::from(w),
                None => break,
            }
        }
        (symbol, m)
    }
}

/// Seeded random message for property tests: any head is valid when the
/// tail is empty, otherwise the head respects the floor.
pub fn arbitrary_message(rng: &mut impl rand::Rng, max_tail_words: usize) -> Message {
    let tail_len = rng.gen_range(0..=max_tail_words);
    let tail: Vec<u32> = (0..tail_len).map(|_| rng.gen()).collect();
    let head = if tail.is_empty() {
        rng.gen()
    } else {
        rng.gen_range(FLOOR..=u64::MAX)
    };
    Message { head, tail }
}
