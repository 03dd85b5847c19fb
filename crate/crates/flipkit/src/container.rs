//! On-disk container for compressed streams.
//!
//! Layout: magic `FLPC`, a format version byte, an 8-byte model
//! fingerprint, the symbol count as a big-endian u64, then the message in
//! its own serialized form. The fingerprint ties a stream to the exact
//! tables it was compressed with; decompressing under any other model is
//! refused instead of producing silent garbage.

use flipper::ans::Message;
use flipper::bbans::LatentModel;
use sha2::{Digest, Sha256};

pub const MAGIC: [u8; 4] = *b"FLPC";
pub const VERSION: u8 = 1;

pub fn model_tag(model: &LatentModel) -> [u8; 8] {
    let digest = Sha256::digest(model.canonical_bytes());
    let mut tag = [0u8; 8];
    tag.copy_from_slice(&digest[..8]);
    tag
}

pub struct Container {
    pub model_tag: [u8; 8],
    pub count: u64,
    pub message: Message,
}

impl Container {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.model_tag);
        out.extend_from_slice(&self.count.to_be_bytes());
        out.extend_from_slice(&self.message.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Container, String> {
        if bytes.len() < 21 {
            return Err("container is truncated".to_string());
        }
        if bytes[..4] != MAGIC {
            return Err("not a flipkit container (bad magic)".to_string());
        }
        if bytes[4] != VERSION {
            return Err(format!("unsupported container version {}", bytes[4]));
        }
        let mut model_tag = [0u8; 8];
        model_tag.copy_from_slice(&bytes[5..13]);
        let mut count_bytes = [0u8; 8];
        count_bytes.copy_from_slice(&bytes[13..21]);
        let count = u64::from_be_bytes(count_bytes);
        let message = Message::from_bytes(&bytes[21..])
            .map_err(|e| format!("bad payload: {}", e))?;
        Ok(Container { model_tag, count, message })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn container_round_trips() {
        let c = Container {
            model_tag: *b"12345678",
            count: 42,
            message: Message::empty(),
        };
        let bytes = c.to_bytes();
        let back = Container::from_bytes(&bytes).unwrap();
        assert_eq!(back.model_tag, c.model_tag);
        assert_eq!(back.count, 42);
        assert_eq!(back.message, Message::empty());
    }

    #[test]
    fn junk_is_rejected() {
        assert!(Container::from_bytes(b"FLPC").is_err());
        assert!(Container::from_bytes(&[0u8; 40]).is_err());
        let mut wrong_version = Container {
            model_tag: [0; 8],
            count: 0,
            message: Message::empty(),
        }
        .to_bytes();
        wrong_version[4] = 9;
        assert!(Container::from_bytes(&wrong_version).is_err());
    }

    #[test]
    fn fingerprints_differ_per_model() {
        let demo = LatentModel::demo();
        let other = LatentModel::from_json(
            r#"{"precision": 1, "prior": [1, 1], "likelihood": [[1, 1], [1, 1]], "posterior": [[1, 1], [1, 1]]}"#,
        )
        .unwrap();
        assert_ne!(model_tag(&demo), model_tag(&other));
        assert_eq!(model_tag(&demo), model_tag(&LatentModel::demo()));
    }
}
