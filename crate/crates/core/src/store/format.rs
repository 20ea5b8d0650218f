//! LVRT threshold files.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `LVRT`                  |
//! | 4      | 4    | version, u32 = 1              |
//! | 8      | 8    | max_p, u64                    |
//! | 16     | 4·(max_p−1) | θ(2) … θ(max_p), u32   |
//! | end−4  | 4    | CRC-32 (IEEE) of all preceding bytes |

use std::fs;
use std::io::Write;
use std::path::Path;

use super::ThresholdStore;
use crate::error::{FormatError, Result};

pub const MAGIC: &[u8; 4] = b"LVRT";
pub const VERSION: u32 = 1;
const HEADER_SIZE: usize = 16;
const TRAILER_SIZE: usize = 4;

pub(super) fn encode(store: &ThresholdStore) -> Vec<u8> {
    let thetas = store.thetas();
    let mut out = Vec::with_capacity(HEADER_SIZE + 4 * thetas.len() + TRAILER_SIZE);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&store.max_p().to_le_bytes());
    for t in thetas {
        out.extend_from_slice(&t.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub(super) fn decode(bytes: &[u8]) -> Result<ThresholdStore, FormatError> {
    let need = HEADER_SIZE + TRAILER_SIZE;
    if bytes.len() < need {
        return Err(FormatError::Truncated {
            len: bytes.len(),
            need,
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if &magic != MAGIC {
        return Err(FormatError::BadMagic { found: magic });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(FormatError::BadVersion(version));
    }
    let max_p = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let payload = bytes.len() - need;
    let expected = max_p
        .checked_sub(1)
        .and_then(|n| n.checked_mul(4))
        .filter(|&n| n <= usize::MAX as u64)
        .map(|n| n as usize);
    match expected {
        Some(n) if n == payload => {}
        Some(n) if n > payload => {
            return Err(FormatError::Truncated {
                len: bytes.len(),
                need: need + n,
            })
        }
        _ => {
            return Err(FormatError::Length {
                max_p,
                len: payload,
            })
        }
    }
    let body = &bytes[..bytes.len() - TRAILER_SIZE];
    let stored = u32::from_le_bytes(bytes[bytes.len() - TRAILER_SIZE..].try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(FormatError::Checksum { stored, computed });
    }
    let thetas: Vec<u32> = body[HEADER_SIZE..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ThresholdStore::from_thetas(&thetas)
}

/// Writes through a sibling temporary file so a crash never leaves a torn store.
pub(super) fn save(store: &ThresholdStore, path: &Path) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&encode(store))?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub(super) fn load(path: &Path) -> Result<ThresholdStore> {
    let bytes = fs::read(path)?;
    Ok(decode(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store18() -> ThresholdStore {
        ThresholdStore::scan(18, None).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&store18());
        assert_eq!(&bytes[0..4], &[0x4C, 0x56, 0x52, 0x54]);
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 18);
        assert_eq!(bytes.len(), 16 + 17 * 4 + 4);
        // θ(2) = 1, θ(16) = 8
        assert_eq!(&bytes[16..20], &[1, 0, 0, 0]);
        assert_eq!(&bytes[16 + 14 * 4..16 + 15 * 4], &[8, 0, 0, 0]);
    }

    #[test]
    fn round_trip() {
        let s = store18();
        let bytes = encode(&s);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn empty_and_short_inputs() {
        assert!(matches!(decode(&[]), Err(FormatError::Truncated { .. })));
        let bytes = encode(&store18());
        assert!(matches!(
            decode(&bytes[..bytes.len() - 8]),
            Err(FormatError::Truncated { .. })
        ));
    }

    #[test]
    fn corrupted_inputs() {
        let bytes = encode(&store18());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(FormatError::BadMagic { .. })));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert_eq!(decode(&bad), Err(FormatError::BadVersion(2)));
        let mut bad = bytes.clone();
        bad[20] ^= 0x01;
        assert!(matches!(decode(&bad), Err(FormatError::Checksum { .. })));
        let mut bad = bytes.clone();
        bad.extend_from_slice(&[0, 0]);
        assert!(matches!(decode(&bad), Err(FormatError::Length { .. })));
    }

    #[test]
    fn empty_store_encodes() {
        let s = ThresholdStore::new();
        let bytes = encode(&s);
        assert_eq!(bytes.len(), 20);
        assert_eq!(decode(&bytes).unwrap(), s);
    }
}
