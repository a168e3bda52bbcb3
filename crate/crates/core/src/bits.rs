//! Fixed-length bit strings with a canonical packed encoding.
//!
//! Serial numbers and certificates are bit strings whose length is not
//! necessarily a multiple of eight (the toy hash works on 4-bit blocks, for
//! example), so `Vec<u8>` alone does not cut it. Bits are packed MSB-first
//! and any trailing bits in the last byte are forced to zero, which makes
//! equality, ordering, and hashing structural.

use rand::Rng;
use std::fmt;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BitError {
    #[error("hex string has wrong length: expected {expected} bytes, got {got}")]
    HexLength { expected: usize, got: usize },
    #[error("invalid hex: {0}")]
    HexDigit(String),
    #[error("padding bits beyond the declared length must be zero")]
    DirtyPadding,
    #[error("value does not fit in {0} bits")]
    Overflow(usize),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString {
    len: usize,
    bytes: Vec<u8>,
}

fn byte_len(bits: usize) -> usize {
    bits.div_ceil(8)
}

/// Mask for the last byte of an `len`-bit string; 0xff when len % 8 == 0.
fn tail_mask(len: usize) -> u8 {
    match len % 8 {
        0 => 0xff,
        r => 0xffu8 << (8 - r),
    }
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            bytes: vec![0u8; byte_len(len)],
        }
    }

    /// Uniformly random `len`-bit string.
    pub fn random<R: Rng>(len: usize, rng: &mut R) -> Self {
        let mut bytes = vec![0u8; byte_len(len)];
        rng.fill(&mut bytes[..]);
        if let Some(last) = bytes.last_mut() {
            *last &= tail_mask(len);
        }
        BitString { len, bytes }
    }

    /// First `len` bits of `bytes`, zeroing any padding in the tail byte.
    /// Panics if `bytes` is too short.
    pub fn from_bytes_truncated(bytes: &[u8], len: usize) -> Self {
        let mut bytes = bytes[..byte_len(len)].to_vec();
        if let Some(last) = bytes.last_mut() {
            *last &= tail_mask(len);
        }
        BitString { len, bytes }
    }

    /// The low `len` bits of `value`, most significant bit first.
    pub fn from_value(value: u64, len: usize) -> Result<Self, BitError> {
        if len < 64 && value >> len != 0 {
            return Err(BitError::Overflow(len));
        }
        let mut s = BitString::zeros(len);
        for i in 0..len {
            if value >> (len - 1 - i) & 1 == 1 {
                s.set(i);
            }
        }
        Ok(s)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = BitString::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.set(i);
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.bytes[i / 8] >> (7 - i % 8) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.bytes[i / 8] |= 1 << (7 - i % 8);
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut bits = Vec::with_capacity(self.len + other.len);
        bits.extend((0..self.len).map(|i| self.bit(i)));
        bits.extend((0..other.len).map(|i| other.bit(i)));
        BitString::from_bools(&bits)
    }

    /// Interpret the whole string as a big-endian integer. Panics past 64 bits.
    pub fn to_value(&self) -> u64 {
        assert!(self.len <= 64, "bit string too long for u64");
        (0..self.len).fold(0u64, |acc, i| acc << 1 | self.bit(i) as u64)
    }

    /// Split into consecutive `block_len`-bit blocks, each as an integer.
    /// Returns None unless the length divides evenly.
    pub fn split_values(&self, block_len: usize) -> Option<Vec<u64>> {
        if block_len == 0 || !self.len.is_multiple_of(block_len) {
            return None;
        }
        Some(
            (0..self.len / block_len)
                .map(|b| {
                    (0..block_len)
                        .fold(0u64, |acc, i| acc << 1 | self.bit(b * block_len + i) as u64)
                })
                .collect(),
        )
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Hex of the packed bytes. The bit length is carried out of band.
    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    /// Parse hex produced by [`to_hex`](Self::to_hex) for a known bit length.
    pub fn from_hex(s: &str, len: usize) -> Result<Self, BitError> {
        let bytes = hex::decode(s).map_err(|e| BitError::HexDigit(e.to_string()))?;
        if bytes.len() != byte_len(len) {
            return Err(BitError::HexLength {
                expected: byte_len(len),
                got: bytes.len(),
            });
        }
        if let Some(&last) = bytes.last() {
            if last & !tail_mask(len) != 0 {
                return Err(BitError::DirtyPadding);
            }
        }
        Ok(BitString { len, bytes })
    }

    /// Length-prefixed encoding used by state hashing.
    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.len as u64).to_le_bytes());
        out.extend_from_slice(&self.bytes);
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}:{})", self.len, self.to_hex())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn zeros_and_bits() {
        let s = BitString::zeros(10);
        assert_eq!(s.len(), 10);
        assert!((0..10).all(|i| !s.bit(i)));
    }

    #[test]
    fn from_value_round_trip() {
        let s = BitString::from_value(0b1011, 4).unwrap();
        assert_eq!(s.to_value(), 0b1011);
        assert_eq!(s.to_hex(), "b0"); // packed MSB-first: 1011_0000
        assert!(BitString::from_value(16, 4).is_err());
    }

    #[test]
    fn hex_rejects_dirty_padding() {
        // 4-bit string must have the low nibble zeroed.
        assert_eq!(BitString::from_hex("b0", 4).unwrap().to_value(), 0b1011);
        assert_eq!(BitString::from_hex("b1", 4), Err(BitError::DirtyPadding));
        assert!(matches!(
            BitString::from_hex("b0b0", 4),
            Err(BitError::HexLength { .. })
        ));
    }

    #[test]
    fn concat_preserves_order() {
        let a = BitString::from_value(0b10, 2).unwrap();
        let b = BitString::from_value(0b011, 3).unwrap();
        assert_eq!(a.concat(&b).to_value(), 0b10011);
    }

    #[test]
    fn split_values_inverts_concat() {
        let s = BitString::from_value(0b1101_0010, 8).unwrap();
        assert_eq!(s.split_values(4).unwrap(), vec![0b1101, 0b0010]);
        assert_eq!(s.split_values(3), None);
    }

    #[test]
    fn random_is_seeded() {
        let mut r1 = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let mut r2 = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        assert_eq!(
            BitString::random(77, &mut r1),
            BitString::random(77, &mut r2)
        );
    }

    proptest! {
        #[test]
        fn hex_round_trip(len in 1usize..128, seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let s = BitString::random(len, &mut rng);
            let back = BitString::from_hex(&s.to_hex(), len).unwrap();
            prop_assert_eq!(s, back);
        }

        #[test]
        fn value_round_trip(len in 1usize..=16, raw in any::<u64>()) {
            let v = raw & ((1u64 << len) - 1);
            let s = BitString::from_value(v, len).unwrap();
            prop_assert_eq!(s.to_value(), v);
        }
    }
}
