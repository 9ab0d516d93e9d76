//! Identifiers and their self-delimiting binary encoding.
//!
//! A node identifier is a positive integer. On the wire it travels as the
//! word `1^k 0 b`, where `b` is the binary representation of the identifier
//! (no leading zeros) and `k = |b|`. The unary length header makes the code
//! prefix-free and, more importantly, makes plain lexicographic comparison
//! of encoded words agree with integer comparison of the identifiers, so a
//! bit-at-a-time broadcast can compare candidates before either word is
//! complete.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    /// Identifiers are positive integers; zero encodes nothing.
    #[error("identifier must be a positive integer")]
    ZeroIdentifier,
    /// The word is not `1^k 0 b` with `|b| = k` and `b` starting in 1.
    #[error("word {0:?} is not a well-formed identifier encoding")]
    NotWellFormed(String),
}

/// A unique positive integer naming a node. Arbitrary bit length.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Identifier(BigUint);

impl Identifier {
    pub fn new(value: BigUint) -> Result<Self, EncodingError> {
        if value.bits() == 0 {
            return Err(EncodingError::ZeroIdentifier);
        }
        Ok(Identifier(value))
    }

    pub fn from_u64(value: u64) -> Result<Self, EncodingError> {
        Identifier::new(BigUint::from(value))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Length of the binary representation (no leading zeros).
    pub fn bit_len(&self) -> usize {
        self.0.bits() as usize
    }

    /// Length of the encoded word: `2 * bit_len + 1`.
    pub fn encoded_len(&self) -> usize {
        2 * self.bit_len() + 1
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for Identifier {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let value = BigUint::from_str(s).map_err(|_| EncodingError::ZeroIdentifier)?;
        Identifier::new(value)
    }
}

/// A finite word over {0, 1}. The empty word is a valid value.
///
/// Ordering is lexicographic with a proper prefix sorting before its
/// extensions (so the empty word is least). For encoded identifiers this
/// coincides with integer order; the prefix branch is a harmless completion
/// that protocol comparisons never depend on except at divergent letters.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitWord(Vec<bool>);

impl BitWord {
    pub fn empty() -> Self {
        BitWord(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitWord(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Letter at 0-based position `i`. Panics when out of range.
    pub fn bit(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn last(&self) -> Option<bool> {
        self.0.last().copied()
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    /// Removes `k` letters from the end. Panics when `k > len`.
    pub fn delete_last(&mut self, k: usize) {
        assert!(k <= self.0.len(), "cannot delete {k} letters from {self}");
        let keep = self.0.len() - k;
        self.0.truncate(keep);
    }

    /// Flips a trailing 0 to 1. Panics when the word is empty or ends in 1.
    pub fn change_last_to_one(&mut self) {
        let last = self.0.last_mut().expect("change on empty word");
        assert!(!*last, "change on word ending in 1");
        *last = true;
    }

    pub fn is_prefix_of(&self, other: &BitWord) -> bool {
        self.0.len() <= other.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn is_proper_prefix_of(&self, other: &BitWord) -> bool {
        self.0.len() < other.0.len() && self.is_prefix_of(other)
    }

    /// Length of the longest common prefix of the two words.
    pub fn common_prefix_len(&self, other: &BitWord) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &bit in &self.0 {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitWord {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(EncodingError::NotWellFormed(s.to_string())),
            }
        }
        Ok(BitWord(bits))
    }
}

/// Encodes an identifier as `1^k 0 b` with `b` its binary digits, `k = |b|`.
pub fn encode_alpha(id: &Identifier) -> BitWord {
    let digits = id.0.to_radix_be(2);
    let mut bits = Vec::with_capacity(2 * digits.len() + 1);
    bits.extend(std::iter::repeat(true).take(digits.len()));
    bits.push(false);
    bits.extend(digits.iter().map(|&d| d == 1));
    BitWord(bits)
}

/// Inverse of [`encode_alpha`]; rejects words outside the image.
pub fn decode_alpha(word: &BitWord) -> Result<Identifier, EncodingError> {
    if !is_well_formed(word) {
        return Err(EncodingError::NotWellFormed(word.to_string()));
    }
    let k = (word.len() - 1) / 2;
    let digits: Vec<u8> = (k + 1..word.len())
        .map(|i| u8::from(word.bit(i)))
        .collect();
    let value = BigUint::from_radix_be(&digits, 2).expect("binary digits");
    Identifier::new(value)
}

/// True iff the word is the encoding of some identifier: `1^k 0 b` with
/// `k >= 1`, `|b| = k` and `b` starting in 1.
pub fn is_well_formed(word: &BitWord) -> bool {
    let k = word.iter().take_while(|&b| b).count();
    k >= 1 && word.len() == 2 * k + 1 && word.bit(k + 1)
}

/// Lexicographic comparison; a proper prefix precedes its extensions.
pub fn lex_compare(a: &BitWord, b: &BitWord) -> Ordering {
    a.cmp(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn id(v: u64) -> Identifier {
        Identifier::from_u64(v).unwrap()
    }

    fn word(s: &str) -> BitWord {
        s.parse().unwrap()
    }

    #[test]
    fn encode_known_values() {
        assert_eq!(encode_alpha(&id(23)).to_string(), "11111010111");
        assert_eq!(encode_alpha(&id(1)).to_string(), "101");
        assert_eq!(encode_alpha(&id(5)).to_string(), "1110101");
    }

    #[test]
    fn decode_known_values() {
        assert_eq!(decode_alpha(&word("11111010111")).unwrap(), id(23));
        assert_eq!(decode_alpha(&word("101")).unwrap(), id(1));
        assert_eq!(decode_alpha(&word("1110101")).unwrap(), id(5));
    }

    #[test]
    fn decode_rejects_malformed_words() {
        for bad in ["", "1", "0", "1101", "011", "11011011", "1100"] {
            assert!(decode_alpha(&word(bad)).is_err(), "{bad} decoded");
        }
    }

    #[test]
    fn well_formedness() {
        assert!(is_well_formed(&word("11111010111")));
        assert!(is_well_formed(&word("11010")));
        assert!(!is_well_formed(&BitWord::empty()));
        assert!(!is_well_formed(&word("1101")));
        // b must start with 1, otherwise the value would have leading zeros
        assert!(!is_well_formed(&word("11001")));
    }

    #[test]
    fn zero_identifier_rejected() {
        assert_eq!(
            Identifier::new(BigUint::from(0u32)),
            Err(EncodingError::ZeroIdentifier)
        );
    }

    #[test]
    fn lex_compare_follows_integer_order() {
        let a2 = encode_alpha(&id(2));
        let a3 = encode_alpha(&id(3));
        let a4 = encode_alpha(&id(4));
        let a7 = encode_alpha(&id(7));
        assert_eq!(a2.to_string(), "11010");
        assert_eq!(lex_compare(&a2, &a3), Ordering::Less);
        assert_eq!(lex_compare(&a7, &a7), Ordering::Equal);
        assert_eq!(lex_compare(&a3, &a4), Ordering::Less);
    }

    #[test]
    fn prefix_precedes_extension() {
        let empty = BitWord::empty();
        let w = word("10");
        let wx = word("101");
        assert_eq!(lex_compare(&empty, &w), Ordering::Less);
        assert_eq!(lex_compare(&w, &wx), Ordering::Less);
    }

    #[test]
    fn encoded_length_formula() {
        for v in [1u64, 2, 3, 5, 23, 255, 256, 1 << 20, u64::MAX] {
            let n = id(v);
            let expected = 2 * (64 - v.leading_zeros() as usize) + 1;
            assert_eq!(encode_alpha(&n).len(), expected);
            assert_eq!(n.encoded_len(), expected);
        }
    }

    #[test]
    fn no_encoding_is_a_proper_prefix_of_another() {
        let words: Vec<BitWord> = (1u64..=1024).map(|v| encode_alpha(&id(v))).collect();
        for (i, a) in words.iter().enumerate() {
            for (j, b) in words.iter().enumerate() {
                if i != j {
                    assert!(!a.is_proper_prefix_of(b), "{a} prefixes {b}");
                }
            }
        }
    }

    #[test]
    fn round_trip_small_range() {
        for v in 1u64..=10_000 {
            let n = id(v);
            assert_eq!(decode_alpha(&encode_alpha(&n)).unwrap(), n);
        }
    }

    proptest! {
        #[test]
        fn round_trip_random(v in 1u64..) {
            let n = id(v);
            prop_assert_eq!(decode_alpha(&encode_alpha(&n)).unwrap(), n);
        }

        #[test]
        fn order_embedding(a in 1u64.., b in 1u64..) {
            let cmp_ints = a.cmp(&b);
            let cmp_words = lex_compare(&encode_alpha(&id(a)), &encode_alpha(&id(b)));
            prop_assert_eq!(cmp_ints, cmp_words);
        }

        #[test]
        fn word_parse_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..64)) {
            let w = BitWord::from_bits(bits);
            let parsed: BitWord = w.to_string().parse().unwrap();
            prop_assert_eq!(parsed, w);
        }
    }
}
