//! Hashing, XOR, symmetric encryption and the canonical field encoding that
//! every party (honest or not) uses to frame concatenated values.
//!
//! Concatenation `a || b || ...` is never performed on raw bytes. Every part
//! is prefixed with its 4-byte big-endian length, so `[b"AB", b"C"]` and
//! `[b"A", b"BC"]` hash differently and both sides of the protocol frame
//! values identically.

use std::fmt;

use aes_gcm::aead::consts::U16;
use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::aes::Aes256;
use aes_gcm::{AesGcm, Nonce};
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256, Sha512_256};
use thiserror::Error;

/// Output length of every supported hash function.
pub const DIGEST_LEN: usize = 32;
/// Symmetric key length (AES-256).
pub const KEY_LEN: usize = 32;
/// Cipher block length; also the IV length used by [`sym_encrypt`].
pub const BLOCK_LEN: usize = 16;
const TAG_LEN: usize = 16;

type Aes256Gcm16 = AesGcm<Aes256, U16>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrimitiveError {
    #[error("cannot hash an empty part list")]
    EmptyPartList,
    #[error("part {0} is empty")]
    EmptyPart(usize),
    #[error("length mismatch: {left} vs {right} bytes")]
    LengthMismatch { left: usize, right: usize },
    #[error("malformed field encoding")]
    MalformedEncoding,
    #[error("plaintext must encode exactly {expected} parts, got {actual}")]
    PartCount { expected: usize, actual: usize },
    #[error("decryption failed")]
    Decryption,
    #[error("expected {expected} bytes, got {actual}")]
    BadLength { expected: usize, actual: usize },
}

/// A 32-byte hash output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Digest(#[serde(with = "crate::hexser::array")] pub [u8; DIGEST_LEN]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, PrimitiveError> {
        let arr: [u8; DIGEST_LEN] = bytes.try_into().map_err(|_| PrimitiveError::BadLength {
            expected: DIGEST_LEN,
            actual: bytes.len(),
        })?;
        Ok(Digest(arr))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl AsRef<[u8]> for Digest {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

/// AES-256 key.
#[derive(Clone, PartialEq, Eq)]
pub struct CipherKey([u8; KEY_LEN]);

impl CipherKey {
    pub fn new(bytes: [u8; KEY_LEN]) -> Self {
        CipherKey(bytes)
    }

    pub fn from_digest(d: Digest) -> Self {
        CipherKey(d.0)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for CipherKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CipherKey(..)")
    }
}

/// `iv || body || tag`, always a positive multiple of [`BLOCK_LEN`].
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ciphertext(#[serde(with = "crate::hexser::vec")] Vec<u8>);

impl Ciphertext {
    /// Wraps raw bytes without checking them; malformed input fails at decryption.
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Ciphertext(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }
}

impl AsRef<[u8]> for Ciphertext {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ciphertext({})", hex::encode(&self.0))
    }
}

/// An ordered list of byte-string fields with an injective byte encoding.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FieldEncoding {
    parts: Vec<Vec<u8>>,
}

impl FieldEncoding {
    pub fn new<I, P>(parts: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: AsRef<[u8]>,
    {
        FieldEncoding {
            parts: parts.into_iter().map(|p| p.as_ref().to_vec()).collect(),
        }
    }

    pub fn parts(&self) -> &[Vec<u8>] {
        &self.parts
    }

    pub fn into_parts(self) -> Vec<Vec<u8>> {
        self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn encode(&self) -> Vec<u8> {
        encode_parts(&self.parts)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PrimitiveError> {
        let mut parts = Vec::new();
        let mut rest = bytes;
        while !rest.is_empty() {
            if rest.len() < 4 {
                return Err(PrimitiveError::MalformedEncoding);
            }
            let (len, tail) = rest.split_at(4);
            let len = u32::from_be_bytes([len[0], len[1], len[2], len[3]]) as usize;
            if tail.len() < len {
                return Err(PrimitiveError::MalformedEncoding);
            }
            let (part, tail) = tail.split_at(len);
            parts.push(part.to_vec());
            rest = tail;
        }
        Ok(FieldEncoding { parts })
    }
}

fn encode_parts<P: AsRef<[u8]>>(parts: &[P]) -> Vec<u8> {
    let total = parts.iter().map(|p| 4 + p.as_ref().len()).sum();
    let mut out = Vec::with_capacity(total);
    for p in parts {
        let p = p.as_ref();
        out.extend_from_slice(&(p.len() as u32).to_be_bytes());
        out.extend_from_slice(p);
    }
    out
}

/// The hash function written into a smart card (`h(·)`). `H(·)` uses the same one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HashFunction {
    #[default]
    Sha256,
    Sha512_256,
}

impl HashFunction {
    pub fn hash<P: AsRef<[u8]>>(self, parts: &[P]) -> Result<Digest, PrimitiveError> {
        if parts.is_empty() {
            return Err(PrimitiveError::EmptyPartList);
        }
        if let Some(i) = parts.iter().position(|p| p.as_ref().is_empty()) {
            return Err(PrimitiveError::EmptyPart(i));
        }
        let encoded = encode_parts(parts);
        let mut out = [0u8; DIGEST_LEN];
        match self {
            HashFunction::Sha256 => out.copy_from_slice(&Sha256::digest(&encoded)),
            HashFunction::Sha512_256 => out.copy_from_slice(&Sha512_256::digest(&encoded)),
        }
        Ok(Digest(out))
    }
}

impl std::str::FromStr for HashFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sha256" => Ok(HashFunction::Sha256),
            "sha512-256" => Ok(HashFunction::Sha512_256),
            other => Err(format!("unknown hash function `{other}`")),
        }
    }
}

/// Hashes with the default function.
pub fn hash<P: AsRef<[u8]>>(parts: &[P]) -> Result<Digest, PrimitiveError> {
    HashFunction::default().hash(parts)
}

pub fn xor_bytes(a: &[u8], b: &[u8]) -> Result<Vec<u8>, PrimitiveError> {
    if a.len() != b.len() {
        return Err(PrimitiveError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x ^ y).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IvPolicy {
    /// IV is derived from the key and the encoded plaintext (SIV-style; equal
    /// inputs give equal ciphertexts).
    FromPlaintext,
    Supplied([u8; BLOCK_LEN]),
}

/// Encrypts a two-part `(identity, R)` encoding with AES-256-GCM.
///
/// The encoded plaintext is PKCS#7 padded so the output length is a multiple
/// of the block size.
pub fn sym_encrypt(
    key: &CipherKey,
    plaintext: &FieldEncoding,
    iv_policy: IvPolicy,
) -> Result<Ciphertext, PrimitiveError> {
    if plaintext.len() != 2 {
        return Err(PrimitiveError::PartCount {
            expected: 2,
            actual: plaintext.len(),
        });
    }
    let mut body = plaintext.encode();
    let iv = match iv_policy {
        IvPolicy::Supplied(iv) => iv,
        IvPolicy::FromPlaintext => {
            let d = HashFunction::Sha256.hash(&[b"nid-iv".as_slice(), key.as_bytes(), &body])?;
            let mut iv = [0u8; BLOCK_LEN];
            iv.copy_from_slice(&d.0[..BLOCK_LEN]);
            iv
        }
    };
    let pad = BLOCK_LEN - body.len() % BLOCK_LEN;
    body.extend(std::iter::repeat_n(pad as u8, pad));

    let cipher = Aes256Gcm16::new_from_slice(key.as_bytes()).expect("key length is fixed");
    let sealed = cipher
        .encrypt(Nonce::<U16>::from_slice(&iv), body.as_slice())
        .map_err(|_| PrimitiveError::Decryption)?;
    let mut out = Vec::with_capacity(BLOCK_LEN + sealed.len());
    out.extend_from_slice(&iv);
    out.extend_from_slice(&sealed);
    Ok(Ciphertext(out))
}

pub fn sym_decrypt(key: &CipherKey, ct: &Ciphertext) -> Result<FieldEncoding, PrimitiveError> {
    let bytes = ct.as_bytes();
    if bytes.len() < BLOCK_LEN * 2 + TAG_LEN || !bytes.len().is_multiple_of(BLOCK_LEN) {
        return Err(PrimitiveError::Decryption);
    }
    let (iv, sealed) = bytes.split_at(BLOCK_LEN);
    let cipher = Aes256Gcm16::new_from_slice(key.as_bytes()).expect("key length is fixed");
    let mut body = cipher
        .decrypt(Nonce::<U16>::from_slice(iv), sealed)
        .map_err(|_| PrimitiveError::Decryption)?;
    let pad = *body.last().ok_or(PrimitiveError::Decryption)? as usize;
    if pad == 0
        || pad > BLOCK_LEN
        || pad > body.len()
        || body[body.len() - pad..].iter().any(|&b| b as usize != pad)
    {
        return Err(PrimitiveError::Decryption);
    }
    body.truncate(body.len() - pad);
    FieldEncoding::decode(&body)
}
