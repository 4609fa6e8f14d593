//! Per-device key derivation and deterministic single-block encryption of
//! contact entries.
//!
//! Each entry is one AES-128 block holding the peer's node id (big-endian)
//! followed by 64 zero bits. Encryption is deterministic: the same peer
//! always produces the same ciphertext under a given device key, which is
//! what lets a device recognise a repeat sighting without decrypting its
//! store. The flip side is that equal peers are linkable within one device.
//!
//! The key is the device id repeated twice. It is reproducible from the id
//! alone, which is what the backend relies on; it is not meant to resist an
//! attacker who knows the id.

pub mod aes;

use std::fmt;

use crate::id::NodeId;
use aes::{Aes128, BLOCK_LEN};

/// 16-byte symmetric key bound to one device.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContactKey([u8; 16]);

impl ContactKey {
    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }
}

impl fmt::Debug for ContactKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ContactKey(..)")
    }
}

/// One encrypted contact entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ciphertext(pub [u8; BLOCK_LEN]);

impl Ciphertext {
    pub fn as_bytes(&self) -> &[u8; BLOCK_LEN] {
        &self.0
    }
}

impl TryFrom<&[u8]> for Ciphertext {
    type Error = CryptoError;

    fn try_from(bytes: &[u8]) -> Result<Self, Self::Error> {
        <[u8; BLOCK_LEN]>::try_from(bytes)
            .map(Ciphertext)
            .map_err(|_| CryptoError::Length(bytes.len()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CryptoError {
    #[error("ciphertext must be 16 bytes, got {0}")]
    Length(usize),
    /// Wrong key or corrupted entry.
    #[error("decrypted block has a non-zero pad or a zero node id")]
    Pad,
}

pub fn derive_key(id: NodeId) -> ContactKey {
    let half = id.to_be_bytes();
    let mut key = [0u8; 16];
    key[..8].copy_from_slice(&half);
    key[8..].copy_from_slice(&half);
    ContactKey(key)
}

fn plaintext_block(peer: NodeId) -> [u8; BLOCK_LEN] {
    let mut block = [0u8; BLOCK_LEN];
    block[..8].copy_from_slice(&peer.to_be_bytes());
    block
}

pub fn encrypt_contact(key: &ContactKey, peer: NodeId) -> Ciphertext {
    Ciphertext(Aes128::new(&key.0).encrypt_block(&plaintext_block(peer)))
}

/// Decrypts one entry, rejecting anything that is not a valid plaintext
/// block. Accepts a raw slice so length is checked before any AES work.
pub fn decrypt_contact(key: &ContactKey, ct: &[u8]) -> Result<NodeId, CryptoError> {
    let ct = Ciphertext::try_from(ct)?;
    decrypt_with(&Aes128::new(&key.0), &ct)
}

/// Reusable cipher for bulk encryption and decryption under one key.
#[derive(Clone)]
pub struct ContactCipher(Aes128);

impl ContactCipher {
    pub fn new(key: &ContactKey) -> Self {
        ContactCipher(Aes128::new(&key.0))
    }

    pub fn encrypt(&self, peer: NodeId) -> Ciphertext {
        Ciphertext(self.0.encrypt_block(&plaintext_block(peer)))
    }

    pub fn decrypt(&self, ct: &Ciphertext) -> Result<NodeId, CryptoError> {
        decrypt_with(&self.0, ct)
    }
}

fn decrypt_with(cipher: &Aes128, ct: &Ciphertext) -> Result<NodeId, CryptoError> {
    let block = cipher.decrypt_block(&ct.0);
    if block[8..].iter().any(|&b| b != 0) {
        return Err(CryptoError::Pad);
    }
    let id = u64::from_be_bytes(block[..8].try_into().expect("8 bytes"));
    NodeId::new(id).map_err(|_| CryptoError::Pad)
}
