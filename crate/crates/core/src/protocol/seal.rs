//! `E_k(M)`: AES-128-GCM with a fresh 96-bit nonce carried next to the
//! ciphertext.

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes128Gcm, Nonce};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::prfkeys::MasterKey;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sealed {
    pub nonce: [u8; 12],
    pub ciphertext: Vec<u8>,
}

pub(crate) fn seal<R: Rng + ?Sized>(key: &MasterKey, aad: &[u8], plaintext: &[u8], rng: &mut R) -> Sealed {
    let mut nonce = [0u8; 12];
    rng.fill(&mut nonce);
    let cipher = Aes128Gcm::new_from_slice(key.as_bytes()).expect("16-byte key");
    let ciphertext = cipher
        .encrypt(Nonce::from_slice(&nonce), Payload { msg: plaintext, aad })
        .expect("in-memory encryption cannot fail");
    Sealed { nonce, ciphertext }
}

/// `None` when the tag does not verify under `key`.
pub(crate) fn open(key: &MasterKey, aad: &[u8], sealed: &Sealed) -> Option<Vec<u8>> {
    let cipher = Aes128Gcm::new_from_slice(key.as_bytes()).expect("16-byte key");
    cipher
        .decrypt(Nonce::from_slice(&sealed.nonce), Payload { msg: &sealed.ciphertext, aad })
        .ok()
}
