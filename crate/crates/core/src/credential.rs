//! Credentials and their storage.
//!
//! A login uses two secrets: the ID password, a sequence of `k` fixed-board
//! symbols, and the UI password, a sequence of `m ≤ k` cursor-board symbols.
//! Entry step `i` expects ID symbol `i` to be covered by UI symbol `i mod m`.
//!
//! Stored digests use SHA-256 iterated over a length-prefixed encoding of
//! symbol indices (not labels, so reskinning a board leaves digests valid):
//!
//! ```text
//! msg   = "assocpin/v1" || u32be(len salt) || salt
//!         || u32be(k) || u32be(id[0]) .. u32be(id[k-1])
//!         || u32be(m) || u32be(ui[0]) .. u32be(ui[m-1])
//! h_1   = SHA256(msg)
//! h_j+1 = SHA256(h_j)
//! ```

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::board::{BoardError, BoardSpec, Pair, Side};
use crate::rng;

pub const DEFAULT_ITERATIONS: u32 = 25;
pub const DEFAULT_SALT_BYTES: usize = 16;
const DOMAIN: &[u8] = b"assocpin/v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CredentialError {
    #[error("ID password must have at least one symbol")]
    EmptyId,
    #[error("UI password must have at least one symbol")]
    EmptyUi,
    #[error("UI password length {m} exceeds ID password length {k}")]
    UiLongerThanId { m: usize, k: usize },
    #[error("PIN of length {len} cannot carry a UI part of length {m}")]
    PinTooShort { len: usize, m: usize },
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error("salt must be at least two characters")]
    SaltTooShort,
    #[error("iteration count must be positive")]
    ZeroIterations,
    #[error("plaintext-recoverable storage needs a vault key")]
    NoVault,
    #[error("stored credential has no sealed copy")]
    NotRecoverable,
    #[error("sealed credential failed to open")]
    Unseal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Credentials {
    id_password: Vec<usize>,
    ui_password: Vec<usize>,
}

impl Credentials {
    pub fn new(
        spec: &BoardSpec,
        id_password: Vec<usize>,
        ui_password: Vec<usize>,
    ) -> Result<Self, CredentialError> {
        for &f in &id_password {
            spec.check_index(Side::Fixed, f)?;
        }
        for &m in &ui_password {
            spec.check_index(Side::Cursor, m)?;
        }
        Self::unchecked(id_password, ui_password)
    }

    fn unchecked(id_password: Vec<usize>, ui_password: Vec<usize>) -> Result<Self, CredentialError> {
        let (k, m) = (id_password.len(), ui_password.len());
        if k == 0 {
            return Err(CredentialError::EmptyId);
        }
        if m == 0 {
            return Err(CredentialError::EmptyUi);
        }
        if m > k {
            return Err(CredentialError::UiLongerThanId { m, k });
        }
        Ok(Credentials {
            id_password,
            ui_password,
        })
    }

    pub fn from_labels<S: AsRef<str>>(
        spec: &BoardSpec,
        id: &[S],
        ui: &[S],
    ) -> Result<Self, CredentialError> {
        let id = id
            .iter()
            .map(|s| spec.index_of(Side::Fixed, s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        let ui = ui
            .iter()
            .map(|s| spec.index_of(Side::Cursor, s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::unchecked(id, ui)
    }

    pub fn id_password(&self) -> &[usize] {
        &self.id_password
    }

    pub fn ui_password(&self) -> &[usize] {
        &self.ui_password
    }

    /// Number of entry steps.
    pub fn k(&self) -> usize {
        self.id_password.len()
    }

    pub fn m(&self) -> usize {
        self.ui_password.len()
    }

    /// Step `i` pairs ID symbol `i` with UI symbol `i mod m`.
    pub fn expected_pairs(&self) -> Vec<Pair> {
        expected_pairs_with(&self.id_password, &self.ui_password)
    }

    /// Expected pairs when the UI password is presented in `order`
    /// (step-level UI symbol `j` is `ui[order[j]]`).
    pub fn expected_pairs_ordered(&self, order: &[usize]) -> Vec<Pair> {
        let ui: Vec<usize> = order.iter().map(|&q| self.ui_password[q]).collect();
        expected_pairs_with(&self.id_password, &ui)
    }
}

fn expected_pairs_with(id: &[usize], ui: &[usize]) -> Vec<Pair> {
    id.iter()
        .enumerate()
        .map(|(i, &f)| Pair::new(f, ui[i % ui.len()]))
        .collect()
}

/// Labels of an expected pair sequence.
pub fn pair_labels(spec: &BoardSpec, pairs: &[Pair]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|p| {
            (
                spec.fixed_symbols()[p.fixed].clone(),
                spec.cursor_symbols()[p.cursor].clone(),
            )
        })
        .collect()
}

/// Split a single legacy PIN into ID and UI parts.
///
/// The last `ui_length` symbols form the UI password. Each may be a cursor
/// symbol, or a fixed symbol which is carried over by shared index (digit `3`
/// on the default board becomes `C`).
pub fn split_legacy_pin<S: AsRef<str>>(
    spec: &BoardSpec,
    pin: &[S],
    ui_length: usize,
) -> Result<Credentials, CredentialError> {
    if ui_length == 0 {
        return Err(CredentialError::EmptyUi);
    }
    if pin.len() < 2 || ui_length >= pin.len() {
        return Err(CredentialError::PinTooShort {
            len: pin.len(),
            m: ui_length,
        });
    }
    let k = pin.len() - ui_length;
    if ui_length > k {
        return Err(CredentialError::UiLongerThanId { m: ui_length, k });
    }
    let id = pin[..k]
        .iter()
        .map(|s| spec.index_of(Side::Fixed, s.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let ui = pin[k..]
        .iter()
        .map(|s| {
            let s = s.as_ref();
            spec.index_of(Side::Cursor, s)
                .or_else(|_| spec.index_of(Side::Fixed, s))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Credentials::unchecked(id, ui)
}

/// One token per character, for PINs typed as plain strings.
pub fn pin_tokens(pin: &str) -> Vec<String> {
    pin.chars().map(String::from).collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Digest(pub [u8; 32]);

impl Digest {
    /// Comparison without early exit.
    pub fn ct_eq(&self, other: &Digest) -> bool {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0u8, |acc, (a, b)| acc | (a ^ b))
            == 0
    }
}

impl std::fmt::Debug for Digest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Digest({})", hex::encode(self.0))
    }
}

impl From<Digest> for String {
    fn from(d: Digest) -> Self {
        hex::encode(d.0)
    }
}

impl TryFrom<String> for Digest {
    type Error = hex::FromHexError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out)?;
        Ok(Digest(out))
    }
}

fn encode_message(salt: &str, id: &[usize], ui: &[usize]) -> Vec<u8> {
    let mut msg = Vec::with_capacity(DOMAIN.len() + salt.len() + 4 * (id.len() + ui.len() + 3));
    msg.extend_from_slice(DOMAIN);
    msg.extend_from_slice(&(salt.len() as u32).to_be_bytes());
    msg.extend_from_slice(salt.as_bytes());
    for part in [id, ui] {
        msg.extend_from_slice(&(part.len() as u32).to_be_bytes());
        for &s in part {
            msg.extend_from_slice(&(s as u32).to_be_bytes());
        }
    }
    msg
}

/// Salted SHA-256 applied `iterations` times.
///
/// Panics if `iterations` is zero.
pub fn iterated_hash(salt: &str, id: &[usize], ui: &[usize], iterations: u32) -> Digest {
    assert!(iterations >= 1, "iterations must be positive");
    let mut h: [u8; 32] = Sha256::digest(encode_message(salt, id, ui)).into();
    for _ in 1..iterations {
        h = Sha256::digest(h).into();
    }
    Digest(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StorageMode {
    PlaintextRecoverable,
    #[default]
    HashOnly,
}

/// AEAD-sealed copy of a credential pair, bound to its user id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sealed {
    nonce: String,
    ciphertext: String,
}

/// At-rest key for plaintext-recoverable credentials.
#[derive(Clone)]
pub struct Vault {
    cipher: ChaCha20Poly1305,
}

impl Vault {
    pub fn new(key: [u8; 32]) -> Self {
        Vault {
            cipher: ChaCha20Poly1305::new(Key::from_slice(&key)),
        }
    }

    pub fn generate_key() -> [u8; 32] {
        let mut key = [0u8; 32];
        rand::rng().fill_bytes(&mut key);
        key
    }

    pub fn seal(&self, user_id: &str, creds: &Credentials) -> Sealed {
        let mut nonce = [0u8; 12];
        rand::rng().fill_bytes(&mut nonce);
        let plain = serde_json::to_vec(creds).expect("credentials serialize");
        let ciphertext = self
            .cipher
            .encrypt(
                Nonce::from_slice(&nonce),
                Payload {
                    msg: &plain,
                    aad: user_id.as_bytes(),
                },
            )
            .expect("encryption with a valid key cannot fail");
        Sealed {
            nonce: hex::encode(nonce),
            ciphertext: hex::encode(ciphertext),
        }
    }

    pub fn open(&self, user_id: &str, sealed: &Sealed) -> Result<Credentials, CredentialError> {
        let nonce = hex::decode(&sealed.nonce).map_err(|_| CredentialError::Unseal)?;
        let ct = hex::decode(&sealed.ciphertext).map_err(|_| CredentialError::Unseal)?;
        if nonce.len() != 12 {
            return Err(CredentialError::Unseal);
        }
        let plain = self
            .cipher
            .decrypt(
                Nonce::from_slice(&nonce),
                Payload {
                    msg: &ct,
                    aad: user_id.as_bytes(),
                },
            )
            .map_err(|_| CredentialError::Unseal)?;
        let creds: Credentials =
            serde_json::from_slice(&plain).map_err(|_| CredentialError::Unseal)?;
        Credentials::unchecked(creds.id_password, creds.ui_password)
    }
}

impl std::fmt::Debug for Vault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Vault(..)")
    }
}

/// What the server keeps for a user. Only the ID and UI lengths are stored
/// in the clear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredCredential {
    pub user_id: String,
    pub salt: String,
    pub iterations: u32,
    pub digest: Digest,
    pub mode: StorageMode,
    pub id_len: usize,
    pub ui_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sealed: Option<Sealed>,
}

impl StoredCredential {
    /// Store with a fresh random salt and the default iteration count.
    pub fn create(
        user_id: &str,
        creds: &Credentials,
        mode: StorageMode,
        vault: Option<&Vault>,
    ) -> Result<Self, CredentialError> {
        let salt = rng::random_hex(DEFAULT_SALT_BYTES);
        Self::with_salt(user_id, creds, mode, vault, &salt, DEFAULT_ITERATIONS)
    }

    pub fn with_salt(
        user_id: &str,
        creds: &Credentials,
        mode: StorageMode,
        vault: Option<&Vault>,
        salt: &str,
        iterations: u32,
    ) -> Result<Self, CredentialError> {
        if salt.chars().count() < 2 {
            return Err(CredentialError::SaltTooShort);
        }
        if iterations == 0 {
            return Err(CredentialError::ZeroIterations);
        }
        let sealed = match mode {
            StorageMode::HashOnly => None,
            StorageMode::PlaintextRecoverable => {
                Some(vault.ok_or(CredentialError::NoVault)?.seal(user_id, creds))
            }
        };
        Ok(StoredCredential {
            user_id: user_id.to_owned(),
            salt: salt.to_owned(),
            iterations,
            digest: iterated_hash(salt, creds.id_password(), creds.ui_password(), iterations),
            mode,
            id_len: creds.k(),
            ui_len: creds.m(),
            sealed,
        })
    }

    pub fn verify(&self, id: &[usize], ui: &[usize]) -> bool {
        iterated_hash(&self.salt, id, ui, self.iterations).ct_eq(&self.digest)
    }

    pub fn recover(&self, vault: Option<&Vault>) -> Result<Credentials, CredentialError> {
        let sealed = self.sealed.as_ref().ok_or(CredentialError::NotRecoverable)?;
        vault
            .ok_or(CredentialError::NoVault)?
            .open(&self.user_id, sealed)
    }
}
