//! API keys and password digests.

use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::{Algorithm, Argon2, Params, Version};
use password_hash::rand_core::{OsRng, RngCore};
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;

pub const MIN_PASSWORD_CHARS: usize = 10;
pub const KEY_HEX_LEN: usize = 32;

/// 128 random bits as 32 lowercase hex characters.
pub fn generate_key() -> String {
    let mut bytes = [0u8; 16];
    OsRng.fill_bytes(&mut bytes);
    hex::encode(bytes)
}

/// Keys are stored as SHA-256 digests; the clear key is shown once.
pub fn key_digest(key: &str) -> [u8; 32] {
    Sha256::digest(key.as_bytes()).into()
}

pub fn is_well_formed_key(key: &str) -> bool {
    key.len() == KEY_HEX_LEN && key.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

pub fn digests_match(a: &[u8], b: &[u8]) -> bool {
    a.ct_eq(b).into()
}

#[derive(Debug, Clone, Copy)]
pub struct PasswordParams {
    pub memory_kib: u32,
    pub iterations: u32,
}

fn argon2(params: PasswordParams) -> Argon2<'static> {
    let p = Params::new(params.memory_kib, params.iterations, 1, None).expect("validated work factor");
    Argon2::new(Algorithm::Argon2id, Version::V0x13, p)
}

/// Salted Argon2id digest in PHC string form.
pub fn hash_password(password: &str, params: PasswordParams) -> String {
    let salt = SaltString::generate(&mut OsRng);
    argon2(params).hash_password(password.as_bytes(), &salt).expect("argon2 hashing with valid params").to_string()
}

pub fn verify_password(password: &str, digest: &str) -> bool {
    // parameters come from the PHC string itself
    PasswordHash::new(digest)
        .map(|h| Argon2::default().verify_password(password.as_bytes(), &h).is_ok())
        .unwrap_or(false)
}
