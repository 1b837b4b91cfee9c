//! Keys, addresses, signatures and the passphrase-encrypted keystore.
//!
//! Signatures are recoverable secp256k1 ECDSA over SHA-256 with RFC 6979
//! nonces, so signing is deterministic and the signer's address can be
//! recovered from a signature without shipping the public key alongside it.

use std::fmt;
use std::str::FromStr;

use hmac::{Hmac, Mac};
use k256::ecdsa::{RecoveryId, Signature as EcdsaSignature, SigningKey, VerifyingKey};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

use crate::digest::{sha256, sha256_parts};
use crate::wire::{Canonical, Encoder};

pub const SECRET_LEN: usize = 32;
pub const PUBLIC_KEY_LEN: usize = 33;
pub const ADDRESS_LEN: usize = 20;
pub const SIGNATURE_LEN: usize = 65;

const KEYGEN_DOMAIN: &[u8] = b"reviewchain/keygen";
const KEYSTORE_VERSION: u32 = 1;
const KEYSTORE_SALT_LEN: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdentityError {
    #[error("seed must be {SECRET_LEN} bytes, got {0}")]
    MalformedSeed(usize),
    #[error("malformed public key encoding")]
    MalformedPublicKey,
    #[error("malformed secret key")]
    MalformedSecretKey,
    #[error("passphrase must not be empty")]
    EmptyPassphrase,
    #[error("keystore authentication failed (wrong passphrase or corrupted data)")]
    Authentication,
    #[error("corrupted keystore: {0}")]
    Corrupted(String),
    #[error("unknown keystore preset `{0}`")]
    UnknownPreset(String),
    #[error("unsupported keystore version {0}")]
    UnsupportedVersion(u32),
}

/// 20-byte account identifier: the trailing bytes of SHA-256 over the public key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; ADDRESS_LEN]);

impl Address {
    pub const fn new(bytes: [u8; ADDRESS_LEN]) -> Self {
        Self(bytes)
    }

    /// Deterministic address for a named system account (contracts, faucet).
    pub fn from_label(label: &str) -> Self {
        let d = sha256_parts(&[b"reviewchain/label/", label.as_bytes()]);
        Self(d[32 - ADDRESS_LEN..].try_into().unwrap())
    }

    pub fn as_bytes(&self) -> &[u8; ADDRESS_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", self.to_hex())
    }
}

impl FromStr for Address {
    type Err = hex::FromHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; ADDRESS_LEN];
        hex::decode_to_slice(s, &mut out)?;
        Ok(Self(out))
    }
}

impl Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Canonical for Address {
    fn encode(&self, enc: &mut Encoder) {
        enc.fixed(&self.0);
    }
}

/// 65-byte recoverable signature: `r || s || recovery_id`.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature(pub [u8; SIGNATURE_LEN]);

impl Signature {
    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        bytes.try_into().ok().map(Self)
    }

    pub fn as_bytes(&self) -> &[u8; SIGNATURE_LEN] {
        &self.0
    }

    fn parts(&self) -> Option<(EcdsaSignature, RecoveryId)> {
        let sig = EcdsaSignature::from_slice(&self.0[..64]).ok()?;
        let recid = RecoveryId::from_byte(self.0[64])?;
        Some((sig, recid))
    }

    /// Public key that produced this signature over `message`, if any.
    pub fn recover(&self, message: &[u8]) -> Option<[u8; PUBLIC_KEY_LEN]> {
        let (sig, recid) = self.parts()?;
        let vk = VerifyingKey::recover_from_msg(message, &sig, recid).ok()?;
        Some(compress(&vk))
    }

    /// Address of the signer of `message`, if the signature is well formed.
    pub fn recover_address(&self, message: &[u8]) -> Option<Address> {
        self.recover(message)
            .map(|pk| derive_address(&pk).expect("recovered key is valid"))
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", hex::encode(self.0))
    }
}

impl Serialize for Signature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.0))
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut out = [0u8; SIGNATURE_LEN];
        hex::decode_to_slice(&s, &mut out).map_err(serde::de::Error::custom)?;
        Ok(Self(out))
    }
}

impl Canonical for Signature {
    fn encode(&self, enc: &mut Encoder) {
        enc.fixed(&self.0);
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    private_key: [u8; SECRET_LEN],
    public_key: [u8; PUBLIC_KEY_LEN],
}

impl KeyPair {
    pub fn from_secret(secret: [u8; SECRET_LEN]) -> Result<Self, IdentityError> {
        let sk = SigningKey::from_bytes(&secret.into())
            .map_err(|_| IdentityError::MalformedSecretKey)?;
        Ok(Self {
            private_key: secret,
            public_key: compress(sk.verifying_key()),
        })
    }

    pub fn public_key(&self) -> &[u8; PUBLIC_KEY_LEN] {
        &self.public_key
    }

    pub fn secret_bytes(&self) -> &[u8; SECRET_LEN] {
        &self.private_key
    }

    pub fn address(&self) -> Address {
        derive_address(&self.public_key).expect("own public key is valid")
    }

    fn signing_key(&self) -> SigningKey {
        SigningKey::from_bytes(&self.private_key.into()).expect("validated at construction")
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("address", &self.address())
            .field("private_key", &"<redacted>")
            .finish()
    }
}

fn compress(vk: &VerifyingKey) -> [u8; PUBLIC_KEY_LEN] {
    vk.to_encoded_point(true)
        .as_bytes()
        .try_into()
        .expect("compressed point is 33 bytes")
}

/// Deterministically derive a keypair from 32 bytes of entropy.
///
/// The secret is `SHA-256(domain || seed || counter)` for the smallest
/// counter yielding a valid curve scalar, which makes the all-zero seed usable.
pub fn generate_keypair(seed: &[u8]) -> Result<KeyPair, IdentityError> {
    if seed.len() != SECRET_LEN {
        return Err(IdentityError::MalformedSeed(seed.len()));
    }
    for counter in 0u8..=u8::MAX {
        let candidate = sha256_parts(&[KEYGEN_DOMAIN, seed, &[counter]]);
        if let Ok(kp) = KeyPair::from_secret(candidate) {
            return Ok(kp);
        }
    }
    unreachable!("256 consecutive invalid scalars")
}

pub fn derive_address(public_key: &[u8]) -> Result<Address, IdentityError> {
    VerifyingKey::from_sec1_bytes(public_key).map_err(|_| IdentityError::MalformedPublicKey)?;
    let digest = sha256(public_key);
    Ok(Address(digest[32 - ADDRESS_LEN..].try_into().unwrap()))
}

pub fn sign(message: &[u8], key: &KeyPair) -> Signature {
    let (sig, recid) = key
        .signing_key()
        .sign_recoverable(message)
        .expect("signing with a valid key cannot fail");
    let mut out = [0u8; SIGNATURE_LEN];
    out[..64].copy_from_slice(&sig.to_bytes());
    out[64] = recid.to_byte();
    Signature(out)
}

/// Malformed keys or signatures verify as `false`.
pub fn verify(message: &[u8], signature: &Signature, public_key: &[u8]) -> bool {
    signature
        .recover(message)
        .is_some_and(|pk| pk.as_slice() == public_key)
}

/// Key-stretching work presets for the keystore.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KdfPreset {
    Light,
    Standard,
}

impl KdfPreset {
    /// PBKDF2-HMAC-SHA256 iteration count.
    pub const fn iterations(self) -> u32 {
        match self {
            KdfPreset::Light => 1 << 12,
            KdfPreset::Standard => 1 << 18,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            KdfPreset::Light => "light",
            KdfPreset::Standard => "standard",
        }
    }
}

impl FromStr for KdfPreset {
    type Err = IdentityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "light" => Ok(Self::Light),
            "standard" => Ok(Self::Standard),
            other => Err(IdentityError::UnknownPreset(other.to_string())),
        }
    }
}

/// Passphrase-encrypted private key.
///
/// PBKDF2 stretches the passphrase into 64 bytes: the first half is a one-time
/// pad for the 32-byte secret (the salt is fresh per encryption), the second
/// half keys an HMAC-SHA256 over version, preset, salt and ciphertext.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Keystore {
    pub kdf_preset: KdfPreset,
    pub kdf_salt: Vec<u8>,
    pub ciphertext: Vec<u8>,
    pub mac: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct KeystoreFile {
    version: u32,
    kdf_preset: String,
    salt_hex: String,
    ciphertext_hex: String,
    mac_hex: String,
}

struct DerivedKeys {
    pad: [u8; 32],
    mac_key: [u8; 32],
}

fn stretch(passphrase: &str, salt: &[u8], preset: KdfPreset) -> DerivedKeys {
    let mut out = [0u8; 64];
    pbkdf2::pbkdf2_hmac::<Sha256>(passphrase.as_bytes(), salt, preset.iterations(), &mut out);
    DerivedKeys {
        pad: out[..32].try_into().unwrap(),
        mac_key: out[32..].try_into().unwrap(),
    }
}

fn keystore_mac(mac_key: &[u8; 32], preset: KdfPreset, salt: &[u8], ciphertext: &[u8]) -> Hmac<Sha256> {
    let mut mac = Hmac::<Sha256>::new_from_slice(mac_key).expect("hmac accepts any key length");
    let mut enc = Encoder::new();
    enc.u32(KEYSTORE_VERSION)
        .str(preset.as_str())
        .bytes(salt)
        .bytes(ciphertext);
    mac.update(&enc.finish());
    mac
}

pub fn keystore_encrypt(
    key: &KeyPair,
    passphrase: &str,
    preset: KdfPreset,
) -> Result<Keystore, IdentityError> {
    let mut salt = vec![0u8; KEYSTORE_SALT_LEN];
    rand::thread_rng().fill_bytes(&mut salt);
    keystore_encrypt_with_salt(key, passphrase, preset, &salt)
}

/// Same as [`keystore_encrypt`] with a caller-supplied salt, for reproducible runs.
pub fn keystore_encrypt_with_salt(
    key: &KeyPair,
    passphrase: &str,
    preset: KdfPreset,
    salt: &[u8],
) -> Result<Keystore, IdentityError> {
    if passphrase.is_empty() {
        return Err(IdentityError::EmptyPassphrase);
    }
    let keys = stretch(passphrase, salt, preset);
    let ciphertext: Vec<u8> = key
        .private_key
        .iter()
        .zip(keys.pad.iter())
        .map(|(a, b)| a ^ b)
        .collect();
    let mac = keystore_mac(&keys.mac_key, preset, salt, &ciphertext)
        .finalize()
        .into_bytes()
        .to_vec();
    Ok(Keystore {
        kdf_preset: preset,
        kdf_salt: salt.to_vec(),
        ciphertext,
        mac,
    })
}

pub fn keystore_decrypt(store: &Keystore, passphrase: &str) -> Result<KeyPair, IdentityError> {
    if passphrase.is_empty() {
        return Err(IdentityError::EmptyPassphrase);
    }
    if store.ciphertext.len() != SECRET_LEN {
        return Err(IdentityError::Corrupted(format!(
            "ciphertext is {} bytes",
            store.ciphertext.len()
        )));
    }
    let keys = stretch(passphrase, &store.kdf_salt, store.kdf_preset);
    keystore_mac(&keys.mac_key, store.kdf_preset, &store.kdf_salt, &store.ciphertext)
        .verify_slice(&store.mac)
        .map_err(|_| IdentityError::Authentication)?;
    let mut secret = [0u8; SECRET_LEN];
    for (i, byte) in secret.iter_mut().enumerate() {
        *byte = store.ciphertext[i] ^ keys.pad[i];
    }
    KeyPair::from_secret(secret)
}

impl Keystore {
    /// Keystore file: a JSON object with `version`, `kdf_preset`, `salt_hex`,
    /// `ciphertext_hex` and `mac_hex`; hex is lowercase.
    pub fn to_json(&self) -> String {
        let file = KeystoreFile {
            version: KEYSTORE_VERSION,
            kdf_preset: self.kdf_preset.as_str().to_string(),
            salt_hex: hex::encode(&self.kdf_salt),
            ciphertext_hex: hex::encode(&self.ciphertext),
            mac_hex: hex::encode(&self.mac),
        };
        serde_json::to_string_pretty(&file).expect("keystore serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, IdentityError> {
        let file: KeystoreFile =
            serde_json::from_str(text).map_err(|e| IdentityError::Corrupted(e.to_string()))?;
        if file.version != KEYSTORE_VERSION {
            return Err(IdentityError::UnsupportedVersion(file.version));
        }
        let field = |name: &str, value: &str| {
            hex::decode(value).map_err(|e| IdentityError::Corrupted(format!("{name}: {e}")))
        };
        Ok(Self {
            kdf_preset: file.kdf_preset.parse()?,
            kdf_salt: field("salt_hex", &file.salt_hex)?,
            ciphertext: field("ciphertext_hex", &file.ciphertext_hex)?,
            mac: field("mac_hex", &file.mac_hex)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp(byte: u8) -> KeyPair {
        generate_keypair(&[byte; 32]).unwrap()
    }

    #[test]
    fn seed_length_is_checked() {
        assert_eq!(
            generate_keypair(&[0u8; 31]).unwrap_err(),
            IdentityError::MalformedSeed(31)
        );
    }

    #[test]
    fn generation_is_deterministic_and_injective() {
        assert_eq!(kp(0), kp(0));
        assert_ne!(kp(0).public_key(), kp(1).public_key());
        assert_ne!(kp(0).address(), kp(1).address());
    }

    #[test]
    fn malformed_public_key_is_rejected() {
        assert_eq!(
            derive_address(&[2u8; 10]).unwrap_err(),
            IdentityError::MalformedPublicKey
        );
    }

    #[test]
    fn sign_verify_contract() {
        let a = kp(3);
        let b = kp(4);
        let sig = sign(b"hello", &a);
        assert!(verify(b"hello", &sig, a.public_key()));
        assert!(!verify(b"hellp", &sig, a.public_key()));
        assert!(!verify(b"hello", &sig, b.public_key()));
        assert_eq!(sig.recover_address(b"hello"), Some(a.address()));
    }

    #[test]
    fn malformed_signature_fails_closed() {
        let a = kp(3);
        assert!(!verify(b"m", &Signature([0u8; 65]), a.public_key()));
        assert!(!verify(b"m", &Signature([0xff; 65]), a.public_key()));
        assert!(Signature::from_slice(&[0u8; 64]).is_none());
    }

    #[test]
    fn debug_never_prints_secret() {
        let a = kp(5);
        let rendered = format!("{a:?}");
        assert!(!rendered.contains(&hex::encode(a.secret_bytes())));
    }

    #[test]
    fn keystore_light_round_trip_and_wrong_passphrase() {
        let a = kp(6);
        let store = keystore_encrypt(&a, "correct horse", KdfPreset::Light).unwrap();
        assert_eq!(keystore_decrypt(&store, "correct horse").unwrap(), a);
        assert_eq!(
            keystore_decrypt(&store, "battery staple").unwrap_err(),
            IdentityError::Authentication
        );
    }

    #[test]
    fn keystore_rejects_empty_passphrase() {
        assert_eq!(
            keystore_encrypt(&kp(1), "", KdfPreset::Light).unwrap_err(),
            IdentityError::EmptyPassphrase
        );
    }

    #[test]
    fn keystore_file_format() {
        let store = keystore_encrypt_with_salt(&kp(7), "pw", KdfPreset::Light, &[0xab; 16]).unwrap();
        let json = store.to_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["version"], 1);
        assert_eq!(value["kdf_preset"], "light");
        assert_eq!(value["salt_hex"], "abababababababababababababababab");
        assert_eq!(Keystore::from_json(&json).unwrap(), store);

        let bad = json.replace("\"light\"", "\"paranoid\"");
        assert_eq!(
            Keystore::from_json(&bad).unwrap_err(),
            IdentityError::UnknownPreset("paranoid".into())
        );
    }

    #[test]
    fn standard_preset_does_more_work_than_light() {
        assert!(KdfPreset::Standard.iterations() > KdfPreset::Light.iterations());
        assert_eq!(KdfPreset::Light.iterations(), 4096);
        assert_eq!(KdfPreset::Standard.iterations(), 262_144);
    }
}
