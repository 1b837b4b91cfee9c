//! C ABI for the reviewchain simulator.
//!
//! Every function returns an [`RcStatus`]; results come back through out
//! pointers. Objects are opaque handles freed with their `_free` function.
//! Strings returned through `char **` are NUL-terminated UTF-8 and must be
//! released with [`rc_string_free`]. After a non-OK status,
//! [`rc_last_error`] describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use reviewchain::economics::{self, exact_decimal, format_fixed, parse_decimal, BigRational};
use reviewchain::identity::{self, IdentityError, KdfPreset, KeyPair, Keystore, Signature};
use reviewchain::retrieval::{list_reviews, LocalReplica, RetrievalError};
use reviewchain::scenarios::{self, Grade, ScenarioConfig, ScenarioError};
use reviewchain::storage::{Storage, StorageError};
use serde_json::json;

pub const RC_ADDRESS_LEN: usize = 20;
pub const RC_PUBLIC_KEY_LEN: usize = 33;
pub const RC_SIGNATURE_LEN: usize = 65;
pub const RC_DIGEST_LEN: usize = 32;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    AuthenticationFailed = 4,
    Corrupted = 5,
    LedgerFailure = 6,
    StorageFailure = 7,
    ScenarioFailure = 8,
    RetrievalFailure = 9,
    Io = 10,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcKdfPreset {
    Light = 0,
    Standard = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcGrade {
    Good = 0,
    Medium = 1,
    Poor = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RcTradeoffRating {
    pub security: RcGrade,
    pub trust: RcGrade,
    pub cost: RcGrade,
}

/// A secp256k1 key pair.
pub struct RcKeyPair(KeyPair);

/// A local replica synced from a chain dump, with the payload stores it reads.
pub struct RcReader {
    replica: LocalReplica,
    storage: Storage,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(RcStatus, String);

type Outcome = Result<(), Failure>;

fn fail(status: RcStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

impl From<IdentityError> for Failure {
    fn from(e: IdentityError) -> Self {
        let status = match e {
            IdentityError::Authentication => RcStatus::AuthenticationFailed,
            IdentityError::Corrupted(_) | IdentityError::UnsupportedVersion(_) => RcStatus::Corrupted,
            _ => RcStatus::InvalidArgument,
        };
        fail(status, e.to_string())
    }
}

impl From<StorageError> for Failure {
    fn from(e: StorageError) -> Self {
        fail(RcStatus::StorageFailure, e.to_string())
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let status = match e {
            ScenarioError::InvalidConfig(_) => RcStatus::InvalidArgument,
            _ => RcStatus::ScenarioFailure,
        };
        fail(status, e.to_string())
    }
}

impl From<RetrievalError> for Failure {
    fn from(e: RetrievalError) -> Self {
        let status = match e {
            RetrievalError::Sync(_) => RcStatus::LedgerFailure,
            _ => RcStatus::RetrievalFailure,
        };
        fail(status, e.to_string())
    }
}

fn set_last_error(msg: Option<String>) {
    let msg = msg.map(|m| CString::new(m.replace('\0', " ")).expect("NUL bytes removed"));
    LAST_ERROR.with(|cell| *cell.borrow_mut() = msg);
}

/// Run `body`, turning errors and panics into a status code.
fn guard(body: impl FnOnce() -> Outcome) -> RcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error(None);
            RcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(Some(msg));
            status
        }
        Err(_) => {
            set_last_error(Some("internal panic".into()));
            RcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(RcStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RcStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn bytes_arg<'a>(p: *const u8, len: usize, name: &str) -> Result<&'a [u8], Failure> {
    if p.is_null() {
        if len == 0 {
            return Ok(&[]);
        }
        return Err(fail(RcStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(RcStatus::NullPointer, format!("{name} is null")))
}

unsafe fn write_bytes(out: *mut u8, bytes: &[u8]) -> Outcome {
    if out.is_null() {
        return Err(fail(RcStatus::NullPointer, "output buffer is null"));
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), out, bytes.len());
    Ok(())
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Outcome {
    if out.is_null() {
        return Err(fail(RcStatus::NullPointer, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Outcome {
    let c = CString::new(s).map_err(|_| fail(RcStatus::Corrupted, "string contains NUL"))?;
    write_out(out, c.into_raw())
}

/// Derive a key pair from a 32-byte seed.
///
/// # Safety
/// `seed` must point to `seed_len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_keypair_generate(seed: *const u8, seed_len: usize, out: *mut *mut RcKeyPair) -> RcStatus {
    guard(|| {
        let key = identity::generate_keypair(bytes_arg(seed, seed_len, "seed")?)?;
        write_out(out, Box::into_raw(Box::new(RcKeyPair(key))))
    })
}

/// # Safety
/// `key` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rc_keypair_free(key: *mut RcKeyPair) {
    if !key.is_null() {
        drop(Box::from_raw(key));
    }
}

/// Write the 20-byte address of `key` to `out`.
///
/// # Safety
/// `key` must be a live handle; `out` must hold `RC_ADDRESS_LEN` bytes.
#[no_mangle]
pub unsafe extern "C" fn rc_keypair_address(key: *const RcKeyPair, out: *mut u8) -> RcStatus {
    guard(|| write_bytes(out, &ref_arg(key, "key")?.0.address().0))
}

/// Write the 33-byte compressed public key of `key` to `out`.
///
/// # Safety
/// `key` must be a live handle; `out` must hold `RC_PUBLIC_KEY_LEN` bytes.
#[no_mangle]
pub unsafe extern "C" fn rc_keypair_public_key(key: *const RcKeyPair, out: *mut u8) -> RcStatus {
    guard(|| write_bytes(out, ref_arg(key, "key")?.0.public_key()))
}

/// Address of a 33-byte compressed public key.
///
/// # Safety
/// `public_key` must hold `RC_PUBLIC_KEY_LEN` bytes; `out` must hold `RC_ADDRESS_LEN`.
#[no_mangle]
pub unsafe extern "C" fn rc_derive_address(public_key: *const u8, out: *mut u8) -> RcStatus {
    guard(|| {
        let address = identity::derive_address(bytes_arg(public_key, RC_PUBLIC_KEY_LEN, "public_key")?)?;
        write_bytes(out, &address.0)
    })
}

/// Sign `message`, writing a 65-byte recoverable signature to `out`.
///
/// # Safety
/// `message` must point to `len` bytes; `out` must hold `RC_SIGNATURE_LEN` bytes.
#[no_mangle]
pub unsafe extern "C" fn rc_sign(key: *const RcKeyPair, message: *const u8, len: usize, out: *mut u8) -> RcStatus {
    guard(|| {
        let key = ref_arg(key, "key")?;
        let sig = identity::sign(bytes_arg(message, len, "message")?, &key.0);
        write_bytes(out, &sig.0)
    })
}

/// Check `signature` over `message` against `public_key`.
///
/// # Safety
/// Buffers must hold `len`, `RC_SIGNATURE_LEN` and `RC_PUBLIC_KEY_LEN` bytes.
#[no_mangle]
pub unsafe extern "C" fn rc_verify(
    message: *const u8,
    len: usize,
    signature: *const u8,
    public_key: *const u8,
    out_valid: *mut bool,
) -> RcStatus {
    guard(|| {
        let message = bytes_arg(message, len, "message")?;
        let sig = Signature::from_slice(bytes_arg(signature, RC_SIGNATURE_LEN, "signature")?)
            .ok_or_else(|| fail(RcStatus::InvalidArgument, "bad signature length"))?;
        let public_key = bytes_arg(public_key, RC_PUBLIC_KEY_LEN, "public_key")?;
        write_out(out_valid, identity::verify(message, &sig, public_key))
    })
}

/// Encrypt `key` under `passphrase`, returning the keystore file as JSON.
///
/// # Safety
/// `passphrase` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_keystore_encrypt(
    key: *const RcKeyPair,
    passphrase: *const c_char,
    preset: RcKdfPreset,
    out_json: *mut *mut c_char,
) -> RcStatus {
    guard(|| {
        let key = ref_arg(key, "key")?;
        let preset = match preset {
            RcKdfPreset::Light => KdfPreset::Light,
            RcKdfPreset::Standard => KdfPreset::Standard,
        };
        let store = identity::keystore_encrypt(&key.0, str_arg(passphrase, "passphrase")?, preset)?;
        write_string(out_json, store.to_json())
    })
}

/// Decrypt a keystore file. A wrong passphrase or altered file yields
/// `AuthenticationFailed`.
///
/// # Safety
/// `json` and `passphrase` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_keystore_decrypt(
    json: *const c_char,
    passphrase: *const c_char,
    out: *mut *mut RcKeyPair,
) -> RcStatus {
    guard(|| {
        let store = Keystore::from_json(str_arg(json, "json")?)?;
        let key = identity::keystore_decrypt(&store, str_arg(passphrase, "passphrase")?)?;
        write_out(out, Box::into_raw(Box::new(RcKeyPair(key))))
    })
}

/// Storage cost of `bytes` at `gas_price_gwei` and `eth_usd` (a decimal
/// string), as JSON. Exact values are decimal strings, or `n/d` fractions
/// when they do not terminate; `*_rounded` fields are for display.
/// `review_count` 0 omits the per-review figure.
///
/// # Safety
/// `eth_usd` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_storage_cost(
    bytes: u64,
    gas_price_gwei: u64,
    eth_usd: *const c_char,
    review_count: u64,
    out_json: *mut *mut c_char,
) -> RcStatus {
    guard(|| {
        let text = str_arg(eth_usd, "eth_usd")?;
        let rate = parse_decimal(text).ok_or_else(|| fail(RcStatus::InvalidArgument, format!("bad rate `{text}`")))?;
        let quote = economics::storage_cost(bytes, gas_price_gwei, &rate)
            .map_err(|e| fail(RcStatus::InvalidArgument, e.to_string()))?;
        let exact = |r: &BigRational| exact_decimal(r, 30).unwrap_or_else(|| r.to_string());
        let per_review = if review_count > 0 {
            let per = economics::per_review_cost(&quote, review_count)
                .map_err(|e| fail(RcStatus::InvalidArgument, e.to_string()))?;
            json!({ "exact": exact(&per), "rounded": economics::per_review_display(&per) })
        } else {
            serde_json::Value::Null
        };
        let doc = json!({
            "bytes": quote.bytes,
            "gas": quote.gas,
            "gas_price_gwei": quote.gas_price_gwei,
            "eth": exact(&quote.eth),
            "usd": exact(&quote.usd),
            "usd_rounded": format_fixed(&quote.usd, 0),
            "usd_per_review": per_review,
        });
        write_string(out_json, doc.to_string())
    })
}

fn grade(g: Grade) -> RcGrade {
    match g {
        Grade::Good => RcGrade::Good,
        Grade::Medium => RcGrade::Medium,
        Grade::Poor => RcGrade::Poor,
    }
}

/// Rate a scenario config (TOML) on security, trust and cost.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_evaluate_tradeoffs(config_toml: *const c_char, out: *mut RcTradeoffRating) -> RcStatus {
    guard(|| {
        let config = ScenarioConfig::from_toml(str_arg(config_toml, "config_toml")?)?;
        let r = scenarios::evaluate_tradeoffs(&config);
        write_out(
            out,
            RcTradeoffRating {
                security: grade(r.security),
                trust: grade(r.trust),
                cost: grade(r.cost),
            },
        )
    })
}

/// Run a scenario from a TOML config and return its report as JSON. When
/// `out_dir` is non-null the chain dump (`chain.ndjson`) and payload stores
/// (`storage/`) are written there for [`rc_reader_open`].
///
/// # Safety
/// `config_toml` must be a NUL-terminated string, `out_dir` one or null, and
/// `out_report_json` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_scenario_run(
    config_toml: *const c_char,
    out_dir: *const c_char,
    out_report_json: *mut *mut c_char,
) -> RcStatus {
    guard(|| {
        let config = ScenarioConfig::from_toml(str_arg(config_toml, "config_toml")?)?;
        let dir = opt_str_arg(out_dir, "out_dir")?.map(Path::new);
        let storage = match dir {
            Some(d) => Storage::open(&d.join("storage"))?,
            None => Storage::in_memory(),
        };
        let run = scenarios::execute(&config, storage)?;
        if let Some(d) = dir {
            std::fs::write(d.join("chain.ndjson"), run.chain.dump()).map_err(|e| fail(RcStatus::Io, e.to_string()))?;
        }
        write_string(out_report_json, run.report.to_json())
    })
}

/// Sync a local replica from a chain dump. `storage_dir` names the payload
/// stores written by a scenario run; null uses empty in-memory stores, so
/// only on-chain payloads verify.
///
/// # Safety
/// `chain_dump` must be a NUL-terminated string, `storage_dir` one or null,
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_reader_open(
    chain_dump: *const c_char,
    storage_dir: *const c_char,
    out: *mut *mut RcReader,
) -> RcStatus {
    guard(|| {
        let dump = str_arg(chain_dump, "chain_dump")?;
        let storage = match opt_str_arg(storage_dir, "storage_dir")? {
            Some(d) => Storage::open(Path::new(d))?,
            None => Storage::in_memory(),
        };
        let mut replica = LocalReplica::new();
        replica.sync_local(dump)?;
        write_out(out, Box::into_raw(Box::new(RcReader { replica, storage })))
    })
}

/// Write the replica's 32-byte state root to `out`.
///
/// # Safety
/// `reader` must be a live handle; `out` must hold `RC_DIGEST_LEN` bytes.
#[no_mangle]
pub unsafe extern "C" fn rc_reader_state_root(reader: *const RcReader, out: *mut u8) -> RcStatus {
    guard(|| {
        let reader = ref_arg(reader, "reader")?;
        let root = reader
            .replica
            .state_root()
            .ok_or_else(|| fail(RcStatus::RetrievalFailure, "reader not synced"))?;
        write_bytes(out, &root)
    })
}

/// Verified reviews of `product_id` (all versions when `version` is null) as
/// a JSON array of `{review, text, status}` records.
///
/// # Safety
/// `reader` must be a live handle, `product_id` a NUL-terminated string,
/// `version` one or null, and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_reader_list_reviews(
    reader: *const RcReader,
    product_id: *const c_char,
    version: *const c_char,
    out_json: *mut *mut c_char,
) -> RcStatus {
    guard(|| {
        let reader = ref_arg(reader, "reader")?;
        let listed = list_reviews(
            &reader.replica,
            &reader.storage,
            str_arg(product_id, "product_id")?,
            opt_str_arg(version, "version")?,
        )?;
        let text = serde_json::to_string(&listed).map_err(|e| fail(RcStatus::Corrupted, e.to_string()))?;
        write_string(out_json, text)
    })
}

/// # Safety
/// `reader` must come from [`rc_reader_open`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rc_reader_free(reader: *mut RcReader) {
    if !reader.is_null() {
        drop(Box::from_raw(reader));
    }
}

/// # Safety
/// `s` must be a string returned by this library, freed at most once. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn rc_last_error() -> *const c_char {
    LAST_ERROR.with(|cell| cell.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
