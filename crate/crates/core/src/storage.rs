//! Review payload storage: inline on-chain bytes, a digest-anchored centralized
//! store, or a content-addressed blob store.
//!
//! Payloads pass through a [`PayloadCodec`] before storage. Anchors and content
//! ids are digests of the *encoded* bytes, and every fetch from an off-chain
//! store re-hashes what it read before handing it back.
//!
//! On-disk layouts:
//! - content-addressed store: a directory with one file per blob, named by the
//!   lowercase hex content id, holding the raw encoded bytes
//! - centralized store: `central.log`, an append-only sequence of records
//!   `u32 BE locator length | locator | u32 BE payload length | payload`, and
//!   `central.idx`, one line per write `locator offset length` (later lines win)

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{self, sha256, Digest};
use crate::wire::{Canonical, Decoder, Encoder, WireError};

/// Upper bound on review text, in bytes.
pub const MAX_REVIEW_TEXT: usize = 8 * 1024;

const CENTRAL_LOG: &str = "central.log";
const CENTRAL_INDEX: &str = "central.idx";

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("payload must not be empty")]
    EmptyPayload,
    #[error("{0:?} backend unavailable")]
    Unavailable(StorageKind),
    #[error("payload not found: {0}")]
    NotFound(String),
    #[error("tamper detected: expected digest {}, got {}", digest::to_hex(.expected), digest::to_hex(.actual))]
    TamperDetected { expected: Digest, actual: Digest },
    #[error("operation not supported by the {0:?} backend")]
    WrongBackend(StorageKind),
    #[error("codec `{codec}` failed to decode: {reason}")]
    Codec { codec: String, reason: String },
    #[error("reference of kind {found:?} given to the {expected:?} backend")]
    KindMismatch { expected: StorageKind, found: StorageKind },
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageKind {
    OnChain,
    Anchored,
    ContentAddressed,
}

impl StorageKind {
    pub const ALL: [StorageKind; 3] = [
        StorageKind::OnChain,
        StorageKind::Anchored,
        StorageKind::ContentAddressed,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageRef {
    OnChain(#[serde(with = "digest::hex_bytes")] Vec<u8>),
    Anchored {
        #[serde(with = "digest::hex32")]
        digest: Digest,
        locator: String,
    },
    ContentAddressed(#[serde(with = "digest::hex32")] Digest),
}

impl StorageRef {
    pub fn kind(&self) -> StorageKind {
        match self {
            StorageRef::OnChain(_) => StorageKind::OnChain,
            StorageRef::Anchored { .. } => StorageKind::Anchored,
            StorageRef::ContentAddressed(_) => StorageKind::ContentAddressed,
        }
    }

    /// Digest of the encoded payload this reference commits to.
    pub fn payload_digest(&self) -> Digest {
        match self {
            StorageRef::OnChain(bytes) => sha256(bytes),
            StorageRef::Anchored { digest, .. } => *digest,
            StorageRef::ContentAddressed(id) => *id,
        }
    }

    /// Bytes of payload data this reference keeps on chain. Anchored locators
    /// are derived from the digest by the store and are not charged.
    pub fn on_chain_bytes(&self) -> usize {
        match self {
            StorageRef::OnChain(bytes) => bytes.len(),
            StorageRef::Anchored { .. } | StorageRef::ContentAddressed(_) => 32,
        }
    }

    pub fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, WireError> {
        Ok(match dec.u8()? {
            0 => StorageRef::OnChain(dec.bytes()?),
            1 => StorageRef::Anchored {
                digest: dec.fixed()?,
                locator: dec.string()?,
            },
            2 => StorageRef::ContentAddressed(dec.fixed()?),
            _ => return Err(WireError::Invalid("storage reference tag")),
        })
    }
}

impl Canonical for StorageRef {
    fn encode(&self, enc: &mut Encoder) {
        match self {
            StorageRef::OnChain(bytes) => {
                enc.u8(0).bytes(bytes);
            }
            StorageRef::Anchored { digest, locator } => {
                enc.u8(1).fixed(digest).str(locator);
            }
            StorageRef::ContentAddressed(id) => {
                enc.u8(2).fixed(id);
            }
        }
    }
}

/// Reversible payload transform applied before storage.
pub trait PayloadCodec: Send + Sync {
    fn id(&self) -> &str;
    fn encode(&self, payload: &[u8]) -> Vec<u8>;
    fn decode(&self, encoded: &[u8]) -> Result<Vec<u8>, StorageError>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityCodec;

impl PayloadCodec for IdentityCodec {
    fn id(&self) -> &str {
        "identity"
    }

    fn encode(&self, payload: &[u8]) -> Vec<u8> {
        payload.to_vec()
    }

    fn decode(&self, encoded: &[u8]) -> Result<Vec<u8>, StorageError> {
        Ok(encoded.to_vec())
    }
}

/// A place encoded payloads can be put and read back from.
pub trait PayloadBackend: Send + Sync {
    fn kind(&self) -> StorageKind;
    fn put(&self, encoded: &[u8]) -> Result<StorageRef, StorageError>;
    /// Returns the encoded bytes, verified against the reference.
    fn get(&self, reference: &StorageRef) -> Result<Vec<u8>, StorageError>;

    /// Silently replace the bytes behind `locator`. Only the centralized store
    /// supports this; it models an operator editing its own database.
    fn tamper(&self, _locator: &str, _bytes: &[u8]) -> Result<(), StorageError> {
        Err(StorageError::WrongBackend(self.kind()))
    }
}

fn check_digest(expected: Digest, bytes: &[u8]) -> Result<(), StorageError> {
    let actual = sha256(bytes);
    if actual == expected {
        Ok(())
    } else {
        Err(StorageError::TamperDetected { expected, actual })
    }
}

/// Payload bytes live inside the reference itself.
#[derive(Debug, Default)]
pub struct OnChainBackend;

impl PayloadBackend for OnChainBackend {
    fn kind(&self) -> StorageKind {
        StorageKind::OnChain
    }

    fn put(&self, encoded: &[u8]) -> Result<StorageRef, StorageError> {
        Ok(StorageRef::OnChain(encoded.to_vec()))
    }

    fn get(&self, reference: &StorageRef) -> Result<Vec<u8>, StorageError> {
        match reference {
            StorageRef::OnChain(bytes) => Ok(bytes.clone()),
            other => Err(StorageError::KindMismatch {
                expected: StorageKind::OnChain,
                found: other.kind(),
            }),
        }
    }
}

#[derive(Debug)]
struct CentralLog {
    log: File,
    index: File,
}

/// Operator-run database keyed by opaque locators, anchored on chain by digest.
#[derive(Debug)]
pub struct CentralStore {
    entries: RwLock<BTreeMap<String, Vec<u8>>>,
    disk: Option<RwLock<CentralLog>>,
    available: AtomicBool,
}

impl Default for CentralStore {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl CentralStore {
    pub fn in_memory() -> Self {
        Self {
            entries: RwLock::new(BTreeMap::new()),
            disk: None,
            available: AtomicBool::new(true),
        }
    }

    /// Open (or create) a store persisted as an append log plus index in `dir`.
    pub fn open(dir: &Path) -> Result<Self, StorageError> {
        fs::create_dir_all(dir)?;
        let mut log = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(dir.join(CENTRAL_LOG))?;
        let index = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(dir.join(CENTRAL_INDEX))?;

        let mut entries = BTreeMap::new();
        for line in BufReader::new(File::open(dir.join(CENTRAL_INDEX))?).lines() {
            let line = line?;
            let mut fields = line.split(' ');
            let (Some(locator), Some(offset), Some(len), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(StorageError::Corrupt(format!("bad index line `{line}`")));
            };
            let offset: u64 = offset
                .parse()
                .map_err(|_| StorageError::Corrupt(format!("bad offset in `{line}`")))?;
            let len: usize = len
                .parse()
                .map_err(|_| StorageError::Corrupt(format!("bad length in `{line}`")))?;
            log.seek(SeekFrom::Start(offset))?;
            let mut buf = vec![0u8; len];
            log.read_exact(&mut buf)?;
            entries.insert(locator.to_string(), buf);
        }
        Ok(Self {
            entries: RwLock::new(entries),
            disk: Some(RwLock::new(CentralLog { log, index })),
            available: AtomicBool::new(true),
        })
    }

    pub fn set_available(&self, available: bool) {
        self.available.store(available, Ordering::SeqCst);
    }

    pub fn locator_for(digest: &Digest) -> String {
        format!("reviews/{}", digest::to_hex(digest))
    }

    fn ensure_available(&self) -> Result<(), StorageError> {
        if self.available.load(Ordering::SeqCst) {
            Ok(())
        } else {
            Err(StorageError::Unavailable(StorageKind::Anchored))
        }
    }

    fn write(&self, locator: &str, bytes: &[u8]) -> Result<(), StorageError> {
        let mut entries = self.entries.write().expect("central store lock poisoned");
        if let Some(disk) = &self.disk {
            let mut disk = disk.write().expect("central log lock poisoned");
            let start = disk.log.seek(SeekFrom::End(0))?;
            let mut record = Encoder::new();
            record.str(locator).bytes(bytes);
            disk.log.write_all(&record.finish())?;
            let payload_offset = start + 4 + locator.len() as u64 + 4;
            writeln!(disk.index, "{locator} {payload_offset} {}", bytes.len())?;
            disk.log.flush()?;
            disk.index.flush()?;
        }
        entries.insert(locator.to_string(), bytes.to_vec());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("central store lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl PayloadBackend for CentralStore {
    fn kind(&self) -> StorageKind {
        StorageKind::Anchored
    }

    fn put(&self, encoded: &[u8]) -> Result<StorageRef, StorageError> {
        self.ensure_available()?;
        let digest = sha256(encoded);
        let locator = Self::locator_for(&digest);
        self.write(&locator, encoded)?;
        Ok(StorageRef::Anchored { digest, locator })
    }

    fn get(&self, reference: &StorageRef) -> Result<Vec<u8>, StorageError> {
        let StorageRef::Anchored { digest, locator } = reference else {
            return Err(StorageError::KindMismatch {
                expected: StorageKind::Anchored,
                found: reference.kind(),
            });
        };
        self.ensure_available()?;
        let bytes = self
            .entries
            .read()
            .expect("central store lock poisoned")
            .get(locator)
            .cloned()
            .ok_or_else(|| StorageError::NotFound(locator.clone()))?;
        check_digest(*digest, &bytes)?;
        Ok(bytes)
    }

    fn tamper(&self, locator: &str, bytes: &[u8]) -> Result<(), StorageError> {
        if !self
            .entries
            .read()
            .expect("central store lock poisoned")
            .contains_key(locator)
        {
            return Err(StorageError::NotFound(locator.to_string()));
        }
        self.write(locator, bytes)
    }
}

/// Immutable blob store keyed by the digest of each blob.
#[derive(Debug)]
pub struct CasStore {
    blobs: RwLock<BTreeMap<Digest, Vec<u8>>>,
    dir: Option<PathBuf>,
    available: AtomicBool,
}

impl Default for CasStore {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl CasStore {
    pub fn in_memory() -> Self {
        Self {
            blobs: RwLock::new(BTreeMap::new()),
            dir: None,
            available: AtomicBool::new(true),
        }
    }

    /// Directory-backed store. Existing blobs are read lazily on fetch.
    pub fn open(dir: &Path) -> Result<Self, StorageError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            blobs: RwLock::new(BTreeMap::new()),
            dir: Some(dir.to_path_buf()),
            available: AtomicBool::new(true),
        })
    }

    pub fn set_available(&self, available: bool) {
        self.available.store(available, Ordering::SeqCst);
    }

    fn ensure_available(&self) -> Result<(), StorageError> {
        if self.available.load(Ordering::SeqCst) {
            Ok(())
        } else {
            Err(StorageError::Unavailable(StorageKind::ContentAddressed))
        }
    }

    /// Number of distinct blobs held.
    pub fn len(&self) -> usize {
        match &self.dir {
            Some(dir) => fs::read_dir(dir).map(|d| d.count()).unwrap_or(0),
            None => self.blobs.read().expect("cas lock poisoned").len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl PayloadBackend for CasStore {
    fn kind(&self) -> StorageKind {
        StorageKind::ContentAddressed
    }

    fn put(&self, encoded: &[u8]) -> Result<StorageRef, StorageError> {
        self.ensure_available()?;
        let id = sha256(encoded);
        let mut blobs = self.blobs.write().expect("cas lock poisoned");
        match &self.dir {
            Some(dir) => {
                let path = dir.join(digest::to_hex(&id));
                if !path.exists() {
                    let tmp = dir.join(format!(".{}.tmp", digest::to_hex(&id)));
                    fs::write(&tmp, encoded)?;
                    fs::rename(&tmp, &path)?;
                }
            }
            None => {
                blobs.entry(id).or_insert_with(|| encoded.to_vec());
            }
        }
        Ok(StorageRef::ContentAddressed(id))
    }

    fn get(&self, reference: &StorageRef) -> Result<Vec<u8>, StorageError> {
        let StorageRef::ContentAddressed(id) = reference else {
            return Err(StorageError::KindMismatch {
                expected: StorageKind::ContentAddressed,
                found: reference.kind(),
            });
        };
        self.ensure_available()?;
        let bytes = match &self.dir {
            Some(dir) => match fs::read(dir.join(digest::to_hex(id))) {
                Ok(bytes) => bytes,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    return Err(StorageError::NotFound(digest::to_hex(id)))
                }
                Err(e) => return Err(e.into()),
            },
            None => self
                .blobs
                .read()
                .expect("cas lock poisoned")
                .get(id)
                .cloned()
                .ok_or_else(|| StorageError::NotFound(digest::to_hex(id)))?,
        };
        check_digest(*id, &bytes)?;
        Ok(bytes)
    }
}

/// The three backends behind one codec.
pub struct Storage {
    codec: Arc<dyn PayloadCodec>,
    on_chain: OnChainBackend,
    central: CentralStore,
    cas: CasStore,
}

impl Default for Storage {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl std::fmt::Debug for Storage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Storage")
            .field("codec", &self.codec.id())
            .field("central", &self.central.len())
            .field("cas", &self.cas.len())
            .finish()
    }
}

impl Storage {
    pub fn in_memory() -> Self {
        Self::with_codec(Arc::new(IdentityCodec))
    }

    pub fn with_codec(codec: Arc<dyn PayloadCodec>) -> Self {
        Self {
            codec,
            on_chain: OnChainBackend,
            central: CentralStore::in_memory(),
            cas: CasStore::in_memory(),
        }
    }

    /// Disk-backed stores under `dir/central` and `dir/cas`.
    pub fn open(dir: &Path) -> Result<Self, StorageError> {
        Ok(Self {
            codec: Arc::new(IdentityCodec),
            on_chain: OnChainBackend,
            central: CentralStore::open(&dir.join("central"))?,
            cas: CasStore::open(&dir.join("cas"))?,
        })
    }

    pub fn codec(&self) -> &dyn PayloadCodec {
        self.codec.as_ref()
    }

    pub fn backend(&self, kind: StorageKind) -> &dyn PayloadBackend {
        match kind {
            StorageKind::OnChain => &self.on_chain,
            StorageKind::Anchored => &self.central,
            StorageKind::ContentAddressed => &self.cas,
        }
    }

    pub fn central(&self) -> &CentralStore {
        &self.central
    }

    pub fn cas(&self) -> &CasStore {
        &self.cas
    }

    pub fn store_payload(&self, kind: StorageKind, payload: &[u8]) -> Result<StorageRef, StorageError> {
        if payload.is_empty() {
            return Err(StorageError::EmptyPayload);
        }
        let encoded = self.codec.encode(payload);
        self.backend(kind).put(&encoded)
    }

    /// Encoded bytes behind `reference`, verified against its digest.
    pub fn fetch_encoded(&self, reference: &StorageRef) -> Result<Vec<u8>, StorageError> {
        self.backend(reference.kind()).get(reference)
    }

    pub fn fetch_payload(&self, reference: &StorageRef) -> Result<Vec<u8>, StorageError> {
        let encoded = self.fetch_encoded(reference)?;
        self.codec.decode(&encoded)
    }

    pub fn tamper_centralized(&self, locator: &str, bytes: &[u8]) -> Result<(), StorageError> {
        self.central.tamper(locator, bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_on_every_backend() {
        let storage = Storage::in_memory();
        for kind in StorageKind::ALL {
            let r = storage.store_payload(kind, b"five stars").unwrap();
            assert_eq!(r.kind(), kind);
            assert_eq!(storage.fetch_payload(&r).unwrap(), b"five stars");
        }
    }

    #[test]
    fn empty_payload_rejected() {
        let storage = Storage::in_memory();
        assert!(matches!(
            storage.store_payload(StorageKind::OnChain, b""),
            Err(StorageError::EmptyPayload)
        ));
    }

    #[test]
    fn cas_deduplicates() {
        let storage = Storage::in_memory();
        let a = storage.store_payload(StorageKind::ContentAddressed, b"same").unwrap();
        let b = storage.store_payload(StorageKind::ContentAddressed, b"same").unwrap();
        assert_eq!(a, b);
        assert_eq!(storage.cas().len(), 1);
    }

    #[test]
    fn anchored_digest_is_plain_sha256_of_payload() {
        let storage = Storage::in_memory();
        let r = storage.store_payload(StorageKind::Anchored, b"abc").unwrap();
        let StorageRef::Anchored { digest, .. } = r else { panic!() };
        assert_eq!(
            digest::to_hex(&digest),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn central_tamper_is_detected() {
        let storage = Storage::in_memory();
        let r = storage.store_payload(StorageKind::Anchored, b"honest").unwrap();
        let StorageRef::Anchored { locator, .. } = &r else { panic!() };
        storage.tamper_centralized(locator, b"edited").unwrap();
        assert!(matches!(
            storage.fetch_payload(&r),
            Err(StorageError::TamperDetected { .. })
        ));
    }

    #[test]
    fn tamper_with_identical_bytes_is_harmless() {
        let storage = Storage::in_memory();
        let r = storage.store_payload(StorageKind::Anchored, b"same").unwrap();
        let StorageRef::Anchored { locator, .. } = &r else { panic!() };
        storage.tamper_centralized(locator, b"same").unwrap();
        assert_eq!(storage.fetch_payload(&r).unwrap(), b"same");
    }

    #[test]
    fn tamper_hook_only_on_central_store() {
        let storage = Storage::in_memory();
        for kind in [StorageKind::OnChain, StorageKind::ContentAddressed] {
            assert!(matches!(
                storage.backend(kind).tamper("x", b"y"),
                Err(StorageError::WrongBackend(k)) if k == kind
            ));
        }
    }

    #[test]
    fn unknown_content_id_not_found() {
        let storage = Storage::in_memory();
        assert!(matches!(
            storage.fetch_payload(&StorageRef::ContentAddressed([9; 32])),
            Err(StorageError::NotFound(_))
        ));
    }

    #[test]
    fn outage_flag_makes_backend_unavailable() {
        let storage = Storage::in_memory();
        let r = storage.store_payload(StorageKind::Anchored, b"p").unwrap();
        storage.central().set_available(false);
        assert!(matches!(
            storage.fetch_payload(&r),
            Err(StorageError::Unavailable(StorageKind::Anchored))
        ));
        storage.central().set_available(true);
        assert!(storage.fetch_payload(&r).is_ok());
    }

    #[test]
    fn storage_ref_wire_round_trip() {
        for r in [
            StorageRef::OnChain(b"x".to_vec()),
            StorageRef::Anchored { digest: [1; 32], locator: "reviews/01".into() },
            StorageRef::ContentAddressed([2; 32]),
        ] {
            let bytes = r.to_canonical();
            let mut dec = Decoder::new(&bytes);
            assert_eq!(StorageRef::decode_from(&mut dec).unwrap(), r);
            dec.finish().unwrap();
        }
    }
}
