use serde::{Deserialize, Serialize};

use crate::contracts::ContractCall;
use crate::digest::{self, sha256, Digest};
use crate::identity::{self, Address, KeyPair, Signature};
use crate::wire::{Canonical, Decoder, Encoder, WireError};

use super::{GasSchedule, Gwei};

const TX_DOMAIN: &str = "reviewchain/tx/v1";

/// A signed message carrying a contract call and its fee parameters.
///
/// Canonical layout: `sender | recipient | nonce u64 | payload (len-prefixed) |
/// gas_price u64 | gas_limit u64 | signature (65 bytes)`. The signature covers
/// the same fields, minus itself, prefixed by a domain tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedTransaction {
    pub sender: Address,
    pub recipient: Address,
    pub nonce: u64,
    #[serde(with = "digest::hex_bytes")]
    pub payload: Vec<u8>,
    pub gas_price: Gwei,
    pub gas_limit: u64,
    pub signature: Signature,
}

impl SignedTransaction {
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.str(TX_DOMAIN);
        self.encode_unsigned(&mut enc);
        enc.finish()
    }

    fn encode_unsigned(&self, enc: &mut Encoder) {
        enc.put(&self.sender)
            .put(&self.recipient)
            .u64(self.nonce)
            .bytes(&self.payload)
            .u64(self.gas_price)
            .u64(self.gas_limit);
    }

    pub fn hash(&self) -> Digest {
        sha256(&self.to_canonical())
    }

    /// True when the signature recovers to `sender` over the other fields.
    pub fn verify(&self) -> bool {
        self.signature.recover_address(&self.signing_bytes()) == Some(self.sender)
    }

    pub fn max_fee(&self) -> u128 {
        u128::from(self.gas_limit) * u128::from(self.gas_price)
    }

    pub fn call(&self) -> Option<ContractCall> {
        ContractCall::decode(&self.payload).ok()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        let mut dec = Decoder::new(bytes);
        let tx = Self {
            sender: Address(dec.fixed()?),
            recipient: Address(dec.fixed()?),
            nonce: dec.u64()?,
            payload: dec.bytes()?,
            gas_price: dec.u64()?,
            gas_limit: dec.u64()?,
            signature: Signature(dec.fixed()?),
        };
        dec.finish()?;
        Ok(tx)
    }
}

impl Canonical for SignedTransaction {
    fn encode(&self, enc: &mut Encoder) {
        self.encode_unsigned(enc);
        enc.put(&self.signature);
    }
}

/// Build and sign a transaction whose gas limit is exactly what the payload
/// will be metered at under the default schedule.
pub fn build_transaction(
    sender_key: &KeyPair,
    recipient: Address,
    payload: Vec<u8>,
    gas_price: Gwei,
    nonce: u64,
) -> SignedTransaction {
    let gas_limit = GasSchedule::default().gas_for_payload(&payload);
    build_transaction_with_limit(sender_key, recipient, payload, gas_price, gas_limit, nonce)
}

pub fn build_transaction_with_limit(
    sender_key: &KeyPair,
    recipient: Address,
    payload: Vec<u8>,
    gas_price: Gwei,
    gas_limit: u64,
    nonce: u64,
) -> SignedTransaction {
    let mut tx = SignedTransaction {
        sender: sender_key.address(),
        recipient,
        nonce,
        payload,
        gas_price,
        gas_limit,
        signature: Signature([0; identity::SIGNATURE_LEN]),
    };
    tx.signature = identity::sign(&tx.signing_bytes(), sender_key);
    tx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::generate_keypair;

    fn tx() -> SignedTransaction {
        let key = generate_keypair(&[1; 32]).unwrap();
        build_transaction(&key, Address([9; 20]), b"\x06\0\0\0\0\0\0\0\x01".to_vec(), 5, 0)
    }

    #[test]
    fn built_transaction_verifies_and_round_trips() {
        let t = tx();
        assert!(t.verify());
        assert_eq!(SignedTransaction::decode(&t.to_canonical()).unwrap(), t);
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<SignedTransaction>(&json).unwrap(), t);
    }

    #[test]
    fn payload_mutation_breaks_signature() {
        let mut t = tx();
        t.payload[8] ^= 1;
        assert!(!t.verify());
    }

    #[test]
    fn gas_limit_matches_schedule() {
        assert_eq!(tx().gas_limit, GasSchedule::default().base_transaction_gas);
    }
}
