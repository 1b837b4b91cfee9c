use proptest::prelude::*;

use reviewchain::identity::{
    derive_address, generate_keypair, keystore_decrypt, keystore_encrypt_with_salt, sign, verify, Address,
    IdentityError, KdfPreset, Keystore,
};

#[test]
fn reference_keys() {
    // Frozen from an independent secp256k1 implementation.
    let cases = [
        (
            [0u8; 32],
            "b75993c7d82e11be9858b8780ae0221078d7040395e3ee80a33883edbceacf3c",
            "038fbe6f0bcf23b0afd9b82826320d9240c1f4161f94e9926ee965093cfca72bb0",
            "de67406f7ae7006bdc8ce2231fe88f230a856b3b",
        ),
        (
            [1u8; 32],
            "4e476116ee9ec803e4c012a26a6b29d66c73a76b327a9411d5bfc30410b5330e",
            "02960f00d99469fc0e14222771af36f4b07839d2ff8d9a730956a2e1e90ac4a835",
            "61e87e44fdfc9f21f9dd475557684b1617da4226",
        ),
    ];
    for (seed, secret, public_key, address) in cases {
        let key = generate_keypair(&seed).unwrap();
        assert_eq!(hex::encode(key.secret_bytes()), secret);
        assert_eq!(key.address().to_hex(), address);
        assert_eq!(hex::encode(key.public_key()), public_key);
        assert_eq!(derive_address(key.public_key()).unwrap(), key.address());
    }
}

#[test]
fn address_parses_from_display() {
    let key = generate_keypair(&[4; 32]).unwrap();
    let text = key.address().to_string();
    assert_eq!(text.parse::<Address>().unwrap(), key.address());
}

#[test]
fn light_keystore_file_round_trip() {
    let key = generate_keypair(&[9; 32]).unwrap();
    let store = keystore_encrypt_with_salt(&key, "pw", KdfPreset::Light, &[1; 16]).unwrap();
    let parsed = Keystore::from_json(&store.to_json()).unwrap();
    assert_eq!(parsed, store);
    assert_eq!(keystore_decrypt(&parsed, "pw").unwrap().address(), key.address());
    assert_eq!(keystore_decrypt(&parsed, "pW").unwrap_err(), IdentityError::Authentication);
    assert_eq!(
        keystore_encrypt_with_salt(&key, "", KdfPreset::Light, &[1; 16]).unwrap_err(),
        IdentityError::EmptyPassphrase
    );
}

#[test]
fn standard_keystore_round_trip() {
    assert!(KdfPreset::Light.iterations() < KdfPreset::Standard.iterations());
    let key = generate_keypair(&[9; 32]).unwrap();
    let store = keystore_encrypt_with_salt(&key, "pw", KdfPreset::Standard, &[2; 16]).unwrap();
    assert_eq!(keystore_decrypt(&store, "pw").unwrap().address(), key.address());
}

proptest! {
    #[test]
    fn signatures_verify_and_bind_message(seed in any::<[u8; 32]>(), msg in proptest::collection::vec(any::<u8>(), 0..256), flip in any::<prop::sample::Index>()) {
        let key = generate_keypair(&seed).unwrap();
        let sig = sign(&msg, &key);
        prop_assert!(verify(&msg, &sig, key.public_key()));
        prop_assert_eq!(sig.recover_address(&msg), Some(key.address()));

        let mut other = msg.clone();
        if other.is_empty() {
            other.push(0);
        } else {
            let i = flip.index(other.len());
            other[i] ^= 0x01;
        }
        prop_assert!(!verify(&other, &sig, key.public_key()));

        let mut bad = sig;
        let i = flip.index(64);
        bad.0[i] ^= 0x80;
        prop_assert!(!verify(&msg, &bad, key.public_key()));
    }

    #[test]
    fn signing_is_deterministic(seed in any::<[u8; 32]>(), msg in proptest::collection::vec(any::<u8>(), 0..64)) {
        let key = generate_keypair(&seed).unwrap();
        prop_assert_eq!(sign(&msg, &key), sign(&msg, &key));
    }

    #[test]
    fn wrong_length_seeds_are_rejected(seed in proptest::collection::vec(any::<u8>(), 0..64)) {
        prop_assume!(seed.len() != 32);
        prop_assert_eq!(generate_keypair(&seed).unwrap_err(), IdentityError::MalformedSeed(seed.len()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn any_keystore_byte_change_fails_authentication(
        seed in any::<[u8; 32]>(),
        salt in any::<[u8; 16]>(),
        field in 0usize..3,
        index in any::<prop::sample::Index>(),
        mask in 1u8..=255,
    ) {
        let key = generate_keypair(&seed).unwrap();
        let mut store = keystore_encrypt_with_salt(&key, "correct horse", KdfPreset::Light, &salt).unwrap();
        let bytes = match field {
            0 => &mut store.kdf_salt,
            1 => &mut store.ciphertext,
            _ => &mut store.mac,
        };
        let i = index.index(bytes.len());
        bytes[i] ^= mask;
        prop_assert_eq!(keystore_decrypt(&store, "correct horse").unwrap_err(), IdentityError::Authentication);
    }
}
