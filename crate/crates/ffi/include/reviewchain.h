#ifndef REVIEWCHAIN_H
#define REVIEWCHAIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define RC_ADDRESS_LEN 20

#define RC_PUBLIC_KEY_LEN 33

#define RC_SIGNATURE_LEN 65

#define RC_DIGEST_LEN 32

typedef enum RcGrade {
  RC_GRADE_GOOD = 0,
  RC_GRADE_MEDIUM = 1,
  RC_GRADE_POOR = 2,
} RcGrade;

typedef enum RcKdfPreset {
  RC_KDF_PRESET_LIGHT = 0,
  RC_KDF_PRESET_STANDARD = 1,
} RcKdfPreset;

typedef enum RcStatus {
  RC_STATUS_OK = 0,
  RC_STATUS_NULL_POINTER = 1,
  RC_STATUS_INVALID_UTF8 = 2,
  RC_STATUS_INVALID_ARGUMENT = 3,
  RC_STATUS_AUTHENTICATION_FAILED = 4,
  RC_STATUS_CORRUPTED = 5,
  RC_STATUS_LEDGER_FAILURE = 6,
  RC_STATUS_STORAGE_FAILURE = 7,
  RC_STATUS_SCENARIO_FAILURE = 8,
  RC_STATUS_RETRIEVAL_FAILURE = 9,
  RC_STATUS_IO = 10,
  RC_STATUS_PANIC = 99,
} RcStatus;

/**
 * A secp256k1 key pair.
 */
typedef struct RcKeyPair RcKeyPair;

/**
 * A local replica synced from a chain dump, with the payload stores it reads.
 */
typedef struct RcReader RcReader;

typedef struct RcTradeoffRating {
  enum RcGrade security;
  enum RcGrade trust;
  enum RcGrade cost;
} RcTradeoffRating;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Derive a key pair from a 32-byte seed.
 *
 * # Safety
 * `seed` must point to `seed_len` readable bytes; `out` must be writable.
 */
enum RcStatus rc_keypair_generate(const uint8_t *seed, size_t seed_len, struct RcKeyPair **out);

/**
 * # Safety
 * `key` must come from this library and not be used afterwards. Null is ignored.
 */
void rc_keypair_free(struct RcKeyPair *key);

/**
 * Write the 20-byte address of `key` to `out`.
 *
 * # Safety
 * `key` must be a live handle; `out` must hold `RC_ADDRESS_LEN` bytes.
 */
enum RcStatus rc_keypair_address(const struct RcKeyPair *key, uint8_t *out);

/**
 * Write the 33-byte compressed public key of `key` to `out`.
 *
 * # Safety
 * `key` must be a live handle; `out` must hold `RC_PUBLIC_KEY_LEN` bytes.
 */
enum RcStatus rc_keypair_public_key(const struct RcKeyPair *key, uint8_t *out);

/**
 * Address of a 33-byte compressed public key.
 *
 * # Safety
 * `public_key` must hold `RC_PUBLIC_KEY_LEN` bytes; `out` must hold `RC_ADDRESS_LEN`.
 */
enum RcStatus rc_derive_address(const uint8_t *public_key, uint8_t *out);

/**
 * Sign `message`, writing a 65-byte recoverable signature to `out`.
 *
 * # Safety
 * `message` must point to `len` bytes; `out` must hold `RC_SIGNATURE_LEN` bytes.
 */
enum RcStatus rc_sign(const struct RcKeyPair *key,
                      const uint8_t *message,
                      size_t len,
                      uint8_t *out);

/**
 * Check `signature` over `message` against `public_key`.
 *
 * # Safety
 * Buffers must hold `len`, `RC_SIGNATURE_LEN` and `RC_PUBLIC_KEY_LEN` bytes.
 */
enum RcStatus rc_verify(const uint8_t *message,
                        size_t len,
                        const uint8_t *signature,
                        const uint8_t *public_key,
                        bool *out_valid);

/**
 * Encrypt `key` under `passphrase`, returning the keystore file as JSON.
 *
 * # Safety
 * `passphrase` must be a NUL-terminated string; `out_json` must be writable.
 */
enum RcStatus rc_keystore_encrypt(const struct RcKeyPair *key,
                                  const char *passphrase,
                                  enum RcKdfPreset preset,
                                  char **out_json);

/**
 * Decrypt a keystore file. A wrong passphrase or altered file yields
 * `AuthenticationFailed`.
 *
 * # Safety
 * `json` and `passphrase` must be NUL-terminated strings; `out` must be writable.
 */
enum RcStatus rc_keystore_decrypt(const char *json, const char *passphrase, struct RcKeyPair **out);

/**
 * Storage cost of `bytes` at `gas_price_gwei` and `eth_usd` (a decimal
 * string), as JSON. Exact values are decimal strings, or `n/d` fractions
 * when they do not terminate; `*_rounded` fields are for display.
 * `review_count` 0 omits the per-review figure.
 *
 * # Safety
 * `eth_usd` must be a NUL-terminated string; `out_json` must be writable.
 */
enum RcStatus rc_storage_cost(uint64_t bytes,
                              uint64_t gas_price_gwei,
                              const char *eth_usd,
                              uint64_t review_count,
                              char **out_json);

/**
 * Rate a scenario config (TOML) on security, trust and cost.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string; `out` must be writable.
 */
enum RcStatus rc_evaluate_tradeoffs(const char *config_toml, struct RcTradeoffRating *out);

/**
 * Run a scenario from a TOML config and return its report as JSON. When
 * `out_dir` is non-null the chain dump (`chain.ndjson`) and payload stores
 * (`storage/`) are written there for [`rc_reader_open`].
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string, `out_dir` one or null, and
 * `out_report_json` writable.
 */
enum RcStatus rc_scenario_run(const char *config_toml, const char *out_dir, char **out_report_json);

/**
 * Sync a local replica from a chain dump. `storage_dir` names the payload
 * stores written by a scenario run; null uses empty in-memory stores, so
 * only on-chain payloads verify.
 *
 * # Safety
 * `chain_dump` must be a NUL-terminated string, `storage_dir` one or null,
 * and `out` writable.
 */
enum RcStatus rc_reader_open(const char *chain_dump,
                             const char *storage_dir,
                             struct RcReader **out);

/**
 * Write the replica's 32-byte state root to `out`.
 *
 * # Safety
 * `reader` must be a live handle; `out` must hold `RC_DIGEST_LEN` bytes.
 */
enum RcStatus rc_reader_state_root(const struct RcReader *reader, uint8_t *out);

/**
 * Verified reviews of `product_id` (all versions when `version` is null) as
 * a JSON array of `{review, text, status}` records.
 *
 * # Safety
 * `reader` must be a live handle, `product_id` a NUL-terminated string,
 * `version` one or null, and `out_json` writable.
 */
enum RcStatus rc_reader_list_reviews(const struct RcReader *reader,
                                     const char *product_id,
                                     const char *version,
                                     char **out_json);

/**
 * # Safety
 * `reader` must come from [`rc_reader_open`] and not be used afterwards. Null is ignored.
 */
void rc_reader_free(struct RcReader *reader);

/**
 * # Safety
 * `s` must be a string returned by this library, freed at most once. Null is ignored.
 */
void rc_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *rc_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REVIEWCHAIN_H */
