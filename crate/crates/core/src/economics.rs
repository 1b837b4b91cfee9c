//! Gas and storage cost arithmetic in exact rationals.
//!
//! Storing one 32-byte word costs 20,000 gas, i.e. 625 gas per byte. Gas is
//! paid in Gwei, and one ETH is 10^9 Gwei. Nothing here rounds; use
//! [`round_to`] or [`format_fixed`] when presenting a value.

use std::fmt;

use num_bigint::BigInt;
pub use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::ledger::{GasSchedule, Gwei};

pub const STORAGE_GAS_PER_BYTE: u64 = 625;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EconomicsError {
    #[error("review count must be positive")]
    ZeroReviewCount,
    #[error("exchange rate must not be negative")]
    NegativeRate,
}

/// A named gas price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PricePreset {
    pub label: &'static str,
    pub gwei: Gwei,
}

pub const FAST: PricePreset = PricePreset {
    label: "fast (<5 min)",
    gwei: 5,
};

pub const MEDIAN: PricePreset = PricePreset {
    label: "median, 1,500-block window",
    gwei: 22,
};

pub const PRESETS: [PricePreset; 2] = [FAST, MEDIAN];

/// Reference workload: one app's review corpus.
pub const REFERENCE_BYTES: u64 = 270_110;
pub const REFERENCE_REVIEWS: u64 = 3_025;
pub const REFERENCE_ETH_USD: u64 = 885;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostQuote {
    pub bytes: u64,
    pub gas: u64,
    pub gas_price_gwei: Gwei,
    pub eth: BigRational,
    pub usd: BigRational,
    pub usd_per_review: Option<BigRational>,
}

pub fn rational(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Cost of `gas` units at `gas_price_gwei`.
pub fn gas_cost(
    gas: u64,
    gas_price_gwei: Gwei,
    eth_usd_rate: &BigRational,
) -> Result<(BigRational, BigRational), EconomicsError> {
    if eth_usd_rate.is_negative() {
        return Err(EconomicsError::NegativeRate);
    }
    let gwei = BigInt::from(gas) * BigInt::from(gas_price_gwei);
    let eth = BigRational::new(gwei, BigInt::from(GasSchedule::default().gwei_per_eth));
    let usd = &eth * eth_usd_rate;
    Ok((eth, usd))
}

/// Cost of storing `bytes` on chain. Base transaction gas is not included.
pub fn storage_cost(
    bytes: u64,
    gas_price_gwei: Gwei,
    eth_usd_rate: &BigRational,
) -> Result<CostQuote, EconomicsError> {
    let gas = STORAGE_GAS_PER_BYTE * bytes;
    let (eth, usd) = gas_cost(gas, gas_price_gwei, eth_usd_rate)?;
    Ok(CostQuote {
        bytes,
        gas,
        gas_price_gwei,
        eth,
        usd,
        usd_per_review: None,
    })
}

pub fn per_review_cost(quote: &CostQuote, review_count: u64) -> Result<BigRational, EconomicsError> {
    if review_count == 0 {
        return Err(EconomicsError::ZeroReviewCount);
    }
    Ok(&quote.usd / rational(review_count))
}

impl CostQuote {
    pub fn is_zero(&self) -> bool {
        self.gas == 0 && self.eth.is_zero() && self.usd.is_zero()
    }

    /// Attach the per-review figure for `review_count` reviews.
    pub fn with_reviews(mut self, review_count: u64) -> Result<Self, EconomicsError> {
        self.usd_per_review = Some(per_review_cost(&self, review_count)?);
        Ok(self)
    }
}

/// Round half away from zero to `decimals` places.
pub fn round_to(value: &BigRational, decimals: u32) -> BigRational {
    let scale = BigInt::from(10u32).pow(decimals);
    let scaled = value * BigRational::from_integer(scale.clone());
    BigRational::new(scaled.round().to_integer(), scale)
}

/// Decimal string with exactly `decimals` places, rounded half away from zero.
pub fn format_fixed(value: &BigRational, decimals: u32) -> String {
    let scale = BigInt::from(10u32).pow(decimals);
    let units = (value * BigRational::from_integer(scale.clone()))
        .round()
        .to_integer();
    let sign = if units.is_negative() { "-" } else { "" };
    let units = units.abs();
    let whole = &units / &scale;
    if decimals == 0 {
        return format!("{sign}{}", group_thousands(&whole.to_string()));
    }
    let frac = (&units % &scale).to_string();
    format!(
        "{sign}{}.{}{frac}",
        group_thousands(&whole.to_string()),
        "0".repeat(decimals as usize - frac.len())
    )
}

/// Exact decimal expansion when the value terminates within `max_places`.
pub fn exact_decimal(value: &BigRational, max_places: u32) -> Option<String> {
    (0..=max_places)
        .find(|&d| round_to(value, d) == *value)
        .map(|d| format_fixed(value, d).replace(',', ""))
}

fn group_thousands(digits: &str) -> String {
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Parse a non-negative decimal such as `885` or `1234.56`.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(whole) || !all_digits(frac) {
        return None;
    }
    let digits: BigInt = format!("0{whole}{frac}").parse().ok()?;
    Some(BigRational::new(digits, BigInt::from(10u32).pow(frac.len() as u32)))
}

/// Lossy conversion for machine-readable reports.
pub fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// One row of the `cost` table.
#[derive(Debug, Clone, Serialize)]
pub struct CostRow {
    pub preset: &'static str,
    pub gas_price_gwei: Gwei,
    pub gas: u64,
    pub eth: String,
    pub usd: String,
    pub usd_per_review: String,
}

pub fn cost_table(bytes: u64, reviews: u64, eth_usd: &BigRational, presets: &[PricePreset]) -> Result<Vec<CostRow>, EconomicsError> {
    presets
        .iter()
        .map(|p| {
            let q = storage_cost(bytes, p.gwei, eth_usd)?.with_reviews(reviews)?;
            let per = q.usd_per_review.as_ref().map(per_review_display).unwrap_or_default();
            Ok(CostRow {
                preset: p.label,
                gas_price_gwei: p.gwei,
                gas: q.gas,
                eth: exact_decimal(&q.eth, 18).unwrap_or_else(|| format_fixed(&q.eth, 9)),
                usd: format!("${}", format_fixed(&q.usd, 0)),
                usd_per_review: per,
            })
        })
        .collect()
}

/// Per-review figures are shown with three decimals below one dollar and
/// cents otherwise.
pub fn per_review_display(usd: &BigRational) -> String {
    if *usd < rational(1) {
        format!("${}", format_fixed(usd, 3))
    } else {
        format!("${}", format_fixed(usd, 2))
    }
}

impl fmt::Display for CostRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {:>4} Gwei {:>13} gas {:>12} ETH {:>8} {:>8}/review",
            self.preset, self.gas_price_gwei, self.gas, self.eth, self.usd, self.usd_per_review
        )
    }
}
