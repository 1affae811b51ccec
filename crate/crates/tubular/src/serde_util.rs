//! Serde helpers for arbitrary-precision integers in JSON documents.
//!
//! Vector coordinates are emitted as plain JSON integers (arbitrary precision
//! via `serde_json`'s `arbitrary_precision` feature); multiplicities and other
//! counts are emitted as decimal strings so that no consumer is tempted to
//! round them through a double.

use num_bigint::{BigInt, BigUint};
use serde::de::{self, Deserializer};
use serde::ser::{self, Serializer};
use serde::Deserialize;

pub(crate) fn bigint_to_number<E: ser::Error>(x: &BigInt) -> Result<serde_json::Number, E> {
    x.to_string()
        .parse::<serde_json::Number>()
        .map_err(|_| E::custom("integer not representable as a JSON number"))
}

pub(crate) fn number_to_bigint<E: de::Error>(n: &serde_json::Number) -> Result<BigInt, E> {
    let text = n.to_string();
    text.parse::<BigInt>()
        .map_err(|_| E::custom(format!("expected an integer, got `{text}`")))
}

/// Counts serialize as decimal strings. Plain JSON integers are accepted on
/// input for hand-written fixtures.
pub(crate) mod count_string {
    use super::*;

    pub fn serialize<S: Serializer>(count: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&count.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(serde_json::Number),
        }
        let text = match Repr::deserialize(d)? {
            Repr::Text(t) => t,
            Repr::Number(n) => n.to_string(),
        };
        text.parse::<BigUint>()
            .map_err(|_| de::Error::custom(format!("expected a non-negative integer, got `{text}`")))
    }
}
