//! Canonical JSON: sorted keys, exact integers, floats with 17 significant
//! digits.

use std::str::FromStr;

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::Result;

/// `x` in scientific notation with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Rewrites every non-integer number in `v` with [`format_float`]. Object
/// keys are already sorted by `serde_json::Map`.
pub fn canonicalize(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            let text = n.to_string();
            if text.contains(['.', 'e', 'E']) {
                match text.parse::<f64>() {
                    Ok(x) if x.is_finite() => Value::Number(
                        Number::from_str(&format_float(x)).expect("formatted float is valid JSON"),
                    ),
                    _ => Value::Null,
                }
            } else {
                Value::Number(n)
            }
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, canonicalize(v))).collect()),
        other => other,
    }
}

pub fn to_canonical_value<T: Serialize + ?Sized>(value: &T) -> Result<Value> {
    Ok(canonicalize(serde_json::to_value(value)?))
}

pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_canonical_value(value)?)?)
}

/// Serde adapter writing a `BigInt` as an exact JSON number.
pub(crate) mod exact_int {
    use num_bigint::BigInt;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::multiindex::{bigint_from_json, bigint_to_json};

    pub fn serialize<S: Serializer>(value: &BigInt, serializer: S) -> Result<S::Ok, S::Error> {
        bigint_to_json(value).serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<BigInt, D::Error> {
        let raw = serde_json::Value::deserialize(deserializer)?;
        bigint_from_json(&raw).map_err(D::Error::custom)
    }
}

pub(crate) mod exact_ints {
    use num_bigint::BigInt;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::multiindex::{bigint_from_json, bigint_to_json};

    pub fn serialize<S: Serializer>(values: &[BigInt], serializer: S) -> Result<S::Ok, S::Error> {
        values.iter().map(bigint_to_json).collect::<Vec<_>>().serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<BigInt>, D::Error> {
        let raw = Vec::<serde_json::Value>::deserialize(deserializer)?;
        raw.iter()
            .map(bigint_from_json)
            .collect::<Result<_, _>>()
            .map_err(D::Error::custom)
    }
}

/// `Complex64` as `[re, im]`.
pub(crate) mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, serializer: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(deserializer)?;
        Ok(Complex64::new(re, im))
    }
}

pub(crate) mod complex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(zs: &[Complex64], serializer: S) -> Result<S::Ok, S::Error> {
        zs.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<Complex64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(deserializer)?;
        Ok(raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}
