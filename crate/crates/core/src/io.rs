//! Float formatting shared by the JSON and CSV writers.
//!
//! Finite values are written with 17 significant digits so that every double
//! round-trips; non-finite values become the strings `"inf"`, `"-inf"` and `"nan"`.

use serde::de::{self, Deserializer};
use serde::ser::{Error as _, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

/// Decimal text of `x` with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        other => other.parse().ok(),
    }
}

fn serialize_one<S: Serializer>(x: f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        let raw = RawValue::from_string(format_f64(x)).map_err(S::Error::custom)?;
        raw.serialize(s)
    } else {
        s.serialize_str(&format_f64(x))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrText {
    Num(f64),
    Text(String),
}

impl NumOrText {
    fn into_f64<E: de::Error>(self) -> Result<f64, E> {
        match self {
            NumOrText::Num(x) => Ok(x),
            NumOrText::Text(t) => {
                parse_f64(&t).ok_or_else(|| E::custom(format!("not a number: {t:?}")))
            }
        }
    }
}

struct F64Ser(f64);

impl Serialize for F64Ser {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_one(self.0, s)
    }
}

/// `#[serde(with = "f64_17")]` for a single `f64` field.
pub mod f64_17 {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        serialize_one(*x, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        NumOrText::deserialize(d)?.into_f64()
    }
}

/// `#[serde(with = "f64_vec_17")]` for a `Vec<f64>` field.
pub mod f64_vec_17 {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for &x in xs {
            seq.serialize_element(&F64Ser(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<NumOrText>::deserialize(d)?
            .into_iter()
            .map(NumOrText::into_f64)
            .collect()
    }
}

/// `#[serde(with = "opt_f64_17")]` for an `Option<f64>` field.
pub mod opt_f64_17 {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&F64Ser(*v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<NumOrText>::deserialize(d)?
            .map(NumOrText::into_f64)
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Probe {
        #[serde(with = "f64_17")]
        a: f64,
        #[serde(with = "f64_vec_17")]
        v: Vec<f64>,
        #[serde(with = "opt_f64_17", default)]
        o: Option<f64>,
    }

    #[test]
    fn seventeen_digits_round_trip() {
        let p = Probe {
            a: 0.1,
            v: vec![1.0 / 3.0, f64::INFINITY, -2.5e-300],
            o: Some(f64::MIN_POSITIVE),
        };
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("\"inf\""));
        let back: Probe = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn accepts_plain_numbers_and_missing_options() {
        let back: Probe = serde_json::from_str(r#"{"a": 2, "v": [1.5, "nan"]}"#).unwrap();
        assert_eq!(back.a, 2.0);
        assert!(back.v[1].is_nan());
        assert_eq!(back.o, None);
    }
}
