//! Serializes `f64` values that may be infinite (`"inf"`) or undefined (`null`).

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Number(f64),
    Text(String),
    Missing(()),
}

pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_nan() {
        s.serialize_none()
    } else if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    match Repr::deserialize(d)? {
        Repr::Number(v) => Ok(v),
        Repr::Missing(()) => Ok(f64::NAN),
        Repr::Text(t) => parse(&t).ok_or_else(|| serde::de::Error::custom(format!("not a number: {t:?}"))),
    }
}

/// Parses a real number, accepting `inf`, `+inf`, `infinity` and `-inf`.
pub fn parse(text: &str) -> Option<f64> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

/// The same encoding for a list of values.
pub mod vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(transparent)]
    struct Extended(#[serde(with = "super")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| Extended(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        Ok(Vec::<Extended>::deserialize(d)?.into_iter().map(|e| e.0).collect())
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Wrap {
        #[serde(with = "super")]
        x: f64,
    }

    #[test]
    fn round_trips_special_values() {
        for (v, text) in [(f64::INFINITY, r#"{"x":"inf"}"#), (3.5, r#"{"x":3.5}"#)] {
            assert_eq!(serde_json::to_string(&Wrap { x: v }).unwrap(), text);
            assert_eq!(serde_json::from_str::<Wrap>(text).unwrap(), Wrap { x: v });
        }
        let nan = serde_json::to_string(&Wrap { x: f64::NAN }).unwrap();
        assert_eq!(nan, r#"{"x":null}"#);
        assert!(serde_json::from_str::<Wrap>(&nan).unwrap().x.is_nan());
    }

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Grid {
        #[serde(with = "super::vec")]
        xs: Vec<f64>,
    }

    #[test]
    fn lists_round_trip() {
        let g = Grid {
            xs: vec![1.0, f64::INFINITY],
        };
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(text, r#"{"xs":[1.0,"inf"]}"#);
        assert_eq!(serde_json::from_str::<Grid>(&text).unwrap(), g);
    }
}
