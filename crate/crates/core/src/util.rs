//! Serde helpers.

/// Serializes `f64` as a JSON number, or as `"inf"`, `"-inf"`, `"nan"` when not finite.
pub mod json_float {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        JsonFloat(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        JsonFloat::deserialize(d).map(|v| v.0)
    }

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct JsonFloat(pub f64);

    impl Serialize for JsonFloat {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            let v = self.0;
            if v.is_finite() {
                s.serialize_f64(v)
            } else if v.is_nan() {
                s.serialize_str("nan")
            } else if v > 0.0 {
                s.serialize_str("inf")
            } else {
                s.serialize_str("-inf")
            }
        }
    }

    impl<'de> Deserialize<'de> for JsonFloat {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            #[derive(Deserialize)]
            #[serde(untagged)]
            enum Raw {
                Num(f64),
                Text(String),
            }
            match Raw::deserialize(d)? {
                Raw::Num(v) => Ok(JsonFloat(v)),
                Raw::Text(t) => match t.as_str() {
                    "inf" | "+inf" | "infinity" => Ok(JsonFloat(f64::INFINITY)),
                    "-inf" | "-infinity" => Ok(JsonFloat(f64::NEG_INFINITY)),
                    "nan" => Ok(JsonFloat(f64::NAN)),
                    other => Err(de::Error::custom(format!("expected a number or \"inf\", got {other:?}"))),
                },
            }
        }
    }
}

/// Same as [`json_float`] for `Option<f64>`.
pub mod json_float_opt {
    use super::json_float::JsonFloat;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(JsonFloat).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<JsonFloat>::deserialize(d)?.map(|v| v.0))
    }
}
