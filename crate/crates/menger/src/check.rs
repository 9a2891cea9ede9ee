//! Pass/fail records whose verdict can be recomputed from their fields.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

impl Relation {
    pub fn eval(self, observed: f64, threshold: f64) -> bool {
        match self {
            Relation::Le => observed <= threshold,
            Relation::Lt => observed < threshold,
            Relation::Ge => observed >= threshold,
            Relation::Gt => observed > threshold,
            Relation::Eq => observed == threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Eq => "==",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "lenient")]
    pub observed: f64,
    #[serde(with = "lenient")]
    pub threshold: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, observed: f64, relation: Relation, threshold: f64) -> Self {
        Self { name: name.into(), observed, threshold, relation, passed: relation.eval(observed, threshold) }
    }

    pub fn le(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Self::new(name, observed, Relation::Le, threshold)
    }

    pub fn ge(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Self::new(name, observed, Relation::Ge, threshold)
    }

    pub fn lt(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Self::new(name, observed, Relation::Lt, threshold)
    }

    pub fn gt(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Self::new(name, observed, Relation::Gt, threshold)
    }

    pub fn eq(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Self::new(name, observed, Relation::Eq, threshold)
    }

    /// A boolean property, stored as observed 1 or 0 against 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Relation::Eq, 1.0)
    }

    /// Whether the stored verdict agrees with the stored numbers.
    pub fn consistent(&self) -> bool {
        self.passed == self.relation.eval(self.observed, self.threshold)
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: {:.6e} {} {:.6e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.relation.symbol(),
            self.threshold
        )
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// f64 fields that write ±∞ and NaN as the strings `"inf"`, `"-inf"` and `"nan"`.
pub mod lenient {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Num(v)
        } else if v.is_nan() {
            Repr::Text("nan".into())
        } else if v > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("not a number: {other}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    /// The same encoding for string-keyed maps.
    pub mod map {
        use std::collections::BTreeMap;

        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
            s.collect_map(m.iter().map(|(k, v)| (k, super::to_repr(*v))))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
            let raw = BTreeMap::<String, super::Repr>::deserialize(d)?;
            raw.into_iter().map(|(k, r)| Ok((k, super::from_repr(r)?))).collect()
        }
    }

    /// The same encoding for sequences.
    pub mod seq {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|x| super::to_repr(*x)))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<super::Repr>::deserialize(d)?.into_iter().map(super::from_repr).collect()
        }
    }

    /// Converts a value to JSON with the same encoding for non-finite numbers.
    pub fn to_value(v: f64) -> serde_json::Value {
        serde_json::to_value(to_repr(v)).expect("number serializes")
    }
}
