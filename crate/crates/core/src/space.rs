//! Hyperparameter search spaces: per-family parameter domains, configuration
//! representation, seeded sampling, validation, and a normalized distance.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Errors raised while constructing or querying search spaces.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpaceError {
    #[error("empty bound: low {low} must be strictly below high {high}")]
    EmptyRange { low: f64, high: f64 },
    #[error("log10 scale requires a positive lower bound, got {0}")]
    NonPositiveLogBound(f64),
    #[error("categorical domain needs at least one choice")]
    EmptyCategorical,
    #[error("duplicate categorical choice: {0}")]
    DuplicateChoice(String),
    #[error("duplicate parameter name: {0}")]
    DuplicateParam(String),
    #[error("unknown model family: {0} (expected logistic_regression or random_forest)")]
    UnknownFamily(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
}

/// Scale used when sampling and normalizing a continuous parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log10,
}

/// The domain of a single hyperparameter.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamDomain {
    Continuous { low: f64, high: f64, scale: Scale },
    Integer { low: i64, high: i64 },
    Categorical { choices: Vec<String> },
}

impl ParamDomain {
    pub fn continuous(low: f64, high: f64, scale: Scale) -> Result<Self, SpaceError> {
        if !low.is_finite() || !high.is_finite() || low >= high {
            return Err(SpaceError::EmptyRange { low, high });
        }
        if scale == Scale::Log10 && low <= 0.0 {
            return Err(SpaceError::NonPositiveLogBound(low));
        }
        Ok(ParamDomain::Continuous { low, high, scale })
    }

    pub fn integer(low: i64, high: i64) -> Result<Self, SpaceError> {
        if low >= high {
            return Err(SpaceError::EmptyRange {
                low: low as f64,
                high: high as f64,
            });
        }
        Ok(ParamDomain::Integer { low, high })
    }

    pub fn categorical<S: Into<String>>(choices: Vec<S>) -> Result<Self, SpaceError> {
        let choices: Vec<String> = choices.into_iter().map(Into::into).collect();
        if choices.is_empty() {
            return Err(SpaceError::EmptyCategorical);
        }
        for (i, c) in choices.iter().enumerate() {
            if choices[..i].contains(c) {
                return Err(SpaceError::DuplicateChoice(c.clone()));
            }
        }
        Ok(ParamDomain::Categorical { choices })
    }

    /// Whether `value` is inside this domain (and of the right kind).
    pub fn contains(&self, value: &ParamValue) -> bool {
        match (self, value) {
            (ParamDomain::Continuous { low, high, .. }, ParamValue::Real(v)) => {
                v.is_finite() && *v >= *low && *v <= *high
            }
            (ParamDomain::Integer { low, high }, ParamValue::Int(v)) => v >= low && v <= high,
            (ParamDomain::Categorical { choices }, ParamValue::Text(v)) => {
                choices.iter().any(|c| c == v)
            }
            _ => false,
        }
    }

    /// Whether the value kind matches the domain kind, ignoring range.
    pub fn kind_matches(&self, value: &ParamValue) -> bool {
        matches!(
            (self, value),
            (ParamDomain::Continuous { .. }, ParamValue::Real(_))
                | (ParamDomain::Integer { .. }, ParamValue::Int(_))
                | (ParamDomain::Categorical { .. }, ParamValue::Text(_))
        )
    }

    /// Draw one value uniformly from the domain (log-uniform for log10 scale).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> ParamValue {
        match self {
            ParamDomain::Continuous { low, high, scale } => match scale {
                Scale::Linear => ParamValue::Real(rng.gen_range(*low..*high)),
                Scale::Log10 => {
                    let lg = rng.gen_range(low.log10()..high.log10());
                    ParamValue::Real(10f64.powf(lg))
                }
            },
            ParamDomain::Integer { low, high } => ParamValue::Int(rng.gen_range(*low..=*high)),
            ParamDomain::Categorical { choices } => {
                ParamValue::Text(choices[rng.gen_range(0..choices.len())].clone())
            }
        }
    }

    /// Map a numeric value to [0, 1] over the domain (log10 space if log-scaled).
    /// Returns None for categorical domains or kind mismatches.
    pub fn normalize(&self, value: &ParamValue) -> Option<f64> {
        match (self, value) {
            (ParamDomain::Continuous { low, high, scale }, ParamValue::Real(v)) => match scale {
                Scale::Linear => Some((v - low) / (high - low)),
                Scale::Log10 => Some((v.log10() - low.log10()) / (high.log10() - low.log10())),
            },
            (ParamDomain::Integer { low, high }, ParamValue::Int(v)) => {
                Some((*v - *low) as f64 / (*high - *low) as f64)
            }
            _ => None,
        }
    }

    /// Inverse of [`normalize`](Self::normalize); `t` is clipped to [0, 1].
    /// Integer domains round to the nearest value. Panics on categorical.
    pub fn denormalize(&self, t: f64) -> ParamValue {
        let t = t.clamp(0.0, 1.0);
        match self {
            ParamDomain::Continuous { low, high, scale } => match scale {
                Scale::Linear => ParamValue::Real(low + t * (high - low)),
                Scale::Log10 => {
                    let lg = low.log10() + t * (high.log10() - low.log10());
                    ParamValue::Real(10f64.powf(lg).clamp(*low, *high))
                }
            },
            ParamDomain::Integer { low, high } => {
                let v = *low as f64 + t * (*high - *low) as f64;
                ParamValue::Int((v.round() as i64).clamp(*low, *high))
            }
            ParamDomain::Categorical { .. } => {
                panic!("denormalize is undefined for categorical domains")
            }
        }
    }
}

/// One hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Real(v) => Some(*v),
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Text(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Text(v) => write!(f, "{v}"),
        }
    }
}

/// The two classifier families the engine optimizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    LogisticRegression,
    RandomForest,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 2] = [ModelFamily::LogisticRegression, ModelFamily::RandomForest];

    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::LogisticRegression => "logistic_regression",
            ModelFamily::RandomForest => "random_forest",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = SpaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logistic_regression" => Ok(ModelFamily::LogisticRegression),
            "random_forest" => Ok(ModelFamily::RandomForest),
            other => Err(SpaceError::UnknownFamily(other.to_string())),
        }
    }
}

/// Per-family hyperparameter domains, in a deterministic insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    family: ModelFamily,
    params: Vec<(String, ParamDomain)>,
}

impl SearchSpace {
    pub fn new(
        family: ModelFamily,
        params: Vec<(String, ParamDomain)>,
    ) -> Result<Self, SpaceError> {
        for (i, (name, _)) in params.iter().enumerate() {
            if params[..i].iter().any(|(n, _)| n == name) {
                return Err(SpaceError::DuplicateParam(name.clone()));
            }
        }
        Ok(SearchSpace { family, params })
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn params(&self) -> &[(String, ParamDomain)] {
        &self.params
    }

    pub fn get(&self, name: &str) -> Option<&ParamDomain> {
        self.params
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, d)| d)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Draw one configuration, each parameter independently.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Configuration {
        let values = self
            .params
            .iter()
            .map(|(name, domain)| (name.clone(), domain.sample(rng)))
            .collect();
        Configuration {
            family: self.family,
            values,
        }
    }

    /// Collect every violation; the configuration is valid iff the list is empty.
    pub fn validate(&self, config: &Configuration) -> Vec<Violation> {
        let mut violations = Vec::new();
        if config.family != self.family {
            violations.push(Violation::FamilyMismatch {
                expected: self.family,
                got: config.family,
            });
        }
        for (name, value) in config.values() {
            match self.get(name) {
                None => violations.push(Violation::UnknownParam(name.clone())),
                Some(domain) => {
                    if !domain.kind_matches(value) {
                        violations.push(Violation::WrongKind {
                            name: name.clone(),
                            value: value.clone(),
                        });
                    } else if !domain.contains(value) {
                        violations.push(Violation::OutOfRange {
                            name: name.clone(),
                            value: value.clone(),
                        });
                    }
                }
            }
        }
        for (name, _) in &self.params {
            if config.get(name).is_none() {
                violations.push(Violation::MissingParam(name.clone()));
            }
        }
        violations
    }

    pub fn is_valid(&self, config: &Configuration) -> bool {
        self.validate(config).is_empty()
    }

    /// Normalized distance in [0, 1]: mean of per-parameter distances, where
    /// numeric parameters contribute |norm(a) - norm(b)| and categorical ones
    /// contribute 0 or 1. Configurations from different families are maximally
    /// far apart (1).
    pub fn distance(&self, a: &Configuration, b: &Configuration) -> Result<f64, SpaceError> {
        if a.family != b.family {
            return Ok(1.0);
        }
        for (tag, config) in [("first", a), ("second", b)] {
            let violations = self.validate(config);
            if !violations.is_empty() {
                return Err(SpaceError::InvalidConfiguration(format!(
                    "{tag} configuration: {}",
                    violations[0]
                )));
            }
        }
        let mut total = 0.0;
        for (name, domain) in &self.params {
            let va = a.get(name).expect("validated");
            let vb = b.get(name).expect("validated");
            let d = match domain {
                ParamDomain::Categorical { .. } => {
                    if va == vb {
                        0.0
                    } else {
                        1.0
                    }
                }
                _ => {
                    let na = domain.normalize(va).expect("validated numeric");
                    let nb = domain.normalize(vb).expect("validated numeric");
                    (na - nb).abs()
                }
            };
            total += d;
        }
        Ok(total / self.params.len() as f64)
    }
}

/// A single validation failure.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnknownParam(String),
    MissingParam(String),
    OutOfRange { name: String, value: ParamValue },
    WrongKind { name: String, value: ParamValue },
    FamilyMismatch { expected: ModelFamily, got: ModelFamily },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownParam(name) => write!(f, "unknown parameter `{name}`"),
            Violation::MissingParam(name) => write!(f, "missing parameter `{name}`"),
            Violation::OutOfRange { name, value } => {
                write!(f, "parameter `{name}` out of range (got {value})")
            }
            Violation::WrongKind { name, value } => {
                write!(f, "parameter `{name}` has the wrong kind (got {value})")
            }
            Violation::FamilyMismatch { expected, got } => {
                write!(f, "family mismatch: expected {expected}, got {got}")
            }
        }
    }
}

/// A model family plus concrete hyperparameter values, in space order.
///
/// Serializes as `{"family": "...", "values": {name: value, ...}}` with the
/// key order preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    family: ModelFamily,
    values: Vec<(String, ParamValue)>,
}

impl Configuration {
    pub fn new(family: ModelFamily, values: Vec<(String, ParamValue)>) -> Self {
        Configuration { family, values }
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn values(&self) -> &[(String, ParamValue)] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    pub fn real(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(ParamValue::as_f64)
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        self.get(name).and_then(ParamValue::as_i64)
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        self.get(name).and_then(ParamValue::as_str)
    }

    /// Compact single-line rendering, e.g. `random_forest{n_estimators=120, ...}`.
    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .values
            .iter()
            .map(|(n, v)| match v {
                ParamValue::Real(x) => format!("{n}={x:.6}"),
                _ => format!("{n}={v}"),
            })
            .collect();
        format!("{}{{{}}}", self.family, parts.join(", "))
    }
}

impl Serialize for Configuration {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        struct Values<'a>(&'a [(String, ParamValue)]);
        impl Serialize for Values<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.len()))?;
                for (name, value) in self.0 {
                    map.serialize_entry(name, value)?;
                }
                map.end()
            }
        }
        let mut s = serializer.serialize_struct("Configuration", 2)?;
        s.serialize_field("family", &self.family)?;
        s.serialize_field("values", &Values(&self.values))?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ValuesVisitor;
        impl<'de> Visitor<'de> for ValuesVisitor {
            type Value = Vec<(String, ParamValue)>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map of parameter values")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut values = Vec::with_capacity(access.size_hint().unwrap_or(0));
                while let Some((name, value)) = access.next_entry::<String, ParamValue>()? {
                    values.push((name, value));
                }
                Ok(values)
            }
        }

        struct OrderedValues(Vec<(String, ParamValue)>);
        impl<'de> Deserialize<'de> for OrderedValues {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                deserializer.deserialize_map(ValuesVisitor).map(OrderedValues)
            }
        }

        #[derive(Deserialize)]
        struct Wire {
            family: ModelFamily,
            values: OrderedValues,
        }

        let wire = Wire::deserialize(deserializer)?;
        Ok(Configuration {
            family: wire.family,
            values: wire.values.0,
        })
    }
}

/// The fixed search space for a model family.
pub fn default_space(family: ModelFamily) -> SearchSpace {
    match family {
        ModelFamily::LogisticRegression => SearchSpace::new(
            family,
            vec![
                (
                    "c".to_string(),
                    ParamDomain::continuous(1e-4, 1e4, Scale::Log10).unwrap(),
                ),
                ("max_iter".to_string(), ParamDomain::integer(100, 1000).unwrap()),
            ],
        )
        .unwrap(),
        ModelFamily::RandomForest => SearchSpace::new(
            family,
            vec![
                (
                    "n_estimators".to_string(),
                    ParamDomain::integer(10, 300).unwrap(),
                ),
                ("max_depth".to_string(), ParamDomain::integer(2, 32).unwrap()),
                (
                    "min_samples_split".to_string(),
                    ParamDomain::integer(2, 10).unwrap(),
                ),
                (
                    "max_features".to_string(),
                    ParamDomain::categorical(vec!["sqrt", "log2", "all"]).unwrap(),
                ),
            ],
        )
        .unwrap(),
    }
}

/// Default spaces for every family, in `ModelFamily::ALL` order.
pub fn default_spaces() -> Vec<SearchSpace> {
    ModelFamily::ALL.iter().map(|f| default_space(*f)).collect()
}
