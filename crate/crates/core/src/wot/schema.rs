//! Closed-world data schemas for affordance inputs, outputs and property
//! values, serialized in JSON Schema form.
//!
//! Objects are closed (`additionalProperties: false`) whenever their members
//! are declared. A field without a `type` accepts any JSON value.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueType {
    Number,
    Integer,
    String,
    Boolean,
    Array,
    Object,
    Any,
}

impl ValueType {
    fn as_str(self) -> Option<&'static str> {
        match self {
            Self::Number => Some("number"),
            Self::Integer => Some("integer"),
            Self::String => Some("string"),
            Self::Boolean => Some("boolean"),
            Self::Array => Some("array"),
            Self::Object => Some("object"),
            Self::Any => None,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "number" => Self::Number,
            "integer" => Self::Integer,
            "string" => Self::String,
            "boolean" => Self::Boolean,
            "array" => Self::Array,
            "object" => Self::Object,
            _ => return None,
        })
    }
}

/// Where and why a value was rejected. `field` is a dotted path with
/// `[i]` for array elements; empty for the document root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaViolation {
    pub field: String,
    pub reason: String,
}

impl SchemaViolation {
    fn new(field: &str, reason: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.reason)
        } else {
            write!(f, "{}: {}", self.field, self.reason)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSchema {
    pub kind: ValueType,
    pub required: bool,
    pub description: Option<String>,
    pub minimum: Option<f64>,
    pub maximum: Option<f64>,
    pub exclusive_minimum: Option<f64>,
    pub exclusive_maximum: Option<f64>,
    pub items: Option<Box<FieldSchema>>,
    /// Declared members of an object; `None` leaves the object open.
    pub members: Option<AffordanceSchema>,
}

impl FieldSchema {
    fn of(kind: ValueType) -> Self {
        Self {
            kind,
            required: true,
            description: None,
            minimum: None,
            maximum: None,
            exclusive_minimum: None,
            exclusive_maximum: None,
            items: None,
            members: None,
        }
    }

    pub fn number() -> Self {
        Self::of(ValueType::Number)
    }

    pub fn integer() -> Self {
        Self::of(ValueType::Integer)
    }

    pub fn string() -> Self {
        Self::of(ValueType::String)
    }

    pub fn boolean() -> Self {
        Self::of(ValueType::Boolean)
    }

    pub fn any() -> Self {
        Self::of(ValueType::Any)
    }

    pub fn array(items: FieldSchema) -> Self {
        Self {
            items: Some(Box::new(items)),
            ..Self::of(ValueType::Array)
        }
    }

    pub fn object(members: AffordanceSchema) -> Self {
        Self {
            members: Some(members),
            ..Self::of(ValueType::Object)
        }
    }

    pub fn open_object() -> Self {
        Self::of(ValueType::Object)
    }

    pub fn optional(mut self) -> Self {
        self.required = false;
        self
    }

    pub fn describe(mut self, text: &str) -> Self {
        self.description = Some(text.to_string());
        self
    }

    pub fn min(mut self, v: f64) -> Self {
        self.minimum = Some(v);
        self
    }

    pub fn max(mut self, v: f64) -> Self {
        self.maximum = Some(v);
        self
    }

    pub fn exclusive_min(mut self, v: f64) -> Self {
        self.exclusive_minimum = Some(v);
        self
    }

    pub fn exclusive_max(mut self, v: f64) -> Self {
        self.exclusive_maximum = Some(v);
        self
    }

    /// Bounds only on numeric kinds and never inverted; recursive.
    pub fn check_well_formed(&self, path: &str) -> Result<(), SchemaViolation> {
        let numeric = matches!(self.kind, ValueType::Number | ValueType::Integer);
        let bounds = [
            self.minimum,
            self.maximum,
            self.exclusive_minimum,
            self.exclusive_maximum,
        ];
        if !numeric && bounds.iter().any(Option::is_some) {
            return Err(SchemaViolation::new(path, "bounds on a non-numeric field"));
        }
        if bounds.iter().flatten().any(|b| !b.is_finite()) {
            return Err(SchemaViolation::new(path, "non-finite bound"));
        }
        let lo = self.minimum.into_iter().chain(self.exclusive_minimum).fold(f64::NEG_INFINITY, f64::max);
        let hi = self.maximum.into_iter().chain(self.exclusive_maximum).fold(f64::INFINITY, f64::min);
        if lo > hi {
            return Err(SchemaViolation::new(path, "minimum exceeds maximum"));
        }
        if self.items.is_some() != (self.kind == ValueType::Array) {
            return Err(SchemaViolation::new(path, "array fields must declare items"));
        }
        if self.members.is_some() && self.kind != ValueType::Object {
            return Err(SchemaViolation::new(path, "members on a non-object field"));
        }
        if let Some(items) = &self.items {
            items.check_well_formed(&format!("{path}[]"))?;
        }
        if let Some(members) = &self.members {
            members.check_well_formed_at(path)?;
        }
        Ok(())
    }

    pub fn validate(&self, value: &Value, path: &str) -> Result<(), SchemaViolation> {
        match self.kind {
            ValueType::Any => return Ok(()),
            ValueType::String if !value.is_string() => {
                return Err(SchemaViolation::new(path, "expected string"))
            }
            ValueType::Boolean if !value.is_boolean() => {
                return Err(SchemaViolation::new(path, "expected boolean"))
            }
            ValueType::Number | ValueType::Integer => {
                let Some(x) = value.as_f64() else {
                    return Err(SchemaViolation::new(
                        path,
                        format!("expected {}", self.kind.as_str().unwrap_or("number")),
                    ));
                };
                if self.kind == ValueType::Integer && (x.fract() != 0.0 || x.abs() > 9.007e15) {
                    return Err(SchemaViolation::new(path, "expected integer"));
                }
                if let Some(m) = self.minimum {
                    if x < m {
                        return Err(SchemaViolation::new(path, format!("must be >= {m}")));
                    }
                }
                if let Some(m) = self.maximum {
                    if x > m {
                        return Err(SchemaViolation::new(path, format!("must be <= {m}")));
                    }
                }
                if let Some(m) = self.exclusive_minimum {
                    if x <= m {
                        return Err(SchemaViolation::new(path, format!("must be > {m}")));
                    }
                }
                if let Some(m) = self.exclusive_maximum {
                    if x >= m {
                        return Err(SchemaViolation::new(path, format!("must be < {m}")));
                    }
                }
            }
            ValueType::Array => {
                let Some(items) = value.as_array() else {
                    return Err(SchemaViolation::new(path, "expected array"));
                };
                if let Some(schema) = &self.items {
                    for (i, item) in items.iter().enumerate() {
                        schema.validate(item, &format!("{path}[{i}]"))?;
                    }
                }
            }
            ValueType::Object => {
                if !value.is_object() {
                    return Err(SchemaViolation::new(path, "expected object"));
                }
                if let Some(members) = &self.members {
                    members.validate_at(value, path)?;
                }
            }
            ValueType::String | ValueType::Boolean => {}
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        if let Some(t) = self.kind.as_str() {
            m.insert("type".into(), json!(t));
        }
        if let Some(d) = &self.description {
            m.insert("description".into(), json!(d));
        }
        let bounds = [
            ("minimum", self.minimum),
            ("maximum", self.maximum),
            ("exclusiveMinimum", self.exclusive_minimum),
            ("exclusiveMaximum", self.exclusive_maximum),
        ];
        for (key, v) in bounds {
            if let Some(v) = v {
                m.insert(key.into(), json!(v));
            }
        }
        if let Some(items) = &self.items {
            m.insert("items".into(), items.to_json());
        }
        if let Some(members) = &self.members {
            members.write_members(&mut m);
        }
        Value::Object(m)
    }

    /// Parses the JSON Schema form. `required` is supplied by the parent.
    pub fn from_json(value: &Value, required: bool) -> Result<Self, SchemaViolation> {
        let obj = value
            .as_object()
            .ok_or_else(|| SchemaViolation::new("", "schema must be an object"))?;
        let kind = match obj.get("type") {
            None => ValueType::Any,
            Some(Value::String(s)) => ValueType::parse(s)
                .ok_or_else(|| SchemaViolation::new("type", format!("unknown type {s:?}")))?,
            Some(_) => return Err(SchemaViolation::new("type", "type must be a string")),
        };
        let num = |key: &str| -> Result<Option<f64>, SchemaViolation> {
            match obj.get(key) {
                None => Ok(None),
                Some(v) => v
                    .as_f64()
                    .map(Some)
                    .ok_or_else(|| SchemaViolation::new(key, "bound must be a number")),
            }
        };
        let description = match obj.get("description") {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(SchemaViolation::new("description", "must be a string")),
        };
        let items = match obj.get("items") {
            None => None,
            Some(v) => Some(Box::new(FieldSchema::from_json(v, true)?)),
        };
        let members = if obj.contains_key("properties") {
            Some(AffordanceSchema::read_members(obj)?)
        } else {
            None
        };
        let schema = Self {
            kind,
            required,
            description,
            minimum: num("minimum")?,
            maximum: num("maximum")?,
            exclusive_minimum: num("exclusiveMinimum")?,
            exclusive_maximum: num("exclusiveMaximum")?,
            items,
            members,
        };
        schema.check_well_formed("")?;
        Ok(schema)
    }
}

impl Serialize for FieldSchema {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FieldSchema {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        FieldSchema::from_json(&v, true).map_err(serde::de::Error::custom)
    }
}

/// Named fields of an object-shaped input or output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffordanceSchema {
    pub fields: BTreeMap<String, FieldSchema>,
}

impl AffordanceSchema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, name: &str, schema: FieldSchema) -> Self {
        self.fields.insert(name.to_string(), schema);
        self
    }

    pub fn check_well_formed(&self) -> Result<(), SchemaViolation> {
        self.check_well_formed_at("")
    }

    fn check_well_formed_at(&self, path: &str) -> Result<(), SchemaViolation> {
        for (name, f) in &self.fields {
            f.check_well_formed(&join(path, name))?;
        }
        Ok(())
    }

    /// Validates an object against the declared fields. `null` counts as
    /// an empty object so argument-free calls may omit their input.
    pub fn validate(&self, value: &Value) -> Result<(), SchemaViolation> {
        if value.is_null() {
            return self.validate_at(&Value::Object(Map::new()), "");
        }
        self.validate_at(value, "")
    }

    fn validate_at(&self, value: &Value, path: &str) -> Result<(), SchemaViolation> {
        let obj = value
            .as_object()
            .ok_or_else(|| SchemaViolation::new(path, "expected object"))?;
        for key in obj.keys() {
            if !self.fields.contains_key(key) {
                return Err(SchemaViolation::new(&join(path, key), "unexpected field"));
            }
        }
        for (name, schema) in &self.fields {
            let p = join(path, name);
            match obj.get(name) {
                None | Some(Value::Null) if schema.required => {
                    return Err(SchemaViolation::new(&p, "missing required field"))
                }
                None | Some(Value::Null) => {}
                Some(v) => schema.validate(v, &p)?,
            }
        }
        Ok(())
    }

    fn write_members(&self, m: &mut Map<String, Value>) {
        let props: Map<String, Value> = self
            .fields
            .iter()
            .map(|(k, f)| (k.clone(), f.to_json()))
            .collect();
        let required: Vec<Value> = self
            .fields
            .iter()
            .filter(|(_, f)| f.required)
            .map(|(k, _)| json!(k))
            .collect();
        m.insert("properties".into(), Value::Object(props));
        if !required.is_empty() {
            m.insert("required".into(), Value::Array(required));
        }
        m.insert("additionalProperties".into(), json!(false));
    }

    fn read_members(obj: &Map<String, Value>) -> Result<Self, SchemaViolation> {
        let props = match obj.get("properties") {
            None => return Ok(Self::default()),
            Some(Value::Object(p)) => p,
            Some(_) => return Err(SchemaViolation::new("properties", "must be an object")),
        };
        let required: Vec<&str> = match obj.get("required") {
            None => Vec::new(),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_str()
                        .ok_or_else(|| SchemaViolation::new("required", "entries must be strings"))
                })
                .collect::<Result<_, _>>()?,
            Some(_) => return Err(SchemaViolation::new("required", "must be an array")),
        };
        if let Some(missing) = required.iter().find(|r| !props.contains_key(**r)) {
            return Err(SchemaViolation::new(
                "required",
                format!("{missing} is not a declared property"),
            ));
        }
        let mut fields = BTreeMap::new();
        for (k, v) in props {
            let f = FieldSchema::from_json(v, required.contains(&k.as_str()))
                .map_err(|e| SchemaViolation::new(&join(k, &e.field), e.reason))?;
            fields.insert(k.clone(), f);
        }
        Ok(Self { fields })
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("type".into(), json!("object"));
        self.write_members(&mut m);
        Value::Object(m)
    }

    pub fn from_json(value: &Value) -> Result<Self, SchemaViolation> {
        let obj = value
            .as_object()
            .ok_or_else(|| SchemaViolation::new("", "schema must be an object"))?;
        match obj.get("type") {
            Some(Value::String(t)) if t == "object" => {}
            _ => return Err(SchemaViolation::new("type", "affordance schema must be an object schema")),
        }
        let schema = Self::read_members(obj)?;
        schema.check_well_formed()?;
        Ok(schema)
    }
}

fn join(path: &str, name: &str) -> String {
    match (path.is_empty(), name.is_empty()) {
        (true, _) => name.to_string(),
        (_, true) => path.to_string(),
        _ => format!("{path}.{name}"),
    }
}

impl Serialize for AffordanceSchema {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for AffordanceSchema {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        AffordanceSchema::from_json(&v).map_err(serde::de::Error::custom)
    }
}

/// `{x, y, z}` in meters.
pub fn vec3_schema() -> FieldSchema {
    FieldSchema::object(
        AffordanceSchema::new()
            .field("x", FieldSchema::number())
            .field("y", FieldSchema::number())
            .field("z", FieldSchema::number()),
    )
}

/// `{x, y}` in meters.
pub fn point2_schema() -> FieldSchema {
    FieldSchema::object(
        AffordanceSchema::new()
            .field("x", FieldSchema::number())
            .field("y", FieldSchema::number()),
    )
}

/// `{x, y, alt}` planner slot.
pub fn slot_schema() -> FieldSchema {
    FieldSchema::object(
        AffordanceSchema::new()
            .field("x", FieldSchema::number())
            .field("y", FieldSchema::number())
            .field("alt", FieldSchema::number()),
    )
}

/// `{origin: {x, y}, width, height}`.
pub fn region_schema() -> FieldSchema {
    FieldSchema::object(
        AffordanceSchema::new()
            .field("origin", point2_schema())
            .field("width", FieldSchema::number())
            .field("height", FieldSchema::number()),
    )
}
