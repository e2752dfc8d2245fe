//! Function schemas and the tool registry.
//!
//! Three document dialects are accepted. They differ mainly in how the
//! required/optional partition of a tool's parameters is expressed:
//!
//! * `native`: every parameter record carries an explicit `required` flag.
//! * `toolace`: a `required` name list sits next to a `properties` map;
//!   list membership decides, and wins over any declared default.
//! * `xlam`: no required list; a parameter with a declared default is
//!   optional, everything else is required.
//!
//! Whatever the dialect, a loaded [`ToolRegistry`] holds plain
//! [`FunctionSchema`] values and serializes back to the native dialect.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchemaError {
    #[error("malformed schema document: {0}")]
    MalformedSchemaDocument(String),
    #[error("duplicate tool name `{0}`")]
    DuplicateToolName(String),
    #[error("tool `{tool}` parameter `{param}` declares unknown type `{dtype}`")]
    UnknownDtype {
        tool: String,
        param: String,
        dtype: String,
    },
    #[error("parameter `{0}` is marked required but declares a default")]
    ConflictingDeclaration(String),
    #[error("tool `{tool}` declares parameter `{param}` more than once")]
    DuplicateParameter { tool: String, param: String },
    #[error("empty name in {0}")]
    EmptyName(String),
}

/// Declared type of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    String,
    Integer,
    Float,
    Boolean,
    Object,
    Array,
    Any,
}

impl Dtype {
    pub fn as_str(self) -> &'static str {
        match self {
            Dtype::String => "string",
            Dtype::Integer => "integer",
            Dtype::Float => "float",
            Dtype::Boolean => "boolean",
            Dtype::Object => "object",
            Dtype::Array => "array",
            Dtype::Any => "any",
        }
    }

    /// Maps the looser type vocabulary found in third-party corpora
    /// (`str`, `int`, `number`, `dict`, `List[str]`, `str, optional`, ...).
    pub fn from_alias(tag: &str) -> Option<Dtype> {
        let t = tag.trim();
        let t = t.strip_suffix(", optional").unwrap_or(t).trim();
        if let Ok(d) = t.parse() {
            return Some(d);
        }
        let lower = t.to_ascii_lowercase();
        let head = lower.split('[').next().unwrap_or("");
        Some(match head {
            "str" | "text" => Dtype::String,
            "int" | "long" => Dtype::Integer,
            "number" | "double" | "decimal" => Dtype::Float,
            "bool" => Dtype::Boolean,
            "dict" | "map" | "mapping" | "object" => Dtype::Object,
            "list" | "tuple" | "set" | "array" => Dtype::Array,
            "any" => Dtype::Any,
            _ => return None,
        })
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dtype {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "string" => Dtype::String,
            "integer" => Dtype::Integer,
            "float" => Dtype::Float,
            "boolean" => Dtype::Boolean,
            "object" => Dtype::Object,
            "array" => Dtype::Array,
            "any" => Dtype::Any,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dialect {
    Native,
    Toolace,
    Xlam,
}

impl FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "native" => Ok(Dialect::Native),
            "toolace" => Ok(Dialect::Toolace),
            "xlam" => Ok(Dialect::Xlam),
            other => Err(format!("unknown schema dialect `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub dtype: Dtype,
    pub required: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Nested member specs for `object` parameters, when the schema declares them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub properties: Option<Vec<ParameterSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ReturnsSpec {
    #[serde(rename = "type")]
    dtype: Dtype,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSchema {
    pub name: String,
    pub parameters: Vec<ParameterSpec>,
    pub returns_dtype: Option<Dtype>,
    pub description: Option<String>,
}

impl FunctionSchema {
    pub fn param(&self, name: &str) -> Option<&ParameterSpec> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn required_params(&self) -> impl Iterator<Item = &ParameterSpec> {
        self.parameters.iter().filter(|p| p.required)
    }

    fn validate(&self) -> Result<(), SchemaError> {
        if self.name.is_empty() {
            return Err(SchemaError::EmptyName("tool record".into()));
        }
        validate_params(&self.name, &self.parameters)
    }
}

fn validate_params(tool: &str, params: &[ParameterSpec]) -> Result<(), SchemaError> {
    let mut seen = HashSet::new();
    for p in params {
        if p.name.is_empty() {
            return Err(SchemaError::EmptyName(format!("a parameter of `{tool}`")));
        }
        if !seen.insert(p.name.as_str()) {
            return Err(SchemaError::DuplicateParameter {
                tool: tool.to_string(),
                param: p.name.clone(),
            });
        }
        if let Some(nested) = &p.properties {
            validate_params(tool, nested)?;
        }
    }
    Ok(())
}

impl Serialize for FunctionSchema {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(None)?;
        map.serialize_entry("name", &self.name)?;
        if let Some(d) = &self.description {
            map.serialize_entry("description", d)?;
        }
        map.serialize_entry("parameters", &self.parameters)?;
        if let Some(r) = self.returns_dtype {
            map.serialize_entry("returns", &ReturnsSpec { dtype: r })?;
        }
        map.end()
    }
}

/// A parameter record before the required/optional partition is decided.
#[derive(Debug, Clone, PartialEq)]
pub struct RawParam {
    pub name: String,
    pub dtype: Dtype,
    pub default: Option<Value>,
    /// Explicit per-parameter flag (native dialect).
    pub required_flag: Option<bool>,
    /// Membership in the enclosing record's `required` list (toolace dialect).
    pub in_required_list: bool,
    pub description: Option<String>,
    pub properties: Option<Vec<ParameterSpec>>,
}

impl RawParam {
    pub fn new(name: impl Into<String>, dtype: Dtype) -> Self {
        RawParam {
            name: name.into(),
            dtype,
            default: None,
            required_flag: None,
            in_required_list: false,
            description: None,
            properties: None,
        }
    }
}

/// Decides whether a parameter is required under `dialect`'s rules.
pub fn derive_required_partition(
    raw: RawParam,
    dialect: Dialect,
) -> Result<ParameterSpec, SchemaError> {
    let RawParam {
        name,
        dtype,
        mut default,
        required_flag,
        in_required_list,
        description,
        properties,
    } = raw;
    let required = match dialect {
        Dialect::Native => {
            let required = required_flag.unwrap_or(false);
            if required && default.is_some() {
                return Err(SchemaError::ConflictingDeclaration(name));
            }
            required
        }
        Dialect::Toolace => {
            if in_required_list {
                default = None;
            }
            in_required_list
        }
        Dialect::Xlam => default.is_none(),
    };
    Ok(ParameterSpec {
        name,
        dtype,
        required,
        default,
        description,
        properties,
    })
}

/// Immutable collection of function schemas keyed by tool name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolRegistry {
    schemas: IndexMap<String, FunctionSchema>,
}

impl ToolRegistry {
    pub fn from_schemas(
        schemas: impl IntoIterator<Item = FunctionSchema>,
    ) -> Result<Self, SchemaError> {
        let mut map = IndexMap::new();
        for s in schemas {
            s.validate()?;
            if map.contains_key(&s.name) {
                return Err(SchemaError::DuplicateToolName(s.name));
            }
            map.insert(s.name.clone(), s);
        }
        Ok(ToolRegistry { schemas: map })
    }

    pub fn lookup(&self, name: &str) -> Option<&FunctionSchema> {
        self.schemas.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.schemas.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.schemas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemas.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.schemas.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FunctionSchema> {
        self.schemas.values()
    }

    /// Sub-registry holding only the named tools (names not present are skipped).
    pub fn restrict<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> ToolRegistry {
        let schemas = names
            .into_iter()
            .filter_map(|n| self.schemas.get(n).map(|s| (n.to_string(), s.clone())))
            .collect();
        ToolRegistry { schemas }
    }

    /// Serializes to a native-dialect document.
    pub fn to_native_document(&self) -> String {
        let all: Vec<&FunctionSchema> = self.schemas.values().collect();
        serde_json::to_string_pretty(&all).expect("schemas serialize")
    }
}

/// Parses a schema document in the given dialect.
pub fn load_registry(source: &str, dialect: Dialect) -> Result<ToolRegistry, SchemaError> {
    let doc: Value = serde_json::from_str(source)
        .map_err(|e| SchemaError::MalformedSchemaDocument(e.to_string()))?;
    let records = doc
        .as_array()
        .ok_or_else(|| malformed("top level must be an array of tool records"))?;
    let mut schemas = Vec::with_capacity(records.len());
    for rec in records {
        let rec = rec
            .as_object()
            .ok_or_else(|| malformed("tool record must be an object"))?;
        schemas.push(match dialect {
            Dialect::Native => native_tool(rec)?,
            Dialect::Toolace => toolace_tool(rec)?,
            Dialect::Xlam => xlam_tool(rec)?,
        });
    }
    ToolRegistry::from_schemas(schemas)
}

fn malformed(msg: impl Into<String>) -> SchemaError {
    SchemaError::MalformedSchemaDocument(msg.into())
}

fn warn_unknown(rec: &Map<String, Value>, known: &[&str], ctx: &str) {
    for key in rec.keys() {
        if !known.contains(&key.as_str()) {
            log::warn!("ignoring unknown field `{key}` in {ctx}");
        }
    }
}

fn req_str<'a>(rec: &'a Map<String, Value>, key: &str, ctx: &str) -> Result<&'a str, SchemaError> {
    rec.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(format!("{ctx}: missing string field `{key}`")))
}

fn opt_str(rec: &Map<String, Value>, key: &str) -> Result<Option<String>, SchemaError> {
    match rec.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(malformed(format!("field `{key}` must be a string"))),
    }
}

fn tool_name(rec: &Map<String, Value>) -> Result<String, SchemaError> {
    let name = req_str(rec, "name", "tool record")?;
    if name.is_empty() {
        return Err(SchemaError::EmptyName("tool record".into()));
    }
    Ok(name.to_string())
}

fn native_tool(rec: &Map<String, Value>) -> Result<FunctionSchema, SchemaError> {
    warn_unknown(rec, &["name", "description", "parameters", "returns"], "tool record");
    let name = tool_name(rec)?;
    let parameters = match rec.get("parameters") {
        None => Vec::new(),
        Some(Value::Array(ps)) => native_params(&name, ps)?,
        Some(_) => return Err(malformed(format!("`{name}`: parameters must be an array"))),
    };
    let returns_dtype = match rec.get("returns") {
        None | Some(Value::Null) => None,
        Some(Value::Object(r)) => {
            let tag = req_str(r, "type", "returns")?;
            Some(tag.parse().map_err(|_| SchemaError::UnknownDtype {
                tool: name.clone(),
                param: "<returns>".into(),
                dtype: tag.into(),
            })?)
        }
        Some(_) => return Err(malformed(format!("`{name}`: returns must be an object"))),
    };
    Ok(FunctionSchema {
        description: opt_str(rec, "description")?,
        name,
        parameters,
        returns_dtype,
    })
}

fn native_params(tool: &str, ps: &[Value]) -> Result<Vec<ParameterSpec>, SchemaError> {
    ps.iter()
        .map(|p| {
            let p = p
                .as_object()
                .ok_or_else(|| malformed(format!("`{tool}`: parameter must be an object")))?;
            warn_unknown(
                p,
                &["name", "type", "required", "default", "description", "properties"],
                "parameter record",
            );
            let name = req_str(p, "name", "parameter record")?;
            let tag = req_str(p, "type", "parameter record")?;
            let dtype = tag.parse().map_err(|_| SchemaError::UnknownDtype {
                tool: tool.into(),
                param: name.into(),
                dtype: tag.into(),
            })?;
            let required = p
                .get("required")
                .and_then(Value::as_bool)
                .ok_or_else(|| malformed(format!("`{tool}.{name}`: missing boolean `required`")))?;
            let properties = match p.get("properties") {
                None | Some(Value::Null) => None,
                Some(Value::Array(nested)) => Some(native_params(tool, nested)?),
                Some(_) => return Err(malformed("properties must be an array")),
            };
            let raw = RawParam {
                name: name.to_string(),
                dtype,
                default: p.get("default").cloned(),
                required_flag: Some(required),
                in_required_list: false,
                description: opt_str(p, "description")?,
                properties,
            };
            derive_required_partition(raw, Dialect::Native)
        })
        .collect()
}

fn toolace_tool(rec: &Map<String, Value>) -> Result<FunctionSchema, SchemaError> {
    warn_unknown(rec, &["name", "description", "parameters", "returns"], "tool record");
    let name = tool_name(rec)?;
    let parameters = match rec.get("parameters") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Object(obj)) => toolace_object(&name, obj)?,
        Some(_) => return Err(malformed(format!("`{name}`: parameters must be an object"))),
    };
    Ok(FunctionSchema {
        description: opt_str(rec, "description")?,
        returns_dtype: alias_returns(&name, rec)?,
        name,
        parameters,
    })
}

/// `{type, properties: {..}, required: [..]}` as used by ToolACE-style records.
fn toolace_object(tool: &str, obj: &Map<String, Value>) -> Result<Vec<ParameterSpec>, SchemaError> {
    let required: Vec<&str> = match obj.get("required") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(names)) => names
            .iter()
            .map(|n| n.as_str().ok_or_else(|| malformed("required list must hold strings")))
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(malformed(format!("`{tool}`: required must be an array"))),
    };
    let props = match obj.get("properties") {
        None | Some(Value::Null) => return Ok(Vec::new()),
        Some(Value::Object(props)) => props,
        Some(_) => return Err(malformed(format!("`{tool}`: properties must be an object"))),
    };
    for r in &required {
        if !props.contains_key(*r) {
            log::warn!("`{tool}`: required name `{r}` has no property entry");
        }
    }
    props
        .iter()
        .map(|(pname, p)| {
            let p = p
                .as_object()
                .ok_or_else(|| malformed(format!("`{tool}.{pname}` must be an object")))?;
            warn_unknown(
                p,
                &["type", "description", "default", "properties", "required", "items", "enum"],
                "parameter record",
            );
            let dtype = alias_dtype(tool, pname, p)?;
            let properties = if dtype == Dtype::Object && p.contains_key("properties") {
                Some(toolace_object(tool, p)?)
            } else {
                None
            };
            let raw = RawParam {
                name: pname.clone(),
                dtype,
                default: p.get("default").cloned(),
                required_flag: None,
                in_required_list: required.contains(&pname.as_str()),
                description: opt_str(p, "description")?,
                properties,
            };
            derive_required_partition(raw, Dialect::Toolace)
        })
        .collect()
}

fn xlam_tool(rec: &Map<String, Value>) -> Result<FunctionSchema, SchemaError> {
    warn_unknown(rec, &["name", "description", "parameters", "returns"], "tool record");
    let name = tool_name(rec)?;
    let params = match rec.get("parameters") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(obj)) => obj.clone(),
        Some(_) => return Err(malformed(format!("`{name}`: parameters must be an object"))),
    };
    let parameters = params
        .iter()
        .map(|(pname, p)| {
            let p = p
                .as_object()
                .ok_or_else(|| malformed(format!("`{name}.{pname}` must be an object")))?;
            warn_unknown(p, &["type", "description", "default"], "parameter record");
            let raw = RawParam {
                name: pname.clone(),
                dtype: alias_dtype(&name, pname, p)?,
                default: p.get("default").cloned(),
                required_flag: None,
                in_required_list: false,
                description: opt_str(p, "description")?,
                properties: None,
            };
            derive_required_partition(raw, Dialect::Xlam)
        })
        .collect::<Result<_, _>>()?;
    Ok(FunctionSchema {
        description: opt_str(rec, "description")?,
        returns_dtype: alias_returns(&name, rec)?,
        name,
        parameters,
    })
}

fn alias_dtype(tool: &str, param: &str, p: &Map<String, Value>) -> Result<Dtype, SchemaError> {
    let tag = match p.get("type") {
        None | Some(Value::Null) => return Ok(Dtype::Any),
        Some(Value::String(t)) => t.as_str(),
        Some(_) => return Err(malformed(format!("`{tool}.{param}`: type must be a string"))),
    };
    Dtype::from_alias(tag).ok_or_else(|| SchemaError::UnknownDtype {
        tool: tool.into(),
        param: param.into(),
        dtype: tag.into(),
    })
}

fn alias_returns(tool: &str, rec: &Map<String, Value>) -> Result<Option<Dtype>, SchemaError> {
    match rec.get("returns") {
        Some(Value::Object(r)) => alias_dtype(tool, "<returns>", r).map(Some),
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    const WEATHER: &str = r#"[{"name": "Get_weather", "description": "forecast",
        "parameters": [
            {"name": "time", "type": "string", "required": true},
            {"name": "location", "type": "string", "required": true}],
        "returns": {"type": "string"}}]"#;

    #[test]
    fn native_document_loads() {
        let reg = load_registry(WEATHER, Dialect::Native).unwrap();
        assert_eq!(reg.len(), 1);
        let s = reg.lookup("Get_weather").unwrap();
        assert_eq!(s.required_params().count(), 2);
        assert_eq!(s.returns_dtype, Some(Dtype::String));
    }

    #[test]
    fn lookup_absent_names() {
        let reg = load_registry(WEATHER, Dialect::Native).unwrap();
        assert!(reg.lookup("Get_wether").is_none());
        assert!(ToolRegistry::default().lookup("Get_weather").is_none());
    }

    #[test]
    fn toolace_required_list_beats_default() {
        let src = r#"[{"name": "convert", "parameters": {"type": "dict",
            "properties": {
                "units": {"type": "str", "default": "metric"},
                "value": {"type": "number"},
                "precision": {"type": "int", "default": 2}},
            "required": ["units", "value"]}}]"#;
        let reg = load_registry(src, Dialect::Toolace).unwrap();
        let s = reg.lookup("convert").unwrap();
        let units = s.param("units").unwrap();
        assert!(units.required);
        assert_eq!(units.default, None);
        assert_eq!(s.param("value").unwrap().dtype, Dtype::Float);
        let precision = s.param("precision").unwrap();
        assert!(!precision.required);
        assert_eq!(precision.default, Some(json!(2)));
    }

    #[test]
    fn xlam_default_presence_decides() {
        let src = r#"[{"name": "search", "parameters": {
            "city": {"type": "str", "description": "city"},
            "limit": {"type": "int, optional", "default": 10}}}]"#;
        let reg = load_registry(src, Dialect::Xlam).unwrap();
        let s = reg.lookup("search").unwrap();
        assert!(s.param("city").unwrap().required);
        let limit = s.param("limit").unwrap();
        assert!(!limit.required);
        assert_eq!(limit.default, Some(json!(10)));
        assert_eq!(limit.dtype, Dtype::Integer);
    }

    #[test]
    fn xlam_null_default_still_counts_as_declared() {
        let src = r#"[{"name": "f", "parameters": {"x": {"type": "str", "default": null}}}]"#;
        let reg = load_registry(src, Dialect::Xlam).unwrap();
        assert!(!reg.lookup("f").unwrap().param("x").unwrap().required);
    }

    #[test]
    fn partition_rules() {
        let mut raw = RawParam::new("q", Dtype::String);
        raw.in_required_list = true;
        assert!(derive_required_partition(raw.clone(), Dialect::Toolace).unwrap().required);

        let mut with_default = RawParam::new("n", Dtype::Integer);
        with_default.default = Some(json!(10));
        let spec = derive_required_partition(with_default.clone(), Dialect::Xlam).unwrap();
        assert!(!spec.required);
        assert_eq!(spec.default, Some(json!(10)));

        assert!(derive_required_partition(RawParam::new("c", Dtype::String), Dialect::Xlam)
            .unwrap()
            .required);

        with_default.required_flag = Some(true);
        assert_eq!(
            derive_required_partition(with_default, Dialect::Native),
            Err(SchemaError::ConflictingDeclaration("n".into()))
        );
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            load_registry("[{", Dialect::Native),
            Err(SchemaError::MalformedSchemaDocument(_))
        ));
        let dup = r#"[{"name": "A", "parameters": []}, {"name": "A", "parameters": []}]"#;
        assert_eq!(
            load_registry(dup, Dialect::Native),
            Err(SchemaError::DuplicateToolName("A".into()))
        );
        let bad = r#"[{"name": "A", "parameters": [{"name": "x", "type": "decimal", "required": true}]}]"#;
        assert!(matches!(
            load_registry(bad, Dialect::Native),
            Err(SchemaError::UnknownDtype { .. })
        ));
        let dup_param = r#"[{"name": "A", "parameters": [
            {"name": "x", "type": "string", "required": true},
            {"name": "x", "type": "string", "required": false}]}]"#;
        assert!(matches!(
            load_registry(dup_param, Dialect::Native),
            Err(SchemaError::DuplicateParameter { .. })
        ));
    }

    #[test]
    fn nested_object_specs_round_trip() {
        let src = r#"[{"name": "BookHotel", "parameters": [
            {"name": "hotel_id", "type": "string", "required": true},
            {"name": "check_details", "type": "object", "required": true, "properties": [
                {"name": "check_in", "type": "string", "required": true},
                {"name": "late", "type": "boolean", "required": false, "default": false}]}]}]"#;
        let reg = load_registry(src, Dialect::Native).unwrap();
        let again = load_registry(&reg.to_native_document(), Dialect::Native).unwrap();
        assert_eq!(reg, again);
        let nested = reg.lookup("BookHotel").unwrap().param("check_details").unwrap();
        assert_eq!(nested.properties.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn restrict_keeps_only_named_tools() {
        let reg = load_registry(WEATHER, Dialect::Native).unwrap();
        let sub = reg.restrict(["Get_weather", "Nope"]);
        assert_eq!(sub.len(), 1);
        assert!(reg.restrict(["Nope"]).is_empty());
    }
}
