use std::collections::BTreeMap;

use super::{decode, encode, CodecError, RecordValue, Value};
use crate::resolution::{Direction, ResolutionMap};
use crate::schema::TypeExpr;

/// Explicit handling of values an older client cannot express.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConversionOptions {
    /// Client enum name → client member to use for internal members the
    /// client does not know.
    pub enum_fallbacks: BTreeMap<String, String>,
}

impl ConversionOptions {
    pub fn with_fallback(mut self, enum_name: impl Into<String>, member: impl Into<String>) -> Self {
        self.enum_fallbacks.insert(enum_name.into(), member.into());
        self
    }
}

/// Converts a value of client type `type_name` into the provider's internal
/// representation.
pub fn to_internal(
    value: &Value,
    map: &ResolutionMap,
    type_name: &str,
    direction: Direction,
) -> Result<Value, CodecError> {
    let (cty, ity) = root_types(map, type_name)?;
    let mut path = type_name.to_string();
    Converter { map, direction, options: None }.inward(value, cty, ity, &mut path)
}

/// Converts an internal value into a value of client type `type_name`.
pub fn to_client(
    value: &Value,
    map: &ResolutionMap,
    type_name: &str,
    direction: Direction,
    options: &ConversionOptions,
) -> Result<Value, CodecError> {
    let (cty, ity) = root_types(map, type_name)?;
    let mut path = type_name.to_string();
    Converter { map, direction, options: Some(options) }.outward(value, cty, ity, &mut path)
}

/// The internal type that client type `type_name` converts into.
pub fn internal_type<'m>(map: &'m ResolutionMap, type_name: &str) -> Result<&'m TypeExpr, CodecError> {
    root_types(map, type_name).map(|(_, internal)| internal)
}

/// Converts an encoded payload between the client and the provider. A
/// request goes from client bytes to internal bytes, a response from
/// internal bytes to client bytes.
pub fn convert_payload(
    bytes: &[u8],
    map: &ResolutionMap,
    type_name: &str,
    direction: Direction,
    options: &ConversionOptions,
) -> Result<Vec<u8>, CodecError> {
    let (cty, ity) = root_types(map, type_name)?;
    match direction {
        Direction::Request => {
            let value = decode(bytes, &map.client, cty, direction)?;
            let internal = to_internal(&value, map, type_name, direction)?;
            encode(&internal, &map.internal, ity, direction)
        }
        Direction::Response => {
            let value = decode(bytes, &map.internal, ity, direction)?;
            let client = to_client(&value, map, type_name, direction, options)?;
            encode(&client, &map.client, cty, direction)
        }
    }
}

fn root_types<'m>(map: &'m ResolutionMap, type_name: &str) -> Result<(&'m TypeExpr, &'m TypeExpr), CodecError> {
    let unknown = || CodecError::UnknownType { path: type_name.to_string(), name: type_name.to_string() };
    let cty = map.client.type_expr(type_name).ok_or_else(unknown)?;
    let internal = match (map.records.get(type_name), map.enums.get(type_name)) {
        (Some(r), _) => &r.internal,
        (None, Some(e)) => &e.internal,
        (None, None) => {
            // an abstract client type: every member resolves into the same hierarchy
            let first = match cty {
                TypeExpr::Union { members } => members.first(),
                _ => None,
            };
            let internal = first.and_then(|m| map.records.get(m)).ok_or_else(unknown)?;
            return Ok((cty, internal_root(map, &internal.internal).ok_or_else(unknown)?));
        }
    };
    Ok((cty, map.internal.type_expr(internal).ok_or_else(unknown)?))
}

/// The widest internal reference containing `record`.
fn internal_root<'m>(map: &'m ResolutionMap, record: &str) -> Option<&'m TypeExpr> {
    map.internal
        .references
        .values()
        .filter(|t| match t {
            TypeExpr::Union { members } => members.iter().any(|m| m == record),
            TypeExpr::Record { name } => name == record,
            _ => false,
        })
        .max_by_key(|t| match t {
            TypeExpr::Union { members } => members.len(),
            _ => 1,
        })
}

struct Converter<'a> {
    map: &'a ResolutionMap,
    direction: Direction,
    options: Option<&'a ConversionOptions>,
}

fn mismatch(path: &str, ty: &TypeExpr) -> CodecError {
    CodecError::TypeMismatch { path: path.to_string(), expected: ty.to_string() }
}

fn wrap(r: RecordValue, ty: &TypeExpr, path: &str) -> Result<Value, CodecError> {
    match ty {
        TypeExpr::Record { name } if *name == r.type_name => Ok(Value::Record(r)),
        TypeExpr::Union { members } if members.contains(&r.type_name) => Ok(Value::Union(r)),
        TypeExpr::Record { .. } | TypeExpr::Union { .. } => {
            Err(CodecError::UnrepresentableValue { path: path.to_string(), detail: format!("record {}", r.type_name) })
        }
        other => Err(mismatch(path, other)),
    }
}

impl Converter<'_> {
    fn inward(&self, v: &Value, cty: &TypeExpr, ity: &TypeExpr, path: &mut String) -> Result<Value, CodecError> {
        match (cty, v) {
            (TypeExpr::Int32, Value::Int32(_))
            | (TypeExpr::Numeric { .. }, Value::Numeric(_))
            | (TypeExpr::String { .. }, Value::String(_)) => Ok(v.clone()),
            (TypeExpr::List { element: ce, .. }, Value::List(items)) => {
                let TypeExpr::List { element: ie, .. } = ity else { return Err(mismatch(path, ity)) };
                let base = path.len();
                let mut out = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    path.push_str(&format!("[{i}]"));
                    out.push(self.inward(item, ce, ie, path)?);
                    path.truncate(base);
                }
                Ok(Value::List(out))
            }
            (TypeExpr::Enum { name }, Value::Enum(m)) => {
                let em = self.map.enums.get(name).ok_or_else(|| mismatch(path, cty))?;
                let (_, internal) = em
                    .members
                    .iter()
                    .find(|(c, _)| c == m)
                    .ok_or_else(|| CodecError::UnknownEnumMember { path: path.clone(), member: m.clone() })?;
                Ok(Value::Enum(internal.clone()))
            }
            (TypeExpr::Record { name }, Value::Record(r)) if *name == r.type_name => {
                let rec = self.record_inward(r, path)?;
                wrap(rec, ity, path)
            }
            (TypeExpr::Union { members }, Value::Union(r)) => {
                if !members.contains(&r.type_name) {
                    return Err(CodecError::UnknownUnionMember { path: path.clone(), member: r.type_name.clone() });
                }
                let rec = self.record_inward(r, path)?;
                wrap(rec, ity, path)
            }
            _ => Err(mismatch(path, cty)),
        }
    }

    fn record_inward(&self, r: &RecordValue, path: &mut String) -> Result<RecordValue, CodecError> {
        let rm = self.map.records.get(&r.type_name).ok_or_else(|| CodecError::UnknownType {
            path: path.clone(),
            name: r.type_name.clone(),
        })?;
        let cr = self.map.client.record(&r.type_name).expect("resolved client record");
        let ir = self.map.internal.record(&rm.internal).expect("resolved internal record");
        if let Some(extra) = r.fields.keys().find(|k| cr.field(k).is_none()) {
            return Err(CodecError::UnknownField { path: format!("{path}.{extra}") });
        }
        let mut out = RecordValue::new(&rm.internal);
        let base = path.len();
        for (fm, cf) in rm.fields.iter().zip(&cr.fields) {
            path.push('.');
            path.push_str(&fm.name);
            match (r.fields.get(&fm.name), &fm.internal) {
                (Some(v), Some(internal)) => {
                    let ity = &ir.field(internal).expect("resolved internal field").ty;
                    out.fields.insert(internal.clone(), self.inward(v, &cf.ty, ity, path)?);
                }
                (None, _) if !self.direction.may_omit(cf.optionality) => {
                    return Err(CodecError::MissingMandatoryField { path: path.clone() });
                }
                _ => {}
            }
            path.truncate(base);
        }
        Ok(out)
    }

    fn outward(&self, v: &Value, cty: &TypeExpr, ity: &TypeExpr, path: &mut String) -> Result<Value, CodecError> {
        match (ity, v) {
            (TypeExpr::Int32, Value::Int32(_))
            | (TypeExpr::Numeric { .. }, Value::Numeric(_))
            | (TypeExpr::String { .. }, Value::String(_)) => Ok(v.clone()),
            (TypeExpr::List { element: ie, .. }, Value::List(items)) => {
                let TypeExpr::List { element: ce, bound } = cty else { return Err(mismatch(path, cty)) };
                if let Some(b) = bound {
                    if items.len() > *b as usize {
                        return Err(CodecError::BoundViolation { path: path.clone(), bound: *b, actual: items.len() });
                    }
                }
                let base = path.len();
                let mut out = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    path.push_str(&format!("[{i}]"));
                    out.push(self.outward(item, ce, ie, path)?);
                    path.truncate(base);
                }
                Ok(Value::List(out))
            }
            (TypeExpr::Enum { .. }, Value::Enum(m)) => {
                let TypeExpr::Enum { name } = cty else { return Err(mismatch(path, cty)) };
                let em = self.map.enums.get(name).ok_or_else(|| mismatch(path, cty))?;
                if let Some((client, _)) = em.members.iter().find(|(_, i)| i == m) {
                    return Ok(Value::Enum(client.clone()));
                }
                match self.options.and_then(|o| o.enum_fallbacks.get(name)) {
                    Some(fallback) => Ok(Value::Enum(fallback.clone())),
                    None => Err(CodecError::UnrepresentableValue {
                        path: path.clone(),
                        detail: format!("enum member {m}"),
                    }),
                }
            }
            (TypeExpr::Record { .. } | TypeExpr::Union { .. }, Value::Record(r) | Value::Union(r)) => {
                let Some(client_name) = self.map.client_record_for(&r.type_name) else {
                    return Err(CodecError::UnrepresentableValue {
                        path: path.clone(),
                        detail: format!("record {}", r.type_name),
                    });
                };
                let allowed = match cty {
                    TypeExpr::Record { name } => name == client_name,
                    TypeExpr::Union { members } => members.iter().any(|m| m == client_name),
                    _ => return Err(mismatch(path, cty)),
                };
                if !allowed {
                    return Err(CodecError::UnrepresentableValue {
                        path: path.clone(),
                        detail: format!("record {}", r.type_name),
                    });
                }
                let rec = self.record_outward(r, client_name, path)?;
                wrap(rec, cty, path)
            }
            _ => Err(mismatch(path, ity)),
        }
    }

    fn record_outward(&self, r: &RecordValue, client_name: &str, path: &mut String) -> Result<RecordValue, CodecError> {
        let rm = &self.map.records[client_name];
        let cr = self.map.client.record(client_name).expect("resolved client record");
        let ir = self.map.internal.record(&rm.internal).ok_or_else(|| CodecError::UnknownType {
            path: path.clone(),
            name: rm.internal.clone(),
        })?;
        if let Some(extra) = r.fields.keys().find(|k| ir.field(k).is_none()) {
            return Err(CodecError::UnknownField { path: format!("{path}.{extra}") });
        }
        let mut out = RecordValue::new(client_name);
        let base = path.len();
        for (fm, cf) in rm.fields.iter().zip(&cr.fields) {
            path.push('.');
            path.push_str(&fm.name);
            let internal_value = fm.internal.as_ref().and_then(|i| r.fields.get(i).map(|v| (i, v)));
            match internal_value {
                Some((i, v)) => {
                    let ity = &ir.field(i).expect("resolved internal field").ty;
                    out.fields.insert(fm.name.clone(), self.outward(v, &cf.ty, ity, path)?);
                }
                None if !self.direction.may_omit(cf.optionality) => {
                    return Err(CodecError::MissingMandatoryField { path: path.clone() });
                }
                None => {}
            }
            path.truncate(base);
        }
        Ok(out)
    }
}
