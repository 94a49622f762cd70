use std::collections::BTreeMap;

use super::{is_canonical_numeric, numeric_digits, CodecError, RecordValue, Value};
use crate::resolution::Direction;
use crate::schema::{Schema, SchemaRecord, TypeExpr};

/// Encodes `value` as type `ty` of `schema`.
pub fn encode(value: &Value, schema: &Schema, ty: &TypeExpr, direction: Direction) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::new();
    let mut path = root_path(ty);
    Encoder { schema, direction, out: &mut out }.value(value, ty, &mut path)?;
    Ok(out)
}

/// Decodes one value of type `ty`; the input must be consumed completely.
pub fn decode(bytes: &[u8], schema: &Schema, ty: &TypeExpr, direction: Direction) -> Result<Value, CodecError> {
    let mut d = Decoder { schema, direction, bytes, pos: 0 };
    let mut path = root_path(ty);
    let v = d.value(ty, &mut path)?;
    if d.pos != bytes.len() {
        return Err(CodecError::TrailingBytes { offset: d.pos, remaining: bytes.len() - d.pos });
    }
    Ok(v)
}

pub(crate) fn root_path(ty: &TypeExpr) -> String {
    match ty {
        TypeExpr::Record { name } | TypeExpr::Enum { name } => name.clone(),
        other => other.to_string(),
    }
}

fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn check_bound(path: &str, bound: Option<u32>, actual: usize) -> Result<(), CodecError> {
    match bound {
        Some(b) if actual > b as usize => Err(CodecError::BoundViolation { path: path.to_string(), bound: b, actual }),
        _ => Ok(()),
    }
}

fn record_schema<'s>(schema: &'s Schema, name: &str, path: &str) -> Result<&'s SchemaRecord, CodecError> {
    schema
        .record(name)
        .ok_or_else(|| CodecError::UnknownType { path: path.to_string(), name: name.to_string() })
}

struct Encoder<'a> {
    schema: &'a Schema,
    direction: Direction,
    out: &'a mut Vec<u8>,
}

impl Encoder<'_> {
    fn mismatch(path: &str, ty: &TypeExpr) -> CodecError {
        CodecError::TypeMismatch { path: path.to_string(), expected: ty.to_string() }
    }

    fn value(&mut self, v: &Value, ty: &TypeExpr, path: &mut String) -> Result<(), CodecError> {
        match (ty, v) {
            (TypeExpr::Int32, Value::Int32(i)) => self.out.extend_from_slice(&i.to_be_bytes()),
            (TypeExpr::Numeric { digits }, Value::Numeric(n)) => {
                if !is_canonical_numeric(n) {
                    return Err(CodecError::InvalidNumeric { path: path.clone(), value: n.clone() });
                }
                check_bound(path, *digits, numeric_digits(n))?;
                write_varint(self.out, n.len() as u64);
                self.out.extend_from_slice(n.as_bytes());
            }
            (TypeExpr::String { length }, Value::String(s)) => {
                check_bound(path, *length, s.chars().count())?;
                write_varint(self.out, s.len() as u64);
                self.out.extend_from_slice(s.as_bytes());
            }
            (TypeExpr::List { element, bound }, Value::List(items)) => {
                check_bound(path, *bound, items.len())?;
                write_varint(self.out, items.len() as u64);
                let base = path.len();
                for (i, item) in items.iter().enumerate() {
                    path.push_str(&format!("[{i}]"));
                    self.value(item, element, path)?;
                    path.truncate(base);
                }
            }
            (TypeExpr::Enum { name }, Value::Enum(m)) => {
                let e = self
                    .schema
                    .enum_type(name)
                    .ok_or_else(|| CodecError::UnknownType { path: path.clone(), name: name.clone() })?;
                let ordinal = e
                    .members
                    .iter()
                    .position(|x| x == m)
                    .ok_or_else(|| CodecError::UnknownEnumMember { path: path.clone(), member: m.clone() })?;
                write_varint(self.out, ordinal as u64);
            }
            (TypeExpr::Record { name }, Value::Record(r)) => {
                if &r.type_name != name {
                    return Err(Self::mismatch(path, ty));
                }
                self.record(r, path)?;
            }
            (TypeExpr::Union { members }, Value::Union(r)) => {
                let tag = members
                    .iter()
                    .position(|m| m == &r.type_name)
                    .ok_or_else(|| CodecError::UnknownUnionMember { path: path.clone(), member: r.type_name.clone() })?;
                write_varint(self.out, tag as u64);
                self.record(r, path)?;
            }
            _ => return Err(Self::mismatch(path, ty)),
        }
        Ok(())
    }

    fn record(&mut self, r: &RecordValue, path: &mut String) -> Result<(), CodecError> {
        let rs = record_schema(self.schema, &r.type_name, path)?;
        if let Some(extra) = r.fields.keys().find(|k| rs.field(k).is_none()) {
            return Err(CodecError::UnknownField { path: format!("{path}.{extra}") });
        }
        let base = path.len();
        for f in &rs.fields {
            path.push('.');
            path.push_str(&f.name);
            let optional = self.direction.may_omit(f.optionality);
            match (r.fields.get(&f.name), optional) {
                (None, false) => return Err(CodecError::MissingMandatoryField { path: path.clone() }),
                (None, true) => self.out.push(0),
                (Some(v), opt) => {
                    if opt {
                        self.out.push(1);
                    }
                    self.value(v, &f.ty, path)?;
                }
            }
            path.truncate(base);
        }
        Ok(())
    }
}

struct Decoder<'a> {
    schema: &'a Schema,
    direction: Direction,
    bytes: &'a [u8],
    pos: usize,
}

impl Decoder<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CodecError> {
        if self.bytes.len() - self.pos < n {
            return Err(CodecError::Truncated { offset: self.bytes.len() });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn varint(&mut self) -> Result<u64, CodecError> {
        let start = self.pos;
        let mut result: u64 = 0;
        for i in 0..10 {
            let Some(&byte) = self.bytes.get(self.pos) else {
                return Err(CodecError::Truncated { offset: self.bytes.len() });
            };
            self.pos += 1;
            let bits = u64::from(byte & 0x7f);
            if i == 9 && bits > 1 {
                return Err(CodecError::MalformedVarint { offset: start });
            }
            result |= bits << (7 * i);
            if byte & 0x80 == 0 {
                // a final zero byte after the first means the encoding is overlong
                if byte == 0 && i > 0 {
                    return Err(CodecError::MalformedVarint { offset: start });
                }
                return Ok(result);
            }
        }
        Err(CodecError::MalformedVarint { offset: start })
    }

    fn length(&mut self) -> Result<usize, CodecError> {
        let offset = self.pos;
        let n = self.varint()?;
        let n = usize::try_from(n).map_err(|_| CodecError::MalformedVarint { offset })?;
        Ok(n)
    }

    fn value(&mut self, ty: &TypeExpr, path: &mut String) -> Result<Value, CodecError> {
        Ok(match ty {
            TypeExpr::Int32 => {
                let b = self.take(4)?;
                Value::Int32(i32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            }
            TypeExpr::Numeric { digits } => {
                let n = self.length()?;
                let offset = self.pos;
                let s = std::str::from_utf8(self.take(n)?).map_err(|_| CodecError::InvalidUtf8 { offset })?;
                if !is_canonical_numeric(s) {
                    return Err(CodecError::InvalidNumeric { path: path.clone(), value: s.to_string() });
                }
                check_bound(path, *digits, numeric_digits(s))?;
                Value::Numeric(s.to_string())
            }
            TypeExpr::String { length } => {
                let n = self.length()?;
                let offset = self.pos;
                let s = std::str::from_utf8(self.take(n)?).map_err(|_| CodecError::InvalidUtf8 { offset })?;
                check_bound(path, *length, s.chars().count())?;
                Value::String(s.to_string())
            }
            TypeExpr::List { element, bound } => {
                let n = self.length()?;
                check_bound(path, *bound, n)?;
                // every element takes at least one byte, except empty records
                let mut items = Vec::with_capacity(n.min(self.bytes.len() - self.pos));
                let base = path.len();
                for i in 0..n {
                    path.push_str(&format!("[{i}]"));
                    items.push(self.value(element, path)?);
                    path.truncate(base);
                }
                Value::List(items)
            }
            TypeExpr::Enum { name } => {
                let e = self
                    .schema
                    .enum_type(name)
                    .ok_or_else(|| CodecError::UnknownType { path: path.clone(), name: name.clone() })?;
                let offset = self.pos;
                let ordinal = self.varint()?;
                let member = usize::try_from(ordinal).ok().and_then(|i| e.members.get(i)).ok_or(
                    CodecError::InvalidEnumOrdinal { offset, ordinal, members: e.members.len() },
                )?;
                Value::Enum(member.clone())
            }
            TypeExpr::Record { name } => Value::Record(self.record(name, path)?),
            TypeExpr::Union { members } => {
                let offset = self.pos;
                let tag = self.varint()?;
                let name = usize::try_from(tag)
                    .ok()
                    .and_then(|i| members.get(i))
                    .ok_or(CodecError::InvalidUnionTag { offset, tag, members: members.len() })?;
                Value::Union(self.record(name, path)?)
            }
        })
    }

    fn record(&mut self, name: &str, path: &mut String) -> Result<RecordValue, CodecError> {
        let rs = record_schema(self.schema, name, path)?;
        let mut fields = BTreeMap::new();
        let base = path.len();
        for f in &rs.fields {
            path.push('.');
            path.push_str(&f.name);
            let present = if self.direction.may_omit(f.optionality) {
                let offset = self.pos;
                match self.take(1)?[0] {
                    0 => false,
                    1 => true,
                    byte => return Err(CodecError::InvalidPresenceByte { offset, byte }),
                }
            } else {
                true
            };
            if present {
                fields.insert(f.name.clone(), self.value(&f.ty, path)?);
            }
            path.truncate(base);
        }
        Ok(RecordValue { type_name: name.to_string(), fields })
    }
}
