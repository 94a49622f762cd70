//! Random schemas and values conforming to them, for codec properties.
//! Records only reference earlier types, so every value is finite.

use std::collections::BTreeMap;

use apievo_core::adl::{ApiDefinition, Element, EnumMember, EnumType, Field, Optionality, RecordType, TypeRef};
use apievo_core::codec::{RecordValue, Value};
use apievo_core::resolution::Direction;
use apievo_core::schema::{schema_of, Schema, TypeExpr};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::select;

/// `(kind, bound)` per field; the kind picks the type modulo what exists.
type FieldSpec = (u8, u8, u8);

#[derive(Debug, Clone)]
pub struct Shape {
    enums: Vec<u8>,
    /// `(abstract, supertype pick, fields)`
    records: Vec<(bool, u8, Vec<FieldSpec>)>,
}

fn shape() -> impl Strategy<Value = Shape> {
    (
        vec(1u8..5, 0..4),
        vec((any::<bool>(), any::<u8>(), vec((any::<u8>(), any::<u8>(), any::<u8>()), 0..6)), 1..8),
    )
        .prop_map(|(enums, records)| Shape { enums, records })
}

fn build(shape: &Shape) -> ApiDefinition {
    let mut def = ApiDefinition::new("codec.sample");
    let mut earlier: Vec<String> = Vec::new();
    let mut abstracts: Vec<String> = Vec::new();
    for (i, n) in shape.enums.iter().enumerate() {
        let name = format!("E{i}");
        let members = (0..*n).map(|m| EnumMember { name: format!("V{m}"), replaces: None }).collect();
        def.elements.push(Element::Enum(EnumType { name: name.clone(), alias: None, members, replaces: None }));
        earlier.push(name);
    }
    for (i, (is_abstract, sup, fields)) in shape.records.iter().enumerate() {
        let mut r = RecordType::new(format!("R{i}"));
        // the first record stays concrete so the schema has a type to pick
        r.is_abstract = *is_abstract && i > 0;
        if *sup % 2 == 0 && !abstracts.is_empty() {
            r.super_type = Some(abstracts[*sup as usize / 2 % abstracts.len()].clone());
        }
        for (j, &(kind, bound, opt)) in fields.iter().enumerate() {
            let bound = if bound % 3 == 0 { None } else { Some(u32::from(bound % 12) + 1) };
            let scalar = match kind % 3 {
                0 => TypeRef::Int32,
                1 => TypeRef::Numeric(bound),
                _ => TypeRef::String(bound),
            };
            let ty = match kind % 7 {
                0..=2 => scalar,
                3 | 4 if !earlier.is_empty() => TypeRef::Named(earlier[kind as usize / 7 % earlier.len()].clone()),
                5 => TypeRef::List(Box::new(scalar), bound.map(|b| b % 4 + 1)),
                6 if !earlier.is_empty() => TypeRef::List(
                    Box::new(TypeRef::Named(earlier[kind as usize / 7 % earlier.len()].clone())),
                    Some(2),
                ),
                _ => scalar,
            };
            let mut f = Field::new(format!("f{i}_{j}"), ty);
            f.optionality = match opt % 4 {
                0 => None,
                1 => Some(Optionality::Mandatory),
                2 => Some(Optionality::Optin),
                _ => Some(Optionality::Optional),
            };
            r.fields.push(f);
        }
        if r.is_abstract {
            abstracts.push(r.name.clone());
        }
        // abstract records become usable once a concrete subtype exists
        let usable = !r.is_abstract;
        let sup = r.super_type.clone();
        def.elements.push(Element::Record(r));
        if usable {
            earlier.push(format!("R{i}"));
            let mut s = sup;
            while let Some(name) = s {
                if !earlier.contains(&name) {
                    earlier.push(name.clone());
                }
                // a referenced union must not grow, or records could nest
                // themselves, so its whole subtree is closed to new subtypes
                abstracts.retain(|a| !descends(&def, a, &name));
                s = def.record(&name).and_then(|x| x.super_type.clone());
            }
        }
    }
    def
}

fn descends(def: &ApiDefinition, from: &str, ancestor: &str) -> bool {
    let mut cur = Some(from.to_string());
    while let Some(name) = cur {
        if name == ancestor {
            return true;
        }
        cur = def.record(&name).and_then(|r| r.super_type.clone());
    }
    false
}

fn canonical_numeric(max_digits: usize) -> BoxedStrategy<String> {
    let n = max_digits.clamp(1, 24);
    prop_oneof![
        Just("0".to_string()),
        (any::<bool>(), 1u8..10, vec(0u8..10, 0..n)).prop_map(|(neg, first, rest)| {
            let mut s = String::new();
            if neg {
                s.push('-');
            }
            s.push(char::from(b'0' + first));
            s.extend(rest.iter().map(|d| char::from(b'0' + d)));
            s
        }),
    ]
    .boxed()
}

fn string_up_to(n: usize) -> BoxedStrategy<String> {
    vec(any::<char>(), 0..=n.min(16)).prop_map(|cs| cs.into_iter().collect()).boxed()
}

fn record_value(schema: &Schema, name: &str, direction: Direction, depth: u32) -> BoxedStrategy<RecordValue> {
    let rec = schema.record(name).expect("schema record");
    let name = name.to_string();
    let fields: Vec<BoxedStrategy<Option<(String, Value)>>> = rec
        .fields
        .iter()
        .map(|f| {
            let fname = f.name.clone();
            let v = value(schema, &f.ty, direction, depth + 1).prop_map(move |v| (fname.clone(), v));
            if direction.may_omit(f.optionality) {
                proptest::option::of(v).boxed()
            } else {
                v.prop_map(Some).boxed()
            }
        })
        .collect();
    fields
        .prop_map(move |fs| RecordValue { type_name: name.clone(), fields: fs.into_iter().flatten().collect::<BTreeMap<_, _>>() })
        .boxed()
}

pub fn value(schema: &Schema, ty: &TypeExpr, direction: Direction, depth: u32) -> BoxedStrategy<Value> {
    match ty {
        TypeExpr::Int32 => any::<i32>().prop_map(Value::Int32).boxed(),
        TypeExpr::Numeric { digits } => {
            canonical_numeric(digits.map_or(24, |d| d as usize)).prop_map(Value::Numeric).boxed()
        }
        TypeExpr::String { length } => string_up_to(length.map_or(16, |l| l as usize)).prop_map(Value::String).boxed(),
        TypeExpr::List { element, bound } => {
            let max = bound.map_or(3, |b| b as usize).min(if depth > 2 { 1 } else { 3 });
            vec(value(schema, element, direction, depth + 1), 0..=max).prop_map(Value::List).boxed()
        }
        TypeExpr::Enum { name } => {
            let members = schema.enum_type(name).expect("schema enum").members.clone();
            select(members).prop_map(Value::Enum).boxed()
        }
        TypeExpr::Record { name } => record_value(schema, name, direction, depth).prop_map(Value::Record).boxed(),
        TypeExpr::Union { members } => {
            let options: Vec<_> = members.iter().map(|m| record_value(schema, m, direction, depth)).collect();
            proptest::strategy::Union::new(options).prop_map(Value::Union).boxed()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Case {
    pub schema: Schema,
    pub ty: TypeExpr,
    pub direction: Direction,
    pub value: Value,
}

/// A schema, one of its types, a direction and a value of that type.
pub fn case() -> impl Strategy<Value = Case> {
    (shape(), any::<u8>(), any::<bool>()).prop_flat_map(|(shape, pick, request)| {
        let schema = schema_of(&build(&shape)).expect("generated schema derives");
        let names: Vec<&String> = schema.types.keys().collect();
        let name = names[pick as usize % names.len()].clone();
        let ty = schema.type_expr(&name).expect("named type").clone();
        let direction = if request { Direction::Request } else { Direction::Response };
        value(&schema, &ty, direction, 0).prop_map(move |value| Case {
            schema: schema.clone(),
            ty: ty.clone(),
            direction,
            value,
        })
    })
}
