use std::collections::BTreeSet;

use apievo_core::adl::parse_definition;
use apievo_core::codec::{decode, encode, to_client, to_internal, CodecError, ConversionOptions, RecordValue, Value};
use apievo_core::corpus::{customer_history, PERSON_CLIENT, R1_FULL_CLIENT, R4_GENDER_CLIENT};
use apievo_core::resolution::{resolve, ClientDefinition, Direction, ResolutionMap};
use apievo_core::schema::{derive_internal, schema_of, Schema, TypeExpr};

const ADA: [u8; 17] = [
    0x03, b'A', b'd', b'a', 0x08, b'L', b'o', b'v', b'e', b'l', b'a', b'c', b'e', 0x00, 0x00, 0x00, 0x01,
];

fn ada() -> Value {
    Value::Record(
        RecordValue::new("Customer")
            .with("firstName", Value::string("Ada"))
            .with("lastName", Value::string("Lovelace"))
            .with("gender", Value::Int32(1)),
    )
}

fn person_schema() -> Schema {
    schema_of(&parse_definition(PERSON_CLIENT).unwrap()).unwrap()
}

fn customer() -> TypeExpr {
    TypeExpr::Record { name: "Customer".into() }
}

fn map_for(text: &str, rev: u32) -> ResolutionMap {
    let h = customer_history();
    let ir = derive_internal(&h, &(1..=6).collect::<BTreeSet<_>>()).unwrap();
    resolve(&ClientDefinition::new(parse_definition(text).unwrap(), rev).unwrap(), &h, &ir).unwrap()
}

#[test]
fn golden_ada_bytes() {
    let s = person_schema();
    let bytes = encode(&ada(), &s, &customer(), Direction::Request).unwrap();
    assert_eq!(bytes, ADA);
    assert_eq!(decode(&ADA, &s, &customer(), Direction::Request).unwrap(), ada());
}

#[test]
fn empty_record_has_empty_payload() {
    let s = schema_of(&parse_definition("api x { record R {} }").unwrap()).unwrap();
    let ty = TypeExpr::Record { name: "R".into() };
    assert_eq!(encode(&Value::Record(RecordValue::new("R")), &s, &ty, Direction::Request).unwrap(), Vec::<u8>::new());
    assert_eq!(decode(&[], &s, &ty, Direction::Response).unwrap(), Value::Record(RecordValue::new("R")));
}

fn bounded() -> (Schema, TypeExpr) {
    let s = schema_of(
        &parse_definition(
            "api x { record R { string(5) s optional numeric(3) n optin int32[2] xs E e optional U u } \
             enum E { A B } abstract record U {} record V extends U { int32 v } record W extends U {} }",
        )
        .unwrap(),
    )
    .unwrap();
    (s, TypeExpr::Record { name: "R".into() })
}

fn r() -> RecordValue {
    RecordValue::new("R")
        .with("s", Value::string("abcde"))
        .with("xs", Value::List(vec![Value::Int32(1)]))
        .with("e", Value::Enum("B".into()))
}

#[test]
fn every_encode_error_is_reachable() {
    let (s, ty) = bounded();
    let enc = |v: RecordValue| encode(&Value::Record(v), &s, &ty, Direction::Request);
    assert!(enc(r()).is_ok());
    assert!(matches!(enc(r().with("s", Value::string("abcdef"))), Err(CodecError::BoundViolation { bound: 5, actual: 6, .. })));
    // the bound counts characters, not bytes
    assert!(enc(r().with("s", Value::string("ääääá"))).is_ok());
    assert!(matches!(enc(r().with("n", Value::Numeric("1234".into()))), Err(CodecError::BoundViolation { .. })));
    assert!(enc(r().with("n", Value::Numeric("-123".into()))).is_ok());
    assert!(matches!(enc(r().with("n", Value::Numeric("01".into()))), Err(CodecError::InvalidNumeric { .. })));
    assert!(matches!(enc(r().with("n", Value::Numeric("-0".into()))), Err(CodecError::InvalidNumeric { .. })));
    assert!(matches!(
        enc(r().with("xs", Value::List(vec![Value::Int32(1); 3]))),
        Err(CodecError::BoundViolation { ref path, .. }) if path == "R.xs"
    ));
    let mut missing = r();
    missing.fields.remove("s");
    assert_eq!(enc(missing), Err(CodecError::MissingMandatoryField { path: "R.s".into() }));
    // optin is optional in requests only
    let mut no_xs = r();
    no_xs.fields.remove("xs");
    assert!(enc(no_xs.clone()).is_ok());
    assert_eq!(
        encode(&Value::Record(no_xs), &s, &ty, Direction::Response),
        Err(CodecError::MissingMandatoryField { path: "R.xs".into() })
    );
    assert!(matches!(enc(r().with("e", Value::Enum("C".into()))), Err(CodecError::UnknownEnumMember { .. })));
    assert!(matches!(
        enc(r().with("u", Value::Union(RecordValue::new("U")))),
        Err(CodecError::UnknownUnionMember { .. })
    ));
    assert!(matches!(enc(r().with("s", Value::Int32(3))), Err(CodecError::TypeMismatch { .. })));
    assert!(matches!(enc(r().with("zz", Value::Int32(3))), Err(CodecError::UnknownField { .. })));
}

#[test]
fn every_decode_error_is_reachable() {
    let (s, ty) = bounded();
    let full = r().with("u", Value::Union(RecordValue::new("V").with("v", Value::Int32(7))));
    let bytes = encode(&Value::Record(full.clone()), &s, &ty, Direction::Request).unwrap();
    assert_eq!(decode(&bytes, &s, &ty, Direction::Request).unwrap(), Value::Record(full));

    let dec = |b: &[u8]| decode(b, &s, &ty, Direction::Request);
    assert!(matches!(dec(&bytes[..bytes.len() - 1]), Err(CodecError::Truncated { .. })));
    let mut trailing = bytes.clone();
    trailing.push(0);
    assert!(matches!(dec(&trailing), Err(CodecError::TrailingBytes { remaining: 1, .. })));

    // layout: s(6) n-presence(1) xs-presence(1) count(1) int(4) e(1) u-presence(1) tag(1) v(4)
    let tag_at = 6 + 1 + 1 + 1 + 4 + 1 + 1;
    let mut bad_tag = bytes.clone();
    bad_tag[tag_at] = 2;
    assert!(matches!(dec(&bad_tag), Err(CodecError::InvalidUnionTag { tag: 2, members: 2, .. })));
    let mut bad_ordinal = bytes.clone();
    bad_ordinal[tag_at - 2] = 5;
    assert!(matches!(dec(&bad_ordinal), Err(CodecError::InvalidEnumOrdinal { ordinal: 5, .. })));
    let mut bad_presence = bytes.clone();
    bad_presence[6] = 7;
    assert!(matches!(dec(&bad_presence), Err(CodecError::InvalidPresenceByte { byte: 7, .. })));
    let mut overlong = vec![0x85, 0x00];
    overlong.extend_from_slice(&bytes[1..]);
    assert!(matches!(dec(&overlong), Err(CodecError::MalformedVarint { offset: 0 })));
    let mut bad_utf8 = bytes.clone();
    bad_utf8[1] = 0xff;
    assert!(matches!(dec(&bad_utf8), Err(CodecError::InvalidUtf8 { .. })));
    let mut too_long = vec![6];
    too_long.extend_from_slice(b"abcdef");
    too_long.extend_from_slice(&bytes[6..]);
    assert!(matches!(dec(&too_long), Err(CodecError::BoundViolation { .. })));
}

#[test]
fn request_into_internal_representation() {
    let map = map_for(PERSON_CLIENT, 1);
    let internal = to_internal(&ada(), &map, "Customer", Direction::Request).unwrap();
    let rec = internal.as_record().unwrap();
    assert_eq!(rec.type_name, "Customer");
    assert_eq!(rec.fields.get("gender"), Some(&Value::Int32(1)));
    assert!(!rec.fields.contains_key("genderNew"));
    assert_eq!(rec.fields.get("lastName"), Some(&Value::string("Lovelace")));

    let back = to_client(&internal, &map, "Customer", Direction::Response, &ConversionOptions::default()).unwrap();
    assert_eq!(back, ada());
    let s = person_schema();
    assert_eq!(encode(&back, &s, &customer(), Direction::Response).unwrap(), ADA);
}

fn address() -> RecordValue {
    RecordValue::new("Address")
        .with("street", Value::string("Main Street"))
        .with("houseNumber", Value::string("1"))
        .with("postalCode", Value::string("12345"))
        .with("city", Value::string("Springfield"))
}

#[test]
fn address_lands_in_primary_address() {
    let map = map_for(R1_FULL_CLIENT, 1);
    let v = Value::Record(
        RecordValue::new("Customer")
            .with("firstName", Value::string("Ada"))
            .with("lastName", Value::string("Lovelace"))
            .with("address", Value::Record(address()))
            .with("gender", Value::Int32(1)),
    );
    let internal = to_internal(&v, &map, "Customer", Direction::Request).unwrap();
    let primary = internal.as_record().unwrap().fields.get("primaryAddress").unwrap();
    let Value::Union(a) = primary else { panic!("{primary:?}") };
    assert_eq!(a.type_name, "StreetAddress");
    assert_eq!(a.fields.len(), 4);
    assert_eq!(to_client(&internal, &map, "Customer", Direction::Response, &ConversionOptions::default()).unwrap(), v);
}

#[test]
fn unrepresentable_po_box() {
    let map = map_for(R1_FULL_CLIENT, 1);
    let internal = Value::Record(
        RecordValue::new("Customer")
            .with("firstName", Value::string("Ada"))
            .with("lastName", Value::string("Lovelace"))
            .with("gender", Value::Int32(1))
            .with(
                "primaryAddress",
                Value::Union(
                    RecordValue::new("POBoxAddress")
                        .with("postalCode", Value::string("12345"))
                        .with("city", Value::string("Springfield"))
                        .with("boxNumber", Value::string("42")),
                ),
            ),
    );
    let err = to_client(&internal, &map, "Customer", Direction::Response, &ConversionOptions::default()).unwrap_err();
    assert!(matches!(err, CodecError::UnrepresentableValue { ref path, .. } if path == "Customer.address"), "{err}");
}

#[test]
fn unrepresentable_enum_member_and_fallback() {
    let map = map_for(R4_GENDER_CLIENT, 4);
    let internal = Value::Record(
        RecordValue::new("Customer")
            .with("firstName", Value::string("Ada"))
            .with("lastName", Value::string("Lovelace"))
            .with("genderNew", Value::Enum("DIVERSE".into())),
    );
    let err = to_client(&internal, &map, "Customer", Direction::Response, &ConversionOptions::default()).unwrap_err();
    assert_eq!(
        err,
        CodecError::UnrepresentableValue { path: "Customer.gender".into(), detail: "enum member DIVERSE".into() }
    );
    let opts = ConversionOptions::default().with_fallback("Gender", "FEMALE");
    let v = to_client(&internal, &map, "Customer", Direction::Response, &opts).unwrap();
    assert_eq!(v.as_record().unwrap().fields["gender"], Value::Enum("FEMALE".into()));
}

#[test]
fn missing_field_in_response() {
    let map = map_for(PERSON_CLIENT, 1);
    let internal = Value::Record(RecordValue::new("Customer").with("firstName", Value::string("Ada")));
    let err = to_client(&internal, &map, "Customer", Direction::Response, &ConversionOptions::default()).unwrap_err();
    assert_eq!(err, CodecError::MissingMandatoryField { path: "Customer.lastName".into() });
}
