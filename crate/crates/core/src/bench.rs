//! Conversion microbenchmark: an r1 customer request converted into the
//! internal representation of all six revisions and back.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::adl::parse_definition;
use crate::codec::{decode, encode, to_client, to_internal, CodecError, ConversionOptions, RecordValue, Value};
use crate::corpus::{customer_history, R1_FULL_CLIENT};
use crate::resolution::{resolve, ClientDefinition, Direction, ResolutionMap};
use crate::schema::{derive_internal, TypeExpr};

pub struct ConversionFixture {
    map: ResolutionMap,
    client_ty: TypeExpr,
    internal_ty: TypeExpr,
    options: ConversionOptions,
    /// Encoded client request.
    pub payload: Vec<u8>,
}

impl ConversionFixture {
    pub fn customer() -> Self {
        let history = customer_history();
        let supported: BTreeSet<_> = (1..=6).collect();
        let internal = derive_internal(&history, &supported).expect("bundled history derives");
        let client = ClientDefinition::new(parse_definition(R1_FULL_CLIENT).expect("bundled client parses"), 1)
            .expect("bundled client is valid");
        let map = resolve(&client, &history, &internal).expect("bundled client resolves");
        let client_ty = TypeExpr::Record { name: "Customer".into() };
        let internal_ty = map.internal.type_expr(&map.records["Customer"].internal).expect("internal Customer").clone();
        let payload = encode(&sample_customer(), &map.client, &client_ty, Direction::Request).expect("sample encodes");
        ConversionFixture { map, client_ty, internal_ty, options: ConversionOptions::default(), payload }
    }

    /// One full round trip: decode the client request, convert it inward,
    /// encode and decode it in the internal schema, convert it back and
    /// encode it as the client's response.
    pub fn round_trip(&self, payload: &[u8]) -> Result<Vec<u8>, CodecError> {
        let m = &self.map;
        let value = decode(payload, &m.client, &self.client_ty, Direction::Request)?;
        let internal = to_internal(&value, m, "Customer", Direction::Request)?;
        let bytes = encode(&internal, &m.internal, &self.internal_ty, Direction::Request)?;
        let internal = decode(&bytes, &m.internal, &self.internal_ty, Direction::Request)?;
        let back = to_client(&internal, m, "Customer", Direction::Response, &self.options)?;
        encode(&back, &m.client, &self.client_ty, Direction::Response)
    }
}

pub fn sample_customer() -> Value {
    Value::Record(
        RecordValue::new("Customer")
            .with("firstName", Value::string("Ada"))
            .with("lastName", Value::string("Lovelace"))
            .with(
                "address",
                Value::Record(
                    RecordValue::new("Address")
                        .with("street", Value::string("St James's Square"))
                        .with("houseNumber", Value::string("12"))
                        .with("postalCode", Value::string("SW1Y 4JH"))
                        .with("city", Value::string("London")),
                ),
            )
            .with("gender", Value::Int32(1)),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub iterations: usize,
    #[serde(serialize_with = "nanos")]
    pub median: Duration,
    #[serde(serialize_with = "nanos")]
    pub mean: Duration,
    #[serde(serialize_with = "nanos")]
    pub min: Duration,
    #[serde(serialize_with = "nanos")]
    pub max: Duration,
    #[serde(serialize_with = "nanos")]
    pub total: Duration,
}

fn nanos<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u128(d.as_nanos())
}

/// Times `iterations` round trips after a short warm-up. Each round trip
/// is checked to reproduce the input bytes.
pub fn run(iterations: usize) -> Result<BenchReport, CodecError> {
    assert!(iterations > 0, "at least one iteration");
    let start = Instant::now();
    let fixture = ConversionFixture::customer();
    for _ in 0..iterations.min(1000) {
        std::hint::black_box(fixture.round_trip(&fixture.payload)?);
    }
    let mut samples = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let t = Instant::now();
        let out = fixture.round_trip(std::hint::black_box(&fixture.payload))?;
        samples.push(t.elapsed());
        assert_eq!(out, fixture.payload, "round trip changed the payload");
    }
    samples.sort();
    let sum: Duration = samples.iter().sum();
    Ok(BenchReport {
        iterations,
        median: samples[iterations / 2],
        mean: sum / iterations as u32,
        min: samples[0],
        max: samples[iterations - 1],
        total: start.elapsed(),
    })
}
