//! The property suites, each run for a given number of cases.

use std::collections::{BTreeMap, BTreeSet};

use apievo_core::adl::{parse_definition, print_definition, Optionality};
use apievo_core::codec::{decode, encode};
use apievo_core::revision::PredecessorMap;
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::TestError;

use super::{history, oracle, runner, values};

fn outcome<T: std::fmt::Debug>(r: Result<(), TestError<T>>) -> Result<(), String> {
    r.map_err(|e| match e {
        TestError::Abort(why) => format!("aborted: {why}"),
        TestError::Fail(why, input) => format!("{why}\nminimal input: {input:#?}"),
    })
}

/// decode(encode(v)) == v for generated schemas and values.
pub fn codec_round_trip(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&values::case(), |c| {
        let bytes = encode(&c.value, &c.schema, &c.ty, c.direction).map_err(|e| TestCaseError::fail(format!("encode: {e}")))?;
        let back = decode(&bytes, &c.schema, &c.ty, c.direction).map_err(|e| TestCaseError::fail(format!("decode: {e}")))?;
        prop_assert_eq!(back, c.value);
        Ok(())
    }))
}

#[derive(Debug, Clone, Copy)]
pub enum Mutation {
    Flip(usize, u8),
    Insert(usize, u8),
    Delete(usize),
    Truncate(usize),
}

fn mutation() -> impl Strategy<Value = Mutation> {
    prop_oneof![
        (any::<usize>(), 1u8..=255).prop_map(|(i, m)| Mutation::Flip(i, m)),
        (any::<usize>(), any::<u8>()).prop_map(|(i, b)| Mutation::Insert(i, b)),
        any::<usize>().prop_map(Mutation::Delete),
        any::<usize>().prop_map(Mutation::Truncate),
    ]
}

fn mutate(bytes: &[u8], m: Mutation) -> Vec<u8> {
    let mut out = bytes.to_vec();
    let at = |i: usize, n: usize| if n == 0 { 0 } else { i % n };
    match m {
        Mutation::Flip(i, mask) if !out.is_empty() => {
            let i = at(i, out.len());
            out[i] ^= mask;
        }
        Mutation::Flip(_, mask) => out.push(mask),
        Mutation::Insert(i, b) => {
            let i = at(i, out.len() + 1);
            out.insert(i, b);
        }
        Mutation::Delete(i) if !out.is_empty() => {
            out.remove(at(i, out.len()));
        }
        Mutation::Delete(_) => {}
        Mutation::Truncate(i) => out.truncate(at(i, out.len())),
    }
    out
}

/// Any byte string that decodes is the canonical encoding of its value, so
/// every accepted mutation re-encodes to exactly the mutated bytes.
pub fn codec_canonical(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(values::case(), vec(mutation(), 1..4)), |(c, ms)| {
        let bytes = encode(&c.value, &c.schema, &c.ty, c.direction).map_err(|e| TestCaseError::fail(format!("encode: {e}")))?;
        for m in ms {
            let mutated = mutate(&bytes, m);
            if let Ok(v) = decode(&mutated, &c.schema, &c.ty, c.direction) {
                let again =
                    encode(&v, &c.schema, &c.ty, c.direction).map_err(|e| TestCaseError::fail(format!("re-encode: {e}")))?;
                prop_assert_eq!(again, mutated, "accepted non-canonical bytes after {:?}", m);
            }
        }
        Ok(())
    }))
}

fn injective<K: std::fmt::Debug, V: Ord + std::fmt::Debug>(what: &str, m: &BTreeMap<K, V>) -> Result<(), TestCaseError> {
    let mut seen = BTreeSet::new();
    for (k, v) in m {
        prop_assert!(seen.insert(v), "{} relation maps two elements to {:?} (one is {:?})", what, v, k);
    }
    Ok(())
}

fn check_relations(m: &PredecessorMap) -> Result<(), TestCaseError> {
    injective("type", &m.types)?;
    injective("service", &m.services)?;
    injective("operation", &m.operations)?;
    injective("enum member", &m.enum_members)?;
    injective("field", &m.fields)?;
    prop_assert!(m.is_injective());
    for k in m.field_type_changes.keys() {
        prop_assert!(!m.fields.contains_key(k), "field {} both related and type-changed", k);
    }
    let related: BTreeSet<_> = m.fields.values().collect();
    for v in m.field_type_changes.values() {
        prop_assert!(!related.contains(v), "field {} both related and type-changed", v);
    }
    for k in m.operation_type_changes.keys() {
        prop_assert!(!m.operations.contains_key(k), "operation {} both related and type-changed", k);
    }
    Ok(())
}

/// Every relation between consecutive generated revisions is injective.
pub fn relations_injective(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&history::plan(), |plan| {
        let (_, h) = history::build(&plan);
        for m in h.relations() {
            check_relations(m)?;
        }
        Ok(())
    }))
}

/// The internal representation is the union of the supported revisions, as
/// predicted by an independent model.
pub fn internal_union(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&history::plan(), |plan| {
        let (defs, h) = history::build(&plan);
        let supported = plan.supported_set(defs.len());
        oracle::check(&defs, &h, &supported).map_err(TestCaseError::fail)
    }))
}

fn level() -> impl Strategy<Value = Optionality> {
    prop_oneof![Just(Optionality::Mandatory), Just(Optionality::Optin), Just(Optionality::Optional)]
}

/// Merging optionality is the least upper bound and a semilattice.
pub fn optionality_lattice(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(vec(level(), 1..6), level(), level(), level()), |(xs, a, b, c)| {
        let folded = xs.iter().copied().reduce(Optionality::merge).unwrap();
        prop_assert_eq!(folded, oracle::lub_by_search(&xs));
        prop_assert_eq!(a.merge(b), b.merge(a));
        prop_assert_eq!(a.merge(b).merge(c), a.merge(b.merge(c)));
        prop_assert_eq!(a.merge(a), a);
        Ok(())
    }))
}

/// Printing a generated definition and parsing it back gives the same tree.
pub fn print_parse(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&history::plan(), |plan| {
        let (defs, _) = history::build(&plan);
        for d in defs {
            let text = print_definition(&d);
            let back = parse_definition(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
            prop_assert_eq!(back, d, "{}", text);
        }
        Ok(())
    }))
}
