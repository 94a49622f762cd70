//! The customer example bundled with the library: six provider revisions
//! and the client definitions used in the documentation and benchmarks.

use crate::adl::{parse_definition, ApiDefinition};
use crate::revision::RevisionHistory;

pub const CUSTOMER_REVISIONS: [&str; 6] = [
    include_str!("../../../corpus/customer/rev-1.api"),
    include_str!("../../../corpus/customer/rev-2.api"),
    include_str!("../../../corpus/customer/rev-3.api"),
    include_str!("../../../corpus/customer/rev-4.api"),
    include_str!("../../../corpus/customer/rev-5.api"),
    include_str!("../../../corpus/customer/rev-6.api"),
];

/// Customer client with renamed internals, written against revision 1.
pub const PERSON_CLIENT: &str = include_str!("../../../corpus/clients/person.api");

/// Client covering every element of revision 1.
pub const R1_FULL_CLIENT: &str = include_str!("../../../corpus/clients/r1-full.api");

/// Client using the enum-typed gender of revision 4.
pub const R4_GENDER_CLIENT: &str = include_str!("../../../corpus/clients/r4-gender.api");

pub fn customer_definitions() -> Vec<ApiDefinition> {
    CUSTOMER_REVISIONS
        .iter()
        .map(|t| parse_definition(t).expect("bundled revision parses"))
        .collect()
}

pub fn customer_history() -> RevisionHistory {
    RevisionHistory::from_definitions(customer_definitions()).expect("bundled history is valid")
}
