//! Values, their binary encoding, and conversion between client and
//! provider representations.
//!
//! Wire format, all integers unsigned LEB128 unless noted:
//!
//! | type        | encoding                                              |
//! |-------------|-------------------------------------------------------|
//! | `int32`     | 4 bytes, big-endian two's complement                  |
//! | `numeric`   | length, then ASCII digits with an optional leading `-` |
//! | `string`    | byte length, then UTF-8                               |
//! | record      | fields in schema order                                |
//! | list        | element count, then the elements                      |
//! | enum        | member ordinal                                        |
//! | union       | member index, then the record                         |
//!
//! A field that may be absent in the current direction is preceded by a
//! presence byte, `0x00` or `0x01`. Mandatory fields have none.

mod convert;
mod value;
mod wire;

pub use convert::{convert_payload, internal_type, to_client, to_internal, ConversionOptions};
pub use value::{RecordValue, Value};
pub use wire::{decode, encode};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum CodecError {
    #[error("{path}: {actual} exceeds the bound of {bound}")]
    BoundViolation { path: String, bound: u32, actual: usize },
    #[error("{path}: mandatory field is missing")]
    MissingMandatoryField { path: String },
    #[error("{path}: `{member}` is not a member of the enumeration")]
    UnknownEnumMember { path: String, member: String },
    #[error("{path}: `{member}` is not a member of the union")]
    UnknownUnionMember { path: String, member: String },
    #[error("{path}: expected a value of type {expected}")]
    TypeMismatch { path: String, expected: String },
    #[error("{path}: field is not part of the schema")]
    UnknownField { path: String },
    #[error("{path}: type {name} is not part of the schema")]
    UnknownType { path: String, name: String },
    #[error("{path}: `{value}` is not a canonical decimal number")]
    InvalidNumeric { path: String, value: String },
    #[error("offset {offset}: input ends prematurely")]
    Truncated { offset: usize },
    #[error("offset {offset}: malformed varint")]
    MalformedVarint { offset: usize },
    #[error("offset {offset}: union tag {tag} out of range for {members} members")]
    InvalidUnionTag { offset: usize, tag: u64, members: usize },
    #[error("offset {offset}: enum ordinal {ordinal} out of range for {members} members")]
    InvalidEnumOrdinal { offset: usize, ordinal: u64, members: usize },
    #[error("offset {offset}: presence byte must be 0 or 1, found {byte:#04x}")]
    InvalidPresenceByte { offset: usize, byte: u8 },
    #[error("offset {offset}: string is not valid UTF-8")]
    InvalidUtf8 { offset: usize },
    #[error("offset {offset}: {remaining} trailing bytes")]
    TrailingBytes { offset: usize, remaining: usize },
    #[error("{path}: {detail} cannot be represented for this client")]
    UnrepresentableValue { path: String, detail: String },
}

impl CodecError {
    pub fn kind(&self) -> &'static str {
        match self {
            CodecError::BoundViolation { .. } => "BoundViolation",
            CodecError::MissingMandatoryField { .. } => "MissingMandatoryField",
            CodecError::UnknownEnumMember { .. } => "UnknownEnumMember",
            CodecError::UnknownUnionMember { .. } => "UnknownUnionMember",
            CodecError::TypeMismatch { .. } => "TypeMismatch",
            CodecError::UnknownField { .. } => "UnknownField",
            CodecError::UnknownType { .. } => "UnknownType",
            CodecError::InvalidNumeric { .. } => "InvalidNumeric",
            CodecError::Truncated { .. } => "Truncated",
            CodecError::MalformedVarint { .. } => "MalformedVarint",
            CodecError::InvalidUnionTag { .. } => "InvalidUnionTag",
            CodecError::InvalidEnumOrdinal { .. } => "InvalidEnumOrdinal",
            CodecError::InvalidPresenceByte { .. } => "InvalidPresenceByte",
            CodecError::InvalidUtf8 { .. } => "InvalidUtf8",
            CodecError::TrailingBytes { .. } => "TrailingBytes",
            CodecError::UnrepresentableValue { .. } => "UnrepresentableValue",
        }
    }
}

/// Canonical decimal: optional `-`, no leading zeros, no negative zero.
pub(crate) fn is_canonical_numeric(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return false;
    }
    if digits.len() > 1 && digits.starts_with('0') {
        return false;
    }
    !(s.starts_with('-') && digits == "0")
}

pub(crate) fn numeric_digits(s: &str) -> usize {
    s.strip_prefix('-').unwrap_or(s).len()
}
