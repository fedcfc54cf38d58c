//! Shared problem descriptions for unit tests.

use crate::dsl::parse_spec;
use crate::model::Oid;
use crate::spec::Spec;

pub const CEO_TEXT: &str = include_str!("../specs/ceo.mmf");
pub const CEO_CHECK_TEXT: &str = include_str!("../specs/ceo_check.mmf");

pub fn parse(text: &str) -> Spec {
    parse_spec(text).unwrap_or_else(|e| panic!("fixture does not parse: {e}"))
}

pub fn ceo_spec() -> Spec {
    parse(CEO_TEXT)
}

pub fn ceo_check_spec() -> Spec {
    parse(CEO_CHECK_TEXT)
}

/// Identifier of the CEO universe with the given rendered name.
pub fn oid(name: &str) -> Oid {
    ceo_spec()
        .universe()
        .by_name(name)
        .unwrap_or_else(|| panic!("no identifier {name}"))
        .clone()
}
