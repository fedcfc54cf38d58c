//! The textual input language: lexer, parser and printer.

mod lexer;
mod parser;
mod printer;

use thiserror::Error;

pub use parser::parse_spec;
pub use printer::print_spec;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{CEO_CHECK_TEXT, CEO_TEXT};
    use crate::structural::Stage;

    #[test]
    fn ceo_spec_has_expected_shape() {
        let s = parse_spec(CEO_TEXT).unwrap();
        assert_eq!(s.schema.classes.len(), 3);
        assert_eq!(s.scope.role_bounds.len(), 4);
        let full = s.rules_at(Stage::Full).count() + s.acyclic.len();
        assert_eq!(full, 2);
        assert_eq!(s.acyclic.len(), 1);
        assert_eq!(s.hooks.equation_count(), 4);
        assert!(!s.has_property);
    }

    #[test]
    fn inverted_class_range_is_rejected() {
        let text = CEO_TEXT.replace("class Company [1..1];", "class Company [1..0];");
        let e = parse_spec(&text).unwrap_err();
        assert!(e.message.contains("[1..0]"), "{e}");
        assert!(e.line > 1);
    }

    #[test]
    fn partial_rule_cannot_test_emptiness() {
        let text = CEO_TEXT.replace("forbid ceoHasManager full", "forbid ceoHasManager partial").replace(
            "E : Employee(manager contains M);",
            "E : Employee(manager = none);",
        );
        let e = parse_spec(&text).unwrap_err();
        assert!(e.message.contains("monotonic"), "{e}");
    }

    #[test]
    fn kind_and_name_errors_carry_positions() {
        let bad_kind = CEO_TEXT.replace("i(E, level) >= 0", "r(E, level) >= 0");
        let e = parse_spec(&bad_kind).unwrap_err();
        assert!(e.message.contains("sort Int"), "{e}");
        let bad_var = CEO_TEXT.replace("i(E, level) = 0", "i(X, level) = 0");
        let e = parse_spec(&bad_var).unwrap_err();
        assert!(e.message.contains("unknown variable `X`"), "{e}");
        let bad_class = CEO_TEXT.replace("acyclic Employee.manager;", "acyclic Staff.manager;");
        let e = parse_spec(&bad_class).unwrap_err();
        assert!(e.message.contains("unknown class `Staff`"), "{e}");
        let bad_that = CEO_TEXT.replace("empty -> true", "empty -> i(M, level) > 0");
        assert!(parse_spec(&bad_that).is_err());
    }

    #[test]
    fn subclasses_are_rejected() {
        let text = CEO_TEXT.replace("class Project {", "class Project extends Company {");
        assert!(parse_spec(&text).unwrap_err().message.contains("subclass"));
    }

    #[test]
    fn round_trip_is_identity() {
        for text in [CEO_TEXT, CEO_CHECK_TEXT] {
            let s = parse_spec(text).unwrap();
            let printed = print_spec(&s);
            assert_eq!(parse_spec(&printed).unwrap(), s, "{printed}");
        }
    }

    #[test]
    fn arithmetic_literals() {
        let text = CEO_TEXT.replace(
            "i(E, level) = 0;",
            "-2 * i(E, level) - 1/2 + 0.25 < -(i(E, level)) or not (i(E, level) != 1 and true);",
        );
        let s = parse_spec(&text).unwrap();
        let printed = print_spec(&s);
        assert!(printed.contains("-2"), "{printed}");
        assert!(printed.contains("1/4"), "{printed}");
        assert_eq!(parse_spec(&printed).unwrap(), s);
    }
}
