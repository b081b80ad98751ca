mod common;

use common::knowledge_base;
use dsage_core::dsl::{parse_kb, parse_kb_bytes, serialize_kb, ParseError};
use dsage_core::seed::{seed_kb, SEED_DKB};
use proptest::prelude::*;

fn spans_in_bounds(text: &str, errors: &[ParseError]) -> bool {
    let lines: Vec<&str> = text.split('\n').collect();
    errors.iter().all(|e| {
        e.span.line >= 1
            && e.span.column >= 1
            && e.span.line <= lines.len()
            && e.span.column <= lines[e.span.line - 1].chars().count() + 1
    })
}

#[test]
fn seed_file_is_already_canonical() {
    assert_eq!(serialize_kb(&parse_kb(&serialize_kb(&seed_kb())).unwrap()), serialize_kb(&seed_kb()));
    // The shipped file carries comments, so it is not byte-identical, but it
    // parses to the same knowledge base as its canonical form.
    assert_eq!(parse_kb(SEED_DKB).unwrap(), parse_kb(&serialize_kb(&seed_kb())).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn round_trip(kb in knowledge_base(5, 12)) {
        let text = serialize_kb(&kb);
        let back = parse_kb(&text).map_err(|e| TestCaseError::fail(format!("{e:?}\n{text}")))?;
        prop_assert_eq!(&back, &kb);
        prop_assert_eq!(serialize_kb(&back), text);
    }

    #[test]
    fn parser_is_total_on_bytes(bytes in prop::collection::vec(any::<u8>(), 0..2048)) {
        let text = String::from_utf8_lossy(&bytes).into_owned();
        if let Err(errors) = parse_kb_bytes("fuzz", &bytes) {
            prop_assert!(!errors.is_empty() && errors.len() <= 100);
            prop_assert!(spans_in_bounds(&text, &errors));
        }
    }

    #[test]
    fn parser_is_total_on_token_soup(
        words in prop::collection::vec(
            prop::sample::select(vec![
                "kbformat", "1", "indicator", "rule", "mitigation", "if", "and", "or", "then",
                "cf", "0.5", "1.7", "{", "}", "[", "]", ",", "is", "shows", "category", "plant",
                "states", "alias", "\"x\"", "\"", "season", "spring", "#", "\n", "assert",
                "soil_moisture", "high", "evidence", "\"No evidence of drought\"",
            ]),
            0..300,
        )
    ) {
        let text = words.join(" ");
        if let Err(errors) = parse_kb(&text) {
            prop_assert!(spans_in_bounds(&text, &errors));
        }
    }

    #[test]
    fn parser_is_total_on_mutated_seed(cuts in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..8)) {
        let mut bytes = SEED_DKB.as_bytes().to_vec();
        for (at, b) in cuts {
            let i = at.index(bytes.len());
            bytes[i] = b;
        }
        let text = String::from_utf8_lossy(&bytes).into_owned();
        if let Err(errors) = parse_kb_bytes("seed", &bytes) {
            prop_assert!(spans_in_bounds(&text, &errors));
        }
    }
}
