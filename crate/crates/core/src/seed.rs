//! The bundled drought knowledge base.

use crate::dsl::parse_kb_named;
use crate::kb::KnowledgeBase;

/// Canonical `.dkb` text of the bundled knowledge base.
pub const SEED_DKB: &str = include_str!("../data/seed.dkb");

pub fn seed_kb() -> KnowledgeBase {
    match parse_kb_named("seed.dkb", SEED_DKB) {
        Ok(kb) => kb,
        Err(errors) => panic!("bundled seed.dkb is invalid: {}", errors[0]),
    }
}
