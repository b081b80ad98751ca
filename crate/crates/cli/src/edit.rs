//! `dsage kb ...`: the knowledge-base editor.

use std::fs;
use std::io::Read;
use std::path::Path;

use dsage_core::dsl::{format_cf, parse_kb_bytes, parse_rules_into, serialize_kb};
use dsage_core::kb::{IndicatorCategory, KnowledgeBase, RuleId};

use crate::failure::{parse_errors, read_kb, Failure, Outcome};

fn summary(kb: &KnowledgeBase) -> String {
    format!("{} indicators, {} rules", kb.catalog_size(), kb.rules.len())
}

fn write_kb(path: &Path, kb: &KnowledgeBase) -> Outcome {
    fs::write(path, serialize_kb(kb)).map_err(|e| Failure::io(path.display(), e))
}

pub fn validate(path: &Path) -> Outcome {
    let bytes = fs::read(path).map_err(|e| Failure::io(path.display(), e))?;
    match parse_kb_bytes(&path.display().to_string(), &bytes) {
        Ok(kb) => {
            println!("{}", summary(&kb));
            Ok(())
        }
        Err(errors) => {
            for e in &errors {
                println!("{e}");
            }
            Err(Failure::Invalid(vec![format!("{} issue(s)", errors.len())]))
        }
    }
}

pub fn fmt(path: &Path, check: bool) -> Outcome {
    let original = fs::read(path).map_err(|e| Failure::io(path.display(), e))?;
    let kb = parse_kb_bytes(&path.display().to_string(), &original).map_err(|e| parse_errors(&e))?;
    let canonical = serialize_kb(&kb);
    if canonical.as_bytes() == original.as_slice() {
        return Ok(());
    }
    if check {
        return Err(Failure::invalid(format!("{} is not in canonical form", path.display())));
    }
    write_kb(path, &kb)?;
    println!("formatted {}", path.display());
    Ok(())
}

pub fn list(path: &Path, indicators: bool) -> Outcome {
    let kb = read_kb(path)?;
    println!("{}", summary(&kb));
    if indicators {
        for category in IndicatorCategory::ALL {
            println!("\n{category}:");
            for ind in kb.catalog.values().filter(|i| i.category == *category) {
                let states: Vec<String> =
                    ind.states.iter().map(|s| format!("{} {}", s.relation, s.value)).collect();
                println!("  {:<16} {} [{}]", ind.name, ind.display_name(), states.join(", "));
            }
        }
        println!();
    }
    for rule in kb.rules_sorted() {
        let joiner = format!(" {} ", rule.connective);
        let premises: Vec<String> = rule.premises.iter().map(ToString::to_string).collect();
        println!(
            "{:<6} if {} then {} (cf {})",
            rule.id.as_str(),
            premises.join(&joiner),
            rule.conclusion,
            format_cf(rule.expert_cf)
        );
    }
    Ok(())
}

pub fn add_rule(path: &Path, rule: Option<String>) -> Outcome {
    let kb = read_kb(path)?;
    let text = match rule {
        Some(t) => t,
        None => {
            let mut t = String::new();
            std::io::stdin()
                .read_to_string(&mut t)
                .map_err(|e| Failure::io("stdin", e))?;
            t
        }
    };
    let next = parse_rules_into(&kb, "<rule>", &text).map_err(|e| parse_errors(&e))?;
    write_kb(path, &next)?;
    println!("{}", summary(&next));
    Ok(())
}

pub fn del_rule(path: &Path, id: &str) -> Outcome {
    let kb = read_kb(path)?;
    let next = kb.delete_rule(&RuleId::new(id)).map_err(Failure::invalid)?;
    write_kb(path, &next)?;
    println!("{}", summary(&next));
    Ok(())
}
