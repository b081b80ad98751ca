use std::fmt::Write;

use super::FORMAT_VERSION;
use crate::cf::CertaintyFactor;
use crate::kb::{Connective, IndicatorCategory, KnowledgeBase, KnowledgeKind, Rule};

pub(crate) fn format_cf(cf: CertaintyFactor) -> String {
    let s = format!("{:.6}", cf.value());
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn write_rule(out: &mut String, rule: &Rule) {
    let joiner = match rule.connective {
        Connective::And => "and",
        Connective::Or => "or",
    };
    let _ = writeln!(out, "rule {} {{", rule.id);
    for (i, p) in rule.premises.iter().enumerate() {
        let kw = if i == 0 { "if" } else { joiner };
        let _ = writeln!(out, "  {kw} {} {} {}", p.object, p.relation, p.value);
    }
    if rule.premises.len() < 2 && rule.connective == Connective::Or {
        out.push_str("  connective or\n");
    }
    let _ = write!(out, "  then {}", quote(rule.conclusion.statement()));
    if let Some(season) = rule.conclusion.season() {
        let _ = write!(out, " season {season}");
    }
    let _ = write!(out, " cf {}", format_cf(rule.expert_cf));
    if rule.kind != KnowledgeKind::Derivation {
        let _ = write!(out, " kind {}", rule.kind);
    }
    out.push_str("\n}\n");
}

pub(crate) fn serialize(kb: &KnowledgeBase) -> String {
    let mut out = format!("kbformat {FORMAT_VERSION}\n");

    for &category in IndicatorCategory::ALL {
        let mut block = kb
            .catalog
            .values()
            .filter(|i| i.category == category)
            .peekable();
        if block.peek().is_none() {
            continue;
        }
        out.push('\n');
        for ind in block {
            let states: Vec<String> = ind.states.iter().map(|s| s.to_string()).collect();
            let _ = write!(
                out,
                "indicator {} category {} states [{}]",
                ind.name,
                ind.category,
                states.join(", ")
            );
            if let Some(alias) = &ind.alias {
                let _ = write!(out, " alias {}", quote(alias));
            }
            out.push('\n');
        }
    }

    for rule in kb.rules_sorted() {
        out.push('\n');
        write_rule(&mut out, rule);
    }

    if !kb.mitigations.is_empty() {
        out.push('\n');
        for (severity, text) in &kb.mitigations {
            let _ = writeln!(out, "mitigation {severity} {}", quote(text));
        }
    }
    out
}
