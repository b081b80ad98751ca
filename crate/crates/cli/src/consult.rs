//! `dsage consult` and `dsage batch`.

use std::fs;
use std::io::{self, BufRead, Write};

use dsage_core::advisory::advise;
use dsage_core::batch::run_batch;
use dsage_core::cf::CertaintyFactor;
use dsage_core::dsl::parse_observation;
use dsage_core::inference::{run, InferenceResult, Observation, Warning, WorkingMemory};
use dsage_core::kb::{Condition, IndicatorCategory, KnowledgeBase};
use dsage_core::report::consultation_report;
use dsage_store::digest;

use crate::failure::{kb_or_seed, Failure, Outcome};
use crate::{BatchArgs, ConsultArgs};

/// Parses `--observe` values; a malformed one is a usage error.
fn observations(specs: &[String]) -> Result<Vec<Observation>, Failure> {
    specs
        .iter()
        .map(|spec| {
            parse_observation(spec)
                .map(|(c, cf)| Observation::with_optional_cf(c, cf))
                .map_err(|e| Failure::Usage(format!("--observe: {e}")))
        })
        .collect()
}

fn checked(kb: &KnowledgeBase, observations: Vec<Observation>) -> Result<WorkingMemory, Failure> {
    let wm: WorkingMemory = observations.into_iter().collect();
    wm.check_against(kb).map_err(Failure::invalid)?;
    Ok(wm)
}

/// Human-readable advisory list.
pub fn render_text(kb: &KnowledgeBase, result: &InferenceResult) -> String {
    let advisories = advise(kb, result);
    if advisories.is_empty() {
        return "no applicable rules\n".to_string();
    }
    let mut out = String::new();
    for a in advisories {
        out.push_str(&format!("{}. {} — {}%", a.rank, a.hypothesis, a.cf_percent));
        if let Some(m) = &a.mitigation {
            out.push_str(&format!("  [mitigation: {m}]"));
        }
        out.push('\n');
    }
    out
}

pub fn render_json(kb: &KnowledgeBase, result: &InferenceResult) -> String {
    let version = digest(kb);
    let report = consultation_report(kb, result, Some(version.as_str()));
    let mut json = serde_json::to_string_pretty(&report).expect("reports serialize");
    json.push('\n');
    json
}

fn warn(result: &InferenceResult) {
    for w in &result.warnings {
        match w {
            Warning::ContradictoryObservations { object, values } => eprintln!(
                "warning: `{object}` observed with conflicting values: {}",
                values.join(", ")
            ),
        }
    }
}

pub fn consult(args: &ConsultArgs) -> Outcome {
    let kb = kb_or_seed(args.kb.as_deref())?;
    let mut observed = observations(&args.observe)?;
    if args.interactive {
        let stdin = io::stdin();
        let mut out = io::stdout();
        observed.extend(interview(&kb, &mut stdin.lock(), &mut out).map_err(|e| Failure::io("terminal", e))?);
    }
    let wm = checked(&kb, observed)?;
    let result = run(&kb, &wm).map_err(Failure::invalid)?;
    warn(&result);
    let text = if args.json {
        render_json(&kb, &result)
    } else {
        render_text(&kb, &result)
    };
    print!("{text}");
    Ok(())
}

/// Question-driven data entry: pick indicators by category, then a state,
/// then a certainty. A blank answer at the indicator prompt finishes.
pub fn interview(
    kb: &KnowledgeBase,
    input: &mut impl BufRead,
    out: &mut impl Write,
) -> io::Result<Vec<Observation>> {
    let indicators: Vec<_> = IndicatorCategory::ALL
        .iter()
        .flat_map(|c| kb.catalog.values().filter(move |i| i.category == *c))
        .collect();
    let mut observed = Vec::new();
    let mut line = String::new();
    let mut ask = |out: &mut dyn Write, prompt: &str| -> io::Result<Option<String>> {
        write!(out, "{prompt}")?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        Ok(Some(line.trim().to_string()))
    };

    loop {
        let mut category = None;
        for (n, ind) in indicators.iter().enumerate() {
            if category != Some(ind.category) {
                category = Some(ind.category);
                writeln!(out, "{}:", ind.category)?;
            }
            writeln!(out, "  {:>2}. {}", n + 1, ind.display_name())?;
        }
        let Some(answer) = ask(out, "Indicator number (blank to finish): ")? else {
            break;
        };
        if answer.is_empty() {
            break;
        }
        let Some(ind) = answer
            .parse::<usize>()
            .ok()
            .and_then(|n| n.checked_sub(1))
            .and_then(|n| indicators.get(n))
        else {
            writeln!(out, "No indicator {answer}.")?;
            continue;
        };

        for (n, s) in ind.states.iter().enumerate() {
            writeln!(out, "  {}. {} {}", n + 1, s.relation, s.value)?;
        }
        let Some(answer) = ask(out, "State number: ")? else { break };
        let Some(state) = answer
            .parse::<usize>()
            .ok()
            .and_then(|n| n.checked_sub(1))
            .and_then(|n| ind.states.get(n))
        else {
            writeln!(out, "No state {answer}.")?;
            continue;
        };

        let Some(answer) = ask(out, "Certainty, 0-1 or a percentage (blank = 1): ")? else {
            break;
        };
        let cf = if answer.is_empty() {
            None
        } else {
            let parsed = match answer.strip_suffix('%') {
                Some(p) => p.trim().parse::<f64>().map(|v| v / 100.0),
                None => answer.parse::<f64>(),
            };
            match parsed.ok().and_then(|v| CertaintyFactor::new(v).ok()) {
                Some(cf) => Some(cf),
                None => {
                    writeln!(out, "Certainty must be between 0 and 1.")?;
                    continue;
                }
            }
        };
        let condition = Condition::new(&ind.name, state.relation, &state.value);
        writeln!(out, "Recorded: {condition}")?;
        observed.push(Observation::with_optional_cf(condition, cf));
    }
    Ok(observed)
}

pub fn batch(args: &BatchArgs) -> Outcome {
    let kb = kb_or_seed(args.kb.as_deref())?;
    let reader: Box<dyn BufRead> = match args.input.as_deref() {
        None => Box::new(io::stdin().lock()),
        Some(p) if p.as_os_str() == "-" => Box::new(io::stdin().lock()),
        Some(p) => Box::new(io::BufReader::new(
            fs::File::open(p).map_err(|e| Failure::io(p.display(), e))?,
        )),
    };

    let mut memories = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Failure::io("input", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let specs: Vec<String> = serde_json::from_str(&line)
            .map_err(|e| Failure::Usage(format!("line {}: expected a JSON array of strings: {e}", n + 1)))?;
        let observed = observations(&specs)
            .map_err(|f| match f {
                Failure::Usage(m) => Failure::Usage(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        let wm = checked(&kb, observed).map_err(|f| match f {
            Failure::Invalid(m) => Failure::Invalid(vec![format!("line {}: {}", n + 1, m.join("; "))]),
            other => other,
        })?;
        memories.push(wm);
    }

    let version = digest(&kb);
    let mut out = io::stdout().lock();
    for result in run_batch(&kb, &memories) {
        let result = result.map_err(Failure::invalid)?;
        let report = consultation_report(&kb, &result, Some(version.as_str()));
        let json = serde_json::to_string(&report).expect("reports serialize");
        writeln!(out, "{json}").map_err(|e| Failure::io("stdout", e))?;
    }
    Ok(())
}
