use super::{CorpusError, Domain, IdentityRecord, Kind, Param, Variant};
use crate::dsl::{parse_closed_form, parse_formula, parse_series_spec, DslError, Expr, Formula, SeriesSpec};
use crate::numeric::{parse_rational, Rational};

/// A `key = value` entry with the position of the first value character.
struct Entry {
    key: String,
    value: String,
    line: usize,
    column: usize,
}

struct Block {
    line: usize,
    entries: Vec<Entry>,
}

fn blocks(text: &str) -> Result<Vec<Block>, CorpusError> {
    let mut out: Vec<Block> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if trimmed == "[identity]" {
            out.push(Block { line, entries: vec![] });
            continue;
        }
        let Some(block) = out.last_mut() else {
            return Err(CorpusError::Syntax {
                line,
                message: "expected `[identity]`".into(),
            });
        };
        if raw.starts_with(char::is_whitespace) {
            let Some(entry) = block.entries.last_mut() else {
                return Err(CorpusError::Syntax {
                    line,
                    message: "continuation line without a key".into(),
                });
            };
            entry.value.push('\n');
            entry.value.push_str(raw);
            continue;
        }
        let Some((key, _)) = raw.split_once('=') else {
            return Err(CorpusError::Syntax {
                line,
                message: "expected `key = value`".into(),
            });
        };
        let eq = key.len();
        let rest = &raw[eq + 1..];
        let lead = rest.len() - rest.trim_start().len();
        block.entries.push(Entry {
            key: key.trim().to_string(),
            value: rest.trim_start().to_string(),
            line,
            column: eq + 2 + lead,
        });
    }
    Ok(out)
}

fn dsl_err(id: &str, e: &Entry, err: DslError) -> CorpusError {
    CorpusError::Formula {
        id: id.to_string(),
        key: e.key.clone(),
        source: err.offset(e.line, e.column),
    }
}

fn parse_params(id: &str, e: &Entry) -> Result<Vec<Param>, CorpusError> {
    let bad = |message: String| CorpusError::Syntax { line: e.line, message };
    let mut items = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for ch in e.value.chars() {
        match ch {
            '{' => depth += 1,
            '}' => depth -= 1,
            ',' if depth == 0 => {
                items.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    items.push(cur);
    let mut out = Vec::new();
    for item in items.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let (name, domain) = item
            .split_once(':')
            .ok_or_else(|| bad(format!("{id}: parameter `{item}` has no domain")))?;
        let domain = match domain.trim() {
            "rational" => Domain::Rational,
            "count" => Domain::Count,
            "q" => Domain::Q,
            d if d.starts_with('{') && d.ends_with('}') => {
                let points = d[1..d.len() - 1]
                    .split(',')
                    .map(|p| parse_rational(p).ok_or_else(|| bad(format!("{id}: bad point `{}`", p.trim()))))
                    .collect::<Result<Vec<_>, _>>()?;
                if points.is_empty() {
                    return Err(bad(format!("{id}: empty point list")));
                }
                Domain::Points(points)
            }
            d => return Err(bad(format!("{id}: unknown domain `{d}`"))),
        };
        out.push(Param {
            name: name.trim().to_string(),
            domain,
        });
    }
    Ok(out)
}

fn parse_derive(id: &str, e: &Entry) -> Result<Vec<(String, Expr)>, CorpusError> {
    let mut out = Vec::new();
    for part in e.value.split(';').filter(|p| !p.trim().is_empty()) {
        let (name, expr) = part.split_once('=').ok_or_else(|| CorpusError::Syntax {
            line: e.line,
            message: format!("{id}: expected `name = expr` in derive"),
        })?;
        let expr = parse_closed_form(expr).map_err(|err| CorpusError::Formula {
            id: id.to_string(),
            key: e.key.clone(),
            source: err,
        })?;
        out.push((name.trim().to_string(), expr));
    }
    Ok(out)
}

#[derive(Default)]
struct Draft {
    id: Option<String>,
    kind: Option<Kind>,
    lhs: Option<SeriesSpec>,
    rhs: Option<Formula>,
    params: Option<Vec<Param>>,
    derived: Option<Vec<(String, Expr)>>,
    active: Option<String>,
    order: Option<u32>,
    anchor: String,
    notes: String,
    derivative_of: Option<String>,
    variants: Vec<(String, Option<SeriesSpec>, Option<Formula>)>,
    control: bool,
    limit: Option<String>,
    limit_scale: Option<Rational>,
}

fn draft(block: &Block) -> Result<Draft, CorpusError> {
    let mut d = Draft::default();
    let id = block
        .entries
        .iter()
        .find(|e| e.key == "id")
        .map(|e| e.value.trim().to_string())
        .ok_or(CorpusError::Syntax {
            line: block.line,
            message: "identity without an id".into(),
        })?;
    for e in &block.entries {
        let v = e.value.trim();
        let syntax = |message: String| CorpusError::Syntax { line: e.line, message };
        match e.key.as_str() {
            "id" => d.id = Some(v.to_string()),
            "kind" => {
                d.kind = Some(match v {
                    "terminating-exact" => Kind::TerminatingExact,
                    "infinite-numeric" => Kind::InfiniteNumeric,
                    "jet-derived" => Kind::JetDerived,
                    _ => return Err(syntax(format!("{id}: unknown kind `{v}`"))),
                })
            }
            "lhs" => d.lhs = Some(parse_series_spec(&e.value).map_err(|err| dsl_err(&id, e, err))?),
            "rhs" => d.rhs = Some(parse_formula(&e.value).map_err(|err| dsl_err(&id, e, err))?),
            "params" => d.params = Some(parse_params(&id, e)?),
            "derive" => d.derived = Some(parse_derive(&id, e)?),
            "active" => d.active = Some(v.to_string()),
            "order" => d.order = Some(v.parse().map_err(|_| syntax(format!("{id}: bad order `{v}`")))?),
            "anchor" => d.anchor = collapse(v),
            "notes" => d.notes = collapse(v),
            "derivative_of" => d.derivative_of = Some(v.to_string()),
            "control" => d.control = matches!(v, "yes" | "true"),
            "limit" => d.limit = Some(v.to_string()),
            "limit_scale" => {
                d.limit_scale = Some(parse_rational(v).ok_or_else(|| syntax(format!("{id}: bad scale `{v}`")))?)
            }
            key if key.starts_with("variant.") => {
                let rest = &key["variant.".len()..];
                let (label, side) = rest
                    .rsplit_once('.')
                    .ok_or_else(|| syntax(format!("{id}: expected variant.LABEL.lhs or .rhs")))?;
                let slot = match d.variants.iter().position(|(l, ..)| l == label) {
                    Some(i) => i,
                    None => {
                        d.variants.push((label.to_string(), None, None));
                        d.variants.len() - 1
                    }
                };
                match side {
                    "lhs" => d.variants[slot].1 = Some(parse_series_spec(&e.value).map_err(|err| dsl_err(&id, e, err))?),
                    "rhs" => d.variants[slot].2 = Some(parse_formula(&e.value).map_err(|err| dsl_err(&id, e, err))?),
                    _ => return Err(syntax(format!("{id}: unknown variant side `{side}`"))),
                }
            }
            key => return Err(syntax(format!("{id}: unknown key `{key}`"))),
        }
    }
    Ok(d)
}

fn collapse(v: &str) -> String {
    v.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parse a corpus file into records, in file order.
pub fn parse_corpus(text: &str) -> Result<Vec<IdentityRecord>, CorpusError> {
    let mut records: Vec<IdentityRecord> = Vec::new();
    for block in blocks(text)? {
        let d = draft(&block)?;
        let id = d.id.clone().unwrap_or_default();
        if records.iter().any(|r| r.id == id) {
            return Err(CorpusError::Duplicate(id));
        }
        let base = match &d.derivative_of {
            Some(b) => Some(
                records
                    .iter()
                    .find(|r| &r.id == b)
                    .ok_or_else(|| CorpusError::UnknownId(b.clone()))?
                    .clone(),
            ),
            None => None,
        };
        let missing = |what: &str| CorpusError::Syntax {
            line: block.line,
            message: format!("{id}: missing {what}"),
        };
        let lhs = d.lhs.or_else(|| base.as_ref().map(|b| b.lhs.clone())).ok_or_else(|| missing("lhs"))?;
        let rhs = d.rhs.or_else(|| base.as_ref().map(|b| b.rhs.clone())).ok_or_else(|| missing("rhs"))?;
        let params = d
            .params
            .or_else(|| base.as_ref().map(|b| b.params.clone()))
            .unwrap_or_default();
        let derived = d
            .derived
            .or_else(|| base.as_ref().map(|b| b.derived.clone()))
            .unwrap_or_default();
        let variants = d
            .variants
            .into_iter()
            .map(|(label, l, r)| Variant {
                label,
                lhs: l.unwrap_or_else(|| lhs.clone()),
                rhs: r.unwrap_or_else(|| rhs.clone()),
            })
            .collect();
        let kind = d.kind.ok_or_else(|| missing("kind"))?;
        let record = IdentityRecord {
            id,
            kind,
            lhs,
            rhs,
            params,
            derived,
            active: d.active,
            order: d.order.unwrap_or(2),
            anchor: d.anchor,
            notes: d.notes,
            derivative_of: d.derivative_of,
            variants,
            control: d.control,
            limit: d.limit.map(|l| (l, d.limit_scale.unwrap_or_else(|| Rational::from_integer(1.into())))),
        };
        record.validate().map_err(|message| CorpusError::Syntax {
            line: block.line,
            message,
        })?;
        records.push(record);
    }
    Ok(records)
}
