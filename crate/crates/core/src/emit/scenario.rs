//! Scenario files and textual input values.
//!
//! ```text
//! # comment
//! @today 120
//! borrowBook uid=3 barcode="B-0001"
//! ```
//!
//! Every line names an operation and binds all of its inputs. `@today`
//! applies to the lines after it.

use thiserror::Error;

use crate::logic::Application;
use crate::model::Schema;
use crate::ocl::Type;
use crate::runtime::Value;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub operation: String,
    pub inputs: Vec<(String, Value)>,
    pub today: i64,
}

/// Parses one input value of type `ty`. Strings may be bare or double
/// quoted; enumeration literals may be written `LIT` or `Enum::LIT`.
/// Object inputs are not accepted.
pub fn parse_input_value(ty: &Type, text: &str, schema: &Schema) -> Result<Value, String> {
    let bad = || format!("`{text}` is not a valid {ty}");
    Ok(match ty {
        Type::Integer => Value::Int(text.parse().map_err(|_| bad())?),
        Type::Date => Value::Date(text.parse().map_err(|_| bad())?),
        Type::Real => Value::Real(text.parse().map_err(|_| bad())?),
        Type::Boolean => Value::Bool(text.parse().map_err(|_| bad())?),
        Type::String => Value::Str(unquote(text).ok_or_else(bad)?),
        Type::Enum(e) => {
            let lit = match text.split_once("::") {
                Some((prefix, lit)) if prefix == e => lit,
                Some(_) => return Err(bad()),
                None => text,
            };
            let decl = schema.enum_decl(e).ok_or_else(bad)?;
            if !decl.literals.iter().any(|l| l == lit) {
                return Err(format!(
                    "`{lit}` is not a literal of {e} ({})",
                    decl.literals.join(", ")
                ));
            }
            Value::enum_lit(e, lit)
        }
        Type::Object(e) | Type::Set(e) => {
            return Err(format!(
                "inputs of entity type {e} cannot be given on the command line"
            ))
        }
        Type::Unknown => return Err(bad()),
    })
}

fn unquote(text: &str) -> Option<String> {
    let Some(inner) = text.strip_prefix('"') else {
        return Some(text.to_string());
    };
    let inner = inner.strip_suffix('"')?;
    let mut out = String::new();
    let mut it = inner.chars();
    while let Some(c) = it.next() {
        if c == '\\' {
            out.push(match it.next()? {
                'n' => '\n',
                't' => '\t',
                c => c,
            });
        } else if c == '"' {
            return None;
        } else {
            out.push(c);
        }
    }
    Some(out)
}

/// Splits on whitespace outside double quotes.
fn words(line: &str) -> Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut quoted = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match c {
            '\\' if quoted => escaped = true,
            '"' => {
                quoted = !quoted;
                start.get_or_insert(i);
            }
            c if c.is_whitespace() && !quoted => {
                if let Some(s) = start.take() {
                    out.push(&line[s..i]);
                }
            }
            _ => {
                start.get_or_insert(i);
            }
        }
    }
    if quoted {
        return Err("unterminated string".to_string());
    }
    if let Some(s) = start {
        out.push(&line[s..]);
    }
    Ok(out)
}

pub fn parse_scenarios(text: &str, app: &Application) -> Result<Vec<Scenario>, ScenarioError> {
    let mut out = Vec::new();
    let mut today = 0;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let err = |message: String| ScenarioError { line: n, message };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("@today") {
            today = rest
                .trim()
                .parse()
                .map_err(|_| err(format!("bad day `{}`", rest.trim())))?;
            continue;
        }
        let ws = words(line).map_err(err)?;
        let (op, args) = ws.split_first().expect("non-empty line");
        let unit = app
            .unit(op)
            .ok_or_else(|| err(format!("unknown operation `{op}`")))?;
        let mut inputs: Vec<(String, Value)> = Vec::new();
        for a in args {
            let (name, value) = a
                .split_once('=')
                .ok_or_else(|| err(format!("`{a}` is not name=value")))?;
            let p = unit
                .signature
                .inputs
                .iter()
                .find(|p| p.name == name)
                .ok_or_else(|| err(format!("`{op}` has no input `{name}`")))?;
            if inputs.iter().any(|(n, _)| n == name) {
                return Err(err(format!("input `{name}` given twice")));
            }
            let v = parse_input_value(&p.ty, value, &app.schema).map_err(err)?;
            inputs.push((name.to_string(), v));
        }
        if let Some(p) = unit
            .signature
            .inputs
            .iter()
            .find(|p| !inputs.iter().any(|(n, _)| *n == p.name))
        {
            return Err(err(format!("`{op}` needs input `{}`", p.name)));
        }
        out.push(Scenario {
            operation: op.to_string(),
            inputs,
            today,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::generate_application;
    use crate::model::parse_model;

    fn app() -> Application {
        let m = parse_model(
            "enum K { A, B }
             service S { op; }
             contract S::op(n : Integer, s : String, k : K, d : Date) : Boolean { }",
            "t.rm",
        )
        .unwrap();
        generate_application(&m).unwrap()
    }

    #[test]
    fn parses_lines_and_today() {
        let sc = parse_scenarios(
            "# demo\n@today 7\nop n=1 s=\"a b\\\"c\" k=K::B d=3\nop k=A n=2 s=x d=0\n",
            &app(),
        )
        .unwrap();
        assert_eq!(sc.len(), 2);
        assert_eq!(sc[0].today, 7);
        assert_eq!(sc[0].inputs[1].1, Value::Str("a b\"c".into()));
        assert_eq!(sc[1].inputs[0].1, Value::enum_lit("K", "A"));
    }

    #[test]
    fn missing_or_bad_inputs() {
        let e = parse_scenarios("op n=1 s=x k=A\n", &app()).unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.message.contains("`d`"), "{e}");
        assert!(parse_scenarios("op n=x s=x k=A d=1", &app()).is_err());
        assert!(parse_scenarios("op n=1 s=x k=C d=1", &app()).is_err());
        assert!(parse_scenarios("nope", &app()).is_err());
    }
}
