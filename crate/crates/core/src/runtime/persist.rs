//! Store files.
//!
//! ```text
//! #schema <hex sha-256 of the schema's canonical text>
//! #next_id 7
//! User|1|UserID=10;Name=Ann;Level=MASTER|LoanedBooks=3,4;ReservedBooks=
//! Loan|3|DueDate=30|LoanedUser=1;LoanedCopy=-
//! ```
//!
//! Objects are written entity by entity in schema order, each extent in
//! insertion order, so equal stores serialize to equal bytes. In string
//! values `\`, `|`, `;`, `,`, CR and LF are backslash escaped.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use super::store::{EntityStore, Link, ObjectRecord};
use super::value::{ObjectId, Value};
use crate::model::{AttrType, Multiplicity, Schema};

#[derive(Debug, Error)]
pub enum PersistError {
    /// The header hash or a line does not fit the schema.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("line {line}: {message}")]
    FormatError { line: usize, message: String },
    #[error("{0}")]
    IoError(#[from] std::io::Error),
}

fn format_err(line: usize, message: impl Into<String>) -> PersistError {
    PersistError::FormatError {
        line,
        message: message.into(),
    }
}

fn escape(s: &str, out: &mut String) {
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '|' => out.push_str("\\|"),
            ';' => out.push_str("\\;"),
            ',' => out.push_str("\\,"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match it.next()? {
            'n' => '\n',
            'r' => '\r',
            c @ ('\\' | '|' | ';' | ',') => c,
            _ => return None,
        });
    }
    Some(out)
}

/// Splits on `sep` where it is not escaped.
fn split_unescaped(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == sep {
            parts.push(&s[start..i]);
            start = i + c.len_utf8();
        }
    }
    parts.push(&s[start..]);
    parts
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Int(n) | Value::Date(n) => {
            let _ = write!(out, "{n}");
        }
        Value::Real(x) => {
            let _ = write!(out, "{x:?}");
        }
        Value::Str(s) => escape(s, out),
        Value::Enum { literal, .. } => out.push_str(literal),
        // attributes always hold a value of their declared type
        Value::Undefined | Value::Object(_) | Value::Set(_) => {
            unreachable!("attribute slots never hold {v}")
        }
    }
}

fn read_value(ty: &AttrType, text: &str, schema: &Schema) -> Option<Value> {
    Some(match ty {
        AttrType::Integer => Value::Int(text.parse().ok()?),
        AttrType::Date => Value::Date(text.parse().ok()?),
        AttrType::Real => Value::Real(text.parse().ok()?),
        AttrType::Boolean => Value::Bool(text.parse().ok()?),
        AttrType::String => Value::Str(unescape(text)?),
        AttrType::Enum(e) => {
            if !schema.enum_decl(e)?.literals.iter().any(|l| l == text) {
                return None;
            }
            Value::enum_lit(e, text)
        }
    })
}

/// Serializes the store.
pub fn render_store(store: &EntityStore) -> String {
    let schema = store.schema();
    let mut out = String::new();
    let _ = writeln!(out, "#schema {}", schema.fingerprint());
    let _ = writeln!(out, "#next_id {}", store.next_id());
    for rec in store.iter() {
        render_record(store, rec, &mut out);
        out.push('\n');
    }
    out
}

/// Writes one object as a store-file line, without the newline.
pub fn render_record(store: &EntityStore, rec: &ObjectRecord, out: &mut String) {
    let schema = store.schema();
    let es = &schema.entities[rec.entity];
    let _ = write!(out, "{}|{}|", es.name, rec.id.0);
    for (i, ((name, _), v)) in es.attributes.iter().zip(&rec.attributes).enumerate() {
        if i > 0 {
            out.push(';');
        }
        out.push_str(name);
        out.push('=');
        write_value(v, out);
    }
    out.push('|');
    for (i, (a, link)) in es.associations.iter().zip(&rec.links).enumerate() {
        if i > 0 {
            out.push(';');
        }
        out.push_str(&a.name);
        out.push('=');
        match link {
            Link::One(None) => out.push('-'),
            Link::One(Some(t)) => {
                let _ = write!(out, "{}", t.0);
            }
            Link::Many(ts) => {
                let ids: Vec<String> = ts.iter().map(|t| t.0.to_string()).collect();
                out.push_str(&ids.join(","));
            }
        }
    }
}

/// Parses a store written by [`render_store`] for `schema`.
pub fn parse_store(text: &str, schema: Arc<Schema>) -> Result<EntityStore, PersistError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let expected = schema.fingerprint();
    let found = match lines.next() {
        Some((_, l)) => l
            .strip_prefix("#schema ")
            .ok_or_else(|| format_err(1, "missing `#schema` header"))?,
        None => return Err(format_err(1, "empty store file")),
    };
    if found != expected {
        return Err(PersistError::SchemaMismatch(format!(
            "store was written for schema {found}, expected {expected}"
        )));
    }
    let next_id: u64 = match lines.next() {
        Some((n, l)) => l
            .strip_prefix("#next_id ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| format_err(n, "missing or malformed `#next_id` header"))?,
        None => return Err(format_err(2, "missing `#next_id` header")),
    };

    let mut store = EntityStore::new(schema.clone());
    // links are resolved after every object is known
    let mut pending: Vec<(usize, ObjectId, usize, Vec<ObjectId>)> = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields = split_unescaped(line, '|');
        if fields.len() != 4 {
            return Err(format_err(
                n,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let entity = schema.entity_index(fields[0]).ok_or_else(|| {
            PersistError::SchemaMismatch(format!("line {n}: unknown entity `{}`", fields[0]))
        })?;
        let es = &schema.entities[entity];
        let id = ObjectId(
            fields[1]
                .parse()
                .map_err(|_| format_err(n, format!("bad object id `{}`", fields[1])))?,
        );
        if id.0 == 0 || id.0 >= next_id {
            return Err(format_err(
                n,
                format!("object id {} outside 1..{next_id}", id.0),
            ));
        }
        if store.contains(id) {
            return Err(format_err(n, format!("object id {} appears twice", id.0)));
        }

        let mut attributes: Vec<Option<Value>> = vec![None; es.attributes.len()];
        if !fields[2].is_empty() {
            for part in split_unescaped(fields[2], ';') {
                let (name, raw) = part
                    .split_once('=')
                    .ok_or_else(|| format_err(n, format!("attribute `{part}` has no `=`")))?;
                let (i, ty) = es.attribute(name).ok_or_else(|| {
                    PersistError::SchemaMismatch(format!(
                        "line {n}: `{}` has no attribute `{name}`",
                        es.name
                    ))
                })?;
                if attributes[i].is_some() {
                    return Err(format_err(n, format!("attribute `{name}` given twice")));
                }
                let v = read_value(ty, raw, &schema).ok_or_else(|| {
                    format_err(
                        n,
                        format!("`{raw}` is not a valid {} for `{name}`", ty.name()),
                    )
                })?;
                attributes[i] = Some(v);
            }
        }
        let attributes = attributes
            .into_iter()
            .zip(&es.attributes)
            .map(|(v, (name, _))| {
                v.ok_or_else(|| format_err(n, format!("attribute `{name}` missing")))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut links: Vec<Option<Link>> = vec![None; es.associations.len()];
        if !fields[3].is_empty() {
            for part in split_unescaped(fields[3], ';') {
                let (name, raw) = part
                    .split_once('=')
                    .ok_or_else(|| format_err(n, format!("link `{part}` has no `=`")))?;
                let (i, end) = es.association(name).ok_or_else(|| {
                    PersistError::SchemaMismatch(format!(
                        "line {n}: `{}` has no association `{name}`",
                        es.name
                    ))
                })?;
                if links[i].is_some() {
                    return Err(format_err(n, format!("link `{name}` given twice")));
                }
                let ids = if raw.is_empty() || raw == "-" {
                    Vec::new()
                } else {
                    raw.split(',')
                        .map(|t| t.parse().map(ObjectId))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| format_err(n, format!("bad link targets `{raw}`")))?
                };
                links[i] = Some(match end.multiplicity {
                    Multiplicity::One if raw.is_empty() => {
                        return Err(format_err(
                            n,
                            format!("single link `{name}` needs an id or `-`"),
                        ))
                    }
                    Multiplicity::One if ids.len() > 1 => {
                        return Err(format_err(
                            n,
                            format!("single link `{name}` has several targets"),
                        ))
                    }
                    Multiplicity::One => Link::One(ids.first().copied()),
                    Multiplicity::Many if raw == "-" => {
                        return Err(format_err(
                            n,
                            format!("`-` is not a valid set for `{name}`"),
                        ))
                    }
                    Multiplicity::Many => Link::Many(ids.clone()),
                });
                pending.push((n, id, i, ids));
            }
        }
        let links = links
            .into_iter()
            .zip(&es.associations)
            .map(|(l, a)| l.ok_or_else(|| format_err(n, format!("link `{}` missing", a.name))))
            .collect::<Result<Vec<_>, _>>()?;
        store.insert_record(ObjectRecord {
            id,
            entity,
            attributes,
            links,
        });
    }
    store.set_next_id(next_id);

    for (n, id, assoc, ids) in pending {
        let end = &schema.entities[store.get(id).expect("inserted").entity].associations[assoc];
        for t in ids {
            match store.entity_of(t) {
                Some(te) if te.name == end.target => {}
                Some(te) => {
                    return Err(format_err(
                        n,
                        format!(
                            "`{}` links to {t}, a {} not a {}",
                            end.name, te.name, end.target
                        ),
                    ))
                }
                None => {
                    return Err(format_err(
                        n,
                        format!("`{}` links to missing {t}", end.name),
                    ))
                }
            }
        }
    }
    if let Some(problem) = store.check_integrity().into_iter().next() {
        return Err(format_err(0, problem));
    }
    Ok(store)
}

/// Writes the store atomically: a temporary file in the target directory
/// is renamed over `path`.
pub fn save_store(store: &EntityStore, path: &Path) -> Result<(), PersistError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(render_store(store).as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| PersistError::IoError(e.error))?;
    Ok(())
}

pub fn load_store(path: &Path, schema: Arc<Schema>) -> Result<EntityStore, PersistError> {
    let text = std::fs::read_to_string(path)?;
    parse_store(&text, schema)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn schema() -> Arc<Schema> {
        let m = parse_model(
            "enum K { A, B }
             entity P { N : Integer; R : Real; S : String; D : Date; K : K; F : Boolean;
                        Qs : Q[*] inverse Owner[1]; }
             entity Q { }",
            "t.rm",
        )
        .unwrap();
        Arc::new(Schema::from_model(&m).0)
    }

    #[test]
    fn roundtrip_with_awkward_strings() {
        let s = schema();
        let mut st = EntityStore::new(s.clone());
        let p = st.create_object("P").unwrap();
        let q = st.create_object("Q").unwrap();
        st.set_attribute(p, "S", Value::Str("a|b;c,d\\e\nf=g".into()))
            .unwrap();
        st.set_attribute(p, "R", Value::Real(0.1)).unwrap();
        st.set_attribute(p, "K", Value::enum_lit("K", "B")).unwrap();
        st.add_link(p, "Qs", q).unwrap();
        st.set_link_one(q, "Owner", Some(p)).unwrap();
        let text = render_store(&st);
        let back = parse_store(&text, s).unwrap();
        assert_eq!(back, st);
        assert_eq!(render_store(&back), text);
        assert!(text.contains("Owner=1"), "{text}");
    }

    #[test]
    fn rejects_other_schema() {
        let st = EntityStore::new(schema());
        let text = render_store(&st).replace("#schema ", "#schema 00");
        assert!(matches!(
            parse_store(&text, schema()),
            Err(PersistError::SchemaMismatch(_))
        ));
        let s = schema();
        let text = format!("#schema {}\n#next_id 3\nGhost|1||\n", s.fingerprint());
        assert!(matches!(
            parse_store(&text, s),
            Err(PersistError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn rejects_dangling_links() {
        let s = schema();
        let text = format!("#schema {}\n#next_id 5\nQ|2||Owner=4\n", s.fingerprint());
        let err = parse_store(&text, s).unwrap_err();
        assert!(
            matches!(err, PersistError::FormatError { line: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn save_and_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.store");
        let mut st = EntityStore::new(schema());
        st.create_object("Q").unwrap();
        save_store(&st, &path).unwrap();
        assert_eq!(load_store(&path, schema()).unwrap(), st);
    }
}
