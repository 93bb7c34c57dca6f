use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use super::{predicate, EdgeObject, KgEdge, MemeKg, NodeKind};
use crate::error::{Error, Result};

const COLUMNS: [&str; 4] = ["id", "node1", "label", "node2"];

pub fn load_kg_tsv(path: &Path) -> Result<MemeKg> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kg_tsv(&text)
}

/// Parse edge-list TSV. Row numbers in errors are 1-based file lines.
/// Duplicate `(node1, label, node2)` rows collapse to the first.
pub fn parse_kg_tsv(text: &str) -> Result<MemeKg> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l,
            None => return Err(Error::Format("row 1: missing header".into())),
        }
    };
    let header: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    if header.len() != COLUMNS.len() {
        return Err(Error::Format(format!(
            "header has {} columns, expected {}",
            header.len(),
            COLUMNS.len()
        )));
    }
    let position = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::Format(format!("header is missing column {name:?}")))
    };
    let [id_col, node1_col, label_col, node2_col] = [
        position("id")?,
        position("node1")?,
        position("label")?,
        position("node2")?,
    ];

    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut kinds: HashMap<String, NodeKind> = HashMap::new();
    for (n, line) in lines {
        let row = n + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != COLUMNS.len() {
            return Err(Error::Format(format!(
                "row {row}: {} columns, expected {}",
                fields.len(),
                COLUMNS.len()
            )));
        }
        let (subject, pred, raw_object) = (fields[node1_col], fields[label_col], fields[node2_col]);
        if subject.is_empty() || pred.is_empty() || raw_object.is_empty() {
            return Err(Error::Format(format!(
                "row {row}: empty node1, label or node2"
            )));
        }
        let object = parse_object(pred, raw_object)
            .map_err(|reason| Error::Format(format!("row {row}: {reason}")))?;

        if pred == predicate::RDF_TYPE {
            if let Some(kind) = NodeKind::from_class(object.text()) {
                match kinds.get(subject) {
                    Some(existing) if *existing != kind => {
                        return Err(Error::Format(format!(
                            "row {row}: {subject:?} already typed {existing:?}"
                        )))
                    }
                    _ => {
                        kinds.insert(subject.to_owned(), kind);
                    }
                }
            }
        }

        if !seen.insert((subject.to_owned(), pred.to_owned(), object.clone())) {
            continue;
        }
        edges.push(KgEdge {
            id: fields[id_col].to_owned(),
            subject: subject.to_owned(),
            predicate: pred.to_owned(),
            object,
        });
    }
    Ok(MemeKg::from_parts(edges, kinds))
}

fn parse_object(pred: &str, raw: &str) -> std::result::Result<EdgeObject, String> {
    if raw.starts_with('"') || raw.starts_with('\'') {
        return unquote(raw).map(EdgeObject::Literal);
    }
    if predicate::is_literal(pred) {
        Ok(EdgeObject::Literal(raw.to_owned()))
    } else {
        Ok(EdgeObject::Node(raw.to_owned()))
    }
}

/// `"text"` or `'text'`, optionally followed by a `@lang` tag, with
/// backslash escapes for the quote, backslash, tab and newline.
fn unquote(raw: &str) -> std::result::Result<String, String> {
    let quote = raw.chars().next().expect("non-empty");
    let mut out = String::new();
    let mut chars = raw[1..].chars();
    loop {
        match chars.next() {
            None => return Err(format!("unterminated literal {raw:?}")),
            Some('\\') => match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(c @ ('\\' | '"' | '\'')) => out.push(c),
                other => return Err(format!("bad escape {other:?} in {raw:?}")),
            },
            Some(c) if c == quote => break,
            Some(c) => out.push(c),
        }
    }
    let rest: String = chars.collect();
    if rest.is_empty() || (rest.starts_with('@') && rest.len() > 1) {
        Ok(out)
    } else {
        Err(format!("trailing text after literal {raw:?}"))
    }
}

fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub(super) fn render(edges: &[KgEdge]) -> String {
    let mut out = COLUMNS.join("\t");
    out.push('\n');
    for edge in edges {
        let object = match &edge.object {
            EdgeObject::Node(id) => id.clone(),
            EdgeObject::Literal(text)
                if predicate::is_literal(&edge.predicate)
                    && !text.is_empty()
                    && !text.starts_with(['"', '\''])
                    && !text.contains(['\t', '\n', '\r']) =>
            {
                text.clone()
            }
            EdgeObject::Literal(text) => quote(text),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            edge.id, edge.subject, edge.predicate, object
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "id\tnode1\tlabel\tnode2\n";

    #[test]
    fn three_row_fixture() {
        let text = format!(
            "{HEADER}e1\tt1\trdf:type\tTemplate\ne2\tt1\ttitle\tSome Title\ne3\tm1\ttemplate_of\tt1\n"
        );
        let kg = parse_kg_tsv(&text).unwrap();
        assert_eq!(kg.templates(), ["t1"]);
        assert_eq!(kg.edges().len(), 3);
        assert_eq!(kg.node("t1").unwrap().property("title"), Some("Some Title"));
        assert_eq!(kg.node("m1").unwrap().kind, NodeKind::Entity);
    }

    #[test]
    fn wrong_column_count_reports_row() {
        let text = format!("{HEADER}e1\tt1\trdf:type\tTemplate\ne2\tt1\ttitle\n");
        match parse_kg_tsv(&text) {
            Err(Error::Format(msg)) => assert!(msg.contains("row 3"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn header_problems() {
        assert!(matches!(parse_kg_tsv(""), Err(Error::Format(_))));
        assert!(matches!(parse_kg_tsv("a\tb\tc\n"), Err(Error::Format(_))));
        assert!(matches!(
            parse_kg_tsv("id\tnode1\tlabel\tobject\n"),
            Err(Error::Format(_))
        ));
        // column order may vary
        let kg = parse_kg_tsv("node1\tlabel\tnode2\tid\nt\trdf:type\tTemplate\te1\n").unwrap();
        assert_eq!(kg.templates(), ["t"]);
    }

    #[test]
    fn duplicate_rows_collapse() {
        let text = format!("{HEADER}e1\ta\tknows\tb\ne1\ta\tknows\tb\ne9\ta\tknows\tb\n");
        assert_eq!(parse_kg_tsv(&text).unwrap().edges().len(), 1);
    }

    #[test]
    fn literals_and_entities() {
        let text = format!(
            "{HEADER}e1\ta\tfromCaption\t\"Bob \\\"B\\\"\"@en\ne2\ta\tfromImage\tentity:x\ne3\ta\tyear\t2017\n"
        );
        let kg = parse_kg_tsv(&text).unwrap();
        assert_eq!(
            kg.edges()[0].object,
            EdgeObject::Literal("Bob \"B\"".into())
        );
        assert_eq!(kg.node("entity:x").unwrap().kind, NodeKind::Entity);
        assert_eq!(kg.node("2017").unwrap().kind, NodeKind::Literal);
        assert!(parse_kg_tsv(&format!("{HEADER}e1\ta\tabout\t\"open\n")).is_err());
    }

    #[test]
    fn conflicting_types_rejected() {
        let text = format!("{HEADER}e1\tx\trdf:type\tTemplate\ne2\tx\trdf:type\tMemeInstance\n");
        assert!(matches!(parse_kg_tsv(&text), Err(Error::Format(_))));
    }

    fn edge_set(kg: &MemeKg) -> Vec<(String, String, EdgeObject)> {
        let mut v: Vec<_> = kg
            .edges()
            .iter()
            .map(|e| (e.subject.clone(), e.predicate.clone(), e.object.clone()))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn fixture_serialization_fixpoint() {
        let kg = parse_kg_tsv(include_str!(
            "../../tests/fixtures/kg/disloyal_boyfriend.tsv"
        ))
        .unwrap();
        let again = parse_kg_tsv(&kg.to_tsv()).unwrap();
        assert_eq!(edge_set(&kg), edge_set(&again));
        assert_eq!(again.to_tsv(), kg.to_tsv());
    }

    proptest! {
        #[test]
        fn load_serialize_load_fixpoint(
            rows in proptest::collection::vec(
                (0usize..6, prop::sample::select(vec!["rdf:type", "template_of", "frame_of", "about", "tags", "fromImage", "alt_text"]), 0usize..6, "[ -~]{0,12}", any::<bool>()),
                0..30,
            )
        ) {
            let mut text = HEADER.to_owned();
            for (i, (s, p, o, lit, use_lit)) in rows.iter().enumerate() {
                let object = if *p == "rdf:type" {
                    ["Template", "MemeInstance", "MediaFrame", "Other"][*o % 4].to_owned()
                } else if *use_lit {
                    quote(lit)
                } else {
                    format!("n{o}")
                };
                // give each subject one fixed kind to avoid conflicts
                if *p == "rdf:type" {
                    let kind = ["Template", "MemeInstance", "MediaFrame"][*s % 3];
                    text.push_str(&format!("e{i}\tn{s}\trdf:type\t{kind}\n"));
                } else {
                    text.push_str(&format!("e{i}\tn{s}\t{p}\t{object}\n"));
                }
            }
            let kg = parse_kg_tsv(&text).unwrap();
            let again = parse_kg_tsv(&kg.to_tsv()).unwrap();
            prop_assert_eq!(edge_set(&kg), edge_set(&again));
            let kinds = |g: &MemeKg| g.nodes().map(|n| (n.node_id.clone(), n.kind)).collect::<Vec<_>>();
            prop_assert_eq!(kinds(&kg), kinds(&again));
        }
    }
}
