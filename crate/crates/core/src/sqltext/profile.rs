use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::lexer::{parse_tree, Node};
use super::tokenize_words;

/// Column order used by profile exports and the correlation matrix.
pub const PROPERTY_NAMES: [&str; 10] = [
    "n_chars",
    "n_words",
    "n_functions",
    "n_joins",
    "n_unique_tables",
    "n_selected_columns",
    "n_predicates",
    "n_predicate_table_names",
    "nestedness_level",
    "nested_aggregation",
];

const AGGREGATES: &[&str] = &[
    "avg", "checksum_agg", "count", "count_big", "max", "min", "stdev", "stdevp", "sum", "var", "varp",
];

/// Ten structural properties of a statement.
///
/// `n_predicate_table_names` counts attribute references (qualified or not,
/// with repetition) inside predicates, and `n_selected_columns` counts
/// distinct attribute references across the select lists of every query
/// block; both match how the reference SDSS example is tallied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SyntacticProfile {
    pub n_chars: u32,
    pub n_words: u32,
    pub n_functions: u32,
    pub n_joins: u32,
    pub n_unique_tables: u32,
    pub n_selected_columns: u32,
    pub n_predicates: u32,
    pub n_predicate_table_names: u32,
    pub nestedness_level: u32,
    pub nested_aggregation: bool,
    /// No query block was found; structural fields are zero.
    pub parse_failed: bool,
}

impl SyntacticProfile {
    /// Properties in [`PROPERTY_NAMES`] order, booleans as 0/1.
    pub fn to_vector(&self) -> [f64; 10] {
        [
            self.n_chars as f64,
            self.n_words as f64,
            self.n_functions as f64,
            self.n_joins as f64,
            self.n_unique_tables as f64,
            self.n_selected_columns as f64,
            self.n_predicates as f64,
            self.n_predicate_table_names as f64,
            self.nestedness_level as f64,
            if self.nested_aggregation { 1.0 } else { 0.0 },
        ]
    }

    /// Property value by name, as used for breakdown bucketing.
    pub fn get(&self, name: &str) -> Option<f64> {
        PROPERTY_NAMES.iter().position(|p| *p == name).map(|i| self.to_vector()[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Clause {
    Select,
    From,
    Where,
    On,
    Having,
    Other,
}

#[derive(Default)]
struct Tally {
    blocks: u32,
    max_depth: u32,
    functions: u32,
    explicit_joins: u32,
    implicit_joins: u32,
    tables: BTreeSet<String>,
    selected: BTreeSet<String>,
    predicates: u32,
    predicate_attrs: u32,
    nested_aggregation: bool,
}

/// Profiles a statement. Never fails: text without a query block gets zero
/// structural counts and `parse_failed = true`.
pub fn parse_syntactic_profile(statement: &str) -> SyntacticProfile {
    let n_chars = statement.chars().count() as u32;
    let n_words = tokenize_words(statement).map_or(0, |t| t.len() as u32);

    let tree = parse_tree(statement);
    let mut tally = Tally::default();
    visit(&tree, 0, true, &mut tally);

    if tally.blocks == 0 {
        return SyntacticProfile {
            n_chars,
            n_words,
            parse_failed: true,
            ..Default::default()
        };
    }
    SyntacticProfile {
        n_chars,
        n_words,
        n_functions: tally.functions,
        n_joins: tally.explicit_joins + tally.implicit_joins,
        n_unique_tables: tally.tables.len() as u32,
        n_selected_columns: tally.selected.len() as u32,
        n_predicates: tally.predicates,
        n_predicate_table_names: tally.predicate_attrs,
        nestedness_level: tally.max_depth,
        nested_aggregation: tally.nested_aggregation,
        parse_failed: false,
    }
}

fn keyword(node: &Node) -> Option<&str> {
    match node {
        Node::Keyword(k) => Some(k),
        _ => None,
    }
}

fn is_set_operator(node: Option<&Node>) -> bool {
    matches!(node.and_then(keyword), Some("union" | "except" | "intersect" | "all"))
}

/// Whether a group body is itself a query, possibly wrapped in more parentheses.
fn starts_query(nodes: &[Node]) -> bool {
    match nodes.first() {
        Some(Node::Keyword(k)) => k == "select" || k == "with",
        Some(Node::Group(inner)) => starts_query(inner),
        _ => false,
    }
}

/// Walks one node sequence at subquery depth `depth`. `query_ctx` marks
/// sequences where a parenthesized query is a set-operation operand rather
/// than a nested subquery.
fn visit(nodes: &[Node], depth: u32, query_ctx: bool, tally: &mut Tally) {
    let mut segments: Vec<(Clause, Vec<&Node>)> = vec![(Clause::Other, Vec::new())];
    for node in nodes {
        let clause = match keyword(node) {
            Some("select") => {
                tally.blocks += 1;
                tally.max_depth = tally.max_depth.max(depth);
                Some(Clause::Select)
            }
            Some("from") => Some(Clause::From),
            Some("where") => Some(Clause::Where),
            Some("having") => Some(Clause::Having),
            Some("on") => Some(Clause::On),
            Some("join") => {
                tally.explicit_joins += 1;
                Some(Clause::From)
            }
            Some("group" | "order" | "union" | "except" | "intersect" | "into" | "values" | "set") => Some(Clause::Other),
            _ => None,
        };
        match clause {
            Some(c) => segments.push((c, Vec::new())),
            None => segments.last_mut().expect("non-empty").1.push(node),
        }
    }

    for (clause, seg) in &segments {
        match clause {
            Clause::Select => collect_selected(seg, tally),
            Clause::From => collect_tables(seg, tally),
            Clause::Where => count_predicates(seg, true, tally),
            Clause::On | Clause::Having => count_predicates(seg, false, tally),
            Clause::Other => {}
        }
    }

    for (i, node) in nodes.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| &nodes[j]);
        match node {
            Node::Call { name, args } => {
                // `CAST(x AS varchar(20))`: the type is not a call
                if prev.and_then(keyword) != Some("as") {
                    tally.functions += 1;
                    let last = name.last().map(String::as_str).unwrap_or_default();
                    if depth >= 1 && AGGREGATES.contains(&last) {
                        tally.nested_aggregation = true;
                    }
                }
                visit(args, depth, false, tally);
            }
            Node::Group(inner) if starts_query(inner) => {
                let operand = query_ctx && (i == 0 || is_set_operator(prev) || is_set_operator(nodes.get(i + 1)));
                if operand {
                    visit(inner, depth, true, tally);
                } else {
                    visit(inner, depth + 1, true, tally);
                }
            }
            Node::Group(inner) => visit(inner, depth, false, tally),
            _ => {}
        }
    }
}

fn split_commas<'a>(nodes: &[&'a Node]) -> Vec<Vec<&'a Node>> {
    let mut items = vec![Vec::new()];
    for &n in nodes {
        if *n == Node::Comma {
            items.push(Vec::new());
        } else {
            items.last_mut().expect("non-empty").push(n);
        }
    }
    items
}

fn is_operand(node: &Node) -> bool {
    matches!(
        node,
        Node::Ident(_) | Node::Call { .. } | Node::Group(_) | Node::Literal | Node::Variable | Node::QualifiedStar(_)
    ) || keyword(node) == Some("end")
}

fn collect_selected(seg: &[&Node], tally: &mut Tally) {
    let mut rest = seg;
    // DISTINCT / ALL / TOP n [PERCENT] [WITH TIES]
    while let Some((first, tail)) = rest.split_first() {
        match keyword(first) {
            Some("distinct" | "all" | "percent" | "with" | "ties") => rest = tail,
            Some("top") => {
                rest = tail;
                if matches!(rest.first(), Some(Node::Literal | Node::Group(_) | Node::Variable)) {
                    rest = &rest[1..];
                }
            }
            _ => break,
        }
    }
    select_items(rest, &mut tally.selected);
}

fn select_items(nodes: &[&Node], out: &mut BTreeSet<String>) {
    for item in split_commas(nodes) {
        if matches!(item.as_slice(), [Node::Star]) {
            out.insert("*".into());
            continue;
        }
        for (i, node) in item.iter().enumerate() {
            let prev = i.checked_sub(1).map(|j| item[j]);
            match node {
                Node::Ident(parts) => {
                    let alias = prev.is_some_and(|p| keyword(p) == Some("as") || (parts.len() == 1 && is_operand(p)));
                    if !alias {
                        out.insert(parts.join("."));
                    }
                }
                Node::QualifiedStar(parts) => {
                    out.insert(format!("{}.*", parts.join(".")));
                }
                Node::Call { args, .. } => select_items(&args.iter().collect::<Vec<_>>(), out),
                Node::Group(inner) if !starts_query(inner) => select_items(&inner.iter().collect::<Vec<_>>(), out),
                _ => {}
            }
        }
    }
}

fn collect_tables(seg: &[&Node], tally: &mut Tally) {
    for item in split_commas(seg) {
        let first = item
            .iter()
            .find(|n| !matches!(keyword(n), Some("inner" | "outer" | "left" | "right" | "full" | "cross" | "natural")));
        if let Some(Node::Ident(parts)) = first {
            if let Some(name) = parts.iter().rev().find(|p| !p.is_empty()) {
                tally.tables.insert(name.clone());
            }
        }
    }
}

/// Splits a boolean condition into atomic predicates on AND/OR, keeping the
/// AND of `BETWEEN a AND b` and anything inside CASE ... END.
fn atoms<'a>(nodes: &[&'a Node], out: &mut Vec<Vec<&'a Node>>) {
    let mut current: Vec<&Node> = Vec::new();
    let mut between = false;
    let mut case_depth = 0usize;
    let flush = |current: &mut Vec<&'a Node>, out: &mut Vec<Vec<&'a Node>>| {
        let atom = std::mem::take(current);
        let core: Vec<&Node> = atom.iter().copied().skip_while(|n| keyword(n) == Some("not")).collect();
        match core.as_slice() {
            [] => {}
            [Node::Group(inner)] if !starts_query(inner) => atoms(&inner.iter().collect::<Vec<_>>(), out),
            _ => out.push(atom),
        }
    };
    for &node in nodes {
        match keyword(node) {
            Some("case") => case_depth += 1,
            Some("end") => case_depth = case_depth.saturating_sub(1),
            Some("between") => between = true,
            Some("and") if case_depth == 0 && between => {
                between = false;
                current.push(node);
                continue;
            }
            Some("and" | "or") if case_depth == 0 => {
                flush(&mut current, out);
                continue;
            }
            _ => {}
        }
        current.push(node);
    }
    flush(&mut current, out);
}

fn count_attributes(nodes: &[&Node]) -> u32 {
    let mut count = 0;
    for (i, node) in nodes.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| nodes[j]);
        count += match node {
            Node::Ident(_) if prev.and_then(keyword) != Some("as") => 1,
            Node::Call { args, .. } => count_attributes(&args.iter().collect::<Vec<_>>()),
            Node::Group(inner) if !starts_query(inner) => count_attributes(&inner.iter().collect::<Vec<_>>()),
            _ => 0,
        };
    }
    count
}

fn count_predicates(seg: &[&Node], detect_joins: bool, tally: &mut Tally) {
    let mut found = Vec::new();
    atoms(seg, &mut found);
    for atom in found {
        tally.predicates += 1;
        tally.predicate_attrs += count_attributes(&atom);
        if detect_joins {
            if let [Node::Ident(a), Node::Op(op), Node::Ident(b)] = atom.as_slice() {
                if op == "=" && a.len() >= 2 && b.len() >= 2 && a[a.len() - 2] != b[b.len() - 2] {
                    tally.implicit_joins += 1;
                }
            }
        }
    }
}

/// CSV with the ten properties plus `parse_failed`, one row per profile.
/// Count, min, median, mean and max of each property.
pub fn property_summaries(profiles: &[SyntacticProfile]) -> Vec<(String, crate::workload::NumericSummary)> {
    PROPERTY_NAMES
        .iter()
        .enumerate()
        .filter_map(|(i, name)| {
            let column: Vec<f64> = profiles.iter().map(|p| p.to_vector()[i]).collect();
            crate::workload::stats::summarize(&column).map(|s| (name.to_string(), s))
        })
        .collect()
}

pub fn profiles_to_csv<'a>(profiles: impl IntoIterator<Item = &'a SyntacticProfile>) -> crate::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = PROPERTY_NAMES.to_vec();
    header.push("parse_failed");
    w.write_record(&header)?;
    for p in profiles {
        let mut row: Vec<String> = p.to_vector()[..9].iter().map(|v| (*v as u64).to_string()).collect();
        row.push(p.nested_aggregation.to_string());
        row.push(p.parse_failed.to_string());
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
