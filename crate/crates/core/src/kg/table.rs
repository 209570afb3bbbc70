//! The canonical triple-table interchange format.
//!
//! UTF-8, comma-delimited, header
//! `subject,relation,object,subject_type,object_type,link_type` with
//! `link_type` spelled `True`/`False`. One row per edge.

use super::{Edge, KgError, KnowledgeGraph, Polarity, Schema};
use std::io::{Read, Write};

#[derive(Debug)]
struct Row {
    subject: String,
    relation: String,
    object: String,
    subject_type: String,
    object_type: String,
    polarity: Polarity,
}

const HEADER: [&str; 6] = [
    "subject",
    "relation",
    "object",
    "subject_type",
    "object_type",
    "link_type",
];

/// Loads a knowledge graph from a triple table.
///
/// Ids are assigned in first-appearance order, scanning the subject column
/// before the object column, so the table alone fixes the id layout. The
/// schema is inferred from the observed (relation, endpoint types)
/// combinations.
pub fn load_triple_table<R: Read>(reader: R) -> Result<KnowledgeGraph, KgError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    {
        let headers = csv_reader.headers()?;
        let got: Vec<&str> = headers.iter().collect();
        if got != HEADER {
            return Err(KgError::MalformedRow {
                row: 0,
                reason: format!("expected header {:?}, got {:?}", HEADER.join(","), got.join(",")),
            });
        }
    }

    let mut rows = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| KgError::MalformedRow {
            row: row_no,
            reason: e.to_string(),
        })?;
        if record.len() != 6 {
            return Err(KgError::MalformedRow {
                row: row_no,
                reason: format!("expected 6 fields, got {}", record.len()),
            });
        }
        let field = |idx: usize| record.get(idx).unwrap_or("").to_string();
        let polarity = Polarity::from_table_literal(record.get(5).unwrap_or("")).ok_or_else(|| {
            KgError::MalformedRow {
                row: row_no,
                reason: format!("link_type must be True or False, got `{}`", field(5)),
            }
        })?;
        for (idx, column) in HEADER.iter().enumerate().take(5) {
            if record.get(idx).unwrap_or("").is_empty() {
                return Err(KgError::MalformedRow {
                    row: row_no,
                    reason: format!("empty `{column}` field"),
                });
            }
        }
        rows.push(Row {
            subject: field(0),
            relation: field(1),
            object: field(2),
            subject_type: field(3),
            object_type: field(4),
            polarity,
        });
    }

    let mut kg = KnowledgeGraph::new(Schema::new());

    // Subject column first, then object column; this matches sequential id
    // assignment where sources are numbered before targets.
    for row in &rows {
        let ty = kg.intern_node_type(&row.subject_type);
        kg.intern_node(&row.subject, ty)?;
    }
    for row in &rows {
        let ty = kg.intern_node_type(&row.object_type);
        kg.intern_node(&row.object, ty)?;
    }

    for row in &rows {
        let subject_ty = kg
            .schema()
            .node_type_id(&row.subject_type)
            .expect("interned above");
        let object_ty = kg
            .schema()
            .node_type_id(&row.object_type)
            .expect("interned above");
        let relation = kg.intern_relation(&row.relation, subject_ty, object_ty)?;
        let subject = kg.node_id(&row.subject).expect("interned above");
        let object = kg.node_id(&row.object).expect("interned above");
        kg.add_edge(Edge {
            subject,
            relation,
            object,
            polarity: row.polarity,
        })?;
    }

    Ok(kg)
}

/// Writes a graph as a triple table, one row per edge in edge order.
pub fn write_triple_table<W: Write>(kg: &KnowledgeGraph, writer: W) -> Result<(), KgError> {
    let mut csv_writer = csv::WriterBuilder::new().from_writer(writer);
    csv_writer.write_record(HEADER)?;
    let schema = kg.schema();
    for edge in kg.edges() {
        let def = schema.relation(edge.relation);
        csv_writer.write_record([
            kg.node_name(edge.subject),
            &def.name,
            kg.node_name(edge.object),
            schema.node_type_name(kg.node_type(edge.subject)),
            schema.node_type_name(kg.node_type(edge.object)),
            edge.polarity.table_literal(),
        ])?;
    }
    csv_writer.flush()?;
    Ok(())
}
