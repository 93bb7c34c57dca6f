//! A miniature meme knowledge graph loaded from an edge-list TSV.
//!
//! Columns are `id`, `node1`, `label`, `node2`. Node kinds come from
//! `rdf:type` edges whose object is `MediaFrame`, `Template` or
//! `MemeInstance`. Objects in double or single quotes are literal strings;
//! the values of literal predicates (`about`, `origin`, `tags`, `alt_text`,
//! `title`, `label`) are always literals. Any other unquoted object names a
//! node, created as an `Entity` (or `Literal` when it is a bare number) if
//! the graph has no row for it.

mod card;
mod tsv;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use card::{
    context_card, ContextCard, EntityRef, FrameSummary, InstanceSummary, ProvenanceEntities,
};
pub use tsv::{load_kg_tsv, parse_kg_tsv};

pub mod predicate {
    pub const RDF_TYPE: &str = "rdf:type";
    /// meme instance -> template
    pub const TEMPLATE_OF: &str = "template_of";
    /// template -> media frame
    pub const FRAME_OF: &str = "frame_of";
    pub const ABOUT: &str = "about";
    pub const ORIGIN: &str = "origin";
    pub const TAGS: &str = "tags";
    pub const ALT_TEXT: &str = "alt_text";
    pub const TITLE: &str = "title";
    pub const LABEL: &str = "label";
    pub const FROM_IMAGE: &str = "fromImage";
    pub const FROM_CAPTION: &str = "fromCaption";
    pub const FROM_ABOUT: &str = "fromAbout";

    pub const LITERAL: [&str; 6] = [ABOUT, ORIGIN, TAGS, ALT_TEXT, TITLE, LABEL];
    pub const PROVENANCE: [&str; 3] = [FROM_IMAGE, FROM_CAPTION, FROM_ABOUT];

    pub fn is_literal(predicate: &str) -> bool {
        predicate == RDF_TYPE || LITERAL.contains(&predicate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    MediaFrame,
    Template,
    MemeInstance,
    Entity,
    Literal,
}

impl NodeKind {
    fn from_class(class: &str) -> Option<Self> {
        match class {
            "MediaFrame" => Some(NodeKind::MediaFrame),
            "Template" => Some(NodeKind::Template),
            "MemeInstance" => Some(NodeKind::MemeInstance),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KgNode {
    pub node_id: String,
    pub kind: NodeKind,
    /// Literal-valued predicates, values in file order.
    pub properties: BTreeMap<String, Vec<String>>,
}

impl KgNode {
    pub fn property(&self, predicate: &str) -> Option<&str> {
        self.properties.get(predicate)?.first().map(String::as_str)
    }

    pub fn values(&self, predicate: &str) -> &[String] {
        self.properties.get(predicate).map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EdgeObject {
    Node(String),
    Literal(String),
}

impl EdgeObject {
    pub fn as_node(&self) -> Option<&str> {
        match self {
            EdgeObject::Node(id) => Some(id),
            EdgeObject::Literal(_) => None,
        }
    }

    pub fn text(&self) -> &str {
        match self {
            EdgeObject::Node(s) | EdgeObject::Literal(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KgEdge {
    pub id: String,
    pub subject: String,
    pub predicate: String,
    pub object: EdgeObject,
}

/// Immutable after construction.
#[derive(Debug, Clone, Default)]
pub struct MemeKg {
    nodes: BTreeMap<String, KgNode>,
    edges: Vec<KgEdge>,
    by_subject: HashMap<String, Vec<usize>>,
    by_predicate_object: HashMap<(String, String), Vec<usize>>,
}

impl MemeKg {
    /// Assemble a graph from deduplicated edges and resolved node kinds.
    pub(crate) fn from_parts(edges: Vec<KgEdge>, kinds: HashMap<String, NodeKind>) -> Self {
        let mut nodes: BTreeMap<String, KgNode> = BTreeMap::new();
        let mut ensure = |id: &str, fallback: NodeKind| {
            nodes.entry(id.to_owned()).or_insert_with(|| KgNode {
                node_id: id.to_owned(),
                kind: kinds.get(id).copied().unwrap_or(fallback),
                properties: BTreeMap::new(),
            });
        };
        for edge in &edges {
            ensure(&edge.subject, NodeKind::Entity);
            if let EdgeObject::Node(object) = &edge.object {
                let fallback = if object.parse::<f64>().is_ok() {
                    NodeKind::Literal
                } else {
                    NodeKind::Entity
                };
                ensure(object, fallback);
            }
        }

        let mut by_subject: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_predicate_object: HashMap<(String, String), Vec<usize>> = HashMap::new();
        for (i, edge) in edges.iter().enumerate() {
            by_subject.entry(edge.subject.clone()).or_default().push(i);
            by_predicate_object
                .entry((edge.predicate.clone(), edge.object.text().to_owned()))
                .or_default()
                .push(i);
            if let EdgeObject::Literal(value) = &edge.object {
                if edge.predicate != predicate::RDF_TYPE {
                    nodes
                        .get_mut(&edge.subject)
                        .expect("subject node created above")
                        .properties
                        .entry(edge.predicate.clone())
                        .or_default()
                        .push(value.clone());
                }
            }
        }
        MemeKg {
            nodes,
            edges,
            by_subject,
            by_predicate_object,
        }
    }

    pub fn node(&self, node_id: &str) -> Option<&KgNode> {
        self.nodes.get(node_id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &KgNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> &[KgEdge] {
        &self.edges
    }

    /// Outgoing edges of `subject`, in file order.
    pub fn edges_from(&self, subject: &str) -> impl Iterator<Item = &KgEdge> {
        self.by_subject
            .get(subject)
            .into_iter()
            .flatten()
            .map(|&i| &self.edges[i])
    }

    /// Edges with the given predicate pointing at `object`.
    pub fn edges_to(&self, predicate: &str, object: &str) -> impl Iterator<Item = &KgEdge> {
        self.by_predicate_object
            .get(&(predicate.to_owned(), object.to_owned()))
            .into_iter()
            .flatten()
            .map(|&i| &self.edges[i])
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> Vec<&str> {
        self.nodes
            .values()
            .filter(|n| n.kind == kind)
            .map(|n| n.node_id.as_str())
            .collect()
    }

    /// All template node ids, sorted.
    pub fn templates(&self) -> Vec<&str> {
        self.nodes_of_kind(NodeKind::Template)
    }

    fn template(&self, template_id: &str) -> Result<&KgNode> {
        self.nodes
            .get(template_id)
            .filter(|n| n.kind == NodeKind::Template)
            .ok_or_else(|| Error::NotFound(format!("template {template_id:?}")))
    }

    /// Meme instances linked to the template, sorted.
    pub fn instances_of(&self, template_id: &str) -> Result<Vec<&str>> {
        self.template(template_id)?;
        let mut ids: Vec<&str> = self
            .edges_to(predicate::TEMPLATE_OF, template_id)
            .filter(|e| matches!(&e.object, EdgeObject::Node(_)))
            .map(|e| e.subject.as_str())
            .filter(|id| self.nodes[*id].kind == NodeKind::MemeInstance)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        Ok(ids)
    }

    /// The template's media frame, or `None` when the link is missing.
    /// With several links the smallest frame id wins.
    pub fn media_frame_of(&self, template_id: &str) -> Result<Option<&KgNode>> {
        self.template(template_id)?;
        Ok(self
            .edges_from(template_id)
            .filter(|e| e.predicate == predicate::FRAME_OF)
            .filter_map(|e| e.object.as_node())
            .filter_map(|id| self.nodes.get(id))
            .filter(|n| n.kind == NodeKind::MediaFrame)
            .min_by(|a, b| a.node_id.cmp(&b.node_id)))
    }

    /// Render as edge-list TSV that [`parse_kg_tsv`] reads back to the same graph.
    pub fn to_tsv(&self) -> String {
        tsv::render(&self.edges)
    }
}
