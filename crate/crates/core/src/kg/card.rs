use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{predicate, EdgeObject, KgNode, MemeKg};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSummary {
    pub frame_id: String,
    pub about: String,
    pub origin: String,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub instance_id: String,
    pub alternative_text: Option<String>,
}

/// An entity mentioned through a provenance edge. `id` is absent when the
/// edge object was a literal rather than a node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityRef {
    pub id: Option<String>,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceEntities {
    #[serde(rename = "fromImage")]
    pub from_image: Vec<EntityRef>,
    #[serde(rename = "fromCaption")]
    pub from_caption: Vec<EntityRef>,
    #[serde(rename = "fromAbout")]
    pub from_about: Vec<EntityRef>,
}

impl ProvenanceEntities {
    pub fn get(&self, provenance: &str) -> Option<&[EntityRef]> {
        match provenance {
            predicate::FROM_IMAGE => Some(&self.from_image),
            predicate::FROM_CAPTION => Some(&self.from_caption),
            predicate::FROM_ABOUT => Some(&self.from_about),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.from_image.is_empty() && self.from_caption.is_empty() && self.from_about.is_empty()
    }
}

/// Everything the graph says about one template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextCard {
    pub template_id: String,
    pub template_title: String,
    pub media_frame: Option<FrameSummary>,
    pub instances: Vec<InstanceSummary>,
    pub entities: ProvenanceEntities,
    pub frame_missing: bool,
}

fn title_of(node: &KgNode) -> String {
    if let Some(title) = node
        .property(predicate::TITLE)
        .or(node.property(predicate::LABEL))
    {
        return title.to_owned();
    }
    node.node_id
        .rsplit(['/', ':'])
        .next()
        .unwrap_or(&node.node_id)
        .to_owned()
}

/// Assemble the card for `template_id`.
///
/// Entities are collected from provenance edges leaving the template, its
/// instances and its media frame, grouped by predicate, deduplicated and
/// sorted.
pub fn context_card(kg: &MemeKg, template_id: &str) -> Result<ContextCard> {
    let template = kg.template(template_id)?;
    let frame = kg.media_frame_of(template_id)?;
    let instance_ids = kg.instances_of(template_id)?;

    let instances = instance_ids
        .iter()
        .map(|id| InstanceSummary {
            instance_id: (*id).to_owned(),
            alternative_text: kg
                .node(id)
                .and_then(|n| n.property(predicate::ALT_TEXT))
                .map(str::to_owned),
        })
        .collect();

    let mut sources = vec![template_id];
    sources.extend(instance_ids.iter().copied());
    if let Some(frame) = frame {
        sources.push(&frame.node_id);
    }

    let collect = |provenance: &str| -> Vec<EntityRef> {
        let set: BTreeSet<EntityRef> = sources
            .iter()
            .flat_map(|s| kg.edges_from(s))
            .filter(|e| e.predicate == provenance)
            .map(|e| match &e.object {
                EdgeObject::Node(id) => EntityRef {
                    id: Some(id.clone()),
                    label: kg
                        .node(id)
                        .and_then(|n| n.property(predicate::LABEL))
                        .unwrap_or(id)
                        .to_owned(),
                },
                EdgeObject::Literal(text) => EntityRef {
                    id: None,
                    label: text.clone(),
                },
            })
            .collect();
        set.into_iter().collect()
    };

    let media_frame = frame.map(|f| FrameSummary {
        frame_id: f.node_id.clone(),
        about: f.property(predicate::ABOUT).unwrap_or_default().to_owned(),
        origin: f.property(predicate::ORIGIN).unwrap_or_default().to_owned(),
        tags: f.values(predicate::TAGS).to_vec(),
    });

    Ok(ContextCard {
        template_id: template_id.to_owned(),
        template_title: title_of(template),
        frame_missing: media_frame.is_none(),
        media_frame,
        instances,
        entities: ProvenanceEntities {
            from_image: collect(predicate::FROM_IMAGE),
            from_caption: collect(predicate::FROM_CAPTION),
            from_about: collect(predicate::FROM_ABOUT),
        },
    })
}
