//! Classify every image post of a lake against a template index.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{read_embedding_file, EmbeddingBatch};
use crate::error::{Error, Result};
use crate::index::{validate_threshold, FlatIndex};
use crate::ingest::{read_lake, CanonicalPost, Lake, Platform};

/// One line of `matches.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub post_id: String,
    pub item_id: String,
    pub platform: Platform,
    pub community: String,
    pub template_id: String,
    pub score: f64,
    pub is_meme: bool,
    pub threshold: f64,
}

pub fn run_classification(
    lake_root: &Path,
    embeddings_path: &Path,
    index: &FlatIndex,
    t: f64,
) -> Result<Vec<MatchRecord>> {
    validate_threshold(t)?;
    let lake = read_lake(lake_root)?;
    let embeddings = read_embedding_file(embeddings_path)?;
    classify_lake(&lake, &embeddings, index, t)
}

/// One record per image post, sorted by post id.
///
/// Aborts with [`Error::Coverage`] listing every image id that has no
/// embedding.
pub fn classify_lake(
    lake: &Lake,
    embeddings: &EmbeddingBatch,
    index: &FlatIndex,
    t: f64,
) -> Result<Vec<MatchRecord>> {
    let t = validate_threshold(t)?;
    let image_posts = lake.image_posts();

    let mut missing: Vec<String> = image_posts
        .iter()
        .filter(|(_, image)| embeddings.get(&image.image_id).is_none())
        .map(|(_, image)| image.image_id.clone())
        .collect();
    if !missing.is_empty() {
        missing.sort_unstable();
        missing.dedup();
        return Err(Error::Coverage { missing });
    }

    image_posts
        .par_iter()
        .map(|(post, image)| {
            let vector = embeddings.get(&image.image_id).expect("coverage checked");
            let c = index.classify(&image.image_id, vector, t)?;
            Ok(MatchRecord {
                post_id: post.post_id.clone(),
                item_id: c.item_id,
                platform: post.platform,
                community: post.community.clone(),
                template_id: c.best.template_id,
                score: c.best.score,
                is_meme: c.is_meme,
                threshold: c.threshold,
            })
        })
        .collect()
}

pub fn write_matches(records: &[MatchRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("match records serialize"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_matches(path: &Path) -> Result<Vec<MatchRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            serde_json::from_str(line)
                .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), n + 1)))
        })
        .collect()
}

/// Inner join on post id, sorted by post id.
pub fn join_posts_matches<'a>(
    posts: &'a [CanonicalPost],
    matches: &'a [MatchRecord],
) -> Result<Vec<(&'a CanonicalPost, &'a MatchRecord)>> {
    let mut by_post: HashMap<&str, &MatchRecord> = HashMap::with_capacity(matches.len());
    for m in matches {
        if by_post.insert(&m.post_id, m).is_some() {
            return Err(Error::Join(format!(
                "duplicate match for post {:?}",
                m.post_id
            )));
        }
    }
    let mut joined: Vec<_> = posts
        .iter()
        .filter_map(|p| by_post.get(p.post_id.as_str()).map(|m| (p, *m)))
        .collect();
    joined.sort_by(|a, b| a.0.post_id.cmp(&b.0.post_id));
    Ok(joined)
}
