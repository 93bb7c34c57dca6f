//! Exact flat similarity index over template exemplars.
//!
//! Vectors are unit length, so the inner product is the cosine
//! similarity. Every query scans every stored exemplar.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{read_embedding_file, EmbeddingVector, BOUNDARY_NORM_TOLERANCE};
use crate::error::{Error, Result};

/// Slack allowed on either side of [-1, 1] for a reported score.
pub const SCORE_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateExemplar {
    pub template_id: String,
    pub exemplar_idx: u32,
    pub vector: EmbeddingVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub template_id: String,
    pub score: f64,
    pub exemplar_idx: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub item_id: String,
    pub is_meme: bool,
    pub best: MatchResult,
    pub threshold: f64,
}

/// Immutable exact-search index. Exemplars are ordered by
/// `(template_id, exemplar_idx)`.
#[derive(Debug, Clone)]
pub struct FlatIndex {
    dim: usize,
    keys: Vec<(String, u32)>,
    /// Row-major, `keys.len() x dim`.
    data: Vec<f32>,
}

/// Inner product accumulated left to right in f64.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |acc, (&x, &y)| acc + f64::from(x) * f64::from(y))
}

/// Reject thresholds outside `[0, 1]`.
pub fn validate_threshold(t: f64) -> Result<f64> {
    if t.is_finite() && (0.0..=1.0).contains(&t) {
        Ok(t)
    } else {
        Err(Error::Parameter(format!("threshold {t} is outside [0, 1]")))
    }
}

pub fn build_index(mut exemplars: Vec<TemplateExemplar>) -> Result<FlatIndex> {
    let first = exemplars
        .first()
        .ok_or_else(|| Error::Build("no exemplars".into()))?;
    let dim = first.vector.dim();
    for ex in &exemplars {
        if ex.vector.dim() != dim {
            return Err(Error::Build(format!(
                "exemplar {}#{} has dim {} but index dim is {dim}",
                ex.template_id,
                ex.exemplar_idx,
                ex.vector.dim()
            )));
        }
        let norm = ex.vector.norm();
        if (norm - 1.0).abs() > BOUNDARY_NORM_TOLERANCE {
            return Err(Error::Normalization {
                item_id: Some(format!("{}#{}", ex.template_id, ex.exemplar_idx)),
                reason: format!("norm {norm}"),
            });
        }
    }
    exemplars.sort_by(|a, b| {
        a.template_id
            .cmp(&b.template_id)
            .then(a.exemplar_idx.cmp(&b.exemplar_idx))
    });
    if let Some(w) = exemplars
        .windows(2)
        .find(|w| w[0].template_id == w[1].template_id && w[0].exemplar_idx == w[1].exemplar_idx)
    {
        return Err(Error::Build(format!(
            "duplicate exemplar {}#{}",
            w[0].template_id, w[0].exemplar_idx
        )));
    }

    let mut keys = Vec::with_capacity(exemplars.len());
    let mut data = Vec::with_capacity(exemplars.len() * dim);
    for ex in exemplars {
        data.extend_from_slice(ex.vector.as_slice());
        keys.push((ex.template_id, ex.exemplar_idx));
    }
    Ok(FlatIndex { dim, keys, data })
}

impl FlatIndex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Distinct template ids, sorted.
    pub fn template_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.keys.iter().map(|(t, _)| t.as_str()).collect();
        ids.dedup();
        ids
    }

    pub fn exemplar(&self, position: usize) -> (&str, u32, &[f32]) {
        let (template, idx) = &self.keys[position];
        (template, *idx, self.row(position))
    }

    fn row(&self, position: usize) -> &[f32] {
        &self.data[position * self.dim..(position + 1) * self.dim]
    }

    fn check_query(&self, q: &EmbeddingVector) -> Result<()> {
        if q.dim() != self.dim {
            return Err(Error::Query(format!(
                "query dim {} does not match index dim {}",
                q.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    fn scores<'a>(&'a self, q: &'a EmbeddingVector) -> impl Iterator<Item = f64> + 'a {
        self.data
            .chunks_exact(self.dim)
            .map(move |row| dot(row, q.as_slice()))
    }

    fn result(&self, position: usize, score: f64) -> MatchResult {
        let (template_id, exemplar_idx) = &self.keys[position];
        MatchResult {
            template_id: template_id.clone(),
            score,
            exemplar_idx: *exemplar_idx,
        }
    }

    /// Exemplar-level top `k`, by score descending then
    /// `(template_id, exemplar_idx)` ascending.
    pub fn query_topk(&self, q: &EmbeddingVector, k: usize) -> Result<Vec<MatchResult>> {
        if k == 0 {
            return Err(Error::Parameter("k must be positive".into()));
        }
        self.check_query(q)?;
        let mut scored: Vec<(f64, usize)> = self.scores(q).zip(0..).collect();
        // positions follow the (template_id, exemplar_idx) order
        let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_unstable_by(order);
        Ok(scored
            .into_iter()
            .map(|(score, pos)| self.result(pos, score))
            .collect())
    }

    /// Best template under max-over-exemplars aggregation. Ties go to the
    /// lexicographically smallest template id.
    pub fn best_template(&self, q: &EmbeddingVector) -> Result<MatchResult> {
        self.check_query(q)?;
        let mut best: Option<(f64, usize)> = None;
        for (pos, score) in self.scores(q).enumerate() {
            // strict comparison keeps the earliest (smallest id, smallest idx) on ties
            if best.is_none_or(|(b, _)| score.total_cmp(&b) == Ordering::Greater) {
                best = Some((score, pos));
            }
        }
        let (score, pos) = best.expect("index is never empty");
        Ok(self.result(pos, score))
    }

    /// `is_meme` holds when the best template scores at or above `t`.
    pub fn classify(&self, item_id: &str, q: &EmbeddingVector, t: f64) -> Result<Classification> {
        let threshold = validate_threshold(t)?;
        let best = self.best_template(q)?;
        Ok(Classification {
            item_id: item_id.to_owned(),
            is_meme: best.score >= threshold,
            best,
            threshold,
        })
    }
}

/// Build an index from an EMB1 exemplar file plus an
/// `exemplar_item_id<TAB>template_id` map.
///
/// Exemplar indices follow the order rows appear in the map, per template.
pub fn load_index(templates_path: &Path, template_map_path: &Path) -> Result<FlatIndex> {
    let batch = read_embedding_file(templates_path)?;
    let map = read_template_map(template_map_path)?;

    let mut next_idx: HashMap<&str, u32> = HashMap::new();
    let mut exemplars = Vec::with_capacity(map.len());
    for (item_id, template_id) in &map {
        let vector = batch.get(item_id).ok_or_else(|| {
            Error::Build(format!(
                "template map names {item_id:?}, absent from embeddings"
            ))
        })?;
        let idx = next_idx.entry(template_id.as_str()).or_insert(0);
        exemplars.push(TemplateExemplar {
            template_id: template_id.clone(),
            exemplar_idx: *idx,
            vector: vector.clone(),
        });
        *idx += 1;
    }
    let mapped: HashSet<&str> = map.iter().map(|(item, _)| item.as_str()).collect();
    if let Some((unmapped, _)) = batch.iter().find(|(id, _)| !mapped.contains(id)) {
        return Err(Error::Build(format!(
            "embedding {unmapped:?} has no template"
        )));
    }
    build_index(exemplars)
}

pub fn read_template_map(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [item, template] = fields[..] else {
            return Err(Error::Format(format!(
                "{}:{}: expected exemplar_item_id<TAB>template_id",
                path.display(),
                n + 1
            )));
        };
        if item.is_empty() || template.is_empty() {
            return Err(Error::Format(format!(
                "{}:{}: empty field",
                path.display(),
                n + 1
            )));
        }
        if !seen.insert(item.to_owned()) {
            return Err(Error::Format(format!(
                "{}:{}: duplicate exemplar {item:?}",
                path.display(),
                n + 1
            )));
        }
        rows.push((item.to_owned(), template.to_owned()));
    }
    Ok(rows)
}

pub fn write_template_map(rows: &[(String, String)], path: &Path) -> Result<()> {
    let body: String = rows
        .iter()
        .map(|(item, template)| format!("{item}\t{template}\n"))
        .collect();
    fs::write(path, body).map_err(|e| Error::io(path, e))
}
