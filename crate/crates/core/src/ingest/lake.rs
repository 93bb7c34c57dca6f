use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{file_name, resolve_image_ref, CanonicalPost, ImageObject, Platform, RecordError};
use crate::error::{Error, Result};

const MANIFEST: &str = "manifest.json";

/// An accepted image together with the file it will be copied from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagedImage {
    pub object: ImageObject,
    pub source: PathBuf,
}

/// Counts of image references dropped by the format filter, keyed by
/// lower-cased extension (empty string when there is none).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DropSummary {
    pub by_extension: BTreeMap<String, usize>,
}

impl DropSummary {
    pub fn total(&self) -> usize {
        self.by_extension.values().sum()
    }
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    /// Sorted by image id.
    pub images: Vec<StagedImage>,
    pub dropped: DropSummary,
    pub errors: Vec<RecordError>,
}

impl FilterOutcome {
    pub fn objects(&self) -> impl Iterator<Item = &ImageObject> {
        self.images.iter().map(|s| &s.object)
    }
}

/// Per-community summary of what the lake holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LakeManifest {
    pub platform: Platform,
    pub community: String,
    pub post_count: usize,
    pub image_post_count: usize,
    pub post_ids: Vec<String>,
}

/// Contents of `manifest.json`: every community file plus every stored image.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LakeIndex {
    pub communities: Vec<LakeManifest>,
    pub images: Vec<ImageObject>,
}

impl LakeIndex {
    pub fn community(&self, platform: Platform, community: &str) -> Option<&LakeManifest> {
        self.communities
            .iter()
            .find(|m| m.platform == platform && m.community == community)
    }

    pub fn post_count(&self) -> usize {
        self.communities.iter().map(|m| m.post_count).sum()
    }

    pub fn image_post_count(&self) -> usize {
        self.communities.iter().map(|m| m.image_post_count).sum()
    }
}

/// Keep only jpg/jpeg/png references whose file exists under `images_dir`.
///
/// Other formats are dropped and counted. A reference to a missing or
/// empty file becomes a [`RecordError`]; the post keeps its `image_ref` but
/// will not count as an image post.
pub fn transform_filter_images(posts: &[CanonicalPost], images_dir: &Path) -> FilterOutcome {
    let mut outcome = FilterOutcome::default();
    let mut staged: BTreeMap<String, StagedImage> = BTreeMap::new();

    for post in posts {
        let Some(image_ref) = post.image_ref.as_deref() else {
            continue;
        };
        let name = file_name(image_ref);
        let Some((image_id, format)) = resolve_image_ref(name) else {
            let ext = name
                .rsplit_once('.')
                .map(|(_, ext)| ext.to_ascii_lowercase())
                .unwrap_or_default();
            *outcome.dropped.by_extension.entry(ext).or_default() += 1;
            continue;
        };
        let source = images_dir.join(name);
        let error = |reason: String| RecordError {
            line: None,
            post_id: Some(post.post_id.clone()),
            reason,
        };

        if let Some(existing) = staged.get(&image_id) {
            if existing.source != source {
                outcome.errors.push(error(format!(
                    "image id {image_id:?} already taken by {}",
                    existing.source.display()
                )));
            }
            continue;
        }
        match fs::metadata(&source) {
            Ok(meta) if meta.is_file() && meta.len() > 0 => {
                let content_ref = format!("images/{image_id}.{}", format.extension());
                staged.insert(
                    image_id.clone(),
                    StagedImage {
                        object: ImageObject {
                            image_id,
                            format,
                            byte_length: meta.len(),
                            content_ref,
                        },
                        source,
                    },
                );
            }
            Ok(_) => outcome.errors.push(error(format!(
                "{} is empty or not a file",
                source.display()
            ))),
            Err(e) => outcome
                .errors
                .push(error(format!("cannot read {}: {e}", source.display()))),
        }
    }
    outcome.images = staged.into_values().collect();
    outcome
}

/// File stem used for a community's posts file.
pub(crate) fn community_file_stem(community: &str) -> String {
    let stem: String = community
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if stem.is_empty() {
        "_".to_owned()
    } else {
        stem
    }
}

fn posts_path(root: &Path, platform: Platform, community: &str) -> PathBuf {
    root.join("posts")
        .join(platform.as_str())
        .join(format!("{}.jsonl", community_file_stem(community)))
}

/// Write posts and images into the lake rooted at `lake_root`.
///
/// Each (platform, community) present in `posts` has its JSONL file
/// rewritten, sorted by post id. Communities from earlier loads are kept.
/// The same input always produces the same bytes.
pub fn load_to_lake(
    posts: &[CanonicalPost],
    images: &[StagedImage],
    lake_root: &Path,
) -> Result<LakeIndex> {
    let mut seen = HashSet::new();
    for post in posts {
        if !seen.insert(post.post_id.as_str()) {
            return Err(Error::Parameter(format!(
                "duplicate post_id {:?} in load batch",
                post.post_id
            )));
        }
    }

    let manifest_path = lake_root.join(MANIFEST);
    let mut index = if manifest_path.is_file() {
        read_manifest(&manifest_path)?
    } else {
        LakeIndex::default()
    };

    let images_dir = lake_root.join("images");
    fs::create_dir_all(&images_dir).map_err(|e| Error::lake(&images_dir, e))?;

    let mut stored: BTreeMap<String, ImageObject> = index
        .images
        .drain(..)
        .map(|o| (o.image_id.clone(), o))
        .collect();
    for image in images {
        let dest = lake_root.join(&image.object.content_ref);
        let bytes = fs::read(&image.source).map_err(|e| Error::lake(&image.source, e))?;
        if fs::read(&dest).ok().as_deref() != Some(bytes.as_slice()) {
            fs::write(&dest, &bytes).map_err(|e| Error::lake(&dest, e))?;
        }
        stored.insert(image.object.image_id.clone(), image.object.clone());
    }

    let mut groups: BTreeMap<(Platform, &str), Vec<&CanonicalPost>> = BTreeMap::new();
    for post in posts {
        groups
            .entry((post.platform, post.community.as_str()))
            .or_default()
            .push(post);
    }

    let mut communities: BTreeMap<(Platform, String), LakeManifest> = index
        .communities
        .drain(..)
        .map(|m| ((m.platform, m.community.clone()), m))
        .collect();

    for ((platform, community), mut group) in groups {
        group.sort_by(|a, b| a.post_id.cmp(&b.post_id));
        let path = posts_path(lake_root, platform, community);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::lake(parent, e))?;
        }
        let mut body = String::new();
        for post in &group {
            body.push_str(&serde_json::to_string(post).expect("posts serialize"));
            body.push('\n');
        }
        fs::write(&path, body).map_err(|e| Error::lake(&path, e))?;

        let image_post_count = group
            .iter()
            .filter(|p| resolves(p, &stored).is_some())
            .count();
        communities.insert(
            (platform, community.to_owned()),
            LakeManifest {
                platform,
                community: community.to_owned(),
                post_count: group.len(),
                image_post_count,
                post_ids: group.iter().map(|p| p.post_id.clone()).collect(),
            },
        );
    }

    let index = LakeIndex {
        communities: communities.into_values().collect(),
        images: stored.into_values().collect(),
    };
    let mut json = serde_json::to_string_pretty(&index).expect("manifest serializes");
    json.push('\n');
    fs::write(&manifest_path, json).map_err(|e| Error::lake(&manifest_path, e))?;
    Ok(index)
}

fn resolves<'a>(
    post: &CanonicalPost,
    images: &'a BTreeMap<String, ImageObject>,
) -> Option<&'a ImageObject> {
    let (id, format) = resolve_image_ref(post.image_ref.as_deref()?)?;
    images.get(&id).filter(|o| o.format == format)
}

fn read_manifest(path: &Path) -> Result<LakeIndex> {
    let text = fs::read_to_string(path).map_err(|e| Error::lake(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// A lake loaded back from disk.
#[derive(Debug, Clone)]
pub struct Lake {
    pub root: PathBuf,
    pub index: LakeIndex,
    /// All posts, sorted by post id.
    pub posts: Vec<CanonicalPost>,
}

impl Lake {
    /// Posts whose image reference names a stored image, sorted by post id.
    pub fn image_posts(&self) -> Vec<(&CanonicalPost, &ImageObject)> {
        let by_id: HashMap<&str, &ImageObject> = self
            .index
            .images
            .iter()
            .map(|o| (o.image_id.as_str(), o))
            .collect();
        self.posts
            .iter()
            .filter_map(|post| {
                let (id, format) = resolve_image_ref(post.image_ref.as_deref()?)?;
                let object = by_id.get(id.as_str()).filter(|o| o.format == format)?;
                Some((post, *object))
            })
            .collect()
    }

    pub fn image_path(&self, image: &ImageObject) -> PathBuf {
        self.root.join(&image.content_ref)
    }
}

pub fn read_lake(lake_root: &Path) -> Result<Lake> {
    let index = read_manifest(&lake_root.join(MANIFEST))?;
    let mut posts = Vec::with_capacity(index.post_count());
    for entry in &index.communities {
        let path = posts_path(lake_root, entry.platform, &entry.community);
        let text = fs::read_to_string(&path).map_err(|e| Error::lake(&path, e))?;
        for (n, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let post: CanonicalPost = serde_json::from_str(line)
                .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), n + 1)))?;
            posts.push(post);
        }
    }
    posts.sort_by(|a, b| a.post_id.cmp(&b.post_id));
    if let Some(w) = posts.windows(2).find(|w| w[0].post_id == w[1].post_id) {
        return Err(Error::Format(format!(
            "duplicate post_id {:?} in lake",
            w[0].post_id
        )));
    }
    Ok(Lake {
        root: lake_root.to_path_buf(),
        index,
        posts,
    })
}
