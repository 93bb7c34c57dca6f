//! Extract, transform and load of platform exports into a local data lake.
//!
//! Exports are JSONL files shaped like the Reddit (PRAW) and Discord
//! records. Parsing is record-tolerant: a malformed line becomes a
//! [`RecordError`] and the rest of the batch continues.

mod lake;
mod records;
mod timestamp;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use lake::{
    load_to_lake, read_lake, transform_filter_images, DropSummary, FilterOutcome, Lake, LakeIndex,
    LakeManifest, StagedImage,
};
pub use records::{
    parse_discord_export, parse_reddit_export, DiscordPostRecord, Reaction, RedditPostRecord,
};
pub use timestamp::{normalize_timestamp, RawTimestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Reddit,
    Discord,
}

impl Platform {
    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Reddit => "reddit",
            Platform::Discord => "discord",
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Platform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "reddit" => Ok(Platform::Reddit),
            "discord" => Ok(Platform::Discord),
            other => Err(format!(
                "unknown platform {other:?} (expected reddit or discord)"
            )),
        }
    }
}

/// Platform-neutral post.
///
/// `image_ref` is the file name of the post's image (for example `y.jpg`);
/// the lake stores it as an [`ImageObject`] whose id is the file stem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalPost {
    pub post_id: String,
    pub platform: Platform,
    pub community: String,
    pub author: String,
    pub created_utc: String,
    pub image_ref: Option<String>,
    pub text: String,
    pub engagement: i64,
    pub nsfw: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Jpg,
    Jpeg,
    Png,
}

impl ImageFormat {
    /// Case-insensitive extension lookup; `None` for anything outside jpg/jpeg/png.
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "jpg" => Some(ImageFormat::Jpg),
            "jpeg" => Some(ImageFormat::Jpeg),
            "png" => Some(ImageFormat::Png),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Jpg => "jpg",
            ImageFormat::Jpeg => "jpeg",
            ImageFormat::Png => "png",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageObject {
    pub image_id: String,
    pub format: ImageFormat,
    pub byte_length: u64,
    pub content_ref: String,
}

/// A rejected input record. Collected alongside successful output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    /// 1-based line number in the export, for parse errors.
    pub line: Option<usize>,
    pub post_id: Option<String>,
    pub reason: String,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.post_id) {
            (Some(line), _) => write!(f, "line {line}: {}", self.reason),
            (None, Some(id)) => write!(f, "post {id}: {}", self.reason),
            (None, None) => f.write_str(&self.reason),
        }
    }
}

/// Split an image reference into `(image_id, format)`.
///
/// The reference is reduced to its last path segment; the id is the file
/// stem. Returns `None` when the extension is not an allowed image format.
pub fn resolve_image_ref(image_ref: &str) -> Option<(String, ImageFormat)> {
    let name = file_name(image_ref);
    let (stem, ext) = name.rsplit_once('.')?;
    if stem.is_empty() {
        return None;
    }
    ImageFormat::from_extension(ext).map(|format| (stem.to_owned(), format))
}

pub(crate) fn file_name(reference: &str) -> &str {
    reference.rsplit(['/', '\\']).next().unwrap_or(reference)
}
