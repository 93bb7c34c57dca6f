use std::collections::HashSet;

use serde::{Deserialize, Deserializer};

use super::timestamp::{normalize_timestamp, RawTimestamp};
use super::{file_name, resolve_image_ref, CanonicalPost, Platform, RecordError};

/// The eleven PRAW fields of a Reddit submission export. All are required.
#[derive(Debug, Clone, Deserialize)]
pub struct RedditPostRecord {
    #[serde(deserialize_with = "nullable_text")]
    pub title: String,
    #[serde(deserialize_with = "nullable_text")]
    pub author: String,
    #[serde(deserialize_with = "nullable_text")]
    pub selftext: String,
    pub score: i64,
    pub ups: i64,
    pub downs: i64,
    pub created_utc: RawTimestamp,
    #[serde(deserialize_with = "nullable_text")]
    pub posturl: String,
    pub num_comments: u64,
    #[serde(deserialize_with = "nullable_text")]
    pub imageurl: String,
    pub is_nsfw: bool,
    /// Not part of the PRAW feature set; used for the post id when present.
    #[serde(default)]
    pub id: Option<String>,
}

/// The seven fields of a Discord message export. All are required.
#[derive(Debug, Clone, Deserialize)]
pub struct DiscordPostRecord {
    #[serde(deserialize_with = "nullable_text")]
    pub content: String,
    #[serde(deserialize_with = "nullable_text")]
    pub author: String,
    pub pinned: bool,
    pub created_utc: RawTimestamp,
    pub mentions: Vec<String>,
    pub reactions: Vec<Reaction>,
    pub attachments: Vec<String>,
    #[serde(default)]
    pub id: Option<String>,
}

/// `["😂", 3]` or `{"emoji": "😂", "count": 3}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reaction {
    pub emoji: String,
    pub count: u64,
}

impl<'de> Deserialize<'de> for Reaction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Pair(String, u64),
            Object { emoji: String, count: u64 },
        }
        Ok(match Wire::deserialize(deserializer)? {
            Wire::Pair(emoji, count) | Wire::Object { emoji, count } => Reaction { emoji, count },
        })
    }
}

fn nullable_text<'de, D: Deserializer<'de>>(deserializer: D) -> Result<String, D::Error> {
    Ok(Option::<String>::deserialize(deserializer)?.unwrap_or_default())
}

/// Parse a Reddit JSONL export for one subreddit.
///
/// Blank lines are skipped. Every other line yields either a post or a
/// [`RecordError`]; errors never abort the batch.
pub fn parse_reddit_export<'a, I>(
    lines: I,
    community: &str,
) -> (Vec<CanonicalPost>, Vec<RecordError>)
where
    I: IntoIterator<Item = &'a str>,
{
    parse_lines(
        lines,
        community,
        Platform::Reddit,
        |record: RedditPostRecord, post_id| {
            let created_utc =
                normalize_timestamp(&record.created_utc).map_err(|e| e.to_string())?;
            let image_ref = has_image_extension(&record.imageurl)
                .then(|| file_name(&record.imageurl).to_owned());
            let text = if record.selftext.is_empty() {
                record.title
            } else {
                format!("{}\n\n{}", record.title, record.selftext)
            };
            Ok(CanonicalPost {
                post_id,
                platform: Platform::Reddit,
                community: community.to_owned(),
                author: record.author,
                created_utc,
                image_ref,
                text,
                engagement: record.score,
                nsfw: record.is_nsfw,
            })
        },
        |r| r.id.clone(),
    )
}

/// Parse a Discord JSONL export for one channel.
///
/// The image is the first attachment with a jpg/jpeg/png extension and
/// engagement is the sum of reaction counts.
pub fn parse_discord_export<'a, I>(
    lines: I,
    community: &str,
) -> (Vec<CanonicalPost>, Vec<RecordError>)
where
    I: IntoIterator<Item = &'a str>,
{
    parse_lines(
        lines,
        community,
        Platform::Discord,
        |record: DiscordPostRecord, post_id| {
            if record.attachments.iter().any(|a| a.is_empty()) {
                return Err("empty attachment entry".to_owned());
            }
            let created_utc =
                normalize_timestamp(&record.created_utc).map_err(|e| e.to_string())?;
            let image_ref = record
                .attachments
                .iter()
                .find(|a| has_image_extension(a))
                .map(|a| file_name(a).to_owned());
            let engagement = record
                .reactions
                .iter()
                .try_fold(0i64, |acc, r| acc.checked_add(i64::try_from(r.count).ok()?))
                .ok_or_else(|| "reaction total overflows".to_owned())?;
            Ok(CanonicalPost {
                post_id,
                platform: Platform::Discord,
                community: community.to_owned(),
                author: record.author,
                created_utc,
                image_ref,
                text: record.content,
                engagement,
                nsfw: false,
            })
        },
        |r| r.id.clone(),
    )
}

fn has_image_extension(reference: &str) -> bool {
    resolve_image_ref(reference).is_some()
}

fn parse_lines<'a, I, R, F, G>(
    lines: I,
    community: &str,
    platform: Platform,
    convert: F,
    explicit_id: G,
) -> (Vec<CanonicalPost>, Vec<RecordError>)
where
    I: IntoIterator<Item = &'a str>,
    R: for<'de> Deserialize<'de>,
    F: Fn(R, String) -> Result<CanonicalPost, String>,
    G: Fn(&R) -> Option<String>,
{
    let mut posts = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();

    for (index, line) in lines.into_iter().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fail = |reason: String, post_id: Option<String>| RecordError {
            line: Some(index + 1),
            post_id,
            reason,
        };
        let record: R = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                errors.push(fail(e.to_string(), None));
                continue;
            }
        };
        let post_id = match explicit_id(&record) {
            Some(id) => format!("{platform}:{community}:{id}"),
            None => format!("{platform}:{community}:{index:08}"),
        };
        if seen.contains(&post_id) {
            errors.push(fail("duplicate post id".into(), Some(post_id)));
            continue;
        }
        match convert(record, post_id.clone()) {
            Ok(post) => {
                seen.insert(post_id);
                posts.push(post);
            }
            Err(reason) => errors.push(fail(reason, Some(post_id))),
        }
    }
    (posts, errors)
}
