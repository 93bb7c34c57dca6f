//! Prevalence per community, template popularity and cross-platform overlap.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ingest::{CanonicalPost, Platform};
use crate::pipeline::{join_posts_matches, MatchRecord};

/// Meme-to-image ratio truncated to two decimals, stored in hundredths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mir(u32);

impl Mir {
    /// `floor(100 * meme_posts / image_posts) / 100`; zero when there are no image posts.
    pub fn truncated(meme_posts: usize, image_posts: usize) -> Self {
        if image_posts == 0 {
            return Mir(0);
        }
        Mir((meme_posts as u128 * 100 / image_posts as u128) as u32)
    }

    pub fn hundredths(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 100.0
    }
}

impl fmt::Display for Mir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Mir {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommunityStats {
    pub platform: Platform,
    pub community: String,
    pub posts: usize,
    pub image_posts: usize,
    pub meme_posts: usize,
    pub mir: Mir,
    /// Platform totals row.
    pub total: bool,
}

impl CommunityStats {
    fn new(
        platform: Platform,
        community: &str,
        posts: usize,
        image_posts: usize,
        meme_posts: usize,
        total: bool,
    ) -> Self {
        Self {
            platform,
            community: community.to_owned(),
            posts,
            image_posts,
            meme_posts,
            mir: Mir::truncated(meme_posts, image_posts),
            total,
        }
    }
}

pub const TOTAL_ROW: &str = "Total";

/// One row per (platform, community), communities sorted, followed by a
/// totals row for each platform.
///
/// A post is an image post when it has a match record; a meme post when
/// that record says `is_meme`.
pub fn community_stats(
    posts: &[CanonicalPost],
    matches: &[MatchRecord],
) -> Result<Vec<CommunityStats>> {
    let joined = join_posts_matches(posts, matches)?;
    let matched: BTreeMap<&str, bool> = joined
        .iter()
        .map(|(p, m)| (p.post_id.as_str(), m.is_meme))
        .collect();

    let mut groups: BTreeMap<Platform, BTreeMap<&str, [usize; 3]>> = BTreeMap::new();
    for post in posts {
        let counts = groups
            .entry(post.platform)
            .or_default()
            .entry(post.community.as_str())
            .or_default();
        counts[0] += 1;
        if let Some(&is_meme) = matched.get(post.post_id.as_str()) {
            counts[1] += 1;
            counts[2] += usize::from(is_meme);
        }
    }

    let mut rows = Vec::new();
    for (platform, communities) in groups {
        let mut total = [0usize; 3];
        for (community, [p, ip, mp]) in communities {
            rows.push(CommunityStats::new(platform, community, p, ip, mp, false));
            total[0] += p;
            total[1] += ip;
            total[2] += mp;
        }
        rows.push(CommunityStats::new(
            platform, TOTAL_ROW, total[0], total[1], total[2], true,
        ));
    }
    Ok(rows)
}

pub fn stats_to_tsv(rows: &[CommunityStats]) -> String {
    let mut out = String::from("platform\tcommunity\t#P\t#IP\t#MP\t#MIR\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.platform, r.community, r.posts, r.image_posts, r.meme_posts, r.mir
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PopularityEntry {
    pub template_id: String,
    pub platform: Platform,
    pub occurrence_count: usize,
    pub rank: usize,
}

/// Top `top_n` templates among meme matches on `platform`, one count per
/// matched post. Ranks run 1..; ties go to the smaller template id.
pub fn popularity(
    matches: &[MatchRecord],
    platform: Platform,
    top_n: usize,
) -> Result<Vec<PopularityEntry>> {
    if top_n < 1 {
        return Err(Error::Parameter("top_n must be at least 1".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for m in matches
        .iter()
        .filter(|m| m.is_meme && m.platform == platform)
    {
        *counts.entry(m.template_id.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    // stable sort keeps the BTreeMap's lexicographic order among equal counts
    ranked.sort_by_key(|&(_, count)| std::cmp::Reverse(count));
    Ok(ranked
        .into_iter()
        .take(top_n)
        .enumerate()
        .map(|(i, (template_id, occurrence_count))| PopularityEntry {
            template_id: template_id.to_owned(),
            platform,
            occurrence_count,
            rank: i + 1,
        })
        .collect())
}

pub fn popularity_to_tsv(entries: &[PopularityEntry]) -> String {
    let mut out = String::from("rank\ttemplate_id\tcount\n");
    for e in entries {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            e.rank, e.template_id, e.occurrence_count
        ));
    }
    out
}

/// Template ids present in the top `k` of both rankings.
pub fn cross_platform_overlap(
    a: &[PopularityEntry],
    b: &[PopularityEntry],
    k: usize,
) -> BTreeSet<String> {
    let top = |entries: &[PopularityEntry]| -> BTreeSet<String> {
        let mut sorted: Vec<&PopularityEntry> = entries.iter().collect();
        sorted.sort_by_key(|e| e.rank);
        sorted
            .into_iter()
            .take(k)
            .map(|e| e.template_id.clone())
            .collect()
    };
    top(a).intersection(&top(b)).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mir_truncates() {
        assert_eq!(Mir::truncated(392, 2243).to_string(), "0.17");
        assert_eq!(Mir::truncated(237, 1414).to_string(), "0.16");
        assert_eq!(Mir::truncated(3, 177).to_string(), "0.01");
        assert_eq!(Mir::truncated(0, 0).to_string(), "0.00");
        assert_eq!(Mir::truncated(5, 5).to_string(), "1.00");
    }

    fn post(id: &str, platform: Platform, community: &str) -> CanonicalPost {
        CanonicalPost {
            post_id: id.into(),
            platform,
            community: community.into(),
            author: String::new(),
            created_utc: "2023-07-01T00:00:00Z".into(),
            image_ref: None,
            text: String::new(),
            engagement: 0,
            nsfw: false,
        }
    }

    fn matched(post: &CanonicalPost, template: &str, is_meme: bool) -> MatchRecord {
        MatchRecord {
            post_id: post.post_id.clone(),
            item_id: post.post_id.clone(),
            platform: post.platform,
            community: post.community.clone(),
            template_id: template.into(),
            score: if is_meme { 0.9 } else { 0.1 },
            is_meme,
            threshold: 0.6,
        }
    }

    #[test]
    fn stats_rows_and_totals() {
        let posts = vec![
            post("r1", Platform::Reddit, "r/meme"),
            post("r2", Platform::Reddit, "r/meme"),
            post("r3", Platform::Reddit, "r/HistoryMemes"),
            post("d1", Platform::Discord, "TheDungeon"),
        ];
        let matches = vec![
            matched(&posts[0], "A", true),
            matched(&posts[1], "B", false),
            matched(&posts[3], "A", true),
        ];
        let rows = community_stats(&posts, &matches).unwrap();
        let view: Vec<_> = rows
            .iter()
            .map(|r| {
                (
                    r.platform,
                    r.community.as_str(),
                    r.posts,
                    r.image_posts,
                    r.meme_posts,
                    r.mir.to_string(),
                )
            })
            .collect();
        assert_eq!(
            view,
            [
                (
                    Platform::Reddit,
                    "r/HistoryMemes",
                    1,
                    0,
                    0,
                    "0.00".to_owned()
                ),
                (Platform::Reddit, "r/meme", 2, 2, 1, "0.50".to_owned()),
                (Platform::Reddit, "Total", 3, 2, 1, "0.50".to_owned()),
                (Platform::Discord, "TheDungeon", 1, 1, 1, "1.00".to_owned()),
                (Platform::Discord, "Total", 1, 1, 1, "1.00".to_owned()),
            ]
        );
        assert!(stats_to_tsv(&rows).starts_with(
            "platform\tcommunity\t#P\t#IP\t#MP\t#MIR\nreddit\tr/HistoryMemes\t1\t0\t0\t0.00\n"
        ));
    }

    fn memes(counts: &[(&str, usize)], platform: Platform) -> Vec<MatchRecord> {
        let mut out = Vec::new();
        for (template, n) in counts {
            for i in 0..*n {
                let p = post(&format!("{template}-{i}"), platform, "c");
                out.push(matched(&p, template, true));
            }
        }
        out
    }

    #[test]
    fn popularity_ranking() {
        let m = memes(
            &[("Afraid-To-Ask-Andy", 3), ("Drake-Hotline-Bling", 5)],
            Platform::Reddit,
        );
        let ranked = popularity(&m, Platform::Reddit, 2).unwrap();
        assert_eq!(ranked[0].template_id, "Drake-Hotline-Bling");
        assert_eq!((ranked[0].rank, ranked[0].occurrence_count), (1, 5));
        assert_eq!((ranked[1].rank, ranked[1].occurrence_count), (2, 3));
        assert!(popularity(&m, Platform::Discord, 2).unwrap().is_empty());
        assert!(matches!(
            popularity(&m, Platform::Reddit, 0),
            Err(Error::Parameter(_))
        ));

        let tie = memes(&[("B", 2), ("A", 2)], Platform::Reddit);
        let ranked = popularity(&tie, Platform::Reddit, 5).unwrap();
        assert_eq!(ranked[0].template_id, "A");
        assert_eq!(ranked[1].rank, 2);
        assert_eq!(
            popularity_to_tsv(&ranked),
            "rank\ttemplate_id\tcount\n1\tA\t2\n2\tB\t2\n"
        );
    }

    #[test]
    fn non_memes_do_not_count() {
        let p = post("x", Platform::Reddit, "c");
        let m = [matched(&p, "A", false)];
        assert!(popularity(&m, Platform::Reddit, 3).unwrap().is_empty());
    }

    fn ranking(ids: &[&str]) -> Vec<PopularityEntry> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| PopularityEntry {
                template_id: (*id).into(),
                platform: Platform::Reddit,
                occurrence_count: 100 - i,
                rank: i + 1,
            })
            .collect()
    }

    #[test]
    fn overlap() {
        let reddit = ranking(&[
            "Drake-Hotline-Bling",
            "Afraid-To-Ask-Andy",
            "Press-button-hard-choice",
            "undertaker",
            "X",
        ]);
        let discord = ranking(&[
            "Drake-Hotline-Bling",
            "undertaker",
            "Y",
            "Afraid-To-Ask-Andy",
            "Press-button-hard-choice",
        ]);
        assert_eq!(cross_platform_overlap(&reddit, &discord, 5).len(), 4);
        assert_eq!(cross_platform_overlap(&reddit, &reddit, 5).len(), 5);
        assert_eq!(cross_platform_overlap(&reddit, &reddit, 50).len(), 5);
        assert!(cross_platform_overlap(&reddit, &ranking(&["Q", "R"]), 5).is_empty());
        assert_eq!(cross_platform_overlap(&reddit, &discord, 2).len(), 1);
    }

    proptest! {
        #[test]
        fn ranks_ignore_match_order(
            counts in proptest::collection::vec(0usize..6, 1..8),
            seed in any::<u64>(),
        ) {
            let names: Vec<String> = (0..counts.len()).map(|i| format!("T{i}")).collect();
            let pairs: Vec<(&str, usize)> = names.iter().map(String::as_str).zip(counts.iter().copied()).collect();
            let m = memes(&pairs, Platform::Discord);
            let mut shuffled = m.clone();
            use rand::{seq::SliceRandom, SeedableRng};
            shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
            prop_assert_eq!(
                popularity(&m, Platform::Discord, 10).unwrap(),
                popularity(&shuffled, Platform::Discord, 10).unwrap()
            );
        }

        #[test]
        fn mir_matches_float_floor(ip in 1usize..100_000, frac in 0.0f64..=1.0) {
            let mp = (ip as f64 * frac) as usize;
            let mir = Mir::truncated(mp, ip);
            prop_assert!(mir.hundredths() as usize * ip <= mp * 100);
            prop_assert!((mir.hundredths() as usize + 1) * ip > mp * 100);
        }
    }
}
