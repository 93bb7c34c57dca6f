#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use memelens::analytics::{
    community_stats, cross_platform_overlap, popularity, popularity_to_tsv, stats_to_tsv,
};
use memelens::embedding::{read_image_manifest, write_embedding_file};
use memelens::index::load_index;
use memelens::ingest::{
    load_to_lake, parse_discord_export, parse_reddit_export, read_lake, transform_filter_images,
};
use memelens::kg::{context_card, parse_kg_tsv};
use memelens::pipeline::{run_classification, write_matches};
use memelens::{reference_embed, EmbeddingBatch, Platform};

pub const DIM: usize = 768;
pub const DISLOYAL: &str = "imgflipmeme:112006116/Disloyal-Boyfriend";

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// The three exports making up the end-to-end lake.
pub const EXPORTS: [(Platform, &str, &str); 3] = [
    (Platform::Reddit, "r/meme", "reddit_meme.jsonl"),
    (
        Platform::Reddit,
        "r/HistoryMemes",
        "reddit_historymemes.jsonl",
    ),
    (Platform::Discord, "TheDungeon", "discord_thedungeon.jsonl"),
];

pub fn embed_batch(entries: impl IntoIterator<Item = (String, PathBuf)>) -> EmbeddingBatch {
    let mut batch = EmbeddingBatch::new(DIM).unwrap();
    for (id, path) in entries {
        let bytes = fs::read(&path).unwrap();
        batch
            .push(id, reference_embed(&bytes, DIM).unwrap())
            .unwrap();
    }
    batch
}

/// Ingest every export into `lake`.
pub fn ingest_fixture_lake(lake: &Path) -> usize {
    let e2e = fixtures().join("e2e");
    let mut record_errors = 0;
    for (platform, community, file) in EXPORTS {
        let text = fs::read_to_string(e2e.join(file)).unwrap();
        let (posts, errors) = match platform {
            Platform::Reddit => parse_reddit_export(text.lines(), community),
            Platform::Discord => parse_discord_export(text.lines(), community),
        };
        let filtered = transform_filter_images(&posts, &e2e.join("images"));
        record_errors += errors.len() + filtered.errors.len();
        load_to_lake(&posts, &filtered.images, lake).unwrap();
    }
    record_errors
}

/// Every artifact of the end-to-end run, keyed by golden file name.
pub fn run_end_to_end(work: &Path) -> Vec<(&'static str, String)> {
    let e2e = fixtures().join("e2e");
    let lake_root = work.join("lake");
    ingest_fixture_lake(&lake_root);
    let lake = read_lake(&lake_root).unwrap();

    let templates = embed_batch(
        read_image_manifest(&e2e.join("templates.tsv"))
            .unwrap()
            .into_iter()
            .map(|e| (e.item_id, e.path)),
    );
    let templates_path = work.join("templates.bin");
    write_embedding_file(&templates, &templates_path).unwrap();
    let index = load_index(&templates_path, &e2e.join("template_map.tsv")).unwrap();

    let images = embed_batch(
        lake.index
            .images
            .iter()
            .map(|o| (o.image_id.clone(), lake.image_path(o))),
    );
    let images_path = work.join("images.bin");
    write_embedding_file(&images, &images_path).unwrap();

    let matches = run_classification(&lake_root, &images_path, &index, 0.6).unwrap();
    let matches_path = work.join("matches.jsonl");
    write_matches(&matches, &matches_path).unwrap();

    let stats = community_stats(&lake.posts, &matches).unwrap();
    let reddit = popularity(&matches, Platform::Reddit, 5).unwrap();
    let discord = popularity(&matches, Platform::Discord, 5).unwrap();
    let overlap: Vec<String> = cross_platform_overlap(&reddit, &discord, 5)
        .into_iter()
        .collect();

    let kg_text = fs::read_to_string(fixtures().join("kg/disloyal_boyfriend.tsv")).unwrap();
    let kg = parse_kg_tsv(&kg_text).unwrap();
    let unlinked: String = kg_text
        .lines()
        .filter(|l| !l.contains("\tframe_of\t"))
        .map(|l| format!("{l}\n"))
        .collect();
    let kg_unlinked = parse_kg_tsv(&unlinked).unwrap();
    let card = |kg| {
        let mut s = serde_json::to_string_pretty(&context_card(kg, DISLOYAL).unwrap()).unwrap();
        s.push('\n');
        s
    };

    vec![
        (
            "manifest.json",
            fs::read_to_string(lake_root.join("manifest.json")).unwrap(),
        ),
        ("matches.jsonl", fs::read_to_string(&matches_path).unwrap()),
        ("stats.tsv", stats_to_tsv(&stats)),
        ("popularity_reddit.tsv", popularity_to_tsv(&reddit)),
        ("popularity_discord.tsv", popularity_to_tsv(&discord)),
        (
            "overlap.json",
            format!("{}\n", serde_json::to_string_pretty(&overlap).unwrap()),
        ),
        ("card.json", card(&kg)),
        ("card_unlinked.json", card(&kg_unlinked)),
    ]
}

/// Compare against `tests/golden/<name>`; with `MEMELENS_UPDATE_GOLDENS=1`
/// the golden is rewritten instead.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_dir().join(name);
    if std::env::var_os("MEMELENS_UPDATE_GOLDENS").is_some() {
        fs::create_dir_all(golden_dir()).unwrap();
        fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!(
            "{name} differs from golden:\n--- expected\n{expected}\n--- actual\n{actual}"
        ))
    }
}
