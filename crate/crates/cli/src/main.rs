use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::TypedValueParser;
use clap::{Args, Parser, Subcommand};

use memelens::analytics::{
    community_stats, cross_platform_overlap, popularity, popularity_to_tsv, stats_to_tsv,
};
use memelens::embedding::{
    read_image_manifest, reference_embed, write_embedding_file, write_image_manifest,
    ManifestEntry, DEFAULT_DIM,
};
use memelens::eval::{
    format_threshold, parse_grid, parse_sweep_tsv, read_labels, select_threshold, sweep,
    sweep_to_tsv, DEFAULT_GRID,
};
use memelens::index::load_index;
use memelens::ingest::{
    load_to_lake, parse_discord_export, parse_reddit_export, read_lake, transform_filter_images,
};
use memelens::kg::{context_card, load_kg_tsv};
use memelens::pipeline::{read_matches, run_classification, write_matches};
use memelens::{EmbeddingBatch, Error, Platform};

/// Ground social-media image posts in a meme knowledge graph.
#[derive(Debug, Parser)]
#[command(name = "memelens", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a platform export, keep jpg/jpeg/png images and load the lake.
    Ingest(IngestArgs),
    /// Embed images with the deterministic hash-based reference embedder.
    EmbedRef(EmbedRefArgs),
    /// Load template exemplars and report what the index holds.
    IndexBuildCheck(IndexArgs),
    /// Match every image post in a lake against the template index.
    Classify(ClassifyArgs),
    /// Precision/recall sweep of labeled posts over a threshold grid.
    Sweep(SweepArgs),
    /// Pick the highest-recall threshold meeting a precision floor.
    SelectThreshold(SelectArgs),
    /// Per-community prevalence, template popularity and platform overlap.
    Report(ReportArgs),
    /// Print the knowledge-graph context card for a template as JSON.
    KgContext(KgArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Source platform of the export.
    #[arg(long, value_parser = parse_platform)]
    platform: Platform,
    /// Subreddit or channel name the export came from.
    #[arg(long)]
    community: String,
    /// JSONL export, one record per line.
    #[arg(long, value_parser = existing_file)]
    input: PathBuf,
    /// Directory holding the referenced image files [default: the export's directory].
    #[arg(long, value_parser = existing_dir)]
    images: Option<PathBuf>,
    /// Data lake root (created if absent).
    #[arg(long)]
    lake: PathBuf,
}

#[derive(Debug, Args)]
struct IndexArgs {
    /// EMB1 file of template exemplar embeddings.
    #[arg(long, value_parser = existing_file)]
    templates: PathBuf,
    /// TSV mapping exemplar_item_id to template_id.
    #[arg(long, value_parser = existing_file)]
    template_map: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["manifest", "lake"]))]
struct EmbedRefArgs {
    /// item_id<TAB>path manifest of images to embed.
    #[arg(long, value_parser = existing_file)]
    manifest: Option<PathBuf>,
    /// Embed every stored image of this lake instead of a manifest.
    #[arg(long, value_parser = existing_dir)]
    lake: Option<PathBuf>,
    /// Also write the lake's image manifest here (with --lake).
    #[arg(long, requires = "lake")]
    manifest_out: Option<PathBuf>,
    /// Embedding dimension.
    #[arg(long, default_value_t = DEFAULT_DIM, value_parser = clap::value_parser!(u32).range(1..).map(|d| d as usize))]
    dim: usize,
    /// Output EMB1 file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Data lake root written by `ingest`.
    #[arg(long, value_parser = existing_dir)]
    lake: PathBuf,
    /// EMB1 embeddings of the lake's images, keyed by image id.
    #[arg(long, value_parser = existing_file)]
    embeddings: PathBuf,
    #[command(flatten)]
    index: IndexArgs,
    /// Cosine similarity at or above which a post is a meme (fraction, not percent).
    #[arg(long, default_value = "0.60", value_parser = parse_fraction)]
    threshold: f64,
    /// Output matches JSONL.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// post_id<TAB>0|1 human labels.
    #[arg(long, value_parser = existing_file)]
    labels: PathBuf,
    /// Matches JSONL supplying each post's best score.
    #[arg(long, value_parser = existing_file)]
    matches: PathBuf,
    /// Threshold grid as start:end:step (fractions).
    #[arg(long, default_value = DEFAULT_GRID)]
    grid: String,
    /// Output sweep TSV [default: standard output].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    /// Sweep TSV as written by `sweep`.
    #[arg(long, value_parser = existing_file)]
    sweep: PathBuf,
    /// Minimum precision a threshold must reach (fraction).
    #[arg(long, default_value = "0.9", value_parser = parse_fraction)]
    min_precision: f64,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Data lake root written by `ingest`.
    #[arg(long, value_parser = existing_dir)]
    lake: PathBuf,
    /// Matches JSONL written by `classify`.
    #[arg(long, value_parser = existing_file)]
    matches: PathBuf,
    /// Directory for stats.tsv, popularity_<platform>.tsv and overlap.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Number of templates in each popularity ranking and in the overlap.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..).map(|n| n as usize))]
    top_n: usize,
}

#[derive(Debug, Args)]
struct KgArgs {
    /// Edge-list TSV with columns id, node1, label, node2.
    #[arg(long, value_parser = existing_file)]
    kg: PathBuf,
    /// Template node id.
    #[arg(long)]
    template: String,
    /// Write the card here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_platform(s: &str) -> Result<Platform, String> {
    s.parse()
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    if s.contains('%') {
        return Err("give a fraction such as 0.6, not a percentage".into());
    }
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(format!(
            "{v} is outside [0, 1]; give a fraction such as 0.6"
        ));
    }
    Ok(v)
}

fn existing_file(s: &str) -> Result<PathBuf, String> {
    let path = PathBuf::from(s);
    if path.is_file() {
        Ok(path)
    } else {
        Err(format!("{s} is not a readable file"))
    }
}

fn existing_dir(s: &str) -> Result<PathBuf, String> {
    let path = PathBuf::from(s);
    if path.is_dir() {
        Ok(path)
    } else {
        Err(format!("{s} is not a directory"))
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text)
        .map_err(|e| Error::Format(format!("cannot write {}: {e}", path.display())))
}

fn ingest(args: IngestArgs) -> Result<(), Error> {
    let text = read_text(&args.input)?;
    let lines = text.lines();
    let (posts, errors) = match args.platform {
        Platform::Reddit => parse_reddit_export(lines, &args.community),
        Platform::Discord => parse_discord_export(lines, &args.community),
    };
    for e in &errors {
        eprintln!("skipped {e}");
    }
    let images_dir = args
        .images
        .unwrap_or_else(|| args.input.parent().unwrap_or(Path::new(".")).to_path_buf());
    let filtered = transform_filter_images(&posts, &images_dir);
    for e in &filtered.errors {
        eprintln!("image {e}");
    }
    let index = load_to_lake(&posts, &filtered.images, &args.lake)?;
    let manifest = index
        .community(args.platform, &args.community)
        .map(|m| (m.post_count, m.image_post_count))
        .unwrap_or_default();
    eprintln!(
        "{} {}: {} posts, {} image posts, {} record errors, {} images dropped by format",
        args.platform,
        args.community,
        manifest.0,
        manifest.1,
        errors.len(),
        filtered.dropped.total()
    );
    Ok(())
}

fn embed_ref(args: EmbedRefArgs) -> Result<(), Error> {
    let entries = match (&args.manifest, &args.lake) {
        (Some(manifest), _) => read_image_manifest(manifest)?,
        (None, Some(lake_root)) => {
            let lake = read_lake(lake_root)?;
            let entries: Vec<ManifestEntry> = lake
                .index
                .images
                .iter()
                .map(|image| ManifestEntry {
                    item_id: image.image_id.clone(),
                    path: lake.image_path(image),
                })
                .collect();
            if let Some(out) = &args.manifest_out {
                write_image_manifest(&entries, out)?;
            }
            entries
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    let mut batch = EmbeddingBatch::new(args.dim)?;
    for entry in entries {
        let bytes = fs::read(&entry.path)
            .map_err(|e| Error::Embed(format!("{}: {e}", entry.path.display())))?;
        let vector = reference_embed(&bytes, args.dim)
            .map_err(|e| Error::Embed(format!("{}: {e}", entry.item_id)))?;
        batch.push(entry.item_id, vector)?;
    }
    write_embedding_file(&batch, &args.out)?;
    eprintln!(
        "wrote {} embeddings of dim {} to {}",
        batch.len(),
        args.dim,
        args.out.display()
    );
    Ok(())
}

fn index_build_check(args: IndexArgs) -> Result<(), Error> {
    let index = load_index(&args.templates, &args.template_map)?;
    println!("dim\t{}", index.dim());
    println!("templates\t{}", index.template_ids().len());
    println!("exemplars\t{}", index.len());
    Ok(())
}

fn classify(args: ClassifyArgs) -> Result<(), Error> {
    let index = load_index(&args.index.templates, &args.index.template_map)?;
    let records = run_classification(&args.lake, &args.embeddings, &index, args.threshold)?;
    write_matches(&records, &args.out)?;
    let memes = records.iter().filter(|r| r.is_meme).count();
    eprintln!(
        "classified {} image posts at t = {}: {memes} memes",
        records.len(),
        format_threshold(args.threshold)
    );
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), Error> {
    let grid = parse_grid(&args.grid)?;
    let labels = read_labels(&args.labels)?;
    let scores = read_matches(&args.matches)?
        .into_iter()
        .map(|m| (m.post_id, m.score))
        .collect();
    let points = sweep(&labels, &scores, &grid)?;
    let tsv = sweep_to_tsv(&points);
    match &args.out {
        Some(path) => write_text(path, &tsv),
        None => {
            print!("{tsv}");
            Ok(())
        }
    }
}

fn select(args: SelectArgs) -> Result<(), Error> {
    let points = parse_sweep_tsv(&read_text(&args.sweep)?)?;
    let t = select_threshold(&points, args.min_precision)?;
    println!("{}", format_threshold(t));
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Error> {
    let lake = read_lake(&args.lake)?;
    let matches = read_matches(&args.matches)?;
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::Format(format!("cannot create {}: {e}", args.out_dir.display())))?;

    let stats = community_stats(&lake.posts, &matches)?;
    write_text(&args.out_dir.join("stats.tsv"), &stats_to_tsv(&stats))?;

    let reddit = popularity(&matches, Platform::Reddit, args.top_n)?;
    let discord = popularity(&matches, Platform::Discord, args.top_n)?;
    write_text(
        &args.out_dir.join("popularity_reddit.tsv"),
        &popularity_to_tsv(&reddit),
    )?;
    write_text(
        &args.out_dir.join("popularity_discord.tsv"),
        &popularity_to_tsv(&discord),
    )?;

    let overlap: Vec<String> = cross_platform_overlap(&reddit, &discord, args.top_n)
        .into_iter()
        .collect();
    let mut json = serde_json::to_string_pretty(&overlap).expect("string list serializes");
    json.push('\n');
    write_text(&args.out_dir.join("overlap.json"), &json)?;
    eprintln!("wrote report to {}", args.out_dir.display());
    Ok(())
}

fn kg_context(args: KgArgs) -> Result<(), Error> {
    let kg = load_kg_tsv(&args.kg)?;
    let card = context_card(&kg, &args.template)?;
    let mut json = serde_json::to_string_pretty(&card).expect("cards serialize");
    json.push('\n');
    match &args.out {
        Some(path) => write_text(path, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::EmbedRef(args) => embed_ref(args),
        Command::IndexBuildCheck(args) => index_build_check(args),
        Command::Classify(args) => classify(args),
        Command::Sweep(args) => run_sweep(args),
        Command::SelectThreshold(args) => select(args),
        Command::Report(args) => report(args),
        Command::KgContext(args) => kg_context(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
