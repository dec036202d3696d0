use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use groupsynth::evaluation::{cluster_affinity, score_frames, GroupPartition};
use groupsynth::imaging::{project_scene, sample_camera};
use groupsynth::io::annotations::{build_record, read_annotations, read_scenes, write_annotations, write_scenes};
use groupsynth::io::config::{load_config, RunConfig};
use groupsynth::io::fixture::generate_fixture_pool;
use groupsynth::io::grouping::{load_affinity_csv, read_frames, EvaluationReport, Frame};
use groupsynth::io::pool::{load_pool, save_pool};
use groupsynth::io::stats::{manifest_from_records, occlusion_report, split_table, write_manifest};
use groupsynth::io::{write_atomic, write_json, DataError, SCHEMA_VERSION};
use groupsynth::synthesis::{derive_seed, summarize_batch, synthesize_batch};

#[derive(Debug, Parser)]
#[command(name = "groupsynth", version, about = "Synthesize conversational-group scenes, annotate them and score groupings")]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// TOML run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for batch synthesis (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic group pool CSV.
    Fixture {
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate scenes from a group pool.
    Synthesize {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Number of scenes; overrides `count` in the config.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Project scenes through sampled cameras into annotation records.
    Project {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-scene individual and group occlusion rates.
    Occlusion {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted groups against ground truth.
    Evaluate {
        /// Grouping or annotation file with the true groups.
        #[arg(long)]
        gt: PathBuf,
        /// Grouping or annotation file with predicted groups.
        #[arg(long, conflicts_with = "affinity", required_unless_present = "affinity")]
        pred: Option<PathBuf>,
        /// Affinity CSV per frame as FRAME=PATH, or PATH to use the file stem as frame id.
        #[arg(long, num_args = 1..)]
        affinity: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dataset manifest, histograms and a per-split count table.
    Stats {
        /// Annotation files as SPLIT=PATH, or PATH for split `all`.
        #[arg(required = true)]
        inputs: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Self { code: e.exit_code(), message: e.to_string() }
    }
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure { code: 1, message: e.to_string() }
}

/// Splits `NAME=PATH`; a bare path yields `default` (or its file stem).
fn named_path(arg: &str, default: Option<&str>) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            let name = default.map(str::to_string).unwrap_or_else(|| {
                path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| arg.to_string())
            });
            (name, path)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Fixture { out } => {
            let pool = generate_fixture_pool(&cfg.fixture, cli.seed)?;
            save_pool(&pool, &out)?;
            println!("wrote {} groups in {} scenes to {}", pool.group_count(), pool.scenes.len(), out.display());
        }
        Command::Synthesize { pool, out, count } => {
            let pool = load_pool(&pool, cfg.scene.placement.distance_mode)?;
            let scenes = synthesize_batch(&pool, &cfg.scene, count.unwrap_or(cfg.count), cli.seed, cli.workers)
                .map_err(invalid)?;
            write_scenes(&scenes, &out)?;
            let s = summarize_batch(&scenes);
            println!(
                "wrote {} scenes ({} groups, {} persons) to {}; {} scenes fully feasible, {} groups flagged",
                s.scenes,
                s.groups,
                s.persons,
                out.display(),
                s.fully_converged_scenes,
                s.non_converged_groups
            );
        }
        Command::Project { scenes, out } => {
            let scenes = read_scenes(&scenes)?;
            let records = scenes
                .iter()
                .enumerate()
                .map(|(k, scene)| {
                    let camera = sample_camera(&cfg.camera, derive_seed(cli.seed, k as u64)).map_err(invalid)?;
                    let boxes = project_scene(scene, &camera)
                        .map_err(|e| invalid(format!("scene `{}`: {e}", scene.scene_id)))?;
                    Ok(build_record(scene, &camera, &boxes))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            write_annotations(&records, &out)?;
            println!("wrote {} annotation records to {}", records.len(), out.display());
        }
        Command::Occlusion { annotations, out } => {
            let report = occlusion_report(&read_annotations(&annotations)?)?;
            write_json(&out, &report)?;
            println!("wrote occlusion rates for {} scenes to {}", report.scenes.len(), out.display());
        }
        Command::Evaluate { gt, pred, affinity, out } => {
            let eval = cfg.evaluation;
            let gt = read_frames(&gt)?;
            let (pred, clustered) = match pred {
                Some(path) => (read_frames(&path)?, false),
                None => {
                    let frames = affinity
                        .iter()
                        .map(|arg| {
                            let (frame_id, path) = named_path(arg, None);
                            let m = load_affinity_csv(&path)?;
                            let groups =
                                cluster_affinity(&m, eval.link_threshold, eval.graph_cut_rate).map_err(invalid)?;
                            Ok(Frame { frame_id, groups })
                        })
                        .collect::<Result<Vec<_>, Failure>>()?;
                    (frames, true)
                }
            };
            let report = evaluate(&gt, &pred, &eval, clustered)?;
            write_json(&out, &report)?;
            let o = &report.overall;
            println!(
                "F1@{:.4} = {:.4} (precision {:.4}, recall {:.4}) over {} frames",
                o.tolerance,
                o.f1,
                o.precision,
                o.recall,
                report.frames.len()
            );
        }
        Command::Stats { inputs, out } => {
            let mut splits: Vec<(String, Vec<PathBuf>)> = Vec::new();
            for arg in &inputs {
                let (name, path) = named_path(arg, Some("all"));
                match splits.iter_mut().find(|(n, _)| *n == name) {
                    Some((_, paths)) => paths.push(path),
                    None => splits.push((name, vec![path])),
                }
            }
            let mut manifests = Vec::with_capacity(splits.len());
            for (name, paths) in &splits {
                let mut records = Vec::new();
                for p in paths {
                    records.extend(read_annotations(p)?);
                }
                let manifest = manifest_from_records(name, &records)?;
                write_manifest(&manifest, out.join(name))?;
                println!(
                    "{name}: {} scenes, {} visible persons, {} groups",
                    manifest.scene_count, manifest.person_count, manifest.group_count
                );
                manifests.push(manifest);
            }
            write_atomic(&out.join("splits.csv"), &split_table(&manifests)?)?;
        }
    }
    Ok(())
}

fn evaluate(
    gt: &[Frame],
    pred: &[Frame],
    eval: &groupsynth::evaluation::EvaluationConfig,
    clustered: bool,
) -> Result<EvaluationReport, Failure> {
    let empty = GroupPartition::default();
    let mut frames = Vec::with_capacity(gt.len());
    for g in gt {
        let p = pred.iter().find(|p| p.frame_id == g.frame_id).map_or(&empty, |p| &p.groups);
        frames.push((g.frame_id.as_str(), &g.groups, p));
    }
    if let Some(extra) = pred.iter().find(|p| !gt.iter().any(|g| g.frame_id == p.frame_id)) {
        return Err(invalid(format!("predicted frame `{}` has no ground truth", extra.frame_id)));
    }
    let (overall, frames) = score_frames(frames, eval.tolerance, eval.drop_singletons).map_err(invalid)?;
    Ok(EvaluationReport {
        schema_version: SCHEMA_VERSION,
        link_threshold: clustered.then_some(eval.link_threshold),
        graph_cut_rate: clustered.then_some(eval.graph_cut_rate),
        drop_singletons: eval.drop_singletons,
        overall,
        frames,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are validation failures; exit status 2 is reserved for I/O.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
