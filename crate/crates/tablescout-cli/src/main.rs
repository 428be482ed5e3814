//! Command-line front end: single-page detection, batch runs, accuracy
//! evaluation, and synthetic page generation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tablescout::detector::{detect, DetectionReport};
use tablescout::evaluator::{aggregate, builtin_fixture, evaluate_page, GroundTruth, PageEval};
use tablescout::raster;
use tablescout::synth::{self, Block, PageSpec};
use tablescout::{Category, RunConfig};

#[derive(Parser)]
#[command(name = "tablescout", version, about = "Locates tables on scanned document pages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect tables on one page image
    Detect(DetectArgs),
    /// Detect tables on every supported image in a directory
    Batch(BatchArgs),
    /// Score detection reports against ground truth
    Eval(EvalArgs),
    /// Generate synthetic pages with exact ground truth
    Synth(SynthArgs),
}

/// Detection settings shared by `detect` and `batch`. Precedence:
/// built-in defaults, then `--config`, then explicit flags.
#[derive(Args, Clone)]
struct ConfigFlags {
    /// JSON config file; missing fields keep their defaults
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Word-space threshold multiplier, open interval (1, 2)
    #[arg(long, value_name = "F")]
    alpha_ws: Option<f64>,
    /// Line-height threshold multiplier, open interval (1, 1.5)
    #[arg(long, value_name = "F")]
    alpha_lh: Option<f64>,
    /// Binarization window side, odd, at least 3
    #[arg(long, value_name = "PX")]
    bin_window: Option<u32>,
    /// Binarization sensitivity, in (0, 1)
    #[arg(long, value_name = "F")]
    bin_k: Option<f64>,
    /// Binarization dynamic range divisor
    #[arg(long, value_name = "F")]
    bin_r: Option<f64>,
    /// Border band searched for scanner noise, fraction of each dimension
    #[arg(long, value_name = "F")]
    border_margin_frac: Option<f64>,
    /// Dilation structuring element width
    #[arg(long, value_name = "PX")]
    dilate_w: Option<u32>,
    /// Dilation structuring element height
    #[arg(long, value_name = "PX")]
    dilate_h: Option<u32>,
    /// Ink pixels per row below which the row counts as blank
    #[arg(long, value_name = "N")]
    row_noise_floor: Option<u32>,
    /// Blank-row run length separating two text lines
    #[arg(long, value_name = "N")]
    min_blank_rows: Option<u32>,
    /// Minimum blank-column run width counted as a word gap
    #[arg(long, value_name = "PX")]
    min_gap_px: Option<u32>,
    /// Minimum non-text lines a merged region must contain
    #[arg(long, value_name = "N")]
    min_table_lines: Option<usize>,
    /// Consecutive interior text lines tolerated inside a region
    #[arg(long, value_name = "N")]
    max_interior_text_lines: Option<usize>,
    /// Page-height fraction at top and bottom treated as header/footer
    #[arg(long, value_name = "F")]
    header_footer_exclusion_frac: Option<f64>,
    /// Overlap ratio a detection must reach to count as correct
    #[arg(long, value_name = "F")]
    iou_min: Option<f64>,
    /// Print the merged configuration as JSON and exit
    #[arg(long)]
    dump_config: bool,
}

impl ConfigFlags {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        macro_rules! apply {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag { cfg.$($field).+ = v; })*
            };
        }
        apply! {
            alpha_ws => alpha_ws,
            alpha_lh => alpha_lh,
            bin_window => preprocess.bin_window,
            bin_k => preprocess.bin_k,
            bin_r => preprocess.bin_r,
            border_margin_frac => preprocess.border_margin_frac,
            dilate_w => preprocess.dilate_w,
            dilate_h => preprocess.dilate_h,
            row_noise_floor => profile.row_noise_floor,
            min_blank_rows => profile.min_blank_rows,
            min_gap_px => profile.min_gap_px,
            min_table_lines => detector.min_table_lines,
            max_interior_text_lines => detector.max_interior_text_lines,
            header_footer_exclusion_frac => detector.header_footer_exclusion_frac,
            iou_min => iou_min,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct DetectArgs {
    /// Page image (PBM/PGM/PPM)
    image: PathBuf,
    /// Report path; defaults to the image path with a .report.json suffix
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Also write the input with region borders burned in
    #[arg(long, value_name = "FILE")]
    overlay: Option<PathBuf>,
    /// Also write one cropped image per detected region into this directory
    #[arg(long, value_name = "DIR")]
    crops: Option<PathBuf>,
    #[command(flatten)]
    flags: ConfigFlags,
}

#[derive(Args)]
struct BatchArgs {
    /// Directory of page images
    dir: PathBuf,
    /// Where reports and the manifest go; defaults to the input directory
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Worker threads
    #[arg(long, env = "TABLESCOUT_JOBS", default_value_t = 1, value_name = "N")]
    jobs: usize,
    #[command(flatten)]
    flags: ConfigFlags,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of *.report.json files
    #[arg(long, value_name = "DIR")]
    reports: Option<PathBuf>,
    /// Directory of *.truth.json files
    #[arg(long, value_name = "DIR")]
    truth: Option<PathBuf>,
    /// Overlap ratio a detection must reach to count as correct
    #[arg(long, default_value_t = 0.5, value_name = "F")]
    iou_min: f64,
    /// Summary path; defaults to eval_summary.json in the reports directory
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Run a built-in count fixture instead of reading files
    #[arg(long, value_name = "NAME", conflicts_with_all = ["reports", "truth"])]
    fixture: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// Page spec as JSON
    #[arg(long, value_name = "FILE", conflicts_with_all = ["suite", "table_type"])]
    spec: Option<PathBuf>,
    /// Named corpus: "desk" (90 pages) or "control" (10 table-free pages)
    #[arg(long, value_name = "NAME", conflicts_with = "table_type")]
    suite: Option<String>,
    /// One page with a single table of this category (A, B or C)
    #[arg(long = "type", value_name = "CAT")]
    table_type: Option<Category>,
    /// Seed for --type pages
    #[arg(long, default_value_t = 0, value_name = "N")]
    seed: u64,
    /// Table rows for --type pages
    #[arg(long, default_value_t = 4, value_name = "N")]
    rows: u32,
    /// Table columns for --type pages
    #[arg(long, default_value_t = 3, value_name = "N")]
    cols: u32,
    /// Basename for single-page output; defaults to the spec stem or
    /// synth_<type>_<seed>
    #[arg(long, value_name = "NAME")]
    name: Option<String>,
    /// Output directory
    #[arg(long, default_value = ".", value_name = "DIR")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run() -> anyhow::Result<u8> {
    match Cli::parse().command {
        Command::Detect(args) => cmd_detect(args),
        Command::Batch(args) => cmd_batch(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn page_id_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_detect(args: DetectArgs) -> anyhow::Result<u8> {
    let cfg = args.flags.resolve()?;
    if args.flags.dump_config {
        print!("{}", cfg.to_json_pretty());
        return Ok(0);
    }
    let gray = raster::load_gray(&args.image)?;
    let page_id = page_id_of(&args.image);
    let report = detect(&gray, &page_id, &cfg)?;

    let report_path = args
        .report
        .unwrap_or_else(|| args.image.with_extension("report.json"));
    fs::write(&report_path, report.to_json_pretty())
        .with_context(|| format!("writing {}", report_path.display()))?;

    if let Some(path) = &args.overlay {
        let pairs: Vec<_> = report.regions.iter().map(|r| (r.rect, r.category)).collect();
        let overlay = raster::render_overlay(&gray, &pairs)?;
        raster::save_pgm(path, &overlay)?;
    }
    if let Some(dir) = &args.crops {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, region) in report.regions.iter().enumerate() {
            let cut = raster::crop_gray(&gray, region.rect)?;
            let name = format!("{page_id}_region_{i}_{}.pgm", region.category);
            raster::save_pgm(dir.join(name), &cut)?;
        }
    }

    for region in &report.regions {
        println!(
            "{}: {} at x={} y={} w={} h={}",
            page_id, region.category, region.rect.x, region.rect.y, region.rect.w, region.rect.h
        );
    }
    if let Some(diag) = &report.diagnostic {
        eprintln!("{page_id}: no usable text line ({diag})");
        return Ok(2);
    }
    println!("{}: {} region(s), report {}", page_id, report.regions.len(), report_path.display());
    Ok(0)
}

#[derive(Serialize)]
struct Manifest {
    schema: u32,
    config_fingerprint: String,
    wall_time_ms: u64,
    pages: Vec<ManifestPage>,
}

#[derive(Clone, Serialize)]
struct ManifestPage {
    page_id: String,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    regions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

const IMAGE_EXTENSIONS: [&str; 4] = ["pbm", "pgm", "ppm", "pnm"];

fn cmd_batch(args: BatchArgs) -> anyhow::Result<u8> {
    let cfg = args.flags.resolve()?;
    if args.flags.dump_config {
        print!("{}", cfg.to_json_pretty());
        return Ok(0);
    }
    let out_dir = args.out_dir.clone().unwrap_or_else(|| args.dir.clone());
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let mut files: Vec<PathBuf> = fs::read_dir(&args.dir)
        .with_context(|| format!("reading {}", args.dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map(|e| IMAGE_EXTENSIONS.contains(&e.to_string_lossy().to_lowercase().as_str()))
                .unwrap_or(false)
        })
        .collect();
    files.sort();

    let start = Instant::now();
    let jobs = args.jobs.max(1);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<ManifestPage>>> = Mutex::new(vec![None; files.len()]);

    std::thread::scope(|scope| {
        for _ in 0..jobs.min(files.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= files.len() {
                    break;
                }
                let outcome = process_page(&files[i], &out_dir, &cfg);
                results.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    let pages: Vec<ManifestPage> = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|p| p.expect("every page processed"))
        .collect();
    let failures = pages.iter().filter(|p| p.status == "error").count();
    let manifest = Manifest {
        schema: 1,
        config_fingerprint: cfg.fingerprint(),
        wall_time_ms: start.elapsed().as_millis() as u64,
        pages,
    };
    let manifest_path = out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&manifest_path, text)
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    println!(
        "{} page(s), {} failure(s), manifest {}",
        manifest.pages.len(),
        failures,
        manifest_path.display()
    );
    Ok(0)
}

fn process_page(path: &Path, out_dir: &Path, cfg: &RunConfig) -> ManifestPage {
    let page_id = page_id_of(path);
    let attempt = (|| -> anyhow::Result<DetectionReport> {
        let gray = raster::load_gray(path)?;
        let report = detect(&gray, &page_id, cfg)?;
        let report_path = out_dir.join(format!("{page_id}.report.json"));
        fs::write(&report_path, report.to_json_pretty())
            .with_context(|| format!("writing {}", report_path.display()))?;
        Ok(report)
    })();
    match attempt {
        Ok(report) => ManifestPage {
            page_id,
            status: "ok".into(),
            regions: Some(report.regions.len()),
            diagnostic: report.diagnostic,
            message: None,
        },
        Err(e) => ManifestPage {
            page_id,
            status: "error".into(),
            regions: None,
            diagnostic: None,
            message: Some(format!("{e:#}")),
        },
    }
}

fn files_with_suffix(dir: &Path, suffix: &str) -> anyhow::Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let name = match path.file_name() {
            Some(n) => n.to_string_lossy().into_owned(),
            None => continue,
        };
        if let Some(stem) = name.strip_suffix(suffix) {
            out.push((stem.to_string(), path));
        }
    }
    out.sort();
    Ok(out)
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<u8> {
    if let Some(name) = &args.fixture {
        let summary = builtin_fixture(name)
            .ok_or_else(|| anyhow::anyhow!("unknown fixture {name:?}, try \"table1\""))?;
        print!("{}", summary.render_table());
        if let Some(out) = &args.out {
            fs::write(out, summary.to_json_pretty())
                .with_context(|| format!("writing {}", out.display()))?;
        }
        return Ok(0);
    }

    let (reports_dir, truth_dir) = match (&args.reports, &args.truth) {
        (Some(r), Some(t)) => (r, t),
        _ => bail!("eval needs --reports and --truth directories (or --fixture)"),
    };
    let reports = files_with_suffix(reports_dir, ".report.json")?;
    let truths = files_with_suffix(truth_dir, ".truth.json")?;

    let mut page_ids: Vec<String> = reports
        .iter()
        .map(|(id, _)| id.clone())
        .chain(truths.iter().map(|(id, _)| id.clone()))
        .collect();
    page_ids.sort();
    page_ids.dedup();

    let mut pages: Vec<PageEval> = Vec::new();
    let mut errors: Vec<String> = Vec::new();
    for page_id in &page_ids {
        let report_path = reports.iter().find(|(id, _)| id == page_id).map(|(_, p)| p);
        let truth_path = truths.iter().find(|(id, _)| id == page_id).map(|(_, p)| p);
        match (report_path, truth_path) {
            (Some(report_path), Some(truth_path)) => {
                let report = DetectionReport::from_json(&fs::read_to_string(report_path)?)?;
                let truth = GroundTruth::from_json(&fs::read_to_string(truth_path)?)?;
                pages.push(evaluate_page(page_id, &report.regions, &truth, args.iou_min)?);
            }
            (Some(_), None) => {
                errors.push(format!("{page_id}: missing truth file"));
            }
            (None, Some(truth_path)) => {
                let truth = GroundTruth::from_json(&fs::read_to_string(truth_path)?)?;
                errors.push(format!("{page_id}: missing report file"));
                pages.push(PageEval {
                    page_id: page_id.clone(),
                    entries: truth
                        .entries
                        .iter()
                        .map(|e| (e.category, false, false))
                        .collect(),
                    false_positives: 0,
                });
            }
            (None, None) => unreachable!("page id came from one of the listings"),
        }
    }

    let summary = aggregate(&pages, args.iou_min, errors)?;
    print!("{}", summary.render_table());
    for err in &summary.errors {
        eprintln!("evaluation error: {err}");
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| reports_dir.join("eval_summary.json"));
    fs::write(&out, summary.to_json_pretty())
        .with_context(|| format!("writing {}", out.display()))?;
    println!("summary {}", out.display());
    Ok(0)
}

fn single_table_spec(category: Category, seed: u64, rows: u32, cols: u32) -> PageSpec {
    let table = match category {
        Category::A => Block::TableA { rows, cols, rule_px: 2 },
        Category::B => Block::TableB { rows, cols, rule_px: 2 },
        Category::C => Block::TableC { rows, cols, col_gap_px: 40 },
    };
    PageSpec {
        seed,
        blocks: vec![
            Block::Paragraph { lines: 4 },
            table,
            Block::Paragraph { lines: 3 },
        ],
        ..PageSpec::default()
    }
}

fn write_page(out_dir: &Path, name: &str, spec: &PageSpec) -> anyhow::Result<()> {
    let page = synth::generate(name, spec)?;
    raster::save_pgm(out_dir.join(format!("{name}.pgm")), &page.image)?;
    let truth_path = out_dir.join(format!("{name}.truth.json"));
    fs::write(&truth_path, page.truth.to_json_pretty())
        .with_context(|| format!("writing {}", truth_path.display()))?;
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<u8> {
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let named_specs: Vec<(String, PageSpec)> = if let Some(path) = &args.spec {
        let spec = PageSpec::from_json(
            &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        )?;
        let name = args.name.clone().unwrap_or_else(|| page_id_of(path));
        vec![(name, spec)]
    } else if let Some(suite) = &args.suite {
        match suite.as_str() {
            "desk" => synth::desk_suite(),
            "control" => synth::control_suite(),
            other => bail!("unknown suite {other:?}, try \"desk\" or \"control\""),
        }
    } else if let Some(category) = args.table_type {
        let name = args
            .name
            .clone()
            .unwrap_or_else(|| format!("synth_{}_{}", category.to_string().to_lowercase(), args.seed));
        vec![(name, single_table_spec(category, args.seed, args.rows, args.cols))]
    } else {
        bail!("synth needs one of --spec, --suite or --type");
    };

    for (name, spec) in &named_specs {
        write_page(&args.out_dir, name, spec)?;
    }
    println!("wrote {} page(s) to {}", named_specs.len(), args.out_dir.display());
    Ok(0)
}
