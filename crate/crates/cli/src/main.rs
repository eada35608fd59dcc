use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use aocr::assembly::{assemble, to_json};
use aocr::classmap::ClassMap;
use aocr::config::PipelineConfig;
use aocr::dataset::{build_dataset, discover_corpus, load_samples, CorpusPage};
use aocr::debug::emit_segmentation;
use aocr::evaluation::{bench, evaluate_corpus};
use aocr::metrics::{levenshtein, normalize_whitespace, EvalReport};
use aocr::pipeline::{recognize_page, segment_page};
use aocr::raster::load_gray;
use aocr::recognition::{fit, load_model, save_model, Classifier};

#[derive(Parser)]
#[command(name = "aocr", version, about = "Segmentation-first OCR for printed Arabic")]
struct Cli {
    /// key=value config file; falls back to $OCR_CONFIG.
    #[arg(long, global = true, env = "OCR_CONFIG")]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set segmentation.baseline_band=2.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Page-level worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write intermediate crops, overlays and traces.
    #[arg(long, global = true)]
    debug: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recognize page images into UTF-8 text files.
    Ocr {
        images: Vec<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-character JSON.
        #[arg(long)]
        json: bool,
    },
    /// Segment page images into glyph crops.
    Segment {
        images: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier from generated datasets.
    Train {
        #[arg(long = "dataset", required = true)]
        datasets: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build a labeled glyph dataset from corpora with known text.
    GenDataset {
        #[arg(long = "corpus", required = true)]
        corpora: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a corpus, or compare output text files with truth files.
    Eval {
        /// Corpus directory (pages/ and truth/).
        #[arg(long, conflicts_with_all = ["output", "truth"])]
        corpus: Option<PathBuf>,
        #[arg(long, requires = "corpus")]
        model: Option<PathBuf>,
        /// Directory of OCR output .txt files.
        #[arg(long, requires = "truth")]
        output: Option<PathBuf>,
        /// Directory of truth .txt files with matching names.
        #[arg(long, requires = "output")]
        truth: Option<PathBuf>,
        /// Write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        min_word_seg: Option<f64>,
        #[arg(long)]
        min_char_seg: Option<f64>,
        #[arg(long)]
        min_recognition: Option<f64>,
        #[arg(long)]
        min_overall: Option<f64>,
    },
    /// Time the pipeline per 550 words.
    Bench {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        repeat: usize,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    for o in &cli.overrides {
        let (k, v) = o.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got {o:?}"))?;
        cfg.set(k, v)?;
    }
    if cli.debug {
        cfg.debug = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn class_map(cfg: &PipelineConfig) -> Result<ClassMap> {
    Ok(match &cfg.class_map {
        Some(p) => ClassMap::load(p)?,
        None => ClassMap::default(),
    })
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "page".into(), |s| s.to_string_lossy().into_owned())
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn ocr_one(img: &Path, idx: usize, clf: &Classifier, classes: &ClassMap, cfg: &PipelineConfig, out: &Path, json: bool) -> Result<()> {
    let gray = load_gray(img)?;
    let seg = segment_page(&gray, &cfg.segmenter)?;
    let chars = recognize_page(&seg, clf, idx)?;
    let doc = assemble(&chars, classes);
    let name = stem(img);
    let mut text = doc.text.clone();
    if !text.is_empty() {
        text.push('\n');
    }
    fs::write(out.join(format!("{name}.txt")), text)?;
    if json {
        let v = to_json(&doc, &chars, classes);
        fs::write(out.join(format!("{name}.json")), serde_json::to_string_pretty(&v)?)?;
    }
    if cfg.debug {
        emit_segmentation(&seg, &name, &out.join("debug"), true)?;
    }
    Ok(())
}

fn cmd_ocr(cfg: &PipelineConfig, images: &[PathBuf], model: &Path, out: &Path, json: bool) -> Result<bool> {
    let (clf, classes) = load_model(model).with_context(|| format!("loading {}", model.display()))?;
    if images.is_empty() {
        return Ok(true);
    }
    mkdir(out)?;
    let failures: usize = images
        .par_iter()
        .enumerate()
        .map(|(i, img)| match ocr_one(img, i, &clf, &classes, cfg, out, json) {
            Ok(()) => 0,
            Err(e) => {
                log::error!("{}: {e:#}", img.display());
                1
            }
        })
        .sum();
    Ok(failures == 0)
}

fn cmd_segment(cfg: &PipelineConfig, images: &[PathBuf], out: &Path) -> Result<bool> {
    mkdir(out)?;
    let results: Vec<Result<usize>> = images
        .par_iter()
        .map(|img| {
            let seg = segment_page(&load_gray(img)?, &cfg.segmenter)?;
            Ok(emit_segmentation(&seg, &stem(img), out, cfg.debug)?)
        })
        .collect();
    let mut ok = true;
    for (img, r) in images.iter().zip(results) {
        match r {
            Ok(n) => println!("{}\t{n} glyph(s)", img.display()),
            Err(e) => {
                log::error!("{}: {e:#}", img.display());
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn cmd_train(cfg: &PipelineConfig, datasets: &[PathBuf], out: &Path) -> Result<()> {
    let classes = class_map(cfg)?;
    let mut samples = Vec::new();
    for d in datasets {
        samples.extend(load_samples(d).with_context(|| format!("loading dataset {}", d.display()))?);
    }
    eprintln!("training on {} glyph(s), {} classes", samples.len(), classes.len());
    let t0 = std::time::Instant::now();
    let (clf, outcome) = fit(&samples, cfg.pca_components, cfg.pca_batch_size, &cfg.train, classes.len())?;
    let retained = clf.pca.cumulative_variance().last().copied().unwrap_or(0.0);
    save_model(out, &clf, &classes)?;
    let mut history = out.as_os_str().to_owned();
    history.push(".history.json");
    let summary = serde_json::json!({
        "samples": samples.len(),
        "train_size": outcome.train_size,
        "val_size": outcome.val_size,
        "best_epoch": outcome.best_epoch,
        "pca_variance_retained": retained,
        "pca_cumulative_variance": clf.pca.cumulative_variance(),
        "seconds": t0.elapsed().as_secs_f64(),
        "epochs": outcome.history,
    });
    fs::write(PathBuf::from(history), serde_json::to_string_pretty(&summary)?)?;
    let best = &outcome.history[outcome.best_epoch - 1];
    println!(
        "best epoch {} of {}: validation accuracy {:.4}, PCA variance retained {:.4}, {:.1}s",
        outcome.best_epoch,
        outcome.history.len(),
        best.val_accuracy,
        retained,
        t0.elapsed().as_secs_f64()
    );
    Ok(())
}

fn cmd_gen_dataset(cfg: &PipelineConfig, corpora: &[PathBuf], out: &Path) -> Result<()> {
    let classes = class_map(cfg)?;
    let mut pages: Vec<CorpusPage> = Vec::new();
    for c in corpora {
        pages.extend(discover_corpus(c)?);
    }
    let m = build_dataset(&pages, &cfg.segmenter, &classes, out)?;
    println!(
        "{} glyph(s) from {} page(s); {} of {} word(s) discarded ({}), {} line(s) and {} page(s) skipped",
        m.entries.len(),
        pages.len(),
        m.words_discarded,
        m.words_aligned,
        m.discard_rate().map_or("n/a".into(), |r| format!("{:.2}%", r * 100.0)),
        m.lines_skipped,
        m.pages_skipped.len()
    );
    Ok(())
}

/// Compares `<output>/<name>.txt` with `<truth>/<name>.txt` for every truth file.
fn text_report(output: &Path, truth: &Path, classes: &ClassMap) -> Result<EvalReport> {
    let mut names: Vec<PathBuf> = fs::read_dir(truth)
        .with_context(|| format!("reading {}", truth.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    names.sort();
    let (mut dist, mut len) = (0usize, 0usize);
    for t in &names {
        let want = normalize_whitespace(&classes.normalize_document(&fs::read_to_string(t)?)?);
        let file = output.join(t.file_name().expect("file name"));
        let got = match fs::read_to_string(&file) {
            Ok(s) => normalize_whitespace(&s),
            Err(e) => {
                log::warn!("{}: {e}; scored as empty", file.display());
                String::new()
            }
        };
        dist += levenshtein(&got, &want);
        len += want.chars().count();
    }
    let mut report = EvalReport {
        words_evaluated: 0,
        ..EvalReport::default()
    };
    if len > 0 {
        report.overall_acc = Some((1.0 - dist as f64 / len as f64).clamp(0.0, 1.0));
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    cfg: &PipelineConfig,
    corpus: Option<&Path>,
    model: Option<&Path>,
    output: Option<&Path>,
    truth: Option<&Path>,
    json: Option<&Path>,
    thresholds: [(Option<f64>, &str); 4],
) -> Result<bool> {
    let report = match (corpus, output, truth) {
        (Some(c), _, _) => {
            let pages = discover_corpus(c)?;
            let (clf, classes) = match model {
                Some(m) => {
                    let (clf, classes) = load_model(m)?;
                    (Some(clf), classes)
                }
                None => (None, class_map(cfg)?),
            };
            evaluate_corpus(&pages, &cfg.segmenter, &classes, clf.as_ref())?.0
        }
        (None, Some(o), Some(t)) => text_report(o, t, &class_map(cfg)?)?,
        _ => bail!("eval needs --corpus, or --output with --truth"),
    };
    println!("{report}");
    if let Some(p) = json {
        fs::write(p, serde_json::to_string_pretty(&report)?)?;
    }
    let values = [report.word_seg_acc, report.char_seg_acc, report.recognition_acc, report.overall_acc];
    let mut ok = true;
    for ((min, name), value) in thresholds.iter().zip(values) {
        if let Some(min) = min {
            match value {
                Some(v) if v >= *min => {}
                other => {
                    eprintln!("{name} {other:?} below threshold {min}");
                    ok = false;
                }
            }
        }
    }
    Ok(ok)
}

fn cmd_bench(cfg: &PipelineConfig, corpus: &Path, model: Option<&Path>, repeat: usize) -> Result<()> {
    let pages = discover_corpus(corpus)?;
    let clf = model.map(load_model).transpose()?.map(|(c, _)| c);
    for _ in 0..repeat.max(1) {
        let r = bench(&pages, &cfg.segmenter, clf.as_ref())?;
        println!(
            "{} page(s), {} word(s), {} thread(s): {:.3}s total, {:.3}s per 550 words",
            r.pages, r.words, r.threads, r.seconds, r.seconds_per_550_words
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = load_config(&cli)?;
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    match &cli.command {
        Command::Ocr {
            images,
            model,
            out,
            json,
        } => cmd_ocr(&cfg, images, model, out, *json),
        Command::Segment { images, out } => cmd_segment(&cfg, images, out),
        Command::Train {
            datasets,
            out,
            epochs,
            batch_size,
            seed,
        } => {
            if let Some(e) = epochs {
                cfg.train.epochs = *e;
            }
            if let Some(b) = batch_size {
                cfg.train.batch_size = *b;
            }
            if let Some(s) = seed {
                cfg.train.seed = *s;
            }
            cfg.validate()?;
            cmd_train(&cfg, datasets, out).map(|_| true)
        }
        Command::GenDataset { corpora, out } => cmd_gen_dataset(&cfg, corpora, out).map(|_| true),
        Command::Eval {
            corpus,
            model,
            output,
            truth,
            json,
            min_word_seg,
            min_char_seg,
            min_recognition,
            min_overall,
        } => cmd_eval(
            &cfg,
            corpus.as_deref(),
            model.as_deref(),
            output.as_deref(),
            truth.as_deref(),
            json.as_deref(),
            [
                (*min_word_seg, "word segmentation"),
                (*min_char_seg, "character segmentation"),
                (*min_recognition, "recognition"),
                (*min_overall, "overall"),
            ],
        ),
        Command::Bench { corpus, model, repeat } => cmd_bench(&cfg, corpus, model.as_deref(), *repeat).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
