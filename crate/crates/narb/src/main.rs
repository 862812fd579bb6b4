//! Command-line entry point wiring all modules into end-to-end workflows.
//!
//! Every subcommand is deterministic given the same inputs and seed. The
//! user-visible seed (flag > config file > `NARB_SEED` > 0) is split per
//! stage with [`narb::stage_seed`], so for example data generation and
//! narrator training draw from independent streams of one master seed.

use clap::{Args, Parser, Subcommand, ValueEnum};
use narb::corpus::{
    build_vocab, corpus_stats, label_timing, load_corpus, save_corpus, split_corpus, Corpus,
    Episode, SplitLevel, SplitSpec,
};
use narb::metrics::{
    evaluate_generation, narration_summary_eval, prf, SummaryMode, GEN_REPORT_HEADER,
};
use narb::models::{
    beam_search, load_narrator, load_tagger, save_narrator, save_tagger, ModelDims, NarratorModel,
    TaggerModel, TrainConfig, Variant,
};
use narb::retrieval::{
    fit_cca, fit_tfidf, retrieve_precomputed, retrieve_tfidf, CcaRetriever, EmbeddingTable,
};
use narb::stage_seed;
use narb::syngen::{generate_corpus, GenConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::error::Error;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

type AnyError = Box<dyn Error>;
type CliResult<T = ()> = Result<T, AnyError>;

#[derive(Parser)]
#[command(name = "narb", version, about = "Narration generation toolkit")]
struct Cli {
    /// Config file (TOML or JSON); flags override file values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; defaults to the NARB_SEED environment variable, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Optional values loadable from `--config`. Any field a flag also covers is
/// overridden by the flag.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    episodes: Option<usize>,
    scenes: Option<usize>,
    narration_rate: Option<f64>,
    sigma: Option<f64>,
    hidden: Option<usize>,
    fusion: Option<usize>,
    emb: Option<usize>,
    lr: Option<f64>,
    teacher_forcing: Option<f64>,
    max_epochs: Option<usize>,
    patience: Option<usize>,
    max_len: Option<usize>,
    beam: Option<usize>,
    window: Option<usize>,
    cca_k: Option<usize>,
    cca_eps: Option<f64>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let cfg = match ext {
            "toml" => toml::from_str(&text)
                .map_err(|e| format!("bad TOML config {}: {e}", path.display()))?,
            "json" => serde_json::from_str(&text)
                .map_err(|e| format!("bad JSON config {}: {e}", path.display()))?,
            other => {
                return Err(format!(
                    "unsupported config extension {other:?} (expected .toml or .json)"
                )
                .into())
            }
        };
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    Episode,
    Instance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SetArg {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Full,
    Bytes75,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Tfidf,
    Cca,
    Precomputed,
}

/// Shared model-width flags.
#[derive(Debug, Args)]
struct DimArgs {
    /// Recurrent state width.
    #[arg(long)]
    hidden: Option<usize>,
    /// Fusion layer output width.
    #[arg(long)]
    fusion: Option<usize>,
    /// Word embedding width.
    #[arg(long)]
    emb: Option<usize>,
}

impl DimArgs {
    fn resolve(&self, cfg: &FileConfig) -> ModelDims {
        let d = ModelDims::default();
        ModelDims {
            hidden: self.hidden.or(cfg.hidden).unwrap_or(d.hidden),
            fusion: self.fusion.or(cfg.fusion).unwrap_or(d.fusion),
            d_emb: self.emb.or(cfg.emb).unwrap_or(d.d_emb),
        }
    }
}

/// Shared training-loop flags.
#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    lr: Option<f64>,
    /// Probability of feeding the gold previous token while decoding.
    #[arg(long)]
    teacher_forcing: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Epochs without validation improvement before stopping.
    #[arg(long)]
    patience: Option<usize>,
    /// Decode length cap.
    #[arg(long)]
    max_len: Option<usize>,
}

impl TrainArgs {
    fn resolve(&self, cfg: &FileConfig, seed: u64) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            lr: self.lr.or(cfg.lr).unwrap_or(d.lr),
            teacher_forcing: self
                .teacher_forcing
                .or(cfg.teacher_forcing)
                .unwrap_or(d.teacher_forcing),
            max_epochs: self.max_epochs.or(cfg.max_epochs).unwrap_or(d.max_epochs),
            patience: self.patience.or(cfg.patience).unwrap_or(d.patience),
            max_len: self.max_len.or(cfg.max_len).unwrap_or(d.max_len),
            seed,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic episode corpus.
    GenData {
        #[arg(long)]
        episodes: Option<usize>,
        /// Scenes per episode.
        #[arg(long)]
        scenes: Option<usize>,
        /// Probability that a scene is narrated.
        #[arg(long)]
        narration_rate: Option<f64>,
        /// Feature noise level.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(short, long, value_name = "PATH")]
        output: PathBuf,
    },
    /// Corpus statistics as TSV files.
    Stats {
        corpus: PathBuf,
        /// Output directory for the TSV files.
        #[arg(short, long, value_name = "DIR")]
        output: PathBuf,
    },
    /// Timing labels per token.
    Label {
        corpus: PathBuf,
        /// Lookahead window size.
        #[arg(long)]
        n: Option<usize>,
        #[arg(short, long, value_name = "PATH")]
        output: PathBuf,
    },
    /// Deterministic train/valid/test split.
    Split {
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "episode")]
        level: LevelArg,
        /// Comma-separated ratios, e.g. 0.8,0.1,0.1.
        #[arg(long, default_value = "0.8,0.1,0.1")]
        ratios: String,
        #[arg(short, long, value_name = "PATH")]
        output: PathBuf,
    },
    /// Train the narration-timing tagger.
    TrainTiming {
        corpus: PathBuf,
        #[arg(long, value_name = "PATH")]
        split: PathBuf,
        /// Lookahead window for the timing labels.
        #[arg(long)]
        window: Option<usize>,
        /// Fuse image and audio features with the token embedding.
        #[arg(long)]
        multimodal: bool,
        #[command(flatten)]
        dims: DimArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Checkpoint path; a .meta.json sidecar and a .log.tsv are written
        /// next to it.
        #[arg(short, long, value_name = "PATH")]
        output: PathBuf,
    },
    /// Evaluate a timing tagger: pooled precision/recall/F1.
    EvalTiming {
        corpus: PathBuf,
        #[arg(long, value_name = "PATH")]
        split: PathBuf,
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, value_enum, default_value = "test")]
        set: SetArg,
        /// Optional report file; the report always prints to stdout.
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Train a narrator model.
    TrainNarrator {
        corpus: PathBuf,
        #[arg(long, value_name = "PATH")]
        split: PathBuf,
        /// One of dina-att, divina, divina-att, di2vina, di2vina-att.
        #[arg(long)]
        variant: String,
        /// Feed gold image/audio vectors to the decoder at every step.
        #[arg(long)]
        mmd: bool,
        #[command(flatten)]
        dims: DimArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(short, long, value_name = "PATH")]
        output: PathBuf,
    },
    /// Generate narrations for a split with beam search.
    Generate {
        corpus: PathBuf,
        #[arg(long, value_name = "PATH")]
        split: PathBuf,
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        set: SetArg,
        /// Beam width.
        #[arg(long)]
        beam: Option<usize>,
        #[arg(long)]
        max_len: Option<usize>,
        /// TSV output: instance id, generated text.
        #[arg(short, long, value_name = "PATH")]
        output: PathBuf,
    },
    /// Retrieval baselines.
    Retrieve {
        corpus: PathBuf,
        #[arg(long, value_name = "PATH")]
        split: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, value_enum, default_value = "test")]
        set: SetArg,
        /// Embedding TSV (id, values...) covering train and query ids;
        /// required for --method precomputed.
        #[arg(long, value_name = "PATH")]
        embeddings: Option<PathBuf>,
        /// Shared-space rank for --method cca.
        #[arg(long)]
        cca_k: Option<usize>,
        #[arg(long)]
        cca_eps: Option<f64>,
        #[arg(short, long, value_name = "PATH")]
        output: PathBuf,
    },
    /// Score generated narrations against gold.
    EvalGen {
        corpus: PathBuf,
        #[arg(long, value_name = "PATH")]
        split: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        set: SetArg,
        /// TSV of instance id and generated text, as written by generate or
        /// retrieve.
        #[arg(long, value_name = "PATH")]
        outputs: PathBuf,
        /// Row label in the report.
        #[arg(long, default_value = "system")]
        system: String,
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Narration-as-summary evaluation against plot summaries.
    SummaryEval {
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        mode: ModeArg,
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn resolve_seed(flag: Option<u64>, cfg: &FileConfig) -> u64 {
    flag.or(cfg.seed)
        .or_else(|| {
            std::env::var("NARB_SEED")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0)
}

fn run(cli: Cli) -> CliResult {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    let seed = resolve_seed(cli.seed, &cfg);
    match cli.cmd {
        Cmd::GenData {
            episodes,
            scenes,
            narration_rate,
            sigma,
            output,
        } => {
            let d = GenConfig::default();
            let gen = GenConfig {
                n_episodes: episodes.or(cfg.episodes).unwrap_or(d.n_episodes),
                scenes_per_episode: scenes.or(cfg.scenes).unwrap_or(d.scenes_per_episode),
                narration_rate: narration_rate
                    .or(cfg.narration_rate)
                    .unwrap_or(d.narration_rate),
                sigma: sigma.or(cfg.sigma).unwrap_or(d.sigma),
                seed: stage_seed(seed, "gen-data"),
                ..d
            };
            let corpus = generate_corpus(&gen)?;
            save_corpus(&corpus, &output)?;
            println!(
                "wrote {} episodes ({} tokens) to {}",
                corpus.episodes.len(),
                corpus.episodes.iter().map(Episode::len).sum::<usize>(),
                output.display()
            );
            Ok(())
        }
        Cmd::Stats { corpus, output } => {
            let corpus = load_corpus(&corpus)?;
            let report = corpus_stats(&corpus)?;
            std::fs::create_dir_all(&output)?;
            report.write_tsv(&output)?;
            println!("wrote statistics to {}", output.display());
            Ok(())
        }
        Cmd::Label { corpus, n, output } => {
            let n = n.or(cfg.window).unwrap_or(5);
            let corpus = load_corpus(&corpus)?;
            let mut out = String::from("episode_id\tindex\ttoken\tlabel\n");
            for ep in &corpus.episodes {
                let labels = label_timing(ep, n);
                for (i, (tok, label)) in ep.tokens.iter().zip(&labels.labels).enumerate() {
                    writeln!(out, "{}\t{i}\t{}\t{label}", ep.episode_id, tok.text)
                        .expect("string write");
                }
            }
            std::fs::write(&output, out)?;
            println!("wrote timing labels (n = {n}) to {}", output.display());
            Ok(())
        }
        Cmd::Split {
            corpus,
            level,
            ratios,
            output,
        } => {
            let corpus = load_corpus(&corpus)?;
            let parts: Vec<f64> = ratios
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| format!("bad --ratios {ratios:?}: {e}"))?;
            let [a, b, c] = parts[..] else {
                return Err(format!("--ratios needs exactly 3 values, got {}", parts.len()).into());
            };
            let level = match level {
                LevelArg::Episode => SplitLevel::Episode,
                LevelArg::Instance => SplitLevel::Instance,
            };
            let split = split_corpus(&corpus, (a, b, c), level, stage_seed(seed, "split"))?;
            split.save(&output)?;
            println!(
                "wrote split ({} train, {} valid, {} test) to {}",
                split.train.len(),
                split.valid.len(),
                split.test.len(),
                output.display()
            );
            Ok(())
        }
        Cmd::TrainTiming {
            corpus,
            split,
            window,
            multimodal,
            dims,
            train,
            output,
        } => {
            let corpus = load_corpus(&corpus)?;
            let split = SplitSpec::load(&split)?;
            require_level(&split, SplitLevel::Episode)?;
            let window = window.or(cfg.window).unwrap_or(5);
            let stage = stage_seed(seed, "train-timing");
            let vocab = build_vocab(&corpus, &split)?;
            let spec = corpus.feature_spec;
            let mut rng = ChaCha8Rng::seed_from_u64(stage);
            let mut model = TaggerModel::new(
                vocab,
                multimodal,
                dims.resolve(&cfg),
                spec.d_img,
                spec.d_aud,
                &mut rng,
            );
            let train_eps = episodes_for(&corpus, &split.train)?;
            let valid_eps = episodes_for(&corpus, &split.valid)?;
            let tcfg = train.resolve(&cfg, stage);
            let log = narb::models::train_tagger(&mut model, &train_eps, &valid_eps, window, &tcfg)?;
            save_tagger(&model, &output)?;
            log.write_tsv(&log_path(&output))?;
            let best = log.epochs[log.best_epoch];
            println!(
                "trained tagger for {} epochs; best epoch {} (valid F1 {:.4}); wrote {}",
                log.epochs.len(),
                best.epoch,
                best.valid_metric,
                output.display()
            );
            Ok(())
        }
        Cmd::EvalTiming {
            corpus,
            split,
            model,
            window,
            set,
            output,
        } => {
            let corpus = load_corpus(&corpus)?;
            let split = SplitSpec::load(&split)?;
            require_level(&split, SplitLevel::Episode)?;
            let window = window.or(cfg.window).unwrap_or(5);
            let model = load_tagger(&model)?;
            let episodes = episodes_for(&corpus, set_ids(&split, set))?;
            let mut gold = Vec::new();
            let mut pred = Vec::new();
            for ep in episodes {
                gold.extend(label_timing(ep, window).labels);
                pred.extend(
                    model
                        .predict_probs(&ep.tokens)?
                        .into_iter()
                        .map(|p| u8::from(p >= 0.5)),
                );
            }
            let report = prf(&gold, &pred)?;
            let text = format!(
                "set\twindow\tprecision\trecall\tf1\ttp\tfp\tfn\n{}\t{window}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\t{}\n",
                set_name(set),
                report.precision,
                report.recall,
                report.f1,
                report.tp,
                report.fp,
                report.fn_
            );
            print!("{text}");
            if let Some(path) = output {
                std::fs::write(path, text)?;
            }
            Ok(())
        }
        Cmd::TrainNarrator {
            corpus,
            split,
            variant,
            mmd,
            dims,
            train,
            output,
        } => {
            let corpus = load_corpus(&corpus)?;
            let split = SplitSpec::load(&split)?;
            require_level(&split, SplitLevel::Instance)?;
            let variant = Variant::parse(&variant).ok_or_else(|| {
                format!(
                    "unknown variant {variant:?}; expected one of {}",
                    Variant::ALL.map(|v| v.name()).join(", ")
                )
            })?;
            let stage = stage_seed(seed, "train-narrator");
            let vocab = build_vocab(&corpus, &split)?;
            let spec = corpus.feature_spec;
            let mut rng = ChaCha8Rng::seed_from_u64(stage);
            let mut model = NarratorModel::new(
                variant,
                mmd,
                vocab,
                dims.resolve(&cfg),
                spec.d_img,
                spec.d_aud,
                &mut rng,
            );
            let train_set = split.instances_for(&corpus, &split.train);
            let valid_set = split.instances_for(&corpus, &split.valid);
            let tcfg = train.resolve(&cfg, stage);
            let log = narb::models::train_narrator(&mut model, &train_set, &valid_set, &tcfg)?;
            save_narrator(&model, &output)?;
            log.write_tsv(&log_path(&output))?;
            let best = log.epochs[log.best_epoch];
            println!(
                "trained {variant}{} for {} epochs; best epoch {} (valid loss {:.4}); wrote {}",
                if mmd { "+mmd" } else { "" },
                log.epochs.len(),
                best.epoch,
                best.valid_metric,
                output.display()
            );
            Ok(())
        }
        Cmd::Generate {
            corpus,
            split,
            model,
            set,
            beam,
            max_len,
            output,
        } => {
            let corpus = load_corpus(&corpus)?;
            let split = SplitSpec::load(&split)?;
            require_level(&split, SplitLevel::Instance)?;
            let beam = beam.or(cfg.beam).unwrap_or(3);
            let max_len = max_len.or(cfg.max_len).unwrap_or(25);
            let model = load_narrator(&model)?;
            let mut out = String::new();
            for inst in split.instances_for(&corpus, set_ids(&split, set)) {
                let hyp = beam_search(&model, &inst, beam, max_len)?;
                let words: Vec<&str> = hyp.tokens.iter().map(|&t| model.vocab.word(t)).collect();
                writeln!(out, "{}\t{}", inst.id, words.join(" ")).expect("string write");
            }
            std::fs::write(&output, out)?;
            println!("wrote generations to {}", output.display());
            Ok(())
        }
        Cmd::Retrieve {
            corpus,
            split,
            method,
            set,
            embeddings,
            cca_k,
            cca_eps,
            output,
        } => {
            let corpus = load_corpus(&corpus)?;
            let split = SplitSpec::load(&split)?;
            require_level(&split, SplitLevel::Instance)?;
            let train_set = split.instances_for(&corpus, &split.train);
            let queries = split.instances_for(&corpus, set_ids(&split, set));
            let mut out = String::new();
            match method {
                MethodArg::Tfidf => {
                    let index = fit_tfidf(&train_set)?;
                    for inst in &queries {
                        let narration = retrieve_tfidf(&index, &inst.prev_text());
                        writeln!(out, "{}\t{narration}", inst.id).expect("string write");
                    }
                }
                MethodArg::Cca => {
                    let index = fit_tfidf(&train_set)?;
                    let x: Vec<Vec<f64>> = train_set
                        .iter()
                        .map(|i| index.vectorize_dense(&i.prev_text()))
                        .collect();
                    let y: Vec<Vec<f64>> = train_set
                        .iter()
                        .map(|i| index.vectorize_dense(&i.narration_text()))
                        .collect();
                    let max_k = index.term_count().min(train_set.len());
                    let k = cca_k.or(cfg.cca_k).unwrap_or(16).min(max_k);
                    let eps = cca_eps.or(cfg.cca_eps).unwrap_or(1e-6);
                    let model = fit_cca(&x, &y, k, eps)?;
                    let entries: Vec<(String, Vec<f64>, String)> = train_set
                        .iter()
                        .zip(&y)
                        .map(|(i, v)| (i.id.clone(), v.clone(), i.narration_text()))
                        .collect();
                    let retriever = CcaRetriever::new(&model, &entries)?;
                    for inst in &queries {
                        let q = index.vectorize_dense(&inst.prev_text());
                        let narration = retriever.retrieve(&model, &q)?;
                        writeln!(out, "{}\t{narration}", inst.id).expect("string write");
                    }
                }
                MethodArg::Precomputed => {
                    let path = embeddings
                        .ok_or("--method precomputed requires --embeddings")?;
                    let table = EmbeddingTable::load(&path)?;
                    let train_pairs: Vec<(String, String)> = train_set
                        .iter()
                        .map(|i| (i.id.clone(), i.narration_text()))
                        .collect();
                    for inst in &queries {
                        let narration = retrieve_precomputed(&table, &train_pairs, &inst.id)?;
                        writeln!(out, "{}\t{narration}", inst.id).expect("string write");
                    }
                }
            }
            std::fs::write(&output, out)?;
            println!("wrote retrievals to {}", output.display());
            Ok(())
        }
        Cmd::EvalGen {
            corpus,
            split,
            set,
            outputs,
            system,
            output,
        } => {
            let corpus = load_corpus(&corpus)?;
            let split = SplitSpec::load(&split)?;
            require_level(&split, SplitLevel::Instance)?;
            let generated = read_outputs(&outputs)?;
            let mut sys = Vec::new();
            let mut gold = Vec::new();
            for inst in split.instances_for(&corpus, set_ids(&split, set)) {
                sys.push(generated.get(&inst.id).cloned().unwrap_or_default());
                gold.push(inst.narration_text());
            }
            let report = evaluate_generation(&sys, &gold)?;
            let text = format!("{GEN_REPORT_HEADER}\n{}\n", report.tsv_row(&system));
            print!("{text}");
            if let Some(path) = output {
                std::fs::write(path, text)?;
            }
            Ok(())
        }
        Cmd::SummaryEval {
            corpus,
            mode,
            output,
        } => {
            let corpus = load_corpus(&corpus)?;
            let mode = match mode {
                ModeArg::Full => SummaryMode::Full,
                ModeArg::Bytes75 => SummaryMode::Bytes75,
            };
            let report = narration_summary_eval(&corpus, mode)?;
            let mut text = String::from("metric\tprecision\trecall\tf1\n");
            for (name, s) in [
                ("ROUGE-1", report.rouge_1),
                ("ROUGE-2", report.rouge_2),
                ("ROUGE-L", report.rouge_l),
            ] {
                writeln!(
                    text,
                    "{name}\t{:.2}\t{:.2}\t{:.2}",
                    100.0 * s.precision,
                    100.0 * s.recall,
                    100.0 * s.f1
                )
                .expect("string write");
            }
            print!("{text}");
            if let Some(path) = output {
                std::fs::write(path, text)?;
            }
            Ok(())
        }
    }
}

fn set_ids(split: &SplitSpec, set: SetArg) -> &[String] {
    match set {
        SetArg::Train => &split.train,
        SetArg::Valid => &split.valid,
        SetArg::Test => &split.test,
    }
}

fn set_name(set: SetArg) -> &'static str {
    match set {
        SetArg::Train => "train",
        SetArg::Valid => "valid",
        SetArg::Test => "test",
    }
}

fn require_level(split: &SplitSpec, level: SplitLevel) -> CliResult {
    if split.level != level {
        let name = |l| match l {
            SplitLevel::Episode => "episode",
            SplitLevel::Instance => "instance",
        };
        return Err(format!(
            "this command needs an {}-level split, but the split file is {}-level",
            name(level),
            name(split.level)
        )
        .into());
    }
    Ok(())
}

fn episodes_for<'a>(corpus: &'a Corpus, ids: &[String]) -> CliResult<Vec<&'a Episode>> {
    ids.iter()
        .map(|id| {
            corpus
                .episode(id)
                .ok_or_else(|| format!("split references unknown episode {id}").into())
        })
        .collect()
}

fn log_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.file_name().unwrap_or_default().to_os_string();
    name.push(".log.tsv");
    checkpoint.with_file_name(name)
}

/// Reads a generation/retrieval TSV back into an id-to-text map.
fn read_outputs(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read outputs {}: {e}", path.display()))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, rest) = line.split_once('\t').ok_or_else(|| {
            format!("{}:{}: expected id<TAB>text", path.display(), lineno + 1)
        })?;
        map.insert(id.to_string(), rest.to_string());
    }
    Ok(map)
}
