use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use narrative_core::backends::MockBackend;
use narrative_core::config::{AppConfig, BackendKind};
use narrative_core::converter::Converter;
use narrative_core::evalkit::{corpus_bleu, run_preference_benchmark, synthetic_population, BenchmarkConfig, Segment};
use narrative_core::pipeline::{Narrative, Pipeline, PipelineError};
use narrative_core::preference::{self, build_pairs, train};
use narrative_service::{backend_router, router, Service};

#[derive(Parser)]
#[command(name = "narrative", version, about = "Interactive image narratives from question-answer pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn one question and its answer into a declarative sentence.
    Convert {
        #[arg(long)]
        question: String,
        #[arg(long)]
        answer: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Narrate an image automatically or by asking you a question first.
    Narrate(NarrateArgs),
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Train a preference model from a choice log.
    Train {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the session HTTP API.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `service.listen`.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Serve a fixture file over the remote backend protocol.
    ServeBackend {
        #[arg(long)]
        fixtures: PathBuf,
        #[arg(long, default_value = "127.0.0.1:9000")]
        listen: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NarrateMode {
    Auto,
    Interactive,
}

#[derive(Args)]
struct NarrateArgs {
    #[arg(long)]
    image: String,
    #[arg(long, value_enum, default_value = "auto")]
    mode: NarrateMode,
    /// Fixture file for the mock backend; overrides the config.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `preference.seed`. Fixture backends are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the narrative as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Corpus BLEU-1..4 of candidate lines against line-aligned reference files.
    Bleu {
        /// One narrative per line.
        #[arg(long)]
        cand: PathBuf,
        /// Directory of reference files, each line-aligned with the candidates.
        #[arg(long)]
        refs: PathBuf,
    },
    /// Cross-validated preference benchmark.
    Pref {
        /// Choice log to evaluate. Synthetic choices are generated, and
        /// written here, when the file does not exist.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        users: usize,
        #[arg(long, default_value_t = 10)]
        choices: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<AppConfig> {
    match path {
        Some(p) => AppConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(AppConfig::default()),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Convert { question, answer, config } => convert(&question, &answer, config.as_deref()),
        Command::Narrate(args) => narrate(args),
        Command::Eval(EvalCommand::Bleu { cand, refs }) => eval_bleu(&cand, &refs).map(|_| 0),
        Command::Eval(EvalCommand::Pref {
            log,
            users,
            choices,
            seed,
            out,
        }) => eval_pref(log.as_deref(), users, choices, seed, &out).map(|_| 0),
        Command::Train { log, out, config } => train_model(&log, &out, config.as_deref()).map(|_| 0),
        Command::Serve { config, listen } => serve(config.as_deref(), listen).map(|_| 0),
        Command::ServeBackend { fixtures, listen } => serve_backend(&fixtures, &listen).map(|_| 0),
    }
}

fn convert(question: &str, answer: &str, config: Option<&Path>) -> Result<i32> {
    let converter = match config {
        Some(_) => load_config(config)?.build_converter()?,
        None => Converter::builtin(),
    };
    match converter.convert_text(question, answer) {
        Ok(s) => {
            println!("{}", s.text);
            Ok(0)
        }
        Err(e) => {
            let body = serde_json::json!({"code": e.code(), "message": e.to_string()});
            eprintln!("{body}");
            Ok(2)
        }
    }
}

fn print_narrative(n: &Narrative, json: bool, out: &mut impl Write) -> Result<()> {
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(n)?)?;
        return Ok(());
    }
    writeln!(out, "{}", n.text())?;
    if n.fallback {
        writeln!(out, "(no attention for the answer; narrated the whole image)")?;
    }
    for (i, (s, qa)) in n.sentences.iter().zip(&n.provenance).enumerate() {
        let b = qa.region.bbox;
        writeln!(
            out,
            "  {}. {:?} <- {:?} / {:?} [{:?}, box {:.0},{:.0},{:.0},{:.0}]",
            i + 1,
            s.text,
            s.question,
            s.answer,
            qa.mode,
            b.x0,
            b.y0,
            b.xmax,
            b.ymax
        )?;
    }
    Ok(())
}

/// Reads answers until one resolves. Accepts a choice number or free text.
fn prompt_answer(
    pipeline: &Pipeline,
    image: &narrative_core::backends::ImageRef,
    iq: &narrative_core::pipeline::InteractiveQuestion,
    input: &mut impl BufRead,
    out: &mut impl Write,
) -> Result<String> {
    writeln!(out, "{}", iq.question.raw())?;
    for (i, c) in iq.choices.iter().enumerate() {
        writeln!(out, "  {}) {c}", i + 1)?;
    }
    loop {
        write!(out, "answer [1-{}]: ", iq.choices.len())?;
        out.flush()?;
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            bail!("no answer given");
        }
        let line = line.trim();
        let typed = match line.parse::<usize>() {
            Ok(k) if (1..=iq.choices.len()).contains(&k) => iq.choices[k - 1].clone(),
            _ => line.to_string(),
        };
        match pipeline.resolve_answer(image, &iq.question, &typed) {
            Ok(label) => return Ok(label),
            Err(PipelineError::InvalidAnswer { .. }) => writeln!(out, "{typed:?} is not an answer I know; pick a number.")?,
            Err(e) => return Err(e.into()),
        }
    }
}

fn narrate(args: NarrateArgs) -> Result<i32> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(f) = args.fixtures {
        cfg.backend.kind = BackendKind::Mock;
        cfg.backend.fixtures = Some(f);
    }
    if let Some(seed) = args.seed {
        cfg.preference.seed = seed;
    }
    let (backend, catalog) = cfg.build_backend()?;
    let pipeline = Pipeline::new(backend, cfg.build_converter()?, cfg.selector, cfg.pipeline)?;
    let image = catalog.get(&args.image).with_context(|| format!("image {:?}", args.image))?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let narrative = match args.mode {
        NarrateMode::Auto => pipeline.narrate_auto(image)?,
        NarrateMode::Interactive => match pipeline.next_interactive_question(image) {
            Ok(iq) => {
                let label = prompt_answer(&pipeline, image, &iq, &mut io::stdin().lock(), &mut out)?;
                pipeline.submit_answer(image, &iq.question, &label)?
            }
            Err(PipelineError::ExhaustedAttempts { attempts, .. }) => {
                writeln!(out, "No question worth asking after {attempts} attempts; narrating automatically.")?;
                pipeline.narrate_auto(image)?
            }
            Err(e) => return Err(e.into()),
        },
    };
    print_narrative(&narrative, args.json, &mut out)?;
    Ok(0)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn eval_bleu(cand: &Path, refs: &Path) -> Result<()> {
    let candidates = read_lines(cand)?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(refs)
        .with_context(|| format!("listing {}", refs.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("{} holds no reference files", refs.display());
    }
    let mut segments: Vec<Segment> = candidates
        .into_iter()
        .map(|c| Segment {
            candidate: c,
            references: Vec::new(),
        })
        .collect();
    for f in &files {
        let lines = read_lines(f)?;
        if lines.len() != segments.len() {
            bail!("{} has {} lines, candidates have {}", f.display(), lines.len(), segments.len());
        }
        for (seg, line) in segments.iter_mut().zip(lines) {
            seg.references.push(line);
        }
    }
    let s = corpus_bleu(&segments, 4)?;
    for n in 1..=4 {
        println!("bleu{n} = {:.4}", s.bleu(n).unwrap_or(0.0));
    }
    println!("brevity_penalty = {:.6}", s.brevity_penalty);
    println!("candidate_len = {}", s.candidate_len);
    println!("reference_len = {}", s.reference_len);
    println!("segments = {}", segments.len());
    println!("references = {}", files.len());
    Ok(())
}

fn eval_pref(log: Option<&Path>, users: usize, choices: usize, seed: u64, out: &Path) -> Result<()> {
    let cfg = BenchmarkConfig {
        users,
        choices_per_user: choices,
        seed,
        ..BenchmarkConfig::default()
    };
    let records = match log {
        Some(p) if p.exists() => {
            let records = preference::log::read(p, None)?;
            eprintln!("read {} choices from {}", records.len(), p.display());
            records
        }
        _ => {
            let records = synthetic_population(&cfg)?;
            if let Some(p) = log {
                preference::log::write_all(p, &records)?;
                eprintln!("wrote {} synthetic choices to {}", records.len(), p.display());
            }
            records
        }
    };
    let report = run_preference_benchmark(&records, &cfg)?;
    std::fs::write(out, report.to_toml()).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "consistent {:.3}  shuffled {:.3}  question-zeroed {:.3}  chance {:.3}  ({} pairs)",
        report.consistent_acc, report.shuffled_acc, report.image_only_acc, report.chance, report.metadata.pairs
    );
    Ok(())
}

fn train_model(log: &Path, out: &Path, config: Option<&Path>) -> Result<()> {
    let cfg = load_config(config)?;
    let records = preference::log::read(log, None)?;
    let pairs = build_pairs(&records);
    if pairs.is_empty() {
        bail!("{} yields no training pairs", log.display());
    }
    let model = train(&pairs, &cfg.preference)?;
    model.save(out)?;
    println!("trained on {} pairs from {} choices; wrote {}", pairs.len(), records.len(), out.display());
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn serve(config: Option<&Path>, listen: Option<String>) -> Result<()> {
    let cfg = load_config(config)?;
    let addr = listen.unwrap_or_else(|| cfg.service.listen.clone());
    let service = Arc::new(Service::from_config(&cfg)?);
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr).await.with_context(|| format!("binding {addr}"))?;
        eprintln!("serving /v1 on http://{}", listener.local_addr()?);
        narrative_service::serve(listener, router(service)).await?;
        Ok(())
    })
}

fn serve_backend(fixtures: &Path, listen: &str) -> Result<()> {
    let backend = MockBackend::load(fixtures)?;
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen).await.with_context(|| format!("binding {listen}"))?;
        eprintln!("serving backend protocol on http://{}", listener.local_addr()?);
        narrative_service::serve(listener, backend_router(Arc::new(backend))).await?;
        Ok(())
    })
}
