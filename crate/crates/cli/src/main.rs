use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use testforge::corpus::CorpusStore;
use testforge::driver::{run_loop, CampaignConfig};
use testforge::fdp::{encode, parse_call_list, render_call_list, Dialect};
use testforge::mutator::{Dictionary, Mutator, DEFAULT_MAX_TOKEN_SIZE};
use testforge::rng::SeedStream;
use testforge::serializer::Generator;
use testforge::testlang::{merge_partial, to_json, Mode};
use testforge::{parse_testlang, structure_check, validate, GenMode, TestlangDoc};

#[derive(Parser)]
#[command(name = "testforge", version, about = "Structure-aware fuzzing input toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Coverage,
    Crash,
}

#[derive(Clone, Copy, ValueEnum)]
enum DialectArg {
    Llvm,
    Jazzer,
}

impl From<DialectArg> for Dialect {
    fn from(d: DialectArg) -> Self {
        match d {
            DialectArg::Llvm => Dialect::Llvm,
            DialectArg::Jazzer => Dialect::Jazzer,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a Testlang document.
    Validate { file: PathBuf },
    /// Merge a partial document over a base and print the result.
    Merge {
        base: PathBuf,
        partial: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate inputs from a document.
    Generate {
        #[arg(long)]
        doc: PathBuf,
        #[arg(long, value_enum, default_value = "coverage")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Write `<n>.bin` files here instead of hex lines on stdout.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Encoder dialect for FDP-mode documents.
        #[arg(long, value_enum, default_value = "llvm")]
        dialect: DialectArg,
        /// For FDP-mode documents, print the producer call list instead.
        #[arg(long)]
        calls: bool,
    },
    /// Mutate one input.
    Mutate {
        #[arg(long)]
        doc: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        dict: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Encode a producer call list into an FDP buffer.
    Encode {
        #[arg(long, value_enum, default_value = "llvm")]
        dialect: DialectArg,
        #[arg(long)]
        calls: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a fuzzing campaign.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Inspect a corpus directory.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Print entry counts, union coverage and crashes.
    Stats { dir: PathBuf },
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_doc(path: &Path) -> Result<TestlangDoc> {
    match parse_testlang(&read_text(path)?) {
        Ok(d) => Ok(d),
        Err(diags) => {
            for d in &diags {
                eprintln!("{}: {d}", path.display());
            }
            bail!("{} does not parse", path.display())
        }
    }
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)?;
            so.flush()?;
            Ok(())
        }
    }
}

fn cmd_validate(file: &Path) -> Result<bool> {
    let doc = match parse_testlang(&read_text(file)?) {
        Ok(d) => d,
        Err(diags) => {
            for d in diags {
                println!("{d}");
            }
            return Ok(false);
        }
    };
    let diags = validate(&doc);
    for d in &diags {
        println!("{d}");
    }
    let ok = !diags.iter().any(|d| d.is_error());
    if ok {
        println!("ok {}", doc.doc_id());
    }
    Ok(ok)
}

fn cmd_merge(base: &Path, partial: &Path, out: Option<&Path>) -> Result<()> {
    let merged = merge_partial(&load_doc(base)?, &load_doc(partial)?)?;
    write_out(out, to_json(&merged).as_bytes())
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    doc: &Path,
    mode: ModeArg,
    seed: u64,
    count: u64,
    out_dir: Option<&Path>,
    dialect: Dialect,
    calls: bool,
) -> Result<()> {
    let doc = load_doc(doc)?;
    let gen = Generator::new(&doc)?;
    let mode = match mode {
        ModeArg::Coverage => GenMode::Coverage,
        ModeArg::Crash => GenMode::Crash,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut stdout = std::io::stdout().lock();
    for i in 0..count {
        let seeds = SeedStream::new(seed.wrapping_add(i));
        let blob = match doc.mode {
            Mode::Bytes => gen.generate(&seeds, mode)?.0,
            Mode::Fdp => {
                let (list, _) = gen.generate_fdp_calls(&seeds, mode)?;
                if calls {
                    writeln!(stdout, "{}", render_call_list(&list))?;
                    continue;
                }
                encode(dialect, &list)?
            }
        };
        match out_dir {
            Some(dir) => std::fs::write(dir.join(format!("{i}.bin")), &blob)?,
            None => writeln!(stdout, "{}", hex::encode(&blob))?,
        }
    }
    Ok(())
}

fn cmd_mutate(doc: Option<&Path>, input: &Path, dict: Option<&Path>, seed: u64, out: Option<&Path>) -> Result<()> {
    let doc = doc.map(load_doc).transpose()?;
    let dict = match dict {
        Some(p) => Some(Dictionary::parse(&read_text(p)?, DEFAULT_MAX_TOKEN_SIZE)?),
        None => None,
    };
    let bytes = std::fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let ast = doc
        .as_ref()
        .filter(|d| d.mode == Mode::Bytes)
        .and_then(|d| structure_check(d, &bytes).ok());
    let mutator = Mutator::new(doc.as_ref(), dict.as_ref());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = mutator.mutate(&bytes, ast.as_ref(), &mut rng)?;
    eprintln!("strategy {}", m.strategy.name());
    write_out(out, &m.bytes)
}

fn cmd_encode(dialect: Dialect, calls: &Path, out: Option<&Path>) -> Result<()> {
    let list = parse_call_list(&read_text(calls)?)?;
    write_out(out, &encode(dialect, &list)?)
}

fn cmd_run(config: &Path) -> Result<()> {
    let cfg = CampaignConfig::load(config)?;
    let report = run_loop(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_corpus_stats(dir: &Path) -> Result<()> {
    if !dir.is_dir() {
        bail!("{} is not a directory", dir.display());
    }
    let (store, issues) = CorpusStore::load(dir)?;
    for issue in &issues {
        eprintln!("warning: {issue:?}");
    }
    let s = store.stats();
    println!("entries {}", store.len());
    println!("testlang {}", s.testlang);
    println!("external {}", s.external);
    println!("union_coverage {}", s.union_coverage);
    println!("crashes {}", s.crashes);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Validate { file } => return cmd_validate(&file),
        Command::Merge { base, partial, out } => cmd_merge(&base, &partial, out.as_deref())?,
        Command::Generate {
            doc,
            mode,
            seed,
            count,
            out_dir,
            dialect,
            calls,
        } => cmd_generate(&doc, mode, seed, count, out_dir.as_deref(), dialect.into(), calls)?,
        Command::Mutate {
            doc,
            input,
            dict,
            seed,
            out,
        } => cmd_mutate(doc.as_deref(), &input, dict.as_deref(), seed, out.as_deref())?,
        Command::Encode { dialect, calls, out } => cmd_encode(dialect.into(), &calls, out.as_deref())?,
        Command::Run { config } => cmd_run(&config)?,
        Command::Corpus {
            command: CorpusCommand::Stats { dir },
        } => cmd_corpus_stats(&dir)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
