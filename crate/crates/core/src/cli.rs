//! Command-line entry points. Exit codes: 0 success, 1 usage, 2 bad input
//! data, 3 pipeline failure. Failures print one JSON line to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bundled::{self, world_by_id};
use crate::corpus::{
    evaluate, generate_corpus, read_jsonl, standard_phrasings, train_templates, write_jsonl,
    CorpusError, CorpusRecord, EvalOptions,
};
use crate::frontend::{extract, Domain, TaggerOptions};
use crate::grounding::{GroundingLexicon, PropRegistry};
use crate::pipeline::{ground_command, PipelineOptions};
use crate::planner::{plan_with_report, PlanOptions};
use crate::service::{serve, ServiceConfig, WorldEntry};
use crate::template::{save_library, TemplateLibrary};
use crate::vocab::{Split, VocabConfig};
use crate::world::WorldConfig;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "groundsmith",
    version,
    about = "Natural language to grounded LTL and plans"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SplitArg {
    Seen,
    Unseen,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DomainArg {
    Manipulation,
    Navigation,
    Both,
}

#[derive(clap::Args, Debug)]
struct PipelineFlags {
    /// Ground parameters without part-of-speech hints.
    #[arg(long)]
    no_pos: bool,
    /// Tag "pickup" as a noun.
    #[arg(long)]
    tagger_fault: bool,
}

impl PipelineFlags {
    fn options(&self) -> PipelineOptions {
        PipelineOptions {
            pos_disambiguation: !self.no_pos,
            tagger_fault: self.tagger_fault,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a corpus split as JSON lines.
    GenCorpus {
        #[arg(long, value_enum)]
        split: SplitArg,
        #[arg(long, value_enum, default_value = "both")]
        domain: DomainArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Let homonyms fill parameter slots.
        #[arg(long)]
        homonyms: bool,
    },
    /// Learn one template per task class from a seen corpus.
    Train {
        /// Corpus file; repeat to combine domains.
        #[arg(long, required = true)]
        corpus: Vec<PathBuf>,
        /// World file (with a sibling `.lexicon.json`) or bundled world id.
        #[arg(long)]
        world: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score the pipeline on a corpus.
    Eval {
        #[arg(long, required = true)]
        corpus: Vec<PathBuf>,
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(long)]
        world: String,
        #[arg(long)]
        metrics: PathBuf,
        /// Instantiate gold queries instead of running the front end.
        #[arg(long)]
        gold_cq: bool,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Ground one command and plan for it.
    Plan {
        #[arg(long)]
        world: String,
        #[arg(long)]
        text: String,
        #[arg(long)]
        library: Option<PathBuf>,
        /// Print the plan report as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Show tags and the contextual query of a command.
    Parse {
        #[arg(long)]
        text: String,
        #[arg(long, default_value = "toy_4x1")]
        world: String,
        #[arg(long)]
        tagger_fault: bool,
    },
    /// Serve the HTTP session API.
    Serve {
        #[arg(long)]
        world: String,
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(long, env = "GROUNDSMITH_PORT", default_value_t = 8080)]
        port: u16,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: String,
    pub detail: String,
}

impl Failure {
    fn data(kind: &str, detail: impl ToString) -> Self {
        Failure {
            code: EXIT_DATA,
            kind: kind.into(),
            detail: detail.to_string(),
        }
    }

    fn pipeline(kind: &str, detail: impl ToString) -> Self {
        Failure {
            code: EXIT_PIPELINE,
            kind: kind.into(),
            detail: detail.to_string(),
        }
    }

    fn json_line(&self) -> String {
        json!({"error": {"kind": self.kind, "detail": self.detail}}).to_string()
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        let kind = match &e {
            CorpusError::InsufficientVocabulary { .. } => "InsufficientVocabulary",
            CorpusError::NoValidExample(_) => "NoValidExample",
            CorpusError::MissingPhrasing(_) => "MissingPhrasing",
            CorpusError::Json { .. } => "MalformedCorpus",
            CorpusError::Io(_) => "Io",
        };
        Failure::data(kind, e)
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::data("Io", format!("{}: {e}", path.display()))
}

/// A bundled id or a path to a world file with its sibling lexicon.
fn load_world(spec: &str) -> Result<(String, WorldConfig, GroundingLexicon), Failure> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some((w, l)) = world_by_id(spec) {
            return Ok((spec.to_string(), w, l));
        }
    }
    let (w, l) = bundled::load_world(path).map_err(|e| Failure::data("InvalidWorld", e))?;
    w.validate().map_err(|e| Failure::data("InvalidWorld", e))?;
    let id = path
        .file_stem()
        .map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
    Ok((id, w, l))
}

fn registry(w: &WorldConfig) -> Result<PropRegistry, Failure> {
    PropRegistry::build(w).map_err(|e| Failure::data("InvalidWorld", e))
}

fn load_library(path: Option<&Path>) -> Result<TemplateLibrary, Failure> {
    match path {
        None => Ok(bundled::library()),
        Some(p) => bundled::load_library(p).map_err(|e| Failure::data("CorruptLibrary", e)),
    }
}

fn read_corpora(paths: &[PathBuf]) -> Result<Vec<CorpusRecord>, Failure> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_jsonl(p).map_err(|e| match e {
            CorpusError::Io(io) => io_failure(p, io),
            other => Failure::from(other),
        })?);
    }
    Ok(out)
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let w = |out: &mut dyn Write, s: String| {
        out.write_all(s.as_bytes())
            .map_err(|e| Failure::data("Io", e))
    };
    match cli.command {
        Command::GenCorpus {
            split,
            domain,
            seed,
            out: path,
            homonyms,
        } => {
            let split = match split {
                SplitArg::Seen => Split::Seen,
                SplitArg::Unseen => Split::Unseen,
            };
            let cfg = VocabConfig::for_split(split);
            let domains: &[Domain] = match domain {
                DomainArg::Manipulation => &[Domain::Manipulation],
                DomainArg::Navigation => &[Domain::Navigation],
                DomainArg::Both => &[Domain::Manipulation, Domain::Navigation],
            };
            let mut records = Vec::new();
            for d in domains {
                records.extend(generate_corpus(
                    &cfg,
                    *d,
                    &standard_phrasings(),
                    seed,
                    homonyms,
                )?);
            }
            write_jsonl(&path, &records).map_err(|e| match e {
                CorpusError::Io(io) => io_failure(&path, io),
                other => other.into(),
            })?;
            w(
                out,
                format!("wrote {} records to {}\n", records.len(), path.display()),
            )
        }
        Command::Train {
            corpus,
            world,
            out: path,
        } => {
            let records = read_corpora(&corpus)?;
            let (_, world, lex) = load_world(&world)?;
            let reg = registry(&world)?;
            let lib = train_templates(&records, &reg, &lex)?;
            save_library(&lib, &path).map_err(|e| Failure::data("Io", e))?;
            w(
                out,
                format!("wrote {} templates to {}\n", lib.len(), path.display()),
            )
        }
        Command::Eval {
            corpus,
            library,
            world,
            metrics,
            gold_cq,
            flags,
        } => {
            let records = read_corpora(&corpus)?;
            let lib = load_library(library.as_deref())?;
            let (_, world, lex) = load_world(&world)?;
            let reg = registry(&world)?;
            let opts = EvalOptions {
                pipeline: flags.options(),
                gold_cq,
            };
            let m = evaluate(&records, &lib, &lex, &reg, opts);
            std::fs::write(&metrics, m.to_csv()).map_err(|e| io_failure(&metrics, e))?;
            let errors_path = metrics.with_extension("errors.json");
            let errors = serde_json::to_string_pretty(&m.errors_json()).expect("json") + "\n";
            std::fs::write(&errors_path, errors).map_err(|e| io_failure(&errors_path, e))?;
            w(out, m.to_csv())
        }
        Command::Plan {
            world,
            text,
            library,
            json,
            flags,
        } => {
            let lib = load_library(library.as_deref())?;
            let (_, world, lex) = load_world(&world)?;
            let reg = registry(&world)?;
            let outcome = ground_command(&text, &lib, &lex, &reg, flags.options());
            if let Some(e) = outcome.error {
                return Err(Failure::pipeline(e.kind(), e));
            }
            let cq = outcome.cq.expect("query present without error");
            let ltl = outcome.ltl.expect("formula present without error");
            let (_, report) =
                plan_with_report(&reg, &world.initial_state(), &ltl, &PlanOptions::default())
                    .map_err(|e| {
                        let e = crate::pipeline::PipelineError::from(e);
                        Failure::pipeline(e.kind(), e)
                    })?;
            if json {
                let v = json!({"cq": cq, "ltl": ltl.to_string(), "report": report});
                w(out, serde_json::to_string_pretty(&v).expect("json") + "\n")
            } else {
                w(
                    out,
                    format!(
                        "cq: {cq}\nltl: {ltl}\nplan: {}\nlength: {}\naccepted: {}\n",
                        report.actions.join(" "),
                        report.actions.len(),
                        report.accepted
                    ),
                )
            }
        }
        Command::Parse {
            text,
            world,
            tagger_fault,
        } => {
            let (_, _, lex) = load_world(&world)?;
            let tags = crate::frontend::tag_tokens_with(
                &text,
                &lex,
                TaggerOptions {
                    pickup_as_noun: tagger_fault,
                },
            );
            let tagged: Vec<String> = tags
                .iter()
                .map(|t| format!("{}/{:?}", t.token, t.pos))
                .collect();
            w(out, format!("tags: {}\n", tagged.join(" ")))?;
            let ex = extract(
                &text,
                &lex,
                TaggerOptions {
                    pickup_as_noun: tagger_fault,
                },
            )
            .map_err(|e| {
                let e = crate::pipeline::PipelineError::from(e);
                Failure::pipeline(e.kind(), e)
            })?;
            w(out, format!("cq: {}\n", ex.cq))
        }
        Command::Serve {
            world,
            library,
            port,
        } => {
            let lib = load_library(library.as_deref())?;
            let (id, world, lex) = load_world(&world)?;
            let entry =
                WorldEntry::new(world, lex).map_err(|e| Failure::data("InvalidWorld", e))?;
            let mut config = ServiceConfig::new(id, entry, lib);
            for extra in bundled::WORLD_IDS {
                if !config.worlds.contains_key(extra) {
                    let (w, l) = world_by_id(extra).expect("bundled id");
                    let entry =
                        WorldEntry::new(w, l).map_err(|e| Failure::data("InvalidWorld", e))?;
                    config.worlds.insert(extra.to_string(), entry);
                }
            }
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::data("Io", e))?;
            rt.block_on(serve(config, port))
                .map_err(|e| Failure::data("Io", e))
        }
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            if code == 0 {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
                let failure = Failure {
                    code,
                    kind: "Usage".into(),
                    detail: e.kind().to_string(),
                };
                let _ = writeln!(err, "{}", failure.json_line());
            }
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "{}", f.json_line());
            f.code
        }
    }
}
