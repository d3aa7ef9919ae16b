//! Corpus generation, template training and pipeline evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{ContextualQuery, Domain, TaskClass};
use crate::grounding::{canonical_ap_name, GroundingLexicon, PropRegistry};
use crate::ltl::{parse_ltl, Ltl, LtlFormula};
use crate::pipeline::{ground_command, PipelineError, PipelineOptions};
use crate::template::{ground_params, instantiate, learn_template, TemplateLibrary};
use crate::vocab::{Split, VocabConfig, Vocabulary};
use crate::world::{PropFn, Referent};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{class}: only {available} combinations for a target of {target}")]
    InsufficientVocabulary {
        class: TaskClass,
        available: u64,
        target: usize,
    },
    #[error("no valid training example for {0}")]
    NoValidExample(TaskClass),
    #[error("no phrasings for {0}")]
    MissingPhrasing(TaskClass),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One task description with its gold query and formula.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub split: Split,
    pub task_class: TaskClass,
    pub template_id: String,
    pub text: String,
    pub gold_cq: ContextualQuery,
    pub gold_ltl: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pool {
    Object,
    Toy,
    Color,
    Container,
    Room,
    Location,
}

/// Placeholders of each class, in parameter order.
fn slots(class: TaskClass) -> &'static [(&'static str, Pool)] {
    match class {
        TaskClass::MoveTo => &[("{object}", Pool::Object)],
        TaskClass::Pickup => &[("{toy}", Pool::Toy)],
        TaskClass::PickupColored => &[("{color}", Pool::Color), ("{toy}", Pool::Toy)],
        TaskClass::Ship => &[
            ("{toy}", Pool::Toy),
            ("{container}", Pool::Container),
            ("{room}", Pool::Room),
        ],
        TaskClass::NavigateOne => &[("{loc1}", Pool::Location)],
        TaskClass::NavigateTwo => &[("{loc1}", Pool::Location), ("{loc2}", Pool::Location)],
        TaskClass::NavigateThree => &[
            ("{loc1}", Pool::Location),
            ("{loc2}", Pool::Location),
            ("{loc3}", Pool::Location),
        ],
    }
}

pub type Phrasings = BTreeMap<TaskClass, Vec<String>>;

/// The phrasings used for the bundled corpora.
pub fn standard_phrasings() -> Phrasings {
    let p = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    BTreeMap::from([
        (
            TaskClass::MoveTo,
            p(&[
                "go to the {object}",
                "move to the {object}",
                "walk over to the {object}",
                "head towards the {object}",
            ]),
        ),
        (
            TaskClass::Pickup,
            p(&[
                "pickup the {toy}",
                "pick up the {toy}",
                "grab the {toy}",
                "lift the {toy}",
                "fetch the {toy}",
            ]),
        ),
        (
            TaskClass::PickupColored,
            p(&[
                "pick up the {color} {toy}",
                "pickup the {color} {toy}",
                "grab the {color} {toy}",
                "fetch the {color} {toy}",
                "get the {color} {toy}",
            ]),
        ),
        (
            TaskClass::Ship,
            p(&[
                "put the {toy} in the {container}, then put the {container} in the {room}",
                "place the {toy} into the {container} and then move the {container} to the {room}",
                "put the {toy} inside the {container}, then carry the {container} to the {room}",
                "drop the {toy} in the {container} then bring the {container} to the {room}",
            ]),
        ),
        (
            TaskClass::NavigateOne,
            p(&[
                "go to {loc1}",
                "go to the {loc1}",
                "visit {loc1}",
                "navigate to {loc1}",
                "head to {loc1}",
            ]),
        ),
        (
            TaskClass::NavigateTwo,
            p(&[
                "go to {loc1} and then go to {loc2}",
                "visit {loc1}, then visit {loc2}",
                "go to the {loc1} then walk to the {loc2}",
                "navigate to {loc1} and then head to {loc2}",
            ]),
        ),
        (
            TaskClass::NavigateThree,
            p(&[
                "go to {loc1}, then go to {loc2}, and then go to {loc3}",
                "visit {loc1} then visit {loc2} then visit {loc3}",
                "go to the {loc1}, then walk to the {loc2}, then head to the {loc3}",
            ]),
        ),
    ])
}

fn atom(function: PropFn, args: &[&str]) -> LtlFormula {
    Ltl::Atom(canonical_ap_name(function, args).expect("pool words are valid names"))
}

/// Gold formula of a query whose parameters are entity, room or attribute
/// names.
pub fn gold_formula(class: TaskClass, params: &[&str]) -> LtlFormula {
    match class {
        TaskClass::MoveTo => Ltl::finally(atom(PropFn::AgentAtObject, &[params[0]])),
        TaskClass::Pickup => Ltl::finally(atom(PropFn::Holding, &[params[0]])),
        TaskClass::PickupColored => Ltl::finally(Ltl::and(
            atom(PropFn::Holding, &[params[1]]),
            atom(PropFn::HasColor, &[params[1], params[0]]),
        )),
        TaskClass::Ship => {
            let inside = atom(PropFn::InContainer, &[params[0], params[1]]);
            Ltl::finally(Ltl::and(
                inside.clone(),
                Ltl::finally(Ltl::and(
                    inside,
                    atom(PropFn::ContainerInRoom, &[params[1], params[2]]),
                )),
            ))
        }
        TaskClass::NavigateOne | TaskClass::NavigateTwo | TaskClass::NavigateThree => params
            .iter()
            .rev()
            .fold(None, |inner: Option<LtlFormula>, loc| {
                let here = atom(PropFn::AgentAt, &[loc]);
                Some(Ltl::finally(match inner {
                    None => here,
                    Some(rest) => Ltl::and(here, rest),
                }))
            })
            .expect("navigation has at least one location"),
    }
}

const ENUMERATE_LIMIT: u64 = 2_000_000;

struct Space<'a> {
    phrasings: &'a [String],
    pools: Vec<Vec<&'a str>>,
}

impl<'a> Space<'a> {
    fn size(&self) -> u64 {
        self.pools
            .iter()
            .fold(self.phrasings.len() as u64, |acc, p| acc * p.len() as u64)
    }

    fn decode(&self, index: u64) -> (usize, Vec<&'a str>) {
        let n = self.phrasings.len() as u64;
        let phrasing = (index % n) as usize;
        let mut rest = index / n;
        let fill = self
            .pools
            .iter()
            .map(|pool| {
                let k = pool.len() as u64;
                let word = pool[(rest % k) as usize];
                rest /= k;
                word
            })
            .collect();
        (phrasing, fill)
    }

    fn valid(&self, index: u64) -> bool {
        let (_, fill) = self.decode(index);
        fill.iter()
            .enumerate()
            .all(|(i, a)| fill[i + 1..].iter().all(|b| a != b))
    }
}

fn class_rng(seed: u64, split: Split, class: TaskClass) -> ChaCha8Rng {
    let salt = (class as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ split as u64;
    ChaCha8Rng::seed_from_u64(seed ^ salt)
}

/// Picks `target` valid indices of the space, ascending.
fn choose(
    space: &Space,
    target: usize,
    rng: &mut ChaCha8Rng,
    class: TaskClass,
) -> Result<Vec<u64>, CorpusError> {
    let total = space.size();
    if total <= ENUMERATE_LIMIT {
        let valid: Vec<u64> = (0..total).filter(|&i| space.valid(i)).collect();
        if valid.len() < target {
            return Err(CorpusError::InsufficientVocabulary {
                class,
                available: valid.len() as u64,
                target,
            });
        }
        let mut picked: Vec<u64> = sample(rng, valid.len(), target)
            .into_iter()
            .map(|i| valid[i])
            .collect();
        picked.sort_unstable();
        return Ok(picked);
    }
    let mut picked = BTreeSet::new();
    let budget = 50 * target + 1000;
    for _ in 0..budget {
        if picked.len() == target {
            break;
        }
        let i = rng.gen_range(0..total);
        if space.valid(i) {
            picked.insert(i);
        }
    }
    if picked.len() < target {
        return Err(CorpusError::InsufficientVocabulary {
            class,
            available: picked.len() as u64,
            target,
        });
    }
    Ok(picked.into_iter().collect())
}

/// Expands phrasings with fills of pairwise-distinct words and subsamples
/// each class of `domain` to its target count. With `homonyms` off, the
/// homonym words are left out of every pool.
pub fn generate_corpus(
    cfg: &VocabConfig,
    domain: Domain,
    phrasings: &Phrasings,
    seed: u64,
    homonyms: bool,
) -> Result<Vec<CorpusRecord>, CorpusError> {
    let vocab = Vocabulary::generate(cfg);
    let words = |v: &'_ Vec<String>| -> Vec<String> {
        v.iter()
            .filter(|w| homonyms || !vocab.is_homonym(w))
            .cloned()
            .collect()
    };
    let mut object_words = words(&vocab.toys);
    object_words.extend(words(&vocab.containers));
    let pool = |p: Pool| -> Vec<String> {
        match p {
            Pool::Object => object_words.clone(),
            Pool::Toy => words(&vocab.toys),
            Pool::Color => words(&vocab.colors),
            Pool::Container => words(&vocab.containers),
            Pool::Room => words(&vocab.rooms),
            Pool::Location => words(&vocab.locations),
        }
    };

    let mut records = Vec::new();
    for class in TaskClass::of_domain(domain) {
        let target = cfg.targets.get(&class).copied().unwrap_or(0);
        if target == 0 {
            continue;
        }
        let texts = phrasings
            .get(&class)
            .filter(|p| !p.is_empty())
            .ok_or(CorpusError::MissingPhrasing(class))?;
        let owned: Vec<Vec<String>> = slots(class).iter().map(|(_, p)| pool(*p)).collect();
        let space = Space {
            phrasings: texts,
            pools: owned
                .iter()
                .map(|v| v.iter().map(String::as_str).collect())
                .collect(),
        };
        let mut rng = class_rng(seed, cfg.split, class);
        for (n, index) in choose(&space, target, &mut rng, class)?
            .into_iter()
            .enumerate()
        {
            let (p, fill) = space.decode(index);
            let mut text = texts[p].clone();
            for ((placeholder, _), word) in slots(class).iter().zip(&fill) {
                text = text.replace(placeholder, word);
            }
            records.push(CorpusRecord {
                id: format!("{}-{}-{:05}", cfg.split, class, n),
                split: cfg.split,
                task_class: class,
                template_id: format!("{class}/{p}"),
                text,
                gold_cq: ContextualQuery {
                    descriptor: class,
                    params: fill.iter().map(|w| w.to_string()).collect(),
                },
                gold_ltl: gold_formula(class, &fill).to_string(),
            });
        }
    }
    Ok(records)
}

/// Both domains of a split, homonyms off.
pub fn generate_split(split: Split, seed: u64) -> Result<Vec<CorpusRecord>, CorpusError> {
    let cfg = VocabConfig::for_split(split);
    let phrasings = standard_phrasings();
    let mut out = generate_corpus(&cfg, Domain::Manipulation, &phrasings, seed, false)?;
    out.extend(generate_corpus(
        &cfg,
        Domain::Navigation,
        &phrasings,
        seed,
        false,
    )?);
    Ok(out)
}

pub fn to_jsonl(records: &[CorpusRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl(path: impl AsRef<Path>, records: &[CorpusRecord]) -> Result<(), CorpusError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(to_jsonl(records).as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>, CorpusError> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| CorpusError::Json {
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(out)
}

/// Seeded subset of `n` records, in corpus order.
pub fn sample_training(corpus: &[CorpusRecord], n: usize, seed: u64) -> Vec<CorpusRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, corpus.len(), n.min(corpus.len())).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| corpus[i].clone()).collect()
}

fn distinct(referents: &[Referent]) -> bool {
    referents
        .iter()
        .enumerate()
        .all(|(i, a)| referents[i + 1..].iter().all(|b| a != b))
}

/// Learns one template per class from the first record whose gold query
/// grounds to distinct referents and whose formula lifts and matches.
pub fn train_templates(
    corpus: &[CorpusRecord],
    reg: &PropRegistry,
    lex: &GroundingLexicon,
) -> Result<TemplateLibrary, CorpusError> {
    let mut lib = TemplateLibrary::new();
    for class in TaskClass::ALL {
        let learned = corpus
            .iter()
            .filter(|r| r.task_class == class && r.gold_cq.descriptor == class)
            .find_map(|r| {
                let groundings = ground_params(&r.gold_cq, lex, None).ok()?;
                if !distinct(&groundings) {
                    return None;
                }
                let gold = parse_ltl(&r.gold_ltl).ok()?;
                learn_template(&r.gold_cq, &gold, reg, lex).ok()
            })
            .ok_or(CorpusError::NoValidExample(class))?;
        lib.insert(learned);
    }
    Ok(lib)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    pub pipeline: PipelineOptions,
    /// Skip the front end and instantiate the gold query.
    pub gold_cq: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PipelineResult {
    pub id: String,
    pub split: Split,
    pub task_class: TaskClass,
    pub cq: Option<ContextualQuery>,
    pub ltl: Option<String>,
    pub cq_correct: bool,
    pub ltl_correct: bool,
    pub error_kind: Option<String>,
    pub detail: Option<String>,
}

/// Kind recorded when a formula comes out but differs from the gold one.
pub const WRONG_FORMULA: &str = "WrongFormula";

pub fn run_pipeline(
    record: &CorpusRecord,
    library: &TemplateLibrary,
    lex: &GroundingLexicon,
    reg: &PropRegistry,
    opts: EvalOptions,
) -> PipelineResult {
    let (cq, ltl, error) = if opts.gold_cq {
        let res = match library.get(record.gold_cq.descriptor) {
            None => Err(PipelineError::MissingTemplate(record.gold_cq.descriptor)),
            Some(t) => instantiate(t, &record.gold_cq, reg, lex).map_err(PipelineError::from),
        };
        match res {
            Ok(f) => (Some(record.gold_cq.clone()), Some(f), None),
            Err(e) => (Some(record.gold_cq.clone()), None, Some(e)),
        }
    } else {
        let out = ground_command(&record.text, library, lex, reg, opts.pipeline);
        (out.cq, out.ltl, out.error)
    };
    let gold = parse_ltl(&record.gold_ltl);
    let ltl_correct = match (&ltl, &gold) {
        (Some(f), Ok(g)) => f == g,
        _ => false,
    };
    let (error_kind, detail) = match (&error, &gold) {
        (Some(e), _) => (Some(e.kind().to_string()), Some(e.to_string())),
        (None, Err(e)) => (Some("LtlSyntax".to_string()), Some(e.to_string())),
        (None, Ok(_)) if !ltl_correct => (
            Some(WRONG_FORMULA.to_string()),
            ltl.as_ref()
                .map(|f| format!("got {f}, expected {}", record.gold_ltl)),
        ),
        _ => (None, None),
    };
    PipelineResult {
        id: record.id.clone(),
        split: record.split,
        task_class: record.task_class,
        cq_correct: cq.as_ref() == Some(&record.gold_cq),
        cq,
        ltl: ltl.map(|f| f.to_string()),
        ltl_correct,
        error_kind,
        detail,
    }
}

/// Counts for one group of records.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub total: usize,
    pub cq_correct: usize,
    pub ltl_correct: usize,
    pub errors: BTreeMap<String, usize>,
}

impl Tally {
    fn add(&mut self, r: &PipelineResult) {
        self.total += 1;
        self.cq_correct += usize::from(r.cq_correct);
        self.ltl_correct += usize::from(r.ltl_correct);
        if let Some(k) = &r.error_kind {
            *self.errors.entry(k.clone()).or_default() += 1;
        }
    }

    fn merge(&mut self, other: &Tally) {
        self.total += other.total;
        self.cq_correct += other.cq_correct;
        self.ltl_correct += other.ltl_correct;
        for (k, n) in &other.errors {
            *self.errors.entry(k.clone()).or_default() += n;
        }
    }

    /// Fraction of records with the correct formula; zero when empty.
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.ltl_correct as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metrics {
    pub by_class: BTreeMap<(Split, TaskClass), Tally>,
    pub overall: Tally,
}

impl Metrics {
    fn add(&mut self, r: &PipelineResult) {
        self.by_class
            .entry((r.split, r.task_class))
            .or_default()
            .add(r);
        self.overall.add(r);
    }

    fn merge(&mut self, other: &Metrics) {
        for (k, t) in &other.by_class {
            self.by_class.entry(*k).or_default().merge(t);
        }
        self.overall.merge(&other.overall);
    }

    pub fn class(&self, split: Split, class: TaskClass) -> Option<&Tally> {
        self.by_class.get(&(split, class))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("split,task_class,total,cq_correct,ltl_correct,accuracy\n");
        let row = |split: &str, class: &str, t: &Tally| {
            format!(
                "{split},{class},{},{},{},{:.4}\n",
                t.total,
                t.cq_correct,
                t.ltl_correct,
                t.accuracy()
            )
        };
        for ((split, class), t) in &self.by_class {
            out.push_str(&row(split.name(), class.name(), t));
        }
        out.push_str(&row("all", "overall", &self.overall));
        out
    }

    /// Error counts by kind, overall and per class.
    pub fn errors_json(&self) -> serde_json::Value {
        let classes: Vec<serde_json::Value> = self
            .by_class
            .iter()
            .map(|((split, class), t)| {
                serde_json::json!({"split": split, "task_class": class, "errors": t.errors})
            })
            .collect();
        serde_json::json!({"overall": self.overall.errors, "classes": classes})
    }
}

/// Runs every record through the pipeline, spread across threads.
pub fn evaluate(
    corpus: &[CorpusRecord],
    library: &TemplateLibrary,
    lex: &GroundingLexicon,
    reg: &PropRegistry,
    opts: EvalOptions,
) -> Metrics {
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(8);
    let chunk = corpus.len().div_ceil(threads).max(1);
    let parts: Vec<Metrics> = std::thread::scope(|scope| {
        let handles: Vec<_> = corpus
            .chunks(chunk)
            .map(|records| {
                scope.spawn(move || {
                    let mut m = Metrics::default();
                    for r in records {
                        m.add(&run_pipeline(r, library, lex, reg, opts));
                    }
                    m
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("evaluation worker panicked"))
            .collect()
    });
    let mut metrics = Metrics::default();
    for m in &parts {
        metrics.merge(m);
    }
    metrics
}
