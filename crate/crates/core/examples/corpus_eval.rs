//! Generates both corpus splits, trains templates on the seen split and
//! scores the pipeline on each split, with gold queries and end to end.
//!
//!     cargo run --release --example corpus_eval [seed]

use groundsmith::corpus::{evaluate, generate_split, train_templates, EvalOptions};
use groundsmith::grounding::PropRegistry;
use groundsmith::vocab::{Split, Vocabulary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(0), |s| s.parse())?;

    let seen = Vocabulary::for_split(Split::Seen);
    let seen_reg = PropRegistry::build(&seen.world())?;
    let seen_lex = seen.lexicon();
    let seen_corpus = generate_split(Split::Seen, seed)?;
    let library = train_templates(&seen_corpus, &seen_reg, &seen_lex)?;
    println!(
        "trained {} templates on {} seen records",
        library.len(),
        seen_corpus.len()
    );
    for t in library.iter() {
        println!("  {:<15} {}", t.task_class.name(), t.lifted);
    }

    for split in [Split::Seen, Split::Unseen] {
        let vocab = Vocabulary::for_split(split);
        let reg = PropRegistry::build(&vocab.world())?;
        let lex = vocab.lexicon();
        let corpus = if split == Split::Seen {
            seen_corpus.clone()
        } else {
            generate_split(split, seed)?
        };
        for gold_cq in [true, false] {
            let opts = EvalOptions {
                gold_cq,
                ..EvalOptions::default()
            };
            let m = evaluate(&corpus, &library, &lex, &reg, opts);
            let mode = if gold_cq { "gold cq" } else { "end to end" };
            println!("\n{split} split, {mode}");
            print!("{}", m.to_csv());
            if !m.overall.errors.is_empty() {
                println!("errors: {}", m.errors_json()["overall"]);
            }
        }
    }
    Ok(())
}
