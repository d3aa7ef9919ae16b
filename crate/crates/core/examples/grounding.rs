//! Looks tokens up in a lexicon, with and without part-of-speech hints, and
//! shows the canonical proposition names a world exposes.
//!
//!     cargo run --example grounding [token...]

use groundsmith::bundled::world_by_id;
use groundsmith::grounding::{ground_token, LexPos, PropRegistry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (world, lex) = world_by_id("toy_seen").expect("bundled world");
    let reg = PropRegistry::build(&world)?;
    let mut tokens: Vec<String> = std::env::args().skip(1).collect();
    if tokens.is_empty() {
        tokens = vec![
            "orange".into(),
            "bag".into(),
            lex.entries()[0].token.clone(),
            "zebra".into(),
        ];
    }
    for t in &tokens {
        println!("{t}:");
        for hint in [None, Some(LexPos::Noun), Some(LexPos::Adjective)] {
            match ground_token(&lex, t, hint) {
                Ok(r) => println!("  hint {hint:?}: {r:?}"),
                Err(e) => println!("  hint {hint:?}: error {e}"),
            }
        }
    }
    println!("{} propositions, e.g.:", reg.len());
    for app in reg.applications().iter().take(8) {
        println!("  {}", app.name);
    }
    Ok(())
}
