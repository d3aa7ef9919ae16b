//! Runs the deterministic front end: part-of-speech tags, task class and
//! contextual query for each command.
//!
//!     cargo run --example extract_cq ["command" ...]

use groundsmith::bundled::toy_4x1_lexicon;
use groundsmith::frontend::{extract, tag_tokens, TaggerOptions};

fn main() {
    let lex = toy_4x1_lexicon();
    let mut commands: Vec<String> = std::env::args().skip(1).collect();
    if commands.is_empty() {
        commands = [
            "pickup the sphere",
            "pick up the red ball",
            "go to the box",
            "put the cylinder in the box, then put the box in the bedroom",
            "go to the bedroom and then go to the kitchen",
            "sing a song",
        ]
        .map(String::from)
        .to_vec();
    }
    for c in &commands {
        let tags: Vec<String> = tag_tokens(c, &lex)
            .iter()
            .map(|t| format!("{}/{:?}", t.token, t.pos))
            .collect();
        println!("{c}\n  tags: {}", tags.join(" "));
        match extract(c, &lex, TaggerOptions::default()) {
            Ok(ex) => println!("  cq:   {}", ex.cq),
            Err(e) => println!("  error: {e}"),
        }
    }
}
