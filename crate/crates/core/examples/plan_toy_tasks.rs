//! Grounds the two demonstration commands on the 4x1 world and plans for
//! them with value iteration over the product MDP.
//!
//!     cargo run --release --example plan_toy_tasks ["command"]

use std::time::Instant;

use groundsmith::bundled::{library, toy_4x1, toy_4x1_lexicon};
use groundsmith::grounding::PropRegistry;
use groundsmith::pipeline::{ground_command, PipelineOptions};
use groundsmith::planner::{plan_with_report, PlanOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = toy_4x1();
    let reg = PropRegistry::build(&world)?;
    let lex = toy_4x1_lexicon();
    let lib = library();
    let mut commands: Vec<String> = std::env::args().skip(1).collect();
    if commands.is_empty() {
        commands = vec![
            "pickup the sphere".into(),
            "put the cylinder in the box, then put the box in the bedroom".into(),
        ];
    }
    for text in &commands {
        let start = Instant::now();
        let outcome = ground_command(text, &lib, &lex, &reg, PipelineOptions::default());
        println!("{text}");
        let Some(ltl) = outcome.ltl else {
            println!(
                "  error: {}",
                outcome.error.map(|e| e.to_string()).unwrap_or_default()
            );
            continue;
        };
        println!("  cq:  {}", outcome.cq.expect("query precedes formula"));
        println!("  ltl: {ltl}");
        match plan_with_report(&reg, &world.initial_state(), &ltl, &PlanOptions::default()) {
            Ok((p, report)) => {
                println!(
                    "  plan ({} actions, {} product states, V0 = {:.4}): {}",
                    p.actions.len(),
                    p.product_states,
                    p.initial_value,
                    report.actions.join(" ")
                );
                for s in report.steps.iter().skip(1) {
                    println!("    {}  remaining: {}", s.state_digest, s.spec);
                }
                println!("  accepted: {} in {:.1?}", report.accepted, start.elapsed());
            }
            Err(e) => println!("  planning failed: {e}"),
        }
    }
    Ok(())
}
