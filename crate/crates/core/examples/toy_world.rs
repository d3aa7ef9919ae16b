//! Explores the bundled 4x1 Toy world: actions, transitions, reachable
//! states against the analytic bound, and the true propositions.
//!
//!     cargo run --example toy_world

use groundsmith::bundled::{toy_4x1, toy_4x1_single};
use groundsmith::grounding::{label_state, PropRegistry};
use groundsmith::world::{
    available_actions, reachable_states, state_bound, state_digest, transition, DEFAULT_STATE_CAP,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = toy_4x1();
    let reg = PropRegistry::build(&world)?;
    let s0 = world.initial_state();
    println!("initial: {}", state_digest(&world, &s0));
    println!("true:    {:?}", label_state(&reg, &s0)?);
    println!("{} grounded propositions", reg.len());

    for a in available_actions(&world, &s0) {
        let next = transition(&world, &s0, &a)?;
        println!("  {a:<28} -> {}", state_digest(&world, &next));
    }

    for (name, w) in [("two toys", &world), ("one toy", &toy_4x1_single())] {
        let n = reachable_states(w, &w.initial_state(), DEFAULT_STATE_CAP)?.len();
        println!("{name}: {n} reachable states, bound {}", state_bound(w));
    }
    Ok(())
}
