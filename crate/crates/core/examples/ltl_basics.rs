//! Parses a formula, evaluates it on a finite trace and shows how
//! progression consumes the trace one step at a time.
//!
//!     cargo run --example ltl_basics -- "F ( a & F ( b ) )" "a" "" "b"

use std::collections::BTreeSet;

use groundsmith::ltl::{evaluate_trace, parse_ltl, Trace};
use groundsmith::planner::{holds_at_end, progress};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let text = args.next().unwrap_or_else(|| "F ( a & F ( b ) )".into());
    let mut steps: Vec<BTreeSet<String>> = args
        .map(|s| {
            s.split(',')
                .filter(|a| !a.is_empty())
                .map(str::to_string)
                .collect()
        })
        .collect();
    if steps.is_empty() {
        steps = vec![
            ["a"].into_iter().map(String::from).collect(),
            BTreeSet::new(),
            ["b"].into_iter().map(String::from).collect(),
        ];
    }

    let f = parse_ltl(&text)?;
    println!("formula:   {f}");
    println!("atoms:     {:?}", f.atoms());
    println!("co-safe:   {}", f.is_syntactically_cosafe());

    let mut residual = f.clone();
    for (i, step) in steps.iter().enumerate() {
        residual = progress(&residual, step);
        println!("step {i} {step:?} -> {residual}");
    }
    let trace = Trace::new(steps);
    println!(
        "satisfied (trace semantics): {}",
        evaluate_trace(&f, &trace)?
    );
    println!("satisfied (progression):     {}", holds_at_end(&residual));
    Ok(())
}
