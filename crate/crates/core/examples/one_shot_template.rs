//! Learns a template from a single example, prints its lifted form and
//! re-grounds it on new parameters.
//!
//!     cargo run --example one_shot_template

use groundsmith::bundled::{toy_4x1, toy_4x1_lexicon};
use groundsmith::frontend::{ContextualQuery, TaskClass};
use groundsmith::grounding::PropRegistry;
use groundsmith::ltl::parse_ltl;
use groundsmith::template::{instantiate, learn_template, TemplateLibrary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = toy_4x1();
    let reg = PropRegistry::build(&world)?;
    let lex = toy_4x1_lexicon();

    let cq = ContextualQuery::new(
        TaskClass::NavigateTwo,
        vec!["kitchen".into(), "bedroom".into()],
    )?;
    let example = parse_ltl("F ( kitchen & F ( bedroom ) )")?;
    let t = learn_template(&cq, &example, &reg, &lex)?;
    println!("example:  {cq} => {example}");
    println!("template: {}", t.lifted);
    println!("binding:  {:?}", t.binding);

    let swapped = ContextualQuery::new(
        TaskClass::NavigateTwo,
        vec!["bedroom".into(), "kitchen".into()],
    )?;
    println!(
        "reuse:    {swapped} => {}",
        instantiate(&t, &swapped, &reg, &lex)?
    );

    let same = ContextualQuery::new(
        TaskClass::NavigateTwo,
        vec!["kitchen".into(), "kitchen".into()],
    )?;
    match learn_template(
        &same,
        &parse_ltl("F ( kitchen & F ( kitchen ) )")?,
        &reg,
        &lex,
    ) {
        Ok(_) => println!("unexpected: colliding example accepted"),
        Err(e) => println!("rejected: {e}"),
    }

    let mut lib = TemplateLibrary::new();
    lib.insert(t);
    println!("\nlibrary json:\n{}", lib.to_json());
    Ok(())
}
