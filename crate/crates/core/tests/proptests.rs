use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use groundsmith::bundled;
use groundsmith::corpus::{generate_split, gold_formula};
use groundsmith::frontend::{ContextualQuery, TaskClass};
use groundsmith::grounding::{GroundingLexicon, PropRegistry};
use groundsmith::ltl::{evaluate_trace, parse_ltl, simplify, Ltl, LtlFormula, Trace};
use groundsmith::planner::{holds_at_end, progress, progression_accepts};
use groundsmith::template::instantiate;
use groundsmith::vocab::{Split, Vocabulary};
use proptest::prelude::*;

const ATOMS: [&str; 4] = ["a", "b", "c", "d"];

fn formula() -> impl Strategy<Value = LtlFormula> {
    let leaf = prop_oneof![
        1 => Just(Ltl::True),
        1 => Just(Ltl::False),
        6 => prop::sample::select(&ATOMS[..]).prop_map(Ltl::atom),
    ];
    leaf.prop_recursive(5, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Ltl::not),
            inner.clone().prop_map(Ltl::finally),
            inner.clone().prop_map(Ltl::globally),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Ltl::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Ltl::or(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Ltl::until(l, r)),
        ]
    })
}

fn trace() -> impl Strategy<Value = Trace> {
    prop::collection::vec(prop::sample::subsequence(&ATOMS[..], 0..=ATOMS.len()), 1..8).prop_map(
        |steps| {
            Trace::new(
                steps
                    .into_iter()
                    .map(|s| s.into_iter().map(str::to_string).collect())
                    .collect(),
            )
        },
    )
}

proptest! {
    #[test]
    fn print_parse_round_trip(f in formula()) {
        prop_assert_eq!(parse_ltl(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn simplify_preserves_meaning(f in formula(), t in trace()) {
        let s = simplify(&f);
        prop_assert_eq!(evaluate_trace(&s, &t).unwrap(), evaluate_trace(&f, &t).unwrap());
        prop_assert_eq!(simplify(&s), s.clone());
        prop_assert!(s.leaves().len() <= f.leaves().len());
    }

    #[test]
    fn progression_decides_finite_traces(f in formula(), t in trace()) {
        prop_assert_eq!(progression_accepts(&f, &t.steps), evaluate_trace(&f, &t).unwrap());
    }

    #[test]
    fn constants_are_absorbing(labels in prop::sample::subsequence(&ATOMS[..], 0..=4)) {
        let l: BTreeSet<String> = labels.into_iter().map(str::to_string).collect();
        prop_assert_eq!(progress(&Ltl::True, &l), Ltl::True);
        prop_assert_eq!(progress(&Ltl::False, &l), Ltl::False);
        prop_assert!(holds_at_end(&Ltl::True));
    }
}

struct Unseen {
    vocab: Vocabulary,
    reg: PropRegistry,
    lex: GroundingLexicon,
}

fn unseen() -> &'static Unseen {
    static CELL: OnceLock<Unseen> = OnceLock::new();
    CELL.get_or_init(|| {
        let vocab = Vocabulary::for_split(Split::Unseen);
        let reg = PropRegistry::build(&vocab.world()).unwrap();
        let lex = vocab.lexicon();
        Unseen { vocab, reg, lex }
    })
}

fn pools(v: &Vocabulary, class: TaskClass) -> Vec<Vec<String>> {
    let objects: Vec<String> = v.toys.iter().chain(&v.containers).cloned().collect();
    match class {
        TaskClass::MoveTo => vec![objects],
        TaskClass::Pickup => vec![v.toys.clone()],
        TaskClass::PickupColored => vec![v.colors.clone(), v.toys.clone()],
        TaskClass::Ship => vec![v.toys.clone(), v.containers.clone(), v.rooms.clone()],
        TaskClass::NavigateOne => vec![v.locations.clone()],
        TaskClass::NavigateTwo => vec![v.locations.clone(); 2],
        TaskClass::NavigateThree => vec![v.locations.clone(); 3],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    // Templates learned on the seen split ground any distinct unseen fill to
    // the gold formula.
    #[test]
    fn library_templates_generalize(c in 0..7usize, picks in prop::collection::vec(any::<prop::sample::Index>(), 3)) {
        let u = unseen();
        let class = TaskClass::ALL[c];
        let params: Vec<String> = pools(&u.vocab, class)
            .iter()
            .zip(&picks)
            .map(|(pool, i)| i.get(pool).clone())
            .collect();
        let distinct: BTreeSet<&String> = params.iter().collect();
        prop_assume!(distinct.len() == params.len());
        let library = bundled::library();
        let cq = ContextualQuery::new(class, params.clone()).unwrap();
        let got = instantiate(library.get(class).unwrap(), &cq, &u.reg, &u.lex).unwrap();
        let names: Vec<&str> = params.iter().map(String::as_str).collect();
        prop_assert_eq!(got, gold_formula(class, &names));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    // Every seed yields complete, well-formed splits with the fixed sizes.
    #[test]
    fn corpus_is_complete_for_any_seed(seed in any::<u64>()) {
        for (split, total) in [(Split::Seen, 12657usize), (Split::Unseen, 2142)] {
            let corpus = generate_split(split, seed).unwrap();
            prop_assert_eq!(corpus.len(), total);
            let mut per_class: BTreeMap<TaskClass, usize> = BTreeMap::new();
            let mut ids = BTreeSet::new();
            for r in &corpus {
                prop_assert!(ids.insert(r.id.clone()), "duplicate id {}", r.id);
                prop_assert_eq!(r.split, split);
                prop_assert_eq!(r.gold_cq.descriptor, r.task_class);
                prop_assert_eq!(r.gold_cq.params.len(), r.task_class.arity());
                let distinct: BTreeSet<&String> = r.gold_cq.params.iter().collect();
                prop_assert_eq!(distinct.len(), r.gold_cq.params.len());
                for p in &r.gold_cq.params {
                    prop_assert!(r.text.split(|c: char| !c.is_alphanumeric() && c != '_').any(|w| w == p),
                        "{} missing from {}", p, r.text);
                }
                let names: Vec<&str> = r.gold_cq.params.iter().map(String::as_str).collect();
                prop_assert_eq!(parse_ltl(&r.gold_ltl).unwrap(), gold_formula(r.task_class, &names));
                *per_class.entry(r.task_class).or_default() += 1;
            }
            prop_assert_eq!(per_class.len(), 7);
        }
    }
}
