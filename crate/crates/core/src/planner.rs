//! Planning for co-safe LTL goals: formula progression, the product of the
//! environment with progressed formulas, value iteration and greedy rollout.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::{label_state, GroundingError, PropRegistry};
use crate::ltl::{simplify, Ltl, LtlFormula};
use crate::world::{available_actions, state_digest, transition, Action, ToyState, WorldError};

pub const DEFAULT_GAMMA: f64 = 0.95;
pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_HORIZON: usize = 200;
pub const DEFAULT_PRODUCT_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// The goal became unsatisfiable.
    DeadEnd,
    /// No accepting product state is reachable from here.
    Unreachable,
    /// Acceptance needs more steps than the horizon allows.
    HorizonReached,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::DeadEnd => "specification became false",
            FailureReason::Unreachable => "no accepting state is reachable",
            FailureReason::HorizonReached => "horizon reached before acceptance",
        })
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error("product exceeds {cap} states")]
    StateExplosion { cap: usize },
    #[error("no plan within {horizon} steps: {reason}")]
    HorizonExceeded {
        horizon: usize,
        reason: FailureReason,
        actions: Vec<Action>,
    },
}

fn progress_raw(f: &LtlFormula, labels: &BTreeSet<String>) -> LtlFormula {
    match f {
        Ltl::True => Ltl::True,
        Ltl::False => Ltl::False,
        Ltl::Atom(a) => {
            if labels.contains(a) {
                Ltl::True
            } else {
                Ltl::False
            }
        }
        Ltl::Not(c) => Ltl::not(progress_raw(c, labels)),
        Ltl::And(l, r) => Ltl::and(progress_raw(l, labels), progress_raw(r, labels)),
        Ltl::Or(l, r) => Ltl::or(progress_raw(l, labels), progress_raw(r, labels)),
        Ltl::Finally(c) => Ltl::or(progress_raw(c, labels), f.clone()),
        Ltl::Globally(c) => Ltl::and(progress_raw(c, labels), f.clone()),
        Ltl::Until(l, r) => Ltl::or(
            progress_raw(r, labels),
            Ltl::and(progress_raw(l, labels), f.clone()),
        ),
    }
}

/// The obligation left for the rest of a trace after a step labelled
/// `labels`, simplified.
pub fn progress(f: &LtlFormula, labels: &BTreeSet<String>) -> LtlFormula {
    simplify(&progress_raw(f, labels))
}

/// Whether a residual obligation holds once the trace has ended: pending
/// eventualities fail and pending invariants hold.
pub fn holds_at_end(f: &LtlFormula) -> bool {
    match f {
        Ltl::True | Ltl::Globally(_) => true,
        Ltl::False | Ltl::Atom(_) | Ltl::Finally(_) | Ltl::Until(..) => false,
        Ltl::Not(c) => !holds_at_end(c),
        Ltl::And(l, r) => holds_at_end(l) && holds_at_end(r),
        Ltl::Or(l, r) => holds_at_end(l) || holds_at_end(r),
    }
}

/// Finite-trace satisfaction decided by progression: progress through every
/// step, then check the residual at the end of the trace.
pub fn progression_accepts(f: &LtlFormula, trace: &[BTreeSet<String>]) -> bool {
    let residual = trace.iter().fold(f.clone(), |g, step| progress(&g, step));
    holds_at_end(&residual)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductState {
    pub env: ToyState,
    pub spec: LtlFormula,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub action: Action,
    pub next: usize,
    pub reward: f64,
}

/// Reachable part of the product of a world with a specification.
#[derive(Debug, Clone)]
pub struct ProductMdp {
    pub states: Vec<ProductState>,
    pub edges: Vec<Vec<Edge>>,
    pub initial: usize,
}

impl ProductMdp {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Distinct specification components.
    pub fn specs(&self) -> BTreeSet<&LtlFormula> {
        self.states.iter().map(|s| &s.spec).collect()
    }

    pub fn is_accepting(&self, i: usize) -> bool {
        self.states[i].spec.is_true()
    }
}

/// Builds the product by breadth-first search from `s0`. The specification
/// is progressed through the label of `s0` first, so the initial product
/// state already accounts for what holds at the start.
pub fn build_product(
    reg: &PropRegistry,
    s0: &ToyState,
    spec: &LtlFormula,
    cap: usize,
) -> Result<ProductMdp, PlanError> {
    let world = reg.world();
    world.check_state(s0)?;
    for a in spec.atoms() {
        if !reg.contains(&a) {
            return Err(GroundingError::UnresolvableAP(a).into());
        }
    }
    let mut labels: HashMap<ToyState, BTreeSet<String>> = HashMap::new();
    let mut label = |s: &ToyState| -> Result<BTreeSet<String>, PlanError> {
        if let Some(l) = labels.get(s) {
            return Ok(l.clone());
        }
        let l = label_state(reg, s)?;
        labels.insert(s.clone(), l.clone());
        Ok(l)
    };

    let start = ProductState {
        env: s0.clone(),
        spec: progress(spec, &label(s0)?),
    };
    let mut index: HashMap<ProductState, usize> = HashMap::new();
    let mut states = vec![start.clone()];
    let mut edges: Vec<Vec<Edge>> = vec![Vec::new()];
    index.insert(start, 0);
    let mut queue = VecDeque::from([0usize]);

    while let Some(i) = queue.pop_front() {
        let cur = states[i].clone();
        let terminal = cur.spec.is_true() || cur.spec.is_false();
        let mut out = Vec::new();
        for action in available_actions(world, &cur.env) {
            if terminal {
                out.push(Edge {
                    action,
                    next: i,
                    reward: 0.0,
                });
                continue;
            }
            let env = transition(world, &cur.env, &action)?;
            let spec = progress(&cur.spec, &label(&env)?);
            let reward = if spec.is_true() { 1.0 } else { 0.0 };
            let key = ProductState { env, spec };
            let next = match index.get(&key) {
                Some(&j) => j,
                None => {
                    let j = states.len();
                    if j >= cap {
                        return Err(PlanError::StateExplosion { cap });
                    }
                    states.push(key.clone());
                    edges.push(Vec::new());
                    index.insert(key, j);
                    queue.push_back(j);
                    j
                }
            };
            out.push(Edge {
                action,
                next,
                reward,
            });
        }
        edges[i] = out;
    }
    Ok(ProductMdp {
        states,
        edges,
        initial: 0,
    })
}

/// One synchronous Bellman backup.
pub fn bellman_sweep(product: &ProductMdp, gamma: f64, values: &[f64]) -> Vec<f64> {
    product
        .edges
        .iter()
        .map(|out| {
            out.iter()
                .map(|e| e.reward + gamma * values[e.next])
                .fold(0.0, f64::max)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub values: Vec<f64>,
    pub sweeps: usize,
}

/// Sweeps from zero until the largest change drops below `epsilon`.
pub fn value_iterate(product: &ProductMdp, gamma: f64, epsilon: f64) -> ValueTable {
    let mut values = vec![0.0; product.len()];
    let mut sweeps = 0;
    loop {
        let next = bellman_sweep(product, gamma, &values);
        sweeps += 1;
        let delta = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        values = next;
        if delta < epsilon {
            return ValueTable { values, sweeps };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    pub gamma: f64,
    pub epsilon: f64,
    pub horizon: usize,
    pub state_cap: usize,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            gamma: DEFAULT_GAMMA,
            epsilon: DEFAULT_EPSILON,
            horizon: DEFAULT_HORIZON,
            state_cap: DEFAULT_PRODUCT_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub actions: Vec<Action>,
    /// Visited product states, starting with the initial one.
    pub steps: Vec<ProductState>,
    pub accepted: bool,
    pub initial_value: f64,
    pub product_states: usize,
}

/// Greedy rollout of the value table. Ties go to the earliest action in
/// [`available_actions`] order.
pub fn rollout(
    product: &ProductMdp,
    table: &ValueTable,
    gamma: f64,
    horizon: usize,
) -> Result<Plan, PlanError> {
    let mut x = product.initial;
    let mut actions = Vec::new();
    let mut steps = vec![product.states[x].clone()];
    while !product.is_accepting(x) {
        if table.values[x] <= 0.0 {
            let reason = if product.states[x].spec.is_false() {
                FailureReason::DeadEnd
            } else {
                FailureReason::Unreachable
            };
            return Err(PlanError::HorizonExceeded {
                horizon,
                reason,
                actions,
            });
        }
        if actions.len() >= horizon {
            return Err(PlanError::HorizonExceeded {
                horizon,
                reason: FailureReason::HorizonReached,
                actions,
            });
        }
        let mut best: Option<(&Edge, f64)> = None;
        for e in &product.edges[x] {
            let q = e.reward + gamma * table.values[e.next];
            if best.is_none_or(|(_, b)| q > b + 1e-12) {
                best = Some((e, q));
            }
        }
        let (edge, _) = best.expect("non-terminal states have actions");
        actions.push(edge.action.clone());
        x = edge.next;
        steps.push(product.states[x].clone());
    }
    Ok(Plan {
        actions,
        steps,
        accepted: true,
        initial_value: table.values[product.initial],
        product_states: product.len(),
    })
}

/// Plans for `spec` from `s0`.
pub fn plan(
    reg: &PropRegistry,
    s0: &ToyState,
    spec: &LtlFormula,
    opts: &PlanOptions,
) -> Result<Plan, PlanError> {
    let product = build_product(reg, s0, spec, opts.state_cap)?;
    let table = value_iterate(&product, opts.gamma, opts.epsilon);
    rollout(&product, &table, opts.gamma, opts.horizon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub state_digest: String,
    pub spec: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub actions: Vec<String>,
    pub steps: Vec<StepReport>,
    pub accepted: bool,
    pub wall_time_ms: u64,
}

impl PlanReport {
    pub fn new(reg: &PropRegistry, plan: &Plan, wall_time_ms: u64) -> Self {
        PlanReport {
            actions: plan.actions.iter().map(|a| a.to_string()).collect(),
            steps: plan
                .steps
                .iter()
                .map(|s| StepReport {
                    state_digest: state_digest(reg.world(), &s.env),
                    spec: s.spec.to_string(),
                })
                .collect(),
            accepted: plan.accepted,
            wall_time_ms,
        }
    }
}

/// Plans and times the whole run.
pub fn plan_with_report(
    reg: &PropRegistry,
    s0: &ToyState,
    spec: &LtlFormula,
    opts: &PlanOptions,
) -> Result<(Plan, PlanReport), PlanError> {
    let started = Instant::now();
    let p = plan(reg, s0, spec, opts)?;
    let report = PlanReport::new(reg, &p, started.elapsed().as_millis() as u64);
    Ok((p, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{evaluate_trace, parse_ltl, Trace};
    use crate::world::{ContainerSpec, Direction, RoomSpec, ToySpec, WorldConfig};

    fn labels(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn line_world() -> WorldConfig {
        WorldConfig {
            grid_width: 4,
            grid_height: 1,
            toys: vec![
                ToySpec {
                    id: "toy_cylinder".into(),
                    name: Some("cylinder".into()),
                    shape: "cylinder".into(),
                    color: "blue".into(),
                    start: 1,
                },
                ToySpec {
                    id: "toy_sphere".into(),
                    name: Some("sphere".into()),
                    shape: "sphere".into(),
                    color: "red".into(),
                    start: 3,
                },
            ],
            containers: vec![ContainerSpec {
                id: "container_box".into(),
                name: Some("box".into()),
                kind: "box".into(),
                start: 0,
            }],
            rooms: vec![
                RoomSpec {
                    id: "room_kitchen".into(),
                    name: Some("kitchen".into()),
                    cells: [0, 1].into(),
                },
                RoomSpec {
                    id: "room_bedroom".into(),
                    name: Some("bedroom".into()),
                    cells: [2, 3].into(),
                },
            ],
            agent_start: 0,
            gamma: 0.95,
            colors: vec![],
            shapes: vec![],
        }
    }

    #[test]
    fn progression_rules() {
        let f = parse_ltl("F ( a )").unwrap();
        assert_eq!(progress(&f, &labels(&["a"])), Ltl::True);
        assert_eq!(progress(&f, &labels(&[])), f);
        let g = parse_ltl("G ( a )").unwrap();
        assert_eq!(progress(&g, &labels(&["a"])), g);
        assert_eq!(progress(&g, &labels(&[])), Ltl::False);
        let u = parse_ltl("a U b").unwrap();
        assert_eq!(progress(&u, &labels(&["b"])), Ltl::True);
        assert_eq!(progress(&u, &labels(&["a"])), u);
        assert_eq!(progress(&u, &labels(&[])), Ltl::False);
        let seq = parse_ltl("F ( a & F ( b ) )").unwrap();
        assert_eq!(
            progress(&seq, &labels(&["a"])).to_string(),
            "( F ( b ) | F ( a & F ( b ) ) )"
        );
    }

    #[test]
    fn end_of_trace_acceptance() {
        let cases = [
            ("F ( a )", vec![labels(&[]), labels(&["a"])], true),
            ("F ( a )", vec![labels(&[])], false),
            ("! F ( a )", vec![labels(&[]), labels(&[])], true),
            ("G ( a )", vec![labels(&["a"]), labels(&["a"])], true),
            ("a U b", vec![labels(&["a"])], false),
            ("! ( a U b )", vec![labels(&["a"])], true),
        ];
        for (text, trace, want) in cases {
            let f = parse_ltl(text).unwrap();
            assert_eq!(progression_accepts(&f, &trace), want, "{text}");
        }
    }

    #[test]
    fn progression_is_stable_under_repeated_labels() {
        let seq = parse_ltl("F ( a & F ( b ) )").unwrap();
        let once = progress(&seq, &labels(&["a"]));
        assert_eq!(progress(&once, &labels(&["a"])), once);
        assert_eq!(progress(&once, &labels(&["b"])), Ltl::True);
    }

    #[test]
    fn pickup_plan_on_line_world() {
        let reg = PropRegistry::build(&line_world()).unwrap();
        let s0 = reg.world().initial_state();
        let p = plan(
            &reg,
            &s0,
            &parse_ltl("F ( holding_sphere )").unwrap(),
            &PlanOptions::default(),
        )
        .unwrap();
        let east = Action::Move(Direction::East);
        assert_eq!(
            p.actions,
            vec![
                east.clone(),
                east.clone(),
                east,
                Action::Pickup("toy_sphere".into())
            ]
        );
        assert!((p.initial_value - 0.95f64.powi(3)).abs() < 1e-9);
        assert!(p.steps.last().unwrap().spec.is_true());
    }

    #[test]
    fn plan_trace_satisfies_spec() {
        let reg = PropRegistry::build(&line_world()).unwrap();
        let s0 = reg.world().initial_state();
        let spec =
            parse_ltl("F ( cylinder_in_box & F ( cylinder_in_box & box_in_bedroom ) )").unwrap();
        let p = plan(&reg, &s0, &spec, &PlanOptions::default()).unwrap();
        let trace = Trace::new(
            p.steps
                .iter()
                .map(|s| label_state(&reg, &s.env).unwrap())
                .collect(),
        );
        assert!(evaluate_trace(&spec, &trace).unwrap());
    }

    #[test]
    fn already_satisfied_is_empty_plan() {
        let reg = PropRegistry::build(&line_world()).unwrap();
        let s0 = reg.world().initial_state();
        let p = plan(
            &reg,
            &s0,
            &parse_ltl("F ( kitchen )").unwrap(),
            &PlanOptions::default(),
        )
        .unwrap();
        assert!(p.actions.is_empty());
        assert_eq!(p.product_states, 1);
    }

    #[test]
    fn unsatisfiable_and_horizon() {
        let reg = PropRegistry::build(&line_world()).unwrap();
        let s0 = reg.world().initial_state();
        let dead = parse_ltl("G ( bedroom )").unwrap();
        assert!(matches!(
            plan(&reg, &s0, &dead, &PlanOptions::default()),
            Err(PlanError::HorizonExceeded {
                reason: FailureReason::DeadEnd,
                ..
            })
        ));
        let never = parse_ltl("F ( sphere_is_blue )").unwrap();
        assert!(matches!(
            plan(&reg, &s0, &never, &PlanOptions::default()),
            Err(PlanError::HorizonExceeded {
                reason: FailureReason::Unreachable,
                ..
            })
        ));
        let opts = PlanOptions {
            horizon: 2,
            ..PlanOptions::default()
        };
        assert!(matches!(
            plan(
                &reg,
                &s0,
                &parse_ltl("F ( holding_sphere )").unwrap(),
                &opts
            ),
            Err(PlanError::HorizonExceeded {
                reason: FailureReason::HorizonReached,
                ..
            })
        ));
    }

    #[test]
    fn unknown_atom_is_rejected() {
        let reg = PropRegistry::build(&line_world()).unwrap();
        let s0 = reg.world().initial_state();
        assert!(matches!(
            plan(
                &reg,
                &s0,
                &parse_ltl("F ( moon )").unwrap(),
                &PlanOptions::default()
            ),
            Err(PlanError::Grounding(GroundingError::UnresolvableAP(_)))
        ));
    }

    #[test]
    fn product_cap() {
        let reg = PropRegistry::build(&line_world()).unwrap();
        let s0 = reg.world().initial_state();
        let spec = parse_ltl("F ( holding_sphere )").unwrap();
        assert!(matches!(
            build_product(&reg, &s0, &spec, 5),
            Err(PlanError::StateExplosion { cap: 5 })
        ));
    }

    #[test]
    fn values_rise_monotonically_and_stay_bounded() {
        let reg = PropRegistry::build(&line_world()).unwrap();
        let s0 = reg.world().initial_state();
        let spec = parse_ltl("F ( cylinder_in_box & F ( box_in_bedroom ) )").unwrap();
        let product = build_product(&reg, &s0, &spec, DEFAULT_PRODUCT_CAP).unwrap();
        let mut v = vec![0.0; product.len()];
        for _ in 0..60 {
            let next = bellman_sweep(&product, 0.95, &v);
            for (a, b) in next.iter().zip(&v) {
                assert!(a + 1e-12 >= *b);
                assert!(*a <= 1.0 + 1e-12);
            }
            v = next;
        }
    }

    #[test]
    fn report_shape() {
        let reg = PropRegistry::build(&line_world()).unwrap();
        let s0 = reg.world().initial_state();
        let (_, report) = plan_with_report(
            &reg,
            &s0,
            &parse_ltl("F ( holding_sphere )").unwrap(),
            &PlanOptions::default(),
        )
        .unwrap();
        assert_eq!(report.actions[0], "Move(east)");
        assert_eq!(report.actions[3], "Pickup(toy_sphere)");
        assert_eq!(report.steps.len(), 5);
        assert_eq!(report.steps[4].spec, "true");
        let v = serde_json::to_value(&report).unwrap();
        for key in ["actions", "steps", "accepted", "wall_time_ms"] {
            assert!(v.get(key).is_some());
        }
    }
}
