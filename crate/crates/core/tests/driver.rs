//! The stop-race driver model: trace replay, bounded witness search,
//! and the refinement loop around the depth-12 error.

use sdpn_core::automata::{accepts, from_pattern};
use sdpn_core::cegar::{run_cegar, CegarOptions, Verdict};
use sdpn_core::ingest::{enumerate_pattern, parse_config_pattern, parse_sdpn, EnumBounds};
use sdpn_core::model::{
    bounded_search_strict, successors_strict, Configuration, Sdpn, StepRules,
};

fn load(name: &str) -> Sdpn {
    let path = format!("{}/../../models/{}", env!("CARGO_MANIFEST_DIR"), name);
    parse_sdpn(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn config(m: &Sdpn, text: &str) -> Configuration {
    let p = parse_config_pattern(text, m).unwrap();
    let got = enumerate_pattern(&p, m, EnumBounds::default());
    assert_eq!(got.len(), 1, "not a concrete configuration: {}", text);
    got.into_iter().next().unwrap()
}

const INIT: &str = "p0 1 0 p1 FSF p2 FSE p3 s0 p5 g0";
const TARGET: &str = "ANY* p3 R ANY* p4 A .* ANY*";

/// The twelve-step erroneous run: each step is either one internal rule
/// or a synchronized pair, with the intermediate configurations pinned.
const STEPS: &[(&[&str], &str)] = &[
    (&["r16", "r9"], "p0 1 0 p1 FSF p2 FSE p3 s0 p4 r0 p5 g0"),
    (&["r12"], "p0 1 0 p1 FSF p2 FSE p3 s0 p4 fI p5 g0"),
    (&["r6", "r18a"], "p0 1 0 p1 FSF p2 FSE p3 s0 p4 i0 p5 g0"),
    (&["r10", "r4"], "p0 1 0 p1 TSF p2 FSE p3 fD s1 p4 i0 p5 g0"),
    (&["r19s", "r2"], "p0 0 p1 TSF p2 FSE p3 d0 s1 p4 i0 p5 g0"),
    (&["r3b", "r21as"], "p0 0 p1 TSF p2 FSE p3 d1 s1 p4 i0 p5 g0"),
    (&["r18b", "r1b"], "p0 1 0 p1 TSF p2 FSE p3 d1 s1 p4 a0 p5 g0"),
    (&["r21bs", "r7"], "p0 1 0 p1 TSF p2 TSE p3 s1 p4 a0 p5 g0"),
    (&["r8", "r11"], "p0 1 0 p1 TSF p2 TSE p3 R p4 a0 p5 g0"),
    (&["r13a"], "p0 1 0 p1 TSF p2 TSE p3 R p4 rW rEW p5 g0"),
    (&["r13b"], "p0 1 0 p1 TSF p2 TSE p3 R p4 rEW p5 g0"),
    (&["r8", "r15"], "p0 1 0 p1 TSF p2 TSE p3 R p4 A p5 g0"),
];

fn step_uses_rules(m: &Sdpn, rules: &StepRules, names: &[&str]) -> bool {
    let named: Vec<&str> = match rules {
        StepRules::One { rule, .. } => vec![m.rules[rule.0 as usize].name.as_str()],
        StepRules::Sync {
            left_rule,
            right_rule,
            ..
        } => vec![
            m.rules[left_rule.0 as usize].name.as_str(),
            m.rules[right_rule.0 as usize].name.as_str(),
        ],
    };
    let mut want: Vec<&str> = names.to_vec();
    let mut got = named.clone();
    want.sort();
    got.sort();
    want == got
}

#[test]
fn erroneous_trace_replays_step_by_step() {
    let m = load("driver.sdpn");
    let mut cur = config(&m, INIT);
    for (names, expected) in STEPS {
        let expected = config(&m, expected);
        let succs = successors_strict(&m, &cur);
        let hit = succs
            .iter()
            .find(|(rules, next)| *next == expected && step_uses_rules(&m, rules, names));
        assert!(
            hit.is_some(),
            "no strict step via {:?} from {}",
            names,
            m.display_config(&cur)
        );
        cur = expected;
    }
    let target = from_pattern(&parse_config_pattern(TARGET, &m).unwrap(), &m);
    assert!(accepts(&target, &cur));
}

#[test]
fn bounded_search_finds_a_depth_twelve_witness() {
    let m = load("driver.sdpn");
    let start = std::time::Instant::now();
    let init = config(&m, INIT);
    let target = from_pattern(&parse_config_pattern(TARGET, &m).unwrap(), &m);
    let (found, stats) =
        bounded_search_strict(&m, &[init], &|c| accepts(&target, c), 12, 4_000_000).unwrap();
    let trace = found.expect("witness within twelve steps");
    assert_eq!(trace.len(), 12);
    assert!(trace.replays_under_strict(&m));
    assert!(accepts(&target, trace.end()));
    eprintln!(
        "driver search: {} nodes, {:?}",
        stats.explored,
        start.elapsed()
    );
}

#[test]
fn cegar_with_a_generous_budget_reports_reachable() {
    let m = load("driver.sdpn");
    let run = run_cegar(
        &m,
        &parse_config_pattern(INIT, &m).unwrap(),
        &parse_config_pattern(TARGET, &m).unwrap(),
        CegarOptions {
            max_order: 2,
            budget: Some(12),
            ..CegarOptions::default()
        },
    )
    .unwrap();
    match run.verdict {
        Verdict::Reachable { trace } => {
            assert_eq!(trace.len(), 12);
            assert!(trace.replays_under_strict(&m));
        }
        other => panic!("unexpected verdict {:?}", other),
    }
    // The very first order already yields an abstract counterexample.
    assert_eq!(run.rounds.len(), 1);
}

#[test]
fn cegar_low_orders_classify_counterexamples_without_crashing() {
    let m = load("driver.sdpn");
    let run = run_cegar(
        &m,
        &parse_config_pattern(INIT, &m).unwrap(),
        &parse_config_pattern(TARGET, &m).unwrap(),
        CegarOptions {
            max_order: 3,
            budget: None,
            ..CegarOptions::default()
        },
    )
    .unwrap();
    assert!(matches!(run.verdict, Verdict::Unknown { max_order: 3 }));
    assert_eq!(run.rounds.len(), 3);
    for (i, round) in run.rounds.iter().enumerate() {
        assert_eq!(round.validated_j, Some(i + 1));
        assert!(round.validation_spurious);
    }
}

#[test]
fn repaired_driver_has_no_shallow_witness() {
    let m = load("driver-fixed.sdpn");
    let init = config(&m, INIT);
    let target = from_pattern(&parse_config_pattern(TARGET, &m).unwrap(), &m);
    let (found, _) =
        bounded_search_strict(&m, &[init], &|c| accepts(&target, c), 8, 4_000_000).unwrap();
    assert!(found.is_none());
}
