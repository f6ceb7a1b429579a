use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;
use recprover::agents::{generate_theorem_name, parse_search_queries, render_prompt, PromptKind, PromptVars};
use recprover::ast::{extract_subgoals, parse_ast, Subgoal};
use recprover::config::{Config, Limits, DEFAULT_INI};
use recprover::lean_source::*;
use recprover::proof_state::{NodeId, NodeStatus, ProofTree};
use recprover::services::{merge_hits, TheoremHit};
use recprover_testkit::{fake_ast_export, FakeLean};

fn header_line() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("import Mathlib".to_string()),
        Just("import Aesop".to_string()),
        Just("import Mathlib.Tactic".to_string()),
        Just("set_option maxHeartbeats 400000".to_string()),
        Just("set_option maxHeartbeats 0".to_string()),
        Just("open BigOperators Real Nat Topology Rat".to_string()),
        Just("open Finset".to_string()),
        Just("-- a comment".to_string()),
        Just(String::new()),
        "[a-z]{1,6}".prop_map(|s| format!("open {s}")),
    ]
}

fn header() -> impl Strategy<Value = String> {
    prop::collection::vec(header_line(), 0..8).prop_map(|l| l.join("\n"))
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,7}".prop_filter("keyword", |s| {
        !matches!(s.as_str(), "by" | "have" | "sorry" | "fun" | "do" | "at" | "in" | "if" | "then" | "else" | "let" | "show" | "from" | "with" | "match")
    })
}

proptest! {
    #[test]
    fn normalize_preamble_is_idempotent(h in header()) {
        let once = normalize_preamble(&h);
        prop_assert_eq!(&normalize_preamble(&once.render()), &once);
        // Canonical lines in order; extra imports sit between the canonical
        // imports and the other commands.
        let canon: Vec<&String> = once.lines().iter().filter(|l| CANONICAL_PREAMBLE.contains(&l.as_str())).collect();
        prop_assert_eq!(canon, CANONICAL_PREAMBLE.iter().collect::<Vec<_>>());
        let first_non_import = once.lines().iter().position(|l| !l.starts_with("import ")).unwrap();
        prop_assert!(once.lines()[first_non_import..].iter().all(|l| !l.starts_with("import ")));
        for l in h.lines().filter(|l| l.starts_with("import ") || l.starts_with("open ")) {
            prop_assert!(once.lines().iter().any(|x| x == l), "{} dropped", l);
        }
        let set: HashSet<&String> = once.lines().iter().collect();
        prop_assert_eq!(set.len(), once.lines().len());
    }

    #[test]
    fn split_then_normalize_still_verifies(h in header(), name in ident()) {
        let code = format!("{h}\n\ntheorem {name} : True := by\n  trivial\n");
        let src = split_source(&code);
        for l in src.preamble.lines() {
            prop_assert!(!["theorem", "lemma", "def", "example"].iter().any(|k| l.starts_with(k)));
        }
        prop_assert!(src.body.starts_with("theorem "));
        let unit = src.normalized().to_code();
        prop_assert!(FakeLean::new().check(&unit).complete);
    }

    #[test]
    fn extracted_body_never_starts_with_by(name in ident(), tactics in prop::collection::vec(ident(), 1..4)) {
        let proof = format!("theorem {name} : True := by\n  {}", tactics.join("\n  "));
        let body = extract_proof_body(&proof).unwrap();
        prop_assert_ne!(body.split_whitespace().next(), Some("by"));
        prop_assert_eq!(body, tactics.join("\n"));
    }

    #[test]
    fn replace_subgoal_removes_one_sorry(names in prop::collection::btree_set(ident(), 1..5), pick in any::<prop::sample::Index>(), tac in ident()) {
        let names: Vec<String> = names.into_iter().collect();
        let mut sketch = "theorem t : True := by\n".to_string();
        for n in &names {
            sketch.push_str(&format!("  have {n} : True := by\n    sorry\n"));
        }
        sketch.push_str("  trivial");
        let target = pick.get(&names);
        let out = replace_subgoal(&sketch, target, &tac).unwrap();
        prop_assert_eq!(count_sorries(&out), count_sorries(&sketch) - 1);
        let expected = format!("  have {target} : True := by\n    {tac}\n");
        prop_assert!(out.contains(&expected));
    }

    #[test]
    fn subgoals_follow_sorry_order(names in prop::collection::btree_set(ident(), 1..6), same_line in prop::collection::vec(any::<bool>(), 6)) {
        let names: Vec<String> = names.into_iter().collect();
        let mut sketch = "theorem t (n : ℕ) : True := by\n".to_string();
        for (i, n) in names.iter().enumerate() {
            if same_line[i] {
                sketch.push_str(&format!("  have {n} : n = n := by sorry\n"));
            } else {
                sketch.push_str(&format!("  have {n} : n = n := by\n    sorry\n"));
            }
        }
        sketch.push_str("  trivial\n");
        let (ast, sorries) = parse_ast(&fake_ast_export(&sketch).to_string()).unwrap();
        let subgoals = extract_subgoals(&ast, &sorries).unwrap();
        prop_assert_eq!(subgoals.len(), count_sorries(&sketch));
        let got: Vec<&String> = subgoals.iter().map(|s| &s.name).collect();
        prop_assert_eq!(got, names.iter().collect::<Vec<_>>());
        prop_assert!(subgoals.windows(2).all(|w| w[0].position < w[1].position));
        let lean = FakeLean::new();
        for s in &subgoals {
            let r = lean.check(&s.standalone_statement);
            prop_assert!(r.passed && !r.complete);
            let head = format!("theorem {} (n : ℕ)", s.name);
            prop_assert!(s.standalone_statement.starts_with(&head));
        }
    }

    #[test]
    fn query_tags_round_trip(qs in prop::collection::vec("[^<>]*[A-Za-z0-9][^<>]*", 1..6)) {
        let qs: Vec<String> = qs.into_iter().map(|q| q.trim().to_string()).collect();
        let reply: String = qs.iter().map(|q| format!("Some text\n<search>{q}</search>\n")).collect();
        prop_assert_eq!(parse_search_queries(&reply).unwrap(), qs);
    }

    #[test]
    fn rendered_prompts_have_no_markers(v in "[^{}]*") {
        let vars = PromptVars {
            formal_statement_name: Some(v.clone()),
            informal_statement: Some(v.clone()),
            formal_statement: Some(v.clone()),
            formal_theorem: Some(v.clone()),
            prev_round_num: Some(v.clone()),
            error_message_for_prev_round: Some(v.clone()),
            theorem_hints_section: Some(v.clone()),
        };
        for k in PromptKind::ALL {
            let out = render_prompt(k, &vars).unwrap();
            prop_assert!(!out.contains("{{") && !out.contains("}}"), "{:?}", k);
        }
    }

    #[test]
    fn merged_hits_are_sorted_and_unique(
        lists in prop::collection::vec(prop::collection::vec(("[a-d]", 0u32..5, prop::bool::ANY), 0..8), 0..4),
        cap in 1usize..10,
    ) {
        let lists: Vec<Vec<TheoremHit>> = lists
            .into_iter()
            .map(|l| l.into_iter().map(|(n, s, m)| TheoremHit {
                full_name: n,
                statement: String::new(),
                source_package: if m { "Mathlib".into() } else { "Other".into() },
                score: s as f64 / 4.0,
            }).collect())
            .collect();
        let filters = vec!["Mathlib".to_string()];
        let merged = merge_hits(lists.clone(), &filters, cap);
        prop_assert!(merged.len() <= cap);
        prop_assert!(merged.windows(2).all(|w| w[0].score >= w[1].score));
        let names: HashSet<&String> = merged.iter().map(|h| &h.full_name).collect();
        prop_assert_eq!(names.len(), merged.len());
        for h in &merged {
            prop_assert_eq!(&h.source_package, "Mathlib");
            let best = lists.iter().flatten().filter(|x| x.full_name == h.full_name && x.source_package == "Mathlib").map(|x| x.score).fold(f64::MIN, f64::max);
            prop_assert_eq!(h.score, best);
        }
    }
}

#[test]
fn theorem_names_are_injective_and_well_formed() {
    let mut seen = HashSet::new();
    for i in 0..200 {
        let stmt = format!("Prove that {i} + {i} = {} for natural numbers.", 2 * i);
        let name = generate_theorem_name(&stmt);
        assert_eq!(name.len(), "theorem_".len() + 12);
        assert!(name.starts_with("theorem_"));
        assert!(name["theorem_".len()..].chars().all(|c| matches!(c, '0'..='9' | 'a'..='f')));
        assert!(seen.insert(name), "collision at {i}");
    }
}

#[derive(Debug, Clone)]
enum Op {
    Decompose(usize, u8),
    Prove(usize),
    Prune(usize),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (any::<usize>(), 1u8..4).prop_map(|(i, k)| Op::Decompose(i, k)),
        any::<usize>().prop_map(Op::Prove),
        any::<usize>().prop_map(Op::Prune),
    ]
}

fn tree() -> ProofTree {
    let src = LeanSource::new(CanonicalPreamble::default().render(), "theorem t : True := by\n  sorry");
    ProofTree::new_formal(src, Limits::default())
}

proptest! {
    #[test]
    fn tree_stays_valid_under_random_operations(ops in prop::collection::vec(op(), 1..40)) {
        let mut t = tree();
        let mut fresh = 0;
        for o in ops {
            let ids: Vec<NodeId> = t.iter().map(|n| n.id).collect();
            match o {
                Op::Decompose(i, k) => {
                    let id = ids[i % ids.len()];
                    if !t.node(id).unwrap().is_leaf() || t.node(id).unwrap().status.is_terminal() {
                        continue;
                    }
                    let mut sketch = "theorem s : True := by\n".to_string();
                    let mut names = Vec::new();
                    for _ in 0..k {
                        fresh += 1;
                        names.push(format!("g{fresh}"));
                        sketch.push_str(&format!("  have g{fresh} : True := by\n    sorry\n"));
                    }
                    sketch.push_str("  trivial");
                    let n = t.node_mut(id).unwrap();
                    n.sketch = Some(sketch);
                    n.status = NodeStatus::AwaitingChildren;
                    for name in names {
                        t.add_child(id, &Subgoal::new(name, "True", vec![])).unwrap();
                    }
                }
                Op::Prove(i) => {
                    let id = ids[i % ids.len()];
                    let n = t.node(id).unwrap();
                    if !n.is_leaf() || n.status == NodeStatus::Proven {
                        continue;
                    }
                    let stmt = n.statement().to_string();
                    t.node_mut(id).unwrap().proof_attempt = Some(stmt.replace("sorry", "trivial"));
                    t.mark_proven(id).unwrap();
                }
                Op::Prune(i) => {
                    let id = ids[i % ids.len()];
                    t.prune_subtree(id).unwrap();
                }
            }
            prop_assert!(t.validate().is_ok(), "{:?}", t.validate());
            for n in t.iter() {
                for c in &n.children {
                    prop_assert!(t.node(*c).is_ok());
                }
                if let Some(a) = t.find_backtrack_ancestor(n.id).unwrap() {
                    prop_assert_ne!(a, n.id);
                    prop_assert_ne!(Some(a), n.parent);
                }
            }
            if let Ok(proof) = t.reconstruct(t.root) {
                prop_assert_eq!(count_sorries(&proof), 0);
            }
        }
    }
}

fn default_options() -> Vec<(String, String)> {
    Config::defaults()
        .sections()
        .iter()
        .flat_map(|(s, opts)| opts.keys().map(move |o| (s.clone(), o.clone())))
        .collect()
}

#[test]
fn config_precedence_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let defaults = Config::defaults();
    for (section, option) in default_options() {
        let env_key = format!("{section}__{}", option.to_ascii_uppercase());
        let file = dir.path().join("user.ini");
        std::fs::write(&file, format!("[{section}]\n{option} = from_file\n")).unwrap();
        let cases: [(bool, bool, &str); 4] = [
            (false, false, defaults.get(&section, &option).unwrap()),
            (true, false, "from_file"),
            (false, true, "from_env"),
            (true, true, "from_env"),
        ];
        for (use_file, use_env, want) in cases {
            let env: Vec<(&str, &str)> = if use_env { vec![(env_key.as_str(), "from_env")] } else { vec![] };
            let cfg = Config::load(DEFAULT_INI, use_file.then_some(file.as_path()), env).unwrap();
            assert_eq!(cfg.get(&section, &option), Some(want), "[{section}] {option} file={use_file} env={use_env}");
            // Other options keep their defaults.
            for (s, o) in default_options() {
                if (s.as_str(), o.as_str()) != (section.as_str(), option.as_str()) {
                    assert_eq!(cfg.get(&s, &o), defaults.get(&s, &o));
                }
            }
        }
    }
}

#[test]
fn config_defaults_are_the_listing() {
    assert_eq!(Config::defaults().typed_limits().unwrap(), Limits {
        formalizer_max_retries: 10,
        prover_self_correction: 2,
        prover_max_pass: 32,
        decomposer_self_correction: 6,
        max_depth: 20,
    });
}

proptest! {
    #[test]
    fn config_load_ignores_env_order_and_round_trips(
        pairs in prop::collection::vec(("[A-Z]{1,4}(_[A-Z]{1,3})?", "[A-Za-z]{1,5}", "[A-Za-z0-9:/._-]{1,12}"), 0..8),
    ) {
        let env: BTreeMap<String, String> = pairs
            .into_iter()
            .map(|(s, o, v)| (format!("{s}__{o}"), v))
            .collect();
        let fwd: Vec<(&str, &str)> = env.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        let rev: Vec<(&str, &str)> = fwd.iter().rev().copied().collect();
        let a = Config::load(DEFAULT_INI, None, fwd).unwrap();
        let b = Config::load(DEFAULT_INI, None, rev).unwrap();
        prop_assert_eq!(&a, &b);
        let again = Config::load(&a.to_ini(), None, Vec::<(&str, &str)>::new()).unwrap();
        prop_assert_eq!(again.sections(), a.sections());
    }
}
