#![allow(dead_code)]

use std::path::{Path, PathBuf};

use recprover::ast::{extract_subgoals, parse_ast};
use recprover::config::Limits;
use recprover::lean_source::{CanonicalPreamble, LeanSource};
use recprover::proof_state::{NodeId, NodeStatus, ProofTree};
use recprover_testkit::fake_ast_export;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// One reconstruction case: a sketch, a proof or nested case per child,
/// and the hand-spliced expected body.
pub struct Case {
    pub name: String,
    pub dir: PathBuf,
}

pub fn reconstruction_cases() -> Vec<Case> {
    let root = fixtures().join("reconstruction");
    let mut cases: Vec<Case> = std::fs::read_dir(&root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .map(|dir| Case {
            name: dir.file_name().unwrap().to_string_lossy().into_owned(),
            dir,
        })
        .collect();
    cases.sort_by(|a, b| a.name.cmp(&b.name));
    cases
}

/// Decompose `id` with the sketch in `dir`, creating children from the
/// exported subgoals, and prove or recurse into each one.
fn attach(tree: &mut ProofTree, id: NodeId, dir: &Path) -> usize {
    let sketch = read(&dir.join("sketch.lean"));
    let unit = tree.node(id).unwrap().unit(&sketch);
    let (ast, sorries) = parse_ast(&fake_ast_export(&unit).to_string()).unwrap();
    let subgoals = extract_subgoals(&ast, &sorries).unwrap_or_else(|e| panic!("{}: {e}", dir.display()));
    {
        let n = tree.node_mut(id).unwrap();
        n.sketch = Some(sketch);
        n.status = NodeStatus::AwaitingChildren;
    }
    let mut spliced = 0;
    for s in &subgoals {
        let child = tree.add_child(id, s).unwrap();
        let nested = dir.join("children").join(&s.name);
        if nested.is_dir() {
            spliced += attach(tree, child, &nested);
        } else {
            let proof = read(&dir.join("children").join(format!("{}.lean", s.name)));
            tree.node_mut(child).unwrap().proof_attempt = Some(proof);
            tree.mark_proven(child).unwrap();
        }
        spliced += 1;
    }
    spliced
}

/// Build the tree for a case; returns it with the number of children.
pub fn build_case(case: &Case) -> (ProofTree, usize) {
    let sketch = read(&case.dir.join("sketch.lean"));
    let statement = recprover::lean_source::statement_with_sorry(&sketch).unwrap();
    let src = LeanSource::new(CanonicalPreamble::default().render(), statement);
    let mut tree = ProofTree::new_formal(src, Limits::default());
    let root = tree.root;
    let n = attach(&mut tree, root, &case.dir);
    (tree, n)
}

pub fn expected(case: &Case) -> String {
    read(&case.dir.join("expected.lean"))
}

/// Child proof bodies that must appear in the result, from every
/// `children/*.lean` file under the case.
pub fn child_proof_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let Ok(entries) = std::fs::read_dir(dir.join("children")) else {
        return out;
    };
    for e in entries {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(child_proof_files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

// ---------------------------------------------------------------------------
// Scripted orchestrator runs shared by the integration and acceptance tests.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use recprover::orchestrator::{
    Action, ActionKind, Orchestrator, ProveOutcome, RunObserver, RunOptions, RunOutcome, RunReport,
};
use recprover::services::{AgentRole, ServiceError};
use recprover_testkit::{lean_block, prove_with, services, ChatCall, FakeLean, FakeSearch, ScriptedChat, FAIL_MARKER};

pub const BACKTRACK_SENTINEL: &str = "COMPLETELY DIFFERENT decomposition strategy";

pub struct Rig {
    pub orch: Orchestrator,
    pub chat: Arc<ScriptedChat>,
    pub lean: Arc<FakeLean>,
    pub search: Arc<FakeSearch>,
}

pub fn rig(chat: ScriptedChat, workers: usize) -> Rig {
    let chat = Arc::new(chat);
    let lean = Arc::new(FakeLean::new());
    let search = Arc::new(FakeSearch::new(vec![FakeSearch::hit("Nat.le_refl", "∀ n, n ≤ n")]));
    let opts = RunOptions {
        workers,
        ..RunOptions::default()
    };
    let orch = Orchestrator::new(services(chat.clone(), lean.clone(), search.clone()), opts);
    Rig { orch, chat, lean, search }
}

pub fn limits(prover_self_correction: u32, prover_max_pass: u32, max_depth: u32) -> Limits {
    Limits {
        prover_self_correction,
        prover_max_pass,
        max_depth,
        ..Limits::default()
    }
}

pub fn formal_tree(statement: &str, limits: Limits) -> ProofTree {
    ProofTree::new_formal(LeanSource::new(CanonicalPreamble::default().render(), statement), limits)
}

/// Tree whose root already passed the syntax check.
pub fn awaiting_proof(statement: &str, limits: Limits) -> ProofTree {
    let mut tree = formal_tree(statement, limits);
    let root = tree.root;
    let n = tree.node_mut(root).unwrap();
    n.candidate = None;
    n.status = NodeStatus::AwaitingProof;
    tree
}

pub const TRUE_THM: &str = "theorem t : True := by\n  sorry";

/// A sketch of the prompt's theorem with one `have … := by sorry` per name.
pub fn sketch_with(call: &ChatCall, names: &[String]) -> String {
    let mut tactics = String::new();
    for n in names {
        tactics.push_str(&format!("have {n} : True := by\n  sorry\n"));
    }
    tactics.push_str(&format!("exact {}", names.last().expect("at least one subgoal")));
    prove_with(call, &tactics)
}

pub fn queries_reply() -> String {
    "<search>true intro</search>\n<search>trivial proposition</search>".to_string()
}

/// Prover calls made by an always-failing prover before the node is handed
/// to decomposition.
pub async fn failing_prover_calls(limits: Limits) -> (usize, ProveOutcome) {
    let r = rig(ScriptedChat::replying(|c| prove_with(c, FAIL_MARKER)), 1);
    let mut tree = awaiting_proof(TRUE_THM, limits);
    let root = tree.root;
    let outcome = r.orch.run_prover(&mut tree, root).await;
    (r.chat.calls(AgentRole::Prover), outcome)
}

pub const EVEN_SUM_INFORMAL: &str =
    "Prove that for any natural numbers m and n, if m is even and n is even, then m + n is even.";

pub fn even_sum_formalization() -> String {
    read(&fixtures().join("lean/even_sum_formalization.lean"))
}

/// Formalizer rounds and result when the semantic checker always vetoes.
pub async fn always_inappropriate() -> (usize, usize, Result<(), recprover::proof_state::FailureReason>) {
    let formal = even_sum_formalization();
    let r = rig(
        ScriptedChat::replying(move |c| match c.role {
            AgentRole::Formalizer => lean_block(&formal),
            _ => "Thought: the hypotheses are dropped.\n\nJudgement: Inappropriate".into(),
        }),
        1,
    );
    let mut tree = ProofTree::new_informal(EVEN_SUM_INFORMAL, Limits::default());
    let root = tree.root;
    let res = r.orch.run_formalization(&mut tree, root).await;
    (r.chat.calls(AgentRole::Formalizer), r.chat.calls(AgentRole::Semantics), res)
}

pub struct BacktrackRun {
    pub report: RunReport,
    pub chat: Arc<ScriptedChat>,
    pub dispatched: Vec<(ActionKind, String)>,
}

/// Records dispatched actions by node name.
#[derive(Default)]
pub struct Recorder {
    pub actions: Mutex<Vec<(ActionKind, String)>>,
    pub violations: Mutex<Vec<String>>,
}

impl RunObserver for Recorder {
    fn on_dispatch(&self, tree: &ProofTree, batch: &[Action]) {
        for a in batch {
            let Action::Step { kind, node } = a else { continue };
            let Ok(n) = tree.node(*node) else { continue };
            let name = n.name.clone().unwrap_or_else(|| "root".into());
            self.actions.lock().unwrap().push((*kind, name.clone()));
            if *kind == ActionKind::Prove {
                if let Some(shallow) = tree
                    .iter()
                    .find(|m| m.depth < n.depth && m.status == NodeStatus::AwaitingProof)
                {
                    self.violations.lock().unwrap().push(format!(
                        "Prove({name}) at depth {} while {} at depth {} awaits proof",
                        n.depth, shallow.id, shallow.depth
                    ));
                }
            }
        }
    }
}

/// Every node up to `g3` fails to prove directly; `g1` decomposes into
/// `g2`, `g2` into `g3`, and `g3` sits at the depth limit. When `g1` is
/// asked for a different strategy it splits into `h_alt`, which proves.
pub async fn backtrack_run(max_depth: u32) -> BacktrackRun {
    let chat = ScriptedChat::replying(|c| {
        let thm = c.theorem().unwrap_or_default();
        match c.role {
            AgentRole::Prover if thm == "h_alt" => prove_with(c, "trivial"),
            AgentRole::Prover => prove_with(c, FAIL_MARKER),
            AgentRole::SearchQuery => queries_reply(),
            AgentRole::Decomposer => {
                let next = match thm.as_str() {
                    "t" => "g1",
                    "g1" if c.last_prompt().contains(BACKTRACK_SENTINEL) => "h_alt",
                    "g1" => "g2",
                    _ => "g3",
                };
                sketch_with(c, &[next.to_string()])
            }
            _ => String::new(),
        }
    });
    let recorder = Arc::new(Recorder::default());
    let mut r = rig(chat, 2);
    r.orch = r.orch.with_observer(recorder.clone());
    let report = r.orch.run(awaiting_proof(TRUE_THM, limits(1, 1, max_depth))).await;
    let dispatched = recorder.actions.lock().unwrap().clone();
    BacktrackRun {
        report,
        chat: r.chat,
        dispatched,
    }
}

fn coin(seed: u64, key: &str) -> StdRng {
    let mut h = DefaultHasher::new();
    key.hash(&mut h);
    StdRng::seed_from_u64(seed ^ h.finish())
}

/// A random but reproducible run: each theorem proves or fails and splits
/// into 1–3 subgoals according to a hash of its name and `seed`.
pub async fn random_run(seed: u64, workers: usize) -> (RunReport, Vec<String>) {
    let chat = ScriptedChat::new(move |c| {
        let thm = c.theorem().unwrap_or_else(|| "t".into());
        let mut rng = coin(seed, &thm);
        Ok(match c.role {
            AgentRole::Prover => {
                let ok = thm != "t" && rng.random_range(0..3) > 0;
                prove_with(c, if ok { "trivial" } else { FAIL_MARKER })
            }
            AgentRole::SearchQuery => queries_reply(),
            AgentRole::Decomposer => {
                let k = rng.random_range(1..=3);
                let names: Vec<String> = (0..k).map(|i| format!("{thm}_{i}")).collect();
                sketch_with(c, &names)
            }
            _ => return Err(ServiceError::EmptyRequest("unscripted role")),
        })
    });
    let recorder = Arc::new(Recorder::default());
    let mut r = rig(chat, workers);
    r.orch = r.orch.with_observer(recorder.clone());
    let report = r.orch.run(awaiting_proof(TRUE_THM, limits(1, 1, 3))).await;
    let violations = recorder.violations.lock().unwrap().clone();
    (report, violations)
}

/// Final status of every node, keyed by subgoal name.
pub fn statuses_by_name(tree: &ProofTree) -> BTreeMap<String, NodeStatus> {
    tree.iter()
        .map(|n| (n.name.clone().unwrap_or_else(|| "root".into()), n.status))
        .collect()
}

pub fn is_proved(report: &RunReport) -> bool {
    matches!(report.outcome, RunOutcome::Proved(_))
}
