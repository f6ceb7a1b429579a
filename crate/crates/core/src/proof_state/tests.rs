use super::*;
use crate::agents::generate_theorem_name;
use crate::lean_source::{split_source, CanonicalPreamble};
use crate::services::AgentRole;

const B6_SKETCH: &str = include_str!("../../tests/fixtures/lean/b6_sketch.lean");

fn formal_tree(statement: &str) -> ProofTree {
    let src = LeanSource::new(CanonicalPreamble::default().render(), statement);
    ProofTree::new_formal(src, Limits::default())
}

/// Give `id` a sketch and one child per name.
fn decompose(tree: &mut ProofTree, id: NodeId, sketch: &str, names: &[&str]) -> Vec<NodeId> {
    let node = tree.node_mut(id).unwrap();
    node.sketch = Some(sketch.to_string());
    node.status = NodeStatus::AwaitingChildren;
    names
        .iter()
        .map(|n| tree.add_child(id, &Subgoal::new(*n, "True", vec![])).unwrap())
        .collect()
}

fn prove(tree: &mut ProofTree, id: NodeId, proof: &str) {
    tree.node_mut(id).unwrap().proof_attempt = Some(proof.to_string());
    tree.mark_proven(id).unwrap();
}

fn chain(len: usize) -> (ProofTree, Vec<NodeId>) {
    let mut tree = formal_tree("theorem t : True := by\n  sorry");
    let mut ids = vec![tree.root];
    for i in 1..len {
        let parent = *ids.last().unwrap();
        let c = decompose(&mut tree, parent, "theorem t : True := by\n  have g : True := by\n    sorry\n  exact g", &["g"]);
        assert_eq!(tree.node(c[0]).unwrap().depth as usize, i);
        ids.push(c[0]);
    }
    (tree, ids)
}

#[test]
fn add_child_depth_and_order() {
    let mut tree = formal_tree("theorem t : True := by\n  sorry");
    let root = tree.root;
    assert_eq!(
        tree.add_child(root, &Subgoal::new("a", "True", vec![])),
        Err(TreeError::NoSketch(root))
    );
    let names = ["prod_primes_def", "choose_P", "prime_divisor_exists", "divisor_gt_n", "conclusion"];
    let kids = decompose(&mut tree, root, "sketch", &names);
    let got: Vec<&str> = kids.iter().map(|k| tree.node(*k).unwrap().name.as_deref().unwrap()).collect();
    assert_eq!(got, names);
    let c = tree.node(kids[0]).unwrap();
    assert_eq!((c.depth, c.status), (1, NodeStatus::AwaitingProof));
    assert_eq!(c.preamble(), tree.root_node().preamble());
    assert_eq!(c.statement(), "theorem prod_primes_def : True := by\n  sorry");
    assert_eq!(
        tree.add_child(NodeId(99), &Subgoal::new("a", "True", vec![])),
        Err(TreeError::UnknownNode(NodeId(99)))
    );
    tree.validate().unwrap();
}

fn fail(role: AgentRole) -> Attempt {
    Attempt::new(role, "p", "r", Outcome::Failure)
}

#[test]
fn prover_counters() {
    let mut tree = formal_tree("theorem t : True := by\n  sorry");
    let r = tree.root;
    tree.record_attempt(r, fail(AgentRole::Prover)).unwrap();
    assert_eq!(tree.root_node().counters.self_correction_in_pass, 1);
    tree.record_attempt(r, fail(AgentRole::Prover)).unwrap();
    let c = tree.root_node().counters;
    assert_eq!((c.self_correction_in_pass, c.passes_used), (0, 1));
    tree.record_attempt(r, Attempt::new(AgentRole::Prover, "p", "r", Outcome::Success)).unwrap();
    assert_eq!(tree.root_node().counters, c);
    assert_eq!(tree.root_node().conversation.len(), 3);
    for _ in 0..200 {
        tree.record_attempt(r, fail(AgentRole::Prover)).unwrap();
    }
    assert_eq!(tree.root_node().counters.passes_used, 32);
    tree.validate().unwrap();
}

#[test]
fn other_counters_clamp() {
    let mut tree = formal_tree("theorem t : True := by\n  sorry");
    let r = tree.root;
    for _ in 0..15 {
        tree.record_attempt(r, fail(AgentRole::Semantics)).unwrap();
        tree.record_attempt(r, fail(AgentRole::Decomposer)).unwrap();
        tree.record_attempt(r, fail(AgentRole::SearchQuery)).unwrap();
        tree.record_attempt(r, Attempt::new(AgentRole::Formalizer, "", "", Outcome::Pending)).unwrap();
    }
    let c = tree.root_node().counters;
    assert_eq!(c.formalize_retries, 10);
    assert_eq!(c.sketch_corrections_used, 6);
    assert_eq!((c.passes_used, c.self_correction_in_pass), (0, 0));
    assert_eq!(tree.record_attempt(NodeId(7), fail(AgentRole::Prover)), Err(TreeError::UnknownNode(NodeId(7))));
}

#[test]
fn backtrack_ancestor_rules() {
    let (mut tree, ids) = chain(21);
    let leaf = ids[20];
    tree.node_mut(ids[18]).unwrap().counters.sketch_corrections_used = 1;
    assert_eq!(tree.find_backtrack_ancestor(leaf).unwrap(), Some(ids[18]));
    assert_eq!(tree.find_backtrack_ancestor(tree.root).unwrap(), None);
    assert_eq!(tree.find_backtrack_ancestor(ids[1]).unwrap(), None);

    let (mut tree, ids) = chain(5);
    tree.node_mut(ids[2]).unwrap().counters.sketch_corrections_used = 6;
    assert_eq!(tree.find_backtrack_ancestor(ids[4]).unwrap(), Some(ids[1]));
    tree.node_mut(ids[1]).unwrap().counters.decompositions_used = 6;
    assert_eq!(tree.find_backtrack_ancestor(ids[4]).unwrap(), Some(ids[0]));
    tree.node_mut(ids[0]).unwrap().counters.sketch_corrections_used = 6;
    assert_eq!(tree.find_backtrack_ancestor(ids[4]).unwrap(), None);
}

#[test]
fn prune_cases() {
    let mut tree = formal_tree("theorem t : True := by\n  sorry");
    let root = tree.root;
    let kids = decompose(&mut tree, root, "s", &["a", "b", "c", "d", "e"]);
    tree.prune_subtree(root).unwrap();
    let r = tree.root_node();
    assert!(r.children.is_empty() && r.sketch.is_none() && r.backtracked);
    assert_eq!(r.status, NodeStatus::AwaitingQueryGen);
    assert_eq!(r.counters.decompositions_used, 1);
    assert!(kids.iter().all(|k| tree.node(*k).is_err()));
    tree.validate().unwrap();

    // Leaf: only the status and flags change.
    tree.prune_subtree(root).unwrap();
    assert_eq!(tree.len(), 1);

    // Three levels: root -> 2 -> 2 each -> 1 under the first grandchild.
    let mut tree = formal_tree("theorem t : True := by\n  sorry");
    let root = tree.root;
    let l1 = decompose(&mut tree, root, "s", &["a", "b"]);
    let l2a = decompose(&mut tree, l1[0], "s", &["c", "d"]);
    decompose(&mut tree, l1[1], "s", &["e", "f"]);
    decompose(&mut tree, l2a[0], "s", &["g"]);
    assert_eq!(tree.len(), 8);
    tree.prune_subtree(l1[0]).unwrap();
    assert_eq!(tree.len(), 5);
    tree.validate().unwrap();
    assert_eq!(tree.prune_subtree(NodeId(100)), Err(TreeError::UnknownNode(NodeId(100))));
}

#[test]
fn proven_propagates_only_when_all_children_done() {
    let mut tree = formal_tree("theorem t : True := by\n  sorry");
    let root = tree.root;
    let kids = decompose(&mut tree, root, "s", &["a", "b"]);
    prove(&mut tree, kids[0], "theorem a : True := by\n  trivial");
    assert_eq!(tree.root_node().status, NodeStatus::AwaitingChildren);
    prove(&mut tree, kids[1], "theorem b : True := by\n  trivial");
    assert_eq!(tree.root_node().status, NodeStatus::Proven);
}

#[test]
fn reconstruct_leaf_verbatim() {
    let mut tree = formal_tree("theorem t : True := by\n  sorry");
    let root = tree.root;
    prove(&mut tree, root, "theorem t : True := by\n  trivial");
    assert_eq!(tree.reconstruct_body(root).unwrap(), "theorem t : True := by\n  trivial");
    let full = tree.reconstruct(root).unwrap();
    assert!(full.starts_with("import Mathlib\nimport Aesop\n"));
    assert!(full.ends_with("theorem t : True := by\n  trivial\n"));
}

#[test]
fn reconstruct_b6_sketch() {
    let mut tree = formal_tree("theorem induction_ineq_nsqlefactn (n : ℕ) (h : 4 ≤ n) : n ^ 2 ≤ n ! := by\n  sorry");
    let root = tree.root;
    let kids = decompose(&mut tree, root, B6_SKETCH, &["base_case", "inductive_step", "final_proof"]);
    prove(&mut tree, kids[0], "theorem base_case : 4 ^ 2 ≤ 4 ! := by\n  decide");
    prove(
        &mut tree,
        kids[1],
        "theorem inductive_step : ∀ k ≥ 4, k ^ 2 ≤ k ! → (k + 1) ^ 2 ≤ (k + 1) ! := by\n  intro k hk ih\n  nlinarith [Nat.factorial_succ k]",
    );
    assert!(matches!(tree.reconstruct(root), Err(TreeError::IncompleteSubtree(_))));
    prove(
        &mut tree,
        kids[2],
        "theorem final_proof : ∀ n ≥ 4, n ^ 2 ≤ n ! := by\n  exact fun n hn => Nat.le_induction base_case inductive_step n hn",
    );
    let body = tree.reconstruct_body(root).unwrap();
    let golden = "theorem induction_ineq_nsqlefactn (n : ℕ) (h : 4 ≤ n) : n ^ 2 ≤ n ! := by
  -- Base case
  have base_case : 4 ^ 2 ≤ 4 ! := by
    decide

  -- Inductive step
  have inductive_step : ∀ k ≥ 4, k ^ 2 ≤ k ! → (k + 1) ^ 2 ≤ (k + 1) ! := by
    intro k hk ih
    nlinarith [Nat.factorial_succ k]

  -- Combine base case and inductive step
  have final_proof : ∀ n ≥ 4, n ^ 2 ≤ n ! := by
    exact fun n hn => Nat.le_induction base_case inductive_step n hn
";
    assert_eq!(body, golden);
    assert_eq!(count_sorries(&body), 0);
}

#[test]
fn reconstruct_rejects_residual_sorry() {
    let mut tree = formal_tree("theorem t : True := by\n  sorry");
    let root = tree.root;
    prove(&mut tree, root, "theorem t : True := by\n  exact sorry");
    assert_eq!(
        tree.reconstruct(root),
        Err(TreeError::ResidualSorry { node: root, count: 1 })
    );
}

#[test]
fn checkpoint_round_trip() {
    let mut tree = ProofTree::new_informal("Prove that 1 + 1 = 2.", Limits::default());
    tree.node_mut(tree.root).unwrap().formal = Some(split_source(
        "import Mathlib\nimport Aesop\n\nset_option maxHeartbeats 0\n\nopen BigOperators Real Nat Topology Rat\n\ntheorem theorem_x : 1 + 1 = 2 := by\n  sorry",
    ));
    let root = tree.root;
    decompose(&mut tree, root, "s", &["a"]);
    tree.record_attempt(root, fail(AgentRole::Decomposer)).unwrap();
    let json = tree.to_checkpoint_json();
    let back = ProofTree::from_checkpoint_json(&json).unwrap();
    assert_eq!(back, tree);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["version"], 1);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("checkpoint.json");
    tree.save_checkpoint(&path).unwrap();
    assert_eq!(ProofTree::load_checkpoint(&path).unwrap(), tree);

    let wrong = json.replacen("\"version\": 1", "\"version\": 2", 1);
    assert!(matches!(ProofTree::from_checkpoint_json(&wrong), Err(TreeError::Checkpoint(_))));
    assert!(ProofTree::from_checkpoint_json("{}").is_err());
}

#[test]
fn validator_catches_corruption() {
    let mut tree = formal_tree("theorem t : True := by\n  sorry");
    let root = tree.root;
    let kids = decompose(&mut tree, root, "s", &["a"]);
    let mut t = tree.clone();
    t.node_mut(kids[0]).unwrap().depth = 5;
    assert!(t.validate().is_err());
    let mut t = tree.clone();
    t.node_mut(root).unwrap().sketch = None;
    assert!(t.validate().is_err());
    let mut t = tree.clone();
    t.node_mut(root).unwrap().children.clear();
    assert!(t.validate().is_err());
    let mut t = tree.clone();
    t.node_mut(root).unwrap().counters.passes_used = 33;
    assert!(t.validate().is_err());
}

#[test]
fn triples_from_proven_nodes() {
    let statement = "Prove that 1 + 1 = 2.";
    let name = generate_theorem_name(statement);
    let mut tree = ProofTree::new_informal(statement, Limits::default());
    let root = tree.root;
    tree.node_mut(root).unwrap().formal = Some(LeanSource::new(
        CanonicalPreamble::default().render(),
        format!("theorem {name} : 1 + 1 = 2 := by\n  sorry"),
    ));
    assert!(tree.training_triples().is_empty());
    prove(&mut tree, root, &format!("theorem {name} : 1 + 1 = 2 := by\n  norm_num"));
    let triples = tree.training_triples();
    assert_eq!(triples.len(), 1);
    assert_eq!(triples[0].informal.as_deref(), Some(statement));
    assert!(triples[0].formal.ends_with(":= by\n  sorry\n"));
    assert!(triples[0].proof.ends_with("norm_num\n"));
}
