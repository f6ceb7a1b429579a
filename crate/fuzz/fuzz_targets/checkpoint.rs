#![no_main]

use libfuzzer_sys::fuzz_target;
use recprover::orchestrator::next_action;
use recprover::proof_state::ProofTree;

fuzz_target!(|text: &str| {
    if let Ok(tree) = ProofTree::from_checkpoint_json(text) {
        let _ = next_action(&tree);
        let _ = tree.reconstruct(tree.root);
    }
});
