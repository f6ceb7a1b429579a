//! The proof tree: one node per theorem or subgoal, with its histories,
//! budgets, and the splice that rebuilds a whole proof from proven children.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::Subgoal;
use crate::config::Limits;
use crate::lean_source::{count_sorries, proof_body, replace_subgoal, LeanSource, LeanSourceError};
use crate::services::{AgentRole, ChatMessage, TheoremHit, VerificationResult};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeStatus {
    AwaitingFormalization,
    AwaitingSyntaxCheck,
    AwaitingSemanticCheck,
    AwaitingProof,
    AwaitingVerification,
    AwaitingAstParse,
    AwaitingQueryGen,
    AwaitingLookup,
    AwaitingSketch,
    AwaitingSketchCheck,
    AwaitingChildren,
    Proven,
    Failed,
}

impl NodeStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, NodeStatus::Proven | NodeStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureReason {
    /// Formalization rounds used up, or a formal input that does not check.
    FormalizationExhausted,
    /// Needed decomposition at the maximum depth.
    DepthExceeded,
    /// Sketch corrections used up.
    SketchExhausted,
    /// An external service could not be reached.
    ServiceError(String),
    /// The reconstructed proof did not verify.
    FinalVerification(String),
    /// No node had work left although the root is unproven.
    Stalled,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::FormalizationExhausted => f.write_str("formalization budget exhausted"),
            FailureReason::DepthExceeded => f.write_str("maximum depth exceeded"),
            FailureReason::SketchExhausted => f.write_str("sketch correction budget exhausted"),
            FailureReason::ServiceError(e) => write!(f, "service error: {e}"),
            FailureReason::FinalVerification(e) => write!(f, "reconstructed proof failed verification: {e}"),
            FailureReason::Stalled => f.write_str("no schedulable work left"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub formalize_retries: u32,
    pub self_correction_in_pass: u32,
    pub passes_used: u32,
    pub sketch_corrections_used: u32,
    pub decompositions_used: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// Recorded before its result is known; never counted.
    Pending,
    Success,
    Failure,
}

/// One exchange in a node's history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub role: AgentRole,
    pub prompt: String,
    pub response: String,
    pub outcome: Outcome,
    pub verification: Option<VerificationResult>,
}

impl Attempt {
    pub fn new(role: AgentRole, prompt: impl Into<String>, response: impl Into<String>, outcome: Outcome) -> Self {
        Self {
            role,
            prompt: prompt.into(),
            response: response.into(),
            outcome,
            verification: None,
        }
    }

    pub fn with_verification(mut self, v: VerificationResult) -> Self {
        self.verification = Some(v);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub depth: u32,
    /// Subgoal name, for nodes created from a sketch.
    pub name: Option<String>,
    pub informal_statement: Option<String>,
    pub formal: Option<LeanSource>,
    pub status: NodeStatus,
    /// A proof body that verified (or is awaiting verification).
    pub proof_attempt: Option<String>,
    /// The accepted sketch body; present exactly on internal nodes.
    pub sketch: Option<String>,
    pub children: Vec<NodeId>,
    pub conversation: Vec<Attempt>,
    pub counters: Counters,
    /// Set when an ancestor of a failed subtree is re-decomposed.
    pub backtracked: bool,
    pub failure: Option<FailureReason>,

    // Working state of the current step, kept so a checkpoint can resume.
    /// Text produced by an agent and not yet checked.
    pub candidate: Option<String>,
    pub last_verification: Option<VerificationResult>,
    pub prover_thread: Vec<ChatMessage>,
    pub decomposer_thread: Vec<ChatMessage>,
    pub queries: Vec<String>,
    /// Query-generation replies in the current decomposition.
    pub query_attempts: u32,
    pub hints: Vec<TheoremHit>,
}

impl ProofNode {
    fn new(id: NodeId, parent: Option<NodeId>, depth: u32, status: NodeStatus) -> Self {
        Self {
            id,
            parent,
            depth,
            name: None,
            informal_statement: None,
            formal: None,
            status,
            proof_attempt: None,
            sketch: None,
            children: Vec::new(),
            conversation: Vec::new(),
            counters: Counters::default(),
            backtracked: false,
            failure: None,
            candidate: None,
            last_verification: None,
            prover_thread: Vec::new(),
            decomposer_thread: Vec::new(),
            queries: Vec::new(),
            query_attempts: 0,
            hints: Vec::new(),
        }
    }

    pub fn preamble(&self) -> &str {
        self.formal.as_ref().map_or("", |f| f.preamble.as_str())
    }

    /// Preamble plus `body`, the unit sent to the verifier.
    pub fn unit(&self, body: &str) -> String {
        LeanSource::new(self.preamble(), body).to_code()
    }

    /// The theorem statement ending in `:= by sorry`.
    pub fn statement(&self) -> &str {
        self.formal.as_ref().map_or("", |f| f.body.as_str())
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is not proven")]
    IncompleteSubtree(NodeId),
    #[error("node {0} has no sketch")]
    NoSketch(NodeId),
    #[error("child {child} has no subgoal name")]
    UnnamedChild { child: NodeId },
    #[error("splicing {child} into {parent}: {source}")]
    Splice {
        parent: NodeId,
        child: NodeId,
        source: LeanSourceError,
    },
    #[error("reconstructed proof of {node} still has {count} sorry")]
    ResidualSorry { node: NodeId, count: usize },
    #[error("tree invariant violated: {0}")]
    Invalid(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofTree {
    pub nodes: BTreeMap<NodeId, ProofNode>,
    pub root: NodeId,
    pub limits: Limits,
    next_id: u64,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    tree: ProofTree,
}

/// One (informal, formal, proof) triple from a proven node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingTriple {
    pub informal: Option<String>,
    pub formal: String,
    pub proof: String,
}

impl ProofTree {
    fn with_root(limits: Limits, root: ProofNode) -> Self {
        let id = root.id;
        Self {
            nodes: BTreeMap::from([(id, root)]),
            root: id,
            limits,
            next_id: id.0 + 1,
        }
    }

    pub fn new_informal(statement: impl Into<String>, limits: Limits) -> Self {
        let mut root = ProofNode::new(NodeId(0), None, 0, NodeStatus::AwaitingFormalization);
        root.informal_statement = Some(statement.into());
        Self::with_root(limits, root)
    }

    /// A root for an already formal theorem; it still goes through the
    /// syntax check.
    pub fn new_formal(source: LeanSource, limits: Limits) -> Self {
        let mut root = ProofNode::new(NodeId(0), None, 0, NodeStatus::AwaitingSyntaxCheck);
        root.candidate = Some(source.body.clone());
        root.formal = Some(source);
        Self::with_root(limits, root)
    }

    pub fn node(&self, id: NodeId) -> Result<&ProofNode, TreeError> {
        self.nodes.get(&id).ok_or(TreeError::UnknownNode(id))
    }

    pub fn node_mut(&mut self, id: NodeId) -> Result<&mut ProofNode, TreeError> {
        self.nodes.get_mut(&id).ok_or(TreeError::UnknownNode(id))
    }

    pub fn root_node(&self) -> &ProofNode {
        &self.nodes[&self.root]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in creation order.
    pub fn iter(&self) -> impl Iterator<Item = &ProofNode> {
        self.nodes.values()
    }

    /// New leaf under `parent` for `subgoal`, awaiting proof. The child
    /// inherits the parent's preamble.
    pub fn add_child(&mut self, parent: NodeId, subgoal: &Subgoal) -> Result<NodeId, TreeError> {
        let p = self.node(parent)?;
        if p.sketch.is_none() {
            return Err(TreeError::NoSketch(parent));
        }
        let preamble = p.preamble().to_string();
        let depth = p.depth + 1;
        let id = NodeId(self.next_id);
        self.next_id += 1;
        let mut child = ProofNode::new(id, Some(parent), depth, NodeStatus::AwaitingProof);
        child.name = Some(subgoal.name.clone());
        child.formal = Some(LeanSource::new(preamble, subgoal.standalone_statement.clone()));
        self.nodes.insert(id, child);
        self.node_mut(parent)?.children.push(id);
        Ok(id)
    }

    /// Append to the node's history and charge failures to the budget of
    /// the agent that produced the checked text.
    pub fn record_attempt(&mut self, id: NodeId, attempt: Attempt) -> Result<(), TreeError> {
        let limits = self.limits;
        let node = self.node_mut(id)?;
        if attempt.outcome == Outcome::Failure {
            let c = &mut node.counters;
            match attempt.role {
                AgentRole::Prover => {
                    c.self_correction_in_pass += 1;
                    if c.self_correction_in_pass >= limits.prover_self_correction {
                        c.self_correction_in_pass = 0;
                        c.passes_used = (c.passes_used + 1).min(limits.prover_max_pass);
                    }
                }
                AgentRole::Formalizer | AgentRole::Semantics => {
                    c.formalize_retries = (c.formalize_retries + 1).min(limits.formalizer_max_retries);
                }
                AgentRole::Decomposer => {
                    c.sketch_corrections_used =
                        (c.sketch_corrections_used + 1).min(limits.decomposer_self_correction);
                }
                AgentRole::SearchQuery => {}
            }
        }
        node.conversation.push(attempt);
        Ok(())
    }

    /// Ancestors from the parent up to the root.
    pub fn ancestors(&self, id: NodeId) -> Result<Vec<NodeId>, TreeError> {
        let mut out = Vec::new();
        let mut cur = self.node(id)?.parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.node(p)?.parent;
        }
        Ok(out)
    }

    /// Nearest ancestor at distance two or more that still has sketch
    /// corrections and re-decompositions left.
    pub fn find_backtrack_ancestor(&self, id: NodeId) -> Result<Option<NodeId>, TreeError> {
        let budget = self.limits.decomposer_self_correction;
        let redecompose = self.limits.decomposition_budget();
        for a in self.ancestors(id)?.into_iter().skip(1) {
            let c = self.node(a)?.counters;
            if c.sketch_corrections_used < budget && c.decompositions_used < redecompose {
                return Ok(Some(a));
            }
        }
        Ok(None)
    }

    pub fn descendants(&self, id: NodeId) -> Result<Vec<NodeId>, TreeError> {
        let mut out = Vec::new();
        let mut stack = self.node(id)?.children.clone();
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.node(n)?.children.iter().copied());
        }
        Ok(out)
    }

    /// Drop every descendant of `id` and queue it for a fresh decomposition
    /// with the backtrack prompts.
    pub fn prune_subtree(&mut self, id: NodeId) -> Result<(), TreeError> {
        for d in self.descendants(id)? {
            self.nodes.remove(&d);
        }
        let budget = self.limits.decomposition_budget();
        let node = self.node_mut(id)?;
        node.children.clear();
        node.sketch = None;
        node.candidate = None;
        node.queries.clear();
        node.query_attempts = 0;
        node.hints.clear();
        node.failure = None;
        node.status = NodeStatus::AwaitingQueryGen;
        node.backtracked = true;
        node.counters.decompositions_used = (node.counters.decompositions_used + 1).min(budget);
        Ok(())
    }

    /// Mark `id` proven and propagate to ancestors whose children are now
    /// all proven.
    pub fn mark_proven(&mut self, id: NodeId) -> Result<(), TreeError> {
        self.node_mut(id)?.status = NodeStatus::Proven;
        let mut cur = self.node(id)?.parent;
        while let Some(p) = cur {
            let parent = self.node(p)?;
            let done = parent
                .children
                .iter()
                .all(|c| self.nodes.get(c).is_some_and(|n| n.status == NodeStatus::Proven));
            if !done || parent.status != NodeStatus::AwaitingChildren {
                break;
            }
            self.node_mut(p)?.status = NodeStatus::Proven;
            cur = self.node(p)?.parent;
        }
        Ok(())
    }

    /// Proof body of `id` with every child's proof spliced into its sketch.
    pub fn reconstruct_body(&self, id: NodeId) -> Result<String, TreeError> {
        let node = self.node(id)?;
        if node.status != NodeStatus::Proven {
            return Err(TreeError::IncompleteSubtree(id));
        }
        let text = match &node.sketch {
            None => node.proof_attempt.clone().ok_or(TreeError::IncompleteSubtree(id))?,
            Some(sketch) => {
                let mut sketch = sketch.clone();
                for &child in &node.children {
                    let child_text = self.reconstruct_body(child)?;
                    let name = self
                        .node(child)?
                        .name
                        .as_deref()
                        .ok_or(TreeError::UnnamedChild { child })?;
                    let splice = |source| TreeError::Splice {
                        parent: id,
                        child,
                        source,
                    };
                    let body = proof_body(&child_text).map_err(splice)?.into_tactics();
                    sketch = replace_subgoal(&sketch, name, &body).map_err(splice)?;
                }
                sketch
            }
        };
        match count_sorries(&text) {
            0 => Ok(text),
            count => Err(TreeError::ResidualSorry { node: id, count }),
        }
    }

    /// The complete unit for `id`: its stored preamble and reconstructed body.
    pub fn reconstruct(&self, id: NodeId) -> Result<String, TreeError> {
        let body = self.reconstruct_body(id)?;
        Ok(self.node(id)?.unit(&body))
    }

    /// Check structural invariants: one root, consistent links, the depth
    /// law, sketches on internal nodes, counters within limits.
    pub fn validate(&self) -> Result<(), TreeError> {
        let bad = |m: String| Err(TreeError::Invalid(m));
        let root = self.node(self.root)?;
        if root.parent.is_some() || root.depth != 0 {
            return bad(format!("root {} has a parent or non-zero depth", self.root));
        }
        let l = self.limits;
        let mut seen = 0usize;
        for (id, n) in &self.nodes {
            if *id != n.id {
                return bad(format!("node stored under {id} claims id {}", n.id));
            }
            if id.0 >= self.next_id {
                return bad(format!("{id} is not below the id counter"));
            }
            match n.parent {
                None if *id != self.root => return bad(format!("second root {id}")),
                None => {}
                Some(p) => {
                    let parent = self.nodes.get(&p).ok_or(TreeError::Invalid(format!("{id} has dangling parent {p}")))?;
                    if parent.children.iter().filter(|c| **c == *id).count() != 1 {
                        return bad(format!("{p} does not list child {id} exactly once"));
                    }
                    if n.depth != parent.depth + 1 {
                        return bad(format!("{id} has depth {} under depth {}", n.depth, parent.depth));
                    }
                }
            }
            for c in &n.children {
                match self.nodes.get(c) {
                    Some(child) if child.parent == Some(*id) => {}
                    _ => return bad(format!("{id} lists child {c} that does not point back")),
                }
            }
            if !n.children.is_empty() && n.sketch.is_none() {
                return bad(format!("internal node {id} has no sketch"));
            }
            let c = n.counters;
            if c.formalize_retries > l.formalizer_max_retries
                || c.self_correction_in_pass >= l.prover_self_correction.max(1)
                || c.passes_used > l.prover_max_pass
                || c.sketch_corrections_used > l.decomposer_self_correction
                || c.decompositions_used > l.decomposition_budget()
            {
                return bad(format!("{id} counters exceed limits: {c:?}"));
            }
            seen += 1;
        }
        // Every node must be reachable from the root (this also rules out cycles).
        let reachable = 1 + self.descendants(self.root)?.len();
        if reachable != seen {
            return bad(format!("{} of {seen} nodes reachable from the root", reachable));
        }
        Ok(())
    }

    pub fn to_checkpoint_json(&self) -> String {
        serde_json::to_string_pretty(&Checkpoint {
            version: CHECKPOINT_VERSION,
            tree: self.clone(),
        })
        .expect("tree serializes")
    }

    pub fn from_checkpoint_json(text: &str) -> Result<ProofTree, TreeError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| TreeError::Checkpoint(e.to_string()))?;
        match v.get("version").and_then(serde_json::Value::as_u64) {
            Some(1) => {}
            other => return Err(TreeError::Checkpoint(format!("unsupported version {other:?}"))),
        }
        let cp: Checkpoint = serde_json::from_value(v).map_err(|e| TreeError::Checkpoint(e.to_string()))?;
        cp.tree.validate()?;
        Ok(cp.tree)
    }

    pub fn save_checkpoint(&self, path: &Path) -> std::io::Result<()> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, self.to_checkpoint_json())?;
        std::fs::rename(tmp, path)
    }

    pub fn load_checkpoint(path: &Path) -> Result<ProofTree, TreeError> {
        let text = std::fs::read_to_string(path).map_err(|e| TreeError::Checkpoint(e.to_string()))?;
        Self::from_checkpoint_json(&text)
    }

    /// Triples for every proven node that has a statement.
    pub fn training_triples(&self) -> Vec<TrainingTriple> {
        self.nodes
            .values()
            .filter(|n| n.status == NodeStatus::Proven && n.formal.is_some())
            .filter_map(|n| {
                Some(TrainingTriple {
                    informal: n.informal_statement.clone(),
                    formal: n.unit(n.statement()),
                    proof: self.reconstruct(n.id).ok()?,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests;
