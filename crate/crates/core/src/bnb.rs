//! Branch-and-bound over binary variables with score-based variable selection.

use std::collections::HashMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::erm::IntervalLedger;
use crate::error::Result;
use crate::lp::{self, LpSolution, CMP_TOL};
use crate::milp::{child, fractional_candidates, is_integral, MilpInstance, PartialAssignment};
use crate::scoring::{pair_scores, select_pair, select_variable, ChildLp, ChildPair, ScoreContext, ScoringSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeSelection {
    BestBound,
    DepthFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FathomMode {
    /// Fathom integral, infeasible and bound-dominated nodes.
    Full,
    /// Fathom only integral or infeasible nodes.
    LocalOnly,
}

/// How child LP values used by the scoring rules are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChildEval {
    Full,
    Partial { max_pivots: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BnbConfig {
    pub node_selection: NodeSelection,
    pub fathom_mode: FathomMode,
    /// Search stops once this many nodes exist.
    pub node_cap: usize,
    /// Cap applied by [`cost_tree_size`].
    pub cost_cap: usize,
    pub child_eval: ChildEval,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            node_selection: NodeSelection::BestBound,
            fathom_mode: FathomMode::Full,
            node_cap: 1_000_000,
            cost_cap: 1_000_000,
            child_eval: ChildEval::Full,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FathomReason {
    Integral,
    Infeasible,
    Bound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeState {
    Open,
    Branched { var: usize },
    Fathomed(FathomReason),
}

#[derive(Clone, Debug)]
pub struct SearchNode {
    pub id: usize,
    pub parent: Option<usize>,
    /// Branching fix `(var, value)` that created this node.
    pub label: Option<(usize, bool)>,
    pub depth: usize,
    pub assignment: PartialAssignment,
    pub lp: LpSolution,
    pub state: NodeState,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
    /// Best integral objective found, `-inf` if none.
    pub incumbent: f64,
    pub incumbent_x: Option<Vec<f64>>,
    /// Whether the node cap stopped the search.
    pub cap_hit: bool,
    open: Vec<usize>,
}

impl SearchTree {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn open_leaves(&self) -> &[usize] {
        &self.open
    }

    /// Branch labels from the root down to `id`.
    pub fn path(&self, id: usize) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        let mut cur = id;
        while let Some(l) = self.nodes[cur].label {
            out.push(l);
            cur = self.nodes[cur].parent.expect("labelled node has a parent");
        }
        out.reverse();
        out
    }

    /// Node reached by following `path` from the root, if present.
    pub fn find_path(&self, path: &[(usize, bool)]) -> Option<usize> {
        let mut cur = 0;
        for step in path {
            cur = *self.nodes[cur].children.iter().find(|&&c| self.nodes[c].label == Some(*step))?;
        }
        Some(cur)
    }

    /// Hash of the tree shape and branching variables, independent of creation order.
    pub fn fingerprint(&self) -> String {
        canonical_fingerprint(
            |id| match self.nodes[id].state {
                NodeState::Branched { var } => Some(var),
                _ => None,
            },
            |id| &self.nodes[id].children,
        )
    }

    /// One line per node: `id parent var value status lp_obj`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for n in &self.nodes {
            let parent = n.parent.map_or("-".to_string(), |p| p.to_string());
            let (var, val) = n.label.map_or(("-".to_string(), "-".to_string()), |(v, b)| (v.to_string(), u8::from(b).to_string()));
            let status = match n.state {
                NodeState::Open => "open",
                NodeState::Branched { .. } => "branched",
                NodeState::Fathomed(FathomReason::Integral) => "integral",
                NodeState::Fathomed(FathomReason::Infeasible) => "infeasible",
                NodeState::Fathomed(FathomReason::Bound) => "bound",
            };
            let obj = if n.lp.is_optimal() { n.lp.objective.to_string() } else { "-".to_string() };
            let _ = writeln!(s, "{} {} {} {} {} {}", n.id, parent, var, val, status, obj);
        }
        s
    }

    fn fathom(&mut self, id: usize, why: FathomReason) {
        self.nodes[id].state = NodeState::Fathomed(why);
        self.open.retain(|&o| o != id);
    }
}

/// Preorder encoding of (branching variable, child list) hashed with SHA-256.
pub(crate) fn canonical_fingerprint<'a>(
    branch_var: impl Fn(usize) -> Option<usize>,
    children: impl Fn(usize) -> &'a [usize],
) -> String {
    let mut enc = String::new();
    let mut stack = vec![0usize];
    while let Some(id) = stack.pop() {
        match branch_var(id) {
            Some(v) => {
                let kids = children(id);
                let _ = write!(enc, "b{}:{};", v, kids.len());
                stack.extend(kids.iter().rev());
            }
            None => enc.push_str("l;"),
        }
    }
    let digest = Sha256::digest(enc.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Open leaf chosen by the node-selection policy.
pub fn node_select(tree: &SearchTree, policy: NodeSelection) -> Option<usize> {
    let nodes = &tree.nodes;
    match policy {
        NodeSelection::BestBound => tree.open.iter().copied().min_by(|&a, &b| {
            nodes[b].lp.objective.total_cmp(&nodes[a].lp.objective).then(a.cmp(&b))
        }),
        NodeSelection::DepthFirst => {
            // Siblings share `id - value`; latest pair first, 0-child before 1-child.
            let group = |id: usize| id - nodes[id].label.map_or(0, |(_, v)| usize::from(v));
            tree.open.iter().copied().min_by(|&a, &b| group(b).cmp(&group(a)).then(a.cmp(&b)))
        }
    }
}

/// Tree size capped at `kappa`.
pub fn cost_tree_size(tree: &SearchTree, kappa: usize) -> usize {
    tree.size().min(kappa)
}

/// Memoised LP relaxations of one instance, shared across runs.
pub struct Relaxations<'a> {
    q: &'a MilpInstance,
    eval: ChildEval,
    full: HashMap<Vec<u8>, LpSolution>,
    partial: HashMap<Vec<u8>, Option<ChildLp>>,
}

impl<'a> Relaxations<'a> {
    pub fn new(q: &'a MilpInstance, eval: ChildEval) -> Self {
        Relaxations { q, eval, full: HashMap::new(), partial: HashMap::new() }
    }

    pub fn instance(&self) -> &'a MilpInstance {
        self.q
    }

    pub fn node_lp(&mut self, a: &PartialAssignment) -> Result<LpSolution> {
        let key = a.key();
        if let Some(s) = self.full.get(&key) {
            return Ok(s.clone());
        }
        let s = self.q.solve_relaxation(a)?;
        self.full.insert(key, s.clone());
        Ok(s)
    }

    fn child_lp(&mut self, a: &PartialAssignment, parent_x: &[f64], i: usize, v: bool) -> Result<Option<ChildLp>> {
        let ca = child(self.q, a, i, v)?;
        match self.eval {
            ChildEval::Full => {
                let s = self.node_lp(&ca)?;
                Ok(s.is_optimal().then_some(ChildLp { objective: s.objective, x: s.x }))
            }
            ChildEval::Partial { max_pivots } => {
                let key = ca.key();
                if let Some(c) = self.partial.get(&key) {
                    return Ok(c.clone());
                }
                let p = lp::partial_solve(&self.q.relaxation(&ca), parent_x, Some(max_pivots))?;
                let s = p.solution;
                let c = s.is_optimal().then_some(ChildLp { objective: s.objective, x: s.x });
                self.partial.insert(key, c.clone());
                Ok(c)
            }
        }
    }

    /// Rounds the binaries of a near-integral solution and re-solves with them fixed.
    /// Returns the verified objective and point, or `None` if rounding breaks feasibility.
    pub fn snap(&mut self, lp: &LpSolution) -> Result<Option<(f64, Vec<f64>)>> {
        if !is_integral(lp, self.q) {
            return Ok(None);
        }
        let mut fixed = self.q.root();
        for j in self.q.binary_vars() {
            fixed.values[j] = Some(lp.x[j] > 0.5);
        }
        let s = self.node_lp(&fixed)?;
        Ok(s.is_optimal().then_some((s.objective, s.x)))
    }

    /// Scoring context of a node from its own assignment and LP solution.
    pub fn context(&mut self, a: &PartialAssignment, lp: &LpSolution, with_children: bool) -> Result<ScoreContext> {
        let mut candidates = fractional_candidates(self.q, a, &lp.x);
        if candidates.is_empty() {
            // Near-integral point whose rounding is infeasible: branch on any inexact binary.
            candidates = (0..self.q.n())
                .filter(|&j| self.q.binary[j] && a.values[j].is_none() && lp.x[j].min(1.0 - lp.x[j]) > 0.0)
                .collect();
        }
        let mut children = Vec::new();
        if with_children {
            for &i in &candidates {
                let down = self.child_lp(a, &lp.x, i, false)?;
                let up = self.child_lp(a, &lp.x, i, true)?;
                children.push(ChildPair { down, up });
            }
        }
        Ok(ScoreContext { x: lp.x.clone(), objective: lp.objective, big: self.q.big_value(), candidates, children })
    }
}

/// Runs branch-and-bound; returns the tree and the best integral value found.
pub fn run(q: &MilpInstance, spec: &ScoringSpec, cfg: &BnbConfig) -> Result<(SearchTree, Option<f64>)> {
    let mut rel = Relaxations::new(q, cfg.child_eval);
    run_with(&mut rel, spec, cfg, None)
}

/// [`run`] with a shared relaxation cache and an optional interval ledger.
///
/// The ledger is only consulted for two-rule specs.
pub fn run_with(
    rel: &mut Relaxations<'_>,
    spec: &ScoringSpec,
    cfg: &BnbConfig,
    mut ledger: Option<&mut IntervalLedger>,
) -> Result<(SearchTree, Option<f64>)> {
    spec.validate()?;
    let q = rel.instance();
    let root_a = q.root();
    let root_lp = rel.node_lp(&root_a)?;
    let mut tree = SearchTree {
        nodes: Vec::new(),
        incumbent: f64::NEG_INFINITY,
        incumbent_x: None,
        cap_hit: false,
        open: Vec::new(),
    };
    let snapped = rel.snap(&root_lp)?;
    add_node(&mut tree, cfg, None, None, root_a, root_lp, snapped);

    let full = cfg.fathom_mode == FathomMode::Full;
    while let Some(id) = node_select(&tree, cfg.node_selection) {
        if tree.nodes.len() >= cfg.node_cap {
            tree.cap_hit = true;
            break;
        }
        if full && tree.nodes[id].lp.objective <= tree.incumbent + CMP_TOL {
            tree.fathom(id, FathomReason::Bound);
            continue;
        }
        let node = &tree.nodes[id];
        let ctx = rel.context(&node.assignment, &node.lp, spec.needs_children())?;
        let var = match ledger.as_deref_mut() {
            Some(l) if spec.rules.len() == 2 => {
                let cands = pair_scores(spec.rules[0], spec.rules[1], &ctx);
                let chosen = select_pair(&cands, spec.mu()).expect("open node has candidates");
                l.restrict(chosen, &cands, spec.mu());
                chosen
            }
            _ => select_variable(spec, &ctx)?,
        };
        let parent_a = tree.nodes[id].assignment.clone();
        tree.nodes[id].state = NodeState::Branched { var };
        tree.open.retain(|&o| o != id);
        for v in [false, true] {
            let a = child(q, &parent_a, var, v)?;
            let lp = rel.node_lp(&a)?;
            let snapped = rel.snap(&lp)?;
            let cid = add_node(&mut tree, cfg, Some(id), Some((var, v)), a, lp, snapped);
            tree.nodes[id].children.push(cid);
        }
    }
    let best = tree.incumbent.is_finite().then_some(tree.incumbent);
    Ok((tree, best))
}

fn add_node(
    tree: &mut SearchTree,
    cfg: &BnbConfig,
    parent: Option<usize>,
    label: Option<(usize, bool)>,
    assignment: PartialAssignment,
    lp: LpSolution,
    snapped: Option<(f64, Vec<f64>)>,
) -> usize {
    let id = tree.nodes.len();
    let state = if !lp.is_optimal() {
        NodeState::Fathomed(FathomReason::Infeasible)
    } else if let Some((value, x)) = snapped {
        if value > tree.incumbent {
            tree.incumbent = value;
            tree.incumbent_x = Some(x);
        }
        NodeState::Fathomed(FathomReason::Integral)
    } else if cfg.fathom_mode == FathomMode::Full && lp.objective <= tree.incumbent + CMP_TOL {
        NodeState::Fathomed(FathomReason::Bound)
    } else {
        NodeState::Open
    };
    if state == NodeState::Open {
        tree.open.push(id);
    }
    let depth = parent.map_or(0, |p| tree.nodes[p].depth + 1);
    tree.nodes.push(SearchNode { id, parent, label, depth, assignment, lp, state, children: Vec::new() });
    id
}
