//! Tree search for constraint satisfaction with score-based variable ordering.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;

use crate::bnb::{canonical_fingerprint, NodeSelection};
use crate::erm::{sweep, IntervalLedger, PiecewiseCost};
use crate::error::{Error, Result};
use crate::generators::rng;
use crate::scoring::{select_pair, PairScore};

#[derive(Clone, Debug, PartialEq)]
pub enum Relation {
    /// Binary disequality.
    NotEqual,
    /// Allowed tuples of value indices, one entry per scope variable.
    Allowed(Vec<Vec<usize>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CspConstraint {
    pub scope: Vec<usize>,
    pub relation: Relation,
}

impl CspConstraint {
    pub fn satisfied(&self, vals: &[usize]) -> bool {
        match &self.relation {
            Relation::NotEqual => vals[0] != vals[1],
            Relation::Allowed(t) => t.iter().any(|row| row == vals),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CspInstance {
    pub names: Vec<String>,
    pub domains: Vec<Vec<String>>,
    pub constraints: Vec<CspConstraint>,
}

/// Value index per variable, `None` while unassigned.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialSolution {
    pub values: Vec<Option<usize>>,
}

impl PartialSolution {
    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
}

impl CspInstance {
    pub fn new(names: Vec<String>, domains: Vec<Vec<String>>, constraints: Vec<CspConstraint>) -> Result<Self> {
        if names.len() != domains.len() {
            return Err(Error::Dimension("one domain per variable".into()));
        }
        if domains.iter().any(Vec::is_empty) {
            return Err(Error::Range("domains must be nonempty".into()));
        }
        for c in &constraints {
            if c.scope.iter().any(|&v| v >= names.len()) {
                return Err(Error::Dimension(format!("scope {:?} references unknown variable", c.scope)));
            }
            let ok = match &c.relation {
                Relation::NotEqual => c.scope.len() == 2,
                Relation::Allowed(t) => t.iter().all(|row| row.len() == c.scope.len()),
            };
            if !ok {
                return Err(Error::Dimension(format!("relation arity mismatch on scope {:?}", c.scope)));
            }
        }
        Ok(CspInstance { names, domains, constraints })
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn empty_solution(&self) -> PartialSolution {
        PartialSolution { values: vec![None; self.n()] }
    }

    /// Constraints whose scope is fully assigned: `(satisfied, violated)`.
    pub fn tally(&self, y: &PartialSolution) -> (usize, usize) {
        let mut sat = 0;
        let mut viol = 0;
        for c in &self.constraints {
            let vals: Option<Vec<usize>> = c.scope.iter().map(|&v| y.values[v]).collect();
            if let Some(vals) = vals {
                if c.satisfied(&vals) {
                    sat += 1;
                } else {
                    viol += 1;
                }
            }
        }
        (sat, viol)
    }

    /// Parses `var <name> <values...>` and `ne <name> <name>` lines; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut domains = Vec::new();
        let mut constraints = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let body = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = body.split_whitespace().collect();
            match toks.first() {
                None => continue,
                Some(&"var") => {
                    if toks.len() < 3 {
                        return Err(Error::Parse { line, msg: "var needs a name and at least one value".into() });
                    }
                    names.push(toks[1].to_string());
                    domains.push(toks[2..].iter().map(|s| s.to_string()).collect());
                }
                Some(&"ne") => {
                    if toks.len() != 3 {
                        return Err(Error::Parse { line, msg: "ne needs two variable names".into() });
                    }
                    let find = |s: &str| {
                        names.iter().position(|n| n == s).ok_or_else(|| Error::Parse { line, msg: format!("unknown variable {s}") })
                    };
                    constraints.push(CspConstraint { scope: vec![find(toks[1])?, find(toks[2])?], relation: Relation::NotEqual });
                }
                Some(other) => return Err(Error::Parse { line, msg: format!("unknown directive {other}") }),
            }
        }
        CspInstance::new(names, domains, constraints)
    }

    /// Serialises instances made only of `≠` constraints.
    pub fn to_text(&self) -> Result<String> {
        let mut s = String::new();
        for (n, d) in self.names.iter().zip(&self.domains) {
            let _ = writeln!(s, "var {} {}", n, d.join(" "));
        }
        for c in &self.constraints {
            if c.relation != Relation::NotEqual {
                return Err(Error::Contract("only ne constraints have a text form".into()));
            }
            let _ = writeln!(s, "ne {} {}", self.names[c.scope[0]], self.names[c.scope[1]]);
        }
        Ok(s)
    }
}

/// One variable per vertex with `k` colours and a `≠` per edge.
pub fn encode_graph_coloring(n_vertices: usize, edges: &[(usize, usize)], k: usize) -> Result<CspInstance> {
    if k == 0 {
        return Err(Error::Range("need at least one colour".into()));
    }
    let names = (1..=n_vertices).map(|v| format!("v{v}")).collect();
    let domains = vec![(0..k).map(|c| format!("c{c}")).collect(); n_vertices];
    let constraints = edges
        .iter()
        .map(|&(a, b)| CspConstraint { scope: vec![a, b], relation: Relation::NotEqual })
        .collect();
    CspInstance::new(names, domains, constraints)
}

/// Reads a DIMACS `p edge` graph (1-indexed vertices).
pub fn parse_dimacs(text: &str) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut n = None;
    let mut edges = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        let num = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse { line, msg: format!("{s}: {e}") });
        match toks.first() {
            None | Some(&"c") => {}
            Some(&"p") if toks.len() >= 3 => n = Some(num(toks[2])?),
            Some(&"e") if toks.len() == 3 => {
                let (a, b) = (num(toks[1])?, num(toks[2])?);
                if a == 0 || b == 0 {
                    return Err(Error::Parse { line, msg: "vertices are 1-indexed".into() });
                }
                edges.push((a - 1, b - 1));
            }
            _ => return Err(Error::Parse { line, msg: format!("unrecognised line: {raw}") }),
        }
    }
    let n = n.ok_or(Error::Parse { line: 0, msg: "missing p line".into() })?;
    if edges.iter().any(|&(a, b)| a >= n || b >= n) {
        return Err(Error::Dimension("edge endpoint beyond vertex count".into()));
    }
    Ok((n, edges))
}

/// Erdős–Rényi graph coloured with `k` colours.
pub fn gen_coloring(n_vertices: usize, p_edge: f64, k: usize, seed: u64) -> Result<CspInstance> {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for a in 0..n_vertices {
        for b in a + 1..n_vertices {
            if r.gen_bool(p_edge) {
                edges.push((a, b));
            }
        }
    }
    encode_graph_coloring(n_vertices, &edges, k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CspRule {
    DegDom,
    DdegDom,
    SmallestDomain,
}

impl fmt::Display for CspRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CspRule::DegDom => "degdom",
            CspRule::DdegDom => "ddegdom",
            CspRule::SmallestDomain => "mindom",
        })
    }
}

impl FromStr for CspRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degdom" => Ok(CspRule::DegDom),
            "ddegdom" => Ok(CspRule::DdegDom),
            "mindom" => Ok(CspRule::SmallestDomain),
            _ => Err(Error::Range(format!("unknown CSP rule {s}"))),
        }
    }
}

pub fn score_deg_dom(inst: &CspInstance, i: usize) -> f64 {
    let deg = inst.constraints.iter().filter(|c| c.scope.contains(&i)).count();
    deg as f64 / inst.domains[i].len() as f64
}

pub fn score_ddeg_dom(inst: &CspInstance, y: &PartialSolution, i: usize) -> f64 {
    let ddeg = inst
        .constraints
        .iter()
        .filter(|c| c.scope.contains(&i) && c.scope.iter().any(|&v| v != i && y.values[v].is_none()))
        .count();
    ddeg as f64 / inst.domains[i].len() as f64
}

pub fn score_smallest_domain(inst: &CspInstance, i: usize) -> f64 {
    1.0 / inst.domains[i].len() as f64
}

pub fn csp_score(rule: CspRule, inst: &CspInstance, y: &PartialSolution, i: usize) -> f64 {
    match rule {
        CspRule::DegDom => score_deg_dom(inst, i),
        CspRule::DdegDom => score_ddeg_dom(inst, y, i),
        CspRule::SmallestDomain => score_smallest_domain(inst, i),
    }
}

/// Fathoming presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FathomPreset {
    /// Prune on any violated constraint; solutions satisfy everything.
    Hard,
    /// Only complete assignments are fathomed locally; maximise satisfied constraints.
    None,
}

impl FromStr for FathomPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(FathomPreset::Hard),
            "none" => Ok(FathomPreset::None),
            _ => Err(Error::Range(format!("unknown fathom preset {s}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CspSpec {
    pub rules: Vec<CspRule>,
    pub weights: Vec<f64>,
}

impl CspSpec {
    pub fn single(rule: CspRule) -> Self {
        CspSpec { rules: vec![rule], weights: vec![1.0] }
    }

    pub fn pair(r1: CspRule, r2: CspRule, mu: f64) -> Self {
        CspSpec { rules: vec![r1, r2], weights: vec![mu, 1.0 - mu] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CspState {
    Open,
    Branched { var: usize },
    Fathomed,
}

#[derive(Clone, Debug)]
pub struct CspNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub label: Option<(usize, usize)>,
    pub assignment: PartialSolution,
    /// Upper bound on satisfiable constraints below this node.
    pub bound: usize,
    pub state: CspState,
    pub children: Vec<usize>,
    group: usize,
}

#[derive(Clone, Debug)]
pub struct CspTree {
    pub nodes: Vec<CspNode>,
    pub cap_hit: bool,
}

impl CspTree {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn fingerprint(&self) -> String {
        canonical_fingerprint(
            |id| match self.nodes[id].state {
                CspState::Branched { var } => Some(var),
                _ => None,
            },
            |id| &self.nodes[id].children,
        )
    }
}

/// Best solution found and its number of satisfied constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct CspBest {
    pub solution: PartialSolution,
    pub satisfied: usize,
}

/// Generic tree search: select leaf, select variable, one child per domain value.
pub fn ts_run(
    inst: &CspInstance,
    preset: FathomPreset,
    spec: &CspSpec,
    policy: NodeSelection,
    cap: usize,
) -> Result<(CspTree, Option<CspBest>)> {
    ts_run_with(inst, preset, spec, policy, cap, None)
}

pub fn ts_run_with(
    inst: &CspInstance,
    preset: FathomPreset,
    spec: &CspSpec,
    policy: NodeSelection,
    cap: usize,
    mut ledger: Option<&mut IntervalLedger>,
) -> Result<(CspTree, Option<CspBest>)> {
    if spec.rules.is_empty() || spec.rules.len() != spec.weights.len() {
        return Err(Error::Dimension("CSP spec needs one weight per rule".into()));
    }
    let total = inst.constraints.len();
    let mut tree = CspTree { nodes: Vec::new(), cap_hit: false };
    let mut best: Option<CspBest> = None;
    let mut open: Vec<usize> = Vec::new();

    let root = inst.empty_solution();
    let (_, viol) = inst.tally(&root);
    tree.nodes.push(CspNode {
        id: 0,
        parent: None,
        label: None,
        assignment: root,
        bound: total - viol,
        state: CspState::Open,
        children: Vec::new(),
        group: 0,
    });
    settle(inst, preset, &mut tree, 0, &mut best, &mut open);

    loop {
        let pick = match policy {
            NodeSelection::BestBound => open
                .iter()
                .copied()
                .min_by(|&a, &b| tree.nodes[b].bound.cmp(&tree.nodes[a].bound).then(a.cmp(&b))),
            NodeSelection::DepthFirst => open
                .iter()
                .copied()
                .min_by(|&a, &b| tree.nodes[b].group.cmp(&tree.nodes[a].group).then(a.cmp(&b))),
        };
        let Some(id) = pick else { break };
        if tree.nodes.len() >= cap {
            tree.cap_hit = true;
            break;
        }
        open.retain(|&o| o != id);
        if best.as_ref().is_some_and(|b| tree.nodes[id].bound <= b.satisfied) {
            tree.nodes[id].state = CspState::Fathomed;
            continue;
        }
        let y = tree.nodes[id].assignment.clone();
        let cands: Vec<usize> = (0..inst.n()).filter(|&v| y.values[v].is_none()).collect();
        let var = match (spec.rules.len(), ledger.as_deref_mut()) {
            (2, l) => {
                let scores: Vec<PairScore> = cands
                    .iter()
                    .map(|&i| PairScore {
                        var: i,
                        s1: csp_score(spec.rules[0], inst, &y, i),
                        s2: csp_score(spec.rules[1], inst, &y, i),
                    })
                    .collect();
                let chosen = select_pair(&scores, spec.weights[0]).expect("open node has unassigned variables");
                if let Some(l) = l {
                    l.restrict(chosen, &scores, spec.weights[0]);
                }
                chosen
            }
            _ => {
                let combined = |i: usize| -> f64 {
                    spec.rules.iter().zip(&spec.weights).map(|(&r, &w)| w * csp_score(r, inst, &y, i)).sum()
                };
                let mut b = cands[0];
                for &i in &cands[1..] {
                    if combined(i) > combined(b) {
                        b = i;
                    }
                }
                b
            }
        };
        tree.nodes[id].state = CspState::Branched { var };
        let group = tree.nodes.len();
        for val in 0..inst.domains[var].len() {
            let mut a = y.clone();
            a.values[var] = Some(val);
            let (_, viol) = inst.tally(&a);
            let cid = tree.nodes.len();
            tree.nodes.push(CspNode {
                id: cid,
                parent: Some(id),
                label: Some((var, val)),
                assignment: a,
                bound: total - viol,
                state: CspState::Open,
                children: Vec::new(),
                group,
            });
            tree.nodes[id].children.push(cid);
            settle(inst, preset, &mut tree, cid, &mut best, &mut open);
        }
    }
    Ok((tree, best))
}

/// Applies local then global fathoming to a fresh node.
fn settle(
    inst: &CspInstance,
    preset: FathomPreset,
    tree: &mut CspTree,
    id: usize,
    best: &mut Option<CspBest>,
    open: &mut Vec<usize>,
) {
    let node = &tree.nodes[id];
    let (sat, viol) = inst.tally(&node.assignment);
    let complete = node.assignment.is_complete();
    let local = match preset {
        FathomPreset::Hard => viol > 0 || complete,
        FathomPreset::None => complete,
    };
    let feasible = complete && (preset == FathomPreset::None || viol == 0);
    if feasible && best.as_ref().is_none_or(|b| sat > b.satisfied) {
        *best = Some(CspBest { solution: node.assignment.clone(), satisfied: sat });
    }
    let global = best.as_ref().is_some_and(|b| node.bound <= b.satisfied);
    if local || global {
        tree.nodes[id].state = CspState::Fathomed;
    } else {
        open.push(id);
    }
}

/// Sweep over μ for two CSP rules; cost is tree size capped at `cap`.
pub fn enumerate_csp(
    inst: &CspInstance,
    preset: FathomPreset,
    r1: CspRule,
    r2: CspRule,
    policy: NodeSelection,
    cap: usize,
) -> Result<PiecewiseCost> {
    sweep(|mu, ledger| {
        let (tree, _) = ts_run_with(inst, preset, &CspSpec::pair(r1, r2, mu), policy, cap, Some(ledger))?;
        Ok((tree.size().min(cap) as f64, tree.fingerprint()))
    })
}

/// Exhaustive satisfiability check.
pub fn brute_force_satisfiable(inst: &CspInstance) -> bool {
    let sizes: Vec<usize> = inst.domains.iter().map(Vec::len).collect();
    let mut vals = vec![0usize; inst.n()];
    loop {
        let y = PartialSolution { values: vals.iter().map(|&v| Some(v)).collect() };
        if inst.tally(&y).1 == 0 {
            return true;
        }
        let mut k = 0;
        loop {
            if k == vals.len() {
                return false;
            }
            vals[k] += 1;
            if vals[k] < sizes[k] {
                break;
            }
            vals[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example3() -> CspInstance {
        encode_graph_coloring(4, &[(0, 1), (0, 2), (1, 2), (2, 3)], 3).unwrap()
    }

    fn complete(n: usize) -> Vec<(usize, usize)> {
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
    }

    #[test]
    fn deg_dom_on_example_graph() {
        let g = example3();
        assert_eq!(score_deg_dom(&g, 2), 1.0);
        assert!((score_deg_dom(&g, 0) - 2.0 / 3.0).abs() < 1e-15);
        let (tree, best) = ts_run(&g, FathomPreset::Hard, &CspSpec::single(CspRule::DegDom), NodeSelection::DepthFirst, 1000).unwrap();
        assert_eq!(tree.nodes[0].state, CspState::Branched { var: 2 });
        let sol = best.unwrap().solution;
        assert_eq!(g.tally(&sol), (4, 0));
    }

    #[test]
    fn ddeg_drops_with_assignment() {
        let g = encode_graph_coloring(2, &[(0, 1)], 2).unwrap();
        let mut y = g.empty_solution();
        y.values[1] = Some(0);
        assert_eq!(score_ddeg_dom(&g, &y, 0), 0.0);
        assert!(score_deg_dom(&g, 0) > 0.0);
        let single = encode_graph_coloring(1, &[], 1).unwrap();
        assert_eq!(score_smallest_domain(&single, 0), 1.0);
    }

    #[test]
    fn unsat_cases() {
        let k3 = encode_graph_coloring(3, &complete(3), 2).unwrap();
        let (_, best) = ts_run(&k3, FathomPreset::Hard, &CspSpec::single(CspRule::DegDom), NodeSelection::DepthFirst, 1000).unwrap();
        assert!(best.is_none());
        let k4 = encode_graph_coloring(4, &complete(4), 3).unwrap();
        assert!(!brute_force_satisfiable(&k4));
        let (_, best) = ts_run(&k4, FathomPreset::Hard, &CspSpec::single(CspRule::DdegDom), NodeSelection::BestBound, 10_000).unwrap();
        assert!(best.is_none());
        let edgeless = encode_graph_coloring(3, &[], 1).unwrap();
        assert!(brute_force_satisfiable(&edgeless));
    }

    #[test]
    fn one_level_search() {
        let inst = CspInstance::new(
            vec!["a".into()],
            vec![vec!["0".into(), "1".into(), "2".into()]],
            vec![CspConstraint { scope: vec![0], relation: Relation::Allowed(vec![vec![2]]) }],
        )
        .unwrap();
        let (tree, best) = ts_run(&inst, FathomPreset::Hard, &CspSpec::single(CspRule::DegDom), NodeSelection::DepthFirst, 100).unwrap();
        assert_eq!(tree.size(), 4);
        assert_eq!(best.unwrap().solution.values, vec![Some(2)]);
    }

    #[test]
    fn optimisation_preset_maximises_satisfied() {
        let k3 = encode_graph_coloring(3, &complete(3), 2).unwrap();
        let (_, best) = ts_run(&k3, FathomPreset::None, &CspSpec::single(CspRule::DegDom), NodeSelection::BestBound, 1000).unwrap();
        assert_eq!(best.unwrap().satisfied, 2);
    }

    #[test]
    fn text_and_dimacs() {
        let g = example3();
        let back = CspInstance::from_text(&g.to_text().unwrap()).unwrap();
        assert_eq!(back, g);
        let (n, edges) = parse_dimacs("c fig\np edge 4 4\ne 1 2\ne 1 3\ne 2 3\ne 3 4\n").unwrap();
        assert_eq!(encode_graph_coloring(n, &edges, 3).unwrap(), g);
        assert!(CspInstance::from_text("ne a b\n").is_err());
        assert!(parse_dimacs("e 1 2\n").is_err());
    }

    #[test]
    fn csp_sweep_matches_grid() {
        let g = gen_coloring(6, 0.5, 3, 11).unwrap();
        let pc = enumerate_csp(&g, FathomPreset::Hard, CspRule::DegDom, CspRule::DdegDom, NodeSelection::DepthFirst, 10_000).unwrap();
        for k in 0..=200 {
            let mu = k as f64 / 200.0;
            let (tree, _) = ts_run(&g, FathomPreset::Hard, &CspSpec::pair(CspRule::DegDom, CspRule::DdegDom, mu), NodeSelection::DepthFirst, 10_000).unwrap();
            assert_eq!(tree.fingerprint(), pc.piece_at(mu).fingerprint);
        }
    }
}
