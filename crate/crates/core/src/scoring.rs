//! Variable-selection scoring rules and their convex combinations.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Clamp used by the product rule.
pub const PRODUCT_GAMMA: f64 = 1e-6;

/// Base scoring rules. `Linear` carries its own internal weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rule {
    MostFrac,
    Linear(f64),
    Product,
    Entropic,
    MinChange,
    MaxChange,
}

impl Rule {
    /// Whether the rule needs child LP values.
    pub fn needs_children(self) -> bool {
        !matches!(self, Rule::MostFrac)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::MostFrac => write!(f, "mostfrac"),
            Rule::Linear(mu) => write!(f, "linear:{mu}"),
            Rule::Product => write!(f, "product"),
            Rule::Entropic => write!(f, "entropic"),
            Rule::MinChange => write!(f, "minchange"),
            Rule::MaxChange => write!(f, "maxchange"),
        }
    }
}

impl FromStr for Rule {
    type Err = Error;

    /// Accepts the rule ids; `linear` takes an optional `:μ` suffix (default ½).
    fn from_str(s: &str) -> Result<Rule> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let rule = match head {
            "mostfrac" => Rule::MostFrac,
            "product" => Rule::Product,
            "entropic" => Rule::Entropic,
            "minchange" => Rule::MinChange,
            "maxchange" => Rule::MaxChange,
            "linear" => {
                let mu = match arg {
                    Some(a) => a.parse::<f64>().map_err(|e| Error::Range(format!("linear weight {a}: {e}")))?,
                    None => 0.5,
                };
                if !(0.0..=1.0).contains(&mu) {
                    return Err(Error::Range(format!("linear weight {mu} outside [0, 1]")));
                }
                return Ok(Rule::Linear(mu));
            }
            other => return Err(Error::Range(format!("unknown rule id {other}"))),
        };
        if arg.is_some() {
            return Err(Error::Range(format!("rule {head} takes no argument")));
        }
        Ok(rule)
    }
}

/// LP result of one child; `None` in a [`ChildPair`] means infeasible.
#[derive(Clone, Debug, PartialEq)]
pub struct ChildLp {
    pub objective: f64,
    pub x: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChildPair {
    pub down: Option<ChildLp>,
    pub up: Option<ChildLp>,
}

/// Everything a rule may look at when scoring a node's candidates.
///
/// Built from the node's own LP data only, which makes every rule path-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreContext {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Bound change charged for an infeasible child.
    pub big: f64,
    pub candidates: Vec<usize>,
    /// Aligned with `candidates`; empty when no rule needs children.
    pub children: Vec<ChildPair>,
}

impl ScoreContext {
    fn pair(&self, i: usize) -> &ChildPair {
        let pos = self
            .candidates
            .iter()
            .position(|&c| c == i)
            .expect("scored variable must be a candidate");
        &self.children[pos]
    }

    /// `(c̆_Q − c̆_{Q_i^-}, c̆_Q − c̆_{Q_i^+})`, with infeasible children charged `big`.
    pub fn diffs(&self, i: usize) -> (f64, f64) {
        let p = self.pair(i);
        let d = |c: &Option<ChildLp>| c.as_ref().map_or(self.big, |c| self.objective - c.objective);
        (d(&p.down), d(&p.up))
    }
}

pub fn score_most_fractional(ctx: &ScoreContext, i: usize) -> f64 {
    let v = ctx.x[i];
    (1.0 - v).min(v)
}

pub fn score_linear(ctx: &ScoreContext, i: usize, mu: f64) -> f64 {
    let (a, b) = ctx.diffs(i);
    (1.0 - mu) * a.max(b) + mu * a.min(b)
}

pub fn score_product(ctx: &ScoreContext, i: usize) -> f64 {
    let (a, b) = ctx.diffs(i);
    a.max(PRODUCT_GAMMA) * b.max(PRODUCT_GAMMA)
}

/// Binary entropy in bits with `e(0) = e(1) = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

pub fn score_entropic(ctx: &ScoreContext, i: usize) -> f64 {
    let p = ctx.pair(i);
    let sum = |c: &Option<ChildLp>| c.as_ref().map_or(0.0, |c| c.x.iter().map(|&v| binary_entropy(v)).sum::<f64>());
    let xi = ctx.x[i];
    -((1.0 - xi) * sum(&p.down) + xi * sum(&p.up))
}

pub fn score_min_change(ctx: &ScoreContext, i: usize) -> f64 {
    let (a, b) = ctx.diffs(i);
    a.min(b)
}

pub fn score_max_change(ctx: &ScoreContext, i: usize) -> f64 {
    let (a, b) = ctx.diffs(i);
    a.max(b)
}

pub fn base_score(rule: Rule, ctx: &ScoreContext, i: usize) -> f64 {
    match rule {
        Rule::MostFrac => score_most_fractional(ctx, i),
        Rule::Linear(mu) => score_linear(ctx, i, mu),
        Rule::Product => score_product(ctx, i),
        Rule::Entropic => score_entropic(ctx, i),
        Rule::MinChange => score_min_change(ctx, i),
        Rule::MaxChange => score_max_change(ctx, i),
    }
}

/// Base rules with convex weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoringSpec {
    pub rules: Vec<Rule>,
    pub weights: Vec<f64>,
}

impl ScoringSpec {
    pub fn single(rule: Rule) -> Self {
        ScoringSpec { rules: vec![rule], weights: vec![1.0] }
    }

    /// `μ·rule1 + (1 − μ)·rule2`.
    pub fn pair(rule1: Rule, rule2: Rule, mu: f64) -> Self {
        ScoringSpec { rules: vec![rule1, rule2], weights: vec![mu, 1.0 - mu] }
    }

    pub fn new(rules: Vec<Rule>, weights: Vec<f64>) -> Result<Self> {
        let s = ScoringSpec { rules, weights };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rules.is_empty() || self.rules.len() != self.weights.len() {
            return Err(Error::Dimension(format!(
                "{} rules with {} weights",
                self.rules.len(),
                self.weights.len()
            )));
        }
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Range(format!("weights {:?} are not on the simplex", self.weights)));
        }
        Ok(())
    }

    pub fn needs_children(&self) -> bool {
        self.rules.iter().any(|r| r.needs_children())
    }

    pub fn mu(&self) -> f64 {
        self.weights[0]
    }
}

pub fn combined_score(spec: &ScoringSpec, ctx: &ScoreContext, i: usize) -> f64 {
    spec.rules
        .iter()
        .zip(&spec.weights)
        .map(|(&r, &w)| w * base_score(r, ctx, i))
        .sum()
}

/// Per-candidate scores under two rules.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairScore {
    pub var: usize,
    pub s1: f64,
    pub s2: f64,
}

pub fn pair_scores(rule1: Rule, rule2: Rule, ctx: &ScoreContext) -> Vec<PairScore> {
    ctx.candidates
        .iter()
        .map(|&i| PairScore { var: i, s1: base_score(rule1, ctx, i), s2: base_score(rule2, ctx, i) })
        .collect()
}

/// Whether `a` wins against `b` at weight `mu`.
///
/// The score gap is evaluated as `Δs₂ + μ·Δslope`, which is monotone in `mu`
/// under IEEE rounding. That keeps the crossing points found by
/// bisection consistent with what a run at any given `mu` does.
pub fn beats(a: &PairScore, b: &PairScore, mu: f64) -> bool {
    let offset = a.s2 - b.s2;
    let slope = (a.s1 - a.s2) - (b.s1 - b.s2);
    let gap = offset + mu * slope;
    gap > 0.0 || (gap == 0.0 && a.var < b.var)
}

/// Winner of a scan in candidate order.
pub fn select_pair(cands: &[PairScore], mu: f64) -> Option<usize> {
    let mut best = cands.first()?;
    for c in &cands[1..] {
        if beats(c, best, mu) {
            best = c;
        }
    }
    Some(best.var)
}

/// Argmax of the combined score over the candidates, ties to the lowest index.
pub fn select_variable(spec: &ScoringSpec, ctx: &ScoreContext) -> Result<usize> {
    if ctx.candidates.is_empty() {
        return Err(Error::Contract("select_variable called with no candidates".into()));
    }
    if spec.rules.len() == 2 {
        let cands = pair_scores(spec.rules[0], spec.rules[1], ctx);
        return Ok(select_pair(&cands, spec.mu()).expect("nonempty"));
    }
    let mut best = (ctx.candidates[0], combined_score(spec, ctx, ctx.candidates[0]));
    for &i in &ctx.candidates[1..] {
        let s = combined_score(spec, ctx, i);
        if s > best.1 || (s == best.1 && i < best.0) {
            best = (i, s);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn child(obj: f64, x: Vec<f64>) -> Option<ChildLp> {
        Some(ChildLp { objective: obj, x })
    }

    /// One candidate (index 0) with the given bound decreases; parent objective 10.
    fn ctx_with_diffs(down: Option<f64>, up: Option<f64>, big: f64) -> ScoreContext {
        ScoreContext {
            x: vec![0.5],
            objective: 10.0,
            big,
            candidates: vec![0],
            children: vec![ChildPair {
                down: down.and_then(|d| child(10.0 - d, vec![0.0])),
                up: up.and_then(|d| child(10.0 - d, vec![1.0])),
            }],
        }
    }

    #[test]
    fn most_fractional_values() {
        let mut c = ctx_with_diffs(Some(0.0), Some(0.0), 1.0);
        assert_eq!(score_most_fractional(&c, 0), 0.5);
        c.x[0] = 0.0;
        assert_eq!(score_most_fractional(&c, 0), 0.0);
        c.x[0] = 0.6;
        assert!((score_most_fractional(&c, 0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn linear_values() {
        let c = ctx_with_diffs(Some(2.0), Some(2.0), 100.0);
        assert_eq!(score_linear(&c, 0, 0.3), 2.0);
        let c = ctx_with_diffs(Some(0.0), Some(4.0), 100.0);
        assert_eq!(score_linear(&c, 0, 0.0), 4.0);
        assert_eq!(score_linear(&c, 0, 0.25), 3.0);
    }

    #[test]
    fn product_values() {
        let c = ctx_with_diffs(Some(0.0), Some(5.0), 100.0);
        assert!((score_product(&c, 0) - 5e-6).abs() < 1e-18);
        let c = ctx_with_diffs(Some(0.0), Some(0.0), 100.0);
        assert!((score_product(&c, 0) - 1e-12).abs() < 1e-24);
        let c = ctx_with_diffs(Some(2.0), Some(3.0), 100.0);
        assert_eq!(score_product(&c, 0), 6.0);
    }

    #[test]
    fn entropic_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        let mut c = ctx_with_diffs(Some(1.0), Some(1.0), 100.0);
        assert_eq!(score_entropic(&c, 0), 0.0);
        c.children[0].down.as_mut().unwrap().x = vec![0.0, 0.5];
        c.children[0].up.as_mut().unwrap().x = vec![1.0, 0.5];
        assert_eq!(score_entropic(&c, 0), -1.0);
        c.children[0].up = None;
        assert_eq!(score_entropic(&c, 0), -0.5);
    }

    #[test]
    fn infeasible_child_charged_big() {
        let c = ctx_with_diffs(None, Some(1.0), 11.0);
        assert_eq!(score_max_change(&c, 0), 11.0);
        assert_eq!(score_min_change(&c, 0), 1.0);
    }

    #[test]
    fn rule_ids_parse() {
        for id in ["mostfrac", "product", "entropic", "minchange", "maxchange"] {
            assert_eq!(id.parse::<Rule>().unwrap().to_string(), id);
        }
        assert_eq!("linear".parse::<Rule>().unwrap(), Rule::Linear(0.5));
        assert_eq!("linear:0.25".parse::<Rule>().unwrap(), Rule::Linear(0.25));
        assert!("linear:2".parse::<Rule>().is_err());
        assert!("pseudocost".parse::<Rule>().is_err());
    }

    /// F-family root with μ* = 0.45, γ = 1: candidate 0 is the median big-side
    /// variable, candidate 1 is `x_{n-1}`.
    fn family_root_ctx() -> ScoreContext {
        let mu_star = 0.45;
        let small = 0.25 * (3.0 - 1.0 / mu_star);
        ScoreContext {
            x: vec![0.5, 0.5],
            objective: 10.0,
            big: 1000.0,
            candidates: vec![0, 1],
            children: vec![
                ChildPair { down: child(9.5, vec![]), up: child(9.5, vec![]) },
                ChildPair { down: child(10.0 - 0.75, vec![]), up: child(10.0 - small, vec![]) },
            ],
        }
    }

    #[test]
    fn combined_matches_closed_form() {
        let ctx = family_root_ctx();
        let spec = ScoringSpec::pair(Rule::MinChange, Rule::MaxChange, 0.2);
        let v = combined_score(&spec, &ctx, 1);
        assert!((v - (0.75 - 0.2 / (4.0 * 0.45))).abs() < 1e-12);
        assert!((combined_score(&spec, &ctx, 0) - 0.5).abs() < 1e-12);
        assert_eq!(select_variable(&spec, &ctx).unwrap(), 1);
        let spec = ScoringSpec::pair(Rule::MinChange, Rule::MaxChange, 0.9);
        assert!((combined_score(&spec, &ctx, 1) - 0.25).abs() < 1e-12);
        assert_eq!(select_variable(&spec, &ctx).unwrap(), 0);
        let vertex = ScoringSpec::pair(Rule::MinChange, Rule::MaxChange, 1.0);
        assert_eq!(combined_score(&vertex, &ctx, 1), score_min_change(&ctx, 1));
    }

    #[test]
    fn empty_candidates_is_contract_violation() {
        let mut ctx = family_root_ctx();
        ctx.candidates.clear();
        ctx.children.clear();
        let spec = ScoringSpec::single(Rule::MostFrac);
        assert!(matches!(select_variable(&spec, &ctx), Err(Error::Contract(_))));
    }

    #[test]
    fn single_candidate_selected() {
        let ctx = ctx_with_diffs(Some(1.0), Some(2.0), 10.0);
        assert_eq!(select_variable(&ScoringSpec::single(Rule::Product), &ctx).unwrap(), 0);
    }

    #[test]
    fn spec_validation() {
        assert!(ScoringSpec::new(vec![Rule::Product], vec![0.5]).is_err());
        assert!(ScoringSpec::new(vec![Rule::Product, Rule::MostFrac], vec![0.5, 0.5]).is_ok());
    }

    fn random_ctx() -> impl Strategy<Value = ScoreContext> {
        (1usize..6).prop_flat_map(|k| {
            (
                prop::collection::vec(0.05f64..0.95, k),
                prop::collection::vec((prop::option::weighted(0.8, 0.0f64..5.0), prop::option::weighted(0.8, 0.0f64..5.0)), k),
            )
                .prop_map(move |(x, diffs)| ScoreContext {
                    x: x.clone(),
                    objective: 5.0,
                    big: 21.0,
                    candidates: (0..k).collect(),
                    children: diffs
                        .into_iter()
                        .map(|(d, u)| ChildPair {
                            down: d.map(|d| ChildLp { objective: 5.0 - d, x: x.iter().map(|v| v * 0.5).collect() }),
                            up: u.map(|u| ChildLp { objective: 5.0 - u, x: x.iter().map(|v| 1.0 - v * 0.5).collect() }),
                        })
                        .collect(),
                })
        })
    }

    const RULES: [Rule; 6] = [
        Rule::MostFrac,
        Rule::Linear(0.3),
        Rule::Product,
        Rule::Entropic,
        Rule::MinChange,
        Rule::MaxChange,
    ];

    proptest! {
        #[test]
        fn combined_is_affine_in_mu(ctx in random_ctx(), r1 in 0usize..6, r2 in 0usize..6) {
            let (a, b) = (RULES[r1], RULES[r2]);
            for &i in &ctx.candidates {
                let v0 = combined_score(&ScoringSpec::pair(a, b, 0.0), &ctx, i);
                let v1 = combined_score(&ScoringSpec::pair(a, b, 1.0), &ctx, i);
                for mu in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    let v = combined_score(&ScoringSpec::pair(a, b, mu), &ctx, i);
                    prop_assert!((v - (v0 + mu * (v1 - v0))).abs() < 1e-9 * (1.0 + v0.abs() + v1.abs()));
                }
            }
        }

        #[test]
        fn selection_invariant_under_scaling(
            raw in prop::collection::vec((0u32..1000, 0u32..1000), 1..8),
            scale in 0.01f64..100.0,
            mu in 0.0f64..=1.0,
        ) {
            // Integer-valued scores keep exact ties exact under scaling.
            let cands: Vec<PairScore> = raw.iter().enumerate()
                .map(|(i, &(a, b))| PairScore { var: i, s1: f64::from(a), s2: f64::from(b) })
                .collect();
            let scaled: Vec<PairScore> = cands.iter()
                .map(|c| PairScore { var: c.var, s1: c.s1 * scale, s2: c.s2 * scale })
                .collect();
            let best = select_pair(&cands, mu).unwrap();
            let scaled_best = select_pair(&scaled, mu).unwrap();
            let value = |c: &PairScore| mu * c.s1 + (1.0 - mu) * c.s2;
            // Either the same winner, or the two winners tie to within rounding.
            if best != scaled_best {
                prop_assert!((value(&cands[best]) - value(&cands[scaled_best])).abs() < 1e-9 * (1.0 + value(&cands[best])));
            }
        }

        #[test]
        fn pair_selection_is_the_argmax(ctx in random_ctx(), mu in 0.0f64..=1.0) {
            let spec = ScoringSpec::pair(Rule::MinChange, Rule::MaxChange, mu);
            let chosen = select_variable(&spec, &ctx).unwrap();
            let best = ctx.candidates.iter().map(|&i| combined_score(&spec, &ctx, i)).fold(f64::MIN, f64::max);
            prop_assert!(combined_score(&spec, &ctx, chosen) >= best - 1e-9 * (1.0 + best.abs()));
        }
    }
}
