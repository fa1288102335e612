//! Exact sweeps over the mixing weight μ and empirical risk minimisation.
//!
//! A run records, for every branching decision, the set of weights under
//! which the same variable would have won. The intersection is the
//! ledger's interval `[lo, hi)`; the whole tree is identical for every μ in it.
//! Boundaries are exact floating-point thresholds, so the sweep jumps
//! straight to `hi` with no gap.

use crate::bnb::{cost_tree_size, run_with, BnbConfig, Relaxations, SearchTree};
use crate::error::{Error, Result};
use crate::milp::MilpInstance;
use crate::scoring::{beats, PairScore, Rule, ScoringSpec};

/// Upper limit on intervals per sweep.
pub const MAX_INTERVALS: usize = 100_000;

/// Exclusive upper end used when an interval reaches μ = 1.
pub fn past_one() -> f64 {
    1.0f64.next_up()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalLedger {
    pub lo: f64,
    pub hi: f64,
}

impl Default for IntervalLedger {
    fn default() -> Self {
        IntervalLedger { lo: 0.0, hi: past_one() }
    }
}

impl IntervalLedger {
    /// Narrows the interval to the weights under which `chosen` still wins.
    pub fn restrict(&mut self, chosen: usize, cands: &[PairScore], mu: f64) {
        let Some(me) = cands.iter().find(|c| c.var == chosen) else { return };
        for other in cands.iter().filter(|c| c.var != chosen) {
            if !beats(me, other, mu) {
                // The scan winner is not pairwise dominant; pin the interval to μ itself.
                self.lo = self.lo.max(mu);
                self.hi = self.hi.min(mu.next_up());
                continue;
            }
            let slope = (me.s1 - me.s2) - (other.s1 - other.s2);
            let wins = |t: f64| beats(me, other, t);
            if slope > 0.0 {
                // Winning set is [t, 1]: find the smallest winning weight below μ.
                if !wins(0.0) {
                    self.lo = self.lo.max(first_true(0.0, mu, &wins));
                }
            } else if slope < 0.0 {
                // Winning set is [0, t): find the first losing weight above μ.
                if !wins(1.0) {
                    self.hi = self.hi.min(first_true(mu, 1.0, &|t| !wins(t)));
                }
            }
        }
    }

    pub fn contains(&self, mu: f64) -> bool {
        self.lo <= mu && mu < self.hi
    }
}

/// Smallest float in `(lo, hi]` where a monotone predicate turns true,
/// given `!p(lo)` and `p(hi)`.
fn first_true(lo: f64, hi: f64, p: &dyn Fn(f64) -> bool) -> f64 {
    let (mut a, mut b) = (lo.to_bits(), hi.to_bits());
    while b - a > 1 {
        let mid = a + (b - a) / 2;
        if p(f64::from_bits(mid)) {
            b = mid;
        } else {
            a = mid;
        }
    }
    f64::from_bits(b)
}

/// One behaviour: a half-open weight interval with its cost and tree fingerprint.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub lo: f64,
    /// Exclusive; the last piece ends at [`past_one`].
    pub hi: f64,
    pub cost: f64,
    pub fingerprint: String,
}

/// Piecewise-constant cost over `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PiecewiseCost {
    pub pieces: Vec<Piece>,
}

impl PiecewiseCost {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn piece_at(&self, mu: f64) -> &Piece {
        let idx = self.pieces.partition_point(|p| p.hi <= mu);
        &self.pieces[idx.min(self.pieces.len() - 1)]
    }

    pub fn cost_at(&self, mu: f64) -> f64 {
        self.piece_at(mu).cost
    }

    /// Interior breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.lo).collect()
    }

    /// Lowest-cost piece; ties to the leftmost.
    pub fn argmin(&self) -> &Piece {
        self.pieces
            .iter()
            .reduce(|best, p| if p.cost < best.cost { p } else { best })
            .expect("nonempty")
    }

    fn push(&mut self, piece: Piece) {
        if let Some(last) = self.pieces.last_mut() {
            if last.fingerprint == piece.fingerprint && last.hi == piece.lo {
                last.hi = piece.hi;
                return;
            }
        }
        self.pieces.push(piece);
    }
}

/// Upper end of a piece as a plain number in `[0, 1]`.
pub fn display_hi(hi: f64) -> f64 {
    hi.min(1.0)
}

/// Midpoint of a piece, clamped to `[0, 1]`.
pub fn midpoint(p: &Piece) -> f64 {
    0.5 * (p.lo + display_hi(p.hi))
}

/// Sweeps μ from 0 with an arbitrary ledgered search procedure.
///
/// `run(mu, ledger)` must return `(cost, fingerprint)` and leave in `ledger`
/// an interval containing `mu` on which its behaviour is constant.
pub fn sweep<F>(mut run: F) -> Result<PiecewiseCost>
where
    F: FnMut(f64, &mut IntervalLedger) -> Result<(f64, String)>,
{
    let mut out = PiecewiseCost::default();
    let mut mu = 0.0;
    let mut steps = 0;
    loop {
        let mut ledger = IntervalLedger::default();
        let (cost, fingerprint) = run(mu, &mut ledger)?;
        if !ledger.contains(mu) {
            return Err(Error::Contract(format!("ledger [{}, {}) excludes μ = {mu}", ledger.lo, ledger.hi)));
        }
        out.push(Piece { lo: mu, hi: ledger.hi, cost, fingerprint });
        steps += 1;
        if ledger.hi > 1.0 {
            return Ok(out);
        }
        if steps >= MAX_INTERVALS {
            return Err(Error::Runaway(format!("more than {MAX_INTERVALS} intervals, last at μ = {mu}")));
        }
        mu = ledger.hi;
    }
}

/// Runs B&B at `mu` and returns the tree with its invariance interval.
pub fn run_with_ledger(
    q: &MilpInstance,
    rule1: Rule,
    rule2: Rule,
    mu: f64,
    cfg: &BnbConfig,
) -> Result<(SearchTree, IntervalLedger)> {
    let mut rel = Relaxations::new(q, cfg.child_eval);
    let mut ledger = IntervalLedger::default();
    let (tree, _) = run_with(&mut rel, &ScoringSpec::pair(rule1, rule2, mu), cfg, Some(&mut ledger))?;
    Ok((tree, ledger))
}

/// All distinct trees over μ ∈ [0, 1] with their capped tree sizes.
pub fn enumerate_behaviors(q: &MilpInstance, rule1: Rule, rule2: Rule, cfg: &BnbConfig) -> Result<PiecewiseCost> {
    let mut rel = Relaxations::new(q, cfg.child_eval);
    sweep(|mu, ledger| {
        let spec = ScoringSpec::pair(rule1, rule2, mu);
        let (tree, _) = run_with(&mut rel, &spec, cfg, Some(ledger))?;
        Ok((cost_tree_size(&tree, cfg.cost_cap) as f64, tree.fingerprint()))
    })
}

/// Pointwise mean of several piecewise costs.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct AveragedCost {
    /// `(lo, hi, mean)` with `hi` exclusive as in [`Piece`].
    pub pieces: Vec<(f64, f64, f64)>,
}

impl AveragedCost {
    pub fn cost_at(&self, mu: f64) -> f64 {
        let idx = self.pieces.partition_point(|p| p.1 <= mu);
        self.pieces[idx.min(self.pieces.len() - 1)].2
    }

    /// Leftmost interval of minimal mean cost.
    pub fn argmin(&self) -> (f64, f64, f64) {
        *self
            .pieces
            .iter()
            .reduce(|best, p| if p.2 < best.2 { p } else { best })
            .expect("nonempty")
    }
}

/// Merges breakpoints and averages; adjacent equal means are merged.
pub fn average(costs: &[PiecewiseCost]) -> AveragedCost {
    let mut cuts: Vec<f64> = costs.iter().flat_map(|c| c.breakpoints()).collect();
    cuts.push(0.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let m = costs.len() as f64;
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    for (k, &lo) in cuts.iter().enumerate() {
        let hi = cuts.get(k + 1).copied().unwrap_or_else(past_one);
        let mean = costs.iter().map(|c| c.cost_at(lo)).sum::<f64>() / m;
        match out.last_mut() {
            Some(last) if last.2 == mean => last.1 = hi,
            _ => out.push((lo, hi, mean)),
        }
    }
    AveragedCost { pieces: out }
}

/// Empirical risk minimiser over μ: midpoint of the best averaged interval.
pub fn erm_minimize(sample: &[MilpInstance], rule1: Rule, rule2: Rule, cfg: &BnbConfig) -> Result<(f64, AveragedCost)> {
    if sample.is_empty() {
        return Err(Error::Contract("empty sample".into()));
    }
    let costs = sample
        .iter()
        .map(|q| enumerate_behaviors(q, rule1, rule2, cfg))
        .collect::<Result<Vec<_>>>()?;
    let avg = average(&costs);
    let (lo, hi, _) = avg.argmin();
    Ok((0.5 * (lo + display_hi(hi)), avg))
}

/// Result of one grid evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub weights: Vec<f64>,
    pub cost: f64,
    pub fingerprint: String,
}

/// Plain B&B runs at every weight vector of `grid`.
pub fn grid_sweep(q: &MilpInstance, rules: &[Rule], grid: &[Vec<f64>], cfg: &BnbConfig) -> Result<Vec<GridPoint>> {
    let mut rel = Relaxations::new(q, cfg.child_eval);
    grid.iter()
        .map(|w| {
            let spec = ScoringSpec::new(rules.to_vec(), w.clone())?;
            let (tree, _) = run_with(&mut rel, &spec, cfg, None)?;
            Ok(GridPoint {
                weights: w.clone(),
                cost: cost_tree_size(&tree, cfg.cost_cap) as f64,
                fingerprint: tree.fingerprint(),
            })
        })
        .collect()
}

/// `[μ, 1 − μ]` for `points` evenly spaced μ in `[0, 1]`.
pub fn uniform_pair_grid(points: usize) -> Vec<Vec<f64>> {
    (0..points)
        .map(|k| {
            let mu = k as f64 / (points - 1) as f64;
            vec![mu, 1.0 - mu]
        })
        .collect()
}

/// Lattice points of the `d`-simplex with spacing `step`.
pub fn simplex_grid(d: usize, step: f64) -> Vec<Vec<f64>> {
    let k = (1.0 / step).round() as usize;
    let mut out = Vec::new();
    let mut cur = vec![0usize; d];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<f64>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.iter().map(|&c| c as f64 / k as f64).collect());
            return;
        }
        for c in 0..=left {
            cur[i] = c;
            rec(i + 1, left - c, cur, k, out);
        }
    }
    if d > 0 {
        rec(0, k, &mut cur, k, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{family_f, family_g, knapsack_example, FamilyParams};

    fn f12() -> MilpInstance {
        family_f(&FamilyParams { n: 12, mu_star: 0.45, gamma: 1.0 }).unwrap()
    }

    #[test]
    fn ledger_right_end_at_mu_star() {
        let (_, l) = run_with_ledger(&f12(), Rule::MinChange, Rule::MaxChange, 0.2, &BnbConfig::default()).unwrap();
        assert_eq!(l.lo, 0.0);
        assert!((l.hi - 0.45).abs() < 1e-6, "{l:?}");
    }

    #[test]
    fn ledger_left_end_for_family_g() {
        let q = family_g(&FamilyParams { n: 12, mu_star: 0.4, gamma: 1.0 }).unwrap();
        let (_, l) = run_with_ledger(&q, Rule::MinChange, Rule::MaxChange, 0.9, &BnbConfig::default()).unwrap();
        assert!((l.lo - 0.4).abs() < 1e-6, "{l:?}");
    }

    #[test]
    fn identical_rankings_give_full_interval() {
        let q = knapsack_example();
        let (_, l) = run_with_ledger(&q, Rule::MostFrac, Rule::MostFrac, 0.3, &BnbConfig::default()).unwrap();
        assert_eq!((l.lo, l.hi), (0.0, past_one()));
        let pc = enumerate_behaviors(&q, Rule::MostFrac, Rule::MostFrac, &BnbConfig::default()).unwrap();
        assert_eq!(pc.len(), 1);
    }

    #[test]
    fn family_f_two_regimes() {
        let pc = enumerate_behaviors(&f12(), Rule::MinChange, Rule::MaxChange, &BnbConfig::default()).unwrap();
        assert_eq!(pc.len(), 2, "{pc:?}");
        assert!((pc.pieces[1].lo - 0.45).abs() < 1e-6);
        assert!(pc.pieces[0].cost < pc.pieces[1].cost);
    }

    #[test]
    fn grid_agrees_with_sweep_on_family_f() {
        let q = f12();
        let cfg = BnbConfig::default();
        let pc = enumerate_behaviors(&q, Rule::MinChange, Rule::MaxChange, &cfg).unwrap();
        let grid = grid_sweep(&q, &[Rule::MinChange, Rule::MaxChange], &uniform_pair_grid(1001), &cfg).unwrap();
        for g in grid {
            assert_eq!(g.fingerprint, pc.piece_at(g.weights[0]).fingerprint, "μ = {}", g.weights[0]);
        }
    }

    #[test]
    fn within_interval_invariance() {
        let q = f12();
        let cfg = BnbConfig::default();
        let pc = enumerate_behaviors(&q, Rule::MinChange, Rule::MaxChange, &cfg).unwrap();
        for p in &pc.pieces {
            let hi = display_hi(p.hi);
            for mu in [p.lo + 1e-9, midpoint(p), hi - 1e-9] {
                let (tree, _) = crate::bnb::run(&q, &ScoringSpec::pair(Rule::MinChange, Rule::MaxChange, mu), &cfg).unwrap();
                assert_eq!(tree.fingerprint(), p.fingerprint);
            }
        }
    }

    #[test]
    fn average_and_erm() {
        let a = PiecewiseCost {
            pieces: vec![
                Piece { lo: 0.0, hi: 0.4, cost: 10.0, fingerprint: "a".into() },
                Piece { lo: 0.4, hi: past_one(), cost: 2.0, fingerprint: "b".into() },
            ],
        };
        let b = PiecewiseCost {
            pieces: vec![
                Piece { lo: 0.0, hi: 0.45, cost: 2.0, fingerprint: "c".into() },
                Piece { lo: 0.45, hi: past_one(), cost: 10.0, fingerprint: "d".into() },
            ],
        };
        let avg = average(&[a.clone(), b.clone()]);
        assert_eq!(avg.pieces.len(), 3);
        assert_eq!(avg.argmin(), (0.4, 0.45, 2.0));
        for k in 0..=100 {
            let mu = k as f64 / 100.0;
            assert_eq!(avg.cost_at(mu), (a.cost_at(mu) + b.cost_at(mu)) / 2.0);
        }
    }

    #[test]
    fn erm_single_instance_is_own_argmin() {
        let q = f12();
        let cfg = BnbConfig::default();
        let (mu, avg) = erm_minimize(std::slice::from_ref(&q), Rule::MinChange, Rule::MaxChange, &cfg).unwrap();
        let pc = enumerate_behaviors(&q, Rule::MinChange, Rule::MaxChange, &cfg).unwrap();
        assert_eq!(avg.argmin().2, pc.argmin().cost);
        assert!(mu < 0.45);
    }

    #[test]
    fn grid_helpers() {
        assert_eq!(simplex_grid(3, 0.1).len(), 66);
        assert_eq!(simplex_grid(2, 0.5), vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]);
        assert_eq!(uniform_pair_grid(1001).len(), 1001);
        let q = knapsack_example();
        let pts = grid_sweep(&q, &[Rule::Product, Rule::Product], &[vec![0.0, 1.0], vec![1.0, 0.0]], &BnbConfig::default()).unwrap();
        assert_eq!(pts[0].fingerprint, pts[1].fingerprint);
        let three = grid_sweep(&q, &[Rule::MostFrac, Rule::Product, Rule::MinChange], &simplex_grid(3, 0.1), &BnbConfig::default()).unwrap();
        assert_eq!(three.len(), 66);
    }

    #[test]
    fn first_true_finds_exact_threshold() {
        let t = first_true(0.0, 1.0, &|x| x >= 0.3);
        assert_eq!(t, 0.3);
    }
}
