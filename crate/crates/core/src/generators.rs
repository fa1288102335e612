//! Instance constructors: adversarial families, the knapsack example and
//! random desk-scale domains. Randomised generators use ChaCha8 so a seed
//! reproduces the same instance on every platform.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lp::{Constraint, Sense};
use crate::milp::MilpInstance;

/// Strict-inequality slack of the separator encoding.
pub const SEPARATOR_SLACK: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `maximize c · x` subject to `2 Σ x_i = n_odd`, x binary.
pub fn jeroslow(n_odd: usize, c: &[f64]) -> Result<MilpInstance> {
    if n_odd.is_multiple_of(2) {
        return Err(Error::Contract(format!("jeroslow needs an odd size, got {n_odd}")));
    }
    if c.len() != n_odd {
        return Err(Error::Dimension(format!("{} costs for {n_odd} variables", c.len())));
    }
    MilpInstance::pure_binary(c.to_vec(), vec![Constraint::new(vec![2.0; n_odd], Sense::Eq, n_odd as f64)])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyParams {
    pub n: usize,
    pub mu_star: f64,
    pub gamma: f64,
}

fn check_family(p: &FamilyParams, mu_hi: f64) -> Result<()> {
    if p.n < 6 || p.n % 2 == 1 {
        return Err(Error::Range(format!("n must be even and at least 6, got {}", p.n)));
    }
    if !(p.mu_star > 1.0 / 3.0 && p.mu_star < mu_hi) {
        return Err(Error::Range(format!("mu* = {} outside (1/3, {mu_hi:.4})", p.mu_star)));
    }
    if p.gamma.is_nan() || p.gamma < 1.0 {
        return Err(Error::Range(format!("gamma must be at least 1, got {}", p.gamma)));
    }
    Ok(())
}

/// Two parity blocks glued side by side: `2 Σ_{i<n-3} x_i = n − 3` and
/// `2 (x_{n-3} + x_{n-2} + x_{n-1}) = 3`.
fn glued(n: usize, objective: Vec<f64>) -> Result<MilpInstance> {
    let mut big = vec![0.0; n];
    let mut small = vec![0.0; n];
    big[..n - 3].iter_mut().for_each(|v| *v = 2.0);
    small[n - 3..].iter_mut().for_each(|v| *v = 2.0);
    MilpInstance::pure_binary(
        objective,
        vec![
            Constraint::new(big, Sense::Eq, (n - 3) as f64),
            Constraint::new(small, Sense::Eq, 3.0),
        ],
    )
}

/// Small-tree-below-μ* family.
pub fn family_f(p: &FamilyParams) -> Result<MilpInstance> {
    check_family(p, 0.5)?;
    let g = p.gamma;
    let mut c: Vec<f64> = (1..=p.n - 3).map(|i| g * i as f64).collect();
    c.extend([0.0, g * 1.5, g * (3.0 - 1.0 / (2.0 * p.mu_star))]);
    Ok(glued(p.n, c)?.with_header(format!("familyF n={} mustar={} gamma={}", p.n, p.mu_star, p.gamma)))
}

/// Small-tree-above-μ* family.
pub fn family_g(p: &FamilyParams) -> Result<MilpInstance> {
    check_family(p, 2.0 / 3.0)?;
    let g = p.gamma;
    let top = 3.0 - 1.0 / (2.0 * p.mu_star);
    let half = (p.n - 4) / 2;
    let mut c: Vec<f64> = (1..=p.n - 3)
        .map(|i| {
            if i <= half {
                0.0
            } else if i == half + 1 {
                g * 1.5
            } else {
                g * top
            }
        })
        .collect();
    c.extend([g, 2.0 * g, 3.0 * g]);
    Ok(glued(p.n, c)?.with_header(format!("familyG n={} mustar={} gamma={}", p.n, p.mu_star, p.gamma)))
}

/// Two-point distribution: `qa` from the G family at `a`, `qb` from the F family at `b`.
#[derive(Clone, Debug)]
pub struct Mixture {
    pub qa: MilpInstance,
    pub qb: MilpInstance,
}

impl Mixture {
    /// Draws `qa` or `qb` with probability ½ each.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> &MilpInstance {
        if rng.gen_bool(0.5) {
            &self.qa
        } else {
            &self.qb
        }
    }
}

pub fn worst_case_mixture(n: usize, a: f64, b: f64, gamma_a: f64, gamma_b: f64) -> Result<Mixture> {
    if !(1.0 / 3.0 < a && a < b && b < 0.5) {
        return Err(Error::Range(format!("need 1/3 < a < b < 1/2, got a={a}, b={b}")));
    }
    Ok(Mixture {
        qa: family_g(&FamilyParams { n, mu_star: a, gamma: gamma_a })?,
        qb: family_f(&FamilyParams { n, mu_star: b, gamma: gamma_b })?,
    })
}

/// The 7-item knapsack with capacity 100.
pub fn knapsack_example() -> MilpInstance {
    MilpInstance::pure_binary(
        vec![40.0, 60.0, 10.0, 10.0, 3.0, 20.0, 60.0],
        vec![Constraint::new(vec![40.0, 50.0, 30.0, 10.0, 10.0, 40.0, 30.0], Sense::Le, 100.0)],
    )
    .expect("fixed instance is well formed")
    .with_header("knapsack example, capacity 100")
}

/// A bid on a bundle of goods.
#[derive(Clone, Debug, PartialEq)]
pub struct Bid {
    pub bidder: usize,
    pub goods: Vec<usize>,
    pub value: f64,
}

/// One binary per bid; each good sold at most once, each bidder wins at most one bundle.
pub fn encode_winner_determination(n_bidders: usize, n_goods: usize, bids: &[Bid]) -> Result<MilpInstance> {
    if bids.iter().any(|b| b.bidder >= n_bidders || b.goods.iter().any(|&g| g >= n_goods)) {
        return Err(Error::Dimension("bid refers to an unknown bidder or good".into()));
    }
    let mut rows = Vec::new();
    for g in 0..n_goods {
        let coeffs: Vec<f64> = bids.iter().map(|b| if b.goods.contains(&g) { 1.0 } else { 0.0 }).collect();
        if coeffs.iter().any(|&c| c > 0.0) {
            rows.push(Constraint::new(coeffs, Sense::Le, 1.0));
        }
    }
    for bidder in 0..n_bidders {
        let coeffs: Vec<f64> = bids.iter().map(|b| if b.bidder == bidder { 1.0 } else { 0.0 }).collect();
        if coeffs.iter().sum::<f64>() > 1.0 {
            rows.push(Constraint::new(coeffs, Sense::Le, 1.0));
        }
    }
    MilpInstance::pure_binary(bids.iter().map(|b| b.value).collect(), rows)
}

/// Random auction: each bidder places 1 to 3 bids on bundles of up to `max_bundle` goods,
/// valued at `U[0,1] · |bundle|`.
pub fn gen_winner_determination(n_bidders: usize, n_goods: usize, max_bundle: usize, seed: u64) -> Result<MilpInstance> {
    if n_bidders == 0 || n_goods == 0 || max_bundle == 0 {
        return Err(Error::Range("auction sizes must be at least 1".into()));
    }
    let mut r = rng(seed);
    let mut bids = Vec::new();
    for bidder in 0..n_bidders {
        for _ in 0..r.gen_range(1..=3) {
            let size = r.gen_range(1..=max_bundle.min(n_goods));
            let mut goods = sample(&mut r, n_goods, size).into_vec();
            goods.sort_unstable();
            let value = r.gen::<f64>() * size as f64;
            bids.push(Bid { bidder, goods, value });
        }
    }
    Ok(encode_winner_determination(n_bidders, n_goods, &bids)?.with_header(format!(
        "wdp bidders={n_bidders} goods={n_goods} max_bundle={max_bundle} seed={seed}"
    )))
}

/// Facility location with opening costs `f[j]` and service costs `d[i][j]`.
///
/// Variables: `x_j` (binary, open facility j) then `y_ij` (continuous) at
/// index `n_fac + i·n_fac + j`. The minimisation is encoded by negating costs.
pub fn encode_facility_location(f: &[f64], d: &[Vec<f64>]) -> Result<MilpInstance> {
    let nf = f.len();
    let nc = d.len();
    if d.iter().any(|row| row.len() != nf) {
        return Err(Error::Dimension("service cost rows must have one entry per facility".into()));
    }
    let n = nf + nc * nf;
    let y = |i: usize, j: usize| nf + i * nf + j;
    let mut obj: Vec<f64> = f.iter().map(|v| -v).collect();
    obj.extend(d.iter().flatten().map(|v| -v));
    let mut rows = Vec::new();
    for i in 0..nc {
        let mut c = vec![0.0; n];
        (0..nf).for_each(|j| c[y(i, j)] = 1.0);
        rows.push(Constraint::new(c, Sense::Eq, 1.0));
    }
    for i in 0..nc {
        for j in 0..nf {
            let mut c = vec![0.0; n];
            c[y(i, j)] = 1.0;
            c[j] = -1.0;
            rows.push(Constraint::new(c, Sense::Le, 0.0));
        }
    }
    let bins: Vec<usize> = (0..nf).collect();
    MilpInstance::new(obj, rows, &bins)
}

pub fn gen_facility_location(n_fac: usize, n_cust: usize, seed: u64) -> Result<MilpInstance> {
    if n_fac == 0 || n_cust == 0 {
        return Err(Error::Range("facility location sizes must be at least 1".into()));
    }
    let mut r = rng(seed);
    let f: Vec<f64> = (0..n_fac).map(|_| r.gen_range(0.0..3e3)).collect();
    let d: Vec<Vec<f64>> = (0..n_cust).map(|_| (0..n_fac).map(|_| r.gen_range(0.0..1e4)).collect()).collect();
    Ok(encode_facility_location(&f, &d)?
        .with_header(format!("facility n_fac={n_fac} n_cust={n_cust} seed={seed}")))
}

/// k-median style clustering over a distance matrix.
///
/// Variables: `x_i` (point i is a centre) then `y_ij` at `n + i·n + j`
/// (point i assigned to centre j), all binary.
pub fn encode_kmeans(dist: &[Vec<f64>], k: usize) -> Result<MilpInstance> {
    let n = dist.len();
    if k == 0 || k > n {
        return Err(Error::Range(format!("need 1 <= k <= {n}, got {k}")));
    }
    if dist.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension("distance matrix must be square".into()));
    }
    let nv = n + n * n;
    let y = |i: usize, j: usize| n + i * n + j;
    let mut obj = vec![0.0; n];
    obj.extend(dist.iter().flatten().map(|v| -v));
    let mut rows = Vec::new();
    let mut count = vec![0.0; nv];
    count[..n].iter_mut().for_each(|v| *v = 1.0);
    rows.push(Constraint::new(count, Sense::Eq, k as f64));
    for i in 0..n {
        let mut c = vec![0.0; nv];
        (0..n).for_each(|j| c[y(i, j)] = 1.0);
        rows.push(Constraint::new(c, Sense::Eq, 1.0));
    }
    for i in 0..n {
        for j in 0..n {
            let mut c = vec![0.0; nv];
            c[y(i, j)] = 1.0;
            c[j] = -1.0;
            rows.push(Constraint::new(c, Sense::Le, 0.0));
        }
    }
    MilpInstance::pure_binary(obj, rows)
}

/// Asymmetric distances `U[0,1]` with a zero diagonal.
pub fn gen_kmeans(n_pts: usize, k: usize, seed: u64) -> Result<MilpInstance> {
    let mut r = rng(seed);
    let dist: Vec<Vec<f64>> = (0..n_pts)
        .map(|i| (0..n_pts).map(|j| if i == j { 0.0 } else { r.gen::<f64>() }).collect())
        .collect();
    Ok(encode_kmeans(&dist, k)?.with_header(format!("kmeans n={n_pts} k={k} seed={seed}")))
}

/// Minimum number of points to drop so the rest are strictly separated by a
/// homogeneous hyperplane `w ∈ [-1, 1]^dim`.
///
/// Variables: `x_i` (binary, point i mislabelled) then `u_k ∈ [0, 1]` with
/// `w_k = 2 u_k − 1`.
pub fn encode_linear_separator(points: &[Vec<f64>], labels: &[bool]) -> Result<MilpInstance> {
    let n = points.len();
    if labels.len() != n {
        return Err(Error::Dimension("one label per point required".into()));
    }
    let dim = points.first().map_or(0, Vec::len);
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Dimension("points must share a dimension".into()));
    }
    let big_m = points.iter().map(|p| p.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max) + 1.0;
    let mut obj = vec![-1.0; n];
    obj.extend(vec![0.0; dim]);
    let mut rows = Vec::new();
    for (i, (p, &lab)) in points.iter().zip(labels).enumerate() {
        let z = if lab { 1.0 } else { -1.0 };
        let mut c = vec![0.0; n + dim];
        c[i] = big_m;
        for k in 0..dim {
            c[n + k] = 2.0 * z * p[k];
        }
        let rhs = SEPARATOR_SLACK + z * p.iter().sum::<f64>();
        rows.push(Constraint::new(c, Sense::Ge, rhs));
    }
    let bins: Vec<usize> = (0..n).collect();
    Ok(MilpInstance::new(obj, rows, &bins)?
        .with_header(format!("affine w_k = 2*u_k - 1 for variables {}..{}", n, n + dim)))
}

/// Gaussian points labelled by a Gaussian hyperplane, then `n_flips` labels flipped.
pub fn gen_linear_separator(n_pts: usize, dim: usize, n_flips: usize, seed: u64) -> Result<MilpInstance> {
    if n_flips > n_pts {
        return Err(Error::Range(format!("{n_flips} flips for {n_pts} points")));
    }
    let mut r = rng(seed);
    let w: Vec<f64> = (0..dim).map(|_| r.sample(StandardNormal)).collect();
    let points: Vec<Vec<f64>> = (0..n_pts).map(|_| (0..dim).map(|_| StandardNormal.sample(&mut r)).collect()).collect();
    let mut labels: Vec<bool> = points.iter().map(|p| p.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() >= 0.0).collect();
    for i in sample(&mut r, n_pts, n_flips) {
        labels[i] = !labels[i];
    }
    Ok(encode_linear_separator(&points, &labels)?
        .with_header(format!("linsep n={n_pts} dim={dim} flips={n_flips} seed={seed}")))
}
