//! Sample-complexity and generalisation bounds. Logarithms are natural
//! unless a name says otherwise; big-O bounds are evaluated with constant 1.

use crate::erm::PiecewiseCost;

/// Smallest `m ≥ 1` with `2^m > m · 2^{n(n−1)/2} · n^n + 1`.
pub fn pdim_pathwise(n: u64) -> u64 {
    let nf = n as f64;
    let log2_t = nf * (nf - 1.0) / 2.0 + if n > 0 { nf * nf.log2() } else { 0.0 };
    let mut m = 1u64;
    loop {
        let mf = m as f64;
        // log2(m·T + 1) = log2 m + log2 T + log2(1 + 1/(m·T))
        let rhs = mf.log2() + log2_t + (-(log2_t + mf.log2()) * std::f64::consts::LN_2).exp().ln_1p() / std::f64::consts::LN_2;
        if mf > rhs {
            return m;
        }
        m += 1;
    }
}

/// Smallest `m ≥ 1` with `2^m > d · m^d · n^{2d(κ̄+1)}`.
pub fn pdim_general(n: u64, d: u64, kappa_bar: u64) -> u64 {
    let (nf, df) = (n as f64, d as f64);
    let konst = df.log2() + 2.0 * df * (kappa_bar as f64 + 1.0) * nf.log2();
    let ok = |m: u64| (m as f64) > konst + df * (m as f64).log2();
    // m − d·log2 m is increasing once m ≥ d / ln 2; scan below that, bisect above.
    let knee = (2 * d).max(2);
    if let Some(m) = (1..=knee).find(|&m| ok(m)) {
        return m;
    }
    let (mut lo, mut hi) = (knee, knee * 2);
    while !ok(hi) {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `κ√(pdim/m) + κ√(ln(1/δ)/m)`, up to constants.
pub fn gen_bound_pdim(pdim: f64, m: f64, kappa: f64, delta: f64) -> f64 {
    kappa * (pdim / m).sqrt() + kappa * ((1.0 / delta).ln() / m).sqrt()
}

/// `κ√((n² + 2n ln n + 2 ln m)/m)`.
pub fn rad_worstcase(n: f64, m: f64, kappa: f64) -> f64 {
    let nl = if n > 0.0 { 2.0 * n * n.ln() } else { 0.0 };
    kappa * ((n * n + nl + 2.0 * m.ln()) / m).sqrt()
}

/// `c√(2 ln N / m)`.
pub fn massart_bound(big_n: f64, m: f64, c: f64) -> f64 {
    c * (2.0 * big_n.ln() / m).sqrt()
}

/// `2·erad + 4κ√((2/m) ln(4/δ))`.
pub fn gen_bound_rad(erad: f64, m: f64, kappa: f64, delta: f64) -> f64 {
    2.0 * erad + 4.0 * kappa * ((2.0 / m) * (4.0 / delta).ln()).sqrt()
}

/// Value of the data-dependent Rademacher bound and whether the minimiser
/// was found in the interior of the search range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadEstimate {
    pub value: f64,
    pub converged: bool,
}

/// `inf_{λ>0} (1/λ) ln Σ_a exp(½ (λ‖a‖₂/m)²)` over the distinct vectors.
pub fn rad_datadep(vectors: &[Vec<f64>], m: f64) -> RadEstimate {
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for v in vectors {
        if !distinct.contains(&v) {
            distinct.push(v);
        }
    }
    let r2: Vec<f64> = distinct
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>() / (m * m))
        .collect();
    let rmax = r2.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt();
    if rmax == 0.0 {
        return RadEstimate { value: 0.0, converged: true };
    }
    let h = |t: f64| {
        let lam = t.exp();
        let exps: Vec<f64> = r2.iter().map(|r| 0.5 * lam * lam * r).collect();
        let top = exps.iter().fold(f64::MIN, |a, &b| a.max(b));
        (top + exps.iter().map(|e| (e - top).exp()).sum::<f64>().ln()) / lam
    };
    let centre = -rmax.ln();
    let (lo, hi, steps) = (centre - 25.0, centre + 10.0, 700);
    let at = |k: usize| lo + (hi - lo) * k as f64 / steps as f64;
    let best = (0..=steps).min_by(|&a, &b| h(at(a)).total_cmp(&h(at(b)))).expect("nonempty grid");
    if best == 0 || best == steps {
        return RadEstimate { value: h(at(best)), converged: false };
    }
    let (mut a, mut b) = (at(best - 1), at(best + 1));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    while b - a > 1e-6 {
        if h(c) < h(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    let value = h(0.5 * (a + b)).min(h(at(best)));
    RadEstimate { value, converged: true }
}

/// Distinct per-interval cost tuples `(cost(Q_1, μ), …, cost(Q_m, μ))`, capped at `kappa`.
pub fn cost_vectors(costs: &[&PiecewiseCost], kappa: f64) -> Vec<Vec<f64>> {
    let mut cuts: Vec<f64> = costs.iter().flat_map(|c| c.breakpoints()).collect();
    cuts.push(0.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mu in cuts {
        let v: Vec<f64> = costs.iter().map(|c| c.cost_at(mu).min(kappa)).collect();
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// One row of a worst-case versus data-dependent comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub m: usize,
    pub worst_case: f64,
    pub data_dependent: f64,
    pub distinct_vectors: usize,
    pub converged: bool,
}

/// Both generalisation curves, using the first `m` instances for each `m` in `ms`.
pub fn generalization_curves(costs: &[PiecewiseCost], ms: &[usize], n: f64, kappa: f64, delta: f64) -> Vec<CurvePoint> {
    ms.iter()
        .filter(|&&m| m >= 1 && m <= costs.len())
        .map(|&m| {
            let refs: Vec<&PiecewiseCost> = costs[..m].iter().collect();
            let vecs = cost_vectors(&refs, kappa);
            let mf = m as f64;
            let est = rad_datadep(&vecs, mf);
            CurvePoint {
                m,
                worst_case: gen_bound_rad(rad_worstcase(n, mf, kappa), mf, kappa, delta),
                data_dependent: gen_bound_rad(est.value, mf, kappa, delta),
                distinct_vectors: vecs.len(),
                converged: est.converged,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct integer scan for small n.
    fn scan(n: u32) -> u64 {
        let t = 2u128.pow(n * (n - 1) / 2) * (n as u128).pow(n);
        (1u64..).find(|&m| 2u128.pow(m as u32) > m as u128 * t + 1).unwrap()
    }

    #[test]
    fn pathwise_matches_integer_scan() {
        for n in 1..=5 {
            assert_eq!(pdim_pathwise(n as u64), scan(n), "n = {n}");
        }
        assert_eq!(pdim_pathwise(1), 2);
    }

    #[test]
    fn pathwise_is_quadratic() {
        let c = (2..=40u64).map(|n| pdim_pathwise(n) as f64 / (n * n) as f64).fold(0.0, f64::max);
        for n in 2..=40u64 {
            assert!(pdim_pathwise(n) as f64 <= c * (n * n) as f64);
        }
        assert!(c < 4.0);
    }

    #[test]
    fn general_is_monotone_and_dominates() {
        let a = pdim_general(10, 2, 100);
        let b = pdim_general(10, 2, 200);
        assert!(a > 0 && b > a);
        for n in 4..=12 {
            for kb in [n, 2 * n] {
                assert!(pdim_pathwise(n) <= pdim_general(n, 2, kb));
            }
        }
        let k = pdim_general(10, 1, 3);
        let konst = 8.0 * 10f64.log2();
        assert!(k as f64 > konst + (k as f64).log2());
        assert!(((k - 1) as f64) <= konst + ((k - 1) as f64).log2());
        assert!(pdim_general(10, 2, 1_000_000) > 1_000_000);
    }

    #[test]
    fn pdim_bound_arithmetic() {
        assert!((gen_bound_pdim(0.0, 1.0, 1.0, (-1f64).exp()) - 1.0).abs() < 1e-12);
        let v = gen_bound_pdim(100.0, 400.0, 150.0, 0.05);
        assert!((v - 150.0 * (0.5 + (20f64.ln() / 400.0).sqrt())).abs() < 1e-9);
        let a = gen_bound_pdim(7.0, 10.0, 3.0, 0.1);
        assert!((gen_bound_pdim(7.0, 40.0, 3.0, 0.1) - a / 2.0).abs() < 1e-12);
    }

    #[test]
    fn worstcase_arithmetic() {
        assert_eq!(rad_worstcase(1.0, 1.0, 1.0), 1.0);
        let v = rad_worstcase(10.0, 100.0, 150.0);
        let e = 150.0 * ((100.0 + 20.0 * 10f64.ln() + 2.0 * 100f64.ln()) / 100.0).sqrt();
        assert!((v - e).abs() < 1e-9);
        assert!(rad_worstcase(10.0, 200.0, 150.0) < v);
    }

    #[test]
    fn massart_and_rad_arithmetic() {
        assert_eq!(massart_bound(1.0, 5.0, 3.0), 0.0);
        assert!((massart_bound((8f64).exp(), 16.0, 1.0) - 1.0).abs() < 1e-12);
        assert!((massart_bound(5.0, 9.0, 2.0) - 2.0 * massart_bound(5.0, 9.0, 1.0)).abs() < 1e-15);
        let delta = 4.0 / std::f64::consts::E;
        assert!((gen_bound_rad(0.0, 32.0, 1.0, delta) - 1.0).abs() < 1e-12);
        assert!((gen_bound_rad(0.5, 32.0, 1.0, delta) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn datadep_cases() {
        assert_eq!(rad_datadep(&[vec![0.0, 0.0]], 2.0).value, 0.0);
        let single = rad_datadep(&[vec![3.0, 4.0]], 2.0);
        assert!(!single.converged && single.value < 1e-6);
        let vecs: Vec<Vec<f64>> = (0..8).map(|k| vec![k as f64, 10.0 - k as f64, 3.0]).collect();
        let est = rad_datadep(&vecs, 3.0);
        assert!(est.converged);
        assert!(est.value <= massart_bound(8.0, 3.0, 10.0) + 1e-6);
        // The optimum is below the value at an arbitrary λ.
        assert!(est.value > 0.0);
    }

    #[test]
    fn bounds_monotone_in_m_and_kappa() {
        for m in 1..50 {
            let (a, b) = (m as f64, m as f64 + 1.0);
            assert!(rad_worstcase(8.0, b, 10.0) <= rad_worstcase(8.0, a, 10.0));
            assert!(gen_bound_rad(0.1, b, 10.0, 0.05) <= gen_bound_rad(0.1, a, 10.0, 0.05));
            assert!(gen_bound_pdim(30.0, b, 10.0, 0.05) <= gen_bound_pdim(30.0, a, 10.0, 0.05));
            assert!(rad_worstcase(8.0, a, 11.0) >= rad_worstcase(8.0, a, 10.0));
        }
    }
}
