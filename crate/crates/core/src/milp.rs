//! Binary MILP instances, branching assignments and the text file format.
//!
//! File format, one directive per line (`#` lines are header comments kept verbatim):
//!
//! ```text
//! n 3
//! obj 1 2 3
//! row le 4 1 1 1
//! bin 0 2
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lp::{self, Constraint, LinearProgram, LpSolution, Sense};

/// Integrality tolerance.
pub const INT_TOL: f64 = 1e-6;

/// `maximize c · x` over rows, with `binary[j]` marking `x_j ∈ {0, 1}`;
/// the remaining variables are continuous in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpInstance {
    pub objective: Vec<f64>,
    pub rows: Vec<Constraint>,
    pub binary: Vec<bool>,
    /// Free-form header lines, written as `# ...` comments.
    pub header: Vec<String>,
}

impl MilpInstance {
    pub fn new(objective: Vec<f64>, rows: Vec<Constraint>, binary_vars: &[usize]) -> Result<Self> {
        let n = objective.len();
        let mut binary = vec![false; n];
        for &i in binary_vars {
            if i >= n {
                return Err(Error::Dimension(format!("binary index {i} out of range for n = {n}")));
            }
            binary[i] = true;
        }
        for (r, row) in rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::Dimension(format!(
                    "row {r} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
        }
        Ok(MilpInstance { objective, rows, binary, header: Vec::new() })
    }

    /// Every variable binary.
    pub fn pure_binary(objective: Vec<f64>, rows: Vec<Constraint>) -> Result<Self> {
        let all: Vec<usize> = (0..objective.len()).collect();
        Self::new(objective, rows, &all)
    }

    pub fn with_header(mut self, line: impl Into<String>) -> Self {
        self.header.push(line.into());
        self
    }

    pub fn n(&self) -> usize {
        self.objective.len()
    }

    pub fn binary_vars(&self) -> Vec<usize> {
        (0..self.n()).filter(|&j| self.binary[j]).collect()
    }

    /// The value substituted for an infeasible child's bound change: `‖c‖₁ + 1`.
    pub fn big_value(&self) -> f64 {
        self.objective.iter().map(|c| c.abs()).sum::<f64>() + 1.0
    }

    /// LP relaxation with the assignment's fixings applied as bounds.
    pub fn relaxation(&self, a: &PartialAssignment) -> LinearProgram {
        let mut lp = LinearProgram::new(self.objective.clone(), self.rows.clone());
        for (j, v) in a.values.iter().enumerate() {
            if let Some(v) = v {
                let b = if *v { 1.0 } else { 0.0 };
                lp.bounds[j] = (b, b);
            }
        }
        lp
    }

    pub fn solve_relaxation(&self, a: &PartialAssignment) -> Result<LpSolution> {
        lp::solve(&self.relaxation(a))
    }

    pub fn root(&self) -> PartialAssignment {
        PartialAssignment { values: vec![None; self.n()] }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for h in &self.header {
            let _ = writeln!(s, "# {h}");
        }
        let _ = writeln!(s, "n {}", self.n());
        let _ = writeln!(s, "obj {}", join(&self.objective));
        for r in &self.rows {
            let _ = writeln!(s, "row {} {} {}", r.sense.token(), r.rhs, join(&r.coeffs));
        }
        let bins: Vec<String> = self.binary_vars().iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "bin {}", bins.join(" "));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut header = Vec::new();
        let mut n: Option<usize> = None;
        let mut obj: Option<Vec<f64>> = None;
        let mut rows = Vec::new();
        let mut bins: Vec<usize> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let err = |msg: String| Error::Parse { line, msg };
            if let Some(h) = raw.strip_prefix('#') {
                header.push(h.strip_prefix(' ').unwrap_or(h).to_string());
                continue;
            }
            let mut toks = raw.split_whitespace();
            let Some(kw) = toks.next() else { continue };
            match kw {
                "n" => {
                    let v = toks.next().ok_or_else(|| err("missing n".into()))?;
                    n = Some(v.parse().map_err(|e| err(format!("bad n: {e}")))?);
                }
                "obj" => obj = Some(parse_floats(toks, line)?),
                "row" => {
                    let sense = toks
                        .next()
                        .and_then(Sense::from_token)
                        .ok_or_else(|| err("row sense must be le, eq or ge".into()))?;
                    let rhs: f64 = toks
                        .next()
                        .ok_or_else(|| err("missing rhs".into()))?
                        .parse()
                        .map_err(|e| err(format!("bad rhs: {e}")))?;
                    rows.push(Constraint::new(parse_floats(toks, line)?, sense, rhs));
                }
                "bin" => {
                    for t in toks {
                        bins.push(t.parse().map_err(|e| err(format!("bad index {t}: {e}")))?);
                    }
                }
                other => return Err(err(format!("unknown directive {other}"))),
            }
        }
        let obj = obj.ok_or(Error::Parse { line: 0, msg: "missing obj line".into() })?;
        if let Some(n) = n {
            if n != obj.len() {
                return Err(Error::Dimension(format!("n = {n} but obj has {} entries", obj.len())));
            }
        }
        let mut q = MilpInstance::new(obj, rows, &bins)?;
        q.header = header;
        Ok(q)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_floats<'a>(toks: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<f64>> {
    toks.map(|t| t.parse::<f64>().map_err(|e| Error::Parse { line, msg: format!("bad number {t}: {e}") }))
        .collect()
}

/// Per-variable fixing; only binary variables are ever assigned.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialAssignment {
    pub values: Vec<Option<bool>>,
}

impl PartialAssignment {
    pub fn get(&self, i: usize) -> Option<bool> {
        self.values[i]
    }

    pub fn assigned_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Compact cache key: 0, 1, or 2 for unassigned.
    pub fn key(&self) -> Vec<u8> {
        self.values.iter().map(|v| v.map_or(2, u8::from)).collect()
    }
}

/// The assignment of child `Q_i^v`.
pub fn child(q: &MilpInstance, a: &PartialAssignment, i: usize, v: bool) -> Result<PartialAssignment> {
    if i >= q.n() || !q.binary[i] {
        return Err(Error::Contract(format!("variable {i} is not binary")));
    }
    if a.values[i].is_some() {
        return Err(Error::Contract(format!("variable {i} is already assigned")));
    }
    let mut next = a.clone();
    next.values[i] = Some(v);
    Ok(next)
}

/// True iff every binary variable is within [`INT_TOL`] of 0 or 1.
pub fn is_integral(sol: &LpSolution, q: &MilpInstance) -> bool {
    sol.is_optimal()
        && q.binary_vars()
            .into_iter()
            .all(|j| sol.x[j].min(1.0 - sol.x[j]).abs() <= INT_TOL)
}

/// Variables of `q` that are binary, unassigned in `a` and fractional in `x`.
pub fn fractional_candidates(q: &MilpInstance, a: &PartialAssignment, x: &[f64]) -> Vec<usize> {
    (0..q.n())
        .filter(|&j| q.binary[j] && a.values[j].is_none() && x[j].min(1.0 - x[j]) > INT_TOL)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::LpStatus;
    use proptest::prelude::*;

    fn q18() -> MilpInstance {
        let c = 3.0 - 1.0 / (2.0 * 0.45);
        let mut a1 = vec![0.0; 8];
        let mut a2 = vec![0.0; 8];
        a1[..5].iter_mut().for_each(|v| *v = 2.0);
        a2[5..].iter_mut().for_each(|v| *v = 2.0);
        MilpInstance::pure_binary(
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 0.0, 1.5, c],
            vec![Constraint::new(a1, Sense::Eq, 5.0), Constraint::new(a2, Sense::Eq, 3.0)],
        )
        .unwrap()
    }

    #[test]
    fn child_assigns_and_rejects_reassignment() {
        let q = q18();
        let a = child(&q, &q.root(), 0, true).unwrap();
        assert_eq!(a.get(0), Some(true));
        assert_eq!(a.assigned_count(), 1);
        assert!(matches!(child(&q, &a, 0, false), Err(Error::Contract(_))));
    }

    #[test]
    fn branching_small_side_shifts_half() {
        let q = q18();
        let root = q.solve_relaxation(&q.root()).unwrap();
        let a = child(&q, &q.root(), 6, false).unwrap();
        let sol = q.solve_relaxation(&a).unwrap();
        let mut expect = root.x.clone();
        expect[6] -= 0.5;
        expect[5] += 0.5;
        for (v, e) in sol.x.iter().zip(&expect) {
            assert!((v - e).abs() < 1e-9);
        }
    }

    #[test]
    fn integrality_predicate() {
        let q = q18();
        let root = q.solve_relaxation(&q.root()).unwrap();
        assert!(!is_integral(&root, &q));
        let mut s = root.clone();
        s.x = vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0 - 1e-7];
        assert!(is_integral(&s, &q));
        s.x[7] = 1.0;
        assert!(is_integral(&s, &q));
    }

    #[test]
    fn text_roundtrip_is_bit_exact() {
        let q = q18().with_header("affine note");
        let text = q.to_text();
        let back = MilpInstance::from_text(&text).unwrap();
        assert_eq!(back, q);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(MilpInstance::from_text("obj 1\nrow lt 1 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(MilpInstance::from_text("n 2\nobj 1\n").is_err());
        assert!(MilpInstance::from_text("obj 1 2\nbin 5\n").is_err());
    }

    fn random_instance() -> impl Strategy<Value = MilpInstance> {
        (2usize..=6, 1usize..=3).prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec((prop::collection::vec(0.0f64..5.0, n), 1.0f64..10.0), m),
            )
                .prop_map(|(obj, rows)| {
                    let rows = rows.into_iter().map(|(c, r)| Constraint::new(c, Sense::Le, r)).collect();
                    MilpInstance::pure_binary(obj, rows).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn child_bound_is_monotone(q in random_instance(), pick in 0usize..6, v in any::<bool>()) {
            let i = pick % q.n();
            let parent = q.solve_relaxation(&q.root()).unwrap();
            let kid = q.solve_relaxation(&child(&q, &q.root(), i, v).unwrap()).unwrap();
            if kid.is_optimal() {
                prop_assert!(kid.objective <= parent.objective + 1e-6);
            }
        }

        #[test]
        fn full_assignment_is_integral(q in random_instance(), bits in any::<u32>()) {
            let mut a = q.root();
            for i in 0..q.n() {
                a = child(&q, &a, i, bits >> i & 1 == 1).unwrap();
            }
            let sol = q.solve_relaxation(&a).unwrap();
            if sol.status == LpStatus::Optimal {
                prop_assert!(is_integral(&sol, &q));
            }
        }

        #[test]
        fn roundtrip_random(q in random_instance()) {
            let back = MilpInstance::from_text(&q.to_text()).unwrap();
            prop_assert_eq!(back, q);
        }
    }
}
