//! Exact and greedy minimization, over subsets of `{0, ..., n_max}`, of the
//! worst normalized deviation of `R_A` (or its running sum) from a target.
//!
//! Depth-first search decides membership of `0, 1, ..., n_max` in order.
//! Once `0..=m` are decided, `R(n)` is final for every `n <= m`, so the
//! objective restricted to `[n_start, m]` is a lower bound for every
//! completion and branches that cannot beat the incumbent are cut.
//!
//! Exclusion is tried before inclusion, so leaves are reached in
//! lexicographic order of their membership strings `chi(0) chi(1) ...`;
//! only strict improvements replace the incumbent, which makes the witness
//! the lexicographically least optimal set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::prefix_sums;
use crate::repfn::IntegerSet;
use crate::weights::WeightSequence;

/// Largest `n_max` accepted by [`exhaustive_min_error`].
pub const EXHAUSTIVE_MAX_N: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// `max |R(n) - T(n)| / nu(n)`.
    Pointwise,
    /// `max |S(n) - CumT(n)| / nu(n)`.
    Cumulative,
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointwise" => Ok(Objective::Pointwise),
            "cumulative" => Ok(Objective::Cumulative),
            other => Err(Error::param(format!("unknown objective '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchProblem {
    target: Vec<f64>,
    cumulative_target: Vec<f64>,
    norm: Vec<f64>,
    n_start: usize,
    objective: Objective,
}

impl SearchProblem {
    pub fn new(target: Vec<f64>, norm: Vec<f64>, n_start: usize, objective: Objective) -> Result<Self> {
        if target.is_empty() || target.len() != norm.len() {
            return Err(Error::param("target and norm must be non-empty and of equal length"));
        }
        let n_max = target.len() - 1;
        if n_start > n_max {
            return Err(Error::param(format!("n_start = {n_start} exceeds n_max = {n_max}")));
        }
        if let Some(n) = (n_start..=n_max).find(|&n| !(norm[n] > 0.0)) {
            return Err(Error::param(format!(
                "norm must be positive on the scored range (nu({n}) = {})",
                norm[n]
            )));
        }
        let cumulative_target = prefix_sums(&target);
        Ok(Self {
            target,
            cumulative_target,
            norm,
            n_start,
            objective,
        })
    }

    /// Builds a problem from textual target and norm specs.
    ///
    /// Targets: `zero`, `interval` (`T(n) = n + 1`), `constant-linear:c=C`
    /// (`T(n) = C n`), `weights:SPEC` (the convolution target of a weight
    /// spec). Norms: `one` (`nu = 1`), `sqrt` (`nu(n) = sqrt(max(n, 1))`).
    pub fn from_specs(n_max: usize, target: &str, norm: &str, n_start: usize, objective: Objective) -> Result<Self> {
        let target = parse_target(target, n_max)?;
        let norm = parse_norm(norm, n_max)?;
        Self::new(target, norm, n_start, objective)
    }

    pub fn n_max(&self) -> usize {
        self.target.len() - 1
    }

    pub fn n_start(&self) -> usize {
        self.n_start
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    /// Term of the objective at index `n`, given the final `R(n)` and `S(n)`.
    fn term(&self, n: usize, r: u64, s: u64) -> f64 {
        if n < self.n_start {
            return 0.0;
        }
        let deviation = match self.objective {
            Objective::Pointwise => r as f64 - self.target[n],
            Objective::Cumulative => s as f64 - self.cumulative_target[n],
        };
        deviation.abs() / self.norm[n]
    }

    /// Objective value of a given set.
    pub fn evaluate(&self, set: &IntegerSet) -> Result<f64> {
        if set.n_max() != self.n_max() {
            return Err(Error::param("set and problem disagree on n_max"));
        }
        let r = crate::repfn::repfn_naive(set);
        let mut s = 0u64;
        let mut value = 0.0f64;
        for (n, &rn) in r.values().iter().enumerate() {
            s += rn;
            value = value.max(self.term(n, rn, s));
        }
        Ok(value)
    }
}

fn parse_target(spec: &str, n_max: usize) -> Result<Vec<f64>> {
    if spec == "zero" {
        return Ok(vec![0.0; n_max + 1]);
    }
    if spec == "interval" {
        return Ok((0..=n_max).map(|n| n as f64 + 1.0).collect());
    }
    if let Some(rest) = spec.strip_prefix("constant-linear:") {
        let c = rest
            .strip_prefix("c=")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::param(format!("expected constant-linear:c=<real>, got '{spec}'")))?;
        return Ok((0..=n_max).map(|n| c * n as f64).collect());
    }
    if let Some(rest) = spec.strip_prefix("weights:") {
        return WeightSequence::parse(rest)?.convolution_target(n_max);
    }
    Err(Error::param(format!("unknown target '{spec}'")))
}

fn parse_norm(spec: &str, n_max: usize) -> Result<Vec<f64>> {
    match spec {
        "one" => Ok(vec![1.0; n_max + 1]),
        "sqrt" => Ok((0..=n_max).map(|n| (n.max(1) as f64).sqrt()).collect()),
        other => Err(Error::param(format!("unknown norm '{other}' (expected one|sqrt)"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub value: f64,
    /// Membership string of the optimal set, `chi(0) chi(1) ... chi(n_max)`.
    pub witness: String,
    pub nodes_visited: u64,
}

impl SearchOutcome {
    pub fn witness_set(&self) -> IntegerSet {
        let n_max = self.witness.len() - 1;
        IntegerSet::from_elements(
            n_max,
            self.witness
                .bytes()
                .enumerate()
                .filter(|(_, b)| *b == b'1')
                .map(|(i, _)| i),
        )
        .expect("witness within range")
    }
}

/// Incremental `R` bookkeeping shared by the exhaustive and greedy searches.
struct State {
    r: Vec<u64>,
    s: Vec<u64>,
    members: Vec<usize>,
}

impl State {
    fn new(n_max: usize) -> Self {
        Self {
            r: vec![0; n_max + 1],
            s: vec![0; n_max + 1],
            members: Vec::new(),
        }
    }

    fn include(&mut self, m: usize) {
        let n_max = self.r.len() - 1;
        for &a in &self.members {
            if a + m <= n_max {
                self.r[a + m] += 2;
            }
        }
        if 2 * m <= n_max {
            self.r[2 * m] += 1;
        }
        self.members.push(m);
    }

    fn exclude_last(&mut self) {
        let m = self.members.pop().expect("a member to remove");
        let n_max = self.r.len() - 1;
        for &a in &self.members {
            if a + m <= n_max {
                self.r[a + m] -= 2;
            }
        }
        if 2 * m <= n_max {
            self.r[2 * m] -= 1;
        }
    }

    /// Fixes `S(m)` and returns the objective term at `m`.
    fn settle(&mut self, problem: &SearchProblem, m: usize) -> f64 {
        let prev = if m == 0 { 0 } else { self.s[m - 1] };
        self.s[m] = prev + self.r[m];
        problem.term(m, self.r[m], self.s[m])
    }
}

struct Exhaustive<'a> {
    problem: &'a SearchProblem,
    state: State,
    best_value: f64,
    best: Option<Vec<usize>>,
    nodes: u64,
}

impl Exhaustive<'_> {
    fn prunes(&self, bound: f64) -> bool {
        match self.best {
            Some(_) => bound >= self.best_value,
            None => bound > self.best_value,
        }
    }

    fn dfs(&mut self, m: usize, bound: f64) {
        self.nodes += 1;
        let n_max = self.problem.n_max();
        if m > n_max {
            if !self.prunes(bound) {
                self.best_value = bound;
                self.best = Some(self.state.members.clone());
            }
            return;
        }
        for include in [false, true] {
            if include {
                self.state.include(m);
            }
            let term = self.state.settle(self.problem, m);
            let next = bound.max(term);
            if !self.prunes(next) {
                self.dfs(m + 1, next);
            }
            if include {
                self.state.exclude_last();
            }
        }
    }
}

fn membership(n_max: usize, members: &[usize]) -> String {
    let mut s = vec![b'0'; n_max + 1];
    for &a in members {
        s[a] = b'1';
    }
    String::from_utf8(s).expect("ascii")
}

/// Global minimum of the objective with the lexicographically least witness.
pub fn exhaustive_min_error(problem: &SearchProblem) -> Result<SearchOutcome> {
    let n_max = problem.n_max();
    if n_max > EXHAUSTIVE_MAX_N {
        return Err(Error::param(format!(
            "exhaustive search supports n_max <= {EXHAUSTIVE_MAX_N}, got {n_max}; use greedy_min_error for larger ranges"
        )));
    }
    // The greedy value bounds the optimum; its set is only a fallback bound,
    // never a witness, so ties still resolve lexicographically.
    let greedy = greedy_min_error(problem);
    let mut search = Exhaustive {
        problem,
        state: State::new(n_max),
        best_value: greedy.value,
        best: None,
        nodes: 0,
    };
    search.dfs(0, 0.0);
    let best = search.best.expect("the greedy set is never pruned");
    Ok(SearchOutcome {
        value: search.best_value,
        witness: membership(n_max, &best),
        nodes_visited: search.nodes,
    })
}

/// Decides `m = 0, 1, ...` in order, keeping whichever choice gives the
/// smaller objective through `m`; ties exclude `m`.
pub fn greedy_min_error(problem: &SearchProblem) -> SearchOutcome {
    let n_max = problem.n_max();
    let mut state = State::new(n_max);
    let mut value = 0.0f64;
    let mut nodes = 0u64;
    for m in 0..=n_max {
        nodes += 2;
        let without = value.max(state.settle(problem, m));
        state.include(m);
        let with = value.max(state.settle(problem, m));
        if with < without {
            value = with;
        } else {
            state.exclude_last();
            state.settle(problem, m);
            value = without;
        }
    }
    SearchOutcome {
        value,
        witness: membership(n_max, &state.members),
        nodes_visited: nodes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub c: f64,
    pub n_max: usize,
    pub value: f64,
    pub witness: String,
}

/// Minimal pointwise objective for `T(n) = c n`, `nu(n) = sqrt(max(n, 1))`,
/// `n_start = 1`, over a range of `n_max`.
pub fn linear_target_probe(cs: &[f64], n_maxes: impl IntoIterator<Item = usize> + Clone) -> Result<Vec<ProbeRow>> {
    let mut rows = Vec::new();
    for &c in cs {
        for n_max in n_maxes.clone() {
            let problem = SearchProblem::from_specs(
                n_max,
                &format!("constant-linear:c={c}"),
                "sqrt",
                1,
                Objective::Pointwise,
            )?;
            let out = exhaustive_min_error(&problem)?;
            rows.push(ProbeRow {
                c,
                n_max,
                value: out.value,
                witness: out.witness,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(n_max: usize, target: &str, norm: &str, n_start: usize) -> SearchProblem {
        SearchProblem::from_specs(n_max, target, norm, n_start, Objective::Pointwise).unwrap()
    }

    #[test]
    fn zero_target_prefers_empty_set() {
        let p = problem(12, "zero", "one", 1);
        let ex = exhaustive_min_error(&p).unwrap();
        assert_eq!(ex.value, 0.0);
        assert_eq!(ex.witness, "0".repeat(13));
        let gr = greedy_min_error(&p);
        assert_eq!(gr.value, 0.0);
        assert!(gr.witness_set().is_empty());
    }

    #[test]
    fn interval_target_prefers_full_set() {
        let p = problem(12, "interval", "one", 0);
        let ex = exhaustive_min_error(&p).unwrap();
        assert_eq!(ex.value, 0.0);
        assert_eq!(ex.witness, "1".repeat(13));
        let gr = greedy_min_error(&p);
        assert_eq!(gr.value, 0.0);
        assert_eq!(gr.witness_set(), IntegerSet::full(12));
    }

    #[test]
    fn greedy_never_beats_exhaustive() {
        for c in [0.3, 0.5, 0.7] {
            for n_max in [6, 10, 16] {
                let p = problem(n_max, &format!("constant-linear:c={c}"), "sqrt", 1);
                let ex = exhaustive_min_error(&p).unwrap();
                let gr = greedy_min_error(&p);
                assert!(ex.value <= gr.value);
                assert_eq!(p.evaluate(&ex.witness_set()).unwrap(), ex.value);
                assert_eq!(p.evaluate(&gr.witness_set()).unwrap(), gr.value);
            }
        }
    }

    #[test]
    fn cumulative_objective_evaluates_witness() {
        let p = SearchProblem::from_specs(14, "constant-linear:c=0.4", "sqrt", 1, Objective::Cumulative).unwrap();
        let ex = exhaustive_min_error(&p).unwrap();
        assert_eq!(p.evaluate(&ex.witness_set()).unwrap(), ex.value);
        assert!(ex.value <= greedy_min_error(&p).value);
    }

    #[test]
    fn refuses_large_ranges() {
        let p = problem(27, "zero", "one", 1);
        let err = exhaustive_min_error(&p).unwrap_err();
        assert!(err.to_string().contains("greedy"));
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(SearchProblem::new(vec![0.0; 3], vec![1.0; 2], 0, Objective::Pointwise).is_err());
        assert!(SearchProblem::new(vec![0.0; 3], vec![0.0, 1.0, 1.0], 0, Objective::Pointwise).is_err());
        assert!(SearchProblem::new(vec![0.0; 3], vec![0.0, 1.0, 1.0], 1, Objective::Pointwise).is_ok());
        assert!(SearchProblem::from_specs(5, "quadratic", "one", 1, Objective::Pointwise).is_err());
        assert!(SearchProblem::from_specs(5, "zero", "log", 1, Objective::Pointwise).is_err());
        assert!(SearchProblem::from_specs(5, "zero", "one", 6, Objective::Pointwise).is_err());
    }

    #[test]
    fn weights_target_spec() {
        let p = SearchProblem::from_specs(8, "weights:constant:c=1", "one", 0, Objective::Pointwise).unwrap();
        let ex = exhaustive_min_error(&p).unwrap();
        assert_eq!(ex.value, 0.0);
        assert_eq!(ex.witness, "1".repeat(9));
    }

    #[test]
    fn probe_is_monotone_in_range() {
        let rows = linear_target_probe(&[0.5], 8..=14).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[1].value >= pair[0].value);
        }
    }
}
