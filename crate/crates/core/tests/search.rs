use addrep::search::linear_target_probe;
use addrep::{exhaustive_min_error, greedy_min_error, Objective, SearchProblem, StreamRng};

/// Unpruned enumeration of every subset of `{0, ..., n_max}`; the witness is
/// the lexicographically least membership string among the minimizers.
fn brute_force(target: &[f64], norm: &[f64], n_start: usize, objective: Objective) -> (f64, String) {
    let n_max = target.len() - 1;
    let mut cum_target = Vec::with_capacity(target.len());
    let mut acc = 0.0;
    for t in target {
        acc += t;
        cum_target.push(acc);
    }
    let mut best: Option<(f64, String)> = None;
    for mask in 0u64..1 << (n_max + 1) {
        let member = |k: usize| mask >> k & 1 == 1;
        let mut value = 0.0f64;
        let mut s = 0u64;
        for n in 0..=n_max {
            let r = (0..=n).filter(|&k| member(k) && member(n - k)).count() as u64;
            s += r;
            if n >= n_start {
                let dev = match objective {
                    Objective::Pointwise => r as f64 - target[n],
                    Objective::Cumulative => s as f64 - cum_target[n],
                };
                value = value.max(dev.abs() / norm[n]);
            }
        }
        let witness: String = (0..=n_max).map(|k| if member(k) { '1' } else { '0' }).collect();
        let better = match &best {
            None => true,
            Some((v, w)) => value < *v || (value == *v && witness < *w),
        };
        if better {
            best = Some((value, witness));
        }
    }
    best.unwrap()
}

#[test]
fn pruned_search_matches_enumeration() {
    let mut rng = StreamRng::new(31);
    for case in 0..30 {
        let n_max = 5 + rng.below(7) as usize;
        // Multiples of 1/8 keep every prefix sum exact.
        let target: Vec<f64> = (0..=n_max)
            .map(|n| rng.below(8 * (n as u64 + 2)) as f64 / 8.0)
            .collect();
        let norm: Vec<f64> = if case % 2 == 0 {
            vec![1.0; n_max + 1]
        } else {
            (0..=n_max).map(|n| (n.max(1) as f64).sqrt()).collect()
        };
        let n_start = rng.below(3) as usize;
        let objective = if case % 3 == 0 {
            Objective::Cumulative
        } else {
            Objective::Pointwise
        };
        let problem = SearchProblem::new(target.clone(), norm.clone(), n_start, objective).unwrap();
        let out = exhaustive_min_error(&problem).unwrap();
        let (value, witness) = brute_force(&target, &norm, n_start, objective);
        assert_eq!((out.value, out.witness.clone()), (value, witness), "case {case}");
        assert_eq!(problem.evaluate(&out.witness_set()).unwrap(), out.value);
        assert!(greedy_min_error(&problem).value >= out.value);
    }
}

#[test]
fn trivial_targets() {
    let zero = SearchProblem::from_specs(10, "zero", "one", 0, Objective::Pointwise).unwrap();
    let out = exhaustive_min_error(&zero).unwrap();
    assert_eq!((out.value, out.witness.as_str()), (0.0, "00000000000"));
    assert_eq!(greedy_min_error(&zero).value, 0.0);

    let interval = SearchProblem::from_specs(10, "interval", "one", 0, Objective::Pointwise).unwrap();
    let out = exhaustive_min_error(&interval).unwrap();
    assert_eq!((out.value, out.witness.as_str()), (0.0, "11111111111"));
    assert_eq!(greedy_min_error(&interval).witness, "11111111111");
}

#[test]
fn refuses_large_instances() {
    let p = SearchProblem::from_specs(27, "zero", "one", 1, Objective::Pointwise).unwrap();
    assert!(exhaustive_min_error(&p).is_err());
    assert_eq!(greedy_min_error(&p).value, 0.0);
}

#[test]
fn linear_target_probe_is_monotone() {
    let rows = linear_target_probe(&[0.3, 0.5, 0.7], 8..=20).unwrap();
    assert_eq!(rows.len(), 3 * 13);
    for c in rows.chunks(13) {
        assert!(c.windows(2).all(|w| w[1].value >= w[0].value), "c = {}", c[0].c);
        assert!(c.iter().all(|r| r.value > 0.0));
    }
}
