use super::hc::restricted_hill_climb;
use super::{check_input, subsets_by_size, LearnError, LearnedStructure, LearnerConfig, Tester};
use crate::dataset::Dataset;

/// MMPC candidate parents-and-children of every node, made symmetric by
/// keeping `y` in `pc(x)` only if `x` is also in `pc(y)`.
pub fn mmpc(data: &Dataset, config: &LearnerConfig) -> Result<Vec<Vec<usize>>, LearnError> {
    check_input(data, config)?;
    let mut tester = Tester::new(data, config);
    let (sets, _) = symmetric_candidates(&mut tester)?;
    Ok(sets)
}

pub fn mmhc(data: &Dataset, config: &LearnerConfig, seed: u64) -> Result<LearnedStructure, LearnError> {
    check_input(data, config)?;
    let mut tester = Tester::new(data, config);
    let (candidates, calls) = symmetric_candidates(&mut tester)?;
    let mut learned = restricted_hill_climb(data, config, &candidates, seed)?;
    learned.diagnostics.tests = calls;
    Ok(learned)
}

fn symmetric_candidates(tester: &mut Tester) -> Result<(Vec<Vec<usize>>, u64), LearnError> {
    let n = tester.data.n_cols();
    let raw = (0..n)
        .map(|t| candidate_set(tester, t))
        .collect::<Result<Vec<_>, _>>()?;
    let sets = (0..n)
        .map(|t| raw[t].iter().copied().filter(|&x| raw[x].contains(&t)).collect())
        .collect();
    Ok((sets, tester.calls))
}

/// Largest p-value of `target` vs `x` over all subsets of `cpc`, stopping
/// early once it reaches `alpha` (the pair is then independent).
fn max_p_value(tester: &mut Tester, target: usize, x: usize, cpc: &[usize]) -> Result<f64, LearnError> {
    let mut worst = 0.0f64;
    for s in subsets_by_size(cpc) {
        worst = worst.max(tester.run(target, x, &s)?.p_value);
        if worst >= tester.alpha {
            break;
        }
    }
    Ok(worst)
}

/// Forward phase adds the candidate whose minimum association (maximum
/// p-value over conditioning subsets) is strongest; candidates found
/// independent are discarded for good. The backward phase removes members
/// separated by a subset of the others.
fn candidate_set(tester: &mut Tester, target: usize) -> Result<Vec<usize>, LearnError> {
    let n = tester.data.n_cols();
    let mut open: Vec<usize> = (0..n).filter(|&x| x != target).collect();
    let mut cpc: Vec<usize> = Vec::new();
    loop {
        let mut best: Option<(f64, usize)> = None;
        let mut dropped = Vec::new();
        for &x in &open {
            let p = max_p_value(tester, target, x, &cpc)?;
            if p >= tester.alpha {
                dropped.push(x);
            } else if best.is_none_or(|(bp, _)| p < bp) {
                best = Some((p, x));
            }
        }
        open.retain(|x| !dropped.contains(x));
        let Some((_, x)) = best else {
            break;
        };
        open.retain(|&o| o != x);
        let at = cpc.binary_search(&x).unwrap_err();
        cpc.insert(at, x);
    }
    for x in cpc.clone() {
        let rest: Vec<usize> = cpc.iter().copied().filter(|&m| m != x).collect();
        if max_p_value(tester, target, x, &rest)? >= tester.alpha {
            cpc = rest;
        }
    }
    Ok(cpc)
}
