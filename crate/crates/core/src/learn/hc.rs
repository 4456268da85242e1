use std::collections::VecDeque;

use rand::Rng;

use super::{check_input, Diagnostics, LearnError, LearnedStructure, LearnerConfig};
use crate::dataset::Dataset;
use crate::graph::{Dag, NodeSet};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::scores::ScoreCache;

/// Minimum score gain for a move to count as an improvement.
pub(crate) const IMPROVEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Add(usize, usize),
    Delete(usize, usize),
    Reverse(usize, usize),
}

/// Pairs the search may connect, as a symmetric adjacency matrix.
pub(crate) type Allowed = Vec<Vec<bool>>;

pub fn hill_climb(data: &Dataset, config: &LearnerConfig) -> Result<LearnedStructure, LearnError> {
    hill_climb_seeded(data, config, 0)
}

pub fn hill_climb_seeded(
    data: &Dataset,
    config: &LearnerConfig,
    seed: u64,
) -> Result<LearnedStructure, LearnError> {
    check_input(data, config)?;
    Ok(search(data, config, None, seed))
}

/// Hill climbing where `u` and `v` may be joined only if `candidates[u]`
/// contains `v` and `candidates[v]` contains `u`.
pub fn restricted_hill_climb(
    data: &Dataset,
    config: &LearnerConfig,
    candidates: &[Vec<usize>],
    seed: u64,
) -> Result<LearnedStructure, LearnError> {
    check_input(data, config)?;
    let n = data.n_cols();
    let mut allowed = vec![vec![false; n]; n];
    for (u, cs) in candidates.iter().enumerate() {
        for &v in cs {
            if candidates[v].contains(&u) {
                allowed[u][v] = true;
                allowed[v][u] = true;
            }
        }
    }
    Ok(search(data, config, Some(&allowed), seed))
}

pub(crate) fn search(
    data: &Dataset,
    config: &LearnerConfig,
    allowed: Option<&Allowed>,
    seed: u64,
) -> LearnedStructure {
    let nodes = NodeSet::new(data.names()).expect("dataset names are unique");
    let mut cache = ScoreCache::new(data, config.ess);
    let climber = Climber { config, allowed };

    let mut best = climber.ascend(Dag::empty(nodes), &mut cache);
    let mut best_score = cache.network(&best);
    if config.restarts > 0 {
        let mut rng = stream_rng(derive_seed(seed, Stream::Restart, 0));
        for _ in 0..config.restarts {
            let mut start = best.clone();
            climber.perturb(&mut start, &mut rng, &mut cache);
            let candidate = climber.ascend(start, &mut cache);
            let score = cache.network(&candidate);
            if score > best_score + IMPROVEMENT_TOL {
                best = candidate;
                best_score = score;
            }
        }
    }
    LearnedStructure {
        dag: best,
        diagnostics: Diagnostics {
            tests: 0,
            score_evaluations: cache.evaluations(),
            score: Some(best_score),
        },
    }
}

struct Climber<'c> {
    config: &'c LearnerConfig,
    allowed: Option<&'c Allowed>,
}

impl Climber<'_> {
    fn ascend(&self, dag: Dag, cache: &mut ScoreCache) -> Dag {
        if self.config.tabu == 0 {
            self.greedy(dag, cache)
        } else {
            self.tabu(dag, cache)
        }
    }

    fn room_for_parent(&self, dag: &Dag, child: usize) -> bool {
        self.config.max_parents.is_none_or(|cap| dag.parents(child).len() < cap)
    }

    fn permitted(&self, u: usize, v: usize) -> bool {
        self.allowed.is_none_or(|a| a[u][v])
    }

    /// Every legal move with its score delta, additions first, then
    /// deletions, then reversals, each in canonical edge order.
    fn moves(&self, dag: &Dag, cache: &mut ScoreCache) -> Vec<(Move, f64)> {
        let n = dag.node_count();
        let mut out = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u == v || !self.permitted(u, v) || !self.room_for_parent(dag, v) {
                    continue;
                }
                if dag.can_add_edge(u, v) {
                    let pa = dag.parents(v);
                    let delta = cache.local_with(v, pa, u) - cache.local(v, pa);
                    out.push((Move::Add(u, v), delta));
                }
            }
        }
        let edges: Vec<(usize, usize)> = dag.edges().collect();
        for &(u, v) in &edges {
            let pa = dag.parents(v);
            let delta = cache.local_without(v, pa, u) - cache.local(v, pa);
            out.push((Move::Delete(u, v), delta));
        }
        for &(u, v) in &edges {
            if !self.room_for_parent(dag, u) || !dag.can_reverse_edge(u, v) {
                continue;
            }
            let pv = dag.parents(v);
            let pu = dag.parents(u);
            let delta = cache.local_without(v, pv, u) - cache.local(v, pv)
                + cache.local_with(u, pu, v)
                - cache.local(u, pu);
            out.push((Move::Reverse(u, v), delta));
        }
        out
    }

    fn greedy(&self, mut dag: Dag, cache: &mut ScoreCache) -> Dag {
        loop {
            let Some((mv, delta)) = first_best(self.moves(&dag, cache)) else {
                return dag;
            };
            if delta <= IMPROVEMENT_TOL {
                return dag;
            }
            apply(&mut dag, mv);
        }
    }

    /// Best-move search that may step downhill, forbidding recently visited
    /// graphs; returns the best graph seen.
    fn tabu(&self, dag: Dag, cache: &mut ScoreCache) -> Dag {
        let mut current = dag;
        let mut current_score = cache.network(&current);
        let mut best = current.clone();
        let mut best_score = current_score;
        let mut recent: VecDeque<Vec<(usize, usize)>> = VecDeque::new();
        recent.push_back(current.edges().collect());
        let mut stale = 0;
        while stale < self.config.max_tabu.max(1) {
            let mut options = self.moves(&current, cache);
            options.retain(|&(mv, _)| {
                let mut next = current.clone();
                apply(&mut next, mv);
                let key: Vec<_> = next.edges().collect();
                !recent.contains(&key)
            });
            let Some((mv, delta)) = first_best(options) else {
                break;
            };
            apply(&mut current, mv);
            current_score += delta;
            recent.push_back(current.edges().collect());
            if recent.len() > self.config.tabu {
                recent.pop_front();
            }
            if current_score > best_score + IMPROVEMENT_TOL {
                best = current.clone();
                best_score = current_score;
                stale = 0;
            } else {
                stale += 1;
            }
        }
        best
    }

    fn perturb(&self, dag: &mut Dag, rng: &mut impl Rng, cache: &mut ScoreCache) {
        for _ in 0..self.config.perturb {
            let options = self.moves(dag, cache);
            if options.is_empty() {
                return;
            }
            let (mv, _) = options[rng.random_range(0..options.len())];
            apply(dag, mv);
        }
    }
}

fn first_best(moves: Vec<(Move, f64)>) -> Option<(Move, f64)> {
    moves
        .into_iter()
        .fold(None, |best, (mv, d)| match best {
            Some((_, bd)) if d <= bd => best,
            _ => Some((mv, d)),
        })
}

fn apply(dag: &mut Dag, mv: Move) {
    let result = match mv {
        Move::Add(u, v) => dag.add_edge(u, v),
        Move::Delete(u, v) => dag.remove_edge(u, v),
        Move::Reverse(u, v) => dag.reverse_edge(u, v),
    };
    result.expect("moves are generated legal");
}
