use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    random_pair, select_conflict_and_repair, Algorithm, OptimizerConfig, OptimizerError, RepairProblem, RunResult,
    TraceRow,
};

/// Attempts per proposal: the first half conflict-guided, the rest random.
const ATTEMPTS: usize = 64;

type Move<S> = (String, S, Vec<usize>);

/// Score, then guide: lexicographic comparison of evaluated states.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Key(f64, f64);

struct Search<'a, P: RepairProblem> {
    p: &'a P,
    cfg: &'a OptimizerConfig,
    rng: ChaCha8Rng,
    trace: Vec<TraceRow>,
    best: P::State,
    best_key: Key,
    current: f64,
    infeasible: usize,
    observer: &'a mut dyn FnMut(&P::State, f64),
}

impl<'a, P: RepairProblem> Search<'a, P> {
    /// Out of evaluations, or a perfect score was reached.
    fn exhausted(&self) -> bool {
        self.trace.len() >= self.cfg.max_evaluations || self.best_key.0 >= 1.0
    }

    fn key(&self, e: &P::Eval) -> Key {
        Key(self.p.score(e), self.p.guide(e))
    }

    /// Books one evaluation of `s`.
    fn record(&mut self, s: &P::State, key: Key) {
        (self.observer)(s, key.0);
        if key > self.best_key {
            self.best = s.clone();
            self.best_key = key;
        }
        self.trace.push(TraceRow {
            evaluation: self.trace.len(),
            current: self.current,
            best: self.best_key.0,
        });
    }

    fn set_current(&mut self, score: f64) {
        self.current = score;
        if let Some(last) = self.trace.last_mut() {
            last.current = score;
        }
    }

    fn propose(&mut self, s: &P::State, e: &P::Eval) -> Option<Move<P::State>> {
        let n = self.p.position_count(s);
        for attempt in 0..ATTEMPTS {
            let (r, pos) = if attempt < ATTEMPTS / 2 {
                select_conflict_and_repair(
                    self.p.violations(e),
                    self.p.registry(),
                    self.p.repair_ids(),
                    n,
                    self.cfg,
                    &mut self.rng,
                )
            } else {
                random_pair(self.p.repair_ids(), n, &mut self.rng)
            };
            if let Some((next, changed)) = self.p.apply(&r, pos, s, &mut self.rng) {
                return Some((r, next, changed));
            }
        }
        None
    }

    fn random_move(&mut self, s: &P::State) -> Option<Move<P::State>> {
        let n = self.p.position_count(s);
        for _ in 0..ATTEMPTS {
            let (r, pos) = random_pair(self.p.repair_ids(), n, &mut self.rng);
            if let Some((next, changed)) = self.p.apply(&r, pos, s, &mut self.rng) {
                return Some((r, next, changed));
            }
        }
        None
    }

    fn finish(self) -> RunResult<P::State> {
        RunResult {
            evaluations: self.trace.len(),
            best: self.best,
            best_score: self.best_key.0,
            trace: self.trace,
            infeasible_offspring: self.infeasible,
        }
    }
}

pub fn run<P: RepairProblem>(
    p: &P,
    initial: &P::State,
    cfg: &OptimizerConfig,
) -> Result<RunResult<P::State>, OptimizerError> {
    run_with_observer(p, initial, cfg, &mut |_, _| {})
}

/// Like [`run`], calling `observer` with every evaluated state and its score.
pub fn run_with_observer<P: RepairProblem>(
    p: &P,
    initial: &P::State,
    cfg: &OptimizerConfig,
    observer: &mut dyn FnMut(&P::State, f64),
) -> Result<RunResult<P::State>, OptimizerError> {
    cfg.validate()?;
    p.is_feasible(initial).map_err(OptimizerError::InvalidInitial)?;
    if p.repair_ids().is_empty() {
        return Err(OptimizerError::InvalidConfig("no repair operators registered".into()));
    }
    let eval = p.evaluate(initial)?;
    let mut search = Search {
        p,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        trace: Vec::new(),
        best: initial.clone(),
        best_key: Key(f64::NEG_INFINITY, f64::NEG_INFINITY),
        current: p.score(&eval),
        infeasible: 0,
        observer,
    };
    let key = search.key(&eval);
    search.record(initial, key);
    let start = (initial.clone(), eval, key);
    match cfg.algorithm {
        Algorithm::Deepening1 => deepening(&mut search, start, 0)?,
        Algorithm::Tabu => deepening(&mut search, start, cfg.tabu_tenure)?,
        Algorithm::RandomHill => random_hill(&mut search, start)?,
        Algorithm::Genetic => genetic(&mut search, start)?,
    }
    Ok(search.finish())
}

type Member<P> = (<P as RepairProblem>::State, <P as RepairProblem>::Eval, Key);
/// A candidate with its tabu key: repair id and sorted changed positions.
type Candidate<P> = (Member<P>, (String, Vec<usize>));

/// Depth-1 steps: the best of `tries_per_step` candidates becomes current.
/// With a positive `tenure`, moves on the tabu list are inadmissible unless
/// they beat the global best.
fn deepening<P: RepairProblem>(search: &mut Search<'_, P>, start: Member<P>, tenure: usize) -> Result<(), OptimizerError> {
    let (mut cur, mut eval, _) = start;
    let mut tabu: VecDeque<(String, Vec<usize>)> = VecDeque::new();
    while !search.exhausted() {
        let mut chosen: Option<Candidate<P>> = None;
        let mut proposed = 0;
        for _ in 0..search.cfg.tries_per_step {
            if search.exhausted() {
                break;
            }
            let Some((repair, next, mut changed)) = search.propose(&cur, &eval) else {
                break;
            };
            proposed += 1;
            let e = search.p.reevaluate(&eval, &next, &changed)?;
            let s = search.key(&e);
            let aspires = s > search.best_key;
            search.record(&next, s);
            changed.sort_unstable();
            let key = (repair, changed);
            if tabu.contains(&key) && !aspires {
                continue;
            }
            if chosen.as_ref().is_none_or(|c| s > c.0 .2) {
                chosen = Some(((next, e, s), key));
            }
        }
        let Some(((next, e, s), key)) = chosen else {
            if proposed == 0 {
                break;
            }
            // all candidates tabu: stay put and let the oldest entry expire
            tabu.pop_front();
            continue;
        };
        cur = next;
        eval = e;
        search.set_current(s.0);
        if tenure > 0 {
            tabu.push_back(key);
            if tabu.len() > tenure {
                tabu.pop_front();
            }
        }
    }
    Ok(())
}

/// Accepts strict improvements only; after `tries_per_step` consecutive
/// rejections one random repair is forced.
fn random_hill<P: RepairProblem>(search: &mut Search<'_, P>, start: Member<P>) -> Result<(), OptimizerError> {
    let (mut cur, mut eval, mut key) = start;
    let mut rejections = 0;
    while !search.exhausted() {
        let forced = rejections >= search.cfg.tries_per_step;
        let proposal = if forced { search.random_move(&cur) } else { search.propose(&cur, &eval) };
        let Some((_, next, changed)) = proposal else {
            if forced {
                break;
            }
            rejections = search.cfg.tries_per_step;
            continue;
        };
        let e = search.p.reevaluate(&eval, &next, &changed)?;
        let s = search.key(&e);
        search.record(&next, s);
        if forced || s > key {
            cur = next;
            eval = e;
            key = s;
            search.set_current(s.0);
            rejections = 0;
        } else {
            rejections += 1;
        }
    }
    Ok(())
}

fn cmp_key(a: Key, b: Key) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
}

fn tournament<'m, P: RepairProblem>(pop: &'m [Member<P>], rng: &mut ChaCha8Rng) -> &'m Member<P> {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    if b.2 > a.2 {
        b
    } else {
        a
    }
}

/// Generational GA with elitism of one. A child is a week-boundary (or
/// domain-specific) crossover of two tournament winners, mutated with
/// `mutation_rate`, or a mutated clone of the first parent.
fn genetic<P: RepairProblem>(search: &mut Search<'_, P>, start: Member<P>) -> Result<(), OptimizerError> {
    let size = search.cfg.population_size;
    let mut pop: Vec<Member<P>> = vec![start];
    while pop.len() < size && !search.exhausted() {
        let base = pop[0].0.clone();
        match search.random_move(&base) {
            Some((_, s, changed)) => {
                let e = search.p.reevaluate(&pop[0].1, &s, &changed)?;
                let sc = search.key(&e);
                search.record(&s, sc);
                pop.push((s, e, sc));
            }
            None => pop.push(pop[0].clone()),
        }
    }
    let offspring_count = size.saturating_sub(1).max(1);
    while !search.exhausted() {
        let mut offspring: Vec<Member<P>> = Vec::with_capacity(offspring_count);
        for _ in 0..offspring_count {
            if search.exhausted() {
                break;
            }
            let a = tournament::<P>(&pop, &mut search.rng).clone();
            let b = tournament::<P>(&pop, &mut search.rng).clone();
            let mut crossed = None;
            if search.rng.gen_bool(search.cfg.crossover_rate) {
                match search.p.crossover(&a.0, &b.0, &mut search.rng) {
                    Some(c) if search.p.is_feasible(&c).is_ok() => crossed = Some(c),
                    _ => search.infeasible += 1,
                }
            }
            let child = match crossed {
                Some(c) => {
                    let c = if search.rng.gen_bool(search.cfg.mutation_rate) {
                        search.random_move(&c).map_or(c, |m| m.1)
                    } else {
                        c
                    };
                    let e = search.p.evaluate(&c)?;
                    let sc = search.key(&e);
                    (c, e, sc)
                }
                None => match search.propose(&a.0, &a.1) {
                    Some((_, s, changed)) => {
                        let e = search.p.reevaluate(&a.1, &s, &changed)?;
                        let sc = search.key(&e);
                        (s, e, sc)
                    }
                    None => a.clone(),
                },
            };
            search.record(&child.0, child.2);
            offspring.push(child);
        }
        let elite = pop
            .iter()
            .enumerate()
            .max_by(|x, y| cmp_key(x.1 .2, y.1 .2).then(y.0.cmp(&x.0)))
            .map(|(i, _)| i)
            .expect("non-empty population");
        offspring.push(pop.swap_remove(elite));
        // stable: offspring precede the elite on equal scores
        offspring.sort_by(|x, y| cmp_key(y.2, x.2));
        offspring.truncate(size);
        pop = offspring;
        search.set_current(pop[0].2 .0);
    }
    Ok(())
}
