//! Reproducible Monte Carlo for the urn under any removal strategy, and for
//! the chain conditioned to end all black.
//!
//! Runs are split into fixed-size batches. Batch `i` draws from the ChaCha8
//! stream `i` of the master seed, and batch results are merged in index
//! order, so output depends only on the configuration and never on the
//! thread count or schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactRational;
use crate::mprocess::{conditional_up_probabilities, UrnState};
use crate::strategy::StrategySpec;
use crate::sum::CompensatedSum;

pub const DEFAULT_RUNS: u64 = 10_000;
pub const DEFAULT_BATCH_SIZE: u64 = 250;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub start: UrnState,
    pub strategy: StrategySpec,
    pub runs: u64,
    pub seed: u64,
    /// discount rate; adds the discounted payoff to the summary
    pub mu: Option<f64>,
    /// sample the chain conditioned to absorb all black
    pub conditional: bool,
    pub record_paths: bool,
    /// runs per RNG stream; part of the reproducibility contract
    pub batch_size: u64,
    /// worker threads; `None` uses the global pool
    pub threads: Option<usize>,
}

impl SimConfig {
    pub fn new(start: UrnState, strategy: StrategySpec) -> Self {
        Self {
            start,
            strategy,
            runs: DEFAULT_RUNS,
            seed: 0,
            mu: None,
            conditional: false,
            record_paths: false,
            batch_size: DEFAULT_BATCH_SIZE,
            threads: None,
        }
    }

    pub fn runs(mut self, runs: u64) -> Self {
        self.runs = runs;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn conditional(mut self, conditional: bool) -> Self {
        self.conditional = conditional;
        self
    }

    pub fn record_paths(mut self, record: bool) -> Self {
        self.record_paths = record;
        self
    }

    pub fn batch_size(mut self, size: u64) -> Self {
        self.batch_size = size;
        self
    }

    pub fn threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.start.total() == 0 {
            return bad("the urn must hold at least one ball".into());
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("thread count must be at least 1".into());
        }
        if let Some(mu) = self.mu {
            if !(mu.is_finite() && mu >= 0.0) {
                return bad(format!("discount rate {mu} must be finite and nonnegative"));
            }
        }
        if self.conditional {
            if self.strategy != StrategySpec::None {
                return bad("conditional sampling is defined only without removals".into());
            }
            if self.start.black == 0 {
                return bad("cannot condition on ending all black from zero black balls".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathPoint {
    pub step: u64,
    pub black: u64,
}

/// Black count after every draw, starting at step 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathRecord {
    pub points: Vec<PathPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub runs: u64,
    pub mean_h: f64,
    pub stderr_h: f64,
    pub mean_final_black: f64,
    pub stderr_final_black: f64,
    pub mean_discounted: Option<f64>,
    pub stderr_discounted: Option<f64>,
    pub prob_all_black: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paths: Vec<PathRecord>,
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    h: u64,
    black: u64,
    all_black: bool,
}

/// Mergeable sums; integer moments are exact.
#[derive(Debug, Clone, Default)]
struct Tally {
    n: u64,
    h: u128,
    h2: u128,
    b: u128,
    b2: u128,
    all_black: u64,
    /// per discount rate: sum and sum of squares of `e^{-mu H} B_H`
    disc: Vec<(CompensatedSum, CompensatedSum)>,
    paths: Vec<PathRecord>,
}

impl Tally {
    fn new(n_mu: usize) -> Self {
        Self { disc: vec![Default::default(); n_mu], ..Default::default() }
    }

    fn record(&mut self, o: Outcome, mus: &[f64]) {
        self.n += 1;
        self.h += o.h as u128;
        self.h2 += o.h as u128 * o.h as u128;
        self.b += o.black as u128;
        self.b2 += o.black as u128 * o.black as u128;
        self.all_black += u64::from(o.all_black);
        for (acc, &mu) in self.disc.iter_mut().zip(mus) {
            let x = (-mu * o.h as f64).exp() * o.black as f64;
            acc.0.add(x);
            acc.1.add(x * x);
        }
    }

    fn merge(&mut self, other: Tally) {
        self.n += other.n;
        self.h += other.h;
        self.h2 += other.h2;
        self.b += other.b;
        self.b2 += other.b2;
        self.all_black += other.all_black;
        for (a, b) in self.disc.iter_mut().zip(&other.disc) {
            a.0.merge(&b.0);
            a.1.merge(&b.1);
        }
        self.paths.extend(other.paths);
    }

    fn summary(&self, mu_index: Option<usize>) -> SimulationSummary {
        let (mean_h, stderr_h) = integer_moments(self.n, self.h, self.h2);
        let (mean_b, stderr_b) = integer_moments(self.n, self.b, self.b2);
        let disc = mu_index.map(|i| {
            let (s, s2) = (&self.disc[i].0, &self.disc[i].1);
            float_moments(self.n, s.value(), s2.value())
        });
        SimulationSummary {
            runs: self.n,
            mean_h,
            stderr_h,
            mean_final_black: mean_b,
            stderr_final_black: stderr_b,
            mean_discounted: disc.map(|d| d.0),
            stderr_discounted: disc.map(|d| d.1),
            prob_all_black: self.all_black as f64 / self.n as f64,
            paths: Vec::new(),
        }
    }
}

/// Mean and standard error from exact integer sums.
fn integer_moments(n: u64, sum: u128, sum_sq: u128) -> (f64, f64) {
    let mean = sum as f64 / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let n128 = n as u128;
    // n * sum_sq - sum^2 = n (n-1) sample variance, exactly when it fits
    let spread = n128.checked_mul(sum_sq).zip(sum.checked_mul(sum)).map(|(a, b)| a - b);
    let var = match spread {
        Some(s) => s as f64 / (n as f64 * (n - 1) as f64),
        None => (sum_sq as f64 - sum as f64 * mean) / (n - 1) as f64,
    };
    (mean, (var.max(0.0) / n as f64).sqrt())
}

fn float_moments(n: u64, sum: f64, sum_sq: f64) -> (f64, f64) {
    let mean = sum / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - sum * mean) / (n - 1) as f64).max(0.0);
    (mean, (var / n as f64).sqrt())
}

fn run_controlled(start: UrnState, strategy: &StrategySpec, rng: &mut ChaCha8Rng, path: Option<&mut Vec<PathPoint>>) -> Outcome {
    let mut s = strategy.apply(start);
    let mut h = 0u64;
    let mut path = path;
    if let Some(p) = path.as_deref_mut() {
        p.push(PathPoint { step: 0, black: s.black });
    }
    let controlled = *strategy != StrategySpec::None;
    while !s.is_absorbing() {
        if rng.random_range(0..s.total()) < s.black {
            s.white -= 1;
            s.black += 1;
        } else {
            s.white += 1;
            s.black -= 1;
        }
        h += 1;
        if controlled {
            s = strategy.apply(s);
        }
        if let Some(p) = path.as_deref_mut() {
            p.push(PathPoint { step: h, black: s.black });
        }
    }
    Outcome { h, black: s.black, all_black: s.white == 0 }
}

fn run_conditional(start: UrnState, up: &[f64], rng: &mut ChaCha8Rng, path: Option<&mut Vec<PathPoint>>) -> Outcome {
    let total = start.total();
    let mut b = start.black;
    let mut h = 0u64;
    let mut path = path;
    if let Some(p) = path.as_deref_mut() {
        p.push(PathPoint { step: 0, black: b });
    }
    while b < total {
        if rng.random::<f64>() < up[b as usize] {
            b += 1;
        } else {
            b -= 1;
        }
        h += 1;
        if let Some(p) = path.as_deref_mut() {
            p.push(PathPoint { step: h, black: b });
        }
    }
    Outcome { h, black: total, all_black: true }
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn run_batches(config: &SimConfig, mus: &[f64]) -> Result<Tally> {
    config.validate()?;
    for &mu in mus {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidConfig(format!("discount rate {mu} must be finite and nonnegative")));
        }
    }
    let up = if config.conditional { Some(conditional_up_probabilities(config.start.total())?) } else { None };
    let n_batches = config.runs.div_ceil(config.batch_size);
    let batch = |i: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(i);
        let count = config.batch_size.min(config.runs - i * config.batch_size);
        let mut tally = Tally::new(mus.len());
        for _ in 0..count {
            let mut points = config.record_paths.then(Vec::new);
            let o = match &up {
                Some(up) => run_conditional(config.start, up, &mut rng, points.as_mut()),
                None => run_controlled(config.start, &config.strategy, &mut rng, points.as_mut()),
            };
            tally.record(o, mus);
            if let Some(points) = points {
                tally.paths.push(PathRecord { points });
            }
        }
        tally
    };
    let parts: Vec<Tally> = in_pool(config.threads, || (0..n_batches).into_par_iter().map(batch).collect())?;
    let mut total = Tally::new(mus.len());
    for part in parts {
        total.merge(part);
    }
    Ok(total)
}

pub fn simulate(config: &SimConfig) -> Result<SimulationSummary> {
    let mus: Vec<f64> = config.mu.into_iter().collect();
    let mut tally = run_batches(config, &mus)?;
    let mut summary = tally.summary(config.mu.map(|_| 0));
    summary.paths = std::mem::take(&mut tally.paths);
    Ok(summary)
}

/// Full trajectories for plotting.
pub fn sample_paths(
    start: UrnState,
    strategy: &StrategySpec,
    conditional: bool,
    n_paths: u64,
    seed: u64,
) -> Result<Vec<PathRecord>> {
    let config = SimConfig::new(start, strategy.clone())
        .runs(n_paths)
        .seed(seed)
        .conditional(conditional)
        .record_paths(true);
    Ok(run_batches(&config, &[])?.paths)
}

/// One cell of a `(q, mu)` scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    /// strategy label, e.g. `q:3/5`
    pub strategy: String,
    pub mu: f64,
    pub summary: SimulationSummary,
}

/// Simulates each strategy once and evaluates every discount rate on the
/// same trajectories. Cells are ordered strategy-major.
pub fn scan_strategies(
    start: UrnState,
    strategies: &[StrategySpec],
    runs: u64,
    mus: &[f64],
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<ScanCell>> {
    let mut cells = Vec::with_capacity(strategies.len() * mus.len());
    for strategy in strategies {
        let config = SimConfig::new(start, strategy.clone()).runs(runs).seed(seed).threads(threads);
        let tally = run_batches(&config, mus)?;
        for (i, &mu) in mus.iter().enumerate() {
            cells.push(ScanCell { strategy: strategy.label(), mu, summary: tally.summary(Some(i)) });
        }
    }
    Ok(cells)
}

/// [`scan_strategies`] over `q`-threshold strategies.
pub fn scan_q(
    start: UrnState,
    q_values: &[ExactRational],
    runs: u64,
    mus: &[f64],
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<ScanCell>> {
    let strategies = q_values.iter().map(|q| StrategySpec::threshold(q.clone())).collect::<Result<Vec<_>>>()?;
    scan_strategies(start, &strategies, runs, mus, seed, threads)
}

pub const TABLE1_TOTALS: [u64; 5] = [200, 2_000, 20_000, 200_000, 2_000_000];

/// Black fractions of the published grid: 0.5, 0.505, 0.55, 0.6, 0.75.
pub fn table1_fractions() -> Vec<ExactRational> {
    use crate::exact::ratio;
    vec![ratio(1, 2), ratio(101, 200), ratio(11, 20), ratio(3, 5), ratio(3, 4)]
}

#[derive(Debug, Clone)]
pub struct Table1Config {
    pub totals: Vec<u64>,
    pub fractions: Vec<ExactRational>,
    pub runs: u64,
    /// reduced run count for totals at or above `large_from`
    pub large_runs: Option<u64>,
    pub large_from: u64,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for Table1Config {
    fn default() -> Self {
        Self {
            totals: TABLE1_TOTALS.to_vec(),
            fractions: table1_fractions(),
            runs: DEFAULT_RUNS,
            large_runs: None,
            large_from: 200_000,
            seed: 0,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Cell {
    pub total: u64,
    /// black fraction as `p/q`
    pub fraction: String,
    pub start: UrnState,
    pub summary: SimulationSummary,
}

/// Policy A from `b = ceil(xN)`, `w = floor((1-x)N)` on every grid cell.
/// Cell `i` (row-major) uses seed `seed + i`.
pub fn simulate_table1(config: &Table1Config) -> Result<Vec<Table1Cell>> {
    let mut cells = Vec::new();
    for &total in &config.totals {
        for x in &config.fractions {
            let start = crate::asymptotics::skewed_state(total, x)?;
            let runs = match config.large_runs {
                Some(r) if total >= config.large_from => r,
                _ => config.runs,
            };
            let seed = config.seed.wrapping_add(cells.len() as u64);
            let sim = SimConfig::new(start, StrategySpec::PolicyA).runs(runs).seed(seed).threads(config.threads);
            cells.push(Table1Cell { total, fraction: x.to_string(), start, summary: simulate(&sim)? });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{ratio, real};
    use crate::mprocess::{absorb_prob_black, expected_time};

    fn s(w: u64, b: u64) -> UrnState {
        UrnState::new(w, b)
    }

    #[test]
    fn absorbed_start() {
        for strat in [StrategySpec::None, StrategySpec::PolicyA, StrategySpec::PolicyR] {
            let r = simulate(&SimConfig::new(s(0, 5), strat).runs(100)).unwrap();
            assert_eq!((r.mean_h, r.stderr_h, r.mean_final_black, r.stderr_final_black), (0.0, 0.0, 5.0, 0.0));
            assert_eq!(r.prob_all_black, 1.0);
        }
        let r = simulate(&SimConfig::new(s(4, 3), StrategySpec::PolicyR).runs(10)).unwrap();
        assert_eq!((r.mean_h, r.mean_final_black), (0.0, 3.0));
    }

    #[test]
    fn config_validation() {
        let base = SimConfig::new(s(2, 2), StrategySpec::None);
        assert!(simulate(&base.clone().runs(0)).is_err());
        assert!(simulate(&base.clone().batch_size(0)).is_err());
        assert!(simulate(&base.clone().mu(-0.1)).is_err());
        assert!(simulate(&base.clone().threads(Some(0))).is_err());
        assert!(simulate(&SimConfig::new(s(2, 2), StrategySpec::PolicyA).conditional(true)).is_err());
        assert!(simulate(&SimConfig::new(s(2, 0), StrategySpec::None).conditional(true)).is_err());
        assert!(simulate(&SimConfig::new(s(0, 0), StrategySpec::None)).is_err());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = SimConfig::new(s(7, 9), StrategySpec::threshold(ratio(3, 5)).unwrap())
            .runs(3_001)
            .seed(42)
            .mu(0.05)
            .batch_size(97);
        let one = simulate(&cfg.clone().threads(Some(1))).unwrap();
        let four = simulate(&cfg.clone().threads(Some(4))).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, simulate(&cfg).unwrap());
        let other = simulate(&cfg.clone().seed(43)).unwrap();
        assert_ne!(one.mean_h, other.mean_h);
    }

    #[test]
    fn zero_rate_discount_is_final_black() {
        let r = simulate(&SimConfig::new(s(6, 6), StrategySpec::PolicyA).runs(2_000).mu(0.0)).unwrap();
        assert_eq!(r.mean_discounted, Some(r.mean_final_black));
    }

    #[test]
    fn uncontrolled_absorption_frequency() {
        for (w, b) in [(1, 2), (5, 3), (2, 9)] {
            let r = simulate(&SimConfig::new(s(w, b), StrategySpec::None).runs(40_000).seed(5)).unwrap();
            let p = real(&absorb_prob_black(s(w, b)).unwrap());
            let se = (p * (1.0 - p) / 40_000.0).sqrt();
            assert!((r.prob_all_black - p).abs() < 4.0 * se, "{w},{b}: {} vs {p}", r.prob_all_black);
            let t = real(&expected_time(s(w, b)).unwrap());
            assert!((r.mean_h - t).abs() < 4.0 * r.stderr_h);
        }
    }

    #[test]
    fn conditional_paths_end_all_black() {
        let paths = sample_paths(s(6, 4), &StrategySpec::None, true, 20, 3).unwrap();
        assert_eq!(paths.len(), 20);
        for p in &paths {
            assert_eq!(p.points.last().unwrap().black, 10);
            assert_eq!(p.points[0], PathPoint { step: 0, black: 4 });
            assert!(p.points.windows(2).all(|w| w[0].black.abs_diff(w[1].black) == 1));
        }
    }

    #[test]
    fn uncontrolled_paths() {
        let paths = sample_paths(s(100, 100), &StrategySpec::None, false, 5, 11).unwrap();
        for p in &paths {
            let last = p.points.last().unwrap();
            assert!(last.black == 0 || last.black == 200);
            assert_eq!(last.step as usize + 1, p.points.len());
            assert!(p.points.windows(2).all(|w| w[0].black.abs_diff(w[1].black) == 1));
        }
    }

    #[test]
    fn recorded_paths_match_summary() {
        let cfg = SimConfig::new(s(3, 4), StrategySpec::PolicyA).runs(50).record_paths(true).batch_size(7);
        let r = simulate(&cfg).unwrap();
        assert_eq!(r.paths.len(), 50);
        let h: u64 = r.paths.iter().map(|p| p.points.last().unwrap().step).sum();
        assert!((h as f64 / 50.0 - r.mean_h).abs() < 1e-12);
    }

    #[test]
    fn scan_shares_trajectories() {
        let cells = scan_q(s(5, 5), &[ratio(1, 2), ratio(3, 4)], 500, &[0.0, 0.1], 9, None).unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[0].strategy, "q:1/2");
        assert_eq!(cells[0].summary.mean_discounted, Some(cells[0].summary.mean_final_black));
        assert_eq!(cells[0].summary.mean_h, cells[1].summary.mean_h);
        assert!(cells[1].summary.mean_discounted.unwrap() < cells[0].summary.mean_discounted.unwrap());
    }

    #[test]
    fn moments() {
        assert_eq!(integer_moments(1, 5, 25), (5.0, 0.0));
        let (m, se) = integer_moments(4, 10, 30); // 1,2,3,4
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn small_table() {
        let cfg = Table1Config { totals: vec![20, 40], runs: 200, ..Default::default() };
        let cells = simulate_table1(&cfg).unwrap();
        assert_eq!(cells.len(), 10);
        assert_eq!(cells[0].start, s(10, 10));
        assert_eq!(cells[1].fraction, "101/200");
        assert_eq!(cells[1].start, s(9, 11));
    }
}
