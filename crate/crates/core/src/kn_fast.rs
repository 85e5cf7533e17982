//! High-throughput exact simulation on the complete graph, plus the
//! mean-field phase-chain models used as fast approximate samplers and as
//! cross-validation oracles for the exact engines.
//!
//! On `K_n` an agent's move is a uniform re-sample over the `n - 1` other
//! vertices, and transmission is co-location only, so a round costs O(k):
//! move every agent, mark the vertices holding informed agents, then sweep
//! the uninformed agents once against the marks.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::process::{default_round_cap, BroadcastOutcome, RunStatus};
use crate::Real;

#[derive(Debug, Error)]
pub enum KnError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Vertex marks for the transmission pass. Dense stamping pays off once
/// agents are a sizable fraction of the vertices; otherwise a hash set
/// keyed by vertex keeps per-round work at O(k) regardless of n.
enum Occupancy {
    Dense { stamp: Vec<u64>, round: u64 },
    Sparse(HashSet<usize>),
}

impl Occupancy {
    fn for_size(n: usize, k: usize) -> Self {
        if k >= n / 8 {
            Occupancy::Dense {
                stamp: vec![0; n],
                round: 0,
            }
        } else {
            Occupancy::Sparse(HashSet::with_capacity(k.min(1 << 20)))
        }
    }

    fn begin_round(&mut self) {
        match self {
            Occupancy::Dense { round, .. } => *round += 1,
            Occupancy::Sparse(set) => set.clear(),
        }
    }

    fn mark(&mut self, v: usize) {
        match self {
            Occupancy::Dense { stamp, round } => stamp[v] = *round,
            Occupancy::Sparse(set) => {
                set.insert(v);
            }
        }
    }

    fn is_marked(&self, v: usize) -> bool {
        match self {
            Occupancy::Dense { stamp, round } => stamp[v] == *round,
            Occupancy::Sparse(set) => set.contains(&v),
        }
    }
}

/// Running state of the complete-graph engine. One state drives one run;
/// concurrent runs use independent states.
pub struct KnState {
    n: usize,
    positions: Vec<usize>,
    informed: Vec<bool>,
    informed_count: usize,
    occupancy: Occupancy,
    rng: ChaCha8Rng,
}

impl KnState {
    /// Places `k >= 2` agents uniformly on `K_n` (`n >= 3`); agent 0 and
    /// everyone sharing its vertex start informed. The degenerate `K_2`
    /// swap dynamics belong to the general engine.
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self, KnError> {
        if n < 3 {
            return Err(KnError::InvalidArgument(format!(
                "complete-graph engine needs n >= 3, got {n}"
            )));
        }
        if k < 2 {
            return Err(KnError::InvalidArgument(format!(
                "need at least 2 agents, got {k}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
        let origin = positions[0];
        let informed: Vec<bool> = positions.iter().map(|&p| p == origin).collect();
        let informed_count = informed.iter().filter(|&&i| i).count();
        Ok(KnState {
            n,
            positions,
            informed,
            informed_count,
            occupancy: Occupancy::for_size(n, k),
            rng,
        })
    }

    pub fn agent_count(&self) -> usize {
        self.positions.len()
    }

    pub fn informed_count(&self) -> usize {
        self.informed_count
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// One synchronous round: every agent re-samples a uniform vertex
    /// other than its current one, then every vertex holding an informed
    /// agent informs all agents there. Returns the informed count.
    pub fn step(&mut self) -> usize {
        let n = self.n;
        for pos in &mut self.positions {
            let r = self.rng.gen_range(0..n - 1);
            *pos = r + usize::from(r >= *pos);
        }
        self.occupancy.begin_round();
        for (i, &pos) in self.positions.iter().enumerate() {
            if self.informed[i] {
                self.occupancy.mark(pos);
            }
        }
        for (i, &pos) in self.positions.iter().enumerate() {
            if !self.informed[i] && self.occupancy.is_marked(pos) {
                self.informed[i] = true;
                self.informed_count += 1;
            }
        }
        self.informed_count
    }

    #[cfg(test)]
    fn force_occupancy_mode(&mut self, dense: bool) {
        self.occupancy = if dense {
            Occupancy::Dense {
                stamp: vec![0; self.n],
                round: 0,
            }
        } else {
            Occupancy::Sparse(HashSet::new())
        };
    }
}

/// Runs the complete-graph process to completion or the round cap
/// (`None` uses [`default_round_cap`]). Identical in distribution to the
/// general engine on a complete graph without jump-over.
pub fn simulate_kn(
    n: usize,
    k: usize,
    seed: u64,
    max_rounds: Option<u64>,
) -> Result<BroadcastOutcome, KnError> {
    simulate_kn_opts(n, k, seed, max_rounds, true)
}

/// [`simulate_kn`] with trace recording optional; sweeps disable it to
/// avoid holding one count per round per run.
pub fn simulate_kn_opts(
    n: usize,
    k: usize,
    seed: u64,
    max_rounds: Option<u64>,
    record_trace: bool,
) -> Result<BroadcastOutcome, KnError> {
    let mut state = KnState::new(n, k, seed)?;
    let cap = max_rounds.unwrap_or_else(|| default_round_cap(n, k));
    let mut trace = Vec::new();
    if record_trace {
        trace.push(state.informed_count());
    }
    if state.informed_count() == k {
        return Ok(BroadcastOutcome {
            status: RunStatus::Finished,
            rounds: 0,
            informed_trace: trace,
        });
    }
    for round in 1..=cap {
        let count = state.step();
        if record_trace {
            trace.push(count);
        }
        if count == k {
            return Ok(BroadcastOutcome {
                status: RunStatus::Finished,
                rounds: round,
                informed_trace: trace,
            });
        }
    }
    Ok(BroadcastOutcome {
        status: RunStatus::RoundCapReached,
        rounds: cap,
        informed_trace: trace,
    })
}

/// Success models for the auxiliary phase chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseModel {
    /// One phase per success: the time at phase `l` is geometric with the
    /// conditional single-success probability `p_l`; phases are never
    /// skipped.
    SingleStep,
    /// Mean-field batch: each round `Bin(k - l, l/(n-1))` agents become
    /// informed, so phases can be skipped. Valid as an approximation when
    /// agents are few relative to vertices; `k >= n` is accepted.
    BinomialBatch,
}

/// Auxiliary phase-chain model over `(n, k)`.
#[derive(Debug, Clone, Copy)]
pub struct PhaseChain {
    pub n: usize,
    pub k: usize,
    pub model: PhaseModel,
}

impl PhaseChain {
    pub fn probability<F: Real>(&self, ell: usize) -> Result<F, KnError> {
        phase_probability(self.n, self.k, ell)
    }

    pub fn expectation<F: Real>(&self) -> Result<F, KnError> {
        phase_chain_expectation(self.n, self.k)
    }

    pub fn sample(&self, seed: u64) -> Result<u64, KnError> {
        phase_chain_sample(self.n, self.k, seed, self.model)
    }
}

/// Probability of moving from phase `l` to `l + 1` in one round of the
/// single-success chain, conditional on at most one success:
///
/// `P(Bin(k-l, l/(n-1)) = 1) / P(Bin(k-l, l/(n-1)) <= 1)`
///
/// The shared factor `(1-q)^(k-l-1)` cancels exactly, leaving
/// `m q / (m q + 1 - q)` with `m = k - l`, `q = l/(n-1)`; this evaluates
/// the displayed quotient without underflow for any `k - l`.
pub fn phase_probability<F: Real>(n: usize, k: usize, ell: usize) -> Result<F, KnError> {
    if ell < 1 || ell > k - 1 {
        return Err(KnError::InvalidArgument(format!(
            "phase index must satisfy 1 <= l <= k-1, got l = {ell}, k = {k}"
        )));
    }
    if n < 3 {
        return Err(KnError::InvalidArgument(format!("need n >= 3, got {n}")));
    }
    if ell > n - 1 {
        return Err(KnError::InvalidArgument(format!(
            "phase probability undefined for l = {ell} > n-1 = {}",
            n - 1
        )));
    }
    let m = F::from_usize(k - ell).unwrap();
    let q = F::from_usize(ell).unwrap() / F::from_usize(n - 1).unwrap();
    Ok(m * q / (m * q + (F::one() - q)))
}

/// Expected length of the single-success chain: the sum of `1/p_l` over
/// phases `1..k`. Requires `2 <= k < n`.
pub fn phase_chain_expectation<F: Real>(n: usize, k: usize) -> Result<F, KnError> {
    if k < 2 || k >= n {
        return Err(KnError::InvalidArgument(format!(
            "phase-chain expectation needs 2 <= k < n, got k = {k}, n = {n}"
        )));
    }
    // 1/p_l = 1 + (n-1-l) / ((k-l) l), summed without re-dividing.
    let mut total = F::zero();
    for ell in 1..k {
        let numer = F::from_usize(n - 1 - ell).unwrap();
        let denom = F::from_usize(k - ell).unwrap() * F::from_usize(ell).unwrap();
        total = total + F::one() + numer / denom;
    }
    Ok(total)
}

/// Draws one broadcast duration from the chosen phase-chain model.
pub fn phase_chain_sample(
    n: usize,
    k: usize,
    seed: u64,
    model: PhaseModel,
) -> Result<u64, KnError> {
    if k < 2 {
        return Err(KnError::InvalidArgument(format!(
            "need at least 2 agents, got {k}"
        )));
    }
    if n < 3 {
        return Err(KnError::InvalidArgument(format!("need n >= 3, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match model {
        PhaseModel::SingleStep => {
            if k >= n {
                return Err(KnError::InvalidArgument(format!(
                    "single-step chain needs k < n, got k = {k}, n = {n}"
                )));
            }
            let mut rounds = 0u64;
            for ell in 1..k {
                let p: f64 = phase_probability(n, k, ell)?;
                rounds = rounds.saturating_add(sample_geometric(p, &mut rng));
            }
            Ok(rounds)
        }
        PhaseModel::BinomialBatch => {
            let mut informed = 1usize;
            let mut rounds = 0u64;
            while informed < k {
                let p = (informed as f64 / (n - 1) as f64).min(1.0);
                let draw = Binomial::new((k - informed) as u64, p)
                    .expect("valid binomial parameters")
                    .sample(&mut rng) as usize;
                informed = (informed + draw).min(k);
                rounds += 1;
            }
            Ok(rounds)
        }
    }
}

/// Geometric number of trials until the first success (support >= 1),
/// via inversion.
fn sample_geometric(p: f64, rng: &mut impl Rng) -> u64 {
    debug_assert!(p > 0.0 && p <= 1.0);
    if p >= 1.0 {
        return 1;
    }
    let u = 1.0 - rng.gen::<f64>(); // in (0, 1]
    let draws = (u.ln() / (1.0 - p).ln()).ceil();
    if draws < 1.0 {
        1
    } else if draws >= u64::MAX as f64 {
        u64::MAX
    } else {
        draws as u64
    }
}
