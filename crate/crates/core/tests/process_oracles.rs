//! Cross-validation of the general engine against independent models:
//! an exact hitting-time computation for two agents on a cycle, engine
//! agreement on complete graphs, and the monotone k-sweep behavior.

use walkcast::experiment::{derive_seed, run_sweep, summarize, EngineKind, GraphSource, SweepSpec};
use walkcast::graph::{build_complete, build_cycle, build_torus_grid};
use walkcast::kn_fast::simulate_kn_opts;
use walkcast::process::{run, ProcessConfig, RunStatus};

/// Expected rounds until the two agents co-locate on a 100-cycle, given a
/// uniformly random even initial difference. Both agents step each round,
/// so the difference moves by {-2, 0, +2} with probabilities
/// {1/4, 1/2, 1/4}; on half-distance coordinates that is a lazy unit walk
/// on Z_50 hitting 0. Solved directly as a linear system.
#[allow(clippy::needless_range_loop)]
fn cycle100_even_start_expectation() -> f64 {
    let m = 50usize;
    // Unknowns E_1..E_{m-1}; E_0 = 0. Equation: E_j - (E_{j-1}+E_{j+1})/2 = 2,
    // indices mod m.
    let dim = m - 1;
    let mut a = vec![vec![0.0f64; dim + 1]; dim];
    for j in 1..m {
        let row = &mut a[j - 1];
        row[j - 1] = 1.0;
        let mut couple = |idx: usize, coeff: f64| {
            if idx != 0 {
                row[idx - 1] += coeff;
            }
        };
        couple((j + m - 1) % m, -0.5);
        couple((j + 1) % m, -0.5);
        row[dim] = 2.0;
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let diag = a[col][col];
        for r in (col + 1)..dim {
            let factor = a[r][col] / diag;
            if factor != 0.0 {
                for c in col..=dim {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    let mut solution = vec![0.0f64; dim];
    for row in (0..dim).rev() {
        let mut value = a[row][dim];
        for c in (row + 1)..dim {
            value -= a[row][c] * solution[c];
        }
        solution[row] = value / a[row][row];
    }
    // Sanity: the closed form for this chain is E_j = 2 j (m - j).
    for (j, &e) in solution.iter().enumerate() {
        let closed = 2.0 * (j + 1) as f64 * (m - j - 1) as f64;
        assert!(
            (e - closed).abs() < 1e-6,
            "E_{} = {e} vs closed form {closed}",
            j + 1
        );
    }
    // Uniform over even differences 0, 2, .., 98 (i.e. j = 0..m-1).
    (solution.iter().sum::<f64>()) / m as f64
}

#[test]
fn cycle_two_agents_match_difference_walk_oracle() {
    let oracle = cycle100_even_start_expectation();
    let g = build_cycle(100).unwrap();
    let seeds = 6000u64;
    let cap = 20_000u64;
    let mut finished_sum = 0.0;
    let mut finished_count = 0u64;
    let mut capped = 0u64;
    for i in 0..seeds {
        let cfg = ProcessConfig {
            max_rounds: Some(cap),
            record_trace: false,
            ..ProcessConfig::new(2, derive_seed(33, i))
        };
        let outcome = run(&g, &cfg);
        match outcome.status {
            RunStatus::Finished => {
                finished_sum += outcome.rounds as f64;
                finished_count += 1;
            }
            // Odd initial difference: parity-locked, never meets.
            RunStatus::RoundCapReached => capped += 1,
        }
    }
    let mean = finished_sum / finished_count as f64;
    let rel = (mean - oracle).abs() / oracle;
    assert!(
        rel < 0.05,
        "finished-run mean {mean:.1} vs oracle {oracle:.1} (rel {rel:.4}), {finished_count} runs"
    );
    // Roughly half of the starts have odd difference.
    let odd_frac = capped as f64 / seeds as f64;
    assert!(
        (odd_frac - 0.5).abs() < 0.05,
        "odd-start fraction {odd_frac}"
    );
}

#[test]
fn engines_agree_on_complete_graph_means() {
    let (n, k) = (50usize, 4usize);
    let runs = 5000u64;
    let g = build_complete(n).unwrap();
    let mut general = 0.0;
    let mut fast = 0.0;
    for i in 0..runs {
        let cfg = ProcessConfig {
            record_trace: false,
            ..ProcessConfig::new(k, derive_seed(44, i))
        };
        general += run(&g, &cfg).rounds as f64;
        fast += simulate_kn_opts(n, k, derive_seed(45, i), None, false)
            .unwrap()
            .rounds as f64;
    }
    general /= runs as f64;
    fast /= runs as f64;
    let rel = (general - fast).abs() / fast;
    assert!(
        rel < 0.03,
        "general {general:.2} vs kn_fast {fast:.2} (rel {rel:.4})"
    );
}

#[test]
fn mean_rounds_non_increasing_in_k() {
    // Torus sweep with jump-over (the even torus is bipartite, so plain
    // transmission would parity-lock); means must not increase in k
    // beyond two pooled standard errors.
    let spec = SweepSpec {
        graph: GraphSource::Torus(30, 30),
        discretize: vec![],
        k_values: vec![10, 20, 40, 80],
        jump_over: vec![true],
        replications: 60,
        master_seed: 77,
        engine: EngineKind::General,
        max_rounds: Some(1_000_000),
        trace_quantiles: false,
    };
    let output = run_sweep(&spec, 0).unwrap();
    let summaries = summarize(&output.records);
    for pair in summaries.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        assert!(a.k < b.k);
        let pooled = (a.stats.std.powi(2) / a.stats.count as f64
            + b.stats.std.powi(2) / b.stats.count as f64)
            .sqrt();
        assert!(
            b.stats.mean <= a.stats.mean + 2.0 * pooled,
            "mean increased from k={} ({:.1}) to k={} ({:.1}), pooled se {pooled:.2}",
            a.k,
            a.stats.mean,
            b.k,
            b.stats.mean
        );
    }
}

#[test]
fn torus_needs_jump_over_to_finish() {
    // Bipartite parity lock: on the even torus with plain transmission,
    // agents in the other parity class can never be reached.
    let g = build_torus_grid(6, 6).unwrap();
    let mut capped = 0;
    let runs = 40u64;
    for i in 0..runs {
        let cfg = ProcessConfig {
            k: 6,
            max_rounds: Some(3000),
            record_trace: false,
            ..ProcessConfig::new(6, derive_seed(55, i))
        };
        if run(&g, &cfg).status == RunStatus::RoundCapReached {
            capped += 1;
        }
    }
    // All-same-class starts are the only escapes and have probability
    // 2^{-5} per run of landing informed-compatible; nearly all runs cap.
    assert!(capped >= 35, "only {capped}/{runs} runs capped");
}
