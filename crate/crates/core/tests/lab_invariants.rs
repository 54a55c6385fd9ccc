//! Monte Carlo invariants tying the gated adversary traces to the
//! deterministic lower sequence.

use gradtime_core::bound_calc::{next_time, ThresholdRule};
use gradtime_core::lowerbound_lab::homog_adversary_run;
use gradtime_core::power_model::{PowerProfile, WorkValue};

#[test]
fn gated_traces_dominate_the_deterministic_sequence() {
    let profiles = vec![
        PowerProfile::Constant { v: 1.0 },
        PowerProfile::Constant { v: 0.5 },
        PowerProfile::PeriodicOutage {
            v: 1.0,
            period: 3.0,
            active_len: 1.0,
        },
    ];
    let p: f64 = 0.25;
    let chain_len: usize = 24;
    let quarter = chain_len.div_ceil(4);
    let gate: f64 = 1.0 / (4.0 * p);
    let batch = (gate.ceil() as u64).max(1);

    // Deterministic comparison sequence with the gate as its threshold.
    let rule = ThresholdRule::SumCount { batch };
    let mut lower = vec![0.0_f64];
    for _ in 0..chain_len {
        let next = next_time(&profiles, *lower.last().unwrap(), &rule)
            .unwrap()
            .expect_finite();
        lower.push(next);
    }

    let seeds = 200;
    let mut hits = 0;
    for seed in 0..seeds {
        let trace = homog_adversary_run(&profiles, p, chain_len, seed).unwrap();
        // Indices whose draws exceed the gate dominate the corresponding
        // lower-sequence entries; this holds deterministically given the
        // draws.
        let mut rank = 0usize;
        for (eta, t) in trace.etas.iter().zip(&trace.times) {
            if *eta as f64 > gate {
                rank += 1;
                let t = match t {
                    WorkValue::Finite(t) => *t,
                    WorkValue::Inf => f64::INFINITY,
                };
                assert!(
                    t >= lower[rank] * (1.0 - 1e-9),
                    "seed {seed}: gated index {rank} at {t} below {}",
                    lower[rank]
                );
            }
        }
        if rank >= quarter {
            hits += 1;
        }
    }
    // At least a quarter of the indices are gated, with Monte Carlo
    // frequency at least 1/2 minus three standard errors.
    let freq = hits as f64 / seeds as f64;
    let slack = 3.0 * (0.25_f64 / seeds as f64).sqrt();
    assert!(freq >= 0.5 - slack, "frequency {freq}");
}
