//! Acceptance run: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p qss6 --test acceptance`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qss6::attacks::{run_campaign, AttackKind, AttackStrategy, ChannelModel, PairSpec};
use qss6::bounds::{
    minimize_objective, p1_bound, p2_bound, s1_half_closed_form, s1_sum, s2_closed_form, s2_sum,
    GramParams, Objective, DEFAULT_REFINEMENT_ITERS,
};
use qss6::experiment::{compare_memory_modes, run_experiment, ExperimentConfig};
use qss6::label::op_on_label;
use qss6::protocol::{run_honest, ProtocolConfig, Stage};
use qss6::quantum::{apply_op, make_state};
use qss6::{OpCode, StateLabel};

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within_budget(start: Instant, budget_secs: u64) -> (bool, Duration) {
    let elapsed = start.elapsed();
    (elapsed < Duration::from_secs(budget_secs), elapsed)
}

fn honest_runs() -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    let mut problems = Vec::new();
    for m in [2, 3, 5] {
        for n in [1, 2, 3] {
            for seed in 0..100 {
                let cfg = ProtocolConfig::new(m, n, 200).with_seed(seed);
                let r = run_honest(&cfg).expect("valid config");
                runs += 1;
                let rates_zero = r.per_hop_error_rates.iter().all(|e| *e == 0.0)
                    && r.bob_check_error_rate == Some(0.0)
                    && r.final_check_error_rate == Some(0.0)
                    && r.error_free();
                if r.aborted || !rates_zero || r.bob_xor_key != r.alice_combined_bits {
                    problems.push(format!("m={m} n={n} seed={seed}"));
                }
            }
        }
    }
    let (fast, elapsed) = within_budget(start, 10);
    check(
        problems.is_empty() && fast,
        format!("{runs} runs, {} inexact, {elapsed:.2?} (budget 10 s)", problems.len()),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut cases = 0usize;
    let mut worst: f64 = 1.0;
    let mut chains: Vec<Vec<OpCode>> = vec![Vec::new()];
    let mut frontier = chains.clone();
    for _ in 0..4 {
        frontier = frontier
            .iter()
            .flat_map(|c| OpCode::ALL.iter().map(move |op| [c.as_slice(), &[*op]].concat()))
            .collect();
        chains.extend(frontier.iter().cloned());
    }
    let mut length_four = 0;
    for label in StateLabel::ALL {
        for chain in &chains {
            let by_label = chain.iter().fold(label, |l, op| op_on_label(*op, l));
            let by_amps = chain.iter().fold(make_state(label), |s, op| apply_op(*op, &s).unwrap());
            let overlap = make_state(by_label).inner(&by_amps).unwrap().norm();
            worst = worst.min(overlap);
            cases += 1;
            length_four += (chain.len() == 4) as usize;
        }
    }
    let (fast, elapsed) = within_budget(start, 5);
    check(
        worst >= 1.0 - 1e-10 && length_four == 39_366 && fast,
        format!("{cases} cases ({length_four} of length 4), min overlap {worst:.15}, {elapsed:.2?} (budget 5 s)"),
    )
}

fn bounds_reproduction() -> Outcome {
    let start = Instant::now();
    let epr = GramParams::epr();
    let s1 = minimize_objective(Objective::S1, 100, DEFAULT_REFINEMENT_ITERS).unwrap().constrained;
    let s2 = minimize_objective(Objective::S2, 100, DEFAULT_REFINEMENT_ITERS).unwrap().constrained;
    let p1 = p1_bound(s1.params).unwrap();
    let p2 = p2_bound(s2.params).unwrap();
    let (fast, elapsed) = within_budget(start, 60);
    let ok = (s1.value - 27.0).abs() < 1e-6
        && s1.params.distance(&epr) < 1e-4
        && (p1 - 0.625).abs() < 1e-9
        && (s2.value - 1.0 / 3.0).abs() < 1e-6
        && s2.params.distance(&epr) < 1e-4
        && (p2 - 2.0 / 3.0).abs() < 1e-9
        && fast;
    check(
        ok,
        format!(
            "s1 min {:.9} at {:.1e} from EPR, P1 {p1:.10}; s2 min {:.9} at {:.1e}, P2 {p2:.10}; {elapsed:.2?} (budget 60 s)",
            s1.value,
            s1.params.distance(&epr),
            s2.value,
            s2.params.distance(&epr)
        ),
    )
}

fn random_feasible(rng: &mut ChaCha8Rng) -> GramParams {
    let z = rng.random_range(1e-6..FRAC_1_SQRT_2 - 1e-6);
    let t = FRAC_1_SQRT_2 - z;
    let radius = (z * t).sqrt() * rng.random::<f64>().sqrt();
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    GramParams::new(radius * angle.cos(), radius * angle.sin(), z, t).unwrap()
}

fn closed_form_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst1: f64 = 0.0;
    let mut worst2: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_feasible(&mut rng);
        worst1 = worst1.max((s1_sum(p).unwrap() - 2.0 * s1_half_closed_form(p)).abs());
        worst2 = worst2.max((s2_sum(p).unwrap() - s2_closed_form(p)).abs());
    }
    check(
        worst1 < 1e-9 && worst2 < 1e-9,
        format!("1000 points, max |s1 - 2 closed| = {worst1:.2e}, max |s2 - closed| = {worst2:.2e}"),
    )
}

/// Retained-check error rate of measure-and-resend in a random basis, from
/// Born probabilities of the explicit six states.
fn intercept_resend_oracle() -> f64 {
    let mut total = 0.0;
    let mut weight = 0.0;
    for label in StateLabel::ALL {
        for eve in qss6::Basis::ALL {
            for checker in qss6::Basis::ALL {
                if checker != label.basis() {
                    continue;
                }
                let sent = make_state(label);
                for eve_bit in [false, true] {
                    let p_eve = qss6::quantum::outcome_probability(&sent, eve, eve_bit).unwrap();
                    let resent = make_state(StateLabel::new(eve_bit, eve));
                    let p_err = qss6::quantum::outcome_probability(&resent, checker, !label.bit()).unwrap();
                    total += p_eve * p_err;
                }
                weight += 1.0;
            }
        }
    }
    total / weight
}

fn intercept_resend() -> Outcome {
    let oracle = intercept_resend_oracle();
    let cfg = ProtocolConfig::new(3, 2, 500).with_seed(5);
    let strategy = AttackStrategy::new(AttackKind::InterceptResend { fraction: 1.0 }, None);
    let campaign = run_campaign(&cfg, ChannelModel::Identity, &strategy, 300).unwrap();
    let stats = campaign.stats;
    let retained = stats.retained_by_stage[&Stage::M5];
    let rate = stats.mean_error_rate(Stage::M5).unwrap();
    let aborts = stats.abort_fraction();
    check(
        (oracle - 1.0 / 3.0).abs() < 1e-12 && retained >= 10_000 && (rate - oracle).abs() <= 0.02 && aborts >= 0.99,
        format!("oracle {oracle:.6}, measured {rate:.4} over {retained} retained samples, abort fraction {aborts:.3}"),
    )
}

fn fake_signal_bound() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [2usize, 3, 5] {
        // decoys from the attacker herself would always be answered consistently
        let cfg = ProtocolConfig::new(m, 1, 3000).with_decoys(0).with_seed(60 + m as u64);
        let strategy = AttackStrategy::new(AttackKind::EntangledFake { pair: PairSpec::epr() }, Some(m));
        let stats = run_campaign(&cfg, ChannelModel::Identity, &strategy, 160).unwrap().stats;
        let samples = stats.informed_retained + stats.blind_retained;
        let rate = stats.fake_error_rate().unwrap_or(0.0);
        let bound = (m - 1) as f64 / (2 * m) as f64;
        ok &= samples >= 10_000 && rate > bound - 0.02 && stats.informed_error_rate == Some(0.0);
        parts.push(format!("m={m}: {rate:.4} vs {bound:.4} over {samples}"));
    }
    check(ok, parts.join("; "))
}

fn efficiency_split() -> Outcome {
    let cfg = ProtocolConfig::new(2, 1, 10_000).with_seed(7);
    let report = compare_memory_modes(&cfg, 10).unwrap();
    let usable = report.measure_immediately.usable_fraction.unwrap();
    let memory = report.quantum_memory.efficiency.unwrap();
    let floor = (1.0 - cfg.check_fraction_bob) * (1.0 - cfg.check_fraction_final) - 0.01;
    check(
        (usable - 0.333).abs() <= 0.01 && memory >= floor && report.quantum_memory.usable_fraction == Some(1.0),
        format!("measure_immediately usable {usable:.4}; quantum_memory efficiency {memory:.4} vs floor {floor:.4}"),
    )
}

fn determinism() -> Outcome {
    let mut cfg = ExperimentConfig::new(ProtocolConfig::new(3, 2, 200).with_seed(31337), 12);
    cfg.attack = AttackStrategy::new(AttackKind::EntangledFake { pair: PairSpec::epr() }, Some(2));
    cfg.channel = ChannelModel::Depolarizing { p: 0.02 };
    let a = run_experiment(&cfg).unwrap().to_json();
    let b = run_experiment(&cfg).unwrap().to_json();
    check(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("honest-run exactness", honest_runs),
        ("oracle equivalence", oracle_equivalence),
        ("bounds reproduction", bounds_reproduction),
        ("closed-form fidelity", closed_form_fidelity),
        ("intercept-resend QBER", intercept_resend),
        ("fake-signal error bound", fake_signal_bound),
        ("efficiency split", efficiency_split),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        failed += !outcome.passed as usize;
        println!("{status} {}. {name}: {}", k + 1, outcome.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
