//! End-to-end checks of the headline numbers. Prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::Vector2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oddcycle_core::bell::{calibrate_visibility, estimate_omega, nonsignaling_check, run_bell_test};
use oddcycle_core::game::omega_c_exact;
use oddcycle_core::graph::{bounds_report, exclusivity_graph, mobius_ladder, verify_is_mobius};
use oddcycle_core::protocol::{
    round_log, run_bell_rounds, run_game, sigma_for, GameConfig, PlayerStrategy, Transport,
    ROUND_LOG_HEADER,
};
use oddcycle_core::quantum::{
    bell_state, compile_pulse_sequence, phase_correction, ry, win_probability_exact,
    win_probability_heralded, z_statistics, HeraldPattern,
};
use oddcycle_core::{
    brute_force_optimum, enumerate_queries, omega_c, omega_q, parity_strategy, GameSize, NoiseModel,
};

use common::{kv, stdout, Network};

type Check = Result<String, String>;
type Criterion = fn() -> Check;

fn size(n: u32) -> GameSize {
    GameSize::new(n).unwrap()
}

fn ensure(cond: bool, msg: String) -> Check {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn classical_limit() -> Check {
    let start = Instant::now();
    for n in [3, 5, 7, 9] {
        let (best, _) = brute_force_optimum(size(n)).map_err(|e| e.to_string())?;
        if best.ratio() != omega_c_exact(size(n)) {
            return Err(format!("n={n}: got {best}"));
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(10), format!("n = 3..9 exact, {t:.2?}"))
}

fn quantum_limit() -> Check {
    let mut worst: f64 = 0.0;
    for n in GameSize::odd_range(3, 27) {
        let target = (PI / (4.0 * n.get() as f64)).cos().powi(2);
        for q in enumerate_queries(n) {
            worst = worst.max((win_probability_exact(n, &q, &NoiseModel::IDEAL) - target).abs());
        }
    }
    ensure(worst < 1e-12, format!("max deviation {worst:.1e}"))
}

fn monte_carlo() -> Check {
    let start = Instant::now();
    let cfg = GameConfig::new(size(3), 100_000, PlayerStrategy::Quantum, 2024);
    let run = run_game(&cfg, Transport::InProcess).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    let (p, se) = (run.stats.omega_hat.unwrap(), run.stats.std_error.unwrap());
    let z = (p - 0.93301).abs() / se;
    ensure(
        z < 3.0 && t < Duration::from_secs(5),
        format!("omega_hat {p:.5} ± {se:.5}, {z:.2} SE from 0.93301, {t:.2?}"),
    )
}

fn calibrated(n: GameSize, rounds: u64, seed: u64) -> GameConfig {
    let mut cfg = GameConfig::new(n, rounds, PlayerStrategy::Quantum, seed);
    cfg.noise = NoiseModel::werner(calibrate_visibility(0.978, n).unwrap()).unwrap();
    cfg
}

fn pnl_at_five() -> Check {
    let (counts, _) = run_bell_test(&calibrated(size(5), 100_000, 5), Transport::InProcess)
        .map_err(|e| e.to_string())?;
    let e = estimate_omega(&counts).map_err(|e| e.to_string())?;
    let p = e.nonlocal_content().value;
    ensure(
        (p - 0.54).abs() <= 0.02,
        format!("p_NL = {p:.4} ± {:.4}", e.p_nl_error),
    )
}

fn advantage_through_nineteen() -> Check {
    let out = common::run(&[
        "sweep", "--n-range", "3..27", "--rounds", "100000", "--target-ratio", "0.978",
        "--strategy", "quantum", "--seed", "1",
    ]);
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let mut with = Vec::new();
    for row in stdout(&out).lines().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        let (n, p, se, wc): (u32, f64, f64, f64) =
            (f[0].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap(), f[4].parse().unwrap());
        if p - wc > 3.0 * se {
            with.push(n);
        }
    }
    let expected: Vec<u32> = (3..=19).step_by(2).collect();
    ensure(with == expected, format!("advantage at n = {with:?}"))
}

fn sigma_at_three() -> Check {
    let rounds = 101_000 / 6;
    let cfg = calibrated(size(3), rounds, 26);
    let run = run_game(&cfg, Transport::InProcess).map_err(|e| e.to_string())?;
    let p = run.stats.omega_hat.unwrap();
    let s = sigma_for(p, rounds, size(3)).map_err(|e| e.to_string())?;
    ensure(
        (20.0..=32.0).contains(&s),
        format!("{rounds} rounds: omega_hat {p:.5}, {s:.1} sigma (window 20..32)"),
    )
}

fn appendix_bounds() -> Check {
    let start = Instant::now();
    for n in GameSize::odd_range(3, 13) {
        let k = n.get() as f64;
        let r = bounds_report(n).map_err(|e| format!("n={n}: {e}"))?;
        let theta = k * (1.0 + (PI / (2.0 * k)).cos());
        if r.alpha != 2 * n.get() as usize - 1
            || (r.theta - theta).abs() > 1e-6
            || (r.alpha_star - 2.0 * k).abs() > 1e-9
            || (r.theta / (2.0 * k) - omega_q(n)).abs() > 1e-6
        {
            return Err(format!("n={n}: {r:?}"));
        }
        let g = exclusivity_graph(n);
        let m = mobius_ladder(4 * n.get() as usize).unwrap();
        let check = verify_is_mobius(&g, n);
        let w = check.witness().ok_or(format!("n={n}: no witness"))?;
        let mut image: Vec<usize> = w.to_vec();
        image.sort_unstable();
        let bijective = image == (0..g.order()).collect::<Vec<_>>();
        let preserved = (0..g.order())
            .all(|u| (0..g.order()).all(|v| g.adjacent(u, v) == m.adjacent(w[u], w[v])));
        if !bijective || !preserved {
            return Err(format!("n={n}: witness is not an isomorphism"));
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(60), format!("n = 3..13, witnesses verified, {t:.2?}"))
}

fn herald_correction() -> Check {
    let ideal = bell_state(0.0);
    let mut worst: f64 = 0.0;
    for g in 0..4 {
        let h = HeraldPattern::with_default_table(g).unwrap();
        let fixed = phase_correction(&bell_state(h.phase()), &h);
        worst = worst.max((fixed.rho() - ideal.rho()).map(|z| z.norm()).max());
    }
    let n = size(3);
    let pi = HeraldPattern::with_default_table(2).unwrap();
    let qs = enumerate_queries(n);
    let raw: f64 = qs
        .iter()
        .map(|q| win_probability_heralded(n, q, &NoiseModel::IDEAL, pi, false))
        .sum::<f64>()
        / qs.len() as f64;
    ensure(
        worst < 1e-12 && raw < omega_c(n),
        format!("corrected max deviation {worst:.1e}; uncorrected phase pi wins {raw:.4} < {:.4}", omega_c(n)),
    )
}

fn pulse_compilation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let theta = rng.random_range(-2.0 * PI..2.0 * PI);
        let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let psi = Vector2::new(Complex64::new(c[0], c[1]), Complex64::new(c[2], c[3])).normalize();
        let (p0, p1) = z_statistics(&compile_pulse_sequence(theta).composed(), &psi);
        let (q0, q1) = z_statistics(&ry(theta), &psi);
        worst = worst.max(0.5 * ((p0 - q0).abs() + (p1 - q1).abs()));
    }
    ensure(worst < 1e-12, format!("max total variation {worst:.1e} over 100 pairs"))
}

fn transport_equivalence() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log = dir.path().join("net.csv");
    let net = Network::start(3, 10_000, 31, "quantum", &[], Some(&log)).finish();
    if !net.status.success() {
        return Err(String::from_utf8_lossy(&net.stderr).into_owned());
    }
    let t = start.elapsed();
    let s = kv(&stdout(&net));
    let p1: f64 = s["omega_hat"].parse().unwrap();
    let n1: f64 = s["rounds"].parse().unwrap();

    let cfg = GameConfig::new(size(3), 10_000, PlayerStrategy::Quantum, 31);
    let local = run_game(&cfg, Transport::InProcess).map_err(|e| e.to_string())?;
    let p2 = local.stats.omega_hat.unwrap();
    let n2 = local.stats.total_rounds as f64;
    let pool = (p1 * n1 + p2 * n2) / (n1 + n2);
    let z = (p1 - p2).abs() / (pool * (1.0 - pool) * (1.0 / n1 + 1.0 / n2)).sqrt();

    let net_log = std::fs::read_to_string(&log).map_err(|e| e.to_string())?;
    let local_log = round_log(local.records());
    let schema = |text: &str| {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default().to_string();
        let widths: Vec<usize> = lines.map(|l| l.split(',').count()).collect();
        (header, widths)
    };
    let (h1, w1) = schema(&net_log);
    let (h2, w2) = schema(&local_log);
    let same_schema = h1 == ROUND_LOG_HEADER && h1 == h2 && w1 == w2;
    ensure(
        z < 3.0 && same_schema && t < Duration::from_secs(60),
        format!(
            "4 processes: {p1:.4} vs in-process {p2:.4}, z = {z:.2}, schema {}, {t:.2?}",
            if same_schema { "identical" } else { "differs" }
        ),
    )
}

fn loophole_accounting() -> Check {
    let n = size(3);
    let mut modes = Vec::new();
    for transport in [Transport::InProcess, Transport::TcpLocal] {
        for (label, strategy) in [
            ("quantum", PlayerStrategy::Quantum),
            ("classical", PlayerStrategy::Classical(parity_strategy(n))),
        ] {
            for fail in [None, Some(7)] {
                let mut cfg = GameConfig::new(n, 300, strategy.clone(), 3);
                cfg.source_fail_at = fail;
                let g = run_game(&cfg, transport).map_err(|e| e.to_string())?.report;
                let b = run_bell_rounds(&cfg, transport).map_err(|e| e.to_string())?;
                for (mode, r) in [("game", g), ("bell", b)] {
                    if r.recorded() != r.commenced || r.commenced != 300 {
                        return Err(format!(
                            "{transport:?} {label} {mode}: {} recorded of {} commenced",
                            r.recorded(),
                            r.commenced
                        ));
                    }
                    modes.push(r.incomplete());
                }
            }
        }
    }
    let faulted: u64 = modes.iter().sum();
    Ok(format!("{} runs, zero discarded ({faulted} incomplete rounds kept)", modes.len()))
}

fn nonsignaling() -> Check {
    let cfg = GameConfig::new(size(3), 1_000_000, PlayerStrategy::Quantum, 10);
    let (counts, _) = run_bell_test(&cfg, Transport::InProcess).map_err(|e| e.to_string())?;
    let r = nonsignaling_check(&counts).map_err(|e| e.to_string())?;
    ensure(
        r.passes(4.0),
        format!("max deviation {:.5} vs 4 SE = {:.5}", r.max_deviation, 4.0 * r.std_error),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 12] = [
        ("1", classical_limit),
        ("2", quantum_limit),
        ("3", monte_carlo),
        ("4a", pnl_at_five),
        ("4b", advantage_through_nineteen),
        ("4c", sigma_at_three),
        ("5", appendix_bounds),
        ("6", herald_correction),
        ("7", pulse_compilation),
        ("8", transport_equivalence),
        ("9", loophole_accounting),
        ("10", nonsignaling),
    ];
    let mut failed = 0;
    for (id, check) in criteria {
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] criterion {id}: {detail}");
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
