use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;
use std::time::Duration;

use oddcycle_core::protocol::tcp::{connect_player, serve_referee, serve_source};
use oddcycle_core::protocol::{
    run_bell_rounds, run_game, GameConfig, Mode, PlayerStrategy, ProtocolError, Role, Transport,
};
use oddcycle_core::{omega_c, omega_q, parity_strategy, wins, GameSize, QueryKind};

fn size(n: u32) -> GameSize {
    GameSize::new(n).unwrap()
}

fn quantum(n: u32, rounds: u64, seed: u64) -> GameConfig {
    GameConfig::new(size(n), rounds, PlayerStrategy::Quantum, seed)
}

#[test]
fn ideal_quantum_game_matches_exact_value() {
    let run = run_game(&quantum(3, 100_000, 7), Transport::InProcess).unwrap();
    let s = &run.stats;
    assert_eq!(s.total_rounds, 100_000);
    assert_eq!(s.incomplete, 0);
    let (p, se) = (s.omega_hat.unwrap(), s.std_error.unwrap());
    assert!((p - omega_q(size(3))).abs() < 3.0 * se, "{p} ± {se}");
    for r in run.records() {
        let o = r.outputs.unwrap();
        assert_eq!(r.won, wins(&r.query, o.a, o.b));
        assert!(r.gamma.unwrap() < 4);
    }
}

#[test]
fn per_query_win_rates_are_homogeneous() {
    // 99.9% quantile of chi-square with 5 degrees of freedom
    const CRIT: f64 = 20.515;
    let run = run_game(&quantum(3, 100_000, 21), Transport::InProcess).unwrap();
    let s = &run.stats;
    let p = s.wins as f64 / s.total_rounds as f64;
    let chi2: f64 = s
        .per_query
        .iter()
        .map(|t| {
            let (c, w) = (t.count as f64, t.wins as f64);
            (w - c * p).powi(2) / (c * p) + ((c - w) - c * (1.0 - p)).powi(2) / (c * (1.0 - p))
        })
        .sum();
    assert!(chi2 < CRIT, "chi2 = {chi2}");
    assert_eq!(s.per_query.iter().map(|t| t.count).sum::<u64>(), s.total_rounds);
}

#[test]
fn parity_strategy_loses_only_on_the_wraparound_edge() {
    let n = size(3);
    let cfg = GameConfig::new(n, 3_000, PlayerStrategy::Classical(parity_strategy(n)), 3);
    let run = run_game(&cfg, Transport::InProcess).unwrap();
    for t in &run.stats.per_query {
        let losing = t.query.s() == 2 && t.query.t() == 0;
        assert_eq!(t.wins == t.count, !losing, "{}", t.query);
        if losing {
            assert_eq!(t.wins, 0);
            assert_eq!(t.query.kind(), QueryKind::Adjacent);
        }
    }
    assert!(run.records().iter().all(|r| r.gamma.is_none()));
}

#[test]
fn zero_rounds_give_undefined_estimate() {
    let run = run_game(&quantum(5, 0, 1), Transport::InProcess).unwrap();
    assert_eq!(run.stats.omega_hat, None);
    assert!(run.stats.sigma_above_classical().is_err());
    assert_eq!(run.report.commenced, 0);
}

#[test]
fn runs_are_reproducible() {
    let a = run_game(&quantum(5, 2_000, 99), Transport::InProcess).unwrap();
    let b = run_game(&quantum(5, 2_000, 99), Transport::InProcess).unwrap();
    let c = run_game(&quantum(5, 2_000, 100), Transport::InProcess).unwrap();
    assert_eq!(a.records(), b.records());
    assert_ne!(a.records(), c.records());
}

#[test]
fn uncorrected_herald_costs_wins() {
    let mut cfg = quantum(3, 20_000, 5);
    cfg.correct_herald = false;
    let run = run_game(&cfg, Transport::InProcess).unwrap();
    assert!(run.stats.omega_hat.unwrap() < omega_c(size(3)));
}

#[test]
fn transports_produce_identical_records() {
    let cfg = quantum(3, 10_000, 17);
    let local = run_game(&cfg, Transport::InProcess).unwrap();
    let net = run_game(&cfg, Transport::TcpLocal).unwrap();
    assert_eq!(net.report.commenced, 10_000);
    assert_eq!(local.records(), net.records());

    let n = size(5);
    let classical = GameConfig::new(n, 500, PlayerStrategy::Classical(parity_strategy(n)), 2);
    assert_eq!(
        run_game(&classical, Transport::InProcess).unwrap().records(),
        run_game(&classical, Transport::TcpLocal).unwrap().records()
    );
}

#[test]
fn bell_rounds_match_across_transports() {
    let cfg = quantum(3, 3_000, 8);
    let a = run_bell_rounds(&cfg, Transport::InProcess).unwrap();
    let b = run_bell_rounds(&cfg, Transport::TcpLocal).unwrap();
    assert_eq!(a.bell, b.bell);
    assert_eq!(a.recorded(), a.commenced);
    assert!(a.bell.iter().all(|r| r.is_complete()));
}

#[test]
fn source_failure_marks_one_round_incomplete() {
    for transport in [Transport::InProcess, Transport::TcpLocal] {
        let mut cfg = quantum(3, 40, 4);
        cfg.source_fail_at = Some(13);
        let run = run_game(&cfg, transport).unwrap();
        let r = &run.report;
        assert_eq!(r.commenced, 40, "{transport:?}");
        assert_eq!(r.recorded(), 40);
        assert_eq!(r.aborted, None);
        let lost: Vec<u64> = r.games.iter().filter(|g| !g.is_complete()).map(|g| g.round).collect();
        assert_eq!(lost, vec![13], "{transport:?}");
        assert!(!r.games[12].won);
        assert_eq!(run.stats.incomplete, 1);
    }
}

fn hello_reply(addr: &str, line: &str) -> Option<String> {
    let mut s = TcpStream::connect(addr).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    s.write_all(line.as_bytes()).unwrap();
    let mut reply = String::new();
    let n = BufReader::new(s).read_line(&mut reply).ok()?;
    (n > 0).then_some(reply)
}

#[test]
fn referee_rejects_bad_hellos_and_duplicate_roles() {
    let n = size(3);
    let cfg = GameConfig::new(n, 50, PlayerStrategy::Classical(parity_strategy(n)), 1);
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let rcfg = cfg.referee(Mode::Game);
    let referee = thread::spawn(move || serve_referee(listener, &rcfg));

    assert_eq!(
        hello_reply(&addr, "v=2 kind=hello round=0 role=alice\n").as_deref(),
        Some("v=1 kind=finish round=0\n")
    );
    assert_eq!(
        hello_reply(&addr, "v=1 kind=hello round=0 role=carol\n").as_deref(),
        Some("v=1 kind=finish round=0\n")
    );

    let alice_cfg = cfg.player(Role::Alice);
    let raddr = addr.clone();
    let alice = thread::spawn(move || connect_player(&raddr, None, alice_cfg, Duration::from_secs(5)));
    // wait until the first alice holds the slot
    thread::sleep(Duration::from_millis(300));
    let dup = connect_player(&addr, None, cfg.player(Role::Alice), Duration::from_secs(5));
    assert!(matches!(dup, Err(ProtocolError::Rejected(_))), "{dup:?}");

    let bob = connect_player(&addr, None, cfg.player(Role::Bob), Duration::from_secs(5));
    assert!(bob.is_ok());
    alice.join().unwrap().unwrap();
    let report = referee.join().unwrap().unwrap();
    assert_eq!(report.recorded(), 50);
    assert_eq!(report.incomplete(), 0);
}

#[test]
fn source_rejects_duplicate_role() {
    let cfg = quantum(3, 1, 1);
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let scfg = cfg.source().unwrap();
    let source = thread::spawn(move || serve_source(listener, scfg));
    let mut first = TcpStream::connect(&addr).unwrap();
    first.write_all(b"v=1 kind=hello round=0 role=bob\n").unwrap();
    let mut ack = String::new();
    BufReader::new(first.try_clone().unwrap()).read_line(&mut ack).unwrap();
    assert_eq!(ack, "v=1 kind=hello round=0 role=bob\n");
    assert_eq!(
        hello_reply(&addr, "v=1 kind=hello round=0 role=bob\n").as_deref(),
        Some("v=1 kind=finish round=0\n")
    );
    let mut alice = TcpStream::connect(&addr).unwrap();
    alice.write_all(b"v=1 kind=hello round=0 role=alice\n").unwrap();
    let mut ack = String::new();
    BufReader::new(alice.try_clone().unwrap()).read_line(&mut ack).unwrap();
    first.write_all(b"v=1 kind=finish round=0 role=bob\n").unwrap();
    alice.write_all(b"v=1 kind=finish round=0 role=alice\n").unwrap();
    assert_eq!(source.join().unwrap().unwrap().resets, 0);
}
