//! Bell-test variant: players pick settings independently, and the game
//! value is estimated from conditional frequencies of the relevant setting
//! pairs.

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use crate::game::{omega_c, GameSize};
use crate::protocol::{run_bell_rounds, BellRecord, GameConfig, ProtocolError, RefereeReport, Transport};
use crate::quantum::omega_q;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BellError {
    #[error("no trials for setting pair ({x},{y})")]
    MissingPair { x: u32, y: u32 },
    #[error("setting ({x},{y}) is out of range for n = {n}")]
    SettingOutOfRange { x: u32, y: u32, n: u32 },
    #[error("target ratio {0} must lie in (0, 1]")]
    InvalidRatio(f64),
    #[error("ratio {ratio} needs visibility {visibility}, outside [0, 1]")]
    VisibilityOutOfRange { ratio: f64, visibility: f64 },
    #[error("winning probability {0} outside [0, 1]")]
    InvalidOmega(f64),
    #[error("{party} setting {setting} has trials for fewer than two opposite settings")]
    InsufficientData { party: Party, setting: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

impl std::fmt::Display for Party {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        })
    }
}

/// Counts of `(a, b, x, y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SettingCounts {
    n: GameSize,
    // [x][y][2a + b]
    cells: Vec<Vec<[u64; 4]>>,
}

impl SettingCounts {
    pub fn new(n: GameSize) -> Self {
        let k = n.get() as usize;
        SettingCounts {
            n,
            cells: vec![vec![[0; 4]; k]; k],
        }
    }

    /// Tallies the complete records; aborted rounds carry no outcome.
    pub fn from_records(n: GameSize, records: &[BellRecord]) -> Result<Self, BellError> {
        let mut c = Self::new(n);
        for r in records {
            if let (Some((x, y)), Some(o)) = (r.settings, r.outputs) {
                c.add(x, y, o.a, o.b, 1)?;
            }
        }
        Ok(c)
    }

    pub fn n(&self) -> GameSize {
        self.n
    }

    pub fn add(&mut self, x: u32, y: u32, a: u8, b: u8, count: u64) -> Result<(), BellError> {
        let k = self.n.get();
        if x >= k || y >= k {
            return Err(BellError::SettingOutOfRange { x, y, n: k });
        }
        self.cells[x as usize][y as usize][2 * (a & 1) as usize + (b & 1) as usize] += count;
        Ok(())
    }

    pub fn count(&self, a: u8, b: u8, x: u32, y: u32) -> u64 {
        self.cells[x as usize][y as usize][2 * a as usize + b as usize]
    }

    pub fn trials(&self, x: u32, y: u32) -> u64 {
        self.cells[x as usize][y as usize].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().flatten().sum()
    }

    /// `P̂(a,b|x,y)`, `None` without trials.
    pub fn prob(&self, a: u8, b: u8, x: u32, y: u32) -> Option<f64> {
        let t = self.trials(x, y);
        (t > 0).then(|| self.count(a, b, x, y) as f64 / t as f64)
    }

    /// Whether `(x, y)` appears in the inequality.
    pub fn is_relevant(&self, x: u32, y: u32) -> bool {
        y == x || y == (x + 1) % self.n.get()
    }

    /// Copy keeping only the `2n` pairs of the inequality.
    pub fn relevant_only(&self) -> Self {
        let mut c = self.clone();
        for x in 0..self.n.get() {
            for y in 0..self.n.get() {
                if !self.is_relevant(x, y) {
                    c.cells[x as usize][y as usize] = [0; 4];
                }
            }
        }
        c
    }

    /// Trials with the local outcome equal to `out` for `party`.
    fn marginal(&self, party: Party, out: u8, own: u32, other: u32) -> (u64, u64) {
        let (x, y) = match party {
            Party::Alice => (own, other),
            Party::Bob => (other, own),
        };
        let cell = &self.cells[x as usize][y as usize];
        let hits = match party {
            Party::Alice => cell[2 * out as usize] + cell[2 * out as usize + 1],
            Party::Bob => cell[out as usize] + cell[2 + out as usize],
        };
        (hits, cell.iter().sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellEstimate {
    pub n: GameSize,
    pub omega_hat: f64,
    pub std_error: f64,
    /// `1 - (1 - ω̂)/(1 - ω_c)`, unclamped.
    pub p_nl_lower: f64,
    pub p_nl_error: f64,
}

pub const BELL_CSV_HEADER: &str = "n,omega_hat,se,pnl,pnl_err";

impl BellEstimate {
    pub fn nonlocal_content(&self) -> NonlocalContent {
        NonlocalContent::from_raw(self.p_nl_lower)
    }

    /// `n,omega_hat,se,pnl,pnl_err` with the clamped nonlocal content.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6}",
            self.n,
            self.omega_hat,
            self.std_error,
            self.nonlocal_content().value,
            self.p_nl_error
        )
    }
}

/// Game value from the relevant setting pairs. Each pair's winning frequency
/// is a binomial proportion; their errors add in quadrature with weight
/// `1/2n`.
pub fn estimate_omega(counts: &SettingCounts) -> Result<BellEstimate, BellError> {
    let n = counts.n();
    let k = n.get();
    let mut sum = 0.0;
    let mut var = 0.0;
    for j in 0..k {
        for (x, y, cells) in [(j, j, [(0, 0), (1, 1)]), (j, (j + 1) % k, [(0, 1), (1, 0)])] {
            let t = counts.trials(x, y);
            if t == 0 {
                return Err(BellError::MissingPair { x, y });
            }
            let w: u64 = cells.iter().map(|&(a, b)| counts.count(a, b, x, y)).sum();
            let p = w as f64 / t as f64;
            sum += p;
            var += p * (1.0 - p) / t as f64;
        }
    }
    let two_n = 2.0 * k as f64;
    let omega_hat = sum / two_n;
    let std_error = var.sqrt() / two_n;
    let scale = 1.0 - omega_c(n);
    Ok(BellEstimate {
        n,
        omega_hat,
        std_error,
        p_nl_lower: 1.0 - (1.0 - omega_hat) / scale,
        p_nl_error: std_error / scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlocalContent {
    /// Clamped at 0.
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
}

impl NonlocalContent {
    fn from_raw(raw: f64) -> Self {
        NonlocalContent {
            value: raw.max(0.0),
            raw,
            clamped: raw < 0.0,
        }
    }
}

/// Lower bound `1 - (1 - ω)/(1 - ω_c)` on the nonlocal content.
pub fn nonlocal_content(omega_hat: f64, n: GameSize) -> Result<NonlocalContent, BellError> {
    if !(0.0..=1.0).contains(&omega_hat) {
        return Err(BellError::InvalidOmega(omega_hat));
    }
    Ok(NonlocalContent::from_raw(
        1.0 - (1.0 - omega_hat) / (1.0 - omega_c(n)),
    ))
}

/// Nonlocal content reached by the optimal quantum strategy,
/// `1 - (2n - n(1 + cos(π/2n)))`.
pub fn theoretical_pnl_bound(n: GameSize) -> f64 {
    let k = n.get() as f64;
    1.0 - (2.0 * k - k * (1.0 + (PI / (2.0 * k)).cos()))
}

/// Werner visibility whose win probability is `ratio · ω_q(n)`, with no
/// readout error.
pub fn calibrate_visibility(ratio: f64, n: GameSize) -> Result<f64, BellError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(BellError::InvalidRatio(ratio));
    }
    let q = omega_q(n);
    let v = (ratio * q - 0.5) / (q - 0.5);
    if !(0.0..=1.0).contains(&v) {
        return Err(BellError::VisibilityOutOfRange { ratio, visibility: v });
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdvantageWindow {
    /// Largest odd `n` such that every odd size from 3 up to it beats the
    /// classical value; `None` if even `n = 3` does not.
    pub largest: Option<GameSize>,
    /// The advantage still held at the end of the scan.
    pub open_ended: bool,
}

/// Scans odd `n` from 3 to `n_max` for `ratio · ω_q(n) > ω_c(n)`.
pub fn advantage_window(ratio: f64, n_max: u32) -> AdvantageWindow {
    let mut largest = None;
    for n in GameSize::odd_range(3, n_max) {
        if ratio * omega_q(n) > omega_c(n) {
            largest = Some(n);
        } else {
            return AdvantageWindow {
                largest,
                open_ended: false,
            };
        }
    }
    AdvantageWindow {
        largest,
        open_ended: largest.is_some(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshReference {
    pub omega_c: f64,
    pub omega_q: f64,
    pub pnl: f64,
}

pub fn chsh_reference() -> ChshReference {
    ChshReference {
        omega_c: 0.75,
        omega_q: (PI / 8.0).cos().powi(2),
        pnl: 2f64.sqrt() - 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonsignalingReport {
    /// Largest `|P̂(a|x,y) - P̂(a|x,y')|` over both parties.
    pub max_deviation: f64,
    /// Pooled standard error of that difference.
    pub std_error: f64,
    /// Largest deviation measured in its own standard errors.
    pub max_z: f64,
    pub party: Party,
    pub setting: u32,
    pub others: (u32, u32),
}

impl NonsignalingReport {
    pub fn passes(&self, k: f64) -> bool {
        self.max_deviation == 0.0 || self.max_deviation < k * self.std_error
    }
}

/// Checks that each party's marginals do not depend on the other party's
/// setting.
pub fn nonsignaling_check(counts: &SettingCounts) -> Result<NonsignalingReport, BellError> {
    let k = counts.n().get();
    let mut best: Option<NonsignalingReport> = None;
    let mut max_z: f64 = 0.0;
    for party in [Party::Alice, Party::Bob] {
        for own in 0..k {
            let seen: Vec<u32> = (0..k)
                .filter(|&o| counts.marginal(party, 0, own, o).1 > 0)
                .collect();
            if seen.len() < 2 {
                return Err(BellError::InsufficientData { party, setting: own });
            }
            for (i, &o1) in seen.iter().enumerate() {
                for &o2 in &seen[i + 1..] {
                    // outcome 1 mirrors outcome 0, so one comparison suffices
                    let (h1, t1) = counts.marginal(party, 0, own, o1);
                    let (h2, t2) = counts.marginal(party, 0, own, o2);
                    let d = (h1 as f64 / t1 as f64 - h2 as f64 / t2 as f64).abs();
                    let p = (h1 + h2) as f64 / (t1 + t2) as f64;
                    let se = (p * (1.0 - p) * (1.0 / t1 as f64 + 1.0 / t2 as f64)).sqrt();
                    if se > 0.0 {
                        max_z = max_z.max(d / se);
                    } else if d > 0.0 {
                        max_z = f64::INFINITY;
                    }
                    if best.is_none_or(|b| d > b.max_deviation) {
                        best = Some(NonsignalingReport {
                            max_deviation: d,
                            std_error: se,
                            max_z: 0.0,
                            party,
                            setting: own,
                            others: (o1, o2),
                        });
                    }
                }
            }
        }
    }
    let mut report = best.expect("at least one comparison when n >= 3");
    report.max_z = max_z;
    Ok(report)
}

/// Runs Bell-test rounds and tallies their outcomes.
pub fn run_bell_test(
    cfg: &GameConfig,
    transport: Transport,
) -> Result<(SettingCounts, RefereeReport), ProtocolError> {
    let report = run_bell_rounds(cfg, transport)?;
    let counts = SettingCounts::from_records(cfg.n, &report.bell)
        .expect("players only report settings below n");
    Ok((counts, report))
}

/// CSV with one row per estimate.
pub fn bell_csv(estimates: &[BellEstimate]) -> String {
    let mut out = String::from(BELL_CSV_HEADER);
    out.push('\n');
    for e in estimates {
        writeln!(out, "{}", e.csv_row()).expect("writing to a String");
    }
    out
}

/// Flat `key=value` report, CHSH reference values last.
pub fn bell_report(estimates: &[BellEstimate], nonsignaling: &[Option<NonsignalingReport>]) -> String {
    let mut out = String::new();
    let mut line = |k: String, v: String| writeln!(out, "{k}={v}").expect("writing to a String");
    for (i, e) in estimates.iter().enumerate() {
        let n = e.n;
        let pnl = e.nonlocal_content();
        line(format!("n{n}.omega_hat"), format!("{:.6}", e.omega_hat));
        line(format!("n{n}.se"), format!("{:.6}", e.std_error));
        line(format!("n{n}.omega_c"), format!("{:.6}", omega_c(n)));
        line(format!("n{n}.omega_q"), format!("{:.6}", omega_q(n)));
        line(format!("n{n}.pnl"), format!("{:.6}", pnl.value));
        line(format!("n{n}.pnl_raw"), format!("{:.6}", pnl.raw));
        line(format!("n{n}.pnl_err"), format!("{:.6}", e.p_nl_error));
        line(format!("n{n}.pnl_bound"), format!("{:.6}", theoretical_pnl_bound(n)));
        if let Some(Some(ns)) = nonsignaling.get(i) {
            line(format!("n{n}.nonsignaling_max_dev"), format!("{:.6}", ns.max_deviation));
            line(format!("n{n}.nonsignaling_se"), format!("{:.6}", ns.std_error));
        }
    }
    let c = chsh_reference();
    line("chsh.omega_c".into(), format!("{:.6}", c.omega_c));
    line("chsh.omega_q".into(), format!("{:.6}", c.omega_q));
    line("chsh.pnl".into(), format!("{:.6}", c.pnl));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::parity_strategy;
    use crate::protocol::PlayerStrategy;
    use crate::quantum::{win_probability_exact, NoiseModel};
    use crate::enumerate_queries;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn size(n: u32) -> GameSize {
        GameSize::new(n).unwrap()
    }

    #[test]
    fn parity_counts_give_classical_value() {
        let n = size(5);
        let s = parity_strategy(n);
        let mut c = SettingCounts::new(n);
        for x in 0..5 {
            for y in 0..5 {
                c.add(x, y, s.color_a()[x as usize], s.color_b()[y as usize], 37).unwrap();
            }
        }
        let e = estimate_omega(&c).unwrap();
        assert_eq!(e.omega_hat, 0.9);
        assert_eq!(e.p_nl_lower, 0.0);
    }

    #[test]
    fn losing_counts_give_zero() {
        let n = size(3);
        let mut c = SettingCounts::new(n);
        for j in 0..3 {
            c.add(j, j, 0, 1, 10).unwrap();
            c.add(j, (j + 1) % 3, 1, 1, 10).unwrap();
        }
        let e = estimate_omega(&c).unwrap();
        assert_eq!(e.omega_hat, 0.0);
        assert_eq!(e.std_error, 0.0);
        assert!(e.nonlocal_content().clamped);
        assert_eq!(e.nonlocal_content().value, 0.0);
    }

    #[test]
    fn missing_pair_is_named() {
        let n = size(3);
        let mut c = SettingCounts::new(n);
        for j in 0..3 {
            c.add(j, j, 0, 0, 1).unwrap();
        }
        c.add(0, 1, 0, 1, 1).unwrap();
        c.add(2, 0, 0, 1, 1).unwrap();
        assert_eq!(estimate_omega(&c), Err(BellError::MissingPair { x: 1, y: 2 }));
        assert!(c.add(3, 0, 0, 0, 1).is_err());
    }

    #[test]
    fn nonlocal_content_reference_points() {
        let n5 = size(5);
        let w = 0.978 * (PI / 20.0).cos().powi(2);
        let p = nonlocal_content(w, n5).unwrap().value;
        assert!((p - 0.54).abs() < 0.005, "{p}");
        assert_eq!(nonlocal_content(omega_c(n5), n5).unwrap().value, 0.0);
        assert_eq!(nonlocal_content(1.0, n5).unwrap().value, 1.0);
        let low = nonlocal_content(0.5, n5).unwrap();
        assert!(low.clamped && low.raw < 0.0);
        assert!(nonlocal_content(1.5, n5).is_err());
    }

    #[test]
    fn pnl_bound_is_the_quantum_nonlocal_content() {
        for n in GameSize::odd_range(3, 99) {
            let via = nonlocal_content(omega_q(n), n).unwrap().value;
            assert!((via - theoretical_pnl_bound(n)).abs() < 1e-12, "n = {n}");
        }
        assert!((theoretical_pnl_bound(size(5)) - 0.755_283).abs() < 1e-6);
        let mut prev = 0.0;
        for n in GameSize::odd_range(3, 2001) {
            let b = theoretical_pnl_bound(n);
            assert!(b > prev);
            prev = b;
        }
        assert!(prev > 0.999);
    }

    #[test]
    fn pnl_is_monotone_in_omega() {
        let n = size(7);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=100 {
            let raw = nonlocal_content(i as f64 / 100.0, n).unwrap().raw;
            assert!(raw > prev);
            prev = raw;
        }
    }

    #[test]
    fn calibration_round_trips() {
        assert_eq!(calibrate_visibility(1.0, size(3)).unwrap(), 1.0);
        let v = calibrate_visibility(0.978, size(5)).unwrap();
        assert!((v - 0.9549).abs() < 5e-5, "{v}");
        for n in GameSize::odd_range(3, 27) {
            let v = calibrate_visibility(0.978, n).unwrap();
            let noise = NoiseModel::werner(v).unwrap();
            for q in enumerate_queries(n) {
                let w = win_probability_exact(n, &q, &noise);
                assert!((w / omega_q(n) - 0.978).abs() < 1e-12);
            }
        }
        assert!(matches!(calibrate_visibility(0.3, size(3)), Err(BellError::VisibilityOutOfRange { .. })));
        assert!(matches!(calibrate_visibility(0.0, size(3)), Err(BellError::InvalidRatio(_))));
        assert!(matches!(calibrate_visibility(1.1, size(3)), Err(BellError::InvalidRatio(_))));
    }

    #[test]
    fn advantage_window_cases() {
        let ideal = advantage_window(1.0, 51);
        assert_eq!(ideal.largest, Some(size(51)));
        assert!(ideal.open_ended);
        let w = advantage_window(0.978, 99);
        assert!(w.largest.unwrap().get() >= 19);
        assert!(!w.open_ended);
        assert_eq!(advantage_window(0.5, 99).largest, None);
    }

    #[test]
    fn chsh_constants() {
        let c = chsh_reference();
        assert_eq!(c.omega_c, 0.75);
        assert!((c.omega_q - 0.853_553).abs() < 1e-6);
        assert!((c.pnl - 0.414_214).abs() < 1e-6);
    }

    #[test]
    fn synthetic_distribution_is_recovered() {
        let n = size(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // random P(a,b|x,y) per pair
        let dist: Vec<Vec<[f64; 4]>> = (0..3)
            .map(|_| {
                (0..3)
                    .map(|_| {
                        let w: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
                        let s: f64 = w.iter().sum();
                        w.map(|v| v / s)
                    })
                    .collect()
            })
            .collect();
        let exact: f64 = (0..3u32)
            .map(|j| {
                let same = dist[j as usize][j as usize];
                let adj = dist[j as usize][((j + 1) % 3) as usize];
                same[0] + same[3] + adj[1] + adj[2]
            })
            .sum::<f64>()
            / 6.0;
        let mut c = SettingCounts::new(n);
        for _ in 0..1_000_000 {
            let (x, y) = (rng.random_range(0..3u32), rng.random_range(0..3u32));
            let u: f64 = rng.random();
            let p = dist[x as usize][y as usize];
            let mut acc = 0.0;
            let mut cell = 3;
            for (i, pi) in p.iter().enumerate() {
                acc += pi;
                if u < acc {
                    cell = i;
                    break;
                }
            }
            c.add(x, y, (cell / 2) as u8, (cell % 2) as u8, 1).unwrap();
        }
        let e = estimate_omega(&c).unwrap();
        assert!((e.omega_hat - exact).abs() < 4.0 * e.std_error);
        assert_eq!(estimate_omega(&c.relevant_only()).unwrap(), e);
    }

    #[test]
    fn constructed_signaling_is_flagged() {
        let n = size(3);
        let mut c = SettingCounts::new(n);
        for x in 0..3 {
            for y in 0..3 {
                // Alice's P(a=0|x,y) is 0.5 for y = 0 and 0.7 otherwise
                let k0 = if y == 0 { 500 } else { 700 };
                c.add(x, y, 0, 0, k0 / 2).unwrap();
                c.add(x, y, 0, 1, k0 / 2).unwrap();
                c.add(x, y, 1, 0, (1000 - k0) / 2).unwrap();
                c.add(x, y, 1, 1, (1000 - k0) / 2).unwrap();
            }
        }
        let r = nonsignaling_check(&c).unwrap();
        assert!((r.max_deviation - 0.2).abs() < 1e-12);
        assert_eq!(r.party, Party::Alice);
        assert!(!r.passes(4.0));
    }

    #[test]
    fn bob_side_is_checked_too() {
        let n = size(3);
        let mut c = SettingCounts::new(n);
        for x in 0..3 {
            for y in 0..3 {
                let k0 = if x == 1 { 200 } else { 500 };
                c.add(x, y, 0, 0, k0).unwrap();
                c.add(x, y, 0, 1, 1000 - k0).unwrap();
            }
        }
        let r = nonsignaling_check(&c).unwrap();
        assert_eq!(r.party, Party::Bob);
        assert!((r.max_deviation - 0.3).abs() < 1e-12);
    }

    #[test]
    fn nonsignaling_needs_two_opposite_settings() {
        let n = size(3);
        let mut c = SettingCounts::new(n);
        for x in 0..3 {
            c.add(x, x, 0, 0, 10).unwrap();
        }
        assert!(matches!(nonsignaling_check(&c), Err(BellError::InsufficientData { .. })));
    }

    #[test]
    fn simulated_bell_counts() {
        let n = size(3);
        let cfg = GameConfig::new(n, 100_000, PlayerStrategy::Quantum, 12);
        let (c, report) = run_bell_test(&cfg, Transport::InProcess).unwrap();
        assert_eq!(report.recorded(), report.commenced);
        assert_eq!(c.total(), 100_000);
        let tol = 4.0 * (100_000.0f64 * (8.0 / 9.0) / 9.0).sqrt();
        for x in 0..3 {
            for y in 0..3 {
                assert!((c.trials(x, y) as f64 - 100_000.0 / 9.0).abs() < tol);
            }
        }
        let e = estimate_omega(&c).unwrap();
        assert!((e.omega_hat - omega_q(n)).abs() < 3.0 * e.std_error);
        assert!(nonsignaling_check(&c).unwrap().passes(4.0));
        let again = run_bell_test(&cfg, Transport::InProcess).unwrap().0;
        assert_eq!(again, c);
    }

    #[test]
    fn report_has_chsh_footer() {
        let e = BellEstimate {
            n: size(5),
            omega_hat: 0.95,
            std_error: 0.001,
            p_nl_lower: 0.5,
            p_nl_error: 0.01,
        };
        let r = bell_report(&[e], &[None]);
        assert!(r.ends_with("chsh.pnl=0.414214\n"));
        assert_eq!(bell_csv(&[e]), "n,omega_hat,se,pnl,pnl_err\n5,0.950000,0.001000,0.500000,0.010000\n");
    }
}
