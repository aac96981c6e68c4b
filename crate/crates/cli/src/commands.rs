use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use oddcycle_core::bell::{
    bell_csv, bell_report, calibrate_visibility, estimate_omega, nonsignaling_check, run_bell_test,
    BellError, SettingCounts,
};
use oddcycle_core::graph::{bounds_report, BoundsReport, BOUNDS_CSV_HEADER, COMPUTED_CAP};
use oddcycle_core::protocol::tcp::{connect_player, serve_referee, serve_source};
use oddcycle_core::protocol::{
    bell_log, round_log, run_game, GameConfig, GameStats, Mode, PlayerStrategy, RefereeReport,
    Role, StrategyTag, Transport,
};
use oddcycle_core::seed::child_seed;
use oddcycle_core::{omega_c, omega_q, parity_strategy, GameSize, NoiseModel};

use crate::config::{game_size, rounds, sizes, CliError, CliResult, Layer, NRange};
use crate::{
    BellArgs, BoundsArgs, ModeArg, Noise, PlayArgs, PlayerArgs, RoleArg, ServeArgs, SourceArgs,
    StrategyArg, SweepArgs, TransportArg,
};

const NOISE_KEYS: [&str; 3] = ["visibility", "target-ratio", "readout-error"];

fn keys(extra: &[&'static str], noise: bool) -> Vec<&'static str> {
    let mut k = vec!["seed"];
    k.extend_from_slice(extra);
    if noise {
        k.extend_from_slice(&NOISE_KEYS);
    }
    k
}

fn required<T>(key: &str, v: Option<T>) -> CliResult<T> {
    v.ok_or_else(|| CliError::field(key, "is required"))
}

fn noise_model(layer: &Layer, args: &Noise, n: GameSize) -> CliResult<NoiseModel> {
    let v = layer.pick("visibility", args.visibility)?;
    let r = layer.pick("target-ratio", args.target_ratio)?;
    let eps = layer.pick("readout-error", args.readout_error)?.unwrap_or(0.0);
    let v = match (v, r) {
        (Some(_), Some(_)) => {
            return Err(CliError::field("target-ratio", "give either --visibility or --target-ratio"))
        }
        (Some(v), None) => v,
        (None, Some(r)) => calibrate_visibility(r, n).map_err(|e| CliError::field("target-ratio", e))?,
        (None, None) => 1.0,
    };
    if !(0.0..=1.0).contains(&v) {
        return Err(CliError::field("visibility", format!("{v} outside [0, 1]")));
    }
    NoiseModel::new(v, eps).map_err(|e| CliError::field("readout-error", e))
}

fn strategy(s: StrategyArg, n: GameSize) -> PlayerStrategy {
    match s {
        StrategyArg::Classical => PlayerStrategy::Classical(parity_strategy(n)),
        StrategyArg::Quantum => PlayerStrategy::Quantum,
    }
}

fn transport(t: TransportArg) -> Transport {
    match t {
        TransportArg::Inproc => Transport::InProcess,
        TransportArg::Tcp => Transport::TcpLocal,
    }
}

fn timeout(layer: &Layer, flag: Option<u64>) -> CliResult<Duration> {
    Ok(Duration::from_millis(layer.pick("timeout-ms", flag)?.unwrap_or(5_000)))
}

fn write_out(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn game_summary(stats: &GameStats, report: &RefereeReport, tag: StrategyTag) -> String {
    let n = stats.n;
    let mut out = format!(
        "n={n}\nstrategy={}\nrounds={}\nincomplete={}\n",
        tag.as_str(),
        stats.total_rounds,
        stats.incomplete
    );
    match (stats.omega_hat, stats.std_error) {
        (Some(p), Some(se)) => {
            out += &format!("omega_hat={p:.6}\nse={se:.6}\n");
            out += &format!("omega_c={:.6}\nomega_q={:.6}\n", omega_c(n), omega_q(n));
            match stats.sigma_above_classical() {
                Ok(s) => out += &format!("sigma_above_classical={s:.2}\n"),
                Err(e) => out += &format!("sigma_above_classical=undefined ({e})\n"),
            }
        }
        _ => out += "omega_hat=undefined (no rounds)\n",
    }
    for t in &stats.per_query {
        out += &format!(
            "query_{}_{}_{}={}/{}\n",
            t.query.s(),
            t.query.t(),
            t.query.kind().as_str(),
            t.wins,
            t.count
        );
    }
    if let Some(why) = &report.aborted {
        out += &format!("aborted={why}\n");
    }
    out
}

fn finish_game(stats: &GameStats, report: &RefereeReport, tag: StrategyTag, log: Option<&Path>) -> CliResult<()> {
    print!("{}", game_summary(stats, report, tag));
    if let Some(p) = log {
        std::fs::write(p, round_log(&report.games)).with_context(|| format!("writing {}", p.display()))?;
    }
    match &report.aborted {
        Some(why) => Err(CliError::Runtime(anyhow::anyhow!("run aborted: {why}"))),
        None => Ok(()),
    }
}

pub fn play(a: PlayArgs) -> CliResult<()> {
    let layer = Layer::load(
        a.common.config.as_deref(),
        &keys(
            &["n", "rounds", "strategy", "transport", "log", "no-herald-correction", "timeout-ms"],
            true,
        ),
    )?;
    let n = game_size("n", required("n", layer.pick("n", a.n)?)?)?;
    let rounds = rounds(layer.pick("rounds", a.rounds)?)?;
    let strat = layer.pick("strategy", a.strategy)?.unwrap_or(StrategyArg::Quantum);
    let tr = layer.pick("transport", a.transport)?.unwrap_or(TransportArg::Inproc);
    let seed = layer.pick("seed", a.common.seed)?.unwrap_or(0);
    let log: Option<PathBuf> = layer.pick("log", a.log)?;
    let mut cfg = GameConfig::new(n, rounds, strategy(strat, n), seed);
    cfg.noise = noise_model(&layer, &a.noise, n)?;
    cfg.correct_herald = !layer.flag("no-herald-correction", a.no_herald_correction)?;
    cfg.timeout = timeout(&layer, a.timeout_ms)?;

    let run = run_game(&cfg, transport(tr))?;
    finish_game(&run.stats, &run.report, cfg.strategy_tag(), log.as_deref())
}

pub const SWEEP_CSV_HEADER: &str = "n,strategy,omega_hat,se,omega_c,omega_q,ratio";

pub fn sweep(a: SweepArgs) -> CliResult<()> {
    let layer = Layer::load(
        a.common.config.as_deref(),
        &keys(&["n", "n-range", "rounds", "strategy", "out"], true),
    )?;
    let file_n: Option<u32> = layer.pick("n", None)?;
    let list = if a.n.is_empty() { file_n.into_iter().collect() } else { a.n.clone() };
    let ns = sizes(&list, layer.pick("n-range", a.n_range)?, NRange { lo: 3, hi: 27 })?;
    let rounds = rounds(layer.pick("rounds", a.rounds)?)?;
    let strategies = match layer.pick("strategy", a.strategy)? {
        Some(s) => vec![s],
        None => vec![StrategyArg::Classical, StrategyArg::Quantum],
    };
    let seed = layer.pick("seed", a.common.seed)?.unwrap_or(0);
    let out: Option<PathBuf> = layer.pick("out", a.out)?;
    let noises = ns
        .iter()
        .map(|&n| noise_model(&layer, &a.noise, n))
        .collect::<CliResult<Vec<_>>>()?;

    let mut csv = format!("{SWEEP_CSV_HEADER}\n");
    let mut advantage = Vec::new();
    for (&n, noise) in ns.iter().zip(&noises) {
        for &s in &strategies {
            let mut cfg = GameConfig::new(n, rounds, strategy(s, n), child_seed(seed, n.get() as u64));
            cfg.noise = *noise;
            let run = run_game(&cfg, Transport::InProcess)?;
            let (p, se) = match (run.stats.omega_hat, run.stats.std_error) {
                (Some(p), Some(se)) => (p, se),
                _ => (f64::NAN, f64::NAN),
            };
            if s == StrategyArg::Quantum && p - omega_c(n) > 3.0 * se {
                advantage.push(n.get());
            }
            csv += &format!(
                "{n},{},{p:.6},{se:.6},{:.6},{:.6},{:.6}\n",
                cfg.strategy_tag().as_str(),
                omega_c(n),
                omega_q(n),
                p / omega_q(n)
            );
        }
    }
    write_out(out.as_deref(), &csv)?;
    if strategies.contains(&StrategyArg::Quantum) {
        eprintln!("quantum advantage (omega_hat - omega_c > 3 se) at n = {advantage:?}");
    }
    Ok(())
}

fn insufficient(counts: &SettingCounts, e: BellError) -> CliError {
    let k = counts.n().get();
    let pairs: Vec<String> = (0..k)
        .flat_map(|j| [(j, j), (j, (j + 1) % k)])
        .map(|(x, y)| format!("({x},{y})={}", counts.trials(x, y)))
        .collect();
    CliError::Runtime(anyhow::anyhow!(
        "insufficient data for n = {k}: {e}; trials per relevant pair: {}",
        pairs.join(" ")
    ))
}

pub fn bell(a: BellArgs) -> CliResult<()> {
    let layer = Layer::load(
        a.common.config.as_deref(),
        &keys(&["n", "n-range", "rounds", "transport", "out", "report", "log"], true),
    )?;
    let file_n: Option<u32> = layer.pick("n", None)?;
    let list = if a.n.is_empty() { file_n.into_iter().collect() } else { a.n.clone() };
    let ns = sizes(&list, layer.pick("n-range", a.n_range)?, NRange { lo: 3, hi: 27 })?;
    let rounds = rounds(layer.pick("rounds", a.rounds)?)?;
    let tr = layer.pick("transport", a.transport)?.unwrap_or(TransportArg::Inproc);
    let seed = layer.pick("seed", a.common.seed)?.unwrap_or(0);
    let out: Option<PathBuf> = layer.pick("out", a.out)?;
    let report_path: Option<PathBuf> = layer.pick("report", a.report)?;
    let log: Option<PathBuf> = layer.pick("log", a.log)?;
    if log.is_some() && ns.len() != 1 {
        return Err(CliError::field("log", "needs exactly one n"));
    }
    let noises = ns
        .iter()
        .map(|&n| noise_model(&layer, &a.noise, n))
        .collect::<CliResult<Vec<_>>>()?;

    let mut estimates = Vec::new();
    let mut checks = Vec::new();
    for (&n, noise) in ns.iter().zip(&noises) {
        let s = if ns.len() == 1 { seed } else { child_seed(seed, n.get() as u64) };
        let mut cfg = GameConfig::new(n, rounds, PlayerStrategy::Quantum, s);
        cfg.noise = *noise;
        let (counts, report) = run_bell_test(&cfg, transport(tr))?;
        if let Some(p) = &log {
            std::fs::write(p, bell_log(&report.bell)).with_context(|| format!("writing {}", p.display()))?;
        }
        if let Some(why) = report.aborted {
            return Err(CliError::Runtime(anyhow::anyhow!("run aborted at n = {n}: {why}")));
        }
        estimates.push(estimate_omega(&counts).map_err(|e| insufficient(&counts, e))?);
        checks.push(nonsignaling_check(&counts).ok());
    }
    write_out(out.as_deref(), &bell_csv(&estimates))?;
    let text = bell_report(&estimates, &checks);
    match report_path {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => eprint!("{text}"),
    }
    Ok(())
}

pub fn bounds(a: BoundsArgs) -> CliResult<()> {
    let layer = Layer::load(a.config.as_deref(), &["n", "n-range", "out"])?;
    let file_n: Option<u32> = layer.pick("n", None)?;
    let list = if a.n.is_empty() { file_n.into_iter().collect() } else { a.n.clone() };
    let ns = sizes(&list, layer.pick("n-range", a.n_range)?, NRange { lo: 3, hi: 13 })?;
    let out: Option<PathBuf> = layer.pick("out", a.out)?;
    let mut csv = format!("{BOUNDS_CSV_HEADER}\n");
    for n in ns {
        let row = if n.get() <= COMPUTED_CAP {
            bounds_report(n).with_context(|| format!("bounds for n = {n}"))?
        } else {
            eprintln!("n={n}: closed form, computation is capped at n <= {COMPUTED_CAP}");
            BoundsReport::closed_form(n)
        };
        csv += &row.csv_row();
        csv.push('\n');
    }
    write_out(out.as_deref(), &csv)
}

pub fn serve(a: ServeArgs) -> CliResult<()> {
    let layer = Layer::load(
        a.common.config.as_deref(),
        &keys(&["listen", "n", "rounds", "mode", "strategy", "timeout-ms", "log"], false),
    )?;
    let listen: String = required("listen", layer.pick("listen", a.listen)?)?;
    let n = game_size("n", required("n", layer.pick("n", a.n)?)?)?;
    let rounds = rounds(layer.pick("rounds", a.rounds)?)?;
    let mode = layer.pick("mode", a.mode)?.unwrap_or(ModeArg::Game);
    let strat = layer.pick("strategy", a.strategy)?.unwrap_or(StrategyArg::Quantum);
    let seed = layer.pick("seed", a.common.seed)?.unwrap_or(0);
    let log: Option<PathBuf> = layer.pick("log", a.log)?;
    let mut cfg = GameConfig::new(n, rounds, strategy(strat, n), seed);
    cfg.timeout = timeout(&layer, a.timeout_ms)?;
    let mode = match mode {
        ModeArg::Game => Mode::Game,
        ModeArg::Bell => Mode::Bell,
    };
    let listener = TcpListener::bind(&listen).with_context(|| format!("binding {listen}"))?;
    let report = serve_referee(listener, &cfg.referee(mode)).with_context(|| format!("referee on {listen}"))?;
    match mode {
        Mode::Game => {
            let stats = GameStats::from_records(n, &report.games);
            finish_game(&stats, &report, cfg.strategy_tag(), log.as_deref())
        }
        Mode::Bell => {
            if let Some(p) = &log {
                std::fs::write(p, bell_log(&report.bell)).with_context(|| format!("writing {}", p.display()))?;
            }
            println!("rounds={}\nincomplete={}", report.recorded(), report.incomplete());
            let counts = SettingCounts::from_records(n, &report.bell)?;
            let est = estimate_omega(&counts).map_err(|e| insufficient(&counts, e))?;
            print!("{}", bell_report(&[est], &[nonsignaling_check(&counts).ok()]));
            match report.aborted {
                Some(why) => Err(CliError::Runtime(anyhow::anyhow!("run aborted: {why}"))),
                None => Ok(()),
            }
        }
    }
}

pub fn player(a: PlayerArgs) -> CliResult<()> {
    let layer = Layer::load(
        a.common.config.as_deref(),
        &keys(
            &["referee", "source", "role", "n", "strategy", "no-herald-correction", "timeout-ms"],
            false,
        ),
    )?;
    let referee: String = required("referee", layer.pick("referee", a.referee)?)?;
    let source: Option<String> = layer.pick("source", a.source)?;
    let role = match required("role", layer.pick("role", a.role)?)? {
        RoleArg::Alice => Role::Alice,
        RoleArg::Bob => Role::Bob,
    };
    let n = game_size("n", required("n", layer.pick("n", a.n)?)?)?;
    let strat = layer.pick("strategy", a.strategy)?.unwrap_or(StrategyArg::Quantum);
    if strat == StrategyArg::Quantum && source.is_none() {
        return Err(CliError::field("source", "is required for quantum play"));
    }
    let seed = layer.pick("seed", a.common.seed)?.unwrap_or(0);
    let mut cfg = GameConfig::new(n, 0, strategy(strat, n), seed);
    cfg.correct_herald = !layer.flag("no-herald-correction", a.no_herald_correction)?;
    let wait = timeout(&layer, a.timeout_ms)? * 2;
    let summary = connect_player(&referee, source.as_deref(), cfg.player(role), wait)
        .with_context(|| format!("{role} via referee {referee}"))?;
    println!("role={role}\nsource_losses={}", summary.source_losses);
    Ok(())
}

pub fn source(a: SourceArgs) -> CliResult<()> {
    let layer = Layer::load(
        a.common.config.as_deref(),
        &keys(&["listen", "n", "fail-at-round"], true),
    )?;
    let listen: String = required("listen", layer.pick("listen", a.listen)?)?;
    let n = game_size("n", required("n", layer.pick("n", a.n)?)?)?;
    let seed = layer.pick("seed", a.common.seed)?.unwrap_or(0);
    let mut cfg = GameConfig::new(n, 0, PlayerStrategy::Quantum, seed);
    cfg.noise = noise_model(&layer, &a.noise, n)?;
    cfg.source_fail_at = layer.pick("fail-at-round", a.fail_at_round)?;
    let scfg = cfg.source().expect("quantum configuration has a source");
    let listener = TcpListener::bind(&listen).with_context(|| format!("binding {listen}"))?;
    let summary = serve_source(listener, scfg).with_context(|| format!("source on {listen}"))?;
    println!("resets={}", summary.resets);
    Ok(())
}
