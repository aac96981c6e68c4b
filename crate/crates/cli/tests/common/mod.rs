#![allow(dead_code)]

use std::collections::HashMap;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oddcycle"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn oddcycle")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// `key=value` lines into a map.
pub fn kv(text: &str) -> HashMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn free_addr() -> String {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    l.local_addr().unwrap().to_string()
}

fn spawn(args: &[String]) -> Child {
    bin()
        .args(args)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn oddcycle")
}

fn strings(args: &[&str]) -> Vec<String> {
    args.iter().map(|s| s.to_string()).collect()
}

pub struct Network {
    pub referee: Child,
    pub players: Vec<Child>,
    pub source: Option<Child>,
}

impl Network {
    /// Source, referee and both players as separate processes.
    pub fn start(n: u32, rounds: u64, seed: u64, strategy: &str, source_extra: &[&str], log: Option<&Path>) -> Self {
        let (n, rounds, seed) = (n.to_string(), rounds.to_string(), seed.to_string());
        let raddr = free_addr();
        let quantum = strategy == "quantum";
        let saddr = free_addr();
        let source = quantum.then(|| {
            let mut a = strings(&["source", "--listen", &saddr, "--n", &n, "--seed", &seed]);
            a.extend(strings(source_extra));
            spawn(&a)
        });
        let mut a = strings(&[
            "serve", "--listen", &raddr, "--n", &n, "--rounds", &rounds, "--seed", &seed,
            "--strategy", strategy,
        ]);
        if let Some(p) = log {
            a.extend(["--log".to_string(), p.display().to_string()]);
        }
        let referee = spawn(&a);
        let players = ["alice", "bob"]
            .into_iter()
            .map(|role| {
                let mut a = strings(&[
                    "player", "--referee", &raddr, "--role", role, "--n", &n, "--seed", &seed,
                    "--strategy", strategy,
                ]);
                if quantum {
                    a.extend(["--source".to_string(), saddr.clone()]);
                }
                spawn(&a)
            })
            .collect();
        Network {
            referee,
            players,
            source,
        }
    }

    /// Waits for everything; returns the referee's output.
    pub fn finish(self) -> Output {
        let out = self.referee.wait_with_output().unwrap();
        for p in self.players {
            p.wait_with_output().unwrap();
        }
        if let Some(s) = self.source {
            s.wait_with_output().unwrap();
        }
        out
    }
}
