//! Drives the `screener` binary as a child process.

#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_screener"))
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn screener")
}

/// A minimal config with a scripted backend, rooted at `root`.
pub fn write_config(root: &Path, replies: &[&str], delay_ms: u64) -> PathBuf {
    let script: Vec<String> = replies.iter().map(|r| format!("{r:?}")).collect();
    let text = format!(
        r#"bind = "127.0.0.1:0"
session_dir = "sessions"
store_dir = "stores"

[backend]
kind = "scripted"
script = [{}]
delay_ms = {delay_ms}
"#,
        script.join(", ")
    );
    std::fs::create_dir_all(root.join("stores")).unwrap();
    let path = root.join("screener.toml");
    std::fs::write(&path, text).unwrap();
    path
}

pub struct Server {
    pub child: Child,
    pub base: String,
}

impl Server {
    pub fn spawn(config: &Path) -> Self {
        let mut child = Command::new(bin())
            .args(["serve", "--config"])
            .arg(config)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn screener serve");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let addr = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected banner {line:?}"));
        Server { base: format!("http://{addr}"), child }
    }

    /// SIGKILL: no shutdown hooks run.
    pub fn kill(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
