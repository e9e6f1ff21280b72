use std::path::PathBuf;
use std::process::{Command, Output};

/// Path to a bundled scenario file.
pub fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

/// Run the built binary with the given arguments.
pub fn levsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levsim"))
        .args(args)
        .output()
        .expect("binary launches")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Value of `key=` in a key=value report body or stdout dump.
pub fn kv(text: &str, key: &str) -> Option<String> {
    text.lines().find_map(|l| {
        let l = l.strip_prefix("# ").unwrap_or(l);
        l.strip_prefix(key).and_then(|r| r.strip_prefix('=')).map(str::to_string)
    })
}
