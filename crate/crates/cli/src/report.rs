//! Run manifests and artifact writing.
//!
//! Every artifact records how it was produced: CSV files carry the
//! manifest as `#` comment lines above the header, JSON documents embed
//! it under a `manifest` key. CSV bodies (the non-comment lines) are
//! deterministic for fixed inputs and seed; only the wall-time comment
//! may vary between runs.

use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub struct Manifest {
    subcommand: &'static str,
    config: String,
    params: Map<String, Value>,
    outputs: Vec<String>,
    started: Instant,
}

impl Manifest {
    pub fn new(subcommand: &'static str, config: &Path) -> Manifest {
        Manifest {
            subcommand,
            config: config.display().to_string(),
            params: Map::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.params.insert(key.to_string(), value.into());
    }

    pub fn output(&mut self, target: &Target) {
        self.outputs.push(target.describe());
    }

    /// The manifest as comment lines for a CSV artifact.
    pub fn comment_header(&self) -> String {
        let mut text = String::new();
        text.push_str(&format!(
            "# bosegas v{} {}\n",
            env!("CARGO_PKG_VERSION"),
            self.subcommand
        ));
        text.push_str(&format!("# config: {}\n", self.config));
        text.push_str(&format!("# params: {}\n", Value::Object(self.params.clone())));
        for output in &self.outputs {
            text.push_str(&format!("# output: {output}\n"));
        }
        text.push_str(&format!(
            "# wall_time_ms: {}\n",
            self.started.elapsed().as_millis()
        ));
        text
    }

    /// The manifest as a JSON value for embedding in a JSON artifact.
    pub fn to_value(&self) -> Value {
        json!({
            "subcommand": self.subcommand,
            "config": self.config,
            "params": Value::Object(self.params.clone()),
            "outputs": self.outputs,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_ms": self.started.elapsed().as_millis() as u64,
        })
    }
}

/// Destination of one artifact: a file or standard output.
pub enum Target {
    Stdout,
    File(PathBuf),
}

impl Target {
    pub fn from_flag(out: Option<&Path>) -> Target {
        match out {
            Some(path) => Target::File(path.to_path_buf()),
            None => Target::Stdout,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Target::Stdout => "stdout".to_string(),
            Target::File(path) => path.display().to_string(),
        }
    }

    /// Sibling path with the given extension, for secondary artifacts.
    /// Stdout targets stay on stdout.
    pub fn sibling(&self, extension: &str) -> Target {
        match self {
            Target::Stdout => Target::Stdout,
            Target::File(path) => Target::File(path.with_extension(extension)),
        }
    }

    pub fn write(&self, text: &str) -> std::io::Result<()> {
        debug_assert!(text.ends_with('\n'));
        match self {
            Target::Stdout => std::io::stdout().lock().write_all(text.as_bytes()),
            Target::File(path) => std::fs::write(path, text),
        }
    }
}

/// One CSV cell for a float: 17 significant digits, C locale.
pub fn cell(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serializes a JSON document with a trailing newline.
pub fn json_text(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON serialization");
    text.push('\n');
    text
}
