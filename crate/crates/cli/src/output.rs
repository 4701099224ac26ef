//! Artifact writing: a provenance header line and atomic replacement.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::config::RunConfig;
use crate::CliError;

/// Text of one output artifact, built line by line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifact {
    text: String,
}

impl Artifact {
    /// Starts with `# fkent <version> command=<cmd> seed=<seed> config=<json>`.
    /// The output path is left out, so identical runs written to different
    /// places are byte-identical.
    pub fn new(command: &str, config: &RunConfig) -> Artifact {
        let recorded = RunConfig { out: None, ..config.clone() };
        let json = serde_json::to_string(&recorded).expect("configs serialize");
        let seed = config.seed.unwrap_or(0);
        Artifact {
            text: format!("# fkent {} command={command} seed={seed} config={json}\n", env!("CARGO_PKG_VERSION")),
        }
    }

    pub fn line(&mut self, line: impl AsRef<str>) {
        self.text.push_str(line.as_ref());
        self.text.push('\n');
    }

    /// A CSV row; fields are joined with commas as given.
    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Writes to `out` atomically, or to stdout when no path is given.
    pub fn emit(&self, out: Option<&Path>) -> Result<(), CliError> {
        match out {
            Some(path) => write_atomic(path, self.text.as_bytes()),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(self.text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))
            }
        }
    }
}

/// Writes a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Shortest round-trip decimal form; identical inputs give identical bytes.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}
