//! Output files with a version and config-hash header.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable holding the root directory for relative output paths.
pub const OUTPUT_ROOT_ENV: &str = "POLARON_OUTPUT_ROOT";

/// SHA-256 of the canonical JSON form of the configuration.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let canon = serde_json::to_string(cfg).expect("config serializes");
    Sha256::digest(canon.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub struct Sink {
    pub dir: PathBuf,
    pub hash: String,
    pub command: &'static str,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: PathBuf, hash: String, command: &'static str) -> std::io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            hash,
            command,
            written: Vec::new(),
        })
    }

    fn header(&self) -> String {
        format!(
            "# polaron {} command={} config_sha256={}\n",
            VERSION, self.command, self.hash
        )
    }

    /// CSV with a `#` header line, then a column row, then the records.
    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> std::io::Result<()> {
        let path = self.dir.join(name);
        let mut buf = self.header().into_bytes();
        {
            let mut w = csv::WriterBuilder::new()
                .has_headers(true)
                .from_writer(&mut buf);
            for r in rows {
                w.serialize(r).map_err(std::io::Error::other)?;
            }
            w.flush()?;
        }
        write_file(&path, &buf)?;
        self.written.push(path);
        Ok(())
    }

    /// CSV from explicit columns, for tables whose width depends on the run.
    pub fn csv_columns(
        &mut self,
        name: &str,
        columns: &[String],
        rows: &[Vec<String>],
    ) -> std::io::Result<()> {
        let path = self.dir.join(name);
        let mut buf = self.header().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(columns).map_err(std::io::Error::other)?;
            for r in rows {
                w.write_record(r).map_err(std::io::Error::other)?;
            }
            w.flush()?;
        }
        write_file(&path, &buf)?;
        self.written.push(path);
        Ok(())
    }

    /// JSON object `{ "polaron_version", "command", "config_sha256", "data" }`.
    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Envelope<'a, T> {
            polaron_version: &'a str,
            command: &'a str,
            config_sha256: &'a str,
            data: &'a T,
        }
        let env = Envelope {
            polaron_version: VERSION,
            command: self.command,
            config_sha256: &self.hash,
            data,
        };
        let mut text = serde_json::to_string_pretty(&env).map_err(std::io::Error::other)?;
        text.push('\n');
        let path = self.dir.join(name);
        write_file(&path, text.as_bytes())?;
        self.written.push(path);
        Ok(())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    f.sync_all()
}

/// `flag` if given, else the configured directory; relative paths go under the output root.
pub fn resolve_dir(flag: Option<&Path>, configured: &Path, root: Option<&Path>) -> PathBuf {
    let dir = flag.unwrap_or(configured);
    match root {
        Some(r) if dir.is_relative() => r.join(dir),
        _ => dir.to_path_buf(),
    }
}
