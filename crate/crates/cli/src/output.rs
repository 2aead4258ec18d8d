use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::config::JobConfig;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Common header of every JSON report.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub config: &'a JobConfig,
    #[serde(flatten)]
    pub body: T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: &'a str, config: &'a JobConfig, body: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            config,
            body,
        }
    }

    pub fn to_json(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::io("serializing report", e.into()))?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes `path` through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic<F>(path: &Path, fill: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> CliResult<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let tmp = NamedTempFile::new_in(dir)
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush()
            .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    }
    tmp.persist(path)
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e.error))?;
    Ok(())
}

pub fn write_string(path: &Path, contents: &str) -> CliResult<()> {
    write_atomic(path, |w| {
        w.write_all(contents.as_bytes())
            .map_err(|e| CliError::io(format!("writing {}", path.display()), e))
    })
}
