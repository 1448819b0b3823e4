//! Write-through session logs: one JSONL file per session holding the
//! scenario on the first line and one event per following line.

use serde::{Deserialize, Serialize};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use xmcts::scenario::Scenario;
use xmcts::session::{Session, SessionEvent};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

#[derive(Serialize, Deserialize)]
struct Header {
    scenario: Scenario,
}

#[derive(Clone, Debug)]
pub struct Store {
    dir: PathBuf,
}

impl Store {
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        fs::create_dir_all(dir).map_err(|source| StoreError::Io { path: dir.into(), source })?;
        Ok(Self { dir: dir.into() })
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    pub fn create(&self, id: &str, scenario: &Scenario) -> Result<(), StoreError> {
        let path = self.path(id);
        let mut file = File::create(&path).map_err(|source| StoreError::Io { path: path.clone(), source })?;
        let line = serde_json::to_string(&Header { scenario: scenario.clone() }).expect("scenario serializes");
        writeln!(file, "{line}").map_err(|source| StoreError::Io { path, source })
    }

    pub fn append(&self, id: &str, events: &[SessionEvent]) -> Result<(), StoreError> {
        if events.is_empty() {
            return Ok(());
        }
        let path = self.path(id);
        let mut file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|source| StoreError::Io { path: path.clone(), source })?;
        let mut text = String::new();
        for e in events {
            text.push_str(&serde_json::to_string(e).expect("events serialize"));
            text.push('\n');
        }
        file.write_all(text.as_bytes()).map_err(|source| StoreError::Io { path, source })
    }

    /// Replays every stored session, sorted by id.
    pub fn load_all(&self) -> Result<Vec<(String, Session)>, StoreError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| StoreError::Io { path, source }
        };
        let mut out = Vec::new();
        let mut entries: Vec<PathBuf> = fs::read_dir(&self.dir)
            .map_err(io(&self.dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        entries.sort();
        for path in entries {
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let corrupt = |line: usize, message: String| StoreError::Corrupt { path: path.clone(), line, message };
            let file = File::open(&path).map_err(io(&path))?;
            let mut lines = BufReader::new(file).lines();
            let header = lines.next().ok_or_else(|| corrupt(1, "empty file".into()))?.map_err(io(&path))?;
            let header: Header = serde_json::from_str(&header).map_err(|e| corrupt(1, e.to_string()))?;
            let mut events = Vec::new();
            for (n, line) in lines.enumerate() {
                let line = line.map_err(io(&path))?;
                if line.trim().is_empty() {
                    continue;
                }
                events.push(serde_json::from_str(&line).map_err(|e| corrupt(n + 2, e.to_string()))?);
            }
            let session = Session::replay(header.scenario, &events).map_err(|e| corrupt(0, e.to_string()))?;
            out.push((id, session));
        }
        Ok(out)
    }
}
