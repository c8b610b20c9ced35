use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde_json::{json, Value};

pub const EVENTS_FILE: &str = "events.jsonl";

/// Append-only JSON lines, one object per event.
pub struct EventLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl EventLog {
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(EVENTS_FILE);
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(EventLog { path, file: Mutex::new(file) })
    }

    /// Writes `{"event": name, ..fields}`. Failures are logged, not raised.
    pub fn emit(&self, name: &str, fields: Value) {
        let mut obj = json!({ "event": name });
        if let (Some(dst), Value::Object(src)) = (obj.as_object_mut(), fields) {
            dst.extend(src);
        }
        let mut line = obj.to_string();
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = f.write_all(line.as_bytes()) {
            tracing::warn!("cannot write {}: {e}", self.path.display());
        }
    }
}
