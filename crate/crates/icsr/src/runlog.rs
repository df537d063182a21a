//! JSONL log of every model exchange.
//!
//! Lines are flushed before the engine sees the response, so an interrupted
//! run still leaves a full record. The log grows under a `.partial` name and
//! is renamed into place when the run ends.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use icsr_core::engine::{CallHeader, CallRecord, RunObserver};
use icsr_core::llm::{BackendError, CompletionRequest, CompletionResponse};
use serde_json::{json, Value};

use crate::Error;

pub struct JsonlLog {
    writer: BufWriter<File>,
    partial: PathBuf,
    path: PathBuf,
}

impl JsonlLog {
    pub fn create(path: &Path) -> Result<Self, Error> {
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut partial = path.as_os_str().to_owned();
        partial.push(".partial");
        let partial = PathBuf::from(partial);
        let file = File::create(&partial).map_err(|e| Error::io(&partial, e))?;
        Ok(JsonlLog { writer: BufWriter::new(file), partial, path: path.to_path_buf() })
    }

    pub fn write(&mut self, event: &Value) -> Result<(), String> {
        serde_json::to_writer(&mut self.writer, event).map_err(|e| e.to_string())?;
        self.writer.write_all(b"\n").map_err(|e| e.to_string())?;
        self.writer.flush().map_err(|e| e.to_string())?;
        self.writer.get_ref().sync_data().map_err(|e| e.to_string())
    }

    /// Moves the finished log to its final name.
    pub fn finish(self) -> Result<(), Error> {
        let JsonlLog { writer, partial, path } = self;
        writer.into_inner().map_err(|e| Error::io(&partial, e.error()))?;
        fs::rename(&partial, &path).map_err(|e| Error::io(&path, e))
    }
}

impl RunObserver for JsonlLog {
    fn request(&mut self, call: &CallHeader, request: &CompletionRequest) -> Result<(), String> {
        self.write(&json!({
            "event": "request",
            "phase": call.phase,
            "call": call.call,
            "temperature": call.temperature,
            "model": request.model,
            "sampling": request.sampling,
            "messages": request.messages,
        }))
    }

    fn response(
        &mut self,
        call: &CallHeader,
        response: &Result<CompletionResponse, BackendError>,
    ) -> Result<(), String> {
        let body = match response {
            Ok(r) => json!({"text": r.text, "usage": r.usage, "latency_ms": r.latency_ms}),
            Err(e) => json!({"error": e.to_string()}),
        };
        self.write(&json!({"event": "response", "phase": call.phase, "call": call.call, "response": body}))
    }

    fn call_finished(&mut self, record: &CallRecord) -> Result<(), String> {
        self.write(&json!({
            "event": "call",
            "phase": record.header.phase,
            "call": record.header.call,
            "proposals": record.proposals,
            "best_error": record.best_error,
        }))
    }
}
