//! Stream mode: event lines in, command lines out, one decision tick per
//! event.

use std::io::{self, BufRead, Read, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use hdrhistogram::Histogram;
use serde::Serialize;

use crate::config::EngineConfig;
use crate::engine::Engine;
use crate::protocol::{emit_command, EventReader};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Percentiles {
    pub p50: f64,
    pub p99: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunSummary {
    pub events: u64,
    pub commands: u64,
    pub errors: u64,
    /// Microseconds.
    pub parse_us: Percentiles,
    pub decide_us: Percentiles,
    pub emit_us: Percentiles,
}

impl RunSummary {
    /// The `{"summary":{...}}` line written after the command stream.
    pub fn to_line(&self) -> String {
        #[derive(Serialize)]
        struct Wrapped<'a> {
            summary: &'a RunSummary,
        }
        serde_json::to_string(&Wrapped { summary: self }).expect("summary serialization is infallible")
    }
}

/// Fixed-size latency recorder; memory does not grow with event count.
struct StageTimer(Histogram<u64>);

impl StageTimer {
    fn new() -> Self {
        // 1 ns .. 60 s at 3 significant figures
        Self(Histogram::new_with_bounds(1, 60_000_000_000, 3).expect("valid histogram bounds"))
    }

    fn record(&mut self, since: Instant) {
        let ns = since.elapsed().as_nanos().clamp(1, 60_000_000_000) as u64;
        self.0.saturating_record(ns);
    }

    fn percentiles(&self) -> Percentiles {
        if self.0.is_empty() {
            return Percentiles::default();
        }
        Percentiles {
            p50: self.0.value_at_quantile(0.5) as f64 / 1000.0,
            p99: self.0.value_at_quantile(0.99) as f64 / 1000.0,
        }
    }
}

/// Consumes events until EOF, writing command lines to `out` and
/// diagnostics to `diag`. Bad lines are counted and skipped.
pub fn run_stream<R, W, E>(input: R, out: &mut W, diag: &mut E, cfg: &EngineConfig) -> io::Result<RunSummary>
where
    R: BufRead,
    W: Write,
    E: Write,
{
    let mut engine = Engine::new(cfg.clone());
    let mut summary = RunSummary::default();
    let (mut parse, mut decide, mut emit) = (StageTimer::new(), StageTimer::new(), StageTimer::new());
    let mut reader = EventReader::new(input);
    let mut line = String::new();

    loop {
        let started = Instant::now();
        let Some(item) = reader.next() else { break };
        let obs = match item? {
            Ok(obs) => obs,
            Err(e) => {
                summary.errors += 1;
                writeln!(diag, "{e}")?;
                continue;
            }
        };
        parse.record(started);

        let started = Instant::now();
        if let Err(e) = engine.observe(&obs) {
            summary.errors += 1;
            writeln!(diag, "line {}: {e}", reader.line())?;
            continue;
        }
        let cmds = engine.decide(obs.timestamp);
        decide.record(started);
        summary.events += 1;

        let started = Instant::now();
        line.clear();
        for cmd in &cmds {
            line.push_str(&emit_command(cmd));
            line.push('\n');
        }
        // whole batch in one write so lines never interleave
        out.write_all(line.as_bytes())?;
        out.flush()?;
        emit.record(started);
        summary.commands += cmds.len() as u64;
    }

    summary.parse_us = parse.percentiles();
    summary.decide_us = decide.percentiles();
    summary.emit_us = emit.percentiles();
    Ok(summary)
}

/// Input read line by line on a background thread, so the consumer can stop
/// at a line boundary when `stop` is raised even while the source blocks.
/// Reports EOF once the source ends or `stop` is set.
pub struct Interruptible {
    rx: Receiver<io::Result<Vec<u8>>>,
    stop: Arc<AtomicBool>,
    chunk: Vec<u8>,
    pos: usize,
}

impl Interruptible {
    pub fn spawn<R: BufRead + Send + 'static>(mut inner: R, stop: Arc<AtomicBool>) -> Self {
        // bounded so a fast producer cannot outgrow a slow consumer
        let (tx, rx) = mpsc::sync_channel(1024);
        thread::spawn(move || loop {
            let mut line = Vec::new();
            match inner.read_until(b'\n', &mut line) {
                Ok(0) => break,
                Ok(_) => {
                    if tx.send(Ok(line)).is_err() {
                        break;
                    }
                }
                Err(e) => {
                    let _ = tx.send(Err(e));
                    break;
                }
            }
        });
        Self { rx, stop, chunk: Vec::new(), pos: 0 }
    }
}

impl Read for Interruptible {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        while self.pos == self.chunk.len() {
            if self.stop.load(Ordering::Relaxed) {
                return Ok(0);
            }
            match self.rx.recv_timeout(Duration::from_millis(50)) {
                Ok(chunk) => {
                    self.chunk = chunk?;
                    self.pos = 0;
                }
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => return Ok(0),
            }
        }
        let n = buf.len().min(self.chunk.len() - self.pos);
        buf[..n].copy_from_slice(&self.chunk[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interruptible_passes_lines_through() {
        let stop = Arc::new(AtomicBool::new(false));
        let mut text = String::new();
        io::BufReader::new(Interruptible::spawn(&b"a\nbc\nd"[..], stop)).read_to_string(&mut text).unwrap();
        assert_eq!(text, "a\nbc\nd");
    }

    #[test]
    fn interruptible_stops_while_source_blocks() {
        struct Blocked(mpsc::Receiver<()>);
        impl Read for Blocked {
            fn read(&mut self, _: &mut [u8]) -> io::Result<usize> {
                let _ = self.0.recv();
                Ok(0)
            }
        }
        let (_keep_open, rx) = mpsc::channel();
        let stop = Arc::new(AtomicBool::new(false));
        let mut reader = Interruptible::spawn(io::BufReader::new(Blocked(rx)), stop.clone());
        stop.store(true, Ordering::Relaxed);
        let mut buf = [0u8; 8];
        assert_eq!(reader.read(&mut buf).unwrap(), 0);
    }

    #[test]
    fn empty_input() {
        let mut out = Vec::new();
        let mut diag = Vec::new();
        let summary = run_stream(&b""[..], &mut out, &mut diag, &EngineConfig::default()).unwrap();
        assert_eq!((summary.events, summary.commands, summary.errors), (0, 0, 0));
        assert!(out.is_empty());
        assert!(summary.to_line().starts_with(r#"{"summary":{"events":0,"#));
    }

    #[test]
    fn regressions_are_counted() {
        let line = |t: f64| {
            format!(
                r#"{{"t":{t},"track_id":1,"bbox":[0.5,0.5,0.1,0.1],"yaw":0,"pitch":0,"roll":0,"emotions":{{"neutral":1,"happy":0,"disgust":0,"fear":0,"surprise":0,"anger":0,"sadness":0}},"valence":0,"arousal":0}}"#
            )
        };
        let input = format!("{}\n{}\n{}\n", line(1.0), line(0.5), line(1.1));
        let (mut out, mut diag) = (Vec::new(), Vec::new());
        let summary = run_stream(input.as_bytes(), &mut out, &mut diag, &EngineConfig::default()).unwrap();
        assert_eq!(summary.events, 2);
        assert_eq!(summary.errors, 1);
        assert!(String::from_utf8(diag).unwrap().contains("line 2"));
    }
}
