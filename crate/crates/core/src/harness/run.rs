//! Replaying message streams through ingestion and the monitor.

use std::io::BufRead;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use super::compare::{compare_steps, Report};
use crate::formula::Compiled;
use crate::ingestion::{decode_line, IngestError, Ingestor, Line, Message};
use crate::monitor::{Monitor, MonitorConfig, MonitorError, Stats, Verdict};
use crate::observation::{Observation, Transformation};
use crate::oracle::{verdict_set, VerdictSet};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("line {line}: {source}")]
    Ingest { line: usize, source: IngestError },
    #[error("line {line}: {source}")]
    Monitor { line: usize, source: MonitorError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ingestion and monitoring of one stream.
pub struct Session {
    ingestor: Ingestor,
    monitor: Monitor,
    messages: u64,
}

impl Session {
    pub fn new(f: Compiled, components: Option<Vec<String>>, config: MonitorConfig) -> Self {
        Session { ingestor: Ingestor::new(&f, components), monitor: Monitor::with_config(f, config), messages: 0 }
    }

    pub fn monitor(&self) -> &Monitor {
        &self.monitor
    }

    pub fn ingestor(&self) -> &Ingestor {
        &self.ingestor
    }

    pub fn messages(&self) -> u64 {
        self.messages
    }

    /// Processes one message; returns the transformations it caused and
    /// the verdicts they settled.
    pub fn process(&mut self, msg: &Message) -> Result<(Vec<Transformation>, Vec<Verdict>), RunError> {
        let line = self.messages as usize + 1;
        let steps = self.ingestor.ingest(msg).map_err(|source| RunError::Ingest { line, source })?;
        let verdicts = self.apply(&steps).map_err(|source| RunError::Monitor { line, source })?;
        Ok((steps, verdicts))
    }

    fn apply(&mut self, steps: &[Transformation]) -> Result<Vec<Verdict>, MonitorError> {
        let out = self.monitor.apply_all(steps)?;
        self.monitor.prune();
        self.messages += 1;
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub verdicts: VerdictSet,
    pub stats: Stats,
    pub messages: u64,
    pub wall: Duration,
}

impl RunSummary {
    pub fn events_per_second(&self) -> f64 {
        self.messages as f64 / self.wall.as_secs_f64().max(1e-9)
    }
}

/// Callbacks for [`run_stream`].
pub struct Sinks<'a> {
    pub verdict: &'a mut dyn FnMut(&Verdict),
    pub trace: Option<&'a mut dyn FnMut(&Transformation)>,
}

fn decode_stream(input: impl BufRead) -> impl Iterator<Item = Result<(usize, Line), RunError>> {
    input.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(RunError::Io(e))),
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(decode_line(&l).map(|x| (i + 1, x)).map_err(|e| RunError::Ingest { line: i + 1, source: e.into() })),
    })
}

/// Monitors a JSON Lines stream. A leading configuration line fixes the
/// component set.
pub fn run_stream(f: Compiled, input: impl BufRead, config: MonitorConfig, mut sinks: Sinks<'_>) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let mut lines = decode_stream(input).peekable();
    let components = match lines.peek() {
        Some(Ok((_, Line::Config { components }))) => {
            let c = components.clone();
            lines.next();
            Some(c)
        }
        _ => None,
    };
    let mut session = Session::new(f, components, config);
    for item in lines {
        let (n, line) = item?;
        let Line::Message(msg) = line else {
            return Err(RunError::Ingest { line: n, source: IngestError::Decode(crate::ingestion::DecodeError::UnknownType("config".into())) });
        };
        let steps = session.ingestor.ingest(&msg).map_err(|source| RunError::Ingest { line: n, source })?;
        if let Some(trace) = sinks.trace.as_deref_mut() {
            steps.iter().for_each(trace);
        }
        let verdicts = session.apply(&steps).map_err(|source| RunError::Monitor { line: n, source })?;
        verdicts.iter().for_each(|v| (sinks.verdict)(v));
    }
    Ok(RunSummary {
        verdicts: session.monitor.verdicts().clone(),
        stats: session.monitor.stats(),
        messages: session.messages,
        wall: start.elapsed(),
    })
}

/// Like [`run_stream`], with decoding and ingestion on a second thread
/// feeding the monitor through a bounded queue. Each message's
/// transformations travel as one batch, in order.
pub fn run_stream_pipelined<R: BufRead + Send + 'static>(
    f: Compiled,
    input: R,
    config: MonitorConfig,
    sinks: Sinks<'_>,
) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let (tx, rx) = mpsc::sync_channel::<Result<(usize, Vec<Transformation>), RunError>>(1024);
    let formula = f.clone();
    let producer = thread::spawn(move || {
        let mut lines = decode_stream(input).peekable();
        let components = match lines.peek() {
            Some(Ok((_, Line::Config { components }))) => {
                let c = components.clone();
                lines.next();
                Some(c)
            }
            _ => None,
        };
        let mut ingestor = Ingestor::new(&formula, components);
        for item in lines {
            let batch = item.and_then(|(n, line)| match line {
                Line::Message(msg) => ingestor.ingest(&msg).map(|s| (n, s)).map_err(|source| RunError::Ingest { line: n, source }),
                Line::Config { .. } => Err(RunError::Ingest {
                    line: n,
                    source: IngestError::Decode(crate::ingestion::DecodeError::UnknownType("config".into())),
                }),
            });
            let stop = batch.is_err();
            if tx.send(batch).is_err() || stop {
                break;
            }
        }
    });
    let mut monitor = Monitor::with_config(f, config);
    let mut messages = 0;
    let mut trace = sinks.trace;
    let mut result = Ok(());
    for batch in rx {
        let (n, steps) = match batch {
            Ok(b) => b,
            Err(e) => {
                result = Err(e);
                break;
            }
        };
        if let Some(trace) = trace.as_deref_mut() {
            steps.iter().for_each(trace);
        }
        match monitor.apply_all(&steps) {
            Ok(vs) => vs.iter().for_each(|v| (sinks.verdict)(v)),
            Err(source) => {
                result = Err(RunError::Monitor { line: n, source });
                break;
            }
        }
        monitor.prune();
        messages += 1;
    }
    producer.join().expect("ingestion thread panicked");
    result?;
    Ok(RunSummary { verdicts: monitor.verdicts().clone(), stats: monitor.stats(), messages, wall: start.elapsed() })
}

/// Monitors an in-memory log and returns the final verdicts.
pub fn run_messages(f: &Compiled, log: &[Message], config: MonitorConfig) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let mut session = Session::new(f.clone(), None, config);
    for m in log {
        session.process(m)?;
    }
    Ok(RunSummary {
        verdicts: session.monitor.verdicts().clone(),
        stats: session.monitor.stats(),
        messages: session.messages,
        wall: start.elapsed(),
    })
}

/// The transformations a log produces, in delivery order.
pub fn transformations(f: &Compiled, components: Option<Vec<String>>, log: &[Message]) -> Result<Vec<Transformation>, RunError> {
    let mut ingestor = Ingestor::new(f, components);
    let mut out = Vec::new();
    for (i, m) in log.iter().enumerate() {
        out.extend(ingestor.ingest(m).map_err(|source| RunError::Ingest { line: i + 1, source })?);
    }
    Ok(out)
}

/// The evaluator's verdicts on the observation a whole log produces.
pub fn check_messages(f: &Compiled, components: Option<Vec<String>>, log: &[Message]) -> Result<VerdictSet, RunError> {
    let mut w = Observation::initial();
    for t in transformations(f, components, log)? {
        w.apply_mut(&t).map_err(|e| RunError::Monitor { line: 0, source: e.into() })?;
    }
    Ok(verdict_set(&w, f))
}

/// Replays a log and checks the monitor against the evaluator after every
/// transformation.
pub fn compare_messages(f: &Compiled, components: Option<Vec<String>>, log: &[Message], config: MonitorConfig) -> Result<Report, RunError> {
    let steps = transformations(f, components, log)?;
    Ok(compare_steps(f, &steps, config))
}

/// Reads a JSON Lines stream into its optional component list and messages.
pub fn read_log(input: impl BufRead) -> Result<(Option<Vec<String>>, Vec<Message>), RunError> {
    let mut components = None;
    let mut out = Vec::new();
    for item in decode_stream(input) {
        match item? {
            (_, Line::Config { components: c }) if out.is_empty() && components.is_none() => components = Some(c),
            (n, Line::Config { .. }) => {
                return Err(RunError::Ingest {
                    line: n,
                    source: IngestError::Decode(crate::ingestion::DecodeError::UnknownType("config".into())),
                })
            }
            (_, Line::Message(m)) => out.push(m),
        }
    }
    Ok((components, out))
}
