//! Driver wire protocol: UTF-8, newline-delimited, space-separated tokens
//! over the child's standard streams.
//!
//! harness -> driver: `RUN <unit-name> <config-label>`
//! driver -> harness: `READY` | `STEP <name> START <t_ms>` |
//! `STEP <name> END <t_ms>` | `NET <bytes_in> <bytes_out>` | `DONE <code>` |
//! `ERR <message...>`
//!
//! A conforming per-run stream is: `READY`, then balanced
//! `STEP START`/`STEP END` pairs with optional `NET` lines in between, then
//! exactly one `DONE` or `ERR`. `ERR` may also arrive while a step is open
//! (the driver aborting mid-step); `DONE` may not.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("protocol error on line `{line}`: {reason}")]
    Malformed { line: String, reason: String },
    #[error("protocol grammar violation at `{line}`: {reason}")]
    Grammar { line: String, reason: String },
    #[error("event stream ended without DONE or ERR")]
    Unterminated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DriverEvent {
    Ready,
    StepStart { name: String, t_ms: u64 },
    StepEnd { name: String, t_ms: u64 },
    Net { bytes_in: u64, bytes_out: u64 },
    Done { code: i32 },
    Err { message: String },
}

/// Parse one driver line into an event. Token shape only; ordering is the
/// state machine's job.
pub fn parse_event_line(line: &str) -> Result<DriverEvent, ProtocolError> {
    let malformed = |reason: &str| ProtocolError::Malformed {
        line: line.to_string(),
        reason: reason.to_string(),
    };
    let trimmed = line.trim_end_matches(['\r', '\n']);
    let mut tokens = trimmed.split(' ').filter(|t| !t.is_empty());
    let tag = tokens.next().ok_or_else(|| malformed("empty line"))?;
    match tag {
        "READY" => {
            if tokens.next().is_some() {
                return Err(malformed("READY takes no arguments"));
            }
            Ok(DriverEvent::Ready)
        }
        "STEP" => {
            let name = tokens.next().ok_or_else(|| malformed("missing step name"))?;
            let which = tokens
                .next()
                .ok_or_else(|| malformed("missing START/END marker"))?;
            let t_ms: u64 = tokens
                .next()
                .ok_or_else(|| malformed("missing t_ms"))?
                .parse()
                .map_err(|_| malformed("t_ms is not an unsigned integer"))?;
            if tokens.next().is_some() {
                return Err(malformed("trailing tokens after STEP"));
            }
            match which {
                "START" => Ok(DriverEvent::StepStart {
                    name: name.to_string(),
                    t_ms,
                }),
                "END" => Ok(DriverEvent::StepEnd {
                    name: name.to_string(),
                    t_ms,
                }),
                _ => Err(malformed("expected START or END")),
            }
        }
        "NET" => {
            let bytes_in: u64 = tokens
                .next()
                .ok_or_else(|| malformed("missing bytes_in"))?
                .parse()
                .map_err(|_| malformed("bytes_in is not an unsigned integer"))?;
            let bytes_out: u64 = tokens
                .next()
                .ok_or_else(|| malformed("missing bytes_out"))?
                .parse()
                .map_err(|_| malformed("bytes_out is not an unsigned integer"))?;
            if tokens.next().is_some() {
                return Err(malformed("trailing tokens after NET"));
            }
            Ok(DriverEvent::Net {
                bytes_in,
                bytes_out,
            })
        }
        "DONE" => {
            let code: i32 = tokens
                .next()
                .ok_or_else(|| malformed("missing exit code"))?
                .parse()
                .map_err(|_| malformed("exit code is not an integer"))?;
            if tokens.next().is_some() {
                return Err(malformed("trailing tokens after DONE"));
            }
            Ok(DriverEvent::Done { code })
        }
        "ERR" => {
            let message: Vec<&str> = tokens.collect();
            if message.is_empty() {
                return Err(malformed("ERR requires a message"));
            }
            Ok(DriverEvent::Err {
                message: message.join(" "),
            })
        }
        _ => Err(malformed("unknown event tag")),
    }
}

/// Incremental grammar check over a per-run event stream. Feed events in
/// order with [`accept`](Self::accept); call [`finish`](Self::finish) once
/// the stream ends.
#[derive(Debug, Default)]
pub struct StreamValidator {
    seen_ready: bool,
    open_step: Option<String>,
    terminated: bool,
    last_start_t: Option<u64>,
}

impl StreamValidator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn accept(&mut self, event: &DriverEvent, line: &str) -> Result<(), ProtocolError> {
        let grammar = |reason: &str| ProtocolError::Grammar {
            line: line.to_string(),
            reason: reason.to_string(),
        };
        if self.terminated {
            return Err(grammar("event after DONE/ERR"));
        }
        match event {
            DriverEvent::Ready => {
                if self.seen_ready {
                    return Err(grammar("duplicate READY"));
                }
                self.seen_ready = true;
            }
            DriverEvent::StepStart { name, t_ms } => {
                if !self.seen_ready {
                    return Err(grammar("STEP before READY"));
                }
                if let Some(open) = &self.open_step {
                    return Err(grammar(&format!("STEP START while `{open}` is open")));
                }
                if let Some(prev) = self.last_start_t {
                    if *t_ms < prev {
                        return Err(grammar("step timestamps went backwards"));
                    }
                }
                self.last_start_t = Some(*t_ms);
                self.open_step = Some(name.clone());
            }
            DriverEvent::StepEnd { name, .. } => {
                if !self.seen_ready {
                    return Err(grammar("STEP before READY"));
                }
                match &self.open_step {
                    Some(open) if open == name => self.open_step = None,
                    Some(open) => {
                        return Err(grammar(&format!(
                            "STEP END `{name}` does not match open step `{open}`"
                        )))
                    }
                    None => return Err(grammar("STEP END without STEP START")),
                }
            }
            DriverEvent::Net { .. } => {
                if !self.seen_ready {
                    return Err(grammar("NET before READY"));
                }
            }
            DriverEvent::Done { .. } => {
                if !self.seen_ready {
                    return Err(grammar("DONE before READY"));
                }
                if let Some(open) = &self.open_step {
                    return Err(grammar(&format!("DONE while step `{open}` is open")));
                }
                self.terminated = true;
            }
            DriverEvent::Err { .. } => {
                if !self.seen_ready {
                    return Err(grammar("ERR before READY"));
                }
                // an ERR may abort mid-step
                self.terminated = true;
            }
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<(), ProtocolError> {
        if !self.terminated {
            return Err(ProtocolError::Unterminated);
        }
        Ok(())
    }
}

/// Parse and validate a whole stream at once. Used by tests and by replay
/// tooling; the live supervisor validates incrementally.
pub fn validate_stream(lines: &[&str]) -> Result<Vec<DriverEvent>, ProtocolError> {
    let mut validator = StreamValidator::new();
    let mut events = Vec::with_capacity(lines.len());
    for line in lines {
        let event = parse_event_line(line)?;
        validator.accept(&event, line)?;
        events.push(event);
    }
    validator.finish()?;
    Ok(events)
}
