//! Lossy actuation channel with bounded consecutive dropouts and the
//! actuator-side packet buffer.
//!
//! The channel is a pure erasure process: a transmitted packet either arrives
//! in the same step or is lost. Every mode guarantees the protocol
//! assumptions — the first transmission succeeds and no more than `N − 1`
//! packets are lost in a row — so the buffer always holds an input fresh
//! enough to apply.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ControlPacket;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("dropout cap must be at least 1")]
    ZeroCap,
    #[error("trace must mark the first transmission as received")]
    TraceFirstStep,
    #[error("trace contains {got} consecutive dropouts, cap is {cap}")]
    TraceCapViolation { got: usize, cap: usize },
    #[error("trace exhausted at step {0}")]
    TraceExhausted(usize),
    #[error("arrival queried out of order: expected step {expected}, got {got}")]
    OutOfOrder { expected: usize, got: usize },
    #[error("dropout probability must lie in [0, 1), got {0}")]
    BadProbability(f64),
    #[error("buffer age would reach the horizon {0}; dropout cap breached upstream")]
    BufferStarved(usize),
    #[error("incoming packet (origin {incoming}) is older than the buffered one (origin {stored})")]
    StalePacket { incoming: usize, stored: usize },
    #[error("trace file entry {0:?} is not 0 or 1")]
    BadTraceEntry(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dropout behaviour, serializable as part of a simulation config.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DropoutSpec {
    /// After every arrival, the next burst length is drawn uniformly from
    /// `{0, …, N−1}`.
    UniformBurst,
    /// Drop each packet independently with probability `p`, forcing an
    /// arrival whenever the burst would otherwise reach `N`.
    BernoulliCapped { p: f64 },
    /// Fixed arrival sequence (true = received).
    Trace { values: Vec<bool> },
}

enum ProcessState {
    UniformBurst { pending_drops: usize },
    Bernoulli { p: f64, current_burst: usize },
    Trace { values: Vec<bool> },
}

/// Stateful arrival process for one simulation run.
pub struct DropoutProcess {
    cap: usize,
    next_step: usize,
    state: ProcessState,
    rng: ChaCha8Rng,
}

impl DropoutProcess {
    /// `cap` is the horizon N: no run of N or more consecutive dropouts can
    /// occur, matching the buffer length.
    pub fn new(spec: &DropoutSpec, cap: usize, rng: ChaCha8Rng) -> Result<Self, NetworkError> {
        if cap == 0 {
            return Err(NetworkError::ZeroCap);
        }
        let state = match spec {
            DropoutSpec::UniformBurst => ProcessState::UniformBurst { pending_drops: 0 },
            DropoutSpec::BernoulliCapped { p } => {
                if !(0.0..1.0).contains(p) {
                    return Err(NetworkError::BadProbability(*p));
                }
                ProcessState::Bernoulli { p: *p, current_burst: 0 }
            }
            DropoutSpec::Trace { values } => {
                validate_trace(values, cap)?;
                ProcessState::Trace { values: values.clone() }
            }
        };
        Ok(Self { cap, next_step: 0, state, rng })
    }

    /// Whether the packet transmitted at step `k` arrives. Steps must be
    /// queried in order; the k = 0 transmission always succeeds.
    pub fn next_arrival(&mut self, k: usize) -> Result<bool, NetworkError> {
        if k != self.next_step {
            return Err(NetworkError::OutOfOrder { expected: self.next_step, got: k });
        }
        self.next_step += 1;

        let arrived = match &mut self.state {
            ProcessState::UniformBurst { pending_drops } => {
                if k == 0 || *pending_drops == 0 {
                    *pending_drops = self.rng.random_range(0..self.cap);
                    true
                } else {
                    *pending_drops -= 1;
                    false
                }
            }
            ProcessState::Bernoulli { p, current_burst } => {
                let forced = k == 0 || *current_burst + 1 >= self.cap;
                let arrived = forced || self.rng.random::<f64>() >= *p;
                if arrived {
                    *current_burst = 0;
                } else {
                    *current_burst += 1;
                }
                arrived
            }
            ProcessState::Trace { values } => {
                *values.get(k).ok_or(NetworkError::TraceExhausted(k))?
            }
        };
        Ok(arrived)
    }
}

fn validate_trace(values: &[bool], cap: usize) -> Result<(), NetworkError> {
    match values.first() {
        Some(true) => {}
        _ => return Err(NetworkError::TraceFirstStep),
    }
    let mut run = 0usize;
    for &arrived in values {
        if arrived {
            run = 0;
        } else {
            run += 1;
            if run >= cap {
                return Err(NetworkError::TraceCapViolation { got: run, cap });
            }
        }
    }
    Ok(())
}

/// Read a newline-separated 0/1 arrival trace.
pub fn read_trace_file(path: impl AsRef<Path>) -> Result<Vec<bool>, NetworkError> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "0" => values.push(false),
            "1" => values.push(true),
            other => return Err(NetworkError::BadTraceEntry(other.to_string())),
        }
    }
    Ok(values)
}

/// Write an arrival trace in the same newline-separated 0/1 format.
pub fn write_trace_file(path: impl AsRef<Path>, values: &[bool]) -> Result<(), NetworkError> {
    let mut text = String::with_capacity(values.len() * 2);
    for &v in values {
        text.push(if v { '1' } else { '0' });
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Actuator-side buffer holding the most recently received packet. `age`
/// selects which element of the packet is applied.
#[derive(Clone, Debug)]
pub struct ActuatorBuffer {
    packet: ControlPacket,
    age: usize,
}

impl ActuatorBuffer {
    /// Start the buffer from the first received packet (the k = 0 arrival
    /// guaranteed by the channel).
    pub fn new(first_packet: ControlPacket) -> Self {
        Self { packet: first_packet, age: 0 }
    }

    /// Arrival: overwrite the stored packet atomically and reset the age.
    /// Dropout: advance the age; failing if the buffer would run past the
    /// packet horizon (the channel cap makes this unreachable in closed
    /// loop).
    pub fn update(&mut self, incoming: Option<ControlPacket>) -> Result<(), NetworkError> {
        match incoming {
            Some(packet) => {
                if packet.origin_time() < self.packet.origin_time() {
                    return Err(NetworkError::StalePacket {
                        incoming: packet.origin_time(),
                        stored: self.packet.origin_time(),
                    });
                }
                self.packet = packet;
                self.age = 0;
            }
            None => {
                if self.age + 1 >= self.packet.horizon() {
                    return Err(NetworkError::BufferStarved(self.packet.horizon()));
                }
                self.age += 1;
            }
        }
        Ok(())
    }

    /// Element of the stored packet selected by the current age.
    pub fn applied_input(&self) -> f64 {
        self.packet.inputs()[self.age]
    }

    pub fn age(&self) -> usize {
        self.age
    }

    pub fn stored_packet(&self) -> &ControlPacket {
        &self.packet
    }
}
