//! U(1)-conserving quantum-automaton gates and circuit schedules.
//!
//! The k-site gate flips the k-1 outer sites when the middle site is occupied
//! and the outer sites are half filled; it acts as the identity otherwise.
//! Gates permute number-basis states, so a circuit realization is a
//! permutation on every charge sector and trajectories can be sampled
//! classically.

use crate::error::{Error, Result};
use crate::lattice::BitState;
use crate::stream::{Role, RngStream, StreamKey};
use rand::Rng;

/// Gate width; odd so a unique middle site exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GateRule {
    k: usize,
}

impl GateRule {
    pub fn new(k: usize) -> Result<Self> {
        if k < 3 || k % 2 == 0 {
            return Err(Error::Config(format!("gate width k must be odd and >= 3, got {k}")));
        }
        Ok(GateRule { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Width of the deterministic spreading cone per period on a chain.
    pub fn cone_per_period(&self) -> usize {
        (self.k - 1) * self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Geometry {
    /// Gates act on disjoint random k-tuples; floor(N/k) per step.
    AllToAll { n_sites: usize },
    /// Periodic chain; one step is k brickwork layers of contiguous windows.
    Chain { l_sites: usize },
}

impl Geometry {
    pub fn n_sites(&self) -> usize {
        match *self {
            Geometry::AllToAll { n_sites } => n_sites,
            Geometry::Chain { l_sites } => l_sites,
        }
    }
}

/// One gate slot in a schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateEvent {
    pub step: usize,
    pub sites: Vec<usize>,
    pub active: bool,
}

/// A circuit fully determined by (geometry, k, f, seed); the schedule is
/// re-derived lazily, step by step, so nothing needs to be stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitRealization {
    pub geometry: Geometry,
    pub rule: GateRule,
    pub f: f64,
    pub seed: u64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

/// Flat per-step schedule buffer, reused across steps to avoid allocation.
#[derive(Debug, Default, Clone)]
pub struct StepSchedule {
    pub k: usize,
    /// Concatenated k-tuples, `n_events * k` entries.
    pub sites: Vec<u32>,
    pub active: Vec<bool>,
    perm: Vec<u32>,
}

impl StepSchedule {
    pub fn n_events(&self) -> usize {
        self.active.len()
    }

    pub fn event_sites(&self, ev: usize) -> &[u32] {
        &self.sites[ev * self.k..(ev + 1) * self.k]
    }
}

pub fn build_schedule(
    geometry: Geometry,
    rule: GateRule,
    f: f64,
    n_steps: usize,
    stream: &RngStream,
) -> Result<CircuitRealization> {
    let k = rule.k();
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::Config(format!("gate probability f must be in [0,1], got {f}")));
    }
    match geometry {
        Geometry::AllToAll { n_sites } if n_sites < k => {
            return Err(Error::GeometryTooSmall(format!("all-to-all needs N >= k: N={n_sites}, k={k}")));
        }
        Geometry::Chain { l_sites } if l_sites < k => {
            return Err(Error::GeometryTooSmall(format!("chain needs L >= k: L={l_sites}, k={k}")));
        }
        Geometry::Chain { l_sites } if l_sites % k != 0 => {
            // Brickwork layers tile the periodic chain only when k | L.
            return Err(Error::GeometryTooSmall(format!(
                "periodic chain length must be a multiple of k: L={l_sites}, k={k}"
            )));
        }
        _ => {}
    }
    Ok(CircuitRealization { geometry, rule, f, seed: stream_seed(stream), n_steps })
}

// The circuit remembers a single u64 derived from the stream; per-step
// randomness is re-keyed from it.
fn stream_seed(stream: &RngStream) -> u64 {
    stream.rng().gen()
}

impl CircuitRealization {
    /// Fill `buf` with the gate events of one step.
    pub fn fill_step(&self, step: usize, buf: &mut StepSchedule) {
        let k = self.rule.k();
        buf.k = k;
        buf.sites.clear();
        buf.active.clear();
        let stream = RngStream::new(self.seed, StreamKey::new(Role::Schedule, step as u64, 0, 0));
        let mut rng = stream.rng();
        match self.geometry {
            Geometry::AllToAll { n_sites } => {
                let n_events = n_sites / k;
                // Reset to the identity so the step schedule depends only on
                // (seed, step), not on which steps were filled before.
                buf.perm.resize(n_sites, 0);
                for (i, p) in buf.perm.iter_mut().enumerate() {
                    *p = i as u32;
                }
                // Partial Fisher-Yates: only the first n_events*k entries are
                // consumed.
                let used = n_events * k;
                for i in 0..used {
                    let j = rng.gen_range(i..n_sites);
                    buf.perm.swap(i, j);
                }
                buf.sites.extend_from_slice(&buf.perm[..used]);
                for _ in 0..n_events {
                    buf.active.push(rng.gen_bool(self.f));
                }
            }
            Geometry::Chain { l_sites } => {
                // One step = k layers; layer l starts windows at offsets
                // congruent to l, stride k, wrapping periodically.
                for layer in 0..k {
                    for m in 0..l_sites / k {
                        let start = layer + m * k;
                        for d in 0..k {
                            buf.sites.push(((start + d) % l_sites) as u32);
                        }
                        buf.active.push(rng.gen_bool(self.f));
                    }
                }
            }
        }
    }

    /// Materialized events of one step, for inspection and tests.
    pub fn step_events(&self, step: usize) -> Vec<GateEvent> {
        let mut buf = StepSchedule::default();
        self.fill_step(step, &mut buf);
        (0..buf.n_events())
            .map(|ev| GateEvent {
                step,
                sites: buf.event_sites(ev).iter().map(|&s| s as usize).collect(),
                active: buf.active[ev],
            })
            .collect()
    }
}

/// Gate rule on an explicit site tuple, with validation. The middle of the
/// tuple is position (k+1)/2 in 1-based order.
pub fn apply_gate(state: &BitState, sites: &[usize]) -> Result<BitState> {
    let k = sites.len();
    if k < 3 || k % 2 == 0 {
        return Err(Error::BadGateSites(format!("tuple length {k} is not an odd k >= 3")));
    }
    for (a, &s) in sites.iter().enumerate() {
        if s >= state.n_sites() {
            return Err(Error::SiteOutOfRange { index: s, n_sites: state.n_sites() });
        }
        if sites[..a].contains(&s) {
            return Err(Error::BadGateSites(format!("duplicate site {s}")));
        }
    }
    let mut out = state.clone();
    apply_gate_unchecked(&mut out, sites);
    Ok(out)
}

#[inline]
fn apply_gate_unchecked(state: &mut BitState, sites: &[usize]) {
    let k = sites.len();
    let mid = sites[k / 2];
    if !state.get(mid) {
        return;
    }
    let mut ones = 0usize;
    for (pos, &s) in sites.iter().enumerate() {
        if pos != k / 2 && state.get(s) {
            ones += 1;
        }
    }
    if ones * 2 == k - 1 {
        for (pos, &s) in sites.iter().enumerate() {
            if pos != k / 2 {
                state.toggle(s);
            }
        }
    }
}

#[inline]
fn apply_gate_u32(state: &mut BitState, sites: &[u32]) {
    let k = sites.len();
    let mid = sites[k / 2] as usize;
    if !state.get(mid) {
        return;
    }
    let mut ones = 0usize;
    for (pos, &s) in sites.iter().enumerate() {
        if pos != k / 2 && state.get(s as usize) {
            ones += 1;
        }
    }
    if ones * 2 == k - 1 {
        for (pos, &s) in sites.iter().enumerate() {
            if pos != k / 2 {
                state.toggle(s as usize);
            }
        }
    }
}

fn apply_step(state: &mut BitState, buf: &StepSchedule, direction: Direction) {
    let k = buf.k;
    match direction {
        Direction::Forward => {
            for ev in 0..buf.n_events() {
                if buf.active[ev] {
                    apply_gate_u32(state, &buf.sites[ev * k..(ev + 1) * k]);
                }
            }
        }
        Direction::Reverse => {
            for ev in (0..buf.n_events()).rev() {
                if buf.active[ev] {
                    apply_gate_u32(state, &buf.sites[ev * k..(ev + 1) * k]);
                }
            }
        }
    }
}

/// Evolve a state `t` steps. Reverse direction undoes forward evolution:
/// each gate is an involution, so steps are replayed in reverse order.
pub fn evolve(
    state: &BitState,
    circuit: &CircuitRealization,
    t: usize,
    direction: Direction,
) -> Result<BitState> {
    if t > circuit.n_steps {
        return Err(Error::TimeOutOfRange { t, n_steps: circuit.n_steps });
    }
    let mut out = state.clone();
    let mut buf = StepSchedule::default();
    match direction {
        Direction::Forward => {
            for step in 0..t {
                circuit.fill_step(step, &mut buf);
                apply_step(&mut out, &buf, Direction::Forward);
            }
        }
        Direction::Reverse => {
            for step in (0..t).rev() {
                circuit.fill_step(step, &mut buf);
                apply_step(&mut out, &buf, Direction::Reverse);
            }
        }
    }
    Ok(out)
}

/// Evolve two states under the same realization, invoking `record` after
/// every step (and once at t = 0). The shared schedule is generated once per
/// step.
pub fn evolve_pair_recorded(
    a: &BitState,
    b: &BitState,
    circuit: &CircuitRealization,
    t_max: usize,
    mut record: impl FnMut(usize, &BitState, &BitState),
) -> Result<()> {
    if t_max > circuit.n_steps {
        return Err(Error::TimeOutOfRange { t: t_max, n_steps: circuit.n_steps });
    }
    let mut sa = a.clone();
    let mut sb = b.clone();
    let mut buf = StepSchedule::default();
    record(0, &sa, &sb);
    for step in 0..t_max {
        circuit.fill_step(step, &mut buf);
        apply_step(&mut sa, &buf, Direction::Forward);
        apply_step(&mut sb, &buf, Direction::Forward);
        record(step + 1, &sa, &sb);
    }
    Ok(())
}

/// Single-state variant of [`evolve_pair_recorded`].
pub fn evolve_recorded(
    a: &BitState,
    circuit: &CircuitRealization,
    t_max: usize,
    mut record: impl FnMut(usize, &BitState),
) -> Result<()> {
    if t_max > circuit.n_steps {
        return Err(Error::TimeOutOfRange { t: t_max, n_steps: circuit.n_steps });
    }
    let mut sa = a.clone();
    let mut buf = StepSchedule::default();
    record(0, &sa);
    for step in 0..t_max {
        circuit.fill_step(step, &mut buf);
        apply_step(&mut sa, &buf, Direction::Forward);
        record(step + 1, &sa);
    }
    Ok(())
}
