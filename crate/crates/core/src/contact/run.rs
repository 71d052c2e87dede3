use std::io::Write;
use std::ops::ControlFlow;

use serde::Serialize;

use super::graphical::{Clock, GraphicalConstruction, RingCursor};
use super::schedule::Tournament;
use super::ContactError;
use crate::graph::UndirectedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum EventKind {
    Infect { source: u32 },
    Recover,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub vertex: u32,
    pub kind: EventKind,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    /// Time at which the infected set became empty.
    pub extinction_time: Option<f64>,
    /// True if the horizon was reached with infected vertices left.
    pub censored: bool,
    /// True if the observer stopped the run.
    pub stopped: bool,
    /// Time of the last processed event, or the horizon when censored.
    pub end_time: f64,
    pub final_infected: usize,
}

impl RunOutcome {
    /// Extinction time, or the horizon for censored runs.
    pub fn tau_or_horizon(&self) -> f64 {
        self.extinction_time.unwrap_or(self.end_time)
    }
}

/// Receives every state change; `infected` is the state after the event.
pub trait Observer {
    fn on_event(&mut self, time: f64, vertex: u32, kind: EventKind, infected: &[bool])
        -> ControlFlow<()>;
}

impl Observer for () {
    #[inline]
    fn on_event(&mut self, _: f64, _: u32, _: EventKind, _: &[bool]) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }
}

/// Reusable buffers for repeated runs on graphs of similar size.
#[derive(Debug, Default)]
pub struct Simulator {
    infected: Vec<bool>,
    /// Infected neighbours of each vertex.
    pressure: Vec<u32>,
    cursors: Vec<RingCursor>,
    /// Run in which each cursor was last positioned.
    cursor_epochs: Vec<u64>,
    /// Next ring of every clock that can change the state.
    pending: Tournament,
    epoch: u64,
}

impl Simulator {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, n: usize) {
        if self.infected.len() != n {
            self.infected = vec![false; n];
            self.pressure = vec![0; n];
            self.cursors.resize_with(2 * n, RingCursor::default);
            self.cursor_epochs = vec![0; 2 * n];
        } else {
            self.infected.fill(false);
            self.pressure.fill(0);
        }
        self.pending.reset(2 * n);
        self.epoch += 1;
    }

    /// First ring of `clock` strictly after `t`.
    #[inline]
    fn seek(&mut self, gc: &GraphicalConstruction<'_>, clock: Clock, t: f64) -> f64 {
        let id = clock.id() as usize;
        let valid = self.cursor_epochs[id] == self.epoch;
        self.cursor_epochs[id] = self.epoch;
        let c = &mut self.cursors[id];
        gc.seek(clock, c, valid, t);
        c.ring.time
    }

    #[inline]
    fn advance(&mut self, gc: &GraphicalConstruction<'_>, clock: Clock) -> f64 {
        let c = &mut self.cursors[clock.id() as usize];
        gc.step(clock, c);
        c.ring.time
    }

    #[inline]
    fn schedule(&mut self, gc: &GraphicalConstruction<'_>, clock: Clock, t: f64) {
        let next = self.seek(gc, clock, t);
        self.pending.set(clock.id(), next);
    }

    #[inline]
    fn unschedule(&mut self, clock: Clock) {
        self.pending.set(clock.id(), f64::INFINITY);
    }

    /// Runs the process at rate `lambda` from `initial` using the rings of
    /// `gc`. The result depends only on `(gc, lambda, initial)`.
    pub fn run<O: Observer>(
        &mut self,
        gc: &GraphicalConstruction<'_>,
        lambda: f64,
        initial: &[u32],
        observer: &mut O,
    ) -> Result<RunOutcome, ContactError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(ContactError::InvalidRate(lambda));
        }
        if lambda > gc.lambda_max() {
            return Err(ContactError::RateAboveConstruction {
                lambda,
                lambda_max: gc.lambda_max(),
            });
        }
        let graph = gc.graph();
        let n = graph.vertex_count();
        if let Some(&v) = initial.iter().find(|&&v| v as usize >= n) {
            return Err(ContactError::UnknownVertex(v));
        }
        self.reset(n);
        let mut count = 0;
        for &v in initial {
            if !self.infected[v as usize] {
                self.infected[v as usize] = true;
                count += 1;
                for &x in graph.neighbors(v) {
                    self.pressure[x as usize] += 1;
                }
            }
        }
        if count == 0 {
            return Ok(RunOutcome {
                extinction_time: Some(0.0),
                censored: false,
                stopped: false,
                end_time: 0.0,
                final_infected: 0,
            });
        }
        for v in 0..n as u32 {
            if self.infected[v as usize] {
                self.schedule(gc, Clock::Recovery(v), 0.0);
            } else if self.pressure[v as usize] > 0 {
                self.schedule(gc, Clock::Incoming(v), 0.0);
            }
        }
        let threshold = lambda / gc.lambda_max();
        let t_max = gc.t_max();
        let mut now;

        loop {
            let (id, t) = self.pending.min();
            if t > t_max {
                return Ok(RunOutcome {
                    extinction_time: None,
                    censored: true,
                    stopped: false,
                    end_time: t_max,
                    final_infected: count,
                });
            }
            now = t;
            match Clock::from_id(id) {
                Clock::Recovery(v) => {
                    self.unschedule(Clock::Recovery(v));
                    self.infected[v as usize] = false;
                    count -= 1;
                    for &x in graph.neighbors(v) {
                        let xi = x as usize;
                        self.pressure[xi] -= 1;
                        if self.pressure[xi] == 0 && !self.infected[xi] {
                            self.unschedule(Clock::Incoming(x));
                        }
                    }
                    if self.pressure[v as usize] > 0 {
                        self.schedule(gc, Clock::Incoming(v), t);
                    }
                    let flow = observer.on_event(t, v, EventKind::Recover, &self.infected);
                    if count == 0 || flow.is_break() {
                        break;
                    }
                }
                Clock::Incoming(w) => {
                    let nbrs = graph.neighbors(w);
                    let (slot, mark) = self.cursors[id as usize].ring.source_and_mark(nbrs.len());
                    let u = nbrs[slot];
                    if mark >= threshold || !self.infected[u as usize] {
                        let next = self.advance(gc, Clock::Incoming(w));
                        self.pending.set(id, next);
                        continue;
                    }
                    self.unschedule(Clock::Incoming(w));
                    self.infected[w as usize] = true;
                    count += 1;
                    self.schedule(gc, Clock::Recovery(w), t);
                    for &x in graph.neighbors(w) {
                        let xi = x as usize;
                        self.pressure[xi] += 1;
                        if self.pressure[xi] == 1 && !self.infected[xi] {
                            self.schedule(gc, Clock::Incoming(x), t);
                        }
                    }
                    if observer
                        .on_event(t, w, EventKind::Infect { source: u }, &self.infected)
                        .is_break()
                    {
                        break;
                    }
                }
            }
        }
        Ok(RunOutcome {
            extinction_time: (count == 0).then_some(now),
            censored: false,
            stopped: count > 0,
            end_time: now,
            final_infected: count,
        })
    }

    /// Infected vertices after the last run, sorted.
    pub fn infected_vertices(&self) -> Vec<u32> {
        (0..self.infected.len() as u32)
            .filter(|&v| self.infected[v as usize])
            .collect()
    }
}

/// Complete record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub lambda: f64,
    pub t_max: f64,
    pub initial: Vec<u32>,
    pub events: Vec<Event>,
    pub final_infected: Vec<u32>,
    pub extinction_time: Option<f64>,
    pub censored: bool,
}

struct Recorder(Vec<Event>);

impl Observer for Recorder {
    fn on_event(&mut self, time: f64, vertex: u32, kind: EventKind, _: &[bool]) -> ControlFlow<()> {
        self.0.push(Event { time, vertex, kind });
        ControlFlow::Continue(())
    }
}

/// Runs and records every event, then checks the trajectory is legal.
pub fn run(
    gc: &GraphicalConstruction<'_>,
    lambda: f64,
    initial: &[u32],
) -> Result<Trajectory, ContactError> {
    let mut sim = Simulator::new();
    let mut rec = Recorder(Vec::new());
    let out = sim.run(gc, lambda, initial, &mut rec)?;
    let mut init = initial.to_vec();
    init.sort_unstable();
    init.dedup();
    let traj = Trajectory {
        lambda,
        t_max: gc.t_max(),
        initial: init,
        events: rec.0,
        final_infected: sim.infected_vertices(),
        extinction_time: out.extinction_time,
        censored: out.censored,
    };
    traj.validate(gc.graph())
        .map_err(|m| ContactError::Internal(format!("illegal trajectory: {m}")))?;
    Ok(traj)
}

impl Trajectory {
    /// Extinction time, or the horizon when censored.
    pub fn tau_or_horizon(&self) -> f64 {
        self.extinction_time.unwrap_or(self.t_max)
    }

    /// Replays the events and checks that recoveries hit infected vertices,
    /// infections travel along edges from infected sources to healthy
    /// targets, times are nondecreasing, and the bookkeeping matches.
    pub fn validate(&self, graph: &UndirectedGraph) -> Result<(), String> {
        let mut state = vec![false; graph.vertex_count()];
        for &v in &self.initial {
            state[v as usize] = true;
        }
        let mut count = self.initial.len();
        let mut last = 0.0;
        for e in &self.events {
            if e.time < last || e.time > self.t_max {
                return Err(format!("event time {} out of order or past horizon", e.time));
            }
            last = e.time;
            let v = e.vertex as usize;
            match e.kind {
                EventKind::Recover => {
                    if !state[v] {
                        return Err(format!("healthy vertex {v} recovered at {}", e.time));
                    }
                    state[v] = false;
                    count -= 1;
                }
                EventKind::Infect { source } => {
                    if state[v] || !state[source as usize] || !graph.has_edge(source, e.vertex) {
                        return Err(format!("illegal infection {source}->{v} at {}", e.time));
                    }
                    state[v] = true;
                    count += 1;
                }
            }
            if count == 0 && !std::ptr::eq(e, self.events.last().unwrap()) {
                return Err("events after extinction".into());
            }
        }
        let fin: Vec<u32> = (0..state.len() as u32).filter(|&v| state[v as usize]).collect();
        if fin != self.final_infected {
            return Err("final infected set does not match replay".into());
        }
        match self.extinction_time {
            Some(t) if count != 0 || (t != last && !self.events.is_empty()) => {
                Err("extinction time inconsistent with events".into())
            }
            None if count == 0 => Err("extinct run reported without extinction time".into()),
            _ => Ok(()),
        }
    }

    /// Infected sets at each event time, as `(time, sorted vertices)`.
    pub fn states(&self, n: usize) -> Vec<(f64, Vec<u32>)> {
        let mut state = vec![false; n];
        for &v in &self.initial {
            state[v as usize] = true;
        }
        let snapshot = |s: &[bool]| (0..n as u32).filter(|&v| s[v as usize]).collect::<Vec<_>>();
        let mut out = vec![(0.0, snapshot(&state))];
        for e in &self.events {
            state[e.vertex as usize] = matches!(e.kind, EventKind::Infect { .. });
            out.push((e.time, snapshot(&state)));
        }
        out
    }

    /// CSV with columns `time,vertex,event`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,vertex,event")?;
        for e in &self.events {
            let kind = match e.kind {
                EventKind::Infect { .. } => "infect",
                EventKind::Recover => "recover",
            };
            writeln!(out, "{:.17e},{},{}", e.time, e.vertex, kind)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_initial_set_is_extinct_at_zero() {
        let g = UndirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        let gc = GraphicalConstruction::build(&g, 1.0, 10.0, 0).unwrap();
        let t = run(&gc, 1.0, &[]).unwrap();
        assert_eq!(t.extinction_time, Some(0.0));
        assert!(t.events.is_empty());
    }

    #[test]
    fn rate_above_construction_is_rejected() {
        let g = UndirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        let gc = GraphicalConstruction::build(&g, 1.0, 10.0, 0).unwrap();
        assert!(matches!(
            run(&gc, 1.5, &[0]),
            Err(ContactError::RateAboveConstruction { .. })
        ));
    }

    #[test]
    fn isolated_vertex_recovers_once() {
        let g = UndirectedGraph::empty(1);
        let gc = GraphicalConstruction::build(&g, 1.0, 1e6, 5).unwrap();
        let t = run(&gc, 1.0, &[0]).unwrap();
        assert_eq!(t.events.len(), 1);
        assert_eq!(t.extinction_time, Some(gc.recovery_times(0)[0]));
    }

    #[test]
    fn replays_are_identical() {
        let g = UndirectedGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let gc = GraphicalConstruction::build(&g, 3.0, 30.0, 12).unwrap();
        let a = run(&gc, 2.0, &[0, 1, 2, 3]).unwrap();
        let b = run(&gc, 2.0, &[3, 2, 1, 0]).unwrap();
        assert_eq!(a, b);
        assert!(!a.events.is_empty());
    }

    #[test]
    fn censoring_reports_horizon() {
        let g = UndirectedGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let mut censored = 0;
        for seed in 0..20 {
            let gc = GraphicalConstruction::build(&g, 5.0, 2.0, seed).unwrap();
            let t = run(&gc, 5.0, &[0, 1, 2]).unwrap();
            assert!(t.events.iter().all(|e| e.time <= 2.0));
            if t.censored {
                censored += 1;
                assert_eq!(t.tau_or_horizon(), 2.0);
                assert!(!t.final_infected.is_empty());
            }
        }
        assert!(censored > 10);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = UndirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        let gc = GraphicalConstruction::build(&g, 1.0, 100.0, 2).unwrap();
        let t = run(&gc, 1.0, &[0, 1]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time,vertex,event\n"));
        assert_eq!(text.lines().count(), t.events.len() + 1);
    }
}
