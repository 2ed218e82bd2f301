//! Event-driven front tracking engine shared by the scalar and system solvers.
//!
//! Fronts move linearly between interactions. The earliest collision of two
//! neighbouring fronts is resolved by solving the Riemann problem between the
//! outer states of every front meeting at that point. Every front ever created
//! is kept in a slab together with its birth and death times, so the solution
//! can be rebuilt at any time in the tracked span.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::piecewise::PiecewiseConstantFn;

/// Times closer than this are one event.
pub const TIME_TIE: f64 = 1e-12;
/// Fronts within this distance of a collision point join the interaction.
pub const POSITION_TIE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FrontKind {
    Shock,
    Rarefaction,
    Contact,
}

impl FrontKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FrontKind::Shock => "shock",
            FrontKind::Rarefaction => "rarefaction",
            FrontKind::Contact => "contact",
        }
    }
}

/// A front produced by a Riemann solver, listed left to right.
#[derive(Debug, Clone)]
pub struct Emitted<S> {
    pub speed: f64,
    /// State immediately right of the front.
    pub right: S,
    pub family: usize,
    pub kind: FrontKind,
    pub strength: f64,
}

/// Description of the fronts entering an interaction.
#[derive(Debug, Clone, Copy)]
pub struct Incoming {
    pub family: usize,
    pub kind: FrontKind,
}

/// Riemann solver plugged into the tracking engine.
pub trait WaveSolver {
    type State: Clone + std::fmt::Debug;

    /// Fronts resolving the jump `left -> right`, ordered by speed.
    /// `incoming` is empty at `t = 0` and lists the colliding fronts otherwise.
    fn solve(&self, left: &Self::State, right: &Self::State, incoming: &[Incoming]) -> Result<Vec<Emitted<Self::State>>>;

    /// 1-norm of the jump between two states.
    fn jump(&self, a: &Self::State, b: &Self::State) -> f64;

    /// Componentwise representation used for snapshots.
    fn to_values(&self, s: &Self::State) -> Vec<f64>;

    /// Magnitude of the Rankine–Hugoniot defect of a front (0 for exact fronts).
    fn rh_defect(&self, _left: &Self::State, _right: &Self::State, _speed: f64) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct FrontRecord<S> {
    pub x0: f64,
    pub t0: f64,
    pub speed: f64,
    pub family: usize,
    pub kind: FrontKind,
    pub strength: f64,
    pub right: S,
    pub died: f64,
    /// Rankine–Hugoniot defect of the front at creation.
    pub rh_defect: f64,
    origin: usize,
    prev: Option<usize>,
    next: Option<usize>,
}

impl<S> FrontRecord<S> {
    pub fn position(&self, t: f64) -> f64 {
        self.x0 + self.speed * (t - self.t0)
    }

    pub fn alive_at(&self, t: f64) -> bool {
        self.t0 <= t && t < self.died
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EventRecord {
    pub t: f64,
    pub x: f64,
    pub kind: &'static str,
    pub in_fronts: usize,
    pub out_fronts: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiagnosticSample {
    pub t: f64,
    pub tv: f64,
    pub front_count: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TrackerLimits {
    pub front_cap: usize,
    /// Monitored bound on the total variation (`None` disables the monitor).
    pub tv_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    t: f64,
    x: f64,
    left: usize,
    right: usize,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then(other.x.total_cmp(&self.x)).then(other.left.cmp(&self.left))
    }
}

/// Complete front history on `[0, t_final]`.
#[derive(Debug, Clone)]
pub struct Tracked<S> {
    pub far_left: S,
    pub fronts: Vec<FrontRecord<S>>,
    pub t_final: f64,
    pub events: Vec<EventRecord>,
    pub diagnostics: Vec<DiagnosticSample>,
    pub interactions: usize,
    pub max_front_count: usize,
    /// `Σ |RH defect| × lifetime` over all fronts: bounds the mass drift.
    pub conservation_bound: f64,
}

pub fn track<W: WaveSolver>(solver: &W, init: &[(f64, W::State)], far_left: W::State, t_final: f64, limits: TrackerLimits) -> Result<Tracked<W::State>> {
    Engine::new(solver, far_left, t_final, limits).run(init)
}

struct Engine<'a, W: WaveSolver> {
    solver: &'a W,
    fronts: Vec<FrontRecord<W::State>>,
    head: Option<usize>,
    far_left: W::State,
    heap: BinaryHeap<Event>,
    t_final: f64,
    limits: TrackerLimits,
    alive: usize,
    tv: f64,
    events: Vec<EventRecord>,
    diagnostics: Vec<DiagnosticSample>,
    interactions: usize,
    max_front_count: usize,
    origin_counter: usize,
}

impl<'a, W: WaveSolver> Engine<'a, W> {
    fn new(solver: &'a W, far_left: W::State, t_final: f64, limits: TrackerLimits) -> Self {
        Self {
            solver,
            fronts: Vec::new(),
            head: None,
            far_left,
            heap: BinaryHeap::new(),
            t_final,
            limits,
            alive: 0,
            tv: 0.0,
            events: Vec::new(),
            diagnostics: Vec::new(),
            interactions: 0,
            max_front_count: 0,
            origin_counter: 0,
        }
    }

    fn left_state(&self, id: usize) -> &W::State {
        match self.fronts[id].prev {
            Some(p) => &self.fronts[p].right,
            None => &self.far_left,
        }
    }

    /// Creates the emitted fronts at `(t, x)`, linked between `prev` and `next`.
    fn spawn(&mut self, emitted: Vec<Emitted<W::State>>, t: f64, x: f64, prev: Option<usize>, next: Option<usize>) -> Vec<usize> {
        let origin = self.origin_counter;
        self.origin_counter += 1;
        let mut ids = Vec::with_capacity(emitted.len());
        let mut left = match prev {
            Some(p) => self.fronts[p].right.clone(),
            None => self.far_left.clone(),
        };
        for e in emitted {
            let id = self.fronts.len();
            let rh_defect = self.solver.rh_defect(&left, &e.right, e.speed);
            left = e.right.clone();
            self.fronts.push(FrontRecord {
                x0: x,
                t0: t,
                speed: e.speed,
                family: e.family,
                kind: e.kind,
                strength: e.strength,
                right: e.right,
                died: f64::INFINITY,
                rh_defect,
                origin,
                prev: None,
                next: None,
            });
            ids.push(id);
        }
        let mut last = prev;
        for &id in &ids {
            self.fronts[id].prev = last;
            match last {
                Some(l) => self.fronts[l].next = Some(id),
                None => self.head = Some(id),
            }
            last = Some(id);
        }
        match last {
            Some(l) => self.fronts[l].next = next,
            None => self.head = next,
        }
        if let Some(n) = next {
            self.fronts[n].prev = last;
        }
        self.alive += ids.len();
        self.max_front_count = self.max_front_count.max(self.alive);
        ids
    }

    fn schedule(&mut self, a: usize, b: usize, now: f64) {
        let (fa, fb) = (&self.fronts[a], &self.fronts[b]);
        if fa.origin == fb.origin || fa.speed <= fb.speed {
            return;
        }
        let num = (fb.x0 - fb.speed * fb.t0) - (fa.x0 - fa.speed * fa.t0);
        let t = (num / (fa.speed - fb.speed)).max(now);
        if t <= self.t_final {
            let x = fa.position(t);
            self.heap.push(Event { t, x, left: a, right: b });
        }
    }

    fn run(mut self, init: &[(f64, W::State)]) -> Result<Tracked<W::State>> {
        let mut left = self.far_left.clone();
        let mut last: Option<usize> = None;
        for (x, right) in init {
            let emitted = self.solver.solve(&left, right, &[])?;
            self.tv += self.solver.jump(&left, right);
            let ids = self.spawn(emitted, 0.0, *x, last, None);
            if let Some(&l) = ids.last() {
                last = Some(l);
                left = right.clone();
            }
        }
        self.check_limits()?;
        self.diagnostics.push(DiagnosticSample { t: 0.0, tv: self.tv, front_count: self.alive });
        let mut cur = self.head;
        while let Some(a) = cur {
            let next = self.fronts[a].next;
            if let Some(b) = next {
                self.schedule(a, b, 0.0);
            }
            cur = next;
        }

        while let Some(first) = self.heap.pop() {
            // gather every valid event inside the time tie window, take the leftmost
            let mut batch = vec![first];
            while let Some(e) = self.heap.peek() {
                if e.t <= first.t + TIME_TIE {
                    batch.push(self.heap.pop().unwrap());
                } else {
                    break;
                }
            }
            batch.retain(|e| self.is_valid(e));
            if batch.is_empty() {
                continue;
            }
            batch.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.left.cmp(&b.left)));
            let ev = batch[0];
            for e in batch.into_iter().skip(1) {
                self.heap.push(e);
            }
            self.interact(ev)?;
        }

        let t_final = self.t_final;
        let conservation_bound = self.fronts.iter().map(|f| f.rh_defect * (f.died.min(t_final) - f.t0).max(0.0)).sum();

        Ok(Tracked {
            far_left: self.far_left,
            fronts: self.fronts,
            t_final: self.t_final,
            events: self.events,
            diagnostics: self.diagnostics,
            interactions: self.interactions,
            max_front_count: self.max_front_count,
            conservation_bound,
        })
    }

    fn is_valid(&self, e: &Event) -> bool {
        let (a, b) = (&self.fronts[e.left], &self.fronts[e.right]);
        a.died.is_infinite() && b.died.is_infinite() && a.next == Some(e.right)
    }

    fn check_limits(&self) -> Result<()> {
        if self.alive > self.limits.front_cap {
            return Err(Error::FrontCountExplosion { count: self.alive, cap: self.limits.front_cap });
        }
        if let Some(bound) = self.limits.tv_bound {
            if self.tv > bound {
                return Err(Error::TvBlowup { tv: self.tv, bound });
            }
        }
        Ok(())
    }

    fn interact(&mut self, ev: Event) -> Result<()> {
        let t = ev.t;
        let x = ev.x;
        let near = |f: &FrontRecord<W::State>| (f.position(t) - x).abs() <= POSITION_TIE * (1.0 + x.abs());
        let mut first = ev.left;
        while let Some(p) = self.fronts[first].prev {
            if near(&self.fronts[p]) {
                first = p;
            } else {
                break;
            }
        }
        let mut last = ev.right;
        while let Some(n) = self.fronts[last].next {
            if near(&self.fronts[n]) {
                last = n;
            } else {
                break;
            }
        }
        let prev = self.fronts[first].prev;
        let next = self.fronts[last].next;
        let left = self.left_state(first).clone();
        let right = self.fronts[last].right.clone();

        let mut incoming = Vec::new();
        let mut tv_in = 0.0;
        let mut cur = Some(first);
        let mut prev_state = left.clone();
        while let Some(id) = cur {
            incoming.push(Incoming { family: self.fronts[id].family, kind: self.fronts[id].kind });
            tv_in += self.solver.jump(&prev_state, &self.fronts[id].right);
            prev_state = self.fronts[id].right.clone();
            self.fronts[id].died = t;
            cur = if id == last { None } else { self.fronts[id].next };
        }
        self.alive -= incoming.len();

        let emitted = self.solver.solve(&left, &right, &incoming)?;
        let mut tv_out = 0.0;
        let mut s = left.clone();
        for e in &emitted {
            tv_out += self.solver.jump(&s, &e.right);
            s = e.right.clone();
        }
        self.tv += tv_out - tv_in;
        let out = emitted.len();
        let ids = self.spawn(emitted, t, x, prev, next);
        self.interactions += 1;
        self.events.push(EventRecord { t, x, kind: "interaction", in_fronts: incoming.len(), out_fronts: out });
        self.diagnostics.push(DiagnosticSample { t, tv: self.tv, front_count: self.alive });
        self.check_limits()?;

        let left_nb = prev;
        let right_nb = next;
        match (ids.first(), ids.last()) {
            (Some(&f), Some(&l)) => {
                if let Some(p) = left_nb {
                    self.schedule(p, f, t);
                }
                if let Some(n) = right_nb {
                    self.schedule(l, n, t);
                }
            }
            _ => {
                if let (Some(p), Some(n)) = (left_nb, right_nb) {
                    self.schedule(p, n, t);
                }
            }
        }
        Ok(())
    }
}

impl<S: Clone> Tracked<S> {
    /// Fronts alive at `t`, ordered by position.
    pub fn alive_fronts(&self, t: f64) -> Vec<&FrontRecord<S>> {
        let mut v: Vec<(usize, &FrontRecord<S>)> = self.fronts.iter().enumerate().filter(|(_, f)| f.alive_at(t)).collect();
        v.sort_by(|a, b| a.1.position(t).total_cmp(&b.1.position(t)).then(a.0.cmp(&b.0)));
        v.into_iter().map(|(_, f)| f).collect()
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_final).contains(&t) {
            return Err(Error::OutOfSpan { t, t_final: self.t_final });
        }
        Ok(())
    }

    /// Solution at time `t` as a piecewise-constant function.
    pub fn snapshot<W: WaveSolver<State = S>>(&self, solver: &W, t: f64) -> Result<PiecewiseConstantFn> {
        self.check_time(t)?;
        let fronts = self.alive_fronts(t);
        let first = solver.to_values(&self.far_left);
        let dim = first.len();
        let mut bps = Vec::with_capacity(fronts.len());
        let mut vals = first;
        vals.reserve(fronts.len() * dim);
        for f in fronts {
            bps.push(f.position(t));
            vals.extend(solver.to_values(&f.right));
        }
        PiecewiseConstantFn::from_sorted_segments(dim, &bps, &vals)
    }

    /// Total number of fronts ever created.
    pub fn total_fronts(&self) -> usize {
        self.fronts.len()
    }
}

/// Event log as CSV with header `t,x,kind,in_fronts,out_fronts`.
pub fn events_csv(events: &[EventRecord]) -> String {
    let mut s = String::from("t,x,kind,in_fronts,out_fronts\n");
    for e in events {
        s.push_str(&format!("{},{},{},{},{}\n", e.t, e.x, e.kind, e.in_fronts, e.out_fronts));
    }
    s
}

/// Diagnostics as CSV with header `t,tv,front_count`.
pub fn diagnostics_csv(samples: &[DiagnosticSample]) -> String {
    let mut s = String::from("t,tv,front_count\n");
    for d in samples {
        s.push_str(&format!("{},{},{}\n", d.t, d.tv, d.front_count));
    }
    s
}
