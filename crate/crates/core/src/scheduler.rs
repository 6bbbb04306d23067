//! Look-Compute-Move execution under FSYNC and SSYNC schedulers.
//!
//! Every activated robot in a step observes the same pre-step configuration
//! and all moves land atomically at the end of the step. A round closes as
//! soon as every robot has been activated at least once since the previous
//! round boundary.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{safe_regions, Configuration, GeometryError, GridLayout, Point, SafeRegion};
use crate::protocols::{DestinationFunction, ProtocolError, ProtocolView};
use crate::randomness::{splitmix64, word_width_big, BitLedger, BitSource, RandomnessError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Randomness(#[from] RandomnessError),
    #[error("invariant violated at step {step}: {what}")]
    InvariantViolation { step: u64, what: String },
    #[error("configuration is already scattered")]
    Terminated,
    #[error("initial configuration has {got} robots, expected {expected}")]
    RobotCount { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse {kind} from {input:?}")]
pub struct ParseError {
    pub kind: &'static str,
    pub input: String,
}

/// What robots can learn about co-located robots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DetectionMode {
    None,
    WeakLocal,
    WeakGlobal,
    StrongLocal,
    StrongGlobal,
}

impl DetectionMode {
    pub const ALL: [DetectionMode; 5] = [
        DetectionMode::None,
        DetectionMode::WeakLocal,
        DetectionMode::WeakGlobal,
        DetectionMode::StrongLocal,
        DetectionMode::StrongGlobal,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DetectionMode::None => "none",
            DetectionMode::WeakLocal => "weak-local",
            DetectionMode::WeakGlobal => "weak-global",
            DetectionMode::StrongLocal => "strong-local",
            DetectionMode::StrongGlobal => "strong-global",
        }
    }
}

impl fmt::Display for DetectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DetectionMode {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().replace('_', "-");
        DetectionMode::ALL
            .into_iter()
            .find(|m| m.label() == norm)
            .ok_or_else(|| ParseError {
                kind: "detection mode",
                input: s.to_string(),
            })
    }
}

/// Which robots the adversary activates at each step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SchedulerPolicy {
    Fsync,
    /// Consecutive blocks of `block` robot ids, wrapping around.
    SsyncRoundRobin {
        block: usize,
    },
    /// Each robot independently with probability `p_activate`; robots idle
    /// for the fairness horizon are forced in.
    SsyncRandom {
        p_activate: f64,
    },
    /// Semi-synchronous adversary that happens to activate everyone.
    SsyncAll,
}

impl fmt::Display for SchedulerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulerPolicy::Fsync => f.write_str("fsync"),
            SchedulerPolicy::SsyncRoundRobin { block } => write!(f, "ssync-rr:{block}"),
            SchedulerPolicy::SsyncRandom { p_activate } => write!(f, "ssync-rand:{p_activate}"),
            SchedulerPolicy::SsyncAll => f.write_str("ssync-all"),
        }
    }
}

impl FromStr for SchedulerPolicy {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseError {
            kind: "scheduler policy",
            input: s.to_string(),
        };
        let s = s.trim();
        match s {
            "fsync" => return Ok(SchedulerPolicy::Fsync),
            "ssync-all" => return Ok(SchedulerPolicy::SsyncAll),
            _ => {}
        }
        if let Some(b) = s.strip_prefix("ssync-rr:") {
            let block: usize = b.parse().map_err(|_| err())?;
            if block == 0 {
                return Err(err());
            }
            return Ok(SchedulerPolicy::SsyncRoundRobin { block });
        }
        if let Some(p) = s.strip_prefix("ssync-rand:") {
            let p_activate: f64 = p.parse().map_err(|_| err())?;
            if !(p_activate > 0.0 && p_activate <= 1.0) {
                return Err(err());
            }
            return Ok(SchedulerPolicy::SsyncRandom { p_activate });
        }
        Err(err())
    }
}

/// How far a robot travels toward its destination.
#[derive(Clone, Debug, PartialEq)]
pub enum MoveModel<T> {
    /// Destination always reached.
    Rigid,
    /// Robot `r` in step `s` covers `fractions[(s + r) % len]` of the way.
    /// Fractions must lie in `(0, 1]`. Robots leaving the same point with
    /// collinear destinations and different fractions may land together again.
    Partial { fractions: Vec<T> },
}

#[derive(Clone, Debug)]
pub struct SimOptions<T> {
    pub mode: DetectionMode,
    pub policy: SchedulerPolicy,
    pub moves: MoveModel<T>,
    /// Check the movement contract exactly after every step.
    pub check_invariants: bool,
    /// Steps a robot may stay idle under `SsyncRandom` before it is forced.
    pub fairness_horizon: u64,
}

impl<T> SimOptions<T> {
    pub fn new(mode: DetectionMode, policy: SchedulerPolicy) -> Self {
        SimOptions {
            mode,
            policy,
            moves: MoveModel::Rigid,
            check_invariants: true,
            fairness_horizon: 16,
        }
    }
}

/// The mode-filtered information shared by all views in one step.
#[derive(Clone, Debug)]
pub struct Observation<'a, T> {
    mode: DetectionMode,
    config: &'a Configuration<T>,
    distinct: Vec<Point<T>>,
    flags: Option<BTreeMap<Point<T>, bool>>,
}

impl<'a, T: Scalar> Observation<'a, T> {
    pub fn new(config: &'a Configuration<T>, mode: DetectionMode) -> Self {
        let flags = (mode == DetectionMode::WeakGlobal).then(|| {
            config
                .counts()
                .iter()
                .map(|(p, &c)| (p.clone(), c > 1))
                .collect()
        });
        Observation {
            mode,
            config,
            distinct: config.u_projection(),
            flags,
        }
    }

    /// The view of a robot standing at `at`.
    pub fn view<'s>(&'s self, at: &'s Point<T>) -> ProtocolView<'s, T> {
        let own = self.config.multiplicity(at);
        ProtocolView {
            distinct_points: &self.distinct,
            multiplicity_flags: self.flags.as_ref(),
            own_flag: (self.mode == DetectionMode::WeakLocal).then_some(own > 1),
            own_count: (self.mode == DetectionMode::StrongLocal).then_some(own),
            full_counts: (self.mode == DetectionMode::StrongGlobal).then(|| self.config.counts()),
            self_position: at,
        }
    }
}

/// What happened in one step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepReport {
    pub activated: usize,
    pub moved: usize,
    pub bits_charged: u64,
    pub round_completed: bool,
}

/// Outcome of a single run to scattering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub seed: u64,
    /// Rounds until scattered; an unfinished last round counts as a round.
    pub rounds_used: u64,
    pub steps: u64,
    /// Bits charged by the ledger.
    pub total_bits: u64,
    /// Largest ledger entry for one robot in one round.
    pub max_per_robot_bits: u64,
    /// Every bit drawn, including those of already-scattered robots.
    pub raw_bits: u64,
    pub timed_out: bool,
}

/// Full state of one trial.
#[derive(Clone, Debug)]
pub struct SimulationState<T> {
    config: Configuration<T>,
    round_count: u64,
    steps: u64,
    marks: Vec<bool>,
    idle: Vec<u64>,
    ledger: BitLedger,
    rng: BitSource,
    sched_rng: ChaCha8Rng,
    terminated: bool,
    seed: u64,
}

struct PointPlan {
    k: BigUint,
    weights: Option<Vec<u64>>,
    selection_size: BigUint,
    layout: GridLayout,
}

impl<T: Scalar> SimulationState<T> {
    pub fn new(config: Configuration<T>, seed: u64) -> Self {
        let n = config.len();
        let terminated = config.is_scattered();
        SimulationState {
            config,
            round_count: 0,
            steps: 0,
            marks: vec![false; n],
            idle: vec![0; n],
            ledger: BitLedger::new(n),
            rng: BitSource::new(seed),
            sched_rng: ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x5C4E_D01E)),
            terminated,
            seed,
        }
    }

    /// `n` robots gathered at the origin.
    pub fn gathered(n: usize, seed: u64) -> Result<Self, GeometryError> {
        Ok(SimulationState::new(
            Configuration::gathered(n, Point::origin())?,
            seed,
        ))
    }

    pub fn config(&self) -> &Configuration<T> {
        &self.config
    }

    pub fn round_count(&self) -> u64 {
        self.round_count
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn ledger(&self) -> &BitLedger {
        &self.ledger
    }

    pub fn bit_source(&self) -> &BitSource {
        &self.rng
    }

    pub fn activation_marks(&self) -> &[bool] {
        &self.marks
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn select_active(&mut self, policy: SchedulerPolicy, horizon: u64) -> Vec<usize> {
        let n = self.config.len();
        match policy {
            SchedulerPolicy::Fsync | SchedulerPolicy::SsyncAll => (0..n).collect(),
            SchedulerPolicy::SsyncRoundRobin { block } => {
                let b = block.clamp(1, n);
                let start = (self.steps as usize % n) * b % n;
                let mut ids: Vec<usize> = (0..b).map(|t| (start + t) % n).collect();
                ids.sort_unstable();
                ids
            }
            SchedulerPolicy::SsyncRandom { p_activate } => {
                let mut ids: Vec<usize> = (0..n)
                    .filter(|&r| {
                        let coin = self.sched_rng.random::<f64>() < p_activate;
                        coin || self.idle[r] + 1 >= horizon
                    })
                    .collect();
                if ids.is_empty() {
                    let oldest = (0..n).max_by_key(|&r| (self.idle[r], std::cmp::Reverse(r)));
                    ids.extend(oldest);
                }
                ids
            }
        }
    }

    /// One atomic Look-Compute-Move step of the activated robots.
    pub fn step(
        &mut self,
        protocol: &dyn DestinationFunction<T>,
        opts: &SimOptions<T>,
    ) -> Result<StepReport, SimError> {
        if self.terminated {
            return Err(SimError::Terminated);
        }
        let active = self.select_active(opts.policy, opts.fairness_horizon.max(1));
        let before = self.config.clone();
        let obs = Observation::new(&before, opts.mode);
        let regions: BTreeMap<Point<T>, SafeRegion<T>> = safe_regions(&before);
        let mut plans: BTreeMap<Point<T>, PointPlan> = BTreeMap::new();
        let mut layouts: HashMap<BigUint, GridLayout> = HashMap::new();
        let mut next = before.positions().to_vec();
        let round = self.round_count;
        let mut report = StepReport {
            activated: active.len(),
            ..StepReport::default()
        };

        for &robot in &active {
            let at = before.position(robot);
            let view = obs.view(at);
            if view.alone() == Some(true) {
                continue;
            }
            if !plans.contains_key(at) {
                let k = protocol.k_of(&view)?;
                let weights = protocol.weights_of(&view);
                let selection_size = match &weights {
                    Some(w) => BigUint::from(w.iter().sum::<u64>()),
                    None => k.clone(),
                };
                let layout = match layouts.get(&k) {
                    Some(l) => l.clone(),
                    None => {
                        let l = GridLayout::new(&k)?;
                        layouts.insert(k.clone(), l.clone());
                        l
                    }
                };
                plans.insert(
                    at.clone(),
                    PointPlan {
                        k,
                        weights,
                        selection_size,
                        layout,
                    },
                );
            }
            let plan = &plans[at];
            let drawn_before = self.rng.bits_drawn();
            let outcome = match &plan.weights {
                Some(w) => BigUint::from(self.rng.weighted_index(w)?),
                None => self.rng.uniform_index_big(&plan.k),
            };
            let spent = self.rng.bits_drawn() - drawn_before;
            if opts.check_invariants && spent < word_width_big(&plan.selection_size) {
                return Err(SimError::InvariantViolation {
                    step: self.steps,
                    what: format!(
                        "{spent} bits for a uniform choice among {}",
                        plan.selection_size
                    ),
                });
            }
            if self
                .ledger
                .record(robot, round, spent, before.multiplicity(at))
            {
                report.bits_charged += spent;
            }
            let region = &regions[at];
            let target = protocol.target(&view, region, &plan.layout, &outcome)?;
            let landed = match &opts.moves {
                MoveModel::Rigid => target,
                MoveModel::Partial { fractions } if !fractions.is_empty() => {
                    let lambda = &fractions[(self.steps as usize + robot) % fractions.len()];
                    Point::new(
                        at.x.clone() + lambda.clone() * (target.x - at.x.clone()),
                        at.y.clone() + lambda.clone() * (target.y - at.y.clone()),
                    )
                }
                MoveModel::Partial { .. } => target,
            };
            if &landed != at {
                report.moved += 1;
            }
            next[robot] = landed;
        }

        let after = Configuration::new(next)?;
        if opts.check_invariants {
            check_movement_contract(&before, &after).map_err(|what| {
                SimError::InvariantViolation {
                    step: self.steps,
                    what,
                }
            })?;
        }

        for r in 0..self.marks.len() {
            self.idle[r] += 1;
        }
        for &r in &active {
            self.marks[r] = true;
            self.idle[r] = 0;
        }
        if self.marks.iter().all(|&m| m) {
            self.round_count += 1;
            self.marks.iter_mut().for_each(|m| *m = false);
            report.round_completed = true;
        }
        self.steps += 1;
        self.config = after;
        self.terminated = self.config.is_scattered();
        if opts.check_invariants {
            let distinct: BTreeSet<&Point<T>> = self.config.positions().iter().collect();
            if self.terminated != (distinct.len() == self.config.len()) {
                return Err(SimError::InvariantViolation {
                    step: self.steps - 1,
                    what: "termination flag disagrees with pairwise distinctness".into(),
                });
            }
        }
        Ok(report)
    }

    /// Steps until scattered or until `max_rounds` rounds have elapsed.
    pub fn run_to_scatter(
        &mut self,
        protocol: &dyn DestinationFunction<T>,
        opts: &SimOptions<T>,
        max_rounds: u64,
    ) -> Result<TrialRecord, SimError> {
        let mut timed_out = false;
        while !self.terminated {
            if self.round_count >= max_rounds.max(1) {
                timed_out = true;
                break;
            }
            self.step(protocol, opts)?;
        }
        let partial = u64::from(self.marks.iter().any(|&m| m));
        Ok(TrialRecord {
            seed: self.seed,
            rounds_used: self.round_count + partial,
            steps: self.steps,
            total_bits: self.ledger.total(),
            max_per_robot_bits: self.ledger.max_entry(),
            raw_bits: self.rng.bits_drawn(),
            timed_out,
        })
    }
}

/// Robots that started a step at distinct points end it at distinct points,
/// and no location ends up with more robots than its origin point had.
pub fn check_movement_contract<T: Scalar>(
    before: &Configuration<T>,
    after: &Configuration<T>,
) -> Result<(), String> {
    if before.len() != after.len() {
        return Err("robot count changed".into());
    }
    let mut origin: BTreeMap<&Point<T>, &Point<T>> = BTreeMap::new();
    for (from, to) in before.positions().iter().zip(after.positions()) {
        match origin.insert(to, from) {
            Some(other) if other != from => {
                return Err(format!("robots from {other:?} and {from:?} met at {to:?}"));
            }
            _ => {}
        }
    }
    for (to, from) in &origin {
        if after.multiplicity(to) > before.multiplicity(from) {
            return Err(format!("multiplicity grew at {to:?}"));
        }
    }
    Ok(())
}

/// How the starting configuration of a trial is produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitialConfig<T> {
    /// All robots on the origin.
    Gathered,
    /// Each robot on an independent uniform point of `{0, …, side−1}²`.
    Grid { side: u64 },
    /// The same configuration for every trial.
    Fixed(Configuration<T>),
}

impl<T: Scalar> InitialConfig<T> {
    pub fn build(&self, n: usize, seed: u64) -> Result<Configuration<T>, SimError> {
        match self {
            InitialConfig::Gathered => Ok(Configuration::gathered(n, Point::origin())?),
            InitialConfig::Grid { side } => {
                let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x1417_C0F1));
                let side = (*side).max(1);
                let positions = (0..n)
                    .map(|_| {
                        let x = rng.random_range(0..side);
                        let y = rng.random_range(0..side);
                        Point::from_integers(x as i64, y as i64)
                    })
                    .collect();
                Ok(Configuration::new(positions)?)
            }
            InitialConfig::Fixed(config) => {
                if config.len() != n {
                    return Err(SimError::RobotCount {
                        expected: n,
                        got: config.len(),
                    });
                }
                Ok(config.clone())
            }
        }
    }
}

/// Checks that `protocol` can run under `mode`.
pub fn validate<T: Scalar>(
    protocol: &dyn DestinationFunction<T>,
    mode: DetectionMode,
) -> Result<(), ProtocolError> {
    let req = protocol.requirement();
    if req.satisfied_by(mode) {
        Ok(())
    } else {
        Err(ProtocolError::MissingDetection {
            protocol: protocol.id(),
            required: req.label(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{ClementGlobal, ClementLocal, Dp2, Dp2Biased};
    use num_rational::BigRational;

    type Q = BigRational;

    fn fsync(mode: DetectionMode) -> SimOptions<Q> {
        SimOptions::new(mode, SchedulerPolicy::Fsync)
    }

    #[test]
    fn parse_modes_and_policies() {
        for m in DetectionMode::ALL {
            assert_eq!(m.label().parse::<DetectionMode>().unwrap(), m);
        }
        assert_eq!(
            "strong_global".parse::<DetectionMode>().unwrap(),
            DetectionMode::StrongGlobal
        );
        assert!("strong".parse::<DetectionMode>().is_err());
        for s in ["fsync", "ssync-all", "ssync-rr:3", "ssync-rand:0.5"] {
            assert_eq!(s.parse::<SchedulerPolicy>().unwrap().to_string(), s);
        }
        for s in ["ssync-rr:0", "ssync-rand:0", "ssync-rand:1.5", "async"] {
            assert!(s.parse::<SchedulerPolicy>().is_err(), "{s}");
        }
    }

    #[test]
    fn lone_robot_is_scattered_from_the_start() {
        let mut st = SimulationState::<Q>::gathered(1, 3).unwrap();
        assert!(st.terminated());
        let rec = st
            .run_to_scatter(&Dp2, &fsync(DetectionMode::None), 10)
            .unwrap();
        assert_eq!(
            (rec.rounds_used, rec.total_bits, rec.timed_out),
            (0, 0, false)
        );
        assert!(matches!(
            st.step(&Dp2, &fsync(DetectionMode::None)),
            Err(SimError::Terminated)
        ));
    }

    #[test]
    fn two_gathered_robots_charge_two_bits_per_round() {
        for seed in 0..50 {
            let mut st = SimulationState::<Q>::gathered(2, seed).unwrap();
            let rep = st.step(&Dp2, &fsync(DetectionMode::None)).unwrap();
            assert_eq!(rep.bits_charged, 2);
            assert!(rep.round_completed);
            assert_eq!(st.round_count(), 1);
        }
    }

    #[test]
    fn alone_robots_stop_when_they_can_tell() {
        // robot 2 alone at (5, 0), robots 0 and 1 together at the origin
        let cfg = Configuration::new(vec![
            Point::origin(),
            Point::origin(),
            Point::from_integers(5, 0),
        ])
        .unwrap();
        for mode in [
            DetectionMode::WeakLocal,
            DetectionMode::WeakGlobal,
            DetectionMode::StrongLocal,
        ] {
            let mut st = SimulationState::<Q>::new(cfg.clone(), 1);
            st.step(&Dp2, &fsync(mode)).unwrap();
            assert_eq!(
                st.config().position(2),
                &Point::from_integers(5, 0),
                "{mode}"
            );
        }
        let mut st = SimulationState::<Q>::new(cfg, 1);
        st.step(&Dp2, &fsync(DetectionMode::None)).unwrap();
        assert_ne!(st.config().position(2), &Point::from_integers(5, 0));
        // the lone robot drew a bit but was not charged for it
        assert_eq!(st.bit_source().bits_drawn(), 3);
        assert_eq!(st.ledger().total(), 2);
        assert_eq!(st.ledger().robot_total(2), 0);
    }

    #[test]
    fn missing_detection_propagates() {
        let mut st = SimulationState::<Q>::gathered(3, 0).unwrap();
        let err = st
            .step(&ClementGlobal, &fsync(DetectionMode::WeakGlobal))
            .unwrap_err();
        assert!(matches!(
            err,
            SimError::Protocol(ProtocolError::MissingDetection { .. })
        ));
        assert!(validate::<Q>(&ClementGlobal, DetectionMode::None).is_err());
        assert!(validate::<Q>(&ClementLocal, DetectionMode::StrongGlobal).is_ok());
    }

    #[test]
    fn round_robin_counts_rounds_exactly() {
        let opts = SimOptions::<Q>::new(
            DetectionMode::None,
            SchedulerPolicy::SsyncRoundRobin { block: 2 },
        );
        let mut st = SimulationState::<Q>::gathered(6, 11).unwrap();
        let mut steps = 0;
        while !st.terminated() && steps < 30 {
            st.step(&Dp2, &opts).unwrap();
            steps += 1;
            assert_eq!(st.round_count(), st.steps() * 2 / 6);
        }
    }

    #[test]
    fn random_policy_is_fair() {
        let mut opts = SimOptions::<Q>::new(
            DetectionMode::None,
            SchedulerPolicy::SsyncRandom { p_activate: 0.05 },
        );
        opts.fairness_horizon = 4;
        let mut st = SimulationState::<Q>::gathered(5, 2).unwrap();
        for _ in 0..12 {
            if st.terminated() {
                break;
            }
            st.step(&Dp2, &opts).unwrap();
        }
        // every robot is forced in within 4 steps, so a round closes every ≤ 4 steps
        assert!(st.round_count() >= st.steps() / 4);
    }

    #[test]
    fn biased_coin_keeps_contract() {
        let opts = fsync(DetectionMode::None);
        for seed in 0..20 {
            let mut st = SimulationState::<Q>::gathered(4, seed).unwrap();
            let rec = st.run_to_scatter(&Dp2Biased, &opts, 500).unwrap();
            assert!(!rec.timed_out);
            assert_eq!(rec.raw_bits % 2, 0);
        }
    }

    #[test]
    fn timeout_is_recorded() {
        let mut st = SimulationState::<Q>::gathered(64, 5).unwrap();
        let rec = st
            .run_to_scatter(&Dp2, &fsync(DetectionMode::None), 1)
            .unwrap();
        assert!(rec.timed_out);
        assert_eq!(rec.rounds_used, 1);
    }

    #[test]
    fn partial_moves_stay_in_the_cell() {
        let mut opts = fsync(DetectionMode::None);
        opts.moves = MoveModel::Partial {
            fractions: vec![Q::new(1.into(), 2.into()), Q::new(1.into(), 1.into())],
        };
        let mut st = SimulationState::<Q>::gathered(8, 9).unwrap();
        let rec = st
            .run_to_scatter(
                &ClementGlobal,
                &SimOptions {
                    mode: DetectionMode::StrongGlobal,
                    ..opts
                },
                200,
            )
            .unwrap();
        assert!(!rec.timed_out);
    }

    #[test]
    fn contract_checker_flags_merges() {
        let a = Point::<Q>::from_integers(0, 0);
        let b = Point::<Q>::from_integers(1, 0);
        let before = Configuration::new(vec![a.clone(), b.clone()]).unwrap();
        let merged = Configuration::new(vec![b.clone(), b.clone()]).unwrap();
        assert!(check_movement_contract(&before, &merged).is_err());
        let swapped = Configuration::new(vec![b, a]).unwrap();
        assert!(check_movement_contract(&before, &swapped).is_ok());
    }
}
