//! Destination functions of canonical scattering protocols.
//!
//! A protocol only decides *how many* candidate destinations a robot has
//! (and, for multiset variants, their weights). Where those candidates lie is
//! fixed by the safe-region lattice in [`crate::geometry`], which is what keeps
//! robots from different points from ever colliding.

pub mod ffunction;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use thiserror::Error;

use crate::geometry::{destination_at, GeometryError, GridLayout, Point, SafeRegion};
use crate::scalar::Scalar;
use crate::scheduler::DetectionMode;

pub use ffunction::{
    f_from_g, f_inv_ackermann, f_loglog, f_logstar, FFunction, FFunctionError, FromG,
    InverseAckermann, LogLog, LogStar,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("protocol {protocol} requires {required} multiplicity detection")]
    MissingDetection {
        protocol: String,
        required: &'static str,
    },
    #[error("unknown protocol {0:?}")]
    UnknownProtocol(String),
    #[error(transparent)]
    FFunction(#[from] FFunctionError),
}

/// What a robot observes, filtered by the active detection mode.
///
/// Only the fields the mode grants are `Some`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProtocolView<'a, T> {
    /// U(C) in canonical order.
    pub distinct_points: &'a [Point<T>],
    /// Weak global: which points hold more than one robot.
    pub multiplicity_flags: Option<&'a BTreeMap<Point<T>, bool>>,
    /// Weak local: whether the robot's own point holds more than one robot.
    pub own_flag: Option<bool>,
    /// Strong local: robots at the robot's own point.
    pub own_count: Option<usize>,
    /// Strong global: robots at every point.
    pub full_counts: Option<&'a BTreeMap<Point<T>, usize>>,
    pub self_position: &'a Point<T>,
}

impl<'a, T: Scalar> ProtocolView<'a, T> {
    /// |U(C)|.
    pub fn u(&self) -> usize {
        self.distinct_points.len()
    }

    /// Robots at the robot's own point, if the view reveals it.
    pub fn known_own_count(&self) -> Option<usize> {
        self.own_count.or_else(|| {
            self.full_counts
                .and_then(|c| c.get(self.self_position).copied())
        })
    }

    /// Total number of robots, known only with strong global detection.
    pub fn known_total(&self) -> Option<usize> {
        self.full_counts.map(|c| c.values().sum())
    }

    /// Whether the robot can tell that it is alone at its point.
    pub fn alone(&self) -> Option<bool> {
        if let Some(c) = self.known_own_count() {
            return Some(c == 1);
        }
        if let Some(flag) = self.own_flag {
            return Some(!flag);
        }
        self.multiplicity_flags
            .and_then(|flags| flags.get(self.self_position))
            .map(|multi| !multi)
    }
}

/// Minimum detection a protocol needs to compute its destination count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetectionRequirement {
    Nothing,
    StrongLocal,
    StrongGlobal,
}

impl DetectionRequirement {
    pub fn satisfied_by(self, mode: DetectionMode) -> bool {
        match self {
            DetectionRequirement::Nothing => true,
            DetectionRequirement::StrongLocal => {
                matches!(
                    mode,
                    DetectionMode::StrongLocal | DetectionMode::StrongGlobal
                )
            }
            DetectionRequirement::StrongGlobal => mode == DetectionMode::StrongGlobal,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DetectionRequirement::Nothing => "no",
            DetectionRequirement::StrongLocal => "strong_local",
            DetectionRequirement::StrongGlobal => "strong_global",
        }
    }
}

/// The destination function `k_A(C, P)` of a canonical scattering protocol.
///
/// `k_of` must depend on the view alone, so every robot at a point computes
/// the same candidate set.
pub trait DestinationFunction<T: Scalar>: Send + Sync {
    fn id(&self) -> String;

    fn requirement(&self) -> DetectionRequirement {
        DetectionRequirement::Nothing
    }

    /// Number of distinct candidate destinations, at least 1.
    fn k_of(&self, view: &ProtocolView<'_, T>) -> Result<BigUint, ProtocolError>;

    /// Multiplicities of the candidates when the candidate set is a multiset.
    /// The drawn outcome is then a bucket index rather than a lattice index.
    fn weights_of(&self, _view: &ProtocolView<'_, T>) -> Option<Vec<u64>> {
        None
    }

    /// Point reached for `outcome`; `layout` is the lattice for `k_of(view)`.
    fn target(
        &self,
        _view: &ProtocolView<'_, T>,
        region: &SafeRegion<T>,
        layout: &GridLayout,
        outcome: &BigUint,
    ) -> Result<Point<T>, GeometryError> {
        layout.point(region, outcome)
    }

    /// Declared polynomial envelope of `k` for `n` robots observed on `u`
    /// points, when the protocol has one.
    fn k_bound(&self, _n: u64, _u: u64) -> Option<BigUint> {
        None
    }

    /// Round budget after which a run is declared timed out.
    fn default_max_rounds(&self, n: u64) -> u64 {
        let log_n = f64::from(u32::try_from(n.max(2)).unwrap_or(u32::MAX)).log2();
        let budget = 64.0 * log_n.ceil() * (log_n + 2.0).log2().ceil();
        (budget as u64).max(64)
    }
}

/// Two candidates, chosen uniformly.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dp2;

impl<T: Scalar> DestinationFunction<T> for Dp2 {
    fn id(&self) -> String {
        "dp2".into()
    }

    fn k_of(&self, _view: &ProtocolView<'_, T>) -> Result<BigUint, ProtocolError> {
        Ok(BigUint::from(2u32))
    }

    fn k_bound(&self, _n: u64, _u: u64) -> Option<BigUint> {
        Some(BigUint::from(2u32))
    }
}

/// Biased coin: stay with probability 3/4, move with probability 1/4,
/// realized as a uniform pick from the multiset `{stay, stay, stay, move}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dp2Biased;

/// Outcome index of the "move" candidate.
const BIASED_MOVE: u32 = 1;

impl<T: Scalar> DestinationFunction<T> for Dp2Biased {
    fn id(&self) -> String {
        "dp2-biased".into()
    }

    fn k_of(&self, _view: &ProtocolView<'_, T>) -> Result<BigUint, ProtocolError> {
        Ok(BigUint::from(2u32))
    }

    fn weights_of(&self, _view: &ProtocolView<'_, T>) -> Option<Vec<u64>> {
        Some(vec![3, 1])
    }

    /// Outcome 0 stays put. Outcome 1 goes to the second cell of the 2-point
    /// lattice, which never coincides with the region center.
    fn target(
        &self,
        view: &ProtocolView<'_, T>,
        region: &SafeRegion<T>,
        _layout: &GridLayout,
        outcome: &BigUint,
    ) -> Result<Point<T>, GeometryError> {
        if outcome == &BigUint::ZERO {
            Ok(view.self_position.clone())
        } else {
            destination_at(region, &BigUint::from(2u32), &BigUint::from(BIASED_MOVE))
        }
    }

    fn k_bound(&self, _n: u64, _u: u64) -> Option<BigUint> {
        Some(BigUint::from(2u32))
    }
}

/// `k = 2·n²`, with `n` read from strong global detection.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClementGlobal;

impl<T: Scalar> DestinationFunction<T> for ClementGlobal {
    fn id(&self) -> String {
        "clement-global".into()
    }

    fn requirement(&self) -> DetectionRequirement {
        DetectionRequirement::StrongGlobal
    }

    fn k_of(&self, view: &ProtocolView<'_, T>) -> Result<BigUint, ProtocolError> {
        let n = view
            .known_total()
            .ok_or_else(|| ProtocolError::MissingDetection {
                protocol: "clement-global".into(),
                required: DetectionRequirement::StrongGlobal.label(),
            })?;
        Ok(BigUint::from(n) * n * 2u32)
    }

    fn k_bound(&self, n: u64, _u: u64) -> Option<BigUint> {
        Some(BigUint::from(n) * n * 2u32)
    }
}

/// `k = 2·|P|²`, with `|P|` the robot's own multiplicity.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClementLocal;

impl<T: Scalar> DestinationFunction<T> for ClementLocal {
    fn id(&self) -> String {
        "clement-local".into()
    }

    fn requirement(&self) -> DetectionRequirement {
        DetectionRequirement::StrongLocal
    }

    fn k_of(&self, view: &ProtocolView<'_, T>) -> Result<BigUint, ProtocolError> {
        let m = view
            .known_own_count()
            .ok_or_else(|| ProtocolError::MissingDetection {
                protocol: "clement-local".into(),
                required: DetectionRequirement::StrongLocal.label(),
            })?;
        Ok(BigUint::from(m) * m * 2u32)
    }

    fn k_bound(&self, n: u64, _u: u64) -> Option<BigUint> {
        Some(BigUint::from(n) * n * 2u32)
    }
}

/// Default value of the lemma constant `𝒩` used by [`SaF`].
pub const DEFAULT_SCRIPT_N: u64 = 2;

/// `k = max(8·𝒩³, 16·x⁴, u³)` with `u = |U(C)|` and `x = f⁻¹(f(u) + 1)`.
pub fn sa_f_k(f: &dyn FFunction, u: u64, script_n: u64) -> Result<BigUint, FFunctionError> {
    let x = f.inverse(f.eval(u) + 1)?;
    let floor = BigUint::from(script_n).pow(3u32) * 8u32;
    let spread = x.pow(4u32) * 16u32;
    let cube = BigUint::from(u).pow(3u32);
    Ok(floor.max(spread).max(cube))
}

/// Scattering without any multiplicity detection, converging in `O(f(n))`
/// expected rounds.
#[derive(Clone)]
pub struct SaF {
    f: Arc<dyn FFunction>,
    script_n: u64,
}

impl SaF {
    pub fn new(f: Arc<dyn FFunction>, script_n: u64) -> Self {
        SaF { f, script_n }
    }

    pub fn f(&self) -> &dyn FFunction {
        self.f.as_ref()
    }

    pub fn script_n(&self) -> u64 {
        self.script_n
    }
}

impl fmt::Debug for SaF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SaF")
            .field("f", &self.f.name())
            .field("script_n", &self.script_n)
            .finish()
    }
}

impl<T: Scalar> DestinationFunction<T> for SaF {
    fn id(&self) -> String {
        format!("sa:{}", self.f.name())
    }

    fn k_of(&self, view: &ProtocolView<'_, T>) -> Result<BigUint, ProtocolError> {
        Ok(sa_f_k(self.f.as_ref(), view.u() as u64, self.script_n)?)
    }

    /// Only `loglog` has a polynomial envelope. With integer floors
    /// `x = f⁻¹(f(u)+1) < u⁴` for `u ≥ 4`, and `x = 15` below that, so
    /// `k ≤ max(8𝒩³, 16·15⁴, 16·u¹⁶)`.
    fn k_bound(&self, _n: u64, u: u64) -> Option<BigUint> {
        if self.f.name() != "loglog" {
            return None;
        }
        let floor = BigUint::from(self.script_n).pow(3u32) * 8u32;
        let small = BigUint::from(16u32 * 15u32.pow(4));
        let poly = BigUint::from(u).pow(16u32) * 16u32;
        Some(floor.max(small).max(poly))
    }

    fn default_max_rounds(&self, n: u64) -> u64 {
        64 * (2 * self.f.eval(n) + 8)
    }
}

/// Protocol names accepted by [`parse_protocol`].
pub const PROTOCOL_NAMES: [&str; 7] = [
    "dp2",
    "dp2-biased",
    "clement-global",
    "clement-local",
    "sa:loglog",
    "sa:logstar",
    "sa:invack",
];

/// Builds a protocol from its command-line name.
pub fn parse_protocol<T: Scalar>(
    name: &str,
    script_n: u64,
) -> Result<Box<dyn DestinationFunction<T>>, ProtocolError> {
    Ok(match name {
        "dp2" => Box::new(Dp2),
        "dp2-biased" => Box::new(Dp2Biased),
        "clement-global" => Box::new(ClementGlobal),
        "clement-local" => Box::new(ClementLocal),
        "sa:loglog" => Box::new(SaF::new(Arc::new(LogLog), script_n)),
        "sa:logstar" => Box::new(SaF::new(Arc::new(LogStar), script_n)),
        "sa:invack" => Box::new(SaF::new(Arc::new(InverseAckermann), script_n)),
        other => return Err(ProtocolError::UnknownProtocol(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::ToPrimitive;

    type P = Point<BigRational>;

    fn points(n: i64) -> Vec<P> {
        (0..n).map(|i| Point::from_integers(i, 0)).collect()
    }

    fn bare_view<'a>(pts: &'a [P]) -> ProtocolView<'a, BigRational> {
        ProtocolView {
            distinct_points: pts,
            multiplicity_flags: None,
            own_flag: None,
            own_count: None,
            full_counts: None,
            self_position: &pts[0],
        }
    }

    #[test]
    fn dp2_has_two_candidates() {
        let pts = points(3);
        let v = bare_view(&pts);
        assert_eq!(
            DestinationFunction::<BigRational>::k_of(&Dp2, &v).unwrap(),
            BigUint::from(2u32)
        );
    }

    #[test]
    fn biased_targets() {
        let pts = points(1);
        let v = bare_view(&pts);
        let region = SafeRegion::solo(pts[0].clone());
        let k = GridLayout::new(&BigUint::from(2u32)).unwrap();
        assert_eq!(Dp2Biased.weights_of(&v), Some(vec![3, 1]));
        assert_eq!(
            Dp2Biased.target(&v, &region, &k, &BigUint::ZERO).unwrap(),
            pts[0]
        );
        let moved = Dp2Biased
            .target(&v, &region, &k, &BigUint::from(1u32))
            .unwrap();
        assert_ne!(moved, pts[0]);
        assert!(region.contains(&moved));
    }

    #[test]
    fn clement_global_needs_counts() {
        let pts = points(2);
        let v = bare_view(&pts);
        assert!(matches!(
            DestinationFunction::<BigRational>::k_of(&ClementGlobal, &v),
            Err(ProtocolError::MissingDetection { .. })
        ));
        let counts: BTreeMap<P, usize> = [(pts[0].clone(), 6), (pts[1].clone(), 4)].into();
        let v = ProtocolView {
            full_counts: Some(&counts),
            ..v
        };
        assert_eq!(ClementGlobal.k_of(&v).unwrap(), BigUint::from(200u32));
        let one = points(1);
        let counts: BTreeMap<P, usize> = [(one[0].clone(), 1)].into();
        let v = ProtocolView {
            full_counts: Some(&counts),
            ..bare_view(&one)
        };
        assert_eq!(ClementGlobal.k_of(&v).unwrap(), BigUint::from(2u32));
    }

    #[test]
    fn clement_local_uses_own_count() {
        let pts = points(2);
        let v = ProtocolView {
            own_count: Some(5),
            ..bare_view(&pts)
        };
        assert_eq!(ClementLocal.k_of(&v).unwrap(), BigUint::from(50u32));
        let v = ProtocolView {
            own_count: Some(1),
            ..bare_view(&pts)
        };
        assert_eq!(ClementLocal.k_of(&v).unwrap(), BigUint::from(2u32));
        assert!(DestinationFunction::<BigRational>::k_of(&ClementLocal, &bare_view(&pts)).is_err());
    }

    #[test]
    fn sa_loglog_destination_counts() {
        // u = 4: f(4) = 1, x = f⁻¹(2) = 255, k = 16·255⁴.
        assert_eq!(
            sa_f_k(&LogLog, 4, 2).unwrap().to_u64(),
            Some(67_652_010_000)
        );
        // u = 1: f(1) = 0, x = f⁻¹(1) = 15, k = 16·15⁴.
        assert_eq!(sa_f_k(&LogLog, 1, 2).unwrap().to_u64(), Some(810_000));
        // the 8𝒩³ floor takes over for large 𝒩
        assert_eq!(sa_f_k(&LogLog, 1, 100).unwrap().to_u64(), Some(8_000_000));
        for u in [1u64, 2, 3, 5, 17, 300, 4096] {
            let k = sa_f_k(&LogLog, u, 2).unwrap();
            assert!(k >= BigUint::from(u).pow(3u32));
            assert!(k > BigUint::from(16u32));
        }
    }

    #[test]
    fn sa_invack_unrepresentable_for_many_points() {
        assert_eq!(
            sa_f_k(&InverseAckermann, 3, 2).unwrap(),
            BigUint::from(16u64 * 7u64.pow(4))
        );
        assert!(sa_f_k(&InverseAckermann, 62, 2).is_err());
    }

    #[test]
    fn alone_from_each_mode() {
        let pts = points(2);
        let base = bare_view(&pts);
        assert_eq!(base.alone(), None);
        assert_eq!(
            ProtocolView {
                own_flag: Some(false),
                ..base
            }
            .alone(),
            Some(true)
        );
        assert_eq!(
            ProtocolView {
                own_count: Some(3),
                ..base
            }
            .alone(),
            Some(false)
        );
        let flags: BTreeMap<P, bool> = [(pts[0].clone(), false), (pts[1].clone(), true)].into();
        assert_eq!(
            ProtocolView {
                multiplicity_flags: Some(&flags),
                ..base
            }
            .alone(),
            Some(true)
        );
    }

    #[test]
    fn parse_all_names() {
        for name in PROTOCOL_NAMES {
            let p = parse_protocol::<BigRational>(name, 2).unwrap();
            assert_eq!(p.id(), name);
        }
        assert!(matches!(
            parse_protocol::<BigRational>("sa:nope", 2),
            Err(ProtocolError::UnknownProtocol(_))
        ));
    }

    #[test]
    fn requirements() {
        assert!(
            !DestinationFunction::<BigRational>::requirement(&ClementGlobal)
                .satisfied_by(DetectionMode::None)
        );
        assert!(DetectionRequirement::StrongLocal.satisfied_by(DetectionMode::StrongGlobal));
        assert!(!DetectionRequirement::StrongLocal.satisfied_by(DetectionMode::WeakGlobal));
    }
}
