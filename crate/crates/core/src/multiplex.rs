//! Frequency-shift geometries and the multiplexed spectral function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Issue, Result};
use crate::spectral::{Evaluator, SpectralPoint};

/// Frequency shift applied to one ensemble's signal and idler, in Γ₃ units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Shift {
    pub ds: f64,
    pub di: f64,
}

impl Shift {
    pub const fn new(ds: f64, di: f64) -> Self {
        Self { ds, di }
    }
}

impl From<[f64; 2]> for Shift {
    fn from([ds, di]: [f64; 2]) -> Self {
        Self { ds, di }
    }
}

impl From<Shift> for [f64; 2] {
    fn from(s: Shift) -> Self {
        [s.ds, s.di]
    }
}

/// Ordered shifts, one per multiplexed ensemble. Never empty; all entries finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ShiftSet(Vec<Shift>);

impl ShiftSet {
    pub fn new(shifts: Vec<Shift>) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::invalid("shifts", "at least one ensemble is required"));
        }
        let issues: Vec<_> = shifts
            .iter()
            .enumerate()
            .filter(|(_, s)| !(s.ds.is_finite() && s.di.is_finite()))
            .map(|(m, s)| Issue::new(format!("shifts[{m}]"), format!("non-finite shift ({}, {})", s.ds, s.di)))
            .collect();
        if issues.is_empty() {
            Ok(Self(shifts))
        } else {
            Err(Error::Validation(issues))
        }
    }

    /// A single unshifted ensemble.
    pub fn single() -> Self {
        Self(vec![Shift::new(0.0, 0.0)])
    }

    pub fn n_mp(&self) -> usize {
        self.0.len()
    }

    pub fn shifts(&self) -> &[Shift] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Shift> {
        self.0.iter()
    }

    pub fn concat(&self, other: &ShiftSet) -> ShiftSet {
        Self(self.0.iter().chain(&other.0).copied().collect())
    }

    /// Moves every ensemble by the same offset.
    pub fn translated(&self, ds: f64, di: f64) -> ShiftSet {
        Self(self.0.iter().map(|s| Shift::new(s.ds + ds, s.di + di)).collect())
    }

    /// Largest |shift| component, used for window checks.
    pub fn extent(&self) -> f64 {
        self.0.iter().map(|s| s.ds.abs().max(s.di.abs())).fold(0.0, f64::max)
    }
}

impl<'de> Deserialize<'de> for ShiftSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let shifts = Vec::<Shift>::deserialize(d)?;
        ShiftSet::new(shifts).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryFamily {
    /// δω_s = −δω_i along a line (energy-conserving axis).
    AntiCorrelation,
    /// δω_s = δω_i along a line.
    Correlation,
    /// Shifts on the signal axis only.
    SignalAxis,
    /// Shifts on the idler axis only.
    IdlerAxis,
    /// Square with vertices on the ± axes ('+'), long diagonal dq.
    PlusFour,
    /// Square with vertices on the diagonals ('×'), long diagonal dq.
    CrossFour,
    /// Regular octagon, '+' ∪ '×', long diagonal dq.
    Octagon,
    /// Shifts given verbatim.
    Explicit,
}

impl GeometryFamily {
    pub const ALL: [GeometryFamily; 8] = [
        GeometryFamily::AntiCorrelation,
        GeometryFamily::Correlation,
        GeometryFamily::SignalAxis,
        GeometryFamily::IdlerAxis,
        GeometryFamily::PlusFour,
        GeometryFamily::CrossFour,
        GeometryFamily::Octagon,
        GeometryFamily::Explicit,
    ];

    /// Ensemble count implied by the family, if fixed.
    pub fn fixed_n_mp(self) -> Option<usize> {
        match self {
            GeometryFamily::PlusFour | GeometryFamily::CrossFour => Some(4),
            GeometryFamily::Octagon => Some(8),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GeometryFamily::AntiCorrelation => "anti_correlation",
            GeometryFamily::Correlation => "correlation",
            GeometryFamily::SignalAxis => "signal_axis",
            GeometryFamily::IdlerAxis => "idler_axis",
            GeometryFamily::PlusFour => "plus_four",
            GeometryFamily::CrossFour => "cross_four",
            GeometryFamily::Octagon => "octagon",
            GeometryFamily::Explicit => "explicit",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl std::fmt::Display for GeometryFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Description of a multiplexing geometry, as found in the `geometry` config block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub family: GeometryFamily,
    #[serde(default)]
    pub dq: f64,
    /// Ensemble count for line families (default 2); must match for fixed families if given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_mp: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_shifts: Option<Vec<Shift>>,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self::line(GeometryFamily::AntiCorrelation, 0.0, 1)
    }
}

impl GeometrySpec {
    pub fn line(family: GeometryFamily, dq: f64, n_mp: usize) -> Self {
        Self { family, dq, n_mp: Some(n_mp), explicit_shifts: None }
    }

    pub fn shape(family: GeometryFamily, dq: f64) -> Self {
        Self { family, dq, n_mp: None, explicit_shifts: None }
    }

    pub fn explicit(shifts: Vec<Shift>) -> Self {
        Self { family: GeometryFamily::Explicit, dq: 0.0, n_mp: None, explicit_shifts: Some(shifts) }
    }

    pub fn with_dq(&self, dq: f64) -> Self {
        Self { dq, ..self.clone() }
    }

    pub fn n_mp(&self) -> usize {
        match (self.family.fixed_n_mp(), &self.explicit_shifts) {
            (Some(n), _) => n,
            (None, Some(shifts)) if self.family == GeometryFamily::Explicit => shifts.len(),
            _ => self.n_mp.unwrap_or(2),
        }
    }

    pub fn issues(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        if !self.dq.is_finite() || self.dq < 0.0 {
            issues.push(Issue::new("dq", format!("must be finite and nonnegative, got {}", self.dq)));
        }
        match (self.family.fixed_n_mp(), self.n_mp) {
            (_, Some(0)) => issues.push(Issue::new("n_mp", "must be at least 1")),
            (Some(required), Some(n)) if n != required => issues.push(Issue::new(
                "n_mp",
                format!("{} geometry places exactly {required} ensembles, got n_mp = {n}", self.family),
            )),
            _ => {}
        }
        if self.family == GeometryFamily::Explicit {
            match &self.explicit_shifts {
                None => issues.push(Issue::new("explicit_shifts", "required for the explicit family")),
                Some(shifts) => {
                    if shifts.is_empty() {
                        issues.push(Issue::new("explicit_shifts", "must list at least one shift"));
                    }
                    if let Some(n) = self.n_mp.filter(|&n| n != shifts.len()) {
                        issues.push(Issue::new(
                            "n_mp",
                            format!("n_mp = {n} disagrees with {} explicit shifts", shifts.len()),
                        ));
                    }
                    for (m, s) in shifts.iter().enumerate() {
                        if !(s.ds.is_finite() && s.di.is_finite()) {
                            issues.push(Issue::new(format!("explicit_shifts[{m}]"), "non-finite shift"));
                        }
                    }
                }
            }
        } else if self.explicit_shifts.is_some() {
            issues.push(Issue::new("explicit_shifts", format!("only allowed with the explicit family, not {}", self.family)));
        }
        issues
    }
}

/// Expands a geometry into per-ensemble shifts.
///
/// Line families are centered on the origin with neighbor spacing `dq`; the
/// square and octagon families place vertices at radius `dq/2`.
pub fn make_shifts(g: &GeometrySpec) -> Result<ShiftSet> {
    let issues = g.issues();
    if !issues.is_empty() {
        return Err(Error::Validation(issues));
    }
    let dq = g.dq;
    let shifts = match g.family {
        GeometryFamily::AntiCorrelation => line_offsets(g.n_mp(), dq).map(|o| Shift::new(o, -o)).collect(),
        GeometryFamily::Correlation => line_offsets(g.n_mp(), dq).map(|o| Shift::new(o, o)).collect(),
        GeometryFamily::SignalAxis => line_offsets(g.n_mp(), dq).map(|o| Shift::new(o, 0.0)).collect(),
        GeometryFamily::IdlerAxis => line_offsets(g.n_mp(), dq).map(|o| Shift::new(0.0, o)).collect(),
        GeometryFamily::PlusFour => polygon(dq / 2.0, 4, 0.0),
        GeometryFamily::CrossFour => polygon(dq / 2.0, 4, PI / 4.0),
        GeometryFamily::Octagon => polygon(dq / 2.0, 8, 0.0),
        GeometryFamily::Explicit => g.explicit_shifts.clone().unwrap_or_default(),
    };
    ShiftSet::new(shifts)
}

fn line_offsets(n: usize, dq: f64) -> impl Iterator<Item = f64> {
    let center = (n as f64 - 1.0) / 2.0;
    (0..n).map(move |m| (m as f64 - center) * dq)
}

/// `count` vertices at `radius`, counterclockwise from angle `phase`.
fn polygon(radius: f64, count: usize, phase: f64) -> Vec<Shift> {
    (0..count)
        .map(|k| {
            let angle = phase + 2.0 * PI * k as f64 / count as f64;
            let (sin, cos) = unit_direction(angle);
            Shift::new(radius * cos, radius * sin)
        })
        .collect()
}

/// Exact sin/cos at multiples of π/4 so axis and diagonal vertices come out symmetric.
fn unit_direction(angle: f64) -> (f64, f64) {
    let eighths = angle / (PI / 4.0);
    if (eighths - eighths.round()).abs() < 1e-12 {
        let k = (eighths.round() as i64).rem_euclid(8);
        const TABLE: [(f64, f64); 8] = [
            (0.0, 1.0),
            (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
            (1.0, 0.0),
            (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
            (0.0, -1.0),
            (-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
            (-1.0, 0.0),
            (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        ];
        TABLE[k as usize]
    } else {
        angle.sin_cos()
    }
}

/// Unnormalized multiplexed amplitude `Σ_m f_D(Δω_s + δω_s,m, Δω_i + δω_i,m)`.
pub fn f_multiplexed(evaluator: &Evaluator, p: SpectralPoint, shifts: &ShiftSet) -> Complex64 {
    shifts.iter().map(|s| evaluator.amplitude(p.shifted(s.ds, s.di))).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Model;
    use crate::spectral::f_doppler_closed;
    use proptest::prelude::*;

    fn sorted(set: &ShiftSet) -> Vec<(f64, f64)> {
        let mut v: Vec<_> = set.iter().map(|s| (s.ds, s.di)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v
    }

    #[test]
    fn anti_correlated_pair() {
        let s = make_shifts(&GeometrySpec::line(GeometryFamily::AntiCorrelation, 120.0, 2)).unwrap();
        assert_eq!(s.shifts(), &[Shift::new(-60.0, 60.0), Shift::new(60.0, -60.0)]);
    }

    #[test]
    fn two_ensemble_directions() {
        let dq = 120.0;
        let get = |f| make_shifts(&GeometrySpec::line(f, dq, 2)).unwrap();
        let corr = get(GeometryFamily::Correlation);
        assert!(corr.iter().all(|s| s.ds == s.di));
        assert_eq!((corr.shifts()[0].ds - corr.shifts()[1].ds).abs(), dq);
        let idler = get(GeometryFamily::IdlerAxis);
        assert!(idler.iter().all(|s| s.ds == 0.0));
        assert_eq!((idler.shifts()[0].di - idler.shifts()[1].di).abs(), dq);
        let signal = get(GeometryFamily::SignalAxis);
        assert!(signal.iter().all(|s| s.di == 0.0));
        assert_eq!((signal.shifts()[0].ds - signal.shifts()[1].ds).abs(), dq);
    }

    #[test]
    fn zero_spacing_collapses_every_family() {
        for family in GeometryFamily::ALL {
            if family == GeometryFamily::Explicit {
                continue;
            }
            let spec = match family.fixed_n_mp() {
                Some(_) => GeometrySpec::shape(family, 0.0),
                None => GeometrySpec::line(family, 0.0, 5),
            };
            let s = make_shifts(&spec).unwrap();
            assert_eq!(s.n_mp(), spec.n_mp());
            assert!(s.iter().all(|x| x.ds == 0.0 && x.di == 0.0), "{family}");
        }
    }

    #[test]
    fn octagon_is_regular() {
        let d = 40.0;
        let s = make_shifts(&GeometrySpec::shape(GeometryFamily::Octagon, d)).unwrap();
        assert_eq!(s.n_mp(), 8);
        let angles: Vec<f64> = s.iter().map(|x| x.di.atan2(x.ds)).collect();
        for (k, x) in s.iter().enumerate() {
            assert!((x.ds.hypot(x.di) - d / 2.0).abs() < 1e-12);
            let next = angles[(k + 1) % 8];
            let step = (next - angles[k]).rem_euclid(2.0 * PI);
            assert!((step - PI / 4.0).abs() < 1e-12);
        }
        // '+' ∪ '×'
        let plus = make_shifts(&GeometrySpec::shape(GeometryFamily::PlusFour, d)).unwrap();
        let cross = make_shifts(&GeometrySpec::shape(GeometryFamily::CrossFour, d)).unwrap();
        assert_eq!(sorted(&s), sorted(&plus.concat(&cross)));
    }

    #[test]
    fn squares_have_long_diagonal_dq() {
        for family in [GeometryFamily::PlusFour, GeometryFamily::CrossFour] {
            let s = make_shifts(&GeometrySpec::shape(family, 30.0)).unwrap();
            let a = s.shifts()[0];
            let c = s.shifts()[2];
            assert!(((a.ds - c.ds).hypot(a.di - c.di) - 30.0).abs() < 1e-12);
        }
        let cross = make_shifts(&GeometrySpec::shape(GeometryFamily::CrossFour, 30.0)).unwrap();
        assert!(cross.iter().all(|s| s.ds.abs() == s.di.abs()));
    }

    #[test]
    fn geometry_validation() {
        let mut g = GeometrySpec::shape(GeometryFamily::Octagon, 10.0);
        g.n_mp = Some(5);
        assert_eq!(g.issues()[0].path, "n_mp");
        assert!(make_shifts(&GeometrySpec { explicit_shifts: None, ..GeometrySpec::explicit(vec![]) }).is_err());
        assert!(make_shifts(&GeometrySpec::line(GeometryFamily::Correlation, -1.0, 2)).is_err());
        let explicit = make_shifts(&GeometrySpec::explicit(vec![Shift::new(1.0, 2.0)])).unwrap();
        assert_eq!(explicit.shifts(), &[Shift::new(1.0, 2.0)]);
    }

    #[test]
    fn geometry_json() {
        let g: GeometrySpec =
            serde_json::from_str(r#"{"family": "explicit", "explicit_shifts": [[1.5, -2.0], [0, 3]]}"#).unwrap();
        assert_eq!(g.n_mp(), 2);
        let g: GeometrySpec = serde_json::from_str(r#"{"family": "cross_four", "dq": 30}"#).unwrap();
        assert_eq!(make_shifts(&g).unwrap().n_mp(), 4);
        assert!(serde_json::from_str::<GeometrySpec>(r#"{"family": "hexagon"}"#).is_err());
    }

    #[test]
    fn single_unshifted_ensemble_is_the_doppler_function() {
        let model = Model::default();
        let ev = Evaluator::closed(model);
        for p in [SpectralPoint::new(0.0, 0.0), SpectralPoint::new(13.0, -40.0), SpectralPoint::new(-7.5, 2.0)] {
            assert_eq!(f_multiplexed(&ev, p, &ShiftSet::single()), f_doppler_closed(&model, p));
        }
    }

    #[test]
    fn coincident_copies_scale_linearly() {
        let ev = Evaluator::closed(Model::default());
        let s = make_shifts(&GeometrySpec::line(GeometryFamily::AntiCorrelation, 0.0, 3)).unwrap();
        let p = SpectralPoint::new(4.0, -9.0);
        let got = f_multiplexed(&ev, p, &s);
        let want = 3.0 * ev.amplitude(p);
        assert!((got - want).norm() <= 1e-15 * want.norm());
    }

    /// Normalized overlap of the two lobes of an anti-correlated pair.
    fn lobe_overlap(ev: &Evaluator, dq: f64) -> f64 {
        let n = 256;
        let h = 800.0 / (n - 1) as f64;
        let axis: Vec<f64> = (0..n).map(|k| -400.0 + k as f64 * h).collect();
        let (mut overlap, mut n1, mut n2) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
        for &s in &axis {
            for &i in &axis {
                let a = ev.amplitude(SpectralPoint::new(s + dq / 2.0, i - dq / 2.0));
                let b = ev.amplitude(SpectralPoint::new(s - dq / 2.0, i + dq / 2.0));
                overlap += a * b.conj();
                n1 += a.norm_sqr();
                n2 += b.norm_sqr();
            }
        }
        overlap.norm() / (n1 * n2).sqrt()
    }

    #[test]
    fn lobe_overlap_falls_with_separation() {
        // The Lorentzian idler wings keep physical lobes from ever being disjoint.
        let ev = Evaluator::closed(Model::default());
        let overlaps: Vec<f64> = [0.0, 30.0, 120.0, 240.0].map(|dq| lobe_overlap(&ev, dq)).to_vec();
        assert!((overlaps[0] - 1.0).abs() < 1e-12);
        assert!(overlaps.windows(2).all(|w| w[1] < w[0]), "{overlaps:?}");
        assert!(overlaps[3] > 1e-3, "{overlaps:?}");
    }

    fn arb_shift() -> impl Strategy<Value = Shift> {
        (-200.0f64..200.0, -200.0f64..200.0).prop_map(|(a, b)| Shift::new(a, b))
    }

    proptest! {
        #[test]
        fn superposition_is_linear(
            a in prop::collection::vec(arb_shift(), 1..4),
            b in prop::collection::vec(arb_shift(), 1..4),
            s in -300.0f64..300.0,
            i in -300.0f64..300.0,
        ) {
            let ev = Evaluator::closed(Model::default());
            let (a, b) = (ShiftSet::new(a).unwrap(), ShiftSet::new(b).unwrap());
            let p = SpectralPoint::new(s, i);
            let joint = f_multiplexed(&ev, p, &a.concat(&b));
            let split = f_multiplexed(&ev, p, &a) + f_multiplexed(&ev, p, &b);
            prop_assert!((joint - split).norm() <= 1e-14 * (joint.norm() + split.norm()) + 1e-300);
        }

        #[test]
        fn symmetric_families_are_inversion_invariant(dq in 0.0f64..300.0, n in 1usize..8, which in 0usize..7) {
            let family = GeometryFamily::ALL[which];
            let spec = match family.fixed_n_mp() {
                Some(_) => GeometrySpec::shape(family, dq),
                None => GeometrySpec::line(family, dq, n),
            };
            let s = make_shifts(&spec).unwrap();
            let flipped = ShiftSet::new(s.iter().map(|x| Shift::new(-x.ds, -x.di)).collect()).unwrap();
            let (mut a, mut b) = (sorted(&s), sorted(&flipped));
            for v in a.iter_mut().chain(b.iter_mut()) {
                // fold -0.0 into 0.0
                v.0 += 0.0;
                v.1 += 0.0;
            }
            prop_assert_eq!(a, b);
        }
    }
}
