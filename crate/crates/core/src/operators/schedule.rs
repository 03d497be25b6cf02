//! Piecewise control waveforms and the schedules built from them.
//!
//! A [`Waveform`] is a contiguous list of typed segments starting at `t = 0`,
//! followed by a constant `tail` that holds for all later times. Evaluation
//! inside a segment is exact; at a breakpoint the left limit is used, so a
//! segment owns its right end point.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::matrix::OperatorMatrix;
use crate::error::{FlyqError, Result};
use crate::quad;

/// Number of decay lifetimes appended after the last breakpoint when no
/// horizon is given.
pub const DEFAULT_DECAY_LIFETIMES: f64 = 10.0;

const TIME_TOL: f64 = 1e-12;

/// Value type carried by a waveform: real (`f64`) or complex (`C64`).
pub trait WaveValue:
    Copy + PartialEq + std::fmt::Debug + Send + Sync + Serialize + for<'de> Deserialize<'de> + 'static
{
    fn zero() -> Self;
    fn scale(self, s: f64) -> Self;
    fn add(self, rhs: Self) -> Self;
    fn abs(self) -> f64;
    fn is_finite(self) -> bool;
}

impl WaveValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl WaveValue for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
#[serde(bound = "V: WaveValue")]
pub enum Segment<V: WaveValue> {
    Const { start: f64, end: f64, value: V },
    Linear { start: f64, end: f64, from: V, to: V },
    /// `amplitude · exp(−rate · (t − start))`
    Exp { start: f64, end: f64, amplitude: V, rate: f64 },
    /// `amplitude · exp(−(t − center)² / (2 width²))`
    Gaussian { start: f64, end: f64, amplitude: V, center: f64, width: f64 },
    /// Uniformly spaced samples covering `[start, end]` end points included,
    /// linearly interpolated.
    Samples { start: f64, end: f64, values: Vec<V> },
}

impl<V: WaveValue> Segment<V> {
    pub fn start(&self) -> f64 {
        match *self {
            Segment::Const { start, .. }
            | Segment::Linear { start, .. }
            | Segment::Exp { start, .. }
            | Segment::Gaussian { start, .. }
            | Segment::Samples { start, .. } => start,
        }
    }

    pub fn end(&self) -> f64 {
        match *self {
            Segment::Const { end, .. }
            | Segment::Linear { end, .. }
            | Segment::Exp { end, .. }
            | Segment::Gaussian { end, .. }
            | Segment::Samples { end, .. } => end,
        }
    }

    pub fn eval(&self, t: f64) -> V {
        match self {
            Segment::Const { value, .. } => *value,
            Segment::Linear { start, end, from, to } => {
                let s = ((t - start) / (end - start)).clamp(0.0, 1.0);
                from.scale(1.0 - s).add(to.scale(s))
            }
            Segment::Exp { start, amplitude, rate, .. } => amplitude.scale((-rate * (t - start)).exp()),
            Segment::Gaussian { amplitude, center, width, .. } => {
                let x = (t - center) / width;
                amplitude.scale((-0.5 * x * x).exp())
            }
            Segment::Samples { start, end, values } => {
                let n = values.len() - 1;
                let pos = ((t - start) / (end - start)).clamp(0.0, 1.0) * n as f64;
                let k = (pos.floor() as usize).min(n - 1);
                let s = pos - k as f64;
                values[k].scale(1.0 - s).add(values[k + 1].scale(s))
            }
        }
    }

    /// `∫_a^b` of the segment's formula; exact for all but the Gaussian,
    /// which uses composite Gauss–Legendre.
    pub fn integral(&self, a: f64, b: f64) -> V {
        if b <= a {
            return V::zero();
        }
        match self {
            Segment::Const { value, .. } => value.scale(b - a),
            Segment::Linear { .. } => self.eval(a).add(self.eval(b)).scale(0.5 * (b - a)),
            Segment::Exp { start, amplitude, rate, .. } => {
                if rate.abs() * (b - a) < 1e-8 {
                    amplitude.scale((-rate * (a - start)).exp() * (b - a))
                } else {
                    let fa = (-rate * (a - start)).exp();
                    let fb = (-rate * (b - start)).exp();
                    amplitude.scale((fa - fb) / rate)
                }
            }
            Segment::Gaussian { amplitude, center, width, .. } => {
                let f = |t: f64| {
                    let x = (t - center) / width;
                    (-0.5 * x * x).exp()
                };
                amplitude.scale(quad::integrate(f, a, b, 0.25 * width))
            }
            Segment::Samples { start, end, values } => {
                let n = values.len() - 1;
                let h = (end - start) / n as f64;
                let node = |k: usize| start + h * k as f64;
                let ka = (((a - start) / h).floor().max(0.0) as usize).min(n - 1);
                let kb = (((b - start) / h).ceil().max(1.0) as usize).min(n);
                let mut acc = V::zero();
                for k in ka..kb {
                    let lo = node(k).max(a);
                    let hi = node(k + 1).min(b);
                    if hi > lo {
                        acc = acc.add(self.eval(lo).add(self.eval(hi)).scale(0.5 * (hi - lo)));
                    }
                }
                acc
            }
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match self {
            Segment::Const { value, .. } => value.abs(),
            Segment::Linear { from, to, .. } => from.abs().max(to.abs()),
            Segment::Exp { start, end, amplitude, rate } => {
                amplitude.abs() * (-rate * (end - start)).exp().max(1.0)
            }
            Segment::Gaussian { start, end, center, .. } => {
                let peak = center.clamp(*start, *end);
                self.eval(peak).abs()
            }
            Segment::Samples { values, .. } => values.iter().map(|v| v.abs()).fold(0.0, f64::max),
        }
    }

    fn check(&self) -> Result<()> {
        let (start, end) = (self.start(), self.end());
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(FlyqError::InvalidSchedule(format!("segment [{start}, {end}] is empty or not finite")));
        }
        let finite = match self {
            Segment::Const { value, .. } => value.is_finite(),
            Segment::Linear { from, to, .. } => from.is_finite() && to.is_finite(),
            Segment::Exp { amplitude, rate, .. } => amplitude.is_finite() && rate.is_finite(),
            Segment::Gaussian { amplitude, center, width, .. } => {
                amplitude.is_finite() && center.is_finite() && width.is_finite() && *width > 0.0
            }
            Segment::Samples { values, .. } => {
                if values.len() < 2 {
                    return Err(FlyqError::InvalidSchedule("samples segment needs at least 2 values".into()));
                }
                values.iter().all(|v| v.is_finite())
            }
        };
        if !finite {
            return Err(FlyqError::InvalidSchedule(format!("segment [{start}, {end}] has non-finite parameters")));
        }
        Ok(())
    }
}

impl Segment<f64> {
    /// Infimum of the segment's values over its interval.
    pub fn inf(&self) -> f64 {
        match self {
            Segment::Const { value, .. } => *value,
            Segment::Linear { from, to, .. } => from.min(*to),
            Segment::Exp { start, end, .. } => self.eval(*start).min(self.eval(*end)),
            Segment::Gaussian { start, end, .. } => self.eval(*start).min(self.eval(*end)),
            Segment::Samples { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, bound = "V: WaveValue")]
enum WaveformRepr<V: WaveValue> {
    Constant(V),
    Segments {
        segments: Vec<Segment<V>>,
        #[serde(default)]
        tail: Option<V>,
    },
}

/// Contiguous segments from `t = 0` followed by a constant tail.
///
/// Without an explicit tail the waveform holds the last segment's end value.
/// Deserializes from either a bare constant or `{segments, tail}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WaveformRepr<V>", into = "WaveformRepr<V>", bound = "V: WaveValue")]
pub struct Waveform<V: WaveValue> {
    segments: Vec<Segment<V>>,
    tail: V,
}

impl<V: WaveValue> TryFrom<WaveformRepr<V>> for Waveform<V> {
    type Error = FlyqError;

    fn try_from(repr: WaveformRepr<V>) -> Result<Self> {
        match repr {
            WaveformRepr::Constant(v) => {
                if !v.is_finite() {
                    return Err(FlyqError::InvalidSchedule("non-finite constant waveform".into()));
                }
                Ok(Self::constant(v))
            }
            WaveformRepr::Segments { segments, tail } => Self::new(segments, tail),
        }
    }
}

impl<V: WaveValue> From<Waveform<V>> for WaveformRepr<V> {
    fn from(w: Waveform<V>) -> Self {
        if w.segments.is_empty() {
            WaveformRepr::Constant(w.tail)
        } else {
            WaveformRepr::Segments { segments: w.segments, tail: Some(w.tail) }
        }
    }
}

impl<V: WaveValue> Waveform<V> {
    pub fn constant(value: V) -> Self {
        Self { segments: Vec::new(), tail: value }
    }

    pub fn zero() -> Self {
        Self::constant(V::zero())
    }

    /// Validates contiguity (first segment starts at 0, no gaps, no
    /// overlaps) and finiteness.
    pub fn new(segments: Vec<Segment<V>>, tail: Option<V>) -> Result<Self> {
        let mut cursor = 0.0;
        for (k, seg) in segments.iter().enumerate() {
            seg.check()?;
            if (seg.start() - cursor).abs() > TIME_TOL * (1.0 + cursor.abs()) {
                let what = if seg.start() < cursor { "overlaps" } else { "leaves a gap before" };
                return Err(FlyqError::InvalidSchedule(format!(
                    "segment {k} starting at {} {what} t = {cursor}",
                    seg.start()
                )));
            }
            cursor = seg.end();
        }
        let tail = match (tail, segments.last()) {
            (Some(v), _) => v,
            (None, Some(last)) => last.eval(last.end()),
            (None, None) => V::zero(),
        };
        if !tail.is_finite() {
            return Err(FlyqError::InvalidSchedule("non-finite tail value".into()));
        }
        Ok(Self { segments, tail })
    }

    /// A single `[0, duration]` constant window followed by `after`.
    pub fn rectangular(value: V, duration: f64, after: V) -> Result<Self> {
        Self::new(vec![Segment::Const { start: 0.0, end: duration, value }], Some(after))
    }

    pub fn segments(&self) -> &[Segment<V>] {
        &self.segments
    }

    pub fn tail(&self) -> V {
        self.tail
    }

    /// End of the last segment (0 for a constant waveform).
    pub fn support_end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end())
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.segments.iter().map(|s| s.start()).collect();
        if let Some(last) = self.segments.last() {
            pts.push(last.end());
        }
        pts
    }

    fn locate(&self, t: f64) -> Option<&Segment<V>> {
        if self.segments.is_empty() || t > self.support_end() {
            return None;
        }
        let k = self.segments.partition_point(|s| s.end() < t);
        self.segments.get(k)
    }

    pub fn eval(&self, t: f64) -> V {
        match self.locate(t) {
            Some(seg) => seg.eval(t),
            None => self.tail,
        }
    }

    /// `∫_a^b` of the waveform, `0 ≤ a ≤ b`.
    pub fn integral(&self, a: f64, b: f64) -> V {
        if b <= a {
            return V::zero();
        }
        let mut acc = V::zero();
        for seg in &self.segments {
            let lo = a.max(seg.start());
            let hi = b.min(seg.end());
            if hi > lo {
                acc = acc.add(seg.integral(lo, hi));
            }
        }
        let lo = a.max(self.support_end());
        if b > lo {
            acc = acc.add(self.tail.scale(b - lo));
        }
        acc
    }

    pub fn sup_abs(&self) -> f64 {
        self.segments.iter().map(|s| s.sup_abs()).fold(self.tail.abs(), f64::max)
    }
}

impl Waveform<f64> {
    pub fn inf(&self) -> f64 {
        self.segments.iter().map(|s| s.inf()).fold(self.tail, f64::min)
    }
}

/// Instantaneous unitary kick applied at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Impulse {
    pub time: f64,
    pub unitary: OperatorMatrix,
}

impl Impulse {
    pub fn new(time: f64, unitary: OperatorMatrix) -> Result<Self> {
        if !time.is_finite() || time < 0.0 {
            return Err(FlyqError::InvalidSchedule(format!("impulse time {time} must be finite and ≥ 0")));
        }
        let defect = (&unitary.adjoint() * &unitary).max_abs_diff(&OperatorMatrix::identity(unitary.dim()));
        if !(defect < 1e-10) {
            return Err(FlyqError::InvalidSchedule(format!(
                "impulse at t = {time} is not unitary (|U†U − I| = {defect:.2e})"
            )));
        }
        Ok(Self { time, unitary })
    }

    /// Hard pulse `u(t) = area · δ(t − time)` on a qubit:
    /// `exp(−i (area σ₊ + area* σ₋) / 2)`.
    pub fn hard_pulse(time: f64, area: C64) -> Result<Self> {
        if !(area.re.is_finite() && area.im.is_finite()) {
            return Err(FlyqError::InvalidSchedule("hard pulse area must be finite".into()));
        }
        let i = C64::new(0.0, 1.0);
        let zero = C64::new(0.0, 0.0);
        // index 0 = |0⟩, so σ₊ = |1⟩⟨0| sits below the diagonal
        let generator = OperatorMatrix::from_rows(&[vec![zero, area.conj() * 0.5], vec![area * 0.5, zero]])?;
        Self::new(time, generator.scale(-i).expm())
    }

    /// Rotation `exp(−i θ σ_x / 2)`; a π rotation is the hard π pulse.
    pub fn rotation_x(time: f64, angle: f64) -> Result<Self> {
        Self::hard_pulse(time, C64::new(angle, 0.0))
    }
}

/// Classical controls of a driven, tunably coupled qubit over `[0, t_final]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    drive: Waveform<C64>,
    detuning: Waveform<f64>,
    coupling: Waveform<f64>,
    impulses: Vec<Impulse>,
    t_final: f64,
}

impl ControlSchedule {
    /// Validates the schedule. Without `t_final` the horizon defaults to the
    /// last breakpoint plus ten lifetimes of the final coupling rate.
    pub fn new(
        drive: Waveform<C64>,
        detuning: Waveform<f64>,
        coupling: Waveform<f64>,
        impulses: Vec<Impulse>,
        t_final: Option<f64>,
    ) -> Result<Self> {
        if coupling.inf() < 0.0 {
            return Err(FlyqError::InvalidSchedule(format!(
                "coupling rate must be ≥ 0 (minimum {})",
                coupling.inf()
            )));
        }
        for w in impulses.windows(2) {
            if !(w[1].time > w[0].time) {
                return Err(FlyqError::InvalidSchedule(format!(
                    "impulse times must be strictly increasing ({} then {})",
                    w[0].time, w[1].time
                )));
            }
        }
        for imp in &impulses {
            if imp.unitary.dim() != 2 {
                return Err(FlyqError::DimensionMismatch { expected: 2, found: imp.unitary.dim() });
            }
        }
        let mut schedule = Self { drive, detuning, coupling, impulses, t_final: 0.0 };
        let t_final = match t_final {
            Some(t) => t,
            None => default_t_final(schedule.last_breakpoint(), schedule.coupling.tail())?,
        };
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(FlyqError::InvalidSchedule(format!("horizon {t_final} must be positive")));
        }
        if let Some(imp) = schedule.impulses.last() {
            if imp.time > t_final {
                return Err(FlyqError::InvalidSchedule(format!(
                    "impulse at {} lies outside the horizon [0, {t_final}]",
                    imp.time
                )));
            }
        }
        schedule.t_final = t_final;
        Ok(schedule)
    }

    /// Undriven, resonant qubit with constant coupling.
    pub fn idle(gamma: f64, t_final: Option<f64>) -> Result<Self> {
        Self::new(Waveform::zero(), Waveform::zero(), Waveform::constant(gamma), Vec::new(), t_final)
    }

    pub fn with_t_final(mut self, t_final: f64) -> Result<Self> {
        if let Some(imp) = self.impulses.last() {
            if imp.time > t_final {
                return Err(FlyqError::InvalidSchedule(format!(
                    "impulse at {} lies outside the horizon [0, {t_final}]",
                    imp.time
                )));
            }
        }
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(FlyqError::InvalidSchedule(format!("horizon {t_final} must be positive")));
        }
        self.t_final = t_final;
        Ok(self)
    }

    pub fn drive(&self) -> &Waveform<C64> {
        &self.drive
    }
    pub fn detuning(&self) -> &Waveform<f64> {
        &self.detuning
    }
    pub fn coupling(&self) -> &Waveform<f64> {
        &self.coupling
    }
    pub fn impulses(&self) -> &[Impulse] {
        &self.impulses
    }
    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn last_breakpoint(&self) -> f64 {
        let imp = self.impulses.last().map_or(0.0, |i| i.time);
        self.drive
            .support_end()
            .max(self.detuning.support_end())
            .max(self.coupling.support_end())
            .max(imp)
    }

    /// Segment boundaries and impulse times inside the horizon, sorted and
    /// deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0, self.t_final];
        pts.extend(self.drive.breakpoints());
        pts.extend(self.detuning.breakpoints());
        pts.extend(self.coupling.breakpoints());
        pts.extend(self.impulses.iter().map(|i| i.time));
        normalize_breakpoints(pts, self.t_final)
    }

    /// Largest control magnitude: `max(|u|, γ, |ε|)` over the schedule.
    pub fn rate_bound(&self) -> f64 {
        self.drive.sup_abs().max(self.detuning.sup_abs()).max(self.coupling.sup_abs())
    }
}

/// `last_breakpoint + 10/γ`, or an error if nothing decays afterwards.
pub fn default_t_final(last_breakpoint: f64, decay_rate: f64) -> Result<f64> {
    if decay_rate > 0.0 {
        Ok(last_breakpoint + DEFAULT_DECAY_LIFETIMES / decay_rate)
    } else if last_breakpoint > 0.0 {
        Ok(last_breakpoint)
    } else {
        Err(FlyqError::InvalidSchedule(
            "no horizon given and the coupling vanishes after the last breakpoint".into(),
        ))
    }
}

pub(crate) fn normalize_breakpoints(mut pts: Vec<f64>, t_final: f64) -> Vec<f64> {
    pts.retain(|&t| (0.0..=t_final).contains(&t));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= TIME_TOL * (1.0 + b.abs()));
    pts
}
