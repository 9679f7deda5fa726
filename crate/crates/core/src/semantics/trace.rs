use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::logic::Duration;

/// Truth values of the atoms at one instant (or over one segment).
pub type Assignment = BTreeMap<String, bool>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("a trace needs at least one segment")]
    Empty,
    #[error("resolution must be positive")]
    ZeroResolution,
    #[error("horizon {horizon} must be positive and a multiple of the resolution {resolution}")]
    BadHorizon { horizon: Duration, resolution: Duration },
    #[error("first segment must start at 0, found {0}")]
    FirstNotZero(Duration),
    #[error("segment start {start} is not on the {resolution} grid")]
    OffGrid { start: Duration, resolution: Duration },
    #[error("segment start {start} does not come after {previous}")]
    NotIncreasing { previous: Duration, start: Duration },
    #[error("segment start {start} is not before the horizon {horizon}")]
    BeyondHorizon { start: Duration, horizon: Duration },
    #[error("segment at {start} does not assign atom `{atom}`")]
    MissingAtom { start: Duration, atom: String },
    #[error("sampling period {delta} is not a positive multiple of the resolution {resolution}")]
    ResolutionMismatch { delta: Duration, resolution: Duration },
}

/// A maximal stretch `[start, next start)` on which every atom is constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Duration,
    pub atoms: Assignment,
}

/// Piecewise-constant boolean signal over `[0, horizon]`.
///
/// Segments are right-open; the last one also covers the closing instant
/// `horizon`, so a sample at `t = horizon` is well defined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseTrace {
    resolution: Duration,
    horizon: Duration,
    segments: Vec<Segment>,
}

impl DenseTrace {
    pub fn new(resolution: Duration, horizon: Duration, segments: Vec<Segment>) -> Result<Self, TraceError> {
        if resolution.is_zero() {
            return Err(TraceError::ZeroResolution);
        }
        if horizon.is_zero() || !horizon.is_multiple_of(resolution) {
            return Err(TraceError::BadHorizon { horizon, resolution });
        }
        let first = segments.first().ok_or(TraceError::Empty)?;
        if !first.start.is_zero() {
            return Err(TraceError::FirstNotZero(first.start));
        }
        let names: BTreeSet<&String> = first.atoms.keys().collect();
        for (i, seg) in segments.iter().enumerate() {
            if !seg.start.is_multiple_of(resolution) {
                return Err(TraceError::OffGrid { start: seg.start, resolution });
            }
            if i > 0 && seg.start <= segments[i - 1].start {
                return Err(TraceError::NotIncreasing {
                    previous: segments[i - 1].start,
                    start: seg.start,
                });
            }
            if seg.start >= horizon {
                return Err(TraceError::BeyondHorizon { start: seg.start, horizon });
            }
            let here: BTreeSet<&String> = seg.atoms.keys().collect();
            if let Some(missing) = names.symmetric_difference(&here).next() {
                return Err(TraceError::MissingAtom {
                    start: seg.start,
                    atom: (*missing).clone(),
                });
            }
        }
        Ok(DenseTrace { resolution, horizon, segments })
    }

    /// Builds a trace where each atom is true exactly on the given right-open intervals.
    /// Interval endpoints must be on the resolution grid; intervals are clipped to the horizon.
    pub fn from_intervals(
        resolution: Duration,
        horizon: Duration,
        atoms: &[(&str, &[(Duration, Duration)])],
    ) -> Result<Self, TraceError> {
        let mut cuts: BTreeSet<Duration> = BTreeSet::from([Duration::ZERO]);
        for (_, intervals) in atoms {
            for &(a, b) in intervals.iter() {
                for t in [a, b] {
                    if t < horizon {
                        cuts.insert(t);
                    }
                }
            }
        }
        let segments = cuts
            .into_iter()
            .map(|start| {
                let values = atoms
                    .iter()
                    .map(|(name, intervals)| {
                        let on = intervals.iter().any(|&(a, b)| a <= start && start < b);
                        (name.to_string(), on)
                    })
                    .collect();
                Segment { start, atoms: values }
            })
            .collect();
        DenseTrace::new(resolution, horizon, segments)
    }

    pub fn resolution(&self) -> Duration {
        self.resolution
    }

    pub fn horizon(&self) -> Duration {
        self.horizon
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// End of segment `i` (the next start, or the horizon for the last one).
    pub fn segment_end(&self, i: usize) -> Duration {
        self.segments.get(i + 1).map_or(self.horizon, |s| s.start)
    }

    /// The assignment in force at time `t` (`0 <= t <= horizon`).
    pub fn value_at(&self, t: Duration) -> &Assignment {
        assert!(t <= self.horizon, "time {t} beyond horizon {}", self.horizon);
        let idx = self.segments.partition_point(|s| s.start <= t);
        &self.segments[idx - 1].atoms
    }

    pub fn atom_names(&self) -> impl Iterator<Item = &str> {
        self.segments[0].atoms.keys().map(String::as_str)
    }

    /// Splits every segment into resolution-sized pieces of `resolution / k`,
    /// leaving the signal itself unchanged.
    pub fn refine(&self, k: i64) -> DenseTrace {
        assert!(k >= 1);
        let fine = self.resolution / k;
        let mut segments = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            let end = self.segment_end(i);
            let mut t = seg.start;
            while t < end {
                segments.push(Segment {
                    start: t,
                    atoms: seg.atoms.clone(),
                });
                t = t + fine;
            }
        }
        DenseTrace {
            resolution: fine,
            horizon: self.horizon,
            segments,
        }
    }

    /// Merges adjacent segments that carry identical assignments.
    pub fn coalesced(&self) -> DenseTrace {
        let mut segments: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for seg in &self.segments {
            if segments.last().is_some_and(|prev| prev.atoms == seg.atoms) {
                continue;
            }
            segments.push(seg.clone());
        }
        DenseTrace {
            resolution: self.resolution,
            horizon: self.horizon,
            segments,
        }
    }
}

/// The restriction of a dense trace to the instants `beta * delta`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledTrace {
    pub delta: Duration,
    pub samples: Vec<Assignment>,
}

impl SampledTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Samples at `t = 0, delta, 2 delta, ...` up to and including the horizon.
pub fn sample_dense(dense: &DenseTrace, delta: Duration) -> Result<SampledTrace, TraceError> {
    if delta.is_zero() || !delta.is_multiple_of(dense.resolution) {
        return Err(TraceError::ResolutionMismatch {
            delta,
            resolution: dense.resolution,
        });
    }
    let count = dense.horizon.floor_div(delta) as usize + 1;
    let mut samples = Vec::with_capacity(count);
    let mut seg = 0;
    for beta in 0..count {
        let t = delta * beta as i64;
        while seg + 1 < dense.segments.len() && dense.segments[seg + 1].start <= t {
            seg += 1;
        }
        samples.push(dense.segments[seg].atoms.clone());
    }
    Ok(SampledTrace { delta, samples })
}
