//! Splitting a ray's samples into supersegments: the homogeneity
//! criterion, the list builder and the per-ray bisection search for the
//! sensitivity threshold.

use crate::dvr::{over, Rgba};

/// Upper end of the threshold search: the largest possible distance between
/// two premultiplied RGBA values in the unit hypercube.
pub const GAMMA_MAX: f32 = 2.0;
pub const DEFAULT_MAX_ITERS: u32 = 16;

/// One input element of the segmentation sweep: a fixed-step volume sample,
/// or a whole sub-supersegment during recompositing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t_front: f32,
    pub t_back: f32,
    /// Premultiplied color and opacity accumulated over `[t_front, t_back]`.
    pub rgba: Rgba,
    /// Integration length this sample stands for, in units of the reference
    /// step (1 for plain volume samples).
    pub weight: f32,
}

impl Sample {
    pub fn is_transparent(&self) -> bool {
        self.rgba[3] <= 0.0
    }
}

/// A depth interval carrying premultiplied color and the opacity
/// accumulated across it.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Supersegment {
    pub t_front: f32,
    pub t_back: f32,
    pub rgba: Rgba,
}

impl Supersegment {
    pub const EMPTY: Supersegment = Supersegment { t_front: 0.0, t_back: 0.0, rgba: [0.0; 4] };

    pub fn is_empty_slot(&self) -> bool {
        *self == Self::EMPTY
    }

    pub fn length(&self) -> f32 {
        self.t_back - self.t_front
    }
}

/// Rescales accumulated premultiplied `rgba` spread over `weight` reference
/// lengths to the value of a single reference-length sample of the same
/// medium, so runs and samples of different lengths compare like for like.
#[inline]
pub fn per_unit_premultiplied(rgba: Rgba, weight: f32) -> Rgba {
    let a = rgba[3];
    if a <= 0.0 {
        return [0.0; 4];
    }
    if weight == 1.0 {
        return rgba;
    }
    let unit = (1.0 - (1.0 - a.min(1.0) as f64).powf(1.0 / weight as f64)) as f32;
    let s = unit / a;
    [rgba[0] * s, rgba[1] * s, rgba[2] * s, unit]
}

/// Distances at or below this are rounding noise from accumulation.
pub const SPLIT_NOISE_FLOOR: f32 = 1e-5;

/// Termination criterion: true when two premultiplied RGBA values are more
/// than `gamma` apart. The sweep applies it to the extremes of the running
/// supersegment's value range with the next sample admitted, so a sample
/// joins unless it would make the segment differ from itself by more than
/// `gamma`.
#[inline]
pub fn should_split(gamma: f32, seg_premult: Rgba, sample_premult: Rgba) -> bool {
    let d2: f32 = (0..4).map(|i| (seg_premult[i] - sample_premult[i]).powi(2)).sum();
    d2.sqrt() > gamma + SPLIT_NOISE_FLOOR
}

/// Running supersegment. Besides the accumulated color it keeps the
/// per-channel range of the per-unit values it has absorbed; the range's
/// diagonal is the segment's inhomogeneity, and it can only grow as samples
/// are added.
#[derive(Clone, Copy)]
struct Run {
    t_front: f32,
    t_back: f32,
    rgba: Rgba,
    lo: Rgba,
    hi: Rgba,
}

impl Run {
    fn open(s: &Sample, unit: Rgba) -> Self {
        Run { t_front: s.t_front, t_back: s.t_back, rgba: s.rgba, lo: unit, hi: unit }
    }

    /// `(min, max)` corners of the range with `unit` admitted.
    fn extent_with(&self, unit: Rgba) -> (Rgba, Rgba) {
        (std::array::from_fn(|i| self.lo[i].min(unit[i])), std::array::from_fn(|i| self.hi[i].max(unit[i])))
    }

    fn absorb(&mut self, s: &Sample, unit: Rgba) {
        (self.lo, self.hi) = self.extent_with(unit);
        self.rgba = over(self.rgba, s.rgba);
        self.t_back = s.t_back;
    }

    fn finish(self) -> Supersegment {
        Supersegment { t_front: self.t_front, t_back: self.t_back, rgba: self.rgba }
    }
}

/// The sweep behind [`build_list`]. Without an output buffer it only counts
/// and ignores the budget.
fn sweep(samples: &[Sample], gamma: f32, n_sup: usize, mut out: Option<&mut Vec<Supersegment>>) -> usize {
    let mut raw = 0usize;
    let mut current: Option<Run> = None;
    let mut prev_back = f32::NEG_INFINITY;
    for s in samples {
        let gap = s.t_front > prev_back;
        prev_back = s.t_back;
        if s.is_transparent() {
            // transparent space closes the run but never opens one
            if let (Some(run), Some(o)) = (current.take(), out.as_deref_mut()) {
                o.push(run.finish());
            }
            continue;
        }
        let unit = per_unit_premultiplied(s.rgba, s.weight);
        let split = match &current {
            None => true,
            Some(run) => {
                let (lo, hi) = run.extent_with(unit);
                gap || should_split(gamma, lo, hi)
            }
        };
        if !split {
            current.as_mut().unwrap().absorb(s, unit);
            continue;
        }
        raw += 1;
        let Some(o) = out.as_deref_mut() else {
            current = Some(Run::open(s, unit));
            continue;
        };
        let used = o.len() + usize::from(current.is_some());
        if used < n_sup {
            if let Some(run) = current.take() {
                o.push(run.finish());
            }
            current = Some(Run::open(s, unit));
        } else if let Some(run) = current.as_mut() {
            // over budget: keep accumulating into the last supersegment
            run.absorb(s, unit);
        } else {
            let last = o.pop().expect("a full budget implies a closed supersegment");
            let mut run = Run { t_front: last.t_front, t_back: last.t_back, rgba: last.rgba, lo: unit, hi: unit };
            run.absorb(s, unit);
            current = Some(run);
        }
    }
    if let (Some(run), Some(o)) = (current, out) {
        o.push(run.finish());
    }
    raw
}

/// Number of supersegments `gamma` would create, ignoring the budget.
pub fn count_supersegments(samples: &[Sample], gamma: f32) -> usize {
    sweep(samples, gamma, usize::MAX, None)
}

/// Front-to-back sweep producing at most `n_sup` supersegments. Returns the
/// list and the uncapped count. Overflow merges into the last supersegment.
pub fn build_list(samples: &[Sample], gamma: f32, n_sup: usize) -> (Vec<Supersegment>, usize) {
    let mut out = Vec::with_capacity(n_sup.min(samples.len()));
    let within_budget = sweep(samples, gamma, n_sup.max(1), Some(&mut out));
    // once the budget is hit the capped sweep stops comparing, so recount
    let raw = if out.len() < n_sup { within_budget } else { count_supersegments(samples, gamma) };
    (out, raw)
}

/// Bisection on `[0, GAMMA_MAX]` for the smallest threshold whose
/// supersegment count fits in `n_sup`. Falls back to `GAMMA_MAX` if no
/// probed value fits (more disjoint runs than the budget).
pub fn gamma_search(samples: &[Sample], n_sup: usize, max_iters: u32) -> f32 {
    if samples.is_empty() || count_supersegments(samples, 0.0) <= n_sup {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f32, GAMMA_MAX);
    let mut best = None;
    for _ in 0..max_iters.max(1) {
        let mid = 0.5 * (lo + hi);
        if count_supersegments(samples, mid) > n_sup {
            lo = mid;
        } else {
            hi = mid;
            best = Some(mid);
        }
    }
    best.unwrap_or(GAMMA_MAX)
}

/// Over-accumulation of a list, front to back.
pub fn accumulate<'a>(items: impl IntoIterator<Item = &'a Rgba>) -> Rgba {
    items.into_iter().fold([0.0; 4], |acc, c| over(acc, *c))
}
