//! Piecewise-linear envelopes of line families.
//!
//! The annulus radii are min/max over a finite family of exponentials
//! `exp(intercept + slope·s)`, so in log coordinates they are the lower and
//! upper envelopes of lines. Envelopes are kept in breakpoint form; the
//! level-set queries below make the invertible-exponent computation exact up
//! to floating point.

/// A line `s ↦ slope·s + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn new(slope: f64, intercept: f64) -> Self {
        Line { slope, intercept }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.slope * s + self.intercept
    }
}

fn intersection(a: &Line, b: &Line) -> f64 {
    (b.intercept - a.intercept) / (a.slope - b.slope)
}

/// Upper or lower envelope in breakpoint representation.
///
/// Internally the hull is always stored as a max-hull; a lower envelope
/// stores the negated lines and flips signs on the way out.
#[derive(Debug, Clone)]
pub struct Envelope {
    negated: bool,
    hull: Vec<Line>,
    breaks: Vec<f64>,
}

/// Convex max-hull of `lines`; slopes strictly increasing left to right.
fn build_max_hull(lines: &[Line]) -> (Vec<Line>, Vec<f64>) {
    assert!(!lines.is_empty(), "envelope of an empty line family");
    let mut sorted = lines.to_vec();
    sorted.sort_by(|a, b| {
        a.slope
            .partial_cmp(&b.slope)
            .unwrap()
            .then(a.intercept.partial_cmp(&b.intercept).unwrap())
    });
    // Equal slopes: only the largest intercept can contribute to a max.
    let mut dedup: Vec<Line> = Vec::with_capacity(sorted.len());
    for l in sorted {
        if let Some(last) = dedup.last_mut() {
            if last.slope == l.slope {
                *last = l;
                continue;
            }
        }
        dedup.push(l);
    }
    let mut hull: Vec<Line> = Vec::with_capacity(dedup.len());
    for l in dedup {
        loop {
            match hull.len() {
                0 => break,
                1 => {
                    // A single line survives unless the newcomer dominates
                    // everywhere (cannot happen with distinct slopes).
                    break;
                }
                _ => {
                    let last = hull[hull.len() - 1];
                    let second = hull[hull.len() - 2];
                    // `last` never reaches the top if the newcomer overtakes
                    // `second` no later than `last` did.
                    if intersection(&second, &last) >= intersection(&last, &l) {
                        hull.pop();
                    } else {
                        break;
                    }
                }
            }
        }
        hull.push(l);
    }
    let breaks = hull
        .windows(2)
        .map(|w| intersection(&w[0], &w[1]))
        .collect();
    (hull, breaks)
}

/// Pointwise maximum of the lines.
pub fn upper_envelope(lines: &[Line]) -> Envelope {
    let (hull, breaks) = build_max_hull(lines);
    Envelope {
        negated: false,
        hull,
        breaks,
    }
}

/// Pointwise minimum of the lines.
pub fn lower_envelope(lines: &[Line]) -> Envelope {
    let neg: Vec<Line> = lines
        .iter()
        .map(|l| Line::new(-l.slope, -l.intercept))
        .collect();
    let (hull, breaks) = build_max_hull(&neg);
    Envelope {
        negated: true,
        hull,
        breaks,
    }
}

impl Envelope {
    fn segment_index(&self, s: f64) -> usize {
        self.breaks.partition_point(|b| *b < s)
    }

    fn internal_eval(&self, s: f64) -> f64 {
        self.hull[self.segment_index(s)].eval(s)
    }

    pub fn eval(&self, s: f64) -> f64 {
        let v = self.internal_eval(s);
        if self.negated {
            -v
        } else {
            v
        }
    }

    /// The true lines of the envelope with their active intervals.
    pub fn pieces(&self) -> Vec<(Line, (f64, f64))> {
        let n = self.hull.len();
        (0..n)
            .map(|i| {
                let line = if self.negated {
                    Line::new(-self.hull[i].slope, -self.hull[i].intercept)
                } else {
                    self.hull[i]
                };
                let lo = if i == 0 {
                    f64::NEG_INFINITY
                } else {
                    self.breaks[i - 1]
                };
                let hi = if i + 1 == n {
                    f64::INFINITY
                } else {
                    self.breaks[i]
                };
                (line, (lo, hi))
            })
            .collect()
    }

    /// Location and value of the internal hull's minimum; the location is
    /// ±∞ when the hull is unbounded below in that direction.
    fn internal_min(&self) -> (f64, f64) {
        let first = self.hull[0];
        let last = self.hull[self.hull.len() - 1];
        if first.slope > 0.0 {
            return (f64::NEG_INFINITY, f64::NEG_INFINITY);
        }
        if last.slope < 0.0 {
            return (f64::INFINITY, f64::NEG_INFINITY);
        }
        // Slopes cross (or touch) zero.
        let j = self
            .hull
            .iter()
            .position(|l| l.slope >= 0.0)
            .expect("last slope >= 0");
        if self.hull[j].slope == 0.0 {
            let at = if j == 0 {
                f64::NEG_INFINITY
            } else {
                self.breaks[j - 1]
            };
            return (at, self.hull[j].intercept);
        }
        debug_assert!(j > 0);
        let s = self.breaks[j - 1];
        (s, self.hull[j].eval(s))
    }

    /// Argmin/min for an upper envelope, argmax/max for a lower envelope.
    /// The value is ±∞ when the envelope is unbounded on that side.
    pub fn extremum(&self) -> (f64, f64) {
        let (s, v) = self.internal_min();
        if self.negated {
            (s, -v)
        } else {
            (s, v)
        }
    }

    fn internal_strict_sublevel(&self, c: f64) -> Option<(f64, f64)> {
        let (_, min_val) = self.internal_min();
        if !(min_val < c) {
            return None;
        }
        let hull = &self.hull;
        let breaks = &self.breaks;
        let lo = if hull[0].slope >= 0.0 {
            f64::NEG_INFINITY
        } else {
            let mut lo = f64::NEG_INFINITY;
            for (i, l) in hull.iter().enumerate() {
                if l.slope >= 0.0 {
                    break;
                }
                let right_val = if i < breaks.len() {
                    l.eval(breaks[i])
                } else {
                    f64::NEG_INFINITY
                };
                if right_val < c {
                    lo = (c - l.intercept) / l.slope;
                    break;
                }
            }
            lo
        };
        let n = hull.len();
        let hi = if hull[n - 1].slope <= 0.0 {
            f64::INFINITY
        } else {
            let mut hi = f64::INFINITY;
            for i in (0..n).rev() {
                let l = hull[i];
                if l.slope <= 0.0 {
                    break;
                }
                let left_val = if i > 0 {
                    l.eval(breaks[i - 1])
                } else {
                    f64::NEG_INFINITY
                };
                if left_val < c {
                    hi = (c - l.intercept) / l.slope;
                    break;
                }
            }
            hi
        };
        if lo < hi {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// Open interval `{s : U(s) < c}` of an upper envelope.
    pub fn strict_sublevel(&self, c: f64) -> Option<(f64, f64)> {
        assert!(!self.negated, "strict_sublevel is for upper envelopes");
        self.internal_strict_sublevel(c)
    }

    /// Open interval `{s : L(s) > c}` of a lower envelope.
    pub fn strict_superlevel(&self, c: f64) -> Option<(f64, f64)> {
        assert!(self.negated, "strict_superlevel is for lower envelopes");
        self.internal_strict_sublevel(-c)
    }
}
