//! Nonparametric Gini bounds from finitely many Lorenz-curve points.

use crate::error::{domain_err, Result};

/// A line `y = y0 + slope (x − x0)`.
#[derive(Debug, Clone, Copy)]
struct Line {
    x0: f64,
    y0: f64,
    slope: f64,
}

impl Line {
    fn through(a: (f64, f64), b: (f64, f64)) -> Self {
        Self { x0: a.0, y0: a.1, slope: (b.1 - a.1) / (b.0 - a.0) }
    }

    fn at(&self, x: f64) -> f64 {
        self.y0 + self.slope * (x - self.x0)
    }

    /// Abscissa where two lines meet, if they are not parallel.
    fn crossing(&self, other: &Line) -> Option<f64> {
        let ds = self.slope - other.slope;
        if ds.abs() < 1e-300 {
            return None;
        }
        Some((other.at(0.0) - self.at(0.0)) / ds)
    }
}

/// Exact integral over `[a, b]` of `min(chord, max(lines...))`.
fn envelope_area(a: f64, b: f64, chord: Line, lower: &[Line]) -> f64 {
    let value = |x: f64| {
        let floor = lower.iter().map(|l| l.at(x)).fold(f64::NEG_INFINITY, f64::max);
        chord.at(x).min(floor)
    };
    let all: Vec<Line> = std::iter::once(chord).chain(lower.iter().copied()).collect();
    let mut knots = vec![a, b];
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            if let Some(x) = all[i].crossing(&all[j]) {
                if x > a && x < b {
                    knots.push(x);
                }
            }
        }
    }
    knots.sort_by(f64::total_cmp);
    knots.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (value(w[0]) + value(w[1]))).sum()
}

/// Lower and upper bounds on the Gini coefficient of any convex Lorenz curve
/// through `points` (with `(0,0)` and `(1,1)` implied).
///
/// The lower bound is the Gini of the chord polygon
/// `1 − Σ (f_{k−1} + f_k)(x_k − x_{k−1})`. The upper bound is the Gini of the
/// smallest convex curve through the points: on each segment it follows the
/// larger of the two neighbouring chords extended into the segment (the
/// horizontal axis before the first point), capped by the segment's own chord.
pub fn polygon_gini_bounds(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    for (k, &(x, f)) in points.iter().enumerate() {
        if !(x > 0.0 && x < 1.0) {
            return Err(domain_err!("argument {} = {x} must lie in (0, 1)", k + 1));
        }
        if !(0.0..=1.0).contains(&f) {
            return Err(domain_err!("value {} = {f} must lie in [0, 1]", k + 1));
        }
        if k > 0 {
            let (xp, fp) = points[k - 1];
            if x <= xp {
                return Err(domain_err!("arguments must increase; argument {} = {x} follows {xp}", k + 1));
            }
            if f < fp {
                return Err(domain_err!("values must be nondecreasing; value {} = {f} follows {fp}", k + 1));
            }
        }
    }
    let mut knots = Vec::with_capacity(points.len() + 2);
    knots.push((0.0, 0.0));
    knots.extend_from_slice(points);
    knots.push((1.0, 1.0));
    let n_seg = knots.len() - 1;
    let chords: Vec<Line> = (0..n_seg).map(|i| Line::through(knots[i], knots[i + 1])).collect();

    let twice_chord_area: f64 = knots.windows(2).map(|w| (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
    let lower = 1.0 - twice_chord_area;

    let axis = Line { x0: 0.0, y0: 0.0, slope: 0.0 };
    let mut area = 0.0;
    for i in 0..n_seg {
        let mut support = vec![if i == 0 { axis } else { chords[i - 1] }];
        if i + 1 < n_seg {
            support.push(chords[i + 1]);
        }
        area += envelope_area(knots[i].0, knots[i + 1].0, chords[i], &support);
    }
    let upper = 1.0 - 2.0 * area;
    Ok((lower, upper.max(lower)))
}
