//! Bounded scalar maximization on `(lo, hi]` or `[lo, hi]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximizeOptions {
    /// Number of grid points.
    pub budget: usize,
    /// Whether `lo` itself belongs to the domain.
    pub closed_lo: bool,
    /// Values at or above `cap` are reported as divergence.
    pub cap: f64,
    /// Golden-section iterations around the best grid bracket.
    pub refine_iterations: usize,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self {
            budget: 4096,
            closed_lo: false,
            cap: 1e12,
            refine_iterations: 120,
        }
    }
}

/// Best point found. `value` is the objective at `s_star`, so it is a lower
/// bound on the supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarMaximizeResult {
    pub s_star: f64,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Grid of `budget` points in `(lo, hi]`: half geometric toward `lo` with the
/// first point at `lo + (hi−lo)·1e-9`, half uniform. Sorted, deduplicated,
/// always containing `hi`, and `lo` when `closed_lo`.
pub fn search_grid(lo: f64, hi: f64, budget: usize, closed_lo: bool) -> Vec<f64> {
    let w = hi - lo;
    let half = (budget / 2).max(1);
    let mut g = Vec::with_capacity(budget + 2);
    let first = 1e-9_f64;
    let ratio = (1.0 / first).powf(1.0 / (half.max(2) - 1) as f64);
    let mut f = first;
    for _ in 0..half {
        g.push(lo + w * f.min(1.0));
        f *= ratio;
    }
    let rest = budget.saturating_sub(half).max(1);
    for k in 1..=rest {
        g.push(lo + w * k as f64 / rest as f64);
    }
    g.push(hi);
    if closed_lo {
        g.push(lo);
    }
    g.retain(|&s| s > lo || (closed_lo && s == lo));
    g.retain(|&s| s <= hi);
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

pub fn maximize_on_interval<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: MaximizeOptions,
) -> Result<ScalarMaximizeResult>
where
    F: FnMut(f64) -> f64,
{
    if !(hi > lo) {
        return Err(Error::EmptyInterval { lo, hi });
    }
    let grid = search_grid(lo, hi, opts.budget, opts.closed_lo);
    let mut vals = Vec::with_capacity(grid.len());
    for &s in &grid {
        let v = f(s);
        if v >= opts.cap {
            return Err(Error::DivergenceDetected { s, value: v });
        }
        vals.push(if v.is_nan() { f64::NEG_INFINITY } else { v });
    }
    let (k, &v0) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");
    let mut best = (grid[k], v0);
    let a0 = if k > 0 { grid[k - 1] } else { grid[k] };
    let b0 = if k + 1 < grid.len() {
        grid[k + 1]
    } else {
        grid[k]
    };
    if b0 > a0 && v0.is_finite() {
        let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
        let (mut a, mut b) = (a0, b0);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = f(x1);
        let mut f2 = f(x2);
        for _ in 0..opts.refine_iterations {
            for (x, fx) in [(x1, f1), (x2, f2)] {
                if fx > best.1 && (x > lo || opts.closed_lo) && x <= hi {
                    best = (x, fx);
                }
            }
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = f(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = f(x1);
            }
            if b - a <= 4.0 * f64::EPSILON * b.abs().max(a.abs()).max(f64::MIN_POSITIVE) {
                break;
            }
        }
        for (x, fx) in [(x1, f1), (x2, f2)] {
            if fx > best.1 && (x > lo || opts.closed_lo) && x <= hi {
                best = (x, fx);
            }
        }
        if best.1 >= opts.cap {
            return Err(Error::DivergenceDetected {
                s: best.0,
                value: best.1,
            });
        }
    }
    Ok(ScalarMaximizeResult {
        s_star: best.0,
        value: best.1,
        lo,
        hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decreasing_line_peaks_near_lo() {
        let r = maximize_on_interval(|s| -s, 0.0, 1.0, MaximizeOptions::default()).unwrap();
        assert!(r.s_star > 0.0 && r.s_star < 1e-8);
        assert!(r.value < 0.0 && r.value > -1e-8);
    }

    #[test]
    fn concave_quadratic() {
        let r = maximize_on_interval(
            |s| -(s - 0.5) * (s - 0.5),
            0.0,
            1.0,
            MaximizeOptions::default(),
        )
        .unwrap();
        assert!((r.s_star - 0.5).abs() < 1e-6);
    }

    #[test]
    fn empty_and_divergent() {
        assert!(matches!(
            maximize_on_interval(|s| s, 1.0, 1.0, MaximizeOptions::default()),
            Err(Error::EmptyInterval { .. })
        ));
        // the first grid point sits at lo + 1e-9·(hi − lo)
        let capped = MaximizeOptions {
            cap: 1e6,
            ..Default::default()
        };
        assert!(matches!(
            maximize_on_interval(|s| 1.0 / s, 0.0, 1.0, capped),
            Err(Error::DivergenceDetected { .. })
        ));
        assert!(matches!(
            maximize_on_interval(|s| 1.0 / (s * s), 0.0, 1.0, MaximizeOptions::default()),
            Err(Error::DivergenceDetected { .. })
        ));
    }

    #[test]
    fn closed_includes_lo() {
        let r = maximize_on_interval(
            |s| -s,
            0.0,
            1.0,
            MaximizeOptions {
                closed_lo: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.s_star, 0.0);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn grid_shape() {
        let g = search_grid(2.0, 3.0, 4096, false);
        assert!(g[0] > 2.0 && g[0] - 2.0 < 2e-9);
        assert_eq!(*g.last().unwrap(), 3.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
