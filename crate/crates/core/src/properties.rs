//! Grid checks of the analytic facts the bounds rely on: monotonicity and
//! convexity of the bottleneck function, `f(t) >= phi(h2(t))`, inverse
//! round trips, and the two-sided Stirling estimate of `ln C(N, i)`.
//!
//! Each check reports its worst slack (positive means satisfied) and where
//! it was attained.

use std::f64::consts::{LN_2, PI};

use crate::entropy::{binary_entropy, binary_entropy_inverse, complement_entropy, log_binomial, phi};
use crate::error::{Error, Result};

pub const DEFAULT_GRID: usize = 10_000;
pub const DEFAULT_STIRLING_MAX: u64 = 1000;
pub const GRID_TOLERANCE: f64 = 1e-12;
pub const ROUND_TRIP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub points: usize,
    pub tolerance: f64,
    pub worst_slack: f64,
    pub worst_at: String,
}

impl PropertyCheck {
    pub fn passed(&self) -> bool {
        self.worst_slack >= -self.tolerance
    }
}

struct Worst {
    slack: f64,
    at: String,
}

impl Worst {
    fn new() -> Self {
        Self {
            slack: f64::INFINITY,
            at: String::new(),
        }
    }

    fn update(&mut self, slack: f64, at: impl FnOnce() -> String) {
        if slack < self.slack || slack.is_nan() {
            self.slack = slack;
            self.at = at();
        }
    }
}

fn grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(move |j| if j + 1 == points { hi } else { lo + step * j as f64 })
}

fn check_points(points: usize) -> Result<()> {
    if points < 10 {
        return Err(Error::Precondition(format!("grid resolution {points} is below 10")));
    }
    Ok(())
}

/// `f` nondecreasing on `[0, 1/2]` (adjacent grid points).
pub fn complement_entropy_monotone(points: usize) -> Result<PropertyCheck> {
    check_points(points)?;
    let xs: Vec<f64> = grid(0.0, 0.5, points).collect();
    let fs = xs.iter().map(|&x| complement_entropy(x)).collect::<Result<Vec<_>>>()?;
    let mut worst = Worst::new();
    for j in 1..points {
        worst.update(fs[j] - fs[j - 1], || format!("x = {}", xs[j]));
    }
    Ok(PropertyCheck {
        name: "f_nondecreasing",
        points,
        tolerance: GRID_TOLERANCE,
        worst_slack: worst.slack,
        worst_at: worst.at,
    })
}

/// `phi` nondecreasing on `[0, ln 2]`.
pub fn phi_monotone(points: usize) -> Result<PropertyCheck> {
    check_points(points)?;
    let ts: Vec<f64> = grid(0.0, LN_2, points).collect();
    let ps = ts.iter().map(|&t| phi(t)).collect::<Result<Vec<_>>>()?;
    let mut worst = Worst::new();
    for j in 1..points {
        worst.update(ps[j] - ps[j - 1], || format!("t = {}", ts[j]));
    }
    Ok(PropertyCheck {
        name: "phi_nondecreasing",
        points,
        tolerance: GRID_TOLERANCE,
        worst_slack: worst.slack,
        worst_at: worst.at,
    })
}

/// Midpoint convexity of `phi` over every pair of grid points in
/// `[0, ln 2]`. Midpoints are read off a grid of twice the resolution.
pub fn phi_midpoint_convex(points: usize) -> Result<PropertyCheck> {
    check_points(points)?;
    let fine: Vec<f64> = grid(0.0, LN_2, 2 * points - 1).collect();
    let ps = fine.iter().map(|&t| phi(t)).collect::<Result<Vec<_>>>()?;
    let mut worst = Worst::new();
    for a in 0..points {
        for b in a + 1..points {
            let slack = 0.5 * (ps[2 * a] + ps[2 * b]) - ps[a + b];
            worst.update(slack, || format!("t1 = {}, t2 = {}", fine[2 * a], fine[2 * b]));
        }
    }
    Ok(PropertyCheck {
        name: "phi_midpoint_convex",
        points,
        tolerance: GRID_TOLERANCE,
        worst_slack: worst.slack,
        worst_at: worst.at,
    })
}

/// `f(t) >= phi(h2(t))` on `[0, 1]`.
pub fn complement_dominates_phi(points: usize) -> Result<PropertyCheck> {
    check_points(points)?;
    let mut worst = Worst::new();
    for t in grid(0.0, 1.0, points) {
        let slack = complement_entropy(t)? - phi(binary_entropy(t)?)?;
        worst.update(slack, || format!("t = {t}"));
    }
    Ok(PropertyCheck {
        name: "f_ge_phi_of_h2",
        points,
        tolerance: GRID_TOLERANCE,
        worst_slack: worst.slack,
        worst_at: worst.at,
    })
}

/// `|h2(h2^{-1}(t)) - t| <= 1e-10` on `[0, ln 2]`; slack is the negated error.
pub fn inverse_round_trip(points: usize) -> Result<PropertyCheck> {
    check_points(points)?;
    let mut worst = Worst::new();
    for t in grid(0.0, LN_2, points) {
        let err = (binary_entropy(binary_entropy_inverse(t)?)? - t).abs();
        worst.update(-err, || format!("t = {t}"));
    }
    Ok(PropertyCheck {
        name: "entropy_inverse_round_trip",
        points,
        tolerance: ROUND_TRIP_TOLERANCE,
        worst_slack: worst.slack,
        worst_at: worst.at,
    })
}

/// `N h2(i/N) - ln(8 i (1-i/N))/2 <= ln C(N,i) <= N h2(i/N) - ln(2 pi i (1-i/N))/2`
/// for all `1 <= i < N <= max_n`.
pub fn stirling_sandwich(max_n: u64) -> Result<PropertyCheck> {
    if max_n < 2 {
        return Err(Error::Precondition("Stirling check needs max N >= 2".into()));
    }
    let mut worst = Worst::new();
    let mut points = 0usize;
    for n in 2..=max_n {
        let nf = n as f64;
        for i in 1..n {
            let alpha = i as f64 / nf;
            let core = nf * binary_entropy(alpha)?;
            let spread = i as f64 * (1.0 - alpha);
            let lower = core - 0.5 * (8.0 * spread).ln();
            let upper = core - 0.5 * (2.0 * PI * spread).ln();
            let exact = log_binomial(n, i)?;
            worst.update((exact - lower).min(upper - exact), || format!("N = {n}, i = {i}"));
            points += 1;
        }
    }
    Ok(PropertyCheck {
        name: "stirling_sandwich",
        points,
        tolerance: GRID_TOLERANCE,
        worst_slack: worst.slack,
        worst_at: worst.at,
    })
}

pub fn run_all(points: usize, stirling_max: u64) -> Result<Vec<PropertyCheck>> {
    Ok(vec![
        complement_entropy_monotone(points)?,
        phi_monotone(points)?,
        phi_midpoint_convex(points)?,
        complement_dominates_phi(points)?,
        inverse_round_trip(points)?,
        stirling_sandwich(stirling_max)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_grid_passes() {
        for check in run_all(64, 60).unwrap() {
            assert!(check.passed(), "{check:?}");
        }
    }

    #[test]
    fn resolution_floor() {
        assert!(phi_monotone(9).is_err());
        assert!(stirling_sandwich(1).is_err());
    }

    #[test]
    fn dominance_is_tight_on_lower_half() {
        let c = complement_dominates_phi(101).unwrap();
        assert!(c.worst_slack.abs() < 1e-12);
    }
}
