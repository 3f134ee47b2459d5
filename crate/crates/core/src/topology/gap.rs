use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{invariants, quasienergy, CoinedProtocol, Invariants};
use crate::par::{self, Exec};

/// Gaps below this are treated as closed.
pub const GAP_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GapProtocol {
    /// Coinless chain, `cos E = cos θ0 cos θ1 − sin θ0 sin θ1 cos k`.
    Chain,
    Coined {
        protocol: CoinedProtocol,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub theta0: f64,
    pub theta1: f64,
    /// `min_k |E|`
    pub gap_zero: f64,
    /// `min_k (π − |E|)`
    pub gap_pi: f64,
}

impl GapPoint {
    pub fn is_closed(&self) -> bool {
        self.gap_zero < GAP_TOLERANCE || self.gap_pi < GAP_TOLERANCE
    }

    pub fn min_gap(&self) -> f64 {
        self.gap_zero.min(self.gap_pi)
    }
}

impl GapProtocol {
    /// `(min |E|, min (π − |E|))` over a `k_grid`-per-axis mesh.
    pub fn gaps(&self, theta0: f64, theta1: f64, k_grid: usize) -> (f64, f64) {
        let dk = 2.0 * PI / k_grid as f64;
        let (mut g0, mut gpi) = (f64::INFINITY, f64::INFINITY);
        let mut visit = |e: f64| {
            g0 = g0.min(e);
            gpi = gpi.min(PI - e);
        };
        match self {
            GapProtocol::Chain => {
                for l in 0..k_grid {
                    visit(quasienergy(l as f64 * dk, theta0, theta1));
                }
                // Band extremes sit at k = 0 and k = π.
                visit(quasienergy(PI, theta0, theta1));
            }
            GapProtocol::Coined { protocol } => {
                let d = protocol.dimension;
                let total = k_grid.pow(d as u32);
                let angles = [theta0, theta1];
                for idx in 0..total {
                    let mut k = [0.0; 3];
                    let mut r = idx;
                    for slot in k.iter_mut().take(d) {
                        *slot = (r % k_grid) as f64 * dk;
                        r /= k_grid;
                    }
                    let w = protocol.floquet(k, &angles);
                    visit((0.5 * (w[(0, 0)] + w[(1, 1)]).re).clamp(-1.0, 1.0).acos());
                }
            }
        }
        (g0, gpi)
    }
}

pub fn gap_map(protocol: &GapProtocol, points: &[(f64, f64)], k_grid: usize, exec: Exec) -> Vec<GapPoint> {
    par::map(exec, points, |&(theta0, theta1)| {
        let (gap_zero, gap_pi) = protocol.gaps(theta0, theta1, k_grid);
        GapPoint { theta0, theta1, gap_zero, gap_pi }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub gap: GapPoint,
    pub invariants: Option<Invariants>,
    /// Why no invariants were assigned.
    pub failure: Option<String>,
}

/// Winding invariants of the coinless chain over a list of `(θ0, θ1)`
/// points. Points with a closed gap or an unquantized integral carry the
/// failure reason instead.
pub fn phase_diagram(points: &[(f64, f64)], abar: f64, k_grid: usize, exec: Exec) -> Vec<PhasePoint> {
    par::map(exec, points, |&(theta0, theta1)| {
        let (gap_zero, gap_pi) = GapProtocol::Chain.gaps(theta0, theta1, k_grid);
        let gap = GapPoint { theta0, theta1, gap_zero, gap_pi };
        match invariants(theta0, theta1, abar, k_grid) {
            Ok(inv) => PhasePoint { gap, invariants: Some(inv), failure: None },
            Err(e) => PhasePoint { gap, invariants: None, failure: Some(e.to_string()) },
        }
    })
}

/// Row-major `n × n` grid of cell-centered points over `[lo, hi)²`.
pub fn square_grid(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let step = (hi - lo) / n as f64;
    let at = |i: usize| lo + (i as f64 + 0.5) * step;
    (0..n).flat_map(|i| (0..n).map(move |j| (at(i), at(j)))).collect()
}
