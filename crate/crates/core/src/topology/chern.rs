use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{pauli_components, CoinedProtocol, GAP_TOLERANCE, QUANTIZATION_TOLERANCE};
use crate::error::{Error, GapCenter, Result};
use crate::C64;

/// Band with eigenphase `+E` (upper) or `−E` (lower), `E ∈ (0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chern {
    pub value: i32,
    pub raw: f64,
    pub residual: f64,
}

/// Unit Bloch vectors on a `grid × grid` mesh of `[0, 2π)²`, row-major in
/// `k_x`.
fn bloch_mesh(protocol: &CoinedProtocol, angles: &[f64], grid: usize) -> Result<Vec<[f64; 3]>> {
    protocol.validate()?;
    if protocol.dimension != 2 {
        return Err(Error::Incompatible {
            what: "Chern number".into(),
            why: format!("needs a 2D protocol, got {}D", protocol.dimension),
        });
    }
    if angles.len() < protocol.angle_count() {
        return Err(Error::DimensionMismatch { expected: protocol.angle_count(), got: angles.len() });
    }
    if grid < 4 {
        return Err(Error::InvalidParameter(format!("k grid of {grid} points")));
    }
    let dk = 2.0 * PI / grid as f64;
    let mut out = Vec::with_capacity(grid * grid);
    let (mut gap0, mut gap_pi) = (f64::INFINITY, f64::INFINITY);
    for i in 0..grid {
        for j in 0..grid {
            let w = protocol.floquet([i as f64 * dk, j as f64 * dk, 0.0], angles);
            let e = (0.5 * (w[(0, 0)] + w[(1, 1)]).re).clamp(-1.0, 1.0).acos();
            gap0 = gap0.min(e);
            gap_pi = gap_pi.min(PI - e);
            let v = pauli_components(&w);
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            out.push(if norm > 0.0 { v.map(|x| x / norm) } else { [0.0, 0.0, 1.0] });
        }
    }
    if gap0 < GAP_TOLERANCE {
        return Err(Error::GapClosed { gap: gap0, at: GapCenter::Zero });
    }
    if gap_pi < GAP_TOLERANCE {
        return Err(Error::GapClosed { gap: gap_pi, at: GapCenter::Pi });
    }
    Ok(out)
}

/// Eigenvector of `s n·σ` with eigenvalue +1, taken from the larger column
/// of the projector `(1 + s n·σ)/2`.
fn eigenvector(n: &[f64; 3], s: f64) -> [C64; 2] {
    let c0 = [C64::new(1.0 + s * n[2], 0.0), C64::new(s * n[0], s * n[1])];
    let c1 = [C64::new(s * n[0], -s * n[1]), C64::new(1.0 - s * n[2], 0.0)];
    let norm = |c: &[C64; 2]| (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
    let (c, m) = if norm(&c0) >= norm(&c1) { (c0, norm(&c0)) } else { (c1, norm(&c1)) };
    [c[0] / m, c[1] / m]
}

fn link(a: &[C64; 2], b: &[C64; 2]) -> C64 {
    let z = a[0].conj() * b[0] + a[1].conj() * b[1];
    z / z.norm()
}

/// Chern number of one band by the plaquette (lattice field strength)
/// method on a `grid × grid` mesh.
pub fn chern_number(protocol: &CoinedProtocol, angles: &[f64], band: Band, grid: usize) -> Result<Chern> {
    let mesh = bloch_mesh(protocol, angles, grid)?;
    // The eigenphase +E of cos E + i sin E n·σ belongs to the +1 eigenvector of n·σ.
    let s = match band {
        Band::Upper => 1.0,
        Band::Lower => -1.0,
    };
    let u: Vec<[C64; 2]> = mesh.iter().map(|n| eigenvector(n, s)).collect();
    let at = |i: usize, j: usize| &u[(i % grid) * grid + (j % grid)];
    let mut flux = 0.0;
    for i in 0..grid {
        for j in 0..grid {
            let loop_ = link(at(i, j), at(i + 1, j))
                * link(at(i + 1, j), at(i + 1, j + 1))
                * link(at(i + 1, j + 1), at(i, j + 1))
                * link(at(i, j + 1), at(i, j));
            flux += loop_.arg();
        }
    }
    // arg⟨u|u+δ⟩ ≈ −A·δ with A = i⟨u|∂u⟩.
    let raw = -flux / (2.0 * PI);
    let value = raw.round();
    let residual = (raw - value).abs();
    if residual >= QUANTIZATION_TOLERANCE {
        return Err(Error::NotQuantized { raw, residual });
    }
    Ok(Chern { value: value as i32, raw, residual })
}

/// Direct Riemann sum of `(1/4π) ∫ n·(∂_x n × ∂_y n) d²k` with central
/// differences.
pub fn chern_riemann(protocol: &CoinedProtocol, angles: &[f64], grid: usize) -> Result<f64> {
    let mesh = bloch_mesh(protocol, angles, grid)?;
    let dk = 2.0 * PI / grid as f64;
    let at = |i: usize, j: usize| &mesh[(i % grid) * grid + (j % grid)];
    let mut sum = 0.0;
    for i in 0..grid {
        for j in 0..grid {
            let n = at(i, j);
            let (xp, xm) = (at(i + 1, j), at(i + grid - 1, j));
            let (yp, ym) = (at(i, j + 1), at(i, j + grid - 1));
            let dx: [f64; 3] = std::array::from_fn(|a| (xp[a] - xm[a]) / (2.0 * dk));
            let dy: [f64; 3] = std::array::from_fn(|a| (yp[a] - ym[a]) / (2.0 * dk));
            let cross = [dx[1] * dy[2] - dx[2] * dy[1], dx[2] * dy[0] - dx[0] * dy[2], dx[0] * dy[1] - dx[1] * dy[0]];
            sum += n[0] * cross[0] + n[1] * cross[1] + n[2] * cross[2];
        }
    }
    Ok(sum * dk * dk / (4.0 * PI))
}
