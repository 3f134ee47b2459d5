use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::pulse::{propagate, Integrator};
use super::{RydbergParams, TWO_PI};
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, LatticeSpec, SiteTable, UnitKind};
use crate::par::{self, Exec};
use crate::C64;

/// Neighbors considered in the leakage sum.
pub const DEFAULT_SHELL: usize = 8;

/// The `size` sites nearest to `walker`, excluding `walker` and `target`,
/// ties broken by index. Distances equal to 1e-9 relative count as ties.
pub fn neighbor_shell(table: &SiteTable, walker: usize, target: usize, size: usize) -> Vec<usize> {
    let mut others: Vec<(f64, usize)> =
        (0..table.len()).filter(|&k| k != walker && k != target).map(|k| (table.distance(walker, k), k)).collect();
    others.sort_by(|a, b| {
        let tie = (a.0 - b.0).abs() <= 1e-9 * a.0.max(b.0);
        if tie {
            a.1.cmp(&b.1)
        } else {
            a.0.total_cmp(&b.0)
        }
    });
    others.into_iter().take(size).map(|(_, k)| k).collect()
}

fn check_pair(table: &SiteTable, walker: usize, target: usize) -> Result<()> {
    for s in [walker, target] {
        if s >= table.len() {
            return Err(Error::SiteOutOfRange { index: s, len: table.len() });
        }
    }
    if walker == target {
        return Err(Error::InvalidParameter("walker and target coincide".into()));
    }
    Ok(())
}

/// Exchange between sites `a` and `b` with the quantization axis along
/// the walker–target bond.
fn exchange_along(table: &SiteTable, axis: [f64; 3], a: usize, b: usize, params: &RydbergParams) -> Result<f64> {
    let (pa, pb) = (table.site(a).position, table.site(b).position);
    let d = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let cos = (d[0] * axis[0] + d[1] * axis[1] + d[2] * axis[2]) / r;
    params.exchange(r, cos.clamp(-1.0, 1.0).acos())
}

fn bond_axis(table: &SiteTable, walker: usize, target: usize) -> [f64; 3] {
    let (pa, pb) = (table.site(walker).position, table.site(target).position);
    let r = table.distance(walker, target);
    [(pb[0] - pa[0]) / r, (pb[1] - pa[1]) / r, (pb[2] - pa[2]) / r]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageTerm {
    pub site: usize,
    pub distance_um: f64,
    pub phi: f64,
    pub exchange_mhz: f64,
    /// `(Ω²/4) / (V_ij − V_ik)²`
    pub symmetric: f64,
    /// `(Ω²/4) / (V_ij + V_ik)²`, the exchange-antisymmetric branch.
    pub antisymmetric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub target_exchange_mhz: f64,
    pub omega_mhz: f64,
    /// `Σ_k (Ω²/4) / (V_ij − V_ik)²`
    pub infidelity: f64,
    /// Sum over both exchange branches.
    pub two_branch: f64,
    pub terms: Vec<LeakageTerm>,
}

/// Population leaked to the neighbor shell during a pulse resonant with the
/// pair `(walker, target)`.
pub fn leakage_infidelity(
    table: &SiteTable,
    walker: usize,
    target: usize,
    params: &RydbergParams,
    omega_mhz: f64,
    shell: usize,
) -> Result<LeakageReport> {
    check_pair(table, walker, target)?;
    let axis = bond_axis(table, walker, target);
    let vij = exchange_along(table, axis, walker, target, params)?;
    let q = omega_mhz * omega_mhz / 4.0;
    let mut terms = Vec::with_capacity(shell);
    for k in neighbor_shell(table, walker, target, shell) {
        let vik = exchange_along(table, axis, walker, k, params)?;
        let gap = vij - vik;
        if gap.abs() <= 1e-9 * vij.abs() {
            return Err(Error::ResonantCollision { site: k });
        }
        let (pw, pk) = (table.site(walker).position, table.site(k).position);
        let d = [pk[0] - pw[0], pk[1] - pw[1], pk[2] - pw[2]];
        let r = table.distance(walker, k);
        let cos = (d[0] * axis[0] + d[1] * axis[1] + d[2] * axis[2]) / r;
        terms.push(LeakageTerm {
            site: k,
            distance_um: r,
            phi: cos.clamp(-1.0, 1.0).acos(),
            exchange_mhz: vik,
            symmetric: q / (gap * gap),
            antisymmetric: q / ((vij + vik) * (vij + vik)),
        });
    }
    Ok(LeakageReport {
        target_exchange_mhz: vij,
        omega_mhz,
        infidelity: terms.iter().map(|t| t.symmetric).sum(),
        two_branch: terms.iter().map(|t| t.symmetric + t.antisymmetric).sum(),
        terms,
    })
}

/// Time-averaged shell population from the multi-site Schrödinger equation.
///
/// The basis holds one `p` excitation and at most one `s` excitation on the
/// walker, the target and the shell sites. The laser drives `g → s` on every
/// site without the `p`, detuned by `Δ = −V_ij`; `|p_a s_b⟩ ↔ |s_a p_b⟩`
/// couple with `V_ab`. The pulse lasts `1/Ω` μs from `|p_walker⟩`.
pub fn numerical_leakage(
    table: &SiteTable,
    walker: usize,
    target: usize,
    params: &RydbergParams,
    omega_mhz: f64,
    shell: usize,
    samples: usize,
) -> Result<f64> {
    check_pair(table, walker, target)?;
    let axis = bond_axis(table, walker, target);
    let mut sites = vec![walker, target];
    sites.extend(neighbor_shell(table, walker, target, shell));
    let n = sites.len();
    let vij = exchange_along(table, axis, walker, target, params)?;
    let mut v = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        for b in a + 1..n {
            let x = exchange_along(table, axis, sites[a], sites[b], params)?;
            v[(a, b)] = x;
            v[(b, a)] = x;
        }
    }
    let dim = n + n * (n - 1);
    let ps = |a: usize, b: usize| n + a * (n - 1) + if b < a { b } else { b - 1 };
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    let half = C64::new(TWO_PI * omega_mhz / 2.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let s = ps(a, b);
            h[(a, s)] = half;
            h[(s, a)] = half;
            h[(s, s)] = C64::new(-TWO_PI * vij, 0.0);
            h[(s, ps(b, a))] = C64::new(TWO_PI * v[(a, b)], 0.0);
        }
    }
    let mut psi0 = DVector::zeros(dim);
    psi0[0] = C64::new(1.0, 0.0);
    let leaked: Vec<bool> = (0..dim)
        .map(|idx| {
            if idx < n {
                idx >= 2
            } else {
                let a = (idx - n) / (n - 1);
                let r = (idx - n) % (n - 1);
                let b = if r < a { r } else { r + 1 };
                a >= 2 || b >= 2
            }
        })
        .collect();
    let samples = samples.max(2);
    let mut acc = 0.0;
    propagate(&h, &psi0, 1.0 / omega_mhz, samples, Integrator::Spectral, |m, psi| {
        let p: f64 = psi.iter().zip(&leaked).filter(|(_, &l)| l).map(|(z, _)| z.norm_sqr()).sum();
        let w = if m == 0 || m == samples { 0.5 } else { 1.0 };
        acc += w * p;
    })?;
    Ok(acc / samples as f64)
}

/// Largest `Ω/|V_ij|` (capped at 1) keeping the shell leakage at or below
/// `1 − fidelity`, by bisection.
pub fn contrast_requirement(
    table: &SiteTable,
    walker: usize,
    target: usize,
    params: &RydbergParams,
    fidelity: f64,
    shell: usize,
) -> Result<f64> {
    if !(fidelity > 0.0 && fidelity < 1.0) {
        return Err(Error::InvalidParameter(format!("fidelity {fidelity} outside (0, 1)")));
    }
    let budget = 1.0 - fidelity;
    let vij = leakage_infidelity(table, walker, target, params, 0.0, shell)?.target_exchange_mhz.abs();
    let loss = |r: f64| leakage_infidelity(table, walker, target, params, r * vij, shell).map(|l| l.infidelity);
    let (mut lo, mut hi) = (0.0, 1.0);
    if loss(hi)? <= budget {
        return Ok(hi);
    }
    if loss(1e-12)? > budget {
        return Err(Error::Unreachable(fidelity));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if loss(mid)? <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(lo)
}

/// Tessellation family of the target bond on a dimer lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Intra-dimer bond of length `a_x0`.
    X0,
    /// Inter-dimer bond of length `a_x1`.
    X1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastPoint {
    pub a_x1: f64,
    /// `(a_x0 − a_x1)/a_x0`
    pub contrast: f64,
    /// Allowed `Ω/Δ`; absent at a resonant collision.
    pub omega_over_delta: Option<f64>,
    pub collision: Option<usize>,
}

/// Walker and target in the central cell of a 3×3×3 dimer lattice with
/// `a_y = a_z = a_x0`.
pub fn family_pair(a_x0: f64, a_x1: f64, family: Family) -> Result<(SiteTable, usize, usize)> {
    let spec = LatticeSpec::new(UnitKind::Dimer, &[3, 3, 3], &[a_x0, a_x0, a_x0], &[a_x1, a_x0, a_x0]);
    let table = build_lattice(&spec)?;
    let odd = table.index([1, 1, 1], 0).expect("central cell");
    let even = table.index([1, 1, 1], 1).expect("central cell");
    Ok(match family {
        Family::X0 => (table, odd, even),
        Family::X1 => {
            let next = table.index([2, 1, 1], 0).expect("neighbor cell");
            (table, even, next)
        }
    })
}

/// Required `Ω/Δ` against `a_x1` for one family.
pub fn contrast_curve(
    a_x0: f64,
    a_x1: &[f64],
    family: Family,
    params: &RydbergParams,
    fidelity: f64,
    shell: usize,
    exec: Exec,
) -> Result<Vec<ContrastPoint>> {
    par::map(exec, a_x1, |&a1| {
        let (table, w, t) = family_pair(a_x0, a1, family)?;
        let contrast = (a_x0 - a1) / a_x0;
        match contrast_requirement(&table, w, t, params, fidelity, shell) {
            Ok(r) => Ok(ContrastPoint { a_x1: a1, contrast, omega_over_delta: Some(r), collision: None }),
            Err(Error::ResonantCollision { site }) => {
                Ok(ContrastPoint { a_x1: a1, contrast, omega_over_delta: None, collision: Some(site) })
            }
            Err(e) => Err(e),
        }
    })
    .into_iter()
    .collect()
}
