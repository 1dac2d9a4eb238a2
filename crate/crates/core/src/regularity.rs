//! Detection of wave-function structures that force constants of motion, and
//! verification of those constants along integrated trajectories. Together
//! with a vanishing Lyapunov exponent these certify zero-chaos cases.
//!
//! Three structures are recognized: two-group separable pairs over Cartesian
//! coordinates, the same over radial/polar coordinates (with the metric
//! factor folded in), and the symmetric three-term pattern over coordinate
//! triples. Detection is structural -- it compares factor identities by
//! family and quantum numbers, never numerical samples -- so it is invariant
//! under coefficient changes.

use serde::Serialize;
use thiserror::Error;

use crate::basis::{BasisState, FactorRole};
use crate::dynamics::Trajectory;
use crate::wavefunction::WaveFunction;

#[derive(Debug, Error)]
pub enum RegularityError {
    #[error("rotating frame needs a single-particle two-term superposition, got {particles} particles / {terms} terms")]
    NotTwoTermSingleParticle { particles: usize, terms: usize },
    #[error("rotating frame needs angular-momentum (phase-carrying) factors")]
    NotAngularForm,
    #[error("rotating frame undefined for equal angular momenta m1 = m2 = {m}")]
    EqualAngularMomenta { m: i32 },
    #[error("structure match does not apply to this wave function: {0}")]
    MatchMismatch(String),
    #[error("trajectory carries no samples")]
    EmptyTrajectory,
    #[error("every sample was skipped (singular quotient denominators)")]
    AllSamplesSkipped,
}

/// A scalar coordinate of one particle in the chart its basis family factors
/// over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ChartCoord {
    pub particle: usize,
    pub role: CoordRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CoordRole {
    X,
    Y,
    Z,
    /// Radial coordinate of a polar/spherical-basis particle.
    Radial,
    /// Polar angle of a spherical-basis particle.
    Theta,
}

impl CoordRole {
    fn factor_role(self) -> FactorRole {
        match self {
            CoordRole::X => FactorRole::Axis(0),
            CoordRole::Y => FactorRole::Axis(1),
            CoordRole::Z => FactorRole::Axis(2),
            CoordRole::Radial => FactorRole::Radial,
            CoordRole::Theta => FactorRole::Polar,
        }
    }

    fn is_cartesian(self) -> bool {
        matches!(self, CoordRole::X | CoordRole::Y | CoordRole::Z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StructureKind {
    /// Two-group factorization over a pair of Cartesian coordinates.
    PairSeparable,
    /// Two-group factorization over radial/polar coordinates.
    SphericalPair,
    /// Symmetric three-term pattern over a coordinate triple.
    ThreeTermSymmetric,
}

/// One detected structure: the coordinates involved and, per coordinate, the
/// two basis states supplying the distinct real factors (group order is
/// consistent across coordinates).
#[derive(Debug, Clone)]
pub struct StructureMatch {
    pub kind: StructureKind,
    pub coords: Vec<ChartCoord>,
    pub factors: Vec<(BasisState, BasisState)>,
}

#[derive(Debug, Clone)]
pub struct StructureReport {
    pub matches: Vec<StructureMatch>,
    /// Number of functionally coupling constraints: merges performed by a
    /// union-find over coordinates as matches are added in order.
    pub independent_count: usize,
}

/// Angular frequency of the co-rotating frame in which a two-term
/// angular-momentum superposition becomes stationary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotatingFrame {
    pub omega: f64,
    pub m1: i32,
    pub m2: i32,
    pub e1: f64,
    pub e2: f64,
}

/// Consistent basis family of one particle across every term, if any.
fn particle_real_coords(wf: &WaveFunction, particle: usize) -> Vec<ChartCoord> {
    let family = wf.terms()[0].factors[particle].family();
    if wf
        .terms()
        .iter()
        .any(|t| t.factors[particle].family() != family)
    {
        return Vec::new();
    }
    wf.terms()[0].factors[particle]
        .real_roles()
        .iter()
        .map(|role| ChartCoord {
            particle,
            role: match role {
                FactorRole::Axis(0) => CoordRole::X,
                FactorRole::Axis(1) => CoordRole::Y,
                FactorRole::Axis(_) => CoordRole::Z,
                FactorRole::Radial => CoordRole::Radial,
                FactorRole::Polar => CoordRole::Theta,
            },
        })
        .collect()
}

/// May these two coordinates carry a separable pair constant? Theta only
/// pairs with its own particle's radius: any other partner would drag a
/// metric factor depending on a third coordinate into the quotients.
fn pair_eligible(a: ChartCoord, b: ChartCoord) -> bool {
    match (a.role, b.role) {
        (CoordRole::Theta, CoordRole::Theta) => false,
        (CoordRole::Theta, other) | (other, CoordRole::Theta) => {
            other == CoordRole::Radial && a.particle == b.particle
        }
        _ => true,
    }
}

fn term_factor_id(
    wf: &WaveFunction,
    term: usize,
    coord: ChartCoord,
) -> crate::basis::FactorId {
    wf.terms()[term].factors[coord.particle]
        .factor_id(coord.role.factor_role())
        .expect("eligible coords always carry a factor id")
}

/// Enumerate every separable-pair and three-term-symmetric structure in the
/// term list. An empty report is a valid outcome.
pub fn detect_structure(wf: &WaveFunction) -> StructureReport {
    let mut coords: Vec<ChartCoord> = Vec::new();
    for p in 0..wf.particles() {
        coords.extend(particle_real_coords(wf, p));
    }
    let n_terms = wf.terms().len();
    let mut matches = Vec::new();

    // pairs: exactly two factor-id groups, differing in both coordinates
    for i in 0..coords.len() {
        for j in (i + 1)..coords.len() {
            let (a, b) = (coords[i], coords[j]);
            if !pair_eligible(a, b) {
                continue;
            }
            let ids: Vec<(crate::basis::FactorId, crate::basis::FactorId)> = (0..n_terms)
                .map(|t| (term_factor_id(wf, t, a), term_factor_id(wf, t, b)))
                .collect();
            let mut groups: Vec<(crate::basis::FactorId, crate::basis::FactorId, usize)> =
                Vec::new();
            for (t, id) in ids.iter().enumerate() {
                if !groups.iter().any(|(ga, gb, _)| (*ga, *gb) == *id) {
                    groups.push((id.0, id.1, t));
                }
            }
            if groups.len() == 2 && groups[0].0 != groups[1].0 && groups[0].1 != groups[1].1 {
                let (t1, t2) = (groups[0].2, groups[1].2);
                let kind = if a.role.is_cartesian() && b.role.is_cartesian() {
                    StructureKind::PairSeparable
                } else {
                    StructureKind::SphericalPair
                };
                matches.push(StructureMatch {
                    kind,
                    coords: vec![a, b],
                    factors: vec![
                        (
                            wf.terms()[t1].factors[a.particle].clone(),
                            wf.terms()[t2].factors[a.particle].clone(),
                        ),
                        (
                            wf.terms()[t1].factors[b.particle].clone(),
                            wf.terms()[t2].factors[b.particle].clone(),
                        ),
                    ],
                });
            }
        }
    }

    // triples: three groups forming the one-against-two symmetric pattern
    // with a common factor pair (A, B); theta coordinates are excluded (their
    // metric factor involves the radius)
    let plain: Vec<ChartCoord> = coords
        .iter()
        .copied()
        .filter(|c| c.role != CoordRole::Theta)
        .collect();
    for i in 0..plain.len() {
        for j in (i + 1)..plain.len() {
            for k in (j + 1)..plain.len() {
                let triple = [plain[i], plain[j], plain[k]];
                if let Some(m) = match_triple(wf, triple) {
                    matches.push(m);
                }
            }
        }
    }

    let independent_count = count_independent(&coords, &matches);
    StructureReport {
        matches,
        independent_count,
    }
}

fn match_triple(wf: &WaveFunction, triple: [ChartCoord; 3]) -> Option<StructureMatch> {
    let n_terms = wf.terms().len();
    let ids: Vec<[crate::basis::FactorId; 3]> = (0..n_terms)
        .map(|t| {
            [
                term_factor_id(wf, t, triple[0]),
                term_factor_id(wf, t, triple[1]),
                term_factor_id(wf, t, triple[2]),
            ]
        })
        .collect();
    let mut groups: Vec<([crate::basis::FactorId; 3], usize)> = Vec::new();
    for (t, id) in ids.iter().enumerate() {
        if !groups.iter().any(|(g, _)| g == id) {
            groups.push((*id, t));
        }
    }
    if groups.len() != 3 {
        return None;
    }
    // find (A, B): each group must be B everywhere except one slot of A,
    // with the A-slot distinct per group
    let all: Vec<crate::basis::FactorId> = groups.iter().flat_map(|(g, _)| g.iter().copied()).collect();
    let base = all[0];
    let other = all.iter().copied().find(|&x| x != base)?;
    for (a, b) in [(base, other), (other, base)] {
        let mut slots = [usize::MAX; 3];
        let mut ok = true;
        for (gi, (g, _)) in groups.iter().enumerate() {
            let a_slots: Vec<usize> = (0..3).filter(|&s| g[s] == a).collect();
            let b_count = (0..3).filter(|&s| g[s] == b).count();
            if a_slots.len() == 1 && b_count == 2 {
                slots[gi] = a_slots[0];
            } else {
                ok = false;
                break;
            }
        }
        if ok && slots[0] != slots[1] && slots[1] != slots[2] && slots[0] != slots[2] {
            // order groups so group g carries A in coordinate slot g
            let mut by_slot = [0usize; 3];
            for (gi, s) in slots.iter().enumerate() {
                by_slot[*s] = groups[gi].1;
            }
            let factors = (0..3)
                .map(|s| {
                    let t_a = by_slot[s];
                    let t_b = by_slot[(s + 1) % 3];
                    (
                        wf.terms()[t_a].factors[triple[s].particle].clone(),
                        wf.terms()[t_b].factors[triple[s].particle].clone(),
                    )
                })
                .collect();
            return Some(StructureMatch {
                kind: StructureKind::ThreeTermSymmetric,
                coords: triple.to_vec(),
                factors,
            });
        }
    }
    None
}

fn count_independent(coords: &[ChartCoord], matches: &[StructureMatch]) -> usize {
    let mut parent: Vec<usize> = (0..coords.len()).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let index_of = |c: ChartCoord| coords.iter().position(|&x| x == c).unwrap();
    let mut merges = 0;
    for m in matches {
        let first = index_of(m.coords[0]);
        for &c in &m.coords[1..] {
            let (ra, rb) = (find(&mut parent, first), find(&mut parent, index_of(c)));
            if ra != rb {
                parent[ra] = rb;
                merges += 1;
            }
        }
    }
    merges
}

/// Value of a chart coordinate at a Cartesian configuration.
fn chart_value(coords: &[f64], dim: usize, c: ChartCoord) -> f64 {
    let base = c.particle * dim;
    match c.role {
        CoordRole::X => coords[base],
        CoordRole::Y => coords[base + 1],
        CoordRole::Z => coords[base + 2],
        CoordRole::Radial => {
            let mut r2 = 0.0;
            for ax in 0..dim {
                r2 += coords[base + ax] * coords[base + ax];
            }
            r2.sqrt()
        }
        CoordRole::Theta => {
            let rho = (coords[base].powi(2) + coords[base + 1].powi(2)).sqrt();
            rho.atan2(coords[base + 2])
        }
    }
}

/// Chart velocity from Cartesian position and velocity; `None` at chart
/// singularities (origin, z-axis).
fn chart_velocity(coords: &[f64], vel: &[f64], dim: usize, c: ChartCoord) -> Option<f64> {
    let base = c.particle * dim;
    match c.role {
        CoordRole::X => Some(vel[base]),
        CoordRole::Y => Some(vel[base + 1]),
        CoordRole::Z => Some(vel[base + 2]),
        CoordRole::Radial => {
            let mut r2 = 0.0;
            let mut dot = 0.0;
            for ax in 0..dim {
                r2 += coords[base + ax] * coords[base + ax];
                dot += coords[base + ax] * vel[base + ax];
            }
            let r = r2.sqrt();
            (r > 1e-12).then(|| dot / r)
        }
        CoordRole::Theta => {
            let (x, y, z) = (coords[base], coords[base + 1], coords[base + 2]);
            let (vx, vy, vz) = (vel[base], vel[base + 1], vel[base + 2]);
            let rho2 = x * x + y * y;
            let rho = rho2.sqrt();
            let r2 = rho2 + z * z;
            if rho < 1e-12 || r2 < 1e-24 {
                return None;
            }
            let rho_dot = (x * vx + y * vy) / rho;
            Some((z * rho_dot - rho * vz) / r2)
        }
    }
}

/// The quotient `f1 f2 / (f1 f2' - f2 f1')` at coordinate value `q`; `None`
/// when the denominator is degenerate there.
fn quotient(
    states: &(BasisState, BasisState),
    role: FactorRole,
    q: f64,
) -> Option<f64> {
    let (v1, d1) = states.0.scalar_factor(role, q);
    let (v2, d2) = states.1.scalar_factor(role, q);
    let wronskian = v1 * d2 - v2 * d1;
    let scale = (v1 * d2).abs() + (v2 * d1).abs();
    if wronskian.abs() <= 1e-12 * scale.max(1e-300) {
        return None;
    }
    Some(v1 * v2 / wronskian)
}

/// Maximum over trajectory samples of the differential constant-of-motion
/// residual: `|f(u) du/dt - g(w) dw/dt|` for pairs, `|sum_i f(u_i) du_i/dt|`
/// for triples. Sample velocities are the interpolant derivatives recorded
/// by the integrator, so the residual shrinks with the tolerance. Samples
/// with singular quotient denominators are skipped and counted.
pub fn com_residual(
    wf: &WaveFunction,
    traj: &Trajectory,
    m: &StructureMatch,
) -> Result<(f64, usize), RegularityError> {
    if traj.samples.is_empty() {
        return Err(RegularityError::EmptyTrajectory);
    }
    let dim = wf.dimension();
    for c in &m.coords {
        if c.particle >= wf.particles() {
            return Err(RegularityError::MatchMismatch(format!(
                "particle {} out of range",
                c.particle
            )));
        }
    }
    let expect = match m.kind {
        StructureKind::ThreeTermSymmetric => 3,
        _ => 2,
    };
    if m.coords.len() != expect || m.factors.len() != expect {
        return Err(RegularityError::MatchMismatch(
            "coordinate/factor arity does not match kind".into(),
        ));
    }

    let mut max_residual: f64 = 0.0;
    let mut skipped = 0usize;
    'samples: for ((_, q), vel) in traj.samples.iter().zip(&traj.velocities) {
        let mut residual = 0.0;
        for (idx, (coord, states)) in m.coords.iter().zip(&m.factors).enumerate() {
            let u = chart_value(&q.coordinates, dim, *coord);
            let Some(udot) = chart_velocity(&q.coordinates, vel, dim, *coord) else {
                skipped += 1;
                continue 'samples;
            };
            let Some(mut quot) = quotient(states, coord.role.factor_role(), u) else {
                skipped += 1;
                continue 'samples;
            };
            // radius paired with its own theta carries the 1/r^2 metric factor
            if coord.role == CoordRole::Radial
                && m.coords
                    .iter()
                    .any(|c| c.role == CoordRole::Theta && c.particle == coord.particle)
            {
                if u < 1e-12 {
                    skipped += 1;
                    continue 'samples;
                }
                quot /= u * u;
            }
            let term = quot * udot;
            residual += match m.kind {
                StructureKind::ThreeTermSymmetric => term,
                // pairs: f(u) du/dt - g(w) dw/dt
                _ => {
                    if idx == 0 {
                        term
                    } else {
                        -term
                    }
                }
            };
        }
        max_residual = max_residual.max(residual.abs());
    }
    if skipped == traj.samples.len() {
        return Err(RegularityError::AllSamplesSkipped);
    }
    Ok((max_residual, skipped))
}

/// Rotating-frame frequency `omega = (E1 - E2)/(m2 - m1)` of a two-term
/// single-particle angular-momentum superposition.
pub fn rotating_frame(wf: &WaveFunction) -> Result<RotatingFrame, RegularityError> {
    if wf.particles() != 1 || wf.terms().len() != 2 {
        return Err(RegularityError::NotTwoTermSingleParticle {
            particles: wf.particles(),
            terms: wf.terms().len(),
        });
    }
    let s1 = &wf.terms()[0].factors[0];
    let s2 = &wf.terms()[1].factors[0];
    let (m1, m2) = match (s1.azimuthal_m(), s2.azimuthal_m()) {
        (Some(m1), Some(m2)) => (m1, m2),
        _ => return Err(RegularityError::NotAngularForm),
    };
    if m1 == m2 {
        return Err(RegularityError::EqualAngularMomenta { m: m1 });
    }
    let e1 = s1.energy();
    let e2 = s2.energy();
    Ok(RotatingFrame {
        omega: (e1 - e2) / (m2 - m1) as f64,
        m1,
        m2,
        e1,
        e2,
    })
}
