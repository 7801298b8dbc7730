//! Conforming finite-element discretization of the chain: piecewise-linear
//! elements on strings (H¹), cubic Hermite elements on beams (H², slope
//! degrees of freedom at beam nodes).
//!
//! Interior chain nodes share one displacement DOF, which builds the
//! continuity conditions into the space; the zero-moment and force-balance
//! transmission conditions are natural for the weak form. Dissipative
//! couplings enter as boundary velocity traces: value traces at the interior
//! nodes for both damped variants, plus beam end slope-velocity traces for
//! the second one. Both ends of the chain are pinned (value rows
//! eliminated).

pub mod decay;
pub mod oracle;
pub mod resolvent;
pub mod sim;

use nalgebra::{DMatrix, DVector, Matrix4};

use crate::chain::{ChainGeometry, EdgeKind};
use crate::error::{Error, Result};
use crate::modes::ZeroModeBasis;

/// Which evolution system the discretization targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Velocity-trace damping at every interior node.
    P1,
    /// Interior-node damping plus beam end slope-velocity damping.
    P2,
    /// Conservative.
    Pc,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::P1 => write!(f, "p1"),
            Variant::P2 => write!(f, "p2"),
            Variant::Pc => write!(f, "pc"),
        }
    }
}

/// One rank-one dissipative coupling: the squared velocity trace it taps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// Velocity at interior node j (1-based, j = 1..2N-1).
    NodeVelocity { node: usize },
    /// Slope velocity of beam pair j (1-based) at its x = 0 end.
    BeamSlopeStart { pair: usize },
    /// Slope velocity of beam pair j at its x = l end (interior beams).
    BeamSlopeEnd { pair: usize },
}

impl std::fmt::Display for TraceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceKind::NodeVelocity { node } => write!(f, "node_velocity({node})"),
            TraceKind::BeamSlopeStart { pair } => write!(f, "beam_slope_start({pair})"),
            TraceKind::BeamSlopeEnd { pair } => write!(f, "beam_slope_end({pair})"),
        }
    }
}

/// Mesh of one edge: per-node global DOF ids; `None` marks a pinned value.
#[derive(Debug, Clone)]
pub struct EdgeMesh {
    pub elements: usize,
    pub h: f64,
    pub value_dofs: Vec<Option<usize>>,
    /// Empty on strings.
    pub slope_dofs: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub struct DofMap {
    pub edges: Vec<EdgeMesh>,
    pub n_dofs: usize,
}

/// Assembled operators of one variant at one mesh resolution.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub geom: ChainGeometry,
    pub variant: Variant,
    pub h_target: f64,
    pub dofs: DofMap,
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// Damping operator D = Σ e eᵗ over these trace DOFs (diagonal 0/1).
    pub damping: Vec<(TraceKind, usize)>,
}

impl DiscreteSystem {
    pub fn n_dofs(&self) -> usize {
        self.dofs.n_dofs
    }

    /// vᵗ D v.
    pub fn damping_quadratic(&self, v: &DVector<f64>) -> f64 {
        self.damping.iter().map(|&(_, d)| v[d] * v[d]).sum()
    }

    /// D v.
    pub fn apply_damping(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for &(_, d) in &self.damping {
            out[d] = v[d];
        }
        out
    }

    /// Interpolates edge-wise closed-form data onto the mesh. The callback
    /// returns (value, slope) at a local coordinate; slopes matter only on
    /// beams.
    pub fn interpolate(&self, f: impl Fn(usize, f64) -> (f64, f64)) -> DVector<f64> {
        let mut u = DVector::zeros(self.n_dofs());
        for (edge, mesh) in self.dofs.edges.iter().enumerate() {
            for node in 0..=mesh.elements {
                let x = node as f64 * mesh.h;
                let (value, slope) = f(edge, x);
                if let Some(d) = mesh.value_dofs[node] {
                    u[d] = value;
                }
                if let Some(&Some(d)) = mesh.slope_dofs.get(node) {
                    u[d] = slope;
                }
            }
        }
        u
    }

    /// Mesh interpolants of the exact zero-eigenspace basis; they lie in the
    /// discrete stiffness kernel exactly (constants and affine functions are
    /// represented exactly by both element families).
    pub fn zero_mode_interpolants(&self) -> Vec<DVector<f64>> {
        let basis: ZeroModeBasis = crate::modes::zero_eigenspace(&self.geom);
        basis
            .modes
            .iter()
            .map(|m| self.interpolate(|edge, x| (m.eval(&self.geom, edge, x), m.slope(&self.geom, edge))))
            .collect()
    }

    /// A compactly supported smooth bump on the first string with vanishing
    /// end traces. Default initial displacement for decay experiments.
    pub fn smooth_bump(&self) -> DVector<f64> {
        let l = self.geom.length(0);
        self.interpolate(|edge, x| {
            if edge != 0 {
                return (0.0, 0.0);
            }
            let xi = (2.0 * x - l) / l;
            if xi.abs() >= 1.0 {
                (0.0, 0.0)
            } else {
                ((-1.0 / (1.0 - xi * xi)).exp(), 0.0)
            }
        })
    }
}

fn string_element(h: f64) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let k = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
    let m = [
        [h / 3.0, h / 6.0], //
        [h / 6.0, h / 3.0],
    ];
    (k, m)
}

fn beam_element(h: f64) -> (Matrix4<f64>, Matrix4<f64>) {
    let h2 = h * h;
    let h3 = h2 * h;
    let k = Matrix4::new(
        12.0, 6.0 * h, -12.0, 6.0 * h, //
        6.0 * h, 4.0 * h2, -6.0 * h, 2.0 * h2, //
        -12.0, -6.0 * h, 12.0, -6.0 * h, //
        6.0 * h, 2.0 * h2, -6.0 * h, 4.0 * h2,
    ) / h3;
    let m = Matrix4::new(
        156.0, 22.0 * h, 54.0, -13.0 * h, //
        22.0 * h, 4.0 * h2, 13.0 * h, -3.0 * h2, //
        54.0, 13.0 * h, 156.0, -22.0 * h, //
        -13.0 * h, -3.0 * h2, -22.0 * h, 4.0 * h2,
    ) * (h / 420.0);
    (k, m)
}

/// Builds the mesh, shares junction value DOFs, eliminates the two pinned
/// end values and assembles mass/stiffness plus the variant's damping
/// traces.
pub fn discretize(geom: &ChainGeometry, h: f64, variant: Variant) -> Result<DiscreteSystem> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("mesh size must be positive, got {h}")));
    }
    let num_edges = geom.num_edges();

    // Allocate DOFs edge by edge.
    let mut edges: Vec<EdgeMesh> = Vec::with_capacity(num_edges);
    let mut next = 0usize;
    let mut alloc = || {
        let d = next;
        next += 1;
        Some(d)
    };
    for edge in 0..num_edges {
        let l = geom.length(edge);
        let elements = (l / h).ceil() as usize;
        if elements < 4 {
            return Err(Error::MeshTooCoarse { edge, elements });
        }
        let he = l / elements as f64;
        let beam = geom.kind(edge) == EdgeKind::Beam;
        let mut value_dofs = Vec::with_capacity(elements + 1);
        let mut slope_dofs = Vec::new();
        for node in 0..=elements {
            let value = if node == 0 {
                match edges.last() {
                    // Share the junction displacement with the previous edge.
                    Some(prev) => *prev.value_dofs.last().unwrap(),
                    // Pinned left end of the chain.
                    None => None,
                }
            } else if edge == num_edges - 1 && node == elements {
                None // pinned right end
            } else {
                alloc()
            };
            value_dofs.push(value);
            if beam {
                slope_dofs.push(alloc());
            }
        }
        edges.push(EdgeMesh {
            elements,
            h: he,
            value_dofs,
            slope_dofs,
        });
    }
    let n = next;

    let mut mass = DMatrix::zeros(n, n);
    let mut stiffness = DMatrix::zeros(n, n);
    for (edge, mesh) in edges.iter().enumerate() {
        match geom.kind(edge) {
            EdgeKind::String => {
                let (ke, me) = string_element(mesh.h);
                for e in 0..mesh.elements {
                    let dofs = [mesh.value_dofs[e], mesh.value_dofs[e + 1]];
                    for (a, da) in dofs.iter().enumerate() {
                        let Some(da) = da else { continue };
                        for (b, db) in dofs.iter().enumerate() {
                            let Some(db) = db else { continue };
                            stiffness[(*da, *db)] += ke[a][b];
                            mass[(*da, *db)] += me[a][b];
                        }
                    }
                }
            }
            EdgeKind::Beam => {
                let (ke, me) = beam_element(mesh.h);
                for e in 0..mesh.elements {
                    let dofs = [
                        mesh.value_dofs[e],
                        mesh.slope_dofs[e],
                        mesh.value_dofs[e + 1],
                        mesh.slope_dofs[e + 1],
                    ];
                    for (a, da) in dofs.iter().enumerate() {
                        let Some(da) = da else { continue };
                        for (b, db) in dofs.iter().enumerate() {
                            let Some(db) = db else { continue };
                            stiffness[(*da, *db)] += ke[(a, b)];
                            mass[(*da, *db)] += me[(a, b)];
                        }
                    }
                }
            }
        }
    }

    // Dissipative velocity traces.
    let mut damping = Vec::new();
    if matches!(variant, Variant::P1 | Variant::P2) {
        for edge in 0..num_edges - 1 {
            let dof = edges[edge]
                .value_dofs
                .last()
                .copied()
                .flatten()
                .expect("interior junction carries a free value DOF");
            damping.push((TraceKind::NodeVelocity { node: edge + 1 }, dof));
        }
    }
    if variant == Variant::P2 {
        let n_pairs = geom.n_pairs();
        for pair in 1..=n_pairs {
            let mesh = &edges[2 * pair - 1];
            damping.push((
                TraceKind::BeamSlopeStart { pair },
                mesh.slope_dofs[0].expect("beam start slope DOF"),
            ));
        }
        for pair in 1..n_pairs {
            let mesh = &edges[2 * pair - 1];
            damping.push((
                TraceKind::BeamSlopeEnd { pair },
                mesh.slope_dofs.last().copied().flatten().expect("beam end slope DOF"),
            ));
        }
    }

    Ok(DiscreteSystem {
        geom: geom.clone(),
        variant,
        h_target: h,
        dofs: DofMap { edges, n_dofs: n },
        mass,
        stiffness,
        damping,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::validate_chain;
    use approx::assert_relative_eq;

    fn geom(lengths: &[f64]) -> ChainGeometry {
        validate_chain(lengths).unwrap()
    }

    #[test]
    fn conservative_variant_has_no_damping() {
        let sys = discretize(&geom(&[1.0, 1.0]), 0.1, Variant::Pc).unwrap();
        assert!(sys.damping.is_empty());
    }

    #[test]
    fn p1_single_pair_damping_is_rank_one() {
        let sys = discretize(&geom(&[1.0, 1.0]), 0.1, Variant::P1).unwrap();
        assert_eq!(sys.damping.len(), 1);
        assert!(matches!(sys.damping[0].0, TraceKind::NodeVelocity { node: 1 }));
    }

    #[test]
    fn p2_term_count_matches_dissipation_structure() {
        // N=1: one node trace + one beam-start slope trace.
        let sys = discretize(&geom(&[1.0, 1.0]), 0.1, Variant::P2).unwrap();
        assert_eq!(sys.damping.len(), 2);
        // N=2: 3 node traces + 2 beam-start + 1 interior beam-end.
        let sys = discretize(&geom(&[1.0, 0.8, 1.3, 0.9]), 0.1, Variant::P2).unwrap();
        assert_eq!(sys.damping.len(), 6);
        assert_eq!(
            sys.damping
                .iter()
                .filter(|(k, _)| matches!(k, TraceKind::BeamSlopeEnd { .. }))
                .count(),
            1
        );
    }

    #[test]
    fn too_coarse_mesh_is_rejected() {
        assert!(matches!(
            discretize(&geom(&[1.0, 1.0]), 0.5, Variant::Pc),
            Err(Error::MeshTooCoarse { .. })
        ));
    }

    #[test]
    fn matrices_are_symmetric() {
        let sys = discretize(&geom(&[1.0, 0.8, 1.3, 0.9]), 0.05, Variant::Pc).unwrap();
        let n = sys.n_dofs();
        for i in 0..n {
            for j in 0..i {
                assert_relative_eq!(sys.mass[(i, j)], sys.mass[(j, i)], epsilon = 1e-14);
                assert_relative_eq!(
                    sys.stiffness[(i, j)],
                    sys.stiffness[(j, i)],
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn exact_energies_of_polynomial_fields() {
        // Both element families represent affine fields exactly, Hermite
        // cubics also parabolas: u = x on the string ramping back down the
        // beam has stiffness energy exactly 1 (string) + 0 (affine beam);
        // the beam parabola x(1-x) has bending energy ∫(u'')² = 4.
        let g = geom(&[1.0, 1.0]);
        let sys = discretize(&g, 0.125, Variant::Pc).unwrap();
        let ramp = sys.interpolate(|edge, x| {
            if edge == 0 {
                (x, 1.0)
            } else {
                (1.0 - x, -1.0)
            }
        });
        let e = (ramp.transpose() * &sys.stiffness * &ramp)[(0, 0)];
        assert_relative_eq!(e, 1.0, max_relative = 1e-12);

        let ub = sys.interpolate(|edge, x| {
            if edge == 1 {
                (x * (1.0 - x), 1.0 - 2.0 * x) // vanishes at both chain ends
            } else {
                (0.0, 0.0)
            }
        });
        let bend = (ub.transpose() * &sys.stiffness * &ub)[(0, 0)];
        assert_relative_eq!(bend, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_mode_interpolants_lie_in_the_stiffness_kernel() {
        let g = geom(&[1.0, 0.8, 1.3, 0.9]);
        let sys = discretize(&g, 0.05, Variant::Pc).unwrap();
        let zs = sys.zero_mode_interpolants();
        assert_eq!(zs.len(), 1);
        let k_norm = sys.stiffness.norm();
        for z in zs {
            let res = (&sys.stiffness * &z).norm() / (k_norm * z.norm());
            assert!(res < 1e-14, "relative kernel residual {res}");
        }
    }
}
