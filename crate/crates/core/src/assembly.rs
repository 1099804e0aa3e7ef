//! Global assembly over linear triangles.
//!
//! Displacement-gradient terms are constant per element. Every term that
//! involves the phase field is integrated exactly: the element mean of the
//! degradation factor and the consistent mass matrix are used, so that the
//! residuals are the exact gradients of the discrete energy and the tangents
//! are the exact Hessians away from the trace kink.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linsolve::{LinearSolverKind, SpdSolver};
use crate::material::{self, MaterialParams, ModelKind, VoigtStrain, VoigtStress};
use crate::mesh::Mesh;
use crate::sparse::{SparseSym, SparsityPattern};

/// Nodal displacement and phase-field values at one load level.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    /// `2 * n_nodes` entries (x, y interleaved) for plane strain, `n_nodes` for anti-plane.
    pub u: Vec<f64>,
    pub d: Vec<f64>,
}

impl FieldState {
    pub fn zeros(disc: &Discretization) -> Self {
        FieldState {
            u: vec![0.0; disc.num_u_dofs()],
            d: vec![0.0; disc.num_nodes()],
        }
    }

    pub fn max_d(&self) -> f64 {
        self.d.iter().cloned().fold(0.0, f64::max)
    }
}

/// Element energies split into the elastic and surface parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Energy {
    pub elastic: f64,
    pub surface: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.elastic + self.surface
    }
}

/// Prescribes `factor * load` on component `component` of every node in `set`.
#[derive(Debug, Clone, PartialEq)]
pub struct BcRule {
    pub set: String,
    pub component: usize,
    pub factor: f64,
}

impl BcRule {
    pub fn new(set: &str, component: usize, factor: f64) -> Self {
        BcRule {
            set: set.to_string(),
            component,
            factor,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Element {
    nodes: [usize; 3],
    area: f64,
    /// Shape function gradients.
    grad: [[f64; 2]; 3],
}

/// Consistent mass matrix of a linear triangle divided by its area.
const MASS: [[f64; 3]; 3] = [
    [1.0 / 6.0, 1.0 / 12.0, 1.0 / 12.0],
    [1.0 / 12.0, 1.0 / 6.0, 1.0 / 12.0],
    [1.0 / 12.0, 1.0 / 12.0, 1.0 / 6.0],
];

/// Mesh, dof layout, boundary-condition template and cached solver analyses
/// for one problem. Material parameters are passed to every operation so
/// they can be varied (e.g. for continuation in `Gc`).
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Arc<Mesh>,
    kind: ModelKind,
    elements: Vec<Element>,
    bc_dofs: Vec<usize>,
    bc_factors: Vec<f64>,
    u_fixed: Vec<bool>,
    u_pattern: Arc<SparsityPattern>,
    u_scatter: Vec<usize>,
    d_pattern: Arc<SparsityPattern>,
    d_scatter: Vec<usize>,
    u_solver: SpdSolver,
    d_solver: SpdSolver,
    d_fixed: Vec<bool>,
}

impl Discretization {
    pub fn new(
        mesh: Arc<Mesh>,
        kind: ModelKind,
        bc: &[BcRule],
        solver: LinearSolverKind,
    ) -> Result<Self> {
        mesh.validate()?;
        let dpn = kind.dofs_per_node();
        let elements: Vec<Element> = mesh
            .triangles
            .iter()
            .map(|&tri| {
                let [a, b, c] = tri.map(|i| mesh.nodes[i]);
                let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                let inv = 1.0 / area2;
                Element {
                    nodes: tri,
                    area: 0.5 * area2,
                    grad: [
                        [(b[1] - c[1]) * inv, (c[0] - b[0]) * inv],
                        [(c[1] - a[1]) * inv, (a[0] - c[0]) * inv],
                        [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv],
                    ],
                }
            })
            .collect();

        let mut prescribed: BTreeMap<usize, f64> = BTreeMap::new();
        for rule in bc {
            if rule.component >= dpn {
                return Err(Error::InvalidMesh(format!(
                    "boundary rule on `{}` uses component {} but nodes carry {dpn} dofs",
                    rule.set, rule.component
                )));
            }
            for &n in mesh.node_set(&rule.set)? {
                prescribed.insert(n * dpn + rule.component, rule.factor);
            }
        }
        let n_u = mesh.num_nodes() * dpn;
        let mut u_fixed = vec![false; n_u];
        for &dof in prescribed.keys() {
            u_fixed[dof] = true;
        }
        let (bc_dofs, bc_factors) = prescribed.into_iter().unzip();

        let (u_pattern, u_scatter) = build_layout(&mesh, dpn);
        let (d_pattern, d_scatter) = build_layout(&mesh, 1);
        let u_solver = SpdSolver::new(&u_pattern, &u_fixed, solver);
        let mesh_nodes = mesh.num_nodes();
        let d_solver = SpdSolver::new(&d_pattern, &vec![false; mesh_nodes], solver);
        Ok(Discretization {
            mesh,
            kind,
            elements,
            bc_dofs,
            bc_factors,
            u_fixed,
            u_pattern,
            u_scatter,
            d_pattern,
            d_scatter,
            u_solver,
            d_solver,
            d_fixed: vec![false; mesh_nodes],
        })
    }

    /// Holds the phase field at zero on the given node sets.
    pub fn with_intact_sets(mut self, sets: &[String]) -> Result<Self> {
        for name in sets {
            for &n in self.mesh.node_set(name)? {
                self.d_fixed[n] = true;
            }
        }
        self.d_solver = SpdSolver::new(&self.d_pattern, &self.d_fixed, self.u_solver.kind());
        Ok(self)
    }

    /// Nodes whose phase field is held at zero.
    pub fn intact_mask(&self) -> &[bool] {
        &self.d_fixed
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    pub fn num_u_dofs(&self) -> usize {
        self.u_fixed.len()
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.u_fixed[dof]
    }

    pub fn fixed_mask(&self) -> &[bool] {
        &self.u_fixed
    }

    pub(crate) fn u_solver(&self) -> &SpdSolver {
        &self.u_solver
    }

    pub(crate) fn d_solver(&self) -> &SpdSolver {
        &self.d_solver
    }

    /// `(dof, value)` pairs prescribed at load factor `load`.
    pub fn prescribed(&self, load: f64) -> Vec<(usize, f64)> {
        self.bc_dofs
            .iter()
            .zip(&self.bc_factors)
            .map(|(&dof, &f)| (dof, f * load))
            .collect()
    }

    /// Full-length vector holding the prescribed values (zero elsewhere).
    pub fn prescribed_vector(&self, load: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.num_u_dofs()];
        for (dof, val) in self.prescribed(load) {
            v[dof] = val;
        }
        v
    }

    /// Overwrites the constrained displacement dofs with their values at `load`.
    pub fn apply_bc(&self, state: &mut FieldState, load: f64) {
        for (&dof, &f) in self.bc_dofs.iter().zip(&self.bc_factors) {
            state.u[dof] = f * load;
        }
    }

    /// Euclidean norm of `r` restricted to the free displacement dofs.
    pub fn free_norm(&self, r: &[f64]) -> f64 {
        r.iter()
            .zip(&self.u_fixed)
            .filter(|(_, &fixed)| !fixed)
            .map(|(v, _)| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Euclidean norm of the reaction entries (constrained dofs) of `r`.
    pub fn reaction_norm(&self, r: &[f64]) -> f64 {
        r.iter()
            .zip(&self.u_fixed)
            .filter(|(_, &fixed)| fixed)
            .map(|(v, _)| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn check_state(&self, state: &FieldState) -> Result<()> {
        if state.u.len() != self.num_u_dofs() {
            return Err(Error::SizeMismatch {
                what: "displacement vector",
                got: state.u.len(),
                expected: self.num_u_dofs(),
            });
        }
        if state.d.len() != self.num_nodes() {
            return Err(Error::SizeMismatch {
                what: "phase-field vector",
                got: state.d.len(),
                expected: self.num_nodes(),
            });
        }
        Ok(())
    }

    fn local(&self, e: &Element, state: &FieldState, mat: &MaterialParams) -> Local {
        let ds = e.nodes.map(|n| state.d[n]);
        let one_minus: [f64; 3] = ds.map(|d| 1.0 - d);
        let sum: f64 = one_minus.iter().sum();
        let sq: f64 = one_minus.iter().map(|v| v * v).sum();
        let g_mean = (sq + sum * sum) / 12.0 + mat.k_res;
        let mut grad_d = [0.0; 2];
        for a in 0..3 {
            grad_d[0] += e.grad[a][0] * ds[a];
            grad_d[1] += e.grad[a][1] * ds[a];
        }
        let kinematics = match self.kind {
            ModelKind::PlaneStrainVector => {
                let mut eps = VoigtStrain::default();
                for a in 0..3 {
                    let (ux, uy) = (state.u[2 * e.nodes[a]], state.u[2 * e.nodes[a] + 1]);
                    eps.xx += e.grad[a][0] * ux;
                    eps.yy += e.grad[a][1] * uy;
                    eps.xy += e.grad[a][1] * ux + e.grad[a][0] * uy;
                }
                Kinematics::Strain(eps)
            }
            ModelKind::AntiPlaneScalar => {
                let mut g = [0.0; 2];
                for a in 0..3 {
                    let uz = state.u[e.nodes[a]];
                    g[0] += e.grad[a][0] * uz;
                    g[1] += e.grad[a][1] * uz;
                }
                Kinematics::Gradient(g)
            }
        };
        let (psi_plus, psi_minus) = match kinematics {
            Kinematics::Strain(eps) => material::psi_split(&eps, mat),
            Kinematics::Gradient(g) => (0.5 * mat.shear * (g[0] * g[0] + g[1] * g[1]), 0.0),
        };
        Local {
            ds,
            one_minus,
            g_mean,
            grad_d,
            kinematics,
            psi_plus,
            psi_minus,
        }
    }

    /// Displacement residual `dPi/du`, entries at constrained dofs included
    /// (they are the reactions).
    pub fn residual_u(&self, state: &FieldState, mat: &MaterialParams) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let mut r = vec![0.0; self.num_u_dofs()];
        for e in &self.elements {
            let loc = self.local(e, state, mat);
            match loc.kinematics {
                Kinematics::Strain(eps) => {
                    let s = material::stress_degraded(&eps, loc.g_mean, mat);
                    for a in 0..3 {
                        let [gx, gy] = e.grad[a];
                        let n = e.nodes[a];
                        r[2 * n] += e.area * (gx * s.xx + gy * s.xy);
                        r[2 * n + 1] += e.area * (gy * s.yy + gx * s.xy);
                    }
                }
                Kinematics::Gradient(g) => {
                    let c = loc.g_mean * mat.shear;
                    for a in 0..3 {
                        let [gx, gy] = e.grad[a];
                        r[e.nodes[a]] += e.area * c * (gx * g[0] + gy * g[1]);
                    }
                }
            }
        }
        Ok(r)
    }

    /// Phase-field residual `dPi/dd`.
    pub fn residual_d(&self, state: &FieldState, mat: &MaterialParams) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let metric = mat.gradient_metric();
        let mut r = vec![0.0; self.num_nodes()];
        for e in &self.elements {
            let loc = self.local(e, state, mat);
            let flux = mat_vec(&metric, loc.grad_d);
            for a in 0..3 {
                let mut m_damage = 0.0;
                let mut m_d = 0.0;
                for b in 0..3 {
                    m_damage += MASS[a][b] * loc.one_minus[b];
                    m_d += MASS[a][b] * loc.ds[b];
                }
                let gradient = e.grad[a][0] * flux[0] + e.grad[a][1] * flux[1];
                r[e.nodes[a]] += e.area
                    * (-2.0 * loc.psi_plus * m_damage
                        + mat.gc / mat.ell * m_d
                        + mat.gc * mat.ell * gradient);
            }
        }
        Ok(r)
    }

    /// Displacement tangent `d^2 Pi / du^2`.
    pub fn tangent_u(&self, state: &FieldState, mat: &MaterialParams) -> Result<SparseSym> {
        self.check_state(state)?;
        let mut k = SparseSym::zeros(Arc::clone(&self.u_pattern));
        for (ei, e) in self.elements.iter().enumerate() {
            let loc = self.local(e, state, mat);
            match loc.kinematics {
                Kinematics::Strain(eps) => {
                    let c = material::tangent_degraded(&eps, loc.g_mean, mat);
                    // B columns for the six local dofs: (xx, yy, xy) rows.
                    let mut b = [[0.0; 6]; 3];
                    for a in 0..3 {
                        let [gx, gy] = e.grad[a];
                        b[0][2 * a] = gx;
                        b[1][2 * a + 1] = gy;
                        b[2][2 * a] = gy;
                        b[2][2 * a + 1] = gx;
                    }
                    let mut cb = [[0.0; 6]; 3];
                    for i in 0..3 {
                        for j in 0..6 {
                            cb[i][j] = (0..3).map(|m| c[i][m] * b[m][j]).sum();
                        }
                    }
                    let base = ei * 36;
                    for p in 0..6 {
                        for q in 0..6 {
                            let v: f64 = (0..3).map(|m| b[m][p] * cb[m][q]).sum();
                            k.values[self.u_scatter[base + 6 * p + q]] += e.area * v;
                        }
                    }
                }
                Kinematics::Gradient(_) => {
                    let c = loc.g_mean * mat.shear;
                    let base = ei * 9;
                    for a in 0..3 {
                        for b in 0..3 {
                            let v = e.grad[a][0] * e.grad[b][0] + e.grad[a][1] * e.grad[b][1];
                            k.values[self.u_scatter[base + 3 * a + b]] += e.area * c * v;
                        }
                    }
                }
            }
        }
        Ok(k)
    }

    /// Phase-field tangent `d^2 Pi / dd^2` (independent of `d`).
    pub fn tangent_d(&self, state: &FieldState, mat: &MaterialParams) -> Result<SparseSym> {
        self.check_state(state)?;
        let metric = mat.gradient_metric();
        let mut k = SparseSym::zeros(Arc::clone(&self.d_pattern));
        for (ei, e) in self.elements.iter().enumerate() {
            let loc = self.local(e, state, mat);
            let reaction = 2.0 * loc.psi_plus + mat.gc / mat.ell;
            let base = ei * 9;
            for a in 0..3 {
                let fa = mat_vec(&metric, e.grad[a]);
                for b in 0..3 {
                    let diffusion = fa[0] * e.grad[b][0] + fa[1] * e.grad[b][1];
                    k.values[self.d_scatter[base + 3 * a + b]] +=
                        e.area * (reaction * MASS[a][b] + mat.gc * mat.ell * diffusion);
                }
            }
        }
        Ok(k)
    }

    /// Elastic and surface energies.
    pub fn energy(&self, state: &FieldState, mat: &MaterialParams) -> Result<Energy> {
        self.check_state(state)?;
        let metric = mat.gradient_metric();
        let mut en = Energy::default();
        for e in &self.elements {
            let loc = self.local(e, state, mat);
            en.elastic += e.area * (loc.g_mean * loc.psi_plus + loc.psi_minus);
            let mut dmd = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    dmd += loc.ds[a] * MASS[a][b] * loc.ds[b];
                }
            }
            let flux = mat_vec(&metric, loc.grad_d);
            let quad = loc.grad_d[0] * flux[0] + loc.grad_d[1] * flux[1];
            en.surface += e.area
                * (mat.gc / (2.0 * mat.ell) * dmd + 0.5 * mat.gc * mat.ell * quad);
        }
        Ok(en)
    }

    /// Per-element degraded stress measure: largest principal stress for
    /// plane strain, shear stress magnitude for anti-plane.
    pub fn element_stress_measure(&self, state: &FieldState, mat: &MaterialParams) -> Result<Vec<f64>> {
        self.check_state(state)?;
        Ok(self
            .elements
            .iter()
            .map(|e| {
                let loc = self.local(e, state, mat);
                match loc.kinematics {
                    Kinematics::Strain(eps) => {
                        let s: VoigtStress = material::stress_degraded(&eps, loc.g_mean, mat);
                        s.max_principal()
                    }
                    Kinematics::Gradient(g) => {
                        loc.g_mean * mat.shear * (g[0] * g[0] + g[1] * g[1]).sqrt()
                    }
                }
            })
            .collect())
    }

    /// Maximum of [`Discretization::element_stress_measure`] over the mesh.
    pub fn max_principal_stress(&self, state: &FieldState, mat: &MaterialParams) -> Result<f64> {
        Ok(self
            .element_stress_measure(state, mat)?
            .into_iter()
            .fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, Copy)]
enum Kinematics {
    Strain(VoigtStrain),
    Gradient([f64; 2]),
}

struct Local {
    ds: [f64; 3],
    one_minus: [f64; 3],
    g_mean: f64,
    grad_d: [f64; 2],
    kinematics: Kinematics,
    psi_plus: f64,
    psi_minus: f64,
}

fn mat_vec(m: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn build_layout(mesh: &Mesh, dpn: usize) -> (Arc<SparsityPattern>, Vec<usize>) {
    let n = mesh.num_nodes() * dpn;
    let nd = 3 * dpn;
    let mut rows = vec![Vec::new(); n];
    let local_dofs = |tri: &[usize; 3]| -> Vec<usize> {
        tri.iter()
            .flat_map(|&node| (0..dpn).map(move |c| node * dpn + c))
            .collect()
    };
    for tri in &mesh.triangles {
        let dofs = local_dofs(tri);
        for &i in &dofs {
            rows[i].extend_from_slice(&dofs);
        }
    }
    let pattern = Arc::new(SparsityPattern::from_rows(rows));
    let mut scatter = Vec::with_capacity(mesh.num_triangles() * nd * nd);
    for tri in &mesh.triangles {
        let dofs = local_dofs(tri);
        for &i in &dofs {
            for &j in &dofs {
                scatter.push(pattern.position(i, j).expect("element entry in pattern"));
            }
        }
    }
    (pattern, scatter)
}
