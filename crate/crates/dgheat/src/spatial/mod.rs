//! Spatial discretization: meshes of the unit interval / unit square,
//! conforming finite element spaces with homogeneous Dirichlet conditions
//! (boundary dofs eliminated), and assembled mass / stiffness operators.
//!
//! Sign convention: the stiffness operator `A` discretizes `-Laplace` and is
//! symmetric positive definite on interior dofs; the discrete Laplacian is
//! `Delta_h = -M^-1 A`, so its spectrum is negative and `z + Delta_h` is
//! invertible away from the positive real axis.

pub mod ops;
pub mod quadrature;

use crate::band::BandMatrix;
use crate::error::{Error, Result};
use nalgebra::DVector;
use std::sync::OnceLock;

pub type Point = [f64; 2];

/// A spatial function given by a value callable and, when needed (Ritz
/// projection, manufactured forcing), its gradient.
pub struct SpatialFn<'a> {
    pub value: &'a (dyn Fn(Point) -> f64 + Sync),
    pub gradient: Option<&'a (dyn Fn(Point) -> Point + Sync)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    UnitInterval,
    UnitSquare,
}

#[derive(Debug, Clone)]
pub enum Cells {
    /// 1D segments, as index pairs into `vertices`.
    Segments(Vec<[usize; 2]>),
    /// 2D triangles, counter-clockwise.
    Triangles(Vec<[usize; 3]>),
}

#[derive(Debug, Clone)]
pub struct SpatialMesh {
    pub dim: usize,
    pub vertices: Vec<Point>,
    pub cells: Cells,
    /// Largest cell diameter.
    pub h: f64,
    /// Quasi-uniformity ratio `max_cell diam(cell) / |cell|^(1/d)`.
    pub quasi_uniformity: f64,
}

impl SpatialMesh {
    pub fn num_cells(&self) -> usize {
        match &self.cells {
            Cells::Segments(c) => c.len(),
            Cells::Triangles(c) => c.len(),
        }
    }
}

/// Finite element function as a coefficient vector over the interior dofs.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction {
    pub values: DVector<f64>,
}

impl DiscreteFunction {
    pub fn zeros(n: usize) -> Self {
        DiscreteFunction {
            values: DVector::zeros(n),
        }
    }
}

pub struct FeSpace {
    pub mesh: SpatialMesh,
    pub domain: DomainKind,
    /// Elements per side used to build the mesh.
    pub n_side: usize,
    pub degree: usize,
    /// Coordinates of all dofs (interior and boundary).
    dof_coords: Vec<Point>,
    /// Global dof ids per cell, in local order.
    cell_dofs: Vec<Vec<usize>>,
    /// Map global dof -> interior index (None on the boundary).
    interior_of_global: Vec<Option<usize>>,
    /// Interior index -> global dof.
    global_of_interior: Vec<usize>,
    /// Mass matrix on interior dofs.
    pub mass: BandMatrix,
    /// Stiffness matrix on interior dofs (discretizes `-Laplace`).
    pub stiffness: BandMatrix,
    /// Row sums of the mass matrix (lumped weights).
    pub lumped: Vec<f64>,
    quad: QuadTable,
    /// Local dof count per cell.
    n_local: usize,
    /// Flat `n_cells x n_local` map cell-local dof -> interior index
    /// (`usize::MAX` on the boundary); the hot evaluation path.
    cell_interior: Vec<usize>,
    mass_factor: OnceLock<crate::band::BandLu>,
    spectrum: OnceLock<Vec<f64>>,
}

/// Precomputed per-cell quadrature: all cells are affine images of one
/// reference cell, so the reference rule and the shape values at its points
/// are shared; physical points and weights are tabulated cell-major.
pub struct QuadTable {
    pub per_cell: usize,
    ref_pts: Vec<Point>,
    /// `shape[j][a]`: local shape function `a` at reference point `j`.
    shape: Vec<Vec<f64>>,
    phys: Vec<Point>,
    weight: Vec<f64>,
}

impl QuadTable {
    #[inline]
    pub fn phys(&self, cell: usize, j: usize) -> Point {
        self.phys[cell * self.per_cell + j]
    }

    #[inline]
    pub fn weight(&self, cell: usize, j: usize) -> f64 {
        self.weight[cell * self.per_cell + j]
    }

    pub fn ref_pt(&self, j: usize) -> Point {
        self.ref_pts[j]
    }

    #[inline]
    pub fn shape_row(&self, j: usize) -> &[f64] {
        &self.shape[j]
    }
}

impl std::fmt::Debug for FeSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeSpace")
            .field("domain", &self.domain)
            .field("n_side", &self.n_side)
            .field("degree", &self.degree)
            .field("interior_dofs", &self.num_interior())
            .finish()
    }
}

/// Build the conforming space of degree `r` on a uniform mesh with `n`
/// elements per side. Supported: 1D with `r` in {1, 2}; the unit square with
/// `r = 1` on the uniform right-triangle pattern (each square split along
/// the (0,0)-(1,1) diagonal direction).
pub fn build_space(domain: DomainKind, n: usize, degree: usize) -> Result<FeSpace> {
    if n < 2 {
        return Err(Error::Domain {
            name: "n",
            detail: format!("need at least 2 elements per side, got {n}"),
        });
    }
    match (domain, degree) {
        (DomainKind::UnitInterval, 1 | 2) => build_interval(n, degree),
        (DomainKind::UnitSquare, 1) => build_square(n),
        (d, r) => Err(Error::Capability(format!(
            "unsupported domain/degree combination: {d:?} with r = {r}"
        ))),
    }
}

fn build_interval(n: usize, r: usize) -> Result<FeSpace> {
    let h = 1.0 / n as f64;
    let vertices: Vec<Point> = (0..=n).map(|i| [i as f64 * h, 0.0]).collect();
    let cells: Vec<[usize; 2]> = (0..n).map(|c| [c, c + 1]).collect();
    let mesh = SpatialMesh {
        dim: 1,
        vertices,
        cells: Cells::Segments(cells),
        h,
        quasi_uniformity: 1.0,
    };

    let dofs_per_side = r * n + 1;
    let dof_coords: Vec<Point> = (0..dofs_per_side)
        .map(|j| [j as f64 * h / r as f64, 0.0])
        .collect();
    let cell_dofs: Vec<Vec<usize>> = (0..n)
        .map(|c| (0..=r).map(|l| r * c + l).collect())
        .collect();
    let mut interior_of_global = vec![None; dofs_per_side];
    let mut global_of_interior = Vec::new();
    for g in 1..dofs_per_side - 1 {
        interior_of_global[g] = Some(global_of_interior.len());
        global_of_interior.push(g);
    }

    let n_int = global_of_interior.len();
    let bw = r; // nearest coupled interior dofs within one cell
    let mut mass = BandMatrix::zeros(n_int, bw, bw);
    let mut stiffness = BandMatrix::zeros(n_int, bw, bw);
    let (m_loc, k_loc) = local_matrices_1d(r, h);
    for dofs in &cell_dofs {
        for (a, &ga) in dofs.iter().enumerate() {
            let Some(ia) = interior_of_global[ga] else {
                continue;
            };
            for (b, &gb) in dofs.iter().enumerate() {
                if let Some(ib) = interior_of_global[gb] {
                    mass.add_to(ia, ib, m_loc[a][b]);
                    stiffness.add_to(ia, ib, k_loc[a][b]);
                }
            }
        }
    }
    finish_space(
        mesh,
        DomainKind::UnitInterval,
        n,
        r,
        dof_coords,
        cell_dofs,
        interior_of_global,
        global_of_interior,
        mass,
        stiffness,
    )
}

/// Closed-form local (mass, stiffness) for 1D Lagrange elements on a cell of
/// length `h`; dof order left / (mid) / right.
fn local_matrices_1d(r: usize, h: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    match r {
        1 => (
            vec![
                vec![h / 3.0, h / 6.0],
                vec![h / 6.0, h / 3.0],
            ],
            vec![vec![1.0 / h, -1.0 / h], vec![-1.0 / h, 1.0 / h]],
        ),
        2 => (
            vec![
                vec![4.0 * h / 30.0, 2.0 * h / 30.0, -h / 30.0],
                vec![2.0 * h / 30.0, 16.0 * h / 30.0, 2.0 * h / 30.0],
                vec![-h / 30.0, 2.0 * h / 30.0, 4.0 * h / 30.0],
            ],
            vec![
                vec![7.0 / (3.0 * h), -8.0 / (3.0 * h), 1.0 / (3.0 * h)],
                vec![-8.0 / (3.0 * h), 16.0 / (3.0 * h), -8.0 / (3.0 * h)],
                vec![1.0 / (3.0 * h), -8.0 / (3.0 * h), 7.0 / (3.0 * h)],
            ],
        ),
        _ => unreachable!("degree checked in build_space"),
    }
}

fn build_square(n: usize) -> Result<FeSpace> {
    let h_side = 1.0 / n as f64;
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h_side, j as f64 * h_side]);
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            // split along the (i,j)-(i+1,j+1) diagonal
            cells.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)]);
            cells.push([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    let diam = std::f64::consts::SQRT_2 * h_side;
    let area = 0.5 * h_side * h_side;
    let mesh = SpatialMesh {
        dim: 2,
        vertices: vertices.clone(),
        cells: Cells::Triangles(cells.clone()),
        h: diam,
        quasi_uniformity: diam / area.sqrt(),
    };

    let dof_coords = vertices;
    let cell_dofs: Vec<Vec<usize>> = cells.iter().map(|c| c.to_vec()).collect();
    let mut interior_of_global = vec![None; (n + 1) * (n + 1)];
    let mut global_of_interior = Vec::new();
    for j in 1..n {
        for i in 1..n {
            interior_of_global[vid(i, j)] = Some(global_of_interior.len());
            global_of_interior.push(vid(i, j));
        }
    }
    let n_int = global_of_interior.len();

    // interior numbering is row-major over the (n-1)x(n-1) grid; the diagonal
    // neighbor (i+1, j+1) is the farthest coupling
    let bw = n;
    let mut mass = BandMatrix::zeros(n_int, bw, bw);
    let mut stiffness = BandMatrix::zeros(n_int, bw, bw);
    for cell in &cell_dofs {
        let pts: Vec<Point> = cell.iter().map(|&g| dof_coords[g]).collect();
        let (m_loc, k_loc) = local_matrices_triangle(&pts);
        for (a, &ga) in cell.iter().enumerate() {
            let Some(ia) = interior_of_global[ga] else {
                continue;
            };
            for (b, &gb) in cell.iter().enumerate() {
                if let Some(ib) = interior_of_global[gb] {
                    mass.add_to(ia, ib, m_loc[a][b]);
                    stiffness.add_to(ia, ib, k_loc[a][b]);
                }
            }
        }
    }
    finish_space(
        mesh,
        DomainKind::UnitSquare,
        n,
        1,
        dof_coords,
        cell_dofs,
        interior_of_global,
        global_of_interior,
        mass,
        stiffness,
    )
}

/// P1 local matrices on a triangle from vertex coordinates.
fn local_matrices_triangle(p: &[Point]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let b = [
        p[1][1] - p[2][1],
        p[2][1] - p[0][1],
        p[0][1] - p[1][1],
    ];
    let c = [
        p[2][0] - p[1][0],
        p[0][0] - p[2][0],
        p[1][0] - p[0][0],
    ];
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
        - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let area = 0.5 * area2.abs();
    let mut k = vec![vec![0.0; 3]; 3];
    let mut m = vec![vec![0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
            m[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (m, k)
}

#[allow(clippy::too_many_arguments)]
fn finish_space(
    mesh: SpatialMesh,
    domain: DomainKind,
    n_side: usize,
    degree: usize,
    dof_coords: Vec<Point>,
    cell_dofs: Vec<Vec<usize>>,
    interior_of_global: Vec<Option<usize>>,
    global_of_interior: Vec<usize>,
    mass: BandMatrix,
    stiffness: BandMatrix,
) -> Result<FeSpace> {
    let lumped = mass.row_sums();
    let n_local = cell_dofs[0].len();
    let cell_interior = cell_dofs
        .iter()
        .flat_map(|dofs| {
            dofs.iter()
                .map(|&g| interior_of_global[g].unwrap_or(usize::MAX))
        })
        .collect();
    let mut space = FeSpace {
        mesh,
        domain,
        n_side,
        degree,
        dof_coords,
        cell_dofs,
        interior_of_global,
        global_of_interior,
        mass,
        stiffness,
        lumped,
        quad: QuadTable {
            per_cell: 0,
            ref_pts: Vec::new(),
            shape: Vec::new(),
            phys: Vec::new(),
            weight: Vec::new(),
        },
        n_local,
        cell_interior,
        mass_factor: OnceLock::new(),
        spectrum: OnceLock::new(),
    };
    let first = space.cell_quadrature(0);
    let per_cell = first.len();
    let ref_pts: Vec<Point> = first.iter().map(|&(_, _, r)| r).collect();
    let shape: Vec<Vec<f64>> = ref_pts
        .iter()
        .map(|&r| space.shape_values(0, r))
        .collect();
    let n_cells = space.num_cells();
    let mut phys = Vec::with_capacity(n_cells * per_cell);
    let mut weight = Vec::with_capacity(n_cells * per_cell);
    for cell in 0..n_cells {
        for (x, w, _) in space.cell_quadrature(cell) {
            phys.push(x);
            weight.push(w);
        }
    }
    space.quad = QuadTable {
        per_cell,
        ref_pts,
        shape,
        phys,
        weight,
    };
    Ok(space)
}

impl FeSpace {
    pub fn num_interior(&self) -> usize {
        self.global_of_interior.len()
    }

    /// All dofs, boundary included.
    pub fn num_dofs(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cell_dofs.len()
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell]
    }

    pub fn dof_coord(&self, global: usize) -> Point {
        self.dof_coords[global]
    }

    pub fn interior_index(&self, global: usize) -> Option<usize> {
        self.interior_of_global[global]
    }

    pub fn interior_coords(&self) -> impl Iterator<Item = Point> + '_ {
        self.global_of_interior.iter().map(|&g| self.dof_coords[g])
    }

    pub fn zero_function(&self) -> DiscreteFunction {
        DiscreteFunction::zeros(self.num_interior())
    }

    pub(crate) fn mass_factor(&self) -> &crate::band::BandLu {
        self.mass_factor
            .get_or_init(|| self.mass.factorize().expect("mass matrix is SPD"))
    }

    /// Value of the coefficient vector `v` at a reference point of `cell`.
    pub fn eval_in_cell(&self, v: &DVector<f64>, cell: usize, reference: Point) -> f64 {
        let mut shapes = [0.0f64; 3];
        let n_local = self.shape_values_into(reference, &mut shapes);
        let mut acc = 0.0;
        for (a, &g) in self.cell_dofs[cell].iter().take(n_local).enumerate() {
            if let Some(i) = self.interior_of_global[g] {
                acc += v[i] * shapes[a];
            }
        }
        acc
    }

    /// Value at tabulated quadrature point `j` of `cell`.
    #[inline]
    pub fn eval_at_qp(&self, v: &DVector<f64>, cell: usize, j: usize) -> f64 {
        let shapes = &self.quad.shape[j];
        let locals = &self.cell_interior[cell * self.n_local..(cell + 1) * self.n_local];
        let mut acc = 0.0;
        for (a, &idx) in locals.iter().enumerate() {
            if idx != usize::MAX {
                acc += v[idx] * shapes[a];
            }
        }
        acc
    }

    pub fn quad(&self) -> &QuadTable {
        &self.quad
    }

    fn shape_values_into(&self, reference: Point, out: &mut [f64; 3]) -> usize {
        match (self.mesh.dim, self.degree) {
            (1, 1) => {
                let s = reference[0];
                out[0] = 1.0 - s;
                out[1] = s;
                2
            }
            (1, 2) => {
                let s = reference[0];
                out[0] = (1.0 - s) * (1.0 - 2.0 * s);
                out[1] = 4.0 * s * (1.0 - s);
                out[2] = s * (2.0 * s - 1.0);
                3
            }
            (2, 1) => {
                let (xi, eta) = (reference[0], reference[1]);
                out[0] = 1.0 - xi - eta;
                out[1] = xi;
                out[2] = eta;
                3
            }
            _ => unreachable!(),
        }
    }

    /// Shape function values at a reference point (1D: `[s, 0]` with
    /// `s` in `[0,1]`; 2D: barycentric-free `[xi, eta]`).
    pub fn shape_values(&self, _cell: usize, reference: Point) -> Vec<f64> {
        let mut out = [0.0f64; 3];
        let n = self.shape_values_into(reference, &mut out);
        out[..n].to_vec()
    }

    /// Physical gradients of the shape functions at a reference point.
    pub fn shape_gradients(&self, cell: usize, reference: Point) -> Vec<Point> {
        match (self.mesh.dim, self.degree) {
            (1, 1) => {
                let h = self.cell_length(cell);
                vec![[-1.0 / h, 0.0], [1.0 / h, 0.0]]
            }
            (1, 2) => {
                let h = self.cell_length(cell);
                let s = reference[0];
                vec![
                    [(4.0 * s - 3.0) / h, 0.0],
                    [(4.0 - 8.0 * s) / h, 0.0],
                    [(4.0 * s - 1.0) / h, 0.0],
                ]
            }
            (2, 1) => {
                let pts: Vec<Point> = self.cell_dofs[cell]
                    .iter()
                    .map(|&g| self.dof_coords[g])
                    .collect();
                let b = [
                    pts[1][1] - pts[2][1],
                    pts[2][1] - pts[0][1],
                    pts[0][1] - pts[1][1],
                ];
                let c = [
                    pts[2][0] - pts[1][0],
                    pts[0][0] - pts[2][0],
                    pts[1][0] - pts[0][0],
                ];
                let area2 = (pts[1][0] - pts[0][0]) * (pts[2][1] - pts[0][1])
                    - (pts[2][0] - pts[0][0]) * (pts[1][1] - pts[0][1]);
                (0..3).map(|i| [b[i] / area2, c[i] / area2]).collect()
            }
            _ => unreachable!(),
        }
    }

    fn cell_length(&self, cell: usize) -> f64 {
        match &self.mesh.cells {
            Cells::Segments(segs) => {
                let [a, b] = segs[cell];
                self.mesh.vertices[b][0] - self.mesh.vertices[a][0]
            }
            _ => unreachable!(),
        }
    }

    /// Per-cell quadrature: `(physical point, weight, reference point)`.
    /// The rule integrates degree `2r + 3` exactly in 1D and degree 5 on
    /// triangles, which covers both load assembly (needs `2r + 2`) and the
    /// `L^p` norms (need `r + 2`).
    pub fn cell_quadrature(&self, cell: usize) -> Vec<(Point, f64, Point)> {
        match &self.mesh.cells {
            Cells::Segments(segs) => {
                let [a, b] = segs[cell];
                let xa = self.mesh.vertices[a][0];
                let xb = self.mesh.vertices[b][0];
                quadrature::gauss_legendre_01(self.degree + 2)
                    .iter()
                    .map(|&(s, w)| ([xa + (xb - xa) * s, 0.0], (xb - xa) * w, [s, 0.0]))
                    .collect()
            }
            Cells::Triangles(tris) => {
                let t = tris[cell];
                let p: Vec<Point> = t.iter().map(|&v| self.mesh.vertices[v]).collect();
                let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                    - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
                let area = 0.5 * area2.abs();
                quadrature::triangle_degree5()
                    .into_iter()
                    .map(|(bary, w)| {
                        let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
                        let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
                        ([x, y], area * w, [bary[1], bary[2]])
                    })
                    .collect()
            }
        }
    }

    /// Load vector `F_i = (f, phi_i)` over interior dofs.
    pub fn load_vector(&self, f: &(dyn Fn(Point) -> f64 + Sync)) -> DVector<f64> {
        let mut load = DVector::zeros(self.num_interior());
        let q = &self.quad;
        for cell in 0..self.num_cells() {
            let locals = &self.cell_interior[cell * self.n_local..(cell + 1) * self.n_local];
            for j in 0..q.per_cell {
                let idx = cell * q.per_cell + j;
                let fv = f(q.phys[idx]);
                if fv == 0.0 {
                    continue;
                }
                let wf = q.weight[idx] * fv;
                let shapes = &q.shape[j];
                for (a, &i) in locals.iter().enumerate() {
                    if i != usize::MAX {
                        load[i] += wf * shapes[a];
                    }
                }
            }
        }
        load
    }

    /// Point evaluation of a coefficient vector anywhere in the domain,
    /// using the structured cell layout of the shipped mesh families.
    pub fn eval_at_point(&self, v: &DVector<f64>, x: Point) -> f64 {
        let n = self.n_side;
        match self.domain {
            DomainKind::UnitInterval => {
                let h = 1.0 / n as f64;
                let cell = ((x[0] / h).floor() as usize).min(n - 1);
                let s = (x[0] - cell as f64 * h) / h;
                self.eval_in_cell(v, cell, [s, 0.0])
            }
            DomainKind::UnitSquare => {
                let nf = n as f64;
                let i = ((x[0] * nf).floor() as usize).min(n - 1);
                let j = ((x[1] * nf).floor() as usize).min(n - 1);
                let u = x[0] * nf - i as f64;
                let w = x[1] * nf - j as f64;
                // squares split along the (0,0)-(1,1) diagonal
                let (cell, reference) = if u >= w {
                    (2 * (j * n + i), [u - w, w])
                } else {
                    (2 * (j * n + i) + 1, [u, w - u])
                };
                self.eval_in_cell(v, cell, reference)
            }
        }
    }

    /// Lazily computed full generalized spectrum of `(A, M)`, ascending.
    pub fn spectrum(&self) -> &[f64] {
        self.spectrum
            .get_or_init(|| ops::generalized_eigenpairs(self, self.num_interior())
                .expect("dense eigensolve")
                .into_iter()
                .map(|(l, _)| l)
                .collect())
    }
}
