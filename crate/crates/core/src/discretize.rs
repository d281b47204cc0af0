//! Spatial discretization: grid, difference operators, and the dense
//! semi-discrete generator A with its energy Gram matrix G.
//!
//! The structural rule that everything else relies on: first derivatives
//! inside the three stress fluxes are forward differences D mapping the
//! N interior nodes onto N+1 half-cell flux slots (both Dirichlet ghosts
//! active), zeroth-order flux contributions are injected onto slots 1..N
//! with slot 0 carrying the boundary zero, and the outer divergence is
//! -D^T, the exact negative adjoint under the unweighted inner product.
//! That pairing makes -D^T D the classical Dirichlet Laplacian, makes
//! the Gram form positive definite, and makes the energy balance
//! Re <A U, U>_G = -a0 h sum_{x_j < beta} |v6_j|^2 hold to round-off for
//! every state, independent of h.

use nalgebra::{DMatrix, DVector};

use crate::model::{PhysicalParameters, StateVector, BLOCKS};
use crate::{Error, Result};

/// Uniform interior grid: N nodes x_j = j h, j = 1..N, h = L/(N+1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    h: f64,
    length: f64,
}

impl Grid {
    /// Builds a grid with `n >= 2` interior nodes on (0, length).
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter {
                name: "N",
                reason: format!("needs at least 2 interior nodes, got {n}"),
            });
        }
        if !length.is_finite() || length <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "L",
                reason: format!("must be finite and > 0, got {length}"),
            });
        }
        Ok(Self { n, h: length / (n + 1) as f64, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Coordinate of interior node `j` (0-based): x = (j + 1) h.
    pub fn node_x(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.h
    }

    /// All interior node coordinates in order.
    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.node_x(j))
    }
}

/// Forward difference D: (N+1) x N, (D u)_i = (u_{i+1} - u_i)/h for flux
/// slots i = 0..N with Dirichlet ghosts u_0 = u_{N+1} = 0.
pub fn forward_difference(n: usize, h: f64) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n + 1, n);
    for i in 0..=n {
        // slot i couples nodes u_i (column i-1) and u_{i+1} (column i)
        if i < n {
            d[(i, i)] = 1.0 / h;
        }
        if i > 0 {
            d[(i, i - 1)] = -1.0 / h;
        }
    }
    d
}

/// Injection E: (N+1) x N, placing node value u_i on flux slot i; slot 0
/// carries the Dirichlet boundary zero.
pub fn injection(n: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(n + 1, n);
    for i in 1..=n {
        e[(i, i - 1)] = 1.0;
    }
    e
}

/// Dense semi-discrete operator: generator A, Gram matrix G of the
/// energy, and the nodal damping coefficients.
#[derive(Debug, Clone)]
pub struct Operator {
    params: PhysicalParameters,
    grid: Grid,
    a: DMatrix<f64>,
    gram: DMatrix<f64>,
    damping: DVector<f64>,
}

/// Assembles the generator and Gram matrix for `params` on `grid`.
///
/// Damping hits exactly the nodes with x_j < beta (right-open damped
/// interval), so beta never needs to coincide with a node.
pub fn assemble(params: &PhysicalParameters, grid: &Grid) -> Result<Operator> {
    params.validate()?;
    if (grid.length - params.length).abs() > 1e-12 * params.length {
        return Err(Error::ShapeMismatch(format!(
            "grid length {} does not match parameter L = {}",
            grid.length, params.length
        )));
    }

    let n = grid.n;
    let h = grid.h;
    let p = params;

    let d = forward_difference(n, h);
    let e = injection(n);
    let dtd = d.transpose() * &d;
    let dte = d.transpose() * &e;
    let etd = dte.transpose();
    let eye = DMatrix::<f64>::identity(n, n);

    let damping = DVector::from_fn(n, |j, _| if grid.node_x(j) < p.beta { p.a0 } else { 0.0 });

    let dim = BLOCKS * n;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut set = |bi: usize, bj: usize, m: DMatrix<f64>| {
        a.view_mut((bi * n, bj * n), (n, n)).copy_from(&m);
    };

    set(0, 1, eye.clone());
    set(1, 0, -(p.k1 / p.rho1) * &dtd - (p.l * p.l * p.k3 / p.rho1) * &eye);
    set(1, 2, -(p.k1 / p.rho1) * &dte);
    set(1, 4, -(p.l * p.k1 / p.rho1) * &dte + (p.l * p.k3 / p.rho1) * &etd);
    set(2, 3, eye.clone());
    set(3, 0, -(p.k1 / p.rho2) * &etd);
    set(3, 2, -(p.k2 / p.rho2) * &dtd - (p.k1 / p.rho2) * &eye);
    set(3, 4, -(p.l * p.k1 / p.rho2) * &eye);
    set(4, 5, eye.clone());
    set(5, 0, (p.l * p.k3 / p.rho1) * &dte - (p.l * p.k1 / p.rho1) * &etd);
    set(5, 2, -(p.l * p.k1 / p.rho1) * &eye);
    set(5, 4, -(p.k3 / p.rho1) * &dtd - (p.l * p.l * p.k1 / p.rho1) * &eye);
    set(5, 5, DMatrix::from_diagonal(&(-&damping / p.rho1)));

    let mut g = DMatrix::<f64>::zeros(dim, dim);
    let mut gset = |bi: usize, bj: usize, m: DMatrix<f64>| {
        g.view_mut((bi * n, bj * n), (n, n)).copy_from(&m);
    };
    let g00 = h * (p.k1 * &dtd + p.l * p.l * p.k3 * &eye);
    let g02 = h * p.k1 * &dte;
    let g04 = h * p.l * (p.k1 * &dte - p.k3 * &etd);
    let g22 = h * (p.k2 * &dtd + p.k1 * &eye);
    let g24 = h * p.l * p.k1 * &eye;
    let g44 = h * (p.k3 * &dtd + p.l * p.l * p.k1 * &eye);
    gset(0, 2, g02.clone());
    gset(2, 0, g02.transpose());
    gset(0, 4, g04.clone());
    gset(4, 0, g04.transpose());
    gset(2, 4, g24.clone());
    gset(4, 2, g24);
    gset(0, 0, g00);
    gset(2, 2, g22);
    gset(4, 4, g44);
    gset(1, 1, h * p.rho1 * &eye);
    gset(3, 3, h * p.rho2 * &eye);
    gset(5, 5, h * p.rho1 * &eye);

    Ok(Operator { params: *params, grid: *grid, a, gram: g, damping })
}

impl Operator {
    pub fn params(&self) -> &PhysicalParameters {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// State dimension 6 N.
    pub fn dim(&self) -> usize {
        BLOCKS * self.grid.n
    }

    /// Dense generator A.
    pub fn generator(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Dense Gram matrix G of the energy: E(U) = (1/2) U^T G U.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Damping coefficient at each node (a0 where x_j < beta, else 0).
    pub fn damping(&self) -> &DVector<f64> {
        &self.damping
    }

    /// A U through the assembled matrix.
    pub fn apply(&self, u: &StateVector) -> Result<StateVector> {
        self.check_state(u)?;
        StateVector::from_vector(self.grid.n, &self.a * u.as_vector())
    }

    /// A U through direct stencil loops, sharing no code with the
    /// assembled matrix; kept as an independent cross-check path.
    pub fn apply_matrix_free(&self, u: &StateVector) -> Result<StateVector> {
        self.check_state(u)?;
        let n = self.grid.n;
        let h = self.grid.h;
        let p = &self.params;

        let val = |v: &[f64], j: isize| -> f64 {
            if j < 0 || j as usize >= v.len() {
                0.0
            } else {
                v[j as usize]
            }
        };
        let v1 = u.block(0);
        let v2 = u.block(1);
        let v3 = u.block(2);
        let v4 = u.block(3);
        let v5 = u.block(4);
        let v6 = u.block(5);
        let (v1, v3, v5) = (v1.as_slice(), v3.as_slice(), v5.as_slice());

        // fluxes on slots 0..=n
        let mut q = vec![0.0; n + 1];
        let mut m = vec![0.0; n + 1];
        let mut r = vec![0.0; n + 1];
        for i in 0..=n {
            let ii = i as isize;
            let d1 = (val(v1, ii) - val(v1, ii - 1)) / h;
            let d3 = (val(v3, ii) - val(v3, ii - 1)) / h;
            let d5 = (val(v5, ii) - val(v5, ii - 1)) / h;
            q[i] = d1 + val(v3, ii - 1) + p.l * val(v5, ii - 1);
            m[i] = d3;
            r[i] = d5 - p.l * val(v1, ii - 1);
        }

        let mut out = StateVector::zeros(n);
        for j in 0..n {
            // node j sits between flux slots j and j+1; E^T picks slot j+1
            out.block_mut(0)[j] = v2[j];
            out.block_mut(1)[j] =
                (p.k1 / p.rho1) * (q[j + 1] - q[j]) / h + (p.l * p.k3 / p.rho1) * r[j + 1];
            out.block_mut(2)[j] = v4[j];
            out.block_mut(3)[j] =
                (p.k2 / p.rho2) * (m[j + 1] - m[j]) / h - (p.k1 / p.rho2) * q[j + 1];
            out.block_mut(4)[j] = v6[j];
            out.block_mut(5)[j] = (p.k3 / p.rho1) * (r[j + 1] - r[j]) / h
                - (p.l * p.k1 / p.rho1) * q[j + 1]
                - self.damping[j] / p.rho1 * v6[j];
        }
        Ok(out)
    }

    /// Energy through the Gram form, (1/2) U^T G U; agrees with
    /// [`model::energy`] to round-off.
    pub fn gram_energy(&self, u: &StateVector) -> Result<f64> {
        self.check_state(u)?;
        Ok(0.5 * (&self.gram * u.as_vector()).dot(u.as_vector()))
    }

    /// G-inner product <A U, U>_G; equals the dissipation
    /// -a0 h sum_{x_j < beta} |v6_j|^2 to round-off.
    pub fn energy_derivative(&self, u: &StateVector) -> Result<f64> {
        let au = self.apply(u)?;
        Ok((&self.gram * au.as_vector()).dot(u.as_vector()))
    }

    fn check_state(&self, u: &StateVector) -> Result<()> {
        if u.n() != self.grid.n {
            return Err(Error::ShapeMismatch(format!(
                "state has {} nodes, operator expects {}",
                u.n(),
                self.grid.n
            )));
        }
        Ok(())
    }
}
