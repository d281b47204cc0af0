//! Physical model: parameters, damping profile, decay regimes, state
//! layout and the discrete energy functional.
//!
//! Fields live on N interior nodes x_j = j*h of (0, L); Dirichlet
//! boundary values are implicit zeros and never stored. The energy is
//! the half-cell flux quadrature that module `discretize` turns into a
//! Gram matrix, so the two energies agree to round-off, not to O(h).

use nalgebra::{DVector, DVectorView, DVectorViewMut};

use crate::{Error, Result};

/// Material and geometry constants of the damped beam.
///
/// `rho1`, `rho2` are the densities of the displacement and shear
/// channels, `k1`, `k2`, `k3` the elastic moduli (shear, bending,
/// longitudinal), `l` the arch curvature, `length` the beam length,
/// and the friction acts with amplitude `a0` on the longitudinal
/// velocity over `[0, beta)` only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParameters {
    pub rho1: f64,
    pub rho2: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub l: f64,
    pub length: f64,
    pub a0: f64,
    pub beta: f64,
}

impl Default for PhysicalParameters {
    fn default() -> Self {
        Self {
            rho1: 1.0,
            rho2: 1.0,
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            l: 1.0,
            length: 1.0,
            a0: 1.0,
            beta: 0.5,
        }
    }
}

impl PhysicalParameters {
    /// Checks every documented constraint and names the first violation.
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 6] = [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("L", self.length),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        if !self.l.is_finite() || self.l < 0.0 {
            return Err(Error::InvalidParameter {
                name: "l",
                reason: format!("must be finite and >= 0, got {}", self.l),
            });
        }
        if !self.a0.is_finite() || self.a0 < 0.0 {
            return Err(Error::InvalidParameter {
                name: "a0",
                reason: format!("must be finite and >= 0, got {}", self.a0),
            });
        }
        if !self.beta.is_finite() || self.beta <= 0.0 || self.beta >= self.length {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("requires 0 < beta < L, got beta = {}, L = {}", self.beta, self.length),
            });
        }
        Ok(())
    }
}

/// Decay regime selected by the parameter relations.
///
/// Equal wave speeds of the first two channels plus equal first/third
/// moduli give uniform exponential decay; breaking only the modulus
/// equality degrades the rate to t^-1 in energy; breaking the speed
/// equality degrades it to t^-1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    ExponentialEqualSpeeds,
    PolynomialT1,
    PolynomialTHalf,
}

impl Regime {
    /// Growth exponent of the resolvent norm along the imaginary axis.
    pub fn ell(self) -> u32 {
        match self {
            Regime::ExponentialEqualSpeeds => 0,
            Regime::PolynomialT1 => 2,
            Regime::PolynomialTHalf => 4,
        }
    }

    /// Stable display name used in reports and CSV rows.
    pub fn name(self) -> &'static str {
        match self {
            Regime::ExponentialEqualSpeeds => "ExponentialEqualSpeeds",
            Regime::PolynomialT1 => "PolynomialT1",
            Regime::PolynomialTHalf => "PolynomialTHalf",
        }
    }
}

/// Relative tolerance used by [`classify_regime`] for the equality tests.
pub const CLASSIFY_REL_TOL: f64 = 1e-9;

/// Classifies the parameters with the default tolerance.
pub fn classify_regime(p: &PhysicalParameters) -> Result<Regime> {
    classify_regime_with_tol(p, CLASSIFY_REL_TOL)
}

/// Classifies with an explicit relative tolerance on both equality tests.
///
/// The tests are relative to k1/rho1 and k1 respectively, so rescaling
/// all densities and moduli by one constant never changes the verdict.
pub fn classify_regime_with_tol(p: &PhysicalParameters, rel_tol: f64) -> Result<Regime> {
    p.validate()?;
    if !rel_tol.is_finite() || rel_tol < 0.0 {
        return Err(Error::InvalidParameter {
            name: "rel_tol",
            reason: format!("must be finite and >= 0, got {rel_tol}"),
        });
    }
    let (s1, s2, _) = wave_speeds(p);
    let speeds_equal = (s1 - s2).abs() <= rel_tol * s1;
    let moduli_equal = (p.k1 - p.k3).abs() <= rel_tol * p.k1;
    Ok(if speeds_equal && moduli_equal {
        Regime::ExponentialEqualSpeeds
    } else if speeds_equal {
        Regime::PolynomialT1
    } else {
        Regime::PolynomialTHalf
    })
}

/// Squared propagation speeds of the three channels:
/// (k1/rho1, k2/rho2, k3/rho1).
pub fn wave_speeds(p: &PhysicalParameters) -> (f64, f64, f64) {
    (p.k1 / p.rho1, p.k2 / p.rho2, p.k3 / p.rho1)
}

/// Damping coefficient at position `x`: a0 on [0, beta), 0 on [beta, L].
///
/// The damped interval is right-open, so `damping_at(beta) == 0`.
pub fn damping_at(p: &PhysicalParameters, x: f64) -> Result<f64> {
    p.validate()?;
    if !x.is_finite() || x < 0.0 || x > p.length {
        return Err(Error::OutOfDomain { x, length: p.length });
    }
    Ok(if x < p.beta { p.a0 } else { 0.0 })
}

/// Number of stacked field blocks in a state.
pub const BLOCKS: usize = 6;

/// Semi-discrete state: six stacked interior-node blocks
/// (v1 = vertical displacement, v2 = its velocity, v3 = shear angle,
/// v4 = its velocity, v5 = longitudinal displacement, v6 = its velocity).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    data: DVector<f64>,
}

impl StateVector {
    /// Zero state on `n` interior nodes.
    pub fn zeros(n: usize) -> Self {
        Self { n, data: DVector::zeros(BLOCKS * n) }
    }

    /// Wraps a flat vector of length `6 n` (blocks stacked v1..v6).
    pub fn from_vector(n: usize, data: DVector<f64>) -> Result<Self> {
        if data.len() != BLOCKS * n {
            return Err(Error::ShapeMismatch(format!(
                "state expects {} entries for n = {n}, got {}",
                BLOCKS * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    /// Number of interior nodes per block.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Flat view of the stacked blocks.
    pub fn as_vector(&self) -> &DVector<f64> {
        &self.data
    }

    /// Consumes the state into its flat vector.
    pub fn into_vector(self) -> DVector<f64> {
        self.data
    }

    /// Read view of block `b` (0-based, v1 is block 0).
    pub fn block(&self, b: usize) -> DVectorView<'_, f64> {
        assert!(b < BLOCKS, "block index {b} out of range");
        self.data.rows(b * self.n, self.n)
    }

    /// Write view of block `b`.
    pub fn block_mut(&mut self, b: usize) -> DVectorViewMut<'_, f64> {
        assert!(b < BLOCKS, "block index {b} out of range");
        self.data.rows_mut(b * self.n, self.n)
    }
}

/// Node value of a block with Dirichlet ghosts: `j` is a 0-based node
/// index, -1 and n address the boundary zeros.
#[inline]
fn node(v: &[f64], j: isize) -> f64 {
    if j < 0 || j as usize >= v.len() {
        0.0
    } else {
        v[j as usize]
    }
}

/// Discrete energy of a state on a grid with spacing `h`.
///
/// E_h = (h/2) [ sum over flux slots i = 0..=n of
///                 k1 |(D v1)_i + v3_i + l v5_i|^2
///               + k2 |(D v3)_i|^2
///               + k3 |(D v5)_i - l v1_i|^2
///             + sum over nodes of rho1 |v2|^2 + rho2 |v4|^2 + rho1 |v6|^2 ],
/// where (D u)_i = (u_{i+1} - u_i)/h with Dirichlet ghosts and the
/// zeroth-order flux contributions use the node value at slot index i
/// (slot 0 carries the boundary zero).
pub fn energy(p: &PhysicalParameters, h: f64, u: &StateVector) -> Result<f64> {
    p.validate()?;
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "h",
            reason: format!("must be finite and > 0, got {h}"),
        });
    }
    let n = u.n();
    let v1 = u.block(0);
    let v3 = u.block(2);
    let v5 = u.block(4);
    let (v1, v3, v5) = (v1.as_slice(), v3.as_slice(), v5.as_slice());

    let mut flux = 0.0;
    for i in 0..=n as isize {
        let d1 = (node(v1, i) - node(v1, i - 1)) / h;
        let d3 = (node(v3, i) - node(v3, i - 1)) / h;
        let d5 = (node(v5, i) - node(v5, i - 1)) / h;
        let q = d1 + node(v3, i - 1) + p.l * node(v5, i - 1);
        let r = d5 - p.l * node(v1, i - 1);
        flux += p.k1 * q * q + p.k2 * d3 * d3 + p.k3 * r * r;
    }

    let kinetic = p.rho1 * u.block(1).norm_squared()
        + p.rho2 * u.block(3).norm_squared()
        + p.rho1 * u.block(5).norm_squared();

    Ok(0.5 * h * (flux + kinetic))
}

/// Instantaneous energy derivative along the flow:
/// dE/dt = -h * sum over damped nodes (x_j < beta) of a0 |v6_j|^2.
pub fn dissipation_rate(p: &PhysicalParameters, h: f64, u: &StateVector) -> Result<f64> {
    p.validate()?;
    let v6 = u.block(5);
    let mut s = 0.0;
    for j in 0..u.n() {
        let x = (j + 1) as f64 * h;
        if x < p.beta {
            s += v6[j] * v6[j];
        }
    }
    Ok(-p.a0 * h * s)
}
