//! Spectral diagnostics: dense eigenvalues of the generator, resolvent
//! norms along the imaginary axis in the energy norm, log-log resolvent
//! sweeps, and the frequency-domain transfer system with its reduced
//! closed forms.
//!
//! All norms are taken in the energy inner product: with G = L L^T the
//! generator is replaced by its similarity A_G = L^T A L^-T, which has
//! the same spectrum, is exactly skew-symmetric when a0 = 0, and turns
//! the G-weighted resolvent norm into the plain 2-norm
//! 1 / sigma_min(i lambda I - A_G).
//!
//! Two independent evaluation paths back every resolvent norm: full
//! complex SVD for small systems and inverse iteration (power iteration
//! on B^-1 B^-H from one factorization) for large ones. Sweeps first
//! reduce A_G once to real Schur form, after which each lambda sample
//! solves quasi-triangular systems in O(n^2).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretize::Operator;
use crate::expm::expm;
use crate::model::{wave_speeds, PhysicalParameters};
use crate::{Error, Result};

/// Largest state dimension accepted by the dense eigensolver.
pub const DENSE_EIG_CAP: usize = 2400;

/// Dimension up to which resolvent norms use the full-SVD path.
pub const RESOLVENT_SVD_CAP: usize = 240;

/// A resolvent point whose sigma_min falls below this absolute floor
/// sits within round-off of the spectrum and is flagged near-singular.
pub const NEAR_SINGULAR_ABS: f64 = 1e-12;

/// Default number of samples in a resolvent sweep.
pub const SWEEP_DEFAULT_COUNT: usize = 60;

const ITER_MAX: usize = 2000;
const ITER_RTOL: f64 = 1e-12;

/// Eigenvalues of the generator, sorted by (Re, Im).
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    /// max Re over the spectrum
    pub abscissa: f64,
    pub dim: usize,
}

impl SpectrumReport {
    /// Smallest |Re| over the spectrum.
    pub fn min_abs_real(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re.abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Cholesky factor L of the Gram matrix, G = L L^T.
fn gram_factor(op: &Operator) -> Result<DMatrix<f64>> {
    op.gram()
        .clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Numerical("Gram matrix Cholesky failed".into()))
}

/// Energy-norm similarity A_G = L^T A L^-T; same spectrum as A, exactly
/// skew-symmetric when a0 = 0.
pub fn symmetrized_generator(op: &Operator) -> Result<DMatrix<f64>> {
    let l = gram_factor(op)?;
    // X = A L^-T from L X^T = A^T, then A_G = L^T X
    let xt = l
        .solve_lower_triangular(&op.generator().transpose())
        .ok_or_else(|| Error::Numerical("Gram factor is singular".into()))?;
    Ok(l.transpose() * xt.transpose())
}

fn schur_of(m: DMatrix<f64>) -> Result<nalgebra::Schur<f64, nalgebra::Dyn>> {
    m.try_schur(f64::EPSILON, 1_000_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))
}

fn sorted_eigenvalues(mut eigs: Vec<Complex64>) -> Vec<Complex64> {
    eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    eigs
}

/// Dense spectrum of the generator through the energy-norm similarity.
///
/// Refuses dimensions above [`DENSE_EIG_CAP`] rather than silently
/// switching algorithms.
pub fn eigenvalues(op: &Operator) -> Result<SpectrumReport> {
    eigenvalues_with_cap(op, DENSE_EIG_CAP)
}

/// [`eigenvalues`] with an explicit dense-solver cap.
pub fn eigenvalues_with_cap(op: &Operator, cap: usize) -> Result<SpectrumReport> {
    let dim = op.dim();
    if dim > cap {
        return Err(Error::Numerical(format!(
            "state dimension {dim} exceeds the dense eigensolver cap {cap}"
        )));
    }
    let schur = schur_of(symmetrized_generator(op)?)?;
    let eigs = sorted_eigenvalues(schur.complex_eigenvalues().iter().copied().collect());
    let abscissa = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumReport { eigenvalues: eigs, abscissa, dim })
}

/// Shifted quasi-triangular solver for M = i lambda I - T with T real
/// upper quasi-triangular: direct and adjoint solves in O(n^2).
struct QuasiTriangular {
    t: DMatrix<f64>,
    t_rows: DMatrix<f64>,
    /// start index of each 1x1 or 2x2 diagonal block
    blocks: Vec<usize>,
}

impl QuasiTriangular {
    fn new(t: DMatrix<f64>) -> Self {
        let n = t.nrows();
        let mut blocks = Vec::new();
        let mut k = 0;
        while k < n {
            blocks.push(k);
            if k + 1 < n && t[(k + 1, k)] != 0.0 {
                k += 2;
            } else {
                k += 1;
            }
        }
        let t_rows = t.transpose();
        Self { t, t_rows, blocks }
    }

    fn dim(&self) -> usize {
        self.t.nrows()
    }

    /// Solves (i lambda I - T) x = b by block back-substitution.
    fn solve(&self, lambda: f64, b: &DVector<Complex64>) -> Option<DVector<Complex64>> {
        let n = self.dim();
        let il = Complex64::new(0.0, lambda);
        let mut x = b.clone();
        for &k in self.blocks.iter().rev() {
            let size = if k + 1 < n && self.t[(k + 1, k)] != 0.0 { 2 } else { 1 };
            // remove coupling to already-solved entries: M[i][j] = -T[i][j]
            for i in k..k + size {
                let row = self.t_rows.column(i);
                let mut acc = Complex64::ZERO;
                for j in k + size..n {
                    acc += row[j] * x[j];
                }
                x[i] += acc;
            }
            if size == 1 {
                let d = il - self.t[(k, k)];
                if d == Complex64::ZERO {
                    return None;
                }
                x[k] /= d;
            } else {
                let (a, bb) = (il - self.t[(k, k)], Complex64::from(-self.t[(k, k + 1)]));
                let (c, d) = (Complex64::from(-self.t[(k + 1, k)]), il - self.t[(k + 1, k + 1)]);
                let det = a * d - bb * c;
                if det == Complex64::ZERO {
                    return None;
                }
                let (r1, r2) = (x[k], x[k + 1]);
                x[k] = (d * r1 - bb * r2) / det;
                x[k + 1] = (a * r2 - c * r1) / det;
            }
        }
        Some(x)
    }

    /// Solves (i lambda I - T)^H y = c by block forward substitution.
    fn solve_adjoint(&self, lambda: f64, c: &DVector<Complex64>) -> Option<DVector<Complex64>> {
        let n = self.dim();
        let dil = Complex64::new(0.0, -lambda);
        let mut y = c.clone();
        for &k in self.blocks.iter() {
            let size = if k + 1 < n && self.t[(k + 1, k)] != 0.0 { 2 } else { 1 };
            // M^H[i][j] = -T[j][i] below the diagonal blocks
            for i in k..k + size {
                let col = self.t.column(i);
                let mut acc = Complex64::ZERO;
                for j in 0..k {
                    acc += col[j] * y[j];
                }
                y[i] += acc;
            }
            if size == 1 {
                let d = dil - self.t[(k, k)];
                if d == Complex64::ZERO {
                    return None;
                }
                y[k] /= d;
            } else {
                let (a, bb) = (dil - self.t[(k, k)], Complex64::from(-self.t[(k + 1, k)]));
                let (c2, d) = (Complex64::from(-self.t[(k, k + 1)]), dil - self.t[(k + 1, k + 1)]);
                let det = a * d - bb * c2;
                if det == Complex64::ZERO {
                    return None;
                }
                let (r1, r2) = (y[k], y[k + 1]);
                y[k] = (d * r1 - bb * r2) / det;
                y[k + 1] = (a * r2 - c2 * r1) / det;
            }
        }
        Some(y)
    }
}

/// Reusable machinery for resolvent norms of one operator: the
/// energy-norm similarity, its scale, and (for sweep-sized problems)
/// its real Schur form.
pub struct ResolventContext {
    dim: usize,
    a_sym: DMatrix<f64>,
    scale: f64,
    schur: Option<(QuasiTriangular, Vec<Complex64>)>,
}

impl ResolventContext {
    /// Context without the Schur reduction; norms use SVD below
    /// [`RESOLVENT_SVD_CAP`] and a fresh LU-based inverse iteration above.
    pub fn new(op: &Operator) -> Result<Self> {
        let a_sym = symmetrized_generator(op)?;
        let scale = a_sym.norm();
        Ok(Self { dim: a_sym.nrows(), a_sym, scale, schur: None })
    }

    /// Context with the Schur form computed once; large-dimension norms
    /// then cost O(n^2) per lambda, and the spectrum comes for free.
    /// Subject to the same dimension cap as [`eigenvalues`].
    pub fn with_schur(op: &Operator) -> Result<Self> {
        if op.dim() > DENSE_EIG_CAP {
            return Err(Error::Numerical(format!(
                "state dimension {} exceeds the dense eigensolver cap {DENSE_EIG_CAP}",
                op.dim()
            )));
        }
        let mut ctx = Self::new(op)?;
        let schur = schur_of(ctx.a_sym.clone())?;
        let eigs = sorted_eigenvalues(schur.complex_eigenvalues().iter().copied().collect());
        let (_, t) = schur.unpack();
        ctx.schur = Some((QuasiTriangular::new(t), eigs));
        Ok(ctx)
    }

    /// True when the Schur form (and with it the spectrum) is available.
    pub fn has_schur(&self) -> bool {
        self.schur.is_some()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Spectrum report when the Schur form is available.
    pub fn spectrum(&self) -> Option<SpectrumReport> {
        self.schur.as_ref().map(|(_, eigs)| SpectrumReport {
            eigenvalues: eigs.clone(),
            abscissa: eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max),
            dim: self.dim,
        })
    }

    /// The larger of the absolute near-singular floor and the round-off
    /// floor of sigma_min itself at this problem scale.
    fn near_singular_floor(&self, lambda: f64) -> f64 {
        NEAR_SINGULAR_ABS.max(8.0 * f64::EPSILON * (self.scale + lambda.abs()))
    }

    /// Energy-norm resolvent norm 1 / sigma_min(i lambda I - A_G).
    ///
    /// `seed` only fixes the inverse-iteration start vector, keeping
    /// sweeps deterministic under any parallel schedule.
    pub fn norm(&self, lambda: f64, seed: u64) -> Result<f64> {
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be finite, got {lambda}"),
            });
        }
        let sigma = if self.dim <= RESOLVENT_SVD_CAP {
            self.sigma_min_svd(lambda)?
        } else if self.schur.is_some() {
            self.sigma_min_schur_iteration(lambda, seed)?
        } else {
            self.sigma_min_lu_iteration(lambda, seed)?
        };
        if !(sigma > self.near_singular_floor(lambda)) {
            return Err(Error::NearSingular { lambda });
        }
        Ok(1.0 / sigma)
    }

    fn shifted(&self, lambda: f64) -> DMatrix<Complex64> {
        let mut b = self.a_sym.map(|x| Complex64::new(-x, 0.0));
        for k in 0..self.dim {
            b[(k, k)] += Complex64::new(0.0, lambda);
        }
        b
    }

    fn sigma_min_svd(&self, lambda: f64) -> Result<f64> {
        let b = self.shifted(lambda);
        let svd = nalgebra::SVD::try_new(b, false, false, f64::EPSILON, 1_000_000)
            .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
        Ok(svd
            .singular_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min))
    }

    /// Power iteration on the Hermitian operator B^-1 B^-H whose largest
    /// eigenvalue is 1/sigma_min^2; each application is one direct and
    /// one adjoint solve against the same factorization.
    fn power_iterate<S, SA>(&self, seed: u64, solve: S, solve_adjoint: SA) -> Result<f64>
    where
        S: Fn(&DVector<Complex64>) -> Option<DVector<Complex64>>,
        SA: Fn(&DVector<Complex64>) -> Option<DVector<Complex64>>,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = DVector::from_fn(self.dim, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let nz = z.norm();
        if nz == 0.0 {
            return Err(Error::Numerical("degenerate iteration start".into()));
        }
        z /= Complex64::from(nz);

        let mut rho_prev = 0.0f64;
        for _ in 0..ITER_MAX {
            let w = solve_adjoint(&z).ok_or(Error::Numerical("adjoint solve failed".into()))?;
            let y = solve(&w).ok_or(Error::Numerical("resolvent solve failed".into()))?;
            let rho = z.dotc(&y).re;
            if !rho.is_finite() || rho <= 0.0 {
                // exactly singular shift: treat as sigma_min = 0
                return Ok(0.0);
            }
            let ny = y.norm();
            z = y / Complex64::from(ny);
            if (rho - rho_prev).abs() <= ITER_RTOL * rho {
                return Ok(1.0 / rho.sqrt());
            }
            rho_prev = rho;
        }
        Ok(1.0 / rho_prev.sqrt())
    }

    fn sigma_min_schur_iteration(&self, lambda: f64, seed: u64) -> Result<f64> {
        let (qt, _) = self.schur.as_ref().expect("schur checked by caller");
        self.power_iterate(
            seed,
            |b| qt.solve(lambda, b),
            |c| qt.solve_adjoint(lambda, c),
        )
    }

    fn sigma_min_lu_iteration(&self, lambda: f64, seed: u64) -> Result<f64> {
        let b = self.shifted(lambda);
        let lu = b.clone().lu();
        let l = lu.l();
        let u = lu.u();
        // nalgebra convention P B = L U, so B^H = U^H L^H P and the
        // adjoint solve is two triangular solves plus undoing P
        let adjoint = |c: &DVector<Complex64>| -> Option<DVector<Complex64>> {
            let w = u.ad_solve_upper_triangular(c)?;
            let mut v = l.ad_solve_lower_triangular(&w)?;
            lu.p().inv_permute_rows(&mut v);
            Some(v)
        };
        self.power_iterate(seed, |b| lu.solve(b), adjoint)
    }
}

/// One-off energy-norm resolvent norm at i lambda (SVD path for small
/// systems, LU inverse iteration above [`RESOLVENT_SVD_CAP`]).
pub fn resolvent_norm(op: &Operator, lambda: f64) -> Result<f64> {
    ResolventContext::new(op)?.norm(lambda, 0)
}

/// Resolvent norm forced through the full-SVD path (cross-check).
pub fn resolvent_norm_svd(op: &Operator, lambda: f64) -> Result<f64> {
    let ctx = ResolventContext::new(op)?;
    let sigma = ctx.sigma_min_svd(lambda)?;
    if !(sigma > ctx.near_singular_floor(lambda)) {
        return Err(Error::NearSingular { lambda });
    }
    Ok(1.0 / sigma)
}

/// Resolvent norm forced through LU inverse iteration (cross-check).
pub fn resolvent_norm_inverse_iteration(op: &Operator, lambda: f64) -> Result<f64> {
    let ctx = ResolventContext::new(op)?;
    let sigma = ctx.sigma_min_lu_iteration(lambda, 0)?;
    if !(sigma > ctx.near_singular_floor(lambda)) {
        return Err(Error::NearSingular { lambda });
    }
    Ok(1.0 / sigma)
}

/// Sweep window and fit options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub count: usize,
    /// Theil-Sen median-of-slopes fit instead of least squares.
    pub robust: bool,
    /// Sample each log bin at its least-damped eigenfrequency instead
    /// of the bin's nominal grid point. The growth envelope of the
    /// resolvent is attained at resonance peaks; nominal grid points
    /// fall between resonances and measure eigenvalue spacing instead.
    pub snap: bool,
}

impl SweepConfig {
    /// Default window [10, 0.3 pi c_min / h] with c_min the slowest wave
    /// speed; resolves only frequencies the grid itself resolves.
    pub fn default_for(params: &PhysicalParameters, h: f64) -> Result<Self> {
        let (s1, s2, s3) = wave_speeds(params);
        let c_min = s1.min(s2).min(s3).sqrt();
        let cfg = Self {
            lambda_min: 10.0,
            lambda_max: 0.3 * std::f64::consts::PI * c_min / h,
            count: SWEEP_DEFAULT_COUNT,
            robust: false,
            snap: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min.is_finite() && self.lambda_min > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda_min",
                reason: format!("must be finite and > 0, got {}", self.lambda_min),
            });
        }
        if !(self.lambda_max.is_finite() && self.lambda_max > self.lambda_min) {
            return Err(Error::EmptyWindow(format!(
                "lambda window [{}, {}] is empty (grid too coarse for the requested sweep)",
                self.lambda_min, self.lambda_max
            )));
        }
        if self.count < 2 {
            return Err(Error::InvalidParameter {
                name: "lambda_count",
                reason: format!("needs at least 2 samples, got {}", self.count),
            });
        }
        Ok(())
    }

    fn lambdas(&self) -> Vec<f64> {
        let (a, b) = (self.lambda_min.ln(), self.lambda_max.ln());
        (0..self.count)
            .map(|i| (a + (b - a) * i as f64 / (self.count - 1) as f64).exp())
            .collect()
    }

    /// One sample per log bin, at the imaginary part of the bin's
    /// least-damped eigenvalue; bins holding no eigenvalue contribute
    /// nothing. The result is strictly increasing.
    fn snapped_lambdas(&self, eigenvalues: &[Complex64]) -> Vec<f64> {
        let (a, b) = (self.lambda_min.ln(), self.lambda_max.ln());
        let edge = |j: usize| (a + (b - a) * j as f64 / self.count as f64).exp();
        let mut out = Vec::with_capacity(self.count);
        for j in 0..self.count {
            let (lo, hi) = (edge(j), edge(j + 1));
            let peak = eigenvalues
                .iter()
                .filter(|z| z.im >= lo && z.im < hi)
                .min_by(|x, y| x.re.abs().total_cmp(&y.re.abs()));
            if let Some(z) = peak {
                out.push(z.im);
            }
        }
        out
    }
}

/// Resolvent norms over a log-spaced frequency window with the fitted
/// log-log growth exponent. `norms[i]` is `None` where the sample was
/// excluded as near-singular; excluded indices are also listed. With
/// snapping, bins without an eigenfrequency are absent entirely, so
/// `lambdas` may be shorter than the configured count.
///
/// The growth law is asymptotic, so `fitted_exponent` is fitted over
/// the scaling range: samples in the upper geometric half of the
/// window. The lower half mixes in preasymptotic branches (observed:
/// a constant-damping branch occupies the low bins of the slowest
/// regime and biases a whole-window slope down by more than 1), so the
/// whole-window fit is kept separately as `full_window_exponent`.
#[derive(Debug, Clone)]
pub struct ResolventSweep {
    pub lambdas: Vec<f64>,
    pub norms: Vec<Option<f64>>,
    pub excluded: Vec<usize>,
    /// slope fitted over the scaling range (upper geometric half)
    pub fitted_exponent: f64,
    /// slope fitted over every usable sample, for reference
    pub full_window_exponent: f64,
    pub robust: bool,
    pub snap: bool,
}

fn sweep_points(lambdas: &[f64], norms: &[Option<f64>]) -> Vec<(f64, f64)> {
    lambdas
        .iter()
        .zip(norms)
        .filter_map(|(l, n)| n.map(|n| (l.ln(), n.ln())))
        .collect()
}

fn ols_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

fn theil_sen_slope(pts: &[(f64, f64)]) -> f64 {
    let mut slopes = Vec::with_capacity(pts.len() * (pts.len() - 1) / 2);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let dx = pts[j].0 - pts[i].0;
            if dx != 0.0 {
                slopes.push((pts[j].1 - pts[i].1) / dx);
            }
        }
    }
    slopes.sort_by(f64::total_cmp);
    let m = slopes.len();
    if m % 2 == 1 {
        slopes[m / 2]
    } else {
        0.5 * (slopes[m / 2 - 1] + slopes[m / 2])
    }
}

fn finish_sweep(
    lambdas: Vec<f64>,
    norms: Vec<Option<f64>>,
    cfg: &SweepConfig,
) -> Result<ResolventSweep> {
    let excluded: Vec<usize> = norms
        .iter()
        .enumerate()
        .filter_map(|(i, n)| n.is_none().then_some(i))
        .collect();
    let pts = sweep_points(&lambdas, &norms);
    if pts.len() < 2 {
        return Err(Error::EmptyWindow(
            "fewer than two usable resolvent samples".into(),
        ));
    }
    let fit = |p: &[(f64, f64)]| if cfg.robust { theil_sen_slope(p) } else { ols_slope(p) };
    let full_window_exponent = fit(&pts);
    let mid = (cfg.lambda_min.ln() + cfg.lambda_max.ln()) / 2.0;
    let tail: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 >= mid).collect();
    // degenerate windows leave too few tail samples; fall back to all
    let fitted_exponent = if tail.len() >= 2 { fit(&tail) } else { full_window_exponent };
    Ok(ResolventSweep {
        lambdas,
        norms,
        excluded,
        fitted_exponent,
        full_window_exponent,
        robust: cfg.robust,
        snap: cfg.snap,
    })
}

fn sample_norm(ctx: &ResolventContext, lambda: f64, seed: u64) -> Result<Option<f64>> {
    match ctx.norm(lambda, seed) {
        Ok(n) => Ok(Some(n)),
        Err(Error::NearSingular { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn sweep_lambdas(ctx: &ResolventContext, cfg: &SweepConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !cfg.snap {
        return Ok(cfg.lambdas());
    }
    match &ctx.schur {
        Some((_, eigs)) => Ok(cfg.snapped_lambdas(eigs)),
        None => Err(Error::Numerical(
            "snapped sweep needs the spectrum; build the context with its Schur form".into(),
        )),
    }
}

/// Sweep through a shared context, sequentially.
pub fn resolvent_sweep_with_context_sequential(
    ctx: &ResolventContext,
    cfg: &SweepConfig,
) -> Result<ResolventSweep> {
    let lambdas = sweep_lambdas(ctx, cfg)?;
    let norms = lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| sample_norm(ctx, l, i as u64))
        .collect::<Result<Vec<_>>>()?;
    finish_sweep(lambdas, norms, cfg)
}

/// Sweep through a shared context; distributes samples over the rayon
/// pool when the `parallel` feature is enabled. Results are ordered by
/// sample index and bit-identical to the sequential path.
pub fn resolvent_sweep_with_context(
    ctx: &ResolventContext,
    cfg: &SweepConfig,
) -> Result<ResolventSweep> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let lambdas = sweep_lambdas(ctx, cfg)?;
        let norms = lambdas
            .par_iter()
            .enumerate()
            .map(|(i, &l)| sample_norm(ctx, l, i as u64))
            .collect::<Result<Vec<_>>>()?;
        finish_sweep(lambdas, norms, cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        resolvent_sweep_with_context_sequential(ctx, cfg)
    }
}

///// Context suited to one sweep: the Schur form whenever snapping needs
/// the spectrum or the dimension is past the SVD path (and under the
/// dense cap), a plain context otherwise.
pub fn sweep_context(op: &Operator, cfg: &SweepConfig) -> Result<ResolventContext> {
    let want_schur =
        cfg.snap || (op.dim() > RESOLVENT_SVD_CAP && op.dim() <= DENSE_EIG_CAP);
    if want_schur {
        ResolventContext::with_schur(op)
    } else {
        ResolventContext::new(op)
    }
}

/// Resolvent sweep over `cfg` (or the default window) for one operator.
pub fn resolvent_sweep(op: &Operator, cfg: Option<SweepConfig>) -> Result<ResolventSweep> {
    let cfg = match cfg {
        Some(c) => c,
        None => SweepConfig::default_for(op.params(), op.grid().h())?,
    };
    resolvent_sweep_with_context(&sweep_context(op, &cfg)?, &cfg)
}

/// Sequential variant of [`resolvent_sweep`], compiled unconditionally;
/// the benchmark suite compares the two.
pub fn resolvent_sweep_sequential(op: &Operator, cfg: Option<SweepConfig>) -> Result<ResolventSweep> {
    let cfg = match cfg {
        Some(c) => c,
        None => SweepConfig::default_for(op.params(), op.grid().h())?,
    };
    resolvent_sweep_with_context_sequential(&sweep_context(op, &cfg)?, &cfg)
}

/// Least-damped eigenvalue of the generator and a real state aligned
/// with its eigenvector (unit 2-norm, not energy-normalized).
///
/// The eigenvector comes from inverse iteration on the energy-norm
/// similarity at the Schur eigenvalue, mapped back to state
/// coordinates; `seed` fixes the iteration start.
pub fn abscissa_mode(op: &Operator, seed: u64) -> Result<(Complex64, DVector<f64>)> {
    let l = gram_factor(op)?;
    let xt = l
        .solve_lower_triangular(&op.generator().transpose())
        .ok_or_else(|| Error::Numerical("Gram factor is singular".into()))?;
    let a_sym = l.transpose() * xt.transpose();
    let dim = a_sym.nrows();
    if dim > DENSE_EIG_CAP {
        return Err(Error::Numerical(format!(
            "state dimension {dim} exceeds the dense eigensolver cap {DENSE_EIG_CAP}"
        )));
    }
    let eigs = schur_of(a_sym.clone())?.complex_eigenvalues();
    let target = eigs
        .iter()
        .filter(|z| z.im >= 0.0)
        .max_by(|x, y| x.re.total_cmp(&y.re))
        .copied()
        .ok_or_else(|| Error::Numerical("empty spectrum".into()))?;

    // inverse iteration at the (nearly exact) shift; the almost-singular
    // factorization is what makes it converge in a couple of steps
    let mut shift = target;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(dim, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    v /= Complex64::from(v.norm());
    for attempt in 0..2 {
        let mut b = a_sym.map(|x| Complex64::new(-x, 0.0));
        for k in 0..dim {
            b[(k, k)] += shift;
        }
        let lu = b.lu();
        let mut ok = true;
        for _ in 0..4 {
            match lu.solve(&v) {
                Some(w) if w.norm().is_finite() && w.norm() > 0.0 => {
                    v = &w / Complex64::from(w.norm());
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            break;
        }
        if attempt == 1 {
            return Err(Error::Numerical("inverse iteration failed".into()));
        }
        // exactly singular factorization: nudge the shift off the spectrum
        shift += Complex64::new(0.0, 1e-10 * (1.0 + target.norm()));
    }

    // back to state coordinates: x solves L^T x = v, split into parts
    let re = l
        .tr_solve_lower_triangular(&v.map(|z| z.re))
        .ok_or_else(|| Error::Numerical("Gram factor is singular".into()))?;
    let im = l
        .tr_solve_lower_triangular(&v.map(|z| z.im))
        .ok_or_else(|| Error::Numerical("Gram factor is singular".into()))?;
    let mut x = if re.norm() >= im.norm() { re } else { im };
    let n = x.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::Numerical("degenerate eigenvector".into()));
    }
    x /= n;
    Ok((target, x))
}

/// First-order frequency-domain system matrix for the stacked boundary
/// trace (v1, v1', v3, v3', v5, v5') at frequency lambda.
pub fn transfer_matrix(params: &PhysicalParameters, lambda: f64) -> Result<DMatrix<f64>> {
    params.validate()?;
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("must be finite, got {lambda}"),
        });
    }
    let p = params;
    let l2 = lambda * lambda;
    #[rustfmt::skip]
    let rows: [f64; 36] = [
        0.0, 1.0,                      0.0,                        0.0,                0.0,                          0.0,
        0.0, 0.0,                      0.0,                        1.0,                0.0,                          p.l * (1.0 - p.k3 / p.k1),
        0.0, 0.0,                      0.0,                        1.0,                0.0,                          0.0,
        0.0, -p.k1 / p.k2,             (p.rho2 * l2 - p.k1) / p.k2, 0.0,               -p.l * p.k1 / p.k2,           0.0,
        0.0, 0.0,                      0.0,                        0.0,                0.0,                          1.0,
        0.0, -p.l * (p.k1 / p.k3 + 1.0), 0.0,                      -p.l * p.k1 / p.k3, (p.rho1 * l2 - p.l * p.l * p.k1) / p.k3, 0.0,
    ];
    Ok(DMatrix::from_row_slice(6, 6, &rows))
}

/// Propagates a boundary trace from beta to x along the frequency-domain
/// system: V(x) = exp((x - beta) M(lambda)) V(beta).
pub fn propagate(
    params: &PhysicalParameters,
    lambda: f64,
    v_beta: &DVector<f64>,
    x: f64,
) -> Result<DVector<f64>> {
    if v_beta.len() != 6 {
        return Err(Error::ShapeMismatch(format!(
            "boundary trace has {} entries, expected 6",
            v_beta.len()
        )));
    }
    if !x.is_finite() || x < 0.0 || x > params.length {
        return Err(Error::OutOfDomain { x, length: params.length });
    }
    let m = transfer_matrix(params, lambda)?;
    Ok(expm(&(m * (x - params.beta))) * v_beta)
}

/// Case split of the reduced second-order equation s v + v'' = 0 with
/// s = (l^2 k3 - rho1 lambda^2) / k3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedKind {
    /// s = 0: v(x) = c1 x + c2
    Linear,
    /// s < 0: v(x) = c1 exp(mu x) + c2 exp(-mu x), mu = sqrt(-s)
    Exponential,
    /// s > 0: v(x) = c1 cos(omega x) + c2 sin(omega x), omega = sqrt(s)
    Oscillatory,
}

/// Closed-form solution of the reduced equation on the damped segment.
#[derive(Debug, Clone, Copy)]
pub struct ReducedSolution {
    pub s: f64,
    pub kind: ReducedKind,
    pub c1: f64,
    pub c2: f64,
}

impl ReducedSolution {
    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            ReducedKind::Linear => self.c1 * x + self.c2,
            ReducedKind::Exponential => {
                let mu = (-self.s).sqrt();
                self.c1 * (mu * x).exp() + self.c2 * (-mu * x).exp()
            }
            ReducedKind::Oscillatory => {
                let omega = self.s.sqrt();
                self.c1 * (omega * x).cos() + self.c2 * (omega * x).sin()
            }
        }
    }
}

/// Solves the reduced equation for frequency lambda and case constants
/// (c1, c2). The case switches exactly at lambda^2 = l^2 k3 / rho1.
pub fn reduced_solution(
    params: &PhysicalParameters,
    lambda: f64,
    c1: f64,
    c2: f64,
) -> Result<ReducedSolution> {
    params.validate()?;
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("must be finite, got {lambda}"),
        });
    }
    let s = (params.l * params.l * params.k3 - params.rho1 * lambda * lambda) / params.k3;
    let kind = if s == 0.0 {
        ReducedKind::Linear
    } else if s < 0.0 {
        ReducedKind::Exponential
    } else {
        ReducedKind::Oscillatory
    };
    Ok(ReducedSolution { s, kind, c1, c2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble, Grid};
    use crate::model::PhysicalParameters;
    use approx::assert_relative_eq;

    fn op_for(p: &PhysicalParameters, n: usize) -> Operator {
        assemble(p, &Grid::new(n, p.length).unwrap()).unwrap()
    }

    #[test]
    fn undamped_spectrum_is_purely_imaginary() {
        let p = PhysicalParameters { a0: 0.0, ..Default::default() };
        let op = op_for(&p, 40);
        let report = eigenvalues(&op).unwrap();
        let bound = 1e-8 * op.generator().norm();
        for z in &report.eigenvalues {
            assert!(z.re.abs() <= bound, "Re {} exceeds {}", z.re, bound);
        }
    }

    #[test]
    fn damped_spectrum_lies_strictly_left_of_the_axis() {
        let p = PhysicalParameters::default();
        let report = eigenvalues(&op_for(&p, 50)).unwrap();
        assert!(report.abscissa < 0.0, "abscissa {}", report.abscissa);
        assert!(report.min_abs_real() > 1e-10, "min |Re| {}", report.min_abs_real());
        assert_eq!(report.eigenvalues.len(), 300);
    }

    #[test]
    fn eigenvalue_cap_is_enforced() {
        let p = PhysicalParameters::default();
        let op = op_for(&p, 20);
        assert!(matches!(
            eigenvalues_with_cap(&op, 100),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn quasi_triangular_solves_match_dense_lu() {
        // quasi-triangular test matrix with two 2x2 bumps
        let n = 12;
        let mut t = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                t[(i, j)] = ((i * 5 + j * 3) as f64 * 0.37).sin();
            }
            t[(i, i)] += 0.5;
        }
        t[(4, 3)] = 0.8;
        t[(9, 8)] = -0.6;
        let qt = QuasiTriangular::new(t.clone());
        let lambda = 1.3;

        let mut m = t.map(|x| Complex64::new(-x, 0.0));
        for k in 0..n {
            m[(k, k)] += Complex64::new(0.0, lambda);
        }
        let b = DVector::from_fn(n, |i, _| Complex64::new((i as f64).cos(), 0.3 * i as f64));

        let x = qt.solve(lambda, &b).unwrap();
        assert!(((&m * &x) - &b).norm() <= 1e-12 * b.norm());

        let y = qt.solve_adjoint(lambda, &b).unwrap();
        assert!(((m.adjoint() * &y) - &b).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn lu_adjoint_solve_is_consistent() {
        let p = PhysicalParameters { k3: 2.0, ..Default::default() };
        let ctx = ResolventContext::new(&op_for(&p, 6)).unwrap();
        let b = ctx.shifted(7.0);
        let lu = b.clone().lu();
        let l = lu.l();
        let u = lu.u();
        let c = DVector::from_fn(ctx.dim(), |i, _| Complex64::new(0.1 * i as f64, 1.0));
        let w = u.ad_solve_upper_triangular(&c).unwrap();
        let mut v = l.ad_solve_lower_triangular(&w).unwrap();
        lu.p().inv_permute_rows(&mut v);
        assert!((b.adjoint() * &v - &c).norm() <= 1e-10 * c.norm());
    }

    #[test]
    fn resolvent_paths_agree() {
        let p = PhysicalParameters {
            rho1: 0.9,
            rho2: 1.4,
            k1: 1.3,
            k2: 0.7,
            k3: 2.1,
            l: 0.8,
            a0: 0.6,
            beta: 0.37,
            ..Default::default()
        };
        let op = op_for(&p, 4);
        let ctx = ResolventContext::with_schur(&op).unwrap();
        for i in 0..20 {
            let lambda = 10f64.powf(-0.5 + 2.5 * i as f64 / 19.0);
            let svd = resolvent_norm_svd(&op, lambda).unwrap();
            let inv = resolvent_norm_inverse_iteration(&op, lambda).unwrap();
            let schur = 1.0 / ctx.sigma_min_schur_iteration(lambda, 0).unwrap();
            assert_relative_eq!(svd, inv, max_relative = 1e-6);
            assert_relative_eq!(svd, schur, max_relative = 1e-6);
        }
    }

    #[test]
    fn resolvent_norm_is_symmetric_in_lambda() {
        let p = PhysicalParameters { k2: 2.0, ..Default::default() };
        let op = op_for(&p, 20);
        for lambda in [3.0, 17.0, 55.0] {
            let plus = resolvent_norm(&op, lambda).unwrap();
            let minus = resolvent_norm(&op, -lambda).unwrap();
            assert_relative_eq!(plus, minus, max_relative = 1e-9);
        }
    }

    /// With a0 = 0 the similarity is skew-symmetric, hence normal, and
    /// the resolvent norm is exactly 1 / distance to the spectrum.
    #[test]
    fn undamped_resolvent_matches_spectral_distance() {
        let p = PhysicalParameters { a0: 0.0, ..Default::default() };
        let op = op_for(&p, 16);
        let report = eigenvalues(&op).unwrap();
        for lambda in [2.3, 9.1, 31.7] {
            let dist = report
                .eigenvalues
                .iter()
                .map(|z| (lambda - z.im).abs())
                .fold(f64::INFINITY, f64::min);
            let norm = resolvent_norm(&op, lambda).unwrap();
            assert_relative_eq!(norm, 1.0 / dist, max_relative = 1e-8);
        }
    }

    #[test]
    fn resolvent_at_eigenfrequency_is_flagged() {
        let p = PhysicalParameters { a0: 0.0, ..Default::default() };
        let op = op_for(&p, 12);
        let report = eigenvalues(&op).unwrap();
        let target = report
            .eigenvalues
            .iter()
            .map(|z| z.im)
            .filter(|im| *im > 0.0)
            .fold(f64::INFINITY, f64::min);
        assert!(matches!(
            resolvent_norm(&op, target),
            Err(Error::NearSingular { .. })
        ));
    }

    #[test]
    fn resolvent_at_zero_is_finite_for_default_parameters() {
        let p = PhysicalParameters::default();
        let norm = resolvent_norm(&op_for(&p, 20), 0.0).unwrap();
        assert!(norm.is_finite() && norm > 0.0);
    }

    #[test]
    fn sweep_window_and_determinism() {
        let p = PhysicalParameters::default();
        let op = op_for(&p, 24);
        let h = op.grid().h();
        let cfg = SweepConfig::default_for(&p, h).unwrap();
        assert_relative_eq!(cfg.lambda_min, 10.0);
        assert_relative_eq!(cfg.lambda_max, 0.3 * std::f64::consts::PI / h);
        assert_eq!(cfg.count, SWEEP_DEFAULT_COUNT);
        assert!(cfg.snap);

        for snap in [true, false] {
            let cfg = SweepConfig { count: 12, snap, ..cfg };
            let a = resolvent_sweep(&op, Some(cfg)).unwrap();
            let b = resolvent_sweep_sequential(&op, Some(cfg)).unwrap();
            assert_eq!(a.lambdas, b.lambdas);
            assert_eq!(a.norms, b.norms);
            assert_eq!(a.fitted_exponent.to_bits(), b.fitted_exponent.to_bits());
            assert_eq!(
                a.full_window_exponent.to_bits(),
                b.full_window_exponent.to_bits()
            );
            assert!(a.excluded.is_empty());
            assert!(a.lambdas.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(a.snap, snap);
            if !snap {
                assert_eq!(a.lambdas.len(), 12);
            }
        }
    }

    /// Snapped samples sit at eigenfrequencies inside the window, and
    /// the resolvent there towers over the neighboring off-peak floor.
    #[test]
    fn snapped_sweep_samples_resonance_peaks() {
        let p = PhysicalParameters { k3: 2.0, ..Default::default() };
        let op = op_for(&p, 40);
        let cfg = SweepConfig {
            lambda_min: 10.0,
            lambda_max: 35.0,
            count: 10,
            robust: false,
            snap: true,
        };
        let ctx = ResolventContext::with_schur(&op).unwrap();
        let spectrum = ctx.spectrum().unwrap();
        let sweep = resolvent_sweep_with_context(&ctx, &cfg).unwrap();
        assert!(sweep.lambdas.len() >= 2);
        for &l in &sweep.lambdas {
            assert!((10.0..35.0).contains(&l));
            let is_eigenfrequency = spectrum
                .eigenvalues
                .iter()
                .any(|z| z.im == l);
            assert!(is_eigenfrequency, "lambda {l} is not an eigenfrequency");
        }
        // peak vs floor: compare to midpoints between adjacent samples
        for w in sweep.lambdas.windows(2) {
            let peak = ctx.norm(w[0], 0).unwrap();
            let floor = ctx.norm(0.5 * (w[0] + w[1]), 0).unwrap();
            assert!(peak > floor, "peak {peak} <= floor {floor} at {}", w[0]);
        }
    }

    /// The abscissa-mode state spans the invariant plane of its
    /// eigenvalue pair: A^2 x = 2 Re(lambda) A x - |lambda|^2 x.
    #[test]
    fn abscissa_mode_lies_in_its_invariant_plane() {
        let p = PhysicalParameters::default();
        let op = op_for(&p, 20);
        let (lambda, x) = abscissa_mode(&op, 0).unwrap();
        let report = eigenvalues(&op).unwrap();
        assert_relative_eq!(lambda.re, report.abscissa, max_relative = 1e-10);
        assert!((x.norm() - 1.0).abs() <= 1e-12);

        let y = op.generator() * &x;
        let z = op.generator() * &y;
        let defect = &z - (&y * (2.0 * lambda.re) - &x * lambda.norm_sqr());
        let scale = z.norm() + y.norm() + x.norm();
        assert!(
            defect.norm() <= 1e-8 * scale,
            "plane defect {} vs scale {scale}",
            defect.norm()
        );
    }

    #[test]
    fn sweep_rejects_empty_window() {
        let p = PhysicalParameters::default();
        // N = 4: lambda_max = 0.3 pi * 5 < 10
        let op = op_for(&p, 4);
        assert!(matches!(
            resolvent_sweep(&op, None),
            Err(Error::EmptyWindow(_))
        ));
    }

    #[test]
    fn slope_fitters_recover_synthetic_laws() {
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let x = 0.1 * i as f64;
                (x, 2.5 * x - 1.0)
            })
            .collect();
        assert_relative_eq!(ols_slope(&pts), 2.5, max_relative = 1e-12);
        assert_relative_eq!(theil_sen_slope(&pts), 2.5, max_relative = 1e-12);

        // one wild outlier at the window edge: the median slope ignores it
        let mut noisy = pts.clone();
        noisy[39].1 += 100.0;
        assert_relative_eq!(theil_sen_slope(&noisy), 2.5, max_relative = 1e-6);
        assert!((ols_slope(&noisy) - 2.5).abs() > 0.5);
    }

    #[test]
    fn transfer_matrix_entries_are_pinned() {
        let p = PhysicalParameters { k1: 1.0, k3: 4.0, l: 2.0, ..Default::default() };
        let m = transfer_matrix(&p, 3.0).unwrap();
        // row 6, column 2: -l (k1/k3 + 1)
        assert_relative_eq!(m[(5, 1)], -2.5, max_relative = 1e-14);
        // row 2, column 6: l (1 - k3/k1)
        assert_relative_eq!(m[(1, 5)], 2.0 * (1.0 - 4.0), max_relative = 1e-14);
        // row 4, column 3: (rho2 lambda^2 - k1)/k2
        assert_relative_eq!(m[(3, 2)], 9.0 - 1.0, max_relative = 1e-14);
        // row 6, column 5: (rho1 lambda^2 - l^2 k1)/k3
        assert_relative_eq!(m[(5, 4)], (9.0 - 4.0) / 4.0, max_relative = 1e-14);
        // rows 1, 3, 5 just shift the stacked derivative
        for (row, col) in [(0usize, 1usize), (2, 3), (4, 5)] {
            for j in 0..6 {
                let expect = if j == col { 1.0 } else { 0.0 };
                assert_eq!(m[(row, j)], expect, "row {row} col {j}");
            }
        }
    }

    /// Independent oracle: classic fourth-order Runge-Kutta on
    /// V' = M V with a tiny step reproduces the matrix-exponential
    /// propagation to 1e-10.
    #[test]
    fn propagate_matches_runge_kutta_oracle() {
        let p = PhysicalParameters { k1: 1.2, k2: 0.8, k3: 2.0, l: 0.9, ..Default::default() };
        let lambda = 4.0;
        let m = transfer_matrix(&p, lambda).unwrap();
        let v0 = DVector::from_row_slice(&[1.0, -0.4, 0.3, 0.2, -0.7, 0.5]);
        let x = 0.9;

        let steps = 20_000usize;
        let dt = (x - p.beta) / steps as f64;
        let mut v = v0.clone();
        for _ in 0..steps {
            let k1v = &m * &v;
            let k2v = &m * (&v + &k1v * (dt / 2.0));
            let k3v = &m * (&v + &k2v * (dt / 2.0));
            let k4v = &m * (&v + &k3v * dt);
            v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
        }

        let direct = propagate(&p, lambda, &v0, x).unwrap();
        assert!((&direct - &v).norm() <= 1e-10 * v.norm());
    }

    #[test]
    fn propagation_composes_as_a_group() {
        let p = PhysicalParameters::default();
        let lambda = 7.0;
        let v0 = DVector::from_row_slice(&[0.3, 1.0, -0.2, 0.5, 0.8, -0.6]);
        let direct = propagate(&p, lambda, &v0, 0.95).unwrap();
        let mid = propagate(&p, lambda, &v0, 0.7).unwrap();
        // restart from x = 0.7 by shifting beta there
        let p2 = PhysicalParameters { beta: 0.7, ..p };
        let composed = propagate(&p2, lambda, &mid, 0.95).unwrap();
        assert!((&direct - &composed).norm() <= 1e-9 * direct.norm());
    }

    #[test]
    fn reduced_solution_cases_switch_exactly() {
        // l = k3 = rho1 = 1: the switch sits exactly at lambda = 1
        let p = PhysicalParameters::default();
        let r = reduced_solution(&p, 1.0, 0.4, -0.3).unwrap();
        assert_eq!(r.kind, ReducedKind::Linear);
        assert_eq!(r.s, 0.0);
        assert_relative_eq!(r.eval(0.25), 0.4 * 0.25 - 0.3, max_relative = 1e-14);

        let r = reduced_solution(&p, 1.0 + 1e-12, 1.0, 1.0).unwrap();
        assert_eq!(r.kind, ReducedKind::Exponential);
        let r = reduced_solution(&p, 1.0 - 1e-12, 1.0, 1.0).unwrap();
        assert_eq!(r.kind, ReducedKind::Oscillatory);
    }

    /// Finite-difference residual oracle: a fourth-order central second
    /// difference at h = 1e-3 leaves |s v + v''| below 1e-6 max|v| on
    /// the damped segment for all three case branches.
    #[test]
    fn reduced_solution_satisfies_the_equation() {
        let p = PhysicalParameters::default();
        let cases = [
            (1.0, 0.7, 0.2),  // s = 0
            (2.0, 0.5, -0.8), // s = -3
            (0.5, 1.1, 0.4),  // s = 0.75
        ];
        let h = 1e-3;
        for (lambda, c1, c2) in cases {
            let r = reduced_solution(&p, lambda, c1, c2).unwrap();
            let max_v = (0..100)
                .map(|i| r.eval(p.beta * i as f64 / 99.0).abs())
                .fold(0.0, f64::max);
            for i in 1..40 {
                let x = p.beta * i as f64 / 40.0;
                let second = (-r.eval(x - 2.0 * h) + 16.0 * r.eval(x - h) - 30.0 * r.eval(x)
                    + 16.0 * r.eval(x + h)
                    - r.eval(x + 2.0 * h))
                    / (12.0 * h * h);
                let residual = (r.s * r.eval(x) + second).abs();
                assert!(
                    residual <= 1e-6 * max_v,
                    "lambda {lambda}: residual {residual} at x {x}"
                );
            }
        }
    }
}
