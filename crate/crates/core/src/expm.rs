//! Dense matrix exponential by Pade approximation with scaling and
//! squaring, degree chosen from the 1-norm thresholds of the standard
//! double-precision table.

use nalgebra::DMatrix;

/// 1-norm thresholds theta_m below which the degree-m Pade approximant
/// reaches double-precision accuracy.
const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

fn pade_coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
        9 => &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        13 => &[
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ],
        _ => unreachable!("unsupported Pade degree"),
    }
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// (U, V) of the degree-m Pade approximant: exp(A) ~ (V - U)^-1 (V + U).
fn pade_uv(a: &DMatrix<f64>, m: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let b = pade_coefficients(m);
    let a2 = a * a;
    if m < 13 {
        // U = A (b_m A^{m-1} + ... + b_1 I), V = b_{m-1} A^{m-1} + ... + b_0 I
        let mut u_poly = DMatrix::<f64>::identity(n, n) * b[1];
        let mut v_poly = DMatrix::<f64>::identity(n, n) * b[0];
        let mut power = DMatrix::<f64>::identity(n, n);
        for k in (2..=m).step_by(2) {
            power = &power * &a2;
            u_poly += &power * b[k + 1];
            v_poly += &power * b[k];
        }
        (a * u_poly, v_poly)
    } else {
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let eye = DMatrix::<f64>::identity(n, n);
        let u_inner = &a6 * (b[13] * &a6 + b[11] * &a4 + b[9] * &a2)
            + b[7] * &a6
            + b[5] * &a4
            + b[3] * &a2
            + b[1] * &eye;
        let v = &a6 * (b[12] * &a6 + b[10] * &a4 + b[8] * &a2)
            + b[6] * &a6
            + b[4] * &a4
            + b[2] * &a2
            + b[0] * &eye;
        (a * u_inner, v)
    }
}

/// exp(A) for square real A. Panics on non-square input.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);

    let (m, scaling) = THETA
        .iter()
        .find(|(_, theta)| norm <= *theta)
        .map(|(m, _)| (*m, 0u32))
        .unwrap_or_else(|| {
            let s = (norm / THETA[4].1).log2().ceil().max(0.0) as u32;
            (13, s)
        });

    let scaled = a / 2f64.powi(scaling as i32);
    let (u, v) = pade_uv(&scaled, m);
    let num = &v + &u;
    let den = &v - &u;
    let mut x = den
        .lu()
        .solve(&num)
        .expect("Pade denominator is nonsingular for scaled input");
    for _ in 0..scaling {
        x = &x * &x;
    }
    x
}
