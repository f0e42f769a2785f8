//! Dense linear algebra used by the Schmidt decomposition.
//!
//! The Hermitian eigensolver is nalgebra's; the singular value decomposition
//! is a one-sided (Hestenes) Jacobi iteration kept here so the two routes
//! to the Schmidt spectrum share no code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

/// Diagonalises a Hermitian matrix. Real input (all imaginary parts zero)
/// runs through the real symmetric solver.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> HermitianEigen {
    let n = m.nrows();
    let (values, vectors) = if m.iter().all(|z| z.im == 0.0) {
        let re = m.map(|z| z.re);
        let re = (&re + re.transpose()) * 0.5;
        let eig = SymmetricEigen::new(re);
        (
            eig.eigenvalues.as_slice().to_vec(),
            eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
        )
    } else {
        let herm = (m + m.adjoint()).map(|z| z * 0.5);
        let eig = SymmetricEigen::new(herm);
        (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    HermitianEigen {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]),
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Thin SVD `A = U diag(s) V†` of a square matrix with descending `s`.
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: DMatrix<Complex64>,
    pub v: DMatrix<Complex64>,
}

const JACOBI_TOL: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided Jacobi SVD. Columns of `A` are rotated pairwise until mutually
/// orthogonal; their norms are the singular values.
pub fn jacobi_svd(a: &DMatrix<Complex64>) -> Svd {
    let n = a.ncols();
    let mut w = a.clone();
    let mut v = DMatrix::<Complex64>::identity(n, n);
    let mut norms: Vec<f64> = (0..n).map(|j| w.column(j).norm_squared()).collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let e = phase.conj();
                rotate_columns(&mut w, p, q, c, s, e);
                rotate_columns(&mut v, p, q, c, s, e);
                norms[p] = w.column(p).norm_squared();
                norms[q] = w.column(q).norm_squared();
            }
        }
        if !rotated {
            break;
        }
    }

    let sv: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sv[y].total_cmp(&sv[x]).then(x.cmp(&y)));
    let top = sv[order[0]];
    let mut u = DMatrix::<Complex64>::zeros(a.nrows(), n);
    let mut vs = DMatrix::<Complex64>::zeros(n, n);
    let mut keep = Vec::with_capacity(n);
    for (c, &j) in order.iter().enumerate() {
        vs.set_column(c, &v.column(j));
        if sv[j] > 1e-13 * top && sv[j] > 0.0 {
            u.set_column(c, &(w.column(j) / Complex64::new(sv[j], 0.0)));
            keep.push(true);
        } else {
            keep.push(false);
        }
    }
    complete_orthonormal(&mut u, &keep);
    Svd {
        singular_values: order.iter().map(|&j| sv[j]).collect(),
        u,
        v: vs,
    }
}

fn rotate_columns(m: &mut DMatrix<Complex64>, p: usize, q: usize, c: f64, s: f64, e: Complex64) {
    for r in 0..m.nrows() {
        let a = m[(r, p)];
        let b = m[(r, q)] * e;
        m[(r, p)] = a * c - b * s;
        m[(r, q)] = a * s + b * c;
    }
}

/// Replaces the columns not marked `keep` with unit vectors orthogonal to
/// every other column (modified Gram-Schmidt, applied twice).
pub fn complete_orthonormal(m: &mut DMatrix<Complex64>, keep: &[bool]) {
    let n = m.nrows();
    let mut basis_probe = 0usize;
    for c in 0..m.ncols() {
        if keep[c] {
            continue;
        }
        loop {
            let mut cand = DVector::<Complex64>::zeros(n);
            cand[basis_probe % n] = Complex64::new(1.0, 0.0);
            basis_probe += 1;
            let filled: Vec<usize> = (0..m.ncols())
                .filter(|&o| o != c && (keep[o] || o < c))
                .collect();
            for _ in 0..2 {
                for &o in &filled {
                    let col = m.column(o);
                    let proj = col.dotc(&cand);
                    cand -= col * proj;
                }
            }
            let norm = cand.norm();
            if norm > 1e-6 {
                m.set_column(c, &(cand / Complex64::new(norm, 0.0)));
                break;
            }
            if basis_probe > 4 * n {
                break;
            }
        }
    }
}

/// Orthonormalises the columns of `m` in place, in column order
/// (modified Gram-Schmidt with one reorthogonalisation pass). Columns that
/// collapse are zeroed and flagged `false` in the returned mask.
pub fn orthonormalize_columns(m: &mut DMatrix<Complex64>) -> Vec<bool> {
    let mut keep = vec![false; m.ncols()];
    for c in 0..m.ncols() {
        let mut cand = m.column(c).into_owned();
        let before = cand.norm();
        for _ in 0..2 {
            for o in (0..c).filter(|&o| keep[o]) {
                let col = m.column(o);
                let proj = col.dotc(&cand);
                cand -= col * proj;
            }
        }
        let norm = cand.norm();
        if norm > 1e-6 * before && norm > 0.0 {
            m.set_column(c, &(cand / Complex64::new(norm, 0.0)));
            keep[c] = true;
        } else {
            m.column_mut(c).fill(Complex64::new(0.0, 0.0));
        }
    }
    keep
}
