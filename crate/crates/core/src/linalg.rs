//! Small dense linear algebra kernels: SVD, Hermitian eigendecomposition,
//! matrix exponential and a Lanczos extreme-eigenvalue solver.
//!
//! Gate-sized problems dominate here (dimension 2..16), plus Hamiltonian
//! diagonalization up to a few thousand. Accuracy matters more than raw
//! speed, so Jacobi-type iterations are used throughout: they deliver small
//! singular values to full precision, which the gate-splitting tolerances
//! rely on.

use num_complex::Complex64;

use crate::tensor::ComplexTensor;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Singular value decomposition `A = U diag(s) V^dag`.
///
/// Singular values are sorted descending. The phase of each left singular
/// vector is fixed by making its largest-magnitude entry real-positive
/// (ties broken by lowest index), so repeated calls are bit-reproducible.
pub struct Svd {
    pub u: ComplexTensor,
    pub singular_values: Vec<f64>,
    pub v: ComplexTensor,
}

/// One-sided Jacobi SVD of a complex matrix.
pub fn svd(a: &ComplexTensor) -> Result<Svd> {
    if a.rank() != 2 {
        return Err(Error::shape("svd requires a matrix"));
    }
    let (m, n) = (a.shape()[0], a.shape()[1]);
    if m < n {
        // svd(A^dag) = (V, s, U)
        let t = svd(&a.dagger()?)?;
        return Ok(Svd { u: t.v, singular_values: t.singular_values, v: t.u });
    }

    // column-major working copies: w = A * V_acc
    let mut w: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..m).map(|i| a.mat(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut col = vec![ZERO; n];
            col[j] = Complex64::new(1.0, 0.0);
            col
        })
        .collect();

    let tol = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = ZERO;
                for i in 0..m {
                    alpha += w[p][i].norm_sqr();
                    beta += w[q][i].norm_sqr();
                    gamma += w[p][i].conj() * w[q][i];
                }
                let gnorm = gamma.norm();
                if gnorm <= tol * (alpha * beta).sqrt() || gnorm == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / gnorm; // e^{i phi}
                let tau = (beta - alpha) / (2.0 * gnorm);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ph_conj = phase.conj();
                for i in 0..m {
                    let wp = w[p][i];
                    let wq = ph_conj * w[q][i];
                    w[p][i] = c * wp - s * wq;
                    w[q][i] = s * wp + c * wq;
                }
                for i in 0..n {
                    let vp = v[p][i];
                    let vq = ph_conj * v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| w[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap().then(a.cmp(&b)));

    let mut u = ComplexTensor::zeros(vec![m, n]);
    let mut vm = ComplexTensor::zeros(vec![n, n]);
    let mut singular_values = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        singular_values.push(s);
        if s > 0.0 {
            // phase fix against the largest-magnitude entry of the left vector
            let mut best = 0usize;
            let mut best_mag = -1.0;
            for i in 0..m {
                let mag = w[j][i].norm();
                if mag > best_mag + 1e-30 {
                    best_mag = mag;
                    best = i;
                }
            }
            let entry = w[j][best];
            let phase = if entry.norm() > 0.0 { entry / entry.norm() } else { Complex64::new(1.0, 0.0) };
            let fix = phase.conj();
            for i in 0..m {
                u.data_mut()[i * n + k] = w[j][i] * fix / s;
            }
            for i in 0..n {
                vm.data_mut()[i * n + k] = v[j][i] * fix;
            }
        }
    }
    Ok(Svd { u, singular_values, v: vm })
}

/// Eigendecomposition of a Hermitian matrix via cyclic complex Jacobi.
///
/// Returns eigenvalues sorted ascending with matching eigenvector columns.
pub fn hermitian_eig(a: &ComplexTensor) -> Result<(Vec<f64>, ComplexTensor)> {
    if a.rank() != 2 || a.shape()[0] != a.shape()[1] {
        return Err(Error::shape("hermitian_eig requires a square matrix"));
    }
    let n = a.shape()[0];
    let herm_err: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (a.mat(i, j) - a.mat(j, i).conj()).norm())
        .fold(0.0, f64::max);
    let scale = a.frobenius_norm().max(1.0);
    if herm_err > 1e-8 * scale {
        return Err(Error::pre("matrix is not Hermitian"));
    }

    let mut m: Vec<Complex64> = a.data().to_vec();
    let mut vecs: Vec<Complex64> = ComplexTensor::identity(n).into_data();
    let idx = |i: usize, j: usize| i * n + j;

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[idx(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[idx(p, q)];
                let gnorm = apq.norm();
                if gnorm <= 1e-300 {
                    continue;
                }
                let app = m[idx(p, p)].re;
                let aqq = m[idx(q, q)].re;
                let phase = apq / gnorm; // e^{i phi}
                let tau = (aqq - app) / (2.0 * gnorm);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ph = phase;
                let ph_conj = phase.conj();
                // column update: A <- A R with R acting on (p, q)
                for i in 0..n {
                    let aip = m[idx(i, p)];
                    let aiq = ph_conj * m[idx(i, q)];
                    m[idx(i, p)] = c * aip - s * aiq;
                    m[idx(i, q)] = s * aip + c * aiq;
                }
                // row update: A <- R^dag A
                for j in 0..n {
                    let apj = m[idx(p, j)];
                    let aqj = ph * m[idx(q, j)];
                    m[idx(p, j)] = c * apj - s * aqj;
                    m[idx(q, j)] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = vecs[idx(i, p)];
                    let viq = ph_conj * vecs[idx(i, q)];
                    vecs[idx(i, p)] = c * vip - s * viq;
                    vecs[idx(i, q)] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<f64> = (0..n).map(|i| m[idx(i, i)].re).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap().then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut out = ComplexTensor::zeros(vec![n, n]);
    for (k, &j) in order.iter().enumerate() {
        for i in 0..n {
            out.data_mut()[i * n + k] = vecs[idx(i, j)];
        }
    }
    Ok((eigenvalues, out))
}

/// Matrix exponential exp(A) by Pade approximation with scaling and squaring.
pub fn expm(a: &ComplexTensor) -> Result<ComplexTensor> {
    if a.rank() != 2 || a.shape()[0] != a.shape()[1] {
        return Err(Error::shape("expm requires a square matrix"));
    }
    let n = a.shape()[0];
    let one_norm: f64 = (0..n)
        .map(|j| (0..n).map(|i| a.mat(i, j).norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let theta13 = 5.371920351148152;
    let s = if one_norm > theta13 {
        (one_norm / theta13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale(Complex64::new(1.0 / 2f64.powi(s as i32), 0.0));

    const B: [f64; 14] = [
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
    ];
    let id = ComplexTensor::identity(n);
    let a2 = scaled.matmul(&scaled)?;
    let a4 = a2.matmul(&a2)?;
    let a6 = a4.matmul(&a2)?;
    let re = |x: f64| Complex64::new(x, 0.0);
    let u_inner = a6
        .scale(re(B[13]))
        .add(&a4.scale(re(B[11])))?
        .add(&a2.scale(re(B[9])))?;
    let u_poly = a6
        .matmul(&u_inner)?
        .add(&a6.scale(re(B[7])))?
        .add(&a4.scale(re(B[5])))?
        .add(&a2.scale(re(B[3])))?
        .add(&id.scale(re(B[1])))?;
    let u = scaled.matmul(&u_poly)?;
    let v_inner = a6
        .scale(re(B[12]))
        .add(&a4.scale(re(B[10])))?
        .add(&a2.scale(re(B[8])))?;
    let v = a6
        .matmul(&v_inner)?
        .add(&a6.scale(re(B[6])))?
        .add(&a4.scale(re(B[4])))?
        .add(&a2.scale(re(B[2])))?
        .add(&id.scale(re(B[0])))?;

    let lhs = v.sub(&u)?;
    let rhs = v.add(&u)?;
    let mut x = lu_solve_matrix(&lhs, &rhs)?;
    for _ in 0..s {
        x = x.matmul(&x)?;
    }
    Ok(x)
}

/// Solve A X = B for matrix B via LU with partial pivoting.
pub fn lu_solve_matrix(a: &ComplexTensor, b: &ComplexTensor) -> Result<ComplexTensor> {
    if a.rank() != 2 || a.shape()[0] != a.shape()[1] || b.shape()[0] != a.shape()[0] {
        return Err(Error::shape("lu_solve dimensions"));
    }
    let n = a.shape()[0];
    let cols = b.shape()[1];
    let mut lu: Vec<Complex64> = a.data().to_vec();
    let mut rhs: Vec<Complex64> = b.data().to_vec();
    let idx = |i: usize, j: usize| i * n + j;
    let bidx = |i: usize, j: usize| i * cols + j;
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[idx(k, k)].norm();
        for i in (k + 1)..n {
            let mag = lu[idx(i, k)].norm();
            if mag > best {
                best = mag;
                piv = i;
            }
        }
        if best < 1e-300 {
            return Err(Error::Other("singular matrix in lu_solve".into()));
        }
        if piv != k {
            for j in 0..n {
                lu.swap(idx(k, j), idx(piv, j));
            }
            for j in 0..cols {
                rhs.swap(bidx(k, j), bidx(piv, j));
            }
        }
        let pivot = lu[idx(k, k)];
        for i in (k + 1)..n {
            let factor = lu[idx(i, k)] / pivot;
            if factor == ZERO {
                continue;
            }
            lu[idx(i, k)] = factor;
            for j in (k + 1)..n {
                let delta = factor * lu[idx(k, j)];
                lu[idx(i, j)] -= delta;
            }
            for j in 0..cols {
                let delta = factor * rhs[bidx(k, j)];
                rhs[bidx(i, j)] -= delta;
            }
        }
    }
    for j in 0..cols {
        for i in (0..n).rev() {
            let mut acc = rhs[bidx(i, j)];
            for k in (i + 1)..n {
                acc -= lu[idx(i, k)] * rhs[bidx(k, j)];
            }
            rhs[bidx(i, j)] = acc / lu[idx(i, i)];
        }
    }
    ComplexTensor::from_vec(vec![n, cols], rhs)
}

/// Lowest eigenvalue of a Hermitian operator given only its matrix-vector product.
///
/// Lanczos with full reorthogonalization; adequate for Hamiltonians up to a few
/// thousand dimensions. `dim` is the vector-space dimension.
pub fn lanczos_ground_energy<F>(matvec: F, dim: usize) -> Result<f64>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    if dim == 0 {
        return Err(Error::pre("empty operator"));
    }
    if dim == 1 {
        let one = vec![Complex64::new(1.0, 0.0)];
        return Ok(matvec(&one)[0].re);
    }
    let mut rng = crate::rng::StatusSource::new(0x9e3779b97f4a7c15);
    let mut q0: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.next_normal(), rng.next_normal()))
        .collect();
    let norm = q0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in q0.iter_mut() {
        *z /= norm;
    }

    let max_iter = dim.min(400);
    let mut basis: Vec<Vec<Complex64>> = vec![q0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut prev_min = f64::INFINITY;

    for it in 0..max_iter {
        let q = basis.last().unwrap().clone();
        let mut w = matvec(&q);
        let alpha: f64 = w
            .iter()
            .zip(&q)
            .map(|(wz, qz)| (qz.conj() * wz).re)
            .sum();
        alphas.push(alpha);
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for b in &basis {
                let overlap: Complex64 = b.iter().zip(&w).map(|(bz, wz)| bz.conj() * wz).sum();
                for (wz, bz) in w.iter_mut().zip(b) {
                    *wz -= overlap * bz;
                }
            }
        }
        let beta = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

        if it % 5 == 4 || beta < 1e-13 || it == max_iter - 1 {
            let k = alphas.len();
            let mut t = ComplexTensor::zeros(vec![k, k]);
            for i in 0..k {
                t.data_mut()[i * k + i] = Complex64::new(alphas[i], 0.0);
                if i + 1 < k {
                    t.data_mut()[i * k + i + 1] = Complex64::new(betas[i], 0.0);
                    t.data_mut()[(i + 1) * k + i] = Complex64::new(betas[i], 0.0);
                }
            }
            let (vals, _) = hermitian_eig(&t)?;
            let min = vals[0];
            if (prev_min - min).abs() < 1e-12 * (1.0 + min.abs()) || beta < 1e-13 {
                return Ok(min);
            }
            prev_min = min;
        }
        if beta < 1e-13 {
            break;
        }
        betas.push(beta);
        for z in w.iter_mut() {
            *z /= beta;
        }
        basis.push(w);
    }
    Ok(prev_min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, seed: u64) -> ComplexTensor {
        let mut rng = crate::rng::StatusSource::new(seed);
        let data = (0..n * n)
            .map(|_| c(rng.next_normal(), rng.next_normal()))
            .collect();
        ComplexTensor::from_vec(vec![n, n], data).unwrap()
    }

    fn random_hermitian(n: usize, seed: u64) -> ComplexTensor {
        let a = random_matrix(n, seed);
        a.add(&a.dagger().unwrap())
            .unwrap()
            .scale(c(0.5, 0.0))
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        for seed in 0..8 {
            let a = random_matrix(4, 100 + seed);
            let dec = svd(&a).unwrap();
            let mut rebuilt = ComplexTensor::zeros(vec![4, 4]);
            let mut data = rebuilt.data().to_vec();
            for k in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        data[i * 4 + j] += dec.u.mat(i, k)
                            * dec.singular_values[k]
                            * dec.v.mat(j, k).conj();
                    }
                }
            }
            rebuilt = ComplexTensor::from_vec(vec![4, 4], data).unwrap();
            assert!(rebuilt.sub(&a).unwrap().frobenius_norm() < 1e-12);
            // descending order
            for k in 1..4 {
                assert!(dec.singular_values[k - 1] >= dec.singular_values[k] - 1e-14);
            }
        }
    }

    #[test]
    fn svd_small_singular_values_accurate() {
        // rank-1 matrix: trailing singular values must come out near machine zero,
        // not sqrt(eps)
        let u = [c(0.5, 0.1), c(-0.3, 0.2), c(0.7, 0.0), c(0.1, -0.4)];
        let v = [c(1.0, 0.0), c(0.0, 1.0), c(-0.5, 0.5), c(0.2, 0.0)];
        let mut data = vec![ZERO; 16];
        for i in 0..4 {
            for j in 0..4 {
                data[i * 4 + j] = u[i] * v[j].conj();
            }
        }
        let a = ComplexTensor::from_vec(vec![4, 4], data).unwrap();
        let dec = svd(&a).unwrap();
        assert!(dec.singular_values[1] < 1e-13 * dec.singular_values[0]);
    }

    #[test]
    fn hermitian_eig_diagonalizes() {
        for seed in 0..6 {
            let a = random_hermitian(6, 200 + seed);
            let (vals, vecs) = hermitian_eig(&a).unwrap();
            for k in 0..6 {
                // A v = lambda v
                for i in 0..6 {
                    let mut av = ZERO;
                    for j in 0..6 {
                        av += a.mat(i, j) * vecs.mat(j, k);
                    }
                    let diff = av - vecs.mat(i, k) * vals[k];
                    assert!(diff.norm() < 1e-10, "residual {}", diff.norm());
                }
            }
            for k in 1..6 {
                assert!(vals[k] >= vals[k - 1] - 1e-12);
            }
        }
    }

    #[test]
    fn expm_matches_taylor_series() {
        let a = random_matrix(4, 42).scale(c(0.3, 0.0));
        let fast = expm(&a).unwrap();
        // Taylor oracle
        let mut term = ComplexTensor::identity(4);
        let mut sum = ComplexTensor::identity(4);
        for k in 1..60 {
            term = term.matmul(&a).unwrap().scale(c(1.0 / k as f64, 0.0));
            sum = sum.add(&term).unwrap();
        }
        assert!(fast.sub(&sum).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn lanczos_matches_dense_on_random_hermitian() {
        let n = 5; // 32-dimensional space
        let dim = 1 << n;
        let a = random_hermitian(dim, 77);
        let (vals, _) = hermitian_eig(&a).unwrap();
        let ground = lanczos_ground_energy(
            |v| {
                (0..dim)
                    .map(|i| (0..dim).map(|j| a.mat(i, j) * v[j]).sum())
                    .collect()
            },
            dim,
        )
        .unwrap();
        assert!((ground - vals[0]).abs() < 1e-9, "{ground} vs {}", vals[0]);
    }
}
