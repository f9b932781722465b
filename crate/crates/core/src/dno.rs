//! Discrete Dirichlet–Neumann operator: the Schur complement of the
//! stiffness matrix on the free-surface nodes, its L² representative and
//! its spectrum.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::{self, BoundaryMass, FemSystem};
use crate::error::{check_len, Error, Result};
use crate::linalg::{self, EnvelopeCholesky};
use crate::mesh::TraceGrid;
use crate::traces::TraceField;

/// How the Schur complement is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SchurMethod {
    /// Sparse Cholesky of the free block, `S = K_dd − Wᵀ W` with
    /// `W = L⁻¹ P K_fd`.
    Cholesky,
    /// One conjugate-gradient harmonic extension per trace basis function.
    Cg,
}

#[derive(Clone, Debug)]
pub struct DtnOperator {
    schur: DMatrix<f64>,
    mass: BoundaryMass,
    grid: TraceGrid,
}

pub fn build(system: &FemSystem) -> Result<DtnOperator> {
    build_with(system, SchurMethod::Cholesky, elliptic::DEFAULT_TOL)
}

pub fn build_with(system: &FemSystem, method: SchurMethod, tol: f64) -> Result<DtnOperator> {
    let nd = system.num_trace();
    let mut s = match method {
        SchurMethod::Cholesky => schur_cholesky(system)?,
        SchurMethod::Cg => schur_cg(system, tol)?,
    };
    remove_kernel_drift(&mut s);
    let st = s.transpose();
    let schur = (s + st) * 0.5;
    debug_assert_eq!(schur.nrows(), nd);
    Ok(DtnOperator { schur, mass: system.boundary_mass.clone(), grid: system.grid.clone() })
}

fn schur_cholesky(system: &FemSystem) -> Result<DMatrix<f64>> {
    let nd = system.num_trace();
    let kff = system.k_ff();
    let kfd = system.k_fd();
    let nf = kff.nrows();
    let fac = EnvelopeCholesky::factor(kff)?;
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nd];
    for r in 0..nf {
        let (cols, vals) = kfd.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            columns[c].push((r, v));
        }
    }
    let w: Vec<Vec<f64>> = columns
        .par_iter()
        .map(|col| {
            let mut dense = vec![0.0; nf];
            for &(r, v) in col {
                dense[r] = v;
            }
            let mut y = fac.permute(&dense);
            fac.forward_in_place(&mut y);
            y
        })
        .collect();
    let kdd = system.k_dd();
    let rows: Vec<Vec<f64>> = (0..nd)
        .into_par_iter()
        .map(|i| (0..nd).map(|j| kdd.get(i, j) - linalg::dot(&w[i], &w[j])).collect())
        .collect();
    Ok(DMatrix::from_fn(nd, nd, |i, j| rows[i][j]))
}

fn schur_cg(system: &FemSystem, tol: f64) -> Result<DMatrix<f64>> {
    let nd = system.num_trace();
    let cols: Vec<Vec<f64>> = (0..nd)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; nd];
            e[j] = 1.0;
            let phi = elliptic::solve_mixed(system, &TraceField::new(e), tol)?;
            Ok(system.weak_normal_derivative(&phi))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(nd, nd, |i, j| cols[j][i]))
}

/// Projects `S ↦ P S P` with `P = I − 𝟙𝟙ᵀ/n`, removing the round-off part
/// of `S𝟙` while keeping symmetry and semi-definiteness.
fn remove_kernel_drift(s: &mut DMatrix<f64>) {
    let n = s.nrows();
    if n == 0 {
        return;
    }
    let nf = n as f64;
    let r: Vec<f64> = (0..n).map(|i| s.row(i).sum()).collect();
    let c: Vec<f64> = (0..n).map(|j| s.column(j).sum()).collect();
    let total: f64 = r.iter().sum();
    for j in 0..n {
        for i in 0..n {
            s[(i, j)] += -r[i] / nf - c[j] / nf + total / (nf * nf);
        }
    }
}

impl DtnOperator {
    /// Builds an operator from a dense matrix, mainly for tests.
    pub fn from_parts(schur: DMatrix<f64>, grid: TraceGrid) -> Result<DtnOperator> {
        check_len(grid.len(), schur.nrows())?;
        check_len(grid.len(), schur.ncols())?;
        Ok(DtnOperator { schur, mass: BoundaryMass::new(&grid), grid })
    }

    pub fn dim(&self) -> usize {
        self.schur.nrows()
    }

    pub fn grid(&self) -> &TraceGrid {
        &self.grid
    }

    pub fn mass(&self) -> &BoundaryMass {
        &self.mass
    }

    pub fn schur(&self) -> &DMatrix<f64> {
        &self.schur
    }

    /// `S ψ`.
    pub fn apply_schur(&self, psi: &[f64]) -> Vec<f64> {
        (&self.schur * DVector::from_column_slice(psi)).data.into()
    }

    /// `M⁻¹ S ψ`, the L² representative of the normal derivative.
    pub fn apply(&self, psi: &TraceField) -> TraceField {
        TraceField::new(self.mass.solve(&self.apply_schur(psi.values())))
    }

    /// `ψᵀ S ψ′`.
    pub fn form(&self, psi: &TraceField, psi2: &TraceField) -> Result<f64> {
        check_len(self.dim(), psi.len())?;
        check_len(self.dim(), psi2.len())?;
        Ok(linalg::dot(psi.values(), &self.apply_schur(psi2.values())))
    }

    pub fn energy(&self, psi: &TraceField) -> f64 {
        linalg::dot(psi.values(), &self.apply_schur(psi.values())).max(0.0)
    }

    /// Largest absolute entry of `S − Sᵀ` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        (&self.schur - self.schur.transpose()).amax() / self.schur.amax().max(f64::MIN_POSITIVE)
    }

    /// `max |S 𝟙|` relative to the largest entry.
    pub fn kernel_defect(&self) -> f64 {
        self.apply_schur(&vec![1.0; self.dim()]).iter().fold(0.0f64, |m, v| m.max(v.abs()))
            / self.schur.amax().max(f64::MIN_POSITIVE)
    }

    /// The `k` smallest generalized eigenpairs of `S v = λ M v` by Lanczos.
    pub fn spectrum(&self, k: usize) -> Result<Vec<Eigenpair>> {
        let n = self.dim();
        if k > n {
            return Err(Error::InvalidArgument(format!("requested {k} eigenpairs of a {n}-dimensional operator")));
        }
        let pairs = lanczos_generalized(
            n,
            |v| self.apply_schur(v),
            |v| self.mass.apply(v),
            |v| self.mass.solve(v),
            k,
            self.schur.amax(),
        )?;
        Ok(pairs)
    }

    /// The same eigenpairs by a dense reduction `L⁻¹ S L⁻ᵀ` with `M = L Lᵀ`.
    pub fn dense_spectrum(&self, k: usize) -> Result<Vec<Eigenpair>> {
        dense_generalized(&self.schur, &self.mass.to_dense(), k)
    }
}

pub fn dtn_form(op: &DtnOperator, psi: &TraceField, psi2: &TraceField) -> Result<f64> {
    op.form(psi, psi2)
}

pub fn dtn_apply(op: &DtnOperator, psi: &TraceField) -> Result<TraceField> {
    check_len(op.dim(), psi.len())?;
    Ok(op.apply(psi))
}

pub fn dtn_spectrum(op: &DtnOperator, k: usize) -> Result<Vec<Eigenpair>> {
    op.spectrum(k)
}

/// `k tanh(k h)`, the Dirichlet–Neumann symbol of a flat strip of depth `h`.
pub fn flat_strip_symbol(k: f64, depth: f64) -> f64 {
    k * (k * depth).tanh()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Eigenpair {
    pub lambda: f64,
    /// M-normalized eigenvector.
    pub vector: Vec<f64>,
    /// `‖S v − λ M v‖₂`.
    pub residual: f64,
}

fn fix_sign(v: &mut [f64]) {
    let imax = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a))).unwrap_or(0);
    if v.get(imax).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Lanczos for `S v = λ M v` in the M-inner product, run to full dimension
/// with full reorthogonalization and restarts on breakdown. `scale` is a
/// magnitude of `S` used for the residual check.
pub fn lanczos_generalized(
    n: usize,
    apply_s: impl Fn(&[f64]) -> Vec<f64>,
    apply_m: impl Fn(&[f64]) -> Vec<f64>,
    solve_m: impl Fn(&[f64]) -> Vec<f64>,
    k: usize,
    scale: f64,
) -> Result<Vec<Eigenpair>> {
    if n == 0 || k == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mq: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut alpha = Vec::with_capacity(n);
    let mut beta: Vec<f64> = Vec::with_capacity(n);
    let orthogonalize = |w: &mut Vec<f64>, q: &[Vec<f64>], mq: &[Vec<f64>]| {
        for _ in 0..2 {
            for (qi, mqi) in q.iter().zip(mq) {
                let c = linalg::dot(w, mqi);
                linalg::axpy(-c, qi, w);
            }
        }
    };
    let fresh = |rng: &mut ChaCha8Rng, q: &[Vec<f64>], mq: &[Vec<f64>]| -> Option<(Vec<f64>, Vec<f64>)> {
        for _ in 0..10 {
            let mut w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            orthogonalize(&mut w, q, mq);
            let mw = apply_m(&w);
            let nrm = linalg::dot(&w, &mw).max(0.0).sqrt();
            if nrm > 1e-8 {
                return Some((w.iter().map(|x| x / nrm).collect(), mw.iter().map(|x| x / nrm).collect()));
            }
        }
        None
    };
    let (v, mv) = fresh(&mut rng, &q, &mq).ok_or(Error::NotConverged { solver: "lanczos", iterations: 0, residual: f64::NAN })?;
    q.push(v);
    mq.push(mv);
    loop {
        let j = q.len() - 1;
        let sq = apply_s(&q[j]);
        let a = linalg::dot(&q[j], &sq);
        alpha.push(a);
        if q.len() == n {
            break;
        }
        let mut w = solve_m(&sq);
        orthogonalize(&mut w, &q, &mq);
        let mw = apply_m(&w);
        let b = linalg::dot(&w, &mw).max(0.0).sqrt();
        let bscale = a.abs().max(scale).max(f64::MIN_POSITIVE);
        if b > 1e-10 * bscale {
            beta.push(b);
            q.push(w.iter().map(|x| x / b).collect());
            mq.push(mw.iter().map(|x| x / b).collect());
        } else {
            let (v, mv) = fresh(&mut rng, &q, &mq)
                .ok_or(Error::NotConverged { solver: "lanczos", iterations: q.len(), residual: b })?;
            beta.push(0.0);
            q.push(v);
            mq.push(mv);
        }
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut out = Vec::with_capacity(k);
    let mut worst: f64 = 0.0;
    for &i in order.iter().take(k) {
        let y = eig.eigenvectors.column(i);
        let mut v = vec![0.0; n];
        for (r, qr) in q.iter().enumerate() {
            linalg::axpy(y[r], qr, &mut v);
        }
        fix_sign(&mut v);
        let lambda = eig.eigenvalues[i];
        let sv = apply_s(&v);
        let mv = apply_m(&v);
        let residual = sv.iter().zip(&mv).map(|(s, m)| (s - lambda * m).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(residual);
        out.push(Eigenpair { lambda, vector: v, residual });
    }
    if worst > 1e-8 * scale.max(f64::MIN_POSITIVE) * (n as f64).sqrt() {
        return Err(Error::NotConverged { solver: "lanczos", iterations: m, residual: worst });
    }
    Ok(out)
}

/// Dense generalized symmetric eigensolver used as a cross-check.
pub fn dense_generalized(s: &DMatrix<f64>, m: &DMatrix<f64>, k: usize) -> Result<Vec<Eigenpair>> {
    let n = s.nrows();
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite { pivot: 0, value: f64::NAN })?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(Error::NotPositiveDefinite { pivot: 0, value: 0.0 })?;
    let c = &linv * s * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| {
            let lambda = eig.eigenvalues[i];
            let mut v: Vec<f64> = (linv.transpose() * eig.eigenvectors.column(i)).iter().copied().collect();
            fix_sign(&mut v);
            let dv = DVector::from_column_slice(&v);
            let residual = (s * &dv - m * &dv * lambda).norm();
            Eigenpair { lambda, vector: v, residual }
        })
        .collect())
}
