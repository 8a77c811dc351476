//! The positive diagonal weight matrix `Q`, its per-level compressions
//! `Q_m = U_m^† Q^{⊗m} U_m`, density matrices `ρ^(m) = Q_m / Tr(Q_m)`, the
//! states `φ_m = Tr(ρ^(m) ·)` and their modular flow.
//!
//! Construction fails unless every fiber is invariant under `Q^{⊗m}`; that
//! invariance is what makes `Q_m` invertible and the whole quantization
//! machinery well posed.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::subproduct::SubproductSystem;
use crate::tensor::{c, cr, operator_norm, CMat, Word};

pub const DEFAULT_INVARIANCE_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
struct LevelWeights {
    q_m: CMat,
    q_m_inv: CMat,
    trace: f64,
    rho: CMat,
}

#[derive(Clone, Debug)]
pub struct WeightSystem {
    q: Vec<f64>,
    levels: Vec<LevelWeights>,
    invariance_residuals: Vec<f64>,
}

impl WeightSystem {
    /// Builds all per-level weight data for a diagonal `Q = diag(q)`.
    ///
    /// Fails with the offending level and relative residual if some fiber is
    /// not `Q^{⊗m}`-invariant, which signals that `Q` is incompatible with
    /// the system.
    pub fn build(system: &SubproductSystem, q: &[f64], tol: f64) -> Result<Self> {
        if tol <= 0.0 {
            return Err(Error::NonPositiveTol(tol));
        }
        if q.len() != system.n() {
            return Err(Error::ShapeMismatch {
                expected_rows: system.n(),
                expected_cols: 1,
                rows: q.len(),
                cols: 1,
            });
        }
        for &qi in q {
            if qi <= 0.0 {
                return Err(Error::Parse(format!("weights must be positive, got {qi}")));
            }
        }
        let n = system.n();
        let mut levels = Vec::with_capacity(system.m_max() + 1);
        let mut invariance_residuals = Vec::with_capacity(system.m_max() + 1);
        for m in 0..=system.m_max() {
            let um = system.isometry(m);
            let ambient = um.nrows();
            // D U_m with D = Q^{⊗m} diagonal in the word basis
            let mut dum = um.clone();
            let mut max_weight = 0.0f64;
            for row in 0..ambient {
                let w = Word::from_index(row, n, m);
                let weight = word_weight(q, &w);
                max_weight = max_weight.max(weight);
                for col in 0..dum.ncols() {
                    dum[(row, col)] *= cr(weight);
                }
            }
            let q_m = um.adjoint() * &dum;
            // invariance: (1 - p_m) Q^{⊗m} U_m = D U_m - U_m Q_m
            let resid_mat = &dum - um * &q_m;
            let residual = operator_norm(&resid_mat) / max_weight.max(f64::MIN_POSITIVE);
            invariance_residuals.push(residual);
            if residual > tol {
                return Err(Error::WeightInvariance { m, residual, tol });
            }
            let d = q_m.ncols();
            let trace: f64 = (0..d).map(|i| q_m[(i, i)].re).sum();
            let q_m_inv = if d == 0 {
                CMat::zeros(0, 0)
            } else {
                q_m.clone().try_inverse().ok_or(Error::WeightInvariance {
                    m,
                    residual: f64::INFINITY,
                    tol,
                })?
            };
            let inv_check = operator_norm(&(&q_m * &q_m_inv - CMat::identity(d, d)));
            if d > 0 && inv_check > 1e-10 {
                return Err(Error::WeightInvariance { m, residual: inv_check, tol });
            }
            let rho = if trace > 0.0 { q_m.scale(1.0 / trace) } else { q_m.clone() };
            levels.push(LevelWeights { q_m, q_m_inv, trace, rho });
        }
        Ok(WeightSystem { q: q.to_vec(), levels, invariance_residuals })
    }

    /// All-ones weights for a system (the tracial case).
    pub fn flat(system: &SubproductSystem) -> Self {
        Self::build(system, &vec![1.0; system.n()], DEFAULT_INVARIANCE_TOL)
            .expect("flat weights are always invariant")
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn m_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn q_m(&self, m: usize) -> &CMat {
        &self.levels[m].q_m
    }

    pub fn q_m_inv(&self, m: usize) -> &CMat {
        &self.levels[m].q_m_inv
    }

    pub fn trace(&self, m: usize) -> f64 {
        self.levels[m].trace
    }

    pub fn rho(&self, m: usize) -> &CMat {
        &self.levels[m].rho
    }

    pub fn invariance_residuals(&self) -> &[f64] {
        &self.invariance_residuals
    }

    /// `(Q^{⊗m})_{w,w} = Π_i q_{w_i}`, exact by diagonality.
    pub fn word_weight(&self, w: &Word) -> f64 {
        word_weight(&self.q, w)
    }

    /// The state `φ_m(A) = Tr(ρ^(m) A)`.
    pub fn phi(&self, m: usize, a: &CMat) -> Result<Complex64> {
        let d = self.levels[m].rho.nrows();
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::ShapeMismatch {
                expected_rows: d,
                expected_cols: d,
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let mut tr = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                tr += self.levels[m].rho[(i, k)] * a[(k, i)];
            }
        }
        Ok(tr)
    }

    /// Modular flow `σ_t(A) = Q_m^{it} A Q_m^{-it}`.
    pub fn modular_conjugate(&self, m: usize, a: &CMat, t: f64) -> Result<CMat> {
        let d = self.levels[m].q_m.nrows();
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::ShapeMismatch {
                expected_rows: d,
                expected_cols: d,
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if d == 0 {
            return Ok(a.clone());
        }
        let eig = self.levels[m].q_m.clone().symmetric_eigen();
        let phases: Vec<Complex64> = eig
            .eigenvalues
            .iter()
            .map(|&lambda| c(0.0, t * lambda.max(f64::MIN_POSITIVE).ln()).exp())
            .collect();
        let v = &eig.eigenvectors;
        let mut qit = CMat::zeros(d, d);
        let mut qmit = CMat::zeros(d, d);
        for j in 0..d {
            for i in 0..d {
                qit[(i, j)] = v[(i, j)] * phases[j];
                qmit[(i, j)] = v[(i, j)] * phases[j].conj();
            }
        }
        let qit = qit * v.adjoint();
        let qmit = qmit * v.adjoint();
        Ok(&qit * a * &qmit)
    }

    /// Smallest eigenvalue of `ρ^(m)`; a per-level heuristic for whether the
    /// limit state could be faithful (never certified at finite truncation).
    pub fn min_rho_eigenvalue(&self, m: usize) -> f64 {
        let rho = &self.levels[m].rho;
        if rho.nrows() == 0 {
            return 0.0;
        }
        rho.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn word_weight(q: &[f64], w: &Word) -> f64 {
    w.letters().iter().map(|&l| q[l as usize - 1]).product()
}
