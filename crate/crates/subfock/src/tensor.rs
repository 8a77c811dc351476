//! Dense complex linear algebra substrate: words over a finite alphabet and
//! their basis indexing, Kronecker products, orthonormal complements and
//! operator norms.
//!
//! The basis of the `m`-fold tensor power of `C^n` is ordered by the
//! positional code of the word labelling each product basis vector: the word
//! `w = w_1 ... w_m` (letters in `1..=n`) sits at index
//! `sum_i (w_i - 1) * n^(m-1-i)`. Every module in this crate relies on that
//! single ordering, which makes [`kron`] and [`Word::index`] mutually
//! consistent without permutations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Largest number of entries a dense matrix produced by [`kron`] may have.
pub const DENSE_ENTRY_CAP: usize = 1 << 27;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A finite multi-index in the free semigroup on `n` letters.
///
/// Letters are `1..=n`; the empty word is the semigroup unit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds a word, validating every letter against the alphabet size.
    pub fn new(letters: impl Into<Vec<u8>>, n: usize) -> Result<Self> {
        let letters = letters.into();
        for &l in &letters {
            if l == 0 || l as usize > n {
                return Err(Error::LetterOutOfRange { letter: l as usize, n });
            }
        }
        Ok(Word(letters))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&mut self, letter: u8) {
        self.0.push(letter);
    }

    /// The sorted (multiset representative) form of the word.
    pub fn sorted(&self) -> Word {
        let mut v = self.0.clone();
        v.sort_unstable();
        Word(v)
    }

    pub fn is_sorted(&self) -> bool {
        self.0.windows(2).all(|p| p[0] <= p[1])
    }

    /// Positional code of the product basis vector `e_w` inside `H^{⊗|w|}`.
    pub fn index(&self, n: usize) -> usize {
        let mut idx = 0usize;
        for &l in &self.0 {
            idx = idx * n + (l as usize - 1);
        }
        idx
    }

    /// Inverse of [`Word::index`] on the length-`m` class.
    pub fn from_index(mut idx: usize, n: usize, m: usize) -> Word {
        let mut letters = vec![0u8; m];
        for i in (0..m).rev() {
            letters[i] = (idx % n) as u8 + 1;
            idx /= n;
        }
        Word(letters)
    }

    /// All distinct rearrangements of this word (its permutation orbit).
    pub fn orbit(&self) -> Vec<Word> {
        let sorted = self.sorted();
        let mut out = Vec::new();
        let mut current = sorted.0.clone();
        loop {
            out.push(Word(current.clone()));
            // next multiset permutation, lexicographic
            let Some(i) = (0..current.len().saturating_sub(1))
                .rev()
                .find(|&i| current[i] < current[i + 1])
            else {
                break;
            };
            let j = (i + 1..current.len())
                .rev()
                .find(|&j| current[j] > current[i])
                .unwrap();
            current.swap(i, j);
            current[i + 1..].reverse();
        }
        out
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "()");
        }
        let s: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", s.join(""))
    }
}

/// All words of length `m` over `1..=n`, in positional-code order.
pub fn words_of_length(n: usize, m: usize) -> Vec<Word> {
    let count = n.pow(m as u32);
    (0..count).map(|i| Word::from_index(i, n, m)).collect()
}

/// Sorted-word (multiset) representatives of length `m`, lexicographically.
pub fn sorted_words_of_length(n: usize, m: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut stack: Vec<(Word, u8)> = vec![(Word::empty(), 1)];
    while let Some((w, min)) = stack.pop() {
        if w.len() == m {
            out.push(w);
            continue;
        }
        for l in (min..=n as u8).rev() {
            let mut next = w.clone();
            next.push(l);
            stack.push((next, l));
        }
    }
    out
}

/// The `i`-th standard basis vector of `C^dim`.
pub fn basis_vector(dim: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[i] = cr(1.0);
    v
}

/// The product basis vector `e_w` of `H^{⊗|w|}` with `dim H = n`.
pub fn word_vector(w: &Word, n: usize) -> CVec {
    basis_vector(n.pow(w.len() as u32), w.index(n))
}

/// Kronecker product consistent with the positional word order:
/// `(A⊗B)[(i·rB+k),(j·cB+l)] = A[i,j]·B[k,l]`.
pub fn kron(a: &CMat, b: &CMat) -> Result<CMat> {
    let rows = a
        .nrows()
        .checked_mul(b.nrows())
        .ok_or(Error::SizeCap { rows: usize::MAX, cols: 0, cap: DENSE_ENTRY_CAP })?;
    let cols = a
        .ncols()
        .checked_mul(b.ncols())
        .ok_or(Error::SizeCap { rows, cols: usize::MAX, cap: DENSE_ENTRY_CAP })?;
    if rows.saturating_mul(cols) > DENSE_ENTRY_CAP {
        return Err(Error::SizeCap { rows, cols, cap: DENSE_ENTRY_CAP });
    }
    Ok(a.kronecker(b))
}

/// Largest singular value.
///
/// Computed as `sqrt(lambda_max(A^†A))` through a Hermitian eigensolve of the
/// smaller Gram matrix. The bidiagonal SVD is avoided here: on matrices with
/// tightly clustered singular values (exact isometries, projections) it can
/// misreport the top cluster, while the tridiagonal Hermitian path stays at
/// machine precision.
pub fn operator_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    if a.nrows() == 1 && a.ncols() == 1 {
        return a[(0, 0)].norm();
    }
    let gram = if a.ncols() <= a.nrows() {
        a.adjoint() * a
    } else {
        a * a.adjoint()
    };
    let lambda_max = gram
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    lambda_max.max(0.0).sqrt()
}

/// Eigenvalues of the Hermitian matrix `A^†A` (the squared singular values
/// of `A`), unsorted.
pub fn gram_eigenvalues(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let gram = a.adjoint() * a;
    gram.symmetric_eigen().eigenvalues.iter().cloned().collect()
}

/// Number of singular values above `tol * sigma_max`.
pub fn numerical_rank(a: &CMat, tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Isometry whose columns form an orthonormal basis of the orthogonal
/// complement of `span(spanning)` inside `C^ambient_dim`.
///
/// Rank decisions use the relative singular-value threshold
/// `tol * sigma_max`. The returned matrix has `ambient_dim - rank` columns.
///
/// The basis itself is produced by pivoted Gram–Schmidt with
/// reorthogonalization: first an orthonormal basis of the span (exactly
/// `rank` vectors), then a completion seeded by the standard basis. This
/// keeps the construction exact on the degenerate spectra that trip up the
/// bidiagonal SVD.
pub fn orthonormal_complement(spanning: &[CVec], ambient_dim: usize, tol: f64) -> Result<CMat> {
    if tol <= 0.0 {
        return Err(Error::NonPositiveTol(tol));
    }
    if spanning.is_empty() {
        return Ok(CMat::identity(ambient_dim, ambient_dim));
    }
    for v in spanning {
        if v.len() != ambient_dim {
            return Err(Error::ShapeMismatch {
                expected_rows: ambient_dim,
                expected_cols: 1,
                rows: v.len(),
                cols: 1,
            });
        }
    }
    let s = CMat::from_columns(spanning);
    let rank = numerical_rank(&s, tol);
    if rank >= ambient_dim {
        return Ok(CMat::zeros(ambient_dim, 0));
    }
    let mut basis: Vec<CVec> = Vec::with_capacity(ambient_dim);
    // orthonormal basis of the span, then a completion seeded by the
    // standard basis; pool residuals are updated incrementally
    grow_basis(&mut basis, spanning.to_vec(), rank);
    let seeds: Vec<CVec> = (0..ambient_dim).map(|i| basis_vector(ambient_dim, i)).collect();
    grow_basis(&mut basis, seeds, ambient_dim);
    Ok(CMat::from_columns(&basis[rank..]))
}

/// Two-pass Gram–Schmidt orthogonalization of `v` against an orthonormal set.
fn orthogonalize(v: &CVec, basis: &[CVec]) -> CVec {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let coeff = b.dotc(&r);
            r -= b * coeff;
        }
    }
    r
}

/// Pivoted modified Gram–Schmidt: extends `basis` to `target` orthonormal
/// vectors by repeatedly accepting the pool vector with the largest residual.
/// Pool residuals are orthogonalized incrementally; each accepted vector gets
/// one full reorthogonalization pass before normalization.
fn grow_basis(basis: &mut Vec<CVec>, pool: Vec<CVec>, target: usize) {
    let mut residuals: Vec<CVec> = pool.iter().map(|v| orthogonalize(v, basis)).collect();
    while basis.len() < target {
        let (best_at, best) = residuals
            .iter()
            .map(|r| r.norm())
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("pool exhausted below the requested basis size");
        let accepted = orthogonalize(&residuals[best_at], basis);
        let norm = accepted.norm();
        debug_assert!(norm > 0.0 && best > 0.0, "degenerate pivot in grow_basis");
        let b = accepted.unscale(norm);
        residuals.swap_remove(best_at);
        for r in &mut residuals {
            let coeff = b.dotc(&*r);
            *r -= &b * coeff;
        }
        basis.push(b);
    }
}

/// Frobenius norm; an upper bound for the operator norm.
pub fn frobenius_norm(a: &CMat) -> f64 {
    a.norm()
}

/// Column-stacks a list of equal-height matrices.
pub fn hstack(blocks: &[CMat]) -> CMat {
    assert!(!blocks.is_empty());
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    out
}
