//! Brute-force oracles used by the integration suites.
//!
//! The symmetric two-variable system has a closed-form weighted-shift model
//! on the multiset basis `u_a`, `a = 0..=m` (`a` counts occurrences of the
//! first letter):
//!
//! ```text
//! S_1 u_a^{(m)} = sqrt((a+1)/(m+1))   u_{a+1}^{(m+1)}
//! S_2 u_a^{(m)} = sqrt((m+1-a)/(m+1)) u_a^{(m+1)}
//! ```
//!
//! Everything here is computed from these formulas and the tracial state
//! alone, with none of the tensor-compression machinery of the library, so
//! agreement is a genuine two-route check.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type Mat = DMatrix<Complex64>;

fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Closed-form block of `S_k : H_m -> H_{m+1}` for the symmetric system on
/// two letters.
pub fn sym2_shift(k: u8, m: usize) -> Mat {
    let mut b = Mat::zeros(m + 2, m + 1);
    for a in 0..=m {
        match k {
            1 => b[(a + 1, a)] = cr(((a + 1) as f64 / (m + 1) as f64).sqrt()),
            2 => b[(a, a)] = cr(((m + 1 - a) as f64 / (m + 1) as f64).sqrt()),
            _ => unreachable!("two letters"),
        }
    }
    b
}

/// Word shift `S_w : H_m -> H_{m+|w|}` as the composition of single shifts.
pub fn sym2_word_shift(word: &[u8], m: usize) -> Mat {
    let mut out = Mat::identity(m + 1, m + 1);
    for (level, &letter) in (m..).zip(word.iter().rev()) {
        out = sym2_shift(letter, level) * out;
    }
    out
}

/// All words of a given length over `{1, 2}`.
pub fn words2(len: usize) -> Vec<Vec<u8>> {
    (0..1usize << len)
        .map(|mask| (0..len).map(|i| if mask >> i & 1 == 0 { 1u8 } else { 2 }).collect())
        .collect()
}

/// Largest singular value via the Gram eigenvalues (nalgebra's Hermitian
/// path, accurate on degenerate spectra).
pub fn norm(a: &Mat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let gram = if a.ncols() <= a.nrows() { a.adjoint() * a } else { a * a.adjoint() };
    gram.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
        .max(0.0)
        .sqrt()
}

/// Tracial state at level `m` (flat weights): `Tr(X)/(m+1)`.
pub fn phi(x: &Mat) -> Complex64 {
    let d = x.nrows();
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..d {
        tr += x[(i, i)];
    }
    tr / cr(d as f64)
}

/// `ι_{m,l}(A) = Σ_{|r|=l-m} S_r A S_r^*` (for the symmetric system the
/// right shifts coincide with the left shifts).
pub fn sym2_iota(a: &Mat, m: usize, l: usize) -> Mat {
    let mut out = Mat::zeros(l + 1, l + 1);
    for w in words2(l - m) {
        let s = sym2_word_shift(&w, m);
        out += &s * a * s.adjoint();
    }
    out
}

/// `ȷ_{l,m}(A) = ((m+1)/(l+1)) Σ_{|r|=l-m} S_r^* A S_r` with flat weights.
pub fn sym2_jmath(a: &Mat, l: usize, m: usize) -> Mat {
    let mut out = Mat::zeros(m + 1, m + 1);
    for w in words2(l - m) {
        let s = sym2_word_shift(&w, m);
        out += s.adjoint() * a * s;
    }
    out * cr((m + 1) as f64 / (l + 1) as f64)
}

/// Representative block at level `l` of a normally ordered sum of terms
/// `(coeff, creation word, annihilation word)` of common degree zero.
pub fn sym2_rep_block(terms: &[(Complex64, Vec<u8>, Vec<u8>)], l: usize) -> Mat {
    let mut out = Mat::zeros(l + 1, l + 1);
    for (coeff, creation, annihilation) in terms {
        if l < annihilation.len() {
            continue;
        }
        let base = l - annihilation.len();
        let up = sym2_word_shift(creation, base);
        let down = sym2_word_shift(annihilation, base);
        out += (up * down.adjoint()) * *coeff;
    }
    out
}

/// Limit-state value of a degree-0 representative evaluated at a fixed
/// level: `φ_L(X_L)`.
pub fn sym2_omega_at(terms: &[(Complex64, Vec<u8>, Vec<u8>)], level: usize) -> Complex64 {
    phi(&sym2_rep_block(terms, level))
}

/// Contravariant symbol at level `m` of a degree-0 representative given by
/// its blocks, with all limit-state values evaluated at `eval_level`:
///
/// `ς̆^{(m)} = (m+1) Σ_{|j|=|k|=m} φ_L(S_j S_k^* F_L) S_k S_j^* |_{H_m}`.
pub fn sym2_contravariant(
    block_at: &dyn Fn(usize) -> Mat,
    m: usize,
    eval_level: usize,
) -> Mat {
    let d = m + 1;
    let mut out = Mat::zeros(d, d);
    let f_block = block_at(eval_level);
    for j in words2(m) {
        let sj = sym2_word_shift(&j, eval_level - m);
        // S_k S_j^*|_{H_m} = (S_k from vacuum)(S_j from vacuum)^*
        let vj = sym2_word_shift(&j, 0);
        for k in words2(m) {
            let sk = sym2_word_shift(&k, eval_level - m);
            let omega = phi(&(&sj * sk.adjoint() * &f_block));
            let vk = sym2_word_shift(&k, 0);
            out += (&vk * vj.adjoint()) * (omega * cr(d as f64));
        }
    }
    out
}
