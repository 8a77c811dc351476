//! The quantization maps of a weighted subproduct system: the inductive
//! connecting maps `ι` (and the chirality-flipped `ῑ`), the projective maps
//! `ȷ` and `ȷ̄` adjoint to them, the implementing isometries `V`/`V̄`,
//! covariant and contravariant symbols, the limit state, and the Berezin
//! transform, together with their graded (nonzero gauge degree) variants.
//!
//! Conventions. Operator blocks live in the compressed coordinates of the
//! fiber isometries `U_m`. The weighted inner products enter in two places
//! only: the states `φ_m` and the isometries `V`/`V̄`, whose matrices are
//! returned in coordinates orthonormal for those weighted inner products so
//! that the isometry contracts read literally off the conjugate transpose.
//! The limit state is evaluated at one shared top level per element; that is
//! what makes the contravariant symbols exactly `ȷ`-constant at truncation.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{rword_shift, word_shift, GradedOperator};
use crate::subproduct::SubproductSystem;
use crate::tensor::{c, cr, hstack, kron, words_of_length, CMat, Word};
use crate::weights::WeightSystem;

/// `ι_{m,l}(A) = p_l (A ⊗ 1) p_l`, computed through the right-shift sum
/// `Σ_{|r|=l-m} R_r A R_r^*`.
pub fn iota(system: &SubproductSystem, a: &CMat, m: usize, l: usize) -> Result<CMat> {
    graded_iota(system, a, m, l, 0)
}

/// `ι_{m,l}` through the direct compression `U_l^† (A_amb ⊗ 1) U_l`; the
/// independent route used to cross-check the shift-sum formula.
pub fn iota_compression(system: &SubproductSystem, a: &CMat, m: usize, l: usize) -> Result<CMat> {
    check_square(system, a, m)?;
    system.check_level(l)?;
    if m > l {
        return Err(Error::LevelOutOfRange { level: m, max: l });
    }
    let um = system.isometry(m);
    let ul = system.isometry(l);
    let amb = um * a * um.adjoint();
    let (rows_m, rows_rest) = (um.nrows(), system.isometry(l - m).nrows());
    let mut out = CMat::zeros(system.dim(l), system.dim(l));
    for col in 0..system.dim(l) {
        // (A_amb ⊗ 1) acts on the first tensor leg of each U_l column
        let x = CMat::from_fn(rows_m, rows_rest, |i, j| ul[(i * rows_rest + j, col)]);
        let y = &amb * x;
        let mut transformed = CMat::zeros(ul.nrows(), 1);
        for i in 0..rows_m {
            for j in 0..rows_rest {
                transformed[(i * rows_rest + j, 0)] = y[(i, j)];
            }
        }
        out.set_column(col, &(ul.adjoint() * transformed).column(0));
    }
    Ok(out)
}

/// `ῑ_{m,l}(A) = Σ_{|s|=l-m} S_s A S_s^*`, the chirality-flipped inductive
/// map.
pub fn iota_bar(system: &SubproductSystem, a: &CMat, m: usize, l: usize) -> Result<CMat> {
    check_square(system, a, m)?;
    system.check_level(l)?;
    if m > l {
        return Err(Error::LevelOutOfRange { level: m, max: l });
    }
    let mut out = CMat::zeros(system.dim(l), system.dim(l));
    for w in words_of_length(system.n(), l - m) {
        let sw = word_shift(system, &w, m)?;
        out += &sw * a * sw.adjoint();
    }
    Ok(out)
}

/// `ῑ_{m,l}` through the compression `U_l^† (1 ⊗ A_amb) U_l`.
pub fn iota_bar_compression(
    system: &SubproductSystem,
    a: &CMat,
    m: usize,
    l: usize,
) -> Result<CMat> {
    check_square(system, a, m)?;
    system.check_level(l)?;
    if m > l {
        return Err(Error::LevelOutOfRange { level: m, max: l });
    }
    let um = system.isometry(m);
    let ul = system.isometry(l);
    let amb = um * a * um.adjoint();
    let amb_t = amb.transpose();
    let (rows_rest, rows_m) = (system.isometry(l - m).nrows(), um.nrows());
    let mut out = CMat::zeros(system.dim(l), system.dim(l));
    for col in 0..system.dim(l) {
        // (1 ⊗ A_amb): reshape with the untouched leg first
        let x = CMat::from_fn(rows_rest, rows_m, |i, j| ul[(i * rows_m + j, col)]);
        let y = &x * &amb_t;
        let mut transformed = CMat::zeros(ul.nrows(), 1);
        for i in 0..rows_rest {
            for j in 0..rows_m {
                transformed[(i * rows_m + j, 0)] = y[(i, j)];
            }
        }
        out.set_column(col, &(ul.adjoint() * transformed).column(0));
    }
    Ok(out)
}

/// Degree-`k` inductive map `ι^{(k)}_{m,l}(X) = Σ_{|r|=l-m} R_r X R_r^*`
/// applied to a block `X : H_m -> H_{m+k}`.
pub fn graded_iota(
    system: &SubproductSystem,
    x: &CMat,
    m: usize,
    l: usize,
    k: i64,
) -> Result<CMat> {
    check_block(system, x, m, k)?;
    if m > l {
        return Err(Error::LevelOutOfRange { level: m, max: l });
    }
    let top = l as i64 + k;
    if top < 0 || top > system.m_max() as i64 {
        return Err(Error::LevelOutOfRange { level: l, max: system.m_max() });
    }
    let mk = (m as i64 + k) as usize;
    let mut out = CMat::zeros(system.dim(top as usize), system.dim(l));
    for w in words_of_length(system.n(), l - m) {
        let r_in = rword_shift(system, &w, m)?;
        let r_out = rword_shift(system, &w, mk)?;
        out += r_out * x * r_in.adjoint();
    }
    Ok(out)
}

/// The projective map `ȷ_{l,m}(A) = (Tr Q_m / Tr Q_l) Σ_{|r|=l-m} w_r R_r^* A R_r`
/// with the diagonal weight `w_r = Π_i q_{r_i}`; the adjoint of `ι_{m,l}`
/// for the states `φ`.
pub fn jmath(
    system: &SubproductSystem,
    ws: &WeightSystem,
    a: &CMat,
    l: usize,
    m: usize,
) -> Result<CMat> {
    graded_jmath(system, ws, a, l, m, 0)
}

/// Degree-`k` projective map applied to a block `X : H_l -> H_{l+k}`.
pub fn graded_jmath(
    system: &SubproductSystem,
    ws: &WeightSystem,
    x: &CMat,
    l: usize,
    m: usize,
    k: i64,
) -> Result<CMat> {
    check_block(system, x, l, k)?;
    if m > l {
        return Err(Error::LevelOutOfRange { level: m, max: l });
    }
    let mk = m as i64 + k;
    if mk < 0 {
        return Err(Error::LevelOutOfRange { level: m, max: system.m_max() });
    }
    let mk = mk as usize;
    let lk = (l as i64 + k) as usize;
    let scale = ws.trace(m) / ws.trace(l);
    let mut out = CMat::zeros(system.dim(mk), system.dim(m));
    for w in words_of_length(system.n(), l - m) {
        let weight = cr(scale * ws.word_weight(&w));
        let r_in = rword_shift(system, &w, m)?;
        let r_out = rword_shift(system, &w, mk)?;
        // r_out : H_{m+k} -> H_{l+k}, x : H_l -> H_{l+k}, r_in : H_m -> H_l
        debug_assert_eq!(r_out.nrows(), system.dim(lk));
        out += (r_out.adjoint() * x * r_in) * weight;
    }
    Ok(out)
}

/// `ȷ̄_{l,m}(A) = (Tr Q_m / Tr Q_l) Σ_{|r|=l-m} w_r S_r^* A S_r`, the adjoint
/// of `ῑ_{m,l}`.
pub fn jmath_bar(
    system: &SubproductSystem,
    ws: &WeightSystem,
    a: &CMat,
    l: usize,
    m: usize,
) -> Result<CMat> {
    check_square(system, a, l)?;
    if m > l {
        return Err(Error::LevelOutOfRange { level: m, max: l });
    }
    let scale = ws.trace(m) / ws.trace(l);
    let mut out = CMat::zeros(system.dim(m), system.dim(m));
    for w in words_of_length(system.n(), l - m) {
        let weight = cr(scale * ws.word_weight(&w));
        let sw = word_shift(system, &w, m)?;
        out += (sw.adjoint() * a * &sw) * weight;
    }
    Ok(out)
}

/// `ȷ_{l,m}` as the weighted partial trace `(id ⊗ φ_{l-m})(V A V^*)`; the
/// cross-check route through the isometry.
///
/// In flat compressed coordinates the isometry is `V = λ W^†` with
/// `W = U_l^†(U_m ⊗ U_{l-m})`, and tracing the second leg against
/// `ρ^{(l-m)}` collapses the word sum because
/// `Σ_{|r|=l-m} w_r (U_{l-m}^† e_r)(U_{l-m}^† e_r)^† = Q_{l-m}`.
pub fn jmath_partial_trace(
    system: &SubproductSystem,
    ws: &WeightSystem,
    a: &CMat,
    l: usize,
    m: usize,
) -> Result<CMat> {
    check_square(system, a, l)?;
    if m > l {
        return Err(Error::LevelOutOfRange { level: m, max: l });
    }
    let r = l - m;
    let w = system.split_compression(m, r);
    let lambda_sq = ws.trace(m) * ws.trace(r) / ws.trace(l);
    let big = (w.adjoint() * a * &w) * cr(lambda_sq);
    let (dm, dr) = (system.dim(m), system.dim(r));
    let rho_r = ws.rho(r);
    let mut out = CMat::zeros(dm, dm);
    for i in 0..dm {
        for j in 0..dm {
            let mut acc = Complex64::new(0.0, 0.0);
            for aa in 0..dr {
                for bb in 0..dr {
                    acc += big[(i * dr + aa, j * dr + bb)] * rho_r[(bb, aa)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// An isometry between weighted fibers, in coordinates orthonormal for the
/// weighted inner products, together with the scalar prefactor
/// `sqrt(Tr Q_m · Tr Q_{l-m} / Tr Q_l)` from its defining formula.
#[derive(Clone, Debug)]
pub struct WeightedIsometry {
    pub matrix: CMat,
    pub prefactor: f64,
}

struct WeightedRoot {
    root: CMat,
    inv_root: CMat,
}

/// Square root and inverse square root of the density matrix `ρ^(m)`;
/// transforms between flat compressed coordinates and coordinates
/// orthonormal for the `ρ^(m)`-inner product.
fn weighted_root(ws: &WeightSystem, m: usize) -> Result<WeightedRoot> {
    let rho = ws.rho(m);
    let d = rho.nrows();
    if d == 0 {
        return Ok(WeightedRoot { root: CMat::zeros(0, 0), inv_root: CMat::zeros(0, 0) });
    }
    let eig = rho.clone().symmetric_eigen();
    let mut root = CMat::zeros(d, d);
    let mut inv_root = CMat::zeros(d, d);
    for j in 0..d {
        let lambda = eig.eigenvalues[j].max(0.0);
        let s = lambda.sqrt();
        if s <= 0.0 {
            return Err(Error::WeightInvariance { m, residual: f64::INFINITY, tol: 0.0 });
        }
        for i in 0..d {
            root[(i, j)] = eig.eigenvectors[(i, j)] * cr(s);
            inv_root[(i, j)] = eig.eigenvectors[(i, j)] * cr(1.0 / s);
        }
    }
    Ok(WeightedRoot {
        root: &root * eig.eigenvectors.adjoint(),
        inv_root: &inv_root * eig.eigenvectors.adjoint(),
    })
}

/// The isometry `V_{m,l} : H_l -> H_m ⊗ H_{l-m}` implementing `ι_{m,l}`.
///
/// In flat coordinates `V = λ (U_m ⊗ U_{l-m})^† U_l`; returned in weighted
/// orthonormal coordinates, where `V^†V = 1` and `VV^†` is the matrix of
/// `p_l (p_m ⊗ p_{l-m})`.
pub fn isometry_v(
    system: &SubproductSystem,
    ws: &WeightSystem,
    m: usize,
    l: usize,
) -> Result<WeightedIsometry> {
    system.check_level(l)?;
    if m > l {
        return Err(Error::LevelOutOfRange { level: m, max: l });
    }
    let r = l - m;
    let prefactor = (ws.trace(m) * ws.trace(r) / ws.trace(l)).sqrt();
    let flat = system.split_compression(m, r).adjoint() * cr(prefactor);
    let gm = weighted_root(ws, m)?;
    let gr = weighted_root(ws, r)?;
    let gl = weighted_root(ws, l)?;
    let left = kron(&gm.root, &gr.root)?;
    Ok(WeightedIsometry { matrix: left * flat * gl.inv_root, prefactor })
}

/// The mirrored isometry `V̄_{m,l} : H_l -> H_{l-m} ⊗ H_m`; same contracts
/// with the legs swapped.
pub fn isometry_vbar(
    system: &SubproductSystem,
    ws: &WeightSystem,
    m: usize,
    l: usize,
) -> Result<WeightedIsometry> {
    system.check_level(l)?;
    if m > l {
        return Err(Error::LevelOutOfRange { level: m, max: l });
    }
    let r = l - m;
    let prefactor = (ws.trace(m) * ws.trace(r) / ws.trace(l)).sqrt();
    let flat = system.split_compression(r, m).adjoint() * cr(prefactor);
    let gm = weighted_root(ws, m)?;
    let gr = weighted_root(ws, r)?;
    let gl = weighted_root(ws, l)?;
    let left = kron(&gr.root, &gm.root)?;
    Ok(WeightedIsometry { matrix: left * flat * gl.inv_root, prefactor })
}

/// Matrix of the final projection `p_{m+r} (p_m ⊗ p_r)` on `H_m ⊗ H_r`, in
/// the same weighted orthonormal coordinates as the isometries.
pub fn final_projection(
    system: &SubproductSystem,
    ws: &WeightSystem,
    m: usize,
    r: usize,
) -> Result<CMat> {
    system.check_level(m + r)?;
    let w = system.split_compression(m, r);
    let flat = w.adjoint() * &w;
    let gm = weighted_root(ws, m)?;
    let gr = weighted_root(ws, r)?;
    let root = kron(&gm.root, &gr.root)?;
    let inv_root = kron(&gm.inv_root, &gr.inv_root)?;
    Ok(root * flat * inv_root)
}

/// Covariant symbol of `A ∈ B(H_m)`: the degree-0 graded operator whose
/// level-`l` block is `Σ_{j,k} A_{j,k} S_j S_k^* |_{H_l}` for `l >= m`,
/// with `A_{j,k}` the word-frame coefficients of `A`.
pub fn covariant_symbol(
    system: &Arc<SubproductSystem>,
    a: &CMat,
    m: usize,
) -> Result<GradedOperator> {
    check_square(system, a, m)?;
    let um = system.isometry(m);
    let amb = um * a * um.adjoint();
    let mut blocks = BTreeMap::new();
    for l in m..=system.m_max() {
        let stack: Vec<CMat> = words_of_length(system.n(), m)
            .iter()
            .map(|w| word_shift(system, w, l - m))
            .collect::<Result<_>>()?;
        let t = hstack(&stack);
        let middle = kron(&amb, &CMat::identity(system.dim(l - m), system.dim(l - m)))?;
        blocks.insert(l, &t * middle * t.adjoint());
    }
    GradedOperator::from_blocks(system.clone(), 0, blocks, format!("cov(level {m})"))
}

/// Degree-`k` covariant symbol of a block `X : H_m -> H_{m+k}`: blocks
/// `ι^{(k)}_{m,l}(X)` for `l >= m`.
pub fn graded_symbol(
    system: &Arc<SubproductSystem>,
    x: &CMat,
    m: usize,
    k: i64,
) -> Result<GradedOperator> {
    check_block(system, x, m, k)?;
    let top = if k >= 0 {
        system.m_max() - k as usize
    } else {
        system.m_max()
    };
    let mut blocks = BTreeMap::new();
    for l in m..=top {
        blocks.insert(l, graded_iota(system, x, m, l, k)?);
    }
    GradedOperator::from_blocks(system.clone(), k, blocks, format!("cov_{k}(level {m})"))
}

/// One normally ordered term `coeff · Z_j Z_k^*`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoTerm {
    pub coeff: Complex64,
    pub creation: Word,
    pub annihilation: Word,
}

/// A finite sum of normally ordered monomials of a common gauge degree
/// `|j| - |k|`; the symbolic representation of elements of the boundary
/// algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalOrderedElement {
    n: usize,
    degree: i64,
    terms: Vec<NoTerm>,
}

impl NormalOrderedElement {
    pub fn one(n: usize) -> Self {
        NormalOrderedElement {
            n,
            degree: 0,
            terms: vec![NoTerm {
                coeff: cr(1.0),
                creation: Word::empty(),
                annihilation: Word::empty(),
            }],
        }
    }

    pub fn from_terms(n: usize, terms: Vec<NoTerm>) -> Result<Self> {
        let mut degree: Option<i64> = None;
        for t in &terms {
            Word::new(t.creation.letters().to_vec(), n)?;
            Word::new(t.annihilation.letters().to_vec(), n)?;
            let d = t.creation.len() as i64 - t.annihilation.len() as i64;
            match degree {
                None => degree = Some(d),
                Some(existing) if existing != d => {
                    return Err(Error::DegreeMismatch { expected: existing, found: d })
                }
                _ => {}
            }
        }
        let degree = degree.unwrap_or(0);
        // canonical order, merged, zero terms dropped
        let mut map: BTreeMap<(Word, Word), Complex64> = BTreeMap::new();
        for t in terms {
            *map.entry((t.creation, t.annihilation)).or_insert(cr(0.0)) += t.coeff;
        }
        let terms = map
            .into_iter()
            .filter(|(_, coeff)| coeff.norm() != 0.0)
            .map(|((creation, annihilation), coeff)| NoTerm { coeff, creation, annihilation })
            .collect();
        Ok(NormalOrderedElement { n, degree, terms })
    }

    /// Single monomial `Z_j Z_k^*`.
    pub fn monomial(n: usize, creation: Word, annihilation: Word) -> Result<Self> {
        Self::from_terms(
            n,
            vec![NoTerm { coeff: cr(1.0), creation, annihilation }],
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn terms(&self) -> &[NoTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Longest creation/annihilation word among the terms.
    pub fn max_word_len(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.creation.len().max(t.annihilation.len()))
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        NormalOrderedElement {
            n: self.n,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|t| NoTerm {
                    coeff: t.coeff * factor,
                    creation: t.creation.clone(),
                    annihilation: t.annihilation.clone(),
                })
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::from_terms(self.n, terms)
    }

    /// Adjoint: swaps creation and annihilation words, conjugates
    /// coefficients, negates the degree.
    pub fn adjoint(&self) -> Self {
        NormalOrderedElement {
            n: self.n,
            degree: -self.degree,
            terms: self
                .terms
                .iter()
                .map(|t| NoTerm {
                    coeff: t.coeff.conj(),
                    creation: t.annihilation.clone(),
                    annihilation: t.creation.clone(),
                })
                .collect(),
        }
    }

    /// Toeplitz representative on the truncated Fock space: the graded
    /// operator with blocks `Σ_t c_t S_{j_t} S_{k_t}^*` on every level where
    /// all terms are representable. Levels an annihilation word overshoots
    /// contribute exact zero blocks.
    pub fn rep(&self, system: &Arc<SubproductSystem>) -> Result<GradedOperator> {
        let m_max = system.m_max();
        let top_in = if self.degree >= 0 {
            m_max as i64 - self.degree
        } else {
            m_max as i64
        };
        if top_in < 0 {
            return Err(Error::Headroom { needed: self.degree.unsigned_abs() as usize, have: m_max });
        }
        let mut blocks = BTreeMap::new();
        for r in 0..=top_in as usize {
            let out = (r as i64 + self.degree) as usize;
            let mut block = CMat::zeros(system.dim(out), system.dim(r));
            for t in &self.terms {
                let ka = t.annihilation.len();
                if r < ka {
                    continue; // the annihilation word kills this level
                }
                let base = r - ka;
                let down = word_shift(system, &t.annihilation, base)?;
                let up = word_shift(system, &t.creation, base)?;
                block += (up * down.adjoint()) * t.coeff;
            }
            blocks.insert(r, block);
        }
        GradedOperator::from_blocks(system.clone(), self.degree, blocks, self.print())
    }

    /// Canonical text form in the element grammar.
    pub fn print(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for t in &self.terms {
            let mut factors = Vec::new();
            let coeff = t.coeff;
            if coeff != cr(1.0) || (t.creation.is_empty() && t.annihilation.is_empty()) {
                factors.push(format_complex(coeff));
            }
            for &l in t.creation.letters() {
                factors.push(format!("Z{l}"));
            }
            for &l in t.annihilation.letters() {
                factors.push(format!("Zd{l}"));
            }
            parts.push(factors.join("*"));
        }
        parts.join(" + ")
    }
}

fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else {
        format!("({}+{}i)", z.re, z.im)
    }
}

/// Parses the element grammar: terms separated by `+`/`-`; a term is an
/// optional complex coefficient times `*`-separated factors `Z<k>` (creation)
/// and `Zd<k>` (annihilation), with all `Z` factors preceding the `Zd`s.
pub fn parse_element(text: &str, n: usize) -> Result<NormalOrderedElement> {
    let mut terms: Vec<NoTerm> = Vec::new();
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if cleaned.is_empty() {
        return Err(Error::Parse("empty element".into()));
    }
    let mut rest = cleaned.as_str();
    let mut sign = 1.0;
    if let Some(stripped) = rest.strip_prefix('-') {
        sign = -1.0;
        rest = stripped;
    } else if let Some(stripped) = rest.strip_prefix('+') {
        rest = stripped;
    }
    while !rest.is_empty() {
        let end = rest
            .char_indices()
            .skip(1)
            .find(|&(_, ch)| ch == '+' || ch == '-')
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        let (term_text, tail) = rest.split_at(end);
        terms.push(parse_element_term(term_text, n, sign)?);
        rest = tail;
        if let Some(stripped) = rest.strip_prefix('+') {
            sign = 1.0;
            rest = stripped;
        } else if let Some(stripped) = rest.strip_prefix('-') {
            sign = -1.0;
            rest = stripped;
        }
    }
    NormalOrderedElement::from_terms(n, terms)
}

fn parse_element_term(text: &str, n: usize, sign: f64) -> Result<NoTerm> {
    let mut coeff = cr(sign);
    let mut creation: Vec<u8> = Vec::new();
    let mut annihilation: Vec<u8> = Vec::new();
    let mut saw_annihilation = false;
    let mut saw_factor = false;
    for factor in text.split('*') {
        if factor.is_empty() {
            return Err(Error::Parse(format!("empty factor in term '{text}'")));
        }
        if let Some(idx_text) = factor.strip_prefix("Zd") {
            let idx: usize = idx_text
                .parse()
                .map_err(|_| Error::Parse(format!("bad annihilation index '{factor}'")))?;
            if idx == 0 || idx > n {
                return Err(Error::LetterOutOfRange { letter: idx, n });
            }
            annihilation.push(idx as u8);
            saw_annihilation = true;
            saw_factor = true;
        } else if let Some(idx_text) = factor.strip_prefix('Z') {
            if saw_annihilation {
                return Err(Error::Parse(format!(
                    "term '{text}' is not normally ordered: Z after Zd"
                )));
            }
            let idx: usize = idx_text
                .parse()
                .map_err(|_| Error::Parse(format!("bad creation index '{factor}'")))?;
            if idx == 0 || idx > n {
                return Err(Error::LetterOutOfRange { letter: idx, n });
            }
            creation.push(idx as u8);
            saw_factor = true;
        } else {
            // numeric coefficient, optionally imaginary
            let (num_text, imag) = match factor.strip_suffix('i') {
                Some(stripped) if !stripped.is_empty() => (stripped, true),
                Some(_) => ("1", true),
                None => (factor, false),
            };
            let value: f64 = num_text
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient '{factor}'")))?;
            coeff *= if imag { c(0.0, value) } else { cr(value) };
        }
    }
    if !saw_factor && creation.is_empty() && annihilation.is_empty() {
        // pure scalar term like "1" or "0.5i": fine
    }
    Ok(NoTerm {
        coeff,
        creation: Word::new(creation, n)?,
        annihilation: Word::new(annihilation, n)?,
    })
}

/// One multiplicative factor of a word expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Creation(u8),
    Annihilation(u8),
}

/// A sum of scalar multiples of products of `Z_k` and `Z_k^*` in arbitrary
/// order, with a common gauge degree. More general than
/// [`NormalOrderedElement`]: products need not be normally ordered, so this
/// covers anti-normally ordered test elements directly.
#[derive(Clone, Debug, PartialEq)]
pub struct WordExpression {
    n: usize,
    degree: i64,
    terms: Vec<(Complex64, Vec<Factor>)>,
}

impl WordExpression {
    pub fn degree(&self) -> i64 {
        self.degree
    }

    /// Toeplitz representative: each term is the composition of shift
    /// operators (and adjoints) in reading order.
    pub fn rep(&self, system: &Arc<SubproductSystem>) -> Result<GradedOperator> {
        let mut total: Option<GradedOperator> = None;
        for (coeff, factors) in &self.terms {
            let mut term: Option<GradedOperator> = None;
            // rightmost factor acts first
            for factor in factors.iter().rev() {
                let op = match factor {
                    Factor::Creation(k) => crate::fock::shift_operator(system, *k)?,
                    Factor::Annihilation(k) => crate::fock::shift_operator(system, *k)?.adjoint(),
                };
                term = Some(match term {
                    None => op,
                    Some(t) => op.compose(&t)?,
                });
            }
            let term = match term {
                None => GradedOperator::identity(system.clone(), 0, system.m_max())?,
                Some(t) => t,
            }
            .scale(*coeff);
            total = Some(match total {
                None => term,
                Some(acc) => acc.add(&term)?,
            });
        }
        total.ok_or(Error::EmptyRange)
    }
}

/// Parses the general word-expression grammar: like the normally ordered
/// grammar, but `Z`/`Zd` factors may appear in any order.
pub fn parse_word_expression(text: &str, n: usize) -> Result<WordExpression> {
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if cleaned.is_empty() {
        return Err(Error::Parse("empty element".into()));
    }
    let mut terms = Vec::new();
    let mut rest = cleaned.as_str();
    let mut sign = 1.0;
    if let Some(stripped) = rest.strip_prefix('-') {
        sign = -1.0;
        rest = stripped;
    } else if let Some(stripped) = rest.strip_prefix('+') {
        rest = stripped;
    }
    let mut degree: Option<i64> = None;
    while !rest.is_empty() {
        let end = rest
            .char_indices()
            .skip(1)
            .find(|&(_, ch)| ch == '+' || ch == '-')
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        let (term_text, tail) = rest.split_at(end);
        let mut coeff = cr(sign);
        let mut factors = Vec::new();
        for factor in term_text.split('*') {
            if factor.is_empty() {
                return Err(Error::Parse(format!("empty factor in term '{term_text}'")));
            }
            if let Some(idx_text) = factor.strip_prefix("Zd") {
                let idx: usize = idx_text
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad index '{factor}'")))?;
                if idx == 0 || idx > n {
                    return Err(Error::LetterOutOfRange { letter: idx, n });
                }
                factors.push(Factor::Annihilation(idx as u8));
            } else if let Some(idx_text) = factor.strip_prefix('Z') {
                let idx: usize = idx_text
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad index '{factor}'")))?;
                if idx == 0 || idx > n {
                    return Err(Error::LetterOutOfRange { letter: idx, n });
                }
                factors.push(Factor::Creation(idx as u8));
            } else {
                let (num_text, imag) = match factor.strip_suffix('i') {
                    Some(stripped) if !stripped.is_empty() => (stripped, true),
                    Some(_) => ("1", true),
                    None => (factor, false),
                };
                let value: f64 = num_text
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coefficient '{factor}'")))?;
                coeff *= if imag { c(0.0, value) } else { cr(value) };
            }
        }
        let d: i64 = factors
            .iter()
            .map(|f| match f {
                Factor::Creation(_) => 1i64,
                Factor::Annihilation(_) => -1,
            })
            .sum();
        match degree {
            None => degree = Some(d),
            Some(existing) if existing != d => {
                return Err(Error::DegreeMismatch { expected: existing, found: d })
            }
            _ => {}
        }
        terms.push((coeff, factors));
        rest = tail;
        if let Some(stripped) = rest.strip_prefix('+') {
            sign = 1.0;
            rest = stripped;
        } else if let Some(stripped) = rest.strip_prefix('-') {
            sign = -1.0;
            rest = stripped;
        }
    }
    Ok(WordExpression { n, degree: degree.unwrap_or(0), terms })
}

/// Result of evaluating the limit state along a degree-0 level sequence.
#[derive(Clone, Debug)]
pub struct LimitState {
    /// `(level, φ_level(X_level))` over the operator's range.
    pub values: Vec<(usize, Complex64)>,
    /// The value at the highest available level.
    pub value: Complex64,
    /// True when the trailing values are constant to 1e-10 across at least
    /// three levels; only then is the truncation value certified exact.
    pub exact: bool,
}

pub const LIMIT_STATE_CONSTANCY_TOL: f64 = 1e-10;

/// Per-level state values `φ_m(X_m)` of a degree-0 graded operator, with
/// eventual-constancy detection. The last value is the truncation estimate
/// of the limit state.
pub fn limit_state(ws: &WeightSystem, x: &GradedOperator) -> Result<LimitState> {
    if x.degree() != 0 {
        return Err(Error::DegreeMismatch { expected: 0, found: x.degree() });
    }
    let mut values = Vec::new();
    for m in x.levels() {
        let block = x.block(m).expect("level listed");
        values.push((m, ws.phi(m, block)?));
    }
    if values.is_empty() {
        return Err(Error::EmptyRange);
    }
    let value = values.last().unwrap().1;
    let tail = values.len().min(3);
    let exact = values.len() >= 3
        && values[values.len() - tail..]
            .iter()
            .all(|&(_, v)| (v - value).norm() <= LIMIT_STATE_CONSTANCY_TOL);
    Ok(LimitState { values, value, exact })
}

/// A contravariant symbol together with the flag describing whether every
/// limit-state evaluation feeding it was certified exact.
#[derive(Clone, Debug)]
pub struct Contravariant {
    pub matrix: CMat,
    pub omega_exact: bool,
}

/// Contravariant symbol (Toeplitz quantization) at level `m` of a degree-`d`
/// representative `F`:
///
/// `ς̆^{(m)}(f) = Tr(Q_m) Σ_{|j|=m, |k|=m+d} (Q^{⊗m})^{-1}_{j,j} ω(Z_j Z_k^* f) S_k S_j^* |_{H_m}`.
///
/// All `ω`-values are evaluated at one shared top level, which is what makes
/// the resulting family exactly constant under the projective maps.
pub fn contravariant_of_rep(
    system: &SubproductSystem,
    ws: &WeightSystem,
    f_rep: &GradedOperator,
    m: usize,
) -> Result<Contravariant> {
    let d = f_rep.degree();
    let out_level = m as i64 + d;
    if out_level < 0 || out_level as usize > system.m_max() {
        return Err(Error::Headroom {
            needed: (m as i64 + d.abs()) as usize,
            have: system.m_max(),
        });
    }
    let out_level = out_level as usize;
    let n = system.n();

    // usable evaluation levels: F has a block at L, the shift frames exist
    let levels: Vec<usize> = f_rep
        .levels()
        .filter(|&l| l >= m && l as i64 + d <= system.m_max() as i64)
        .collect();
    if levels.is_empty() {
        return Err(Error::Headroom { needed: m + 1, have: system.m_max() });
    }
    let eval_levels: Vec<usize> = levels.iter().rev().take(3).cloned().rev().collect();

    let creation_words = words_of_length(n, m);
    let annihilation_words = words_of_length(n, (m as i64 + d) as usize);
    let mut last_matrix: Option<CMat> = None;
    let mut exact = eval_levels.len() >= 3;
    for &level in &eval_levels {
        let omega = omega_matrix(system, ws, f_rep, m, level, &creation_words, &annihilation_words)?;
        if let Some(prev) = &last_matrix {
            let dev = (&omega - prev)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if dev > LIMIT_STATE_CONSTANCY_TOL {
                exact = false;
            }
        }
        last_matrix = Some(omega);
    }
    let omega = last_matrix.expect("at least one evaluation level");

    // ambient matrix E[k, j] = Tr(Q_m) * w(j)^{-1} * omega[k, j]
    let t_m = ws.trace(m);
    let mut ambient = CMat::zeros(annihilation_words.len(), creation_words.len());
    for (jx, j) in creation_words.iter().enumerate() {
        let winv = 1.0 / ws.word_weight(j);
        for kx in 0..annihilation_words.len() {
            ambient[(kx, jx)] = omega[(kx, jx)] * cr(t_m * winv);
        }
    }
    let matrix = system.isometry(out_level).adjoint() * ambient * system.isometry(m);
    Ok(Contravariant { matrix, omega_exact: exact })
}

/// Batch of `ω(Z_j Z_k^* F)` values at a fixed evaluation level:
/// `omega[k, j] = φ_L((S_j S_k^* F)_L) = Tr(sw(k)^† F_L ρ_L sw(j))`.
fn omega_matrix(
    system: &SubproductSystem,
    ws: &WeightSystem,
    f_rep: &GradedOperator,
    m: usize,
    level: usize,
    creation_words: &[Word],
    annihilation_words: &[Word],
) -> Result<CMat> {
    let f_block = f_rep.block(level).expect("evaluation level has a block");
    let core = f_block * ws.rho(level);
    let base = level - m;
    let d_base = system.dim(base);
    let a_stack: Vec<CMat> = creation_words
        .iter()
        .map(|w| word_shift(system, w, base))
        .collect::<Result<_>>()?;
    let b_stack: Vec<CMat> = annihilation_words
        .iter()
        .map(|w| word_shift(system, w, base))
        .collect::<Result<_>>()?;
    let a = hstack(&a_stack);
    let b = hstack(&b_stack);
    let big = b.adjoint() * core * a;
    let mut omega = CMat::zeros(annihilation_words.len(), creation_words.len());
    for kx in 0..annihilation_words.len() {
        for jx in 0..creation_words.len() {
            let mut tr = Complex64::new(0.0, 0.0);
            for t in 0..d_base {
                tr += big[(kx * d_base + t, jx * d_base + t)];
            }
            omega[(kx, jx)] = tr;
        }
    }
    Ok(omega)
}

/// Contravariant symbol of a normally ordered element at level `m`.
///
/// Requires the truncation headroom `M >= 2m + maxdeg(f)` so that the
/// limit-state evaluations have at least three constant levels.
pub fn contravariant_symbol(
    system: &Arc<SubproductSystem>,
    ws: &WeightSystem,
    f: &NormalOrderedElement,
    m: usize,
) -> Result<Contravariant> {
    let needed = 2 * m + f.max_word_len();
    if system.m_max() < needed {
        return Err(Error::Headroom { needed, have: system.m_max() });
    }
    let rep = f.rep(system)?;
    contravariant_of_rep(system, ws, &rep, m)
}

/// Berezin transform data at level `m`: the composed representative
/// `ς^{(m)}(ς̆^{(m)}(f))` and the level profile of `|| β^{(m)}(f) - f ||`
/// computed from the difference of Toeplitz representatives.
#[derive(Clone, Debug)]
pub struct BerezinTransform {
    pub transform_rep: GradedOperator,
    pub diff_norms: Vec<(usize, f64)>,
    pub quantization: Contravariant,
}

pub fn berezin_transform(
    system: &Arc<SubproductSystem>,
    ws: &WeightSystem,
    f: &NormalOrderedElement,
    m: usize,
) -> Result<BerezinTransform> {
    if f.degree() != 0 {
        return Err(Error::DegreeMismatch { expected: 0, found: f.degree() });
    }
    let quantization = contravariant_symbol(system, ws, f, m)?;
    let transform_rep = covariant_symbol(system, &quantization.matrix, m)?;
    let f_rep = f.rep(system)?;
    let diff = transform_rep.sub(&f_rep)?;
    Ok(BerezinTransform {
        diff_norms: diff.level_norms(),
        transform_rep,
        quantization,
    })
}

fn check_square(system: &SubproductSystem, a: &CMat, m: usize) -> Result<()> {
    system.check_level(m)?;
    let d = system.dim(m);
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::ShapeMismatch {
            expected_rows: d,
            expected_cols: d,
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(())
}

fn check_block(system: &SubproductSystem, x: &CMat, m: usize, k: i64) -> Result<()> {
    system.check_level(m)?;
    let out = m as i64 + k;
    if out < 0 || out > system.m_max() as i64 {
        return Err(Error::LevelOutOfRange { level: m, max: system.m_max() });
    }
    let (er, ec) = (system.dim(out as usize), system.dim(m));
    if x.nrows() != er || x.ncols() != ec {
        return Err(Error::ShapeMismatch {
            expected_rows: er,
            expected_cols: ec,
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    Ok(())
}
