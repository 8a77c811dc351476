//! Homogeneous polynomials in free (`C<z>`) and commutative (`C[z]`)
//! variables, degree components of finitely generated homogeneous ideals and
//! their evaluation into Fock-space vectors.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{cr, words_of_length, CVec, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolyMode {
    Free,
    Commutative,
}

/// A homogeneous polynomial with complex coefficients over `n` variables.
///
/// Terms are keyed by words; in commutative mode only sorted words
/// (multidegree representatives) are stored and concatenation sorts.
#[derive(Clone, Debug, PartialEq)]
pub struct HomPoly {
    n: usize,
    degree: usize,
    mode: PolyMode,
    terms: BTreeMap<Word, Complex64>,
}

impl HomPoly {
    pub fn zero(n: usize, degree: usize, mode: PolyMode) -> Self {
        HomPoly { n, degree, mode, terms: BTreeMap::new() }
    }

    /// Builds a polynomial from raw terms, canonicalizing as needed.
    pub fn from_terms(
        n: usize,
        degree: usize,
        mode: PolyMode,
        terms: impl IntoIterator<Item = (Word, Complex64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Word, Complex64> = BTreeMap::new();
        for (w, coeff) in terms {
            if w.len() != degree {
                return Err(Error::NotHomogeneous { expected: degree, found: w.len() });
            }
            Word::new(w.letters().to_vec(), n)?;
            let key = match mode {
                PolyMode::Free => w,
                PolyMode::Commutative => w.sorted(),
            };
            *map.entry(key).or_insert(cr(0.0)) += coeff;
        }
        map.retain(|_, c| c.norm() != 0.0);
        Ok(HomPoly { n, degree, mode, terms: map })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn mode(&self) -> PolyMode {
        self.mode
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Complex64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Canonical text form; parses back to an equal polynomial.
    pub fn print(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        let mut first = true;
        let push_term = |coeff: f64, imag: bool, w: &Word, out: &mut String, first: &mut bool| {
            if coeff == 0.0 {
                return;
            }
            let sign = if coeff < 0.0 { "-" } else { "+" };
            if *first {
                if coeff < 0.0 {
                    out.push('-');
                }
                *first = false;
            } else {
                out.push(' ');
                out.push_str(sign);
                out.push(' ');
            }
            let mag = coeff.abs();
            let mut factors: Vec<String> = Vec::new();
            if mag != 1.0 || w.is_empty() {
                factors.push(format!("{}{}", fmt_f64(mag), if imag { "i" } else { "" }));
            } else if imag {
                factors.push("i".to_string());
            }
            let mut i = 0;
            let letters = w.letters();
            while i < letters.len() {
                let mut p = 1;
                while i + p < letters.len() && letters[i + p] == letters[i] {
                    p += 1;
                }
                if p == 1 {
                    factors.push(format!("z{}", letters[i]));
                } else {
                    factors.push(format!("z{}^{}", letters[i], p));
                }
                i += p;
            }
            out.push_str(&factors.join("*"));
        };
        for (w, coeff) in &self.terms {
            push_term(coeff.re, false, w, &mut out, &mut first);
            push_term(coeff.im, true, w, &mut out, &mut first);
        }
        out
    }

    /// Evaluation on the basis `e_1,...,e_n`: a vector in `H^{⊗degree}`.
    ///
    /// In commutative mode each monomial maps to the average of its word
    /// orbit (the unnormalized symmetrizer image).
    pub fn evaluate_on_basis(&self) -> CVec {
        let dim = self.n.pow(self.degree as u32);
        let mut v = CVec::zeros(dim);
        for (w, &coeff) in &self.terms {
            match self.mode {
                PolyMode::Free => v[w.index(self.n)] += coeff,
                PolyMode::Commutative => {
                    let orbit = w.orbit();
                    let weight = coeff / cr(orbit.len() as f64);
                    for o in orbit {
                        v[o.index(self.n)] += weight;
                    }
                }
            }
        }
        v
    }

    /// Commutative product with a monomial word (sorted concatenation).
    fn commutative_monomial_multiple(&self, x: &Word) -> Result<HomPoly> {
        let terms: Vec<(Word, Complex64)> = self
            .terms
            .iter()
            .map(|(w, c)| (w.concat(x).sorted(), *c))
            .collect();
        HomPoly::from_terms(self.n, self.degree + x.len(), PolyMode::Commutative, terms)
    }
}

fn fmt_f64(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// Parses the polynomial grammar: terms separated by `+`/`-`; a term is an
/// optional complex coefficient (decimal, optional `i`) times `*`-separated
/// factors `z<k>` or `z<k>^<p>`; whitespace ignored.
pub fn parse_poly(text: &str, n: usize, mode: PolyMode) -> Result<HomPoly> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut terms: Vec<(Word, Complex64)> = Vec::new();
    let mut degree: Option<usize> = None;
    let mut pos = 0usize;
    let mut sign = 1.0;
    // leading sign
    if let Some(Tok::Sign(s)) = toks.first() {
        sign = *s;
        pos = 1;
    }
    loop {
        let (word, coeff, next) = parse_term(&toks, pos, n)?;
        match degree {
            None => degree = Some(word.len()),
            Some(d) if d != word.len() => {
                return Err(Error::NotHomogeneous { expected: d, found: word.len() })
            }
            _ => {}
        }
        terms.push((word, coeff * cr(sign)));
        pos = next;
        match toks.get(pos) {
            None => break,
            Some(Tok::Sign(s)) => {
                sign = *s;
                pos += 1;
            }
            Some(t) => return Err(Error::Parse(format!("expected + or - before {t:?}"))),
        }
    }
    HomPoly::from_terms(n, degree.unwrap(), mode, terms)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Sign(f64),
    Star,
    Caret,
    Number(f64),
    Imag,        // bare `i`
    Var(usize),  // z<k>
    Int(usize),  // exponent digits after ^
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    let mut after_caret = false;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            c if c.is_whitespace() => i += 1,
            '+' => {
                toks.push(Tok::Sign(1.0));
                i += 1;
            }
            '-' => {
                toks.push(Tok::Sign(-1.0));
                i += 1;
            }
            '*' => {
                toks.push(Tok::Star);
                i += 1;
            }
            '^' => {
                toks.push(Tok::Caret);
                after_caret = true;
                i += 1;
            }
            'i' => {
                toks.push(Tok::Imag);
                i += 1;
            }
            'z' => {
                i += 1;
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if start == i {
                    return Err(Error::Parse("variable index missing after 'z'".into()));
                }
                let idx: usize = chars[start..i]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| Error::Parse("bad variable index".into()))?;
                toks.push(Tok::Var(idx));
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || chars[i] == 'e'
                        || chars[i] == 'E'
                        || ((chars[i] == '+' || chars[i] == '-')
                            && i > start
                            && (chars[i - 1] == 'e' || chars[i - 1] == 'E')))
                {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                if after_caret {
                    let p: usize =
                        s.parse().map_err(|_| Error::Parse(format!("bad exponent '{s}'")))?;
                    toks.push(Tok::Int(p));
                } else {
                    let v: f64 =
                        s.parse().map_err(|_| Error::Parse(format!("bad number '{s}'")))?;
                    toks.push(Tok::Number(v));
                }
            }
            other => return Err(Error::Parse(format!("unexpected character '{other}'"))),
        }
        if ch != '^' && !ch.is_whitespace() {
            after_caret = false;
        }
    }
    Ok(toks)
}

/// One term: `[coeff [i]] [* z<k>[^p] [* ...]]`. Returns (word, coeff, next).
fn parse_term(toks: &[Tok], mut pos: usize, n: usize) -> Result<(Word, Complex64, usize)> {
    let mut coeff = cr(1.0);
    let mut saw_anything = false;
    // optional numeric / imaginary prefix
    match (toks.get(pos), toks.get(pos + 1)) {
        (Some(Tok::Number(v)), Some(Tok::Imag)) => {
            coeff = Complex64::new(0.0, *v);
            pos += 2;
            saw_anything = true;
        }
        (Some(Tok::Number(v)), _) => {
            coeff = cr(*v);
            pos += 1;
            saw_anything = true;
        }
        (Some(Tok::Imag), _) => {
            coeff = Complex64::new(0.0, 1.0);
            pos += 1;
            saw_anything = true;
        }
        _ => {}
    }
    if saw_anything {
        if let Some(Tok::Star) = toks.get(pos) {
            pos += 1;
        }
    }
    // factors
    let mut letters: Vec<u8> = Vec::new();
    loop {
        match toks.get(pos) {
            Some(Tok::Var(k)) => {
                if *k == 0 || *k > n {
                    return Err(Error::LetterOutOfRange { letter: *k, n });
                }
                pos += 1;
                let mut power = 1usize;
                if let Some(Tok::Caret) = toks.get(pos) {
                    match toks.get(pos + 1) {
                        Some(Tok::Int(p)) => {
                            power = *p;
                            pos += 2;
                        }
                        _ => return Err(Error::Parse("exponent missing after '^'".into())),
                    }
                }
                letters.extend(std::iter::repeat_n(*k as u8, power));
                saw_anything = true;
                if let Some(Tok::Star) = toks.get(pos) {
                    pos += 1;
                    continue;
                }
                break;
            }
            _ => {
                if letters.is_empty() {
                    break;
                }
                return Err(Error::Parse("factor expected after '*'".into()));
            }
        }
    }
    if !saw_anything {
        return Err(Error::Parse("empty term".into()));
    }
    Ok((Word::new(letters, n)?, coeff, pos))
}

/// Spanning vectors of the degree-`m` component of the two-sided (free mode)
/// or commutative ideal generated by `generators`, evaluated in `H^{⊗m}`.
///
/// Free mode produces `e_x ⊗ g(e) ⊗ e_y` over all admissible positions;
/// commutative mode produces symmetrized evaluations of `x·g` over all
/// monomials `x` of complementary degree. Generators of degree `> m`
/// contribute nothing.
pub fn ideal_degree_span(generators: &[HomPoly], m: usize) -> Result<Vec<CVec>> {
    if generators.is_empty() {
        return Ok(Vec::new());
    }
    let n = generators[0].n();
    let mode = generators[0].mode();
    for g in generators {
        if g.mode() != mode {
            return Err(Error::MixedModes);
        }
        if g.n() != n {
            return Err(Error::MixedVariableCounts);
        }
    }
    let dim = n.pow(m as u32);
    let mut out = Vec::new();
    for g in generators {
        let d = g.degree();
        if d > m {
            continue;
        }
        match mode {
            PolyMode::Free => {
                for a in 0..=(m - d) {
                    let b = m - d - a;
                    for x in words_of_length(n, a) {
                        for y in words_of_length(n, b) {
                            let mut v = CVec::zeros(dim);
                            for (w, &coeff) in g.terms() {
                                let full = x.concat(w).concat(&y);
                                v[full.index(n)] += coeff;
                            }
                            out.push(v);
                        }
                    }
                }
            }
            PolyMode::Commutative => {
                for x in crate::tensor::sorted_words_of_length(n, m - d) {
                    let prod = g.commutative_monomial_multiple(&x)?;
                    out.push(prod.evaluate_on_basis());
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{c, operator_norm, word_vector, CMat};

    fn w(letters: &[u8], n: usize) -> Word {
        Word::new(letters.to_vec(), n).unwrap()
    }

    #[test]
    fn parse_free_binomial() {
        let p = parse_poly("z1*z2 - 0.5*z2*z1", 2, PolyMode::Free).unwrap();
        assert_eq!(p.degree(), 2);
        let terms: Vec<_> = p.terms().collect();
        assert_eq!(terms.len(), 2);
        assert_eq!(*terms[0].0, w(&[1, 2], 2));
        assert_eq!(*terms[0].1, cr(1.0));
        assert_eq!(*terms[1].0, w(&[2, 1], 2));
        assert_eq!(*terms[1].1, cr(-0.5));
    }

    #[test]
    fn parse_commutative_power() {
        let p = parse_poly("z1^2*z2", 2, PolyMode::Commutative).unwrap();
        assert_eq!(p.degree(), 3);
        let terms: Vec<_> = p.terms().collect();
        assert_eq!(terms.len(), 1);
        assert_eq!(*terms[0].0, w(&[1, 1, 2], 2));
        assert_eq!(*terms[0].1, cr(1.0));
    }

    #[test]
    fn parse_rejects_nonhomogeneous() {
        assert!(matches!(
            parse_poly("z1 + z1*z2", 2, PolyMode::Free),
            Err(Error::NotHomogeneous { .. })
        ));
    }

    #[test]
    fn parse_rejects_bad_variable() {
        assert!(parse_poly("z3", 2, PolyMode::Free).is_err());
        assert!(parse_poly("z0", 2, PolyMode::Free).is_err());
        assert!(parse_poly("q1", 2, PolyMode::Free).is_err());
    }

    #[test]
    fn parse_imaginary_coefficients() {
        let p = parse_poly("i*z1 - 2i*z2", 2, PolyMode::Free).unwrap();
        let terms: Vec<_> = p.terms().collect();
        assert_eq!(*terms[0].1, c(0.0, 1.0));
        assert_eq!(*terms[1].1, c(0.0, -2.0));
    }

    #[test]
    fn commutative_words_are_sorted_and_merged() {
        let p = parse_poly("z2*z1 + z1*z2", 2, PolyMode::Commutative).unwrap();
        let terms: Vec<_> = p.terms().collect();
        assert_eq!(terms.len(), 1);
        assert_eq!(*terms[0].0, w(&[1, 2], 2));
        assert_eq!(*terms[0].1, cr(2.0));
    }

    #[test]
    fn evaluate_free_examples() {
        let p = parse_poly("z1*z2", 2, PolyMode::Free).unwrap();
        assert_eq!(p.evaluate_on_basis(), word_vector(&w(&[1, 2], 2), 2));

        let q = parse_poly("z1*z2 - z2*z1", 2, PolyMode::Free).unwrap();
        let expect = word_vector(&w(&[1, 2], 2), 2) - word_vector(&w(&[2, 1], 2), 2);
        assert_eq!(q.evaluate_on_basis(), expect);
    }

    #[test]
    fn evaluate_commutative_symmetrizes() {
        // z1 z2 -> (e12 + e21)/2, the orbit average
        let p = parse_poly("z1*z2", 2, PolyMode::Commutative).unwrap();
        let v = p.evaluate_on_basis();
        let expect = (word_vector(&w(&[1, 2], 2), 2) + word_vector(&w(&[2, 1], 2), 2)).scale(0.5);
        assert!((v - expect).norm() < 1e-15);
    }

    #[test]
    fn ideal_span_quantum_plane_degree_two() {
        let g = parse_poly("z1*z2 - 0.5*z2*z1", 2, PolyMode::Free).unwrap();
        let span = ideal_degree_span(&[g], 2).unwrap();
        assert_eq!(span.len(), 1);
        let expect = word_vector(&w(&[1, 2], 2), 2) - word_vector(&w(&[2, 1], 2), 2).scale(0.5);
        assert!((span[0].clone() - expect).norm() < 1e-15);
    }

    #[test]
    fn ideal_span_empty_generators() {
        assert!(ideal_degree_span(&[], 3).unwrap().is_empty());
    }

    #[test]
    fn ideal_span_commutative_z1sq_degree3() {
        // generators {z1^2} commutative, n=2, m=3: spans sym(z1^3), sym(z1^2 z2);
        // the complement inside the 4-dim symmetric space has dimension 2.
        let g = parse_poly("z1^2", 2, PolyMode::Commutative).unwrap();
        let span = ideal_degree_span(&[g], 3).unwrap();
        assert_eq!(span.len(), 2);
        let mat = CMat::from_columns(&span);
        assert_eq!(crate::tensor::numerical_rank(&mat, 1e-10), 2);
        // brute-force: symmetric subspace of H^{⊗3} has dim 4; span rank 2 => complement 2
        let sym_dim = crate::tensor::sorted_words_of_length(2, 3).len();
        assert_eq!(sym_dim - 2, 2);
    }

    #[test]
    fn ideal_span_rejects_mixed_modes() {
        let a = parse_poly("z1*z2", 2, PolyMode::Free).unwrap();
        let b = parse_poly("z1*z2", 2, PolyMode::Commutative).unwrap();
        assert!(matches!(ideal_degree_span(&[a, b], 3), Err(Error::MixedModes)));
    }

    #[test]
    fn commutative_outputs_live_in_symmetric_subspace() {
        // ||(I - P_sym) v|| <= 1e-12 for every output v
        let g1 = parse_poly("z1^2 - z2^2", 3, PolyMode::Commutative).unwrap();
        let g2 = parse_poly("z1*z2*z3", 3, PolyMode::Commutative).unwrap();
        for m in 2..=4usize {
            let span = ideal_degree_span(&[g1.clone(), g2.clone()], m).unwrap();
            let dim = 3usize.pow(m as u32);
            // P_sym via orbit averaging of each basis vector
            let mut psym = CMat::zeros(dim, dim);
            for word in words_of_length(3, m) {
                let orbit = word.orbit();
                let weight = cr(1.0 / orbit.len() as f64);
                for o in &orbit {
                    psym[(o.index(3), word.index(3))] += weight;
                }
            }
            for v in &span {
                let resid = v - &psym * v;
                assert!(resid.norm() <= 1e-12, "m={m}");
            }
        }
    }

    #[test]
    fn free_ideal_closure_under_multiplication() {
        // span(I^(m+1)) contains e_k ⊗ v and v ⊗ e_k for v in span(I^(m)),
        // projection residual <= 1e-10; n <= 3, m <= 5
        use crate::tensor::kron;
        for (n, gens, m_max) in [
            (2usize, vec![parse_poly("z1*z2 - 0.5*z2*z1", 2, PolyMode::Free).unwrap()], 5usize),
            (3, vec![parse_poly("z1*z1", 3, PolyMode::Free).unwrap(),
                     parse_poly("z2*z3 + i*z3*z2", 3, PolyMode::Free).unwrap()], 4),
        ] {
            for m in 2..m_max {
                let span_m = ideal_degree_span(&gens, m).unwrap();
                let span_next = ideal_degree_span(&gens, m + 1).unwrap();
                if span_m.is_empty() {
                    continue;
                }
                let big = CMat::from_columns(&span_next);
                // orthonormal basis of span_next for projection
                let q = big.qr().q();
                let proj = &q * q.adjoint();
                for v in &span_m {
                    for k in 0..n {
                        let ek = CMat::from_columns(&[crate::tensor::basis_vector(n, k)]);
                        let vm = CMat::from_columns(std::slice::from_ref(v));
                        for prod in [kron(&ek, &vm).unwrap(), kron(&vm, &ek).unwrap()] {
                            let col = prod.column(0).into_owned();
                            let resid = &col - &proj * &col;
                            assert!(resid.norm() <= 1e-10 * col.norm().max(1.0), "n={n} m={m}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn print_parse_roundtrip() {
        let cases = [
            ("z1*z2 - 0.5*z2*z1", 2, PolyMode::Free),
            ("z1^2*z2 + 3*z2^3", 2, PolyMode::Commutative),
            ("i*z1*z3 - 2.25*z2*z2 + z3*z1", 3, PolyMode::Free),
            ("0.5i*z1^4", 2, PolyMode::Commutative),
        ];
        for (text, n, mode) in cases {
            let p = parse_poly(text, n, mode).unwrap();
            let printed = p.print();
            let q = parse_poly(&printed, n, mode).unwrap();
            assert_eq!(p, q, "roundtrip failed for '{text}' -> '{printed}'");
        }
    }

    #[test]
    fn zero_polynomial_prints_and_evaluates() {
        let p = parse_poly("z1*z2 - z1*z2", 2, PolyMode::Free).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.print(), "0");
        assert_eq!(operator_norm(&CMat::from_columns(&[p.evaluate_on_basis()])), 0.0);
    }
}
