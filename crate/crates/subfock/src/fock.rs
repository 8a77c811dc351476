//! Truncated Fock space of a subproduct system: left/right shift blocks,
//! word shifts, block-graded operators with gauge-degree bookkeeping, and the
//! vacuum state.
//!
//! A degree-`k` operator is stored as blocks `X_m : H_m -> H_{m+k}` over an
//! explicit range of input levels. Truncation semantics: levels a product
//! cannot reach are dropped from the range rather than zero-padded, so every
//! consumer sees exactly the levels that carry exact data.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::subproduct::SubproductSystem;
use crate::tensor::{operator_norm, words_of_length, CMat, Word};

/// Left shift block `S_k : H_m -> H_{m+1}`, `S_k φ = p_{m+1}(e_k ⊗ φ)`;
/// in coordinates `U_{m+1}^† (e_k ⊗ U_m)`.
pub fn shift_block(system: &SubproductSystem, k: u8, m: usize) -> Result<CMat> {
    system.check_level(m + 1)?;
    let w = Word::new(vec![k], system.n())?;
    word_shift(system, &w, m)
}

/// Right ("rectus") shift block `R_k : H_m -> H_{m+1}`,
/// `R_k ψ = p_{m+1}(ψ ⊗ e_k)`; in coordinates `U_{m+1}^† (U_m ⊗ e_k)`.
pub fn right_shift_block(system: &SubproductSystem, k: u8, m: usize) -> Result<CMat> {
    system.check_level(m + 1)?;
    let w = Word::new(vec![k], system.n())?;
    rword_shift(system, &w, m)
}

/// Word shift block `S_w : H_m -> H_{m+|w|}` as the single compression
/// `U_{m+|w|}^† (e_w ⊗ U_m)`. Iterated compressions collapse to this by the
/// subproduct law, which is checked in tests rather than assumed here.
pub fn word_shift(system: &SubproductSystem, w: &Word, m: usize) -> Result<CMat> {
    let l = m + w.len();
    system.check_level(l)?;
    let n = system.n();
    let um = system.isometry(m);
    let ul = system.isometry(l);
    let ambient_m = um.nrows();
    let offset = w.index(n) * ambient_m;
    let slice = ul.rows(offset, ambient_m);
    Ok(slice.adjoint() * um)
}

/// Right word shift block `H_m -> H_{m+|w|}`, `U_{m+|w|}^† (U_m ⊗ e_w)`.
pub fn rword_shift(system: &SubproductSystem, w: &Word, m: usize) -> Result<CMat> {
    let l = m + w.len();
    system.check_level(l)?;
    let n = system.n();
    let um = system.isometry(m);
    let ul = system.isometry(l);
    let stride = n.pow(w.len() as u32);
    let idx = w.index(n);
    let mut gathered = CMat::zeros(um.nrows(), ul.ncols());
    for i in 0..um.nrows() {
        gathered.set_row(i, &ul.row(i * stride + idx));
    }
    Ok(gathered.adjoint() * um)
}

/// A gauge-degree-`k` family of blocks `X_m : H_m -> H_{m+k}`.
#[derive(Clone, Debug)]
pub struct GradedOperator {
    system: Arc<SubproductSystem>,
    degree: i64,
    blocks: BTreeMap<usize, CMat>,
    label: String,
}

impl GradedOperator {
    pub fn from_blocks(
        system: Arc<SubproductSystem>,
        degree: i64,
        blocks: BTreeMap<usize, CMat>,
        label: impl Into<String>,
    ) -> Result<Self> {
        for (&m, b) in &blocks {
            let out = m as i64 + degree;
            if out < 0 || out > system.m_max() as i64 || m > system.m_max() {
                return Err(Error::LevelOutOfRange { level: m, max: system.m_max() });
            }
            let (er, ec) = (system.dim(out as usize), system.dim(m));
            if b.nrows() != er || b.ncols() != ec {
                return Err(Error::ShapeMismatch {
                    expected_rows: er,
                    expected_cols: ec,
                    rows: b.nrows(),
                    cols: b.ncols(),
                });
            }
        }
        Ok(GradedOperator { system, degree, blocks, label: label.into() })
    }

    /// The identity on input levels `lo..=hi`.
    pub fn identity(system: Arc<SubproductSystem>, lo: usize, hi: usize) -> Result<Self> {
        let mut blocks = BTreeMap::new();
        for m in lo..=hi.min(system.m_max()) {
            blocks.insert(m, CMat::identity(system.dim(m), system.dim(m)));
        }
        Self::from_blocks(system, 0, blocks, "1")
    }

    /// The vacuum projection `|Ω><Ω|` on input levels `0..=hi`.
    pub fn vacuum_projection(system: Arc<SubproductSystem>, hi: usize) -> Result<Self> {
        let mut blocks = BTreeMap::new();
        for m in 0..=hi.min(system.m_max()) {
            let d = system.dim(m);
            let mut b = CMat::zeros(d, d);
            if m == 0 {
                b[(0, 0)] = Complex64::new(1.0, 0.0);
            }
            blocks.insert(m, b);
        }
        Self::from_blocks(system, 0, blocks, "|vac><vac|")
    }

    pub fn system(&self) -> &Arc<SubproductSystem> {
        &self.system
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    pub fn block(&self, m: usize) -> Option<&CMat> {
        self.blocks.get(&m)
    }

    pub fn levels(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.keys().cloned()
    }

    pub fn min_level(&self) -> Option<usize> {
        self.blocks.keys().next().cloned()
    }

    pub fn max_level(&self) -> Option<usize> {
        self.blocks.keys().next_back().cloned()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    fn same_system(&self, other: &GradedOperator) -> Result<()> {
        if !Arc::ptr_eq(&self.system, &other.system) {
            return Err(Error::RangeMismatch(
                "operators belong to different systems".into(),
            ));
        }
        Ok(())
    }

    /// Composition `self ∘ other`; degrees add, ranges chain.
    ///
    /// A negative intermediate level means `other` annihilates that input
    /// level outright (the levels below the vacuum are zero), so the
    /// composite block is an exact zero block. Intermediate levels above the
    /// truncation are undefined and the input level is dropped instead.
    pub fn compose(&self, other: &GradedOperator) -> Result<GradedOperator> {
        self.same_system(other)?;
        let degree = self.degree + other.degree;
        let mut blocks = BTreeMap::new();
        for m in 0..=self.system.m_max() {
            let out = m as i64 + degree;
            if out < 0 || out > self.system.m_max() as i64 {
                continue;
            }
            let mid = m as i64 + other.degree;
            if mid < 0 {
                // `other` maps this level below the vacuum, i.e. to zero
                blocks.insert(m, CMat::zeros(self.system.dim(out as usize), self.system.dim(m)));
                continue;
            }
            if let (Some(yb), Some(xb)) =
                (other.blocks.get(&m), self.blocks.get(&(mid as usize)))
            {
                blocks.insert(m, xb * yb);
            }
        }
        if blocks.is_empty() {
            return Err(Error::RangeMismatch(format!(
                "composition of '{}' and '{}' has no common levels",
                self.label, other.label
            )));
        }
        GradedOperator::from_blocks(
            self.system.clone(),
            degree,
            blocks,
            format!("({})({})", self.label, other.label),
        )
    }

    /// Adjoint; flips the degree `k -> -k`.
    pub fn adjoint(&self) -> GradedOperator {
        let degree = -self.degree;
        let mut blocks = BTreeMap::new();
        for (&m, b) in &self.blocks {
            let out = (m as i64 + self.degree) as usize;
            blocks.insert(out, b.adjoint());
        }
        GradedOperator {
            system: self.system.clone(),
            degree,
            blocks,
            label: format!("({})*", self.label),
        }
    }

    /// Blockwise sum on the intersection of the ranges.
    pub fn add(&self, other: &GradedOperator) -> Result<GradedOperator> {
        self.same_system(other)?;
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        let mut blocks = BTreeMap::new();
        for (&m, a) in &self.blocks {
            if let Some(b) = other.blocks.get(&m) {
                blocks.insert(m, a + b);
            }
        }
        if blocks.is_empty() {
            return Err(Error::EmptyRange);
        }
        GradedOperator::from_blocks(
            self.system.clone(),
            self.degree,
            blocks,
            format!("{} + {}", self.label, other.label),
        )
    }

    pub fn sub(&self, other: &GradedOperator) -> Result<GradedOperator> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> GradedOperator {
        let blocks = self.blocks.iter().map(|(&m, b)| (m, b * factor)).collect();
        GradedOperator {
            system: self.system.clone(),
            degree: self.degree,
            blocks,
            label: self.label.clone(),
        }
    }

    /// Operator norm of every block, by input level.
    pub fn level_norms(&self) -> Vec<(usize, f64)> {
        self.blocks.iter().map(|(&m, b)| (m, operator_norm(b))).collect()
    }

    /// The gauge action at angle `t`: a degree-`k` operator is scaled by the
    /// phase `e^{ikt}`.
    pub fn gauge_phase(&self, t: f64) -> GradedOperator {
        let phase = Complex64::new(0.0, self.degree as f64 * t).exp();
        self.scale(phase)
    }

    /// Operator dump: `{"degree": k, "levels": {"m": {"rows", "cols",
    /// "entries"}}}` with row-major entries interleaved as re, im pairs.
    pub fn dump_json(&self) -> String {
        use serde_json::{json, Map, Value};
        let mut levels = Map::new();
        for (&m, block) in &self.blocks {
            let mut entries = Vec::with_capacity(block.len() * 2);
            for r in 0..block.nrows() {
                for cidx in 0..block.ncols() {
                    entries.push(Value::from(block[(r, cidx)].re));
                    entries.push(Value::from(block[(r, cidx)].im));
                }
            }
            levels.insert(
                m.to_string(),
                json!({
                    "rows": block.nrows(),
                    "cols": block.ncols(),
                    "entries": entries,
                }),
            );
        }
        serde_json::to_string_pretty(&json!({
            "degree": self.degree,
            "levels": levels,
        }))
        .expect("dump serializes")
    }

    /// Restricts the range to input levels `lo..=hi`.
    pub fn restrict(&self, lo: usize, hi: usize) -> GradedOperator {
        let blocks = self
            .blocks
            .iter()
            .filter(|(&m, _)| m >= lo && m <= hi)
            .map(|(&m, b)| (m, b.clone()))
            .collect();
        GradedOperator {
            system: self.system.clone(),
            degree: self.degree,
            blocks,
            label: self.label.clone(),
        }
    }
}

/// The shift `S_k` as a degree-1 graded operator over all available levels.
pub fn shift_operator(system: &Arc<SubproductSystem>, k: u8) -> Result<GradedOperator> {
    let mut blocks = BTreeMap::new();
    for m in 0..system.m_max() {
        blocks.insert(m, shift_block(system, k, m)?);
    }
    GradedOperator::from_blocks(system.clone(), 1, blocks, format!("S{k}"))
}

/// The right shift `R_k` as a degree-1 graded operator.
pub fn right_shift_operator(system: &Arc<SubproductSystem>, k: u8) -> Result<GradedOperator> {
    let mut blocks = BTreeMap::new();
    for m in 0..system.m_max() {
        blocks.insert(m, right_shift_block(system, k, m)?);
    }
    GradedOperator::from_blocks(system.clone(), 1, blocks, format!("R{k}"))
}

/// Residuals of the row-sum identity at levels `(m, l)`:
/// `|| Σ_{|r|=m} S_r S_r^* |_{H_l} - 1 ||` and the `R`-shift version.
pub fn row_sum_residual(system: &SubproductSystem, m: usize, l: usize) -> Result<(f64, f64)> {
    if m > l {
        return Err(Error::LevelOutOfRange { level: m, max: l });
    }
    system.check_level(l)?;
    let d_l = system.dim(l);
    let mut s_sum = CMat::identity(d_l, d_l).scale(-1.0);
    let mut r_sum = s_sum.clone();
    for w in words_of_length(system.n(), m) {
        let sw = word_shift(system, &w, l - m)?;
        s_sum += &sw * sw.adjoint();
        let rw = rword_shift(system, &w, l - m)?;
        r_sum += &rw * rw.adjoint();
    }
    Ok((operator_norm(&s_sum), operator_norm(&r_sum)))
}

/// Vacuum expectation `<Ω|XΩ>`: the scalar block of a degree-0 operator at
/// level 0.
pub fn vacuum_expectation(x: &GradedOperator) -> Result<Complex64> {
    if x.degree() != 0 {
        return Err(Error::DegreeMismatch { expected: 0, found: x.degree() });
    }
    let b = x.block(0).ok_or(Error::EmptyRange)?;
    Ok(b[(0, 0)])
}
