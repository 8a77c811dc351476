//! Subproduct systems of finite-dimensional Hilbert spaces: a sequence
//! `H_0 = C`, `H_{m+l} ⊆ H_m ⊗ H_l`, stored through the isometries
//! `U_m : C^{d_m} -> H^{⊗m}` whose ranges are the fibers.
//!
//! Builders cover the product ("full") system, the symmetric system, systems
//! cut out by homogeneous ideals, and a registry of named examples.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::poly::{ideal_degree_span, parse_poly, HomPoly, PolyMode};
use crate::tensor::{
    cr, orthonormal_complement, sorted_words_of_length, CMat, CVec,
};

/// Size guards for dense construction. `hard` is enforced, `soft` only flags
/// the system so front ends can warn about SVD cost.
#[derive(Clone, Copy, Debug)]
pub struct Caps {
    pub hard: usize,
    pub soft: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { hard: 8192, soft: 2048 }
    }
}

impl Caps {
    pub fn unlimited() -> Self {
        Caps { hard: usize::MAX, soft: usize::MAX }
    }

    fn check(&self, n: usize, m: usize) -> Result<usize> {
        let ambient = n
            .checked_pow(m as u32)
            .filter(|&a| a <= self.hard)
            .ok_or(Error::AmbientCap { ambient: usize::MAX, cap: self.hard, n, m })?;
        Ok(ambient)
    }
}

/// How a system was constructed; carried along for reports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    Full,
    Symmetric,
    Ideal(String),
    Named(String),
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Full => write!(f, "full"),
            Provenance::Symmetric => write!(f, "symmetric"),
            Provenance::Ideal(s) => write!(f, "ideal({s})"),
            Provenance::Named(s) => write!(f, "named({s})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SubproductSystem {
    n: usize,
    m_max: usize,
    u: Vec<CMat>,
    dims: Vec<usize>,
    provenance: Provenance,
    commutative: bool,
    soft_cap_hit: bool,
}

/// Residuals of the subproduct law over all splits.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    /// One row per split: `(m, l, residual)` with
    /// residual = `|| p_l (p_m ⊗ p_{l-m}) p_l - p_l ||`.
    pub rows: Vec<(usize, usize, f64)>,
}

impl ValidationReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.2).fold(0.0, f64::max)
    }

    pub fn pass(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }

    pub fn worst(&self) -> Option<(usize, usize, f64)> {
        self.rows
            .iter()
            .cloned()
            .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
    }
}

impl SubproductSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Truncation level M: fibers are available for `m = 0..=M`.
    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn dim(&self, m: usize) -> usize {
        self.dims[m]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// The isometry `U_m` (`n^m x d_m`, orthonormal columns).
    pub fn isometry(&self, m: usize) -> &CMat {
        &self.u[m]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn is_commutative(&self) -> bool {
        self.commutative
    }

    pub fn soft_cap_hit(&self) -> bool {
        self.soft_cap_hit
    }

    pub fn check_level(&self, m: usize) -> Result<()> {
        if m > self.m_max {
            return Err(Error::LevelOutOfRange { level: m, max: self.m_max });
        }
        Ok(())
    }

    /// The product system `H_m = H^{⊗m}`, `U_m = 1`.
    pub fn build_full(n: usize, m_max: usize, caps: &Caps) -> Result<Self> {
        let ambient_top = caps.check(n, m_max)?;
        let u = (0..=m_max)
            .map(|m| CMat::identity(n.pow(m as u32), n.pow(m as u32)))
            .collect::<Vec<_>>();
        let dims = (0..=m_max).map(|m| n.pow(m as u32)).collect();
        Ok(SubproductSystem {
            n,
            m_max,
            u,
            dims,
            provenance: Provenance::Full,
            commutative: n == 1,
            soft_cap_hit: ambient_top > caps.soft,
        })
    }

    /// The symmetric system `H_m = H^{∨m}`, `d_m = C(n+m-1, m)`.
    ///
    /// Columns of `U_m` are normalized orbit sums of sorted words; distinct
    /// multisets have disjoint support, so no orthonormalization is needed.
    pub fn build_symmetric(n: usize, m_max: usize, caps: &Caps) -> Result<Self> {
        let ambient_top = caps.check(n, m_max)?;
        let mut u = Vec::with_capacity(m_max + 1);
        for m in 0..=m_max {
            u.push(symmetric_isometry(n, m));
        }
        let dims = u.iter().map(|m| m.ncols()).collect();
        Ok(SubproductSystem {
            n,
            m_max,
            u,
            dims,
            provenance: Provenance::Symmetric,
            commutative: true,
            soft_cap_hit: ambient_top > caps.soft,
        })
    }

    /// System cut out by a homogeneous ideal: `H_m` is the orthogonal
    /// complement of the degree-`m` ideal span inside `H^{⊗m}` (free mode)
    /// or inside the symmetric subspace `H^{∨m}` (commutative mode).
    ///
    /// The subproduct law is validated after construction; a violation is
    /// reported with the offending split and residual.
    pub fn build_from_ideal(
        generators: &[HomPoly],
        n: usize,
        m_max: usize,
        caps: &Caps,
    ) -> Result<Self> {
        let ambient_top = caps.check(n, m_max)?;
        let mode = generators.first().map(|g| g.mode()).unwrap_or(PolyMode::Free);
        let tol = 1e-10;
        let mut u: Vec<CMat> = Vec::with_capacity(m_max + 1);
        let mut label_parts: Vec<String> = generators.iter().map(|g| g.print()).collect();
        if label_parts.is_empty() {
            label_parts.push("0".into());
        }
        for m in 0..=m_max {
            let span = ideal_degree_span(generators, m)?;
            let um = match mode {
                PolyMode::Free => orthonormal_complement(&span, n.pow(m as u32), tol)?,
                PolyMode::Commutative => {
                    // complement computed inside the symmetric subspace
                    let sym = symmetric_isometry(n, m);
                    let coords: Vec<CVec> =
                        span.iter().map(|v| (sym.adjoint() * v).column(0).into_owned()).collect();
                    let comp = orthonormal_complement(&coords, sym.ncols(), tol)?;
                    &sym * comp
                }
            };
            u.push(um);
        }
        let dims = u.iter().map(|m| m.ncols()).collect();
        let system = SubproductSystem {
            n,
            m_max,
            u,
            dims,
            provenance: Provenance::Ideal(label_parts.join("; ")),
            commutative: mode == PolyMode::Commutative,
            soft_cap_hit: ambient_top > caps.soft,
        };
        let report = system.validate();
        if let Some((m, l, residual)) = report.worst() {
            if residual > tol {
                return Err(Error::SubproductLaw { m, l, residual, tol });
            }
        }
        Ok(system)
    }

    /// Wraps externally supplied isometries. Column orthonormality is
    /// enforced; the subproduct law is left to [`SubproductSystem::validate`].
    pub fn from_isometries(n: usize, u: Vec<CMat>) -> Result<Self> {
        if u.is_empty() || u[0].nrows() != 1 || u[0].ncols() != 1 {
            return Err(Error::Parse("level-0 isometry must be the 1x1 identity".into()));
        }
        for (m, um) in u.iter().enumerate() {
            if um.nrows() != n.pow(m as u32) {
                return Err(Error::ShapeMismatch {
                    expected_rows: n.pow(m as u32),
                    expected_cols: um.ncols(),
                    rows: um.nrows(),
                    cols: um.ncols(),
                });
            }
            let gram = um.adjoint() * um;
            let dev = crate::tensor::operator_norm(&(gram - CMat::identity(um.ncols(), um.ncols())));
            if dev > 1e-12 {
                return Err(Error::Parse(format!(
                    "isometry at level {m} has non-orthonormal columns (deviation {dev:.2e})"
                )));
            }
        }
        let dims = u.iter().map(|m| m.ncols()).collect();
        let m_max = u.len() - 1;
        Ok(SubproductSystem {
            n,
            m_max,
            u,
            dims,
            provenance: Provenance::Named("custom".into()),
            commutative: false,
            soft_cap_hit: false,
        })
    }

    /// Residual table of the subproduct law `p_l (p_m ⊗ p_{l-m}) p_l = p_l`
    /// over all splits `0 <= m <= l <= M`.
    pub fn validate(&self) -> ValidationReport {
        let mut rows = Vec::new();
        for l in 0..=self.m_max {
            for m in 0..=l {
                rows.push((m, l, self.split_residual(m, l)));
            }
        }
        ValidationReport { rows }
    }

    /// `|| p_l (p_m ⊗ p_{l-m}) p_l - p_l ||`, computed as
    /// `max_i |lambda_i - 1|` over the eigenvalues of `W W^†` with
    /// `W = U_l^† (U_m ⊗ U_{l-m})`.
    fn split_residual(&self, m: usize, l: usize) -> f64 {
        let w = self.split_compression(m, l - m);
        let d_l = self.dims[l];
        if d_l == 0 {
            return 0.0;
        }
        crate::tensor::gram_eigenvalues(&w.adjoint())
            .iter()
            .map(|&lambda| (lambda - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `W = U_{m+r}^† (U_m ⊗ U_r)`, shape `d_{m+r} x (d_m d_r)`, computed
    /// column-by-column without materializing the Kronecker factor.
    pub fn split_compression(&self, m: usize, r: usize) -> CMat {
        let l = m + r;
        let (um, ur, ul) = (&self.u[m], &self.u[r], &self.u[l]);
        let (dm, dr, dl) = (um.ncols(), ur.ncols(), ul.ncols());
        let (am, ar) = (um.nrows(), ur.nrows());
        let ur_conj = ur.conjugate();
        let mut w = CMat::zeros(dl, dm * dr);
        for col in 0..dl {
            // reshape column of U_l as an (am x ar) matrix, first leg major
            let x = DMatrix::from_fn(am, ar, |i, j| ul[(i * ar + j, col)]);
            let y = um.adjoint() * x * &ur_conj;
            for a in 0..dm {
                for b in 0..dr {
                    w[(col, a * dr + b)] = y[(a, b)].conj();
                }
            }
        }
        w
    }

    /// The ambient projection matrix `p_m = U_m U_m^†` (dense, `n^m x n^m`).
    pub fn projection(&self, m: usize) -> CMat {
        &self.u[m] * self.u[m].adjoint()
    }
}

/// Isometry from multiset coordinates onto the symmetric subspace of
/// `H^{⊗m}`: one column per sorted word, the normalized sum of its orbit.
pub fn symmetric_isometry(n: usize, m: usize) -> CMat {
    let reps = sorted_words_of_length(n, m);
    let ambient = n.pow(m as u32);
    let mut u = CMat::zeros(ambient, reps.len());
    for (c, rep) in reps.iter().enumerate() {
        let orbit = rep.orbit();
        let nf = cr(1.0 / (orbit.len() as f64).sqrt());
        for w in orbit {
            u[(w.index(n), c)] = nf;
        }
    }
    u
}

/// Named example systems.
#[derive(Clone, Debug)]
pub enum NamedSystem {
    Full,
    Symmetric,
    /// The ideal `z1*z2 - q*z2*z1` in two free variables.
    QuantumPlane { q: f64 },
    /// Monomial ideal with the given generators (free mode).
    Monomial { monomials: Vec<String> },
}

impl NamedSystem {
    pub fn parse(name: &str, q: Option<f64>, monomials: &[String]) -> Result<Self> {
        match name {
            "full" => Ok(NamedSystem::Full),
            "symmetric" => Ok(NamedSystem::Symmetric),
            "quantum_plane" => Ok(NamedSystem::QuantumPlane { q: q.unwrap_or(1.0) }),
            "monomial" => {
                if monomials.is_empty() {
                    return Err(Error::Parse("monomial system requires generators".into()));
                }
                Ok(NamedSystem::Monomial { monomials: monomials.to_vec() })
            }
            other => Err(Error::UnknownSystem(other.to_string())),
        }
    }
}

/// Dispatches a named system to the matching builder.
pub fn named_system(
    spec: &NamedSystem,
    n: usize,
    m_max: usize,
    caps: &Caps,
) -> Result<SubproductSystem> {
    match spec {
        NamedSystem::Full => SubproductSystem::build_full(n, m_max, caps),
        NamedSystem::Symmetric => SubproductSystem::build_symmetric(n, m_max, caps),
        NamedSystem::QuantumPlane { q } => {
            if n != 2 {
                return Err(Error::Parse(format!(
                    "quantum_plane is defined for n=2, got n={n}"
                )));
            }
            let gen_text = format!("z1*z2 - {}*z2*z1", q);
            let g = parse_poly(&gen_text, 2, PolyMode::Free)?;
            let mut sys = SubproductSystem::build_from_ideal(&[g], 2, m_max, caps)?;
            sys.provenance = Provenance::Named(format!("quantum_plane(q={q})"));
            Ok(sys)
        }
        NamedSystem::Monomial { monomials } => {
            let gens: Vec<HomPoly> = monomials
                .iter()
                .map(|s| parse_poly(s, n, PolyMode::Free))
                .collect::<Result<_>>()?;
            let mut sys = SubproductSystem::build_from_ideal(&gens, n, m_max, caps)?;
            sys.provenance = Provenance::Named(format!("monomial({})", monomials.join("; ")));
            Ok(sys)
        }
    }
}
