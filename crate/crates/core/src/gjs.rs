//! The graded algebras `T(H)` and `T(H) ⋊ H` of the tower, with their traces
//! computed through free cumulant kernels, and the freeness checks built on
//! them.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::algnum::AlgebraicReal;
use crate::caps::Caps;
use crate::kac::{self, IrrepData, KacAlgebra, KacError, Vector};
use crate::ncpart::{
    self, cumulants_to_moments, for_each_nc_mask, moments_to_cumulants, ClosedForm, Cumulants, FunctionTable,
    Memoized, Moments, NCPartition, PartitionError,
};
use crate::report::Report;

pub use crate::ncpart::induced_partition;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GjsError {
    #[error("word length {t} exceeds the cap {cap}")]
    CapExceeded { t: usize, cap: usize },
    #[error("invalid letter: {0}")]
    InvalidLetter(String),
    #[error(transparent)]
    Kac(#[from] KacError),
    #[error(transparent)]
    Partition(PartitionError),
}

impl From<PartitionError> for GjsError {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::CapExceeded { t, cap } => GjsError::CapExceeded { t, cap },
            other => GjsError::Partition(other),
        }
    }
}

/// A generator of `Gr₂`: an element of `H`, or the distinguished `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Letter {
    X,
    #[serde(rename = "kac")]
    Kac { coeffs: Vector },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Word {
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// 1-based positions of `X`.
    pub fn d_set(&self) -> Vec<usize> {
        self.positions(true)
    }

    /// 1-based positions of elements of `H`.
    pub fn e_set(&self) -> Vec<usize> {
        self.positions(false)
    }

    fn positions(&self, x: bool) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Letter::X) == x)
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend(other.letters.iter().cloned());
        Word { letters }
    }
}

/// `κ_t(γ¹_{p₁q₁}, …, γᵗ_{p_tq_t})`: `(δ/d_γ)^{t−1}` when all irreps agree and
/// `q₁ = p₂, …, q_t = p₁`, zero otherwise. Indices are 0-based.
pub fn kappa_matrix_units(delta: &AlgebraicReal, dims: &[usize], letters: &[(usize, usize, usize)]) -> AlgebraicReal {
    let Some(&(g, _, _)) = letters.first() else {
        return AlgebraicReal::one();
    };
    let t = letters.len();
    let cyclic = letters.iter().all(|&(h, _, _)| h == g)
        && (0..t).all(|i| letters[i].2 == letters[(i + 1) % t].1);
    if !cyclic {
        return AlgebraicReal::zero();
    }
    let ratio = delta.scale(&BigRational::new(BigInt::from(1), BigInt::from(dims[g] as i64)));
    ratio.pow(t as u32 - 1)
}

/// Letter coordinates in the matrix-unit basis.
#[derive(Debug, Clone)]
pub struct UnitCoords {
    sparse: Vec<((usize, usize, usize), AlgebraicReal)>,
    /// Per irrep, the coefficient matrix `C[p][q]` of `γ_pq`, if nonzero.
    blocks: Vec<Option<Vec<Vec<AlgebraicReal>>>>,
}

impl UnitCoords {
    fn new(irreps: &IrrepData, coeffs: &[AlgebraicReal]) -> Self {
        let dims = irreps.dims();
        let mut blocks: Vec<Option<Vec<Vec<AlgebraicReal>>>> = vec![None; dims.len()];
        let mut sparse = Vec::new();
        for (idx, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (g, p, q) = irreps.unit_label(idx);
            sparse.push(((g, p, q), c.clone()));
            let b = blocks[g].get_or_insert_with(|| vec![vec![AlgebraicReal::zero(); dims[g]]; dims[g]]);
            b[p][q] = c.clone();
        }
        Self { sparse, blocks }
    }
}

/// The cumulant functional of `T(H)` on matrix units. Implementations other
/// than [`StandardKernel`] serve as controls for the verification suites.
pub trait UnitKernel: Sync {
    fn kappa(&self, delta: &AlgebraicReal, dims: &[usize], units: &[(usize, usize, usize)]) -> AlgebraicReal;

    /// Extends [`UnitKernel::kappa`] multilinearly to arbitrary letters.
    fn block(&self, delta: &AlgebraicReal, dims: &[usize], letters: &[&UnitCoords]) -> AlgebraicReal {
        fn rec<K: UnitKernel + ?Sized>(
            k: &K,
            delta: &AlgebraicReal,
            dims: &[usize],
            letters: &[&UnitCoords],
            chosen: &mut Vec<(usize, usize, usize)>,
            coeff: AlgebraicReal,
            acc: &mut AlgebraicReal,
        ) {
            if chosen.len() == letters.len() {
                let v = k.kappa(delta, dims, chosen);
                if !v.is_zero() {
                    *acc += &coeff * &v;
                }
                return;
            }
            for (u, c) in &letters[chosen.len()].sparse {
                chosen.push(*u);
                rec(k, delta, dims, letters, chosen, &coeff * c, acc);
                chosen.pop();
            }
        }
        let mut acc = AlgebraicReal::zero();
        rec(self, delta, dims, letters, &mut Vec::new(), AlgebraicReal::one(), &mut acc);
        acc
    }
}

/// The kernel of [`kappa_matrix_units`].
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardKernel;

fn mat_mul(a: &[Vec<AlgebraicReal>], b: &[Vec<AlgebraicReal>]) -> Vec<Vec<AlgebraicReal>> {
    let d = a.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    (0..d)
                        .filter(|&l| !a[i][l].is_zero() && !b[l][j].is_zero())
                        .map(|l| &a[i][l] * &b[l][j])
                        .sum()
                })
                .collect()
        })
        .collect()
}

impl UnitKernel for StandardKernel {
    fn kappa(&self, delta: &AlgebraicReal, dims: &[usize], units: &[(usize, usize, usize)]) -> AlgebraicReal {
        kappa_matrix_units(delta, dims, units)
    }

    /// `Σ_γ (δ/d_γ)^{k−1} tr(C_γ¹ ⋯ C_γᵏ)`.
    fn block(&self, delta: &AlgebraicReal, dims: &[usize], letters: &[&UnitCoords]) -> AlgebraicReal {
        let mut acc = AlgebraicReal::zero();
        for (g, &d) in dims.iter().enumerate() {
            let Some(first) = letters.iter().map(|l| l.blocks[g].as_ref()).collect::<Option<Vec<_>>>() else {
                continue;
            };
            let mut prod = first[0].clone();
            for m in &first[1..] {
                prod = mat_mul(&prod, m);
            }
            let tr: AlgebraicReal = (0..d).map(|i| prod[i][i].clone()).sum();
            if !tr.is_zero() {
                let ratio = delta.scale(&BigRational::new(1.into(), (d as i64).into()));
                acc += &tr * &ratio.pow(letters.len() as u32 - 1);
            }
        }
        acc
    }
}

/// Adds a constant to every second-order cumulant: a deliberately wrong
/// kernel that the verification suites must reject.
#[derive(Debug, Clone)]
pub struct PerturbedKernel {
    pub shift: AlgebraicReal,
}

impl UnitKernel for PerturbedKernel {
    fn kappa(&self, delta: &AlgebraicReal, dims: &[usize], units: &[(usize, usize, usize)]) -> AlgebraicReal {
        let base = kappa_matrix_units(delta, dims, units);
        if units.len() == 2 {
            base + self.shift.clone()
        } else {
            base
        }
    }
}

/// Block cumulants of `T(H)` over a fixed alphabet of letters.
pub struct LetterCumulants<'m, K: UnitKernel> {
    delta: &'m AlgebraicReal,
    dims: Vec<usize>,
    kernel: &'m K,
    coords: Vec<UnitCoords>,
    cap: usize,
}

impl<K: UnitKernel> FunctionTable<usize> for LetterCumulants<'_, K> {
    fn max_arity(&self) -> usize {
        self.cap
    }

    fn eval(&self, args: &[usize]) -> Result<AlgebraicReal, PartitionError> {
        let letters: Vec<&UnitCoords> = args.iter().map(|&i| &self.coords[i]).collect();
        Ok(self.kernel.block(self.delta, &self.dims, &letters))
    }
}

/// `τ₁` on words over a fixed alphabet, memoized.
pub type Tau1Table<'m, K> = Moments<usize, LetterCumulants<'m, K>>;

/// A Kac algebra with its matrix units, `δ = √n`, and trace caps.
#[derive(Debug, Clone)]
pub struct GjsModel {
    k: KacAlgebra,
    irreps: IrrepData,
    delta: AlgebraicReal,
    caps: Caps,
}

fn transform_cap(caps: &Caps) -> usize {
    caps.trace.min(ncpart::MAX_TRANSFORM)
}

impl GjsModel {
    pub fn new(k: KacAlgebra, irreps: IrrepData) -> Self {
        Self::with_caps(k, irreps, Caps::default())
    }

    pub fn with_caps(k: KacAlgebra, irreps: IrrepData, caps: Caps) -> Self {
        let delta = AlgebraicReal::sqrt(k.dim() as i64);
        Self { k, irreps, delta, caps }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        kac::builtin(name).map(|(k, i)| Self::new(k, i))
    }

    pub fn algebra(&self) -> &KacAlgebra {
        &self.k
    }

    pub fn irreps(&self) -> &IrrepData {
        &self.irreps
    }

    pub fn delta(&self) -> &AlgebraicReal {
        &self.delta
    }

    pub fn caps(&self) -> &Caps {
        &self.caps
    }

    fn check_trace_cap(&self, t: usize) -> Result<(), GjsError> {
        let cap = self.caps.trace;
        if t > cap {
            return Err(GjsError::CapExceeded { t, cap });
        }
        if t > ncpart::MAX_TRANSFORM {
            return Err(GjsError::CapExceeded { t, cap: ncpart::MAX_TRANSFORM });
        }
        Ok(())
    }

    /// The matrix-unit letter `γ_pq` (0-based) as a vector in the algebra basis.
    pub fn unit_letter(&self, gamma: usize, p: usize, q: usize) -> Vector {
        self.irreps.unit(gamma, p, q).clone()
    }

    /// Block cumulants over `alphabet` for any kernel.
    pub fn letter_cumulants<'m, K: UnitKernel>(
        &'m self,
        kernel: &'m K,
        alphabet: &[Vector],
    ) -> Result<LetterCumulants<'m, K>, GjsError> {
        let coords = alphabet
            .iter()
            .map(|v| kac::to_matrix_units(&self.k, &self.irreps, v).map(|c| UnitCoords::new(&self.irreps, &c)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LetterCumulants {
            delta: &self.delta,
            dims: self.irreps.dims(),
            kernel,
            coords,
            cap: transform_cap(&self.caps),
        })
    }

    /// `τ₁` over `alphabet`, for repeated evaluation on index words.
    pub fn tau1_table<'m, K: UnitKernel>(&'m self, kernel: &'m K, alphabet: &[Vector]) -> Result<Tau1Table<'m, K>, GjsError> {
        let cum = self.letter_cumulants(kernel, alphabet)?;
        Ok(cumulants_to_moments(cum, transform_cap(&self.caps))?)
    }

    /// `τ₁(x¹ ⊗ ⋯ ⊗ xᵗ) = Σ_{π ∈ NC(t)} κ_π(x¹, …, xᵗ)`.
    pub fn tau1(&self, word: &[Vector]) -> Result<AlgebraicReal, GjsError> {
        self.tau1_with(&StandardKernel, word)
    }

    pub fn tau1_with<K: UnitKernel>(&self, kernel: &K, word: &[Vector]) -> Result<AlgebraicReal, GjsError> {
        self.check_trace_cap(word.len())?;
        let (alphabet, ids) = intern(word);
        let table = self.tau1_table(kernel, &alphabet)?;
        Ok(table.eval(&ids)?)
    }

    /// `φ^d(X(γ)^t)` for `X(γ) = (γ_pq)`: `(1/d) Σ τ₁(γ_{i₁i₂}, …, γ_{i_t i₁})`.
    pub fn matrix_moment(&self, gamma: usize, t: usize) -> Result<AlgebraicReal, GjsError> {
        self.matrix_moment_with(&StandardKernel, gamma, t)
    }

    pub fn matrix_moment_with<K: UnitKernel>(&self, kernel: &K, gamma: usize, t: usize) -> Result<AlgebraicReal, GjsError> {
        let cap = self.caps.matrix_moment;
        if t > cap {
            return Err(GjsError::CapExceeded { t, cap });
        }
        let d = self.irreps.dims()[gamma];
        let alphabet: Vec<Vector> = (0..d * d).map(|i| self.unit_letter(gamma, i / d, i % d)).collect();
        let table = self.tau1_table(kernel, &alphabet)?;
        let mut total = AlgebraicReal::zero();
        let mut idx = vec![0usize; t];
        loop {
            let word: Vec<usize> = (0..t).map(|s| idx[s] * d + idx[(s + 1) % t]).collect();
            total += table.eval(&word)?;
            let mut pos = 0;
            while pos < t && idx[pos] == d - 1 {
                idx[pos] = 0;
                pos += 1;
            }
            if pos == t {
                break;
            }
            idx[pos] += 1;
        }
        Ok(total.scale(&BigRational::new(1.into(), (d as i64).into())))
    }

    /// Cumulant-route and loop-route evaluators of `τ₂` over an alphabet in
    /// which letter 0 is `X`.
    pub fn tau2_tables(&self, kac_letters: &[Vector]) -> Result<Tau2Tables<'_>, GjsError> {
        for v in kac_letters {
            self.k.check_len(v)?;
        }
        Tau2Tables::new(self, kac_letters.to_vec())
    }

    /// `τ₂` by the cumulant kernel `κ̃`.
    pub fn tau2(&self, word: &Word) -> Result<AlgebraicReal, GjsError> {
        self.check_trace_cap(word.len())?;
        let (letters, ids) = intern_word(word);
        self.tau2_tables(&letters)?.cumulant_route(&ids)
    }

    /// `τ₂ = Σ_{π ∈ NC(D)} δ^{|D|−|π|} φ_{π̃}(letters on E)`.
    pub fn tau2_diagrammatic(&self, word: &Word) -> Result<AlgebraicReal, GjsError> {
        self.check_trace_cap(word.len())?;
        let (letters, ids) = intern_word(word);
        self.tau2_tables(&letters)?.diagrammatic_route(&ids)
    }

    /// Entry cumulants of `X(γ)` against the uniform R-cyclic pattern, and
    /// the moments of `X(γ)` against the free Poisson law, up to `t_max`.
    pub fn verify_r_cyclic<K: UnitKernel>(&self, kernel: &K, gamma: usize, t_max: usize) -> Result<Report, GjsError> {
        let cap = self.caps.cumulant_check;
        if t_max > cap {
            return Err(GjsError::CapExceeded { t: t_max, cap });
        }
        let dims = self.irreps.dims();
        let d = dims[gamma];
        let alphabet: Vec<Vector> = (0..d * d).map(|i| self.unit_letter(gamma, i / d, i % d)).collect();
        let tau1 = Memoized::new(self.tau1_table(kernel, &alphabet)?);
        let cumulants = moments_to_cumulants(&tau1, t_max)?;
        let mut report = Report::new();

        let mut entries: Result<Option<String>, String> = Ok(None);
        let mut checked = 0usize;
        'outer: for t in 1..=t_max {
            let expected_cyclic = kappa_matrix_units(&self.delta, &dims, &vec![(gamma, 0, 0); t]);
            for code in 0..(d * d).pow(t as u32) {
                let mut rest = code;
                let ids: Vec<usize> = (0..t)
                    .map(|_| {
                        let v = rest % (d * d);
                        rest /= d * d;
                        v
                    })
                    .collect();
                let cyclic = (0..t).all(|s| ids[s] % d == ids[(s + 1) % t] / d);
                let want = if cyclic { expected_cyclic.clone() } else { AlgebraicReal::zero() };
                let got = cumulants.eval(&ids)?;
                checked += 1;
                if got != want {
                    let labels: Vec<String> = ids.iter().map(|i| format!("{}{}", i / d + 1, i % d + 1)).collect();
                    entries = Err(format!("κ_{t}(x_{}) = {got}, expected {want}", labels.join(", x_")));
                    break 'outer;
                }
            }
        }
        report.record(
            "entry cumulants are uniformly R-cyclic",
            entries.map(|_| Some(format!("{checked} index patterns, orders 1..={t_max}"))),
        );

        let mut moments: Result<Option<String>, String> = Ok(Some(format!("orders 1..={t_max}")));
        let rate = self.delta.inv().expect("δ > 0");
        let mut mm = Vec::with_capacity(t_max);
        for t in 1..=t_max {
            let got = self.matrix_moment_with(kernel, gamma, t)?;
            let want = free_poisson_moment(&rate, &self.delta, t)?;
            if got != want && moments.is_ok() {
                moments = Err(format!("φ^d(X^{t}) = {got}, free Poisson gives {want}"));
            }
            mm.push(got);
        }
        report.record("matrix moments are free Poisson(1/δ, δ)", moments);

        // κ^d_t(X, …, X) = d^{t−1} α_t with α_t = (δ/d)^{t−1}
        let single = ClosedForm::new(t_max, |a: &[u8]| mm[a.len() - 1].clone());
        let kd = moments_to_cumulants(&single, t_max)?;
        let mut matrix_cumulants: Result<Option<String>, String> = Ok(None);
        for t in 1..=t_max {
            let got = kd.eval(&vec![0u8; t])?;
            let want = self.delta.pow(t as u32 - 1);
            if got != want {
                matrix_cumulants = Err(format!("κ^d_{t}(X, …, X) = {got}, expected {want}"));
                break;
            }
        }
        report.record("matrix cumulants equal d^(t-1)·α_t", matrix_cumulants);
        Ok(report)
    }

    /// Mixed cumulants of matrix units from distinct irreps vanish up to `t_max`.
    pub fn verify_freeness<K: UnitKernel>(&self, kernel: &K, t_max: usize) -> Result<Report, GjsError> {
        let cap = self.caps.cumulant_check;
        if t_max > cap {
            return Err(GjsError::CapExceeded { t: t_max, cap });
        }
        let n = self.k.dim();
        let alphabet: Vec<Vector> = (0..n)
            .map(|i| {
                let (g, p, q) = self.irreps.unit_label(i);
                self.unit_letter(g, p, q)
            })
            .collect();
        let gamma_of: Vec<usize> = (0..n).map(|i| self.irreps.unit_label(i).0).collect();
        let tau1 = Memoized::new(self.tau1_table(kernel, &alphabet)?);
        let cumulants = moments_to_cumulants(&tau1, t_max)?;
        let mut report = Report::new();
        let mut outcome: Result<Option<String>, String> = Ok(None);
        let mut checked = 0usize;
        'outer: for t in 2..=t_max {
            for code in 0..n.pow(t as u32) {
                let mut rest = code;
                let ids: Vec<usize> = (0..t)
                    .map(|_| {
                        let v = rest % n;
                        rest /= n;
                        v
                    })
                    .collect();
                if ids.iter().all(|&i| gamma_of[i] == gamma_of[ids[0]]) {
                    continue;
                }
                checked += 1;
                let v = cumulants.eval(&ids)?;
                if !v.is_zero() {
                    let labels: Vec<String> = ids
                        .iter()
                        .map(|&i| {
                            let (g, p, q) = self.irreps.unit_label(i);
                            format!("γ{g}_{}{}", p + 1, q + 1)
                        })
                        .collect();
                    outcome = Err(format!("κ_{t}({}) = {v}", labels.join(", ")));
                    break 'outer;
                }
            }
        }
        report.record(
            "mixed cumulants across irreps vanish",
            outcome.map(|_| Some(format!("{checked} mixed tuples, order cap {t_max}"))),
        );
        Ok(report)
    }
}

fn intern(word: &[Vector]) -> (Vec<Vector>, Vec<usize>) {
    let mut alphabet: Vec<Vector> = Vec::new();
    let ids = word
        .iter()
        .map(|v| match alphabet.iter().position(|a| a == v) {
            Some(i) => i,
            None => {
                alphabet.push(v.clone());
                alphabet.len() - 1
            }
        })
        .collect();
    (alphabet, ids)
}

/// Letter 0 is `X`; `H`-letters are numbered from 1.
fn intern_word(word: &Word) -> (Vec<Vector>, Vec<usize>) {
    let mut letters: Vec<Vector> = Vec::new();
    let ids = word
        .letters
        .iter()
        .map(|l| match l {
            Letter::X => 0,
            Letter::Kac { coeffs } => match letters.iter().position(|a| a == coeffs) {
                Some(i) => i + 1,
                None => {
                    letters.push(coeffs.clone());
                    letters.len()
                }
            },
        })
        .collect();
    (letters, ids)
}

type PhiRule<'m> = Box<dyn Fn(&[usize]) -> AlgebraicReal + Sync + Send + 'm>;
type PhiTable<'m> = Memoized<usize, ClosedForm<PhiRule<'m>>>;

/// `κ̃` on letters where 0 is `X`: `δ^{t−1}` on all-`X` blocks, the cumulants
/// of `φ` on all-`H` blocks, zero on mixed blocks.
pub struct TildeKernel<'m> {
    delta: AlgebraicReal,
    kac_cumulants: Cumulants<usize, PhiTable<'m>>,
}

impl FunctionTable<usize> for TildeKernel<'_> {
    fn max_arity(&self) -> usize {
        self.kac_cumulants.max_arity()
    }

    fn eval(&self, args: &[usize]) -> Result<AlgebraicReal, PartitionError> {
        let xs = args.iter().filter(|&&a| a == 0).count();
        if xs == args.len() {
            Ok(self.delta.pow(args.len() as u32 - 1))
        } else if xs == 0 {
            let shifted: Vec<usize> = args.iter().map(|a| a - 1).collect();
            self.kac_cumulants.eval(&shifted)
        } else {
            Ok(AlgebraicReal::zero())
        }
    }
}

/// Both `τ₂` routes over one alphabet, sharing the `φ`-moment memo.
pub struct Tau2Tables<'m> {
    model: &'m GjsModel,
    moments: Moments<usize, TildeKernel<'m>>,
}

impl<'m> Tau2Tables<'m> {
    fn new(model: &'m GjsModel, letters: Vec<Vector>) -> Result<Self, GjsError> {
        let k = &model.k;
        let cap = transform_cap(&model.caps);
        let rule: PhiRule<'m> = Box::new(move |ids: &[usize]| {
            let elems: Vec<Vector> = ids.iter().map(|&i| letters[i].clone()).collect();
            kac::phi_moment(k, &elems).expect("letters checked against the algebra")
        });
        let phi = Memoized::new(ClosedForm::new(cap, rule));
        let tilde = TildeKernel {
            delta: model.delta.clone(),
            kac_cumulants: moments_to_cumulants(phi, cap)?,
        };
        Ok(Self {
            model,
            moments: cumulants_to_moments(tilde, cap)?,
        })
    }

    fn phi(&self) -> &PhiTable<'m> {
        self.moments.source().kac_cumulants.source()
    }

    /// Word over `0 = X` and `1.. = H`-letters.
    pub fn cumulant_route(&self, ids: &[usize]) -> Result<AlgebraicReal, GjsError> {
        self.model.check_trace_cap(ids.len())?;
        Ok(self.moments.eval(ids)?)
    }

    pub fn diagrammatic_route(&self, ids: &[usize]) -> Result<AlgebraicReal, GjsError> {
        self.model.check_trace_cap(ids.len())?;
        let d: Vec<usize> = (1..=ids.len()).filter(|&i| ids[i - 1] == 0).collect();
        let e: Vec<usize> = (1..=ids.len()).filter(|&i| ids[i - 1] != 0).collect();
        let mut total = AlgebraicReal::zero();
        let mut failure = None;
        for_each_nc_mask(d.len(), &mut |blocks| {
            if failure.is_some() {
                return;
            }
            let classes: Vec<Vec<usize>> = blocks
                .iter()
                .map(|&b| (0..d.len()).filter(|i| b >> i & 1 == 1).map(|i| d[i]).collect())
                .collect();
            let pi = NCPartition::new(d.clone(), classes).expect("enumerated partition");
            let tilde = match induced_partition(&pi, &e) {
                Ok(t) => t,
                Err(err) => {
                    failure = Some(err);
                    return;
                }
            };
            let mut term = self.model.delta.pow((d.len() - pi.num_classes()) as u32);
            for class in tilde.classes() {
                let letters: Vec<usize> = class.iter().map(|&i| ids[i - 1] - 1).collect();
                match self.phi().eval(&letters) {
                    Ok(v) => term = term * v,
                    Err(err) => {
                        failure = Some(err);
                        return;
                    }
                }
                if term.is_zero() {
                    break;
                }
            }
            total += term;
        });
        match failure {
            Some(e) => Err(e.into()),
            None => Ok(total),
        }
    }
}

/// `Σ_{π ∈ NC(t)} rate^{|π|} jump^t`, grouping partitions by class count
/// (Narayana numbers).
pub fn free_poisson_moment(rate: &AlgebraicReal, jump: &AlgebraicReal, t: usize) -> Result<AlgebraicReal, GjsError> {
    let cap = Caps::default().free_poisson;
    if t > cap {
        return Err(GjsError::CapExceeded { t, cap });
    }
    if t == 0 {
        return Ok(AlgebraicReal::one());
    }
    let mut total = AlgebraicReal::zero();
    for classes in 1..=t {
        let count = narayana(t, classes);
        total += rate.pow(classes as u32).scale(&BigRational::from_integer(BigInt::from(count)));
    }
    Ok(total * jump.pow(t as u32))
}

/// Number of `π ∈ NC(t)` with `k` classes.
pub fn narayana(t: usize, k: usize) -> u64 {
    fn binom(n: u64, r: u64) -> u64 {
        (0..r).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
    }
    let (t, k) = (t as u64, k as u64);
    binom(t, k) * binom(t, k - 1) / t
}

/// An element of `T(H)`: basis words with coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TensorElement {
    terms: BTreeMap<Vec<usize>, AlgebraicReal>,
}

fn add_term<K: Ord + Clone>(map: &mut BTreeMap<K, AlgebraicReal>, key: K, c: AlgebraicReal) {
    if c.is_zero() {
        return;
    }
    let entry = map.entry(key.clone()).or_default();
    *entry += c;
    if entry.is_zero() {
        map.remove(&key);
    }
}

/// All basis words of `x¹ ⊗ ⋯ ⊗ xᵗ`, expanded multilinearly.
fn expand_letters(letters: &[Vector]) -> Vec<(Vec<usize>, AlgebraicReal)> {
    let mut out = vec![(Vec::new(), AlgebraicReal::one())];
    for v in letters {
        let mut next = Vec::new();
        for (w, c) in &out {
            for (i, x) in v.iter().enumerate() {
                if !x.is_zero() {
                    let mut w = w.clone();
                    w.push(i);
                    next.push((w, c * x));
                }
            }
        }
        out = next;
    }
    out
}

impl TensorElement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The empty word, the unit of `T(H)`.
    pub fn one() -> Self {
        Self::basis_word(Vec::new())
    }

    pub fn basis_word(word: Vec<usize>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(word, AlgebraicReal::one());
        Self { terms }
    }

    pub fn from_letters(letters: &[Vector]) -> Self {
        let mut t = Self::zero();
        for (w, c) in expand_letters(letters) {
            add_term(&mut t.terms, w, c);
        }
        t
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, AlgebraicReal> {
        &self.terms
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = self.clone();
        for (w, c) in &other.terms {
            add_term(&mut t.terms, w.clone(), c.clone());
        }
        t
    }

    pub fn scale(&self, c: &AlgebraicReal) -> Self {
        let mut t = Self::zero();
        for (w, x) in &self.terms {
            add_term(&mut t.terms, w.clone(), x * c);
        }
        t
    }

    /// Concatenation product.
    pub fn mul(&self, other: &Self) -> Self {
        let mut t = Self::zero();
        for (w, a) in &self.terms {
            for (v, b) in &other.terms {
                let mut word = w.clone();
                word.extend_from_slice(v);
                add_term(&mut t.terms, word, a * b);
            }
        }
        t
    }

    /// `(x¹ ⊗ ⋯ ⊗ xᵗ)† = S(xᵗ)* ⊗ ⋯ ⊗ S(x¹)*`, conjugate-linearly.
    pub fn dagger(&self, k: &KacAlgebra) -> Self {
        let images: Vec<Vector> = (0..k.dim()).map(|i| k.star(&k.antipode(&k.basis_vector(i)))).collect();
        let mut t = Self::zero();
        for (w, c) in &self.terms {
            let letters: Vec<Vector> = w.iter().rev().map(|&i| images[i].clone()).collect();
            let cc = c.conj();
            for (word, x) in expand_letters(&letters) {
                add_term(&mut t.terms, word, &cc * &x);
            }
        }
        t
    }

    /// `τ₁`, extended linearly.
    pub fn tau1(&self, model: &GjsModel) -> Result<AlgebraicReal, GjsError> {
        let n = model.k.dim();
        let alphabet: Vec<Vector> = (0..n).map(|i| model.k.basis_vector(i)).collect();
        let table = model.tau1_table(&StandardKernel, &alphabet)?;
        let mut total = AlgebraicReal::zero();
        for (w, c) in &self.terms {
            model.check_trace_cap(w.len())?;
            total += c * &table.eval(w)?;
        }
        Ok(total)
    }
}

/// An element of `T(H) ⋊ H`: terms `(w ⋊ e_a)` keyed by `(w, a)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CrossedElement {
    terms: BTreeMap<(Vec<usize>, usize), AlgebraicReal>,
}

impl CrossedElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(word: Vec<usize>, a: usize, c: AlgebraicReal) -> Self {
        let mut e = Self::zero();
        add_term(&mut e.terms, (word, a), c);
        e
    }

    /// `w ⋊ 1`.
    pub fn from_tensor(k: &KacAlgebra, w: &TensorElement) -> Self {
        let mut e = Self::zero();
        for (word, c) in &w.terms {
            for (a, u) in k.unit().iter().enumerate() {
                add_term(&mut e.terms, (word.clone(), a), c * u);
            }
        }
        e
    }

    /// `∅ ⋊ a`.
    pub fn acting(a: &[AlgebraicReal]) -> Self {
        let mut e = Self::zero();
        for (i, c) in a.iter().enumerate() {
            add_term(&mut e.terms, (Vec::new(), i), c.clone());
        }
        e
    }

    pub fn terms(&self) -> &BTreeMap<(Vec<usize>, usize), AlgebraicReal> {
        &self.terms
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = self.clone();
        for (key, c) in &other.terms {
            add_term(&mut t.terms, key.clone(), c.clone());
        }
        t
    }

    pub fn scale(&self, c: &AlgebraicReal) -> Self {
        let mut t = Self::zero();
        for (key, x) in &self.terms {
            add_term(&mut t.terms, key.clone(), x * c);
        }
        t
    }

    /// Degrees of the terms present, each `deg(w ⋊ a) = deg(w)`.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.terms.keys().map(|(w, _)| w.len()).collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

/// `(w ⋊ a)(v ⋊ b) = (w ⊗ α_{a₍₁₎}(v)) ⋊ a₍₂₎b`, with `α_a` acting on `v`
/// through the coproduct iterated into one leg per letter plus one.
pub fn crossed_multiply(k: &KacAlgebra, u: &CrossedElement, v: &CrossedElement) -> CrossedElement {
    let mut comul_cache: HashMap<(usize, usize), BTreeMap<Vec<usize>, AlgebraicReal>> = HashMap::new();
    let mut out = CrossedElement::zero();
    for ((w, a), c1) in &u.terms {
        for ((word, b), c2) in &v.terms {
            let s = word.len();
            let legs = comul_cache
                .entry((*a, s + 1))
                .or_insert_with(|| k.iterated_comul_basis(*a, s + 1));
            for (leg, c3) in legs.iter() {
                let acted: Vec<Vector> = (0..s).map(|i| k.mul(&k.basis_vector(leg[i]), &k.basis_vector(word[i]))).collect();
                let group = k.mul(&k.basis_vector(leg[s]), &k.basis_vector(*b));
                let c = &(c1 * c2) * c3;
                for (tail, x) in expand_letters(&acted) {
                    let mut full = w.clone();
                    full.extend(tail);
                    let cx = &c * &x;
                    for (g, y) in group.iter().enumerate() {
                        if !y.is_zero() {
                            add_term(&mut out.terms, (full.clone(), g), &cx * y);
                        }
                    }
                }
            }
        }
    }
    out
}

/// `(w ⋊ a)† = (1 ⋊ a*)·(w† ⋊ 1)`.
pub fn dagger(k: &KacAlgebra, u: &CrossedElement) -> CrossedElement {
    let mut out = CrossedElement::zero();
    for ((w, a), c) in &u.terms {
        let wd = TensorElement::basis_word(w.clone()).dagger(k);
        let left = CrossedElement::acting(&k.star(&k.basis_vector(*a)));
        let term = crossed_multiply(k, &left, &CrossedElement::from_tensor(k, &wd));
        out = out.add(&term.scale(&c.conj()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(name: &str) -> GjsModel {
        GjsModel::builtin(name).unwrap()
    }

    fn q(a: i64, b: i64) -> AlgebraicReal {
        AlgebraicReal::rational(a, b)
    }

    fn kac(m: &GjsModel, label: &str) -> Letter {
        Letter::Kac {
            coeffs: m.algebra().basis_vector(m.algebra().basis_index(label).unwrap()),
        }
    }

    #[test]
    fn kappa_examples() {
        let delta = AlgebraicReal::sqrt(6);
        let dims = [1, 1, 2];
        assert_eq!(
            kappa_matrix_units(&delta, &dims, &[(2, 0, 1), (2, 1, 0)]),
            &delta * &q(1, 2)
        );
        assert!(kappa_matrix_units(&delta, &dims, &[(2, 0, 1), (1, 0, 0)]).is_zero());
        assert_eq!(kappa_matrix_units(&delta, &dims, &[(0, 0, 0)]), AlgebraicReal::one());
        assert!(kappa_matrix_units(&delta, &dims, &[(2, 0, 1)]).is_zero());
        assert!(kappa_matrix_units(&delta, &dims, &[(2, 0, 1), (2, 0, 1)]).is_zero());
    }

    #[test]
    fn tau1_examples() {
        let m = model("c2");
        let k = m.algebra();
        let (e, u) = (k.basis_vector(0), k.basis_vector(1));
        assert_eq!(m.tau1(std::slice::from_ref(k.unit())).unwrap(), AlgebraicReal::one());
        assert_eq!(m.tau1(&[u.clone(), u.clone()]).unwrap(), AlgebraicReal::sqrt(2) + q(1, 1));
        assert_eq!(m.tau1(&[u, e]).unwrap(), AlgebraicReal::one());
    }

    #[test]
    fn generic_kernel_expansion_matches_trace_formula() {
        struct Plain;
        impl UnitKernel for Plain {
            fn kappa(&self, d: &AlgebraicReal, dims: &[usize], u: &[(usize, usize, usize)]) -> AlgebraicReal {
                kappa_matrix_units(d, dims, u)
            }
        }
        let m = model("dual-s3");
        let k = m.algebra();
        let word: Vec<Vector> = [0, 3, 1, 4, 3].iter().map(|&i| k.basis_vector(i)).collect();
        assert_eq!(m.tau1_with(&Plain, &word).unwrap(), m.tau1(&word).unwrap());
    }

    #[test]
    fn free_poisson_examples() {
        let one = AlgebraicReal::one();
        assert_eq!(free_poisson_moment(&one, &one, 3).unwrap(), q(5, 1));
        let delta = AlgebraicReal::sqrt(3);
        let rate = delta.inv().unwrap();
        assert_eq!(free_poisson_moment(&rate, &delta, 2).unwrap(), &delta + &one);
        assert_eq!(free_poisson_moment(&q(2, 3), &q(5, 1), 1).unwrap(), q(10, 3));
        assert!(matches!(free_poisson_moment(&one, &one, 15), Err(GjsError::CapExceeded { .. })));
    }

    #[test]
    fn narayana_counts_partitions_by_classes() {
        for t in 1..=9 {
            let mut counts = vec![0u64; t + 1];
            for p in ncpart::enumerate_nc(t).unwrap() {
                counts[p.num_classes()] += 1;
            }
            for (k, &c) in counts.iter().enumerate().skip(1) {
                assert_eq!(narayana(t, k), c);
            }
        }
    }

    #[test]
    fn matrix_moment_examples() {
        let m = model("dual-s3");
        let delta = m.delta().clone();
        let one = AlgebraicReal::one();
        assert_eq!(m.matrix_moment(2, 1).unwrap(), one);
        assert_eq!(m.matrix_moment(0, 1).unwrap(), one);
        assert_eq!(m.matrix_moment(2, 2).unwrap(), &delta + &one);
        assert_eq!(
            m.matrix_moment(2, 3).unwrap(),
            &(&delta * &delta) + &(&delta.scale(&BigRational::from_integer(3.into())) + &one)
        );
    }

    #[test]
    fn tau2_examples() {
        let m = model("c2");
        let a = kac(&m, "u");
        let phi_u = AlgebraicReal::zero();
        assert_eq!(m.tau2(&Word::new(vec![Letter::X])).unwrap(), AlgebraicReal::one());
        assert_eq!(m.tau2(&Word::new(vec![a.clone()])).unwrap(), phi_u);
        let e = kac(&m, "e");
        assert_eq!(m.tau2(&Word::new(vec![e.clone()])).unwrap(), AlgebraicReal::one());
        let xex = Word::new(vec![Letter::X, e.clone(), Letter::X]);
        assert_eq!(m.tau2(&xex).unwrap(), m.delta() + &AlgebraicReal::one());
        let xx = Word::new(vec![Letter::X, Letter::X]);
        assert_eq!(m.tau2_diagrammatic(&xx).unwrap(), m.delta() + &AlgebraicReal::one());
        assert_eq!(m.tau2(&xx).unwrap(), m.delta() + &AlgebraicReal::one());
        let ab = Word::new(vec![a.clone(), a]);
        assert_eq!(m.tau2_diagrammatic(&ab).unwrap(), AlgebraicReal::one());
        assert_eq!(m.tau2(&Word::default()).unwrap(), AlgebraicReal::one());
    }

    #[test]
    fn tau2_routes_agree_on_dual_s3_samples() {
        let m = model("dual-s3");
        let k = m.algebra();
        let letters = [
            Letter::X,
            kac(&m, "d_r"),
            kac(&m, "d_s"),
            Letter::Kac {
                coeffs: m.irreps().unit(2, 0, 1).clone(),
            },
        ];
        let _ = k;
        for code in 0..256usize {
            let word = Word::new((0..4).map(|i| letters[(code >> (2 * i)) & 3].clone()).collect());
            assert_eq!(m.tau2(&word).unwrap(), m.tau2_diagrammatic(&word).unwrap(), "{word:?}");
        }
    }

    #[test]
    fn caps_are_enforced() {
        let m = model("c2");
        let word = vec![m.algebra().basis_vector(1); 13];
        assert!(matches!(m.tau1(&word), Err(GjsError::CapExceeded { t: 13, .. })));
        let small = GjsModel::with_caps(m.algebra().clone(), m.irreps().clone(), Caps { trace: 3, ..Caps::default() });
        assert!(matches!(small.tau1(&word[..4]), Err(GjsError::CapExceeded { t: 4, cap: 3 })));
        assert!(matches!(m.matrix_moment(0, 9), Err(GjsError::CapExceeded { .. })));
    }

    #[test]
    fn crossed_product_examples() {
        let m = model("c2");
        let k = m.algebra();
        let w = CrossedElement::term(vec![1], 0, AlgebraicReal::one());
        let v = CrossedElement::term(vec![1, 0], 1, q(2, 1));
        // (w ⋊ e)(v ⋊ u) = (w ⊗ v) ⋊ u
        assert_eq!(crossed_multiply(k, &w, &v), CrossedElement::term(vec![1, 1, 0], 1, q(2, 1)));
        // (w ⋊ u)(v ⋊ u) = (w ⊗ u·v) ⋊ u² with u acting letterwise
        let wu = CrossedElement::term(vec![1], 1, AlgebraicReal::one());
        assert_eq!(crossed_multiply(k, &wu, &v), CrossedElement::term(vec![1, 0, 1], 0, q(2, 1)));
        assert_eq!(crossed_multiply(k, &wu, &v).degrees(), vec![3]);
    }

    #[test]
    fn dagger_of_tensor_reverses_and_applies_s_star() {
        let m = model("dual-c3");
        let k = m.algebra();
        let x = TensorElement::basis_word(vec![1, 2]);
        // S(δ_g)* = δ_{g⁻¹}
        assert_eq!(x.dagger(k), TensorElement::basis_word(vec![1, 2]));
        let y = TensorElement::basis_word(vec![0, 1]).scale(&AlgebraicReal::i());
        assert_eq!(y.dagger(k), TensorElement::basis_word(vec![2, 0]).scale(&(-AlgebraicReal::i())));
    }

    #[test]
    fn word_json_form() {
        let w = Word::new(vec![Letter::X, Letter::Kac { coeffs: vec![q(1, 2), q(0, 1)] }]);
        let js = serde_json::to_string(&w).unwrap();
        assert_eq!(js, r#"{"letters":[{"kind":"X"},{"kind":"kac","coeffs":[{"1":["1","2"]},{}]}]}"#);
        assert_eq!(serde_json::from_str::<Word>(&js).unwrap(), w);
        assert_eq!(w.d_set(), vec![1]);
        assert_eq!(w.e_set(), vec![2]);
    }
}
