//! Finite-dimensional Kac algebras given by structure constants, their
//! matrix-unit bases, exact axiom validation, and the JSON spec format.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::algnum::{AlgError, AlgebraicReal};
use crate::report::Report;

/// Coefficient vector in the basis of the algebra.
pub type Vector = Vec<AlgebraicReal>;
type Matrix = Vec<Vec<AlgebraicReal>>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KacError {
    #[error("not a group table: {0}")]
    InvalidGroup(String),
    #[error("invalid irreducible representations: {0}")]
    InvalidIrreps(String),
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix units do not form a basis")]
    SingularBasis,
    #[error("spec fails validation: {0}")]
    Validation(String),
    #[error("malformed spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Alg(#[from] AlgError),
}

fn zeros(n: usize) -> Vector {
    vec![AlgebraicReal::zero(); n]
}

fn unit_vector(n: usize, i: usize) -> Vector {
    let mut v = zeros(n);
    v[i] = AlgebraicReal::one();
    v
}

fn axpy(acc: &mut [AlgebraicReal], c: &AlgebraicReal, v: &[AlgebraicReal]) {
    if c.is_zero() {
        return;
    }
    for (a, x) in acc.iter_mut().zip(v) {
        if !x.is_zero() {
            *a += c * x;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KacAlgebra {
    name: String,
    basis: Vec<String>,
    /// `mult[i][j]` is `e_i e_j`.
    mult: Vec<Vec<Vector>>,
    unit: Vector,
    /// `comult[k][i][j]` is the coefficient of `e_i ⊗ e_j` in `Δ(e_k)`.
    comult: Vec<Matrix>,
    counit: Vector,
    /// `antipode[j]` is `S(e_j)`.
    antipode: Vec<Vector>,
    /// `star[j]` is `e_j*`.
    star: Vec<Vector>,
    phi: Vector,
    integral: Vector,
}

/// One irreducible representation: `units[p][q]` is `γ_{p+1,q+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Irrep {
    pub dim: usize,
    pub units: Vec<Vec<Vector>>,
}

/// The matrix-unit basis `{γ_pq}` and its inverse change of basis.
#[derive(Debug, Clone, PartialEq)]
pub struct IrrepData {
    irreps: Vec<Irrep>,
    offsets: Vec<usize>,
    /// Columns are the matrix units expressed in the algebra basis.
    inverse: Matrix,
}

impl KacAlgebra {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[String] {
        &self.basis
    }

    pub fn basis_index(&self, label: &str) -> Option<usize> {
        self.basis.iter().position(|b| b == label)
    }

    pub fn basis_vector(&self, i: usize) -> Vector {
        unit_vector(self.dim(), i)
    }

    pub fn unit(&self) -> &Vector {
        &self.unit
    }

    pub fn integral(&self) -> &Vector {
        &self.integral
    }

    pub fn check_len(&self, v: &[AlgebraicReal]) -> Result<(), KacError> {
        if v.len() == self.dim() {
            Ok(())
        } else {
            Err(KacError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            })
        }
    }

    pub fn mul(&self, a: &[AlgebraicReal], b: &[AlgebraicReal]) -> Vector {
        let mut out = zeros(self.dim());
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if !bj.is_zero() {
                    axpy(&mut out, &(ai * bj), &self.mult[i][j]);
                }
            }
        }
        out
    }

    /// `(e_i ⊗ e_j) ↦ coefficient`, as a dense matrix.
    pub fn comul(&self, a: &[AlgebraicReal]) -> Matrix {
        let n = self.dim();
        let mut out = vec![zeros(n); n];
        for (k, ak) in a.iter().enumerate() {
            if ak.is_zero() {
                continue;
            }
            for i in 0..n {
                axpy(&mut out[i], ak, &self.comult[k][i]);
            }
        }
        out
    }

    pub fn counit(&self, a: &[AlgebraicReal]) -> AlgebraicReal {
        a.iter().zip(&self.counit).map(|(x, e)| x * e).sum()
    }

    pub fn antipode(&self, a: &[AlgebraicReal]) -> Vector {
        let mut out = zeros(self.dim());
        for (j, aj) in a.iter().enumerate() {
            axpy(&mut out, aj, &self.antipode[j]);
        }
        out
    }

    /// Conjugate-linear involution.
    pub fn star(&self, a: &[AlgebraicReal]) -> Vector {
        let mut out = zeros(self.dim());
        for (j, aj) in a.iter().enumerate() {
            axpy(&mut out, &aj.conj(), &self.star[j]);
        }
        out
    }

    pub fn phi(&self, a: &[AlgebraicReal]) -> AlgebraicReal {
        a.iter().zip(&self.phi).map(|(x, p)| x * p).sum()
    }

    /// Images of the basis under `Δ^{(m)}`, the coproduct iterated into `m`
    /// legs, as sparse maps from leg indices to coefficients.
    pub fn iterated_comul_basis(&self, k: usize, legs: usize) -> BTreeMap<Vec<usize>, AlgebraicReal> {
        let n = self.dim();
        let mut cur: BTreeMap<Vec<usize>, AlgebraicReal> = BTreeMap::new();
        cur.insert(vec![k], AlgebraicReal::one());
        for _ in 1..legs.max(1) {
            let mut next: BTreeMap<Vec<usize>, AlgebraicReal> = BTreeMap::new();
            for (idx, c) in &cur {
                let last = *idx.last().unwrap();
                for i in 0..n {
                    for j in 0..n {
                        let d = &self.comult[last][i][j];
                        if d.is_zero() {
                            continue;
                        }
                        let mut key = idx[..idx.len() - 1].to_vec();
                        key.push(i);
                        key.push(j);
                        *next.entry(key).or_default() += c * d;
                    }
                }
            }
            next.retain(|_, v| !v.is_zero());
            cur = next;
        }
        cur
    }
}

/// `φ(a₁a₂⋯a_k)`.
pub fn phi_moment(k: &KacAlgebra, elements: &[Vector]) -> Result<AlgebraicReal, KacError> {
    let Some((first, rest)) = elements.split_first() else {
        return Err(KacError::Spec("phi_moment needs at least one element".into()));
    };
    k.check_len(first)?;
    let mut acc = first.clone();
    for e in rest {
        k.check_len(e)?;
        acc = k.mul(&acc, e);
    }
    Ok(k.phi(&acc))
}

fn invert(m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let mut a: Vec<Vec<AlgebraicReal>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend(unit_vector(n, i));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let p = a[col][col].inv().ok()?;
        for x in a[col].iter_mut() {
            *x = &*x * &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    if !y.is_zero() {
                        *x -= &(&f * y);
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

impl IrrepData {
    pub fn new(k: &KacAlgebra, irreps: Vec<Irrep>) -> Result<Self, KacError> {
        let n = k.dim();
        let mut offsets = Vec::with_capacity(irreps.len());
        let mut total = 0;
        for g in &irreps {
            if g.dim == 0 || g.units.len() != g.dim || g.units.iter().any(|r| r.len() != g.dim) {
                return Err(KacError::InvalidIrreps(format!(
                    "unit table does not match dimension {}",
                    g.dim
                )));
            }
            for v in g.units.iter().flatten() {
                k.check_len(v)?;
            }
            offsets.push(total);
            total += g.dim * g.dim;
        }
        if total != n {
            return Err(KacError::InvalidIrreps(format!(
                "sum of squared dimensions is {total}, algebra has dimension {n}"
            )));
        }
        // column (γ, p, q) holds γ_pq in the algebra basis
        let mut forward = vec![zeros(n); n];
        for (g, &off) in irreps.iter().zip(&offsets) {
            for p in 0..g.dim {
                for q in 0..g.dim {
                    for (row, x) in g.units[p][q].iter().enumerate() {
                        forward[row][off + p * g.dim + q] = x.clone();
                    }
                }
            }
        }
        let inverse = invert(&forward).ok_or(KacError::SingularBasis)?;
        Ok(Self {
            irreps,
            offsets,
            inverse,
        })
    }

    pub fn irreps(&self) -> &[Irrep] {
        &self.irreps
    }

    pub fn dims(&self) -> Vec<usize> {
        self.irreps.iter().map(|g| g.dim).collect()
    }

    /// Position of `γ_pq` (0-based `p`, `q`) in the flattened matrix-unit basis.
    pub fn unit_index(&self, gamma: usize, p: usize, q: usize) -> usize {
        self.offsets[gamma] + p * self.irreps[gamma].dim + q
    }

    /// Inverse of [`IrrepData::unit_index`].
    pub fn unit_label(&self, idx: usize) -> (usize, usize, usize) {
        let gamma = self.offsets.iter().rposition(|&o| o <= idx).unwrap();
        let d = self.irreps[gamma].dim;
        let r = idx - self.offsets[gamma];
        (gamma, r / d, r % d)
    }

    pub fn unit(&self, gamma: usize, p: usize, q: usize) -> &Vector {
        &self.irreps[gamma].units[p][q]
    }

    pub fn from_matrix_units(&self, coeffs: &[AlgebraicReal]) -> Vector {
        let n = coeffs.len();
        let mut out = zeros(n);
        for (idx, c) in coeffs.iter().enumerate() {
            let (g, p, q) = self.unit_label(idx);
            axpy(&mut out, c, self.unit(g, p, q));
        }
        out
    }
}

/// Coordinates of `element` in the matrix-unit basis.
pub fn to_matrix_units(
    k: &KacAlgebra,
    irreps: &IrrepData,
    element: &[AlgebraicReal],
) -> Result<Vector, KacError> {
    k.check_len(element)?;
    let n = k.dim();
    Ok((0..n)
        .map(|r| {
            irreps.inverse[r]
                .iter()
                .zip(element)
                .filter(|(_, x)| !x.is_zero())
                .map(|(m, x)| m * x)
                .sum()
        })
        .collect())
}

/// Validates a multiplication table of a finite group and returns the
/// identity and the inverse map.
fn check_group(table: &[Vec<usize>]) -> Result<(usize, Vec<usize>), KacError> {
    let n = table.len();
    if n == 0 {
        return Err(KacError::InvalidGroup("empty table".into()));
    }
    if table.iter().any(|r| r.len() != n || r.iter().any(|&x| x >= n)) {
        return Err(KacError::InvalidGroup("table is not square over 0..n".into()));
    }
    let e = (0..n)
        .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
        .ok_or_else(|| KacError::InvalidGroup("no identity".into()))?;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if table[table[a][b]][c] != table[a][table[b][c]] {
                    return Err(KacError::InvalidGroup(format!("not associative at ({a},{b},{c})")));
                }
            }
        }
    }
    let inv = (0..n)
        .map(|g| {
            (0..n)
                .find(|&h| table[g][h] == e && table[h][g] == e)
                .ok_or_else(|| KacError::InvalidGroup(format!("{g} has no inverse")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((e, inv))
}

/// `ℂ[G]`: group-like basis, `φ(g) = [g = e]`, matrix units the group
/// elements themselves.
pub fn group_algebra(
    name: &str,
    labels: &[&str],
    table: &[Vec<usize>],
) -> Result<(KacAlgebra, IrrepData), KacError> {
    let (e, inv) = check_group(table)?;
    let n = table.len();
    if labels.len() != n {
        return Err(KacError::Spec("one label per group element required".into()));
    }
    let mut comult = Vec::with_capacity(n);
    for g in 0..n {
        let mut m = vec![zeros(n); n];
        m[g][g] = AlgebraicReal::one();
        comult.push(m);
    }
    let k = KacAlgebra {
        name: name.to_string(),
        basis: labels.iter().map(|s| s.to_string()).collect(),
        mult: (0..n)
            .map(|a| (0..n).map(|b| unit_vector(n, table[a][b])).collect())
            .collect(),
        unit: unit_vector(n, e),
        comult,
        counit: vec![AlgebraicReal::one(); n],
        antipode: (0..n).map(|g| unit_vector(n, inv[g])).collect(),
        star: (0..n).map(|g| unit_vector(n, inv[g])).collect(),
        phi: unit_vector(n, e),
        integral: vec![AlgebraicReal::rational(1, n as i64); n],
    };
    let irreps = (0..n)
        .map(|g| Irrep {
            dim: 1,
            units: vec![vec![unit_vector(n, g)]],
        })
        .collect();
    let data = IrrepData::new(&k, irreps)?;
    Ok((k, data))
}

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let d = a.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|l| &a[i][l] * &b[l][j]).sum())
                .collect()
        })
        .collect()
}

/// Functions on `G` with basis `{δ_g}`; `reps[γ][g]` is the unitary matrix of
/// group element `g` in irrep `γ`.
pub fn dual_group_algebra(
    name: &str,
    labels: &[&str],
    table: &[Vec<usize>],
    reps: &[Vec<Matrix>],
) -> Result<(KacAlgebra, IrrepData), KacError> {
    let (e, inv) = check_group(table)?;
    let n = table.len();
    if labels.len() != n {
        return Err(KacError::Spec("one label per group element required".into()));
    }
    for (gi, rep) in reps.iter().enumerate() {
        if rep.len() != n {
            return Err(KacError::InvalidIrreps(format!("irrep {gi} lacks some group elements")));
        }
        let d = rep[0].len();
        for (g, m) in rep.iter().enumerate() {
            if m.len() != d || m.iter().any(|r| r.len() != d) {
                return Err(KacError::InvalidIrreps(format!("irrep {gi}: matrix of {g} is not {d}×{d}")));
            }
            let adjoint: Matrix = (0..d)
                .map(|i| (0..d).map(|j| m[j][i].conj()).collect())
                .collect();
            let id: Matrix = (0..d).map(|i| unit_vector(d, i)).collect();
            if mat_mul(&adjoint, m) != id {
                return Err(KacError::InvalidIrreps(format!("irrep {gi}: matrix of {g} is not unitary")));
            }
        }
        for a in 0..n {
            for b in 0..n {
                if mat_mul(&rep[a], &rep[b]) != rep[table[a][b]] {
                    return Err(KacError::InvalidIrreps(format!(
                        "irrep {gi} is not a homomorphism at ({a},{b})"
                    )));
                }
            }
        }
    }
    let mut comult = Vec::with_capacity(n);
    for g in 0..n {
        let mut m = vec![zeros(n); n];
        for a in 0..n {
            for b in 0..n {
                if table[a][b] == g {
                    m[a][b] = AlgebraicReal::one();
                }
            }
        }
        comult.push(m);
    }
    let k = KacAlgebra {
        name: name.to_string(),
        basis: labels.iter().map(|s| s.to_string()).collect(),
        mult: (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| if a == b { unit_vector(n, a) } else { zeros(n) })
                    .collect()
            })
            .collect(),
        unit: vec![AlgebraicReal::one(); n],
        comult,
        counit: unit_vector(n, e),
        antipode: (0..n).map(|g| unit_vector(n, inv[g])).collect(),
        star: (0..n).map(|g| unit_vector(n, g)).collect(),
        phi: vec![AlgebraicReal::rational(1, n as i64); n],
        integral: unit_vector(n, e),
    };
    let irreps = reps
        .iter()
        .map(|rep| {
            let d = rep[0].len();
            Irrep {
                dim: d,
                units: (0..d)
                    .map(|p| (0..d).map(|q| rep.iter().map(|m| m[p][q].clone()).collect()).collect())
                    .collect(),
            }
        })
        .collect();
    let data = IrrepData::new(&k, irreps)?;
    Ok((k, data))
}

pub fn cyclic_table(m: usize) -> Vec<Vec<usize>> {
    (0..m).map(|a| (0..m).map(|b| (a + b) % m).collect()).collect()
}

/// `s^a r^b` is element `3a + b`.
pub fn s3_table() -> Vec<Vec<usize>> {
    let split = |x: usize| (x / 3, x % 3);
    (0..6)
        .map(|x| {
            (0..6)
                .map(|y| {
                    let ((a, b), (c, d)) = (split(x), split(y));
                    let b = if c == 1 { (3 - b) % 3 } else { b };
                    3 * ((a + c) % 2) + (b + d) % 3
                })
                .collect()
        })
        .collect()
}

/// A primitive `m`-th root of unity, for the orders with quadratic roots.
fn root_of_unity(m: usize) -> Option<AlgebraicReal> {
    let half = AlgebraicReal::rational(1, 2);
    let s = AlgebraicReal::sqrt(-3);
    match m {
        1 => Some(AlgebraicReal::one()),
        2 => Some(AlgebraicReal::from_integer(-1)),
        3 => Some(-&half + &half * &s),
        4 => Some(AlgebraicReal::i()),
        6 => Some(&half + &(&half * &s)),
        _ => None,
    }
}

/// The characters `g^j ↦ ω^{jk}` of `ℤ/m`, as 1×1 unitary matrices.
pub fn cyclic_characters(m: usize) -> Result<Vec<Vec<Matrix>>, KacError> {
    let w = root_of_unity(m).ok_or_else(|| {
        KacError::InvalidIrreps(format!("no built-in characters for ℤ/{m}"))
    })?;
    Ok((0..m)
        .map(|k| (0..m).map(|j| vec![vec![w.pow((j * k % m) as u32)]]).collect())
        .collect())
}

/// Trivial, sign and the 2-dimensional rotation-reflection representation.
pub fn s3_irreps() -> Vec<Vec<Matrix>> {
    let h = AlgebraicReal::rational(1, 2);
    let r3 = &AlgebraicReal::sqrt(3) * &h;
    let rot = vec![vec![-&h, -&r3], vec![r3.clone(), -&h]];
    let refl = vec![
        vec![AlgebraicReal::one(), AlgebraicReal::zero()],
        vec![AlgebraicReal::zero(), AlgebraicReal::from_integer(-1)],
    ];
    let id = vec![
        vec![AlgebraicReal::one(), AlgebraicReal::zero()],
        vec![AlgebraicReal::zero(), AlgebraicReal::one()],
    ];
    let mut two = Vec::with_capacity(6);
    for x in 0..6 {
        let (a, b) = (x / 3, x % 3);
        let mut m = if a == 1 { refl.clone() } else { id.clone() };
        for _ in 0..b {
            m = mat_mul(&m, &rot);
        }
        two.push(m);
    }
    let one = |v: i64| vec![vec![AlgebraicReal::from_integer(v)]];
    vec![
        (0..6).map(|_| one(1)).collect(),
        (0..6).map(|x| one(if x / 3 == 1 { -1 } else { 1 })).collect(),
        two,
    ]
}

const S3_LABELS: [&str; 6] = ["e", "r", "r2", "s", "sr", "sr2"];

fn cyclic_labels(m: usize) -> Vec<String> {
    if m == 2 {
        return vec!["e".into(), "u".into()];
    }
    (0..m)
        .map(|j| match j {
            0 => "e".to_string(),
            1 => "g".to_string(),
            _ => format!("g{j}"),
        })
        .collect()
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 8] = ["c2", "c3", "c4", "s3", "dual-c2", "dual-c3", "dual-c4", "dual-s3"];

/// Built-in examples: group algebras of `ℤ/2, ℤ/3, ℤ/4, S₃` and their duals.
pub fn builtin(name: &str) -> Option<(KacAlgebra, IrrepData)> {
    let built = match name {
        "s3" => group_algebra(name, &S3_LABELS, &s3_table()),
        "dual-s3" => {
            let labels: Vec<String> = S3_LABELS.iter().map(|l| format!("d_{l}")).collect();
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            dual_group_algebra(name, &refs, &s3_table(), &s3_irreps())
        }
        _ => {
            let (dual, rest) = match name.strip_prefix("dual-") {
                Some(r) => (true, r),
                None => (false, name),
            };
            let m: usize = rest.strip_prefix('c')?.parse().ok()?;
            if !(2..=4).contains(&m) {
                return None;
            }
            let labels = cyclic_labels(m);
            if dual {
                let labels: Vec<String> = labels.iter().map(|l| format!("d_{l}")).collect();
                let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
                cyclic_characters(m).and_then(|c| dual_group_algebra(name, &refs, &cyclic_table(m), &c))
            } else {
                let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
                group_algebra(name, &refs, &cyclic_table(m))
            }
        }
    };
    Some(built.expect("built-in data is valid"))
}

/// Runs `f` over every index tuple, reporting the first failure.
fn check_all<I: IntoIterator>(items: I, mut f: impl FnMut(I::Item) -> Option<String>) -> Result<Option<String>, String> {
    for it in items {
        if let Some(w) = f(it) {
            return Err(w);
        }
    }
    Ok(None)
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (0..n).map(move |j| (i, j)))
}

fn triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
}

/// Tensor products as sparse maps over basis index tuples.
type Tensor = BTreeMap<Vec<usize>, AlgebraicReal>;

fn tensor_from_matrix(m: &Matrix) -> Tensor {
    let mut t = Tensor::new();
    for (i, row) in m.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if !x.is_zero() {
                t.insert(vec![i, j], x.clone());
            }
        }
    }
    t
}

fn add_scaled(t: &mut Tensor, key: Vec<usize>, c: AlgebraicReal) {
    if c.is_zero() {
        return;
    }
    let e = t.entry(key.clone()).or_default();
    *e += c;
    if e.is_zero() {
        t.remove(&key);
    }
}

/// Every structural axiom, checked exactly over basis elements.
pub fn validate(k: &KacAlgebra) -> Report {
    let n = k.dim();
    let e = |i: usize| k.basis_vector(i);
    let mut r = Report::new();
    let lbl = |i: usize| k.basis[i].clone();

    r.record(
        "associativity",
        check_all(triples(n), |(a, b, c)| {
            let lhs = k.mul(&k.mul(&e(a), &e(b)), &e(c));
            let rhs = k.mul(&e(a), &k.mul(&e(b), &e(c)));
            (lhs != rhs).then(|| format!("({}·{})·{} ≠ {}·({}·{})", lbl(a), lbl(b), lbl(c), lbl(a), lbl(b), lbl(c)))
        }),
    );
    r.record(
        "unit",
        check_all(0..n, |a| {
            (k.mul(&k.unit, &e(a)) != e(a) || k.mul(&e(a), &k.unit) != e(a)).then(|| format!("1·{0} or {0}·1 ≠ {0}", lbl(a)))
        }),
    );
    r.record(
        "coassociativity",
        check_all(0..n, |a| {
            let d = k.comul(&e(a));
            let mut left = Tensor::new();
            let mut right = Tensor::new();
            for (i, j) in pairs(n) {
                if d[i][j].is_zero() {
                    continue;
                }
                let di = k.comul(&e(i));
                let dj = k.comul(&e(j));
                for (x, y) in pairs(n) {
                    add_scaled(&mut left, vec![x, y, j], &d[i][j] * &di[x][y]);
                    add_scaled(&mut right, vec![i, x, y], &d[i][j] * &dj[x][y]);
                }
            }
            (left != right).then(|| format!("(Δ⊗id)Δ({0}) ≠ (id⊗Δ)Δ({0})", lbl(a)))
        }),
    );
    r.record(
        "counit",
        check_all(0..n, |a| {
            let d = k.comul(&e(a));
            let mut left = zeros(n);
            let mut right = zeros(n);
            for (i, j) in pairs(n) {
                left[j] += &d[i][j] * &k.counit[i];
                right[i] += &d[i][j] * &k.counit[j];
            }
            (left != e(a) || right != e(a)).then(|| format!("counit law fails on {}", lbl(a)))
        }),
    );
    r.record(
        "comultiplication multiplicative",
        (|| {
            let unit = tensor_from_matrix(&k.comul(&k.unit));
            let mut one_one = Tensor::new();
            for (x, y) in pairs(n) {
                add_scaled(&mut one_one, vec![x, y], &k.unit[x] * &k.unit[y]);
            }
            if unit != one_one {
                return Err("Δ(1) ≠ 1⊗1".to_string());
            }
            check_all(pairs(n), |(a, b)| {
                let lhs = tensor_from_matrix(&k.comul(&k.mul(&e(a), &e(b))));
                let (da, db) = (k.comul(&e(a)), k.comul(&e(b)));
                let mut rhs = Tensor::new();
                for (i, j) in pairs(n) {
                    if da[i][j].is_zero() {
                        continue;
                    }
                    for (x, y) in pairs(n) {
                        if db[x][y].is_zero() {
                            continue;
                        }
                        let c = &da[i][j] * &db[x][y];
                        let (left, right) = (&k.mult[i][x], &k.mult[j][y]);
                        for (p, lp) in left.iter().enumerate() {
                            if lp.is_zero() {
                                continue;
                            }
                            for (q, rq) in right.iter().enumerate() {
                                if !rq.is_zero() {
                                    add_scaled(&mut rhs, vec![p, q], &(&c * lp) * rq);
                                }
                            }
                        }
                    }
                }
                (lhs != rhs).then(|| format!("Δ({0}·{1}) ≠ Δ({0})Δ({1})", lbl(a), lbl(b)))
            })
        })(),
    );
    r.record(
        "counit multiplicative",
        (|| {
            if !k.counit(&k.unit).is_one() {
                return Err("ε(1) ≠ 1".into());
            }
            check_all(pairs(n), |(a, b)| {
                (k.counit(&k.mul(&e(a), &e(b))) != &k.counit[a] * &k.counit[b])
                    .then(|| format!("ε({0}·{1}) ≠ ε({0})ε({1})", lbl(a), lbl(b)))
            })
        })(),
    );
    r.record(
        "antipode law",
        check_all(0..n, |a| {
            let d = k.comul(&e(a));
            let mut left = zeros(n);
            let mut right = zeros(n);
            for (i, j) in pairs(n) {
                if d[i][j].is_zero() {
                    continue;
                }
                axpy(&mut left, &d[i][j], &k.mul(&k.antipode[i], &e(j)));
                axpy(&mut right, &d[i][j], &k.mul(&e(i), &k.antipode[j]));
            }
            let target: Vector = k.unit.iter().map(|u| u * &k.counit[a]).collect();
            (left != target || right != target).then(|| format!("μ(S⊗id)Δ({}) ≠ ε·1", lbl(a)))
        }),
    );
    r.record(
        "antipode involutive",
        check_all(0..n, |a| (k.antipode(&k.antipode(&e(a))) != e(a)).then(|| format!("S²({0}) ≠ {0}", lbl(a)))),
    );
    r.record(
        "antipode anti-comultiplicative",
        check_all(0..n, |a| {
            let lhs = tensor_from_matrix(&k.comul(&k.antipode[a]));
            let d = k.comul(&e(a));
            let mut rhs = Tensor::new();
            for (i, j) in pairs(n) {
                if d[i][j].is_zero() {
                    continue;
                }
                for (x, sx) in k.antipode[j].iter().enumerate() {
                    for (y, sy) in k.antipode[i].iter().enumerate() {
                        add_scaled(&mut rhs, vec![x, y], &(&d[i][j] * sx) * sy);
                    }
                }
            }
            (lhs != rhs).then(|| format!("ΔS({0}) ≠ (S⊗S)σΔ({0})", lbl(a)))
        }),
    );
    r.record(
        "star involutive",
        check_all(0..n, |a| (k.star(&k.star(&e(a))) != e(a)).then(|| format!("({0}*)* ≠ {0}", lbl(a)))),
    );
    r.record(
        "star antimultiplicative",
        check_all(pairs(n), |(a, b)| {
            (k.star(&k.mul(&e(a), &e(b))) != k.mul(&k.star(&e(b)), &k.star(&e(a))))
                .then(|| format!("({0}·{1})* ≠ {1}*·{0}*", lbl(a), lbl(b)))
        }),
    );
    r.record(
        "star comultiplicative",
        check_all(0..n, |a| {
            let lhs = tensor_from_matrix(&k.comul(&k.star[a]));
            let d = k.comul(&e(a));
            let mut rhs = Tensor::new();
            for (i, j) in pairs(n) {
                if d[i][j].is_zero() {
                    continue;
                }
                let c = d[i][j].conj();
                for (x, sx) in k.star[i].iter().enumerate() {
                    for (y, sy) in k.star[j].iter().enumerate() {
                        add_scaled(&mut rhs, vec![x, y], &(&c * sx) * sy);
                    }
                }
            }
            (lhs != rhs).then(|| format!("Δ({0}*) ≠ Δ({0})*", lbl(a)))
        }),
    );
    r.record(
        "antipode commutes with star",
        check_all(0..n, |a| {
            (k.star(&k.antipode(&k.star(&k.antipode(&e(a))))) != e(a))
                .then(|| format!("S(S({0})*)* ≠ {0}", lbl(a)))
        }),
    );
    r.record(
        "phi unital",
        if k.phi(&k.unit).is_one() { Ok(None) } else { Err(format!("φ(1) = {}", k.phi(&k.unit))) },
    );
    r.record(
        "phi tracial",
        check_all(pairs(n), |(a, b)| {
            (k.phi(&k.mult[a][b]) != k.phi(&k.mult[b][a])).then(|| format!("φ({0}{1}) ≠ φ({1}{0})", lbl(a), lbl(b)))
        }),
    );
    r.record(
        "phi is the normalized left-regular trace",
        check_all(0..n, |a| {
            let tr: AlgebraicReal = (0..n).map(|j| k.mult[a][j][j].clone()).sum();
            let q = BigRational::new(1.into(), (n as i64).into());
            (k.phi(&e(a)) != tr.scale(&q)).then(|| format!("φ({0}) ≠ Tr(L_{0})/n", lbl(a)))
        }),
    );
    r.record(
        "phi positive on basis",
        check_all(0..n, |a| {
            let v = k.phi(&k.mul(&k.star(&e(a)), &e(a)));
            (!v.is_positive()).then(|| format!("φ({0}*{0}) = {v}", lbl(a)))
        }),
    );
    r.record(
        "integral absorbs: a·h = ε(a)h",
        check_all(0..n, |a| {
            let target: Vector = k.integral.iter().map(|x| x * &k.counit[a]).collect();
            (k.mul(&e(a), &k.integral) != target || k.mul(&k.integral, &e(a)) != target)
                .then(|| format!("{}·h ≠ ε·h", lbl(a)))
        }),
    );
    r.record(
        "integral normalized: ε(h) = 1",
        if k.counit(&k.integral).is_one() { Ok(None) } else { Err(format!("ε(h) = {}", k.counit(&k.integral))) },
    );
    let expected = AlgebraicReal::rational(1, n as i64);
    let got = k.phi(&k.integral);
    r.record(
        "phi(h) = 1/n",
        if got == expected { Ok(None) } else { Err(format!("φ(h) = {got}")) },
    );
    r
}

/// Checks of the matrix-unit basis against the algebra.
pub fn validate_irreps(k: &KacAlgebra, irreps: &IrrepData) -> Report {
    let mut r = Report::new();
    let total: usize = irreps.dims().iter().map(|d| d * d).sum();
    r.record(
        "sum of squared dimensions",
        if total == k.dim() { Ok(None) } else { Err(format!("Σd² = {total}, n = {}", k.dim())) },
    );
    let units: Vec<(usize, usize, usize)> = (0..k.dim()).map(|i| irreps.unit_label(i)).collect();
    r.record(
        "unit adjoint: γpq* = S(γqp)",
        check_all(units.iter(), |&(g, p, q)| {
            (k.star(irreps.unit(g, p, q)) != k.antipode(irreps.unit(g, q, p)))
                .then(|| format!("irrep {g}, p={}, q={}", p + 1, q + 1))
        }),
    );
    r.record(
        "orthonormality of √d·γpq",
        check_all(units.iter().flat_map(|a| units.iter().map(move |b| (*a, *b))), |((g, p, q), (h, s, t))| {
            let v = k.phi(&k.mul(&k.star(irreps.unit(h, s, t)), irreps.unit(g, p, q)));
            let d = irreps.irreps[g].dim as i64;
            let want = if (g, p, q) == (h, s, t) {
                AlgebraicReal::rational(1, d)
            } else {
                AlgebraicReal::zero()
            };
            (v != want).then(|| format!("φ(({h},{s},{t})*·({g},{p},{q})) = {v}"))
        }),
    );
    r.record(
        "change of basis roundtrip",
        check_all(0..k.dim(), |i| {
            let e = k.basis_vector(i);
            let back = to_matrix_units(k, irreps, &e).map(|c| irreps.from_matrix_units(&c));
            (back.as_ref() != Ok(&e)).then(|| format!("basis element {}", k.basis[i]))
        }),
    );
    r
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrrepJson {
    pub dim: usize,
    /// `[p, q, coeffs]` with 1-based `p, q`.
    pub units: Vec<(usize, usize, Vector)>,
}

/// On-disk form of a Kac algebra together with its matrix units. Basis
/// indices are 0-based; linear maps are lists of basis images.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KacSpec {
    pub name: String,
    pub dim: usize,
    pub basis: Vec<String>,
    /// `[i, j, e_i e_j]`; omitted products are zero.
    pub mult: Vec<(usize, usize, Vector)>,
    /// `[k, [[i, j, c], …]]`: `Δ(e_k) = Σ c e_i ⊗ e_j`.
    pub comult: Vec<(usize, Vec<(usize, usize, AlgebraicReal)>)>,
    pub counit: Vector,
    pub antipode: Vec<Vector>,
    pub star: Vec<Vector>,
    pub phi: Vector,
    pub unit: Vector,
    pub integral: Vector,
    pub irreps: Vec<IrrepJson>,
}

impl KacSpec {
    pub fn from_algebra(k: &KacAlgebra, irreps: &IrrepData) -> Self {
        let n = k.dim();
        let mult = pairs(n)
            .filter(|&(i, j)| k.mult[i][j].iter().any(|x| !x.is_zero()))
            .map(|(i, j)| (i, j, k.mult[i][j].clone()))
            .collect();
        let comult = (0..n)
            .map(|c| {
                let entries = pairs(n)
                    .filter(|&(i, j)| !k.comult[c][i][j].is_zero())
                    .map(|(i, j)| (i, j, k.comult[c][i][j].clone()))
                    .collect();
                (c, entries)
            })
            .collect();
        let irreps = irreps
            .irreps
            .iter()
            .map(|g| IrrepJson {
                dim: g.dim,
                units: (0..g.dim)
                    .flat_map(|p| (0..g.dim).map(move |q| (p, q)))
                    .map(|(p, q)| (p + 1, q + 1, g.units[p][q].clone()))
                    .collect(),
            })
            .collect();
        Self {
            name: k.name.clone(),
            dim: n,
            basis: k.basis.clone(),
            mult,
            comult,
            counit: k.counit.clone(),
            antipode: k.antipode.clone(),
            star: k.star.clone(),
            phi: k.phi.clone(),
            unit: k.unit.clone(),
            integral: k.integral.clone(),
            irreps,
        }
    }

    /// Builds the algebra, rejecting any spec that fails validation.
    pub fn build(&self) -> Result<(KacAlgebra, IrrepData), KacError> {
        let n = self.dim;
        let bad = |what: &str| KacError::Spec(format!("{what} has the wrong shape"));
        let vec_ok = |v: &Vector| v.len() == n;
        if self.basis.len() != n {
            return Err(bad("basis"));
        }
        for (what, v) in [("counit", &self.counit), ("phi", &self.phi), ("unit", &self.unit), ("integral", &self.integral)] {
            if !vec_ok(v) {
                return Err(bad(what));
            }
        }
        for (what, m) in [("antipode", &self.antipode), ("star", &self.star)] {
            if m.len() != n || !m.iter().all(vec_ok) {
                return Err(bad(what));
            }
        }
        let mut mult = vec![vec![zeros(n); n]; n];
        for (i, j, v) in &self.mult {
            if *i >= n || *j >= n || !vec_ok(v) {
                return Err(bad("mult"));
            }
            mult[*i][*j] = v.clone();
        }
        let mut comult = vec![vec![zeros(n); n]; n];
        for (c, entries) in &self.comult {
            if *c >= n {
                return Err(bad("comult"));
            }
            for (i, j, x) in entries {
                if *i >= n || *j >= n {
                    return Err(bad("comult"));
                }
                comult[*c][*i][*j] = x.clone();
            }
        }
        let k = KacAlgebra {
            name: self.name.clone(),
            basis: self.basis.clone(),
            mult,
            unit: self.unit.clone(),
            comult,
            counit: self.counit.clone(),
            antipode: self.antipode.clone(),
            star: self.star.clone(),
            phi: self.phi.clone(),
            integral: self.integral.clone(),
        };
        let mut irreps = Vec::with_capacity(self.irreps.len());
        for g in &self.irreps {
            let mut units: Vec<Vec<Option<Vector>>> = vec![vec![None; g.dim]; g.dim];
            for (p, q, v) in &g.units {
                if *p == 0 || *q == 0 || *p > g.dim || *q > g.dim || !vec_ok(v) {
                    return Err(bad("irreps"));
                }
                units[p - 1][q - 1] = Some(v.clone());
            }
            let units = units
                .into_iter()
                .map(|row| row.into_iter().collect::<Option<Vec<_>>>())
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| KacError::InvalidIrreps("missing matrix unit".into()))?;
            irreps.push(Irrep { dim: g.dim, units });
        }
        let data = IrrepData::new(&k, irreps)?;
        let mut report = validate(&k);
        report.extend(validate_irreps(&k, &data));
        if let Some(f) = report.failures().next() {
            return Err(KacError::Validation(format!(
                "{}: {}",
                f.check,
                f.witness.clone().unwrap_or_default()
            )));
        }
        Ok((k, data))
    }
}

/// Reads and validates a spec from JSON text.
pub fn load_spec(json: &str) -> Result<(KacAlgebra, IrrepData), KacError> {
    let spec: KacSpec = serde_json::from_str(json).map_err(|e| KacError::Spec(e.to_string()))?;
    spec.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> AlgebraicReal {
        AlgebraicReal::rational(a, b)
    }

    #[test]
    fn c2_structure() {
        let (k, _) = builtin("c2").unwrap();
        assert_eq!(k.dim(), 2);
        let u = k.basis_vector(1);
        assert!(k.phi(&u).is_zero());
        assert_eq!(k.integral(), &vec![q(1, 2), q(1, 2)]);
        assert_eq!(phi_moment(&k, &[u.clone(), u]).unwrap(), AlgebraicReal::one());
        assert_eq!(phi_moment(&k, &[k.unit().clone()]).unwrap(), AlgebraicReal::one());
    }

    #[test]
    fn s3_group_algebra_has_six_one_dimensional_units() {
        let (k, irr) = builtin("s3").unwrap();
        assert_eq!(k.dim(), 6);
        assert_eq!(irr.dims(), vec![1; 6]);
        let t = s3_table();
        // s r s = r²
        assert_eq!(t[t[3][1]][3], 2);
    }

    #[test]
    fn every_builtin_validates() {
        for name in BUILTIN_NAMES {
            let (k, irr) = builtin(name).unwrap();
            let mut r = validate(&k);
            r.extend(validate_irreps(&k, &irr));
            assert!(r.all_passed(), "{name}: {:?}", r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn dual_s3_profile_and_units() {
        let (k, irr) = builtin("dual-s3").unwrap();
        assert_eq!(irr.dims(), vec![1, 1, 2]);
        assert!(phi_moment(&k, &[irr.unit(2, 0, 0).clone()]).unwrap().is_zero());
        for (g, p, qq) in (0..6).map(|i| irr.unit_label(i)) {
            assert_eq!(k.star(irr.unit(g, p, qq)), k.antipode(irr.unit(g, qq, p)));
        }
    }

    #[test]
    fn matrix_units_are_standard_vectors() {
        let (k, irr) = builtin("dual-s3").unwrap();
        for i in 0..6 {
            let (g, p, qq) = irr.unit_label(i);
            assert_eq!(irr.unit_index(g, p, qq), i);
            assert_eq!(to_matrix_units(&k, &irr, irr.unit(g, p, qq)).unwrap(), k.basis_vector(i));
        }
        let (k, irr) = builtin("c4").unwrap();
        for i in 0..4 {
            assert_eq!(to_matrix_units(&k, &irr, &k.basis_vector(i)).unwrap(), k.basis_vector(i));
        }
    }

    #[test]
    fn dual_s3_delta_e_in_matrix_units() {
        // δ_e = Σ_γ (d_γ/6) Σ_p γ_pp, by the orthogonality relations
        let (k, irr) = builtin("dual-s3").unwrap();
        let c = to_matrix_units(&k, &irr, &k.basis_vector(0)).unwrap();
        let want = vec![q(1, 6), q(1, 6), q(1, 3), q(0, 1), q(0, 1), q(1, 3)];
        assert_eq!(c, want);
    }

    #[test]
    fn dual_c2_is_isomorphic_to_c2() {
        // δ_e ± δ_u are the group-like elements
        let (d, _) = builtin("dual-c2").unwrap();
        let (c, _) = builtin("c2").unwrap();
        let e = d.unit().clone();
        let u: Vector = vec![q(1, 1), q(-1, 1)];
        let images = [e, u];
        for i in 0..2 {
            for j in 0..2 {
                let img = &c.mult[i][j];
                let target: Vector = (0..2)
                    .map(|r| img.iter().zip(&images).map(|(x, v)| x * &v[r]).sum())
                    .collect();
                assert_eq!(d.mul(&images[i], &images[j]), target);
            }
            let dd = d.comul(&images[i]);
            for x in 0..2 {
                for y in 0..2 {
                    assert_eq!(dd[x][y], &images[i][x] * &images[i][y]);
                }
            }
            assert_eq!(d.phi(&images[i]), c.phi(&c.basis_vector(i)));
            assert_eq!(d.antipode(&images[i]), images[i]);
        }
    }

    #[test]
    fn broken_antipode_is_reported() {
        let (k, irr) = builtin("c3").unwrap();
        let mut spec = KacSpec::from_algebra(&k, &irr);
        // S cycles e → g → g² → e, so S² ≠ id
        spec.antipode = vec![k.basis_vector(1), k.basis_vector(2), k.basis_vector(0)];
        let broken = KacAlgebra { antipode: spec.antipode.clone(), ..k.clone() };
        let r = validate(&broken);
        assert_eq!(r.status_of("antipode involutive"), Some(crate::report::Status::Fail));
        assert!(matches!(spec.build(), Err(KacError::Validation(_))));
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let table = vec![vec![0, 1], vec![1, 1]];
        assert!(matches!(group_algebra("x", &["a", "b"], &table), Err(KacError::InvalidGroup(_))));
        let not_unitary = vec![(0..2).map(|_| vec![vec![q(2, 1)]]).collect()];
        assert!(matches!(
            dual_group_algebra("x", &["a", "b"], &cyclic_table(2), &not_unitary),
            Err(KacError::InvalidIrreps(_))
        ));
        let incomplete = vec![(0..2).map(|_| vec![vec![q(1, 1)]]).collect()];
        assert!(matches!(
            dual_group_algebra("x", &["a", "b"], &cyclic_table(2), &incomplete),
            Err(KacError::InvalidIrreps(_))
        ));
        let (k, _) = builtin("c2").unwrap();
        assert!(matches!(phi_moment(&k, &[vec![q(1, 1)]]), Err(KacError::DimensionMismatch { .. })));
    }

    #[test]
    fn spec_json_roundtrip() {
        for name in BUILTIN_NAMES {
            let (k, irr) = builtin(name).unwrap();
            let json = serde_json::to_string(&KacSpec::from_algebra(&k, &irr)).unwrap();
            let (k2, irr2) = load_spec(&json).unwrap();
            assert_eq!(k, k2);
            assert_eq!(irr, irr2);
        }
    }

    #[test]
    fn iterated_coproduct_of_group_like_is_diagonal() {
        let (k, _) = builtin("c3").unwrap();
        let d = k.iterated_comul_basis(1, 3);
        assert_eq!(d.len(), 1);
        assert_eq!(d.get(&vec![1, 1, 1]), Some(&AlgebraicReal::one()));
        let (k, _) = builtin("dual-c3").unwrap();
        assert_eq!(k.iterated_comul_basis(0, 3).len(), 9);
    }
}
