//! Non-crossing partitions: enumeration, the Möbius function of `NC(n)`,
//! multiplicative extensions, the moment/cumulant transform pair, the
//! Temperley-Lieb correspondence and closure loop counting.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::algnum::AlgebraicReal;

/// Largest `n` accepted by [`enumerate_nc`].
pub const MAX_ENUMERATE: usize = 14;
/// Largest arity the moment/cumulant transforms are evaluated at.
pub const MAX_TRANSFORM: usize = 12;
/// Largest `n` whose lattice is kept in the shared cache.
const MAX_CACHED: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("n = {n} exceeds the enumeration guard {max}")]
    SizeGuard { n: usize, max: usize },
    #[error("{0} does not refine {1}")]
    NotRefinement(String, String),
    #[error("expected {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("arity {t} exceeds the cap {cap}")]
    CapExceeded { t: usize, cap: usize },
    #[error("no table entry for arguments of arity {0}")]
    Undefined(usize),
    #[error("invalid partition: {0}")]
    Invalid(String),
    #[error("invalid pairing: {0}")]
    InvalidPairing(String),
}

/// Catalan numbers, `C(n) = |NC(n)|`.
pub fn catalan(n: usize) -> u64 {
    (0..n).fold(1u64, |c, k| c * 2 * (2 * k as u64 + 1) / (k as u64 + 2))
}

/// Scans for `i < k < j < l` with `{i, j}` and `{k, l}` in different classes.
pub fn is_non_crossing(classes: &[Vec<usize>]) -> bool {
    for (a, ca) in classes.iter().enumerate() {
        for cb in classes.iter().skip(a + 1) {
            let (amin, amax) = (ca[0], *ca.last().unwrap());
            let (bmin, bmax) = (cb[0], *cb.last().unwrap());
            // disjoint spans never cross; otherwise one class must sit in a gap of the other
            if amax < bmin || bmax < amin {
                continue;
            }
            let inside = |outer: &[usize], inner: &[usize]| {
                let (lo, hi) = (inner[0], *inner.last().unwrap());
                outer
                    .windows(2)
                    .any(|w| w[0] < lo && hi < w[1])
            };
            if !(inside(ca, cb) || inside(cb, ca)) {
                return false;
            }
        }
    }
    true
}

/// A non-crossing partition of a finite set of positive integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NCPartition {
    ground: Vec<usize>,
    classes: Vec<Vec<usize>>,
}

impl NCPartition {
    /// Validates and canonicalizes: each class sorted, classes ordered by
    /// their least element.
    pub fn new(ground: Vec<usize>, classes: Vec<Vec<usize>>) -> Result<Self, PartitionError> {
        let mut ground = ground;
        ground.sort_unstable();
        if ground.windows(2).any(|w| w[0] == w[1]) {
            return Err(PartitionError::Invalid("repeated ground element".into()));
        }
        let mut classes: Vec<Vec<usize>> = classes
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        if classes.iter().any(|c| c.is_empty()) {
            return Err(PartitionError::Invalid("empty class".into()));
        }
        classes.sort();
        let mut covered: Vec<usize> = classes.iter().flatten().copied().collect();
        covered.sort_unstable();
        if covered != ground {
            return Err(PartitionError::Invalid(
                "classes do not partition the ground set".into(),
            ));
        }
        if !is_non_crossing(&classes) {
            return Err(PartitionError::Invalid(format!("{classes:?} is crossing")));
        }
        Ok(Self { ground, classes })
    }

    /// Partition whose ground set is the union of the classes.
    pub fn from_classes(classes: Vec<Vec<usize>>) -> Result<Self, PartitionError> {
        let ground = classes.iter().flatten().copied().collect();
        Self::new(ground, classes)
    }

    /// `1_S`, the single-class partition; `S` may be empty.
    pub fn one(ground: Vec<usize>) -> Self {
        let mut ground = ground;
        ground.sort_unstable();
        let classes = if ground.is_empty() {
            Vec::new()
        } else {
            vec![ground.clone()]
        };
        Self { ground, classes }
    }

    /// `0_S`, all singletons.
    pub fn zero(ground: Vec<usize>) -> Self {
        let mut ground = ground;
        ground.sort_unstable();
        let classes = ground.iter().map(|&g| vec![g]).collect();
        Self { ground, classes }
    }

    pub fn one_n(n: usize) -> Self {
        Self::one((1..=n).collect())
    }

    pub fn zero_n(n: usize) -> Self {
        Self::zero((1..=n).collect())
    }

    pub fn ground(&self) -> &[usize] {
        &self.ground
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    /// Size of the ground set.
    pub fn size(&self) -> usize {
        self.ground.len()
    }

    /// Number of classes, `|π|`.
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// `self ≤ other`: every class of `self` lies inside a class of `other`.
    pub fn refines(&self, other: &Self) -> bool {
        self.ground == other.ground
            && self.classes.iter().all(|c| {
                other
                    .classes
                    .iter()
                    .any(|d| c.iter().all(|x| d.binary_search(x).is_ok()))
            })
    }

    /// Positions (0-based) in the ground set, for relabeling onto `[n]`.
    fn position(&self, x: usize) -> usize {
        self.ground.binary_search(&x).expect("element of ground set")
    }

    /// The same partition relabeled onto `[n]` by ground order.
    pub fn standardize(&self) -> Self {
        let classes = self
            .classes
            .iter()
            .map(|c| c.iter().map(|&x| self.position(x) + 1).collect())
            .collect();
        Self {
            ground: (1..=self.size()).collect(),
            classes,
        }
    }

    /// Restriction to the classes contained in `subset`.
    pub fn restrict(&self, subset: &[usize]) -> Result<Self, PartitionError> {
        let classes: Vec<Vec<usize>> = self
            .classes
            .iter()
            .filter(|c| c.iter().all(|x| subset.contains(x)))
            .cloned()
            .collect();
        Self::new(subset.to_vec(), classes)
    }

    pub(crate) fn to_masks(&self) -> Vec<u32> {
        self.classes
            .iter()
            .map(|c| c.iter().fold(0u32, |m, &x| m | 1 << self.position(x)))
            .collect()
    }

    pub(crate) fn from_masks(n: usize, blocks: &[u32]) -> Self {
        let classes = blocks
            .iter()
            .map(|&b| (0..n).filter(|i| b >> i & 1 == 1).map(|i| i + 1).collect())
            .collect();
        Self {
            ground: (1..=n).collect(),
            classes,
        }
    }
}

impl std::fmt::Display for NCPartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, c) in self.classes.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, x) in c.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
struct NCPartitionJson {
    n: usize,
    classes: Vec<Vec<usize>>,
}

impl Serialize for NCPartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        NCPartitionJson {
            n: self.size(),
            classes: self.classes.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NCPartition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = NCPartitionJson::deserialize(d)?;
        let p = NCPartition::from_classes(raw.classes).map_err(serde::de::Error::custom)?;
        if p.size() != raw.n {
            return Err(serde::de::Error::custom(format!(
                "n = {} but classes cover {} elements",
                raw.n,
                p.size()
            )));
        }
        Ok(p)
    }
}

/// Calls `f` on every element of `NC(n)` as block bitmasks (bit `i` is
/// element `i + 1`), in lexicographic order of restricted growth strings.
pub(crate) fn for_each_nc_mask(n: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(i: usize, n: usize, blocks: &mut Vec<u32>, open: &mut Vec<usize>, f: &mut impl FnMut(&[u32])) {
        if i == n {
            f(blocks);
            return;
        }
        // open is increasing in block label; joining one closes everything above it
        for pos in 0..open.len() {
            let b = open[pos];
            let closed = open.split_off(pos + 1);
            blocks[b] |= 1 << i;
            rec(i + 1, n, blocks, open, f);
            blocks[b] &= !(1 << i);
            open.extend(closed);
        }
        blocks.push(1 << i);
        open.push(blocks.len() - 1);
        rec(i + 1, n, blocks, open, f);
        open.pop();
        blocks.pop();
    }
    if n == 0 {
        f(&[]);
        return;
    }
    rec(0, n, &mut Vec::with_capacity(n), &mut Vec::with_capacity(n), f);
}

/// Flat storage of `NC(n)` as block masks.
pub(crate) struct NcMasks {
    flat: Vec<u32>,
    starts: Vec<usize>,
}

impl NcMasks {
    fn build(n: usize) -> Self {
        let mut flat = Vec::new();
        let mut starts = vec![0];
        for_each_nc_mask(n, &mut |b| {
            flat.extend_from_slice(b);
            starts.push(flat.len());
        });
        Self { flat, starts }
    }

    pub(crate) fn len(&self) -> usize {
        self.starts.len() - 1
    }

    pub(crate) fn get(&self, i: usize) -> &[u32] {
        &self.flat[self.starts[i]..self.starts[i + 1]]
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = &[u32]> {
        (0..self.len()).map(move |i| self.get(i))
    }
}

fn cached<T: Send + Sync + 'static>(
    cell: &'static OnceLock<Mutex<HashMap<usize, Arc<T>>>>,
    n: usize,
    build: impl FnOnce() -> T,
) -> Arc<T> {
    let map = cell.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = map.lock().unwrap().get(&n) {
        return v.clone();
    }
    let v = Arc::new(build());
    map.lock().unwrap().entry(n).or_insert(v).clone()
}

/// Shared `NC(n)` for `n ≤ 12`.
pub(crate) fn nc_masks(n: usize) -> Result<Arc<NcMasks>, PartitionError> {
    static CELL: OnceLock<Mutex<HashMap<usize, Arc<NcMasks>>>> = OnceLock::new();
    if n > MAX_CACHED {
        return Err(PartitionError::SizeGuard { n, max: MAX_CACHED });
    }
    Ok(cached(&CELL, n, || NcMasks::build(n)))
}

/// All of `NC(n)`, in lexicographic order of class-leader (restricted growth)
/// labelings.
pub fn enumerate_nc(n: usize) -> Result<Vec<NCPartition>, PartitionError> {
    if n == 0 || n > MAX_ENUMERATE {
        return Err(PartitionError::SizeGuard { n, max: MAX_ENUMERATE });
    }
    let mut out = Vec::with_capacity(catalan(n) as usize);
    for_each_nc_mask(n, &mut |b| out.push(NCPartition::from_masks(n, b)));
    Ok(out)
}

/// `NC(S)` for an arbitrary finite ground set.
pub fn enumerate_nc_on(ground: &[usize]) -> Result<Vec<NCPartition>, PartitionError> {
    let mut ground = ground.to_vec();
    ground.sort_unstable();
    if ground.is_empty() {
        return Ok(vec![NCPartition::one(Vec::new())]);
    }
    Ok(enumerate_nc(ground.len())?
        .into_iter()
        .map(|p| NCPartition {
            classes: p
                .classes
                .iter()
                .map(|c| c.iter().map(|&i| ground[i - 1]).collect())
                .collect(),
            ground: ground.clone(),
        })
        .collect())
}

/// The coarsest partition `π̃` of `e` such that `π ∪ π̃` is non-crossing.
///
/// Two points of `e` are related when every class of `π` lies entirely
/// inside or entirely outside the open interval between them; `π̃` is the
/// transitive closure of that relation.
pub fn induced_partition(pi: &NCPartition, e: &[usize]) -> Result<NCPartition, PartitionError> {
    let mut e = e.to_vec();
    e.sort_unstable();
    if e.iter().any(|x| pi.ground.binary_search(x).is_ok()) {
        return Err(PartitionError::Invalid(
            "induced partition needs disjoint index sets".into(),
        ));
    }
    let separated = |a: usize, b: usize| {
        pi.classes.iter().any(|c| {
            let inside = c.iter().filter(|&&x| a < x && x < b).count();
            inside != 0 && inside != c.len()
        })
    };
    let mut parent: Vec<usize> = (0..e.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            if !separated(e[i], e[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..e.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(e[i]);
    }
    NCPartition::new(e, groups.into_values().collect())
}

/// Kreweras complement of a partition of `[k]`, computed by interleaving
/// `i ↦ 2i − 1` with complement points `2i`.
pub fn kreweras(pi: &NCPartition) -> NCPartition {
    let std = pi.standardize();
    let k = std.size();
    let odd = NCPartition {
        ground: (1..=k).map(|i| 2 * i - 1).collect(),
        classes: std
            .classes
            .iter()
            .map(|c| c.iter().map(|&i| 2 * i - 1).collect())
            .collect(),
    };
    let even: Vec<usize> = (1..=k).map(|i| 2 * i).collect();
    let induced = induced_partition(&odd, &even).expect("disjoint by construction");
    NCPartition {
        ground: (1..=k).collect(),
        classes: induced
            .classes
            .iter()
            .map(|c| c.iter().map(|&x| x / 2).collect())
            .collect(),
    }
}

/// `μ(0_m, 1_m)`, from `Σ_{σ ∈ NC(m)} μ(0_m, σ) = 0` and the factorization
/// `[0_m, σ] ≅ ∏_{B ∈ σ} NC(|B|)`.
fn mobius_bottom_top(m: usize) -> i64 {
    static MEMO: OnceLock<Mutex<Vec<i64>>> = OnceLock::new();
    let memo = MEMO.get_or_init(|| Mutex::new(vec![0, 1]));
    {
        let v = memo.lock().unwrap();
        if m < v.len() {
            return v[m];
        }
    }
    let lower: Vec<i64> = (0..m).map(mobius_bottom_top).collect();
    let mut total = 0i64;
    for_each_nc_mask(m, &mut |blocks| {
        if blocks.len() > 1 {
            total += blocks
                .iter()
                .map(|b| lower[b.count_ones() as usize])
                .product::<i64>();
        }
    });
    let value = -total;
    let mut v = memo.lock().unwrap();
    while v.len() <= m {
        v.push(0);
    }
    v[m] = value;
    value
}

/// `μ(ρ, 1)` for `ρ` already relabeled onto `[k]`: the lattice anti-isomorphism
/// `K` carries `[ρ, 1_k]` onto `[0_k, K(ρ)]`.
fn mobius_to_top_std(rho: &NCPartition) -> i64 {
    kreweras(rho)
        .classes
        .iter()
        .map(|c| mobius_bottom_top(c.len()))
        .product()
}

/// Möbius function of `NC(n)` on the interval `[ρ, π]`.
///
/// The interval is split over the classes of `π`; each factor `[ρ|_C, 1_C]`
/// is relabeled onto `[|C|]` and evaluated through its canonical shape.
pub fn mobius(rho: &NCPartition, pi: &NCPartition) -> Result<i64, PartitionError> {
    if !rho.refines(pi) {
        return Err(PartitionError::NotRefinement(rho.to_string(), pi.to_string()));
    }
    let mut value = 1i64;
    for c in &pi.classes {
        let local = rho.restrict(c).expect("refinement restricts to each class");
        value *= mobius_to_top_std(&local.standardize());
    }
    Ok(value)
}

/// `μ(π, 1_n)` for every `π` in the cached `NC(n)`, aligned with [`nc_masks`].
pub(crate) fn mobius_to_top(n: usize) -> Result<Arc<Vec<i64>>, PartitionError> {
    static CELL: OnceLock<Mutex<HashMap<usize, Arc<Vec<i64>>>>> = OnceLock::new();
    let masks = nc_masks(n)?;
    Ok(cached(&CELL, n, || {
        masks
            .iter()
            .map(|b| mobius_to_top_std(&NCPartition::from_masks(n, b)))
            .collect()
    }))
}

/// An arity-indexed family of functions `f_t : A^t → AlgebraicReal`.
pub trait FunctionTable<A> {
    /// Largest arity at which the table is defined.
    fn max_arity(&self) -> usize;

    fn eval(&self, args: &[A]) -> Result<AlgebraicReal, PartitionError>;
}

impl<A, T: FunctionTable<A> + ?Sized> FunctionTable<A> for &T {
    fn max_arity(&self) -> usize {
        (**self).max_arity()
    }

    fn eval(&self, args: &[A]) -> Result<AlgebraicReal, PartitionError> {
        (**self).eval(args)
    }
}

/// A table given by a closed-form rule.
pub struct ClosedForm<F> {
    max_arity: usize,
    rule: F,
}

impl<F> ClosedForm<F> {
    pub fn new(max_arity: usize, rule: F) -> Self {
        Self { max_arity, rule }
    }
}

impl<A, F: Fn(&[A]) -> AlgebraicReal> FunctionTable<A> for ClosedForm<F> {
    fn max_arity(&self) -> usize {
        self.max_arity
    }

    fn eval(&self, args: &[A]) -> Result<AlgebraicReal, PartitionError> {
        if args.len() > self.max_arity {
            return Err(PartitionError::CapExceeded {
                t: args.len(),
                cap: self.max_arity,
            });
        }
        Ok((self.rule)(args))
    }
}

/// An explicit table of values; missing entries are errors.
#[derive(Debug, Clone, Default)]
pub struct MemoTable<A: Eq + Hash> {
    max_arity: usize,
    values: HashMap<Vec<A>, AlgebraicReal>,
}

impl<A: Eq + Hash + Clone> MemoTable<A> {
    pub fn new(max_arity: usize) -> Self {
        Self {
            max_arity,
            values: HashMap::new(),
        }
    }

    pub fn insert(&mut self, args: Vec<A>, value: AlgebraicReal) {
        self.values.insert(args, value);
    }

    /// Snapshot of any table over every tuple of `alphabet` up to `max_arity`.
    pub fn tabulate<T: FunctionTable<A>>(
        source: &T,
        alphabet: &[A],
        max_arity: usize,
    ) -> Result<Self, PartitionError> {
        let mut table = Self::new(max_arity);
        for args in tuples(alphabet, max_arity) {
            let v = source.eval(&args)?;
            table.insert(args, v);
        }
        Ok(table)
    }
}

impl<A: Eq + Hash> FunctionTable<A> for MemoTable<A> {
    fn max_arity(&self) -> usize {
        self.max_arity
    }

    fn eval(&self, args: &[A]) -> Result<AlgebraicReal, PartitionError> {
        // HashMap<Vec<A>, _> can be probed with a slice
        self.values
            .get(args)
            .cloned()
            .ok_or(PartitionError::Undefined(args.len()))
    }
}

/// All tuples over `alphabet` of length `1..=max_len`, shortest first.
pub fn tuples<A: Clone>(alphabet: &[A], max_len: usize) -> Vec<Vec<A>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<A>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|t| {
                alphabet.iter().map(move |a| {
                    let mut t = t.clone();
                    t.push(a.clone());
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Caches the values of an expensive table.
pub struct Memoized<A, T> {
    inner: T,
    cache: Mutex<HashMap<Vec<A>, AlgebraicReal>>,
}

impl<A, T> Memoized<A, T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl<A: Eq + Hash + Clone, T: FunctionTable<A>> FunctionTable<A> for Memoized<A, T> {
    fn max_arity(&self) -> usize {
        self.inner.max_arity()
    }

    fn eval(&self, args: &[A]) -> Result<AlgebraicReal, PartitionError> {
        if let Some(v) = self.cache.lock().unwrap().get(args) {
            return Ok(v.clone());
        }
        let v = self.inner.eval(args)?;
        self.cache.lock().unwrap().insert(args.to_vec(), v.clone());
        Ok(v)
    }
}

fn block_args<A: Clone>(block: u32, args: &[A]) -> Vec<A> {
    (0..args.len())
        .filter(|i| block >> i & 1 == 1)
        .map(|i| args[i].clone())
        .collect()
}

pub(crate) fn product_over_blocks<A: Clone, T: FunctionTable<A>>(
    f: &T,
    blocks: &[u32],
    args: &[A],
) -> Result<AlgebraicReal, PartitionError> {
    let mut acc = AlgebraicReal::one();
    for &b in blocks {
        let v = f.eval(&block_args(b, args))?;
        if v.is_zero() {
            return Ok(v);
        }
        acc = acc * v;
    }
    Ok(acc)
}

/// `f_π(args) = ∏_{C ∈ π} f_{|C|}(args restricted to C)`, arguments of each
/// class taken in increasing index order. `args[k]` belongs to the `k`-th
/// smallest ground element.
pub fn multiplicative_extension<A: Clone, T: FunctionTable<A>>(
    f: &T,
    pi: &NCPartition,
    args: &[A],
) -> Result<AlgebraicReal, PartitionError> {
    if args.len() != pi.size() {
        return Err(PartitionError::ArityMismatch {
            expected: pi.size(),
            got: args.len(),
        });
    }
    product_over_blocks(f, &pi.to_masks(), args)
}

/// Free cumulants of a moment table: `κ_n = Σ_{π ∈ NC(n)} μ(π, 1_n) φ_π`.
pub struct Cumulants<A, T> {
    moments: T,
    t_max: usize,
    cache: Mutex<HashMap<Vec<A>, AlgebraicReal>>,
}

/// Moments of a cumulant table: `φ_n = Σ_{π ∈ NC(n)} κ_π`.
pub struct Moments<A, T> {
    cumulants: T,
    t_max: usize,
    cache: Mutex<HashMap<Vec<A>, AlgebraicReal>>,
}

fn check_cap<A, T: FunctionTable<A>>(source: &T, t_max: usize) -> Result<(), PartitionError> {
    if t_max > MAX_TRANSFORM {
        return Err(PartitionError::CapExceeded { t: t_max, cap: MAX_TRANSFORM });
    }
    if t_max > source.max_arity() {
        return Err(PartitionError::CapExceeded {
            t: t_max,
            cap: source.max_arity(),
        });
    }
    Ok(())
}

pub fn moments_to_cumulants<A, T: FunctionTable<A>>(
    phi: T,
    t_max: usize,
) -> Result<Cumulants<A, T>, PartitionError> {
    check_cap(&phi, t_max)?;
    Ok(Cumulants {
        moments: phi,
        t_max,
        cache: Mutex::new(HashMap::new()),
    })
}

pub fn cumulants_to_moments<A, T: FunctionTable<A>>(
    kappa: T,
    t_max: usize,
) -> Result<Moments<A, T>, PartitionError> {
    check_cap(&kappa, t_max)?;
    Ok(Moments {
        cumulants: kappa,
        t_max,
        cache: Mutex::new(HashMap::new()),
    })
}

impl<A, T> Cumulants<A, T> {
    /// The moment table the cumulants are computed from.
    pub fn source(&self) -> &T {
        &self.moments
    }
}

impl<A, T> Moments<A, T> {
    /// The cumulant table the moments are computed from.
    pub fn source(&self) -> &T {
        &self.cumulants
    }
}

impl<A: Eq + Hash + Clone, T: FunctionTable<A>> FunctionTable<A> for Cumulants<A, T> {
    fn max_arity(&self) -> usize {
        self.t_max
    }

    fn eval(&self, args: &[A]) -> Result<AlgebraicReal, PartitionError> {
        let n = args.len();
        if n > self.t_max {
            return Err(PartitionError::CapExceeded { t: n, cap: self.t_max });
        }
        if let Some(v) = self.cache.lock().unwrap().get(args) {
            return Ok(v.clone());
        }
        let masks = nc_masks(n)?;
        let mu = mobius_to_top(n)?;
        let mut total = AlgebraicReal::zero();
        for (blocks, &m) in masks.iter().zip(mu.iter()) {
            let term = product_over_blocks(&self.moments, blocks, args)?;
            if !term.is_zero() {
                total += term.scale(&num_rational::BigRational::from_integer(m.into()));
            }
        }
        self.cache.lock().unwrap().insert(args.to_vec(), total.clone());
        Ok(total)
    }
}

impl<A: Eq + Hash + Clone, T: FunctionTable<A>> FunctionTable<A> for Moments<A, T> {
    fn max_arity(&self) -> usize {
        self.t_max
    }

    fn eval(&self, args: &[A]) -> Result<AlgebraicReal, PartitionError> {
        let n = args.len();
        if n > self.t_max {
            return Err(PartitionError::CapExceeded { t: n, cap: self.t_max });
        }
        if let Some(v) = self.cache.lock().unwrap().get(args) {
            return Ok(v.clone());
        }
        let masks = nc_masks(n)?;
        let mut total = AlgebraicReal::zero();
        for blocks in masks.iter() {
            total += product_over_blocks(&self.cumulants, blocks, args)?;
        }
        self.cache.lock().unwrap().insert(args.to_vec(), total.clone());
        Ok(total)
    }
}

/// A non-crossing perfect matching of `2n` boundary points; points `2i − 1`
/// and `2i` are the left and right legs of box `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TLPairing {
    n: usize,
    arcs: Vec<(usize, usize)>,
}

impl TLPairing {
    pub fn new(n: usize, arcs: Vec<(usize, usize)>) -> Result<Self, PartitionError> {
        let mut arcs: Vec<(usize, usize)> = arcs
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        arcs.sort_unstable();
        if arcs.len() != n {
            return Err(PartitionError::InvalidPairing(format!(
                "{} arcs for {n} boxes",
                arcs.len()
            )));
        }
        let mut seen = vec![false; 2 * n + 1];
        for &(a, b) in &arcs {
            for p in [a, b] {
                if p == 0 || p > 2 * n || seen[p] {
                    return Err(PartitionError::InvalidPairing(format!(
                        "point {p} missing or reused"
                    )));
                }
                seen[p] = true;
            }
            if a == b {
                return Err(PartitionError::InvalidPairing(format!("loop at {a}")));
            }
        }
        for (i, &(a, b)) in arcs.iter().enumerate() {
            for &(c, d) in &arcs[i + 1..] {
                if (a < c && c < b && b < d) || (c < a && a < d && d < b) {
                    return Err(PartitionError::InvalidPairing(format!(
                        "arcs ({a},{b}) and ({c},{d}) cross"
                    )));
                }
            }
        }
        Ok(Self { n, arcs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    fn partner_table(&self) -> Vec<usize> {
        let mut partner = vec![0; 2 * self.n + 1];
        for &(a, b) in &self.arcs {
            partner[a] = b;
            partner[b] = a;
        }
        partner
    }
}

impl<'de> Deserialize<'de> for TLPairing {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            arcs: Vec<(usize, usize)>,
        }
        let raw = Raw::deserialize(d)?;
        TLPairing::new(raw.n, raw.arcs).map_err(serde::de::Error::custom)
    }
}

/// `TL(π)`: a class `c₁ < ⋯ < c_k` contributes arcs `(2c_j, 2c_{j+1} − 1)` and
/// `(2c_k, 2c₁ − 1)`. Elements are taken by their position in the ground set.
pub fn tl_from_nc(pi: &NCPartition) -> TLPairing {
    let std = pi.standardize();
    let mut arcs = Vec::with_capacity(std.size());
    for c in &std.classes {
        for w in c.windows(2) {
            arcs.push((2 * w[0], 2 * w[1] - 1));
        }
        arcs.push((2 * c[c.len() - 1], 2 * c[0] - 1));
    }
    TLPairing::new(std.size(), arcs).expect("TL(π) of a non-crossing partition is a valid pairing")
}

/// Inverse of [`tl_from_nc`]: an arc from `2a` to `2b − 1` puts boxes `a`
/// and `b` in one class.
pub fn nc_from_tl(t: &TLPairing) -> Result<NCPartition, PartitionError> {
    let n = t.n;
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for &(a, b) in &t.arcs {
        let (even, odd) = match (a % 2, b % 2) {
            (0, 1) => (a, b),
            (1, 0) => (b, a),
            _ => {
                return Err(PartitionError::InvalidPairing(format!(
                    "arc ({a},{b}) joins two legs of the same parity"
                )))
            }
        };
        let (x, y) = (find(&mut parent, even / 2), find(&mut parent, odd.div_ceil(2)));
        parent[x.max(y)] = x.min(y);
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 1..=n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let pi = NCPartition::new((1..=n).collect(), groups.into_values().collect())?;
    if tl_from_nc(&pi) != *t {
        return Err(PartitionError::InvalidPairing(
            "pairing is not of the form TL(π)".into(),
        ));
    }
    Ok(pi)
}

/// Number of loops of the closed diagram `L(π)`: cycles of `TL(π)` together
/// with the closure pairing `{(2i, 2i+1) : i < n} ∪ {(2n, 1)}`, plus the outer
/// closure strand.
pub fn closure_loop_count(pi: &NCPartition) -> usize {
    let t = tl_from_nc(pi);
    let n = t.n;
    let partner = t.partner_table();
    let closure = |p: usize| -> usize {
        if p == 2 * n {
            1
        } else if p == 1 {
            2 * n
        } else if p % 2 == 0 {
            p + 1
        } else {
            p - 1
        }
    };
    let mut seen = vec![false; 2 * n + 1];
    let mut cycles = 0;
    for start in 1..=2 * n {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut p = start;
        loop {
            seen[p] = true;
            let q = partner[p];
            seen[q] = true;
            p = closure(q);
            if p == start {
                break;
            }
        }
    }
    cycles + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn part(classes: &[&[usize]]) -> NCPartition {
        NCPartition::from_classes(classes.iter().map(|c| c.to_vec()).collect()).unwrap()
    }

    /// All set partitions of [n] as restricted growth strings.
    fn all_set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
        fn rec(i: usize, n: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
            if i > n {
                out.push(cur.clone());
                return;
            }
            for b in 0..cur.len() {
                cur[b].push(i);
                rec(i + 1, n, cur, out);
                cur[b].pop();
            }
            cur.push(vec![i]);
            rec(i + 1, n, cur, out);
            cur.pop();
        }
        let mut out = Vec::new();
        rec(1, n, &mut Vec::new(), &mut out);
        out
    }

    fn brute_non_crossing(classes: &[Vec<usize>]) -> bool {
        for (a, ca) in classes.iter().enumerate() {
            for (b, cb) in classes.iter().enumerate() {
                if a == b {
                    continue;
                }
                for &i in ca {
                    for &j in ca {
                        for &k in cb {
                            for &l in cb {
                                if i < k && k < j && j < l {
                                    return false;
                                }
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// The defining recursion `Σ_{ρ ≤ σ ≤ π} μ(σ, π) = [ρ = π]`, evaluated directly.
    fn mobius_by_recursion(rho: &NCPartition, pi: &NCPartition, all: &[NCPartition]) -> i64 {
        if rho == pi {
            return 1;
        }
        -all.iter()
            .filter(|s| rho.refines(s) && s.refines(pi) && *s != rho)
            .map(|s| mobius_by_recursion(s, pi, all))
            .sum::<i64>()
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_nc(1).unwrap(), vec![NCPartition::one_n(1)]);
        assert_eq!(enumerate_nc(3).unwrap().len(), 5);
        assert_eq!(enumerate_nc(4).unwrap().len(), 14);
        for n in 1..=10 {
            assert_eq!(enumerate_nc(n).unwrap().len() as u64, catalan(n));
        }
        assert!(matches!(enumerate_nc(15), Err(PartitionError::SizeGuard { .. })));
    }

    #[test]
    fn nc4_is_set_partitions_minus_the_crossing_one() {
        let nc: Vec<NCPartition> = enumerate_nc(4).unwrap();
        let filtered: Vec<Vec<Vec<usize>>> = all_set_partitions(4)
            .into_iter()
            .filter(|p| brute_non_crossing(p))
            .collect();
        assert_eq!(filtered.len(), 14);
        assert_eq!(all_set_partitions(4).len(), 15);
        for p in filtered {
            assert!(nc.contains(&NCPartition::from_classes(p).unwrap()));
        }
    }

    #[test]
    fn enumeration_is_lexicographic_in_growth_strings() {
        let rgs = |p: &NCPartition| -> Vec<usize> {
            (1..=p.size())
                .map(|x| p.classes.iter().position(|c| c.contains(&x)).unwrap())
                .collect()
        };
        let list = enumerate_nc(6).unwrap();
        for w in list.windows(2) {
            assert!(rgs(&w[0]) < rgs(&w[1]));
        }
    }

    #[test]
    fn non_crossing_test_matches_quadruple_scan() {
        for p in all_set_partitions(6) {
            assert_eq!(is_non_crossing(&p), brute_non_crossing(&p), "{p:?}");
        }
    }

    #[test]
    fn rejects_crossing_and_malformed_input() {
        assert!(NCPartition::from_classes(vec![vec![1, 3], vec![2, 4]]).is_err());
        assert!(NCPartition::new(vec![1, 2, 3], vec![vec![1, 2]]).is_err());
        assert!(NCPartition::new(vec![1, 2], vec![vec![1, 2], vec![]]).is_err());
    }

    #[test]
    fn mobius_examples() {
        let p = part(&[&[1, 3], &[2]]);
        assert_eq!(mobius(&p, &p).unwrap(), 1);
        assert_eq!(mobius(&NCPartition::zero_n(2), &NCPartition::one_n(2)).unwrap(), -1);
        assert_eq!(mobius(&NCPartition::zero_n(4), &NCPartition::one_n(4)).unwrap(), -5);
        assert!(matches!(
            mobius(&NCPartition::one_n(3), &NCPartition::zero_n(3)),
            Err(PartitionError::NotRefinement(..))
        ));
    }

    #[test]
    fn mobius_bottom_top_is_signed_catalan() {
        for m in 1..=10 {
            let expected = if m % 2 == 1 { 1 } else { -1 } * catalan(m - 1) as i64;
            assert_eq!(mobius_bottom_top(m), expected);
        }
    }

    #[test]
    fn mobius_matches_defining_recursion() {
        for n in 1..=5 {
            let all = enumerate_nc(n).unwrap();
            for rho in &all {
                for pi in &all {
                    if rho.refines(pi) {
                        assert_eq!(
                            mobius(rho, pi).unwrap(),
                            mobius_by_recursion(rho, pi, &all),
                            "[{rho}, {pi}]"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn mobius_sums_to_zero_over_the_lattice() {
        for n in 1..=7 {
            let top = NCPartition::one_n(n);
            let s: i64 = enumerate_nc(n)
                .unwrap()
                .iter()
                .map(|p| mobius(p, &top).unwrap())
                .sum();
            assert_eq!(s, if n == 1 { 1 } else { 0 });
        }
    }

    #[test]
    fn multiplicative_extension_examples() {
        let f = ClosedForm::new(8, |args: &[usize]| {
            // f_t(x…) = 10^t + Σ x, distinguishes arity and arguments
            AlgebraicReal::from_integer(10i64.pow(args.len() as u32) + args.iter().sum::<usize>() as i64)
        });
        let p = part(&[&[1, 3], &[2]]);
        let args = [1usize, 2, 3];
        let expected = f.eval(&[1, 3]).unwrap() * f.eval(&[2]).unwrap();
        assert_eq!(multiplicative_extension(&f, &p, &args).unwrap(), expected);
        assert_eq!(
            multiplicative_extension(&f, &NCPartition::one_n(3), &args).unwrap(),
            f.eval(&args).unwrap()
        );
        assert!(matches!(
            multiplicative_extension(&f, &p, &[1, 2]),
            Err(PartitionError::ArityMismatch { expected: 3, got: 2 })
        ));

        let delta = AlgebraicReal::sqrt(2);
        let d = delta.clone();
        let kappa = ClosedForm::new(8, move |a: &[u8]| d.pow(a.len() as u32 - 1));
        let p = part(&[&[1, 4], &[2, 3]]);
        assert_eq!(
            multiplicative_extension(&kappa, &p, &[0, 0, 0, 0]).unwrap(),
            &delta * &delta
        );
    }

    #[test]
    fn transform_examples() {
        let ones = ClosedForm::new(12, |_: &[u8]| AlgebraicReal::one());
        let m = cumulants_to_moments(&ones, 6).unwrap();
        let got: Vec<AlgebraicReal> = (1..=4).map(|t| m.eval(&vec![0; t]).unwrap()).collect();
        let want: Vec<AlgebraicReal> = [1, 2, 5, 14].iter().map(|&v| AlgebraicReal::from_integer(v)).collect();
        assert_eq!(got, want);

        let delta = AlgebraicReal::sqrt(6);
        let d = delta.clone();
        let kappa = ClosedForm::new(12, move |a: &[u8]| d.pow(a.len() as u32 - 1));
        let m = cumulants_to_moments(&kappa, 4).unwrap();
        assert_eq!(m.eval(&[0, 0]).unwrap(), &delta + &AlgebraicReal::one());

        let back = moments_to_cumulants(&m, 4).unwrap();
        for args in tuples(&[0u8], 4) {
            assert_eq!(back.eval(&args).unwrap(), kappa.eval(&args).unwrap());
        }
        assert!(matches!(
            moments_to_cumulants(&ones, 13),
            Err(PartitionError::CapExceeded { .. })
        ));
        assert!(matches!(back.eval(&[0; 5]), Err(PartitionError::CapExceeded { .. })));
    }

    #[test]
    fn tl_of_a_mixed_partition() {
        let p = part(&[&[1, 2, 5], &[3, 4], &[6]]);
        let t = tl_from_nc(&p);
        assert_eq!(
            t.arcs(),
            &[(1, 10), (2, 3), (4, 9), (5, 8), (6, 7), (11, 12)]
        );
        assert_eq!(nc_from_tl(&t).unwrap(), p);
    }

    #[test]
    fn tl_of_singletons_is_caps_on_each_box() {
        let t = tl_from_nc(&NCPartition::zero_n(4));
        assert_eq!(t.arcs(), &[(1, 2), (3, 4), (5, 6), (7, 8)]);
    }

    #[test]
    fn tl_bijection_roundtrips() {
        for n in 1..=7 {
            let all = enumerate_nc(n).unwrap();
            let mut images = std::collections::HashSet::new();
            for p in &all {
                let t = tl_from_nc(p);
                assert_eq!(&nc_from_tl(&t).unwrap(), p);
                assert!(images.insert(t));
            }
        }
    }

    #[test]
    fn pairing_validation() {
        assert!(TLPairing::new(2, vec![(1, 3), (2, 4)]).is_err());
        assert!(TLPairing::new(2, vec![(1, 2)]).is_err());
        assert!(TLPairing::new(1, vec![(1, 1)]).is_err());
        let t: TLPairing = serde_json::from_str(r#"{"n":2,"arcs":[[1,4],[2,3]]}"#).unwrap();
        assert_eq!(nc_from_tl(&t).unwrap(), NCPartition::one_n(2));
    }

    #[test]
    fn closure_loop_examples() {
        for n in 1..=6 {
            assert_eq!(closure_loop_count(&NCPartition::one_n(n)), n + 1);
            assert_eq!(closure_loop_count(&NCPartition::zero_n(n)), 2);
        }
        assert_eq!(closure_loop_count(&part(&[&[1, 3], &[2]])), 3);
    }

    #[test]
    fn closure_loops_follow_euler_count() {
        for n in 1..=8 {
            for p in enumerate_nc(n).unwrap() {
                assert_eq!(closure_loop_count(&p), n - p.num_classes() + 2, "{p}");
            }
        }
    }

    #[test]
    fn induced_partition_examples() {
        let pi = part(&[&[1, 5], &[3, 4], &[8, 14, 15], &[12]]);
        let e = [2, 6, 7, 9, 10, 11, 13, 16];
        let got = induced_partition(&pi, &e).unwrap();
        assert_eq!(got, part(&[&[2], &[6, 7, 16], &[9, 10, 11, 13]]));

        let empty = NCPartition::one(vec![]);
        assert_eq!(
            induced_partition(&empty, &[1, 2, 3]).unwrap(),
            NCPartition::one_n(3)
        );
        let pi = part(&[&[2, 3]]);
        assert_eq!(induced_partition(&pi, &[1, 4]).unwrap(), part(&[&[1, 4]]));
    }

    #[test]
    fn induced_partition_is_the_coarsest_compatible_one() {
        for t in 1..=8usize {
            for mask in 0u32..(1 << t) {
                let d: Vec<usize> = (1..=t).filter(|i| mask >> (i - 1) & 1 == 1).collect();
                let e: Vec<usize> = (1..=t).filter(|i| mask >> (i - 1) & 1 == 0).collect();
                let e_parts = enumerate_nc_on(&e).unwrap();
                for pi in enumerate_nc_on(&d).unwrap() {
                    let tilde = induced_partition(&pi, &e).unwrap();
                    let union = |rho: &NCPartition| {
                        let mut cl = pi.classes().to_vec();
                        cl.extend(rho.classes().iter().cloned());
                        is_non_crossing(&cl)
                    };
                    assert!(union(&tilde));
                    if t <= 6 {
                        for rho in &e_parts {
                            if union(rho) {
                                assert!(rho.refines(&tilde), "{pi} {rho} {tilde}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn json_forms() {
        let p = part(&[&[1, 3], &[2]]);
        let js = serde_json::to_string(&p).unwrap();
        assert_eq!(js, r#"{"n":3,"classes":[[1,3],[2]]}"#);
        assert_eq!(serde_json::from_str::<NCPartition>(&js).unwrap(), p);
        assert!(serde_json::from_str::<NCPartition>(r#"{"n":4,"classes":[[1,3],[2,4]]}"#).is_err());
        let t = tl_from_nc(&p);
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"{"n":3,"arcs":[[1,6],[2,5],[3,4]]}"#);
    }

    proptest! {
        #[test]
        fn kreweras_is_an_involution_up_to_rotation(seed in 0usize..1430) {
            // K² is rotation by one step; |π| + |K(π)| = n + 1
            let all = enumerate_nc(8).unwrap();
            let p = &all[seed % all.len()];
            let k = kreweras(p);
            prop_assert_eq!(p.num_classes() + k.num_classes(), 9);
        }
    }
}
