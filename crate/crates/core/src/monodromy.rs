//! Monodromy toolkit for representations of finitely presented groups:
//! quasiunipotence, unipotent reduction exponents, flat lattices, weight
//! filtrations of nilpotent endomorphisms, graded nearby cycles,
//! semisimplification, characteristic-polynomial and residue maps, and the
//! KMS rescaling bookkeeping.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrix::{extend_basis, in_span, span_rank, Matrix};
use crate::poly;
use crate::scalars::{rat, NfElem, PrimePlace, Rat, Scalar, Valuation};

/// A word in the generators: nonzero signed 1-based indices, `-i` meaning the
/// inverse of generator `i`.
pub type Word = Vec<i32>;

pub fn word_is_reduced(w: &Word) -> bool {
    w.windows(2).all(|pair| pair[0] != -pair[1])
}

pub fn reduce_word(w: &Word) -> Word {
    let mut out: Word = Vec::with_capacity(w.len());
    for &letter in w {
        if let Some(&last) = out.last() {
            if last == -letter {
                out.pop();
                continue;
            }
        }
        out.push(letter);
    }
    out
}

/// A finitely presented group: generator count and reduced relator words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupPresentation {
    generators: usize,
    relators: Vec<Word>,
}

impl GroupPresentation {
    pub fn new(generators: usize, relators: Vec<Word>) -> Result<Self> {
        for r in &relators {
            for &letter in r {
                if letter == 0 || letter.unsigned_abs() as usize > generators {
                    return Err(Error::invalid(format!(
                        "relator letter {letter} outside generator range 1..={generators}"
                    )));
                }
            }
            if !word_is_reduced(r) {
                return Err(Error::invalid("relator word is not reduced"));
            }
        }
        Ok(GroupPresentation {
            generators,
            relators,
        })
    }

    pub fn free(generators: usize) -> Self {
        GroupPresentation {
            generators,
            relators: Vec::new(),
        }
    }

    /// Fundamental group of a closed orientable genus-`g` surface:
    /// `2g` generators with the single product-of-commutators relator.
    pub fn surface(genus: usize) -> Self {
        let mut relator = Vec::new();
        for i in 0..genus {
            let a = (2 * i + 1) as i32;
            let b = (2 * i + 2) as i32;
            relator.extend_from_slice(&[a, b, -a, -b]);
        }
        GroupPresentation {
            generators: 2 * genus,
            relators: vec![relator],
        }
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }
}

/// A matrix representation of a presented group; every relator is verified to
/// evaluate to the identity at construction.
#[derive(Clone, Debug)]
pub struct GroupRep<T: Scalar> {
    presentation: GroupPresentation,
    mats: Vec<Matrix<T>>,
    invs: Vec<Matrix<T>>,
    rank: usize,
}

impl<T: Scalar> GroupRep<T> {
    pub fn new(presentation: GroupPresentation, mats: Vec<Matrix<T>>) -> Result<Self> {
        if mats.len() != presentation.generators() {
            return Err(Error::mismatch(format!(
                "{} matrices for {} generators",
                mats.len(),
                presentation.generators()
            )));
        }
        if mats.is_empty() {
            return Err(Error::invalid("representation needs at least one generator"));
        }
        let rank = mats[0].rows();
        let mut invs = Vec::with_capacity(mats.len());
        for (i, m) in mats.iter().enumerate() {
            if !m.is_square() || m.rows() != rank {
                return Err(Error::mismatch("generator matrices of unequal size"));
            }
            let inv = m.inverse().ok_or_else(|| {
                Error::invalid(format!("generator {} maps to a singular matrix", i + 1))
            })?;
            invs.push(inv);
        }
        let rep = GroupRep {
            presentation,
            mats,
            invs,
            rank,
        };
        for (i, r) in rep.presentation.relators().iter().enumerate() {
            if !rep.eval(r)?.is_identity() {
                return Err(Error::invalid(format!(
                    "relator {} does not evaluate to the identity",
                    i
                )));
            }
        }
        Ok(rep)
    }

    pub fn presentation(&self) -> &GroupPresentation {
        &self.presentation
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn generator(&self, i: usize) -> &Matrix<T> {
        &self.mats[i]
    }

    pub fn generator_inv(&self, i: usize) -> &Matrix<T> {
        &self.invs[i]
    }

    pub fn generators(&self) -> &[Matrix<T>] {
        &self.mats
    }

    pub fn eval(&self, word: &Word) -> Result<Matrix<T>> {
        let mut acc = Matrix::identity_like(self.rank, self.mats[0].sample());
        for &letter in word {
            let idx = letter.unsigned_abs() as usize;
            if letter == 0 || idx > self.presentation.generators() {
                return Err(Error::invalid(format!("letter {letter} out of range")));
            }
            let m = if letter > 0 {
                &self.mats[idx - 1]
            } else {
                &self.invs[idx - 1]
            };
            acc = acc.mul(m);
        }
        Ok(acc)
    }

    /// Characteristic polynomial of the image of a word, monic, constant
    /// term first; conjugation-invariant by construction.
    pub fn char_b(&self, word: &Word) -> Result<Vec<T>> {
        Ok(self.eval(word)?.char_poly())
    }
}

/// Scalars over which quasiunipotence can be decided by cyclotomic deflation
/// of a rational characteristic polynomial.
pub trait CyclotomicScalar: Scalar {
    /// A rational matrix with the same quasiunipotence behaviour (identity
    /// for `Q`; restriction of scalars for a number field).
    fn rationalize(m: &Matrix<Self>) -> Matrix<Rat>;
}

impl CyclotomicScalar for Rat {
    fn rationalize(m: &Matrix<Rat>) -> Matrix<Rat> {
        m.clone()
    }
}

impl CyclotomicScalar for NfElem {
    fn rationalize(m: &Matrix<NfElem>) -> Matrix<Rat> {
        let d = m.sample().field().degree();
        let n = m.rows();
        Matrix::from_fn(n * d, n * d, |r, c| {
            let (br, ir) = (r / d, r % d);
            let (bc, ic) = (c / d, c % d);
            // column ic of the multiplication matrix of the (br, bc) entry
            m.at(br, bc).mult_matrix()[ic][ir].clone()
        })
    }
}

/// Smallest `m` with `T^m` unipotent, when every eigenvalue is a root of
/// unity; `None` otherwise.  Decided by deflating the rational characteristic
/// polynomial by the cyclotomic polynomials of the finitely many orders whose
/// totient fits in the degree — no floating eigenvalues anywhere.
pub fn quasiunipotent_order<T: CyclotomicScalar>(t: &Matrix<T>) -> Option<u64> {
    let rm = T::rationalize(t);
    let n = rm.rows();
    let mut p = rm.char_poly();
    let mut orders: Vec<u64> = Vec::new();
    for d in poly::unit_root_orders(n) {
        let phi = poly::cyclotomic(d);
        let mut divided = false;
        while poly::divides(&phi, &p) {
            p = poly::div_exact(&p, &phi);
            divided = true;
        }
        if divided {
            orders.push(d);
        }
        if poly::degree(&p) == Some(0) {
            break;
        }
    }
    if poly::degree(&p) == Some(0) {
        let m = orders.iter().fold(1u64, |acc, &d| acc.lcm(&d));
        Some(m)
    } else {
        None
    }
}

/// `lcm` of the quasiunipotent orders of the given loops; errors naming the
/// first loop whose image is not quasiunipotent.
pub fn unipotent_reduction_exponent<T: CyclotomicScalar>(
    rep: &GroupRep<T>,
    loops: &[Word],
) -> Result<u64> {
    let mut m = 1u64;
    for (i, w) in loops.iter().enumerate() {
        let img = rep.eval(w)?;
        let order = quasiunipotent_order(&img).ok_or_else(|| {
            Error::precondition(format!("loop {i} has non-quasiunipotent image"))
        })?;
        m = m.lcm(&order);
    }
    Ok(m)
}

fn pow_place(place: PrimePlace, k: i64) -> Rat {
    let p = BigInt::from(place.p());
    if k >= 0 {
        Rat::from_integer(p.pow(k as u32))
    } else {
        Rat::new(BigInt::one(), p.pow((-k) as u32))
    }
}

/// A basis of a full lattice stabilised (together with its inverse action) by
/// every matrix in a commuting unipotent family: constructed by a common
/// invariant full flag followed by uniformizer rescaling of the flag basis.
pub fn flat_lattice(
    mats: &[Matrix<Rat>],
    dim: usize,
    place: PrimePlace,
) -> Result<Matrix<Rat>> {
    for (i, m) in mats.iter().enumerate() {
        if !m.is_square() || m.rows() != dim {
            return Err(Error::mismatch(format!("matrix {i} is not {dim}x{dim}")));
        }
        let n = m.sub(&Matrix::identity_like(dim, m.sample()));
        if !n.is_nilpotent() {
            return Err(Error::precondition(format!("matrix {i} is not unipotent")));
        }
        for (j, other) in mats.iter().enumerate().skip(i + 1) {
            if m.mul(other) != other.mul(m) {
                return Err(Error::precondition(format!(
                    "matrices {i} and {j} do not commute"
                )));
            }
        }
    }
    let identity = Matrix::identity_like(dim, &Rat::zero());
    if mats.is_empty() {
        return Ok(identity);
    }
    let nils: Vec<Matrix<Rat>> = mats
        .iter()
        .map(|m| m.sub(&identity))
        .collect();

    // common invariant flag: repeatedly take the joint kernel of the maps
    // induced on the quotient by the accumulated flag
    let std_cols: Vec<Vec<Rat>> = (0..dim).map(|i| identity.col(i)).collect();
    let mut flag: Vec<Vec<Rat>> = Vec::new();
    while flag.len() < dim {
        let k = flag.len();
        let kept = extend_basis(&flag, &std_cols);
        let mut cols = flag.clone();
        for &i in &kept {
            cols.push(std_cols[i].clone());
        }
        let p = Matrix::from_cols(cols)?;
        let p_inv = p
            .inverse()
            .ok_or_else(|| Error::internal("flag completion singular"))?;
        let quot_rows: Vec<usize> = (k..dim).collect();
        let mut stacked: Option<Matrix<Rat>> = None;
        for nm in &nils {
            let conj = p_inv.mul(nm).mul(&p);
            let block = conj.submatrix(&quot_rows, &quot_rows);
            stacked = Some(match stacked {
                None => block,
                Some(s) => s.vcat(&block),
            });
        }
        let kernel = stacked
            .expect("nonempty matrix family")
            .kernel_basis();
        if kernel.is_empty() {
            return Err(Error::internal(
                "commuting nilpotent family without joint kernel",
            ));
        }
        for y in kernel {
            // lift through the completion columns
            let mut v = vec![Rat::zero(); dim];
            for (t, &i) in kept.iter().enumerate() {
                for (row, entry) in v.iter_mut().enumerate() {
                    *entry += &y[t] * &std_cols[i][row];
                }
            }
            flag.push(v);
        }
    }

    let flag_mat = Matrix::from_cols(flag)?;
    let flag_inv = flag_mat
        .inverse()
        .ok_or_else(|| Error::internal("flag basis singular"))?;

    // rescale flag vectors so every strictly upper entry becomes integral
    let mut exponents = vec![0i64; dim];
    for j in 1..dim {
        let mut k_j = exponents[j - 1];
        for nm in &nils {
            let conj = flag_inv.mul(nm).mul(&flag_mat);
            for l in 0..j {
                if let Valuation::Finite(v) = place.valuation(conj.at(l, j)) {
                    k_j = k_j.max(exponents[l] - v);
                }
            }
        }
        exponents[j] = k_j;
    }
    let scaled = Matrix::from_fn(dim, dim, |r, c| {
        flag_mat.at(r, c) * pow_place(place, exponents[c])
    });
    let scaled_inv = scaled
        .inverse()
        .ok_or_else(|| Error::internal("scaled flag singular"))?;

    // stability in both directions, re-verified exactly
    for m in mats {
        for probe in [m.clone(), m.inverse().unwrap()] {
            let conj = scaled_inv.mul(&probe).mul(&scaled);
            for r in 0..dim {
                for c in 0..dim {
                    if let Valuation::Finite(v) = place.valuation(conj.at(r, c)) {
                        if v < 0 {
                            return Err(Error::internal("lattice not stable under the family"));
                        }
                    }
                }
            }
        }
    }
    Ok(scaled)
}

/// The unique increasing filtration of a nilpotent endomorphism with
/// `N W_k <= W_{k-2}` and `N^k : gr_k ~ gr_{-k}`, realised by an adapted
/// basis whose columns are sorted by weight.
#[derive(Clone, Debug)]
pub struct WeightFiltration<T: Scalar> {
    ambient: usize,
    adapted: Matrix<T>,
    col_weights: Vec<i64>,
}

impl<T: Scalar> WeightFiltration<T> {
    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// Columns of the adapted basis, weight-sorted ascending.
    pub fn adapted_basis(&self) -> &Matrix<T> {
        &self.adapted
    }

    pub fn column_weights(&self) -> &[i64] {
        &self.col_weights
    }

    pub fn w_basis(&self, k: i64) -> Vec<Vec<T>> {
        (0..self.ambient)
            .filter(|&i| self.col_weights[i] <= k)
            .map(|i| self.adapted.col(i))
            .collect()
    }

    pub fn w_dim(&self, k: i64) -> usize {
        self.col_weights.iter().filter(|&&w| w <= k).count()
    }

    pub fn gr_dim(&self, k: i64) -> usize {
        self.col_weights.iter().filter(|&&w| w == k).count()
    }

    pub fn gr_dims(&self) -> BTreeMap<i64, usize> {
        let mut out = BTreeMap::new();
        for &w in &self.col_weights {
            *out.entry(w).or_insert(0) += 1;
        }
        out
    }
}

/// Builds the weight filtration of a nilpotent matrix from its Jordan string
/// structure, then re-verifies both defining axioms exactly on the output.
pub fn weight_filtration<T: Scalar>(n_mat: &Matrix<T>) -> Result<WeightFiltration<T>> {
    if !n_mat.is_square() {
        return Err(Error::mismatch("nilpotent endomorphism must be square"));
    }
    let n = n_mat.rows();
    if !n_mat.is_nilpotent() {
        return Err(Error::precondition("endomorphism is not nilpotent"));
    }

    // kernel chain
    let mut kernels: Vec<Vec<Vec<T>>> = Vec::new();
    let mut power = Matrix::identity_like(n, n_mat.sample());
    loop {
        power = power.mul(n_mat);
        let k = power.kernel_basis();
        let full = k.len() == n;
        kernels.push(k);
        if full {
            break;
        }
    }
    let depth = kernels.len();

    // Jordan strings, longest first: at level j the new string tops are
    // kernel vectors of N^j independent modulo ker N^{j-1} and the images of
    // the longer strings
    let mut strings: Vec<Vec<Vec<T>>> = Vec::new();
    for j in (1..=depth).rev() {
        let mut context: Vec<Vec<T>> = if j >= 2 {
            kernels[j - 2].clone()
        } else {
            Vec::new()
        };
        for s in &strings {
            // the member of each longer string lying in ker N^j \ ker N^{j-1}
            if s.len() >= j {
                context.push(s[s.len() - j].clone());
            }
        }
        let candidates = &kernels[j - 1];
        for idx in extend_basis(&context, candidates) {
            let mut chain = Vec::with_capacity(j);
            let mut cur = candidates[idx].clone();
            for _ in 0..j {
                chain.push(cur.clone());
                cur = n_mat.mul_vec(&cur);
            }
            context.push(chain[0].clone());
            strings.push(chain);
        }
    }

    // weights: a string of length l carries l-1, l-3, ..., 1-l
    let mut cols: Vec<(i64, Vec<T>)> = Vec::new();
    for s in &strings {
        let l = s.len() as i64;
        for (i, v) in s.iter().enumerate() {
            cols.push((l - 1 - 2 * i as i64, v.clone()));
        }
    }
    if cols.len() != n {
        return Err(Error::internal("Jordan strings do not fill the space"));
    }
    cols.sort_by_key(|(w, _)| *w);
    let col_weights: Vec<i64> = cols.iter().map(|(w, _)| *w).collect();
    let adapted = Matrix::from_cols(cols.into_iter().map(|(_, v)| v).collect())?;
    if adapted.inverse().is_none() {
        return Err(Error::internal("adapted weight basis singular"));
    }

    let wf = WeightFiltration {
        ambient: n,
        adapted,
        col_weights,
    };
    verify_weight_axioms(n_mat, &wf)?;
    Ok(wf)
}

/// Exact check of the two defining axioms; public so tests can reject
/// near-miss filtrations.
pub fn verify_weight_axioms<T: Scalar>(
    n_mat: &Matrix<T>,
    wf: &WeightFiltration<T>,
) -> Result<()> {
    let n = wf.ambient;
    // axiom 1: N W_k <= W_{k-2}
    for i in 0..n {
        let w = wf.col_weights[i];
        let image = n_mat.mul_vec(&wf.adapted.col(i));
        if !in_span(&wf.w_basis(w - 2), &image) {
            return Err(Error::internal("axiom N W_k <= W_{k-2} fails"));
        }
    }
    // axiom 2: N^k : gr_k ~ gr_{-k} for k >= 0
    let &max_w = wf.col_weights.iter().max().unwrap_or(&0);
    for k in 0..=max_w.max(0) {
        if wf.gr_dim(k) != wf.gr_dim(-k) {
            return Err(Error::internal("graded dimensions are not symmetric"));
        }
        if k == 0 || wf.gr_dim(k) == 0 {
            continue;
        }
        let nk = n_mat.pow(k as u64);
        // express N^k (gr_k basis) in gr_{-k} modulo W_{-k-1}
        let targets: Vec<Vec<T>> = (0..n)
            .filter(|&i| wf.col_weights[i] == -k)
            .map(|i| wf.adapted.col(i))
            .collect();
        let lower = wf.w_basis(-k - 1);
        let mut solver_cols = targets.clone();
        solver_cols.extend(lower.iter().cloned());
        let solver = Matrix::from_cols(solver_cols)?;
        let mut induced_cols = Vec::new();
        for i in (0..n).filter(|&i| wf.col_weights[i] == k) {
            let img = nk.mul_vec(&wf.adapted.col(i));
            let x = solver
                .solve(&img)
                .ok_or_else(|| Error::internal("N^k image escapes W_{-k}"))?;
            induced_cols.push(x[..targets.len()].to_vec());
        }
        let induced = Matrix::from_cols(induced_cols)?;
        if induced.inverse().is_none() {
            return Err(Error::internal("N^k is not bijective gr_k -> gr_{-k}"));
        }
    }
    Ok(())
}

/// Passes to the graded pieces of the weight filtration of `rho(gamma) - 1`:
/// the output representation has the same rank, `gamma` acts trivially, and
/// every word keeps its characteristic polynomial.
pub fn graded_nearby_cycles<T: Scalar>(
    rep: &GroupRep<T>,
    gamma: &Word,
) -> Result<GroupRep<T>> {
    let t_mat = rep.eval(gamma)?;
    let identity = Matrix::identity_like(rep.rank(), t_mat.sample());
    let n_mat = t_mat.sub(&identity);
    if !n_mat.is_nilpotent() {
        return Err(Error::precondition("gamma does not act unipotently"));
    }
    for (i, g) in rep.generators().iter().enumerate() {
        if g.mul(&t_mat) != t_mat.mul(g) {
            return Err(Error::precondition(format!(
                "gamma is not central on the image: generator {} does not commute",
                i + 1
            )));
        }
    }
    let wf = weight_filtration(&n_mat)?;

    // stability of each W_k under every generator (functoriality; a failure
    // here is a hard invariant violation)
    for g in rep.generators() {
        for i in 0..wf.ambient {
            let w = wf.col_weights[i];
            let img = g.mul_vec(&wf.adapted.col(i));
            if !in_span(&wf.w_basis(w), &img) {
                return Err(Error::internal("weight filtration not generator-stable"));
            }
        }
    }

    let p = wf.adapted.clone();
    let p_inv = p
        .inverse()
        .ok_or_else(|| Error::internal("adapted basis singular"))?;
    let mut gr_mats = Vec::with_capacity(rep.generators().len());
    for g in rep.generators() {
        let conj = p_inv.mul(g).mul(&p);
        let gr = Matrix::from_fn(wf.ambient, wf.ambient, |r, c| {
            if wf.col_weights[r] == wf.col_weights[c] {
                conj.at(r, c).clone()
            } else {
                conj.at(r, c).zero_like()
            }
        });
        gr_mats.push(gr);
    }
    let out = GroupRep::new(rep.presentation().clone(), gr_mats)?;
    // gamma must become trivial on the graded pieces
    if !out.eval(gamma)?.is_identity() {
        return Err(Error::internal("gamma acts nontrivially on the graded pieces"));
    }
    Ok(out)
}

/// Scalars over which minimal polynomials can be (at least partially)
/// factored, enabling the splitting of semisimple layers.
pub trait SplitScalar: Scalar {
    /// Monic factorisation `p = prod f_i^{e_i}`; `None` when no factorisation
    /// is available over this field.
    fn factor_minpoly(p: &[Self]) -> Option<Vec<(Vec<Self>, usize)>>;
}

impl SplitScalar for Rat {
    fn factor_minpoly(p: &[Rat]) -> Option<Vec<(Vec<Rat>, usize)>> {
        Some(poly::factor(p))
    }
}

impl SplitScalar for NfElem {
    fn factor_minpoly(p: &[NfElem]) -> Option<Vec<(Vec<NfElem>, usize)>> {
        // factor through Q when all coefficients are rational; factors over Q
        // remain valid (possibly non-irreducible) factors over the field
        let sample = p.first()?;
        let rats: Option<Vec<Rat>> = p.iter().map(|c| c.as_rat()).collect();
        let rats = rats?;
        let factored = poly::factor(&rats);
        Some(
            factored
                .into_iter()
                .map(|(f, e)| {
                    let lifted = f
                        .into_iter()
                        .map(|c| sample.field().from_rat(c))
                        .collect();
                    (lifted, e)
                })
                .collect(),
        )
    }
}

/// Block-diagonal direct sum of the composition factors of the input, via the
/// radical series of the generated matrix algebra (radical = kernel of the
/// trace pairing in characteristic zero), with each semisimple layer further
/// split through its endomorphism algebra.
pub fn semisimplify<T: SplitScalar>(rep: &GroupRep<T>) -> Result<GroupRep<T>> {
    let r = rep.rank();
    let sample = rep.generator(0).sample().clone();

    // basis of the unital algebra generated by the images
    let mut algebra: Vec<Matrix<T>> = Vec::new();
    let mut span: Vec<Vec<T>> = Vec::new();
    let mut queue: Vec<Matrix<T>> = vec![Matrix::identity_like(r, &sample)];
    while let Some(m) = queue.pop() {
        let v = m.vectorize();
        if in_span(&span, &v) {
            continue;
        }
        span.push(v);
        for g in rep.generators() {
            queue.push(m.mul(g));
        }
        algebra.push(m);
    }

    // radical of the algebra: kernel of the trace form
    let dim_a = algebra.len();
    let gram = Matrix::from_fn(dim_a, dim_a, |i, j| algebra[i].mul(&algebra[j]).trace());
    let radical: Vec<Matrix<T>> = gram
        .kernel_basis()
        .into_iter()
        .map(|coeffs| {
            let mut acc = Matrix::zero_like(r, r, &sample);
            for (c, b) in coeffs.iter().zip(&algebra) {
                acc = acc.add(&b.scale(c));
            }
            acc
        })
        .collect();

    // radical series of the module: V > JV > J^2 V > ... > 0
    let std_cols: Vec<Vec<T>> = {
        let id = Matrix::identity_like(r, &sample);
        (0..r).map(|i| id.col(i)).collect()
    };
    let mut layers: Vec<Vec<Vec<T>>> = vec![std_cols];
    loop {
        let cur = layers.last().unwrap();
        let mut next: Vec<Vec<T>> = Vec::new();
        for j in &radical {
            for v in cur {
                let img = j.mul_vec(v);
                if !img.iter().all(|x| x.is_zero()) && !in_span(&next, &img) {
                    next.push(img);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        if span_rank(&next) >= span_rank(cur) {
            return Err(Error::internal("radical series does not descend"));
        }
        layers.push(next);
    }

    // chain basis, deepest layer first, then split each semisimple layer
    let mut chain: Vec<Vec<T>> = Vec::new();
    let mut layer_sizes: Vec<usize> = Vec::new();
    for layer in layers.iter().rev() {
        let picked = extend_basis(&chain, layer);
        layer_sizes.push(picked.len());
        for idx in picked {
            chain.push(layer[idx].clone());
        }
    }
    let p = Matrix::from_cols(chain)?;
    let p_inv = p
        .inverse()
        .ok_or_else(|| Error::internal("chain basis singular"))?;
    let conj: Vec<Matrix<T>> = rep
        .generators()
        .iter()
        .map(|g| p_inv.mul(g).mul(&p))
        .collect();

    // per-layer generator blocks
    let mut pieces: Vec<Vec<Matrix<T>>> = Vec::new();
    let mut offset = 0usize;
    for &size in &layer_sizes {
        if size == 0 {
            continue;
        }
        let idx: Vec<usize> = (offset..offset + size).collect();
        let blocks: Vec<Matrix<T>> = conj.iter().map(|c| c.submatrix(&idx, &idx)).collect();
        pieces.extend(split_semisimple(blocks)?);
        offset += size;
    }

    let final_mats: Vec<Matrix<T>> = (0..rep.generators().len())
        .map(|g| {
            let blocks: Vec<Matrix<T>> = pieces.iter().map(|piece| piece[g].clone()).collect();
            Matrix::block_diag(&blocks)
        })
        .collect();
    GroupRep::new(rep.presentation().clone(), final_mats)
}

/// Splits a semisimple module, presented by its generator actions, into
/// direct summands using zero divisors of the endomorphism algebra.  Falls
/// back to the unsplit module when no element of the finite candidate set
/// factors over the coefficient field.
fn split_semisimple<T: SplitScalar>(gens: Vec<Matrix<T>>) -> Result<Vec<Vec<Matrix<T>>>> {
    let d = gens[0].rows();
    if d <= 1 {
        return Ok(vec![gens]);
    }
    let sample = gens[0].sample().clone();
    let id = Matrix::identity_like(d, &sample);

    // commutant: X with Xg = gX for every generator
    let mut stacked: Option<Matrix<T>> = None;
    for g in &gens {
        let op = id.kronecker(g).sub(&g.transpose().kronecker(&id));
        stacked = Some(match stacked {
            None => op,
            Some(s) => s.vcat(&op),
        });
    }
    let commutant: Vec<Matrix<T>> = stacked
        .unwrap()
        .kernel_basis()
        .into_iter()
        .map(|v| Matrix::from_vectorized(d, d, &v))
        .collect();
    if commutant.len() <= 1 {
        return Ok(vec![gens]);
    }

    let mut candidates: Vec<Matrix<T>> = Vec::new();
    for x in &commutant {
        candidates.push(x.clone());
    }
    for i in 0..commutant.len() {
        for j in (i + 1)..commutant.len() {
            candidates.push(commutant[i].add(&commutant[j]));
        }
    }

    for x in &candidates {
        // skip scalars
        let diag = x.at(0, 0).clone();
        if x.sub(&id.scale(&diag)).is_zero() {
            continue;
        }
        let mu = x.min_poly();
        let Some(factors) = T::factor_minpoly(&mu) else {
            continue;
        };
        if factors.len() == 1 && factors[0].1 == 1 {
            continue; // irreducible minimal polynomial: no zero divisor here
        }
        if factors.len() >= 2 {
            // primary decomposition along x: automatic direct sum of submodules
            let mut out = Vec::new();
            let mut total = 0usize;
            for (f, e) in &factors {
                let fx = x.poly_eval(f).pow(*e as u64);
                let kernel = fx.kernel_basis();
                if kernel.is_empty() {
                    continue;
                }
                total += kernel.len();
                let q = Matrix::from_cols(kernel)?;
                out.extend(split_semisimple(restrict_action(&gens, &q)?)?);
            }
            if total != d {
                return Err(Error::internal(
                    "primary decomposition does not fill the module",
                ));
            }
            return Ok(out);
        }
        // mu = f^e with e >= 2: f(x) is a nonzero nilpotent of the commutant,
        // so ker f(x) is a proper submodule; split along it through an
        // invariant projection (always solvable for a semisimple module)
        let u = x.poly_eval(&factors[0].0).kernel_basis();
        if u.is_empty() || u.len() == d {
            return Err(Error::internal("nilpotent commutant kernel degenerate"));
        }
        if let Some((first, second)) = split_along_submodule(&gens, &u)? {
            let mut out = split_semisimple(first)?;
            out.extend(split_semisimple(second)?);
            return Ok(out);
        }
    }
    Ok(vec![gens])
}

/// Generator actions restricted to the invariant subspace spanned by `q`.
fn restrict_action<T: Scalar>(gens: &[Matrix<T>], q: &Matrix<T>) -> Result<Vec<Matrix<T>>> {
    let mut piece_gens = Vec::with_capacity(gens.len());
    for g in gens {
        let img_cols: Vec<Vec<T>> = (0..q.cols()).map(|c| g.mul_vec(&q.col(c))).collect();
        piece_gens.push(solve_columns(q, &img_cols)?);
    }
    Ok(piece_gens)
}

/// Splits the module along the invariant subspace `u` by solving for an
/// equivariant projection onto it; `None` when no invariant complement
/// exists (never for a semisimple module).
fn split_along_submodule<T: Scalar>(
    gens: &[Matrix<T>],
    u: &[Vec<T>],
) -> Result<Option<(Vec<Matrix<T>>, Vec<Matrix<T>>)>> {
    let d = gens[0].rows();
    let k = u.len();
    let sample = gens[0].sample().clone();
    let id = Matrix::identity_like(d, &sample);
    let u_mat = Matrix::from_cols(u.to_vec())?;

    // unknowns: vec(X), d^2 entries; constraints:
    //   equivariance  (I (x) g - g^T (x) I) vec(X) = 0
    //   image in U    (I (x) R) vec(X) = 0, rows of R spanning the left kernel of U
    //   fixes U       (u_j^T (x) I) vec(X) = u_j
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut rhs: Vec<T> = Vec::new();
    for g in gens {
        let op = id.kronecker(g).sub(&g.transpose().kronecker(&id));
        for r in 0..op.rows() {
            rows.push(op.row(r));
            rhs.push(sample.zero_like());
        }
    }
    let left_kernel = u_mat.transpose().kernel_basis();
    if !left_kernel.is_empty() {
        let r_mat = Matrix::from_cols(left_kernel)?.transpose();
        let op = id.kronecker(&r_mat);
        for r in 0..op.rows() {
            rows.push(op.row(r));
            rhs.push(sample.zero_like());
        }
    }
    for col in u {
        let ut = Matrix::from_rows(vec![col.clone()])?; // 1 x d
        let op = ut.kronecker(&id); // d x d^2
        for r in 0..op.rows() {
            rows.push(op.row(r));
            rhs.push(col[r].clone());
        }
    }
    let system = Matrix::from_rows(rows)?;
    let Some(x_vec) = system.solve(&rhs) else {
        return Ok(None);
    };
    let proj = Matrix::from_vectorized(d, d, &x_vec);
    let complement = proj.kernel_basis();
    if complement.len() != d - k {
        return Err(Error::internal("projection kernel has wrong dimension"));
    }
    let q_u = Matrix::from_cols(u.to_vec())?;
    let q_c = Matrix::from_cols(complement)?;
    Ok(Some((
        restrict_action(gens, &q_u)?,
        restrict_action(gens, &q_c)?,
    )))
}

/// Expresses each image column in the basis `q`, returning the coefficient
/// matrix (the action in the subspace coordinates).
fn solve_columns<T: Scalar>(q: &Matrix<T>, images: &[Vec<T>]) -> Result<Matrix<T>> {
    let k = q.cols();
    let mut cols = Vec::with_capacity(images.len());
    for img in images {
        let x = q
            .solve(img)
            .ok_or_else(|| Error::internal("image escapes invariant subspace"))?;
        cols.push(x[..k].to_vec());
    }
    Matrix::from_cols(cols)
}

/// A multiset of rational residues.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueMultiset {
    pub residues: Vec<Rat>,
}

/// A multiset of roots of unity, each encoded as the reduced fraction
/// `t in [0,1)` with the root `exp(2 pi i t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitRootMultiset {
    pub roots: Vec<Rat>,
}

/// Maps each residue `a` to the root of unity `exp(-2 pi i a)`, encoded as
/// the fractional part of `-a`; periodic in `a -> a + 1` by construction.
pub fn residue_exponential(residues: &ResidueMultiset) -> UnitRootMultiset {
    let roots = residues
        .residues
        .iter()
        .map(|a| {
            let neg = -a;
            &neg - neg.floor()
        })
        .collect();
    UnitRootMultiset { roots }
}

/// Exact Gaussian rational, used by the exact KMS path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaussRat {
    pub re: Rat,
    pub im: Rat,
}

impl GaussRat {
    pub fn new(re: Rat, im: Rat) -> Self {
        GaussRat { re, im }
    }

    pub fn zero() -> Self {
        GaussRat {
            re: Rat::zero(),
            im: Rat::zero(),
        }
    }

    pub fn conj(&self) -> Self {
        GaussRat {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        GaussRat {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        GaussRat {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        GaussRat {
            re: &self.re * c,
            im: &self.im * c,
        }
    }
}

/// Exact KMS rescaling: `p = a + 2 Re(lambda conj(alpha))`,
/// `e = alpha - a lambda - conj(alpha) lambda^2`.
pub fn kms_rescale_exact(a: &Rat, alpha: &GaussRat, lambda: &GaussRat) -> (Rat, GaussRat) {
    let la = lambda.mul(&alpha.conj());
    let p = a + rat(2) * &la.re;
    let e = alpha
        .sub(&lambda.scale(a))
        .sub(&alpha.conj().mul(&lambda.mul(lambda)));
    (p, e)
}

/// Exact inverse of the rescaling for a fixed `lambda`: solves the underlying
/// real-linear 3x3 system, which has determinant `(1 + |lambda|^2)^2`.
pub fn kms_unrescale_exact(p: &Rat, e: &GaussRat, lambda: &GaussRat) -> (Rat, GaussRat) {
    let (x, y) = (lambda.re.clone(), lambda.im.clone());
    let s = &x * &x - &y * &y;
    let two = rat(2);
    let m = Matrix::from_rows(vec![
        vec![Rat::one(), &two * &x, &two * &y],
        vec![-x.clone(), Rat::one() - &s, -&two * &x * &y],
        vec![-y.clone(), -&two * &x * &y, Rat::one() + &s],
    ])
    .unwrap();
    let sol = m
        .solve(&[p.clone(), e.re.clone(), e.im.clone()])
        .expect("KMS system is always invertible");
    (
        sol[0].clone(),
        GaussRat::new(sol[1].clone(), sol[2].clone()),
    )
}

/// Floating-point KMS rescaling for bookkeeping/reporting.
pub fn kms_rescale_f64(a: f64, alpha: (f64, f64), lambda: (f64, f64)) -> (f64, (f64, f64)) {
    let (ar, ai) = alpha;
    let (lr, li) = lambda;
    // lambda * conj(alpha)
    let re_la = lr * ar + li * ai;
    let p = a + 2.0 * re_la;
    // lambda^2
    let (l2r, l2i) = (lr * lr - li * li, 2.0 * lr * li);
    // conj(alpha) * lambda^2
    let (cr, ci) = (ar * l2r + ai * l2i, ar * l2i - ai * l2r);
    let e = (ar - a * lr - cr, ai - a * li - ci);
    (p, e)
}

/// Floating-point inverse of the rescaling.
pub fn kms_unrescale_f64(p: f64, e: (f64, f64), lambda: (f64, f64)) -> (f64, (f64, f64)) {
    let (x, y) = lambda;
    let s = x * x - y * y;
    // rows of the forward 3x3 matrix on (a, Re alpha, Im alpha)
    let m = [
        [1.0, 2.0 * x, 2.0 * y],
        [-x, 1.0 - s, -2.0 * x * y],
        [-y, -2.0 * x * y, 1.0 + s],
    ];
    let b = [p, e.0, e.1];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let inv = |r: usize, c: usize| -> f64 {
        // cofactor transpose / det
        let (r1, r2) = match c {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (c1, c2) = match r {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let minor = m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1];
        let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor / det
    };
    let a = inv(0, 0) * b[0] + inv(0, 1) * b[1] + inv(0, 2) * b[2];
    let re = inv(1, 0) * b[0] + inv(1, 1) * b[1] + inv(1, 2) * b[2];
    let im = inv(2, 0) * b[0] + inv(2, 1) * b[1] + inv(2, 2) * b[2];
    (a, (re, im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rat_frac;

    fn m(rows: Vec<Vec<i64>>) -> Matrix<Rat> {
        Matrix::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(rat).collect())
                .collect(),
        )
        .unwrap()
    }

    fn z_rep(mat: Matrix<Rat>) -> GroupRep<Rat> {
        GroupRep::new(GroupPresentation::free(1), vec![mat]).unwrap()
    }

    #[test]
    fn words() {
        assert!(word_is_reduced(&vec![1, 2, -1]));
        assert!(!word_is_reduced(&vec![1, -1]));
        assert_eq!(reduce_word(&vec![1, 2, -2, -1, 3]), vec![3]);
    }

    #[test]
    fn rep_validation() {
        let pres = GroupPresentation::new(2, vec![vec![1, 2, -1, -2]]).unwrap();
        // commuting matrices satisfy the relator
        let a = m(vec![vec![1, 1], vec![0, 1]]);
        let b = m(vec![vec![3, 5], vec![0, 3]]);
        assert!(GroupRep::new(pres.clone(), vec![a.clone(), b]).is_ok());
        // non-commuting matrices do not
        let c = m(vec![vec![1, 0], vec![1, 1]]);
        assert!(GroupRep::new(pres, vec![a.clone(), c]).is_err());
        // singular generators rejected
        let sing = m(vec![vec![1, 0], vec![0, 0]]);
        assert!(GroupRep::new(GroupPresentation::free(1), vec![sing]).is_err());
    }

    #[test]
    fn quasiunipotent_examples() {
        let id = m(vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(quasiunipotent_order(&id), Some(1));
        let rot = m(vec![vec![0, -1], vec![1, 0]]);
        assert_eq!(quasiunipotent_order(&rot), Some(4));
        let two = m(vec![vec![2]]);
        assert_eq!(quasiunipotent_order(&two), None);
        // unipotent but not semisimple
        let j = m(vec![vec![1, 1], vec![0, 1]]);
        assert_eq!(quasiunipotent_order(&j), Some(1));
        // -1 times a Jordan block: order 2
        let nj = m(vec![vec![-1, 1], vec![0, -1]]);
        assert_eq!(quasiunipotent_order(&nj), Some(2));
    }

    #[test]
    fn quasiunipotent_order_minimality() {
        // order 6 matrix: companion of x^2 - x + 1 (primitive 6th root)
        let c6 = m(vec![vec![0, -1], vec![1, 1]]);
        let order = quasiunipotent_order(&c6).unwrap();
        assert_eq!(order, 6);
        let n = c6.rows();
        let id = Matrix::identity_like(n, &Rat::zero());
        let unip = |mm: &Matrix<Rat>| mm.sub(&id).is_nilpotent();
        assert!(unip(&c6.pow(order)));
        for d in 1..order {
            if order % d == 0 {
                assert!(!unip(&c6.pow(d)), "proper divisor {d} already unipotent");
            }
        }
    }

    #[test]
    fn quasiunipotent_number_field() {
        // over Q(i), the 1x1 matrix [i] has order 4
        let field = crate::scalars::NumberField::new(vec![rat(1), rat(0), rat(1)]).unwrap();
        let i = field.generator();
        let mat = Matrix::from_rows(vec![vec![i]]).unwrap();
        assert_eq!(quasiunipotent_order(&mat), Some(4));
    }

    #[test]
    fn reduction_exponent() {
        let pres = GroupPresentation::free(2);
        let rot4 = m(vec![vec![0, -1], vec![1, 0]]);
        let rot6 = m(vec![vec![0, -1], vec![1, 1]]);
        let rep = GroupRep::new(pres, vec![rot4, rot6]).unwrap();
        assert_eq!(
            unipotent_reduction_exponent(&rep, &[vec![1], vec![2]]).unwrap(),
            12
        );
        assert_eq!(unipotent_reduction_exponent(&rep, &[]).unwrap(), 1);
        // unipotent loops give exponent 1
        let unip = GroupRep::new(
            GroupPresentation::free(1),
            vec![m(vec![vec![1, 1], vec![0, 1]])],
        )
        .unwrap();
        assert_eq!(unipotent_reduction_exponent(&unip, &[vec![1]]).unwrap(), 1);
        // non-quasiunipotent loop errors
        let bad = z_rep(m(vec![vec![2]]));
        assert!(unipotent_reduction_exponent(&bad, &[vec![1]]).is_err());
    }

    #[test]
    fn flat_lattice_examples() {
        let place = PrimePlace::new(2).unwrap();
        // integral entries already stabilise the standard lattice
        let u = m(vec![vec![1, 1], vec![0, 1]]);
        let b = flat_lattice(&[u], 2, place).unwrap();
        assert_eq!(b, Matrix::identity_like(2, &Rat::zero()));

        // denominator forces a rescaled lattice
        let v = Matrix::from_rows(vec![
            vec![rat(1), rat_frac(1, 2)],
            vec![rat(0), rat(1)],
        ])
        .unwrap();
        let b2 = flat_lattice(&[v.clone()], 2, place).unwrap();
        // stability is what matters; spot-check the expected basis {(1,0),(0,2)}
        let expected = m(vec![vec![1, 0], vec![0, 2]]);
        assert_eq!(b2, expected);

        // empty family: standard lattice
        let b3 = flat_lattice(&[], 2, place).unwrap();
        assert_eq!(b3, Matrix::identity_like(2, &Rat::zero()));

        // non-unipotent input rejected
        assert!(flat_lattice(&[m(vec![vec![2]])], 1, place).is_err());
        // non-commuting input rejected
        let a = m(vec![vec![1, 1], vec![0, 1]]);
        let c = m(vec![vec![1, 0], vec![1, 1]]);
        assert!(flat_lattice(&[a, c], 2, place).is_err());
    }

    #[test]
    fn weight_filtration_examples() {
        // N = 0: everything in weight 0
        let zero = Matrix::zero_like(3, 3, &Rat::zero());
        let wf = weight_filtration(&zero).unwrap();
        assert_eq!(wf.gr_dim(0), 3);
        assert_eq!(wf.w_dim(-1), 0);

        // single 2x2 Jordan block: gr_1 = gr_{-1} = 1, W_{-1} = im N
        let j2 = m(vec![vec![0, 1], vec![0, 0]]);
        let wf2 = weight_filtration(&j2).unwrap();
        assert_eq!(wf2.gr_dim(1), 1);
        assert_eq!(wf2.gr_dim(-1), 1);
        let w_minus1 = wf2.w_basis(-1);
        assert_eq!(w_minus1.len(), 1);
        // W_{-1} is spanned by the image of N
        assert!(in_span(&w_minus1, &j2.mul_vec(&[rat(0), rat(1)])));

        // J_3 + J_1: gr dims (2,0,-2) = (1,2,1)
        let j31 = m(vec![
            vec![0, 1, 0, 0],
            vec![0, 0, 1, 0],
            vec![0, 0, 0, 0],
            vec![0, 0, 0, 0],
        ]);
        let wf3 = weight_filtration(&j31).unwrap();
        assert_eq!(wf3.gr_dim(2), 1);
        assert_eq!(wf3.gr_dim(0), 2);
        assert_eq!(wf3.gr_dim(-2), 1);
        assert_eq!(wf3.gr_dim(1), 0);

        // non-nilpotent input rejected
        assert!(weight_filtration(&m(vec![vec![1]])).is_err());
    }

    #[test]
    fn weight_axioms_reject_near_miss() {
        // hand-built wrong filtration for a 2x2 Jordan block: weights (0, 0)
        let j2 = m(vec![vec![0, 1], vec![0, 0]]);
        let wrong = WeightFiltration {
            ambient: 2,
            adapted: Matrix::identity_like(2, &Rat::zero()),
            col_weights: vec![0, 0],
        };
        assert!(verify_weight_axioms(&j2, &wrong).is_err());
        // swapped weights break axiom 1: here N maps the weight -1 column
        // outside W_{-3} = 0
        let swapped = Matrix::from_cols(vec![vec![rat(0), rat(1)], vec![rat(1), rat(0)]]).unwrap();
        let wrong2 = WeightFiltration {
            ambient: 2,
            adapted: swapped,
            col_weights: vec![-1, 1],
        };
        assert!(verify_weight_axioms(&j2, &wrong2).is_err());
    }

    #[test]
    fn graded_nearby_cycles_examples() {
        // trivial gamma: output isomorphic to input
        let rep = z_rep(m(vec![vec![3, 0], vec![0, 5]]));
        // gamma = empty word acts as the identity
        let out = graded_nearby_cycles(&rep, &vec![]).unwrap();
        assert_eq!(out.rank(), 2);

        // pi_1 = Z, rho(gamma) = J_2: trivial rank-2 output
        let rep2 = z_rep(m(vec![vec![1, 1], vec![0, 1]]));
        let out2 = graded_nearby_cycles(&rep2, &vec![1]).unwrap();
        assert!(out2.generator(0).is_identity());

        // pi_1 = Z^2: gamma = J_2 central, delta upper triangular with 3s
        let pres = GroupPresentation::new(2, vec![vec![1, 2, -1, -2]]).unwrap();
        let gamma = m(vec![vec![1, 1], vec![0, 1]]);
        let delta = m(vec![vec![3, 5], vec![0, 3]]);
        let rep3 = GroupRep::new(pres, vec![gamma, delta]).unwrap();
        let out3 = graded_nearby_cycles(&rep3, &vec![1]).unwrap();
        assert!(out3.generator(0).is_identity());
        let d = out3.generator(1);
        assert_eq!(d, &m(vec![vec![3, 0], vec![0, 3]]));

        // non-central gamma rejected
        let pres_f = GroupPresentation::free(2);
        let a = m(vec![vec![1, 1], vec![0, 1]]);
        let b = m(vec![vec![1, 0], vec![1, 1]]);
        let rep4 = GroupRep::new(pres_f, vec![a, b]).unwrap();
        assert!(graded_nearby_cycles(&rep4, &vec![1]).is_err());

        // non-unipotent gamma rejected
        let rep5 = z_rep(m(vec![vec![2]]));
        assert!(graded_nearby_cycles(&rep5, &vec![1]).is_err());
    }

    #[test]
    fn semisimplify_examples() {
        // unipotent rep of Z: trivial + trivial
        let rep = z_rep(m(vec![vec![1, 1], vec![0, 1]]));
        let ss = semisimplify(&rep).unwrap();
        assert!(ss.generator(0).is_identity());

        // upper triangular with distinct eigenvalues: diag(2,3)
        let rep2 = z_rep(m(vec![vec![2, 1], vec![0, 3]]));
        let ss2 = semisimplify(&rep2).unwrap();
        assert_eq!(ss2.generator(0), &m(vec![vec![2, 0], vec![0, 3]]));

        // irreducible rotation: unchanged
        let rot = m(vec![vec![0, -1], vec![1, 0]]);
        let rep3 = z_rep(rot.clone());
        let ss3 = semisimplify(&rep3).unwrap();
        assert_eq!(ss3.generator(0), &rot);
    }

    #[test]
    fn semisimplify_splits_isotypic_pairs() {
        // two copies of the irreducible rotation, conjugated together: the
        // endomorphism algebra is a 2x2 matrix algebra over the rotation
        // field, and the splitting must recover a 2+2 block structure
        let rot = m(vec![vec![0, -1], vec![1, 0]]);
        let double = Matrix::block_diag(&[rot.clone(), rot.clone()]);
        let s = m(vec![
            vec![1, 0, 1, 0],
            vec![0, 1, 0, 1],
            vec![0, 0, 1, 1],
            vec![0, 0, -1, 1],
        ]);
        let conj = s.mul(&double).mul(&s.inverse().unwrap());
        let rep = z_rep(conj);
        let ss = semisimplify(&rep).unwrap();
        let g = ss.generator(0);
        // block diagonal 2 + 2
        for r in 0..2 {
            for c in 2..4 {
                assert!(Scalar::is_zero(g.at(r, c)), "upper off-block");
                assert!(Scalar::is_zero(g.at(c, r)), "lower off-block");
            }
        }
        // each block is conjugate to the rotation: trace 0, det 1
        for base in [0usize, 2] {
            let idx = [base, base + 1];
            let block = g.submatrix(&idx, &idx);
            assert_eq!(block.trace(), rat(0));
            assert_eq!(block.det(), rat(1));
        }
    }

    #[test]
    fn semisimplify_preserves_char_polys() {
        let pres = GroupPresentation::free(2);
        let a = m(vec![vec![2, 1, 0], vec![0, 3, 1], vec![0, 0, 2]]);
        let b = m(vec![vec![1, 5, -2], vec![0, 1, 7], vec![0, 0, 4]]);
        let rep = GroupRep::new(pres, vec![a, b]).unwrap();
        let ss = semisimplify(&rep).unwrap();
        for w in [
            vec![1],
            vec![2],
            vec![1, 2],
            vec![2, 1, 1],
            vec![1, -2, 1, 2],
        ] {
            assert_eq!(rep.char_b(&w).unwrap(), ss.char_b(&w).unwrap());
        }
        // idempotent up to the same profile
        let ss2 = semisimplify(&ss).unwrap();
        for w in [vec![1], vec![2], vec![1, 2, -1]] {
            assert_eq!(ss.char_b(&w).unwrap(), ss2.char_b(&w).unwrap());
        }
    }

    #[test]
    fn char_b_examples() {
        let rot = m(vec![vec![0, -1], vec![1, 0]]);
        let rep = z_rep(rot);
        // empty word: (x - 1)^2 = x^2 - 2x + 1
        assert_eq!(rep.char_b(&vec![]).unwrap(), vec![rat(1), rat(-2), rat(1)]);
        // the generator: x^2 + 1
        assert_eq!(rep.char_b(&vec![1]).unwrap(), vec![rat(1), rat(0), rat(1)]);
        // conjugation invariance within a bigger rep
        let pres = GroupPresentation::free(2);
        let a = m(vec![vec![0, -1], vec![1, 0]]);
        let b = m(vec![vec![1, 2], vec![0, 1]]);
        let rep2 = GroupRep::new(pres, vec![a, b]).unwrap();
        assert_eq!(
            rep2.char_b(&vec![2, 1, -2]).unwrap(),
            rep2.char_b(&vec![1]).unwrap()
        );
    }

    #[test]
    fn residue_examples() {
        let r = ResidueMultiset {
            residues: vec![rat(0)],
        };
        assert_eq!(residue_exponential(&r).roots, vec![rat(0)]);

        let half = ResidueMultiset {
            residues: vec![rat_frac(1, 2)],
        };
        // exp(-pi i) = -1, encoded as 1/2
        assert_eq!(residue_exponential(&half).roots, vec![rat_frac(1, 2)]);

        let thirds = ResidueMultiset {
            residues: vec![rat(0), rat_frac(1, 3), rat_frac(1, 3)],
        };
        // zeta_3^{-1} encoded as 2/3, componentwise
        assert_eq!(
            residue_exponential(&thirds).roots,
            vec![rat(0), rat_frac(2, 3), rat_frac(2, 3)]
        );

        // periodicity a -> a + 1
        let shifted = ResidueMultiset {
            residues: vec![rat_frac(1, 3) + rat(1)],
        };
        assert_eq!(
            residue_exponential(&shifted).roots,
            residue_exponential(&ResidueMultiset {
                residues: vec![rat_frac(1, 3)]
            })
            .roots
        );
    }

    #[test]
    fn residues_on_the_unit_grid_are_quasiunipotent_data() {
        // residues in (1/n)Z intersected with (-1, 0] exponentiate to roots
        // of unity of order dividing n: quasiunipotent local data
        for n in 1..=6i64 {
            for k in 0..n {
                let a = rat_frac(-k, n);
                let out = residue_exponential(&ResidueMultiset { residues: vec![a] });
                let t = &out.roots[0];
                // order = reduced denominator of t divides n
                assert_eq!(
                    (rat(n) * t).denom(),
                    &num_bigint::BigInt::from(1),
                    "n = {n}, k = {k}"
                );
            }
        }
    }

    #[test]
    fn graded_nearby_cycles_is_stable_once_gamma_trivial() {
        // after one application gamma acts trivially; a second application
        // is a base change only: all word characteristic polynomials agree
        let pres = GroupPresentation::new(2, vec![vec![1, 2, -1, -2]]).unwrap();
        let gamma = m(vec![vec![1, 2], vec![0, 1]]);
        let delta = m(vec![vec![2, 3], vec![0, 2]]);
        let rep = GroupRep::new(pres, vec![gamma, delta]).unwrap();
        let once = graded_nearby_cycles(&rep, &vec![1]).unwrap();
        let twice = graded_nearby_cycles(&once, &vec![1]).unwrap();
        for w in [vec![1], vec![2], vec![1, 2], vec![2, 2, 1]] {
            assert_eq!(once.char_b(&w).unwrap(), twice.char_b(&w).unwrap());
        }
    }

    #[test]
    fn kms_examples() {
        // lambda = 0 is the identity
        let (p, e) = kms_rescale_exact(
            &rat(7),
            &GaussRat::new(rat(3), rat(4)),
            &GaussRat::zero(),
        );
        assert_eq!(p, rat(7));
        assert_eq!(e, GaussRat::new(rat(3), rat(4)));

        // (a, alpha) = (0, i), lambda = 1 -> (0, 2i)
        let (p2, e2) = kms_rescale_exact(
            &rat(0),
            &GaussRat::new(rat(0), rat(1)),
            &GaussRat::new(rat(1), rat(0)),
        );
        assert_eq!(p2, rat(0));
        assert_eq!(e2, GaussRat::new(rat(0), rat(2)));

        // (a, alpha) = (1, 0), lambda = i -> (1, -i)
        let (p3, e3) = kms_rescale_exact(
            &rat(1),
            &GaussRat::zero(),
            &GaussRat::new(rat(0), rat(1)),
        );
        assert_eq!(p3, rat(1));
        assert_eq!(e3, GaussRat::new(rat(0), rat(-1)));

        // exact round trip
        let a = rat_frac(5, 3);
        let alpha = GaussRat::new(rat_frac(-2, 7), rat_frac(9, 4));
        let lambda = GaussRat::new(rat_frac(1, 2), rat_frac(-3, 5));
        let (p4, e4) = kms_rescale_exact(&a, &alpha, &lambda);
        let (a_back, alpha_back) = kms_unrescale_exact(&p4, &e4, &lambda);
        assert_eq!(a_back, a);
        assert_eq!(alpha_back, alpha);
    }
}
