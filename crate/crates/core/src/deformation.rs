//! Cocycle-level deformation theory of framed representation spaces: Fox
//! calculus linearisation of the relator equations, `Z^1`/`B^1`/`H^1`, and
//! order-by-order obstruction lifting over truncated polynomial rings.
//!
//! Obstructions are represented by per-relator residual matrices — exactly
//! what the relator equations produce — and never by a cohomology space
//! computed from the presentation alone.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::monodromy::GroupRep;
use crate::scalars::Scalar;

/// A 1-cochain: one value in `End(V)` per generator.
pub type Cochain<T> = Vec<Matrix<T>>;

/// A group-ring element after evaluation through the representation: a formal
/// signed sum of prefix images, acting on `End(V)` by conjugation.  This is
/// the carrier of the Fox derivatives of a relator word.
#[derive(Clone, Debug)]
pub struct GroupRingElement<T: Scalar> {
    rank: usize,
    sample: T,
    /// Signed conjugation terms `sign * rho(prefix) ( . ) rho(prefix)^{-1}`.
    terms: Vec<(bool, Matrix<T>)>,
}

impl<T: Scalar> GroupRingElement<T> {
    fn zero(rank: usize, sample: T) -> Self {
        GroupRingElement {
            rank,
            sample,
            terms: Vec::new(),
        }
    }

    fn push(&mut self, positive: bool, prefix: Matrix<T>) {
        self.terms.push((positive, prefix));
    }

    pub fn is_zero_sum(&self) -> bool {
        self.terms.is_empty()
    }

    /// Linear action on a cochain value.
    pub fn apply(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut acc = Matrix::zero_like(self.rank, self.rank, &self.sample);
        for (positive, p) in &self.terms {
            let p_inv = p.inverse().expect("prefix images are invertible");
            let term = p.mul(x).mul(&p_inv);
            acc = if *positive { acc.add(&term) } else { acc.sub(&term) };
        }
        acc
    }

    /// The operator matrix on column-stacked `End(V)`.
    pub fn operator_matrix(&self) -> Matrix<T> {
        let rr = self.rank * self.rank;
        let mut acc = Matrix::zero_like(rr, rr, &self.sample);
        for (positive, p) in &self.terms {
            let op = ad_operator(p);
            acc = if *positive { acc.add(&op) } else { acc.sub(&op) };
        }
        acc
    }
}

/// The Fox derivative of a relator with respect to one generator, evaluated
/// through the representation: positive letters contribute the conjugation by
/// the prefix, inverse letters the negated conjugation by the prefix extended
/// through the inverse.
pub fn fox_derivative<T: Scalar>(
    rep: &GroupRep<T>,
    relator: &[i32],
    generator: usize,
) -> GroupRingElement<T> {
    let r = rep.rank();
    let sample = rep.generator(0).sample().clone();
    let mut out = GroupRingElement::zero(r, sample.clone());
    let mut prefix = Matrix::identity_like(r, &sample);
    for &letter in relator {
        let idx = letter.unsigned_abs() as usize - 1;
        if letter > 0 {
            if idx == generator {
                out.push(true, prefix.clone());
            }
            prefix = prefix.mul(rep.generator(idx));
        } else {
            prefix = prefix.mul(rep.generator_inv(idx));
            if idx == generator {
                out.push(false, prefix.clone());
            }
        }
    }
    out
}

/// The linearised relator system: a block matrix `J` with `J vec(c) = 0`
/// exactly when the cochain `c` is a cocycle.  Each block is a Fox derivative
/// evaluated through the representation, acting on `End(V)` by conjugation.
#[derive(Clone, Debug)]
pub struct FoxSystem<T: Scalar> {
    generators: usize,
    rank: usize,
    sample: T,
    /// `None` when the presentation has no relators (everything is a cocycle).
    matrix: Option<Matrix<T>>,
}

/// The operator matrix of `X -> A X A^{-1}` on column-stacked `End(V)`.
fn ad_operator<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    let a_inv = a.inverse().expect("conjugation by invertible matrices");
    a_inv.transpose().kronecker(a)
}

impl<T: Scalar> FoxSystem<T> {
    pub fn new(rep: &GroupRep<T>) -> Result<Self> {
        let s = rep.presentation().generators();
        let r = rep.rank();
        let sample = rep.generator(0).sample().clone();
        let relators = rep.presentation().relators();
        if relators.is_empty() {
            return Ok(FoxSystem {
                generators: s,
                rank: r,
                sample,
                matrix: None,
            });
        }
        let mut rows: Vec<Matrix<T>> = Vec::with_capacity(relators.len());
        for relator in relators {
            // one block row per relator, one Fox-derivative block per generator
            let mut row: Option<Matrix<T>> = None;
            for g in 0..s {
                let block = fox_derivative(rep, relator, g).operator_matrix();
                row = Some(match row {
                    None => block,
                    Some(acc) => acc.hcat(&block),
                });
            }
            rows.push(row.expect("at least one generator"));
        }
        let mut matrix = rows[0].clone();
        for row in &rows[1..] {
            matrix = matrix.vcat(row);
        }
        Ok(FoxSystem {
            generators: s,
            rank: r,
            sample,
            matrix: Some(matrix),
        })
    }

    pub fn matrix(&self) -> Option<&Matrix<T>> {
        self.matrix.as_ref()
    }

    pub fn cochain_dim(&self) -> usize {
        self.generators * self.rank * self.rank
    }

    fn stack<'a>(&self, c: impl Iterator<Item = &'a Matrix<T>>) -> Vec<T>
    where
        T: 'a,
    {
        let mut out = Vec::with_capacity(self.cochain_dim());
        for m in c {
            out.extend(m.vectorize());
        }
        out
    }

    /// Is the cochain a cocycle?
    pub fn is_cocycle(&self, c: &Cochain<T>) -> Result<bool> {
        if c.len() != self.generators {
            return Err(Error::mismatch("one matrix per generator"));
        }
        for m in c {
            if m.rows() != self.rank || m.cols() != self.rank {
                return Err(Error::mismatch("cochain block size"));
            }
        }
        match &self.matrix {
            None => Ok(true),
            Some(j) => {
                let v = self.stack(c.iter());
                Ok(j.mul_vec(&v).iter().all(|x| x.is_zero()))
            }
        }
    }

    pub fn dim_z1(&self) -> usize {
        match &self.matrix {
            None => self.cochain_dim(),
            Some(j) => self.cochain_dim() - j.rank(),
        }
    }

    /// Basis of the cocycle space, one cochain per kernel vector.
    pub fn z1_basis(&self) -> Vec<Cochain<T>> {
        let rr = self.rank * self.rank;
        match &self.matrix {
            Some(j) => j
                .kernel_basis()
                .into_iter()
                .map(|v| self.unstack(&v, rr))
                .collect(),
            None => {
                // free presentation: the standard basis of End(V)^s
                let sample = self.sample();
                let mut out = Vec::with_capacity(self.cochain_dim());
                for g in 0..self.generators {
                    for pos in 0..rr {
                        let mut blocks: Vec<Matrix<T>> = (0..self.generators)
                            .map(|_| Matrix::zero_like(self.rank, self.rank, &sample))
                            .collect();
                        let mut v = vec![sample.zero_like(); rr];
                        v[pos] = sample.one_like();
                        blocks[g] = Matrix::from_vectorized(self.rank, self.rank, &v);
                        out.push(blocks);
                    }
                }
                out
            }
        }
    }

    fn unstack(&self, v: &[T], rr: usize) -> Cochain<T> {
        (0..self.generators)
            .map(|g| Matrix::from_vectorized(self.rank, self.rank, &v[g * rr..(g + 1) * rr]))
            .collect()
    }

    fn sample(&self) -> T {
        self.sample.clone()
    }
}

/// The coboundary of `f`: `g -> Ad(rho(g)) f - f`.
pub fn coboundary<T: Scalar>(rep: &GroupRep<T>, f: &Matrix<T>) -> Cochain<T> {
    rep.generators()
        .iter()
        .zip(0..)
        .map(|(g, i)| g.mul(f).mul(rep.generator_inv(i)).sub(f))
        .collect()
}

/// The coboundary operator as a stacked matrix `End(V) -> End(V)^s`.
fn coboundary_operator<T: Scalar>(rep: &GroupRep<T>) -> Matrix<T> {
    let r = rep.rank();
    let sample = rep.generator(0).sample().clone();
    let id = Matrix::identity_like(r * r, &sample);
    let mut stacked: Option<Matrix<T>> = None;
    for g in rep.generators() {
        let block = ad_operator(g).sub(&id);
        stacked = Some(match stacked {
            None => block,
            Some(s) => s.vcat(&block),
        });
    }
    stacked.expect("representations have at least one generator")
}

pub fn dim_b1<T: Scalar>(rep: &GroupRep<T>) -> usize {
    coboundary_operator(rep).rank()
}

/// `dim H^1 = dim Z^1 - dim B^1`: the tangent dimension of the unframed
/// moduli at the representation.
pub fn dim_h1<T: Scalar>(rep: &GroupRep<T>) -> Result<usize> {
    let fox = FoxSystem::new(rep)?;
    Ok(fox.dim_z1() - dim_b1(rep))
}

/// Z^1 basis of the representation (convenience wrapper).
pub fn z1_basis<T: Scalar>(rep: &GroupRep<T>) -> Result<Vec<Cochain<T>>> {
    Ok(FoxSystem::new(rep)?.z1_basis())
}

/// Outcome of an order-by-order lift.
#[derive(Clone, Debug)]
pub enum LiftOutcome<T: Scalar> {
    /// Lifted to the requested order; `higher[j]` holds the order-(j+2)
    /// cochain coefficients `c_{j+2}`.
    Lifted { higher: Vec<Cochain<T>> },
    /// The inhomogeneous system at `order` is inconsistent; the per-relator
    /// residual matrices represent the obstruction.
    Obstructed {
        order: usize,
        residuals: Vec<Matrix<T>>,
    },
}

/// Truncated matrix polynomial: coefficient matrices of `t^0 .. t^k`.
#[derive(Clone, Debug)]
struct TruncSeries<T: Scalar> {
    coeffs: Vec<Matrix<T>>,
}

impl<T: Scalar> TruncSeries<T> {
    fn constant(m: Matrix<T>, order: usize) -> Self {
        let r = m.rows();
        let sample = m.sample().clone();
        let mut coeffs = vec![m];
        coeffs.resize_with(order + 1, || Matrix::zero_like(r, r, &sample));
        TruncSeries { coeffs }
    }

    fn mul(&self, other: &Self) -> Self {
        let k = self.coeffs.len() - 1;
        let r = self.coeffs[0].rows();
        let sample = self.coeffs[0].sample().clone();
        let mut out = vec![Matrix::zero_like(r, r, &sample); k + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j > k {
                    break;
                }
                if b.is_zero() {
                    continue;
                }
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        TruncSeries { coeffs: out }
    }

    /// Series inverse; the constant term must be invertible.
    fn inverse(&self) -> Self {
        let k = self.coeffs.len() - 1;
        let a0_inv = self.coeffs[0]
            .inverse()
            .expect("constant term must be invertible");
        let r = a0_inv.rows();
        let sample = a0_inv.sample().clone();
        let mut out = vec![Matrix::zero_like(r, r, &sample); k + 1];
        out[0] = a0_inv.clone();
        for m in 1..=k {
            // B_m = -A_0^{-1} sum_{l=1..m} A_l B_{m-l}
            let mut acc = Matrix::zero_like(r, r, &sample);
            for l in 1..=m {
                acc = acc.add(&self.coeffs[l].mul(&out[m - l]));
            }
            out[m] = a0_inv.mul(&acc).neg();
        }
        TruncSeries { coeffs: out }
    }
}

/// Lifts a first-order deformation through the relator equations over
/// `k[t]/t^{order+1}`, one order at a time.
///
/// Coboundaries short-circuit through the exact conjugation lift.  Otherwise
/// each order solves an inhomogeneous linear system with the Fox matrix; on
/// inconsistency the per-relator residuals at the failing order are returned.
pub fn lift_order<T: Scalar>(
    rep: &GroupRep<T>,
    cocycle: &Cochain<T>,
    order: usize,
) -> Result<LiftOutcome<T>> {
    let fox = FoxSystem::new(rep)?;
    if !fox.is_cocycle(cocycle)? {
        return Err(Error::precondition("cochain is not a cocycle"));
    }
    let s = rep.presentation().generators();
    let r = rep.rank();
    let sample = rep.generator(0).sample().clone();
    if order < 2 {
        return Ok(LiftOutcome::Lifted { higher: Vec::new() });
    }

    // coboundary: conjugating by 1 - t f realises the cocycle exactly
    let delta = coboundary_operator(rep);
    let stacked: Vec<T> = cocycle.iter().flat_map(|m| m.vectorize()).collect();
    if let Some(f_vec) = delta.solve(&stacked) {
        let f = Matrix::from_vectorized(r, r, &f_vec);
        let id = Matrix::identity_like(r, &sample);
        // h(t) = 1 - t f
        let mut h = TruncSeries::constant(id.clone(), order);
        h.coeffs[1] = f.neg();
        let h_inv = h.inverse();
        let mut higher: Vec<Cochain<T>> = vec![Vec::with_capacity(s); order - 1];
        for i in 0..s {
            let g_series = TruncSeries::constant(rep.generator(i).clone(), order);
            let conj = h.mul(&g_series).mul(&h_inv);
            // (1 + t c_1 + ...) rho(g) = conj: strip the rho(g) factor
            let ginv = TruncSeries::constant(rep.generator_inv(i).clone(), order);
            let series = conj.mul(&ginv);
            for j in 2..=order {
                higher[j - 2].push(series.coeffs[j].clone());
            }
        }
        return Ok(LiftOutcome::Lifted { higher });
    }

    // general case: order-by-order inhomogeneous solves
    let relators = rep.presentation().relators();
    // per-generator truncated series F_i = (1 + t c + ...) rho(g_i)
    let mut series: Vec<TruncSeries<T>> = (0..s)
        .map(|i| {
            let mut f = TruncSeries::constant(rep.generator(i).clone(), order);
            f.coeffs[1] = cocycle[i].mul(rep.generator(i));
            f
        })
        .collect();
    let mut higher: Vec<Cochain<T>> = Vec::with_capacity(order - 1);
    for j in 2..=order {
        // residuals with the order-j slot still zero
        let mut residuals: Vec<Matrix<T>> = Vec::with_capacity(relators.len());
        for relator in relators {
            let mut acc = TruncSeries::constant(
                Matrix::identity_like(r, &sample),
                order,
            );
            for &letter in relator {
                let idx = letter.unsigned_abs() as usize - 1;
                if letter > 0 {
                    acc = acc.mul(&series[idx]);
                } else {
                    acc = acc.mul(&series[idx].inverse());
                }
            }
            residuals.push(acc.coeffs[j].clone());
        }
        let j_mat = fox
            .matrix()
            .expect("non-coboundary cocycles require relators");
        let rhs: Vec<T> = residuals
            .iter()
            .flat_map(|m| m.vectorize().into_iter().map(|x| x.neg()))
            .collect();
        match j_mat.solve(&rhs) {
            None => {
                return Ok(LiftOutcome::Obstructed {
                    order: j,
                    residuals,
                });
            }
            Some(sol) => {
                let rr = r * r;
                let mut cj: Cochain<T> = Vec::with_capacity(s);
                for g in 0..s {
                    let block = Matrix::from_vectorized(r, r, &sol[g * rr..(g + 1) * rr]);
                    series[g].coeffs[j] = block.mul(rep.generator(g));
                    cj.push(block);
                }
                higher.push(cj);
            }
        }
    }
    Ok(LiftOutcome::Lifted { higher })
}
