//! The space of diagonalisable norms on `Q^n` at a prime place.
//!
//! A [`DiagNorm`] is an ordered basis together with rational log-weights; the
//! vector `sum c_i e_i` has log-norm `max_i (log_q|c_i| - a_i)`.  Weights are
//! restricted to `Q` so that every construction below is exact: functorial
//! norms (dual, quotient, wedge, direct sum), common orthogonal bases by
//! weighted elimination over the valuation ring, relative spectra, the `d_2`
//! and `d_inf` metrics, geodesics, and barycenters.
//!
//! Norm equality is always decided through the relative spectrum, never by
//! comparing representations: the diagonalising data is far from unique.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalars::{rat, LogMag, PrimePlace, Rat, Valuation};

/// A point of the space of norms: basis columns `e_i` with `log_q ||e_i|| = -a_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagNorm {
    place: PrimePlace,
    basis: Matrix<Rat>,
    basis_inv: Matrix<Rat>,
    weights: Vec<Rat>,
}

/// Decreasing sequence of relative log-ratios of two norms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spectrum {
    lambdas: Vec<Rat>,
}

impl Spectrum {
    pub fn lambdas(&self) -> &[Rat] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn max(&self) -> &Rat {
        &self.lambdas[0]
    }

    pub fn min(&self) -> &Rat {
        self.lambdas.last().unwrap()
    }

    pub fn d2_sq(&self) -> Rat {
        self.lambdas.iter().map(|l| l * l).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.lambdas.iter().all(|l| l.is_zero())
    }
}

/// A basis orthogonal for two norms simultaneously, with both weight vectors.
#[derive(Clone, Debug)]
pub struct CommonOrthBasis {
    /// Columns are the common orthogonal basis vectors, ordered so that the
    /// log-ratios `weights_a[i] - weights_b[i]` decrease.
    pub basis: Matrix<Rat>,
    pub weights_a: Vec<Rat>,
    pub weights_b: Vec<Rat>,
}

/// Quotient norm together with the projection realizing the quotient model.
#[derive(Clone, Debug)]
pub struct QuotientNorm {
    /// Norm on the quotient model `Q^(n-k)`.
    pub norm: DiagNorm,
    /// `(n-k) x n` projection; the class of `x` evaluates as `norm.eval(projection * x)`.
    pub projection: Matrix<Rat>,
}

impl DiagNorm {
    pub fn new(place: PrimePlace, basis: Matrix<Rat>, weights: Vec<Rat>) -> Result<Self> {
        if !basis.is_square() {
            return Err(Error::invalid("basis matrix must be square"));
        }
        if basis.rows() != weights.len() {
            return Err(Error::mismatch(format!(
                "{} weights for dimension {}",
                weights.len(),
                basis.rows()
            )));
        }
        let basis_inv = basis
            .inverse()
            .ok_or_else(|| Error::invalid("basis singular"))?;
        Ok(DiagNorm {
            place,
            basis,
            basis_inv,
            weights,
        })
    }

    /// The norm diagonalised in the standard basis with the given weights.
    pub fn standard(place: PrimePlace, weights: Vec<Rat>) -> Self {
        let n = weights.len();
        let basis = Matrix::identity_like(n, &Rat::zero());
        DiagNorm {
            place,
            basis_inv: basis.clone(),
            basis,
            weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn place(&self) -> PrimePlace {
        self.place
    }

    pub fn basis(&self) -> &Matrix<Rat> {
        &self.basis
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn basis_column(&self, i: usize) -> Vec<Rat> {
        self.basis.col(i)
    }

    /// `log_q ||v||`; `NegInf` exactly for the zero vector.
    pub fn eval(&self, v: &[Rat]) -> Result<LogMag> {
        if v.len() != self.dim() {
            return Err(Error::mismatch(format!(
                "vector of length {} against dimension {}",
                v.len(),
                self.dim()
            )));
        }
        let coords = self.basis_inv.mul_vec(v);
        Ok(self.eval_coords(&coords))
    }

    fn eval_coords(&self, coords: &[Rat]) -> LogMag {
        let mut best = LogMag::NegInf;
        for (c, a) in coords.iter().zip(&self.weights) {
            let term = match self.place.log_abs(c) {
                LogMag::NegInf => continue,
                LogMag::Finite(l) => LogMag::Finite(l - a),
            };
            if term > best {
                best = term;
            }
        }
        best
    }

    /// Is the family orthogonal for this norm?  Uses the Hadamard criterion:
    /// the wedge norm of `v_1 ^ ... ^ v_k` equals the sum of the log-norms
    /// exactly when the family is orthogonal.
    pub fn is_orthogonal_family(&self, vectors: &[Vec<Rat>]) -> Result<bool> {
        let k = vectors.len();
        if k == 0 || k > self.dim() {
            return Err(Error::precondition("family size out of range"));
        }
        for v in vectors {
            if v.len() != self.dim() {
                return Err(Error::mismatch("vector dimension"));
            }
        }
        let coord_cols: Vec<Vec<Rat>> = vectors
            .iter()
            .map(|v| self.basis_inv.mul_vec(v))
            .collect();
        let coords = Matrix::from_cols(coord_cols)?;
        if coords.rank() != k {
            return Err(Error::precondition("dependent input"));
        }
        // wedge norm of the decomposable vector
        let mut wedge_max = LogMag::NegInf;
        for subset in subsets(self.dim(), k) {
            let minor = coords.submatrix(&subset, &(0..k).collect::<Vec<_>>()).det();
            let lw: Rat = subset.iter().map(|&i| self.weights[i].clone()).sum();
            if let LogMag::Finite(l) = self.place.log_abs(&minor) {
                let term = LogMag::Finite(l - lw);
                if term > wedge_max {
                    wedge_max = term;
                }
            }
        }
        let mut sum = Rat::zero();
        for c in coords_cols_iter(&coords) {
            match self.eval_coords(&c) {
                LogMag::Finite(l) => sum += l,
                LogMag::NegInf => return Err(Error::precondition("zero vector in family")),
            }
        }
        Ok(wedge_max == LogMag::Finite(sum))
    }

    /// The dual norm, diagonalised in the dual basis with negated weights.
    pub fn dual(&self) -> DiagNorm {
        DiagNorm {
            place: self.place,
            basis: self.basis_inv.transpose(),
            basis_inv: self.basis.transpose(),
            weights: self.weights.iter().map(|a| -a).collect(),
        }
    }

    /// Induced norm on the `r`-th wedge power, diagonalised in the wedge
    /// basis with weights the `r`-fold sums.
    pub fn wedge(&self, r: usize) -> Result<DiagNorm> {
        let n = self.dim();
        if r < 1 || r > n {
            return Err(Error::precondition(format!(
                "wedge exponent {r} out of range 1..={n}"
            )));
        }
        let ss = subsets(n, r);
        let cols: Vec<Vec<Rat>> = ss
            .iter()
            .map(|s| {
                ss.iter()
                    .map(|t| {
                        self.basis.submatrix(t, s).det()
                    })
                    .collect()
            })
            .collect();
        let basis = Matrix::from_cols(cols)?;
        let weights = ss
            .iter()
            .map(|s| s.iter().map(|&i| self.weights[i].clone()).sum())
            .collect();
        DiagNorm::new(self.place, basis, weights)
    }

    /// Wedge-norm evaluation at the decomposable vector `v_1 ^ ... ^ v_r`.
    pub fn eval_wedge(&self, vectors: &[Vec<Rat>]) -> Result<LogMag> {
        let r = vectors.len();
        let wedge = self.wedge(r)?;
        let stacked = Matrix::from_cols(vectors.to_vec())?;
        let coords: Vec<Rat> = subsets(self.dim(), r)
            .iter()
            .map(|t| stacked.submatrix(t, &(0..r).collect::<Vec<_>>()).det())
            .collect();
        wedge.eval(&coords)
    }

    /// Block sum: both summands are orthogonal inside the result.
    pub fn direct_sum(&self, other: &DiagNorm) -> Result<DiagNorm> {
        if self.place != other.place {
            return Err(Error::mismatch("direct sum across different places"));
        }
        let basis = Matrix::block_diag(&[self.basis.clone(), other.basis.clone()]);
        let mut weights = self.weights.clone();
        weights.extend(other.weights.iter().cloned());
        DiagNorm::new(self.place, basis, weights)
    }

    /// The left action `(g . n)(v) = n(g^{-1} v)`: same weights in the moved basis.
    pub fn act(&self, g: &Matrix<Rat>) -> Result<DiagNorm> {
        if !g.is_square() || g.rows() != self.dim() {
            return Err(Error::mismatch("acting matrix dimension"));
        }
        let g_inv = g.inverse().ok_or_else(|| Error::precondition("singular g"))?;
        Ok(DiagNorm {
            place: self.place,
            basis: g.mul(&self.basis),
            basis_inv: self.basis_inv.mul(&g_inv),
            weights: self.weights.clone(),
        })
    }

    /// Orthogonal basis of the subspace spanned by `w` for this norm,
    /// as `(vectors, weights)` in ambient coordinates.
    pub fn restrict(&self, w: &[Vec<Rat>]) -> Result<(Vec<Vec<Rat>>, Vec<Rat>)> {
        let adapted = self.adapted_basis(w)?;
        Ok((adapted.sub_vectors, adapted.sub_weights))
    }

    /// Quotient norm `||x + W|| = inf { ||y|| : y in x + W }`, returned as a
    /// diagonalised norm on the quotient model together with the projection.
    pub fn quotient(&self, w: &[Vec<Rat>]) -> Result<QuotientNorm> {
        let n = self.dim();
        if w.is_empty() {
            return Ok(QuotientNorm {
                norm: self.clone(),
                projection: Matrix::identity_like(n, &Rat::zero()),
            });
        }
        if w.len() >= n {
            return Err(Error::precondition(
                "quotient by the full space has no norm model",
            ));
        }
        let adapted = self.adapted_basis(w)?;
        let k = adapted.sub_vectors.len();
        // full adapted basis: orthogonal basis of W first, kept diagonal vectors after
        let mut cols = adapted.sub_vectors.clone();
        for &l in &adapted.kept {
            cols.push(self.basis.col(l));
        }
        let p = Matrix::from_cols(cols)?;
        let p_inv = p
            .inverse()
            .ok_or_else(|| Error::internal("adapted basis singular"))?;
        let projection = Matrix::from_fn(n - k, n, |r, c| p_inv.at(k + r, c).clone());
        let weights: Vec<Rat> = adapted
            .kept
            .iter()
            .map(|&l| self.weights[l].clone())
            .collect();
        let norm = DiagNorm::standard(self.place, weights);
        Ok(QuotientNorm { norm, projection })
    }

    /// Orthogonal basis of `span(w)` plus the indices of the diagonalising
    /// basis vectors that survive alongside it.
    fn adapted_basis(&self, w: &[Vec<Rat>]) -> Result<AdaptedBasis> {
        let n = self.dim();
        let k = w.len();
        if k == 0 || k > n {
            return Err(Error::precondition("subspace basis size out of range"));
        }
        let coord_cols: Vec<Vec<Rat>> = w.iter().map(|v| {
            assert_eq!(v.len(), n, "subspace vector dimension");
            self.basis_inv.mul_vec(v)
        }).collect();
        if Matrix::from_cols(coord_cols.clone())?.rank() != k {
            return Err(Error::precondition("dependent input"));
        }

        let mut cols = coord_cols;
        let mut remaining: Vec<usize> = (0..k).collect();
        let mut alive: Vec<usize> = (0..n).collect();
        let mut sub_vectors = Vec::with_capacity(k);
        let mut sub_weights = Vec::with_capacity(k);

        while !remaining.is_empty() {
            // entry of minimal valuation + weight = maximal norm contribution
            let mut best: Option<(Rat, usize, usize)> = None;
            for &j in &remaining {
                for &i in &alive {
                    if let Valuation::Finite(v) = self.place.valuation(&cols[j][i]) {
                        let key = rat(v) + &self.weights[i];
                        let better = match &best {
                            None => true,
                            Some((bk, bj, bi)) => {
                                key < *bk || (key == *bk && (j < *bj || (j == *bj && i < *bi)))
                            }
                        };
                        if better {
                            best = Some((key, j, i));
                        }
                    }
                }
            }
            let (key, pj, pi) =
                best.ok_or_else(|| Error::internal("zero column during reduction"))?;
            let pivot_col = cols[pj].clone();
            sub_vectors.push(self.basis.mul_vec(&pivot_col));
            sub_weights.push(key);
            let pivot_entry = pivot_col[pi].clone();
            for &j in &remaining {
                if j == pj {
                    continue;
                }
                let factor = &cols[j][pi] / &pivot_entry;
                if factor.is_zero() {
                    continue;
                }
                for i in 0..n {
                    let t = &factor * &pivot_col[i];
                    cols[j][i] -= t;
                }
            }
            remaining.retain(|&j| j != pj);
            alive.retain(|&i| i != pi);
        }

        Ok(AdaptedBasis {
            sub_vectors,
            sub_weights,
            kept: alive,
        })
    }
}

struct AdaptedBasis {
    sub_vectors: Vec<Vec<Rat>>,
    sub_weights: Vec<Rat>,
    kept: Vec<usize>,
}

fn coords_cols_iter(m: &Matrix<Rat>) -> Vec<Vec<Rat>> {
    (0..m.cols()).map(|c| m.col(c)).collect()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn check_pair(a: &DiagNorm, b: &DiagNorm) -> Result<()> {
    if a.place != b.place {
        return Err(Error::mismatch("norms live at different places"));
    }
    if a.dim() != b.dim() {
        return Err(Error::mismatch("norms of different dimension"));
    }
    Ok(())
}

/// A basis orthogonal for both norms, by weighted elimination: at each stage
/// the entry of minimal weighted valuation picks the direction realizing the
/// supremum of `log(||v||_b / ||v||_a)` on the current subspace, the second
/// frame swaps it in, and the first frame is projected onto the complement.
/// The elementary divisors of this reduction are exactly the relative spectrum.
pub fn common_orthogonal_basis(a: &DiagNorm, b: &DiagNorm) -> Result<CommonOrthBasis> {
    check_pair(a, b)?;
    let n = a.dim();
    let place = a.place;

    // current frames, in ambient coordinates
    let mut e: Vec<Vec<Rat>> = (0..n).map(|i| a.basis.col(i)).collect();
    let mut wa: Vec<Rat> = a.weights.clone();
    let mut f: Vec<Vec<Rat>> = (0..n).map(|i| b.basis.col(i)).collect();
    let mut wb: Vec<Rat> = b.weights.clone();

    let mut out_vectors: Vec<Vec<Rat>> = Vec::with_capacity(n);
    let mut out_wa: Vec<Rat> = Vec::with_capacity(n);
    let mut out_wb: Vec<Rat> = Vec::with_capacity(n);

    while !e.is_empty() {
        let k = e.len();
        let fm = Matrix::from_cols(f.clone())?;
        // coordinates of every e_i in the f-frame, one elimination for all
        let coords: Vec<Vec<Rat>> = solve_many(&fm, &e)?;

        // log||e_i||_b = max_j (log|x_ji| - wb_j); ratio r_i = that + wa_i
        let mut best: Option<(Rat, usize, usize)> = None; // (ratio, i, j)
        for i in 0..k {
            let mut col_best: Option<(Rat, usize)> = None;
            for j in 0..k {
                if let Valuation::Finite(v) = place.valuation(&coords[i][j]) {
                    let lg = rat(-v) - &wb[j];
                    let better = match &col_best {
                        None => true,
                        Some((bl, _)) => lg > *bl,
                    };
                    if better {
                        col_best = Some((lg, j));
                    }
                }
            }
            let (lg, j) = col_best.ok_or_else(|| Error::internal("zero frame vector"))?;
            let ratio = lg + &wa[i];
            let better = match &best {
                None => true,
                Some((br, _, _)) => ratio > *br,
            };
            if better {
                best = Some((ratio, i, j));
            }
        }
        let (_, istar, jstar) = best.unwrap();

        let v = e[istar].clone();
        let v_coords = coords[istar].clone();
        let lg_b = {
            let Valuation::Finite(val) = place.valuation(&v_coords[jstar]) else {
                return Err(Error::internal("pivot coordinate vanished"));
            };
            rat(-val) - &wb[jstar]
        };
        out_vectors.push(v.clone());
        out_wa.push(wa[istar].clone());
        out_wb.push(-lg_b);

        // project the remaining first-frame vectors along v onto the
        // hyperplane spanned by the surviving second-frame vectors
        let pivot = v_coords[jstar].clone();
        let mut new_e = Vec::with_capacity(k - 1);
        let mut new_wa = Vec::with_capacity(k - 1);
        for i in 0..k {
            if i == istar {
                continue;
            }
            let factor = &coords[i][jstar] / &pivot;
            let vec_i: Vec<Rat> = e[i]
                .iter()
                .zip(&v)
                .map(|(x, vx)| x - &(&factor * vx))
                .collect();
            new_e.push(vec_i);
            new_wa.push(wa[i].clone());
        }
        e = new_e;
        wa = new_wa;
        f.remove(jstar);
        wb.remove(jstar);
    }

    debug_assert!(
        {
            let ratios: Vec<Rat> = out_wa
                .iter()
                .zip(&out_wb)
                .map(|(x, y)| x - y)
                .collect();
            ratios.windows(2).all(|w| w[0] >= w[1])
        },
        "stage ratios must decrease"
    );

    let basis = Matrix::from_cols(out_vectors)?;
    debug_assert!(basis.inverse().is_some(), "common basis must be invertible");
    Ok(CommonOrthBasis {
        basis,
        weights_a: out_wa,
        weights_b: out_wb,
    })
}

fn solve_many(m: &Matrix<Rat>, rhs: &[Vec<Rat>]) -> Result<Vec<Vec<Rat>>> {
    // single elimination of [m | rhs...]; every right side must be consistent
    let k = m.cols();
    let extra = rhs.len();
    let aug = Matrix::from_fn(m.rows(), k + extra, |r, c| {
        if c < k {
            m.at(r, c).clone()
        } else {
            rhs[c - k][r].clone()
        }
    });
    let (rref, pivots) = aug.rref();
    if pivots.iter().any(|&p| p >= k) {
        return Err(Error::internal("inconsistent frame system"));
    }
    let mut out = Vec::with_capacity(extra);
    for t in 0..extra {
        let mut x = vec![Rat::zero(); k];
        for (prow, &pcol) in pivots.iter().enumerate() {
            x[pcol] = rref.at(prow, k + t).clone();
        }
        out.push(x);
    }
    Ok(out)
}

/// Relative spectrum of the pair, second argument in the numerator:
/// the sorted log-ratios `log(||g_i||_b / ||g_i||_a)` along a common
/// orthogonal basis.
pub fn relative_spectrum(a: &DiagNorm, b: &DiagNorm) -> Result<Spectrum> {
    let common = common_orthogonal_basis(a, b)?;
    let mut lambdas: Vec<Rat> = common
        .weights_a
        .iter()
        .zip(&common.weights_b)
        .map(|(x, y)| x - y)
        .collect();
    lambdas.sort_by(|x, y| y.cmp(x));
    Ok(Spectrum { lambdas })
}

/// `(d_2^2, d_inf)` between two norms: the exact sum of squared spectrum
/// values, and the two-sided Goldman–Iwahori distance.
pub fn distances(a: &DiagNorm, b: &DiagNorm) -> Result<(Rat, Rat)> {
    let spectrum = relative_spectrum(a, b)?;
    let d2_sq = spectrum.d2_sq();
    let d_inf = {
        let lam1 = spectrum.max().clone();
        let lamn_neg = -spectrum.min().clone();
        if lam1 >= lamn_neg {
            lam1
        } else {
            lamn_neg
        }
    };
    Ok((d2_sq, d_inf))
}

pub fn d2_sq(a: &DiagNorm, b: &DiagNorm) -> Result<Rat> {
    Ok(relative_spectrum(a, b)?.d2_sq())
}

/// Two norms are equal exactly when their relative spectrum vanishes.
pub fn eq_as_norms(a: &DiagNorm, b: &DiagNorm) -> Result<bool> {
    Ok(relative_spectrum(a, b)?.is_zero())
}

/// The point at parameter `t` on the geodesic from `a` to `b`, computed by
/// affine interpolation of weights inside a common orthogonal basis.
pub fn geodesic(a: &DiagNorm, b: &DiagNorm, t: &Rat) -> Result<DiagNorm> {
    check_pair(a, b)?;
    if t.is_negative() || t > &Rat::one() {
        return Err(Error::precondition("geodesic parameter outside [0, 1]"));
    }
    let common = common_orthogonal_basis(a, b)?;
    let one_minus = Rat::one() - t;
    let weights: Vec<Rat> = common
        .weights_a
        .iter()
        .zip(&common.weights_b)
        .map(|(x, y)| &one_minus * x + t * y)
        .collect();
    DiagNorm::new(a.place, common.basis, weights)
}

/// Midpoint of two norms; satisfies the NPC comparison inequality.
pub fn midpoint(a: &DiagNorm, b: &DiagNorm) -> Result<DiagNorm> {
    geodesic(a, b, &crate::scalars::rat_frac(1, 2))
}

/// Result of a barycenter computation.
#[derive(Clone, Debug)]
pub struct Barycenter {
    pub point: DiagNorm,
    /// Exact value of `sum_i m_i d_2^2(point, P_i)`.
    pub objective: Rat,
    pub sweeps: usize,
    pub converged: bool,
    /// True when all inputs shared one orthogonal basis and the result is the
    /// exact weighted Euclidean barycenter in that apartment.
    pub exact: bool,
}

/// Denominator cap for iterate weights; see [`round_dyadic`].
const BARYCENTER_ROUND_BITS: u32 = 128;

/// Rounds to the nearest multiple of `2^-bits` once the denominator
/// outgrows that grid; keeps long iterations inside bounded arithmetic.
pub fn round_dyadic(x: &Rat, bits: u32) -> Rat {
    use num_bigint::BigInt;
    if x.denom().bits() <= bits as u64 {
        return x.clone();
    }
    let scale = BigInt::from(1) << bits;
    let scaled = x * Rat::from_integer(scale.clone());
    let rounded = scaled.round();
    Rat::new(rounded.to_integer(), scale)
}

/// Weighted center of mass of finitely many norms.
///
/// If all points admit one common orthogonal basis the result is the exact
/// weighted barycenter of the weight vectors in that apartment.  Otherwise a
/// deterministic cyclic iteration walks toward each point in fixed order at
/// parameter `m_i / (W + m_i)` with `W` the accumulated mass, and stops when
/// one full sweep moves the estimate by `d_2^2 < tol^2`.
pub fn center_of_mass(
    points: &[DiagNorm],
    masses: &[Rat],
    tol: &Rat,
    max_sweeps: usize,
) -> Result<Barycenter> {
    if points.is_empty() {
        return Err(Error::precondition("empty point list"));
    }
    if points.len() != masses.len() {
        return Err(Error::mismatch("one mass per point"));
    }
    if masses.iter().any(|m| !m.is_positive()) {
        return Err(Error::precondition("masses must be positive"));
    }
    for p in &points[1..] {
        check_pair(&points[0], p)?;
    }
    if points.len() == 1 {
        return Ok(Barycenter {
            point: points[0].clone(),
            objective: Rat::zero(),
            sweeps: 0,
            converged: true,
            exact: true,
        });
    }

    // apartment fast path: one basis orthogonal for every input
    let candidate = common_orthogonal_basis(&points[0], &points[1])?.basis;
    let cand_cols: Vec<Vec<Rat>> = (0..candidate.cols()).map(|c| candidate.col(c)).collect();
    let mut all_diag = true;
    let mut weight_rows: Vec<Vec<Rat>> = Vec::with_capacity(points.len());
    for p in points {
        if !p.is_orthogonal_family(&cand_cols)? {
            all_diag = false;
            break;
        }
        let mut ws = Vec::with_capacity(cand_cols.len());
        for v in &cand_cols {
            match p.eval(v)? {
                LogMag::Finite(l) => ws.push(-l),
                LogMag::NegInf => return Err(Error::internal("zero basis vector")),
            }
        }
        weight_rows.push(ws);
    }
    if all_diag {
        let total: Rat = masses.iter().sum();
        let dim = cand_cols.len();
        let mut bary = vec![Rat::zero(); dim];
        for (ws, m) in weight_rows.iter().zip(masses) {
            for (acc, w) in bary.iter_mut().zip(ws) {
                *acc += m * w;
            }
        }
        for acc in bary.iter_mut() {
            *acc /= &total;
        }
        let point = DiagNorm::new(points[0].place, candidate, bary)?;
        let objective = objective_value(&point, points, masses)?;
        return Ok(Barycenter {
            point,
            objective,
            sweeps: 0,
            converged: true,
            exact: true,
        });
    }

    // deterministic cyclic walk
    if !tol.is_positive() {
        return Err(Error::precondition("tolerance must be positive"));
    }
    let tol_sq = tol * tol;
    let mut estimate = points[0].clone();
    let mut accumulated = Rat::zero();
    let mut sweeps = 0usize;
    let mut converged = false;
    while sweeps < max_sweeps {
        let start = estimate.clone();
        for (p, m) in points.iter().zip(masses) {
            let t = m / (&accumulated + m);
            estimate = geodesic(&estimate, p, &t)?;
            accumulated += m;
            let weights: Vec<Rat> = estimate
                .weights
                .iter()
                .map(|w| round_dyadic(w, BARYCENTER_ROUND_BITS))
                .collect();
            estimate = DiagNorm::new(estimate.place, estimate.basis.clone(), weights)?;
        }
        sweeps += 1;
        if d2_sq(&start, &estimate)? < tol_sq {
            converged = true;
            break;
        }
    }
    let objective = objective_value(&estimate, points, masses)?;
    Ok(Barycenter {
        point: estimate,
        objective,
        sweeps,
        converged,
        exact: false,
    })
}

fn objective_value(point: &DiagNorm, points: &[DiagNorm], masses: &[Rat]) -> Result<Rat> {
    let mut acc = Rat::zero();
    for (p, m) in points.iter().zip(masses) {
        acc += m * d2_sq(point, p)?;
    }
    Ok(acc)
}

/// Exact comparison `sqrt(u) <= sqrt(v) + eps` for nonnegative rationals.
pub fn sqrt_le_with_slack(u: &Rat, v: &Rat, eps: &Rat) -> bool {
    // sqrt(u) <= sqrt(v) + eps  <=>  u <= v + eps^2 + 2 eps sqrt(v)
    let gap = u - v - eps * eps;
    if !gap.is_positive() {
        return true;
    }
    // gap <= 2 eps sqrt(v)  <=>  gap^2 <= 4 eps^2 v   (gap > 0)
    &gap * &gap <= rat(4) * eps * eps * v
}
