//! Acceptance suite: one test per contract, each printing a PASS line with
//! its number when it holds.  Run with `cargo test --test acceptance --
//! --nocapture` to see the lines.
//!
//! Everything here is either an exact rational identity or an inequality at
//! an explicitly pinned tolerance; no criterion is calibrated after the fact.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use buildings::deformation::{self, LiftOutcome};
use buildings::harmonic::{
    self, Edge, EquivMapState, TargetPoint, VoltageGraph, WeightedGraph,
};
use buildings::matrix::Matrix;
use buildings::monodromy::{
    self, GroupPresentation, GroupRep, ResidueMultiset,
};
use buildings::norms::{self, DiagNorm};
use buildings::scalars::{rat, rat_frac, LogMag, PrimePlace, Rat};

fn place(p: u64) -> PrimePlace {
    PrimePlace::new(p).unwrap()
}

fn random_rat(rng: &mut StdRng, num_bound: i64, den_max: i64) -> Rat {
    let num = rng.random_range(-num_bound..=num_bound);
    let den = rng.random_range(1..=den_max);
    rat_frac(num, den)
}

/// Random invertible matrix with entries in [-3, 3].
fn random_basis(rng: &mut StdRng, n: usize) -> Matrix<Rat> {
    loop {
        let m = Matrix::from_fn(n, n, |_, _| rat(rng.random_range(-3..=3)));
        if !buildings::scalars::Scalar::is_zero(&m.det()) {
            return m;
        }
    }
}

/// Random unimodular-ish conjugator: a product of elementary transvections.
fn random_unimodular(rng: &mut StdRng, n: usize) -> Matrix<Rat> {
    let mut m = Matrix::identity_like(n, &Rat::zero());
    for _ in 0..(2 * n) {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n);
        if n > 1 {
            while j == i {
                j = rng.random_range(0..n);
            }
            let mut t = Matrix::identity_like(n, &Rat::zero());
            t.set(i, j, rat(rng.random_range(-2..=2)));
            m = m.mul(&t);
        }
    }
    m
}

fn random_norm(rng: &mut StdRng, n: usize, p: u64, den_max: i64) -> DiagNorm {
    let basis = random_basis(rng, n);
    let weights = (0..n).map(|_| random_rat(rng, 6, den_max)).collect();
    DiagNorm::new(place(p), basis, weights).unwrap()
}

#[test]
fn criterion_01_npc_midpoint_inequality() {
    let mut rng = StdRng::seed_from_u64(101);
    let primes = [2u64, 3, 5];
    for trial in 0..500 {
        let n = rng.random_range(1..=4);
        let p = primes[rng.random_range(0..3)];
        let x = random_norm(&mut rng, n, p, 6);
        let y = random_norm(&mut rng, n, p, 6);
        let z = random_norm(&mut rng, n, p, 6);
        let m = norms::midpoint(&x, &y).unwrap();
        // midpoint metric identities, exact
        let dxy = norms::d2_sq(&x, &y).unwrap();
        let dxm = norms::d2_sq(&x, &m).unwrap();
        let dym = norms::d2_sq(&y, &m).unwrap();
        assert_eq!(&dxm * rat(4), dxy, "trial {trial}: d(x,m) = d(x,y)/2");
        assert_eq!(&dym * rat(4), dxy, "trial {trial}: d(y,m) = d(x,y)/2");
        // NPC comparison inequality with zero tolerance
        let dzm = norms::d2_sq(&z, &m).unwrap();
        let dzx = norms::d2_sq(&z, &x).unwrap();
        let dzy = norms::d2_sq(&z, &y).unwrap();
        let lhs = &dzm + &dxy / rat(4);
        let rhs = (&dzx + &dzy) / rat(2);
        assert!(lhs <= rhs, "trial {trial}: NPC inequality violated");
    }
    println!("ACCEPTANCE 01 npc-midpoint-inequality: PASS (500 triples, exact)");
}

/// The log-ratio of two norms at a vector, by direct evaluation.
fn log_ratio(a: &DiagNorm, b: &DiagNorm, v: &[Rat]) -> Option<Rat> {
    match (a.eval(v).unwrap(), b.eval(v).unwrap()) {
        (LogMag::Finite(la), LogMag::Finite(lb)) => Some(lb - la),
        _ => None,
    }
}

#[test]
fn criterion_02_spectrum_extremes_oracle() {
    let mut rng = StdRng::seed_from_u64(202);
    for trial in 0..200 {
        let n = rng.random_range(1..=3);
        let p = [2u64, 3, 5][rng.random_range(0..3)];
        let a = random_norm(&mut rng, n, p, 4);
        let b = random_norm(&mut rng, n, p, 4);
        let spectrum = norms::relative_spectrum(&a, &b).unwrap();

        // exhaustive candidate set: every vector with coordinates among
        // 0, +-p^k (k in [-4,4]) in the standard frame, plus both
        // diagonalising bases (the extremes are attained on orthogonal
        // basis vectors of the appropriate side)
        let mut coords: Vec<Rat> = vec![Rat::zero()];
        for k in -4i32..=4 {
            let pk = if k >= 0 {
                rat((p as i64).pow(k as u32))
            } else {
                rat_frac(1, (p as i64).pow((-k) as u32))
            };
            coords.push(pk.clone());
            coords.push(-pk);
        }
        let mut candidates: Vec<Vec<Rat>> = Vec::new();
        let mut stack: Vec<Vec<Rat>> = vec![Vec::new()];
        while let Some(prefix) = stack.pop() {
            if prefix.len() == n {
                if prefix.iter().any(|c| !c.is_zero()) {
                    candidates.push(prefix);
                }
                continue;
            }
            for c in &coords {
                let mut next = prefix.clone();
                next.push(c.clone());
                stack.push(next);
            }
        }
        for i in 0..n {
            candidates.push(a.basis_column(i));
            candidates.push(b.basis_column(i));
        }

        let mut sup: Option<Rat> = None;
        let mut inf: Option<Rat> = None;
        for v in &candidates {
            if let Some(r) = log_ratio(&a, &b, v) {
                if sup.as_ref().is_none_or(|s| &r > s) {
                    sup = Some(r.clone());
                }
                if inf.as_ref().is_none_or(|s| &r < s) {
                    inf = Some(r);
                }
            }
        }
        assert_eq!(sup.unwrap(), *spectrum.max(), "trial {trial}: sup mismatch");
        assert_eq!(inf.unwrap(), *spectrum.min(), "trial {trial}: inf mismatch");
    }
    println!("ACCEPTANCE 02 spectrum-extremes-oracle: PASS (200 pairs, exact)");
}

#[test]
fn criterion_03_wedge_spectrum_identity() {
    let mut rng = StdRng::seed_from_u64(303);
    for trial in 0..100 {
        let n = rng.random_range(1..=4);
        let p = [2u64, 3, 5][rng.random_range(0..3)];
        let a = random_norm(&mut rng, n, p, 4);
        let b = random_norm(&mut rng, n, p, 4);
        let spectrum = norms::relative_spectrum(&a, &b).unwrap();
        for k in 1..=n {
            let partial: Rat = spectrum.lambdas()[..k].iter().cloned().sum();
            let wa = a.wedge(k).unwrap();
            let wb = b.wedge(k).unwrap();
            let wedge_spec = norms::relative_spectrum(&wa, &wb).unwrap();
            assert_eq!(
                partial,
                *wedge_spec.max(),
                "trial {trial}: k = {k} partial sum vs wedge top"
            );
        }
    }
    println!("ACCEPTANCE 03 wedge-spectrum-identity: PASS (100 pairs, exact)");
}

/// Random connected graph with decent expansion: a spanning tree plus
/// about `n` extra edges.
fn random_graph(rng: &mut StdRng, n: usize, boundary: Vec<usize>) -> WeightedGraph {
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.push(Edge {
            from: u,
            to: v,
            weight: rat(rng.random_range(1..=3)),
        });
    }
    for _ in 0..n {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.push(Edge {
                from: u,
                to: v,
                weight: rat(rng.random_range(1..=3)),
            });
        }
    }
    WeightedGraph::new(n, edges, boundary).unwrap()
}

/// Exact interior values of the Dirichlet problem by a rational Laplacian
/// solve, one coordinate at a time.
fn laplacian_solve(
    graph: &WeightedGraph,
    boundary_values: &BTreeMap<usize, Vec<Rat>>,
    dim: usize,
) -> BTreeMap<usize, Vec<Rat>> {
    let interior = graph.interior();
    let index: BTreeMap<usize, usize> = interior.iter().copied().zip(0..).collect();
    let m = interior.len();
    let mut out: BTreeMap<usize, Vec<Rat>> = interior.iter().map(|&v| (v, Vec::new())).collect();
    for coord in 0..dim {
        let mut a = Matrix::zero_like(m.max(1), m.max(1), &Rat::zero());
        let mut rhs = vec![Rat::zero(); m];
        for e in graph.edges() {
            for (x, y) in [(e.from, e.to), (e.to, e.from)] {
                if let Some(&i) = index.get(&x) {
                    let v = a.at(i, i).clone() + &e.weight;
                    a.set(i, i, v);
                    match index.get(&y) {
                        Some(&j) => {
                            let v = a.at(i, j).clone() - &e.weight;
                            a.set(i, j, v);
                        }
                        None => {
                            rhs[i] += &e.weight * &boundary_values[&y][coord];
                        }
                    }
                }
            }
        }
        if m > 0 {
            let sol = a.solve(&rhs).expect("Dirichlet Laplacian is invertible");
            for (&v, &i) in &index {
                out.get_mut(&v).unwrap().push(sol[i].clone());
            }
        }
    }
    out
}

#[test]
fn criterion_04_dirichlet_matches_laplacian() {
    let mut rng = StdRng::seed_from_u64(404);
    let tol = rat_frac(1, 1_000_000_000_000); // 1e-12, the default
    let rel_bound = rat_frac(1, 1_000_000_000); // 1e-9 per coordinate
    for trial in 0..50 {
        let n = rng.random_range(5..=30);
        let b_count = (n / 3).max(2);
        let mut boundary: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            boundary.swap(i, j);
        }
        boundary.truncate(b_count);
        let graph = random_graph(&mut rng, n, boundary.clone());
        let dim = rng.random_range(1..=2);
        let mut bv = BTreeMap::new();
        let mut bv_raw = BTreeMap::new();
        for &b in graph.boundary() {
            let vals: Vec<Rat> = (0..dim).map(|_| random_rat(&mut rng, 8, 4)).collect();
            bv.insert(b, TargetPoint::Euclid(vals.clone()));
            bv_raw.insert(b, vals);
        }
        let report = harmonic::solve_dirichlet(&graph, &bv, &tol, 100_000).unwrap();
        assert_eq!(
            report.termination,
            harmonic::Termination::Converged,
            "trial {trial}: solver must converge"
        );
        // exact energy monotonicity across every sweep
        for w in report.energies.windows(2) {
            assert!(w[1] <= w[0], "trial {trial}: energy increased");
        }
        let exact = laplacian_solve(&graph, &bv_raw, dim);
        for (&v, vals) in &exact {
            let TargetPoint::Euclid(got) = &report.state.values[v] else {
                panic!("euclidean state expected");
            };
            for (g, e) in got.iter().zip(vals) {
                let scale = if e.abs() > Rat::one() { e.abs() } else { Rat::one() };
                assert!(
                    (g - e).abs() <= &rel_bound * scale,
                    "trial {trial}: vertex {v} off by more than 1e-9"
                );
            }
        }
    }
    println!("ACCEPTANCE 04 dirichlet-laplacian-oracle: PASS (50 graphs, rel err <= 1e-9)");
}

#[test]
fn criterion_05_maximum_principle() {
    let mut rng = StdRng::seed_from_u64(505);
    let tol = rat_frac(1, 1_000_000_000_000);
    let slack = rat(10) * &tol;
    let pl = place(2);
    for trial in 0..50 {
        let n = rng.random_range(4..=14);
        let b_count = (n / 3).max(2);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        let boundary: Vec<usize> = perm[..b_count].to_vec();
        let graph = random_graph(&mut rng, n, boundary.clone());
        // two Dirichlet problems in the standard rank-2 apartment
        let mut bv1 = BTreeMap::new();
        let mut bv2 = BTreeMap::new();
        for &b in graph.boundary() {
            let w1 = vec![random_rat(&mut rng, 4, 2), random_rat(&mut rng, 4, 2)];
            let w2 = vec![random_rat(&mut rng, 4, 2), random_rat(&mut rng, 4, 2)];
            bv1.insert(b, TargetPoint::Building(DiagNorm::standard(pl, w1)));
            bv2.insert(b, TargetPoint::Building(DiagNorm::standard(pl, w2)));
        }
        let r1 = harmonic::solve_dirichlet(&graph, &bv1, &tol, 100_000).unwrap();
        let r2 = harmonic::solve_dirichlet(&graph, &bv2, &tol, 100_000).unwrap();
        let field = harmonic::distance_field(&r1.state, &r2.state).unwrap();
        let mut boundary_max = Rat::zero();
        for &b in graph.boundary() {
            if field[b] > boundary_max {
                boundary_max = field[b].clone();
            }
        }
        for v in graph.interior() {
            assert!(
                norms::sqrt_le_with_slack(&field[v], &boundary_max, &slack),
                "trial {trial}: interior distance exceeds boundary max + 10 tol at {v}"
            );
        }
    }
    println!("ACCEPTANCE 05 maximum-principle: PASS (50 paired problems, slack 10e-12)");
}

#[test]
fn criterion_06_equivariant_energies() {
    let mut rng = StdRng::seed_from_u64(606);
    let tol = rat_frac(1, 1_000_000_000_000);
    let pl = place(2);
    // rank-1 bouquets: energy = sum of squared translation lengths, exactly
    for trial in 0..20 {
        let loops = rng.random_range(1..=3);
        let mut edges = Vec::new();
        let mut labels = Vec::new();
        let mut mats = Vec::new();
        let mut expected = Rat::zero();
        let mut relators = Vec::new();
        for l in 0..loops {
            edges.push(Edge {
                from: 0,
                to: 0,
                weight: rat(1),
            });
            labels.push(vec![(l + 1) as i32]);
            let a: i64 = rng.random_range(-3..=3);
            let unit: i64 = [1, 3, 5][rng.random_range(0..3)];
            let scalar = if a >= 0 {
                rat(unit * 2i64.pow(a as u32))
            } else {
                rat_frac(unit, 2i64.pow((-a) as u32))
            };
            mats.push(Matrix::from_rows(vec![vec![scalar]]).unwrap());
            expected += rat(a) * rat(a);
        }
        for i in 1..=loops {
            for j in (i + 1)..=loops {
                relators.push(vec![i as i32, j as i32, -(i as i32), -(j as i32)]);
            }
        }
        let graph = WeightedGraph::new(1, edges, vec![]).unwrap();
        let vg = VoltageGraph::new(graph, labels).unwrap();
        let pres = GroupPresentation::new(loops, relators).unwrap();
        let rep = GroupRep::new(pres, mats).unwrap();
        let init = EquivMapState::new(vec![TargetPoint::Building(DiagNorm::standard(
            pl,
            vec![rat(0)],
        ))]);
        let report = harmonic::solve_equivariant(&vg, &rep, init, &tol, 64).unwrap();
        assert_eq!(report.energy, expected, "trial {trial}: bouquet energy");
    }
    // direct sums: energy of the sum equals the sum of the factor energies
    for trial in 0..20 {
        let a: i64 = rng.random_range(-3..=3);
        let b: i64 = rng.random_range(-3..=3);
        let scalar = |k: i64| -> Rat {
            if k >= 0 {
                rat(2i64.pow(k as u32))
            } else {
                rat_frac(1, 2i64.pow((-k) as u32))
            }
        };
        let graph = WeightedGraph::new(
            1,
            vec![Edge {
                from: 0,
                to: 0,
                weight: rat(1),
            }],
            vec![],
        )
        .unwrap();
        let vg = VoltageGraph::new(graph, vec![vec![1]]).unwrap();
        let solve_rank = |mat: Matrix<Rat>, dim: usize| -> Rat {
            let rep = GroupRep::new(GroupPresentation::free(1), vec![mat]).unwrap();
            let init = EquivMapState::new(vec![TargetPoint::Building(DiagNorm::standard(
                pl,
                vec![rat(0); dim],
            ))]);
            harmonic::solve_equivariant(&vg, &rep, init, &tol, 64)
                .unwrap()
                .energy
        };
        let e1 = solve_rank(Matrix::from_rows(vec![vec![scalar(a)]]).unwrap(), 1);
        let e2 = solve_rank(Matrix::from_rows(vec![vec![scalar(b)]]).unwrap(), 1);
        let sum_mat = Matrix::from_rows(vec![
            vec![scalar(a), rat(0)],
            vec![rat(0), scalar(b)],
        ])
        .unwrap();
        let e_sum = solve_rank(sum_mat, 2);
        assert_eq!(e_sum, &e1 + &e2, "trial {trial}: direct-sum energy");
        assert_eq!(e1, rat(a * a), "trial {trial}: factor energy");
        assert_eq!(e2, rat(b * b), "trial {trial}: factor energy");
    }
    println!("ACCEPTANCE 06 equivariant-energies: PASS (bouquets and direct sums, exact)");
}

/// Nilpotent matrix with the given Jordan block sizes, conjugated.
fn random_nilpotent(rng: &mut StdRng, partition: &[usize]) -> Matrix<Rat> {
    let n: usize = partition.iter().sum();
    let mut m = Matrix::zero_like(n, n, &Rat::zero());
    let mut offset = 0;
    for &l in partition {
        for i in 0..l.saturating_sub(1) {
            m.set(offset + i, offset + i + 1, rat(1));
        }
        offset += l;
    }
    let s = random_unimodular(rng, n);
    s.mul(&m).mul(&s.inverse().unwrap())
}

fn random_partition(rng: &mut StdRng, n: usize) -> Vec<usize> {
    let mut left = n;
    let mut parts = Vec::new();
    while left > 0 {
        let p = rng.random_range(1..=left);
        parts.push(p);
        left -= p;
    }
    parts
}

#[test]
fn criterion_07_weight_filtration_axioms() {
    let mut rng = StdRng::seed_from_u64(707);
    for trial in 0..300 {
        let n = rng.random_range(1..=8);
        let partition = random_partition(&mut rng, n);
        let nil = random_nilpotent(&mut rng, &partition);
        // construction re-verifies both axioms exactly; a failure would error
        let wf = monodromy::weight_filtration(&nil).unwrap();
        // graded dimensions match the Jordan-type prediction
        let max_l = *partition.iter().max().unwrap() as i64;
        for k in -max_l..=max_l {
            let expected = partition
                .iter()
                .filter(|&&l| {
                    let l = l as i64;
                    k.abs() <= l - 1 && (k - (l - 1)).rem_euclid(2) == 0
                })
                .count();
            assert_eq!(
                wf.gr_dim(k),
                expected,
                "trial {trial}: gr dimension at {k} for partition {partition:?}"
            );
        }
    }
    println!("ACCEPTANCE 07 weight-filtration-axioms: PASS (300 nilpotents, exact)");
}

#[test]
fn criterion_08_graded_nearby_cycles_contract() {
    let mut rng = StdRng::seed_from_u64(808);
    for trial in 0..100 {
        let n = rng.random_range(2..=5);
        let partition = random_partition(&mut rng, n);
        // gamma = I + N; delta = polynomial in N with nonzero constant term
        let mut jordan = Matrix::zero_like(n, n, &Rat::zero());
        let mut offset = 0;
        for &l in &partition {
            for i in 0..l.saturating_sub(1) {
                jordan.set(offset + i, offset + i + 1, rat(1));
            }
            offset += l;
        }
        let id = Matrix::identity_like(n, &Rat::zero());
        let gamma = id.add(&jordan);
        let c0 = rat(*[1i64, 2, 3, -1, -2].get(rng.random_range(0..5)).unwrap());
        let c1 = rat(rng.random_range(-2..=2));
        let c2 = rat(rng.random_range(-2..=2));
        let delta = id
            .scale(&c0)
            .add(&jordan.scale(&c1))
            .add(&jordan.mul(&jordan).scale(&c2));
        let s = random_unimodular(&mut rng, n);
        let s_inv = s.inverse().unwrap();
        let conj = |m: &Matrix<Rat>| s.mul(m).mul(&s_inv);
        let pres = GroupPresentation::new(2, vec![vec![1, 2, -1, -2]]).unwrap();
        let rep = GroupRep::new(pres, vec![conj(&gamma), conj(&delta)]).unwrap();

        let out = monodromy::graded_nearby_cycles(&rep, &vec![1]).unwrap();
        assert_eq!(out.rank(), rep.rank(), "trial {trial}: rank preserved");
        assert!(
            out.eval(&vec![1]).unwrap().is_identity(),
            "trial {trial}: gamma acts trivially on the graded pieces"
        );
        for word in [
            vec![1],
            vec![2],
            vec![1, 2],
            vec![2, 2],
            vec![1, 2, 2],
            vec![2, -1],
            vec![-2],
        ] {
            assert_eq!(
                rep.char_b(&word).unwrap(),
                out.char_b(&word).unwrap(),
                "trial {trial}: characteristic polynomial of {word:?} preserved"
            );
        }
    }
    println!("ACCEPTANCE 08 graded-nearby-cycles-contract: PASS (100 inputs, exact)");
}

/// All reduced words of length <= 4 in two generators.
fn short_words() -> Vec<Vec<i32>> {
    let letters = [1i32, -1, 2, -2];
    let mut out: Vec<Vec<i32>> = vec![vec![]];
    let mut frontier: Vec<Vec<i32>> = vec![vec![]];
    for _ in 0..4 {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &letters {
                if w.last() == Some(&-l) {
                    continue;
                }
                let mut nw = w.clone();
                nw.push(l);
                next.push(nw);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn trace_profile(rep: &GroupRep<Rat>, words: &[Vec<i32>]) -> Vec<Rat> {
    words
        .iter()
        .map(|w| rep.eval(w).unwrap().trace())
        .collect()
}

#[test]
fn criterion_09_semisimplification_profile() {
    let mut rng = StdRng::seed_from_u64(909);
    let words = short_words();
    for trial in 0..30 {
        let n = rng.random_range(2..=5);
        // random block-upper-triangular pair, conjugated
        let sizes = random_partition(&mut rng, n);
        let mut blocks_a: Vec<Matrix<Rat>> = Vec::new();
        let mut blocks_b: Vec<Matrix<Rat>> = Vec::new();
        for &sz in &sizes {
            blocks_a.push(random_basis(&mut rng, sz));
            blocks_b.push(random_basis(&mut rng, sz));
        }
        let mut a = Matrix::block_diag(&blocks_a);
        let mut b = Matrix::block_diag(&blocks_b);
        // junk above the diagonal blocks
        let mut offsets = vec![0usize];
        for &sz in &sizes {
            let last = *offsets.last().unwrap();
            offsets.push(last + sz);
        }
        for bi in 0..sizes.len() {
            for bj in (bi + 1)..sizes.len() {
                for r in offsets[bi]..offsets[bi + 1] {
                    for c in offsets[bj]..offsets[bj + 1] {
                        a.set(r, c, rat(rng.random_range(-2..=2)));
                        b.set(r, c, rat(rng.random_range(-2..=2)));
                    }
                }
            }
        }
        let s = random_unimodular(&mut rng, n);
        let s_inv = s.inverse().unwrap();
        let rep = GroupRep::new(
            GroupPresentation::free(2),
            vec![s.mul(&a).mul(&s_inv), s.mul(&b).mul(&s_inv)],
        )
        .unwrap();
        let ss = monodromy::semisimplify(&rep).unwrap();
        assert_eq!(
            trace_profile(&rep, &words),
            trace_profile(&ss, &words),
            "trial {trial}: word-trace profile invariant"
        );
        let ss2 = monodromy::semisimplify(&ss).unwrap();
        assert_eq!(
            trace_profile(&ss, &words),
            trace_profile(&ss2, &words),
            "trial {trial}: idempotent up to the trace profile"
        );
    }
    // unipotent representations semisimplify to the trivial representation
    for trial in 0..20 {
        let n = rng.random_range(2..=5);
        let mk_unipotent = |rng: &mut StdRng| {
            let mut m = Matrix::identity_like(n, &Rat::zero());
            for r in 0..n {
                for c in (r + 1)..n {
                    m.set(r, c, rat(rng.random_range(-2..=2)));
                }
            }
            m
        };
        let rep = GroupRep::new(
            GroupPresentation::free(2),
            vec![mk_unipotent(&mut rng), mk_unipotent(&mut rng)],
        )
        .unwrap();
        let ss = monodromy::semisimplify(&rep).unwrap();
        assert!(
            ss.generator(0).is_identity() && ss.generator(1).is_identity(),
            "trial {trial}: unipotent input must semisimplify to the trivial rep"
        );
    }
    println!("ACCEPTANCE 09 semisimplification-profile: PASS (exact, dims <= 5)");
}

#[test]
fn criterion_10_deformation_dimensions() {
    let mut rng = StdRng::seed_from_u64(1010);
    // free groups: dim Z^1 = n r^2
    for n in 1..=4usize {
        for r in 1..=3usize {
            let mats: Vec<Matrix<Rat>> = (0..n)
                .map(|_| loop {
                    let m = random_basis(&mut rng, r);
                    if m.inverse().is_some() {
                        break m;
                    }
                })
                .collect();
            let rep = GroupRep::new(GroupPresentation::free(n), mats).unwrap();
            let fox = deformation::FoxSystem::new(&rep).unwrap();
            assert_eq!(fox.dim_z1(), n * r * r, "free F_{n} at rank {r}");
        }
    }
    // surface groups at generic rank 1: dim Z^1 = 2g
    for g in 1..=3usize {
        let pres = GroupPresentation::surface(g);
        let mats: Vec<Matrix<Rat>> = (0..2 * g)
            .map(|_| {
                let x = loop {
                    let c = rng.random_range(-5..=5i64);
                    if c != 0 {
                        break c;
                    }
                };
                Matrix::from_rows(vec![vec![rat(x)]]).unwrap()
            })
            .collect();
        let rep = GroupRep::new(pres, mats).unwrap();
        let fox = deformation::FoxSystem::new(&rep).unwrap();
        assert_eq!(fox.dim_z1(), 2 * g, "genus {g} at rank 1");
    }
    // the rank-2 self-commutator failure: obstructed at order exactly 2
    let pres = GroupPresentation::new(2, vec![vec![1, 2, -1, -2]]).unwrap();
    let id = Matrix::identity_like(2, &Rat::zero());
    let rep = GroupRep::new(pres, vec![id.clone(), id]).unwrap();
    let e12 = Matrix::from_rows(vec![vec![rat(0), rat(1)], vec![rat(0), rat(0)]]).unwrap();
    let e21 = Matrix::from_rows(vec![vec![rat(0), rat(0)], vec![rat(1), rat(0)]]).unwrap();
    match deformation::lift_order(&rep, &vec![e12.clone(), e21.clone()], 5).unwrap() {
        LiftOutcome::Obstructed { order, residuals } => {
            assert_eq!(order, 2, "obstruction at order exactly 2");
            let commutator = e12.mul(&e21).sub(&e21.mul(&e12));
            assert_eq!(residuals, vec![commutator], "residual is the self-commutator");
        }
        LiftOutcome::Lifted { .. } => panic!("self-commutator example must be obstructed"),
    }
    println!("ACCEPTANCE 10 deformation-dimensions: PASS (exact)");
}

#[test]
fn criterion_11_kms_bookkeeping() {
    let mut rng = StdRng::seed_from_u64(1111);
    // floating round trip at relative error <= 1e-12
    for trial in 0..1000 {
        let lambda = loop {
            let re = rng.random_range(-10.0..=10.0f64);
            let im = rng.random_range(-10.0..=10.0f64);
            if (re * re + im * im).sqrt() <= 10.0 {
                break (re, im);
            }
        };
        let a = rng.random_range(-5.0..=5.0f64);
        let alpha = (
            rng.random_range(-5.0..=5.0f64),
            rng.random_range(-5.0..=5.0f64),
        );
        let (p, e) = monodromy::kms_rescale_f64(a, alpha, lambda);
        let (a2, alpha2) = monodromy::kms_unrescale_f64(p, e, lambda);
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(1.0);
        assert!(rel(a, a2) <= 1e-12, "trial {trial}: weight round trip");
        assert!(rel(alpha.0, alpha2.0) <= 1e-12, "trial {trial}: residue re");
        assert!(rel(alpha.1, alpha2.1) <= 1e-12, "trial {trial}: residue im");
    }
    // lambda = 0 is the identity, exactly
    for trial in 0..50 {
        let a = rng.random_range(-5.0..=5.0f64);
        let alpha = (
            rng.random_range(-5.0..=5.0f64),
            rng.random_range(-5.0..=5.0f64),
        );
        let (p, e) = monodromy::kms_rescale_f64(a, alpha, (0.0, 0.0));
        assert!(p == a && e == alpha, "trial {trial}: identity at lambda = 0");
    }
    // residue exponential is 1-periodic, exactly
    for trial in 0..100 {
        let a = random_rat(&mut rng, 12, 7);
        let r1 = monodromy::residue_exponential(&ResidueMultiset {
            residues: vec![a.clone()],
        });
        let r2 = monodromy::residue_exponential(&ResidueMultiset {
            residues: vec![a + Rat::one()],
        });
        assert_eq!(r1.roots, r2.roots, "trial {trial}: periodicity");
    }
    println!("ACCEPTANCE 11 kms-bookkeeping: PASS (1000 round trips <= 1e-12, exact identities)");
}

#[test]
fn criterion_12_characteristic_data_multiplicativity() {
    let mut rng = StdRng::seed_from_u64(1212);
    let pl = place(2);
    for trial in 0..50 {
        // random tree plus loops; labels on tree edges and loops
        let n = rng.random_range(1..=5);
        let mut edges = Vec::new();
        let mut labels: Vec<Vec<i32>> = Vec::new();
        for v in 1..n {
            let u = rng.random_range(0..v);
            edges.push(Edge {
                from: u,
                to: v,
                weight: rat(1),
            });
            labels.push(vec![[1i32, -1, 2, -2][rng.random_range(0..4)]]);
        }
        let loops = rng.random_range(1..=2);
        for _ in 0..loops {
            let v = rng.random_range(0..n);
            edges.push(Edge {
                from: v,
                to: v,
                weight: rat(1),
            });
            labels.push(vec![[1i32, 2][rng.random_range(0..2)]]);
        }
        let graph = WeightedGraph::new(n, edges, vec![]).unwrap();
        let vg = VoltageGraph::new(graph, labels).unwrap();

        let scalar = |k: i64| -> Rat {
            if k >= 0 {
                rat(2i64.pow(k as u32))
            } else {
                rat_frac(1, 2i64.pow((-k) as u32))
            }
        };
        let a1: i64 = rng.random_range(-3..=3);
        let a2: i64 = rng.random_range(-3..=3);
        let b1: i64 = rng.random_range(-3..=3);
        let b2: i64 = rng.random_range(-3..=3);
        let pres = GroupPresentation::new(2, vec![vec![1, 2, -1, -2]]).unwrap();
        let rep1 = GroupRep::new(
            pres.clone(),
            vec![
                Matrix::from_rows(vec![vec![scalar(a1)]]).unwrap(),
                Matrix::from_rows(vec![vec![scalar(a2)]]).unwrap(),
            ],
        )
        .unwrap();
        let rep2 = GroupRep::new(
            pres.clone(),
            vec![
                Matrix::from_rows(vec![vec![scalar(b1)]]).unwrap(),
                Matrix::from_rows(vec![vec![scalar(b2)]]).unwrap(),
            ],
        )
        .unwrap();
        let sum = GroupRep::new(
            pres,
            vec![
                Matrix::from_rows(vec![
                    vec![scalar(a1), rat(0)],
                    vec![rat(0), scalar(b1)],
                ])
                .unwrap(),
                Matrix::from_rows(vec![
                    vec![scalar(a2), rat(0)],
                    vec![rat(0), scalar(b2)],
                ])
                .unwrap(),
            ],
        )
        .unwrap();

        // random apartment states per vertex; the sum state is the direct sum
        let w1: Vec<Rat> = (0..n).map(|_| random_rat(&mut rng, 4, 3)).collect();
        let w2: Vec<Rat> = (0..n).map(|_| random_rat(&mut rng, 4, 3)).collect();
        let state1 = EquivMapState::new(
            w1.iter()
                .map(|w| TargetPoint::Building(DiagNorm::standard(pl, vec![w.clone()])))
                .collect(),
        );
        let state2 = EquivMapState::new(
            w2.iter()
                .map(|w| TargetPoint::Building(DiagNorm::standard(pl, vec![w.clone()])))
                .collect(),
        );
        let state_sum = EquivMapState::new(
            w1.iter()
                .zip(&w2)
                .map(|(x, y)| {
                    TargetPoint::Building(DiagNorm::standard(pl, vec![x.clone(), y.clone()]))
                })
                .collect(),
        );

        // flat frames along the tree: frame(root) = 1, transported outward;
        // loops compare against the transported frame
        let frames1 = flat_frames(&vg, &rep1, 1);
        let frames2 = flat_frames(&vg, &rep2, 1);
        let frames_sum = flat_frames(&vg, &sum, 2);

        let d1 = harmonic::log_norm_increments(&vg, &rep1, &state1, &frames1).unwrap();
        let d2 = harmonic::log_norm_increments(&vg, &rep2, &state2, &frames2).unwrap();
        let ds = harmonic::log_norm_increments(&vg, &sum, &state_sum, &frames_sum).unwrap();
        for e in 0..vg.graph().edges().len() {
            let mut union = d1.edges[e].increments.clone();
            union.extend(d2.edges[e].increments.iter().cloned());
            union.sort();
            assert_eq!(
                ds.edges[e].increments, union,
                "trial {trial}: edge {e} multiset union"
            );
            // symmetric functions of the union match as well
            assert_eq!(
                ds.edges[e].sigma,
                harmonic::elementary_symmetric(&union),
                "trial {trial}: edge {e} sigma"
            );
        }
    }
    println!("ACCEPTANCE 12 characteristic-data-multiplicativity: PASS (50 graphs, exact)");
}

/// Frames transported along the breadth-first tree of the graph.
fn flat_frames(vg: &VoltageGraph, rep: &GroupRep<Rat>, rank: usize) -> Vec<Matrix<Rat>> {
    let n = vg.graph().vertex_count();
    let id = Matrix::identity_like(rank, &Rat::zero());
    let mut frames: Vec<Option<Matrix<Rat>>> = vec![None; n];
    frames[0] = Some(id);
    let mut changed = true;
    while changed {
        changed = false;
        for (idx, e) in vg.graph().edges().iter().enumerate() {
            if e.from == e.to {
                continue;
            }
            let g = rep.eval(&vg.labels()[idx]).unwrap();
            if frames[e.to].is_none() {
                if let Some(f) = frames[e.from].clone() {
                    frames[e.to] = Some(g.mul(&f));
                    changed = true;
                }
            } else if frames[e.from].is_none() {
                if let Some(f) = frames[e.to].clone() {
                    frames[e.from] = Some(g.inverse().unwrap().mul(&f));
                    changed = true;
                }
            }
        }
    }
    frames.into_iter().map(|f| f.unwrap()).collect()
}
