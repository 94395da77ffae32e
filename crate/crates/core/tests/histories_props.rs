use proptest::prelude::*;
use rand::Rng as _;

use decolab::histories::{
    additivity_defect, coarse_grain, consistency_check, decoherence_table, two_slit_history_set, HistorySet,
    ProjectiveDecomposition,
};
use decolab::qstate::random;
use decolab::{rng, ComplexOperator, OrthonormalBasis, Projector, StateVector, C64};

fn split(basis: &OrthonormalBasis, cuts: &[usize]) -> ProjectiveDecomposition {
    let dim = basis.unitary().matrix().nrows();
    let mut bounds = vec![0];
    bounds.extend(cuts.iter().copied());
    bounds.push(dim);
    let projectors = bounds
        .windows(2)
        .map(|w| Projector::onto(&(w[0]..w[1]).map(|k| basis.vector(k)).collect::<Vec<_>>()).unwrap())
        .collect();
    ProjectiveDecomposition::new(projectors).unwrap()
}

fn random_cuts(dim: usize, r: &mut rng::Rng) -> Vec<usize> {
    (1..dim).filter(|_| r.random_bool(0.5)).collect()
}

fn random_set(seed: u64, dim: usize, slots: usize) -> HistorySet {
    let mut r = rng::stream(seed, 0);
    let decs = (0..slots).map(|_| split(&random::basis(dim, &mut r), &random_cuts(dim, &mut r))).collect();
    let mut t = 0.0;
    let times = (0..slots)
        .map(|_| {
            t += r.random_range(0.1..1.0);
            t
        })
        .collect();
    let rank = 1 + r.random_range(0..dim);
    HistorySet::new(times, decs, random::hermitian(dim, &mut r), random::density_matrix(dim, rank, &mut r)).unwrap()
}

/// Real orthonormal basis from Gram–Schmidt on random real vectors.
fn real_basis(dim: usize, r: &mut rng::Rng) -> Vec<StateVector> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    while out.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
        for u in &out {
            let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= d * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            out.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    out.into_iter().map(|v| StateVector::normalized(v.into_iter().map(|x| C64::new(x, 0.0)).collect()).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn table_is_hermitian_positive_and_normalized(seed in any::<u64>(), dim in 2usize..=5, slots in 1usize..=3) {
        let table = decoherence_table(&random_set(seed, dim, slots)).unwrap();
        let mut total = C64::new(0.0, 0.0);
        for (a, row) in table.iter().enumerate() {
            prop_assert!(row[a].re >= -1e-12);
            for (b, v) in row.iter().enumerate() {
                prop_assert!((v - table[b][a].conj()).norm() <= 1e-12);
                total += v;
            }
        }
        prop_assert!((total - 1.0).norm() <= 1e-9);
    }

    #[test]
    fn coarse_graining_is_linear(seed in any::<u64>(), dim in 2usize..=4) {
        let table = decoherence_table(&random_set(seed, dim, 2)).unwrap();
        let n = table.len();
        let mut r = rng::stream(seed, 7);
        let classes = 1 + r.random_range(0..n);
        let mut groups = vec![Vec::new(); classes];
        for a in 0..n {
            groups[if a < classes { a } else { r.random_range(0..classes) }].push(a);
        }
        let merged = coarse_grain(&table, &groups).unwrap();
        for (g, ga) in groups.iter().enumerate() {
            for (h, gb) in groups.iter().enumerate() {
                let direct: C64 = ga.iter().flat_map(|&a| gb.iter().map(move |&b| (a, b))).map(|(a, b)| table[a][b]).sum();
                prop_assert!((merged[g][h] - direct).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn matches_schrodinger_picture_for_two_times(seed in any::<u64>(), dim in 2usize..=5) {
        let set = random_set(seed, dim, 2);
        let table = decoherence_table(&set).unwrap();
        let (t1, t2) = (set.times()[0], set.times()[1]);
        let h = set.hamiltonian();
        let u1 = h.unitary_propagator(t1).unwrap();
        let u21 = h.unitary_propagator(t2 - t1).unwrap();
        let rho = set.initial_state().op();
        let branch = |i: usize, j: usize| {
            let p1 = set.decompositions()[0].projector(i).op();
            let p2 = set.decompositions()[1].projector(j).op();
            &(&(p2 * &u21) * p1) * &u1
        };
        let histories = set.histories();
        for (a, ha) in histories.iter().enumerate() {
            let ka = branch(ha.0[0], ha.0[1]);
            for (b, hb) in histories.iter().enumerate() {
                let kb = branch(hb.0[0], hb.0[1]);
                let expected = (&(&ka * rho) * &kb.adjoint()).trace();
                prop_assert!((table[a][b] - expected).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn energy_offset_leaves_table_unchanged(seed in any::<u64>(), dim in 2usize..=4, shift in -5.0f64..5.0) {
        let set = random_set(seed, dim, 2);
        let shifted_h = set.hamiltonian() + &ComplexOperator::identity(dim).scale_real(shift);
        let shifted = HistorySet::new(
            set.times().to_vec(),
            set.decompositions().to_vec(),
            shifted_h,
            set.initial_state().clone(),
        )
        .unwrap();
        let (a, b) = (decoherence_table(&set).unwrap(), decoherence_table(&shifted).unwrap());
        for (ra, rb) in a.iter().zip(&b) {
            for (x, y) in ra.iter().zip(rb) {
                prop_assert!((x - y).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn two_slit_offdiagonal_is_half_the_defect(seed in any::<u64>(), dim in 2usize..=6) {
        let mut r = rng::stream(seed, 3);
        let psi = StateVector::normalized((0..dim).map(|_| C64::new(r.random_range(-1.0..1.0), 0.0)).collect()).unwrap();
        let slit_vectors = real_basis(dim, &mut r);
        let cut = 1 + r.random_range(0..dim - 1);
        let slits = ProjectiveDecomposition::new(vec![
            Projector::onto(&slit_vectors[..cut]).unwrap(),
            Projector::onto(&slit_vectors[cut..]).unwrap(),
        ])
        .unwrap();
        let screen_vectors = real_basis(dim, &mut r);
        let screen = ProjectiveDecomposition::new(screen_vectors.iter().map(|v| Projector::onto(std::slice::from_ref(v)).unwrap()).collect()).unwrap();
        let report = consistency_check(&two_slit_history_set(&psi, &slits, &screen).unwrap(), 0.0).unwrap();
        let max_defect = (0..screen.len())
            .map(|j| additivity_defect(&psi, &slits, &screen, j).unwrap().abs())
            .fold(0.0, f64::max);
        prop_assert!((report.max_offdiag - 0.5 * max_defect).abs() <= 1e-10);
    }
}
