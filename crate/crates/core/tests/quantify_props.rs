use proptest::prelude::*;

use decolab::qstate::random;
use decolab::quantify::{decoherence_gap, halo_sweep, max_offdiag_abs};
use decolab::{rng, DensityMatrix, OrthonormalBasis};

fn sample(seed: u64, dim: usize, rank: usize) -> (DensityMatrix, OrthonormalBasis) {
    let mut r = rng::stream(seed, 0);
    let rank = 1 + rank % dim;
    (random::density_matrix(dim, rank, &mut r), random::basis(dim, &mut r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gap_is_nonnegative(seed in any::<u64>(), dim in 1usize..=8, rank in 0usize..8) {
        let (rho, basis) = sample(seed, dim, rank);
        prop_assert!(decoherence_gap(&rho, &basis).unwrap().gap >= -1e-9);
    }

    #[test]
    fn small_gap_means_small_coherences(seed in any::<u64>(), dim in 2usize..=6) {
        let mut r = rng::stream(seed, 1);
        let basis = random::basis(dim, &mut r);
        let weights: Vec<f64> = (0..dim).map(|k| 1.0 + k as f64).collect();
        let total: f64 = weights.iter().sum();
        let p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let rho = DensityMatrix::from_diagonal(&p).unwrap().conjugate_by(basis.unitary());
        let gap = decoherence_gap(&rho, &basis).unwrap().gap;
        prop_assert!(gap.abs() <= 1e-9);
        prop_assert!(max_offdiag_abs(&rho, &basis).unwrap() <= 1e-4);
    }

    #[test]
    fn gap_is_covariant_under_joint_rotation(seed in any::<u64>(), dim in 1usize..=6, rank in 0usize..6) {
        let (rho, basis) = sample(seed, dim, rank);
        let v = random::unitary(dim, &mut rng::stream(seed, 2));
        let moved = basis.transformed(&v).unwrap();
        let a = decoherence_gap(&rho, &basis).unwrap().gap;
        let b = decoherence_gap(&rho.conjugate_by(&v), &moved).unwrap().gap;
        prop_assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn eigenbasis_has_zero_gap(seed in any::<u64>(), dim in 1usize..=8, rank in 0usize..8) {
        let (rho, _) = sample(seed, dim, rank);
        let eig = OrthonormalBasis::eigenbasis(rho.op());
        prop_assert!(decoherence_gap(&rho, &eig).unwrap().gap.abs() <= 1e-9);
    }

    #[test]
    fn halo_is_deterministic_and_anchored(seed in any::<u64>(), dim in 2usize..=4) {
        let (rho, basis) = sample(seed, dim, dim);
        let base = decoherence_gap(&rho, &basis).unwrap().gap;
        for s in halo_sweep(&rho, &basis, 0.0, 4, seed).unwrap() {
            prop_assert!((s.report.gap - base).abs() <= 1e-12);
        }
        let a = halo_sweep(&rho, &basis, 0.3, 6, seed).unwrap();
        let b = halo_sweep(&rho, &basis, 0.3, 6, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
