use corrdyn::dynamics::HamiltonianSpec;
use corrdyn::hierarchy::{CorrelationDynamics, CorrelationState};
use corrdyn::partitions::{bell, partitions_of, stirling2, ClusterSet};
use corrdyn::sampling::Sampler;
use corrdyn::seqalgebra::{exp_star, ln_star, FockSpace};
use corrdyn::tensorspace::{
    is_hermitian, max_abs, max_abs_diff, partial_trace, permutation_operator, symmetrizer, CMatrix, Permutation, Space,
    Statistics,
};
use proptest::prelude::*;

fn statistics() -> impl Strategy<Value = Statistics> {
    prop_oneof![Just(Statistics::Bose), Just(Statistics::Fermi), Just(Statistics::Boltzmann)]
}

fn permutation(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n).collect::<Vec<usize>>()).prop_shuffle().prop_map(|images| Permutation::from_images(images).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn partition_count_is_bell(n in 0usize..8) {
        let ground: Vec<usize> = (0..n).collect();
        prop_assert_eq!(partitions_of(&ground).count() as u64, bell(n).unwrap());
        let by_blocks: u64 = (0..=n).map(|k| stirling2(n, k).unwrap()).sum();
        prop_assert_eq!(by_blocks, bell(n).unwrap());
    }

    #[test]
    fn permutation_operators_form_a_representation(
        (a, b) in (1usize..5).prop_flat_map(|n| (permutation(n), permutation(n)))
    ) {
        let space = Space::with_budget(2, 1024).unwrap();
        let pa = permutation_operator(&space, &a).unwrap();
        let pb = permutation_operator(&space, &b).unwrap();
        let pab = permutation_operator(&space, &a.compose(&b)).unwrap();
        prop_assert!(max_abs_diff(&(&pa * &pb), &pab) < 1e-15);
        prop_assert_eq!(a.compose(&a.inverse()), Permutation::identity(a.len()));
        prop_assert_eq!((a.parity() + b.parity()) % 2, a.compose(&b).parity() % 2);
    }

    #[test]
    fn symmetrizers_are_orthogonal_projectors(d in 2usize..4, n in 1usize..4, stats in statistics()) {
        let space = Space::with_budget(d, 1024).unwrap();
        let s = symmetrizer(&space, n, stats).unwrap();
        prop_assert!(max_abs_diff(&(&s * &s), &s) < 1e-13);
        prop_assert!(is_hermitian(&s, 1e-14));
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>()) {
        let space = Space::with_budget(2, 1024).unwrap();
        let mut rng = Sampler::new(seed);
        let (a, b) = (rng.matrix(2, 1.0), rng.matrix(4, 1.0));
        let reduced = partial_trace(&space, &a.kronecker(&b), 3, &[0]).unwrap();
        prop_assert!(max_abs_diff(&reduced, &(&a * b.trace())) < 1e-13);
    }

    #[test]
    fn exp_and_ln_are_inverse(seed in any::<u64>(), scale in 0.05f64..1.0, stats in statistics()) {
        let fs = FockSpace::new(Space::with_budget(2, 1024).unwrap(), 3, stats).unwrap();
        let mut rng = Sampler::new(seed);
        let g = rng.state_like_sequence(&fs, scale);
        let back = ln_star(&fs, &exp_star(&fs, &g).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&g) < 1e-12);
    }

    #[test]
    fn free_dynamics_builds_no_cumulants(seed in any::<u64>(), t in -3.0f64..3.0) {
        let space = Space::with_budget(2, 1024).unwrap();
        let fs = FockSpace::new(space, 3, Statistics::Bose).unwrap();
        let mut rng = Sampler::new(seed);
        let sys = CorrelationDynamics::new(fs, HamiltonianSpec::free(rng.hermitian(2, 1.0))).unwrap();
        let f: CMatrix = rng.hermitian(8, 1.0);
        let cumulant = sys.dynamics().cumulant(&ClusterSet::singletons(&[0, 1, 2]), &f, t).unwrap();
        prop_assert!(max_abs(&cumulant) < 1e-10, "{}", max_abs(&cumulant));
    }

    #[test]
    fn hierarchy_solution_is_a_group(seed in any::<u64>(), t1 in -1.5f64..1.5, t2 in -1.5f64..1.5, stats in statistics()) {
        let space = Space::with_budget(2, 1024).unwrap();
        let fs = FockSpace::new(space, 3, stats).unwrap();
        let mut rng = Sampler::new(seed);
        let spec = HamiltonianSpec::free(rng.hermitian(2, 1.0))
            .with_potential(2, rng.symmetric_potential(&space, 2, 0.5));
        let sys = CorrelationDynamics::new(fs.clone(), spec).unwrap();
        let g0 = CorrelationState::new(rng.state_like_sequence(&fs, 0.3)).unwrap();
        let composed = sys.evolve(&sys.evolve(&g0, t2).unwrap(), t1).unwrap();
        let direct = sys.evolve(&g0, t1 + t2).unwrap();
        prop_assert!(composed.max_abs_diff(&direct) < 1e-10);
        prop_assert!(direct.max_abs_diff(&sys.evolve_by_densities(&g0, t1 + t2).unwrap()) < 1e-10);
    }
}
