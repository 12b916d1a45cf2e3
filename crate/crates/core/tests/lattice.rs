//! Randomized checks of the lattice Green function, the second-order kernel
//! and the boundary functionals.

use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use multisym::dynamics::{Lattice1p1, Slice};
use multisym::perturbation::{build_phi2, retarded_green, Kernel2, LatticeGreen, Phi1Preset, Slab};

fn lattice() -> Lattice1p1 {
    Lattice1p1::new(40, 32, 0.05, 0.1).unwrap()
}

fn green() -> &'static Arc<LatticeGreen> {
    static G: OnceLock<Arc<LatticeGreen>> = OnceLock::new();
    G.get_or_init(|| Arc::new(retarded_green(1.0, &lattice()).unwrap()))
}

fn kernel() -> &'static Kernel2 {
    static K: OnceLock<Kernel2> = OnceLock::new();
    K.get_or_init(|| {
        let phi1 = Phi1Preset::Gaussian {
            amplitude: 1.0,
            width: 0.8,
            shift: 0.5,
        }
        .grid(&lattice(), 1.0)
        .unwrap();
        build_phi2(phi1, green().clone(), 3).unwrap()
    })
}

fn site() -> impl Strategy<Value = (usize, usize)> {
    (0..40usize, 0..32usize)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn green_inverts_the_operator(s in (1..38usize, 0..32usize)) {
        prop_assert!(green().operator_residual(s) < 1e-10);
    }

    #[test]
    fn green_is_causal_and_translation_invariant(s in site(), x in site(), shift in 0..32usize) {
        let g = green();
        if x.0 <= s.0 {
            prop_assert_eq!(g.g(s, x), 0.0);
        }
        let moved = |p: (usize, usize)| (p.0, (p.1 + shift) % 32);
        prop_assert_eq!(g.g(s, x), g.g(moved(s), moved(x)));
    }

    #[test]
    fn second_order_kernel_is_symmetric(a in site(), b in site()) {
        prop_assert_eq!(kernel().value(a, b), kernel().value(b, a));
    }

    #[test]
    fn cfl_violations_are_rejected(ratio in 1.0001..3.0f64) {
        prop_assert!(Lattice1p1::new(10, 16, 0.1 * ratio, 0.1).is_err());
    }

    #[test]
    fn slabs_must_be_ordered(a in 0..50usize, b in 0..50usize) {
        let ok = Slab::new(Slice::Node(a), Slice::Node(b)).is_ok();
        prop_assert_eq!(ok, a < b);
    }
}
