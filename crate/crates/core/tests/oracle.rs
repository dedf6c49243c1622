mod common;

use cal_lab::duality::{benchmark_nonfav, benchmark_single};
use cal_lab::instance::{random_prior, RandomSpec};
use cal_lab::mechanisms::{brev, edge_menu_revenue};
use cal_lab::model::{value_table, Caps, DiscreteDist, Hyperedge, ItemSet, ProfileSet, TypeSpace, WeightProfile};
use cal_lab::myerson::{iron, opt_copies, optimal_posted_price};
use common::*;
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn oracle_self_checks() {
    let phi = ironed_phi(&[(1.0, 0.1), (2.0, 0.8), (3.0, 0.1)]);
    for (a, b) in phi.iter().zip([-8.0, 1.875, 3.0]) {
        assert!((a - b).abs() < 1e-12, "{phi:?}");
    }
    // phi(2) = 2 - 0.4/0.1 = -2 falls below phi(1) = 0, so the two iron together.
    let phi = ironed_phi(&[(1.0, 0.5), (2.0, 0.1), (3.0, 0.4)]);
    assert!((phi[0] + 1.0 / 3.0).abs() < 1e-12 && (phi[1] + 1.0 / 3.0).abs() < 1e-12 && (phi[2] - 3.0).abs() < 1e-12);

    let o = Oracle::new(&two_edge_prior());
    assert!((o.single() - 1.25).abs() < 1e-12);
    assert!((o.nonfav() - 0.25).abs() < 1e-12);
    assert!((o.brev() - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ironing_matches_concave_hull(seed in any::<u64>()) {
        let d = random_dist(&mut rng(seed), 6);
        let dist = DiscreteDist::from_pairs(&d).unwrap();
        let table = iron(&dist);
        for (a, b) in table.phi_bar().iter().zip(ironed_phi(&d)) {
            prop_assert!(close(*a, b), "{:?} vs {:?}", table.phi_bar(), ironed_phi(&d));
        }
        prop_assert!(close(optimal_posted_price(&dist).1, best_posted_price(&d)));
    }

    #[test]
    fn benchmarks_match_enumeration(seed in 0u64..100_000, m in 1usize..=4) {
        let spec = RandomSpec { m_min: m, m, max_edges: 4, ..RandomSpec::default() };
        let prior = random_prior(&spec, seed).unwrap();
        let o = Oracle::new(&prior);
        let caps = Caps::default();
        let set = ProfileSet::exact(&prior, caps.profiles).unwrap();

        prop_assert!(close(benchmark_single(&prior, &set), o.single()));
        prop_assert!(close(benchmark_nonfav(&prior, &set), o.nonfav()));
        prop_assert!(close(opt_copies(&prior), o.opt_copies()));

        let ts = TypeSpace::new(&prior, set, &caps).unwrap();
        prop_assert!(close(brev(&ts).revenue, o.brev()));

        let edges: Vec<Hyperedge> = o.edges.iter().map(|&b| Hyperedge::new(ItemSet::from_bits(b)).unwrap()).collect();
        for (w, _) in o.profiles().iter().take(20) {
            let profile = WeightProfile::new(edges.iter().copied().zip(w.iter().copied()).collect()).unwrap();
            let table = value_table(&profile, prior.feasibility(), m);
            for s in 0..1u64 << m {
                prop_assert!(close(table[s as usize], o.value(w, s)));
            }
        }

        let menu: Vec<(u64, f64)> = o.edges.iter().enumerate().map(|(j, &b)| (b, 0.5 + j as f64)).collect();
        let lib_menu: Vec<(ItemSet, f64)> = menu.iter().map(|&(b, p)| (ItemSet::from_bits(b), p)).collect();
        prop_assert!(close(edge_menu_revenue(&ts, &lib_menu), o.menu_revenue(&menu)));
    }
}
