mod common;

use common::*;
use conic_pricer::acceptability::{
    closed_form_band_minimum, gain_loss_ratio, lp_band_minimum, min_band_ratio_lp, min_band_ratio_vertices, rho_gamma,
};
use conic_pricer::lp::{self, LinearProgram, LpStatus, Sense, SolverOptions};
use conic_pricer::market::CashFlow;
use conic_pricer::pricing::{Pricer, QuoteStatus};
use proptest::prelude::*;
use rand::Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn weights(n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    n.prop_flat_map(|n| (prop::collection::vec(0.05f64..1.0, n), prop::collection::vec(-3.0f64..3.0, n)))
        .prop_map(|(w, x)| {
            let s: f64 = w.iter().sum();
            (w.iter().map(|v| v / s).collect(), x)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tower_property(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let tree = random_tree(&mut rng, 8, 2);
        let x: Vec<f64> = (0..tree.n_paths()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let inner = tree.expectation_at(&x, 1);
        prop_assert!(tree.is_measurable(&inner, 1));
        let lhs = tree.expectation_at(&inner, 0);
        let rhs = tree.expectation_at(&x, 0);
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn band_minimum_routes_agree((p, x) in weights(1..9), gamma in 0.01f64..20.0) {
        let oracle = band_min_by_vertices(&p, &x, gamma);
        prop_assert!(close(min_band_ratio_vertices(&p, &x, gamma), oracle, 1e-10));
        let lp = min_band_ratio_lp(&p, &x, gamma, &SolverOptions::default()).unwrap();
        prop_assert!(close(lp, oracle, 1e-9));
    }

    #[test]
    fn closed_form_matches_lp((p, x) in weights(1..9), gamma in 0.01f64..20.0) {
        let cf = closed_form_band_minimum(&p, &x, gamma);
        let lp = lp_band_minimum(&p, &x, gamma, &SolverOptions::default()).unwrap();
        prop_assert!(close(cf, lp, 1e-9), "{cf} vs {lp}");
    }

    #[test]
    fn gain_loss_ratio_matches_oracle((p, x) in weights(1..9), c in 0.1f64..10.0) {
        let r = gain_loss_ratio(&p, &x);
        let o = ratio(&p, &x);
        prop_assert!(r == o || close(r, o, 1e-12));
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let rs = gain_loss_ratio(&p, &scaled);
        prop_assert!(rs == r || close(rs, r, 1e-9));
    }

    #[test]
    fn rho_grows_with_gamma(seed in any::<u64>(), g in 0.01f64..5.0, dg in 0.0f64..5.0) {
        let mut rng = rng(seed);
        let tree = random_tree(&mut rng, 6, 2);
        let d = random_cash_flow(&mut rng, &tree);
        for t in 0..=1 {
            let lo = rho_gamma(&tree, &d, t, g).unwrap();
            let hi = rho_gamma(&tree, &d, t, g + dg).unwrap();
            for (a, b) in lo.iter().zip(&hi) {
                prop_assert!(a.value <= b.value + 1e-9 * (1.0 + b.value.abs()));
            }
        }
    }

    #[test]
    fn bounds_are_positively_homogeneous(seed in any::<u64>(), c in 0.1f64..10.0) {
        let mut rng = rng(seed);
        let tree = random_tree(&mut rng, 5, 1 + (seed % 2) as usize);
        let model = random_market(&mut rng, &tree, 1, 0.01);
        let pricer = Pricer::new(model).unwrap();
        let d = random_cash_flow(&mut rng, &tree);
        let cd = CashFlow::new(&tree, d.scale(c)).unwrap();
        let a = pricer.noarb_bounds(&d, 0).unwrap();
        let b = pricer.noarb_bounds(&cd, 0).unwrap();
        for (qa, qb) in a.nodes.iter().zip(&b.nodes) {
            prop_assert_eq!(qa.status, qb.status);
            if qa.status == QuoteStatus::Ok {
                prop_assert!(close(c * qa.bid, qb.bid, 1e-8) && close(c * qa.ask, qb.ask, 1e-8));
                prop_assert!(qa.bid <= qa.ask + 1e-9 * (1.0 + qa.ask.abs()));
            }
        }
    }

    #[test]
    fn lp_matches_vertex_enumeration(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(2..5);
        let m = rng.gen_range(1..5);
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect()).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..3.0)).collect();
        let mut program = LinearProgram::new(Sense::Maximize, c.clone());
        for (row, bi) in a.iter().zip(&b) {
            program.leq(row.clone(), *bi);
        }
        // keep the feasible set bounded
        let cap = vec![1.0; n];
        program.leq(cap.clone(), 10.0);
        let mut rows = a.clone();
        rows.push(cap);
        let mut rhs = b.clone();
        rhs.push(10.0);
        let sol = lp::solve(&program).unwrap();
        match vertex_lp(true, &c, &rows, &rhs, &[], &[]) {
            Some((v, _)) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!(close(sol.value, v, 1e-9), "{} vs {v}", sol.value);
            }
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
        }
    }
}
