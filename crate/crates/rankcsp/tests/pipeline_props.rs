use proptest::prelude::*;
use rankcsp::{
    gen_planted, guess_orderings, kendall_tau_mod_reversal, kendall_tau_rankings, pos_int,
    position_grid, run_ptas, sample_estimate, AdditiveBackend, Caps, ConstantsMode, Family,
    FastStrategy, GuessMode, Pos, PtasConfig, SamplePlan, VertexOrdering,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stage_invariants_hold_on_noisy_instances(seed in any::<u64>(), num in 0i64..=3) {
        let n = 7;
        let eps = Pos::new(1, 4);
        let p = gen_planted(Family::Betweenness3, n, 3, Pos::new(num, 10), seed).unwrap();
        let mut cfg = PtasConfig::new(eps, seed ^ 0x5eed);
        cfg.guess = GuessMode::Restarts(3);
        cfg.additive = AdditiveBackend::Heuristic;
        // A large scale keeps the additive branch from short-circuiting, so
        // the guessing stages always run.
        cfg.constants = ConstantsMode::Scaled(pos_int(1000));
        let out = run_ptas(&p.system, &cfg).unwrap();
        prop_assert!(!out.took_additive_branch);
        prop_assert_eq!(out.candidates.len(), 3);
        for cand in &out.candidates {
            prop_assert!(out.best_cost <= cand.cost);
        }
        prop_assert!(out.best_cost <= out.additive.cost);
        for stage in &out.stages {
            // Bucketed stages assign owner-grid positions only.
            for (v, pos) in stage.sigma1.iter() {
                prop_assert!(position_grid(v, n, eps).unwrap().contains(&pos));
            }
            prop_assert_eq!(stage.sigma1.len(), n);
            for (v, pos) in stage.sigma2.iter() {
                prop_assert!(stage.unambiguous.binary_search(&v).is_ok());
                prop_assert!(position_grid(v, n, eps).unwrap().contains(&pos));
            }
            // Reinsertion never permutes the solved part: pi4 restricted to
            // the unambiguous set reads exactly like pi3.
            let in_u: Vec<usize> = stage
                .pi4
                .order()
                .iter()
                .copied()
                .filter(|v| stage.unambiguous.binary_search(v).is_ok())
                .collect();
            prop_assert_eq!(&in_u, stage.pi3.order());
            prop_assert_eq!(stage.pi4_cost, p.system.cost_ranking(&stage.pi4).unwrap());
        }
    }

    #[test]
    fn zero_noise_oracle_guess_recovers_planted(seed in any::<u64>(), pick in 0u8..4) {
        let (family, k, n) = match pick {
            0 => (Family::Betweenness3, 3, 7),
            1 => (Family::KFast, 2, 8),
            2 => (Family::KFast, 3, 7),
            _ => (Family::KBetweenness, 4, 7),
        };
        let p = gen_planted(family, n, k, pos_int(0), seed).unwrap();
        let mut cfg = PtasConfig::new(Pos::new(1, 5), seed ^ 0xf00d);
        cfg.guess = GuessMode::Oracle(p.planted.clone());
        cfg.fast = FastStrategy::Exact;
        cfg.additive = AdditiveBackend::Heuristic;
        let out = run_ptas(&p.system, &cfg).unwrap();
        prop_assert_eq!(out.best_cost, 0);
        if family.reversal_symmetric() {
            prop_assert_eq!(kendall_tau_mod_reversal(&out.best, &p.planted).unwrap(), 0);
        } else {
            // One satisfying order per subset pins the optimum exactly.
            prop_assert_eq!(kendall_tau_rankings(&out.best, &p.planted).unwrap(), 0);
        }
    }

    #[test]
    fn full_results_are_reproducible(seed in any::<u64>()) {
        let p = gen_planted(Family::Betweenness3, 8, 3, Pos::new(1, 10), seed).unwrap();
        let mut cfg = PtasConfig::new(Pos::new(1, 4), seed.wrapping_mul(31));
        cfg.guess = GuessMode::Restarts(4);
        cfg.additive = AdditiveBackend::Heuristic;
        let a = run_ptas(&p.system, &cfg).unwrap();
        let b = run_ptas(&p.system, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn estimator_matches_manual_sum(seed in any::<u64>()) {
        let n = 6;
        let eps = Pos::new(1, 2);
        let p = gen_planted(Family::Betweenness3, n, 3, Pos::new(1, 4), seed).unwrap();
        let c = &p.system;
        let plan = SamplePlan::from_sets(vec![vec![0, 1], vec![2, 3], vec![1, 2]], 3, n).unwrap();
        let mut sigma0 = VertexOrdering::new();
        for v in 0..4 {
            let grid = position_grid(v, n, eps).unwrap();
            sigma0.insert(v, grid[(seed as usize + v) % grid.len()]).unwrap();
        }
        let u = 5;
        for p_u in position_grid(u, n, eps).unwrap() {
            // Manual recount with the public evaluator.
            let mut count = 0u64;
            for set in plan.sets() {
                let mut trio: Vec<(Pos, usize)> =
                    set.iter().map(|&x| (sigma0.position(x).unwrap(), x)).collect();
                trio.push((p_u, u));
                trio.sort();
                let order: Vec<usize> = trio.into_iter().map(|(_, x)| x).collect();
                count += c.evaluate(&order).unwrap();
            }
            // C(6,2) / t = 15 / 3 = 5.
            prop_assert_eq!(
                sample_estimate(c, &sigma0, &plan, u, p_u).unwrap(),
                Pos::new((5 * count) as i64, 1)
            );
        }
    }

    #[test]
    fn exhaustive_budget_matches_grid_product(
        den in 2i64..=4,
        w_size in 1usize..=3,
    ) {
        let n = 6;
        let eps = Pos::new(1, den);
        let sets: Vec<Vec<usize>> = (0..w_size).map(|i| vec![i]).collect();
        let plan = SamplePlan::from_sets(sets, 2, n).unwrap();
        let per_vertex = den as u64 + 1;
        let expect = per_vertex.pow(w_size as u32);
        let caps = Caps { max_guesses: 1_000_000, ..Caps::default() };
        let guesses = guess_orderings(&plan, n, eps, &GuessMode::Exhaustive, 0, &caps).unwrap();
        prop_assert_eq!(guesses.len() as u64, expect);
        // One below the requirement trips the budget error with the exact count.
        let tight = Caps { max_guesses: expect - 1, ..Caps::default() };
        match guess_orderings(&plan, n, eps, &GuessMode::Exhaustive, 0, &tight) {
            Err(rankcsp::Error::BudgetExceeded { needed, cap }) => {
                prop_assert_eq!(needed, expect as u128);
                prop_assert_eq!(cap, expect - 1);
            }
            other => prop_assert!(false, "expected budget error, got {:?}", other),
        }
    }
}

#[test]
fn restart_candidates_are_prefixes_across_budgets() {
    let p = gen_planted(Family::Betweenness3, 7, 3, Pos::new(1, 10), 40).unwrap();
    let mut costs_small = Vec::new();
    let mut costs_large = Vec::new();
    for (r, sink) in [(3u32, &mut costs_small), (6, &mut costs_large)] {
        let mut cfg = PtasConfig::new(Pos::new(1, 4), 1234);
        cfg.guess = GuessMode::Restarts(r);
        cfg.additive = AdditiveBackend::Heuristic;
        cfg.constants = ConstantsMode::Scaled(pos_int(1000));
        let out = run_ptas(&p.system, &cfg).unwrap();
        *sink = out.candidates.iter().map(|c| c.cost).collect();
    }
    assert_eq!(costs_small[..], costs_large[..3]);
    let best =
        |v: &[u64]| v.iter().copied().min().unwrap();
    assert!(best(&costs_large) <= best(&costs_small));
}

#[test]
fn additive_branch_returns_first_stage_output() {
    // Paper constants at this scale take the branch whenever the additive
    // stage cost is nonzero.
    let p = gen_planted(Family::Betweenness3, 7, 3, Pos::new(1, 2), 8).unwrap();
    let mut cfg = PtasConfig::new(Pos::new(1, 4), 7);
    cfg.additive = AdditiveBackend::Exact;
    let out = run_ptas(&p.system, &cfg).unwrap();
    let opt = rankcsp::exact_opt(&p.system, 10).unwrap();
    assert!(out.best_cost >= 1, "a half-noised instance is not consistent");
    assert!(out.took_additive_branch);
    assert_eq!(out.best_cost, opt.opt_cost);
    assert!(out.candidates.is_empty());
    assert_eq!(out.best_guess, None);
    assert!(out.additive.guaranteed);
}

#[test]
fn degenerate_core_reinserts_everything() {
    // When the theta filter keeps nothing, the core has nothing to solve
    // and reinsertion must still produce a full ranking.
    let p = gen_planted(Family::Betweenness3, 6, 3, Pos::new(1, 2), 11).unwrap();
    let sigma2 = VertexOrdering::new();
    let core =
        rankcsp::solve_core(&p.system, &sigma2, FastStrategy::Auto, &Caps::default(), 1).unwrap();
    assert!(core.pi3.is_empty());
    assert_eq!(core.certified, None);
    let rest: Vec<usize> = (0..6).collect();
    let (_, pi4) = rankcsp::insert_ambiguous(&p.system, &core.pi3, &rest).unwrap();
    assert!(pi4.is_ranking_of_range(6));
}
