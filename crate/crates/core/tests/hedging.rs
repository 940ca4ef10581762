use superhedge_core::pricer::{
    backward_induce, AsianCall, HedgeClaim, MarketModel, PathTreePricer, StepSpec,
};
use superhedge_core::pwl::PwlFunction;
use superhedge_core::sim::{simulate, ExecutionProtocol, PathSource, RngConfig, SimPath};

fn check_path(p: &SimPath, payoff: f64) {
    let horizon = p.theta.len();
    let mut v = p.v[0];
    for t in 1..=horizon {
        v += p.theta[t - 1] * (p.s[t] - p.s[t - 1]);
        assert!((v - p.v[t]).abs() <= 1e-12 * v.abs().max(1.0));
    }
    assert!(p.v[horizon] - payoff >= -1e-9 * p.s[horizon].max(1.0));
}

#[test]
fn put_hedge_over_three_dates() {
    let model = MarketModel::uniform(100.0, 3, StepSpec::REFERENCE).unwrap();
    let put = PwlFunction::put(90.0).unwrap();
    let priced = backward_induce(&put, &model).unwrap();
    let protocol = ExecutionProtocol::interior(3);
    let source = PathSource {
        model: &model,
        claim: &priced,
        protocol: &protocol,
        rng: RngConfig::new(5),
        stream: 0,
    };
    source
        .for_each::<superhedge_core::sim::SimError, _>(20_000, |_, p| {
            check_path(p, put.value_at(p.s[3]));
            assert!(p.bid[1].is_some() && p.bid[2].is_some() && p.bid[3].is_none());
            Ok(())
        })
        .unwrap();
}

#[test]
fn asian_hedge_dominates_payoff() {
    let model = MarketModel::reference();
    let claim = PathTreePricer::new(AsianCall { strike: 95.0 }, &model).unwrap();
    let protocol = ExecutionProtocol::interior(2);
    let source = PathSource {
        model: &model,
        claim: &claim,
        protocol: &protocol,
        rng: RngConfig::new(9),
        stream: 3,
    };
    source
        .for_each::<superhedge_core::sim::SimError, _>(20_000, |_, p| {
            check_path(p, claim.payoff(&p.s));
            Ok(())
        })
        .unwrap();
}

#[test]
fn simulate_uses_one_stream_per_claim() {
    let model = MarketModel::reference();
    let protocol = ExecutionProtocol::interior(2);
    let rng = RngConfig::new(77);
    let priced: Vec<_> = [80.0, 120.0]
        .iter()
        .map(|&k| backward_induce(&PwlFunction::call(k).unwrap(), &model).unwrap())
        .collect();
    let claims: Vec<&dyn HedgeClaim> = priced.iter().map(|p| p as &dyn HedgeClaim).collect();
    let all = simulate(&model, &claims, 5_000, rng, &protocol).unwrap();
    for (i, claim) in claims.iter().enumerate() {
        let single = PathSource {
            model: &model,
            claim: *claim,
            protocol: &protocol,
            rng,
            stream: i as u64,
        }
        .stats(5_000)
        .unwrap();
        assert_eq!(single, all[i]);
    }
    assert_ne!(all[0].price(0).mean(), all[1].price(0).mean());
}

#[test]
fn convex_pwl_claim_values_dominate_payoff() {
    // long straddle with a kinked wing
    let payoff =
        PwlFunction::new(vec![80.0, 100.0, 130.0], vec![20.0, 0.0, 30.0], -1.0, 2.0).unwrap();
    let model = MarketModel::uniform(100.0, 3, StepSpec::from_support(0.8, 1.25)).unwrap();
    let res = backward_induce(&payoff, &model).unwrap();
    for t in 0..=3 {
        let g = res.value_fn(t);
        assert!(g.is_convex(1e-9));
        for i in 1..400 {
            let s = i as f64;
            assert!(g.value_at(s) >= payoff.value_at(s) - 1e-9);
        }
    }
}
