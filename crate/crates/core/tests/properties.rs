use proptest::prelude::*;

use reval::betting::{BetContext, BettingConfig, UpState, WsrState};
use reval::data::{batch_unlabeled, effective_observation, PairedSample, RelianceGrid, RiskSpec};
use reval::evalue::{EvaluatorConfig, EvaluatorKind, MixtureEProcess};
use reval::selection::{bonferroni_level, fst_prefix, select_bonferroni, select_fst, Candidate, CandidateList};

fn sample() -> impl Strategy<Value = PairedSample> {
    (0.0..=1.0f64, 0.0..=1.0f64, prop::collection::vec(0.0..=1.0f64, 0..6))
        .prop_map(|(real, auto, syn)| PairedSample::new(real, auto, syn).unwrap())
}

fn binary_sample(r: usize) -> impl Strategy<Value = PairedSample> {
    (any::<bool>(), any::<bool>(), prop::collection::vec(any::<bool>(), r)).prop_map(|(a, b, syn)| {
        let f = |x: bool| f64::from(u8::from(x));
        PairedSample::new(f(a), f(b), syn.into_iter().map(f).collect()).unwrap()
    })
}

fn lse(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn effective_observation_stays_in_support(s in sample(), rho in 0.0..=1.0f64) {
        prop_assume!(s.ratio() > 0 || rho == 0.0);
        let o = effective_observation(&s, rho).unwrap();
        prop_assert!(o.value >= o.lower() && o.value <= o.upper());
        prop_assert_eq!(o.lower(), -rho);
    }

    #[test]
    fn reliance_endpoints_reduce(s in sample()) {
        prop_assume!(s.ratio() > 0);
        prop_assert_eq!(effective_observation(&s, 0.0).unwrap().value, s.real_loss());
        let ppi = s.synthetic_mean().unwrap() + s.real_loss() - s.autoeval_loss_on_real();
        prop_assert_eq!(effective_observation(&s, 1.0).unwrap().value, ppi);
    }

    #[test]
    fn batches_have_equal_size(n in 1usize..40, len in 0usize..400) {
        let data: Vec<f64> = (0..len).map(|i| (i % 2) as f64).collect();
        let batches = batch_unlabeled(n, &data).unwrap();
        prop_assert_eq!(batches.len(), n);
        let r = len / n;
        prop_assert!(batches.iter().all(|b| b.len() == r));
        let flat: Vec<f64> = batches.concat();
        prop_assert_eq!(&flat[..], &data[..n * r]);
    }

    #[test]
    fn reflection_is_an_involution(s in sample()) {
        let back = s.reflected().reflected();
        let close = |a: f64, b: f64| (a - b).abs() <= f64::EPSILON;
        prop_assert!(close(back.real_loss(), s.real_loss()));
        prop_assert!(close(back.autoeval_loss_on_real(), s.autoeval_loss_on_real()));
        prop_assert!(back.synthetic_losses().iter().zip(s.synthetic_losses()).all(|(&a, &b)| close(a, b)));
    }

    #[test]
    fn bets_stay_legal(
        alpha in 0.01..0.9f64,
        rho in 0.0..=1.0f64,
        qs in prop::collection::vec(0.0..=1.0f64, 1..60),
    ) {
        let (lower, upper) = (-rho, 1.0 + rho);
        let spec = RiskSpec::new(alpha, 0.1, 100).unwrap();
        let ctx = BetContext::new(&spec, lower, upper);
        let mut wsr = WsrState::new(ctx, 0.75).unwrap();
        let mut up = UpState::uniform(ctx, 257).unwrap();
        for u in qs {
            let q = lower + u * (upper - lower);
            for bet in [wsr.next_bet(), up.next_bet()] {
                prop_assert!(bet >= 0.0 && bet < ctx.max_bet());
                prop_assert!(1.0 - bet * (q - alpha) > 0.0);
            }
            wsr.observe(q).unwrap();
            up.observe(q).unwrap();
        }
    }

    #[test]
    fn up_wealth_is_grid_average(
        alpha in 0.05..0.5f64,
        qs in prop::collection::vec(0.0..=1.0f64, 1..80),
    ) {
        let spec = RiskSpec::new(alpha, 0.1, 100).unwrap();
        let mut up = UpState::uniform(BetContext::new(&spec, 0.0, 1.0), 64).unwrap();
        let mut log_wealth = 0.0;
        for &q in &qs {
            log_wealth += (-up.next_bet() * (q - alpha)).ln_1p();
            up.observe(q).unwrap();
        }
        let per_point: Vec<f64> = (0..64).map(|g| up.grid_log_wealth(g)).collect();
        let average = lse(&per_point) - 64f64.ln();
        prop_assert!((log_wealth - average).abs() < 1e-9, "{} vs {}", log_wealth, average);
        prop_assert!((up.mixture_log_wealth() - average).abs() < 1e-9);
    }

    #[test]
    fn mixture_identity_and_regret(
        stream in prop::collection::vec(binary_sample(3), 1..120),
        size in 2usize..8,
        alpha in 0.05..0.5f64,
        use_up in any::<bool>(),
    ) {
        let spec = RiskSpec::new(alpha, 0.1, 200).unwrap();
        let grid = RelianceGrid::uniform(size).unwrap();
        let betting = if use_up { BettingConfig { up_grid: 128, ..BettingConfig::up() } } else { BettingConfig::wsr() };
        let mut m = MixtureEProcess::new(&grid, &spec, &betting).unwrap();
        let log_s = (size as f64).ln();
        for s in &stream {
            m.step(s).unwrap();
            let arms = m.arm_log_wealths();
            let shifted: Vec<f64> = arms.iter().map(|a| a - log_s).collect();
            prop_assert!((m.log_wealth() - lse(&shifted)).abs() < 1e-9);
            let best = arms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(best - m.log_wealth() <= log_s + 1e-12);
            let total: f64 = m.weights().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn running_max_never_decreases(stream in prop::collection::vec(binary_sample(2), 1..100)) {
        let spec = RiskSpec::new(0.3, 0.1, 100).unwrap();
        let mut p = EvaluatorConfig::new(EvaluatorKind::RAutoEvalPlus, BettingConfig::wsr())
            .with_grid(RelianceGrid::uniform(4).unwrap())
            .build(&spec)
            .unwrap();
        let mut last = 0.0;
        for s in &stream {
            p.observe(s).unwrap();
            prop_assert!(p.max_log_wealth() >= last);
            prop_assert!(p.max_log_wealth() >= p.log_wealth());
            last = p.max_log_wealth();
        }
    }

    #[test]
    fn fst_accepts_a_prefix(pattern in prop::collection::vec(any::<bool>(), 0..8)) {
        let spec = RiskSpec::new(0.5, 0.1, 30).unwrap();
        let ev = EvaluatorConfig::new(EvaluatorKind::REval, BettingConfig::fixed(1.5));
        let list = CandidateList::new(
            pattern
                .iter()
                .enumerate()
                .map(|(i, &pass)| {
                    let v = if pass { 0.0 } else { 1.0 };
                    Candidate::new(format!("c{i}"), vec![PairedSample::new(v, v, vec![]).unwrap(); 30])
                })
                .collect(),
        );
        let sel = select_fst(&list, &spec, &ev).unwrap();
        let k = fst_prefix(&pattern);
        let expected: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
        prop_assert_eq!(sel.accepted, expected);
    }

    #[test]
    fn bonferroni_is_order_invariant(
        pattern in prop::collection::vec(any::<bool>(), 1..8),
        rotate in 0usize..8,
    ) {
        let spec = RiskSpec::new(0.5, 0.1, 30).unwrap();
        let ev = EvaluatorConfig::new(EvaluatorKind::REval, BettingConfig::fixed(1.5));
        let make = |order: &[usize]| {
            CandidateList::new(
                order
                    .iter()
                    .map(|&i| {
                        let v = if pattern[i] { 0.0 } else { 1.0 };
                        Candidate::new(format!("c{i}"), vec![PairedSample::new(v, v, vec![]).unwrap(); 30])
                    })
                    .collect(),
            )
        };
        let mut order: Vec<usize> = (0..pattern.len()).collect();
        let a = select_bonferroni(&make(&order), &spec, &ev).unwrap();
        order.rotate_left(rotate % pattern.len());
        let b = select_bonferroni(&make(&order), &spec, &ev).unwrap();
        let (mut x, mut y) = (a.accepted, b.accepted);
        x.sort();
        y.sort();
        prop_assert_eq!(x, y);
        prop_assert_eq!(a.outcomes[0].level, bonferroni_level(0.1, pattern.len()));
    }
}
