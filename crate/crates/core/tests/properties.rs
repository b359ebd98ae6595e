use std::collections::BTreeMap;

use flowexp::stats::{
    permutation_test, stat_kw, stat_prc, stat_sim, AdRecord, Method, PermutationOptions, Response, ResponseVector,
    TestStatistic,
};
use proptest::prelude::*;

const URLS: [&str; 6] = ["bmw.example", "audi.example", "news.example", "shoes.example", "limo.example", "tea.example"];

fn response(reloads: &[Vec<(usize, bool)>]) -> Response {
    Response::from_reloads(
        reloads
            .iter()
            .map(|ads| {
                ads.iter()
                    .map(|&(u, ctx)| {
                        let ad = AdRecord::new(URLS[u], format!("offer {u}"));
                        if ctx {
                            ad.with_context("cars")
                        } else {
                            ad
                        }
                    })
                    .collect()
            })
            .collect(),
    )
}

type Unit = Vec<Vec<(usize, bool)>>;

fn units(max: usize) -> impl Strategy<Value = Vec<Unit>> {
    let ad = (0..URLS.len(), any::<bool>());
    let reload = prop::collection::vec(ad, 0..4);
    prop::collection::vec(prop::collection::vec(reload, 1..4), 2..=max)
}

fn statistics() -> Vec<Box<dyn TestStatistic>> {
    let kw: Vec<String> = ["bmw", "audi", "limo"].map(String::from).to_vec();
    vec![
        Box::new(stat_sim()),
        Box::new(stat_kw(&kw).unwrap()),
        Box::new(stat_prc(BTreeMap::from([("cars".to_string(), kw)]), None).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn within_group_shuffles_leave_statistics_unchanged(
        raw in units(7),
        split in any::<prop::sample::Index>(),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;

        let len = raw.len();
        let n = 1 + split.index(len - 1);
        let mut order: Vec<usize> = (0..len).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        order[..n].shuffle(&mut rng);
        order[n..].shuffle(&mut rng);

        let build = |idx: &[usize]| {
            ResponseVector::new(idx.iter().map(|&i| response(&raw[i])).collect(), n, len - n)
                .unwrap()
                .with_labels("cars", "idle")
        };
        let y = build(&(0..len).collect::<Vec<_>>());
        let shuffled = build(&order);
        for s in statistics() {
            prop_assert!(s.group_symmetric(n, len - n));
            match (s.evaluate(&y), s.evaluate(&shuffled)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-12, "{}: {a} vs {b}", s.name()),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{}: {a:?} vs {b:?}", s.name()),
            }
        }
    }

    #[test]
    fn enumerated_p_values_sit_on_the_lattice(raw in units(6), split in any::<prop::sample::Index>()) {
        let len = raw.len();
        let n = 1 + split.index(len - 1);
        let y = ResponseVector::new(raw.iter().map(|u| response(u)).collect(), n, len - n)
            .unwrap()
            .with_labels("cars", "idle");
        for s in statistics() {
            let mut seen = Vec::new();
            for method in [Method::Exact, Method::Partition] {
                let Ok(r) = permutation_test(s.as_ref(), &y, &PermutationOptions::default().method(method)) else {
                    continue;
                };
                let c = r.comparisons as f64;
                prop_assert!(r.p_value >= 1.0 / c && r.p_value <= 1.0);
                prop_assert!((r.p_value * c - (r.p_value * c).round()).abs() < 1e-9);
                seen.push(r.p_value);
            }
            if let [exact, partition] = seen[..] {
                prop_assert!((exact - partition).abs() < 1e-12, "{}: {exact} vs {partition}", s.name());
            }
        }
    }
}
