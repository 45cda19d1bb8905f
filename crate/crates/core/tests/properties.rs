use nearcol::attack::{leak_for, run_attack, simulate_enrollment, AttackKind, ToyTransform};
use nearcol::cover::{CoverSolver, ScheduleKind};
use nearcol::partition::{
    add_user, partition_database, partition_greedy, remove_user, MasterTemplateSet, RemovalLedger,
};
use nearcol::{random_database, Template};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn solvers() -> [CoverSolver; 2] {
    [CoverSolver::exact(), CoverSolver::sann(ScheduleKind::Additive)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn both_partitioners_cover_the_database(n in 4usize..40, k in 1usize..40, eps_frac in 0.0f64..0.6, seed in any::<u64>()) {
        let k = if n < 6 { k.min((1 << n) - 1) } else { k };
        let eps = (eps_frac * n as f64) as usize;
        let db = random_database(n, k, seed).unwrap();
        for solver in solvers() {
            let mts = partition_database(&db, eps, &solver, seed).unwrap();
            prop_assert!(mts.verify(&db).is_ok());
            prop_assert!(mts.len() <= k);
        }
        let greedy = partition_greedy(&db, eps, seed);
        prop_assert!(greedy.verify(&db).is_ok());
        for e in &greedy.entries {
            prop_assert!(db.members().contains(&e.center));
        }
    }

    #[test]
    fn zero_threshold_gives_singletons(n in 8usize..64, k in 1usize..60, seed in any::<u64>()) {
        let db = random_database(n, k, seed).unwrap();
        prop_assert_eq!(partition_database(&db, 0, &CoverSolver::exact(), seed).unwrap().len(), k);
        prop_assert_eq!(partition_greedy(&db, 0, seed).len(), k);
    }

    #[test]
    fn adding_users_keeps_the_set_valid(n in 8usize..32, eps in 0usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut db = random_database(n, 10, seed).unwrap();
        let mut mts = partition_database(&db, eps, &CoverSolver::exact(), seed).unwrap();
        for i in 0..30 {
            let t = Template::random(n, &mut rng);
            if db.position_of(&t).is_some() {
                continue;
            }
            let before = mts.len();
            add_user(&mut mts, &mut db, format!("new{i}"), t).unwrap();
            prop_assert!(mts.len() <= before + 1);
            prop_assert!(mts.verify(&db).is_ok());
        }
        let reparsed = MasterTemplateSet::parse(&mts.to_text(&db), &db, eps).unwrap();
        prop_assert_eq!(reparsed.len(), mts.len());
    }

    #[test]
    fn removal_only_touches_overlapping_balls(n in 8usize..32, eps in 0usize..6, k in 2usize..40, seed in any::<u64>()) {
        let mut db = random_database(n, k, seed).unwrap();
        let victim = db.members()[0].clone();
        let others: Vec<(String, usize)> = db.ids()[1..]
            .iter()
            .zip(&db.members()[1..])
            .map(|(id, m)| (id.clone(), m.distance(&victim)))
            .collect();
        let mut ledger = RemovalLedger::default();
        let report = remove_user(&mut db, &victim, eps, &mut ledger).unwrap();
        let expected: Vec<&String> = others.iter().filter(|(_, d)| *d <= 2 * eps).map(|(id, _)| id).collect();
        let got: Vec<&String> = report.affected.iter().map(|a| &a.id).collect();
        prop_assert_eq!(got, expected);
        prop_assert!(db.position_of(&victim).is_none());
        prop_assert_eq!(report.removed_total, 1);
    }

    #[test]
    fn xor_transform_preserves_distance(n in 1usize..200, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, f, p) = (Template::random(n, &mut rng), Template::random(n, &mut rng), Template::random(n, &mut rng));
        let tr = ToyTransform;
        prop_assert_eq!(tr.apply(&m, &p).unwrap().distance(&tr.apply(&f, &p).unwrap()), m.distance(&f));
    }

    #[test]
    fn partitioned_attack_is_never_larger(n in 8usize..30, k in 1usize..40, tau in 0usize..8, seed in any::<u64>()) {
        let records = simulate_enrollment(n, k, seed).unwrap();
        for kind in [AttackKind::MasterFeatureSet, AttackKind::MasterkeySet] {
            let leak = leak_for(kind, &records);
            let part = run_attack(kind, &leak, tau, true, &CoverSolver::exact(), seed).unwrap();
            let flat = run_attack(kind, &leak, tau, false, &CoverSolver::exact(), seed).unwrap();
            prop_assert!(part.items.len() <= flat.items.len());
            prop_assert_eq!(flat.items.len(), k);
            prop_assert_eq!(part.coverage, 1.0);
            prop_assert_eq!(part.inversion_calls, k);
        }
    }
}

#[test]
fn algorithm_beats_greedy_on_dense_instances() {
    let (n, eps, k) = (15, 10, 50);
    let solver = CoverSolver::exact();
    let wins = (0..200u64)
        .filter(|&seed| {
            let db = random_database(n, k, seed).unwrap();
            partition_database(&db, eps, &solver, seed).unwrap().len() <= partition_greedy(&db, eps, seed).len()
        })
        .count();
    assert!(wins >= 190, "{wins}/200");
}
