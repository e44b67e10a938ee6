mod common;

use common::{instance, random_db, random_specs};
use mddmine::constraints::{check_all, check_occurrence, support_of};
use mddmine::mdd::{build_mdd, validate};
use mddmine::oracle::mine_bruteforce;
use mddmine::seqdb::{attach_attributes, items_at_position, parse_spmf, to_spmf, AttributeTable};
use mddmine::{ConstraintPlan, Event, PatternSet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Running statistics decide every constraint exactly like direct
    /// evaluation on the occurrence.
    #[test]
    fn stats_agree_with_direct_evaluation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let db = random_db(&mut rng, (1, 6), (1, 8));
        let specs = random_specs(&mut rng, &db, (1, 5));
        let plan = ConstraintPlan::new(&specs, &db);
        for seq in db.sequences() {
            for mask in 1u32..(1 << seq.len()) {
                let occ: Vec<&Event> =
                    seq.events.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, e)| e).collect();
                let stats = plan.stats_of(seq.sid, &occ);
                // gap and item-set rules are enforced on arcs, not by the plan
                let others: Vec<_> = specs.iter().filter(|s| !mddmine::constraints::is_pairwise(*s)).cloned().collect();
                let mut counter = 0;
                prop_assert_eq!(plan.satisfied(&stats.values, stats.len, &mut counter), check_all(&occ, &others).unwrap());
            }
        }
    }

    #[test]
    fn spmf_and_attribute_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let db = random_db(&mut rng, (1, 10), (1, 8));
        let items = parse_spmf(&to_spmf(&db)).unwrap();
        let table = AttributeTable::parse_tsv(&AttributeTable::from_database(&db).to_tsv()).unwrap();
        let back = attach_attributes(items, &table, None).unwrap();
        prop_assert_eq!(back.sequences(), db.sequences());
    }

    #[test]
    fn layers_and_replay(seed in any::<u64>()) {
        let inst = instance(seed);
        let plain = build_mdd(&inst.db, &[]);
        for j in 1..=plain.n_layers() {
            prop_assert_eq!(plain.layer(j).len(), items_at_position(&inst.db, j).len());
        }
        let rep = validate(&plain, &inst.db).unwrap();
        prop_assert_eq!(rep.reconstructed, inst.db.len());
        validate(&build_mdd(&inst.db, &inst.specs), &inst.db).unwrap();
    }

    /// Without constraints support can only drop when a pattern grows.
    #[test]
    fn support_is_anti_monotone(seed in any::<u64>()) {
        let inst = instance(seed);
        let all = mine_bruteforce(&inst.db, &[], 1, Some(4)).unwrap();
        for (p, sup) in all.iter() {
            if p.len() > 1 {
                prop_assert!(all.support(&p[..p.len() - 1]).unwrap() >= sup);
                prop_assert!(all.support(&p[1..]).unwrap() >= sup);
            }
        }
    }

    /// Constrained support equals filtering unconstrained embeddings with
    /// direct constraint evaluation.
    #[test]
    fn constrained_support_is_existential(seed in any::<u64>()) {
        let inst = instance(seed);
        let all = mine_bruteforce(&inst.db, &[], 1, Some(4)).unwrap();
        let filtered: PatternSet = all
            .iter()
            .filter_map(|(p, _)| {
                let sup = inst.db.sequences().iter().filter(|s| embeds(p, &s.events, &inst.specs)).count();
                (sup >= inst.theta).then(|| (p.to_vec(), sup))
            })
            .collect();
        prop_assert_eq!(mine_bruteforce(&inst.db, &inst.specs, inst.theta, Some(4)).unwrap(), filtered);
    }
}

fn embeds(pattern: &[u32], events: &[Event], specs: &[mddmine::ResolvedSpec]) -> bool {
    (1u32..(1 << events.len())).any(|mask| {
        let occ: Vec<&Event> = events.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, e)| e).collect();
        occ.len() == pattern.len()
            && occ.iter().zip(pattern).all(|(e, &i)| e.item == i)
            && specs.iter().all(|s| check_occurrence(&occ, s).unwrap())
    })
}

#[test]
fn support_of_sample() {
    let db = mddmine::seqdb::sample_database();
    assert_eq!(support_of(&[2, 2], &db, &[]), 2);
}
