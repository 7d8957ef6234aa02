use proptest::prelude::*;

use clep::data::{make_pair_batches, pair_label, split_train_test};
use clep::{Preference, PreferenceSet, Strategy};

fn prefs_from(labels: &[bool]) -> PreferenceSet {
    let mut p = PreferenceSet::new("u");
    for (i, &like) in labels.iter().enumerate() {
        p.insert(
            format!("s{i:03}"),
            if like {
                Preference::Like
            } else {
                Preference::Dislike
            },
        )
        .unwrap();
    }
    p
}

#[test]
fn split_is_stratified_three_to_one() {
    let labels: Vec<bool> = (0..200).map(|i| i < 98).collect();
    let prefs = prefs_from(&labels);
    let s = split_train_test(&prefs, 9).unwrap();
    assert_eq!((s.train_ids.len(), s.test_ids.len()), (151, 49));
    let train_likes = s
        .train_ids
        .iter()
        .filter(|id| prefs.get(id) == Some(Preference::Like))
        .count();
    assert_eq!(train_likes, 74);
    assert!(s.train_ids.iter().all(|id| !s.test_ids.contains(id)));
}

proptest! {
    #[test]
    fn pn_positives_are_the_union_of_p_and_n(
        labels in prop::collection::vec(any::<bool>(), 2..60),
        batch in 2usize..20,
        seed in any::<u64>(),
    ) {
        let prefs = prefs_from(&labels);
        let ids: Vec<&str> = prefs.ids().collect();
        let positives = |s| {
            make_pair_batches(&ids, &prefs, s, batch, seed, 0)
                .unwrap()
                .iter()
                .flat_map(|b| b.labeled_pairs())
                .filter(|p| p.y == 1)
                .map(|p| (p.left, p.right))
                .collect::<std::collections::BTreeSet<_>>()
        };
        let (pn, p, n) = (positives(Strategy::PN), positives(Strategy::P), positives(Strategy::N));
        prop_assert!(p.is_disjoint(&n));
        prop_assert_eq!(pn, p.union(&n).cloned().collect());
    }
}

#[test]
fn pair_labels_by_strategy() {
    use Preference::{Dislike as D, Like as L};
    assert_eq!(
        [
            pair_label(L, L, Strategy::PN),
            pair_label(D, D, Strategy::PN),
            pair_label(L, D, Strategy::PN)
        ],
        [1, 1, 0]
    );
    assert_eq!(
        [pair_label(L, L, Strategy::P), pair_label(D, D, Strategy::P)],
        [1, 0]
    );
    assert_eq!(
        [pair_label(L, L, Strategy::N), pair_label(D, D, Strategy::N)],
        [0, 1]
    );
}
