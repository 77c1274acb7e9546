use toric_spin7::diagonal::{classify_case, permutations4, Case, DependencePattern};

fn all_patterns() -> impl Iterator<Item = DependencePattern> {
    let slots: Vec<(usize, usize)> = (0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    (0u32..1 << 12).map(move |bits| {
        let mut d = [[false; 4]; 4];
        for (k, &(i, j)) in slots.iter().enumerate() {
            d[i][j] = bits >> k & 1 == 1;
        }
        DependencePattern { d }
    })
}

fn has_mutual_pair(p: &DependencePattern) -> bool {
    (0..4).any(|i| (0..4).any(|j| i != j && p.d[i][j] && p.d[j][i]))
}

#[test]
fn inconsistent_exactly_when_mutual() {
    let mut consistent = 0;
    for p in all_patterns() {
        let c = classify_case(&p);
        assert_eq!(c.case == Case::Inconsistent, has_mutual_pair(&p), "{p:?}");
        if c.case != Case::Inconsistent {
            consistent += 1;
            assert!(c.permutation.is_some());
        }
    }
    // each unordered pair is absent, one way or the other way
    assert_eq!(consistent, 3usize.pow(6));
}

#[test]
fn reducible_flag_tracks_constant_entries() {
    for p in all_patterns() {
        let c = classify_case(&p);
        assert_eq!(c.reducible, (0..4).any(|i| p.is_constant(i)));
        if c.reducible && c.case != Case::Inconsistent {
            assert!(matches!(c.case, Case::R32 | Case::R23), "{p:?} -> {:?}", c.case);
        }
    }
}

#[test]
fn relabeling_does_not_change_the_case() {
    let perms = permutations4();
    for (n, p) in all_patterns().enumerate().filter(|(n, _)| n % 7 == 0) {
        let c = classify_case(&p);
        let sigma = perms[n % perms.len()];
        assert_eq!(classify_case(&p.permute(sigma)).case, c.case);
    }
}

#[test]
fn four_cycle_is_r22() {
    let p = DependencePattern::from_lists([&[1], &[2], &[3], &[0]]);
    assert_eq!(classify_case(&p).case, Case::R22);
    let p = DependencePattern::from_lists([&[1, 2, 3], &[2], &[3], &[1]]);
    assert_eq!(classify_case(&p).case, Case::R31);
}
