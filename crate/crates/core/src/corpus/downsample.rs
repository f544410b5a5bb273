use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub fn class_counts<L: AsRef<str>>(labels: &[L]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for l in labels {
        *counts.entry(l.as_ref().to_string()).or_insert(0) += 1;
    }
    counts
}

/// Equalises class sizes: every class in `classes` keeps exactly as many
/// datapoints as the smallest one, chosen by seeded uniform sampling without
/// replacement. Datapoints whose label is not in `classes` are dropped.
/// Returns the kept indices in ascending order.
pub fn downsample<L: AsRef<str>>(labels: &[L], classes: &[String], seed: u64) -> Result<Vec<usize>> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    for (i, l) in labels.iter().enumerate() {
        if let Some(c) = classes.iter().position(|c| c == l.as_ref()) {
            members[c].push(i);
        }
    }
    if let Some(c) = members.iter().position(Vec::is_empty) {
        return Err(Error::EmptyClass(classes[c].clone()));
    }
    let target = members.iter().map(Vec::len).min().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::with_capacity(target * classes.len());
    for m in &members {
        let picks = index::sample(&mut rng, m.len(), target);
        kept.extend(picks.iter().map(|p| m[p]));
    }
    kept.sort_unstable();
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(counts: &[(&str, usize)]) -> Vec<String> {
        counts
            .iter()
            .flat_map(|&(c, n)| std::iter::repeat_n(c.to_string(), n))
            .collect()
    }

    fn classes(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn shrinks_to_min_class() {
        let l = labels(&[("A", 100), ("B", 40)]);
        let kept = downsample(&l, &classes(&["A", "B"]), 7).unwrap();
        let picked: Vec<&String> = kept.iter().map(|&i| &l[i]).collect();
        let counts = class_counts(&picked);
        assert_eq!(counts["A"], 40);
        assert_eq!(counts["B"], 40);
    }

    #[test]
    fn balanced_is_unchanged() {
        let l = labels(&[("A", 40), ("B", 40)]);
        let kept = downsample(&l, &classes(&["A", "B"]), 3).unwrap();
        assert_eq!(kept, (0..80).collect::<Vec<_>>());
    }

    #[test]
    fn seven_classes_min_391() {
        let counts: Vec<(&str, usize)> = vec![
            ("S", 9000),
            ("Q", 800),
            ("B", 2000),
            ("I", 391),
            ("A", 700),
            ("P", 450),
            ("O", 1500),
        ];
        let l = labels(&counts);
        let names: Vec<&str> = counts.iter().map(|c| c.0).collect();
        let kept = downsample(&l, &classes(&names), 11).unwrap();
        assert_eq!(kept.len(), 2737);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let l = labels(&[("A", 500), ("B", 50)]);
        let c = classes(&["A", "B"]);
        assert_eq!(downsample(&l, &c, 1).unwrap(), downsample(&l, &c, 1).unwrap());
        assert_ne!(downsample(&l, &c, 1).unwrap(), downsample(&l, &c, 2).unwrap());
    }

    #[test]
    fn empty_class_is_error() {
        let l = labels(&[("A", 5)]);
        assert!(matches!(
            downsample(&l, &classes(&["A", "B"]), 0),
            Err(Error::EmptyClass(c)) if c == "B"
        ));
    }
}
