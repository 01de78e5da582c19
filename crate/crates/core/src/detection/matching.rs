use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{dist2, Point};

/// Largest event count handled by exhaustive permutation search.
pub const MAX_EXHAUSTIVE_EVENTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEstimate {
    pub centroids: Vec<Point>,
    /// `pairing[i]` is the centroid matched to true event `i`.
    pub pairing: Vec<usize>,
    pub rmsd: f64,
}

/// Pairs true events with centroids so the mean squared distance is minimal.
pub fn match_events(true_events: &[Point], centroids: &[Point]) -> Result<EventEstimate> {
    let e = true_events.len();
    if centroids.len() != e {
        return Err(Error::DimensionMismatch(format!(
            "{} true events but {} centroids",
            e,
            centroids.len()
        )));
    }
    if e > MAX_EXHAUSTIVE_EVENTS {
        return Err(Error::Config(format!(
            "event pairing supports at most {MAX_EXHAUSTIVE_EVENTS} events, got {e}"
        )));
    }
    if e == 0 {
        return Ok(EventEstimate {
            centroids: Vec::new(),
            pairing: Vec::new(),
            rmsd: 0.0,
        });
    }
    let mut best = (f64::INFINITY, Vec::new());
    for perm in (0..e).permutations(e) {
        let cost: f64 = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| dist2(&true_events[i], &centroids[j]))
            .sum();
        if cost < best.0 {
            best = (cost, perm);
        }
    }
    Ok(EventEstimate {
        centroids: centroids.to_vec(),
        pairing: best.1,
        rmsd: (best.0 / e as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_permuted() {
        let e = vec![[0.1, 0.2], [0.7, 0.3], [0.4, 0.9]];
        let m = match_events(&e, &e).unwrap();
        assert_eq!(m.rmsd, 0.0);
        assert_eq!(m.pairing, vec![0, 1, 2]);
        let p = vec![e[2], e[0], e[1]];
        let m = match_events(&e, &p).unwrap();
        assert_eq!(m.rmsd, 0.0);
        assert_eq!(m.pairing, vec![1, 2, 0]);
    }

    #[test]
    fn two_event_example() {
        let e = vec![[0.0, 0.0], [1.0, 1.0]];
        let c = vec![[0.1, 0.0], [1.0, 0.9]];
        let m = match_events(&e, &c).unwrap();
        assert_eq!(m.pairing, vec![0, 1]);
        assert!((m.rmsd - 0.1).abs() < 1e-12);
    }

    #[test]
    fn mismatched_counts() {
        assert!(match_events(&[[0.0, 0.0]], &[]).is_err());
        let many = vec![[0.0, 0.0]; 9];
        assert!(match_events(&many, &many).is_err());
    }
}
