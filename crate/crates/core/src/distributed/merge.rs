//! Depth-merging of per-PE supersegment lists and recompositing the merged
//! stream back into at most `n_sup` supersegments.

use crate::vdi::{build_list, gamma_search, Sample, Supersegment};

/// k-way merge by `t_front`; ties go to the lower stream index.
///
/// Inputs must each be depth-sorted. Domains are disjoint, so streams should
/// not overlap; if one does (a clipped budget overflow can stretch a
/// supersegment), its front is moved to the previous back, and if that
/// empties it the whole supersegment is shifted back instead. Returns the
/// merged list and the number of overlaps repaired.
pub fn merge_streams(streams: &[&[Supersegment]]) -> (Vec<Supersegment>, usize) {
    let total = streams.iter().map(|s| s.len()).sum();
    let mut heads = vec![0usize; streams.len()];
    let mut out: Vec<Supersegment> = Vec::with_capacity(total);
    let mut overlaps = 0;
    for _ in 0..total {
        let mut pick: Option<(usize, f32)> = None;
        for (s, stream) in streams.iter().enumerate() {
            if let Some(seg) = stream.get(heads[s]) {
                if pick.is_none_or(|(_, t)| seg.t_front < t) {
                    pick = Some((s, seg.t_front));
                }
            }
        }
        let s = pick.expect("heads remain while total not reached").0;
        let mut seg = streams[s][heads[s]];
        heads[s] += 1;
        if let Some(prev) = out.last() {
            if seg.t_front < prev.t_back {
                overlaps += 1;
                if seg.t_back > prev.t_back {
                    seg.t_front = prev.t_back;
                } else {
                    let len = seg.length();
                    seg.t_front = prev.t_back;
                    seg.t_back = prev.t_back + len;
                }
            }
        }
        out.push(seg);
    }
    if overlaps > 0 {
        log::warn!("{overlaps} overlapping supersegments repaired while merging");
    }
    (out, overlaps)
}

/// Treats each supersegment of a merged stream as one sample weighted by
/// its length over `reference_length` and regroups with a fresh threshold
/// search. Whole supersegments are consumed; none is split.
pub fn recomposite_list(
    merged: &[Supersegment],
    n_sup: usize,
    max_iters: u32,
    reference_length: f64,
) -> Vec<Supersegment> {
    if merged.len() <= n_sup {
        return merged.to_vec();
    }
    let samples: Vec<Sample> = merged
        .iter()
        .map(|s| Sample {
            t_front: s.t_front,
            t_back: s.t_back,
            rgba: s.rgba,
            weight: (s.length() as f64 / reference_length) as f32,
        })
        .collect();
    let gamma = gamma_search(&samples, n_sup, max_iters);
    build_list(&samples, gamma, n_sup).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vdi::segment::accumulate;
    use rand::{Rng, SeedableRng};

    fn seg(a: f32, b: f32, alpha: f32) -> Supersegment {
        Supersegment { t_front: a, t_back: b, rgba: [alpha * 0.5, alpha * 0.2, alpha, alpha] }
    }

    /// Disjoint segments on a line dealt round-robin-ish to `k` streams.
    fn random_streams(rng: &mut impl Rng, k: usize) -> Vec<Vec<Supersegment>> {
        let mut streams = vec![Vec::new(); k];
        let mut t = 0.0f32;
        for _ in 0..rng.random_range(0..30) {
            t += rng.random_range(0.0..1.0);
            let len = rng.random_range(0.05..2.0);
            streams[rng.random_range(0..k)].push(seg(t, t + len, rng.random_range(0.01..0.9)));
            t += len;
        }
        streams
    }

    #[test]
    fn merge_matches_stable_sort() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let k = rng.random_range(1..9);
            let streams = random_streams(&mut rng, k);
            let refs: Vec<&[Supersegment]> = streams.iter().map(Vec::as_slice).collect();
            let (got, overlaps) = merge_streams(&refs);
            assert_eq!(overlaps, 0);
            let mut oracle: Vec<(f32, usize, Supersegment)> =
                streams.iter().enumerate().flat_map(|(s, l)| l.iter().map(move |x| (x.t_front, s, *x))).collect();
            oracle.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            assert_eq!(got, oracle.into_iter().map(|x| x.2).collect::<Vec<_>>());
        }
    }

    #[test]
    fn ties_go_to_lower_stream() {
        let a = [seg(1.0, 1.0 + 1e-7, 0.1)];
        let b = [seg(1.0, 2.0, 0.2)];
        let (m, _) = merge_streams(&[&b, &a]);
        assert_eq!(m[0], b[0]);
    }

    #[test]
    fn overlap_is_truncated() {
        let a = [seg(0.0, 2.0, 0.1)];
        let b = [seg(1.0, 3.0, 0.2)];
        let (m, n) = merge_streams(&[&a, &b]);
        assert_eq!(n, 1);
        assert_eq!((m[1].t_front, m[1].t_back), (2.0, 3.0));
        let c = [seg(0.5, 1.5, 0.3)];
        let (m, n) = merge_streams(&[&a, &c]);
        assert_eq!(n, 1);
        assert_eq!((m[1].t_front, m[1].t_back), (2.0, 3.0));
    }

    #[test]
    fn recomposite_keeps_short_lists() {
        let l = [seg(0.0, 1.0, 0.5), seg(2.0, 3.0, 0.5)];
        assert_eq!(recomposite_list(&l, 4, 16, 1.0), l.to_vec());
    }

    #[test]
    fn recomposite_fits_budget_and_preserves_colour() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            // contiguous runs so every budget is reachable
            let mut t = 0.0;
            let merged: Vec<_> = (0..rng.random_range(5..40))
                .map(|_| {
                    let len = rng.random_range(0.1..1.0);
                    let s = seg(t, t + len, rng.random_range(0.01..0.5));
                    t += len;
                    s
                })
                .collect();
            let n_sup = rng.random_range(1..6);
            let out = recomposite_list(&merged, n_sup, 16, 0.25);
            assert!(out.len() <= n_sup);
            assert!(out.windows(2).all(|w| w[0].t_back <= w[1].t_front));
            let a = accumulate(merged.iter().map(|s| &s.rgba));
            let b = accumulate(out.iter().map(|s| &s.rgba));
            for c in 0..4 {
                assert!((a[c] - b[c]).abs() < 1e-5, "{a:?} {b:?}");
            }
        }
    }
}
