//! Dialogue/narration segmentation, timing labels and instance extraction.

use super::{
    Episode, NarrationInstance, Segment, SegmentKind, Speaker, TimingLabelSeq,
};

fn kind_of(speaker: Speaker) -> SegmentKind {
    match speaker {
        Speaker::Dialogue => SegmentKind::Dialogue,
        Speaker::Narrator => SegmentKind::Narration,
    }
}

/// Splits an episode at every dialogue/narration boundary. Maximal runs of
/// equal speaker become segments; the segments tile the token sequence.
pub fn segment_dn(episode: &Episode) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut start = 0;
    for i in 1..=episode.tokens.len() {
        let boundary = i == episode.tokens.len()
            || episode.tokens[i].speaker != episode.tokens[start].speaker;
        if boundary {
            segments.push(Segment {
                kind: kind_of(episode.tokens[start].speaker),
                start,
                end: i,
            });
            start = i;
        }
    }
    segments
}

/// Labels each token with 1 iff at least one narrator token occurs in the
/// window of `n` tokens right after it. The window truncates at the episode
/// end, so the last token is always labeled 0.
pub fn label_timing(episode: &Episode, n: usize) -> TimingLabelSeq {
    assert!(n >= 1, "window size must be at least 1");
    let len = episode.tokens.len();
    let mut labels = vec![0u8; len];
    // Reverse scan; `next` is the index of the nearest narrator token after i.
    let mut next = len;
    for i in (0..len).rev() {
        labels[i] = u8::from(next < len && next <= i + n);
        if episode.tokens[i].speaker == Speaker::Narrator {
            next = i;
        }
    }
    TimingLabelSeq {
        window_n: n,
        labels,
    }
}

/// One instance per narration segment, with the adjacent dialogue segments as
/// context (empty when the narration opens or closes the episode).
pub fn extract_instances(episode: &Episode) -> Vec<NarrationInstance> {
    let segments = segment_dn(episode);
    let mut instances = Vec::new();
    let mut narration_idx = 0;
    for (s, seg) in segments.iter().enumerate() {
        if seg.kind != SegmentKind::Narration {
            continue;
        }
        let slice = |seg: &Segment| episode.tokens[seg.start..seg.end].to_vec();
        let prev_dialogue = if s > 0 { slice(&segments[s - 1]) } else { Vec::new() };
        let next_dialogue = if s + 1 < segments.len() {
            slice(&segments[s + 1])
        } else {
            Vec::new()
        };
        instances.push(NarrationInstance {
            id: format!("{}#{}", episode.episode_id, narration_idx),
            prev_dialogue,
            narration: slice(seg),
            next_dialogue,
        });
        narration_idx += 1;
    }
    instances
}

/// Brute-force reference for [`label_timing`]: scans the window explicitly.
/// Kept public for the acceptance suite; must stay independent of the
/// implementation above.
pub fn label_timing_brute_force(speakers: &[Speaker], n: usize) -> Vec<u8> {
    (0..speakers.len())
        .map(|i| {
            let window = &speakers[(i + 1).min(speakers.len())..(i + 1 + n).min(speakers.len())];
            u8::from(window.contains(&Speaker::Narrator))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn run_length_segments() {
        let ep = episode_from_speakers("e", &speakers("DDNND"));
        let segs = segment_dn(&ep);
        assert_eq!(
            segs,
            vec![
                Segment { kind: SegmentKind::Dialogue, start: 0, end: 2 },
                Segment { kind: SegmentKind::Narration, start: 2, end: 4 },
                Segment { kind: SegmentKind::Dialogue, start: 4, end: 5 },
            ]
        );
    }

    #[test]
    fn all_dialogue_single_segment() {
        let ep = episode_from_speakers("e", &speakers("DDDD"));
        let segs = segment_dn(&ep);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].kind, SegmentKind::Dialogue);
        assert_eq!((segs[0].start, segs[0].end), (0, 4));
    }

    /// Excerpt with six dialogue tokens followed by narration: the D/N
    /// boundary falls exactly after the sixth token.
    #[test]
    fn boundary_after_final_dialogue_token() {
        let ep = episode_from_speakers("e", &speakers("DDDDDDNNN"));
        let segs = segment_dn(&ep);
        assert_eq!(segs[0].end, 6);
        assert_eq!(segs[1].kind, SegmentKind::Narration);
        assert_eq!(segs[1].start, 6);
    }

    #[test]
    fn segments_tile_episode() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let len = rng.gen_range(1..30);
            let pattern: Vec<Speaker> = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        Speaker::Dialogue
                    } else {
                        Speaker::Narrator
                    }
                })
                .collect();
            let ep = episode_from_speakers("e", &pattern);
            let segs = segment_dn(&ep);
            let mut cursor = 0;
            for (i, s) in segs.iter().enumerate() {
                assert_eq!(s.start, cursor);
                assert!(s.end > s.start);
                if i > 0 {
                    assert_ne!(segs[i - 1].kind, s.kind);
                }
                for t in &ep.tokens[s.start..s.end] {
                    assert_eq!(kind_of(t.speaker), s.kind);
                }
                cursor = s.end;
            }
            assert_eq!(cursor, len);
        }
    }

    /// Token/label rows for the worked excerpt "puddles, you must wear your
    /// boots. | Peppa ... brother, George" (six dialogue tokens, three
    /// narrator tokens).
    #[test]
    fn timing_labels_on_worked_excerpt() {
        let ep = episode_from_speakers("e", &speakers("DDDDDDNNN"));
        let at1 = label_timing(&ep, 1);
        assert_eq!(at1.labels, vec![0, 0, 0, 0, 0, 1, 1, 1, 0]);
        let at5 = label_timing(&ep, 5);
        assert_eq!(at5.labels, vec![0, 1, 1, 1, 1, 1, 1, 1, 0]);
    }

    #[test]
    fn all_dialogue_all_zero() {
        let ep = episode_from_speakers("e", &speakers("DDDDDD"));
        for n in [1, 3, 5] {
            assert!(label_timing(&ep, n).labels.iter().all(|&l| l == 0));
        }
    }

    #[test]
    fn labeler_matches_brute_force_on_random_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let len = rng.gen_range(1..25);
            let pattern: Vec<Speaker> = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.6) {
                        Speaker::Dialogue
                    } else {
                        Speaker::Narrator
                    }
                })
                .collect();
            let n = rng.gen_range(1..8);
            let ep = episode_from_speakers("e", &pattern);
            assert_eq!(label_timing(&ep, n).labels, label_timing_brute_force(&pattern, n));
        }
    }

    #[test]
    fn monotone_in_window_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let len = rng.gen_range(1..20);
            let pattern: Vec<Speaker> = (0..len)
                .map(|_| if rng.gen_bool(0.5) { Speaker::Dialogue } else { Speaker::Narrator })
                .collect();
            let ep = episode_from_speakers("e", &pattern);
            let l1 = label_timing(&ep, 1).labels;
            let l5 = label_timing(&ep, 5).labels;
            for i in 0..len {
                assert!(l1[i] <= l5[i]);
            }
            assert_eq!(l1[len - 1], 0);
            assert_eq!(l5[len - 1], 0);
        }
    }

    #[test]
    fn dnd_pattern_yields_one_instance() {
        let ep = episode_from_speakers("e", &speakers("DDNND"));
        let instances = extract_instances(&ep);
        assert_eq!(instances.len(), 1);
        assert_eq!(instances[0].prev_dialogue.len(), 2);
        assert_eq!(instances[0].narration.len(), 2);
        assert_eq!(instances[0].next_dialogue.len(), 1);
    }

    #[test]
    fn narration_at_boundaries_has_empty_context() {
        let ep = episode_from_speakers("e", &speakers("NDN"));
        let instances = extract_instances(&ep);
        assert_eq!(instances.len(), 2);
        assert!(instances[0].prev_dialogue.is_empty());
        assert!(!instances[0].next_dialogue.is_empty());
        assert!(!instances[1].prev_dialogue.is_empty());
        assert!(instances[1].next_dialogue.is_empty());
        assert_eq!(instances[0].id, "e#0");
        assert_eq!(instances[1].id, "e#1");
    }

    #[test]
    fn instance_count_equals_narration_segment_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let len = rng.gen_range(1..40);
            let pattern: Vec<Speaker> = (0..len)
                .map(|_| if rng.gen_bool(0.5) { Speaker::Dialogue } else { Speaker::Narrator })
                .collect();
            let ep = episode_from_speakers("e", &pattern);
            let narration_segments = segment_dn(&ep)
                .iter()
                .filter(|s| s.kind == SegmentKind::Narration)
                .count();
            assert_eq!(extract_instances(&ep).len(), narration_segments);
        }
    }
}
