use activefollow::geometry::Point2;
use activefollow::identity::{
    identify, similarity, update_belief, BeliefGrid, CandidateSource, HumanCandidate, IdentifiedBy, IdentityConfig,
    TargetModel, ViewCone,
};
use activefollow::world::{FaceObservation, OccupancyGrid};
use proptest::prelude::*;

fn histogram(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter_map("positive mass", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-3).then(|| v.into_iter().map(|x| x / s).collect())
    })
}

fn model() -> TargetModel {
    let mut t = vec![0.0; 8];
    t[2] = 0.5;
    t[3] = 0.5;
    TargetModel { face_id: "target".into(), clothes_template: t, critical_similarity: 0.8 }
}

fn vision(x: f64, face: Option<(&str, f64)>, clothes: Option<Vec<f64>>, track: Option<u64>) -> HumanCandidate {
    HumanCandidate {
        position: Point2::new(x, 0.0),
        source: CandidateSource::Vision,
        face_evidence: face.map(|(l, c)| FaceObservation { label: l.into(), confidence: c }),
        clothes_histogram: clothes,
        track_id: track,
    }
}

proptest! {
    #[test]
    fn similarity_is_a_bounded_symmetric_overlap(a in histogram(8), b in histogram(8)) {
        let s = similarity(&a, &b).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s));
        prop_assert!((s - similarity(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((similarity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        // the overlap equals 1 − half the L1 distance for normalized inputs
        let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        prop_assert!((s - (1.0 - 0.5 * l1)).abs() < 1e-9);
    }

    #[test]
    fn identified_candidate_passes_every_gate(
        faces in prop::collection::vec(prop::option::of((prop::bool::ANY, 0.0f64..1.0)), 1..6),
        clothes in prop::collection::vec(prop::option::of(histogram(8)), 1..6),
        tracked in prop::collection::vec(prop::bool::ANY, 1..6),
    ) {
        let n = faces.len().min(clothes.len()).min(tracked.len());
        let cands: Vec<HumanCandidate> = (0..n)
            .map(|i| {
                let face = faces[i].map(|(mine, c)| (if mine { "target" } else { "other" }, c));
                vision(3.0 * i as f64, face, clothes[i].clone(), tracked[i].then_some(i as u64))
            })
            .collect();
        let cfg = IdentityConfig::default();
        let m = model();
        match identify(&cands, &m, &cfg) {
            Some(hit) => {
                let c = &cands[hit.candidate];
                prop_assert!(c.track_id.is_some());
                match hit.by {
                    IdentifiedBy::Face => {
                        let f = c.face_evidence.as_ref().unwrap();
                        prop_assert_eq!(f.label.as_str(), "target");
                        prop_assert!(f.confidence >= cfg.face_threshold);
                    }
                    IdentifiedBy::Clothes => {
                        let s = similarity(c.clothes_histogram.as_ref().unwrap(), &m.clothes_template).unwrap();
                        prop_assert!(s >= m.critical_similarity);
                        // no corroborated candidate had a qualifying face
                        prop_assert!(!cands.iter().any(|o| o.track_id.is_some()
                            && o.face_evidence.as_ref().is_some_and(|f| f.label == "target" && f.confidence >= cfg.face_threshold)));
                    }
                }
            }
            None => {
                for c in cands.iter().filter(|c| c.track_id.is_some()) {
                    if let Some(f) = &c.face_evidence {
                        prop_assert!(!(f.label == "target" && f.confidence >= cfg.face_threshold));
                    }
                    if let Some(h) = &c.clothes_histogram {
                        prop_assert!(similarity(h, &m.clothes_template).unwrap() < m.critical_similarity);
                    }
                }
            }
        }
    }

    #[test]
    fn belief_outside_the_view_is_untouched(
        ax in 0.5f64..5.5,
        ay in 0.5f64..5.5,
        dir in -3.1f64..3.1,
        half in 0.1f64..1.2,
        range in 0.5f64..4.0,
        det in prop::option::of((0.0f64..6.0, 0.0f64..6.0)),
    ) {
        let shape = OccupancyGrid::new(Point2::ORIGIN, 0.2, 30, 30);
        let mut prior = BeliefGrid::like(&shape);
        for i in 0..shape.len() {
            prior.set(shape.cell_at_index(i), 0.05 + 0.9 * ((i * 37) % 101) as f64 / 101.0);
        }
        let cone = ViewCone { apex: Point2::new(ax, ay), direction: dir, half_angle: half, range };
        let dets: Vec<Point2> = det.map(|(x, y)| Point2::new(x, y)).into_iter().collect();
        let post = update_belief(&prior, &dets, &cone, None, &IdentityConfig::default());
        for i in 0..shape.len() {
            let c = shape.cell_at_index(i);
            let center = shape.cell_center(c);
            let seen = cone.contains(center) || dets.iter().any(|d| shape.cell_of(*d) == c && cone.contains(*d));
            if !seen {
                prop_assert_eq!(post.get(c), prior.get(c));
            }
            let p = post.get(c).unwrap();
            prop_assert!(p.is_finite() && (0.0..=1.0).contains(&p));
        }
    }
}

#[test]
fn empty_sweeps_decay_to_the_floor() {
    let shape = OccupancyGrid::new(Point2::ORIGIN, 0.2, 20, 20);
    let cfg = IdentityConfig::default();
    let cone = ViewCone { apex: Point2::new(0.1, 2.0), direction: 0.0, half_angle: 0.6, range: 3.0 };
    let probe = shape.cell_of(Point2::new(2.0, 2.0));
    let mut b = BeliefGrid::like(&shape);
    let mut last = b.get(probe).unwrap();
    for _ in 0..30 {
        b = update_belief(&b, &[], &cone, None, &cfg);
        let now = b.get(probe).unwrap();
        assert!(now <= last);
        last = now;
    }
    assert!((last - cfg.belief_min).abs() < 1e-12);
}

#[test]
fn repeated_detection_saturates_at_the_ceiling() {
    let shape = OccupancyGrid::new(Point2::ORIGIN, 0.2, 20, 20);
    let cfg = IdentityConfig::default();
    let cone = ViewCone { apex: Point2::new(0.1, 2.0), direction: 0.0, half_angle: 0.6, range: 3.0 };
    let target = Point2::new(2.1, 2.1);
    let mut b = BeliefGrid::like(&shape);
    for _ in 0..10 {
        b = update_belief(&b, &[target], &cone, None, &cfg);
    }
    assert!((b.get(shape.cell_of(target)).unwrap() - cfg.belief_max).abs() < 1e-12);
    let (peak, _) = b.argmax(Point2::ORIGIN).unwrap();
    assert!(peak.distance(target) <= cfg.r_person + 0.15);
}

#[test]
fn wrong_face_does_not_block_clothes_match() {
    let mut h = vec![0.0; 8];
    h[2] = 0.45;
    h[3] = 0.55;
    let cands = vec![
        vision(0.0, Some(("other", 0.99)), Some(vec![0.125; 8]), Some(1)),
        vision(2.0, None, Some(h), Some(2)),
    ];
    let hit = identify(&cands, &model(), &IdentityConfig::default()).unwrap();
    assert_eq!(hit.candidate, 1);
    assert_eq!(hit.by, IdentifiedBy::Clothes);
}
