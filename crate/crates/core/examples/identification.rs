//! Learns a target from one detection, then picks it out of a crowd by face
//! and, with the face hidden, by clothes colour. Ends with a belief-grid update.

use activefollow::geometry::Point2;
use activefollow::identity::{identify, learn_target, similarity, update_belief, BeliefGrid, HumanCandidate, IdentityConfig, ViewCone};
use activefollow::world::{hue_histogram, FaceObservation, OccupancyGrid, PersonDetection};

fn detection(at: Point2, face: Option<&str>, hue: usize) -> PersonDetection {
    PersonDetection {
        person_position: at,
        face: face.map(|label| FaceObservation { label: label.into(), confidence: 0.93 }),
        clothes_histogram: hue_histogram(16, hue, 1.0),
        distance: at.norm(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = IdentityConfig::default();
    let model = learn_target(&detection(Point2::new(1.0, 0.0), Some("alice"), 2), cfg.critical_similarity)?;

    let crowd = [
        detection(Point2::new(2.0, 1.0), Some("bob"), 10),
        detection(Point2::new(2.5, -0.5), Some("alice"), 2),
        detection(Point2::new(3.0, 0.2), None, 3),
    ];
    let mut candidates: Vec<HumanCandidate> =
        crowd.iter().enumerate().map(|(i, d)| HumanCandidate::from_detection(d, Some(i as u64))).collect();
    let hit = identify(&candidates, &model, &cfg).expect("alice is visible");
    println!("face match: candidate {} at ({:.1}, {:.1}), score {:.2}", hit.candidate, hit.position.x, hit.position.y, hit.score);

    candidates[1].face_evidence = None;
    for (i, c) in candidates.iter().enumerate() {
        let s = similarity(c.clothes_histogram.as_ref().expect("vision"), &model.clothes_template)?;
        println!("  candidate {i}: clothes similarity {s:.3}");
    }
    let hit = identify(&candidates, &model, &cfg).expect("clothes still match");
    println!("clothes match: candidate {} ({:?})", hit.candidate, hit.by);

    let shape = OccupancyGrid::filled(Point2::new(-1.0, -3.0), 0.25, 24, 24, 0.1);
    let cone = ViewCone { apex: Point2::ORIGIN, direction: 0.0, half_angle: 0.5, range: 4.0 };
    let mut belief = BeliefGrid::like(&shape);
    belief = update_belief(&belief, &[hit.position], &cone, Some(&shape), &cfg);
    let (peak, p) = belief.argmax(Point2::ORIGIN).expect("non-empty");
    println!("belief peak {p:.3} at ({:.2}, {:.2})", peak.x, peak.y);
    belief = update_belief(&belief, &[], &cone, Some(&shape), &cfg);
    println!("after an empty look: peak {:.3}", belief.max());
    Ok(())
}
