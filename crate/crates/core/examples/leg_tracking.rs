//! Two people cross paths in front of the laser. Noisy leg candidates feed a
//! constant-velocity Kalman tracker; confirmed legs are paired into persons.

use activefollow::geometry::Point2;
use activefollow::tracking::{pair_legs, Tracker, TrackerConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.02).expect("sigma");
    let mut tracker = Tracker::new(TrackerConfig::default());
    let dt = 0.1;
    for k in 0..40 {
        let t = k as f64 * dt;
        let people = [Point2::new(0.5 + 0.5 * t, 2.0), Point2::new(2.5 - 0.4 * t, 1.4 + 0.1 * t)];
        let mut legs = Vec::new();
        for p in people {
            for side in [-0.1, 0.1] {
                legs.push(Point2::new(p.x + noise.sample(&mut rng), p.y + side + noise.sample(&mut rng)));
            }
        }
        tracker.step(&legs, dt);
        if k % 10 == 9 {
            println!("t={t:.1}s");
            for person in pair_legs(tracker.tracks(), 0.5) {
                println!(
                    "  person {:2} legs {:?} at ({:.2}, {:.2}) moving ({:+.2}, {:+.2}) m/s",
                    person.id(),
                    person.track_ids,
                    person.position.x,
                    person.position.y,
                    person.velocity.x,
                    person.velocity.y
                );
            }
        }
    }
}
