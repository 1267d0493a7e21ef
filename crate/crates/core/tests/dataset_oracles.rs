use std::io::Cursor;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wgan_rrt::dataset::{
    build_example, collect_demo, generate_dataset, generate_scene, read_dataset, write_dataset, DatasetConfig,
    DemoConfig, QuerySpec, RobotSpec, SceneSpec, SkipReason,
};
use wgan_rrt::workspace::{Bounds, Config, Obstacle, RobotModel, Scene};
use wgan_rrt::Error;

fn small_config() -> DatasetConfig {
    DatasetConfig {
        scenes: 4,
        pairs_per_scene: 3,
        scene: SceneSpec::clutter(RobotSpec::Point).unwrap(),
        demo: DemoConfig { iterations: 3000, ..DemoConfig::default() },
        seed: 11,
        ..DatasetConfig::default()
    }
}

#[test]
fn obstacle_counts_cover_the_range_uniformly() {
    let spec = SceneSpec::clutter(RobotSpec::Point).unwrap();
    let (lo, hi) = spec.obstacle_count;
    let k = hi - lo + 1;
    let mut counts = vec![0usize; k];
    for seed in 0..1000 {
        let n = generate_scene(seed, &spec).unwrap().obstacles().len();
        counts[n - lo] += 1;
    }
    let expected = 1000.0 / k as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // Critical value of χ² with 6 degrees of freedom at p = 0.01.
    assert_eq!(k, 7);
    assert!(chi2 < 16.812, "χ² = {chi2}, counts {counts:?}");
}

#[test]
fn empty_scene_demo_is_nearly_straight() {
    let scene = Scene::empty(RobotModel::Point);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (s, g) in [([0.1, 0.1], [0.9, 0.8]), ([0.2, 0.7], [0.75, 0.3]), ([0.5, 0.05], [0.5, 0.95])] {
        let (s, g) = (Config::new(s.to_vec()).unwrap(), Config::new(g.to_vec()).unwrap());
        let path = collect_demo(&scene, &s, &g, &DemoConfig::default(), &mut rng).unwrap().unwrap();
        let len: f64 = path.windows(2).map(|w| w[0].distance(&w[1])).sum();
        assert!(len <= 1.05 * s.distance(&g), "{len} vs {}", s.distance(&g));
        assert!(path.windows(2).all(|w| w[0].distance(&w[1]) <= 0.02 + 1e-12));
    }
}

#[test]
fn blocked_query_is_skipped_not_fatal() {
    let wall = Scene::new(Bounds::unit(), vec![Obstacle::rect([0.45, 0.0], [0.55, 1.0]).unwrap()], RobotModel::Point).unwrap();
    let demo = DemoConfig { iterations: 2000, ..DemoConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let r = build_example(0, &wall, &QuerySpec::left_to_right(), &demo, &DatasetConfig::default().clustering, &mut rng).unwrap();
    assert_eq!(r.unwrap_err(), SkipReason::DemoFailed);
}

#[test]
fn decoded_exemplars_are_free_and_examples_round_trip() {
    let cfg = small_config();
    let examples = generate_dataset(&cfg).unwrap();
    assert!(examples.len() >= 10, "{}", examples.len());
    for ex in &examples {
        let exemplars = ex.exemplars();
        assert!(!exemplars.is_empty());
        for q in &exemplars {
            assert!(q.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(ex.scene.is_free(q), "scene {} exemplar {q:?} in collision", ex.scene_id);
        }
    }
    let ten = &examples[..10];
    let mut bytes = Vec::new();
    write_dataset(&mut bytes, ten, Some(&cfg)).unwrap();
    let (header, back) = read_dataset(Cursor::new(&bytes)).unwrap();
    assert_eq!(header.examples, 10);
    assert_eq!(back, ten);
    let mut again = Vec::new();
    write_dataset(&mut again, &back, header.config.as_ref()).unwrap();
    assert_eq!(again, bytes);

    // Same seed, same bytes.
    let mut twice = Vec::new();
    write_dataset(&mut twice, &generate_dataset(&cfg).unwrap()[..10], Some(&cfg)).unwrap();
    assert_eq!(twice, bytes);

    // Cutting the last line short is reported with its position.
    let text = String::from_utf8(bytes).unwrap();
    let cut = &text[..text.len() - 40];
    match read_dataset(Cursor::new(cut.as_bytes())) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 11),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn empty_dataset_is_header_only() {
    let mut bytes = Vec::new();
    write_dataset(&mut bytes, &[], None).unwrap();
    assert_eq!(bytes.iter().filter(|&&b| b == b'\n').count(), 1);
    let (header, back) = read_dataset(Cursor::new(&bytes)).unwrap();
    assert_eq!((header.examples, back.len()), (0, 0));
}
