use proptest::prelude::*;
use r3r_core::environment::{
    generate_scenario, load_map, save_map, BitGrid, GenerationOptions, ScenarioError,
};
use r3r_core::{DubinsParams, OccupancyEnvironment, Point2, R3RParams, ScenarioKind};

fn map_text() -> impl Strategy<Value = String> {
    (1usize..24, 1usize..24, prop::sample::select(vec!["0.5", "1", "0.25", "2"])).prop_flat_map(|(w, h, res)| {
        prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.3), w), h).prop_map(move |rows| {
            let mut s = format!("{w} {h} {res}\n");
            for r in rows {
                s.extend(r.iter().map(|&b| if b { '#' } else { '.' }));
                s.push('\n');
            }
            s
        })
    })
}

fn grid_from(rows: &[Vec<bool>]) -> BitGrid {
    let mut g = BitGrid::new(rows[0].len(), rows.len());
    for (r, row) in rows.iter().enumerate() {
        for (c, &b) in row.iter().enumerate() {
            g.set(c, r, b);
        }
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn map_round_trip(text in map_text()) {
        let env = load_map(&text).unwrap();
        let saved = save_map(&env);
        prop_assert_eq!(saved.trim_end(), text.trim_end());
    }

    #[test]
    fn inflation_is_monotone(
        rows in prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.1), 16), 16),
        m1 in 0.0f64..2.0, extra in 0.0f64..2.0,
    ) {
        let env = OccupancyEnvironment::from_grid(grid_from(&rows), 0.5, Point2::ORIGIN).unwrap();
        let small = env.clone().with_inflation(m1);
        let large = env.with_inflation(m1 + extra);
        prop_assert!(small.inflated().is_superset_of(small.raw()));
        prop_assert!(large.inflated().is_superset_of(small.inflated()));
        for i in 0..64 {
            let p = Point2::new(0.125 * i as f64, 8.0 - 0.11 * i as f64);
            if large.in_safe_set(p, 0.0) {
                prop_assert!(small.in_safe_set(p, 0.0));
            }
        }
    }

    #[test]
    fn interior_of_isolated_free_cell_is_safe(c in 1usize..9, r in 1usize..9, fx in 0.3f64..0.7, fy in 0.3f64..0.7) {
        let env = OccupancyEnvironment::free(10, 10, 1.0, Point2::ORIGIN).unwrap();
        let p = Point2::new(c as f64 + fx, r as f64 + fy);
        prop_assert!(env.in_safe_set(p, 0.29));
    }
}

#[test]
fn safe_set_basics() {
    let env = load_map("3 3 1\n...\n.#.\n...\n").unwrap();
    assert_eq!(env.raw().count_ones(), 1);
    assert!(!env.in_safe_set(Point2::new(1.5, 1.5), 0.0));
    assert!(env.in_safe_set(Point2::new(0.5, 0.5), 0.0));
    // the obstacle boundary and the map edge are closed
    assert!(!env.in_safe_set(Point2::new(1.0, 1.5), 0.0));
    assert!(env.in_safe_set(Point2::new(0.9, 1.5), 0.0));
    assert!(!env.in_safe_set(Point2::new(-0.01, 0.5), 0.0));
    assert!(!env.in_safe_set(Point2::new(3.5, 0.5), 0.0));
}

#[test]
fn scenarios_are_seeded() {
    let params = R3RParams::default();
    let dubins = DubinsParams::default();
    let opts = GenerationOptions::default();
    let kind = ScenarioKind::CityLike { n: 12 };
    let a = generate_scenario(&kind, params, dubins, 5, &opts).unwrap();
    let b = generate_scenario(&kind, params, dubins, 5, &opts).unwrap();
    let c = generate_scenario(&kind, params, dubins, 6, &opts).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.agents, c.agents);
}

#[test]
fn city32_spawns_are_spread() {
    let params = R3RParams::default();
    let opts = GenerationOptions::default();
    for seed in 0..3 {
        let s = generate_scenario(&ScenarioKind::CityLike { n: 32 }, params, DubinsParams::default(), seed, &opts)
            .unwrap();
        assert_eq!(s.agents.len(), 32);
        let need = 2.0 * (16.0 - 0.5) / 3.0 + 0.5;
        for (i, a) in s.agents.iter().enumerate() {
            assert!(s.env.in_safe_set(a.spawn.position(), 0.0));
            assert!(s.env.in_safe_set(a.goal, 0.0));
            for b in &s.agents[i + 1..] {
                assert!(a.spawn.position().distance(b.spawn.position()) >= need);
            }
        }
    }
}

#[test]
fn two_agent_swap_layout() {
    let s = generate_scenario(
        &ScenarioKind::Swap { n: 2, radius: Some(10.0) },
        R3RParams::default(),
        DubinsParams::default(),
        0,
        &GenerationOptions::default(),
    )
    .unwrap();
    let p0 = s.agents[0].spawn.position();
    let p1 = s.agents[1].spawn.position();
    assert!(p0.distance(Point2::new(10.0, 0.0)) < 1e-12);
    assert!(p1.distance(Point2::new(-10.0, 0.0)) < 1e-9);
    assert!(s.agents[0].goal.distance(p1) < 1e-9);
    assert!(s.agents[1].goal.distance(p0) < 1e-9);
}

#[test]
fn impossible_requests_fail() {
    let params = R3RParams::default();
    let opts = GenerationOptions::default();
    let err = generate_scenario(&ScenarioKind::OpenArena { n: 40, side: 30.0 }, params, DubinsParams::default(), 1, &opts);
    assert!(matches!(err, Err(ScenarioError::Unsatisfiable { .. })));
    let err = generate_scenario(&ScenarioKind::Swap { n: 0, radius: None }, params, DubinsParams::default(), 1, &opts);
    assert!(matches!(err, Err(ScenarioError::NoAgents)));
}
