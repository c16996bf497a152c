use r3r_core::environment::load_map;
use r3r_core::planner::{plan_nominal, plan_nominal_traced, PlanQuery};
use r3r_core::{DubinsParams, DubinsState, OccupancyEnvironment, PlannerConfig, Point2};

fn open() -> OccupancyEnvironment {
    OccupancyEnvironment::free(60, 60, 0.5, Point2::new(-15.0, -15.0)).unwrap()
}

fn query<'a>(env: &'a OccupancyEnvironment, start: DubinsState, goal: Point2) -> PlanQuery<'a> {
    PlanQuery { start, t0: 0.0, goal, env, neighbors: &[], dubins: DubinsParams::default(), delta: 0.5 }
}

#[test]
fn same_seed_same_tree() {
    let env = open();
    let q = query(&env, DubinsState::new(0.0, 0.0, 0.4), Point2::new(-3.0, 4.0));
    let cfg = PlannerConfig { rng_seed: 77, max_iterations: 600, ..PlannerConfig::default() };
    let (a, ta) = plan_nominal_traced(&q, &cfg);
    let (b, tb) = plan_nominal_traced(&q, &cfg);
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    let other = plan_nominal(&q, &PlannerConfig { rng_seed: 78, ..cfg });
    assert_ne!(other.trajectory, a.trajectory);
}

#[test]
fn output_respects_dynamics() {
    let env = open();
    for seed in 0..6 {
        let q = query(&env, DubinsState::new(0.0, 0.0, seed as f64), Point2::new(4.0, -3.0));
        let cfg = PlannerConfig { rng_seed: seed, max_iterations: 500, ..PlannerConfig::default() };
        let r = plan_nominal(&q, &cfg);
        let t = &r.trajectory;
        assert!((t.prefix_duration() - cfg.horizon).abs() < 1e-9);
        for (k, w) in t.states().windows(2).enumerate() {
            let dt = t.dt();
            let d = w[1].theta - w[0].theta;
            let rate = d.sin().atan2(d.cos()) / dt;
            assert!(rate.abs() <= 1.0 + 1e-6, "step {k}: rate {rate}");
            assert!(w[0].position().distance(w[1].position()) <= dt + 1e-9);
        }
    }
}

#[test]
fn rewiring_only_lowers_costs() {
    let env = open();
    let q = query(&env, DubinsState::new(0.0, 0.0, 0.0), Point2::new(0.0, 5.0));
    let cfg = PlannerConfig { rng_seed: 3, max_iterations: 1500, ..PlannerConfig::default() };
    let (_, trace) = plan_nominal_traced(&q, &cfg);
    assert!(!trace.rewires.is_empty());
    for r in &trace.rewires {
        assert!(r.new_cost < r.old_cost, "{r:?}");
    }
    // every node's cost is its parent's cost plus the edge length
    for n in &trace.nodes {
        if let Some(p) = n.parent {
            let expect = trace.nodes[p].cost + n.edge.duration;
            assert!((n.cost - expect).abs() < 1e-9);
        }
    }
}

#[test]
fn straight_goal_near_optimal() {
    let env = open();
    let q = query(&env, DubinsState::new(0.0, 0.0, 0.0), Point2::new(4.0, 0.0));
    let cfg = PlannerConfig { rng_seed: 11, ..PlannerConfig::default() };
    let r = plan_nominal(&q, &cfg);
    assert!(r.reached_goal);
    let end = r.trajectory.position_at(r.cost).unwrap();
    assert!(end.distance(Point2::new(4.0, 0.0)) <= cfg.goal_radius + 1e-9);
    // optimal path is 4 m less the goal radius
    let optimal = 4.0 - cfg.goal_radius;
    assert!(r.cost <= 1.1 * 4.0 && r.cost >= optimal - 1e-9, "cost {}", r.cost);
}

#[test]
fn threads_a_gap() {
    // 20 x 20 m at 1 m: a wall across y = 10 with a 4 m opening on the right
    let mut rows = Vec::new();
    for r in 0..20 {
        if r == 9 {
            rows.push("##############....##".to_string());
        } else {
            rows.push(".".repeat(20));
        }
    }
    let text = format!("20 20 1\n{}\n", rows.join("\n"));
    let env = load_map(&text).unwrap();
    let start = DubinsState::new(15.5, 13.0, -std::f64::consts::FRAC_PI_2);
    let goal = Point2::new(15.5, 7.0);
    let q = PlanQuery { start, t0: 0.0, goal, env: &env, neighbors: &[], dubins: DubinsParams::default(), delta: 0.5 };
    let cfg = PlannerConfig { rng_seed: 5, horizon: 8.0, ..PlannerConfig::default() };
    let r = plan_nominal(&q, &cfg);
    assert!(r.reached_goal, "cost {}", r.cost);
    for s in r.trajectory.states() {
        let p = s.position();
        assert!(env.in_safe_set(p, 0.0), "{p:?}");
    }
}
