//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any
//! failure. Runs as a plain binary so the report is always printed.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use chargeplan::dispatch::{DecisionVector, OpfProblem};
use chargeplan::fixtures;
use chargeplan::grid::{build_ybus, parse_matpower_case, AdmittanceMatrix};
use chargeplan::miga::{
    laplace_beta, power_mutation, rank_weights, sus_from_weights, truncate, SELECTION_PRESSURE,
};
use chargeplan::network::{
    filter_nearest_stations, haversine, select_station, shortest_path, synthetic_grid, GridSpec,
    StationSite,
};
use chargeplan::planner::{
    cmd_plan, cmd_solve_opf, simulate_demand, solve_opf, write_desk_fixture, DeskFixture, Manifest,
    PlannerConfig, ARTIFACT_BUS_SERIES, ARTIFACT_DEMAND_SUMMARY, ARTIFACT_GA_HISTORY,
    ARTIFACT_MANIFEST, ARTIFACT_PLAN_RESULT, ARTIFACT_PROFILES,
};
use chargeplan::powerflow::{calc_injections, jacobian, solve_newton, InjectionSpec, PowerFlowOptions};
use chargeplan::tripsim::{decide_action, write_profiles_csv, Action, ChargingProfile, MINUTES_PER_DAY};
use chargeplan::vehicle::{tractive_force, tractive_power, DriveState, Regen, VehicleSpec};
use common::{brute_shortest, injections_trig, laplace_quantile, random_graph, rng};
use num_complex::Complex64;
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Voltages of the 30-bus base flow (slack at 1.0 pu, all other buses PQ at
/// the case dispatch), from an independent solver run.
const CASE30_VM: [f64; 30] = [
    1.0, 0.9478772673289609, 0.9129284237126333, 0.895112158268085, 0.9077916461945988,
    0.8774317211833998, 0.8790036983862245, 0.8619875587776599, 0.8321682424560574,
    0.8085560106256054, 0.8321682424560574, 0.8257059156165398, 0.8233053475479988,
    0.8088695818316157, 0.8079634837689228, 0.80917299166105, 0.8020900944422247,
    0.7918280507716194, 0.7870344251461086, 0.7913043420878428, 0.8000542019519582,
    0.802679987086998, 0.8116025247573112, 0.7965014455375813, 0.8121045038164392,
    0.7899063905287277, 0.8327418168945975, 0.8709314183491621, 0.8075961856763538,
    0.793185394243195,
];
const CASE30_VA: [f64; 30] = [
    0.0, 0.0077245199406480464, -0.008838480127389876, -0.010032461373526508,
    -0.01678690146927866, -0.016906300420637406, -0.02813234066105319, -0.026388692721686546,
    -0.03332927257543704, -0.04266429043203255, -0.03332927257543704, -0.005207238142405528,
    0.07106466566036927, -0.022424999528493524, -0.017284384991797103, -0.029035858779524554,
    -0.044522879238272764, -0.04666020887840886, -0.05875980420764179, -0.056244869733403535,
    -0.034910431107492125, -0.028732917133309162, 0.013663866201798668, -0.01422282366892574,
    0.0012699146811504746, -0.010499894782078599, 0.018128292557799935, -0.014014401874356392,
    -0.014920197882543226, -0.03849890906825071,
];
const CASE30_SLACK_P: f64 = 0.30347776765771156;
const CASE30_SLACK_Q: f64 = 1.2121886675983544;

fn criterion_1() -> Outcome {
    let case = parse_matpower_case(fixtures::CASE30).map_err(|e| e.to_string())?;
    let y = build_ybus(&case).map_err(|e| e.to_string())?;
    let spec = InjectionSpec::from_case_dispatch(&case);
    let opts = PowerFlowOptions::default();
    let sol = solve_newton(&y, &spec, &opts).map_err(|e| e.to_string())?;

    let mut times = Vec::new();
    for _ in 0..21 {
        let t = Instant::now();
        let s = solve_newton(&y, &spec, &opts).map_err(|e| e.to_string())?;
        times.push(t.elapsed());
        assert_eq!(s.vm, sol.vm);
    }
    times.sort();
    let median = times[times.len() / 2];

    let (p, q) = injections_trig(&sol.vm, &sol.va, &y);
    let mut worst_residual = 0.0f64;
    for i in 0..case.n_bus() {
        let (sp, sq) = if i == spec.slack {
            (sol.slack_p, sol.slack_q)
        } else {
            (spec.p[i], spec.q[i])
        };
        worst_residual = worst_residual.max((sp - p[i]).abs()).max((sq - q[i]).abs());
    }
    let vm_err = sol.vm.iter().zip(CASE30_VM).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let va_err = sol.va.iter().zip(CASE30_VA).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let slack_err = (sol.slack_p - CASE30_SLACK_P).abs().max((sol.slack_q - CASE30_SLACK_Q).abs());

    check(
        sol.converged
            && sol.max_mismatch <= 1e-8
            && sol.iterations <= 10
            && worst_residual <= 1e-8
            && median < Duration::from_millis(50)
            && vm_err < 1e-7
            && va_err < 1e-7
            && slack_err < 1e-7,
        format!(
            "converged={} iterations={} mismatch={:.2e} residual={:.2e} median_solve={:?} |dVm|={:.1e} |dVa|={:.1e} |dSlack|={:.1e}",
            sol.converged, sol.iterations, sol.max_mismatch, worst_residual, median, vm_err, va_err, slack_err
        ),
    )
}

fn random_ybus(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> AdmittanceMatrix {
    let mut y = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    let mut add = |a: usize, b: usize, ys: Complex64, bc: f64| {
        y[(a, a)] += ys + Complex64::new(0.0, bc / 2.0);
        y[(b, b)] += ys + Complex64::new(0.0, bc / 2.0);
        y[(a, b)] -= ys;
        y[(b, a)] -= ys;
    };
    for k in 1..n {
        let z = Complex64::new(r.random_range(0.01..0.1), r.random_range(0.05..0.4));
        add(r.random_range(0..k), k, 1.0 / z, r.random_range(0.0..0.05));
    }
    for _ in 0..n {
        let (a, b) = (r.random_range(0..n), r.random_range(0..n));
        if a != b {
            let z = Complex64::new(r.random_range(0.01..0.1), r.random_range(0.05..0.4));
            add(a, b, 1.0 / z, 0.0);
        }
    }
    AdmittanceMatrix::from_dense(y)
}

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    let n = 5;
    let slack = 0;
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let y = random_ybus(&mut r, n);
        let vm: Vec<f64> = (0..n).map(|_| r.random_range(0.9..1.1)).collect();
        let va: Vec<f64> = (0..n).map(|_| r.random_range(-0.3..0.3)).collect();
        let j = jacobian(&vm, &va, &y, slack);
        let ns: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
        let m = ns.len();
        let mut fd = nalgebra::DMatrix::<f64>::zeros(2 * m, 2 * m);
        for (c, &k) in ns.iter().enumerate() {
            for (col, is_angle) in [(c, true), (m + c, false)] {
                let (mut va_p, mut va_m, mut vm_p, mut vm_m) = (va.clone(), va.clone(), vm.clone(), vm.clone());
                if is_angle {
                    va_p[k] += h;
                    va_m[k] -= h;
                } else {
                    vm_p[k] += h;
                    vm_m[k] -= h;
                }
                let (pp, qp) = injections_trig(&vm_p, &va_p, &y);
                let (pm, qm) = injections_trig(&vm_m, &va_m, &y);
                for (row, &i) in ns.iter().enumerate() {
                    fd[(row, col)] = (pp[i] - pm[i]) / (2.0 * h);
                    fd[(m + row, col)] = (qp[i] - qm[i]) / (2.0 * h);
                }
            }
        }
        let scale = j.amax().max(1.0);
        worst = worst.max((&j - &fd).amax() / scale);
        // the solver's own injection routine must agree with the double sum
        let (p1, _) = calc_injections(&vm, &va, &y);
        let (p2, _) = injections_trig(&vm, &va, &y);
        worst = worst.max(p1.iter().zip(&p2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    check(worst <= 1e-6, format!("20 random 5-bus states, max relative error {worst:.2e}"))
}

fn write_constant_profiles(path: &Path, kw: &[f64]) {
    let profiles: Vec<ChargingProfile> = kw
        .iter()
        .enumerate()
        .map(|(j, &v)| ChargingProfile {
            station_id: j + 1,
            series_kw: vec![v; MINUTES_PER_DAY],
        })
        .collect();
    write_profiles_csv(path, &profiles, &[]).unwrap();
}

fn opf_config(dir: &Path, case_text: &str, kw: &[f64], seed: u64) -> PlannerConfig {
    std::fs::write(dir.join("case.m"), case_text).unwrap();
    write_constant_profiles(&dir.join("profiles.csv"), kw);
    let json = format!(
        r#"{{"case": "case.m", "profiles": "profiles.csv", "step_min": 1440,
            "ga": {{"pop_size": 200, "max_gen": 100, "seed": {seed}}}, "output_dir": "out"}}"#
    );
    std::fs::write(dir.join("planner.json"), json).unwrap();
    PlannerConfig::from_file(&dir.join("planner.json")).unwrap()
}

fn enumerate_placements(problem: &OpfProblem, x: &DecisionVector) -> (Vec<Vec<usize>>, f64) {
    let buses = problem.candidate_buses().to_vec();
    let m = x.placement.len();
    let mut combos: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..m {
        combos = combos
            .into_iter()
            .flat_map(|c| buses.iter().map(move |&b| [c.clone(), vec![b]].concat()))
            .collect();
    }
    let mut best = f64::INFINITY;
    let mut arg = Vec::new();
    for c in combos {
        let v = problem
            .fitness(&DecisionVector {
                placement: c.clone(),
                ..x.clone()
            })
            .unwrap()
            .objective();
        if v < best {
            best = v;
            arg = vec![c];
        } else if v == best {
            arg.push(c);
        }
    }
    (arg, best)
}

fn criterion_3() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (label, case_text, kw, n_combos) in [
        ("30-bus M=1", fixtures::CASE30, vec![15_000.0], 30),
        ("6-bus M=2", fixtures::CASE6WW, vec![20_000.0, 10_000.0], 36),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = opf_config(dir.path(), case_text, &kw, 11);
        let t = Instant::now();
        let run = cmd_solve_opf(&cfg).map_err(|e| e.to_string())?;
        let elapsed = t.elapsed();
        let x = run.problem.decode(&run.outcome.best);
        let (argmin, best) = enumerate_placements(&run.problem, &x);
        let hit = argmin.len() == 1 && argmin[0] == x.placement;
        ok &= hit && elapsed < Duration::from_secs(300);
        details.push(format!(
            "{label}: GA {:?} vs enumeration {:?} over {n_combos} (objective {:.4} vs {:.4}) in {:.1?}",
            x.placement, argmin, run.result.objective, best, elapsed
        ));
    }
    check(ok, details.join("; "))
}

struct DeskRun {
    history: Vec<f64>,
    problem: OpfProblem,
    x: DecisionVector,
    objective: f64,
}

fn desk_m3() -> Result<DeskRun, String> {
    let dir = tempfile::tempdir().unwrap();
    let fx = DeskFixture {
        stations: 3,
        ga: chargeplan::miga::GaConfig {
            pop_size: 200,
            max_gen: 400,
            seed: 3,
            ..Default::default()
        },
        ..DeskFixture::default()
    };
    let path = write_desk_fixture(dir.path(), &fx).map_err(|e| e.to_string())?;
    let cfg = PlannerConfig::from_file(&path).map_err(|e| e.to_string())?;
    let demand = simulate_demand(&cfg).map_err(|e| e.to_string())?;
    let run = solve_opf(&cfg, &demand.profiles).map_err(|e| e.to_string())?;
    Ok(DeskRun {
        history: run.outcome.history.best_series(),
        x: run.problem.decode(&run.outcome.best),
        objective: run.result.objective,
        problem: run.problem,
    })
}

fn criterion_4(run: &DeskRun) -> Outcome {
    let h = &run.history;
    let monotone = h.windows(2).all(|w| w[1] <= w[0]);
    if h.len() != 400 {
        return Err(format!("history has {} generations", h.len()));
    }
    let (before, last) = (h[349], h[399]);
    let rel = (before - last) / before.abs();
    check(
        monotone && rel <= 1e-3,
        format!(
            "400 generations, monotone={monotone}, best {:.4} -> {:.4} -> {:.4} (gen 1, 350, 400), final-50 improvement {:.4}%",
            h[0],
            before,
            last,
            rel * 100.0
        ),
    )
}

fn criterion_5(run: &DeskRun) -> Outcome {
    let mut evaluations = 0;
    let mut violations = Vec::new();
    for j in 0..run.x.placement.len() {
        for &b in run.problem.candidate_buses() {
            let mut alt = run.x.clone();
            alt.placement[j] = b;
            let v = run.problem.fitness(&alt).unwrap().objective();
            evaluations += 1;
            if v < run.objective {
                violations.push((j + 1, b, run.objective - v));
            }
        }
    }
    check(
        violations.is_empty(),
        format!(
            "placement {:?}, {evaluations} single-station relocations evaluated, {} better: {:?}",
            run.x.placement,
            violations.len(),
            violations
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let draws = 100_000;

    let trunc_ok = (0..draws).all(|_| {
        let x: f64 = r.random_range(-50.0..50.0);
        let t = truncate(x, &mut r) as f64;
        t == x.floor() || t == x.ceil()
    });

    let b = 0.35;
    let mut betas: Vec<f64> = (0..draws)
        .map(|_| laplace_beta(0.0, b, r.random::<f64>(), r.random::<f64>()))
        .collect();
    betas.sort_by(f64::total_cmp);
    let mut worst_q = 0.0f64;
    for p in [0.05, 0.1, 0.25, 0.75, 0.9, 0.95] {
        let emp = betas[(p * draws as f64) as usize];
        let exact = laplace_quantile(0.0, b, p);
        worst_q = worst_q.max(((emp - exact) / exact).abs());
    }

    let pm_ok = (0..draws).all(|_| {
        let lo: f64 = r.random_range(-100.0..100.0);
        let hi = lo + r.random_range(0.0..50.0);
        let x = r.random_range(lo..=hi);
        let y = power_mutation(x, lo, hi, if r.random_bool(0.5) { 10.0 } else { 4.0 }, &mut r);
        (lo..=hi).contains(&y)
    });

    // every ranking of ten individuals with up to three tie groups, with k
    // from 1 to 20 pointers and offsets on a 1/200 grid
    let mut sus_ok = true;
    let mut populations = 0;
    for ties in 0..3 {
        for perm in 0..50 {
            let mut fit: Vec<f64> = (0..10).map(|i| ((i * 7 + perm * 3) % 10) as f64).collect();
            for t in 0..ties {
                fit[t] = fit[t + 1];
            }
            populations += 1;
            let w = rank_weights(&fit, SELECTION_PRESSURE);
            let total: f64 = w.iter().sum();
            let wmax = w.iter().copied().fold(0.0, f64::max);
            for k in 1..=20 {
                for s in 0..200 {
                    let picks = sus_from_weights(&w, k, s as f64 / 200.0);
                    for (i, wi) in w.iter().enumerate() {
                        let count = picks.iter().filter(|&&p| p == i).count() as f64;
                        let e = k as f64 * wi / total;
                        let tol = 1e-9;
                        sus_ok &= count >= (e - tol).floor() && count <= (e + tol).ceil();
                        sus_ok &= count <= (k as f64 * wmax / total).ceil() + 1.0;
                    }
                }
            }
        }
    }

    check(
        trunc_ok && worst_q <= 0.02 && pm_ok && sus_ok,
        format!(
            "truncate in {{floor,ceil}}: {trunc_ok}; Laplace quantile rel. error {:.2}%; power mutation in bounds: {pm_ok}; SUS spread on {populations} populations: {sus_ok}",
            worst_q * 100.0
        ),
    )
}

fn criterion_7() -> Outcome {
    let spec = VehicleSpec {
        name: "hand".into(),
        m: 1600.0,
        cd: 0.28,
        area: 2.3,
        f: 0.015,
        delta: 1.05,
        eta: 0.9,
        battery_kwh: 60.0,
        i_t: 9.0,
        r_wheel: 0.33,
    };
    let g = 9.81;
    let u = 100.0;
    // term-by-term hand evaluation
    let rolling = 1600.0 * 9.81 * 0.015;
    let aero = 0.28 * 2.3 * u * u / 21.15;
    let hand_force = rolling + aero;
    let hand_power = hand_force * u / 3.6;

    let state = DriveState::cruise(u, 0.0);
    let f = tractive_force(&spec, &state, g).total_n();
    let p = tractive_power(&spec, &state, g, Regen(None));
    let still = tractive_power(&spec, &DriveState::cruise(0.0, 0.1), g, Regen(None));

    let f_err = (f - 539.9).abs() / 539.9;
    let p_err = (p.wheel_w - 15_000.0).abs() / 15_000.0;
    check(
        f_err <= 1e-3
            && p_err <= 1e-3
            && (f - hand_force).abs() <= 1e-9 * hand_force
            && (p.wheel_w - hand_power).abs() <= 1e-9 * hand_power
            && still.wheel_w == 0.0
            && still.battery_w == 0.0,
        format!(
            "F_t = {f:.2} N (err {:.3}%), wheel power = {:.1} W (err {:.3}%), zero-speed power = {}",
            f_err * 100.0,
            p.wheel_w,
            p_err * 100.0,
            still.wheel_w
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut r = rng(8);
    let mut mismatches = 0;
    let mut pairs = 0;
    for _ in 0..100 {
        let n = r.random_range(2..=10);
        let net = random_graph(&mut r, n, 0.35);
        let o = r.random_range(1..=n);
        let d = r.random_range(1..=n);
        pairs += 1;
        let got = shortest_path(&net, o, d).ok().map(|rt| (rt.total_length_m, rt.node_seq));
        if got != brute_shortest(&net, o, d) {
            mismatches += 1;
        }
    }

    // filtering: 50 stations on a 6x6 grid against a brute-force distance sort
    let net = synthetic_grid(&GridSpec {
        rows: 6,
        cols: 6,
        spacing_m: 5_000.0,
        seed: 8,
        ..GridSpec::default()
    });
    let stations: Vec<StationSite> = (1..=50).map(|id| StationSite::level2(id, r.random_range(1..=36))).collect();
    let mut filter_bad = 0;
    for _ in 0..20 {
        let (o, d) = (r.random_range(1..=36), r.random_range(1..=36));
        let route = shortest_path(&net, o, d).unwrap();
        let got: Vec<usize> = filter_nearest_stations(&net, &route, &stations, 20)
            .unwrap()
            .iter()
            .map(|s| s.id)
            .collect();
        let mut brute: Vec<(f64, usize)> = stations
            .iter()
            .map(|s| {
                let a = net.node(s.node).unwrap();
                let dist = route
                    .node_seq
                    .iter()
                    .map(|&v| {
                        let b = net.node(v).unwrap();
                        haversine(a.lat, a.lon, b.lat, b.lon)
                    })
                    .fold(f64::INFINITY, f64::min);
                (dist, s.id)
            })
            .collect();
        brute.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let want: Vec<usize> = brute.iter().take(20).map(|x| x.1).collect();
        filter_bad += usize::from(got != want);
    }

    // selection: 5 candidates on a 12-node grid against path enumeration
    let grid = synthetic_grid(&GridSpec::default());
    let mut select_bad = 0;
    for _ in 0..20 {
        let (o, d) = (r.random_range(1..=12), r.random_range(1..=12));
        let cands: Vec<StationSite> = (1..=5).map(|id| StationSite::level2(id, r.random_range(1..=12))).collect();
        let got = select_station(&grid, o, d, &cands).unwrap();
        let dist = |a: usize, b: usize| brute_shortest(&grid, a, b).unwrap().0;
        let direct = dist(o, d);
        let best = cands
            .iter()
            .map(|s| {
                let detour = dist(o, s.node) + dist(s.node, d) - direct;
                (if detour < 1e-6 { 0.0 } else { detour }, s.id)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .unwrap();
        let same_detour = (got.detour_m - best.0).abs() <= 1e-6 * direct.max(1.0);
        select_bad += usize::from(!same_detour || got.station.id != best.1);
    }

    check(
        mismatches == 0 && filter_bad == 0 && select_bad == 0,
        format!(
            "{mismatches}/{pairs} shortest-path mismatches vs exhaustive enumeration; {filter_bad}/20 filter mismatches; {select_bad}/20 detour mismatches"
        ),
    )
}

fn desk_demand_config(dir: &Path) -> PlannerConfig {
    let path = write_desk_fixture(dir, &DeskFixture::default()).unwrap();
    PlannerConfig::from_file(&path).unwrap()
}

fn criterion_9() -> Outcome {
    let branches = [
        decide_action(50.0, 40.0, 0.8) == Action::NoCharge,
        decide_action(36.0, 40.0, 0.8) == Action::MidTrip,
        decide_action(20.0, 40.0, 0.8) == Action::AtOrigin,
    ];
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk_demand_config(dir.path());
    let run = simulate_demand(&cfg).map_err(|e| e.to_string())?;
    let mut checked_minutes = 0;
    let mut bad = 0;
    for o in run.outcomes.iter().filter(|o| o.feasible) {
        let (t0, t1) = (o.soc_trace[0].minute, o.soc_trace.last().unwrap().minute);
        let mut m = t0.floor();
        while m <= t1.ceil() {
            let soc = o.soc_at(m);
            checked_minutes += 1;
            bad += usize::from(!(-1e-9..=o.capacity_kwh + 1e-9).contains(&soc));
            m += 1.0;
        }
        bad += o.soc_trace.iter().filter(|p| p.soc_kwh < 0.0).count();
    }
    let s = &run.summary;
    check(
        branches.iter().all(|&b| b) && bad == 0,
        format!(
            "fixtures -> {:?}; seeded {}-trip run: no_charge={} mid_trip={} at_origin={} infeasible={}, {checked_minutes} trip-minutes checked, {bad} out of range",
            branches, s.trips, s.no_charge, s.mid_trip, s.at_origin, s.infeasible
        ),
    )
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk_demand_config(dir.path());
    let run = simulate_demand(&cfg).map_err(|e| e.to_string())?;
    let events: f64 = run.outcomes.iter().flat_map(|o| &o.events).map(|e| e.energy_kwh()).sum();
    let stations: f64 = run.profiles.iter().map(|p| p.energy_kwh()).sum();
    let buses: f64 = run.bus_series.iter().map(|b| b.energy_kwh()).sum();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1e-300);
    let (r1, r2) = (rel(events, stations), rel(stations, buses));
    let powers_ok = run.outcomes.iter().flat_map(|o| &o.events).all(|e| e.power_kw == 7.2);
    check(
        r1 <= 1e-9 && r2 <= 1e-9 && events > 0.0 && powers_ok && run.summary.ev_trips == 100,
        format!(
            "{} EVs, {} events; energy events={events:.6} kWh, stations={stations:.6} kWh, buses={buses:.6} kWh (rel {r1:.1e}, {r2:.1e})",
            run.summary.ev_trips, run.summary.events
        ),
    )
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg_a = desk_demand_config(dir.path());
    let t = Instant::now();
    cmd_plan(&cfg_a).map_err(|e| e.to_string())?;
    let first = t.elapsed();

    let manifest_path = cfg_a.output_dir().join(ARTIFACT_MANIFEST);
    let mut cfg_b = Manifest::load_config(&manifest_path).map_err(|e| e.to_string())?;
    let out_b = dir.path().join("rerun");
    cfg_b.output_dir = Some(out_b.clone());
    let t = Instant::now();
    cmd_plan(&cfg_b).map_err(|e| e.to_string())?;
    let second = t.elapsed();

    let mut differing = Vec::new();
    for f in [
        ARTIFACT_PROFILES,
        ARTIFACT_BUS_SERIES,
        ARTIFACT_DEMAND_SUMMARY,
        ARTIFACT_PLAN_RESULT,
        ARTIFACT_GA_HISTORY,
        ARTIFACT_MANIFEST,
    ] {
        let a = std::fs::read(cfg_a.output_dir().join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(out_b.join(f)).map_err(|e| e.to_string())?;
        if a != b {
            differing.push(f);
        }
    }
    let limit = Duration::from_secs(600);
    check(
        differing.is_empty() && first < limit && second < limit,
        format!("6 artifacts compared, differing: {differing:?}; runs took {first:.1?} and {second:.1?}"),
    )
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; a name filter
    // that matches nothing here skips the suite
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !filter.is_empty() && !filter.iter().any(|f| "acceptance".contains(f.as_str())) {
        return;
    }

    let mut results: BTreeMap<usize, Outcome> = BTreeMap::new();
    let mut run = |n: usize, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let r = f();
        let status = if r.is_ok() { "PASS" } else { "FAIL" };
        let detail = match &r {
            Ok(s) | Err(s) => s,
        };
        println!("criterion {n:>2}: {status} [{:.1?}] {detail}", t.elapsed());
        results.insert(n, r);
    };

    run(1, &criterion_1);
    run(2, &criterion_2);
    run(3, &criterion_3);
    match desk_m3() {
        Ok(desk) => {
            run(4, &|| criterion_4(&desk));
            run(5, &|| criterion_5(&desk));
        }
        Err(e) => {
            run(4, &|| Err(e.clone()));
            run(5, &|| Err(e.clone()));
        }
    }
    run(6, &criterion_6);
    run(7, &criterion_7);
    run(8, &criterion_8);
    run(9, &criterion_9);
    run(10, &criterion_10);
    run(11, &criterion_11);

    let failed: Vec<usize> = results.iter().filter(|(_, r)| r.is_err()).map(|(n, _)| *n).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
