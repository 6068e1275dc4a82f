//! EV-augmented bus loads, horizon generation cost, and the penalized
//! fitness the GA minimizes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{build_ybus, AdmittanceMatrix, CaseError, GridCase};
use crate::miga::{Chromosome, GeneLayout};
use crate::powerflow::{
    solve_newton, solve_newton_from, InjectionSpec, PowerFlowOptions, PowerFlowSolution,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispatchError {
    #[error("station {station} assigned to unknown bus {bus}")]
    BusOutOfRange { station: usize, bus: usize },
    #[error("time step {t} outside horizon of {steps} steps")]
    StepOutOfRange { t: usize, steps: usize },
    #[error("decision vector mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid EV load set: {0}")]
    InvalidLoadSet(String),
    #[error(transparent)]
    Case(#[from] CaseError),
}

/// Quadratic fuel cost `a·P² + b·P + c` ($/h, `P` in MW).
pub fn generator_cost(a: f64, b: f64, c: f64, p: f64) -> f64 {
    a * p * p + b * p + c
}

/// Generator dispatch plus charger-station bus assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    /// Active output of each dispatchable (non-slack) generator, MW.
    pub pg: Vec<f64>,
    /// Reactive output of each dispatchable generator, MVAr.
    pub qg: Vec<f64>,
    /// Bus id hosting each charger station.
    pub placement: Vec<usize>,
}

/// Station charging loads on a common time grid, MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvLoadSet {
    profiles: Vec<Vec<f64>>,
    step_min: f64,
    steps: usize,
}

impl EvLoadSet {
    pub fn new(profiles: Vec<Vec<f64>>, step_min: f64, steps: usize) -> Result<Self, DispatchError> {
        if !(step_min > 0.0) {
            return Err(DispatchError::InvalidLoadSet(format!(
                "step must be positive, got {step_min}"
            )));
        }
        if steps == 0 {
            return Err(DispatchError::InvalidLoadSet("horizon has no steps".into()));
        }
        for (j, p) in profiles.iter().enumerate() {
            if p.len() != steps {
                return Err(DispatchError::InvalidLoadSet(format!(
                    "station {} has {} steps, expected {steps}",
                    j + 1,
                    p.len()
                )));
            }
            if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(DispatchError::InvalidLoadSet(format!(
                    "station {} has a negative or non-finite load",
                    j + 1
                )));
            }
        }
        Ok(Self {
            profiles,
            step_min,
            steps,
        })
    }

    /// Constant per-station loads over `steps` steps.
    pub fn constant(mw: &[f64], steps: usize, step_min: f64) -> Result<Self, DispatchError> {
        Self::new(mw.iter().map(|&v| vec![v; steps]).collect(), step_min, steps)
    }

    /// Block-averages per-minute kW series into `step_min` blocks of MW.
    pub fn from_minute_kw(series_kw: &[Vec<f64>], step_min: usize) -> Result<Self, DispatchError> {
        let minutes = series_kw.first().map_or(0, Vec::len);
        if step_min == 0 || minutes == 0 || minutes % step_min != 0 {
            return Err(DispatchError::InvalidLoadSet(format!(
                "step of {step_min} min does not divide a {minutes}-minute horizon"
            )));
        }
        let steps = minutes / step_min;
        let profiles = series_kw
            .iter()
            .map(|s| {
                if s.len() != minutes {
                    return Err(DispatchError::InvalidLoadSet(
                        "station series differ in length".into(),
                    ));
                }
                Ok(s.chunks(step_min)
                    .map(|blk| blk.iter().sum::<f64>() / step_min as f64 / 1000.0)
                    .collect())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(profiles, step_min as f64, steps)
    }

    pub fn n_stations(&self) -> usize {
        self.profiles.len()
    }

    pub fn n_steps(&self) -> usize {
        self.steps
    }

    pub fn step_min(&self) -> f64 {
        self.step_min
    }

    pub fn profiles(&self) -> &[Vec<f64>] {
        &self.profiles
    }

    pub fn load(&self, station: usize, t: usize) -> f64 {
        self.profiles[station][t]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, DispatchError> {
        Self::new(
            self.profiles
                .iter()
                .map(|p| p.iter().map(|v| v * factor).collect())
                .collect(),
            self.step_min,
            self.steps,
        )
    }

    /// Same profiles with stations reordered: station `j` of the result is
    /// station `order[j]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            profiles: order.iter().map(|&j| self.profiles[j].clone()).collect(),
            step_min: self.step_min,
            steps: self.steps,
        }
    }
}

/// Per-bus loads `(Pd', Qd')` in MW / MVAr at step `t` with each station's
/// load added to the active demand of its assigned bus.
pub fn apply_ev_load(
    case: &GridCase,
    placement: &[usize],
    ev: &EvLoadSet,
    t: usize,
) -> Result<(Vec<f64>, Vec<f64>), DispatchError> {
    if t >= ev.n_steps() {
        return Err(DispatchError::StepOutOfRange {
            t,
            steps: ev.n_steps(),
        });
    }
    if placement.len() != ev.n_stations() {
        return Err(DispatchError::DimensionMismatch(format!(
            "{} placements for {} stations",
            placement.len(),
            ev.n_stations()
        )));
    }
    let index = case.bus_index_map();
    let mut added: Vec<Vec<f64>> = vec![Vec::new(); case.n_bus()];
    for (j, &bus) in placement.iter().enumerate() {
        let i = *index
            .get(&bus)
            .ok_or(DispatchError::BusOutOfRange { station: j + 1, bus })?;
        added[i].push(ev.load(j, t));
    }
    let pd = case
        .buses
        .iter()
        .zip(added.iter_mut())
        .map(|(b, extra)| {
            // order-independent sum so station relabeling is exact
            extra.sort_by(f64::total_cmp);
            b.pd + extra.iter().sum::<f64>()
        })
        .collect();
    let qd = case.buses.iter().map(|b| b.qd).collect();
    Ok((pd, qd))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyWeights {
    /// $/pu² of voltage-bound violation, per bus and step.
    pub voltage: f64,
    /// $/MW² (and $/MVAr²) of slack-generator limit violation, per step.
    pub slack: f64,
    /// $ per step whose power flow fails to converge.
    pub divergence: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self {
            voltage: 1e6,
            slack: 1e4,
            divergence: 1e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    /// Generation cost over the horizon, $.
    pub total_cost: f64,
    pub penalty: f64,
    pub feasible: bool,
    /// Slack generator output per step, MW; `None` where the flow diverged.
    pub per_step_slack_p: Vec<Option<f64>>,
    /// Lowest bus voltage magnitude over all converged steps, pu.
    pub worst_voltage: f64,
    pub diverged_steps: usize,
}

impl FitnessReport {
    /// Scalar minimized by the GA.
    pub fn objective(&self) -> f64 {
        self.total_cost + self.penalty
    }
}

/// Everything needed to score a decision vector; built once, shared by all
/// fitness evaluations.
#[derive(Debug, Clone)]
pub struct OpfProblem {
    case: GridCase,
    ybus: AdmittanceMatrix,
    ev: EvLoadSet,
    weights: PenaltyWeights,
    pf: PowerFlowOptions,
    candidate_buses: Vec<usize>,
    dispatchable: Vec<usize>,
    slack_gen: usize,
    bus_pos: std::collections::HashMap<usize, usize>,
}

impl OpfProblem {
    pub fn new(
        case: GridCase,
        ev: EvLoadSet,
        weights: PenaltyWeights,
        pf: PowerFlowOptions,
    ) -> Result<Self, DispatchError> {
        case.validate()?;
        let ybus = build_ybus(&case)?;
        let slack_bus = case.buses[case.slack_index()].id;
        let mut dispatchable = Vec::new();
        let mut slack_gen = usize::MAX;
        for (k, g) in case.gens.iter().enumerate().filter(|(_, g)| g.in_service) {
            if g.bus == slack_bus {
                slack_gen = k;
            } else {
                dispatchable.push(k);
            }
        }
        let candidate_buses = case.buses.iter().map(|b| b.id).collect();
        let bus_pos = case.bus_index_map();
        Ok(Self {
            case,
            ybus,
            ev,
            weights,
            pf,
            candidate_buses,
            dispatchable,
            slack_gen,
            bus_pos,
        })
    }

    /// Restricts the buses a station may be placed on (ids, in gene order).
    pub fn with_candidate_buses(mut self, buses: Vec<usize>) -> Result<Self, DispatchError> {
        if buses.is_empty() {
            return Err(DispatchError::DimensionMismatch("no candidate buses".into()));
        }
        for &b in &buses {
            if !self.bus_pos.contains_key(&b) {
                return Err(DispatchError::BusOutOfRange { station: 0, bus: b });
            }
        }
        self.candidate_buses = buses;
        Ok(self)
    }

    pub fn case(&self) -> &GridCase {
        &self.case
    }

    pub fn ybus(&self) -> &AdmittanceMatrix {
        &self.ybus
    }

    pub fn ev(&self) -> &EvLoadSet {
        &self.ev
    }

    pub fn candidate_buses(&self) -> &[usize] {
        &self.candidate_buses
    }

    pub fn n_dispatchable(&self) -> usize {
        self.dispatchable.len()
    }

    /// Gene layout: `[Pg | Qg]` within generator limits, then one integer
    /// gene per station indexing `candidate_buses` (1-based).
    pub fn gene_layout(&self) -> GeneLayout {
        let gens = &self.case.gens;
        let p = self.dispatchable.iter().map(|&k| (gens[k].pmin, gens[k].pmax));
        let q = self.dispatchable.iter().map(|&k| (gens[k].qmin, gens[k].qmax));
        GeneLayout {
            real: p.chain(q).collect(),
            int: vec![(1, self.candidate_buses.len() as i64); self.ev.n_stations()],
        }
    }

    pub fn decode(&self, c: &Chromosome) -> DecisionVector {
        let n = self.dispatchable.len();
        DecisionVector {
            pg: c.real[..n].to_vec(),
            qg: c.real[n..2 * n].to_vec(),
            placement: c
                .int
                .iter()
                .map(|&g| self.candidate_buses[(g - 1) as usize])
                .collect(),
        }
    }

    pub fn encode(&self, x: &DecisionVector) -> Result<Chromosome, DispatchError> {
        let int = x
            .placement
            .iter()
            .enumerate()
            .map(|(j, b)| {
                self.candidate_buses
                    .iter()
                    .position(|c| c == b)
                    .map(|p| p as i64 + 1)
                    .ok_or(DispatchError::BusOutOfRange {
                        station: j + 1,
                        bus: *b,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Chromosome::new(
            x.pg.iter().chain(&x.qg).copied().collect(),
            int,
        ))
    }

    /// The case's own generator dispatch with every station on `bus`.
    pub fn case_dispatch(&self, bus: usize) -> DecisionVector {
        let gens = &self.case.gens;
        DecisionVector {
            pg: self.dispatchable.iter().map(|&k| gens[k].pg).collect(),
            qg: self.dispatchable.iter().map(|&k| gens[k].qg).collect(),
            placement: vec![bus; self.ev.n_stations()],
        }
    }

    /// GA objective for a chromosome.
    pub fn objective(&self, c: &Chromosome) -> f64 {
        match self.fitness(&self.decode(c)) {
            Ok(r) => r.objective(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Solves one power flow per horizon step and prices the dispatch.
    pub fn fitness(&self, x: &DecisionVector) -> Result<FitnessReport, DispatchError> {
        let n = self.dispatchable.len();
        if x.pg.len() != n || x.qg.len() != n {
            return Err(DispatchError::DimensionMismatch(format!(
                "expected {n} dispatchable generators, got Pg {} / Qg {}",
                x.pg.len(),
                x.qg.len()
            )));
        }
        let case = &self.case;
        let base = case.base_mva;
        let gens = &case.gens;
        let slack_pos = case.slack_index();
        let slack = &gens[self.slack_gen];
        let hours = self.ev.step_min() / 60.0;
        let w = &self.weights;

        let fixed_cost: f64 = self
            .dispatchable
            .iter()
            .zip(&x.pg)
            .map(|(&k, &p)| generator_cost(gens[k].cost.a, gens[k].cost.b, gens[k].cost.c, p))
            .sum();

        let mut total_cost = 0.0;
        let mut penalty = 0.0;
        let mut per_step = Vec::with_capacity(self.ev.n_steps());
        let mut worst_voltage = f64::INFINITY;
        let mut diverged_steps = 0;
        let mut warm: Option<PowerFlowSolution> = None;

        for t in 0..self.ev.n_steps() {
            let (pd, qd) = apply_ev_load(case, &x.placement, &self.ev, t)?;
            let mut p: Vec<f64> = pd.iter().map(|v| -v / base).collect();
            let mut q: Vec<f64> = qd.iter().map(|v| -v / base).collect();
            for (j, &k) in self.dispatchable.iter().enumerate() {
                let i = self.bus_pos[&gens[k].bus];
                p[i] += x.pg[j] / base;
                q[i] += x.qg[j] / base;
            }
            let spec = InjectionSpec {
                p,
                q,
                slack: slack_pos,
                slack_vm: slack.vg,
            };
            let sol = self.solve_step(&spec, warm.as_ref());
            let Some(sol) = sol else {
                diverged_steps += 1;
                penalty += w.divergence;
                total_cost += fixed_cost * hours;
                per_step.push(None);
                warm = None;
                continue;
            };

            let slack_p = sol.slack_p * base + pd[slack_pos];
            let slack_q = sol.slack_q * base + qd[slack_pos];
            let step_cost = generator_cost(slack.cost.a, slack.cost.b, slack.cost.c, slack_p) + fixed_cost;
            total_cost += step_cost * hours;

            let over = |v: f64, lo: f64, hi: f64| (v - hi).max(0.0) + (lo - v).max(0.0);
            let v_viol: f64 = sol
                .vm
                .iter()
                .zip(&case.buses)
                .map(|(&v, b)| over(v, b.vmin, b.vmax).powi(2))
                .sum();
            let s_viol = over(slack_p, slack.pmin, slack.pmax).powi(2)
                + over(slack_q, slack.qmin, slack.qmax).powi(2);
            penalty += w.voltage * v_viol + w.slack * s_viol;

            worst_voltage = sol.vm.iter().copied().fold(worst_voltage, f64::min);
            per_step.push(Some(slack_p));
            warm = Some(sol);
        }

        Ok(FitnessReport {
            total_cost,
            penalty,
            feasible: penalty == 0.0,
            per_step_slack_p: per_step,
            worst_voltage,
            diverged_steps,
        })
    }

    fn solve_step(&self, spec: &InjectionSpec, warm: Option<&PowerFlowSolution>) -> Option<PowerFlowSolution> {
        if let Some(prev) = warm {
            if let Ok(sol) = solve_newton_from(&self.ybus, spec, &self.pf, &prev.vm, &prev.va) {
                if sol.converged {
                    return Some(sol);
                }
            }
        }
        match solve_newton(&self.ybus, spec, &self.pf) {
            Ok(sol) if sol.converged => Some(sol),
            _ => None,
        }
    }
}

/// Free-function form of [`OpfProblem::fitness`].
pub fn fitness(x: &DecisionVector, problem: &OpfProblem) -> Result<FitnessReport, DispatchError> {
    problem.fitness(x)
}
