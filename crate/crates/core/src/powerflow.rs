//! Newton-Raphson AC power flow in polar coordinates.
//!
//! Every non-slack bus is treated as PQ: the optimizer fixes generator
//! reactive output, so there are no voltage-controlled buses here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{AdmittanceMatrix, GridCase};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerFlowError {
    #[error("dimension mismatch: expected {expected} buses, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
}

/// Net bus injections in per-unit. Entries at `slack` are placeholders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Position of the slack bus.
    pub slack: usize,
    /// Slack voltage magnitude setpoint (pu).
    pub slack_vm: f64,
}

impl InjectionSpec {
    /// Net injections `(Pg − Pd, Qg − Qd)` at the case's own dispatch.
    pub fn from_case_dispatch(case: &GridCase) -> Self {
        let n = case.n_bus();
        let base = case.base_mva;
        let index = case.bus_index_map();
        let mut p: Vec<f64> = case.buses.iter().map(|b| -b.pd / base).collect();
        let mut q: Vec<f64> = case.buses.iter().map(|b| -b.qd / base).collect();
        for g in case.active_gens() {
            let i = index[&g.bus];
            p[i] += g.pg / base;
            q[i] += g.qg / base;
        }
        debug_assert_eq!(p.len(), n);
        Self {
            p,
            q,
            slack: case.slack_index(),
            slack_vm: case.slack_gen().vg,
        }
    }

    fn check(&self, n: usize) -> Result<(), PowerFlowError> {
        for got in [self.p.len(), self.q.len()] {
            if got != n {
                return Err(PowerFlowError::DimensionMismatch { expected: n, got });
            }
        }
        if self.slack >= n {
            return Err(PowerFlowError::DimensionMismatch {
                expected: n,
                got: self.slack + 1,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerFlowOptions {
    /// Infinity-norm mismatch tolerance (pu).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 20,
        }
    }
}

impl PowerFlowOptions {
    pub fn validate(&self) -> Result<(), PowerFlowError> {
        if !(self.tol > 0.0) {
            return Err(PowerFlowError::InvalidOptions(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(PowerFlowError::InvalidOptions("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    pub vm: Vec<f64>,
    /// Radians; zero at the slack bus.
    pub va: Vec<f64>,
    pub slack_p: f64,
    pub slack_q: f64,
    pub iterations: usize,
    pub converged: bool,
    pub max_mismatch: f64,
    /// Mismatch norm at the start of every iteration, plus the final one.
    pub trace: Vec<f64>,
}

/// Per-bus power mismatch `spec − calc`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub dp: Vec<f64>,
    pub dq: Vec<f64>,
}

impl Mismatch {
    /// Infinity norm over non-slack rows.
    pub fn max_abs(&self, slack: usize) -> f64 {
        self.dp
            .iter()
            .zip(&self.dq)
            .enumerate()
            .filter(|(i, _)| *i != slack)
            .map(|(_, (p, q))| p.abs().max(q.abs()))
            .fold(0.0, f64::max)
    }
}

fn voltages(vm: &[f64], va: &[f64]) -> Vec<Complex64> {
    vm.iter()
        .zip(va)
        .map(|(&m, &a)| Complex64::from_polar(m, a))
        .collect()
}

fn currents(y: &AdmittanceMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (0..y.n())
        .map(|i| y.row_nonzeros(i).iter().map(|&k| y.get(i, k) * v[k]).sum())
        .collect()
}

/// Calculated bus injections `S = V ∘ conj(Y V)` as separate P and Q vectors.
pub fn calc_injections(vm: &[f64], va: &[f64], y: &AdmittanceMatrix) -> (Vec<f64>, Vec<f64>) {
    let v = voltages(vm, va);
    let i = currents(y, &v);
    v.iter()
        .zip(&i)
        .map(|(v, i)| {
            let s = v * i.conj();
            (s.re, s.im)
        })
        .unzip()
}

fn check_state(vm: &[f64], va: &[f64], y: &AdmittanceMatrix) -> Result<(), PowerFlowError> {
    let n = y.n();
    for got in [vm.len(), va.len()] {
        if got != n {
            return Err(PowerFlowError::DimensionMismatch { expected: n, got });
        }
    }
    Ok(())
}

/// Power mismatch at state `(vm, va)`.
pub fn residual(
    vm: &[f64],
    va: &[f64],
    y: &AdmittanceMatrix,
    spec: &InjectionSpec,
) -> Result<Mismatch, PowerFlowError> {
    check_state(vm, va, y)?;
    spec.check(y.n())?;
    let (p, q) = calc_injections(vm, va, y);
    Ok(Mismatch {
        dp: spec.p.iter().zip(&p).map(|(s, c)| s - c).collect(),
        dq: spec.q.iter().zip(&q).map(|(s, c)| s - c).collect(),
    })
}

/// Jacobian of the calculated injections with respect to the unknowns.
///
/// Rows are `[P(ns), Q(ns)]`, columns `[θ(ns), |V|(ns)]`, where `ns` lists
/// every bus except `slack` in ascending order.
pub fn jacobian(vm: &[f64], va: &[f64], y: &AdmittanceMatrix, slack: usize) -> DMatrix<f64> {
    let n = y.n();
    let m = n - 1;
    let pos = |i: usize| -> Option<usize> {
        match i.cmp(&slack) {
            std::cmp::Ordering::Less => Some(i),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(i - 1),
        }
    };
    let v = voltages(vm, va);
    let cur = currents(y, &v);
    let j = Complex64::new(0.0, 1.0);
    let mut jac = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..n {
        let Some(r) = pos(i) else { continue };
        for &k in y.row_nonzeros(i) {
            let Some(c) = pos(k) else { continue };
            let yv = y.get(i, k) * v[k];
            let unit_k = v[k] / vm[k];
            let mut d_theta = -j * v[i] * yv.conj();
            let mut d_vm = v[i] * (y.get(i, k) * unit_k).conj();
            if i == k {
                d_theta += j * v[i] * cur[i].conj();
                d_vm += cur[i].conj() * unit_k;
            }
            jac[(r, c)] = d_theta.re;
            jac[(r, m + c)] = d_vm.re;
            jac[(m + r, c)] = d_theta.im;
            jac[(m + r, m + c)] = d_vm.im;
        }
    }
    jac
}

/// Flat start: `|V| = 1`, `θ = 0`, slack at its setpoint.
pub fn solve_newton(
    y: &AdmittanceMatrix,
    spec: &InjectionSpec,
    opts: &PowerFlowOptions,
) -> Result<PowerFlowSolution, PowerFlowError> {
    let n = y.n();
    let mut vm = vec![1.0; n];
    if spec.slack < n {
        vm[spec.slack] = spec.slack_vm;
    }
    solve_newton_from(y, spec, opts, &vm, &vec![0.0; n])
}

/// Newton iterations from an explicit starting state. The slack entries of
/// the start are overwritten with the slack setpoint.
pub fn solve_newton_from(
    y: &AdmittanceMatrix,
    spec: &InjectionSpec,
    opts: &PowerFlowOptions,
    vm0: &[f64],
    va0: &[f64],
) -> Result<PowerFlowSolution, PowerFlowError> {
    opts.validate()?;
    check_state(vm0, va0, y)?;
    spec.check(y.n())?;
    let n = y.n();
    let m = n - 1;
    let slack = spec.slack;
    let ns: Vec<usize> = (0..n).filter(|&i| i != slack).collect();

    let mut vm = vm0.to_vec();
    let mut va = va0.to_vec();
    vm[slack] = spec.slack_vm;
    va[slack] = 0.0;

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut norm;
    loop {
        let mis = residual(&vm, &va, y, spec)?;
        norm = mis.max_abs(slack);
        trace.push(norm);
        if !norm.is_finite() {
            break;
        }
        if norm <= opts.tol {
            converged = true;
            break;
        }
        if iterations == opts.max_iter {
            break;
        }
        let jac = jacobian(&vm, &va, y, slack);
        let rhs = DVector::from_iterator(
            2 * m,
            ns.iter().map(|&i| mis.dp[i]).chain(ns.iter().map(|&i| mis.dq[i])),
        );
        let dx = jac
            .lu()
            .solve(&rhs)
            .ok_or(PowerFlowError::SingularJacobian {
                iteration: iterations + 1,
            })?;
        for (c, &i) in ns.iter().enumerate() {
            va[i] += dx[c];
            vm[i] += dx[m + c];
        }
        iterations += 1;
        if vm.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            norm = f64::INFINITY;
            trace.push(norm);
            break;
        }
    }

    let (p, q) = calc_injections(&vm, &va, y);
    Ok(PowerFlowSolution {
        slack_p: p[slack],
        slack_q: q[slack],
        vm,
        va,
        iterations,
        converged,
        max_mismatch: norm,
        trace,
    })
}

/// Complex power entering a branch at each end (pu).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchFlow {
    pub from: usize,
    pub to: usize,
    pub s_from: Complex64,
    pub s_to: Complex64,
}

impl BranchFlow {
    pub fn loss(&self) -> Complex64 {
        self.s_from + self.s_to
    }
}

/// Terminal flows of every in-service branch from the π-model.
pub fn branch_flows(case: &GridCase, vm: &[f64], va: &[f64]) -> Vec<BranchFlow> {
    let index = case.bus_index_map();
    let v = voltages(vm, va);
    case.branches
        .iter()
        .filter(|b| b.in_service)
        .map(|br| {
            let f = index[&br.from];
            let t = index[&br.to];
            let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
            let charging = Complex64::new(0.0, br.b_total / 2.0);
            let tap = Complex64::from_polar(br.effective_tap(), br.shift_deg.to_radians());
            let yff = (ys + charging) / (tap * tap.conj());
            let yft = -ys / tap.conj();
            let ytf = -ys / tap;
            let ytt = ys + charging;
            let i_f = yff * v[f] + yft * v[t];
            let i_t = ytf * v[f] + ytt * v[t];
            BranchFlow {
                from: br.from,
                to: br.to,
                s_from: v[f] * i_f.conj(),
                s_to: v[t] * i_t.conj(),
            }
        })
        .collect()
}

/// Power absorbed by bus shunts (pu).
pub fn shunt_consumption(case: &GridCase, vm: &[f64]) -> Complex64 {
    case.buses
        .iter()
        .zip(vm)
        .map(|(b, &v)| Complex64::new(b.gs, -b.bs) * (v * v) / case.base_mva)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::grid::{build_ybus, parse_matpower_case};

    fn two_bus(load_p: f64) -> (AdmittanceMatrix, InjectionSpec) {
        let case = parse_matpower_case(fixtures::TWO_BUS).unwrap();
        let y = build_ybus(&case).unwrap();
        let spec = InjectionSpec {
            p: vec![0.0, -load_p],
            q: vec![0.0, 0.0],
            slack: 0,
            slack_vm: 1.0,
        };
        (y, spec)
    }

    #[test]
    fn flat_state_zero_injection_residual_vanishes() {
        let (y, mut spec) = two_bus(0.0);
        spec.p = vec![0.0; 2];
        let r = residual(&[1.0, 1.0], &[0.0, 0.0], &y, &spec).unwrap();
        assert!(r.dp.iter().chain(&r.dq).all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn residual_at_equal_angles_is_spec() {
        let (y, spec) = two_bus(0.5);
        let r = residual(&[1.0, 1.0], &[0.0, 0.0], &y, &spec).unwrap();
        assert_eq!(r.dp[1], -0.5);
    }

    #[test]
    fn residual_dimension_mismatch() {
        let (y, spec) = two_bus(0.5);
        assert_eq!(
            residual(&[1.0], &[0.0], &y, &spec),
            Err(PowerFlowError::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn zero_injection_converges_immediately() {
        let (y, mut spec) = two_bus(0.0);
        spec.p = vec![0.0; 2];
        let sol = solve_newton(&y, &spec, &PowerFlowOptions::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.iterations <= 1);
        assert_eq!(sol.vm, vec![1.0, 1.0]);
        assert_eq!(sol.va, vec![0.0, 0.0]);
    }

    #[test]
    fn two_bus_closed_form() {
        // Lossless line, x = 0.1: P2 = 10 V2 sin θ2 = -0.4 and Q2 = 10 V2² - 10 V2 cos θ2 = 0
        // give V2⁴ - V2² + 0.0016 = 0.
        let (y, spec) = two_bus(0.4);
        let sol = solve_newton(&y, &spec, &PowerFlowOptions::default()).unwrap();
        let v2 = ((1.0 + (1.0f64 - 4.0 * 0.0016).sqrt()) / 2.0).sqrt();
        let th2 = (-0.04 / v2).asin();
        assert!(sol.converged);
        assert!((sol.vm[1] - v2).abs() < 1e-10, "{} vs {v2}", sol.vm[1]);
        assert!((sol.va[1] - th2).abs() < 1e-10);
        assert!((sol.slack_p - 0.4).abs() < 1e-9);
        assert_eq!(sol.va[0], 0.0);
    }

    #[test]
    fn impossible_load_does_not_converge() {
        // Maximum transfer over x = 0.1 at unity power factor is 5 pu.
        let (y, spec) = two_bus(8.0);
        match solve_newton(&y, &spec, &PowerFlowOptions::default()) {
            Ok(sol) => {
                assert!(!sol.converged);
                assert!(!sol.trace.is_empty());
            }
            Err(PowerFlowError::SingularJacobian { .. }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn options_are_validated() {
        let (y, spec) = two_bus(0.4);
        let opts = PowerFlowOptions { tol: 0.0, max_iter: 5 };
        assert!(matches!(
            solve_newton(&y, &spec, &opts),
            Err(PowerFlowError::InvalidOptions(_))
        ));
        let opts = PowerFlowOptions { tol: 1e-8, max_iter: 0 };
        assert!(solve_newton(&y, &spec, &opts).is_err());
    }

    #[test]
    fn warm_start_matches_flat_start() {
        let case = parse_matpower_case(fixtures::CASE30).unwrap();
        let y = build_ybus(&case).unwrap();
        let spec = InjectionSpec::from_case_dispatch(&case);
        let opts = PowerFlowOptions::default();
        let flat = solve_newton(&y, &spec, &opts).unwrap();
        let warm = solve_newton_from(&y, &spec, &opts, &flat.vm, &flat.va).unwrap();
        assert!(warm.converged);
        assert_eq!(warm.iterations, 0);
    }
}
