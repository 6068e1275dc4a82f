use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::case::{CaseError, GridCase};

/// Dense complex bus admittance matrix `Y = G + jB` in per-unit, with a
/// per-row list of structurally nonzero columns for the power-flow kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    y: DMatrix<Complex64>,
    row_nz: Vec<Vec<usize>>,
}

impl AdmittanceMatrix {
    pub fn from_dense(y: DMatrix<Complex64>) -> Self {
        assert_eq!(y.nrows(), y.ncols(), "admittance matrix must be square");
        let n = y.nrows();
        let row_nz = (0..n)
            .map(|i| (0..n).filter(|&k| y[(i, k)] != Complex64::new(0.0, 0.0)).collect())
            .collect();
        Self { y, row_nz }
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn get(&self, i: usize, k: usize) -> Complex64 {
        self.y[(i, k)]
    }

    pub fn g(&self, i: usize, k: usize) -> f64 {
        self.y[(i, k)].re
    }

    pub fn b(&self, i: usize, k: usize) -> f64 {
        self.y[(i, k)].im
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.y
    }

    /// Columns with a structurally nonzero entry in row `i`, ascending.
    pub fn row_nonzeros(&self, i: usize) -> &[usize] {
        &self.row_nz[i]
    }
}

#[derive(Serialize)]
struct Entry {
    row: usize,
    col: usize,
    g: f64,
    b: f64,
}

impl Serialize for AdmittanceMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = (0..self.n())
            .flat_map(|i| {
                self.row_nz[i].iter().map(move |&k| Entry {
                    row: i,
                    col: k,
                    g: self.y[(i, k)].re,
                    b: self.y[(i, k)].im,
                })
            })
            .collect();
        entries.serialize(s)
    }
}

/// Standard π-model Y-bus assembly with off-nominal taps, phase shifters and
/// bus shunts.
pub fn build_ybus(case: &GridCase) -> Result<AdmittanceMatrix, CaseError> {
    let n = case.n_bus();
    let index = case.bus_index_map();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));

    for br in case.branches.iter().filter(|b| b.in_service) {
        if br.r == 0.0 && br.x == 0.0 {
            return Err(CaseError::ZeroImpedanceBranch {
                from: br.from,
                to: br.to,
            });
        }
        let lookup = |id: usize| {
            index.get(&id).copied().ok_or(CaseError::UnknownBusReference {
                what: "branch".into(),
                bus: id,
            })
        };
        let f = lookup(br.from)?;
        let t = lookup(br.to)?;
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let charging = Complex64::new(0.0, br.b_total / 2.0);
        let tap = Complex64::from_polar(br.effective_tap(), br.shift_deg.to_radians());
        let ytt = ys + charging;
        y[(f, f)] += ytt / (tap * tap.conj());
        y[(t, t)] += ytt;
        y[(f, t)] -= ys / tap.conj();
        y[(t, f)] -= ys / tap;
    }
    for (i, bus) in case.buses.iter().enumerate() {
        y[(i, i)] += Complex64::new(bus.gs, bus.bs) / case.base_mva;
    }
    Ok(AdmittanceMatrix::from_dense(y))
}
