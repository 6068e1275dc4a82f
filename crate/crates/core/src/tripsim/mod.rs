//! Trip-level EV simulation: vehicle assignment, charging decisions,
//! charging events, and station / bus load profiles.

mod io;
mod profiles;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{
    filter_nearest_stations, haversine, select_station_by, shortest_path_by, Metric, NetworkError,
    RoadNetwork, Route, StationSite,
};
use crate::vehicle::{link_energy, Regen, VehicleSpec, STANDARD_GRAVITY};

pub use io::{
    read_profiles_csv, read_station_bus_map, read_trips_csv, write_bus_series_csv,
    write_profiles_csv, write_station_bus_map, write_trips_csv,
};
pub use profiles::{
    aggregate_to_buses, generate_profiles, profiles_from_outcomes, BusLoadSeries, ChargingProfile,
    MINUTES_PER_DAY,
};

#[derive(Debug, Error)]
pub enum TripError {
    #[error("fleet is empty")]
    EmptyFleet,
    #[error("EV fraction {0} outside [0, 1]")]
    InvalidFraction(f64),
    #[error("trip {id}: {reason}")]
    InvalidTrip { id: usize, reason: String },
    #[error("trip {0} has no vehicle assigned")]
    NotEv(usize),
    #[error("charging event at station {station} ends at minute {end_min:.2}, past the end of the day")]
    EventPastHorizon { station: usize, end_min: f64 },
    #[error("station {0} has no bus mapping")]
    UnmappedStation(usize),
    #[error("event refers to unknown station {0}")]
    UnknownStation(usize),
    #[error("step of {0} min does not divide the day")]
    InvalidStep(usize),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("{file}: {reason}")]
    Format { file: String, reason: String },
}

/// One row of the trip table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub id: usize,
    pub origin: usize,
    pub destination: usize,
    pub depart_min: f64,
    pub initial_soc_frac: f64,
}

impl TripRecord {
    pub fn validate(&self) -> Result<(), TripError> {
        let bad = |reason: &str| TripError::InvalidTrip {
            id: self.id,
            reason: reason.to_string(),
        };
        if !(0.0..MINUTES_PER_DAY as f64).contains(&self.depart_min) {
            return Err(bad("departure must lie within the day"));
        }
        if !(0.0..=1.0).contains(&self.initial_soc_frac) {
            return Err(bad("initial state of charge must be a fraction of capacity"));
        }
        Ok(())
    }
}

/// A trip with its vehicle; `vehicle == None` marks a conventional trip that
/// is ignored by the charging simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trip {
    pub id: usize,
    pub origin: usize,
    pub destination: usize,
    pub depart_min: f64,
    pub vehicle: Option<VehicleSpec>,
    pub initial_soc_kwh: f64,
}

impl Trip {
    pub fn is_ev(&self) -> bool {
        self.vehicle.is_some()
    }
}

/// Marks `round(ev_fraction · n)` randomly chosen trips as EV trips and
/// gives each a uniformly drawn fleet vehicle.
pub fn assign_vehicles<R: Rng>(
    records: &[TripRecord],
    fleet: &[VehicleSpec],
    ev_fraction: f64,
    rng: &mut R,
) -> Result<Vec<Trip>, TripError> {
    if fleet.is_empty() {
        return Err(TripError::EmptyFleet);
    }
    if !(0.0..=1.0).contains(&ev_fraction) {
        return Err(TripError::InvalidFraction(ev_fraction));
    }
    for r in records {
        r.validate()?;
    }
    let n = records.len();
    let n_ev = ((ev_fraction * n as f64).round() as usize).min(n);
    let mut chosen = sample(rng, n, n_ev).into_vec();
    chosen.sort_unstable();
    let mut vehicles = vec![None; n];
    for i in chosen {
        vehicles[i] = Some(fleet[rng.random_range(0..fleet.len())].clone());
    }
    Ok(records
        .iter()
        .zip(vehicles)
        .map(|(r, v)| Trip {
            id: r.id,
            origin: r.origin,
            destination: r.destination,
            depart_min: r.depart_min,
            initial_soc_kwh: v.as_ref().map_or(0.0, |s| r.initial_soc_frac * s.battery_kwh),
            vehicle: v,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    NoCharge,
    MidTrip,
    AtOrigin,
}

/// Three-way charging decision from state of charge and trip energy.
pub fn decide_action(soc_kwh: f64, trip_kwh: f64, factor: f64) -> Action {
    if soc_kwh > trip_kwh {
        Action::NoCharge
    } else if soc_kwh > factor * trip_kwh {
        Action::MidTrip
    } else {
        Action::AtOrigin
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// Share of the trip energy above which a mid-trip stop suffices.
    pub factor: f64,
    /// How many route-nearest stations are considered for a mid-trip stop.
    pub n_nearest: usize,
    pub gravity: f64,
    /// Recuperation efficiency; `None` disables regeneration.
    pub regen: Option<f64>,
    pub metric: Metric,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            factor: 0.8,
            n_nearest: 20,
            gravity: STANDARD_GRAVITY,
            regen: None,
            metric: Metric::Distance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargingEvent {
    pub station_id: usize,
    pub start_min: f64,
    pub duration_min: f64,
    pub power_kw: f64,
}

impl ChargingEvent {
    pub fn end_min(&self) -> f64 {
        self.start_min + self.duration_min
    }

    pub fn energy_kwh(&self) -> f64 {
        self.power_kw * self.duration_min / 60.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SocPoint {
    pub minute: f64,
    pub soc_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripOutcome {
    pub trip_id: usize,
    pub action: Action,
    /// Battery energy the direct route needs, kWh.
    pub trip_energy_kwh: f64,
    pub events: Vec<ChargingEvent>,
    pub feasible: bool,
    /// State of charge at every driving or charging breakpoint; linear in
    /// between.
    pub soc_trace: Vec<SocPoint>,
    pub capacity_kwh: f64,
}

impl TripOutcome {
    /// Linearly interpolated state of charge at `minute` (clamped to the
    /// traced interval).
    pub fn soc_at(&self, minute: f64) -> f64 {
        let tr = &self.soc_trace;
        if minute <= tr[0].minute {
            return tr[0].soc_kwh;
        }
        for w in tr.windows(2) {
            if minute <= w[1].minute {
                let span = w[1].minute - w[0].minute;
                if span <= 0.0 {
                    return w[1].soc_kwh;
                }
                let s = (minute - w[0].minute) / span;
                return w[0].soc_kwh + s * (w[1].soc_kwh - w[0].soc_kwh);
            }
        }
        tr[tr.len() - 1].soc_kwh
    }
}

/// Fills `route.per_link_energy_kwh` and returns the route total, kWh.
pub fn route_energy(net: &RoadNetwork, route: &mut Route, spec: &VehicleSpec, params: &SimParams) -> f64 {
    let energy: Vec<f64> = route
        .links(net)
        .map(|l| link_energy(spec, l.length_m, l.speed_kmh, net.grade(l), params.gravity, Regen(params.regen)))
        .collect();
    route.per_link_energy_kwh = energy;
    route.per_link_energy_kwh.iter().sum()
}

struct Drive<'a> {
    net: &'a RoadNetwork,
    capacity: f64,
    minute: f64,
    soc: f64,
    trace: Vec<SocPoint>,
    stranded: bool,
}

impl Drive<'_> {
    fn mark(&mut self) {
        self.trace.push(SocPoint {
            minute: self.minute,
            soc_kwh: self.soc,
        });
    }

    fn drive(&mut self, route: &Route) {
        for (l, e) in route.links(self.net).zip(&route.per_link_energy_kwh) {
            let soc = (self.soc - e).min(self.capacity);
            if soc < 0.0 {
                self.stranded = true;
                return;
            }
            self.soc = soc;
            self.minute += l.travel_min();
            self.mark();
        }
    }

    fn charge_full(&mut self, station: &StationSite) -> Option<ChargingEvent> {
        let need = self.capacity - self.soc;
        if need <= 0.0 {
            return None;
        }
        let ev = ChargingEvent {
            station_id: station.id,
            start_min: self.minute,
            duration_min: need / station.power_kw * 60.0,
            power_kw: station.power_kw,
        };
        self.minute = ev.end_min();
        self.soc = self.capacity;
        self.mark();
        Some(ev)
    }
}

fn nearest_station<'a>(net: &RoadNetwork, node: usize, stations: &'a [StationSite]) -> Result<Option<&'a StationSite>, NetworkError> {
    let o = net.node(node)?;
    let mut best: Option<(f64, &StationSite)> = None;
    for s in stations {
        let n = net.node(s.node)?;
        let d = haversine(o.lat, o.lon, n.lat, n.lon);
        if best.is_none_or(|(bd, bs)| d < bd || (d == bd && s.id < bs.id)) {
            best = Some((d, s));
        }
    }
    Ok(best.map(|(_, s)| s))
}

/// Routes one EV trip, decides how it charges, and traces its battery.
///
/// A trip is infeasible when the battery would go negative on some leg even
/// with the chosen charging stop, or when no station can serve it; charging
/// completed before that point is still reported.
pub fn simulate_trip(
    trip: &Trip,
    net: &RoadNetwork,
    stations: &[StationSite],
    params: &SimParams,
) -> Result<TripOutcome, TripError> {
    let spec = trip.vehicle.as_ref().ok_or(TripError::NotEv(trip.id))?;
    let mut direct = shortest_path_by(net, trip.origin, trip.destination, params.metric)?;
    let trip_energy = route_energy(net, &mut direct, spec, params);
    let action = decide_action(trip.initial_soc_kwh, trip_energy, params.factor);

    let mut d = Drive {
        net,
        capacity: spec.battery_kwh,
        minute: trip.depart_min,
        soc: trip.initial_soc_kwh,
        trace: Vec::new(),
        stranded: false,
    };
    d.mark();
    let mut events = Vec::new();
    let mut served = true;

    match action {
        Action::NoCharge => d.drive(&direct),
        Action::AtOrigin => match nearest_station(net, trip.origin, stations)? {
            Some(s) => {
                events.extend(d.charge_full(s));
                d.drive(&direct);
            }
            None => served = false,
        },
        Action::MidTrip => {
            let candidates = filter_nearest_stations(net, &direct, stations, params.n_nearest)?;
            match select_station_by(net, trip.origin, trip.destination, &candidates, params.metric) {
                Ok(choice) => {
                    let m = choice.station.node;
                    let mut to_m = shortest_path_by(net, trip.origin, m, params.metric)?;
                    let mut from_m = shortest_path_by(net, m, trip.destination, params.metric)?;
                    route_energy(net, &mut to_m, spec, params);
                    route_energy(net, &mut from_m, spec, params);
                    d.drive(&to_m);
                    if !d.stranded {
                        events.extend(d.charge_full(&choice.station));
                        d.drive(&from_m);
                    }
                }
                Err(NetworkError::NoReachableCandidate { .. }) => served = false,
                Err(e) => return Err(e.into()),
            }
        }
    }

    Ok(TripOutcome {
        trip_id: trip.id,
        action,
        trip_energy_kwh: trip_energy,
        events,
        feasible: served && !d.stranded,
        soc_trace: d.trace,
        capacity_kwh: spec.battery_kwh,
    })
}

/// Simulates every EV trip (in parallel), returning outcomes in trip order.
pub fn simulate_trips(
    trips: &[Trip],
    net: &RoadNetwork,
    stations: &[StationSite],
    params: &SimParams,
) -> Result<Vec<TripOutcome>, TripError> {
    for s in stations {
        s.validate(net)?;
    }
    trips
        .par_iter()
        .filter(|t| t.is_ev())
        .map(|t| simulate_trip(t, net, stations, params))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DemandSummary {
    pub trips: usize,
    pub ev_trips: usize,
    pub no_charge: usize,
    pub mid_trip: usize,
    pub at_origin: usize,
    pub infeasible: usize,
    pub events: usize,
    pub charged_kwh: f64,
}

impl DemandSummary {
    pub fn new(n_trips: usize, outcomes: &[TripOutcome]) -> Self {
        let mut s = Self {
            trips: n_trips,
            ev_trips: outcomes.len(),
            ..Self::default()
        };
        for o in outcomes {
            match o.action {
                Action::NoCharge => s.no_charge += 1,
                Action::MidTrip => s.mid_trip += 1,
                Action::AtOrigin => s.at_origin += 1,
            }
            s.infeasible += usize::from(!o.feasible);
            s.events += o.events.len();
            s.charged_kwh += o.events.iter().map(ChargingEvent::energy_kwh).sum::<f64>();
        }
        s
    }
}

/// Random trips between distinct nodes, departing in the morning with
/// 30–100 % charge.
pub fn synthetic_trips(net: &RoadNetwork, count: usize, seed: u64) -> Vec<TripRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<usize> = net.nodes().iter().map(|n| n.id).collect();
    (1..=count)
        .map(|id| {
            let o = rng.random_range(0..ids.len());
            let mut d = rng.random_range(0..ids.len() - 1);
            if d >= o {
                d += 1;
            }
            TripRecord {
                id,
                origin: ids[o],
                destination: ids[d],
                depart_min: rng.random_range(360..720) as f64,
                initial_soc_frac: rng.random_range(0.3..=1.0),
            }
        })
        .collect()
}
