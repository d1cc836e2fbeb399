//! Time-series containers shared by the solvers and the inversion.

/// Record of one receiver, sampled uniformly from t = 0.
#[derive(Clone, Debug)]
pub struct Seismogram {
    /// 1-based station number this trace belongs to.
    pub receiver_index: usize,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl Seismogram {
    pub fn new(receiver_index: usize, dt: f64, samples: Vec<f64>) -> Self {
        assert!(dt > 0.0 && !samples.is_empty());
        Self { receiver_index, dt, samples }
    }

    pub fn nt(&self) -> usize {
        self.samples.len()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// Discrete signal energy, sum of squares times dt.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum::<f64>() * self.dt
    }

    pub fn same_clock(&self, other: &Seismogram) -> bool {
        self.dt == other.dt && self.samples.len() == other.samples.len()
    }
}

/// Traces of every receiver in one run, on a shared clock, ordered by
/// station number 1..=n.
#[derive(Clone, Debug)]
pub struct SeismogramSet {
    pub dt: f64,
    pub traces: Vec<Seismogram>,
}

impl SeismogramSet {
    pub fn new(traces: Vec<Seismogram>) -> Self {
        assert!(!traces.is_empty());
        let dt = traces[0].dt;
        let nt = traces[0].nt();
        for (k, tr) in traces.iter().enumerate() {
            assert_eq!(tr.receiver_index, k + 1, "traces must be ordered by station");
            assert!(tr.dt == dt && tr.nt() == nt, "traces must share the clock");
        }
        Self { dt, traces }
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nt(&self) -> usize {
        self.traces[0].nt()
    }

    /// Trace of station `r` (1-based).
    pub fn trace(&self, r: usize) -> &Seismogram {
        assert!(r >= 1 && r <= self.traces.len(), "station index {r} out of range");
        &self.traces[r - 1]
    }
}

/// Field value and gradient sampled at one point over the whole record,
/// in forward-time order.
#[derive(Clone, Debug)]
pub struct FieldHistory {
    pub dt: f64,
    pub values: Vec<f64>,
    pub grad_x: Vec<f64>,
    pub grad_z: Vec<f64>,
}

impl FieldHistory {
    pub fn nt(&self) -> usize {
        self.values.len()
    }
}
