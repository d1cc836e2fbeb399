//! Waveform misfit, adjoint sources, and sensitivity kernels.
//!
//! The misfit of one station is the energy of the residual trace
//! normalized by the observed energy. Its derivative with respect to
//! the source position and origin time comes from correlating the
//! residual with the wavefield: either by propagating the residual
//! backwards in time and reading the adjoint field at the trial source
//! (one solve per station), or by correlating the residual directly
//! with the synthetic's derivative traces (one set of solves shared by
//! every station). The two routes are reorderings of the same sums and
//! agree to rounding on a shared discretization.

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::model::{Point, SourceParams};
use crate::wave::{FieldHistory, Propagator, Seismogram, SeismogramSet};

/// Position and origin-time sensitivities of one station's misfit,
/// with the misfit value they were computed at. Sign convention:
/// the kernels are the negated misfit gradient, so a first-order
/// misfit change is -(k_x dx + k_z dz + k_tau dtau).
#[derive(Clone, Copy, Debug)]
pub struct SensitivityKernels {
    /// 1-based station number.
    pub receiver_index: usize,
    pub k_x: f64,
    pub k_z: f64,
    pub k_tau: f64,
    pub chi: f64,
}

/// Residual energy over twice the observed energy. The time step in
/// both integrals cancels.
pub fn misfit(data: &Seismogram, synth: &Seismogram) -> Result<f64> {
    assert!(data.same_clock(synth), "traces must share the clock");
    let denom: f64 = data.samples.iter().map(|v| v * v).sum();
    if denom <= 0.0 {
        return Err(Error::degenerate("observed trace has zero energy"));
    }
    let num: f64 = data
        .samples
        .iter()
        .zip(&synth.samples)
        .map(|(d, s)| (d - s) * (d - s))
        .sum();
    Ok(num / (2.0 * denom))
}

/// Residual trace scaled by the inverse observed energy: the source
/// injected at the station when the misfit is propagated backwards.
pub fn adjoint_source(data: &Seismogram, synth: &Seismogram) -> Result<Seismogram> {
    assert!(data.same_clock(synth), "traces must share the clock");
    let energy = data.energy();
    if energy <= 0.0 {
        return Err(Error::degenerate("observed trace has zero energy"));
    }
    let samples: Vec<f64> = data
        .samples
        .iter()
        .zip(&synth.samples)
        .map(|(d, s)| (d - s) / energy)
        .collect();
    Ok(Seismogram::new(data.receiver_index, data.dt, samples))
}

/// Adjoint field and gradient at `query`, driven by the residual trace
/// injected at its own station. The field obeys terminal conditions at
/// t = T; it is solved by reversing the source in time, propagating
/// forward, and reversing the recorded history.
pub fn solve_adjoint<P: Propagator + ?Sized>(
    engine: &P,
    adj_src: &Seismogram,
    query: Point,
) -> Result<FieldHistory> {
    engine.adjoint_history(adj_src.receiver_index, &adj_src.samples, query)
}

/// Time integrals of the adjoint history against the source wavelet:
/// k_xi = integral of grad w times f, k_tau = -integral of w times f'.
pub fn compute_kernels(
    w: &FieldHistory,
    source: &SourceParams,
    chi: f64,
    receiver_index: usize,
) -> Result<SensitivityKernels> {
    let nt = w.nt();
    if w.grad_x.len() != nt || w.grad_z.len() != nt {
        return Err(Error::contract("field history components differ in length"));
    }
    let dt = w.dt;
    let (mut kx, mut kz, mut kt) = (0.0, 0.0, 0.0);
    for i in 0..nt {
        let t = i as f64 * dt;
        let f = source.wavelet(t);
        kx += w.grad_x[i] * f;
        kz += w.grad_z[i] * f;
        kt -= w.values[i] * source.wavelet_rate(t);
    }
    Ok(SensitivityKernels {
        receiver_index,
        k_x: kx * dt,
        k_z: kz * dt,
        k_tau: kt * dt,
        chi,
    })
}

/// Kernels by the forward-linearization route: correlate the residual
/// weight with the synthetic's derivative traces.
pub fn kernels_from_gradients(
    data: &Seismogram,
    synth: &Seismogram,
    wrt_x: &Seismogram,
    wrt_z: &Seismogram,
    wrt_tau: &Seismogram,
) -> Result<SensitivityKernels> {
    assert!(
        data.same_clock(wrt_x) && data.same_clock(wrt_z) && data.same_clock(wrt_tau),
        "derivative traces must share the clock"
    );
    let chi = misfit(data, synth)?;
    let a = adjoint_source(data, synth)?;
    let dt = data.dt;
    let dot = |g: &Seismogram| -> f64 {
        a.samples.iter().zip(&g.samples).map(|(ai, gi)| ai * gi).sum::<f64>() * dt
    };
    Ok(SensitivityKernels {
        receiver_index: data.receiver_index,
        k_x: dot(wrt_x),
        k_z: dot(wrt_z),
        k_tau: dot(wrt_tau),
        chi,
    })
}

/// First-order misfit change for a source step, per the kernel sign
/// convention.
pub fn predicted_delta_chi(k: &SensitivityKernels, dx: f64, dz: f64, dtau: f64) -> f64 {
    -(k.k_x * dx + k.k_z * dz + k.k_tau * dtau)
}

/// Kernels for the given stations, one adjoint solve per station,
/// solved concurrently.
pub fn adjoint_kernels<P: Propagator + ?Sized>(
    engine: &P,
    data: &SeismogramSet,
    synth: &SeismogramSet,
    source: &SourceParams,
    stations: &[usize],
    exec: ExecMode,
) -> Result<Vec<SensitivityKernels>> {
    let out = map_indexed(exec, stations.len(), |k| {
        let r = stations[k];
        let chi = misfit(data.trace(r), synth.trace(r))?;
        let a = adjoint_source(data.trace(r), synth.trace(r))?;
        let w = solve_adjoint(engine, &a, source.xi)?;
        compute_kernels(&w, source, chi, r)
    });
    out.into_iter().collect()
}

/// Kernels for the given stations from one shared set of synthetic
/// derivative traces.
pub fn gradient_kernels<P: Propagator + ?Sized>(
    engine: &P,
    data: &SeismogramSet,
    synth: &SeismogramSet,
    source: &SourceParams,
    stations: &[usize],
) -> Result<Vec<SensitivityKernels>> {
    let g = engine.gradients(source)?;
    stations
        .iter()
        .map(|&r| {
            kernels_from_gradients(
                data.trace(r),
                synth.trace(r),
                g.wrt_x.trace(r),
                g.wrt_z.trace(r),
                g.wrt_tau.trace(r),
            )
        })
        .collect()
}
