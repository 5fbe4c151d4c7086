//! C ABI over `qrc-core`.
//!
//! Objects cross the boundary as opaque handles created by `qrc_*_new` style
//! functions and released with the matching `qrc_*_free`. Every fallible call
//! returns a [`QrcStatus`]; on failure `qrc_last_error_message` describes the
//! most recent error raised on the calling thread. Complex arrays are
//! interleaved `(re, im)` doubles, matrices row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use qrc_core::dynamics::{self, DriveParameters, QuantumState, UnitaryMatrix};
use qrc_core::network::{self, EffectiveNetwork, DEFAULT_WEIGHT_FLOOR};
use qrc_core::readout::standardize;
use qrc_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QrcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    Cache = 6,
    Panic = 7,
}

/// Drive parameters of the kicked-Ising reservoir.
pub struct QrcDrive(DriveParameters);

/// Dense unitary on `2^N` basis states.
pub struct QrcUnitary(UnitaryMatrix);

/// Percolation network of an effective Hamiltonian.
pub struct QrcNetwork(EffectiveNetwork);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: QrcStatus, msg: impl Into<String>) -> QrcStatus {
    set_error(msg.into());
    status
}

fn from_core(err: Error) -> QrcStatus {
    let status = match &err {
        Error::Config(_) | Error::Usage(_) => QrcStatus::Config,
        Error::Contract(_) => QrcStatus::InvalidArgument,
        Error::Numerical(_) | Error::InsufficientBins { .. } | Error::Diverged { .. } => QrcStatus::Numerical,
        Error::Io { .. } | Error::Ingest { .. } => QrcStatus::Io,
        Error::CacheMismatch { .. } | Error::MissingCache { .. } => QrcStatus::Cache,
    };
    fail(status, err.to_string())
}

fn guard(f: impl FnOnce() -> QrcStatus) -> QrcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(QrcStatus::Panic, "internal panic"),
    }
}

/// Message for the last failed call on this thread, or NULL if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qrc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qrc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates drive parameters with no disorder.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qrc_drive_new(
    num_qubits: u32,
    epsilon: f64,
    j0t: f64,
    alpha: f64,
    periods: u32,
    out: *mut *mut QrcDrive,
) -> QrcStatus {
    guard(|| {
        if out.is_null() {
            return fail(QrcStatus::NullPointer, "out is NULL");
        }
        let params = DriveParameters {
            num_qubits: num_qubits as usize,
            epsilon,
            j0t,
            alpha,
            periods: periods as usize,
            ..DriveParameters::default()
        };
        if let Err(e) = params.validate() {
            return from_core(e);
        }
        *out = Box::into_raw(Box::new(QrcDrive(params)));
        QrcStatus::Ok
    })
}

/// Enables onsite disorder fields drawn from Uniform[0, width] with `seed`.
///
/// # Safety
/// `drive` must be a live handle from [`qrc_drive_new`].
#[no_mangle]
pub unsafe extern "C" fn qrc_drive_set_disorder(drive: *mut QrcDrive, width: f64, seed: u64) -> QrcStatus {
    guard(|| {
        let Some(d) = drive.as_mut() else {
            return fail(QrcStatus::NullPointer, "drive is NULL");
        };
        let mut params = d.0.clone();
        params.disorder_width = width;
        params.seed = seed;
        if let Err(e) = params.validate() {
            return from_core(e);
        }
        d.0 = params;
        QrcStatus::Ok
    })
}

/// # Safety
/// `drive` must be NULL or a handle from [`qrc_drive_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qrc_drive_free(drive: *mut QrcDrive) {
    if !drive.is_null() {
        drop(Box::from_raw(drive));
    }
}

unsafe fn build_unitary(
    drive: *const QrcDrive,
    out: *mut *mut QrcUnitary,
    build: fn(&DriveParameters) -> qrc_core::Result<UnitaryMatrix>,
) -> QrcStatus {
    guard(|| {
        let Some(d) = drive.as_ref() else {
            return fail(QrcStatus::NullPointer, "drive is NULL");
        };
        if out.is_null() {
            return fail(QrcStatus::NullPointer, "out is NULL");
        }
        match build(&d.0) {
            Ok(u) => {
                *out = Box::into_raw(Box::new(QrcUnitary(u)));
                QrcStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// One drive period `F = U2 U1`.
///
/// # Safety
/// `drive` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qrc_floquet_operator(drive: *const QrcDrive, out: *mut *mut QrcUnitary) -> QrcStatus {
    build_unitary(drive, out, dynamics::floquet_operator)
}

/// `F^n` for the drive's period count.
///
/// # Safety
/// `drive` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qrc_propagator(drive: *const QrcDrive, out: *mut *mut QrcUnitary) -> QrcStatus {
    build_unitary(drive, out, dynamics::propagator)
}

/// Side length `2^N` of the matrix, or 0 for NULL.
///
/// # Safety
/// `u` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qrc_unitary_dim(u: *const QrcUnitary) -> usize {
    u.as_ref().map_or(0, |u| u.0.dim())
}

/// Copies the entries into `out` (row-major, interleaved, `2 * dim * dim` doubles).
///
/// # Safety
/// `u` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qrc_unitary_entries(u: *const QrcUnitary, out: *mut f64, len: usize) -> QrcStatus {
    guard(|| {
        let Some(u) = u.as_ref() else {
            return fail(QrcStatus::NullPointer, "unitary is NULL");
        };
        if out.is_null() {
            return fail(QrcStatus::NullPointer, "out is NULL");
        }
        let need = 2 * u.0.dim() * u.0.dim();
        if len != need {
            return fail(QrcStatus::InvalidArgument, format!("buffer holds {len} doubles, need {need}"));
        }
        let out = std::slice::from_raw_parts_mut(out, len);
        for (pair, z) in out.chunks_exact_mut(2).zip(u.0.matrix().iter()) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        QrcStatus::Ok
    })
}

/// # Safety
/// `u` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qrc_unitary_free(u: *mut QrcUnitary) {
    if !u.is_null() {
        drop(Box::from_raw(u));
    }
}

unsafe fn read_complex(ptr: *const f64, dim: usize) -> Vec<Complex64> {
    std::slice::from_raw_parts(ptr, 2 * dim)
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect()
}

/// Applies `u` to a normalized state of length `dim` (interleaved in and out).
///
/// # Safety
/// `state_in` and `state_out` must each hold `2 * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn qrc_evolve(
    u: *const QrcUnitary,
    state_in: *const f64,
    state_out: *mut f64,
    dim: usize,
) -> QrcStatus {
    guard(|| {
        let Some(u) = u.as_ref() else {
            return fail(QrcStatus::NullPointer, "unitary is NULL");
        };
        if state_in.is_null() || state_out.is_null() {
            return fail(QrcStatus::NullPointer, "state buffer is NULL");
        }
        let state = match QuantumState::new(read_complex(state_in, dim).into()) {
            Ok(s) => s,
            Err(e) => return from_core(e),
        };
        match dynamics::evolve(&state, &u.0) {
            Ok(next) => {
                let out = std::slice::from_raw_parts_mut(state_out, 2 * dim);
                for (pair, z) in out.chunks_exact_mut(2).zip(next.amplitudes().iter()) {
                    pair[0] = z.re;
                    pair[1] = z.im;
                }
                QrcStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Product state of `num_qubits` Bloch angles, written to `out` (`2 * 2^N` doubles).
///
/// # Safety
/// `thetas` and `phis` must hold `num_qubits` doubles; `out` must hold `out_len`.
#[no_mangle]
pub unsafe extern "C" fn qrc_product_state(
    thetas: *const f64,
    phis: *const f64,
    num_qubits: usize,
    out: *mut f64,
    out_len: usize,
) -> QrcStatus {
    guard(|| {
        if thetas.is_null() || phis.is_null() || out.is_null() {
            return fail(QrcStatus::NullPointer, "angle or output buffer is NULL");
        }
        if num_qubits == 0 || num_qubits > 30 || out_len != 2 << num_qubits {
            return fail(
                QrcStatus::InvalidArgument,
                format!("output holds {out_len} doubles, need 2 * 2^{num_qubits}"),
            );
        }
        let th = std::slice::from_raw_parts(thetas, num_qubits).to_vec();
        let ph = std::slice::from_raw_parts(phis, num_qubits).to_vec();
        let enc = match qrc_core::data::EncodedSample::new(th, ph) {
            Ok(e) => e,
            Err(e) => return from_core(e),
        };
        let state = qrc_core::data::prepare_state(&enc);
        let out = std::slice::from_raw_parts_mut(out, out_len);
        for (pair, z) in out.chunks_exact_mut(2).zip(state.amplitudes().iter()) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        QrcStatus::Ok
    })
}

/// Exact outcome probabilities of a state, z-scored across outcomes.
///
/// # Safety
/// `state` must hold `2 * dim` doubles and `out` `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn qrc_standardized_probabilities(state: *const f64, dim: usize, out: *mut f64) -> QrcStatus {
    guard(|| {
        if state.is_null() || out.is_null() {
            return fail(QrcStatus::NullPointer, "buffer is NULL");
        }
        let probs: Vec<f64> = read_complex(state, dim).iter().map(|z| z.norm_sqr()).collect();
        std::slice::from_raw_parts_mut(out, dim).copy_from_slice(&standardize(&probs));
        QrcStatus::Ok
    })
}

/// Effective Hamiltonian of a one-period operator and its percolation network.
///
/// # Safety
/// `floquet` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qrc_network_new(floquet: *const QrcUnitary, out: *mut *mut QrcNetwork) -> QrcStatus {
    guard(|| {
        let Some(f) = floquet.as_ref() else {
            return fail(QrcStatus::NullPointer, "floquet is NULL");
        };
        if out.is_null() {
            return fail(QrcStatus::NullPointer, "out is NULL");
        }
        match network::effective_hamiltonian(&f.0) {
            Ok(h) => {
                let net = network::percolation_network(&h, DEFAULT_WEIGHT_FLOOR);
                *out = Box::into_raw(Box::new(QrcNetwork(net)));
                QrcStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `net` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qrc_network_num_edges(net: *const QrcNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.edges().len())
}

/// # Safety
/// `net` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qrc_network_max_degree(net: *const QrcNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.max_degree())
}

/// Degree of every node, `2^N` entries.
///
/// # Safety
/// `net` must be a live handle and `out` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn qrc_network_degrees(net: *const QrcNetwork, out: *mut usize, len: usize) -> QrcStatus {
    guard(|| {
        let Some(n) = net.as_ref() else {
            return fail(QrcStatus::NullPointer, "network is NULL");
        };
        if out.is_null() {
            return fail(QrcStatus::NullPointer, "out is NULL");
        }
        if len != n.0.num_nodes() {
            return fail(
                QrcStatus::InvalidArgument,
                format!("buffer holds {len} entries, network has {} nodes", n.0.num_nodes()),
            );
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&n.0.degrees());
        QrcStatus::Ok
    })
}

/// Log-log least-squares slope and r² of the degree histogram.
///
/// # Safety
/// `net` must be a live handle; `slope` and `r_squared` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qrc_network_powerlaw(
    net: *const QrcNetwork,
    slope: *mut f64,
    r_squared: *mut f64,
) -> QrcStatus {
    guard(|| {
        let Some(n) = net.as_ref() else {
            return fail(QrcStatus::NullPointer, "network is NULL");
        };
        if slope.is_null() || r_squared.is_null() {
            return fail(QrcStatus::NullPointer, "output is NULL");
        }
        match network::powerlaw_diagnostic(&network::degree_distribution(&n.0)) {
            Ok(fit) => {
                *slope = fit.slope;
                *r_squared = fit.r_squared;
                QrcStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `net` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qrc_network_free(net: *mut QrcNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}
