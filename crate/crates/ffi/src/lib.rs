//! C ABI over `pqwalk`.
//!
//! Objects are opaque heap handles released with their `*_free` function.
//! Every fallible call returns a [`PqwStatus`]; on failure the message is
//! available from [`pqw_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pqwalk::asymptotics::{initial_density, project_asymptotic, reduced_coin_state, BellCoinState};
use pqwalk::attractors::{orthonormal_basis, orthonormal_basis_1p, AttractorBasis};
use pqwalk::channel::PercolationChannel;
use pqwalk::entanglement::{concurrence, negativity};
use pqwalk::hilbert::{Topology, TopologyKind};
use pqwalk::linalg::{c64, hs_distance, DensityMatrix};
use pqwalk::percolation::PercolationModel;
use pqwalk::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Guard = 3,
    DimensionMismatch = 4,
    Numerical = 5,
    Panic = 6,
}

/// Graph kind for [`pqw_topology_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqwTopologyKind {
    Line = 0,
    Circle = 1,
}

/// A line or circle of N sites.
pub struct PqwTopology(Topology);

/// Orthonormal attractor basis of a topology.
pub struct PqwAttractorBasis {
    basis: AttractorBasis,
    topology: Topology,
}

/// A density matrix.
pub struct PqwDensityMatrix(DensityMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PqwStatus {
    match e {
        Error::Guard(_) => PqwStatus::Guard,
        Error::DimensionMismatch { .. } => PqwStatus::DimensionMismatch,
        Error::NotOrthonormal(_) | Error::Dependent(_) => PqwStatus::Numerical,
        _ => PqwStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guarded(f: impl FnOnce() -> Result<(), (PqwStatus, String)>) -> PqwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PqwStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PqwStatus::Panic
        }
    }
}

fn lib<T>(r: pqwalk::Result<T>) -> Result<T, (PqwStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (PqwStatus, String) {
    (PqwStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or point to a live `T`.
unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (PqwStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `out` must be null or valid for one write.
unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), (PqwStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pqw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a topology with `n_sites` sites.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn pqw_topology_new(kind: PqwTopologyKind, n_sites: usize, out: *mut *mut PqwTopology) -> PqwStatus {
    guarded(|| {
        let kind = match kind {
            PqwTopologyKind::Line => TopologyKind::Line,
            PqwTopologyKind::Circle => TopologyKind::Circle,
        };
        let t = lib(Topology::new(kind, n_sites))?;
        put(out, Box::into_raw(Box::new(PqwTopology(t))), "out")
    })
}

/// # Safety
/// `t` must be null or a handle from [`pqw_topology_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pqw_topology_free(t: *mut PqwTopology) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Builds the orthonormal attractor basis for one or two particles.
///
/// # Safety
/// `t` must be a live topology handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn pqw_attractor_basis_new(
    t: *const PqwTopology,
    particles: usize,
    out: *mut *mut PqwAttractorBasis,
) -> PqwStatus {
    guarded(|| {
        let topology = deref(t, "topology")?.0;
        let basis = match particles {
            1 => lib(orthonormal_basis_1p(&topology))?,
            2 => lib(orthonormal_basis(&topology))?,
            p => return Err((PqwStatus::InvalidArgument, format!("particles must be 1 or 2, got {p}"))),
        };
        put(out, Box::into_raw(Box::new(PqwAttractorBasis { basis, topology })), "out")
    })
}

/// Writes the sector sizes for eigenvalues 1, i, −i, −1 to `sizes[0..4]`.
///
/// # Safety
/// `b` must be a live basis handle and `sizes` valid for four writes.
#[no_mangle]
pub unsafe extern "C" fn pqw_attractor_basis_sector_sizes(b: *const PqwAttractorBasis, sizes: *mut usize) -> PqwStatus {
    guarded(|| {
        let b = deref(b, "basis")?;
        if sizes.is_null() {
            return Err(null("sizes"));
        }
        for (k, s) in b.basis.sector_sizes().into_iter().enumerate() {
            sizes.add(k).write(s);
        }
        Ok(())
    })
}

/// # Safety
/// `b` must be null or a basis handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pqw_attractor_basis_free(b: *mut PqwAttractorBasis) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Two walkers on sites `x`, `y` with Bell coin a|ψ+⟩ + b|ψ−⟩ + c|φ+⟩ + d|φ−⟩.
///
/// `coin` holds `[re a, im a, re b, im b, re c, im c, re d, im d]` and must be normalized.
///
/// # Safety
/// `t` must be a live topology, `coin` valid for eight reads and `out` for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn pqw_density_from_bell(
    t: *const PqwTopology,
    x: usize,
    y: usize,
    coin: *const f64,
    out: *mut *mut PqwDensityMatrix,
) -> PqwStatus {
    guarded(|| {
        let topology = deref(t, "topology")?.0;
        if coin.is_null() {
            return Err(null("coin"));
        }
        let v = std::slice::from_raw_parts(coin, 8);
        let coin = lib(BellCoinState::new(c64(v[0], v[1]), c64(v[2], v[3]), c64(v[4], v[5]), c64(v[6], v[7])))?;
        let rho = lib(initial_density(&topology, x, y, &coin))?;
        put(out, Box::into_raw(Box::new(PqwDensityMatrix(rho))), "out")
    })
}

/// Matrix side length.
///
/// # Safety
/// `rho` must be a live density handle and `dim` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pqw_density_dim(rho: *const PqwDensityMatrix, dim: *mut usize) -> PqwStatus {
    guarded(|| put(dim, deref(rho, "rho")?.0.nrows(), "dim"))
}

/// Copies the matrix row-major as interleaved `(re, im)` pairs; `len` is the buffer length in doubles.
///
/// # Safety
/// `rho` must be a live density handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pqw_density_copy(rho: *const PqwDensityMatrix, buf: *mut f64, len: usize) -> PqwStatus {
    guarded(|| {
        let m = &deref(rho, "rho")?.0;
        let need = 2 * m.nrows() * m.ncols();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < need {
            return Err((PqwStatus::DimensionMismatch, format!("buffer holds {len} doubles, need {need}")));
        }
        let out = std::slice::from_raw_parts_mut(buf, need);
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                let k = 2 * (r * m.ncols() + c);
                out[k] = z.re;
                out[k + 1] = z.im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `rho` must be null or a density handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pqw_density_free(rho: *mut PqwDensityMatrix) {
    if !rho.is_null() {
        drop(Box::from_raw(rho));
    }
}

/// Applies the exact channel with uniform break probability `p` for `steps` steps.
///
/// # Safety
/// Handles must be live and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn pqw_evolve_exact(
    t: *const PqwTopology,
    particles: usize,
    p: f64,
    rho: *const PqwDensityMatrix,
    steps: usize,
    out: *mut *mut PqwDensityMatrix,
) -> PqwStatus {
    guarded(|| {
        let topology = deref(t, "topology")?.0;
        let rho = &deref(rho, "rho")?.0;
        let model = lib(PercolationModel::uniform(&topology, p))?;
        let channel = lib(PercolationChannel::new(&topology, &model, particles))?;
        let result = lib(channel.evolve(rho, steps))?;
        put(out, Box::into_raw(Box::new(PqwDensityMatrix(result))), "out")
    })
}

/// Asymptotic state at time `n` predicted by the attractor basis.
///
/// # Safety
/// Handles must be live and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn pqw_project_asymptotic(
    b: *const PqwAttractorBasis,
    rho: *const PqwDensityMatrix,
    n: u64,
    out: *mut *mut PqwDensityMatrix,
) -> PqwStatus {
    guarded(|| {
        let b = deref(b, "basis")?;
        let rho = &deref(rho, "rho")?.0;
        if rho.nrows() != b.basis.dim() {
            return Err((
                PqwStatus::DimensionMismatch,
                format!("state has dimension {}, basis of {} expects {}", rho.nrows(), b.topology, b.basis.dim()),
            ));
        }
        let result = lib(project_asymptotic(rho, &b.basis, n))?;
        put(out, Box::into_raw(Box::new(PqwDensityMatrix(result))), "out")
    })
}

/// Two-qubit coin state after tracing out both positions.
///
/// # Safety
/// `rho` must be a live two-particle density handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn pqw_reduced_coin_state(rho: *const PqwDensityMatrix, out: *mut *mut PqwDensityMatrix) -> PqwStatus {
    guarded(|| {
        let result = lib(reduced_coin_state(&deref(rho, "rho")?.0))?;
        put(out, Box::into_raw(Box::new(PqwDensityMatrix(result))), "out")
    })
}

/// Hilbert–Schmidt distance between two states of equal dimension.
///
/// # Safety
/// Handles must be live and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pqw_hs_distance(a: *const PqwDensityMatrix, b: *const PqwDensityMatrix, out: *mut f64) -> PqwStatus {
    guarded(|| {
        let (a, b) = (&deref(a, "a")?.0, &deref(b, "b")?.0);
        if a.nrows() != b.nrows() {
            return Err((PqwStatus::DimensionMismatch, format!("dimensions {} and {}", a.nrows(), b.nrows())));
        }
        put(out, hs_distance(a, b), "out")
    })
}

/// Negativity for the split `d1 × d2`.
///
/// # Safety
/// `rho` must be a live density handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pqw_negativity(rho: *const PqwDensityMatrix, d1: usize, d2: usize, out: *mut f64) -> PqwStatus {
    guarded(|| {
        let v = lib(negativity(&deref(rho, "rho")?.0, (d1, d2)))?;
        put(out, v, "out")
    })
}

/// Concurrence of a two-qubit (4×4) state.
///
/// # Safety
/// `rho` must be a live density handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pqw_concurrence(rho: *const PqwDensityMatrix, out: *mut f64) -> PqwStatus {
    guarded(|| {
        let v = lib(concurrence(&deref(rho, "rho")?.0))?;
        put(out, v, "out")
    })
}
