//! C ABI for `boson-bins`.
//!
//! Objects are opaque handles created by `bb_*_new`-style constructors and
//! released with the matching `bb_*_free`. Every fallible call returns a
//! [`BbStatus`]; on failure `bb_last_error_message` describes the error for
//! the calling thread. Matrices are passed as separate row-major real and
//! imaginary arrays, row = input mode. Mode numbers are 1-based.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use boson_bins::linalg::{fourier_matrix, haar_unitary};
use boson_bins::noise::{gram_interpolation, lossy_binned_distribution};
use boson_bins::partitions::{approx_binned_distribution, binned_distribution, equipartition, InputSpec, Method};
use boson_bins::validation::{bayes_update, tvd, SampleSet};
use boson_bins::{BinnedDistribution, ComplexMatrix, Error, GramMatrix, Partition, UnitaryMatrix, C64};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidPartition = 3,
    InvalidGram = 4,
    InvalidUnitary = 5,
    Numerical = 6,
    TooLarge = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Interferometer unitary.
pub struct BbUnitary(UnitaryMatrix);

/// Bins of output modes.
pub struct BbPartition(Partition);

/// Gram matrix of the photons' internal states.
pub struct BbGram(GramMatrix);

/// Binned photon-number distribution.
pub struct BbDistribution(BinnedDistribution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(err: &Error) -> BbStatus {
    match err {
        Error::InvalidPartition(_) => BbStatus::InvalidPartition,
        Error::InvalidGram(_) => BbStatus::InvalidGram,
        Error::InvalidUnitary(_) => BbStatus::InvalidUnitary,
        Error::Numerical(_) => BbStatus::Numerical,
        Error::TooLarge(_) => BbStatus::TooLarge,
        _ => BbStatus::InvalidArgument,
    }
}

fn fail(status: BbStatus, message: impl Into<String>) -> BbStatus {
    set_error(message.into());
    status
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), BbStatus>) -> BbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BbStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(BbStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, BbStatus>;
}

impl<T> OrStatus<T> for boson_bins::Result<T> {
    fn or_status(self) -> Result<T, BbStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> BbStatus {
    fail(BbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, BbStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], BbStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), BbStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn complex_matrix(dim: usize, re: *const f64, im: *const f64) -> Result<ComplexMatrix, BbStatus> {
    let len = dim.checked_mul(dim).ok_or_else(|| fail(BbStatus::InvalidArgument, "dimension overflows"))?;
    let re = slice(re, len, "re")?;
    let im = slice(im, len, "im")?;
    Ok(ComplexMatrix::from_fn(dim, dim, |r, c| C64::new(re[r * dim + c], im[r * dim + c])))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call from the same thread.
#[no_mangle]
pub extern "C" fn bb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Haar-random `m x m` unitary, reproducible from `seed`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bb_unitary_haar(m: usize, seed: u64, out: *mut *mut BbUnitary) -> BbStatus {
    guard(|| store(out, BbUnitary(haar_unitary(m, seed).or_status()?)))
}

/// `m`-mode discrete Fourier interferometer.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bb_unitary_fourier(m: usize, out: *mut *mut BbUnitary) -> BbStatus {
    guard(|| store(out, BbUnitary(fourier_matrix(m).or_status()?)))
}

/// Unitary from row-major `m*m` arrays; rejected if not unitary.
///
/// # Safety
/// `re` and `im` must point to `m*m` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bb_unitary_from_arrays(
    m: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut BbUnitary,
) -> BbStatus {
    guard(|| {
        let a = complex_matrix(m, re, im)?;
        store(out, BbUnitary(UnitaryMatrix::new(a).or_status()?))
    })
}

/// Number of modes, 0 for a null handle.
///
/// # Safety
/// `u` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bb_unitary_dim(u: *const BbUnitary) -> usize {
    u.as_ref().map_or(0, |u| u.0.dim())
}

/// # Safety
/// `u` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bb_unitary_free(u: *mut BbUnitary) {
    if !u.is_null() {
        drop(Box::from_raw(u));
    }
}

/// Partition of `total_modes` outputs. Bin `z` holds the `lengths[z]`
/// consecutive entries of `modes` (1-based); `num_bins` bins in total.
///
/// # Safety
/// `modes` must hold `sum(lengths)` entries, `lengths` `num_bins`.
#[no_mangle]
pub unsafe extern "C" fn bb_partition_new(
    total_modes: usize,
    modes: *const usize,
    lengths: *const usize,
    num_bins: usize,
    out: *mut *mut BbPartition,
) -> BbStatus {
    guard(|| {
        let lengths = slice(lengths, num_bins, "lengths")?;
        let total = lengths
            .iter()
            .try_fold(0usize, |a, &l| a.checked_add(l))
            .ok_or_else(|| fail(BbStatus::InvalidArgument, "bin lengths overflow"))?;
        let modes = slice(modes, total, "modes")?;
        let mut bins = Vec::with_capacity(num_bins);
        let mut start = 0;
        for &l in lengths {
            bins.push(modes[start..start + l].to_vec());
            start += l;
        }
        store(out, BbPartition(Partition::new(bins, total_modes).or_status()?))
    })
}

/// `K` contiguous bins of (nearly) equal size.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bb_partition_equal(total_modes: usize, k: usize, out: *mut *mut BbPartition) -> BbStatus {
    guard(|| store(out, BbPartition(equipartition(total_modes, k).or_status()?)))
}

/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bb_partition_num_bins(p: *const BbPartition) -> usize {
    p.as_ref().map_or(0, |p| p.0.num_bins())
}

/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bb_partition_free(p: *mut BbPartition) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// `n x n` Gram matrix with all pairwise overlaps equal to `x`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bb_gram_interpolation(n: usize, x: f64, out: *mut *mut BbGram) -> BbStatus {
    guard(|| store(out, BbGram(gram_interpolation(n, x).or_status()?)))
}

/// Gram matrix from row-major `n*n` arrays; must be Hermitian, PSD, unit diagonal.
///
/// # Safety
/// `re` and `im` must point to `n*n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bb_gram_from_arrays(
    n: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut BbGram,
) -> BbStatus {
    guard(|| {
        let a = complex_matrix(n, re, im)?;
        store(out, BbGram(GramMatrix::new(a).or_status()?))
    })
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bb_gram_free(g: *mut BbGram) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

unsafe fn inputs<'a>(
    u: *const BbUnitary,
    gram: *const BbGram,
    partition: *const BbPartition,
) -> Result<(&'a UnitaryMatrix, InputSpec, &'a Partition), BbStatus> {
    let u = &get(u, "unitary")?.0;
    let gram = &get(gram, "gram")?.0;
    let partition = &get(partition, "partition")?.0;
    let input = InputSpec::standard(u.dim(), gram.clone()).or_status()?;
    Ok((u, input, partition))
}

/// Exact distribution for `n = dim(gram)` photons in inputs `1..=n`.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bb_binned_distribution(
    u: *const BbUnitary,
    gram: *const BbGram,
    partition: *const BbPartition,
    out: *mut *mut BbDistribution,
) -> BbStatus {
    guard(|| {
        let (u, input, partition) = inputs(u, gram, partition)?;
        let d = binned_distribution(u, &input, partition, &Method::Ryser).or_status()?;
        store(out, BbDistribution(d))
    })
}

/// Distribution with uniform transmissivity; the last axis counts lost photons.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bb_lossy_binned_distribution(
    u: *const BbUnitary,
    gram: *const BbGram,
    partition: *const BbPartition,
    transmissivity: f64,
    out: *mut *mut BbDistribution,
) -> BbStatus {
    guard(|| {
        let (u, input, partition) = inputs(u, gram, partition)?;
        let d = lossy_binned_distribution(u, &input, partition, transmissivity, &Method::Ryser).or_status()?;
        store(out, BbDistribution(d))
    })
}

/// Glynn-estimated distribution with target l1 error `beta`.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bb_approx_binned_distribution(
    u: *const BbUnitary,
    gram: *const BbGram,
    partition: *const BbPartition,
    beta: f64,
    seed: u64,
    out: *mut *mut BbDistribution,
) -> BbStatus {
    guard(|| {
        let (u, input, partition) = inputs(u, gram, partition)?;
        let d = approx_binned_distribution(u, &input, partition, beta, seed).or_status()?;
        store(out, BbDistribution(d.distribution))
    })
}

/// Number of axes, 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bb_distribution_num_bins(d: *const BbDistribution) -> usize {
    d.as_ref().map_or(0, |d| d.0.num_bins())
}

/// Number of stored outcomes, 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bb_distribution_len(d: *const BbDistribution) -> usize {
    d.as_ref().map_or(0, |d| d.0.len())
}

/// Copy the axis sizes into `shape` (`capacity` entries available).
///
/// # Safety
/// `d` must be live; `shape` must hold `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn bb_distribution_shape(
    d: *const BbDistribution,
    shape: *mut usize,
    capacity: usize,
) -> BbStatus {
    guard(|| {
        let src = get(d, "distribution")?.0.shape();
        copy_out(src, shape, capacity)
    })
}

/// Copy the probabilities, row-major with the last axis fastest.
///
/// # Safety
/// `d` must be live; `probs` must hold `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn bb_distribution_probabilities(
    d: *const BbDistribution,
    probs: *mut f64,
    capacity: usize,
) -> BbStatus {
    guard(|| {
        let src = get(d, "distribution")?.0.probabilities();
        copy_out(src, probs, capacity)
    })
}

unsafe fn copy_out<T: Copy>(src: &[T], dst: *mut T, capacity: usize) -> Result<(), BbStatus> {
    if capacity < src.len() {
        return Err(fail(BbStatus::BufferTooSmall, format!("buffer holds {capacity} entries, need {}", src.len())));
    }
    if src.is_empty() {
        return Ok(());
    }
    if dst.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// `P(k)` for the `len` counts in `k`; 0 outside the support or on bad input.
///
/// # Safety
/// `d` must be null or live; `k` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn bb_distribution_prob(d: *const BbDistribution, k: *const usize, len: usize) -> f64 {
    let Some(d) = d.as_ref() else { return 0.0 };
    if len != d.0.num_bins() || k.is_null() {
        return 0.0;
    }
    d.0.prob(std::slice::from_raw_parts(k, len))
}

/// # Safety
/// `d` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bb_distribution_free(d: *mut BbDistribution) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// `sum_k |p(k) - q(k)|`.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bb_tvd(p: *const BbDistribution, q: *const BbDistribution, out: *mut f64) -> BbStatus {
    guard(|| {
        let v = tvd(&get(p, "p")?.0, &get(q, "q")?.0).or_status()?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = v;
        Ok(())
    })
}

/// Bayes comparison of `p0` against `pa` on `num_samples` binned records of
/// `width` counts each (row-major). Writes `p_null` and `ln chi`.
///
/// # Safety
/// Handles must be live; `samples` must hold `num_samples*width` entries;
/// outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn bb_bayes_update(
    p0: *const BbDistribution,
    pa: *const BbDistribution,
    samples: *const usize,
    num_samples: usize,
    width: usize,
    floor: f64,
    p_null: *mut f64,
    log_chi: *mut f64,
) -> BbStatus {
    guard(|| {
        let len =
            num_samples.checked_mul(width).ok_or_else(|| fail(BbStatus::InvalidArgument, "sample count overflows"))?;
        let flat = slice(samples, len, "samples")?;
        let records = if width == 0 { Vec::new() } else { flat.chunks(width).map(<[usize]>::to_vec).collect() };
        let set = SampleSet::binned(width, records).or_status()?;
        let report = bayes_update(&set, &get(p0, "p0")?.0, &get(pa, "pa")?.0, floor).or_status()?;
        if p_null.is_null() || log_chi.is_null() {
            return Err(null("output"));
        }
        *p_null = report.p_null;
        *log_chi = report.log_chi;
        Ok(())
    })
}
