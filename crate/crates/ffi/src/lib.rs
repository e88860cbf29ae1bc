//! C ABI for the `thuwb` toolkit.
//!
//! Every function returns a [`ThuwbStatus`]. On failure the message is kept
//! per thread and read with [`thuwb_last_error`]. Handles are opaque and
//! released with the matching `_free` function; passing NULL to a `_free`
//! function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thuwb::channel::{generate_channel, ChannelModel, ChannelRealization};
use thuwb::fec::{conv_encode, viterbi_decode, ConvCodeSpec};
use thuwb::harness::{run_experiment, run_link_trial, Experiment, LinkScenario, LinkSetup};
use thuwb::pulse::{gaussian_derivative_pulse, GaussianPulseSpec};
use thuwb::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThuwbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InfeasibleMask = 3,
    InsufficientData = 4,
    Parse = 5,
    Io = 6,
    /// Output buffer too short; the required length was still written.
    BufferTooSmall = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

fn status_of(e: &Error) -> ThuwbStatus {
    match e {
        Error::InvalidParameter(_) | Error::InsufficientSupport { .. } => ThuwbStatus::InvalidParameter,
        Error::InfeasibleMask(_) => ThuwbStatus::InfeasibleMask,
        Error::InsufficientData(_) => ThuwbStatus::InsufficientData,
        Error::Parse(_) => ThuwbStatus::Parse,
        Error::Io(_) => ThuwbStatus::Io,
        Error::Stage { source, .. } => status_of(source),
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(ThuwbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: ThuwbStatus, msg: &str) -> Result<T, Failure> {
    Err(Failure(status, msg.to_string()))
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ThuwbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ThuwbStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            ThuwbStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(ThuwbStatus::NullPointer, &format!("{what} is NULL"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(ThuwbStatus::InvalidParameter, &format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(ThuwbStatus::NullPointer, &format!("{what} is NULL"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(ThuwbStatus::NullPointer, format!("{what} is NULL")))
}

/// Copy `src` into `(dst, cap)`, storing the full length in `out_len`.
unsafe fn write_out<T: Copy>(src: &[T], dst: *mut T, cap: usize, out_len: *mut usize) -> Result<(), Failure> {
    *out_arg(out_len, "out_len")? = src.len();
    if src.len() > cap {
        return fail(
            ThuwbStatus::BufferTooSmall,
            &format!("buffer holds {cap} values, {} needed", src.len()),
        );
    }
    if !src.is_empty() {
        if dst.is_null() {
            return fail(ThuwbStatus::NullPointer, "output buffer is NULL");
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    }
    Ok(())
}

fn boxed<T>(v: T, out: *mut *mut T) -> Result<(), Failure> {
    let slot = unsafe { out_arg(out, "output handle")? };
    *slot = Box::into_raw(Box::new(v));
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(ThuwbStatus::NullPointer, "handle is NULL".into()))
}

unsafe fn handle_mut<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(ThuwbStatus::NullPointer, "handle is NULL".into()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn thuwb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a success.
///
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn thuwb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Sample a unit-energy Gaussian-derivative pulse on a grid of `sample_period`
/// seconds over `[-half_support, half_support]`.
///
/// `start_index` receives the grid index of the first sample.
///
/// # Safety
/// `out` must hold `cap` doubles; `out_len` and `start_index` must be valid.
#[no_mangle]
pub unsafe extern "C" fn thuwb_gaussian_pulse(
    derivative_order: u32,
    sigma: f64,
    sample_period: f64,
    half_support: f64,
    out: *mut f64,
    cap: usize,
    out_len: *mut usize,
    start_index: *mut i64,
) -> ThuwbStatus {
    guard(|| {
        let spec = GaussianPulseSpec::new(derivative_order, sigma)?;
        let w = gaussian_derivative_pulse(&spec, sample_period, half_support)?;
        *out_arg(start_index, "start_index")? = w.start_index();
        write_out(w.samples(), out, cap, out_len)
    })
}

/// Rate-1/2 convolutional encoding of 0/1 bytes with zero tail.
///
/// # Safety
/// `bits` must hold `n_bits` bytes and `out` `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn thuwb_conv_encode(
    bits: *const u8,
    n_bits: usize,
    out: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> ThuwbStatus {
    guard(|| {
        let coded = conv_encode(slice_arg(bits, n_bits, "bits")?, &ConvCodeSpec::default())?;
        write_out(&coded, out, cap, out_len)
    })
}

/// Viterbi decoding of a terminated block; positive soft values favour 0.
///
/// # Safety
/// `llrs` must hold `n` doubles and `out` `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn thuwb_viterbi_decode(
    llrs: *const f64,
    n: usize,
    out: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> ThuwbStatus {
    guard(|| {
        let bits = viterbi_decode(slice_arg(llrs, n, "llrs")?, &ConvCodeSpec::default())?;
        write_out(&bits, out, cap, out_len)
    })
}

/// One multipath channel realization.
pub struct ThuwbChannel(ChannelRealization);

/// Draw a realization of `model` ("CM1".."CM4" or "AWGN") from `seed`.
///
/// # Safety
/// `model` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn thuwb_channel_generate(
    model: *const c_char,
    seed: u64,
    out: *mut *mut ThuwbChannel,
) -> ThuwbStatus {
    guard(|| {
        let m = ChannelModel::from_tag(str_arg(model, "model")?)?;
        let params = m
            .params()
            .ok_or_else(|| Failure(ThuwbStatus::InvalidParameter, "model has no preset".into()))?;
        let ch = generate_channel(&params, m, &mut ChaCha8Rng::seed_from_u64(seed))?;
        boxed(ThuwbChannel(ch), out)
    })
}

/// Number of paths in the realization.
///
/// # Safety
/// `ch` must come from [`thuwb_channel_generate`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn thuwb_channel_path_count(ch: *const ThuwbChannel, out: *mut usize) -> ThuwbStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(ch)?.0.paths().len();
        Ok(())
    })
}

/// Copy path delays (seconds) and gains into two buffers of `cap` doubles.
///
/// # Safety
/// `delays` and `gains` must each hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn thuwb_channel_paths(
    ch: *const ThuwbChannel,
    delays: *mut f64,
    gains: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> ThuwbStatus {
    guard(|| {
        let paths = handle(ch)?.0.paths();
        let d: Vec<f64> = paths.iter().map(|p| p.delay).collect();
        let g: Vec<f64> = paths.iter().map(|p| p.gain).collect();
        write_out(&d, delays, cap, out_len)?;
        write_out(&g, gains, cap, out_len)
    })
}

/// RMS delay spread of the realization, seconds.
///
/// # Safety
/// `ch` must come from [`thuwb_channel_generate`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn thuwb_channel_rms_delay_spread(ch: *const ThuwbChannel, out: *mut f64) -> ThuwbStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(ch)?.0.rms_delay_spread();
        Ok(())
    })
}

/// # Safety
/// `ch` must come from [`thuwb_channel_generate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn thuwb_channel_free(ch: *mut ThuwbChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// A prepared link scenario.
pub struct ThuwbLink(LinkSetup);

/// Outcome of one link trial.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ThuwbTrialResult {
    pub snr_db: f64,
    pub nmse: f64,
    pub packets: usize,
    pub packet_errors: usize,
    pub acquisition_tests: usize,
    pub acquired: bool,
    pub success: bool,
    /// The chain aborted; the message is available from [`thuwb_last_error`].
    pub aborted: bool,
}

/// Build a link from a TOML scenario; an empty string gives the defaults.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn thuwb_link_new(toml: *const c_char, out: *mut *mut ThuwbLink) -> ThuwbStatus {
    guard(|| {
        let sc = LinkScenario::from_toml(str_arg(toml, "toml")?)?;
        boxed(ThuwbLink(LinkSetup::new(&sc)?), out)
    })
}

/// Run realization `trial` at `distance` meters.
///
/// An aborted chain still returns `Ok` with `aborted` set and the message
/// stored as the last error.
///
/// # Safety
/// `link` must come from [`thuwb_link_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn thuwb_link_run_trial(
    link: *const ThuwbLink,
    trial: u64,
    distance: f64,
    out: *mut ThuwbTrialResult,
) -> ThuwbStatus {
    let mut aborted = None;
    let status = guard(|| {
        let l = handle(link)?;
        if distance.is_nan() || distance <= 0.0 {
            return fail(ThuwbStatus::InvalidParameter, "distance must be positive");
        }
        let r = run_link_trial(&l.0, trial, distance);
        *out_arg(out, "out")? = ThuwbTrialResult {
            snr_db: r.snr_db,
            nmse: r.nmse,
            packets: r.packets,
            packet_errors: r.packet_errors,
            acquisition_tests: r.acquisition_tests,
            acquired: r.acquired,
            success: r.success,
            aborted: r.error.is_some(),
        };
        aborted = r.error;
        Ok(())
    });
    if let Some(msg) = aborted {
        set_error(msg);
    }
    status
}

/// # Safety
/// `link` must come from [`thuwb_link_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn thuwb_link_free(link: *mut ThuwbLink) {
    if !link.is_null() {
        drop(Box::from_raw(link));
    }
}

/// A configured experiment.
pub struct ThuwbExperiment(Experiment);

/// Parse an experiment table with a `command` key, e.g. `command = "ber-study"`.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn thuwb_experiment_from_toml(
    toml: *const c_char,
    out: *mut *mut ThuwbExperiment,
) -> ThuwbStatus {
    guard(|| boxed(ThuwbExperiment(Experiment::from_toml(str_arg(toml, "toml")?)?), out))
}

/// # Safety
/// `e` must come from [`thuwb_experiment_from_toml`].
#[no_mangle]
pub unsafe extern "C" fn thuwb_experiment_set_seed(e: *mut ThuwbExperiment, seed: u64) -> ThuwbStatus {
    guard(|| {
        handle_mut(e)?.0.set_seed(seed);
        Ok(())
    })
}

/// # Safety
/// `e` must come from [`thuwb_experiment_from_toml`].
#[no_mangle]
pub unsafe extern "C" fn thuwb_experiment_set_trials(e: *mut ThuwbExperiment, trials: usize) -> ThuwbStatus {
    guard(|| Ok(handle_mut(e)?.0.set_trials(trials)?))
}

/// Run the experiment, writing CSVs and a manifest into `out_dir`.
/// `workers` = 0 uses every core; results do not depend on it.
///
/// # Safety
/// `e` must come from [`thuwb_experiment_from_toml`]; `out_dir` must be a
/// NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn thuwb_experiment_run(
    e: *const ThuwbExperiment,
    out_dir: *const c_char,
    workers: usize,
) -> ThuwbStatus {
    guard(|| {
        let dir = str_arg(out_dir, "out_dir")?;
        run_experiment(&handle(e)?.0, Path::new(dir), workers)?;
        Ok(())
    })
}

/// # Safety
/// `e` must come from [`thuwb_experiment_from_toml`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn thuwb_experiment_free(e: *mut ThuwbExperiment) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}
