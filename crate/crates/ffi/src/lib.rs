//! C interface to `swa-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_read`
//! style functions and released with the matching `*_free`. Every fallible
//! function returns an [`SwaStatus`]; on failure a description is available
//! from [`swa_last_error`] on the same thread. Panics never unwind into C.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use swa_core::evaluation::{estimate_parameters, perplexity, PointEstimates};
use swa_core::ingest::{
    filter_rare_artists, parse_play_logs, read_dataset_file, segment_sessions, write_dataset_file, FormatConfig,
    SessionGap, SessionizedDataset,
};
use swa_core::model::{load_checkpoint, save_checkpoint, Hyperparameters, ModelState, Variant};
use swa_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    NotFound = 4,
    Io = 5,
    Format = 6,
    Lookup = 7,
    Empty = 8,
    Checkpoint = 9,
    Internal = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwaVariant {
    Session = 0,
    Swa = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwaFormat {
    /// Tab-separated user, timestamp, artist id, artist name, track id, track name.
    Lastfm1k = 0,
    /// Tab-separated user, artist, RFC 3339 timestamp.
    Generic = 1,
}

/// Smoothing parameters. Fill with [`swa_hyperparameters_default`] and
/// override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SwaHyperparameters {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub variant: SwaVariant,
}

/// Sessionized play logs.
pub struct SwaDataset(SessionizedDataset);

/// A Gibbs chain.
pub struct SwaModel(ModelState);

/// Point estimates of a trained chain.
pub struct SwaEstimates(PointEstimates);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SwaStatus {
    match err {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => SwaStatus::NotFound,
        Error::Io { .. } | Error::Stream(_) => SwaStatus::Io,
        Error::FormatMismatch { .. } | Error::Malformed { .. } | Error::Serde(_) => SwaStatus::Format,
        Error::InvalidConfig { .. } => SwaStatus::InvalidConfig,
        Error::Empty(_) => SwaStatus::Empty,
        Error::Lookup { .. } => SwaStatus::Lookup,
        Error::Checkpoint(_) => SwaStatus::Checkpoint,
        _ => SwaStatus::Internal,
    }
}

struct Fail(SwaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> SwaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SwaStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SwaStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(SwaStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(SwaStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn string<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(SwaStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SwaStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn path(p: *const c_char, name: &str) -> Result<PathBuf, Fail> {
    string(p, name).map(PathBuf::from)
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(SwaStatus::NullArgument, format!("`{name}` is null")));
    }
    out.write(value);
    Ok(())
}

/// Message describing the most recent failure on this thread, or NULL. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn swa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn swa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- datasets ---------------------------------------------------------------

/// Reads a sessionized dataset file written by `swa ingest`.
#[no_mangle]
pub unsafe extern "C" fn swa_dataset_read(file: *const c_char, out: *mut *mut SwaDataset) -> SwaStatus {
    guard(|| {
        let ds = read_dataset_file(&path(file, "file")?)?;
        put(out, Box::into_raw(Box::new(SwaDataset(ds))), "out")
    })
}

/// Parses raw play logs, drops artists with at most `min_users_per_artist`
/// distinct users and splits sessions at gaps of `gap_minutes` or more.
#[no_mangle]
pub unsafe extern "C" fn swa_dataset_ingest(
    file: *const c_char,
    format: SwaFormat,
    gap_minutes: f64,
    min_users_per_artist: usize,
    out: *mut *mut SwaDataset,
) -> SwaStatus {
    guard(|| {
        let p = path(file, "file")?;
        let gap = SessionGap::from_minutes(gap_minutes)?;
        let config = match format {
            SwaFormat::Lastfm1k => FormatConfig::lastfm_1k(),
            SwaFormat::Generic => FormatConfig::generic(),
        };
        let reader = std::fs::File::open(&p).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?;
        let parsed = parse_play_logs(std::io::BufReader::new(reader), &config)?;
        let kept = filter_rare_artists(&parsed.logs, min_users_per_artist);
        put(
            out,
            Box::into_raw(Box::new(SwaDataset(segment_sessions(&kept, gap)))),
            "out",
        )
    })
}

/// Writes the dataset in the sessionized TSV format.
#[no_mangle]
pub unsafe extern "C" fn swa_dataset_write(dataset: *const SwaDataset, file: *const c_char) -> SwaStatus {
    guard(|| {
        let ds = borrow(dataset, "dataset")?;
        write_dataset_file(&path(file, "file")?, &ds.0, None)?;
        Ok(())
    })
}

/// Writes user, artist, session and log counts; any output may be NULL.
#[no_mangle]
pub unsafe extern "C" fn swa_dataset_stats(
    dataset: *const SwaDataset,
    users: *mut usize,
    artists: *mut usize,
    sessions: *mut usize,
    logs: *mut usize,
) -> SwaStatus {
    guard(|| {
        let ds = &borrow(dataset, "dataset")?.0;
        for (p, v) in [
            (users, ds.num_users()),
            (artists, ds.num_artists()),
            (sessions, ds.num_sessions()),
            (logs, ds.num_logs()),
        ] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn swa_dataset_free(dataset: *mut SwaDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

// ---- models -----------------------------------------------------------------

/// Default smoothing for `topics` topics over `num_artists` artists.
#[no_mangle]
pub extern "C" fn swa_hyperparameters_default(
    topics: usize,
    num_artists: usize,
    variant: SwaVariant,
) -> SwaHyperparameters {
    let hp = Hyperparameters::with_defaults(topics, num_artists, variant.into());
    SwaHyperparameters {
        topics: hp.topics,
        alpha: hp.alpha,
        beta: hp.beta,
        gamma: hp.gamma,
        rho: hp.rho,
        variant,
    }
}

impl From<SwaVariant> for Variant {
    fn from(v: SwaVariant) -> Self {
        match v {
            SwaVariant::Session => Variant::Session,
            SwaVariant::Swa => Variant::Swa,
        }
    }
}

/// Starts a chain on `dataset` from a random state drawn with `seed`.
#[no_mangle]
pub unsafe extern "C" fn swa_model_new(
    dataset: *const SwaDataset,
    hyperparameters: *const SwaHyperparameters,
    seed: u64,
    out: *mut *mut SwaModel,
) -> SwaStatus {
    guard(|| {
        let ds = &borrow(dataset, "dataset")?.0;
        let h = borrow(hyperparameters, "hyperparameters")?;
        let hp = Hyperparameters {
            topics: h.topics,
            alpha: h.alpha,
            beta: h.beta,
            gamma: h.gamma,
            rho: h.rho,
            variant: h.variant.into(),
        };
        let state = ModelState::init(ds, hp, seed)?;
        put(out, Box::into_raw(Box::new(SwaModel(state))), "out")
    })
}

/// Runs `sweeps` Gibbs sweeps. `log_joint` (may be NULL) receives the log
/// joint after the last sweep.
#[no_mangle]
pub unsafe extern "C" fn swa_model_sweep(model: *mut SwaModel, sweeps: u64, log_joint: *mut f64) -> SwaStatus {
    guard(|| {
        let m = &mut borrow_mut(model, "model")?.0;
        for _ in 0..sweeps {
            m.gibbs_sweep();
        }
        if !log_joint.is_null() {
            log_joint.write(m.joint_log_prob());
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn swa_model_sweeps_done(model: *const SwaModel, out: *mut u64) -> SwaStatus {
    guard(|| {
        let m = &borrow(model, "model")?.0;
        put(out, m.sweeps_done(), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn swa_model_save(model: *const SwaModel, file: *const c_char) -> SwaStatus {
    guard(|| {
        let m = &borrow(model, "model")?.0;
        save_checkpoint(&path(file, "file")?, m, "")?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn swa_model_load(file: *const c_char, out: *mut *mut SwaModel) -> SwaStatus {
    guard(|| {
        let (state, _) = load_checkpoint(&path(file, "file")?)?;
        put(out, Box::into_raw(Box::new(SwaModel(state))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn swa_model_free(model: *mut SwaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

// ---- estimates --------------------------------------------------------------

/// Point estimates from the chain's current state.
#[no_mangle]
pub unsafe extern "C" fn swa_estimates_new(model: *const SwaModel, out: *mut *mut SwaEstimates) -> SwaStatus {
    guard(|| {
        let m = &borrow(model, "model")?.0;
        put(
            out,
            Box::into_raw(Box::new(SwaEstimates(estimate_parameters(m)))),
            "out",
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn swa_estimates_load(file: *const c_char, out: *mut *mut SwaEstimates) -> SwaStatus {
    guard(|| {
        let est = PointEstimates::load(&path(file, "file")?)?;
        put(out, Box::into_raw(Box::new(SwaEstimates(est))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn swa_estimates_save(estimates: *const SwaEstimates, file: *const c_char) -> SwaStatus {
    guard(|| {
        let e = &borrow(estimates, "estimates")?.0;
        e.save(&path(file, "file")?, "")?;
        Ok(())
    })
}

/// Predictive probability that `user` plays `artist`.
#[no_mangle]
pub unsafe extern "C" fn swa_estimates_song_prob(
    estimates: *const SwaEstimates,
    user: *const c_char,
    artist: *const c_char,
    out: *mut f64,
) -> SwaStatus {
    guard(|| {
        let e = &borrow(estimates, "estimates")?.0;
        let p = e.song_prob(string(user, "user")?, string(artist, "artist")?)?;
        put(out, p, "out")
    })
}

/// Writes (lambda_0, lambda_1) of `user` into `out[0]`, `out[1]`.
#[no_mangle]
pub unsafe extern "C" fn swa_estimates_lambda(
    estimates: *const SwaEstimates,
    user: *const c_char,
    out: *mut f64,
) -> SwaStatus {
    guard(|| {
        let e = &borrow(estimates, "estimates")?.0;
        let id = string(user, "user")?;
        let u = e.user_index(id).ok_or_else(|| Error::Lookup {
            kind: "user",
            id: id.to_owned(),
        })?;
        if out.is_null() {
            return Err(Fail(SwaStatus::NullArgument, "`out` is null".into()));
        }
        out.write(e.lambda[u][0]);
        out.add(1).write(e.lambda[u][1]);
        Ok(())
    })
}

/// Perplexity of `test` under the estimates; unknown users and artists are
/// skipped. `skipped` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn swa_estimates_perplexity(
    estimates: *const SwaEstimates,
    test: *const SwaDataset,
    out: *mut f64,
    skipped: *mut usize,
) -> SwaStatus {
    guard(|| {
        let e = &borrow(estimates, "estimates")?.0;
        let t = &borrow(test, "test")?.0;
        let report = perplexity(t, e)?;
        if !skipped.is_null() {
            skipped.write(report.skipped);
        }
        put(out, report.perplexity, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn swa_estimates_free(estimates: *mut SwaEstimates) {
    if !estimates.is_null() {
        drop(Box::from_raw(estimates));
    }
}
