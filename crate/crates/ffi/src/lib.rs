//! C ABI over the rpqds library.
//!
//! Objects are opaque heap handles created by `*_new` and released by the
//! matching `*_free`. Every fallible call returns an [`RpqdsStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`rpqds_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rpqds::channel::{ScfParams, SnsParams, SystemParams};
use rpqds::error::Error;
use rpqds::finite::FiniteParams;
use rpqds::optimize::OptimizeConfig;
use rpqds::pairing::{binary_entropy, secure_fraction};
use rpqds::scan::{optimize_objective, Mode, Objective, ProtocolPoint, Template};
use rpqds::security::RateResult;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpqdsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParam = 2,
    Infeasible = 3,
    Numeric = 4,
    UnknownName = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpqdsProtocolKind {
    SnsAsymptotic = 0,
    ScfAsymptotic = 1,
    SnsFinite = 2,
}

impl RpqdsProtocolKind {
    fn from_raw(kind: i32) -> Option<Self> {
        Some(match kind {
            0 => RpqdsProtocolKind::SnsAsymptotic,
            1 => RpqdsProtocolKind::ScfAsymptotic,
            2 => RpqdsProtocolKind::SnsFinite,
            _ => return None,
        })
    }

    fn mode(self) -> Mode {
        match self {
            RpqdsProtocolKind::SnsAsymptotic => Mode::SnsAsym,
            RpqdsProtocolKind::ScfAsymptotic => Mode::ScfAsym,
            RpqdsProtocolKind::SnsFinite => Mode::SnsFinite,
        }
    }
}

/// Experimental constants.
pub struct RpqdsSystem {
    inner: SystemParams,
}

/// A protocol and its parameters.
pub struct RpqdsProtocol {
    inner: ProtocolPoint,
}

/// Rate and security report of one evaluation.
pub struct RpqdsResult {
    inner: RateResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RpqdsStatus {
    match e {
        Error::Infeasible(_) | Error::NoData(_) => RpqdsStatus::Infeasible,
        Error::Numeric(_) => RpqdsStatus::Numeric,
        _ => RpqdsStatus::InvalidParam,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RpqdsStatus, String)>) -> RpqdsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RpqdsStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            RpqdsStatus::Panic
        }
    }
}

fn lib(e: Error) -> (RpqdsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RpqdsStatus, String) {
    (RpqdsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn name_arg<'a>(name: *const c_char) -> Result<&'a str, (RpqdsStatus, String)> {
    if name.is_null() {
        return Err(null("name"));
    }
    CStr::from_ptr(name)
        .to_str()
        .map_err(|_| (RpqdsStatus::InvalidParam, "name is not UTF-8".into()))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (RpqdsStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, (RpqdsStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn rpqds_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default system parameters.
#[no_mangle]
pub extern "C" fn rpqds_system_new() -> *mut RpqdsSystem {
    Box::into_raw(Box::new(RpqdsSystem { inner: SystemParams::default() }))
}

/// # Safety
/// `sys` must come from `rpqds_system_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rpqds_system_free(sys: *mut RpqdsSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

fn system_field<'a>(s: &'a mut SystemParams, name: &str) -> Option<&'a mut f64> {
    Some(match name {
        "alpha" => &mut s.alpha,
        "eta_d" => &mut s.eta_d,
        "p_d" => &mut s.p_d,
        "e_d" => &mut s.e_d,
        "distance_km" => &mut s.distance_km,
        "epsilon" => &mut s.epsilon,
        "g" => &mut s.g,
        "eps_e" => &mut s.eps_e,
        _ => return None,
    })
}

/// Sets a system parameter by field name (`alpha`, `eta_d`, `p_d`, `e_d`,
/// `distance_km`, `epsilon`, `g`, `eps_e`). The value is checked when the
/// system is used.
///
/// # Safety
/// `sys` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rpqds_system_set(sys: *mut RpqdsSystem, name: *const c_char, value: f64) -> RpqdsStatus {
    guard(|| {
        let sys = out_arg(sys, "sys")?;
        let name = name_arg(name)?;
        let slot = system_field(&mut sys.inner, name)
            .ok_or_else(|| (RpqdsStatus::UnknownName, format!("unknown system parameter {name:?}")))?;
        *slot = value;
        Ok(())
    })
}

/// # Safety
/// `sys` must be a live handle, `name` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rpqds_system_get(sys: *const RpqdsSystem, name: *const c_char, out: *mut f64) -> RpqdsStatus {
    guard(|| {
        let mut s = in_arg(sys, "sys")?.inner;
        let name = name_arg(name)?;
        let out = out_arg(out, "out")?;
        *out = *system_field(&mut s, name)
            .ok_or_else(|| (RpqdsStatus::UnknownName, format!("unknown system parameter {name:?}")))?;
        Ok(())
    })
}

/// A protocol with default parameters; `kind` is an [`RpqdsProtocolKind`].
/// Returns null for an unknown kind.
#[no_mangle]
pub extern "C" fn rpqds_protocol_new(kind: i32) -> *mut RpqdsProtocol {
    let Some(kind) = RpqdsProtocolKind::from_raw(kind) else {
        set_error(&format!("unknown protocol kind {kind}"));
        return ptr::null_mut();
    };
    let inner = match kind {
        RpqdsProtocolKind::SnsAsymptotic => ProtocolPoint::Sns(SnsParams::default()),
        RpqdsProtocolKind::ScfAsymptotic => ProtocolPoint::Scf(ScfParams::default()),
        RpqdsProtocolKind::SnsFinite => ProtocolPoint::Finite(FiniteParams::default()),
    };
    Box::into_raw(Box::new(RpqdsProtocol { inner }))
}

/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rpqds_protocol_free(p: *mut RpqdsProtocol) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn name_error(e: Error) -> (RpqdsStatus, String) {
    match e {
        Error::InvalidParam(m) => (RpqdsStatus::UnknownName, m),
        e => lib(e),
    }
}

/// Sets a protocol parameter by field name.
///
/// # Safety
/// `p` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rpqds_protocol_set(p: *mut RpqdsProtocol, name: *const c_char, value: f64) -> RpqdsStatus {
    guard(|| {
        let p = out_arg(p, "protocol")?;
        let name = name_arg(name)?;
        p.inner.set(name, value).map_err(name_error)
    })
}

/// # Safety
/// `p` must be a live handle, `name` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rpqds_protocol_get(p: *const RpqdsProtocol, name: *const c_char, out: *mut f64) -> RpqdsStatus {
    guard(|| {
        let p = in_arg(p, "protocol")?;
        let name = name_arg(name)?;
        *out_arg(out, "out")? = p.inner.get(name).map_err(name_error)?;
        Ok(())
    })
}

/// Signature rate of a protocol setting. On success `*out` receives a new
/// result handle.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rpqds_evaluate(
    sys: *const RpqdsSystem,
    protocol: *const RpqdsProtocol,
    use_rp: bool,
    out: *mut *mut RpqdsResult,
) -> RpqdsStatus {
    guard(|| {
        let sys = in_arg(sys, "sys")?;
        let p = in_arg(protocol, "protocol")?;
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let r = p.inner.evaluate(&sys.inner, use_rp).map_err(lib)?;
        *out = Box::into_raw(Box::new(RpqdsResult { inner: r }));
        Ok(())
    })
}

/// Maximizes the rate of protocol `kind` over the default search space, starting from the
/// parameters in `start` (or defaults when null). On success `*out_result`
/// and `*out_protocol` receive new handles.
///
/// # Safety
/// Non-null pointers must be live handles or writable locations.
#[no_mangle]
pub unsafe extern "C" fn rpqds_optimize(
    sys: *const RpqdsSystem,
    kind: i32,
    start: *const RpqdsProtocol,
    use_rp: bool,
    budget: usize,
    seed: u64,
    out_result: *mut *mut RpqdsResult,
    out_protocol: *mut *mut RpqdsProtocol,
) -> RpqdsStatus {
    guard(|| {
        let sys = in_arg(sys, "sys")?;
        let out_result = out_arg(out_result, "out_result")?;
        let out_protocol = out_arg(out_protocol, "out_protocol")?;
        *out_result = ptr::null_mut();
        *out_protocol = ptr::null_mut();
        let mode = RpqdsProtocolKind::from_raw(kind)
            .ok_or_else(|| (RpqdsStatus::InvalidParam, format!("unknown protocol kind {kind}")))?
            .mode();
        let mut template = Template::default();
        match start.as_ref().map(|s| s.inner) {
            None => {}
            Some(ProtocolPoint::Sns(p)) if mode == Mode::SnsAsym => template.sns = p,
            Some(ProtocolPoint::Scf(p)) if mode == Mode::ScfAsym => template.scf = p,
            Some(ProtocolPoint::Finite(p)) if mode == Mode::SnsFinite => template.finite = p,
            Some(_) => return Err((RpqdsStatus::InvalidParam, "start protocol does not match kind".into())),
        }
        let obj = Objective::new(mode, sys.inner, template, mode.default_space(), use_rp).map_err(lib)?;
        let cfg = OptimizeConfig { budget, seed, ..OptimizeConfig::default() };
        let best = optimize_objective(&obj, &cfg).map_err(lib)?;
        match (best.point, best.result) {
            (Some(pt), Some(r)) => {
                *out_result = Box::into_raw(Box::new(RpqdsResult { inner: r }));
                *out_protocol = Box::into_raw(Box::new(RpqdsProtocol { inner: pt }));
                Ok(())
            }
            _ => Err((RpqdsStatus::Infeasible, best.error.unwrap_or_else(|| "no feasible point".into()))),
        }
    })
}

/// # Safety
/// `r` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rpqds_result_free(r: *mut RpqdsResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Reads a result field: `rate`, `n_s`, `n_pulses`, `sig_len`, `s_a`,
/// `s_v`, `p_ro`, `p_fo`, `p_re`, `epsilon`, `secure_fraction`.
///
/// # Safety
/// `r` must be a live handle, `name` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rpqds_result_get(r: *const RpqdsResult, name: *const c_char, out: *mut f64) -> RpqdsStatus {
    guard(|| {
        let r = &in_arg(r, "result")?.inner;
        let name = name_arg(name)?;
        let rep = &r.report;
        *out_arg(out, "out")? = match name {
            "rate" => r.rate,
            "n_s" => r.n_s,
            "n_pulses" => r.n_pulses,
            "sig_len" => r.sig_len as f64,
            "s_a" => rep.s_a,
            "s_v" => rep.s_v,
            "p_ro" => rep.p_ro,
            "p_fo" => rep.p_fo,
            "p_re" => rep.p_re,
            "epsilon" => rep.epsilon,
            "secure_fraction" => rep.secure_fraction,
            _ => return Err((RpqdsStatus::UnknownName, format!("unknown result field {name:?}"))),
        };
        Ok(())
    })
}

/// Binary entropy in bits.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rpqds_binary_entropy(p: f64, out: *mut f64) -> RpqdsStatus {
    guard(|| {
        *out_arg(out, "out")? = binary_entropy(p).map_err(lib)?;
        Ok(())
    })
}

/// Secure fraction after pairing for untagged fraction `d` and phase error
/// `e`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rpqds_secure_fraction(d: f64, e: f64, out: *mut f64) -> RpqdsStatus {
    guard(|| {
        *out_arg(out, "out")? = secure_fraction(d, e).map_err(lib)?;
        Ok(())
    })
}
