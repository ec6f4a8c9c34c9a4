//! C ABI over the core library.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `_free`. Every call returns a [`BdgaStatus`]; on
//! failure a description is kept per thread and can be read with
//! [`bdga_last_error`]. Output buffers follow one convention: the required
//! length (without the trailing NUL for strings) is stored in `*len` and
//! `BDGA_STATUS_BUFFER_TOO_SMALL` is returned when `cap` is too small.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use bdga::algebra::{make_platform, Platform, PlatformDescriptor};
use bdga::protocol::{run_session, ProtocolError, SessionConfig, SessionOutput, TranscriptFile};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdgaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidPlatform = 3,
    TooFewParties = 4,
    ProtocolError = 5,
    BufferTooSmall = 6,
    VerifyFailed = 7,
    Panic = 8,
}

/// A validated platform.
pub struct BdgaPlatform {
    inner: Arc<Platform>,
}

/// A finished session: transcript, per-party records and key.
pub struct BdgaSession {
    output: SessionOutput,
    platform: Arc<Platform>,
    seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
}

fn fail(status: BdgaStatus, message: impl Into<String>) -> BdgaStatus {
    set_error(message);
    status
}

fn guard(f: impl FnOnce() -> BdgaStatus) -> BdgaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(BdgaStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, BdgaStatus> {
    if text.is_null() {
        return Err(fail(BdgaStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|_| fail(BdgaStatus::InvalidArgument, "string is not UTF-8"))
}

unsafe fn write_bytes(bytes: &[u8], buf: *mut u8, cap: usize, len: *mut usize) -> BdgaStatus {
    if len.is_null() {
        return fail(BdgaStatus::NullPointer, "null length pointer");
    }
    *len = bytes.len();
    if cap < bytes.len() || (buf.is_null() && !bytes.is_empty()) {
        return fail(
            BdgaStatus::BufferTooSmall,
            format!("need {} bytes", bytes.len()),
        );
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
    BdgaStatus::Ok
}

unsafe fn write_str(text: &str, buf: *mut c_char, cap: usize, len: *mut usize) -> BdgaStatus {
    if len.is_null() {
        return fail(BdgaStatus::NullPointer, "null length pointer");
    }
    *len = text.len();
    if buf.is_null() || cap < text.len() + 1 {
        return fail(
            BdgaStatus::BufferTooSmall,
            format!("need {} bytes plus NUL", text.len()),
        );
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, text.len());
    *buf.add(text.len()) = 0;
    BdgaStatus::Ok
}

fn build_platform(descriptor: PlatformDescriptor, out: *mut *mut BdgaPlatform) -> BdgaStatus {
    if out.is_null() {
        return fail(BdgaStatus::NullPointer, "null output handle");
    }
    match make_platform(&descriptor) {
        Ok(p) => {
            let handle = Box::new(BdgaPlatform { inner: Arc::new(p) });
            unsafe { *out = Box::into_raw(handle) };
            BdgaStatus::Ok
        }
        Err(e) => fail(BdgaStatus::InvalidPlatform, e.to_string()),
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn bdga_status_message(status: BdgaStatus) -> *const c_char {
    let text: &'static [u8] = match status {
        BdgaStatus::Ok => b"ok\0",
        BdgaStatus::NullPointer => b"null pointer\0",
        BdgaStatus::InvalidArgument => b"invalid argument\0",
        BdgaStatus::InvalidPlatform => b"invalid platform\0",
        BdgaStatus::TooFewParties => b"n must be at least 3\0",
        BdgaStatus::ProtocolError => b"protocol error\0",
        BdgaStatus::BufferTooSmall => b"buffer too small\0",
        BdgaStatus::VerifyFailed => b"verification failed\0",
        BdgaStatus::Panic => b"internal panic\0",
    };
    text.as_ptr() as *const c_char
}

/// Library name and version, NUL-terminated and static.
#[no_mangle]
pub extern "C" fn bdga_version() -> *const c_char {
    concat!("bdga ", env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the calling thread's last error message.
///
/// # Safety
/// `buf` must point to `cap` writable bytes and `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bdga_last_error(
    buf: *mut c_char,
    cap: usize,
    len: *mut usize,
) -> BdgaStatus {
    let text = LAST_ERROR.with(|e| e.borrow().clone());
    write_str(&text, buf, cap, len)
}

/// Builds a platform from a selector such as `bd_modp(23,2,11)` or
/// `conjugation(S4)`.
///
/// # Safety
/// `selector` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bdga_platform_from_selector(
    selector: *const c_char,
    out: *mut *mut BdgaPlatform,
) -> BdgaStatus {
    guard(|| {
        let text = match read_str(selector) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match PlatformDescriptor::from_selector(text) {
            Ok(d) => build_platform(d, out),
            Err(e) => fail(BdgaStatus::InvalidPlatform, e.to_string()),
        }
    })
}

/// Builds a platform from a JSON descriptor.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bdga_platform_from_json(
    json: *const c_char,
    out: *mut *mut BdgaPlatform,
) -> BdgaStatus {
    guard(|| {
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match PlatformDescriptor::from_json(text) {
            Ok(d) => build_platform(d, out),
            Err(e) => fail(BdgaStatus::InvalidArgument, format!("descriptor: {e}")),
        }
    })
}

/// # Safety
/// `platform` must come from a `bdga_platform_from_*` call, or be null.
#[no_mangle]
pub unsafe extern "C" fn bdga_platform_free(platform: *mut BdgaPlatform) {
    if !platform.is_null() {
        drop(Box::from_raw(platform));
    }
}

/// Copies the platform tag.
///
/// # Safety
/// Pointers must be valid; `buf` must hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn bdga_platform_tag(
    platform: *const BdgaPlatform,
    buf: *mut c_char,
    cap: usize,
    len: *mut usize,
) -> BdgaStatus {
    guard(|| match platform.as_ref() {
        Some(p) => write_str(p.inner.tag(), buf, cap, len),
        None => fail(BdgaStatus::NullPointer, "null platform"),
    })
}

/// Runs one seeded session among `n` parties.
///
/// # Safety
/// `platform` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bdga_session_run(
    platform: *const BdgaPlatform,
    n: usize,
    seed: u64,
    out: *mut *mut BdgaSession,
) -> BdgaStatus {
    guard(|| {
        let Some(p) = platform.as_ref() else {
            return fail(BdgaStatus::NullPointer, "null platform");
        };
        if out.is_null() {
            return fail(BdgaStatus::NullPointer, "null output handle");
        }
        let result = SessionConfig::uniform(n, p.inner.clone(), seed).and_then(|c| run_session(&c));
        match result {
            Ok(output) => {
                *out = Box::into_raw(Box::new(BdgaSession {
                    output,
                    platform: p.inner.clone(),
                    seed,
                }));
                BdgaStatus::Ok
            }
            Err(ProtocolError::TooFewParties(k)) => fail(
                BdgaStatus::TooFewParties,
                format!("n must be ≥ 3 (got {k})"),
            ),
            Err(e) => fail(BdgaStatus::ProtocolError, e.to_string()),
        }
    })
}

/// # Safety
/// `session` must come from `bdga_session_run`, or be null.
#[no_mangle]
pub unsafe extern "C" fn bdga_session_free(session: *mut BdgaSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bdga_session_n(session: *const BdgaSession, n: *mut usize) -> BdgaStatus {
    match (session.as_ref(), n.is_null()) {
        (Some(s), false) => {
            *n = s.output.transcript.n();
            BdgaStatus::Ok
        }
        _ => fail(BdgaStatus::NullPointer, "null argument"),
    }
}

/// Stores 1 in `*agree` iff every party accepted with byte-equal keys.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bdga_session_keys_agree(
    session: *const BdgaSession,
    agree: *mut u8,
) -> BdgaStatus {
    match (session.as_ref(), agree.is_null()) {
        (Some(s), false) => {
            *agree = u8::from(s.output.keys_agree());
            BdgaStatus::Ok
        }
        _ => fail(BdgaStatus::NullPointer, "null argument"),
    }
}

/// Copies the encoding of party `party`'s key (1-based).
///
/// # Safety
/// Pointers must be valid; `buf` must hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn bdga_session_party_key(
    session: *const BdgaSession,
    party: usize,
    buf: *mut u8,
    cap: usize,
    len: *mut usize,
) -> BdgaStatus {
    guard(|| {
        let Some(s) = session.as_ref() else {
            return fail(BdgaStatus::NullPointer, "null session");
        };
        let n = s.output.records.len();
        if party == 0 || party > n {
            return fail(
                BdgaStatus::InvalidArgument,
                format!("party {party} outside 1..={n}"),
            );
        }
        match &s.output.records[party - 1].sk {
            Some(k) => write_bytes(k.as_bytes(), buf, cap, len),
            None => fail(
                BdgaStatus::ProtocolError,
                format!("party {party} holds no key"),
            ),
        }
    })
}

/// Copies the 32-byte session identifier.
///
/// # Safety
/// `sid` must point to 32 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bdga_session_sid(session: *const BdgaSession, sid: *mut u8) -> BdgaStatus {
    match (session.as_ref(), sid.is_null()) {
        (Some(s), false) => {
            let bytes = s.output.transcript.sid().0;
            ptr::copy_nonoverlapping(bytes.as_ptr(), sid, bytes.len());
            BdgaStatus::Ok
        }
        _ => fail(BdgaStatus::NullPointer, "null argument"),
    }
}

/// Copies the transcript as JSON, with platform and seed metadata.
///
/// # Safety
/// Pointers must be valid; `buf` must hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn bdga_session_transcript_json(
    session: *const BdgaSession,
    buf: *mut c_char,
    cap: usize,
    len: *mut usize,
) -> BdgaStatus {
    guard(|| {
        let Some(s) = session.as_ref() else {
            return fail(BdgaStatus::NullPointer, "null session");
        };
        let meta = bdga::protocol::ArtifactMeta::new(&s.platform, s.seed);
        write_str(&s.output.transcript.to_json(Some(meta)), buf, cap, len)
    })
}

/// Checks counts, decodability, `Z`-telescoping and the stored `sid` of a
/// transcript JSON against `platform`.
///
/// # Safety
/// `platform` must be a live handle and `json` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bdga_verify_transcript_json(
    platform: *const BdgaPlatform,
    json: *const c_char,
) -> BdgaStatus {
    guard(|| {
        let Some(p) = platform.as_ref() else {
            return fail(BdgaStatus::NullPointer, "null platform");
        };
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let file = match TranscriptFile::from_json(text) {
            Ok(f) => f,
            Err(e) => return fail(BdgaStatus::InvalidArgument, e.to_string()),
        };
        let transcript = match file.decode(&p.inner) {
            Ok(t) => t,
            Err(e) => return fail(BdgaStatus::VerifyFailed, e.to_string()),
        };
        match transcript.telescopes(&p.inner) {
            Ok(true) => {}
            _ => return fail(BdgaStatus::VerifyFailed, "telescoping violated"),
        }
        if transcript.sid().to_hex() != file.sid {
            return fail(
                BdgaStatus::VerifyFailed,
                "sid does not match the transcript",
            );
        }
        BdgaStatus::Ok
    })
}
