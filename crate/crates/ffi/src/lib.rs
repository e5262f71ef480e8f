//! C ABI for semlint.
//!
//! Rule sets and sessions are opaque handles owned by the caller and released
//! with their `_free` function. Every entry point returns a [`SemlintStatus`];
//! on failure, [`semlint_last_error`] describes the problem for the calling
//! thread. Strings handed out by the library are freed with
//! [`semlint_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;
use std::time::Duration;

use semlint::builtins::{BuiltinConfig, BuiltinRegistry, UreqProbe};
use semlint::dsl::{parse_rules, RuleSet};
use semlint::engine::{evaluate_bytes, pass_two, PassOneResult};
use semlint::report::{emit_report, Format};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemlintStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The rule text did not parse.
    RuleSyntax = 3,
    /// An argument was out of range.
    InvalidArgument = 4,
    /// The library panicked; the handle involved should be freed.
    Internal = 5,
}

/// Report layout.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemlintFormat {
    Text = 0,
    Html = 1,
    Machine = 2,
}

/// Session settings. Start from [`semlint_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SemlintOptions {
    /// Never probe URLs.
    pub offline: bool,
    /// Ignore case and accents when comparing member names.
    pub normalize_names: bool,
    /// Seconds before a URL probe gives up; must be positive.
    pub url_timeout_secs: f64,
    /// Maximum concurrent URL probes; at least 1.
    pub max_probes: u32,
}

/// Counts produced by [`semlint_session_finish`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SemlintSummary {
    pub messages: usize,
    pub diagnostics: usize,
}

/// A parsed rule set.
pub struct SemlintRuleset {
    rules: RuleSet,
}

/// Documents checked against one rule set.
pub struct SemlintSession {
    rules: RuleSet,
    options: SemlintOptions,
    results: Vec<PassOneResult>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, turning panics into `Internal`.
fn guard(f: impl FnOnce() -> SemlintStatus) -> SemlintStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let what = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {what}"));
            SemlintStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, SemlintStatus> {
    if p.is_null() {
        set_error(format!("{what} is NULL"));
        return Err(SemlintStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        SemlintStatus::InvalidUtf8
    })
}

macro_rules! require {
    ($p:expr, $what:literal) => {
        if $p.is_null() {
            set_error(concat!($what, " is NULL"));
            return SemlintStatus::NullArgument;
        }
    };
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Default settings: online, exact names, 10 s timeout, 8 probes.
#[no_mangle]
pub extern "C" fn semlint_options_default() -> SemlintOptions {
    let d = BuiltinConfig::default();
    SemlintOptions {
        offline: d.offline,
        normalize_names: d.normalize_names,
        url_timeout_secs: d.url_timeout.as_secs_f64(),
        max_probes: d.max_probes as u32,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn semlint_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next library call on the same thread.
#[no_mangle]
pub extern "C" fn semlint_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses rule text. `name` labels positions in diagnostics.
///
/// # Safety
/// `text` and `name` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn semlint_ruleset_parse(
    text: *const c_char,
    name: *const c_char,
    out: *mut *mut SemlintRuleset,
) -> SemlintStatus {
    guard(|| {
        require!(out, "out");
        *out = ptr::null_mut();
        let text = try_status!(str_arg(text, "text"));
        let name = try_status!(str_arg(name, "name"));
        match parse_rules(text, name) {
            Ok(rules) => {
                *out = Box::into_raw(Box::new(SemlintRuleset { rules }));
                SemlintStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                SemlintStatus::RuleSyntax
            }
        }
    })
}

/// Number of rules, or 0 for NULL.
///
/// # Safety
/// `rules` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn semlint_ruleset_rule_count(rules: *const SemlintRuleset) -> usize {
    rules.as_ref().map_or(0, |r| r.rules.rules.len())
}

/// # Safety
/// `rules` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn semlint_ruleset_free(rules: *mut SemlintRuleset) {
    if !rules.is_null() {
        drop(Box::from_raw(rules));
    }
}

/// Starts a session. The rule set is copied, so it may be freed afterwards.
/// `options` may be NULL for defaults.
///
/// # Safety
/// `rules` must be a live handle; `options` NULL or readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn semlint_session_new(
    rules: *const SemlintRuleset,
    options: *const SemlintOptions,
    out: *mut *mut SemlintSession,
) -> SemlintStatus {
    guard(|| {
        require!(out, "out");
        *out = ptr::null_mut();
        require!(rules, "rules");
        let options = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| semlint_options_default());
        if !(options.url_timeout_secs > 0.0 && options.url_timeout_secs.is_finite())
            || options.max_probes == 0
        {
            set_error("url_timeout_secs must be positive and max_probes at least 1");
            return SemlintStatus::InvalidArgument;
        }
        *out = Box::into_raw(Box::new(SemlintSession {
            rules: (*rules).rules.clone(),
            options,
            results: Vec::new(),
        }));
        SemlintStatus::Ok
    })
}

/// Runs the per-document pass over `len` bytes of XML. Malformed XML is not
/// an error here; it shows up as a diagnostic in the report.
///
/// # Safety
/// `session` must be a live handle; `name` a NUL-terminated string; `data`
/// readable for `len` bytes (may be NULL when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn semlint_session_add_document(
    session: *mut SemlintSession,
    name: *const c_char,
    data: *const u8,
    len: usize,
) -> SemlintStatus {
    guard(|| {
        require!(session, "session");
        let name = try_status!(str_arg(name, "name"));
        let bytes: &[u8] = if len == 0 {
            &[]
        } else {
            require!(data, "data");
            std::slice::from_raw_parts(data, len)
        };
        let s = &mut *session;
        s.results.push(evaluate_bytes(bytes, &s.rules, name));
        SemlintStatus::Ok
    })
}

/// Resolves every document added so far and renders the report, in the
/// layout named by a [`SemlintFormat`] value, into a new
/// string stored in `*report` (free with [`semlint_string_free`]). `summary`
/// may be NULL. The session stays usable; more documents can be added and
/// the report produced again.
///
/// # Safety
/// `session` must be a live handle; `report` writable; `summary` NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn semlint_session_finish(
    session: *const SemlintSession,
    format: i32,
    report: *mut *mut c_char,
    summary: *mut SemlintSummary,
) -> SemlintStatus {
    guard(|| {
        require!(report, "report");
        *report = ptr::null_mut();
        require!(session, "session");
        let s = &*session;
        let format = match format {
            f if f == SemlintFormat::Text as i32 => Format::Text,
            f if f == SemlintFormat::Html as i32 => Format::Html,
            f if f == SemlintFormat::Machine as i32 => Format::Machine,
            other => {
                set_error(format!("unknown format {other}"));
                return SemlintStatus::InvalidArgument;
            }
        };
        let builtins = BuiltinRegistry::standard(BuiltinConfig {
            normalize_names: s.options.normalize_names,
            offline: s.options.offline,
            url_timeout: Duration::from_secs_f64(s.options.url_timeout_secs),
            max_probes: s.options.max_probes as usize,
            prober: Arc::new(UreqProbe),
        });
        let checked = pass_two(&s.results, &s.rules, &builtins);
        let text = emit_report(&checked.messages, &checked.diagnostics, format);
        if let Some(sum) = summary.as_mut() {
            *sum = SemlintSummary {
                messages: checked.messages.len(),
                diagnostics: checked.diagnostics.len(),
            };
        }
        // Reports never contain NUL: text is escaped or comes from XML.
        *report = CString::new(text.replace('\0', "")).unwrap().into_raw();
        SemlintStatus::Ok
    })
}

/// # Safety
/// `session` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn semlint_session_free(session: *mut SemlintSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn semlint_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
