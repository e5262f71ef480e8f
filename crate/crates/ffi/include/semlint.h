#ifndef SEMLINT_H
#define SEMLINT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every call.
 */
typedef enum SemlintStatus {
  SEMLINT_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  SEMLINT_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  SEMLINT_STATUS_INVALID_UTF8 = 2,
  /**
   * The rule text did not parse.
   */
  SEMLINT_STATUS_RULE_SYNTAX = 3,
  /**
   * An argument was out of range.
   */
  SEMLINT_STATUS_INVALID_ARGUMENT = 4,
  /**
   * The library panicked; the handle involved should be freed.
   */
  SEMLINT_STATUS_INTERNAL = 5,
} SemlintStatus;

/**
 * Report layout.
 */
typedef enum SemlintFormat {
  SEMLINT_FORMAT_TEXT = 0,
  SEMLINT_FORMAT_HTML = 1,
  SEMLINT_FORMAT_MACHINE = 2,
} SemlintFormat;

/**
 * A parsed rule set.
 */
typedef struct SemlintRuleset SemlintRuleset;

/**
 * Documents checked against one rule set.
 */
typedef struct SemlintSession SemlintSession;

/**
 * Session settings. Start from [`semlint_options_default`].
 */
typedef struct SemlintOptions {
  /**
   * Never probe URLs.
   */
  bool offline;
  /**
   * Ignore case and accents when comparing member names.
   */
  bool normalize_names;
  /**
   * Seconds before a URL probe gives up; must be positive.
   */
  double url_timeout_secs;
  /**
   * Maximum concurrent URL probes; at least 1.
   */
  uint32_t max_probes;
} SemlintOptions;

/**
 * Counts produced by [`semlint_session_finish`].
 */
typedef struct SemlintSummary {
  size_t messages;
  size_t diagnostics;
} SemlintSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default settings: online, exact names, 10 s timeout, 8 probes.
 */
struct SemlintOptions semlint_options_default(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *semlint_version(void);

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next library call on the same thread.
 */
const char *semlint_last_error(void);

/**
 * Parses rule text. `name` labels positions in diagnostics.
 *
 * # Safety
 * `text` and `name` must be NUL-terminated strings; `out` must be writable.
 */
enum SemlintStatus semlint_ruleset_parse(const char *text,
                                         const char *name,
                                         struct SemlintRuleset **out);

/**
 * Number of rules, or 0 for NULL.
 *
 * # Safety
 * `rules` must be NULL or a live handle.
 */
size_t semlint_ruleset_rule_count(const struct SemlintRuleset *rules);

/**
 * # Safety
 * `rules` must be NULL or a handle not yet freed.
 */
void semlint_ruleset_free(struct SemlintRuleset *rules);

/**
 * Starts a session. The rule set is copied, so it may be freed afterwards.
 * `options` may be NULL for defaults.
 *
 * # Safety
 * `rules` must be a live handle; `options` NULL or readable; `out` writable.
 */
enum SemlintStatus semlint_session_new(const struct SemlintRuleset *rules,
                                       const struct SemlintOptions *options,
                                       struct SemlintSession **out);

/**
 * Runs the per-document pass over `len` bytes of XML. Malformed XML is not
 * an error here; it shows up as a diagnostic in the report.
 *
 * # Safety
 * `session` must be a live handle; `name` a NUL-terminated string; `data`
 * readable for `len` bytes (may be NULL when `len` is 0).
 */
enum SemlintStatus semlint_session_add_document(struct SemlintSession *session,
                                                const char *name,
                                                const uint8_t *data,
                                                size_t len);

/**
 * Resolves every document added so far and renders the report, in the
 * layout named by a [`SemlintFormat`] value, into a new
 * string stored in `*report` (free with [`semlint_string_free`]). `summary`
 * may be NULL. The session stays usable; more documents can be added and
 * the report produced again.
 *
 * # Safety
 * `session` must be a live handle; `report` writable; `summary` NULL or
 * writable.
 */
enum SemlintStatus semlint_session_finish(const struct SemlintSession *session,
                                          int32_t format,
                                          char **report,
                                          struct SemlintSummary *summary);

/**
 * # Safety
 * `session` must be NULL or a handle not yet freed.
 */
void semlint_session_free(struct SemlintSession *session);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a string from this library not yet freed.
 */
void semlint_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMLINT_H */
