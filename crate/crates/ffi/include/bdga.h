#ifndef BDGA_H
#define BDGA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BdgaStatus {
  BDGA_STATUS_OK = 0,
  BDGA_STATUS_NULL_POINTER = 1,
  BDGA_STATUS_INVALID_ARGUMENT = 2,
  BDGA_STATUS_INVALID_PLATFORM = 3,
  BDGA_STATUS_TOO_FEW_PARTIES = 4,
  BDGA_STATUS_PROTOCOL_ERROR = 5,
  BDGA_STATUS_BUFFER_TOO_SMALL = 6,
  BDGA_STATUS_VERIFY_FAILED = 7,
  BDGA_STATUS_PANIC = 8,
} BdgaStatus;

/*
 A validated platform.
 */
typedef struct BdgaPlatform BdgaPlatform;

/*
 A finished session: transcript, per-party records and key.
 */
typedef struct BdgaSession BdgaSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Static description of a status code.
 */
const char *bdga_status_message(enum BdgaStatus status);

/*
 Library name and version, NUL-terminated and static.
 */
const char *bdga_version(void);

/*
 Copies the calling thread's last error message.

 # Safety
 `buf` must point to `cap` writable bytes and `len` must be valid.
 */
enum BdgaStatus bdga_last_error(char *buf, size_t cap, size_t *len);

/*
 Builds a platform from a selector such as `bd_modp(23,2,11)` or
 `conjugation(S4)`.

 # Safety
 `selector` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BdgaStatus bdga_platform_from_selector(const char *selector, struct BdgaPlatform **out);

/*
 Builds a platform from a JSON descriptor.

 # Safety
 `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BdgaStatus bdga_platform_from_json(const char *json, struct BdgaPlatform **out);

/*
 # Safety
 `platform` must come from a `bdga_platform_from_*` call, or be null.
 */
void bdga_platform_free(struct BdgaPlatform *platform);

/*
 Copies the platform tag.

 # Safety
 Pointers must be valid; `buf` must hold `cap` bytes.
 */
enum BdgaStatus bdga_platform_tag(const struct BdgaPlatform *platform,
                                  char *buf,
                                  size_t cap,
                                  size_t *len);

/*
 Runs one seeded session among `n` parties.

 # Safety
 `platform` must be a live handle and `out` a valid pointer.
 */
enum BdgaStatus bdga_session_run(const struct BdgaPlatform *platform,
                                 size_t n,
                                 uint64_t seed,
                                 struct BdgaSession **out);

/*
 # Safety
 `session` must come from `bdga_session_run`, or be null.
 */
void bdga_session_free(struct BdgaSession *session);

/*
 # Safety
 Pointers must be valid.
 */
enum BdgaStatus bdga_session_n(const struct BdgaSession *session, size_t *n);

/*
 Stores 1 in `*agree` iff every party accepted with byte-equal keys.

 # Safety
 Pointers must be valid.
 */
enum BdgaStatus bdga_session_keys_agree(const struct BdgaSession *session, uint8_t *agree);

/*
 Copies the encoding of party `party`'s key (1-based).

 # Safety
 Pointers must be valid; `buf` must hold `cap` bytes.
 */
enum BdgaStatus bdga_session_party_key(const struct BdgaSession *session,
                                       size_t party,
                                       uint8_t *buf,
                                       size_t cap,
                                       size_t *len);

/*
 Copies the 32-byte session identifier.

 # Safety
 `sid` must point to 32 writable bytes.
 */
enum BdgaStatus bdga_session_sid(const struct BdgaSession *session, uint8_t *sid);

/*
 Copies the transcript as JSON, with platform and seed metadata.

 # Safety
 Pointers must be valid; `buf` must hold `cap` bytes.
 */
enum BdgaStatus bdga_session_transcript_json(const struct BdgaSession *session,
                                             char *buf,
                                             size_t cap,
                                             size_t *len);

/*
 Checks counts, decodability, `Z`-telescoping and the stored `sid` of a
 transcript JSON against `platform`.

 # Safety
 `platform` must be a live handle and `json` a NUL-terminated string.
 */
enum BdgaStatus bdga_verify_transcript_json(const struct BdgaPlatform *platform, const char *json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BDGA_H */
