#include <stdio.h>
#include <string.h>

#include "bdga.h"

#define CHECK(expr)                                                            \
  do {                                                                         \
    enum BdgaStatus s_ = (expr);                                               \
    if (s_ != BDGA_STATUS_OK) {                                                \
      fprintf(stderr, "%s failed: %s\n", #expr, bdga_status_message(s_));      \
      return 1;                                                                \
    }                                                                          \
  } while (0)

int main(void) {
  BdgaPlatform *platform = NULL;
  BdgaSession *session = NULL;
  uint8_t key[64];
  uint8_t other[64];
  size_t key_len = 0, other_len = 0, n = 0, json_len = 0;
  uint8_t agree = 0;
  char json[8192];

  CHECK(bdga_platform_from_selector("conjugation(S4)", &platform));
  CHECK(bdga_session_run(platform, 5, 42, &session));
  CHECK(bdga_session_n(session, &n));
  CHECK(bdga_session_keys_agree(session, &agree));
  CHECK(bdga_session_party_key(session, 1, key, sizeof key, &key_len));
  CHECK(bdga_session_party_key(session, 5, other, sizeof other, &other_len));
  CHECK(bdga_session_transcript_json(session, json, sizeof json, &json_len));
  CHECK(bdga_verify_transcript_json(platform, json));
  if (n != 5 || !agree || key_len != other_len || memcmp(key, other, key_len) != 0) {
    fprintf(stderr, "keys differ\n");
    return 1;
  }
  if (bdga_session_run(platform, 2, 0, &session) != BDGA_STATUS_TOO_FEW_PARTIES) {
    return 1;
  }
  printf("ok %zu %s\n", key_len, bdga_version());
  bdga_session_free(session);
  bdga_platform_free(platform);
  return 0;
}
