#include <stdio.h>
#include "causal_capacity.h"
int main(void) {
  CcChannel *xy = NULL, *g = NULL; CcProcess *w = NULL;
  if (cc_channel_xy(&xy) != CC_STATUS_OK) return 1;
  cc_process_cnot_sdpp(&w);
  if (cc_process_apply(w, xy, xy, &g) != CC_STATUS_OK) { printf("%s\n", cc_last_error_message()); return 1; }
  int ok; double v, f;
  cc_kl_correctability(g, 1e-9, &ok, &v, &f);
  printf("version %s correctable %d fidelity %.12f\n", cc_version(), ok, f);
  if (cc_channel_depolarizing(1, &g) != CC_STATUS_OK) printf("error: %s\n", cc_last_error_message());
  cc_channel_free(g); cc_channel_free(xy); cc_process_free(w);
  return 0;
}
