#include <math.h>
#include <stdio.h>
#include "cradle.h"

#define CHECK(call)                                                          \
  do {                                                                       \
    CradleStatus s_ = (call);                                                \
    if (s_ != CRADLE_STATUS_OK) {                                            \
      const char *m_ = cradle_last_error();                                  \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, m_ ? m_ : "(null)"); \
      return 1;                                                              \
    }                                                                        \
  } while (0)

int main(void) {
  CradleChain *chain = NULL;
  double tau = 0.0, eta = 0.0, probs[23];
  CHECK(cradle_chain_from_pitches(23, 5.0, 16.0, 0.0, 0.0, &chain));
  CHECK(cradle_chain_find_peak(chain, 0.0, 0.0, &tau, &eta));
  CHECK(cradle_chain_probabilities(chain, tau, probs, 23));
  double total = 0.0;
  for (int i = 0; i < 23; i++) total += probs[i];
  if (fabs(total - 1.0) > 1e-10 || fabs(probs[22] - eta) > 1e-12) return 2;

  if (cradle_chain_probabilities(chain, tau, probs, 5) != CRADLE_STATUS_BUFFER_TOO_SMALL) return 3;
  if (cradle_last_error() == NULL) return 4;
  cradle_chain_free(chain);

  CradleSourceModel model = {CRADLE_SOURCE_KIND_COHERENT, 0.2, 1.0, 1.0, 0.0, CRADLE_PAIR_LAW_BERNOULLI};
  CradleClickCounts counts;
  double g2 = 0.0, se = 0.0;
  CHECK(cradle_simulate_counts(&model, 100000, 1, &counts));
  CHECK(cradle_estimate(&counts, CRADLE_ESTIMATOR_SIGNAL_AUTOCORRELATION, &g2, &se));
  if (fabs(g2 - 1.0) > 4.0 * se) return 5;

  printf("%s %.6f %.6f\n", cradle_version(), tau, eta);
  return 0;
}
