#include "qdcap/parallel.hpp"

#include <omp.h>

namespace qdcap {

namespace {
int default_threads = -1;
}

void set_threads(int n) {
  if (default_threads < 0) default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : default_threads);
}

int threads() { return omp_get_max_threads(); }

}  // namespace qdcap
