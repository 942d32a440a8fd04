#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>

#include "qdcap/log.hpp"

int main(int argc, char** argv) {
  // Solver progress lines drown the report; QDCAP_LOG still wins when set.
  if (std::getenv("QDCAP_LOG") == nullptr) qdcap::log::set_level(qdcap::log::Level::quiet);
  doctest::Context context(argc, argv);
  return context.run();
}
