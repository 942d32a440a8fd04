#include "qdcap/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace qdcap::log {
namespace {

Level from_env() {
  const char* env = std::getenv("QDCAP_LOG");
  if (!env) return Level::info;
  const std::string v = env;
  if (v == "quiet") return Level::quiet;
  if (v == "debug") return Level::debug;
  return Level::info;
}

std::atomic<int>& current() {
  static std::atomic<int> lvl{static_cast<int>(from_env())};
  return lvl;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

void emit(std::string_view prefix, std::string_view msg) {
  std::lock_guard lock(sink_mutex());
  std::cerr << prefix << msg << '\n';
}

}  // namespace

Level level() { return static_cast<Level>(current().load()); }
void set_level(Level lvl) { current().store(static_cast<int>(lvl)); }

void info(std::string_view msg) {
  if (level() >= Level::info) emit("", msg);
}

void debug(std::string_view msg) {
  if (level() >= Level::debug) emit("debug: ", msg);
}

void warn(std::string_view msg) {
  if (level() >= Level::info) emit("warning: ", msg);
}

}  // namespace qdcap::log
