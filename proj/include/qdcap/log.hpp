#pragma once

#include <string_view>

namespace qdcap::log {

enum class Level { quiet = 0, info = 1, debug = 2 };

/// Current level; initialised from QDCAP_LOG on first use (default info).
Level level();
void set_level(Level lvl);

void info(std::string_view msg);
void debug(std::string_view msg);
void warn(std::string_view msg);

}  // namespace qdcap::log
