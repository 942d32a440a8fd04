#pragma once

namespace qdcap::cli {

/// Subcommand driver. Returns 0 on success, 1 on validation errors and usage
/// problems, 2 on solver failures.
int run(int argc, char** argv);

}  // namespace qdcap::cli
