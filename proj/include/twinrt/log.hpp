#pragma once

#include <spdlog/logger.h>

#include <memory>

namespace twinrt {

/// Shared diagnostic logger; writes to stderr so stdout stays free for
/// machine-readable CLI output.
std::shared_ptr<spdlog::logger> log();

} // namespace twinrt
