#include "qpemerge/logging.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string>

namespace qpemerge {

void configure_logging_from_env() {
  auto logger = spdlog::stderr_logger_mt("qpe-merge");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv(kLogLevelEnv); level != nullptr && *level != '\0') {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace qpemerge
