#pragma once

namespace qpemerge {

inline constexpr const char* kLogLevelEnv = "QPE_MERGE_LOG";

/// Routes log output to stderr at the level named by $QPE_MERGE_LOG
/// (trace, debug, info, warn, error, off; default warn).
void configure_logging_from_env();

}  // namespace qpemerge
