#pragma once

namespace subdiff::cli {

/// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
/// 4 a requested --check failed.
int run(int argc, char** argv);

}  // namespace subdiff::cli
