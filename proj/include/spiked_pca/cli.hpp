#pragma once

#include <iosfwd>

namespace spiked {

/// Entry point of the `spiked-pca` command line tool.
///
/// Returns 0 on success, 1 on domain/format/I-O errors and 2 when a fit fails
/// numerically. Diagnostics go to `err`, results to `out`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spiked
