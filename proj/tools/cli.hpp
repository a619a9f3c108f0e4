#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vecsynth/raster.hpp"

namespace vecsynth::cli {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_usage = 2, exit_backend = 3 };

/// Runs `vecsynth <args...>` (args exclude the program name). Output files
/// go where the flags say; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses an SVG document and renders it at size x size, scaling the
/// geometry from the document's own canvas.
RasterImage render_svg(std::string_view svg, int size);

}  // namespace vecsynth::cli
