#pragma once

#include <string>

#include "vecsynth/attention.hpp"
#include "vecsynth/raster.hpp"

namespace vecsynth {

/// 8-bit sRGB PNG. Values are clamped to [0, 1] and rounded. I/O failures
/// raise std::runtime_error; malformed files raise ParseError.
void write_png(const std::string& path, const RasterImage& image);
RasterImage read_png(const std::string& path);

/// Binary 16-bit PGM (P5, maxval 65535). Values are clamped to [0, 1].
void write_pgm16(const std::string& path, const AttentionMap& map);
/// Reads P5 files with any maxval up to 65535, normalized to [0, 1].
AttentionMap read_pgm(const std::string& path);

}  // namespace vecsynth
