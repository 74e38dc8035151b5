#pragma once

#include <filesystem>

#include "stik/linops.hpp"

namespace stik {

struct GrayImage {
    Index width = 0;
    Index height = 0;
    int maxval = 255;
    /// Row-major gray levels in [0, maxval].
    Vector pixels;
};

/// Reads ASCII (P2) or binary (P5) PGM, 8 or 16 bit. Throws InvalidArgument
/// on malformed files.
GrayImage read_pgm(const std::filesystem::path& path);

/// Writes binary P5 (or ASCII P2 when `ascii`); values are rounded and
/// clamped to [0, maxval].
void write_pgm(const std::filesystem::path& path, const GrayImage& image, bool ascii = false);

}  // namespace stik
