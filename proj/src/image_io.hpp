#pragma once

#include <string>
#include <vector>

#include "render.hpp"

namespace kin::render {

// Binary PGM (P5, maxval 255) writers for debugging and inspection.
// Depth maps [near, far] linearly onto [0, 255]; gray maps [0, 1].
void write_pgm_depth(const Image& img, double near, double far,
                     const std::string& path);
void write_pgm_gray(const Image& img, const std::string& path);

// Raw bytes row-major, used for heatmap exports as well.
void write_pgm_bytes(const std::vector<unsigned char>& bytes, int width,
                     int height, const std::string& path);

} // namespace kin::render
