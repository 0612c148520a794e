#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spin {

// Minimal uncompressed image writers for qualitative inspection. Values are
// clamped to [0,1] and quantized to 8 bits.

// Binary PGM (P5).
void write_pgm(const std::string& path, const float* values, int H, int W);

// Binary PPM (P6): grayscale slice with the mask contour drawn in red.
// Contour pixels are mask pixels with at least one 4-neighbor outside it.
void write_overlay_ppm(const std::string& path, const float* slice, const uint8_t* mask, int H,
                       int W);

// Tile a stack of equally sized planes into one grid image (one-pixel gaps),
// normalizing each plane to its own min/max.
void write_feature_grid_pgm(const std::string& path, const std::vector<const float*>& planes,
                            int H, int W);

}  // namespace spin
