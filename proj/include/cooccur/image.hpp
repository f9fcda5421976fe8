#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cooccur/tensor.hpp"

namespace cooccur {

// RGB image, channel values in [0,1], row-major (y, x, rgb).
struct ImageBuffer {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // height*width*3

  ImageBuffer() = default;
  ImageBuffer(std::size_t h, std::size_t w)
      : height(h), width(w), pixels(h * w * 3, 0.0) {}

  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * 3 + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * 3 + c];
  }
};

// Per-pixel integer region labels aligned with an image.
struct RegionMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<uint16_t> ids;

  RegionMap() = default;
  RegionMap(std::size_t h, std::size_t w) : height(h), width(w), ids(h * w, 0) {}

  uint16_t& at(std::size_t y, std::size_t x) { return ids[y * width + x]; }
  uint16_t at(std::size_t y, std::size_t x) const { return ids[y * width + x]; }
};

// Binary P6 PPM, maxval 255; channels map to [0,1] as v/255.
ImageBuffer read_ppm(const std::string& path);
void write_ppm(const std::string& path, const ImageBuffer& img);

// Region maps persist as 16-bit P5 PGM (maxval 65535, big-endian samples).
RegionMap read_pgm16(const std::string& path);
void write_pgm16(const std::string& path, const RegionMap& map);

// Extracts a side x side x 3 patch centered at (cy, cx). With circular=true,
// pixels farther than side/2 from the patch center are zeroed.
Tensor extract_patch(const ImageBuffer& img, std::size_t cy, std::size_t cx,
                     std::size_t side = 17, bool circular = true);

// Center-crops to square, then box-filters (exact area averaging) down to
// side x side. Accepts any image at least side pixels in each dimension.
Tensor crop_downsample(const ImageBuffer& img, std::size_t side);

// Whole image as an (h, w, 3) tensor.
Tensor image_to_tensor(const ImageBuffer& img);
ImageBuffer tensor_to_image(const Tensor& t);

}  // namespace cooccur
