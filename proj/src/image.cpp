#include "cooccur/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "cooccur/errors.hpp"

namespace cooccur {

namespace {

// Reads one PNM header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) continue;
    break;
  }
  if (ch == EOF) return tok;
  tok.push_back(static_cast<char>(ch));
  while ((ch = in.get()) != EOF && !std::isspace(ch))
    tok.push_back(static_cast<char>(ch));
  return tok;
}

std::size_t parse_dim(const std::string& tok, const char* what,
                      const std::string& path) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    fail(ErrorCategory::Ingestion, path + ": bad " + std::string(what));
  return std::stoull(tok);
}

}  // namespace

ImageBuffer read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::Ingestion, path + ": cannot open");
  std::string magic = pnm_token(in);
  if (magic != "P6")
    fail(ErrorCategory::Ingestion, path + ": unsupported format (want P6)");
  const std::size_t w = parse_dim(pnm_token(in), "width", path);
  const std::size_t h = parse_dim(pnm_token(in), "height", path);
  const std::size_t maxval = parse_dim(pnm_token(in), "maxval", path);
  if (maxval != 255)
    fail(ErrorCategory::Ingestion, path + ": unsupported maxval");
  if (w == 0 || h == 0) fail(ErrorCategory::Ingestion, path + ": empty image");
  std::vector<unsigned char> raw(w * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    fail(ErrorCategory::Ingestion, path + ": truncated pixel payload");
  ImageBuffer img(h, w);
  for (std::size_t i = 0; i < raw.size(); ++i)
    img.pixels[i] = raw[i] / 255.0;
  return img;
}

void write_ppm(const std::string& path, const ImageBuffer& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::Ingestion, path + ": cannot write");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    double v = img.pixels[i];
    v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) fail(ErrorCategory::Ingestion, path + ": write failed");
}

RegionMap read_pgm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::Ingestion, path + ": cannot open");
  std::string magic = pnm_token(in);
  if (magic != "P5")
    fail(ErrorCategory::Ingestion, path + ": unsupported format (want P5)");
  const std::size_t w = parse_dim(pnm_token(in), "width", path);
  const std::size_t h = parse_dim(pnm_token(in), "height", path);
  const std::size_t maxval = parse_dim(pnm_token(in), "maxval", path);
  if (maxval != 65535)
    fail(ErrorCategory::Ingestion, path + ": unsupported maxval");
  std::vector<unsigned char> raw(w * h * 2);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    fail(ErrorCategory::Ingestion, path + ": truncated payload");
  RegionMap map(h, w);
  for (std::size_t i = 0; i < map.ids.size(); ++i)
    map.ids[i] = static_cast<uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  return map;
}

void write_pgm16(const std::string& path, const RegionMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::Ingestion, path + ": cannot write");
  out << "P5\n" << map.width << " " << map.height << "\n65535\n";
  std::vector<unsigned char> raw(map.ids.size() * 2);
  for (std::size_t i = 0; i < map.ids.size(); ++i) {
    raw[2 * i] = static_cast<unsigned char>(map.ids[i] >> 8);
    raw[2 * i + 1] = static_cast<unsigned char>(map.ids[i] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) fail(ErrorCategory::Ingestion, path + ": write failed");
}

Tensor extract_patch(const ImageBuffer& img, std::size_t cy, std::size_t cx,
                     std::size_t side, bool circular) {
  const std::size_t r = side / 2;
  if (cy < r || cx < r || cy + r >= img.height || cx + r >= img.width)
    fail(ErrorCategory::Bounds,
         "patch window outside image bounds at (" + std::to_string(cy) + "," +
             std::to_string(cx) + ")");
  Tensor out({side, side, 3});
  const double r2 = (side / 2.0) * (side / 2.0);
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const double dy = static_cast<double>(y) - static_cast<double>(r);
      const double dx = static_cast<double>(x) - static_cast<double>(r);
      if (circular && dy * dy + dx * dx > r2) continue;
      const std::size_t sy = cy - r + y;
      const std::size_t sx = cx - r + x;
      for (std::size_t c = 0; c < 3; ++c) out.at3(y, x, c) = img.at(sy, sx, c);
    }
  }
  return out;
}

Tensor crop_downsample(const ImageBuffer& img, std::size_t side) {
  const std::size_t sq = std::min(img.height, img.width);
  if (sq < side)
    fail(ErrorCategory::Input, "image smaller than target side " +
                                   std::to_string(side));
  const std::size_t y0 = (img.height - sq) / 2;
  const std::size_t x0 = (img.width - sq) / 2;
  Tensor out({side, side, 3});
  const double step = static_cast<double>(sq) / static_cast<double>(side);
  for (std::size_t oy = 0; oy < side; ++oy) {
    const double ys = y0 + oy * step;
    const double ye = y0 + (oy + 1) * step;
    for (std::size_t ox = 0; ox < side; ++ox) {
      const double xs = x0 + ox * step;
      const double xe = x0 + (ox + 1) * step;
      double acc[3] = {0, 0, 0};
      double area = 0.0;
      for (std::size_t y = static_cast<std::size_t>(ys);
           y < static_cast<std::size_t>(std::ceil(ye)); ++y) {
        const double hy = std::min<double>(ye, y + 1) - std::max<double>(ys, y);
        if (hy <= 0) continue;
        for (std::size_t x = static_cast<std::size_t>(xs);
             x < static_cast<std::size_t>(std::ceil(xe)); ++x) {
          const double hx =
              std::min<double>(xe, x + 1) - std::max<double>(xs, x);
          if (hx <= 0) continue;
          const double wgt = hy * hx;
          for (std::size_t c = 0; c < 3; ++c) acc[c] += wgt * img.at(y, x, c);
          area += wgt;
        }
      }
      for (std::size_t c = 0; c < 3; ++c) out.at3(oy, ox, c) = acc[c] / area;
    }
  }
  return out;
}

Tensor image_to_tensor(const ImageBuffer& img) {
  Tensor t({img.height, img.width, 3});
  t.data = img.pixels;
  return t;
}

ImageBuffer tensor_to_image(const Tensor& t) {
  if (t.shape.size() != 3 || t.shape[2] != 3)
    fail(ErrorCategory::InputShape, "tensor_to_image: want (h,w,3) tensor");
  ImageBuffer img(t.shape[0], t.shape[1]);
  img.pixels = t.data;
  return img;
}

}  // namespace cooccur
