#include "cooccur/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "cooccur/errors.hpp"
#include "cooccur/rng.hpp"

namespace cooccur::data {

using nlohmann::json;

namespace {

// Manifest-relative paths resolve against the manifest's directory.
std::string resolve_path(const std::string& manifest_path,
                         const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path fp(p);
  if (fp.is_absolute()) return p;
  return (std::filesystem::path(manifest_path).parent_path() / fp).string();
}

}  // namespace

namespace {

constexpr double kEarthRadiusM = 6371000.0;
constexpr double kPi = 3.14159265358979323846;
constexpr double kMetersPerDegLat = kEarthRadiusM * kPi / 180.0;

constexpr std::array<std::array<double, 3>, 5> kPalette = {{
    {0.80, 0.25, 0.22},
    {0.22, 0.68, 0.30},
    {0.25, 0.38, 0.80},
    {0.78, 0.70, 0.25},
    {0.62, 0.30, 0.72},
}};

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// One texture sample: base color modulated by a horizontal sinusoid.
inline double texel(const TextureStyle& s, std::size_t c, double y,
                    double brightness, double noise) {
  const double mod = 1.0 + s.amp * std::sin(2.0 * kPi * s.freq * y + s.phase);
  return clamp01(s.color[c] * brightness * mod + noise);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::Ingestion, path + ": cannot open");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

json parse_line(const std::string& path, std::size_t lineno,
                const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    fail(ErrorCategory::Ingestion,
         path + ":" + std::to_string(lineno + 1) + ": bad manifest record");
  return j;
}

}  // namespace

// --- manifests ----------------------------------------------------------

std::vector<FrameRecord> read_frame_manifest(const std::string& path) {
  std::vector<FrameRecord> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const json j = parse_line(path, i, lines[i]);
    if (!j.contains("path") || !j.contains("t") || !j.contains("movie"))
      fail(ErrorCategory::Ingestion,
           path + ":" + std::to_string(i + 1) + ": missing path/t/movie");
    FrameRecord r;
    r.path = resolve_path(path, j.at("path").get<std::string>());
    r.t = j.at("t").get<double>();
    r.movie = j.at("movie").get<std::string>();
    if (j.contains("chapter") && !j.at("chapter").is_null())
      r.chapter = j.at("chapter").get<int>();
    if (r.t < 0.0)
      fail(ErrorCategory::Ingestion,
           path + ":" + std::to_string(i + 1) + ": negative timestamp");
    out.push_back(std::move(r));
  }
  return out;
}

void write_frame_manifest(const std::string& path,
                          const std::vector<FrameRecord>& records) {
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::Ingestion, path + ": cannot write");
  for (const FrameRecord& r : records) {
    json j = {{"path", r.path}, {"t", r.t}, {"movie", r.movie}};
    if (r.chapter) j["chapter"] = *r.chapter;
    out << j.dump() << "\n";
  }
}

std::vector<GeoPhotoRecord> read_geo_manifest(const std::string& path) {
  std::vector<GeoPhotoRecord> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const json j = parse_line(path, i, lines[i]);
    if (!j.contains("path") || !j.contains("lat") || !j.contains("lon"))
      fail(ErrorCategory::Ingestion,
           path + ":" + std::to_string(i + 1) + ": missing path/lat/lon");
    GeoPhotoRecord r;
    r.path = resolve_path(path, j.at("path").get<std::string>());
    r.lat = j.at("lat").get<double>();
    r.lon = j.at("lon").get<double>();
    if (j.contains("place") && !j.at("place").is_null())
      r.place = j.at("place").get<std::string>();
    if (std::abs(r.lat) > 90.0 || std::abs(r.lon) > 180.0)
      fail(ErrorCategory::Ingestion,
           path + ":" + std::to_string(i + 1) + ": lat/lon out of range");
    out.push_back(std::move(r));
  }
  return out;
}

void write_geo_manifest(const std::string& path,
                        const std::vector<GeoPhotoRecord>& records) {
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::Ingestion, path + ": cannot write");
  for (const GeoPhotoRecord& r : records) {
    json j = {{"path", r.path}, {"lat", r.lat}, {"lon", r.lon}};
    if (r.place) j["place"] = *r.place;
    out << j.dump() << "\n";
  }
}

std::vector<MosaicRecord> read_mosaic_manifest(const std::string& path) {
  std::vector<MosaicRecord> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const json j = parse_line(path, i, lines[i]);
    if (!j.contains("image"))
      fail(ErrorCategory::Ingestion,
           path + ":" + std::to_string(i + 1) + ": missing image");
    MosaicRecord r;
    r.image_path = resolve_path(path, j.at("image").get<std::string>());
    if (j.contains("gt") && !j.at("gt").is_null())
      r.gt_path = resolve_path(path, j.at("gt").get<std::string>());
    out.push_back(std::move(r));
  }
  return out;
}

void write_mosaic_manifest(const std::string& path,
                           const std::vector<MosaicRecord>& records) {
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::Ingestion, path + ": cannot write");
  for (const MosaicRecord& r : records) {
    json j = {{"image", r.image_path}};
    if (!r.gt_path.empty()) j["gt"] = r.gt_path;
    out << j.dump() << "\n";
  }
}

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  const double p1 = lat1 * kPi / 180.0, p2 = lat2 * kPi / 180.0;
  const double dp = p2 - p1;
  const double dl = (lon2 - lon1) * kPi / 180.0;
  const double a = std::sin(dp / 2) * std::sin(dp / 2) +
                   std::cos(p1) * std::cos(p2) * std::sin(dl / 2) *
                       std::sin(dl / 2);
  return 2.0 * kEarthRadiusM *
         std::atan2(std::sqrt(a), std::sqrt(1.0 - a));
}

// --- generators ---------------------------------------------------------

std::size_t palette_size() { return kPalette.size(); }

std::array<double, 3> palette_color(std::size_t i) {
  return kPalette[i % kPalette.size()];
}

namespace {

TextureStyle draw_style(Rng& rng, double freq_lo, double freq_hi,
                        double amp_lo, double amp_hi) {
  TextureStyle s;
  s.color = kPalette[rng.uniform_int(kPalette.size())];
  s.freq = rng.uniform(freq_lo, freq_hi);
  s.phase = rng.uniform(0.0, 2.0 * kPi);
  s.amp = rng.uniform(amp_lo, amp_hi);
  return s;
}

}  // namespace

MosaicDataset gen_mosaic_dataset(const MosaicConfig& cfg, uint64_t seed) {
  MosaicDataset ds;
  ds.images.reserve(cfg.image_count);
  const double side = static_cast<double>(cfg.side);
  for (std::size_t ii = 0; ii < cfg.image_count; ++ii) {
    Rng rng(derive_seed(seed, "mosaic.img", ii));
    const uint32_t want =
        cfg.min_regions +
        static_cast<uint32_t>(rng.uniform_int(cfg.max_regions - cfg.min_regions + 1));

    std::vector<std::pair<double, double>> seeds;
    RegionMap map(cfg.side, cfg.side);
    std::vector<std::size_t> counts;
    // Retry layouts whose smallest region would be too small to learn from.
    for (int attempt = 0; attempt < 20; ++attempt) {
      seeds.clear();
      const double min_d = 0.38 * side / std::sqrt(double(want));
      for (uint32_t r = 0; r < want; ++r) {
        std::pair<double, double> p;
        for (int tries = 0; tries < 200; ++tries) {
          p = {rng.uniform(0.0, side), rng.uniform(0.0, side)};
          bool ok = true;
          for (const auto& q : seeds)
            if (std::hypot(p.first - q.first, p.second - q.second) < min_d)
              ok = false;
          if (ok) break;
        }
        seeds.push_back(p);
      }
      const double psi1 = rng.uniform(0.0, 2.0 * kPi);
      const double psi2 = rng.uniform(0.0, 2.0 * kPi);
      counts.assign(want, 0);
      for (std::size_t y = 0; y < cfg.side; ++y) {
        for (std::size_t x = 0; x < cfg.side; ++x) {
          const double wy =
              y + cfg.warp_amp *
                      std::sin(2.0 * kPi * x / cfg.warp_wavelength + psi1);
          const double wx =
              x + cfg.warp_amp *
                      std::sin(2.0 * kPi * y / cfg.warp_wavelength + psi2);
          uint16_t best = 0;
          double best_d = 1e30;
          for (std::size_t s = 0; s < seeds.size(); ++s) {
            const double d = (wy - seeds[s].first) * (wy - seeds[s].first) +
                             (wx - seeds[s].second) * (wx - seeds[s].second);
            if (d < best_d) {
              best_d = d;
              best = static_cast<uint16_t>(s);
            }
          }
          map.at(y, x) = best;
          ++counts[best];
        }
      }
      const std::size_t min_px = *std::min_element(counts.begin(), counts.end());
      if (double(min_px) >= cfg.min_region_fraction * side * side) break;
    }

    // Compact region ids in case a region ended up empty.
    std::vector<uint16_t> remap(want, 0);
    uint16_t next = 0;
    for (uint32_t r = 0; r < want; ++r)
      if (counts[r] > 0) remap[r] = next++;
    for (uint16_t& id : map.ids) id = remap[id];

    std::vector<TextureStyle> styles(next);
    for (auto& s : styles)
      s = draw_style(rng, cfg.freq_lo, cfg.freq_hi, cfg.amp_lo, cfg.amp_hi);

    ImageBuffer img(cfg.side, cfg.side);
    for (std::size_t y = 0; y < cfg.side; ++y)
      for (std::size_t x = 0; x < cfg.side; ++x) {
        const TextureStyle& s = styles[map.at(y, x)];
        for (std::size_t c = 0; c < 3; ++c)
          img.at(y, x, c) =
              texel(s, c, double(y), 1.0, rng.uniform(-cfg.noise, cfg.noise));
      }

    ds.images.push_back(std::move(img));
    ds.regions.push_back(std::move(map));
    ds.styles.push_back(std::move(styles));
  }
  return ds;
}

SceneVideo gen_scene_video(const SceneVideoConfig& cfg, uint64_t seed) {
  if (cfg.scene_count == 0 || cfg.fps <= 0.0)
    fail(ErrorCategory::Config, "gen_scene_video: bad scene count or fps");
  Rng rng(derive_seed(seed, "video.layout"));
  SceneVideo v;
  v.movie_name = cfg.movie_name;

  std::vector<double> lengths(cfg.scene_count);
  for (double& len : lengths)
    len = cfg.scene_len_mean +
          rng.uniform(-cfg.scene_len_jitter, cfg.scene_len_jitter);

  struct SceneParams {
    TextureStyle style;
    double drift, wobble_phase;
  };
  std::vector<SceneParams> scenes(cfg.scene_count);
  for (std::size_t s = 0; s < cfg.scene_count; ++s) {
    TextureStyle st = draw_style(rng, 0.04, 0.12, 0.15, 0.25);
    if (s > 0) {
      if (rng.uniform() < cfg.color_repeat_prob)
        st.color = scenes[s - 1].style.color;
      // Consecutive scenes always differ in stripe frequency so every
      // boundary is visible to a texture-aware measure.
      while (std::abs(st.freq - scenes[s - 1].style.freq) < 0.02)
        st.freq = rng.uniform(0.04, 0.12);
    }
    scenes[s] = {st, rng.uniform(cfg.drift_lo, cfg.drift_hi),
                 rng.uniform(0.0, 2.0 * kPi)};
  }

  std::vector<double> starts(cfg.scene_count + 1, 0.0);
  for (std::size_t s = 0; s < cfg.scene_count; ++s)
    starts[s + 1] = starts[s] + lengths[s];
  for (std::size_t s = 1; s < cfg.scene_count; ++s)
    v.gt_boundaries.push_back(starts[s]);
  for (const SceneParams& sp : scenes) v.scene_styles.push_back(sp.style);

  const double total = starts.back();
  Rng frame_rng(derive_seed(seed, "video.frames"));
  std::size_t scene = 0;
  for (double t = 0.0; t < total; t += 1.0 / cfg.fps) {
    while (scene + 1 < cfg.scene_count && t >= starts[scene + 1]) ++scene;
    const SceneParams& sp = scenes[scene];
    const double local = t - starts[scene];
    const double bright =
        1.0 + cfg.wobble_amp * std::sin(2.0 * kPi * local / cfg.wobble_period +
                                        sp.wobble_phase);
    TextureStyle st = sp.style;
    st.phase += sp.drift * local;
    ImageBuffer img(cfg.render_side, cfg.render_side);
    for (std::size_t y = 0; y < cfg.render_side; ++y)
      for (std::size_t x = 0; x < cfg.render_side; ++x)
        for (std::size_t c = 0; c < 3; ++c)
          img.at(y, x, c) = texel(st, c, double(y), bright,
                                  frame_rng.uniform(-cfg.noise, cfg.noise));
    v.frames.push_back(std::move(img));
    v.times.push_back(t);
    v.chapter.push_back(static_cast<int>(scene));
  }
  return v;
}

GeoCollection gen_geo_collection(const GeoCollectionConfig& cfg,
                                 uint64_t seed) {
  if (cfg.place_count == 0)
    fail(ErrorCategory::Config, "gen_geo_collection: no places");
  Rng rng(derive_seed(seed, "geo.layout"));
  GeoCollection g;

  const std::size_t cols =
      static_cast<std::size_t>(std::ceil(std::sqrt(double(cfg.place_count))));
  const double dlat = cfg.place_separation_m / kMetersPerDegLat;
  const double m_per_deg_lon =
      kMetersPerDegLat * std::cos(cfg.base_lat * kPi / 180.0);
  const double dlon = cfg.place_separation_m / m_per_deg_lon;

  std::vector<TextureStyle> styles(cfg.place_count);
  for (std::size_t p = 0; p < cfg.place_count; ++p) {
    TextureStyle st = draw_style(rng, 0.04, 0.12, 0.15, 0.25);
    // Same-colored places must stay separable by stripe frequency.
    bool ok = false;
    while (!ok) {
      ok = true;
      for (std::size_t q = 0; q < p; ++q)
        if (styles[q].color == st.color &&
            std::abs(styles[q].freq - st.freq) < 0.015) {
          st.freq = rng.uniform(0.04, 0.12);
          ok = false;
        }
    }
    styles[p] = st;
  }
  g.place_styles = styles;

  Rng photo_rng(derive_seed(seed, "geo.photos"));
  for (std::size_t p = 0; p < cfg.place_count; ++p) {
    const double clat = cfg.base_lat + double(p / cols) * dlat;
    const double clon = cfg.base_lon + double(p % cols) * dlon;
    for (std::size_t i = 0; i < cfg.photos_per_place; ++i) {
      const double ang = photo_rng.uniform(0.0, 2.0 * kPi);
      const double rad = cfg.jitter_m * std::sqrt(photo_rng.uniform());
      const double north = rad * std::cos(ang);
      const double east = rad * std::sin(ang);
      g.lat.push_back(clat + north / kMetersPerDegLat);
      g.lon.push_back(clon + east / m_per_deg_lon);
      g.place.push_back(static_cast<int>(p));

      TextureStyle st = styles[p];
      st.phase = photo_rng.uniform(0.0, 2.0 * kPi);
      const double bright = 1.0 + photo_rng.uniform(-cfg.brightness_jitter,
                                                    cfg.brightness_jitter);
      ImageBuffer img(cfg.render_side, cfg.render_side);
      for (std::size_t y = 0; y < cfg.render_side; ++y)
        for (std::size_t x = 0; x < cfg.render_side; ++x)
          for (std::size_t c = 0; c < 3; ++c)
            img.at(y, x, c) = texel(st, c, double(y), bright,
                                    photo_rng.uniform(-cfg.noise, cfg.noise));
      g.photos.push_back(std::move(img));
    }
  }
  return g;
}

// --- samplers -----------------------------------------------------------

bool in_positive_band(double dy, double dx, const PatchSamplerConfig& cfg) {
  const double d = std::hypot(dy, dx);
  return d >= cfg.band_lo && d <= cfg.band_hi;
}

namespace {

struct BandOffsets {
  std::vector<std::pair<int, int>> offsets;
};

BandOffsets band_offsets(const PatchSamplerConfig& cfg) {
  BandOffsets out;
  const int hi = static_cast<int>(std::floor(cfg.band_hi));
  for (int dy = -hi; dy <= hi; ++dy)
    for (int dx = -hi; dx <= hi; ++dx)
      if (in_positive_band(dy, dx, cfg)) out.offsets.emplace_back(dy, dx);
  return out;
}

constexpr std::size_t kSamplerAttemptCap = 200000;

}  // namespace

std::vector<PairExample> sample_patch_pairs(
    const std::vector<ImageBuffer>& images, const std::vector<RegionMap>* gt,
    std::size_t n, uint64_t seed, const PatchSamplerConfig& cfg) {
  if (n < 2) fail(ErrorCategory::Sampling, "sample_patch_pairs: n must be >= 2");
  if (images.empty())
    fail(ErrorCategory::Sampling, "sample_patch_pairs: no images");
  if (gt && gt->size() != images.size())
    fail(ErrorCategory::Sampling,
         "sample_patch_pairs: ground truth count mismatch");
  const std::size_t r = cfg.side / 2;
  const BandOffsets band = band_offsets(cfg);
  Rng rng(derive_seed(seed, "sampler.patch"));

  auto pick_center = [&](std::size_t img_idx, std::size_t& cy,
                         std::size_t& cx) -> bool {
    const ImageBuffer& img = images[img_idx];
    if (img.height < cfg.side || img.width < cfg.side) return false;
    cy = r + rng.uniform_int(img.height - cfg.side + 1);
    cx = r + rng.uniform_int(img.width - cfg.side + 1);
    return true;
  };

  auto q_of = [&](std::size_t ia, std::size_t ay, std::size_t ax,
                  std::size_t ib, std::size_t by,
                  std::size_t bx) -> std::optional<int> {
    if (!gt) return std::nullopt;
    if (ia != ib) return 0;
    return (*gt)[ia].at(ay, ax) == (*gt)[ib].at(by, bx) ? 1 : 0;
  };

  std::vector<PairExample> out;
  const std::size_t n_pos = (n + 1) / 2;
  std::size_t failures = 0;
  while (out.size() < n_pos) {
    if (failures > kSamplerAttemptCap)
      fail(ErrorCategory::Sampling,
           "sample_patch_pairs: cannot place positive pairs (images too small)");
    const std::size_t img = rng.uniform_int(images.size());
    std::size_t ay, ax;
    if (!pick_center(img, ay, ax)) {
      ++failures;
      continue;
    }
    const auto [dy, dx] = band.offsets[rng.uniform_int(band.offsets.size())];
    const long by = long(ay) + dy, bx = long(ax) + dx;
    const ImageBuffer& im = images[img];
    if (by < long(r) || bx < long(r) || by + long(r) >= long(im.height) ||
        bx + long(r) >= long(im.width)) {
      ++failures;
      continue;
    }
    PairExample ex;
    ex.a = extract_patch(im, ay, ax, cfg.side, cfg.circular);
    ex.b = extract_patch(im, std::size_t(by), std::size_t(bx), cfg.side,
                         cfg.circular);
    ex.c_label = 1;
    ex.q_label = q_of(img, ay, ax, img, by, bx);
    ex.meta = {int32_t(img), int32_t(img), double(ay), double(ax),
               double(by), double(bx)};
    out.push_back(std::move(ex));
    failures = 0;
  }

  const std::size_t n_neg = n / 2;
  failures = 0;
  while (out.size() < n_pos + n_neg) {
    if (failures > kSamplerAttemptCap)
      fail(ErrorCategory::Sampling,
           "sample_patch_pairs: cannot place negative pairs");
    const std::size_t ia = rng.uniform_int(images.size());
    const std::size_t ib = rng.uniform_int(images.size());
    std::size_t ay, ax, by, bx;
    if (!pick_center(ia, ay, ax) || !pick_center(ib, by, bx)) {
      ++failures;
      continue;
    }
    PairExample ex;
    ex.a = extract_patch(images[ia], ay, ax, cfg.side, cfg.circular);
    ex.b = extract_patch(images[ib], by, bx, cfg.side, cfg.circular);
    ex.c_label = 0;
    ex.q_label = q_of(ia, ay, ax, ib, by, bx);
    ex.meta = {int32_t(ia), int32_t(ib), double(ay), double(ax), double(by),
               double(bx)};
    out.push_back(std::move(ex));
    failures = 0;
  }
  rng.shuffle(out);
  return out;
}

std::vector<PairExample> sample_patch_q_eval_pairs(
    const std::vector<ImageBuffer>& images, const std::vector<RegionMap>& gt,
    std::size_t n, uint64_t seed, const PatchSamplerConfig& cfg) {
  if (images.size() != gt.size())
    fail(ErrorCategory::Sampling, "q-eval sampler: ground truth mismatch");
  const std::size_t r = cfg.side / 2;
  const BandOffsets band = band_offsets(cfg);
  Rng rng(derive_seed(seed, "sampler.patch_q"));

  const std::size_t want_q1 = (n + 1) / 2;
  const std::size_t want_q0 = n - want_q1;
  std::vector<PairExample> q1, q0;
  std::size_t attempts = 0;
  while (q1.size() < want_q1 || q0.size() < want_q0) {
    if (++attempts > kSamplerAttemptCap * 10)
      fail(ErrorCategory::Sampling,
           "q-eval sampler: cannot balance Q labels on this data");
    const std::size_t img = rng.uniform_int(images.size());
    const ImageBuffer& im = images[img];
    if (im.height < cfg.side || im.width < cfg.side) continue;
    const std::size_t ay = r + rng.uniform_int(im.height - cfg.side + 1);
    const std::size_t ax = r + rng.uniform_int(im.width - cfg.side + 1);
    const auto [dy, dx] = band.offsets[rng.uniform_int(band.offsets.size())];
    const long by = long(ay) + dy, bx = long(ax) + dx;
    if (by < long(r) || bx < long(r) || by + long(r) >= long(im.height) ||
        bx + long(r) >= long(im.width))
      continue;
    const int q = gt[img].at(ay, ax) == gt[img].at(by, bx) ? 1 : 0;
    auto& bucket = q == 1 ? q1 : q0;
    const std::size_t want = q == 1 ? want_q1 : want_q0;
    if (bucket.size() >= want) continue;
    PairExample ex;
    ex.a = extract_patch(im, ay, ax, cfg.side, cfg.circular);
    ex.b = extract_patch(im, std::size_t(by), std::size_t(bx), cfg.side,
                         cfg.circular);
    ex.c_label = 1;
    ex.q_label = q;
    ex.meta = {int32_t(img), int32_t(img), double(ay), double(ax), double(by),
               double(bx)};
    bucket.push_back(std::move(ex));
  }
  std::vector<PairExample> out;
  out.reserve(n);
  for (auto& e : q1) out.push_back(std::move(e));
  for (auto& e : q0) out.push_back(std::move(e));
  rng.shuffle(out);
  return out;
}

// --- frames -------------------------------------------------------------

FrameSet load_frames(const std::vector<FrameRecord>& manifest,
                     std::size_t side) {
  FrameSet fs;
  fs.records = manifest;
  fs.tensors.reserve(manifest.size());
  std::map<std::string, Tensor> cache;
  for (const FrameRecord& r : manifest) {
    auto it = cache.find(r.path);
    if (it == cache.end())
      it = cache.emplace(r.path, crop_downsample(read_ppm(r.path), side)).first;
    fs.tensors.push_back(it->second);
  }
  return fs;
}

namespace {

struct MovieIndex {
  std::vector<std::string> names;
  // Per movie: frame indices sorted by timestamp.
  std::vector<std::vector<std::size_t>> frames;
};

MovieIndex index_movies(const std::vector<FrameRecord>& records) {
  MovieIndex idx;
  std::map<std::string, std::size_t> by_name;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, fresh] = by_name.emplace(records[i].movie, idx.names.size());
    if (fresh) {
      idx.names.push_back(records[i].movie);
      idx.frames.emplace_back();
    }
    idx.frames[it->second].push_back(i);
  }
  for (auto& f : idx.frames)
    std::sort(f.begin(), f.end(), [&](std::size_t a, std::size_t b) {
      return records[a].t < records[b].t;
    });
  return idx;
}

std::optional<int> frame_q(const FrameRecord& a, const FrameRecord& b) {
  if (!a.chapter || !b.chapter) return std::nullopt;
  return (a.movie == b.movie && *a.chapter == *b.chapter) ? 1 : 0;
}

PairExample make_frame_pair(const FrameSet& fs, std::size_t ia, std::size_t ib,
                            int c, int32_t ma, int32_t mb) {
  PairExample ex;
  ex.a = fs.tensors[ia];
  ex.b = fs.tensors[ib];
  ex.c_label = c;
  ex.q_label = frame_q(fs.records[ia], fs.records[ib]);
  ex.meta = {ma, mb, 0.0, fs.records[ia].t, 0.0, fs.records[ib].t};
  return ex;
}

}  // namespace

std::vector<PairExample> sample_frame_pairs(const FrameSet& fs, std::size_t n,
                                            uint64_t seed,
                                            const FrameSamplerConfig& cfg) {
  const MovieIndex idx = index_movies(fs.records);
  Rng rng(derive_seed(seed, "sampler.frame"));

  // All (i, j) with dt inside the positive window, across all movies.
  std::vector<std::array<std::size_t, 3>> pos;  // movie, i, j
  for (std::size_t m = 0; m < idx.frames.size(); ++m) {
    const auto& f = idx.frames[m];
    for (std::size_t a = 0; a < f.size(); ++a) {
      for (std::size_t b = a + 1; b < f.size(); ++b) {
        const double dt = fs.records[f[b]].t - fs.records[f[a]].t;
        if (dt > cfg.pos_hi) break;
        if (dt >= cfg.pos_lo) pos.push_back({m, f[a], f[b]});
      }
    }
  }
  if (pos.empty())
    fail(ErrorCategory::Sampling,
         "sample_frame_pairs: no positive pairs (movies too short)");

  std::vector<PairExample> out;
  const std::size_t n_pos = (n + 1) / 2;
  for (std::size_t i = 0; i < n_pos; ++i) {
    const auto& [m, a, b] = pos[rng.uniform_int(pos.size())];
    out.push_back(make_frame_pair(fs, a, b, 1, int32_t(m), int32_t(m)));
  }

  const std::size_t n_neg = n / 2;
  const bool multi = idx.frames.size() > 1;
  const std::size_t n_cross =
      multi ? std::size_t(double(n_neg) * (1.0 - cfg.neg_same_movie_frac))
            : 0;
  const std::size_t n_same = n_neg - n_cross;

  std::size_t failures = 0;
  for (std::size_t i = 0; i < n_same;) {
    if (failures > kSamplerAttemptCap)
      fail(ErrorCategory::Sampling,
           "sample_frame_pairs: cannot draw far same-movie negatives");
    const std::size_t m = rng.uniform_int(idx.frames.size());
    const auto& f = idx.frames[m];
    const std::size_t a = f[rng.uniform_int(f.size())];
    const std::size_t b = f[rng.uniform_int(f.size())];
    if (std::abs(fs.records[a].t - fs.records[b].t) <= cfg.pos_hi) {
      ++failures;
      continue;
    }
    out.push_back(make_frame_pair(fs, a, b, 0, int32_t(m), int32_t(m)));
    ++i;
    failures = 0;
  }
  for (std::size_t i = 0; i < n_cross; ++i) {
    const std::size_t ma = rng.uniform_int(idx.frames.size());
    std::size_t mb = rng.uniform_int(idx.frames.size() - 1);
    if (mb >= ma) ++mb;
    const std::size_t a = idx.frames[ma][rng.uniform_int(idx.frames[ma].size())];
    const std::size_t b = idx.frames[mb][rng.uniform_int(idx.frames[mb].size())];
    out.push_back(make_frame_pair(fs, a, b, 0, int32_t(ma), int32_t(mb)));
  }
  rng.shuffle(out);
  return out;
}

std::vector<PairExample> sample_frame_q_eval_pairs(
    const FrameSet& fs, std::size_t n, uint64_t seed,
    const FrameSamplerConfig& cfg) {
  const MovieIndex idx = index_movies(fs.records);
  Rng rng(derive_seed(seed, "sampler.frame_q"));
  std::vector<std::array<std::size_t, 3>> same, diff;
  for (std::size_t m = 0; m < idx.frames.size(); ++m) {
    const auto& f = idx.frames[m];
    for (std::size_t a = 0; a < f.size(); ++a) {
      for (std::size_t b = a + 1; b < f.size(); ++b) {
        const double dt = fs.records[f[b]].t - fs.records[f[a]].t;
        if (dt > cfg.pos_hi) break;
        if (dt < cfg.pos_lo) continue;
        const auto q = frame_q(fs.records[f[a]], fs.records[f[b]]);
        if (!q) continue;
        (*q == 1 ? same : diff).push_back({m, f[a], f[b]});
      }
    }
  }
  if (same.empty() || diff.empty())
    fail(ErrorCategory::Sampling,
         "frame q-eval sampler: cannot balance Q (need chapter-crossing "
         "adjacent pairs)");
  std::vector<PairExample> out;
  const std::size_t n_q1 = (n + 1) / 2;
  for (std::size_t i = 0; i < n_q1; ++i) {
    const auto& [m, a, b] = same[rng.uniform_int(same.size())];
    out.push_back(make_frame_pair(fs, a, b, 1, int32_t(m), int32_t(m)));
  }
  for (std::size_t i = 0; i < n - n_q1; ++i) {
    const auto& [m, a, b] = diff[rng.uniform_int(diff.size())];
    out.push_back(make_frame_pair(fs, a, b, 1, int32_t(m), int32_t(m)));
  }
  rng.shuffle(out);
  return out;
}

// --- photos -------------------------------------------------------------

PhotoSet load_photos(const std::vector<GeoPhotoRecord>& manifest,
                     std::size_t side) {
  PhotoSet ps;
  ps.records = manifest;
  ps.tensors.reserve(manifest.size());
  std::map<std::string, Tensor> cache;
  for (const GeoPhotoRecord& r : manifest) {
    auto it = cache.find(r.path);
    if (it == cache.end())
      it = cache.emplace(r.path, crop_downsample(read_ppm(r.path), side)).first;
    ps.tensors.push_back(it->second);
  }
  return ps;
}

std::vector<PairExample> sample_geo_pairs(const PhotoSet& ps, std::size_t n,
                                          uint64_t seed,
                                          const GeoSamplerConfig& cfg) {
  if (ps.records.size() < 2)
    fail(ErrorCategory::Sampling, "sample_geo_pairs: need at least 2 photos");
  std::vector<std::pair<std::size_t, std::size_t>> pos, neg;
  for (std::size_t i = 0; i < ps.records.size(); ++i) {
    for (std::size_t j = i + 1; j < ps.records.size(); ++j) {
      const double d = haversine_m(ps.records[i].lat, ps.records[i].lon,
                                   ps.records[j].lat, ps.records[j].lon);
      if (d > cfg.radius_m)
        neg.emplace_back(i, j);
      else if (d > 0.0)
        pos.emplace_back(i, j);
      // d == 0: exact duplicate location, excluded from both pools
    }
  }
  if (pos.empty())
    fail(ErrorCategory::Sampling,
         "sample_geo_pairs: no qualifying positive pairs within radius");
  if (neg.empty())
    fail(ErrorCategory::Sampling, "sample_geo_pairs: no negative pairs");

  Rng rng(derive_seed(seed, "sampler.geo"));
  auto make = [&](std::size_t i, std::size_t j, int c) {
    PairExample ex;
    ex.a = ps.tensors[i];
    ex.b = ps.tensors[j];
    ex.c_label = c;
    if (ps.records[i].place && ps.records[j].place)
      ex.q_label = *ps.records[i].place == *ps.records[j].place ? 1 : 0;
    ex.meta = {int32_t(i), int32_t(j), ps.records[i].lat, ps.records[i].lon,
               ps.records[j].lat, ps.records[j].lon};
    return ex;
  };

  std::vector<PairExample> out;
  const std::size_t n_pos = (n + 1) / 2;
  for (std::size_t k = 0; k < n_pos; ++k) {
    const auto& [i, j] = pos[rng.uniform_int(pos.size())];
    out.push_back(make(i, j, 1));
  }
  for (std::size_t k = 0; k < n / 2; ++k) {
    const auto& [i, j] = neg[rng.uniform_int(neg.size())];
    out.push_back(make(i, j, 0));
  }
  rng.shuffle(out);
  return out;
}

}  // namespace cooccur::data
