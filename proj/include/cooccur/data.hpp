#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cooccur/image.hpp"
#include "cooccur/pair.hpp"

namespace cooccur::data {

// --- records & manifests -----------------------------------------------

struct FrameRecord {
  std::string path;
  double t = 0.0;  // seconds
  std::string movie;
  std::optional<int> chapter;
};

struct GeoPhotoRecord {
  std::string path;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<std::string> place;
};

struct MosaicRecord {
  std::string image_path;
  std::string gt_path;  // empty when no ground truth
};

// JSON Lines manifests: one record per line.
std::vector<FrameRecord> read_frame_manifest(const std::string& path);
void write_frame_manifest(const std::string& path,
                          const std::vector<FrameRecord>& records);
std::vector<GeoPhotoRecord> read_geo_manifest(const std::string& path);
void write_geo_manifest(const std::string& path,
                        const std::vector<GeoPhotoRecord>& records);
std::vector<MosaicRecord> read_mosaic_manifest(const std::string& path);
void write_mosaic_manifest(const std::string& path,
                           const std::vector<MosaicRecord>& records);

// Great-circle distance in meters on a sphere of radius 6,371,000 m.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

// --- synthetic data ----------------------------------------------------

// All synthetic imagery shares one texture family: a base color from a small
// global palette, modulated by a horizontal sinusoid (varies along y only)
// plus per-pixel noise.
struct TextureStyle {
  std::array<double, 3> color{0, 0, 0};
  double freq = 0.1;   // cycles per pixel along y
  double phase = 0.0;  // radians
  double amp = 0.2;    // relative modulation amplitude
};

std::size_t palette_size();
std::array<double, 3> palette_color(std::size_t i);

struct MosaicConfig {
  std::size_t image_count = 200;
  std::size_t side = 128;
  uint32_t min_regions = 2;
  uint32_t max_regions = 6;
  double freq_lo = 0.06, freq_hi = 0.20;
  double amp_lo = 0.12, amp_hi = 0.25;
  double noise = 0.03;
  double warp_amp = 6.0;          // boundary warp, pixels
  double warp_wavelength = 60.0;  // pixels
  double min_region_fraction = 0.05;
};

struct MosaicDataset {
  std::vector<ImageBuffer> images;
  std::vector<RegionMap> regions;
  std::vector<std::vector<TextureStyle>> styles;  // per image, per region id
};

// Warped-Voronoi mosaics with per-region procedural textures and exact
// per-pixel region ids.
MosaicDataset gen_mosaic_dataset(const MosaicConfig& cfg, uint64_t seed);

struct SceneVideoConfig {
  std::size_t scene_count = 8;
  double scene_len_mean = 60.0;
  double scene_len_jitter = 10.0;
  double fps = 1.0;
  std::size_t render_side = 66;
  std::string movie_name = "movie0";
  double drift_lo = 0.2, drift_hi = 0.5;  // phase drift, rad/s
  double wobble_amp = 0.10;               // brightness wobble
  double wobble_period = 45.0;            // seconds
  double noise = 0.02;
  // Probability that a scene reuses the previous scene's palette color
  // (those boundaries are invisible to color-only measures).
  double color_repeat_prob = 0.4;
};

struct SceneVideo {
  std::vector<ImageBuffer> frames;
  std::vector<double> times;
  std::vector<int> chapter;  // scene index per frame
  std::vector<double> gt_boundaries;
  std::vector<TextureStyle> scene_styles;
  std::string movie_name;
};

SceneVideo gen_scene_video(const SceneVideoConfig& cfg, uint64_t seed);

struct GeoCollectionConfig {
  std::size_t place_count = 6;
  std::size_t photos_per_place = 100;
  double base_lat = 40.0;
  double base_lon = -74.0;
  double place_separation_m = 250.0;
  double jitter_m = 5.0;
  std::size_t render_side = 66;
  double noise = 0.02;
  double brightness_jitter = 0.15;
};

struct GeoCollection {
  std::vector<ImageBuffer> photos;
  std::vector<double> lat, lon;
  std::vector<int> place;
  std::vector<TextureStyle> place_styles;
};

GeoCollection gen_geo_collection(const GeoCollectionConfig& cfg, uint64_t seed);

// --- pair samplers -----------------------------------------------------

struct PatchSamplerConfig {
  std::size_t side = 17;
  bool circular = true;
  double band_lo = 17.0;  // center distance band for positives, inclusive
  double band_hi = 33.0;
};

// True iff the center distance qualifies a same-image pair as a positive.
bool in_positive_band(double dy, double dx, const PatchSamplerConfig& cfg);

// ceil(n/2) positives (same image, centers within the band), floor(n/2)
// negatives (independent uniform draws). Q labels from region ground truth
// when provided (same region id under both patch centers).
std::vector<PairExample> sample_patch_pairs(
    const std::vector<ImageBuffer>& images, const std::vector<RegionMap>* gt,
    std::size_t n, uint64_t seed, const PatchSamplerConfig& cfg = {});

// Adjacent pairs only (C=1 throughout), balanced 50/50 in Q; the evaluation
// protocol for predicting Q with C held constant. Requires ground truth.
std::vector<PairExample> sample_patch_q_eval_pairs(
    const std::vector<ImageBuffer>& images, const std::vector<RegionMap>& gt,
    std::size_t n, uint64_t seed, const PatchSamplerConfig& cfg = {});

struct FrameSamplerConfig {
  double pos_lo = 3.0;  // seconds, inclusive
  double pos_hi = 10.0;
  double neg_same_movie_frac = 0.5;
  std::size_t side = 33;
};

// In-memory frame table: records plus decoded 33x33 tensors.
struct FrameSet {
  std::vector<FrameRecord> records;
  std::vector<Tensor> tensors;
};

FrameSet load_frames(const std::vector<FrameRecord>& manifest,
                     std::size_t side = 33);

// Positives: same movie, pos_lo <= |dt| <= pos_hi. Negatives: same movie with
// |dt| > pos_hi or cross-movie. Same-movie pairs closer than pos_lo are never
// emitted. Q from chapter ids when present.
std::vector<PairExample> sample_frame_pairs(const FrameSet& frames,
                                            std::size_t n, uint64_t seed,
                                            const FrameSamplerConfig& cfg = {});

// Frame pairs with C=1 and Q balanced 50/50 (Q = same chapter).
std::vector<PairExample> sample_frame_q_eval_pairs(
    const FrameSet& frames, std::size_t n, uint64_t seed,
    const FrameSamplerConfig& cfg = {});

struct GeoSamplerConfig {
  double radius_m = 11.0;
  std::size_t side = 33;
};

struct PhotoSet {
  std::vector<GeoPhotoRecord> records;
  std::vector<Tensor> tensors;
};

PhotoSet load_photos(const std::vector<GeoPhotoRecord>& manifest,
                     std::size_t side = 33);

// Positives: haversine distance in (0, radius_m]; exact duplicate locations
// are excluded from both pools. Negatives: distance > radius_m.
std::vector<PairExample> sample_geo_pairs(const PhotoSet& photos,
                                          std::size_t n, uint64_t seed,
                                          const GeoSamplerConfig& cfg = {});

}  // namespace cooccur::data
