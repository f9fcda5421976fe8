// cooccur: self-supervised visual grouping toolkit.
//
// Subcommands: gen-data, train, eval-affinity, propose, segment-movie,
// cluster-places, probe. Every run writes a run_manifest.json beside its
// outputs recording the resolved config, its hash, the seed and the artifact
// paths; identical config+seed reproduces byte-identical artifacts at any
// --threads value.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cooccur/affinity.hpp"
#include "cooccur/data.hpp"
#include "cooccur/errors.hpp"
#include "cooccur/image.hpp"
#include "cooccur/nnet.hpp"
#include "cooccur/parallel.hpp"
#include "cooccur/places.hpp"
#include "cooccur/probes.hpp"
#include "cooccur/proposals.hpp"
#include "cooccur/rng.hpp"
#include "cooccur/scenes.hpp"
#include "cooccur/spectral.hpp"
#include "cooccur/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cooccur;

namespace {

struct GlobalOpts {
  uint64_t seed = 0;
  unsigned threads = 1;
  std::string out = "out";
};

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_run_manifest(const GlobalOpts& g, const std::string& command,
                        const json& config,
                        const std::vector<std::string>& artifacts) {
  json j;
  j["command"] = command;
  j["seed"] = g.seed;
  j["config"] = config;
  j["config_hash"] = hex64(fnv1a64(config.dump()));
  j["artifacts"] = artifacts;
  const std::string path = (fs::path(g.out) / "run_manifest.json").string();
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::Config, path + ": cannot write run manifest");
  out << j.dump(2) << "\n";
}

void ensure_out(const GlobalOpts& g) { fs::create_directories(g.out); }

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::Config, path + ": cannot write");
  return out;
}

affinity::MeasureKind parse_measure(const std::string& name) {
  if (name == "learned") return affinity::MeasureKind::Learned;
  if (name == "raw-color") return affinity::MeasureKind::RawColor;
  if (name == "mean-color") return affinity::MeasureKind::MeanColor;
  if (name == "color-histogram") return affinity::MeasureKind::ColorHist;
  if (name == "hog") return affinity::MeasureKind::Hog;
  fail(ErrorCategory::Config, "unknown measure: " + name);
}

scenes::EdgeScaling parse_scaling(const std::string& name) {
  if (name == "exponential") return scenes::EdgeScaling::Exponential;
  if (name == "power") return scenes::EdgeScaling::Power;
  fail(ErrorCategory::Config, "unknown edge scaling: " + name);
}

struct MosaicData {
  std::vector<ImageBuffer> images;
  std::vector<RegionMap> regions;
  bool has_gt = false;
};

MosaicData load_mosaic(const std::string& manifest) {
  MosaicData d;
  const auto records = data::read_mosaic_manifest(manifest);
  if (records.empty())
    fail(ErrorCategory::Ingestion, manifest + ": empty manifest");
  d.has_gt = true;
  for (const auto& r : records)
    if (r.gt_path.empty()) d.has_gt = false;
  for (const auto& r : records) {
    d.images.push_back(read_ppm(r.image_path));
    if (d.has_gt) d.regions.push_back(read_pgm16(r.gt_path));
  }
  return d;
}

// --- gen-data ---------------------------------------------------------------

struct GenDataOpts {
  std::string kind = "mosaic";
  std::size_t count = 200;
  std::size_t side = 128;
  uint32_t min_regions = 2;
  uint32_t max_regions = 6;
  std::size_t movies = 1;
  std::size_t scenes_per_movie = 8;
  double scene_len = 60.0;
  double fps = 1.0;
  std::size_t places = 6;
  std::size_t photos_per_place = 100;
  double separation_m = 250.0;
};

json gen_data_config(const GenDataOpts& o) {
  return {{"kind", o.kind},
          {"count", o.count},
          {"side", o.side},
          {"min_regions", o.min_regions},
          {"max_regions", o.max_regions},
          {"movies", o.movies},
          {"scenes", o.scenes_per_movie},
          {"scene_len", o.scene_len},
          {"fps", o.fps},
          {"places", o.places},
          {"photos_per_place", o.photos_per_place},
          {"separation_m", o.separation_m}};
}

void run_gen_data(const GlobalOpts& g, const GenDataOpts& o) {
  ensure_out(g);
  std::vector<std::string> artifacts;
  char name[64];

  if (o.kind == "mosaic") {
    data::MosaicConfig cfg;
    cfg.image_count = o.count;
    cfg.side = o.side;
    cfg.min_regions = o.min_regions;
    cfg.max_regions = o.max_regions;
    const auto ds =
        data::gen_mosaic_dataset(cfg, derive_seed(g.seed, "gen.mosaic"));
    fs::create_directories(fs::path(g.out) / "images");
    fs::create_directories(fs::path(g.out) / "gt");
    std::vector<data::MosaicRecord> records;
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
      data::MosaicRecord rec;
      std::snprintf(name, sizeof name, "images/mosaic_%04zu.ppm", i);
      write_ppm((fs::path(g.out) / name).string(), ds.images[i]);
      rec.image_path = name;
      std::snprintf(name, sizeof name, "gt/mosaic_%04zu.pgm", i);
      write_pgm16((fs::path(g.out) / name).string(), ds.regions[i]);
      rec.gt_path = name;
      records.push_back(rec);
    }
    data::write_mosaic_manifest((fs::path(g.out) / "manifest.jsonl").string(),
                                records);
    artifacts = {"manifest.jsonl", "images/", "gt/"};
    log_info("gen-data: wrote " + std::to_string(ds.images.size()) +
             " mosaics to " + g.out);
  } else if (o.kind == "video") {
    fs::create_directories(fs::path(g.out) / "frames");
    std::vector<data::FrameRecord> all;
    auto gt_csv = open_csv((fs::path(g.out) / "gt_boundaries.csv").string());
    gt_csv << "movie,time\n";
    for (std::size_t m = 0; m < o.movies; ++m) {
      data::SceneVideoConfig cfg;
      cfg.scene_count = o.scenes_per_movie;
      cfg.scene_len_mean = o.scene_len;
      cfg.fps = o.fps;
      cfg.movie_name = "movie" + std::to_string(m);
      const auto video =
          data::gen_scene_video(cfg, derive_seed(g.seed, "gen.video", m));
      for (std::size_t f = 0; f < video.frames.size(); ++f) {
        std::snprintf(name, sizeof name, "frames/m%02zu_f%05zu.ppm", m, f);
        write_ppm((fs::path(g.out) / name).string(), video.frames[f]);
        data::FrameRecord rec;
        rec.path = name;
        rec.t = video.times[f];
        rec.movie = cfg.movie_name;
        rec.chapter = video.chapter[f];
        all.push_back(rec);
      }
      for (double b : video.gt_boundaries)
        gt_csv << cfg.movie_name << "," << fmt_double(b) << "\n";
    }
    data::write_frame_manifest((fs::path(g.out) / "manifest.jsonl").string(),
                               all);
    artifacts = {"manifest.jsonl", "frames/", "gt_boundaries.csv"};
    log_info("gen-data: wrote " + std::to_string(all.size()) + " frames to " +
             g.out);
  } else if (o.kind == "geo") {
    fs::create_directories(fs::path(g.out) / "photos");
    data::GeoCollectionConfig cfg;
    cfg.place_count = o.places;
    cfg.photos_per_place = o.photos_per_place;
    cfg.place_separation_m = o.separation_m;
    const auto col =
        data::gen_geo_collection(cfg, derive_seed(g.seed, "gen.geo"));
    std::vector<data::GeoPhotoRecord> records;
    for (std::size_t i = 0; i < col.photos.size(); ++i) {
      std::snprintf(name, sizeof name, "photos/p_%05zu.ppm", i);
      write_ppm((fs::path(g.out) / name).string(), col.photos[i]);
      data::GeoPhotoRecord rec;
      rec.path = name;
      rec.lat = col.lat[i];
      rec.lon = col.lon[i];
      rec.place = "place" + std::to_string(col.place[i]);
      records.push_back(rec);
    }
    data::write_geo_manifest((fs::path(g.out) / "manifest.jsonl").string(),
                             records);
    artifacts = {"manifest.jsonl", "photos/"};
    log_info("gen-data: wrote " + std::to_string(col.photos.size()) +
             " photos to " + g.out);
  } else {
    fail(ErrorCategory::Config, "gen-data: unknown kind " + o.kind);
  }
  write_run_manifest(g, "gen-data", gen_data_config(o), artifacts);
}

// --- train ------------------------------------------------------------------

struct TrainOpts {
  std::string domain = "patches";
  std::string manifest;
  std::size_t pairs = 50000;
  std::size_t epochs = 8;
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t batch = 64;
  double lr_decay_factor = 0.5;
  std::size_t lr_decay_every = 0;
  std::string label_source = "C";
};

json train_config(const TrainOpts& o) {
  return {{"domain", o.domain},
          {"manifest", o.manifest},
          {"pairs", o.pairs},
          {"epochs", o.epochs},
          {"lr", o.lr},
          {"momentum", o.momentum},
          {"batch", o.batch},
          {"lr_decay_factor", o.lr_decay_factor},
          {"lr_decay_every", o.lr_decay_every},
          {"label_source", o.label_source}};
}

std::vector<PairExample> sample_domain_pairs(const std::string& domain,
                                             const std::string& manifest,
                                             std::size_t n, uint64_t seed) {
  if (domain == "patches") {
    const MosaicData d = load_mosaic(manifest);
    return data::sample_patch_pairs(d.images, d.has_gt ? &d.regions : nullptr,
                                    n, seed);
  }
  if (domain == "frames") {
    const auto frames = data::load_frames(data::read_frame_manifest(manifest));
    return data::sample_frame_pairs(frames, n, seed);
  }
  if (domain == "photos") {
    const auto photos = data::load_photos(data::read_geo_manifest(manifest));
    return data::sample_geo_pairs(photos, n, seed);
  }
  fail(ErrorCategory::Config, "unknown domain: " + domain);
}

void run_train(const GlobalOpts& g, const TrainOpts& o) {
  if (o.manifest.empty())
    fail(ErrorCategory::Config, "train: --manifest is required");
  ensure_out(g);
  const auto pairs = sample_domain_pairs(o.domain, o.manifest, o.pairs,
                                         derive_seed(g.seed, "train.sample"));
  nnet::SiameseNet net =
      o.domain == "patches"
          ? nnet::make_patch_net(derive_seed(g.seed, "train.init"))
          : nnet::make_context_net(derive_seed(g.seed, "train.init"));
  nnet::TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.momentum = o.momentum;
  cfg.batch_size = o.batch;
  cfg.epochs = o.epochs;
  cfg.lr_decay_factor = o.lr_decay_factor;
  cfg.lr_decay_every = o.lr_decay_every;
  cfg.seed = derive_seed(g.seed, "train.sgd");
  if (o.label_source == "C")
    cfg.label_source = nnet::LabelSource::C;
  else if (o.label_source == "Q")
    cfg.label_source = nnet::LabelSource::Q;
  else
    fail(ErrorCategory::Config, "train: label-source must be C or Q");

  log_info("train: " + std::to_string(pairs.size()) + " pairs, " +
           std::to_string(o.epochs) + " epochs");
  const auto t0 = std::chrono::steady_clock::now();
  const nnet::TrainResult res = nnet::train(net, pairs, cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  log_info("train: finished in " + fmt_double(secs) + " s");

  nnet::save_params(net, (fs::path(g.out) / "weights.bin").string());
  auto csv = open_csv((fs::path(g.out) / "loss_history.csv").string());
  csv << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < res.epoch_mean_loss.size(); ++e)
    csv << e << "," << fmt_double(res.epoch_mean_loss[e]) << "\n";
  write_run_manifest(g, "train", train_config(o),
                     {"weights.bin", "loss_history.csv"});
}

// --- eval-affinity ------------------------------------------------------------

struct EvalOpts {
  std::string domain = "patches";
  std::string manifest;
  std::string weights;
  std::size_t pairs = 10000;
  std::size_t q_pairs = 4000;
};

void run_eval(const GlobalOpts& g, const EvalOpts& o) {
  if (o.manifest.empty() || o.weights.empty())
    fail(ErrorCategory::Config,
         "eval-affinity: --manifest and --weights are required");
  ensure_out(g);
  const nnet::SiameseNet net = nnet::load_params(o.weights);

  const auto c_pairs = sample_domain_pairs(o.domain, o.manifest, o.pairs,
                                           derive_seed(g.seed, "eval.c"));
  std::vector<PairExample> q_pairs;
  try {
    if (o.domain == "patches") {
      const MosaicData d = load_mosaic(o.manifest);
      if (!d.has_gt)
        fail(ErrorCategory::Sampling, "no ground truth for Q evaluation");
      q_pairs = data::sample_patch_q_eval_pairs(d.images, d.regions, o.q_pairs,
                                                derive_seed(g.seed, "eval.q"));
    } else if (o.domain == "frames") {
      const auto fr = data::load_frames(data::read_frame_manifest(o.manifest));
      q_pairs = data::sample_frame_q_eval_pairs(fr, o.q_pairs,
                                                derive_seed(g.seed, "eval.q"));
    } else {
      // Photo pairs with C=1 are nearly always same-place; a Q-balanced set
      // with C held constant generally does not exist for geo data.
      fail(ErrorCategory::Sampling, "photos: no C=1 Q-balanced set");
    }
  } catch (const Error& e) {
    log_info(std::string("eval-affinity: skipping Q task (") + e.what() + ")");
    q_pairs.clear();
  }

  auto csv = open_csv((fs::path(g.out) / "report.csv").string());
  csv << "measure,task,domain,n,ap\n";
  for (affinity::MeasureKind kind :
       {affinity::MeasureKind::Learned, affinity::MeasureKind::RawColor,
        affinity::MeasureKind::MeanColor, affinity::MeasureKind::ColorHist,
        affinity::MeasureKind::Hog}) {
    const affinity::Measure m = kind == affinity::MeasureKind::Learned
                                    ? affinity::Measure::learned(net)
                                    : affinity::Measure::of(kind);
    const double ap_c = affinity::evaluate_C(m, c_pairs);
    csv << affinity::measure_name(kind) << ",C," << o.domain << ","
        << c_pairs.size() << "," << fmt_double(ap_c) << "\n";
    if (!q_pairs.empty()) {
      const double ap_q = affinity::evaluate_Q(m, q_pairs);
      csv << affinity::measure_name(kind) << ",Q," << o.domain << ","
          << q_pairs.size() << "," << fmt_double(ap_q) << "\n";
    }
  }
  write_run_manifest(g, "eval-affinity",
                     {{"domain", o.domain},
                      {"manifest", o.manifest},
                      {"weights", o.weights},
                      {"pairs", o.pairs},
                      {"q_pairs", o.q_pairs}},
                     {"report.csv"});
}

// --- propose ------------------------------------------------------------------

struct ProposeOpts {
  std::string weights;
  std::string manifest;
  std::size_t max_images = 20;
  std::size_t top_n = 100;
  uint32_t k_min = 5;
  uint32_t k_max = 16;
  std::size_t restarts = 8;
  double alpha = 20.0;
  std::size_t stride = 8;
  std::size_t overlay_top = 10;
};

void run_propose(const GlobalOpts& g, const ProposeOpts& o) {
  if (o.manifest.empty() || o.weights.empty())
    fail(ErrorCategory::Config,
         "propose: --manifest and --weights are required");
  ensure_out(g);
  fs::create_directories(fs::path(g.out) / "overlays");
  const nnet::SiameseNet net = nnet::load_params(o.weights);
  const auto records = data::read_mosaic_manifest(o.manifest);
  const std::size_t count = std::min(o.max_images, records.size());

  proposals::PatchGraphSpec spec;
  spec.alpha = o.alpha;
  spec.stride = o.stride;

  json out_json = json::array();
  auto csv = open_csv((fs::path(g.out) / "metrics.csv").string());
  csv << "image,n_proposals,abo,recall_at_0.5\n";
  double abo_total = 0.0, rec_total = 0.0;
  std::size_t gt_count = 0;

  for (std::size_t i = 0; i < count; ++i) {
    const ImageBuffer img = read_ppm(records[i].image_path);
    const auto t0 = std::chrono::steady_clock::now();
    const proposals::ProposalSet ps = proposals::generate_proposals(
        img, net, spec, o.k_min, o.k_max, o.restarts,
        derive_seed(g.seed, "propose", i));
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    json jimg;
    jimg["image"] = records[i].image_path;
    jimg["height"] = ps.height;
    jimg["width"] = ps.width;
    json arr = json::array();
    for (std::size_t r = 0; r < ps.ranked.size(); ++r) {
      const auto& p = ps.ranked[r];
      json jp;
      jp["rank"] = r;
      jp["bbox"] = {p.bbox.x0, p.bbox.y0, p.bbox.x1, p.bbox.y1};
      jp["k"] = p.k;
      jp["restart"] = p.restart;
      jp["cluster"] = p.cluster;
      json runs = json::array();
      for (const auto& [start, len] : p.mask.runs)
        runs.push_back({start, len});
      jp["rle"] = runs;
      arr.push_back(jp);
    }
    jimg["proposals"] = arr;
    out_json.push_back(jimg);

    std::string abo_s, rec_s;
    if (!records[i].gt_path.empty()) {
      const auto gt =
          proposals::gt_masks_from_regions(read_pgm16(records[i].gt_path));
      const double a = proposals::abo(ps, gt, o.top_n);
      const double r = proposals::recall_at_jaccard(ps, gt, 0.5, o.top_n);
      abo_total += a;
      rec_total += r;
      ++gt_count;
      abo_s = fmt_double(a);
      rec_s = fmt_double(r);
    }
    csv << fs::path(records[i].image_path).filename().string() << ","
        << ps.ranked.size() << "," << abo_s << "," << rec_s << "\n";
    log_info("propose: " + fs::path(records[i].image_path).filename().string() +
             " in " + fmt_double(secs) + " s");

    char name[64];
    std::snprintf(name, sizeof name, "overlays/overlay_%04zu.ppm", i);
    write_ppm((fs::path(g.out) / name).string(),
              proposals::render_overlay(img, ps, o.overlay_top));
  }
  if (gt_count > 0)
    csv << "mean,," << fmt_double(abo_total / double(gt_count)) << ","
        << fmt_double(rec_total / double(gt_count)) << "\n";

  std::ofstream jf((fs::path(g.out) / "proposals.json").string());
  jf << out_json.dump(2) << "\n";
  write_run_manifest(g, "propose",
                     {{"weights", o.weights},
                      {"manifest", o.manifest},
                      {"max_images", o.max_images},
                      {"top_n", o.top_n},
                      {"k_min", o.k_min},
                      {"k_max", o.k_max},
                      {"restarts", o.restarts},
                      {"alpha", o.alpha},
                      {"stride", o.stride},
                      {"overlay_top", o.overlay_top}},
                     {"proposals.json", "metrics.csv", "overlays/"});
}

// --- segment-movie ---------------------------------------------------------

struct SegmentOpts {
  std::string weights;
  std::string measure = "learned";
  std::string manifest;
  std::string movie;  // empty: first movie in the manifest
  uint32_t k = 0;     // 0: ceil(duration / 120 s)
  std::string alphas = "0.25,0.5,1,2,4";
  double tolerance = 5.0;
  std::string scaling = "exponential";
  std::size_t restarts = 8;
};

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::string cur;
  for (char c : csv + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::stod(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (out.empty()) fail(ErrorCategory::Config, "empty alpha list");
  return out;
}

void run_segment(const GlobalOpts& g, const SegmentOpts& o) {
  if (o.manifest.empty())
    fail(ErrorCategory::Config, "segment-movie: --manifest is required");
  ensure_out(g);

  auto records = data::read_frame_manifest(o.manifest);
  if (records.empty()) fail(ErrorCategory::Ingestion, "empty frame manifest");
  const std::string movie = o.movie.empty() ? records[0].movie : o.movie;
  std::vector<data::FrameRecord> selected;
  for (const auto& r : records)
    if (r.movie == movie) selected.push_back(r);
  if (selected.empty())
    fail(ErrorCategory::Input, "segment-movie: no frames for movie " + movie);
  std::sort(selected.begin(), selected.end(),
            [](const auto& a, const auto& b) { return a.t < b.t; });

  const auto fset = data::load_frames(selected);
  std::vector<double> times;
  for (const auto& r : fset.records) times.push_back(r.t);

  nnet::SiameseNet net;
  affinity::Measure m = affinity::Measure::of(parse_measure(o.measure));
  if (m.kind == affinity::MeasureKind::Learned) {
    if (o.weights.empty())
      fail(ErrorCategory::Config,
           "segment-movie: learned measure needs --weights");
    net = nnet::load_params(o.weights);
    m = affinity::Measure::learned(net);
  }

  const double duration = times.back() - times.front();
  const uint32_t k =
      o.k > 0 ? o.k : uint32_t(std::max(2.0, std::ceil(duration / 120.0)));

  std::vector<double> gt;
  bool have_gt = true;
  for (const auto& r : fset.records)
    if (!r.chapter) have_gt = false;
  if (have_gt)
    for (std::size_t i = 0; i + 1 < fset.records.size(); ++i)
      if (*fset.records[i].chapter != *fset.records[i + 1].chapter)
        gt.push_back((times[i] + times[i + 1]) / 2.0);

  const auto alphas = parse_list(o.alphas);
  const auto scaling = parse_scaling(o.scaling);
  std::vector<std::string> artifacts = {"boundaries.csv", "barcode.ppm"};

  scenes::SceneSegmentation seg;
  if (have_gt) {
    const auto sweep = scenes::alpha_sweep(times, fset.tensors, m, gt, alphas,
                                           k, o.tolerance, scaling, o.restarts,
                                           derive_seed(g.seed, "segment"));
    auto pr_csv = open_csv((fs::path(g.out) / "pr.csv").string());
    pr_csv << "alpha,precision,recall,f1\n";
    for (const auto& row : sweep.rows)
      pr_csv << fmt_double(row.alpha) << "," << fmt_double(row.precision)
             << "," << fmt_double(row.recall) << "," << fmt_double(row.f1)
             << "\n";
    seg = sweep.best_segmentation;
    artifacts.push_back("pr.csv");
    log_info("segment-movie: best alpha " + fmt_double(sweep.best_alpha));
  } else {
    scenes::FrameGraphSpec spec;
    spec.scaling = scaling;
    spec.alpha = alphas[0];
    const auto graph = scenes::build_frame_graph(times, fset.tensors, m, spec);
    seg = scenes::segment_movie(graph, times, k, o.restarts,
                                derive_seed(g.seed, "segment"));
  }

  auto bcsv = open_csv((fs::path(g.out) / "boundaries.csv").string());
  for (double b : seg.boundaries) bcsv << fmt_double(b) << "\n";
  write_ppm((fs::path(g.out) / "barcode.ppm").string(),
            scenes::render_barcode(fset.tensors, times, seg.boundaries, gt));

  write_run_manifest(g, "segment-movie",
                     {{"weights", o.weights},
                      {"measure", o.measure},
                      {"manifest", o.manifest},
                      {"movie", movie},
                      {"k", k},
                      {"alphas", o.alphas},
                      {"tolerance", o.tolerance},
                      {"scaling", o.scaling},
                      {"restarts", o.restarts}},
                     artifacts);
}

// --- cluster-places ----------------------------------------------------------

struct PlacesOpts {
  std::string weights;
  std::string measure = "learned";
  std::string manifest;
  uint32_t k = 8;
  double alpha = 0.5;
  std::string scaling = "exponential";
  uint32_t sweep_lo = 2;
  uint32_t sweep_hi = 16;
  std::size_t restarts = 8;
  std::size_t max_photos = 4000;
  std::size_t montage_per_cluster = 8;
};

void run_places(const GlobalOpts& g, const PlacesOpts& o) {
  if (o.manifest.empty())
    fail(ErrorCategory::Config, "cluster-places: --manifest is required");
  ensure_out(g);

  auto records = data::read_geo_manifest(o.manifest);
  if (records.size() > o.max_photos) {
    // Dense-solver cap: deterministic subsample.
    Rng rng(derive_seed(g.seed, "places.subsample"));
    rng.shuffle(records);
    records.resize(o.max_photos);
    log_info("cluster-places: subsampled to " + std::to_string(o.max_photos) +
             " photos (dense eigensolver cap)");
  }
  const auto photos = data::load_photos(records);

  nnet::SiameseNet net;
  affinity::Measure m = affinity::Measure::of(parse_measure(o.measure));
  if (m.kind == affinity::MeasureKind::Learned) {
    if (o.weights.empty())
      fail(ErrorCategory::Config,
           "cluster-places: learned measure needs --weights");
    net = nnet::load_params(o.weights);
    m = affinity::Measure::learned(net);
  }

  const auto graph = places::build_photo_graph(
      photos.tensors, m, parse_scaling(o.scaling), o.alpha);
  const auto asg = places::cluster_places(graph, o.k, o.restarts,
                                          derive_seed(g.seed, "places"));

  auto acsv = open_csv((fs::path(g.out) / "assignment.csv").string());
  acsv << "photo,cluster\n";
  for (std::size_t i = 0; i < records.size(); ++i)
    acsv << fs::path(records[i].path).filename().string() << ","
         << asg.labels[i] << "\n";

  std::vector<std::string> artifacts = {"assignment.csv", "montage.ppm"};
  bool have_labels = true;
  for (const auto& r : records)
    if (!r.place) have_labels = false;
  if (have_labels) {
    std::map<std::string, int> ids;
    std::vector<int> truth;
    for (const auto& r : records)
      truth.push_back(ids.emplace(*r.place, int(ids.size())).first->second);
    auto pcsv = open_csv((fs::path(g.out) / "purity.csv").string());
    pcsv << "k,purity\n";
    const auto rows =
        places::purity_sweep(graph, truth, o.sweep_lo, o.sweep_hi, o.restarts,
                             derive_seed(g.seed, "places.sweep"));
    for (const auto& row : rows)
      pcsv << row.k << "," << fmt_double(row.purity) << "\n";
    pcsv << "selected_" << o.k << ","
         << fmt_double(places::purity(asg, truth)) << "\n";
    artifacts.push_back("purity.csv");
  }

  write_ppm((fs::path(g.out) / "montage.ppm").string(),
            places::render_montage(photos.tensors, asg, o.montage_per_cluster,
                                   derive_seed(g.seed, "places.montage")));
  write_run_manifest(g, "cluster-places",
                     {{"weights", o.weights},
                      {"measure", o.measure},
                      {"manifest", o.manifest},
                      {"k", o.k},
                      {"alpha", o.alpha},
                      {"scaling", o.scaling},
                      {"sweep_lo", o.sweep_lo},
                      {"sweep_hi", o.sweep_hi},
                      {"restarts", o.restarts},
                      {"max_photos", o.max_photos},
                      {"montage_per_cluster", o.montage_per_cluster}},
                     artifacts);
}

// --- probe -------------------------------------------------------------------

struct ProbeOpts {
  std::string weights;
  std::string domain = "patches";
  std::string manifest;
  std::size_t pairs = 2000;
};

void run_probe(const GlobalOpts& g, const ProbeOpts& o) {
  if (o.manifest.empty() || o.weights.empty())
    fail(ErrorCategory::Config, "probe: --manifest and --weights are required");
  ensure_out(g);
  const nnet::SiameseNet net = nnet::load_params(o.weights);

  // Positive pairs only: sample a C-balanced set twice the size, keep C=1.
  auto pairs = sample_domain_pairs(o.domain, o.manifest, o.pairs * 2,
                                   derive_seed(g.seed, "probe.sample"));
  std::vector<PairExample> positives;
  for (auto& ex : pairs)
    if (ex.c_label == 1) positives.push_back(std::move(ex));
  if (positives.size() > o.pairs) positives.resize(o.pairs);

  const auto report = probes::probe_report(
      net, positives, probes::all_transforms(), o.domain == "patches");
  auto csv = open_csv((fs::path(g.out) / "probe.csv").string());
  csv << "domain";
  for (auto t : report.transforms) csv << "," << probes::transform_name(t);
  csv << "\n" << o.domain;
  for (double v : report.mean_affinity) csv << "," << fmt_double(v);
  csv << "\n";
  write_run_manifest(g, "probe",
                     {{"weights", o.weights},
                      {"domain", o.domain},
                      {"manifest", o.manifest},
                      {"pairs", o.pairs}},
                     {"probe.csv"});
}

// --- config file ------------------------------------------------------------

// JSON config: a flat object of option names (no leading dashes) applying to
// the invoked subcommand and the globals, e.g. {"seed": 7, "pairs": 1000}.
// Command-line flags win over config values.
std::vector<std::string> inject_config(const std::vector<std::string>& args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) fail(ErrorCategory::Config, config_path + ": cannot open config");
  json cfg = json::parse(in, nullptr, false);
  if (cfg.is_discarded() || !cfg.is_object())
    fail(ErrorCategory::Config,
         config_path + ": config must be a JSON object");

  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    tokens.push_back("--" + key);
    if (value.is_string())
      tokens.push_back(value.get<std::string>());
    else
      tokens.push_back(value.dump());
  }

  // Insert right after the subcommand token so user flags (later) win.
  std::vector<std::string> out;
  bool injected = false;
  for (const auto& a : args) {
    out.push_back(a);
    if (!injected && !a.empty() && a[0] != '-') {
      out.insert(out.end(), tokens.begin(), tokens.end());
      injected = true;
    }
  }
  if (!injected) out.insert(out.end(), tokens.begin(), tokens.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cooccur: co-occurrence visual grouping toolkit"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.fallthrough();
  app.require_subcommand(1);

  GlobalOpts g;
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override)");
  app.add_option("--seed", g.seed, "top-level RNG seed");
  app.add_option("--threads", g.threads, "worker thread cap");
  app.add_option("--out", g.out, "output directory");

  auto opt_defaults = [](CLI::App* sub) {
    sub->option_defaults()->multi_option_policy(
        CLI::MultiOptionPolicy::TakeLast);
    return sub;
  };

  GenDataOpts gen;
  auto* sub_gen = opt_defaults(
      app.add_subcommand("gen-data", "generate synthetic datasets"));
  sub_gen->add_option("--kind", gen.kind, "mosaic|video|geo");
  sub_gen->add_option("--count", gen.count, "mosaic image count");
  sub_gen->add_option("--side", gen.side, "mosaic image side");
  sub_gen->add_option("--min-regions", gen.min_regions);
  sub_gen->add_option("--max-regions", gen.max_regions);
  sub_gen->add_option("--movies", gen.movies);
  sub_gen->add_option("--scenes", gen.scenes_per_movie);
  sub_gen->add_option("--scene-len", gen.scene_len);
  sub_gen->add_option("--fps", gen.fps);
  sub_gen->add_option("--places", gen.places);
  sub_gen->add_option("--photos-per-place", gen.photos_per_place);
  sub_gen->add_option("--separation-m", gen.separation_m);

  TrainOpts tr;
  auto* sub_tr = opt_defaults(app.add_subcommand(
      "train", "train a siamese co-occurrence classifier"));
  sub_tr->add_option("--domain", tr.domain, "patches|frames|photos");
  sub_tr->add_option("--manifest", tr.manifest);
  sub_tr->add_option("--pairs", tr.pairs);
  sub_tr->add_option("--epochs", tr.epochs);
  sub_tr->add_option("--lr", tr.lr);
  sub_tr->add_option("--momentum", tr.momentum);
  sub_tr->add_option("--batch", tr.batch);
  sub_tr->add_option("--lr-decay-factor", tr.lr_decay_factor);
  sub_tr->add_option("--lr-decay-every", tr.lr_decay_every);
  sub_tr->add_option("--label-source", tr.label_source, "C|Q");

  EvalOpts ev;
  auto* sub_ev = opt_defaults(app.add_subcommand(
      "eval-affinity", "AP of measures at predicting C and Q"));
  sub_ev->add_option("--domain", ev.domain);
  sub_ev->add_option("--manifest", ev.manifest);
  sub_ev->add_option("--weights", ev.weights);
  sub_ev->add_option("--pairs", ev.pairs);
  sub_ev->add_option("--q-pairs", ev.q_pairs);

  ProposeOpts pr;
  auto* sub_pr = opt_defaults(app.add_subcommand(
      "propose", "object proposals via spectral grouping"));
  sub_pr->add_option("--weights", pr.weights);
  sub_pr->add_option("--manifest", pr.manifest);
  sub_pr->add_option("--max-images", pr.max_images);
  sub_pr->add_option("--top-n", pr.top_n);
  sub_pr->add_option("--k-min", pr.k_min);
  sub_pr->add_option("--k-max", pr.k_max);
  sub_pr->add_option("--restarts", pr.restarts);
  sub_pr->add_option("--alpha", pr.alpha);
  sub_pr->add_option("--stride", pr.stride);
  sub_pr->add_option("--overlay-top", pr.overlay_top);

  SegmentOpts sg;
  auto* sub_sg = opt_defaults(app.add_subcommand(
      "segment-movie", "scene segmentation of a frame manifest"));
  sub_sg->add_option("--weights", sg.weights);
  sub_sg->add_option("--measure", sg.measure);
  sub_sg->add_option("--manifest", sg.manifest);
  sub_sg->add_option("--movie", sg.movie);
  sub_sg->add_option("--k", sg.k);
  sub_sg->add_option("--alphas", sg.alphas);
  sub_sg->add_option("--tolerance", sg.tolerance);
  sub_sg->add_option("--scaling", sg.scaling, "exponential|power");
  sub_sg->add_option("--restarts", sg.restarts);

  PlacesOpts pl;
  auto* sub_pl = opt_defaults(
      app.add_subcommand("cluster-places", "discover place categories"));
  sub_pl->add_option("--weights", pl.weights);
  sub_pl->add_option("--measure", pl.measure);
  sub_pl->add_option("--manifest", pl.manifest);
  sub_pl->add_option("--k", pl.k);
  sub_pl->add_option("--alpha", pl.alpha);
  sub_pl->add_option("--scaling", pl.scaling);
  sub_pl->add_option("--sweep-lo", pl.sweep_lo);
  sub_pl->add_option("--sweep-hi", pl.sweep_hi);
  sub_pl->add_option("--restarts", pl.restarts);
  sub_pl->add_option("--max-photos", pl.max_photos);
  sub_pl->add_option("--montage-per-cluster", pl.montage_per_cluster);

  ProbeOpts pb;
  auto* sub_pb = opt_defaults(app.add_subcommand(
      "probe", "transformation probes of a trained net"));
  sub_pb->add_option("--weights", pb.weights);
  sub_pb->add_option("--domain", pb.domain);
  sub_pb->add_option("--manifest", pb.manifest);
  sub_pb->add_option("--pairs", pb.pairs);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = inject_config(args);
    std::vector<const char*> cargs;
    cargs.push_back(argv[0]);
    for (const auto& a : args) cargs.push_back(a.c_str());
    app.parse(int(cargs.size()), cargs.data());

    set_thread_count(g.threads);
    if (sub_gen->parsed()) run_gen_data(g, gen);
    if (sub_tr->parsed()) run_train(g, tr);
    if (sub_ev->parsed()) run_eval(g, ev);
    if (sub_pr->parsed()) run_propose(g, pr);
    if (sub_sg->parsed()) run_segment(g, sg);
    if (sub_pl->parsed()) run_places(g, pl);
    if (sub_pb->parsed()) run_probe(g, pb);
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "error:%s: %s\n", category_name(e.category()),
                 e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error:internal: %s\n", e.what());
    return 1;
  }
}
