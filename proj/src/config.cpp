#include "wsseg/config.hpp"

#include <set>

#include "json.hpp"
#include "wsseg/error.hpp"
#include "wsseg/io.hpp"
#include "wsseg/rng.hpp"

namespace wsseg {
using nlohmann::json;

void RunConfig::validate() const {
  init.validate();
  policy.validate();
  train.validate();
  if (em_iterations < 1) throw ConfigError("/em/iterations must be >= 1");
  features.validate();
  synth.validate();
  if (sigma_grid.empty()) throw ConfigError("/sweep/sigma_grid must not be empty");
  for (double s : sigma_grid)
    if (!(s > 0.0 && s <= 1.0)) throw ConfigError("/sweep/sigma_grid entries must lie in (0, 1]");
  if (!(eval.threshold > 0.0f && eval.threshold < 1.0f)) throw ConfigError("/eval/threshold must lie in (0, 1)");
  for (float c : ablation.clamps)
    if (!(c > 0.0f && c <= 1.0f)) throw ConfigError("/ablation/clamps entries must lie in (0, 1]");
  for (int k : ablation.keypoint_counts)
    if (k < 1) throw ConfigError("/ablation/keypoint_counts entries must be >= 1");
}

std::uint64_t RunConfig::stream(const char* name) const { return derive_seed(seed, name); }

EmConfig RunConfig::em_config() const {
  EmConfig em;
  em.em_iterations = em_iterations;
  em.init = init;
  em.policy = policy;
  em.rng_seed = stream("em");
  return em;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.rng_seed = stream("sgd");
  return t;
}

namespace {

// Tracks the JSON pointer of the object being read and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& obj, std::string pointer) : obj_(obj), pointer_(std::move(pointer)) {
    if (!obj_.is_object()) throw ConfigError(pointer_or_root() + ": expected an object");
  }

  bool has(const char* key) {
    allowed_.insert(key);
    return obj_.contains(key);
  }

  template <typename T>
  void read(const char* key, T& out) {
    if (!has(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key) + ": wrong type");
    }
  }

  Reader child(const char* key) {
    allowed_.insert(key);
    return Reader(obj_.at(key), pointer_ + "/" + key);
  }

  const json& raw(const char* key) {
    allowed_.insert(key);
    return obj_.at(key);
  }

  std::string path(const char* key) const { return pointer_ + "/" + key; }

  void finish() const {
    for (const auto& [key, _] : obj_.items())
      if (!allowed_.count(key)) throw ConfigError(pointer_ + "/" + key + ": unknown key");
  }

 private:
  std::string pointer_or_root() const { return pointer_.empty() ? "/" : pointer_; }

  const json& obj_;
  std::string pointer_;
  std::set<std::string> allowed_;
};

template <typename T, typename Parse>
std::vector<T> parse_list(Reader& r, const char* key, Parse parse) {
  std::vector<T> out;
  const json& arr = r.raw(key);
  if (!arr.is_array()) throw ConfigError(r.path(key) + ": expected a list");
  for (std::size_t k = 0; k < arr.size(); ++k) {
    if (!arr[k].is_string()) throw ConfigError(r.path(key) + "/" + std::to_string(k) + ": expected a string");
    try {
      out.push_back(parse(arr[k].get<std::string>()));
    } catch (const ConfigError& e) {
      throw ConfigError(r.path(key) + "/" + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

ShapeKind parse_shape_kind(const std::string& s) {
  if (s == "disk") return ShapeKind::disk;
  if (s == "rectangle") return ShapeKind::rectangle;
  throw ConfigError("unknown shape kind '" + s + "'");
}

std::string shape_kind_name(ShapeKind k) { return k == ShapeKind::disk ? "disk" : "rectangle"; }

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& where) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(where + ": " + e.what());
  }
  RunConfig cfg;
  try {
    Reader root(doc, "");
    root.read("seed", cfg.seed);

    if (root.has("init")) {
      Reader r = root.child("init");
      r.read("sigma_fraction", cfg.init.sigma_fraction);
      r.finish();
    }
    if (root.has("policy")) {
      Reader r = root.child("policy");
      if (r.has("mode")) {
        std::string m;
        r.read("mode", m);
        try {
          cfg.policy.mode = parse_threshold_mode(m);
        } catch (const ConfigError& e) {
          throw ConfigError(r.path("mode") + ": " + e.what());
        }
      }
      if (r.has("aggregator")) {
        std::string a;
        r.read("aggregator", a);
        try {
          cfg.policy.aggregator = parse_aggregator(a);
        } catch (const ConfigError& e) {
          throw ConfigError(r.path("aggregator") + ": " + e.what());
        }
      }
      r.read("clamp_max", cfg.policy.clamp_max);
      r.read("fixed_threshold", cfg.policy.fixed_threshold);
      r.read("force_keypoints_positive", cfg.policy.force_keypoints_positive);
      r.finish();
    }
    if (root.has("train")) {
      Reader r = root.child("train");
      r.read("learning_rate", cfg.train.learning_rate);
      r.read("epochs", cfg.train.epochs);
      r.read("minibatch_pixels", cfg.train.minibatch_pixels);
      r.read("l2_penalty", cfg.train.l2_penalty);
      r.finish();
    }
    if (root.has("em")) {
      Reader r = root.child("em");
      r.read("iterations", cfg.em_iterations);
      r.finish();
    }
    if (root.has("features")) {
      Reader r = root.child("features");
      r.read("window_radii", cfg.features.window_radii);
      r.read("smoothing_scales", cfg.features.smoothing_scales);
      r.read("include_coords", cfg.features.include_coords);
      r.finish();
    }
    bool synth_seed_pinned = false;
    if (root.has("synth")) {
      Reader r = root.child("synth");
      if (r.has("preset")) {
        std::string preset;
        r.read("preset", preset);
        if (preset == "benchmark") {
          cfg.synth = benchmark_config();
          synth_seed_pinned = true;
        } else if (preset != "default") {
          throw ConfigError(r.path("preset") + ": unknown preset '" + preset + "'");
        }
      }
      r.read("image_size", cfg.synth.image_size);
      r.read("class_count", cfg.synth.class_count);
      r.read("shapes_min", cfg.synth.shapes_min);
      r.read("shapes_max", cfg.synth.shapes_max);
      if (r.has("shape_kinds")) cfg.synth.shape_kinds = parse_list<ShapeKind>(r, "shape_kinds", parse_shape_kind);
      r.read("shape_size", cfg.synth.shape_size);
      r.read("size_variation", cfg.synth.size_variation);
      r.read("overlap_probability", cfg.synth.overlap_probability);
      r.read("color_contrast", cfg.synth.color_contrast);
      r.read("noise", cfg.synth.noise);
      r.read("texture", cfg.synth.texture);
      r.read("distractors_max", cfg.synth.distractors_max);
      r.read("distractor_strength", cfg.synth.distractor_strength);
      r.read("keypoints_per_class", cfg.synth.keypoints_per_class);
      r.read("background_keypoints", cfg.synth.background_keypoints);
      if (r.has("rng_seed")) {
        r.read("rng_seed", cfg.synth.rng_seed);
        synth_seed_pinned = true;
      }
      r.read("train_images", cfg.synth_train_images);
      r.read("test_images", cfg.synth_test_images);
      r.finish();
    }
    if (!synth_seed_pinned) cfg.synth.rng_seed = cfg.stream("synth");

    if (root.has("sweep")) {
      Reader r = root.child("sweep");
      r.read("sigma_grid", cfg.sigma_grid);
      if (r.has("validation_rule")) {
        std::string v;
        r.read("validation_rule", v);
        try {
          cfg.validation_rule = parse_validation_rule(v);
        } catch (const ConfigError& e) {
          throw ConfigError(r.path("validation_rule") + ": " + e.what());
        }
      }
      r.finish();
    }
    if (root.has("eval")) {
      Reader r = root.child("eval");
      r.read("threshold", cfg.eval.threshold);
      r.read("include_background_in_mean", cfg.eval.include_background_in_mean);
      r.finish();
    }
    if (root.has("ablation")) {
      Reader r = root.child("ablation");
      if (r.has("modes")) cfg.ablation.modes = parse_list<ThresholdMode>(r, "modes", parse_threshold_mode);
      if (r.has("aggregators")) cfg.ablation.aggregators = parse_list<Aggregator>(r, "aggregators", parse_aggregator);
      r.read("clamps", cfg.ablation.clamps);
      r.read("keypoint_counts", cfg.ablation.keypoint_counts);
      r.read("select_sigma", cfg.ablation.select_sigma);
      r.finish();
    }
    root.finish();
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file_bytes(path), path.string());
}

std::string to_json_string(const RunConfig& cfg) {
  json doc;
  doc["seed"] = cfg.seed;
  doc["init"] = {{"sigma_fraction", cfg.init.sigma_fraction}};
  doc["policy"] = {{"mode", to_string(cfg.policy.mode)},
                   {"aggregator", to_string(cfg.policy.aggregator)},
                   {"clamp_max", cfg.policy.clamp_max},
                   {"fixed_threshold", cfg.policy.fixed_threshold},
                   {"force_keypoints_positive", cfg.policy.force_keypoints_positive}};
  doc["train"] = {{"learning_rate", cfg.train.learning_rate},
                  {"epochs", cfg.train.epochs},
                  {"minibatch_pixels", cfg.train.minibatch_pixels},
                  {"l2_penalty", cfg.train.l2_penalty}};
  doc["em"] = {{"iterations", cfg.em_iterations}};
  doc["features"] = {{"window_radii", cfg.features.window_radii},
                     {"smoothing_scales", cfg.features.smoothing_scales},
                     {"include_coords", cfg.features.include_coords}};
  json kinds = json::array();
  for (auto k : cfg.synth.shape_kinds) kinds.push_back(shape_kind_name(k));
  doc["synth"] = {{"image_size", cfg.synth.image_size},
                  {"class_count", cfg.synth.class_count},
                  {"shapes_min", cfg.synth.shapes_min},
                  {"shapes_max", cfg.synth.shapes_max},
                  {"shape_kinds", kinds},
                  {"shape_size", cfg.synth.shape_size},
                  {"size_variation", cfg.synth.size_variation},
                  {"overlap_probability", cfg.synth.overlap_probability},
                  {"color_contrast", cfg.synth.color_contrast},
                  {"noise", cfg.synth.noise},
                  {"texture", cfg.synth.texture},
                  {"distractors_max", cfg.synth.distractors_max},
                  {"distractor_strength", cfg.synth.distractor_strength},
                  {"keypoints_per_class", cfg.synth.keypoints_per_class},
                  {"background_keypoints", cfg.synth.background_keypoints},
                  {"rng_seed", cfg.synth.rng_seed},
                  {"train_images", cfg.synth_train_images},
                  {"test_images", cfg.synth_test_images}};
  doc["sweep"] = {{"sigma_grid", cfg.sigma_grid}, {"validation_rule", to_string(cfg.validation_rule)}};
  doc["eval"] = {{"threshold", cfg.eval.threshold},
                 {"include_background_in_mean", cfg.eval.include_background_in_mean}};
  json modes = json::array(), aggs = json::array();
  for (auto m : cfg.ablation.modes) modes.push_back(to_string(m));
  for (auto a : cfg.ablation.aggregators) aggs.push_back(to_string(a));
  doc["ablation"] = {{"modes", modes},
                     {"clamps", cfg.ablation.clamps},
                     {"aggregators", aggs},
                     {"keypoint_counts", cfg.ablation.keypoint_counts},
                     {"select_sigma", cfg.ablation.select_sigma}};
  return doc.dump(2) + "\n";
}

}  // namespace wsseg
