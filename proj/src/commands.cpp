#include "wsseg/commands.hpp"

#include <cstdio>

#include "json.hpp"
#include "wsseg/error.hpp"
#include "wsseg/io.hpp"
#include "wsseg/rng.hpp"

namespace wsseg {
using nlohmann::json;

namespace {

void write_run_manifest(const fs::path& out_dir, const std::string& command, const RunConfig& cfg,
                        json inputs, const std::vector<std::string>& outputs) {
  json doc;
  doc["command"] = command;
  doc["version"] = kVersion;
  doc["seed"] = cfg.seed;
  doc["inputs"] = std::move(inputs);
  doc["outputs"] = outputs;
  doc["config"] = json::parse(to_json_string(cfg));
  write_file_bytes(out_dir / "run.json", doc.dump(2) + "\n");
}

Dataset load(const fs::path& manifest) { return load_dataset(load_manifest(manifest)); }

void write_masks(std::span<const MaskStack> masks, std::span<const WeakRecord> records, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t r = 0; r < masks.size(); ++r) write_mask_stack(masks[r], dir, records[r].stem);
}

json log_to_json(const RunLog& log, std::span<const WeakRecord> records, const LabelSpace& labels) {
  json trainings = json::array();
  for (const auto& t : log.trainings)
    trainings.push_back({{"iteration", t.iteration}, {"held_out_fold", t.held_out_fold}, {"records", t.records}});
  json predictions = json::array();
  for (const auto& p : log.predictions)
    predictions.push_back({{"iteration", p.iteration}, {"model_fold", p.model_fold}, {"record", p.record}});
  json thresholds = json::array();
  for (const auto& t : log.thresholds) {
    json row = {{"iteration", t.iteration},
                {"record", t.record},
                {"stem", records[t.record].stem},
                {"class", labels.name(t.class_index)}};
    row["threshold"] = t.threshold ? json(*t.threshold) : json(nullptr);
    thresholds.push_back(std::move(row));
  }
  return {{"trainings", trainings}, {"predictions", predictions}, {"thresholds", thresholds}};
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

class CheckpointWriter : public EmObserver {
 public:
  CheckpointWriter(fs::path dir, std::span<const WeakRecord> records) : dir_(std::move(dir)), records_(records) {}

  void on_model(const TrainingEvent& ev, const SegmentationModel& model) override {
    if (ev.held_out_fold < 0) return;
    fs::create_directories(dir_);
    model.save(dir_ / ("iter" + std::to_string(ev.iteration) + "_heldout" + std::to_string(ev.held_out_fold) + ".wsm"));
  }
  void on_masks(int iteration, std::span<const MaskStack> masks) override {
    write_masks(masks, records_, dir_ / ("iter" + std::to_string(iteration) + "_masks"));
  }

 private:
  fs::path dir_;
  std::span<const WeakRecord> records_;
};

}  // namespace

std::uint64_t keypoint_seed(const RunConfig& cfg, int k) {
  return derive_seed(cfg.stream("keypoints"), "k", static_cast<std::uint64_t>(k));
}

void cmd_synth_gen(const RunConfig& cfg, const fs::path& out_dir) {
  const BenchmarkSplit split = make_benchmark(cfg.synth, cfg.synth_train_images, cfg.synth_test_images);
  write_dataset(split.train, out_dir / "train");
  std::vector<std::string> outputs = {"train/manifest.json"};
  if (cfg.synth_test_images > 0) {
    write_dataset(split.test, out_dir / "test");
    outputs.push_back("test/manifest.json");
  }
  write_run_manifest(out_dir, "synth-gen", cfg, json::object(), outputs);
}

void cmd_init(const fs::path& manifest, std::optional<double> sigma_fraction, const RunConfig& cfg,
              const fs::path& out_dir) {
  RunConfig run = cfg;
  if (sigma_fraction) run.init.sigma_fraction = *sigma_fraction;
  run.validate();
  const Dataset data = load(manifest);
  std::vector<MaskStack> masks;
  for (const auto& rec : data.records)
    masks.push_back(init_masks_from_keypoints(rec.image, rec.keypoints, data.labels, run.init));
  write_masks(masks, data.records, out_dir / "masks");
  write_run_manifest(out_dir, "init", run, {{"manifest", manifest.string()}}, {"masks/"});
}

void cmd_train(const fs::path& manifest, const RunConfig& cfg, const fs::path& out_dir) {
  const Dataset data = load(manifest);
  fs::create_directories(out_dir);
  const LogisticBackend backend(cfg.features, cfg.train_config());
  CheckpointWriter checkpoints(out_dir / "checkpoints", data.records);
  const EmResult em = run_em(data.records, data.labels, backend, cfg.em_config(), &checkpoints);

  em.model->save(out_dir / "model.wsm");
  write_masks(em.pseudo_masks, data.records, out_dir / "pseudo_masks");
  fs::create_directories(out_dir / "heldout_probs");
  for (std::size_t r = 0; r < data.records.size(); ++r)
    write_prob_map(em.heldout_probs[r], out_dir / "heldout_probs" / (data.records[r].stem + ".fpm"));
  json log = log_to_json(em.log, data.records, data.labels);
  log["folds"] = em.split.fold_of;
  write_file_bytes(out_dir / "run_log.json", log.dump(2) + "\n");
  write_run_manifest(out_dir, "train", cfg, {{"manifest", manifest.string()}},
                     {"model.wsm", "pseudo_masks/", "heldout_probs/", "run_log.json", "checkpoints/"});
}

void cmd_sigma_sweep(const fs::path& manifest, const std::vector<double>& grid, const RunConfig& cfg,
                     const fs::path& out_dir) {
  RunConfig run = cfg;
  if (!grid.empty()) run.sigma_grid = grid;
  run.validate();
  const Dataset data = load(manifest);
  fs::create_directories(out_dir);
  const LogisticBackend backend(run.features, run.train_config());
  const SweepReport report =
      sigma_sweep(data.records, data.labels, backend, run.em_config(), run.sigma_grid, run.validation_rule);
  write_file_bytes(out_dir / "sweep.csv", format_sweep_table(report, data.labels));
  write_run_manifest(out_dir, "sigma-sweep", run, {{"manifest", manifest.string()}}, {"sweep.csv"});
}

void cmd_eval(const fs::path& manifest, const fs::path& model_path, const RunConfig& cfg,
              const fs::path& out_dir) {
  const Dataset data = load(manifest);
  const SegmenterModel model = SegmenterModel::load(model_path, cfg.features);
  if (model.label_count() != data.labels.count())
    throw ConfigError(model_path.string() + ": model has " + std::to_string(model.label_count()) +
                      " classes, manifest has " + std::to_string(data.labels.count()));
  const LogisticBackend backend(cfg.features, cfg.train_config());
  const JaccardReport report = evaluate(data, model, backend, cfg.eval);
  fs::create_directories(out_dir);
  write_file_bytes(out_dir / "jaccard.csv", format_jaccard_table({{model_path.stem().string(), report}}));
  write_run_manifest(out_dir, "eval", cfg, {{"manifest", manifest.string()}, {"model", model_path.string()}},
                     {"jaccard.csv"});
}

std::vector<AblationRow> run_ablation(const Dataset& train, const Dataset& test, const RunConfig& cfg) {
  if (train.labels.names() != test.labels.names()) throw ConfigError("train and test label spaces differ");
  std::vector<std::optional<int>> counts;
  for (int k : cfg.ablation.keypoint_counts) counts.emplace_back(k);
  if (counts.empty()) counts.emplace_back();
  if (cfg.ablation.keypoint_counts.size() && !train.has_full_ground_truth())
    throw ConfigError("keypoint_counts needs ground truth in the training manifest to resample keypoints");

  const LogisticBackend backend(cfg.features, cfg.train_config());
  double sigma = cfg.init.sigma_fraction;
  if (cfg.ablation.select_sigma)
    sigma = sigma_sweep(train.records, train.labels, backend, cfg.em_config(), cfg.sigma_grid, cfg.validation_rule)
                .best_sigma();
  std::vector<AblationRow> rows;
  for (const auto& k : counts) {
    Dataset data = train;
    if (k) resample_keypoints(data, *k, keypoint_seed(cfg, *k), cfg.synth.background_keypoints);
    for (ThresholdMode mode : cfg.ablation.modes)
      for (float clamp : cfg.ablation.clamps)
        for (Aggregator agg : cfg.ablation.aggregators) {
          EmConfig em_cfg = cfg.em_config();
          em_cfg.policy.mode = mode;
          em_cfg.policy.clamp_max = clamp;
          em_cfg.policy.aggregator = agg;
          em_cfg.init.sigma_fraction = sigma;
          const EmResult em = run_em(data.records, data.labels, backend, em_cfg);
          rows.push_back({mode, clamp, agg, k, sigma, evaluate(test, *em.model, backend, cfg.eval)});
        }
  }
  return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows, const LabelSpace& labels) {
  std::string out = "mode,clamp_max,aggregator,keypoints,sigma_fraction,Bck";
  for (const auto& n : labels.names()) out += "," + n;
  out += ",Mean\n";
  for (const auto& row : rows) {
    out += to_string(row.mode) + "," + fmt4(row.clamp_max) + "," + to_string(row.aggregator) + ",";
    out += row.keypoints ? std::to_string(*row.keypoints) : "manifest";
    out += "," + fmt4(row.sigma_fraction);
    for (double v : row.report.values) out += "," + fmt4(v);
    out += "," + fmt4(row.report.mean) + "\n";
  }
  return out;
}

void cmd_ablate(const fs::path& train_manifest, const fs::path& test_manifest, const RunConfig& cfg,
                const fs::path& out_dir) {
  const Dataset train = load(train_manifest);
  const Dataset test = load(test_manifest);
  const auto rows = run_ablation(train, test, cfg);
  fs::create_directories(out_dir);
  write_file_bytes(out_dir / "ablation.csv", format_ablation_table(rows, train.labels));
  write_run_manifest(out_dir, "ablate", cfg,
                     {{"train_manifest", train_manifest.string()}, {"test_manifest", test_manifest.string()}},
                     {"ablation.csv"});
}

}  // namespace wsseg
