#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "support.hpp"
#include "wsseg/em_trainer.hpp"
#include "wsseg/error.hpp"
#include "wsseg/logistic.hpp"
#include "wsseg/synth.hpp"

using namespace wsseg;

namespace {

// Prepared image tagged with its record index.
class TaggedImage : public PreparedImage {
 public:
  TaggedImage(int w, int h, std::size_t tag) : w_(w), h_(h), tag(tag) {}
  int width() const override { return w_; }
  int height() const override { return h_; }
  int w_, h_;
  std::size_t tag;
};

struct Journal {
  std::vector<std::set<std::size_t>> trained_on;       // per training call
  std::vector<std::pair<int, std::size_t>> predicted;  // (model id, image tag)
};

class SpyModel : public SegmentationModel {
 public:
  SpyModel(int id, std::size_t classes, Journal* j) : id_(id), classes_(classes), journal_(j) {}
  std::size_t label_count() const override { return classes_; }
  ProbMapStack predict(const PreparedImage& image) const override {
    const auto& t = dynamic_cast<const TaggedImage&>(image);
    journal_->predicted.emplace_back(id_, t.tag);
    return ProbMapStack(t.width(), t.height(), classes_, 0.7f);
  }
  void save(const std::filesystem::path&) const override {}
  int id_;

 private:
  std::size_t classes_;
  Journal* journal_;
};

class SpyBackend : public SegmenterBackend {
 public:
  explicit SpyBackend(Journal* j) : journal_(j) {}
  std::shared_ptr<const PreparedImage> prepare(const ImageTensor& image) const override {
    return std::make_shared<TaggedImage>(image.width(), image.height(),
                                         static_cast<std::size_t>(image.at(0, 0, 0) * 255.0 + 0.5));
  }
  std::unique_ptr<SegmentationModel> train(std::span<const TrainingExample> examples, std::size_t classes,
                                           std::uint64_t) const override {
    std::set<std::size_t> seen;
    for (const auto& ex : examples) {
      const auto& t = dynamic_cast<const TaggedImage&>(*ex.image);
      EXPECT_EQ(t.tag, ex.record);
      seen.insert(t.tag);
    }
    journal_->trained_on.push_back(seen);
    return std::make_unique<SpyModel>(static_cast<int>(journal_->trained_on.size() - 1), classes, journal_);
  }

 private:
  Journal* journal_;
};

std::vector<WeakRecord> tagged_records(std::size_t n) {
  std::vector<WeakRecord> recs(n);
  for (std::size_t r = 0; r < n; ++r) {
    recs[r].stem = "r" + std::to_string(r);
    recs[r].image = ImageTensor(6, 6, 1);
    recs[r].image.at(0, 0, 0) = static_cast<double>(r) / 255.0;
    recs[r].keypoints.entries = {{r % 2, 3, 3}};
  }
  return recs;
}

class CountingObserver : public EmObserver {
 public:
  void on_model(const TrainingEvent& ev, const SegmentationModel&) override { models.push_back(ev); }
  void on_masks(int iteration, std::span<const MaskStack> masks) override {
    mask_iterations.push_back(iteration);
    EXPECT_EQ(masks.size(), 10u);
  }
  std::vector<TrainingEvent> models;
  std::vector<int> mask_iterations;
};

}  // namespace

TEST(Folds, BalancedDisjointAndDeterministic) {
  for (std::size_t n : {3u, 4u, 10u, 61u}) {
    const FoldSplit s = split_three_folds(n, 9);
    std::size_t total = 0, lo = n, hi = 0;
    for (int f = 0; f < kFoldCount; ++f) {
      const auto m = s.members(f);
      total += m.size();
      lo = std::min(lo, m.size());
      hi = std::max(hi, m.size());
      const auto c = s.complement(f);
      EXPECT_EQ(c.size() + m.size(), n);
      for (std::size_t r : c) EXPECT_NE(s.fold_of[r], f);
    }
    EXPECT_EQ(total, n);
    EXPECT_LE(hi - lo, 1u);
    EXPECT_EQ(split_three_folds(n, 9).fold_of, s.fold_of);
  }
  EXPECT_THROW(split_three_folds(2, 0), ConfigError);
}

TEST(Em, ScheduleAndFoldIsolation) {
  Journal journal;
  const SpyBackend backend(&journal);
  const auto recs = tagged_records(10);
  EmConfig cfg;
  cfg.em_iterations = 2;
  CountingObserver obs;
  const EmResult em = run_em(recs, LabelSpace::numbered(2), backend, cfg, &obs);

  ASSERT_EQ(em.log.trainings.size(), 7u);
  ASSERT_EQ(journal.trained_on.size(), 7u);
  int fold_trainings = 0;
  for (std::size_t k = 0; k < 7; ++k) {
    const auto& ev = em.log.trainings[k];
    const std::set<std::size_t> logged(ev.records.begin(), ev.records.end());
    EXPECT_EQ(logged, journal.trained_on[k]);
    if (ev.held_out_fold >= 0) {
      ++fold_trainings;
      const auto comp = em.split.complement(ev.held_out_fold);
      EXPECT_EQ(logged, std::set<std::size_t>(comp.begin(), comp.end()));
      for (std::size_t r : logged) EXPECT_NE(em.split.fold_of[r], ev.held_out_fold);
    } else {
      EXPECT_EQ(k, 6u);
      EXPECT_EQ(ev.iteration, 0);
      EXPECT_EQ(logged.size(), 10u);
    }
  }
  EXPECT_EQ(fold_trainings, 6);

  // each fold model predicts exactly its own held-out fold, and every record once per iteration
  std::map<int, std::set<std::size_t>> by_model;
  for (const auto& [id, tag] : journal.predicted) by_model[id].insert(tag);
  for (const auto& [id, tags] : by_model) {
    const int held = em.log.trainings[static_cast<std::size_t>(id)].held_out_fold;
    ASSERT_GE(held, 0);
    const auto m = em.split.members(held);
    EXPECT_EQ(tags, std::set<std::size_t>(m.begin(), m.end()));
    for (std::size_t r : tags) EXPECT_FALSE(journal.trained_on[static_cast<std::size_t>(id)].count(r));
  }
  EXPECT_EQ(journal.predicted.size(), 20u);
  EXPECT_EQ(em.log.predictions.size(), 20u);

  EXPECT_EQ(obs.models.size(), 7u);
  EXPECT_EQ(obs.mask_iterations, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(em.log.thresholds.size(), 2u * 10u * 2u);
  EXPECT_EQ(em.heldout_probs.size(), 10u);
}

TEST(Em, EStepMasksFollowPolicy) {
  Journal journal;
  const SpyBackend backend(&journal);
  const auto recs = tagged_records(6);
  EmConfig cfg;
  cfg.em_iterations = 1;
  const EmResult em = run_em(recs, LabelSpace::numbered(2), backend, cfg);
  // constant 0.7 posterior with clamp 0.5 labels the whole plane of the present class only
  for (std::size_t r = 0; r < 6; ++r) {
    EXPECT_EQ(em.pseudo_masks[r].count(r % 2), 36u);
    EXPECT_EQ(em.pseudo_masks[r].count(1 - r % 2), 0u);
  }
  for (const auto& t : em.log.thresholds) {
    if (t.class_index == t.record % 2) {
      ASSERT_TRUE(t.threshold);
      EXPECT_EQ(*t.threshold, 0.5f);
    } else {
      EXPECT_FALSE(t.threshold);
    }
  }
}

TEST(Em, InitialMasksAreKeypointDisks) {
  Journal journal;
  const SpyBackend backend(&journal);
  const auto recs = tagged_records(3);
  EmConfig cfg;
  cfg.init.sigma_fraction = 0.2;  // radius 1.2 on 6 pixels: the 3x3 cross plus nothing diagonal
  const EmResult em = run_em(recs, LabelSpace::numbered(2), backend, cfg);
  EXPECT_EQ(em.initial_masks[0].count(0), 5u);
}

TEST(Em, RejectsBadConfig) {
  EmConfig cfg;
  cfg.em_iterations = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  Journal journal;
  const SpyBackend backend(&journal);
  EXPECT_THROW(run_em(tagged_records(2), LabelSpace::numbered(2), backend, EmConfig{}), ConfigError);
}

TEST(Em, DeterministicWithRealBackend) {
  SynthConfig sc;
  sc.image_size = 20;
  sc.class_count = 2;
  sc.rng_seed = 8;
  const Dataset d = generate(sc, 6).dataset;
  TrainConfig tc;
  tc.epochs = 3;
  const LogisticBackend backend(FeatureConfig{}, tc);
  EmConfig cfg;
  cfg.rng_seed = 4;
  const EmResult a = run_em(d.records, d.labels, backend, cfg);
  const EmResult b = run_em(d.records, d.labels, backend, cfg);
  EXPECT_EQ(dynamic_cast<const SegmenterModel&>(*a.model).serialize(),
            dynamic_cast<const SegmenterModel&>(*b.model).serialize());
  EXPECT_EQ(a.pseudo_masks, b.pseudo_masks);
  EXPECT_EQ(a.heldout_probs, b.heldout_probs);
  cfg.rng_seed = 5;
  const EmResult c = run_em(d.records, d.labels, backend, cfg);
  EXPECT_NE(dynamic_cast<const SegmenterModel&>(*a.model).serialize(),
            dynamic_cast<const SegmenterModel&>(*c.model).serialize());
}

TEST(Em, ClassAverageUsesOneThresholdPerClass) {
  SynthConfig sc;
  sc.image_size = 20;
  sc.class_count = 2;
  sc.rng_seed = 9;
  const Dataset d = generate(sc, 9).dataset;
  TrainConfig tc;
  tc.epochs = 2;
  const LogisticBackend backend(FeatureConfig{}, tc);
  EmConfig cfg;
  cfg.em_iterations = 1;
  cfg.policy.mode = ThresholdMode::class_average;
  const EmResult em = run_em(d.records, d.labels, backend, cfg);
  std::map<std::size_t, std::set<float>> per_class;
  for (const auto& t : em.log.thresholds)
    if (t.threshold) per_class[t.class_index].insert(*t.threshold);
  for (const auto& [l, values] : per_class) EXPECT_EQ(values.size(), 1u) << "class " << l;
}
