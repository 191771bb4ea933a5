#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "protoscore/adapter.hpp"
#include "protoscore/clustering.hpp"
#include "protoscore/metrics.hpp"
#include "protoscore/types.hpp"

namespace protoscore::experiments {

struct RunConfig {
  clustering::KMeansConfig kmeans;
  NoiseConfig noise;
  std::optional<ConsistencyConfig> consistency;
  metrics::MetricFlags metric_flags;
  double compactness_rate = metrics::kDefaultCompactnessRate;
  std::uint64_t seed = 0;
};

struct OutlierConfig {
  double fraction = 0.03;
  double magnitude_fraction = 0.5; // noise sigma as a fraction of the average sample range
  std::uint64_t seed = 0;
};

void validate(const RunConfig& cfg);
void validate(const OutlierConfig& cfg);

// JSON config dialect shared with the CLI. Missing keys keep their defaults;
// unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const RunConfig& cfg);
OutlierConfig outlier_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const OutlierConfig& cfg);

// Hex FNV-1a of the canonical config JSON.
std::string fingerprint(const RunConfig& cfg);

// The stage seeds RunConfig::seed expands into.
clustering::KMeansConfig kmeans_stage(const RunConfig& cfg);
NoiseConfig noise_stage(const RunConfig& cfg);

// A model trained under the same conditions as the base model, with its prototypes.
struct Rerun {
  PrototypeSet proto;
  adapter::ModelChannel* channel = nullptr;
};

// Everything computed on the way to the scores; kept for inspection.
struct BenchmarkTrace {
  LatentDataset latent;
  ClusterModel cm;
  clustering::PrototypeAssignment assignment;
};

// Encode, cluster per class, assign prototypes, compute the nine scores and
// the total. Without reruns, consistency compares the prototypes with their
// own decode/encode round trip through the base model.
ScoreReport run_benchmark(const InputDataset& data, const PrototypeSet& proto, adapter::ModelChannel& channel,
                          const RunConfig& cfg, std::span<const Rerun> reruns = {},
                          std::optional<double> val_loss = std::nullopt, BenchmarkTrace* trace = nullptr);

// Adds N(0, sigma_out^2) to every feature of floor(fraction * N) uniformly
// chosen rows and flags them in `modified`.
InputDataset inject_outliers(const InputDataset& data, const OutlierConfig& cfg);

double run_consistency_campaign(const InputDataset& data, const PrototypeSet& proto,
                                adapter::ModelChannel& channel, std::span<const Rerun> reruns,
                                const RunConfig& cfg);

struct OutlierStudy {
  ScoreReport clean;
  ScoreReport mixed;
  ScoreArray delta{}; // mixed - clean
  InputDataset mixed_data;
};

// Scores the same model on clean data and on data with injected outliers.
OutlierStudy run_outlier_study(const InputDataset& data, const PrototypeSet& proto,
                               adapter::ModelChannel& channel, const RunConfig& run_cfg,
                               const OutlierConfig& outlier_cfg, std::span<const Rerun> reruns = {});

} // namespace protoscore::experiments
