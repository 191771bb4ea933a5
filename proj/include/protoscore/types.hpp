#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace protoscore {

// One sample per row throughout: datasets, latents, prototypes and centroids.
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = RowMatrix<double>;
using Vector = RowVector<double>;
using Index = Eigen::Index;

using Labels = std::vector<int>;

struct InputDataset {
  Matrix samples;                      // N x d
  std::vector<std::string> sample_ids; // defaults to the decimal row index
  Labels labels;
  // Non-empty only for derived datasets: 1 marks a row altered by outlier injection.
  std::vector<std::uint8_t> modified;

  Index size() const { return samples.rows(); }
  Index dim() const { return samples.cols(); }
};

struct LatentDataset {
  Matrix vectors; // N x n
  Labels labels;
  std::vector<std::string> source_ids;

  Index size() const { return vectors.rows(); }
  Index dim() const { return vectors.cols(); }
};

struct PrototypeSet {
  Matrix prototypes; // M x n
  std::optional<Labels> class_hint;

  Index size() const { return prototypes.rows(); }
  Index dim() const { return prototypes.cols(); }
};

struct ClusterModel {
  Labels assignments; // point -> global cluster index
  Matrix centroids;   // K x n
  Labels cluster_class;
  std::map<int, int> per_class_k;
  std::map<int, double> per_class_silhouette;
  double mean_silhouette = 0.0;

  Index num_clusters() const { return centroids.rows(); }
  // Row indices of the points assigned to `cluster`, in ascending order.
  std::vector<Index> members(int cluster) const;
};

enum class Metric : int { CR = 0, CS, CN, CT, CC, CP, CF, IC, CLS };
inline constexpr std::size_t kNumMetrics = 9;
inline constexpr std::array<std::string_view, kNumMetrics> kMetricNames = {
    "CR", "CS", "CN", "CT", "CC", "CP", "CF", "IC", "CLS"};

constexpr std::string_view metric_name(Metric m) { return kMetricNames[static_cast<std::size_t>(m)]; }

using ScoreArray = std::array<double, kNumMetrics>;

struct ScoreReport {
  ScoreArray scores{};
  double total = 0.0;
  std::optional<double> val_loss;
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  ScoreArray clock{}; // wall seconds per metric
  int cs_reruns = 0;  // 0: consistency measured against the base model's own round trip
  bool ct_normalized = false;
  bool silhouette_rescaled = true;
  std::string label; // free-form run label for tabular output

  double& operator[](Metric m) { return scores[static_cast<std::size_t>(m)]; }
  double operator[](Metric m) const { return scores[static_cast<std::size_t>(m)]; }
};

struct NoiseConfig {
  double sigma_fraction = 0.05;
  std::uint64_t seed = 0;
};

// Launches a live adapter process, or replays a recorded transcript.
struct AdapterDescriptor {
  std::vector<std::string> command;
  std::filesystem::path replay_path;

  bool is_replay() const { return command.empty(); }
};

struct ConsistencyConfig {
  int num_reruns = 1;
  std::vector<AdapterDescriptor> adapter_endpoints;
  // Prototype manifest of each rerun model, aligned with adapter_endpoints.
  std::vector<std::filesystem::path> rerun_prototypes;
};

void validate(const InputDataset& data);
void validate(const LatentDataset& latent);
void validate(const PrototypeSet& proto, Index latent_dim);
void validate(const ClusterModel& cm, const LatentDataset& latent);
void validate(const ScoreReport& report);
void validate(const NoiseConfig& cfg);
void validate(const ConsistencyConfig& cfg);

// Distinct labels in ascending order.
Labels distinct_labels(const Labels& labels);

// Mean over samples of (max feature - min feature).
double average_sample_range(const Matrix& samples);

} // namespace protoscore
