#include "protoscore/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "protoscore/error.hpp"

namespace protoscore {

namespace {

void require_finite(const Matrix& m, std::string_view field) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        throw Error(ErrorKind::NonFiniteValue, std::string(field) + " row " + std::to_string(r) +
                                                   " column " + std::to_string(c));
      }
    }
  }
}

void require_rows(std::size_t got, Index want, std::string_view field) {
  if (static_cast<Index>(got) != want) {
    throw Error(ErrorKind::ShapeMismatch, std::string(field) + " has " + std::to_string(got) +
                                              " entries, expected " + std::to_string(want));
  }
}

void require_labels(const Labels& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      throw Error(ErrorKind::ShapeMismatch, "labels row " + std::to_string(i) + " is negative");
    }
  }
}

} // namespace

std::vector<Index> ClusterModel::members(int cluster) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == cluster) {
      out.push_back(static_cast<Index>(i));
    }
  }
  return out;
}

void validate(const InputDataset& data) {
  if (data.samples.rows() < 2) {
    throw Error(ErrorKind::ShapeMismatch, "samples needs at least 2 rows");
  }
  if (data.samples.cols() < 1) {
    throw Error(ErrorKind::ShapeMismatch, "samples needs at least 1 column");
  }
  require_rows(data.labels.size(), data.samples.rows(), "labels");
  require_rows(data.sample_ids.size(), data.samples.rows(), "sample_ids");
  if (!data.modified.empty()) {
    require_rows(data.modified.size(), data.samples.rows(), "modified");
  }
  require_labels(data.labels);
  require_finite(data.samples, "samples");
}

void validate(const LatentDataset& latent) {
  if (latent.vectors.cols() < 1) {
    throw Error(ErrorKind::ShapeMismatch, "latent vectors need at least 1 column");
  }
  require_rows(latent.labels.size(), latent.vectors.rows(), "latent labels");
  require_rows(latent.source_ids.size(), latent.vectors.rows(), "latent source_ids");
  require_labels(latent.labels);
  require_finite(latent.vectors, "latent");
}

void validate(const PrototypeSet& proto, Index latent_dim) {
  if (proto.prototypes.rows() < 1) {
    throw Error(ErrorKind::ShapeMismatch, "prototype set is empty");
  }
  if (proto.prototypes.cols() != latent_dim) {
    throw Error(ErrorKind::ShapeMismatch, "prototypes have dimension " +
                                              std::to_string(proto.prototypes.cols()) +
                                              ", latent space has " + std::to_string(latent_dim));
  }
  if (proto.class_hint) {
    require_rows(proto.class_hint->size(), proto.prototypes.rows(), "class_hint");
  }
  require_finite(proto.prototypes, "prototypes");
}

void validate(const ClusterModel& cm, const LatentDataset& latent) {
  const Index k = cm.num_clusters();
  require_rows(cm.assignments.size(), latent.size(), "assignments");
  require_rows(cm.cluster_class.size(), k, "cluster_class");
  if (cm.centroids.cols() != latent.dim()) {
    throw Error(ErrorKind::ShapeMismatch, "centroid dimension differs from latent dimension");
  }
  int total_k = 0;
  for (const auto& [label, kk] : cm.per_class_k) total_k += kk;
  if (total_k != k) {
    throw Error(ErrorKind::ShapeMismatch, "per_class_k sums to " + std::to_string(total_k) +
                                              ", model has " + std::to_string(k) + " clusters");
  }

  Matrix sums = Matrix::Zero(k, latent.dim());
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < cm.assignments.size(); ++i) {
    const int c = cm.assignments[i];
    if (c < 0 || c >= k) {
      throw Error(ErrorKind::ShapeMismatch, "assignment row " + std::to_string(i) + " out of range");
    }
    if (cm.cluster_class[static_cast<std::size_t>(c)] != latent.labels[i]) {
      throw Error(ErrorKind::ShapeMismatch,
                  "point " + std::to_string(i) + " sits in a cluster of another class");
    }
    sums.row(c) += latent.vectors.row(static_cast<Index>(i));
    ++counts[static_cast<std::size_t>(c)];
  }
  for (Index c = 0; c < k; ++c) {
    const auto n = counts[static_cast<std::size_t>(c)];
    if (n == 0) {
      throw Error(ErrorKind::ShapeMismatch, "cluster " + std::to_string(c) + " is empty");
    }
    const double err = (sums.row(c) / static_cast<double>(n) - cm.centroids.row(c)).cwiseAbs().maxCoeff();
    if (err > 1e-9) {
      throw Error(ErrorKind::ShapeMismatch,
                  "centroid " + std::to_string(c) + " is not the mean of its points");
    }
  }
}

void validate(const ScoreReport& report) {
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    const double s = report.scores[i];
    const auto m = static_cast<Metric>(i);
    const bool unbounded = m == Metric::CT && !report.ct_normalized;
    // Without the rescale CC and CLS are raw silhouettes in [-1, 1].
    const bool signed_range = (m == Metric::CC || m == Metric::CLS) && !report.silhouette_rescaled;
    const double lo = signed_range ? -1.0 : 0.0;
    if (!std::isfinite(s) || s < lo || (!unbounded && s > 1.0)) {
      throw Error(ErrorKind::InvalidConfig,
                  std::string(kMetricNames[i]) + " score out of range: " + std::to_string(s));
    }
  }
  const double mean = std::accumulate(report.scores.begin(), report.scores.end(), 0.0) / kNumMetrics;
  if (std::abs(mean - report.total) > 1e-9) {
    throw Error(ErrorKind::InvalidConfig, "total is not the mean of the nine scores");
  }
}

void validate(const NoiseConfig& cfg) {
  if (!(cfg.sigma_fraction >= 0.0) || !std::isfinite(cfg.sigma_fraction)) {
    throw Error(ErrorKind::InvalidConfig, "sigma_fraction must be a finite value >= 0");
  }
}

void validate(const ConsistencyConfig& cfg) {
  if (cfg.num_reruns < 1) {
    throw Error(ErrorKind::InvalidConfig, "num_reruns must be >= 1");
  }
  if (static_cast<int>(cfg.adapter_endpoints.size()) != cfg.num_reruns) {
    throw Error(ErrorKind::InvalidConfig, "adapter_endpoints must list one adapter per rerun");
  }
  if (!cfg.rerun_prototypes.empty() && cfg.rerun_prototypes.size() != cfg.adapter_endpoints.size()) {
    throw Error(ErrorKind::InvalidConfig, "rerun_prototypes must list one manifest per rerun");
  }
}

Labels distinct_labels(const Labels& labels) {
  std::set<int> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

double average_sample_range(const Matrix& samples) {
  if (samples.rows() == 0) return 0.0;
  return (samples.rowwise().maxCoeff() - samples.rowwise().minCoeff()).mean();
}

} // namespace protoscore
