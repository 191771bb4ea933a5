#include "protoscore/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "protoscore/clustering.hpp"
#include "protoscore/error.hpp"
#include "protoscore/random.hpp"

namespace protoscore::synthetic {

void validate(const SawsineConfig& cfg) {
  if (cfg.num_samples < 2 || cfg.num_samples % 2 != 0) {
    throw Error(ErrorKind::InvalidConfig, "num_samples must be even and >= 2");
  }
  if (cfg.series_length < 8) throw Error(ErrorKind::InvalidConfig, "series_length must be >= 8");
  if (!(cfg.noise_amp_max >= 0.0) || !std::isfinite(cfg.noise_amp_max)) {
    throw Error(ErrorKind::InvalidConfig, "noise_amp_max must be >= 0");
  }
}

Vector base_shape(int shape, Index length) {
  Vector v(length);
  for (Index k = 0; k < length; ++k) {
    const double phase = static_cast<double>(kSawsinePeriods) * static_cast<double>(k) / static_cast<double>(length);
    const double frac = phase - std::floor(phase);
    switch (shape) {
    case 0: v(k) = 2.0 * frac - 1.0; break;
    case 1: v(k) = 1.0 - 2.0 * frac; break;
    case 2: v(k) = std::sin(2.0 * std::numbers::pi * phase); break;
    case 3: v(k) = std::sin(2.0 * std::numbers::pi * phase + std::numbers::pi / 2.0); break;
    default: throw Error(ErrorKind::InvalidConfig, "unknown base shape " + std::to_string(shape));
    }
  }
  return v;
}

SawsineDataset generate_sawsine(const SawsineConfig& cfg) {
  validate(cfg);
  const Index n = cfg.num_samples;
  const Index len = cfg.series_length;
  Rng rng(cfg.seed);

  std::vector<Vector> shapes;
  for (int s = 0; s < kNumBaseShapes; ++s) shapes.push_back(base_shape(s, len));

  // Exactly half of the samples per class, in shuffled order.
  Labels labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i < n / 2 ? 0 : 1;
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(labels[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(j)]);
  }

  SawsineDataset out;
  out.data.samples.resize(n, len);
  out.data.labels = labels;
  out.data.sample_ids.resize(static_cast<std::size_t>(n));
  out.base_shape.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    const int shape = 2 * label + (uniform01(rng) < 0.5 ? 0 : 1);
    const double amp_mul = uniform(rng, 0.0, cfg.noise_amp_max);
    const double amp_add = uniform(rng, 0.0, cfg.noise_amp_max);
    const Vector& base = shapes[static_cast<std::size_t>(shape)];
    for (Index k = 0; k < len; ++k) {
      const double m = amp_mul * (2.0 * uniform01(rng) - 1.0);
      const double a = amp_add * (2.0 * uniform01(rng) - 1.0);
      out.data.samples(i, k) = base(k) * (1.0 + m) + a;
    }
    out.data.sample_ids[static_cast<std::size_t>(i)] = std::to_string(i);
    out.base_shape[static_cast<std::size_t>(i)] = shape;
  }
  return out;
}

void validate(const PlantedLatentConfig& cfg) {
  if (cfg.num_classes < 1 || cfg.clusters_per_class < 1 || cfg.points_per_cluster < 1 || cfg.latent_dim < 1) {
    throw Error(ErrorKind::InvalidConfig, "planted config sizes must be positive");
  }
  if (!(cfg.cluster_sigma >= 0.0) || !(cfg.separation > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "planted config needs sigma >= 0 and separation > 0");
  }
}

PlantedLatent generate_planted_latent(const PlantedLatentConfig& cfg) {
  validate(cfg);
  const int k = cfg.num_classes * cfg.clusters_per_class;
  const Index dim = cfg.latent_dim;

  int base = 1;
  while (std::pow(static_cast<double>(base), static_cast<double>(dim)) < static_cast<double>(k)) ++base;

  PlantedLatent out;
  out.centers = Matrix::Zero(k, dim);
  for (int c = 0; c < k; ++c) {
    int rest = c;
    for (Index d = 0; d < dim && rest > 0; ++d) {
      out.centers(c, d) = cfg.separation * static_cast<double>(rest % base);
      rest /= base;
    }
  }

  const Index n = static_cast<Index>(k) * cfg.points_per_cluster;
  Rng rng(cfg.seed);
  out.latent.vectors.resize(n, dim);
  out.latent.labels.resize(static_cast<std::size_t>(n));
  out.latent.source_ids.resize(static_cast<std::size_t>(n));
  out.truth.assignments.resize(static_cast<std::size_t>(n));
  for (int c = 0; c < k; ++c) {
    for (Index p = 0; p < cfg.points_per_cluster; ++p) {
      const Index row = static_cast<Index>(c) * cfg.points_per_cluster + p;
      for (Index d = 0; d < dim; ++d) out.latent.vectors(row, d) = out.centers(c, d) + cfg.cluster_sigma * gaussian(rng);
      out.latent.labels[static_cast<std::size_t>(row)] = c / cfg.clusters_per_class;
      out.latent.source_ids[static_cast<std::size_t>(row)] = std::to_string(row);
      out.truth.assignments[static_cast<std::size_t>(row)] = c;
    }
  }

  out.truth.centroids.resize(k, dim);
  for (int c = 0; c < k; ++c) {
    out.truth.centroids.row(c) =
        out.latent.vectors.middleRows(static_cast<Index>(c) * cfg.points_per_cluster, cfg.points_per_cluster)
            .colwise()
            .mean();
    out.truth.cluster_class.push_back(c / cfg.clusters_per_class);
  }
  for (int label = 0; label < cfg.num_classes; ++label) out.truth.per_class_k[label] = cfg.clusters_per_class;
  if (k >= 2) out.truth.mean_silhouette = clustering::mean_silhouette(out.latent.vectors, out.truth.assignments, k);

  out.proto.prototypes = out.centers;
  out.proto.class_hint = out.truth.cluster_class;
  return out;
}

InputDataset as_input_dataset(const LatentDataset& latent) {
  InputDataset data;
  data.samples = latent.vectors;
  data.labels = latent.labels;
  data.sample_ids = latent.source_ids;
  return data;
}

} // namespace protoscore::synthetic
