#include "protoscore/metrics.hpp"

#include <cmath>
#include <numeric>

#include "protoscore/distance.hpp"
#include "protoscore/error.hpp"
#include "protoscore/random.hpp"

namespace protoscore::metrics {

namespace {

adapter::ModelChannel& require_channel(const MetricContext& ctx, std::string_view metric) {
  if (ctx.channel == nullptr) {
    throw Error(ErrorKind::ChannelRequired, std::string(metric) + " needs a model channel");
  }
  return *ctx.channel;
}

// h(f(g(z))) for every row of z.
Labels reconstructed_labels(adapter::ModelChannel& ch, const Matrix& latent) {
  return ch.classify(ch.encode(ch.decode(latent)));
}

std::vector<std::vector<Index>> members_of(const MetricContext& ctx) {
  return clustering::cluster_members(ctx.cm.assignments, static_cast<int>(ctx.cm.num_clusters()));
}

} // namespace

double correctness_from_labels(std::span<const int> point_labels, std::span<const int> proto_labels,
                               std::span<const int> point_to_proto) {
  if (point_labels.size() != point_to_proto.size()) {
    throw Error(ErrorKind::ShapeMismatch, "point labels and prototype assignment differ in length");
  }
  if (point_labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < point_labels.size(); ++i) {
    if (proto_labels[static_cast<std::size_t>(point_to_proto[i])] == point_labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(point_labels.size());
}

double correctness(const MetricContext& ctx) {
  auto& ch = require_channel(ctx, "correctness");
  const Labels point_labels = reconstructed_labels(ch, ctx.latent.vectors);
  const Labels proto_labels = reconstructed_labels(ch, ctx.proto.prototypes);
  return correctness_from_labels(point_labels, proto_labels, ctx.assignment.point_to_proto);
}

double consistency_score(const Matrix& base_protos, std::span<const Matrix> rerun_protos) {
  if (rerun_protos.empty()) {
    throw Error(ErrorKind::PrototypeCountMismatch, "consistency needs at least one rerun");
  }
  if (base_protos.rows() == 0) throw Error(ErrorKind::PrototypeCountMismatch, "base prototype set is empty");
  double sum = 0.0;
  for (const auto& rerun : rerun_protos) {
    if (rerun.rows() == 0) throw Error(ErrorKind::PrototypeCountMismatch, "rerun prototype set is empty");
    if (rerun.cols() != base_protos.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "rerun prototypes are not in the base latent space");
    }
    for (Index i = 0; i < base_protos.rows(); ++i) sum += nearest_row(base_protos.row(i), rerun).second;
  }
  const double mean = sum / (static_cast<double>(base_protos.rows()) * static_cast<double>(rerun_protos.size()));
  return std::exp(-mean);
}

double consistency(const MetricContext& base, std::span<adapter::ModelChannel* const> rerun_channels,
                   std::span<const PrototypeSet> rerun_protos) {
  auto& base_ch = require_channel(base, "consistency");
  if (rerun_channels.size() != rerun_protos.size() || rerun_channels.empty()) {
    throw Error(ErrorKind::PrototypeCountMismatch, "need one prototype set per rerun model, and at least one rerun");
  }
  std::vector<Matrix> reencoded;
  reencoded.reserve(rerun_protos.size());
  for (std::size_t r = 0; r < rerun_protos.size(); ++r) {
    if (rerun_channels[r] == nullptr) throw Error(ErrorKind::ChannelRequired, "rerun model channel is missing");
    reencoded.push_back(base_ch.encode(rerun_channels[r]->decode(rerun_protos[r].prototypes)));
  }
  return consistency_score(base.proto.prototypes, reencoded);
}

Matrix add_gaussian_noise(const Matrix& samples, const NoiseConfig& noise) {
  validate(noise);
  const double sigma = noise.sigma_fraction * average_sample_range(samples);
  Matrix out = samples;
  if (sigma == 0.0) return out;
  Rng rng(noise.seed);
  for (Index r = 0; r < out.rows(); ++r) {
    for (Index c = 0; c < out.cols(); ++c) out(r, c) += sigma * gaussian(rng);
  }
  return out;
}

double continuity_score(const Matrix& protos, const Matrix& clean_latent, const Matrix& noised_latent) {
  if (clean_latent.rows() != noised_latent.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "clean and noised latents differ in length");
  }
  if (clean_latent.rows() == 0) return 1.0;
  const auto clean = nearest_rows(clean_latent, protos);
  const auto noised = nearest_rows(noised_latent, protos);
  double sum = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (clean[i] != noised[i]) sum += (protos.row(clean[i]) - protos.row(noised[i])).norm();
  }
  return std::exp(-sum / static_cast<double>(clean.size()));
}

double continuity(const MetricContext& ctx, const InputDataset& data, const NoiseConfig& noise) {
  auto& ch = require_channel(ctx, "continuity");
  if (data.size() != ctx.latent.size()) {
    throw Error(ErrorKind::ShapeMismatch, "input dataset and latent dataset differ in length");
  }
  const Matrix noised = ch.encode(add_gaussian_noise(data.samples, noise));
  return continuity_score(ctx.proto.prototypes, ctx.latent.vectors, noised);
}

double contrastivity(const Matrix& protos) {
  const Index m = protos.rows();
  if (m < 2) throw Error(ErrorKind::TooFewPrototypes, "contrastivity needs at least two prototypes");
  double sum = 0.0;
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) sum += (protos.row(i) - protos.row(j)).norm();
  }
  // Ordered pairs count each unordered pair twice.
  return 2.0 * sum / (static_cast<double>(m) * static_cast<double>(m - 1));
}

double contrastivity_normalized(const Matrix& protos, const Matrix& latent) {
  const double ct = contrastivity(protos);
  Matrix all(protos.rows() + latent.rows(), protos.cols());
  all << latent, protos;
  const double diam = diameter(all);
  return diam > 0.0 ? ct / diam : 0.0;
}

double contrastivity(const MetricContext& ctx) {
  return ctx.flags.ct_normalized ? contrastivity_normalized(ctx.proto.prototypes, ctx.latent.vectors)
                                 : contrastivity(ctx.proto.prototypes);
}

double covariate_complexity(const MetricContext& ctx) {
  const auto members = members_of(ctx);
  const Index m = ctx.proto.size();
  if (m < 1) throw Error(ErrorKind::TooFewPrototypes, "covariate complexity needs a prototype");
  double sum = 0.0;
  for (Index j = 0; j < m; ++j) {
    const int cluster = ctx.assignment.proto_to_cluster[static_cast<std::size_t>(j)];
    sum += clustering::silhouette_point(ctx.proto.prototypes.row(j), ctx.latent.vectors,
                                        members[static_cast<std::size_t>(cluster)], members, cluster);
  }
  const double s = sum / static_cast<double>(m);
  return ctx.flags.silhouette_rescale ? rescale_silhouette(s) : s;
}

double compactness(Index num_prototypes, double rate) {
  if (num_prototypes < 1) throw Error(ErrorKind::TooFewPrototypes, "compactness needs at least one prototype");
  return std::exp((1.0 - static_cast<double>(num_prototypes)) * rate);
}

double confidence(const MetricContext& ctx) {
  const Index n = ctx.latent.size();
  if (n == 0) return 1.0;
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const int p = ctx.assignment.point_to_proto[static_cast<std::size_t>(i)];
    sum += (ctx.latent.vectors.row(i) - ctx.proto.prototypes.row(p)).norm();
  }
  return std::exp(-sum / static_cast<double>(n));
}

double input_completeness(const MetricContext& ctx) {
  const auto members = members_of(ctx);
  const Index k = ctx.cm.num_clusters();
  if (k < 1) throw Error(ErrorKind::NoOtherCluster, "input completeness needs at least one cluster");
  Index represented = 0;
  for (Index c = 0; c < k; ++c) {
    const auto& rows = members[static_cast<std::size_t>(c)];
    const double bound = mean_distance(ctx.cm.centroids.row(c), ctx.latent.vectors, std::span<const Index>(rows)) *
                         (1.0 - kTieTolerance);
    for (Index j = 0; j < ctx.proto.size(); ++j) {
      if ((ctx.proto.prototypes.row(j) - ctx.cm.centroids.row(c)).norm() < bound) {
        ++represented;
        break;
      }
    }
  }
  return static_cast<double>(represented) / static_cast<double>(k);
}

double cohesion_latent_space(const MetricContext& ctx) {
  const auto members = members_of(ctx);
  const Index k = ctx.cm.num_clusters();
  if (k < 2) throw Error(ErrorKind::NoOtherCluster, "cohesion needs at least two clusters");
  double sum = 0.0;
  for (Index c = 0; c < k; ++c) {
    sum += clustering::silhouette_point(ctx.cm.centroids.row(c), ctx.latent.vectors,
                                        members[static_cast<std::size_t>(c)], members, static_cast<int>(c));
  }
  const double s = sum / static_cast<double>(k);
  return ctx.flags.silhouette_rescale ? rescale_silhouette(s) : s;
}

double total_score(std::span<const double> scores) {
  if (scores.size() != kNumMetrics) {
    throw Error(ErrorKind::WrongArity, "total needs exactly nine scores, got " + std::to_string(scores.size()));
  }
  for (const double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorKind::NonFiniteValue, "score is not finite");
  }
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(kNumMetrics);
}

} // namespace protoscore::metrics
