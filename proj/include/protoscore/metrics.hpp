#pragma once

#include <span>
#include <vector>

#include "protoscore/adapter.hpp"
#include "protoscore/clustering.hpp"
#include "protoscore/types.hpp"

// Prototype quality scores. Every score is in [0, 1] with 1 best, except raw
// contrastivity which is a plain mean distance.
namespace protoscore::metrics {

inline constexpr double kDefaultCompactnessRate = 0.08;
// A prototype represents a cluster only if it is closer to the centroid than
// spread * (1 - kTieTolerance). Exact ties then stay unrepresented whatever
// the rounding after a rescale or shift.
inline constexpr double kTieTolerance = 1e-12;

struct MetricFlags {
  bool ct_normalized = false;     // divide CT by the diameter of latents and prototypes
  bool silhouette_rescale = true; // map CC and CLS from [-1, 1] to [0, 1]
};

// Everything a metric may look at. Non-owning.
struct MetricContext {
  const LatentDataset& latent;
  const PrototypeSet& proto;
  const ClusterModel& cm;
  const clustering::PrototypeAssignment& assignment;
  adapter::ModelChannel* channel = nullptr; // needed by CR, CN and CS only
  MetricFlags flags{};
};

inline double rescale_silhouette(double s) { return (s + 1.0) / 2.0; }

// --- Correctness -----------------------------------------------------------

// Fraction of points whose label equals the label of their nearest prototype.
double correctness_from_labels(std::span<const int> point_labels, std::span<const int> proto_labels,
                               std::span<const int> point_to_proto);

// Labels h(f(g(z_i))) and h(f(g(p_j))) are both obtained through the channel.
double correctness(const MetricContext& ctx);

// --- Consistency -----------------------------------------------------------

// exp(-mean distance) between each base prototype and its nearest counterpart
// in every rerun. `rerun_protos` must already live in the base latent space.
double consistency_score(const Matrix& base_protos, std::span<const Matrix> rerun_protos);

// Decodes every rerun prototype set with its own channel, re-encodes it with
// the base channel, then scores with consistency_score.
double consistency(const MetricContext& base, std::span<adapter::ModelChannel* const> rerun_channels,
                   std::span<const PrototypeSet> rerun_protos);

// --- Continuity ------------------------------------------------------------

// x + N(0, sigma^2 I) with sigma = sigma_fraction * average sample range.
Matrix add_gaussian_noise(const Matrix& samples, const NoiseConfig& noise);

// exp(-mean distance between the nearest prototypes of clean and noised latents).
double continuity_score(const Matrix& protos, const Matrix& clean_latent, const Matrix& noised_latent);

double continuity(const MetricContext& ctx, const InputDataset& data, const NoiseConfig& noise);

// --- Geometry-only metrics -------------------------------------------------

double contrastivity(const Matrix& protos);
// Contrastivity divided by the diameter of latents and prototypes together.
double contrastivity_normalized(const Matrix& protos, const Matrix& latent);
double contrastivity(const MetricContext& ctx);

double covariate_complexity(const MetricContext& ctx);

double compactness(Index num_prototypes, double rate = kDefaultCompactnessRate);

double confidence(const MetricContext& ctx);

double input_completeness(const MetricContext& ctx);

double cohesion_latent_space(const MetricContext& ctx);

// Equal-weight mean of exactly nine scores.
double total_score(std::span<const double> scores);

} // namespace protoscore::metrics
