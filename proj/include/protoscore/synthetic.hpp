#pragma once

#include <cstdint>
#include <vector>

#include "protoscore/types.hpp"

namespace protoscore::synthetic {

// Two-class noisy sawtooth/sine series.
struct SawsineConfig {
  Index num_samples = 8000;
  Index series_length = 100;
  double noise_amp_max = 1.1;
  std::uint64_t seed = 0;
};

// Base shapes: 0 rising sawtooth, 1 falling sawtooth (class 0);
// 2 sine, 3 quarter-period shifted sine (class 1).
inline constexpr int kNumBaseShapes = 4;
inline constexpr int kSawsinePeriods = 4;

struct SawsineDataset {
  InputDataset data;
  std::vector<int> base_shape; // per sample
};

void validate(const SawsineConfig& cfg);

Vector base_shape(int shape, Index length);

// Each sample is base * (1 + m(t)) + a(t) with m, a ~ U[-A, A] per time step
// and an independent amplitude A ~ U[0, noise_amp_max] per sample and term.
SawsineDataset generate_sawsine(const SawsineConfig& cfg);

struct PlantedLatentConfig {
  int num_classes = 2;
  int clusters_per_class = 2;
  Index points_per_cluster = 100;
  double cluster_sigma = 0.02;
  double separation = 0.2;
  Index latent_dim = 2;
  std::uint64_t seed = 0;

  bool well_separated() const { return separation > 4.0 * cluster_sigma; }
};

struct PlantedLatent {
  LatentDataset latent;
  PrototypeSet proto; // one prototype at every blob center
  ClusterModel truth; // blob membership, centroids are the empirical means
  Matrix centers;
};

void validate(const PlantedLatentConfig& cfg);

// Blob centers sit on a grid with spacing `separation`, so any two centers
// are at least that far apart. Cluster c belongs to class c / clusters_per_class.
PlantedLatent generate_planted_latent(const PlantedLatentConfig& cfg);

// The latent points as an input dataset, for identity-model runs.
InputDataset as_input_dataset(const LatentDataset& latent);

} // namespace protoscore::synthetic
