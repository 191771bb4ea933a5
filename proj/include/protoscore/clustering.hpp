#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "protoscore/types.hpp"

namespace protoscore::clustering {

struct KMeansConfig {
  int k_min = 2;
  int k_max = 15;
  int max_iters = 300;
  int restarts = 8;
  double tol = 1e-6; // centroid movement relative to the spread of the points
  std::uint64_t seed = 0;
};

void validate(const KMeansConfig& cfg);

/// Silhouette value from the mean own-cluster distance and the mean distance
/// to the nearest other cluster. Both zero gives 0.
double silhouette_value(double own_mean, double nearest_mean);

/// Silhouette of z given its peers (z itself excluded) and every other
/// cluster. An empty peer set counts as own-distance 0.
///
/// Throws NoOtherCluster when `other_clusters` is empty or all of its sets
/// are empty.
double silhouette_point(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Matrix>& own_peers,
                        std::span<const Matrix> other_clusters);

/// Same as silhouette_point with clusters given as row index lists into
/// `points`. `exclude` (if >= 0) is dropped from the own cluster.
double silhouette_point(const Eigen::Ref<const Vector>& z, const Matrix& points,
                        std::span<const Index> own_rows, std::span<const std::vector<Index>> clusters,
                        int own_cluster, Index exclude = -1);

/// Row index lists per cluster, ascending.
std::vector<std::vector<Index>> cluster_members(const Labels& assignments, int num_clusters);

/// Mean silhouette over all points of a partition with at least two clusters.
double mean_silhouette(const Matrix& points, const Labels& assignments, int num_clusters);

struct KMeansResult {
  Labels assignments;
  Matrix centroids;
  double wcss = 0.0;
  int iterations = 0;
};

/// Lloyd's algorithm from k-means++ seeding, best of `cfg.restarts` runs by
/// within-cluster sum of squares. Every cluster ends non-empty and every
/// centroid is the mean of its points.
KMeansResult kmeans(const Matrix& points, int k, const KMeansConfig& cfg);

struct KSelection {
  int k = 0;
  Labels assignments;
  Matrix centroids;
  double mean_silhouette = 0.0;
  std::vector<std::pair<int, double>> sweep; // (k, mean silhouette) for every tested k
};

/// Tries k in [k_min, min(k_max, N-1)] and keeps the k with the largest mean
/// silhouette; ties go to the smaller k.
KSelection select_k(const Matrix& points, const KMeansConfig& cfg);

/// Splits the latent points by ground-truth label, runs select_k per class
/// and concatenates the clusters (classes in ascending label order).
ClusterModel build_cluster_model(const LatentDataset& latent, const KMeansConfig& cfg);

struct PrototypeAssignment {
  std::vector<int> point_to_proto;   // nearest prototype per latent point
  std::vector<int> proto_to_cluster; // nearest centroid per prototype
};

PrototypeAssignment assign_prototypes(const PrototypeSet& proto, const ClusterModel& cm,
                                      const LatentDataset& latent);

} // namespace protoscore::clustering
