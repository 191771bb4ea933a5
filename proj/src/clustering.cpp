#include "protoscore/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "protoscore/distance.hpp"
#include "protoscore/error.hpp"
#include "protoscore/random.hpp"

namespace protoscore::clustering {

namespace {

// Full distance matrices above this many points are not cached.
constexpr Index kMaxCachedPoints = 4096;

constexpr std::uint64_t kStageKMeans = 0x6b6d65616e73ULL;
constexpr std::uint64_t kStageClass = 0x636c617373ULL;

// Mean silhouette from per-point distance rows supplied by `row_of(i, out)`.
template <typename RowFn>
double mean_silhouette_rows(Index n, const Labels& assignments, int num_clusters, RowFn&& row_of) {
  if (num_clusters < 2) throw Error(ErrorKind::NoOtherCluster, "silhouette needs at least two clusters");
  std::vector<Index> counts(static_cast<std::size_t>(num_clusters), 0);
  for (const int a : assignments) ++counts[static_cast<std::size_t>(a)];

  std::vector<double> sums(static_cast<std::size_t>(num_clusters));
  Vector dist(n);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    row_of(i, dist);
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Index j = 0; j < n; ++j) {
      if (j != i) sums[static_cast<std::size_t>(assignments[static_cast<std::size_t>(j)])] += dist(j);
    }
    const auto own = static_cast<std::size_t>(assignments[static_cast<std::size_t>(i)]);
    const double a = counts[own] > 1 ? sums[own] / static_cast<double>(counts[own] - 1) : 0.0;
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c) {
      if (c != own && counts[c] > 0) b = std::min(b, sums[c] / static_cast<double>(counts[c]));
    }
    if (!std::isfinite(b)) throw Error(ErrorKind::NoOtherCluster, "all other clusters are empty");
    total += silhouette_value(a, b);
  }
  return total / static_cast<double>(n);
}

double mean_silhouette_cached(const Matrix& dist, const Labels& assignments, int num_clusters) {
  return mean_silhouette_rows(dist.rows(), assignments, num_clusters,
                              [&](Index i, Vector& out) { out = dist.row(i); });
}

double mean_silhouette_direct(const Matrix& points, const Labels& assignments, int num_clusters) {
  return mean_silhouette_rows(points.rows(), assignments, num_clusters, [&](Index i, Vector& out) {
    for (Index j = 0; j < points.rows(); ++j) out(j) = (points.row(i) - points.row(j)).norm();
  });
}

// Root mean squared distance to the overall mean; translation invariant.
double spread(const Matrix& points) {
  if (points.rows() == 0) return 0.0;
  const Vector mean = points.colwise().mean();
  return std::sqrt((points.rowwise() - mean).rowwise().squaredNorm().mean());
}

Matrix kmeanspp_seed(const Matrix& points, int k, Rng& rng) {
  const Index n = points.rows();
  Matrix centers(k, points.cols());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);

  Index first = static_cast<Index>(uniform01(rng) * static_cast<double>(n));
  first = std::min(first, n - 1);
  centers.row(0) = points.row(first);
  chosen[static_cast<std::size_t>(first)] = 1;

  Eigen::VectorXd d2 = (points.rowwise() - points.row(first)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index pick = -1;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc > target && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {
        // Rounding pushed target past the last positive weight.
        for (Index i = n - 1; i >= 0 && pick < 0; --i) {
          if (d2(i) > 0.0) pick = i;
        }
      }
    } else {
      // Every remaining point coincides with a center; take the next unused row.
      for (Index i = 0; i < n && pick < 0; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) pick = i;
      }
    }
    centers.row(c) = points.row(pick);
    chosen[static_cast<std::size_t>(pick)] = 1;
    d2 = d2.cwiseMin((points.rowwise() - points.row(pick)).rowwise().squaredNorm().eval());
  }
  return centers;
}

void assign_nearest(const Matrix& points, const Matrix& centers, Labels& assignments,
                    Eigen::VectorXd& dist) {
  for (Index i = 0; i < points.rows(); ++i) {
    const auto [best, d] = nearest_row(points.row(i), centers);
    assignments[static_cast<std::size_t>(i)] = static_cast<int>(best);
    dist(i) = d;
  }
}

// Moves the point farthest from its centroid into each empty cluster.
void repair_empty(const Matrix& points, Matrix& centers, Labels& assignments, Eigen::VectorXd& dist) {
  const int k = static_cast<int>(centers.rows());
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (const int a : assignments) ++counts[static_cast<std::size_t>(a)];
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    Index far = -1;
    double far_d = -1.0;
    for (Index i = 0; i < points.rows(); ++i) {
      const auto owner = static_cast<std::size_t>(assignments[static_cast<std::size_t>(i)]);
      if (counts[owner] > 1 && dist(i) > far_d) {
        far_d = dist(i);
        far = i;
      }
    }
    const auto old = static_cast<std::size_t>(assignments[static_cast<std::size_t>(far)]);
    --counts[old];
    assignments[static_cast<std::size_t>(far)] = c;
    counts[static_cast<std::size_t>(c)] = 1;
    dist(far) = 0.0;
    centers.row(c) = points.row(far);
  }
}

Matrix cluster_means(const Matrix& points, const Labels& assignments, int k) {
  Matrix sums = Matrix::Zero(k, points.cols());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  for (Index i = 0; i < points.rows(); ++i) {
    const int c = assignments[static_cast<std::size_t>(i)];
    sums.row(c) += points.row(i);
    counts(c) += 1.0;
  }
  for (int c = 0; c < k; ++c) sums.row(c) /= counts(c);
  return sums;
}

KMeansResult lloyd(const Matrix& points, int k, const KMeansConfig& cfg, Rng& rng, double scale) {
  KMeansResult r;
  Matrix centers = kmeanspp_seed(points, k, rng);
  Labels assignments(static_cast<std::size_t>(points.rows()), -1);
  Labels previous;
  Eigen::VectorXd dist(points.rows());

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    previous = assignments;
    assign_nearest(points, centers, assignments, dist);
    repair_empty(points, centers, assignments, dist);
    Matrix updated = cluster_means(points, assignments, k);
    const double shift = (updated - centers).rowwise().norm().maxCoeff();
    centers = std::move(updated);
    if (assignments == previous || shift <= cfg.tol * scale) {
      ++it;
      break;
    }
  }
  r.iterations = it;
  r.assignments = std::move(assignments);
  r.centroids = std::move(centers);
  double wcss = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    wcss += (points.row(i) - r.centroids.row(r.assignments[static_cast<std::size_t>(i)])).squaredNorm();
  }
  r.wcss = wcss;
  return r;
}

} // namespace

void validate(const KMeansConfig& cfg) {
  if (cfg.k_min < 2 || cfg.k_max < cfg.k_min) {
    throw Error(ErrorKind::InvalidConfig, "k range must satisfy 2 <= k_min <= k_max");
  }
  if (cfg.restarts < 1) throw Error(ErrorKind::InvalidConfig, "restarts must be >= 1");
  if (cfg.max_iters < 1) throw Error(ErrorKind::InvalidConfig, "max_iters must be >= 1");
  if (!(cfg.tol >= 0.0)) throw Error(ErrorKind::InvalidConfig, "tol must be >= 0");
}

double silhouette_value(double own_mean, double nearest_mean) {
  const double denom = std::max(own_mean, nearest_mean);
  if (denom == 0.0) return 0.0;
  return (nearest_mean - own_mean) / denom;
}

double silhouette_point(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Matrix>& own_peers,
                        std::span<const Matrix> other_clusters) {
  double a = 0.0;
  if (own_peers.rows() > 0) a = (own_peers.rowwise() - z).rowwise().norm().mean();
  double b = std::numeric_limits<double>::infinity();
  for (const auto& other : other_clusters) {
    if (other.rows() == 0) continue;
    b = std::min(b, (other.rowwise() - z).rowwise().norm().mean());
  }
  if (!std::isfinite(b)) throw Error(ErrorKind::NoOtherCluster, "silhouette needs another non-empty cluster");
  return silhouette_value(a, b);
}

double silhouette_point(const Eigen::Ref<const Vector>& z, const Matrix& points,
                        std::span<const Index> own_rows, std::span<const std::vector<Index>> clusters,
                        int own_cluster, Index exclude) {
  double a_sum = 0.0;
  Index a_count = 0;
  for (const Index r : own_rows) {
    if (r == exclude) continue;
    a_sum += (z - points.row(r)).norm();
    ++a_count;
  }
  const double a = a_count > 0 ? a_sum / static_cast<double>(a_count) : 0.0;
  double b = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (static_cast<int>(c) == own_cluster || clusters[c].empty()) continue;
    b = std::min(b, mean_distance(z, points, std::span<const Index>(clusters[c])));
  }
  if (!std::isfinite(b)) throw Error(ErrorKind::NoOtherCluster, "silhouette needs another non-empty cluster");
  return silhouette_value(a, b);
}

std::vector<std::vector<Index>> cluster_members(const Labels& assignments, int num_clusters) {
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(num_clusters));
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    members[static_cast<std::size_t>(assignments[i])].push_back(static_cast<Index>(i));
  }
  return members;
}

double mean_silhouette(const Matrix& points, const Labels& assignments, int num_clusters) {
  if (points.rows() == 0) return 0.0;
  return mean_silhouette_direct(points, assignments, num_clusters);
}

KMeansResult kmeans(const Matrix& points, int k, const KMeansConfig& cfg) {
  if (k < 1) throw Error(ErrorKind::InvalidConfig, "k must be >= 1");
  if (points.rows() < k) {
    throw Error(ErrorKind::TooFewPoints, std::to_string(points.rows()) + " points cannot form " +
                                             std::to_string(k) + " clusters");
  }
  if (cfg.restarts < 1) throw Error(ErrorKind::InvalidConfig, "restarts must be >= 1");
  const double scale = spread(points);
  KMeansResult best;
  for (int r = 0; r < cfg.restarts; ++r) {
    Rng rng(derive_seed(cfg.seed, kStageKMeans, (static_cast<std::uint64_t>(k) << 32) | static_cast<std::uint64_t>(r)));
    KMeansResult run = lloyd(points, k, cfg, rng, scale);
    if (r == 0 || run.wcss < best.wcss) best = std::move(run);
  }
  return best;
}

KSelection select_k(const Matrix& points, const KMeansConfig& cfg) {
  validate(cfg);
  const Index n = points.rows();
  if (n < cfg.k_min + 1) {
    throw Error(ErrorKind::TooFewPoints, std::to_string(n) + " points, k search needs at least " +
                                             std::to_string(cfg.k_min + 1));
  }
  const int k_hi = static_cast<int>(std::min<Index>(cfg.k_max, n - 1));

  Matrix dist;
  const bool cached = n <= kMaxCachedPoints;
  if (cached) dist = pairwise_distances(points);

  KSelection sel;
  for (int k = cfg.k_min; k <= k_hi; ++k) {
    KMeansResult run = kmeans(points, k, cfg);
    const double s = cached ? mean_silhouette_cached(dist, run.assignments, k)
                            : mean_silhouette_direct(points, run.assignments, k);
    sel.sweep.emplace_back(k, s);
    if (sel.k == 0 || s > sel.mean_silhouette) {
      sel.k = k;
      sel.mean_silhouette = s;
      sel.assignments = std::move(run.assignments);
      sel.centroids = std::move(run.centroids);
    }
  }
  return sel;
}

ClusterModel build_cluster_model(const LatentDataset& latent, const KMeansConfig& cfg) {
  validate(cfg);
  validate(latent);
  ClusterModel cm;
  cm.assignments.assign(static_cast<std::size_t>(latent.size()), -1);
  std::vector<Vector> centroid_rows;

  for (const int label : distinct_labels(latent.labels)) {
    std::vector<Index> rows;
    for (std::size_t i = 0; i < latent.labels.size(); ++i) {
      if (latent.labels[i] == label) rows.push_back(static_cast<Index>(i));
    }
    if (static_cast<int>(rows.size()) < cfg.k_min + 1) {
      throw Error(ErrorKind::ClassTooSmall, "class " + std::to_string(label) + " has " +
                                                std::to_string(rows.size()) + " points, needs " +
                                                std::to_string(cfg.k_min + 1));
    }
    const Matrix points = latent.vectors(rows, Eigen::all);
    KMeansConfig class_cfg = cfg;
    class_cfg.seed = derive_seed(cfg.seed, kStageClass, static_cast<std::uint64_t>(label));
    const KSelection sel = select_k(points, class_cfg);

    const int offset = static_cast<int>(centroid_rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
      cm.assignments[static_cast<std::size_t>(rows[j])] = offset + sel.assignments[j];
    }
    for (int c = 0; c < sel.k; ++c) {
      centroid_rows.push_back(sel.centroids.row(c));
      cm.cluster_class.push_back(label);
    }
    cm.per_class_k[label] = sel.k;
    cm.per_class_silhouette[label] = sel.mean_silhouette;
  }

  cm.centroids.resize(static_cast<Index>(centroid_rows.size()), latent.dim());
  for (std::size_t c = 0; c < centroid_rows.size(); ++c) cm.centroids.row(static_cast<Index>(c)) = centroid_rows[c];
  cm.mean_silhouette = mean_silhouette(latent.vectors, cm.assignments, static_cast<int>(cm.num_clusters()));
  return cm;
}

PrototypeAssignment assign_prototypes(const PrototypeSet& proto, const ClusterModel& cm,
                                      const LatentDataset& latent) {
  validate(proto, latent.dim());
  if (cm.centroids.cols() != latent.dim()) {
    throw Error(ErrorKind::ShapeMismatch, "cluster model and latent space dimensions differ");
  }
  PrototypeAssignment out;
  out.point_to_proto = nearest_rows(latent.vectors, proto.prototypes);
  out.proto_to_cluster = nearest_rows(proto.prototypes, cm.centroids);
  return out;
}

} // namespace protoscore::clustering
