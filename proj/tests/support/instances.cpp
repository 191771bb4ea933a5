#include "instances.hpp"

#include <algorithm>

#include "oracles.hpp"
#include "protoscore/random.hpp"
#include "protoscore/synthetic.hpp"

namespace protoscore::testing {

namespace fs = std::filesystem;
using adapter::ModelChannel;

namespace {

ModelChannel replay_channel(const fs::path& file) {
  return ModelChannel::handshake(std::make_unique<adapter::ReplayTransport>(file), adapter::TransportKind::replay);
}

ModelChannel recording_channel(const ToyModel& model) {
  adapter::ChannelOptions options;
  options.record = true;
  return loopback_channel(model, options);
}

template <typename Rows>
void shuffle_rows(Rows& m, Rng& rng) {
  for (Index i = m.rows() - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    m.row(i).swap(m.row(j));
  }
}

// Gaussian blobs per class; returns latent rows and labels.
void blobs(Rng& rng, Index dim, int classes, int max_blobs, int min_pts, int max_pts, Matrix& z, Labels& labels) {
  std::vector<Vector> rows;
  labels.clear();
  for (int c = 0; c < classes; ++c) {
    const int nb = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_blobs));
    for (int b = 0; b < nb; ++b) {
      Vector center(dim);
      for (Index k = 0; k < dim; ++k) center(k) = uniform(rng, -4.0, 4.0);
      const double sigma = uniform(rng, 0.2, 1.5);
      const int count = min_pts + static_cast<int>(rng() % static_cast<std::uint64_t>(max_pts - min_pts + 1));
      for (int p = 0; p < count; ++p) {
        Vector v(dim);
        for (Index k = 0; k < dim; ++k) v(k) = center(k) + sigma * gaussian(rng);
        rows.push_back(v);
        labels.push_back(c);
      }
    }
  }
  z.resize(static_cast<Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) z.row(static_cast<Index>(i)) = rows[i];
}

std::vector<std::string> decimal_ids(Index n) {
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

struct LibraryRun {
  LatentDataset latent;
  ClusterModel cm;
  clustering::PrototypeAssignment assignment;
  std::vector<std::pair<std::string, double>> scores;
};

LibraryRun library_scores(const OracleInstance& inst, ModelChannel& base, ModelChannel& rerun) {
  LibraryRun run;
  run.latent.vectors = base.encode(inst.data.samples);
  run.latent.labels = inst.data.labels;
  run.latent.source_ids = inst.data.sample_ids;
  run.cm = clustering::build_cluster_model(run.latent, inst.kmeans);
  run.assignment = clustering::assign_prototypes(inst.proto, run.cm, run.latent);
  const metrics::MetricContext ctx{run.latent, inst.proto, run.cm, run.assignment, &base, {}};
  ModelChannel* reruns[] = {&rerun};
  const PrototypeSet rerun_protos[] = {inst.rerun_proto};
  run.scores = {
      {"CR", metrics::correctness(ctx)},
      {"CS", metrics::consistency(ctx, reruns, rerun_protos)},
      {"CN", metrics::continuity(ctx, inst.data, inst.noise)},
      {"CT", metrics::contrastivity(ctx)},
      {"CC", metrics::covariate_complexity(ctx)},
      {"CF", metrics::confidence(ctx)},
      {"IC", metrics::input_completeness(ctx)},
      {"CLS", metrics::cohesion_latent_space(ctx)},
  };
  return run;
}

} // namespace

ModelChannel record_then_replay(const ToyModel& model, const fs::path& replay_file,
                                const std::function<void(ModelChannel&)>& body) {
  {
    auto live = recording_channel(model);
    body(live);
    adapter::save_replay(live.transcript(), replay_file);
  }
  return replay_channel(replay_file);
}

OracleInstance make_oracle_instance(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x0AC1E));
  OracleInstance inst;
  const Index n = 1 + static_cast<Index>(rng() % 8);
  const Index d = n + static_cast<Index>(rng() % 3);
  const Index m = 2 + static_cast<Index>(rng() % 5);
  inst.base = make_toy_model(d, n, m, 2, rng());
  inst.base.weights.resize(2, n);
  inst.base.bias.resize(2);
  for (Index r = 0; r < 2; ++r) {
    for (Index c = 0; c < n; ++c) inst.base.weights(r, c) = gaussian(rng);
    inst.base.bias(r) = gaussian(rng);
  }
  inst.rerun = inst.base;
  inst.rerun.offset.resize(n);
  for (Index c = 0; c < n; ++c) inst.rerun.offset(c) = uniform(rng, -1.0, 1.0);

  Matrix z;
  Labels labels;
  blobs(rng, n, 2, 2, 3, 12, z, labels);
  inst.data.samples = z * inst.base.projection;
  inst.data.labels = labels;
  inst.data.sample_ids = decimal_ids(z.rows());

  inst.proto.prototypes = inst.base.prototypes;
  inst.rerun_proto.prototypes = inst.base.prototypes;
  for (Index j = 0; j < m; ++j) {
    for (Index c = 0; c < n; ++c) inst.rerun_proto.prototypes(j, c) += inst.rerun.offset(c) + 0.3 * gaussian(rng);
  }
  shuffle_rows(inst.rerun_proto.prototypes, rng);
  inst.rerun.prototypes = inst.rerun_proto.prototypes;

  inst.noise.sigma_fraction = uniform(rng, 0.0, 0.3);
  inst.noise.seed = rng();
  inst.kmeans.k_max = 2;
  inst.kmeans.restarts = 4;
  inst.kmeans.seed = rng();
  return inst;
}

std::vector<Comparison> compare_with_oracles(const OracleInstance& inst, const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path base_file = dir / "base.jsonl";
  const fs::path rerun_file = dir / "rerun.jsonl";
  {
    auto base = recording_channel(inst.base);
    auto rerun = recording_channel(inst.rerun);
    library_scores(inst, base, rerun);
    adapter::save_replay(base.transcript(), base_file);
    adapter::save_replay(rerun.transcript(), rerun_file);
  }
  auto base = replay_channel(base_file);
  auto rerun = replay_channel(rerun_file);
  const LibraryRun run = library_scores(inst, base, rerun);

  const ToyModel& f = inst.base;
  const Matrix& p = inst.proto.prototypes;
  const Matrix z = f.encode(inst.data.samples);
  const Labels point_labels = f.classify(f.encode(f.decode(z)));
  const Labels proto_labels = f.classify(f.encode(f.decode(p)));
  const Matrix reencoded = f.encode(inst.rerun.decode(inst.rerun_proto.prototypes));
  const Matrix noised = f.encode(metrics::add_gaussian_noise(inst.data.samples, inst.noise));
  const Labels& assign = run.cm.assignments;
  const int k = static_cast<int>(run.cm.num_clusters());

  const std::vector<double> expected = {
      oracle::correctness(point_labels, proto_labels, z, p),
      oracle::consistency(p, {reencoded}),
      oracle::continuity(p, z, noised),
      oracle::contrastivity(p),
      oracle::covariate_complexity(p, z, assign, k),
      oracle::confidence(p, z),
      oracle::input_completeness(p, z, assign, k),
      oracle::cohesion(z, assign, k),
  };
  std::vector<Comparison> out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    out.push_back({run.scores[i].first, run.scores[i].second, expected[i]});
  }
  return out;
}

PartitionInstance make_partition_instance(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x5111));
  PartitionInstance inst;
  const Index n = 2 + static_cast<Index>(rng() % 59);
  inst.k = 2 + static_cast<int>(rng() % 4);
  if (inst.k > n) inst.k = static_cast<int>(n);
  const Index dim = 1 + static_cast<Index>(rng() % 8);
  // Coarse integer grids produce duplicate points and distance ties.
  const bool coarse = rng() % 4 == 0;
  inst.points.resize(n, dim);
  inst.assignments.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int c = i < inst.k ? static_cast<int>(i) : static_cast<int>(rng() % static_cast<std::uint64_t>(inst.k));
    inst.assignments[static_cast<std::size_t>(i)] = c;
    for (Index j = 0; j < dim; ++j) {
      const double v = 2.0 * c + gaussian(rng);
      inst.points(i, j) = coarse ? std::round(v) : v;
    }
  }
  return inst;
}

GeometryInstance make_geometry_instance(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x6E0));
  GeometryInstance g;
  const Index dim = 1 + static_cast<Index>(rng() % 8);
  const bool one_class = rng() % 2 == 0;
  clustering::KMeansConfig km;
  km.seed = rng();
  km.restarts = 4;
  Matrix z;
  Labels labels;
  if (one_class) {
    blobs(rng, dim, 1, 5, 3, 12, z, labels);
    km.k_max = 5;
  } else {
    blobs(rng, dim, 2, 2, 3, 12, z, labels);
    km.k_max = 2;
  }
  g.latent.vectors = z;
  g.latent.labels = labels;
  g.latent.source_ids = decimal_ids(z.rows());
  const Index m = 2 + static_cast<Index>(rng() % 5);
  g.proto.prototypes.resize(m, dim);
  for (Index j = 0; j < m; ++j) {
    // Half the prototypes sit on data points so IC is not always 0.
    if (j % 2 == 0) {
      g.proto.prototypes.row(j) = z.row(static_cast<Index>(rng() % static_cast<std::uint64_t>(z.rows())));
    } else {
      for (Index c = 0; c < dim; ++c) g.proto.prototypes(j, c) = uniform(rng, -4.0, 4.0);
    }
  }
  g.cm = clustering::build_cluster_model(g.latent, km);
  g.assignment = clustering::assign_prototypes(g.proto, g.cm, g.latent);
  return g;
}

GeometryInstance transform(const GeometryInstance& g, double scale, const Vector& shift) {
  GeometryInstance out = g;
  auto apply = [&](Matrix& m) {
    m *= scale;
    m.rowwise() += shift;
  };
  apply(out.latent.vectors);
  apply(out.proto.prototypes);
  apply(out.cm.centroids);
  return out;
}

PlantedSetup make_planted_setup(std::uint64_t seed) {
  synthetic::PlantedLatentConfig cfg;
  cfg.seed = seed;
  const auto planted = synthetic::generate_planted_latent(cfg);
  PlantedSetup s;
  s.data = synthetic::as_input_dataset(planted.latent);
  s.proto = planted.proto;
  s.model = identity_model(cfg.latent_dim, planted.proto, cfg.num_classes);
  s.truth = planted.truth;
  return s;
}

experiments::RunConfig planted_run_config(std::uint64_t seed) {
  experiments::RunConfig cfg;
  cfg.seed = seed;
  return cfg;
}

} // namespace protoscore::testing
