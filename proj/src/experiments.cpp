#include "protoscore/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <numeric>

#include "protoscore/error.hpp"
#include "protoscore/random.hpp"

namespace protoscore::experiments {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kStageClustering = 1;
constexpr std::uint64_t kStageNoise = 2;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, std::string(where) + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw Error(ErrorKind::InvalidConfig, "unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::InvalidConfig, std::string("config key '") + key + "' has the wrong type");
  }
}

AdapterDescriptor descriptor_from_json(const json& j) {
  check_keys(j, {"command", "replay", "prototypes"}, "consistency adapter");
  AdapterDescriptor d;
  if (j.contains("command")) {
    const auto& c = j.at("command");
    d.command = c.is_string() ? adapter::split_command(c.get<std::string>()) : c.get<std::vector<std::string>>();
  }
  if (j.contains("replay")) d.replay_path = j.at("replay").get<std::string>();
  if (d.command.empty() == d.replay_path.empty()) {
    throw Error(ErrorKind::InvalidConfig, "consistency adapter needs exactly one of 'command' or 'replay'");
  }
  return d;
}

template <typename Fn>
auto timed(double& seconds, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  auto value = fn();
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return value;
}

template <typename Fn>
auto stage(std::string_view name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.in_context(std::string("stage ") + std::string(name));
  }
}

} // namespace

void validate(const RunConfig& cfg) {
  clustering::validate(cfg.kmeans);
  validate(cfg.noise);
  if (cfg.consistency) validate(*cfg.consistency);
  if (!(cfg.compactness_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "compactness_rate must be > 0");
}

void validate(const OutlierConfig& cfg) {
  if (!(cfg.fraction >= 0.0 && cfg.fraction <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "outlier fraction must lie in [0, 1]");
  }
  if (!(cfg.magnitude_fraction >= 0.0) || !std::isfinite(cfg.magnitude_fraction)) {
    throw Error(ErrorKind::InvalidConfig, "outlier magnitude_fraction must be >= 0");
  }
}

RunConfig run_config_from_json(const json& j) {
  check_keys(j, {"seed", "kmeans", "noise", "metric_flags", "compactness_rate", "consistency"}, "run config");
  RunConfig cfg;
  read_opt(j, "seed", cfg.seed);
  read_opt(j, "compactness_rate", cfg.compactness_rate);
  if (j.contains("kmeans")) {
    const auto& k = j.at("kmeans");
    check_keys(k, {"k_min", "k_max", "max_iters", "restarts", "tol"}, "kmeans");
    read_opt(k, "k_min", cfg.kmeans.k_min);
    read_opt(k, "k_max", cfg.kmeans.k_max);
    read_opt(k, "max_iters", cfg.kmeans.max_iters);
    read_opt(k, "restarts", cfg.kmeans.restarts);
    read_opt(k, "tol", cfg.kmeans.tol);
  }
  if (j.contains("noise")) {
    check_keys(j.at("noise"), {"sigma_fraction"}, "noise");
    read_opt(j.at("noise"), "sigma_fraction", cfg.noise.sigma_fraction);
  }
  if (j.contains("metric_flags")) {
    const auto& f = j.at("metric_flags");
    check_keys(f, {"ct_normalized", "silhouette_rescale"}, "metric_flags");
    read_opt(f, "ct_normalized", cfg.metric_flags.ct_normalized);
    read_opt(f, "silhouette_rescale", cfg.metric_flags.silhouette_rescale);
  }
  if (j.contains("consistency") && !j.at("consistency").is_null()) {
    const auto& c = j.at("consistency");
    check_keys(c, {"num_reruns", "adapters"}, "consistency");
    ConsistencyConfig cc;
    if (c.contains("adapters")) {
      for (const auto& a : c.at("adapters")) {
        cc.adapter_endpoints.push_back(descriptor_from_json(a));
        if (a.contains("prototypes")) cc.rerun_prototypes.emplace_back(a.at("prototypes").get<std::string>());
      }
    }
    cc.num_reruns = static_cast<int>(cc.adapter_endpoints.size());
    read_opt(c, "num_reruns", cc.num_reruns);
    cfg.consistency = std::move(cc);
  }
  validate(cfg);
  return cfg;
}

ordered_json to_json(const RunConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["kmeans"] = {{"k_min", cfg.kmeans.k_min},
                 {"k_max", cfg.kmeans.k_max},
                 {"max_iters", cfg.kmeans.max_iters},
                 {"restarts", cfg.kmeans.restarts},
                 {"tol", cfg.kmeans.tol}};
  j["noise"] = {{"sigma_fraction", cfg.noise.sigma_fraction}};
  j["metric_flags"] = {{"ct_normalized", cfg.metric_flags.ct_normalized},
                       {"silhouette_rescale", cfg.metric_flags.silhouette_rescale}};
  j["compactness_rate"] = cfg.compactness_rate;
  if (cfg.consistency) {
    ordered_json adapters = ordered_json::array();
    for (std::size_t i = 0; i < cfg.consistency->adapter_endpoints.size(); ++i) {
      const auto& d = cfg.consistency->adapter_endpoints[i];
      ordered_json a;
      if (d.is_replay()) {
        a["replay"] = d.replay_path.string();
      } else {
        a["command"] = d.command;
      }
      if (i < cfg.consistency->rerun_prototypes.size()) a["prototypes"] = cfg.consistency->rerun_prototypes[i].string();
      adapters.push_back(a);
    }
    j["consistency"] = {{"num_reruns", cfg.consistency->num_reruns}, {"adapters", adapters}};
  }
  return j;
}

OutlierConfig outlier_config_from_json(const json& j) {
  check_keys(j, {"fraction", "magnitude_fraction", "seed", "run"}, "outlier config");
  OutlierConfig cfg;
  read_opt(j, "fraction", cfg.fraction);
  read_opt(j, "magnitude_fraction", cfg.magnitude_fraction);
  read_opt(j, "seed", cfg.seed);
  validate(cfg);
  return cfg;
}

ordered_json to_json(const OutlierConfig& cfg) {
  return {{"fraction", cfg.fraction}, {"magnitude_fraction", cfg.magnitude_fraction}, {"seed", cfg.seed}};
}

std::string fingerprint(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
  return buf;
}

clustering::KMeansConfig kmeans_stage(const RunConfig& cfg) {
  clustering::KMeansConfig k = cfg.kmeans;
  k.seed = derive_seed(cfg.seed, kStageClustering);
  return k;
}

NoiseConfig noise_stage(const RunConfig& cfg) {
  NoiseConfig n = cfg.noise;
  n.seed = derive_seed(cfg.seed, kStageNoise);
  return n;
}

ScoreReport run_benchmark(const InputDataset& data, const PrototypeSet& proto, adapter::ModelChannel& channel,
                          const RunConfig& cfg, std::span<const Rerun> reruns, std::optional<double> val_loss,
                          BenchmarkTrace* trace) {
  stage("config", [&] {
    validate(cfg);
    validate(data);
    validate(proto, channel.latent_dim());
    if (channel.input_dim() != data.dim()) {
      throw Error(ErrorKind::DimensionMismatch, "adapter input_dim " + std::to_string(channel.input_dim()) +
                                                    " differs from dataset width " + std::to_string(data.dim()));
    }
    return 0;
  });

  BenchmarkTrace local;
  BenchmarkTrace& t = trace != nullptr ? *trace : local;

  t.latent = stage("encode", [&] {
    LatentDataset latent;
    latent.vectors = channel.encode(data.samples);
    latent.labels = data.labels;
    latent.source_ids = data.sample_ids;
    validate(latent);
    return latent;
  });
  t.cm = stage("clustering", [&] { return clustering::build_cluster_model(t.latent, kmeans_stage(cfg)); });
  t.assignment = stage("assignment", [&] { return clustering::assign_prototypes(proto, t.cm, t.latent); });

  const metrics::MetricContext ctx{t.latent, proto, t.cm, t.assignment, &channel, cfg.metric_flags};
  ScoreReport r;
  auto score = [&](Metric m, auto&& fn) {
    r[m] = stage(metric_name(m), [&] { return timed(r.clock[static_cast<std::size_t>(m)], fn); });
  };

  score(Metric::CR, [&] { return metrics::correctness(ctx); });
  score(Metric::CS, [&] {
    if (reruns.empty()) {
      const Matrix round_trip = channel.encode(channel.decode(proto.prototypes));
      return metrics::consistency_score(proto.prototypes, std::span<const Matrix>(&round_trip, 1));
    }
    std::vector<adapter::ModelChannel*> channels;
    std::vector<PrototypeSet> protos;
    for (const auto& rr : reruns) {
      channels.push_back(rr.channel);
      protos.push_back(rr.proto);
    }
    return metrics::consistency(ctx, channels, protos);
  });
  score(Metric::CN, [&] { return metrics::continuity(ctx, data, noise_stage(cfg)); });
  score(Metric::CT, [&] { return metrics::contrastivity(ctx); });
  score(Metric::CC, [&] { return metrics::covariate_complexity(ctx); });
  score(Metric::CP, [&] { return metrics::compactness(proto.size(), cfg.compactness_rate); });
  score(Metric::CF, [&] { return metrics::confidence(ctx); });
  score(Metric::IC, [&] { return metrics::input_completeness(ctx); });
  score(Metric::CLS, [&] { return metrics::cohesion_latent_space(ctx); });

  r.total = metrics::total_score(r.scores);
  r.val_loss = val_loss;
  r.config_fingerprint = fingerprint(cfg);
  r.seed = cfg.seed;
  r.cs_reruns = static_cast<int>(reruns.size());
  r.ct_normalized = cfg.metric_flags.ct_normalized;
  r.silhouette_rescaled = cfg.metric_flags.silhouette_rescale;
  return r;
}

InputDataset inject_outliers(const InputDataset& data, const OutlierConfig& cfg) {
  validate(cfg);
  const Index n = data.size();
  // The epsilon keeps products like 0.29 * 100 from flooring to 28.
  const auto count = static_cast<Index>(std::floor(cfg.fraction * static_cast<double>(n) + 1e-9));
  if (cfg.fraction > 0.0 && count < 1) {
    throw Error(ErrorKind::InvalidConfig, "outlier fraction selects no sample of " + std::to_string(n));
  }
  InputDataset out = data;
  if (out.modified.empty()) out.modified.assign(static_cast<std::size_t>(n), 0);
  if (count == 0) return out;

  Rng rng(cfg.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = 0; i < count; ++i) {
    const auto span = static_cast<std::uint64_t>(n - i);
    const auto j = i + static_cast<Index>(rng() % span);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<Index> picked(order.begin(), order.begin() + count);
  std::sort(picked.begin(), picked.end());

  const double sigma = cfg.magnitude_fraction * average_sample_range(data.samples);
  for (const Index row : picked) {
    for (Index c = 0; c < out.dim(); ++c) out.samples(row, c) += sigma * gaussian(rng);
    out.modified[static_cast<std::size_t>(row)] = 1;
  }
  return out;
}

double run_consistency_campaign(const InputDataset& data, const PrototypeSet& proto,
                                adapter::ModelChannel& channel, std::span<const Rerun> reruns,
                                const RunConfig& cfg) {
  validate(cfg);
  validate(proto, channel.latent_dim());
  if (channel.input_dim() != data.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "adapter input_dim differs from dataset width");
  }
  if (reruns.empty()) throw Error(ErrorKind::PrototypeCountMismatch, "consistency campaign needs at least one rerun");
  std::vector<Matrix> reencoded;
  for (const auto& rr : reruns) {
    if (rr.channel == nullptr) throw Error(ErrorKind::ChannelRequired, "rerun model channel is missing");
    reencoded.push_back(channel.encode(rr.channel->decode(rr.proto.prototypes)));
  }
  return metrics::consistency_score(proto.prototypes, reencoded);
}

OutlierStudy run_outlier_study(const InputDataset& data, const PrototypeSet& proto, adapter::ModelChannel& channel,
                               const RunConfig& run_cfg, const OutlierConfig& outlier_cfg,
                               std::span<const Rerun> reruns) {
  OutlierStudy study;
  study.mixed_data = inject_outliers(data, outlier_cfg);
  study.clean = run_benchmark(data, proto, channel, run_cfg, reruns);
  study.clean.label = "clean";
  study.mixed = run_benchmark(study.mixed_data, proto, channel, run_cfg, reruns);
  study.mixed.label = "mixed";
  for (std::size_t i = 0; i < kNumMetrics; ++i) study.delta[i] = study.mixed.scores[i] - study.clean.scores[i];
  return study;
}

} // namespace protoscore::experiments
