// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
// Channel-dependent checks run against replayed toy-adapter transcripts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "instances.hpp"
#include "oracles.hpp"
#include "protoscore/clustering.hpp"
#include "protoscore/experiments.hpp"
#include "protoscore/metrics.hpp"
#include "protoscore/random.hpp"
#include "protoscore/report.hpp"
#include "protoscore/synthetic.hpp"

using namespace protoscore;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Tolerances, pinned.
constexpr double kCompactnessTol = 0.0005;
constexpr double kTotalTol = 0.005;
constexpr double kExact = 1e-9;
constexpr double kOutlierSlack = 0.01;

Outcome compactness_exactness() {
  const double c4 = metrics::compactness(4);
  const double c10 = metrics::compactness(10);
  const bool ok = std::abs(c4 - 0.7866) <= kCompactnessTol && c10 >= 0.48 && c10 <= 0.50;
  return {ok, fmt("compactness(4) = %.6f, compactness(10) = %.6f", c4, c10)};
}

Outcome total_reproduction() {
  const double map[9] = {0.69, 0.28, 0.98, 0.43, 0.68, 0.79, 0.67, 0.67, 0.63};
  const double msp[9] = {1.00, 0.37, 1.00, 0.49, 0.50, 0.79, 0.55, 0.00, 0.60};
  const double a = metrics::total_score(map);
  const double b = metrics::total_score(msp);
  return {std::abs(a - 0.65) <= kTotalTol && std::abs(b - 0.59) <= kTotalTol,
          fmt("MAP total = %.4f, MSP total = %.4f", a, b)};
}

Outcome ic_fraction() {
  // Six tight clusters along a line, prototypes at four of them.
  LatentDataset latent;
  latent.vectors.resize(18, 2);
  ClusterModel cm;
  for (int c = 0; c < 6; ++c) {
    for (int p = 0; p < 3; ++p) {
      latent.vectors.row(3 * c + p) << 10.0 * c + (p - 1) * 0.5, (p == 1 ? 0.3 : 0.0);
      latent.labels.push_back(c / 3);
      latent.source_ids.push_back(std::to_string(3 * c + p));
      cm.assignments.push_back(c);
    }
    cm.cluster_class.push_back(c / 3);
  }
  cm.centroids = oracle::centroids(latent.vectors, cm.assignments, 6);
  cm.per_class_k = {{0, 3}, {1, 3}};
  PrototypeSet proto;
  proto.prototypes.resize(4, 2);
  proto.prototypes << 0, 0.1, 10, 0.1, 30, 0.1, 50, 0.1;
  const auto assignment = clustering::assign_prototypes(proto, cm, latent);
  const double ic = metrics::input_completeness({latent, proto, cm, assignment, nullptr, {}});
  return {std::abs(ic - 4.0 / 6.0) <= kExact && std::abs(ic - 0.6667) <= 1e-4, fmt("IC = %.10f", ic)};
}

Outcome silhouette_oracle() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto inst = testing::make_partition_instance(seed);
    const auto members = clustering::cluster_members(inst.assignments, inst.k);
    for (Index i = 0; i < inst.points.rows(); ++i) {
      const int own = inst.assignments[static_cast<std::size_t>(i)];
      const double lib = clustering::silhouette_point(inst.points.row(i), inst.points,
                                                      members[static_cast<std::size_t>(own)], members, own, i);
      worst = std::max(worst, std::abs(lib - oracle::silhouette(inst.points, i, inst.points, inst.assignments, own, i)));
    }
    LatentDataset latent;
    latent.vectors = inst.points;
    latent.labels.assign(inst.assignments.size(), 0);
    for (Index i = 0; i < inst.points.rows(); ++i) latent.source_ids.push_back(std::to_string(i));
    ClusterModel cm;
    cm.assignments = inst.assignments;
    cm.centroids = oracle::centroids(inst.points, inst.assignments, inst.k);
    cm.cluster_class.assign(static_cast<std::size_t>(inst.k), 0);
    cm.per_class_k = {{0, inst.k}};
    PrototypeSet proto;
    proto.prototypes = cm.centroids;
    const auto assignment = clustering::assign_prototypes(proto, cm, latent);
    for (bool rescale : {true, false}) {
      const double lib = metrics::cohesion_latent_space({latent, proto, cm, assignment, nullptr, {false, rescale}});
      worst = std::max(worst, std::abs(lib - oracle::cohesion(inst.points, inst.assignments, inst.k, rescale)));
    }
  }
  return {worst <= kExact, fmt("200 instances, max |library - oracle| = %.3g", worst)};
}

Outcome metric_oracles() {
  double worst = 0.0;
  std::string worst_metric = "-";
  std::size_t checks = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto inst = testing::make_oracle_instance(seed);
    const auto dir = testing::scratch_dir("acceptance_oracle_" + std::to_string(seed));
    for (const auto& c : testing::compare_with_oracles(inst, dir)) {
      ++checks;
      const double err = std::abs(c.library - c.oracle);
      if (!(err <= worst)) {
        worst = err;
        worst_metric = c.metric;
      }
    }
  }
  return {worst <= kExact,
          fmt("100 instances, %.0f comparisons, max error %.3g", static_cast<double>(checks), worst) + " (" +
              worst_metric + ")"};
}

Outcome invariance() {
  int failures = 0;
  std::string first;
  auto expect = [&](bool ok, const char* what, std::uint64_t seed) {
    if (ok) return;
    if (failures++ == 0) first = std::string(what) + " at seed " + std::to_string(seed);
  };
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto g = testing::make_geometry_instance(seed);
    const auto moved = testing::transform(g, 1.0, Vector::LinSpaced(g.latent.dim(), -7.5, 12.25));
    const double scale = 1.5 + static_cast<double>(seed % 5);
    const auto scaled = testing::transform(g, scale, Vector::Zero(g.latent.dim()));
    for (bool rescale : {true, false}) {
      const metrics::MetricFlags flags{false, rescale};
      const metrics::MetricContext a{g.latent, g.proto, g.cm, g.assignment, nullptr, flags};
      const metrics::MetricContext b{moved.latent, moved.proto, moved.cm, moved.assignment, nullptr, flags};
      const metrics::MetricContext c{scaled.latent, scaled.proto, scaled.cm, scaled.assignment, nullptr, flags};
      const double ct = metrics::contrastivity(a);
      expect(std::abs(ct - metrics::contrastivity(b)) <= kExact, "CT translation", seed);
      expect(std::abs(metrics::confidence(a) - metrics::confidence(b)) <= kExact, "CF translation", seed);
      expect(std::abs(metrics::covariate_complexity(a) - metrics::covariate_complexity(b)) <= kExact,
             "CC translation", seed);
      expect(std::abs(metrics::cohesion_latent_space(a) - metrics::cohesion_latent_space(b)) <= kExact,
             "CLS translation", seed);
      expect(std::abs(metrics::input_completeness(a) - metrics::input_completeness(b)) <= kExact, "IC translation",
             seed);
      expect(std::abs(metrics::contrastivity(c) - scale * ct) <= kExact * std::max(1.0, scale * ct), "CT scale", seed);
      expect(std::abs(metrics::covariate_complexity(c) - metrics::covariate_complexity(a)) <= kExact, "CC scale",
             seed);
      expect(std::abs(metrics::cohesion_latent_space(c) - metrics::cohesion_latent_space(a)) <= kExact, "CLS scale",
             seed);
      expect(std::abs(metrics::input_completeness(c) - metrics::input_completeness(a)) <= kExact, "IC scale", seed);
      expect(metrics::confidence(c) <= metrics::confidence(a) + kExact, "CF scale", seed);
    }
  }
  return {failures == 0, failures == 0 ? std::string("50 instances, translation and scale")
                                       : std::to_string(failures) + " violations, first: " + first};
}

Outcome pipeline_determinism() {
  const auto s = testing::make_planted_setup(21);
  const auto cfg = testing::planted_run_config(2024);
  const auto dir = testing::scratch_dir("acceptance_determinism");
  std::string live;
  auto replay = testing::record_then_replay(s.model, dir / "trace.jsonl", [&](adapter::ModelChannel& ch) {
    live = report::to_json_string(experiments::run_benchmark(s.data, s.proto, ch, cfg));
  });
  const auto first = report::to_json_string(experiments::run_benchmark(s.data, s.proto, replay, cfg));
  const auto second = report::to_json_string(experiments::run_benchmark(s.data, s.proto, replay, cfg));
  return {first == second && first == live, fmt("report of %.0f bytes, replay twice and live", first.size())};
}

Outcome planted_end_to_end() {
  // Canonical run: every score condition on one planted seed, CN with zero noise.
  const auto s = testing::make_planted_setup(0);
  auto cfg = testing::planted_run_config(0);
  cfg.noise.sigma_fraction = 0.0;
  const auto dir = testing::scratch_dir("acceptance_planted");
  auto replay = testing::record_then_replay(s.model, dir / "planted.jsonl", [&](adapter::ModelChannel& ch) {
    experiments::run_benchmark(s.data, s.proto, ch, cfg);
  });
  const auto r = experiments::run_benchmark(s.data, s.proto, replay, cfg);
  const bool scores_ok = r[Metric::CR] == 1.0 && r[Metric::IC] == 1.0 && r[Metric::CF] >= 0.9 && r[Metric::CN] == 1.0;

  // k recovery over 40 planted seeds.
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto p = testing::make_planted_setup(1000 + seed);
    const auto rc = testing::planted_run_config(seed);
    auto ch = testing::record_then_replay(p.model, dir / ("k" + std::to_string(seed) + ".jsonl"),
                                          [&](adapter::ModelChannel& live) {
                                            experiments::run_benchmark(p.data, p.proto, live, rc);
                                          });
    experiments::BenchmarkTrace trace;
    experiments::run_benchmark(p.data, p.proto, ch, rc, {}, std::nullopt, &trace);
    if (trace.cm.per_class_k == std::map<int, int>{{0, 2}, {1, 2}}) ++recovered;
  }
  const bool k_ok = recovered >= 38;
  return {scores_ok && k_ok,
          fmt("CR = %.4f, IC = %.4f, CF = %.4f", r[Metric::CR], r[Metric::IC], r[Metric::CF]) +
              fmt(", CN(sigma=0) = %.4f, k = 2 per class on %.0f/40 seeds", r[Metric::CN], recovered)};
}

Outcome outlier_direction() {
  double clean[3] = {0, 0, 0};
  double mixed[3] = {0, 0, 0};
  const Metric watched[3] = {Metric::CR, Metric::CN, Metric::CF};
  bool exact_zero = true;
  const auto dir = testing::scratch_dir("acceptance_outliers");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = testing::make_planted_setup(500 + seed);
    const auto cfg = testing::planted_run_config(seed);
    experiments::OutlierConfig ocfg;
    ocfg.seed = derive_seed(seed, 3);
    auto ch = testing::record_then_replay(s.model, dir / ("o" + std::to_string(seed) + ".jsonl"),
                                          [&](adapter::ModelChannel& live) {
                                            experiments::run_outlier_study(s.data, s.proto, live, cfg, ocfg);
                                          });
    const auto study = experiments::run_outlier_study(s.data, s.proto, ch, cfg, ocfg);
    for (int m = 0; m < 3; ++m) {
      clean[m] += study.clean[watched[m]] / 20.0;
      mixed[m] += study.mixed[watched[m]] / 20.0;
    }
    for (Metric m : {Metric::CS, Metric::CT, Metric::CP}) {
      if (study.delta[static_cast<std::size_t>(m)] != 0.0) exact_zero = false;
    }
  }
  bool direction = true;
  for (int m = 0; m < 3; ++m) direction = direction && mixed[m] <= clean[m] + kOutlierSlack;
  return {direction && exact_zero,
          fmt("mean clean/mixed CR %.4f/%.4f, CN %.4f/", clean[0], mixed[0], clean[1]) +
              fmt("%.4f, CF %.4f/%.4f", mixed[1], clean[2], mixed[2]) +
              (exact_zero ? ", CS/CT/CP deltas exactly 0" : ", nonzero CS/CT/CP delta")};
}

Outcome sawsine_contract() {
  const auto d = synthetic::generate_sawsine(synthetic::SawsineConfig{});
  const auto zeros = std::count(d.data.labels.begin(), d.data.labels.end(), 0);
  const auto ones = std::count(d.data.labels.begin(), d.data.labels.end(), 1);
  synthetic::SawsineConfig quiet;
  quiet.noise_amp_max = 0.0;
  quiet.seed = 1;
  const auto q = synthetic::generate_sawsine(quiet);
  bool exact = true;
  std::vector<int> seen(synthetic::kNumBaseShapes, 0);
  for (Index i = 0; i < q.data.size(); ++i) {
    const int shape = q.base_shape[static_cast<std::size_t>(i)];
    ++seen[static_cast<std::size_t>(shape)];
    exact = exact && q.data.samples.row(i) == synthetic::base_shape(shape, quiet.series_length);
  }
  const bool all_shapes = std::all_of(seen.begin(), seen.end(), [](int n) { return n > 0; });
  return {d.data.size() == 8000 && zeros == 4000 && ones == 4000 && exact && all_shapes,
          fmt("%.0f samples, %.0f / %.0f per class", static_cast<double>(d.data.size()), static_cast<double>(zeros),
              static_cast<double>(ones)) +
              (exact && all_shapes ? ", noiseless rows equal the four base shapes" : ", noiseless rows differ")};
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"compactness exactness", compactness_exactness},
      {"total score reproduction", total_reproduction},
      {"IC fraction", ic_fraction},
      {"silhouette oracle", silhouette_oracle},
      {"metric oracle equivalence", metric_oracles},
      {"invariance suite", invariance},
      {"pipeline determinism", pipeline_determinism},
      {"planted ground truth end to end", planted_end_to_end},
      {"outlier study direction", outlier_direction},
      {"SAWSINE generator contract", sawsine_contract},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    if (!o.pass) ++failed;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
