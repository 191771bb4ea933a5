#include "cli.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "protoscore/adapter.hpp"
#include "protoscore/error.hpp"
#include "protoscore/experiments.hpp"
#include "protoscore/io.hpp"
#include "protoscore/random.hpp"
#include "protoscore/report.hpp"
#include "protoscore/synthetic.hpp"

namespace protoscore::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

// Thrown for flag combinations CLI11 cannot express; maps to exit 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AdapterFlags {
  std::string command;
  std::string replay;
  long long timeout_ms = 120'000;
  bool strict = false;

  void add_to(CLI::App* app) {
    auto* cmd = app->add_option("--adapter-cmd", command, "adapter command line, launched as a subprocess");
    auto* rep = app->add_option("--replay", replay, "replay transcript to serve the model from")
                    ->check(CLI::ExistingFile);
    cmd->excludes(rep);
    app->add_option("--timeout-ms", timeout_ms, "per-request adapter timeout")->check(CLI::PositiveNumber);
    app->add_flag("--strict", strict, "send every request twice and require identical answers");
  }

  AdapterDescriptor descriptor() const {
    AdapterDescriptor d;
    if (!command.empty()) {
      d.command = adapter::split_command(command);
    } else if (!replay.empty()) {
      d.replay_path = replay;
    } else {
      throw UsageError("one of --adapter-cmd or --replay is required");
    }
    return d;
  }

  adapter::ChannelOptions options(bool record = false) const {
    adapter::ChannelOptions o;
    o.timeout = std::chrono::milliseconds(timeout_ms);
    o.strict = strict;
    o.record = record;
    return o;
  }
};

struct RunFlags {
  std::string dataset;
  std::string prototypes;
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::string format = "markdown";
  std::string label;
  double val_loss = 0.0;
  bool timing = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* val_loss_opt = nullptr;
  AdapterFlags adapter;

  void add_to(CLI::App* app, bool seed_required) {
    app->add_option("--dataset", dataset, "dataset manifest or CSV")->required()->check(CLI::ExistingFile);
    app->add_option("--prototypes", prototypes, "prototype manifest")->required()->check(CLI::ExistingFile);
    app->add_option("--config", config, "JSON config")->check(CLI::ExistingFile);
    app->add_option("--out", out, "output directory");
    seed_opt = app->add_option("--seed", seed, "run seed, overrides the config file");
    if (seed_required) seed_opt->required();
    app->add_option("--format", format, "stdout format")->check(CLI::IsMember({"json", "markdown"}));
    app->add_option("--label", label, "run label for the report table");
    val_loss_opt = app->add_option("--val-loss", val_loss, "validation loss to carry in the report");
    app->add_flag("--timing", timing, "include per-metric wall time in the JSON report");
    adapter.add_to(app);
  }

  json config_json() const { return config.empty() ? json::object() : io::read_json_file(config); }

  experiments::RunConfig run_config(const json& j) const {
    experiments::RunConfig cfg = experiments::run_config_from_json(j);
    if (seed_opt->count() > 0) cfg.seed = seed;
    return cfg;
  }

  std::optional<double> loss() const {
    return val_loss_opt->count() > 0 ? std::optional<double>(val_loss) : std::nullopt;
  }
};

fs::path resolve(const fs::path& base_file, const fs::path& p) {
  if (p.is_absolute() || base_file.empty()) return p;
  return base_file.parent_path() / p;
}

void print_report(std::ostream& out, const ScoreReport& r, const std::string& format) {
  if (format == "json") {
    out << report::to_json_string(r);
  } else {
    const ScoreReport runs[] = {r};
    out << report::markdown_table(runs);
  }
}

void write_reports(const fs::path& dir, const std::string& stem, const ScoreReport& r, bool timing) {
  if (dir.empty()) return;
  report::save_report(r, dir / (stem + ".json"), report::Format::json, timing);
  report::save_report(r, dir / (stem + ".md"), report::Format::markdown);
}

// Rerun channels and prototype sets named by the consistency section.
struct Reruns {
  std::vector<adapter::ModelChannel> channels;
  std::vector<experiments::Rerun> list;
};

Reruns open_reruns(const ConsistencyConfig& cc, const fs::path& config_path, const AdapterFlags& flags) {
  if (cc.rerun_prototypes.size() != cc.adapter_endpoints.size()) {
    throw Error(ErrorKind::InvalidConfig, "every consistency adapter needs a 'prototypes' manifest");
  }
  Reruns r;
  r.channels.reserve(cc.adapter_endpoints.size());
  for (std::size_t i = 0; i < cc.adapter_endpoints.size(); ++i) {
    AdapterDescriptor d = cc.adapter_endpoints[i];
    if (d.is_replay()) d.replay_path = resolve(config_path, d.replay_path);
    r.channels.push_back(adapter::open_channel(d, flags.options()));
    r.list.push_back({io::load_prototypes(resolve(config_path, cc.rerun_prototypes[i])), nullptr});
  }
  for (std::size_t i = 0; i < r.list.size(); ++i) r.list[i].channel = &r.channels[i];
  return r;
}

int cmd_score(const RunFlags& f, std::ostream& out) {
  const auto cfg = f.run_config(f.config_json());
  const auto data = io::load_dataset(f.dataset);
  const auto proto = io::load_prototypes(f.prototypes);
  auto channel = adapter::open_channel(f.adapter.descriptor(), f.adapter.options());
  Reruns reruns;
  if (cfg.consistency) reruns = open_reruns(*cfg.consistency, f.config, f.adapter);
  ScoreReport r = experiments::run_benchmark(data, proto, channel, cfg, reruns.list, f.loss());
  r.label = f.label;
  channel.shutdown();
  write_reports(f.out, "report", r, f.timing);
  print_report(out, r, f.format);
  return kOk;
}

int cmd_consistency(const RunFlags& f, std::ostream& out) {
  const auto cfg = f.run_config(f.config_json());
  if (!cfg.consistency) throw UsageError("--config must contain a 'consistency' section");
  const auto data = io::load_dataset(f.dataset);
  const auto proto = io::load_prototypes(f.prototypes);
  auto channel = adapter::open_channel(f.adapter.descriptor(), f.adapter.options());
  Reruns reruns = open_reruns(*cfg.consistency, f.config, f.adapter);
  const double cs = experiments::run_consistency_campaign(data, proto, channel, reruns.list, cfg);
  ordered_json j{{"engine", report::kEngineName},
                 {"version", report::kEngineVersion},
                 {"CS", cs},
                 {"reruns", reruns.list.size()},
                 {"config_fingerprint", experiments::fingerprint(cfg)}};
  if (!f.out.empty()) io::write_text_file(fs::path(f.out) / "consistency.json", j.dump(2) + "\n");
  if (f.format == "json") {
    out << j.dump(2) << "\n";
  } else {
    out << "CS | Reruns\n---:|---:\n" << report::format_score(cs) << " | " << reruns.list.size() << "\n";
  }
  return kOk;
}

int cmd_outlier_study(const RunFlags& f, std::ostream& out) {
  const json j = f.config_json();
  experiments::OutlierConfig ocfg = experiments::outlier_config_from_json(j);
  experiments::RunConfig rcfg = f.run_config(j.contains("run") ? j.at("run") : json::object());
  if (f.seed_opt->count() > 0 && !j.contains("seed")) ocfg.seed = derive_seed(f.seed, 3);
  const auto data = io::load_dataset(f.dataset);
  const auto proto = io::load_prototypes(f.prototypes);
  auto channel = adapter::open_channel(f.adapter.descriptor(), f.adapter.options());
  Reruns reruns;
  if (rcfg.consistency) reruns = open_reruns(*rcfg.consistency, f.config, f.adapter);
  auto study = experiments::run_outlier_study(data, proto, channel, rcfg, ocfg, reruns.list);
  channel.shutdown();

  if (!f.out.empty()) {
    const fs::path dir = f.out;
    write_reports(dir, "clean", study.clean, f.timing);
    write_reports(dir, "mixed", study.mixed, f.timing);
    io::write_text_file(dir / "delta.json", report::delta_json(study.clean, study.mixed).dump(2) + "\n");
    io::write_text_file(dir / "delta.md", report::delta_markdown(study.clean, study.mixed));
    io::save_dataset(study.mixed_data, dir, "mixed_dataset",
                     {{"outliers", experiments::to_json(ocfg)}, {"source", f.dataset}});
  }
  if (f.format == "json") {
    ordered_json o{{"clean", report::to_json(study.clean)},
                   {"mixed", report::to_json(study.mixed)},
                   {"delta", report::delta_json(study.clean, study.mixed)}};
    out << o.dump(2) << "\n";
  } else {
    const ScoreReport runs[] = {study.clean, study.mixed};
    out << report::markdown_table(runs) << "\n" << report::delta_markdown(study.clean, study.mixed);
  }
  return kOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"protoscore: prototype quality benchmark"};
  app.require_subcommand(1);

  RunFlags score_f, cons_f, outlier_f, record_f;
  auto* score = app.add_subcommand("score", "score one model and prototype set");
  score_f.add_to(score, true);
  auto* cons = app.add_subcommand("consistency", "consistency against rerun models from --config");
  cons_f.add_to(cons, false);
  auto* outlier = app.add_subcommand("outlier-study", "score clean data and data with injected outliers");
  outlier_f.add_to(outlier, true);

  synthetic::SawsineConfig saw;
  std::string saw_out;
  auto* gen_saw = app.add_subcommand("gen-sawsine", "write a synthetic two-class series dataset");
  gen_saw->add_option("--out", saw_out, "output directory")->required();
  gen_saw->add_option("--seed", saw.seed)->required();
  gen_saw->add_option("--samples", saw.num_samples);
  gen_saw->add_option("--length", saw.series_length);
  gen_saw->add_option("--noise-amp", saw.noise_amp_max);

  synthetic::PlantedLatentConfig planted;
  std::string planted_out;
  auto* gen_planted = app.add_subcommand("gen-planted", "write planted latent clusters with prototypes at the centers");
  gen_planted->add_option("--out", planted_out, "output directory")->required();
  gen_planted->add_option("--seed", planted.seed)->required();
  gen_planted->add_option("--classes", planted.num_classes);
  gen_planted->add_option("--clusters-per-class", planted.clusters_per_class);
  gen_planted->add_option("--points", planted.points_per_cluster);
  gen_planted->add_option("--sigma", planted.cluster_sigma);
  gen_planted->add_option("--separation", planted.separation);
  gen_planted->add_option("--dim", planted.latent_dim);

  std::string replay_out;
  bool encode_only = false;
  auto* record = app.add_subcommand("record-replay", "run a live adapter and save its transcript for replay");
  record_f.add_to(record, false);
  record->get_option("--out")->description("replay file to write")->required();
  record->add_flag("--encode-only", encode_only, "record only the hello and the dataset encode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (score->parsed()) return cmd_score(score_f, out);
    if (cons->parsed()) return cmd_consistency(cons_f, out);
    if (outlier->parsed()) return cmd_outlier_study(outlier_f, out);
    if (gen_saw->parsed()) {
      const auto ds = synthetic::generate_sawsine(saw);
      const auto path = io::save_dataset(ds.data, saw_out, "dataset",
                                         {{"generator", "sawsine"},
                                          {"seed", saw.seed},
                                          {"noise_amp_max", saw.noise_amp_max},
                                          {"base_shape", ds.base_shape}});
      out << path.string() << "\n";
      return kOk;
    }
    if (gen_planted->parsed()) {
      const auto p = synthetic::generate_planted_latent(planted);
      const auto data_path = io::save_dataset(synthetic::as_input_dataset(p.latent), planted_out, "dataset",
                                              {{"generator", "planted"}, {"seed", planted.seed},
                                               {"cluster", p.truth.assignments}});
      const auto proto_path = io::save_prototypes(p.proto, planted_out, "prototypes");
      out << data_path.string() << "\n" << proto_path.string() << "\n";
      return kOk;
    }
    if (record->parsed()) {
      if (!encode_only && record_f.seed_opt->count() == 0) throw UsageError("--seed is required unless --encode-only");
      auto channel = adapter::open_channel(record_f.adapter.descriptor(), record_f.adapter.options(true));
      const auto data = io::load_dataset(record_f.dataset);
      if (encode_only) {
        adapter::record_replay(channel, {{"encode", data.samples}}, record_f.out);
      } else {
        const auto cfg = record_f.run_config(record_f.config_json());
        const auto proto = io::load_prototypes(record_f.prototypes);
        const ScoreReport r = experiments::run_benchmark(data, proto, channel, cfg, {}, record_f.loss());
        adapter::save_replay(channel.transcript(), record_f.out);
        print_report(out, r, record_f.format);
      }
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_protocol_error(e.kind()) ? kAdapterError : kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}

} // namespace protoscore::cli
