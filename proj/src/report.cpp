#include "protoscore/report.hpp"

#include <cstdio>
#include <sstream>

#include "protoscore/error.hpp"
#include "protoscore/io.hpp"

namespace protoscore::report {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

ordered_json to_json(const ScoreReport& report, bool include_timing) {
  ordered_json j;
  j["engine"] = kEngineName;
  j["version"] = kEngineVersion;
  if (!report.label.empty()) j["label"] = report.label;
  ordered_json scores = ordered_json::object();
  for (std::size_t i = 0; i < kNumMetrics; ++i) scores[std::string(kMetricNames[i])] = report.scores[i];
  j["scores"] = scores;
  j["total"] = report.total;
  j["val_loss"] = report.val_loss ? ordered_json(*report.val_loss) : ordered_json(nullptr);
  j["config_fingerprint"] = report.config_fingerprint;
  j["seed"] = report.seed;
  j["cs_reruns"] = report.cs_reruns;
  j["ct_normalized"] = report.ct_normalized;
  j["silhouette_rescaled"] = report.silhouette_rescaled;
  if (include_timing) {
    ordered_json clock = ordered_json::object();
    for (std::size_t i = 0; i < kNumMetrics; ++i) clock[std::string(kMetricNames[i])] = report.clock[i];
    j["clock_seconds"] = clock;
  }
  return j;
}

ScoreReport from_json(const json& j) {
  ScoreReport r;
  try {
    const auto& scores = j.at("scores");
    for (std::size_t i = 0; i < kNumMetrics; ++i) r.scores[i] = scores.at(std::string(kMetricNames[i])).get<double>();
    r.total = j.at("total").get<double>();
    if (j.contains("val_loss") && !j.at("val_loss").is_null()) r.val_loss = j.at("val_loss").get<double>();
    r.config_fingerprint = j.value("config_fingerprint", std::string());
    r.seed = j.value("seed", std::uint64_t{0});
    r.cs_reruns = j.value("cs_reruns", 0);
    r.ct_normalized = j.value("ct_normalized", false);
    r.silhouette_rescaled = j.value("silhouette_rescaled", true);
    r.label = j.value("label", std::string());
    if (j.contains("clock_seconds")) {
      const auto& clock = j.at("clock_seconds");
      for (std::size_t i = 0; i < kNumMetrics; ++i) r.clock[i] = clock.value(std::string(kMetricNames[i]), 0.0);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ShapeMismatch, std::string("report: ") + e.what());
  }
  return r;
}

std::string to_json_string(const ScoreReport& report, bool include_timing) {
  return to_json(report, include_timing).dump(2) + "\n";
}

namespace {

std::string header_line() {
  std::string h = "Run | Val Loss";
  for (const auto name : kMetricNames) h += " | " + std::string(name);
  h += " | Total\n";
  h += "---|---";
  for (std::size_t i = 0; i <= kNumMetrics; ++i) h += "|---:";
  h += "\n";
  return h;
}

std::string val_loss_cell(const ScoreReport& r) {
  return r.val_loss ? "MSE: " + format_score(*r.val_loss) : "-";
}

} // namespace

std::string markdown_row(const ScoreReport& report, std::string_view run_label) {
  std::string row = std::string(run_label) + " | " + val_loss_cell(report);
  for (const double s : report.scores) row += " | " + format_score(s);
  row += " | " + format_score(report.total);
  return row;
}

std::string markdown_table(std::span<const ScoreReport> runs) {
  std::string out = header_line();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string label = runs[i].label.empty() ? std::to_string(i + 1) : runs[i].label;
    out += markdown_row(runs[i], label) + "\n";
  }
  return out;
}

ScoreArray score_deltas(const ScoreReport& clean, const ScoreReport& mixed) {
  ScoreArray d{};
  for (std::size_t i = 0; i < kNumMetrics; ++i) d[i] = mixed.scores[i] - clean.scores[i];
  return d;
}

std::string delta_markdown(const ScoreReport& clean, const ScoreReport& mixed) {
  std::string out = "Metric | Clean | Mixed | Delta\n---|---:|---:|---:\n";
  const auto d = score_deltas(clean, mixed);
  char buf[48];
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    std::snprintf(buf, sizeof buf, "%+.4f", d[i]);
    out += std::string(kMetricNames[i]) + " | " + format_score(clean.scores[i]) + " | " +
           format_score(mixed.scores[i]) + " | " + buf + "\n";
  }
  std::snprintf(buf, sizeof buf, "%+.4f", mixed.total - clean.total);
  out += "Total | " + format_score(clean.total) + " | " + format_score(mixed.total) + " | " + buf + "\n";
  return out;
}

ordered_json delta_json(const ScoreReport& clean, const ScoreReport& mixed) {
  ordered_json j = ordered_json::object();
  const auto d = score_deltas(clean, mixed);
  for (std::size_t i = 0; i < kNumMetrics; ++i) j[std::string(kMetricNames[i])] = d[i];
  j["Total"] = mixed.total - clean.total;
  return j;
}

void save_report(const ScoreReport& report, const std::filesystem::path& path, Format format,
                 bool include_timing) {
  validate(report);
  if (format == Format::json) {
    io::write_text_file(path, to_json_string(report, include_timing));
  } else {
    const ScoreReport runs[] = {report};
    io::write_text_file(path, markdown_table(runs));
  }
}

ScoreReport load_report(const std::filesystem::path& path) {
  ScoreReport r = from_json(io::read_json_file(path));
  validate(r);
  return r;
}

} // namespace protoscore::report
