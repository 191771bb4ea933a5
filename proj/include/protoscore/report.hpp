#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "protoscore/types.hpp"

namespace protoscore::report {

inline constexpr std::string_view kEngineName = "protoscore";
inline constexpr std::string_view kEngineVersion = "0.1.0";

enum class Format { json, markdown };

// Key order is fixed, so identical reports serialize to identical bytes.
// Timings are wall-clock and therefore only emitted on request.
nlohmann::ordered_json to_json(const ScoreReport& report, bool include_timing = false);
ScoreReport from_json(const nlohmann::json& j);

std::string to_json_string(const ScoreReport& report, bool include_timing = false);

// Score table laid out like the published benchmark table:
// Run | Val Loss | CR | CS | CN | CT | CC | CP | CF | IC | CLS | Total
std::string markdown_table(std::span<const ScoreReport> runs);
std::string markdown_row(const ScoreReport& report, std::string_view run_label);

// Per-metric differences `mixed - clean`, plus the total.
ScoreArray score_deltas(const ScoreReport& clean, const ScoreReport& mixed);
std::string delta_markdown(const ScoreReport& clean, const ScoreReport& mixed);
nlohmann::ordered_json delta_json(const ScoreReport& clean, const ScoreReport& mixed);

void save_report(const ScoreReport& report, const std::filesystem::path& path, Format format,
                 bool include_timing = false);
ScoreReport load_report(const std::filesystem::path& path);

// Fixed-width score rendering used by every table ("%.2f").
std::string format_score(double v);

} // namespace protoscore::report
