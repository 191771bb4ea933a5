#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "protoscore/types.hpp"

// Dataset and prototype files.
//
// A manifest is a JSON document listing raw little-endian tensors:
//
//   {
//     "tensors": [
//       {"name": "samples", "dtype": "f64", "shape": [N, d],
//        "file": "samples.bin", "byte_order": "little"}
//     ],
//     "labels": [0, 1, ...],            // or {"csv": "labels.csv", "column": "label"}
//     "sample_ids": ["a", "b", ...],    // optional, defaults to row index
//     "metadata": {...}                 // optional, carried through untouched
//   }
//
// Payload paths are relative to the manifest. A plain `.csv` file is accepted
// in place of a manifest: header row, one sample per line, last column `label`.
namespace protoscore::io {

using json = nlohmann::json;

InputDataset load_dataset(const std::filesystem::path& manifest_path);

// Reads tensor "prototypes" and the optional integer array "class_hint".
PrototypeSet load_prototypes(const std::filesystem::path& manifest_path);

// Writes `<dir>/<stem>.json` plus an f64 payload; returns the manifest path.
std::filesystem::path save_dataset(const InputDataset& data, const std::filesystem::path& dir,
                                   const std::string& stem = "dataset",
                                   const json& metadata = json::object());

std::filesystem::path save_prototypes(const PrototypeSet& proto, const std::filesystem::path& dir,
                                      const std::string& stem = "prototypes");

// Reads one named tensor of a parsed manifest as f64.
Matrix read_tensor(const json& manifest, const std::filesystem::path& base_dir,
                   const std::string& name);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace protoscore::io
