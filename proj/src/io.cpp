#include "protoscore/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "protoscore/error.hpp"

namespace protoscore::io {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little, "payload reader assumes a little-endian host");

std::string read_bytes(const fs::path& path, std::string_view field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::MissingFile, std::string(field) + ": cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::string_view field, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::out_of_range&) {
    throw Error(ErrorKind::NonFiniteValue,
                std::string(field) + " row " + std::to_string(row) + ": value out of range");
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::ShapeMismatch,
                std::string(field) + " row " + std::to_string(row) + ": not a number '" + s + "'");
  }
}

// Label column of a CSV file, by header name.
Labels read_csv_labels(const fs::path& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, "labels: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ShapeMismatch, "labels: empty CSV");
  const auto header = split_csv_line(line);
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) {
    throw Error(ErrorKind::ShapeMismatch, "labels: CSV has no column '" + column + "'");
  }
  const auto col = static_cast<std::size_t>(it - header.begin());
  Labels labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::ShapeMismatch, "labels row " + std::to_string(row) + ": wrong cell count");
    }
    labels.push_back(static_cast<int>(parse_number(cells[col], "labels", row)));
    ++row;
  }
  return labels;
}

Labels read_labels(const json& manifest, const fs::path& base_dir) {
  if (!manifest.contains("labels")) {
    throw Error(ErrorKind::ShapeMismatch, "labels: manifest has no labels entry");
  }
  const auto& node = manifest.at("labels");
  if (node.is_array()) {
    Labels labels;
    labels.reserve(node.size());
    for (std::size_t i = 0; i < node.size(); ++i) {
      if (!node[i].is_number_integer()) {
        throw Error(ErrorKind::ShapeMismatch, "labels row " + std::to_string(i) + " is not an integer");
      }
      labels.push_back(node[i].get<int>());
    }
    return labels;
  }
  if (node.is_object() && node.contains("csv")) {
    return read_csv_labels(base_dir / node.at("csv").get<std::string>(),
                           node.value("column", std::string("label")));
  }
  throw Error(ErrorKind::ShapeMismatch, "labels: expected an integer array or a csv reference");
}

std::vector<std::string> default_ids(Index n) {
  std::vector<std::string> ids(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = std::to_string(i);
  return ids;
}

InputDataset load_csv_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, "dataset: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ShapeMismatch, "dataset: empty CSV");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "label") {
    throw Error(ErrorKind::ShapeMismatch, "dataset: CSV needs feature columns and a final 'label' column");
  }
  const std::size_t width = header.size() - 1;
  std::vector<double> values;
  InputDataset data;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::ShapeMismatch, "samples row " + std::to_string(row) + ": expected " +
                                                std::to_string(header.size()) + " cells");
    }
    for (std::size_t c = 0; c < width; ++c) values.push_back(parse_number(cells[c], "samples", row));
    data.labels.push_back(static_cast<int>(parse_number(cells.back(), "labels", row)));
    ++row;
  }
  data.samples = Eigen::Map<const Matrix>(values.data(), static_cast<Index>(row), static_cast<Index>(width));
  data.sample_ids = default_ids(data.samples.rows());
  validate(data);
  return data;
}

json tensor_entry(const std::string& name, Index rows, Index cols, const std::string& file) {
  return json{{"name", name}, {"dtype", "f64"}, {"shape", {rows, cols}},
              {"file", file}, {"byte_order", "little"}};
}

void write_f64(const fs::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * static_cast<Index>(sizeof(double))));
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

} // namespace

json read_json_file(const fs::path& path) {
  const std::string text = read_bytes(path, "manifest");
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ShapeMismatch, path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

Matrix read_tensor(const json& manifest, const fs::path& base_dir, const std::string& name) {
  if (!manifest.contains("tensors") || !manifest.at("tensors").is_array()) {
    throw Error(ErrorKind::ShapeMismatch, name + ": manifest has no tensors array");
  }
  const json* entry = nullptr;
  for (const auto& t : manifest.at("tensors")) {
    if (t.value("name", std::string()) == name) entry = &t;
  }
  if (entry == nullptr) throw Error(ErrorKind::ShapeMismatch, name + ": tensor not declared in manifest");

  const std::string dtype = entry->value("dtype", std::string("f64"));
  if (dtype != "f32" && dtype != "f64") {
    throw Error(ErrorKind::ShapeMismatch, name + ": unsupported dtype '" + dtype + "'");
  }
  if (entry->value("byte_order", std::string("little")) != "little") {
    throw Error(ErrorKind::ShapeMismatch, name + ": only little-endian payloads are supported");
  }
  const auto& shape = entry->at("shape");
  if (!shape.is_array() || shape.size() != 2) {
    throw Error(ErrorKind::ShapeMismatch, name + ": shape must be [rows, cols]");
  }
  const auto rows = shape[0].get<Index>();
  const auto cols = shape[1].get<Index>();
  if (rows < 0 || cols < 0) throw Error(ErrorKind::ShapeMismatch, name + ": negative shape");

  const std::string bytes = read_bytes(base_dir / entry->at("file").get<std::string>(), name);
  const std::size_t width = dtype == "f32" ? sizeof(float) : sizeof(double);
  const auto expected = static_cast<std::size_t>(rows * cols) * width;
  if (bytes.size() != expected) {
    throw Error(ErrorKind::ShapeMismatch, name + ": payload has " + std::to_string(bytes.size()) +
                                              " bytes, shape needs " + std::to_string(expected));
  }

  Matrix m(rows, cols);
  if (dtype == "f64") {
    std::memcpy(m.data(), bytes.data(), expected);
  } else {
    RowMatrix<float> f(rows, cols);
    std::memcpy(f.data(), bytes.data(), expected);
    m = f.cast<double>();
  }
  return m;
}

InputDataset load_dataset(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorKind::MissingFile, "dataset: " + manifest_path.string() + " does not exist");
  }
  if (manifest_path.extension() == ".csv") return load_csv_dataset(manifest_path);

  const json manifest = read_json_file(manifest_path);
  const fs::path base = manifest_path.parent_path();
  InputDataset data;
  data.samples = read_tensor(manifest, base, "samples");
  data.labels = read_labels(manifest, base);
  if (manifest.contains("sample_ids")) {
    data.sample_ids = manifest.at("sample_ids").get<std::vector<std::string>>();
  } else {
    data.sample_ids = default_ids(data.samples.rows());
  }
  if (manifest.contains("modified")) {
    data.modified = manifest.at("modified").get<std::vector<std::uint8_t>>();
  }
  validate(data);
  return data;
}

PrototypeSet load_prototypes(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorKind::MissingFile, "prototypes: " + manifest_path.string() + " does not exist");
  }
  const json manifest = read_json_file(manifest_path);
  PrototypeSet proto;
  proto.prototypes = read_tensor(manifest, manifest_path.parent_path(), "prototypes");
  if (manifest.contains("class_hint") && !manifest.at("class_hint").is_null()) {
    proto.class_hint = manifest.at("class_hint").get<Labels>();
  }
  validate(proto, proto.prototypes.cols());
  return proto;
}

fs::path save_dataset(const InputDataset& data, const fs::path& dir, const std::string& stem,
                      const json& metadata) {
  validate(data);
  fs::create_directories(dir);
  const std::string payload = stem + ".samples.bin";
  write_f64(dir / payload, data.samples);

  json manifest;
  manifest["tensors"] = json::array({tensor_entry("samples", data.samples.rows(), data.samples.cols(), payload)});
  manifest["labels"] = data.labels;
  if (data.sample_ids != default_ids(data.samples.rows())) manifest["sample_ids"] = data.sample_ids;
  if (!data.modified.empty()) manifest["modified"] = data.modified;
  if (!metadata.empty()) manifest["metadata"] = metadata;

  const fs::path path = dir / (stem + ".json");
  write_text_file(path, manifest.dump(2) + "\n");
  return path;
}

fs::path save_prototypes(const PrototypeSet& proto, const fs::path& dir, const std::string& stem) {
  validate(proto, proto.prototypes.cols());
  fs::create_directories(dir);
  const std::string payload = stem + ".bin";
  write_f64(dir / payload, proto.prototypes);

  json manifest;
  manifest["tensors"] =
      json::array({tensor_entry("prototypes", proto.prototypes.rows(), proto.prototypes.cols(), payload)});
  if (proto.class_hint) manifest["class_hint"] = *proto.class_hint;

  const fs::path path = dir / (stem + ".json");
  write_text_file(path, manifest.dump(2) + "\n");
  return path;
}

} // namespace protoscore::io
