#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "protoscore/adapter.hpp"
#include "protoscore/types.hpp"

// Linear autoencoder with a prototype classifier, served over the adapter
// protocol. Test fixture only.
namespace protoscore::testing {

struct ToyModel {
  Matrix projection; // n x d, orthonormal rows
  Vector offset;     // latent translation, empty means zero
  Matrix prototypes; // M x n
  Labels classes;    // label per prototype
  int num_classes = 2;
  // Optional linear classifier argmax(W z + b); nearest prototype otherwise.
  Matrix weights; // L x n
  Vector bias;

  Index input_dim() const { return projection.cols(); }
  Index latent_dim() const { return projection.rows(); }

  Matrix encode(const Matrix& x) const;
  Matrix decode(const Matrix& z) const;
  Labels classify(const Matrix& z) const;
};

// Seeded orthonormal projection (identity when n == d), M distinct prototypes
// with classes j % L.
ToyModel make_toy_model(Index d, Index n, Index m, int num_classes, std::uint64_t seed);

ToyModel identity_model(Index d, const PrototypeSet& proto, int num_classes);

nlohmann::json to_json(const ToyModel& model);
ToyModel toy_model_from_json(const nlohmann::json& j);

// Misbehaviour switches for protocol error tests.
struct ServerFaults {
  int protocol = adapter::kProtocolVersion;
  int crash_after = -1; // requests answered before dying
  int hang_after = -1;
  bool garbage_hello = false;
  bool wrong_id = false;
  bool nan_output = false;
  bool wide_output = false;
  bool nondeterministic = false;
};

class ToyServer {
public:
  explicit ToyServer(ToyModel model, ServerFaults faults = {}) : model_(std::move(model)), faults_(faults) {}

  // One request line in, one response line out. Returns nullopt for shutdown.
  // Throws Error(AdapterCrash) when the crash fault triggers.
  std::optional<std::string> handle_line(const std::string& line);

  int requests_seen() const { return seen_; }
  bool hang_now() const { return faults_.hang_after >= 0 && seen_ > faults_.hang_after; }

private:
  ToyModel model_;
  ServerFaults faults_;
  int seen_ = 0;
};

// In-process channel over a ToyServer.
adapter::ModelChannel loopback_channel(ToyModel model, adapter::ChannelOptions options = {},
                                       ServerFaults faults = {});

std::filesystem::path toy_adapter_path();

// Fresh scratch directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

} // namespace protoscore::testing
