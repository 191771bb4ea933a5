#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "protoscore/types.hpp"

// Line-delimited JSON protocol to the model under test.
//
//   engine -> {"id":0,"op":"hello"}
//   adapter <- {"id":0,"result":{"input_dim":d,"latent_dim":n,"num_classes":L,"protocol":1}}
//   engine -> {"id":1,"op":"encode","data":[[...],...]}      B x d
//   adapter <- {"id":1,"result":[[...],...]}                  B x n
//   engine -> {"id":2,"op":"decode","data":[[...],...]}      B x n
//   adapter <- {"id":2,"result":[[...],...]}                  B x d
//   engine -> {"id":3,"op":"classify","data":[[...],...]}    B x n
//   adapter <- {"id":3,"result":[0,1,...]}                    B labels
//   engine -> {"id":4,"op":"shutdown"}
//
// Failures come back as {"id":k,"error":{"code":...,"message":...}}.
namespace protoscore::adapter {

inline constexpr int kProtocolVersion = 1;
inline constexpr Index kDefaultChunkRows = 256;
inline constexpr const char* kTraceEnv = "PROTOSCORE_PROTOCOL_TRACE";

// Carries one request line to the model and returns its response line.
class Transport {
public:
  virtual ~Transport() = default;
  virtual std::string exchange(const std::string& request_line) = 0;
  // One-way message with no response (shutdown).
  virtual void notify(const std::string& /*line*/) {}
  virtual void close() {}
  virtual std::string describe() const = 0;
};

// Spawns the adapter with stdin/stdout pipes; stderr is inherited.
class SubprocessTransport final : public Transport {
public:
  SubprocessTransport(std::vector<std::string> argv, std::chrono::milliseconds timeout);
  ~SubprocessTransport() override;
  SubprocessTransport(const SubprocessTransport&) = delete;
  SubprocessTransport& operator=(const SubprocessTransport&) = delete;

  std::string exchange(const std::string& request_line) override;
  void notify(const std::string& line) override;
  void close() override;
  std::string describe() const override;

private:
  void write_line(const std::string& line);
  std::string read_line();
  std::string exit_status_text();

  std::vector<std::string> argv_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

// Serves responses from a recorded transcript. Requests are matched on their
// op and payload; ids are rewritten to the live request id.
class ReplayTransport final : public Transport {
public:
  explicit ReplayTransport(const std::filesystem::path& replay_file);

  std::string exchange(const std::string& request_line) override;
  std::string describe() const override;

private:
  struct Entry {
    std::vector<std::string> responses;
    std::size_t cursor = 0;
  };
  std::filesystem::path path_;
  std::map<std::string, Entry> entries_;
};

// Calls an in-process handler; used to host test models without a process.
class LoopbackTransport final : public Transport {
public:
  using Handler = std::function<std::string(const std::string&)>;
  explicit LoopbackTransport(Handler handler) : handler_(std::move(handler)) {}

  std::string exchange(const std::string& request_line) override { return handler_(request_line); }
  std::string describe() const override { return "loopback"; }

private:
  Handler handler_;
};

struct Exchange {
  std::string request;
  std::string response;
};

// Canonical request key for replay lookup: the request without its id.
std::string replay_key(const std::string& request_line);

void save_replay(const std::vector<Exchange>& transcript, const std::filesystem::path& path);

struct ChannelOptions {
  std::chrono::milliseconds timeout{120'000};
  Index chunk_rows = kDefaultChunkRows;
  // Sends every chunk twice and requires identical answers.
  bool strict = false;
  // Keeps the full transcript in memory for save_replay.
  bool record = false;
};

enum class TransportKind { subprocess, replay, loopback };

class ModelChannel {
public:
  // Performs the hello exchange over `transport`.
  static ModelChannel handshake(std::unique_ptr<Transport> transport, TransportKind kind,
                                ChannelOptions options = {});

  ModelChannel(ModelChannel&&) noexcept;
  ModelChannel& operator=(ModelChannel&&) noexcept;
  ~ModelChannel();

  Index input_dim() const { return input_dim_; }
  Index latent_dim() const { return latent_dim_; }
  int num_classes() const { return num_classes_; }
  TransportKind transport_kind() const { return kind_; }

  Matrix encode(const Eigen::Ref<const Matrix>& batch);
  Matrix decode(const Eigen::Ref<const Matrix>& batch);
  Labels classify(const Eigen::Ref<const Matrix>& batch);

  // Sends shutdown and releases the transport. Idempotent.
  void shutdown();

  const std::vector<Exchange>& transcript() const { return transcript_; }

private:
  ModelChannel(std::unique_ptr<Transport> transport, TransportKind kind, ChannelOptions options);

  nlohmann::json call(const std::string& op, const Eigen::Ref<const Matrix>& chunk);
  nlohmann::json roundtrip(const nlohmann::ordered_json& request);
  Matrix matrix_op(const std::string& op, const Eigen::Ref<const Matrix>& batch, Index in_dim,
                   Index out_dim);
  void trace(const std::string& line, char direction);

  std::unique_ptr<Transport> transport_;
  TransportKind kind_;
  ChannelOptions options_;
  Index input_dim_ = 0;
  Index latent_dim_ = 0;
  int num_classes_ = 0;
  std::int64_t next_id_ = 0;
  std::vector<Exchange> transcript_;
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> trace_file_{nullptr, &std::fclose};
};

ModelChannel open_channel(const AdapterDescriptor& descriptor, ChannelOptions options = {});

// Splits a command line on whitespace; single and double quotes group words.
std::vector<std::string> split_command(const std::string& command_line);

struct ScriptStep {
  std::string op; // encode, decode or classify
  Matrix batch;
};

// Runs `script` on a live recording channel, then writes the transcript
// (including the hello exchange) as a replay file.
void record_replay(ModelChannel& channel, const std::vector<ScriptStep>& script,
                   const std::filesystem::path& path);

} // namespace protoscore::adapter
