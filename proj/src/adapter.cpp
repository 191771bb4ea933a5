#include "protoscore/adapter.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "protoscore/error.hpp"

extern char** environ;

namespace protoscore::adapter {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// SubprocessTransport

SubprocessTransport::SubprocessTransport(std::vector<std::string> argv, std::chrono::milliseconds timeout)
    : argv_(std::move(argv)), timeout_(timeout) {
  if (argv_.empty()) throw Error(ErrorKind::LaunchFailure, "empty adapter command");
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0) {
    throw Error(ErrorKind::LaunchFailure, std::string("pipe: ") + std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw Error(ErrorKind::LaunchFailure, "cannot start '" + argv_[0] + "': " + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

SubprocessTransport::~SubprocessTransport() { close(); }

std::string SubprocessTransport::describe() const {
  std::string s;
  for (const auto& a : argv_) s += (s.empty() ? "" : " ") + a;
  return s;
}

std::string SubprocessTransport::exit_status_text() {
  if (pid_ <= 0) return "adapter not running";
  int status = 0;
  // Give a dying child a moment to be reaped so the message names its exit.
  for (int i = 0; i < 50; ++i) {
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      pid_ = -1;
      if (WIFEXITED(status)) return "adapter exited with status " + std::to_string(WEXITSTATUS(status));
      if (WIFSIGNALED(status)) return "adapter killed by signal " + std::to_string(WTERMSIG(status));
      return "adapter stopped";
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return "adapter closed its output";
}

void SubprocessTransport::write_line(const std::string& line) {
  if (to_child_ < 0) throw Error(ErrorKind::AdapterCrash, "adapter input is closed");
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::AdapterCrash, "write failed (" + exit_status_text() + ")");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string SubprocessTransport::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      if (pid_ > 0) ::kill(pid_, SIGKILL);
      throw Error(ErrorKind::Timeout, "no response from '" + describe() + "' within " +
                                          std::to_string(timeout_.count()) + " ms");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int pr = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1'000'000)));
    if (pr < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::AdapterCrash, std::string("poll: ") + std::strerror(errno));
    }
    if (pr == 0) continue;
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::AdapterCrash, std::string("read: ") + std::strerror(errno));
    }
    if (n == 0) throw Error(ErrorKind::AdapterCrash, exit_status_text());
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::string SubprocessTransport::exchange(const std::string& request_line) {
  write_line(request_line);
  return read_line();
}

void SubprocessTransport::notify(const std::string& line) {
  try {
    write_line(line);
  } catch (const Error&) {
    // The adapter is already gone; close() reaps it.
  }
}

void SubprocessTransport::close() {
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    bool reaped = false;
    for (int i = 0; i < 200 && !reaped; ++i) {
      reaped = ::waitpid(pid_, &status, WNOHANG) == pid_;
      if (!reaped) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (!reaped) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }
  if (from_child_ >= 0) {
    ::close(from_child_);
    from_child_ = -1;
  }
}

// ---------------------------------------------------------------------------
// Replay

namespace {

constexpr const char* kReplayFormat = "protoscore-replay";

json parse_line(const std::string& line, ErrorKind kind, std::string_view what) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(kind, std::string(what) + " is not valid JSON: " + e.what());
  }
}

} // namespace

std::string replay_key(const std::string& request_line) {
  json req = parse_line(request_line, ErrorKind::ProtocolViolation, "request");
  req.erase("id");
  return req.dump();
}

void save_replay(const std::vector<Exchange>& transcript, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write replay file " + path.string());
  out << ordered_json{{"format", kReplayFormat}, {"version", kProtocolVersion}}.dump() << '\n';
  for (const auto& ex : transcript) {
    out << ordered_json{{"request", ex.request}, {"response", ex.response}}.dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

ReplayTransport::ReplayTransport(const fs::path& replay_file) : path_(replay_file) {
  std::ifstream in(replay_file);
  if (!in) throw Error(ErrorKind::LaunchFailure, "cannot open replay file " + replay_file.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::LaunchFailure, "empty replay file");
  const json header = parse_line(line, ErrorKind::LaunchFailure, "replay header");
  if (header.value("format", std::string()) != kReplayFormat) {
    throw Error(ErrorKind::LaunchFailure, replay_file.string() + " is not a replay file");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json entry = parse_line(line, ErrorKind::LaunchFailure, "replay entry");
    const auto request = entry.at("request").get<std::string>();
    entries_[replay_key(request)].responses.push_back(entry.at("response").get<std::string>());
  }
}

std::string ReplayTransport::describe() const { return "replay:" + path_.string(); }

std::string ReplayTransport::exchange(const std::string& request_line) {
  const json req = parse_line(request_line, ErrorKind::ProtocolViolation, "request");
  const auto it = entries_.find(replay_key(request_line));
  if (it == entries_.end()) {
    throw Error(ErrorKind::ReplayMiss, "request op '" + req.value("op", std::string("?")) +
                                           "' was not recorded in " + path_.string());
  }
  auto& entry = it->second;
  const std::string& stored = entry.responses[entry.cursor];
  if (entry.cursor + 1 < entry.responses.size()) ++entry.cursor;

  json resp = parse_line(stored, ErrorKind::ProtocolViolation, "recorded response");
  if (resp.contains("id") && req.contains("id") && resp.at("id") == req.at("id")) return stored;
  resp["id"] = req.at("id");
  return resp.dump();
}

// ---------------------------------------------------------------------------
// ModelChannel

ModelChannel::ModelChannel(std::unique_ptr<Transport> transport, TransportKind kind, ChannelOptions options)
    : transport_(std::move(transport)), kind_(kind), options_(options) {
  if (options_.chunk_rows < 1) throw Error(ErrorKind::InvalidConfig, "chunk_rows must be >= 1");
  if (const char* path = std::getenv(kTraceEnv); path != nullptr && *path != '\0') {
    trace_file_.reset(std::fopen(path, "a"));
  }
}

ModelChannel::ModelChannel(ModelChannel&&) noexcept = default;
ModelChannel& ModelChannel::operator=(ModelChannel&&) noexcept = default;

ModelChannel::~ModelChannel() {
  try {
    shutdown();
  } catch (...) {
  }
}

ModelChannel ModelChannel::handshake(std::unique_ptr<Transport> transport, TransportKind kind,
                                     ChannelOptions options) {
  ModelChannel ch(std::move(transport), kind, options);
  json hello_resp;
  try {
    hello_resp = ch.roundtrip(ordered_json{{"id", ch.next_id_++}, {"op", "hello"}});
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::AdapterCrash) throw Error(ErrorKind::LaunchFailure, e.what());
    if (e.kind() == ErrorKind::ProtocolViolation || e.kind() == ErrorKind::AdapterError) {
      throw Error(ErrorKind::MalformedHello, e.what());
    }
    throw;
  }
  if (!hello_resp.is_object()) throw Error(ErrorKind::MalformedHello, "hello result is not an object");
  for (const char* key : {"input_dim", "latent_dim", "num_classes", "protocol"}) {
    if (!hello_resp.contains(key) || !hello_resp.at(key).is_number_integer()) {
      throw Error(ErrorKind::MalformedHello, std::string("hello result lacks integer '") + key + "'");
    }
  }
  const int protocol = hello_resp.at("protocol").get<int>();
  if (protocol != kProtocolVersion) {
    throw Error(ErrorKind::ProtocolVersionMismatch, "adapter speaks protocol " + std::to_string(protocol) +
                                                        ", engine speaks " + std::to_string(kProtocolVersion));
  }
  ch.input_dim_ = hello_resp.at("input_dim").get<Index>();
  ch.latent_dim_ = hello_resp.at("latent_dim").get<Index>();
  ch.num_classes_ = hello_resp.at("num_classes").get<int>();
  if (ch.input_dim_ < 1 || ch.latent_dim_ < 1 || ch.num_classes_ < 1) {
    throw Error(ErrorKind::MalformedHello, "hello dimensions must be positive");
  }
  return ch;
}

void ModelChannel::trace(const std::string& line, char direction) {
  if (!trace_file_) return;
  std::fprintf(trace_file_.get(), "%c %s\n", direction, line.c_str());
  std::fflush(trace_file_.get());
}

json ModelChannel::roundtrip(const ordered_json& request) {
  if (!transport_) throw Error(ErrorKind::AdapterCrash, "channel is shut down");
  const std::string line = request.dump();
  trace(line, '>');
  const std::string reply = transport_->exchange(line);
  trace(reply, '<');
  if (options_.record) transcript_.push_back({line, reply});

  const json resp = parse_line(reply, ErrorKind::ProtocolViolation, "response");
  const auto want_id = request.at("id").get<std::int64_t>();
  if (!resp.is_object() || !resp.contains("id") || !resp.at("id").is_number_integer() ||
      resp.at("id").get<std::int64_t>() != want_id) {
    throw Error(ErrorKind::ProtocolViolation,
                "response id does not match request id " + request.at("id").dump());
  }
  if (resp.contains("error")) {
    const auto& err = resp.at("error");
    throw Error(ErrorKind::AdapterError, err.is_object() ? err.value("message", err.dump()) : err.dump());
  }
  if (!resp.contains("result")) throw Error(ErrorKind::ProtocolViolation, "response has no result");
  return resp.at("result");
}

json ModelChannel::call(const std::string& op, const Eigen::Ref<const Matrix>& chunk) {
  auto request_for = [&](std::int64_t id) {
    ordered_json data = ordered_json::array();
    for (Index r = 0; r < chunk.rows(); ++r) {
      ordered_json row = ordered_json::array();
      for (Index c = 0; c < chunk.cols(); ++c) row.push_back(chunk(r, c));
      data.push_back(std::move(row));
    }
    return ordered_json{{"id", id}, {"op", op}, {"data", std::move(data)}};
  };
  json result = roundtrip(request_for(next_id_++));
  if (options_.strict) {
    const json again = roundtrip(request_for(next_id_++));
    if (again != result) {
      throw Error(ErrorKind::ProtocolViolation, "adapter answered a repeated " + op + " request differently");
    }
  }
  return result;
}

namespace {

void require_batch(const Eigen::Ref<const Matrix>& batch, Index width, std::string_view op) {
  if (batch.cols() != width) {
    throw Error(ErrorKind::DimensionMismatch, std::string(op) + " batch has width " +
                                                  std::to_string(batch.cols()) + ", channel expects " +
                                                  std::to_string(width));
  }
  if (!batch.allFinite()) throw Error(ErrorKind::NonFiniteValue, std::string(op) + " batch has NaN/Inf");
}

} // namespace

Matrix ModelChannel::matrix_op(const std::string& op, const Eigen::Ref<const Matrix>& batch, Index in_dim,
                               Index out_dim) {
  require_batch(batch, in_dim, op);
  Matrix out(batch.rows(), out_dim);
  for (Index start = 0; start < batch.rows(); start += options_.chunk_rows) {
    const Index rows = std::min(options_.chunk_rows, batch.rows() - start);
    const json result = call(op, batch.middleRows(start, rows));
    if (!result.is_array() || static_cast<Index>(result.size()) != rows) {
      throw Error(ErrorKind::DimensionMismatch, op + " returned a batch of the wrong length");
    }
    for (Index r = 0; r < rows; ++r) {
      const auto& row = result[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Index>(row.size()) != out_dim) {
        throw Error(ErrorKind::DimensionMismatch, op + " row " + std::to_string(start + r) + " has width " +
                                                      std::to_string(row.is_array() ? row.size() : 0) +
                                                      ", expected " + std::to_string(out_dim));
      }
      for (Index c = 0; c < out_dim; ++c) {
        const auto& v = row[static_cast<std::size_t>(c)];
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
          throw Error(ErrorKind::NonFiniteResponse, op + " row " + std::to_string(start + r) + " is not finite");
        }
        out(start + r, c) = v.get<double>();
      }
    }
  }
  return out;
}

Matrix ModelChannel::encode(const Eigen::Ref<const Matrix>& batch) {
  return matrix_op("encode", batch, input_dim_, latent_dim_);
}

Matrix ModelChannel::decode(const Eigen::Ref<const Matrix>& batch) {
  return matrix_op("decode", batch, latent_dim_, input_dim_);
}

Labels ModelChannel::classify(const Eigen::Ref<const Matrix>& batch) {
  require_batch(batch, latent_dim_, "classify");
  Labels out;
  out.reserve(static_cast<std::size_t>(batch.rows()));
  for (Index start = 0; start < batch.rows(); start += options_.chunk_rows) {
    const Index rows = std::min(options_.chunk_rows, batch.rows() - start);
    const json result = call("classify", batch.middleRows(start, rows));
    if (!result.is_array() || static_cast<Index>(result.size()) != rows) {
      throw Error(ErrorKind::DimensionMismatch, "classify returned a batch of the wrong length");
    }
    for (const auto& v : result) {
      if (!v.is_number_integer()) throw Error(ErrorKind::ProtocolViolation, "classify label is not an integer");
      const int label = v.get<int>();
      if (label < 0 || label >= num_classes_) {
        throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(label) + " outside [0, " +
                                                    std::to_string(num_classes_ - 1) + "]");
      }
      out.push_back(label);
    }
  }
  return out;
}

void ModelChannel::shutdown() {
  if (!transport_) return;
  const std::string line = ordered_json{{"id", next_id_++}, {"op", "shutdown"}}.dump();
  trace(line, '>');
  transport_->notify(line);
  transport_->close();
  transport_.reset();
}

// ---------------------------------------------------------------------------

std::vector<std::string> split_command(const std::string& command_line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_word = false;
  char quote = 0;
  for (const char c : command_line) {
    if (quote != 0) {
      if (c == quote) {
        quote = 0;
      } else {
        cur.push_back(c);
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      if (in_word) out.push_back(std::exchange(cur, {}));
      in_word = false;
    } else {
      cur.push_back(c);
      in_word = true;
    }
  }
  if (in_word) out.push_back(cur);
  return out;
}

ModelChannel open_channel(const AdapterDescriptor& descriptor, ChannelOptions options) {
  if (descriptor.is_replay()) {
    if (descriptor.replay_path.empty()) throw Error(ErrorKind::LaunchFailure, "adapter descriptor is empty");
    return ModelChannel::handshake(std::make_unique<ReplayTransport>(descriptor.replay_path),
                                   TransportKind::replay, options);
  }
  return ModelChannel::handshake(std::make_unique<SubprocessTransport>(descriptor.command, options.timeout),
                                 TransportKind::subprocess, options);
}

void record_replay(ModelChannel& channel, const std::vector<ScriptStep>& script, const fs::path& path) {
  for (const auto& step : script) {
    if (step.op == "encode") {
      channel.encode(step.batch);
    } else if (step.op == "decode") {
      channel.decode(step.batch);
    } else if (step.op == "classify") {
      channel.classify(step.batch);
    } else {
      throw Error(ErrorKind::InvalidConfig, "unknown script op '" + step.op + "'");
    }
  }
  if (channel.transcript().empty()) {
    throw Error(ErrorKind::InvalidConfig, "channel was not opened with recording enabled");
  }
  save_replay(channel.transcript(), path);
}

} // namespace protoscore::adapter
