// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/bridge.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <thread>

#include "json_support.hpp"
#include "vistory/codec.hpp"
#include "vistory/errors.hpp"

namespace vistory {

namespace {

using detail::json;
using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

json image_to_json(const ImageHandle& image) {
  return json{{"encoding", "base64"},
              {"data", codec::base64_encode(image.payload)},
              {"format", image.format},
              {"width", image.width},
              {"height", image.height},
              {"channels", image.channels}};
}

ImageHandle image_from_json(const json& doc) {
  ImageHandle image;
  try {
    const auto encoding = doc.at("encoding").get<std::string>();
    if (encoding == "base64") {
      image.payload = codec::base64_decode(doc.at("data").get<std::string>());
    } else if (encoding == "path") {
      const auto path = doc.at("path").get<std::string>();
      std::ifstream in(path, std::ios::binary);
      if (!in) throw BackendError("bridge image file '" + path + "' is not readable");
      image.payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    } else {
      throw ProtocolError("unknown image encoding '" + encoding + "'");
    }
    image.format = doc.value("format", std::string());
    image.width = doc.value("width", 0u);
    image.height = doc.value("height", 0u);
    image.channels = doc.value("channels", 0u);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed image in bridge response: ") + e.what());
  } catch (const FormatError& e) {
    throw ProtocolError(std::string("malformed image in bridge response: ") + e.what());
  }
  return image;
}

}  // namespace

struct BridgeSession::Impl {
  std::string command;
  BridgeOptions options;
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  std::string write_buffer;
  std::string read_buffer;
  std::uint64_t next_id = 1;
  bool aborted = false;
  bool closed = false;
  std::size_t peak = 0;
  BridgeHandshake handshake;

  ~Impl() { terminate(true); }

  void start() {
    ignore_sigpipe();
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw BackendError("pipe failed: " + std::string(std::strerror(errno)));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      throw BackendError("pipe failed: " + std::string(std::strerror(errno)));
    }
    pid = ::fork();
    if (pid < 0) throw BackendError("fork failed: " + std::string(std::strerror(errno)));
    if (pid == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child = in_pipe[1];
    from_child = out_pipe[0];
    ::fcntl(to_child, F_SETFL, ::fcntl(to_child, F_GETFL) | O_NONBLOCK);
    ::fcntl(from_child, F_SETFL, ::fcntl(from_child, F_GETFL) | O_NONBLOCK);
  }

  void close_fds() {
    if (to_child >= 0) ::close(to_child);
    if (from_child >= 0) ::close(from_child);
    to_child = from_child = -1;
  }

  void terminate(bool graceful) {
    if (closed) return;
    closed = true;
    if (graceful && !aborted && to_child >= 0) {
      write_buffer = json{{"id", next_id++}, {"op", "shutdown"}, {"params", json::object()}}.dump() + "\n";
      try {
        flush(Clock::now() + std::chrono::milliseconds(500));
      } catch (const Error&) {
      }
    }
    if (to_child >= 0) {
      ::close(to_child);
      to_child = -1;
    }
    if (pid > 0) {
      const auto deadline = Clock::now() + std::chrono::milliseconds(graceful ? 2000 : 0);
      int status = 0;
      while (::waitpid(pid, &status, WNOHANG) == 0) {
        if (Clock::now() >= deadline) {
          ::kill(pid, SIGKILL);
          ::waitpid(pid, &status, 0);
          break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
      }
      pid = -1;
    }
    close_fds();
  }

  template <typename E>
  [[noreturn]] void abort_with(const E& error) {
    aborted = true;
    terminate(false);
    throw error;
  }

  void ensure_usable() const {
    if (aborted) throw BackendError("bridge session was aborted");
    if (closed) throw BackendError("bridge session is shut down");
  }

  /// Moves bytes in both directions until `done()` or the deadline.
  template <typename Done>
  void pump(Clock::time_point deadline, Done done) {
    while (!done()) {
      const auto now = Clock::now();
      if (now >= deadline) abort_with(BackendError("bridge timed out after " + std::to_string(options.timeout.count()) + " ms"));
      pollfd fds[2];
      nfds_t n = 0;
      fds[n++] = {from_child, POLLIN, 0};
      if (!write_buffer.empty()) fds[n++] = {to_child, POLLOUT, 0};
      const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
      const int rc = ::poll(fds, n, static_cast<int>(std::min<long long>(wait + 1, 1000)));
      if (rc < 0) {
        if (errno == EINTR) continue;
        abort_with(BackendError("poll failed: " + std::string(std::strerror(errno))));
      }
      if (n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        const ssize_t w = ::write(to_child, write_buffer.data(), write_buffer.size());
        if (w < 0 && errno != EAGAIN && errno != EINTR) abort_with(BackendError("bridge closed its input"));
        if (w > 0) write_buffer.erase(0, static_cast<std::size_t>(w));
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[65536];
        const ssize_t r = ::read(from_child, buf, sizeof buf);
        if (r == 0) abort_with(BackendError("bridge process closed its output"));
        if (r < 0 && errno != EAGAIN && errno != EINTR) abort_with(BackendError("reading from bridge failed"));
        if (r > 0) read_buffer.append(buf, static_cast<std::size_t>(r));
      }
    }
  }

  void flush(Clock::time_point deadline) {
    pump(deadline, [&] { return write_buffer.empty(); });
  }

  std::string next_line() {
    const auto deadline = Clock::now() + options.timeout;
    pump(deadline, [&] { return read_buffer.find('\n') != std::string::npos; });
    const auto nl = read_buffer.find('\n');
    std::string line = read_buffer.substr(0, nl);
    read_buffer.erase(0, nl + 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  std::vector<json> call(std::string_view op, const std::vector<json>& params, std::size_t max_in_flight) {
    ensure_usable();
    std::vector<json> results(params.size());
    std::map<std::uint64_t, std::size_t> pending;
    std::size_t next = 0;
    std::optional<std::pair<std::size_t, std::string>> failure;
    max_in_flight = std::max<std::size_t>(1, max_in_flight);
    while (!pending.empty() || (next < params.size() && !failure)) {
      while (!failure && next < params.size() && pending.size() < max_in_flight) {
        const std::uint64_t id = next_id++;
        write_buffer += json{{"id", id}, {"op", op}, {"params", params[next]}}.dump() + "\n";
        pending.emplace(id, next++);
        peak = std::max(peak, pending.size());
      }
      const std::string line = next_line();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      json response;
      try {
        response = json::parse(line);
      } catch (const json::parse_error& e) {
        abort_with(ProtocolError(std::string("malformed JSON from bridge: ") + e.what()));
      }
      if (!response.is_object() || !response.contains("id") || !response["id"].is_number_unsigned() ||
          !response.contains("ok") || !response["ok"].is_boolean()) {
        abort_with(ProtocolError("bridge response lacks an integer id or boolean ok"));
      }
      const auto it = pending.find(response["id"].get<std::uint64_t>());
      if (it == pending.end()) {
        abort_with(ProtocolError("bridge answered unknown or already answered id " + response["id"].dump()));
      }
      const std::size_t index = it->second;
      pending.erase(it);
      if (response["ok"].get<bool>()) {
        if (!response.contains("result") || !response["result"].is_object()) {
          abort_with(ProtocolError("bridge success response without a result object"));
        }
        results[index] = std::move(response["result"]);
      } else {
        std::string message = response.contains("error") && response["error"].is_string()
                                  ? response["error"].get<std::string>()
                                  : std::string("unspecified error");
        if (!failure || index < failure->first) failure.emplace(index, std::move(message));
      }
    }
    if (failure) {
      throw BackendError("bridge " + std::string(op) + " request " + std::to_string(failure->first) +
                         " failed: " + failure->second);
    }
    return results;
  }

  void read_handshake(const json& r) {
    auto& h = handshake;
    try {
      h.protocol_version = r.at("protocol_version").get<int>();
      h.num_classes = r.at("num_classes").get<std::size_t>();
      h.latent_dim = r.at("latent_dim").get<std::size_t>();
      h.image_size = r.value("image_size", 0u);
      h.supports_stylize = r.value("supports_stylize", false);
      h.max_concurrent = r.value("max_concurrent", std::size_t{1});
      h.deterministic = r.value("deterministic", true);
      h.attribute_dim = r.value("attribute_dim", std::size_t{2});
      h.payload = r.value("payload", std::string("base64"));
      if (r.contains("attribute_stats")) {
        ZScoreStats stats;
        stats.mean = r["attribute_stats"].at("mean").get<std::vector<double>>();
        stats.stddev = r["attribute_stats"].at("std").get<std::vector<double>>();
        for (double& s : stats.stddev) s = std::max(s, ZScoreStats::kStdFloor);
        h.attribute_stats = std::move(stats);
      }
    } catch (const json::exception& e) {
      abort_with(ProtocolError(std::string("malformed handshake: ") + e.what()));
    }
    if (h.protocol_version != kBridgeProtocolVersion) {
      abort_with(ProtocolError("bridge speaks protocol " + std::to_string(h.protocol_version) + ", expected " +
                               std::to_string(kBridgeProtocolVersion)));
    }
    if (h.num_classes == 0 || h.latent_dim == 0 || h.attribute_dim == 0 || h.max_concurrent == 0) {
      abort_with(ProtocolError("handshake declares a zero dimension or concurrency"));
    }
    if (h.payload != "base64" && h.payload != "path") abort_with(ProtocolError("unknown payload mode '" + h.payload + "'"));
  }
};

BridgeSession::BridgeSession(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

BridgeSession::~BridgeSession() = default;

std::shared_ptr<BridgeSession> BridgeSession::launch(const std::string& command, BridgeOptions options) {
  auto impl = std::make_unique<Impl>();
  impl->command = command;
  impl->options = options;
  impl->start();
  const json params = {{"protocol_version", kBridgeProtocolVersion}, {"payload_modes", {"path", "base64"}}};
  const auto result = impl->call("handshake", {params}, 1);
  impl->read_handshake(result.front());
  impl->peak = 0;
  return std::shared_ptr<BridgeSession>(new BridgeSession(std::move(impl)));
}

const BridgeHandshake& BridgeSession::handshake() const noexcept { return impl_->handshake; }

bool BridgeSession::aborted() const noexcept { return impl_->aborted; }

std::size_t BridgeSession::peak_in_flight() const noexcept { return impl_->peak; }

void BridgeSession::shutdown() { impl_->terminate(true); }

std::vector<std::string> BridgeSession::call(std::string_view op, std::span<const std::string> params) {
  std::vector<json> docs;
  docs.reserve(params.size());
  for (const auto& p : params) {
    try {
      docs.push_back(json::parse(p));
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("request params: ") + e.what(), e.byte);
    }
  }
  const auto results = impl_->call(op, docs, impl_->handshake.max_concurrent);
  std::vector<std::string> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(r.dump());
  return out;
}

std::vector<ImageHandle> BridgeSession::generate(std::span<const GeneratorVector> generators) {
  std::vector<json> params;
  params.reserve(generators.size());
  for (const auto& g : generators) params.push_back(detail::generator_to_json(g));
  const auto results = impl_->call("generate", params, impl_->handshake.max_concurrent);
  std::vector<ImageHandle> images;
  images.reserve(results.size());
  for (const auto& r : results) {
    if (!r.contains("image")) impl_->abort_with(ProtocolError("generate result without an image"));
    images.push_back(image_from_json(r["image"]));
  }
  return images;
}

std::vector<AttributeVector> BridgeSession::estimate(std::span<const ImageHandle> images) {
  std::vector<json> params;
  params.reserve(images.size());
  for (const auto& image : images) params.push_back({{"image", image_to_json(image)}});
  const auto results = impl_->call("estimate", params, impl_->handshake.max_concurrent);
  std::vector<AttributeVector> attrs;
  attrs.reserve(results.size());
  for (const auto& r : results) {
    std::vector<double> values;
    try {
      values = r.at("attributes").get<std::vector<double>>();
    } catch (const json::exception& e) {
      impl_->abort_with(ProtocolError(std::string("estimate result: ") + e.what()));
    }
    if (values.size() != impl_->handshake.attribute_dim) {
      throw DimensionError("bridge attributes", impl_->handshake.attribute_dim, values.size());
    }
    attrs.emplace_back(std::move(values));
  }
  return attrs;
}

ImageHandle BridgeSession::stylize(const ImageHandle& content, const ImageHandle& style, double blend) {
  if (!impl_->handshake.supports_stylize) throw CapabilityError("bridge does not support stylization");
  const json params = {{"content", image_to_json(content)}, {"style", image_to_json(style)}, {"blend", blend}};
  const auto results = impl_->call("stylize", {params}, 1);
  if (!results.front().contains("image")) impl_->abort_with(ProtocolError("stylize result without an image"));
  return image_from_json(results.front()["image"]);
}

BridgeBackend::BridgeBackend(std::shared_ptr<BridgeSession> session) : session_(std::move(session)) {
  if (!session_) throw ConfigError("bridge backend without a session");
}

std::size_t BridgeBackend::num_classes() const { return session_->handshake().num_classes; }

std::size_t BridgeBackend::latent_dim() const { return session_->handshake().latent_dim; }

BackendCapabilities BridgeBackend::capabilities() const {
  const auto& h = session_->handshake();
  BackendCapabilities caps;
  caps.supports_stylize = h.supports_stylize;
  caps.max_concurrent_requests = h.max_concurrent;
  caps.deterministic = h.deterministic;
  caps.has_pixels = true;
  caps.image_size = h.image_size;
  return caps;
}

ImageHandle BridgeBackend::generate(const GeneratorVector& generator) {
  check_domain(generator);
  return session_->generate(std::span<const GeneratorVector>(&generator, 1)).front();
}

std::vector<ImageHandle> BridgeBackend::generate_batch(std::span<const GeneratorVector> generators) {
  for (const auto& g : generators) check_domain(g);
  return session_->generate(generators);
}

ImageHandle BridgeBackend::stylize(const ImageHandle& content, const ImageHandle& style, double blend) {
  return session_->stylize(content, style, blend);
}

BridgeEstimator::BridgeEstimator(std::shared_ptr<BridgeSession> session) : session_(std::move(session)) {
  if (!session_) throw ConfigError("bridge estimator without a session");
}

AttributeVector BridgeEstimator::estimate(const ImageHandle& image) {
  return session_->estimate(std::span<const ImageHandle>(&image, 1)).front();
}

std::vector<AttributeVector> BridgeEstimator::estimate_batch(std::span<const ImageHandle> images) {
  return session_->estimate(images);
}

std::size_t BridgeEstimator::attribute_dim() const { return session_->handshake().attribute_dim; }

bool BridgeEstimator::deterministic() const { return session_->handshake().deterministic; }

}  // namespace vistory
