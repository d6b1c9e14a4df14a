// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

// Client side of the external backend protocol: newline-delimited JSON
// over a child process's stdin/stdout.
//
//   request   {"id": n, "op": "...", "params": {...}}
//   response  {"id": n, "ok": true, "result": {...}}
//          or {"id": n, "ok": false, "error": "message"}
//
// Ops: handshake, generate, estimate, stylize, shutdown. Images travel as
// {"encoding": "base64", "data": ...} or {"encoding": "path", "path": ...}
// plus format/width/height/channels. The client always sends base64 and
// accepts either encoding back.

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vistory/core_types.hpp"
#include "vistory/estimators.hpp"
#include "vistory/generator_backend.hpp"

namespace vistory {

inline constexpr int kBridgeProtocolVersion = 1;

struct BridgeHandshake {
  int protocol_version = kBridgeProtocolVersion;
  std::size_t num_classes = 0;
  std::size_t latent_dim = 0;
  std::size_t attribute_dim = 2;
  std::uint32_t image_size = 0;
  bool supports_stylize = false;
  std::size_t max_concurrent = 1;
  bool deterministic = true;
  /// "base64" or "path".
  std::string payload = "base64";
  /// Statistics of the bridge estimator's training set, when reported.
  std::optional<ZScoreStats> attribute_stats;
};

struct BridgeOptions {
  /// Applies to the handshake and to each awaited response.
  std::chrono::milliseconds timeout{30000};
};

/// One child process and its protocol state. Not thread-safe.
///
/// Error responses raise BackendError and leave the session usable.
/// Malformed output, unknown or duplicate ids and timeouts raise
/// ProtocolError / BackendError and abort the session (the child is
/// killed); later calls raise BackendError.
class BridgeSession {
 public:
  /// Runs `command` through /bin/sh and performs the handshake.
  static std::shared_ptr<BridgeSession> launch(const std::string& command, BridgeOptions options = {});

  ~BridgeSession();
  BridgeSession(const BridgeSession&) = delete;
  BridgeSession& operator=(const BridgeSession&) = delete;

  const BridgeHandshake& handshake() const noexcept;
  bool aborted() const noexcept;

  /// Issues one `op` request per params object (JSON text), keeping at most
  /// max_concurrent in flight. Returns the result objects (JSON text) in
  /// input order. After an error response no new requests are sent; the
  /// in-flight ones are drained before BackendError is raised.
  std::vector<std::string> call(std::string_view op, std::span<const std::string> params);

  std::vector<ImageHandle> generate(std::span<const GeneratorVector> generators);
  std::vector<AttributeVector> estimate(std::span<const ImageHandle> images);
  ImageHandle stylize(const ImageHandle& content, const ImageHandle& style, double blend);

  /// Largest number of requests that were in flight at once.
  std::size_t peak_in_flight() const noexcept;

  /// Asks the child to exit, then kills it if it lingers. Idempotent.
  void shutdown();

 private:
  struct Impl;
  explicit BridgeSession(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

class BridgeBackend final : public GeneratorBackend {
 public:
  explicit BridgeBackend(std::shared_ptr<BridgeSession> session);

  std::size_t num_classes() const override;
  std::size_t latent_dim() const override;
  BackendCapabilities capabilities() const override;
  ImageHandle generate(const GeneratorVector& generator) override;
  std::vector<ImageHandle> generate_batch(std::span<const GeneratorVector> generators) override;
  ImageHandle stylize(const ImageHandle& content, const ImageHandle& style, double blend) override;

 private:
  std::shared_ptr<BridgeSession> session_;
};

class BridgeEstimator final : public VisualAttributeEstimator {
 public:
  explicit BridgeEstimator(std::shared_ptr<BridgeSession> session);

  AttributeVector estimate(const ImageHandle& image) override;
  std::vector<AttributeVector> estimate_batch(std::span<const ImageHandle> images) override;
  std::size_t attribute_dim() const override;
  std::string tag() const override { return "external_backend"; }
  bool deterministic() const override;

 private:
  std::shared_ptr<BridgeSession> session_;
};

}  // namespace vistory
