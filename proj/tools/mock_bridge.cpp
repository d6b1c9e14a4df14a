// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

// Scripted stand-in for an external generator/estimator process. Speaks the
// stdio protocol of vistory::BridgeSession with tiny solid-colour PPM images
// and knobs for exercising error paths.

#include <poll.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "vistory/codec.hpp"
#include "vistory/stylizer.hpp"

namespace {

using nlohmann::json;

struct Options {
  std::size_t classes = 10;
  std::size_t latent_dim = 4;
  std::uint32_t image_size = 8;
  std::size_t max_concurrent = 1;
  std::string payload = "base64";
  bool reverse = false;
  bool no_stylize = false;
  bool hang = false;
  long fail_class = -1;
  std::string fail_op;
  long malformed_after = -1;
  long exit_after = -1;
};

std::uint8_t channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

class MockBridge {
 public:
  explicit MockBridge(Options opts) : opts_(std::move(opts)) {
    if (opts_.payload == "path") {
      char tmpl[] = "/tmp/vistory-mock-XXXXXX";
      if (::mkdtemp(tmpl) == nullptr) std::exit(1);
      image_dir_ = tmpl;
    }
  }

  ~MockBridge() {
    if (!image_dir_.empty()) {
      std::error_code ec;
      std::filesystem::remove_all(image_dir_, ec);
    }
  }

  int run() {
    std::string buffer;
    std::vector<std::string> pending;
    bool eof = false;
    while (!eof || !pending.empty()) {
      const bool batch_full = pending.size() >= opts_.max_concurrent;
      if (!eof && !batch_full) {
        pollfd fd{STDIN_FILENO, POLLIN, 0};
        const int timeout = (opts_.reverse && !pending.empty()) ? 30 : -1;
        const int rc = ::poll(&fd, 1, timeout);
        if (rc > 0) {
          char chunk[65536];
          const ssize_t n = ::read(STDIN_FILENO, chunk, sizeof chunk);
          if (n <= 0) {
            eof = true;
          } else {
            buffer.append(chunk, static_cast<std::size_t>(n));
          }
          std::size_t nl;
          while ((nl = buffer.find('\n')) != std::string::npos) {
            pending.push_back(buffer.substr(0, nl));
            buffer.erase(0, nl + 1);
          }
          if (!opts_.reverse) {
            for (const auto& line : pending) {
              if (!handle(line)) return 0;
            }
            pending.clear();
          }
          continue;
        }
      }
      std::reverse(pending.begin(), pending.end());
      for (const auto& line : pending) {
        if (!handle(line)) return 0;
      }
      pending.clear();
    }
    return 0;
  }

 private:
  /// Returns false once the session should end.
  bool handle(const std::string& line) {
    if (line.empty()) return true;
    json request;
    try {
      request = json::parse(line);
    } catch (const json::exception& e) {
      emit({{"id", nullptr}, {"ok", false}, {"error", std::string("bad request: ") + e.what()}});
      return true;
    }
    const json id = request.value("id", json(nullptr));
    const std::string op = request.value("op", std::string());
    if (op == "handshake" && opts_.hang) return true;
    if (opts_.exit_after >= 0 && answered_ >= opts_.exit_after) std::_Exit(3);
    if (opts_.malformed_after >= 0 && answered_ >= opts_.malformed_after) {
      std::fputs("{this is not json\n", stdout);
      std::fflush(stdout);
      ++answered_;
      return true;
    }
    if (op == "shutdown") {
      emit({{"id", id}, {"ok", true}, {"result", json::object()}});
      return false;
    }
    try {
      if (!opts_.fail_op.empty() && op == opts_.fail_op) throw std::runtime_error("injected failure for " + op);
      emit({{"id", id}, {"ok", true}, {"result", dispatch(op, request.value("params", json::object()))}});
    } catch (const std::exception& e) {
      emit({{"id", id}, {"ok", false}, {"error", e.what()}});
    }
    return true;
  }

  json dispatch(const std::string& op, const json& params) {
    if (op == "handshake") {
      return {{"protocol_version", 1},
              {"num_classes", opts_.classes},
              {"latent_dim", opts_.latent_dim},
              {"image_size", opts_.image_size},
              {"supports_stylize", !opts_.no_stylize},
              {"max_concurrent", opts_.max_concurrent},
              {"deterministic", true},
              {"attribute_dim", 2},
              {"payload", opts_.payload},
              {"attribute_stats", {{"mean", {0.0, 0.0}}, {"std", {1.0, 1.0}}}}};
    }
    if (op == "generate") {
      const auto cls = params.at("class_id").get<long>();
      const auto latent = params.at("latent").get<std::vector<double>>();
      if (cls < 0 || static_cast<std::size_t>(cls) >= opts_.classes) throw std::runtime_error("class id out of range");
      if (latent.size() != opts_.latent_dim) throw std::runtime_error("latent has the wrong length");
      if (cls == opts_.fail_class) throw std::runtime_error("injected failure for class " + std::to_string(cls));
      const std::uint8_t r = static_cast<std::uint8_t>((cls * 37) % 256);
      const std::uint8_t g = channel(127.5 + 60.0 * latent[0]);
      const std::uint8_t b = channel(127.5 + 60.0 * (latent.size() > 1 ? latent[1] : 0.0));
      std::vector<std::uint8_t> rgb;
      rgb.reserve(static_cast<std::size_t>(opts_.image_size) * opts_.image_size * 3);
      for (std::size_t i = 0; i < static_cast<std::size_t>(opts_.image_size) * opts_.image_size; ++i) {
        rgb.insert(rgb.end(), {r, g, b});
      }
      return {{"image", encode(vistory::make_ppm(opts_.image_size, opts_.image_size, rgb))}};
    }
    if (op == "estimate") {
      const auto image = decode(params.at("image"));
      const auto pixels = vistory::ppm_pixels(image);
      double sum[3] = {0, 0, 0};
      for (std::size_t i = 0; i < pixels.size(); ++i) sum[i % 3] += pixels[i];
      const double count = static_cast<double>(pixels.size() / 3);
      return {{"attributes", {(sum[1] / count - 127.5) / 60.0, (sum[2] / count - 127.5) / 60.0}}};
    }
    if (op == "stylize") {
      if (opts_.no_stylize) throw std::runtime_error("stylize is not supported");
      const auto content = decode(params.at("content"));
      const auto style = decode(params.at("style"));
      const double blend = params.at("blend").get<double>();
      const auto a = vistory::ppm_pixels(content);
      const auto s = vistory::ppm_pixels(style);
      std::vector<std::uint8_t> out(a.begin(), a.end());
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double styled = s.empty() ? a[i] : s[i % s.size()];
        out[i] = channel((1.0 - blend) * a[i] + blend * styled);
      }
      return {{"image", encode(vistory::make_ppm(content.width, content.height, out))}};
    }
    throw std::runtime_error("unknown op '" + op + "'");
  }

  json encode(const vistory::ImageHandle& image) {
    json out = {{"format", image.format}, {"width", image.width}, {"height", image.height}, {"channels", image.channels}};
    if (opts_.payload == "path") {
      const auto path = image_dir_ / ("img_" + std::to_string(file_counter_++) + ".ppm");
      std::ofstream f(path, std::ios::binary);
      f.write(reinterpret_cast<const char*>(image.payload.data()), static_cast<std::streamsize>(image.payload.size()));
      out["encoding"] = "path";
      out["path"] = path.string();
    } else {
      out["encoding"] = "base64";
      out["data"] = vistory::codec::base64_encode(image.payload);
    }
    return out;
  }

  static vistory::ImageHandle decode(const json& doc) {
    vistory::ImageHandle image;
    image.payload = vistory::codec::base64_decode(doc.at("data").get<std::string>());
    image.format = doc.value("format", std::string("ppm"));
    image.width = doc.value("width", 0u);
    image.height = doc.value("height", 0u);
    image.channels = doc.value("channels", 0u);
    return image;
  }

  void emit(const json& response) {
    const std::string text = response.dump() + "\n";
    std::fwrite(text.data(), 1, text.size(), stdout);
    std::fflush(stdout);
    ++answered_;
  }

  Options opts_;
  std::filesystem::path image_dir_;
  long answered_ = 0;
  std::size_t file_counter_ = 0;
};

}  // namespace

int main(int argc, char** argv) {
  Options opts;
  CLI::App app{"Scripted bridge process for protocol tests"};
  app.add_option("--classes", opts.classes, "Declared number of classes K");
  app.add_option("--latent-dim", opts.latent_dim, "Declared latent dimension d");
  app.add_option("--image-size", opts.image_size, "Side length of generated images");
  app.add_option("--max-concurrent", opts.max_concurrent, "Declared request concurrency")->check(CLI::PositiveNumber);
  app.add_option("--payload", opts.payload, "Image payload mode")->check(CLI::IsMember({"base64", "path"}));
  app.add_flag("--reverse", opts.reverse, "Answer each batch of pending requests in reverse order");
  app.add_flag("--no-stylize", opts.no_stylize, "Declare no stylization support");
  app.add_flag("--hang", opts.hang, "Never answer the handshake");
  app.add_option("--fail-class", opts.fail_class, "Answer generate for this class with an error");
  app.add_option("--fail-op", opts.fail_op, "Answer every request of this op with an error");
  app.add_option("--malformed-after", opts.malformed_after, "Emit a non-JSON line after this many responses");
  app.add_option("--exit-after", opts.exit_after, "Exit abruptly after this many responses");
  CLI11_PARSE(app, argc, argv);
  return MockBridge(opts).run();
}
