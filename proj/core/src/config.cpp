// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/config.hpp"

#include <cctype>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "vistory/errors.hpp"

namespace vistory {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  }
  return true;
}

class ValueParser {
 public:
  ValueParser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  ConfigValue parse() {
    ConfigValue out;
    out.line = line_;
    skip_space();
    if (peek() == '[') {
      ++pos_;
      std::vector<ConfigScalar> items;
      skip_space();
      if (peek() == ']') {
        ++pos_;
      } else {
        while (true) {
          items.push_back(scalar());
          skip_space();
          if (peek() == ',') {
            ++pos_;
            skip_space();
            if (peek() == ']') {
              ++pos_;
              break;
            }
            continue;
          }
          if (peek() == ']') {
            ++pos_;
            break;
          }
          fail(line_, "expected ',' or ']' in array");
        }
      }
      out.value = std::move(items);
    } else {
      std::visit([&](auto&& v) { out.value = v; }, scalar());
    }
    skip_space();
    if (peek() == '#') pos_ = text_.size();
    if (pos_ != text_.size()) fail(line_, "unexpected trailing characters");
    return out;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  ConfigScalar scalar() {
    const char c = peek();
    if (c == '"') return string();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != '#' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    const std::string_view token = text_.substr(start, pos_ - start);
    if (token == "true") return true;
    if (token == "false") return false;
    double value = 0.0;
    std::string digits(token);
    digits.erase(std::remove(digits.begin(), digits.end(), '_'), digits.end());
    const char* first = digits.data();
    if (!digits.empty() && digits.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, digits.data() + digits.size(), value);
    if (token.empty() || ec != std::errc() || ptr != digits.data() + digits.size() || !std::isfinite(value)) {
      fail(line_, "invalid value '" + std::string(token) + "'");
    }
    return value;
  }

  std::string string() {
    ++pos_;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      char c = text_[pos_++];
      if (c == '\\') {
        if (pos_ >= text_.size()) break;
        const char e = text_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(line_, std::string("unknown escape '\\") + e + "'");
        }
      }
      out.push_back(c);
    }
    if (pos_ >= text_.size()) fail(line_, "unterminated string");
    ++pos_;
    return out;
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

const char* type_name(const ConfigValue& v) {
  switch (v.value.index()) {
    case 0: return "boolean";
    case 1: return "number";
    case 2: return "string";
    default: return "array";
  }
}

double number(const ConfigValue& v, const std::string& key) {
  if (const auto* d = std::get_if<double>(&v.value)) return *d;
  fail(v.line, "'" + key + "' expects a number, got " + type_name(v));
}

std::size_t count(const ConfigValue& v, const std::string& key) {
  const double d = number(v, key);
  if (d < 0 || d != std::floor(d) || d > 9.0e15) fail(v.line, "'" + key + "' expects a non-negative integer");
  return static_cast<std::size_t>(d);
}

std::string text(const ConfigValue& v, const std::string& key) {
  if (const auto* s = std::get_if<std::string>(&v.value)) return *s;
  fail(v.line, "'" + key + "' expects a string, got " + type_name(v));
}

std::vector<double> numbers(const ConfigValue& v, const std::string& key) {
  const auto* items = std::get_if<std::vector<ConfigScalar>>(&v.value);
  if (items == nullptr) fail(v.line, "'" + key + "' expects an array of numbers");
  std::vector<double> out;
  for (const auto& item : *items) {
    const auto* d = std::get_if<double>(&item);
    if (d == nullptr) fail(v.line, "'" + key + "' expects an array of numbers");
    out.push_back(*d);
  }
  return out;
}

using Setter = std::function<void(const ConfigValue&, const std::string&)>;
using Schema = std::map<std::string, std::map<std::string, Setter>>;

Schema make_schema(RunConfig& cfg, std::vector<double>& epochs, std::vector<double>& rates) {
  auto sz = [](std::size_t& field) { return [&field](const ConfigValue& v, const std::string& k) { field = count(v, k); }; };
  auto u64 = [](std::uint64_t& field) {
    return [&field](const ConfigValue& v, const std::string& k) { field = static_cast<std::uint64_t>(count(v, k)); };
  };
  auto real = [](double& field) { return [&field](const ConfigValue& v, const std::string& k) { field = number(v, k); }; };

  auto& f = cfg.features;
  auto& t = cfg.translator;
  auto& s = cfg.story;
  return {
      {"features",
       {{"sample_rate", real(f.sample_rate)},
        {"fft_size", sz(f.fft_size)},
        {"hop_length", sz(f.hop_length)},
        {"mel_bands", sz(f.mel_bands)},
        {"mfcc_count", sz(f.mfcc_count)},
        {"cens_smoothing_window", sz(f.cens_smoothing_window)},
        {"cens_downsample", sz(f.cens_downsample)},
        {"tempogram_window", sz(f.tempogram_window)},
        {"window_ms", real(f.window_ms)}}},
      {"audio_training",
       {{"epochs", [&epochs](const ConfigValue& v, const std::string& k) { epochs = numbers(v, k); }},
        {"learning_rates", [&rates](const ConfigValue& v, const std::string& k) { rates = numbers(v, k); }},
        {"batch_size", sz(cfg.audio_training.batch_size)},
        {"seed", u64(cfg.audio_training.seed)}}},
      {"synthetic",
       {{"classes", sz(cfg.synthetic.classes)},
        {"latent_dim", sz(cfg.synthetic.latent_dim)},
        {"seed", u64(cfg.synthetic.seed)}}},
      {"view",
       {{"samples", sz(cfg.view.samples)},
        {"nk", sz(cfg.view.num_clusters)},
        {"ns", sz(cfg.view.num_subclusters)},
        {"seed", u64(cfg.view.seed)}}},
      {"translator",
       {{"epochs", sz(t.epochs)},
        {"learning_rate", real(t.learning_rate)},
        {"latent_loss_weight", real(t.latent_loss_weight)},
        {"noise_sigma", real(t.noise_sigma)},
        {"batch_size", sz(t.batch_size)},
        {"seed", u64(t.seed)}}},
      {"style",
       {{"negative_below", real(cfg.thresholds.negative_below)},
        {"positive_above", real(cfg.thresholds.positive_above)},
        {"blend", real(cfg.blend)},
        {"selection",
         [&cfg](const ConfigValue& v, const std::string& k) {
           try {
             cfg.selection = style_selection_from_string(text(v, k));
           } catch (const ConfigError& e) {
             fail(v.line, e.what());
           }
         }}}},
      {"story",
       {{"interval_seconds", real(s.interval_seconds)},
        {"aggregation",
         [&s](const ConfigValue& v, const std::string& k) {
           try {
             s.aggregation = aggregation_from_string(text(v, k));
           } catch (const ConfigError& e) {
             fail(v.line, e.what());
           }
         }},
        {"zscore_scope",
         [&s](const ConfigValue& v, const std::string& k) {
           try {
             s.scope = zscore_scope_from_string(text(v, k));
           } catch (const ConfigError& e) {
             fail(v.line, e.what());
           }
         }},
        {"noise_sigma", real(s.noise_sigma)},
        {"seed", u64(s.seed)},
        {"output_dir", [&s](const ConfigValue& v, const std::string& k) { s.output_dir = text(v, k); }}}},
  };
}

}  // namespace

ConfigDocument parse_config_document(std::string_view input) {
  ConfigDocument doc;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= input.size()) {
    const std::size_t end = std::min(input.find('\n', pos), input.size());
    std::string_view line = input.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') {
      if (end == input.size()) break;
      continue;
    }
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string_view::npos) fail(line_no, "unterminated section header");
      const auto rest = trim(line.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') fail(line_no, "unexpected characters after section header");
      const auto name = trim(line.substr(1, close - 1));
      if (!is_identifier(name)) fail(line_no, "invalid section name '" + std::string(name) + "'");
      section = std::string(name);
      doc[section];
    } else {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
      const auto key = trim(line.substr(0, eq));
      if (!is_identifier(key)) fail(line_no, "invalid key '" + std::string(key) + "'");
      auto& entries = doc[section];
      if (entries.count(std::string(key))) fail(line_no, "duplicate key '" + std::string(key) + "'");
      entries.emplace(std::string(key), ValueParser(trim(line.substr(eq + 1)), line_no).parse());
    }
    if (end == input.size()) break;
  }
  return doc;
}

std::string_view to_string(Aggregation aggregation) {
  return aggregation == Aggregation::kMean ? "mean" : "median";
}

Aggregation aggregation_from_string(std::string_view tag) {
  if (tag == "mean") return Aggregation::kMean;
  if (tag == "median") return Aggregation::kMedian;
  throw ConfigError("unknown aggregation '" + std::string(tag) + "' (expected mean or median)");
}

void StoryConfig::validate(double window_seconds) const {
  if (!(interval_seconds > 0.0)) throw ConfigError("interval_seconds must be positive");
  const double ratio = interval_seconds / window_seconds;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw ConfigError("interval_seconds must be a multiple of the " + std::to_string(window_seconds) + " s window");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
}

std::size_t StoryConfig::windows_per_interval(double window_seconds) const {
  return static_cast<std::size_t>(std::llround(interval_seconds / window_seconds));
}

RunConfig apply_config(const ConfigDocument& doc, RunConfig base) {
  std::vector<double> epochs;
  std::vector<double> rates;
  const Schema schema = make_schema(base, epochs, rates);
  for (const auto& [section, entries] : doc) {
    const auto known = schema.find(section);
    if (known == schema.end()) {
      const std::size_t line = entries.empty() ? 0 : entries.begin()->second.line;
      throw ConfigError("unknown config section '[" + section + "]'" +
                        (line ? " (line " + std::to_string(line) + ")" : std::string()));
    }
    for (const auto& [key, value] : entries) {
      const auto setter = known->second.find(key);
      if (setter == known->second.end()) fail(value.line, "unknown key '" + key + "' in [" + section + "]");
      setter->second(value, key);
    }
  }
  if (!epochs.empty() || !rates.empty()) {
    if (epochs.size() != rates.size()) {
      throw ConfigError("[audio_training] epochs and learning_rates must have the same length");
    }
    base.audio_training.schedule.clear();
    for (std::size_t i = 0; i < epochs.size(); ++i) {
      if (epochs[i] < 1 || epochs[i] != std::floor(epochs[i])) throw ConfigError("[audio_training] epochs must be positive integers");
      base.audio_training.schedule.push_back({static_cast<std::size_t>(epochs[i]), rates[i]});
    }
  }
  base.story.noise_sigma = doc.count("story") && doc.at("story").count("noise_sigma") ? base.story.noise_sigma
                                                                                      : base.translator.noise_sigma;
  base.features.validate();
  base.audio_training.validate();
  base.translator.validate();
  base.thresholds.validate();
  base.story.validate(base.features.window_ms / 1000.0);
  if (!(base.blend >= 0.0 && base.blend <= 1.0)) throw ConfigError("[style] blend must lie in [0, 1]");
  return base;
}

RunConfig parse_run_config(std::string_view text) {
  return apply_config(parse_config_document(text));
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace vistory
