// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrdiff/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace hdrdiff {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw ConfigError(key, "config key '" + key + "': cannot parse '" + v + "' as a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key, "config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  return out;
}

template <typename C>
std::string join(const C& xs) {
  std::string s;
  for (int x : xs) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto num = [&](const char* k, auto get) {
      t[k] = [get](RunConfig& c, const std::string& key, const std::string& v) {
        auto& f = get(c);
        f = parse_number<std::remove_reference_t<decltype(f)>>(key, v);
      };
    };
    num("model.base_channels", [](RunConfig& c) -> int& { return c.model.base_channels; });
    num("model.res_blocks", [](RunConfig& c) -> int& { return c.model.res_blocks; });
    num("model.time_embed_dim", [](RunConfig& c) -> int& { return c.model.time_embed_dim; });
    num("model.cond_features", [](RunConfig& c) -> int& { return c.model.cond_features; });
    t["model.channel_multipliers"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model.channel_multipliers = parse_int_list(k, v);
    };
    t["model.attn_levels"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      const std::vector<int> xs = parse_int_list(k, v);
      c.model.attn_levels = std::set<int>(xs.begin(), xs.end());
    };
    t["model.conditioning"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      try {
        c.model.conditioning = parse_conditioning(v);
      } catch (const InvalidArgument& e) {
        throw ConfigError(k, "config key '" + k + "': " + e.what());
      }
    };
    num("train.learning_rate", [](RunConfig& c) -> double& { return c.train.learning_rate; });
    num("train.adam_beta1", [](RunConfig& c) -> double& { return c.train.adam_beta1; });
    num("train.adam_beta2", [](RunConfig& c) -> double& { return c.train.adam_beta2; });
    num("train.adam_eps", [](RunConfig& c) -> double& { return c.train.adam_eps; });
    num("train.ema_decay", [](RunConfig& c) -> double& { return c.train.ema_decay; });
    num("train.batch", [](RunConfig& c) -> int& { return c.train.batch; });
    num("train.patch_size", [](RunConfig& c) -> int& { return c.train.patch_size; });
    num("train.iterations", [](RunConfig& c) -> long& { return c.train.total_iters; });
    num("train.seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; });
    num("train.grad_clip", [](RunConfig& c) -> double& { return c.train.grad_clip; });
    num("train.log_every", [](RunConfig& c) -> long& { return c.log_every; });
    num("train.checkpoint_every", [](RunConfig& c) -> long& { return c.checkpoint_every; });
    t["train.loss_noise"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.use_loss_noise = parse_bool(k, v);
    };
    t["train.loss_image"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.use_loss_image = parse_bool(k, v);
    };
    t["train.image_loss_norm"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "l2") {
        c.train.image_loss_norm = ImageLossNorm::L2;
      } else if (v == "l1") {
        c.train.image_loss_norm = ImageLossNorm::L1;
      } else {
        throw ConfigError(k, "config key '" + k + "': expected l2 or l1, got '" + v + "'");
      }
    };
    num("schedule.steps", [](RunConfig& c) -> int& { return c.schedule.steps; });
    num("schedule.beta_start", [](RunConfig& c) -> double& { return c.schedule.beta_start; });
    num("schedule.beta_end", [](RunConfig& c) -> double& { return c.schedule.beta_end; });
    num("tonemap.mu", [](RunConfig& c) -> double& { return c.mu; });
    num("tonemap.gamma", [](RunConfig& c) -> double& { return c.gamma; });
    num("sampler.steps", [](RunConfig& c) -> int& { return c.sampler.steps; });
    num("sampler.window", [](RunConfig& c) -> int& { return c.sampler.window; });
    num("sampler.cell", [](RunConfig& c) -> int& { return c.sampler.cell; });
    num("sampler.seed", [](RunConfig& c) -> std::uint64_t& { return c.sampler.seed; });
    return t;
  }();
  return table;
}

// Runs a component validator, attributing failures to a config section.
template <typename F>
void check(const char* section, F&& f) {
  try {
    f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(section, std::string("invalid ") + section + " settings: " + e.what());
  }
}

}  // namespace

RunConfig RunConfig::toy() {
  RunConfig c;
  c.model = ModelConfig::toy();
  c.train.learning_rate = 2e-4;
  c.train.ema_decay = 0.995;
  c.train.batch = 4;
  c.train.patch_size = 32;
  c.train.total_iters = 3000;
  c.sampler.window = 64;
  c.sampler.cell = 32;
  return c;
}

RunConfig parse_config(const std::string& text, RunConfig config) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      const std::string key = trim(line);
      throw ConfigError(key, "config line " + std::to_string(lineno) + ": expected 'key = value', got '" + key + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(key, "unknown config key '" + key + "'");
    it->second(config, key, value);
  }
  config.train.mu = config.mu;
  config.sampler.mu = config.mu;
  check("model", [&] { config.model.validate(); });
  check("train", [&] { config.train.validate(config.model); });
  if (config.log_every < 1) throw ConfigError("train.log_every", "train.log_every must be >= 1");
  if (config.checkpoint_every < 1) throw ConfigError("train.checkpoint_every", "train.checkpoint_every must be >= 1");
  if (!(config.gamma > 0.0)) throw ConfigError("tonemap.gamma", "tonemap.gamma must be positive");
  NoiseSchedule schedule({0.5});
  check("schedule", [&] { schedule = config.schedule.build(); });
  check("sampler", [&] { config.sampler.validate(schedule); });
  return config;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream f(path);
  if (!f) throw LoadError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_text(const RunConfig& c) {
  std::ostringstream o;
  o << "model.base_channels = " << c.model.base_channels << "\n"
    << "model.channel_multipliers = " << join(c.model.channel_multipliers) << "\n"
    << "model.res_blocks = " << c.model.res_blocks << "\n"
    << "model.time_embed_dim = " << c.model.time_embed_dim << "\n"
    << "model.attn_levels = " << join(c.model.attn_levels) << "\n"
    << "model.cond_features = " << c.model.cond_features << "\n"
    << "model.conditioning = " << to_string(c.model.conditioning) << "\n"
    << "train.learning_rate = " << fmt(c.train.learning_rate) << "\n"
    << "train.adam_beta1 = " << fmt(c.train.adam_beta1) << "\n"
    << "train.adam_beta2 = " << fmt(c.train.adam_beta2) << "\n"
    << "train.adam_eps = " << fmt(c.train.adam_eps) << "\n"
    << "train.ema_decay = " << fmt(c.train.ema_decay) << "\n"
    << "train.batch = " << c.train.batch << "\n"
    << "train.patch_size = " << c.train.patch_size << "\n"
    << "train.iterations = " << c.train.total_iters << "\n"
    << "train.seed = " << c.train.seed << "\n"
    << "train.loss_noise = " << (c.train.use_loss_noise ? "true" : "false") << "\n"
    << "train.loss_image = " << (c.train.use_loss_image ? "true" : "false") << "\n"
    << "train.image_loss_norm = " << (c.train.image_loss_norm == ImageLossNorm::L2 ? "l2" : "l1") << "\n"
    << "train.grad_clip = " << fmt(c.train.grad_clip) << "\n"
    << "train.log_every = " << c.log_every << "\n"
    << "train.checkpoint_every = " << c.checkpoint_every << "\n"
    << "schedule.steps = " << c.schedule.steps << "\n"
    << "schedule.beta_start = " << fmt(c.schedule.beta_start) << "\n"
    << "schedule.beta_end = " << fmt(c.schedule.beta_end) << "\n"
    << "tonemap.mu = " << fmt(c.mu) << "\n"
    << "tonemap.gamma = " << fmt(c.gamma) << "\n"
    << "sampler.steps = " << c.sampler.steps << "\n"
    << "sampler.window = " << c.sampler.window << "\n"
    << "sampler.cell = " << c.sampler.cell << "\n"
    << "sampler.seed = " << c.sampler.seed << "\n";
  return o.str();
}

}  // namespace hdrdiff
