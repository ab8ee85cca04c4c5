#include "namo/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "namo/error.hpp"

namespace namo {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    fail(ErrorCode::Config, "key '" + key + "': expected a number, got '" + value + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    fail(ErrorCode::Config, "key '" + key + "': expected a nonnegative integer, got '" + value + "'");
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string orth_name(OrthMethod m) { return m == OrthMethod::Exact ? "exact" : "newton_schulz"; }

std::string noise_name(NoiseKind k) {
  return k == NoiseKind::AdditiveGaussian ? "gaussian" : "minibatch";
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

void apply_section(const std::string& section, const std::map<std::string, std::string>& kv,
                   const std::map<std::string, Setter>& setters) {
  for (const auto& [key, value] : kv) {
    auto it = setters.find(key);
    if (it == setters.end()) fail(ErrorCode::Config, "unknown key '" + key + "' in [" + section + "]");
    it->second(key, value);
  }
}

std::map<std::string, Setter> hyperparam_setters(HyperParams& hp, bool include_matrix_keys) {
  std::map<std::string, Setter> s{
      {"eta", [&](auto& k, auto& v) { hp.eta = parse_double(k, v); }},
      {"mu1", [&](auto& k, auto& v) { hp.mu1 = parse_double(k, v); }},
      {"mu2", [&](auto& k, auto& v) { hp.mu2 = parse_double(k, v); }},
      {"epsilon", [&](auto& k, auto& v) { hp.epsilon = parse_double(k, v); }},
      {"weight_decay", [&](auto& k, auto& v) { hp.weight_decay = parse_double(k, v); }},
  };
  if (!include_matrix_keys) return s;
  s.emplace("clamp_c", [&](auto& k, auto& v) { hp.clamp_c = parse_double(k, v); });
  s.emplace("orth", [&](auto&, auto& v) {
    if (v == "exact") hp.orth.method = OrthMethod::Exact;
    else if (v == "newton_schulz") hp.orth.method = OrthMethod::NewtonSchulz;
    else fail(ErrorCode::Config, "orth must be 'exact' or 'newton_schulz'");
  });
  s.emplace("ns_iterations", [&](auto& k, auto& v) {
    hp.orth.ns_iterations = static_cast<int>(parse_uint(k, v));
  });
  s.emplace("ns_coefficients", [&](auto& k, auto& v) {
    const auto items = split_list(v);
    if (items.size() != 3) fail(ErrorCode::Config, "ns_coefficients needs three values");
    for (std::size_t i = 0; i < 3; ++i) hp.orth.ns_coefficients[i] = parse_double(k, items[i]);
  });
  s.emplace("rank_tolerance",
            [&](auto& k, auto& v) { hp.orth.rank_tolerance = parse_double(k, v); });
  s.emplace("zero_threshold",
            [&](auto& k, auto& v) { hp.orth.zero_threshold = parse_double(k, v); });
  return s;
}

}  // namespace

void RunConfig::validate() const {
  hp.validate();
  fallback_hp.validate();
  if (steps < 1) fail(ErrorCode::Config, "steps must be >= 1");
  if (warmup_steps && *warmup_steps >= steps)
    fail(ErrorCode::Config, "warmup_steps must be smaller than steps");
  if (log_every < 1) fail(ErrorCode::Config, "log_every must be >= 1");
  if (repeats < 1) fail(ErrorCode::Config, "repeats must be >= 1");
  if (noise.batch_size < 1) fail(ErrorCode::Config, "batch_size must be >= 1");
  if (!(noise.sigma >= 0.0)) fail(ErrorCode::Config, "sigma must be nonnegative");
}

std::size_t RunConfig::effective_warmup() const {
  if (warmup_steps) return *warmup_steps;
  return std::min(std::max<std::size_t>(1, steps / 20), steps - 1);
}

HyperParams default_hyperparams(OptimizerKind kind) {
  HyperParams hp;
  hp.weight_decay = 0.01;
  if (kind == OptimizerKind::AdamW) {
    hp.mu1 = 0.9;
    hp.mu2 = 0.95;
  } else {
    hp.mu1 = 0.95;
    hp.mu2 = 0.99;
  }
  return hp;
}

RunConfig default_run_config(OptimizerKind kind) {
  RunConfig c;
  c.optimizer = kind;
  c.hp = default_hyperparams(kind);
  c.fallback_hp = default_hyperparams(OptimizerKind::AdamW);
  return c;
}

IniDocument parse_ini(const std::string& text) {
  IniDocument doc;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": empty section name");
      doc[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty())
      fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": key outside of a section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": empty key");
    if (!doc[section].emplace(key, value).second)
      fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return doc;
}

RunConfig run_config_from_ini(const IniDocument& doc) {
  for (const auto& [section, kv] : doc) {
    (void)kv;
    static const char* known[] = {"problem", "optimizer", "fallback", "noise", "run"};
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return section == k; }) == std::end(known))
      fail(ErrorCode::Config, "unknown section [" + section + "]");
  }

  // The optimizer id picks the default hyperparameters, so resolve it first.
  OptimizerKind kind = OptimizerKind::Namo;
  std::map<std::string, std::string> optimizer_kv;
  if (auto it = doc.find("optimizer"); it != doc.end()) {
    optimizer_kv = it->second;
    if (auto n = optimizer_kv.find("name"); n != optimizer_kv.end()) {
      kind = parse_optimizer_kind(n->second);
      optimizer_kv.erase(n);
    }
  }
  RunConfig c = default_run_config(kind);

  if (auto it = doc.find("problem"); it != doc.end()) {
    apply_section("problem", it->second,
                  {{"name", [&](auto&, auto& v) { c.problem.name = v; }},
                   {"dims",
                    [&](auto& k, auto& v) {
                      c.problem.dims.clear();
                      for (const auto& item : split_list(v)) c.problem.dims.push_back(parse_uint(k, item));
                    }},
                   {"dataset_size", [&](auto& k, auto& v) { c.problem.dataset_size = parse_uint(k, v); }},
                   {"seed", [&](auto& k, auto& v) { c.problem.seed = parse_uint(k, v); }}});
  }
  apply_section("optimizer", optimizer_kv, hyperparam_setters(c.hp, true));
  if (auto it = doc.find("fallback"); it != doc.end()) {
    apply_section("fallback", it->second, hyperparam_setters(c.fallback_hp, false));
  }
  if (auto it = doc.find("noise"); it != doc.end()) {
    apply_section("noise", it->second,
                  {{"kind",
                    [&](auto&, auto& v) {
                      if (v == "gaussian") c.noise.kind = NoiseKind::AdditiveGaussian;
                      else if (v == "minibatch") c.noise.kind = NoiseKind::Minibatch;
                      else fail(ErrorCode::Config, "noise kind must be 'gaussian' or 'minibatch'");
                    }},
                   {"sigma", [&](auto& k, auto& v) { c.noise.sigma = parse_double(k, v); }},
                   {"batch_size", [&](auto& k, auto& v) { c.noise.batch_size = parse_uint(k, v); }}});
  }
  if (auto it = doc.find("run"); it != doc.end()) {
    apply_section("run", it->second,
                  {{"steps", [&](auto& k, auto& v) { c.steps = parse_uint(k, v); }},
                   {"warmup_steps", [&](auto& k, auto& v) { c.warmup_steps = parse_uint(k, v); }},
                   {"log_every", [&](auto& k, auto& v) { c.log_every = parse_uint(k, v); }},
                   {"seed", [&](auto& k, auto& v) { c.seed = parse_uint(k, v); }},
                   {"repeats", [&](auto& k, auto& v) { c.repeats = parse_uint(k, v); }}});
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return run_config_from_ini(parse_ini(ss.str()));
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

namespace {

std::string problem_canonical(const RunConfig& c) {
  std::ostringstream os;
  os << "problem.dataset_size=" << c.problem.dataset_size << "\n";
  os << "problem.dims=";
  for (std::size_t i = 0; i < c.problem.dims.size(); ++i) os << (i ? "," : "") << c.problem.dims[i];
  os << "\n";
  os << "problem.name=" << c.problem.name << "\n";
  os << "problem.seed=" << c.problem.seed << "\n";
  return os.str();
}

std::string noise_canonical(const RunConfig& c) {
  std::ostringstream os;
  os << "noise.batch_size=" << c.noise.batch_size << "\n";
  os << "noise.kind=" << noise_name(c.noise.kind) << "\n";
  os << "noise.sigma=" << fmt_double(c.noise.sigma) << "\n";
  return os.str();
}

std::string hp_canonical(const std::string& prefix, const HyperParams& hp, bool matrix) {
  std::ostringstream os;
  if (matrix) os << prefix << ".clamp_c=" << fmt_double(hp.clamp_c) << "\n";
  os << prefix << ".epsilon=" << fmt_double(hp.epsilon) << "\n";
  os << prefix << ".eta=" << fmt_double(hp.eta) << "\n";
  os << prefix << ".mu1=" << fmt_double(hp.mu1) << "\n";
  os << prefix << ".mu2=" << fmt_double(hp.mu2) << "\n";
  if (matrix) {
    os << prefix << ".ns_coefficients=" << fmt_double(hp.orth.ns_coefficients[0]) << ","
       << fmt_double(hp.orth.ns_coefficients[1]) << "," << fmt_double(hp.orth.ns_coefficients[2])
       << "\n";
    os << prefix << ".ns_iterations=" << hp.orth.ns_iterations << "\n";
    os << prefix << ".orth=" << orth_name(hp.orth.method) << "\n";
    os << prefix << ".rank_tolerance=" << fmt_double(hp.orth.rank_tolerance) << "\n";
  }
  os << prefix << ".weight_decay=" << fmt_double(hp.weight_decay) << "\n";
  if (matrix) os << prefix << ".zero_threshold=" << fmt_double(hp.orth.zero_threshold) << "\n";
  return os.str();
}

}  // namespace

std::string canonical_form(const RunConfig& c) {
  std::ostringstream os;
  os << hp_canonical("fallback", c.fallback_hp, false);
  os << noise_canonical(c);
  os << hp_canonical("optimizer", c.hp, true);
  os << "optimizer.name=" << to_string(c.optimizer) << "\n";
  os << problem_canonical(c);
  os << "run.log_every=" << c.log_every << "\n";
  os << "run.repeats=" << c.repeats << "\n";
  os << "run.seed=" << c.seed << "\n";
  os << "run.steps=" << c.steps << "\n";
  os << "run.warmup_steps=" << c.effective_warmup() << "\n";
  return os.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_noise_seed(const RunConfig& config, std::size_t repeat) {
  const std::uint64_t h = fnv1a64(problem_canonical(config) + noise_canonical(config));
  return splitmix64(splitmix64(config.seed ^ h) + static_cast<std::uint64_t>(repeat));
}

}  // namespace namo
