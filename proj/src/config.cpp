// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ctfsep/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace ctfsep {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ArgumentError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ArgumentError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ArgumentError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ArgumentError(key + ": expected a boolean, got '" + v + "'");
}

bool is_none(const std::string& v) { return v.empty() || v == "none" || v == "off"; }

std::optional<double> to_optional(const std::string& key, const std::string& v) {
  if (is_none(v)) return std::nullopt;
  return to_double(key, v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "none"; }

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"method", [](RunConfig& c, auto&, auto& v) { c.method = parse_method(v); }},
      {"frame_len", [](RunConfig& c, auto& k, auto& v) { c.frame_len = to_int(k, v); }},
      {"hop", [](RunConfig& c, auto& k, auto& v) { c.hop = to_int(k, v); }},
      {"rho",
       [](RunConfig& c, auto& k, auto& v) {
         c.auto_rho = v == "auto";
         if (!c.auto_rho) c.inverse.rho = to_double(k, v);
       }},
      {"varrho", [](RunConfig& c, auto& k, auto& v) { c.inverse.varrho = to_double(k, v); }},
      {"delta", [](RunConfig& c, auto& k, auto& v) { c.inverse.delta = to_double(k, v); }},
      {"kappa", [](RunConfig& c, auto& k, auto& v) { c.inverse.kappa = to_double(k, v); }},
      {"delay_mint", [](RunConfig& c, auto& k, auto& v) { c.inverse.delay_mint = to_int(k, v); }},
      {"delay_mpdr", [](RunConfig& c, auto& k, auto& v) { c.inverse.delay_mpdr = to_int(k, v); }},
      {"alpha", [](RunConfig& c, auto& k, auto& v) { c.classo.alpha = to_double(k, v); }},
      {"gamma", [](RunConfig& c, auto& k, auto& v) { c.classo.gamma = to_double(k, v); }},
      {"eta1", [](RunConfig& c, auto& k, auto& v) { c.classo.eta1 = to_double(k, v); }},
      {"max_outer", [](RunConfig& c, auto& k, auto& v) { c.classo.max_outer = static_cast<int>(to_int(k, v)); }},
      {"max_inner", [](RunConfig& c, auto& k, auto& v) { c.classo.max_inner = static_cast<int>(to_int(k, v)); }},
      {"slack", [](RunConfig& c, auto& k, auto& v) { c.classo.slack = to_double(k, v); }},
      {"mu_scale", [](RunConfig& c, auto& k, auto& v) { c.classo.mu_scale = to_double(k, v); }},
      {"lasso_lambda", [](RunConfig& c, auto& k, auto& v) { c.lasso_lambda = to_double(k, v); }},
      {"mics", [](RunConfig& c, auto& k, auto& v) { c.scenario.mics = to_int(k, v); }},
      {"sources", [](RunConfig& c, auto& k, auto& v) { c.scenario.sources = to_int(k, v); }},
      {"sample_rate", [](RunConfig& c, auto& k, auto& v) { c.scenario.sample_rate = static_cast<int>(to_int(k, v)); }},
      {"duration_s", [](RunConfig& c, auto& k, auto& v) { c.scenario.duration_s = to_double(k, v); }},
      {"rir_len", [](RunConfig& c, auto& k, auto& v) { c.scenario.rir_len = to_int(k, v); }},
      {"rir_decay_s", [](RunConfig& c, auto& k, auto& v) { c.scenario.rir_decay_s = to_double(k, v); }},
      {"tail_gain", [](RunConfig& c, auto& k, auto& v) { c.scenario.tail_gain = to_double(k, v); }},
      {"max_direct_delay_s", [](RunConfig& c, auto& k, auto& v) { c.scenario.max_direct_delay_s = to_double(k, v); }},
      {"snr_db", [](RunConfig& c, auto& k, auto& v) { c.scenario.snr_db = to_optional(k, v); }},
      {"npm_db", [](RunConfig& c, auto& k, auto& v) { c.scenario.npm_db = to_optional(k, v); }},
      {"seed",
       [](RunConfig& c, auto& k, auto& v) {
         c.scenario.seed = to_u64(k, v);
         c.classo.seed = c.scenario.seed;
       }},
      {"mix_wav", [](RunConfig& c, auto&, auto& v) { c.mix_wav = v; }},
      {"rir_file", [](RunConfig& c, auto&, auto& v) { c.rir_file = v; }},
      {"rir_wavs", [](RunConfig& c, auto&, auto& v) { c.rir_wavs = split_list(v); }},
      {"noise_psd", [](RunConfig& c, auto&, auto& v) { c.noise_psd = v; }},
      {"noise_wav", [](RunConfig& c, auto&, auto& v) { c.noise_wav = v; }},
      {"source_wavs", [](RunConfig& c, auto&, auto& v) { c.source_wavs = split_list(v); }},
      {"desired",
       [](RunConfig& c, auto& k, auto& v) {
         c.desired.clear();
         if (v == "all") return;
         for (const auto& item : split_list(v)) c.desired.push_back(to_int(k, item));
       }},
      {"output_dir", [](RunConfig& c, auto&, auto& v) { c.output_dir = v; }},
      {"timing", [](RunConfig& c, auto& k, auto& v) { c.timing = to_bool(k, v); }},
  };
  return table;
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::mint: return "mint";
    case Method::mpdr: return "mpdr";
    case Method::classo: return "classo";
    case Method::lasso: return "lasso";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "mint") return Method::mint;
  if (name == "mpdr") return Method::mpdr;
  if (name == "classo") return Method::classo;
  if (name == "lasso") return Method::lasso;
  throw ArgumentError("unknown method '" + name + "' (expected mint, mpdr, classo or lasso)");
}

Settings parse_settings(std::istream& in) {
  Settings out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("config line " + std::to_string(number) + ": empty key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

Settings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path);
  return parse_settings(in);
}

std::pair<std::string, std::string> split_setting(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw FormatError("expected key=value, got '" + text + "'");
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ArgumentError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

void apply_settings(RunConfig& cfg, const Settings& settings) {
  for (const auto& [key, value] : settings) apply_setting(cfg, key, value);
}

void validate(const RunConfig& cfg) {
  require(cfg.frame_len >= 4 && cfg.frame_len % 2 == 0, "frame_len must be even and >= 4");
  require(cfg.hop >= 1 && 4 * cfg.hop <= cfg.frame_len, "hop must satisfy 1 <= hop <= frame_len / 4");
  require(cfg.inverse.delta >= 0.0, "delta must be non-negative");
  require(cfg.inverse.kappa >= 0.0, "kappa must be non-negative");
  require(cfg.auto_rho || cfg.inverse.rho > 0.0, "rho must be positive");
  require(cfg.inverse.varrho > 0.0, "varrho must be positive");
  require(cfg.inverse.delay_mint >= 0 && cfg.inverse.delay_mpdr >= 0, "delays must be non-negative");
  require(cfg.lasso_lambda >= 0.0, "lasso_lambda must be non-negative");
  validate(cfg.classo);
  for (Index j : cfg.desired) require(j >= 0, "desired source indices must be non-negative");
  if (cfg.mix_wav.empty()) {
    validate(cfg.scenario);
  } else {
    require(!cfg.rir_file.empty() || !cfg.rir_wavs.empty(),
            "a mixture input needs rir_file or rir_wavs");
    require(cfg.noise_psd != "measure" || !cfg.noise_wav.empty(),
            "noise_psd = measure needs noise_wav");
  }
}

std::map<std::string, std::string> describe(const RunConfig& c) {
  std::map<std::string, std::string> out = {
      {"method", to_string(c.method)},
      {"frame_len", std::to_string(c.frame_len)},
      {"hop", std::to_string(c.hop)},
      {"rho", c.auto_rho ? "auto" : fmt(c.inverse.rho)},
      {"varrho", fmt(c.inverse.varrho)},
      {"delta", fmt(c.inverse.delta)},
      {"kappa", fmt(c.inverse.kappa)},
      {"delay_mint", std::to_string(c.inverse.delay_mint)},
      {"delay_mpdr", std::to_string(c.inverse.delay_mpdr)},
      {"alpha", fmt(c.classo.alpha)},
      {"gamma", fmt(c.classo.gamma)},
      {"eta1", fmt(c.classo.eta1)},
      {"max_outer", std::to_string(c.classo.max_outer)},
      {"max_inner", std::to_string(c.classo.max_inner)},
      {"slack", fmt(c.classo.slack)},
      {"mu_scale", fmt(c.classo.mu_scale)},
      {"lasso_lambda", fmt(c.lasso_lambda)},
      {"seed", std::to_string(c.scenario.seed)},
      {"timing", c.timing ? "true" : "false"},
  };
  std::vector<std::string> desired;
  for (Index j : c.desired) desired.push_back(std::to_string(j));
  out["desired"] = desired.empty() ? "all" : join(desired);
  if (c.mix_wav.empty()) {
    out["mics"] = std::to_string(c.scenario.mics);
    out["sources"] = std::to_string(c.scenario.sources);
    out["sample_rate"] = std::to_string(c.scenario.sample_rate);
    out["duration_s"] = fmt(c.scenario.duration_s);
    out["rir_len"] = std::to_string(c.scenario.rir_len);
    out["rir_decay_s"] = fmt(c.scenario.rir_decay_s);
    out["tail_gain"] = fmt(c.scenario.tail_gain);
    out["max_direct_delay_s"] = fmt(c.scenario.max_direct_delay_s);
    out["snr_db"] = fmt(c.scenario.snr_db);
    out["npm_db"] = fmt(c.scenario.npm_db);
  } else {
    out["mix_wav"] = c.mix_wav;
    out["rir_file"] = c.rir_file;
    out["rir_wavs"] = join(c.rir_wavs);
    out["noise_psd"] = c.noise_psd;
    out["noise_wav"] = c.noise_wav;
    out["source_wavs"] = join(c.source_wavs);
  }
  return out;
}

BenchSpec make_bench_spec(const Settings& settings) {
  BenchSpec spec;
  Settings rest;
  std::vector<std::string> methods;
  for (const auto& [key, value] : settings) {
    if (key == "repeats") {
      spec.repeats = static_cast<int>(to_int(key, value));
    } else if (key == "sweep.methods") {
      methods = split_list(value);
    } else if (key == "sweep.mics") {
      spec.mics.clear();
      for (const auto& v : split_list(value)) spec.mics.push_back(to_int(key, v));
    } else if (key == "sweep.sources") {
      spec.sources.clear();
      for (const auto& v : split_list(value)) spec.sources.push_back(to_int(key, v));
    } else if (key == "sweep.snr_db") {
      spec.snr_db.clear();
      for (const auto& v : split_list(value)) spec.snr_db.push_back(to_optional(key, v));
    } else if (key == "sweep.npm_db") {
      spec.npm_db.clear();
      for (const auto& v : split_list(value)) spec.npm_db.push_back(to_optional(key, v));
    } else if (key.rfind("sweep.", 0) == 0) {
      throw ArgumentError("unknown sweep key '" + key + "'");
    } else {
      rest.emplace_back(key, value);
    }
  }
  apply_settings(spec.base, rest);
  require(spec.repeats >= 1, "repeats must be at least 1");
  require(spec.base.mix_wav.empty(), "bench runs on synthesized scenarios only");
  for (const auto& m : methods) spec.methods.push_back(parse_method(m));
  if (spec.methods.empty()) spec.methods.push_back(spec.base.method);
  if (spec.mics.empty()) spec.mics.push_back(spec.base.scenario.mics);
  if (spec.sources.empty()) spec.sources.push_back(spec.base.scenario.sources);
  if (spec.snr_db.empty()) spec.snr_db.push_back(spec.base.scenario.snr_db);
  if (spec.npm_db.empty()) spec.npm_db.push_back(spec.base.scenario.npm_db);
  validate(spec.base);
  return spec;
}

}  // namespace ctfsep
