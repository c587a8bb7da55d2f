// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace autoqnn::pipeline {

void RunConfig::validate() const {
  if (model_path.empty()) throw std::invalid_argument("config: model path missing");
  if (qss_epochs < 1) throw std::invalid_argument("config: qss_epochs must be >= 1");
  if (qpl_epochs < 0) throw std::invalid_argument("config: qpl_epochs must be >= 0");
  if (lr_weights <= 0 || lr_theta <= 0 || lr_bits <= 0) {
    throw std::invalid_argument("config: learning rates must be positive");
  }
  if (tau0 <= 0) throw std::invalid_argument("config: tau0 must be positive");
  if (tau_exponent < 0) throw std::invalid_argument("config: tau exponent must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("config: batch size must be positive");
  if (!seed_set) throw std::invalid_argument("config: seed is required");
  if (search_mode != "fine" && search_mode != "coarse") {
    throw std::invalid_argument("config: search mode must be fine or coarse");
  }
  if (candidate_bits < 1 || candidate_bits > 8) {
    throw std::invalid_argument("config: candidate bits must be in [1,8]");
  }
  if (target_bits < 1.0f || target_bits > 8.0f) {
    throw std::invalid_argument("config: target bits must be in [1,8]");
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw std::invalid_argument("config: " + key + " must be on/off");
}

}  // namespace

RunConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read config file: " + path);
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key=value, got '" + line + "'");
    }
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    try {
      if (key == "model") cfg.model_path = val;
      else if (key == "dataset") cfg.dataset_spec = val;
      else if (key == "qss_epochs") cfg.qss_epochs = std::stoi(val);
      else if (key == "qpl_epochs") cfg.qpl_epochs = std::stoi(val);
      else if (key == "tau0") cfg.tau0 = std::stof(val);
      else if (key == "tau_exponent") cfg.tau_exponent = std::stof(val);
      else if (key == "target_bits") cfg.target_bits = std::stof(val);
      else if (key == "precision_weight") cfg.precision_weight = std::stof(val);
      else if (key == "search_mode") cfg.search_mode = val;
      else if (key == "candidate_bits") cfg.candidate_bits = std::stoi(val);
      else if (key == "weight_candidates") cfg.weight_candidates = split_csv(val);
      else if (key == "act_candidates") cfg.act_candidates = split_csv(val);
      else if (key == "lr_weights") cfg.lr_weights = std::stof(val);
      else if (key == "lr_theta") cfg.lr_theta = std::stof(val);
      else if (key == "lr_bits") cfg.lr_bits = std::stof(val);
      else if (key == "batch_size") cfg.batch_size = std::stoul(val);
      else if (key == "seed") { cfg.seed = std::stoull(val); cfg.seed_set = true; }
      else if (key == "out_dir") cfg.out_dir = val;
      else if (key == "exempt_first_last") cfg.exempt_first_last = parse_bool(val, key);
      else if (key == "quantize") cfg.quantize = parse_bool(val, key);
      else if (key == "alpha_table") cfg.alpha_table_path = val;
      else throw std::runtime_error("config line " + std::to_string(lineno) +
                                    ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": bad value for '" + key + "'");
    }
  }
  return cfg;
}

void save_config_file(const RunConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write config file: " + path);
  char buf[64];
  auto put_f = [&](const char* key, float v) {
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    os << key << "=" << buf << "\n";
  };
  os << "# autoqnn-config v1\n";
  os << "model=" << cfg.model_path << "\n";
  os << "dataset=" << cfg.dataset_spec << "\n";
  os << "qss_epochs=" << cfg.qss_epochs << "\n";
  os << "qpl_epochs=" << cfg.qpl_epochs << "\n";
  put_f("tau0", cfg.tau0);
  put_f("tau_exponent", cfg.tau_exponent);
  put_f("target_bits", cfg.target_bits);
  put_f("precision_weight", cfg.precision_weight);
  os << "search_mode=" << cfg.search_mode << "\n";
  os << "candidate_bits=" << cfg.candidate_bits << "\n";
  if (!cfg.weight_candidates.empty()) {
    os << "weight_candidates=";
    for (std::size_t i = 0; i < cfg.weight_candidates.size(); ++i)
      os << (i ? "," : "") << cfg.weight_candidates[i];
    os << "\n";
  }
  if (!cfg.act_candidates.empty()) {
    os << "act_candidates=";
    for (std::size_t i = 0; i < cfg.act_candidates.size(); ++i)
      os << (i ? "," : "") << cfg.act_candidates[i];
    os << "\n";
  }
  put_f("lr_weights", cfg.lr_weights);
  put_f("lr_theta", cfg.lr_theta);
  put_f("lr_bits", cfg.lr_bits);
  os << "batch_size=" << cfg.batch_size << "\n";
  if (cfg.seed_set) os << "seed=" << cfg.seed << "\n";
  os << "out_dir=" << cfg.out_dir << "\n";
  os << "exempt_first_last=" << (cfg.exempt_first_last ? "on" : "off") << "\n";
  os << "quantize=" << (cfg.quantize ? "on" : "off") << "\n";
  if (!cfg.alpha_table_path.empty()) os << "alpha_table=" << cfg.alpha_table_path << "\n";
}

}  // namespace autoqnn::pipeline
