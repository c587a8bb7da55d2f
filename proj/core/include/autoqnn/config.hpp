// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace autoqnn::pipeline {

/// Everything a run needs, loadable from a flat key=value file; CLI flags
/// mirror the fields. A fixed seed makes the whole run reproducible.
struct RunConfig {
  std::string model_path;
  std::string dataset_spec = "blobs:n=2500,dim=2,sep=6";
  int qss_epochs = 10;          // Delta
  int qpl_epochs = 100;         // post-search training epochs
  float tau0 = 5.0f;
  float tau_exponent = 2.0f;    // p
  float target_bits = 3.0f;     // b-bar
  float precision_weight = 1.0f;
  std::string search_mode = "coarse";  // fine | coarse
  int candidate_bits = 3;
  std::vector<std::string> weight_candidates;  // empty -> defaults
  std::vector<std::string> act_candidates;
  float lr_weights = 0.1f;
  float lr_theta = 0.1f;
  float lr_bits = 0.05f;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = ".";
  bool exempt_first_last = true;  // skip quantizing first/last expensive vertices
  bool quantize = true;           // off -> full-precision baseline run
  std::string alpha_table_path;   // empty -> builtin defaults

  void validate() const;
};

RunConfig load_config_file(const std::string& path);
void save_config_file(const RunConfig& cfg, const std::string& path);

}  // namespace autoqnn::pipeline
