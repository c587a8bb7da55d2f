// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "autoqnn/qpl.hpp"
#include "autoqnn/schemes.hpp"

namespace autoqnn::pipeline {

struct SchemeChoice {
  std::string quantizer_id;
  quant::SchemeId scheme;
  int bits;
};

struct TraceRow {
  int epoch;
  std::string group;
  std::vector<float> probs;
};

struct CurvePoint {
  std::string name;
  int epoch;
  float value;
};

struct AccuracyEntry {
  std::string name;
  float value;
};

struct ParamBlob {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> data;
};

/// Run artifact: selected schemes, probability trajectories, final bits,
/// averages, curves and (for search checkpoints) bit-exact weights.
/// Serialization round-trips losslessly; wall_clock_sec stays in memory so
/// reports from identical seeded runs compare byte-identical.
struct RunReport {
  std::string phase = "final";  // search | final
  std::string model_path;
  std::uint64_t seed = 0;
  std::string search_mode = "coarse";
  std::map<std::string, std::vector<std::string>> groups;
  std::vector<SchemeChoice> schemes;
  std::vector<TraceRow> traces;
  std::vector<qpl::FinalBit> bits;
  bool has_avg = false;
  double avg_weight_bits = 0.0;
  double avg_act_bits = 0.0;
  double avg_all_bits = 0.0;
  std::vector<CurvePoint> curves;
  std::vector<AccuracyEntry> accuracies;
  std::vector<ParamBlob> params;
  double wall_clock_sec = 0.0;

  void save(std::ostream& os) const;
  void save_file(const std::string& path) const;
  static RunReport load(std::istream& is);
  static RunReport load_file(const std::string& path);

  /// Human-readable summary for the `report` subcommand.
  void pretty_print(std::ostream& os) const;
};

}  // namespace autoqnn::pipeline
