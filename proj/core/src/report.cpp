// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/report.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace autoqnn::pipeline {

namespace {

constexpr const char* kHeader = "# autoqnn-report v1";

std::string fmt_float(float v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string float_bits_hex(float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, sizeof(u));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", u);
  return buf;
}

float float_from_hex(const std::string& s) {
  std::uint32_t u = static_cast<std::uint32_t>(std::stoul(s, nullptr, 16));
  float v;
  std::memcpy(&v, &u, sizeof(v));
  return v;
}

}  // namespace

void RunReport::save(std::ostream& os) const {
  os << kHeader << "\n";
  os << "phase " << phase << "\n";
  os << "model " << model_path << "\n";
  os << "seed " << seed << "\n";
  os << "mode " << search_mode << "\n";
  for (const auto& [group, names] : groups) {
    os << "group " << group;
    for (const auto& n : names) os << " " << n;
    os << "\n";
  }
  for (const auto& s : schemes) {
    os << "scheme " << s.quantizer_id << " " << quant::scheme_name(s.scheme) << " "
       << s.bits << "\n";
  }
  for (const auto& t : traces) {
    os << "trace " << t.epoch << " " << t.group;
    for (float p : t.probs) os << " " << fmt_float(p);
    os << "\n";
  }
  for (const auto& b : bits) {
    os << "bits " << b.quantizer_id << " " << quant::scheme_name(b.scheme) << " "
       << b.bits << " " << b.elem_count << " " << (b.is_weight ? "w" : "a") << "\n";
  }
  if (has_avg) {
    os << "avg_bits " << fmt_double(avg_weight_bits) << " " << fmt_double(avg_act_bits)
       << " " << fmt_double(avg_all_bits) << "\n";
  }
  for (const auto& c : curves) {
    os << "curve " << c.name << " " << c.epoch << " " << fmt_float(c.value) << "\n";
  }
  for (const auto& a : accuracies) {
    os << "accuracy " << a.name << " " << fmt_float(a.value) << "\n";
  }
  for (const auto& p : params) {
    os << "param " << p.name << " " << p.shape.size();
    for (std::size_t d : p.shape) os << " " << d;
    for (float v : p.data) os << " " << float_bits_hex(v);
    os << "\n";
  }
}

void RunReport::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write report: " + path);
  save(os);
}

RunReport RunReport::load(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kHeader) {
    throw std::runtime_error("report: missing header '" + std::string(kHeader) + "'");
  }
  RunReport r;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "phase") ls >> r.phase;
    else if (tag == "model") ls >> r.model_path;
    else if (tag == "seed") ls >> r.seed;
    else if (tag == "mode") ls >> r.search_mode;
    else if (tag == "group") {
      std::string g, n;
      ls >> g;
      std::vector<std::string> names;
      while (ls >> n) names.push_back(n);
      r.groups[g] = std::move(names);
    } else if (tag == "scheme") {
      SchemeChoice s;
      std::string name;
      ls >> s.quantizer_id >> name >> s.bits;
      s.scheme = quant::scheme_from_name(name);
      r.schemes.push_back(std::move(s));
    } else if (tag == "trace") {
      TraceRow t;
      ls >> t.epoch >> t.group;
      float p;
      while (ls >> p) t.probs.push_back(p);
      r.traces.push_back(std::move(t));
    } else if (tag == "bits") {
      qpl::FinalBit b;
      std::string name, wa;
      ls >> b.quantizer_id >> name >> b.bits >> b.elem_count >> wa;
      b.scheme = quant::scheme_from_name(name);
      b.is_weight = wa == "w";
      r.bits.push_back(std::move(b));
    } else if (tag == "avg_bits") {
      ls >> r.avg_weight_bits >> r.avg_act_bits >> r.avg_all_bits;
      r.has_avg = true;
    } else if (tag == "curve") {
      CurvePoint c;
      ls >> c.name >> c.epoch >> c.value;
      r.curves.push_back(std::move(c));
    } else if (tag == "accuracy") {
      AccuracyEntry a;
      ls >> a.name >> a.value;
      r.accuracies.push_back(std::move(a));
    } else if (tag == "param") {
      ParamBlob p;
      std::size_t rank;
      ls >> p.name >> rank;
      std::size_t total = 1;
      for (std::size_t i = 0; i < rank; ++i) {
        std::size_t d;
        ls >> d;
        p.shape.push_back(d);
        total *= d;
      }
      std::string hex;
      while (ls >> hex) p.data.push_back(float_from_hex(hex));
      if (p.data.size() != total) {
        throw std::runtime_error("report: param '" + p.name + "' has " +
                                 std::to_string(p.data.size()) + " values, expected " +
                                 std::to_string(total));
      }
      r.params.push_back(std::move(p));
    } else {
      throw std::runtime_error("report: unknown tag '" + tag + "'");
    }
  }
  return r;
}

RunReport RunReport::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::invalid_argument("cannot read report: " + path);
  return load(is);
}

void RunReport::pretty_print(std::ostream& os) const {
  os << "run report (" << phase << ") model=" << model_path << " seed=" << seed
     << " mode=" << search_mode << "\n";
  if (!schemes.empty()) {
    os << "selected schemes:\n";
    for (const auto& s : schemes) {
      os << "  " << s.quantizer_id << " -> " << quant::scheme_name(s.scheme) << "-"
         << s.bits << "\n";
    }
  }
  if (!bits.empty()) {
    os << "final bit policy:\n";
    for (const auto& b : bits) {
      os << "  " << b.quantizer_id << " (" << (b.is_weight ? "W" : "A") << ", "
         << b.elem_count << " elems) " << quant::scheme_name(b.scheme) << "-" << b.bits
         << "\n";
    }
  }
  if (has_avg) {
    os << "average bits W/A: " << std::fixed << std::setprecision(2) << avg_weight_bits
       << "/" << avg_act_bits << " (overall " << avg_all_bits << ")\n";
    os.unsetf(std::ios::fixed);
  }
  for (const auto& a : accuracies) {
    os << "accuracy " << a.name << ": " << a.value << "\n";
  }
  if (!traces.empty()) {
    os << traces.size() << " probability trace rows over "
       << (traces.back().epoch) << " epochs\n";
  }
  if (!params.empty()) {
    os << params.size() << " checkpointed parameter tensors\n";
  }
}

}  // namespace autoqnn::pipeline
