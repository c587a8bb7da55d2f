// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "autoqnn/rng.hpp"

namespace autoqnn::pipeline {

Dataset generate_blobs(std::size_t n, std::size_t dim, double separation,
                       std::uint64_t seed) {
  if (n == 0 || dim == 0) throw std::invalid_argument("blobs: n and dim must be positive");
  Rng rng(seed);
  double axis = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<float> feats(n * dim);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    int cls = static_cast<int>(i % 2);  // balanced by construction
    double center = (cls == 0 ? -0.5 : 0.5) * separation * axis;
    for (std::size_t j = 0; j < dim; ++j) {
      feats[i * dim + j] = static_cast<float>(center + rng.normal());
    }
    labels[i] = cls;
  }
  return {Tensor({n, dim}, std::move(feats)), std::move(labels)};
}

Dataset generate_rings(std::size_t n, double noise, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("rings: n must be positive");
  Rng rng(seed);
  std::vector<float> feats(n * 2);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    int cls = static_cast<int>(i % 2);
    double r = (cls == 0 ? 1.0 : 2.0) + noise * rng.normal();
    double t = rng.uniform(0.0, 2.0 * M_PI);
    feats[i * 2] = static_cast<float>(r * std::cos(t));
    feats[i * 2 + 1] = static_cast<float>(r * std::sin(t));
    labels[i] = cls;
  }
  return {Tensor({n, 2}, std::move(feats)), std::move(labels)};
}

Dataset load_dataset_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read dataset file: " + path);
  std::vector<std::vector<float>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (vals.size() < 2) {
      throw std::runtime_error("dataset file line " + std::to_string(lineno) +
                               ": need at least one feature and a label");
    }
    double lab = vals.back();
    vals.pop_back();
    if (lab != std::floor(lab) || lab < 0) {
      throw std::runtime_error("dataset file line " + std::to_string(lineno) +
                               ": label must be a non-negative integer");
    }
    if (dim == 0) dim = vals.size();
    if (vals.size() != dim) {
      throw std::runtime_error("dataset file line " + std::to_string(lineno) +
                               ": feature count differs from previous rows");
    }
    rows.emplace_back(vals.begin(), vals.end());
    labels.push_back(static_cast<int>(lab));
  }
  if (rows.empty()) throw std::runtime_error("dataset file is empty: " + path);
  std::vector<float> feats;
  feats.reserve(rows.size() * dim);
  for (const auto& r : rows) feats.insert(feats.end(), r.begin(), r.end());
  return {Tensor({rows.size(), dim}, std::move(feats)), std::move(labels)};
}

void save_dataset_file(const Dataset& ds, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write dataset file: " + path);
  std::size_t dim = ds.dim();
  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(ds.features.at(i * dim + j)));
      os << buf << " ";
    }
    os << ds.labels[i] << "\n";
  }
}

namespace {

std::map<std::string, std::string> parse_kv(const std::string& s) {
  std::map<std::string, std::string> kv;
  std::istringstream ls(s);
  std::string item;
  while (std::getline(ls, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("dataset spec: '" + item + "' is not key=value");
    }
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

}  // namespace

Dataset dataset_from_spec(const std::string& spec, std::uint64_t seed) {
  auto colon = spec.find(':');
  std::string kind = colon == std::string::npos ? spec : spec.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "file") {
    if (rest.empty()) throw std::invalid_argument("dataset spec: file path missing");
    return load_dataset_file(rest);
  }
  auto kv = parse_kv(rest);
  auto get = [&](const char* key, double fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : std::stod(it->second);
  };
  if (kind == "blobs") {
    return generate_blobs(static_cast<std::size_t>(get("n", 2500)),
                          static_cast<std::size_t>(get("dim", 2)), get("sep", 6.0), seed);
  }
  if (kind == "rings") {
    return generate_rings(static_cast<std::size_t>(get("n", 2500)), get("noise", 0.1),
                          seed);
  }
  throw std::invalid_argument("dataset spec: unknown generator '" + kind + "'");
}

Split train_test_split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw std::invalid_argument("train_test_split: fraction must be in (0,1)");
  }
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng = Rng::for_phase(seed, "split");
  rng.shuffle(idx);

  std::size_t n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(ds.size()));
  std::size_t dim = ds.dim();
  auto take = [&](std::size_t begin, std::size_t end) {
    std::vector<float> feats((end - begin) * dim);
    std::vector<int> labels(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < dim; ++j)
        feats[(i - begin) * dim + j] = ds.features.at(idx[i] * dim + j);
      labels[i - begin] = ds.labels[idx[i]];
    }
    return Dataset{Tensor({end - begin, dim}, std::move(feats)), std::move(labels)};
  };
  return {take(0, n_train), take(n_train, ds.size())};
}

}  // namespace autoqnn::pipeline
