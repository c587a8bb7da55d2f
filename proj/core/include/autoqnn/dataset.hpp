// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoqnn/tensor.hpp"

namespace autoqnn::pipeline {

struct Dataset {
  Tensor features;          // [n x dim]
  std::vector<int> labels;  // n class indices
  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.shape().size() == 2 ? features.shape()[1] : 0; }
};

/// Two Gaussian blobs at +-(separation/2) along the unit diagonal.
Dataset generate_blobs(std::size_t n, std::size_t dim, double separation,
                       std::uint64_t seed);

/// Two concentric rings (radius 1 and 2) with radial noise.
Dataset generate_rings(std::size_t n, double noise, std::uint64_t seed);

/// Column text: one sample per line, features then an integer label.
Dataset load_dataset_file(const std::string& path);
void save_dataset_file(const Dataset& ds, const std::string& path);

/// "blobs:n=2500,dim=2,sep=6" | "rings:n=2500,noise=0.1" | "file:path"
Dataset dataset_from_spec(const std::string& spec, std::uint64_t seed);

struct Split {
  Dataset train;
  Dataset test;
};

/// Deterministic 80/20 shuffle-split.
Split train_test_split(const Dataset& ds, double train_fraction, std::uint64_t seed);

}  // namespace autoqnn::pipeline
