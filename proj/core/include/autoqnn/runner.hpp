// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "autoqnn/config.hpp"
#include "autoqnn/report.hpp"

namespace autoqnn::pipeline {

/// Stages 1-2: quantized architecture generation, then scheme search over
/// the configured epochs with temperature decay, ending in greedy scheme
/// sampling. The returned report (phase "search") checkpoints the trained
/// weights so stage 3 can resume bit-exactly.
RunReport run_search(const RunConfig& cfg);

/// Stage 3: resume from a search report, train weights and bitwidths under
/// the precision target, finalize the integer bit policy and evaluate.
RunReport run_train(const RunConfig& cfg, const RunReport& search);

/// The full driver: search followed by train. With cfg.quantize = off the
/// model trains at full precision instead (baseline runs).
RunReport run_autoqnn(const RunConfig& cfg);

}  // namespace autoqnn::pipeline
