// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "autoqnn/dataset.hpp"
#include "autoqnn/graph_io.hpp"
#include "autoqnn/model.hpp"
#include "autoqnn/rng.hpp"

namespace autoqnn::pipeline {

namespace {

struct QuantizerPlan {
  QuantizerInfo info;
  std::string group;              // search-state key
  std::size_t elem_count = 0;     // per-sample for activation quantizers
};

struct RunContext {
  graph::Graph original;
  graph::Graph quantized;
  Dataset train;
  Dataset test;
  quant::AlphaTable alphas;
  std::vector<quant::QuantConfig> weight_candidates;
  std::vector<quant::QuantConfig> act_candidates;
  std::vector<QuantizerPlan> plans;  // sorted by quantizer id
};

Tensor gather_rows(const Dataset& ds, const std::vector<std::size_t>& idx,
                   std::size_t begin, std::size_t end) {
  std::size_t dim = ds.dim();
  std::vector<float> out((end - begin) * dim);
  for (std::size_t i = begin; i < end; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      out[(i - begin) * dim + j] = ds.features.at(idx[i] * dim + j);
  return Tensor({end - begin, dim}, std::move(out));
}

std::vector<int> gather_labels(const Dataset& ds, const std::vector<std::size_t>& idx,
                               std::size_t begin, std::size_t end) {
  std::vector<int> out(end - begin);
  for (std::size_t i = begin; i < end; ++i) out[i - begin] = ds.labels[idx[i]];
  return out;
}

graph::ExpensiveSet expensive_set_for(const graph::Graph& g, bool exempt_first_last) {
  graph::ExpensiveSet ve = graph::default_expensive_set(g);
  if (exempt_first_last && !ve.empty()) {
    std::vector<std::string> order = graph::topo_order(g);
    std::string first, last;
    for (const std::string& id : order) {
      if (!ve.count(id)) continue;
      if (first.empty()) first = id;
      last = id;
    }
    ve.erase(first);
    ve.erase(last);
  }
  return ve;
}

RunContext build_context(const RunConfig& cfg) {
  cfg.validate();
  RunContext ctx;
  ctx.original = graph::load_graph_file(cfg.model_path);
  graph::Diagnostics diag = graph::validate(ctx.original);
  if (!diag.ok()) {
    throw std::invalid_argument("run: model graph invalid: " + diag.problems.front());
  }

  Dataset full = dataset_from_spec(cfg.dataset_spec, hash_combine(cfg.seed, 0xda7aULL));
  Split split = train_test_split(full, 0.8, cfg.seed);
  ctx.train = std::move(split.train);
  ctx.test = std::move(split.test);

  ctx.alphas = cfg.alpha_table_path.empty()
                   ? quant::AlphaTable::builtin_defaults()
                   : quant::AlphaTable::load_file(cfg.alpha_table_path);

  if (cfg.quantize) {
    graph::ExpensiveSet ve = expensive_set_for(ctx.original, cfg.exempt_first_last);
    ctx.quantized = graph::qag_transform(ctx.original, ve);
  } else {
    ctx.quantized = ctx.original;
  }

  ctx.weight_candidates =
      cfg.weight_candidates.empty()
          ? qss::default_weight_candidates(cfg.candidate_bits, ctx.alphas)
          : qss::candidates_from_names(cfg.weight_candidates, cfg.candidate_bits,
                                       ctx.alphas);
  ctx.act_candidates =
      cfg.act_candidates.empty()
          ? qss::default_activation_candidates(cfg.candidate_bits, ctx.alphas)
          : qss::candidates_from_names(cfg.act_candidates, cfg.candidate_bits, ctx.alphas);
  return ctx;
}

void fill_plans(RunContext& ctx, const Model& model, const RunConfig& cfg) {
  std::vector<QuantizerInfo> infos = model.quantizers();
  // probe forward to size each quantizer's tensor
  std::map<std::string, QuantizerBinding> probe;
  for (const QuantizerInfo& q : infos) {
    QuantizerBinding b;
    b.mode = QuantizerBinding::Mode::Fixed;
    b.config.scheme = quant::SchemeId::ZoomQ;
    b.config.b = 3.0f;
    probe[q.id] = b;
  }
  std::size_t rows = std::min<std::size_t>(cfg.batch_size, ctx.train.size());
  std::vector<std::size_t> idx(rows);
  for (std::size_t i = 0; i < rows; ++i) idx[i] = i;
  Tape tape;
  Model::Forward fw = model.forward(tape, gather_rows(ctx.train, idx, 0, rows),
                                    gather_labels(ctx.train, idx, 0, rows), probe);
  for (const QuantizerInfo& q : infos) {
    QuantizerPlan plan;
    plan.info = q;
    std::size_t numel = tape.value(fw.quantizer_inputs.at(q.id)).numel();
    // activation sizes are per sample so batch size does not skew E(B)
    plan.elem_count = q.is_weight ? numel : numel / rows;
    plan.group = cfg.search_mode == "coarse" ? (q.is_weight ? "w" : "a") : q.id;
    ctx.plans.push_back(std::move(plan));
  }
}

std::vector<std::string> candidate_labels(const std::vector<quant::QuantConfig>& cands) {
  std::vector<std::string> out;
  for (const auto& c : cands) {
    out.push_back(quant::scheme_name(c.scheme) + "-" +
                  std::to_string(static_cast<int>(c.b)));
  }
  return out;
}

float checked_loss(const Tape& tape, ValueId loss) {
  float v = tape.value(loss).item();
  if (!std::isfinite(v)) {
    throw std::runtime_error("run aborted: training loss is not finite");
  }
  return v;
}

}  // namespace

RunReport run_search(const RunConfig& cfg) {
  if (!cfg.quantize) {
    throw std::invalid_argument("search: quantize=off makes no sense here; use run");
  }
  RunContext ctx = build_context(cfg);
  Model model(ctx.quantized, cfg.seed);
  fill_plans(ctx, model, cfg);

  RunReport report;
  report.phase = "search";
  report.model_path = cfg.model_path;
  report.seed = cfg.seed;
  report.search_mode = cfg.search_mode;

  // one search state per group; single-candidate groups bind directly
  std::map<std::string, qss::SchemeSearchState> states;
  for (const QuantizerPlan& p : ctx.plans) {
    if (states.count(p.group)) continue;
    const auto& cands = p.info.is_weight ? ctx.weight_candidates : ctx.act_candidates;
    if (cands.size() >= 2) {
      states.emplace(p.group,
                     qss::SchemeSearchState(cands, qss::search_mode_from_name(cfg.search_mode)));
      report.groups[p.group] = candidate_labels(cands);
    }
  }

  qss::TemperatureSchedule sched{cfg.tau0, cfg.qss_epochs, cfg.tau_exponent};
  Rng rng_qss = Rng::for_phase(cfg.seed, "qss");

  for (int epoch = 1; epoch <= cfg.qss_epochs; ++epoch) {
    float tau = qss::temperature(sched, epoch);

    // noise redrawn once per epoch per quantizer, in sorted id order
    std::map<std::string, qss::GumbelNoise> noise;
    for (const QuantizerPlan& p : ctx.plans) {
      const auto& cands = p.info.is_weight ? ctx.weight_candidates : ctx.act_candidates;
      noise[p.info.id] = qss::GumbelNoise::draw(cands.size(), rng_qss);
    }

    std::vector<std::size_t> idx(ctx.train.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng_qss.shuffle(idx);

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < idx.size(); begin += cfg.batch_size) {
      std::size_t end = std::min(idx.size(), begin + cfg.batch_size);
      Tape tape;
      std::map<std::string, ValueId> theta_leaves;
      for (auto& [group, state] : states) {
        theta_leaves[group] = tape.leaf(state.theta.value, true);
      }
      std::map<std::string, QuantizerBinding> bindings;
      for (const QuantizerPlan& p : ctx.plans) {
        const auto& cands = p.info.is_weight ? ctx.weight_candidates : ctx.act_candidates;
        QuantizerBinding b;
        if (states.count(p.group)) {
          b.mode = QuantizerBinding::Mode::Soft;
          b.theta = theta_leaves.at(p.group);
          b.noise = &noise.at(p.info.id);
          b.tau = tau;
          b.candidates = &cands;
        } else {
          b.mode = QuantizerBinding::Mode::Fixed;
          b.config = cands.front();
        }
        bindings[p.info.id] = b;
      }
      Model::Forward fw = model.forward(tape, gather_rows(ctx.train, idx, begin, end),
                                        gather_labels(ctx.train, idx, begin, end),
                                        bindings);
      epoch_loss += checked_loss(tape, fw.loss);
      ++batches;
      tape.backward(fw.loss);
      model.sgd_step(tape, fw, cfg.lr_weights);
      for (auto& [group, state] : states) {
        const Tensor& g = tape.grad(theta_leaves.at(group));
        auto& th = state.theta.value.mutable_data();
        for (std::size_t i = 0; i < th.size(); ++i) th[i] -= cfg.lr_theta * g.at(i);
      }
    }

    report.curves.push_back({"tau", epoch, tau});
    report.curves.push_back(
        {"qss_loss", epoch, static_cast<float>(epoch_loss / static_cast<double>(batches))});
    for (const auto& [group, state] : states) {
      std::vector<float> theta(state.theta.value.data().begin(),
                               state.theta.value.data().end());
      report.traces.push_back({epoch, group, qss::selection_probabilities(theta)});
    }
  }

  // final greedy selection: argmax(theta), no noise
  for (const QuantizerPlan& p : ctx.plans) {
    const auto& cands = p.info.is_weight ? ctx.weight_candidates : ctx.act_candidates;
    std::size_t pick = 0;
    if (auto it = states.find(p.group); it != states.end()) {
      std::vector<float> theta(it->second.theta.value.data().begin(),
                               it->second.theta.value.data().end());
      pick = qss::hard_select(theta, nullptr);
    }
    const quant::QuantConfig& c = cands[pick];
    report.schemes.push_back({p.info.id, c.scheme, static_cast<int>(c.b)});
  }

  // checkpoint the trained weights bit-exactly for the train stage
  for (const auto& [name, param] : model.params()) {
    ParamBlob blob;
    blob.name = name;
    blob.shape = param.value.shape();
    blob.data.assign(param.value.data().begin(), param.value.data().end());
    report.params.push_back(std::move(blob));
  }
  return report;
}

RunReport run_train(const RunConfig& cfg, const RunReport& search) {
  if (search.phase != "search") {
    throw std::invalid_argument("train: expected a search-phase report, got '" +
                                search.phase + "'");
  }
  if (search.seed != cfg.seed) {
    throw std::invalid_argument("train: config seed " + std::to_string(cfg.seed) +
                                " differs from search report seed " +
                                std::to_string(search.seed));
  }
  RunContext ctx = build_context(cfg);
  Model model(ctx.quantized, cfg.seed);
  fill_plans(ctx, model, cfg);

  for (const ParamBlob& blob : search.params) {
    auto it = model.params().find(blob.name);
    if (it == model.params().end()) {
      throw std::invalid_argument("train: checkpoint parameter '" + blob.name +
                                  "' not in model");
    }
    it->second.value = Tensor(blob.shape, blob.data);
  }

  std::map<std::string, SchemeChoice> chosen;
  for (const SchemeChoice& s : search.schemes) chosen[s.quantizer_id] = s;

  RunReport report = search;  // carry groups, traces, schemes, curves forward
  report.phase = "final";
  report.params.clear();

  // split quantizers into learnable-bit and fixed-bit sets
  struct Learnable {
    const QuantizerPlan* plan;
    SchemeChoice choice;
    qpl::LearnableBitwidth lb;
  };
  std::vector<Learnable> learnables;
  std::vector<std::pair<const QuantizerPlan*, SchemeChoice>> fixed;
  std::vector<std::pair<float, std::size_t>> fixed_bits;
  for (const QuantizerPlan& p : ctx.plans) {
    auto it = chosen.find(p.info.id);
    if (it == chosen.end()) {
      throw std::invalid_argument("train: search report has no scheme for quantizer '" +
                                  p.info.id + "'");
    }
    if (qpl::scheme_supports_qpl(it->second.scheme)) {
      qpl::LearnableBitwidth lb;
      lb.quantizer_id = p.info.id;
      auto [lo, hi] = qpl::bit_clamp_range(it->second.scheme);
      lb.b_lo = lo;
      lb.b_hi = hi;
      lb.b = std::min(std::max(cfg.target_bits, lo), hi);  // start on target
      lb.elem_count = p.elem_count;
      learnables.push_back({&p, it->second, lb});
    } else {
      fixed.emplace_back(&p, it->second);
      fixed_bits.emplace_back(static_cast<float>(it->second.bits), p.elem_count);
    }
  }

  qpl::PrecisionTarget target{cfg.target_bits, cfg.precision_weight};
  Rng rng_qpl = Rng::for_phase(cfg.seed, "qpl");

  auto make_bindings = [&](Tape& tape, std::vector<ValueId>* bit_leaves,
                           bool bits_trainable) {
    std::map<std::string, QuantizerBinding> bindings;
    for (auto& l : learnables) {
      QuantizerBinding b;
      b.mode = QuantizerBinding::Mode::Learnable;
      b.scheme = l.choice.scheme;
      b.lambda = 1.0f;
      b.bit_leaf = tape.leaf(Tensor::scalar(l.lb.b), bits_trainable);
      if (bit_leaves) bit_leaves->push_back(b.bit_leaf);
      bindings[l.plan->info.id] = b;
    }
    for (auto& [plan, choice] : fixed) {
      QuantizerBinding b;
      b.mode = QuantizerBinding::Mode::Fixed;
      const auto& cands = plan->info.is_weight ? ctx.weight_candidates : ctx.act_candidates;
      for (const auto& c : cands) {
        if (c.scheme == choice.scheme) b.config = c;
      }
      bindings[plan->info.id] = b;
    }
    return bindings;
  };

  for (int epoch = 1; epoch <= cfg.qpl_epochs; ++epoch) {
    std::vector<std::size_t> idx(ctx.train.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng_qpl.shuffle(idx);

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < idx.size(); begin += cfg.batch_size) {
      std::size_t end = std::min(idx.size(), begin + cfg.batch_size);
      Tape tape;
      std::vector<ValueId> bit_leaves;
      auto bindings = make_bindings(tape, &bit_leaves, true);
      Model::Forward fw = model.forward(tape, gather_rows(ctx.train, idx, begin, end),
                                        gather_labels(ctx.train, idx, begin, end),
                                        bindings);
      ValueId total = fw.loss;
      if (!learnables.empty()) {
        std::vector<qpl::BitEntry> entries;
        for (std::size_t i = 0; i < learnables.size(); ++i) {
          entries.push_back({bit_leaves[i], learnables[i].lb.elem_count});
        }
        total = tape.add(fw.loss, qpl::precision_loss(tape, entries, fixed_bits, target));
      }
      epoch_loss += checked_loss(tape, fw.loss);
      ++batches;
      tape.backward(total);
      model.sgd_step(tape, fw, cfg.lr_weights);
      // g_b = dL/db + dLbar/db, then clamp to the scheme range
      for (std::size_t i = 0; i < learnables.size(); ++i) {
        auto& lb = learnables[i].lb;
        lb.b -= cfg.lr_bits * tape.grad(bit_leaves[i]).item();
        lb.clamp();
      }
    }
    if (batches > 0) {
      report.curves.push_back(
          {"qpl_loss", epoch, static_cast<float>(epoch_loss / static_cast<double>(batches))});
    }
  }

  // finalize integer bits and report count-weighted averages
  std::vector<qpl::ContinuousBit> cbits;
  for (const auto& l : learnables) {
    cbits.push_back({l.plan->info.id, l.choice.scheme, l.lb.b, l.lb.elem_count,
                     l.plan->info.is_weight});
  }
  for (const auto& [plan, choice] : fixed) {
    cbits.push_back({plan->info.id, choice.scheme, static_cast<float>(choice.bits),
                     plan->elem_count, plan->info.is_weight});
  }
  std::sort(cbits.begin(), cbits.end(),
            [](const auto& a, const auto& b) { return a.quantizer_id < b.quantizer_id; });
  if (!cbits.empty()) {
    qpl::BitPolicy policy = qpl::finalize_bits(cbits);
    report.bits = policy.per_quantizer;
    report.has_avg = true;
    report.avg_weight_bits = policy.avg_weight_bits;
    report.avg_act_bits = policy.avg_act_bits;
    report.avg_all_bits = policy.avg_all_bits;

    // evaluate with the rounded policy, freezing each learnable bit leaf
    for (auto& l : learnables) {
      for (const auto& fb : policy.per_quantizer) {
        if (fb.quantizer_id == l.plan->info.id) l.lb.b = static_cast<float>(fb.bits);
      }
    }
  }
  double acc = model.evaluate(ctx.test.features, ctx.test.labels, [&](Tape& t) {
    std::vector<ValueId> unused;
    return make_bindings(t, &unused, false);
  });
  report.accuracies.push_back({"quant_test_top1", static_cast<float>(acc)});
  return report;
}

namespace {

RunReport run_full_precision(const RunConfig& cfg) {
  RunContext ctx = build_context(cfg);
  Model model(ctx.quantized, cfg.seed);  // quantized == original here

  RunReport report;
  report.phase = "final";
  report.model_path = cfg.model_path;
  report.seed = cfg.seed;
  report.search_mode = cfg.search_mode;

  Rng rng = Rng::for_phase(cfg.seed, "fp");
  int total_epochs = cfg.qss_epochs + cfg.qpl_epochs;
  std::map<std::string, QuantizerBinding> no_bindings;
  for (int epoch = 1; epoch <= total_epochs; ++epoch) {
    std::vector<std::size_t> idx(ctx.train.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < idx.size(); begin += cfg.batch_size) {
      std::size_t end = std::min(idx.size(), begin + cfg.batch_size);
      Tape tape;
      Model::Forward fw = model.forward(tape, gather_rows(ctx.train, idx, begin, end),
                                        gather_labels(ctx.train, idx, begin, end),
                                        no_bindings);
      epoch_loss += checked_loss(tape, fw.loss);
      ++batches;
      tape.backward(fw.loss);
      model.sgd_step(tape, fw, cfg.lr_weights);
    }
    report.curves.push_back(
        {"fp_loss", epoch, static_cast<float>(epoch_loss / static_cast<double>(batches))});
  }
  double acc = model.evaluate(ctx.test.features, ctx.test.labels,
                              [](Tape&) { return std::map<std::string, QuantizerBinding>{}; });
  report.accuracies.push_back({"fp_test_top1", static_cast<float>(acc)});
  return report;
}

}  // namespace

RunReport run_autoqnn(const RunConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  if (!cfg.quantize) {
    report = run_full_precision(cfg);
  } else {
    RunReport search = run_search(cfg);
    report = run_train(cfg, search);
  }
  report.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace autoqnn::pipeline
