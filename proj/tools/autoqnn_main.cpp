// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: graph rewriting, offline alpha optimization, the
// quantization-loss benchmark, and the search/train/run pipeline stages.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "autoqnn/alpha.hpp"
#include "autoqnn/bench.hpp"
#include "autoqnn/config.hpp"
#include "autoqnn/graph_io.hpp"
#include "autoqnn/report.hpp"
#include "autoqnn/runner.hpp"

namespace {

using namespace autoqnn;

std::vector<int> parse_bits(const std::string& spec) {
  auto dots = spec.find("..");
  std::vector<int> out;
  if (dots == std::string::npos) {
    std::istringstream is(spec);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(std::stoi(item));
  } else {
    int lo = std::stoi(spec.substr(0, dots));
    int hi = std::stoi(spec.substr(dots + 2));
    for (int b = lo; b <= hi; ++b) out.push_back(b);
  }
  if (out.empty()) throw std::invalid_argument("empty bits specification '" + spec + "'");
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void add_config_flags(CLI::App* cmd, pipeline::RunConfig& cfg, std::string& config_path,
                      std::string& weight_cands, std::string& act_cands,
                      bool& seed_given, std::uint64_t& seed_flag) {
  cmd->add_option("--config", config_path, "config file (key=value lines)");
  cmd->add_option("--model", cfg.model_path, "graph definition file");
  cmd->add_option("--dataset", cfg.dataset_spec, "dataset spec (blobs:...|rings:...|file:path)");
  cmd->add_option("--qss-epochs", cfg.qss_epochs, "scheme-search epochs (Delta)");
  cmd->add_option("--qpl-epochs", cfg.qpl_epochs, "precision-learning epochs");
  cmd->add_option("--tau0", cfg.tau0, "initial temperature");
  cmd->add_option("--tau-exponent", cfg.tau_exponent, "temperature decay exponent");
  cmd->add_option("--target-bits", cfg.target_bits, "target average bitwidth");
  cmd->add_option("--precision-weight", cfg.precision_weight, "precision loss coefficient");
  cmd->add_option("--mode", cfg.search_mode, "search mode: fine|coarse");
  cmd->add_option("--candidate-bits", cfg.candidate_bits, "shared candidate bitwidth");
  cmd->add_option("--weight-candidates", weight_cands, "comma list of weight schemes");
  cmd->add_option("--act-candidates", act_cands, "comma list of activation schemes");
  cmd->add_option("--lr-weights", cfg.lr_weights, "weight learning rate");
  cmd->add_option("--lr-theta", cfg.lr_theta, "state-parameter learning rate");
  cmd->add_option("--lr-bits", cfg.lr_bits, "bitwidth learning rate");
  cmd->add_option("--batch-size", cfg.batch_size, "batch size");
  cmd->add_option("--seed", seed_flag, "run seed (required)")->each([&](const std::string&) {
    seed_given = true;
  });
  cmd->add_option("--out-dir", cfg.out_dir, "output directory");
  cmd->add_flag("--exempt-first-last,!--no-exempt-first-last", cfg.exempt_first_last,
                "skip quantizing the first/last expensive vertices");
  cmd->add_flag("--quantize,!--no-quantize", cfg.quantize,
                "toggle quantization (off = full-precision baseline)");
  cmd->add_option("--alpha-table", cfg.alpha_table_path, "alpha table file");
}

pipeline::RunConfig resolve_config(CLI::App* cmd, const std::string& config_path,
                                   pipeline::RunConfig& flags,
                                   const std::string& weight_cands,
                                   const std::string& act_cands, bool seed_given,
                                   std::uint64_t seed_flag) {
  pipeline::RunConfig cfg;
  if (!config_path.empty()) cfg = pipeline::load_config_file(config_path);

  // explicit flags override file values
  auto given = [&](const char* name) { return cmd->count(name) > 0; };
  if (given("--model")) cfg.model_path = flags.model_path;
  if (given("--dataset")) cfg.dataset_spec = flags.dataset_spec;
  if (given("--qss-epochs")) cfg.qss_epochs = flags.qss_epochs;
  if (given("--qpl-epochs")) cfg.qpl_epochs = flags.qpl_epochs;
  if (given("--tau0")) cfg.tau0 = flags.tau0;
  if (given("--tau-exponent")) cfg.tau_exponent = flags.tau_exponent;
  if (given("--target-bits")) cfg.target_bits = flags.target_bits;
  if (given("--precision-weight")) cfg.precision_weight = flags.precision_weight;
  if (given("--mode")) cfg.search_mode = flags.search_mode;
  if (given("--candidate-bits")) cfg.candidate_bits = flags.candidate_bits;
  if (given("--weight-candidates")) cfg.weight_candidates = split_csv(weight_cands);
  if (given("--act-candidates")) cfg.act_candidates = split_csv(act_cands);
  if (given("--lr-weights")) cfg.lr_weights = flags.lr_weights;
  if (given("--lr-theta")) cfg.lr_theta = flags.lr_theta;
  if (given("--lr-bits")) cfg.lr_bits = flags.lr_bits;
  if (given("--batch-size")) cfg.batch_size = flags.batch_size;
  if (given("--out-dir")) cfg.out_dir = flags.out_dir;
  if (given("--exempt-first-last") || given("--no-exempt-first-last"))
    cfg.exempt_first_last = flags.exempt_first_last;
  if (given("--quantize") || given("--no-quantize")) cfg.quantize = flags.quantize;
  if (given("--alpha-table")) cfg.alpha_table_path = flags.alpha_table_path;
  if (seed_given) {
    cfg.seed = seed_flag;
    cfg.seed_set = true;
  }
  cfg.validate();
  return cfg;
}

std::string out_path(const pipeline::RunConfig& cfg, const char* name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AutoQNN: automatic neural-network quantization"};
  app.require_subcommand(1);

  // ---- qag ----
  std::string qag_in, qag_out, qag_expensive;
  bool qag_exempt = false;
  auto* qag = app.add_subcommand("qag", "insert quantizing vertices into a graph");
  qag->add_option("--in", qag_in, "input graph file")->required();
  qag->add_option("--out", qag_out, "output graph file")->required();
  qag->add_option("--expensive", qag_expensive,
                  "comma list of expensive vertex ids (default: all conv/fc)");
  qag->add_flag("--exempt-first-last", qag_exempt,
                "drop the first and last expensive vertices from the set");

  // ---- optimize-alpha ----
  std::string oa_scheme = "clipq", oa_bits = "2..8", oa_out;
  std::size_t oa_n = 1000000;
  std::uint64_t oa_seed = 12345;
  auto* oa = app.add_subcommand("optimize-alpha",
                                "golden-section optimal scales on normal samples");
  oa->add_option("--scheme", oa_scheme, "clipq|potq|all");
  oa->add_option("--bits", oa_bits, "bit list or range, e.g. 2..8 or 2,3,4");
  oa->add_option("--out", oa_out, "alpha table output file")->required();
  oa->add_option("-n,--samples", oa_n, "sample count (>= 1e5)");
  oa->add_option("--seed", oa_seed, "sampling seed");

  // ---- bench-distributions ----
  std::string bd_out, bd_schemes = "binary,ternary,quaternary,fixedq,resq,zoomq,clipq,potq";
  std::string bd_bits = "2,3,4", bd_dists = "uniform,normal,logistic,exponential,lognormal";
  std::string bd_alpha_table;
  std::size_t bd_n = 100000;
  std::uint64_t bd_seed = 12345;
  auto* bd = app.add_subcommand("bench-distributions",
                                "quantization-loss table across distributions");
  bd->add_option("--out", bd_out, "csv output file")->required();
  bd->add_option("--schemes", bd_schemes, "comma list of schemes");
  bd->add_option("--bits", bd_bits, "bit list or range");
  bd->add_option("--dists", bd_dists, "comma list of distributions");
  bd->add_option("-n,--samples", bd_n, "samples per distribution");
  bd->add_option("--seed", bd_seed, "sampling seed");
  bd->add_option("--alpha-table", bd_alpha_table, "alpha table file (default builtin)");

  // ---- search / train / run ----
  pipeline::RunConfig flag_cfg;
  std::string cfg_path, w_cands, a_cands;
  bool seed_given = false;
  std::uint64_t seed_flag = 0;

  auto* search = app.add_subcommand("search", "stages 1-2: QAG + scheme search");
  add_config_flags(search, flag_cfg, cfg_path, w_cands, a_cands, seed_given, seed_flag);

  std::string train_from;
  auto* train = app.add_subcommand("train", "stage 3: precision learning from a search report");
  add_config_flags(train, flag_cfg, cfg_path, w_cands, a_cands, seed_given, seed_flag);
  train->add_option("--from", train_from, "search report to resume from")->required();

  auto* run = app.add_subcommand("run", "full pipeline: search then train");
  add_config_flags(run, flag_cfg, cfg_path, w_cands, a_cands, seed_given, seed_flag);

  // ---- report ----
  std::string report_in;
  auto* rep = app.add_subcommand("report", "pretty-print a run report");
  rep->add_option("--in", report_in, "report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*qag) {
      graph::Graph g = graph::load_graph_file(qag_in);
      graph::ExpensiveSet ve;
      if (qag->count("--expensive")) {
        for (const auto& id : split_csv(qag_expensive)) ve.insert(id);
      } else {
        ve = graph::default_expensive_set(g);
      }
      if (qag_exempt && !ve.empty()) {
        auto order = graph::topo_order(g);
        std::string first, last;
        for (const auto& id : order) {
          if (!ve.count(id)) continue;
          if (first.empty()) first = id;
          last = id;
        }
        ve.erase(first);
        ve.erase(last);
      }
      graph::QagStats stats;
      graph::Graph out = graph::qag_transform(g, ve, &stats);
      graph::dump_graph_file(out, qag_out);
      std::cout << "inserted " << stats.quantizers_added << " quantizing vertices in "
                << stats.outer_iterations << " sweeps -> " << qag_out << "\n";
    } else if (*oa) {
      quant::AlphaTable table;
      std::vector<quant::SchemeId> schemes;
      if (oa_scheme == "all") {
        schemes = {quant::SchemeId::ClipQ, quant::SchemeId::PotQ};
      } else {
        schemes = {quant::scheme_from_name(oa_scheme)};
      }
      for (quant::SchemeId s : schemes) {
        quant::BitRange range = quant::scheme_bit_range(s);
        for (int b : parse_bits(oa_bits)) {
          if (b < range.lo || b > range.hi) continue;  // skip out-of-range bits
          quant::AlphaResult r = quant::optimize_alpha(
              s, b, quant::standard_normal_sampler(), oa_n, oa_seed);
          table.set(s, b, r.alpha);
          std::cout << quant::scheme_name(s) << " b=" << b << " alpha=" << r.alpha
                    << " mse=" << r.mse << (r.grid_fallback ? " (grid fallback)" : "")
                    << "\n";
        }
      }
      table.save_file(oa_out);
      std::cout << "wrote " << oa_out << "\n";
    } else if (*bd) {
      std::vector<quant::SchemeId> schemes;
      for (const auto& n : split_csv(bd_schemes)) schemes.push_back(quant::scheme_from_name(n));
      std::vector<pipeline::DistKind> dists;
      for (const auto& n : split_csv(bd_dists)) dists.push_back(pipeline::dist_from_name(n));
      quant::AlphaTable alphas = bd_alpha_table.empty()
                                     ? quant::AlphaTable::builtin_defaults()
                                     : quant::AlphaTable::load_file(bd_alpha_table);
      auto rows = pipeline::bench_distributions(schemes, parse_bits(bd_bits), dists, bd_n,
                                                bd_seed, alphas);
      std::ofstream os(bd_out);
      if (!os) throw std::runtime_error("cannot write " + bd_out);
      pipeline::write_bench_csv(rows, os);
      std::cout << "wrote " << rows.size() << " rows -> " << bd_out << "\n";
    } else if (*search) {
      pipeline::RunConfig cfg =
          resolve_config(search, cfg_path, flag_cfg, w_cands, a_cands, seed_given, seed_flag);
      pipeline::RunReport r = pipeline::run_search(cfg);
      std::string path = out_path(cfg, "search_report.txt");
      r.save_file(path);
      r.pretty_print(std::cout);
      std::cout << "wrote " << path << "\n";
    } else if (*train) {
      pipeline::RunConfig cfg =
          resolve_config(train, cfg_path, flag_cfg, w_cands, a_cands, seed_given, seed_flag);
      pipeline::RunReport from = pipeline::RunReport::load_file(train_from);
      pipeline::RunReport r = pipeline::run_train(cfg, from);
      std::string path = out_path(cfg, "run_report.txt");
      r.save_file(path);
      r.pretty_print(std::cout);
      std::cout << "wrote " << path << "\n";
    } else if (*run) {
      pipeline::RunConfig cfg =
          resolve_config(run, cfg_path, flag_cfg, w_cands, a_cands, seed_given, seed_flag);
      pipeline::RunReport r = pipeline::run_autoqnn(cfg);
      std::string path = out_path(cfg, "run_report.txt");
      r.save_file(path);
      r.pretty_print(std::cout);
      std::cout << "wall clock: " << r.wall_clock_sec << " s\n";
      std::cout << "wrote " << path << "\n";
    } else if (*rep) {
      pipeline::RunReport::load_file(report_in).pretty_print(std::cout);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
