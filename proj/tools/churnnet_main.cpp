// churnnet CLI: synthetic data generation, graph building, featurization,
// relational scoring, model training, evaluation, the architecture grid and
// the statistical comparison reports.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "churnnet/bench.hpp"
#include "churnnet/csv.hpp"

namespace cn = churnnet;

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  for (char c : s) {
    if (c == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item.push_back(c);
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

cn::SynthConfig synth_from_config(const cn::Config& cfg) {
  cn::SynthConfig sc;
  sc.n_customers =
      static_cast<std::size_t>(cfg.get_int("synth.customers", 10000));
  sc.months = static_cast<int>(cfg.get_int("synth.months", 6));
  sc.churn_rate = cfg.get_double("synth.churn_rate", 0.05);
  sc.sparsity = cfg.get_double("synth.sparsity", 1e-3);
  sc.homophily = cfg.get_double("synth.homophily", 0.8);
  sc.degree_exponent = cfg.get_double("synth.degree_exponent", 2.5);
  sc.calls_per_tie_month = cfg.get_double("synth.calls_per_tie_month", 4.0);
  sc.mean_duration_s = cfg.get_double("synth.mean_duration_s", 90.0);
  sc.short_call_fraction = cfg.get_double("synth.short_call_fraction", 0.05);
  sc.seed = static_cast<std::uint64_t>(
      cfg.get_int("synth.seed", cfg.get_int("seed", 1)));
  return sc;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"social-network churn analytics benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  int workers = 1;
  app.add_option("--config", config_path, "key=value config file");
  auto* seed_opt = app.add_option("--seed", seed, "global RNG seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads");

  auto* synth_cmd =
      app.add_subcommand("synth", "generate a synthetic CDR dataset");

  auto* build_cmd =
      app.add_subcommand("build-graph", "build and export one call graph");
  std::string build_cdr, build_direction = "undirected", build_scheme = "length";
  std::string build_segment = "whole";
  int build_first = 4, build_last = 4;
  bool build_decay = false, build_reciprocal = false;
  build_cmd->add_option("--cdr", build_cdr, "CDR csv path")->required();
  build_cmd->add_option("--direction", build_direction);
  build_cmd->add_option("--scheme", build_scheme);
  build_cmd->add_option("--segment", build_segment);
  build_cmd->add_option("--first-month", build_first);
  build_cmd->add_option("--last-month", build_last);
  build_cmd->add_flag("--decay", build_decay);
  build_cmd->add_flag("--reciprocal", build_reciprocal);

  auto* feat_cmd =
      app.add_subcommand("featurize", "extract the NRC feature table");
  std::string feat_cdr, feat_mode = "network_only";
  int feat_first = 2, feat_last = 4, feat_label_month = 4;
  feat_cmd->add_option("--cdr", feat_cdr, "CDR csv path")->required();
  feat_cmd->add_option("--mode", feat_mode);
  feat_cmd->add_option("--first-month", feat_first);
  feat_cmd->add_option("--last-month", feat_last);
  feat_cmd->add_option("--label-month", feat_label_month);

  auto* score_cmd =
      app.add_subcommand("score", "run relational learners, export scores");
  std::string score_cdr, score_learners = "no-wvrn", score_timeframe = "short";
  std::string score_scheme = "length";
  score_cmd->add_option("--cdr", score_cdr, "CDR csv path")->required();
  score_cmd->add_option("--learners", score_learners, "comma-separated ids");
  score_cmd->add_option("--timeframe", score_timeframe, "short|long");
  score_cmd->add_option("--scheme", score_scheme);

  auto* train_cmd = app.add_subcommand(
      "train", "fit the out-of-time logistic models, export the report");
  std::string train_cdr, train_mode;
  train_cmd->add_option("--cdr", train_cdr, "CDR csv path")->required();
  train_cmd->add_option("--mode", train_mode,
                        "network_only|rl_only|all (default: all three)");

  auto* eval_cmd =
      app.add_subcommand("evaluate", "metrics for an exported score csv");
  std::string eval_scores, eval_labels, eval_cdr;
  eval_cmd->add_option("--scores", eval_scores, "score csv")->required();
  eval_cmd->add_option("--labels", eval_labels, "labels csv")->required();
  eval_cmd->add_option("--cdr", eval_cdr, "CDR csv path")->required();

  auto* benchmark_cmd = app.add_subcommand(
      "benchmark", "run the learner and NRC benchmarks, write reports");

  auto* grid_cmd = app.add_subcommand(
      "grid", "run the network-architecture grid (resumable)");
  std::size_t grid_limit = 0;
  grid_cmd->add_option("--max-cells", grid_limit,
                       "stop after this many newly computed cells");

  auto* stats_cmd = app.add_subcommand(
      "stats", "statistical comparison from report csv files");
  std::vector<std::string> stats_reports;
  stats_cmd->add_option("--report", stats_reports, "report csv (repeatable)")
      ->required();
  std::string stats_nrc_report;
  stats_cmd->add_option("--nrc-report", stats_nrc_report, "NRC report csv");

  auto* report_cmd =
      app.add_subcommand("report", "merge report csv files, echo a summary");
  std::vector<std::string> report_inputs;
  report_cmd->add_option("--report", report_inputs, "report csv (repeatable)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    cn::Config cfg;
    if (!config_path.empty()) cfg = cn::Config::load(config_path);
    if (seed_opt->count() > 0 || !cfg.has("seed")) {
      cfg.set("seed", std::to_string(seed));
    }
    cfg.set("out", out_dir);
    cfg.set("workers", std::to_string(workers));
    cn::ExperimentPlan plan = cn::plan_from_config(cfg);
    std::filesystem::create_directories(out_dir);

    if (*synth_cmd) {
      cn::SynthConfig sc = synth_from_config(cfg);
      cn::SynthResult result = cn::generate(sc);
      {
        std::ofstream out(out_dir + "/cdr.csv", std::ios::binary);
        cn::write_cdr_csv(result.store, out);
      }
      {
        std::ofstream out(out_dir + "/labels.csv", std::ios::binary);
        cn::write_labels_csv(result.store, result.ground_truth, out);
      }
      std::cout << cn::verify(result.store, result.ground_truth, sc).describe()
                << '\n';
      return 0;
    }

    if (*build_cmd) {
      cn::DatasetSpec spec;
      spec.name = "cli";
      spec.cdr_path = build_cdr;
      cn::LoadedDataset data = cn::load_dataset(spec, plan);
      cn::GraphBuildOptions options;
      options.direction = cn::direction_from_string(build_direction);
      options.scheme = cn::scheme_from_string(build_scheme);
      options.decay = cn::DecaySpec{build_decay, plan.decay_gamma};
      options.reciprocal_only = build_reciprocal;
      bool found = false;
      for (const cn::SegmentSpec& s : cn::standard_segments()) {
        if (s.name == build_segment) {
          options.segment = s;
          found = true;
          break;
        }
      }
      if (!found) throw std::invalid_argument("unknown segment " + build_segment);
      cn::CallGraph g =
          cn::build_graph(data.store, {build_first, build_last}, options);
      std::ofstream edges(out_dir + "/graph_edges.csv", std::ios::binary);
      std::ofstream sidecar(out_dir + "/graph_meta.json", std::ios::binary);
      cn::export_graph(g, data.store.ids(), edges, sidecar);
      std::cout << "nodes=" << g.node_count() << " edges=" << g.edge_count()
                << " sparsity=" << cn::csv::format_double(cn::sparsity(g))
                << '\n';
      return 0;
    }

    if (*score_cmd) {
      cn::DatasetSpec spec;
      spec.name = "cli";
      spec.cdr_path = score_cdr;
      cn::LoadedDataset data = cn::load_dataset(spec, plan);
      cn::Timeframe tf = score_timeframe == "long" ? cn::Timeframe::long_term
                                                   : cn::Timeframe::short_term;
      cn::GraphBuildOptions net;
      net.direction = plan.rl_direction;
      net.scheme = cn::scheme_from_string(score_scheme);
      net.decay = cn::DecaySpec{plan.rl_decay, plan.decay_gamma};
      std::vector<std::string> notices;
      std::ofstream out(out_dir + "/scores.csv", std::ios::binary);
      out << "customer,learner,score\n";
      for (const std::string& learner : split_commas(score_learners)) {
        auto scores =
            cn::score_learner(cn::parse_learner_id(learner), data,
                              cn::rl_timeline(tf), net, plan, &notices);
        if (!scores) continue;
        for (std::size_t i = 0; i < scores->scores.size(); ++i) {
          out << cn::csv::escape(
                     data.store.ids().name(static_cast<cn::NodeIndex>(i)))
              << ',' << learner << ','
              << cn::csv::format_double(scores->scores[i]) << '\n';
        }
      }
      for (const std::string& n : notices) std::cerr << "note: " << n << '\n';
      return 0;
    }

    if (*feat_cmd) {
      cn::DatasetSpec spec;
      spec.name = "cli";
      spec.cdr_path = feat_cdr;
      cn::LoadedDataset data = cn::load_dataset(spec, plan);
      cn::GraphBuildOptions net;
      net.direction = cn::Direction::undirected;
      net.scheme = cn::WeightScheme::length;
      net.decay = cn::DecaySpec{plan.rl_decay, plan.decay_gamma};
      cn::CallGraph g = cn::build_graph(data.store, {feat_first, feat_last}, net);
      const auto& labels = data.month_churn[feat_label_month];
      cn::NetworkFeatureBlock block;
      block.degree = cn::degree_features(g, labels);
      block.triangles = cn::triangle_features(g, labels);
      block.transitivity = cn::transitivity(g);
      block.link = cn::link_based(g, labels);
      cn::TimeInterval span = data.store.span({feat_first, feat_last});
      block.rfm = cn::rfm_features(data.store.months({feat_first, feat_last}),
                                   data.store.node_count(), span.begin,
                                   span.end);
      cn::FeatureTable table =
          cn::assemble(block, {}, cn::feature_mode_from_string(feat_mode));
      std::ofstream out(out_dir + "/features.csv", std::ios::binary);
      cn::write_feature_csv(table, data.store.ids(), &labels, out);
      return 0;
    }

    if (*train_cmd) {
      cn::ExperimentPlan train_plan = plan;
      cn::DatasetSpec spec;
      spec.name = "cli";
      spec.cdr_path = train_cdr;
      train_plan.datasets = {spec};
      if (!train_mode.empty()) {
        train_plan.nrc_modes = {cn::feature_mode_from_string(train_mode)};
      }
      cn::EvalReport report = cn::run_nrc_benchmark(train_plan);
      std::ofstream out(out_dir + "/nrc_report.csv", std::ios::binary);
      report.write_csv(out);
      for (const std::string& n : report.notices) {
        std::cerr << "note: " << n << '\n';
      }
      return 0;
    }

    if (*eval_cmd) {
      cn::DatasetSpec spec;
      spec.name = "cli";
      spec.cdr_path = eval_cdr;
      cn::LoadedDataset data = cn::load_dataset(spec, plan);
      std::ifstream label_in(eval_labels);
      if (!label_in) throw std::runtime_error("cannot open " + eval_labels);
      cn::ChurnLabels labels = cn::read_labels_csv(data.store, label_in);
      std::ifstream in(eval_scores);
      if (!in) throw std::runtime_error("cannot open " + eval_scores);
      cn::csv::Reader reader(in);
      auto header = reader.next();
      if (!header) throw std::runtime_error("empty score csv");
      std::map<std::string, std::vector<double>> per_learner;
      std::vector<double> blank(data.store.node_count(), 0.0);
      while (auto row = reader.next()) {
        if (row->size() != 3) continue;
        cn::NodeIndex i = data.store.ids().find((*row)[0]);
        if (i == cn::kInvalidNode) continue;
        auto& v = per_learner.try_emplace((*row)[1], blank).first->second;
        v[i] = std::stod((*row)[2]);
      }
      cn::TimeInterval m5 = data.store.month_span(5);
      std::vector<std::uint8_t> y(data.store.node_count(), 0);
      for (cn::NodeIndex i = 0; i < data.store.node_count(); ++i) {
        y[i] = labels.churned_in(i, m5) ? 1 : 0;
      }
      std::ofstream out(out_dir + "/metrics.csv", std::ios::binary);
      out << "learner,metric,value\n";
      for (const auto& [learner, scores] : per_learner) {
        for (const std::string& metric : plan.metrics) {
          double v = cn::compute_metric(metric, scores, y, plan.emp);
          out << learner << ',' << metric << ',' << cn::csv::format_double(v)
              << '\n';
        }
      }
      return 0;
    }

    if (*benchmark_cmd) {
      cn::EvalReport learner_report = cn::run_learner_benchmark(plan);
      cn::EvalReport nrc_report = cn::run_nrc_benchmark(plan);
      {
        std::ofstream out(out_dir + "/learner_report.csv", std::ios::binary);
        learner_report.write_csv(out);
      }
      {
        std::ofstream out(out_dir + "/nrc_report.csv", std::ios::binary);
        nrc_report.write_csv(out);
      }
      for (const std::string& n : learner_report.notices) {
        std::cerr << "note: " << n << '\n';
      }
      for (const std::string& n : nrc_report.notices) {
        std::cerr << "note: " << n << '\n';
      }
      return 0;
    }

    if (*grid_cmd) {
      if (plan.datasets.empty()) {
        cn::DatasetSpec spec;
        spec.name = "synth";
        spec.synth = synth_from_config(cfg);
        plan.datasets.push_back(spec);
      }
      plan.grid_max_new_cells = grid_limit;
      std::cout << "grid cells: " << plan.grid_cell_count() << '\n';
      cn::EvalReport report = cn::run_architecture_grid(plan);
      std::cout << "rows: " << report.rows.size() << '\n';
      return 0;
    }

    if (*stats_cmd) {
      cn::EvalReport learner_report;
      for (const std::string& path : stats_reports) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        learner_report.append(cn::EvalReport::read_csv(in));
      }
      cn::EvalReport nrc_report;
      if (!stats_nrc_report.empty()) {
        std::ifstream in(stats_nrc_report);
        if (!in) throw std::runtime_error("cannot open " + stats_nrc_report);
        nrc_report = cn::EvalReport::read_csv(in);
      }
      cn::StatsSummary summary = cn::run_stats(learner_report, nrc_report, plan);
      write_file(out_dir + "/stats_summary.json", summary.json + "\n");
      std::cout << summary.json << '\n';
      return 0;
    }

    if (*report_cmd) {
      cn::EvalReport merged;
      for (const std::string& path : report_inputs) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        merged.append(cn::EvalReport::read_csv(in));
      }
      std::ofstream out(out_dir + "/combined_report.csv", std::ios::binary);
      merged.write_csv(out);
      std::cout << "rows: " << merged.rows.size() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
