// tools/msda.cpp

// Copyright 2026  MSDA Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msda/data/data.hpp"
#include "msda/error.hpp"
#include "msda/eval/evaluate.hpp"
#include "msda/eval/report.hpp"
#include "msda/kernels/kernels.hpp"
#include "msda/model/checkpoint.hpp"
#include "msda/pipeline/config.hpp"
#include "msda/pipeline/runner.hpp"
#include "msda/version.hpp"

namespace {

using namespace msda;

struct CommonOpts {
  std::string config_file;
  std::vector<std::string> sets;
};

pipeline::ExperimentConfig resolve_config(const CommonOpts& opts) {
  nlohmann::json j = nlohmann::json::object();
  if (!opts.config_file.empty()) j = pipeline::load_config_file(opts.config_file);
  for (const auto& s : opts.sets) pipeline::apply_override(&j, s);
  return pipeline::config_from_json(j);
}

std::vector<std::string> override_keys(const CommonOpts& opts) {
  std::vector<std::string> keys;
  for (const auto& s : opts.sets) {
    const auto eq = s.find('=');
    if (eq != std::string::npos) keys.push_back(s.substr(0, eq));
  }
  return keys;
}

data::Corpus load_domain(const std::string& dir, data::Domain domain) {
  return data::load_corpus(std::filesystem::path(dir) /
                           data::domain_name(domain));
}

int cmd_gen_data(const CommonOpts& common, const std::string& out_dir) {
  auto cfg = resolve_config(common);
  for (data::Domain d : {data::Domain::source, data::Domain::target}) {
    data::Corpus corpus = data::generate_domain(cfg.data, d);
    const auto dir = std::filesystem::path(out_dir) / data::domain_name(d);
    data::write_corpus(corpus, dir);
    std::printf("%s: %zu utterances (%.2f h train, %.2f h dev, %.2f h test)\n",
                data::domain_name(d), corpus.utterances.size(),
                corpus.split_hours(data::Split::train),
                corpus.split_hours(data::Split::dev),
                corpus.split_hours(data::Split::test));
  }
  std::ofstream os(std::filesystem::path(out_dir) / "gen_config.json",
                   std::ios::binary);
  nlohmann::json j = pipeline::config_to_json(cfg);
  j["version"] = kVersion;
  os << j.dump(2) << '\n';
  std::printf("wrote %s\n", out_dir.c_str());
  return 0;
}

int cmd_train(const CommonOpts& common, const std::string& data_dir,
              const std::string& method_name, const std::string& out_dir,
              std::optional<std::uint64_t> seed, bool resume) {
  pipeline::Method method = pipeline::method_from_name(method_name);
  pipeline::reject_unused_overrides(method, override_keys(common));
  auto cfg = resolve_config(common);
  if (seed) cfg.seed = *seed;

  data::Corpus source = load_domain(data_dir, data::Domain::source);
  data::Corpus target = load_domain(data_dir, data::Domain::target);

  pipeline::Runner runner(&source, &target, cfg);
  runner.set_output_dir(out_dir);
  runner.set_resume(resume);
  auto out = runner.run(method, cfg.seed);
  std::printf("method=%s seed=%llu steps=%ld diverged=%d\n", out.record.method.c_str(),
              static_cast<unsigned long long>(out.record.seed), out.record.steps,
              out.record.diverged ? 1 : 0);
  std::printf("dev WER (selection): %.4f%%\n", 100.0 * out.record.best_dev_wer);
  std::printf("test WER source: %.4f%%  target: %.4f%%\n",
              out.record.wer_source_test, out.record.wer_target_test);
  if (out.record.diverged) throw DivergenceError("training diverged");
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_dir,
                 const std::string& domain_name, const std::string& split_name,
                 bool per_utt) {
  nlohmann::json extras;
  model::Params params = model::load_model(model_path, &extras);
  data::Domain domain = data::domain_from_name(domain_name);
  data::Split split = data::split_from_name(split_name);
  data::Corpus corpus = load_domain(data_dir, domain);
  auto report = eval::evaluate_corpus(params, corpus.split_view(split), corpus.vocab);
  if (per_utt) {
    for (const auto& row : report.rows) {
      std::printf("%s\tref: %s\n%s\thyp: %s\n", row.id.c_str(),
                  row.reference.c_str(), row.id.c_str(), row.hypothesis.c_str());
    }
  }
  std::printf("utterances: %zu  ref tokens: %ld  S=%ld D=%ld I=%ld\n",
              report.rows.size(), report.reference_tokens, report.substitutions,
              report.deletions, report.insertions);
  std::printf("WER %.4f\n", 100.0 * report.wer_fraction);
  return 0;
}

int cmd_sweep(const CommonOpts& common, const std::string& data_dir,
              const std::string& axis, const std::vector<double>& values,
              const std::vector<std::uint64_t>& seeds, double fixed_other,
              const std::string& out_csv, bool no_references) {
  auto cfg = resolve_config(common);
  data::Corpus source = load_domain(data_dir, data::Domain::source);
  data::Corpus target = load_domain(data_dir, data::Domain::target);
  pipeline::Runner runner(&source, &target, cfg);
  pipeline::SweepOptions opts;
  opts.axis = axis;
  opts.values = values;
  opts.seeds = seeds;
  opts.fixed_other = fixed_other;
  opts.include_references = !no_references;
  auto records = pipeline::run_sweep(&runner, opts);
  pipeline::write_records_csv(out_csv, records);
  std::printf("%s", eval::render_grid(records, false).c_str());
  std::printf("wrote %s\n", out_csv.c_str());
  return 0;
}

int cmd_report(const std::string& csv, bool markdown) {
  auto records = pipeline::read_records_csv(csv);
  std::printf("%s", eval::render_grid(records, markdown).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"domain-adaptive sequence recognition pipeline"};
  app.set_version_flag("--version", std::string(msda::kVersion));
  app.require_subcommand(1);

  CommonOpts common;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic corpus pair");
  std::string gen_out = "data";
  gen->add_option("--config", common.config_file, "JSON config file");
  gen->add_option("--set", common.sets, "override, e.g. data.shift_strength=0.5");
  gen->add_option("--out", gen_out, "output directory");

  auto* train = app.add_subcommand("train", "train one method");
  std::string train_data = "data";
  std::string train_method = "msda";
  std::string train_out = "runs";
  std::optional<std::uint64_t> train_seed;
  bool train_resume = false;
  train->add_option("--config", common.config_file, "JSON config file");
  train->add_option("--set", common.sets, "override, e.g. stage1.alpha=0.01");
  train->add_option("--data", train_data, "corpus directory (from gen-data)");
  train->add_option("--method", train_method,
                    "ft|cpt|m2ds2|ft_mp|m2ds2_mp|msda|msda_ssl_teacher|msda_ssl_student");
  train->add_option("--out", train_out, "run output directory");
  train->add_option("--seed", train_seed, "run seed (overrides config)");
  train->add_flag("--resume", train_resume, "continue from a saved first-stage state");

  auto* ev = app.add_subcommand("evaluate", "score a saved model on a split");
  std::string ev_model, ev_data = "data", ev_domain = "target", ev_split = "test";
  bool ev_per_utt = false;
  ev->add_option("--model", ev_model, "model checkpoint")->required();
  ev->add_option("--data", ev_data, "corpus directory");
  ev->add_option("--domain", ev_domain, "source|target");
  ev->add_option("--split", ev_split, "train|dev|test");
  ev->add_flag("--per-utt", ev_per_utt, "print per-utterance transcripts");

  auto* sw = app.add_subcommand("sweep", "sweep an axis over seeds");
  std::string sw_data = "data", sw_axis = "gamma", sw_out = "sweep.csv";
  std::vector<double> sw_values;
  std::vector<std::uint64_t> sw_seeds = {1, 2, 3};
  bool sw_norefs = false;
  sw->add_option("--config", common.config_file, "JSON config file");
  sw->add_option("--set", common.sets, "override");
  sw->add_option("--data", sw_data, "corpus directory");
  sw->add_option("--axis", sw_axis, "gamma|delta|fraction");
  sw->add_option("--values", sw_values, "axis values")
      ->required()
      ->delimiter(',');
  sw->add_option("--seeds", sw_seeds, "run seeds")->delimiter(',');
  double sw_fixed = 1e-3;
  sw->add_option("--fixed-other", sw_fixed,
                 "held value of the coefficient not being swept");
  sw->add_option("--out", sw_out, "records CSV path");
  sw->add_flag("--no-references", sw_norefs, "skip ft/m2ds2 reference rows");

  auto* rep = app.add_subcommand("report", "render a records CSV as a grid");
  std::string rep_csv;
  bool rep_md = false;
  rep->add_option("--input", rep_csv, "records CSV")->required();
  rep->add_flag("--markdown", rep_md, "markdown table output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(common, gen_out);
    if (train->parsed())
      return cmd_train(common, train_data, train_method, train_out, train_seed,
                       train_resume);
    if (ev->parsed())
      return cmd_evaluate(ev_model, ev_data, ev_domain, ev_split, ev_per_utt);
    if (sw->parsed())
      return cmd_sweep(common, sw_data, sw_axis, sw_values, sw_seeds, sw_fixed,
                       sw_out, sw_norefs);
    if (rep->parsed()) return cmd_report(rep_csv, rep_md);
  } catch (const msda::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const msda::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const msda::CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return 3;
  } catch (const msda::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
