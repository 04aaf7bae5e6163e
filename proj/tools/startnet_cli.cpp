#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "startnet/experiment.hpp"

namespace {

using startnet::ExperimentConfig;

struct SubCommand {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::string config_file;
};

void add_config_options(SubCommand& sc) {
  for (const std::string& key : startnet::config_keys()) {
    sc.app->add_option("--" + key, sc.values[key], "config key " + key);
  }
  sc.app->add_option("--config", sc.config_file, "flat key=value config file");
}

void apply_overrides(const SubCommand& sc, ExperimentConfig& config) {
  for (const auto& [key, value] : sc.values) {
    if (sc.app->count("--" + key) > 0) startnet::apply_config_key(config, key, value);
  }
}

}  // namespace

int main(int argc, char** argv) {
  // First pass: the config file applies below flag overrides.
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
  }
  ExperimentConfig config = startnet::config_from_env();
  try {
    if (!config_path.empty()) startnet::load_config_file(config, config_path);
  } catch (const startnet::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"StartNet: two-stage online action start detection on chunk feature streams"};
  app.require_subcommand(1);
  std::string top_config;
  app.add_option("--config", top_config, "flat key=value config file");

  SubCommand gen{app.add_subcommand("gen", "generate synthetic train/val/test stream files")};
  add_config_options(gen);

  SubCommand train_cls{app.add_subcommand("train-cls", "train the per-chunk classifier")};
  add_config_options(train_cls);

  SubCommand train_loc{
      app.add_subcommand("train-loc", "train the start localizer on frozen classifier scores")};
  add_config_options(train_loc);

  SubCommand detect{app.add_subcommand("detect", "run online start detection over streams")};
  add_config_options(detect);
  std::string detect_input, detect_out, detect_dump;
  detect.app->add_option("--input", detect_input, "stream file or directory (default: test split)");
  detect.app->add_option("--out", detect_out, "output predictions .jsonl");
  detect.app->add_option("--dump-dir", detect_dump,
                         "also write per-stream score and start-probability streams here");

  SubCommand eval{app.add_subcommand("eval", "point-level AP evaluation of a predictions file")};
  add_config_options(eval);
  std::string eval_preds, eval_data, eval_prefix;
  eval.app->add_option("--preds", eval_preds, "predictions .jsonl")->required();
  eval.app->add_option("--data", eval_data, "stream file or directory for ground truth");
  eval.app->add_option("--out-prefix", eval_prefix, "output prefix for report.json/report.csv");

  SubCommand report{app.add_subcommand("report", "merge evaluation reports into a comparison CSV")};
  add_config_options(report);
  std::vector<std::string> report_inputs;
  std::string report_out;
  report.app->add_option("reports", report_inputs, "report.json files")->required();
  report.app->add_option("--out", report_out, "output comparison CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen.app->parsed()) {
      apply_overrides(gen, config);
      const startnet::GenResult result = startnet::run_gen(config);
      std::cout << "wrote " << result.train_files.size() << " train / " << result.val_files.size()
                << " val / " << result.test_files.size() << " test streams under " << config.data_dir
                << "\n";
    } else if (train_cls.app->parsed()) {
      apply_overrides(train_cls, config);
      const startnet::TrainClsResult result = startnet::run_train_cls(config);
      for (std::size_t e = 0; e < result.loss_curve.size(); ++e) {
        std::printf("epoch %zu mean cross-entropy %.6f\n", e, result.loss_curve[e]);
      }
      std::cout << "checkpoint: " << result.checkpoint.string() << "\n";
    } else if (train_loc.app->parsed()) {
      apply_overrides(train_loc, config);
      const startnet::TrainLocResult result = startnet::run_train_loc(config);
      const bool ce = config.variant == "startnet-ce";
      for (std::size_t i = 0; i < result.curve.size(); ++i) {
        if (i % 200 != 0 && i + 1 != result.curve.size()) continue;
        if (ce) {
          std::printf("iteration %zu mean loss %.6f\n", i, result.curve[i].baseline_loss);
        } else {
          std::printf("iteration %zu mean sequence reward %.6f baseline loss %.6f\n", i,
                      result.curve[i].mean_total_reward, result.curve[i].baseline_loss);
        }
      }
      std::printf("alpha used: %.6f\n", result.alpha_used);
      std::cout << "checkpoint: " << result.checkpoint.string() << "\n";
    } else if (detect.app->parsed()) {
      apply_overrides(detect, config);
      const std::filesystem::path input =
          detect_input.empty() ? std::filesystem::path(config.data_dir) / "test"
                               : std::filesystem::path(detect_input);
      const std::filesystem::path out =
          detect_out.empty() ? std::filesystem::path(config.report_dir) /
                                   ("predictions_" + config.variant + ".jsonl")
                             : std::filesystem::path(detect_out);
      const startnet::DetectResult result =
          startnet::run_detect(config, input, out, detect_dump);
      std::cout << result.predictions.size() << " start predictions -> "
                << result.predictions_jsonl.string() << "\n";
    } else if (eval.app->parsed()) {
      apply_overrides(eval, config);
      const std::filesystem::path data =
          eval_data.empty() ? std::filesystem::path(config.data_dir) / "test"
                            : std::filesystem::path(eval_data);
      const std::filesystem::path prefix =
          eval_prefix.empty() ? std::filesystem::path(config.report_dir) / config.variant
                              : std::filesystem::path(eval_prefix);
      const startnet::EvalResult result = startnet::run_eval(config, eval_preds, data, prefix);
      const std::vector<double>& depths = result.report.config.depths;
      std::printf("p-mAP at first offset, depth %.2f: %.4f\n", depths.back(),
                  result.report.pmap.front().back());
      std::cout << "report: " << result.report_json.string() << "\n";
    } else if (report.app->parsed()) {
      apply_overrides(report, config);
      std::vector<std::filesystem::path> paths(report_inputs.begin(), report_inputs.end());
      startnet::run_report(paths, report_out);
      std::cout << "comparison: " << report_out << "\n";
    }
  } catch (const startnet::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const startnet::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
