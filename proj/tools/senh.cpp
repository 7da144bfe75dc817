// Command-line front end: corpus preparation, training, enhancement,
// evaluation, receptive-field reporting, and waveform comparison plots.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "senh/config.hpp"
#include "senh/model.hpp"
#include "senh/plot.hpp"
#include "senh/receptive_field.hpp"
#include "senh/trainer.hpp"

namespace {

using namespace senh;

int cmd_prepare(const std::string& config_path) {
  ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
  run_prepare(cfg, std::cout);
  return 0;
}

int cmd_train(const std::string& config_path) {
  ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
  const TrainResult r = run_training(cfg, std::cout);
  std::cout << "done after " << r.steps << " steps\n";
  return 0;
}

int cmd_enhance(const std::string& ckpt, const std::string& input,
                const std::string& output, bool allow_resample) {
  Model model = load_checkpoint(ckpt);
  AudioBuffer wav = load_wav(input);
  if (wav.sample_rate != model.config().sample_rate) {
    if (!allow_resample)
      throw Error(ErrorCategory::data,
                  "input rate " + std::to_string(wav.sample_rate) +
                      " != model rate " +
                      std::to_string(model.config().sample_rate) +
                      " (pass --resample to convert)");
    wav = resample(wav, model.config().sample_rate);
  }
  std::vector<double> probe = wav.samples;
  const NormMeta meta = normalize(probe);
  const AudioBuffer out = model.enhance(wav, meta);
  write_wav(output, out);
  std::cout << "enhanced " << input << " -> " << output << " ("
            << out.samples.size() << " samples @ " << out.sample_rate << " Hz)\n";
  return 0;
}

int cmd_evaluate(const std::string& ckpt, const std::string& manifest_path,
                 const std::string& split_name, const std::string& out_dir,
                 const std::string& pesq_command) {
  Model model = load_checkpoint(ckpt);
  const DatasetManifest manifest = read_manifest(manifest_path);
  run_evaluation(model, manifest, split_from_string(split_name), out_dir,
                 pesq_command, std::cout);
  std::cout << "reports written to " << out_dir << "\n";
  return 0;
}

int cmd_rf_report(const std::string& config_path, const std::string& variant,
                  const std::string& widths, int64_t kernel, double rate) {
  UNetConfig cfg;
  if (!config_path.empty()) {
    cfg = ExperimentConfig::from_file(config_path).model;
  } else {
    cfg.variant = variant_from_string(variant);
    if (!widths.empty()) cfg.widths = parse_int_list(widths);
    cfg.kernel = kernel;
  }
  cfg.validate();
  Model model = Model::build(cfg, /*seed=*/0);
  const RFReport report = receptive_field(model.encoder_layers());
  std::cout << "variant: " << to_string(cfg.variant) << "\n";
  std::cout << format_rf_table(report, rate);
  return 0;
}

int cmd_plot(const std::string& clean_path, const std::string& pred_path,
             double from_s, double to_s, const std::string& out_svg) {
  const AudioBuffer truth = load_wav(clean_path);
  const AudioBuffer pred = load_wav(pred_path);
  std::string tsv = out_svg;
  const size_t dot = tsv.rfind('.');
  tsv = (dot == std::string::npos ? tsv : tsv.substr(0, dot)) + ".tsv";
  plot_comparison(truth, pred, from_s, to_s, out_svg, tsv);
  std::cout << "wrote " << out_svg << " and " << tsv << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"waveform speech enhancement toolkit"};
  app.require_subcommand(1);

  std::string config_path, ckpt, input, output, manifest, split = "test";
  std::string out_dir = "reports", pesq_command, variant = "baseline", widths;
  int64_t kernel = 30;
  double rate = 16000.0, from_s = 0.0, to_s = 0.5;
  bool allow_resample = false;

  auto* prepare = app.add_subcommand("prepare", "materialize a training corpus");
  prepare->add_option("--config", config_path, "experiment config file")->required();

  auto* train = app.add_subcommand("train", "train a model on a prepared corpus");
  train->add_option("--config", config_path, "experiment config file")->required();

  auto* enhance = app.add_subcommand("enhance", "denoise a WAV file");
  enhance->add_option("--ckpt", ckpt, "model checkpoint")->required();
  enhance->add_option("--input", input, "noisy input WAV")->required();
  enhance->add_option("--output", output, "enhanced output WAV")->required();
  enhance->add_flag("--resample", allow_resample, "resample input to the model rate");

  auto* evaluate = app.add_subcommand("evaluate", "report metrics on a manifest split");
  evaluate->add_option("--ckpt", ckpt, "model checkpoint")->required();
  evaluate->add_option("--manifest", manifest, "dataset manifest")->required();
  evaluate->add_option("--split", split, "train|val|test (default test)");
  evaluate->add_option("--out-dir", out_dir, "report output directory");
  evaluate->add_option("--pesq-command", pesq_command,
                       "external PESQ command with {clean} and {test} placeholders");

  auto* rf = app.add_subcommand("rf-report", "per-layer receptive fields");
  rf->add_option("--config", config_path, "experiment config file");
  rf->add_option("--variant", variant, "baseline|aspp-middle|aspp-end|aspp-middle+end");
  rf->add_option("--widths", widths, "comma-separated encoder widths");
  rf->add_option("--kernel", kernel, "conv filter size (default 30)");
  rf->add_option("--rate", rate, "sample rate for the seconds column");

  auto* plot = app.add_subcommand("plot", "overlay ground truth and prediction");
  plot->add_option("--clean", input, "ground-truth WAV")->required();
  plot->add_option("--pred", output, "prediction WAV")->required();
  plot->add_option("--from", from_s, "window start, seconds")->required();
  plot->add_option("--to", to_s, "window end, seconds")->required();
  plot->add_option("--out", out_dir, "output SVG path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) return cmd_prepare(config_path);
    if (train->parsed()) return cmd_train(config_path);
    if (enhance->parsed()) return cmd_enhance(ckpt, input, output, allow_resample);
    if (evaluate->parsed())
      return cmd_evaluate(ckpt, manifest, split, out_dir, pesq_command);
    if (rf->parsed()) return cmd_rf_report(config_path, variant, widths, kernel, rate);
    if (plot->parsed()) return cmd_plot(input, output, from_s, to_s, out_dir);
  } catch (const senh::Error& e) {
    std::cerr << e.line() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error:internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
