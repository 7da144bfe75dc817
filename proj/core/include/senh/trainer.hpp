#ifndef SENH_TRAINER_HPP
#define SENH_TRAINER_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "senh/config.hpp"
#include "senh/metrics.hpp"
#include "senh/model.hpp"

namespace senh {

struct TrainResult {
  int64_t steps = 0;
  double final_train_l1 = 0.0;  // masked mean over the full training set
  double best_val_l1 = 0.0;
  std::string best_ckpt_path;
  std::vector<float> loss_curve;  // per-step batch L1
  std::vector<std::pair<int64_t, double>> val_history;
};

// Materializes the corpus described by cfg.prepare (synthetic by default, raw
// WAV directories when prepare.clean_dir is set) and writes the manifest to
// cfg.data.manifest.
DatasetManifest run_prepare(const ExperimentConfig& cfg, std::ostream& log);

// Seeded training on 1 s clips with the masked L1 objective, periodic
// validation, best-checkpoint saving, and early stopping.
TrainResult run_training(const ExperimentConfig& cfg, std::ostream& log);

// Enhances every utterance of a manifest split with the checkpointed model
// and reports Input vs Enhanced metrics. Enhanced waveforms and the report
// (TSV + pretty text) land in out_dir.
EvalReport run_evaluation(Model& model, const DatasetManifest& manifest, Split split,
                          const std::string& out_dir, const std::string& pesq_command,
                          std::ostream& log);

// In-memory clip store shared by training and the acceptance suite.
struct ClipSet {
  int64_t clip_len = 0;
  std::vector<ClipPair> clips;
};

ClipSet load_clips(const DatasetManifest& manifest, Split split,
                   const DataConfig& data);

}  // namespace senh

#endif  // SENH_TRAINER_HPP
