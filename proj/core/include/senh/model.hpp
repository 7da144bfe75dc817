#ifndef SENH_MODEL_HPP
#define SENH_MODEL_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "senh/audio.hpp"
#include "senh/optimizer.hpp"
#include "senh/pipeline.hpp"
#include "senh/receptive_field.hpp"
#include "senh/tape.hpp"

namespace senh {

enum class Variant { baseline, aspp_middle, aspp_end, aspp_middle_end };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

// Declarative description of the encoder-decoder network: 6 encoder blocks of
// two same-padded convs with a window-2/stride-2 pool after blocks 1-5, five
// mirror decoder blocks (stride-2 transposed conv, skip concat, two convs),
// and a two-conv output head ending in one linear channel.
struct UNetConfig {
  Variant variant = Variant::baseline;
  std::vector<int64_t> widths = {16, 32, 64, 128, 256, 256};
  int64_t kernel = 30;
  std::vector<int64_t> aspp_factors = {1, 2, 3, 4};
  float activation_slope = 0.2f;
  int64_t sample_rate = 16000;

  void validate() const;
  // Length granularity imposed by the five pooling stages.
  static constexpr int64_t length_multiple = 32;
};

// Grouped dilated conv: c_out/|factors| dilation groups, each contributing one
// channel per factor; parameter count equals the standard conv it replaces.
struct AsppLayerSpec {
  int64_t c_in = 0;
  int64_t c_out = 0;
  int64_t f = 0;
  std::vector<int64_t> factors = {1, 2, 3, 4};

  int64_t groups() const { return c_out / static_cast<int64_t>(factors.size()); }
  void validate() const;
};

// One conv unit of the network: a standard same-padded conv or its ASPP
// replacement, optionally followed by the leaky activation.
struct ConvUnit {
  bool aspp = false;
  bool activation = true;
  int64_t c_in = 0, c_out = 0, f = 0;
  int w = -1, b = -1;            // standard conv parameter slots
  std::array<int, 4> ws{-1, -1, -1, -1};  // per-factor ASPP weight slots
  std::array<int, 4> bs{-1, -1, -1, -1};
};

struct ParamAuditEntry {
  std::string name;
  int64_t count = 0;
};

class Model {
 public:
  using Value = TapeF::Value;

  static Model build(const UNetConfig& cfg, uint32_t seed);

  const UNetConfig& config() const { return cfg_; }

  // Forward through the full network; input (b, 1, L) with L divisible by 32,
  // output (b, 1, L). Parameters are registered on the tape with their grad
  // buffers as sinks, so a later backward() populates Parameter::grad.
  Value forward(TapeF& tape, Value x);

  // Convenience inference pass returning the output tensor.
  TensorF run(const TensorF& input);

  // Whole-utterance enhancement: right-pad to a multiple of 32, normalize with
  // `meta`, forward, clamp to [0,1], crop, de-normalize.
  AudioBuffer enhance(const AudioBuffer& wav, const NormMeta& meta);

  std::vector<Parameter<float>*> trainable();
  int64_t param_count() const;
  std::vector<ParamAuditEntry> param_audit() const;

  // Encoding-path layer list for receptive-field analysis.
  std::vector<LayerSpec> encoder_layers() const;

  std::vector<Parameter<float>>& params() { return params_; }
  const std::vector<Parameter<float>>& params() const { return params_; }

 private:
  friend Model load_checkpoint(const std::string& path);

  Value forward_unit(TapeF& tape, Value x, const ConvUnit& unit);

  UNetConfig cfg_;
  std::vector<Parameter<float>> params_;
  std::array<std::array<ConvUnit, 2>, 6> encoder_{};
  struct DecLevel {
    int up_w = -1, up_b = -1;
    int64_t c_in = 0, c_out = 0;
    std::array<ConvUnit, 2> convs{};
  };
  std::array<DecLevel, 5> decoder_{};  // deepest level first
  std::array<ConvUnit, 2> head_{};
};

// Standalone grouped dilated convolution used by the bottleneck/head
// replacements; weights[j]/biases[j] hold the factor-j filters of every group.
TapeF::Value aspp_forward(TapeF& tape, TapeF::Value x, const AsppLayerSpec& spec,
                          const std::array<TapeF::Value, 4>& weights,
                          const std::array<TapeF::Value, 4>& biases);

// Model checkpoint container: config echo plus named little-endian f32
// parameter arrays; save/load round-trips bit-exactly.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace senh

#endif  // SENH_MODEL_HPP
