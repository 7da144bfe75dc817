#ifndef SENH_RECEPTIVE_FIELD_HPP
#define SENH_RECEPTIVE_FIELD_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "senh/error.hpp"

namespace senh {

enum class LayerKind { conv, pool, upsample };

const char* to_string(LayerKind k);

// One layer of the encoding path for receptive-field accounting.
struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  int64_t f = 1;  // filter / window size in samples
  int64_t s = 1;  // stride
  int64_t d = 1;  // dilation (1 unless kind == conv)
};

struct RFEntry {
  int64_t layer_index = 0;
  LayerSpec spec;
  int64_t rf = 1;             // R_k, samples
  int64_t stride_product = 1; // product of strides up to and including this layer
};

struct RFReport {
  std::vector<RFEntry> entries;
  int64_t final_rf() const { return entries.empty() ? 1 : entries.back().rf; }
};

// Per-layer receptive fields along an encoding path:
//   R_k = R_{k-1} + (f_k - 1) * d_k * prod_{i<k} s_i,  R_0 = 1.
// Pooling enters the recursion as a window of size f with stride s. Upsample
// layers are rejected; the accounting covers the encoding path only.
RFReport receptive_field(const std::vector<LayerSpec>& layers);

// rf samples expressed in seconds at `sample_rate`; exact ratio, no rounding.
double coverage_seconds(int64_t rf, double sample_rate);

// Gradient-support probe: builds the stack with all-positive constant weights
// (pool windows probed as strided all-positive convolutions so that every
// window position carries gradient), backpropagates from the first output
// unit, and counts input positions with nonzero gradient. `input_length` must
// accommodate the receptive field; otherwise the probe reports clipping.
int64_t empirical_rf(const std::vector<LayerSpec>& layers, int64_t input_length);

// Minimal input length for which the valid (unpadded) stack still produces
// one output sample; equals the analytic receptive field.
int64_t min_probe_length(const std::vector<LayerSpec>& layers);

// Plain-text table: layer, kind, f, s, d, R_k, seconds at `sample_rate`.
std::string format_rf_table(const RFReport& report, double sample_rate);

}  // namespace senh

#endif  // SENH_RECEPTIVE_FIELD_HPP
