#include "senh/receptive_field.hpp"

#include <cstdio>

#include "senh/tape.hpp"

namespace senh {

const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::pool: return "pool";
    case LayerKind::upsample: return "upsample";
  }
  return "?";
}

RFReport receptive_field(const std::vector<LayerSpec>& layers) {
  if (layers.empty())
    throw Error(ErrorCategory::data, "receptive_field needs at least one layer");
  RFReport report;
  int64_t rf = 1;
  int64_t stride_product = 1;  // prod_{i<k} s_i
  int64_t index = 0;
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::upsample)
      throw Error(ErrorCategory::data,
                  "receptive_field covers the encoding path only; upsample layer at index " +
                      std::to_string(index));
    if (l.f < 1 || l.s < 1 || l.d < 1)
      throw Error(ErrorCategory::data, "layer f, s, d must all be >= 1");
    if (l.kind == LayerKind::pool && l.d != 1)
      throw Error(ErrorCategory::data, "pool layers must have d = 1");
    rf += (l.f - 1) * l.d * stride_product;
    stride_product *= l.s;
    report.entries.push_back(RFEntry{index, l, rf, stride_product});
    ++index;
  }
  return report;
}

double coverage_seconds(int64_t rf, double sample_rate) {
  if (rf < 1) throw Error(ErrorCategory::data, "rf must be >= 1");
  if (!(sample_rate > 0)) throw Error(ErrorCategory::data, "sample rate must be > 0");
  return static_cast<double>(rf) / sample_rate;
}

int64_t min_probe_length(const std::vector<LayerSpec>& layers) {
  // Backward recursion for one valid output sample: M <- (M-1)*s + d*(f-1) + 1.
  int64_t m = 1;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it)
    m = (m - 1) * it->s + it->d * (it->f - 1) + 1;
  return m;
}

int64_t empirical_rf(const std::vector<LayerSpec>& layers, int64_t input_length) {
  if (layers.empty())
    throw Error(ErrorCategory::data, "empirical_rf needs at least one layer");
  if (input_length < min_probe_length(layers))
    throw Error(ErrorCategory::data,
                "clipped: receptive field exceeds input length " +
                    std::to_string(input_length));

  // Single-channel valid-conv probe in double precision. Weights 1/f keep the
  // activations near unity through deep stacks.
  TensorD x(1, 1, input_length, 1.0);
  TensorD xgrad(1, 1, input_length);
  TapeD tape;
  auto cur = tape.input(&x, &xgrad);
  std::vector<TensorD> weights;
  std::vector<TensorD> biases;
  weights.reserve(layers.size());
  biases.reserve(layers.size());
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::upsample)
      throw Error(ErrorCategory::data, "empirical_rf probes the encoding path only");
    weights.emplace_back(1, 1, l.f, 1.0 / static_cast<double>(l.f));
    biases.emplace_back(1, 1, 1, 0.0);
  }
  size_t i = 0;
  for (const LayerSpec& l : layers) {
    ConvGeom g;
    g.stride = l.s;
    g.dilation = l.kind == LayerKind::pool ? 1 : l.d;
    cur = tape.conv1d(cur, tape.input(&weights[i], nullptr),
                      tape.input(&biases[i], nullptr), g);
    ++i;
  }

  // Isolate output unit 0: grad support of sum(out * e0) == grad support of out[0].
  TensorD pick(1, 1, tape.value(cur).length);
  pick.v[0] = 1.0;
  auto target = tape.constant(TensorD(1, 1, tape.value(cur).length));
  // l1 against zero target with unit-0 mask selects that unit's gradient path.
  auto loss = tape.l1_loss_masked(cur, target, tape.constant(std::move(pick)));
  tape.backward(loss);

  int64_t support = 0;
  for (double gv : xgrad.v)
    if (gv != 0.0) ++support;
  return support;
}

std::string format_rf_table(const RFReport& report, double sample_rate) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-6s %-9s %6s %6s %6s %10s %12s\n", "layer",
                "kind", "f", "s", "d", "R_k", "seconds");
  out += line;
  for (const RFEntry& e : report.entries) {
    std::snprintf(line, sizeof(line), "%-6lld %-9s %6lld %6lld %6lld %10lld %12.4f\n",
                  static_cast<long long>(e.layer_index), to_string(e.spec.kind),
                  static_cast<long long>(e.spec.f), static_cast<long long>(e.spec.s),
                  static_cast<long long>(e.spec.d), static_cast<long long>(e.rf),
                  coverage_seconds(e.rf, sample_rate));
    out += line;
  }
  std::snprintf(line, sizeof(line), "final encoder RF: %lld samples (%.4f s at %.0f Hz)\n",
                static_cast<long long>(report.final_rf()),
                coverage_seconds(report.final_rf(), sample_rate), sample_rate);
  out += line;
  return out;
}

}  // namespace senh
