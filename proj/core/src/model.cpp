#include "senh/model.hpp"

#include <algorithm>
#include <cmath>

namespace senh {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::aspp_middle: return "aspp-middle";
    case Variant::aspp_end: return "aspp-end";
    case Variant::aspp_middle_end: return "aspp-middle+end";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "baseline") return Variant::baseline;
  if (s == "aspp-middle") return Variant::aspp_middle;
  if (s == "aspp-end") return Variant::aspp_end;
  if (s == "aspp-middle+end") return Variant::aspp_middle_end;
  throw Error(ErrorCategory::config, "unknown variant: " + s);
}

void UNetConfig::validate() const {
  if (widths.size() != 6)
    throw Error(ErrorCategory::config, "widths must list 6 encoder block channels");
  for (int64_t w : widths)
    if (w < 1) throw Error(ErrorCategory::config, "widths must be >= 1");
  if (kernel < 1) throw Error(ErrorCategory::config, "kernel must be >= 1");
  if (aspp_factors.empty())
    throw Error(ErrorCategory::config, "aspp_factors must not be empty");
  for (int64_t d : aspp_factors)
    if (d < 1) throw Error(ErrorCategory::config, "dilation factors must be >= 1");
  if (!(activation_slope >= 0.0f && activation_slope < 1.0f))
    throw Error(ErrorCategory::config, "activation slope must be in [0, 1)");
  if (sample_rate < 1) throw Error(ErrorCategory::config, "sample rate must be >= 1");

  const bool middle =
      variant == Variant::aspp_middle || variant == Variant::aspp_middle_end;
  const bool end = variant == Variant::aspp_end || variant == Variant::aspp_middle_end;
  const auto nf = static_cast<int64_t>(aspp_factors.size());
  if (middle && widths[5] % nf != 0)
    throw Error(ErrorCategory::config,
                "bottleneck width must be divisible by " + std::to_string(nf) +
                    " for the aspp-middle replacement");
  if (end && widths[0] % nf != 0)
    throw Error(ErrorCategory::config,
                "first block width must be divisible by " + std::to_string(nf) +
                    " for the aspp-end replacement");
}

void AsppLayerSpec::validate() const {
  const auto nf = static_cast<int64_t>(factors.size());
  if (nf < 1) throw Error(ErrorCategory::config, "aspp needs at least one factor");
  if (c_out % nf != 0)
    throw Error(ErrorCategory::shape,
                "aspp output channels (" + std::to_string(c_out) +
                    ") must divide by the factor count (" + std::to_string(nf) + ")");
  if (c_in < 1 || f < 1)
    throw Error(ErrorCategory::shape, "aspp c_in and f must be >= 1");
}

namespace {

ConvGeom same_pad_geom(int64_t f, int64_t dilation) {
  // "same" padding: total d*(f-1), split floor/rest (14/15 for f=30, d=1)
  ConvGeom g;
  g.stride = 1;
  g.dilation = dilation;
  const int64_t total = dilation * (f - 1);
  g.pad_left = total / 2;
  g.pad_right = total - g.pad_left;
  return g;
}

float init_bound(int64_t c_in, int64_t f) {
  return std::sqrt(1.0f / static_cast<float>(c_in * f));
}

}  // namespace

TapeF::Value aspp_forward(TapeF& tape, TapeF::Value x, const AsppLayerSpec& spec,
                          const std::array<TapeF::Value, 4>& weights,
                          const std::array<TapeF::Value, 4>& biases) {
  spec.validate();
  if (tape.value(x).channels != spec.c_in)
    throw Error(ErrorCategory::shape, "aspp input channel mismatch");
  const auto nf = static_cast<int64_t>(spec.factors.size());
  const int64_t groups = spec.groups();

  // One conv per dilation factor (the factor-j filters of every group), then
  // a permutation from factor-major to group-major channel order so each
  // group contributes its factors contiguously.
  TapeF::Value parts{};
  for (int64_t j = 0; j < nf; ++j) {
    const auto y = tape.conv1d(x, weights[j], biases[j],
                               same_pad_geom(spec.f, spec.factors[j]));
    parts = j == 0 ? y : tape.concat_channels(parts, y);
  }
  std::vector<int64_t> perm(static_cast<size_t>(spec.c_out));
  for (int64_t g = 0; g < groups; ++g)
    for (int64_t j = 0; j < nf; ++j) perm[g * nf + j] = j * groups + g;
  return tape.permute_channels(parts, std::move(perm));
}

Model Model::build(const UNetConfig& cfg, uint32_t seed) {
  cfg.validate();
  Model m;
  m.cfg_ = cfg;
  std::mt19937 rng(seed);
  const int64_t f = cfg.kernel;
  const auto nf = static_cast<int64_t>(cfg.aspp_factors.size());

  const auto add_param = [&m](const std::string& name, Tensor3<float> t) {
    m.params_.emplace_back(name, std::move(t));
    return static_cast<int>(m.params_.size() - 1);
  };
  const auto make_conv = [&](const std::string& prefix, int64_t c_in, int64_t c_out,
                             int64_t taps, bool aspp, bool activation) {
    ConvUnit u;
    u.c_in = c_in;
    u.c_out = c_out;
    u.f = taps;
    u.aspp = aspp;
    u.activation = activation;
    if (!aspp) {
      Tensor3<float> w(c_out, c_in, taps);
      fill_uniform(w, init_bound(c_in, taps), rng);
      u.w = add_param(prefix + ".w", std::move(w));
      u.b = add_param(prefix + ".b", Tensor3<float>(1, 1, c_out));
    } else {
      const int64_t per = c_out / nf;
      for (int64_t j = 0; j < nf; ++j) {
        Tensor3<float> w(per, c_in, taps);
        fill_uniform(w, init_bound(c_in, taps), rng);
        u.ws[j] = add_param(prefix + ".w" + std::to_string(j), std::move(w));
        u.bs[j] = add_param(prefix + ".b" + std::to_string(j),
                            Tensor3<float>(1, 1, per));
      }
    }
    return u;
  };

  const bool middle =
      cfg.variant == Variant::aspp_middle || cfg.variant == Variant::aspp_middle_end;
  const bool end =
      cfg.variant == Variant::aspp_end || cfg.variant == Variant::aspp_middle_end;
  const auto& w = cfg.widths;

  for (int i = 0; i < 6; ++i) {
    const int64_t c_in = i == 0 ? 1 : w[i - 1];
    const bool aspp_here = middle && i == 5;  // both bottleneck convs
    const std::string base = "enc" + std::to_string(i + 1);
    m.encoder_[i][0] =
        make_conv(base + (aspp_here ? ".aspp1" : ".conv1"), c_in, w[i], f,
                  aspp_here, true);
    m.encoder_[i][1] =
        make_conv(base + (aspp_here ? ".aspp2" : ".conv2"), w[i], w[i], f,
                  aspp_here, true);
  }

  for (int lvl = 4; lvl >= 0; --lvl) {
    DecLevel& d = m.decoder_[4 - lvl];
    d.c_in = lvl == 4 ? w[5] : w[lvl + 1];
    d.c_out = w[lvl];
    // transposed conv weights read as (c_in, c_out, taps)
    Tensor3<float> tw(d.c_in, d.c_out, 2);
    fill_uniform(tw, init_bound(d.c_in, 2), rng);
    const std::string base = "dec" + std::to_string(lvl + 1);
    d.up_w = add_param(base + ".up.w", std::move(tw));
    d.up_b = add_param(base + ".up.b", Tensor3<float>(1, 1, d.c_out));
    d.convs[0] = make_conv(base + ".conv1", 2 * w[lvl], w[lvl], f, false, true);
    d.convs[1] = make_conv(base + ".conv2", w[lvl], w[lvl], f, false, true);
  }

  m.head_[0] = make_conv(end ? "head.aspp1" : "head.conv1", w[0], w[0], f, end, true);
  m.head_[1] = make_conv("head.conv2", w[0], 1, f, false, /*activation=*/false);
  return m;
}

Model::Value Model::forward_unit(TapeF& tape, Value x, const ConvUnit& unit) {
  Value y;
  if (!unit.aspp) {
    y = tape.conv1d(x, tape.input(&params_[unit.w].value, &params_[unit.w].grad),
                    tape.input(&params_[unit.b].value, &params_[unit.b].grad),
                    same_pad_geom(unit.f, 1));
  } else {
    AsppLayerSpec spec;
    spec.c_in = unit.c_in;
    spec.c_out = unit.c_out;
    spec.f = unit.f;
    spec.factors = cfg_.aspp_factors;
    std::array<Value, 4> ws{}, bs{};
    for (size_t j = 0; j < cfg_.aspp_factors.size(); ++j) {
      ws[j] = tape.input(&params_[unit.ws[j]].value, &params_[unit.ws[j]].grad);
      bs[j] = tape.input(&params_[unit.bs[j]].value, &params_[unit.bs[j]].grad);
    }
    y = aspp_forward(tape, x, spec, ws, bs);
  }
  if (unit.activation) y = tape.leaky_relu(y, cfg_.activation_slope);
  return y;
}

Model::Value Model::forward(TapeF& tape, Value x) {
  const Tensor3<float>& xin = tape.value(x);
  if (xin.channels != 1)
    throw Error(ErrorCategory::shape, "network input must have 1 channel");
  if (xin.length % UNetConfig::length_multiple != 0)
    throw Error(ErrorCategory::shape,
                "input length " + std::to_string(xin.length) +
                    " is not divisible by " +
                    std::to_string(UNetConfig::length_multiple));

  std::array<Value, 5> skips{};
  Value cur = x;
  for (int i = 0; i < 6; ++i) {
    cur = forward_unit(tape, cur, encoder_[i][0]);
    cur = forward_unit(tape, cur, encoder_[i][1]);
    if (i < 5) {
      skips[i] = cur;
      cur = tape.maxpool1d(cur, 2, 2);
    }
  }
  for (int k = 0; k < 5; ++k) {
    const DecLevel& d = decoder_[k];
    ConvGeom up;
    up.stride = 2;
    cur = tape.transposed_conv1d(
        cur, tape.input(&params_[d.up_w].value, &params_[d.up_w].grad),
        tape.input(&params_[d.up_b].value, &params_[d.up_b].grad), up);
    cur = tape.concat_channels(cur, skips[4 - k]);
    cur = forward_unit(tape, cur, d.convs[0]);
    cur = forward_unit(tape, cur, d.convs[1]);
  }
  cur = forward_unit(tape, cur, head_[0]);
  cur = forward_unit(tape, cur, head_[1]);
  return cur;
}

TensorF Model::run(const TensorF& input) {
  TapeF tape;
  const auto out = forward(tape, tape.input(&input, nullptr));
  return tape.value(out);
}

AudioBuffer Model::enhance(const AudioBuffer& wav, const NormMeta& meta) {
  if (wav.sample_rate != cfg_.sample_rate)
    throw Error(ErrorCategory::data,
                "sample-rate mismatch: waveform at " +
                    std::to_string(wav.sample_rate) + " Hz, model trained at " +
                    std::to_string(cfg_.sample_rate) + " Hz");
  if (wav.samples.empty())
    throw Error(ErrorCategory::data, "enhance: empty waveform");

  const int64_t n = static_cast<int64_t>(wav.samples.size());
  const int64_t mult = UNetConfig::length_multiple;
  const int64_t padded = (n + mult - 1) / mult * mult;

  std::vector<double> x = wav.samples;
  x.resize(padded, 0.0);
  const std::vector<double> norm = normalized_copy(x, meta);

  TensorF in(1, 1, padded);
  for (int64_t i = 0; i < padded; ++i) in.v[i] = static_cast<float>(norm[i]);
  TensorF out = run(in);

  AudioBuffer result;
  result.sample_rate = wav.sample_rate;
  result.samples.resize(n);
  for (int64_t i = 0; i < n; ++i) {
    // normalized-range clamp at inference only
    const double y = std::clamp(static_cast<double>(out.v[i]), 0.0, 1.0);
    result.samples[i] = (y - meta.offset) * meta.scale;
  }
  return result;
}

std::vector<Parameter<float>*> Model::trainable() {
  std::vector<Parameter<float>*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

int64_t Model::param_count() const {
  int64_t total = 0;
  for (const auto& p : params_) total += p.value.size();
  return total;
}

std::vector<ParamAuditEntry> Model::param_audit() const {
  std::vector<ParamAuditEntry> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back({p.name, p.value.size()});
  return out;
}

std::vector<LayerSpec> Model::encoder_layers() const {
  std::vector<LayerSpec> layers;
  const bool middle =
      cfg_.variant == Variant::aspp_middle || cfg_.variant == Variant::aspp_middle_end;
  for (int i = 0; i < 6; ++i) {
    for (int unit = 0; unit < 2; ++unit) {
      // An ASPP bottleneck unit's widest path is its largest dilation factor.
      int64_t d = 1;
      if (middle && i == 5)
        d = *std::max_element(cfg_.aspp_factors.begin(), cfg_.aspp_factors.end());
      layers.push_back(LayerSpec{LayerKind::conv, cfg_.kernel, 1, d});
    }
    if (i < 5) layers.push_back(LayerSpec{LayerKind::pool, 2, 2, 1});
  }
  return layers;
}

}  // namespace senh
