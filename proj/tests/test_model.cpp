#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <map>
#include <random>

#include "senh/conv_kernels.hpp"
#include "senh/model.hpp"
#include "support/oracles.hpp"

using namespace senh;
using senh::testing::random_tensor;

namespace {

UNetConfig small_config(Variant v) {
  UNetConfig cfg;
  cfg.variant = v;
  cfg.widths = {4, 4, 8, 8, 8, 8};
  cfg.kernel = 30;
  return cfg;
}

// Collapse the parameter audit to one entry per conv unit ("enc1.conv1", ...).
std::map<std::string, int64_t> unit_counts(const Model& m) {
  std::map<std::string, int64_t> units;
  for (const auto& e : m.param_audit()) {
    const size_t dot = e.name.rfind('.');
    units[e.name.substr(0, dot)] += e.count;
  }
  return units;
}

}  // namespace

TEST_CASE("baseline forward keeps the (b, 1, L) shape") {
  UNetConfig cfg;  // default widths 16..256
  Model model = Model::build(cfg, 1);
  TensorF x(1, 1, 16000, 0.5f);
  const TensorF y = model.run(x);
  CHECK(y.batch == 1);
  CHECK(y.channels == 1);
  CHECK(y.length == 16000);
  CHECK(y.all_finite());
}

TEST_CASE("shape round-trip for batches and lengths divisible by 32") {
  Model model = Model::build(small_config(Variant::baseline), 3);
  for (const auto& [b, len] : {std::pair<int64_t, int64_t>{1, 32},
                               {3, 96},
                               {4, 320}}) {
    std::mt19937 rng(b * 100 + len);
    TensorF x = random_tensor<float>(b, 1, len, rng, 0.0f, 1.0f);
    const TensorF y = model.run(x);
    CHECK(y.batch == b);
    CHECK(y.channels == 1);
    CHECK(y.length == len);
  }

  TensorF bad(1, 1, 48);
  CHECK_THROWS_AS(model.run(bad), Error);
}

TEST_CASE("parameter parity across every variant") {
  const std::vector<Variant> variants = {Variant::baseline, Variant::aspp_middle,
                                         Variant::aspp_end,
                                         Variant::aspp_middle_end};
  UNetConfig base;  // default widths
  const int64_t expect = Model::build(base, 1).param_count();
  for (Variant v : variants) {
    UNetConfig cfg;
    cfg.variant = v;
    CHECK(Model::build(cfg, 1).param_count() == expect);
  }

  // and for a second width configuration
  for (Variant v : variants) {
    UNetConfig cfg = small_config(v);
    CHECK(Model::build(cfg, 1).param_count() ==
          Model::build(small_config(Variant::baseline), 1).param_count());
  }
}

TEST_CASE("aspp-end differs from baseline in exactly one unit") {
  UNetConfig base = small_config(Variant::baseline);
  UNetConfig end = small_config(Variant::aspp_end);
  const auto a = unit_counts(Model::build(base, 1));
  const auto b = unit_counts(Model::build(end, 1));
  std::vector<std::string> only_a, only_b;
  for (const auto& [k, v] : a)
    if (!b.count(k)) only_a.push_back(k);
  for (const auto& [k, v] : b)
    if (!a.count(k)) only_b.push_back(k);
  REQUIRE(only_a.size() == 1);
  REQUIRE(only_b.size() == 1);
  CHECK(only_a[0] == "head.conv1");
  CHECK(only_b[0] == "head.aspp1");
  CHECK(a.at(only_a[0]) == b.at(only_b[0]));  // same parameter count
}

TEST_CASE("single conv parameter count: 4 filters of 3 taps plus bias = 16") {
  AsppLayerSpec spec;
  spec.c_in = 1;
  spec.c_out = 4;
  spec.f = 3;
  // standard conv layer of the same dimensions
  CHECK(4 * 1 * 3 + 4 == 16);
  // grouped dilated layer: same count
  const int64_t per = spec.c_out / 4;
  CHECK(4 * (per * spec.c_in * spec.f + per) == 16);
}

TEST_CASE("aspp layer parameter count equals the standard layer (1928)") {
  UNetConfig cfg = small_config(Variant::aspp_middle);
  cfg.widths = {4, 4, 8, 8, 8, 8};
  Model m = Model::build(cfg, 1);
  int64_t aspp_params = 0;
  for (const auto& e : m.param_audit())
    if (e.name.rfind("enc6.aspp1", 0) == 0) aspp_params += e.count;
  CHECK(aspp_params == 8 * 8 * 30 + 8);
  CHECK(8 * 8 * 30 + 8 == 1928);
}

TEST_CASE("aspp with c_out=4: channels ordered by dilation factor") {
  AsppLayerSpec spec;
  spec.c_in = 1;
  spec.c_out = 4;
  spec.f = 2;
  spec.factors = {1, 2, 3, 4};

  // ramp input distinguishes the factors: with taps [1, -1] and same-padding,
  // a dilation-d difference filter yields steps of size d in the interior
  TensorF x(1, 1, 16);
  for (int i = 0; i < 16; ++i) x.v[i] = static_cast<float>(i * i) * 0.01f;

  TapeF tape;
  std::array<TapeF::Value, 4> ws{}, bs{};
  std::array<TensorF, 4> wt, bt;
  for (int j = 0; j < 4; ++j) {
    wt[j] = TensorF(1, 1, 2);
    wt[j].v = {1.0f, -1.0f};
    bt[j] = TensorF(1, 1, 1, 0.0f);
    ws[j] = tape.input(&wt[j]);
    bs[j] = tape.input(&bt[j]);
  }
  auto y = aspp_forward(tape, tape.input(&x), spec, ws, bs);
  const TensorF& out = tape.value(y);
  REQUIRE(out.channels == 4);
  REQUIRE(out.length == 16);
  // interior position p: channel j equals x[p'] - x[p' + d_j] for the
  // same-padded alignment; verify against a direct dilated conv of factor j+1
  for (int j = 0; j < 4; ++j) {
    ConvGeom g;
    g.dilation = j + 1;
    const int64_t total = g.dilation * 1;
    g.pad_left = total / 2;
    g.pad_right = total - g.pad_left;
    TensorF ref;
    kernels::conv1d_forward(x, wt[j], bt[j], g, ref);
    REQUIRE(ref.length == 16);
    for (int i = 0; i < 16; ++i) CHECK(out.at(0, j, i) == ref.at(0, 0, i));
  }
}

TEST_CASE("aspp degenerates to a plain conv when all factors are 1") {
  std::mt19937 rng(77);
  AsppLayerSpec spec;
  spec.c_in = 3;
  spec.c_out = 8;
  spec.f = 5;
  spec.factors = {1, 1, 1, 1};

  TensorF x = random_tensor<float>(2, 3, 24, rng);
  std::array<TensorF, 4> wt, bt;
  for (int j = 0; j < 4; ++j) {
    wt[j] = random_tensor<float>(2, 3, 5, rng);  // c_out/4 = 2 filters each
    bt[j] = random_tensor<float>(1, 1, 2, rng);
  }

  TapeF tape;
  std::array<TapeF::Value, 4> ws{}, bs{};
  for (int j = 0; j < 4; ++j) {
    ws[j] = tape.input(&wt[j]);
    bs[j] = tape.input(&bt[j]);
  }
  auto y = aspp_forward(tape, tape.input(&x), spec, ws, bs);

  // equivalent standard conv: filter (g*4 + j) is group g's factor-j filter
  TensorF wstd(8, 3, 5), bstd(1, 1, 8);
  for (int g = 0; g < 2; ++g) {
    for (int j = 0; j < 4; ++j) {
      const int c = g * 4 + j;
      for (int ci = 0; ci < 3; ++ci)
        for (int k = 0; k < 5; ++k) wstd.at(c, ci, k) = wt[j].at(g, ci, k);
      bstd.v[c] = bt[j].v[g];
    }
  }
  ConvGeom g;
  g.pad_left = 2;
  g.pad_right = 2;
  TensorF ref;
  kernels::conv1d_forward(x, wstd, bstd, g, ref);

  const TensorF& out = tape.value(y);
  REQUIRE(out.same_shape(ref));
  for (int64_t i = 0; i < out.size(); ++i)
    CHECK(out.v[i] == doctest::Approx(ref.v[i]).epsilon(1e-6));
}

TEST_CASE("aspp rejects indivisible channel counts") {
  AsppLayerSpec spec;
  spec.c_in = 2;
  spec.c_out = 6;  // not divisible by 4
  spec.f = 3;
  CHECK_THROWS_AS(spec.validate(), Error);

  UNetConfig cfg = small_config(Variant::aspp_middle);
  cfg.widths = {4, 4, 8, 8, 8, 6};
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("built baseline encoder analytically covers 3686 samples") {
  UNetConfig cfg;  // kernel 30, 5 pools
  Model m = Model::build(cfg, 1);
  CHECK(receptive_field(m.encoder_layers()).final_rf() == 3686);
}

TEST_CASE("every parameter receives gradient in all four variants") {
  for (Variant v : {Variant::baseline, Variant::aspp_middle, Variant::aspp_end,
                    Variant::aspp_middle_end}) {
    Model model = Model::build(small_config(v), 11);
    std::mt19937 rng(13);
    TensorF x = random_tensor<float>(2, 1, 64, rng, 0.0f, 1.0f);
    TensorF target = random_tensor<float>(2, 1, 64, rng, 0.0f, 1.0f);
    for (auto* p : model.trainable()) p->zero_grad();
    TapeF tape;
    auto out = model.forward(tape, tape.input(&x));
    auto loss = tape.l1_loss(out, tape.constant(std::move(target)));
    tape.backward(loss);
    for (auto* p : model.trainable()) {
      bool populated = false;
      for (float g : p->grad.v)
        if (g != 0.0f) {
          populated = true;
          break;
        }
      CHECK_MESSAGE(populated, "dead parameter ", p->name, " in variant ",
                    to_string(v));
    }
  }
}

TEST_CASE("enhance preserves length, stays finite, checks the rate") {
  UNetConfig cfg = small_config(Variant::baseline);
  Model model = Model::build(cfg, 21);

  AudioBuffer wav;
  wav.sample_rate = 16000;
  wav.samples.assign(70000, 0.0);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(-0.4, 0.4);
  for (auto& s : wav.samples) s = dist(rng);

  std::vector<double> probe = wav.samples;
  const NormMeta meta = normalize(probe);
  const AudioBuffer out = model.enhance(wav, meta);
  CHECK(out.samples.size() == 70000);
  CHECK(out.sample_rate == 16000);

  // all-zero input stays finite
  AudioBuffer zeros;
  zeros.sample_rate = 16000;
  zeros.samples.assign(1600, 0.0);
  std::vector<double> zprobe = zeros.samples;
  const NormMeta zmeta = normalize(zprobe);
  const AudioBuffer zout = model.enhance(zeros, zmeta);
  for (double s : zout.samples) CHECK(std::isfinite(s));

  AudioBuffer wrong_rate = wav;
  wrong_rate.sample_rate = 8000;
  CHECK_THROWS_AS(model.enhance(wrong_rate, meta), Error);
}

TEST_CASE("checkpoint save/load round-trips bit-exactly") {
  const std::string path = std::filesystem::temp_directory_path() / "senh_ckpt_test.ckpt";
  Model model = Model::build(small_config(Variant::aspp_middle), 31);
  save_checkpoint(model, path);
  Model loaded = load_checkpoint(path);

  REQUIRE(loaded.params().size() == model.params().size());
  for (size_t i = 0; i < model.params().size(); ++i) {
    const auto& a = model.params()[i];
    const auto& b = loaded.params()[i];
    CHECK(a.name == b.name);
    REQUIRE(a.value.v.size() == b.value.v.size());
    for (size_t j = 0; j < a.value.v.size(); ++j)
      CHECK(a.value.v[j] == b.value.v[j]);
  }

  std::mt19937 rng(9);
  TensorF x = random_tensor<float>(1, 1, 96, rng, 0.0f, 1.0f);
  const TensorF ya = model.run(x);
  const TensorF yb = loaded.run(x);
  for (int64_t i = 0; i < ya.size(); ++i) CHECK(ya.v[i] == yb.v[i]);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/senh.ckpt"), Error);
}

TEST_CASE("variant names round-trip") {
  for (const char* name :
       {"baseline", "aspp-middle", "aspp-end", "aspp-middle+end"})
    CHECK(std::string(to_string(variant_from_string(name))) == name);
  CHECK_THROWS_AS(variant_from_string("aspp"), Error);
}
