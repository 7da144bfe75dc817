#include <doctest.h>

#include <random>

#include "senh/receptive_field.hpp"

using namespace senh;

namespace {

std::vector<LayerSpec> baseline_encoder(int64_t f = 30) {
  std::vector<LayerSpec> layers;
  for (int block = 0; block < 6; ++block) {
    layers.push_back({LayerKind::conv, f, 1, 1});
    layers.push_back({LayerKind::conv, f, 1, 1});
    if (block < 5) layers.push_back({LayerKind::pool, 2, 2, 1});
  }
  return layers;
}

}  // namespace

TEST_CASE("single conv layer RF") {
  const auto r = receptive_field({{LayerKind::conv, 3, 1, 1}});
  CHECK(r.final_rf() == 3);
}

TEST_CASE("dilated three-layer stack reaches 3, 7, 15") {
  const std::vector<LayerSpec> stack = {{LayerKind::conv, 3, 1, 1},
                                        {LayerKind::conv, 3, 1, 2},
                                        {LayerKind::conv, 3, 1, 4}};
  const auto r = receptive_field(stack);
  REQUIRE(r.entries.size() == 3);
  CHECK(r.entries[0].rf == 3);
  CHECK(r.entries[1].rf == 7);
  CHECK(r.entries[2].rf == 15);
}

TEST_CASE("baseline encoder covers 3686 samples") {
  const auto r = receptive_field(baseline_encoder());
  CHECK(r.final_rf() == 3686);
  // per-layer values are non-decreasing, stride product too
  int64_t prev_rf = 0, prev_sp = 0;
  for (const auto& e : r.entries) {
    CHECK(e.rf >= prev_rf);
    CHECK(e.stride_product >= prev_sp);
    prev_rf = e.rf;
    prev_sp = e.stride_product;
  }
}

TEST_CASE("coverage in seconds") {
  CHECK(coverage_seconds(3686, 16000.0) == doctest::Approx(0.2304).epsilon(1e-4));
  CHECK(coverage_seconds(3686, 48000.0) == doctest::Approx(0.0768).epsilon(1e-4));
  CHECK(coverage_seconds(16000, 16000.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(coverage_seconds(0, 16000.0), Error);
}

TEST_CASE("upsample layers and bad specs are rejected") {
  CHECK_THROWS_AS(receptive_field({{LayerKind::upsample, 2, 2, 1}}), Error);
  CHECK_THROWS_AS(receptive_field({{LayerKind::conv, 0, 1, 1}}), Error);
  CHECK_THROWS_AS(receptive_field({{LayerKind::pool, 2, 2, 3}}), Error);
  CHECK_THROWS_AS(receptive_field({}), Error);
}

TEST_CASE("empirical probe: single conv f=5") {
  CHECK(empirical_rf({{LayerKind::conv, 5, 1, 1}}, 32) == 5);
}

TEST_CASE("empirical probe matches the dilated stack figure") {
  const std::vector<LayerSpec> stack = {{LayerKind::conv, 3, 1, 1},
                                        {LayerKind::conv, 3, 1, 2},
                                        {LayerKind::conv, 3, 1, 4}};
  CHECK(empirical_rf(stack, 64) == 15);
}

TEST_CASE("empirical probe reports clipping when the input is too short") {
  CHECK_THROWS_WITH_AS(
      empirical_rf({{LayerKind::conv, 9, 1, 4}}, 16), // needs 33 samples
      doctest::Contains("clipped"), Error);
}

TEST_CASE("empirical probe equals the formula on random stacks") {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> n_layers(1, 8);
  std::uniform_int_distribution<int> fdist(1, 8);
  std::uniform_int_distribution<int> sdist(1, 3);
  std::uniform_int_distribution<int> ddist(1, 4);
  std::uniform_int_distribution<int> kind(0, 3);

  int checked = 0;
  while (checked < 25) {
    std::vector<LayerSpec> layers;
    const int n = n_layers(rng);
    for (int i = 0; i < n; ++i) {
      LayerSpec l;
      if (kind(rng) == 0) {
        l.kind = LayerKind::pool;
        l.f = std::max(2, fdist(rng) / 2);
        l.s = sdist(rng);
        l.d = 1;
      } else {
        l.kind = LayerKind::conv;
        l.f = fdist(rng);
        l.s = sdist(rng);
        l.d = ddist(rng);
      }
      layers.push_back(l);
    }
    const auto analytic = receptive_field(layers).final_rf();
    if (analytic > 3000) continue;  // keep probes quick
    const int64_t probe_len = min_probe_length(layers) + 40;
    CHECK(empirical_rf(layers, probe_len) == analytic);
    ++checked;
  }
}

TEST_CASE("empirical probe equals 3686 on the reduced-width baseline encoder") {
  const auto layers = baseline_encoder();
  const auto analytic = receptive_field(layers).final_rf();
  REQUIRE(analytic == 3686);
  CHECK(empirical_rf(layers, min_probe_length(layers) + 64) == 3686);
}

TEST_CASE("raising any dilation above 1 strictly increases the final RF") {
  const auto base = baseline_encoder(5);
  const auto base_rf = receptive_field(base).final_rf();
  for (size_t i = 0; i < base.size(); ++i) {
    if (base[i].kind != LayerKind::conv || base[i].f <= 1) continue;
    auto dilated = base;
    dilated[i].d = 3;
    CHECK(receptive_field(dilated).final_rf() > base_rf);
  }
}

TEST_CASE("with all d=1 the dilated recursion reduces to the plain one") {
  // R_k = R_{k-1} + (f-1)*d*prod(s) with d=1 term-for-term equals the
  // undilated formula; check by recomputing by hand.
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> fdist(1, 8), sdist(1, 3);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<LayerSpec> layers;
    for (int i = 0; i < 6; ++i)
      layers.push_back({LayerKind::conv, fdist(rng), sdist(rng), 1});
    int64_t rf = 1, sp = 1;
    for (const auto& l : layers) {
      rf += (l.f - 1) * sp;
      sp *= l.s;
    }
    CHECK(receptive_field(layers).final_rf() == rf);
  }
}

TEST_CASE("table formatting carries the final RF line") {
  const auto r = receptive_field(baseline_encoder());
  const std::string table = format_rf_table(r, 16000.0);
  CHECK(table.find("3686") != std::string::npos);
  CHECK(table.find("0.2304") != std::string::npos);
}
