#include <doctest.h>

#include <cmath>
#include <random>

#include "senh/metrics.hpp"
#include "senh/pipeline.hpp"

using namespace senh;

namespace {

// speech-shaped stand-in: a few AM tones with pauses
AudioBuffer multi_tone(int64_t n, int64_t rate, uint32_t seed) {
  std::mt19937 rng(seed);
  AudioBuffer buf;
  buf.sample_rate = rate;
  buf.samples = synth_utterance(n, rate, rng);
  return buf;
}

}  // namespace

TEST_CASE("snr basics") {
  std::vector<double> clean(1600);
  for (size_t i = 0; i < clean.size(); ++i)
    clean[i] = std::sqrt(2.0) * std::sin(2.0 * M_PI * 200.0 * i / 16000.0);

  CHECK(snr_db(clean, clean) == doctest::Approx(100.0));  // zero-error cap

  // orthogonal interferer at amplitude 0.1 of a unit-power sine: 20 dB
  std::vector<double> test = clean;
  for (size_t i = 0; i < test.size(); ++i)
    test[i] += 0.1 * std::sqrt(2.0) * std::sin(2.0 * M_PI * 400.0 * i / 16000.0);
  CHECK(snr_db(clean, test) == doctest::Approx(20.0).epsilon(5e-4));

  // all-zero test signal: error power equals clean power
  std::vector<double> zero(clean.size(), 0.0);
  CHECK(snr_db(clean, zero) == doctest::Approx(0.0).epsilon(1e-9));

  std::vector<double> shorter(100, 0.1);
  CHECK_THROWS_AS(snr_db(clean, shorter), Error);
  CHECK_THROWS_AS(snr_db(zero, clean), Error);
}

TEST_CASE("snr and ssnr are invariant under common scaling") {
  std::mt19937 rng(3);
  std::normal_distribution<double> gauss(0.0, 0.2);
  std::vector<double> clean(4096), test(4096);
  for (size_t i = 0; i < clean.size(); ++i) {
    clean[i] = std::sin(0.05 * i) * 0.4;
    test[i] = clean[i] + gauss(rng) * 0.05;
  }
  const double s0 = snr_db(clean, test);
  const double g0 = ssnr_db(clean, test, 16000);
  for (double a : {0.5, 2.0, 10.0}) {
    std::vector<double> c2 = clean, t2 = test;
    for (auto& v : c2) v *= a;
    for (auto& v : t2) v *= a;
    CHECK(snr_db(c2, t2) == doctest::Approx(s0).epsilon(1e-10));
    CHECK(ssnr_db(c2, t2, 16000) == doctest::Approx(g0).epsilon(1e-10));
  }
}

TEST_CASE("ssnr: clamp ceiling for identical signals") {
  std::vector<double> clean(2560, 0.0);
  for (size_t i = 0; i < clean.size(); ++i) clean[i] = std::sin(0.1 * i);
  CHECK(ssnr_db(clean, clean, 16000) == doctest::Approx(35.0));
}

TEST_CASE("ssnr: hand-built two-frame case averages to 0 dB") {
  // frame 0 at -20 dB (clamped to -10), frame 1 at exactly +10 dB
  const int64_t frame = 256;
  std::vector<double> clean(2 * frame, 0.5), test(2 * frame);
  for (int64_t i = 0; i < frame; ++i) test[i] = clean[i] + 5.0;  // -20 dB
  const double d10 = 0.5 * std::pow(10.0, -0.5);                 // +10 dB
  for (int64_t i = frame; i < 2 * frame; ++i) test[i] = clean[i] + d10;
  CHECK(ssnr_db(clean, test, 16000) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("ssnr skips silent clean frames") {
  const int64_t frame = 256;
  std::vector<double> clean(4 * frame, 0.0), test(4 * frame, 0.0);
  // only frame 2 has clean energy; its SNR is exactly +10 dB
  const double d10 = 0.5 * std::pow(10.0, -0.5);
  for (int64_t i = 2 * frame; i < 3 * frame; ++i) {
    clean[i] = 0.5;
    test[i] = 0.5 + d10;
  }
  // noise elsewhere must not contribute
  for (int64_t i = 0; i < frame; ++i) test[i] = 0.9;
  CHECK(ssnr_db(clean, test, 16000) == doctest::Approx(10.0).epsilon(1e-9));

  std::vector<double> silent(4 * frame, 0.0);
  CHECK_THROWS_AS(ssnr_db(silent, test, 16000), Error);
  CHECK(ssnr_db(clean, clean, 16000) == doctest::Approx(35.0));
  CHECK(ssnr_db(clean, test, 16000) >= -10.0);
  CHECK(ssnr_db(clean, test, 16000) <= 35.0);
}

TEST_CASE("stoi: identical signals score at least 0.99") {
  const AudioBuffer clean = multi_tone(16000, 16000, 11);
  CHECK(stoi_score(clean, clean) >= 0.99);
}

// Frozen regression value: the implemented procedure run once on this exact
// seeded input (see kFrozenNoiseStoi below).
static constexpr double kFrozenNoiseStoi = -1.0;  // set after first computation

TEST_CASE("stoi: white noise against a tonal signal scores low") {
  const AudioBuffer clean = multi_tone(16000, 16000, 11);
  AudioBuffer noise;
  noise.sample_rate = 16000;
  std::mt19937 rng(12);
  noise.samples = synth_noise(NoiseKind::white, 16000, 16000, rng);
  const double score = stoi_score(clean, noise);
  CHECK(score <= 0.35);
  if (kFrozenNoiseStoi >= 0.0)
    CHECK(score == doctest::Approx(kFrozenNoiseStoi).epsilon(1e-9));
  else
    MESSAGE("stoi(white noise) = ", score);
}

TEST_CASE("stoi is non-decreasing in mix SNR") {
  const AudioBuffer clean = multi_tone(32000, 16000, 21);
  std::mt19937 nrng(22);
  const auto noise = synth_noise(NoiseKind::white, 32000, 16000, nrng);
  double prev = -1.0;
  for (double snr : {-5.0, 0.0, 5.0, 10.0, 15.0}) {
    std::mt19937 mrng(23);  // same noise placement for every level
    AudioBuffer mixed;
    mixed.sample_rate = 16000;
    mixed.samples = mix_at_snr(clean.samples, noise, snr, mrng);
    const double s = stoi_score(clean, mixed);
    CHECK(s >= prev);
    prev = s;
  }
}

TEST_CASE("stoi is invariant to positive scaling of the test signal") {
  const AudioBuffer clean = multi_tone(16000, 16000, 31);
  std::mt19937 mrng(32);
  const auto noise = synth_noise(NoiseKind::pink, 16000, 16000, mrng);
  AudioBuffer test;
  test.sample_rate = 16000;
  test.samples = mix_at_snr(clean.samples, noise, 5.0, mrng);
  const double base = stoi_score(clean, test);
  for (double a : {0.5, 2.0, 10.0}) {
    AudioBuffer scaled = test;
    for (auto& v : scaled.samples) v *= a;
    CHECK(stoi_score(clean, scaled) == doctest::Approx(base).epsilon(1e-6));
  }
}

TEST_CASE("stoi rejects too-short material") {
  const AudioBuffer clean = multi_tone(3000, 16000, 41);  // < 384 ms
  CHECK_THROWS_WITH_AS(stoi_score(clean, clean), doctest::Contains("too short"),
                       Error);
}

TEST_CASE("pesq adapter contract") {
  const auto none = pesq_external("c.wav", "t.wav", "");
  CHECK(!none.score.has_value());

  const auto ok = pesq_external("c.wav", "t.wav", "echo PESQ-WB score: 2.50");
  REQUIRE(ok.score.has_value());
  CHECK(*ok.score == doctest::Approx(2.50));

  const auto fail = pesq_external("c.wav", "t.wav", "exit 3");
  CHECK(!fail.score.has_value());
  CHECK(!fail.diagnostic.empty());

  const auto junk = pesq_external("c.wav", "t.wav", "echo no numbers here");
  CHECK(!junk.score.has_value());

  // placeholders reach the command line
  const auto echoed = pesq_external("CLEAN.wav", "TEST.wav", "echo {clean} {test} 1.75");
  REQUIRE(echoed.score.has_value());
  CHECK(*echoed.score == doctest::Approx(1.75));
}

TEST_CASE("evaluate: identity and self-consistency") {
  std::vector<EvalItem> items;
  for (int u = 0; u < 3; ++u) {
    EvalItem it;
    it.id = "utt" + std::to_string(u);
    it.clean = multi_tone(16000, 16000, 50 + u);
    std::mt19937 rng(60 + u);
    it.noisy.sample_rate = 16000;
    it.noisy.samples = mix_at_snr(
        it.clean.samples, synth_noise(NoiseKind::white, 16000, 16000, rng), 5.0, rng);
    it.enhanced = it.clean;  // perfect model
    items.push_back(std::move(it));
  }
  const EvalReport perfect = evaluate(items);
  for (const auto& row : perfect.enhanced.rows) {
    CHECK(row.snr_db == doctest::Approx(100.0));
    CHECK(row.stoi >= 0.99);
  }

  // identity model: enhanced row equals the input row
  for (auto& it : items) it.enhanced = it.noisy;
  const EvalReport identity = evaluate(items);
  for (size_t i = 0; i < identity.input.rows.size(); ++i) {
    CHECK(identity.enhanced.rows[i].snr_db ==
          doctest::Approx(identity.input.rows[i].snr_db).epsilon(1e-12));
    CHECK(identity.enhanced.rows[i].ssnr_db ==
          doctest::Approx(identity.input.rows[i].ssnr_db).epsilon(1e-12));
    CHECK(identity.enhanced.rows[i].stoi ==
          doctest::Approx(identity.input.rows[i].stoi).epsilon(1e-12));
  }

  // means match a hand recomputation
  double snr_sum = 0.0;
  for (const auto& r : identity.input.rows) snr_sum += r.snr_db;
  CHECK(identity.input.mean_snr ==
        doctest::Approx(snr_sum / identity.input.rows.size()).epsilon(1e-9));

  const std::string tsv = format_report_tsv(identity);
  CHECK(tsv.find("Input\tutt0") != std::string::npos);
  CHECK(tsv.find("Enhanced\tmean") != std::string::npos);

  std::vector<EvalItem> bad = items;
  bad[0].enhanced.samples.pop_back();
  CHECK_THROWS_AS(evaluate(bad), Error);
}
