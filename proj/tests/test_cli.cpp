#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#ifndef SENH_CLI_PATH
#define SENH_CLI_PATH "senh"
#endif

namespace {

struct CmdResult {
  int status = -1;
  std::string output;  // stdout + stderr
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd = std::string(SENH_CLI_PATH) + " " + args + " 2>&1";
  CmdResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 512> buf;
  while (fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

}  // namespace

TEST_CASE("cli: rf-report reproduces the published receptive field") {
  const auto r = run_cli("rf-report --rate 16000");
  CHECK(r.status == 0);
  CHECK(r.output.find("3686") != std::string::npos);
  CHECK(r.output.find("0.2304") != std::string::npos);

  const auto r48 = run_cli("rf-report --rate 48000");
  CHECK(r48.status == 0);
  CHECK(r48.output.find("0.0768") != std::string::npos);
}

TEST_CASE("cli: failures exit nonzero with a machine-parsable category") {
  const auto missing = run_cli("enhance --ckpt nope.ckpt --input a.wav --output b.wav");
  CHECK(missing.status == 1);
  CHECK(missing.output.find("error:io:") != std::string::npos);

  const auto badcfg = run_cli("train --config /nonexistent.cfg");
  CHECK(badcfg.status == 1);
  CHECK(badcfg.output.find("error:io:") != std::string::npos);

  const auto nosub = run_cli("");
  CHECK(nosub.status != 0);
}

TEST_CASE("cli: config errors carry the config category") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "senh_cli_cfg";
  fs::create_directories(dir);
  const auto cfg = dir / "bad.cfg";
  {
    FILE* f = fopen(cfg.c_str(), "w");
    fputs("train.seed = 1\nbogus.key = 3\n", f);
    fclose(f);
  }
  const auto r = run_cli("train --config " + cfg.string());
  CHECK(r.status == 1);
  CHECK(r.output.find("error:config:") != std::string::npos);
  fs::remove_all(dir);
}
