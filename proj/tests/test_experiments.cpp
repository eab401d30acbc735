#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "resilience/experiments.hpp"
#include "resilience/fermion.hpp"
#include "resilience/linalg.hpp"
#include "resilience/perturbation.hpp"
#include "resilience/rng.hpp"

using namespace resilience;
namespace fs = std::filesystem;

namespace {

struct Csv {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw std::out_of_range(name);
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string c;
  while (std::getline(ss, c, ',')) out.push_back(c);
  return out;
}

Csv read_csv(const fs::path& p) {
  std::ifstream in(p);
  Csv csv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (csv.columns.empty()) csv.columns = split(line);
    else csv.rows.push_back(split(line));
  }
  return csv;
}

std::string scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("resilience_" + name);
  fs::remove_all(p);
  return p.string();
}

std::vector<std::string> issues_of(const std::string& text) {
  try {
    ScenarioConfig::parse(text, "cfg");
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

}  // namespace

TEST(Config, RegistryAndDefaults) {
  EXPECT_EQ(scenario_registry().size(), 10u);
  EXPECT_THROW(scenario_info("fig9"), std::out_of_range);
  const ScenarioConfig c = ScenarioConfig::defaults("fig2_longtime");
  EXPECT_EQ(c.integer("n_sites"), 10);
  EXPECT_EQ(c.number("noise_strength"), 0.01);
  EXPECT_EQ(c.number("eta"), 0.01);
  EXPECT_EQ(c.get("noise_scale"), "variance");
  EXPECT_EQ(c.list("states"), (std::vector<std::string>{"zero", "plus"}));
  EXPECT_EQ(ScenarioConfig::defaults("fig3_hubbard_segment").list("states").size(), 4u);
  EXPECT_EQ(ScenarioConfig::defaults("supp_qimf2d").number("noise_strength"), 0.001);
}

TEST(Config, ErrorsAreEnumeratedWithLines) {
  const auto issues = issues_of(
      "scenario = fig2_longtime\n"
      "n_sites = ten\n"
      "bogus = 1\n"
      "eta = 0.1\n"
      "eta = 0.2\n"
      "no equals sign\n"
      "noise_scale = sigma\n");
  ASSERT_EQ(issues.size(), 5u);
  auto has = [&](const std::string& frag) {
    return std::any_of(issues.begin(), issues.end(), [&](const std::string& s) { return s.find(frag) != std::string::npos; });
  };
  EXPECT_TRUE(has("cfg:2:"));
  EXPECT_TRUE(has("cfg:3: unknown key 'bogus'"));
  EXPECT_TRUE(has("cfg:5: duplicate key 'eta'"));
  EXPECT_TRUE(has("cfg:6:"));
  EXPECT_TRUE(has("cfg:7:"));
  EXPECT_FALSE(issues_of("n_sites = 4\n").empty());
  EXPECT_FALSE(issues_of("scenario = fig99\n").empty());
  EXPECT_TRUE(issues_of("# comment\nscenario = lemma_certification  # trailing\n\ntrials = 5\n").empty());
  EXPECT_THROW(ScenarioConfig::load("/nonexistent/cfg.txt"), ConfigError);
}

TEST(Config, OverridesHashAndOutputDir) {
  const ScenarioConfig base = ScenarioConfig::defaults("lemma_certification");
  const ScenarioConfig more = base.with("trials", "20");
  EXPECT_EQ(more.integer("trials"), 20);
  EXPECT_NE(base.hash(), more.hash());
  EXPECT_EQ(base.hash(), ScenarioConfig::defaults("lemma_certification").hash());
  EXPECT_EQ(base.hash().size(), 64u);
  // output_dir does not enter the hash
  EXPECT_EQ(base.with("output_dir", "/tmp/x").hash(), base.hash());
  EXPECT_EQ(base.with("output_dir", "/tmp/x").output_dir(), "/tmp/x");
  EXPECT_THROW(base.with("nope", "1"), ConfigError);
  EXPECT_THROW(base.with("trials", "many"), ConfigError);
  ::setenv("RESILIENCE_OUT", "/tmp/out_root", 1);
  EXPECT_EQ(base.output_dir(), "/tmp/out_root/lemma_certification");
  EXPECT_EQ(base.canonical().find("output_dir"), std::string::npos);
}

TEST(Statistics, PearsonAndSpearman) {
  EXPECT_NEAR(pearson({1, 2, 3, 4}, {2, 4, 6, 8}), 1.0, 1e-15);
  EXPECT_NEAR(pearson({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
  // 1, 2, 3 vs 1, 3, 2: r = 0.5
  EXPECT_NEAR(pearson({1, 2, 3}, {1, 3, 2}), 0.5, 1e-15);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {1, 8, 27, 64}), 1.0, 1e-15);
  // ties share the mean rank: ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4)
  EXPECT_NEAR(spearman({1, 5, 5, 9}, {0, 1, 2, 3}), 4.5 / std::sqrt(4.5 * 5.0), 1e-12);
  EXPECT_THROW(pearson({1}, {1}), std::invalid_argument);
}

TEST(Manifest, Sha256KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(OneSegment, LimitsAndSectorAgreement) {
  const OperatorSum h0 = build_qimf_1d(4);
  Rng rng(3);
  const CVector psi = haar_state(16, rng);
  EXPECT_EQ(one_segment_error(h0, OperatorSum(4), psi, 0.1), 0.0);
  EXPECT_THROW(one_segment_error(h0, OperatorSum(4), psi, 0.0), std::invalid_argument);
  const OperatorSum hp = sample(standard_qimf_noise(4, 0.1, 0.01), 2).h_pert;
  const double first = resilience::apply(hp.simplified(), psi).norm();
  const double dt = 1e-5;
  EXPECT_NEAR(one_segment_error(h0, hp, psi, dt) / dt, first, 1e-3 * first);

  const std::size_t L = 4;
  const SectorBasis b(L, 2, 2);
  const OperatorSum hh = build_hubbard(L, 0.5, 1.0, Boundary::Periodic);
  const OperatorSum pp = hubbard_perturbation(L, 0.01);
  const CVector v = haar_state(b.dimension(), rng);
  const double sparse =
      one_segment_error(project_to_sector_sparse(hh, b), project_to_sector_sparse((hh + pp).simplified(), b), v, 0.1);
  const double dense = one_segment_error(hh, pp, sector_to_full(v, b), 0.1);
  EXPECT_NEAR(sparse, dense, 1e-12);
}

TEST(Lemma, TrialsAreDeterministicAndThreadIndependent) {
  const LemmaCertification a = certify_lemma(60, 4, 1);
  const LemmaCertification b = certify_lemma(60, 4, 3);
  ASSERT_EQ(a.trials.size(), 60u);
  EXPECT_EQ(a.violations, 0u);
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_EQ(a.trials[i].expectation, b.trials[i].expectation);
    EXPECT_EQ(a.trials[i].delta, b.trials[i].delta);
    EXPECT_LE(a.trials[i].n_qubits, 5u);
  }
  const LemmaTrial t = lemma_trial(4, 17);
  EXPECT_EQ(t.expectation, a.trials[17].expectation);
}

TEST(Runs, ZeroNoiseGivesZeroSegmentErrors) {
  const std::string dir = scratch("zero_noise");
  const ScenarioConfig cfg = ScenarioConfig::parse(
      "scenario = fig2_segment\nn_sites = 4\nnoise_strength = 0\neta = 0\nt_final = 1\n"
      "states = zero, haar:1\nentropy_pairs = 1-2, 1-3\noutput_dir = " + dir + "\n");
  const ScenarioResult r = run_scenario(cfg);
  EXPECT_TRUE(r.violations.empty());
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("segment_", 0) != 0 || e.path().extension() != ".csv") continue;
    ++files;
    const Csv csv = read_csv(e.path());
    ASSERT_EQ(csv.rows.size(), 10u) << name;
    for (const auto& row : csv.rows) {
      for (const char* c : {"one_segment_error", "segment_integral_bound", "segment_frobenius", "segment_spectral"}) {
        EXPECT_EQ(std::stod(row[csv.col(c)]), 0.0) << name << " " << c;
      }
    }
  }
  EXPECT_EQ(files, 2u);
  EXPECT_TRUE(fs::exists(fs::path(dir) / "manifest.json"));
  EXPECT_TRUE(fs::exists(fs::path(dir) / "config.txt"));
}

TEST(Runs, RepeatedRunsAreByteIdentical) {
  const std::string d1 = scratch("det1"), d2 = scratch("det2");
  const std::string text = "scenario = fig2_longtime\nn_sites = 4\nt_final = 2\nintervals = 10\nstates = zero, haar:3\nentropy_pairs = 1-2\n";
  const ScenarioResult a = run_scenario(ScenarioConfig::parse(text + "output_dir = " + d1 + "\n"));
  const ScenarioResult b = run_scenario(ScenarioConfig::parse(text + "output_dir = " + d2 + "\n"));
  ASSERT_EQ(a.manifest.outputs.size(), b.manifest.outputs.size());
  ASSERT_FALSE(a.manifest.outputs.empty());
  EXPECT_EQ(a.manifest.config_hash, b.manifest.config_hash);
  for (std::size_t i = 0; i < a.manifest.outputs.size(); ++i) {
    EXPECT_EQ(a.manifest.outputs[i].file, b.manifest.outputs[i].file);
    EXPECT_EQ(a.manifest.outputs[i].sha256, b.manifest.outputs[i].sha256) << a.manifest.outputs[i].file;
  }
  EXPECT_EQ(a.manifest.rng_identity, Rng::identity());
}

TEST(Runs, DryRunWritesNothing) {
  const std::string dir = scratch("dry");
  RunOptions opts;
  opts.write_files = false;
  const ScenarioResult r =
      run_scenario(ScenarioConfig::parse("scenario = lemma_certification\ntrials = 10\noutput_dir = " + dir + "\n"), opts);
  EXPECT_FALSE(fs::exists(dir));
  EXPECT_EQ(r.summary.value("violations", -1), 0);
}
