#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "covdiff/channel_io.hpp"
#include "covdiff/channels.hpp"

using nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;
};

int run_counter = 0;

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "covdiff_cli_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

CliResult run_cli(const std::string& args) {
  const auto out_file = scratch_dir() / ("run_" + std::to_string(run_counter++) + ".out");
  const std::string cmd =
      std::string(COVDIFF_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.output = slurp(out_file);
  return result;
}

std::filesystem::path write_config(const std::string& name, const json& config) {
  const auto path = scratch_dir() / name;
  std::ofstream out(path);
  out << config.dump(2) << '\n';
  return path;
}

json lattice_block(int n_max) {
  return {{"dim", 1}, {"n_max", n_max}, {"box_length", 6.2831853071795862}};
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

double csv_field(const std::string& line, std::size_t column) {
  std::istringstream in(line);
  std::string field;
  for (std::size_t i = 0; i <= column; ++i) REQUIRE(std::getline(in, field, ','));
  return std::stod(field);
}

}  // namespace

TEST_CASE("verify-channel classifies the built-ins") {
  const auto identity = write_config(
      "verify_identity.json",
      {{"lattice", lattice_block(3)}, {"channel", {{"kind", "identity"}}}, {"seed", 1}});
  const CliResult id_run = run_cli("verify-channel --config " + identity.string());
  CHECK(id_run.exit_code == 0);
  CHECK(id_run.output.find("\"class\": \"MomentumDiagonal\"") != std::string::npos);
  CHECK(id_run.output.find("\"pass\": true") != std::string::npos);

  const auto grw = write_config(
      "verify_grw.json",
      {{"lattice", lattice_block(4)},
       {"channel", {{"kind", "grw"}, {"r_c", 1.0}}},
       {"seed", 1}});
  const CliResult grw_run = run_cli("verify-channel --config " + grw.string());
  CHECK(grw_run.exit_code == 0);
  CHECK(grw_run.output.find("\"class\": \"Diffusive\"") != std::string::npos);
}

TEST_CASE("verify-channel flags an incomplete channel file") {
  const auto channel_path = scratch_dir() / "broken_channel.txt";
  std::ofstream out(channel_path);
  out << "channel-format 1\n"
         "dim 1\n"
         "n_max 1\n"
         "box_length 6.2831853071795862\n"
         "hbar 1\n"
         "blocks 1\n"
         "block 0 0 3\n"
         "-1 0.5 0\n"
         "0 0.5 0\n"
         "1 0.5 0\n";
  out.close();

  const auto config = write_config(
      "verify_broken.json",
      {{"lattice", lattice_block(1)},
       {"channel", {{"kind", "file"}, {"path", channel_path.string()}}},
       {"seed", 1}});
  const CliResult result = run_cli("verify-channel --config " + config.string());
  CHECK(result.exit_code == 1);
  CHECK(result.output.find("\"cptp\": false") != std::string::npos);
}

TEST_CASE("configuration mistakes exit with code 2") {
  const auto stray = write_config("stray_key.json",
                                  {{"lattice", lattice_block(2)},
                                   {"channel", {{"kind", "identity"}}},
                                   {"speed", 11}});
  CHECK(run_cli("verify-channel --config " + stray.string()).exit_code == 2);

  CHECK(run_cli("verify-channel --config /nonexistent/config.json").exit_code == 2);
  CHECK(run_cli("frobnicate --config " + stray.string()).exit_code == 2);

  const CliResult help = run_cli("--help");
  CHECK(help.exit_code == 0);
  CHECK(help.output.find("verify-channel") != std::string::npos);
}

TEST_CASE("theorem-scan on a small ensemble") {
  const auto config = write_config("scan_small.json",
                                   {{"lattice", lattice_block(3)},
                                    {"n_diagonal", 2},
                                    {"n_diffusive", 2},
                                    {"n_probes", 4},
                                    {"seed", 3}});
  const CliResult result = run_cli("theorem-scan --config " + config.string());
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("\"misclassifications\": 0") != std::string::npos);
  CHECK(result.output.find("\"p_delta_violations\": 0") != std::string::npos);

  // a coarse tolerance cannot separate the classes and must be called out
  const CliResult coarse =
      run_cli("theorem-scan --config " + config.string() + " --tol 0.5");
  CHECK(coarse.output.find("degenerate") != std::string::npos);
}

TEST_CASE("diffuse reports monotone spread growth for the localization channel") {
  const auto out_dir = scratch_dir() / "diffuse_grw";
  std::filesystem::remove_all(out_dir);
  const auto config = write_config("diffuse_grw.json",
                                   {{"lattice", lattice_block(4)},
                                    {"channel", {{"kind", "grw"}, {"r_c", 1.5}}},
                                    {"state", {{"kind", "plane_wave"}, {"n", {0}}}},
                                    {"steps", 5},
                                    {"seed", 1}});
  const CliResult result =
      run_cli("diffuse --config " + config.string() + " --out " + out_dir.string());
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("\"monotone_spread\": true") != std::string::npos);

  const auto lines = csv_lines(slurp(out_dir / "diffuse.csv"));
  REQUIRE(lines.size() == 7);  // header plus steps 0..5
  CHECK(lines[0] == "step,mean_p_0,spread_p_0,d_0,D_0,delta_0");
  double previous = -1.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const double spread = csv_field(lines[i], 2);
    CHECK(spread > previous);
    previous = spread;
  }
  CHECK(std::filesystem::exists(out_dir / "diffuse.json"));
}

TEST_CASE("diffuse tracks the alternating mean of a reflecting boost") {
  const auto out_dir = scratch_dir() / "diffuse_reflect";
  std::filesystem::remove_all(out_dir);
  const auto config = write_config(
      "diffuse_reflect.json",
      {{"lattice", lattice_block(3)},
       {"channel",
        {{"kind", "boost_family"}, {"gamma", {0}}, {"mode", "reflecting"}}},
       {"state", {{"kind", "plane_wave"}, {"n", {1}}}},
       {"steps", 3},
       {"seed", 1}});
  const CliResult result =
      run_cli("diffuse --config " + config.string() + " --out " + out_dir.string());
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("\"class\": \"PureBoost\"") != std::string::npos);

  const auto lines = csv_lines(slurp(out_dir / "diffuse.csv"));
  REQUIRE(lines.size() == 5);
  const double mean0 = csv_field(lines[1], 1);
  const double mean1 = csv_field(lines[2], 1);
  const double mean2 = csv_field(lines[3], 1);
  CHECK(mean0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mean1 == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(mean2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lindblad-evolve keeps dephasing spreads flat") {
  const auto config = write_config(
      "evolve_zero.json",
      {{"lattice", lattice_block(3)},
       {"lindblad",
        {{"kind", "random_momentum_diagonal"}, {"num_ops", 2}, {"rate_scale", 0.4}, {"seed", 5}}},
       {"state", {{"kind", "plane_wave"}, {"n", {1}}}},
       {"dt", 0.05},
       {"steps", 20},
       {"seed", 1}});
  const CliResult result = run_cli("lindblad-evolve --config " + config.string());
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("\"spread_constant\": true") != std::string::npos);
  CHECK(result.output.find("\"pass\": true") != std::string::npos);
}

TEST_CASE("unravel writes outcomes and a loadable average state") {
  const auto out_dir = scratch_dir() / "unravel_out";
  std::filesystem::remove_all(out_dir);
  const auto config = write_config(
      "unravel_small.json",
      {{"lattice", lattice_block(3)},
       {"channel", {{"kind", "grw"}, {"r_c", 1.0}}},
       {"ensemble",
        {{{"weight", 1.0}, {"state", {{"kind", "plane_wave"}, {"n", {0}}}}}}},
       {"n_trajectories", 50},
       {"n_steps", 2},
       {"outcomes", true},
       {"seed", 21}});
  const CliResult result =
      run_cli("unravel --config " + config.string() + " --out " + out_dir.string());
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("\"pass\": true") != std::string::npos);

  const auto outcome_lines = csv_lines(slurp(out_dir / "outcomes.csv"));
  REQUIRE(outcome_lines.size() == 101);  // header plus 50 trajectories x 2 steps
  CHECK(outcome_lines[0] == "trajectory,step,kraus_id,q_0");

  covdiff::ValidationLimits loose;
  loose.hermitian_tol = 1e-8;
  loose.trace_tol = 1e-8;
  loose.eigenvalue_floor = -1e-8;
  const covdiff::DensityMatrix avg =
      covdiff::io::load_density(out_dir / "average_state.txt", loose);
  CHECK(avg.lattice().n_max() == 3);
}

TEST_CASE("identical invocations are byte-identical") {
  const auto dir_a = scratch_dir() / "det_a";
  const auto dir_b = scratch_dir() / "det_b";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
  const auto config = write_config("determinism.json",
                                   {{"lattice", lattice_block(3)},
                                    {"n_diagonal", 2},
                                    {"n_diffusive", 2},
                                    {"n_probes", 3},
                                    {"seed", 12}});

  const CliResult a =
      run_cli("theorem-scan --config " + config.string() + " --out " + dir_a.string());
  const CliResult b =
      run_cli("theorem-scan --config " + config.string() + " --out " + dir_b.string());
  CHECK(a.exit_code == 0);
  CHECK(a.output == b.output);
  CHECK(slurp(dir_a / "theorem_scan.json") == slurp(dir_b / "theorem_scan.json"));
}

TEST_CASE("seed override steers the sampled trajectories") {
  const auto dir_a = scratch_dir() / "seed_a";
  const auto dir_b = scratch_dir() / "seed_b";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
  const auto config = write_config(
      "seed_override.json",
      {{"lattice", lattice_block(3)},
       {"channel", {{"kind", "grw"}, {"r_c", 1.0}}},
       {"ensemble",
        {{{"weight", 1.0}, {"state", {{"kind", "plane_wave"}, {"n", {0}}}}}}},
       {"n_trajectories", 30},
       {"outcomes", true},
       {"seed", 1}});

  run_cli("unravel --config " + config.string() + " --seed 100 --out " + dir_a.string());
  run_cli("unravel --config " + config.string() + " --seed 101 --out " + dir_b.string());
  CHECK(slurp(dir_a / "outcomes.csv") != slurp(dir_b / "outcomes.csv"));
}
