#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "echelon/harness.hpp"

using namespace echelon;
using namespace echelon::harness;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("echelon_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

const char* kSmallConfig = R"(
[network]
preset = two_stage

[uncertainty]
setting = S1
lambda_poisson = 5

[scheme]
scheme = ippo

[hyperparams]
batch_size = 60
minibatch_size = 30
epochs = 2
fc1 = 16
fc2 = 16

[run]
iterations = 2
episodes = 3
horizon = 30
seed = 7
)";

}  // namespace

TEST_CASE("config parsing resolves defaults and validates keys") {
  auto cfg = RunConfig::from_ini(io::IniFile::parse(kSmallConfig));
  CHECK(cfg.preset_name == "two_stage");
  CHECK(cfg.scheme_name == "ippo");
  CHECK(cfg.hp.batch_size == 60);
  CHECK(cfg.hp.clip_epsilon == doctest::Approx(0.21));  // scheme default kept
  CHECK(cfg.seed == 7);
  CHECK(cfg.seed_set);
}

TEST_CASE("unknown keys and sections are rejected with their names") {
  auto bad_key = std::string(kSmallConfig) + "\n[run]\nworker_count = 3\n";
  CHECK_THROWS_WITH_AS(RunConfig::from_ini(io::IniFile::parse(bad_key)),
                       doctest::Contains("worker_count"), std::invalid_argument);
  auto bad_section = std::string(kSmallConfig) + "\n[cluster]\nnodes = 5\n";
  CHECK_THROWS_WITH_AS(RunConfig::from_ini(io::IniFile::parse(bad_section)),
                       doctest::Contains("cluster"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(RunConfig::from_ini(io::IniFile::parse("[scheme]\nscheme = sarsa\n")),
                       doctest::Contains("sarsa"), std::invalid_argument);
}

TEST_CASE("misplaced uncertainty knobs are load errors") {
  const char* bad = R"(
[uncertainty]
setting = S1
p_d = 0.1
)";
  CHECK_THROWS_AS(RunConfig::from_ini(io::IniFile::parse(bad)), std::invalid_argument);
}

TEST_CASE("training without a seed names the missing key") {
  const char* no_seed = R"(
[scheme]
scheme = ippo
[run]
iterations = 1
)";
  auto cfg = RunConfig::from_ini(io::IniFile::parse(no_seed));
  CHECK_THROWS_WITH_AS(cli_train(cfg), doctest::Contains("seed"), std::invalid_argument);
}

TEST_CASE("manifest round-trips through the parser") {
  auto cfg = RunConfig::from_ini(io::IniFile::parse(kSmallConfig));
  auto round = RunConfig::from_ini(io::IniFile::parse(cfg.to_ini().serialize()));
  CHECK(round.to_ini().serialize() == cfg.to_ini().serialize());
  CHECK(round.config_hash() == cfg.config_hash());
}

TEST_CASE("custom network topologies parse from config") {
  const char* custom = R"(
[network]
nodes = 2
edges = 1:2
node1.sell_price = 3
node1.replenish_cost = 2
node1.storage_cost = 0.5
node1.backlog_cost = 0.6
node1.storage_capacity = 30
node1.order_limit = 30
node1.lead_time = 3
node1.initial_inventory = 10
node2.sell_price = 2
node2.replenish_cost = 1
node2.storage_cost = 0.2
node2.backlog_cost = 0.9
node2.storage_capacity = 30
node2.order_limit = 30
node2.lead_time = 1
node2.initial_inventory = 10

[scheme]
scheme = oracle
)";
  auto cfg = RunConfig::from_ini(io::IniFile::parse(custom));
  REQUIRE(cfg.custom_topology.has_value());
  CHECK(cfg.topology().node(1).lead_time == 3);
  auto round = RunConfig::from_ini(io::IniFile::parse(cfg.to_ini().serialize()));
  CHECK(round.topology().node(2).backlog_cost == doctest::Approx(0.9));
}

TEST_CASE("train writes the documented files and is byte-reproducible") {
  auto cfg = RunConfig::from_ini(io::IniFile::parse(kSmallConfig));
  cfg.out_dir = temp_dir("train_a");
  cli_train(cfg);
  CHECK(fs::exists(cfg.out_dir + "/manifest.ini"));
  CHECK(fs::exists(cfg.out_dir + "/checkpoint.bin"));
  CHECK(fs::exists(cfg.out_dir + "/curve.csv"));

  // re-run from the manifest into a second directory
  auto cfg2 = RunConfig::load(cfg.out_dir + "/manifest.ini");
  cfg2.out_dir = temp_dir("train_b");
  cli_train(cfg2);
  CHECK(io::read_text_file(cfg.out_dir + "/curve.csv") ==
        io::read_text_file(cfg2.out_dir + "/curve.csv"));
}

TEST_CASE("evaluating the oracle writes a unit ratio and matching stats") {
  RunConfig cfg;
  cfg.preset_name = "two_stage";
  cfg.scheme_name = "oracle";
  cfg.episodes = 3;
  cfg.horizon = 8;
  cfg.out_dir = temp_dir("eval_oracle");
  cli_evaluate(cfg);
  auto summary = io::read_csv(cfg.out_dir + "/summary.csv");
  REQUIRE(summary.rows.size() == 1);
  CHECK(summary.rows[0][summary.column("method")] == "oracle");
  CHECK(std::stod(summary.rows[0][summary.column("oracle_ratio")]) == doctest::Approx(1.0));
  auto rows = io::read_csv(cfg.out_dir + "/metrics.csv");
  CHECK(rows.rows.size() == 3);
  double mean = 0;
  for (const auto& r : rows.rows) mean += std::stod(r[rows.column("reward")]);
  mean /= 3.0;
  CHECK(std::stod(summary.rows[0][summary.column("mean_reward")]) ==
        doctest::Approx(mean).epsilon(1e-9));
  CHECK(fs::exists(cfg.out_dir + "/trace_hash.txt"));
}

TEST_CASE("dshlp evaluation writes the convergence log") {
  RunConfig cfg;
  cfg.preset_name = "two_stage";
  cfg.scheme_name = "dshlp";
  cfg.episodes = 1;
  cfg.horizon = 4;
  cfg.dshlp.max_iterations = 50;
  cfg.out_dir = temp_dir("eval_dshlp");
  cli_evaluate(cfg);
  auto rows = io::read_csv(cfg.out_dir + "/convergence.csv");
  CHECK(rows.rows.size() == 4);  // one row per period
}

TEST_CASE("methods evaluated in one cell share trace hashes") {
  auto dir_a = temp_dir("hash_a");
  auto dir_b = temp_dir("hash_b");
  RunConfig a;
  a.preset_name = "two_stage";
  a.scheme_name = "oracle";
  a.episodes = 2;
  a.horizon = 5;
  a.out_dir = dir_a;
  cli_evaluate(a);
  RunConfig b = a;
  b.scheme_name = "shlp";
  b.out_dir = dir_b;
  cli_evaluate(b);
  CHECK(io::read_text_file(dir_a + "/trace_hash.txt") ==
        io::read_text_file(dir_b + "/trace_hash.txt"));
}

TEST_CASE("plots derive from csv files and skip empty inputs") {
  auto dir = temp_dir("plots");
  {
    io::CsvWriter csv(dir + "/cumulative.csv", {"period", "mean_cumulative_profit"});
    for (int t = 0; t < 5; ++t) csv.row_values({static_cast<double>(t), 3.0 * t});
  }
  auto written = cli_plot(dir);
  REQUIRE(written.size() == 1);
  CHECK(fs::exists(dir + "/cumulative.svg"));
  auto svg = io::read_text_file(dir + "/cumulative.svg");
  CHECK(svg.find("<svg") != std::string::npos);

  auto empty_dir = temp_dir("plots_empty");
  io::CsvWriter empty(empty_dir + "/cumulative.csv", {"period", "mean_cumulative_profit"});
  CHECK(cli_plot(empty_dir).empty());
}

TEST_CASE("csv reader flags malformed rows") {
  auto dir = temp_dir("badcsv");
  io::write_text_file(dir + "/broken.csv", "a,b\n1,2\n3\n");
  CHECK_THROWS_WITH_AS(io::read_csv(dir + "/broken.csv"), doctest::Contains("row 3"),
                       std::runtime_error);
}
