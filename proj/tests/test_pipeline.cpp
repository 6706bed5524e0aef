#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "hwnas/errors.hpp"
#include "hwnas/model_io.hpp"
#include "hwnas/pipeline.hpp"
#include "src/pipeline/internal.hpp"
#include "vendor/doctest.h"
#include "vendor/json.hpp"

using namespace hwnas;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string write_config(const fs::path& dir, const nlohmann::json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// small end-to-end run: 4-dim 3-class blobs, a 2-genome-axis space
nlohmann::json small_search_config(const fs::path& out_dir) {
  return nlohmann::json{
      {"version", 1},
      {"master_seed", 404},
      {"output_dir", out_dir.string()},
      {"data",
       {{"synthetic", {{"n_per_class", 40}, {"dim", 4}, {"classes", 3}, {"separation", 8.0}}},
        {"split", {{"train", 0.7}, {"val", 0.2}, {"test", 0.1}}}}},
      {"space",
       {{"num_layers", {4}},
        {"widths", {{16, 24}, {8, 12}, {8}, {8}}},
        {"activations", {"relu", "tanh"}},
        {"batchnorm", {false}},
        {"learning_rates", {0.002, 0.005}},
        {"l1", {0.0}},
        {"dropouts", {0.0}}}},
      {"search",
       {{"population_size", 4},
        {"total_trials", 10},
        {"epochs_per_trial", 2},
        {"batch_size", 16},
        {"objective_set", "snacpack"}}},
      {"local",
       {{"warmup_epochs", 2},
        {"iterations", 2},
        {"epochs_per_iteration", 2},
        {"batch_size", 16},
        {"target_sparsity", 0.3}}}};
}

}  // namespace

TEST_CASE("run config defaults and seed derivation") {
  TempDir dir("hwnas_test_cfg");
  const nlohmann::json doc = {
      {"version", 1},
      {"master_seed", 7},
      {"output_dir", (dir.path / "out").string()},
      {"data", {{"synthetic", {{"n_per_class", 10}, {"dim", 4}, {"classes", 2}}}}}};
  const RunConfig cfg = load_run_config(write_config(dir.path, doc));

  CHECK(cfg.master_seed == 7);
  CHECK(cfg.data.seed == derive_seed(7, 1));
  CHECK(cfg.search.search.seed == derive_seed(7, 2));
  CHECK(cfg.local.local.seed == derive_seed(7, 3));
  CHECK(cfg.data.synthetic.has_value());
  CHECK(cfg.data.synthetic->separation == 6.0);
  CHECK(cfg.search.search.population_size == 20);
  CHECK(cfg.search.search.objective_set == ObjectiveSet::kSnacPack);
  CHECK(cfg.local.target_sparsity == 0.5);
  CHECK(cfg.est.estimator.reuse_factor == 1);
  CHECK(cfg.est.device.name == "vu13p");
  CHECK(cfg.est.surrogate_path.empty());
}

TEST_CASE("run config explicit values override derivation") {
  TempDir dir("hwnas_test_cfg2");
  const nlohmann::json doc = {
      {"version", 1},
      {"master_seed", 7},
      {"output_dir", (dir.path / "out").string()},
      {"data",
       {{"synthetic", {{"n_per_class", 10}, {"dim", 4}, {"classes", 2}}}, {"seed", 100}}},
      {"search", {{"seed", 200}, {"objective_set", "nac"}, {"optimizer", "sgd"}}},
      {"local", {{"seed", 300}, {"qat_bits", 6}}},
      {"estimator",
       {{"reuse_factor", 4},
        {"dsp_bit_threshold", 12},
        {"device",
         {{"name", "custom"},
          {"lut_capacity", 1000},
          {"ff_capacity", 2000},
          {"dsp_capacity", 30},
          {"bram_capacity", 40},
          {"clock_period_ns", 2.5}}}}}};
  const RunConfig cfg = load_run_config(write_config(dir.path, doc));
  CHECK(cfg.data.seed == 100);
  CHECK(cfg.search.search.seed == 200);
  CHECK(cfg.search.search.objective_set == ObjectiveSet::kNac);
  CHECK(cfg.search.optimizer == Optimizer::kSgd);
  CHECK(cfg.local.local.seed == 300);
  CHECK(cfg.local.local.qat_bits == 6);
  CHECK(cfg.est.estimator.reuse_factor == 4);
  CHECK(cfg.est.estimator.dsp_bit_threshold == 12);
  CHECK(cfg.est.device.name == "custom");
  CHECK(cfg.est.device.dsp_capacity == 30);
  CHECK(cfg.est.device.clock_period_ns == 2.5);
}

TEST_CASE("run config rejects malformed documents") {
  TempDir dir("hwnas_test_cfg3");
  const auto check_throws = [&](nlohmann::json doc) {
    CHECK_THROWS_AS(load_run_config(write_config(dir.path, doc)), ConfigError);
  };
  nlohmann::json base = {
      {"version", 1},
      {"output_dir", (dir.path / "out").string()},
      {"data", {{"synthetic", {{"n_per_class", 10}, {"dim", 4}, {"classes", 2}}}}}};

  nlohmann::json doc = base;
  doc["version"] = 2;
  check_throws(doc);

  doc = base;
  doc.erase("output_dir");
  check_throws(doc);

  doc = base;
  doc.erase("data");
  check_throws(doc);

  doc = base;
  doc["data"]["path"] = "also.csv";  // both sources at once
  check_throws(doc);

  doc = base;
  doc["tyop"] = 1;  // unknown top-level key
  check_throws(doc);

  doc = base;
  doc["search"] = {{"objective_set", "both"}};
  check_throws(doc);

  doc = base;
  doc["data"]["split"] = {{"train", 0.9}, {"val", 0.9}, {"test", 0.1}};
  check_throws(doc);

  doc = base;
  doc["estimator"] = {{"reuse_factor", 0}};
  check_throws(doc);

  doc = base;
  doc["space"] = {{"widths", nlohmann::json::array()}};
  check_throws(doc);

  CHECK_THROWS_AS(load_run_config((dir.path / "missing.json").string()), IoError);
}

TEST_CASE("resolve_space applies overrides and checks dims") {
  SpaceOverrides overrides;
  const SearchSpaceConfig stock = resolve_space(overrides, 16, 5);
  CHECK(stock.input_dim == 16);
  CHECK(stock.num_classes == 5);
  CHECK(stock.num_layers_choices == std::vector<int>{4, 5, 6, 7, 8});
  CHECK(stock.width_choices[0] == std::vector<int>{64, 120, 128});

  overrides.num_layers = std::vector<int>{4};
  overrides.input_dim = 16;
  CHECK_NOTHROW(resolve_space(overrides, 16, 5));
  overrides.input_dim = 8;
  CHECK_THROWS_AS(resolve_space(overrides, 16, 5), ConfigError);
  overrides.input_dim.reset();
  overrides.num_classes = 4;
  CHECK_THROWS_AS(resolve_space(overrides, 16, 5), ConfigError);
}

TEST_CASE("search command writes a reproducible run") {
  TempDir dir("hwnas_test_cmd_search");
  const fs::path out = dir.path / "run";
  const std::string config_path = write_config(dir.path, small_search_config(out));
  const RunConfig cfg = load_run_config(config_path);

  const std::string run_dir = cmd_search(cfg);
  CHECK(run_dir == out.string());

  // artifacts exist and the manifest indexes them
  const nlohmann::json manifest = pipeline::read_json_file((out / "manifest.json").string());
  CHECK(manifest["command"] == "search");
  CHECK(fs::exists(out / "config.json"));
  CHECK(fs::exists(out / "trials.csv"));
  CHECK(fs::exists(out / "timings.csv"));
  CHECK(fs::exists(out / "pareto.json"));
  CHECK(slurp(out / "config.json") == slurp(config_path));

  // trial log shape
  const pipeline::CsvTable trials = pipeline::read_csv((out / "trials.csv").string());
  CHECK(trials.column("trial_index") == 0);
  CHECK(trials.column("genome_key") == 1);
  CHECK(trials.column("accuracy") >= 0);
  CHECK(trials.column("est_avg_resources") >= 0);
  CHECK(trials.column("est_clock_cycles") >= 0);
  CHECK(trials.column("failed") >= 0);
  CHECK(trials.rows.size() == 10);

  // archive invariants: valid genomes, mutually non-dominated objectives
  const nlohmann::json pareto = pipeline::read_json_file((out / "pareto.json").string());
  CHECK(pareto["objective_set"] == "snacpack");
  CHECK(pareto["input_dim"] == 4);
  CHECK(pareto["num_classes"] == 3);
  REQUIRE(!pareto["archive"].empty());
  const SearchSpaceConfig space = resolve_space(cfg.space, 4, 3);
  std::vector<ObjectiveVector> objs;
  for (const auto& entry : pareto["archive"]) {
    const ArchitectureGenome g = genome_from_json(entry["genome"].dump());
    CHECK(genome_in_space(g, space));
    ObjectiveVector v;
    for (const auto& name : pareto["objectives"]) {
      v.values.push_back(entry["objectives"][name.get<std::string>()].get<double>());
      v.names.push_back(name.get<std::string>());
    }
    for (const auto& s : pareto["senses"]) {
      v.senses.push_back(s.get<std::string>() == "maximize" ? Sense::kMaximize
                                                            : Sense::kMinimize);
    }
    objs.push_back(std::move(v));
  }
  for (const auto& a : objs) {
    for (const auto& b : objs) CHECK_FALSE(dominates(a, b));
  }

  // rerunning the same config reproduces the trial log byte for byte
  const std::string first = slurp(out / "trials.csv");
  cmd_search(cfg);
  CHECK(slurp(out / "trials.csv") == first);
}

TEST_CASE("search honors a min_accuracy filter") {
  TempDir dir("hwnas_test_cmd_search_filter");
  nlohmann::json doc = small_search_config(dir.path / "run");
  doc["search"]["min_accuracy"] = 0.5;
  const RunConfig cfg = load_run_config(write_config(dir.path, doc));
  cmd_search(cfg);
  const nlohmann::json filtered =
      pipeline::read_json_file((dir.path / "run" / "pareto_filtered.json").string());
  CHECK(filtered["min_accuracy"] == 0.5);
  for (const auto& entry : filtered["archive"]) {
    CHECK(entry["objectives"]["accuracy"].get<double>() > 0.5);
  }
}

TEST_CASE("a stale lock blocks the run directory") {
  TempDir dir("hwnas_test_lock");
  const fs::path out = dir.path / "run";
  fs::create_directories(out);
  std::ofstream(out / "lock") << "";
  const RunConfig cfg = load_run_config(write_config(dir.path, small_search_config(out)));
  CHECK_THROWS_AS(cmd_search(cfg), ConfigError);
  fs::remove(out / "lock");
  CHECK_NOTHROW(cmd_search(cfg));
}

TEST_CASE("localsearch command compresses an archive entry") {
  TempDir dir("hwnas_test_cmd_local");
  const fs::path out = dir.path / "run";
  const RunConfig cfg = load_run_config(write_config(dir.path, small_search_config(out)));
  cmd_search(cfg);

  const nlohmann::json pareto = pipeline::read_json_file((out / "pareto.json").string());
  const std::string key = pareto["archive"][0]["genome_key"].get<std::string>();

  LocalSearchRequest request;
  request.genome = key;
  request.from_run = out.string();
  const std::string run_dir = cmd_localsearch(cfg, request);

  const nlohmann::json manifest =
      pipeline::read_json_file((fs::path(run_dir) / "manifest.json").string());
  CHECK(manifest["command"] == "localsearch");
  const pipeline::CsvTable ckpt =
      pipeline::read_csv((fs::path(run_dir) / "checkpoints.csv").string());
  CHECK(ckpt.rows.size() == 3);  // warm-up + 2 iterations
  CHECK(ckpt.column("sparsity") >= 0);
  CHECK(ckpt.column("weights_path") >= 0);

  // exported model carries provenance and reloads
  const std::string manifest_path = (fs::path(run_dir) / "model.json").string();
  REQUIRE(fs::exists(manifest_path));
  const nlohmann::json prov = read_model_provenance(manifest_path);
  CHECK(prov.contains("config_hash"));
  CHECK(prov.contains("test_accuracy"));
  CHECK(prov["source"] == "search:" + key);
  Mlp<float> model = load_model(manifest_path);
  CHECK(model.input_dim() == 4);

  // unknown keys are rejected with the catalog of valid ones
  request.genome = "no-such-key";
  CHECK_THROWS_AS(cmd_localsearch(cfg, request), ConfigError);
}

TEST_CASE("localsearch command accepts a network file") {
  TempDir dir("hwnas_test_cmd_local_file");
  const fs::path out = dir.path / "run";
  nlohmann::json doc = small_search_config(out);
  doc["local"]["iterations"] = 1;
  const RunConfig cfg = load_run_config(write_config(dir.path, doc));

  NetworkDescription net;
  net.layers.push_back(LayerDesc::dense(4, 12));
  net.layers.push_back(LayerDesc::act(Activation::ReLU, 12));
  net.layers.push_back(LayerDesc::dense(12, 3));
  net.training_meta.learning_rate = 0.005;
  const fs::path net_path = dir.path / "net.json";
  std::ofstream(net_path) << network_to_json(net, 2);

  LocalSearchRequest request;
  request.genome = net_path.string();
  request.target_sparsity = 0.2;
  const std::string run_dir = cmd_localsearch(cfg, request);
  const pipeline::CsvTable ckpt =
      pipeline::read_csv((fs::path(run_dir) / "checkpoints.csv").string());
  CHECK(ckpt.rows.size() == 2);
  const nlohmann::json prov =
      read_model_provenance((fs::path(run_dir) / "model.json").string());
  CHECK(prov["target_sparsity"] == 0.2);

  // a mismatched input dim is caught before any training happens
  NetworkDescription bad = net;
  bad.layers[0].in_dim = 7;
  std::ofstream(dir.path / "bad.json") << network_to_json(bad, 2);
  request.genome = (dir.path / "bad.json").string();
  CHECK_THROWS_AS(cmd_localsearch(cfg, request), ConfigError);
}

TEST_CASE("report renders both run flavors deterministically") {
  TempDir dir("hwnas_test_cmd_report");
  const fs::path out = dir.path / "run";
  const RunConfig cfg = load_run_config(write_config(dir.path, small_search_config(out)));
  cmd_search(cfg);

  cmd_report(out.string());
  const std::string text = slurp(out / "report.txt");
  // resource cells look like "262 (2.1%)", latency like "105 (21)"
  CHECK(std::regex_search(text, std::regex{R"(\d+ \(\d+\.\d+%\))"}));
  CHECK(std::regex_search(text, std::regex{R"(\d+ \(\d+\))"}));
  CHECK(text.find("accuracy") != std::string::npos);

  const pipeline::CsvTable csv = pipeline::read_csv((out / "report.csv").string());
  CHECK(csv.column("model") == 0);
  CHECK(csv.column("bops") >= 0);
  CHECK(csv.column("latency_ns") >= 0);
  CHECK(csv.column("dsp_pct") >= 0);
  CHECK(csv.rows.size() == pipeline::read_json_file((out / "pareto.json").string())["archive"]
                               .size());

  // byte-identical regeneration
  const std::string report_bytes = slurp(out / "report.txt");
  const std::string csv_bytes = slurp(out / "report.csv");
  cmd_report(out.string());
  CHECK(slurp(out / "report.txt") == report_bytes);
  CHECK(slurp(out / "report.csv") == csv_bytes);

  // local-search runs get the sparsity/bits columns
  const nlohmann::json pareto = pipeline::read_json_file((out / "pareto.json").string());
  LocalSearchRequest request;
  request.genome = pareto["archive"][0]["genome_key"].get<std::string>();
  request.from_run = out.string();
  const std::string local_dir = cmd_localsearch(cfg, request);
  cmd_report(local_dir);
  const std::string local_text = slurp(fs::path(local_dir) / "report.txt");
  CHECK(local_text.find("sparsity") != std::string::npos);

  CHECK_THROWS_AS(cmd_report((dir.path / "nowhere").string()), IoError);
}

TEST_CASE("plot emits pareto-flagged points and an svg") {
  TempDir dir("hwnas_test_cmd_plot");
  const fs::path out = dir.path / "run";
  const RunConfig cfg = load_run_config(write_config(dir.path, small_search_config(out)));
  cmd_search(cfg);

  PlotRequest request;
  request.x_metric = "est_clock_cycles";
  request.y_metric = "accuracy";
  cmd_plot(out.string(), request);

  const fs::path csv_path = out / "plot_est_clock_cycles_vs_accuracy.csv";
  const fs::path svg_path = out / "plot_est_clock_cycles_vs_accuracy.svg";
  REQUIRE(fs::exists(csv_path));
  REQUIRE(fs::exists(svg_path));

  // flags match a brute-force 2D dominance pass (accuracy maximized)
  const pipeline::CsvTable table = pipeline::read_csv(csv_path.string());
  const int xi = table.column("est_clock_cycles");
  const int yi = table.column("accuracy");
  const int pi = table.column("is_pareto");
  REQUIRE(xi >= 0);
  REQUIRE(yi >= 0);
  REQUIRE(pi >= 0);
  REQUIRE(!table.rows.empty());
  std::set<std::string> keys;
  for (const auto& row : table.rows) keys.insert(row[0]);
  CHECK(keys.size() == table.rows.size());  // genomes deduplicated
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double xa = std::stod(table.rows[i][xi]);
    const double ya = std::stod(table.rows[i][yi]);
    bool dominated = false;
    for (std::size_t j = 0; j < table.rows.size() && !dominated; ++j) {
      if (i == j) continue;
      const double xb = std::stod(table.rows[j][xi]);
      const double yb = std::stod(table.rows[j][yi]);
      dominated = xb <= xa && -yb <= -ya && (xb < xa || -yb < -ya);
    }
    CHECK(table.rows[i][pi] == (dominated ? "0" : "1"));
  }

  const std::string svg = slurp(svg_path);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("<circle") != std::string::npos);
  CHECK(svg.find("est_clock_cycles") != std::string::npos);
  std::size_t front_size = 0;
  for (const auto& row : table.rows) front_size += row[pi] == "1";
  if (front_size > 1) CHECK(svg.find("polyline") != std::string::npos);

  request.x_metric = "nonsense";
  CHECK_THROWS_AS(cmd_plot(out.string(), request), ConfigError);
}

TEST_CASE("genome csv fields round-trip through the table defaults") {
  const SearchSpaceConfig space = SearchSpaceConfig::table_defaults(16, 5);
  Rng rng(3);
  const ArchitectureGenome g = sample(space, rng);
  const std::string fields = pipeline::genome_csv_fields(g);
  const auto& columns = pipeline::genome_csv_columns();
  std::vector<std::string> parts;
  std::stringstream ss(fields);
  std::string part;
  while (std::getline(ss, part, ',')) parts.push_back(part);
  REQUIRE(parts.size() == columns.size());
  CHECK(parts[0] == std::to_string(g.num_layers));
  CHECK(parts[1] == std::to_string(g.widths[0]));
}
