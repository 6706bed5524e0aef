#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hwnas/errors.hpp"
#include "hwnas/text.hpp"
#include "src/pipeline/internal.hpp"

namespace hwnas {

namespace {

using nlohmann::json;

struct ReportRow {
  std::string model;
  double sparsity = 0.0;
  int weight_bits = 32;
  double accuracy = 0.0;
  std::int64_t bops = 0;
  ResourceEstimate est;
};

std::string table_text(const std::vector<std::string>& headers,
                       const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) widths[c] = headers[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  auto emit = [&](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) line += "  ";
      line += cells[c];
      // first column left-aligned, the rest padded on the left
      if (c + 1 < cells.size()) {
        const std::size_t pad = widths[c] - cells[c].size();
        if (c == 0) {
          line += std::string(pad, ' ');
        } else {
          line.insert(line.size() - cells[c].size(), std::string(pad, ' '));
        }
      }
    }
    return line + "\n";
  };
  std::string out = emit(headers);
  for (const auto& row : rows) out += emit(row);
  return out;
}

std::string count_pct(double value, std::int64_t capacity) {
  const double pct = capacity > 0 ? value / static_cast<double>(capacity) * 100.0 : 0.0;
  return std::to_string(std::llround(value)) + " (" + fmt_fixed(pct, 1) + "%)";
}

double pct_of(double value, std::int64_t capacity) {
  return capacity > 0 ? value / static_cast<double>(capacity) * 100.0 : 0.0;
}

std::vector<ReportRow> rows_from_pareto(const std::filesystem::path& dir, const RunConfig& cfg) {
  const json pareto = pipeline::read_json_file((dir / "pareto.json").string());
  if (!pareto.contains("archive") || !pareto["archive"].is_array() ||
      !pareto.contains("input_dim") || !pareto.contains("num_classes")) {
    throw IoError((dir / "pareto.json").string() + ": not a search archive");
  }
  const SearchSpaceConfig space = resolve_space(
      cfg.space, pareto["input_dim"].get<std::size_t>(), pareto["num_classes"].get<int>());
  const std::unique_ptr<Estimator> estimator = make_estimator(cfg.est);

  std::vector<ReportRow> rows;
  for (const json& entry : pareto["archive"]) {
    const ArchitectureGenome genome = genome_from_json(entry["genome"].dump());
    const NetworkDescription net = decode(genome, space);
    ReportRow row;
    row.model = entry.value("genome_key", genome_key(genome));
    row.accuracy = entry["objectives"].value("accuracy", 0.0);
    row.bops = count_bops(net);
    row.est = estimator->estimate(net);
    rows.push_back(std::move(row));
  }
  return rows;
}

double field_as_double(const pipeline::CsvTable& table, const std::vector<std::string>& row,
                       const std::string& name, const std::string& path) {
  const int col = table.column(name);
  if (col < 0 || static_cast<std::size_t>(col) >= row.size()) {
    throw IoError(path + ": missing column '" + name + "'");
  }
  double value = 0.0;
  if (!parse_double(row[static_cast<std::size_t>(col)], value)) {
    throw IoError(path + ": bad number in column '" + name + "'");
  }
  return value;
}

std::vector<ReportRow> rows_from_checkpoints(const std::filesystem::path& dir) {
  const std::string path = (dir / "checkpoints.csv").string();
  const pipeline::CsvTable table = pipeline::read_csv(path);
  std::vector<ReportRow> rows;
  for (const auto& fields : table.rows) {
    ReportRow row;
    const int iteration = static_cast<int>(field_as_double(table, fields, "iteration", path));
    row.model = "ckpt" + std::to_string(iteration);
    row.sparsity = field_as_double(table, fields, "sparsity", path);
    row.weight_bits = static_cast<int>(field_as_double(table, fields, "weight_bits", path));
    row.accuracy = field_as_double(table, fields, "val_accuracy", path);
    row.bops = static_cast<std::int64_t>(field_as_double(table, fields, "bops", path));
    row.est.bram = field_as_double(table, fields, "bram", path);
    row.est.dsp = field_as_double(table, fields, "dsp", path);
    row.est.ff = field_as_double(table, fields, "ff", path);
    row.est.lut = field_as_double(table, fields, "lut", path);
    row.est.ii_cycles = field_as_double(table, fields, "ii_cycles", path);
    row.est.latency_cycles = field_as_double(table, fields, "latency_cycles", path);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string cmd_report(const std::string& run_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(run_dir);
  const RunConfig cfg = load_run_config((dir / "config.json").string());
  const DeviceProfile& device = cfg.est.device;

  const bool is_search = fs::exists(dir / "pareto.json");
  const bool is_local = fs::exists(dir / "checkpoints.csv");
  if (!is_search && !is_local) {
    throw ConfigError(run_dir + " holds neither pareto.json nor checkpoints.csv");
  }
  const std::vector<ReportRow> rows =
      is_search ? rows_from_pareto(dir, cfg) : rows_from_checkpoints(dir);

  std::string text = (is_search ? std::string("search run ") : std::string("local search run ")) +
                     run_dir + "\n";
  text += "device " + device.name + ", clock period " + fmt_double(device.clock_period_ns) +
          " ns\n\n";

  std::vector<std::string> model_headers = {"model", "accuracy %", "BOPs",
                                            "est avg resources %", "est clock cycles"};
  if (is_local) {
    model_headers.insert(model_headers.begin() + 1, {"sparsity", "bits"});
  }
  std::vector<std::vector<std::string>> model_rows;
  for (const ReportRow& row : rows) {
    std::vector<std::string> cells = {row.model};
    if (is_local) {
      cells.push_back(fmt_fixed(row.sparsity, 3));
      cells.push_back(std::to_string(row.weight_bits));
    }
    cells.push_back(fmt_fixed(row.accuracy * 100.0, 2));
    cells.push_back(std::to_string(row.bops));
    cells.push_back(fmt_fixed(avg_resource_pct(row.est, device), 2));
    cells.push_back(std::to_string(std::llround(row.est.latency_cycles)));
    model_rows.push_back(std::move(cells));
  }
  text += table_text(model_headers, model_rows);

  text += "\n";
  std::vector<std::vector<std::string>> impl_rows;
  for (const ReportRow& row : rows) {
    impl_rows.push_back({
        row.model,
        std::to_string(std::llround(latency_ns(row.est, device))) + " (" +
            std::to_string(std::llround(row.est.latency_cycles)) + ")",
        std::to_string(std::llround(row.est.ii_cycles)),
        count_pct(row.est.dsp, device.dsp_capacity),
        count_pct(row.est.lut, device.lut_capacity),
        count_pct(row.est.ff, device.ff_capacity),
        count_pct(row.est.bram, device.bram_capacity),
    });
  }
  text += table_text({"model", "latency ns (cycles)", "II", "DSP", "LUT", "FF", "BRAM"},
                     impl_rows);

  const std::string txt_path = (dir / "report.txt").string();
  {
    std::ofstream out(txt_path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + txt_path);
    out << text;
    if (!out) throw IoError("failed writing " + txt_path);
  }

  const std::string csv_path = (dir / "report.csv").string();
  {
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + csv_path);
    out << "model,sparsity,weight_bits,accuracy,bops,est_avg_resources_pct,est_clock_cycles,"
           "latency_ns,ii_cycles,dsp,dsp_pct,lut,lut_pct,ff,ff_pct,bram,bram_pct\n";
    for (const ReportRow& row : rows) {
      out << row.model << "," << fmt_double(row.sparsity) << "," << row.weight_bits << ","
          << fmt_double(row.accuracy) << "," << row.bops << ","
          << fmt_double(avg_resource_pct(row.est, device)) << ","
          << fmt_double(row.est.latency_cycles) << "," << fmt_double(latency_ns(row.est, device))
          << "," << fmt_double(row.est.ii_cycles) << "," << fmt_double(row.est.dsp) << ","
          << fmt_double(pct_of(row.est.dsp, device.dsp_capacity)) << ","
          << fmt_double(row.est.lut) << "," << fmt_double(pct_of(row.est.lut, device.lut_capacity))
          << "," << fmt_double(row.est.ff) << ","
          << fmt_double(pct_of(row.est.ff, device.ff_capacity)) << "," << fmt_double(row.est.bram)
          << "," << fmt_double(pct_of(row.est.bram, device.bram_capacity)) << "\n";
    }
    if (!out) throw IoError("failed writing " + csv_path);
  }

  std::fputs(text.c_str(), stdout);
  return run_dir;
}

}  // namespace hwnas
