#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hwnas/errors.hpp"
#include "hwnas/text.hpp"
#include "hwnas/version.hpp"
#include "src/pipeline/internal.hpp"

namespace hwnas {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("HWNAS_LOG");
    if (env == nullptr) return LogLevel::kInfo;
    const std::string_view v(env);
    if (v == "silent") return LogLevel::kSilent;
    if (v == "error") return LogLevel::kError;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

namespace {

void log_at(LogLevel level, const char* tag, const std::string& msg) {
  if (log_level() < level) return;
  std::fprintf(stderr, "hwnas %s: %s\n", tag, msg.c_str());
}

}  // namespace

void log_error(const std::string& msg) { log_at(LogLevel::kError, "error", msg); }
void log_info(const std::string& msg) { log_at(LogLevel::kInfo, "info", msg); }
void log_debug(const std::string& msg) { log_at(LogLevel::kDebug, "debug", msg); }

namespace pipeline {

RunLock::RunLock(const std::string& run_dir) {
  path_ = (std::filesystem::path(run_dir) / "lock").string();
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw ConfigError("run directory is locked by another command (remove " + path_ +
                      " if that run is dead)");
  }
  ::close(fd);
}

RunLock::~RunLock() { std::remove(path_.c_str()); }

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string copy_config_into(const std::string& run_dir, const std::string& config_path) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + config_path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();

  const std::string dst = (std::filesystem::path(run_dir) / "config.json").string();
  std::ofstream out(dst, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write config copy: " + dst);
  out << bytes;
  if (!out) throw IoError("failed writing config copy: " + dst);
  return hex64(fnv1a64(bytes));
}

void write_manifest(const std::string& run_dir, const std::string& command,
                    const std::string& config_hash, const std::string& started_at,
                    const std::vector<std::pair<std::string, std::string>>& artifacts) {
  nlohmann::json doc;
  doc["config_hash"] = config_hash;
  doc["tool_version"] = kToolVersion;
  doc["command"] = command;
  doc["started_at"] = started_at;
  doc["finished_at"] = iso8601_utc_now();
  nlohmann::json art = nlohmann::json::object();
  for (const auto& [name, path] : artifacts) art[name] = path;
  doc["artifacts"] = std::move(art);

  const std::filesystem::path dir(run_dir);
  const std::string tmp = (dir / "manifest.json.tmp").string();
  const std::string final_path = (dir / "manifest.json").string();
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + tmp);
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("failed writing manifest: " + tmp);
  }
  std::filesystem::rename(tmp, final_path);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  return doc;
}

const std::vector<std::string>& genome_csv_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = {"num_layers"};
    for (int i = 0; i < kMaxHiddenLayers; ++i) c.push_back("width" + std::to_string(i));
    c.insert(c.end(), {"activation", "batchnorm", "learning_rate", "l1", "dropout"});
    return c;
  }();
  return cols;
}

std::string genome_csv_fields(const ArchitectureGenome& g) {
  std::string out = std::to_string(g.num_layers);
  for (int i = 0; i < kMaxHiddenLayers; ++i) out += "," + std::to_string(g.widths[i]);
  out += std::string(",") + to_string(g.activation);
  out += g.use_batchnorm ? ",1" : ",0";
  out += "," + fmt_double(g.learning_rate);
  out += "," + fmt_double(g.l1);
  out += "," + fmt_double(g.dropout);
  return out;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  CsvTable table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (header) {
      table.columns = std::move(fields);
      header = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

}  // namespace pipeline
}  // namespace hwnas
