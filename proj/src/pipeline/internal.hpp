#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hwnas/arch_space.hpp"
#include "hwnas/pipeline.hpp"
#include "vendor/json.hpp"

namespace hwnas::pipeline {

// Exclusive ownership of a run directory via an O_EXCL lock file.
class RunLock {
 public:
  explicit RunLock(const std::string& run_dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::string path_;
};

std::string iso8601_utc_now();

// Copies the original config bytes into <run_dir>/config.json and returns
// the content hash recorded in the manifest.
std::string copy_config_into(const std::string& run_dir, const std::string& config_path);

// Atomic (write + rename) manifest.json.
void write_manifest(const std::string& run_dir, const std::string& command,
                    const std::string& config_hash, const std::string& started_at,
                    const std::vector<std::pair<std::string, std::string>>& artifacts);

nlohmann::json read_json_file(const std::string& path);

const std::vector<std::string>& genome_csv_columns();
std::string genome_csv_fields(const ArchitectureGenome& g);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};
CsvTable read_csv(const std::string& path);

}  // namespace hwnas::pipeline
