#pragma once

#include <string>
#include <vector>

#include "latdyn/util.hpp"

namespace latdyn {

// Numeric table with named columns; the interchange format between the
// experiment drivers, the theory exporters, and the diff tool.  Values are
// written with %.17g so a round trip through text is bit-exact for doubles,
// which keeps run outputs byte-identical for a fixed config and seed.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  Index column_index(const std::string& name) const;
};

std::string csv_to_string(const CsvTable& table);
CsvTable csv_from_string(const std::string& text);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// SHA-256 digest, hex encoded; used for the manifest's file inventory and
// the whole-run digest (determinism is a tested contract, so the digest of
// every data file is recorded).
std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Run manifest: everything needed to reproduce and audit a run.  config_json
// is the exact configuration echo (already serialized); data_files are paths
// relative to the output directory, digested at write time.
struct RunManifest {
  std::string experiment;
  std::string config_json;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::vector<Verdict> verdicts;
  std::vector<std::string> data_files;

  bool all_passed() const {
    for (const Verdict& v : verdicts)
      if (!v.passed) return false;
    return !verdicts.empty();
  }
};

// Writes <out_dir>/manifest.json: config echo, library/compiler versions,
// wall time, verdicts, and a digest + byte count per listed data file.
void write_manifest(const RunManifest& manifest, const std::string& out_dir);

}  // namespace latdyn
