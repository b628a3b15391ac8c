#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace moveconv {

// FNV-1a 64-bit content hash (manifest integrity, not cryptographic).
std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hash_hex(std::uint64_t h);

std::string format_sig(double v, int sig_digits = 12);

// Buffered CSV writer with fixed significant-digit formatting so outputs are
// byte-stable across runs.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header,
            int sig_digits = 12);
  void row(const std::vector<double>& values);
  void row_mixed(const std::vector<std::string>& values);
  std::string cell(double v) const { return format_sig(v, sig_digits_); }
  void close();
  ~CsvWriter();

 private:
  std::string path_;
  std::string buf_;
  int cols_ = 0;
  int sig_digits_ = 12;
  bool closed_ = false;
};

void ensure_dir(const std::string& path);
std::string join_path(const std::string& a, const std::string& b);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// header-keyed CSV reader for files this tool wrote
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const;  // throws if absent
  double num(std::size_t row, int col) const;
};

CsvTable read_csv(const std::string& path);

// Collects output files and emits manifest.json: config echo, seed, tool
// version, and an fnv1a64 content hash per file.
class RunManifest {
 public:
  RunManifest(std::string run_dir, std::map<std::string, std::string> config_echo,
              std::uint64_t seed);
  void add_file(const std::string& relative_path);
  void write();  // manifest.json in the run dir

 private:
  std::string run_dir_;
  std::map<std::string, std::string> config_;
  std::uint64_t seed_;
  std::vector<std::string> files_;
};

// Minimal deterministic SVG polyline chart; one series per (xs, ys) pair.
struct SvgSeries {
  std::vector<double> x, y;
  std::string color = "#1f6fb2";
  bool dashed = false;
};

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<SvgSeries>& series, bool with_timestamp = false,
                     double reference_y = std::numeric_limits<double>::quiet_NaN());

}  // namespace moveconv
