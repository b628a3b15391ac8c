#include "moveconv/runio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;

namespace moveconv {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  return fnv1a64(read_text_file(path));
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_sig(double v, int sig_digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", sig_digits, v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header,
                     int sig_digits)
    : path_(path), cols_(static_cast<int>(header.size())), sig_digits_(sig_digits) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += header[i];
  }
  buf_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (static_cast<int>(values.size()) != cols_)
    throw std::invalid_argument("CsvWriter: column count mismatch in " + path_);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += format_sig(values[i], sig_digits_);
  }
  buf_ += '\n';
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
  if (static_cast<int>(values.size()) != cols_)
    throw std::invalid_argument("CsvWriter: column count mismatch in " + path_);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += values[i];
  }
  buf_ += '\n';
}

void CsvWriter::close() {
  if (closed_) return;
  write_text_file(path_, buf_);
  closed_ = true;
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
  }
}

void ensure_dir(const std::string& path) { fs::create_directories(path); }

std::string join_path(const std::string& a, const std::string& b) {
  return (fs::path(a) / b).string();
}

void write_text_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int CsvTable::col(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw std::runtime_error("csv: missing column " + name);
}

double CsvTable::num(std::size_t row, int c) const {
  return std::stod(rows.at(row).at(static_cast<std::size_t>(c)));
}

CsvTable read_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    fields.push_back(cur);
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      t.rows.push_back(std::move(fields));
    }
  }
  if (first) throw std::runtime_error("csv: empty file " + path);
  return t;
}

RunManifest::RunManifest(std::string run_dir, std::map<std::string, std::string> config_echo,
                         std::uint64_t seed)
    : run_dir_(std::move(run_dir)), config_(std::move(config_echo)), seed_(seed) {}

void RunManifest::add_file(const std::string& relative_path) {
  files_.push_back(relative_path);
}

void RunManifest::write() {
  nlohmann::ordered_json j;
  j["tool"] = "moveconv";
  j["version"] = "1.0.0";
  j["seed"] = seed_;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_) cfg[k] = v;
  j["config"] = cfg;
  std::string cfg_text;
  for (const auto& [k, v] : config_) cfg_text += k + "=" + v + "\n";
  j["config_hash"] = hash_hex(fnv1a64(cfg_text));
  j["hash_algo"] = "fnv1a64";
  nlohmann::ordered_json files = nlohmann::ordered_json::object();
  std::sort(files_.begin(), files_.end());
  for (const auto& f : files_)
    files[f] = hash_hex(fnv1a64_file(join_path(run_dir_, f)));
  j["files"] = files;
  write_text_file(join_path(run_dir_, "manifest.json"), j.dump(2) + "\n");
}

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<SvgSeries>& series, bool with_timestamp,
                     double reference_y) {
  const int W = 720, Hpx = 420;
  const int ml = 60, mr = 20, mt = 40, mb = 40;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
  if (std::isfinite(reference_y)) {
    ymin = std::min(ymin, reference_y);
    ymax = std::max(ymax, reference_y);
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  const double xpad = 0.02 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  auto py = [&](double y) {
    return Hpx - mb - (y - ymin) / (ymax - ymin) * (Hpx - mt - mb);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
      << Hpx << "\" viewBox=\"0 0 " << W << " " << Hpx << "\">\n";
  if (with_timestamp) {
    const std::time_t now = std::time(nullptr);
    char ts[64];
    std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    svg << "<!-- generated " << ts << " -->\n";
  }
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"15\">" << title << "</text>\n";
  svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr
      << "\" height=\"" << Hpx - mt - mb << "\" fill=\"none\" stroke=\"#888\"/>\n";
  // axis extent labels
  svg << "<text x=\"" << ml << "\" y=\"" << Hpx - mb + 16
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_sig(xmin + xpad, 6)
      << "</text>\n";
  svg << "<text x=\"" << W - mr << "\" y=\"" << Hpx - mb + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << format_sig(xmax - xpad, 6) << "</text>\n";
  svg << "<text x=\"" << ml - 6 << "\" y=\"" << Hpx - mb
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << format_sig(ymin + ypad, 6) << "</text>\n";
  svg << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 10
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << format_sig(ymax - ypad, 6) << "</text>\n";
  if (std::isfinite(reference_y))
    svg << "<line x1=\"" << ml << "\" y1=\"" << format_sig(py(reference_y), 8)
        << "\" x2=\"" << W - mr << "\" y2=\"" << format_sig(py(reference_y), 8)
        << "\" stroke=\"#aaa\" stroke-dasharray=\"6,4\"/>\n";
  for (const auto& s : series) {
    svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
    if (s.dashed) svg << " stroke-dasharray=\"5,4\"";
    svg << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      svg << format_sig(px(s.x[i]), 8) << "," << format_sig(py(s.y[i]), 8) << " ";
    }
    svg << "\"/>\n";
  }
  svg << "</svg>\n";
  write_text_file(path, svg.str());
}

}  // namespace moveconv
