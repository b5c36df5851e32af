// Copyright 2026 The jnrhlc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "jnrhlc/drnl.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace jnrhlc {

namespace {

constexpr const char* kLiteratureSource =
    "Lopez-Poveda & Meddis (2001) human DRNL fits as parameterised in Jepsen, Ewert & Dau (2008)";

constexpr const char* kHeader =
    "bf,lin_fc,lin_bw,lin_gain,lin_lp,lin_ngt,lin_nlp,nlin_fc,nlin_bw,nlin_lp,a,b,c,nlin_ngt_before,"
    "nlin_ngt_after,nlin_nlp";

double fit(double p0, double m, double f) { return std::pow(10.0, p0 + m * std::log10(f)); }

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw std::invalid_argument("DRNL table line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& s, int line) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw std::invalid_argument("DRNL table line " + std::to_string(line) + ": bad integer '" + s + "'");
  return v;
}

}  // namespace

DrnlParams DrnlParams::literature(std::span<const double> bfs) {
  DrnlParams p;
  p.source = kLiteratureSource;
  for (double bf : bfs) {
    DrnlChannel ch;
    ch.bf = bf;
    ch.lin_fc = fit(-0.06762, 1.01679, bf);
    ch.lin_bw = fit(0.03728, 0.75, bf);
    ch.lin_gain = fit(4.20405, -0.47909, bf);
    ch.lin_lp = fit(-0.06762, 1.01679, bf);
    ch.nlin_fc = fit(-0.05252, 1.01650, bf);
    ch.nlin_bw = fit(-0.03193, 0.77, bf);
    ch.nlin_lp = fit(-0.05252, 1.01650, bf);
    const double capped = std::min(bf, 1500.0);
    ch.a = fit(1.40298, 0.81916, capped);
    ch.b = fit(1.61912, -0.81867, capped);
    ch.c = 0.25;
    p.channels.push_back(ch);
  }
  p.validate();
  return p;
}

void DrnlParams::validate() const {
  if (channels.empty()) throw std::invalid_argument("DRNL parameters: no channels");
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const auto& ch = channels[i];
    const std::string where = "DRNL channel " + std::to_string(i) + ": ";
    for (double f : {ch.bf, ch.lin_fc, ch.lin_lp, ch.nlin_fc, ch.nlin_lp})
      if (!(f > 0.0 && f < 8000.0)) throw std::invalid_argument(where + "frequency outside (0, 8000) Hz");
    if (!(ch.lin_bw > 0.0) || !(ch.nlin_bw > 0.0)) throw std::invalid_argument(where + "bandwidth must be positive");
    if (!(ch.lin_gain > 0.0) || !(ch.a > 0.0) || !(ch.b > 0.0)) throw std::invalid_argument(where + "gains must be positive");
    if (!(ch.c > 0.0 && ch.c < 1.0)) throw std::invalid_argument(where + "compression exponent must lie in (0, 1)");
    if (ch.lin_ngt < 0 || ch.lin_nlp < 0 || ch.nlin_ngt_before < 0 || ch.nlin_ngt_after < 0 || ch.nlin_nlp < 0)
      throw std::invalid_argument(where + "negative cascade count");
  }
}

DrnlParams DrnlParams::parse_csv(const std::string& text) {
  DrnlParams p;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# source:";
      if (line.rfind(tag, 0) == 0) p.source = line.substr(line.find_first_not_of(' ', tag.size()));
      continue;
    }
    if (!header) {
      if (line != kHeader) throw std::invalid_argument("DRNL table: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 16) throw std::invalid_argument("DRNL table line " + std::to_string(lineno) + ": expected 16 fields");
    DrnlChannel ch;
    ch.bf = parse_double(f[0], lineno);
    ch.lin_fc = parse_double(f[1], lineno);
    ch.lin_bw = parse_double(f[2], lineno);
    ch.lin_gain = parse_double(f[3], lineno);
    ch.lin_lp = parse_double(f[4], lineno);
    ch.lin_ngt = parse_int(f[5], lineno);
    ch.lin_nlp = parse_int(f[6], lineno);
    ch.nlin_fc = parse_double(f[7], lineno);
    ch.nlin_bw = parse_double(f[8], lineno);
    ch.nlin_lp = parse_double(f[9], lineno);
    ch.a = parse_double(f[10], lineno);
    ch.b = parse_double(f[11], lineno);
    ch.c = parse_double(f[12], lineno);
    ch.nlin_ngt_before = parse_int(f[13], lineno);
    ch.nlin_ngt_after = parse_int(f[14], lineno);
    ch.nlin_nlp = parse_int(f[15], lineno);
    p.channels.push_back(ch);
  }
  if (!header) throw std::invalid_argument("DRNL table: missing header");
  p.validate();
  return p;
}

DrnlParams DrnlParams::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open DRNL table " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_csv(os.str());
}

std::string DrnlParams::to_csv() const {
  std::ostringstream os;
  os << "# source: " << source << "\n" << kHeader << "\n";
  for (const auto& ch : channels) {
    os << fmt(ch.bf) << ',' << fmt(ch.lin_fc) << ',' << fmt(ch.lin_bw) << ',' << fmt(ch.lin_gain) << ','
       << fmt(ch.lin_lp) << ',' << ch.lin_ngt << ',' << ch.lin_nlp << ',' << fmt(ch.nlin_fc) << ','
       << fmt(ch.nlin_bw) << ',' << fmt(ch.nlin_lp) << ',' << fmt(ch.a) << ',' << fmt(ch.b) << ',' << fmt(ch.c)
       << ',' << ch.nlin_ngt_before << ',' << ch.nlin_ngt_after << ',' << ch.nlin_nlp << "\n";
  }
  return os.str();
}

}  // namespace jnrhlc
