#include "sci/fcidump.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace sci {
namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

bool is_header_end(const std::string& token) {
  return token == "&END" || token == "/" || token == "$END" || token == "$";
}

// Splits the namelist text into KEY -> list of raw values.
std::map<std::string, std::vector<std::string>> parse_namelist(const std::string& text,
                                                               std::size_t line) {
  std::string norm;
  for (char ch : text) {
    if (ch == ',') {
      norm += ' ';
    } else if (ch == '=') {
      norm += " = ";
    } else {
      norm += ch;
    }
  }
  std::istringstream ss(norm);
  std::vector<std::string> tokens;
  for (std::string t; ss >> t;) tokens.push_back(t);

  std::map<std::string, std::vector<std::string>> out;
  std::string key;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i + 1 < tokens.size() && tokens[i + 1] == "=") {
      key = tokens[i];
      out[key];
      ++i;
    } else if (tokens[i] == "=") {
      throw FcidumpError(line, "malformed header near '='");
    } else {
      if (key.empty()) throw FcidumpError(line, "malformed header token '" + tokens[i] + "'");
      out[key].push_back(tokens[i]);
    }
  }
  return out;
}

int header_int(const std::map<std::string, std::vector<std::string>>& kv, const std::string& key,
               std::optional<int> fallback, std::size_t line) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    if (fallback) return *fallback;
    throw FcidumpError(line, "header is missing " + key);
  }
  if (it->second.size() != 1) throw FcidumpError(line, "header " + key + " needs one value");
  const std::string& v = it->second.front();
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw FcidumpError(line, "header " + key + " is not an integer: '" + v + "'");
  }
  return out;
}

double parse_value(std::string token, std::size_t line) {
  for (char& ch : token) {
    if (ch == 'D' || ch == 'd') ch = 'E';
  }
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size()) {
    throw FcidumpError(line, "non-numeric token '" + token + "'");
  }
  if (!std::isfinite(v)) throw FcidumpError(line, "non-finite integral value");
  return v;
}

int parse_index(const std::string& token, std::size_t line) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw FcidumpError(line, "non-numeric index '" + token + "'");
  }
  return out;
}

}  // namespace

Fcidump parse_fcidump(std::istream& in) {
  std::string header;
  std::size_t line_no = 0;
  bool started = false;
  bool ended = false;
  std::string line;
  while (!ended && std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    for (std::string tok; ss >> tok;) {
      const std::string up = upper(tok);
      if (!started) {
        if (up.rfind("&FCI", 0) != 0) throw FcidumpError(line_no, "expected '&FCI' header");
        started = true;
        header += ' ' + up.substr(4);
        continue;
      }
      if (is_header_end(up)) {
        ended = true;
        break;
      }
      // "&END" may be glued to the last value, e.g. "ISYM=1&END".
      if (auto pos = up.find("&END"); pos != std::string::npos) {
        header += ' ' + up.substr(0, pos);
        ended = true;
        break;
      }
      header += ' ' + up;
    }
  }
  if (!started) throw FcidumpError(line_no, "empty input, expected '&FCI' header");
  if (!ended) throw FcidumpError(line_no, "unterminated header");
  const std::size_t header_line = line_no;

  const auto kv = parse_namelist(header, header_line);
  const int norb = header_int(kv, "NORB", std::nullopt, header_line);
  const int nelec = header_int(kv, "NELEC", std::nullopt, header_line);
  const int ms2 = header_int(kv, "MS2", 0, header_line);
  if (header_int(kv, "IUHF", 0, header_line) != 0) {
    throw FcidumpError(header_line, "unrestricted (IUHF) integrals are not supported");
  }
  if (norb <= 0) throw FcidumpError(header_line, "NORB must be positive");

  Fcidump out;
  out.space.m = 2 * norb;
  out.space.n_elec = nelec;
  out.space.ms2 = ms2;
  try {
    out.space.validate();
  } catch (const std::invalid_argument& e) {
    throw FcidumpError(header_line, e.what());
  }
  out.integrals = IntegralStore(norb);
  IntegralStore& ints = out.integrals;

  std::vector<char> seen_h(ints.one_body_size(), 0);
  std::vector<char> seen_eri(ints.two_body_size(), 0);
  bool seen_core = false;

  auto check_duplicate = [&](bool seen, double old_v, double v) {
    if (seen && old_v != v) throw FcidumpError(line_no, "conflicting duplicate entry");
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() != 5) throw FcidumpError(line_no, "expected 'value i j k l'");
    const double v = parse_value(tok[0], line_no);
    int idx[4];
    for (int k = 0; k < 4; ++k) {
      idx[k] = parse_index(tok[static_cast<std::size_t>(k) + 1], line_no);
      if (idx[k] < 0 || idx[k] > norb) throw FcidumpError(line_no, "index out of range");
    }
    const int i = idx[0], j = idx[1], k = idx[2], l = idx[3];
    if (i && j && k && l) {
      const std::size_t q = IntegralStore::quad_index(i - 1, j - 1, k - 1, l - 1);
      check_duplicate(seen_eri[q], ints.eri(i - 1, j - 1, k - 1, l - 1), v);
      seen_eri[q] = 1;
      ints.set_eri(i - 1, j - 1, k - 1, l - 1, v);
    } else if (i && j && !k && !l) {
      const std::size_t q = IntegralStore::pair_index(i - 1, j - 1);
      check_duplicate(seen_h[q], ints.h(i - 1, j - 1), v);
      seen_h[q] = 1;
      ints.set_h(i - 1, j - 1, v);
    } else if (!i && !j && !k && !l) {
      check_duplicate(seen_core, ints.e_core(), v);
      seen_core = true;
      ints.set_e_core(v);
    } else if (i && !j && !k && !l) {
      // orbital energy; not needed
    } else {
      throw FcidumpError(line_no, "unsupported index pattern");
    }
  }
  return out;
}

Fcidump read_fcidump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open FCIDUMP '" + path + "'");
  return parse_fcidump(in);
}

void write_fcidump(std::ostream& out, const IntegralStore& ints, const OrbitalSpace& space) {
  const int n = ints.n_spatial();
  out << "&FCI NORB=" << n << ",NELEC=" << space.n_elec << ",MS2=" << space.ms2 << ",\n";
  out << " ORBSYM=";
  for (int p = 0; p < n; ++p) out << "1,";
  out << "\n ISYM=1,\n&END\n";
  char buf[64];
  auto emit = [&](double v, int i, int j, int k, int l) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << ' ' << i << ' ' << j << ' ' << k << ' ' << l << '\n';
  };
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q <= p; ++q) {
      for (int r = 0; r < n; ++r) {
        for (int s = 0; s <= r; ++s) {
          if (IntegralStore::pair_index(r, s) > IntegralStore::pair_index(p, q)) continue;
          const double v = ints.eri(p, q, r, s);
          if (v != 0.0) emit(v, p + 1, q + 1, r + 1, s + 1);
        }
      }
    }
  }
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q <= p; ++q) {
      const double v = ints.h(p, q);
      if (v != 0.0) emit(v, p + 1, q + 1, 0, 0);
    }
  }
  emit(ints.e_core(), 0, 0, 0, 0);
}

}  // namespace sci
