// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

// MDL V2000 reader. Atom lines are tokenized on whitespace, bond lines and
// the counts line use the fixed 3-column fields of the format.

#include <charconv>
#include <cmath>
#include <sstream>

#include "chem_internal.hpp"
#include "molmp/chemio.hpp"
#include "molmp/elements.hpp"
#include "molmp/error.hpp"

namespace molmp {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<int> to_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

class SdfReader {
 public:
  explicit SdfReader(std::string_view bytes) {
    std::size_t start = 0;
    while (start < bytes.size()) {
      auto end = bytes.find('\n', start);
      if (end == std::string_view::npos) end = bytes.size();
      lines_.push_back(bytes.substr(start, end - start));
      start = end + 1;
    }
  }

  std::vector<Molecule> read_all() {
    std::vector<Molecule> out;
    while (true) {
      bool rest_blank = true;
      for (std::size_t i = line_; i < lines_.size() && rest_blank; ++i) {
        rest_blank = trim(lines_[i]).empty();
      }
      if (rest_blank) break;
      out.push_back(read_record());
    }
    return out;
  }

 private:
  std::string_view next_line(const char* what) {
    if (line_ >= lines_.size()) {
      throw ParseError(std::string("truncated record: missing ") + what, line_ + 1, true);
    }
    return lines_[line_++];
  }

  Molecule read_record() {
    Molecule m;
    m.name = std::string(trim(next_line("header")));
    next_line("header");
    next_line("header");
    const std::size_t counts_no = line_ + 1;
    const auto counts = next_line("counts line");
    if (counts.find("V3000") != std::string_view::npos) {
      throw ParseError("V3000 records are not supported", counts_no, true);
    }
    const auto n_atoms = counts.size() >= 3 ? to_int(counts.substr(0, 3)) : std::nullopt;
    const auto n_bonds = counts.size() >= 6 ? to_int(counts.substr(3, 3)) : std::nullopt;
    if (!n_atoms || !n_bonds || *n_atoms < 0 || *n_bonds < 0) {
      throw ParseError("malformed counts line", counts_no, true);
    }

    std::vector<int> block_charge;
    for (int i = 0; i < *n_atoms; ++i) {
      const std::size_t no = line_ + 1;
      const auto tok = tokens(next_line("atom block"));
      if (tok.size() < 4) throw ParseError("atom line has too few fields", no, true);
      const auto x = to_double(tok[0]);
      const auto y = to_double(tok[1]);
      const auto z = to_double(tok[2]);
      if (!x || !y || !z) throw ParseError("coordinate parse failure", no, true);
      Atom atom;
      const auto sym = std::string(tok[3]);
      const auto el = elements::atomic_number(sym == "D" || sym == "T" ? "H" : sym);
      if (!el) throw ParseError("unknown element symbol '" + sym + "'", no, true);
      atom.element = *el;
      atom.position = Vec3{*x, *y, *z};
      int charge = 0;
      if (tok.size() >= 6) {
        const auto code = to_int(tok[5]);
        if (!code) throw ParseError("bad charge field", no, true);
        switch (*code) {
          case 1: charge = 3; break;
          case 2: charge = 2; break;
          case 3: charge = 1; break;
          case 5: charge = -1; break;
          case 6: charge = -2; break;
          case 7: charge = -3; break;
          default: charge = 0; break;
        }
      }
      atom.formal_charge = charge;
      m.atoms.push_back(atom);
    }

    for (int i = 0; i < *n_bonds; ++i) {
      const std::size_t no = line_ + 1;
      const auto line = next_line("bond block");
      std::optional<int> a;
      std::optional<int> b;
      std::optional<int> type;
      if (line.size() >= 9) {
        a = to_int(line.substr(0, 3));
        b = to_int(line.substr(3, 3));
        type = to_int(line.substr(6, 3));
      }
      if (!a || !b || !type) {
        const auto tok = tokens(line);
        if (tok.size() >= 3) {
          a = to_int(tok[0]);
          b = to_int(tok[1]);
          type = to_int(tok[2]);
        }
      }
      if (!a || !b || !type) throw ParseError("malformed bond line", no, true);
      if (*a < 1 || *b < 1 || *a > *n_atoms || *b > *n_atoms || *a == *b) {
        throw ParseError("bond atom index out of range", no, true);
      }
      if (m.find_bond(*a - 1, *b - 1) >= 0) throw ParseError("duplicate bond", no, true);
      Bond bond;
      bond.a = *a - 1;
      bond.b = *b - 1;
      switch (*type) {
        case 1: bond.order = BondOrder::Single; break;
        case 2: bond.order = BondOrder::Double; break;
        case 3: bond.order = BondOrder::Triple; break;
        case 4:
          bond.order = BondOrder::Aromatic;
          m.atoms[bond.a].aromatic = true;
          m.atoms[bond.b].aromatic = true;
          break;
        default: throw ParseError("unsupported bond type", no, true);
      }
      m.bonds.push_back(bond);
    }

    bool charges_from_properties = false;
    bool ended = false;
    while (!ended) {
      const std::size_t no = line_ + 1;
      const auto line = next_line("'M  END'");
      if (line.rfind("M  END", 0) == 0) {
        ended = true;
      } else if (line.rfind("M  CHG", 0) == 0) {
        if (!charges_from_properties) {
          for (auto& atom : m.atoms) atom.formal_charge = 0;
          charges_from_properties = true;
        }
        const auto tok = tokens(line.substr(6));
        const auto count = tok.empty() ? std::nullopt : to_int(tok[0]);
        if (!count || static_cast<int>(tok.size()) < 1 + 2 * *count) {
          throw ParseError("malformed M  CHG line", no, true);
        }
        for (int k = 0; k < *count; ++k) {
          const auto idx = to_int(tok[1 + 2 * k]);
          const auto val = to_int(tok[2 + 2 * k]);
          if (!idx || !val || *idx < 1 || *idx > *n_atoms) {
            throw ParseError("malformed M  CHG entry", no, true);
          }
          m.atoms[*idx - 1].formal_charge = *val;
        }
      } else if (line.rfind("M  ISO", 0) == 0) {
        const auto tok = tokens(line.substr(6));
        const auto count = tok.empty() ? std::nullopt : to_int(tok[0]);
        if (!count || static_cast<int>(tok.size()) < 1 + 2 * *count) {
          throw ParseError("malformed M  ISO line", no, true);
        }
        for (int k = 0; k < *count; ++k) {
          const auto idx = to_int(tok[1 + 2 * k]);
          const auto val = to_int(tok[2 + 2 * k]);
          if (!idx || !val || *idx < 1 || *idx > *n_atoms) {
            throw ParseError("malformed M  ISO entry", no, true);
          }
          m.atoms[*idx - 1].isotope = *val;
        }
      } else if (line.rfind("$$$$", 0) == 0) {
        throw ParseError("record ended before 'M  END'", no, true);
      }
    }

    // Data items until the record separator.
    while (true) {
      if (line_ >= lines_.size()) break;  // final record may omit "$$$$"
      const auto line = lines_[line_++];
      if (line.rfind("$$$$", 0) == 0) break;
      if (!line.empty() && line.front() == '>') {
        const auto open = line.find('<');
        const auto close = line.find('>', open == std::string_view::npos ? 0 : open);
        std::string key;
        if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
          key = std::string(line.substr(open + 1, close - open - 1));
        }
        std::string value;
        while (line_ < lines_.size() && !trim(lines_[line_]).empty() &&
               lines_[line_].rfind("$$$$", 0) != 0) {
          if (!value.empty()) value += '\n';
          value += std::string(trim(lines_[line_++]));
        }
        m.properties.emplace_back(key, value);
      }
    }

    m.has_3d = true;
    detail::resolve_ring_bonds(m);
    const Adjacency adj(m);
    for (int i = 0; i < m.atom_count(); ++i) {
      m.atoms[i].implicit_h = detail::unbracketed_h(m, adj, i).value_or(0);
    }
    perceive(m);
    return m;
  }

  std::vector<std::string_view> lines_;
  std::size_t line_ = 0;
};

}  // namespace

std::vector<Molecule> parse_sdf(std::string_view bytes) { return SdfReader(bytes).read_all(); }

}  // namespace molmp
