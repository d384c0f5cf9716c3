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

#include <algorithm>
#include <cctype>
#include <map>
#include <random>
#include <string>

#include "chem_internal.hpp"
#include "molmp/chemio.hpp"
#include "molmp/elements.hpp"
#include "molmp/error.hpp"

namespace molmp {
namespace {

constexpr int kRingSlotPending = -2;

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : text_(text) {}

  Molecule parse() {
    if (text_.empty()) throw ParseError("empty SMILES", 0);
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '[' || std::isalpha(static_cast<unsigned char>(c))) {
        atom_token();
      } else if (c == '-' || c == '=' || c == '#' || c == '$' || c == ':' || c == '/' ||
                 c == '\\') {
        bond_token();
      } else if (c == '(') {
        if (prev_ < 0) throw ParseError("branch without preceding atom", pos_);
        if (pending_.set) throw ParseError("bond before branch opening", pending_.offset);
        branches_.push_back({prev_, pos_});
        ++pos_;
      } else if (c == ')') {
        if (branches_.empty()) throw ParseError("unbalanced ')'", pos_);
        if (pending_.set) throw ParseError("dangling bond before ')'", pending_.offset);
        if (prev_ == branches_.back().atom) throw ParseError("empty branch", pos_);
        prev_ = branches_.back().atom;
        branches_.pop_back();
        ++pos_;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        ring_token();
      } else if (c == '.') {
        if (pending_.set) throw ParseError("bond before '.'", pending_.offset);
        if (prev_ < 0) throw ParseError("'.' without preceding atom", pos_);
        prev_ = -1;
        ++pos_;
      } else {
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
      }
    }
    if (!branches_.empty()) throw ParseError("unbalanced '('", branches_.back().offset);
    if (!rings_.empty()) {
      throw ParseError("unclosed ring bond " + std::to_string(rings_.begin()->first),
                       rings_.begin()->second.offset);
    }
    if (pending_.set) throw ParseError("dangling bond at end of SMILES", pending_.offset);
    if (prev_ < 0) throw ParseError("SMILES ends with '.'", text_.size());
    finish();
    return std::move(mol_);
  }

 private:
  struct PendingBond {
    bool set = false;
    BondOrder order = BondOrder::Single;
    BondDirection direction = BondDirection::None;
    std::size_t offset = 0;
  };
  struct RingOpen {
    int atom;
    PendingBond bond;
    std::size_t offset;
    std::size_t slot;
  };
  struct Branch {
    int atom;
    std::size_t offset;
  };

  void atom_token() {
    const std::size_t start = pos_;
    Atom atom;
    bool bracket = false;
    if (text_[pos_] == '[') {
      bracket = true;
      bracket_atom(atom);
    } else {
      organic_atom(atom);
    }
    const int idx = mol_.atom_count();
    mol_.atoms.push_back(atom);
    bracket_.push_back(bracket);
    offsets_.push_back(start);
    order_.emplace_back();
    if (prev_ >= 0) {
      order_[idx].push_back(prev_);
      if (bracket && atom.implicit_h > 0) order_[idx].push_back(-1);
      add_bond(prev_, idx, pending_, start);
      order_[prev_].push_back(idx);
    } else {
      if (pending_.set) throw ParseError("bond without preceding atom", pending_.offset);
      if (bracket && atom.implicit_h > 0) order_[idx].push_back(-1);
    }
    pending_ = {};
    prev_ = idx;
  }

  void organic_atom(Atom& atom) {
    const char c = text_[pos_];
    const char next = pos_ + 1 < text_.size() ? text_[pos_ + 1] : '\0';
    int z = 0;
    bool aromatic = false;
    std::size_t len = 1;
    switch (c) {
      case 'B': z = next == 'r' ? 35 : 5; len = next == 'r' ? 2 : 1; break;
      case 'C': z = next == 'l' ? 17 : 6; len = next == 'l' ? 2 : 1; break;
      case 'N': z = 7; break;
      case 'O': z = 8; break;
      case 'P': z = 15; break;
      case 'S': z = 16; break;
      case 'F': z = 9; break;
      case 'I': z = 53; break;
      case 'b': z = 5; aromatic = true; break;
      case 'c': z = 6; aromatic = true; break;
      case 'n': z = 7; aromatic = true; break;
      case 'o': z = 8; aromatic = true; break;
      case 'p': z = 15; aromatic = true; break;
      case 's': z = 16; aromatic = true; break;
      default:
        throw ParseError(std::string("unknown element symbol '") + c + "'", pos_);
    }
    atom.element = z;
    atom.aromatic = aromatic;
    pos_ += len;
  }

  void bracket_atom(Atom& atom) {
    const std::size_t open = pos_++;
    auto at_end = [&] { return pos_ >= text_.size(); };
    auto fail_unterminated = [&] { throw ParseError("unterminated bracket atom", open); };

    int isotope = 0;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      isotope = isotope * 10 + (text_[pos_++] - '0');
      if (isotope > 999) throw ParseError("isotope out of range", pos_);
    }
    if (at_end()) fail_unterminated();
    atom.isotope = isotope;

    const std::size_t sym_start = pos_;
    const char c = text_[pos_];
    if (std::islower(static_cast<unsigned char>(c))) {
      static constexpr std::pair<std::string_view, int> kAromatic[] = {
          {"se", 34}, {"as", 33}, {"te", 52}, {"b", 5}, {"c", 6}, {"n", 7},
          {"o", 8},   {"p", 15},  {"s", 16}};
      bool found = false;
      for (auto [sym, z] : kAromatic) {
        if (text_.substr(pos_, sym.size()) == sym) {
          atom.element = z;
          atom.aromatic = true;
          pos_ += sym.size();
          found = true;
          break;
        }
      }
      if (!found) throw ParseError("unknown aromatic symbol", sym_start);
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      std::optional<int> z;
      if (pos_ + 1 < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_ + 1]))) {
        z = elements::atomic_number(text_.substr(pos_, 2));
        if (z) pos_ += 2;
      }
      if (!z) {
        z = elements::atomic_number(text_.substr(pos_, 1));
        if (!z) throw ParseError("unknown element symbol", sym_start);
        pos_ += 1;
      }
      atom.element = *z;
    } else {
      throw ParseError("unknown element symbol", sym_start);
    }
    if (at_end()) fail_unterminated();

    if (text_[pos_] == '@') {
      ++pos_;
      atom.chirality = Chirality::Anticlockwise;
      if (!at_end() && text_[pos_] == '@') {
        atom.chirality = Chirality::Clockwise;
        ++pos_;
      } else if (text_.substr(pos_, 3) == "TH1") {
        pos_ += 3;
      } else if (text_.substr(pos_, 3) == "TH2") {
        atom.chirality = Chirality::Clockwise;
        pos_ += 3;
      } else if (!at_end() && std::isupper(static_cast<unsigned char>(text_[pos_]))) {
        if (text_[pos_] != 'H') throw ParseError("unsupported chirality class", pos_);
      }
    }
    if (at_end()) fail_unterminated();

    if (text_[pos_] == 'H') {
      ++pos_;
      int h = 1;
      if (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) h = text_[pos_++] - '0';
      atom.implicit_h = h;
    }
    if (at_end()) fail_unterminated();

    if (text_[pos_] == '+' || text_[pos_] == '-') {
      const char sign = text_[pos_];
      const int unit = sign == '+' ? 1 : -1;
      ++pos_;
      int charge = unit;
      if (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        int mag = 0;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          mag = mag * 10 + (text_[pos_++] - '0');
        }
        if (mag > 15) throw ParseError("charge out of range", pos_);
        charge = unit * mag;
      } else {
        while (!at_end() && text_[pos_] == sign) {
          charge += unit;
          ++pos_;
        }
      }
      atom.formal_charge = charge;
    }
    if (at_end()) fail_unterminated();

    if (text_[pos_] == ':') {
      ++pos_;
      if (at_end() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        throw ParseError("atom class must be numeric", pos_);
      }
      while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (at_end()) fail_unterminated();
    if (text_[pos_] != ']') throw ParseError("unexpected character in bracket atom", pos_);
    ++pos_;
  }

  void bond_token() {
    if (pending_.set) throw ParseError("two consecutive bond symbols", pos_);
    PendingBond b;
    b.set = true;
    b.offset = pos_;
    switch (text_[pos_]) {
      case '-': b.order = BondOrder::Single; break;
      case '=': b.order = BondOrder::Double; break;
      case '#': b.order = BondOrder::Triple; break;
      case ':': b.order = BondOrder::Aromatic; break;
      case '/': b.direction = BondDirection::Up; break;
      case '\\': b.direction = BondDirection::Down; break;
      case '$': throw ParseError("quadruple bonds are not supported", pos_);
    }
    if (prev_ < 0) throw ParseError("bond without preceding atom", pos_);
    pending_ = b;
    ++pos_;
  }

  void ring_token() {
    const std::size_t start = pos_;
    if (prev_ < 0) throw ParseError("ring bond without preceding atom", pos_);
    int number = 0;
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
        throw ParseError("'%' must be followed by two digits", pos_);
      }
      number = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      number = text_[pos_++] - '0';
    }
    auto it = rings_.find(number);
    if (it == rings_.end()) {
      order_[prev_].push_back(kRingSlotPending);
      rings_.emplace(number, RingOpen{prev_, pending_, start, order_[prev_].size() - 1});
    } else {
      RingOpen open = it->second;
      rings_.erase(it);
      PendingBond bond = open.bond;
      if (pending_.set) {
        if (bond.set && bond.order != pending_.order) {
          throw ParseError("conflicting ring-closure bond orders", start);
        }
        if (!bond.set || bond.direction == BondDirection::None) bond = pending_;
      }
      if (open.atom == prev_) throw ParseError("ring bond to itself", start);
      add_bond(open.atom, prev_, bond, start);
      order_[open.atom][open.slot] = prev_;
      order_[prev_].push_back(open.atom);
    }
    pending_ = {};
  }

  void add_bond(int a, int b, const PendingBond& pb, std::size_t offset) {
    if (mol_.find_bond(a, b) >= 0) throw ParseError("duplicate bond", offset);
    Bond bond;
    bond.a = a;
    bond.b = b;
    bond.direction = pb.direction;
    if (pb.set && pb.direction == BondDirection::None) {
      bond.order = pb.order;
    } else {
      // Unmarked bonds between aromatic atoms are aromatic if they close a
      // ring; resolve_ring_bonds demotes the rest.
      const bool both_aromatic = mol_.atoms[a].aromatic && mol_.atoms[b].aromatic;
      bond.order = both_aromatic && !pb.set ? BondOrder::Aromatic : BondOrder::Single;
    }
    mol_.bonds.push_back(bond);
  }

  void finish() {
    mol_.source_smiles = std::string(text_);
    detail::resolve_ring_bonds(mol_);
    const Adjacency adj(mol_);
    for (int i = 0; i < mol_.atom_count(); ++i) {
      auto& atom = mol_.atoms[i];
      if (atom.aromatic) {
        bool in_ring = false;
        for (auto [v, bond] : adj[i]) in_ring |= mol_.bonds[bond].smallest_ring_size > 0;
        if (!in_ring) throw ParseError("aromatic atom outside a ring", offsets_[i]);
      }
      if (!bracket_[i]) {
        const auto h = detail::unbracketed_h(mol_, adj, i);
        if (!h) throw ParseError("valence overflow", offsets_[i]);
        atom.implicit_h = *h;
      }
      if (atom.chirality != Chirality::None) atom.stereo_neighbors = order_[i];
    }
    perceive(mol_);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Molecule mol_;
  int prev_ = -1;
  PendingBond pending_;
  std::vector<Branch> branches_;
  std::map<int, RingOpen> rings_;
  std::vector<bool> bracket_;
  std::vector<std::size_t> offsets_;
  std::vector<std::vector<int>> order_;
};

// ---------------------------------------------------------------------------
// Writer

bool organic_subset(int z, bool aromatic) {
  switch (z) {
    case 5: case 6: case 7: case 8: case 15: case 16: return true;
    case 9: case 17: case 35: case 53: return !aromatic;
    default: return false;
  }
}

bool aromatic_symbol_allowed(int z) {
  switch (z) {
    case 5: case 6: case 7: case 8: case 15: case 16: case 33: case 34: case 52: return true;
    default: return false;
  }
}

// Parity of the permutation taking `from` to `to` (same elements); -1 when
// they are not permutations of each other.
int permutation_parity(std::vector<int> from, const std::vector<int>& to) {
  if (from.size() != to.size()) return -1;
  int swaps = 0;
  for (std::size_t i = 0; i < to.size(); ++i) {
    auto it = std::find(from.begin() + static_cast<long>(i), from.end(), to[i]);
    if (it == from.end()) return -1;
    if (it != from.begin() + static_cast<long>(i)) {
      std::iter_swap(from.begin() + static_cast<long>(i), it);
      ++swaps;
    }
  }
  return swaps % 2;
}

class SmilesWriter {
 public:
  SmilesWriter(const Molecule& m, std::mt19937_64* rng) : m_(m), adj_(m), rng_(rng) {}

  std::string write() {
    const int n = m_.atom_count();
    visited_.assign(n, false);
    bond_used_.assign(m_.bonds.size(), false);
    children_.assign(n, {});
    ring_open_.assign(n, {});
    ring_close_.assign(n, {});
    parent_.assign(n, -1);
    std::vector<int> component(n, -1);
    std::vector<std::vector<int>> members;
    for (int s = 0; s < n; ++s) {
      if (component[s] >= 0) continue;
      members.emplace_back();
      std::vector<int> stack{s};
      component[s] = static_cast<int>(members.size()) - 1;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        members.back().push_back(u);
        for (auto [v, b] : adj_[u]) {
          if (component[v] < 0) {
            component[v] = component[s];
            stack.push_back(v);
          }
        }
      }
    }
    std::string out;
    for (auto& comp : members) {
      std::sort(comp.begin(), comp.end());
      int start = comp.front();
      if (rng_ != nullptr) {
        std::uniform_int_distribution<std::size_t> pick(0, comp.size() - 1);
        start = comp[pick(*rng_)];
      }
      plan(start, -1);
      if (!out.empty()) out += '.';
      emit(start, out);
    }
    return out;
  }

 private:
  void plan(int u, int parent_bond) {
    visited_[u] = true;
    auto nbrs = adj_[u];
    if (rng_ != nullptr) std::shuffle(nbrs.begin(), nbrs.end(), *rng_);
    for (auto [v, bond] : nbrs) {
      if (bond == parent_bond || bond_used_[bond]) continue;
      bond_used_[bond] = true;
      if (visited_[v]) {
        ring_open_[v].push_back(bond);
        ring_close_[u].push_back(bond);
      } else {
        children_[u].push_back(v);
        parent_[v] = u;
        plan(v, bond);
      }
    }
  }

  int other(int bond, int atom) const {
    return m_.bonds[bond].a == atom ? m_.bonds[bond].b : m_.bonds[bond].a;
  }

  std::string bond_symbol(int bond) const {
    const auto& b = m_.bonds[bond];
    const bool both_aromatic = m_.atoms[b.a].aromatic && m_.atoms[b.b].aromatic;
    switch (b.order) {
      case BondOrder::Single: return both_aromatic ? "-" : "";
      case BondOrder::Double: return "=";
      case BondOrder::Triple: return "#";
      case BondOrder::Aromatic: return both_aromatic ? "" : ":";
    }
    return "";
  }

  std::string atom_symbol(int u, const std::vector<int>& out_order) const {
    const auto& a = m_.atoms[u];
    Chirality chir = a.chirality;
    if (chir != Chirality::None) {
      const int parity = permutation_parity(a.stereo_neighbors, out_order);
      if (parity < 0) {
        chir = Chirality::None;
      } else if (parity == 1) {
        chir = chir == Chirality::Clockwise ? Chirality::Anticlockwise : Chirality::Clockwise;
      }
    }
    std::string sym(elements::symbol(a.element));
    const bool lower = a.aromatic && aromatic_symbol_allowed(a.element);
    if (lower) sym[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(sym[0])));

    const auto default_h = detail::unbracketed_h(m_, adj_, u);
    const bool bare = organic_subset(a.element, a.aromatic) && a.formal_charge == 0 &&
                      a.isotope == 0 && chir == Chirality::None && default_h &&
                      *default_h == a.implicit_h;
    if (bare) return sym;
    std::string s = "[";
    if (a.isotope > 0) s += std::to_string(a.isotope);
    s += sym;
    if (chir == Chirality::Anticlockwise) s += "@";
    if (chir == Chirality::Clockwise) s += "@@";
    if (a.implicit_h > 0) {
      s += "H";
      if (a.implicit_h > 1) s += std::to_string(a.implicit_h);
    }
    if (a.formal_charge != 0) {
      s += a.formal_charge > 0 ? "+" : "-";
      if (std::abs(a.formal_charge) > 1) s += std::to_string(std::abs(a.formal_charge));
    }
    s += "]";
    return s;
  }

  std::string ring_label(int digit) const {
    return digit < 10 ? std::string(1, static_cast<char>('0' + digit))
                      : "%" + std::to_string(digit);
  }

  void emit(int u, std::string& out) {
    std::vector<int> order;
    if (parent_[u] >= 0) order.push_back(parent_[u]);
    if (m_.atoms[u].implicit_h > 0) order.push_back(-1);
    for (int b : ring_close_[u]) order.push_back(other(b, u));
    for (int b : ring_open_[u]) order.push_back(other(b, u));
    for (int v : children_[u]) order.push_back(v);
    out += atom_symbol(u, order);

    for (int b : ring_close_[u]) {
      const int digit = digit_of_.at(b);
      out += ring_label(digit);
      digit_of_.erase(b);
      free_digit(digit);
    }
    for (int b : ring_open_[u]) {
      const int digit = take_digit();
      digit_of_[b] = digit;
      out += bond_symbol(b) + ring_label(digit);
    }
    const auto& kids = children_[u];
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const int bond = m_.find_bond(u, kids[i]);
      const bool branch = i + 1 < kids.size();
      if (branch) out += '(';
      out += bond_symbol(bond);
      emit(kids[i], out);
      if (branch) out += ')';
    }
  }

  int take_digit() {
    for (int d = 1; d < 100; ++d) {
      if (std::find(used_digits_.begin(), used_digits_.end(), d) == used_digits_.end()) {
        used_digits_.push_back(d);
        return d;
      }
    }
    throw InvariantError("more than 99 open ring bonds");
  }
  void free_digit(int d) { std::erase(used_digits_, d); }

  const Molecule& m_;
  Adjacency adj_;
  std::mt19937_64* rng_;
  std::vector<bool> visited_;
  std::vector<bool> bond_used_;
  std::vector<std::vector<int>> children_;
  std::vector<std::vector<int>> ring_open_;
  std::vector<std::vector<int>> ring_close_;
  std::vector<int> parent_;
  std::map<int, int> digit_of_;
  std::vector<int> used_digits_;
};

}  // namespace

Molecule parse_smiles(std::string_view text) { return SmilesParser(text).parse(); }

std::string to_smiles(const Molecule& m) { return SmilesWriter(m, nullptr).write(); }

std::string randomized_smiles(const Molecule& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return SmilesWriter(m, &rng).write();
}

}  // namespace molmp
