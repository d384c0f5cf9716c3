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

#include "molmp/elements.hpp"

#include <array>
#include <string>

#include "molmp/error.hpp"

namespace molmp::elements {
namespace {

constexpr std::array<std::string_view, kMaxAtomicNumber + 1> kSymbols = {
    "",   "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na",
    "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",
    "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br",
    "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag",
    "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu",
    "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi",
    "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am",
    "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh",
    "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

// Columns: Z, symbol, Pauling electronegativity, static dipole
// polarizability (Bohr^3), van der Waals radius (pm), single-bond covalent
// radius (Angstrom), standard atomic weight (u).
//
// Sources per column:
//   electronegativity  Pauling scale (CRC Handbook / Allred 1961 revision)
//   polarizability     Schwerdtfeger & Nagle 2018 reference table
//   vdW radius         Bondi 1964; elements Bondi did not tabulate use the
//                      Mantina et al. 2009 main-group extension (tag M) or
//                      Alvarez 2013 (tag A)
//   covalent radius    Cordero et al. 2008 (sp3 C; low-spin Mn/Fe/Co)
//   atomic mass        IUPAC 2013 conventional values
// Noble gases without a Pauling electronegativity (He, Ne, Ar) are omitted.
constexpr std::array kTable = {
    ElementRecord{1, "H", 2.20, 4.50711, 120, 0.31, 1.008},     // Bondi
    ElementRecord{3, "Li", 0.98, 164.1125, 182, 1.28, 6.94},    // Bondi
    ElementRecord{4, "Be", 1.57, 37.74, 153, 0.96, 9.0122},     // M
    ElementRecord{5, "B", 2.04, 20.5, 192, 0.84, 10.81},        // M
    ElementRecord{6, "C", 2.55, 11.3, 170, 0.76, 12.011},       // Bondi
    ElementRecord{7, "N", 3.04, 7.4, 155, 0.71, 14.007},        // Bondi
    ElementRecord{8, "O", 3.44, 5.3, 152, 0.66, 15.999},        // Bondi
    ElementRecord{9, "F", 3.98, 3.74, 147, 0.57, 18.998},       // Bondi
    ElementRecord{11, "Na", 0.93, 162.7, 227, 1.66, 22.990},    // Bondi
    ElementRecord{12, "Mg", 1.31, 71.2, 173, 1.41, 24.305},     // Bondi
    ElementRecord{13, "Al", 1.61, 57.8, 184, 1.21, 26.982},     // M
    ElementRecord{14, "Si", 1.90, 37.3, 210, 1.11, 28.085},     // Bondi
    ElementRecord{15, "P", 2.19, 25.0, 180, 1.07, 30.974},      // Bondi
    ElementRecord{16, "S", 2.58, 19.4, 180, 1.05, 32.06},       // Bondi
    ElementRecord{17, "Cl", 3.16, 14.6, 175, 1.02, 35.45},      // Bondi
    ElementRecord{19, "K", 0.82, 289.7, 275, 2.03, 39.098},     // Bondi
    ElementRecord{20, "Ca", 1.00, 160.8, 231, 1.76, 40.078},    // M
    ElementRecord{21, "Sc", 1.36, 97.0, 258, 1.70, 44.956},     // A
    ElementRecord{22, "Ti", 1.54, 100.0, 246, 1.60, 47.867},    // A
    ElementRecord{23, "V", 1.63, 87.0, 242, 1.53, 50.942},      // A
    ElementRecord{24, "Cr", 1.66, 83.0, 245, 1.39, 51.996},     // A
    ElementRecord{25, "Mn", 1.55, 68.0, 245, 1.39, 54.938},     // A
    ElementRecord{26, "Fe", 1.83, 62.0, 244, 1.32, 55.845},     // A
    ElementRecord{27, "Co", 1.88, 55.0, 240, 1.26, 58.933},     // A
    ElementRecord{28, "Ni", 1.91, 49.0, 163, 1.24, 58.693},     // Bondi
    ElementRecord{29, "Cu", 1.90, 46.5, 140, 1.32, 63.546},     // Bondi
    ElementRecord{30, "Zn", 1.65, 38.67, 139, 1.22, 65.38},     // Bondi
    ElementRecord{31, "Ga", 1.81, 50.0, 187, 1.22, 69.723},     // Bondi
    ElementRecord{32, "Ge", 2.01, 40.0, 211, 1.20, 72.630},     // M
    ElementRecord{33, "As", 2.18, 30.0, 185, 1.19, 74.922},     // Bondi
    ElementRecord{34, "Se", 2.55, 28.9, 190, 1.20, 78.971},     // Bondi
    ElementRecord{35, "Br", 2.96, 21.0, 185, 1.20, 79.904},     // Bondi
    ElementRecord{36, "Kr", 3.00, 16.78, 202, 1.16, 83.798},    // Bondi
    ElementRecord{37, "Rb", 0.82, 319.8, 303, 2.20, 85.468},    // M
    ElementRecord{38, "Sr", 0.95, 197.2, 249, 1.95, 87.62},     // M
    ElementRecord{39, "Y", 1.22, 162.0, 275, 1.90, 88.906},     // A
    ElementRecord{40, "Zr", 1.33, 112.0, 252, 1.75, 91.224},    // A
    ElementRecord{41, "Nb", 1.60, 98.0, 256, 1.64, 92.906},     // A
    ElementRecord{42, "Mo", 2.16, 87.0, 245, 1.54, 95.95},      // A
    ElementRecord{43, "Tc", 1.90, 79.0, 244, 1.47, 98.0},       // A
    ElementRecord{44, "Ru", 2.20, 72.0, 246, 1.46, 101.07},     // A
    ElementRecord{45, "Rh", 2.28, 66.0, 244, 1.42, 102.91},     // A
    ElementRecord{46, "Pd", 2.20, 26.14, 163, 1.39, 106.42},    // Bondi
    ElementRecord{47, "Ag", 1.93, 55.0, 172, 1.45, 107.87},     // Bondi
    ElementRecord{48, "Cd", 1.69, 46.0, 158, 1.44, 112.41},     // Bondi
    ElementRecord{49, "In", 1.78, 65.0, 193, 1.42, 114.82},     // Bondi
    ElementRecord{50, "Sn", 1.96, 53.0, 217, 1.39, 118.71},     // Bondi
    ElementRecord{51, "Sb", 2.05, 43.0, 206, 1.39, 121.76},     // M
    ElementRecord{52, "Te", 2.10, 38.0, 206, 1.38, 127.60},     // Bondi
    ElementRecord{53, "I", 2.66, 32.9, 198, 1.39, 126.90},      // Bondi
    ElementRecord{54, "Xe", 2.60, 27.32, 216, 1.40, 131.29},    // Bondi
    ElementRecord{55, "Cs", 0.79, 400.9, 343, 2.44, 132.91},    // M
    ElementRecord{56, "Ba", 0.89, 272.0, 268, 2.15, 137.33},    // M
    ElementRecord{78, "Pt", 2.28, 48.0, 172, 1.36, 195.08},     // Bondi
    ElementRecord{79, "Au", 2.54, 36.0, 166, 1.36, 196.97},     // Bondi
    ElementRecord{80, "Hg", 2.00, 33.91, 155, 1.32, 200.59},    // Bondi
    ElementRecord{81, "Tl", 1.62, 50.0, 196, 1.45, 204.38},     // Bondi
    ElementRecord{82, "Pb", 2.33, 47.0, 202, 1.46, 207.2},      // Bondi
    ElementRecord{83, "Bi", 2.02, 48.0, 207, 1.48, 208.98},     // M
    ElementRecord{87, "Fr", 0.70, 317.8, 348, 2.60, 223.0},     // M
};

constexpr std::array<const ElementRecord*, kMaxAtomicNumber + 1> build_index() {
  std::array<const ElementRecord*, kMaxAtomicNumber + 1> index{};
  for (const auto& rec : kTable) index[rec.z] = &rec;
  return index;
}

constexpr auto kIndex = build_index();

}  // namespace

const ElementRecord* find(int z) noexcept {
  if (z < 1 || z > kMaxAtomicNumber) return nullptr;
  return kIndex[z];
}

const ElementRecord& lookup(int z) {
  const auto* rec = find(z);
  if (rec == nullptr) {
    throw InputError("no tabulated properties for atomic number " + std::to_string(z));
  }
  return *rec;
}

std::string_view symbol(int z) noexcept {
  if (z < 1 || z > kMaxAtomicNumber) return {};
  return kSymbols[z];
}

std::optional<int> atomic_number(std::string_view sym) noexcept {
  for (int z = 1; z <= kMaxAtomicNumber; ++z) {
    if (kSymbols[z] == sym) return z;
  }
  return std::nullopt;
}

}  // namespace molmp::elements
