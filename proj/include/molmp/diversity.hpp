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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "molmp/chemio.hpp"

namespace molmp {

inline constexpr int kFingerprintBits = 2048;
inline constexpr int kMaxPathBonds = 7;

class Fingerprint {
 public:
  explicit Fingerprint(int bits = kFingerprintBits);

  int size() const noexcept { return bits_; }
  void set(int bit);
  bool test(int bit) const;
  int count() const noexcept;
  bool operator==(const Fingerprint& o) const = default;

  /// Bit string, most significant word last.
  std::string to_hex() const;

 private:
  friend double tanimoto(const Fingerprint& a, const Fingerprint& b);
  int bits_;
  std::vector<std::uint64_t> words_;
};

/// Hashed linear-path fingerprint: every simple path of 1 to 7 bonds,
/// encoded as alternating element numbers and bond orders in canonical
/// direction, sets two bits.
Fingerprint fingerprint(const Molecule& m, int bits = kFingerprintBits);
std::vector<Fingerprint> fingerprints(const std::vector<Molecule>& mols, int workers = 1,
                                      int bits = kFingerprintBits);

/// |a and b| / |a or b|; 1 when both are empty. Throws InputError on a width
/// mismatch.
double tanimoto(const Fingerprint& a, const Fingerprint& b);
double jaccard_distance(const Fingerprint& a, const Fingerprint& b);

struct ClusterReport {
  std::vector<int> assignment;  // cluster id per molecule
  std::vector<int> sizes;       // per cluster id, in creation order
  std::vector<int> leaders;     // molecule index of each cluster's leader
  int singletons = 0;
  double entropy = 0.0;  // bits

  int cluster_count() const noexcept { return static_cast<int>(sizes.size()); }
  nlohmann::json summary() const;
};

/// Leader clustering. Molecules are visited by descending count of
/// neighbors at or above `threshold` (index breaks ties); each joins the
/// first leader it is similar enough to, or founds a new cluster.
ClusterReport cluster(const std::vector<Fingerprint>& fps, double threshold = 0.70);

/// -sum p log2 p over cluster occupancy fractions.
double shannon_entropy(std::span<const int> sizes);

}  // namespace molmp
