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
#include "data.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "molmp/error.hpp"
#include "molmp/trainpipe.hpp"

namespace molmp::cli {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw InputError("unterminated quoted field");
  out.push_back(std::move(field));
  return out;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double parse_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw InputError("not a number: '" + text + "'");
  }
  if (trim(text.substr(used)).size() > 0) throw InputError("not a number: '" + text + "'");
  return v;
}

double convert_label(double raw, const LoadOptions& opt) {
  if (!opt.ic50_threshold) return raw;
  const double v[] = {raw};
  return activity_threshold(v, *opt.ic50_threshold)[0];
}

LoadResult load_csv(const fs::path& path, const LoadOptions& opt) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw InputError("'" + path.string() + "' is empty");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int smiles_col = column("smiles");
  const int name_col = column("name");
  const int label_col = column(opt.label_column);
  if (smiles_col < 0) throw InputError("'" + path.string() + "' has no 'smiles' column");
  if (opt.ic50_threshold && label_col < 0) {
    throw InputError("IC50 conversion requested but column '" + opt.label_column + "' is missing");
  }
  LoadResult res;
  res.format = SourceFormat::Smiles;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    try {
      const auto fields = split_csv_line(line);
      if (static_cast<int>(fields.size()) != static_cast<int>(header.size())) {
        throw InputError("expected " + std::to_string(header.size()) + " fields, found " +
                         std::to_string(fields.size()));
      }
      InputMolecule im;
      im.row = row;
      im.source = trim(fields[smiles_col]);
      im.name = name_col >= 0 ? trim(fields[name_col]) : "row_" + std::to_string(row);
      im.molecule = reparse(im.source, SourceFormat::Smiles, opt.standardize);
      im.molecule.name = im.name;
      if (label_col >= 0 && !trim(fields[label_col]).empty()) {
        im.label = convert_label(parse_number(trim(fields[label_col])), opt);
      }
      res.molecules.push_back(std::move(im));
    } catch (const InputError& e) {
      ++res.skipped;
      spdlog::warn("{}: skipping row {}: {}", path.filename().string(), row, e.what());
    }
  }
  return res;
}

LoadResult load_sdf(const fs::path& path, const LoadOptions& opt) {
  std::istringstream in(read_text(path));
  LoadResult res;
  res.format = SourceFormat::Sdf;
  std::string line;
  std::string record;
  int index = 0;
  int first_line = 1;
  int line_no = 0;
  auto flush = [&] {
    if (trim(record).empty()) return;
    ++index;
    try {
      InputMolecule im;
      im.row = index;
      im.source = record;
      im.molecule = reparse(record, SourceFormat::Sdf, opt.standardize);
      im.name = im.molecule.name.empty() ? "record_" + std::to_string(index) : im.molecule.name;
      im.molecule.name = im.name;
      for (const auto& [key, value] : im.molecule.properties) {
        if (key == opt.label_column) im.label = convert_label(parse_number(trim(value)), opt);
      }
      res.molecules.push_back(std::move(im));
    } catch (const InputError& e) {
      ++res.skipped;
      spdlog::warn("{}: skipping record {} (starting at line {}): {}", path.filename().string(), index, first_line,
                   e.what());
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    record += line + "\n";
    if (line.rfind("$$$$", 0) == 0) {
      flush();
      record.clear();
      first_line = line_no + 1;
    }
  }
  flush();
  return res;
}

}  // namespace

Molecule reparse(const std::string& source, SourceFormat format, bool standardize_it) {
  Molecule m;
  if (format == SourceFormat::Smiles) {
    m = parse_smiles(source);
  } else {
    auto mols = parse_sdf(source);
    if (mols.size() != 1) throw InputError("expected one SDF record, found " + std::to_string(mols.size()));
    m = std::move(mols.front());
  }
  return standardize_it ? standardize(m) : m;
}

LoadResult load_molecules(const fs::path& path, const LoadOptions& opt) {
  if (!fs::exists(path)) throw InputError("input '" + path.string() + "' does not exist");
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  LoadResult res = ext == ".sdf" || ext == ".sd" || ext == ".mol" ? load_sdf(path, opt) : load_csv(path, opt);
  spdlog::info("loaded {} molecules from '{}' ({} skipped)", res.molecules.size(), path.string(), res.skipped);
  return res;
}

FeaturizeMode FeaturizeMode::parse(const std::string& text) {
  FeaturizeMode m;
  if (text == "2d") return m;
  if (text == "3d") {
    m.kind = Clean3d;
    return m;
  }
  if (text.rfind("noisy3d", 0) == 0) {
    m.kind = Noisy3d;
    m.sigma = 0.5;
    if (text.size() > 7) {
      if (text[7] != ':') throw InputError("bad mode '" + text + "'");
      m.sigma = parse_number(text.substr(8));
    }
    if (!(m.sigma >= 0.0)) throw InputError("noise sigma must be non-negative");
    return m;
  }
  throw InputError("unknown mode '" + text + "' (expected 2d, 3d or noisy3d:<sigma>)");
}

std::string FeaturizeMode::to_string() const {
  if (kind == Flat) return "2d";
  if (kind == Clean3d) return "3d";
  std::ostringstream s;
  s << "noisy3d:" << sigma;
  return s.str();
}

namespace {

void put_bytes(std::ostream& out, const void* p, std::size_t n) { out.write(static_cast<const char*>(p), n); }

template <typename T>
void put(std::ostream& out, T v) {
  put_bytes(out, &v, sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  put_bytes(out, s.data(), s.size());
}

void put_matrix(std::ostream& out, const Matrix& m) {
  put<std::int32_t>(out, m.rows);
  put<std::int32_t>(out, m.cols);
  put_bytes(out, m.data.data(), m.data.size() * sizeof(double));
}

class Reader {
 public:
  Reader(std::string bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

  void take(void* p, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw InputError("graph cache '" + name_ + "' is truncated");
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T get() {
    T v;
    take(&v, sizeof v);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint64_t>();
    if (n > bytes_.size() - pos_) throw InputError("graph cache '" + name_ + "' is truncated");
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  Matrix get_matrix() {
    const int r = get<std::int32_t>();
    const int c = get<std::int32_t>();
    if (r < 0 || c < 0) throw InputError("graph cache '" + name_ + "' has a negative shape");
    Matrix m(r, c);
    take(m.data.data(), m.data.size() * sizeof(double));
    return m;
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_cache(const fs::path& path, const GraphCache& cache) {
  if (cache.sources.size() != cache.graphs.size()) throw InvariantError("cache sources and graphs differ in count");
  nlohmann::json header = {{"manifest", nlohmann::json::parse(cache.manifest.to_json())},
                           {"manifest_hash", cache.manifest.hash()},
                           {"mask", cache.mask},
                           {"mode", cache.mode},
                           {"format", cache.format == SourceFormat::Smiles ? "smiles" : "sdf"},
                           {"standardized", cache.standardized},
                           {"count", cache.graphs.size()}};
  std::ostringstream out;
  out.write(kCacheMagic.data(), kCacheMagic.size());
  put_string(out, header.dump());
  for (std::size_t i = 0; i < cache.graphs.size(); ++i) {
    const auto& g = cache.graphs[i];
    put_string(out, g.name);
    put_string(out, g.smiles);
    put_string(out, cache.sources[i]);
    put<std::int32_t>(out, g.n_atoms);
    put_matrix(out, g.x);
    put<std::int32_t>(out, static_cast<std::int32_t>(g.edge_index.size()));
    for (const auto& e : g.edge_index) {
      put<std::int32_t>(out, e[0]);
      put<std::int32_t>(out, e[1]);
    }
    put_matrix(out, g.edge_attr);
    put<std::int32_t>(out, static_cast<std::int32_t>(g.u.size()));
    put_bytes(out, g.u.data(), g.u.size() * sizeof(double));
    put<std::uint8_t>(out, g.y ? 1 : 0);
    put<double>(out, g.y.value_or(0.0));
  }
  write_text(path, out.str());
}

GraphCache read_cache(const fs::path& path) {
  Reader in(read_text(path), path.string());
  std::string magic(kCacheMagic.size(), '\0');
  in.take(magic.data(), magic.size());
  if (magic != kCacheMagic) throw InputError("'" + path.string() + "' is not a graph cache");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.get_string());
  } catch (const nlohmann::json::exception& e) {
    throw InputError("graph cache header is not valid JSON: " + std::string(e.what()));
  }
  GraphCache cache;
  cache.manifest = FeatureManifest::from_json(header.at("manifest").dump());
  if (cache.manifest.hash() != header.at("manifest_hash").get<std::string>()) {
    throw InputError("graph cache manifest hash does not match its manifest");
  }
  cache.mask = header.at("mask").get<FeatureMask>();
  cache.mode = header.at("mode").get<std::string>();
  cache.format = header.at("format").get<std::string>() == "sdf" ? SourceFormat::Sdf : SourceFormat::Smiles;
  cache.standardized = header.at("standardized").get<bool>();
  const auto count = header.at("count").get<std::size_t>();
  for (std::size_t i = 0; i < count; ++i) {
    FeaturizedGraph g;
    g.name = in.get_string();
    g.smiles = in.get_string();
    cache.sources.push_back(in.get_string());
    g.n_atoms = in.get<std::int32_t>();
    g.x = in.get_matrix();
    const int n_edges = in.get<std::int32_t>();
    if (n_edges < 0) throw InputError("graph cache has a negative edge count");
    g.edge_index.resize(n_edges);
    for (auto& e : g.edge_index) {
      e[0] = in.get<std::int32_t>();
      e[1] = in.get<std::int32_t>();
    }
    g.edge_attr = in.get_matrix();
    const int nu = in.get<std::int32_t>();
    if (nu < 0) throw InputError("graph cache has a negative global count");
    g.u.resize(nu);
    in.take(g.u.data(), g.u.size() * sizeof(double));
    const bool has_y = in.get<std::uint8_t>() != 0;
    const double y = in.get<double>();
    if (has_y) g.y = y;
    g.feature_mask = cache.mask;
    check_graph(g, cache.manifest);
    cache.graphs.push_back(std::move(g));
  }
  if (!in.done()) throw InputError("graph cache '" + path.string() + "' has trailing bytes");
  return cache;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

FeaturizeReport featurize_all(const LoadResult& input, const LoadOptions& load, const FeatureMask& mask,
                              const FeaturizeMode& mode, std::uint64_t seed, int workers) {
  const int n = static_cast<int>(input.molecules.size());
  std::vector<std::optional<FeaturizedGraph>> out(n);
  std::vector<std::string> reasons(n);
  FeaturizeOptions opt;
  opt.use_3d = mode.kind != FeaturizeMode::Flat;
  parallel_for(n, workers, [&](int i) {
    const auto& im = input.molecules[i];
    try {
      Molecule m = im.molecule;
      if (opt.use_3d && !m.has_3d) throw InputError("no 3D coordinates (3D modes need SDF input with coordinates)");
      if (mode.kind == FeaturizeMode::Noisy3d) m = perturb_coordinates(m, mode.sigma, derive_seed(seed, i));
      auto g = featurize(m, mask, im.label, opt);
      g.name = im.name;
      g.smiles = input.format == SourceFormat::Smiles ? im.source : to_smiles(im.molecule);
      out[i] = std::move(g);
    } catch (const InputError& e) {
      reasons[i] = e.what();
    }
  });
  FeaturizeReport rep;
  rep.cache.mask = mask;
  rep.cache.mode = mode.to_string();
  rep.cache.format = input.format;
  rep.cache.standardized = load.standardize;
  for (int i = 0; i < n; ++i) {
    if (!out[i]) {
      ++rep.skipped;
      spdlog::warn("skipping row {} ('{}'): {}", input.molecules[i].row, input.molecules[i].name, reasons[i]);
      continue;
    }
    rep.cache.graphs.push_back(std::move(*out[i]));
    rep.cache.sources.push_back(input.molecules[i].source);
  }
  return rep;
}

std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw InvariantError("cannot allocate a digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw InvariantError("SHA-1 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 15];
  }
  return hex;
}

std::string git_blob_hash_file(const fs::path& path) { return git_blob_hash(read_text(path)); }

}  // namespace molmp::cli
