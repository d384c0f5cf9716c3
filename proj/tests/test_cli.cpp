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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "commands.hpp"
#include "config.hpp"
#include "data.hpp"
#include "doctest.h"
#include "json.hpp"
#include "molmp/elements.hpp"
#include "molmp/error.hpp"
#include "molmp/trainpipe.hpp"
#include "svg.hpp"
#include "synthetic.hpp"

using namespace molmp;
using namespace molmp::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = fs::temp_directory_path() / fmt::format("molmp_cli_{}_{}", rd(), counter++);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::vector<std::string> lines(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

json load_json(const std::string& path) { return json::parse(read_text(path)); }

int invoke(std::vector<std::string> args) {
  args.push_back("--log-level");
  args.push_back("error");
  return run(args);
}

// 40 molecules, half carrying a sulfonamide.
std::string planted_csv() {
  std::string csv = "name,smiles,label\n";
  for (const auto& r : testing::planted_group_records(40, 3)) csv += fmt::format("{},{},{}\n", r.name, r.smiles, r.label);
  return csv;
}

std::string molblock(const Molecule& m, const std::string& label) {
  std::string s = m.name + "\n  test\n\n";
  s += fmt::format("{:3d}{:3d}  0  0  0  0  0  0  0  0999 V2000\n", m.atom_count(), m.bond_count());
  for (const auto& a : m.atoms) {
    const Vec3 p = a.position.value();
    s += fmt::format("{:10.4f}{:10.4f}{:10.4f} {:<3} 0  0  0  0  0  0  0  0  0  0  0  0\n", p[0], p[1], p[2],
                     elements::symbol(a.element));
  }
  for (const auto& b : m.bonds) s += fmt::format("{:3d}{:3d}{:3d}  0  0  0  0\n", b.a + 1, b.b + 1, 1);
  return s + "M  END\n> <label>\n" + label + "\n\n$$$$\n";
}

}  // namespace

TEST_CASE("CSV fields split with quotes and escapes") {
  CHECK(split_csv_line("a,b,c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_csv_line("\"x,y\",\"say \"\"hi\"\"\",") == std::vector<std::string>{"x,y", "say \"hi\"", ""});
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("plain") == "plain");
  CHECK_THROWS_AS(split_csv_line("\"open"), InputError);
}

TEST_CASE("featurization modes parse") {
  CHECK(FeaturizeMode::parse("2d").kind == FeaturizeMode::Flat);
  CHECK(FeaturizeMode::parse("3d").kind == FeaturizeMode::Clean3d);
  const auto n = FeaturizeMode::parse("noisy3d:0.25");
  CHECK(n.kind == FeaturizeMode::Noisy3d);
  CHECK(n.sigma == 0.25);
  CHECK(FeaturizeMode::parse("noisy3d").sigma == 0.5);
  CHECK(FeaturizeMode::parse("noisy3d:0.5").to_string() == "noisy3d:0.5");
  CHECK_THROWS_AS(FeaturizeMode::parse("4d"), InputError);
  CHECK_THROWS_AS(FeaturizeMode::parse("noisy3d:-1"), InputError);
}

TEST_CASE("CSV loading skips malformed rows and converts IC50 values") {
  TempDir dir;
  write_text(dir / "ok.csv", "name,smiles,label\na,CCO,1\nb,c1ccccc1,0\nc,CC(=O)O,1\n");
  CHECK(load_molecules(dir / "ok.csv").molecules.size() == 3);

  write_text(dir / "bad.csv", "name,smiles,label\na,CCO,1\nb,C1CC(,0\nc,CC(=O)O,1\n");
  const auto bad = load_molecules(dir / "bad.csv");
  CHECK(bad.molecules.size() == 2);
  CHECK(bad.skipped == 1);
  CHECK(bad.molecules[1].row == 4);

  write_text(dir / "ic50.csv", "name,smiles,ic50\na,CCO,50\nb,CCN,100\nc,CCC,250\nd,CCCl,-3\n");
  LoadOptions opt;
  opt.label_column = "ic50";
  opt.ic50_threshold = 100.0;
  const auto ic = load_molecules(dir / "ic50.csv", opt);
  REQUIRE(ic.molecules.size() == 3);
  CHECK(*ic.molecules[0].label == 1.0);
  CHECK(*ic.molecules[1].label == 1.0);
  CHECK(*ic.molecules[2].label == 0.0);

  write_text(dir / "nosmiles.csv", "name,label\na,1\n");
  CHECK_THROWS_AS(load_molecules(dir / "nosmiles.csv"), InputError);
  CHECK_THROWS_AS(load_molecules(dir / "missing.csv"), InputError);
}

TEST_CASE("featurize command: 3 valid rows give 3 graphs, a malformed row is dropped") {
  TempDir dir;
  write_text(dir / "three.csv", "name,smiles,label\na,CCO,1\nb,c1ccccc1,0\nc,CC(=O)O,1\n");
  CHECK(invoke({"featurize", "--input", dir / "three.csv", "--output", dir / "three.gc"}) == 0);
  CHECK(read_cache(dir / "three.gc").graphs.size() == 3);
  write_text(dir / "four.csv", "name,smiles,label\na,CCO,1\nb,C1CC(,0\nc,CC(=O)O,1\nd,CCN,0\n");
  CHECK(invoke({"featurize", "--input", dir / "four.csv", "--output", dir / "four.gc"}) == 0);
  const auto cache = read_cache(dir / "four.gc");
  REQUIRE(cache.graphs.size() == 3);
  CHECK(cache.graphs[1].name == "c");
  // Nothing featurizable in 3D mode from SMILES.
  CHECK(invoke({"featurize", "--input", dir / "three.csv", "--output", dir / "x.gc", "--mode", "3d"}) == 1);
}

TEST_CASE("graph cache round trip is lossless") {
  TempDir dir;
  const auto set = testing::steric_set(6, 2);
  LoadResult in;
  in.format = SourceFormat::Sdf;
  for (std::size_t i = 0; i < set.molecules.size(); ++i) {
    InputMolecule im;
    im.name = set.molecules[i].name;
    im.source = molblock(set.molecules[i], "1");
    im.molecule = set.molecules[i];
    im.label = set.labels[i];
    in.molecules.push_back(im);
  }
  const auto mask = mask_without(FeatureManifest::standard(), {"solubility"});
  const auto rep = featurize_all(in, {}, mask, FeaturizeMode::parse("noisy3d:0.3"), 5, 3);
  write_cache(dir / "c.gc", rep.cache);
  const auto back = read_cache(dir / "c.gc");
  CHECK(back.mask == rep.cache.mask);
  CHECK(back.mode == "noisy3d:0.3");
  CHECK(back.format == SourceFormat::Sdf);
  CHECK(back.sources == rep.cache.sources);
  REQUIRE(back.graphs.size() == rep.cache.graphs.size());
  for (std::size_t i = 0; i < back.graphs.size(); ++i) {
    const auto& a = back.graphs[i];
    const auto& b = rep.cache.graphs[i];
    CHECK(a.name == b.name);
    CHECK(a.smiles == b.smiles);
    CHECK(a.n_atoms == b.n_atoms);
    CHECK(a.x.data == b.x.data);
    CHECK(a.edge_index == b.edge_index);
    CHECK(a.edge_attr.data == b.edge_attr.data);
    CHECK(a.u == b.u);
    CHECK(a.y == b.y);
  }
  // Featurization does not depend on the worker count.
  const auto serial = featurize_all(in, {}, mask, FeaturizeMode::parse("noisy3d:0.3"), 5, 1);
  for (std::size_t i = 0; i < serial.cache.graphs.size(); ++i) {
    CHECK(serial.cache.graphs[i].x.data == rep.cache.graphs[i].x.data);
  }
  write_text(dir / "junk.gc", "MOLMPGC1 not really");
  CHECK_THROWS_AS(read_cache(dir / "junk.gc"), InputError);
  auto bytes = read_text(dir / "c.gc");
  write_text(dir / "cut.gc", bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(read_cache(dir / "cut.gc"), InputError);
}

TEST_CASE("run configuration round-trips through INI and rejects unknown keys") {
  RunConfig c;
  c.command = "train";
  c.datasets = {"a.gc"};
  c.output = "out";
  c.seeds = {3, 1, 4};
  c.model.variant = Variant::ABMP_SN;
  c.model.hidden = 77;
  c.model.dropout = 0.1 + 0.2;
  c.model.heads = 3;
  c.train.lr = 1.0 / 3.0;
  c.train.task = Task::Regression;
  c.model.task = Task::Regression;
  c.train.sampler = Sampler::Uniform;
  c.exclude_features = {"solubility", "buried_volume"};
  c.tune.trials = 7;
  const RunConfig back = RunConfig::from_ini(c.to_ini());
  CHECK(back.to_ini() == c.to_ini());
  CHECK(back.model.dropout == c.model.dropout);
  CHECK(back.train.lr == c.train.lr);
  CHECK(back.seeds == c.seeds);
  CHECK(back.model.variant == Variant::ABMP_SN);
  CHECK(back.exclude_features == c.exclude_features);
  CHECK_THROWS_AS(RunConfig::from_ini("[model]\nsize = 3\n"), InputError);
  CHECK_THROWS_AS(RunConfig::from_ini("[extra]\nkey = 1\n"), InputError);
  CHECK_THROWS_AS(RunConfig::from_ini("[model]\nhidden = many\n"), InputError);
  RunConfig empty = c;
  empty.datasets.clear();
  empty.seeds.clear();
  CHECK_THROWS_AS(empty.validate(), InputError);
  RunConfig missing = c;
  CHECK_THROWS_AS(missing.validate(), InputError);  // a.gc does not exist
  CHECK(parse_seeds("0, 1,2") == std::vector<std::uint64_t>{0, 1, 2});
  CHECK_THROWS_AS(parse_seeds("1,x"), InputError);
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(invoke({"--help"}) == 0);
  CHECK(invoke({}) == 1);
  CHECK(invoke({"unknown-command"}) == 1);
  CHECK(invoke({"train", "--cache", dir / "missing.gc", "--out", dir / "r"}) == 1);
  write_text(dir / "t.csv", planted_csv());
  REQUIRE(invoke({"featurize", "--input", dir / "t.csv", "--output", dir / "t.gc"}) == 0);
  CHECK(invoke({"train", "--cache", dir / "t.gc", "--out", dir / "r", "--variant", "XMP"}) == 1);
  CHECK(invoke({"train", "--cache", dir / "t.gc", "--out", dir / "r", "--hidden", "0"}) == 1);
  CHECK(invoke({"train", "--cache", dir / "t.gc", "--out", dir / "r", "--exclude", "no_such_feature"}) == 1);
}

TEST_CASE("train writes per-seed records, an aggregate and a reproducible manifest") {
  TempDir dir;
  write_text(dir / "t.csv", planted_csv());
  REQUIRE(invoke({"featurize", "--input", dir / "t.csv", "--output", dir / "t.gc"}) == 0);
  write_text(dir / "base.ini", "[model]\nhidden = 12\n[train]\nepochs = 1\nbatch_size = 8\n");
  REQUIRE(invoke({"train", "--config", dir / "base.ini", "--cache", dir / "t.gc", "--out", dir / "run", "--epochs", "3",
               "--seeds", "0,1,2,3,4"}) == 0);
  for (int s = 0; s < 5; ++s) {
    const auto m = load_json(dir / fmt::format("run/seed_{}/metrics.json", s));
    CHECK(m["seed"] == s);
    CHECK(m["epochs_run"] == 3);  // the flag wins over the file
    CHECK(m["test"].contains("f1"));
    CHECK(fs::exists(dir / fmt::format("run/seed_{}/checkpoint.bin", s)));
  }
  const auto agg = load_json(dir / "run/aggregate.json");
  std::vector<double> f1s = agg["test"]["f1"]["values"];
  REQUIRE(f1s.size() == 5);
  CHECK(agg["test"]["f1"]["moe95"].get<double>() == doctest::Approx(margin_of_error(f1s)).epsilon(1e-15));
  const auto man = load_json(dir / "run/manifest.json");
  CHECK(man["inputs"][0]["git_blob"] == git_blob_hash_file(dir / "t.gc"));
  CHECK(man["config"]["model"]["hidden"] == 12);

  // Rerunning from the written configuration reproduces the metrics bit for bit.
  REQUIRE(invoke({"train", "--config", dir / "run/run.ini", "--out", dir / "again"}) == 0);
  for (int s = 0; s < 5; ++s) {
    CHECK(read_text(dir / fmt::format("run/seed_{}/metrics.json", s)) ==
          read_text(dir / fmt::format("again/seed_{}/metrics.json", s)));
  }
  CHECK(read_text(dir / "run/aggregate.json") == read_text(dir / "again/aggregate.json"));

  // Evaluating on the training part reproduces the recorded training metrics.
  REQUIRE(invoke({"evaluate", "--checkpoint", dir / "run/seed_2/checkpoint.bin", "--cache", dir / "t.gc", "--split",
               dir / "run/seed_2/split.json", "--part", "train", "--out", dir / "eval.json"}) == 0);
  CHECK(load_json(dir / "eval.json") == load_json(dir / "run/seed_2/metrics.json")["train"]);

  // One prediction row per molecule.
  REQUIRE(invoke({"predict", "--checkpoint", dir / "run/seed_0/checkpoint.bin", "--cache", dir / "t.gc", "--out",
               dir / "pred.csv"}) == 0);
  CHECK(lines(dir / "pred.csv").size() == read_cache(dir / "t.gc").graphs.size() + 1);
}

TEST_CASE("checkpoints refuse caches with a different feature manifest or missing features") {
  TempDir dir;
  write_text(dir / "t.csv", planted_csv());
  REQUIRE(invoke({"featurize", "--input", dir / "t.csv", "--output", dir / "t.gc"}) == 0);
  REQUIRE(invoke({"featurize", "--input", dir / "t.csv", "--output", dir / "slim.gc", "--exclude", "solubility"}) == 0);
  REQUIRE(invoke({"train", "--cache", dir / "t.gc", "--out", dir / "run", "--hidden", "8", "--epochs", "1", "--seeds",
               "0"}) == 0);
  const std::string ckpt = dir / "run/seed_0/checkpoint.bin";
  CHECK(invoke({"predict", "--checkpoint", ckpt, "--cache", dir / "slim.gc", "--out", dir / "p.csv"}) == 1);

  GraphCache other;
  other.manifest = testing::planted_noise_manifest();
  other.mask = full_mask(other.manifest);
  other.graphs = testing::planted_noise_graphs(4, 1);
  other.sources.assign(4, "C");
  write_cache(dir / "other.gc", other);
  CHECK(invoke({"evaluate", "--checkpoint", ckpt, "--cache", dir / "other.gc"}) == 1);

  // A checkpoint trained without a feature accepts the full cache.
  REQUIRE(invoke({"train", "--cache", dir / "t.gc", "--out", dir / "run2", "--hidden", "8", "--epochs", "1", "--seeds",
               "0", "--exclude", "solubility"}) == 0);
  CHECK(invoke({"predict", "--checkpoint", dir / "run2/seed_0/checkpoint.bin", "--cache", dir / "t.gc", "--out",
             dir / "p.csv"}) == 0);
}

TEST_CASE("relevance command: scores, degenerate molecules, SVG and pair table") {
  TempDir dir;
  write_text(dir / "t.csv", planted_csv());
  write_text(dir / "r.csv", "name,smiles,label\nsingle,C,0\naspirin,CC(=O)Oc1ccccc1C(=O)O,1\n"
                            "r_iso,C[C@H](N)C(=O)O,1\ns_iso,C[C@@H](N)C(=O)O,0\n");
  REQUIRE(invoke({"featurize", "--input", dir / "t.csv", "--output", dir / "t.gc"}) == 0);
  REQUIRE(invoke({"featurize", "--input", dir / "r.csv", "--output", dir / "r.gc"}) == 0);
  REQUIRE(invoke({"train", "--cache", dir / "t.gc", "--out", dir / "run", "--hidden", "8", "--epochs", "2", "--seeds",
               "0"}) == 0);
  const std::string ckpt = dir / "run/seed_0/checkpoint.bin";
  REQUIRE(invoke({"relevance", "--checkpoint", ckpt, "--cache", dir / "r.gc", "--out", dir / "rel.csv", "--svg-dir",
               dir / "svg"}) == 0);
  const auto rows = lines(dir / "rel.csv");
  CHECK(rows[0] == "molecule,atom_index,element,score");
  CHECK(rows[1] == "single,0,C,0.5");
  std::map<std::string, std::vector<double>> per;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = split_csv_line(rows[i]);
    per[f[0]].push_back(std::stod(f[3]));
  }
  CHECK(per["aspirin"].size() == 13);
  for (const auto& name : {"aspirin", "r_iso"}) {
    CHECK(*std::min_element(per[name].begin(), per[name].end()) == 0.0);
    CHECK(*std::max_element(per[name].begin(), per[name].end()) == 1.0);
  }
  const std::string svg = read_text(dir / "svg/0001_aspirin.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  int labels = 0;
  for (std::size_t p = svg.find("fill=\"#b00\""); p != std::string::npos; p = svg.find("fill=\"#b00\"", p + 1)) ++labels;
  CHECK(labels == 5);

  // Pair table over the two stereoisomers.
  write_text(dir / "pair.csv", "name,smiles,label\nr_iso,C[C@H](N)C(=O)O,1\ns_iso,C[C@@H](N)C(=O)O,0\n");
  REQUIRE(invoke({"featurize", "--input", dir / "pair.csv", "--output", dir / "pair.gc"}) == 0);
  REQUIRE(invoke({"relevance", "--checkpoint", ckpt, "--cache", dir / "pair.gc", "--out", dir / "p.csv",
               "--pair-table", dir / "pairs.csv"}) == 0);
  const auto pr = lines(dir / "pairs.csv");
  REQUIRE(pr.size() == 2);
  const auto f = split_csv_line(pr[1]);
  CHECK(std::stod(f[4]) == doctest::Approx(std::abs(std::stod(f[2]) - std::stod(f[3]))));
  CHECK(invoke({"relevance", "--checkpoint", ckpt, "--cache", dir / "r.gc", "--out", dir / "p.csv", "--pair-table",
             dir / "bad_pairs.csv"}) == 1);

  // A cached graph whose stored source no longer matches is rejected.
  auto cache = read_cache(dir / "r.gc");
  cache.sources[1] = "CCO";
  write_cache(dir / "tampered.gc", cache);
  CHECK(invoke({"relevance", "--checkpoint", ckpt, "--cache", dir / "tampered.gc", "--out", dir / "x.csv"}) == 1);
}

TEST_CASE("colormap endpoints and SVG atom count") {
  CHECK(colormap(0.0) == std::array<int, 3>{68, 1, 84});
  CHECK(colormap(1.0) == std::array<int, 3>{253, 231, 37});
  CHECK(colormap(2.0) == colormap(1.0));
  const Molecule m = parse_smiles("c1ccccc1O");
  const std::string svg = relevance_svg(m, {0, 0.2, 0.4, 0.6, 0.8, 1.0, 0.5}, "phenol");
  int circles = 0;
  for (std::size_t p = svg.find("<circle"); p != std::string::npos; p = svg.find("<circle", p + 1)) ++circles;
  CHECK(circles == 7);
  CHECK_THROWS_AS(relevance_svg(m, {0.1}, "x"), InputError);
}

TEST_CASE("diversity command on duplicate groups reports log2 entropy exactly") {
  TempDir dir;
  std::string csv = "name,smiles\n";
  const std::vector<std::pair<std::string, int>> groups = {
      {"c1ccc2ccccc2c1CCCCCCCC", 4}, {"O=C(N)C1CCN(CC1)CCCCCCCC", 2}, {"FC(F)(F)c1ccc(cc1)S(=O)(=O)CCCC", 1},
      {"ClCCCCCCCCCCCl", 1}};
  int id = 0;
  for (const auto& [smiles, count] : groups) {
    for (int k = 0; k < count; ++k) csv += fmt::format("m{},{}\n", id++, smiles);
  }
  write_text(dir / "d.csv", csv);
  REQUIRE(invoke({"diversity", "--input", dir / "d.csv", "--out", dir / "div"}) == 0);
  const auto s = load_json(dir / "div/summary.json");
  CHECK(s["clusters"] == 4);
  CHECK(s["singletons"] == 2);
  const double expected = -(0.5 * std::log2(0.5) + 0.25 * std::log2(0.25) + 2 * 0.125 * std::log2(0.125));
  CHECK(s["entropy_bits"].get<double>() == doctest::Approx(expected).epsilon(1e-15));
  const auto rows = lines(dir / "div/clusters.csv");
  CHECK(rows.size() == 9);
  CHECK(split_csv_line(rows[1])[1] == split_csv_line(rows[4])[1]);
}

TEST_CASE("ablate3d emits three arms by metric") {
  TempDir dir;
  const auto set = testing::steric_set(16, 4);
  std::string sdf;
  for (std::size_t i = 0; i < set.molecules.size(); ++i) sdf += molblock(set.molecules[i], fmt::format("{}", set.labels[i]));
  write_text(dir / "s.sdf", sdf);
  REQUIRE(invoke({"ablate3d", "--input", dir / "s.sdf", "--out", dir / "abl", "--hidden", "8", "--epochs", "2",
               "--seeds", "0,1"}) == 0);
  const auto j = load_json(dir / "abl/ablation.json");
  REQUIRE(j["arms"].size() == 3);
  for (const char* arm : {"2d", "3d", "noisy3d:0.5"}) {
    CHECK(j["arms"].contains(arm));
    for (const char* metric : {"f1", "accuracy", "auc"}) CHECK(j["arms"][arm].contains(metric));
  }
  CHECK(lines(dir / "abl/ablation.csv").size() == 1 + 3 * 2);
  CHECK(fs::exists(dir / "abl/manifest.json"));
  // SMILES-only input has no 3D arm.
  write_text(dir / "flat.csv", planted_csv());
  CHECK(invoke({"ablate3d", "--input", dir / "flat.csv", "--out", dir / "abl2", "--hidden", "8", "--epochs", "1"}) == 1);
}

TEST_CASE("select-features command removes planted noise features") {
  TempDir dir;
  GraphCache cache;
  cache.manifest = testing::planted_noise_manifest();
  cache.mask = full_mask(cache.manifest);
  cache.graphs = testing::planted_noise_graphs(160, 100);
  cache.sources.assign(cache.graphs.size(), "C");
  write_cache(dir / "noise.gc", cache);
  REQUIRE(invoke({"select-features", "--cache", dir / "noise.gc", "--out", dir / "sel", "--hidden", "32", "--epochs",
               "20", "--seeds", "0", "--candidates", "signal,noise_a,noise_b,noise_c"}) == 0);
  const auto sel = load_json(dir / "sel/selection.json");
  const std::vector<std::string> selected = sel["selected"];
  CHECK(std::find(selected.begin(), selected.end(), "signal") != selected.end());
  CHECK(selected.size() <= 2);
  const auto ranking = lines(dir / "sel/ranking.csv");
  CHECK(ranking.size() == 5);
  CHECK(ranking[0].rfind("feature,round_1", 0) == 0);
}

TEST_CASE("tune command records every trial and a Pareto choice") {
  TempDir dir;
  write_text(dir / "t.csv", planted_csv());
  REQUIRE(invoke({"featurize", "--input", dir / "t.csv", "--output", dir / "t.gc"}) == 0);
  write_text(dir / "tune.ini", "[tune]\nhidden_min = 8\nhidden_max = 16\nbatch_min = 8\nbatch_max = 16\n");
  REQUIRE(invoke({"tune", "--config", dir / "tune.ini", "--cache", dir / "t.gc", "--out", dir / "tune", "--trials", "3",
               "--epochs", "2", "--cv-folds", "2"}) == 0);
  const auto j = load_json(dir / "tune/tune.json");
  CHECK(j["trials"].size() == 3);
  for (const auto& t : j["trials"]) {
    CHECK(t["hidden"].get<int>() >= 8);
    CHECK(t["hidden"].get<int>() <= 16);
  }
  CHECK(j["pareto"].size() >= 1);
}
