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
#include <fstream>
#include <sstream>

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "molmp/chemio.hpp"
#include "molmp/diversity.hpp"
#include "molmp/elements.hpp"
#include "molmp/error.hpp"
#include "molmp/featurizer.hpp"
#include "molmp/mpnn.hpp"
#include "molmp/optim.hpp"
#include "molmp/trainpipe.hpp"

namespace py = pybind11;
using namespace molmp;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::array_t<double> to_array(const Matrix& m) {
  py::array_t<double> a({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), a.mutable_data());
  return a;
}

FeatureMask mask_from(const std::vector<std::string>& exclude) {
  return mask_without(FeatureManifest::standard(), exclude);
}

std::vector<Molecule> as_molecules(const py::iterable& items) {
  std::vector<Molecule> out;
  for (const auto& item : items) {
    if (py::isinstance<py::str>(item)) {
      out.push_back(parse_smiles(item.cast<std::string>()));
    } else {
      out.push_back(item.cast<Molecule>());
    }
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_molmp, m) {
  m.doc() = "Message-passing neural networks for molecular property prediction";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  py::class_<Molecule>(m, "Molecule")
      .def_property_readonly("atom_count", &Molecule::atom_count)
      .def_property_readonly("bond_count", &Molecule::bond_count)
      .def_property_readonly("heavy_atom_count", &Molecule::heavy_atom_count)
      .def_readwrite("name", &Molecule::name)
      .def_readonly("has_3d", &Molecule::has_3d)
      .def_property_readonly("elements",
                             [](const Molecule& mol) {
                               std::vector<std::string> out;
                               for (const auto& a : mol.atoms) out.emplace_back(elements::symbol(a.element));
                               return out;
                             })
      .def_property_readonly("bonds",
                             [](const Molecule& mol) {
                               std::vector<std::pair<int, int>> out;
                               for (const auto& b : mol.bonds) out.emplace_back(b.a, b.b);
                               return out;
                             })
      .def_property_readonly("properties",
                             [](const Molecule& mol) {
                               py::dict d;
                               for (const auto& [k, v] : mol.properties) d[py::str(k)] = v;
                               return d;
                             })
      .def("smiles", [](const Molecule& mol) { return to_smiles(mol); })
      .def("__repr__", [](const Molecule& mol) {
        return "<Molecule '" + to_smiles(mol) + "' atoms=" + std::to_string(mol.atom_count()) + ">";
      });

  m.def("parse_smiles", [](const std::string& s) { return parse_smiles(s); }, py::arg("smiles"));
  m.def("parse_sdf", [](const std::string& s) { return parse_sdf(s); }, py::arg("text"));
  m.def("standardize", &standardize, py::arg("molecule"));
  m.def("randomized_smiles", &randomized_smiles, py::arg("molecule"), py::arg("seed"));
  m.def("isomorphic", &isomorphic, py::arg("a"), py::arg("b"));
  m.def("buried_volume", &buried_volume, py::arg("molecule"), py::arg("atom"), py::arg("radius") = 3.5,
        py::arg("spacing") = 0.5);
  m.def(
      "descriptors",
      [](const Molecule& mol, bool use_3d) {
        FeaturizeOptions opt;
        opt.use_3d = use_3d;
        const Descriptors d = compute_descriptors(mol, opt);
        py::dict out;
        out["chiral_centers"] = d.chiral_centers;
        out["hbd"] = d.hbd;
        out["hba"] = d.hba;
        out["rotatable_bonds"] = d.rotatable_bonds;
        out["tpsa"] = d.tpsa;
        out["logp"] = d.logp;
        out["sp3_fraction"] = d.sp3_fraction;
        out["radius_of_gyration"] = d.radius_of_gyration;
        return out;
      },
      py::arg("molecule"), py::arg("use_3d") = true);

  m.def("feature_names", [] {
    std::vector<std::pair<std::string, std::string>> out;
    const char* groups[] = {"atom", "bond", "global"};
    for (const auto& f : FeatureManifest::standard().features()) {
      out.emplace_back(f.name, groups[static_cast<int>(f.group)]);
    }
    return out;
  });
  m.def("manifest_hash", [] { return FeatureManifest::standard().hash(); });

  py::class_<FeaturizedGraph>(m, "Graph")
      .def_readonly("n_atoms", &FeaturizedGraph::n_atoms)
      .def_readonly("name", &FeaturizedGraph::name)
      .def_readonly("smiles", &FeaturizedGraph::smiles)
      .def_readonly("y", &FeaturizedGraph::y)
      .def_property_readonly("x", [](const FeaturizedGraph& g) { return to_array(g.x); })
      .def_property_readonly("edge_attr", [](const FeaturizedGraph& g) { return to_array(g.edge_attr); })
      .def_property_readonly("edge_index",
                             [](const FeaturizedGraph& g) {
                               py::array_t<int> a({static_cast<py::ssize_t>(g.edge_index.size()), py::ssize_t{2}});
                               auto v = a.mutable_unchecked<2>();
                               for (std::size_t i = 0; i < g.edge_index.size(); ++i) {
                                 v(i, 0) = g.edge_index[i][0];
                                 v(i, 1) = g.edge_index[i][1];
                               }
                               return a;
                             })
      .def_property_readonly("u", [](const FeaturizedGraph& g) {
        return py::array_t<double>(static_cast<py::ssize_t>(g.u.size()), g.u.data());
      });

  m.def(
      "featurize",
      [](const Molecule& mol, std::optional<double> label, const std::vector<std::string>& exclude, bool use_3d) {
        FeaturizeOptions opt;
        opt.use_3d = use_3d;
        FeaturizedGraph g = featurize(mol, mask_from(exclude), label, opt);
        g.name = mol.name;
        g.smiles = to_smiles(mol);
        return g;
      },
      py::arg("molecule"), py::arg("label") = py::none(), py::arg("exclude") = std::vector<std::string>{},
      py::arg("use_3d") = true);

  py::class_<Model>(m, "Model")
      .def(py::init([](const std::string& variant, const std::string& task, int hidden, double dropout, int heads,
                       const std::vector<std::string>& exclude, std::uint64_t seed) {
             const auto& manifest = FeatureManifest::standard();
             const FeatureMask mask = mask_from(exclude);
             ModelSpec spec;
             spec.variant = parse_variant(variant);
             spec.task = parse_task(task);
             spec.hidden = hidden;
             spec.dropout = dropout;
             spec.heads = heads;
             spec.atom_features = spec.bond_features = spec.global_features = 0;
             for (int i = 0; i < manifest.size(); ++i) {
               if (!mask[i]) continue;
               switch (manifest[i].group) {
                 case FeatureGroup::Atom: ++spec.atom_features; break;
                 case FeatureGroup::Bond: ++spec.bond_features; break;
                 case FeatureGroup::Global: ++spec.global_features; break;
               }
             }
             spec.validate();
             return Model(spec, seed);
           }),
           py::arg("variant") = "BMP", py::arg("task") = "classification", py::arg("hidden") = 250,
           py::arg("dropout") = 0.0, py::arg("heads") = 1, py::arg("exclude") = std::vector<std::string>{},
           py::arg("seed") = 0)
      .def_static(
          "load",
          [](const std::string& path) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw InputError("cannot read checkpoint '" + path + "'");
            const auto ckpt = tc::read_checkpoint(in);
            Model model(ModelSpec::from_json(ckpt.meta.at("spec")), 0);
            tc::load_into(ckpt, model.params());
            return py::make_tuple(std::move(model), to_python(ckpt.meta));
          },
          py::arg("path"))
      .def(
          "save",
          [](const Model& model, const std::string& path, const py::object& meta) {
            nlohmann::json j = meta.is_none() ? nlohmann::json::object() : from_python(meta);
            j["spec"] = model.spec().to_json();
            std::ofstream out(path, std::ios::binary);
            if (!out) throw InputError("cannot write checkpoint '" + path + "'");
            tc::write_checkpoint(out, j, model.params());
          },
          py::arg("path"), py::arg("meta") = py::none())
      .def_property_readonly("variant", [](const Model& model) { return std::string(to_string(model.spec().variant)); })
      .def_property_readonly("spec", [](const Model& model) { return to_python(model.spec().to_json()); })
      .def("parameter_count", &Model::parameter_count)
      .def(
          "predict", [](Model& model, const std::vector<FeaturizedGraph>& g) { return model.predict(make_batch(g)); },
          py::arg("graphs"))
      .def(
          "relevance",
          [](Model& model, const std::vector<FeaturizedGraph>& g) { return model.relevance(make_batch(g)); },
          py::arg("graphs"))
      .def(
          "fit",
          [](Model& model, const std::vector<FeaturizedGraph>& train_set, const std::vector<FeaturizedGraph>& validation,
             const py::object& config, const std::function<py::object(py::dict)>& on_epoch) {
            TrainConfig tc = config.is_none() ? TrainConfig{} : TrainConfig::from_json(from_python(config));
            tc.task = model.spec().task;
            tc.validate();
            EpochCallback cb;
            if (on_epoch) {
              cb = [&](const EpochRecord& r) {
                py::dict d;
                d["epoch"] = r.epoch;
                d["train_loss"] = r.train_loss;
                d["lr"] = r.lr;
                d["validation"] = r.validation ? to_python(r.validation->to_json()) : py::none();
                const py::object keep = on_epoch(d);
                return keep.is_none() || py::bool_(keep);
              };
            }
            const TrainResult res = train(model, refs(train_set), refs(validation), tc, cb);
            py::list history;
            for (const auto& r : res.history) {
              py::dict d;
              d["epoch"] = r.epoch;
              d["train_loss"] = r.train_loss;
              d["lr"] = r.lr;
              history.append(d);
            }
            return history;
          },
          py::arg("train"), py::arg("validation") = std::vector<FeaturizedGraph>{}, py::arg("config") = py::none(),
          py::arg("on_epoch") = nullptr)
      .def(
          "evaluate",
          [](Model& model, const std::vector<FeaturizedGraph>& g) { return to_python(evaluate(model, refs(g)).to_json()); },
          py::arg("graphs"));

  m.def("auc", [](const std::vector<double>& s, const std::vector<double>& y) { return auc(s, y); }, py::arg("scores"),
        py::arg("labels"));
  m.def(
      "f1",
      [](const std::vector<double>& p, const std::vector<double>& y, double t) { return f1(confusion(p, y, t)); },
      py::arg("probabilities"), py::arg("labels"), py::arg("threshold") = 0.5);
  m.def(
      "accuracy",
      [](const std::vector<double>& p, const std::vector<double>& y, double t) { return accuracy(confusion(p, y, t)); },
      py::arg("probabilities"), py::arg("labels"), py::arg("threshold") = 0.5);
  m.def("rmse", [](const std::vector<double>& p, const std::vector<double>& y) { return rmse(p, y); },
        py::arg("predicted"), py::arg("truth"));
  m.def("margin_of_error", [](const std::vector<double>& v, double c) { return margin_of_error(v, c); },
        py::arg("values"), py::arg("confidence") = 0.95);
  m.def("activity_threshold",
        [](const std::vector<double>& v, double t) { return activity_threshold(v, t); }, py::arg("ic50_nm"),
        py::arg("threshold_nm") = 100.0);
  m.def(
      "blind_test_split",
      [](const std::vector<double>& labels, std::uint64_t seed, bool stratify) {
        const Split s = blind_test_split(labels, seed, stratify);
        return py::make_tuple(s.train, s.test);
      },
      py::arg("labels"), py::arg("seed"), py::arg("stratify") = true);

  py::class_<Fingerprint>(m, "Fingerprint")
      .def_property_readonly("size", &Fingerprint::size)
      .def("count", &Fingerprint::count)
      .def("test", &Fingerprint::test, py::arg("bit"))
      .def("hex", &Fingerprint::to_hex)
      .def(py::self == py::self);
  m.def("fingerprint", [](const Molecule& mol, int bits) { return fingerprint(mol, bits); }, py::arg("molecule"),
        py::arg("bits") = kFingerprintBits);
  m.def("tanimoto", &tanimoto, py::arg("a"), py::arg("b"));
  m.def(
      "cluster",
      [](const py::iterable& molecules, double threshold, int workers) {
        const auto mols = as_molecules(molecules);
        const ClusterReport r = cluster(fingerprints(mols, workers), threshold);
        py::dict out = to_python(r.summary());
        out["assignment"] = r.assignment;
        out["sizes"] = r.sizes;
        out["leaders"] = r.leaders;
        return out;
      },
      py::arg("molecules"), py::arg("threshold") = 0.70, py::arg("workers") = 1);
  m.def("shannon_entropy", [](const std::vector<int>& sizes) { return shannon_entropy(sizes); }, py::arg("sizes"));
}
