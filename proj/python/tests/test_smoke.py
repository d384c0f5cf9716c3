# Licensed under the Apache License, Version 2.0 (the "License"); you
# may not use this file except in compliance with the License.  You
# may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
# implied.  See the License for the specific language governing
# permissions and limitations under the License.
import math
import random

import numpy as np
import pytest

import molmp

TRAIN_SMILES = [
    ("CCS(=O)(=O)N", 1), ("c1ccccc1S(=O)(=O)N", 1), ("CCCCS(=O)(=O)N", 1), ("NS(=O)(=O)c1ccc(C)cc1", 1),
    ("CCO", 0), ("c1ccccc1", 0), ("CCCCC", 0), ("CC(=O)O", 0),
]


def test_parse_and_canonical_smiles_round_trip():
    mol = molmp.parse_smiles("OC(=O)c1ccccc1")
    assert mol.atom_count == 9
    assert mol.elements.count("O") == 2
    again = molmp.parse_smiles(mol.smiles())
    assert molmp.isomorphic(mol, again)
    shuffled = molmp.parse_smiles(molmp.randomized_smiles(mol, 7))
    assert molmp.isomorphic(mol, shuffled)


def test_malformed_smiles_raises_input_error():
    with pytest.raises(molmp.InputError):
        molmp.parse_smiles("C1CC(")
    with pytest.raises(ValueError):
        molmp.parse_smiles("Xx")


def test_feature_matrix_shapes_follow_the_manifest():
    names = molmp.feature_names()
    counts = {g: sum(1 for _, group in names if group == g) for g in ("atom", "bond", "global")}
    g = molmp.featurize(molmp.parse_smiles("CC(=O)N"), label=1.0, use_3d=False)
    assert g.x.shape == (4, counts["atom"])
    assert g.edge_attr.shape == (3, counts["bond"])
    assert g.edge_index.shape == (3, 2)
    assert np.all(g.edge_index[:, 0] < g.edge_index[:, 1])
    assert g.u.shape == (counts["global"],)
    assert g.y == 1.0
    slim = molmp.featurize(molmp.parse_smiles("CC(=O)N"), exclude=[names[0][0]], use_3d=False)
    assert slim.x.shape[1] == counts["atom"] - 1
    assert len(molmp.manifest_hash()) > 0


def test_model_parameter_counts_are_ordered():
    counts = {v: molmp.Model(v).parameter_count() for v in ("BMP", "CBMP", "BMP_SN", "ABMP", "ABMP_SN", "UMP")}
    assert counts["BMP"] == counts["CBMP"]
    assert counts["BMP"] < counts["BMP_SN"] < counts["ABMP_SN"] < counts["UMP"]
    assert counts["BMP"] < counts["ABMP"] < counts["ABMP_SN"]


def test_training_predict_relevance_and_checkpoint(tmp_path):
    smiles, labels = zip(*TRAIN_SMILES)
    graphs = molmp.featurize_smiles(smiles, labels=[float(y) for y in labels])
    model = molmp.Model("BMP", hidden=16, seed=3)
    seen = []
    history = model.fit(graphs, config={"epochs": 5, "batch_size": 4}, on_epoch=lambda r: seen.append(r["epoch"]))
    assert [h["epoch"] for h in history] == [1, 2, 3, 4, 5] == seen
    assert all(math.isfinite(h["train_loss"]) for h in history)
    short = molmp.Model("BMP", hidden=16, seed=3).fit(graphs, config={"epochs": 5}, on_epoch=lambda r: r["epoch"] < 2)
    assert len(short) == 2
    probs = model.predict(graphs)
    assert len(probs) == len(graphs)
    assert all(0.0 <= p <= 1.0 for p in probs)
    rel = model.relevance(graphs)
    assert [len(r) for r in rel] == [g.n_atoms for g in graphs]
    assert all(min(r) == 0.0 and max(r) == 1.0 for r in rel)
    single = model.relevance(molmp.featurize_smiles(["C"]))
    assert single == [[0.5]]
    report = model.evaluate(graphs)
    assert report["n"] == len(graphs)

    path = str(tmp_path / "model.bin")
    model.save(path, {"note": "smoke"})
    loaded, meta = molmp.Model.load(path)
    assert meta["note"] == "smoke"
    assert loaded.predict(graphs) == probs


def test_metrics_against_direct_computation():
    rng = random.Random(5)
    labels = [float(rng.random() < 0.4) for _ in range(200)]
    scores = [rng.random() + 0.3 * y for y in labels]
    pos = [s for s, y in zip(scores, labels) if y == 1.0]
    neg = [s for s, y in zip(scores, labels) if y == 0.0]
    pairs = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    assert molmp.auc(scores, labels) == pytest.approx(pairs / (len(pos) * len(neg)), abs=1e-12)
    pred = [float(s >= 0.5) for s in scores]
    tp = sum(1 for p, y in zip(pred, labels) if p == 1 and y == 1)
    fp = sum(1 for p, y in zip(pred, labels) if p == 1 and y == 0)
    fn = sum(1 for p, y in zip(pred, labels) if p == 0 and y == 1)
    assert molmp.f1(scores, labels) == pytest.approx(2 * tp / (2 * tp + fp + fn), abs=1e-12)
    assert molmp.rmse([1.0, 2.0], [1.0, 4.0]) == pytest.approx(math.sqrt(2.0))
    assert molmp.activity_threshold([50.0, 100.0, 150.0]) == [1.0, 1.0, 0.0]
    train, test = molmp.blind_test_split(labels, 0)
    assert sorted(train + test) == list(range(len(labels)))


def test_fingerprints_and_clustering_entropy():
    a = molmp.fingerprint(molmp.parse_smiles("c1ccccc1CCO"))
    b = molmp.fingerprint(molmp.parse_smiles("OCCc1ccccc1"))
    assert a == b
    assert molmp.tanimoto(a, b) == 1.0
    assert a.size == 2048 and a.count() > 0
    report = molmp.cluster(["CCCCCCCCCCO"] * 2 + ["c1ccc2ccccc2c1"] * 2)
    assert report["clusters"] == 2
    assert report["entropy_bits"] == pytest.approx(1.0, abs=1e-15)
    assert molmp.shannon_entropy([1, 1, 1, 1]) == pytest.approx(2.0, abs=1e-15)
