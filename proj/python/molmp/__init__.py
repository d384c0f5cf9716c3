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
"""Message-passing neural networks for molecular property prediction."""

from ._molmp import (
    Fingerprint,
    Graph,
    InputError,
    InvariantError,
    Model,
    Molecule,
    accuracy,
    activity_threshold,
    auc,
    blind_test_split,
    buried_volume,
    cluster,
    descriptors,
    f1,
    feature_names,
    featurize,
    fingerprint,
    isomorphic,
    manifest_hash,
    margin_of_error,
    parse_sdf,
    parse_smiles,
    randomized_smiles,
    rmse,
    shannon_entropy,
    standardize,
    tanimoto,
)

__version__ = "0.1.0"


def featurize_smiles(smiles, labels=None, exclude=(), standardized=True):
    """Featurize SMILES strings in 2D; ``labels`` may be None or one value per string."""
    if labels is None:
        labels = [None] * len(smiles)
    if len(labels) != len(smiles):
        raise ValueError("labels and smiles differ in length")
    graphs = []
    for s, y in zip(smiles, labels):
        mol = parse_smiles(s)
        if standardized:
            mol = standardize(mol)
        graphs.append(featurize(mol, label=y, exclude=list(exclude), use_3d=False))
    return graphs


__all__ = [name for name in dir() if not name.startswith("_")]
