import json

import numpy as np
import pytest

from uctensor import balance, load_model, save_model
from uctensor.complete import CompletedTensor
from uctensor.properties import random_sparse_tensor

from conftest import TIGHT


def test_round_trip_preserves_queries(tmp_path, rng):
    tensor = random_sparse_tensor(rng, (9, 7), 0.4)
    model = balance(tensor, 1, TIGHT)
    path = tmp_path / "model.json"
    save_model(path, model, shift=2.5, native_range=(1.0, 5.0),
               users={10: 0, 11: 1}, products={100: 0}, config={"epsilon": 1e-24})

    loaded, doc = load_model(path)
    assert doc["shift"] == 2.5
    assert doc["users"] == {10: 0, 11: 1}
    original = CompletedTensor(model)
    grid = np.array([(i, j) for i in range(9) for j in range(7)])
    np.testing.assert_array_equal(loaded.values_at(grid), original.values_at(grid))
    np.testing.assert_array_equal(loaded.model.balanced.values, model.balanced.values)


def test_rejects_foreign_documents(tmp_path):
    path = tmp_path / "not_a_model.json"
    path.write_text(json.dumps({"format": "something-else", "version": 1}))
    with pytest.raises(ValueError, match="not a"):
        load_model(path)
    path.write_text(json.dumps({"format": "uctensor-model", "version": 99}))
    with pytest.raises(ValueError, match="version"):
        load_model(path)
