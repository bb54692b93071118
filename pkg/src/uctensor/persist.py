"""Model persistence: one JSON document holding everything a serving query
needs (shape, k, per-subtensor log scales, the observed entries for
verbatim passthrough/exclusion, shift, vocabularies, config echo)."""

from __future__ import annotations

import json

import numpy as np

from .balance import LatentModel
from .complete import CompletedTensor
from .tensor import ScaleSet, SparseTensor

FORMAT = "uctensor-model"
VERSION = 1


def save_model(
    path,
    model: LatentModel,
    *,
    shift: float = 0.0,
    native_range=None,
    users: dict | None = None,
    products: dict | None = None,
    config: dict | None = None,
) -> None:
    scales = model.scales
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "shape": list(model.shape),
        "k": model.k,
        "shift": shift,
        "native_range": list(native_range) if native_range is not None else None,
        "sweeps_run": model.sweeps_run,
        "final_residual": model.final_residual,
        "scales": [
            {
                "fixed_dims": list(fixed),
                "log_scale": scales._log[fixed].tolist(),
                "nonempty": scales._nonempty[fixed].astype(int).tolist(),
            }
            for fixed in scales._fams
        ],
        "entries": {
            "indices": model.source.indices.tolist(),
            "values": model.source.values.tolist(),
            "balanced_values": model.balanced.values.tolist(),
        },
        "users": [[raw, idx] for raw, idx in users.items()] if users is not None else None,
        "products": [[raw, idx] for raw, idx in products.items()] if products is not None else None,
        "config": config or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path):
    """Rebuild the completion query interface plus metadata:
    returns (CompletedTensor, doc-dict)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT:
        raise ValueError(f"{path} is not a {FORMAT} document")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    shape = tuple(doc["shape"])
    source = SparseTensor(
        shape,
        np.asarray(doc["entries"]["indices"], dtype=np.int64).reshape(-1, len(shape)),
        np.asarray(doc["entries"]["values"]),
        _sorted=True,
    )
    logs = {}
    nonempty = {}
    for block in doc["scales"]:
        fixed = tuple(block["fixed_dims"])
        logs[fixed] = np.asarray(block["log_scale"])
        nonempty[fixed] = np.asarray(block["nonempty"], dtype=bool)
    scales = ScaleSet.from_log_arrays(shape, doc["k"], logs, nonempty)
    model = LatentModel(
        source=source,
        balanced=source.with_values(np.asarray(doc["entries"]["balanced_values"])),
        scales=scales,
        sweeps_run=doc["sweeps_run"],
        final_residual=doc["final_residual"],
        residual_trace=(),
    )
    doc["users"] = dict((raw, idx) for raw, idx in doc["users"]) if doc.get("users") else None
    doc["products"] = (
        dict((raw, idx) for raw, idx in doc["products"]) if doc.get("products") else None
    )
    return CompletedTensor(model), doc
