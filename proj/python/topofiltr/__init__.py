"""Persistence diagrams, DONUT mesh generation and set-prediction tools."""

import json

import numpy as np

from . import _core
from ._core import (
    FiltrModel,
    TopoError,
    bottleneck,
    chamfer,
    hausdorff,
    hungarian,
    init_weights,
    linear_cka,
    loss_gradients,
    normalize_unit_sphere,
    permutation_ablation,
    persistence_image,
    pie,
    prediction_diagram,
    quantile_threshold,
    read_cloud,
    read_diagram_csv,
    rips_persistence,
    sample_mesh,
    scale_dataset,
    topk_vectorize,
    total_loss,
    train_linear_probe,
    verify_mesh,
    wasserstein2,
    write_cloud,
)

__version__ = "0.1.0"


def generate_dataset(count, seed=0, out_dir=None, **kwargs):
    """Generate `count` labelled DONUT samples.

    Returns (manifest dict, list of (points, 3) arrays). With `out_dir` the
    meshes, clouds and manifest.json are also written there.
    """
    manifest, clouds = _core.generate_dataset(count, seed, None if out_dir is None else str(out_dir), **kwargs)
    return json.loads(manifest), clouds


def decoder_config(model):
    return json.loads(model.config_json)


def empty_diagram():
    return np.zeros((0, 2))
