"""Synthetic non-IID client shards.

Each client k gets a latent feature shift ``mu_k`` and a latent concept shift
``w_k - w_true``; both scale linearly with ``heterogeneity`` so that 0 is IID.
"""

from __future__ import annotations

import numpy as np

from ..scenario import STREAM_DATA


def generate_noniid_data(
    seed: int,
    clients: int,
    samples_per_client,
    heterogeneity: float = 0.5,
    *,
    dim: int = 10,
    kind: str = "linear",
    feature_shift: float = 1.0,
    concept_shift: float = 1.0,
    noise_std: float = 0.1,
):
    """Return a list of ``(X, y)`` shards, one per client."""
    if not 0.0 <= heterogeneity <= 1.0:
        raise ValueError(f"heterogeneity must lie in [0, 1], got {heterogeneity}")
    if kind not in ("linear", "logistic"):
        raise ValueError(f"data kind must be 'linear' or 'logistic', got {kind!r}")
    counts = np.broadcast_to(np.asarray(samples_per_client, dtype=int), (clients,))
    rng = np.random.default_rng(np.random.SeedSequence([seed, STREAM_DATA]))
    w_true = rng.standard_normal(dim)
    shards = []
    for k in range(clients):
        mu = heterogeneity * feature_shift * rng.standard_normal(dim)
        w_k = w_true + heterogeneity * concept_shift * rng.standard_normal(dim)
        X = mu + rng.standard_normal((counts[k], dim))
        score = X @ w_k + noise_std * rng.standard_normal(counts[k])
        if kind == "linear":
            y = score
        else:
            y = np.where(score >= 0.0, 1.0, -1.0)
        shards.append((X, y))
    return shards
