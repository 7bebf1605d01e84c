"""Shared test fixtures: random QUBO instances and planted problems."""

import math

import numpy as np

from hydrosite import QuboModel, SiteGrid, build_qubo, format_waters_pdb, \
    synthesize_planted, write_dx


def make_random_qubo(rng, n, edge_prob=0.5, integer=False):
    """Random symmetric QUBO; integer=True makes cost ties likely."""
    if integer:
        diag = rng.integers(-2, 3, size=n).astype(np.float64)
    else:
        diag = rng.normal(size=n)
    pairs = []
    coupling = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                v = float(rng.integers(-2, 3)) if integer else float(rng.normal())
                if v != 0.0:
                    pairs.append((i, j))
                    coupling.append(v)
    pairs = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    return QuboModel(n=n, diag=diag, pairs=pairs,
                     coupling=np.array(coupling, dtype=np.float64))


def line_instance(n_sites, peak_indices, spacing=1.0, sigma2=0.5):
    """Planted 1D problem: collinear candidate sites, unit Gaussians at
    a known subset.  Returns (model, planted_bitstring).

    The fit amplitude (2 pi sigma2)^1.5 matches unit peak height, which
    makes the planted selection the global optimum while neighbours of a
    peak stay attractive enough to act as decoy local minima.
    """
    xs = spacing * np.arange(n_sites)
    sites = np.column_stack([xs, np.zeros(n_sites), np.zeros(n_sites)])
    margin = 6.0 * np.sqrt(sigma2) + 1.0
    origin = [xs[0] - margin, -margin, -margin]
    length = xs[-1] - xs[0] + 2 * margin
    h = 0.25
    counts = [int(np.ceil(length / h)) + 1,
              int(np.ceil(2 * margin / h)) + 1,
              int(np.ceil(2 * margin / h)) + 1]
    density = synthesize_planted(sites=sites[list(peak_indices)], amplitude=1.0,
                                 sigma2=sigma2, origin=origin,
                                 spacing=[h, h, h], counts=counts)
    grid = SiteGrid(sites=sites, sigma2=sigma2, delta=spacing, tau_g=0.0,
                    source_spacing=h)
    amplitude = (2.0 * np.pi * sigma2) ** 1.5
    model = build_qubo(grid, density, amplitude=amplitude)
    bits = ["0"] * n_sites
    for idx in peak_indices:
        bits[idx] = "1"
    return model, "".join(bits)


_SCENE_TEXTS = None


def planted_scene():
    """Tiny end-to-end scene: two planted waters 2 A apart.

    Returns (density_text, pdb_text, config_dict).  With the default
    config (delta 2, side 4 box) the site grid has 7 candidates and the
    exact optimum selects exactly the two planted positions.
    """
    global _SCENE_TEXTS
    sigma2 = 0.8
    if _SCENE_TEXTS is None:
        waters = np.array([[5.0, 5.0, 5.0], [5.0, 5.0, 7.0]])
        g = synthesize_planted(sites=waters, amplitude=1.0, sigma2=sigma2,
                               origin=[1.5, 1.5, 1.5], spacing=[0.5] * 3,
                               counts=[17, 17, 17])
        _SCENE_TEXTS = (write_dx(g), format_waters_pdb(waters))
    config = {
        "delta": 2.0, "tau_g": 0.1, "sigma2": sigma2,
        "pocket": [5.0, 5.0, 5.0], "side": 4.0,
        "amplitude": (2.0 * math.pi * sigma2) ** 1.5,
        "solver": {"name": "exact"}, "seed": 11,
    }
    return _SCENE_TEXTS[0], _SCENE_TEXTS[1], config
