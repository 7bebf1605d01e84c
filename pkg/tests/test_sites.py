"""Candidate site lattice construction and density filtering."""

import numpy as np
import pytest

from hydrosite import DensityGrid, PocketBox, SiteGrid, build_site_grid, \
    sites_to_csv, synthesize_planted
from hydrosite.errors import EmptySiteGridError


def uniform_density(value=1.0, origin=(-10, -10, -10), spacing=1.0, n=21):
    return DensityGrid(origin=origin, spacing=[spacing] * 3, counts=(n, n, n),
                       values=np.full(n ** 3, value))


def test_lattice_count_15A_box():
    # side 15, delta 5 -> 4 points per axis (0, 5, 10, 15)
    grid = build_site_grid(uniform_density(), PocketBox(center=[0, 0, 0], side=15.0),
                           delta=5.0, tau_g=0.5, sigma2=1.0)
    assert grid.n == 64
    assert np.allclose(grid.sites[0], [-7.5, -7.5, -7.5])
    assert np.allclose(grid.sites[-1], [7.5, 7.5, 7.5])


def test_lattice_is_lexicographic():
    grid = build_site_grid(uniform_density(), PocketBox(center=[0, 0, 0], side=4.0),
                           delta=2.0, tau_g=0.5, sigma2=1.0)
    assert grid.n == 27
    order = np.lexsort((grid.sites[:, 2], grid.sites[:, 1], grid.sites[:, 0]))
    assert np.array_equal(order, np.arange(27))
    # z varies fastest along the site list
    assert np.allclose(grid.sites[1] - grid.sites[0], [0, 0, 2.0])


def test_non_divisible_side_floors():
    # side 5, delta 2 -> offsets 0, 2, 4 (3 per axis)
    grid = build_site_grid(uniform_density(), PocketBox(center=[0, 0, 0], side=5.0),
                           delta=2.0, tau_g=0.5, sigma2=1.0)
    assert grid.n == 27
    corner = np.array([-2.5, -2.5, -2.5])
    assert np.allclose(grid.sites[0], corner)
    assert np.allclose(grid.sites[-1], corner + 4.0)


def test_threshold_is_closed():
    grid = build_site_grid(uniform_density(value=0.3),
                           PocketBox(center=[0, 0, 0], side=2.0),
                           delta=1.0, tau_g=0.3, sigma2=1.0)
    assert grid.n == 27
    with pytest.raises(EmptySiteGridError):
        build_site_grid(uniform_density(value=0.3),
                        PocketBox(center=[0, 0, 0], side=2.0),
                        delta=1.0, tau_g=0.3 + 1e-12, sigma2=1.0)


def test_cell_maximum_rule():
    # one hot node at (1, 1, 1) on a unit grid, everything else cold:
    # every lattice point whose enclosing cell touches that node survives
    values = np.zeros((4, 4, 4))
    values[1, 1, 1] = 5.0
    density = DensityGrid(origin=[0, 0, 0], spacing=[1, 1, 1], counts=(4, 4, 4),
                          values=values.reshape(-1))
    box = PocketBox(center=[1.5, 1.5, 1.5], side=3.0)
    grid = build_site_grid(density, box, delta=0.5, tau_g=1.0, sigma2=1.0)
    # a point's enclosing cell is [floor(p), floor(p)+1]; cells [0,1] and
    # [1,2] touch the hot node, so kept coordinates are 0, 0.5, 1.0, 1.5
    assert np.all(grid.sites >= 0.0) and np.all(grid.sites <= 1.5)
    assert grid.n == 4 ** 3


def test_sites_outside_density_domain_dropped():
    density = uniform_density(origin=(0, 0, 0), n=11)  # domain [0, 10]^3
    box = PocketBox(center=[0, 5, 5], side=10.0)  # spills to x < 0
    grid = build_site_grid(density, box, delta=1.0, tau_g=0.5, sigma2=1.0)
    assert np.all(grid.sites[:, 0] >= 0.0)
    assert grid.n == 6 * 11 * 11  # x in {0..5}, y and z in {0..10}


def test_empty_after_domain_filter():
    density = uniform_density(origin=(100, 100, 100), n=3)
    with pytest.raises(EmptySiteGridError, match="tau_g"):
        build_site_grid(density, PocketBox(center=[0, 0, 0], side=4.0),
                        delta=1.0, tau_g=0.0, sigma2=1.0)


def test_tau_monotonicity():
    density = synthesize_planted(sites=[[0.0, 0.0, 0.0], [3.0, 1.0, -2.0]],
                                 amplitude=1.0, sigma2=1.0,
                                 origin=[-8, -8, -8], spacing=[0.5] * 3,
                                 counts=[33, 33, 33])
    box = PocketBox(center=[0, 0, 0], side=10.0)
    last = None
    for tau in (0.01, 0.05, 0.2, 0.5, 0.9):
        n = build_site_grid(density, box, delta=1.0, tau_g=tau, sigma2=1.0).n
        if last is not None:
            assert n <= last, f"tau={tau}"
        last = n
    assert build_site_grid(density, box, delta=1.0, tau_g=0.01, sigma2=1.0).n \
        > build_site_grid(density, box, delta=1.0, tau_g=0.9, sigma2=1.0).n


def test_delta_monotonicity():
    density = synthesize_planted(sites=[[0.0, 0.0, 0.0]], amplitude=1.0,
                                 sigma2=1.0, origin=[-8, -8, -8],
                                 spacing=[0.5] * 3, counts=[33, 33, 33])
    box = PocketBox(center=[0, 0, 0], side=6.0)
    ns = [build_site_grid(density, box, delta=d, tau_g=0.1, sigma2=1.0).n
          for d in (3.0, 2.0, 1.0, 0.5)]
    assert all(a < b for a, b in zip(ns, ns[1:])), ns


def test_site_grid_validation():
    with pytest.raises(ValueError, match="at least one site"):
        SiteGrid(sites=np.empty((0, 3)), sigma2=1.0, delta=1.0, tau_g=0.1,
                 source_spacing=0.5)
    with pytest.raises(ValueError, match="sigma2"):
        SiteGrid(sites=[[0, 0, 0]], sigma2=0.0, delta=1.0, tau_g=0.1,
                 source_spacing=0.5)


def test_sites_to_csv():
    grid = SiteGrid(sites=[[0.0, 0.5, 1.0], [1.0, 1.5, 2.0]], sigma2=1.0,
                    delta=1.0, tau_g=0.1, source_spacing=0.5)
    text = sites_to_csv(grid)
    lines = text.strip().split("\n")
    assert lines[0] == "index,x,y,z"
    assert lines[1] == "0,0.000000,0.500000,1.000000"
    assert len(lines) == 3
