"""Placement metrics on hand-solvable fixtures (exact to rounding)."""

import json
import math

import numpy as np
import pytest

from hydrosite import build_clusters, compute_metrics, score
from hydrosite.evaluation import CSV_HEADER, DEFAULT_RADIUS


def test_single_pair_one_angstrom():
    rep = score([[0.0, 0.0, 0.0]], [[1.0, 0.0, 0.0]])
    assert rep.n == 1 and rep.m == 1 and rep.n_star == 1
    assert rep.coverage == 1.0
    assert rep.p_star == pytest.approx(0.5, abs=1e-12)
    assert rep.defined
    assert rep.p_mean == pytest.approx(0.5, abs=1e-12)
    assert rep.cs_mean == pytest.approx(1.0, abs=1e-12)
    # single cluster: spreads are zero by convention
    assert rep.p_ci95 == 0.0 and rep.cs_ci95 == 0.0
    assert rep.cv_p == 0.0 and rep.cv_cs == 0.0


def test_two_predictions_one_reference():
    rep = score([[0.0, 0.0, 0.0]], [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    assert rep.p_star == pytest.approx(1.0, abs=1e-12)
    assert rep.p_mean == pytest.approx(0.75, abs=1e-12)
    assert rep.cs_mean == pytest.approx(2.0, abs=1e-12)
    assert rep.coverage == 1.0 and rep.n_star == 1


def test_half_coverage():
    rep = score([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]], [[0.0, 0.0, 0.0]])
    assert rep.n_star == 1
    assert rep.coverage == 0.5
    # empty cluster contributes 0 to the best-match average
    assert rep.p_star == pytest.approx(0.5, abs=1e-12)
    assert rep.p_mean == pytest.approx(1.0, abs=1e-12)
    assert rep.cs_mean == pytest.approx(1.0, abs=1e-12)


def test_ci_hand_value():
    # clusters with mean similarities 1.0 and 0.5: sd = sqrt(0.125),
    # ci95 = 1.96 * sd / sqrt(2) = 0.49
    rep = score([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]],
                [[0.0, 0.0, 0.0], [11.0, 0.0, 0.0]])
    assert rep.n_star == 2
    sd = math.sqrt(0.125)
    assert rep.p_mean == pytest.approx(0.75, abs=1e-12)
    assert rep.p_ci95 == pytest.approx(0.49, abs=1e-12)
    assert rep.cv_p == pytest.approx(sd / 0.75, abs=1e-12)
    assert rep.cs_ci95 == 0.0 and rep.cv_cs == 0.0


def test_radius_boundary_closed():
    cw = [[0.0, 0.0, 0.0]]
    inside = score(cw, [[3.0, 0.0, 0.0]])
    assert inside.n_star == 1
    assert inside.p_star == pytest.approx(0.25, abs=1e-12)
    outside = score(cw, [[3.5, 0.0, 0.0]])
    assert outside.n_star == 0 and not outside.defined
    wider = score(cw, [[3.5, 0.0, 0.0]], radius=4.0)
    assert wider.n_star == 1


def test_shared_prediction_counts_in_both_clusters():
    rep = score([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]], [[1.0, 0.0, 0.0]])
    assert rep.n_star == 2 and rep.m == 1
    assert rep.cs_mean == pytest.approx(1.0, abs=1e-12)
    assert rep.p_mean == pytest.approx(0.5, abs=1e-12)
    assert rep.p_star == pytest.approx(0.5, abs=1e-12)


def test_no_predictions_undefined():
    rep = score([[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]], np.empty((0, 3)))
    assert rep.n == 2 and rep.m == 0 and rep.n_star == 0
    assert not rep.defined
    assert rep.coverage == 0.0 and rep.p_star == 0.0
    assert rep.p_mean is None and rep.cs_mean is None
    row = rep.to_csv_row()
    assert row.split(",")[2] == ""  # P_mean cell empty, not zero
    assert row.split(",")[8:] == ["2", "0", "0"]


def test_cluster_membership_details():
    clusters = build_clusters([[0.0, 0.0, 0.0]],
                              [[0.5, 0.0, 0.0], [9.0, 0.0, 0.0],
                               [0.0, 2.0, 0.0]])
    assert len(clusters) == 1
    c = clusters[0]
    assert c.cw_index == 0
    assert list(c.members) == [0, 2]
    assert c.similarities == pytest.approx([1 / 1.5, 1 / 3.0], abs=1e-12)
    assert c.best == pytest.approx(1 / 1.5, abs=1e-12)
    assert c.size == 2 and c.identified


def test_build_clusters_validation():
    with pytest.raises(ValueError, match="zero reference"):
        build_clusters(np.empty((0, 3)), [[0.0, 0.0, 0.0]])
    with pytest.raises(ValueError, match="radius"):
        build_clusters([[0.0, 0.0, 0.0]], [[0.0, 0.0, 0.0]], radius=0.0)
    with pytest.raises(ValueError, match="clusters for n"):
        compute_metrics(build_clusters([[0.0, 0.0, 0.0]], []), n=2, m=0)


def test_report_serialization():
    rep = score([[0.0, 0.0, 0.0]], [[1.0, 0.0, 0.0]], radius=2.5)
    d = rep.to_dict()
    assert set(d) == {"n", "m", "n_star", "C", "P_star", "defined", "P_mean",
                      "P_ci95", "CS_mean", "CS_ci95", "cv_P", "cv_CS",
                      "radius", "clusters"}
    assert d["radius"] == 2.5
    assert d["clusters"] == [
        {"cw_index": 0, "size": 1, "best_S": 0.5, "mean_S": 0.5}]
    assert json.loads(rep.to_json()) == json.loads(json.dumps(d))
    row = rep.to_csv_row()
    assert len(row.split(",")) == len(CSV_HEADER.split(","))
    assert float(row.split(",")[0]) == 1.0


def test_default_radius():
    assert DEFAULT_RADIUS == 3.0
    a = score([[0.0, 0.0, 0.0]], [[2.9, 0.0, 0.0]])
    assert a.radius == 3.0 and a.n_star == 1
