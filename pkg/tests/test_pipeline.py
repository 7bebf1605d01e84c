"""Config validation, end-to-end runs, artifacts, and sweeps."""

import dataclasses
import json

import numpy as np
import pytest

from conftest import planted_scene
from hydrosite import ConfigError, EmptySiteGridError, RunConfig, \
    SolverCapError, derive_seed, parse_waters, read_qubo, run_pipeline, \
    run_sweep, solve_exact, write_artifacts
from hydrosite.pipeline import ARTIFACT_NAMES


def test_config_defaults_and_rejections():
    base = {"delta": 1.0, "tau_g": 0.1, "sigma2": 0.8}
    good = RunConfig.from_dict(dict(base))
    assert good.solver == {"name": "sa"}
    assert good.side == 15.0 and good.radius == 3.0
    assert good.pocket == "from-waters"
    cases = [
        ({**base, "bogus": 1, "junk": 2}, "unknown config key"),
        ({"delta": 1.0}, "missing required config key"),
        ({**base, "delta": -1.0}, "delta must be positive"),
        ({**base, "delta": "x"}, "delta must be a number"),
        ({**base, "tau_g": -0.5}, "tau_g must be"),
        ({**base, "sigma2": 0.0}, "sigma2 must be positive"),
        ({**base, "side": 0}, "side must be positive"),
        ({**base, "amplitude": -2}, "amplitude must be positive"),
        ({**base, "radius": 0}, "radius must be positive"),
        ({**base, "truncation_eps": -1e-9}, "truncation_eps must be"),
        ({**base, "seed": True}, "seed must be an integer"),
        ({**base, "seed": 1.5}, "seed must be an integer"),
        ({**base, "pocket": [1.0, 2.0]}, "3 coordinates"),
        ({**base, "pocket": "nonsense"}, "from-waters"),
        ({**base, "pocket": {"x": 1}}, "three numbers"),
        ({**base, "solver": {"name": "dwave"}}, "unknown solver"),
        ({**base, "solver": "sa"}, "'name' key"),
        ({**base, "solver": {"name": "exact", "sweeps": 5}},
         "unknown exact solver parameter"),
        ({**base, "solver": {"name": "sa", "num_reads": 0}}, "positive integer"),
        ({**base, "solver": {"name": "sa", "num_reads": True}}, "positive integer"),
        ({**base, "solver": {"name": "sa", "beta_hot": -1.0}}, "must be positive"),
    ]
    for raw, msg in cases:
        with pytest.raises(ConfigError, match=msg):
            RunConfig.from_dict(raw)
    with pytest.raises(ConfigError, match="JSON object"):
        RunConfig.from_dict([1, 2])


def test_config_roundtrip():
    _, _, cfg = planted_scene()
    a = RunConfig.from_dict(cfg)
    d = a.to_dict()
    assert "output_dir" not in d
    assert d["pocket"] == [5.0, 5.0, 5.0]
    assert RunConfig.from_dict(d) == a


def test_derive_seed_stable():
    assert derive_seed(0, "solver") == 1238507760281413203
    assert derive_seed(0, "solver") == derive_seed(0, "solver")
    assert derive_seed(1, "solver") != derive_seed(0, "solver")
    assert derive_seed(0, "noise") != derive_seed(0, "solver")


def test_full_run_recovers_planted_waters():
    dx, pdb, cfg = planted_scene()
    run = run_pipeline(RunConfig.from_dict(cfg), density_text=dx, pdb_text=pdb)
    assert sorted(run.artifacts) == sorted(ARTIFACT_NAMES)
    assert run.n_vars == 7 and run.n_couplings == 21
    assert run.total_gates == 2 * 3 * 21
    assert run.solve.solver == "exact"
    m = run.metrics
    assert m.coverage == 1.0 and m.p_star == 1.0
    assert m.cs_mean == 2.0  # both hits sit within 3 A of both references
    pw = parse_waters(run.artifacts["predicted_waters.pdb"])
    assert np.allclose(sorted(map(tuple, pw.positions)),
                       [[5.0, 5.0, 5.0], [5.0, 5.0, 7.0]], atol=5e-4)
    body = json.loads(run.artifacts["metrics.json"])
    assert body["C"] == 1.0 and body["defined"] is True
    manifest = json.loads(run.artifacts["manifest.json"])
    assert manifest["config"] == RunConfig.from_dict(cfg).to_dict()
    assert manifest["n_vars"] == 7 and manifest["notes"] == []


def test_run_artifacts_deterministic():
    dx, pdb, cfg = planted_scene()
    cfg["solver"] = {"name": "sa", "num_reads": 8, "sweeps": 50}
    r1 = run_pipeline(RunConfig.from_dict(cfg), density_text=dx, pdb_text=pdb)
    r2 = run_pipeline(RunConfig.from_dict(cfg), density_text=dx, pdb_text=pdb)
    for name in ARTIFACT_NAMES:
        if name != "manifest.json":  # timings/timestamps live there
            assert r1.artifacts[name] == r2.artifacts[name], name
    assert r1.solve.seed == derive_seed(11, "solver")


def test_artifacts_reload_consistently():
    dx, pdb, cfg = planted_scene()
    run = run_pipeline(RunConfig.from_dict(cfg), density_text=dx, pdb_text=pdb)
    model = read_qubo(run.artifacts["qubo.coo"], run.artifacts["qubo.json"])
    assert model.n == run.n_vars
    assert model.meta["delta"] == 2.0
    again = solve_exact(model)
    body = json.loads(run.artifacts["solve_result.json"])
    assert again.best_bitstring == body["best"]["bitstring"]
    assert again.best_cost == pytest.approx(body["best"]["cost"], rel=1e-12)
    sites_lines = run.artifacts["sites.csv"].splitlines()
    assert sites_lines[0] == "index,x,y,z"
    assert len(sites_lines) == run.n_vars + 1
    pca_lines = run.artifacts["pca.csv"].splitlines()
    assert pca_lines[0] == "set,label,pc1,pc2"
    assert len(pca_lines) == 1 + 2 + 2


def test_pocket_from_waters():
    dx, pdb, cfg = planted_scene()
    cfg["pocket"] = "from-waters"
    run = run_pipeline(RunConfig.from_dict(cfg), density_text=dx, pdb_text=pdb)
    # box centered on the water centroid still covers both references
    assert run.n_vars <= 27
    assert run.metrics.coverage == 1.0


def test_run_without_reference_waters():
    dx, _, cfg = planted_scene()
    run = run_pipeline(RunConfig.from_dict(cfg), density_text=dx, pdb_text="END\n")
    assert run.metrics is None
    body = json.loads(run.artifacts["metrics.json"])
    assert body == {"defined": False, "m": 2, "n": 0,
                    "reason": "no reference waters in pocket box"}
    assert run.artifacts["pca.csv"] == "set,label,pc1,pc2\n"
    notes = json.loads(run.artifacts["manifest.json"])["notes"]
    assert len(notes) == 2


def test_missing_input_errors():
    dx, pdb, cfg = planted_scene()
    with pytest.raises(ConfigError, match="density_path is missing"):
        run_pipeline(RunConfig.from_dict(cfg), pdb_text=pdb)
    with pytest.raises(ConfigError, match="pdb_path is missing"):
        run_pipeline(RunConfig.from_dict(cfg), density_text=dx)
    cfg["pocket"] = "from-waters"
    with pytest.raises(ConfigError, match="has no waters"):
        run_pipeline(RunConfig.from_dict(cfg), density_text=dx, pdb_text="END\n")


def test_solver_caps_checked_against_grid_size():
    dx, pdb, cfg = planted_scene()
    cfg["delta"] = 1.0  # 68 candidate sites
    for name in ("exact", "qaoa"):
        cfg["solver"] = {"name": name}
        with pytest.raises(SolverCapError, match="68 variables"):
            run_pipeline(RunConfig.from_dict(cfg), density_text=dx, pdb_text=pdb)


def test_empty_site_grid_error():
    dx, pdb, cfg = planted_scene()
    cfg["tau_g"] = 99.0
    with pytest.raises(EmptySiteGridError, match="no candidate sites"):
        run_pipeline(RunConfig.from_dict(cfg), density_text=dx, pdb_text=pdb)


def test_write_artifacts(tmp_path):
    arts = {"a.txt": "hello\n", "b.json": "{}\n"}
    write_artifacts(arts, tmp_path / "out")
    for name, text in arts.items():
        assert (tmp_path / "out" / name).read_text() == text


def test_sweep_over_delta_with_fit():
    dx, pdb, cfg = planted_scene()
    cfg["solver"] = {"name": "greedy", "num_reads": 2}
    base = RunConfig.from_dict(cfg)
    sw = run_sweep(base, {"delta": [2.0, 1.0, 0.5]}, fit_target_n=900,
                   density_text=dx, pdb_text=pdb)
    assert [r.status for r in sw.rows] == ["ok"] * 3
    assert [r.n_vars for r in sw.rows] == [7, 68, 504]
    lines = sw.csv_text.splitlines()
    assert len(lines) == 4
    assert lines[0] == ("row,delta,tau_g,sigma2,solver,status,error,n_vars,"
                        "coupling_edges,total_gates,runtime_s,C,P_star,P_mean,"
                        "P_ci95,CS_mean,CS_ci95,cv_P,cv_CS,n,m,n_star")
    cells = lines[1].split(",")
    assert cells[0] == "0" and cells[5] == "ok" and cells[7] == "7"
    # all couplings survive in this small box, so gates = 3 N (N - 1)
    assert sw.fit is not None and sw.fit["convex"]
    assert sw.fit["a"] == pytest.approx(3.0, rel=1e-6)
    assert sw.fit["b"] == pytest.approx(-3.0, rel=1e-4)
    assert sw.fit["target_n"] == 900
    assert sw.fit["projected_gates"] == pytest.approx(3 * 900 * 899, abs=2)


def test_sweep_records_failures_per_row():
    dx, pdb, cfg = planted_scene()
    base = RunConfig.from_dict(cfg)
    sw = run_sweep(base, {"tau_g": [0.1, 99.0]}, density_text=dx, pdb_text=pdb)
    assert sw.rows[0].status == "ok"
    assert sw.rows[1].status == "error"
    assert sw.rows[1].error_code == "empty_site_grid"
    assert "no candidate sites" in sw.rows[1].message
    cells = sw.csv_text.splitlines()[2].split(",")
    assert cells[5] == "error" and cells[6] == "empty_site_grid"
    assert cells[11:] == [""] * 11  # metric cells stay empty, not zeroed
    assert sw.fit is None
    # invalid values surface as per-row config errors, not sweep aborts
    sw2 = run_sweep(base, {"delta": [2.0, -1.0]}, density_text=dx, pdb_text=pdb)
    assert sw2.rows[0].status == "ok"
    assert sw2.rows[1].error_code == "config_error"


def _mask_runtime(csv_text):
    lines = csv_text.splitlines()
    out = [lines[0]]
    for line in lines[1:]:
        cells = line.split(",")
        cells[10] = "T"
        out.append(",".join(cells))
    return "\n".join(out)


def test_sweep_parallel_matches_serial():
    dx, pdb, cfg = planted_scene()
    base = RunConfig.from_dict(cfg)
    axes = {"delta": [2.0, 1.0],
            "solver": ["greedy", {"name": "greedy", "num_reads": 4}]}
    sw1 = run_sweep(base, axes, max_workers=1, density_text=dx, pdb_text=pdb)
    sw4 = run_sweep(base, axes, max_workers=4, density_text=dx, pdb_text=pdb)
    assert len(sw1.rows) == 4
    assert [r.overrides["solver"]["name"] for r in sw1.rows] == ["greedy"] * 4
    assert _mask_runtime(sw1.csv_text) == _mask_runtime(sw4.csv_text)


def test_sweep_validation():
    _, _, cfg = planted_scene()
    base = RunConfig.from_dict(cfg)
    with pytest.raises(ConfigError, match="unknown sweep axis"):
        run_sweep(base, {"amplitude": [1.0, 2.0]})
    with pytest.raises(ConfigError, match="non-empty list"):
        run_sweep(base, {"delta": []})
    with pytest.raises(ConfigError, match="max_workers"):
        run_sweep(base, {"delta": [1.0]}, max_workers=0)
    with pytest.raises(ConfigError, match="object of parameter lists"):
        run_sweep(base, [1.0])
