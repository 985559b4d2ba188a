"""End-to-end acceptance checks with pinned tolerances.

Every expected number here was produced by an independent oracle (hand
enumeration, brute-force reference code, or a frozen benchmark run) before
being asserted. Slow 3-D runs carry the ``slow`` marker.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import replace

import numpy as np
import pytest

from autosimp.bc import BoundaryConditionWarning, generate_bc
from autosimp.cli import main as cli_main
from autosimp.controllers import schedule_params
from autosimp.configurator import configure
from autosimp.evaluator import check_connectivity, evaluate
from autosimp.fem import compliance_gradient_check
from autosimp.llm import LlmBackendConfig, MockBackend
from autosimp.mesh import Mesh, mesh_from_spec
from autosimp.orchestrator import run_from_spec, strip_timings
from autosimp.solver import composed_compliance_and_gradient
from autosimp.spec import serialize_spec, validate_spec

from conftest import cantilever_raw, make_spec, mbb_raw
from test_evaluator import arrays_for, left_edge_nodes, reference_reachable
from test_orchestrator import fake_report, make_eval_fn

OFFLINE = LlmBackendConfig()

# frozen benchmark bands: reference compliance +/- 20 percent
CANTILEVER_BAND = (51.568, 77.352)
MBB_BAND = (162.488, 243.732)


def schedule_mimic_backend() -> MockBackend:
    """Chat double that answers with the published schedule's parameters."""

    def responder(system, user):
        payload = json.loads(user)
        target = schedule_params(payload["iteration"] + 1, payload["budget"])
        return {
            "p": target.p, "beta": target.beta,
            "r_min": target.r_min, "delta": target.delta,
        }

    return MockBackend(responder=responder)


@pytest.fixture(scope="module")
def benchmark_cantilever_spec():
    return make_spec(cantilever_raw(nx=60, ny=30, vf=0.5, iters=300))


@pytest.fixture(scope="module")
def ablation_runs(benchmark_cantilever_spec):
    """One solve per controller on the shared benchmark problem."""
    runs = {}
    for kind in ("schedule", "expert", "three_field", "tail_only", "fixed"):
        runs[kind] = run_from_spec(benchmark_cantilever_spec, kind, retries=0)
    runs["llm"] = run_from_spec(
        benchmark_cantilever_spec, "llm", retries=0, backend=schedule_mimic_backend()
    )
    return runs


# --- 1. sensitivity correctness ---


def test_raw_compliance_gradient_within_1e4():
    spec, mesh = make_spec(cantilever_raw(nx=8, ny=4)), Mesh(nx=8, ny=4)
    arrays = generate_bc(spec, mesh)
    gen = np.random.default_rng(5)
    rho = np.clip(0.5 + 0.25 * gen.standard_normal(mesh.n_elements), 0.05, 0.95)
    err = compliance_gradient_check(mesh, arrays, spec.material, rho, p=3.0)
    assert err < 1e-4


def test_composed_gradient_within_1e3():
    spec, mesh = make_spec(cantilever_raw(nx=8, ny=4)), Mesh(nx=8, ny=4)
    arrays = generate_bc(spec, mesh)
    gen = np.random.default_rng(6)
    rho = np.clip(0.5 + 0.2 * gen.standard_normal(mesh.n_elements), 0.05, 0.95)
    _, grad = composed_compliance_and_gradient(
        mesh, arrays, spec.material, rho, p=3.0, beta=2.0, r_min=1.5
    )
    v = gen.standard_normal(mesh.n_elements)
    v /= np.linalg.norm(v)
    h = 1e-5
    cp, _ = composed_compliance_and_gradient(
        mesh, arrays, spec.material, rho + h * v, p=3.0, beta=2.0, r_min=1.5
    )
    cm, _ = composed_compliance_and_gradient(
        mesh, arrays, spec.material, rho - h * v, p=3.0, beta=2.0, r_min=1.5
    )
    fd = (cp - cm) / (2 * h)
    assert abs(float(grad @ v) - fd) / max(abs(fd), 1e-30) < 1e-3


# --- 2. boundary conditions match hand enumeration ---


def test_bc_parity_2d_hand_enumerated():
    spec = make_spec(cantilever_raw(nx=4, ny=2))
    mesh = mesh_from_spec(spec)
    arrays = generate_bc(spec, mesh)
    # left edge nodes on a 4x2 grid: 0, 5, 10; two dofs each
    assert sorted(arrays.fixed_dofs.tolist()) == [0, 1, 10, 11, 20, 21]
    force = np.zeros(30)
    force[2 * 4 + 1] = -1.0  # node (4, 0) is index 4; its y dof is 9
    np.testing.assert_array_equal(arrays.force, force)


def test_bc_parity_3d_hand_enumerated():
    raw = {
        "domain": {"Lx": 2.0, "Ly": 2.0, "Lz": 2.0},
        "mesh": {"nx": 2, "ny": 2, "nz": 2},
        "volume_fraction": 0.5,
        "supports": [{"kind": "fixed", "edge": "left"}],
        "loads": [{"point": [2.0, 1.0, 1.0], "force": [0.0, -1.0, 0.0]}],
    }
    spec = make_spec(raw)
    mesh = mesh_from_spec(spec)
    arrays = generate_bc(spec, mesh)
    left_nodes = [iz * 9 + iy * 3 for iz in range(3) for iy in range(3)]
    expected = sorted(3 * n + a for n in left_nodes for a in range(3))
    assert sorted(arrays.fixed_dofs.tolist()) == expected
    force = np.zeros(81)
    force[3 * 14 + 1] = -1.0  # node (2,1,1) -> 1*9 + 1*3 + 2 = 14
    np.testing.assert_array_equal(arrays.force, force)


def test_force_conservation_50_random_load_sets():
    gen = np.random.default_rng(77)
    for _ in range(50):
        nx, ny = int(gen.integers(2, 12)), int(gen.integers(2, 9))
        raw = cantilever_raw(nx=nx, ny=ny)
        fx, fy = float(gen.normal()), float(gen.normal())
        px = float(gen.uniform(0.2, 3.0))
        raw["loads"] = [
            {"point": [gen.uniform(0, nx), gen.uniform(0, ny)], "force": [fx, fy]},
            {"edge": "top", "pressure": px},
        ]
        spec = make_spec(raw)
        mesh = mesh_from_spec(spec)
        with warnings.catch_warnings():
            # random points may snap onto the support; conservation still holds
            warnings.simplefilter("ignore", BoundaryConditionWarning)
            arrays = generate_bc(spec, mesh)
        fvec = arrays.force.reshape(-1, 2)
        # pressure on the top edge acts inward (-y) over the full edge length
        total_x, total_y = fx, fy - px * spec.domain.Lx
        assert float(fvec[:, 0].sum()) == pytest.approx(total_x, rel=1e-12, abs=1e-12)
        assert float(fvec[:, 1].sum()) == pytest.approx(total_y, rel=1e-12, abs=1e-12)


# --- 3. benchmark problems land in frozen bands with clean designs ---


def test_cantilever_benchmark_band_and_gates(ablation_runs):
    report = ablation_runs["schedule"]
    assert CANTILEVER_BAND[0] <= report.compliance <= CANTILEVER_BAND[1]
    assert report.passed
    for gate in report.evaluation.gates:
        assert gate.passed, gate.name
    assert report.evaluation.gate("grayness").value <= 0.05


def test_mbb_benchmark_band():
    report = run_from_spec(make_spec(mbb_raw()), "schedule", retries=0)
    assert report.passed
    assert MBB_BAND[0] <= report.compliance <= MBB_BAND[1]


# --- 4. controller ablations ---


def test_no_continuation_at_least_doubles_compliance(ablation_runs):
    ratio = ablation_runs["tail_only"].compliance / ablation_runs["schedule"].compliance
    assert ratio >= 2.0


def test_fixed_controller_stays_gray(ablation_runs):
    gray = ablation_runs["fixed"].evaluation.gate("grayness").value
    assert gray > 0.15


def test_capable_controllers_agree_within_15_percent(ablation_runs):
    values = [ablation_runs[k].compliance for k in ("schedule", "expert", "three_field", "llm")]
    assert max(values) / min(values) <= 1.15


def test_llm_controller_with_mock_backend_passes_gates(ablation_runs):
    report = ablation_runs["llm"]
    assert report.passed
    assert report.evaluation.gate("grayness").value <= 0.15


# --- 5. 3-D smoke (slow) ---


def spec_3d(iters):
    return make_spec({
        "domain": {"Lx": 30.0, "Ly": 15.0, "Lz": 8.0},
        "mesh": {"nx": 30, "ny": 15, "nz": 8},
        "volume_fraction": 0.4,
        "supports": [{"kind": "fixed", "edge": "left"}],
        "loads": [{"point": [30.0, 0.0, 4.0], "force": [0.0, -1.0, 0.0]}],
        "solve": {"max_iterations": iters, "seed": 7},
    })


@pytest.mark.slow
def test_3d_cantilever_smoke():
    start = time.time()
    report = run_from_spec(spec_3d(150), "schedule", retries=0)
    assert report.passed
    for gate in report.evaluation.gates:
        assert gate.passed, gate.name

    schedule_300 = run_from_spec(spec_3d(300), "schedule", retries=0)
    tail_300 = run_from_spec(spec_3d(300), "tail_only", retries=0)
    assert tail_300.compliance / schedule_300.compliance >= 1.8
    assert time.time() - start < 1800


# --- 6. evaluator against an independent reachability oracle ---


def _oracle_fraction(mesh, rho):
    solid = rho > 0.5
    fixed_nodes = set(left_edge_nodes(mesh))
    seeds = [
        e for e in range(mesh.n_elements)
        if solid[e] and any(int(n) in fixed_nodes for n in mesh.element_nodes[e])
    ]
    n_solid = int(solid.sum())
    if n_solid == 0:
        return 0.0
    return len(reference_reachable(mesh, solid, seeds)) / n_solid


def test_connectivity_oracle_200_random_2d_masks():
    gen = np.random.default_rng(101)
    for _ in range(200):
        mesh = Mesh(nx=int(gen.integers(3, 14)), ny=int(gen.integers(3, 10)))
        rho = (gen.random(mesh.n_elements) > gen.uniform(0.3, 0.7)).astype(float)
        arrays = arrays_for(mesh, left_edge_nodes(mesh), [mesh.node_index(mesh.nx, 0)])
        gate = check_connectivity(rho, arrays, mesh)
        assert gate.value == pytest.approx(_oracle_fraction(mesh, rho))


def test_connectivity_oracle_50_random_3d_masks():
    gen = np.random.default_rng(202)
    for _ in range(50):
        mesh = Mesh(
            nx=int(gen.integers(2, 7)), ny=int(gen.integers(2, 6)), nz=int(gen.integers(2, 5))
        )
        rho = (gen.random(mesh.n_elements) > gen.uniform(0.3, 0.7)).astype(float)
        arrays = arrays_for(
            mesh, list(mesh.edge_nodes("left")), [mesh.node_index(mesh.nx, 0, 0)]
        )
        gate = check_connectivity(rho, arrays, mesh)
        assert gate.value == pytest.approx(_oracle_fraction(mesh, rho))


# --- 7. retry loop reacts to a convergence failure ---


def test_convergence_failure_reruns_at_390_iterations():
    spec = make_spec(cantilever_raw(nx=8, ny=4, iters=300))
    eval_fn, _ = make_eval_fn([fake_report(convergence=False), fake_report()])
    report = run_from_spec(spec, retries=2, evaluate_fn=eval_fn)
    assert report.passed
    assert len(report.attempts) == 2
    assert report.attempts[0].hint.field == "max_iterations"
    assert report.attempts[0].hint.value == 390
    assert report.attempts[1].spec.solve.max_iterations == 390


# --- 8. configurator handles a fixture batch offline ---


CONFIG_FIXTURES = [
    ("steel bracket held on the left, tip loaded", cantilever_raw(nx=40, ny=20, vf=0.45)),
    ("classic mbb layout", mbb_raw(nx=60, ny=20)),
    ("short stubby cantilever", cantilever_raw(nx=24, ny=16)),
    ("deep beam with a pin and a roller", mbb_raw(nx=48, ny=24, vf=0.4)),
    ("lightweight arm at thirty percent", cantilever_raw(nx=50, ny=25, vf=0.3)),
    ("dense fill study", cantilever_raw(nx=30, ny=15, vf=0.7)),
    ("wide span", mbb_raw(nx=96, ny=24)),
    ("tiny sanity case", cantilever_raw(nx=10, ny=5)),
    ("tall column", cantilever_raw(nx=12, ny=36)),
    ("benchmark rerun", cantilever_raw(nx=60, ny=30)),
]


def test_configurator_offline_fixture_batch():
    backend = MockBackend(fixtures={prompt: cand for prompt, cand in CONFIG_FIXTURES})
    for prompt, cand in CONFIG_FIXTURES:
        spec, rails = configure(prompt, backend_config=OFFLINE, backend=backend)
        assert spec.mesh.nx == cand["mesh"]["nx"], prompt
        assert spec.mesh.ny == cand["mesh"]["ny"], prompt
        assert spec.volume_fraction == pytest.approx(cand["volume_fraction"])
        assert spec.solve.max_iterations >= 1


def test_configurator_regex_fallback_still_produces_runnable_spec():
    spec, rails = configure("cantilever 16x8 at 40% with a hole", backend_config=OFFLINE)
    assert any("pattern fallback" in r.detail for r in rails)
    small = replace(spec, solve=replace(spec.solve, max_iterations=8))
    report = run_from_spec(small, "fixed", retries=0)
    assert report.compliance > 0
    assert len(spec.passive_regions) == 1


def test_configurator_clamps_greedy_volume_fraction():
    prompt = "solid block please"
    backend = MockBackend(fixtures={prompt: cantilever_raw(volume_fraction=1.2)})
    spec, rails = configure(prompt, backend_config=OFFLINE, backend=backend)
    assert spec.volume_fraction == pytest.approx(0.9)
    assert any("volume_fraction" in r.detail for r in rails)


# --- 9. determinism and interface equivalence ---


def test_repeat_solves_byte_identical_without_timings():
    spec = make_spec(cantilever_raw(nx=20, ny=10, iters=40))
    docs = []
    for _ in range(2):
        report = run_from_spec(spec, "schedule", retries=0)
        docs.append(
            json.dumps(strip_timings(report.to_document()), sort_keys=True)
        )
    assert docs[0] == docs[1]


def test_cli_and_api_produce_identical_documents(tmp_path, capsys):
    spec = make_spec(cantilever_raw(nx=16, ny=8, iters=25))
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(serialize_spec(spec))
    out_path = tmp_path / "cli.json"

    cli_main([
        "solve", "--spec", str(spec_path), "--retries", "1", "--out", str(out_path),
    ])
    capsys.readouterr()
    cli_doc = strip_timings(json.loads(out_path.read_text()))

    api_doc = strip_timings(run_from_spec(spec, "schedule", retries=1).to_document())
    assert json.dumps(cli_doc, sort_keys=True) == json.dumps(api_doc, sort_keys=True)
