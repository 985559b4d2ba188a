"""Prompt-to-spec path: backend candidates, repair loop, pattern fallback."""

from __future__ import annotations

import json

import pytest

from autosimp.configurator import (
    ConfigureError,
    FallbackNoArchetype,
    configure,
    configurator_system_prompt,
    mock_backend,
    regex_fallback,
)
from autosimp.llm import BackendError, LlmBackendConfig, MockBackend

from conftest import cantilever_raw

OFFLINE = LlmBackendConfig()  # unconfigured: no HTTP backend gets built


# --- regex fallback ---


def test_fallback_cantilever_defaults():
    cand = regex_fallback("please design a cantilever beam")
    assert cand["mesh"] == {"nx": 60, "ny": 30}
    assert cand["supports"] == [{"kind": "fixed", "edge": "left"}]
    assert cand["loads"] == [{"point": [60.0, 15.0], "force": [0.0, -1.0]}]
    assert "volume_fraction" not in cand


def test_fallback_reads_mesh_and_percent():
    cand = regex_fallback("cantilever on an 80x40 grid at 35% material")
    assert cand["mesh"] == {"nx": 80, "ny": 40}
    assert cand["volume_fraction"] == pytest.approx(0.35)


def test_fallback_reads_explicit_fraction():
    cand = regex_fallback("mbb beam, volume fraction 0.42")
    assert cand["volume_fraction"] == pytest.approx(0.42)


def test_fallback_unicode_times_sign():
    cand = regex_fallback("cantilever, mesh 48×24")
    assert cand["mesh"] == {"nx": 48, "ny": 24}


def test_fallback_3d_mesh_makes_3d_cantilever():
    cand = regex_fallback("cantilever 40x20x10")
    assert cand["mesh"] == {"nx": 40, "ny": 20, "nz": 10}
    assert cand["domain"] == {"Lx": 40.0, "Ly": 20.0, "Lz": 10.0}
    assert cand["loads"] == [{"point": [40.0, 10.0, 5.0], "force": [0.0, -1.0, 0.0]}]


def test_fallback_mbb_supports():
    cand = regex_fallback("a standard MBB beam 90x30")
    assert cand["supports"] == [
        {"kind": "pin_x", "edge": "left"},
        {"kind": "pin_y", "point": [90.0, 0.0]},
    ]
    assert cand["loads"] == [{"point": [0.0, 30.0], "force": [0.0, -1.0]}]


def test_fallback_bridge_pressure_load():
    cand = regex_fallback("bridge deck, 100x40")
    assert cand["supports"] == [{"kind": "fixed", "edge": "bottom"}]
    assert cand["loads"] == [{"edge": "top", "pressure": 1.0}]


def test_fallback_simply_supported():
    cand = regex_fallback("simply supported beam 80x20")
    assert cand["supports"][0] == {"kind": "fixed", "point": [0.0, 0.0]}
    assert cand["supports"][1] == {"kind": "pin_y", "point": [80.0, 0.0]}
    assert cand["loads"] == [{"point": [40.0, 20.0], "force": [0.0, -1.0]}]


def test_fallback_hole_becomes_centered_circle():
    cand = regex_fallback("cantilever 60x30 with a hole for a pipe")
    region = cand["passive_regions"][0]
    assert region["shape"] == "circle"
    assert region["fill"] == "void"
    assert region["center"] == [30.0, 15.0]
    assert region["radius"] == pytest.approx(0.2 * 30.0)


def test_fallback_unknown_prompt_raises():
    with pytest.raises(FallbackNoArchetype):
        regex_fallback("make me a sandwich")


# --- configure: backend path ---


def good_candidate(**extra):
    raw = cantilever_raw(nx=40, ny=20, vf=0.4)
    raw.update(extra)
    return raw


def test_configure_uses_backend_candidate():
    prompt = "cantilever please"
    backend = mock_backend({prompt: good_candidate()})
    spec, rails = configure(prompt, backend_config=OFFLINE, backend=backend)
    assert spec.mesh.nx == 40 and spec.mesh.ny == 20
    assert spec.volume_fraction == pytest.approx(0.4)
    assert not any("fallback" in r.detail for r in rails)
    assert len(backend.calls) == 1


def test_configure_sends_system_prompt():
    prompt = "cantilever please"
    backend = mock_backend({prompt: good_candidate()})
    configure(prompt, backend_config=OFFLINE, backend=backend)
    system, user = backend.calls[0]
    assert system == configurator_system_prompt()
    assert user == prompt


def test_configure_repairs_once_after_junk():
    backend = MockBackend(script=["I am not JSON", good_candidate()])
    spec, rails = configure("whatever prompt", backend_config=OFFLINE, backend=backend)
    assert spec.mesh.nx == 40
    assert len(backend.calls) == 2
    repair_prompt = backend.calls[1][1]
    assert "whatever prompt" in repair_prompt
    assert "could not be used" in repair_prompt


def test_configure_junk_twice_falls_back():
    backend = MockBackend(script=["nope", "still nope"])
    spec, rails = configure("cantilever 50x25", backend_config=OFFLINE, backend=backend)
    assert len(backend.calls) == 2  # exactly one repair attempt, no third try
    assert spec.mesh.nx == 50 and spec.mesh.ny == 25
    assert any(r.action == "warned" and "fallback" in r.detail for r in rails)
    assert any(r.action == "adjusted" and "pattern fallback" in r.detail for r in rails)


def test_configure_rejected_candidate_falls_back():
    # backend answers cleanly but with an unloadable structure
    bad = good_candidate(loads=[])
    backend = MockBackend(script=[bad])
    spec, rails = configure("cantilever 50x25", backend_config=OFFLINE, backend=backend)
    assert spec.mesh.nx == 50
    assert any("REJECT_NO_LOADS" in r.detail for r in rails)


def test_configure_backend_error_falls_back():
    backend = MockBackend(script=[BackendError("connection refused")])
    spec, rails = configure("mbb beam", backend_config=OFFLINE, backend=backend)
    assert spec is not None
    assert any("fallback" in r.detail for r in rails)


def test_configure_no_backend_goes_straight_to_fallback():
    spec, rails = configure("bridge 40x20", backend_config=OFFLINE)
    assert spec.mesh.nx == 40
    assert any("pattern fallback" in r.detail for r in rails)


def test_configure_both_paths_dead_unreachable_flag():
    backend = MockBackend(script=[BackendError("dns failure"), BackendError("dns failure")])
    with pytest.raises(ConfigureError) as err:
        configure("make me a sandwich", backend_config=OFFLINE, backend=backend)
    assert err.value.backend_unreachable
    assert err.value.code == "CONFIGURE_FAILED"


def test_configure_junk_plus_no_archetype_not_unreachable():
    backend = MockBackend(script=["junk", "junk again"])
    with pytest.raises(ConfigureError) as err:
        configure("make me a sandwich", backend_config=OFFLINE, backend=backend)
    assert not err.value.backend_unreachable


def test_configure_clamps_backend_volume_fraction():
    prompt = "dense cantilever"
    backend = mock_backend({prompt: good_candidate(volume_fraction=1.2)})
    spec, rails = configure(prompt, backend_config=OFFLINE, backend=backend)
    assert spec.volume_fraction == pytest.approx(0.9)
    assert any("volume_fraction" in r.detail for r in rails)


def test_configure_fallback_spec_passes_validation_end_to_end():
    spec, _ = configure(
        "cantilever 60x30 at 50% with a hole", backend_config=OFFLINE
    )
    assert spec.volume_fraction == pytest.approx(0.5)
    assert len(spec.passive_regions) == 1
    assert spec.passive_regions[0].fill == "void"


def test_configure_fixture_json_string_candidate():
    # fixtures may hold pre-serialized JSON text rather than dicts
    prompt = "cantilever via text"
    backend = mock_backend({prompt: json.dumps(good_candidate())})
    spec, _ = configure(prompt, backend_config=OFFLINE, backend=backend)
    assert spec.mesh.nx == 40


def test_system_prompt_demands_json():
    text = configurator_system_prompt()
    assert "JSON" in text
