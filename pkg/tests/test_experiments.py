from math import sqrt

import numpy as np
import pytest

from nonlocal_meter.experiments import (
    NAMED_STATES,
    THETA1_UP,
    THETA2_UP,
    apply_visibility,
    hardy_signaling,
    named_state,
    postselect,
    run_custom,
    run_hardy,
    run_nondemolition,
    run_product_rule,
    run_reliability,
)
from nonlocal_meter.protocol import CouplingSpec, measure_nonlocal
from nonlocal_meter.qstate import X_AXIS, Y_AXIS, Z_AXIS
from nonlocal_meter.sampler import compare_counts

# amplitudes in basis order uu, ud, du, dd
PRESET_TABLE = {
    "psi1": ["1", "0", "0", "0"],
    "psi2": ["0", "sqrt(0.5)", "1j*sqrt(0.5)", "0"],
    "psi3": ["sqrt(0.5)", "sqrt(0.1)", "-1j*sqrt(0.2)", "sqrt(0.2)"],
    "singlet": ["0", "sqrt(0.5)", "-sqrt(0.5)", "0"],
}


@pytest.mark.parametrize("name", sorted(PRESET_TABLE))
def test_presets_match_table(name):
    expected = [repr(complex(eval(expr, {"sqrt": sqrt}))) for expr in PRESET_TABLE[name]]
    assert [repr(complex(a)) for a in NAMED_STATES[name]] == expected


def test_postselection_preset():
    up_y = np.array([1, 1j]) / sqrt(2)
    up_x = np.array([1, 1]) / sqrt(2)
    assert np.allclose(named_state("up_y,up_x"), np.kron(up_y, up_x), atol=1e-15)
    with pytest.raises(ValueError):
        named_state("nope")


def test_reliability_exact():
    r = run_reliability(shots=0)
    assert r.block("psi1/decoded").exact == {"+1": 1.0, "-1": 0.0}
    assert r.block("psi2/decoded").exact == {"+1": 0.0, "-1": 1.0}
    d3 = r.block("psi3/decoded").exact
    assert d3["+1"] == pytest.approx(0.7, abs=1e-10)
    assert d3["-1"] == pytest.approx(0.3, abs=1e-10)
    ports1 = r.block("psi1/ports").exact
    assert ports1["+-"] == ports1["-+"] == 0.0
    for b in r.blocks:
        assert sum(b.exact.values()) == pytest.approx(1, abs=1e-10)
        for t in b.counts.values():
            assert t.total == 0


def test_reliability_sampled_counts():
    r = run_reliability(shots=20_000, seed=3)
    for b in r.blocks:
        t = b.counts["coincidences"]
        assert t.total == 20_000
        assert compare_counts(t, b.exact).ok(4.0)


def test_reliability_visibility_spreads_counts():
    r = run_reliability(shots=10_000, seed=1, visibility=0.5)
    t = r.block("psi1/ports").counts["coincidences"]
    assert t["+-"] > 0 and t["-+"] > 0
    assert r.block("psi1/decoded").exact["+1"] == 1.0


def test_nondemolition_a_and_b():
    r = run_nondemolition(shots=0)
    a = r.block("a/psi1/branch+1").exact
    assert a["+z+z"] == pytest.approx(1, abs=1e-12)
    b = r.block("b/psi2/branch-1").exact
    assert b["+z-z"] + b["-z+z"] == pytest.approx(1, abs=1e-12)


def test_nondemolition_c_fixes_phase():
    c = run_nondemolition(shots=0).block("c/psi2/branch-1").exact
    # oracle: expand psi2 in the x (A) by y (B) product basis
    psi2 = NAMED_STATES["psi2"]
    for label, a, b in (("+x-y", X_AXIS.up(), Y_AXIS.down()), ("-x+y", X_AXIS.down(), Y_AXIS.up()),
                        ("+x+y", X_AXIS.up(), Y_AXIS.up())):
        assert c[label] == pytest.approx(abs(np.vdot(np.kron(a, b), psi2)) ** 2, abs=1e-12)
    assert c["+x-y"] + c["-x+y"] == pytest.approx(1, abs=1e-12)


def test_nondemolition_d():
    d = run_nondemolition(shots=0).block("d/psi3/branch+1").exact
    assert d["+z+z"] == pytest.approx(5 / 7, abs=1e-12)
    assert d["-z-z"] == pytest.approx(2 / 7, abs=1e-12)
    assert d["+z-z"] < 1e-14 and d["-z+z"] < 1e-14


def test_nondemolition_e_rotated_states():
    e = run_nondemolition(shots=0).block("e/psi3/branch+1").exact
    assert np.allclose(THETA1_UP, [sqrt(0.5 / 0.7), sqrt(0.2 / 0.7)])
    assert np.allclose(THETA2_UP, [sqrt(0.5 / 0.7), -sqrt(0.2 / 0.7)])
    # post state (sqrt(.5)|uu> + sqrt(.2)|dd>)/sqrt(.7) against |t_i t_j>
    for (la, a), (lb, b) in [((x, s), (y, t)) for x, s in (("+t1", 1), ("+t2", -1)) for y, t in (("+t1", 1), ("+t2", -1))]:
        amp = (sqrt(0.5) * 0.5 / 0.7 + a * b * sqrt(0.2) * 0.2 / 0.7) / sqrt(0.7)
        assert e[la + lb] == pytest.approx(amp**2, abs=1e-12)


def test_nondemolition_sampled_tables():
    r = run_nondemolition(shots=5_000, seed=9)
    for b in r.blocks:
        for label, t in b.counts.items():
            assert t.total == 5_000
            p = b.exact[label]
            assert compare_counts(t, {"pass": p if p > 1e-14 else 0.0, "blocked": 1 - p if p > 1e-14 else 1.0}).ok(4.0)


def test_product_rule_certainties():
    r = run_product_rule(shots=0)
    for name in ("a/xA*yB", "b/xA", "c/yB"):
        block = r.block(f"{name}/decoded")
        assert block.exact["-1"] == pytest.approx(1, abs=1e-12)
        assert block.info["postselection_probability"] == pytest.approx(0.25, abs=1e-10)
    assert r.block("a/xA*yB/decoded").info["joint_+1"] < 1e-14
    assert not r.impossible


def test_product_rule_postselection_oracle():
    singlet = NAMED_STATES["singlet"]
    post = NAMED_STATES["up_y,up_x"]
    result = measure_nonlocal(singlet, CouplingSpec(X_AXIS, Y_AXIS))
    # oracle: amplitude of the postselected state in each eigenspace component
    total = 0.0
    for ev in (1, -1):
        op = np.kron(X_AXIS.operator(), Y_AXIS.operator())
        proj = (np.eye(4) + ev * op) / 2
        total += abs(np.vdot(post, proj @ singlet)) ** 2
    assert postselect(result, post)["postselection_probability"] == pytest.approx(total, abs=1e-12)
    assert total == pytest.approx(0.25, abs=1e-12)


def test_product_rule_alternative_postselection():
    # postselecting down_x at B flips the inferred sign of sigma_x at A
    r = run_product_rule(shots=0, postselection="up_y,down_x")
    assert r.block("b/xA/decoded").exact["+1"] == pytest.approx(1, abs=1e-12)
    assert r.block("c/yB/decoded").exact["-1"] == pytest.approx(1, abs=1e-12)


def test_product_rule_rejection_sampling():
    r = run_product_rule(shots=100_000, seed=5)
    for name in ("a/xA*yB", "b/xA", "c/yB"):
        block = r.block(f"{name}/decoded")
        t = block.counts["accepted"]
        assert t.total + block.info["rejected"] == 100_000
        accepted = {"acc": t.total, "rej": block.info["rejected"]}
        z = (accepted["acc"] - 25_000) / sqrt(100_000 * 0.25 * 0.75)
        assert abs(z) <= 4
        assert compare_counts(t, block.exact).ok(4.0)
        ports = r.block(f"{name}/ports")
        assert compare_counts(ports.counts["accepted"], ports.exact).ok(4.0)


def test_impossible_postselection_reported():
    r = run_custom(NAMED_STATES["psi1"], CouplingSpec(Z_AXIS, Z_AXIS), shots=10,
                   postselection=np.array([0, 0, 0, 1], dtype=complex))
    assert r.impossible == ["postselected"]
    assert r.block("postselected/decoded").info["impossible"] is True


def test_custom_local_measurement():
    r = run_custom(NAMED_STATES["singlet"], CouplingSpec(None, Y_AXIS), shots=0)
    assert r.block("measurement/decoded").exact["+1"] == pytest.approx(0.5, abs=1e-12)


def test_hardy():
    h0 = hardy_signaling(0)
    h1 = hardy_signaling(1)
    assert h0["bob_found"] == pytest.approx(1, abs=1e-12)
    assert h1["bob_found"] == pytest.approx(0.5, abs=1e-12)
    # oracle: || P1 P1 |1>(|0>+|1>)/sqrt2 ||^2
    state = np.kron([0, 1], [1, 1]) / sqrt(2)
    assert h1["eigenvalue"]["1"] == pytest.approx(abs(state[3]) ** 2, abs=1e-12)
    assert h0["eigenvalue"]["0"] == pytest.approx(1, abs=1e-12)
    r = run_hardy(shots=1000, seed=2)
    assert r.block("alice0/bob").counts["events"]["found"] == 1000


def test_visibility():
    d = {"+1": 0.7, "-1": 0.3}
    assert apply_visibility(d, 1.0) == d
    assert apply_visibility(d, 0.0) == {"+1": 0.5, "-1": 0.5}
    mixed = apply_visibility(d, 0.8)
    assert mixed["+1"] == pytest.approx(0.66, abs=1e-12)
    assert mixed["-1"] == pytest.approx(0.34, abs=1e-12)
    with pytest.raises(ValueError):
        apply_visibility(d, 1.01)


def test_negative_shots_rejected():
    with pytest.raises(ValueError):
        run_reliability(shots=-1)
