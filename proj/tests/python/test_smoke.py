import math

import numpy as np
import pytest

import dualgate as dg


def test_gate_time():
    two_pi = 2 * math.pi
    t = dg.gate_time(two_pi * 1.601e6, two_pi * 1.582e6)
    assert t == pytest.approx(105.263e-6, rel=1e-4)


def test_bell_fidelity_arithmetic():
    assert dg.bell_fidelity(0.982, 0.945) == pytest.approx(0.9635, abs=1e-12)
    assert dg.bell_fidelity(1.0, 1.0) == 1.0
    with pytest.raises(ValueError):
        dg.bell_fidelity(1.2, 0.5)


def test_shipped_preset_parses():
    cfg = dg.parse_config(dg.preset_path())
    assert cfg.b_gauss == pytest.approx(12.2)
    assert cfg.protocol.pair == dg.PairType.SD
    assert cfg.noise.tau_s == pytest.approx(2.6e-3)


def test_unknown_key_is_rejected(tmp_path):
    consts = dg.preset_path("ba137_constants.txt")
    p = tmp_path / "bad.cfg"
    p.write_text(f"atoms.constants_file={consts}\nnoize.tau=1\n")
    with pytest.raises(ValueError, match="line 2"):
        dg.parse_config(str(p))


def test_sweet_spot():
    c = dg.load_atomic_constants(dg.preset_path("ba137_constants.txt"))
    b = dg.find_sweet_spot(c, "D", 5.0, 20.0)
    assert 12.0 <= b <= 12.6
    assert dg.sensitivity(c, "S", 12.2) == pytest.approx(12e3, rel=0.15)


def test_spam_channel():
    out = dg.apply_spam([1.0, 0.0, 0.0, 0.0], 0.003)
    assert out == pytest.approx([0.994009, 0.002991, 0.002991, 0.000009], abs=1e-12)


def test_ideal_gate_and_parity():
    cfg = dg.paper_preset()
    cfg.gate.n_max = 3
    cfg.gate.truncation_guard = False
    res = dg.run_gate("ss", dg.NoiseModel(), cfg)
    rho = np.asarray(res.rho)
    assert rho.shape == (4, 4)
    assert np.allclose(rho, rho.conj().T)
    assert res.fidelity > 0.99
    scan = dg.parity_scan(rho, dg.default_phases(16), "ss")
    fit = dg.fit_parity(scan)
    assert fit.contrast == pytest.approx(1.0, abs=0.02)
    assert fit.residual_rms < 1e-3


def test_sampled_scan_is_deterministic():
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = rho[0, 3] = rho[3, 0] = 0.5
    a = dg.parity_scan(rho, dg.default_phases(16), "ss", shots=500, seed=7)
    b = dg.parity_scan(rho, dg.default_phases(16), "ss", shots=500, seed=7)
    assert a.parities == b.parities
    c = dg.parity_scan(rho, dg.default_phases(16), "ss", shots=500, seed=8)
    assert a.parities != c.parities
