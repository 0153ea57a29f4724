import numpy as np
import pytest

from splinerad.errors import GridMismatch, ParseError
from splinerad.geometry import build_layout
from splinerad.metrics import extract_bdd, extract_hpbw, extract_sll, metrics_over_band
from splinerad.proxy import (C0, CAL_PATH_FACTOR, CAL_RADIATION_COEFFICIENT, FrequencyGrid,
                             ProxyConfig, SubstrateSpec, array_pattern, calibrate_proxy,
                             cascade_input_impedance, compute_s11, electrical_lengths, evaluate,
                             export_response, gain_db, import_response, microstrip_params,
                             propagation_constant, reflection)

# Wheeler closed form (oracles.wheeler_z0) at w = 0.31 mm on the default substrate
WHEELER_Z0_031 = 50.678


@pytest.fixture(scope="module")
def ref_response():
    from splinerad.geometry import DescriptorVector
    return evaluate(DescriptorVector.reference())


def test_grid_exact_endpoints():
    f = FrequencyGrid(76e9, 78e9, 41).frequencies
    assert f[0] == 76e9 and f[20] == 77e9 and f[40] == 78e9
    assert np.allclose(np.diff(f), 50e6)


def test_grid_single_point():
    assert FrequencyGrid(77e9, 77e9, 1).frequencies.tolist() == [77e9]


def test_microstrip_z0_against_wheeler():
    z0, ee = microstrip_params(0.31e-3, SubstrateSpec(), 1.0)
    assert abs(float(z0) - WHEELER_Z0_031) < 1.0
    assert 1.0 < float(ee) < 3.0


def test_wheeler_oracle_frozen():
    from oracles import wheeler_z0
    assert wheeler_z0(0.31e-3, 0.127e-3, 3.0) == pytest.approx(WHEELER_Z0_031, abs=1e-3)


def test_dispersion_raises_eps_eff():
    _, ee = microstrip_params(0.3e-3, SubstrateSpec(), np.array([1e9, 40e9, 77e9, 500e9]))
    assert np.all(np.diff(ee) > 0) and ee[-1] < 3.0


def test_z0_falls_with_width():
    z0, _ = microstrip_params(np.array([0.1e-3, 0.3e-3, 0.9e-3]), SubstrateSpec(), 77e9)
    assert np.all(np.diff(z0) < 0)


def test_lossless_vacuum_line_phase():
    sub = SubstrateSpec(relative_permittivity=1.0, loss_tangent=0.0, conductivity=1e30)
    g, _, ee = propagation_constant(0.3e-3, sub, 77e9)
    assert float(ee) == pytest.approx(1.0)
    assert g.imag == pytest.approx(2 * np.pi * 77e9 / C0)
    assert g.real == pytest.approx(0.0, abs=1e-9)


def test_matched_line_and_quarter_wave():
    beta = 2 * np.pi
    gam = np.array([1j * beta])
    # matched: any length of 50-ohm line ending in 50 ohm
    z = cascade_input_impedance(np.array([50.0]), gam, np.array([0.37]), np.zeros(1), 1 / 50)
    assert z == pytest.approx(50.0)
    # quarter-wave 100-ohm transformer turns 200 ohm into 50 ohm
    z = cascade_input_impedance(np.array([100.0]), gam, np.array([0.25]), np.zeros(1), 1 / 200)
    assert z == pytest.approx(50.0)
    assert abs(reflection(z)) < 1e-12


def test_shunt_conductance_adds_to_load():
    # zero-length section: input admittance is the shunt plus the load
    z = cascade_input_impedance(np.array([50.0]), np.array([1j]), np.array([0.0]),
                                np.array([0.01]), 0.01)
    assert z == pytest.approx(50.0)


def test_config_validation():
    with pytest.raises(ValueError):
        ProxyConfig(theta_step=0.7)
    with pytest.raises(ValueError):
        ProxyConfig(element_factor="dipole")
    with pytest.raises(ValueError):
        ProxyConfig(polarization="cross")
    assert ProxyConfig().theta.size == 721


def test_reference_resonates_in_band(ref_response):
    s = ref_response.s11_db
    assert ref_response.frequencies[int(np.argmin(s))] == pytest.approx(77e9, abs=0.1e9)
    assert s.min() < -15.0
    assert s.max() < -9.0


def test_reference_segments_near_half_wave_multiples(ref):
    # standing-wave bends sit close to current maxima: cumulative phase near k*pi
    m = electrical_lengths(build_layout(ref), [77e9])
    off = np.degrees(m.cumulative_phase[0]) % 180.0
    assert np.all(np.minimum(off, 180.0 - off) < 25.0)


def test_reference_metrics_frozen(ref_response):
    bm = metrics_over_band(ref_response)
    a = bm.aggregates
    assert a["sll_db"] == pytest.approx(-20.908, abs=0.01)
    assert a["hpbw_deg"] == pytest.approx(16.969, abs=0.01)
    assert a["bdd_deg"] == pytest.approx(1.399, abs=0.01)
    assert a["pr_db"] == pytest.approx(19.592, abs=0.01)
    assert a["s11_db"] == pytest.approx(-9.203, abs=0.01)


def test_backends_give_same_response(ref, backend, ref_response):
    r = evaluate(ref)
    assert np.allclose(r.s11, ref_response.s11, rtol=1e-10, atol=1e-14)
    assert np.allclose(r.gain, ref_response.gain, atol=1e-9)


def test_calibration_reproduces_constants():
    c = calibrate_proxy()
    assert c.path_factor == pytest.approx(CAL_PATH_FACTOR, abs=2e-4)
    assert c.radiation_coefficient == pytest.approx(CAL_RADIATION_COEFFICIENT, abs=5e-4)


def test_path_factor_moves_resonance(ref):
    lay = build_layout(ref)
    f = np.linspace(74e9, 80e9, 241)

    def dip(eta):
        s = np.abs(compute_s11(electrical_lengths(lay, f, ProxyConfig(path_factor=eta))))
        return f[int(np.argmin(s))]

    assert dip(0.88) > dip(0.90) > dip(0.92)


def test_gain_polarization_modes():
    e = np.array([[1.0, 1.0], [0.5, 0.0]], dtype=complex)
    assert gain_db(e, polarization="co").tolist() == pytest.approx([0.0, 10 * np.log10(0.25)])
    assert gain_db(e, polarization="total")[1] == pytest.approx(10 * np.log10(0.125))
    assert gain_db(e, offset_db=5.0, polarization="co")[0] == pytest.approx(5.0)


def test_symmetric_excitation_zero_ey_and_broadside_beam():
    # mirror pairs: equal x moments, opposite y moments, positions +-y
    y = np.array([-1.5, -0.5, 0.5, 1.5]) * 2e-3
    m = np.array([[1.0, -0.3], [0.7, 0.2], [0.7, -0.2], [1.0, 0.3]], dtype=complex)
    th = np.linspace(-90, 90, 721)
    e = array_pattern(m, y, 2 * np.pi * 77e9 / C0, th)
    assert abs(e[360, 1]) < 1e-12
    assert extract_bdd(th, gain_db(e, polarization="total")) < 1e-9


def test_taper_and_aperture_properties():
    th = np.linspace(-90, 90, 7201)
    k0 = 2 * np.pi
    n = 12
    y = (np.arange(n) - (n - 1) / 2) * 0.5
    uni = np.column_stack([np.ones(n), np.zeros(n)])
    taper = 0.5 + 0.5 * np.cos(np.pi * (np.arange(n) - (n - 1) / 2) / n)
    tap = np.column_stack([taper, np.zeros(n)])
    g = lambda m, yy: gain_db(array_pattern(m, yy, k0, th, "isotropic"), polarization="co")
    assert extract_sll(th, g(tap, y)) < extract_sll(th, g(uni, y))
    y2 = (np.arange(2 * n) - (2 * n - 1) / 2) * 0.5
    uni2 = np.column_stack([np.ones(2 * n), np.zeros(2 * n)])
    assert extract_hpbw(th, g(uni2, y2)) < extract_hpbw(th, g(uni, y))


def test_response_round_trip(tmp_path, ref_response):
    grid = FrequencyGrid()
    export_response(ref_response, tmp_path / "s11.csv", tmp_path / "pat.csv")
    back = import_response(tmp_path / "s11.csv", grid, tmp_path / "pat.csv")
    assert np.array_equal(back.s11, ref_response.s11)
    assert np.allclose(back.gain, ref_response.gain, atol=1e-12)
    assert np.allclose(back.broadside, ref_response.broadside)


def test_import_interpolates_and_refuses_extrapolation(tmp_path, ref_response):
    export_response(ref_response, tmp_path / "s11.csv")
    coarse = import_response(tmp_path / "s11.csv", FrequencyGrid(76.5e9, 77.5e9, 5))
    assert coarse.s11.size == 5
    with pytest.raises(GridMismatch):
        import_response(tmp_path / "s11.csv", FrequencyGrid(75e9, 77e9, 5))


def test_import_parse_error_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# f_Hz, re_s11, im_s11\n76e9, 0.1, 0.0\n77e9, oops, 0.0\n")
    with pytest.raises(ParseError) as e:
        import_response(p, FrequencyGrid(76e9, 77e9, 2))
    assert e.value.line == 3
