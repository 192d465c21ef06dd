import json

import numpy as np
import pytest

from hydrosdp import model


def test_paranaiba_shape(paranaiba):
    assert len(paranaiba.hydro) == 5
    assert len(paranaiba.thermal) == 1
    assert paranaiba.horizon.n_periods == 12
    assert all(paranaiba.horizon.load(t) == 1551.4 for t in range(12))


def test_paranaiba_gh3_bounds_ordered(paranaiba):
    gh3 = paranaiba.hydro_by_id("GH3")
    assert gh3.v_min == 470.0
    assert gh3.v_max == 1500.0


def test_run_of_river_flags(paranaiba):
    ror = {h.id: h.run_of_river for h in paranaiba.hydro}
    assert ror == {"GH1": False, "GH2": True, "GH3": False, "GH4": True, "GH5": True}


def test_theta_converts_hm3_to_mean_flow():
    # 1 hm^3 spread over one 30-day month is 1e6/(86400*30) m^3/s
    assert model.theta(30) == pytest.approx(1e6 / (86400 * 30), rel=0, abs=0)
    assert model.theta(31) < model.theta(28)


def test_definiteness_classification(paranaiba):
    assert model.classify_definiteness(
        paranaiba.hydro_by_id("GH1").production
    ) == model.Definiteness.INDEFINITE
    assert model.classify_definiteness(
        paranaiba.hydro_by_id("GH4").production
    ) == model.Definiteness.CONCAVE
    zero = model.ProductionQuadratic(eps_q=0.0, eps_qq=0.0, eps_qv=0.0)
    assert model.classify_definiteness(zero) == model.Definiteness.CONCAVE


def test_production_eigenvalues(paranaiba):
    p = paranaiba.hydro_by_id("GH1").production
    lam = model.eigenvalues(p)
    # Closed form (eps_qq +/- sqrt(4 eps_qv^2 + eps_qq^2)) / 2
    root = np.sqrt(4.0 * p.eps_qv**2 + p.eps_qq**2)
    assert min(lam) == pytest.approx((p.eps_qq - root) / 2, rel=1e-12)
    assert max(lam) == pytest.approx((p.eps_qq + root) / 2, rel=1e-12)
    # consistent with a generic symmetric eigensolve of the same matrix
    mat = np.array([[0.0, p.eps_qv], [p.eps_qv, p.eps_qq]])
    lo, hi = np.linalg.eigvalsh(mat)
    assert max(lam) == pytest.approx(hi, rel=1e-12)
    assert min(lam) == pytest.approx(lo, rel=1e-12)


def test_downstream_closure(paranaiba):
    assert paranaiba.downstream_closure("GH1") == ("GH1", "GH2", "GH4")
    assert paranaiba.downstream_closure("GH3") == ("GH3", "GH4")
    assert paranaiba.downstream_closure("GH5") == ("GH5",)


def _write_case(tmp_path, doc):
    path = tmp_path / "case.json"
    path.write_text(json.dumps(doc))
    return path


def _mini_doc():
    return {
        "hydro": [
            {
                "id": "H1",
                "v_min": 1.0,
                "v_max": 2.0,
                "q_min": 0.0,
                "q_max": 10.0,
                "v_initial": 2.0,
                "v_final": 2.0,
                "production": {"eps_q": 0.1, "eps_qq": -1e-4, "eps_qv": 0.0},
                "upstream": [],
            }
        ],
        "thermal": [
            {"id": "T1", "p_min": 0.0, "p_max": 10.0, "c0": 0, "c1": 0, "c2": 1.0}
        ],
        "horizon": {
            "periods": [{"days": 30, "load": 5.0}],
            "inflows": {"H1": [5.0]},
        },
    }


def test_load_rejects_inverted_bounds(tmp_path):
    doc = _mini_doc()
    doc["hydro"][0]["v_min"], doc["hydro"][0]["v_max"] = 2.0, 1.0
    doc["hydro"][0]["v_initial"] = doc["hydro"][0]["v_final"] = 1.5
    with pytest.raises(model.CaseValidationError):
        model.load_case(_write_case(tmp_path, doc))


def test_load_rejects_cycle(tmp_path):
    doc = _mini_doc()
    second = dict(doc["hydro"][0], id="H2", upstream=["H1"])
    doc["hydro"][0]["upstream"] = ["H2"]
    doc["hydro"].append(second)
    doc["horizon"]["inflows"]["H2"] = [5.0]
    with pytest.raises(model.CaseValidationError) as exc:
        model.load_case(_write_case(tmp_path, doc))
    assert "H1" in str(exc.value) or "cycle" in str(exc.value).lower()


def test_load_rejects_boundary_volume_outside_box(tmp_path):
    doc = _mini_doc()
    doc["hydro"][0]["v_final"] = 5.0
    with pytest.raises(model.CaseValidationError):
        model.load_case(_write_case(tmp_path, doc))


def test_load_rejects_inflow_length_mismatch(tmp_path):
    doc = _mini_doc()
    doc["horizon"]["inflows"]["H1"] = [5.0, 6.0]
    with pytest.raises(model.CaseValidationError):
        model.load_case(_write_case(tmp_path, doc))


def test_load_rejects_unknown_upstream(tmp_path):
    doc = _mini_doc()
    doc["hydro"][0]["upstream"] = ["NOPE"]
    with pytest.raises(model.CaseValidationError):
        model.load_case(_write_case(tmp_path, doc))


def test_evaluate_production_matches_coefficients():
    p = model.ProductionQuadratic(eps_q=0.3, eps_qq=-1e-4, eps_qv=2e-4)
    v, q = 100.0, 50.0
    expected = 0.3 * q - 1e-4 * q * q + 2e-4 * v * q
    assert model.evaluate_production(p, v, q) == pytest.approx(expected, rel=1e-14)
