import numpy as np
import pytest

from hydrosdp import conic, cuts, shor


def test_cut_counts_by_bilinear_coefficient(paranaiba):
    # plants with eps_qv > 0 get both bilinear envelopes plus the v^2 cut;
    # plants with eps_qv = 0 get the v^2 cut only
    for h in paranaiba.hydro:
        per_period = cuts.rlt_cuts_for_plant(h, 0)
        expected = 3 if h.production.eps_qv > 0 else 1
        assert len(per_period) == expected


def test_cutset_size(paranaiba):
    cs = cuts.build_cutset(paranaiba)
    with_bilinear = sum(1 for h in paranaiba.hydro if h.production.eps_qv > 0)
    expected = 12 * (3 * with_bilinear + (5 - with_bilinear))
    assert len(cs.cuts) == expected


def test_cuts_valid_on_samples(paranaiba):
    for h in paranaiba.hydro:
        for cut in cuts.rlt_cuts_for_plant(h, 0):
            worst = cuts.validate_cut(cut, h, n_samples=500, seed=1)
            assert worst <= 1e-9 * (1.0 + abs(cut.rhs)), (h.id, cut.origin)


def test_bilinear_cut_algebra(paranaiba):
    # the two bilinear envelopes encode (q_max - q)(v - v_min) >= 0 and
    # (v_max - v)(q - q_min) >= 0 on rank-1 lifts
    h = paranaiba.hydro_by_id("GH1")
    a, b, _ = cuts.rlt_cuts_for_plant(h, 0)
    rng = np.random.default_rng(3)
    for _ in range(50):
        v = rng.uniform(h.v_min - 10, h.v_max + 10)
        q = rng.uniform(h.q_min - 10, h.q_max + 10)
        x = shor.lift_hydro(v, q)
        val_a = float(np.tensordot(a.matrix, x)) - a.rhs
        val_b = float(np.tensordot(b.matrix, x)) - b.rhs
        assert val_a == pytest.approx((h.q_max - q) * (v - h.v_min), rel=1e-9, abs=1e-6)
        assert val_b == pytest.approx((h.v_max - v) * (q - h.q_min), rel=1e-9, abs=1e-6)


def test_corner_tightness(paranaiba):
    for h in paranaiba.hydro:
        corners = {
            (h.v_min, h.q_min),
            (h.v_min, h.q_max),
            (h.v_max, h.q_min),
            (h.v_max, h.q_max),
        }
        for cut in cuts.rlt_cuts_for_plant(h, 0):
            scale = 1.0 + abs(cut.rhs)
            tight = 0
            for v, q in corners:
                val = float(np.tensordot(cut.matrix, shor.lift_hydro(v, q)))
                if abs(val - cut.rhs) <= 1e-9 * scale:
                    tight += 1
            # every envelope facet is exact on at least one box edge pair
            assert tight >= 2, (h.id, cut.origin)


def test_v2_cut_always_emitted(paranaiba):
    for h in paranaiba.hydro:
        origins = [c.origin for c in cuts.rlt_cuts_for_plant(h, 0)]
        assert "v2_upper" in origins


def test_apply_cuts_adds_rows(paranaiba):
    problem, layout = shor.build_relaxation(paranaiba)
    before = problem.n_rows
    cs = cuts.build_cutset(paranaiba)
    cuts.apply_cuts(problem, layout, cs)
    assert problem.n_rows == before + len(cs.cuts)


def test_cuts_tighten_bound(shor_solution, rlt_solution):
    _, _, plain = shor_solution
    _, _, tightened = rlt_solution
    assert tightened.objective_value > plain.objective_value


def test_generic_mccormick_facets():
    xb, yb = (-1.0, 2.0), (0.5, 3.0)
    facets = cuts.generic_mccormick(xb, yb)
    assert len(facets) == 4
    rng = np.random.default_rng(7)
    for _ in range(200):
        x = rng.uniform(*xb)
        y = rng.uniform(*yb)
        w = x * y
        for coeff, const, rhs, sense in facets:
            val = float(coeff @ np.array([x, y, w])) + const
            if sense == "ge":
                assert val >= rhs - 1e-12
            else:
                assert val <= rhs + 1e-12


def test_invalid_cut_detected(paranaiba):
    h = paranaiba.hydro_by_id("GH1")
    cut = cuts.rlt_cuts_for_plant(h, 0)[0]
    bogus = cuts.Cut(
        period=cut.period,
        plant_id=cut.plant_id,
        origin="bogus",
        matrix=cut.matrix,
        rhs=cut.rhs + 1e3,  # shifted envelope no longer valid
        sense=cut.sense,
    )
    assert cuts.validate_cut(bogus, h, n_samples=200) > 0
