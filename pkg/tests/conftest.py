import dataclasses

import pytest

from hydrosdp import ccp, conic, cuts, model, shor


@pytest.fixture(scope="session")
def paranaiba():
    return model.load_bundled_case("paranaiba")


@pytest.fixture(scope="session")
def mini():
    return model.load_bundled_case("mini")


@pytest.fixture(scope="session")
def shor_solution(paranaiba):
    """(problem, layout, solution) for the plain relaxation."""
    problem, layout = shor.build_relaxation(paranaiba)
    sol = conic.solve(problem)
    assert sol.status == conic.Status.OPTIMAL
    return problem, layout, sol


@pytest.fixture(scope="session")
def rlt_solution(paranaiba):
    """(problem, layout, solution) for the cut-tightened relaxation."""
    problem, layout = shor.build_relaxation(paranaiba)
    cuts.apply_cuts(problem, layout, cuts.build_cutset(paranaiba))
    sol = conic.solve(problem)
    assert sol.status == conic.Status.OPTIMAL
    return problem, layout, sol


@pytest.fixture(scope="session")
def ccp_run(paranaiba):
    """(schedule, trace) of the full CCP run at the default eps=1e-2."""
    return ccp.ccp_solve(paranaiba)


def zero_eps_qv(case: model.CaseStudy) -> model.CaseStudy:
    """Copy of a case with every bilinear production coefficient removed."""
    hydro = tuple(
        dataclasses.replace(
            h, production=dataclasses.replace(h.production, eps_qv=0.0)
        )
        for h in case.hydro
    )
    return dataclasses.replace(case, hydro=hydro)


def single_plant_reduction() -> model.CaseStudy:
    """1-plant / 3-period concave case used for oracle cross-checks."""
    return model.CaseStudy(
        hydro=(
            model.HydroPlant(
                id="H1",
                v_min=228.3,
                v_max=241.1,
                q_min=65.0,
                q_max=483.0,
                v_initial=241.1,
                v_final=241.1,
                production=model.ProductionQuadratic(
                    eps_q=0.297, eps_qq=-3.06e-5, eps_qv=0.0
                ),
            ),
        ),
        thermal=(model.ThermalPlant(id="T1", p_min=0.0, p_max=400.0, c2=0.5),),
        horizon=model.Horizon(
            periods=(model.Period(30, 300.0),) * 3,
            inflows={"H1": (300.0, 200.0, 250.0)},
        ),
        name="reduction",
    )
