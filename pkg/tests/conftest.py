import functools

import pytest

from talbot import tdse
from talbot.core import HE_MASS, GratingSpec, build_beam, talbot_scales

_CRITERIA = []


@pytest.fixture
def record_criterion():
    """Register one pass/fail line for the acceptance summary."""

    def record(label, passed, detail=""):
        line = f"CRITERION {label}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
        _CRITERIA.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def surface_measurement(energy=21.0, attraction=1.0, launch_height=8.0, sigma_z=3.0, n_cells=1):
    """Run a surface scattering simulation and measure the revival distance.

    Returns (BeebyReport, SurfaceResult).  Cached so that acceptance and
    unit tests share the same runs.
    """
    beam = build_beam(HE_MASS, energy)
    pot = tdse.SurfacePotential(attraction=attraction)
    cfg = tdse.SurfaceRunConfig(beam=beam, potential=pot, n_cells=n_cells,
                                launch_height=launch_height, sigma_z=sigma_z)
    res = tdse.run_surface(cfg)
    z_t = talbot_scales(beam, GratingSpec(period=pot.period)).talbot_distance
    carpet = res.carpet(2.0 * z_t, (0.0, 1.5), dz=0.02, x_cells=(-1.0, 1.0), nx=96)
    report = tdse.measure_talbot_shift(carpet, z_t, pot.well_depth, energy)
    return report, res


@pytest.fixture(scope="session")
def surface_run():
    return surface_measurement
