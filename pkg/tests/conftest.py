import logging

import pytest

from robolayout.core import scene_from_dict

logging.getLogger("robolayout").setLevel(logging.ERROR)


def make_scene(floor, spacing, inp, outputs, catalog=None, costs=None):
    doc = {"floor": {"min": list(floor[0]), "max": list(floor[1])}, "spacing": spacing,
           "input": list(inp),
           "outputs": [o if isinstance(o, dict) else {"pos": list(o)} for o in outputs]}
    if catalog is not None:
        doc["catalog"] = catalog
    if costs is not None:
        doc["costs"] = costs
    return scene_from_dict(doc)


@pytest.fixture
def chain_scene():
    """One usable grid point halfway between input and output."""
    return make_scene(((0, 0), (1, 0)), 0.5, (0, 0), [(1, 0)])


@pytest.fixture
def belt_scene():
    return make_scene(((0, 0), (3, 1)), 0.5, (0, 0.5), [(3, 0.5)], catalog=["UR5e", "belt"])


def random_small_scene(rng, belts=False, heavy=False, max_outputs=2):
    """Coarse random scene whose MILP solves in well under a second."""
    w = float(rng.choice([1.5, 2.0, 2.5]))
    h = float(rng.choice([0.5, 1.0]))
    n = int(rng.integers(1, max_outputs + 1))
    outs = []
    for _ in range(n):
        pos = [round(w - float(rng.uniform(0, 0.6)), 2), round(float(rng.uniform(0, h)), 2)]
        weight = float(rng.choice([1.0, 10.0])) if heavy else 1.0
        outs.append({"pos": pos, "weight": weight})
    catalog = ["UR5e", "IRB4600"] if heavy else ["UR5e"]
    if belts:
        catalog.append("belt")
    return make_scene(((0, 0), (w, h)), 0.5, (0, round(float(rng.uniform(0, h)), 2)), outs,
                      catalog=catalog)


# --- acceptance summary: one line per criterion ------------------------------------

_criteria: list[tuple[str, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    _criteria.append(("PASS" if rep.passed else "FAIL", mark.args[0], detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for verdict, name, detail in _criteria:
        terminalreporter.write_line(f"{verdict} {name}" + (f" -- {detail}" if detail else ""))
