from __future__ import annotations

import json
from pathlib import Path

import pytest
from PIL import Image

from stepeval.rubric import SubgoalRubric
from stepeval.trajectory import Frame, ImageRef, Trajectory

TRANSFER_WATER = [
    ("pick_up_cup", "pick up cup"),
    ("align_cup", "align cup over bowl"),
    ("pour_water", "pour water"),
    ("place_cup", "place cup down"),
]


def make_png(path: Path, size=(64, 48), color=(200, 30, 30)) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.new("RGB", size, color).save(path, format="PNG")
    return path


def write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path


def rubric_doc(entries=TRANSFER_WATER, task="Transfer Water") -> dict:
    return {"task_name": task, "subgoals": [{"name": n, "description": d} for n, d in entries]}


def synthetic_trajectories(truths, image: ImageRef, frames: int = 1, views=("front",), prefix="t"):
    """In-memory trajectories sharing one image file; ids sort in list order."""
    out = []
    for j, y in enumerate(truths):
        fr = tuple(Frame(timestep=i, images={v: image for v in views}) for i in range(frames))
        out.append(Trajectory(id=f"{prefix}{j:05d}", frames=fr, ground_truth=tuple(y) if y is not None else None))
    return out


@pytest.fixture
def transfer_water() -> SubgoalRubric:
    return SubgoalRubric.from_dict(rubric_doc())


@pytest.fixture
def png(tmp_path) -> ImageRef:
    path = make_png(tmp_path / "img" / "frame.png")
    return ImageRef(path=path, media_type="image/png", width=64, height=48)


def build_fixture_dir(root: Path, truths=((1, 1, 1, 1), (1, 0, 1, 1), (1, 1, 0, 0)),
                      frames: int = 3, views=("front", "wrist"), size=(64, 48)) -> dict:
    """Rubric + manifest + real PNG frames on disk; distinct pixels per image."""
    root.mkdir(parents=True, exist_ok=True)
    write_json(root / "rubric.json", rubric_doc())
    trajectories = []
    for j, y in enumerate(truths):
        fdocs = []
        for i in range(frames):
            images = {}
            for vi, v in enumerate(views):
                rel = f"frames/traj{j}/{v}_{i}.png"
                make_png(root / rel, size=size, color=(10 * j % 256, 40 * i % 256, 90 * vi % 256))
                images[v] = {"path": rel, "media_type": "image/png"}
            fdocs.append({"timestep": i, "images": images})
        trajectories.append({"id": f"traj-{j:03d}", "ground_truth": list(y) if y is not None else None,
                             "frames": fdocs})
    write_json(root / "manifest.json", {"trajectories": trajectories})
    return {"rubric": root / "rubric.json", "manifest": root / "manifest.json", "root": root}


@pytest.fixture
def fixture_dir(tmp_path) -> dict:
    return build_fixture_dir(tmp_path / "data")


# -- acceptance summary ------------------------------------------------------

_CRITERIA: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if not item.name.startswith("test_criterion_"):
        return
    number = item.name.split("_")[2]
    title = (item.function.__doc__ or item.name).strip().splitlines()[0]
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _CRITERIA[number] = ("PASS" if rep.passed else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {int(number):>2}: {status}  {title}")
