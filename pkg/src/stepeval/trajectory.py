"""Recorded rollouts and the input processor (view selection, frame sampling,
per-subgoal windowing)."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from PIL import Image, UnidentifiedImageError

from .errors import (
    FileMissing,
    GroundTruthMismatch,
    IndexOutOfRange,
    MalformedDocument,
    MissingImage,
    UnknownView,
    ValidationError,
)
from .rubric import SubgoalRubric, validate_outcome_vector

logger = logging.getLogger(__name__)

MEDIA_TYPES = ("image/png", "image/jpeg")


@dataclass(frozen=True)
class ImageRef:
    path: Path
    media_type: str
    width: Optional[int] = None
    height: Optional[int] = None

    def read_bytes(self) -> bytes:
        return self.path.read_bytes()


@dataclass(frozen=True)
class Frame:
    timestep: int
    images: Mapping[str, ImageRef] = field(hash=False)

    @property
    def views(self) -> list[str]:
        return list(self.images)


@dataclass(frozen=True)
class Trajectory:
    id: str
    frames: tuple[Frame, ...]
    ground_truth: Optional[tuple[int, ...]] = None

    @property
    def m(self) -> int:
        return len(self.frames)

    @property
    def image_count(self) -> int:
        return sum(len(f.images) for f in self.frames)

    def image_refs(self) -> list[ImageRef]:
        return [ref for f in self.frames for ref in f.images.values()]


@dataclass(frozen=True)
class FramePolicy:
    """How frames are thinned before prompting.

    ``all`` keeps every frame, ``stride`` keeps every ``step``-th frame, and
    ``keyframes`` keeps ``count`` uniformly spaced frames. The first and last
    frame always survive.
    """

    kind: str = "all"
    step: Optional[int] = None
    count: Optional[int] = None

    def __post_init__(self):
        if self.kind == "all":
            if self.step is not None or self.count is not None:
                raise ValueError("'all' frame policy takes no parameters")
        elif self.kind == "stride":
            if not isinstance(self.step, int) or self.step < 1:
                raise ValueError("stride step must be an integer >= 1")
        elif self.kind == "keyframes":
            if not isinstance(self.count, int) or self.count < 2:
                raise ValueError("keyframe count must be an integer >= 2")
        else:
            raise ValueError(f"unknown frame policy kind {self.kind!r}")

    @classmethod
    def all(cls) -> "FramePolicy":
        return cls("all")

    @classmethod
    def stride(cls, step: int) -> "FramePolicy":
        return cls("stride", step=step)

    @classmethod
    def keyframes(cls, count: int) -> "FramePolicy":
        return cls("keyframes", count=count)

    @classmethod
    def parse(cls, value: Any) -> "FramePolicy":
        """Accept ``"all"``, ``"stride:2"``, ``"keyframes:4"`` or the dict form."""
        if isinstance(value, FramePolicy):
            return value
        if isinstance(value, str):
            kind, _, arg = value.partition(":")
            if kind == "all" and not arg:
                return cls.all()
            try:
                num = int(arg)
            except ValueError:
                raise ValueError(f"bad frame policy {value!r}") from None
            if kind == "stride":
                return cls.stride(num)
            if kind == "keyframes":
                return cls.keyframes(num)
            raise ValueError(f"bad frame policy {value!r}")
        if isinstance(value, dict):
            return cls(value.get("kind", "all"), step=value.get("step"), count=value.get("count"))
        raise ValueError(f"bad frame policy {value!r}")

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"kind": self.kind}
        if self.kind == "stride":
            d["step"] = self.step
        elif self.kind == "keyframes":
            d["count"] = self.count
        return d

    def __str__(self) -> str:
        if self.kind == "stride":
            return f"stride:{self.step}"
        if self.kind == "keyframes":
            return f"keyframes:{self.count}"
        return "all"


# -- manifest loading --------------------------------------------------------


def _image_ref(base: Path, view: str, spec: Any, where: str, manifest: Path) -> ImageRef:
    if not isinstance(spec, dict) or not isinstance(spec.get("path"), str):
        raise MalformedDocument(manifest, f"{where}.images.{view} needs a 'path'")
    media_type = spec.get("media_type", "image/png")
    if media_type not in MEDIA_TYPES:
        raise MalformedDocument(manifest, f"{where}.images.{view}: unsupported media type {media_type!r}")
    path = (base / spec["path"]).resolve()
    if not path.is_file():
        raise MissingImage(path)
    try:
        with Image.open(path) as im:
            width, height = im.size
    except (UnidentifiedImageError, OSError) as exc:
        raise MalformedDocument(manifest, f"{where}.images.{view}: unreadable image {path}") from exc
    return ImageRef(path=path, media_type=media_type, width=width, height=height)


def trajectory_from_dict(doc: Any, rubric: Optional[SubgoalRubric], base: Path,
                         manifest: Path, where: str = "trajectory") -> Trajectory:
    if not isinstance(doc, dict):
        raise MalformedDocument(manifest, f"{where} must be an object")
    tid = doc.get("id")
    if not isinstance(tid, str) or not tid:
        raise MalformedDocument(manifest, f"{where}.id must be a non-empty string")
    raw_frames = doc.get("frames")
    if not isinstance(raw_frames, list) or not raw_frames:
        raise MalformedDocument(manifest, f"{where}.frames must be a non-empty list")

    frames = []
    last_ts = -1
    for i, fdoc in enumerate(raw_frames):
        fwhere = f"{where}.frames[{i}]"
        if not isinstance(fdoc, dict):
            raise MalformedDocument(manifest, f"{fwhere} must be an object")
        ts = fdoc.get("timestep")
        if not isinstance(ts, int) or isinstance(ts, bool) or ts < 0:
            raise MalformedDocument(manifest, f"{fwhere}.timestep must be a non-negative integer")
        if ts <= last_ts:
            raise MalformedDocument(manifest, f"{fwhere}.timestep must be strictly increasing")
        last_ts = ts
        images = fdoc.get("images")
        if not isinstance(images, dict) or not images:
            raise MalformedDocument(manifest, f"{fwhere}.images must name at least one view")
        refs = {view: _image_ref(base, view, spec, fwhere, manifest) for view, spec in images.items()}
        frames.append(Frame(timestep=ts, images=refs))

    gt = doc.get("ground_truth")
    if gt is not None:
        if not isinstance(gt, list):
            raise GroundTruthMismatch(tid, "ground_truth must be a list or null")
        if rubric is not None:
            try:
                gt = validate_outcome_vector(rubric, gt)
            except ValidationError as exc:
                raise GroundTruthMismatch(tid, str(exc)) from exc
        else:
            gt = tuple(gt)
    return Trajectory(id=tid, frames=tuple(frames), ground_truth=gt)


def load_manifest(path, rubric: Optional[SubgoalRubric] = None) -> list[Trajectory]:
    path = Path(path)
    if not path.is_file():
        raise FileMissing(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedDocument(path, str(exc)) from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("trajectories"), list):
        raise MalformedDocument(path, "expected an object with a 'trajectories' list")
    base = path.resolve().parent
    out: list[Trajectory] = []
    seen: set[str] = set()
    for i, tdoc in enumerate(doc["trajectories"]):
        traj = trajectory_from_dict(tdoc, rubric, base, path, where=f"trajectories[{i}]")
        if traj.id in seen:
            raise MalformedDocument(path, f"duplicate trajectory id {traj.id!r}")
        seen.add(traj.id)
        out.append(traj)
    return out


def trajectory_to_dict(traj: Trajectory, base: Optional[Path] = None) -> dict:
    """Manifest-schema dict; image paths are made relative to ``base`` when given."""

    def rel(p: Path) -> str:
        if base is not None:
            try:
                return p.relative_to(base).as_posix()
            except ValueError:
                pass
        return str(p)

    return {
        "id": traj.id,
        "ground_truth": list(traj.ground_truth) if traj.ground_truth is not None else None,
        "frames": [
            {
                "timestep": f.timestep,
                "images": {v: {"path": rel(r.path), "media_type": r.media_type} for v, r in f.images.items()},
            }
            for f in traj.frames
        ],
    }


# -- input processor ---------------------------------------------------------


def select_views(trajectory: Trajectory, views: Sequence[str]) -> Trajectory:
    if not views:
        raise ValueError("at least one view must be selected")
    frames = []
    for frame in trajectory.frames:
        for name in views:
            if name not in frame.images:
                raise UnknownView(name, frame.timestep)
        frames.append(replace(frame, images={name: frame.images[name] for name in views}))
    return replace(trajectory, frames=tuple(frames))


def sample_positions(m: int, policy: FramePolicy) -> list[int]:
    """0-based frame positions kept by ``policy`` for a trajectory of ``m`` frames."""
    if m <= 0:
        return []
    if policy.kind == "all":
        return list(range(m))
    if policy.kind == "stride":
        keep = list(range(0, m, policy.step))
        if keep[-1] != m - 1:
            keep.append(m - 1)
        return keep
    count = policy.count
    if count >= m:
        return list(range(m))
    # round-half-up of i*(m-1)/(count-1), in integers
    span = count - 1
    keep = sorted({(2 * i * (m - 1) + span) // (2 * span) for i in range(count)})
    return keep


def sample_frames(trajectory: Trajectory, policy: FramePolicy) -> Trajectory:
    keep = sample_positions(trajectory.m, policy)
    return replace(trajectory, frames=tuple(trajectory.frames[i] for i in keep))


def window_bounds(m: int, k: int, n: int) -> tuple[int, int]:
    """Inclusive 1-based frame positions of the window for subgoal ``k`` of ``n``.

    The core span is ``ceil((k-1)*m/n)+1 .. ceil(k*m/n)``; when ``m < n`` the
    span can be empty, in which case it collapses to the frame that contains
    the span's end. One frame of context is then added on each side.
    """
    if not 1 <= k <= n:
        raise IndexOutOfRange(k, n)
    if m < 1:
        raise ValueError("trajectory has no frames")
    start = -(-(k - 1) * m // n) + 1
    end = -(-k * m // n)
    if end < start:
        start = end
    return max(1, start - 1), min(m, end + 1)


def subgoal_window(trajectory: Trajectory, k: int, n: int) -> Trajectory:
    lo, hi = window_bounds(trajectory.m, k, n)
    return replace(trajectory, frames=trajectory.frames[lo - 1:hi])
