"""Flood-level decision from body keypoints: "at least one person
standing in water above the knee".

The rule reads "above the knee" as occlusion: a person whose hips are
confidently detected while every knee and ankle is missing or detected
only at noise-level confidence.  The keypoint coordinates themselves
come from external pose-estimation output; this module only analyzes
them.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FormatError

HIP_JOINTS = ("left_hip", "right_hip")
KNEE_JOINTS = ("left_knee", "right_knee")
ANKLE_JOINTS = ("left_ankle", "right_ankle")


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    confidence: float

    def __post_init__(self):
        if not all(map(_finite, (self.x, self.y, self.confidence))):
            raise ValueError("keypoint fields must be finite")
        if not (0 <= self.confidence <= 1):
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")


def _finite(v) -> bool:
    try:
        return abs(float(v)) != float("inf") and float(v) == float(v)
    except (TypeError, ValueError):
        return False


@dataclass(frozen=True)
class PersonKeypoints:
    """Joint name -> Keypoint; absent joints are simply missing keys.
    Unknown joint names pass through untouched."""

    joints: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PoseRuleConfig:
    conf_present: float = 0.3
    conf_absent: float = 0.1

    def __post_init__(self):
        if not (0 <= self.conf_absent < self.conf_present <= 1):
            raise ValueError(
                f"need 0 <= conf_absent < conf_present <= 1, got "
                f"{self.conf_absent} / {self.conf_present}"
            )


@dataclass(frozen=True)
class AboveKneeResult:
    decision: int
    rationales: tuple  # one message per person, in input order


def _joints_hidden(person: PersonKeypoints, names, conf_absent: float) -> bool:
    return all(
        name not in person.joints or person.joints[name].confidence <= conf_absent
        for name in names
    )


def person_above_knee(person: PersonKeypoints, cfg: PoseRuleConfig):
    """(matched, rationale) for a single person.

    Matched means: a hip is present at conf_present or better AND every
    knee AND every ankle is absent or at conf_absent or below.
    """
    hip_ok = any(
        name in person.joints and person.joints[name].confidence >= cfg.conf_present
        for name in HIP_JOINTS
    )
    if not hip_ok:
        return False, f"no hip with confidence >= {cfg.conf_present}"
    if not _joints_hidden(person, KNEE_JOINTS, cfg.conf_absent):
        return False, f"knee visible with confidence > {cfg.conf_absent} (water below knee)"
    if not _joints_hidden(person, ANKLE_JOINTS, cfg.conf_absent):
        return False, f"ankle visible with confidence > {cfg.conf_absent} (water below knee)"
    return True, "hips visible, knees and ankles occluded"


def above_knee_decision(people, cfg: PoseRuleConfig = PoseRuleConfig()) -> AboveKneeResult:
    """1 iff some person's body is visible down to the hips but occluded
    at and below the knees; 0 otherwise (including no people)."""
    rationales = []
    decision = 0
    for person in people:
        matched, why = person_above_knee(person, cfg)
        rationales.append(why)
        if matched:
            decision = 1
    return AboveKneeResult(decision, tuple(rationales))


def parse_keypoints(doc: dict, source: str = "<keypoints>") -> list:
    """Parse the keypoint file body: {"people": [{joint: {x, y,
    confidence}, ...}, ...]}."""
    people_raw = doc.get("people")
    if not isinstance(people_raw, list):
        raise FormatError(f"{source}: expected a 'people' list")
    people = []
    for i, person_raw in enumerate(people_raw):
        if not isinstance(person_raw, dict):
            raise FormatError(f"{source}: person {i} must be a mapping of joints")
        joints = {}
        for name, rec in person_raw.items():
            try:
                joints[str(name)] = Keypoint(float(rec["x"]), float(rec["y"]), float(rec["confidence"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{source}: person {i} joint {name!r} malformed ({exc})") from None
        people.append(PersonKeypoints(joints))
    return people


def load_keypoints(path) -> list:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: keypoint file must be a JSON object")
    return parse_keypoints(doc, str(path))
