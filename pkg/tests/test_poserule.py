import json
from pathlib import Path

import pytest

from floodkit.errors import FormatError
from floodkit.poserule import (
    Keypoint,
    PersonKeypoints,
    PoseRuleConfig,
    above_knee_decision,
    load_keypoints,
    person_above_knee,
)
from floodkit.seeding import spawn_rng

FIXTURES = Path(__file__).parent / "data" / "pose"
CFG = PoseRuleConfig()


def person(**joints):
    return PersonKeypoints({name: Keypoint(*coords) for name, coords in joints.items()})


class TestDecisionRule:
    def test_no_people(self):
        assert above_knee_decision([], CFG).decision == 0

    def test_submerged_person(self):
        p = person(
            left_hip=(10, 100, 0.9),
            right_hip=(30, 100, 0.85),
            left_knee=(10, 150, 0.05),
            right_knee=(30, 150, 0.05),
        )
        result = above_knee_decision([p], CFG)
        assert result.decision == 1
        assert "occluded" in result.rationales[0]

    def test_visible_knees(self):
        p = person(left_hip=(10, 100, 0.9), left_knee=(10, 150, 0.8))
        result = above_knee_decision([p], CFG)
        assert result.decision == 0
        assert "knee" in result.rationales[0]

    def test_visible_ankle_blocks(self):
        p = person(left_hip=(10, 100, 0.9), left_ankle=(10, 220, 0.5))
        matched, why = person_above_knee(p, CFG)
        assert not matched and "ankle" in why

    def test_no_confident_hip(self):
        p = person(left_hip=(10, 100, 0.2), left_knee=(10, 150, 0.0))
        matched, why = person_above_knee(p, CFG)
        assert not matched and "hip" in why

    def test_unknown_joints_pass_through(self):
        p = person(left_hip=(10, 100, 0.9), left_ear=(5, 10, 0.99))
        assert person_above_knee(p, CFG)[0]

    def test_rationale_per_person(self):
        people = [person(), person(left_hip=(0, 0, 0.9))]
        result = above_knee_decision(people, CFG)
        assert len(result.rationales) == 2


class TestListSemantics:
    def random_person(self, rng):
        joints = {}
        for name in ("left_hip", "right_hip", "left_knee", "right_knee", "left_ankle", "right_ankle"):
            if rng.random() < 0.8:
                joints[name] = Keypoint(
                    float(rng.random() * 100), float(rng.random() * 100), float(rng.random())
                )
        return PersonKeypoints(joints)

    def test_decision_is_or_of_individuals(self):
        rng = spawn_rng(600)
        for _ in range(30):
            people = [self.random_person(rng) for _ in range(int(rng.integers(0, 5)))]
            combined = above_knee_decision(people, CFG).decision
            individuals = [int(person_above_knee(p, CFG)[0]) for p in people]
            assert combined == int(any(individuals))
            shuffled = list(people)
            rng.shuffle(shuffled)
            assert above_knee_decision(shuffled, CFG).decision == combined

    def test_monotone_in_lowered_knee_confidence(self):
        rng = spawn_rng(601)
        for _ in range(10):
            base = self.random_person(rng)
            before = person_above_knee(base, CFG)[0]
            if not before:
                continue
            lowered = {
                name: Keypoint(kp.x, kp.y, kp.confidence * 0.5)
                if name in ("left_knee", "right_knee", "left_ankle", "right_ankle")
                else kp
                for name, kp in base.joints.items()
            }
            assert person_above_knee(PersonKeypoints(lowered), CFG)[0]


class TestFixtureFiles:
    def test_empty_scene(self):
        people = load_keypoints(FIXTURES / "empty_scene.json")
        assert above_knee_decision(people, CFG).decision == 0

    def test_submerged_above_knee(self):
        people = load_keypoints(FIXTURES / "submerged_above_knee.json")
        assert above_knee_decision(people, CFG).decision == 1

    def test_knees_visible(self):
        people = load_keypoints(FIXTURES / "knees_visible.json")
        assert above_knee_decision(people, CFG).decision == 0

    def test_malformed_names_person_index(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"people": [{}, {"left_hip": {"x": 1, "y": 2}}]}))
        with pytest.raises(FormatError, match="person 1"):
            load_keypoints(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(FormatError):
            load_keypoints(path)


class TestConfig:
    def test_band_order_enforced(self):
        with pytest.raises(ValueError):
            PoseRuleConfig(conf_present=0.1, conf_absent=0.3)

    def test_confidence_range_enforced(self):
        with pytest.raises(ValueError):
            Keypoint(0.0, 0.0, 1.5)
