import pytest

from envbridge.adapter import AdapterError, adapt_absolute_control


class AbsoluteArm:
    control_mode = "absolute"

    def __init__(self):
        self.pose = (0.0, 0.0, 0.0, 0.0)
        self.calls = 0

    def command_pose(self, x, y, z, yaw):
        self.pose = (x, y, z, yaw)
        self.calls += 1


class DeltaArm:
    control_mode = "delta"

    def __init__(self, delta_cap=0.02):
        self.delta_cap = delta_cap
        self.pose = [0.0, 0.0, 0.0, 0.0]
        self.deltas = []

    def command_delta(self, dx, dy, dz):
        assert abs(dx) <= self.delta_cap + 1e-12
        assert abs(dy) <= self.delta_cap + 1e-12
        assert abs(dz) <= self.delta_cap + 1e-12
        self.pose[0] += dx
        self.pose[1] += dy
        self.pose[2] += dz
        self.deltas.append((dx, dy, dz))

    def current_pose(self):
        return tuple(self.pose)


class RotationalArm:
    control_mode = "rotational"


def test_absolute_native_is_identity_wrapper():
    raw = AbsoluteArm()
    wrapped = adapt_absolute_control(raw)
    wrapped.move_to(0.1, 0.2, 0.3, 0.5)
    assert raw.pose == (0.1, 0.2, 0.3, 0.5)
    assert raw.calls == 1


def test_delta_native_splits_into_capped_steps():
    raw = DeltaArm(delta_cap=0.02)
    wrapped = adapt_absolute_control(raw)
    wrapped.move_to(0.1, 0.0, 0.0)  # 0.10 m at a 0.02 m cap
    assert wrapped.native_calls == 5
    assert raw.current_pose()[:3] == pytest.approx((0.1, 0.0, 0.0), abs=1e-12)


def test_delta_native_diagonal_reaches_target():
    raw = DeltaArm(delta_cap=0.05)
    wrapped = adapt_absolute_control(raw)
    wrapped.move_to(0.07, -0.04, 0.03)
    assert raw.current_pose()[:3] == pytest.approx((0.07, -0.04, 0.03), abs=1e-12)


def test_zero_distance_is_one_native_step():
    raw = DeltaArm()
    wrapped = adapt_absolute_control(raw)
    wrapped.move_to(0.0, 0.0, 0.0)
    assert wrapped.native_calls == 1


def test_rotational_only_action_space_is_refused():
    with pytest.raises(AdapterError):
        adapt_absolute_control(RotationalArm())


def test_missing_mode_is_refused():
    with pytest.raises(AdapterError):
        adapt_absolute_control(object())
