import math

import pytest

from hsgeo.scaling import GeneralScaling, ScalingError, ScalingSequence


def test_parse_kinds():
    assert ScalingSequence.parse("const:2")(7) == 2.0
    assert ScalingSequence.parse("power:1")(4) == 0.25
    assert ScalingSequence.parse("geometric:0.5")(3) == 0.125
    lam = ScalingSequence.parse("geometric:2^-0.5")
    assert lam(2) == pytest.approx(0.5, rel=1e-15)


def test_parse_file(tmp_path):
    path = tmp_path / "lam.txt"
    path.write_text("1.0\n0.5\n\n0.25\n")
    lam = ScalingSequence.parse(f"file:{path}")
    assert [lam(i) for i in (1, 2, 3)] == [1.0, 0.5, 0.25]
    with pytest.raises(IndexError):
        lam(4)


@pytest.mark.parametrize("descriptor", ["const:0", "const:-1", "power:-1", "geometric:1.5", "geometric:0",
                                  "nope:1", "const", "power:abc", "file:/does/not/exist"])
def test_rejects_bad_descriptors(descriptor):
    with pytest.raises(ScalingError):
        ScalingSequence.parse(descriptor)


def test_cap_rejects_large_explicit_values():
    with pytest.raises(ScalingError):
        ScalingSequence.explicit([1.0, 2e6])
    assert ScalingSequence.explicit([1.0, 2e6], cap=1e7).sup() == 2e6


def test_sup_and_power_sums():
    lam = ScalingSequence.power(1)
    assert lam.sup() == 1.0
    assert lam.power_sum(3, 2) == pytest.approx(1 + 1 / 4 + 1 / 9, rel=1e-15)
    assert lam.power_sum(0, 4) == 0.0
    assert lam.power_sum(5, 4, start=3) == pytest.approx(3**-4 + 4**-4 + 5**-4, rel=1e-15)
    # the quartic sum converges to pi^4 / 90
    assert lam.power_sum(20000, 4) == pytest.approx(math.pi**4 / 90, rel=1e-12)


def test_tail_limits():
    assert ScalingSequence.constant(2.0).tail_limit(4) == 16.0
    assert ScalingSequence.power(0).tail_limit(2) == 1.0
    assert ScalingSequence.power(1).tail_limit(2) == 0.0
    assert ScalingSequence.geometric(1).tail_limit(4) == 1.0
    assert ScalingSequence.geometric(0.5).tail_limit(4) == 0.0


def test_descriptor_roundtrips():
    for descriptor in ("const:1", "power:1", "geometric:0.70710678118654757"):
        lam = ScalingSequence.parse(descriptor)
        assert ScalingSequence.parse(lam.descriptor) == lam


def test_scalings_are_hashable_values():
    assert hash(ScalingSequence.constant(1.0)) == hash(ScalingSequence.parse("const:1"))
    assert ScalingSequence.power(1) != ScalingSequence.power(2)


def test_index_must_be_positive():
    with pytest.raises(IndexError):
        ScalingSequence.constant()(0)


def test_general_scaling():
    w = GeneralScaling({(1, 2): 0.5})
    assert w(1, 2) == 0.5
    assert w(2, 1) == 1.0
    with pytest.raises(ScalingError):
        GeneralScaling({(1, 2): 0.0})
