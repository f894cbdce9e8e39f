import numpy as np
import pytest

from modesim import (
    ModeLabel,
    ModeRegistry,
    Polarization,
    UnknownModeError,
    UnsupportedModeError,
)

TE, TM = Polarization.TE, Polarization.TM


def test_register_first_insertion_gets_index_zero():
    reg = ModeRegistry()
    assert reg.register(ModeLabel("in0", TE, 0)) == 0


def test_register_is_idempotent():
    reg = ModeRegistry()
    reg.register(ModeLabel("in0", TE, 0))
    assert reg.register(ModeLabel("in0", TE, 0)) == 0
    assert reg.size == 1


def test_register_appends_in_insertion_order():
    reg = ModeRegistry()
    reg.register(ModeLabel("in0", TE, 0))
    assert reg.register(ModeLabel("bus", TE, 1)) == 1


def test_register_rejects_higher_order_tm():
    reg = ModeRegistry()
    with pytest.raises(UnsupportedModeError):
        reg.register(ModeLabel("in0", TM, 1))


def test_mode_index_lookup_and_unknown_label():
    reg = ModeRegistry()
    a = ModeLabel("a", TE, 0)
    b = ModeLabel("b", TE, 0)
    reg.register(a)
    reg.register(b)
    assert reg.index(b) == 1
    assert reg.index(a) == 0
    missing = ModeLabel("c", TE, 0)
    with pytest.raises(UnknownModeError, match="c:TE:0"):
        reg.index(missing)


def test_indices_are_a_bijection_onto_range(rng):
    ports = [f"p{i}" for i in range(8)]
    reg = ModeRegistry()
    labels = []
    for _ in range(200):
        port = ports[rng.integers(len(ports))]
        order = int(rng.integers(0, 2))
        pol = TE if order or rng.random() < 0.5 else TM
        labels.append(ModeLabel(port, pol, order))
    indices = [reg.register(lab) for lab in labels]
    # round trip: registration index equals lookup index
    assert all(reg.index(lab) == idx for lab, idx in zip(labels, indices))
    assert sorted(set(indices)) == list(range(reg.size))
    assert len(set(reg.labels)) == reg.size


def test_labels_are_value_objects():
    assert ModeLabel("x", TE, 1) == ModeLabel("x", "TE", 1)
    assert ModeLabel("x", TE, 0) != ModeLabel("x", TM, 0)
    with pytest.raises(ValueError):
        ModeLabel("", TE, 0)
    with pytest.raises(ValueError):
        ModeLabel("x", TE, -1)


def test_label_parse_round_trip():
    label = ModeLabel("bus", TM, 0)
    assert ModeLabel.parse(str(label)) == label
    with pytest.raises(ValueError):
        ModeLabel.parse("bus:TE")
    with pytest.raises(ValueError):
        ModeLabel.parse("bus:XX:0")


def test_loss_modes_are_flagged_and_idempotent_by_name():
    reg = ModeRegistry()
    reg.register(ModeLabel("a", TE, 0))
    loss = reg.register_loss("g0")
    assert reg.is_loss(loss)
    assert not reg.is_loss(ModeLabel("a", TE, 0))
    assert reg.register_loss("g0") == loss
    assert reg.size == 2
    auto1, auto2 = reg.register_loss(), reg.register_loss()
    assert auto1 != auto2


def test_copy_is_independent():
    reg = ModeRegistry([ModeLabel("a", TE, 0)])
    dup = reg.copy()
    dup.register(ModeLabel("b", TE, 0))
    assert reg.size == 1 and dup.size == 2
    assert reg == ModeRegistry([ModeLabel("a", TE, 0)])


def test_on_port_filters_by_port():
    reg = ModeRegistry()
    labels = [ModeLabel("a", TE, 0), ModeLabel("a", TM, 0), ModeLabel("b", TE, 0)]
    for lab in labels:
        reg.register(lab)
    assert reg.on_port("a") == (labels[0], labels[1])
