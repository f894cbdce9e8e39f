import numpy as np
import pytest

from modesim import (
    BeamSplitter,
    Circuit,
    GratingCoupler,
    ModeDemux,
    ModeLabel,
    ModeMux,
    ModeRegistry,
    PhaseShifter,
    Polarization,
    Propagation,
    compile_circuit,
)
from modesim.circuit import CircuitError
from oracle import random_unitary

TE = Polarization.TE
N_EFF = {"TE0": 2.40, "TE1": 1.80, "TM0": 1.60}


def sample2_like_registry():
    reg = ModeRegistry()
    in0 = ModeLabel("p0", TE, 0)
    in1 = ModeLabel("p1", TE, 0)
    reg.register(in0)
    reg.register(in1)
    reg.register(ModeLabel("p1", TE, 1))
    return reg, in0, in1


def test_empty_circuit_compiles_to_identity():
    reg, in0, in1 = sample2_like_registry()
    tm = compile_circuit(Circuit(reg))
    assert np.allclose(tm.matrix, np.eye(reg.size))


def test_single_stage_is_that_matrix_embedded():
    reg, in0, in1 = sample2_like_registry()
    circuit = Circuit(reg, stages=[BeamSplitter(in0, in1, 0.5)])
    tm = compile_circuit(circuit)
    direct = BeamSplitter(in0, in1, 0.5).build(reg)
    assert np.allclose(tm.matrix, direct.matrix)


def test_mux_prop0_demux_chain_is_identity_on_inputs():
    reg, in0, in1 = sample2_like_registry()
    circuit = Circuit(
        reg,
        stages=[
            ModeMux("p0", "p1"),
            Propagation("p1", 0.0, 1558.0, N_EFF),
            ModeDemux("p0", "p1"),
        ],
    )
    tm = compile_circuit(circuit)
    for label in (in0, in1):
        vec = np.zeros(reg.size, dtype=complex)
        vec[reg.index(label)] = 1.0
        assert np.allclose(tm.matrix @ vec, vec)


def test_compile_order_is_right_to_left():
    reg, in0, in1 = sample2_like_registry()
    a = BeamSplitter(in0, in1, 0.3)
    b = PhaseShifter("p0", 0.7)
    tm = compile_circuit(Circuit(reg, stages=[a, b]))
    expected = b.build(reg).matrix @ a.build(reg).matrix
    assert np.allclose(tm.matrix, expected)


def test_compile_associative_with_staging():
    reg, in0, in1 = sample2_like_registry()
    stages = [BeamSplitter(in0, in1, 0.5), PhaseShifter("p0", 0.3), BeamSplitter(in0, in1, 0.5)]
    partial = compile_circuit(Circuit(reg, stages=stages[:2]))
    appended = stages[2].build(reg).matrix @ partial.matrix
    full = compile_circuit(Circuit(reg, stages=stages))
    assert np.max(np.abs(appended - full.matrix)) <= 1e-12


def test_disjoint_stages_commute():
    reg = ModeRegistry()
    labels = [ModeLabel(p, TE, 0) for p in ("a", "b", "c", "d")]
    for lab in labels:
        reg.register(lab)
    s1 = BeamSplitter(labels[0], labels[1], 0.4)
    s2 = BeamSplitter(labels[2], labels[3], 0.7)
    one = compile_circuit(Circuit(reg, stages=[s1, s2]))
    other = compile_circuit(Circuit(reg, stages=[s2, s1]))
    assert np.allclose(one.matrix, other.matrix)


def test_compiled_presets_unitary_with_loss_modes():
    reg, in0, in1 = sample2_like_registry()
    circuit = Circuit(
        reg,
        stages=[
            GratingCoupler(in0, 0.3),
            ModeMux("p0", "p1"),
            Propagation("p1", 30.0, 1558.0, N_EFF),
            ModeDemux("p0", "p1"),
            GratingCoupler(in1, 0.3),
        ],
    )
    tm = compile_circuit(circuit)
    assert tm.unitarity_defect() <= 1e-10
    assert len(reg.loss_indices) == 2
    # recompilation does not grow the registry
    size = reg.size
    compile_circuit(circuit)
    assert reg.size == size


def test_single_photon_probability_conservation(rng):
    reg = ModeRegistry()
    labels = [ModeLabel(f"m{i}", TE, 0) for i in range(4)]
    for lab in labels:
        reg.register(lab)
    stages = [
        BeamSplitter(labels[0], labels[1], 0.5),
        PhaseShifter("m1", 0.9),
        BeamSplitter(labels[1], labels[2], 0.25),
        BeamSplitter(labels[2], labels[3], 0.8),
    ]
    tm = compile_circuit(Circuit(reg, stages=stages))
    for k in range(4):
        vec = np.zeros(reg.size, dtype=complex)
        vec[k] = 1.0
        out = tm.matrix @ vec
        assert abs(np.sum(np.abs(out) ** 2) - 1.0) <= 1e-10


def test_registry_growth_mid_compile_is_rejected():
    reg, in0, in1 = sample2_like_registry()

    class Grower(BeamSplitter):
        def build(self, registry, convention="symmetric", **kwargs):
            registry.register(ModeLabel("extra", TE, 0))
            return super().build(registry, convention)

    circuit = Circuit(reg, stages=[Grower(in0, in1, 0.5), BeamSplitter(in0, in1, 0.5)])
    with pytest.raises(CircuitError, match="registry grew"):
        compile_circuit(circuit)


# -- validate ------------------------------------------------------------------


def test_validate_clean_circuit_returns_empty_list():
    reg, in0, in1 = sample2_like_registry()
    circuit = Circuit(
        reg,
        stages=[GratingCoupler(in0, 0.3), ModeMux("p0", "p1"), ModeDemux("p0", "p1")],
        inputs=[in0, in1],
        detectors=[in0, in1],
    )
    assert circuit.validate() == []
    # validation must not mutate the circuit registry
    assert reg.size == 3


def test_validate_detector_on_loss_mode():
    reg, in0, in1 = sample2_like_registry()
    loss = reg.register_loss("stray")
    circuit = Circuit(reg, detectors=[loss])
    diags = circuit.validate()
    assert len(diags) == 1 and str(loss) in diags[0]


def test_validate_unregistered_stage_port():
    reg, in0, in1 = sample2_like_registry()
    ghost = ModeLabel("ghost", TE, 0)
    circuit = Circuit(reg, stages=[BeamSplitter(in0, ghost, 0.5)])
    diags = circuit.validate()
    assert len(diags) == 1 and "ghost" in diags[0]


def test_validate_reports_bad_parameters():
    reg, in0, in1 = sample2_like_registry()
    circuit = Circuit(reg, stages=[BeamSplitter(in0, in1, 1.5)])
    diags = circuit.validate()
    assert len(diags) == 1 and "reflectivity" in diags[0]


def test_random_circuits_stay_unitary(rng):
    reg = ModeRegistry()
    labels = [ModeLabel(f"m{i}", TE, 0) for i in range(5)]
    for lab in labels:
        reg.register(lab)
    for _ in range(20):
        stages = []
        for _ in range(int(rng.integers(1, 6))):
            i, j = rng.choice(5, size=2, replace=False)
            stages.append(BeamSplitter(labels[i], labels[j], float(rng.random())))
        tm = compile_circuit(Circuit(reg, stages=stages))
        assert tm.unitarity_defect() <= 1e-10
