import math

import numpy as np
import pytest

from modesim import (
    GratingCoupler,
    ModeConverter,
    PBS,
    Polarization,
    Propagation,
    SAMPLE_IDS,
    fringe_scan,
    hom_scan,
    preset,
    preset_experiment,
    sample4_patterns,
)
from modesim.presets import fringe_overlap_for_visibility

TE, TM = Polarization.TE, Polarization.TM


@pytest.mark.parametrize("sample_id", SAMPLE_IDS)
def test_presets_validate_clean_and_compile_unitary(sample_id):
    circuit, scan, source, pattern = preset(sample_id)
    assert circuit.validate() == []
    assert circuit.compile().unitarity_defect() <= 1e-10


def test_unknown_sample_id():
    with pytest.raises(ValueError, match="sample"):
        preset("sample9")


def test_sample1_stage_kinds_match_sketch():
    circuit, *_ = preset("sample1")
    kinds = [spec.kind for spec in circuit.stages]
    assert kinds == [
        "grating",
        "grating",
        "pbs",
        "converter",
        "prop",
        "converter",
        "pbs",
        "grating",
        "grating",
    ]
    gratings = [s for s in circuit.stages if isinstance(s, GratingCoupler)]
    assert [g.mode.pol for g in gratings] == [TE, TM, TE, TM]
    prop = next(s for s in circuit.stages if isinstance(s, Propagation))
    assert prop.length_um == 870.0
    # the coincidence splitter sits on the detection side
    assert [s.kind for s in circuit.detection_stages] == ["bs"]


def test_sample2_propagation_length():
    circuit, *_ = preset("sample2")
    prop = next(s for s in circuit.stages if isinstance(s, Propagation))
    assert prop.length_um == 30.0
    assert "bs" in [s.kind for s in circuit.stages]  # on-chip interference


def test_sample3_has_swept_heater_between_the_splitters():
    circuit, scan, source, pattern = preset("sample3")
    kinds = [spec.kind for spec in circuit.stages]
    first_bs = kinds.index("bs")
    assert "phase" in kinds[first_bs:]
    assert kinds.count("bs") == 2
    assert scan.variable == "heater_mW"
    assert scan.p_pi_mw == pytest.approx(33.4)


def test_sample4_detection_is_fiber_splitter_per_output():
    experiment = preset_experiment("sample4")
    circuit = experiment.build_circuit()
    assert [s.kind for s in circuit.detection_stages] == ["bs", "bs"]
    assert len(circuit.detectors) == 4
    te_pattern, tm_pattern = sample4_patterns(experiment)
    pols = {lab.pol for lab in te_pattern.modes}
    assert pols == {TE}
    assert {lab.pol for lab in tm_pattern.modes} == {TM}
    assert any(isinstance(s, ModeConverter) for s in circuit.stages)
    assert any(isinstance(s, PBS) for s in circuit.stages)


def test_grating_efficiencies_default():
    for sample_id in SAMPLE_IDS:
        circuit, *_ = preset(sample_id)
        for stage in circuit.stages:
            if isinstance(stage, GratingCoupler):
                assert stage.efficiency == pytest.approx(0.3)


def test_source_defaults_are_derived_overlaps():
    assert preset("sample1")[2].base_overlap == pytest.approx(math.sqrt(0.923))
    assert preset("sample2")[2].base_overlap == pytest.approx(math.sqrt(0.960))
    assert preset("sample3")[2].base_overlap == pytest.approx(
        fringe_overlap_for_visibility(0.903)
    )
    assert preset("sample4")[2].base_overlap == pytest.approx(math.sqrt(0.968))
    for sample_id in SAMPLE_IDS:
        assert preset(sample_id)[2].coherence_length_um == pytest.approx(448.7)


def test_fringe_overlap_inversion_round_trip():
    for v in (0.5, 0.8, 0.903, 0.99):
        s = fringe_overlap_for_visibility(v)
        assert (1 + s**2) / (3 - s**2) == pytest.approx(v)


def idealized(experiment):
    """Unit grating efficiency and perfect overlap."""
    experiment.source.base_overlap = 1.0
    experiment.source.accidental_rate_hz = 0.0
    for i, stage in enumerate(experiment.stages):
        if isinstance(stage, GratingCoupler):
            experiment.stages[i] = GratingCoupler(stage.mode, 1.0)
    return experiment


@pytest.mark.parametrize("sample_id", ("sample1", "sample2"))
def test_ideal_runs_reach_unit_dip_visibility(sample_id):
    circuit, scan, source, pattern = idealized(preset_experiment(sample_id)).build()
    rates = hom_scan(circuit, pattern, source, scan).expected_rate
    center = rates[np.argmin(np.abs(scan.points))]
    assert center == pytest.approx(0.0, abs=1e-9)
    assert rates[0] > 0


def test_ideal_sample3_periods_are_exactly_halved():
    from modesim import fit_fringe

    circuit, scan, source, pattern = idealized(preset_experiment("sample3")).build()
    quantum, classical = fringe_scan(circuit, source, scan)
    fit_q = fit_fringe(quantum.noiseless())
    fit_c = fit_fringe(classical.noiseless())
    assert fit_q.params["period"] == pytest.approx(scan.p_pi_mw, rel=1e-9)
    assert fit_c.params["period"] == pytest.approx(2 * scan.p_pi_mw, rel=1e-9)
    assert fit_q.params["period"] / fit_c.params["period"] == pytest.approx(0.5, abs=1e-9)


def test_ideal_sample4_peak_doubles_baseline():
    experiment = idealized(preset_experiment("sample4"))
    circuit, scan, source, _ = experiment.build()
    for stream, pattern in enumerate(sample4_patterns(experiment)):
        rates = hom_scan(circuit, pattern, source, scan, stream=stream).expected_rate
        center = rates[np.argmin(np.abs(scan.points))]
        wings = rates[0]
        assert center == pytest.approx(2.0 * wings, rel=1e-12)


def test_preset_seed_threads_through():
    circuit, scan, *_ = preset("sample2", seed=777)
    assert scan.seed == 777
