"""Experiment drivers: escape, d0, openness, non-openness, density."""

import json
import math

import numpy as np
import pytest

from whitney.errors import HypothesisFailed, ProblemFormatError, ZeroPolynomial
from whitney.experiments import (
    d0_convergence_experiment,
    density_experiment,
    escape_experiment,
    openness_experiment,
    trotman_pipeline,
)
from whitney.fixtures import (
    circle_stratification,
    cone_stratification,
    origin_stratification,
    parabola,
    translation_family,
    umbrella_probe,
    umbrella_stratification,
    vertical_crosser,
)


# ---------------------------------------------------------------------------
# escape
# ---------------------------------------------------------------------------


def test_escape_trio_matches_frozen_witnesses(oracles):
    trio = {
        "constant_one": [1],
        "shifted_line": [-1000000, 1],
        "tiny_quadratic": [0, 0, 1e-9],
    }
    for label, coeffs in trio.items():
        res = escape_experiment(coeffs)
        obs = dict(res.observations)
        assert res.conclusion, label
        assert obs["witness"] == oracles["escape"][label]["witness"], label
        assert obs["abs_q_at_witness"] >= obs["exponential_bound"], label


def test_escape_trims_trailing_zeros_and_rejects_zero():
    res = escape_experiment([2, 0, 0])
    assert res.parameters["degree"] == 0
    assert dict(res.observations)["witness"] == 0.0
    with pytest.raises(ZeroPolynomial):
        escape_experiment([0, 0, 0])


def test_escape_result_serializes():
    res = escape_experiment([-1, 0, 1])
    json.dumps(res.to_dict())


# ---------------------------------------------------------------------------
# d0 convergence
# ---------------------------------------------------------------------------


def test_d0_least_indices_match_frozen(oracles):
    res = d0_convergence_experiment()
    obs = dict(res.observations)
    assert res.conclusion
    for label, want in oracles["d0"]["least_i"].items():
        assert obs[f"least_i[{label}]"] == want, label
    # every accepted member still disagrees with the limit far out
    assert obs["nonequal_at_10"]
    assert obs["second_component_at_10"] == {1: 1e-2, 2: 1e-4}


def test_d0_rejects_inner_branch_samples():
    with pytest.raises(ProblemFormatError):
        d0_convergence_experiment(samples=(0.5, 2.0))
    with pytest.raises(ProblemFormatError):
        d0_convergence_experiment(samples=())


# ---------------------------------------------------------------------------
# openness at a regular stratification
# ---------------------------------------------------------------------------


def test_openness_regular_case_keeps_a_positive_radius():
    res = openness_experiment(
        circle_stratification(),
        vertical_crosser(),
        scales=(0.1, 0.01),
        rng=np.random.default_rng(7),
        draws_per_scale=3,
    )
    obs = dict(res.observations)
    assert res.conclusion
    assert obs["regularity"] == "Regular"
    assert obs["base_transverse"]
    assert obs["stability_radius"] > 0.0
    assert len(obs["ladder"]) == 2


def test_openness_gates_on_premises():
    with pytest.raises(HypothesisFailed, match="regularity"):
        openness_experiment(
            cone_stratification(),
            vertical_crosser(),
            rng=np.random.default_rng(0),
            samples=((0.5,),),
        )
    # base map tangent to the circle at the pinned sample
    with pytest.raises(HypothesisFailed, match="base map"):
        openness_experiment(
            circle_stratification(),
            parabola(),
            rng=np.random.default_rng(0),
            samples=((-1.0,), (0.0,), (1.0,)),
        )


def test_openness_adversarial_control_kills_the_radius(cone_trotman):
    # the blended maps sit arbitrarily close to the base map in jet distance
    # yet fail at their pinned points: no scale survives them
    art = cone_trotman["artifacts"]
    d = art.jet_distances
    adversarial = [
        (f"blend-{i}", art.perturbations[i], d[i]) for i in (0, 1)
    ]
    samples = list(art.samples) + [tuple(x) for x in art.x_points[:2]]
    res = openness_experiment(
        cone_stratification(),
        art.base_map,
        scales=(d[0] * 1.5, d[1] * 1.2),
        rng=np.random.default_rng(7),
        samples=samples,
        draws_per_scale=2,
        require_regular=False,
        expect_stable=False,
        adversarial=adversarial,
    )
    obs = dict(res.observations)
    assert res.conclusion
    assert obs["regularity"] == "Fault"
    assert obs["stability_radius"] == 0.0
    assert any(row["adversarial_failures"] for row in obs["ladder"])


# ---------------------------------------------------------------------------
# non-openness pipeline
# ---------------------------------------------------------------------------


def test_trotman_facts_on_the_cone(cone_trotman):
    art, facts = cone_trotman["artifacts"], cone_trotman["facts"]
    assert all(facts.values()), facts
    assert art.h.dim == 2
    assert len(art.perturbations) == 8
    norms = [float(np.linalg.norm(x)) for x in art.x_points]
    assert norms == sorted(norms, reverse=True)
    assert max(art.sigma_mins) < 1e-8
    assert art.jet_distances[-1] < art.jet_distances[0]


def test_trotman_rejects_regular_pairs_and_thin_domains():
    with pytest.raises(HypothesisFailed, match="not a fault witness"):
        trotman_pipeline(
            umbrella_stratification(),
            2,
            rng=np.random.default_rng(0),
            pair=("canopy", "handle"),
            base_point=(0.0, 0.0, 1.0),
            probes=[umbrella_probe()],
            witness_label="diagonal",
            i_count=2,
        )
    with pytest.raises(HypothesisFailed, match="codimension"):
        trotman_pipeline(cone_stratification(), 1, rng=np.random.default_rng(0))


# ---------------------------------------------------------------------------
# density scans
# ---------------------------------------------------------------------------


def test_density_translation_prefix_of_frozen_counts(oracles):
    # per-level counts are independent, so two levels reuse the frozen values
    res = density_experiment(
        translation_family(),
        origin_stratification(),
        levels=[11, 21],
        s_lo=(-1.0, -1.0),
        s_hi=(1.0, 1.0),
        x_lo=(-1.1,),
        x_hi=(1.1,),
    )
    obs = dict(res.observations)
    assert obs["failing_counts"] == oracles["density_translation"]["failing_counts"][:2]
    assert res.conclusion
    assert obs["ratios"][0] >= 1.5
    assert obs["submersion_sigma"] > 0.5


def test_density_window_validation():
    with pytest.raises(ProblemFormatError, match="levels"):
        density_experiment(
            translation_family(), origin_stratification(),
            levels=[11], s_lo=(-1, -1), s_hi=(1, 1), x_lo=(-1.1,), x_hi=(1.1,),
        )
    with pytest.raises(ProblemFormatError, match="split"):
        density_experiment(
            translation_family(), origin_stratification(),
            levels=[5, 9], s_lo=(-1, -1, -1), s_hi=(1, 1, 1), x_lo=(), x_hi=(),
        )
