"""Acceptance gate: nine checks, one verdict line each.

Every check re-derives its expectation through a route independent of the
code under test: central differences against symbolic partials,
hand-expanded monomial tables, values frozen in fixtures/expected/, fresh
sample schedules, or byte comparison against the shipped golden reports.
The verdict lines are echoed after the pytest summary by conftest.
"""

import json
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np

from conftest import record_criterion, run_all_goldens
from whitney.cli import build_problem
from whitney.expr import (
    DefMap,
    MultiIndex,
    add,
    compose,
    const,
    coord,
    expr_from_dict,
    mul,
    power,
    recip,
)
from whitney.experiments import (
    d0_convergence_experiment,
    density_experiment,
    escape_experiment,
)
from whitney.fixtures import (
    cone_bent_probe,
    cone_ray_probe,
    cone_stratification,
    expression_fixtures,
    flat_probe,
    flat_stratification,
    origin_stratification,
    translation_family,
    umbrella_stratification,
)
from whitney.jets import JetSpaceSpec, compute_jet, cylinder_over_codomain, jet_pushforward
from whitney.linalg import LinearSubspace, gap_distance
from whitney.regularity import whitney_a_stratification
from whitney.transversality import (
    is_transverse_on,
    jet_transverse,
    perturb_to_transverse,
    transverse_with_derivative,
)

# ---------------------------------------------------------------------------
# 1: derivative engine
# ---------------------------------------------------------------------------


def _parent(a: MultiIndex) -> tuple[MultiIndex, int]:
    """Drop one from the last positive slot: the index this one derives from."""
    i = max(j for j, e in enumerate(a.entries) if e > 0)
    down = tuple(e - (1 if j == i else 0) for j, e in enumerate(a.entries))
    return MultiIndex(down), i


def _table_diff(coeffs: dict, i: int) -> dict:
    out: dict[tuple, Fraction] = {}
    for expo, c in coeffs.items():
        if expo[i]:
            down = tuple(e - (1 if j == i else 0) for j, e in enumerate(expo))
            out[down] = out.get(down, Fraction(0)) + c * expo[i]
    return out


def _table_eval(coeffs: dict, x) -> Fraction:
    total = Fraction(0)
    for expo, c in coeffs.items():
        term = c
        for xi, e in zip(x, expo):
            term *= xi**e
        total += term
    return total


_RATIONAL_POOL = (
    Fraction(3, 7),
    Fraction(-5, 8),
    Fraction(1, 3),
    Fraction(-2, 5),
    Fraction(7, 9),
)


def test_criterion_1_derivative_engine():
    t0 = time.perf_counter()

    # symbolic partials vs Richardson-extrapolated central differences,
    # applied step by step: order-d partials are differenced from the
    # symbolic order-(d-1) tree, so each diff step is checked on its own
    rng = np.random.default_rng(202)
    worst = 0.0
    fixture_count = 0
    for fx in expression_fixtures():
        fixture_count += 1
        m = fx.region.dim
        alphas = MultiIndex.all_up_to(m, 3)
        derivs = {MultiIndex((0,) * m): fx.expr}
        for a in alphas:
            parent, i = _parent(a)
            derivs[a] = derivs[parent].diff(i)
        for x in fx.region.sample(rng, 100):
            for a in alphas:
                parent, i = _parent(a)
                g = derivs[parent]
                h = 5e-4 * max(1.0, abs(x[i]))

                def shifted(delta):
                    p = list(x)
                    p[i] += delta
                    return p

                d1 = (g.evaluate(shifted(h)) - g.evaluate(shifted(-h))) / (2 * h)
                d2 = (g.evaluate(shifted(h / 2)) - g.evaluate(shifted(-h / 2))) / h
                fd = (4 * d2 - d1) / 3
                sym = derivs[a].evaluate(x)
                worst = max(worst, abs(fd - sym) / max(1.0, abs(sym), abs(fd)))
    assert fixture_count >= 10
    assert worst <= 1e-5, f"worst FD relative error {worst:.3e}"

    # rational mode vs the hand-expanded monomial tables, exact equality
    poly_count = 0
    for fx in expression_fixtures():
        if fx.coeffs is None:
            continue
        poly_count += 1
        m = fx.region.dim
        points = [
            tuple(_RATIONAL_POOL[(p + j) % len(_RATIONAL_POOL)] for j in range(m))
            for p in range(5)
        ]
        for a in MultiIndex.all_up_to(m, 3, include_zero=True):
            table = fx.coeffs
            for i, e in enumerate(a.entries):
                for _ in range(e):
                    table = _table_diff(table, i)
            for x in points:
                got = fx.expr.partial(a, x)
                assert isinstance(got, (int, Fraction)), (fx.name, a.entries)
                assert got == _table_eval(table, x), (fx.name, a.entries, x)
    assert poly_count >= 5

    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, f"{elapsed:.1f}s"
    record_criterion(1, "derivative engine", True)


# ---------------------------------------------------------------------------
# 2: jet chain rule
# ---------------------------------------------------------------------------


def _chain_rule_pairs():
    """Inner/outer map pairs with rational data, each taken at k = 1, 2, 3."""
    x, y, z = coord(0), coord(1), coord(2)
    half = const(Fraction(1, 2))
    third = const(Fraction(1, 3))

    catalog = [
        (
            DefMap(1, 1, (add(power(x, 3), mul(const(-1), half, x)),)),
            DefMap(1, 1, (add(power(x, 2), const(1)),)),
            (Fraction(1, 2),),
        ),
        (
            DefMap(1, 2, (power(x, 2), add(x, const(-1)))),
            DefMap(2, 1, (add(mul(x, y), mul(const(-1), power(y, 3))),)),
            (Fraction(-2, 3),),
        ),
        (
            DefMap(2, 1, (add(power(x, 2), mul(const(3), y)),)),
            DefMap(1, 2, (mul(third, power(x, 2)), add(x, const(2)))),
            (Fraction(1, 3), Fraction(-2, 5)),
        ),
        (
            DefMap(2, 2, (add(x, power(y, 2)), mul(x, y))),
            DefMap(2, 2, (mul(x, y), add(x, mul(const(-1), y)))),
            (Fraction(1, 2), Fraction(1, 4)),
        ),
        (
            DefMap(2, 3, (mul(x, y), add(power(x, 2), y), const(5))),
            DefMap(3, 1, (add(x, mul(y, z)),)),
            (Fraction(-1, 2), Fraction(3, 7)),
        ),
        (
            DefMap(3, 2, (add(x, y, z), mul(x, y, z))),
            DefMap(2, 2, (power(x, 2), mul(x, y))),
            (Fraction(1, 2), Fraction(1, 3), Fraction(-1, 4)),
        ),
        (
            DefMap(1, 1, (recip(add(power(x, 2), const(1))),)),
            DefMap(1, 1, (add(power(x, 3), mul(const(-2), x)),)),
            (Fraction(2, 5),),
        ),
        (
            DefMap(2, 2, (recip(add(power(x, 2), power(y, 2), const(2))), add(x, y))),
            DefMap(2, 1, (mul(x, y),)),
            (Fraction(1, 3), Fraction(-1, 2)),
        ),
    ]
    return [(f, pi, k, pt) for f, pi, pt in catalog for k in (1, 2, 3)]


def test_criterion_2_jet_chain_rule():
    t0 = time.perf_counter()
    pairs = _chain_rule_pairs()
    assert len(pairs) >= 20
    for f, pi, k, xq in pairs:
        direct = compute_jet(compose(pi, f), xq, k)
        pushed = jet_pushforward(compute_jet(f, xq, k), pi)
        assert direct == pushed, (k, xq)
        for comp in direct.coeffs:
            assert all(isinstance(c, (int, Fraction)) for c in comp), (k, xq)
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0, f"{elapsed:.1f}s"
    record_criterion(2, "jet chain rule", True)


# ---------------------------------------------------------------------------
# 3: perturbation contract
# ---------------------------------------------------------------------------


def test_criterion_3_perturbation_contract(fixtures_dir):
    t0 = time.perf_counter()
    for name in ("line-on-axis", "cubic-axis", "parabola-circle"):
        raw = json.loads((fixtures_dir / f"{name}.json").read_text())
        prob = build_problem(raw)
        job = raw["perturb"]
        f = prob.maps[job["map"]]
        base = prob.stratifications[job["stratification"]]
        k, l = int(job["k"]), int(job["l"])
        eps = expr_from_dict(job["epsilon"])
        lifted = cylinder_over_codomain(
            base, JetSpaceSpec(f.domain_dim, f.codomain_dim, k)
        )
        g, _, rep = perturb_to_transverse(
            f,
            lifted,
            k,
            l,
            eps,
            samples=prob.samples,
            rng=np.random.default_rng(prob.seed),
            max_draws=int(job.get("max_draws", 100)),
        )
        assert rep.accepted_draw is not None and rep.accepted_draw < 100, name
        assert rep.jet_report is not None and rep.jet_report.transverse, name

        # (i) jet transversality at every certified sample, re-checked
        pts = [v.point for v in rep.jet_report.verdicts + rep.jet_report.intersections]
        assert pts and jet_transverse(g, lifted, samples=pts).transverse, name

        # (ii) every perturbation partial stays strictly under eps on a
        # fresh grid, finer than and offset from the run's internal one
        for x in f.region.grid(23):
            bound = eps.evaluate(x)
            for a in MultiIndex.all_up_to(f.domain_dim, l, include_zero=True):
                for gi, fi in zip(g.partial(a, x), f.partial(a, x)):
                    assert abs(gi - fi) < bound, (name, a.entries, x)
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0, f"{elapsed:.1f}s"
    record_criterion(3, "perturbation contract", True)


# ---------------------------------------------------------------------------
# 4: prescribed-derivative construction
# ---------------------------------------------------------------------------


def test_criterion_4_prescribed_derivative(fixtures_dir):
    t0 = time.perf_counter()
    raw = json.loads((fixtures_dir / "cone.json").read_text())
    prob = build_problem(raw)
    job = raw["prescribed"]
    strat = prob.stratifications[job.get("stratification", "target")]
    h = LinearSubspace.from_spanning(
        np.asarray(job["h_basis"], dtype=float), strat.ambient_dim
    )
    samples = [tuple(float(v) for v in p) for p in job["samples"]]
    f, rep = transverse_with_derivative(
        int(job["m_dim"]),
        strat,
        tuple(float(v) for v in job["p"]),
        h,
        samples,
        rng=np.random.default_rng(prob.seed),
    )

    # base value hits p with no float fuzz
    x0 = (0,) * int(job["m_dim"])
    assert all(v == p for v, p in zip(f.evaluate(x0), job["p"]))
    assert rep.base_point_exact

    # derivative image re-derived from the Jacobian, not from the report
    jac = np.asarray(
        [[float(v) for v in row] for row in f.jacobian(x0)], dtype=float
    )
    image = LinearSubspace.from_spanning(jac.T, strat.ambient_dim)
    assert gap_distance(image, h) <= 1e-8
    assert rep.derivative_gap <= 1e-8

    assert is_transverse_on(f, strat, samples=samples).transverse
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, f"{elapsed:.1f}s"
    record_criterion(4, "prescribed-derivative construction", True)


# ---------------------------------------------------------------------------
# 5: regularity detector
# ---------------------------------------------------------------------------


def test_criterion_5_regularity_detector(oracles):
    t0 = time.perf_counter()
    flat = whitney_a_stratification(
        flat_stratification(),
        rng=np.random.default_rng(11),
        probes={("plane", "origin"): [flat_probe()]},
        pinned={("plane", "origin"): [(0.0, 0.0, 0.0)]},
    )
    assert flat.overall == oracles["flat"]["overall"] == "Regular"

    umbrella = whitney_a_stratification(
        umbrella_stratification(), rng=np.random.default_rng(12)
    )
    assert umbrella.overall == oracles["umbrella"]["overall"] == "Regular"

    # fresh sample schedule: curve parameters 2^-4 .. 2^-23 instead of the
    # shipped runs' 2^-3 .. 2^-22
    pair = ("surface", "axis")
    cone = whitney_a_stratification(
        cone_stratification(),
        rng=np.random.default_rng(13),
        probes={
            pair: [
                replace(cone_ray_probe(), j_start=4, j_end=23),
                replace(cone_bent_probe(), j_start=4, j_end=23),
            ]
        },
        pinned={pair: [(0.0, 0.0, 0.0)]},
    )
    assert cone.overall == oracles["cone"]["pair_status"] == "Fault"
    entry = [e for e in cone.pairs if e.pair == pair][0]
    at_origin = [
        v
        for v in entry.verdicts
        if v.point == (0.0, 0.0, 0.0) and v.status == "Fault"
    ]
    assert at_origin, "no fault verdict at the pinned base point"
    verdict = at_origin[0]
    assert verdict.witness is not None
    assert verdict.witness.deviation >= 1e-3

    by_label = {w.label: w for w in verdict.probes}
    ray_want = oracles["cone"]["ray_deviation"]["value"]
    bent_want = oracles["cone"]["bent_deviation"]["value"]
    assert abs(by_label["ray"].deviation - ray_want) <= 1e-9
    assert abs(by_label["bent"].deviation - bent_want) <= 1e-5

    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, f"{elapsed:.1f}s"
    record_criterion(5, "regularity detector", True)


# ---------------------------------------------------------------------------
# 6: blend ladder at a fault
# ---------------------------------------------------------------------------


def test_criterion_6_blend_ladder(cone_trotman):
    art = cone_trotman["artifacts"]
    facts = cone_trotman["facts"]
    assert len(art.perturbations) == 8

    # every blend is rank-deficient at the base point
    assert all(s < 1e-8 for s in art.sigma_mins)
    assert facts["fact_b"]

    # while the max-sample jet distance to the base map shrinks strictly
    d = art.jet_distances
    assert all(d[i + 1] < d[i] * 1.01 for i in range(len(d) - 1))
    assert d[-1] < d[0]
    assert facts["fact_c"]

    # and each blend still realizes its prescribed derivative plane
    assert all(g <= 1e-8 for g in art.image_gaps)
    assert facts["fact_a"] and facts["base_transverse"]

    assert cone_trotman["elapsed"] < 60.0, f"{cone_trotman['elapsed']:.1f}s"
    record_criterion(6, "blend ladder at a fault", True)


# ---------------------------------------------------------------------------
# 7: parameter density
# ---------------------------------------------------------------------------


def test_criterion_7_parameter_density(oracles):
    t0 = time.perf_counter()
    res = density_experiment(
        translation_family(),
        origin_stratification(),
        levels=(11, 21, 41),
        s_lo=(-1.0, -1.0),
        s_hi=(1.0, 1.0),
        x_lo=(-1.1,),
        x_hi=(1.1,),
    )
    obs = dict(res.observations)
    assert res.conclusion
    assert obs["failing_counts"] == oracles["density_translation"]["failing_counts"]
    assert len(obs["ratios"]) == 2 and all(r >= 1.5 for r in obs["ratios"])
    fr = obs["fractions"]
    assert fr[0] > fr[1] > fr[2]
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0, f"{elapsed:.1f}s"
    record_criterion(7, "parameter density", True)


# ---------------------------------------------------------------------------
# 8: escape and shrinking-radius counterexamples
# ---------------------------------------------------------------------------


def test_criterion_8_counterexamples(oracles):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    for trial in range(1000):
        deg = int(rng.integers(0, 21))
        coeffs = rng.uniform(-1e6, 1e6, deg + 1)
        res = escape_experiment(list(coeffs))
        obs = dict(res.observations)
        assert res.conclusion, trial
        with np.errstate(over="ignore"):
            q = abs(float(np.polynomial.polynomial.polyval(obs["witness"], coeffs)))
            assert q >= np.exp(-obs["witness"]), trial

    d0 = d0_convergence_experiment()
    obs = dict(d0.observations)
    assert d0.conclusion
    for label, want in oracles["d0"]["least_i"].items():
        assert obs[f"least_i[{label}]"] == want, label
    assert obs["nonequal_at_10"]
    elapsed = time.perf_counter() - t0
    assert elapsed < 20.0, f"{elapsed:.1f}s"
    record_criterion(8, "counterexamples", True)


# ---------------------------------------------------------------------------
# 9: golden determinism
# ---------------------------------------------------------------------------


def test_criterion_9_golden_determinism(fixtures_dir, golden_pass_a, tmp_path):
    shipped = {
        p.name: p.read_bytes() for p in sorted((fixtures_dir / "golden").glob("*.json"))
    }
    pass_a = golden_pass_a["reports"]
    assert set(shipped) == set(pass_a) and len(shipped) == 21
    for name in sorted(shipped):
        assert pass_a[name] == shipped[name], name

    pass_b = run_all_goldens(fixtures_dir, tmp_path)
    for name in sorted(shipped):
        assert pass_b[name] == pass_a[name], name
    record_criterion(9, "golden determinism", True)
