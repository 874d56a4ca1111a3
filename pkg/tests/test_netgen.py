import numpy as np
import pytest
from pydantic import ValidationError

from censornet.errors import InvalidConfigError, InvalidInputError
from censornet.netgen import (
    GenParams,
    GregVector,
    Sociomatrix,
    TraitVector,
    draw_latent,
    edge_probability,
    generate_network,
    latent_edge_mean,
    latent_edge_means,
    read_edge_list,
    sample_gregariousness,
    sample_traits,
    select_arcs,
    threshold_network,
    write_edge_list,
)

LINE_GRAPH = np.array(
    [
        [0, 1, 0],
        [0, 0, 1],
        [0, 0, 0],
    ]
)


def test_trait_vector():
    y = TraitVector(values=[1.0, 2.0, 4.0])
    assert y.n == 3
    assert y.mean() == pytest.approx(7 / 3)
    with pytest.raises(ValueError, match="read-only"):
        y.values[0] = 5.0


@pytest.mark.parametrize(
    "values, match",
    [
        ([1.0], "at least two"),
        ([[1.0, 2.0], [3.0, 4.0]], "at least two"),
        ([1.0, np.nan], "finite"),
        ([1.0, np.inf], "finite"),
    ],
)
def test_trait_vector_invalid(values, match):
    with pytest.raises(ValidationError, match=match):
        TraitVector(values=values)


def test_sociomatrix():
    w = Sociomatrix(entries=LINE_GRAPH)
    assert w.n == 3
    assert w.entries.dtype == np.int8
    np.testing.assert_array_equal(w.outdegree, [1, 1, 0])
    assert w.arc_count == 2
    assert w.mean_outdegree == pytest.approx(2 / 3)
    np.testing.assert_array_equal(w.alters(0), [1])
    np.testing.assert_array_equal(w.edges(), [[0, 1], [1, 2]])


@pytest.mark.parametrize(
    "entries, match",
    [
        (np.zeros((2, 3)), "square"),
        (np.array([[0, 2], [1, 0]]), "0 or 1"),
        (np.array([[1, 0], [1, 0]]), "self-edges"),
    ],
)
def test_sociomatrix_invalid(entries, match):
    with pytest.raises(ValidationError, match=match):
        Sociomatrix(entries=entries)


def test_gen_params():
    p = GenParams(n=100, r_in=0.6, r_out=0.0)
    assert p.arc_count == 1000
    assert p.latent_sd == pytest.approx(0.8)


@pytest.mark.parametrize(
    "kwargs, match",
    [
        ({"n": 100, "r_in": 0.9, "r_out": 0.9}, "must be below 1"),
        ({"n": 100, "r_in": 0.6, "r_out": 0.8}, "must be below 1"),
        ({"n": 5, "target_mean_outdegree": 5}, "exceeds"),
        ({"n": 100, "sigma_h": -1.0}, "greater than or equal"),
        ({"n": 0}, "greater than 0"),
    ],
)
def test_gen_params_invalid(kwargs, match):
    with pytest.raises(ValidationError, match=match):
        GenParams(**kwargs)


def test_sample_traits():
    y = sample_traits(1000, np.random.default_rng(0))
    assert y.n == 1000
    assert abs(y.mean()) < 0.15
    with pytest.raises(InvalidConfigError, match="two nodes"):
        sample_traits(1, np.random.default_rng(0))


def test_sample_gregariousness():
    zero = sample_gregariousness(10, 0.0, np.random.default_rng(0))
    np.testing.assert_array_equal(zero.values, np.zeros(10))
    spread = sample_gregariousness(100_000, 2.0, np.random.default_rng(0))
    assert np.std(spread.values) == pytest.approx(2.0, abs=0.05)
    with pytest.raises(InvalidConfigError, match="non-negative"):
        sample_gregariousness(10, -1.0, np.random.default_rng(0))


def test_generate_network_uniform_without_structure():
    # every ordered pair is equally likely: 6 arcs over 30 pairs
    p = GenParams(n=6, target_mean_outdegree=1)
    rng = np.random.default_rng(21)
    y0 = sample_traits(p.n, rng)
    alpha = sample_gregariousness(p.n, 0.0, rng)
    draws = 10_000
    counts = np.zeros((p.n, p.n))
    for _ in range(draws):
        w, _ = generate_network(y0, alpha, p, rng)
        counts += w.entries
    off = ~np.eye(p.n, dtype=bool)
    assert counts[off].sum() == 6 * draws
    assert (counts[~off] == 0).all()
    se = np.sqrt(0.2 * 0.8 / draws)
    assert np.abs(counts[off] / draws - 0.2).max() <= 4 * se


def test_generate_network_ignores_traits_without_structure():
    p = GenParams(n=20, sigma_h=0.0, target_mean_outdegree=3)
    y0 = sample_traits(p.n, np.random.default_rng(0))
    swapped = y0.values.copy()
    swapped[[2, 7]] = swapped[[7, 2]]
    alpha = sample_gregariousness(p.n, 0.0, np.random.default_rng(0))
    w, omega = generate_network(y0, alpha, p, np.random.default_rng(5))
    v, omega_v = generate_network(
        TraitVector(values=swapped), alpha, p, np.random.default_rng(5)
    )
    assert v.arc_count == w.arc_count == 60
    np.testing.assert_array_equal(v.entries, w.entries)
    assert omega_v == omega

def test_latent_edge_mean():
    p = GenParams(n=2, h=1.0, r_in=0.5, r_out=0.25, target_mean_outdegree=1)
    # 0.3 + 0.5 * 2 + 0.25 * 0 - 1.0 * |0 - 2|
    assert latent_edge_mean(0.3, 0.0, 2.0, p) == pytest.approx(-0.7)


def test_latent_edge_means_matches_pairwise():
    p = GenParams(n=4, h=0.5, r_in=0.3, r_out=-0.2, target_mean_outdegree=2)
    rng = np.random.default_rng(3)
    y0 = sample_traits(4, rng)
    alpha = sample_gregariousness(4, 1.0, rng)
    means = latent_edge_means(y0, alpha, p)
    assert np.isnan(np.diagonal(means)).all()
    for i in range(4):
        for j in range(4):
            if i != j:
                assert means[i, j] == pytest.approx(
                    latent_edge_mean(alpha.values[i], y0.values[i], y0.values[j], p)
                )


def test_latent_edge_means_length_mismatch():
    p = GenParams(n=4, target_mean_outdegree=2)
    with pytest.raises(InvalidInputError, match="Expected 4 nodes"):
        latent_edge_means(
            TraitVector(values=[0.0, 1.0, 2.0]), GregVector(values=np.zeros(4)), p
        )


def test_select_arcs():
    z = np.array(
        [
            [np.nan, 0.9, 0.1],
            [0.5, np.nan, 0.8],
            [0.2, 0.7, np.nan],
        ]
    )
    w, omega = select_arcs(z, 3)
    np.testing.assert_array_equal(
        w.entries,
        [
            [0, 1, 0],
            [0, 0, 1],
            [0, 1, 0],
        ],
    )
    assert omega == 0.7


def test_select_arcs_ties_lexicographic():
    z = np.zeros((3, 3))
    w, omega = select_arcs(z, 3)
    np.testing.assert_array_equal(w.edges(), [[0, 1], [0, 2], [1, 0]])
    assert omega == 0.0


def test_select_arcs_complete_graph():
    z = np.random.default_rng(0).standard_normal((5, 5))
    w, _ = select_arcs(z, 20)
    np.testing.assert_array_equal(w.entries, 1 - np.eye(5, dtype=np.int8))


@pytest.mark.parametrize("arcs", [0, 7])
def test_select_arcs_invalid(arcs):
    with pytest.raises(InvalidConfigError):
        select_arcs(np.zeros((3, 3)), arcs)


def test_threshold_network_matches_selection():
    rng = np.random.default_rng(11)
    p = GenParams(n=30, target_mean_outdegree=4)
    z = draw_latent(sample_traits(30, rng), sample_gregariousness(30, 1.0, rng), p, rng)
    w, omega = select_arcs(z, p.arc_count)
    np.testing.assert_array_equal(threshold_network(z, omega).entries, w.entries)


@pytest.mark.parametrize(
    "n, target, sigma_h",
    [(100, 10, 0.0), (200, 10, 2.0), (50, 7.3, 1.0), (11, 10, 0.5)],
)
def test_generate_network_exact_arc_count(n, target, sigma_h):
    rng = np.random.default_rng(n)
    p = GenParams(
        n=n, sigma_h=sigma_h, h=0.5, r_in=0.2, r_out=0.3, target_mean_outdegree=target
    )
    y0 = sample_traits(n, rng)
    alpha = sample_gregariousness(n, sigma_h, rng)
    w, omega = generate_network(y0, alpha, p, rng)
    assert w.arc_count == round(n * target)
    assert not np.diagonal(w.entries).any()
    assert np.isfinite(omega)


def test_generate_network_deterministic():
    def build(seed):
        rng = np.random.default_rng(seed)
        p = GenParams(n=40, sigma_h=1.0, target_mean_outdegree=5)
        y0 = sample_traits(40, rng)
        return generate_network(y0, sample_gregariousness(40, 1.0, rng), p, rng)

    (w1, omega1), (w2, omega2) = build(5), build(5)
    np.testing.assert_array_equal(w1.entries, w2.entries)
    assert omega1 == omega2


def test_gregariousness_raises_outdegree_spread():
    def outdegree_sd(sigma_h):
        rng = np.random.default_rng(8)
        p = GenParams(n=200, sigma_h=sigma_h, target_mean_outdegree=10)
        y0 = sample_traits(200, rng)
        w, _ = generate_network(y0, sample_gregariousness(200, sigma_h, rng), p, rng)
        return w.outdegree.std()

    assert outdegree_sd(2.0) > 2 * outdegree_sd(0.0)


def test_edge_probability_normal_quantile():
    p = GenParams(n=2, target_mean_outdegree=1)
    assert edge_probability(0.0, 0.0, 0.0, p, 1.6449) == pytest.approx(0.05, abs=1e-4)


def test_edge_probability_monte_carlo():
    p = GenParams(n=2, h=0.4, r_in=0.3, r_out=-0.4, target_mean_outdegree=1)
    alpha_i, y0_i, y0_j, omega = 0.2, 0.5, -1.0, 0.1
    draws = 40_000
    rng = np.random.default_rng(21)
    z = latent_edge_mean(alpha_i, y0_i, y0_j, p) + p.latent_sd * rng.standard_normal(
        draws
    )
    prob = edge_probability(alpha_i, y0_i, y0_j, p, omega)
    se = np.sqrt(prob * (1 - prob) / draws)
    assert abs(np.mean(z >= omega) - prob) <= 4 * se


def test_edge_list_round_trip(tmp_path):
    w = Sociomatrix(entries=LINE_GRAPH)
    path = tmp_path / "line.edges"
    write_edge_list(w, 0.123456789012345678, path)
    assert path.read_text().splitlines() == [
        "# n=3 omega=0.12345678901234568",
        "0,1",
        "1,2",
    ]
    read, omega, censored = read_edge_list(path)
    np.testing.assert_array_equal(read.entries, w.entries)
    assert omega == 0.12345678901234568
    assert censored is None


def test_edge_list_censored_empty(tmp_path):
    w = Sociomatrix(entries=np.zeros((4, 4), dtype=np.int8))
    path = tmp_path / "empty.edges"
    write_edge_list(w, 1.5, path, censored="hard(k=1)")
    read, omega, censored = read_edge_list(path)
    assert read.n == 4
    assert read.arc_count == 0
    assert omega == 1.5
    assert censored == "hard(k=1)"


def test_read_edge_list_missing_header(tmp_path):
    path = tmp_path / "bare.edges"
    path.write_text("0,1\n")
    with pytest.raises(InvalidInputError, match="header"):
        read_edge_list(path)
