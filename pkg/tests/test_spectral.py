"""Invariant subspace, growth rates, contracting frames, admissible sampling."""

from __future__ import annotations

from math import tau

import numpy as np
import pytest

from ietpwi.errors import ExhaustedResamples, Reducible
from ietpwi.iet import Lengths, Permutation, build_iet
from ietpwi.rauzy import matrix_to_float, rauzy_class, rauzy_iterate
from ietpwi.spectral import (
    genus,
    h_pi_basis,
    lyapunov_spectrum,
    sample_theta,
    stable_subspace,
    summability_check,
)


def test_genus_values():
    assert genus(Permutation.from_monodromy("2 1")) == 1
    assert genus(Permutation.from_monodromy("3 2 1")) == 1
    assert genus(Permutation.from_monodromy("4 3 2 1")) == 2
    assert genus(Permutation.from_monodromy("5 4 3 2 1")) == 2


def test_genus_rejects_reducible():
    with pytest.raises(Reducible):
        genus(Permutation.from_monodromy("1 2 3"))


def test_genus_constant_on_classes():
    for mono in ("3 2 1", "4 3 2 1", "5 4 3 2 1"):
        graph = rauzy_class(Permutation.from_monodromy(mono))
        values = {genus(p) for p in graph.vertices}
        assert len(values) == 1


def test_h_pi_basis_orthonormal_spans_omega():
    from ietpwi.iet import omega_matrix

    perm = Permutation.from_monodromy("4 3 2 1")
    sub = h_pi_basis(perm)
    assert sub.dim == 4
    np.testing.assert_allclose(sub.basis.T @ sub.basis, np.eye(4), atol=1e-12)
    omega = omega_matrix(perm).astype(float)
    residual = omega - sub.basis @ (sub.basis.T @ omega)
    assert np.max(np.abs(residual)) < 1e-12


def test_lyapunov_two_symbols_symmetric(golden_iet):
    est = lyapunov_spectrum(golden_iet, 4000)
    assert est.exponents[0] > 0
    assert abs(est.exponents[0] + est.exponents[1]) <= 0.05 * est.exponents[0]


def test_lyapunov_positive_top_on_classes():
    rng = np.random.default_rng(12)
    for mono in ("2 1", "3 2 1", "4 3 2 1"):
        d = len(mono.split())
        iet = build_iet(Permutation.from_monodromy(mono),
                        Lengths.from_values(list(rng.dirichlet(np.ones(d)))))
        est = lyapunov_spectrum(iet, 3000)
        assert est.exponents[0] > 0
        assert np.all(np.diff(est.exponents) < 0)


def test_lyapunov_matches_singular_value_slope(golden_iet):
    """Independent oracle: top growth rate from the accumulated product norm."""
    est = lyapunov_spectrum(golden_iet, 6000)

    from ietpwi.spectral import _drive_blocks

    state = {"log": 0.0, "P": np.eye(2), "count": 0}

    def on_block(matrix, perm_end, length):
        P = matrix @ state["P"]
        norm = np.linalg.norm(P, 2)
        state["P"] = P / norm
        state["log"] += np.log(norm)
        state["count"] += 1

    _drive_blocks(golden_iet, 6000, on_block)
    slope = state["log"] / state["count"]
    assert abs(slope - est.exponents[0]) <= 0.05 * est.exponents[0]


def test_stable_direction_two_symbols_is_translation_vector(golden_iet):
    frame = stable_subspace(golden_iet, 60)
    unit = golden_iet.upsilon / np.linalg.norm(golden_iet.upsilon)
    residual = frame.frame[:, 0] - (frame.frame[:, 0] @ unit) * unit
    assert np.linalg.norm(residual) < 1e-6


def test_stable_frame_contracts_and_complement_expands(reference, reference_trace):
    frame = stable_subspace(reference.iet, 150)
    rng = np.random.default_rng(8)
    v = frame.frame @ rng.standard_normal(2)
    v /= np.linalg.norm(v)
    norms = [np.linalg.norm(matrix_to_float(reference_trace.cocycle[n]) @ v)
             for n in (0, 10, 20, 30)]
    assert norms[-1] < norms[0] * 0.5
    # a direction orthogonal to the frame expands
    q, _ = np.linalg.qr(np.hstack([frame.frame,
                                   rng.standard_normal((4, 2))]))
    w = q[:, 2]
    grow = [np.linalg.norm(matrix_to_float(reference_trace.cocycle[n]) @ w)
            for n in (0, 10, 20, 30)]
    assert grow[-1] > 10 * grow[0]


def test_lyapunov_symmetry_on_five_symbols():
    rng = np.random.default_rng(55)
    iet = build_iet(Permutation.from_monodromy("5 4 3 2 1"),
                    Lengths.from_values(list(rng.dirichlet(np.ones(5)))))
    est = lyapunov_spectrum(iet, 100_000)
    assert np.all(est.symmetric_defects() <= 0.05 * est.exponents[0])
    assert np.all(np.diff(est.exponents) < 0)


def test_stable_subspace_insufficient_gap():
    from ietpwi.errors import InsufficientGap

    rng = np.random.default_rng(14)
    iet = build_iet(Permutation.from_monodromy("4 3 2 1"),
                    Lengths.from_values(list(rng.dirichlet(np.ones(4)))))
    with pytest.raises(InsufficientGap):
        stable_subspace(iet, 1)


def test_stable_frame_matches_exact_plane(reference):
    frame = stable_subspace(reference.iet, 150)
    exact = reference.stable_frame()
    overlap = np.linalg.svd(exact.T @ frame.frame, compute_uv=False)
    angles = np.arccos(np.clip(overlap, 0, 1))
    assert np.max(angles) < 5e-3
    assert frame.gap >= 10
    assert frame.drift <= 1e-4


def test_sample_theta_exhausts_for_genus_one(golden_iet):
    frame = stable_subspace(golden_iet, 60)
    trace = rauzy_iterate(golden_iet, 30)
    with pytest.raises(ExhaustedResamples):
        sample_theta(frame.frame, 0.3, seed=1, upsilon=golden_iet.upsilon,
                     trace=trace)


def test_sample_theta_clean_on_reference(reference, reference_trace):
    sample = sample_theta(reference.stable_frame_exact(), 0.2, seed=9,
                          upsilon=reference.iet.upsilon, trace=reference_trace)
    assert 0 < np.linalg.norm([float(x) for x in sample.v]) < 0.2
    assert sample.exclusion_report["strong_stable_hits"] == 0
    assert np.all(sample.theta >= 0) and np.all(sample.theta < tau)


def test_sample_theta_delta_scaling_degenerates(reference, reference_trace):
    from ietpwi.breaking import breaking_sequence, sup_distance

    sups = []
    for delta in (1e-2, 1e-4):
        sample = sample_theta(reference.stable_frame_exact(), delta, seed=3,
                              upsilon=reference.iet.upsilon, trace=reference_trace)
        curves = breaking_sequence(reference_trace, sample.v, 10)
        sups.append(sup_distance(curves[-1], curves[0]))
    assert sups[1] < 1e-3
    assert sups[1] < sups[0] * 0.05


def test_summability_zero_theta(reference_trace):
    report = summability_check(reference_trace, [0.0] * 4, 60)
    assert report.total == 0.0 and report.decays


def test_summability_exact_sample_decays(reference_trace, reference_sample):
    report = summability_check(reference_trace, reference_sample.v, 420)
    assert report.decays
    assert report.horizon >= 15
    assert report.final_term < 1e-6
    assert report.ratio_to_initial < 1e-4


def test_summability_random_theta_fails(reference_trace):
    rng = np.random.default_rng(77)
    failures = 0
    for _ in range(5):
        theta = rng.uniform(0, tau, 4)
        report = summability_check(reference_trace, theta, 80)
        if not report.decays:
            failures += 1
    assert failures >= 4


def test_summability_respects_float_noise_horizon(reference_trace, reference_sample):
    """A float64 lift stalls early; the report must confine claims to the window."""
    float_theta = [float(x) for x in reference_sample.v]
    report = summability_check(reference_trace, float_theta, 420)
    assert report.horizon < 420
    assert report.distances[report.horizon] <= report.distances[0]
    assert report.empirical_constant >= 1.0


def test_known_admissible_rotation_vector_lies_in_stable_plane(reference):
    """Regression: the classical rotation vector for this exchange, published
    to three significant digits, must sit in the computed contracting plane
    up to its own rounding scale."""
    frame = reference.stable_frame()
    theta = np.array([4.85, 0.92, 1.31, 1.28])
    lift = np.where(theta > np.pi, theta - tau, theta)
    residual = lift - frame @ (frame.T @ lift)
    assert np.linalg.norm(residual) / np.linalg.norm(lift) < 0.01
