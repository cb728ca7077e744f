"""Redundancy observables: mutual information curves, discord, pointer-basis gap."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

import qtransfer as qt
from oracles import branching_mi_oracle, qubit_eig_angle_oracle

S2 = qt.SubsystemLayout.of(("S", 2))
KET0 = qt.basis_state(S2, 0)
KET1 = qt.basis_state(S2, 1)
HALF = 1 / math.sqrt(2)


def perfect_record_state(n: int, alpha=HALF, beta=HALF) -> qt.PureState:
    records = []
    for k in range(n):
        frag = qt.SubsystemLayout.of((f"E{k + 1}", 2))
        records.append((qt.basis_state(frag, 0), qt.basis_state(frag, 1)))
    return qt.build_branching_state(alpha, beta, KET0, KET1, records)


def overlapping_record_state(n: int, overlap: float, alpha=HALF, beta=HALF) -> qt.PureState:
    records = []
    for k in range(n):
        frag = qt.SubsystemLayout.of((f"E{k + 1}", 2))
        rec_w = qt.PureState(
            frag, np.array([overlap, math.sqrt(1 - overlap**2)], dtype=complex)
        )
        records.append((qt.basis_state(frag, 0), rec_w))
    return qt.build_branching_state(alpha, beta, KET0, KET1, records)


class TestMutualInformation:
    def test_product_state_carries_nothing(self):
        state = qt.tensor(
            qt.tensor(qt.random_pure(S2, 1), qt.random_pure(qt.SubsystemLayout.of(("E1", 2)), 2)),
            qt.random_pure(qt.SubsystemLayout.of(("E2", 2)), 3),
        )
        for size in (1, 2):
            for frag in itertools.combinations(["E1", "E2"], size):
                assert qt.mutual_information(state, frag) == pytest.approx(0, abs=1e-10)

    def test_perfect_records_single_fragment_one_bit(self):
        state = perfect_record_state(4)
        for label in ("E1", "E2", "E3", "E4"):
            assert qt.mutual_information(state, [label]) == pytest.approx(1.0, abs=1e-9)

    def test_full_environment_two_bits(self):
        state = perfect_record_state(4)
        full = ["E1", "E2", "E3", "E4"]
        assert qt.mutual_information(state, full) == pytest.approx(2.0, abs=1e-9)

    def test_empty_fragment_zero(self):
        assert qt.mutual_information(perfect_record_state(2), []) == 0.0

    def test_matches_closed_form_oracle_on_imperfect_records(self):
        n, r = 4, 0.8
        state = overlapping_record_state(n, r, alpha=math.sqrt(0.6), beta=math.sqrt(0.4))
        rec_pairs = [
            (np.array([1, 0], dtype=complex), np.array([r, math.sqrt(1 - r * r)], dtype=complex))
        ] * n
        for size in (1, 2, 3):
            frag = [f"E{k + 1}" for k in range(size)]
            expected = branching_mi_oracle(
                math.sqrt(0.6), math.sqrt(0.4),
                np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex),
                rec_pairs, tuple(range(size)),
            )
            assert qt.mutual_information(state, frag) == pytest.approx(expected, abs=1e-9)

    def test_monotone_under_inclusion(self):
        state = overlapping_record_state(4, 0.6)
        prev = 0.0
        for size in range(5):
            frag = [f"E{k + 1}" for k in range(size)]
            value = qt.mutual_information(state, frag)
            assert value >= prev - 1e-9
            prev = value

    def test_unknown_fragment_label(self):
        with pytest.raises(qt.UnknownLabelError):
            qt.mutual_information(perfect_record_state(2), ["E9"])


class TestPartialInfoCurve:
    def test_perfect_record_plateau(self):
        state = perfect_record_state(6)
        curve = qt.partial_info_curve(state, samples_per_size=100, seed=0)
        values = [round(p.mean_bits, 9) for p in curve.points]
        assert values[0] == 0.0
        assert values[-1] == pytest.approx(2.0, abs=1e-9)
        for middle in values[1:-1]:
            assert middle == pytest.approx(1.0, abs=1e-9)

    def test_product_state_all_zero(self):
        state = qt.tensor(
            qt.tensor(qt.random_pure(S2, 5), qt.random_pure(qt.SubsystemLayout.of(("E1", 2)), 6)),
            qt.random_pure(qt.SubsystemLayout.of(("E2", 2)), 7),
        )
        curve = qt.partial_info_curve(state, samples_per_size=10, seed=0)
        assert all(abs(p.mean_bits) < 1e-10 for p in curve.points)

    def test_imperfect_records_match_exhaustive_oracle(self):
        n, r = 4, 0.8
        state = overlapping_record_state(n, r)
        curve = qt.partial_info_curve(state, samples_per_size=1000, seed=0)
        rec_pairs = [
            (np.array([1, 0], dtype=complex), np.array([r, math.sqrt(1 - r * r)], dtype=complex))
        ] * n
        for point in curve.points[1:]:
            expected = np.mean([
                branching_mi_oracle(
                    HALF, HALF,
                    np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex),
                    rec_pairs, frag,
                )
                for frag in itertools.combinations(range(n), point.fragment_size)
            ])
            assert point.mean_bits == pytest.approx(float(expected), abs=1e-9)
        means = [p.mean_bits for p in curve.points[:-1]]
        assert all(b > a + 1e-6 for a, b in zip(means, means[1:]))  # strictly increasing

    def test_sampling_cap_and_determinism(self):
        state = overlapping_record_state(6, 0.5)
        a = qt.partial_info_curve(state, samples_per_size=5, seed=3)
        b = qt.partial_info_curve(state, samples_per_size=5, seed=3)
        assert a == b
        for point in a.points:
            assert point.samples <= 5


class TestRedundancy:
    def test_perfect_records_full_redundancy(self):
        state = perfect_record_state(5)
        assert qt.redundancy(state, 0.01) == pytest.approx(5.0)

    def test_uncorrelated_environment_degenerates(self):
        # identical records collapse the state to a product, so the system is
        # pure and redundancy is undefined at the library level (the CLI maps
        # this to 0); for pure globals the full environment always reaches
        # 2 H(S), so a nondegenerate system can never return 0
        frag = qt.SubsystemLayout.of(("E1", 2))
        rec = qt.basis_state(frag, 0)
        state = qt.build_branching_state(HALF, HALF, KET0, KET1, [(rec, rec)])
        with pytest.raises(qt.DegenerateSystemError):
            qt.redundancy(state, 0.1)

    def test_imperfect_records_match_exhaustive_curve(self):
        state = overlapping_record_state(4, 0.8)
        curve = qt.partial_info_curve(state, samples_per_size=1000, seed=0)
        h_s = qt.von_neumann_entropy(qt.partial_trace(state, ["S"]))
        delta = 0.1
        threshold = (1 - delta) * h_s
        m_delta = next(
            p.fragment_size for p in curve.points
            if p.fragment_size >= 1 and p.mean_bits >= threshold
        )
        assert qt.redundancy(state, delta) == pytest.approx(4 / m_delta)

    def test_degenerate_system_rejected(self):
        state = qt.tensor(qt.random_pure(S2, 8), qt.random_pure(qt.SubsystemLayout.of(("E1", 2)), 9))
        with pytest.raises(qt.DegenerateSystemError):
            qt.redundancy(state, 0.1)

    def test_delta_range_checked(self):
        with pytest.raises(qt.InvalidStateError):
            qt.redundancy(perfect_record_state(2), 0.0)


class TestDiscord:
    def test_classical_classical_state_zero(self):
        layout = qt.SubsystemLayout.of(("S", 2), ("A", 2))
        rho = qt.DensityOperator(layout, np.diag([0.4, 0, 0, 0.6]))
        assert abs(qt.quantum_discord(rho, "A")) < 1e-6

    def test_post_measurement_state_zero(self):
        # (|v Av><v Av| + |w Aw><w Aw|) / 2 with all components orthonormal
        layout = qt.SubsystemLayout.of(("S", 2), ("A", 2))
        v_av = np.kron([1, 0], [1, 0])
        w_aw = np.kron([0, 1], [0, 1])
        rho = qt.DensityOperator(
            layout, 0.5 * np.outer(v_av, v_av) + 0.5 * np.outer(w_aw, w_aw)
        )
        assert abs(qt.quantum_discord(rho, "A")) < 1e-6

    def test_bell_state_one_bit(self):
        layout = qt.SubsystemLayout.of(("S", 2), ("A", 2))
        bell = qt.PureState(layout, np.array([1, 0, 0, 1]) / math.sqrt(2))
        assert qt.quantum_discord(bell.to_density(), "A") == pytest.approx(1.0, abs=1e-3)

    def test_nonnegative(self):
        rng = np.random.default_rng(5)
        layout = qt.SubsystemLayout.of(("S", 2), ("A", 2))
        for _ in range(5):
            rho = qt.random_density(layout, int(rng.integers(1, 5)), rng)
            assert qt.quantum_discord(rho, "A") >= -1e-8

    def test_invariant_under_local_unitaries(self):
        layout = qt.SubsystemLayout.of(("S", 2), ("A", 2))
        rho = qt.DensityOperator(layout, np.diag([0.35, 0.15, 0.2, 0.3]))
        base = qt.quantum_discord(rho, "A")
        u_s = qt.random_unitary(S2, 21).matrix
        u_a = qt.random_unitary(qt.SubsystemLayout.of(("A", 2)), 22).matrix
        local = np.kron(u_s, u_a)
        rotated = qt.DensityOperator(layout, local @ rho.matrix @ local.conj().T)
        assert abs(qt.quantum_discord(rotated, "A") - base) < 1e-6

    def test_measured_dimension_restricted(self):
        layout = qt.SubsystemLayout.of(("S", 2), ("A", 3))
        rho = qt.random_density(layout, 2, 1)
        with pytest.raises(qt.UnsupportedDimensionError):
            qt.quantum_discord(rho, "A")


class TestSchmidtPointerGap:
    def test_perfect_records_zero_gap(self):
        state = overlapping_record_state(1, 0.0, alpha=math.sqrt(0.7), beta=math.sqrt(0.3))
        assert qt.schmidt_pointer_gap(state, (KET0, KET1)) < 1e-10

    def test_partial_records_match_two_by_two_oracle(self):
        state = overlapping_record_state(1, 0.5, alpha=math.sqrt(0.7), beta=math.sqrt(0.3))
        rho_s = qt.partial_trace(state, ["S"]).matrix
        expected = min(
            qubit_eig_angle_oracle(rho_s, np.array([1, 0], dtype=complex)),
            qubit_eig_angle_oracle(rho_s, np.array([0, 1], dtype=complex)),
        )
        gap = qt.schmidt_pointer_gap(state, (KET0, KET1))
        assert gap == pytest.approx(expected, abs=1e-10)
        assert gap > 1e-3

    def test_equal_weights_degenerate(self):
        state = overlapping_record_state(1, 0.5)  # alpha = beta with overlapping records
        rho_s = qt.partial_trace(state, ["S"])
        eigs = np.linalg.eigvalsh(rho_s.matrix)
        if abs(eigs[1] - eigs[0]) <= 1e-9:
            with pytest.raises(qt.DegenerateSchmidtError):
                qt.schmidt_pointer_gap(state, (KET0, KET1))
        else:
            assert qt.schmidt_pointer_gap(state, (KET0, KET1)) >= 0

    def test_gap_decreases_with_record_overlap(self):
        gaps = []
        for r in np.linspace(0.9, 0.0, 10):
            state = overlapping_record_state(1, float(r), alpha=math.sqrt(0.7), beta=math.sqrt(0.3))
            gaps.append(qt.schmidt_pointer_gap(state, (KET0, KET1)))
        for a, b in zip(gaps, gaps[1:]):
            assert b <= a + 1e-9
        assert gaps[-1] < 1e-10

    def test_record_pair_returned_when_supplied(self):
        frag = qt.SubsystemLayout.of(("E1", 2))
        rec_v = qt.basis_state(frag, 0)
        rec_w = qt.PureState(frag, np.array([0.5, math.sqrt(0.75)], dtype=complex))
        state = qt.build_branching_state(
            math.sqrt(0.7), math.sqrt(0.3), KET0, KET1, [(rec_v, rec_w)]
        )
        gap, overlap = qt.schmidt_pointer_gap(state, (KET0, KET1), records=(rec_v, rec_w))
        assert overlap == pytest.approx(0.5, abs=1e-12)
        assert gap > 0

    def test_pointer_states_must_be_orthonormal(self):
        state = overlapping_record_state(1, 0.3, alpha=math.sqrt(0.7), beta=math.sqrt(0.3))
        tilted = qt.PureState(S2, np.array([1, 1]) / math.sqrt(2))
        with pytest.raises(qt.InvalidStateError):
            qt.schmidt_pointer_gap(state, (KET0, tilted))
